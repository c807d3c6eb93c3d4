//! Two-lane road layouts, inter-vehicle distances and distance-based
//! transmission authorization.
//!
//! Every scenario has a receiver: the vehicle whose neighbourhood is being
//! served (by default the one closest to the middle of the road). A vehicle
//! is authorized to contend when its link distance is below the threshold.
//! For ordinary vehicles the link distance is the distance to the receiver;
//! for the receiver itself it is the distance to its nearest neighbour, so it
//! joins the contention only when someone is close enough to exchange with.
//! Risk rises linearly as the link distance shrinks below the threshold and
//! higher risk buys a smaller contention window.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default lateral distance between the two lane centres, in meters.
pub const DEFAULT_LANE_SEPARATION: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Lane {
    /// Lane 0, traffic moving towards increasing `x`.
    Forward,
    /// Lane 1, traffic moving towards decreasing `x`.
    Reverse,
}

impl Lane {
    pub fn index(self) -> u8 {
        match self {
            Lane::Forward => 0,
            Lane::Reverse => 1,
        }
    }

    pub fn from_index(index: u8) -> Option<Lane> {
        match index {
            0 => Some(Lane::Forward),
            1 => Some(Lane::Reverse),
            _ => None,
        }
    }

    pub fn direction(self) -> i8 {
        match self {
            Lane::Forward => 1,
            Lane::Reverse => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: u32,
    pub lane: Lane,
    /// Position along the road, meters.
    pub x: f64,
    /// Lateral position of the lane centre, meters.
    pub y: f64,
}

impl Vehicle {
    pub fn direction(&self) -> i8 {
        self.lane.direction()
    }
}

/// Euclidean distance between two vehicles.
pub fn pairwise_distance(a: &Vehicle, b: &Vehicle) -> f64 {
    (b.x - a.x).hypot(b.y - a.y)
}

/// A static placement of vehicles with its distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    vehicles: Vec<Vehicle>,
    road_length: f64,
    lane_separation: f64,
    seed: Option<u64>,
    receiver_id: u32,
    distances: Vec<f64>,
}

/// Draws a seeded layout: lane 0 gets `ceil(n / 2)` vehicles, lane 1 the
/// rest, and every `x` is uniform on `[0, road_length]`.
pub fn generate_scenario(
    seed: u64,
    n_vehicles: usize,
    road_length: f64,
    lane_separation: f64,
) -> Result<Scenario> {
    if n_vehicles < 2 {
        return Err(Error::domain("n_vehicles", "need at least two vehicles"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forward = n_vehicles.div_ceil(2);
    let vehicles = (0..n_vehicles)
        .map(|i| {
            let lane = if i < forward {
                Lane::Forward
            } else {
                Lane::Reverse
            };
            Vehicle {
                id: i as u32,
                lane,
                x: rng.gen_range(0.0..=road_length),
                y: f64::from(lane.index()) * lane_separation,
            }
        })
        .collect();
    let mut scenario = Scenario::from_vehicles(vehicles, road_length, lane_separation)?;
    scenario.seed = Some(seed);
    Ok(scenario)
}

impl Scenario {
    /// Builds a scenario from explicit positions. The receiver defaults to
    /// the vehicle closest to the middle of the road.
    pub fn from_vehicles(
        vehicles: Vec<Vehicle>,
        road_length: f64,
        lane_separation: f64,
    ) -> Result<Scenario> {
        if !(road_length > 0.0 && road_length.is_finite()) {
            return Err(Error::domain(
                "road_length",
                format!("{road_length} is not positive"),
            ));
        }
        if !(lane_separation >= 0.0 && lane_separation.is_finite()) {
            return Err(Error::domain("lane_separation", "must be non-negative"));
        }
        if vehicles.is_empty() {
            return Err(Error::domain("vehicles", "scenario is empty"));
        }
        let mut ids = BTreeSet::new();
        for v in &vehicles {
            if !ids.insert(v.id) {
                return Err(Error::domain("vehicles", format!("duplicate id {}", v.id)));
            }
            if !(0.0..=road_length).contains(&v.x) {
                return Err(Error::domain(
                    "vehicles",
                    format!("vehicle {} is off the road", v.id),
                ));
            }
        }

        let n = vehicles.len();
        let mut distances = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = pairwise_distance(&vehicles[i], &vehicles[j]);
                distances[i * n + j] = d;
                distances[j * n + i] = d;
            }
        }

        let middle = road_length / 2.0;
        let receiver_id = vehicles
            .iter()
            .min_by(|a, b| {
                (a.x - middle)
                    .abs()
                    .total_cmp(&(b.x - middle).abs())
                    .then(a.id.cmp(&b.id))
            })
            .map(|v| v.id)
            .expect("non-empty");

        Ok(Scenario {
            vehicles,
            road_length,
            lane_separation,
            seed: None,
            receiver_id,
            distances,
        })
    }

    pub fn with_receiver(mut self, id: u32) -> Result<Scenario> {
        self.position(id)?;
        self.receiver_id = id;
        Ok(self)
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    pub fn road_length(&self) -> f64 {
        self.road_length
    }

    pub fn lane_separation(&self) -> f64 {
        self.lane_separation
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn receiver_id(&self) -> u32 {
        self.receiver_id
    }

    pub fn vehicle(&self, id: u32) -> Result<&Vehicle> {
        Ok(&self.vehicles[self.position(id)?])
    }

    fn position(&self, id: u32) -> Result<usize> {
        self.vehicles
            .iter()
            .position(|v| v.id == id)
            .ok_or(Error::UnknownVehicle(id))
    }

    /// Distance between the vehicles stored at positions `i` and `j`.
    pub fn distance_at(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.vehicles.len() + j]
    }

    pub fn distance(&self, a: u32, b: u32) -> Result<f64> {
        Ok(self.distance_at(self.position(a)?, self.position(b)?))
    }

    /// Serializes to line records: `#`-prefixed `key=value` header lines
    /// followed by a `id,lane,x,y,direction` table.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        out.push_str("# cv2x-scenario v1\n");
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "# seed={seed}");
        }
        let _ = writeln!(out, "# road_length={}", self.road_length);
        let _ = writeln!(out, "# lane_separation={}", self.lane_separation);
        let _ = writeln!(out, "# receiver_id={}", self.receiver_id);
        out.push_str("id,lane,x,y,direction\n");
        for v in &self.vehicles {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                v.id,
                v.lane.index(),
                v.x,
                v.y,
                v.direction()
            );
        }
        out
    }

    pub fn from_records(text: &str) -> Result<Scenario> {
        let err = |line: usize, reason: String| Error::Record { line, reason };
        let mut seed = None;
        let mut road_length = None;
        let mut lane_separation = None;
        let mut receiver_id = None;
        let mut vehicles = Vec::new();
        let mut seen_columns = false;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                let Some((key, value)) = header.trim().split_once('=') else {
                    continue;
                };
                let value = value.trim();
                let bad = |e: &dyn std::fmt::Display| err(line_no, format!("{key}: {e}"));
                match key.trim() {
                    "seed" => seed = Some(value.parse::<u64>().map_err(|e| bad(&e))?),
                    "road_length" => road_length = Some(value.parse::<f64>().map_err(|e| bad(&e))?),
                    "lane_separation" => {
                        lane_separation = Some(value.parse::<f64>().map_err(|e| bad(&e))?)
                    }
                    "receiver_id" => receiver_id = Some(value.parse::<u32>().map_err(|e| bad(&e))?),
                    other => return Err(err(line_no, format!("unknown header key `{other}`"))),
                }
                continue;
            }
            if !seen_columns {
                if line != "id,lane,x,y,direction" {
                    return Err(err(line_no, format!("unexpected column header `{line}`")));
                }
                seen_columns = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(err(
                    line_no,
                    format!("expected 5 fields, found {}", fields.len()),
                ));
            }
            let num_err = |e: &dyn std::fmt::Display| err(line_no, e.to_string());
            let id = fields[0].parse::<u32>().map_err(|e| num_err(&e))?;
            let lane_index = fields[1].parse::<u8>().map_err(|e| num_err(&e))?;
            let lane = Lane::from_index(lane_index)
                .ok_or_else(|| err(line_no, format!("lane {lane_index} is not 0 or 1")))?;
            let x = fields[2].parse::<f64>().map_err(|e| num_err(&e))?;
            let y = fields[3].parse::<f64>().map_err(|e| num_err(&e))?;
            let direction = fields[4].parse::<i8>().map_err(|e| num_err(&e))?;
            if direction != lane.direction() {
                return Err(err(
                    line_no,
                    format!("direction {direction} contradicts lane {lane_index}"),
                ));
            }
            vehicles.push(Vehicle { id, lane, x, y });
        }

        let road_length = road_length.ok_or_else(|| err(0, "missing road_length".into()))?;
        let lane_separation =
            lane_separation.ok_or_else(|| err(0, "missing lane_separation".into()))?;
        let mut scenario = Scenario::from_vehicles(vehicles, road_length, lane_separation)?;
        scenario.seed = seed;
        if let Some(id) = receiver_id {
            scenario = scenario.with_receiver(id)?;
        }
        Ok(scenario)
    }
}

/// Distance from a vehicle to the closest other vehicle.
pub fn nearest_neighbor_distance(scenario: &Scenario, vehicle_id: u32) -> Result<f64> {
    let i = scenario.position(vehicle_id)?;
    if scenario.len() < 2 {
        return Err(Error::domain("scenario", "needs at least two vehicles"));
    }
    Ok((0..scenario.len())
        .filter(|&j| j != i)
        .map(|j| scenario.distance_at(i, j))
        .fold(f64::INFINITY, f64::min))
}

/// `clamp(1 - distance / threshold, 0, 1)`.
pub fn risk_level(distance: f64, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::domain(
            "threshold",
            format!("{threshold} is not positive"),
        ));
    }
    if !(distance >= 0.0) {
        return Err(Error::domain("distance", format!("{distance} is negative")));
    }
    Ok((1.0 - distance / threshold).clamp(0.0, 1.0))
}

/// `max(1, round_half_up(cw_min * (1 - risk)))`.
pub fn effective_contention_window(risk: f64, cw_min: u32) -> u32 {
    let scaled = f64::from(cw_min) * (1.0 - risk.clamp(0.0, 1.0));
    ((scaled + 0.5).floor() as u32).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuthorizationResult {
    pub threshold: f64,
    pub receiver_id: u32,
    pub authorized_ids: BTreeSet<u32>,
    /// Link distance of every vehicle.
    pub link_distance: BTreeMap<u32, f64>,
    pub risk: BTreeMap<u32, f64>,
    pub effective_cw: BTreeMap<u32, u32>,
}

impl AuthorizationResult {
    pub fn active_count(&self) -> usize {
        self.authorized_ids.len()
    }

    /// Stage-0 windows of the authorized vehicles in id order.
    pub fn authorized_windows(&self) -> Vec<u32> {
        self.authorized_ids
            .iter()
            .map(|id| self.effective_cw[id])
            .collect()
    }
}

/// Distance that decides whether `vehicle_id` may transmit.
pub fn link_distance(scenario: &Scenario, vehicle_id: u32) -> Result<f64> {
    if vehicle_id == scenario.receiver_id {
        nearest_neighbor_distance(scenario, vehicle_id)
    } else {
        scenario.distance(vehicle_id, scenario.receiver_id)
    }
}

/// Applies the threshold: vehicles whose link distance is strictly below
/// `threshold` may contend.
pub fn authorized_transmitters(
    scenario: &Scenario,
    threshold: f64,
    cw_min: u32,
) -> Result<AuthorizationResult> {
    if !(threshold > 0.0) {
        return Err(Error::domain(
            "threshold",
            format!("{threshold} is not positive"),
        ));
    }
    if cw_min < 1 {
        return Err(Error::domain("cw_min", "must be at least 1"));
    }
    let mut result = AuthorizationResult {
        threshold,
        receiver_id: scenario.receiver_id,
        authorized_ids: BTreeSet::new(),
        link_distance: BTreeMap::new(),
        risk: BTreeMap::new(),
        effective_cw: BTreeMap::new(),
    };
    for v in scenario.vehicles() {
        let distance = link_distance(scenario, v.id)?;
        let risk = risk_level(distance, threshold)?;
        if distance < threshold {
            result.authorized_ids.insert(v.id);
        }
        result.link_distance.insert(v.id, distance);
        result.risk.insert(v.id, risk);
        result
            .effective_cw
            .insert(v.id, effective_contention_window(risk, cw_min));
    }
    Ok(result)
}
