//! Slot-level Monte Carlo simulation of saturated DCF contention.
//!
//! Time advances in decision epochs. In each epoch every station whose
//! counter is zero transmits. No transmitter means an idle slot and every
//! counter steps down. One transmitter is a success: it resets to stage 0
//! and redraws. Two or more collide: each moves one stage up (capped at the
//! maximum stage) and redraws from the wider window. Listeners either step
//! once per busy epoch or hold their counter, depending on [`Countdown`].
//!
//! All stations hear each other; there is no capture and no hidden node.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::Countdown;
use crate::metrics::{frame_durations, rts_cts_durations, TimingProfile};
use crate::scenario::{authorized_transmitters, Scenario};

pub const RNG_ALGORITHM: &str = "ChaCha8Rng";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessMode {
    #[default]
    Basic,
    RtsCts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Stage-0 `CW_min` of each station.
    pub stations: Vec<u32>,
    pub max_stage: u32,
    pub timing: TimingProfile,
    pub total_slots: u64,
    pub seed: u64,
    pub access_mode: AccessMode,
    pub countdown: Countdown,
}

impl SimConfig {
    pub fn homogeneous(
        n: usize,
        cw_min: u32,
        max_stage: u32,
        timing: TimingProfile,
        total_slots: u64,
        seed: u64,
    ) -> SimConfig {
        SimConfig {
            stations: vec![cw_min; n],
            max_stage,
            timing,
            total_slots,
            seed,
            access_mode: AccessMode::Basic,
            countdown: Countdown::VirtualSlot,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_slots < 1 {
            return Err(Error::domain("total_slots", "must be at least 1"));
        }
        if self.stations.iter().any(|&cw| cw < 1) {
            return Err(Error::domain(
                "stations",
                "every contention window must be at least 1",
            ));
        }
        if self.max_stage > 20 {
            return Err(Error::domain("max_stage", "must be at most 20"));
        }
        self.timing.validate()
    }
}

/// What happened in one decision epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotOutcome {
    Idle,
    Success(usize),
    Collision(Vec<usize>),
}

/// Station-averaged frequencies of the five per-epoch outcomes seen by a
/// tagged station (see [`crate::metrics::StateProbabilities`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateFrequencies {
    pub idle: f64,
    pub success: f64,
    pub busy: f64,
    pub collision: f64,
    pub own_tx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub rng_algorithm: String,
    pub seed: u64,
    pub stations: usize,
    pub active_transmitters: usize,
    pub total_slots: u64,
    pub idle_slots: u64,
    /// Epochs with exactly one transmitter.
    pub successes: u64,
    /// Epochs with two or more transmitters.
    pub collisions: u64,
    /// Individual transmissions, summed over stations.
    pub attempts: u64,
    pub collided_attempts: u64,
    pub mean_tau: Option<f64>,
    /// Successful epochs over busy epochs.
    pub pdr: Option<f64>,
    /// Fraction of simulated time carrying successful payload.
    pub throughput: f64,
    /// Head-of-line to end of exchange, averaged over delivered packets.
    pub mean_mac_delay_us: Option<f64>,
    /// Busy epochs over all epochs.
    pub busy_fraction: f64,
    /// Collided transmissions over all transmissions.
    pub collision_fraction: Option<f64>,
    pub elapsed_us: f64,
    pub per_station_tau: Vec<f64>,
    pub state_frequencies: Option<StateFrequencies>,
}

#[derive(Debug, Clone)]
struct Station {
    cw_min: u32,
    stage: u32,
    counter: u32,
    hol_since: f64,
    attempts: u64,
}

impl Station {
    fn window(&self, max_stage: u32) -> u32 {
        (self.cw_min + 1) << self.stage.min(max_stage)
    }
}

#[derive(Debug, Default, Clone)]
struct Tally {
    idle: u64,
    success: u64,
    busy: u64,
    collision: u64,
    own_tx: u64,
}

/// Step-by-step simulator; [`run_simulation`] drives it to completion.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    rng: ChaCha8Rng,
    stations: Vec<Station>,
    success_time: f64,
    collision_time: f64,
    payload_time: f64,
    now: f64,
    slots: u64,
    idle_slots: u64,
    successes: u64,
    collisions: u64,
    collided_attempts: u64,
    delay_sum: f64,
    tally: Tally,
    transmitters: Vec<usize>,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Simulator> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let stations = config
            .stations
            .iter()
            .map(|&cw_min| Station {
                cw_min,
                stage: 0,
                counter: rng.gen_range(0..=cw_min),
                hol_since: 0.0,
                attempts: 0,
            })
            .collect();
        let (success_time, collision_time) = match config.access_mode {
            AccessMode::Basic => {
                let f = frame_durations(&config.timing);
                (f.success, f.collision)
            }
            AccessMode::RtsCts => {
                let r = rts_cts_durations(&config.timing);
                (r.packet, r.collision)
            }
        };
        let payload_time = config.timing.payload_airtime();
        Ok(Simulator {
            config,
            rng,
            stations,
            success_time,
            collision_time,
            payload_time,
            now: 0.0,
            slots: 0,
            idle_slots: 0,
            successes: 0,
            collisions: 0,
            collided_attempts: 0,
            delay_sum: 0.0,
            tally: Tally::default(),
            transmitters: Vec::new(),
        })
    }

    /// Overrides the initial stage-0 counters.
    pub fn with_initial_counters(mut self, counters: &[u32]) -> Result<Simulator> {
        if counters.len() != self.stations.len() {
            return Err(Error::domain(
                "counters",
                "one counter per station required",
            ));
        }
        for (station, &counter) in self.stations.iter_mut().zip(counters) {
            if counter > station.cw_min {
                return Err(Error::domain(
                    "counters",
                    format!("{counter} exceeds CW_min"),
                ));
            }
            station.counter = counter;
        }
        Ok(self)
    }

    pub fn slots_done(&self) -> u64 {
        self.slots
    }

    pub fn is_finished(&self) -> bool {
        self.slots >= self.config.total_slots
    }

    pub fn step(&mut self) -> SlotOutcome {
        self.transmitters.clear();
        self.transmitters.extend(
            self.stations
                .iter()
                .enumerate()
                .filter(|(_, s)| s.counter == 0)
                .map(|(i, _)| i),
        );
        self.slots += 1;
        let n = self.stations.len() as u64;
        let k = self.transmitters.len();

        if k == 0 {
            self.idle_slots += 1;
            self.tally.idle += n;
            self.now += self.config.timing.slot;
            for s in &mut self.stations {
                s.counter -= 1;
            }
            return SlotOutcome::Idle;
        }

        let max_stage = self.config.max_stage;
        let outcome = if k == 1 {
            self.successes += 1;
            self.tally.own_tx += 1;
            self.tally.success += n - 1;
            self.now += self.success_time;
            let station = &mut self.stations[self.transmitters[0]];
            self.delay_sum += self.now - station.hol_since;
            station.hol_since = self.now;
            station.stage = 0;
            SlotOutcome::Success(self.transmitters[0])
        } else {
            self.collisions += 1;
            self.collided_attempts += k as u64;
            if k == 2 {
                self.tally.collision += 2;
                self.tally.busy += n - 2;
            } else {
                self.tally.busy += n;
            }
            self.now += self.collision_time;
            for &i in &self.transmitters {
                let station = &mut self.stations[i];
                station.stage = (station.stage + 1).min(max_stage);
            }
            SlotOutcome::Collision(self.transmitters.clone())
        };

        if self.config.countdown == Countdown::VirtualSlot {
            for s in self.stations.iter_mut().filter(|s| s.counter > 0) {
                s.counter -= 1;
            }
        }
        for &i in &self.transmitters {
            let station = &mut self.stations[i];
            station.attempts += 1;
            let window = station.window(max_stage);
            station.counter = self.rng.gen_range(0..window);
        }
        outcome
    }

    pub fn report(&self) -> SimReport {
        let n = self.stations.len();
        let slots = self.slots.max(1) as f64;
        let per_station_tau: Vec<f64> = self
            .stations
            .iter()
            .map(|s| s.attempts as f64 / slots)
            .collect();
        let attempts: u64 = self.stations.iter().map(|s| s.attempts).sum();
        let busy = self.successes + self.collisions;
        let mean_tau = (n > 0).then(|| per_station_tau.iter().sum::<f64>() / n as f64);
        let state_frequencies = (n > 0).then(|| {
            let denom = (n as u64 * self.slots.max(1)) as f64;
            StateFrequencies {
                idle: self.tally.idle as f64 / denom,
                success: self.tally.success as f64 / denom,
                busy: self.tally.busy as f64 / denom,
                collision: self.tally.collision as f64 / denom,
                own_tx: self.tally.own_tx as f64 / denom,
            }
        });
        SimReport {
            rng_algorithm: RNG_ALGORITHM.to_string(),
            seed: self.config.seed,
            stations: n,
            active_transmitters: n,
            total_slots: self.slots,
            idle_slots: self.idle_slots,
            successes: self.successes,
            collisions: self.collisions,
            attempts,
            collided_attempts: self.collided_attempts,
            mean_tau,
            pdr: (busy > 0).then(|| self.successes as f64 / busy as f64),
            throughput: if self.now > 0.0 {
                self.successes as f64 * self.payload_time / self.now
            } else {
                0.0
            },
            mean_mac_delay_us: (self.successes > 0).then(|| self.delay_sum / self.successes as f64),
            busy_fraction: busy as f64 / slots,
            collision_fraction: (attempts > 0)
                .then(|| self.collided_attempts as f64 / attempts as f64),
            elapsed_us: self.now,
            per_station_tau,
            state_frequencies,
        }
    }

    pub fn run(mut self) -> SimReport {
        while !self.is_finished() {
            self.step();
        }
        self.report()
    }
}

pub fn run_simulation(config: &SimConfig) -> Result<SimReport> {
    Ok(Simulator::new(config.clone())?.run())
}

/// How authorized vehicles pick their stage-0 window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CwPolicy {
    /// Risk-scaled window from the authorization step.
    #[default]
    DistanceScaled,
    /// Everybody uses the baseline `cw_min`.
    Fixed,
}

/// Simulates the vehicles authorized at `threshold`. The station list of
/// `base` is replaced by the authorized vehicles in id order.
pub fn run_scenario_simulation(
    scenario: &Scenario,
    threshold: f64,
    cw_min: u32,
    policy: CwPolicy,
    base: &SimConfig,
) -> Result<SimReport> {
    let auth = authorized_transmitters(scenario, threshold, cw_min)?;
    let stations = match policy {
        CwPolicy::DistanceScaled => auth.authorized_windows(),
        CwPolicy::Fixed => vec![cw_min; auth.active_count()],
    };
    let config = SimConfig {
        stations,
        ..base.clone()
    };
    let mut report = run_simulation(&config)?;
    report.active_transmitters = auth.active_count();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Lane, Vehicle};

    fn config(n: usize, cw: u32, slots: u64, seed: u64) -> SimConfig {
        SimConfig::homogeneous(n, cw, 5, TimingProfile::default(), slots, seed)
    }

    #[test]
    fn lone_station_matches_closed_form() {
        let slots = 1_000_000;
        let r = run_simulation(&config(1, 7, slots, 3)).unwrap();
        let tau = 2.0 / 9.0;
        let se = (tau * (1.0 - tau) / slots as f64).sqrt();
        assert!((r.mean_tau.unwrap() - tau).abs() <= 3.0 * se);
        assert_eq!(r.pdr, Some(1.0));
        assert_eq!(r.collisions, 0);
    }

    #[test]
    fn simultaneous_zero_counters_collide() {
        let mut sim = Simulator::new(config(2, 1, 10, 0))
            .unwrap()
            .with_initial_counters(&[0, 0])
            .unwrap();
        assert_eq!(sim.step(), SlotOutcome::Collision(vec![0, 1]));
    }

    #[test]
    fn counters_validated() {
        let sim = Simulator::new(config(2, 1, 10, 0)).unwrap();
        assert!(sim.clone().with_initial_counters(&[0]).is_err());
        assert!(sim.with_initial_counters(&[0, 2]).is_err());
        assert!(Simulator::new(config(2, 0, 10, 0)).is_err());
        assert!(Simulator::new(config(2, 1, 0, 0)).is_err());
    }

    #[test]
    fn slot_accounting_adds_up() {
        for countdown in [Countdown::VirtualSlot, Countdown::FreezeOnBusy] {
            let mut c = config(10, 7, 50_000, 9);
            c.countdown = countdown;
            let r = run_simulation(&c).unwrap();
            assert_eq!(r.idle_slots + r.successes + r.collisions, r.total_slots);
            assert_eq!(r.total_slots, 50_000);
            assert!(r.successes + r.collisions <= r.attempts);
            let f = r.state_frequencies.unwrap();
            let sum = f.idle + f.success + f.busy + f.collision + f.own_tx;
            assert!((sum - 1.0).abs() < 1e-12);
            for v in [
                r.pdr.unwrap(),
                r.throughput,
                r.busy_fraction,
                r.collision_fraction.unwrap(),
            ] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn same_seed_same_report() {
        let a = run_simulation(&config(5, 7, 20_000, 77)).unwrap();
        let b = run_simulation(&config(5, 7, 20_000, 77)).unwrap();
        let c = run_simulation(&config(5, 7, 20_000, 78)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn smallest_window_terminates() {
        let r = run_simulation(&config(3, 1, 10_000, 1)).unwrap();
        assert_eq!(r.total_slots, 10_000);
    }

    #[test]
    fn rts_cts_busy_epochs_are_shorter_on_collision() {
        let mut basic = config(20, 7, 100_000, 4);
        let r_basic = run_simulation(&basic).unwrap();
        basic.access_mode = AccessMode::RtsCts;
        let r_rts = run_simulation(&basic).unwrap();
        // same random stream, same epochs, only durations change
        assert_eq!(r_basic.successes, r_rts.successes);
        assert!(r_rts.elapsed_us != r_basic.elapsed_us);
    }

    #[test]
    fn empty_scenario_run_has_no_delivery_ratio() {
        let vehicles = vec![
            Vehicle {
                id: 0,
                lane: Lane::Forward,
                x: 0.0,
                y: 0.0,
            },
            Vehicle {
                id: 1,
                lane: Lane::Forward,
                x: 900.0,
                y: 0.0,
            },
        ];
        let s = Scenario::from_vehicles(vehicles, 1000.0, 4.0).unwrap();
        let r = run_scenario_simulation(
            &s,
            10.0,
            7,
            CwPolicy::DistanceScaled,
            &config(0, 7, 1000, 1),
        )
        .unwrap();
        assert_eq!(r.active_transmitters, 0);
        assert_eq!(r.attempts, 0);
        assert_eq!(r.pdr, None);
        assert_eq!(r.idle_slots, 1000);
    }

    #[test]
    fn scenario_run_equals_direct_run() {
        let vehicles = vec![
            Vehicle {
                id: 0,
                lane: Lane::Forward,
                x: 400.0,
                y: 0.0,
            },
            Vehicle {
                id: 1,
                lane: Lane::Forward,
                x: 500.0,
                y: 0.0,
            },
        ];
        let s = Scenario::from_vehicles(vehicles, 1000.0, 4.0).unwrap();
        let base = config(0, 7, 100_000, 21);
        let via_scenario =
            run_scenario_simulation(&s, 200.0, 7, CwPolicy::DistanceScaled, &base).unwrap();
        // both at 100 m from each other: risk 0.5, window round(3.5) = 4
        let direct = run_simulation(&SimConfig {
            stations: vec![4, 4],
            ..base
        })
        .unwrap();
        assert_eq!(via_scenario, direct);
        assert_eq!(via_scenario.active_transmitters, 2);
    }
}
