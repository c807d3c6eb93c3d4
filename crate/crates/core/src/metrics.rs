//! Throughput, delivery ratio, per-epoch channel states and the mean delay
//! decomposition derived from an operating point of the chain.
//!
//! All durations are in microseconds unless a profile was deliberately
//! rescaled with [`TimingProfile::rescaled`].

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::markov::{prob_any_transmission, prob_success_given_any};

/// MAC/PHY durations.
///
/// Times are in microseconds. The data rate defaults to the 6 Mbit/s
/// 802.11p base rate and the control frames to typical airtimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingProfile {
    pub difs: f64,
    pub sifs: f64,
    pub slot: f64,
    pub propagation: f64,
    pub payload_bytes: u32,
    /// Bits per time unit (bits/µs for the default profile).
    pub data_rate: f64,
    pub header: f64,
    pub ack: f64,
    pub rts: f64,
    pub cts: f64,
}

impl Default for TimingProfile {
    fn default() -> Self {
        TimingProfile {
            difs: 65.0,
            sifs: 35.0,
            slot: 15.0,
            propagation: 1.0,
            payload_bytes: 1100,
            data_rate: 6.0,
            header: 40.0,
            ack: 40.0,
            rts: 30.0,
            cts: 25.0,
        }
    }
}

impl TimingProfile {
    pub fn validate(&self) -> Result<()> {
        let durations = [
            ("difs", self.difs),
            ("sifs", self.sifs),
            ("slot", self.slot),
            ("propagation", self.propagation),
            ("data_rate", self.data_rate),
            ("header", self.header),
            ("ack", self.ack),
            ("rts", self.rts),
            ("cts", self.cts),
        ];
        for (name, value) in durations {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::domain(name, format!("{value} is not positive")));
            }
        }
        if self.payload_bytes < 1 {
            return Err(Error::domain("payload_bytes", "must be at least 1"));
        }
        Ok(())
    }

    /// Airtime of the payload, `E[P]`.
    pub fn payload_airtime(&self) -> f64 {
        f64::from(self.payload_bytes) * 8.0 / self.data_rate
    }

    /// Expresses every duration in a unit `factor` times the current one
    /// (e.g. `1e-3` turns µs into ms); the data rate is scaled inversely.
    pub fn rescaled(&self, factor: f64) -> TimingProfile {
        TimingProfile {
            difs: self.difs * factor,
            sifs: self.sifs * factor,
            slot: self.slot * factor,
            propagation: self.propagation * factor,
            payload_bytes: self.payload_bytes,
            data_rate: self.data_rate / factor,
            header: self.header * factor,
            ack: self.ack * factor,
            rts: self.rts * factor,
            cts: self.cts * factor,
        }
    }
}

/// Busy-epoch durations under basic access.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDurations {
    pub success: f64,
    pub collision: f64,
}

/// `T_s = H + E[P] + SIFS + δ + ACK + DIFS + δ`, `T_c = H + E[P] + DIFS + δ`.
pub fn frame_durations(timing: &TimingProfile) -> FrameDurations {
    let t = timing;
    let payload = t.payload_airtime();
    FrameDurations {
        success: t.header + payload + t.sifs + t.propagation + t.ack + t.difs + t.propagation,
        collision: t.header + payload + t.difs + t.propagation,
    }
}

/// Busy-epoch durations under the RTS/CTS handshake.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtsCtsDurations {
    /// One protected packet exchange, `T_tsp`.
    pub packet: f64,
    /// One RTS collision, `T_tsc`.
    pub collision: f64,
}

pub fn rts_cts_durations(timing: &TimingProfile) -> RtsCtsDurations {
    let t = timing;
    let data = t.header + t.payload_airtime();
    RtsCtsDurations {
        packet: t.cts + 3.0 * t.sifs + t.difs + data + t.rts + t.ack,
        collision: t.rts + t.difs,
    }
}

/// Mean backoff wait `CW* = cw_min * slot / 2`.
pub fn mean_backoff_time(cw_min: u32, slot: f64) -> f64 {
    f64::from(cw_min) * slot / 2.0
}

/// Fraction of channel time spent carrying successful payload.
///
/// Idle epochs last one slot, successful ones `T_s` and collided ones `T_c`.
pub fn normalized_throughput(tau: f64, n: u32, timing: &TimingProfile) -> Result<f64> {
    check_probability("tau", tau)?;
    if n < 1 {
        return Err(Error::domain("n", "must be at least 1"));
    }
    timing.validate()?;
    if tau == 0.0 {
        return Ok(0.0);
    }
    let busy = prob_any_transmission(tau, n);
    let success = prob_success_given_any(tau, n)?;
    let frames = frame_durations(timing);
    let payload = success * busy * timing.payload_airtime();
    let elapsed = (1.0 - busy) * timing.slot
        + busy * success * frames.success
        + busy * (1.0 - success) * frames.collision;
    Ok(payload / elapsed)
}

/// Analytic delivery ratio: the share of busy epochs that carry exactly one
/// transmission.
pub fn analytic_pdr(tau: f64, n: u32) -> Result<f64> {
    prob_success_given_any(tau, n)
}

/// Per-epoch outcome probabilities seen by one tagged station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateProbabilities {
    /// Nobody transmits.
    pub p_idle: f64,
    /// The tagged station listens while exactly one other transmits.
    pub p_success: f64,
    /// Residual: two or more other stations transmit.
    pub p_busy: f64,
    /// The tagged station and exactly one other transmit.
    pub p_collision: f64,
    /// Only the tagged station transmits.
    pub p_own_tx: f64,
    pub tau_tx: f64,
    pub tau_nb: f64,
}

impl StateProbabilities {
    /// Sum in the order used to construct the busy residual; equals 1.0
    /// exactly for every value returned by [`state_probabilities`].
    pub fn sum(&self) -> f64 {
        self.defined_sum() + self.p_busy
    }

    fn defined_sum(&self) -> f64 {
        self.p_idle + self.p_own_tx + self.p_success + self.p_collision
    }
}

/// `tau_tx` is the tagged station's transmission probability, `tau_nb` that
/// of each of the other `n - 1` stations.
pub fn state_probabilities(tau_tx: f64, tau_nb: f64, n: u32) -> Result<StateProbabilities> {
    check_probability("tau_tx", tau_tx)?;
    check_probability("tau_nb", tau_nb)?;
    if n < 1 {
        return Err(Error::domain("n", "must be at least 1"));
    }
    let others = n as i32 - 1;
    let (p_idle, p_own_tx, p_success, p_collision) = if n == 1 {
        (1.0 - tau_tx, tau_tx, 0.0, 0.0)
    } else {
        let none = (1.0 - tau_nb).powi(others);
        let one = f64::from(n - 1) * tau_nb * (1.0 - tau_nb).powi(others - 1);
        (
            (1.0 - tau_tx) * none,
            tau_tx * none,
            one * (1.0 - tau_tx),
            tau_tx * one,
        )
    };
    let mut states = StateProbabilities {
        p_idle,
        p_success,
        p_busy: 0.0,
        p_collision,
        p_own_tx,
        tau_tx,
        tau_nb,
    };
    let residual = 1.0 - states.defined_sum();
    if residual < -1e-12 {
        return Err(Error::ModelInconsistency(residual));
    }
    states.p_busy = residual.max(0.0);
    close_partition(&mut states);
    Ok(states)
}

/// Absorbs the last rounding error of `1 - sum` so that the five
/// probabilities add up to exactly one in floating point.
fn close_partition(states: &mut StateProbabilities) {
    for _ in 0..64 {
        let total = states.sum();
        if total == 1.0 {
            return;
        }
        if total < 1.0 || states.p_busy > 0.0 {
            let bits = states.p_busy.to_bits();
            let stepped = if total < 1.0 { bits + 1 } else { bits - 1 };
            states.p_busy = f64::from_bits(stepped);
        } else {
            let excess = total - 1.0;
            let largest = [
                &mut states.p_idle,
                &mut states.p_own_tx,
                &mut states.p_success,
                &mut states.p_collision,
            ]
            .into_iter()
            .max_by(|a, b| a.total_cmp(b))
            .expect("four components");
            *largest -= excess;
        }
    }
}

/// Mean delay decomposition `T_total = T_tt + T_tc + CW* + T_emp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayReport {
    pub t_total: f64,
    pub t_transmission: f64,
    pub t_collision: f64,
    pub cw_star: f64,
    pub t_empirical: f64,
    pub n_transmissions: f64,
    pub n_collisions: f64,
    pub t_tsp: f64,
    pub t_tsc: f64,
}

/// Expected transmissions and collisions among `n_transmitters` stations
/// priced with RTS/CTS exchange durations, plus idle time and mean backoff.
pub fn total_delay(
    states: &StateProbabilities,
    n_transmitters: u32,
    timing: &TimingProfile,
    cw_min: u32,
) -> Result<DelayReport> {
    timing.validate()?;
    let count = f64::from(n_transmitters);
    let exchange = rts_cts_durations(timing);
    let n_transmissions = states.p_own_tx * count;
    let n_collisions = states.p_collision * count;
    let t_transmission = exchange.packet * n_transmissions;
    let t_collision = exchange.collision * n_collisions;
    let t_empirical = states.p_idle * count * timing.slot;
    let cw_star = mean_backoff_time(cw_min, timing.slot);
    Ok(DelayReport {
        t_total: t_transmission + t_collision + cw_star + t_empirical,
        t_transmission,
        t_collision,
        cw_star,
        t_empirical,
        n_transmissions,
        n_collisions,
        t_tsp: exchange.packet,
        t_tsc: exchange.collision,
    })
}
