//! Two-dimensional backoff Markov chain of the DCF contention process.
//!
//! A station is described by its backoff stage `i` (consecutive collisions
//! of the head-of-line packet, capped at `m`) and its backoff counter `k`.
//! The window at stage `i` is `W_i = (cw_min + 1) * 2^min(i, m)`, so the
//! counter is drawn uniformly from `[0, W_i - 1]`.
//!
//! Per decision epoch:
//!
//! * `(i, k > 0)` decrements to `(i, k - 1)` with probability `1 - p_b` and
//!   stays frozen with probability `p_b`;
//! * `(i, 0)` transmits. On success (probability `1 - p_c`) it restarts in
//!   `(0, k)` for a uniform `k`; on collision (probability `p_c`) it moves to
//!   `(min(i + 1, m), k)` for a uniform `k`.
//!
//! The stationary distribution is obtained by a direct linear solve of the
//! balance equations of the explicit transition matrix, and the transmission
//! probability `tau` is coupled to `p_c` (and optionally `p_b`) through a
//! damped fixed-point iteration.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// Upper bound on the chain size handled by the dense solver.
pub const MAX_STATES: usize = 4096;

/// How a station that is counting down treats an epoch in which some other
/// station transmits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Countdown {
    /// A busy period counts as one virtual slot: the counter is held while
    /// the medium is occupied and steps once when it is released. The chain
    /// sees `p_b = 0` per epoch.
    #[default]
    VirtualSlot,
    /// The counter does not move during a busy epoch. The chain sees
    /// `p_b = p_c` (someone among the other `n - 1` stations transmits).
    FreezeOnBusy,
}

/// Contention and backoff configuration of the analytic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcfParameters {
    /// Minimum contention window `CW_min`; the stage-0 window holds
    /// `cw_min + 1` counter values.
    pub cw_min: u32,
    /// Maximum backoff stage `m`.
    pub max_stage: u32,
    /// Number of saturated stations `n`.
    pub stations: u32,
    /// Slot duration in microseconds.
    pub slot_us: f64,
    #[serde(default)]
    pub countdown: Countdown,
}

impl Default for DcfParameters {
    fn default() -> Self {
        DcfParameters {
            cw_min: 7,
            max_stage: 5,
            stations: 50,
            slot_us: 15.0,
            countdown: Countdown::VirtualSlot,
        }
    }
}

impl DcfParameters {
    pub fn new(cw_min: u32, max_stage: u32, stations: u32, slot_us: f64) -> Result<Self> {
        let params = DcfParameters {
            cw_min,
            max_stage,
            stations,
            slot_us,
            countdown: Countdown::default(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_countdown(mut self, countdown: Countdown) -> Self {
        self.countdown = countdown;
        self
    }

    pub fn with_stations(mut self, stations: u32) -> Self {
        self.stations = stations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.cw_min < 1 {
            return Err(Error::domain("cw_min", "must be at least 1"));
        }
        if self.stations < 1 {
            return Err(Error::domain("stations", "must be at least 1"));
        }
        if !(self.slot_us > 0.0 && self.slot_us.is_finite()) {
            return Err(Error::domain(
                "slot_us",
                format!("{} is not positive", self.slot_us),
            ));
        }
        if self.max_stage > 20 {
            return Err(Error::domain("max_stage", "must be at most 20"));
        }
        let states = self.state_count();
        if states > MAX_STATES {
            return Err(Error::domain(
                "cw_min/max_stage",
                format!("chain has {states} states, limit is {MAX_STATES}"),
            ));
        }
        Ok(())
    }

    /// Window size `W_i` at backoff stage `stage`.
    pub fn window(&self, stage: u32) -> usize {
        (self.cw_min as usize + 1) << stage.min(self.max_stage)
    }

    /// Number of `(i, k)` states in the chain.
    pub fn state_count(&self) -> usize {
        (0..=self.max_stage).map(|i| self.window(i)).sum()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.max_stage as usize + 1);
        let mut acc = 0;
        for i in 0..=self.max_stage {
            offsets.push(acc);
            acc += self.window(i);
        }
        offsets
    }
}

/// Row-stochastic transition matrix over the `(stage, counter)` states.
///
/// Rows are the source state; states are laid out stage by stage with the
/// counter increasing inside a stage.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    params: DcfParameters,
    offsets: Vec<usize>,
    matrix: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn params(&self) -> &DcfParameters {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn index(&self, stage: u32, counter: usize) -> usize {
        debug_assert!(counter < self.params.window(stage));
        self.offsets[stage as usize] + counter
    }

    /// Probability of moving from `from = (i, k)` to `to = (i', k')`.
    pub fn prob(&self, from: (u32, usize), to: (u32, usize)) -> f64 {
        self.matrix[(self.index(from.0, from.1), self.index(to.0, to.1))]
    }

    pub fn row_sum(&self, row: usize) -> f64 {
        self.matrix.row(row).sum()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Builds the transition matrix for fixed collision and busy probabilities.
pub fn build_transition_matrix(
    params: &DcfParameters,
    p_c: f64,
    p_b: f64,
) -> Result<TransitionMatrix> {
    params.validate()?;
    check_probability("p_c", p_c)?;
    check_probability("p_b", p_b)?;

    let offsets = params.offsets();
    let dim = params.state_count();
    let mut matrix = DMatrix::<f64>::zeros(dim, dim);
    let m = params.max_stage;
    let w0 = params.window(0);

    for stage in 0..=m {
        let base = offsets[stage as usize];
        let window = params.window(stage);

        for k in 1..window {
            matrix[(base + k, base + k - 1)] += 1.0 - p_b;
            matrix[(base + k, base + k)] += p_b;
        }

        let from = base;
        let success = (1.0 - p_c) / w0 as f64;
        for k in 0..w0 {
            matrix[(from, offsets[0] + k)] += success;
        }
        let next = (stage + 1).min(m);
        let next_window = params.window(next);
        let collision = p_c / next_window as f64;
        for k in 0..next_window {
            matrix[(from, offsets[next as usize] + k)] += collision;
        }
    }

    Ok(TransitionMatrix {
        params: *params,
        offsets,
        matrix,
    })
}

/// Stationary probabilities `b_{i,k}` stored stage by stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    stages: Vec<Vec<f64>>,
}

impl StationaryDistribution {
    /// Wraps raw per-stage probabilities. Each inner vector holds the
    /// counters `0..W_i` of one stage.
    pub fn from_stages(stages: Vec<Vec<f64>>) -> Self {
        StationaryDistribution { stages }
    }

    pub fn get(&self, stage: u32, counter: usize) -> f64 {
        self.stages[stage as usize][counter]
    }

    pub fn b00(&self) -> f64 {
        self.stages[0][0]
    }

    pub fn stage(&self, stage: u32) -> &[f64] {
        &self.stages[stage as usize]
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn total(&self) -> f64 {
        self.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.stages.iter().flatten().copied()
    }

    /// Flattened in the same order as [`TransitionMatrix`] states.
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.stages.iter().map(Vec::len).sum(), self.iter())
    }

    /// `max_j |(bP)_j - b_j|`.
    pub fn balance_residual(&self, transitions: &TransitionMatrix) -> f64 {
        let b = self.to_vector();
        let next = transitions.as_matrix().tr_mul(&b);
        (next - b).amax()
    }
}

/// Solves `b P = b`, `sum(b) = 1` for the chain at `(p_c, p_b)`.
pub fn stationary_distribution(
    params: &DcfParameters,
    p_c: f64,
    p_b: f64,
) -> Result<StationaryDistribution> {
    check_probability("p_c", p_c)?;
    check_probability("p_b", p_b)?;
    if p_c >= 1.0 {
        return Err(Error::NotErgodic(
            "p_c = 1 makes the top-stage retry loop absorbing".into(),
        ));
    }
    if p_b >= 1.0 {
        return Err(Error::NotErgodic(
            "p_b = 1 freezes every nonzero counter forever".into(),
        ));
    }
    let transitions = build_transition_matrix(params, p_c, p_b)?;
    solve_balance(params, &transitions)
}

fn solve_balance(
    params: &DcfParameters,
    transitions: &TransitionMatrix,
) -> Result<StationaryDistribution> {
    let dim = transitions.dim();
    // (P^T - I) b = 0 with the last balance equation swapped for sum(b) = 1.
    let mut system = transitions.as_matrix().transpose();
    for j in 0..dim {
        system[(j, j)] -= 1.0;
    }
    system.row_mut(dim - 1).fill(1.0);
    let mut rhs = DVector::<f64>::zeros(dim);
    rhs[dim - 1] = 1.0;

    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotErgodic("balance equations are singular".into()))?;

    // Transient states come back as tiny signed round-off.
    let mut flat: Vec<f64> = solution.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = flat.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Solver { residual: f64::NAN });
    }
    for v in &mut flat {
        *v /= total;
    }

    let mut stages = Vec::with_capacity(params.max_stage as usize + 1);
    let mut rest = flat.as_slice();
    for i in 0..=params.max_stage {
        let (head, tail) = rest.split_at(params.window(i));
        stages.push(head.to_vec());
        rest = tail;
    }
    let dist = StationaryDistribution { stages };

    let residual = dist.balance_residual(transitions);
    if residual > 1e-10 {
        return Err(Error::Solver { residual });
    }
    Ok(dist)
}

/// Stationary probability that a station transmits in an epoch: the mass on
/// counter-zero states, `sum_i b_{i,0}`.
pub fn transmission_probability(dist: &StationaryDistribution) -> f64 {
    dist.stages.iter().map(|stage| stage[0]).sum()
}

/// `1 - (1 - tau)^n`: at least one of `n` stations transmits.
pub fn prob_any_transmission(tau: f64, n: u32) -> f64 {
    if n == 0 || tau <= 0.0 {
        return 0.0;
    }
    if tau >= 1.0 {
        return 1.0;
    }
    -(f64::from(n) * (-tau).ln_1p()).exp_m1()
}

/// Probability that a busy epoch carries exactly one transmission,
/// `n tau (1 - tau)^(n-1) / (1 - (1 - tau)^n)`.
pub fn prob_success_given_any(tau: f64, n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("n", "must be at least 1"));
    }
    check_probability("tau", tau)?;
    if tau == 0.0 {
        return Err(Error::domain(
            "tau",
            "success ratio is undefined when nobody transmits",
        ));
    }
    let single = f64::from(n) * tau * (1.0 - tau).powi(n as i32 - 1);
    Ok(single / prob_any_transmission(tau, n))
}

/// Probability that at least one of the other `n - 1` stations transmits.
pub fn collision_probability(tau: f64, n: u32) -> f64 {
    prob_any_transmission(tau, n.saturating_sub(1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Weight of the new image in `tau <- (1 - a) tau + a f(tau)`.
    pub damping: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            tolerance: 1e-9,
            max_iterations: 10_000,
            damping: 0.5,
        }
    }
}

/// Converged operating point of the chain.
#[derive(Debug, Clone)]
pub struct FixedPointSolution {
    pub tau: f64,
    pub p_collision: f64,
    pub p_busy: f64,
    pub stationary: StationaryDistribution,
    pub iterations: usize,
    pub residual: f64,
}

fn coupled_probabilities(params: &DcfParameters, tau: f64) -> (f64, f64) {
    let p_c = collision_probability(tau, params.stations);
    let p_b = match params.countdown {
        Countdown::VirtualSlot => 0.0,
        Countdown::FreezeOnBusy => p_c,
    };
    (p_c, p_b)
}

/// Solves for `tau` with the default damping.
pub fn solve_fixed_point(
    params: &DcfParameters,
    tolerance: f64,
    max_iterations: usize,
) -> Result<FixedPointSolution> {
    solve_fixed_point_with(
        params,
        &FixedPointOptions {
            tolerance,
            max_iterations,
            ..FixedPointOptions::default()
        },
    )
}

pub fn solve_fixed_point_with(
    params: &DcfParameters,
    options: &FixedPointOptions,
) -> Result<FixedPointSolution> {
    params.validate()?;
    if !(options.tolerance > 0.0) {
        return Err(Error::domain("tolerance", "must be positive"));
    }
    if !(options.damping > 0.0 && options.damping <= 1.0) {
        return Err(Error::domain("damping", "must lie in (0, 1]"));
    }

    let alpha = options.damping;
    let mut tau = 2.0 / (params.window(0) as f64 + 1.0);
    let mut residual = f64::INFINITY;

    for iteration in 1..=options.max_iterations {
        let (p_c, p_b) = coupled_probabilities(params, tau);
        let dist = stationary_distribution(params, p_c, p_b)?;
        let image = transmission_probability(&dist);
        let next = ((1.0 - alpha) * tau + alpha * image).clamp(f64::MIN_POSITIVE, 1.0);
        let (next_c, next_b) = coupled_probabilities(params, next);
        residual = (next - tau)
            .abs()
            .max((next_c - p_c).abs())
            .max((next_b - p_b).abs());
        tau = next;

        if residual <= options.tolerance {
            let stationary = stationary_distribution(params, next_c, next_b)?;
            return Ok(FixedPointSolution {
                tau,
                p_collision: next_c,
                p_busy: next_b,
                stationary,
                iterations: iteration,
                residual,
            });
        }
    }

    Err(Error::NonConvergence {
        iterations: options.max_iterations,
        tau,
        residual,
    })
}
