//! Distance-prioritized channel access for vehicle-to-vehicle broadcast.
//!
//! * [`markov`]: backoff Markov chain, stationary distribution and the
//!   transmission-probability fixed point.
//! * [`metrics`]: throughput, delivery ratio, per-epoch channel states and
//!   the mean delay decomposition.
//! * [`scenario`]: two-lane road layouts, distances, risk and threshold
//!   authorization.
//! * [`simulator`]: slot-level Monte Carlo simulation used to check the
//!   analytic model.

pub mod error;
pub mod markov;
pub mod metrics;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};
pub use markov::{
    build_transition_matrix, prob_any_transmission, prob_success_given_any, solve_fixed_point,
    solve_fixed_point_with, stationary_distribution, transmission_probability, Countdown,
    DcfParameters, FixedPointOptions, FixedPointSolution, StationaryDistribution, TransitionMatrix,
};
pub use metrics::{
    analytic_pdr, frame_durations, mean_backoff_time, normalized_throughput, rts_cts_durations,
    state_probabilities, total_delay, DelayReport, StateProbabilities, TimingProfile,
};
pub use scenario::{
    authorized_transmitters, effective_contention_window, generate_scenario,
    nearest_neighbor_distance, pairwise_distance, risk_level, AuthorizationResult, Lane, Scenario,
    Vehicle,
};
pub use simulator::{
    run_scenario_simulation, run_simulation, AccessMode, CwPolicy, SimConfig, SimReport, Simulator,
    SlotOutcome,
};
