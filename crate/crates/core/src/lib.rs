//! Pairwise trust scoring for repeated trust games.
//!
//! The crate covers four layers:
//!
//! * [`trust`]: a directed, constant-space trust metric that punishes
//!   fluctuating and betraying behavior, plus the [`reputation`] average it is
//!   compared against;
//! * [`game`] and [`agents`]: a seeded repeated trust game with scripted
//!   strategies, including betrayal and playbook attackers;
//! * [`scoring`] and [`analysis`]: replaying round logs into trust and
//!   reputation trajectories, behavioral measures and the per-round
//!   regression comparison of the two predictors;
//! * [`io`]: the CSV and JSON formats used by the command-line tool.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which the simulator and analysis use throughout.

pub mod agents;
pub mod analysis;
pub mod error;
pub mod game;
pub mod io;
pub mod reputation;
pub mod scalar;
pub mod scoring;
pub mod stats;
pub mod trust;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type TrustParams = trust::TrustParams<f64>;
pub type PairTrustState = trust::PairTrustState<f64>;
pub type UpdateTrace = trust::UpdateTrace<f64>;
pub type ReputationState = reputation::ReputationState<f64>;
pub type OlsFit = stats::OlsFit<f64>;
pub type PairedInterval = stats::PairedInterval<f64>;
pub type WelchTest = stats::WelchTest<f64>;

pub type TrustParams32 = trust::TrustParams<f32>;
pub type PairTrustState32 = trust::PairTrustState<f32>;
pub type ReputationState32 = reputation::ReputationState<f32>;

pub use agents::{parse_roster, Agent, RosterEntry, Strategy, StrategySpec};
pub use analysis::{
    dependent_measures, predictive_comparison, zero_send_rate, ComparisonReport,
    DependentMeasures, RegressionReport,
};
pub use game::{
    play_round, run_game, schedule_game, GameCondition, GameConfig, GameOutput, PartnerView,
    RoundRecord, Stakes,
};
pub use scoring::{score_log, Scorebook, TrajectoryRow};
pub use trust::{
    current_trust, observe_zero_transaction, send_proportion, update_pair_trust, Role,
};
