//! Multi-zone capacity-expansion planning with hourly unit commitment,
//! solved by surrogate level-based Lagrangian relaxation.

pub mod assembly;
pub mod cli;
pub mod pipeline;
pub mod planning;
pub mod results;
pub mod sampler;
pub mod scenario;
pub mod series;
pub mod slblr;
pub mod time;
pub mod uc;

pub use assembly::{build_planning_model, PlanningModel};
pub use scenario::{load_scenario, ScenarioConfig, ScenarioError};
pub use time::{tau, TimeGrid, WeekSample};
