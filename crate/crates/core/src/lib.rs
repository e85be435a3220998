//! Surrogate performance model for lifelong learning.
//!
//! A curriculum of tasks drives a per-algorithm experience recurrence whose
//! state is mapped through a shifted sigmoid into predicted performance
//! curves. The model is parameterised by a task transfer matrix, per-task
//! difficulty and three per-algorithm scores (transfer efficiency, experience
//! retention and expertise translation). [`estimator::fit`] recovers those
//! parameters from observed curves with projected Adam.
//!
//! Module map:
//!
//! - [`model`]: domain types and the forward simulation.
//! - [`estimator`]: loss, exact adjoint gradient, projection, fitting and
//!   the synthetic recovery harness.
//! - [`scenario`]: seeded synthetic ground-truth generation.
//! - [`io`]: curves CSV, curriculum/params JSON, raw log downsampling and
//!   normalisation.
//! - [`report`]: Markdown/JSON tables and SVG curve plots.
//! - [`exec`]: sequential or rayon-backed batch execution.

pub mod error;
pub mod estimator;
pub mod exec;
pub mod io;
pub mod model;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
pub use estimator::{fit, gradient, loss, project, FitConfig, FitResult, InitScheme};
pub use exec::Execution;
pub use model::{
    AlgorithmProperties, Curriculum, ExperienceState, PerformanceMatrix, ScenarioParams,
    TaskProperties, TaskSet, MIN_DIFFICULTY,
};
pub use scenario::ScenarioSpec;
