//! Tools for steering gradient dynamics into a chosen critical point.
//!
//! Given a smooth objective and a local minimum (or any critical point that is
//! not a local maximum), the [`reach`] procedures build an initial point whose
//! forward gradient descent or gradient flow converges to it. They do so by
//! running the dynamics backwards with exact implicit steps ([`reverse`]) or
//! reverse flows ([`flow`]) until the orbit leaves an empirically certified
//! stability ball, then replaying forward.

pub mod descent;
pub mod error;
pub mod flow;
pub mod io;
pub mod landscape;
pub mod reach;
pub mod reverse;
pub mod sampling;
pub mod schedule;

pub use descent::{
    classify_limit, gd_step, run_gd, GdOptions, LimitKind, TerminalStatus, Trajectory,
};
pub use error::{Error, Result};
pub use flow::{integrate, integrate_minnorm, path_length, sphere_exit, FlowSettings};
pub use landscape::{make_builtin, CriticalKind, ObjectiveFunction, Point};
pub use reach::{
    edge_of_stability, grad_lower_bound, reach_continuous, reach_discrete, reach_general,
    stability_probe, GeneralMode, ProbeMode, ReachParams, ReachReport, ReachStatus,
};
pub use reverse::{ascent_prox, prox, reverse_orbit, ReverseOrbit};
pub use schedule::{Regime, StepSchedule};
