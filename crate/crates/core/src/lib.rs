//! Inexact augmented Lagrangian solver for composite problems
//! `minimize φ(x) + g(Φ(x)) subject to Bx = b` where g is convex piecewise
//! linear-quadratic, together with a second-order diagnostics layer
//! (subdifferentials, critical cones, second subderivatives, SOSC and
//! quadratic-growth probes, KKT error-bound fitting).

pub mod alm;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod inner;
pub mod plq;
pub mod poly;
pub mod problem;
pub mod qp;

pub mod outer;

pub use alm::{alm_solve, AlmConfig, IterationRecord, PenaltyRule, RunReport, RunStatus};
pub use diagnostics::{
    aug_epi_d2, check_kkt, fit_error_bound_constant, growth_probe, sosc_probe, GrowthReport,
    SoscReport, SoscVerdict,
};
pub use error::{Error, Result};
pub use harness::{builtin, builtin_suite, load_outer_str, load_problem_str, run_benchmark};
pub use inner::{InnerConfig, InnerResult, InnerStatus};
pub use outer::OuterFunction;
pub use plq::{PlqFunction, PlqPiece};
pub use poly::{ConeRep, Halfspace, Polyhedron};
pub use problem::{
    AffineSet, CompositeProblem, KnownSolution, PrimalDualPoint, QuadraticForm, QuadraticOracle,
    SmoothOracle,
};
