//! # galerkin-time
//!
//! Continuous and discontinuous Galerkin time stepping for ODEs
//! `u' = f(t, u)`, `u(0) = u_0`, built on Legendre series over each element.
//!
//! The DG solution of degree `k` can be lifted, element by element and without
//! further solves, to a continuous polynomial of degree `k + 1` by adding the
//! left-Radau polynomial scaled by the jump at the element's left node. The
//! lifted solution satisfies the CG element equations with `f` evaluated at
//! the DG solution, so the two methods discretize the time derivative in the
//! same way. When `f` depends on `t` only, or is interpolated at the Radau
//! zeros, the lifted DG solution and the CG solution of degree `k + 1` agree.
//!
//! ```
//! use galerkin_time::{builtin, postprocess, solve_cg, solve_dg, SolverConfig, TimeMesh};
//!
//! let p = builtin("cosine").unwrap();
//! let mesh = TimeMesh::uniform(8, p.horizon()).unwrap();
//! let cfg = SolverConfig::new(2);
//! let dg = solve_dg(&p, &mesh, &cfg).unwrap();
//! let star = postprocess(&dg).unwrap();
//! let cg = solve_cg(&p, &mesh, &cfg).unwrap();
//! let gap = galerkin_time::analysis::max_gap(&star, &cg, 20);
//! assert!(gap < 1e-12);
//! ```

#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
mod linalg;
pub mod mesh;
pub mod polybasis;
pub mod postprocess;
pub mod problem;
pub mod report;
pub mod solvers;

pub use analysis::{
    check_coincidence, convergence_study, error_summary, CoincidenceReport, ConvergenceReport,
    ErrorSummary, Norm,
};
pub use error::{Error, Result};
pub use mesh::{Side, TimeMesh};
pub use polybasis::{
    gauss_rule, legendre_eval, radau_left, radau_zeros, LegendreCoeffs, QuadratureRule, RadauPoly,
};
pub use postprocess::{
    check_cg_equations, check_lift_properties, postprocess, stabilization_functional,
    CgEquationReport, LiftViolation,
};
pub use problem::{builtin, OdeProblem, ProblemDescriptor};
pub use solvers::{
    assemble_element_residual, radau_interpolate_rhs, solve_cg, solve_dg, ElementPoly, Method,
    PiecewiseSolution, RhsMode, SolutionKind, SolverConfig,
};
