//! The elementwise left-Radau lift of a DG solution and the checks that it
//! satisfies the CG element equations.
//!
//! On element `I_n` the lifted solution is
//! `u*(t) = u(t) + (û − u)(t_{n-1}^+) · R_{k+1}(τ_n(t))`. It costs no solves
//! and no evaluations of `f`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::polybasis::{gauss_rule, radau_left, LegendreCoeffs};
use crate::problem::OdeProblem;
use crate::solvers::{ElementPoly, Kernel, PiecewiseSolution, SolutionKind, SolverConfig};

/// Tolerance factor for continuity and nodal checks, relative to the solution scale.
pub const CONTINUITY_TOL: f64 = 1e-12;
/// Tolerance factor for Galerkin residuals, relative to the solution scale.
pub const RESIDUAL_TOL: f64 = 1e-10;

fn require_kind(sol: &PiecewiseSolution, kind: SolutionKind) -> Result<()> {
    if sol.kind != kind {
        return Err(Error::Precondition(format!(
            "expected a {} solution, got {}",
            kind.label(),
            sol.kind.label()
        )));
    }
    Ok(())
}

/// `(û − u)(t_{n-1}^+)` per component.
pub fn left_jump(dg: &PiecewiseSolution, e: usize) -> Vec<f64> {
    dg.traces[e]
        .iter()
        .zip(dg.elements[e].left_value())
        .map(|(hat, u)| hat - u)
        .collect()
}

pub fn postprocess(dg: &PiecewiseSolution) -> Result<PiecewiseSolution> {
    require_kind(dg, SolutionKind::Dg)?;
    let radau = radau_left(dg.k)?;
    let elements = dg
        .elements
        .iter()
        .enumerate()
        .map(|(e, el)| {
            let jump = left_jump(dg, e);
            let components = el
                .components
                .iter()
                .zip(&jump)
                .map(|(c, &j)| &c.resized(dg.k + 1) + &radau.poly().scaled(j))
                .collect();
            ElementPoly {
                index: e,
                components,
            }
        })
        .collect();
    Ok(PiecewiseSolution {
        mesh: dg.mesh.clone(),
        kind: SolutionKind::DgStar,
        k: dg.k,
        elements,
        traces: dg.traces.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LiftClause {
    /// Local degree at most `k + 1`.
    Degree,
    /// Continuity across nodes.
    Continuity,
    /// Nodal values equal the DG traces.
    NodalTraces,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftViolation {
    pub clause: LiftClause,
    pub element: usize,
    pub value: f64,
}

impl fmt::Display for LiftViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.clause {
            LiftClause::Degree => "degree exceeds k+1",
            LiftClause::Continuity => "discontinuity",
            LiftClause::NodalTraces => "nodal value differs from the DG trace",
        };
        write!(
            f,
            "{what} on element {} (value {:.3e})",
            self.element, self.value
        )
    }
}

/// Checks, in order: degree ≤ k+1, continuity across nodes, and that the
/// endpoint values on every element equal the DG traces.
pub fn check_lift_properties(
    star: &PiecewiseSolution,
    dg: &PiecewiseSolution,
) -> std::result::Result<(), LiftViolation> {
    check_lift_properties_with_tol(star, dg, CONTINUITY_TOL)
}

pub fn check_lift_properties_with_tol(
    star: &PiecewiseSolution,
    dg: &PiecewiseSolution,
    tol: f64,
) -> std::result::Result<(), LiftViolation> {
    let scale = dg.scale();
    let limit = tol * scale;
    for (e, el) in star.elements.iter().enumerate() {
        if el.degree() > dg.k + 1 {
            return Err(LiftViolation {
                clause: LiftClause::Degree,
                element: e,
                value: el.degree() as f64,
            });
        }
    }
    for e in 1..star.elements.len() {
        let gap = max_abs_diff(
            &star.elements[e].left_value(),
            &star.elements[e - 1].right_value(),
        );
        if gap > limit {
            return Err(LiftViolation {
                clause: LiftClause::Continuity,
                element: e,
                value: gap,
            });
        }
    }
    for (e, el) in star.elements.iter().enumerate() {
        let gap = max_abs_diff(&el.left_value(), &dg.traces[e])
            .max(max_abs_diff(&el.right_value(), &dg.traces[e + 1]));
        if gap > limit {
            return Err(LiftViolation {
                clause: LiftClause::NodalTraces,
                element: e,
                value: gap,
            });
        }
    }
    Ok(())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Galerkin residuals of the lifted solution against `f(·, u^DG)`, plus the
/// continuity gaps at `t_0..t_{N-1}` (with `u*(0^-) = u_0`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CgEquationReport {
    /// `residuals[e][c * (k + 1) + j]`.
    pub residuals: Vec<Vec<f64>>,
    pub continuity_gaps: Vec<f64>,
    pub max_residual: f64,
    pub max_gap: f64,
    pub scale: f64,
}

impl CgEquationReport {
    pub fn passes(&self, tol_factor: f64) -> bool {
        self.max_residual.is_finite()
            && self.max_gap.is_finite()
            && self.max_residual <= tol_factor * RESIDUAL_TOL * self.scale
            && self.max_gap <= tol_factor * CONTINUITY_TOL * self.scale
    }
}

/// Assembles `∫_{I_n} P_j (u*)' dt − ∫_{I_n} f(t, u^DG) P_j dt` with the rule and
/// right-hand-side treatment of `cfg`.
///
/// `star` may be any piecewise solution on the same mesh; passing the raw DG
/// solution exposes its jumps in `continuity_gaps`.
pub fn check_cg_equations(
    star: &PiecewiseSolution,
    dg: &PiecewiseSolution,
    p: &OdeProblem,
    cfg: &SolverConfig,
) -> Result<CgEquationReport> {
    require_kind(dg, SolutionKind::Dg)?;
    if star.mesh != dg.mesh || star.elements.len() != dg.elements.len() {
        return Err(Error::Precondition(
            "solutions live on different meshes".into(),
        ));
    }
    if cfg.k != dg.k {
        return Err(Error::Precondition(format!(
            "configuration degree {} differs from solution degree {}",
            cfg.k, dg.k
        )));
    }
    let kernel = Kernel::new(cfg)?;
    let mesh = &dg.mesh;
    let dim = p.dimension();
    let mut residuals = Vec::with_capacity(mesh.num_elements());
    let mut gaps = Vec::with_capacity(mesh.num_elements());
    let mut max_residual = 0.0_f64;
    let mut max_gap = 0.0_f64;
    for e in 0..mesh.num_elements() {
        let load = kernel.load(p, mesh, e, &dg.elements[e])?;
        let mut r = Vec::with_capacity(dim * (cfg.k + 1));
        for c in 0..dim {
            let du = star.elements[e].components[c].derivative();
            for j in 0..=cfg.k {
                // ∫ P_j u_τ dτ is exact from the Legendre coefficients
                let mass = du.coeffs().get(j).copied().unwrap_or(0.0) * 2.0 / (2 * j + 1) as f64;
                r.push(mass - load[c][j]);
            }
        }
        max_residual = r.iter().fold(max_residual, |m, v| m.max(v.abs()));
        residuals.push(r);

        let before = if e == 0 {
            p.u0().to_vec()
        } else {
            star.elements[e - 1].right_value()
        };
        let gap = max_abs_diff(&star.elements[e].left_value(), &before);
        max_gap = max_gap.max(gap);
        gaps.push(gap);
    }
    Ok(CgEquationReport {
        residuals,
        continuity_gaps: gaps,
        max_residual,
        max_gap,
        scale: dg.scale(),
    })
}

/// `S_h(v) = −(û − u)(t_{n-1}^+) v(t_{n-1}^+)` for component 0 of element `e`.
pub fn stabilization_functional(dg: &PiecewiseSolution, e: usize, v: &LegendreCoeffs) -> f64 {
    -left_jump(dg, e)[0] * v.left_value()
}

/// The same functional written as `(û − u)(t_{n-1}^+) ∫_{I_n} v 𝓡' dt`,
/// evaluated by quadrature.
pub fn stabilization_functional_integral(
    dg: &PiecewiseSolution,
    e: usize,
    v: &LegendreCoeffs,
) -> Result<f64> {
    let jump = left_jump(dg, e)[0];
    let dr = radau_left(dg.k)?.poly().derivative();
    // dt and d/dt scale by h/2 and 2/h, which cancel
    let rule = gauss_rule(dg.k.max(v.degree()) + 2)?;
    Ok(jump * rule.integrate(|x| v.eval(x) * dr.eval(x)))
}
