//! Error norms, observed orders under mesh halving, and the CG / lifted-DG
//! coincidence check.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::TimeMesh;
use crate::polybasis::{gauss_rule, radau_zeros};
use crate::postprocess::postprocess;
use crate::problem::OdeProblem;
use crate::solvers::{solve_cg, solve_dg, PiecewiseSolution, RhsMode, SolutionKind, SolverConfig};

/// Equispaced samples per element for max-norm and coincidence measurements.
pub const DEFAULT_SAMPLES: usize = 20;
/// Errors below `ROUNDOFF_FLOOR · scale` are excluded from order estimates.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;
/// Coincidence gap tolerance, relative to the solution scale.
pub const COINCIDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub l2: f64,
    pub linf: f64,
    pub nodal: f64,
    pub radau_pts: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L2,
    Linf,
    Nodal,
    RadauPts,
}

impl Norm {
    pub const ALL: [Norm; 4] = [Norm::L2, Norm::Linf, Norm::Nodal, Norm::RadauPts];

    pub fn label(self) -> &'static str {
        match self {
            Norm::L2 => "l2",
            Norm::Linf => "linf",
            Norm::Nodal => "nodal",
            Norm::RadauPts => "radau_pts",
        }
    }
}

impl ErrorSummary {
    pub fn get(&self, norm: Norm) -> f64 {
        match norm {
            Norm::L2 => self.l2,
            Norm::Linf => self.linf,
            Norm::Nodal => self.nodal,
            Norm::RadauPts => self.radau_pts,
        }
    }

    pub fn max(&self) -> f64 {
        Norm::ALL.iter().fold(0.0_f64, |m, &n| m.max(self.get(n)))
    }
}

fn euclid_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Equispaced reference points including both endpoints.
pub fn sample_points(samples: usize) -> Vec<f64> {
    let s = samples.max(2);
    (0..s)
        .map(|i| -1.0 + 2.0 * i as f64 / (s - 1) as f64)
        .collect()
}

pub fn error_summary(
    sol: &PiecewiseSolution,
    p: &OdeProblem,
    samples_per_element: usize,
) -> Result<ErrorSummary> {
    if !p.has_exact() {
        return Err(Error::MissingExact(p.name().to_string()));
    }
    let mesh = &sol.mesh;
    let rule = gauss_rule(sol.k + 4)?;
    let zeros = radau_zeros(sol.k)?;
    let taus = sample_points(samples_per_element);
    let mut sq = 0.0;
    let mut linf = 0.0_f64;
    let mut nodal = 0.0_f64;
    let mut radau = 0.0_f64;
    for (e, el) in sol.elements.iter().enumerate() {
        let err_at = |tau: f64| -> Result<f64> {
            let t = mesh.from_reference(e, tau);
            Ok(euclid_diff(&el.eval(tau), &p.exact_at(t)?))
        };
        let mut local = 0.0;
        for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
            local += w * err_at(x)?.powi(2);
        }
        sq += mesh.jacobian(e) * local;
        for &tau in &taus {
            linf = linf.max(err_at(tau)?);
        }
        for &z in &zeros {
            radau = radau.max(err_at(z)?);
        }
        let (_, right) = mesh.element(e);
        nodal = nodal.max(euclid_diff(&el.right_value(), &p.exact_at(right)?));
    }
    Ok(ErrorSummary {
        l2: sq.sqrt(),
        linf,
        nodal,
        radau_pts: radau,
    })
}

/// `log2(e_coarse / e_fine)`, or `None` when either error sits at the roundoff floor.
pub fn observed_order(coarse: f64, fine: f64, floor: f64) -> Option<f64> {
    if coarse < floor || fine < floor || !(coarse.is_finite() && fine.is_finite()) {
        return None;
    }
    Some((coarse / fine).log2())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    pub level: usize,
    pub elements: usize,
    pub h: f64,
    pub dg: ErrorSummary,
    pub dg_star: ErrorSummary,
    pub cg: ErrorSummary,
    pub scale: f64,
}

impl LevelResult {
    pub fn summary(&self, kind: SolutionKind) -> &ErrorSummary {
        match kind {
            SolutionKind::Dg => &self.dg,
            SolutionKind::DgStar => &self.dg_star,
            SolutionKind::Cg => &self.cg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub config: SolverConfig,
    pub levels: Vec<LevelResult>,
}

pub const KINDS: [SolutionKind; 3] = [SolutionKind::Dg, SolutionKind::DgStar, SolutionKind::Cg];

impl ConvergenceReport {
    pub fn scale(&self) -> f64 {
        self.levels.iter().fold(1.0_f64, |m, l| m.max(l.scale))
    }

    pub fn errors(&self, kind: SolutionKind, norm: Norm) -> Vec<f64> {
        self.levels
            .iter()
            .map(|l| l.summary(kind).get(norm))
            .collect()
    }

    /// Orders between consecutive levels; entry `i` compares levels `i` and `i + 1`.
    pub fn orders(&self, kind: SolutionKind, norm: Norm) -> Vec<Option<f64>> {
        let floor = ROUNDOFF_FLOOR * self.scale();
        let errs = self.errors(kind, norm);
        errs.windows(2)
            .zip(self.levels.windows(2))
            .map(|(e, l)| {
                observed_order(e[0], e[1], floor)
                    .map(|o| o * (2.0_f64).ln() / (l[0].h / l[1].h).ln())
            })
            .collect()
    }

    /// The order on the finest pair above the roundoff floor.
    pub fn finest_order(&self, kind: SolutionKind, norm: Norm) -> Option<f64> {
        self.orders(kind, norm).into_iter().rev().flatten().next()
    }
}

pub fn convergence_study(
    p: &OdeProblem,
    cfg: &SolverConfig,
    levels: usize,
    coarsest: usize,
) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(Error::InvalidConfig(format!(
            "a convergence study needs at least 3 levels, got {levels}"
        )));
    }
    if coarsest == 0 {
        return Err(Error::InvalidConfig(
            "coarsest mesh needs at least one element".into(),
        ));
    }
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        let n = coarsest << level;
        let mesh = TimeMesh::uniform(n, p.horizon())?;
        let dg = solve_dg(p, &mesh, cfg)?;
        let star = postprocess(&dg)?;
        let cg = solve_cg(p, &mesh, cfg)?;
        out.push(LevelResult {
            level,
            elements: n,
            h: mesh.max_length(),
            dg: error_summary(&dg, p, DEFAULT_SAMPLES)?,
            dg_star: error_summary(&star, p, DEFAULT_SAMPLES)?,
            cg: error_summary(&cg, p, DEFAULT_SAMPLES)?,
            scale: dg.scale().max(cg.scale()),
        });
    }
    Ok(ConvergenceReport {
        problem: p.name().to_string(),
        config: cfg.clone(),
        levels: out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceReport {
    pub gap: f64,
    pub scale: f64,
    /// Whether the exact-coincidence precondition held.
    pub expected_exact: bool,
}

impl CoincidenceReport {
    pub fn passes(&self, tol_factor: f64) -> bool {
        self.gap <= tol_factor * COINCIDENCE_TOL * self.scale
    }
}

/// Max sampled gap between two solutions on the same mesh.
pub fn max_gap(a: &PiecewiseSolution, b: &PiecewiseSolution, samples_per_element: usize) -> f64 {
    let taus = sample_points(samples_per_element);
    a.elements
        .iter()
        .zip(&b.elements)
        .flat_map(|(x, y)| {
            taus.iter()
                .map(move |&t| euclid_diff(&x.eval(t), &y.eval(t)))
        })
        .fold(0.0, f64::max)
}

/// Solves with both methods, lifts the DG solution and measures the gap to
/// CG. Exact coincidence is only expected when `f` ignores `u` or the
/// right-hand side is Radau-interpolated; otherwise `force` must be set.
pub fn check_coincidence(
    p: &OdeProblem,
    mesh: &TimeMesh,
    cfg: &SolverConfig,
    force: bool,
) -> Result<CoincidenceReport> {
    let expected_exact = !p.is_state_dependent() || cfg.rhs_mode == RhsMode::RadauInterpolated;
    if !expected_exact && !force {
        return Err(Error::Precondition(
            "f depends on u and the right-hand side is not Radau-interpolated; the methods need not coincide".into(),
        ));
    }
    let dg = solve_dg(p, mesh, cfg)?;
    let star = postprocess(&dg)?;
    let cg = solve_cg(p, mesh, cfg)?;
    Ok(CoincidenceReport {
        gap: max_gap(&star, &cg, DEFAULT_SAMPLES),
        scale: dg.scale().max(cg.scale()),
        expected_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin;

    #[test]
    fn exact_solutions_have_zero_error() {
        let p = builtin("polynomial").unwrap();
        let mesh = TimeMesh::uniform(4, 1.0).unwrap();
        let cfg = SolverConfig::new(2);
        let cg = solve_cg(&p, &mesh, &cfg).unwrap();
        let s = error_summary(&cg, &p, 20).unwrap();
        assert!(s.max() <= 1e-11, "{s:?}");
        let star = postprocess(&solve_dg(&p, &mesh, &cfg).unwrap()).unwrap();
        assert!(error_summary(&star, &p, 20).unwrap().max() <= 1e-11);
    }

    #[test]
    fn missing_exact_is_an_error() {
        let p = OdeProblem::new(
            "x",
            vec![1.0],
            1.0,
            std::sync::Arc::new(|_, u: &[f64]| vec![-u[0]]),
        )
        .unwrap();
        let mesh = TimeMesh::uniform(2, 1.0).unwrap();
        let dg = solve_dg(&p, &mesh, &SolverConfig::new(1)).unwrap();
        assert!(matches!(
            error_summary(&dg, &p, 20),
            Err(Error::MissingExact(_))
        ));
    }

    #[test]
    fn cosine_summaries_agree_between_cg_and_star() {
        let p = builtin("cosine").unwrap();
        let mesh = TimeMesh::uniform(8, 1.0).unwrap();
        let cfg = SolverConfig::new(1);
        let star = postprocess(&solve_dg(&p, &mesh, &cfg).unwrap()).unwrap();
        let cg = solve_cg(&p, &mesh, &cfg).unwrap();
        let a = error_summary(&star, &p, 20).unwrap();
        let b = error_summary(&cg, &p, 20).unwrap();
        for n in Norm::ALL {
            assert!((a.get(n) - b.get(n)).abs() <= 1e-10);
        }
    }

    #[test]
    fn dg_nodal_error_ratio_on_decay() {
        // k = 1: nodal order 2k + 1 = 3
        let p = builtin("decay").unwrap();
        let cfg = SolverConfig::new(1);
        let e8 = error_summary(
            &solve_dg(&p, &TimeMesh::uniform(8, 1.0).unwrap(), &cfg).unwrap(),
            &p,
            20,
        )
        .unwrap();
        let e16 = error_summary(
            &solve_dg(&p, &TimeMesh::uniform(16, 1.0).unwrap(), &cfg).unwrap(),
            &p,
            20,
        )
        .unwrap();
        let ratio = e8.nodal / e16.nodal;
        assert!((ratio - 8.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn dg_k1_nodal_error_matches_hand_oracle() {
        // DG(1) on u' = −u is the 2-stage Radau IIA map with stability
        // function R(z) = (1 + z/3) / (1 − 2z/3 + z²/6), z = −h.
        let p = builtin("decay").unwrap();
        let n = 8;
        let h = 1.0 / n as f64;
        let z = -h;
        let r = (1.0 + z / 3.0) / (1.0 - 2.0 * z / 3.0 + z * z / 6.0);
        let dg = solve_dg(
            &p,
            &TimeMesh::uniform(n, 1.0).unwrap(),
            &SolverConfig::new(1),
        )
        .unwrap();
        let mut u = 1.0;
        for e in 0..n {
            u *= r;
            assert!((dg.traces[e + 1][0] - u).abs() < 1e-14);
        }
    }

    #[test]
    fn observed_order_floor() {
        assert_eq!(observed_order(1e-3, 1.25e-4, 1e-12), Some(3.0));
        assert_eq!(observed_order(1e-13, 1e-14, 1e-12), None);
    }

    #[test]
    fn study_needs_three_levels() {
        let p = builtin("decay").unwrap();
        assert!(convergence_study(&p, &SolverConfig::new(1), 2, 4).is_err());
    }

    #[test]
    fn study_orders_riccati_k2() {
        let p = builtin("riccati").unwrap();
        let report = convergence_study(&p, &SolverConfig::new(2), 4, 4).unwrap();
        let o = report.finest_order(SolutionKind::DgStar, Norm::L2).unwrap();
        assert!((o - 4.0).abs() <= 0.2, "{o}");
    }

    #[test]
    fn polynomial_orders_are_not_applicable() {
        let p = builtin("polynomial").unwrap();
        let report = convergence_study(&p, &SolverConfig::new(3), 3, 2).unwrap();
        for kind in KINDS {
            assert!(report.finest_order(kind, Norm::L2).is_none());
        }
    }

    #[test]
    fn coincidence_precondition() {
        let p = builtin("riccati").unwrap();
        let mesh = TimeMesh::uniform(8, 1.0).unwrap();
        let cfg = SolverConfig::new(2);
        assert!(matches!(
            check_coincidence(&p, &mesh, &cfg, false),
            Err(Error::Precondition(_))
        ));
        let forced = check_coincidence(&p, &mesh, &cfg, true).unwrap();
        assert!(!forced.expected_exact);
        assert!(
            forced.gap > 1e-12,
            "quadrature mode should not coincide exactly"
        );
        let radau = cfg.with_rhs_mode(RhsMode::RadauInterpolated);
        assert!(check_coincidence(&p, &mesh, &radau, false)
            .unwrap()
            .passes(1.0));
    }

    #[test]
    fn cosine_coincides() {
        let p = builtin("cosine").unwrap();
        let mesh = TimeMesh::uniform(8, 1.0).unwrap();
        let r = check_coincidence(&p, &mesh, &SolverConfig::new(1), false).unwrap();
        assert!(r.gap <= 1e-10, "{}", r.gap);
    }
}
