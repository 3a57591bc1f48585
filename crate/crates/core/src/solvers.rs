//! Element-by-element time marching for the continuous (CG) and discontinuous
//! (DG) Galerkin methods.
//!
//! On every element the unknowns are the Legendre coefficients of the local
//! polynomial in the reference variable, one block per state component. With
//! `J = h/2` and test functions `P_j`, `j = 0..=k`, the residuals are
//!
//! * CG (degree `k + 1`): `u(-1) − u_in` and `∫ P_j u' dτ − J ∫ f P_j dτ`;
//! * DG (degree `k`): `−∫ u P_j' dτ + u(1) − (−1)^j u_in − J ∫ f P_j dτ`.
//!
//! Both are solved by Newton's method with a dense partial-pivot solve.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::mesh::{Side, TimeMesh};
use crate::polybasis::{
    gauss_rule, interpolation_matrix, legendre_values, legendre_with_derivative, radau_zeros,
    LegendreCoeffs,
};
use crate::problem::OdeProblem;

/// How `∫ f(t, u) v dt` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsMode {
    /// Gauss quadrature with `quad_points` nodes.
    Quadrature,
    /// `t ↦ f(t, u(t))` is replaced by its interpolant at the mapped zeros of
    /// the left-Radau polynomial, then integrated exactly.
    RadauInterpolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Cg,
    Dg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolutionKind {
    Cg,
    Dg,
    DgStar,
}

impl SolutionKind {
    pub fn label(self) -> &'static str {
        match self {
            SolutionKind::Cg => "CG",
            SolutionKind::Dg => "DG",
            SolutionKind::DgStar => "DG*",
        }
    }
}

/// The two algebraically equivalent ways of writing the DG element equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgForm {
    /// `−∫ u v' + û v |_{t_{n-1}}^{t_n}`.
    IntegratedByParts,
    /// `∫ v u' + S_h(v)` with `S_h(v) = −(û − u)(t_{n-1}^+) v(t_{n-1}^+)`.
    Strong,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// DG degree; CG uses degree `k + 1`.
    pub k: usize,
    pub quad_points: usize,
    pub rhs_mode: RhsMode,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl SolverConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            quad_points: k + 3,
            rhs_mode: RhsMode::Quadrature,
            newton_tol: 1e-13,
            newton_max_iter: 50,
        }
    }

    pub fn with_quad_points(mut self, m: usize) -> Self {
        self.quad_points = m;
        self
    }

    pub fn with_rhs_mode(mut self, mode: RhsMode) -> Self {
        self.rhs_mode = mode;
        self
    }

    /// Smallest rule for which every polynomial integrand in the element
    /// equations is integrated exactly.
    pub fn min_quad_points(&self) -> usize {
        match self.rhs_mode {
            RhsMode::Quadrature => self.k + 2,
            RhsMode::RadauInterpolated => self.k + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.quad_points < self.min_quad_points() {
            return Err(Error::InvalidConfig(format!(
                "{} quadrature points cannot integrate the degree-{} element terms exactly (need at least {})",
                self.quad_points,
                2 * self.k + 1,
                self.min_quad_points()
            )));
        }
        if self.newton_tol.is_nan() || self.newton_tol <= 0.0 {
            return Err(Error::InvalidConfig(
                "Newton tolerance must be positive".into(),
            ));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidConfig(
                "Newton needs at least one iteration".into(),
            ));
        }
        Ok(())
    }
}

/// The local solution on one element, one Legendre series per component.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementPoly {
    pub index: usize,
    pub components: Vec<LegendreCoeffs>,
}

impl ElementPoly {
    pub fn eval(&self, tau: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(tau)).collect()
    }

    pub fn left_value(&self) -> Vec<f64> {
        self.components
            .iter()
            .map(LegendreCoeffs::left_value)
            .collect()
    }

    pub fn right_value(&self) -> Vec<f64> {
        self.components
            .iter()
            .map(LegendreCoeffs::right_value)
            .collect()
    }

    pub fn degree(&self) -> usize {
        self.components
            .iter()
            .map(LegendreCoeffs::degree)
            .max()
            .unwrap_or(0)
    }

    fn from_flat(index: usize, x: &[f64], dim: usize) -> Self {
        let n = x.len() / dim;
        Self {
            index,
            components: (0..dim)
                .map(|c| LegendreCoeffs::new(x[c * n..(c + 1) * n].to_vec()))
                .collect(),
        }
    }

    fn flat(&self, len: usize) -> Vec<f64> {
        self.components
            .iter()
            .flat_map(|c| c.resized(len - 1).into_coeffs())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSolution {
    pub mesh: TimeMesh,
    pub kind: SolutionKind,
    pub k: usize,
    pub elements: Vec<ElementPoly>,
    /// Values at `t_0..t_N`: the upwind trace for DG, nodal values otherwise.
    pub traces: Vec<Vec<f64>>,
}

impl PiecewiseSolution {
    pub fn dimension(&self) -> usize {
        self.traces[0].len()
    }

    /// `u(t^-)` or `u(t^+)` at a node, `u(t)` elsewhere.
    pub fn eval(&self, t: f64, side: Side) -> Result<Vec<f64>> {
        let e = self.mesh.locate(t, side)?;
        let tau = self.mesh.to_reference(e, t)?;
        Ok(self.elements[e].eval(tau))
    }

    pub fn eval_reference(&self, e: usize, tau: f64) -> Vec<f64> {
        self.elements[e].eval(tau)
    }

    /// `1 + max |trace|`, the magnitude used for relative tolerances.
    pub fn scale(&self) -> f64 {
        1.0 + self
            .traces
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Precomputed reference-element data shared by every element of a solve.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    pub k: usize,
    /// `∫ P_j P_i' dτ`, rows `j ≤ k`, columns `i ≤ k + 1`.
    pub deriv_test: Vec<Vec<f64>>,
    /// `∫ P_i P_j' dτ`, rows `j ≤ k`, columns `i ≤ k`.
    pub test_deriv: Vec<Vec<f64>>,
    /// Points where `f` is sampled.
    pub rhs_points: Vec<f64>,
    /// `∫ f P_j dτ ≈ Σ_p rhs_weights[j][p] f(rhs_points[p])`.
    pub rhs_weights: Vec<Vec<f64>>,
}

impl Kernel {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let k = cfg.k;
        let rule = gauss_rule(cfg.quad_points)?;
        let vals: Vec<Vec<(f64, f64)>> = rule
            .nodes()
            .iter()
            .map(|&x| {
                (0..=k + 1)
                    .map(|l| legendre_with_derivative(l, x))
                    .collect()
            })
            .collect();
        let w = rule.weights();
        let deriv_test = (0..=k)
            .map(|j| {
                (0..=k + 1)
                    .map(|i| {
                        (0..rule.len())
                            .map(|q| w[q] * vals[q][j].0 * vals[q][i].1)
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let test_deriv = (0..=k)
            .map(|j| {
                (0..=k)
                    .map(|i| {
                        (0..rule.len())
                            .map(|q| w[q] * vals[q][i].0 * vals[q][j].1)
                            .sum()
                    })
                    .collect()
            })
            .collect();

        let radau_points = radau_zeros(k)?;
        let radau_vinv = interpolation_matrix(&radau_points)?;
        let (rhs_points, rhs_weights) = match cfg.rhs_mode {
            RhsMode::Quadrature => {
                let weights = (0..=k)
                    .map(|j| (0..rule.len()).map(|q| w[q] * vals[q][j].0).collect())
                    .collect();
                (rule.nodes().to_vec(), weights)
            }
            RhsMode::RadauInterpolated => {
                // ∫ I_R f P_j = 2/(2j+1) · (Legendre coefficient j of I_R f)
                let weights = (0..=k)
                    .map(|j| {
                        let s = 2.0 / (2 * j + 1) as f64;
                        (0..=k).map(|z| s * radau_vinv[(j, z)]).collect()
                    })
                    .collect();
                (radau_points, weights)
            }
        };
        Ok(Self {
            k,
            deriv_test,
            test_deriv,
            rhs_points,
            rhs_weights,
        })
    }

    /// `J ∫ f(t, u) P_j dτ` for every component `c` and test index `j`.
    pub fn load(
        &self,
        p: &OdeProblem,
        mesh: &TimeMesh,
        e: usize,
        u: &ElementPoly,
    ) -> Result<Vec<Vec<f64>>> {
        let jac = mesh.jacobian(e);
        let dim = p.dimension();
        let mut out = vec![vec![0.0; self.k + 1]; dim];
        for (pt, &tau) in self.rhs_points.iter().enumerate() {
            let t = mesh.from_reference(e, tau);
            let f = p.evaluate_rhs(t, &u.eval(tau))?;
            for c in 0..dim {
                for j in 0..=self.k {
                    out[c][j] += jac * self.rhs_weights[j][pt] * f[c];
                }
            }
        }
        Ok(out)
    }

    /// Derivative of [`Kernel::load`] with respect to the flat coefficient
    /// vector (component-major, `ncoef` coefficients per component).
    #[allow(clippy::too_many_arguments)]
    fn load_jacobian(
        &self,
        p: &OdeProblem,
        mesh: &TimeMesh,
        e: usize,
        u: &ElementPoly,
        ncoef: usize,
        rows_per_comp: usize,
        row_offset: usize,
        out: &mut DenseMatrix,
    ) -> Result<()> {
        let jac = mesh.jacobian(e);
        let dim = p.dimension();
        for (pt, &tau) in self.rhs_points.iter().enumerate() {
            let t = mesh.from_reference(e, tau);
            let dfdu = p.evaluate_jacobian(t, &u.eval(tau))?;
            let basis = legendre_values(ncoef - 1, tau);
            for c in 0..dim {
                for j in 0..=self.k {
                    let wj = jac * self.rhs_weights[j][pt];
                    if wj == 0.0 {
                        continue;
                    }
                    let row = c * rows_per_comp + row_offset + j;
                    for cc in 0..dim {
                        let d = dfdu[c * dim + cc];
                        if d == 0.0 {
                            continue;
                        }
                        for (i, b) in basis.iter().enumerate() {
                            out[(row, cc * ncoef + i)] -= wj * d * b;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn sign(l: usize) -> f64 {
        if l.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Constant part of the residual Jacobian (the discrete time derivative).
    fn linear_matrix(&self, method: Method, dim: usize, form: DgForm) -> DenseMatrix {
        let k = self.k;
        match method {
            Method::Cg => {
                let n = k + 2;
                let mut a = DenseMatrix::zeros(dim * n);
                for c in 0..dim {
                    let base = c * n;
                    for i in 0..n {
                        a[(base, base + i)] = Self::sign(i);
                        for j in 0..=k {
                            a[(base + 1 + j, base + i)] = self.deriv_test[j][i];
                        }
                    }
                }
                a
            }
            Method::Dg => {
                let n = k + 1;
                let mut a = DenseMatrix::zeros(dim * n);
                for c in 0..dim {
                    let base = c * n;
                    for j in 0..n {
                        for i in 0..n {
                            a[(base + j, base + i)] = match form {
                                DgForm::IntegratedByParts => 1.0 - self.test_deriv[j][i],
                                DgForm::Strong => self.deriv_test[j][i] + Self::sign(i + j),
                            };
                        }
                    }
                }
                a
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn residual(
        &self,
        method: Method,
        form: DgForm,
        p: &OdeProblem,
        mesh: &TimeMesh,
        e: usize,
        u: &ElementPoly,
        inflow: &[f64],
    ) -> Result<Vec<f64>> {
        let dim = p.dimension();
        let ncoef = match method {
            Method::Cg => self.k + 2,
            Method::Dg => self.k + 1,
        };
        let x = u.flat(ncoef);
        let lin = self.linear_matrix(method, dim, form);
        let mut r = lin.mul_vec(&x);
        let load = self.load(p, mesh, e, u)?;
        for c in 0..dim {
            match method {
                Method::Cg => {
                    let base = c * (self.k + 2);
                    r[base] -= inflow[c];
                    for j in 0..=self.k {
                        r[base + 1 + j] -= load[c][j];
                    }
                }
                Method::Dg => {
                    let base = c * (self.k + 1);
                    for j in 0..=self.k {
                        r[base + j] -= Self::sign(j) * inflow[c] + load[c][j];
                    }
                }
            }
        }
        Ok(r)
    }
}

/// The element residual of `candidate` (component-major; for CG the first
/// entry of each block is the continuity residual).
pub fn assemble_element_residual(
    method: Method,
    p: &OdeProblem,
    mesh: &TimeMesh,
    e: usize,
    cfg: &SolverConfig,
    candidate: &ElementPoly,
    inflow: &[f64],
) -> Result<Vec<f64>> {
    let kernel = Kernel::new(cfg)?;
    kernel.residual(
        method,
        DgForm::IntegratedByParts,
        p,
        mesh,
        e,
        candidate,
        inflow,
    )
}

/// DG element residual in either form; the two agree up to roundoff.
pub fn assemble_dg_residual(
    form: DgForm,
    p: &OdeProblem,
    mesh: &TimeMesh,
    e: usize,
    cfg: &SolverConfig,
    candidate: &ElementPoly,
    inflow: &[f64],
) -> Result<Vec<f64>> {
    let kernel = Kernel::new(cfg)?;
    kernel.residual(Method::Dg, form, p, mesh, e, candidate, inflow)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn newton_element(
    kernel: &Kernel,
    method: Method,
    p: &OdeProblem,
    mesh: &TimeMesh,
    e: usize,
    cfg: &SolverConfig,
    inflow: &[f64],
) -> Result<ElementPoly> {
    let dim = p.dimension();
    let ncoef = match method {
        Method::Cg => kernel.k + 2,
        Method::Dg => kernel.k + 1,
    };
    let rows_per_comp = ncoef;
    let row_offset = match method {
        Method::Cg => 1,
        Method::Dg => 0,
    };
    let lin = kernel.linear_matrix(method, dim, DgForm::IntegratedByParts);

    let mut x = vec![0.0; dim * ncoef];
    for c in 0..dim {
        x[c * ncoef] = inflow[c];
    }
    let inflow_norm = inf_norm(inflow);
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.newton_max_iter {
        let u = ElementPoly::from_flat(e, &x, dim);
        let r = kernel.residual(method, DgForm::IntegratedByParts, p, mesh, e, &u, inflow)?;
        residual = inf_norm(&r);
        let scale = 1.0 + inflow_norm + inf_norm(&x);
        let small = residual <= cfg.newton_tol * scale;
        let mut load_jac = DenseMatrix::zeros(lin.size());
        kernel.load_jacobian(
            p,
            mesh,
            e,
            &u,
            ncoef,
            rows_per_comp,
            row_offset,
            &mut load_jac,
        )?;
        let reference = lin.max_abs().max(load_jac.max_abs());
        let jac = lin.add(&load_jac);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = jac
            .solve_with_reference(&rhs, reference)
            .map_err(|err| match err {
                Error::Singular => Error::SingularSystem { element: e },
                other => other,
            })?;
        x.iter_mut().zip(&delta).for_each(|(xi, d)| *xi += d);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                t: mesh.element(e).0,
            });
        }
        // one more correction once the residual is small removes the defect
        // left at the stopping tolerance
        if small {
            return Ok(ElementPoly::from_flat(e, &x, dim));
        }
        // a converged step on a roundoff-limited residual
        if inf_norm(&delta) <= cfg.newton_tol * (1.0 + inf_norm(&x)) {
            let u = ElementPoly::from_flat(e, &x, dim);
            let r = kernel.residual(method, DgForm::IntegratedByParts, p, mesh, e, &u, inflow)?;
            if inf_norm(&r) <= 1e3 * cfg.newton_tol * (1.0 + inflow_norm + inf_norm(&x)) {
                return Ok(u);
            }
        }
    }
    Err(Error::NewtonDiverged {
        element: e,
        residual,
        iterations: cfg.newton_max_iter,
    })
}

fn check_problem(p: &OdeProblem, mesh: &TimeMesh) -> Result<()> {
    let slack = 1e-12 * p.horizon();
    if (mesh.horizon() - p.horizon()).abs() > slack {
        return Err(Error::InvalidMesh(format!(
            "mesh ends at {} but the problem horizon is {}",
            mesh.horizon(),
            p.horizon()
        )));
    }
    Ok(())
}

/// CG: trial `P_{k+1}`, test `P_k`, continuity at the left node.
pub fn solve_cg(p: &OdeProblem, mesh: &TimeMesh, cfg: &SolverConfig) -> Result<PiecewiseSolution> {
    check_problem(p, mesh)?;
    let kernel = Kernel::new(cfg)?;
    let mut elements = Vec::with_capacity(mesh.num_elements());
    let mut traces = Vec::with_capacity(mesh.num_elements() + 1);
    let mut inflow = p.u0().to_vec();
    for e in 0..mesh.num_elements() {
        let u = newton_element(&kernel, Method::Cg, p, mesh, e, cfg, &inflow)?;
        if e == 0 {
            traces.push(u.left_value());
        }
        inflow = u.right_value();
        traces.push(inflow.clone());
        elements.push(u);
    }
    Ok(PiecewiseSolution {
        mesh: mesh.clone(),
        kind: SolutionKind::Cg,
        k: cfg.k,
        elements,
        traces,
    })
}

/// DG: trial and test `P_k`, upwind trace `û(t_{n-1}) = u(t_{n-1}^-)`.
pub fn solve_dg(p: &OdeProblem, mesh: &TimeMesh, cfg: &SolverConfig) -> Result<PiecewiseSolution> {
    check_problem(p, mesh)?;
    let kernel = Kernel::new(cfg)?;
    let mut elements = Vec::with_capacity(mesh.num_elements());
    let mut traces = Vec::with_capacity(mesh.num_elements() + 1);
    traces.push(p.u0().to_vec());
    for e in 0..mesh.num_elements() {
        let u = newton_element(&kernel, Method::Dg, p, mesh, e, cfg, &traces[e])?;
        traces.push(u.right_value());
        elements.push(u);
    }
    Ok(PiecewiseSolution {
        mesh: mesh.clone(),
        kind: SolutionKind::Dg,
        k: cfg.k,
        elements,
        traces,
    })
}

/// Degree-`k` interpolant of `t ↦ f(t, u(t))` at the mapped left-Radau zeros
/// of element `e`, in the reference variable, one series per component.
pub fn radau_interpolate_rhs(
    p: &OdeProblem,
    mesh: &TimeMesh,
    e: usize,
    k: usize,
    u_elem: &ElementPoly,
) -> Result<Vec<LegendreCoeffs>> {
    let zeros = radau_zeros(k)?;
    let dim = p.dimension();
    let mut values = vec![Vec::with_capacity(k + 1); dim];
    for &z in &zeros {
        let f = p.evaluate_rhs(mesh.from_reference(e, z), &u_elem.eval(z))?;
        for c in 0..dim {
            values[c].push(f[c]);
        }
    }
    values
        .iter()
        .map(|v| LegendreCoeffs::interpolate(&zeros, v))
        .collect()
}
