//! Polynomials on the reference interval `[-1, 1]`.
//!
//! Everything is stored in the Legendre basis: `p(τ) = Σ c_ℓ P_ℓ(τ)` with the
//! usual normalisation `P_ℓ(1) = 1`. The left-Radau polynomial, the Gauss
//! rules and all element polynomials used by the solvers live here.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// `P_ℓ(τ)` by the three-term recurrence.
pub fn legendre_eval(degree: usize, tau: f64) -> f64 {
    legendre_with_derivative(degree, tau).0
}

/// `(P_ℓ(τ), P_ℓ'(τ))`. The derivative is carried through the recurrence, so
/// it is well defined at the endpoints.
pub fn legendre_with_derivative(degree: usize, tau: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    for l in 0..degree {
        let lf = l as f64;
        let p_next = ((2.0 * lf + 1.0) * tau * p - lf * p_prev) / (lf + 1.0);
        let d_next = ((2.0 * lf + 1.0) * (p + tau * d) - lf * d_prev) / (lf + 1.0);
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// Values `P_0(τ), …, P_degree(τ)`.
pub fn legendre_values(degree: usize, tau: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree + 1);
    out.push(1.0);
    if degree >= 1 {
        out.push(tau);
    }
    for l in 1..degree {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0) * tau * out[l] - lf * out[l - 1]) / (lf + 1.0);
        out.push(next);
    }
    out
}

/// A polynomial on `[-1, 1]` in Legendre coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LegendreCoeffs {
    coeffs: Vec<f64>,
}

impl LegendreCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            return Self::zero(0);
        }
        Self { coeffs }
    }

    /// The zero polynomial stored with `degree + 1` coefficients.
    pub fn zero(degree: usize) -> Self {
        Self {
            coeffs: vec![0.0; degree + 1],
        }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// The basis function `P_ℓ`.
    pub fn basis(degree: usize) -> Self {
        let mut p = Self::zero(degree);
        p.coeffs[degree] = 1.0;
        p
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Storage degree (`len − 1`); trailing zeros are not trimmed.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Clenshaw summation of `Σ c_ℓ P_ℓ(τ)`.
    pub fn eval(&self, tau: f64) -> f64 {
        let n = self.coeffs.len();
        let (mut b1, mut b2) = (0.0, 0.0);
        for l in (0..n).rev() {
            let lf = l as f64;
            let alpha = (2.0 * lf + 1.0) * tau / (lf + 1.0);
            let beta = -(lf + 1.0) / (lf + 2.0);
            let b0 = self.coeffs[l] + alpha * b1 + beta * b2;
            b2 = b1;
            b1 = b0;
        }
        b1
    }

    /// `p(1) = Σ c_ℓ`.
    pub fn right_value(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// `p(-1) = Σ (-1)^ℓ c_ℓ`.
    pub fn left_value(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| if l % 2 == 0 { *c } else { -*c })
            .sum()
    }

    /// Exact derivative, `d/dτ`, one degree lower (degree 0 stays a zero constant).
    pub fn derivative(&self) -> Self {
        let n = self.degree();
        if n == 0 {
            return Self::zero(0);
        }
        // P_i' = Σ_{j < i, i - j odd} (2j + 1) P_j
        let mut out = vec![0.0; n];
        let mut odd_tail = [0.0_f64; 2];
        for j in (0..n).rev() {
            odd_tail[j % 2] += self.coeffs[j + 1];
            out[j] = (2 * j + 1) as f64 * odd_tail[j % 2];
        }
        Self { coeffs: out }
    }

    /// `∫_{-1}^{1} p(τ) dτ`.
    pub fn integral(&self) -> f64 {
        2.0 * self.coeffs[0]
    }

    /// Copy padded (or truncated) to `degree + 1` coefficients.
    pub fn resized(&self, degree: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(degree + 1, 0.0);
        Self { coeffs: c }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Least-squares projection of `f` onto `P_degree` with the given rule.
    pub fn project<F: Fn(f64) -> f64>(f: F, degree: usize, rule: &QuadratureRule) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
            let fx = f(x);
            for (l, p) in legendre_values(degree, x).into_iter().enumerate() {
                coeffs[l] += w * fx * p;
            }
        }
        for (l, c) in coeffs.iter_mut().enumerate() {
            *c *= (2 * l + 1) as f64 / 2.0;
        }
        Self { coeffs }
    }

    /// The interpolant through `(nodes[i], values[i])`, degree `nodes.len() − 1`.
    pub fn interpolate(nodes: &[f64], values: &[f64]) -> Result<Self> {
        assert_eq!(nodes.len(), values.len());
        let vinv = interpolation_matrix(nodes)?;
        Ok(Self {
            coeffs: vinv.mul_vec(values),
        })
    }
}

/// Inverse of the Legendre–Vandermonde matrix `V[i][j] = P_j(nodes[i])`; maps
/// nodal values to Legendre coefficients.
pub fn interpolation_matrix(nodes: &[f64]) -> Result<DenseMatrix> {
    let n = nodes.len();
    let mut v = DenseMatrix::zeros(n);
    for (i, &x) in nodes.iter().enumerate() {
        for (j, p) in legendre_values(n - 1, x).into_iter().enumerate() {
            v[(i, j)] = p;
        }
    }
    v.inverse()
}

fn zip_coeffs(
    a: &LegendreCoeffs,
    b: &LegendreCoeffs,
    op: impl Fn(f64, f64) -> f64,
) -> LegendreCoeffs {
    let n = a.coeffs.len().max(b.coeffs.len());
    let get = |p: &LegendreCoeffs, i: usize| p.coeffs.get(i).copied().unwrap_or(0.0);
    LegendreCoeffs {
        coeffs: (0..n).map(|i| op(get(a, i), get(b, i))).collect(),
    }
}

impl Add for &LegendreCoeffs {
    type Output = LegendreCoeffs;
    fn add(self, rhs: &LegendreCoeffs) -> LegendreCoeffs {
        zip_coeffs(self, rhs, |x, y| x + y)
    }
}

impl Sub for &LegendreCoeffs {
    type Output = LegendreCoeffs;
    fn sub(self, rhs: &LegendreCoeffs) -> LegendreCoeffs {
        zip_coeffs(self, rhs, |x, y| x - y)
    }
}

impl Neg for &LegendreCoeffs {
    type Output = LegendreCoeffs;
    fn neg(self) -> LegendreCoeffs {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &LegendreCoeffs {
    type Output = LegendreCoeffs;
    fn mul(self, s: f64) -> LegendreCoeffs {
        self.scaled(s)
    }
}

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Largest supported Gauss rule.
pub const MAX_GAUSS_POINTS: usize = 256;

/// The `m`-point Gauss–Legendre rule, exact up to degree `2m − 1`.
pub fn gauss_rule(m: usize) -> Result<QuadratureRule> {
    if m == 0 || m > MAX_GAUSS_POINTS {
        return Err(Error::Quadrature(m));
    }
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    // roots are symmetric; compute the non-negative half and mirror
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// The left-Radau polynomial `R_{k+1} = ½P_{k+1}(-1)P_{k+1} + ½P_k(-1)P_k`
/// together with its `k + 1` zeros.
///
/// `R_{k+1}(1) = 0`, `R_{k+1}(-1) = 1`, and it is orthogonal to `P_{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadauPoly {
    k: usize,
    poly: LegendreCoeffs,
    zeros: Vec<f64>,
}

impl RadauPoly {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn poly(&self) -> &LegendreCoeffs {
        &self.poly
    }

    /// Zeros in `(-1, 1]`, ascending; the last one is exactly `1`.
    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.poly.eval(tau)
    }
}

fn radau_coeffs(k: usize) -> LegendreCoeffs {
    let sign = |l: usize| if l.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut c = vec![0.0; k + 2];
    c[k + 1] = 0.5 * sign(k + 1);
    c[k] = 0.5 * sign(k);
    LegendreCoeffs::new(c)
}

pub fn radau_left(k: usize) -> Result<RadauPoly> {
    let poly = radau_coeffs(k);
    let zeros = find_radau_zeros(k, &poly)?;
    Ok(RadauPoly { k, poly, zeros })
}

pub fn radau_zeros(k: usize) -> Result<Vec<f64>> {
    radau_left(k).map(|r| r.zeros)
}

const ZERO_RESIDUAL_TOL: f64 = 1e-13;

fn find_radau_zeros(k: usize, poly: &LegendreCoeffs) -> Result<Vec<f64>> {
    let dpoly = poly.derivative();
    let mut found = vec![1.0];
    let denom = (2 * k + 1) as f64;
    for j in 1..=k {
        // approximate Gauss–Radau abscissae as seeds
        let mut x = (2.0 * std::f64::consts::PI * j as f64 / denom).cos();
        let mut converged = false;
        for _ in 0..200 {
            let p = poly.eval(x);
            let d = dpoly.eval(x);
            let deflation: f64 = found.iter().map(|r| 1.0 / (x - r)).sum();
            let step = p / (d - p * deflation);
            if !step.is_finite() {
                break;
            }
            x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged && poly.eval(x).abs() > ZERO_RESIDUAL_TOL {
            return Err(Error::RootFinding { k });
        }
        // polish against the undeflated polynomial
        for _ in 0..2 {
            let d = dpoly.eval(x);
            if d != 0.0 {
                x -= poly.eval(x) / d;
            }
        }
        found.push(x);
    }
    found.sort_by(f64::total_cmp);
    let ok = found
        .iter()
        .all(|&z| z > -1.0 && z <= 1.0 && poly.eval(z).abs() <= ZERO_RESIDUAL_TOL)
        && found.windows(2).all(|w| w[1] - w[0] > 1e-10);
    if !ok {
        return Err(Error::RootFinding { k });
    }
    Ok(found)
}
