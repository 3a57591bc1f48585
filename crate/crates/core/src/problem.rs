//! Initial value problems `u' = f(t, u)`, `u(0) = u_0`, and the built-in
//! corpus used by the verification harness.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rhs = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
/// Row-major `dim × dim` Jacobian `∂f/∂u`.
pub type RhsJacobian = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
pub type ExactSolution = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct OdeProblem {
    name: String,
    dimension: usize,
    rhs: Rhs,
    rhs_du: Option<RhsJacobian>,
    u0: Vec<f64>,
    horizon: f64,
    exact: Option<ExactSolution>,
    state_dependent: bool,
}

impl fmt::Debug for OdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeProblem")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("u0", &self.u0)
            .field("horizon", &self.horizon)
            .field("has_jacobian", &self.rhs_du.is_some())
            .field("has_exact", &self.exact.is_some())
            .field("state_dependent", &self.state_dependent)
            .finish()
    }
}

impl OdeProblem {
    pub fn new(name: impl Into<String>, u0: Vec<f64>, horizon: f64, rhs: Rhs) -> Result<Self> {
        if u0.is_empty() {
            return Err(Error::Descriptor(
                "initial value must have at least one component".into(),
            ));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Descriptor(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self {
            name: name.into(),
            dimension: u0.len(),
            rhs,
            rhs_du: None,
            u0,
            horizon,
            exact: None,
            state_dependent: true,
        })
    }

    pub fn with_jacobian(mut self, jac: RhsJacobian) -> Self {
        self.rhs_du = Some(jac);
        self
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    /// Declares that `f` depends on `t` only.
    pub fn time_only(mut self) -> Self {
        self.state_dependent = false;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Descriptor(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn u0(&self) -> &[f64] {
        &self.u0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn has_jacobian(&self) -> bool {
        self.rhs_du.is_some()
    }

    pub fn is_state_dependent(&self) -> bool {
        self.state_dependent
    }

    /// `f(t, u)`; fails on non-finite output.
    pub fn evaluate_rhs(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dimension {
            return Err(Error::Dimension {
                expected: self.dimension,
                got: u.len(),
            });
        }
        let out = (self.rhs)(t, u);
        if out.len() != self.dimension {
            return Err(Error::Dimension {
                expected: self.dimension,
                got: out.len(),
            });
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        Ok(out)
    }

    /// `∂f/∂u` row-major; forward differences with step `√ε·(1 + |u_i|)` when
    /// no analytic Jacobian was supplied.
    pub fn evaluate_jacobian(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let d = self.dimension;
        if let Some(jac) = &self.rhs_du {
            let out = jac(t, u);
            if out.len() != d * d {
                return Err(Error::Dimension {
                    expected: d * d,
                    got: out.len(),
                });
            }
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { t });
            }
            return Ok(out);
        }
        let f0 = self.evaluate_rhs(t, u)?;
        let mut out = vec![0.0; d * d];
        let mut up = u.to_vec();
        for j in 0..d {
            let step = f64::EPSILON.sqrt() * (1.0 + u[j].abs());
            up[j] = u[j] + step;
            let f1 = self.evaluate_rhs(t, &up)?;
            up[j] = u[j];
            for i in 0..d {
                out[i * d + j] = (f1[i] - f0[i]) / step;
            }
        }
        Ok(out)
    }

    pub fn exact_at(&self, t: f64) -> Result<Vec<f64>> {
        let exact = self
            .exact
            .as_ref()
            .ok_or_else(|| Error::MissingExact(self.name.clone()))?;
        Ok(exact(t))
    }
}

/// Parameters of a registry entry, e.g. `{"lambda": -1.0}`.
pub type Params = BTreeMap<String, f64>;

/// On-disk problem descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDescriptor {
    pub name: String,
    pub rhs: String,
    #[serde(default)]
    pub params: Params,
    pub u0: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl ProblemDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<OdeProblem> {
        build_rhs(
            &self.name,
            &self.rhs,
            &self.params,
            self.u0.clone(),
            self.horizon,
        )
    }
}

/// Registry keys for closed-form right-hand sides.
pub const RHS_KEYS: &[&str] = &[
    "zero",
    "polynomial",
    "cosine",
    "linear",
    "riccati",
    "oscillator",
];

fn param(params: &Params, key: &str, default: f64) -> Result<f64> {
    let v = params.get(key).copied().unwrap_or(default);
    if !v.is_finite() {
        return Err(Error::Descriptor(format!(
            "parameter `{key}` must be finite"
        )));
    }
    Ok(v)
}

fn check_params(rhs: &str, params: &Params, allowed: &[&str]) -> Result<()> {
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Descriptor(format!(
            "rhs `{rhs}` does not take parameter `{k}`"
        )));
    }
    Ok(())
}

/// Builds a problem from a registry key. Scalar families act componentwise on
/// any dimension; `oscillator` needs exactly two components.
pub fn build_rhs(
    name: &str,
    rhs: &str,
    params: &Params,
    u0: Vec<f64>,
    horizon: f64,
) -> Result<OdeProblem> {
    let dim = u0.len();
    let init = u0.clone();
    let problem = match rhs {
        "zero" => {
            check_params(rhs, params, &[])?;
            OdeProblem::new(name, u0, horizon, Arc::new(move |_, _| vec![0.0; dim]))?
                .with_jacobian(Arc::new(move |_, _| vec![0.0; dim * dim]))
                .with_exact(Arc::new(move |_| init.clone()))
                .time_only()
        }
        "polynomial" => {
            // f = 3t² − 2t + 1, u = u0 + t³ − t² + t
            check_params(rhs, params, &[])?;
            OdeProblem::new(
                name,
                u0,
                horizon,
                Arc::new(move |t, _| vec![3.0 * t * t - 2.0 * t + 1.0; dim]),
            )?
            .with_jacobian(Arc::new(move |_, _| vec![0.0; dim * dim]))
            .with_exact(Arc::new(move |t| {
                init.iter().map(|c| c + t * t * t - t * t + t).collect()
            }))
            .time_only()
        }
        "cosine" => {
            check_params(rhs, params, &["omega"])?;
            let w = param(params, "omega", 1.0)?;
            if w == 0.0 {
                return Err(Error::Descriptor("`omega` must be nonzero".into()));
            }
            OdeProblem::new(
                name,
                u0,
                horizon,
                Arc::new(move |t, _| vec![(w * t).cos(); dim]),
            )?
            .with_jacobian(Arc::new(move |_, _| vec![0.0; dim * dim]))
            .with_exact(Arc::new(move |t| {
                init.iter().map(|c| c + (w * t).sin() / w).collect()
            }))
            .time_only()
        }
        "linear" => {
            check_params(rhs, params, &["lambda"])?;
            let lambda = param(params, "lambda", -1.0)?;
            OdeProblem::new(
                name,
                u0,
                horizon,
                Arc::new(move |_, u| u.iter().map(|x| lambda * x).collect()),
            )?
            .with_jacobian(Arc::new(move |_, _| {
                let mut j = vec![0.0; dim * dim];
                (0..dim).for_each(|i| j[i * dim + i] = lambda);
                j
            }))
            .with_exact(Arc::new(move |t| {
                init.iter().map(|c| c * (lambda * t).exp()).collect()
            }))
        }
        "riccati" => {
            // f = −a u², u = u0 / (1 + a u0 t)
            check_params(rhs, params, &["a"])?;
            let a = param(params, "a", 1.0)?;
            OdeProblem::new(
                name,
                u0,
                horizon,
                Arc::new(move |_, u| u.iter().map(|x| -a * x * x).collect()),
            )?
            .with_jacobian(Arc::new(move |_, u| {
                let mut j = vec![0.0; dim * dim];
                (0..dim).for_each(|i| j[i * dim + i] = -2.0 * a * u[i]);
                j
            }))
            .with_exact(Arc::new(move |t| {
                init.iter().map(|c| c / (1.0 + a * c * t)).collect()
            }))
        }
        "oscillator" => {
            // u1' = ω u2, u2' = −ω u1
            check_params(rhs, params, &["omega"])?;
            if dim != 2 {
                return Err(Error::Descriptor(format!(
                    "`oscillator` needs 2 components, got {dim}"
                )));
            }
            let w = param(params, "omega", 1.0)?;
            OdeProblem::new(
                name,
                u0,
                horizon,
                Arc::new(move |_, u| vec![w * u[1], -w * u[0]]),
            )?
            .with_exact(Arc::new(move |t| {
                let (s, c) = (w * t).sin_cos();
                vec![c * init[0] + s * init[1], -s * init[0] + c * init[1]]
            }))
        }
        other => {
            return Err(Error::UnknownProblem {
                name: other.to_string(),
                known: RHS_KEYS.join(", "),
            })
        }
    };
    Ok(problem)
}

/// Built-in problems, by name.
pub const CORPUS: &[&str] = &[
    "polynomial",
    "cosine",
    "decay",
    "riccati",
    "stiff",
    "zero",
    "oscillator",
];

/// Looks up a built-in problem. The first five are the harness corpus:
/// `polynomial` (f = 3t² − 2t + 1), `cosine` (f = cos t), `decay` (λ = −1),
/// `riccati` (f = −u²), and `stiff` (λ = −50). All run on `[0, 1]`.
pub fn builtin(name: &str) -> Result<OdeProblem> {
    let none = Params::new();
    let lambda = |v: f64| Params::from([("lambda".to_string(), v)]);
    match name {
        "polynomial" => build_rhs(name, "polynomial", &none, vec![0.0], 1.0),
        "cosine" => build_rhs(name, "cosine", &none, vec![0.0], 1.0),
        "decay" => build_rhs(name, "linear", &lambda(-1.0), vec![1.0], 1.0),
        "riccati" => build_rhs(name, "riccati", &none, vec![1.0], 1.0),
        "stiff" => build_rhs(name, "linear", &lambda(-50.0), vec![1.0], 1.0),
        "zero" => build_rhs(name, "zero", &none, vec![1.0], 1.0),
        "oscillator" => build_rhs(name, "oscillator", &none, vec![1.0, 0.0], 1.0),
        _ => Err(Error::UnknownProblem {
            name: name.to_string(),
            known: CORPUS.join(", "),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let c = builtin("decay").unwrap();
        assert_eq!(c.evaluate_rhs(0.0, &[1.0]).unwrap(), vec![-1.0]);
        let d = builtin("riccati").unwrap();
        let v = d.evaluate_rhs(0.5, &[2.0 / 3.0]).unwrap()[0];
        assert!((v + 4.0 / 9.0).abs() < 1e-15);
        let a = builtin("polynomial").unwrap();
        assert_eq!(a.evaluate_rhs(1.0, &[123.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn exact_examples() {
        assert_eq!(
            builtin("riccati").unwrap().exact_at(1.0).unwrap(),
            vec![0.5]
        );
        assert_eq!(builtin("cosine").unwrap().exact_at(0.0).unwrap(), vec![0.0]);
        assert_eq!(builtin("decay").unwrap().exact_at(0.0).unwrap(), vec![1.0]);
    }

    #[test]
    fn missing_exact_is_an_error() {
        let p = OdeProblem::new("nox", vec![1.0], 1.0, Arc::new(|_, u| vec![u[0].sin()])).unwrap();
        assert!(matches!(p.exact_at(0.5), Err(Error::MissingExact(_))));
    }

    #[test]
    fn non_finite_rhs_is_rejected() {
        let p = OdeProblem::new(
            "blow",
            vec![1.0],
            1.0,
            Arc::new(|_, u| vec![1.0 / (u[0] - 1.0)]),
        )
        .unwrap();
        assert!(matches!(
            p.evaluate_rhs(0.0, &[1.0]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn unknown_names_list_the_registry() {
        let err = builtin("nope").unwrap_err().to_string();
        assert!(err.contains("riccati") && err.contains("decay"));
        assert!(build_rhs("x", "nope", &Params::new(), vec![1.0], 1.0).is_err());
        let bad = Params::from([("beta".to_string(), 1.0)]);
        assert!(build_rhs("x", "linear", &bad, vec![1.0], 1.0).is_err());
        assert!(build_rhs("x", "oscillator", &Params::new(), vec![1.0], 1.0).is_err());
    }

    #[test]
    fn corpus_exact_solutions_satisfy_the_ode() {
        // deterministic pseudo-random interior times
        let mut state = 0x2545_f491_4f6c_dd1d_u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for name in CORPUS {
            let p = builtin(name).unwrap();
            let h = 1e-6 * p.horizon();
            for _ in 0..20 {
                let t = h + (p.horizon() - 2.0 * h) * next();
                let up = p.exact_at(t + h).unwrap();
                let um = p.exact_at(t - h).unwrap();
                let f = p.evaluate_rhs(t, &p.exact_at(t).unwrap()).unwrap();
                for i in 0..p.dimension() {
                    let fd = (up[i] - um[i]) / (2.0 * h);
                    assert!(
                        (fd - f[i]).abs() <= 1e-6 * (1.0 + f[i].abs()),
                        "{name} at t={t}: {fd} vs {}",
                        f[i]
                    );
                }
            }
        }
    }

    #[test]
    fn finite_difference_jacobian_matches_analytic() {
        let analytic = builtin("riccati").unwrap();
        let fd = OdeProblem::new(
            "r",
            vec![1.0],
            1.0,
            Arc::new(|_, u: &[f64]| vec![-u[0] * u[0]]),
        )
        .unwrap();
        let a = analytic.evaluate_jacobian(0.3, &[0.7]).unwrap()[0];
        let b = fd.evaluate_jacobian(0.3, &[0.7]).unwrap()[0];
        assert!((a - b).abs() < 1e-7);
    }

    #[test]
    fn descriptor_round_trip() {
        let text = r#"{"name": "mine", "rhs": "linear", "params": {"lambda": -2.0}, "u0": [3.0], "T": 2.0}"#;
        let d = ProblemDescriptor::from_json(text).unwrap();
        assert_eq!(d.horizon, 2.0);
        let p = d.build().unwrap();
        assert_eq!(p.name(), "mine");
        assert_eq!(p.horizon(), 2.0);
        assert!((p.exact_at(1.0).unwrap()[0] - 3.0 * (-2.0f64).exp()).abs() < 1e-15);
        let back: ProblemDescriptor =
            serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }
}
