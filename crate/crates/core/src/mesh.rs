//! Time partitions `0 = t_0 < t_1 < … < t_N = T` and the affine maps between
//! each element `I_n = (t_{n-1}, t_n)` and the reference interval.
//!
//! Elements are indexed from zero in code: element `e` spans
//! `[nodes[e], nodes[e + 1]]`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Which one-sided limit to take at a mesh node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `t^-`, from the element on the left.
    Left,
    /// `t^+`, from the element on the right.
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeMesh {
    nodes: Vec<f64>,
}

impl TimeMesh {
    /// Accepts any strictly increasing node list starting at zero.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidMesh("need at least one element".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidMesh(format!(
                "first node must be 0, got {}",
                nodes[0]
            )));
        }
        if nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidMesh("non-finite node".into()));
        }
        if let Some(w) = nodes.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMesh(format!(
                "nodes must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { nodes })
    }

    pub fn uniform(elements: usize, horizon: f64) -> Result<Self> {
        if elements == 0 {
            return Err(Error::InvalidMesh(
                "element count must be at least 1".into(),
            ));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidMesh(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let nodes = (0..=elements)
            .map(|n| {
                if n == elements {
                    horizon
                } else {
                    n as f64 * horizon / elements as f64
                }
            })
            .collect();
        Self::from_nodes(nodes)
    }

    /// Element lengths grow by `ratio` from left to right.
    pub fn geometric(elements: usize, horizon: f64, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::InvalidMesh(format!(
                "ratio must be positive, got {ratio}"
            )));
        }
        if elements == 0 {
            return Err(Error::InvalidMesh(
                "element count must be at least 1".into(),
            ));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidMesh(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let lengths: Vec<f64> = (0..elements).map(|i| ratio.powi(i as i32)).collect();
        let total: f64 = lengths.iter().sum();
        let mut nodes = Vec::with_capacity(elements + 1);
        let mut t = 0.0;
        nodes.push(t);
        for l in &lengths[..elements - 1] {
            t += l * horizon / total;
            nodes.push(t);
        }
        nodes.push(horizon);
        Self::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn num_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// `(t_{n-1}, t_n)` for element `e`.
    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    pub fn length(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.windows(2).map(|w| w[1] - w[0])
    }

    pub fn max_length(&self) -> f64 {
        self.lengths().fold(0.0, f64::max)
    }

    fn slack(&self) -> f64 {
        1e-12 * self.horizon()
    }

    /// `τ_n(t) = (2t − (t_n + t_{n-1})) / (t_n − t_{n-1})`.
    pub fn to_reference(&self, e: usize, t: f64) -> Result<f64> {
        let (a, b) = self.element(e);
        let slack = self.slack();
        if !(t >= a - slack && t <= b + slack) {
            return Err(Error::OutsideElement {
                element: e,
                t,
                left: a,
                right: b,
            });
        }
        Ok(((2.0 * t - (b + a)) / (b - a)).clamp(-1.0, 1.0))
    }

    pub fn from_reference(&self, e: usize, tau: f64) -> f64 {
        let (a, b) = self.element(e);
        if tau == -1.0 {
            return a;
        }
        if tau == 1.0 {
            return b;
        }
        0.5 * (a + b) + 0.5 * (b - a) * tau
    }

    /// `dt/dτ = h_n / 2`.
    pub fn jacobian(&self, e: usize) -> f64 {
        0.5 * self.length(e)
    }

    /// The element containing `t`. At an interior node, `side` picks the
    /// element on the left (`t^-`) or the right (`t^+`); at `0` and `T` the
    /// only adjacent element is returned.
    pub fn locate(&self, t: f64, side: Side) -> Result<usize> {
        let slack = self.slack();
        let n = self.num_elements();
        if !(t >= -slack && t <= self.horizon() + slack) {
            return Err(Error::OutsideElement {
                element: 0,
                t,
                left: 0.0,
                right: self.horizon(),
            });
        }
        // first node strictly greater than t
        let idx = self.nodes.partition_point(|&x| x <= t);
        let mut e = idx.saturating_sub(1).min(n - 1);
        // snap to a nearby node and apply the side flag there
        let near = |x: f64| (t - x).abs() <= slack;
        if side == Side::Right && e + 1 < n && near(self.nodes[e + 1]) {
            e += 1;
        } else if side == Side::Left && e > 0 && near(self.nodes[e]) {
            e -= 1;
        }
        Ok(e)
    }
}
