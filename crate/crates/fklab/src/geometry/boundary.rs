//! Truncated Fourier series on the unit circle.
//!
//! Carries the radial function of a star-shaped boundary, nearly spherical
//! perturbations, boundary normal velocities, and projected shape-gradient
//! densities.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// a0 + sum_k a_k cos(k theta) + b_k sin(k theta), truncated at order K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFunction {
    pub a0: f64,
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
}

impl BoundaryFunction {
    pub fn constant(c: f64) -> Self {
        Self {
            a0: c,
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    pub fn zero(order: usize) -> Self {
        Self {
            a0: 0.0,
            a: vec![0.0; order],
            b: vec![0.0; order],
        }
    }

    /// A single pure mode amp * cos(k theta) (or sin when `sine` is set).
    pub fn mode(k: usize, amp: f64, sine: bool) -> Self {
        assert!(k >= 1);
        let mut f = Self::zero(k);
        if sine {
            f.b[k - 1] = amp;
        } else {
            f.a[k - 1] = amp;
        }
        f
    }

    pub fn from_coefficients(a0: f64, mut a: Vec<f64>, mut b: Vec<f64>) -> Self {
        let order = a.len().max(b.len());
        a.resize(order, 0.0);
        b.resize(order, 0.0);
        Self { a0, a, b }
    }

    /// Truncation order K.
    pub fn order(&self) -> usize {
        self.a.len().max(self.b.len())
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = self.a0;
        for k in 0..self.a.len() {
            let kt = (k + 1) as f64 * theta;
            v += self.a[k] * kt.cos();
            if k < self.b.len() {
                v += self.b[k] * kt.sin();
            }
        }
        v
    }

    /// First derivative in theta.
    pub fn deriv(&self, theta: f64) -> f64 {
        let mut v = 0.0;
        for k in 0..self.a.len() {
            let kf = (k + 1) as f64;
            let kt = kf * theta;
            v += kf * (-self.a[k] * kt.sin());
            if k < self.b.len() {
                v += kf * self.b[k] * kt.cos();
            }
        }
        v
    }

    /// Least-squares Fourier projection of uniform samples, exact for
    /// band-limited data of order below half the sample count.
    pub fn project(samples: &[f64], order: usize) -> Self {
        let m = samples.len();
        assert!(m > 2 * order, "not enough samples for the requested order");
        let mut a0 = 0.0;
        for &s in samples {
            a0 += s;
        }
        a0 /= m as f64;
        let mut a = vec![0.0; order];
        let mut b = vec![0.0; order];
        for k in 1..=order {
            let mut ca = 0.0;
            let mut cb = 0.0;
            for (i, &s) in samples.iter().enumerate() {
                let t = TAU * i as f64 / m as f64 * k as f64;
                ca += s * t.cos();
                cb += s * t.sin();
            }
            a[k - 1] = 2.0 * ca / m as f64;
            b[k - 1] = 2.0 * cb / m as f64;
        }
        Self { a0, a, b }
    }

    /// Project a closure sampled at `4 * order + 64` uniform angles.
    pub fn project_fn(f: impl Fn(f64) -> f64, order: usize) -> Self {
        let m = 4 * order + 64;
        let samples: Vec<f64> = (0..m).map(|i| f(TAU * i as f64 / m as f64)).collect();
        Self::project(&samples, order)
    }

    /// Sup norm by dense sampling.
    pub fn c0_norm(&self) -> f64 {
        (0..2048)
            .map(|i| self.eval(TAU * i as f64 / 2048.0).abs())
            .fold(0.0, f64::max)
    }

    /// C^1 norm (sup of value plus sup of derivative) by dense sampling.
    pub fn c1_norm(&self) -> f64 {
        let dmax = (0..2048)
            .map(|i| self.deriv(TAU * i as f64 / 2048.0).abs())
            .fold(0.0, f64::max);
        self.c0_norm() + dmax
    }

    /// Mean value over the circle (equals a0).
    pub fn mean(&self) -> f64 {
        self.a0
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            a0: self.a0 * s,
            a: self.a.iter().map(|v| v * s).collect(),
            b: self.b.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order().max(other.order());
        let mut a = vec![0.0; order];
        let mut b = vec![0.0; order];
        for k in 0..order {
            a[k] = self.a.get(k).copied().unwrap_or(0.0) + other.a.get(k).copied().unwrap_or(0.0);
            b[k] = self.b.get(k).copied().unwrap_or(0.0) + other.b.get(k).copied().unwrap_or(0.0);
        }
        Self {
            a0: self.a0 + other.a0,
            a,
            b,
        }
    }
}
