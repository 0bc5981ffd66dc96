//! Analytic oracles in general dimension: balls, ellipses, the satellite-ball
//! configuration, and Dirichlet disk eigenmodes from Bessel zeros.
//!
//! Everything here is independent of the finite-element stack so it can serve
//! as ground truth for it.

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre_on, trapezoid_periodic};
use std::f64::consts::PI;

/// Volume of the unit ball in R^n.
pub fn unit_ball_volume(dim: usize) -> f64 {
    assert!(dim >= 1);
    match dim {
        1 => 2.0,
        2 => PI,
        n => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

/// A ball B_r(center) in R^n.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSpec {
    pub dim: usize,
    pub radius: f64,
    pub center: Vec<f64>,
}

impl BallSpec {
    pub fn new(dim: usize, radius: f64, center: Vec<f64>) -> Self {
        assert!(radius > 0.0, "ball radius must be positive");
        assert_eq!(center.len(), dim);
        Self {
            dim,
            radius,
            center,
        }
    }

    pub fn unit(dim: usize) -> Self {
        Self::new(dim, 1.0, vec![0.0; dim])
    }
}

/// Torsion function of a ball: (r^2 - |x - x0|^2) / 2n inside, 0 outside.
pub fn ball_torsion_value(spec: &BallSpec, x: &[f64]) -> f64 {
    assert_eq!(x.len(), spec.dim);
    let d2: f64 = x
        .iter()
        .zip(&spec.center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let r2 = spec.radius * spec.radius;
    if d2 >= r2 {
        0.0
    } else {
        (r2 - d2) / (2.0 * spec.dim as f64)
    }
}

/// Torsional rigidity of B_r in R^n: -r^(n+2) * omega_n / (2n(n+2)).
pub fn ball_torsional_rigidity(dim: usize, radius: f64) -> f64 {
    let n = dim as f64;
    -radius.powi(dim as i32 + 2) * unit_ball_volume(dim) / (2.0 * n * (n + 2.0))
}

/// Exact torsional rigidity of the ellipse x^2/a^2 + y^2/b^2 < 1.
///
/// The torsion function is the quadratic w = C (1 - x^2/a^2 - y^2/b^2) with
/// -Delta w = 2C (1/a^2 + 1/b^2) = 1, so C = a^2 b^2 / (2(a^2 + b^2)).
/// Integrating, int (1 - x^2/a^2 - y^2/b^2) = pi a b / 2, hence
/// tor = -1/2 int w = -pi a^3 b^3 / (8 (a^2 + b^2)).
pub fn ellipse_torsional_rigidity(a: f64, b: f64) -> f64 {
    -PI * a.powi(3) * b.powi(3) / (8.0 * (a * a + b * b))
}

/// Torsion constant C_eps of the volume-pi ellipse family with semi-axes
/// (1/(1+eps), 1+eps).
pub fn ellipse_torsion_constant(eps: f64) -> f64 {
    let u = 1.0 + eps;
    1.0 / (2.0 * (u * u + 1.0 / (u * u)))
}

/// Torsional rigidity of the volume-pi ellipse family and its deficit
/// relative to the unit disk.
pub fn ellipse_torsion(eps: f64) -> (f64, f64) {
    assert!(eps.abs() < 0.5, "ellipse eccentricity parameter out of range");
    let a = 1.0 / (1.0 + eps);
    let b = 1.0 + eps;
    let tor = ellipse_torsional_rigidity(a, b);
    (tor, tor - ball_torsional_rigidity(2, 1.0))
}

/// Satellite-ball configuration: a core B_{1-rho}(0) plus two balls of radius
/// r at +-2 e_1, with rho chosen so the total volume is omega_n.
///
/// Returns the Saint-Venant deficit and the squared resolvent distance
/// beta^2 for the forcing f = M chi_{satellites}, M = 2 |B_r|^(-1/p).
/// Since f vanishes on B_1, the ball solution is identically zero and
/// beta^2 = 2 M^2 int_{B_r} ((r^2-|y|^2)/2n)^2 dy
///        = 16 omega_n^(1-2/p) r^(n+4-2n/p) / (n^2 (n+2)(n+4)).
pub fn satellite_example(dim: usize, r: f64, p: f64) -> Result<(f64, f64)> {
    if !(r > 0.0 && r < 0.2) {
        return Err(Error::InvalidConfig { r });
    }
    assert!(p >= 1.0, "L^p exponent must be >= 1");
    let n = dim as f64;
    let omega = unit_ball_volume(dim);
    // (1 - rho)^n + 2 r^n = 1
    let core_radius = (1.0 - 2.0 * r.powf(n)).powf(1.0 / n);
    let deficit = ball_torsional_rigidity(dim, core_radius)
        + 2.0 * ball_torsional_rigidity(dim, r)
        - ball_torsional_rigidity(dim, 1.0);
    let beta_sq = 16.0 * omega.powf(1.0 - 2.0 / p) * r.powf(n + 4.0 - 2.0 * n / p)
        / (n * n * (n + 2.0) * (n + 4.0));
    Ok((deficit, beta_sq))
}

/// Radius of the satellite example's core ball in dimension n.
pub fn satellite_core_radius(dim: usize, r: f64) -> f64 {
    (1.0 - 2.0 * r.powf(dim as f64)).powf(1.0 / (dim as f64))
}

/// Squared H^1(R^2) distance between the torsion functions of the volume-pi
/// ellipse and the unit disk, both extended by zero.
///
/// Both gradients are linear fields, so for each angle the radial integral of
/// the squared difference is a quartic monomial and is integrated exactly;
/// the angular integral is a smooth periodic function handled by the
/// trapezoid rule at spectral accuracy.
pub fn h1_distance_ellipse(eps: f64) -> f64 {
    assert!(eps.abs() < 0.3);
    if eps == 0.0 {
        return 0.0;
    }
    let u = 1.0 + eps;
    let big_a = u * u; // coefficient of x^2 in the ellipse quadratic
    let big_b = 1.0 / (u * u);
    let c = 1.0 / (2.0 * (big_a + big_b));
    // grad w_E = -2C (A x, B y), grad w_B = -(x, y)/2
    let dx = 0.5 - 2.0 * c * big_a;
    let dy = 0.5 - 2.0 * c * big_b;
    trapezoid_periodic(2048, |theta| {
        let (s, co) = theta.sin_cos();
        let rho_e = 1.0 / (big_a * co * co + big_b * s * s).sqrt();
        let inner = rho_e.min(1.0);
        let outer = rho_e.max(1.0);
        // int_0^R g(theta) r^2 * r dr = g(theta) R^4 / 4
        let g_both = dx * dx * co * co + dy * dy * s * s;
        let g_outer = if rho_e > 1.0 {
            4.0 * c * c * (big_a * big_a * co * co + big_b * big_b * s * s)
        } else {
            0.25
        };
        0.25 * (g_both * inner.powi(4) + g_outer * (outer.powi(4) - inner.powi(4)))
    })
}

// ---------------------------------------------------------------------------
// Bessel functions and disk eigenmodes
// ---------------------------------------------------------------------------

/// Bessel function of the first kind J_m(x) by its power series.
///
/// Adequate to ~1e-13 for the arguments used here (|x| <= 30).
pub fn bessel_j(m: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=m {
        term *= half / k as f64;
    }
    let mut sum = term;
    let q = -half * half;
    for s in 1..200 {
        term *= q / (s as f64 * (s + m) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// l-th positive zero of J_m, by scan and bisection to ~1e-13.
pub fn bessel_zero(m: usize, l: usize) -> f64 {
    assert!(l >= 1);
    let mut found = 0;
    let step = 0.05_f64;
    let mut x0 = step.max(m as f64 * 0.5); // J_m > 0 on (0, j_{m,1})
    let mut f0 = bessel_j(m, x0);
    loop {
        let x1 = x0 + step;
        let f1 = bessel_j(m, x1);
        if f0 == 0.0 {
            found += 1;
            if found == l {
                return x0;
            }
        } else if f0 * f1 < 0.0 {
            found += 1;
            if found == l {
                let (mut lo, mut hi) = (x0, x1);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if bessel_j(m, lo) * bessel_j(m, mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
        }
        x0 = x1;
        f0 = f1;
        assert!(x0 < 200.0, "bessel zero scan ran away");
    }
}

/// Angular parity of a disk eigenmode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeParity {
    Cos,
    Sin,
}

/// One Dirichlet eigenmode of the unit disk:
/// u = norm * J_m(j r) * {cos, sin}(m theta), with int_B u^2 = 1.
#[derive(Debug, Clone)]
pub struct DiskMode {
    pub angular: usize,
    pub radial: usize,
    pub parity: ModeParity,
    /// The Bessel zero j_{m,l}.
    pub zero: f64,
    /// Eigenvalue j_{m,l}^2.
    pub eigenvalue: f64,
    /// Multiplicity of the eigenvalue (1 for m = 0, else 2).
    pub multiplicity: usize,
    norm: f64,
}

impl DiskMode {
    fn build(m: usize, l: usize, parity: ModeParity) -> Self {
        let zero = bessel_zero(m, l);
        // int_0^1 J_m(j s)^2 s ds, by composite Gauss-Legendre
        let (xs, ws) = gauss_legendre_on(64, 0.0, 1.0);
        let radial_int: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(&s, &w)| {
                let v = bessel_j(m, zero * s);
                w * v * v * s
            })
            .sum();
        let angular_int = if m == 0 { 2.0 * PI } else { PI };
        DiskMode {
            angular: m,
            radial: l,
            parity,
            zero,
            eigenvalue: zero * zero,
            multiplicity: if m == 0 { 1 } else { 2 },
            norm: 1.0 / (angular_int * radial_int).sqrt(),
        }
    }

    /// Evaluate the mode at a point given relative to the ball center,
    /// for a unit ball; zero outside.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let r2 = x * x + y * y;
        if r2 >= 1.0 {
            return 0.0;
        }
        let r = r2.sqrt();
        let radial = self.norm * bessel_j(self.angular, self.zero * r);
        if self.angular == 0 {
            return radial;
        }
        let theta = y.atan2(x);
        match self.parity {
            ModeParity::Cos => radial * (self.angular as f64 * theta).cos(),
            ModeParity::Sin => radial * (self.angular as f64 * theta).sin(),
        }
    }

    /// Radial normalization check value: int_0^1 J_m(j s)^2 s ds should equal
    /// J_{m+1}(j)^2 / 2.
    pub fn radial_norm_identity(&self) -> (f64, f64) {
        let (xs, ws) = gauss_legendre_on(64, 0.0, 1.0);
        let quad: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(&s, &w)| {
                let v = bessel_j(self.angular, self.zero * s);
                w * v * v * s
            })
            .sum();
        let jnext = bessel_j(self.angular + 1, self.zero);
        (quad, 0.5 * jnext * jnext)
    }
}

/// The first `count` Dirichlet eigenmodes of the unit disk in ascending
/// eigenvalue order, with cos listed before sin inside each degenerate pair.
pub fn disk_modes(count: usize) -> Vec<DiskMode> {
    assert!(count <= 40);
    let mut modes = Vec::new();
    for m in 0..=10 {
        for l in 1..=8 {
            let zero = bessel_zero(m, l);
            modes.push((zero, m, l));
        }
    }
    modes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out = Vec::with_capacity(count);
    for (_, m, l) in modes {
        if out.len() >= count {
            break;
        }
        out.push(DiskMode::build(m, l, ModeParity::Cos));
        if m > 0 && out.len() < count {
            out.push(DiskMode::build(m, l, ModeParity::Sin));
        }
    }
    out.truncate(count);
    out
}

/// k-th Dirichlet eigenvalue of the unit disk (1-based) with its mode data.
pub fn disk_eigenpair(k: usize) -> DiskMode {
    assert!(k >= 1 && k <= 20, "disk eigenpair index out of supported range");
    disk_modes(k).pop().unwrap()
}
