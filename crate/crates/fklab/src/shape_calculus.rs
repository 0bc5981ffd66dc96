//! Hadamard first variations of volume, barycenter, torsion and beta^2 via
//! adjoint potentials; the pointwise Euler-Lagrange residual; and projected
//! gradient descent on the penalized energy over boundary Fourier
//! coefficients.
//!
//! All boundary velocities are normal speeds T.nu given as functions of the
//! boundary angle.

use crate::error::{Error, Result};
use crate::fem::{
    cross_l2_with, locate::MeshLocator, torsional_rigidity, CrossGrid, DirichletSpace, FemField,
};
use crate::functionals::{h_penalty, BetaSolver, Forcing, PenaltyParams};
use crate::geometry::{
    mesh::mesh_star_domain, truncated_barycenter, volume, volume_normalize, BoundaryFunction,
    StarDomain,
};
use crate::quad::uniform_angles;
use nalgebra::{Point2, Vector2};
use std::f64::consts::TAU;
use std::sync::Arc;

/// Offsets for one-sided boundary-gradient extraction.
#[derive(Debug, Clone, Copy)]
pub struct GradExtract {
    /// base offset as a multiple of the mesh size
    pub base_factor: f64,
    /// number of boundary quadrature angles
    pub n_angles: usize,
}

impl Default for GradExtract {
    fn default() -> Self {
        Self {
            base_factor: 1.2,
            n_angles: 256,
        }
    }
}

/// Boundary quadrature data for a domain: angles and arc-length weights.
pub struct BoundaryQuad {
    pub domain: StarDomain,
    pub angles: Vec<f64>,
    pub arc_w: Vec<f64>,
    pub points: Vec<Point2<f64>>,
    pub normals: Vec<Vector2<f64>>,
}

impl BoundaryQuad {
    pub fn new(domain: &StarDomain, n: usize) -> Self {
        let angles = uniform_angles(n);
        let step = TAU / n as f64;
        let mut arc_w = Vec::with_capacity(n);
        let mut points = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        for &t in &angles {
            arc_w.push(domain.arc_element(t) * step);
            points.push(domain.boundary_point(t));
            normals.push(domain.outward_normal(t));
        }
        Self {
            domain: domain.clone(),
            angles,
            arc_w,
            points,
            normals,
        }
    }

    pub fn integrate(&self, density: &[f64], velocity: &BoundaryFunction) -> f64 {
        self.angles
            .iter()
            .zip(&self.arc_w)
            .zip(density)
            .map(|((&t, &w), &g)| g * velocity.eval(t) * w)
            .sum()
    }
}

/// The discrete boundary polygon of the star-shaped core, used to measure
/// sample offsets from where the P1 field actually vanishes (the polygon
/// sits up to a sagitta inside the smooth boundary, which would otherwise
/// bias the extracted gradient at O(h)).
struct CorePolygon {
    angles: Vec<f64>,
    points: Vec<Point2<f64>>,
    center: Point2<f64>,
}

impl CorePolygon {
    fn from_mesh(mesh: &crate::geometry::TriangleMesh, domain: &StarDomain) -> Self {
        let center = domain.center_point();
        let mut ring: Vec<(f64, Point2<f64>)> = mesh
            .vertices
            .iter()
            .zip(&mesh.boundary_vertex)
            .filter(|(_, &b)| b)
            .map(|(&v, _)| v)
            .filter(|&v| {
                let d = v - center;
                let rho = domain.fourier.eval(d.y.atan2(d.x));
                (d.norm() - rho).abs() < 0.2 * rho
            })
            .map(|v| {
                let d = v - center;
                (d.y.atan2(d.x).rem_euclid(TAU), v)
            })
            .collect();
        ring.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Self {
            angles: ring.iter().map(|r| r.0).collect(),
            points: ring.iter().map(|r| r.1).collect(),
            center,
        }
    }

    /// Distance s >= 0 along the inward ray b - s nu to the polygon edge.
    fn edge_offset(&self, b: Point2<f64>, nu: Vector2<f64>) -> f64 {
        let n = self.angles.len();
        if n < 3 {
            return 0.0;
        }
        let t = (b - self.center).y.atan2((b - self.center).x).rem_euclid(TAU);
        let idx = match self
            .angles
            .binary_search_by(|a| a.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(i) => (i + n - 1) % n,
        };
        let p0 = self.points[idx];
        let p1 = self.points[(idx + 1) % n];
        let e = p1 - p0;
        let denom = nu.x * e.y - nu.y * e.x;
        if denom.abs() < 1e-14 {
            return 0.0;
        }
        let d = b - p0;
        let s = (d.x * e.y - d.y * e.x) / denom;
        s.clamp(0.0, 0.5)
    }
}

/// Inward-normal gradient magnitude of a Dirichlet field at the boundary
/// quadrature points.
///
/// The field is sampled at three offsets along the inward normal; a cubic
/// through the local polygon intersection (where the discrete field
/// vanishes) is fitted to the samples and its slope at the boundary taken.
pub fn boundary_gradient(
    field: &FemField,
    quad: &BoundaryQuad,
    mesh_h: f64,
    opts: GradExtract,
) -> Vec<f64> {
    let locator = MeshLocator::new(&field.mesh);
    let s0 = opts.base_factor * mesh_h;
    let polygon = CorePolygon::from_mesh(&field.mesh, &quad.domain);
    quad.points
        .iter()
        .zip(&quad.normals)
        .map(|(&b, &nu)| {
            let shift = polygon.edge_offset(b, nu);
            // distances measured from the discrete zero set
            let d: Vec<f64> = (1..=3).map(|j| j as f64 * s0 - shift).collect();
            let w: Vec<f64> = d
                .iter()
                .enumerate()
                .map(|(j, _)| {
                    locator.interpolate(&field.values, b - nu * ((j + 1) as f64 * s0))
                })
                .collect();
            // solve w_j = g d_j + c2 d_j^2 + c3 d_j^3 for g
            let m = nalgebra::Matrix3::from_fn(|r, c| d[r].powi(c as i32 + 1));
            let rhs = nalgebra::Vector3::new(w[0], w[1], w[2]);
            match m.lu().solve(&rhs) {
                Some(sol) => sol[0],
                None => (18.0 * w[0] - 9.0 * w[1] + 2.0 * w[2]) / (6.0 * s0),
            }
        })
        .collect()
}

/// Cross-check extractor: magnitude of the P1 element gradient in the
/// element just inside each boundary point.
pub fn boundary_gradient_p1avg(
    field: &FemField,
    quad: &BoundaryQuad,
    mesh_h: f64,
) -> Vec<f64> {
    let locator = MeshLocator::new(&field.mesh);
    quad.points
        .iter()
        .zip(&quad.normals)
        .map(|(&b, &nu)| {
            let probe = b - nu * (0.7 * mesh_h);
            match locator.locate(probe) {
                None => 0.0,
                Some((t, _)) => {
                    let tri = field.mesh.triangles[t];
                    let p = [
                        field.mesh.vertices[tri[0]],
                        field.mesh.vertices[tri[1]],
                        field.mesh.vertices[tri[2]],
                    ];
                    let v = [
                        field.values[tri[0]],
                        field.values[tri[1]],
                        field.values[tri[2]],
                    ];
                    let area2 = 2.0 * field.mesh.element_area[t];
                    let gx = (v[0] * (p[1].y - p[2].y)
                        + v[1] * (p[2].y - p[0].y)
                        + v[2] * (p[0].y - p[1].y))
                        / area2;
                    let gy = (v[0] * (p[2].x - p[1].x)
                        + v[1] * (p[0].x - p[2].x)
                        + v[2] * (p[1].x - p[0].x))
                        / area2;
                    (gx * gx + gy * gy).sqrt()
                }
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Geometric first variations (quadrature only)
// ---------------------------------------------------------------------------

/// d/dt |Omega_t| = int_dOmega (T.nu) dH^1.
pub fn d_volume(domain: &StarDomain, velocity: &BoundaryFunction) -> f64 {
    let quad = BoundaryQuad::new(domain, 256);
    let ones = vec![1.0; quad.angles.len()];
    quad.integrate(&ones, velocity)
}

/// d/dt x_{Omega_t} = int_dOmega A_Omega (T.nu) dH^1 with
/// A_Omega = (x - x_Omega)/|Omega|.
pub fn d_barycenter(domain: &StarDomain, velocity: &BoundaryFunction) -> Result<Vector2<f64>> {
    let quad = BoundaryQuad::new(domain, 256);
    let vol = volume(domain);
    let bary = truncated_barycenter(domain)?;
    let mut out = Vector2::zeros();
    for ((&t, &w), &p) in quad.angles.iter().zip(&quad.arc_w).zip(&quad.points) {
        out += (p - bary) / vol * velocity.eval(t) * w;
    }
    Ok(out)
}

/// Realize a normal velocity as a radial flow: the domain whose radial
/// function is rho + t V sqrt(rho^2 + rho'^2)/rho, which has boundary normal
/// speed V at t = 0. Used by the finite-difference oracles.
pub fn flow_domain(domain: &StarDomain, velocity: &BoundaryFunction, t: f64) -> StarDomain {
    let order = domain.fourier.order() + velocity.order() + 8;
    let radial = BoundaryFunction::project_fn(
        |theta| {
            let rho = domain.fourier.eval(theta);
            let drho = domain.fourier.deriv(theta);
            rho + t * velocity.eval(theta) * (rho * rho + drho * drho).sqrt() / rho
        },
        order,
    );
    let mut out = domain.clone();
    out.fourier = radial;
    out
}

// ---------------------------------------------------------------------------
// Adjoint potentials
// ---------------------------------------------------------------------------

/// Solve -Delta p = u_f in Omega, p = 0 on the boundary.
pub fn adjoint_p(space: &DirichletSpace, u_f: &FemField) -> FemField {
    space.solve_poisson_nodal(u_f)
}

/// Solve -Delta p1 = u_f - u_ball_f in Omega (the ball field already
/// interpolated onto the domain mesh, zero-extended).
pub fn adjoint_p1(space: &DirichletSpace, u_f: &FemField, u_ball_on_domain: &FemField) -> FemField {
    let diff = FemField {
        mesh: Arc::clone(&u_f.mesh),
        values: u_f
            .values
            .iter()
            .zip(&u_ball_on_domain.values)
            .map(|(a, b)| a - b)
            .collect(),
    };
    space.solve_poisson_nodal(&diff)
}

/// Interpolate a field onto another mesh with zero extension.
pub fn interpolate_onto(field: &FemField, target: &Arc<crate::geometry::TriangleMesh>) -> FemField {
    let locator = MeshLocator::new(&field.mesh);
    FemField {
        mesh: Arc::clone(target),
        values: target
            .vertices
            .iter()
            .map(|&v| locator.interpolate(&field.values, v))
            .collect(),
    }
}

/// All boundary densities entering the Euler-Lagrange data of the energy.
pub struct BoundaryDensity {
    pub quad: BoundaryQuad,
    pub grad_w_sq: Vec<f64>,
    pub grad_uf: Vec<f64>,
    pub grad_p1: Vec<f64>,
    pub a_omega: Vec<Vector2<f64>>,
    /// the ball-side coupling vector V
    pub v_vec: Vector2<f64>,
    pub beta_sq: f64,
    pub tor: f64,
}

/// Assemble the boundary data for a unit-volume domain and forcing.
pub fn compute_boundary_data(
    domain: &StarDomain,
    f: &Forcing,
    mesh_h: f64,
    grid: CrossGrid,
    opts: GradExtract,
) -> Result<BoundaryDensity> {
    let solver = BetaSolver::new(domain, mesh_h, grid)?;
    let quad = BoundaryQuad::new(domain, opts.n_angles);

    let w = solver.domain_space.solve_poisson(|_| 1.0);
    let tor = torsional_rigidity(&w);
    let grad_w = boundary_gradient(&w, &quad, mesh_h, opts);
    for (&g, &t) in grad_w.iter().zip(&quad.angles) {
        if g.abs() < 1e-6 {
            return Err(Error::DegenerateGradient {
                theta: t,
                value: g,
            });
        }
    }
    let grad_w_sq: Vec<f64> = grad_w.iter().map(|g| g * g).collect();

    let (u_f, u_ball_f) = solver.solve_pair(f);
    let beta_sq = cross_l2_with(&u_f, &u_ball_f, grid);
    let grad_uf = boundary_gradient(&u_f, &quad, mesh_h, opts);

    let u_ball_on_domain = interpolate_onto(&u_ball_f, &solver.domain_space.mesh);
    let p1 = adjoint_p1(&solver.domain_space, &u_f, &u_ball_on_domain);
    let grad_p1 = boundary_gradient(&p1, &quad, mesh_h, opts);

    // p2 on the ball: -Delta p2 = u_f - u_ball_f in B(x_Omega)
    let u_f_on_ball = interpolate_onto(&u_f, &solver.ball_space.mesh);
    let p2 = adjoint_p1(&solver.ball_space, &u_f_on_ball, &u_ball_f);
    let ball_domain = StarDomain::disk(1.0).translate(solver.ball_center.coords);
    let ball_quad = BoundaryQuad::new(&ball_domain, opts.n_angles);
    let grad_p2 = boundary_gradient(&p2, &ball_quad, mesh_h, opts);
    let grad_ub = boundary_gradient(&u_ball_f, &ball_quad, mesh_h, opts);
    let mut v_vec = Vector2::zeros();
    for i in 0..ball_quad.angles.len() {
        v_vec += ball_quad.normals[i] * (grad_p2[i].abs() * grad_ub[i].abs() * ball_quad.arc_w[i]);
    }

    let vol = volume(domain);
    let bary = truncated_barycenter(domain)?;
    let a_omega: Vec<Vector2<f64>> = quad.points.iter().map(|&p| (p - bary) / vol).collect();

    Ok(BoundaryDensity {
        quad,
        grad_w_sq,
        grad_uf,
        grad_p1,
        a_omega,
        v_vec,
        beta_sq,
        tor,
    })
}

/// C_Omega = 2 (beta^2 - a) / sqrt(a^2 + (a - beta^2)^2); always in [-2, 2].
pub fn c_omega(beta_sq: f64, a: f64) -> f64 {
    2.0 * (beta_sq - a) / (a * a + (a - beta_sq) * (a - beta_sq)).sqrt()
}

/// d/dt tor(Omega_t) = -(1/2) int |grad w|^2 (T.nu) dH^1.
pub fn d_torsion(domain: &StarDomain, velocity: &BoundaryFunction, mesh_h: f64) -> Result<f64> {
    let mesh = Arc::new(mesh_star_domain(domain, mesh_h)?);
    let space = DirichletSpace::new(mesh)?;
    let w = space.solve_poisson(|_| 1.0);
    let opts = GradExtract::default();
    let quad = BoundaryQuad::new(domain, opts.n_angles);
    let grad_w = boundary_gradient(&w, &quad, mesh_h, opts);
    for (&g, &t) in grad_w.iter().zip(&quad.angles) {
        if g.abs() < 1e-6 {
            return Err(Error::DegenerateGradient {
                theta: t,
                value: g,
            });
        }
    }
    let density: Vec<f64> = grad_w.iter().map(|g| -0.5 * g * g).collect();
    Ok(quad.integrate(&density, velocity))
}

/// d/dt beta^2(Omega_t) = 2 int (|grad p1||grad u^f| - V.A_Omega)(T.nu) dH^1.
pub fn d_beta_sq(
    domain: &StarDomain,
    f: &Forcing,
    velocity: &BoundaryFunction,
    mesh_h: f64,
    grid: CrossGrid,
) -> Result<f64> {
    let data = compute_boundary_data(domain, f, mesh_h, grid, GradExtract::default())?;
    let density: Vec<f64> = (0..data.quad.angles.len())
        .map(|i| {
            2.0 * (data.grad_p1[i].abs() * data.grad_uf[i].abs()
                - data.v_vec.dot(&data.a_omega[i]))
        })
        .collect();
    Ok(data.quad.integrate(&density, velocity))
}

/// Combined shape-gradient density of F_tau (with the volume term handled by
/// projection): g = -(1/2)|grad w|^2 + tau C_Omega (|grad p1||grad u^f| - V.A).
pub fn shape_gradient_density(data: &BoundaryDensity, params: &PenaltyParams) -> Vec<f64> {
    let c = c_omega(data.beta_sq, params.a);
    (0..data.quad.angles.len())
        .map(|i| {
            -0.5 * data.grad_w_sq[i]
                + params.tau
                    * c
                    * (data.grad_p1[i].abs() * data.grad_uf[i].abs()
                        - data.v_vec.dot(&data.a_omega[i]))
        })
        .collect()
}

/// The shape-gradient density with its band-limited Fourier projection.
pub struct ShapeGradient {
    pub density: Vec<f64>,
    pub as_fourier: BoundaryFunction,
    pub truncation_error: f64,
}

impl ShapeGradient {
    pub fn project(density: &[f64], order: usize) -> Self {
        let as_fourier = BoundaryFunction::project(density, order);
        let n = density.len();
        let mut err = 0.0f64;
        for (i, &d) in density.iter().enumerate() {
            let t = TAU * i as f64 / n as f64;
            err = err.max((as_fourier.eval(t) - d).abs());
        }
        Self {
            density: density.to_vec(),
            as_fourier,
            truncation_error: err,
        }
    }
}

/// Relative variation (max - min)/mean of the pointwise Euler-Lagrange
/// density (1/2)|grad w|^2 - tau C_Omega a1 |grad w|^2 + tau C_Omega V.A
/// along the boundary; zero for a critical shape.
///
/// The density is smoothed by Fourier projection (order 16) before taking
/// the spread, which suppresses pointwise extraction noise without moving
/// the low-frequency content the criterion is about.
pub fn el_residual(
    domain: &StarDomain,
    f: &Forcing,
    params: &PenaltyParams,
    mesh_h: f64,
) -> Result<f64> {
    let data = compute_boundary_data(
        domain,
        f,
        mesh_h,
        CrossGrid::default(),
        GradExtract::default(),
    )?;
    let c = c_omega(data.beta_sq, params.a);
    let raw: Vec<f64> = (0..data.quad.angles.len())
        .map(|i| {
            0.5 * data.grad_w_sq[i]
                - params.tau * c * data.grad_p1[i].abs() * data.grad_uf[i].abs()
                + params.tau * c * data.v_vec.dot(&data.a_omega[i])
        })
        .collect();
    let smooth = ShapeGradient::project(&raw, 16);
    let vals: Vec<f64> = data
        .quad
        .angles
        .iter()
        .map(|&t| smooth.as_fourier.eval(t))
        .collect();
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &v in &vals {
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v;
    }
    let mean = sum / vals.len() as f64;
    Ok((hi - lo) / mean.abs().max(1e-300))
}

// ---------------------------------------------------------------------------
// Energy minimization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct OptimizeOpts {
    pub mesh_h: f64,
    pub max_iters: usize,
    pub step0: f64,
    /// descent directions are band-limited to this Fourier order
    pub fourier_order: usize,
    pub grid: CrossGrid,
}

impl Default for OptimizeOpts {
    fn default() -> Self {
        Self {
            mesh_h: 0.05,
            max_iters: 300,
            step0: 0.5,
            fourier_order: 12,
            grid: CrossGrid::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub el_residual: f64,
    pub barycenter_norm: f64,
    pub hausdorff_to_ball: f64,
}

/// Sup over the boundary of | |x - x_bar| - 1 |: the Hausdorff distance to
/// the unit ball centered at the barycenter, for near-circular star domains.
pub fn hausdorff_to_unit_ball(domain: &StarDomain) -> Result<f64> {
    let bary = truncated_barycenter(domain)?;
    let mut worst = 0.0f64;
    for t in uniform_angles(1024) {
        let p = domain.boundary_point(t);
        worst = worst.max(((p - bary).norm() - 1.0).abs());
    }
    Ok(worst)
}

/// Working energy of the optimizer: tor + tau h(beta^2, a); the volume term
/// is dropped because the constraint is restored exactly by rescaling.
fn working_energy(
    domain: &StarDomain,
    f: &Forcing,
    params: &PenaltyParams,
    opts: &OptimizeOpts,
) -> Result<f64> {
    let solver = BetaSolver::new(domain, opts.mesh_h, opts.grid)?;
    let w = solver.domain_space.solve_poisson(|_| 1.0);
    let beta = solver.beta_sq(f)?;
    Ok(torsional_rigidity(&w) + params.tau * h_penalty(beta, params.a))
}

/// Projected gradient descent on F_tau over boundary Fourier coefficients:
/// rho <- rho - step * (Fourier-filtered shape gradient), volume restored by
/// exact rescaling each iteration, Armijo backtracking on the energy.
pub fn minimize_energy(
    initial: &StarDomain,
    f: &Forcing,
    params: &PenaltyParams,
    opts: &OptimizeOpts,
) -> Result<(StarDomain, Vec<TraceRow>)> {
    assert!(params.validate());
    let mut current = volume_normalize(initial);
    let mut energy = working_energy(&current, f, params, opts)?;
    let mut step = opts.step0;
    let mut trace = Vec::new();

    for iter in 0..opts.max_iters {
        let data = compute_boundary_data(
            &current,
            f,
            opts.mesh_h,
            opts.grid,
            GradExtract::default(),
        )?;
        let density = shape_gradient_density(&data, params);
        let gradient = ShapeGradient::project(&density, opts.fourier_order);

        let residual = el_residual(&current, f, params, opts.mesh_h)?;
        let bary = truncated_barycenter(&current)?;
        trace.push(TraceRow {
            iter,
            energy,
            el_residual: residual,
            barycenter_norm: bary.coords.norm(),
            hausdorff_to_ball: hausdorff_to_unit_ball(&current)?,
        });

        // descent in the radial coefficients with exact volume restoration
        let mut improved = false;
        while step >= 1e-8 {
            let mut radial = current.fourier.clone();
            let delta = gradient.as_fourier.scale(-step);
            radial = radial.add(&delta);
            let candidate = volume_normalize(&StarDomain::new(current.center, radial));
            if candidate.validate().is_err() {
                step *= 0.5;
                continue;
            }
            match working_energy(&candidate, f, params, opts) {
                Ok(e) if e < energy - 1e-14 => {
                    let decrease = energy - e;
                    current = candidate;
                    energy = e;
                    improved = true;
                    // allow the step to grow back after successful moves
                    step = (step * 1.5).min(opts.step0);
                    if decrease < 1e-10 {
                        return Ok((current, trace));
                    }
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !improved {
            if trace.len() > 1 {
                // stationary within line-search resolution
                return Ok((current, trace));
            }
            return Err(Error::LineSearchFailure {
                min_step: 1e-8,
                max_step: opts.step0,
            });
        }
    }
    Ok((current, trace))
}

/// Write the optimizer trace as CSV.
pub fn write_trace_csv(trace: &[TraceRow], mut w: impl std::io::Write) -> std::io::Result<()> {
    writeln!(w, "iter,energy,el_residual,barycenter_norm,hausdorff_to_ball")?;
    for row in trace {
        writeln!(
            w,
            "{},{:.12e},{:.12e},{:.12e},{:.12e}",
            row.iter, row.energy, row.el_residual, row.barycenter_norm, row.hausdorff_to_ball
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre_on;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn d_volume_on_ball() {
        let ball = StarDomain::disk(1.0);
        // dilation: n |Omega| = 2 pi
        let v1 = d_volume(&ball, &BoundaryFunction::constant(1.0));
        assert_relative_eq!(v1, TAU, epsilon = 1e-10);
        // odd mode integrates to zero
        let vcos = d_volume(&ball, &BoundaryFunction::mode(1, 1.0, false));
        assert_abs_diff_eq!(vcos, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn d_volume_matches_finite_difference() {
        let dom = StarDomain::ellipse(0.12, 16);
        let velocity = BoundaryFunction::mode(2, 1.0, false);
        let t = 1e-3;
        let fd = (volume(&flow_domain(&dom, &velocity, t))
            - volume(&flow_domain(&dom, &velocity, -t)))
            / (2.0 * t);
        let an = d_volume(&dom, &velocity);
        assert_relative_eq!(an, fd, max_relative = 1e-3);
    }

    #[test]
    fn d_barycenter_translation_field() {
        let ball = StarDomain::disk(1.0);
        // velocity nu . e1 = cos theta generates a unit translation
        let v = d_barycenter(&ball, &BoundaryFunction::mode(1, 1.0, false)).unwrap();
        assert_abs_diff_eq!(v.x, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(v.y, 0.0, epsilon = 1e-12);
        // dilation of a centered ball keeps the barycenter
        let d = d_barycenter(&ball, &BoundaryFunction::constant(1.0)).unwrap();
        assert_abs_diff_eq!(d.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn d_barycenter_matches_finite_difference() {
        let dom = StarDomain::ellipse(0.1, 16);
        let velocity = BoundaryFunction::mode(2, 1.0, false);
        let t = 1e-3;
        let bp = crate::geometry::classical_barycenter(&flow_domain(&dom, &velocity, t));
        let bm = crate::geometry::classical_barycenter(&flow_domain(&dom, &velocity, -t));
        let fd = (bp - bm) / (2.0 * t);
        let an = d_barycenter(&dom, &velocity).unwrap();
        assert_abs_diff_eq!((an - fd).norm(), 0.0, epsilon = 1e-3);
    }

    #[test]
    fn boundary_gradient_of_disk_torsion() {
        // |grad w_B| = 1/2 on the unit circle
        let h = 0.02;
        let mesh = Arc::new(mesh_star_domain(&StarDomain::disk(1.0), h).unwrap());
        let space = DirichletSpace::new(Arc::clone(&mesh)).unwrap();
        let w = space.solve_poisson(|_| 1.0);
        let quad = BoundaryQuad::new(&StarDomain::disk(1.0), 256);
        let grads = boundary_gradient(&w, &quad, h, GradExtract::default());
        let mean: f64 = grads.iter().sum::<f64>() / grads.len() as f64;
        assert_relative_eq!(mean, 0.5, max_relative = 2e-3);
        let worst = grads
            .iter()
            .fold(0.0f64, |m, &g| m.max((g - 0.5).abs()));
        assert!(worst < 0.01, "worst pointwise gradient error {worst}");
        // P1 element-average cross-check agrees at first order
        let p1avg = boundary_gradient_p1avg(&w, &quad, h);
        let mean_p1: f64 = p1avg.iter().sum::<f64>() / p1avg.len() as f64;
        assert_relative_eq!(mean_p1, 0.5, max_relative = 0.05);
    }

    #[test]
    fn d_torsion_ball_dilation() {
        // -(1/2) (1/n^2) 2 pi = -pi/4, which equals (n+2) tor(B)
        let d = d_torsion(&StarDomain::disk(1.0), &BoundaryFunction::constant(1.0), 0.02).unwrap();
        assert_relative_eq!(d, -PI / 4.0, max_relative = 2e-3);
        // translation invariance
        let dc = d_torsion(
            &StarDomain::disk(1.0),
            &BoundaryFunction::mode(1, 1.0, false),
            0.02,
        )
        .unwrap();
        assert_abs_diff_eq!(dc, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn d_torsion_matches_finite_difference_on_ellipse() {
        let dom = StarDomain::ellipse(0.1, 16);
        let velocity = BoundaryFunction::mode(2, 1.0, false);
        let h = 0.02;
        let t = 1e-3;
        let tor_at = |s: f64| {
            let flowed = flow_domain(&dom, &velocity, s);
            let mesh = Arc::new(mesh_star_domain(&flowed, h).unwrap());
            torsional_rigidity(&DirichletSpace::new(mesh).unwrap().solve_poisson(|_| 1.0))
        };
        let fd = (tor_at(t) - tor_at(-t)) / (2.0 * t);
        let an = d_torsion(&dom, &velocity, h).unwrap();
        assert_relative_eq!(an, fd, max_relative = 1e-3);
    }

    #[test]
    fn adjoint_p_radial_oracle() {
        // on the ball with f = 1: -Delta p = w_B radially; integrate the ODE
        // p'(r) = -(1/r) int_0^r s (1-s^2)/4 ds, p(1) = 0, by quadrature
        let oracle = |r: f64| -> f64 {
            // inner integral has closed form r^2/8 - r^4/16; integrate p'
            // from r to 1 by Gauss quadrature to stay independent of the
            // closed form for p itself
            let (xs, ws) = gauss_legendre_on(64, r, 1.0);
            xs.iter()
                .zip(&ws)
                .map(|(&s, &w)| w * (s / 8.0 - s * s * s / 16.0))
                .sum()
        };
        // the stated closed form agrees with the oracle
        for &r in &[0.0, 0.3, 0.7, 1.0] {
            let closed = (1.0 - r * r) * (3.0 - r * r) / 64.0;
            assert_abs_diff_eq!(oracle(r), closed, epsilon = 1e-12);
        }
        let h = 0.03;
        let mesh = Arc::new(mesh_star_domain(&StarDomain::disk(1.0), h).unwrap());
        let space = DirichletSpace::new(Arc::clone(&mesh)).unwrap();
        let w = space.solve_poisson(|_| 1.0);
        let p = adjoint_p(&space, &w);
        for (v, &pv) in mesh.vertices.iter().zip(&p.values) {
            let exact = oracle(v.coords.norm());
            assert_abs_diff_eq!(pv, exact, epsilon = 5e-4);
        }
    }

    #[test]
    fn adjoint_p_linearity_and_zero() {
        let mesh = Arc::new(mesh_star_domain(&StarDomain::disk(1.0), 0.06).unwrap());
        let space = DirichletSpace::new(Arc::clone(&mesh)).unwrap();
        let zero = FemField::zero(Arc::clone(&mesh));
        let p0 = adjoint_p(&space, &zero);
        assert!(p0.values.iter().all(|&v| v == 0.0));
        let w = space.solve_poisson(|_| 1.0);
        let p1 = adjoint_p(&space, &w);
        let w2 = FemField {
            mesh: Arc::clone(&mesh),
            values: w.values.iter().map(|v| 2.0 * v).collect(),
        };
        let p2 = adjoint_p(&space, &w2);
        for (a, b) in p1.values.iter().zip(&p2.values) {
            assert_abs_diff_eq!(2.0 * a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn adjoint_p1_vanishes_on_ball_and_flips_sign() {
        let h = 0.04;
        let ball = StarDomain::disk(1.0);
        let solver = BetaSolver::new(&ball, h, CrossGrid::default()).unwrap();
        let (u, ub) = solver.solve_pair(&Forcing::Constant(1.0));
        let ub_on = interpolate_onto(&ub, &solver.domain_space.mesh);
        let p1 = adjoint_p1(&solver.domain_space, &u, &ub_on);
        let scale = u.max_value();
        assert!(p1.max_value().abs() < 0.02 * scale);

        // antisymmetry
        let p1_swapped = adjoint_p1(&solver.domain_space, &ub_on, &u);
        for (a, b) in p1.values.iter().zip(&p1_swapped.values) {
            assert_abs_diff_eq!(*a, -*b, epsilon = 1e-12);
        }
    }

    #[test]
    fn vector_v_on_symmetric_domains() {
        let h = 0.03;
        // exact ball: p2 ~ 0 so V ~ 0
        let data = compute_boundary_data(
            &StarDomain::disk(1.0),
            &Forcing::Constant(1.0),
            h,
            CrossGrid::default(),
            GradExtract::default(),
        )
        .unwrap();
        assert!(data.v_vec.norm() < 5e-3, "V on ball = {}", data.v_vec.norm());

        // x-axis symmetric ellipse with symmetric f: V_y = 0
        let dom = StarDomain::ellipse(0.1, 16);
        let data = compute_boundary_data(
            &dom,
            &Forcing::Constant(1.0),
            h,
            CrossGrid::default(),
            GradExtract::default(),
        )
        .unwrap();
        assert!(data.v_vec.y.abs() < 1e-6, "V_y = {}", data.v_vec.y);
        assert!(data.v_vec.norm().is_finite());
    }

    #[test]
    fn d_beta_sq_zero_on_ball_for_mean_zero_velocity() {
        let d = d_beta_sq(
            &StarDomain::disk(1.0),
            &Forcing::Constant(1.0),
            &BoundaryFunction::mode(2, 1.0, false),
            0.03,
            CrossGrid::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(d, 0.0, epsilon = 5e-3);
    }

    proptest! {
        #[test]
        fn c_omega_bounded(beta in 0.0f64..5.0, a in 1e-3f64..1.0) {
            prop_assert!(c_omega(beta, a).abs() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn el_residual_on_ball_without_penalty() {
        let params = PenaltyParams {
            a: 0.5,
            tau: 0.0,
            ..Default::default()
        };
        // tau = 0 fails validate, so call the density path directly
        let data = compute_boundary_data(
            &StarDomain::disk(1.0),
            &Forcing::Constant(1.0),
            0.02,
            CrossGrid::default(),
            GradExtract::default(),
        )
        .unwrap();
        let raw: Vec<f64> = data.grad_w_sq.iter().map(|g| 0.5 * g).collect();
        let smooth = ShapeGradient::project(&raw, 16);
        let vals: Vec<f64> = data
            .quad
            .angles
            .iter()
            .map(|&t| smooth.as_fourier.eval(t))
            .collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let residual = (hi - lo) / mean;
        assert!(residual < 1e-2, "ball EL residual {residual}");
        assert_relative_eq!(mean, 1.0 / 8.0, max_relative = 5e-3);
        let _ = params;
    }

    #[test]
    fn el_residual_ellipse_not_critical() {
        let params = PenaltyParams {
            a: 0.5,
            tau: 1e-6,
            eta: 0.05,
        };
        let res = el_residual(&StarDomain::ellipse(0.1, 16), &Forcing::Constant(1.0), &params, 0.03)
            .unwrap();
        assert!(res > 0.05, "ellipse EL residual {res}");
    }

    #[test]
    fn minimize_from_ball_stays_put() {
        let params = PenaltyParams {
            a: 0.01,
            tau: 1e-3,
            eta: 0.05,
        };
        let opts = OptimizeOpts {
            mesh_h: 0.06,
            max_iters: 8,
            ..Default::default()
        };
        let (final_dom, trace) = minimize_energy(
            &StarDomain::disk(1.0),
            &Forcing::Constant(1.0),
            &params,
            &opts,
        )
        .unwrap();
        // energies non-increasing, final shape still a ball
        for pair in trace.windows(2) {
            assert!(pair[1].energy <= pair[0].energy + 1e-14);
        }
        assert!(hausdorff_to_unit_ball(&final_dom).unwrap() < 5e-3);
    }
}
