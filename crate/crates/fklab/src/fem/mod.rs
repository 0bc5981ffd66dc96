//! P1 finite elements for the Dirichlet Laplacian: Poisson solves, the
//! generalized eigenproblem, and cross-domain L2 integrals of zero-extended
//! fields.

pub mod locate;
pub mod sparse;

use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;
use locate::MeshLocator;
use nalgebra::{DMatrix, Point2};
use sparse::{CsrMatrix, SkylineCholesky};
use std::io::Write;
use std::sync::Arc;

/// Nodal scalar field on a mesh; Dirichlet fields vanish at boundary
/// vertices and are extended by zero outside the mesh.
#[derive(Debug, Clone)]
pub struct FemField {
    pub mesh: Arc<TriangleMesh>,
    pub values: Vec<f64>,
}

impl FemField {
    pub fn zero(mesh: Arc<TriangleMesh>) -> Self {
        let n = mesh.num_vertices();
        Self {
            mesh,
            values: vec![0.0; n],
        }
    }

    /// Nodal interpolant of a function.
    pub fn from_fn(mesh: Arc<TriangleMesh>, f: impl Fn(Point2<f64>) -> f64) -> Self {
        let values = mesh.vertices.iter().map(|&v| f(v)).collect();
        Self { mesh, values }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// int_Omega u^2 by exact P1 quadrature.
    pub fn l2_norm_sq(&self) -> f64 {
        element_l2_product(&self.mesh, &self.values, &self.values)
    }

    /// int_Omega u dx by exact P1 quadrature.
    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let area = self.mesh.element_area[t];
            acc += area / 3.0 * (self.values[tri[0]] + self.values[tri[1]] + self.values[tri[2]]);
        }
        acc
    }

    /// Export as (x, y, value) CSV rows with a header.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "x,y,value")?;
        for (v, val) in self.mesh.vertices.iter().zip(&self.values) {
            writeln!(w, "{:.12e},{:.12e},{:.12e}", v.x, v.y, val)?;
        }
        Ok(())
    }
}

/// int (u v) over the mesh for nodal fields, via the exact P1 element rule.
fn element_l2_product(mesh: &TriangleMesh, u: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.element_area[t];
        let (u0, u1, u2) = (u[tri[0]], u[tri[1]], u[tri[2]]);
        let (v0, v1, v2) = (v[tri[0]], v[tri[1]], v[tri[2]]);
        // consistent mass: A/12 * (2 on diagonal, 1 off)
        acc += area / 12.0
            * (2.0 * (u0 * v0 + u1 * v1 + u2 * v2)
                + u0 * v1
                + u0 * v2
                + u1 * v0
                + u1 * v2
                + u2 * v0
                + u2 * v1);
    }
    acc
}

/// Dirichlet P1 space on a mesh: interior indexing, assembled stiffness and
/// consistent mass matrices, and a cached Cholesky factorization of the
/// stiffness.
pub struct DirichletSpace {
    pub mesh: Arc<TriangleMesh>,
    pub interior: Vec<usize>,
    vertex_to_interior: Vec<usize>,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    factor: SkylineCholesky,
}

const NOT_INTERIOR: usize = usize::MAX;

impl DirichletSpace {
    pub fn new(mesh: Arc<TriangleMesh>) -> Result<Self> {
        let nv = mesh.num_vertices();
        let interior: Vec<usize> = mesh.interior_vertices();
        let mut vertex_to_interior = vec![NOT_INTERIOR; nv];
        for (i, &v) in interior.iter().enumerate() {
            vertex_to_interior[v] = i;
        }
        let n = interior.len();
        let mut k_triplets = Vec::with_capacity(9 * mesh.num_triangles());
        let mut m_triplets = Vec::with_capacity(9 * mesh.num_triangles());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let area = mesh.element_area[t];
            let p = [
                mesh.vertices[tri[0]],
                mesh.vertices[tri[1]],
                mesh.vertices[tri[2]],
            ];
            // edge opposite to local vertex i
            let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
            for i in 0..3 {
                let gi = vertex_to_interior[tri[i]];
                if gi == NOT_INTERIOR {
                    continue;
                }
                for j in 0..3 {
                    let gj = vertex_to_interior[tri[j]];
                    if gj == NOT_INTERIOR {
                        continue;
                    }
                    let kij = e[i].dot(&e[j]) / (4.0 * area);
                    let mij = if i == j { area / 6.0 } else { area / 12.0 };
                    k_triplets.push((gi, gj, kij));
                    m_triplets.push((gi, gj, mij));
                }
            }
        }
        let stiffness = CsrMatrix::from_triplets(n, &k_triplets);
        let mass = CsrMatrix::from_triplets(n, &m_triplets);
        let factor = SkylineCholesky::factor(&stiffness)?;
        Ok(Self {
            mesh,
            interior,
            vertex_to_interior,
            stiffness,
            mass,
            factor,
        })
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    /// Load vector int f phi_i for interior hats, by the edge-midpoint rule
    /// (exact for quadratic f, and for element-wise constant f).
    pub fn load_vector(&self, f: impl Fn(Point2<f64>) -> f64) -> Vec<f64> {
        let mesh = &self.mesh;
        let mut load = vec![0.0; self.interior.len()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let area = mesh.element_area[t];
            let p = [
                mesh.vertices[tri[0]],
                mesh.vertices[tri[1]],
                mesh.vertices[tri[2]],
            ];
            let mids = [
                nalgebra::center(&p[0], &p[1]),
                nalgebra::center(&p[1], &p[2]),
                nalgebra::center(&p[2], &p[0]),
            ];
            let fm = [f(mids[0]), f(mids[1]), f(mids[2])];
            // hat i is 1/2 on the two midpoints of its adjacent edges
            for i in 0..3 {
                let gi = self.vertex_to_interior[tri[i]];
                if gi == NOT_INTERIOR {
                    continue;
                }
                let contrib = match i {
                    0 => fm[0] + fm[2],
                    1 => fm[0] + fm[1],
                    _ => fm[1] + fm[2],
                };
                load[gi] += area / 3.0 * 0.5 * contrib;
            }
        }
        load
    }

    /// Expand an interior vector into a full nodal field (zero on boundary).
    pub fn expand(&self, interior_values: &[f64]) -> FemField {
        let mut values = vec![0.0; self.mesh.num_vertices()];
        for (i, &v) in self.interior.iter().enumerate() {
            values[v] = interior_values[i];
        }
        FemField {
            mesh: Arc::clone(&self.mesh),
            values,
        }
    }

    /// Restrict a full nodal field to interior values.
    pub fn restrict(&self, field: &FemField) -> Vec<f64> {
        self.interior.iter().map(|&v| field.values[v]).collect()
    }

    /// Solve -Delta u = f, u = 0 on the boundary.
    pub fn solve_poisson(&self, f: impl Fn(Point2<f64>) -> f64) -> FemField {
        let load = self.load_vector(f);
        self.expand(&self.factor.solve(&load))
    }

    /// Solve -Delta u = g for a right-hand side given as a nodal field on
    /// this space's mesh (consistent load M g).
    pub fn solve_poisson_nodal(&self, g: &FemField) -> FemField {
        assert!(Arc::ptr_eq(&g.mesh, &self.mesh));
        let gi = self.restrict(g);
        let load = self.mass.matvec_alloc(&gi);
        self.expand(&self.factor.solve(&load))
    }

    /// Maximum residual of the discrete system K u = b relative to the load.
    pub fn residual_inf(&self, u: &FemField, f: impl Fn(Point2<f64>) -> f64) -> f64 {
        let load = self.load_vector(f);
        let ui = self.restrict(u);
        let ku = self.stiffness.matvec_alloc(&ui);
        let scale = load.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        ku.iter()
            .zip(&load)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale
    }

    /// First k Dirichlet eigenpairs by shift-invert Lanczos (shift 0) with
    /// full reorthogonalization in the M-inner product.
    pub fn solve_eigen(&self, k: usize) -> Result<SpectralBundle> {
        assert!(k >= 1);
        let n = self.num_interior();
        assert!(k * 8 < n, "requested eigenpair count too close to the dof count");
        let m_max = (4 * k + 60).min(n);
        let tol = 1e-9;

        let m_dot = |x: &[f64], y: &[f64]| self.mass.bilinear(x, y);

        // deterministic start vector
        let mut q0: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.3 * ((i as f64 * 0.7311).sin()))
            .collect();
        let norm0 = m_dot(&q0, &q0).sqrt();
        q0.iter_mut().for_each(|v| *v /= norm0);

        let mut basis: Vec<Vec<f64>> = vec![q0];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();

        let mut converged: Option<(Vec<f64>, DMatrix<f64>)> = None;
        while basis.len() <= m_max {
            let j = basis.len() - 1;
            let qj = &basis[j];
            let mut w = self.factor.solve(&self.mass.matvec_alloc(qj));
            let alpha = m_dot(&w, qj);
            for (wi, qi) in w.iter_mut().zip(qj) {
                *wi -= alpha * qi;
            }
            if j > 0 {
                let beta_prev = betas[j - 1];
                let qprev = &basis[j - 1];
                for (wi, qi) in w.iter_mut().zip(qprev) {
                    *wi -= beta_prev * qi;
                }
            }
            alphas.push(alpha);
            // full reorthogonalization, twice
            for _ in 0..2 {
                for q in &basis {
                    let c = m_dot(&w, q);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let beta = m_dot(&w, &w).sqrt();
            let dim = basis.len();
            // check Ritz convergence periodically once the space is large enough
            if dim >= 2 * k + 6 || beta < 1e-12 || dim == m_max {
                if let Some(res) = self.ritz_converged(&basis, &alphas, &betas, k, tol) {
                    converged = Some(res);
                    break;
                }
                if beta < 1e-12 {
                    break;
                }
            }
            if dim == m_max {
                break;
            }
            betas.push(beta);
            w.iter_mut().for_each(|v| *v /= beta);
            basis.push(w);
        }
        let (thetas, vectors) = match converged {
            Some(r) => r,
            None => {
                return Err(Error::EigenNoConvergence {
                    requested: k,
                    max_dim: m_max,
                })
            }
        };

        let mut eigenvalues = Vec::with_capacity(k);
        let mut eigenfunctions = Vec::with_capacity(k);
        for i in 0..k {
            let lambda = 1.0 / thetas[i];
            let mut z = vec![0.0; n];
            for (j, q) in basis.iter().enumerate() {
                let c = vectors[(j, i)];
                for (zi, qi) in z.iter_mut().zip(q) {
                    *zi += c * qi;
                }
            }
            let norm = m_dot(&z, &z).sqrt();
            z.iter_mut().for_each(|v| *v /= norm);
            eigenvalues.push(lambda);
            eigenfunctions.push(self.expand(&z));
        }
        fix_signs(self, &mut eigenfunctions);

        // multiplicity clusters: relative gap <= 1e-6
        let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
        for i in 1..k {
            let prev = eigenvalues[i - 1];
            if (eigenvalues[i] - prev).abs() <= 1e-6 * prev.abs() {
                clusters.last_mut().unwrap().push(i);
            } else {
                clusters.push(vec![i]);
            }
        }

        Ok(SpectralBundle {
            eigenvalues,
            eigenfunctions,
            clusters,
        })
    }

    /// Ritz extraction; returns (inverse eigenvalues, coefficient matrix) if
    /// the first k pairs meet the residual criterion.
    fn ritz_converged(
        &self,
        basis: &[Vec<f64>],
        alphas: &[f64],
        betas: &[f64],
        k: usize,
        tol: f64,
    ) -> Option<(Vec<f64>, DMatrix<f64>)> {
        let dim = alphas.len();
        if dim < k {
            return None;
        }
        let mut t = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            t[(i, i)] = alphas[i];
            if i + 1 < dim && i < betas.len() {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = t.symmetric_eigen();
        // sort by theta descending (largest theta = smallest lambda)
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

        let n = basis[0].len();
        let mut thetas = Vec::with_capacity(k);
        let mut coeffs = DMatrix::zeros(dim, k);
        for (col, &oi) in order.iter().take(k).enumerate() {
            let theta = eig.eigenvalues[oi];
            if theta <= 0.0 {
                return None;
            }
            let lambda = 1.0 / theta;
            let mut z = vec![0.0; n];
            for (j, q) in basis.iter().enumerate() {
                let c = eig.eigenvectors[(j, oi)];
                for (zi, qi) in z.iter_mut().zip(q) {
                    *zi += c * qi;
                }
            }
            // explicit residual || K z - lambda M z || <= tol * lambda * ||z||_M
            let kz = self.stiffness.matvec_alloc(&z);
            let mz = self.mass.matvec_alloc(&z);
            let mut res = 0.0;
            for i in 0..n {
                let r = kz[i] - lambda * mz[i];
                res += r * r;
            }
            let znorm = self.mass.bilinear(&z, &z).sqrt();
            if res.sqrt() > tol * lambda * znorm {
                return None;
            }
            thetas.push(theta);
            for j in 0..dim {
                coeffs[(j, col)] = eig.eigenvectors[(j, oi)];
            }
        }
        Some((thetas, coeffs))
    }
}

/// Fix eigenfunction signs: the ground state is made nonnegative, higher
/// modes get their first nonvanishing harmonic-polynomial moment positive.
fn fix_signs(space: &DirichletSpace, fields: &mut [FemField]) {
    let moments: [fn(Point2<f64>) -> f64; 7] = [
        |_| 1.0,
        |p| p.x,
        |p| p.y,
        |p| p.x * p.x - p.y * p.y,
        |p| 2.0 * p.x * p.y,
        |p| p.x * (p.x * p.x - 3.0 * p.y * p.y),
        |p| p.y * (3.0 * p.x * p.x - p.y * p.y),
    ];
    for (idx, field) in fields.iter_mut().enumerate() {
        if idx == 0 {
            if field.integral() < 0.0 {
                field.values.iter_mut().for_each(|v| *v = -*v);
            }
            continue;
        }
        let area = space.mesh.total_area();
        for g in &moments {
            let gv = FemField::from_fn(Arc::clone(&space.mesh), g);
            let m = element_l2_product(&space.mesh, &field.values, &gv.values);
            let scale = (gv.l2_norm_sq() * area.max(1.0)).sqrt().max(1e-12);
            if m.abs() > 1e-3 * scale {
                if m < 0.0 {
                    field.values.iter_mut().for_each(|v| *v = -*v);
                }
                break;
            }
        }
    }
}

/// First k Dirichlet eigenvalues with L2-normalized eigenfunctions and
/// multiplicity clusters.
pub struct SpectralBundle {
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<FemField>,
    pub clusters: Vec<Vec<usize>>,
}

impl SpectralBundle {
    /// The cluster containing eigenvalue index i.
    pub fn cluster_of(&self, i: usize) -> &[usize] {
        self.clusters
            .iter()
            .find(|c| c.contains(&i))
            .map(|c| c.as_slice())
            .unwrap()
    }
}

/// Solve -Delta u = f with zero boundary values on the given mesh.
pub fn solve_poisson(mesh: &Arc<TriangleMesh>, f: impl Fn(Point2<f64>) -> f64) -> Result<FemField> {
    Ok(DirichletSpace::new(Arc::clone(mesh))?.solve_poisson(f))
}

/// Torsion function: -Delta w = 1 with zero boundary values.
pub fn torsion_function(mesh: &Arc<TriangleMesh>) -> Result<FemField> {
    solve_poisson(mesh, |_| 1.0)
}

/// Torsional rigidity tor = -1/2 int w of a solved torsion field.
pub fn torsional_rigidity(w: &FemField) -> f64 {
    -0.5 * w.integral()
}

/// First k Dirichlet eigenpairs on a mesh.
pub fn solve_eigen(mesh: &Arc<TriangleMesh>, k: usize) -> Result<SpectralBundle> {
    DirichletSpace::new(Arc::clone(mesh))?.solve_eigen(k)
}

/// Options for the background-grid quadrature of cross-domain integrals.
#[derive(Debug, Clone, Copy)]
pub struct CrossGrid {
    pub resolution: usize,
}

impl Default for CrossGrid {
    fn default() -> Self {
        Self { resolution: 512 }
    }
}

/// int_{R^2} (a - b)^2 with both fields extended by zero.
///
/// Fields on the same mesh are integrated exactly with the element mass rule;
/// otherwise a midpoint rule on a uniform grid covering both hulls is used.
pub fn cross_l2(a: &FemField, b: &FemField) -> f64 {
    cross_l2_with(a, b, CrossGrid::default())
}

pub fn cross_l2_with(a: &FemField, b: &FemField, grid: CrossGrid) -> f64 {
    if Arc::ptr_eq(&a.mesh, &b.mesh) {
        let diff: Vec<f64> = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| x - y)
            .collect();
        return element_l2_product(&a.mesh, &diff, &diff);
    }
    let (alo, ahi) = a.mesh.bounding_box();
    let (blo, bhi) = b.mesh.bounding_box();
    let lo = Point2::new(alo.x.min(blo.x), alo.y.min(blo.y));
    let hi = Point2::new(ahi.x.max(bhi.x), ahi.y.max(bhi.y));
    let la = MeshLocator::new(&a.mesh);
    let lb = MeshLocator::new(&b.mesh);
    grid_integral(lo, hi, grid.resolution, |p| {
        let va = la.interpolate(&a.values, p);
        let vb = lb.interpolate(&b.values, p);
        (va - vb) * (va - vb)
    })
}

/// int_{R^2} (a - g)^2 against an analytic function supported in the given
/// bounding box, both extended by zero.
pub fn cross_l2_analytic(
    a: &FemField,
    g: impl Fn(Point2<f64>) -> f64,
    g_box: (Point2<f64>, Point2<f64>),
    grid: CrossGrid,
) -> f64 {
    let (alo, ahi) = a.mesh.bounding_box();
    let lo = Point2::new(alo.x.min(g_box.0.x), alo.y.min(g_box.0.y));
    let hi = Point2::new(ahi.x.max(g_box.1.x), ahi.y.max(g_box.1.y));
    let la = MeshLocator::new(&a.mesh);
    grid_integral(lo, hi, grid.resolution, |p| {
        let va = la.interpolate(&a.values, p);
        let vg = g(p);
        (va - vg) * (va - vg)
    })
}

fn grid_integral(
    lo: Point2<f64>,
    hi: Point2<f64>,
    resolution: usize,
    f: impl Fn(Point2<f64>) -> f64,
) -> f64 {
    let nx = resolution;
    let ny = resolution;
    let dx = (hi.x - lo.x) / nx as f64;
    let dy = (hi.y - lo.y) / ny as f64;
    let mut acc = 0.0;
    for iy in 0..ny {
        let y = lo.y + (iy as f64 + 0.5) * dy;
        for ix in 0..nx {
            let x = lo.x + (ix as f64 + 0.5) * dx;
            acc += f(Point2::new(x, y));
        }
    }
    acc * dx * dy
}
