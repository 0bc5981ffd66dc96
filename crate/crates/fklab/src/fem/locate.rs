//! Point location in a triangulation via a uniform bin grid, with
//! barycentric interpolation of nodal fields.

use crate::geometry::TriangleMesh;
use nalgebra::Point2;

pub struct MeshLocator<'a> {
    mesh: &'a TriangleMesh,
    lo: Point2<f64>,
    inv_cell: f64,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<u32>>,
}

impl<'a> MeshLocator<'a> {
    pub fn new(mesh: &'a TriangleMesh) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(1e-12);
        // aim for a few triangles per bin
        let target = (mesh.num_triangles() as f64).sqrt().ceil() as usize;
        let n = target.clamp(8, 512);
        let cell = extent / n as f64;
        let nx = ((hi.x - lo.x) / cell).ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).ceil() as usize + 1;
        let mut bins = vec![Vec::new(); nx * ny];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let (mut bx0, mut by0) = (usize::MAX, usize::MAX);
            let (mut bx1, mut by1) = (0usize, 0usize);
            for &v in tri {
                let p = mesh.vertices[v];
                let cx = (((p.x - lo.x) / cell) as usize).min(nx - 1);
                let cy = (((p.y - lo.y) / cell) as usize).min(ny - 1);
                bx0 = bx0.min(cx);
                by0 = by0.min(cy);
                bx1 = bx1.max(cx);
                by1 = by1.max(cy);
            }
            for cx in bx0..=bx1 {
                for cy in by0..=by1 {
                    bins[cy * nx + cx].push(t as u32);
                }
            }
        }
        Self {
            mesh,
            lo,
            inv_cell: 1.0 / cell,
            nx,
            ny,
            bins,
        }
    }

    /// Find the triangle containing p and its barycentric coordinates.
    pub fn locate(&self, p: Point2<f64>) -> Option<(usize, [f64; 3])> {
        let cx = ((p.x - self.lo.x) * self.inv_cell).floor();
        let cy = ((p.y - self.lo.y) * self.inv_cell).floor();
        if cx < 0.0 || cy < 0.0 {
            return None;
        }
        let (cx, cy) = (cx as usize, cy as usize);
        if cx >= self.nx || cy >= self.ny {
            return None;
        }
        for &t in &self.bins[cy * self.nx + cx] {
            let tri = &self.mesh.triangles[t as usize];
            let a = self.mesh.vertices[tri[0]];
            let b = self.mesh.vertices[tri[1]];
            let c = self.mesh.vertices[tri[2]];
            let det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
            if det.abs() < 1e-30 {
                continue;
            }
            let l1 = ((p.x - a.x) * (c.y - a.y) - (p.y - a.y) * (c.x - a.x)) / det;
            let l2 = ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) / det;
            let l0 = 1.0 - l1 - l2;
            let tol = -1e-10;
            if l0 >= tol && l1 >= tol && l2 >= tol {
                return Some((t as usize, [l0.max(0.0), l1.max(0.0), l2.max(0.0)]));
            }
        }
        None
    }

    /// Interpolate nodal values at p, zero outside the mesh.
    pub fn interpolate(&self, values: &[f64], p: Point2<f64>) -> f64 {
        match self.locate(p) {
            None => 0.0,
            Some((t, l)) => {
                let tri = &self.mesh.triangles[t];
                l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{mesh::mesh_star_domain, StarDomain};
    use approx::assert_abs_diff_eq;

    #[test]
    fn locates_and_interpolates_linear_field() {
        let dom = StarDomain::disk(1.0);
        let mesh = mesh_star_domain(&dom, 0.1).unwrap();
        // nodal values of the linear function 2x - y are reproduced exactly
        let values: Vec<f64> = mesh.vertices.iter().map(|v| 2.0 * v.x - v.y).collect();
        let loc = MeshLocator::new(&mesh);
        for &(x, y) in &[(0.0, 0.0), (0.3, -0.2), (-0.5, 0.1), (0.7, 0.69)] {
            let p = Point2::new(x, y);
            if x * x + y * y < 0.98 {
                assert_abs_diff_eq!(loc.interpolate(&values, p), 2.0 * x - y, epsilon = 1e-12);
            }
        }
        // outside the disk: zero extension
        assert_eq!(loc.interpolate(&values, Point2::new(2.0, 0.0)), 0.0);
    }

    #[test]
    fn vertices_are_located() {
        let dom = StarDomain::ellipse(0.1, 16);
        let mesh = mesh_star_domain(&dom, 0.15).unwrap();
        let loc = MeshLocator::new(&mesh);
        for v in &mesh.vertices {
            assert!(loc.locate(*v).is_some());
        }
    }
}
