//! Structured P1 triangulations of the unit square and the L-shaped domain
//! `(-1,1)^2 \ [0,1]^2`.
//!
//! Every grid cell is split along its lower-left to upper-right diagonal,
//! and all triangles are stored counter-clockwise. Homogeneous Dirichlet
//! conditions are imposed by elimination: only interior vertices carry
//! degrees of freedom.

use std::collections::HashMap;
use std::io::{self, Write};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh resolution must be at least 1")]
    ZeroResolution,
    #[error("triangle index {0} out of range")]
    TriangleOutOfRange(usize),
    #[error("triangle {0} is degenerate (zero area)")]
    Degenerate(usize),
}

/// Area and constant hat-function gradients of one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    is_boundary: Vec<bool>,
    interior_index: Vec<Option<usize>>,
    interior_vertices: Vec<usize>,
}

impl Mesh {
    fn from_parts(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, is_boundary: Vec<bool>) -> Self {
        let mut interior_index = vec![None; vertices.len()];
        let mut interior_vertices = Vec::new();
        for (v, &b) in is_boundary.iter().enumerate() {
            if !b {
                interior_index[v] = Some(interior_vertices.len());
                interior_vertices.push(v);
            }
        }
        Self {
            vertices,
            triangles,
            is_boundary,
            interior_index,
            interior_vertices,
        }
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_boundary(&self, vertex: usize) -> bool {
        self.is_boundary[vertex]
    }

    /// Interior DOF number of a vertex, `None` on the boundary.
    pub fn interior_index(&self, vertex: usize) -> Option<usize> {
        self.interior_index[vertex]
    }

    /// Vertex number of each interior DOF, in DOF order.
    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior_vertices.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.is_boundary.iter().filter(|&&b| b).count()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| signed_area(self.corners(t)))
            .sum()
    }

    pub fn corners(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn element_geometry(&self, t: usize) -> Result<ElementGeometry, MeshError> {
        if t >= self.triangles.len() {
            return Err(MeshError::TriangleOutOfRange(t));
        }
        triangle_geometry(self.corners(t)).ok_or(MeshError::Degenerate(t))
    }

    /// Nodal interpolant of `f` restricted to the interior DOFs.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.interior_vertices
            .iter()
            .map(|&v| {
                let [x, y] = self.vertices[v];
                f(x, y)
            })
            .collect()
    }

    /// Expands interior coefficients to a per-vertex vector with zeros on the boundary.
    pub fn extend_by_zero(&self, u: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_vertices()];
        for (&v, &val) in self.interior_vertices.iter().zip(u) {
            full[v] = val;
        }
        full
    }

    /// Plain-text dump: one `vertex x y` line per vertex, then one
    /// `triangle i j k` line per element.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        for [x, y] in &self.vertices {
            writeln!(out, "vertex {x:.17e} {y:.17e}")?;
        }
        for [i, j, k] in &self.triangles {
            writeln!(out, "triangle {i} {j} {k}")?;
        }
        Ok(())
    }
}

fn signed_area([p0, p1, p2]: [[f64; 2]; 3]) -> f64 {
    0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
}

/// P1 geometry of a triangle given by its corners; `None` if degenerate.
pub fn triangle_geometry(corners: [[f64; 2]; 3]) -> Option<ElementGeometry> {
    let [p0, p1, p2] = corners;
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let grads = [
        [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
        [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
        [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
    ];
    Some(ElementGeometry {
        area: 0.5 * det.abs(),
        grads,
    })
}

/// Builds a triangulation from a set of unit-size grid cells given by their
/// lower-left integer corner. Vertex coordinates are `origin + h * (i, j)`.
/// Shared vertices are merged through their integer grid coordinates.
fn grid_mesh(
    cells: &[(i64, i64)],
    origin: [f64; 2],
    h: f64,
    on_boundary: impl Fn(i64, i64) -> bool,
) -> Mesh {
    let mut ids: HashMap<(i64, i64), usize> = HashMap::new();
    let mut keys: Vec<(i64, i64)> = Vec::new();
    let mut id_of = |key: (i64, i64)| -> usize {
        *ids.entry(key).or_insert_with(|| {
            keys.push(key);
            keys.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(2 * cells.len());
    for &(i, j) in cells {
        let a = id_of((i, j));
        let b = id_of((i + 1, j));
        let c = id_of((i + 1, j + 1));
        let d = id_of((i, j + 1));
        triangles.push([a, b, c]);
        triangles.push([a, c, d]);
    }
    let vertices = keys
        .iter()
        .map(|&(i, j)| [origin[0] + h * i as f64, origin[1] + h * j as f64])
        .collect();
    let is_boundary = keys.iter().map(|&(i, j)| on_boundary(i, j)).collect();
    Mesh::from_parts(vertices, triangles, is_boundary)
}

/// Uniform `n x n` mesh of `(0,1)^2`.
pub fn unit_square_mesh(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::ZeroResolution);
    }
    let m = n as i64;
    // Row-major vertex numbering: emit cells bottom to top, left to right.
    let cells: Vec<(i64, i64)> = (0..m).flat_map(|j| (0..m).map(move |i| (i, j))).collect();
    let h = 1.0 / n as f64;
    Ok(grid_mesh(&cells, [0.0, 0.0], h, |i, j| {
        i == 0 || j == 0 || i == m || j == m
    }))
}

/// L-shaped domain `(-1,1)^2 \ [0,1]^2` with `n` cells per unit length.
pub fn l_shape_mesh(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::ZeroResolution);
    }
    let m = n as i64;
    // Grid indices run over [0, 2m]; index m corresponds to coordinate 0.
    let cells: Vec<(i64, i64)> = (0..2 * m)
        .flat_map(|j| (0..2 * m).map(move |i| (i, j)))
        .filter(|&(i, j)| !(i >= m && j >= m))
        .collect();
    let h = 1.0 / n as f64;
    Ok(grid_mesh(&cells, [-1.0, -1.0], h, |i, j| {
        let outer = i == 0 || j == 0 || i == 2 * m || j == 2 * m;
        let reentrant = (i == m && j >= m) || (j == m && i >= m);
        outer || reentrant
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn check_invariants(mesh: &Mesh, area: f64) {
        for t in 0..mesh.n_triangles() {
            assert!(signed_area(mesh.corners(t)) > 0.0, "triangle {t} not CCW");
            let g = mesh.element_geometry(t).unwrap();
            let sx: f64 = g.grads.iter().map(|v| v[0]).sum();
            let sy: f64 = g.grads.iter().map(|v| v[1]).sum();
            assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
        }
        assert!((mesh.total_area() - area).abs() < 1e-12);
        assert_eq!(mesh.n_interior() + mesh.n_boundary(), mesh.n_vertices());
        for (k, &v) in mesh.interior_vertices().iter().enumerate() {
            assert_eq!(mesh.interior_index(v), Some(k));
        }
        // Every vertex is used.
        let mut used = vec![false; mesh.n_vertices()];
        for tri in mesh.triangles() {
            for &v in tri {
                used[v] = true;
            }
        }
        assert!(used.iter().all(|&u| u));
    }

    /// Conformity: every interior edge is shared by exactly two triangles
    /// with opposite orientation, every boundary edge by exactly one.
    fn check_conforming(mesh: &Mesh) {
        let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
        for tri in mesh.triangles() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += if a < b { 1 } else { -1 };
            }
        }
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in mesh.triangles() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for (e, c) in counts {
            assert!(c == 1 || c == 2);
            if c == 2 {
                assert_eq!(edges[&e], 0, "edge {e:?} shared with equal orientation");
            } else {
                assert!(mesh.is_boundary(e.0) && mesh.is_boundary(e.1), "open edge {e:?} not on boundary");
            }
        }
    }

    #[test]
    fn unit_square_counts() {
        let m = unit_square_mesh(1).unwrap();
        assert_eq!((m.n_vertices(), m.n_triangles(), m.n_interior()), (4, 2, 0));

        let m = unit_square_mesh(2).unwrap();
        assert_eq!((m.n_vertices(), m.n_triangles(), m.n_interior()), (9, 8, 1));
        assert_eq!(m.vertices()[m.interior_vertices()[0]], [0.5, 0.5]);

        for n in [1, 3, 7, 16] {
            let m = unit_square_mesh(n).unwrap();
            assert_eq!(m.n_vertices(), (n + 1) * (n + 1));
            assert_eq!(m.n_triangles(), 2 * n * n);
            assert_eq!(m.n_interior(), (n - 1) * (n - 1));
            check_invariants(&m, 1.0);
            check_conforming(&m);
        }
    }

    #[test]
    fn l_shape_counts() {
        let m = l_shape_mesh(1).unwrap();
        assert_eq!((m.n_vertices(), m.n_triangles(), m.n_interior()), (8, 6, 0));
        for n in [1, 2, 5, 8] {
            let m = l_shape_mesh(n).unwrap();
            check_invariants(&m, 3.0);
            check_conforming(&m);
            assert_eq!(m.n_triangles(), 6 * n * n);
            // Interior DOFs: (2n-1)^2 on the full square minus the n^2 vertices
            // in the closed upper-right quadrant that are interior to the box.
            assert_eq!(m.n_interior(), (2 * n - 1) * (2 * n - 1) - n * n);
        }
    }

    #[test]
    fn l_shape_reentrant_corner_is_boundary() {
        let m = l_shape_mesh(4).unwrap();
        let corner = m.vertices().iter().position(|&p| p == [0.0, 0.0]).unwrap();
        assert!(m.is_boundary(corner));
        for (v, &[x, y]) in m.vertices().iter().enumerate() {
            let on_edge = x.abs() == 1.0 || y.abs() == 1.0 || (x == 0.0 && y >= 0.0) || (y == 0.0 && x >= 0.0);
            assert_eq!(m.is_boundary(v), on_edge, "vertex ({x}, {y})");
            assert!(!(x > 0.0 && y > 0.0));
        }
    }

    #[test]
    fn refinement_quadruples_triangles() {
        for n in [1, 2, 4] {
            assert_eq!(unit_square_mesh(2 * n).unwrap().n_triangles(), 4 * unit_square_mesh(n).unwrap().n_triangles());
            assert_eq!(l_shape_mesh(2 * n).unwrap().n_triangles(), 4 * l_shape_mesh(n).unwrap().n_triangles());
        }
    }

    #[test]
    fn zero_resolution_rejected() {
        assert_eq!(unit_square_mesh(0).unwrap_err(), MeshError::ZeroResolution);
        assert_eq!(l_shape_mesh(0).unwrap_err(), MeshError::ZeroResolution);
    }

    #[test]
    fn reference_triangle_geometry() {
        let g = triangle_geometry([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(g.area, 0.5);
        assert_eq!(g.grads, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);

        let h = 0.25;
        let s = triangle_geometry([[0.0, 0.0], [h, 0.0], [0.0, h]]).unwrap();
        assert_relative_eq!(s.area, 0.5 * h * h);
        for k in 0..3 {
            for d in 0..2 {
                assert_relative_eq!(s.grads[k][d], g.grads[k][d] / h);
            }
        }
        assert!(triangle_geometry([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_none());
    }

    #[test]
    fn element_geometry_errors() {
        let m = unit_square_mesh(1).unwrap();
        assert_eq!(m.element_geometry(2).unwrap_err(), MeshError::TriangleOutOfRange(2));
        let bad = Mesh::from_parts(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]], vec![true; 3]);
        assert_eq!(bad.element_geometry(0).unwrap_err(), MeshError::Degenerate(0));
    }

    #[test]
    fn text_dump() {
        let m = unit_square_mesh(1).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[..4].iter().all(|l| l.starts_with("vertex ")));
        assert_eq!(lines[4], "triangle 0 1 2");
        assert_eq!(lines[5], "triangle 0 2 3");
    }
}
