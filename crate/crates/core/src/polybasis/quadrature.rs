//! Quadrature on hexahedra (tensor Gauss through the trilinear map), on
//! caller-supplied tetrahedral subdivisions and on planar polygonal faces
//! (collapsed Gauss on a fan of triangles around the face centroid).

use crate::error::{MwgError, Result};
use crate::geometry::Point3;
use crate::mesh::PolyMesh;

#[derive(Clone, Debug)]
pub struct QuadRule {
    pub points: Vec<Point3>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly (on affine images of the
    /// reference element).
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(Point3) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(*p))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn points_for_degree(degree: usize) -> usize {
    degree / 2 + 1
}

/// Corner coordinates of a hexahedral cell ordered as a bottom loop followed
/// by the matching top loop, or `None` if the cell is not a hexahedron.
pub fn hex_corners(mesh: &PolyMesh, cell: usize) -> Option<[Point3; 8]> {
    let c = &mesh.cells[cell];
    if c.faces.len() != 6 || c.faces.iter().any(|r| mesh.faces[r.face].vertices.len() != 4) {
        return None;
    }
    if mesh.cell_vertices(cell).len() != 8 {
        return None;
    }
    let mut edges = Vec::with_capacity(24);
    for r in &c.faces {
        let v = &mesh.faces[r.face].vertices;
        for i in 0..4 {
            let (a, b) = (v[i], v[(i + 1) % 4]);
            edges.push((a.min(b), a.max(b)));
        }
    }
    let bottom = &mesh.faces[c.faces[0].face].vertices;
    let mut ids = [0usize; 8];
    for i in 0..4 {
        ids[i] = bottom[i];
        let up = edges.iter().find_map(|&(a, b)| {
            let other = if a == bottom[i] {
                b
            } else if b == bottom[i] {
                a
            } else {
                return None;
            };
            (!bottom.contains(&other)).then_some(other)
        })?;
        ids[4 + i] = up;
    }
    let mut check = ids.to_vec();
    check.sort_unstable();
    check.dedup();
    if check.len() != 8 {
        return None;
    }
    Some(ids.map(|v| mesh.vertices[v]))
}

fn trilinear(corners: &[Point3; 8], xi: f64, eta: f64, zeta: f64) -> (Point3, f64) {
    let shape = [
        (1.0 - xi) * (1.0 - eta),
        xi * (1.0 - eta),
        xi * eta,
        (1.0 - xi) * eta,
    ];
    let d_xi = [-(1.0 - eta), 1.0 - eta, eta, -eta];
    let d_eta = [-(1.0 - xi), -xi, xi, 1.0 - xi];
    let mut x = Point3::ZERO;
    let mut j0 = Point3::ZERO;
    let mut j1 = Point3::ZERO;
    let mut j2 = Point3::ZERO;
    for a in 0..4 {
        let (b, t) = (corners[a], corners[a + 4]);
        x += b * (shape[a] * (1.0 - zeta)) + t * (shape[a] * zeta);
        j0 += b * (d_xi[a] * (1.0 - zeta)) + t * (d_xi[a] * zeta);
        j1 += b * (d_eta[a] * (1.0 - zeta)) + t * (d_eta[a] * zeta);
        j2 += (t - b) * shape[a];
    }
    (x, j0.dot(j1.cross(j2)).abs())
}

/// Tensor Gauss rule on a hexahedral cell.
pub fn quad_rule_cell(mesh: &PolyMesh, cell: usize, degree: usize) -> Result<QuadRule> {
    let corners = hex_corners(mesh, cell).ok_or(MwgError::UnsupportedCell(cell))?;
    let (x, w) = gauss_legendre(points_for_degree(degree));
    let n = x.len();
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let (p, jac) = trilinear(&corners, x[i], x[j], x[k]);
                points.push(p);
                weights.push(w[i] * w[j] * w[k] * jac);
            }
        }
    }
    Ok(QuadRule {
        points,
        weights,
        degree,
    })
}

/// Cell rule from a caller-provided tetrahedral subdivision, for cells that
/// are not hexahedra.
pub fn quad_rule_tetrahedra(tets: &[[Point3; 4]], degree: usize) -> QuadRule {
    let (xa, wa) = gauss_legendre(points_for_degree(degree + 2));
    let (xb, wb) = gauss_legendre(points_for_degree(degree + 1));
    let (xc, wc) = gauss_legendre(points_for_degree(degree));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for t in tets {
        let (e1, e2, e3) = (t[1] - t[0], t[2] - t[0], t[3] - t[0]);
        let det = e1.dot(e2.cross(e3)).abs();
        for (a, wa) in xa.iter().zip(&wa) {
            for (b, wb) in xb.iter().zip(&wb) {
                for (c, wc) in xc.iter().zip(&wc) {
                    let r = *a;
                    let s = (1.0 - a) * b;
                    let u = (1.0 - a) * (1.0 - b) * c;
                    points.push(t[0] + e1 * r + e2 * s + e3 * u);
                    weights.push(wa * wb * wc * (1.0 - a) * (1.0 - a) * (1.0 - b) * det);
                }
            }
        }
    }
    QuadRule {
        points,
        weights,
        degree,
    }
}

/// Composite rule on a planar polygonal face, one collapsed Gauss rule per
/// triangle of the centroid fan.
pub fn quad_rule_face(mesh: &PolyMesh, face: usize, degree: usize) -> QuadRule {
    let f = &mesh.faces[face];
    let (xa, wa) = gauss_legendre(points_for_degree(degree + 1));
    let (xb, wb) = gauss_legendre(points_for_degree(degree));
    let nv = f.vertices.len();
    let mut points = Vec::with_capacity(nv * xa.len() * xb.len());
    let mut weights = Vec::with_capacity(nv * xa.len() * xb.len());
    let c = f.centroid;
    for i in 0..nv {
        let p1 = mesh.vertices[f.vertices[i]];
        let p2 = mesh.vertices[f.vertices[(i + 1) % nv]];
        let (e1, e2) = (p1 - c, p2 - c);
        let jac = e1.cross(e2).norm();
        for (a, wa) in xa.iter().zip(&wa) {
            for (b, wb) in xb.iter().zip(&wb) {
                points.push(c + e1 * *a + e2 * ((1.0 - a) * b));
                weights.push(wa * wb * (1.0 - a) * jac);
            }
        }
    }
    QuadRule {
        points,
        weights,
        degree,
    }
}
