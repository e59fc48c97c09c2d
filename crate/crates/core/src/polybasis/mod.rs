//! Scaled monomial bases for `P_k` on cells and faces.
//!
//! A cell basis function is `((x - x_c)/s)^a ((y - y_c)/s)^b ((z - z_c)/s)^c`
//! with `a + b + c <= k`, centered at the cell centroid and scaled by half the
//! cell diameter. Multi-indices are ordered by total degree, then
//! lexicographically with higher powers of earlier coordinates first:
//!
//! ```text
//! 1, x, y, z, x^2, xy, xz, y^2, yz, z^2, x^3, ...
//! ```
//!
//! Face bases use the same construction in an orthonormal in-plane frame
//! anchored at the face centroid.

pub mod quadrature;

use faer::Mat;

pub use quadrature::{
    gauss_legendre, hex_corners, quad_rule_cell, quad_rule_face, quad_rule_tetrahedra, QuadRule,
};

use crate::error::{MwgError, Result};
use crate::geometry::Point3;
use crate::mesh::PolyMesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ambient {
    Cell,
    Face,
}

/// Dimension of `P_k` in three (cell) or two (face) variables.
pub fn space_dimension(k: usize, ambient: Ambient) -> usize {
    match ambient {
        Ambient::Cell => (k + 1) * (k + 2) * (k + 3) / 6,
        Ambient::Face => (k + 1) * (k + 2) / 2,
    }
}

/// Cell quadrature degree used throughout for a method of degree `k`.
pub fn default_cell_degree(k: usize) -> usize {
    2 * k + 5
}

/// Face quadrature degree used throughout for a method of degree `k`.
pub fn default_face_degree(k: usize) -> usize {
    2 * k + 4
}

fn exponents(k: usize, ambient: Ambient) -> Vec<[u32; 3]> {
    let mut out = Vec::with_capacity(space_dimension(k, ambient));
    for d in 0..=k as u32 {
        match ambient {
            Ambient::Cell => {
                for a in (0..=d).rev() {
                    for b in (0..=d - a).rev() {
                        out.push([a, b, d - a - b]);
                    }
                }
            }
            Ambient::Face => {
                for a in (0..=d).rev() {
                    out.push([a, d - a, 0]);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct PolySpace {
    degree: usize,
    ambient: Ambient,
    center: Point3,
    scale: f64,
    /// In-plane axes for face spaces; coordinate axes for cell spaces.
    frame: [Point3; 3],
    exponents: Vec<[u32; 3]>,
}

impl PolySpace {
    /// `P_k` on a cell centered at `center` with the given diameter.
    pub fn cell(center: Point3, diameter: f64, degree: usize) -> Self {
        Self {
            degree,
            ambient: Ambient::Cell,
            center,
            scale: 0.5 * diameter,
            frame: [Point3::axis(0), Point3::axis(1), Point3::axis(2)],
            exponents: exponents(degree, Ambient::Cell),
        }
    }

    pub fn on_cell(mesh: &PolyMesh, cell: usize, degree: usize) -> Self {
        let c = &mesh.cells[cell];
        Self::cell(c.centroid, c.diameter, degree)
    }

    /// `P_k` on a face, in a frame whose first axis follows the first edge.
    pub fn on_face(mesh: &PolyMesh, face: usize, degree: usize) -> Self {
        let f = &mesh.faces[face];
        let p0 = mesh.vertices[f.vertices[0]];
        let p1 = mesh.vertices[f.vertices[1]];
        let mut e1 = p1 - p0;
        e1 = e1 - f.normal * e1.dot(f.normal);
        e1 = e1 * (1.0 / e1.norm());
        let e2 = f.normal.cross(e1);
        Self {
            degree,
            ambient: Ambient::Face,
            center: f.centroid,
            scale: 0.5 * f.diameter,
            frame: [e1, e2, f.normal],
            exponents: exponents(degree, Ambient::Face),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn center(&self) -> Point3 {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn exponents(&self) -> &[[u32; 3]] {
        &self.exponents
    }

    fn local(&self, p: Point3) -> [f64; 3] {
        let d = p - self.center;
        let s = 1.0 / self.scale;
        [
            d.dot(self.frame[0]) * s,
            d.dot(self.frame[1]) * s,
            if self.ambient == Ambient::Cell {
                d.dot(self.frame[2]) * s
            } else {
                0.0
            },
        ]
    }

    fn powers(&self, t: [f64; 3]) -> [[f64; 8]; 3] {
        debug_assert!(self.degree < 8);
        let mut pw = [[1.0; 8]; 3];
        for (axis, row) in pw.iter_mut().enumerate() {
            for e in 1..=self.degree {
                row[e] = row[e - 1] * t[axis];
            }
        }
        pw
    }

    /// Basis values at `p`; `out.len()` must equal `dim()`.
    pub fn eval(&self, p: Point3, out: &mut [f64]) {
        let pw = self.powers(self.local(p));
        for (o, e) in out.iter_mut().zip(&self.exponents) {
            *o = pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize];
        }
    }

    pub fn values(&self, p: Point3) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        self.eval(p, &mut v);
        v
    }

    /// Basis values and gradients (in global coordinates) at `p`. Only
    /// meaningful for cell spaces.
    pub fn eval_with_grad(&self, p: Point3, vals: &mut [f64], grads: &mut [Point3]) {
        debug_assert_eq!(self.ambient, Ambient::Cell);
        let pw = self.powers(self.local(p));
        let inv = 1.0 / self.scale;
        let d = |axis: usize, e: u32| -> f64 {
            if e == 0 {
                0.0
            } else {
                e as f64 * pw[axis][e as usize - 1] * inv
            }
        };
        for ((v, g), e) in vals.iter_mut().zip(grads.iter_mut()).zip(&self.exponents) {
            let (a, b, c) = (e[0] as usize, e[1] as usize, e[2] as usize);
            *v = pw[0][a] * pw[1][b] * pw[2][c];
            *g = Point3::new(
                d(0, e[0]) * pw[1][b] * pw[2][c],
                pw[0][a] * d(1, e[1]) * pw[2][c],
                pw[0][a] * pw[1][b] * d(2, e[2]),
            );
        }
    }

    /// Evaluates the polynomial with the given coefficients at `p`.
    pub fn combine(&self, coeffs: &[f64], p: Point3) -> f64 {
        let pw = self.powers(self.local(p));
        coeffs
            .iter()
            .zip(&self.exponents)
            .map(|(c, e)| c * pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize])
            .sum()
    }
}

/// Identifies the space spanned by the rows or columns of a local matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisLabel {
    pub degree: usize,
    pub ambient: Ambient,
    /// Number of vector components (1 for scalar spaces).
    pub components: usize,
}

impl BasisLabel {
    pub fn of(space: &PolySpace) -> Self {
        Self {
            degree: space.degree,
            ambient: space.ambient,
            components: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.components * space_dimension(self.degree, self.ambient)
    }
}

#[derive(Clone, Debug)]
pub struct LocalMatrix {
    pub rows: BasisLabel,
    pub cols: BasisLabel,
    pub values: Mat<f64>,
}

impl LocalMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }
}

/// Gram matrix of the basis of `space` under `rule`.
pub fn mass_matrix(space: &PolySpace, rule: &QuadRule) -> Result<LocalMatrix> {
    let need = 2 * space.degree;
    if rule.degree < need {
        return Err(MwgError::InsufficientQuadrature {
            have: rule.degree,
            need,
        });
    }
    let n = space.dim();
    let mut m = Mat::<f64>::zeros(n, n);
    let mut phi = vec![0.0; n];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        space.eval(*p, &mut phi);
        for i in 0..n {
            let wi = w * phi[i];
            for j in i..n {
                m[(i, j)] += wi * phi[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    let label = BasisLabel::of(space);
    Ok(LocalMatrix {
        rows: label,
        cols: label,
        values: m,
    })
}
