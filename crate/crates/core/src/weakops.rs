//! Element-wise L2 projections and the discrete weak curl and weak gradient.
//!
//! On each cell `T` the weak curl of a piecewise polynomial `v` is the
//! element of `[P_{k-1}(T)]^3` satisfying
//!
//! ```text
//! (curl_w v, phi)_T = (v, curl phi)_T - <{v} x n, phi>_{dT}
//! ```
//!
//! and the weak gradient of `q` is the element of `[P_k(T)]^3` with
//!
//! ```text
//! (grad_w q, phi)_T = -(q, div phi)_T + <{q}, phi . n>_{dT}
//! ```
//!
//! where `{.}` is the two-sided average on interior faces and zero on the
//! domain boundary. Both are materialized per cell as dense blocks over the
//! stencil made of the cell and its face neighbors.
//!
//! Vector coefficients are stored component-major: component `c`, basis
//! function `i` sits at index `c * dim + i`.

use std::ops::{Add, Mul, Sub};

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, Side};

use crate::error::{MwgError, Result};
use crate::geometry::Point3;
use crate::mesh::PolyMesh;
use crate::polybasis::{
    default_cell_degree, default_face_degree, mass_matrix, quad_rule_cell, quad_rule_face,
    space_dimension, Ambient, PolySpace, QuadRule,
};

/// `e_axis x n`.
pub(crate) fn axis_cross(axis: usize, n: Point3) -> Point3 {
    Point3::axis(axis).cross(n)
}

/// `g x e_axis`, the curl of `psi e_axis` when `g = grad psi`.
pub(crate) fn grad_cross_axis(g: Point3, axis: usize) -> Point3 {
    g.cross(Point3::axis(axis))
}

pub(crate) fn inverse_spd(m: &Mat<f64>, what: impl FnOnce() -> String) -> Result<Mat<f64>> {
    let llt = m
        .llt(Side::Lower)
        .map_err(|_| MwgError::SingularMass(what()))?;
    let inv = llt.inverse();
    if inv.norm_max().is_finite() {
        Ok(inv)
    } else {
        Err(MwgError::SingularMass("non-finite inverse".into()))
    }
}

/// Per-cell quadrature rules shared by the operator builders and assembly.
#[derive(Clone, Debug)]
pub struct Rules {
    pub cell: Vec<QuadRule>,
    pub face: Vec<QuadRule>,
}

impl Rules {
    pub fn new(mesh: &PolyMesh, k: usize) -> Result<Self> {
        let cell = (0..mesh.num_cells())
            .map(|c| quad_rule_cell(mesh, c, default_cell_degree(k)))
            .collect::<Result<Vec<_>>>()?;
        let face = (0..mesh.num_faces())
            .map(|f| quad_rule_face(mesh, f, default_face_degree(k)))
            .collect();
        Ok(Self { cell, face })
    }
}

/// L2 projection of a scalar field onto `P_degree(cell)`.
pub fn project_l2(
    mesh: &PolyMesh,
    cell: usize,
    degree: usize,
    field: impl Fn(Point3) -> f64,
) -> Result<Vec<f64>> {
    let rule = quad_rule_cell(mesh, cell, default_cell_degree(degree))?;
    project_l2_with(mesh, cell, degree, &rule, field)
}

pub fn project_l2_with(
    mesh: &PolyMesh,
    cell: usize,
    degree: usize,
    rule: &QuadRule,
    field: impl Fn(Point3) -> f64,
) -> Result<Vec<f64>> {
    let space = PolySpace::on_cell(mesh, cell, degree);
    let mass = mass_matrix(&space, rule)?;
    let n = space.dim();
    let mut rhs = Mat::<f64>::zeros(n, 1);
    let mut phi = vec![0.0; n];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        space.eval(*p, &mut phi);
        let fw = w * field(*p);
        for i in 0..n {
            rhs[(i, 0)] += fw * phi[i];
        }
    }
    let llt = mass
        .values
        .llt(Side::Lower)
        .map_err(|_| MwgError::SingularMass(format!("cell {cell}")))?;
    let c = llt.solve(&rhs);
    Ok((0..n).map(|i| c[(i, 0)]).collect())
}

/// Component-major L2 projection of a vector field onto `[P_degree(cell)]^3`.
pub fn project_l2_vector(
    mesh: &PolyMesh,
    cell: usize,
    degree: usize,
    rule: &QuadRule,
    field: impl Fn(Point3) -> Point3,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(3 * space_dimension(degree, Ambient::Cell));
    for axis in 0..3 {
        out.extend(project_l2_with(mesh, cell, degree, rule, |p| field(p)[axis])?);
    }
    Ok(out)
}

/// Dense blocks of a weak operator on one cell.
#[derive(Clone, Debug)]
pub struct CellOperator {
    /// Cells whose coefficients feed this cell; `stencil[0]` is the cell itself.
    pub stencil: Vec<usize>,
    /// `blocks[s]` maps the coefficients of `stencil[s]` to the output.
    pub blocks: Vec<Mat<f64>>,
    /// Scalar mass matrix of the output space on this cell.
    pub mass: Mat<f64>,
    pub inv_mass: Mat<f64>,
}

impl CellOperator {
    fn apply(&self, field: &[f64], in_dim: usize) -> Vec<f64> {
        let out_dim = self.blocks[0].nrows();
        let mut out = vec![0.0; out_dim];
        for (cell, block) in self.stencil.iter().zip(&self.blocks) {
            let x = &field[cell * in_dim..(cell + 1) * in_dim];
            for (r, o) in out.iter_mut().enumerate() {
                *o += (0..in_dim).map(|c| block[(r, c)] * x[c]).sum::<f64>();
            }
        }
        out
    }

    /// Solves the vector mass system for a component-major right-hand side.
    fn solve_vector_mass(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.inv_mass.nrows();
        let mut out = vec![0.0; rhs.len()];
        for comp in 0..rhs.len() / m {
            for i in 0..m {
                out[comp * m + i] = (0..m)
                    .map(|j| self.inv_mass[(i, j)] * rhs[comp * m + j])
                    .sum();
            }
        }
        out
    }
}

fn scale_rows_by_inverse_mass(inv_mass: &Mat<f64>, rhs: &Mat<f64>) -> Mat<f64> {
    let m = inv_mass.nrows();
    let mut out = Mat::<f64>::zeros(rhs.nrows(), rhs.ncols());
    for comp in 0..rhs.nrows() / m {
        let block = rhs.subrows(comp * m, m);
        let prod = inv_mass * block;
        out.subrows_mut(comp * m, m).copy_from(&prod);
    }
    out
}

fn stencil_of(mesh: &PolyMesh, cell: usize) -> Vec<usize> {
    let mut s = vec![cell];
    for nb in mesh.face_neighbors(cell) {
        if !s.contains(&nb) {
            s.push(nb);
        }
    }
    s
}

/// Weak curl `V_h -> [P_{k-1}]^3` on every cell.
#[derive(Clone, Debug)]
pub struct WeakCurlOperator {
    pub degree: usize,
    pub num_cells: usize,
    pub cells: Vec<CellOperator>,
}

impl WeakCurlOperator {
    /// Length of one cell's input block, `3 dim P_k`.
    pub fn in_dim(&self) -> usize {
        3 * space_dimension(self.degree, Ambient::Cell)
    }

    /// Length of one cell's output block, `3 dim P_{k-1}`.
    pub fn out_dim(&self) -> usize {
        3 * space_dimension(self.degree - 1, Ambient::Cell)
    }

    /// Weak curl on `cell` of the cell-major field `v`.
    pub fn apply(&self, cell: usize, v: &[f64]) -> Vec<f64> {
        self.cells[cell].apply(v, self.in_dim())
    }

    /// Affine offset produced by replacing the zero boundary average with the
    /// tangential data `u_d x n`: coefficients of `c` in `[P_{k-1}(T)]^3`
    /// with `(c, phi)_T = -<u_d x n, phi>_{dT cap dOmega}`.
    pub fn boundary_offset(
        &self,
        mesh: &PolyMesh,
        rules: &Rules,
        cell: usize,
        data: &dyn Fn(Point3) -> Point3,
    ) -> Vec<f64> {
        let space = PolySpace::on_cell(mesh, cell, self.degree - 1);
        let m = space.dim();
        let mut rhs = vec![0.0; 3 * m];
        let mut psi = vec![0.0; m];
        let mut any = false;
        for r in &mesh.cells[cell].faces {
            let f = &mesh.faces[r.face];
            if !f.is_boundary() {
                continue;
            }
            any = true;
            let n = mesh.outward_normal(r);
            let rule = &rules.face[r.face];
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                space.eval(*p, &mut psi);
                let t = data(*p).cross(n);
                for c in 0..3 {
                    for j in 0..m {
                        rhs[c * m + j] -= w * t[c] * psi[j];
                    }
                }
            }
        }
        if !any {
            return rhs;
        }
        self.cells[cell].solve_vector_mass(&rhs)
    }
}

/// Builds the weak curl for polynomial degree `k >= 1`.
pub fn build_weak_curl(mesh: &PolyMesh, k: usize) -> Result<WeakCurlOperator> {
    let rules = Rules::new(mesh, k)?;
    build_weak_curl_with(mesh, k, &rules)
}

pub fn build_weak_curl_with(mesh: &PolyMesh, k: usize, rules: &Rules) -> Result<WeakCurlOperator> {
    if k == 0 {
        return Err(MwgError::InvalidArgument(
            "weak curl needs degree k >= 1".into(),
        ));
    }
    let d = space_dimension(k, Ambient::Cell);
    let m = space_dimension(k - 1, Ambient::Cell);
    let mut cells = Vec::with_capacity(mesh.num_cells());
    let mut chi = vec![0.0; d];
    let mut chi_nb = vec![0.0; d];
    let mut psi = vec![0.0; m];
    let mut grad = vec![Point3::ZERO; m];
    for t in 0..mesh.num_cells() {
        let trial = PolySpace::on_cell(mesh, t, k);
        let test = PolySpace::on_cell(mesh, t, k - 1);
        let mass = mass_matrix(&test, &rules.cell[t])?.values;
        let inv_mass = inverse_spd(&mass, || format!("cell {t}"))?;
        let stencil = stencil_of(mesh, t);
        let mut rhs: Vec<Mat<f64>> = stencil.iter().map(|_| Mat::zeros(3 * m, 3 * d)).collect();

        // (v, curl phi)_T
        let rule = &rules.cell[t];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            trial.eval(*p, &mut chi);
            test.eval_with_grad(*p, &mut psi, &mut grad);
            for c in 0..3 {
                for j in 0..m {
                    let curl = grad_cross_axis(grad[j], c);
                    for a in 0..3 {
                        if curl[a] == 0.0 {
                            continue;
                        }
                        let wc = w * curl[a];
                        for i in 0..d {
                            rhs[0][(c * m + j, a * d + i)] += wc * chi[i];
                        }
                    }
                }
            }
        }

        // -<{v} x n, phi>_{dT}, interior faces only
        for r in &mesh.cells[t].faces {
            let Some(nb) = mesh.across(r) else { continue };
            let s = stencil.iter().position(|&c| c == nb).expect("neighbor in stencil");
            let nb_space = PolySpace::on_cell(mesh, nb, k);
            let n = mesh.outward_normal(r);
            let rule = &rules.face[r.face];
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                trial.eval(*p, &mut chi);
                nb_space.eval(*p, &mut chi_nb);
                test.eval(*p, &mut psi);
                for a in 0..3 {
                    let en = axis_cross(a, n);
                    for c in 0..3 {
                        if en[c] == 0.0 {
                            continue;
                        }
                        let wc = 0.5 * w * en[c];
                        for j in 0..m {
                            let f = wc * psi[j];
                            for i in 0..d {
                                rhs[0][(c * m + j, a * d + i)] -= f * chi[i];
                                rhs[s][(c * m + j, a * d + i)] -= f * chi_nb[i];
                            }
                        }
                    }
                }
            }
        }

        let blocks = rhs
            .iter()
            .map(|r| scale_rows_by_inverse_mass(&inv_mass, r))
            .collect();
        cells.push(CellOperator {
            stencil,
            blocks,
            mass,
            inv_mass,
        });
    }
    Ok(WeakCurlOperator {
        degree: k,
        num_cells: mesh.num_cells(),
        cells,
    })
}

/// Weak gradient `W_h -> [P_k]^3` on every cell.
#[derive(Clone, Debug)]
pub struct WeakGradOperator {
    pub degree: usize,
    pub num_cells: usize,
    pub cells: Vec<CellOperator>,
}

impl WeakGradOperator {
    /// Length of one cell's input block, `dim P_{k-1}`.
    pub fn in_dim(&self) -> usize {
        space_dimension(self.degree - 1, Ambient::Cell)
    }

    /// Length of one cell's output block, `3 dim P_k`.
    pub fn out_dim(&self) -> usize {
        3 * space_dimension(self.degree, Ambient::Cell)
    }

    pub fn apply(&self, cell: usize, q: &[f64]) -> Vec<f64> {
        self.cells[cell].apply(q, self.in_dim())
    }

    /// Affine offset produced by replacing the zero boundary average with the
    /// data `p_d`: `(d, phi)_T = <p_d, phi . n>_{dT cap dOmega}`.
    pub fn boundary_offset(
        &self,
        mesh: &PolyMesh,
        rules: &Rules,
        cell: usize,
        data: &dyn Fn(Point3) -> f64,
    ) -> Vec<f64> {
        let space = PolySpace::on_cell(mesh, cell, self.degree);
        let d = space.dim();
        let mut rhs = vec![0.0; 3 * d];
        let mut psi = vec![0.0; d];
        let mut any = false;
        for r in &mesh.cells[cell].faces {
            if !mesh.faces[r.face].is_boundary() {
                continue;
            }
            any = true;
            let n = mesh.outward_normal(r);
            let rule = &rules.face[r.face];
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                space.eval(*p, &mut psi);
                let g = w * data(*p);
                for c in 0..3 {
                    for j in 0..d {
                        rhs[c * d + j] += g * n[c] * psi[j];
                    }
                }
            }
        }
        if !any {
            return rhs;
        }
        self.cells[cell].solve_vector_mass(&rhs)
    }
}

pub fn build_weak_grad(mesh: &PolyMesh, k: usize) -> Result<WeakGradOperator> {
    let rules = Rules::new(mesh, k)?;
    build_weak_grad_with(mesh, k, &rules)
}

pub fn build_weak_grad_with(mesh: &PolyMesh, k: usize, rules: &Rules) -> Result<WeakGradOperator> {
    if k == 0 {
        return Err(MwgError::InvalidArgument(
            "weak gradient needs degree k >= 1".into(),
        ));
    }
    let d = space_dimension(k, Ambient::Cell);
    let m = space_dimension(k - 1, Ambient::Cell);
    let mut cells = Vec::with_capacity(mesh.num_cells());
    let mut q = vec![0.0; m];
    let mut q_nb = vec![0.0; m];
    let mut psi = vec![0.0; d];
    let mut grad = vec![Point3::ZERO; d];
    for t in 0..mesh.num_cells() {
        let trial = PolySpace::on_cell(mesh, t, k - 1);
        let test = PolySpace::on_cell(mesh, t, k);
        let mass = mass_matrix(&test, &rules.cell[t])?.values;
        let inv_mass = inverse_spd(&mass, || format!("cell {t}"))?;
        let stencil = stencil_of(mesh, t);
        let mut rhs: Vec<Mat<f64>> = stencil.iter().map(|_| Mat::zeros(3 * d, m)).collect();

        // -(q, div phi)_T
        let rule = &rules.cell[t];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            trial.eval(*p, &mut q);
            test.eval_with_grad(*p, &mut psi, &mut grad);
            for c in 0..3 {
                for j in 0..d {
                    let g = w * grad[j][c];
                    if g == 0.0 {
                        continue;
                    }
                    for i in 0..m {
                        rhs[0][(c * d + j, i)] -= g * q[i];
                    }
                }
            }
        }

        // <{q}, phi . n>_{dT}, interior faces only
        for r in &mesh.cells[t].faces {
            let Some(nb) = mesh.across(r) else { continue };
            let s = stencil.iter().position(|&c| c == nb).expect("neighbor in stencil");
            let nb_space = PolySpace::on_cell(mesh, nb, k - 1);
            let n = mesh.outward_normal(r);
            let rule = &rules.face[r.face];
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                trial.eval(*p, &mut q);
                nb_space.eval(*p, &mut q_nb);
                test.eval(*p, &mut psi);
                for c in 0..3 {
                    if n[c] == 0.0 {
                        continue;
                    }
                    let wc = 0.5 * w * n[c];
                    for j in 0..d {
                        let f = wc * psi[j];
                        for i in 0..m {
                            rhs[0][(c * d + j, i)] += f * q[i];
                            rhs[s][(c * d + j, i)] += f * q_nb[i];
                        }
                    }
                }
            }
        }

        let blocks = rhs
            .iter()
            .map(|r| scale_rows_by_inverse_mass(&inv_mass, r))
            .collect();
        cells.push(CellOperator {
            stencil,
            blocks,
            mass,
            inv_mass,
        });
    }
    Ok(WeakGradOperator {
        degree: k,
        num_cells: mesh.num_cells(),
        cells,
    })
}

/// Jump `[tau]` and average `{tau}` of a trace seen from cell `side` of
/// `face`. On boundary faces the jump is the trace and the average is zero.
pub fn jump_average_eval<T>(
    mesh: &PolyMesh,
    face: usize,
    side: usize,
    own: T,
    other: Option<T>,
) -> Result<(T, T)>
where
    T: Copy + Default + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let f = &mesh.faces[face];
    if side != f.owner && f.neighbor != Some(side) {
        return Err(MwgError::InvalidArgument(format!(
            "cell {side} is not adjacent to face {face}"
        )));
    }
    if f.is_boundary() {
        return Ok((own, T::default()));
    }
    let other = other.ok_or(MwgError::MissingTrace(face))?;
    Ok(((own - other) * 0.5, (own + other) * 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform_hex_mesh;

    fn interior_cell(mesh: &PolyMesh) -> usize {
        (0..mesh.num_cells())
            .find(|&c| mesh.cells[c].faces.iter().all(|r| !mesh.faces[r.face].is_boundary()))
            .expect("mesh has an interior cell")
    }

    /// Cell-major coefficients of the projection of a vector field.
    fn project_field(
        mesh: &PolyMesh,
        k: usize,
        rules: &Rules,
        f: impl Fn(Point3) -> Point3 + Copy,
    ) -> Vec<f64> {
        (0..mesh.num_cells())
            .flat_map(|c| project_l2_vector(mesh, c, k, &rules.cell[c], f).unwrap())
            .collect()
    }

    fn project_scalar(
        mesh: &PolyMesh,
        k: usize,
        rules: &Rules,
        f: impl Fn(Point3) -> f64 + Copy,
    ) -> Vec<f64> {
        (0..mesh.num_cells())
            .flat_map(|c| project_l2_with(mesh, c, k, &rules.cell[c], f).unwrap())
            .collect()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn projection_of_constants_and_means() {
        let m = build_uniform_hex_mesh(1).unwrap();
        for k in 0..4 {
            let c = project_l2(&m, 0, k, |_| 3.5).unwrap();
            assert!((c[0] - 3.5).abs() < 1e-12);
            assert!(c[1..].iter().all(|x| x.abs() < 1e-11));
        }
        let c = project_l2(&m, 0, 0, |p| p.x).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projection_of_x_squared_onto_p1() {
        // best linear fit of x^2 on (0,1)^3 is x - 1/6
        let m = build_uniform_hex_mesh(1).unwrap();
        let c = project_l2(&m, 0, 1, |p| p.x * p.x).unwrap();
        let s = PolySpace::on_cell(&m, 0, 1);
        for p in [
            Point3::new(0.1, 0.7, 0.3),
            Point3::new(0.9, 0.2, 0.5),
            Point3::new(0.5, 0.5, 0.5),
        ] {
            assert!((s.combine(&c, p) - (p.x - 1.0 / 6.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn weak_curl_of_constant_on_single_cell_vanishes() {
        let m = build_uniform_hex_mesh(1).unwrap();
        let op = build_weak_curl(&m, 1).unwrap();
        let rules = Rules::new(&m, 1).unwrap();
        let v = project_field(&m, 1, &rules, |_| Point3::new(1.0, 0.0, 0.0));
        assert_close(&op.apply(0, &v), &[0.0; 3], 1e-14);
    }

    #[test]
    fn weak_curl_of_zero_is_zero() {
        let m = build_uniform_hex_mesh(2).unwrap();
        let op = build_weak_curl(&m, 2).unwrap();
        let v = vec![0.0; op.in_dim() * m.num_cells()];
        for c in 0..m.num_cells() {
            assert!(op.apply(c, &v).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn weak_curl_reproduces_curl_on_interior_cell() {
        let m = build_uniform_hex_mesh(3).unwrap();
        let t = interior_cell(&m);
        for k in [1, 2] {
            let rules = Rules::new(&m, k).unwrap();
            let op = build_weak_curl_with(&m, k, &rules).unwrap();
            let v = project_field(&m, k, &rules, |p| Point3::new(p.z, p.x, p.y));
            let got = op.apply(t, &v);
            let want =
                project_l2_vector(&m, t, k - 1, &rules.cell[t], |_| Point3::new(1.0, 1.0, 1.0))
                    .unwrap();
            assert_close(&got, &want, 1e-12);
        }
    }

    #[test]
    fn weak_curl_reproduces_quadratic_curl() {
        let m = build_uniform_hex_mesh(3).unwrap();
        let t = interior_cell(&m);
        let k = 2;
        let rules = Rules::new(&m, k).unwrap();
        let op = build_weak_curl_with(&m, k, &rules).unwrap();
        let v = project_field(&m, k, &rules, |p| Point3::new(p.y * p.z, p.x * p.x, p.y * p.y));
        // curl = (2y, y, 2x - z)
        let want = project_l2_vector(&m, t, 1, &rules.cell[t], |p| {
            Point3::new(2.0 * p.y, p.y, 2.0 * p.x - p.z)
        })
        .unwrap();
        assert_close(&op.apply(t, &v), &want, 1e-12);
    }

    #[test]
    fn weak_grad_reproduces_gradient_on_interior_cell() {
        let m = build_uniform_hex_mesh(3).unwrap();
        let t = interior_cell(&m);
        // constants
        let rules = Rules::new(&m, 1).unwrap();
        let op = build_weak_grad_with(&m, 1, &rules).unwrap();
        let q = project_scalar(&m, 0, &rules, |_| 2.5);
        assert_close(&op.apply(t, &q), &vec![0.0; op.out_dim()], 1e-12);
        // q = x needs k = 2
        let rules = Rules::new(&m, 2).unwrap();
        let op = build_weak_grad_with(&m, 2, &rules).unwrap();
        let q = project_scalar(&m, 1, &rules, |p| p.x);
        let want =
            project_l2_vector(&m, t, 2, &rules.cell[t], |_| Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert_close(&op.apply(t, &q), &want, 1e-12);
    }

    #[test]
    fn weak_grad_of_one_on_single_cell() {
        // brute-force the 12 x 12 moment system: the answer is -12 (x - 1/2, y - 1/2, z - 1/2)
        let m = build_uniform_hex_mesh(1).unwrap();
        let op = build_weak_grad(&m, 1).unwrap();
        let g = op.apply(0, &[1.0]);
        let s = PolySpace::on_cell(&m, 0, 1);
        for p in [Point3::new(0.2, 0.6, 0.9), Point3::new(0.75, 0.1, 0.4)] {
            for c in 0..3 {
                let got = s.combine(&g[4 * c..4 * c + 4], p);
                assert!((got + 12.0 * (p[c] - 0.5)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_offsets_vanish_for_zero_data() {
        let m = build_uniform_hex_mesh(2).unwrap();
        let rules = Rules::new(&m, 1).unwrap();
        let curl = build_weak_curl_with(&m, 1, &rules).unwrap();
        let grad = build_weak_grad_with(&m, 1, &rules).unwrap();
        for c in 0..m.num_cells() {
            assert!(curl
                .boundary_offset(&m, &rules, c, &|_| Point3::ZERO)
                .iter()
                .all(|&x| x == 0.0));
            assert!(grad
                .boundary_offset(&m, &rules, c, &|_| 0.0)
                .iter()
                .all(|&x| x == 0.0));
        }
    }

    #[test]
    fn offsets_restore_reproduction_on_boundary_cells() {
        // with the exact boundary trace as the average, every cell reproduces the curl
        let m = build_uniform_hex_mesh(2).unwrap();
        let k = 1;
        let rules = Rules::new(&m, k).unwrap();
        let op = build_weak_curl_with(&m, k, &rules).unwrap();
        let u = |p: Point3| Point3::new(p.z, p.x, p.y);
        let v = project_field(&m, k, &rules, u);
        for t in 0..m.num_cells() {
            let mut got = op.apply(t, &v);
            for (g, o) in got.iter_mut().zip(op.boundary_offset(&m, &rules, t, &u)) {
                *g += o;
            }
            assert_close(&got, &[1.0, 1.0, 1.0], 1e-12);
        }
    }

    #[test]
    fn jump_average_definitions() {
        let m = build_uniform_hex_mesh(2).unwrap();
        let f = m.faces.iter().find(|f| !f.is_boundary()).unwrap();
        let (j, a) = jump_average_eval(&m, f.id, f.owner, 2.0, Some(4.0)).unwrap();
        assert_eq!((j, a), (-1.0, 3.0));
        let (j, a) = jump_average_eval(&m, f.id, f.owner, 7.0, Some(7.0)).unwrap();
        assert_eq!((j, a), (0.0, 7.0));
        assert!(matches!(
            jump_average_eval(&m, f.id, f.owner, 1.0, None),
            Err(MwgError::MissingTrace(_))
        ));
        let b = m.boundary_faces[0];
        let owner = m.faces[b].owner;
        let (j, a) = jump_average_eval(&m, b, owner, 5.0, None).unwrap();
        assert_eq!((j, a), (5.0, 0.0));
    }
}
