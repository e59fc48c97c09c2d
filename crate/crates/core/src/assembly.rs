//! Global saddle-point system
//!
//! ```text
//! [ A  -B^T ] [u]   [F]
//! [ B   S2  ] [p] = [G]
//! ```
//!
//! with `A` the stabilized weak-curl form `a(u, v)`, `B[q, v] = (v, grad_w q)`
//! and `S2` the pressure jump penalty. Boundary values are imposed weakly:
//! on boundary faces the penalties act on the traces themselves, and
//! non-homogeneous data enters `F` and `G` as lifts.
//!
//! `G` collects `-(g, q)` plus the pressure penalty lift `h_T <p_D, q>`.

use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Mat};

use crate::error::{MwgError, Result};
use crate::geometry::Point3;
use crate::mesh::PolyMesh;
use crate::polybasis::{space_dimension, Ambient, PolySpace};
use crate::weakops::{
    axis_cross, build_weak_curl_with, build_weak_grad_with, Rules, WeakCurlOperator,
    WeakGradOperator,
};

pub type SparseMatrix = SparseColMat<usize, f64>;

/// Unknown layout: all velocity blocks first (one contiguous block of
/// `3 dim P_k` per cell), then all pressure blocks (`dim P_{k-1}` per cell).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DofMap {
    pub degree: usize,
    pub num_cells: usize,
    pub u_block: usize,
    pub p_block: usize,
}

impl DofMap {
    pub fn new(mesh: &PolyMesh, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(MwgError::InvalidArgument("degree must be at least 1".into()));
        }
        Ok(Self {
            degree: k,
            num_cells: mesh.num_cells(),
            u_block: 3 * space_dimension(k, Ambient::Cell),
            p_block: space_dimension(k - 1, Ambient::Cell),
        })
    }

    pub fn num_u(&self) -> usize {
        self.num_cells * self.u_block
    }

    pub fn num_p(&self) -> usize {
        self.num_cells * self.p_block
    }

    pub fn total(&self) -> usize {
        self.num_u() + self.num_p()
    }

    /// Offset of the velocity block of `cell` in the global vector.
    pub fn u_offset(&self, cell: usize) -> usize {
        cell * self.u_block
    }

    /// Offset of the pressure block of `cell` in the global vector.
    pub fn p_offset(&self, cell: usize) -> usize {
        self.num_u() + cell * self.p_block
    }
}

/// `nu = mu / epsilon`, piecewise constant.
#[derive(Clone, Debug)]
pub struct ProblemCoefficients {
    pub nu: Vec<f64>,
}

impl ProblemCoefficients {
    pub fn uniform(mesh: &PolyMesh, mu: f64, epsilon: f64) -> Result<Self> {
        Self::per_cell(vec![mu / epsilon; mesh.num_cells()])
    }

    pub fn per_cell(nu: Vec<f64>) -> Result<Self> {
        if let Some(i) = nu.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(MwgError::InvalidArgument(format!(
                "nu must be positive, got {} on cell {i}",
                nu[i]
            )));
        }
        Ok(Self { nu })
    }
}

fn zero_vector(_: Point3) -> Point3 {
    Point3::ZERO
}

fn zero_scalar(_: Point3) -> f64 {
    0.0
}

/// Source terms `f` (momentum) and `g` (divergence constraint).
#[derive(Clone, Copy)]
pub struct Sources<'a> {
    pub f: &'a dyn Fn(Point3) -> Point3,
    pub g: &'a dyn Fn(Point3) -> f64,
}

impl Sources<'static> {
    pub fn zero() -> Self {
        Self {
            f: &zero_vector,
            g: &zero_scalar,
        }
    }
}

/// Dirichlet data on the domain boundary. Only the tangential trace of `u`
/// is used.
#[derive(Clone, Copy)]
pub struct BoundaryData<'a> {
    pub u: &'a dyn Fn(Point3) -> Point3,
    pub p: &'a dyn Fn(Point3) -> f64,
}

impl BoundaryData<'static> {
    pub fn homogeneous() -> Self {
        Self {
            u: &zero_vector,
            p: &zero_scalar,
        }
    }
}

fn to_sparse(n: usize, m: usize, t: &[Triplet<usize, usize, f64>]) -> SparseMatrix {
    SparseMatrix::try_new_from_triplets(n, m, t).expect("triplet indices in range")
}

fn check_op(mesh: &PolyMesh, k: usize, degree: usize, cells: usize, what: &str) -> Result<()> {
    if degree != k || cells != mesh.num_cells() {
        return Err(MwgError::Mismatch(format!(
            "{what} built for degree {degree} on {cells} cells, asked for degree {k} on {} cells",
            mesh.num_cells()
        )));
    }
    Ok(())
}

/// Everything needed to assemble on one mesh at one degree.
pub struct Discretization<'m> {
    pub mesh: &'m PolyMesh,
    pub dofs: DofMap,
    pub rules: Rules,
    pub curl: WeakCurlOperator,
    pub grad: WeakGradOperator,
}

impl<'m> Discretization<'m> {
    pub fn new(mesh: &'m PolyMesh, k: usize) -> Result<Self> {
        let dofs = DofMap::new(mesh, k)?;
        let rules = Rules::new(mesh, k)?;
        let curl = build_weak_curl_with(mesh, k, &rules)?;
        let grad = build_weak_grad_with(mesh, k, &rules)?;
        Ok(Self {
            mesh,
            dofs,
            rules,
            curl,
            grad,
        })
    }

    pub fn degree(&self) -> usize {
        self.dofs.degree
    }

    /// `sum_T nu_T (curl_w v, curl_w w)_T`, indexed by velocity unknowns.
    fn curl_curl_triplets(&self, coeffs: &ProblemCoefficients) -> Vec<Triplet<usize, usize, f64>> {
        let ud = self.dofs.u_block;
        let mut out = Vec::new();
        for (t, op) in self.curl.cells.iter().enumerate() {
            let nu = coeffs.nu[t];
            let m = op.mass.nrows();
            // mass-weighted blocks
            let weighted: Vec<Mat<f64>> = op
                .blocks
                .iter()
                .map(|w| {
                    let mut mw = Mat::<f64>::zeros(w.nrows(), w.ncols());
                    for c in 0..3 {
                        let prod = &op.mass * w.subrows(c * m, m);
                        mw.subrows_mut(c * m, m).copy_from(&prod);
                    }
                    mw
                })
                .collect();
            for (s, ws) in op.blocks.iter().enumerate() {
                let row0 = self.dofs.u_offset(op.stencil[s]);
                for (r, mw) in weighted.iter().enumerate() {
                    let col0 = self.dofs.u_offset(op.stencil[r]);
                    let local = ws.transpose() * mw;
                    for i in 0..ud {
                        for j in 0..ud {
                            let v = nu * local[(i, j)];
                            if v != 0.0 {
                                out.push(Triplet::new(row0 + i, col0 + j, v));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Jump penalty `s1`, accumulated face by face.
    fn s1_triplets(&self) -> Vec<Triplet<usize, usize, f64>> {
        let mesh = self.mesh;
        let k = self.degree();
        let d = space_dimension(k, Ambient::Cell);
        let mut out = Vec::new();
        let mut phi_a = vec![0.0; d];
        let mut phi_b = vec![0.0; d];
        for f in &mesh.faces {
            let rule = &self.rules.face[f.id];
            let own = PolySpace::on_cell(mesh, f.owner, k);
            let h_own = mesh.cells[f.owner].diameter;
            match f.neighbor {
                Some(nb) => {
                    let other = PolySpace::on_cell(mesh, nb, k);
                    let coef = 0.25 * (1.0 / h_own + 1.0 / mesh.cells[nb].diameter);
                    // scalar face mass between the two sides
                    let mut mass = [Mat::<f64>::zeros(d, d), Mat::zeros(d, d), Mat::zeros(d, d)];
                    for (p, w) in rule.points.iter().zip(&rule.weights) {
                        own.eval(*p, &mut phi_a);
                        other.eval(*p, &mut phi_b);
                        for i in 0..d {
                            for j in 0..d {
                                mass[0][(i, j)] += w * phi_a[i] * phi_a[j];
                                mass[1][(i, j)] += w * phi_a[i] * phi_b[j];
                                mass[2][(i, j)] += w * phi_b[i] * phi_b[j];
                            }
                        }
                    }
                    let cells = [f.owner, nb];
                    for (x, &cx) in cells.iter().enumerate() {
                        for (y, &cy) in cells.iter().enumerate() {
                            let sign = if x == y { 1.0 } else { -1.0 };
                            for comp in 0..3 {
                                let r0 = self.dofs.u_offset(cx) + comp * d;
                                let c0 = self.dofs.u_offset(cy) + comp * d;
                                for i in 0..d {
                                    for j in 0..d {
                                        let v = match (x, y) {
                                            (0, 0) => mass[0][(i, j)],
                                            (1, 1) => mass[2][(i, j)],
                                            (0, 1) => mass[1][(i, j)],
                                            _ => mass[1][(j, i)],
                                        };
                                        out.push(Triplet::new(r0 + i, c0 + j, sign * coef * v));
                                    }
                                }
                            }
                        }
                    }
                }
                None => {
                    // tangential trace only
                    let n = f.normal;
                    let coef = 1.0 / h_own;
                    let mut mass = Mat::<f64>::zeros(d, d);
                    for (p, w) in rule.points.iter().zip(&rule.weights) {
                        own.eval(*p, &mut phi_a);
                        for i in 0..d {
                            for j in 0..d {
                                mass[(i, j)] += w * phi_a[i] * phi_a[j];
                            }
                        }
                    }
                    let base = self.dofs.u_offset(f.owner);
                    for a in 0..3 {
                        for b in 0..3 {
                            let kab = f64::from(u8::from(a == b)) - n[a] * n[b];
                            if kab == 0.0 {
                                continue;
                            }
                            for i in 0..d {
                                for j in 0..d {
                                    out.push(Triplet::new(
                                        base + a * d + i,
                                        base + b * d + j,
                                        coef * kab * mass[(i, j)],
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// `A = curl-curl + s1` over velocity unknowns.
    pub fn assemble_a(&self, coeffs: &ProblemCoefficients) -> SparseMatrix {
        let mut t = self.curl_curl_triplets(coeffs);
        t.extend(self.s1_triplets());
        let n = self.dofs.num_u();
        to_sparse(n, n, &t)
    }

    /// The stabilizer `s1` alone.
    pub fn assemble_s1(&self) -> SparseMatrix {
        let n = self.dofs.num_u();
        to_sparse(n, n, &self.s1_triplets())
    }

    /// `B[q, v] = sum_T (v, grad_w q)_T`; rows are pressure unknowns
    /// (numbered from zero), columns velocity unknowns.
    pub fn assemble_b(&self) -> SparseMatrix {
        let ud = self.dofs.u_block;
        let pd = self.dofs.p_block;
        let mut out = Vec::new();
        for (t, op) in self.grad.cells.iter().enumerate() {
            let d = op.mass.nrows();
            let col0 = self.dofs.u_offset(t);
            for (s, g) in op.blocks.iter().enumerate() {
                let row0 = op.stencil[s] * pd;
                // (M_vec G)^T
                for c in 0..3 {
                    let mg = &op.mass * g.subrows(c * d, d);
                    for i in 0..d {
                        for q in 0..pd {
                            let v = mg[(i, q)];
                            if v != 0.0 {
                                out.push(Triplet::new(row0 + q, col0 + c * d + i, v));
                            }
                        }
                    }
                }
            }
        }
        to_sparse(self.dofs.num_p(), ud * self.dofs.num_cells, &out)
    }

    /// Pressure jump penalty `s2`, accumulated face by face.
    pub fn assemble_s2(&self) -> SparseMatrix {
        let mesh = self.mesh;
        let k = self.degree();
        let m = self.dofs.p_block;
        let mut out = Vec::new();
        let mut qa = vec![0.0; m];
        let mut qb = vec![0.0; m];
        for f in &mesh.faces {
            let rule = &self.rules.face[f.id];
            let own = PolySpace::on_cell(mesh, f.owner, k - 1);
            let h_own = mesh.cells[f.owner].diameter;
            let (cells, coef, other) = match f.neighbor {
                Some(nb) => (
                    vec![f.owner, nb],
                    0.25 * (h_own + mesh.cells[nb].diameter),
                    Some(PolySpace::on_cell(mesh, nb, k - 1)),
                ),
                None => (vec![f.owner], h_own, None),
            };
            let ns = cells.len();
            let mut local = Mat::<f64>::zeros(ns * m, ns * m);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                own.eval(*p, &mut qa);
                let mut trace = qa.clone();
                if let Some(o) = &other {
                    o.eval(*p, &mut qb);
                    trace.extend(qb.iter().map(|x| -x));
                }
                for i in 0..ns * m {
                    for j in 0..ns * m {
                        local[(i, j)] += coef * w * trace[i] * trace[j];
                    }
                }
            }
            for (x, &cx) in cells.iter().enumerate() {
                for (y, &cy) in cells.iter().enumerate() {
                    for i in 0..m {
                        for j in 0..m {
                            out.push(Triplet::new(
                                cx * m + i,
                                cy * m + j,
                                local[(x * m + i, y * m + j)],
                            ));
                        }
                    }
                }
            }
        }
        let n = self.dofs.num_p();
        to_sparse(n, n, &out)
    }

    /// Right-hand sides `(F, G)` including the boundary-data lifts.
    pub fn assemble_rhs(
        &self,
        coeffs: &ProblemCoefficients,
        sources: Sources<'_>,
        data: BoundaryData<'_>,
    ) -> (Vec<f64>, Vec<f64>) {
        let mesh = self.mesh;
        let k = self.degree();
        let d = space_dimension(k, Ambient::Cell);
        let m = self.dofs.p_block;
        let mut f_vec = vec![0.0; self.dofs.num_u()];
        let mut g_vec = vec![0.0; self.dofs.num_p()];
        let mut phi = vec![0.0; d];
        let mut q = vec![0.0; m];
        for t in 0..mesh.num_cells() {
            let us = PolySpace::on_cell(mesh, t, k);
            let ps = PolySpace::on_cell(mesh, t, k - 1);
            let u0 = self.dofs.u_offset(t);
            let p0 = t * m;
            let rule = &self.rules.cell[t];
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                us.eval(*x, &mut phi);
                ps.eval(*x, &mut q);
                let fx = (sources.f)(*x);
                let gx = (sources.g)(*x);
                for a in 0..3 {
                    for i in 0..d {
                        f_vec[u0 + a * d + i] += w * fx[a] * phi[i];
                    }
                }
                for i in 0..m {
                    g_vec[p0 + i] -= w * gx * q[i];
                }
            }

            let h = mesh.cells[t].diameter;
            let mut touches_boundary = false;
            for r in &mesh.cells[t].faces {
                if !mesh.faces[r.face].is_boundary() {
                    continue;
                }
                touches_boundary = true;
                let n = mesh.outward_normal(r);
                let frule = &self.rules.face[r.face];
                for (x, w) in frule.points.iter().zip(&frule.weights) {
                    us.eval(*x, &mut phi);
                    ps.eval(*x, &mut q);
                    let ut = (data.u)(*x).cross(n);
                    let pd = (data.p)(*x);
                    // h^-1 <u_D x n, v x n>
                    for a in 0..3 {
                        let s = w / h * ut.dot(axis_cross(a, n));
                        for i in 0..d {
                            f_vec[u0 + a * d + i] += s * phi[i];
                        }
                    }
                    // h <p_D, q>
                    for i in 0..m {
                        g_vec[p0 + i] += h * w * pd * q[i];
                    }
                }
            }
            if !touches_boundary {
                continue;
            }

            // -nu (c_T, curl_w v)_T, spread over the stencil of T
            let c = self.curl.boundary_offset(mesh, &self.rules, t, data.u);
            let op = &self.curl.cells[t];
            let mm = op.mass.nrows();
            let mut mc = vec![0.0; c.len()];
            for comp in 0..3 {
                for i in 0..mm {
                    mc[comp * mm + i] = (0..mm)
                        .map(|j| op.mass[(i, j)] * c[comp * mm + j])
                        .sum();
                }
            }
            let nu = coeffs.nu[t];
            for (s, w) in op.stencil.iter().zip(&op.blocks) {
                let base = self.dofs.u_offset(*s);
                for col in 0..w.ncols() {
                    let v: f64 = (0..w.nrows()).map(|r| w[(r, col)] * mc[r]).sum();
                    f_vec[base + col] -= nu * v;
                }
            }

            // (v, d_T)_T from the pressure data in the weak gradient
            let dt = self.grad.boundary_offset(mesh, &self.rules, t, data.p);
            let gop = &self.grad.cells[t];
            for comp in 0..3 {
                for i in 0..d {
                    let v: f64 = (0..d).map(|j| gop.mass[(i, j)] * dt[comp * d + j]).sum();
                    f_vec[u0 + comp * d + i] += v;
                }
            }
        }
        (f_vec, g_vec)
    }

    pub fn assemble_system(
        &self,
        coeffs: &ProblemCoefficients,
        sources: Sources<'_>,
        data: BoundaryData<'_>,
    ) -> Result<BlockSystem> {
        if coeffs.nu.len() != self.mesh.num_cells() {
            return Err(MwgError::Mismatch(format!(
                "{} coefficients for {} cells",
                coeffs.nu.len(),
                self.mesh.num_cells()
            )));
        }
        let (f, g) = self.assemble_rhs(coeffs, sources, data);
        Ok(BlockSystem {
            dofs: self.dofs,
            a: self.assemble_a(coeffs),
            b: self.assemble_b(),
            s2: self.assemble_s2(),
            f,
            g,
        })
    }
}

pub fn assemble_a(
    mesh: &PolyMesh,
    k: usize,
    coeffs: &ProblemCoefficients,
    curl: &WeakCurlOperator,
) -> Result<SparseMatrix> {
    check_op(mesh, k, curl.degree, curl.num_cells, "weak curl")?;
    let disc = Discretization::new(mesh, k)?;
    Ok(disc.assemble_a(coeffs))
}

pub fn assemble_b(mesh: &PolyMesh, k: usize, grad: &WeakGradOperator) -> Result<SparseMatrix> {
    check_op(mesh, k, grad.degree, grad.num_cells, "weak gradient")?;
    let disc = Discretization::new(mesh, k)?;
    Ok(disc.assemble_b())
}

pub fn assemble_s2(mesh: &PolyMesh, k: usize) -> Result<SparseMatrix> {
    Ok(Discretization::new(mesh, k)?.assemble_s2())
}

pub fn assemble_system(
    mesh: &PolyMesh,
    k: usize,
    coeffs: &ProblemCoefficients,
    sources: Sources<'_>,
    data: BoundaryData<'_>,
) -> Result<BlockSystem> {
    Discretization::new(mesh, k)?.assemble_system(coeffs, sources, data)
}

/// Assembled blocks and right-hand sides.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub dofs: DofMap,
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub s2: SparseMatrix,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

fn push_block(
    out: &mut Vec<Triplet<usize, usize, f64>>,
    m: &SparseMatrix,
    r0: usize,
    c0: usize,
    scale: f64,
    transpose: bool,
) {
    for (col, row, v) in m
        .triplet_iter()
        .map(|t| (t.col, t.row, *t.val))
    {
        let (r, c) = if transpose { (col, row) } else { (row, col) };
        out.push(Triplet::new(r0 + r, c0 + c, scale * v));
    }
}

impl BlockSystem {
    pub fn dim(&self) -> usize {
        self.dofs.total()
    }

    fn combined(&self, lower_sign: f64) -> SparseMatrix {
        let nu = self.dofs.num_u();
        let mut t = Vec::with_capacity(
            self.a.compute_nnz() + 2 * self.b.compute_nnz() + self.s2.compute_nnz(),
        );
        push_block(&mut t, &self.a, 0, 0, 1.0, false);
        push_block(&mut t, &self.b, 0, nu, -1.0, true);
        push_block(&mut t, &self.b, nu, 0, lower_sign, false);
        push_block(&mut t, &self.s2, nu, nu, lower_sign, false);
        let n = self.dim();
        to_sparse(n, n, &t)
    }

    /// `[[A, -B^T], [B, S2]]`.
    pub fn matrix(&self) -> SparseMatrix {
        self.combined(1.0)
    }

    /// `[[A, -B^T], [-B, -S2]]`, symmetric.
    pub fn symmetric_matrix(&self) -> SparseMatrix {
        self.combined(-1.0)
    }

    /// `[F; G]`.
    pub fn rhs(&self) -> Vec<f64> {
        self.f.iter().chain(&self.g).copied().collect()
    }

    /// `[F; -G]`, matching [`BlockSystem::symmetric_matrix`].
    pub fn symmetric_rhs(&self) -> Vec<f64> {
        self.f.iter().copied().chain(self.g.iter().map(|x| -x)).collect()
    }
}

/// `y = M x`.
pub fn matvec(m: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    let xc = Col::<f64>::from_fn(x.len(), |i| x[i]);
    let y = m * &xc;
    (0..y.nrows()).map(|i| y[i]).collect()
}

/// `x^T M y`.
pub fn quadratic_form(m: &SparseMatrix, x: &[f64], y: &[f64]) -> f64 {
    matvec(m, y).iter().zip(x).map(|(a, b)| a * b).sum()
}
