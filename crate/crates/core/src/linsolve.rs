//! Direct solution of the assembled saddle-point system.
//!
//! The system is solved in its symmetric form (second block row negated)
//! with a sparse LDL^T factorization under a fill-reducing ordering. Pivots
//! are expected to be positive on velocity rows and negative on pressure
//! rows; small or wrongly signed pivots are regularized and the
//! perturbation is removed by iterative refinement against the same
//! factors. A sparse LU factorization is the fallback.

use std::time::Instant;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, LdltRef, SymbolicCholesky,
    SymmetricOrdering,
};
use faer::{Col, Conj, Par, Side};

use crate::assembly::{matvec, BlockSystem, SparseMatrix};
use crate::error::{MwgError, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 5;

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// `||b - M x|| / ||b||` (or `||M x||` when `b = 0`).
    pub relative_residual: f64,
    pub refinements: usize,
    pub wall_time_s: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_residual(m: &SparseMatrix, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let mx = matvec(m, x);
    let r: Vec<f64> = b.iter().zip(&mx).map(|(b, y)| b - y).collect();
    let nb = norm(b);
    let rel = if nb > 0.0 { norm(&r) / nb } else { norm(&r) };
    (r, rel)
}

/// Solves `m x = b` to relative residual `tol`.
pub fn solve_sparse(m: &SparseMatrix, b: &[f64], tol: f64) -> Result<SolveReport> {
    if m.nrows() != m.ncols() || m.nrows() != b.len() {
        return Err(MwgError::Mismatch(format!(
            "{}x{} matrix with right-hand side of length {}",
            m.nrows(),
            m.ncols(),
            b.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(MwgError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let start = Instant::now();
    let n = b.len();
    if n == 0 {
        return Ok(SolveReport {
            solution: Vec::new(),
            relative_residual: 0.0,
            refinements: 0,
            wall_time_s: 0.0,
        });
    }
    let lu = m
        .sp_lu()
        .map_err(|e| MwgError::SingularSystem(format!("{e:?}")))?;
    let solve = |rhs: &[f64]| -> Result<Vec<f64>> {
        let c = Col::<f64>::from_fn(n, |i| rhs[i]);
        let x = lu.solve(&c);
        finite((0..n).map(|i| x[i]).collect())
    };
    refine(m, b, tol, start, solve)
}

fn finite(x: Vec<f64>) -> Result<Vec<f64>> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(MwgError::SingularSystem("factorization produced non-finite values".into()))
    }
}

fn refine(
    m: &SparseMatrix,
    b: &[f64],
    tol: f64,
    start: Instant,
    solve: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<SolveReport> {
    let mut x = solve(b)?;
    let (mut r, mut rel) = relative_residual(m, &x, b);
    let mut refinements = 0;
    while rel > tol && refinements < MAX_REFINEMENTS {
        let dx = solve(&r)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        refinements += 1;
        let prev = rel;
        (r, rel) = relative_residual(m, &x, b);
        if rel >= prev {
            break;
        }
    }
    if !(rel <= tol) {
        return Err(MwgError::NotConverged { tol, residual: rel });
    }
    Ok(SolveReport {
        solution: x,
        relative_residual: rel,
        refinements,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

struct LdltFactor {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
}

impl LdltFactor {
    fn new(m: &SparseMatrix, signs: &[i8]) -> Result<Self> {
        let singular = |e: &dyn std::fmt::Debug| MwgError::SingularSystem(format!("{e:?}"));
        let symbolic = factorize_symbolic_cholesky(
            m.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams::default(),
        )
        .map_err(|e| singular(&e))?;
        let scale = m.val().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut values = vec![0.0; symbolic.len_val()];
        let params = Default::default();
        let mut buf = MemBuffer::new(symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, params));
        symbolic
            .factorize_numeric_ldlt(
                &mut values,
                m.as_ref(),
                Side::Lower,
                LdltRegularization {
                    dynamic_regularization_signs: Some(signs),
                    dynamic_regularization_delta: 1e-8 * scale,
                    dynamic_regularization_epsilon: 1e-14 * scale,
                },
                Par::Seq,
                MemStack::new(&mut buf),
                params,
            )
            .map_err(|e| singular(&e))?;
        Ok(Self { symbolic, values })
    }

    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = rhs.len();
        let mut x = faer::Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        let mut buf = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        LdltRef::new(&self.symbolic, &self.values).solve_in_place_with_conj(
            Conj::No,
            x.as_mut(),
            Par::Seq,
            MemStack::new(&mut buf),
        );
        finite((0..n).map(|i| x[(i, 0)]).collect())
    }
}

/// Solves a symmetric system whose pivots are expected to carry `signs`
/// (`+1` or `-1` per unknown).
pub fn solve_symmetric(m: &SparseMatrix, b: &[f64], signs: &[i8], tol: f64) -> Result<SolveReport> {
    if m.nrows() != m.ncols() || m.nrows() != b.len() || signs.len() != b.len() {
        return Err(MwgError::Mismatch(format!(
            "{}x{} matrix, right-hand side of length {}, {} signs",
            m.nrows(),
            m.ncols(),
            b.len(),
            signs.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(MwgError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let start = Instant::now();
    if b.is_empty() {
        return refine(m, b, tol, start, |_| Ok(Vec::new()));
    }
    let factor = LdltFactor::new(m, signs)?;
    refine(m, b, tol, start, |r| factor.solve(r))
}

/// Solves the block system. The residual is reported for the original
/// (unsymmetrized) layout; both have the same norm.
pub fn solve(system: &BlockSystem, tol: f64) -> Result<SolveReport> {
    let m = system.symmetric_matrix();
    let b = system.symmetric_rhs();
    let (nu, np) = (system.dofs.num_u(), system.dofs.num_p());
    let signs: Vec<i8> = std::iter::repeat_n(1, nu).chain(std::iter::repeat_n(-1, np)).collect();
    match solve_symmetric(&m, &b, &signs, tol) {
        Ok(r) => Ok(r),
        Err(MwgError::SingularSystem(_) | MwgError::NotConverged { .. }) => solve_sparse(&m, &b, tol),
        Err(e) => Err(e),
    }
}

/// Ratio of smallest to largest singular value, computed densely.
pub fn singular_value_ratio(m: &SparseMatrix) -> Result<f64> {
    let s = m
        .to_dense()
        .singular_values()
        .map_err(|e| MwgError::SingularSystem(format!("svd failed: {e:?}")))?;
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        return Ok(0.0);
    }
    Ok(min / max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::sparse::Triplet;

    fn sparse(n: usize, entries: &[(usize, usize, f64)]) -> SparseMatrix {
        let t: Vec<_> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseMatrix::try_new_from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn identity() {
        let m = sparse(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let r = solve_sparse(&m, &[1.0, 2.0, 3.0], 1e-12).unwrap();
        assert_eq!(r.solution, vec![1.0, 2.0, 3.0]);
        assert!(r.relative_residual <= 1e-15);
    }

    #[test]
    fn small_saddle_point() {
        // [[2, -1], [-1, -1]] x = [1, -2] -> x = [1, 1]
        let m = sparse(2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, -1.0)]);
        let r = solve_sparse(&m, &[1.0, -2.0], 1e-12).unwrap();
        assert!((r.solution[0] - 1.0).abs() < 1e-14);
        assert!((r.solution[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn symmetric_saddle_point_with_signs() {
        let m = sparse(
            3,
            &[
                (0, 0, 4.0),
                (1, 1, 3.0),
                (0, 2, -1.0),
                (2, 0, -1.0),
                (1, 2, -2.0),
                (2, 1, -2.0),
                (2, 2, -0.5),
            ],
        );
        let x = [1.0, -2.0, 0.5];
        let b = matvec(&m, &x);
        let r = solve_symmetric(&m, &b, &[1, 1, -1], 1e-12).unwrap();
        for i in 0..3 {
            assert!((r.solution[i] - x[i]).abs() < 1e-12);
        }
        assert!(solve_symmetric(&m, &b, &[1, 1], 1e-12).is_err());
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let m = sparse(2, &[(0, 0, 4.0), (1, 1, 2.0), (0, 1, 1.0)]);
        let r = solve_sparse(&m, &[0.0, 0.0], 1e-12).unwrap();
        assert!(r.solution.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = sparse(2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(
            solve_sparse(&m, &[1.0, 0.0], 1e-12),
            Err(MwgError::SingularSystem(_) | MwgError::NotConverged { .. })
        ));
    }

    #[test]
    fn shape_mismatch() {
        let m = sparse(2, &[(0, 0, 1.0)]);
        assert!(matches!(solve_sparse(&m, &[1.0], 1e-10), Err(MwgError::Mismatch(_))));
    }

    #[test]
    fn singular_value_ratio_of_diagonal() {
        let m = sparse(3, &[(0, 0, 4.0), (1, 1, -2.0), (2, 2, 0.5)]);
        assert!((singular_value_ratio(&m).unwrap() - 0.125).abs() < 1e-14);
    }
}
