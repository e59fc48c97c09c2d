//! Manufactured solutions and end-to-end convergence runs.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    energy_error, l2_error_scalar, project_pressure, seminorm_0h, velocity_error,
    velocity_l2_norm, ConvergenceTable, ErrorReport,
};
use crate::assembly::{BoundaryData, Discretization, ProblemCoefficients, Sources};
use crate::error::{MwgError, Result};
use crate::geometry::Point3;
use crate::linsolve;
use crate::mesh::{build_uniform_hex_mesh, PolyMesh};
use crate::polybasis::{space_dimension, Ambient};

type VecField = fn(Point3) -> Point3;
type ScalarField = fn(Point3) -> f64;

/// Exact solution on the unit cube with hand-entered derivatives. The data
/// is `f = nu curl curl u - grad p` and `g = div u` for constant `nu`.
#[derive(Clone, Copy, Debug)]
pub struct SolutionSpec {
    pub name: &'static str,
    pub u: VecField,
    pub curl_u: VecField,
    pub curl_curl_u: VecField,
    pub div_u: ScalarField,
    pub p: ScalarField,
    pub grad_p: VecField,
    pub nu: f64,
}

impl SolutionSpec {
    pub fn f(&self, x: Point3) -> Point3 {
        (self.curl_curl_u)(x) * self.nu - (self.grad_p)(x)
    }

    pub fn g(&self, x: Point3) -> f64 {
        (self.div_u)(x)
    }
}

fn p3(x: f64, y: f64, z: f64) -> Point3 {
    Point3::new(x, y, z)
}

const PAPER1: SolutionSpec = SolutionSpec {
    name: "paper1",
    u: |x| p3(x.z * x.z, x.x.powi(3), x.y.powi(4)),
    curl_u: |x| p3(4.0 * x.y.powi(3), 2.0 * x.z, 3.0 * x.x * x.x),
    curl_curl_u: |x| p3(-2.0, -6.0 * x.x, -12.0 * x.y * x.y),
    div_u: |_| 0.0,
    p: |x| x.x.powi(4),
    grad_p: |x| p3(4.0 * x.x.powi(3), 0.0, 0.0),
    nu: 1.0,
};

const LINEAR: SolutionSpec = SolutionSpec {
    name: "linear",
    u: |x| p3(x.z, x.x, x.y),
    curl_u: |_| p3(1.0, 1.0, 1.0),
    curl_curl_u: |_| Point3::ZERO,
    div_u: |_| 0.0,
    p: |_| 0.0,
    grad_p: |_| Point3::ZERO,
    nu: 1.0,
};

const QUADRATIC: SolutionSpec = SolutionSpec {
    name: "quadratic",
    u: |x| p3(x.z * x.z, x.x * x.x, x.y * x.y),
    curl_u: |x| p3(2.0 * x.y, 2.0 * x.z, 2.0 * x.x),
    curl_curl_u: |_| p3(-2.0, -2.0, -2.0),
    div_u: |_| 0.0,
    p: |x| x.x,
    grad_p: |_| p3(1.0, 0.0, 0.0),
    nu: 1.0,
};

/// Names accepted by [`builtin_solution`].
pub const SOLUTION_NAMES: [&str; 3] = ["paper1", "linear", "quadratic"];

pub fn builtin_solution(name: &str) -> Result<SolutionSpec> {
    match name {
        "paper1" => Ok(PAPER1),
        "linear" => Ok(LINEAR),
        "quadratic" => Ok(QUADRATIC),
        _ => Err(MwgError::UnknownSolution(name.to_string())),
    }
}

fn central_diff<T>(f: impl Fn(Point3) -> T, x: Point3, axis: usize, h: f64) -> (T, T) {
    let e = Point3::axis(axis) * h;
    (f(x + e), f(x - e))
}

fn fd_curl(f: impl Fn(Point3) -> Point3, x: Point3, h: f64) -> Point3 {
    let mut d = [[0.0; 3]; 3]; // d[i][j] = d f_i / d x_j
    for j in 0..3 {
        let (a, b) = central_diff(&f, x, j, h);
        for i in 0..3 {
            d[i][j] = (a[i] - b[i]) / (2.0 * h);
        }
    }
    p3(d[2][1] - d[1][2], d[0][2] - d[2][0], d[1][0] - d[0][1])
}

fn fd_div(f: impl Fn(Point3) -> Point3, x: Point3, h: f64) -> f64 {
    (0..3)
        .map(|j| {
            let (a, b) = central_diff(&f, x, j, h);
            (a[j] - b[j]) / (2.0 * h)
        })
        .sum()
}

fn fd_grad(f: impl Fn(Point3) -> f64, x: Point3, h: f64) -> Point3 {
    let mut g = [0.0; 3];
    for (j, gj) in g.iter_mut().enumerate() {
        let (a, b) = central_diff(&f, x, j, h);
        *gj = (a - b) / (2.0 * h);
    }
    Point3::from_array(g)
}

/// Compares the hand-entered derivatives against central differences at
/// the given points. Returns the worst relative discrepancy, or an error
/// naming the first field that exceeds `tol`.
pub fn check_solution(spec: &SolutionSpec, points: &[Point3], step: f64, tol: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut check = |what: &str, fd: Point3, exact: Point3, x: Point3| -> Result<()> {
        let rel = (fd - exact).norm() / exact.norm().max(1.0);
        worst = worst.max(rel);
        if rel > tol {
            return Err(MwgError::Mismatch(format!(
                "{}: {what} disagrees with finite differences at ({}, {}, {}): {rel:.3e}",
                spec.name, x.x, x.y, x.z
            )));
        }
        Ok(())
    };
    for &x in points {
        check("curl u", fd_curl(spec.u, x, step), (spec.curl_u)(x), x)?;
        check("curl curl u", fd_curl(spec.curl_u, x, step), (spec.curl_curl_u)(x), x)?;
        check("grad p", fd_grad(spec.p, x, step), (spec.grad_p)(x), x)?;
        let d = fd_div(spec.u, x, step);
        check("div u", p3(d, 0.0, 0.0), p3((spec.div_u)(x), 0.0, 0.0), x)?;
    }
    Ok(worst)
}

/// Seeded random points in the unit cube.
pub fn random_points(n: usize, seed: u64) -> Vec<Point3> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| p3(rng.random(), rng.random(), rng.random()))
        .collect()
}

/// Unknown count at uniform level `n`.
pub fn unknowns_at(n: usize, k: usize) -> usize {
    n.pow(3) * (3 * space_dimension(k, Ambient::Cell) + space_dimension(k - 1, Ambient::Cell))
}

/// Discrete solution on one mesh together with its errors.
#[derive(Clone, Debug)]
pub struct LevelOutput {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub report: ErrorReport,
    /// `||Q_{k-1} p - p_h||`.
    pub err_p_projection: f64,
}

/// Assembles, solves and measures errors against `spec` on `mesh`.
pub fn solve_on_mesh(
    mesh: &PolyMesh,
    level: usize,
    k: usize,
    spec: &SolutionSpec,
    nu: f64,
    tol: f64,
) -> Result<LevelOutput> {
    let start = Instant::now();
    let disc = Discretization::new(mesh, k)?;
    let coeffs = ProblemCoefficients::per_cell(vec![nu; mesh.num_cells()])?;
    let f = |x: Point3| (spec.curl_curl_u)(x) * nu - (spec.grad_p)(x);
    let g = |x: Point3| spec.g(x);
    let system = disc.assemble_system(
        &coeffs,
        Sources { f: &f, g: &g },
        BoundaryData {
            u: &spec.u,
            p: &spec.p,
        },
    )?;
    let solved = linsolve::solve(&system, tol)?;
    let nu_dofs = disc.dofs.num_u();
    let (u, p) = solved.solution.split_at(nu_dofs);

    let e = velocity_error(&disc, &spec.u, u)?;
    let qp = project_pressure(&disc, &spec.p)?;
    let ep: Vec<f64> = qp.iter().zip(p).map(|(a, b)| a - b).collect();
    let err_p_projection = {
        let m = disc.dofs.p_block;
        let mut sum = 0.0;
        for t in 0..mesh.num_cells() {
            let x = &ep[t * m..(t + 1) * m];
            let mass = &disc.curl.cells[t].mass;
            for i in 0..m {
                for j in 0..m {
                    sum += x[i] * mass[(i, j)] * x[j];
                }
            }
        }
        sum.max(0.0).sqrt()
    };
    let report = ErrorReport {
        level,
        cells: mesh.num_cells(),
        unknowns: disc.dofs.total(),
        err_u_l2: velocity_l2_norm(&disc, &e),
        err_u_energy: energy_error(&e, &system.a),
        err_p_l2: l2_error_scalar(&disc, &spec.p, p)?,
        err_p_jump: seminorm_0h(&ep, &system.s2),
        solve_residual: solved.relative_residual,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(LevelOutput {
        u: u.to_vec(),
        p: p.to_vec(),
        report,
        err_p_projection,
    })
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub degree: usize,
    pub levels: Vec<usize>,
    pub solution: String,
    pub mu: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_unknowns: usize,
    pub max_wall_time_s: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            degree: 1,
            levels: vec![1, 2, 4, 8, 16],
            solution: "paper1".into(),
            mu: 1.0,
            epsilon: 1.0,
            tol: linsolve::DEFAULT_TOLERANCE,
            max_unknowns: 200_000,
            max_wall_time_s: 600.0,
        }
    }
}

pub const MAX_DEGREE: usize = 4;

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DEGREE).contains(&self.degree) {
            return Err(MwgError::InvalidArgument(format!(
                "degree must be in 1..={MAX_DEGREE}, got {}",
                self.degree
            )));
        }
        if self.levels.is_empty() {
            return Err(MwgError::InvalidArgument("no levels given".into()));
        }
        if self.levels.iter().any(|n| !n.is_power_of_two()) {
            return Err(MwgError::InvalidArgument(format!(
                "levels must be powers of two, got {:?}",
                self.levels
            )));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MwgError::InvalidArgument(format!(
                "levels must be strictly increasing, got {:?}",
                self.levels
            )));
        }
        if !(self.mu > 0.0 && self.epsilon > 0.0) {
            return Err(MwgError::InvalidArgument("mu and epsilon must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(MwgError::InvalidArgument("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// A run that stopped at a failing level, with the rows completed so far.
#[derive(Debug)]
pub struct RunFailure {
    pub partial: ConvergenceTable,
    pub error: MwgError,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} completed levels)", self.error, self.partial.rows.len())
    }
}

impl std::error::Error for RunFailure {}

#[derive(Debug)]
pub struct RunOutput {
    pub table: ConvergenceTable,
    /// Levels dropped by the unknown-count or wall-time budget.
    pub skipped: Vec<usize>,
}

/// Runs the configured levels in order. The budget drops a level when its
/// unknown count exceeds `max_unknowns` or its projected time (previous
/// level's time scaled quadratically in the unknown count) exceeds
/// `max_wall_time_s`; all later levels are dropped with it.
pub fn run_convergence(config: &RunConfig) -> std::result::Result<RunOutput, RunFailure> {
    let fail = |partial: ConvergenceTable, error| RunFailure { partial, error };
    let mut table = ConvergenceTable::new(config.degree);
    if let Err(e) = config.validate() {
        return Err(fail(table, e));
    }
    let spec = builtin_solution(&config.solution).map_err(|e| fail(ConvergenceTable::new(config.degree), e))?;
    let nu = config.mu / config.epsilon;
    let mut skipped = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    for (i, &n) in config.levels.iter().enumerate() {
        let dofs = unknowns_at(n, config.degree);
        let projected = last
            .map(|(d, t)| t * (dofs as f64 / d as f64).powi(2))
            .unwrap_or(0.0);
        if dofs > config.max_unknowns || projected > config.max_wall_time_s {
            skipped.extend_from_slice(&config.levels[i..]);
            break;
        }
        let out = build_uniform_hex_mesh(n)
            .and_then(|mesh| solve_on_mesh(&mesh, n, config.degree, &spec, nu, config.tol));
        match out {
            Ok(o) => {
                last = Some((dofs, o.report.wall_time_s));
                table.rows.push(o.report);
            }
            Err(e) => return Err(fail(table, e)),
        }
    }
    Ok(RunOutput { table, skipped })
}

/// Per-cell coefficients in the scaled monomial basis.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CellCoefficients {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolutionDocument {
    pub degree: usize,
    pub cells: Vec<CellCoefficients>,
}

impl SolutionDocument {
    pub fn from_level(k: usize, out: &LevelOutput) -> Self {
        let ud = 3 * space_dimension(k, Ambient::Cell);
        let pd = space_dimension(k - 1, Ambient::Cell);
        let cells = out
            .u
            .chunks(ud)
            .zip(out.p.chunks(pd))
            .map(|(u, p)| CellCoefficients {
                u: u.to_vec(),
                p: p.to_vec(),
            })
            .collect();
        Self { degree: k, cells }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}
