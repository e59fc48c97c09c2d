//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any hard criterion fails.
//!
//! Set `MWG_EXTENDED=1` to also run the P1 study on the 16^3 mesh.

mod common;

use std::time::Instant;

use mwg::analysis::{convergence_order, ConvergenceTable};
use mwg::assembly::{BoundaryData, Discretization, ProblemCoefficients, Sources};
use mwg::driver::{builtin_solution, run_convergence, solve_on_mesh, RunConfig};
use mwg::geometry::Point3;
use mwg::linsolve::singular_value_ratio;
use mwg::mesh::validate_mesh;
use mwg::polybasis::quadrature::{quad_rule_cell, quad_rule_face};
use mwg::polybasis::{space_dimension, Ambient, PolySpace};
use mwg::weakops::{jump_average_eval, project_l2_with};
use mwg::build_uniform_hex_mesh;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::rngs::StdRng;
use rand::SeedableRng;

const RESIDUAL_TOL: f64 = 1e-10;

struct Outcome {
    id: &'static str,
    pass: bool,
    soft: bool,
    detail: String,
    secs: f64,
}

fn run(id: &'static str, soft: bool, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    Outcome {
        id,
        pass,
        soft,
        detail,
        secs: start.elapsed().as_secs_f64(),
    }
}

fn final_orders(t: &ConvergenceTable) -> (f64, f64, f64) {
    let o = t.orders(t.rows.len() - 1).expect("at least two levels");
    (o.u_l2, o.u_energy, o.p_l2)
}

fn study(k: usize, levels: &[usize]) -> ConvergenceTable {
    let cfg = RunConfig {
        degree: k,
        levels: levels.to_vec(),
        solution: "paper1".into(),
        ..RunConfig::default()
    };
    let out = run_convergence(&cfg).unwrap_or_else(|e| panic!("P{k} study failed: {e}"));
    assert!(out.skipped.is_empty(), "budget skipped {:?}", out.skipped);
    out.table
}

fn max_residual(t: &ConvergenceTable) -> f64 {
    t.rows.iter().map(|r| r.solve_residual).fold(0.0, f64::max)
}

fn a1() -> (bool, String) {
    let mut rng = StdRng::seed_from_u64(20240611);
    let mut worst: f64 = 0.0;
    let mut draws = 0;
    for n in 1..=3 {
        let mesh = build_uniform_hex_mesh(n).unwrap();
        for k in 1..=2 {
            let disc = Discretization::new(&mesh, k).unwrap();
            let wd = 3 * space_dimension(k - 1, Ambient::Cell) * mesh.num_cells();
            let count = if (n, k) == (3, 2) { 15 } else { 17 };
            for _ in 0..count {
                let v = common::random_vec(&mut rng, disc.dofs.num_u());
                let w = common::random_vec(&mut rng, wd);
                let s = common::identity_sides(&disc, &v, &w);
                worst = worst.max((s.lhs - s.rhs).abs() / (s.norm_v * s.norm_w));
                draws += 1;
            }
        }
    }
    (
        draws == 100 && worst <= 1e-9,
        format!("{draws} draws, max relative residual {worst:.2e} (tol 1e-9)"),
    )
}

fn a2() -> (bool, String, f64) {
    let mut worst_u: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    for (name, k) in [("linear", 1), ("quadratic", 2)] {
        let spec = builtin_solution(name).unwrap();
        for n in 1..=3 {
            let mesh = build_uniform_hex_mesh(n).unwrap();
            let out = solve_on_mesh(&mesh, n, k, &spec, 1.0, RESIDUAL_TOL).unwrap();
            worst_u = worst_u.max(out.report.err_u_energy);
            worst_p = worst_p.max(out.err_p_projection);
            worst_res = worst_res.max(out.report.solve_residual);
        }
    }
    (
        worst_u <= 1e-7 && worst_p <= 1e-7,
        format!("max |||Q_k u - u_h||| {worst_u:.2e}, max ||Q_(k-1) p - p_h|| {worst_p:.2e} (tol 1e-7)"),
        worst_res,
    )
}

fn a6(residuals: &[f64]) -> (bool, String) {
    let mut worst_ratio = f64::INFINITY;
    for n in 1..=2 {
        let mesh = build_uniform_hex_mesh(n).unwrap();
        for k in 1..=2 {
            let disc = Discretization::new(&mesh, k).unwrap();
            let coeffs = ProblemCoefficients::uniform(&mesh, 1.0, 1.0).unwrap();
            let sys = disc
                .assemble_system(&coeffs, Sources::zero(), BoundaryData::homogeneous())
                .unwrap();
            worst_ratio = worst_ratio.min(singular_value_ratio(&sys.matrix()).unwrap());
        }
    }
    let worst_res = residuals.iter().copied().fold(0.0, f64::max);
    (
        worst_ratio > 1e-10 && worst_res <= RESIDUAL_TOL,
        format!(
            "min sigma_min/sigma_max {worst_ratio:.2e} (> 1e-10), max solve residual {worst_res:.2e} (<= 1e-10)"
        ),
    )
}

fn a7() -> (bool, String) {
    let mut failures = Vec::new();
    let runner = |name: &str, cases: u32| {
        let config = Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        };
        (name.to_string(), TestRunner::new(config))
    };

    // divergence closure and face counts on randomly graded meshes
    let (name, mut r) = runner("mesh closure", 24);
    let res = r.run(&(1usize..=4, any::<u64>()), |(n, seed)| {
        let mesh = common::graded_mesh(n, &mut StdRng::seed_from_u64(seed));
        prop_assert!(validate_mesh(&mesh).is_empty());
        prop_assert_eq!(mesh.num_faces(), 3 * n * n * (n + 1));
        prop_assert_eq!(mesh.num_interior_faces(), 3 * n * n * (n - 1));
        let vol: f64 = mesh.cells.iter().map(|c| c.volume).sum();
        prop_assert!((vol - 1.0).abs() < 1e-12);
        Ok(())
    });
    if let Err(e) = res {
        failures.push(format!("{name}: {e}"));
    }

    // cell and face quadrature exactness on random boxes
    let (name, mut r) = runner("quadrature exactness", 64);
    let res = r.run(&(1usize..=4, 0u32..=4, 0u32..=4, 0u32..=4, any::<u64>()), |(k, a, b, c, seed)| {
        let deg = 2 * k + 4;
        prop_assume!((a + b + c) as usize <= deg);
        let mesh = common::graded_mesh(2, &mut StdRng::seed_from_u64(seed));
        let cell = &mesh.cells[0];
        let q = quad_rule_cell(&mesh, 0, 2 * k + 5).unwrap();
        let verts: Vec<Point3> = mesh.cell_vertices(0).iter().map(|&v| mesh.vertices[v]).collect();
        let lo = |i: usize| verts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
        let hi = |i: usize| verts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
        let exact1 = |i: usize, e: u32| (hi(i).powi(e as i32 + 1) - lo(i).powi(e as i32 + 1)) / f64::from(e + 1);
        let mono = |p: Point3| p.x.powi(a as i32) * p.y.powi(b as i32) * p.z.powi(c as i32);
        let want = exact1(0, a) * exact1(1, b) * exact1(2, c);
        prop_assert!((q.integrate(mono) - want).abs() <= 1e-13 * want.abs().max(1e-3));
        prop_assert!((q.measure() - cell.volume).abs() < 1e-14);
        // the face of cell 0 normal to x at its upper end
        let r = cell
            .faces
            .iter()
            .find(|r| mesh.outward_normal(r).x > 0.5)
            .unwrap();
        let fq = quad_rule_face(&mesh, r.face, deg);
        let x1 = hi(0);
        let want = x1.powi(a as i32) * exact1(1, b) * exact1(2, c);
        prop_assert!((fq.integrate(mono) - want).abs() <= 1e-13 * want.abs().max(1e-3));
        Ok(())
    });
    if let Err(e) = res {
        failures.push(format!("{name}: {e}"));
    }

    // L2 projection reproduces polynomials and is idempotent
    let (name, mut r) = runner("projection idempotence", 48);
    let res = r.run(&(1usize..=4, any::<u64>()), |(k, seed)| {
        let mut rng = StdRng::seed_from_u64(seed);
        let mesh = common::graded_mesh(2, &mut rng);
        let t = (seed % 8) as usize;
        let space = PolySpace::on_cell(&mesh, t, k);
        let coeffs = common::random_vec(&mut rng, space.dim());
        let rule = quad_rule_cell(&mesh, t, 2 * k + 5).unwrap();
        let once = project_l2_with(&mesh, t, k, &rule, |x| space.combine(&coeffs, x)).unwrap();
        let twice = project_l2_with(&mesh, t, k, &rule, |x| space.combine(&once, x)).unwrap();
        for i in 0..coeffs.len() {
            prop_assert!((once[i] - coeffs[i]).abs() < 1e-9);
            prop_assert!((twice[i] - once[i]).abs() < 1e-9);
        }
        Ok(())
    });
    if let Err(e) = res {
        failures.push(format!("{name}: {e}"));
    }

    // jump/average algebra
    let (name, mut r) = runner("jump/average algebra", 128);
    let mesh = build_uniform_hex_mesh(2).unwrap();
    let res = r.run(&(0usize..36, -1e3f64..1e3, -1e3f64..1e3), |(f, a, b)| {
        let face = &mesh.faces[f];
        match face.neighbor {
            Some(nb) => {
                let (j, m) = jump_average_eval(&mesh, f, face.owner, a, Some(b)).unwrap();
                prop_assert!((j + m - a).abs() < 1e-12);
                prop_assert!((m - j - b).abs() < 1e-12);
                let (j2, m2) = jump_average_eval(&mesh, f, nb, b, Some(a)).unwrap();
                prop_assert!((j2 + j).abs() < 1e-12);
                prop_assert_eq!(m2, m);
            }
            None => {
                let (j, m) = jump_average_eval(&mesh, f, face.owner, a, None).unwrap();
                prop_assert_eq!(j, a);
                prop_assert_eq!(m, 0.0);
            }
        }
        Ok(())
    });
    if let Err(e) = res {
        failures.push(format!("{name}: {e}"));
    }

    if failures.is_empty() {
        (true, "mesh closure, quadrature, projection and jump/average properties hold".into())
    } else {
        (false, failures.join("; "))
    }
}

fn main() {
    let mut outcomes = Vec::new();
    let mut residuals = Vec::new();

    outcomes.push(run("A1", false, a1));

    outcomes.push(run("A2", false, || {
        let (pass, detail, res) = a2();
        residuals.push(res);
        (pass, detail)
    }));

    let mut p1 = None;
    outcomes.push(run("A3", false, || {
        let t = study(1, &[1, 2, 4, 8]);
        let (u, e, p) = final_orders(&t);
        residuals.push(max_residual(&t));
        let pass = u >= 1.8 && (0.9..=1.6).contains(&e) && (0.5..=1.3).contains(&p);
        let detail = format!(
            "P1 final orders: L2(u) {u:.2} (>= 1.8), energy {e:.2} (in [0.9, 1.6]), p {p:.2} (in [0.5, 1.3])"
        );
        p1 = Some(t);
        (pass, detail)
    }));

    outcomes.push(run("A4", false, || {
        let t2 = study(2, &[1, 2, 4]);
        let (u, e, p) = final_orders(&t2);
        let t3 = study(3, &[1, 2]);
        let (u3, _, _) = final_orders(&t3);
        residuals.push(max_residual(&t2));
        residuals.push(max_residual(&t3));
        let pass = u >= 2.2 && e >= 1.6 && p >= 1.3 && u3 >= 3.4;
        (
            pass,
            format!(
                "P2 final orders: L2(u) {u:.2} (>= 2.2), energy {e:.2} (>= 1.6), p {p:.2} (>= 1.3); P3 L2(u) {u3:.2} (>= 3.4)"
            ),
        )
    }));

    outcomes.push(run("A5", true, || {
        let t = p1.as_ref().expect("A3 ran");
        let r = &t.rows[0];
        let published = [1.24, 2.67, 0.114];
        let ours = [r.err_u_l2, r.err_u_energy, r.err_p_l2];
        let factors: Vec<f64> = ours
            .iter()
            .zip(published)
            .map(|(a, b)| (a / b).max(b / a))
            .collect();
        let pass = factors.iter().all(|&f| f <= 2.5);
        (
            pass,
            format!(
                "P1 grid 1: ({:.3e}, {:.3e}, {:.3e}) vs (1.24e0, 2.67e0, 1.14e-1), factors ({:.2}, {:.2}, {:.2}) (<= 2.5)",
                ours[0], ours[1], ours[2], factors[0], factors[1], factors[2]
            ),
        )
    }));

    outcomes.push(run("A6", false, || a6(&residuals)));

    outcomes.push(run("A7", false, a7));

    if std::env::var("MWG_EXTENDED").is_ok_and(|v| v == "1") {
        outcomes.push(run("A3-extended", true, || {
            let t = study(1, &[1, 2, 4, 8, 16]);
            let r = t.rows.last().unwrap();
            let prev = &t.rows[t.rows.len() - 2];
            (
                convergence_order(prev.err_u_l2, r.err_u_l2).unwrap() >= 1.8,
                format!("grid 5 ({} unknowns)\n{}", r.unknowns, t.to_table()),
            )
        }));
    }

    let mut failed = false;
    for o in &outcomes {
        let status = match (o.pass, o.soft) {
            (true, _) => "PASS",
            (false, true) => "MISS (soft, reported only)",
            (false, false) => {
                failed = true;
                "FAIL"
            }
        };
        println!("{} {status} [{:.1}s] {}", o.id, o.secs, o.detail);
    }
    if failed {
        std::process::exit(1);
    }
}
