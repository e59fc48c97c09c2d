#![allow(dead_code)]

use mwg::assembly::Discretization;
use mwg::geometry::Point3;
use mwg::mesh::PolyMesh;
use mwg::polybasis::{space_dimension, Ambient, PolySpace};
use mwg::weakops::jump_average_eval;
use rand::rngs::StdRng;
use rand::Rng;

/// Value of a component-major vector polynomial at `x`.
pub fn vector_value(space: &PolySpace, coeffs: &[f64], x: Point3) -> Point3 {
    let d = space.dim();
    Point3::new(
        space.combine(&coeffs[..d], x),
        space.combine(&coeffs[d..2 * d], x),
        space.combine(&coeffs[2 * d..3 * d], x),
    )
}

/// Curl of a component-major vector polynomial at `x`.
pub fn vector_curl(space: &PolySpace, coeffs: &[f64], x: Point3) -> Point3 {
    let d = space.dim();
    let mut vals = vec![0.0; d];
    let mut grads = vec![Point3::ZERO; d];
    space.eval_with_grad(x, &mut vals, &mut grads);
    let mut c = Point3::ZERO;
    for comp in 0..3 {
        let e = Point3::axis(comp);
        for i in 0..d {
            c += grads[i].cross(e) * coeffs[comp * d + i];
        }
    }
    c
}

/// Both sides of
/// `(curl_w v, w) = (curl v, w) + sum_T <[v] x n, w>_{dT}`
/// for piecewise `[P_{k-1}]^3` fields `w`, plus `||v||` and `||w||`.
pub struct IdentitySides {
    pub lhs: f64,
    pub rhs: f64,
    pub norm_v: f64,
    pub norm_w: f64,
}

pub fn identity_sides(disc: &Discretization, v: &[f64], w: &[f64]) -> IdentitySides {
    let mesh: &PolyMesh = disc.mesh;
    let k = disc.degree();
    let ud = 3 * space_dimension(k, Ambient::Cell);
    let wd = 3 * space_dimension(k - 1, Ambient::Cell);
    let (mut lhs, mut rhs, mut nv, mut nw) = (0.0, 0.0, 0.0, 0.0);
    for t in 0..mesh.num_cells() {
        let us = PolySpace::on_cell(mesh, t, k);
        let ws = PolySpace::on_cell(mesh, t, k - 1);
        let vt = &v[t * ud..(t + 1) * ud];
        let wt = &w[t * wd..(t + 1) * wd];
        let curl_w = disc.curl.apply(t, v);
        for (x, q) in disc.rules.cell[t].points.iter().zip(&disc.rules.cell[t].weights) {
            let wx = vector_value(&ws, wt, *x);
            lhs += q * vector_value(&ws, &curl_w, *x).dot(wx);
            rhs += q * vector_curl(&us, vt, *x).dot(wx);
            nv += q * vector_value(&us, vt, *x).dot(vector_value(&us, vt, *x));
            nw += q * wx.dot(wx);
        }
        for r in &mesh.cells[t].faces {
            let n = mesh.outward_normal(r);
            let other = mesh.across(r);
            let rule = &disc.rules.face[r.face];
            for (x, q) in rule.points.iter().zip(&rule.weights) {
                let own = vector_value(&us, vt, *x);
                let nb = other.map(|o| {
                    let os = PolySpace::on_cell(mesh, o, k);
                    vector_value(&os, &v[o * ud..(o + 1) * ud], *x)
                });
                let (jump, _) = jump_average_eval(mesh, r.face, t, own, nb).unwrap();
                rhs += q * jump.cross(n).dot(vector_value(&ws, wt, *x));
            }
        }
    }
    IdentitySides {
        lhs,
        rhs,
        norm_v: nv.sqrt(),
        norm_w: nw.sqrt(),
    }
}

pub fn random_vec(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Unit-cube mesh with `n` cells per direction and independent random
/// spacing along each axis.
pub fn graded_mesh(n: usize, rng: &mut StdRng) -> PolyMesh {
    let base = mwg::build_uniform_hex_mesh(n).unwrap();
    let mut ticks = Vec::new();
    for _ in 0..3 {
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let total: f64 = w.iter().sum();
        let mut t = vec![0.0];
        for x in &w {
            t.push(t.last().unwrap() + x / total);
        }
        ticks.push(t);
    }
    let vertices = base
        .vertices
        .iter()
        .map(|p| {
            let idx = |x: f64| (x * n as f64).round() as usize;
            Point3::new(ticks[0][idx(p.x)], ticks[1][idx(p.y)], ticks[2][idx(p.z)])
        })
        .collect();
    let (faces, cells) = base.topology();
    PolyMesh::from_topology(vertices, faces, cells).unwrap()
}
