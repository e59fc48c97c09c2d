//! Error norms and convergence orders.

use std::fmt::Write as _;

use serde::Serialize;

use crate::assembly::{quadratic_form, Discretization, SparseMatrix};
use crate::error::{MwgError, Result};
use crate::geometry::Point3;
use crate::polybasis::PolySpace;
use crate::weakops::{project_l2_vector, project_l2_with};

/// Elementwise `Q_k u`, component-major per cell, laid out like the velocity
/// unknowns.
pub fn project_velocity(disc: &Discretization, u: &dyn Fn(Point3) -> Point3) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(disc.dofs.num_u());
    for t in 0..disc.mesh.num_cells() {
        out.extend(project_l2_vector(disc.mesh, t, disc.degree(), &disc.rules.cell[t], u)?);
    }
    Ok(out)
}

/// Elementwise `Q_{k-1} p`, laid out like the pressure unknowns.
pub fn project_pressure(disc: &Discretization, p: &dyn Fn(Point3) -> f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(disc.dofs.num_p());
    for t in 0..disc.mesh.num_cells() {
        out.extend(project_l2_with(disc.mesh, t, disc.degree() - 1, &disc.rules.cell[t], p)?);
    }
    Ok(out)
}

/// L2 norm of a velocity coefficient vector.
pub fn velocity_l2_norm(disc: &Discretization, v: &[f64]) -> f64 {
    let ud = disc.dofs.u_block;
    let mut sum = 0.0;
    for (t, op) in disc.grad.cells.iter().enumerate() {
        let d = op.mass.nrows();
        let block = &v[t * ud..(t + 1) * ud];
        for c in 0..3 {
            let x = &block[c * d..(c + 1) * d];
            for i in 0..d {
                for j in 0..d {
                    sum += x[i] * op.mass[(i, j)] * x[j];
                }
            }
        }
    }
    sum.max(0.0).sqrt()
}

/// `||Q_k u - u_h||`.
pub fn l2_error_vector(
    disc: &Discretization,
    u_exact: &dyn Fn(Point3) -> Point3,
    u_h: &[f64],
) -> Result<f64> {
    let e = velocity_error(disc, u_exact, u_h)?;
    Ok(velocity_l2_norm(disc, &e))
}

/// `Q_k u - u_h` as a coefficient vector.
pub fn velocity_error(
    disc: &Discretization,
    u_exact: &dyn Fn(Point3) -> Point3,
    u_h: &[f64],
) -> Result<Vec<f64>> {
    if u_h.len() != disc.dofs.num_u() {
        return Err(MwgError::Mismatch(format!(
            "velocity vector of length {}, expected {}",
            u_h.len(),
            disc.dofs.num_u()
        )));
    }
    let q = project_velocity(disc, u_exact)?;
    Ok(q.iter().zip(u_h).map(|(a, b)| a - b).collect())
}

/// `sqrt(a(e, e))` with the assembled (data-independent) `A`.
pub fn energy_error(e: &[f64], a: &SparseMatrix) -> f64 {
    quadratic_form(a, e, e).max(0.0).sqrt()
}

/// `||p - p_h||` by quadrature against the exact pressure.
pub fn l2_error_scalar(
    disc: &Discretization,
    p_exact: &dyn Fn(Point3) -> f64,
    p_h: &[f64],
) -> Result<f64> {
    if p_h.len() != disc.dofs.num_p() {
        return Err(MwgError::Mismatch(format!(
            "pressure vector of length {}, expected {}",
            p_h.len(),
            disc.dofs.num_p()
        )));
    }
    let m = disc.dofs.p_block;
    let mut sum = 0.0;
    for t in 0..disc.mesh.num_cells() {
        let space = PolySpace::on_cell(disc.mesh, t, disc.degree() - 1);
        let coeffs = &p_h[t * m..(t + 1) * m];
        sum += disc.rules.cell[t].integrate(|x| {
            let d = p_exact(x) - space.combine(coeffs, x);
            d * d
        });
    }
    Ok(sum.sqrt())
}

/// `|q|_{0,h} = sqrt(q^T S2 q)`.
pub fn seminorm_0h(q: &[f64], s2: &SparseMatrix) -> f64 {
    quadratic_form(s2, q, q).max(0.0).sqrt()
}

/// `log2(coarse / fine)` for errors on consecutive halvings.
pub fn convergence_order(coarse: f64, fine: f64) -> Result<f64> {
    if !(coarse > 0.0) {
        return Err(MwgError::NonPositiveError(coarse));
    }
    if !(fine > 0.0) {
        return Err(MwgError::NonPositiveError(fine));
    }
    Ok((coarse / fine).log2())
}

/// Scientific notation with a leading `0.`, as in `0.124E+01`.
pub fn format_sci(x: f64) -> String {
    if x == 0.0 {
        return "0.000E+00".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sign = if x < 0.0 { "-" } else { "" };
    let a = x.abs();
    let mut exp = a.log10().floor() as i32 + 1;
    let mut mant = (a / 10f64.powi(exp) * 1000.0).round();
    if mant >= 1000.0 {
        mant /= 10.0;
        exp += 1;
    } else if mant < 100.0 {
        mant = (a / 10f64.powi(exp - 1) * 1000.0).round();
        exp -= 1;
    }
    let e_sign = if exp < 0 { '-' } else { '+' };
    format!("{sign}0.{:03}E{e_sign}{:02}", mant as i64, exp.abs())
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ErrorReport {
    pub level: usize,
    pub cells: usize,
    pub unknowns: usize,
    pub err_u_l2: f64,
    pub err_u_energy: f64,
    pub err_p_l2: f64,
    /// `|Q_{k-1} p - p_h|_{0,h}`.
    pub err_p_jump: f64,
    pub solve_residual: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Orders {
    pub u_l2: f64,
    pub u_energy: f64,
    pub p_l2: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ConvergenceTable {
    pub degree: usize,
    pub rows: Vec<ErrorReport>,
}

pub const CSV_HEADER: &str = "level,cells,unknowns,err_u_l2,order_u_l2,err_u_energy,order_u_energy,err_p_l2,order_p_l2,solve_residual,wall_time_s";

impl ConvergenceTable {
    pub fn new(degree: usize) -> Self {
        Self {
            degree,
            rows: Vec::new(),
        }
    }

    /// Orders between row `i - 1` and row `i`; `None` for the first row or
    /// when either error is not positive.
    pub fn orders(&self, i: usize) -> Option<Orders> {
        if i == 0 || i >= self.rows.len() {
            return None;
        }
        let (a, b) = (&self.rows[i - 1], &self.rows[i]);
        Some(Orders {
            u_l2: convergence_order(a.err_u_l2, b.err_u_l2).ok()?,
            u_energy: convergence_order(a.err_u_energy, b.err_u_energy).ok()?,
            p_l2: convergence_order(a.err_p_l2, b.err_p_l2).ok()?,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            let o = self.orders(i);
            let ord = |f: fn(&Orders) -> f64| o.as_ref().map(|o| format!("{:.3e}", f(o))).unwrap_or_default();
            writeln!(
                s,
                "{},{},{},{:.6e},{},{:.6e},{},{:.6e},{},{:.3e},{:.3e}",
                r.level,
                r.cells,
                r.unknowns,
                r.err_u_l2,
                ord(|o| o.u_l2),
                r.err_u_energy,
                ord(|o| o.u_energy),
                r.err_p_l2,
                ord(|o| o.p_l2),
                r.solve_residual,
                r.wall_time_s
            )
            .unwrap();
        }
        s
    }

    /// Aligned text table in the layout of the published error profiles.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "{:>5} {:>9} {:>10} {:>6} {:>10} {:>6} {:>10} {:>6}",
            "grid", "dim", "|Qu-uh|", "order", "|||e|||", "order", "|p-ph|", "order"
        )
        .unwrap();
        for (i, r) in self.rows.iter().enumerate() {
            let o = self.orders(i);
            let ord = |f: fn(&Orders) -> f64| o.as_ref().map(|o| format!("{:.1}", f(o))).unwrap_or_default();
            writeln!(
                s,
                "{:>5} {:>9} {:>10} {:>6} {:>10} {:>6} {:>10} {:>6}",
                r.level,
                r.unknowns,
                format_sci(r.err_u_l2),
                ord(|o| o.u_l2),
                format_sci(r.err_u_energy),
                ord(|o| o.u_energy),
                format_sci(r.err_p_l2),
                ord(|o| o.p_l2),
            )
            .unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::ProblemCoefficients;
    use crate::mesh::build_uniform_hex_mesh;

    #[test]
    fn orders() {
        assert!((convergence_order(0.294, 0.0757).unwrap() - 1.957).abs() < 1e-3);
        assert!((convergence_order(0.930e-2, 0.554e-3).unwrap() - 4.07).abs() < 5e-3);
        assert_eq!(convergence_order(0.5, 0.5).unwrap(), 0.0);
        assert!(matches!(convergence_order(0.0, 1.0), Err(MwgError::NonPositiveError(_))));
        assert!(convergence_order(1.0, -1.0).is_err());
    }

    #[test]
    fn paper_style_numbers() {
        assert_eq!(format_sci(1.24), "0.124E+01");
        assert_eq!(format_sci(0.0757), "0.757E-01");
        assert_eq!(format_sci(0.000554), "0.554E-03");
        assert_eq!(format_sci(0.9996), "0.100E+01");
        assert_eq!(format_sci(0.0), "0.000E+00");
        assert_eq!(format_sci(-2.5), "-0.250E+01");
    }

    #[test]
    fn velocity_errors() {
        let m = build_uniform_hex_mesh(1).unwrap();
        let disc = Discretization::new(&m, 1).unwrap();
        let zero = vec![0.0; disc.dofs.num_u()];
        let e = l2_error_vector(&disc, &|_| Point3::new(1.0, 0.0, 0.0), &zero).unwrap();
        assert!((e - 1.0).abs() < 1e-13);

        let m = build_uniform_hex_mesh(2).unwrap();
        let disc = Discretization::new(&m, 2).unwrap();
        let u = |p: Point3| Point3::new(p.x.sin(), p.y * p.z, (p.x * p.y).exp());
        let q = project_velocity(&disc, &u).unwrap();
        assert!(l2_error_vector(&disc, &u, &q).unwrap() < 1e-12);
        assert!(l2_error_vector(&disc, &u, &[0.0]).is_err());
    }

    #[test]
    fn energy_is_quadratic_form() {
        let m = build_uniform_hex_mesh(2).unwrap();
        let disc = Discretization::new(&m, 1).unwrap();
        let a = disc.assemble_a(&ProblemCoefficients::uniform(&m, 1.0, 1.0).unwrap());
        assert_eq!(energy_error(&vec![0.0; disc.dofs.num_u()], &a), 0.0);
        let e: Vec<f64> = (0..disc.dofs.num_u()).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.4).collect();
        let q = quadratic_form(&a, &e, &e);
        assert!((energy_error(&e, &a).powi(2) - q).abs() <= 1e-12 * q);
        let scaled: Vec<f64> = e.iter().map(|x| -3.0 * x).collect();
        assert!((energy_error(&scaled, &a) - 3.0 * energy_error(&e, &a)).abs() < 1e-12);
    }

    #[test]
    fn pressure_errors() {
        let m = build_uniform_hex_mesh(2).unwrap();
        let disc = Discretization::new(&m, 2).unwrap();
        let p = |x: Point3| 1.0 + 2.0 * x.x - x.z;
        let q = project_pressure(&disc, &p).unwrap();
        assert!(l2_error_scalar(&disc, &p, &q).unwrap() < 1e-12);
        let zero = vec![0.0; disc.dofs.num_p()];
        let e = l2_error_scalar(&disc, &|_| 2.0, &zero).unwrap();
        assert!((e - 2.0).abs() < 1e-12);
    }

    #[test]
    fn seminorm_vanishes_for_continuous_zero_trace() {
        let m = build_uniform_hex_mesh(2).unwrap();
        let disc = Discretization::new(&m, 1).unwrap();
        let s2 = disc.assemble_s2();
        assert_eq!(seminorm_0h(&vec![0.0; 8], &s2), 0.0);
        let one = vec![1.0; 8];
        // only the 24 boundary faces of area 1/4 see the trace
        let h = 3f64.sqrt() / 2.0;
        assert!((seminorm_0h(&one, &s2) - (24.0 * 0.25 * h).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn table_output() {
        let mut t = ConvergenceTable::new(1);
        for (lvl, e) in [(1usize, 0.294), (2, 0.0757)] {
            t.rows.push(ErrorReport {
                level: lvl,
                cells: lvl.pow(3),
                unknowns: 13 * lvl.pow(3),
                err_u_l2: e,
                err_u_energy: e * 4.0,
                err_p_l2: e / 2.0,
                err_p_jump: 0.0,
                solve_residual: 1e-14,
                wall_time_s: 0.01,
            });
        }
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').nth(4), Some(""));
        let ord: f64 = lines[2].split(',').nth(4).unwrap().parse().unwrap();
        assert!((ord - 1.957).abs() < 1e-3);
        let table = t.to_table();
        assert!(table.contains("0.757E-01"));
        assert!(table.contains("2.0"));
        assert!(t.orders(0).is_none());
    }
}
