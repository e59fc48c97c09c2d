use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use mwg::analysis::format_sci;
use mwg::driver::{self, RunConfig, SolutionDocument};
use mwg::mesh::{read_mesh_json, validate_mesh};
use mwg::{build_uniform_hex_mesh, MwgError};

#[derive(Parser)]
#[command(name = "mwg", version, about = "Modified weak Galerkin Maxwell solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence study on uniform cube meshes.
    Converge {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        degree: u8,
        /// Mesh levels (cells per direction), comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
        levels: Vec<usize>,
        #[arg(long, default_value = "paper1")]
        solution: String,
        #[arg(long, default_value_t = mwg::linsolve::DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        /// Skip levels above this many unknowns.
        #[arg(long, default_value_t = 200_000)]
        max_unknowns: usize,
        /// Skip levels whose projected wall time exceeds this many seconds.
        #[arg(long, default_value_t = 600.0)]
        max_time: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Solve once and write the per-cell coefficients as JSON.
    #[command(group(ArgGroup::new("grid").required(true).args(["mesh", "uniform"])))]
    Solve {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        degree: u8,
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        uniform: Option<usize>,
        #[arg(long, default_value = "paper1")]
        solution: String,
        #[arg(long, default_value_t = mwg::linsolve::DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a mesh file.
    CheckMesh { path: PathBuf },
}

fn status(e: &MwgError) -> ExitCode {
    match e {
        MwgError::InvalidArgument(_) | MwgError::UnknownSolution(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), MwgError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(MwgError::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render(table: &mwg::analysis::ConvergenceTable, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Table => table.to_table(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Converge {
            degree,
            levels,
            solution,
            tol,
            mu,
            epsilon,
            max_unknowns,
            max_time,
            out,
            format,
        } => {
            let config = RunConfig {
                degree: degree.into(),
                levels,
                solution,
                mu,
                epsilon,
                tol,
                max_unknowns,
                max_wall_time_s: max_time,
            };
            if let Err(e) = config.validate().and(driver::builtin_solution(&config.solution).map(|_| ())) {
                eprintln!("error: {e}");
                return status(&e);
            }
            match driver::run_convergence(&config) {
                Ok(run) => {
                    if !run.skipped.is_empty() {
                        eprintln!("skipped levels over budget: {:?}", run.skipped);
                    }
                    if let Err(e) = emit(&render(&run.table, format), out.as_deref()) {
                        eprintln!("error: {e}");
                        return status(&e);
                    }
                    ExitCode::SUCCESS
                }
                Err(failure) => {
                    let _ = emit(&render(&failure.partial, format), out.as_deref());
                    eprintln!("error: {failure}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Solve {
            degree,
            mesh,
            uniform,
            solution,
            tol,
            out,
        } => {
            let result = (|| {
                let spec = driver::builtin_solution(&solution)?;
                let (mesh, level) = match (mesh, uniform) {
                    (Some(p), _) => (read_mesh_json(&std::fs::read_to_string(p)?)?, 0),
                    (None, Some(n)) => (build_uniform_hex_mesh(n)?, n),
                    (None, None) => unreachable!("clap enforces the group"),
                };
                let k = usize::from(degree);
                let run = driver::solve_on_mesh(&mesh, level, k, &spec, spec.nu, tol)?;
                let doc = SolutionDocument::from_level(k, &run);
                std::fs::write(&out, doc.to_json()?)?;
                Ok::<_, MwgError>(run.report)
            })();
            match result {
                Ok(r) => {
                    println!(
                        "cells {}  unknowns {}  |Qu-uh| {}  |||e||| {}  |p-ph| {}  residual {}",
                        r.cells,
                        r.unknowns,
                        format_sci(r.err_u_l2),
                        format_sci(r.err_u_energy),
                        format_sci(r.err_p_l2),
                        format_sci(r.solve_residual)
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    status(&e)
                }
            }
        }
        Command::CheckMesh { path } => {
            let mesh = match std::fs::read_to_string(&path)
                .map_err(MwgError::from)
                .and_then(|t| read_mesh_json(&t))
            {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let violations = validate_mesh(&mesh);
            if violations.is_empty() {
                println!(
                    "ok: {} cells, {} faces ({} boundary), h = {}",
                    mesh.num_cells(),
                    mesh.num_faces(),
                    mesh.boundary_faces.len(),
                    format_sci(mesh.h)
                );
                ExitCode::SUCCESS
            } else {
                for v in &violations {
                    println!("{v}");
                }
                eprintln!("{} violation(s)", violations.len());
                ExitCode::from(1)
            }
        }
    }
}
