use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::stats::write_sweep_csv;
use super::table::{solve_scheme, write_timing_csv};
use super::{
    haar_average, item_rng, kappa_spectrum, random_spd, rotation_sweep, run_constant_metric_table,
    tail_probability_check, theta_grid, write_table_csv, ExperimentConfig, Scheme,
};
use crate::error::{Error, Result};
use crate::lattice::reduce_basis;
use crate::mesh::{build_mesh, mesh_metrics, radius_bound_check, verify_mesh};
use crate::metric::{spd_from_spectrum, Rotation};
use crate::solver::{linf_error, mask_fraction, omega1_mask, theorem_a_check, unreachable_count, Grid};

#[derive(Parser, Debug)]
#[command(name = "anisofm", version, about = "Anisotropic fast marching on lattice-reduced meshes")]
struct Cli {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct MetricArgs {
    #[arg(long)]
    dim: Option<String>,
    /// Eigenvalues geometric from 1/κ to κ.
    #[arg(long, conflicts_with_all = ["eigenvalues", "matrix"])]
    kappa: Option<String>,
    /// Comma separated eigenvalues.
    #[arg(long, conflicts_with = "matrix")]
    eigenvalues: Option<String>,
    /// Rows separated by `;`, entries by `,`.
    #[arg(long)]
    matrix: Option<String>,
    /// 2D only: eigenvector of the first eigenvalue.
    #[arg(long, allow_hyphen_values = true)]
    axis: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Error table of the selected schemes against the exact distance.
    Table {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long)]
        n: Option<String>,
        /// Comma separated subset of fm, gs, igs.
        #[arg(long)]
        schemes: Option<String>,
        #[arg(long)]
        tol: Option<String>,
    },
    /// λ₂ of diag(κ, 1/κ) rotated over [0, π/4].
    Sweep {
        /// Comma separated anisotropy ratios.
        #[arg(long)]
        kappa: Option<String>,
        #[arg(long)]
        steps: Option<String>,
    },
    /// Haar average of λ_d for metrics with det 1.
    Haar {
        #[arg(long)]
        dim: Option<String>,
        /// Comma separated anisotropy ratios.
        #[arg(long)]
        kappa: Option<String>,
        #[arg(long)]
        samples: Option<String>,
    },
    /// Empirical tail of λ₁ against C′(d) δᵈ.
    Tail {
        #[command(flatten)]
        metric: MetricArgs,
        /// Comma separated thresholds.
        #[arg(long)]
        deltas: Option<String>,
        #[arg(long)]
        samples: Option<String>,
    },
    /// Checks the mesh invariants on random metrics.
    VerifyMesh {
        #[arg(long)]
        dim: Option<String>,
        #[arg(long)]
        random: Option<String>,
        #[arg(long)]
        kappa_max: Option<String>,
    },
    /// Solves on one grid, writes the field and an error summary.
    Solve {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        tol: Option<String>,
    },
}

/// Runs the command line `argv` (program name first) and returns the exit code:
/// 0 on success, 1 on bad input, 2 on an internal defect.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_defect() {
                2
            } else {
                1
            }
        }
    }
}

fn set(config: &mut ExperimentConfig, key: &str, value: &Option<String>) -> Result<()> {
    if let Some(v) = value {
        config.set(key, v).map_err(|m| Error::InvalidArgument(format!("--{}: {m}", key.replace('_', "-"))))?;
    }
    Ok(())
}

fn set_metric(config: &mut ExperimentConfig, m: &MetricArgs) -> Result<()> {
    set(config, "dim", &m.dim)?;
    set(config, "kappa", &m.kappa)?;
    set(config, "eigenvalues", &m.eigenvalues)?;
    set(config, "matrix", &m.matrix)?;
    set(config, "axis", &m.axis)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    set(&mut config, "seed", &cli.seed)?;
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    match &cli.command {
        Command::Table { metric, n, schemes, tol } => {
            set_metric(&mut config, metric)?;
            set(&mut config, "n", n)?;
            set(&mut config, "schemes", schemes)?;
            set(&mut config, "tol", tol)?;
            table(&config)
        }
        Command::Sweep { kappa, steps } => {
            set(&mut config, "kappas", kappa)?;
            set(&mut config, "theta_steps", steps)?;
            sweep(&config)
        }
        Command::Haar { dim, kappa, samples } => {
            set(&mut config, "dim", dim)?;
            set(&mut config, "kappas", kappa)?;
            set(&mut config, "samples", samples)?;
            haar(&config)
        }
        Command::Tail { metric, deltas, samples } => {
            set_metric(&mut config, metric)?;
            set(&mut config, "deltas", deltas)?;
            set(&mut config, "samples", samples)?;
            tail(&config)
        }
        Command::VerifyMesh { dim, random, kappa_max } => {
            set(&mut config, "dim", dim)?;
            set(&mut config, "random", random)?;
            set(&mut config, "kappa_max", kappa_max)?;
            verify(&config)
        }
        Command::Solve { metric, n, scheme, tol } => {
            set_metric(&mut config, metric)?;
            set(&mut config, "n", n)?;
            set(&mut config, "schemes", scheme)?;
            set(&mut config, "tol", tol)?;
            solve(&config)
        }
    }
}

fn table(config: &ExperimentConfig) -> Result<()> {
    let rows = run_constant_metric_table(config)?;
    write_table_csv(&rows, create(&config.out, "table.csv")?)?;
    write_timing_csv(&rows, create(&config.out, "timing.csv")?)?;
    println!("config {}  d={}  n={}  Ω*¹ fraction {:.4}", config.hash(), config.dim, config.n, rows[0].mask_fraction);
    println!("{:<6}{:>14}{:>14}{:>12}{:>10}", "scheme", "L∞(Ω*)", "L∞(Ω*¹)", "unreached", "seconds");
    for r in &rows {
        println!("{:<6}{:>14.6}{:>14.6}{:>12}{:>10.2}", r.scheme, r.linf, r.linf_omega1, r.unreachable, r.seconds);
    }
    Ok(())
}

fn sweep(config: &ExperimentConfig) -> Result<()> {
    let thetas = theta_grid(config.theta_steps);
    for &k in &config.kappas {
        let records = rotation_sweep(k, &thetas)?;
        let name = format!("sweep_{k}.csv");
        write_sweep_csv(&records, create(&config.out, &name)?)?;
        let mut l: Vec<f64> = records.iter().map(|r| r.lambda_d).collect();
        l.sort_by(f64::total_cmp);
        println!("κ={k}: {} angles, median λ₂ {:.4}, max λ₂ {:.4} -> {name}", l.len(), l[l.len() / 2], l[l.len() - 1]);
    }
    Ok(())
}

fn haar(config: &ExperimentConfig) -> Result<()> {
    use std::io::Write;
    let d = config.dim;
    let mut out = create(&config.out, &format!("haar_{d}.csv"))?;
    writeln!(out, "dim,kappa,samples,mean,std_error,normalized")?;
    for &k in &config.kappas {
        let m = spd_from_spectrum(&kappa_spectrum(d, k), &Rotation::identity(d)?)?;
        let s = haar_average(&m, config.samples, config.seed)?;
        writeln!(out, "{d},{k},{},{:.16e},{:.16e},{:.16e}", s.samples, s.mean, s.std_error, s.normalized)?;
        println!("d={d} κ={k}: mean λ_d {:.5} ± {:.5}, normalized {:.5}", s.mean, s.std_error, s.normalized);
    }
    Ok(())
}

fn tail(config: &ExperimentConfig) -> Result<()> {
    let m = config.metric_matrix()?;
    let report = tail_probability_check(&m, &config.deltas, config.samples, config.seed)?;
    report.write_csv(create(&config.out, &format!("tail_{}.csv", config.dim))?)?;
    for r in &report.rows {
        println!(
            "δ={}: frequency {:.5} ± {:.5}, bound {:.5} {}",
            r.delta,
            r.frequency,
            r.std_error,
            r.bound,
            if r.pass { "ok" } else { "VIOLATED" }
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Error::BoundViolation("empirical tail exceeds C′(d) δᵈ".into()))
    }
}

fn verify(config: &ExperimentConfig) -> Result<()> {
    let d = config.dim;
    let mut passed = 0;
    let mut first_failure = None;
    for i in 0..config.random {
        let m = random_spd(d, config.kappa_max, &mut item_rng(config.seed, i as u64))?;
        let basis = reduce_basis(&m)?;
        let mesh = build_mesh(&m, &basis)?;
        let report = verify_mesh(&m, &mesh);
        if report.passed() && radius_bound_check(&m, &mesh, basis.norms()) {
            passed += 1;
        } else if first_failure.is_none() {
            first_failure = Some(i);
        }
    }
    println!("verify-mesh d={d}: {passed}/{} pass", config.random);
    match first_failure {
        None => Ok(()),
        Some(i) => Err(Error::MeshDefect(format!("first failing sample {i}"))),
    }
}

fn solve(config: &ExperimentConfig) -> Result<()> {
    let scheme = match config.schemes.as_slice() {
        [s] => *s,
        _ => return Err(Error::InvalidArgument("solve needs exactly one scheme".into())),
    };
    let m = config.metric_matrix()?;
    let grid = Grid::new(config.dim, config.n)?;
    let field = solve_scheme(config, scheme)?;
    field.write_csv(create(&config.out, "field.csv")?)?;
    let mesh = build_mesh(&m, &reduce_basis(&m)?)?;
    let mask = omega1_mask(&mesh, &grid)?;
    println!("config {}  scheme {scheme}  d={}  n={}", config.hash(), config.dim, config.n);
    println!("L∞(Ω*)  {:.6}", linf_error(&m, &field, None).0);
    println!("L∞(Ω*¹) {:.6}", linf_error(&m, &field, Some(&mask)).0);
    println!("Ω*¹ fraction {:.4}", mask_fraction(&grid, &mask));
    println!("unreachable nodes {}", unreachable_count(&field));
    if scheme != Scheme::Igs {
        let report = theorem_a_check(&m, &mesh, &field, &mesh_metrics(&m, &mesh), &mask)?;
        println!("error bound on Ω*¹: {} violations over {} nodes", report.violations, report.nodes_checked);
        if report.violations > 0 {
            return Err(Error::BoundViolation(format!("{} nodes break the error bound", report.violations)));
        }
    }
    Ok(())
}
