use std::io::Write;
use std::time::Instant;

use super::{ExperimentConfig, Scheme};
use crate::error::Result;
use crate::lattice::reduce_basis;
use crate::mesh::build_mesh;
use crate::solver::{
    br_baseline_solve, fast_march, gauss_seidel_solve, linf_error, mask_fraction, omega1_mask, unreachable_count,
    DistanceField, Grid,
};

/// One line of the constant-metric error table.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub config_hash: String,
    pub scheme: Scheme,
    pub dim: usize,
    pub n: i64,
    /// `L∞` error over `Ω*` (finite nodes).
    pub linf: f64,
    /// `L∞` error over `Ω*¹`.
    pub linf_omega1: f64,
    pub mask_fraction: f64,
    /// Nodes left at `+∞`.
    pub unreachable: usize,
    /// Wall time of the solve in seconds.
    pub seconds: f64,
}

/// Solves with one scheme.
pub fn solve_scheme(config: &ExperimentConfig, scheme: Scheme) -> Result<DistanceField> {
    let m = config.metric_matrix()?;
    let grid = Grid::new(config.dim, config.n)?;
    match scheme {
        Scheme::Fm => {
            let mesh = build_mesh(&m, &reduce_basis(&m)?)?;
            Ok(fast_march(&m, &mesh, grid)?.0)
        }
        Scheme::Gs => {
            let mesh = build_mesh(&m, &reduce_basis(&m)?)?;
            gauss_seidel_solve(&m, &mesh, grid, config.tol)
        }
        Scheme::Igs => br_baseline_solve(&m, grid, config.tol),
    }
}

/// Errors of every configured scheme against `‖z‖_M`.
///
/// `Ω*¹` is always the mask of the metric's reduced mesh, whichever scheme is run.
pub fn run_constant_metric_table(config: &ExperimentConfig) -> Result<Vec<TableRow>> {
    let m = config.metric_matrix()?;
    let grid = Grid::new(config.dim, config.n)?;
    let mesh = build_mesh(&m, &reduce_basis(&m)?)?;
    let mask = omega1_mask(&mesh, &grid)?;
    let fraction = mask_fraction(&grid, &mask);
    let hash = config.hash();
    let mut rows = Vec::new();
    for &scheme in &config.schemes {
        let start = Instant::now();
        let field = solve_scheme(config, scheme)?;
        let seconds = start.elapsed().as_secs_f64();
        rows.push(TableRow {
            config_hash: hash.clone(),
            scheme,
            dim: config.dim,
            n: config.n,
            linf: linf_error(&m, &field, None).0,
            linf_omega1: linf_error(&m, &field, Some(&mask)).0,
            mask_fraction: fraction,
            unreachable: unreachable_count(&field),
            seconds,
        });
    }
    Ok(rows)
}

/// Table CSV, wall times excluded.
pub fn write_table_csv<W: Write>(rows: &[TableRow], mut out: W) -> Result<()> {
    writeln!(out, "config_hash,scheme,dim,n,linf,linf_omega1,mask_fraction,unreachable")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:.16e},{:.16e},{:.16e},{}",
            r.config_hash, r.scheme, r.dim, r.n, r.linf, r.linf_omega1, r.mask_fraction, r.unreachable
        )?;
    }
    Ok(())
}

/// Wall time of each table row.
pub fn write_timing_csv<W: Write>(rows: &[TableRow], mut out: W) -> Result<()> {
    writeln!(out, "config_hash,scheme,seconds")?;
    for r in rows {
        writeln!(out, "{},{},{:.6}", r.config_hash, r.scheme, r.seconds)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_table_small() {
        let c = ExperimentConfig::parse("n = 20\nschemes = fm,gs,igs\n").unwrap();
        let rows = run_constant_metric_table(&c).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert_eq!(r.config_hash, c.hash());
            assert_eq!(r.unreachable, 0);
            assert!(r.linf_omega1 <= r.linf);
        }
        assert!((rows[0].linf - rows[1].linf).abs() < 1e-8);
        let mut a = Vec::new();
        write_table_csv(&rows, &mut a).unwrap();
        let mut b = Vec::new();
        write_table_csv(&run_constant_metric_table(&c).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn baseline_needs_two_dimensions() {
        let c = ExperimentConfig::parse("dim = 3\nn = 2\nschemes = igs\n").unwrap();
        assert!(run_constant_metric_table(&c).is_err());
    }
}
