//! Experiment harness: error tables, rotation sweeps, Haar averages and tail statistics.

mod cli;
mod config;
mod stats;
mod table;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::unit_ball_volume;
use crate::metric::{random_rotation, spd_from_spectrum, SpdMatrix};

pub use cli::cli_main;
pub use config::{ExperimentConfig, MetricSpec, Scheme};
pub use stats::{
    haar_average, rotation_sweep, tail_probability_check, theta_grid, write_sweep_csv, HaarStats, SweepRecord, TailReport,
    TailRow,
};
pub use table::{run_constant_metric_table, solve_scheme, write_table_csv, write_timing_csv, TableRow};

/// Generator for work item `index` of a run seeded with `seed`.
pub fn item_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `C(d) = 2ᵈ / ω_d`
pub fn c_d(d: usize) -> f64 {
    2f64.powi(d as i32) / unit_ball_volume(d)
}

/// `C′(d) = 2d·3^{d−1}·C(d)`
pub fn c_prime_d(d: usize) -> f64 {
    2.0 * d as f64 * 3f64.powi(d as i32 - 1) * c_d(d)
}

/// Random metric with `det M = 1` and anisotropy ratio `κ` drawn log-uniformly from
/// `[1, kappa_max]`.
///
/// The extreme eigenvalues are `κ^{-1}` and `κ` (up to the det normalization), the
/// others log-uniform in between; the eigenbasis is a Haar rotation.
pub fn random_spd<R: Rng + ?Sized>(dim: usize, kappa_max: f64, rng: &mut R) -> Result<SpdMatrix> {
    if !(kappa_max >= 1.0) {
        return Err(Error::InvalidArgument(format!("kappa_max must be ≥ 1, got {kappa_max}")));
    }
    let kappa = kappa_max.powf(rng.random::<f64>());
    random_spd_with_kappa(dim, kappa, rng)
}

/// Random metric with `det M = 1`, anisotropy ratio exactly `kappa` and Haar eigenbasis.
pub fn random_spd_with_kappa<R: Rng + ?Sized>(dim: usize, kappa: f64, rng: &mut R) -> Result<SpdMatrix> {
    if !(kappa >= 1.0) {
        return Err(Error::InvalidArgument(format!("kappa must be ≥ 1, got {kappa}")));
    }
    let r = random_rotation(dim, rng)?;
    let k2 = kappa * kappa;
    let mut logs: Vec<f64> = vec![0.0; dim];
    logs[dim - 1] = k2.ln();
    for l in logs.iter_mut().take(dim - 1).skip(1) {
        *l = rng.random::<f64>() * k2.ln();
    }
    let mean = logs.iter().sum::<f64>() / dim as f64;
    let eigs: Vec<f64> = logs.iter().map(|l| (l - mean).exp()).collect();
    spd_from_spectrum(&eigs, &r)
}

/// Metric with eigenvalues geometrically spaced from `1/κ` to `κ`, diagonal in the
/// canonical basis.
pub fn kappa_spectrum(dim: usize, kappa: f64) -> Vec<f64> {
    if dim == 1 {
        return vec![1.0];
    }
    (0..dim).map(|i| kappa.powf(2.0 * i as f64 / (dim - 1) as f64 - 1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constants() {
        assert_relative_eq!(c_d(2), 4.0 / std::f64::consts::PI, max_relative = 1e-15);
        assert_relative_eq!(c_prime_d(2) * 0.25, 12.0 / std::f64::consts::PI, max_relative = 1e-15);
        assert!((c_prime_d(2) * 0.25 - 3.82).abs() < 0.01);
    }

    #[test]
    fn random_metrics_have_unit_det_and_requested_ratio() {
        let mut rng = item_rng(1, 0);
        for d in 2..=4 {
            for _ in 0..20 {
                let k = 10f64.powf(rng.random_range(0.0..4.0));
                let m = random_spd_with_kappa(d, k, &mut rng).unwrap();
                assert_relative_eq!(m.det(), 1.0, max_relative = 1e-6);
                assert_relative_eq!(m.anisotropy_ratio().unwrap(), k, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn item_streams_are_independent_and_reproducible() {
        let a: u64 = item_rng(5, 1).random();
        let b: u64 = item_rng(5, 2).random();
        assert_ne!(a, b);
        assert_eq!(a, item_rng(5, 1).random::<u64>());
    }

    #[test]
    fn spectrum_spacing() {
        assert_eq!(kappa_spectrum(2, 10.0), vec![0.1, 10.0]);
        let s = kappa_spectrum(3, 100.0);
        assert_relative_eq!(s[0], 0.01);
        assert_relative_eq!(s[1], 1.0);
        assert_relative_eq!(s[2], 100.0);
    }
}
