use std::io::Write;

use super::{c_prime_d, item_rng};
use crate::error::{Error, Result};
use crate::lattice::reduce_basis;
use crate::metric::{random_rotation, spd_from_spectrum, Rotation, SpdMatrix};

/// One point of the rotation sweep `θ ↦ λ₂(R_θᵀ D R_θ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRecord {
    pub theta: f64,
    pub kappa: f64,
    pub lambda_d: f64,
    /// `λ_d / det(M)^{1/2d}`.
    pub normalized: f64,
}

/// `steps` equally spaced angles covering `[0, π/4]`, both ends included.
pub fn theta_grid(steps: usize) -> Vec<f64> {
    let top = std::f64::consts::FRAC_PI_4;
    match steps {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..steps).map(|i| top * i as f64 / (steps - 1) as f64).collect(),
    }
}

/// `λ₂` of `D = diag(κ, 1/κ)` rotated by each angle.
pub fn rotation_sweep(kappa: f64, thetas: &[f64]) -> Result<Vec<SweepRecord>> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("kappa must be ≥ 1, got {kappa}")));
    }
    thetas
        .iter()
        .map(|&theta| {
            let m = spd_from_spectrum(&[kappa, 1.0 / kappa], &Rotation::planar(theta))?;
            let lambda_d = reduce_basis(&m)?.lambda_d();
            Ok(SweepRecord { theta, kappa, lambda_d, normalized: lambda_d / m.det().powf(0.25) })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], mut out: W) -> Result<()> {
    writeln!(out, "theta,kappa,lambda_d,normalized")?;
    for r in records {
        writeln!(out, "{:.16e},{},{:.16e},{:.16e}", r.theta, r.kappa, r.lambda_d, r.normalized)?;
    }
    Ok(())
}

/// Monte-Carlo estimate of the Haar average of `λ_d(RᵀMR)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HaarStats {
    pub samples: usize,
    pub mean: f64,
    pub std_error: f64,
    /// `mean / det(M)^{1/2d}`.
    pub normalized: f64,
}

/// Haar average of `λ_d(RᵀMR)`; sample `i` uses stream `i` of `seed`.
pub fn haar_average(m: &SpdMatrix, samples: usize, seed: u64) -> Result<HaarStats> {
    if samples < 100 {
        return Err(Error::InvalidArgument(format!("at least 100 samples are needed, got {samples}")));
    }
    let d = m.dim();
    let mut values = Vec::with_capacity(samples);
    for i in 0..samples {
        let r = random_rotation(d, &mut item_rng(seed, i as u64))?;
        values.push(reduce_basis(&m.conjugate(&r)?)?.lambda_d());
    }
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(HaarStats {
        samples,
        mean,
        std_error: (var / n).sqrt(),
        normalized: mean / m.det().powf(0.5 / d as f64),
    })
}

/// Result of [`tail_probability_check`] at one threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailRow {
    pub delta: f64,
    /// Empirical `𝒫(λ₁(RᵀMR) ≤ δ)`.
    pub frequency: f64,
    /// Binomial standard error of `frequency`.
    pub std_error: f64,
    /// `C′(d) δᵈ`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    pub dim: usize,
    pub samples: usize,
    pub rows: Vec<TailRow>,
}

impl TailReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "dim,samples,delta,frequency,std_error,bound,pass")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:.16e},{:.16e},{:.16e},{}",
                self.dim, self.samples, r.delta, r.frequency, r.std_error, r.bound, r.pass
            )?;
        }
        Ok(())
    }
}

/// Compares the empirical tail of `λ₁(RᵀMR)` with `C′(d) δᵈ` plus three standard errors.
pub fn tail_probability_check(m: &SpdMatrix, deltas: &[f64], samples: usize, seed: u64) -> Result<TailReport> {
    let det = m.det();
    if (det - 1.0).abs() > 1e-9 {
        return Err(Error::DetNotOne(det));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be ≥ 1".into()));
    }
    let d = m.dim();
    let mut lambda1 = Vec::with_capacity(samples);
    for i in 0..samples {
        let r = random_rotation(d, &mut item_rng(seed, i as u64))?;
        lambda1.push(reduce_basis(&m.conjugate(&r)?)?.norms()[0]);
    }
    let n = samples as f64;
    let rows = deltas
        .iter()
        .map(|&delta| {
            let p = lambda1.iter().filter(|&&l| l <= delta).count() as f64 / n;
            let std_error = (p * (1.0 - p) / n).sqrt();
            let bound = c_prime_d(d) * delta.powi(d as i32);
            TailRow { delta, frequency: p, std_error, bound, pass: p <= bound + 3.0 * std_error }
        })
        .collect();
    Ok(TailReport { dim: d, samples, rows })
}
