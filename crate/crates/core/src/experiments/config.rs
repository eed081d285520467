use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::kappa_spectrum;
use crate::error::{Error, Result};
use crate::metric::{check_dim, spd_from_spectrum, Rotation, SpdMatrix};

/// Solver selection for the error table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Fast marching on the reduced mesh.
    Fm,
    /// Gauss-Seidel on the reduced mesh.
    Gs,
    /// Iterative baseline on a fixed grid stencil.
    Igs,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Fm => "fm",
            Scheme::Gs => "gs",
            Scheme::Igs => "igs",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "fm" => Ok(Scheme::Fm),
            "gs" => Ok(Scheme::Gs),
            "igs" => Ok(Scheme::Igs),
            other => Err(format!("unknown scheme `{other}` (expected fm, gs or igs)")),
        }
    }
}

/// How the metric is specified.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricSpec {
    /// Eigenvalues geometrically spaced from `1/κ` to `κ`.
    Kappa(f64),
    /// Explicit eigenvalues, smallest-first order not required.
    Eigenvalues(Vec<f64>),
    /// Explicit symmetric matrix, one row per entry.
    Matrix(Vec<Vec<f64>>),
}

/// Parameters shared by every experiment.
///
/// Text form: one `key = value` per line, `#` starts a comment, lists are comma
/// separated and matrix rows are separated by `;`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dim: usize,
    /// Grid half-width.
    pub n: i64,
    pub metric: MetricSpec,
    /// In 2D, eigenvector of the first eigenvalue.
    pub axis: Option<[f64; 2]>,
    pub schemes: Vec<Scheme>,
    /// Gauss-Seidel stopping tolerance.
    pub tol: f64,
    /// Anisotropy ratios for the rotation sweep and the Haar average.
    pub kappas: Vec<f64>,
    /// Number of angles in `[0, π/4]` for the rotation sweep.
    pub theta_steps: usize,
    /// Monte-Carlo sample count.
    pub samples: usize,
    /// Thresholds for the tail probability check.
    pub deltas: Vec<f64>,
    /// Number of random metrics for `verify-mesh`.
    pub random: usize,
    /// Largest anisotropy ratio of the random metrics.
    pub kappa_max: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            n: 100,
            metric: MetricSpec::Kappa(1.0),
            axis: None,
            schemes: vec![Scheme::Fm, Scheme::Gs, Scheme::Igs],
            tol: 1e-10,
            kappas: vec![10.0, 100.0, 1000.0],
            theta_steps: 1000,
            samples: 2000,
            deltas: vec![0.1, 0.2, 0.5],
            random: 100,
            kappa_max: 1e6,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.trim().parse().map_err(|_| format!("cannot parse `{}`", v.trim()))
}

fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    let items: Vec<f64> = v.split(',').map(parse_num).collect::<std::result::Result<_, _>>()?;
    if items.iter().any(|x| !x.is_finite()) {
        return Err(format!("non-finite entry in `{}`", v.trim()));
    }
    Ok(items)
}

fn require(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "dim" => {
                let d: usize = parse_num(value)?;
                require((2..=4).contains(&d), format!("dim must be 2, 3 or 4, got {d}"))?;
                self.dim = d;
            }
            "n" => {
                let n: i64 = parse_num(value)?;
                require(n >= 1, format!("n must be ≥ 1, got {n}"))?;
                self.n = n;
            }
            "kappa" => {
                let k: f64 = parse_num(value)?;
                require(k >= 1.0 && k.is_finite(), format!("kappa must be ≥ 1, got {k}"))?;
                self.metric = MetricSpec::Kappa(k);
            }
            "eigenvalues" => {
                let e = parse_list(value)?;
                require(e.iter().all(|&x| x > 0.0), "eigenvalues must be positive")?;
                self.metric = MetricSpec::Eigenvalues(e);
            }
            "matrix" => {
                let rows = value.split(';').map(parse_list).collect::<std::result::Result<Vec<_>, _>>()?;
                self.metric = MetricSpec::Matrix(rows);
            }
            "axis" => {
                let a = parse_list(value)?;
                require(a.len() == 2, "axis must have two components")?;
                require(a[0] != 0.0 || a[1] != 0.0, "axis must be non-zero")?;
                self.axis = Some([a[0], a[1]]);
            }
            "schemes" | "scheme" => {
                let s = value.split(',').map(str::parse).collect::<std::result::Result<Vec<Scheme>, _>>()?;
                self.schemes = s;
            }
            "tol" => {
                let t: f64 = parse_num(value)?;
                require(t > 0.0, format!("tol must be positive, got {t}"))?;
                self.tol = t;
            }
            "kappas" => {
                let k = parse_list(value)?;
                require(k.iter().all(|&x| x >= 1.0), "every kappa must be ≥ 1")?;
                self.kappas = k;
            }
            "theta_steps" => {
                let s: usize = parse_num(value)?;
                require(s >= 1, "theta_steps must be ≥ 1")?;
                self.theta_steps = s;
            }
            "samples" => {
                let s: usize = parse_num(value)?;
                require(s >= 1, "samples must be ≥ 1")?;
                self.samples = s;
            }
            "deltas" => {
                let d = parse_list(value)?;
                require(d.iter().all(|&x| x > 0.0), "deltas must be positive")?;
                self.deltas = d;
            }
            "random" => {
                let r: usize = parse_num(value)?;
                require(r >= 1, "random must be ≥ 1")?;
                self.random = r;
            }
            "kappa_max" => {
                let k: f64 = parse_num(value)?;
                require(k >= 1.0 && k.is_finite(), format!("kappa_max must be ≥ 1, got {k}"))?;
                self.kappa_max = k;
            }
            "seed" => self.seed = parse_num(value)?,
            "out" => {
                require(!value.trim().is_empty(), "out must not be empty")?;
                self.out = PathBuf::from(value.trim());
            }
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen: Vec<(String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) =
                content.split_once('=').ok_or_else(|| Error::Config { line, message: "expected `key = value`".into() })?;
            let key = key.trim();
            if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
                return Err(Error::Config { line, message: format!("duplicate key `{key}` (first set on line {first})") });
            }
            seen.push((key.to_string(), line));
            self.set(key, value).map_err(|message| Error::Config { line, message })?;
        }
        Ok(())
    }

    /// Parses a config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Every field except `out` in `key = value` form, keys sorted.
    pub fn canonical(&self) -> String {
        let metric = match &self.metric {
            MetricSpec::Kappa(k) => format!("kappa = {k}"),
            MetricSpec::Eigenvalues(e) => format!("eigenvalues = {}", join(e)),
            MetricSpec::Matrix(rows) => {
                format!("matrix = {}", rows.iter().map(|r| join(r)).collect::<Vec<_>>().join(";"))
            }
        };
        let axis = self.axis.map_or("none".to_string(), |a| join(&a));
        let schemes = self.schemes.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(",");
        let mut lines = vec![
            format!("axis = {axis}"),
            format!("deltas = {}", join(&self.deltas)),
            format!("dim = {}", self.dim),
            format!("kappa_max = {}", self.kappa_max),
            format!("kappas = {}", join(&self.kappas)),
            metric,
            format!("n = {}", self.n),
            format!("random = {}", self.random),
            format!("samples = {}", self.samples),
            format!("schemes = {schemes}"),
            format!("seed = {}", self.seed),
            format!("theta_steps = {}", self.theta_steps),
            format!("tol = {}", self.tol),
        ];
        lines.sort();
        lines.join("\n") + "\n"
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// The configured metric.
    pub fn metric_matrix(&self) -> Result<SpdMatrix> {
        check_dim(self.dim)?;
        let eigs = match &self.metric {
            MetricSpec::Matrix(rows) => {
                if self.axis.is_some() {
                    return Err(Error::InvalidArgument("axis cannot be combined with an explicit matrix".into()));
                }
                if rows.len() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, found: rows.len() });
                }
                return SpdMatrix::from_rows(rows);
            }
            MetricSpec::Kappa(k) => kappa_spectrum(self.dim, *k),
            MetricSpec::Eigenvalues(e) => e.clone(),
        };
        if eigs.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: eigs.len() });
        }
        let r = match self.axis {
            None => Rotation::identity(self.dim)?,
            Some(a) if self.dim == 2 => Rotation::from_axis_2d(a)?,
            Some(_) => return Err(Error::InvalidArgument("axis is only supported in dimension 2".into())),
        };
        spd_from_spectrum(&eigs, &r)
    }
}
