//! Discrete eikonal solvers on the box grid `{-n,…,n}ᵈ` seeded at the origin.

mod bounds;
mod fast_march;
mod hopf_lax;
mod sweep;

use std::io::Write;

use crate::error::{Error, Result};
use crate::metric::{check_dim, LatticeVector, SpdMatrix, MAX_DIM};

pub use bounds::{
    decompose_along_simplex, linf_error, unreachable_count, mask_fraction, omega1_mask, super_solution_value,
    theorem_a_check, Decomposer, ErrorReport,
};
pub use fast_march::{fast_march, fast_march_with};
pub use hopf_lax::{hopf_lax_update, BaselineStencil, HopfLax};
pub use sweep::{br_baseline_solve, br_baseline_solve_with, gauss_seidel_solve, gauss_seidel_with, SWEEP_CAP};

/// The exact solution `𝔲_M(z) = ‖z‖_M`.
pub fn exact_distance(m: &SpdMatrix, z: &LatticeVector) -> f64 {
    m.lattice_norm(z)
}

/// Nodes `z ∈ ℤᵈ` with `|zᵢ| ≤ n`, indexed lexicographically (first coordinate slowest).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    dim: usize,
    n: i64,
    side: usize,
    strides: [usize; MAX_DIM],
    len: usize,
}

impl Grid {
    pub fn new(dim: usize, half_width: i64) -> Result<Self> {
        check_dim(dim)?;
        if half_width < 1 {
            return Err(Error::InvalidArgument(format!("grid half-width must be ≥ 1, got {half_width}")));
        }
        let side = usize::try_from(2 * half_width + 1).map_err(|_| Error::Overflow)?;
        let mut strides = [0; MAX_DIM];
        let mut len = 1usize;
        for i in (0..dim).rev() {
            strides[i] = len;
            len = len.checked_mul(side).ok_or(Error::Overflow)?;
        }
        Ok(Self { dim, n: half_width, side, strides, len })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> i64 {
        self.n
    }

    /// Number of nodes, origin included.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn origin_index(&self) -> usize {
        (self.len - 1) / 2
    }

    pub fn contains(&self, coords: &[i64]) -> bool {
        coords.iter().all(|c| c.abs() <= self.n)
    }

    /// Linear index of an in-grid point given by its coordinates.
    pub fn index_of(&self, coords: &[i64]) -> Option<usize> {
        if coords.len() != self.dim || !self.contains(coords) {
            return None;
        }
        Some(coords.iter().zip(&self.strides).map(|(c, s)| (c + self.n) as usize * s).sum())
    }

    pub fn index(&self, z: &LatticeVector) -> Option<usize> {
        self.index_of(z.as_slice())
    }

    pub fn coords(&self, idx: usize) -> [i64; MAX_DIM] {
        let mut c = [0i64; MAX_DIM];
        for i in 0..self.dim {
            c[i] = ((idx / self.strides[i]) % self.side) as i64 - self.n;
        }
        c
    }

    pub fn node(&self, idx: usize) -> LatticeVector {
        LatticeVector::new(&self.coords(idx)[..self.dim]).expect("grid coordinates are in range")
    }

    pub(crate) fn strides(&self) -> &[usize; MAX_DIM] {
        &self.strides
    }
}

/// A value `𝔡(z) ∈ [0,∞]` for every grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    grid: Grid,
    values: Vec<f64>,
}

impl DistanceField {
    /// `+∞` everywhere except `0` at the origin.
    pub fn initial(grid: Grid) -> Self {
        let mut values = vec![f64::INFINITY; grid.len()];
        values[grid.origin_index()] = 0.0;
        Self { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidArgument("field values must be in [0, ∞]".into()));
        }
        if values[grid.origin_index()] != 0.0 {
            return Err(Error::InvalidArgument("field must vanish at the origin".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Value at `z`, `+∞` outside the grid.
    pub fn get(&self, z: &LatticeVector) -> f64 {
        self.grid.index(z).map_or(f64::INFINITY, |i| self.values[i])
    }

    /// Largest absolute difference between two fields on the same grid.
    pub fn max_difference(&self, other: &DistanceField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, |acc, x| if x.is_nan() { f64::INFINITY } else { acc.max(x) })
    }

    /// CSV with header `x,y[,z,w],value`, nodes in lexicographic order, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        const NAMES: [&str; MAX_DIM] = ["x", "y", "z", "w"];
        let d = self.grid.dim;
        writeln!(out, "{},value", NAMES[..d].join(","))?;
        for (idx, v) in self.values.iter().enumerate() {
            let c = self.grid.coords(idx);
            for x in &c[..d] {
                write!(out, "{x},")?;
            }
            if v.is_infinite() {
                writeln!(out, "inf")?;
            } else {
                writeln!(out, "{v:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Bookkeeping of a fast marching run.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SolveTrace {
    /// Grid indices in acceptance order.
    pub order: Vec<usize>,
    /// Value of each node at the time it was accepted.
    pub accepted_values: Vec<f64>,
    /// Number of times `Λ` was re-evaluated at each node.
    pub recomputations: Vec<u32>,
}

impl SolveTrace {
    pub fn is_monotone(&self) -> bool {
        self.accepted_values.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn is_injective(&self, grid_len: usize) -> bool {
        let mut seen = vec![false; grid_len];
        self.order.iter().all(|&i| !std::mem::replace(&mut seen[i], true))
    }
}
