use super::{BaselineStencil, DistanceField, Grid, HopfLax};
use crate::error::{Error, Result};
use crate::mesh::ReducedMesh;
use crate::metric::{SpdMatrix, MAX_DIM};

/// Maximum number of Gauss-Seidel sweeps before giving up.
pub const SWEEP_CAP: usize = 10_000;

/// Iterates `𝔡 ← Λ(𝔡,·)` in place until a sweep changes no value by more than `tol`.
pub fn gauss_seidel_solve(m: &SpdMatrix, mesh: &ReducedMesh, grid: Grid, tol: f64) -> Result<DistanceField> {
    let op = HopfLax::new(m, mesh)?;
    Ok(gauss_seidel_with(&op, grid, tol)?.0)
}

/// Iterative baseline: Gauss-Seidel on the triangulated 6-neighbour grid stencil, with
/// piecewise-linear interpolation along the ring and no causality filter (2D only).
pub fn br_baseline_solve(m: &SpdMatrix, grid: Grid, tol: f64) -> Result<DistanceField> {
    br_baseline_solve_with(m, grid, tol, BaselineStencil::Triangulated)
}

/// [`br_baseline_solve`] with a choice of grid stencil.
pub fn br_baseline_solve_with(m: &SpdMatrix, grid: Grid, tol: f64, stencil: BaselineStencil) -> Result<DistanceField> {
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDim(grid.dim()));
    }
    let op = HopfLax::baseline(m, stencil)?;
    Ok(gauss_seidel_with(&op, grid, tol)?.0)
}

/// Gauss-Seidel with a prebuilt operator; also returns the number of sweeps.
///
/// Sweeps cycle through `2ᵈ` orderings, one per sign pattern `σ`, visiting nodes by
/// decreasing `⟨σ, c(z)⟩` where `c(z)` are the coordinates of `z` in the mesh basis. A
/// node is skipped when none of its stencil neighbours changed since it was last
/// evaluated.
pub fn gauss_seidel_with(op: &HopfLax, grid: Grid, tol: f64) -> Result<(DistanceField, usize)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let d = grid.dim();
    let len = grid.len();
    let origin = grid.origin_index();
    let nv = op.vertices().len();
    let orders = sweep_orders(op, &grid)?;
    let mut field = DistanceField::initial(grid);
    let mut changed_at = vec![0u64; len];
    let mut evaluated_at = vec![0u64; len];
    changed_at[origin] = 1;
    let mut tick = 1u64;
    let mut nb = vec![0usize; nv];
    let mut vals = vec![0.0; nv];
    let mut last_change = f64::INFINITY;

    for sweep in 0..SWEEP_CAP {
        let mut change: f64 = 0.0;
        for &idx in &orders[sweep % (1 << d)] {
            let idx = idx as usize;
            if idx == origin {
                continue;
            }
            op.neighbours(&grid, idx, &mut nb);
            let fresh = nb.iter().any(|&y| y != usize::MAX && changed_at[y] >= evaluated_at[idx]);
            if !fresh {
                continue;
            }
            tick += 1;
            evaluated_at[idx] = tick;
            let values = field.values();
            for (x, &y) in vals.iter_mut().zip(&nb) {
                *x = if y == usize::MAX { f64::INFINITY } else { values[y] };
            }
            let w = op.minimize(&vals);
            let old = values[idx];
            if w < old {
                change = change.max(old - w);
                field.values_mut()[idx] = w;
                changed_at[idx] = tick;
            }
        }
        last_change = change;
        if change <= tol {
            return Ok((field, sweep + 1));
        }
    }
    Err(Error::NonConvergence { sweeps: SWEEP_CAP, last_change })
}

fn sweep_orders(op: &HopfLax, grid: &Grid) -> Result<Vec<Vec<u32>>> {
    let d = grid.dim();
    let len = u32::try_from(grid.len()).map_err(|_| Error::Overflow)?;
    let coords: Vec<[i64; MAX_DIM]> = (0..grid.len()).map(|i| op.frame_coords(&grid.coords(i)[..d])).collect();
    Ok((0..1usize << d)
        .map(|pattern| {
            let key = |i: u32| -> i64 {
                let c = &coords[i as usize];
                (0..d).map(|k| if pattern >> k & 1 == 1 { -c[k] } else { c[k] }).sum()
            };
            let mut order: Vec<u32> = (0..len).collect();
            order.sort_by_key(|&i| (std::cmp::Reverse(key(i)), i));
            order
        })
        .collect())
}
