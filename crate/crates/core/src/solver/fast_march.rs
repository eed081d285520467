use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{DistanceField, Grid, HopfLax, SolveTrace};
use crate::error::Result;
use crate::mesh::ReducedMesh;
use crate::metric::{SpdMatrix, MAX_DIM};

/// Heap entry ordered by smallest value first, then smallest grid index.
#[derive(Clone, Copy, PartialEq)]
struct Entry {
    value: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.value.total_cmp(&self.value).then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Solves `𝔡 = Λ(𝔡,·)` in one pass with the mesh's Hopf-Lax operator.
pub fn fast_march(m: &SpdMatrix, mesh: &ReducedMesh, grid: Grid) -> Result<(DistanceField, SolveTrace)> {
    let op = HopfLax::new(m, mesh)?;
    Ok(fast_march_with(&op, grid))
}

/// Fast marching with a prebuilt operator.
///
/// When a node is accepted, only the nodes `z` with `z + v` equal to it are updated, and
/// only through faces containing `v`; values of non-accepted nodes are never read.
pub fn fast_march_with(op: &HopfLax, grid: Grid) -> (DistanceField, SolveTrace) {
    let len = grid.len();
    let nv = op.vertices().len();
    let mut field = DistanceField::initial(grid);
    let mut accepted = vec![false; len];
    let mut trace = SolveTrace {
        order: Vec::with_capacity(len),
        accepted_values: Vec::with_capacity(len),
        recomputations: vec![0; len],
    };
    let mut heap = BinaryHeap::new();
    heap.push(Entry { value: 0.0, idx: grid.origin_index() });

    let lin = op.linear_offsets(&grid);
    let reach = op.reach();
    let n = grid.half_width();
    let d = grid.dim();
    let verts = op.vertices();

    while let Some(Entry { value, idx }) = heap.pop() {
        if accepted[idx] || value > field.values()[idx] {
            continue;
        }
        accepted[idx] = true;
        trace.order.push(idx);
        trace.accepted_values.push(value);

        let ca = grid.coords(idx);
        for j in 0..nv {
            // predecessor z = accepted - v_j
            let vj = verts[j].as_slice();
            let mut cz = [0i64; MAX_DIM];
            let mut inside = true;
            let mut interior = true;
            for i in 0..d {
                cz[i] = ca[i] - vj[i];
                inside &= cz[i].abs() <= n;
                interior &= cz[i].abs() + reach <= n;
            }
            if !inside {
                continue;
            }
            let z = (idx as isize - lin[j]) as usize;
            if accepted[z] {
                continue;
            }
            trace.recomputations[z] += 1;
            let values = field.values();
            let current = values[z];
            let get = |k: usize| {
                let y = if interior {
                    (z as isize + lin[k]) as usize
                } else {
                    let vk = verts[k].as_slice();
                    if (0..d).any(|i| (cz[i] + vk[i]).abs() > n) {
                        return f64::INFINITY;
                    }
                    (z as isize + lin[k]) as usize
                };
                if accepted[y] {
                    values[y]
                } else {
                    f64::INFINITY
                }
            };
            let w = op.minimize_through(j, get, current);
            if w < current {
                field.values_mut()[z] = w;
                heap.push(Entry { value: w, idx: z });
            }
        }
    }
    (field, trace)
}
