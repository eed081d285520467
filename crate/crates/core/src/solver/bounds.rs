use super::{DistanceField, Grid};
use crate::error::{Error, Result};
use crate::mesh::{integer_inverse, mesh_metrics, MeshMetrics, ReducedMesh, Simplex};
use crate::metric::{LatticeVector, SpdMatrix, MAX_DIM};

/// `s(β) = Σ_{1≤k≤β} 1/k`
pub(crate) fn harmonic(beta: i64) -> f64 {
    (1..=beta).map(|k| 1.0 / k as f64).sum()
}

/// Writes lattice points as `-Σβᵢvᵢ` with integer `βᵢ ≥ 0` along a mesh simplex.
#[derive(Clone, Debug)]
pub struct Decomposer {
    dim: usize,
    simplices: Vec<Simplex>,
    inverses: Vec<[[i64; MAX_DIM]; MAX_DIM]>,
}

impl Decomposer {
    pub fn new(mesh: &ReducedMesh) -> Result<Self> {
        let inverses = mesh
            .simplices()
            .iter()
            .map(|s| {
                integer_inverse(s.nonzero())
                    .ok_or_else(|| Error::MeshDefect(format!("simplex {:?} is not unimodular", s.nonzero())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim: mesh.dim(), simplices: mesh.simplices().to_vec(), inverses })
    }

    /// First simplex (in mesh order) whose cone contains `-z`, with the coefficients.
    pub(crate) fn decompose_raw(&self, z: &[i64]) -> Option<(usize, [i64; MAX_DIM])> {
        let d = self.dim;
        'simplices: for (t, inv) in self.inverses.iter().enumerate() {
            let mut beta = [0i64; MAX_DIM];
            for i in 0..d {
                let b: i128 = (0..d).map(|j| -(inv[i][j] as i128) * z[j] as i128).sum();
                if b < 0 {
                    continue 'simplices;
                }
                beta[i] = i64::try_from(b).ok()?;
            }
            return Some((t, beta));
        }
        None
    }

    /// Simplex index and coefficients `β` with `z + Σβᵢvᵢ = 0`, checked in integers.
    pub fn decompose(&self, z: &LatticeVector) -> Result<(usize, Vec<i64>)> {
        if z.is_zero() {
            return Err(Error::InvalidArgument("the origin has no decomposition".into()));
        }
        if z.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: z.dim() });
        }
        let (t, beta) =
            self.decompose_raw(z.as_slice()).ok_or_else(|| Error::CoveringDefect(z.as_slice().to_vec()))?;
        let mut acc = z.as_slice().iter().map(|&x| x as i128).collect::<Vec<_>>();
        for (b, v) in beta.iter().zip(self.simplices[t].nonzero()) {
            for (a, x) in acc.iter_mut().zip(v.as_slice()) {
                *a += *b as i128 * *x as i128;
            }
        }
        if acc.iter().any(|&a| a != 0) {
            return Err(Error::MeshDefect(format!("inexact decomposition of {z}")));
        }
        Ok((t, beta[..self.dim].to_vec()))
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    /// `𝔡₊(z) = ‖z‖_M + sin²θ_M(T) Σ s(βᵢ)‖vᵢ‖_M`.
    pub fn super_solution(&self, m: &SpdMatrix, metrics: &MeshMetrics, z: &LatticeVector) -> Result<f64> {
        if z.is_zero() {
            return Ok(0.0);
        }
        let (t, beta) = self.decompose(z)?;
        let sin2 = metrics.per_simplex[t].sin2();
        let tail: f64 = beta
            .iter()
            .zip(self.simplices[t].nonzero())
            .map(|(&b, v)| harmonic(b) * m.lattice_norm(v))
            .sum();
        Ok(m.lattice_norm(z) + sin2 * tail)
    }
}

/// Simplex `T` with `-z ∈ ℝ₊T` and the integer coefficients `β ≥ 0` of `z + Σβᵢvᵢ = 0`.
///
/// On a cone boundary shared by several simplices, the first one in mesh order wins.
pub fn decompose_along_simplex(mesh: &ReducedMesh, z: &LatticeVector) -> Result<(Simplex, Vec<i64>)> {
    let dec = Decomposer::new(mesh)?;
    let (t, beta) = dec.decompose(z)?;
    Ok((mesh.simplices()[t].clone(), beta))
}

/// The explicit super-solution `𝔡₊(z)`.
pub fn super_solution_value(m: &SpdMatrix, mesh: &ReducedMesh, z: &LatticeVector) -> Result<f64> {
    Decomposer::new(mesh)?.super_solution(m, &mesh_metrics(m, mesh), z)
}

/// Nodes `z ≠ 0` whose whole decomposition box `{-Σβ'ᵢvᵢ : 0 ≤ β' ≤ β}` lies in the grid.
pub fn omega1_mask(mesh: &ReducedMesh, grid: &Grid) -> Result<Vec<bool>> {
    if mesh.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), found: mesh.dim() });
    }
    let dec = Decomposer::new(mesh)?;
    let d = grid.dim();
    let n = grid.half_width() as i128;
    let origin = grid.origin_index();
    let mut mask = vec![false; grid.len()];
    for (idx, slot) in mask.iter_mut().enumerate() {
        if idx == origin {
            continue;
        }
        let c = grid.coords(idx);
        let (t, beta) = dec.decompose_raw(&c[..d]).ok_or_else(|| Error::CoveringDefect(c[..d].to_vec()))?;
        let verts = dec.simplices[t].nonzero();
        // the grid is a box, so checking the corners of the parallelepiped suffices
        *slot = (0u32..(1 << d)).all(|subset| {
            (0..d).all(|k| {
                let x: i128 = (0..d)
                    .filter(|i| subset >> i & 1 == 1)
                    .map(|i| -(beta[i] as i128) * verts[i].as_slice()[k] as i128)
                    .sum();
                x.abs() <= n
            })
        });
    }
    Ok(mask)
}

/// Share of `Ω* = grid ∖ {0}` selected by `mask`.
pub fn mask_fraction(grid: &Grid, mask: &[bool]) -> f64 {
    let origin = grid.origin_index();
    let count = mask.iter().enumerate().filter(|&(i, &b)| b && i != origin).count();
    count as f64 / (grid.len() - 1) as f64
}

/// `max |𝔡(z) − ‖z‖_M|` over non-origin nodes with a finite value (restricted to `mask`
/// if given), and the grid index where it is attained.
///
/// Nodes left at `+∞` (every stencil neighbour outside the grid) are skipped; see
/// [`unreachable_count`].
pub fn linf_error(m: &SpdMatrix, field: &DistanceField, mask: Option<&[bool]>) -> (f64, Option<usize>) {
    let grid = field.grid();
    let origin = grid.origin_index();
    let mut worst = 0.0;
    let mut at = None;
    for (idx, &v) in field.values().iter().enumerate() {
        if idx == origin || v.is_infinite() || mask.is_some_and(|mk| !mk[idx]) {
            continue;
        }
        let e = (v - m.lattice_norm(&grid.node(idx))).abs();
        if at.is_none() || e > worst {
            worst = e;
            at = Some(idx);
        }
    }
    (worst, at)
}

/// Number of nodes whose value is `+∞`.
pub fn unreachable_count(field: &DistanceField) -> usize {
    field.values().iter().filter(|v| v.is_infinite()).count()
}

/// Outcome of [`theorem_a_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    /// `max |𝔡(z) − ‖z‖_M|` over the checked nodes.
    pub linf_error: f64,
    /// Node attaining `linf_error`.
    pub worst_node: Option<LatticeVector>,
    pub nodes_checked: usize,
    /// Nodes breaking either side of the bound.
    pub violations: usize,
    /// Smallest `bound − error` over the checked nodes.
    pub worst_slack: f64,
    /// `bound − error` per grid node, `NaN` where not checked.
    pub slack: Vec<f64>,
    /// Share of `Ω*` covered by the mask.
    pub mask_fraction: f64,
}

/// Checks `0 ≤ 𝔡(z) − ‖z‖_M ≤ d sin²θ_M(T) r_M(T) (1 + ln⁺(‖z‖_M / r_M(T)))` on every
/// masked node, where `-z ∈ ℝ₊T`, with an absolute slack of `1e-9 (1 + ‖z‖_M)`.
pub fn theorem_a_check(
    m: &SpdMatrix,
    mesh: &ReducedMesh,
    field: &DistanceField,
    metrics: &MeshMetrics,
    mask: &[bool],
) -> Result<ErrorReport> {
    let grid = field.grid();
    if mask.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: mask.len() });
    }
    let dec = Decomposer::new(mesh)?;
    let d = grid.dim();
    let origin = grid.origin_index();
    let mut report = ErrorReport {
        linf_error: 0.0,
        worst_node: None,
        nodes_checked: 0,
        violations: 0,
        worst_slack: f64::INFINITY,
        slack: vec![f64::NAN; grid.len()],
        mask_fraction: mask_fraction(grid, mask),
    };
    for idx in 0..grid.len() {
        if idx == origin || !mask[idx] {
            continue;
        }
        let c = grid.coords(idx);
        let z = grid.node(idx);
        let norm = m.lattice_norm(&z);
        let err = field.values()[idx] - norm;
        let (t, _) = dec.decompose_raw(&c[..d]).ok_or_else(|| Error::CoveringDefect(c[..d].to_vec()))?;
        let sm = metrics.per_simplex[t];
        let log_plus = (norm / sm.radius).ln().max(0.0);
        let bound = d as f64 * sm.sin2() * sm.radius * (1.0 + log_plus);
        let tol = 1e-9 * (1.0 + norm);
        let slack = bound - err;
        report.slack[idx] = slack;
        report.nodes_checked += 1;
        report.worst_slack = report.worst_slack.min(slack);
        if err < -tol || slack < -tol || err.is_nan() {
            report.violations += 1;
        }
        if report.worst_node.is_none() || err.abs() > report.linf_error {
            report.linf_error = err.abs();
            report.worst_node = Some(z);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{reduce_basis, ReducedBasis};
    use crate::mesh::build_mesh;
    use crate::metric::{spd_from_spectrum, Rotation};
    use crate::solver::fast_march;
    use approx::assert_relative_eq;

    fn lv(x: &[i64]) -> LatticeVector {
        LatticeVector::new(x).unwrap()
    }

    fn identity() -> (SpdMatrix, ReducedMesh) {
        let m = SpdMatrix::identity(2).unwrap();
        let b = ReducedBasis::from_vectors(&m, vec![lv(&[0, 1]), lv(&[1, 0])]).unwrap();
        let mesh = build_mesh(&m, &b).unwrap();
        (m, mesh)
    }

    #[test]
    fn harmonic_numbers() {
        assert_eq!(harmonic(0), 0.0);
        assert_eq!(harmonic(1), 1.0);
        assert_eq!(harmonic(2), 1.5);
    }

    #[test]
    fn decomposition_examples() {
        let (_, mesh) = identity();
        let (s, beta) = decompose_along_simplex(&mesh, &lv(&[-2, 0])).unwrap();
        let e1 = s.nonzero().iter().position(|v| *v == lv(&[1, 0])).unwrap();
        assert_eq!(beta[e1], 2);
        assert_eq!(beta.iter().sum::<i64>(), 2);
        assert!(decompose_along_simplex(&mesh, &LatticeVector::zero(2)).is_err());
    }

    #[test]
    fn decomposition_exhaustive_identity() {
        let (_, mesh) = identity();
        let dec = Decomposer::new(&mesh).unwrap();
        for x in -20..=20 {
            for y in -20..=20 {
                if x == 0 && y == 0 {
                    continue;
                }
                let z = lv(&[x, y]);
                let (t, beta) = dec.decompose(&z).unwrap();
                let mut s = [0i64; 2];
                for (b, v) in beta.iter().zip(dec.simplices()[t].nonzero()) {
                    assert!(*b >= 0);
                    s[0] += b * v.as_slice()[0];
                    s[1] += b * v.as_slice()[1];
                }
                assert_eq!(s, [-x, -y]);
            }
        }
    }

    #[test]
    fn boundary_tie_takes_first_simplex() {
        let (_, mesh) = identity();
        let dec = Decomposer::new(&mesh).unwrap();
        let z = lv(&[-2, 0]);
        let (t, _) = dec.decompose(&z).unwrap();
        let containing: Vec<usize> = mesh
            .simplices()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.nonzero().contains(&lv(&[1, 0])))
            .map(|(i, _)| i)
            .collect();
        assert_eq!(containing.len(), 2);
        assert_eq!(t, containing[0]);
    }

    #[test]
    fn super_solution_examples() {
        let (m, mesh) = identity();
        assert_eq!(super_solution_value(&m, &mesh, &LatticeVector::zero(2)).unwrap(), 0.0);
        assert_relative_eq!(super_solution_value(&m, &mesh, &lv(&[-2, 0])).unwrap(), 2.75, max_relative = 1e-15);
    }

    #[test]
    fn super_solution_dominates_anisotropic() {
        let m = spd_from_spectrum(&[0.1, 10.0], &Rotation::from_axis_2d([1.0, 0.6]).unwrap()).unwrap();
        let mesh = build_mesh(&m, &reduce_basis(&m).unwrap()).unwrap();
        let grid = Grid::new(2, 40).unwrap();
        let (f, _) = fast_march(&m, &mesh, grid).unwrap();
        let mask = omega1_mask(&mesh, &grid).unwrap();
        let dec = Decomposer::new(&mesh).unwrap();
        let metrics = mesh_metrics(&m, &mesh);
        for idx in 0..grid.len() {
            if mask[idx] {
                let z = grid.node(idx);
                let sup = dec.super_solution(&m, &metrics, &z).unwrap();
                assert!(f.values()[idx] <= sup * (1.0 + 1e-12), "{z}");
            }
        }
    }

    #[test]
    fn identity_mask_is_full_grid() {
        let (_, mesh) = identity();
        for n in [1, 3, 10] {
            let grid = Grid::new(2, n).unwrap();
            let mask = omega1_mask(&mesh, &grid).unwrap();
            assert_eq!(mask_fraction(&grid, &mask), 1.0);
        }
    }

    #[test]
    fn one_ring_mask() {
        let m = spd_from_spectrum(&[0.1, 10.0], &Rotation::from_axis_2d([1.0, 0.6]).unwrap()).unwrap();
        let mesh = build_mesh(&m, &reduce_basis(&m).unwrap()).unwrap();
        let grid = Grid::new(2, 1).unwrap();
        let mask = omega1_mask(&mesh, &grid).unwrap();
        let verts = mesh.vertices();
        for (idx, &b) in mask.iter().enumerate() {
            if b {
                assert!(verts.contains(&grid.node(idx).neg()));
            }
        }
    }

    #[test]
    fn error_bound_identity_full_grid() {
        let (m, mesh) = identity();
        let grid = Grid::new(2, 100).unwrap();
        let (f, _) = fast_march(&m, &mesh, grid).unwrap();
        let mask = vec![true; grid.len()];
        let report = theorem_a_check(&m, &mesh, &f, &mesh_metrics(&m, &mesh), &mask).unwrap();
        assert_eq!(report.violations, 0);
        for k in 1..=100 {
            assert_eq!(f.get(&lv(&[k, 0])), k as f64);
        }
    }
}
