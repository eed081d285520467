use std::collections::BTreeSet;

use super::{DistanceField, Grid};
use crate::error::{Error, Result};
use crate::mesh::{integer_inverse, ReducedMesh, Simplex};
use crate::metric::{LatticeVector, SpdMatrix, MAX_DIM};

/// A face `conv(v₁,…,v_k)` of a stencil simplex, with the Gram data needed to minimize
/// `‖Σαᵢvᵢ‖_M + Σαᵢdᵢ` over the unit simplex in closed form.
#[derive(Clone, Debug)]
struct Face {
    k: usize,
    verts: [u16; MAX_DIM],
    ginv: [[f64; MAX_DIM]; MAX_DIM],
    /// `G⁻¹1`
    q: [f64; MAX_DIM],
    /// `1ᵀG⁻¹1`
    a: f64,
    /// `G⁻¹ − qqᵀ/a`, which annihilates `1`
    p: [[f64; MAX_DIM]; MAX_DIM],
    /// `‖v₁‖_M` for vertex faces
    norm: f64,
    /// `1/√a`, a lower bound of `‖Σαᵢvᵢ‖_M` on the face
    floor: f64,
}

fn invert(g: &[[f64; MAX_DIM]; MAX_DIM], k: usize) -> Option<[[f64; MAX_DIM]; MAX_DIM]> {
    let mut a = [[0.0; 2 * MAX_DIM]; MAX_DIM];
    for i in 0..k {
        a[i][..k].copy_from_slice(&g[i][..k]);
        a[i][k + i] = 1.0;
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() <= 1e-14 * g[col][col].abs() {
            return None;
        }
        a.swap(piv, col);
        let p = a[col][col];
        for x in a[col].iter_mut() {
            *x /= p;
        }
        for row in 0..k {
            if row != col {
                let f = a[row][col];
                for c in 0..2 * k {
                    a[row][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut inv = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..k {
        inv[i][..k].copy_from_slice(&a[i][k..2 * k]);
    }
    // symmetrize
    for i in 0..k {
        for j in 0..i {
            let s = 0.5 * (inv[i][j] + inv[j][i]);
            inv[i][j] = s;
            inv[j][i] = s;
        }
    }
    Some(inv)
}

impl Face {
    fn new(m: &SpdMatrix, verts: &[u16], vectors: &[LatticeVector]) -> Option<Self> {
        let k = verts.len();
        let mut g = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..k {
            for j in 0..k {
                g[i][j] = m.lattice_dot(&vectors[verts[i] as usize], &vectors[verts[j] as usize]);
            }
        }
        let ginv = invert(&g, k)?;
        let mut q = [0.0; MAX_DIM];
        for i in 0..k {
            q[i] = ginv[i][..k].iter().sum();
        }
        let a: f64 = q[..k].iter().sum();
        if !(a > 0.0) {
            return None;
        }
        let mut p = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..k {
            for j in 0..k {
                p[i][j] = ginv[i][j] - q[i] * q[j] / a;
            }
        }
        let mut vs = [0u16; MAX_DIM];
        vs[..k].copy_from_slice(verts);
        Some(Self { k, verts: vs, ginv, q, a, p, norm: g[0][0].sqrt(), floor: 1.0 / a.sqrt() })
    }

    /// Minimum of `‖Σαᵢvᵢ‖ + Σαᵢdᵢ` over the relative interior of the face, if the
    /// stationary point lies there (and, when `causal`, exceeds every `dᵢ`).
    #[inline]
    fn solve(&self, d: &[f64; MAX_DIM], causal: bool) -> Option<f64> {
        let k = self.k;
        if k == 1 {
            return Some(d[0] + self.norm);
        }
        let mut lo = d[0];
        let mut hi = d[0];
        for &x in &d[1..k] {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        let mut e = [0.0; MAX_DIM];
        for i in 0..k {
            e[i] = d[i] - lo;
        }
        let mut pe = 0.0;
        let mut qe = 0.0;
        for i in 0..k {
            let mut row = 0.0;
            for j in 0..k {
                row += self.p[i][j] * e[j];
            }
            pe += row * e[i];
            qe += self.q[i] * e[i];
        }
        let disc = self.a * (1.0 - pe);
        if !(disc > 0.0) {
            return None;
        }
        let w = (qe + disc.sqrt()) / self.a;
        if causal && w < hi - lo {
            return None;
        }
        for i in 0..k {
            let mut ge = 0.0;
            for j in 0..k {
                ge += self.ginv[i][j] * e[j];
            }
            if w * self.q[i] - ge < 0.0 {
                return None;
            }
        }
        Some(lo + w)
    }
}

/// Grid stencils for the iterative baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BaselineStencil {
    /// The 6 neighbours of the P1 triangulation splitting each cell along `(1,-1)`.
    #[default]
    Triangulated,
    /// The 8-neighbour square ring.
    Ring8,
}

/// The Hopf-Lax operator `Λ(𝔡,z)` of a stencil, with every face precomputed.
#[derive(Clone, Debug)]
pub struct HopfLax {
    dim: usize,
    vertices: Vec<LatticeVector>,
    offsets: Vec<[i64; MAX_DIM]>,
    faces: Vec<Face>,
    faces_by_vertex: Vec<Vec<u32>>,
    causal: bool,
    /// Rows are the coordinate functionals of the basis that orders Gauss-Seidel sweeps.
    frame: [[i64; MAX_DIM]; MAX_DIM],
}

impl HopfLax {
    /// Operator of an M-reduced mesh, with the causality filter enabled.
    pub fn new(m: &SpdMatrix, mesh: &ReducedMesh) -> Result<Self> {
        let mut op = Self::from_simplices(m, mesh.simplices(), true)?;
        if let Some(inv) = integer_inverse(mesh.basis().vectors()) {
            op.frame = inv;
        }
        Ok(op)
    }

    /// Operator of an arbitrary origin-star stencil.
    ///
    /// With `causal`, a face only contributes when its value exceeds every vertex value
    /// it interpolates.
    pub fn from_simplices(m: &SpdMatrix, simplices: &[Simplex], causal: bool) -> Result<Self> {
        let dim = m.dim();
        if simplices.is_empty() {
            return Err(Error::InvalidArgument("empty stencil".into()));
        }
        let mut vertices: Vec<LatticeVector> =
            simplices.iter().flat_map(|s| s.nonzero().iter().copied()).collect();
        vertices.sort();
        vertices.dedup();
        if vertices.iter().any(|v| v.dim() != dim || v.is_zero()) {
            return Err(Error::InvalidArgument("stencil vertices must be non-zero and match the metric".into()));
        }
        let mut keys: BTreeSet<Vec<u16>> = BTreeSet::new();
        for s in simplices {
            let idx: Vec<u16> = s
                .nonzero()
                .iter()
                .map(|v| vertices.binary_search(v).expect("vertex collected above") as u16)
                .collect();
            for mask in 1u32..(1 << idx.len()) {
                let mut face: Vec<u16> =
                    (0..idx.len()).filter(|i| mask >> i & 1 == 1).map(|i| idx[i]).collect();
                face.sort_unstable();
                keys.insert(face);
            }
        }
        let faces: Vec<Face> = keys.iter().filter_map(|k| Face::new(m, k, &vertices)).collect();
        let mut faces_by_vertex = vec![Vec::new(); vertices.len()];
        for (fi, f) in faces.iter().enumerate() {
            for &v in &f.verts[..f.k] {
                faces_by_vertex[v as usize].push(fi as u32);
            }
        }
        let offsets = vertices
            .iter()
            .map(|v| {
                let mut o = [0i64; MAX_DIM];
                o[..dim].copy_from_slice(v.as_slice());
                o
            })
            .collect();
        let mut frame = [[0i64; MAX_DIM]; MAX_DIM];
        for (i, row) in frame.iter_mut().enumerate() {
            row[i] = 1;
        }
        Ok(Self { dim, vertices, offsets, faces, faces_by_vertex, causal, frame })
    }

    /// Non-causal operator of a fixed two-dimensional grid stencil.
    pub fn baseline(m: &SpdMatrix, stencil: BaselineStencil) -> Result<Self> {
        if m.dim() != 2 {
            return Err(Error::UnsupportedDim(m.dim()));
        }
        let ring: &[[i64; 2]] = match stencil {
            BaselineStencil::Triangulated => &[[1, 0], [0, 1], [-1, 1], [-1, 0], [0, -1], [1, -1]],
            BaselineStencil::Ring8 => &[[1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0], [-1, -1], [0, -1], [1, -1]],
        };
        let simplices: Vec<Simplex> = (0..ring.len())
            .map(|i| {
                Simplex::new(vec![
                    LatticeVector::new(&ring[i]).unwrap(),
                    LatticeVector::new(&ring[(i + 1) % ring.len()]).unwrap(),
                ])
            })
            .collect();
        Self::from_simplices(m, &simplices, false)
    }

    /// The 8-neighbour square ring, split into 8 triangles, without causality filter.
    pub fn ring8(m: &SpdMatrix) -> Result<Self> {
        Self::baseline(m, BaselineStencil::Ring8)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinates of `z` in the ordering basis (canonical unless built from a mesh).
    pub(crate) fn frame_coords(&self, z: &[i64]) -> [i64; MAX_DIM] {
        let mut c = [0i64; MAX_DIM];
        for (ci, row) in c.iter_mut().zip(&self.frame).take(self.dim) {
            *ci = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
        c
    }

    /// Distinct non-zero stencil vertices, lexicographically sorted.
    pub fn vertices(&self) -> &[LatticeVector] {
        &self.vertices
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_causal(&self) -> bool {
        self.causal
    }

    /// Minimum over all faces whose vertex values are finite; `vals[j]` is `𝔡(z+v_j)`.
    pub fn minimize(&self, vals: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for f in &self.faces {
            best = self.try_face(f, |j| vals[j], best);
        }
        best
    }

    /// `min(best, value of each face containing vertex v)`, reading vertex values
    /// through `get`.
    #[inline]
    pub(crate) fn minimize_through<F: FnMut(usize) -> f64>(&self, v: usize, mut get: F, mut best: f64) -> f64 {
        for &fi in &self.faces_by_vertex[v] {
            best = self.try_face(&self.faces[fi as usize], &mut get, best);
        }
        best
    }

    #[inline]
    fn try_face<F: FnMut(usize) -> f64>(&self, f: &Face, mut get: F, best: f64) -> f64 {
        let mut d = [0.0; MAX_DIM];
        let mut lo = f64::INFINITY;
        for i in 0..f.k {
            d[i] = get(f.verts[i] as usize);
            if d[i] == f64::INFINITY {
                return best;
            }
            lo = lo.min(d[i]);
        }
        if lo + f.floor >= best {
            return best;
        }
        match f.solve(&d, self.causal) {
            Some(w) if w < best => w,
            _ => best,
        }
    }

    /// Largest coordinate of any stencil vertex, in absolute value.
    pub(crate) fn reach(&self) -> i64 {
        self.vertices.iter().map(|v| v.max_abs()).max().unwrap_or(0)
    }

    /// Stencil vertices as linear offsets on `grid`.
    pub(crate) fn linear_offsets(&self, grid: &Grid) -> Vec<isize> {
        self.offsets
            .iter()
            .map(|o| (0..self.dim).map(|i| o[i] as isize * grid.strides()[i] as isize).sum())
            .collect()
    }

    /// Fills `out[j]` with the grid index of `z + v_j`, or `usize::MAX` outside the grid.
    pub(crate) fn neighbours(&self, grid: &Grid, idx: usize, out: &mut [usize]) {
        let c = grid.coords(idx);
        let n = grid.half_width();
        let strides = grid.strides();
        for (slot, o) in out.iter_mut().zip(&self.offsets) {
            let mut lin = idx as isize;
            let mut inside = true;
            for i in 0..self.dim {
                let x = c[i] + o[i];
                if x.abs() > n {
                    inside = false;
                    break;
                }
                lin += o[i] as isize * strides[i] as isize;
            }
            *slot = if inside { lin as usize } else { usize::MAX };
        }
    }

    /// `Λ(𝔡,z)` at grid node `idx`, reading `values` and treating out-of-grid nodes as `+∞`.
    pub fn evaluate(&self, grid: &Grid, values: &[f64], idx: usize) -> f64 {
        let mut nb = vec![0usize; self.vertices.len()];
        self.neighbours(grid, idx, &mut nb);
        let vals: Vec<f64> =
            nb.iter().map(|&j| if j == usize::MAX { f64::INFINITY } else { values[j] }).collect();
        self.minimize(&vals)
    }

    /// `Λ(𝔡,z)` for an arbitrary lattice point `z`.
    pub fn evaluate_at(&self, field: &DistanceField, z: &LatticeVector) -> Result<f64> {
        let vals = self
            .vertices
            .iter()
            .map(|v| Ok(field.get(&z.checked_add(v)?)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(self.minimize(&vals))
    }

    /// `max |𝔡(z) − Λ(𝔡,z)|` over non-origin nodes with a finite value.
    pub fn residual(&self, field: &DistanceField) -> f64 {
        let grid = field.grid();
        let origin = grid.origin_index();
        let mut worst: f64 = 0.0;
        for idx in 0..grid.len() {
            let v = field.values()[idx];
            if idx == origin || v.is_infinite() {
                continue;
            }
            worst = worst.max((v - self.evaluate(grid, field.values(), idx)).abs());
        }
        worst
    }
}

/// `Λ(𝔡,z)` for the operator of an M-reduced mesh.
pub fn hopf_lax_update(m: &SpdMatrix, mesh: &ReducedMesh, field: &DistanceField, z: &LatticeVector) -> Result<f64> {
    if z.is_zero() {
        return Err(Error::InvalidArgument("Λ is not evaluated at the origin".into()));
    }
    HopfLax::new(m, mesh)?.evaluate_at(field, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ReducedBasis;
    use crate::mesh::build_mesh;
    use approx::assert_relative_eq;

    fn lv(x: &[i64]) -> LatticeVector {
        LatticeVector::new(x).unwrap()
    }

    fn identity_mesh() -> (SpdMatrix, ReducedMesh) {
        let m = SpdMatrix::identity(2).unwrap();
        let b = ReducedBasis::from_vectors(&m, vec![lv(&[1, 0]), lv(&[0, 1])]).unwrap();
        let mesh = build_mesh(&m, &b).unwrap();
        (m, mesh)
    }

    fn field_with(grid: Grid, entries: &[(&[i64], f64)]) -> DistanceField {
        let mut f = DistanceField::initial(grid);
        f.values_mut()[grid.origin_index()] = f64::INFINITY;
        for (z, v) in entries {
            let i = grid.index_of(z).unwrap();
            f.values_mut()[i] = *v;
        }
        f
    }

    #[test]
    fn single_finite_neighbour() {
        let (m, mesh) = identity_mesh();
        let grid = Grid::new(2, 3).unwrap();
        let f = field_with(grid, &[(&[2, 0], 0.0)]);
        assert_eq!(hopf_lax_update(&m, &mesh, &f, &lv(&[1, 0])).unwrap(), 1.0);
        let f = field_with(grid, &[]);
        assert_eq!(hopf_lax_update(&m, &mesh, &f, &lv(&[1, 0])).unwrap(), f64::INFINITY);
    }

    #[test]
    fn boundary_minimizer() {
        let (m, mesh) = identity_mesh();
        let grid = Grid::new(2, 3).unwrap();
        let f = field_with(grid, &[(&[2, 1], 0.0), (&[2, 2], 0.0)]);
        assert_eq!(hopf_lax_update(&m, &mesh, &f, &lv(&[1, 1])).unwrap(), 1.0);
        assert!(hopf_lax_update(&m, &mesh, &f, &lv(&[0, 0])).is_err());
    }

    #[test]
    fn interior_minimizer_matches_dense_sampling() {
        let m = SpdMatrix::identity(2).unwrap();
        let op = HopfLax::from_simplices(&m, &[Simplex::new(vec![lv(&[1, 0]), lv(&[1, 1])])], true).unwrap();
        let vals = [0.1, 0.0];
        let w = op.minimize(&vals);
        let mut dense = f64::INFINITY;
        for i in 0..=1_000_000 {
            let a = i as f64 * 1e-6;
            let x = (1.0 + (1.0 - a).powi(2)).sqrt() + 0.1 * a;
            dense = dense.min(x);
        }
        assert!(w <= dense + 1e-15);
        assert!(dense - w < 1e-11);
        let s = 0.1 / 0.99f64.sqrt();
        assert_relative_eq!(w, (1.0 + s * s).sqrt() + 0.1 * (1.0 - s), max_relative = 1e-14);
        assert!((w - 1.09499).abs() < 5e-6);
    }

    #[test]
    fn matches_brute_force_on_random_faces() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let m = SpdMatrix::from_rows(&[vec![2.0, 0.3, 0.1], vec![0.3, 1.0, -0.2], vec![0.1, -0.2, 1.5]]).unwrap();
        let tri = [lv(&[1, 0, 0]), lv(&[1, 1, 0]), lv(&[1, 1, 1])];
        let op = HopfLax::from_simplices(&m, &[Simplex::new(tri.to_vec())], false).unwrap();
        for _ in 0..50 {
            let vals: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
            // op sorts its vertices, map back
            let sorted: Vec<f64> = op.vertices().iter().map(|v| vals[tri.iter().position(|t| t == v).unwrap()]).collect();
            let w = op.minimize(&sorted);
            let mut best = f64::INFINITY;
            let steps = 400;
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let a = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
                    let mut p = [0.0; 3];
                    for (ak, t) in a.iter().zip(&tri) {
                        for c in 0..3 {
                            p[c] += ak * t.as_slice()[c] as f64;
                        }
                    }
                    let x = m.m_dot(&crate::metric::RealVector::new(&p).unwrap(), &crate::metric::RealVector::new(&p).unwrap()).unwrap().sqrt()
                        + a.iter().zip(&vals).map(|(x, y)| x * y).sum::<f64>();
                    best = best.min(x);
                }
            }
            assert!(w <= best + 1e-12, "{w} > {best}");
            assert!(best - w < 1e-4, "{w} vs {best}");
        }
    }

    #[test]
    fn monotone_in_neighbour_values() {
        let (m, mesh) = identity_mesh();
        let op = HopfLax::new(&m, &mesh).unwrap();
        let base: Vec<f64> = (0..op.vertices().len()).map(|i| 0.3 * i as f64).collect();
        let w0 = op.minimize(&base);
        for j in 0..base.len() {
            let mut up = base.clone();
            up[j] += 0.05;
            assert!(op.minimize(&up) >= w0);
        }
    }

    #[test]
    fn face_counts() {
        let (m, mesh) = identity_mesh();
        assert_eq!(HopfLax::new(&m, &mesh).unwrap().face_count(), 12);
        assert_eq!(HopfLax::ring8(&m).unwrap().face_count(), 16);
        assert_eq!(HopfLax::baseline(&m, BaselineStencil::Triangulated).unwrap().face_count(), 12);
    }
}
