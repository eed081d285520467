//! M-reduced meshes: origin-star stencils of unimodular, pairwise M-acute simplices.
//!
//! The mesh is built from a reduced basis `(u₁,…,u_d)`:
//!
//! * d = 2: the six-triangle fan through `±u₁, ±(u₁+u₂), ±u₂` after flipping `u₂` so
//!   that `⟨u₁,u₂⟩_M ≤ 0`;
//! * d = 3: the 48 simplices `(0, v₁, v₁+v₂, v₁+v₂+v₃)` where `(v₁,v₂,v₃)` runs over
//!   signed permutations of the basis;
//! * d = 4: the 768 simplices `(0, v₁, v₁+v₂, v₁+v₂+v₃, 2v₁+v₂+v₃+v₄)` and
//!   `(0, v₁+v₂, v₁+v₂+v₃, v₁+v₂+v₃+v₄, 2v₁+v₂+v₃+v₄)` over signed permutations.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::{integer_det, ReducedBasis};
use crate::metric::{LatticeVector, SpdMatrix, MAX_DIM};

/// Default number of quasi-uniform ray directions used by [`verify_mesh`].
pub const DEFAULT_RAY_COUNT: usize = 10_000;

/// Pairs with a normalized scalar product below `-ACUTENESS_TOL` are not acute.
pub const ACUTENESS_TOL: f64 = 1e-10;

/// The constant `K_d` in `r_M(𝒯) ≤ K_d λ_d(M)`.
pub fn radius_constant(d: usize) -> f64 {
    match d {
        2 => 2.0,
        3 => 3.0,
        4 => 5.0,
        _ => f64::NAN,
    }
}

/// A simplex with one vertex at the origin. Only the `d` non-zero vertices are stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Simplex {
    nonzero: Vec<LatticeVector>,
}

impl Simplex {
    pub fn new(nonzero: Vec<LatticeVector>) -> Self {
        Self { nonzero }
    }

    /// The non-zero vertices `v₁,…,v_d`.
    pub fn nonzero(&self) -> &[LatticeVector] {
        &self.nonzero
    }

    /// All `d+1` vertices, origin first.
    pub fn vertices(&self) -> Vec<LatticeVector> {
        let d = self.nonzero[0].dim();
        std::iter::once(LatticeVector::zero(d)).chain(self.nonzero.iter().copied()).collect()
    }

    pub fn integer_det(&self) -> Result<i128> {
        integer_det(&self.nonzero)
    }

    pub fn negated(&self) -> Self {
        Self { nonzero: self.nonzero.iter().map(|v| v.neg()).collect() }
    }

    fn sorted_key(&self) -> Vec<LatticeVector> {
        let mut k = self.nonzero.clone();
        k.sort();
        k
    }

    /// `r_M(T)`: the largest vertex norm.
    pub fn radius(&self, m: &SpdMatrix) -> f64 {
        self.nonzero.iter().map(|v| m.lattice_norm(v)).fold(0.0, f64::max)
    }

    /// `cos θ_M(T)`: the smallest normalized scalar product between two non-zero vertices.
    pub fn cos_angle(&self, m: &SpdMatrix) -> f64 {
        let mut worst = 1.0_f64;
        for (i, u) in self.nonzero.iter().enumerate() {
            for v in &self.nonzero[i + 1..] {
                let c = m.lattice_dot(u, v) / (m.lattice_norm(u) * m.lattice_norm(v));
                worst = worst.min(c);
            }
        }
        worst.clamp(-1.0, 1.0)
    }
}

/// An M-reduced mesh together with the basis it was built from.
#[derive(Clone, Debug)]
pub struct ReducedMesh {
    dim: usize,
    simplices: Vec<Simplex>,
    basis: ReducedBasis,
}

impl ReducedMesh {
    /// Assembles a mesh from explicit simplices without any verification.
    pub fn from_parts(basis: ReducedBasis, simplices: Vec<Simplex>) -> Self {
        Self { dim: basis.dim(), simplices, basis }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn basis(&self) -> &ReducedBasis {
        &self.basis
    }

    /// The distinct non-zero vertices, in lexicographic order.
    pub fn vertices(&self) -> Vec<LatticeVector> {
        let mut v: Vec<LatticeVector> =
            self.simplices.iter().flat_map(|s| s.nonzero.iter().copied()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Plain-text dump: one simplex per line, origin first then the non-zero vertices
    /// in lexicographic order; lines sorted lexicographically by vertex list.
    pub fn dump(&self) -> String {
        let mut keys: Vec<Vec<LatticeVector>> = self.simplices.iter().map(|s| s.sorted_key()).collect();
        keys.sort();
        let origin = LatticeVector::zero(self.dim);
        let mut out = String::new();
        for key in keys {
            let line: Vec<String> =
                std::iter::once(&origin).chain(key.iter()).map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// All `(v₁,…,v_d)` obtained by permuting `(ε₁u₁,…,ε_d u_d)` with arbitrary signs.
fn signed_permutations(basis: &[LatticeVector]) -> Vec<Vec<LatticeVector>> {
    let d = basis.len();
    let mut out = Vec::new();
    for signs in 0..(1u32 << d) {
        let signed: Vec<LatticeVector> = basis
            .iter()
            .enumerate()
            .map(|(i, u)| if signs >> i & 1 == 1 { u.neg() } else { *u })
            .collect();
        for p in permutations(d) {
            out.push(p.iter().map(|&i| signed[i]).collect());
        }
    }
    out
}

fn sum(vs: &[LatticeVector]) -> Result<LatticeVector> {
    let mut s = LatticeVector::zero(vs[0].dim());
    for v in vs {
        s = s.checked_add(v)?;
    }
    Ok(s)
}

/// Builds the M-reduced mesh associated with a reduced basis.
///
/// Fails with [`Error::MeshDefect`] if the result is not acute or not unimodular,
/// which can only happen when `basis` is not actually M-reduced.
pub fn build_mesh(m: &SpdMatrix, basis: &ReducedBasis) -> Result<ReducedMesh> {
    let d = m.dim();
    if basis.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: basis.dim() });
    }
    let u = basis.vectors();
    let simplices = match d {
        2 => {
            let u1 = u[0];
            let u2 = if m.lattice_dot(&u[0], &u[1]) > 0.0 { u[1].neg() } else { u[1] };
            let w = u1.checked_add(&u2)?;
            let half = [
                Simplex::new(vec![u1, w]),
                Simplex::new(vec![w, u2]),
                Simplex::new(vec![u2, u1.neg()]),
            ];
            let mut all = half.to_vec();
            all.extend(half.iter().map(Simplex::negated));
            all
        }
        3 => signed_permutations(u)
            .into_iter()
            .map(|v| Ok(Simplex::new(vec![v[0], sum(&v[..2])?, sum(&v)?])))
            .collect::<Result<Vec<_>>>()?,
        4 => {
            let mut all = Vec::with_capacity(768);
            for v in signed_permutations(u) {
                let top = sum(&v)?.checked_add(&v[0])?;
                all.push(Simplex::new(vec![v[0], sum(&v[..2])?, sum(&v[..3])?, top]));
                all.push(Simplex::new(vec![sum(&v[..2])?, sum(&v[..3])?, sum(&v)?, top]));
            }
            all
        }
        _ => return Err(Error::UnsupportedDim(d)),
    };
    let mesh = ReducedMesh { dim: d, simplices, basis: basis.clone() };
    let margin = worst_acuteness_margin(m, &mesh);
    if margin < -ACUTENESS_TOL {
        return Err(Error::MeshDefect(format!("acuteness violated (margin {margin:e})")));
    }
    for s in &mesh.simplices {
        if s.integer_det()?.abs() != 1 {
            return Err(Error::MeshDefect(format!("simplex {:?} is not unimodular", s.nonzero)));
        }
    }
    Ok(mesh)
}

fn worst_acuteness_margin(m: &SpdMatrix, mesh: &ReducedMesh) -> f64 {
    let raw = mesh.simplices.iter().map(|s| s.cos_angle(m)).fold(f64::INFINITY, f64::min);
    if (-ACUTENESS_TOL..0.0).contains(&raw) {
        0.0
    } else {
        raw
    }
}

/// Outcome of [`verify_mesh`].
#[derive(Clone, Debug, PartialEq)]
pub struct MeshReport {
    /// The outer faces form a closed surface around the origin and every sampled ray
    /// crosses exactly one of them.
    pub covering: bool,
    /// Every simplex has `|det(v₁,…,v_d)| = 1`.
    pub unit_covolume: bool,
    /// Every pair of co-simplex non-zero vertices satisfies `⟨u,v⟩_M ≥ -1e-10‖u‖‖v‖`.
    pub acuteness: bool,
    /// Smallest normalized scalar product over all co-simplex vertex pairs.
    pub worst_acuteness_margin: f64,
    /// Outer faces are unique and inner faces shared by exactly two simplices.
    pub closed_surface: bool,
    pub rays_checked: usize,
    pub rays_failed: usize,
}

impl MeshReport {
    pub fn passed(&self) -> bool {
        self.covering && self.unit_covolume && self.acuteness
    }
}

/// Halton points mapped into the unit ball, normalized to directions.
pub fn quasi_uniform_directions(dim: usize, count: usize) -> Vec<[f64; MAX_DIM]> {
    const PRIMES: [u64; MAX_DIM] = [2, 3, 5, 7];
    fn radical_inverse(mut i: u64, base: u64) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count {
        let mut x = [0.0; MAX_DIM];
        for (k, xk) in x.iter_mut().enumerate().take(dim) {
            *xk = 2.0 * radical_inverse(i, PRIMES[k]) - 1.0;
        }
        i += 1;
        let n2: f64 = x.iter().map(|v| v * v).sum();
        if !(0.01..=1.0).contains(&n2) {
            continue;
        }
        let n = n2.sqrt();
        for xk in x.iter_mut() {
            *xk /= n;
        }
        out.push(x);
    }
    out
}

/// Inverse of the matrix whose columns are `vectors`.
fn vertex_inverse(vectors: &[LatticeVector]) -> Option<[[f64; MAX_DIM]; MAX_DIM]> {
    let d = vectors.len();
    let mut a = [[0.0; 2 * MAX_DIM]; MAX_DIM];
    for i in 0..d {
        for j in 0..d {
            a[i][j] = vectors[j].as_slice()[i] as f64;
        }
        a[i][d + i] = 1.0;
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(piv, col);
        let p = a[col][col];
        for x in a[col].iter_mut() {
            *x /= p;
        }
        for row in 0..d {
            if row != col {
                let f = a[row][col];
                if f != 0.0 {
                    for k in 0..2 * d {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    let mut inv = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..d {
        for j in 0..d {
            inv[i][j] = a[i][d + j];
        }
    }
    Some(inv)
}

/// Exact inverse of the unimodular matrix whose columns are `vectors`.
///
/// Returns `None` unless `|det| = 1`; the result is checked by integer multiplication.
pub fn integer_inverse(vectors: &[LatticeVector]) -> Option<[[i64; MAX_DIM]; MAX_DIM]> {
    let d = vectors.len();
    let inv_f = vertex_inverse(vectors)?;
    let mut inv = [[0i64; MAX_DIM]; MAX_DIM];
    for i in 0..d {
        for j in 0..d {
            let x = inv_f[i][j].round();
            if !x.is_finite() || x.abs() > 1e15 {
                return None;
            }
            inv[i][j] = x as i64;
        }
    }
    for i in 0..d {
        for j in 0..d {
            let s: i128 =
                (0..d).map(|k| inv[i][k] as i128 * vectors[j].as_slice()[k] as i128).sum();
            if s != (i == j) as i128 {
                return None;
            }
        }
    }
    Some(inv)
}

/// Checks covering, unit covolume and acuteness with [`DEFAULT_RAY_COUNT`] rays.
pub fn verify_mesh(m: &SpdMatrix, mesh: &ReducedMesh) -> MeshReport {
    verify_mesh_with(m, mesh, DEFAULT_RAY_COUNT)
}

/// Inverse of a simplex's vertex matrix and the loose tolerance per row.
type Cone = ([[f64; MAX_DIM]; MAX_DIM], [f64; MAX_DIM]);

/// Cones grouped by the orthants of the basis coordinates they can meet.
///
/// A ray whose basis coordinates are all clear of zero by `eps` is only tested against
/// its orthant's bucket; `eps` bounds how far outside its orthant a ray accepted by the
/// loose cone test can lie.
struct OrthantBuckets {
    frame: [[f64; MAX_DIM]; MAX_DIM],
    eps: [f64; MAX_DIM],
    buckets: Vec<Vec<u32>>,
}

impl OrthantBuckets {
    fn new(mesh: &ReducedMesh, cones: &[Cone]) -> Option<Self> {
        let d = mesh.dim;
        if cones.len() != mesh.simplices.len() {
            return None;
        }
        let inv = integer_inverse(mesh.basis.vectors())?;
        let mut frame = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..d {
            for j in 0..d {
                frame[i][j] = inv[i][j] as f64;
            }
        }
        let mut eps = [0.0f64; MAX_DIM];
        for (k, e) in eps.iter_mut().enumerate().take(d) {
            *e = 1e-12 * frame[k].iter().map(|x| x.abs()).sum::<f64>();
        }
        let mut buckets = vec![Vec::new(); 1 << d];
        for (ci, (s, (_, tol))) in mesh.simplices.iter().zip(cones).enumerate() {
            let mut allow_pos = 0u32;
            let mut allow_neg = 0u32;
            let mut slack = [0.0f64; MAX_DIM];
            for k in 0..d {
                let coords: Vec<i64> = s
                    .nonzero
                    .iter()
                    .map(|v| (0..d).map(|j| inv[k][j] * v.as_slice()[j]).sum())
                    .collect();
                if coords.iter().any(|&c| c > 0) || coords.iter().all(|&c| c == 0) {
                    allow_pos |= 1 << k;
                }
                if coords.iter().any(|&c| c < 0) || coords.iter().all(|&c| c == 0) {
                    allow_neg |= 1 << k;
                }
                slack[k] = coords.iter().zip(tol).map(|(&c, t)| c.unsigned_abs() as f64 * t).sum();
            }
            for k in 0..d {
                eps[k] = eps[k].max(2.0 * slack[k]);
            }
            for (pattern, bucket) in buckets.iter_mut().enumerate() {
                let pos = !(pattern as u32) & ((1 << d) - 1);
                let neg = pattern as u32;
                if pos & !allow_pos == 0 && neg & !allow_neg == 0 {
                    bucket.push(ci as u32);
                }
            }
        }
        Some(Self { frame, eps, buckets })
    }

    /// Bucket of the direction `x`, `None` when a coordinate is too close to zero.
    fn lookup(&self, d: usize, x: &[f64; MAX_DIM]) -> Option<&[u32]> {
        let scale = x.iter().take(d).fold(1.0f64, |a, v| a.max(v.abs()));
        let mut pattern = 0usize;
        for k in 0..d {
            let c: f64 = (0..d).map(|j| self.frame[k][j] * x[j]).sum();
            if c.abs() <= self.eps[k] * scale {
                return None;
            }
            if c < 0.0 {
                pattern |= 1 << k;
            }
        }
        Some(&self.buckets[pattern])
    }
}

/// [`verify_mesh`] with a configurable number of quasi-uniform ray directions.
pub fn verify_mesh_with(m: &SpdMatrix, mesh: &ReducedMesh, ray_count: usize) -> MeshReport {
    let d = mesh.dim;
    let unit_covolume = mesh
        .simplices
        .iter()
        .all(|s| s.nonzero.len() == d && matches!(s.integer_det(), Ok(x) if x.abs() == 1));

    let worst = worst_acuteness_margin(m, mesh);
    let acuteness = worst >= -ACUTENESS_TOL;

    // face pairing
    let mut outer: HashMap<Vec<LatticeVector>, usize> = HashMap::new();
    let mut inner: HashMap<Vec<LatticeVector>, usize> = HashMap::new();
    for s in &mesh.simplices {
        let key = s.sorted_key();
        *outer.entry(key.clone()).or_default() += 1;
        for skip in 0..key.len() {
            let mut face = key.clone();
            face.remove(skip);
            *inner.entry(face).or_default() += 1;
        }
    }
    let closed_surface =
        !mesh.simplices.is_empty() && outer.values().all(|&c| c == 1) && inner.values().all(|&c| c == 2);

    // ray casting through the cones spanned by the simplices
    let cones: Vec<Cone> = mesh
        .simplices
        .iter()
        .filter_map(|s| vertex_inverse(&s.nonzero))
        .map(|inv| {
            let mut tol = [0.0; MAX_DIM];
            for (t, row) in tol.iter_mut().zip(&inv) {
                *t = 1e-9 * row.iter().map(|x| x.abs()).sum::<f64>();
            }
            (inv, tol)
        })
        .collect();
    let mut directions = quasi_uniform_directions(d, ray_count);
    for s in &mesh.simplices {
        let mut x = [0.0; MAX_DIM];
        for v in &s.nonzero {
            for (k, xk) in x.iter_mut().enumerate().take(d) {
                *xk += v.as_slice()[k] as f64;
            }
        }
        directions.push(x);
    }
    let buckets = OrthantBuckets::new(mesh, &cones);
    let all: Vec<u32> = (0..cones.len() as u32).collect();
    let mut rays_failed = 0;
    for x in &directions {
        let mut loose = 0;
        let mut strict = 0;
        let candidates = buckets.as_ref().and_then(|b| b.lookup(d, x)).unwrap_or(&all);
        for &ci in candidates {
            let (inv, tol) = &cones[ci as usize];
            let mut inside_loose = true;
            let mut inside_strict = true;
            for k in 0..d {
                let row = &inv[k];
                let mu = row[0] * x[0] + row[1] * x[1] + row[2] * x[2] + row[3] * x[3];
                if mu < -tol[k] {
                    inside_loose = false;
                    break;
                }
                if mu <= tol[k] {
                    inside_strict = false;
                }
            }
            if inside_loose {
                loose += 1;
                if inside_strict {
                    strict += 1;
                }
            }
        }
        if loose == 0 || strict > 1 {
            rays_failed += 1;
        }
    }
    let covering = closed_surface && rays_failed == 0 && cones.len() == mesh.simplices.len();
    MeshReport {
        covering,
        unit_covolume,
        acuteness,
        worst_acuteness_margin: worst,
        closed_surface,
        rays_checked: directions.len(),
        rays_failed,
    }
}

/// Radius and angle of a single simplex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexMetrics {
    /// `r_M(T)`
    pub radius: f64,
    /// `θ_M(T)` in radians
    pub angle: f64,
}

impl SimplexMetrics {
    pub fn sin2(&self) -> f64 {
        self.angle.sin().powi(2)
    }
}

/// Bounding radius of the mesh and per-simplex radii and angles.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshMetrics {
    pub r_mesh: f64,
    pub per_simplex: Vec<SimplexMetrics>,
}

pub fn mesh_metrics(m: &SpdMatrix, mesh: &ReducedMesh) -> MeshMetrics {
    let per_simplex: Vec<SimplexMetrics> = mesh
        .simplices
        .iter()
        .map(|s| SimplexMetrics { radius: s.radius(m), angle: s.cos_angle(m).acos() })
        .collect();
    let r_mesh = per_simplex.iter().map(|x| x.radius).fold(0.0, f64::max);
    MeshMetrics { r_mesh, per_simplex }
}

/// `λ_d(M) ≤ r_M(𝒯) ≤ K_d λ_d(M)`, slackened by 1e-9 relative.
pub fn radius_bound_check(m: &SpdMatrix, mesh: &ReducedMesh, minima: &[f64]) -> bool {
    let d = mesh.dim;
    let Some(&lambda_d) = minima.last() else { return false };
    let r = mesh_metrics(m, mesh).r_mesh;
    lambda_d <= r * (1.0 + 1e-9) && r <= radius_constant(d) * lambda_d * (1.0 + 1e-9)
}
