//! Successive minima of ℤᵈ under a metric, and M-reduced bases.
//!
//! [`reduce_basis`] is the production path (Lagrange–Gauss in 2D, LLL followed by a
//! Minkowski polishing pass in 3D/4D). [`minkowski_minima_bruteforce`] enumerates
//! lattice points inside an ellipsoid and serves as the independent oracle.

use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::metric::{check_dim, LatticeVector, SpdMatrix, MAX_DIM};

/// Maximum number of lattice vectors the brute-force enumeration may visit.
pub const BRUTEFORCE_CANDIDATE_CAP: usize = 1_000_000;

/// Maximum number of elementary steps in [`reduce_basis`].
pub const REDUCTION_STEP_CAP: usize = 10_000;

const LLL_DELTA: f64 = 0.99;

/// Volume of the Euclidean unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

/// Exact determinant of `d` lattice vectors of dimension `d` (fraction-free elimination).
pub fn integer_det(vectors: &[LatticeVector]) -> Result<i128> {
    let d = vectors.len();
    if d == 0 {
        return Ok(1);
    }
    if let Some(v) = vectors.iter().find(|v| v.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: v.dim() });
    }
    let mut a = [[0i128; MAX_DIM]; MAX_DIM];
    for (i, v) in vectors.iter().enumerate() {
        for j in 0..d {
            a[i][j] = v.as_slice()[j] as i128;
        }
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..d {
        if a[k][k] == 0 {
            match (k + 1..d).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..d {
            for j in k + 1..d {
                let num = a[i][j]
                    .checked_mul(a[k][k])
                    .and_then(|x| x.checked_sub(a[i][k].checked_mul(a[k][j])?))
                    .ok_or(Error::Overflow)?;
                a[i][j] = num / prev;
            }
        }
        prev = a[k][k];
    }
    Ok(sign * a[d - 1][d - 1])
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Rank of a family of lattice vectors.
pub fn integer_rank(vectors: &[LatticeVector]) -> usize {
    let Some(first) = vectors.first() else { return 0 };
    let d = first.dim();
    let mut rows: Vec<[i128; MAX_DIM]> = vectors
        .iter()
        .map(|v| {
            let mut r = [0i128; MAX_DIM];
            for j in 0..d {
                r[j] = v.as_slice()[j] as i128;
            }
            r
        })
        .collect();
    let mut rank = 0;
    for col in 0..d {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank];
        for r in rank + 1..rows.len() {
            if rows[r][col] == 0 {
                continue;
            }
            let (a, b) = (pivot[col], rows[r][col]);
            let mut g = 0;
            for j in 0..d {
                rows[r][j] = rows[r][j] * a - pivot[j] * b;
                g = gcd(g, rows[r][j]);
            }
            if g > 1 {
                for x in rows[r].iter_mut() {
                    *x /= g;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Whether the family can be completed into a basis of ℤᵈ: all maximal minors have gcd 1.
fn is_primitive(vectors: &[LatticeVector]) -> Result<bool> {
    let k = vectors.len();
    let d = vectors[0].dim();
    let mut g = 0i128;
    let mut cols = [0usize; MAX_DIM];
    // iterate over k-subsets of columns
    fn visit(
        start: usize,
        depth: usize,
        k: usize,
        d: usize,
        cols: &mut [usize; MAX_DIM],
        vectors: &[LatticeVector],
        g: &mut i128,
    ) -> Result<()> {
        if depth == k {
            let minor: Vec<LatticeVector> = vectors
                .iter()
                .map(|v| {
                    let c: Vec<i64> = cols[..k].iter().map(|&j| v.as_slice()[j]).collect();
                    LatticeVector::new(&c)
                })
                .collect::<Result<_>>()?;
            *g = gcd(*g, integer_det(&minor)?);
            return Ok(());
        }
        for c in start..d {
            cols[depth] = c;
            visit(c + 1, depth + 1, k, d, cols, vectors, g)?;
        }
        Ok(())
    }
    visit(0, 0, k, d, &mut cols, vectors, &mut g)?;
    Ok(g == 1)
}

/// Visits every non-zero `u` with first non-zero coordinate positive, `‖u‖²_M ≤ radius2`
/// and `max|uᵢ| ≤ box_bound`. Returns the number of visited candidates.
fn enumerate_ellipsoid(
    m: &SpdMatrix,
    radius2: f64,
    box_bound: i64,
    cap: usize,
    out: &mut Vec<(f64, LatticeVector)>,
) -> Result<usize> {
    let d = m.dim();
    // M = Uᵀ D U with U unit upper triangular, so that
    // ‖u‖² = Σᵢ Dᵢ (uᵢ + Σ_{j>i} U_ij u_j)².
    let mut u = [[0.0; MAX_DIM]; MAX_DIM];
    let mut diag = [0.0; MAX_DIM];
    for i in 0..d {
        let mut di = m.entry(i, i);
        for k in 0..i {
            di -= diag[k] * u[k][i] * u[k][i];
        }
        diag[i] = di;
        u[i][i] = 1.0;
        for j in i + 1..d {
            let mut s = m.entry(i, j);
            for k in 0..i {
                s -= diag[k] * u[k][i] * u[k][j];
            }
            u[i][j] = s / di;
        }
    }
    let budget = radius2 * (1.0 + 1e-9) + 1e-300;
    let mut coords = [0i64; MAX_DIM];
    let mut visited = 0usize;

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        level: usize,
        d: usize,
        remaining: f64,
        u: &[[f64; MAX_DIM]; MAX_DIM],
        diag: &[f64; MAX_DIM],
        coords: &mut [i64; MAX_DIM],
        box_bound: i64,
        cap: usize,
        visited: &mut usize,
        m: &SpdMatrix,
        radius2: f64,
        out: &mut Vec<(f64, LatticeVector)>,
    ) -> Result<()> {
        let center = -(level + 1..d).map(|j| u[level][j] * coords[j] as f64).sum::<f64>();
        let half = (remaining.max(0.0) / diag[level]).sqrt();
        let lo = ((center - half).ceil() as i64).max(-box_bound);
        let hi = ((center + half).floor() as i64).min(box_bound);
        for x in lo..=hi {
            coords[level] = x;
            let t = x as f64 - center;
            let rem = remaining - diag[level] * t * t;
            if rem < -1e-12 * remaining.abs().max(1e-300) {
                continue;
            }
            if level == 0 {
                *visited += 1;
                if *visited > cap {
                    return Err(Error::SearchCapExceeded(cap));
                }
                let v = LatticeVector::new(&coords[..d])?;
                if v.is_zero() || v.sign_normalized() != v {
                    continue;
                }
                let n2 = m.lattice_norm2(&v);
                if n2 <= radius2 {
                    out.push((n2, v));
                }
            } else {
                recurse(level - 1, d, rem, u, diag, coords, box_bound, cap, visited, m, radius2, out)?;
            }
        }
        coords[level] = 0;
        Ok(())
    }

    recurse(d - 1, d, budget, &u, &diag, &mut coords, box_bound, cap, &mut visited, m, radius2, out)?;
    Ok(visited)
}

fn cmp_candidates(a: &(f64, LatticeVector), b: &(f64, LatticeVector)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1))
}

#[derive(Clone, Copy, PartialEq)]
enum Greedy {
    /// successive minima: each pick only has to be independent of the previous ones
    Independent,
    /// Minkowski reduction: each pick has to keep the family primitive
    Primitive,
}

fn bruteforce_greedy(m: &SpdMatrix, mode: Greedy) -> Result<(Vec<f64>, Vec<LatticeVector>)> {
    let d = m.dim();
    check_dim(d)?;
    let nu1 = m.eigen_sqrt()?[0];
    // the canonical basis proves λ_d ≤ max √M_ii
    let max_diag = (0..d).map(|i| m.entry(i, i)).fold(0.0, f64::max);
    let ceiling = max_diag.sqrt();
    let mut radius = m.det().powf(0.5 / d as f64).min(ceiling);
    loop {
        let box_bound = (radius / nu1).ceil() as i64;
        let radius2 = if radius >= ceiling { max_diag } else { radius * radius };
        let mut candidates = Vec::new();
        enumerate_ellipsoid(m, radius2, box_bound, BRUTEFORCE_CANDIDATE_CAP, &mut candidates)?;
        candidates.sort_by(cmp_candidates);
        let mut picked: Vec<LatticeVector> = Vec::with_capacity(d);
        let mut norms = Vec::with_capacity(d);
        for (n2, v) in &candidates {
            let mut trial = picked.clone();
            trial.push(*v);
            let accept = match mode {
                Greedy::Independent => integer_rank(&trial) == trial.len(),
                Greedy::Primitive => integer_rank(&trial) == trial.len() && is_primitive(&trial)?,
            };
            if accept {
                picked = trial;
                norms.push(n2.sqrt());
                if picked.len() == d {
                    return Ok((norms, picked));
                }
            }
        }
        if radius >= ceiling {
            // unreachable for a valid matrix: the canonical basis lies inside this radius
            return Err(Error::MeshDefect("ellipsoid enumeration missed the canonical basis".into()));
        }
        radius = (radius * 1.5).min(ceiling);
    }
}

/// Successive Minkowski minima `λ₁ ≤ … ≤ λ_d` and achieving vectors, by exhaustive
/// enumeration.
///
/// The search covers every lattice vector with `‖u‖_M ≤ R` (restricted to the box
/// `|u|_∞ ≤ ⌈R/ν₁⌉`, which contains that ellipsoid), and `R` grows geometrically until
/// `d` independent vectors are found. Ties in norm are broken lexicographically among
/// representatives whose first non-zero coordinate is positive.
pub fn minkowski_minima_bruteforce(m: &SpdMatrix) -> Result<(Vec<f64>, Vec<LatticeVector>)> {
    bruteforce_greedy(m, Greedy::Independent)
}

/// Brute-force Minkowski-reduced basis (shortest primitive extension at each step).
pub fn minkowski_basis_bruteforce(m: &SpdMatrix) -> Result<ReducedBasis> {
    let (norms, vectors) = bruteforce_greedy(m, Greedy::Primitive)?;
    Ok(ReducedBasis { vectors, norms })
}

/// A unimodular basis `(u₁,…,u_d)` of ℤᵈ with `‖uᵢ‖_M = λᵢ(M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedBasis {
    vectors: Vec<LatticeVector>,
    norms: Vec<f64>,
}

impl ReducedBasis {
    /// Wraps user-supplied vectors after checking unimodularity. Norms are recomputed.
    pub fn from_vectors(m: &SpdMatrix, vectors: Vec<LatticeVector>) -> Result<Self> {
        if vectors.len() != m.dim() {
            return Err(Error::DimensionMismatch { expected: m.dim(), found: vectors.len() });
        }
        if integer_det(&vectors)?.abs() != 1 {
            return Err(Error::InvalidArgument("basis is not unimodular".into()));
        }
        let norms = vectors.iter().map(|v| m.lattice_norm(v)).collect();
        Ok(Self { vectors, norms })
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[LatticeVector] {
        &self.vectors
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn lambda_d(&self) -> f64 {
        self.norms[self.norms.len() - 1]
    }

    pub fn integer_det(&self) -> Result<i128> {
        integer_det(&self.vectors)
    }

    /// Smallest value of `‖z‖² − 2|⟨z,uᵢ⟩|` (relative to the scale of the terms) over
    /// all `i` and all `z = Σ_{j≠i} αⱼuⱼ` with `0 < max|αⱼ| ≤ coeff_bound`.
    pub fn worst_inequality_margin(&self, m: &SpdMatrix, coeff_bound: i64) -> Result<f64> {
        let d = self.dim();
        let mut worst = f64::INFINITY;
        let width = (2 * coeff_bound + 1) as usize;
        let combos = width.pow((d - 1) as u32);
        for i in 0..d {
            let others: Vec<&LatticeVector> =
                self.vectors.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).collect();
            for mut code in 0..combos {
                let mut z = LatticeVector::zero(d);
                for o in &others {
                    let alpha = (code % width) as i64 - coeff_bound;
                    code /= width;
                    z = z.checked_add(&o.checked_scale(alpha)?)?;
                }
                if z.is_zero() {
                    continue;
                }
                let z2 = m.lattice_norm2(&z);
                let zu = m.lattice_dot(&z, &self.vectors[i]);
                let scale = z2 + z2.sqrt() * self.norms[i];
                worst = worst.min((z2 - 2.0 * zu.abs()) / scale);
            }
        }
        Ok(worst)
    }
}

fn sort_basis(m: &SpdMatrix, b: &mut [LatticeVector]) {
    for v in b.iter_mut() {
        *v = v.sign_normalized();
    }
    b.sort_by(|x, y| m.lattice_norm2(x).total_cmp(&m.lattice_norm2(y)).then_with(|| x.cmp(y)));
}

fn lagrange_gauss(m: &SpdMatrix, b: &mut [LatticeVector]) -> Result<()> {
    let (mut a, mut c) = (b[0], b[1]);
    for _ in 0..REDUCTION_STEP_CAP {
        if m.lattice_norm2(&c) < m.lattice_norm2(&a) {
            std::mem::swap(&mut a, &mut c);
        }
        let x = m.lattice_dot(&a, &c) / m.lattice_norm2(&a);
        if x.abs() <= 0.5 {
            b[0] = a;
            b[1] = c;
            return Ok(());
        }
        c = c.checked_sub(&a.checked_scale(x.round() as i64)?)?;
    }
    Err(Error::ReductionCapExceeded(REDUCTION_STEP_CAP))
}

/// Gram–Schmidt coefficients and squared lengths of `b` under `m`.
fn gram_schmidt(m: &SpdMatrix, b: &[LatticeVector]) -> ([[f64; MAX_DIM]; MAX_DIM], [f64; MAX_DIM]) {
    let d = b.len();
    let mut mu = [[0.0; MAX_DIM]; MAX_DIM];
    let mut bstar = [0.0; MAX_DIM];
    for i in 0..d {
        for j in 0..i {
            let mut s = m.lattice_dot(&b[i], &b[j]);
            for l in 0..j {
                s -= mu[j][l] * mu[i][l] * bstar[l];
            }
            mu[i][j] = s / bstar[j];
        }
        let mut s = m.lattice_norm2(&b[i]);
        for j in 0..i {
            s -= mu[i][j] * mu[i][j] * bstar[j];
        }
        bstar[i] = s;
    }
    (mu, bstar)
}

fn lll(m: &SpdMatrix, b: &mut [LatticeVector], steps: &mut usize) -> Result<()> {
    let d = b.len();
    let mut k = 1;
    while k < d {
        *steps += 1;
        if *steps > REDUCTION_STEP_CAP {
            return Err(Error::ReductionCapExceeded(REDUCTION_STEP_CAP));
        }
        for j in (0..k).rev() {
            let (mu, _) = gram_schmidt(m, b);
            let q = mu[k][j].round();
            if q != 0.0 {
                b[k] = b[k].checked_sub(&b[j].checked_scale(q as i64)?)?;
            }
        }
        let (mu, bstar) = gram_schmidt(m, b);
        if bstar[k] >= (LLL_DELTA - mu[k][k - 1] * mu[k][k - 1]) * bstar[k - 1] {
            k += 1;
        } else {
            b.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    Ok(())
}

/// Enforces the Minkowski conditions with coefficients in {-1, 0, 1}, which are
/// sufficient in dimension ≤ 4: `‖u_k‖ ≤ ‖Σ c_j u_j‖` whenever some `c_j ≠ 0`, `j ≥ k`.
fn minkowski_polish(m: &SpdMatrix, b: &mut [LatticeVector], steps: &mut usize) -> Result<()> {
    let d = b.len();
    let combos = 3usize.pow(d as u32);
    'restart: loop {
        *steps += 1;
        if *steps > REDUCTION_STEP_CAP {
            return Err(Error::ReductionCapExceeded(REDUCTION_STEP_CAP));
        }
        sort_basis(m, b);
        let norms: Vec<f64> = b.iter().map(|v| m.lattice_norm2(v)).collect();
        for k in 0..d {
            for code in 0..combos {
                let mut c = [0i64; MAX_DIM];
                let mut rest = code;
                for cj in c.iter_mut().take(d) {
                    *cj = (rest % 3) as i64 - 1;
                    rest /= 3;
                }
                let Some(top) = (k..d).rev().find(|&j| c[j] != 0) else { continue };
                let nonzero = c[..d].iter().filter(|&&x| x != 0).count();
                if nonzero == 1 {
                    continue;
                }
                let mut w = LatticeVector::zero(d);
                for j in 0..d {
                    w = w.checked_add(&b[j].checked_scale(c[j])?)?;
                }
                if m.lattice_norm2(&w) < norms[k] * (1.0 - 1e-12) {
                    b[top] = w;
                    continue 'restart;
                }
            }
        }
        return Ok(());
    }
}

/// Computes an M-reduced basis.
///
/// Dimension 2 uses Lagrange–Gauss reduction. Dimensions 3 and 4 run LLL, then replace
/// basis vectors by shorter `{-1,0,1}` combinations until the Minkowski conditions
/// hold. The result is certified (unimodular, `2|⟨z,uᵢ⟩_M| ≤ ‖z‖²_M` for coefficients
/// up to 2); on failure the brute-force Minkowski basis is used instead.
pub fn reduce_basis(m: &SpdMatrix) -> Result<ReducedBasis> {
    let d = m.dim();
    check_dim(d)?;
    let mut b: Vec<LatticeVector> = (0..d).map(|i| LatticeVector::unit(d, i)).collect();
    let mut steps = 0;
    if d == 2 {
        lagrange_gauss(m, &mut b)?;
    } else {
        lll(m, &mut b, &mut steps)?;
        minkowski_polish(m, &mut b, &mut steps)?;
    }
    sort_basis(m, &mut b);
    let norms = b.iter().map(|v| m.lattice_norm(v)).collect();
    let basis = ReducedBasis { vectors: b, norms };
    if basis.integer_det()?.abs() != 1 {
        return Err(Error::MeshDefect("reduced basis is not unimodular".into()));
    }
    if basis.worst_inequality_margin(m, 2)? < -1e-10 {
        if d == 2 {
            return Err(Error::MeshDefect("Lagrange-Gauss basis fails certification".into()));
        }
        return minkowski_basis_bruteforce(m);
    }
    Ok(basis)
}

/// Minkowski's second theorem:
/// `2ᵈ/(d!ω_d)·√det M ≤ λ₁⋯λ_d ≤ 2ᵈ/ω_d·√det M`, each side slackened by 1e-9.
pub fn minkowski_sandwich_check(m: &SpdMatrix, minima: &[f64]) -> bool {
    let d = m.dim();
    if minima.len() != d {
        return false;
    }
    let product: f64 = minima.iter().product();
    let upper = 2f64.powi(d as i32) / unit_ball_volume(d) * m.det().sqrt();
    let lower = upper / factorial(d);
    lower * (1.0 - 1e-9) <= product && product <= upper * (1.0 + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{random_rotation, spd_from_spectrum, Rotation};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lv(x: &[i64]) -> LatticeVector {
        LatticeVector::new(x).unwrap()
    }

    #[test]
    fn ball_volumes() {
        assert_relative_eq!(unit_ball_volume(2), PI);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0);
        assert_relative_eq!(unit_ball_volume(4), PI * PI / 2.0);
    }

    #[test]
    fn determinant_and_rank() {
        assert_eq!(integer_det(&[lv(&[2, 1]), lv(&[1, 1])]).unwrap(), 1);
        assert_eq!(integer_det(&[lv(&[1, 2, 3]), lv(&[4, 5, 6]), lv(&[7, 8, 10])]).unwrap(), -3);
        assert_eq!(integer_det(&[lv(&[1, 2]), lv(&[2, 4])]).unwrap(), 0);
        assert_eq!(integer_rank(&[lv(&[1, 2, 3]), lv(&[2, 4, 6])]), 1);
        assert_eq!(integer_rank(&[lv(&[1, 0, 0]), lv(&[0, 0, 5])]), 2);
        assert!(is_primitive(&[lv(&[1, 1, 0])]).unwrap());
        assert!(!is_primitive(&[lv(&[2, 0, 0])]).unwrap());
        assert!(!is_primitive(&[lv(&[1, 1, 0]), lv(&[1, -1, 0])]).unwrap());
    }

    #[test]
    fn bruteforce_examples() {
        let (l, v) = minkowski_minima_bruteforce(&SpdMatrix::identity(2).unwrap()).unwrap();
        assert_eq!(l, vec![1.0, 1.0]);
        assert_eq!(v, vec![lv(&[0, 1]), lv(&[1, 0])]);
        let (l, v) = minkowski_minima_bruteforce(&SpdMatrix::diagonal(&[0.01, 100.0]).unwrap()).unwrap();
        assert_relative_eq!(l[0], 0.1, max_relative = 1e-15);
        assert_relative_eq!(l[1], 10.0, max_relative = 1e-15);
        assert_eq!(v, vec![lv(&[1, 0]), lv(&[0, 1])]);
    }

    /// Regression fixture recorded from the exhaustive enumeration itself.
    #[test]
    fn bruteforce_rotated_45() {
        let m = SpdMatrix::diagonal(&[100.0, 0.01])
            .unwrap()
            .conjugate(&Rotation::planar(std::f64::consts::FRAC_PI_4))
            .unwrap();
        let (l, v) = minkowski_minima_bruteforce(&m).unwrap();
        // ‖u‖² = 50 (u₀ − u₁)² + 0.005 (u₀ + u₁)²
        let soft = m.lattice_norm(&lv(&[1, 1])).min(m.lattice_norm(&lv(&[1, -1])));
        assert_relative_eq!(l[0], soft, max_relative = 1e-12);
        assert_relative_eq!(l[0], 0.01f64.sqrt() * 2f64.sqrt(), max_relative = 1e-9);
        // (0,1) and (1,0) tie at 50.005; the lexicographic order picks (0,1)
        assert_relative_eq!(l[1], 50.005f64.sqrt(), max_relative = 1e-12);
        assert_eq!(v, vec![lv(&[1, 1]), lv(&[0, 1])]);
        assert_eq!(integer_rank(&v), 2);
    }

    #[test]
    fn reduce_identity_and_diagonal() {
        for d in 2..=4 {
            let b = reduce_basis(&SpdMatrix::identity(d).unwrap()).unwrap();
            assert!(b.norms().iter().all(|&x| x == 1.0));
            assert_eq!(b.integer_det().unwrap().abs(), 1);
            for v in b.vectors() {
                assert_eq!(v.as_slice().iter().map(|x| x.abs()).sum::<i64>(), 1);
            }
        }
        let b = reduce_basis(&SpdMatrix::diagonal(&[0.01, 100.0]).unwrap()).unwrap();
        assert_eq!(b.vectors(), &[lv(&[1, 0]), lv(&[0, 1])]);
        assert_relative_eq!(b.norms()[0], 0.1, max_relative = 1e-15);
        assert_relative_eq!(b.norms()[1], 10.0, max_relative = 1e-15);
    }

    #[test]
    fn reference_metric_basis() {
        let m = spd_from_spectrum(&[0.1, 10.0], &Rotation::from_axis_2d([1.0, 0.6]).unwrap()).unwrap();
        let b = reduce_basis(&m).unwrap();
        assert_eq!(b.vectors(), &[lv(&[2, 1]), lv(&[1, 1])]);
        assert!(minkowski_sandwich_check(&m, b.norms()));
    }

    #[test]
    fn lagrange_gauss_reduced_in_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let r = random_rotation(2, &mut rng).unwrap();
            let k: f64 = 10f64.powf(rng.random_range(0.0..3.0));
            let m = spd_from_spectrum(&[1.0 / k, k], &r).unwrap();
            let b = reduce_basis(&m).unwrap();
            let (u1, u2) = (b.vectors()[0], b.vectors()[1]);
            let n2 = m.lattice_norm(&u2);
            assert!(m.lattice_norm(&u1) <= n2 * (1.0 + 1e-12));
            assert!(n2 <= m.lattice_norm(&u2.checked_add(&u1).unwrap()) * (1.0 + 1e-12));
            assert!(n2 <= m.lattice_norm(&u2.checked_sub(&u1).unwrap()) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn reduction_matches_bruteforce_small_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for d in 2..=4 {
            for _ in 0..60 {
                let r = random_rotation(d, &mut rng).unwrap();
                let eigs: Vec<f64> = (0..d).map(|_| 10f64.powf(rng.random_range(-2.0..2.0))).collect();
                let m = spd_from_spectrum(&eigs, &r).unwrap();
                let b = reduce_basis(&m).unwrap();
                let (l, _) = minkowski_minima_bruteforce(&m).unwrap_or_else(|e| panic!("{e} {eigs:?}"));
                for (x, y) in b.norms().iter().zip(&l) {
                    assert_relative_eq!(*x, *y, max_relative = 1e-10);
                }
                assert!(b.worst_inequality_margin(&m, 2).unwrap() >= -1e-10);
                assert!(minkowski_sandwich_check(&m, &l));
            }
        }
    }

    #[test]
    fn bruteforce_primitive_basis_is_reduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 3..=4 {
            for _ in 0..20 {
                let r = random_rotation(d, &mut rng).unwrap();
                let eigs: Vec<f64> = (0..d).map(|_| 10f64.powf(rng.random_range(-1.5..1.5))).collect();
                let m = spd_from_spectrum(&eigs, &r).unwrap();
                let b = minkowski_basis_bruteforce(&m).unwrap();
                assert_eq!(b.integer_det().unwrap().abs(), 1);
                let (l, _) = minkowski_minima_bruteforce(&m).unwrap();
                for (x, y) in b.norms().iter().zip(&l) {
                    assert_relative_eq!(*x, *y, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn sandwich_examples() {
        assert!(minkowski_sandwich_check(&SpdMatrix::identity(2).unwrap(), &[1.0, 1.0]));
        assert!(minkowski_sandwich_check(&SpdMatrix::diagonal(&[0.01, 100.0]).unwrap(), &[0.1, 10.0]));
        assert!(!minkowski_sandwich_check(&SpdMatrix::identity(2).unwrap(), &[1.0, 2.0]));
        assert!(!minkowski_sandwich_check(&SpdMatrix::identity(2).unwrap(), &[0.5, 1.0]));
    }

    #[test]
    fn lambda_d_below_top_eigen_sqrt() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in 2..=4 {
            for _ in 0..30 {
                let r = random_rotation(d, &mut rng).unwrap();
                let eigs: Vec<f64> = (0..d).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
                let m = spd_from_spectrum(&eigs, &r).unwrap();
                let b = reduce_basis(&m).unwrap();
                let nu = m.eigen_sqrt().unwrap();
                assert!(b.lambda_d() <= nu[d - 1] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn scaling_by_power_of_two_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for d in 2..=4 {
            let r = random_rotation(d, &mut rng).unwrap();
            let eigs: Vec<f64> = (0..d).map(|_| 10f64.powf(rng.random_range(-2.0..2.0))).collect();
            let m = spd_from_spectrum(&eigs, &r).unwrap();
            let b = reduce_basis(&m).unwrap();
            let bs = reduce_basis(&m.scaled(16.0).unwrap()).unwrap();
            assert_eq!(b.vectors(), bs.vectors());
            for (x, y) in b.norms().iter().zip(bs.norms()) {
                assert_relative_eq!(4.0 * x, *y, max_relative = 1e-10);
            }
        }
    }
}
