//! Constant Riemannian metrics: symmetric positive definite matrices, the scalar
//! product and norm they induce, their spectrum, and Haar-distributed rotations.
//!
//! Dimensions are restricted to 2, 3 and 4. Every type here is a small `Copy` value
//! backed by fixed 4-wide arrays, so the solver hot loops never allocate.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 4;

/// Lattice coordinates are not allowed to grow beyond this magnitude.
pub const COORD_LIMIT: i64 = 1 << 62;

const JACOBI_MAX_SWEEPS: usize = 100;

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDim(dim))
    }
}

/// Anything with `dim` real coordinates.
pub trait Coords {
    fn dim(&self) -> usize;
    fn coord(&self, i: usize) -> f64;
}

/// A real vector of dimension at most 4.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealVector {
    dim: usize,
    c: [f64; MAX_DIM],
}

impl RealVector {
    pub fn new(components: &[f64]) -> Result<Self> {
        if components.is_empty() || components.len() > MAX_DIM {
            return Err(Error::UnsupportedDim(components.len()));
        }
        let mut c = [0.0; MAX_DIM];
        c[..components.len()].copy_from_slice(components);
        Ok(Self { dim: components.len(), c })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, c: [0.0; MAX_DIM] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = *self;
        for x in &mut out.c[..self.dim] {
            *x *= a;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            out.c[i] += other.c[i];
        }
        out
    }

    /// Euclidean length.
    pub fn euclidean_norm(&self) -> f64 {
        self.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl Coords for RealVector {
    fn dim(&self) -> usize {
        self.dim
    }
    fn coord(&self, i: usize) -> f64 {
        self.c[i]
    }
}

/// An element of the integer lattice ℤᵈ.
///
/// Ordering is lexicographic on the coordinates, which is the deterministic
/// tie-break used throughout the crate.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVector {
    dim: u8,
    c: [i64; MAX_DIM],
}

impl LatticeVector {
    pub fn new(components: &[i64]) -> Result<Self> {
        if components.is_empty() || components.len() > MAX_DIM {
            return Err(Error::UnsupportedDim(components.len()));
        }
        if components.iter().any(|x| x.abs() >= COORD_LIMIT) {
            return Err(Error::Overflow);
        }
        let mut c = [0; MAX_DIM];
        c[..components.len()].copy_from_slice(components);
        Ok(Self { dim: components.len() as u8, c })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim: dim as u8, c: [0; MAX_DIM] }
    }

    /// The `i`-th canonical basis vector.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zero(dim);
        v.c[i] = 1;
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn as_slice(&self) -> &[i64] {
        &self.c[..self.dim as usize]
    }


    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0)
    }

    pub fn to_real(&self) -> RealVector {
        let mut c = [0.0; MAX_DIM];
        for i in 0..self.dim() {
            c[i] = self.c[i] as f64;
        }
        RealVector { dim: self.dim(), c }
    }

    fn checked(c: [i64; MAX_DIM], dim: u8) -> Result<Self> {
        if c.iter().any(|x| x.abs() >= COORD_LIMIT) {
            Err(Error::Overflow)
        } else {
            Ok(Self { dim, c })
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        let mut c = [0; MAX_DIM];
        for i in 0..MAX_DIM {
            c[i] = self.c[i].checked_add(other.c[i]).ok_or(Error::Overflow)?;
        }
        Self::checked(c, self.dim)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        let mut c = [0; MAX_DIM];
        for i in 0..MAX_DIM {
            c[i] = self.c[i].checked_sub(other.c[i]).ok_or(Error::Overflow)?;
        }
        Self::checked(c, self.dim)
    }

    pub fn checked_scale(&self, a: i64) -> Result<Self> {
        let mut c = [0; MAX_DIM];
        for i in 0..MAX_DIM {
            c[i] = self.c[i].checked_mul(a).ok_or(Error::Overflow)?;
        }
        Self::checked(c, self.dim)
    }

    pub fn neg(&self) -> Self {
        let mut out = *self;
        for x in &mut out.c {
            *x = -*x;
        }
        out
    }

    /// Flips the sign so that the first non-zero coordinate is positive.
    pub fn sign_normalized(&self) -> Self {
        match self.as_slice().iter().find(|&&x| x != 0) {
            Some(&x) if x < 0 => self.neg(),
            _ => *self,
        }
    }

    /// Sup-norm.
    pub fn max_abs(&self) -> i64 {
        self.as_slice().iter().map(|x| x.abs()).max().unwrap_or(0)
    }
}

impl Coords for LatticeVector {
    fn dim(&self) -> usize {
        self.dim as usize
    }
    fn coord(&self, i: usize) -> f64 {
        self.c[i] as f64
    }
}

impl fmt::Debug for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.as_slice().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

// Error-free transformations used by the compensated dot product.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Sum of `xs[k] * ys[k]` evaluated as if in twice the working precision.
fn dot2(xs: &[f64], ys: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let (p, ep) = two_prod(x, y);
        let (t, es) = two_sum(s, p);
        s = t;
        c += ep + es;
    }
    s + c
}

/// A symmetric positive definite matrix of size 2, 3 or 4.
///
/// Immutable after construction. The constructor checks exact symmetry and runs a
/// Cholesky factorization whose pivots must exceed `1e-14 * max|entry|`.
#[derive(Clone, Copy, PartialEq)]
pub struct SpdMatrix {
    dim: usize,
    a: [[f64; MAX_DIM]; MAX_DIM],
}

impl fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.dim).map(|i| &self.a[i][..self.dim]).collect();
        f.debug_struct("SpdMatrix").field("rows", &rows).finish()
    }
}

impl SpdMatrix {
    /// Builds a matrix from its rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        let mut a = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            a[i][..dim].copy_from_slice(row);
        }
        Self::from_array(dim, a)
    }

    pub(crate) fn from_array(dim: usize, a: [[f64; MAX_DIM]; MAX_DIM]) -> Result<Self> {
        check_dim(dim)?;
        for i in 0..dim {
            for j in 0..i {
                if a[i][j] != a[j][i] {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        if a.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        let m = Self { dim, a };
        m.cholesky_pivots()?;
        Ok(m)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let dim = entries.len();
        check_dim(dim)?;
        let mut a = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, &x) in entries.iter().enumerate() {
            a[i][i] = x;
        }
        Self::from_array(dim, a)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.a[i][..self.dim].to_vec()).collect()
    }

    fn max_abs_entry(&self) -> f64 {
        self.a.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    fn cholesky_pivots(&self) -> Result<Vec<f64>> {
        let d = self.dim;
        let threshold = 1e-14 * self.max_abs_entry();
        let mut l = [[0.0; MAX_DIM]; MAX_DIM];
        let mut pivots = Vec::with_capacity(d);
        for j in 0..d {
            let mut diag = self.a[j][j];
            for k in 0..j {
                diag -= l[j][k] * l[j][k];
            }
            if !(diag > threshold) {
                return Err(Error::NotPositiveDefinite { row: j, pivot: diag });
            }
            pivots.push(diag);
            let ljj = diag.sqrt();
            l[j][j] = ljj;
            for i in j + 1..d {
                let mut s = self.a[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                l[i][j] = s / ljj;
            }
        }
        Ok(pivots)
    }

    /// Determinant, as the product of the Cholesky pivots.
    pub fn det(&self) -> f64 {
        self.cholesky_pivots()
            .expect("validated at construction")
            .iter()
            .product()
    }

    fn check_operand<V: Coords>(&self, v: &V) -> Result<()> {
        if v.dim() != self.dim {
            Err(Error::DimensionMismatch { expected: self.dim, found: v.dim() })
        } else {
            Ok(())
        }
    }

    /// The scalar product `uᵀ M v`.
    pub fn m_dot<U: Coords, V: Coords>(&self, u: &U, v: &V) -> Result<f64> {
        self.check_operand(u)?;
        self.check_operand(v)?;
        let mut s = 0.0;
        for i in 0..self.dim {
            let mut row = 0.0;
            for j in 0..self.dim {
                row += self.a[i][j] * v.coord(j);
            }
            s += u.coord(i) * row;
        }
        Ok(s)
    }

    /// The norm `√(uᵀ M u)`.
    pub fn m_norm<U: Coords>(&self, u: &U) -> Result<f64> {
        Ok(self.m_dot(u, u)?.max(0.0).sqrt())
    }

    /// `uᵀ M v` for lattice vectors, accumulated with error-free transformations.
    ///
    /// Integer products are exact in f64 for the coordinate ranges used here, so the
    /// only rounding comes from the entries of `M`; cancellation between large terms
    /// (highly anisotropic metrics) does not destroy the result.
    #[inline]
    pub fn lattice_dot(&self, u: &LatticeVector, v: &LatticeVector) -> f64 {
        let d = self.dim;
        let mut xs = [0.0; MAX_DIM * MAX_DIM];
        let mut ys = [0.0; MAX_DIM * MAX_DIM];
        let mut k = 0;
        for i in 0..d {
            for j in 0..d {
                xs[k] = (u.c[i] as f64) * (v.c[j] as f64);
                ys[k] = self.a[i][j];
                k += 1;
            }
        }
        dot2(&xs[..k], &ys[..k])
    }

    #[inline]
    pub fn lattice_norm2(&self, u: &LatticeVector) -> f64 {
        self.lattice_dot(u, u).max(0.0)
    }

    #[inline]
    pub fn lattice_norm(&self, u: &LatticeVector) -> f64 {
        self.lattice_norm2(u).sqrt()
    }

    /// Eigenvalues (ascending) and matching unit eigenvectors, by cyclic Jacobi.
    pub fn eigen(&self) -> Result<(Vec<f64>, Vec<RealVector>)> {
        let d = self.dim;
        let mut a = self.a;
        let mut v = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let threshold = 1e-14 * self.max_abs_entry();
        let mut converged = false;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off = (0..d)
                .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
                .fold(0.0_f64, |m, (i, j)| m.max(a[i][j].abs()));
            if off <= threshold {
                converged = true;
                break;
            }
            for p in 0..d {
                for q in p + 1..d {
                    let apq = a[p][q];
                    if apq.abs() <= threshold {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                    for row in v.iter_mut().take(d) {
                        let vkp = row[p];
                        let vkq = row[q];
                        row[p] = c * vkp - s * vkq;
                        row[q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        if !converged {
            return Err(Error::EigenNonConvergence(JACOBI_MAX_SWEEPS));
        }
        let mut pairs: Vec<(f64, RealVector)> = (0..d)
            .map(|j| {
                let col: Vec<f64> = (0..d).map(|i| v[i][j]).collect();
                (a[j][j], RealVector::new(&col).expect("dim checked"))
            })
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        Ok(pairs.into_iter().unzip())
    }

    /// Square roots of the eigenvalues, ascending: `ν₁ ≤ … ≤ ν_d`.
    pub fn eigen_sqrt(&self) -> Result<Vec<f64>> {
        let (values, _) = self.eigen()?;
        values
            .into_iter()
            .map(|x| if x > 0.0 { Ok(x.sqrt()) } else { Err(Error::NonPositiveEigenvalue(x)) })
            .collect()
    }

    /// `κ(M) = √(‖M‖‖M⁻¹‖) = ν_d / ν₁`.
    pub fn anisotropy_ratio(&self) -> Result<f64> {
        let nu = self.eigen_sqrt()?;
        Ok(nu[nu.len() - 1] / nu[0])
    }

    /// `Rᵀ M R`.
    pub fn conjugate(&self, r: &Rotation) -> Result<SpdMatrix> {
        if r.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: r.dim });
        }
        let d = self.dim;
        let mut out = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..d {
            for j in i..d {
                let mut s = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        s += r.r[k][i] * self.a[k][l] * r.r[l][j];
                    }
                }
                out[i][j] = s;
                out[j][i] = s;
            }
        }
        SpdMatrix::from_array(d, out)
    }

    /// `factor · M`.
    pub fn scaled(&self, factor: f64) -> Result<SpdMatrix> {
        if !(factor > 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor {factor} must be positive")));
        }
        let mut a = self.a;
        for x in a.iter_mut().flatten() {
            *x *= factor;
        }
        SpdMatrix::from_array(self.dim, a)
    }
}

/// Free-function form of [`SpdMatrix::m_dot`].
pub fn m_dot<U: Coords, V: Coords>(m: &SpdMatrix, u: &U, v: &V) -> Result<f64> {
    m.m_dot(u, v)
}

/// Free-function form of [`SpdMatrix::m_norm`].
pub fn m_norm<U: Coords>(m: &SpdMatrix, u: &U) -> Result<f64> {
    m.m_norm(u)
}

/// An orthogonal matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    dim: usize,
    r: [[f64; MAX_DIM]; MAX_DIM],
}

impl Rotation {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        let mut r = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            r[i][..dim].copy_from_slice(row);
        }
        let rot = Self { dim, r };
        let dev = rot.orthogonality_defect();
        if dev > 1e-12 {
            return Err(Error::NotOrthogonal(dev));
        }
        Ok(rot)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut r = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in r.iter_mut().enumerate().take(dim) {
            row[i] = 1.0;
        }
        Ok(Self { dim, r })
    }

    /// Planar rotation of angle `theta`: `[[cos, -sin], [sin, cos]]`.
    pub fn planar(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let mut r = [[0.0; MAX_DIM]; MAX_DIM];
        r[0][0] = c;
        r[0][1] = -s;
        r[1][0] = s;
        r[1][1] = c;
        Self { dim: 2, r }
    }

    /// The 2D rotation whose first row is `axis / |axis|`.
    ///
    /// With this choice, `Rᵀ diag(e₁, e₂) R` has eigenvector `axis` for `e₁`.
    pub fn from_axis_2d(axis: [f64; 2]) -> Result<Self> {
        let len = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::InvalidArgument("axis must be a non-zero finite vector".into()));
        }
        let (c, s) = (axis[0] / len, axis[1] / len);
        Self::from_rows(&[vec![c, s], vec![-s, c]])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.r[i][j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.r[i][..self.dim].to_vec()).collect()
    }

    /// Largest entry of `|RᵀR - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let s: f64 = (0..d).map(|k| self.r[k][i] * self.r[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    pub fn det(&self) -> f64 {
        let d = self.dim;
        let mut a = self.r;
        let mut det = 1.0;
        for col in 0..d {
            let piv = (col..d)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .expect("non-empty range");
            if a[piv][col] == 0.0 {
                return 0.0;
            }
            if piv != col {
                a.swap(piv, col);
                det = -det;
            }
            det *= a[col][col];
            for row in col + 1..d {
                let f = a[row][col] / a[col][col];
                for k in col..d {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
        det
    }

    pub fn transpose(&self) -> Self {
        let mut r = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in r.iter_mut().enumerate().take(self.dim) {
            for (j, x) in row.iter_mut().enumerate().take(self.dim) {
                *x = self.r[j][i];
            }
        }
        Self { dim: self.dim, r }
    }

    pub fn apply(&self, v: &RealVector) -> RealVector {
        let mut out = RealVector::zeros(self.dim);
        for i in 0..self.dim {
            out.c[i] = (0..self.dim).map(|j| self.r[i][j] * v.c[j]).sum();
        }
        out
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        let d = self.dim;
        let mut r = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in r.iter_mut().enumerate().take(d) {
            for (j, x) in row.iter_mut().enumerate().take(d) {
                *x = (0..d).map(|k| self.r[i][k] * other.r[k][j]).sum();
            }
        }
        Rotation { dim: d, r }
    }
}

/// Draws an orthogonal matrix from the Haar measure on `O(dim)`.
///
/// Gram–Schmidt applied to the columns of a standard Gaussian matrix, which is the
/// QR factorization normalized to a positive triangular diagonal.
pub fn random_rotation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Rotation> {
    check_dim(dim)?;
    loop {
        let mut cols = [[0.0; MAX_DIM]; MAX_DIM];
        for col in cols.iter_mut().take(dim) {
            for x in col.iter_mut().take(dim) {
                *x = rng.sample(StandardNormal);
            }
        }
        let mut ok = true;
        for j in 0..dim {
            // two passes of modified Gram-Schmidt keep RᵀR within 1e-15 of I
            for _ in 0..2 {
                for k in 0..j {
                    let p: f64 = (0..dim).map(|i| cols[j][i] * cols[k][i]).sum();
                    for i in 0..dim {
                        cols[j][i] -= p * cols[k][i];
                    }
                }
            }
            let len: f64 = cols[j][..dim].iter().map(|x| x * x).sum::<f64>().sqrt();
            if len < 1e-8 {
                ok = false;
                break;
            }
            for x in cols[j].iter_mut().take(dim) {
                *x /= len;
            }
        }
        if !ok {
            continue;
        }
        let mut r = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in r.iter_mut().enumerate().take(dim) {
            for (j, x) in row.iter_mut().enumerate().take(dim) {
                *x = cols[j][i];
            }
        }
        return Ok(Rotation { dim, r });
    }
}

/// `Rᵀ · diag(eigs) · R`, symmetrized exactly.
pub fn spd_from_spectrum(eigs: &[f64], r: &Rotation) -> Result<SpdMatrix> {
    let d = eigs.len();
    check_dim(d)?;
    if r.dim != d {
        return Err(Error::DimensionMismatch { expected: d, found: r.dim });
    }
    if let Some(&bad) = eigs.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::NonPositiveEigenvalue(bad));
    }
    let mut a = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..d {
        for j in i..d {
            let s: f64 = (0..d).map(|k| r.r[k][i] * eigs[k] * r.r[k][j]).sum();
            a[i][j] = s;
            a[j][i] = s;
        }
    }
    SpdMatrix::from_array(d, a)
}
