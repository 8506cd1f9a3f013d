//! Dense square-matrix kernels.
//!
//! Matrices are small (order at most [`MAX_ORDER`]) and stored inline in
//! row-major order, so every kernel runs without heap allocation. The
//! exponential uses scaling and squaring around a degree-13 Padé
//! approximant; the principal logarithm uses inverse scaling and squaring
//! with Denman–Beavers square roots and a Gregory series core.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported matrix order.
pub const MAX_ORDER: usize = 8;

const CAP: usize = MAX_ORDER * MAX_ORDER;

/// An `n x n` real matrix, row-major.
#[derive(Clone, Copy)]
pub struct SquareMatrix {
    n: usize,
    data: [f64; CAP],
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_ORDER).contains(&n), "matrix order {n} outside 1..={MAX_ORDER}");
        SquareMatrix { n, data: [0.0; CAP] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from `n * n` row-major entries.
    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: entries.len() });
        }
        let mut m = Self::zeros(n);
        m.data[..n * n].copy_from_slice(entries);
        Ok(m)
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            assert_eq!(r.len(), n, "row {i} has wrong length");
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.n
    }

    /// Row-major entries.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.n * self.n]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        let nn = self.n * self.n;
        &mut self.data[..nn]
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[j * n + i] = self.data[i * n + j];
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        let n = self.n;
        (0..n).map(|j| (0..n).map(|i| self.data[i * n + j].abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.as_mut_slice().iter_mut().for_each(|x| *x *= s);
        out
    }

    /// Copies the top-left `k x k` block.
    pub fn block(&self, k: usize) -> Self {
        let mut b = Self::zeros(k);
        for i in 0..k {
            for j in 0..k {
                b.data[i * k + j] = self[(i, j)];
            }
        }
        b
    }

    /// Matrix inverse by Gauss–Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let mut a = *self;
        let mut inv = Self::identity(n);
        let scale = self.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !scale.is_finite() {
            return Err(Error::NonFinite);
        }
        if scale == 0.0 {
            return Err(Error::Singular);
        }
        let tiny = scale * f64::EPSILON * (n as f64) * 1e-3;
        for col in 0..n {
            let mut piv = col;
            let mut best = a.data[col * n + col].abs();
            for r in col + 1..n {
                let v = a.data[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= tiny {
                return Err(Error::Singular);
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                    inv.data.swap(col * n + j, piv * n + j);
                }
            }
            let p = 1.0 / a.data[col * n + col];
            for j in 0..n {
                a.data[col * n + j] *= p;
                inv.data[col * n + j] *= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.data[r * n + col];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a.data[r * n + j] -= f * a.data[col * n + j];
                    inv.data[r * n + j] -= f * inv.data[col * n + j];
                }
            }
        }
        Ok(inv)
    }

    /// Determinant by LU with partial pivoting.
    pub fn determinant(&self) -> f64 {
        let n = self.n;
        let mut a = *self;
        let mut det = 1.0;
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a.data[r * n + col].abs() > a.data[piv * n + col].abs() {
                    piv = r;
                }
            }
            let p = a.data[piv * n + col];
            if p == 0.0 {
                return 0.0;
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                }
                det = -det;
            }
            det *= p;
            for r in col + 1..n {
                let f = a.data[r * n + col] / p;
                for j in col..n {
                    a.data[r * n + j] -= f * a.data[col * n + j];
                }
            }
        }
        det
    }

    /// Solves `self * X = rhs`.
    fn solve(&self, rhs: &Self) -> Result<Self> {
        Ok(self.inverse()? * *rhs)
    }

    fn check_same_order(&self, other: &Self) {
        assert_eq!(self.n, other.n, "matrix order mismatch");
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.n && j < self.n);
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.n && j < self.n);
        &mut self.data[i * self.n + j]
    }
}

impl PartialEq for SquareMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.as_slice() == other.as_slice()
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n;
        let rows: Vec<&[f64]> = (0..n).map(|i| &self.data[i * n..(i + 1) * n]).collect();
        f.debug_list().entries(rows).finish()
    }
}

impl Mul for SquareMatrix {
    type Output = SquareMatrix;
    #[inline]
    fn mul(self, rhs: SquareMatrix) -> SquareMatrix {
        &self * &rhs
    }
}

impl Mul<&SquareMatrix> for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        self.check_same_order(rhs);
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Mul<f64> for SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, s: f64) -> SquareMatrix {
        self.scale(s)
    }
}

impl Add for SquareMatrix {
    type Output = SquareMatrix;
    fn add(mut self, rhs: SquareMatrix) -> SquareMatrix {
        self += rhs;
        self
    }
}

impl AddAssign for SquareMatrix {
    fn add_assign(&mut self, rhs: SquareMatrix) {
        self.check_same_order(&rhs);
        let nn = self.n * self.n;
        for (a, b) in self.data[..nn].iter_mut().zip(&rhs.data[..nn]) {
            *a += b;
        }
    }
}

impl Sub for SquareMatrix {
    type Output = SquareMatrix;
    fn sub(mut self, rhs: SquareMatrix) -> SquareMatrix {
        self.check_same_order(&rhs);
        let nn = self.n * self.n;
        for (a, b) in self.data[..nn].iter_mut().zip(&rhs.data[..nn]) {
            *a -= b;
        }
        self
    }
}

impl Neg for SquareMatrix {
    type Output = SquareMatrix;
    fn neg(self) -> SquareMatrix {
        self.scale(-1.0)
    }
}

/// Frobenius norm, `sqrt(sum a_ij^2)`.
pub fn frobenius_norm(a: &SquareMatrix) -> f64 {
    a.frobenius_norm()
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// 1-norm bound below which the unscaled [13/13] approximant is accurate to
// unit roundoff (Higham 2005).
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a [13/13] Padé core.
pub fn mat_exp(a: &SquareMatrix) -> Result<SquareMatrix> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = a.order();
    let norm = a.norm_1();
    if norm == 0.0 {
        return Ok(SquareMatrix::identity(n));
    }
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil().max(0.0) as i32 } else { 0 };
    let a = a.scale(0.5f64.powi(squarings));

    let b = &PADE13;
    let id = SquareMatrix::identity(n);
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;

    let u_inner = a6 * (a6 * b[13] + a4 * b[11] + a2 * b[9]) + a6 * b[7] + a4 * b[5] + a2 * b[3] + id * b[1];
    let u = a * u_inner;
    let v = a6 * (a6 * b[12] + a4 * b[10] + a2 * b[8]) + a6 * b[6] + a4 * b[4] + a2 * b[2] + id * b[0];

    let mut r = (v - u).solve(&(v + u))?;
    for _ in 0..squarings {
        r = r * r;
    }
    if !r.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(r)
}

/// Principal square root by the determinant-scaled Denman–Beavers iteration.
///
/// Fails with [`Error::PrincipalBranchUndefined`] when the iteration breaks
/// down, which happens for eigenvalues on the closed negative real axis.
pub fn sqrtm(a: &SquareMatrix) -> Result<SquareMatrix> {
    let n = a.order();
    let branch = |_| Error::PrincipalBranchUndefined;
    let mut y = *a;
    let mut z = SquareMatrix::identity(n);
    let mut last_delta = f64::INFINITY;
    for _ in 0..100 {
        let yi = y.inverse().map_err(branch)?;
        let zi = z.inverse().map_err(branch)?;
        // Determinant scaling speeds up the early phase; near the fixed point
        // it is dropped to keep quadratic convergence.
        let scaled = last_delta > 1e-2;
        let g = if scaled {
            let d = (y.determinant() * z.determinant()).abs();
            if d > 0.0 && d.is_finite() {
                d.powf(-1.0 / (2.0 * n as f64))
            } else {
                1.0
            }
        } else {
            1.0
        };
        let y_next = (y * g + zi * (1.0 / g)) * 0.5;
        let z_next = (z * g + yi * (1.0 / g)) * 0.5;
        if !y_next.is_finite() || !z_next.is_finite() {
            return Err(Error::PrincipalBranchUndefined);
        }
        let delta = (y_next - y).frobenius_norm() / y_next.frobenius_norm();
        y = y_next;
        z = z_next;
        if !scaled && (delta <= 1e-15 || (delta <= 1e-11 && delta >= last_delta)) {
            return Ok(y);
        }
        if !scaled && delta <= 1e-8 {
            // quadratic convergence: the next update is below roundoff
            let zi = z.inverse().map_err(branch)?;
            return Ok((y + zi) * 0.5);
        }
        last_delta = delta;
    }
    Err(Error::PrincipalBranchUndefined)
}

/// Principal matrix logarithm by inverse scaling and squaring.
pub fn mat_log(z: &SquareMatrix) -> Result<SquareMatrix> {
    if !z.is_finite() {
        return Err(Error::NonFinite);
    }
    if touches_negative_axis(z) {
        return Err(Error::PrincipalBranchUndefined);
    }
    let n = z.order();
    let id = SquareMatrix::identity(n);
    let mut x = *z;
    let mut roots = 0;
    while (x - id).norm_1() > 0.25 {
        if roots >= 64 {
            return Err(Error::PrincipalBranchUndefined);
        }
        x = sqrtm(&x)?;
        roots += 1;
    }

    // log X = 2 atanh(W),  W = (X - I)(X + I)^-1
    let w = (x + id).inverse().map_err(|_| Error::PrincipalBranchUndefined).map(|inv| (x - id) * inv)?;
    let w2 = w * w;
    let mut term = w;
    let mut sum = w;
    for k in 1..40 {
        term = term * w2;
        let contrib = term * (1.0 / (2 * k + 1) as f64);
        sum += contrib;
        if k >= 15 && contrib.frobenius_norm() <= 1e-18 * sum.frobenius_norm().max(1e-300) {
            break;
        }
    }
    let log = sum * (2.0 * f64::powi(2.0, roots));
    if !log.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(log)
}

/// Eigenvalues from the characteristic polynomial (Faddeev–LeVerrier) and
/// Durand–Kerner root finding. Only meant for the small orders used here.
pub fn eigenvalues(a: &SquareMatrix) -> Vec<Complex64> {
    let n = a.order();
    // monic coefficients c[0] = 1, det(tI - A) = sum c[k] t^(n-k)
    let mut coeffs = vec![1.0; n + 1];
    let mut m = SquareMatrix::zeros(n);
    let id = SquareMatrix::identity(n);
    for k in 1..=n {
        m = a * &(m + id * coeffs[k - 1]);
        coeffs[k] = -m.trace() / k as f64;
    }
    let bound = 1.0 + coeffs[1..].iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * bound).collect();
    let eval = |t: Complex64| coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * t + c);
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(f64::EPSILON, 0.0);
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved <= 1e-15 * bound {
            break;
        }
    }
    roots
}

// An eigenvalue within a relative angle of 1e-6 of the closed negative real
// axis, or a numerically vanishing one, leaves the principal log undefined.
fn touches_negative_axis(z: &SquareMatrix) -> bool {
    let scale = z.frobenius_norm();
    eigenvalues(z).iter().any(|l| {
        let r = l.norm();
        r <= 1e-12 * scale || (l.re < 0.0 && l.im.abs() <= 1e-6 * r)
    })
}
