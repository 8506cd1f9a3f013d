//! Matrix Lie groups, their algebra coordinates, and the differential
//! operators used by the controller.
//!
//! Three groups ship: the translation group `T(m)` (as `(m+1) x (m+1)`
//! homogeneous matrices), `SO(3)` and `SE(3)`. Twist coordinates follow the
//! basis `E_k` held by each [`Group`]; for `SE(3)` the twist is `[v; w]`
//! (linear part first), matching
//!
//! ```text
//! S[xi] = [  0   -xi6  xi5  xi1 ]
//!         [ xi6   0   -xi4  xi2 ]
//!         [-xi5  xi4   0    xi3 ]
//!         [  0    0    0    0   ]
//! ```

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::matrix::{mat_exp, SquareMatrix, MAX_ORDER};

/// Tolerance on the membership residual of a [`GroupElement`].
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Drift above which [`group_exp_step`] re-projects the rotation block.
pub const REORTHO_TRIGGER: f64 = 1e-10;

/// Default step of the numerical L operator.
pub const L_OPERATOR_EPS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    /// Translations of `R^m`, stored as homogeneous matrices of order `m+1`.
    Translation(usize),
    SO3,
    SE3,
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::Translation(m) => write!(f, "T({m})"),
            GroupKind::SO3 => write!(f, "SO3"),
            GroupKind::SE3 => write!(f, "SE3"),
        }
    }
}

/// Coordinates of a Lie algebra element in a group's basis.
#[derive(Clone, Copy, PartialEq)]
pub struct Twist {
    len: usize,
    data: [f64; MAX_ORDER],
}

impl Twist {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_ORDER, "twist dimension {len} too large");
        Twist { len, data: [0.0; MAX_ORDER] }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        let mut t = Self::zeros(v.len());
        t.data[..v.len()].copy_from_slice(v);
        t
    }

    /// The `k`-th standard unit vector of length `len`.
    pub fn unit(len: usize, k: usize) -> Self {
        let mut t = Self::zeros(len);
        t.data[k] = 1.0;
        t
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.len]
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Twist) -> f64 {
        assert_eq!(self.len, other.len, "twist length mismatch");
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for Twist {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Twist {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        let len = self.len;
        &mut self.data[..len][i]
    }
}

impl fmt::Debug for Twist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Add for Twist {
    type Output = Twist;
    fn add(mut self, rhs: Twist) -> Twist {
        assert_eq!(self.len, rhs.len, "twist length mismatch");
        for i in 0..self.len {
            self.data[i] += rhs.data[i];
        }
        self
    }
}

impl Sub for Twist {
    type Output = Twist;
    fn sub(self, rhs: Twist) -> Twist {
        self + (-rhs)
    }
}

impl Mul<f64> for Twist {
    type Output = Twist;
    fn mul(mut self, s: f64) -> Twist {
        self.data[..self.len].iter_mut().for_each(|x| *x *= s);
        self
    }
}

impl Neg for Twist {
    type Output = Twist;
    fn neg(self) -> Twist {
        self * -1.0
    }
}

/// A matrix that has passed a group's membership test.
#[derive(Clone, Copy, PartialEq)]
pub struct GroupElement(SquareMatrix);

impl GroupElement {
    /// Wraps a matrix without checking membership.
    pub fn new_unchecked(m: SquareMatrix) -> Self {
        GroupElement(m)
    }

    #[inline]
    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.0
    }

    pub fn compose(&self, rhs: &GroupElement) -> GroupElement {
        GroupElement(self.0 * rhs.0)
    }

    /// Inverse; affine groups use the closed form `[R^T, -R^T t]`.
    pub fn inverse(&self) -> GroupElement {
        let m = &self.0;
        let n = m.order();
        let affine = (0..n - 1).all(|j| m[(n - 1, j)] == 0.0) && m[(n - 1, n - 1)] == 1.0;
        if affine && n > 1 {
            // The rotation block of every shipped group is orthogonal.
            let k = n - 1;
            let mut inv = SquareMatrix::identity(n);
            for i in 0..k {
                for j in 0..k {
                    inv[(i, j)] = m[(j, i)];
                }
            }
            for i in 0..k {
                inv[(i, k)] = -(0..k).map(|j| m[(j, i)] * m[(j, k)]).sum::<f64>();
            }
            GroupElement(inv)
        } else {
            GroupElement(m.inverse().expect("group elements are invertible"))
        }
    }

    /// Rotation block `Q` of an `SO(3)`/`SE(3)` element.
    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let m = &self.0;
        let mut q = [[0.0; 3]; 3];
        for (i, row) in q.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = m[(i, j)];
            }
        }
        q
    }

    /// Last column without the homogeneous 1 (translation of affine groups).
    pub fn translation(&self) -> Vec<f64> {
        let n = self.0.order();
        (0..n - 1).map(|i| self.0[(i, n - 1)]).collect()
    }

    /// `SE(3)` element from a rotation and a translation.
    pub fn se3(rotation: [[f64; 3]; 3], translation: [f64; 3]) -> Self {
        let mut m = SquareMatrix::identity(4);
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = rotation[i][j];
            }
            m[(i, 3)] = translation[i];
        }
        GroupElement(m)
    }

    /// `T(m)` element from a translation vector.
    pub fn translation_element(t: &[f64]) -> Self {
        let n = t.len() + 1;
        let mut m = SquareMatrix::identity(n);
        for (i, v) in t.iter().enumerate() {
            m[(i, n - 1)] = *v;
        }
        GroupElement(m)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Group metadata: matrix order, algebra dimension, basis and the
/// precomputed pseudo-inverse used by the inverse S map.
#[derive(Clone, Debug)]
pub struct Group {
    kind: GroupKind,
    basis: Vec<SquareMatrix>,
    // m x n^2, row-major
    pinv: Vec<f64>,
}

impl Group {
    pub fn new(kind: GroupKind) -> Self {
        let basis: Vec<SquareMatrix> = match kind {
            GroupKind::Translation(m) => {
                assert!((1..MAX_ORDER).contains(&m), "translation dimension {m} unsupported");
                (0..m)
                    .map(|k| {
                        let mut e = SquareMatrix::zeros(m + 1);
                        e[(k, m)] = 1.0;
                        e
                    })
                    .collect()
            }
            GroupKind::SO3 => (0..3).map(|k| skew(&unit3(k))).collect(),
            GroupKind::SE3 => (0..6)
                .map(|k| {
                    let mut e = SquareMatrix::zeros(4);
                    if k < 3 {
                        e[(k, 3)] = 1.0;
                    } else {
                        let s = skew(&unit3(k - 3));
                        for i in 0..3 {
                            for j in 0..3 {
                                e[(i, j)] = s[(i, j)];
                            }
                        }
                    }
                    e
                })
                .collect(),
        };
        let pinv = pseudo_inverse(&basis);
        Group { kind, basis, pinv }
    }

    pub fn se3() -> Self {
        Self::new(GroupKind::SE3)
    }

    pub fn so3() -> Self {
        Self::new(GroupKind::SO3)
    }

    pub fn translation(m: usize) -> Self {
        Self::new(GroupKind::Translation(m))
    }

    #[inline]
    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    /// Matrix order `n`.
    pub fn order(&self) -> usize {
        self.basis[0].order()
    }

    /// Algebra dimension `m`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[SquareMatrix] {
        &self.basis
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(SquareMatrix::identity(self.order()))
    }

    /// `S[zeta] = sum zeta_k E_k`.
    pub fn s_map(&self, zeta: &Twist) -> Result<SquareMatrix> {
        if zeta.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: zeta.len() });
        }
        let mut out = SquareMatrix::zeros(self.order());
        for (e, z) in self.basis.iter().zip(zeta.as_slice()) {
            if *z != 0.0 {
                out += *e * *z;
            }
        }
        Ok(out)
    }

    /// Least-squares twist coordinates of `a` and the Frobenius residual of
    /// the fit.
    pub fn project(&self, a: &SquareMatrix) -> Result<(Twist, f64)> {
        let n = self.order();
        if a.order() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.order() });
        }
        let nn = n * n;
        let flat = a.as_slice();
        let mut zeta = Twist::zeros(self.dim());
        for k in 0..self.dim() {
            zeta[k] = self.pinv[k * nn..(k + 1) * nn].iter().zip(flat).map(|(p, x)| p * x).sum();
        }
        let residual = (self.s_map(&zeta)? - *a).frobenius_norm();
        Ok((zeta, residual))
    }

    /// Inverse S map by projection onto the basis. Fails when the matrix is
    /// not (numerically) in the algebra span.
    pub fn s_inv(&self, a: &SquareMatrix) -> Result<Twist> {
        let (zeta, residual) = self.project(a)?;
        if !(residual <= 1e-6 * (1.0 + a.frobenius_norm())) {
            return Err(Error::NotInAlgebraSpan { residual });
        }
        Ok(zeta)
    }

    /// Distance of a matrix from the group's defining constraints.
    ///
    /// Returns `+inf` for orientation-reversing rotation blocks.
    pub fn membership_residual(&self, m: &SquareMatrix) -> f64 {
        let n = self.order();
        if m.order() != n || !m.is_finite() {
            return f64::INFINITY;
        }
        let last_row: f64 = (0..n)
            .map(|j| {
                let target = if j == n - 1 { 1.0 } else { 0.0 };
                (m[(n - 1, j)] - target).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        match self.kind {
            GroupKind::Translation(k) => {
                let block = m.block(k) - SquareMatrix::identity(k);
                block.frobenius_norm() + last_row
            }
            GroupKind::SO3 => rotation_residual(m),
            GroupKind::SE3 => rotation_residual(&m.block(3)) + last_row,
        }
    }

    /// Validates membership and wraps the matrix.
    pub fn element(&self, m: SquareMatrix) -> Result<GroupElement> {
        let residual = self.membership_residual(&m);
        if residual <= MEMBERSHIP_TOL {
            Ok(GroupElement(m))
        } else {
            Err(Error::OffGroup { residual })
        }
    }

    /// `exp(S[zeta])` in closed form.
    pub fn exp(&self, zeta: &Twist) -> Result<GroupElement> {
        if !zeta.is_finite() {
            return Err(Error::NonFinite);
        }
        if zeta.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: zeta.len() });
        }
        Ok(match self.kind {
            GroupKind::Translation(_) => GroupElement::translation_element(zeta.as_slice()),
            GroupKind::SO3 => {
                let (r, _) = so3_exp_with_v(&[zeta[0], zeta[1], zeta[2]]);
                let mut m = SquareMatrix::identity(3);
                for i in 0..3 {
                    for j in 0..3 {
                        m[(i, j)] = r[i][j];
                    }
                }
                GroupElement(m)
            }
            GroupKind::SE3 => {
                let (r, v) = so3_exp_with_v(&[zeta[3], zeta[4], zeta[5]]);
                let lin = [zeta[0], zeta[1], zeta[2]];
                let mut t = [0.0; 3];
                for i in 0..3 {
                    t[i] = (0..3).map(|j| v[i][j] * lin[j]).sum();
                }
                GroupElement::se3(r, t)
            }
        })
    }

    /// Closed-form logarithm in twist coordinates. At half-turns, where
    /// the principal logarithm is undefined, a valid (non-principal) branch
    /// is returned.
    pub fn log(&self, g: &GroupElement) -> Twist {
        match self.kind {
            GroupKind::Translation(m) => Twist::from_slice(&g.translation()[..m]),
            GroupKind::SO3 => Twist::from_slice(&so3_log(&g.rotation())),
            GroupKind::SE3 => {
                let w = so3_log(&g.rotation());
                let t = g.translation();
                let vinv = so3_v_inverse(&w);
                let mut out = Twist::zeros(6);
                for i in 0..3 {
                    out[i] = (0..3).map(|j| vinv[i][j] * t[j]).sum();
                    out[i + 3] = w[i];
                }
                out
            }
        }
    }

    /// Projects the rotation block back onto `SO(3)` (polar factor) and
    /// resets the homogeneous row.
    pub fn reorthonormalize(&self, m: &SquareMatrix) -> SquareMatrix {
        let n = self.order();
        let mut out = *m;
        for j in 0..n - 1 {
            if self.kind != GroupKind::SO3 {
                out[(n - 1, j)] = 0.0;
            }
        }
        match self.kind {
            GroupKind::Translation(k) => {
                for i in 0..k {
                    for j in 0..k {
                        out[(i, j)] = if i == j { 1.0 } else { 0.0 };
                    }
                }
                out[(n - 1, n - 1)] = 1.0;
            }
            GroupKind::SO3 | GroupKind::SE3 => {
                let q = polar_factor(&m.block(3));
                for i in 0..3 {
                    for j in 0..3 {
                        out[(i, j)] = q[(i, j)];
                    }
                }
                if self.kind == GroupKind::SE3 {
                    out[(3, 3)] = 1.0;
                }
            }
        }
        out
    }
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// `S[zeta]` for the group.
pub fn s_map(g: &Group, zeta: &Twist) -> Result<SquareMatrix> {
    g.s_map(zeta)
}

/// `S^-1[A]` for the group.
pub fn s_inv(g: &Group, a: &SquareMatrix) -> Result<Twist> {
    g.s_inv(a)
}

/// The Ξ operator: `S^-1(dG/dσ · G(σ)^-1)`, with the derivative taken by a
/// central difference of step `h`.
pub fn xi_operator<F>(g: &Group, curve: F, sigma: f64, h: f64) -> Result<Twist>
where
    F: Fn(f64) -> Result<SquareMatrix>,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let fwd = curve(sigma + h)?;
    let bwd = curve(sigma - h)?;
    let here = curve(sigma)?;
    let deriv = (fwd - bwd) * (0.5 / h);
    let inv = here.inverse()?;
    g.s_inv(&(deriv * inv))
}

/// Numerical L operator (forward differences):
/// entry `j` is `(f(exp(S[e_j] eps) H) - f(H)) / eps`.
pub fn l_operator<F>(g: &Group, f: F, h: &GroupElement, eps: f64) -> Result<Twist>
where
    F: Fn(&GroupElement) -> f64,
{
    let base = f(h);
    if !base.is_finite() {
        return Err(Error::ObjectiveNonFinite);
    }
    let m = g.dim();
    let mut row = Twist::zeros(m);
    for j in 0..m {
        let step = g.exp(&(Twist::unit(m, j) * eps))?;
        let val = f(&step.compose(h));
        if !val.is_finite() {
            return Err(Error::ObjectiveNonFinite);
        }
        row[j] = (val - base) / eps;
    }
    Ok(row)
}

/// Central-difference variant of [`l_operator`], used as a test oracle.
pub fn l_operator_central<F>(g: &Group, f: F, h: &GroupElement, eps: f64) -> Result<Twist>
where
    F: Fn(&GroupElement) -> f64,
{
    let m = g.dim();
    let mut row = Twist::zeros(m);
    for j in 0..m {
        let plus = g.exp(&(Twist::unit(m, j) * eps))?;
        let minus = g.exp(&(Twist::unit(m, j) * -eps))?;
        let a = f(&plus.compose(h));
        let b = f(&minus.compose(h));
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::ObjectiveNonFinite);
        }
        row[j] = (a - b) / (2.0 * eps);
    }
    Ok(row)
}

/// Converts a fixed-frame twist to the body frame:
/// `xi' = S^-1(H^-1 S[xi] H)`, so that `S[xi] H = H S[xi']`.
pub fn body_frame_twist(g: &Group, h: &GroupElement, xi_fixed: &Twist) -> Result<Twist> {
    let s = g.s_map(xi_fixed)?;
    let conj = h.inverse().matrix() * &(&s * h.matrix());
    g.s_inv(&conj)
}

/// Exact flow of `dH/dt = S[xi] H` over `dt` with `xi` held constant.
pub fn group_exp_step(g: &Group, h: &GroupElement, xi: &Twist, dt: f64) -> Result<GroupElement> {
    assert!(dt >= 0.0, "dt must be non-negative");
    if dt == 0.0 {
        return Ok(*h);
    }
    let next = g.exp(&(*xi * dt))?.compose(h);
    if g.membership_residual(next.matrix()) > REORTHO_TRIGGER {
        Ok(GroupElement(g.reorthonormalize(next.matrix())))
    } else {
        Ok(next)
    }
}

/// Generic matrix-exponential route to `exp(S[zeta])`, independent of the
/// closed forms in [`Group::exp`].
pub fn exp_generic(g: &Group, zeta: &Twist) -> Result<SquareMatrix> {
    mat_exp(&g.s_map(zeta)?)
}

fn unit3(k: usize) -> [f64; 3] {
    let mut u = [0.0; 3];
    u[k] = 1.0;
    u
}

/// `[w]x`, the 3x3 cross-product matrix.
pub fn skew(w: &[f64; 3]) -> SquareMatrix {
    SquareMatrix::from_rows(&[[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
}

fn rotation_residual(m: &SquareMatrix) -> f64 {
    let q = m.block(3);
    if q.determinant() <= 0.0 {
        return f64::INFINITY;
    }
    (q.transpose() * q - SquareMatrix::identity(3)).frobenius_norm()
}

fn pseudo_inverse(basis: &[SquareMatrix]) -> Vec<f64> {
    let m = basis.len();
    let nn = basis[0].as_slice().len();
    let mut gram = SquareMatrix::zeros(m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = basis[i].as_slice().iter().zip(basis[j].as_slice()).map(|(a, b)| a * b).sum();
        }
    }
    let gi = gram.inverse().expect("basis must be linearly independent");
    let mut out = vec![0.0; m * nn];
    for k in 0..m {
        for (i, b) in basis.iter().enumerate() {
            let c = gi[(k, i)];
            for (o, x) in out[k * nn..(k + 1) * nn].iter_mut().zip(b.as_slice()) {
                *o += c * x;
            }
        }
    }
    out
}

fn polar_factor(q: &SquareMatrix) -> SquareMatrix {
    let id = SquareMatrix::identity(3);
    let mut x = *q;
    for _ in 0..20 {
        if (x.transpose() * x - id).frobenius_norm() <= 1e-15 {
            break;
        }
        match x.inverse() {
            Ok(inv) => x = (x + inv.transpose()) * 0.5,
            Err(_) => break,
        }
    }
    x
}

/// Rodrigues rotation together with the left Jacobian `V` that maps the
/// linear twist part to the translation of `exp(S[zeta])`.
fn so3_exp_with_v(w: &[f64; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let th2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    let th = th2.sqrt();
    let (a, b, c) = if th < 1e-4 {
        (1.0 - th2 / 6.0 + th2 * th2 / 120.0, 0.5 - th2 / 24.0 + th2 * th2 / 720.0, 1.0 / 6.0 - th2 / 120.0 + th2 * th2 / 5040.0)
    } else {
        let (s, co) = th.sin_cos();
        (s / th, (1.0 - co) / th2, (th - s) / (th2 * th))
    };
    let k = [[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]];
    let mut k2 = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k2[i][j] = (0..3).map(|l| k[i][l] * k[l][j]).sum();
        }
    }
    let mut r = [[0.0; 3]; 3];
    let mut v = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { 1.0 } else { 0.0 };
            r[i][j] = id + a * k[i][j] + b * k2[i][j];
            v[i][j] = id + b * k[i][j] + c * k2[i][j];
        }
    }
    (r, v)
}

/// Rotation angle in `[0, pi]` from `u = (tr Q - 1)/2`,
/// `v = |Q - Q^T|_F / (2 sqrt 2)` and `atan2(v, u)`.
pub fn rotation_angle(q: &[[f64; 3]; 3]) -> f64 {
    let u = 0.5 * (q[0][0] + q[1][1] + q[2][2] - 1.0);
    let a = q[2][1] - q[1][2];
    let b = q[0][2] - q[2][0];
    let c = q[1][0] - q[0][1];
    // |Q - Q^T|_F = sqrt(2 (a^2 + b^2 + c^2))
    let v = 0.5 * (a * a + b * b + c * c).sqrt();
    v.clamp(0.0, 1.0).atan2(u)
}

fn so3_log(q: &[[f64; 3]; 3]) -> [f64; 3] {
    let theta = rotation_angle(q);
    let vee = [q[2][1] - q[1][2], q[0][2] - q[2][0], q[1][0] - q[0][1]];
    if theta < 1e-8 {
        return [0.5 * vee[0], 0.5 * vee[1], 0.5 * vee[2]];
    }
    if theta < std::f64::consts::PI - 1e-4 {
        let f = theta / (2.0 * theta.sin());
        return [f * vee[0], f * vee[1], f * vee[2]];
    }
    // near a half-turn: axis from the symmetric part
    let cos = theta.cos();
    let mut aat = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let sym = 0.5 * (q[i][j] + q[j][i]) - if i == j { cos } else { 0.0 };
            aat[i][j] = sym / (1.0 - cos);
        }
    }
    let k = (0..3).max_by(|&a, &b| aat[a][a].partial_cmp(&aat[b][b]).unwrap()).unwrap();
    let d = aat[k][k].max(0.0).sqrt();
    let mut axis = [aat[0][k] / d, aat[1][k] / d, aat[2][k] / d];
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    axis.iter_mut().for_each(|x| *x /= norm);
    if axis[0] * vee[0] + axis[1] * vee[1] + axis[2] * vee[2] < 0.0 {
        axis.iter_mut().for_each(|x| *x = -*x);
    }
    [theta * axis[0], theta * axis[1], theta * axis[2]]
}

fn so3_v_inverse(w: &[f64; 3]) -> [[f64; 3]; 3] {
    let th2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    let th = th2.sqrt();
    let c = if th < 1e-4 { 1.0 / 12.0 + th2 / 720.0 } else { (1.0 - th * th.sin() / (2.0 * (1.0 - th.cos()))) / th2 };
    let k = [[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]];
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let k2: f64 = (0..3).map(|l| k[i][l] * k[l][j]).sum();
            out[i][j] = if i == j { 1.0 } else { 0.0 } - 0.5 * k[i][j] + c * k2;
        }
    }
    out
}
