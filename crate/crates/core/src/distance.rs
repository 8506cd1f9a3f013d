//! Element-to-element distance `D(V, W) = |log(V^-1 W)|_F`, its closed-form
//! `SE(3)` kernel, the path generating function `Phi`, and residual checks
//! for the structural properties the controller relies on.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::group::{rotation_angle, Group, GroupElement, GroupKind};
use crate::matrix::{mat_exp, mat_log, SquareMatrix};

/// Rotation angles closer than this to a half-turn are reported as
/// [`Branch::Boundary`].
pub const BOUNDARY_MARGIN: f64 = 1e-3;

// Below this angle alpha is evaluated from its Taylor series.
const ALPHA_SERIES_BELOW: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Principal,
    /// Rotation angle within [`BOUNDARY_MARGIN`] of `pi`, where the
    /// distance is not differentiable in the limit.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceDiagnostics {
    /// Rotation angle of `V^-1 W`, in `[0, pi]`.
    pub theta: f64,
    /// `t^T M t`.
    pub translation_norm_sq: f64,
    pub branch: Branch,
}

/// Rigid pose split into rotation and translation, used by the hot loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub r: [[f64; 3]; 3],
    pub t: [f64; 3],
}

impl Pose {
    pub fn from_matrix(m: &SquareMatrix) -> Self {
        let mut r = [[0.0; 3]; 3];
        let mut t = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = m[(i, j)];
            }
            t[i] = m[(i, 3)];
        }
        Pose { r, t }
    }
}

/// `V^-1` in a form that makes repeated `D(V, .)` evaluations cheap.
#[derive(Debug, Clone, Copy)]
pub struct Se3Anchor {
    rt: [[f64; 3]; 3],
    t: [f64; 3],
}

impl Se3Anchor {
    pub fn new(v: &Pose) -> Self {
        let mut rt = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                rt[i][j] = v.r[j][i];
            }
        }
        Se3Anchor { rt, t: v.t }
    }

    /// `D(V, W)` with its diagnostics.
    #[inline]
    pub fn distance_to(&self, w: &Pose) -> (f64, DistanceDiagnostics) {
        let mut q = [[0.0; 3]; 3];
        let mut t = [0.0; 3];
        let dt = [w.t[0] - self.t[0], w.t[1] - self.t[1], w.t[2] - self.t[2]];
        for i in 0..3 {
            for j in 0..3 {
                q[i][j] = self.rt[i][0] * w.r[0][j] + self.rt[i][1] * w.r[1][j] + self.rt[i][2] * w.r[2][j];
            }
            t[i] = self.rt[i][0] * dt[0] + self.rt[i][1] * dt[1] + self.rt[i][2] * dt[2];
        }
        se3_distance_qt(&q, &t)
    }
}

/// Closed-form distance for a relative pose `(Q, t)`.
#[inline]
pub fn se3_distance_qt(q: &[[f64; 3]; 3], t: &[f64; 3]) -> (f64, DistanceDiagnostics) {
    let u = 0.5 * (q[0][0] + q[1][1] + q[2][2] - 1.0);
    let theta = rotation_angle(q);
    let alpha = if theta < ALPHA_SERIES_BELOW {
        let th2 = theta * theta;
        -1.0 / 12.0 - th2 / 90.0 - 13.0 * th2 * th2 / 15120.0 - 23.0 * th2 * th2 * th2 / 453600.0
    } else {
        let one_minus_u = 1.0 - u;
        (2.0 - 2.0 * u - theta * theta) / (4.0 * one_minus_u * one_minus_u)
    };
    // t^T M t with M = (1 - 2 alpha) I + alpha (Q + Q^T)
    let tt = t[0] * t[0] + t[1] * t[1] + t[2] * t[2];
    let mut tqt = 0.0;
    for i in 0..3 {
        tqt += t[i] * (q[i][0] * t[0] + q[i][1] * t[1] + q[i][2] * t[2]);
    }
    let tmt = ((1.0 - 2.0 * alpha) * tt + 2.0 * alpha * tqt).max(0.0);
    let d = (2.0 * theta * theta + tmt).sqrt();
    let branch = if theta > PI - BOUNDARY_MARGIN { Branch::Boundary } else { Branch::Principal };
    (d, DistanceDiagnostics { theta, translation_norm_sq: tmt, branch })
}

/// Closed-form `SE(3)` distance.
pub fn ee_distance_se3(v: &GroupElement, w: &GroupElement) -> (f64, DistanceDiagnostics) {
    Se3Anchor::new(&Pose::from_matrix(v.matrix())).distance_to(&Pose::from_matrix(w.matrix()))
}

/// Closed-form `SO(3)` distance, `sqrt(2) * theta`.
pub fn ee_distance_so3(v: &GroupElement, w: &GroupElement) -> f64 {
    let a = v.rotation();
    let b = w.rotation();
    let mut q = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            q[i][j] = (0..3).map(|k| a[k][i] * b[k][j]).sum();
        }
    }
    std::f64::consts::SQRT_2 * rotation_angle(&q)
}

/// Euclidean distance of the translation parts of two `T(m)` elements.
pub fn ee_distance_translation(v: &GroupElement, w: &GroupElement) -> f64 {
    v.translation().iter().zip(w.translation()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// The distance by definition: Frobenius norm of the principal log of
/// `V^-1 W`. When the principal branch is undefined, `SO(3)` and `SE(3)`
/// fall back to their closed forms, which do not depend on the branch.
pub fn ee_distance_generic(g: &Group, v: &GroupElement, w: &GroupElement) -> Result<f64> {
    let rel = v.inverse().compose(w);
    match mat_log(rel.matrix()) {
        Ok(l) => Ok(l.frobenius_norm()),
        Err(Error::PrincipalBranchUndefined) => match g.kind() {
            GroupKind::SE3 => Ok(ee_distance_se3(v, w).0),
            GroupKind::SO3 => Ok(ee_distance_so3(v, w)),
            GroupKind::Translation(_) => Err(Error::BoundaryLogarithm),
        },
        Err(e) => Err(e),
    }
}

/// Production distance: the closed form for every shipped group.
#[inline]
pub fn ee_distance(g: &Group, v: &GroupElement, w: &GroupElement) -> f64 {
    match g.kind() {
        GroupKind::SE3 => ee_distance_se3(v, w).0,
        GroupKind::SO3 => ee_distance_so3(v, w),
        GroupKind::Translation(_) => ee_distance_translation(v, w),
    }
}

/// `log(V^-1 W)` as an algebra matrix; half-turns take the closed-form branch.
fn relative_log(g: &Group, v: &GroupElement, w: &GroupElement) -> Result<SquareMatrix> {
    let rel = v.inverse().compose(w);
    match mat_log(rel.matrix()) {
        Ok(l) => Ok(l),
        Err(Error::PrincipalBranchUndefined) => match g.kind() {
            GroupKind::SE3 | GroupKind::SO3 => g.s_map(&g.log(&rel)),
            GroupKind::Translation(_) => Err(Error::BoundaryLogarithm),
        },
        Err(e) => Err(e),
    }
}

/// `Phi(sigma, V, W) = V exp(log(V^-1 W) sigma)`.
pub fn path_generate(g: &Group, sigma: f64, v: &GroupElement, w: &GroupElement) -> Result<GroupElement> {
    let log = relative_log(g, v, w)?;
    let zeta = g.s_inv(&log)?;
    Ok(v.compose(&g.exp(&(zeta * sigma))?))
}

/// `|D(AV, AW) - D(V, W)|`.
pub fn check_left_invariance(g: &Group, a: &GroupElement, v: &GroupElement, w: &GroupElement) -> f64 {
    (ee_distance(g, &a.compose(v), &a.compose(w)) - ee_distance(g, v, w)).abs()
}

/// `|D(V, Phi) + D(Phi, W) - D(V, W)|` at `Phi = Phi(sigma, V, W)`.
pub fn check_chainability(g: &Group, v: &GroupElement, w: &GroupElement, sigma: f64) -> Result<f64> {
    let mid = path_generate(g, sigma, v, w)?;
    Ok((ee_distance(g, v, &mid) + ee_distance(g, &mid, w) - ee_distance(g, v, w)).abs())
}

/// `D(V, Phi(sigma)) / sigma` at the smallest `sigma` of a decreasing
/// sequence; its limit is `D(V, W)`.
pub fn check_local_linearity(g: &Group, v: &GroupElement, w: &GroupElement, sigmas: &[f64]) -> Result<f64> {
    let mut ratio = 0.0;
    for &s in sigmas {
        assert!(s > 0.0, "sigma must be positive");
        ratio = ee_distance(g, v, &path_generate(g, s, v, w)?) / s;
    }
    Ok(ratio)
}

/// `|log(exp(r log Z)) - r log Z|_F`, computed with the generic kernels.
pub fn log_exp_log_identity(z: &GroupElement, r: f64) -> Result<f64> {
    let l = mat_log(z.matrix())? * r;
    let back = mat_log(&mat_exp(&l)?)?;
    Ok((back - l).frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    fn rz(angle: f64) -> [[f64; 3]; 3] {
        let (s, c) = angle.sin_cos();
        [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    }

    #[test]
    fn self_distance_is_zero() {
        let g = Group::se3();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = sampling::random_se3(&mut rng, 3.0, 1.0);
        let (d, diag) = ee_distance_se3(&v, &v);
        assert!(d < 1e-7);
        assert!(diag.theta < 1e-7);
        assert!(ee_distance_generic(&g, &v, &v).unwrap() < 1e-12);
    }

    #[test]
    fn translation_group_reduces_to_euclidean() {
        let g = Group::translation(2);
        let v = GroupElement::translation_element(&[0.0, 0.0]);
        let w = GroupElement::translation_element(&[3.0, 4.0]);
        assert!((ee_distance_generic(&g, &v, &w).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(ee_distance(&g, &v, &w), 5.0);
    }

    #[test]
    fn quarter_turn_distance() {
        let g = Group::se3();
        let v = g.identity();
        let w = GroupElement::se3(rz(FRAC_PI_2), [0.0; 3]);
        let expect = SQRT_2 * FRAC_PI_2;
        assert!((ee_distance_generic(&g, &v, &w).unwrap() - expect).abs() < 1e-12);
        assert!((ee_distance_se3(&v, &w).0 - expect).abs() < 1e-12);
    }

    #[test]
    fn pure_translation_has_unit_metric() {
        let v = Group::se3().identity();
        let w = GroupElement::se3(rz(0.0), [0.6, 0.0, 0.8]);
        let (d, diag) = ee_distance_se3(&v, &w);
        assert!((d - 1.0).abs() < 1e-15);
        assert_eq!(diag.theta, 0.0);
        assert_eq!(diag.branch, Branch::Principal);
    }

    #[test]
    fn rotation_with_translation_matches_generic() {
        let g = Group::se3();
        let (s, c) = 1.0f64.sin_cos();
        let w = GroupElement::se3([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]], [1.0, 0.0, 0.0]);
        let v = g.identity();
        let fast = ee_distance_se3(&v, &w).0;
        let slow = ee_distance_generic(&g, &v, &w).unwrap();
        assert!((fast - slow).abs() <= 1e-9 * slow);
    }

    #[test]
    fn alpha_series_joins_closed_form() {
        // distances just below and above the series switch agree with the oracle
        let g = Group::se3();
        for theta in [1e-6, 1e-4, 9.99e-3, 1.001e-2, 5e-2] {
            let w = GroupElement::se3(rz(theta), [0.3, -1.2, 0.7]);
            let fast = ee_distance_se3(&g.identity(), &w).0;
            let slow = ee_distance_generic(&g, &g.identity(), &w).unwrap();
            assert!((fast - slow).abs() <= 1e-12 * (1.0 + slow), "theta {theta}: {fast} vs {slow}");
        }
    }

    #[test]
    fn half_turn_uses_branch_free_value() {
        let g = Group::se3();
        let w = GroupElement::se3(rz(PI), [0.0; 3]);
        let (d, diag) = ee_distance_se3(&g.identity(), &w);
        assert!((d - SQRT_2 * PI).abs() < 1e-12);
        assert_eq!(diag.branch, Branch::Boundary);
        assert!((ee_distance_generic(&g, &g.identity(), &w).unwrap() - d).abs() < 1e-15);
    }

    #[test]
    fn half_turn_is_continuous_from_two_axes() {
        let at_pi =
            ee_distance_se3(&Group::se3().identity(), &GroupElement::se3(sampling::rotation([0.0, 0.0, 1.0], PI), [0.2, 0.1, -0.3])).0;
        for axis in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]] {
            for k in 3..10 {
                let gap = 10f64.powi(-k);
                let w = GroupElement::se3(sampling::rotation(axis, PI - gap), [0.2, 0.1, -0.3]);
                let d = ee_distance_se3(&Group::se3().identity(), &w).0;
                assert!((d - at_pi).abs() < 10.0 * gap, "gap {gap}: {d} vs {at_pi}");
            }
        }
    }

    #[test]
    fn path_endpoints_and_midpoint() {
        let g = Group::se3();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = sampling::random_se3(&mut rng, 2.5, 1.0);
        let w = sampling::random_se3(&mut rng, 2.5, 1.0);
        let p0 = path_generate(&g, 0.0, &v, &w).unwrap();
        let p1 = path_generate(&g, 1.0, &v, &w).unwrap();
        assert!((*p0.matrix() - *v.matrix()).frobenius_norm() < 1e-10);
        assert!((*p1.matrix() - *w.matrix()).frobenius_norm() < 1e-10);

        let t = Group::translation(2);
        let a = GroupElement::translation_element(&[0.0, 0.0]);
        let b = GroupElement::translation_element(&[2.0, 4.0]);
        let mid = path_generate(&t, 0.5, &a, &b).unwrap();
        assert_eq!(mid.translation(), vec![1.0, 2.0]);
    }

    #[test]
    fn left_invariance_residuals() {
        let g = Group::se3();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = sampling::random_se3(&mut rng, 2.5, 1.0);
        let w = sampling::random_se3(&mut rng, 2.5, 1.0);
        assert!(check_left_invariance(&g, &g.identity(), &v, &w) == 0.0);
        let a = sampling::random_se3(&mut rng, 3.0, 2.0);
        assert!(check_left_invariance(&g, &a, &v, &w) <= 1e-9);

        let t = Group::translation(3);
        let a = sampling::random_element(&mut rng, &t, 0.0, 5.0);
        let v = sampling::random_element(&mut rng, &t, 0.0, 5.0);
        let w = sampling::random_element(&mut rng, &t, 0.0, 5.0);
        assert!(check_left_invariance(&t, &a, &v, &w) <= 1e-12);
    }

    #[test]
    fn chainability_residuals() {
        let g = Group::se3();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let v = sampling::random_se3(&mut rng, 2.5, 1.0);
        let w = sampling::random_se3(&mut rng, 2.5, 1.0);
        for s in [0.0, 1.0] {
            assert!(check_chainability(&g, &v, &w, s).unwrap() <= 1e-10);
        }
        assert!(check_chainability(&g, &v, &w, 0.3).unwrap() <= 1e-8);

        let t = Group::translation(4);
        let v = sampling::random_element(&mut rng, &t, 0.0, 5.0);
        let w = sampling::random_element(&mut rng, &t, 0.0, 5.0);
        assert!(check_chainability(&t, &v, &w, 0.37).unwrap() <= 1e-12);
    }

    #[test]
    fn local_linearity_ratio() {
        let g = Group::se3();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let v = sampling::random_se3(&mut rng, 2.5, 1.0);
        let w = sampling::random_se3(&mut rng, 2.5, 1.0);
        let ratio = check_local_linearity(&g, &v, &w, &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
        assert!((ratio - ee_distance(&g, &v, &w)).abs() <= 1e-6);
        assert_eq!(check_local_linearity(&g, &v, &v, &[1e-2, 1e-4]).unwrap(), 0.0);

        let t = Group::translation(2);
        let a = GroupElement::translation_element(&[0.0, 0.0]);
        let b = GroupElement::translation_element(&[3.0, 4.0]);
        assert!((check_local_linearity(&t, &a, &b, &[1e-4]).unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn log_exp_log_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let z = sampling::random_se3(&mut rng, PI - 1e-2, 1.0);
        assert_eq!(log_exp_log_identity(&z, 0.0).unwrap(), 0.0);
        assert!(log_exp_log_identity(&z, 1.0).unwrap() <= 1e-9);
        assert!(log_exp_log_identity(&z, 0.7).unwrap() <= 1e-9);
    }

    #[test]
    fn generic_distance_errors_on_translation_boundary() {
        // not reachable for T(m) elements, but the contract holds for
        // matrices that break the group structure
        let g = Group::translation(1);
        let bad = GroupElement::new_unchecked(SquareMatrix::diag(&[-1.0, 1.0]));
        assert_eq!(ee_distance_generic(&g, &g.identity(), &bad), Err(Error::BoundaryLogarithm));
    }
}
