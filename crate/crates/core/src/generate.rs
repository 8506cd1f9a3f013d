//! Sample target curves.

use std::f64::consts::{PI, TAU};

use crate::curve::{build_curve, DiscretizedCurve};
use crate::distance::ee_distance;
use crate::error::{Error, Result};
use crate::group::{Group, GroupElement, Twist};

/// Closed circle in `T(2)` of the given radius, starting at angle 0 and
/// running counter-clockwise.
pub fn circle_t2(n: usize, radius: f64, center: [f64; 2]) -> Result<DiscretizedCurve> {
    let samples = (0..n)
        .map(|i| {
            let a = TAU * i as f64 / n as f64;
            GroupElement::translation_element(&[center[0] + radius * a.cos(), center[1] + radius * a.sin()])
        })
        .collect();
    build_curve(Group::translation(2), samples, true)
}

/// Screw motion `exp(S[zeta] s) * h0` for `s` in `[0, 1]`. A closed curve
/// requires `exp(S[zeta]) = I`.
pub fn screw_se3(zeta: Twist, h0: GroupElement, n: usize, closed: bool) -> Result<DiscretizedCurve> {
    let g = Group::se3();
    if zeta.len() != 6 {
        return Err(Error::DimensionMismatch { expected: 6, got: zeta.len() });
    }
    if closed {
        let gap = ee_distance(&g, &g.exp(&zeta)?, &g.identity());
        if gap > 1e-9 {
            return Err(Error::InvalidConfig(format!("screw does not close (gap {gap:.3e})")));
        }
    }
    let denom = if closed { n as f64 } else { (n.max(2) - 1) as f64 };
    let samples = (0..n).map(|i| g.exp(&(zeta * (i as f64 / denom))).map(|e| e.compose(&h0))).collect::<Result<Vec<_>>>()?;
    build_curve(g, samples, closed)
}

/// Screw axes `[v; w]` of a seven-joint serial chain with alternating
/// vertical and horizontal revolute joints.
fn arm_axes() -> [Twist; 7] {
    let heights = [0.156, 0.284, 0.494, 0.704, 0.914, 1.022, 1.128];
    let mut axes = [Twist::zeros(6); 7];
    for (k, h) in heights.iter().enumerate() {
        let w = if k % 2 == 0 { [0.0, 0.0, 1.0] } else { [0.0, 1.0, 0.0] };
        let q = [0.0, 0.0, *h];
        // v = -w x q
        let v = [-(w[1] * q[2] - w[2] * q[1]), -(w[2] * q[0] - w[0] * q[2]), -(w[0] * q[1] - w[1] * q[0])];
        axes[k] = Twist::from_slice(&[v[0], v[1], v[2], w[0], w[1], w[2]]);
    }
    axes
}

/// End-effector pose of the chain at joint angles `q`.
pub fn arm_pose(q: &[f64; 7]) -> Result<GroupElement> {
    let g = Group::se3();
    let home = GroupElement::se3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], [0.0, 0.0, 1.25]);
    let mut h = g.identity();
    for (axis, angle) in arm_axes().iter().zip(q) {
        h = h.compose(&g.exp(&(*axis * *angle))?);
    }
    Ok(h.compose(&home))
}

/// Closed joint-space loop pushed through the chain's product of
/// exponentials.
pub fn arm_joint_loop(s: f64) -> [f64; 7] {
    let u = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
    let v = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
    let nu = 2.0;
    let nv = 3f64.sqrt();
    let mut q = [0.0; 7];
    for k in 0..7 {
        q[k] = PI / 36.0 * (u[k] + v[k]) + PI * (TAU * s).cos() * u[k] / nu + 5.0 * PI / 18.0 * ((TAU * s).sin() + 1.0) * v[k] / (2.0 * nv);
    }
    q
}

/// Closed `SE(3)` curve traced by the chain along [`arm_joint_loop`].
pub fn composed_se3(n: usize) -> Result<DiscretizedCurve> {
    let samples = (0..n).map(|i| arm_pose(&arm_joint_loop(i as f64 / n as f64))).collect::<Result<Vec<_>>>()?;
    build_curve(Group::se3(), samples, true)
}

/// Closed `SE(3)` curve whose position runs around a horizontal circle
/// while the orientation stays fixed.
pub fn translation_circle_se3(n: usize, radius: f64, rotation: [[f64; 3]; 3], center: [f64; 3]) -> Result<DiscretizedCurve> {
    let samples = (0..n)
        .map(|i| {
            let a = TAU * i as f64 / n as f64;
            GroupElement::se3(rotation, [center[0] + radius * a.cos(), center[1] + radius * a.sin(), center[2]])
        })
        .collect();
    build_curve(Group::se3(), samples, true)
}

/// Closed loop in `SO(3)`: a full turn about `axis` preceded by `base`.
pub fn rotation_loop_so3(n: usize, axis: [f64; 3], base: [[f64; 3]; 3]) -> Result<DiscretizedCurve> {
    let g = Group::so3();
    let mut b = g.identity().into_matrix();
    for i in 0..3 {
        for j in 0..3 {
            b[(i, j)] = base[i][j];
        }
    }
    let b = GroupElement::new_unchecked(b);
    let samples = (0..n)
        .map(|i| {
            let a = TAU * i as f64 / n as f64;
            g.exp(&Twist::from_slice(&[axis[0] * a, axis[1] * a, axis[2] * a])).map(|e| e.compose(&b))
        })
        .collect::<Result<Vec<_>>>()?;
    build_curve(g, samples, true)
}

/// Closed ellipse-like loop in `T(m)` through the first two coordinates,
/// with a small wobble in the rest.
pub fn loop_translation(n: usize, m: usize) -> Result<DiscretizedCurve> {
    let samples = (0..n)
        .map(|i| {
            let a = TAU * i as f64 / n as f64;
            let t: Vec<f64> = (0..m)
                .map(|k| match k {
                    0 => 1.5 * a.cos(),
                    1 => a.sin(),
                    _ => 0.2 * ((k as f64) * a).sin(),
                })
                .collect();
            GroupElement::translation_element(&t)
        })
        .collect();
    build_curve(Group::translation(m), samples, true)
}
