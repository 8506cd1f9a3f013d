//! Seeded random group elements and twists for property checks and
//! benchmarks.

use rand::Rng;

use crate::group::{Group, GroupElement, GroupKind, Twist};

pub fn random_twist<R: Rng + ?Sized>(rng: &mut R, m: usize, scale: f64) -> Twist {
    let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-scale..=scale)).collect();
    Twist::from_slice(&v)
}

/// Uniformly distributed unit vector in `R^3`.
pub fn random_axis<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Rotation about `axis` (unit) by `angle`.
pub fn rotation(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let g = Group::so3();
    let w = Twist::from_slice(&[axis[0] * angle, axis[1] * angle, axis[2] * angle]);
    g.exp(&w).expect("finite rotation").rotation()
}

/// `SE(3)` element with a random axis, rotation angle uniform in
/// `[0, max_angle]` and translation uniform in `[-t_scale, t_scale]^3`.
pub fn random_se3<R: Rng + ?Sized>(rng: &mut R, max_angle: f64, t_scale: f64) -> GroupElement {
    let angle = rng.gen_range(0.0..=max_angle);
    let q = rotation(random_axis(rng), angle);
    let t = [rng.gen_range(-t_scale..=t_scale), rng.gen_range(-t_scale..=t_scale), rng.gen_range(-t_scale..=t_scale)];
    GroupElement::se3(q, t)
}

/// Random element of any shipped group.
pub fn random_element<R: Rng + ?Sized>(rng: &mut R, g: &Group, max_angle: f64, t_scale: f64) -> GroupElement {
    match g.kind() {
        GroupKind::SE3 => random_se3(rng, max_angle, t_scale),
        GroupKind::SO3 => {
            let angle = rng.gen_range(0.0..=max_angle);
            let q = rotation(random_axis(rng), angle);
            let mut m = g.identity().into_matrix();
            for i in 0..3 {
                for j in 0..3 {
                    m[(i, j)] = q[i][j];
                }
            }
            GroupElement::new_unchecked(m)
        }
        GroupKind::Translation(m) => {
            let t: Vec<f64> = (0..m).map(|_| rng.gen_range(-t_scale..=t_scale)).collect();
            GroupElement::translation_element(&t)
        }
    }
}
