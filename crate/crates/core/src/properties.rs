//! Seeded property suite over random group elements and test curves.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::{ec_distance, DiscretizedCurve};
use crate::distance::{
    check_chainability, check_left_invariance, check_local_linearity, ee_distance, ee_distance_generic, log_exp_log_identity,
    path_generate, BOUNDARY_MARGIN,
};
use crate::error::Result;
use crate::field::{evaluate_from_query, FieldOptions, GainSchedule};
use crate::generate;
use crate::group::{group_exp_step, Group, GroupElement, GroupKind, Twist};
use crate::sampling::{random_element, random_se3};

/// Largest rotation angle drawn for random elements, inside the principal
/// branch of the logarithm.
pub const MAX_ANGLE: f64 = PI - BOUNDARY_MARGIN;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub trials: usize,
    /// Worst value of the checked quantity over the trials.
    pub max_residual: f64,
    pub tolerance: f64,
    /// Trials within tolerance.
    pub passed_trials: usize,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.passed_trials == self.trials
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub group: String,
    pub seed: u64,
    pub results: Vec<PropertyResult>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(PropertyResult::passed)
    }
}

fn collect(name: &'static str, tolerance: f64, residuals: impl IntoIterator<Item = f64>) -> PropertyResult {
    let mut trials = 0;
    let mut passed_trials = 0;
    let mut max_residual: f64 = 0.0;
    for r in residuals {
        trials += 1;
        if r <= tolerance {
            passed_trials += 1;
        }
        // NaN must surface as a failure
        max_residual = if r.is_nan() { f64::NAN } else { max_residual.max(r) };
    }
    PropertyResult { name, trials, max_residual, tolerance, passed_trials }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn pairs(g: &Group, rng: &mut ChaCha8Rng) -> (GroupElement, GroupElement) {
    (random_element(rng, g, MAX_ANGLE, 1.0), random_element(rng, g, MAX_ANGLE, 1.0))
}

/// `|D(AV, AW) - D(V, W)|`.
pub fn left_invariance(g: &Group, trials: usize, seed: u64) -> PropertyResult {
    let mut rng = rng_for(seed, 1);
    collect(
        "left_invariance",
        1e-9,
        (0..trials).map(|_| {
            let a = random_element(&mut rng, g, PI, 2.0);
            let (v, w) = pairs(g, &mut rng);
            check_left_invariance(g, &a, &v, &w)
        }),
    )
}

/// `|D(V, Phi) + D(Phi, W) - D(V, W)|` at a random `sigma`.
pub fn chainability(g: &Group, trials: usize, seed: u64) -> PropertyResult {
    let mut rng = rng_for(seed, 2);
    collect(
        "chainability",
        1e-8,
        (0..trials).map(|_| {
            let (v, w) = pairs(g, &mut rng);
            let sigma = rng.gen_range(0.0..=1.0);
            check_chainability(g, &v, &w, sigma).unwrap_or(f64::NAN)
        }),
    )
}

/// `|D(V, Phi(1e-4)) / 1e-4 - D(V, W)|`.
pub fn local_linearity(g: &Group, trials: usize, seed: u64) -> PropertyResult {
    let mut rng = rng_for(seed, 3);
    collect(
        "local_linearity",
        1e-6,
        (0..trials).map(|_| {
            let (v, w) = pairs(g, &mut rng);
            match check_local_linearity(g, &v, &w, &[1e-4]) {
                Ok(ratio) => (ratio - ee_distance(g, &v, &w)).abs(),
                Err(_) => f64::NAN,
            }
        }),
    )
}

/// `|log(exp(r log Z)) - r log Z|_F` for `r` in `[0, 1]`.
pub fn log_exp_log(g: &Group, trials: usize, seed: u64) -> PropertyResult {
    let mut rng = rng_for(seed, 4);
    collect(
        "log_exp_log",
        1e-9,
        (0..trials).map(|_| {
            let z = random_element(&mut rng, g, MAX_ANGLE, 1.0);
            let r = rng.gen_range(0.0..=1.0);
            log_exp_log_identity(&z, r).unwrap_or(f64::NAN)
        }),
    )
}

/// `|D_closed - D_generic| / (1 + D)`.
pub fn oracle_equivalence(g: &Group, trials: usize, seed: u64) -> PropertyResult {
    let mut rng = rng_for(seed, 5);
    collect(
        "oracle_equivalence",
        1e-9,
        (0..trials).map(|_| {
            let (v, w) = pairs(g, &mut rng);
            let d = ee_distance(g, &v, &w);
            match ee_distance_generic(g, &v, &w) {
                Ok(r) => (d - r).abs() / (1.0 + d),
                Err(_) => f64::NAN,
            }
        }),
    )
}

/// `|D(Phi(sigma)) - D_linear|` where the reference is straight-line
/// interpolation; only meaningful on translation groups.
pub fn euclidean_path(g: &Group, trials: usize, seed: u64) -> Option<PropertyResult> {
    let GroupKind::Translation(m) = g.kind() else { return None };
    let mut rng = rng_for(seed, 6);
    Some(collect(
        "euclidean_path",
        1e-12,
        (0..trials).map(|_| {
            let (v, w) = pairs(g, &mut rng);
            let sigma = rng.gen_range(0.0..=1.0);
            let (a, b) = (v.translation(), w.translation());
            let p = match path_generate(g, sigma, &v, &w) {
                Ok(p) => p.translation(),
                Err(_) => return f64::NAN,
            };
            let d_err = (ee_distance(g, &v, &w) - a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()).abs();
            let p_err = (0..m).map(|k| (p[k] - (a[k] + sigma * (b[k] - a[k]))).abs()).fold(0.0, f64::max);
            d_err.max(p_err)
        }),
    ))
}

/// Closed test curve used by the field properties of each group.
pub fn test_curve(g: &Group, n: usize) -> Result<DiscretizedCurve> {
    match g.kind() {
        GroupKind::SE3 => generate::screw_se3(
            Twist::from_slice(&[0.0, 0.0, 0.0, 0.0, 0.0, TAU]),
            GroupElement::se3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], [0.15, 0.0, 0.3]),
            n,
            true,
        ),
        GroupKind::SO3 => {
            let axis = [0.6, 0.0, 0.8];
            generate::rotation_loop_so3(n, axis, [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
        }
        GroupKind::Translation(m) => generate::loop_translation(n, m),
    }
}

/// Off-curve, non-tie state near a random curve sample; `None` when the
/// draw lands on a tie or within `1e-2` of the curve.
pub fn off_curve_state(curve: &DiscretizedCurve, rng: &mut ChaCha8Rng) -> Option<(GroupElement, crate::curve::CurveQueryResult)> {
    let g = curve.group();
    let k = rng.gen_range(0..curve.len());
    let offset = match g.kind() {
        GroupKind::SE3 => random_se3(rng, 0.5, 0.3),
        _ => random_element(rng, g, 0.5, 0.3),
    };
    let h = offset.compose(curve.sample(k));
    let q = ec_distance(curve, &h, &Default::default());
    if q.near_tie || q.distance < 1e-2 {
        None
    } else {
        Some((h, q))
    }
}

fn off_curve_states(curve: &DiscretizedCurve, trials: usize, rng: &mut ChaCha8Rng) -> Vec<(GroupElement, crate::curve::CurveQueryResult)> {
    let mut out = Vec::with_capacity(trials);
    while out.len() < trials {
        if let Some(s) = off_curve_state(curve, rng) {
            out.push(s);
        }
    }
    out
}

/// `|xi_N . xi_T| / (|xi_N| |xi_T|)` at off-curve states.
pub fn orthogonality(curve: &DiscretizedCurve, trials: usize, seed: u64) -> PropertyResult {
    let mut rng = rng_for(seed, 7);
    let opts = FieldOptions::default();
    let gains = GainSchedule::default();
    collect(
        "orthogonality",
        1e-4,
        off_curve_states(curve, trials, &mut rng).into_iter().map(|(h, q)| match evaluate_from_query(curve, &h, &q, &gains, &opts) {
            Ok(e) => e.xi_n.dot(&e.xi_t).abs() / (e.xi_n.norm() * e.xi_t.norm()),
            Err(_) => f64::NAN,
        }),
    )
}

/// Relative gap between the finite-difference `dD/dt` over one exact step
/// of `1e-5` and `-k_N |xi_N|^2`.
pub fn lyapunov(curve: &DiscretizedCurve, trials: usize, seed: u64) -> PropertyResult {
    let mut rng = rng_for(seed, 8);
    let opts = FieldOptions::default();
    let gains = GainSchedule::default();
    let delta = 1e-5;
    collect(
        "lyapunov",
        0.05,
        off_curve_states(curve, trials, &mut rng).into_iter().map(|(h, q)| {
            let Ok(e) = evaluate_from_query(curve, &h, &q, &gains, &opts) else { return f64::NAN };
            let Ok(next) = group_exp_step(curve.group(), &h, &e.xi, delta) else { return f64::NAN };
            let rate = (ec_distance(curve, &next, &opts.search).distance - e.distance) / delta;
            let predicted = -e.kn * e.xi_n.dot(&e.xi_n);
            ((rate - predicted) / predicted).abs()
        }),
    )
}

/// Runs every property for `g`. Field properties use [`test_curve`] with
/// 2000 samples for orthogonality and 5000 for the Lyapunov rate.
pub fn run_suite(g: &Group, trials: usize, seed: u64) -> Result<PropertyReport> {
    let mut results = vec![
        left_invariance(g, trials, seed),
        chainability(g, trials, seed),
        local_linearity(g, trials, seed),
        log_exp_log(g, trials, seed),
        oracle_equivalence(g, trials, seed),
    ];
    if let Some(r) = euclidean_path(g, trials, seed) {
        results.push(r);
    }
    results.push(orthogonality(&test_curve(g, 2000)?, trials, seed));
    results.push(lyapunov(&test_curve(g, 5000)?, trials, seed));
    Ok(PropertyReport { group: g.kind().to_string(), seed, results })
}
