//! Discretized target curves and the element-to-curve distance.
//!
//! A curve is an ordered list of `N` group elements sampled at
//! `s_i = i * ds`, with `ds = 1/N` for closed curves and `1/(N-1)` for open
//! ones. Tangent twists are central finite differences (second-order
//! one-sided at the ends of open curves). The nearest-sample search is an
//! exhaustive scan; the parallel variant partitions the index range and
//! reduces by (value, then lowest index), so it returns exactly what the
//! serial scan returns.

use rayon::prelude::*;

use crate::distance::{ee_distance, Pose, Se3Anchor, BOUNDARY_MARGIN};
use crate::error::{Error, Result};
use crate::group::{Group, GroupElement, GroupKind, Twist, MEMBERSHIP_TOL};
use crate::matrix::SquareMatrix;

/// Tangents with norm at or below this make a parametrization improper.
pub const PROPER_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct DiscretizedCurve {
    group: Group,
    samples: Vec<GroupElement>,
    poses: Vec<Pose>,
    tangents: Vec<Twist>,
    closed: bool,
    ds: f64,
}

/// Knobs for [`ec_distance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub parallel: bool,
    /// Absolute slack under which a second local minimum counts as a tie.
    pub tie_tolerance: f64,
    /// Minimum index separation of a tie, as a fraction of `N`.
    pub tie_separation: f64,
    /// Report `s*` from a 3-point parabolic fit instead of the sample grid.
    pub refine: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { parallel: false, tie_tolerance: 1e-6, tie_separation: 1.0 / 20.0, refine: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveQueryResult {
    pub s_star_index: usize,
    pub s_star: f64,
    pub distance: f64,
    pub near_tie: bool,
    /// Minimizer plus every separated competitor; empty unless `near_tie`.
    pub tie_indices: Vec<usize>,
    /// `SE(3)` only: the relative rotation at the minimizer is within
    /// `BOUNDARY_MARGIN` of a half-turn, where the distance is not
    /// differentiable.
    pub boundary: bool,
}

impl DiscretizedCurve {
    /// Validates samples, computes tangent twists and checks properness.
    pub fn build(group: Group, samples: Vec<GroupElement>, closed: bool) -> Result<Self> {
        let n = samples.len();
        if n < 3 {
            return Err(Error::TooFewSamples(n));
        }
        for (index, h) in samples.iter().enumerate() {
            let residual = group.membership_residual(h.matrix());
            if !(residual <= MEMBERSHIP_TOL) {
                return Err(Error::OffGroupSample { index, residual });
            }
        }
        let ds = if closed { 1.0 / n as f64 } else { 1.0 / (n - 1) as f64 };
        let m = |i: usize| *samples[i].matrix();
        let mut tangents = Vec::with_capacity(n);
        for i in 0..n {
            let deriv: SquareMatrix = if closed {
                (m((i + 1) % n) - m((i + n - 1) % n)) * (0.5 / ds)
            } else if i == 0 {
                (m(1) * 4.0 - m(0) * 3.0 - m(2)) * (0.5 / ds)
            } else if i == n - 1 {
                (m(n - 1) * 3.0 - m(n - 2) * 4.0 + m(n - 3)) * (0.5 / ds)
            } else {
                (m(i + 1) - m(i - 1)) * (0.5 / ds)
            };
            // a difference quotient leaves the algebra by O(ds^2); keep the
            // projection onto it
            let (xi, _) = group.project(&(deriv * *samples[i].inverse().matrix()))?;
            let norm = xi.norm();
            if !(norm > PROPER_TOL) {
                return Err(Error::ImproperParametrization { index: i, norm });
            }
            tangents.push(xi);
        }
        let poses =
            if group.kind() == GroupKind::SE3 { samples.iter().map(|h| Pose::from_matrix(h.matrix())).collect() } else { Vec::new() };
        Ok(DiscretizedCurve { group, samples, poses, tangents, closed, ds })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn samples(&self) -> &[GroupElement] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &GroupElement {
        &self.samples[i]
    }

    pub fn tangents(&self) -> &[Twist] {
        &self.tangents
    }

    pub fn tangent(&self, i: usize) -> &Twist {
        &self.tangents[i]
    }

    /// Parameter value of sample `i`.
    pub fn s_of(&self, i: usize) -> f64 {
        i as f64 * self.ds
    }

    pub fn max_tangent_norm(&self) -> f64 {
        self.tangents.iter().map(Twist::norm).fold(0.0, f64::max)
    }

    /// Same curve traversed in the opposite sense, `H_d(1 - s)`.
    pub fn reversed(&self) -> Result<Self> {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self::build(self.group.clone(), samples, self.closed)
    }

    /// Index distance between two samples, wrapping for closed curves.
    pub fn index_separation(&self, i: usize, j: usize) -> usize {
        let d = i.abs_diff(j);
        if self.closed {
            d.min(self.len() - d)
        } else {
            d
        }
    }

    /// Smallest distance between samples that are not neighbours, as a
    /// self-intersection check. Quadratic in `N`.
    pub fn min_nonadjacent_distance(&self) -> f64 {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut best = f64::INFINITY;
                let anchor = self.poses.get(i).map(Se3Anchor::new);
                for j in i + 1..n {
                    if self.index_separation(i, j) > 1 {
                        let d = match &anchor {
                            Some(a) => a.distance_to(&self.poses[j]).0,
                            None => ee_distance(&self.group, &self.samples[i], &self.samples[j]),
                        };
                        best = best.min(d);
                    }
                }
                best
            })
            .reduce(|| f64::INFINITY, f64::min)
    }

    fn fill_distances(&self, h: &GroupElement, start: usize, out: &mut [f64]) -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        if self.group.kind() == GroupKind::SE3 {
            let anchor = Se3Anchor::new(&Pose::from_matrix(h.matrix()));
            for (k, slot) in out.iter_mut().enumerate() {
                let d = anchor.distance_to(&self.poses[start + k]).0;
                *slot = d;
                if d < best.0 {
                    best = (d, start + k);
                }
            }
        } else {
            for (k, slot) in out.iter_mut().enumerate() {
                let d = ee_distance(&self.group, h, &self.samples[start + k]);
                *slot = d;
                if d < best.0 {
                    best = (d, start + k);
                }
            }
        }
        best
    }
}

/// Builds a curve; see [`DiscretizedCurve::build`].
pub fn build_curve(group: Group, samples: Vec<GroupElement>, closed: bool) -> Result<DiscretizedCurve> {
    DiscretizedCurve::build(group, samples, closed)
}

fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Exhaustive element-to-curve distance with near-tie detection.
pub fn ec_distance(curve: &DiscretizedCurve, h: &GroupElement, opts: &SearchOptions) -> CurveQueryResult {
    let n = curve.len();
    let mut dist = vec![0.0; n];
    let (distance, idx) = if opts.parallel {
        let chunk = n.div_ceil(4 * rayon::current_num_threads().max(1)).max(64);
        dist.par_chunks_mut(chunk)
            .enumerate()
            .map(|(c, out)| curve.fill_distances(h, c * chunk, out))
            .reduce(|| (f64::INFINITY, usize::MAX), better)
    } else {
        curve.fill_distances(h, 0, &mut dist)
    };
    // NaN distances never win a comparison; fall back to the first sample
    let idx = if idx == usize::MAX { 0 } else { idx };

    let tie_indices = find_ties(curve, &dist, idx, opts);
    let near_tie = !tie_indices.is_empty();

    let mut s_star = curve.s_of(idx);
    if opts.refine {
        s_star = refined_parameter(curve, &dist, idx);
    }

    let boundary = curve.group.kind() == GroupKind::SE3 && {
        let (_, diag) = Se3Anchor::new(&Pose::from_matrix(h.matrix())).distance_to(&curve.poses[idx]);
        diag.theta > std::f64::consts::PI - BOUNDARY_MARGIN
    };

    CurveQueryResult { s_star_index: idx, s_star, distance: dist[idx].min(distance), near_tie, tie_indices, boundary }
}

fn find_ties(curve: &DiscretizedCurve, dist: &[f64], best: usize, opts: &SearchOptions) -> Vec<usize> {
    let n = dist.len();
    let sep = ((opts.tie_separation * n as f64).floor() as usize).max(1);
    let limit = dist[best] + opts.tie_tolerance;
    // plateaus flat to round-off count as local minima
    let noise = 1e-12 * (1.0 + dist[best]);
    let is_local_min = |j: usize| {
        let d = dist[j] - noise;
        let left = if j > 0 {
            Some(dist[j - 1])
        } else if curve.closed {
            Some(dist[n - 1])
        } else {
            None
        };
        let right = if j + 1 < n {
            Some(dist[j + 1])
        } else if curve.closed {
            Some(dist[0])
        } else {
            None
        };
        left.is_none_or(|l| d <= l) && right.is_none_or(|r| d <= r)
    };
    let mut ties: Vec<usize> = Vec::new();
    for j in 0..n {
        if dist[j] <= limit && is_local_min(j) && ties.iter().all(|&t| curve.index_separation(t, j) > sep) {
            ties.push(j);
        }
    }
    if ties.len() < 2 {
        ties.clear();
    } else if ties.iter().all(|&t| curve.index_separation(t, best) > sep) {
        ties.push(best);
        ties.sort_unstable();
    }
    ties
}

fn refined_parameter(curve: &DiscretizedCurve, dist: &[f64], i: usize) -> f64 {
    let n = dist.len();
    let (prev, next) = if curve.closed {
        ((i + n - 1) % n, (i + 1) % n)
    } else if i == 0 || i == n - 1 {
        return curve.s_of(i);
    } else {
        (i - 1, i + 1)
    };
    let (a, b, c) = (dist[prev], dist[i], dist[next]);
    let curv = a - 2.0 * b + c;
    let offset = if curv > 0.0 { (0.5 * (a - c) / curv).clamp(-0.5, 0.5) } else { 0.0 };
    let s = (i as f64 + offset) * curve.ds;
    if curve.closed {
        s.rem_euclid(1.0)
    } else {
        s.clamp(0.0, 1.0)
    }
}

/// Smallest distance among probes that the search flags as ambiguous;
/// `+inf` when none qualify.
pub fn min_distance_to_p_estimate(curve: &DiscretizedCurve, probes: &[GroupElement], opts: &SearchOptions) -> f64 {
    probes
        .iter()
        .map(|p| ec_distance(curve, p, opts))
        .filter(|q| q.near_tie || q.boundary)
        .map(|q| q.distance)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::ee_distance_se3;
    use crate::generate;
    use crate::group::{l_operator, L_OPERATOR_EPS};
    use std::f64::consts::{PI, TAU};

    fn unit_circle(n: usize) -> DiscretizedCurve {
        generate::circle_t2(n, 1.0, [0.0, 0.0]).unwrap()
    }

    #[test]
    fn circle_tangents_have_parameter_speed() {
        let c = unit_circle(360);
        for (i, xi) in c.tangents().iter().enumerate() {
            // analytic: d/ds (cos 2 pi s, sin 2 pi s) = 2 pi (-sin, cos)
            let s = c.s_of(i);
            let expect = [-TAU * (TAU * s).sin(), TAU * (TAU * s).cos()];
            assert!((xi.norm() - TAU).abs() < 1e-3);
            assert!((xi[0] - expect[0]).abs() < 1e-3 && (xi[1] - expect[1]).abs() < 1e-3);
        }
    }

    #[test]
    fn constant_curve_is_improper() {
        let g = Group::se3();
        let samples = vec![g.identity(); 10];
        assert!(matches!(build_curve(g, samples, true), Err(Error::ImproperParametrization { index: 0, .. })));
    }

    #[test]
    fn off_group_sample_is_rejected() {
        let g = Group::so3();
        let mut samples = vec![g.identity(); 5];
        samples[2] = GroupElement::new_unchecked(SquareMatrix::diag(&[1.0, 1.0, 1.1]));
        assert!(matches!(build_curve(g, samples, false), Err(Error::OffGroupSample { index: 2, .. })));
        assert_eq!(build_curve(Group::so3(), vec![Group::so3().identity(); 2], false).unwrap_err(), Error::TooFewSamples(2));
    }

    #[test]
    fn screw_curve_tangents_equal_twist() {
        let g = Group::se3();
        let zeta = Twist::from_slice(&[0.2, -0.1, 0.3, 0.5, 0.4, -0.6]);
        let h0 = g.exp(&Twist::from_slice(&[0.1, 0.2, 0.3, 0.0, 0.3, 0.0])).unwrap();
        let n = 500;
        let samples: Vec<_> = (0..n).map(|i| g.exp(&(zeta * (i as f64 / (n - 1) as f64))).unwrap().compose(&h0)).collect();
        let c = build_curve(g, samples, false).unwrap();
        let ds2 = c.ds() * c.ds();
        for xi in c.tangents() {
            assert!((*xi - zeta).norm() < 10.0 * ds2, "{:?}", xi);
        }
    }

    #[test]
    fn query_on_sample_returns_it() {
        let c = generate::screw_se3(
            Twist::from_slice(&[0.0, 0.0, 0.0, 0.0, 0.0, TAU]),
            GroupElement::se3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], [0.3, 0.0, 0.2]),
            400,
            true,
        )
        .unwrap();
        for k in [0, 17, 399] {
            let q = ec_distance(&c, c.sample(k), &SearchOptions::default());
            assert_eq!(q.s_star_index, k);
            assert!(q.distance < 1e-7);
            assert!(!q.near_tie && q.tie_indices.is_empty());
        }
    }

    #[test]
    fn circle_center_is_a_tie() {
        let c = unit_circle(360);
        let q = ec_distance(&c, &GroupElement::translation_element(&[0.0, 0.0]), &SearchOptions::default());
        assert!(q.near_tie);
        assert!(q.tie_indices.len() > 1);
        assert!((q.distance - 1.0).abs() < 1e-15);
    }

    #[test]
    fn outside_point_projects_to_angle_zero() {
        let c = unit_circle(360);
        let q = ec_distance(&c, &GroupElement::translation_element(&[2.0, 0.0]), &SearchOptions::default());
        assert_eq!(q.s_star_index, 0);
        assert_eq!(q.s_star, 0.0);
        assert!((q.distance - 1.0).abs() < 1e-15);
        assert!(!q.near_tie);
    }

    #[test]
    fn tie_breaks_to_lowest_index() {
        // two samples at the same distance from the query
        let g = Group::translation(1);
        let samples: Vec<_> = [-1.0, -0.5, 0.0, 0.5, 1.0].iter().map(|x| GroupElement::translation_element(&[*x])).collect();
        let c = build_curve(g, samples, false).unwrap();
        let q = ec_distance(&c, &GroupElement::translation_element(&[0.25]), &SearchOptions::default());
        assert_eq!(q.s_star_index, 2);
    }

    #[test]
    fn parallel_matches_serial() {
        let c = generate::composed_se3(2000).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(4);
        for _ in 0..20 {
            let h = crate::sampling::random_se3(&mut rng, 3.0, 1.0);
            let a = ec_distance(&c, &h, &SearchOptions::default());
            let b = ec_distance(&c, &h, &SearchOptions { parallel: true, ..Default::default() });
            assert_eq!(a.s_star_index, b.s_star_index);
            assert_eq!(a.distance.to_bits(), b.distance.to_bits());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn refinement_moves_s_star_between_samples() {
        let c = unit_circle(36);
        let angle = 0.04 * TAU;
        let h = GroupElement::translation_element(&[2.0 * angle.cos(), 2.0 * angle.sin()]);
        let coarse = ec_distance(&c, &h, &SearchOptions::default());
        let fine = ec_distance(&c, &h, &SearchOptions { refine: true, ..Default::default() });
        assert_eq!(coarse.s_star_index, fine.s_star_index);
        assert_eq!(coarse.distance, fine.distance);
        assert!((fine.s_star - 0.04).abs() < (coarse.s_star - 0.04).abs());
    }

    #[test]
    fn refinement_never_increases_distance_beyond_chord() {
        let mut prev = f64::INFINITY;
        let h = GroupElement::translation_element(&[1.7 * 0.3f64.cos(), 1.7 * 0.3f64.sin()]);
        for n in [45, 90, 180, 360, 720] {
            let c = unit_circle(n);
            let d = ec_distance(&c, &h, &SearchOptions::default()).distance;
            let chord = TAU / n as f64;
            assert!(d <= prev + chord);
            assert!(d >= 0.7 - 1e-12);
            prev = d;
        }
    }

    #[test]
    fn first_order_optimality_at_minimizer() {
        let c = generate::composed_se3(5000).unwrap();
        let g = c.group().clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(21);
        let mut checked = 0;
        while checked < 10 {
            let k = rand::Rng::gen_range(&mut rng, 0..c.len());
            let offset = crate::sampling::random_se3(&mut rng, 0.3, 0.1);
            let h = offset.compose(c.sample(k));
            let q = ec_distance(&c, &h, &SearchOptions::default());
            if q.near_tie || q.distance < 1e-3 {
                continue;
            }
            // derivative of D along the curve, sampled around s*
            let slope = |j: usize| {
                let w = *c.sample(j);
                l_operator(&g, |x| ee_distance_se3(&h, x).0, &w, L_OPERATOR_EPS).unwrap().dot(c.tangent(j))
            };
            let i = q.s_star_index;
            let (prev, at, next) = (slope(i - 1), slope(i), slope(i + 1));
            let xi_norm = c.tangent(i).norm();
            assert!(prev <= 1e-2 * xi_norm && next >= -1e-2 * xi_norm, "{prev} {next}");
            let grid = 0.5 * (next - prev).abs().max(0.0);
            assert!(at.abs() <= 1e-2 * xi_norm + grid, "{at} vs {xi_norm}");
            checked += 1;
        }
    }

    #[test]
    fn p_estimate_cases() {
        let c = unit_circle(360);
        assert_eq!(min_distance_to_p_estimate(&c, &[], &SearchOptions::default()), f64::INFINITY);
        let probes = [GroupElement::translation_element(&[0.0, 0.0]), GroupElement::translation_element(&[3.0, 0.0])];
        let est = min_distance_to_p_estimate(&c, &probes, &SearchOptions::default());
        assert!((est - 1.0).abs() < 1e-12);
    }

    #[test]
    fn antipodal_probe_sits_at_half_turn_bound() {
        // a probe rotated by pi from every sample of a pure-rotation loop
        // lies exactly at distance sqrt(2) pi
        let c = generate::screw_se3(Twist::from_slice(&[0.0, 0.0, 0.0, 0.0, 0.0, TAU]), Group::se3().identity(), 400, true).unwrap();
        let flip = GroupElement::se3([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]], [0.0; 3]);
        let q = ec_distance(&c, &flip, &SearchOptions::default());
        assert!(q.boundary);
        let est = min_distance_to_p_estimate(&c, &[flip], &SearchOptions::default());
        assert!((est - std::f64::consts::SQRT_2 * PI).abs() < 1e-9);
    }

    #[test]
    fn reversed_curve_negates_tangents() {
        let c = unit_circle(100);
        let r = c.reversed().unwrap();
        for i in 0..100 {
            assert!((*r.tangent(99 - i) + *c.tangent(i)).norm() < 1e-12);
        }
    }

    #[test]
    fn self_intersection_check() {
        let c = unit_circle(100);
        let d = c.min_nonadjacent_distance();
        let expected = 2.0 * (2.0 * PI / 100.0).sin();
        assert!((d - expected).abs() < 1e-12);
    }
}
