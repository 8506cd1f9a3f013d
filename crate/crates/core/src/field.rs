//! The guidance vector field `Psi(H) = k_N(D) xi_N(H) + k_T(D) xi_T(H)`.
//!
//! `xi_N` is the negated `L` operator of the distance in its first argument
//! at the nearest curve sample, left unnormalized. `xi_T` is the curve
//! tangent there. Both are fixed-frame twists, so the closed loop is
//! `dH/dt = S[Psi(H)] H`.

use serde::{Deserialize, Serialize};

use crate::curve::{ec_distance, CurveQueryResult, DiscretizedCurve, SearchOptions};
use crate::distance::{ee_distance, ee_distance_se3};
use crate::error::{Error, Result};
use crate::group::{l_operator, GroupElement, GroupKind, Twist, L_OPERATOR_EPS};

/// Scalar gain laws of the distance.
///
/// Implementations must keep `kt(d) > 0` for `d >= 0`, `kn(0) = 0` and
/// `kn(d) > 0` for `d > 0`.
pub trait GainLaw {
    fn kn(&self, d: f64) -> f64;
    fn kt(&self, d: f64) -> f64;
}

/// `k_N = kn_scale tanh(kn_rate sqrt(D))`,
/// `k_T = kt_scale (1 - tanh(kt_rate sqrt(D)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainSchedule {
    pub kn_scale: f64,
    pub kn_rate: f64,
    pub kt_scale: f64,
    pub kt_rate: f64,
}

impl Default for GainSchedule {
    fn default() -> Self {
        GainSchedule { kn_scale: 0.1, kn_rate: 0.75, kt_scale: 0.03, kt_rate: 0.75 }
    }
}

impl GainSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(self.kn_scale) && ok(self.kn_rate) && ok(self.kt_scale) && self.kt_rate.is_finite() && self.kt_rate >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid gains {self:?}")))
        }
    }
}

impl GainLaw for GainSchedule {
    fn kn(&self, d: f64) -> f64 {
        self.kn_scale * (self.kn_rate * d.max(0.0).sqrt()).tanh()
    }

    fn kt(&self, d: f64) -> f64 {
        // 1 - tanh(x) = 2 / (1 + e^{2x}) keeps k_T positive where tanh rounds to 1
        let x = self.kt_rate * d.max(0.0).sqrt();
        (self.kt_scale * 2.0 / (1.0 + (2.0 * x).exp())).max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldOptions {
    /// Below this distance the state counts as on the curve and the normal
    /// term is dropped.
    pub on_curve_tolerance: f64,
    /// Step of the forward-difference `L` operator.
    pub eps: f64,
    pub search: SearchOptions,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions { on_curve_tolerance: 1e-4, eps: L_OPERATOR_EPS, search: SearchOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldEvaluation {
    pub xi: Twist,
    /// Zero when the normal term is dropped on the curve.
    pub xi_n: Twist,
    pub xi_t: Twist,
    pub kn: f64,
    pub kt: f64,
    pub distance: f64,
    pub s_star: f64,
    pub s_star_index: usize,
    pub near_tie: bool,
    pub boundary: bool,
}

/// `xi_N = -(L_V[D](H, H_d(s*)))^T`.
pub fn normal_component(curve: &DiscretizedCurve, h: &GroupElement, query: &CurveQueryResult, opts: &FieldOptions) -> Result<Twist> {
    if query.near_tie {
        return Err(Error::AmbiguousMinimizer);
    }
    if query.distance <= opts.on_curve_tolerance {
        return Err(Error::OnCurve);
    }
    let g = curve.group();
    let w = curve.sample(query.s_star_index);
    let row = if g.kind() == GroupKind::SE3 {
        l_operator(g, |v| ee_distance_se3(v, w).0, h, opts.eps)?
    } else {
        l_operator(g, |v| ee_distance(g, v, w), h, opts.eps)?
    };
    Ok(-row)
}

/// `xi_T = xi_d(s*)`.
pub fn tangent_component(curve: &DiscretizedCurve, query: &CurveQueryResult) -> Result<Twist> {
    if query.near_tie {
        return Err(Error::AmbiguousMinimizer);
    }
    Ok(*curve.tangent(query.s_star_index))
}

/// Field at `h` given an already computed nearest-point query.
pub fn evaluate_from_query<G: GainLaw + ?Sized>(
    curve: &DiscretizedCurve,
    h: &GroupElement,
    query: &CurveQueryResult,
    gains: &G,
    opts: &FieldOptions,
) -> Result<FieldEvaluation> {
    let xi_t = tangent_component(curve, query)?;
    let d = query.distance;
    let kn = gains.kn(d);
    let kt = gains.kt(d);
    let (xi_n, xi) = if d <= opts.on_curve_tolerance {
        (Twist::zeros(xi_t.len()), xi_t * kt)
    } else {
        let xi_n = normal_component(curve, h, query, opts)?;
        (xi_n, xi_n * kn + xi_t * kt)
    };
    Ok(FieldEvaluation {
        xi,
        xi_n,
        xi_t,
        kn,
        kt,
        distance: d,
        s_star: query.s_star,
        s_star_index: query.s_star_index,
        near_tie: query.near_tie,
        boundary: query.boundary,
    })
}

/// `Psi(H)`. Fails with [`Error::AmbiguousMinimizer`] on a near tie; the
/// caller then falls back to [`escape_policy`].
pub fn evaluate_field<G: GainLaw + ?Sized>(
    curve: &DiscretizedCurve,
    h: &GroupElement,
    gains: &G,
    opts: &FieldOptions,
) -> Result<FieldEvaluation> {
    let query = ec_distance(curve, h, &opts.search);
    evaluate_from_query(curve, h, &query, gains, opts)
}

/// Small twist along the path `Phi(sigma, H, H_d(s_k))` at `sigma = 0`,
/// where `s_k` is the lowest-index tied minimizer.
pub fn escape_policy(curve: &DiscretizedCurve, h: &GroupElement, query: &CurveQueryResult, magnitude: f64) -> Result<Twist> {
    let g = curve.group();
    let target = query.tie_indices.iter().copied().min().unwrap_or(query.s_star_index);
    let rel = h.inverse().compose(curve.sample(target));
    let body = g.s_map(&g.log(&rel))?;
    // d/dsigma [H exp(sigma L)] H^-1 at sigma = 0 is H L H^-1
    let fixed = h.matrix() * &(&body * h.inverse().matrix());
    Ok(g.s_inv(&fixed)? * magnitude)
}
