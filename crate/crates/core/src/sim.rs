//! Closed-loop integration of `dH/dt = S[Psi(H)] H`.
//!
//! Each step holds the field constant over `dt` and applies the exact
//! group exponential. States flagged as near ties take one step along the
//! escape twist instead.

use std::fmt::Write as _;
use std::io::Write;

use crate::curve::{ec_distance, DiscretizedCurve};
use crate::error::{Error, Result};
use crate::field::{escape_policy, evaluate_from_query, FieldEvaluation, FieldOptions, GainLaw, GainSchedule};
use crate::group::{group_exp_step, rotation_angle, GroupElement, GroupKind, Twist, MEMBERSHIP_TOL};
use crate::matrix::SquareMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub dt: f64,
    pub duration: f64,
    pub initial_state: GroupElement,
    pub gains: GainSchedule,
    /// Kept with the run for reproducibility; the escape policy itself is
    /// deterministic.
    pub seed: u64,
    pub escape_magnitude: f64,
    pub field: FieldOptions,
}

impl SimulationConfig {
    pub fn new(initial_state: GroupElement) -> Self {
        SimulationConfig {
            dt: 0.01,
            duration: 150.0,
            initial_state,
            gains: GainSchedule::default(),
            seed: 0,
            escape_magnitude: 1e-3,
            field: FieldOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidConfig(format!("duration must be non-negative, got {}", self.duration)));
        }
        if !(self.escape_magnitude >= 0.0 && self.escape_magnitude.is_finite()) {
            return Err(Error::InvalidConfig("escape_magnitude must be non-negative".into()));
        }
        self.gains.validate()
    }

    /// `floor(duration / dt)` steps, tolerant to round-off in the ratio.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt * (1.0 + 1e-12)).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next: GroupElement,
    pub evaluation: FieldEvaluation,
    /// The escape twist replaced the field for this step.
    pub escaped: bool,
}

/// One closed-loop step from `h`.
pub fn step<G: GainLaw + ?Sized>(
    curve: &DiscretizedCurve,
    h: &GroupElement,
    gains: &G,
    opts: &FieldOptions,
    escape_magnitude: f64,
    dt: f64,
) -> Result<StepOutcome> {
    let g = curve.group();
    let query = ec_distance(curve, h, &opts.search);
    let (evaluation, escaped) = if query.near_tie {
        let xi = escape_policy(curve, h, &query, escape_magnitude)?;
        let zero = Twist::zeros(g.dim());
        let d = query.distance;
        let evaluation = FieldEvaluation {
            xi,
            xi_n: zero,
            xi_t: zero,
            kn: gains.kn(d),
            kt: gains.kt(d),
            distance: d,
            s_star: query.s_star,
            s_star_index: query.s_star_index,
            near_tie: true,
            boundary: query.boundary,
        };
        (evaluation, true)
    } else {
        (evaluate_from_query(curve, h, &query, gains, opts)?, false)
    };
    let next = group_exp_step(g, h, &evaluation.xi, dt)?;
    let residual = g.membership_residual(next.matrix());
    if !(residual <= MEMBERSHIP_TOL) {
        return Err(Error::ManifoldDrift { residual });
    }
    Ok(StepOutcome { next, evaluation, escaped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub state: SquareMatrix,
    pub s_star: f64,
    pub s_star_index: usize,
    pub distance: f64,
    pub xi_n_norm: f64,
    pub xi_t_norm: f64,
    pub kn: f64,
    pub kt: f64,
    pub position_error: Option<f64>,
    pub orientation_error_deg: Option<f64>,
    pub near_tie: bool,
    pub escaped: bool,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub kind: GroupKind,
    pub order: usize,
    pub rows: Vec<TraceRow>,
}

impl SimulationTrace {
    pub fn escape_count(&self) -> usize {
        self.rows.iter().filter(|r| r.escaped).count()
    }

    pub fn final_distance(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.distance)
    }

    /// Largest `max|Q^T Q - I|_F` over the trace; zero for translation groups.
    pub fn max_rotation_residual(&self) -> f64 {
        self.rows
            .iter()
            .filter(|_| matches!(self.kind, GroupKind::SE3 | GroupKind::SO3))
            .map(|r| {
                let q = r.state.block(3);
                (q.transpose() * q - SquareMatrix::identity(3)).frobenius_norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["t".to_string()];
        for i in 0..self.order {
            for j in 0..self.order {
                cols.push(format!("h{i}{j}"));
            }
        }
        cols.extend(
            ["s_star", "D", "xi_n_norm", "xi_t_norm", "kN", "kT", "position_error_m", "orientation_error_deg", "near_tie", "escape"]
                .map(String::from),
        );
        cols.join(",")
    }

    /// CSV with one header row; reals carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.header())?;
        let mut line = String::new();
        for r in &self.rows {
            line.clear();
            let _ = write!(line, "{:.16e}", r.t);
            for x in r.state.as_slice() {
                let _ = write!(line, ",{:.16e}", x);
            }
            for x in [r.s_star, r.distance, r.xi_n_norm, r.xi_t_norm, r.kn, r.kt] {
                let _ = write!(line, ",{:.16e}", x);
            }
            for x in [r.position_error, r.orientation_error_deg] {
                match x {
                    Some(v) => {
                        let _ = write!(line, ",{:.16e}", v);
                    }
                    None => line.push(','),
                }
            }
            let _ = write!(line, ",{},{}", r.near_tie as u8, r.escaped as u8);
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Position error (metres) and orientation error (degrees) of `h`
/// relative to `h_star`.
pub fn pose_errors(kind: GroupKind, h: &GroupElement, h_star: &GroupElement) -> Result<(f64, f64)> {
    if kind != GroupKind::SE3 {
        return Err(Error::UndefinedForGroup);
    }
    let t = h.translation();
    let ts = h_star.translation();
    let pos = t.iter().zip(&ts).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let q = h.rotation();
    let qs = h_star.rotation();
    let mut rel = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            rel[i][j] = (0..3).map(|k| qs[k][i] * q[k][j]).sum();
        }
    }
    Ok((pos, rotation_angle(&rel).to_degrees()))
}

/// Runs the closed loop for `floor(duration/dt)` steps and records
/// `floor(duration/dt) + 1` rows.
pub fn run(curve: &DiscretizedCurve, config: &SimulationConfig) -> Result<SimulationTrace> {
    config.validate()?;
    let g = curve.group();
    let residual = g.membership_residual(config.initial_state.matrix());
    if !(residual <= MEMBERSHIP_TOL) {
        return Err(Error::OffGroup { residual });
    }
    let steps = config.steps();
    let mut rows = Vec::with_capacity(steps + 1);
    let mut h = config.initial_state;
    for k in 0..=steps {
        let outcome = step(curve, &h, &config.gains, &config.field, config.escape_magnitude, config.dt)?;
        let e = &outcome.evaluation;
        let errors = pose_errors(g.kind(), &h, curve.sample(e.s_star_index)).ok();
        rows.push(TraceRow {
            t: k as f64 * config.dt,
            state: *h.matrix(),
            s_star: e.s_star,
            s_star_index: e.s_star_index,
            distance: e.distance,
            xi_n_norm: e.xi_n.norm(),
            xi_t_norm: e.xi_t.norm(),
            kn: e.kn,
            kt: e.kt,
            position_error: errors.map(|x| x.0),
            orientation_error_deg: errors.map(|x| x.1),
            near_tie: e.near_tie,
            escaped: outcome.escaped,
            boundary: e.boundary,
        });
        if k < steps {
            h = outcome.next;
        }
    }
    Ok(SimulationTrace { kind: g.kind(), order: g.order(), rows })
}

/// Number of full laps of `s*` along a closed curve, counting signed index
/// increments of less than half the curve per row.
pub fn laps(curve: &DiscretizedCurve, trace: &SimulationTrace) -> f64 {
    let n = curve.len() as i64;
    let mut total = 0i64;
    for w in trace.rows.windows(2) {
        let mut d = w[1].s_star_index as i64 - w[0].s_star_index as i64;
        if curve.is_closed() {
            if d > n / 2 {
                d -= n;
            } else if d < -n / 2 {
                d += n;
            }
        }
        total += d;
    }
    total as f64 / n as f64
}
