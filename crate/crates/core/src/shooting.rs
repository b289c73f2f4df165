//! Branch decomposition of profiles launched from the axis, and the two
//! shooting problems built on it: the height of the immersed sphere and the
//! radius of the torus.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{count_self_intersections, BranchTag, ClosedCurve, Crossing, CurvePoint};
use crate::error::{Error, Result};
use crate::integrator::{integrate, Event, EventKind, StepperConfig, Stop, Trajectory};
use crate::ode::{PlanarState, ShrinkerParams};
use crate::series::{launch_state, SeriesSeed, SERIES_B_CAP};

/// Number of samples taken along the series patch when a profile is traced.
pub const SEED_SAMPLES: usize = 32;

/// Default search interval for the sphere height.
pub const SPHERE_BRACKET: (f64, f64) = (1e-3, 2.0);

/// Default search interval for the torus radius.
pub const TORUS_BRACKET: (f64, f64) = (3.0, 3.6);

/// A profile launched from `(0, b)` split at its tangent events.
///
/// `gamma` runs from the edge of the series patch to the first vertical
/// tangent. `beta` continues from there to the next vertical tangent, or
/// until a guard stops it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDecomposition {
    pub b: f64,
    pub seed_states: Vec<PlanarState>,
    pub gamma: Trajectory,
    pub beta: Option<Trajectory>,
    /// First vertical tangent, where `gamma` ends.
    pub star: Option<PlanarState>,
    /// First horizontal tangent on `beta`: the minimum of the graph over `z`.
    pub minimum: Option<PlanarState>,
    /// Second vertical tangent, where `beta` ends.
    pub star2: Option<PlanarState>,
    /// Where `gamma` crosses `z = 0`, if it does.
    pub zero: Option<PlanarState>,
    /// Where the slope of `gamma` first reaches `−1`.
    pub unit_slope: Option<PlanarState>,
    pub horizontal_tangents_on_beta: usize,
}

impl BranchDecomposition {
    pub fn x_star(&self) -> Option<f64> {
        self.star.map(|s| s.x)
    }

    pub fn z_star(&self) -> Option<f64> {
        self.star.map(|s| s.z)
    }

    pub fn x_m(&self) -> Option<f64> {
        self.minimum.map(|s| s.x)
    }

    pub fn x_star2(&self) -> Option<f64> {
        self.star2.map(|s| s.x)
    }

    pub fn z_star2(&self) -> Option<f64> {
        self.star2.map(|s| s.z)
    }

    pub fn x_zero(&self) -> Option<f64> {
        self.zero.map(|s| s.x)
    }

    pub fn x_one(&self) -> Option<f64> {
        self.unit_slope.map(|s| s.x)
    }

    /// How the traced profile ended.
    pub fn stop(&self) -> &Stop {
        match &self.beta {
            Some(b) => &b.stop,
            None => &self.gamma.stop,
        }
    }

    /// All events on both branches in order of arc length.
    pub fn events(&self) -> Vec<Event> {
        let mut out = self.gamma.events.clone();
        if let Some(b) = &self.beta {
            out.extend_from_slice(&b.events);
        }
        out
    }

    /// Final state of the traced profile.
    pub fn end(&self) -> PlanarState {
        match &self.beta {
            Some(b) => *b.last(),
            None => *self.gamma.last(),
        }
    }
}

/// Traces the profile with axis height `b` until its second vertical tangent
/// or a guard.
pub fn trace_profile(
    b: f64,
    params: &ShrinkerParams,
    config: &StepperConfig,
) -> Result<BranchDecomposition> {
    if !(b > 0.0 && b <= SERIES_B_CAP) {
        return Err(Error::SeedRange {
            b,
            cap: SERIES_B_CAP,
        });
    }
    let seed = SeriesSeed::new(b, params)?;
    let seed_states = seed.sample(SEED_SAMPLES);
    let stop_on = [EventKind::VerticalTangent];
    let gamma = integrate(launch_state(&seed), params, config, &stop_on)?;
    let zero = gamma
        .events_of(EventKind::AxisCrossing)
        .next()
        .map(|e| e.state);
    let unit_slope = gamma.find_first(|st| st.theta + FRAC_PI_4);

    let (star, beta) = match gamma.stop {
        Stop::Requested(ev) => {
            let beta = integrate(ev.state, params, config, &stop_on)?;
            (Some(ev.state), Some(beta))
        }
        Stop::Guard(_) => (None, None),
    };
    let (minimum, star2, hts) = match &beta {
        Some(beta) => {
            let mut hts = beta.events_of(EventKind::HorizontalTangent);
            let minimum = hts.next().map(|e| e.state);
            let count = usize::from(minimum.is_some()) + hts.count();
            let star2 = match beta.stop {
                Stop::Requested(ev) => Some(ev.state),
                Stop::Guard(_) => None,
            };
            (minimum, star2, count)
        }
        None => (None, None, 0),
    };
    Ok(BranchDecomposition {
        b,
        seed_states,
        gamma,
        beta,
        star,
        minimum,
        star2,
        zero,
        unit_slope,
        horizontal_tangents_on_beta: hts,
    })
}

/// Shape of a traced profile after its first vertical tangent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    /// `beta` has a minimum and reaches its second vertical tangent above the
    /// `x`-axis.
    MinThenPositive,
    /// `beta` has a minimum but ends on or below the `x`-axis.
    MinThenNegative,
    /// `beta` turns back without a minimum.
    NoMin,
    /// A hard guard ended the run before the shape was decided.
    Indeterminate,
}

/// Classifies a decomposition. A run that reaches the axis after its minimum
/// is judged by the sign of its final height.
pub fn classify(d: &BranchDecomposition, config: &StepperConfig) -> Outcome {
    let Some(beta) = &d.beta else {
        return Outcome::Indeterminate;
    };
    if d.gamma.hit_hard_guard() || beta.hit_hard_guard() {
        return Outcome::Indeterminate;
    }
    if d.minimum.is_none() {
        return Outcome::NoMin;
    }
    let z_end = d.star2.map_or(beta.last().z, |s| s.z);
    if z_end > config.event_tol {
        Outcome::MinThenPositive
    } else {
        Outcome::MinThenNegative
    }
}

/// Tolerances for the root searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    /// Bisection stops once the bracket is narrower than this.
    pub param_tol: f64,
    /// Largest accepted endpoint mismatch of the assembled curve.
    pub closure_tol: f64,
    pub max_iterations: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            param_tol: 1e-12,
            closure_tol: 1e-8,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Sphere,
    Torus,
}

/// What was observed at one end of a bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// Classification of a profile launched from the axis.
    Profile(Outcome),
    /// Height at the returning vertical tangent of a torus candidate.
    Height(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketStep {
    pub lo: f64,
    pub hi: f64,
    pub probe_lo: Probe,
    pub probe_hi: Probe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootReport {
    pub target: Target,
    pub root: f64,
    pub bracket_history: Vec<BracketStep>,
    pub iterations: usize,
    pub closure_residual: f64,
    pub closed_curve: ClosedCurve,
    pub self_intersections: Vec<Crossing>,
    /// Tangent and axis events on the half of the curve that was integrated.
    pub events: Vec<Event>,
}

fn check_bracket(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
        return Err(Error::BracketInvalid(format!(
            "need 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// One secant step between `(a, fa)` and `(b, fb)`, kept inside the interval.
fn secant(a: f64, fa: f64, b: f64, fb: f64) -> Option<f64> {
    let t = a - fa * (b - a) / (fb - fa);
    (t.is_finite() && t > a.min(b) && t < a.max(b)).then_some(t)
}

/// Bisection for the axis height at which the profile closes up into an
/// immersed sphere, followed by assembly of the closed curve.
pub fn find_sphere_height(
    params: &ShrinkerParams,
    config: &StepperConfig,
    bracket: (f64, f64),
    opts: &ShootOptions,
) -> Result<ShootReport> {
    let (mut lo, mut hi) = bracket;
    check_bracket(lo, hi)?;
    if hi > SERIES_B_CAP {
        return Err(Error::BracketInvalid(format!(
            "upper end {hi} exceeds the series range {SERIES_B_CAP}"
        )));
    }
    let probe = |b: f64| -> Result<(BranchDecomposition, Outcome)> {
        let d = trace_profile(b, params, config)?;
        let o = classify(&d, config);
        Ok((d, o))
    };
    let (mut d_lo, o_lo) = probe(lo)?;
    let (mut d_hi, o_hi) = probe(hi)?;
    if o_lo != Outcome::MinThenPositive || o_hi == Outcome::MinThenPositive {
        return Err(Error::BracketInvalid(format!(
            "expected MinThenPositive at {lo} and not at {hi}, found {o_lo:?} and {o_hi:?}"
        )));
    }
    if o_hi == Outcome::Indeterminate {
        return Err(Error::BracketInvalid(format!(
            "profile at {hi} is indeterminate"
        )));
    }
    let mut history = vec![BracketStep {
        lo,
        hi,
        probe_lo: Probe::Profile(o_lo),
        probe_hi: Probe::Profile(o_hi),
    }];
    let mut o_hi = o_hi;
    let mut iterations = 0;
    while hi - lo > opts.param_tol {
        if iterations >= opts.max_iterations {
            return Err(Error::NoConvergence {
                reason: "iteration limit reached".into(),
                lo,
                hi,
                residual: d_lo.z_star2().unwrap_or(f64::NAN).abs(),
            });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let (d, o) = probe(mid)?;
        match o {
            Outcome::MinThenPositive => {
                lo = mid;
                d_lo = d;
            }
            Outcome::Indeterminate => {
                return Err(Error::NoConvergence {
                    reason: format!("indeterminate profile at b = {mid}"),
                    lo,
                    hi,
                    residual: f64::NAN,
                })
            }
            _ => {
                hi = mid;
                d_hi = d;
                o_hi = o;
            }
        }
        history.push(BracketStep {
            lo,
            hi,
            probe_lo: Probe::Profile(Outcome::MinThenPositive),
            probe_hi: Probe::Profile(o_hi),
        });
    }

    // The closing profile has z** = 0, and z** is smooth in b near the
    // root, so a secant step between the bracket ends sharpens the estimate.
    let mut best = d_lo;
    let mut best_res = best.z_star2().map_or(f64::INFINITY, f64::abs);
    let mut candidates = vec![];
    if let (Some(z_lo), Some(z_hi)) = (best.z_star2(), d_hi.z_star2()) {
        if d_hi.minimum.is_some() {
            if let Some(t) = secant(lo, z_lo, hi, z_hi) {
                candidates.push(probe(t)?.0);
            }
            candidates.push(d_hi);
        }
    }
    for c in candidates {
        if c.minimum.is_some() {
            if let Some(z) = c.z_star2() {
                if z.abs() < best_res {
                    best_res = z.abs();
                    best = c;
                }
            }
        }
    }
    if !(best_res <= opts.closure_tol) {
        return Err(Error::NoConvergence {
            reason: "closure residual above tolerance at the final bracket".into(),
            lo,
            hi,
            residual: best_res,
        });
    }
    let curve = assemble_closed_curve(&best, opts.closure_tol)?;
    Ok(ShootReport {
        target: Target::Sphere,
        root: best.b,
        bracket_history: history,
        iterations,
        closure_residual: best_res,
        self_intersections: count_self_intersections(&curve),
        events: best.events(),
        closed_curve: curve,
    })
}

/// Builds the closed profile from a decomposition by reflecting across the
/// `x`-axis.
///
/// If the profile reaches its second vertical tangent on the axis the result
/// is `γ ∪ β ∪ −β ∪ −γ`; if already the first vertical tangent lies on the
/// axis it is `γ ∪ −γ`.
pub fn assemble_closed_curve(d: &BranchDecomposition, closure_tol: f64) -> Result<ClosedCurve> {
    let limit = 10.0 * closure_tol;
    let mut points: Vec<CurvePoint> = d.seed_states[..d.seed_states.len() - 1]
        .iter()
        .map(|st| CurvePoint::from_state(st, BranchTag::Gamma))
        .collect();
    points.extend(
        d.gamma
            .states
            .iter()
            .map(|st| CurvePoint::from_state(st, BranchTag::Gamma)),
    );

    let z_star = d.z_star();
    let z_star2 = d.z_star2();
    match (z_star, z_star2, &d.beta) {
        (_, Some(z2), Some(beta)) if z2.abs() <= limit && d.minimum.is_some() => {
            points.extend(
                beta.states[1..]
                    .iter()
                    .map(|st| CurvePoint::from_state(st, BranchTag::Beta)),
            );
        }
        (Some(z1), _, _) if z1.abs() <= limit => {}
        _ => {
            let mismatch = [z_star, z_star2]
                .into_iter()
                .flatten()
                .map(f64::abs)
                .fold(f64::INFINITY, f64::min);
            return Err(Error::ClosureFailure { mismatch, limit });
        }
    }
    let mut curve = ClosedCurve::new(points);
    curve.extend_with_reflection(|t| match t {
        BranchTag::Gamma => BranchTag::GammaRef,
        BranchTag::Beta => BranchTag::BetaRef,
        other => other,
    });
    Ok(curve)
}

/// Profile launched vertically upward from `(r, 0)`, integrated to its next
/// vertical tangent.
pub fn trace_torus_candidate(
    r: f64,
    params: &ShrinkerParams,
    config: &StepperConfig,
) -> Result<Trajectory> {
    let start = PlanarState::new(r, 0.0, FRAC_PI_2, 0.0);
    integrate(start, params, config, &[EventKind::VerticalTangent])
}

/// Height at which a torus candidate returns to vertical after turning
/// inward over the top, or `None` if it never does.
pub fn torus_return_height(traj: &Trajectory) -> Option<f64> {
    match traj.stop {
        Stop::Requested(ev) if ev.state.theta > PI => Some(ev.state.z),
        _ => None,
    }
}

/// Bisection for the radius at which the vertical launch from the `x`-axis
/// returns vertically to the axis, closing into a torus profile.
pub fn find_torus_radius(
    params: &ShrinkerParams,
    config: &StepperConfig,
    bracket: (f64, f64),
    opts: &ShootOptions,
) -> Result<ShootReport> {
    let (mut lo, mut hi) = bracket;
    check_bracket(lo, hi)?;
    let probe = |r: f64| -> Result<(Trajectory, Option<f64>)> {
        let t = trace_torus_candidate(r, params, config)?;
        let h = torus_return_height(&t);
        Ok((t, h))
    };
    let (mut t_lo, h_lo) = probe(lo)?;
    let (mut t_hi, h_hi) = probe(hi)?;
    let (Some(mut h_lo), Some(mut h_hi)) = (h_lo, h_hi) else {
        return Err(Error::BracketInvalid(format!(
            "candidates at {lo} and {hi} must both return to vertical after turning over"
        )));
    };
    if (h_lo > 0.0) == (h_hi > 0.0) {
        return Err(Error::BracketInvalid(format!(
            "return heights {h_lo:e} at {lo} and {h_hi:e} at {hi} have the same sign"
        )));
    }
    let mut history = vec![BracketStep {
        lo,
        hi,
        probe_lo: Probe::Height(h_lo),
        probe_hi: Probe::Height(h_hi),
    }];
    let mut iterations = 0;
    while hi - lo > opts.param_tol {
        if iterations >= opts.max_iterations {
            return Err(Error::NoConvergence {
                reason: "iteration limit reached".into(),
                lo,
                hi,
                residual: h_lo.abs().min(h_hi.abs()),
            });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let (t, h) = probe(mid)?;
        let Some(h) = h else {
            return Err(Error::NoConvergence {
                reason: format!("candidate at r = {mid} does not return to vertical"),
                lo,
                hi,
                residual: f64::NAN,
            });
        };
        if (h > 0.0) == (h_lo > 0.0) {
            lo = mid;
            h_lo = h;
            t_lo = t;
        } else {
            hi = mid;
            h_hi = h;
            t_hi = t;
        }
        history.push(BracketStep {
            lo,
            hi,
            probe_lo: Probe::Height(h_lo),
            probe_hi: Probe::Height(h_hi),
        });
    }

    let (mut best, mut best_res, mut root) = if h_lo.abs() <= h_hi.abs() {
        (t_lo, h_lo.abs(), lo)
    } else {
        (t_hi, h_hi.abs(), hi)
    };
    if let Some(r) = secant(lo, h_lo, hi, h_hi) {
        let (t, h) = probe(r)?;
        if let Some(h) = h {
            if h.abs() < best_res {
                best = t;
                best_res = h.abs();
                root = r;
            }
        }
    }
    if !(best_res <= opts.closure_tol) {
        return Err(Error::NoConvergence {
            reason: "closure residual above tolerance at the final bracket".into(),
            lo,
            hi,
            residual: best_res,
        });
    }
    let curve = assemble_torus(&best);
    Ok(ShootReport {
        target: Target::Torus,
        root,
        bracket_history: history,
        iterations,
        closure_residual: best_res,
        self_intersections: count_self_intersections(&curve),
        events: best.events.clone(),
        closed_curve: curve,
    })
}

/// Closes the upper half of a torus profile by reflection across the
/// `x`-axis. The first and last points coincide.
pub fn assemble_torus(half: &Trajectory) -> ClosedCurve {
    let points = half
        .states
        .iter()
        .map(|st| CurvePoint::from_state(st, BranchTag::Torus))
        .collect();
    let mut curve = ClosedCurve::new(points);
    curve.extend_with_reflection(|t| t);
    curve
}

/// Classification at one axis height of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub b: f64,
    pub outcome: Outcome,
    pub z_star2: Option<f64>,
}

/// Classifies `count` log-spaced axis heights in `[lo, hi]`, in parallel.
pub fn sweep_outcomes(
    params: &ShrinkerParams,
    config: &StepperConfig,
    lo: f64,
    hi: f64,
    count: usize,
) -> Result<Vec<SweepSample>> {
    check_bracket(lo, hi)?;
    if count < 2 {
        return Err(Error::Config(format!(
            "sweep needs at least 2 samples, got {count}"
        )));
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 / (count - 1) as f64;
            let bk = if k == count - 1 {
                hi
            } else {
                (a + t * (b - a)).exp()
            };
            let d = trace_profile(bk, params, config)?;
            Ok(SweepSample {
                b: bk,
                outcome: classify(&d, config),
                z_star2: d.z_star2(),
            })
        })
        .collect()
}

/// Adjacent sample pairs across which membership in `MinThenPositive`
/// changes. Each pair brackets a boundary of the set.
pub fn predicate_brackets(samples: &[SweepSample]) -> Vec<(f64, f64)> {
    samples
        .windows(2)
        .filter(|w| {
            (w[0].outcome == Outcome::MinThenPositive) != (w[1].outcome == Outcome::MinThenPositive)
        })
        .map(|w| (w[0].b, w[1].b))
        .collect()
}
