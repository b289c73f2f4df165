//! Adaptive Dormand–Prince 5(4) integration of the arc-length system with
//! event localization.
//!
//! Events are detected by sign changes of `cos θ` (vertical tangent),
//! `sin θ` (horizontal tangent) and `z` (axis crossing) between accepted
//! steps, then refined by bisection. Points inside an accepted step are
//! produced by re-taking a single Dormand–Prince step of the required length
//! from the step's left end, so refined events carry the same local accuracy
//! as the accepted steps themselves.

use std::f64::consts::FRAC_PI_8;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{field, PlanarState, ShrinkerParams};

/// Tolerances, step limits and guards for one integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub event_tol: f64,
    pub s_max: f64,
    pub x_max: f64,
    pub x_min: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            max_step: 0.1,
            event_tol: 1e-12,
            s_max: 100.0,
            x_max: 50.0,
            x_min: 1e-6,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("event_tol", self.event_tol),
            ("s_max", self.s_max),
            ("x_max", self.x_max),
            ("x_min", self.x_min),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} = {v} must be positive and finite"
                )));
            }
        }
        if self.event_tol > self.abs_tol {
            return Err(Error::Config(format!(
                "event_tol = {} must not exceed abs_tol = {}",
                self.event_tol, self.abs_tol
            )));
        }
        if self.x_min >= self.x_max {
            return Err(Error::Config("x_min must be below x_max".into()));
        }
        Ok(())
    }

    /// The same configuration with both error tolerances scaled by `factor`.
    /// `event_tol` is kept at or below the new `abs_tol`.
    pub fn scaled_tolerances(&self, factor: f64) -> Self {
        let abs_tol = self.abs_tol * factor;
        StepperConfig {
            rel_tol: self.rel_tol * factor,
            abs_tol,
            event_tol: self.event_tol.min(abs_tol),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    VerticalTangent,
    HorizontalTangent,
    AxisCrossing,
    NearAxis,
    RadialGuard,
    ArcBudget,
}

impl EventKind {
    /// Guards end an integration whether or not they were requested.
    pub fn is_guard(self) -> bool {
        matches!(
            self,
            EventKind::NearAxis | EventKind::RadialGuard | EventKind::ArcBudget
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub state: PlanarState,
}

/// Why an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Stop {
    /// An event whose kind was in the requested stop set.
    Requested(Event),
    /// A guard (axis, radius, or arc-length budget) that was not requested.
    Guard(Event),
}

impl Stop {
    pub fn event(&self) -> &Event {
        match self {
            Stop::Requested(e) | Stop::Guard(e) => e,
        }
    }

    pub fn kind(&self) -> EventKind {
        self.event().kind
    }
}

/// Accepted step endpoints, the events found along them, and how the run
/// ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<PlanarState>,
    pub events: Vec<Event>,
    pub params: ShrinkerParams,
    pub config: StepperConfig,
    pub stop: Stop,
}

// Dormand–Prince 5(4) tableau. The system is autonomous, so the nodes are
// not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy)]
struct Stepper {
    c: f64,
}

impl Stepper {
    fn f(&self, y: &Vec3) -> Vec3 {
        field(y[0], y[1], y[2], self.c)
    }

    /// One step of size `h` from `y` with `k1 = f(y)`; returns the fifth-order
    /// solution, its derivative, and the embedded error vector.
    fn step(&self, y: &Vec3, k1: &Vec3, h: f64) -> (Vec3, Vec3, Vec3) {
        let mut k = [[0.0; 3]; 7];
        k[0] = *k1;
        for stage in 1..7 {
            let mut yi = *y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage][j];
                if a != 0.0 {
                    for d in 0..3 {
                        yi[d] += h * a * kj[d];
                    }
                }
            }
            k[stage] = self.f(&yi);
            if stage == 6 {
                let mut err = [0.0; 3];
                for d in 0..3 {
                    err[d] = h * (0..7).map(|j| E[j] * k[j][d]).sum::<f64>();
                }
                return (yi, k[6], err);
            }
        }
        unreachable!()
    }

    fn advance(&self, y: &Vec3, h: f64) -> Vec3 {
        let k1 = self.f(y);
        self.step(y, &k1, h).0
    }
}

fn to_vec(st: &PlanarState) -> Vec3 {
    [st.x, st.z, st.theta]
}

fn to_state(y: &Vec3, s: f64) -> PlanarState {
    PlanarState::new(y[0], y[1], y[2], s)
}

const TRACKED: [EventKind; 5] = [
    EventKind::VerticalTangent,
    EventKind::HorizontalTangent,
    EventKind::AxisCrossing,
    EventKind::NearAxis,
    EventKind::RadialGuard,
];

fn event_value(kind: EventKind, y: &Vec3, config: &StepperConfig) -> f64 {
    match kind {
        EventKind::VerticalTangent => y[2].cos(),
        EventKind::HorizontalTangent => y[2].sin(),
        EventKind::AxisCrossing => y[1],
        EventKind::NearAxis => y[0] - config.x_min,
        EventKind::RadialGuard => config.x_max - y[0],
        EventKind::ArcBudget => unreachable!("arc budget is handled by step clamping"),
    }
}

/// Integrates from `start` until an event in `stop_on` or a guard.
pub fn integrate(
    start: PlanarState,
    params: &ShrinkerParams,
    config: &StepperConfig,
    stop_on: &[EventKind],
) -> Result<Trajectory> {
    config.validate()?;
    if !(start.x > config.x_min) {
        return Err(Error::Domain(format!(
            "start x = {} must exceed the axis guard x_min = {}",
            start.x, config.x_min
        )));
    }
    let stepper = Stepper {
        c: params.singular_coefficient(),
    };
    let mut states = vec![start];
    let mut events = Vec::new();

    let mut y = to_vec(&start);
    let mut s = start.s;
    let s_end = start.s + config.s_max;
    let mut k1 = stepper.f(&y);
    let mut h = config.max_step.min(1e-2);

    // Event functions that start at (numerically) zero are ignored until the
    // end of the first accepted step.
    let mut signs: Vec<Option<bool>> = TRACKED
        .iter()
        .map(|&kind| {
            let g = event_value(kind, &y, config);
            (g.abs() > config.event_tol).then_some(g > 0.0)
        })
        .collect();

    loop {
        let remaining = s_end - s;
        if remaining <= 0.0 {
            let ev = Event {
                kind: EventKind::ArcBudget,
                state: to_state(&y, s),
            };
            let stop = if stop_on.contains(&EventKind::ArcBudget) {
                Stop::Requested(ev)
            } else {
                Stop::Guard(ev)
            };
            return Ok(Trajectory {
                states,
                events,
                params: *params,
                config: *config,
                stop,
            });
        }
        let mut h_try = h.min(remaining).min(config.max_step);
        let (y_new, k_new, h_used) = loop {
            if h_try < 1e-14 * (1.0 + s.abs()) {
                return Err(Error::StepFailure {
                    last: to_state(&y, s),
                });
            }
            let (y_new, k_new, err) = stepper.step(&y, &k1, h_try);
            let mut norm: f64 = 0.0;
            for d in 0..3 {
                let scale = config.abs_tol + config.rel_tol * y[d].abs().max(y_new[d].abs());
                norm = norm.max((err[d] / scale).abs());
            }
            let valid = y_new.iter().all(|v| v.is_finite()) && y_new[0] > 0.0;
            let turn_ok = (y_new[2] - y[2]).abs() < FRAC_PI_8;
            if valid && turn_ok && norm <= 1.0 {
                let factor = if norm == 0.0 {
                    5.0
                } else {
                    (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                h = (h_try * factor).min(config.max_step);
                break (y_new, k_new, h_try);
            }
            let shrink = if valid && norm.is_finite() && norm > 1.0 {
                (0.9 * norm.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.25
            };
            h_try *= shrink;
        };

        // Sign changes across this step, localized inside it.
        let mut found: Vec<(f64, EventKind, Vec3)> = Vec::new();
        for (i, &kind) in TRACKED.iter().enumerate() {
            let g_new = event_value(kind, &y_new, config);
            let new_sign = g_new > 0.0;
            let crossed = matches!(signs[i], Some(old) if old != new_sign);
            if crossed {
                let (dh, yy) = refine(&stepper, &y, h_used, kind, config);
                found.push((dh, kind, yy));
            }
            if g_new.abs() > config.event_tol || signs[i].is_none() {
                signs[i] = Some(new_sign);
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0));

        for (dh, kind, yy) in found {
            let ev = Event {
                kind,
                state: to_state(&yy, s + dh),
            };
            events.push(ev);
            let requested = stop_on.contains(&kind);
            if requested || kind.is_guard() {
                states.push(ev.state);
                let stop = if requested {
                    Stop::Requested(ev)
                } else {
                    Stop::Guard(ev)
                };
                return Ok(Trajectory {
                    states,
                    events,
                    params: *params,
                    config: *config,
                    stop,
                });
            }
        }

        y = y_new;
        k1 = k_new;
        s += h_used;
        states.push(to_state(&y, s));
    }
}

/// Bisection for the zero of `kind`'s event function inside a step of size
/// `h` from `y`. Returns the offset and the state there.
fn refine(
    stepper: &Stepper,
    y: &Vec3,
    h: f64,
    kind: EventKind,
    config: &StepperConfig,
) -> (f64, Vec3) {
    let g0 = event_value(kind, y, config);
    let mut lo = 0.0;
    let mut hi = h;
    let mut y_lo = *y;
    let mut y_hi = stepper.advance(y, h);
    let left_positive = g0 > 0.0;
    for _ in 0..200 {
        if hi - lo <= config.event_tol * 1e-3 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let ym = stepper.advance(y, mid);
        let gm = event_value(kind, &ym, config);
        if gm == 0.0 {
            return (mid, ym);
        }
        if (gm > 0.0) == left_positive {
            lo = mid;
            y_lo = ym;
        } else {
            hi = mid;
            y_hi = ym;
        }
        if gm.abs() <= config.event_tol * 1e-3 {
            break;
        }
    }
    let g_lo = event_value(kind, &y_lo, config).abs();
    let g_hi = event_value(kind, &y_hi, config).abs();
    if g_lo < g_hi {
        (lo, y_lo)
    } else {
        (hi, y_hi)
    }
}

/// Resumes integration from the tangent event that ended `traj`; states and
/// events are concatenated.
pub fn continue_through(
    traj: &Trajectory,
    params: &ShrinkerParams,
    config: &StepperConfig,
    stop_on: &[EventKind],
) -> Result<Trajectory> {
    let end = traj.stop.event();
    if !matches!(
        end.kind,
        EventKind::VerticalTangent | EventKind::HorizontalTangent
    ) {
        return Err(Error::Precondition(format!(
            "can only continue through a tangent event, trajectory ended at {:?}",
            end.kind
        )));
    }
    let tail = integrate(end.state, params, config, stop_on)?;
    let mut out = traj.clone();
    out.states.extend_from_slice(&tail.states[1..]);
    out.events.extend(tail.events);
    out.stop = tail.stop;
    out.params = *params;
    out.config = *config;
    Ok(out)
}

impl Trajectory {
    pub fn first(&self) -> &PlanarState {
        &self.states[0]
    }

    pub fn last(&self) -> &PlanarState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// True if the run ended on a radial guard or the arc-length budget.
    pub fn hit_hard_guard(&self) -> bool {
        matches!(
            self.stop,
            Stop::Guard(Event {
                kind: EventKind::RadialGuard | EventKind::ArcBudget,
                ..
            })
        )
    }

    fn stepper(&self) -> Stepper {
        Stepper {
            c: self.params.singular_coefficient(),
        }
    }

    /// State at arc length `s`, clamped to the stored range.
    pub fn state_at(&self, s: f64) -> PlanarState {
        let first = self.first().s;
        let last = self.last().s;
        let s = s.clamp(first, last);
        let idx = match self.states.binary_search_by(|st| st.s.total_cmp(&s)) {
            Ok(i) => return self.states[i],
            Err(i) => i.saturating_sub(1),
        };
        let left = &self.states[idx];
        let y = self.stepper().advance(&to_vec(left), s - left.s);
        to_state(&y, s)
    }

    /// Root of `f(state)` for `s` in `[s_lo, s_hi]`, assuming a sign change.
    pub fn locate<F>(&self, s_lo: f64, s_hi: f64, f: F) -> Option<PlanarState>
    where
        F: Fn(&PlanarState) -> f64,
    {
        let mut lo = s_lo;
        let mut hi = s_hi;
        let f_lo = f(&self.state_at(lo));
        let f_hi = f(&self.state_at(hi));
        if f_lo == 0.0 {
            return Some(self.state_at(lo));
        }
        if f_hi == 0.0 {
            return Some(self.state_at(hi));
        }
        if (f_lo > 0.0) == (f_hi > 0.0) {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = f(&self.state_at(mid));
            if fm == 0.0 {
                return Some(self.state_at(mid));
            }
            if (fm > 0.0) == (f_lo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(self.state_at(0.5 * (lo + hi)))
    }

    /// First root of `f` along the stored states (scanning for a sign change
    /// between consecutive samples).
    pub fn find_first<F>(&self, f: F) -> Option<PlanarState>
    where
        F: Fn(&PlanarState) -> f64,
    {
        self.states.windows(2).find_map(|w| {
            let (a, b) = (f(&w[0]), f(&w[1]));
            if a == 0.0 {
                Some(w[0])
            } else if (a > 0.0) != (b > 0.0) || b == 0.0 {
                self.locate(w[0].s, w[1].s, &f)
            } else {
                None
            }
        })
    }

    /// Samples at uniform arc-length spacing `ds` from the first state to the
    /// last (inclusive of both ends when they fall on the grid).
    pub fn resample_uniform(&self, ds: f64) -> Vec<PlanarState> {
        let s0 = self.first().s;
        let span = self.last().s - s0;
        let count = (span / ds).floor() as usize;
        (0..=count)
            .map(|k| self.state_at(s0 + ds * k as f64))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{launch_state, SeriesSeed};
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    fn p2() -> ShrinkerParams {
        ShrinkerParams::default()
    }

    #[test]
    fn cylinder_stays_put() {
        let config = StepperConfig {
            s_max: 20.0,
            ..Default::default()
        };
        let traj = integrate(
            PlanarState::new(SQRT_2, 0.0, FRAC_PI_2, 0.0),
            &p2(),
            &config,
            &[],
        )
        .unwrap();
        assert_eq!(traj.stop.kind(), EventKind::ArcBudget);
        assert!(matches!(traj.stop, Stop::Guard(_)));
        assert!(traj
            .events
            .iter()
            .all(|e| e.kind == EventKind::AxisCrossing || e.kind == EventKind::ArcBudget));
        let worst = traj
            .states
            .iter()
            .map(|s| (s.x - SQRT_2).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 10.0 * config.abs_tol, "{worst}");
        assert!((traj.last().s - 20.0).abs() < 1e-12);
    }

    #[test]
    fn round_sphere_vertical_tangent() {
        let start = launch_state(&SeriesSeed::new(2.0, &p2()).unwrap());
        let traj = integrate(
            start,
            &p2(),
            &StepperConfig::default(),
            &[EventKind::VerticalTangent],
        )
        .unwrap();
        let ev = traj.stop.event();
        assert_eq!(ev.kind, EventKind::VerticalTangent);
        assert!((ev.state.x - 2.0).abs() < 1e-6 && ev.state.z.abs() < 1e-6);
        assert!(ev.state.theta.cos().abs() <= 1e-12);
        for st in &traj.states {
            assert!((st.x.hypot(st.z) - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn continue_sphere_to_axis() {
        let start = launch_state(&SeriesSeed::new(2.0, &p2()).unwrap());
        let config = StepperConfig::default();
        let first = integrate(start, &p2(), &config, &[EventKind::VerticalTangent]).unwrap();
        let full = continue_through(&first, &p2(), &config, &[EventKind::VerticalTangent]).unwrap();
        assert_eq!(full.stop.kind(), EventKind::NearAxis);
        let end = full.last();
        assert!(end.x <= config.x_min * 1.0001);
        assert!((end.z + 2.0).abs() < 1e-6);
        assert!(full.states.windows(2).all(|w| w[1].s > w[0].s));
    }

    #[test]
    fn small_height_turns_back_past_vertical() {
        let start = launch_state(&SeriesSeed::new(0.5, &p2()).unwrap());
        let config = StepperConfig::default();
        let first = integrate(start, &p2(), &config, &[EventKind::VerticalTangent]).unwrap();
        let vt = first.stop.event().state;
        assert!(vt.x > SQRT_2 && vt.z < 0.0);
        let cont =
            continue_through(&first, &p2(), &config, &[EventKind::HorizontalTangent]).unwrap();
        let after: Vec<_> = cont.states.iter().filter(|s| s.s > vt.s).collect();
        assert!(after.windows(2).all(|w| w[1].theta < w[0].theta));
        assert!(after.last().unwrap().theta < -FRAC_PI_2);
        assert!(after.last().unwrap().x < vt.x);
    }

    #[test]
    fn continuing_cylinder_adds_nothing_but_budget() {
        let config = StepperConfig {
            s_max: 5.0,
            ..Default::default()
        };
        let start = PlanarState::new(SQRT_2, 0.5, FRAC_PI_2, 0.0);
        let traj = integrate(start, &p2(), &config, &[EventKind::VerticalTangent]).unwrap();
        assert_eq!(traj.stop.kind(), EventKind::ArcBudget);
        assert!(traj.events_of(EventKind::VerticalTangent).next().is_none());
        assert!(continue_through(&traj, &p2(), &config, &[]).is_err());
    }

    #[test]
    fn start_on_event_is_not_reported() {
        let start = PlanarState::new(3.3, 0.0, FRAC_PI_2, 0.0);
        let traj = integrate(
            start,
            &p2(),
            &StepperConfig::default(),
            &[EventKind::VerticalTangent],
        )
        .unwrap();
        let ev = traj.stop.event();
        assert!(ev.state.s > 1.0);
        assert!(ev.state.x < SQRT_2);
        assert!((ev.state.theta - 1.5 * PI).abs() < 1e-9);
        assert!(traj
            .events_of(EventKind::AxisCrossing)
            .all(|e| e.state.s > 1.0));
    }

    #[test]
    fn consecutive_angles_are_close() {
        let start = launch_state(&SeriesSeed::new(0.01, &p2()).unwrap());
        let traj = integrate(
            start,
            &p2(),
            &StepperConfig {
                s_max: 30.0,
                ..Default::default()
            },
            &[],
        )
        .unwrap();
        assert!(traj
            .states
            .windows(2)
            .all(|w| (w[1].theta - w[0].theta).abs() < FRAC_PI_8));
    }

    #[test]
    fn dense_states_match_stored_steps() {
        let start = launch_state(&SeriesSeed::new(1.0, &p2()).unwrap());
        let traj = integrate(
            start,
            &p2(),
            &StepperConfig::default(),
            &[EventKind::VerticalTangent],
        )
        .unwrap();
        for w in traj.states.windows(2).take(50) {
            let st = traj.state_at(w[1].s);
            assert_eq!(st, w[1]);
            let mid = traj.state_at(0.5 * (w[0].s + w[1].s));
            assert!(mid.s > w[0].s && mid.s < w[1].s);
        }
    }

    #[test]
    fn reversibility() {
        let start = launch_state(&SeriesSeed::new(0.7, &p2()).unwrap());
        let config = StepperConfig {
            s_max: 4.0,
            ..Default::default()
        };
        let fwd = integrate(start, &p2(), &config, &[]).unwrap();
        assert_eq!(fwd.stop.kind(), EventKind::ArcBudget);
        let back = integrate(fwd.last().reversed(0.0), &p2(), &config, &[]).unwrap();
        let end = back.last();
        assert!((end.x - start.x).abs() < 100.0 * config.abs_tol);
        assert!((end.z - start.z).abs() < 100.0 * config.abs_tol);
        assert!((end.theta - PI - start.theta).abs() < 100.0 * config.abs_tol);
    }

    #[test]
    fn rejects_bad_config_and_start() {
        let bad = StepperConfig {
            event_tol: 1.0,
            ..Default::default()
        };
        let st = PlanarState::new(1.0, 0.0, 0.0, 0.0);
        assert!(integrate(st, &p2(), &bad, &[]).is_err());
        let near = PlanarState::new(1e-7, 0.0, 0.0, 0.0);
        assert!(integrate(near, &p2(), &StepperConfig::default(), &[]).is_err());
    }

    #[test]
    fn radial_guard_stops_run() {
        let config = StepperConfig {
            x_max: 2.5,
            ..Default::default()
        };
        let traj = integrate(PlanarState::new(2.4, 0.0, 0.0, 0.0), &p2(), &config, &[]).unwrap();
        assert_eq!(traj.stop.kind(), EventKind::RadialGuard);
        assert!(traj.hit_hard_guard());
        assert!((traj.last().x - 2.5).abs() < 1e-9);
    }
}
