//! Power-series launch near the singular point `x = 0`.
//!
//! A solution with `γ(0) = b`, `γ'(0) = 0` is written as `Σ a_i x^i`.
//! Matching powers of `x` in
//!
//! ```text
//! γ'' = −γ/2 + xγ'/2 − (n−1)γ'/x − γγ'²/2 + xγ'³/2 − (n−1)γ'³/x
//! ```
//!
//! gives, for `m ≥ 0`,
//!
//! ```text
//! (m+2)(m+n) a_{m+2} = ½(m−1) a_m
//!                    − ½ a_0 Σ_{i+j=m} (i+1)(j+1) a_{i+1} a_{j+1}
//!                    + ½ Σ_{i+j+k=m−1} (i+1)(j+1) k a_{i+1} a_{j+1} a_{k+1}
//!                    − (n−1) Σ_{i+j+k=m+1} (i+1)(j+1)(k+1) a_{i+1} a_{j+1} a_{k+1}
//! ```
//!
//! which for `n = 2` has left side `(m+2)²`. All odd coefficients vanish.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{PlanarState, ShrinkerParams};

/// Default truncation half-order: coefficients `a_0 … a_{2M}`.
pub const DEFAULT_HALF_ORDER: usize = 20;
/// Upper limit on the launch patch radius.
pub const DEFAULT_PATCH_LIMIT: f64 = 0.1;
/// Largest `|b|` for which the seed is trusted.
pub const SERIES_B_CAP: f64 = 4.0;
/// Any coefficient larger than this aborts construction.
pub const COEFFICIENT_CAP: f64 = 1e100;

/// Truncated even power series for the solution through `(0, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSeed {
    b: f64,
    n: u32,
    coeffs: Vec<f64>,
    half_order: usize,
    growth: f64,
    patch_radius: f64,
}

/// Value and first two derivatives of the truncated series at a point,
/// together with a bound on the neglected tail of the value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedEval {
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
    pub tail_bound: f64,
}

/// Right-hand side of the coefficient recurrence for index `m + 2`, divided
/// by `(m+2)(m+n)`. Reads only `a[0..=m+1]`.
fn next_coefficient(a: &[f64], m: usize, n: u32) -> f64 {
    let c = f64::from(n - 1);
    let at = |i: usize| a.get(i).copied().unwrap_or(0.0);
    let mf = m as f64;

    let mut rhs = 0.5 * (mf - 1.0) * at(m);

    let mut pair = 0.0;
    for i in 0..=m {
        let j = m - i;
        pair += ((i + 1) * (j + 1)) as f64 * at(i + 1) * at(j + 1);
    }
    rhs -= 0.5 * at(0) * pair;

    if m >= 1 {
        let mut triple = 0.0;
        for i in 0..m {
            for j in 0..(m - i) {
                let k = m - 1 - i - j;
                triple += ((i + 1) * (j + 1) * k) as f64 * at(i + 1) * at(j + 1) * at(k + 1);
            }
        }
        rhs += 0.5 * triple;
    }

    let mut cubic = 0.0;
    for i in 0..=(m + 1) {
        for j in 0..=(m + 1 - i) {
            let k = m + 1 - i - j;
            // a_{m+2} only appears multiplied by a_1 = 0.
            if i + 1 > m + 1 || j + 1 > m + 1 || k + 1 > m + 1 {
                continue;
            }
            cubic += ((i + 1) * (j + 1) * (k + 1)) as f64 * at(i + 1) * at(j + 1) * at(k + 1);
        }
    }
    rhs -= c * cubic;

    rhs / (((m + 2) as u64 * (m as u64 + u64::from(n))) as f64)
}

/// Builds the seed for initial height `b` with coefficients up to `a_{2M}`.
pub fn compute_coefficients(
    b: f64,
    half_order: usize,
    params: &ShrinkerParams,
) -> Result<SeriesSeed> {
    if half_order < 2 {
        return Err(Error::Config(format!(
            "series half-order {half_order} too small (M ≥ 2 required)"
        )));
    }
    if !(b.abs() <= SERIES_B_CAP) {
        return Err(Error::SeedRange {
            b,
            cap: SERIES_B_CAP,
        });
    }
    let n = params.n();
    let len = 2 * half_order + 1;
    let mut a = vec![0.0; len];
    a[0] = b;
    for m in 0..len - 2 {
        let v = next_coefficient(&a[..=m + 1], m, n);
        let v = if (m + 2) % 2 == 1 { 0.0 } else { v };
        if !(v.abs() <= COEFFICIENT_CAP) {
            return Err(Error::SeriesOverflow {
                index: m + 2,
                value: v,
                cap: COEFFICIENT_CAP,
            });
        }
        a[m + 2] = v;
    }

    let growth = fit_growth(&a, half_order);
    let patch_radius = (1.0 / growth).min(DEFAULT_PATCH_LIMIT);
    Ok(SeriesSeed {
        b,
        n,
        coeffs: a,
        half_order,
        growth,
        patch_radius,
    })
}

/// Smallest power of two `A` with `|a_{2m}| ≤ A^{2m−1}/(2m)³` for every stored `m`.
fn fit_growth(a: &[f64], half_order: usize) -> f64 {
    (-30..=200)
        .map(|k| 2f64.powi(k))
        .find(|&big_a| satisfies_growth(a, half_order, big_a))
        .unwrap_or(f64::INFINITY)
}

fn satisfies_growth(a: &[f64], half_order: usize, big_a: f64) -> bool {
    (1..=half_order).all(|m| {
        let two_m = (2 * m) as f64;
        a[2 * m].abs() * two_m.powi(3) <= big_a.powi(2 * m as i32 - 1)
    })
}

impl SeriesSeed {
    /// Seed with the default truncation.
    pub fn new(b: f64, params: &ShrinkerParams) -> Result<Self> {
        compute_coefficients(b, DEFAULT_HALF_ORDER, params)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `a_0 … a_{2M}`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn half_order(&self) -> usize {
        self.half_order
    }

    /// Fitted growth constant `A`.
    pub fn growth(&self) -> f64 {
        self.growth
    }

    pub fn patch_radius(&self) -> f64 {
        self.patch_radius
    }

    /// `|a_{2m}| (2m)³ / A^{2m−1}` for `m = 1 … M`; each entry is at most 1.
    pub fn growth_ratios(&self) -> Vec<f64> {
        (1..=self.half_order)
            .map(|m| {
                let two_m = (2 * m) as f64;
                self.coeffs[2 * m].abs() * two_m.powi(3) / self.growth.powi(2 * m as i32 - 1)
            })
            .collect()
    }

    /// Evaluates `(γ, γ', γ'')` at `x ∈ [0, patch_radius]`.
    pub fn eval(&self, x: f64) -> Result<SeedEval> {
        if !(0.0..=self.patch_radius).contains(&x) {
            return Err(Error::Domain(format!(
                "x = {x} outside the seed patch [0, {}]",
                self.patch_radius
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: f64) -> SeedEval {
        let y = x * x;
        let m_max = self.half_order;
        // Horner in y = x² over the even coefficients.
        let mut value = 0.0;
        let mut dsum = 0.0;
        let mut ddsum = 0.0;
        for m in (0..=m_max).rev() {
            let a = self.coeffs[2 * m];
            value = value * y + a;
            if m >= 1 {
                let k = (2 * m) as f64;
                dsum = dsum * y + k * a;
                ddsum = ddsum * y + k * (k - 1.0) * a;
            }
        }
        SeedEval {
            value,
            slope: x * dsum,
            curvature: ddsum,
            tail_bound: self.tail_bound(x),
        }
    }

    /// Bound on `Σ_{m>M} |a_{2m}| x^{2m}` from the growth estimate.
    pub fn tail_bound(&self, x: f64) -> f64 {
        let a = self.growth;
        let q = (a * x).powi(2);
        let m1 = (self.half_order + 1) as f64;
        let first = (a * x).powi(2 * self.half_order as i32 + 2) / (a * (2.0 * m1).powi(3));
        let geometric = if q < 1.0 {
            first / (1.0 - q)
        } else {
            f64::INFINITY
        };
        // Σ_{m>M} 1/(2m)³ ≤ 1/(16 M²) bounds the case A x ≤ 1.
        let flat = if q <= 1.0 {
            1.0 / (a * 16.0 * (self.half_order as f64).powi(2))
        } else {
            f64::INFINITY
        };
        geometric.min(flat)
    }

    /// Arc length of the series curve from `x = lo` to `x = hi`
    /// (composite Simpson on `√(1 + γ'²)`).
    fn arc_length(&self, lo: f64, hi: f64) -> f64 {
        const PANELS: usize = 64;
        let h = (hi - lo) / PANELS as f64;
        let f = |x: f64| {
            let e = self.eval_unchecked(x);
            (1.0 + e.slope * e.slope).sqrt()
        };
        let mut sum = f(lo) + f(hi);
        for k in 1..PANELS {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * f(lo + h * k as f64);
        }
        sum * h / 3.0
    }

    fn state_at(&self, x: f64, s: f64) -> PlanarState {
        let e = self.eval_unchecked(x);
        PlanarState::new(x, e.value, e.slope.atan(), s)
    }

    /// `count + 1` states from the axis point `(0, b)` to the launch point,
    /// equally spaced in `x`.
    pub fn sample(&self, count: usize) -> Vec<PlanarState> {
        let count = count.max(1);
        let h = self.patch_radius / count as f64;
        let mut s = 0.0;
        let mut out = Vec::with_capacity(count + 1);
        out.push(self.state_at(0.0, 0.0));
        for k in 1..=count {
            let (lo, hi) = (h * (k - 1) as f64, h * k as f64);
            s += self.arc_length(lo, hi);
            out.push(self.state_at(hi, s));
        }
        out
    }
}

/// Evaluates the seed at `x`; see [`SeriesSeed::eval`].
pub fn eval_seed(seed: &SeriesSeed, x: f64) -> Result<SeedEval> {
    seed.eval(x)
}

/// State at the edge of the seed patch, with arc length measured from the
/// axis.
pub fn launch_state(seed: &SeriesSeed) -> PlanarState {
    let r = seed.patch_radius;
    seed.state_at(r, seed.arc_length(0.0, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::graph_x_rhs;
    use proptest::prelude::*;

    fn p2() -> ShrinkerParams {
        ShrinkerParams::default()
    }

    /// The coefficient condition before simplification: matching `x^m` in
    /// `γ'' = −γ/2 + xγ'/2 − γ'/x − γγ'²/2 + xγ'³/2 − γ'³/x` term by term.
    fn unsimplified(a: &[f64], m: usize) -> f64 {
        let at = |i: usize| a.get(i).copied().unwrap_or(0.0);
        let d = |i: usize| (i + 1) as f64 * at(i + 1); // coefficient of x^i in γ'
        let mut rhs = -0.5 * at(m) + 0.5 * m as f64 * at(m);
        for i in 0..=m {
            for j in 0..=(m - i) {
                rhs -= 0.5 * d(i) * d(j) * at(m - i - j);
            }
        }
        if m >= 1 {
            for i in 0..m {
                for j in 0..(m - i) {
                    rhs += 0.5 * d(i) * d(j) * d(m - 1 - i - j);
                }
            }
        }
        for i in 0..=(m + 1) {
            for j in 0..=(m + 1 - i) {
                let k = m + 1 - i - j;
                if i + 1 > m + 1 || j + 1 > m + 1 || k + 1 > m + 1 {
                    continue;
                }
                rhs -= d(i) * d(j) * d(k);
            }
        }
        // (m+2)(m+1) a_{m+2} + (m+2) a_{m+2} on the left.
        rhs / (((m + 2) * (m + 1) + (m + 2)) as f64)
    }

    #[test]
    fn low_order_coefficients() {
        for b in [0.1, 1.0, 2.0, -0.7, 3.5] {
            let seed = SeriesSeed::new(b, &p2()).unwrap();
            let a = seed.coefficients();
            assert_eq!(a[0], b);
            assert_eq!(a[1], 0.0);
            assert_eq!(a[2], -b / 8.0);
            let a4 = -b / 256.0 - b * b * b / 1024.0;
            assert!((a[4] - a4).abs() <= f64::EPSILON * a4.abs());
        }
    }

    #[test]
    fn odd_coefficients_vanish() {
        for b in [0.1, 1.0, 2.0] {
            let seed = SeriesSeed::new(b, &p2()).unwrap();
            for (i, a) in seed.coefficients().iter().enumerate() {
                if i % 2 == 1 {
                    assert_eq!(*a, 0.0, "a_{i}");
                }
            }
        }
    }

    #[test]
    fn recurrence_reproduced_by_unsimplified_condition() {
        for b in [0.05, 1.0, 2.0, 4.0] {
            let seed = SeriesSeed::new(b, &p2()).unwrap();
            let a = seed.coefficients();
            for m in 0..a.len() - 2 {
                let expect = unsimplified(&a[..=m + 1], m);
                let got = a[m + 2];
                assert!(
                    (got - expect).abs() <= 1e-13 * expect.abs() + 1e-300,
                    "b {b} m {m}: {got:e} vs {expect:e}"
                );
            }
        }
    }

    #[test]
    fn recurrence_reproduced_exactly() {
        let seed = SeriesSeed::new(1.3, &p2()).unwrap();
        let a = seed.coefficients();
        for m in (0..a.len() - 2).step_by(2) {
            assert_eq!(next_coefficient(&a[..=m + 1], m, 2), a[m + 2]);
        }
    }

    #[test]
    fn second_coefficient_in_higher_dimension() {
        for n in 3..6 {
            let params = ShrinkerParams::with_dimension(n).unwrap();
            let seed = SeriesSeed::new(1.0, &params).unwrap();
            let a2 = seed.coefficients()[2];
            assert!((a2 + 1.0 / (4.0 * f64::from(n))).abs() < 1e-16);
        }
    }

    #[test]
    fn eval_at_axis() {
        let b = 1.7;
        let e = eval_seed(&SeriesSeed::new(b, &p2()).unwrap(), 0.0).unwrap();
        assert_eq!(e.value, b);
        assert_eq!(e.slope, 0.0);
        assert_eq!(e.curvature, -b / 4.0);
    }

    #[test]
    fn zero_height_is_the_plane() {
        let seed = SeriesSeed::new(0.0, &p2()).unwrap();
        let e = seed.eval(0.05).unwrap();
        assert_eq!((e.value, e.slope, e.curvature), (0.0, 0.0, 0.0));
    }

    #[test]
    fn eval_rejects_outside_patch() {
        let seed = SeriesSeed::new(1.0, &p2()).unwrap();
        assert!(seed.eval(-1e-3).is_err());
        assert!(seed.eval(seed.patch_radius() * 1.01).is_err());
    }

    #[test]
    fn rejects_heights_outside_range() {
        assert!(matches!(
            SeriesSeed::new(5.0, &p2()),
            Err(Error::SeedRange { .. })
        ));
        assert!(compute_coefficients(1.0, 1, &p2()).is_err());
    }

    #[test]
    fn agrees_with_direct_integration() {
        // Oracle: classical RK4 on (γ, γ') in x from the half-patch point.
        let seed = SeriesSeed::new(1.0, &p2()).unwrap();
        let r = seed.patch_radius();
        let start = seed.eval(r / 2.0).unwrap();
        let steps = 20_000;
        let h = (r / 2.0) / steps as f64;
        let f = |x: f64, y: [f64; 2]| [y[1], graph_x_rhs(x, y[0], y[1], &p2()).unwrap()];
        let mut x = r / 2.0;
        let mut y = [start.value, start.slope];
        for _ in 0..steps {
            let k1 = f(x, y);
            let k2 = f(
                x + h / 2.0,
                [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]],
            );
            let k3 = f(
                x + h / 2.0,
                [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]],
            );
            let k4 = f(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            x += h;
        }
        let end = seed.eval(r).unwrap();
        assert!((end.value - y[0]).abs() < 1e-9);
        assert!((end.slope - y[1]).abs() < 1e-9);
    }

    #[test]
    fn launch_on_round_sphere() {
        let seed = SeriesSeed::new(2.0, &p2()).unwrap();
        let st = launch_state(&seed);
        assert!((st.x.hypot(st.z) - 2.0).abs() < 1e-8);
        // Arc length along a radius-2 circle from the pole.
        let exact_s = 2.0 * (st.x / 2.0).asin();
        assert!((st.s - exact_s).abs() < 1e-12);
        assert!((st.theta + (st.x / 2.0).asin()).abs() < 1e-12);
    }

    #[test]
    fn launch_for_tiny_height() {
        let st = launch_state(&SeriesSeed::new(1e-12, &p2()).unwrap());
        assert!(st.z.abs() < 1e-11);
        assert!(st.theta < 0.0 && st.theta > -1e-12);
    }

    #[test]
    fn launch_is_decreasing_and_below_start() {
        let st = launch_state(&SeriesSeed::new(1.0, &p2()).unwrap());
        assert!(st.theta < 0.0);
        assert!(st.z < 1.0);
    }

    #[test]
    fn samples_start_on_axis() {
        let seed = SeriesSeed::new(0.8, &p2()).unwrap();
        let pts = seed.sample(10);
        assert_eq!(pts.len(), 11);
        assert_eq!(
            (pts[0].x, pts[0].z, pts[0].theta, pts[0].s),
            (0.0, 0.8, 0.0, 0.0)
        );
        let last = pts.last().unwrap();
        let launch = launch_state(&seed);
        assert!((last.s - launch.s).abs() < 1e-14);
        assert!(pts.windows(2).all(|w| w[1].s > w[0].s));
    }

    #[test]
    fn tail_bound_is_negligible_at_patch_edge() {
        for b in [1e-6, 0.4, 2.0, 4.0] {
            let seed = SeriesSeed::new(b, &p2()).unwrap();
            assert!(seed.tail_bound(seed.patch_radius()) < 1e-12, "b {b}");
        }
    }

    proptest! {
        #[test]
        fn growth_bound_holds(b in -4.0f64..4.0) {
            let seed = SeriesSeed::new(b, &p2()).unwrap();
            prop_assert!(seed.growth_ratios().iter().all(|&r| r <= 1.0));
            prop_assert!(seed.patch_radius() > 0.0);
            prop_assert!(seed.patch_radius() <= 1.0 / seed.growth());
        }

        #[test]
        fn continuous_in_height(b in 0.01f64..3.9, x in 0.0f64..0.1) {
            let s1 = SeriesSeed::new(b, &p2()).unwrap();
            let mut last = f64::INFINITY;
            for db in [1e-3, 1e-4, 1e-5] {
                let s2 = SeriesSeed::new(b + db, &p2()).unwrap();
                let x = x.min(s1.patch_radius()).min(s2.patch_radius());
                let d = (s1.eval(x).unwrap().value - s2.eval(x).unwrap().value).abs();
                prop_assert!(d <= last);
                prop_assert!(d <= 2.0 * db);
                last = d;
            }
        }
    }
}
