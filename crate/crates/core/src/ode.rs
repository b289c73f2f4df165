//! The rotationally symmetric shrinker equation for a profile curve in the
//! `(x, z)` half-plane.
//!
//! Three equivalent forms are provided:
//!
//! * graph over `x`: `γ''/(1+γ'²) = (x/2 − (n−1)/x) γ' − γ/2`
//! * graph over `z`: `α''/(1+α'²) = ((n−1)/α − α/2) + (z/2) α'`
//! * arc length: `x' = cos θ`, `z' = sin θ`, `θ' = (x/2 − (n−1)/x) sin θ − (z/2) cos θ`
//!
//! The arc-length form is the one the integrator uses. Vertical tangents,
//! where the graph-over-`x` slope diverges, are regular points of it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking that a supplied `γ''` satisfies the
/// graph equation.
pub const DERIVATIVE_CONSISTENCY_TOL: f64 = 1e-8;

/// Dimension of the rotating sphere factor and the axis guard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkerParams {
    n: u32,
    axis_epsilon: f64,
}

impl Default for ShrinkerParams {
    fn default() -> Self {
        ShrinkerParams {
            n: 2,
            axis_epsilon: 1e-12,
        }
    }
}

impl ShrinkerParams {
    pub fn new(n: u32, axis_epsilon: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!(
                "dimension n = {n} not supported (n ≥ 2 required)"
            )));
        }
        if !(axis_epsilon > 0.0 && axis_epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "axis_epsilon = {axis_epsilon} must be positive and finite"
            )));
        }
        Ok(ShrinkerParams { n, axis_epsilon })
    }

    /// Parameters for dimension `n` with the default axis guard.
    pub fn with_dimension(n: u32) -> Result<Self> {
        Self::new(n, ShrinkerParams::default().axis_epsilon)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn axis_epsilon(&self) -> f64 {
        self.axis_epsilon
    }

    /// The coefficient `n − 1` of the singular `1/x` term.
    pub fn singular_coefficient(&self) -> f64 {
        f64::from(self.n - 1)
    }

    /// Radius `√(2(n−1))` of the cylinder solution.
    pub fn cylinder_radius(&self) -> f64 {
        (2.0 * self.singular_coefficient()).sqrt()
    }

    /// Radius `√(2n)` of the round sphere solution.
    pub fn sphere_radius(&self) -> f64 {
        (2.0 * f64::from(self.n)).sqrt()
    }

    fn check_x(&self, x: f64) -> Result<()> {
        if x > self.axis_epsilon {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "x = {x:e} is not above the axis guard {:e}",
                self.axis_epsilon
            )))
        }
    }
}

/// A point on a profile curve in arc-length form.
///
/// `theta` is the tangent angle, kept unwrapped along a trajectory so that
/// tangent events a full turn apart remain distinguishable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarState {
    pub x: f64,
    pub z: f64,
    pub theta: f64,
    pub s: f64,
}

impl PlanarState {
    pub fn new(x: f64, z: f64, theta: f64, s: f64) -> Self {
        PlanarState { x, z, theta, s }
    }

    /// Slope `dz/dx = tan θ` of the graph-over-`x` representation.
    pub fn slope(&self) -> f64 {
        self.theta.tan()
    }

    /// The same point traversed in the opposite direction, with arc length
    /// restarted at `s`.
    pub fn reversed(&self, s: f64) -> Self {
        PlanarState {
            theta: self.theta + std::f64::consts::PI,
            s,
            ..*self
        }
    }
}

/// `γ''` for a curve written as a graph `z = γ(x)`.
pub fn graph_x_rhs(x: f64, g: f64, gp: f64, params: &ShrinkerParams) -> Result<f64> {
    params.check_x(x)?;
    let c = params.singular_coefficient();
    Ok((1.0 + gp * gp) * ((0.5 * x - c / x) * gp - 0.5 * g))
}

/// `α''` for a curve written as a graph `x = α(z)`.
pub fn graph_z_rhs(z: f64, a: f64, ap: f64, params: &ShrinkerParams) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("α = {a} must be positive")));
    }
    let c = params.singular_coefficient();
    Ok((1.0 + ap * ap) * ((c / a - 0.5 * a) + 0.5 * z * ap))
}

/// Unchecked arc-length vector field; `c` is the singular coefficient.
#[inline]
pub(crate) fn field(x: f64, z: f64, theta: f64, c: f64) -> [f64; 3] {
    let (sin, cos) = theta.sin_cos();
    [cos, sin, (0.5 * x - c / x) * sin - 0.5 * z * cos]
}

/// `(dx/ds, dz/ds, dθ/ds)` at `state`.
pub fn arclength_rhs(state: &PlanarState, params: &ShrinkerParams) -> Result<[f64; 3]> {
    params.check_x(state.x)?;
    Ok(field(
        state.x,
        state.z,
        state.theta,
        params.singular_coefficient(),
    ))
}

/// `(γ''', γ'''')` from differentiating the graph equation once and twice.
///
/// `gpp` must agree with [`graph_x_rhs`] to within
/// [`DERIVATIVE_CONSISTENCY_TOL`] (relative); `gppp` enters the fourth
/// derivative only.
pub fn third_fourth_derivatives(
    x: f64,
    g: f64,
    gp: f64,
    gpp: f64,
    gppp: f64,
    params: &ShrinkerParams,
) -> Result<(f64, f64)> {
    let expected = graph_x_rhs(x, g, gp, params)?;
    let residual = (gpp - expected).abs();
    let tolerance = DERIVATIVE_CONSISTENCY_TOL * (1.0 + expected.abs());
    if !(residual <= tolerance) {
        return Err(Error::Consistency {
            residual,
            tolerance,
        });
    }
    let c = params.singular_coefficient();
    let w = 1.0 + gp * gp;
    let drift = 0.5 * x - c / x;

    let third = w * (2.0 * gp * gpp * gpp / (w * w) + drift * gpp + c / (x * x) * gp);
    let fourth = w
        * ((6.0 * gp * gpp * gppp + 2.0 * gpp.powi(3)) / (w * w)
            - 8.0 * gp * gp * gpp.powi(3) / w.powi(3)
            + drift * gppp
            + (0.5 + 2.0 * c / (x * x)) * gpp
            - 2.0 * c / x.powi(3) * gp);
    Ok((third, fourth))
}

/// All graph-over-`x` derivatives `(γ', γ'', γ''', γ'''')` at a state whose
/// tangent is not vertical.
pub fn graph_derivatives(state: &PlanarState, params: &ShrinkerParams) -> Result<[f64; 4]> {
    if state.theta.cos().abs() < 1e-300 {
        return Err(Error::Domain(
            "vertical tangent has no graph-over-x slope".into(),
        ));
    }
    let gp = state.slope();
    let gpp = graph_x_rhs(state.x, state.z, gp, params)?;
    let c = params.singular_coefficient();
    let w = 1.0 + gp * gp;
    let x = state.x;
    let gppp = w * (2.0 * gp * gpp * gpp / (w * w) + (0.5 * x - c / x) * gpp + c / (x * x) * gp);
    let (_, gpppp) = third_fourth_derivatives(x, state.z, gp, gpp, gppp, params)?;
    Ok([gp, gpp, gppp, gpppp])
}

/// Largest discrepancy between a centered difference of `θ(s)` and `dθ/ds`
/// from the arc-length form, over the interior samples of `curve`.
///
/// Returns `+∞` if the curve has fewer than three samples, non-increasing
/// arc length, or a sample at or below the axis guard.
pub fn ode_residual(curve: &[PlanarState], params: &ShrinkerParams) -> f64 {
    if curve.len() < 3 {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for w in curve.windows(3) {
        let (a, m, b) = (&w[0], &w[1], &w[2]);
        let (h0, h1) = (m.s - a.s, b.s - m.s);
        if !(h0 > 0.0 && h1 > 0.0) {
            return f64::INFINITY;
        }
        let Ok(rhs) = arclength_rhs(m, params) else {
            return f64::INFINITY;
        };
        // Three-point derivative on a possibly non-uniform grid.
        let d = -(h1 / (h0 * (h0 + h1))) * a.theta
            + ((h1 - h0) / (h0 * h1)) * m.theta
            + (h0 / (h1 * (h0 + h1))) * b.theta;
        let r = (d - rhs[2]).abs();
        let r = if r.is_nan() { f64::INFINITY } else { r };
        worst = worst.max(r);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    fn p2() -> ShrinkerParams {
        ShrinkerParams::default()
    }

    #[test]
    fn rejects_curve_dimension() {
        assert!(ShrinkerParams::with_dimension(1).is_err());
        assert!(ShrinkerParams::new(2, 0.0).is_err());
        assert_eq!(
            ShrinkerParams::with_dimension(3).unwrap().cylinder_radius(),
            2.0
        );
    }

    #[test]
    fn graph_x_simple_value() {
        assert_eq!(graph_x_rhs(2.0, 0.0, -1.0, &p2()).unwrap(), -1.0);
    }

    #[test]
    fn graph_x_round_sphere() {
        let v = graph_x_rhs(1.0, 3f64.sqrt(), -1.0 / 3f64.sqrt(), &p2()).unwrap();
        let exact = -4.0 / (3.0 * 3f64.sqrt());
        assert!((v - exact).abs() < 1e-15);
    }

    #[test]
    fn graph_x_domain_guard() {
        assert!(matches!(
            graph_x_rhs(0.0, 1.0, 0.0, &p2()),
            Err(Error::Domain(_))
        ));
        assert!(graph_x_rhs(1e-13, 1.0, 0.0, &p2()).is_err());
    }

    #[test]
    fn graph_z_cylinder_and_blowup_point() {
        assert!(graph_z_rhs(0.7, SQRT_2, 0.0, &p2()).unwrap().abs() < 1e-15);
        let xs = 2.5;
        let v = graph_z_rhs(-0.3, xs, 0.0, &p2()).unwrap();
        assert!((v - (1.0 / xs - xs / 2.0)).abs() < 1e-15);
        assert!(v < 0.0);
        assert!(graph_z_rhs(0.0, 0.0, 0.0, &p2()).is_err());
    }

    #[test]
    fn graph_z_round_sphere() {
        let v = graph_z_rhs(1.0, 3f64.sqrt(), -1.0 / 3f64.sqrt(), &p2()).unwrap();
        assert!((v + 4.0 / (3.0 * 3f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn arclength_cylinder_equilibrium() {
        let st = PlanarState::new(SQRT_2, 0.37, FRAC_PI_2, 0.0);
        let [dx, dz, dt] = arclength_rhs(&st, &p2()).unwrap();
        assert!(dx.abs() < 1e-16);
        assert_eq!(dz, 1.0);
        assert!(dt.abs() < 1e-15);
    }

    #[test]
    fn arclength_round_sphere_constant_curvature() {
        for k in 1..20 {
            let phi = PI * f64::from(k) / 20.0;
            let st = PlanarState::new(2.0 * phi.sin(), 2.0 * phi.cos(), -phi, 0.0);
            let [.., dt] = arclength_rhs(&st, &p2()).unwrap();
            assert!((dt + 0.5).abs() < 1e-14, "phi {phi}: {dt}");
        }
    }

    #[test]
    fn arclength_at_cylinder_radius() {
        for z0 in [-1.5, 0.0, 0.25, 3.0] {
            let st = PlanarState::new(SQRT_2, z0, 0.0, 0.0);
            let [.., dt] = arclength_rhs(&st, &p2()).unwrap();
            assert!((dt + z0 / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_on_round_sphere() {
        // γ = √(4 − x²) at x = 1.
        let x: f64 = 1.0;
        let r = 4.0 - x * x;
        let g = r.sqrt();
        let gp = -x / g;
        let gpp = -4.0 / r.powf(1.5);
        let gppp = -12.0 * x / r.powf(2.5);
        let gpppp = -12.0 * (4.0 + 4.0 * x * x) / r.powf(3.5);
        let (t, f) = third_fourth_derivatives(x, g, gp, gpp, gppp, &p2()).unwrap();
        assert!((t - gppp).abs() < 1e-13, "{t} vs {gppp}");
        assert!((f - gpppp).abs() < 1e-12, "{f} vs {gpppp}");
    }

    #[test]
    fn derivatives_reject_inconsistent_input() {
        assert!(matches!(
            third_fourth_derivatives(1.0, 1.0, 0.0, 5.0, 0.0, &p2()),
            Err(Error::Consistency { .. })
        ));
    }

    #[test]
    fn third_derivative_negative_at_inflection_outside_cylinder() {
        for (x, gp) in [(1.5, -0.1), (3.0, -2.0), (SQRT_2, -0.5), (6.0, -40.0)] {
            // γ'' = 0 at the sample.
            let g = 2.0 * (0.5 * x - 1.0 / x) * gp;
            let (t, _) = third_fourth_derivatives(x, g, gp, 0.0, 0.0, &p2()).unwrap();
            assert!(t < 0.0, "x {x}: {t}");
        }
    }

    #[test]
    fn residual_of_exact_circle() {
        let h = 1e-3;
        let curve: Vec<_> = (1..3000)
            .map(|k| {
                let s = f64::from(k) * h;
                let phi = s / 2.0;
                PlanarState::new(2.0 * phi.sin(), 2.0 * phi.cos(), -phi, s)
            })
            .collect();
        assert!(ode_residual(&curve, &p2()) <= 1e-5);
    }

    #[test]
    fn residual_of_cylinder() {
        let curve: Vec<_> = (0..100)
            .map(|k| {
                let s = f64::from(k) * 0.01;
                PlanarState::new(SQRT_2, s, FRAC_PI_2, s)
            })
            .collect();
        assert!(ode_residual(&curve, &p2()) <= 1e-12);
    }

    #[test]
    fn residual_degenerate() {
        let a = PlanarState::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(ode_residual(&[a, a, a], &p2()), f64::INFINITY);
        assert_eq!(ode_residual(&[a], &p2()), f64::INFINITY);
    }

    proptest! {
        #[test]
        fn arclength_matches_graph_over_x(
            x in 0.05f64..8.0, z in -4.0f64..4.0, theta in -6.0f64..6.0, n in 2u32..5
        ) {
            let params = ShrinkerParams::with_dimension(n).unwrap();
            let cos = theta.cos();
            prop_assume!(cos.abs() > 1e-3);
            let st = PlanarState::new(x, z, theta, 0.0);
            let [.., dt] = arclength_rhs(&st, &params).unwrap();
            let t = theta.tan();
            let lhs = dt * (1.0 + t * t) / cos;
            let rhs = graph_x_rhs(x, z, t, &params).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn arclength_matches_graph_over_z(
            x in 0.05f64..8.0, z in -4.0f64..4.0, theta in -6.0f64..6.0, n in 2u32..5
        ) {
            let params = ShrinkerParams::with_dimension(n).unwrap();
            let sin = theta.sin();
            prop_assume!(sin.abs() > 1e-3);
            let st = PlanarState::new(x, z, theta, 0.0);
            let [.., dt] = arclength_rhs(&st, &params).unwrap();
            let ct = theta.cos() / sin;
            let lhs = dt / sin;
            let rhs = -graph_z_rhs(z, x, ct, &params).unwrap() / (1.0 + ct * ct);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn horizontal_alpha_equilibrium_only_at_cylinder(a in 0.1f64..6.0, n in 2u32..5) {
            let params = ShrinkerParams::with_dimension(n).unwrap();
            let v = graph_z_rhs(1.0, a, 0.0, &params).unwrap();
            let r = params.cylinder_radius();
            prop_assert_eq!(v > 0.0, a < r);
            prop_assert_eq!(v < 0.0, a > r);
        }
    }
}
