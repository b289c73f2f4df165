//! Assembled profile curves and their self-intersections.

use serde::{Deserialize, Serialize};

use crate::ode::PlanarState;

/// Which piece of the construction a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchTag {
    Gamma,
    Beta,
    GammaRef,
    BetaRef,
    Torus,
}

impl BranchTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BranchTag::Gamma => "gamma",
            BranchTag::Beta => "beta",
            BranchTag::GammaRef => "gamma_ref",
            BranchTag::BetaRef => "beta_ref",
            BranchTag::Torus => "torus",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gamma" => BranchTag::Gamma,
            "beta" => BranchTag::Beta,
            "gamma_ref" => BranchTag::GammaRef,
            "beta_ref" => BranchTag::BetaRef,
            "torus" => BranchTag::Torus,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub s: f64,
    pub x: f64,
    pub z: f64,
    pub theta: f64,
    pub branch: BranchTag,
}

impl CurvePoint {
    pub fn from_state(st: &PlanarState, branch: BranchTag) -> Self {
        CurvePoint {
            s: st.s,
            x: st.x,
            z: st.z,
            theta: st.theta,
            branch,
        }
    }

    pub fn state(&self) -> PlanarState {
        PlanarState::new(self.x, self.z, self.theta, self.s)
    }
}

/// A profile curve as an ordered polyline with arc length, tangent angle and
/// branch labels.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClosedCurve {
    pub points: Vec<CurvePoint>,
}

impl ClosedCurve {
    pub fn new(points: Vec<CurvePoint>) -> Self {
        ClosedCurve { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xz(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.x, p.z)).collect()
    }

    /// Appends the mirror image `z ↦ −z` of `self` traversed backwards, so the
    /// result runs on from the last point. Tangent angles stay continuous
    /// through the junction and arc length keeps increasing.
    pub fn extend_with_reflection(&mut self, relabel: impl Fn(BranchTag) -> BranchTag) {
        let Some(junction) = self.points.last().copied() else {
            return;
        };
        let mirrored: Vec<CurvePoint> = self.points[..self.points.len() - 1]
            .iter()
            .rev()
            .map(|p| CurvePoint {
                s: 2.0 * junction.s - p.s,
                x: p.x,
                z: -p.z,
                theta: 2.0 * junction.theta - p.theta,
                branch: relabel(p.branch),
            })
            .collect();
        self.points.extend(mirrored);
    }

    /// Maximal runs of consecutive samples with `x ≤ tol`, reported as the
    /// sample nearest the axis in each run.
    pub fn axis_touchpoints(&self, tol: f64) -> Vec<CurvePoint> {
        let mut out = Vec::new();
        let mut current: Option<CurvePoint> = None;
        for p in &self.points {
            if p.x <= tol {
                current = match current {
                    Some(c) if c.x <= p.x => Some(c),
                    _ => Some(*p),
                };
            } else if let Some(c) = current.take() {
                out.push(c);
            }
        }
        out.extend(current);
        out
    }

    /// Largest `|z(p) + z(p')|` over pairs of samples placed symmetrically
    /// about the middle of the polyline.
    pub fn reflection_defect(&self) -> f64 {
        let n = self.points.len();
        (0..n / 2)
            .map(|i| {
                let (a, b) = (&self.points[i], &self.points[n - 1 - i]);
                (a.z + b.z).abs().max((a.x - b.x).abs())
            })
            .fold(0.0, f64::max)
    }

    /// `count` samples evenly spaced in arc length, interpolated linearly
    /// between neighbouring points. Both ends are kept.
    pub fn resample(&self, count: usize) -> ClosedCurve {
        let p = &self.points;
        if p.len() < 2 || count < 2 {
            return self.clone();
        }
        let (s0, s1) = (p[0].s, p[p.len() - 1].s);
        let mut seg = 0;
        let points = (0..count)
            .map(|k| {
                if k == count - 1 {
                    return p[p.len() - 1];
                }
                let s = s0 + (s1 - s0) * k as f64 / (count - 1) as f64;
                while seg + 2 < p.len() && p[seg + 1].s <= s {
                    seg += 1;
                }
                let (a, b) = (&p[seg], &p[seg + 1]);
                let t = if b.s > a.s {
                    (s - a.s) / (b.s - a.s)
                } else {
                    0.0
                };
                CurvePoint {
                    s,
                    x: a.x + t * (b.x - a.x),
                    z: a.z + t * (b.z - a.z),
                    theta: a.theta + t * (b.theta - a.theta),
                    branch: a.branch,
                }
            })
            .collect();
        ClosedCurve { points }
    }

    /// Total turning of the tangent from first to last sample.
    pub fn total_turning(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b.theta - a.theta,
            _ => 0.0,
        }
    }
}

/// A transversal crossing between two non-adjacent segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub x: f64,
    pub z: f64,
    /// Arc-length positions of the crossing on the earlier and later segment.
    pub s_first: f64,
    pub s_second: f64,
    /// Angle between the two segments, in `[0, π/2]`.
    pub angle: f64,
}

fn cross(ax: f64, az: f64, bx: f64, bz: f64) -> f64 {
    ax * bz - az * bx
}

/// All crossings between non-adjacent segments of the polyline through
/// `curve`'s samples. A closed polyline (first sample equal to the last)
/// treats its first and last segments as adjacent.
pub fn count_self_intersections(curve: &ClosedCurve) -> Vec<Crossing> {
    let p = &curve.points;
    let n = p.len();
    if n < 4 {
        return Vec::new();
    }
    let segs = n - 1;
    let closed = {
        let (a, b) = (&p[0], &p[n - 1]);
        (a.x - b.x).abs() < 1e-12 && (a.z - b.z).abs() < 1e-12
    };
    // Bounding boxes for a cheap rejection pass.
    let boxes: Vec<[f64; 4]> = (0..segs)
        .map(|i| {
            let (a, b) = (&p[i], &p[i + 1]);
            [a.x.min(b.x), a.x.max(b.x), a.z.min(b.z), a.z.max(b.z)]
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..segs {
        for j in (i + 2)..segs {
            if closed && i == 0 && j == segs - 1 {
                continue;
            }
            let (bi, bj) = (&boxes[i], &boxes[j]);
            if bi[1] < bj[0] || bj[1] < bi[0] || bi[3] < bj[2] || bj[3] < bi[2] {
                continue;
            }
            let (a0, a1, b0, b1) = (&p[i], &p[i + 1], &p[j], &p[j + 1]);
            let (dax, daz) = (a1.x - a0.x, a1.z - a0.z);
            let (dbx, dbz) = (b1.x - b0.x, b1.z - b0.z);
            let denom = cross(dax, daz, dbx, dbz);
            if denom == 0.0 {
                continue;
            }
            let (wx, wz) = (b0.x - a0.x, b0.z - a0.z);
            let t = cross(wx, wz, dbx, dbz) / denom;
            let u = cross(wx, wz, dax, daz) / denom;
            // Half-open parameter ranges so a crossing through a shared
            // vertex is counted once.
            if !((0.0..1.0).contains(&t) && (0.0..1.0).contains(&u)) {
                continue;
            }
            let la = dax.hypot(daz);
            let lb = dbx.hypot(dbz);
            let cos = ((dax * dbx + daz * dbz) / (la * lb)).abs().min(1.0);
            out.push(Crossing {
                x: a0.x + t * dax,
                z: a0.z + t * daz,
                s_first: a0.s + t * (a1.s - a0.s),
                s_second: b0.s + u * (b1.s - b0.s),
                angle: cos.acos(),
            });
        }
    }
    out
}
