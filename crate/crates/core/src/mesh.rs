//! Triangulated surfaces of revolution about the `z`-axis.
//!
//! A profile whose two ends lie on the axis becomes a sphere-like surface.
//! The end samples collapse to one pole vertex each, closed off by triangle
//! fans. A profile whose ends meet off the axis becomes a torus-like surface
//! with a periodic band of quads. Either way every edge is shared by exactly
//! two consistently oriented triangles.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::export::write_atomic;

pub const MIN_SEGMENTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Sphere,
    Torus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub profile: ClosedCurve,
    pub azimuthal_segments: usize,
    pub topology: Topology,
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices, counter-clockwise seen from outside for a
    /// profile that runs clockwise in the `(x, z)` half-plane.
    pub faces: Vec<[usize; 3]>,
}

impl MeshSpec {
    /// Rotates `profile` about the `z`-axis.
    ///
    /// With `samples` set, the profile is first resampled to that many
    /// points evenly spaced in arc length. Ends closer than `closure_tol` to
    /// the axis become poles; otherwise the ends must coincide to within
    /// `closure_tol`.
    pub fn revolve(
        profile: &ClosedCurve,
        azimuthal_segments: usize,
        samples: Option<usize>,
        closure_tol: f64,
    ) -> Result<Self> {
        if azimuthal_segments < MIN_SEGMENTS {
            return Err(Error::Config(format!(
                "need at least {MIN_SEGMENTS} azimuthal segments, got {azimuthal_segments}"
            )));
        }
        if let Some(n) = samples {
            if n < 3 {
                return Err(Error::Config(format!(
                    "need at least 3 profile samples, got {n}"
                )));
            }
        }
        if profile.len() < 3 {
            return Err(Error::Precondition(
                "profile needs at least 3 samples".into(),
            ));
        }
        let (first, last) = (profile.points[0], profile.points[profile.len() - 1]);
        let gap = (first.x - last.x).hypot(first.z - last.z);
        let topology = if first.x.abs() <= closure_tol && last.x.abs() <= closure_tol {
            Topology::Sphere
        } else if gap <= closure_tol {
            Topology::Torus
        } else {
            let off_axis = first.x.abs().max(last.x.abs());
            return Err(Error::ClosureFailure {
                mismatch: gap.min(off_axis),
                limit: closure_tol,
            });
        };
        let profile = match (samples, topology) {
            (Some(n), Topology::Sphere) => profile.resample(n),
            // The closing sample repeats the first, so ask for one more.
            (Some(n), Topology::Torus) => profile.resample(n + 1),
            (None, _) => profile.clone(),
        };
        let mut mesh = MeshSpec {
            profile,
            azimuthal_segments,
            topology,
            vertices: Vec::new(),
            faces: Vec::new(),
        };
        match topology {
            Topology::Sphere => mesh.build_sphere(),
            Topology::Torus => mesh.build_torus(),
        }
        Ok(mesh)
    }

    fn push_ring(&mut self, x: f64, z: f64) -> usize {
        let start = self.vertices.len();
        let m = self.azimuthal_segments;
        for k in 0..m {
            let phi = 2.0 * PI * k as f64 / m as f64;
            self.vertices.push([x * phi.cos(), x * phi.sin(), z]);
        }
        start
    }

    fn push_band(&mut self, a: usize, b: usize) {
        let m = self.azimuthal_segments;
        for k in 0..m {
            let k1 = (k + 1) % m;
            self.faces.push([a + k, b + k, b + k1]);
            self.faces.push([a + k, b + k1, a + k1]);
        }
    }

    fn build_sphere(&mut self) {
        let p = self.profile.points.clone();
        let m = self.azimuthal_segments;
        let top = self.vertices.len();
        self.vertices.push([0.0, 0.0, p[0].z]);
        let rings: Vec<usize> = p[1..p.len() - 1]
            .iter()
            .map(|q| self.push_ring(q.x, q.z))
            .collect();
        let bottom = self.vertices.len();
        self.vertices.push([0.0, 0.0, p[p.len() - 1].z]);
        let (r0, rn) = (rings[0], rings[rings.len() - 1]);
        for k in 0..m {
            self.faces.push([top, r0 + k, r0 + (k + 1) % m]);
        }
        for w in rings.windows(2) {
            self.push_band(w[0], w[1]);
        }
        for k in 0..m {
            self.faces.push([rn + (k + 1) % m, rn + k, bottom]);
        }
    }

    fn build_torus(&mut self) {
        let p = self.profile.points.clone();
        let rings: Vec<usize> = p[..p.len() - 1]
            .iter()
            .map(|q| self.push_ring(q.x, q.z))
            .collect();
        for i in 0..rings.len() {
            self.push_band(rings[i], rings[(i + 1) % rings.len()]);
        }
    }

    /// Distinct profile samples that carry vertices. The two pole samples of
    /// a sphere each carry one vertex instead of a ring.
    pub fn profile_samples(&self) -> usize {
        match self.topology {
            Topology::Sphere => self.profile.len(),
            Topology::Torus => self.profile.len() - 1,
        }
    }

    fn edge_uses(&self) -> HashMap<(usize, usize), usize> {
        let mut uses = HashMap::new();
        for f in &self.faces {
            for i in 0..3 {
                *uses.entry((f[i], f[(i + 1) % 3])).or_insert(0) += 1;
            }
        }
        uses
    }

    /// `V − E + F` over undirected edges.
    pub fn euler_characteristic(&self) -> i64 {
        let edges = self
            .edge_uses()
            .keys()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect::<std::collections::HashSet<_>>()
            .len();
        self.vertices.len() as i64 - edges as i64 + self.faces.len() as i64
    }

    /// Every directed edge occurs once and its reverse occurs once, so the
    /// mesh is closed and consistently oriented.
    pub fn is_closed_orientable(&self) -> bool {
        let uses = self.edge_uses();
        uses.iter()
            .all(|(&(a, b), &n)| n == 1 && uses.get(&(b, a)) == Some(&1))
    }

    /// Largest gap between a vertex's distance from the `z`-axis and the `x`
    /// of the profile sample it came from.
    pub fn max_radial_error(&self) -> f64 {
        let m = self.azimuthal_segments;
        let samples = &self.profile.points;
        let radius = |v: &[f64; 3]| v[0].hypot(v[1]);
        match self.topology {
            Topology::Sphere => {
                let last = self.vertices.len() - 1;
                let poles = radius(&self.vertices[0])
                    .max(radius(&self.vertices[last]))
                    .max(samples[0].x.abs())
                    .max(samples[samples.len() - 1].x.abs());
                self.vertices[1..last]
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (radius(v) - samples[1 + i / m].x).abs())
                    .fold(poles, f64::max)
            }
            Topology::Torus => self
                .vertices
                .iter()
                .enumerate()
                .map(|(i, v)| (radius(v) - samples[i / m].x).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Wavefront OBJ text: vertex lines, then faces with 1-based indices.
    pub fn to_obj(&self) -> String {
        let mut out = String::with_capacity(72 * self.vertices.len() + 32 * self.faces.len());
        for v in &self.vertices {
            out.push_str(&format!("v {:.16e} {:.16e} {:.16e}\n", v[0], v[1], v[2]));
        }
        for f in &self.faces {
            out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
        }
        out
    }
}

pub fn write_mesh(spec: &MeshSpec, path: &Path) -> Result<()> {
    write_atomic(path, spec.to_obj().as_bytes())
}
