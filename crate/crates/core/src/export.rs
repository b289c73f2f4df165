//! Curve CSV and JSON serialization with all-or-nothing file writes.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::curve::{BranchTag, ClosedCurve, CurvePoint};
use crate::error::{Error, Result};
use crate::shooting::BranchDecomposition;

pub const CSV_HEADER: &str = "s,x,z,theta,branch";

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so that `path` either keeps its old contents or receives all of `bytes`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut builder = tempfile::Builder::new();
    // Temporary files default to owner-only access; outputs should not.
    #[cfg(unix)]
    builder.permissions(std::os::unix::fs::PermissionsExt::from_mode(0o644));
    let mut tmp = builder.tempfile_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Renders curve samples as CSV with 17 significant digits per value.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::with_capacity(96 * (points.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            p.s,
            p.x,
            p.z,
            p.theta,
            p.branch.as_str()
        ));
    }
    out
}

pub fn write_curve_csv(curve: &ClosedCurve, path: &Path) -> Result<()> {
    if curve.is_empty() {
        return Err(Error::Precondition(
            "refusing to write an empty curve".into(),
        ));
    }
    write_atomic(path, curve_csv(&curve.points).as_bytes())
}

pub fn parse_curve_csv(text: &str) -> Result<ClosedCurve> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse(format!("expected header {CSV_HEADER:?}")));
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        let [s, x, z, theta, branch] = fields[..] else {
            return Err(Error::Parse(format!("row {row}: expected 5 fields")));
        };
        let num = |f: &str| -> Result<f64> {
            f.parse()
                .map_err(|_| Error::Parse(format!("row {row}: bad number {f:?}")))
        };
        let branch = BranchTag::parse(branch)
            .ok_or_else(|| Error::Parse(format!("row {row}: unknown branch {branch:?}")))?;
        points.push(CurvePoint {
            s: num(s)?,
            x: num(x)?,
            z: num(z)?,
            theta: num(theta)?,
            branch,
        });
    }
    Ok(ClosedCurve::new(points))
}

pub fn read_curve_csv(path: &Path) -> Result<ClosedCurve> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curve_csv(&text)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// The open profile of a decomposition: series patch and `γ`, then `β`.
pub fn profile_curve(d: &BranchDecomposition) -> ClosedCurve {
    let seed = &d.seed_states[..d.seed_states.len() - 1];
    let mut points: Vec<CurvePoint> = seed
        .iter()
        .chain(&d.gamma.states)
        .map(|st| CurvePoint::from_state(st, BranchTag::Gamma))
        .collect();
    if let Some(beta) = &d.beta {
        points.extend(
            beta.states[1..]
                .iter()
                .map(|st| CurvePoint::from_state(st, BranchTag::Beta)),
        );
    }
    ClosedCurve::new(points)
}
