//! Text formats consumed by the plotting scripts: CSV with 17 significant
//! digits and pretty JSON with complex numbers as `[re, im]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::secular::{SpectralKind, SpectralPoint};
use crate::tracker::Trajectory;

pub const TRAJECTORY_HEADER: &str = "t,re_lambda,im_lambda,re_model,im_model,residual";

/// Round-trip formatting of a double with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // normalizes −0
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    traj.require_complete()?;
    if traj.model.len() != traj.len() {
        return Err(Error::InvalidArgument("trajectory has no model samples".into()));
    }
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for i in 0..traj.len() {
        let row = [
            traj.t[i],
            traj.lambda[i].re,
            traj.lambda[i].im,
            traj.model[i].re,
            traj.model[i].im,
            traj.residual[i],
        ];
        out.push_str(&row.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    Ok(out)
}

fn kind_label(kind: SpectralKind) -> &'static str {
    match kind {
        SpectralKind::EmbeddedEigenvalue => "embedded",
        SpectralKind::Resonance => "resonance",
        SpectralKind::RealResonance => "real_resonance",
    }
}

/// `lambda,multiplicity` rows for embedded eigenvalues.
pub fn eigenvalues_csv(points: &[SpectralPoint]) -> String {
    let mut out = String::from("lambda,multiplicity\n");
    for p in points.iter().filter(|p| p.kind == SpectralKind::EmbeddedEigenvalue) {
        out.push_str(&format!("{},{}\n", fmt_f64(p.lambda.re), p.multiplicity));
    }
    out
}

/// `re_lambda,im_lambda,multiplicity,kind` rows for all points.
pub fn resonances_csv(points: &[SpectralPoint]) -> String {
    let mut out = String::from("re_lambda,im_lambda,multiplicity,kind\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(p.lambda.re),
            fmt_f64(p.lambda.im),
            p.multiplicity,
            kind_label(p.kind)
        ));
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn full_precision_round_trip() {
        for x in [std::f64::consts::PI, -1e-300, 1.0 / 3.0, 123456.789] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(-0.0), fmt_f64(0.0));
    }

    #[test]
    fn complex_json_is_pair() {
        assert_eq!(serde_json::to_string(&Complex64::new(1.5, -2.0)).unwrap(), "[1.5,-2.0]");
    }
}
