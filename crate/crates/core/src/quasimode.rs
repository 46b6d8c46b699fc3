//! Quasimodes and resonances: the shifted-cutoff quasimode of a perturbed
//! graph, the proximity check of a resonance near `λ₀`, and the truncated
//! resonant state used as a quasimode in the converse direction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cutoff::SmoothStep;
use crate::error::{Error, Result};
use crate::graph::{lengths_at, MetricGraph, PerturbationFamily};
use crate::quadrature::GaussLegendre;
use crate::secular::{search_spectral_points, SearchOptions, SpectralKind, SpectralPoint, Window};
use crate::wavefield::{inner_product, EdgeWave, Weights};

/// Transition band of `χ₀` in the scaled edge coordinate `x/ℓ`.
pub const BAND: (f64, f64) = (0.45, 0.55);
pub const DEFAULT_GAMMA: f64 = 0.9;
pub const DEFAULT_RADIUS: f64 = 1.0;
pub const DEFAULT_EPS0: f64 = 1e-2;
/// Searches never reach closer than this to `λ = 0`.
pub const MIN_RE: f64 = 0.1;

/// Shifted-cutoff quasimode `u_m = χ₀(x/ℓ_m)u⁰_m(x) + χ₁((x − δ_m)/ℓ_m)u⁰_m(x − δ_m)`
/// on the graph with lengths `ℓ_m + δ_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedQuasimode {
    pub lambda0: f64,
    pub t: f64,
    /// `‖(P(t) − λ₀²)u‖` after normalization.
    pub epsilon: f64,
    /// Norm of the unnormalized construction.
    pub raw_norm: f64,
    pub deltas: Vec<f64>,
    /// The unperturbed eigenfunction.
    pub base: EdgeWave,
}

impl ShiftedQuasimode {
    /// Value of the normalized quasimode on finite edge `m` at `x`.
    pub fn eval(&self, g: &MetricGraph, m: usize, x: f64) -> f64 {
        let l = g.edges()[m].length;
        let step = SmoothStep::new(BAND.0, BAND.1);
        let (u, _) = real_wave(&self.base, m, self.lambda0);
        let c0 = step.eval_falling(x / l).0;
        let c1 = 1.0 - step.eval_falling((x - self.deltas[m]) / l).0;
        (c0 * u(x).0 + c1 * u(x - self.deltas[m]).0) / self.raw_norm
    }
}

/// `(x ↦ (u(x), u'(x)), ‖coefficients‖)` for the real wave `A cos λx + B sin λx` on edge `m`.
fn real_wave(w: &EdgeWave, m: usize, lambda: f64) -> (impl Fn(f64) -> (f64, f64), f64) {
    let (a, b) = w.cos_sin(m);
    let (a, b) = (a.re, b.re);
    (
        move |x: f64| {
            let (s, c) = (lambda * x).sin_cos();
            (a * c + b * s, lambda * (b * c - a * s))
        },
        a.hypot(b),
    )
}

/// Builds the quasimode of `P(t)` from the normalized eigenfunction `u0` of
/// `P(0)` at `lambda0` and measures `ε`.
pub fn build_shifted_quasimode(g: &MetricGraph, p: &PerturbationFamily, t: f64, lambda0: f64, u0: &EdgeWave) -> Result<ShiftedQuasimode> {
    if u0.leads.iter().any(|l| l.incoming.norm() > 0.0 || l.outgoing.norm() > 0.0) {
        return Err(Error::InvalidArgument("base eigenfunction must vanish on the leads".into()));
    }
    let gt = lengths_at(p, g, t)?;
    let step = SmoothStep::new(BAND.0, BAND.1);
    let gl = GaussLegendre::new(128);
    let coarse = GaussLegendre::new(32);
    let mut deltas = Vec::with_capacity(g.num_edges());
    let mut norm2 = 0.0;
    let mut res2 = 0.0;
    for (m, e) in g.edges().iter().enumerate() {
        let l = e.length;
        let delta = gt.edges()[m].length - l;
        if delta.abs() >= BAND.0 * l {
            return Err(Error::SupportsOverlap { id: e.id.clone(), delta });
        }
        deltas.push(delta);
        let (u, _) = real_wave(u0, m, lambda0);
        let value = |x: f64| {
            let c0 = step.eval_falling(x / l).0;
            let c1 = 1.0 - step.eval_falling((x - delta) / l).0;
            c0 * u(x).0 + c1 * u(x - delta).0
        };
        let residual = |x: f64| {
            let (_, d1, d2) = step.eval_falling(x / l);
            let (_, s1, s2) = step.eval_falling((x - delta) / l);
            let (v, vp) = u(x);
            let (w, wp) = u(x - delta);
            -(d2 / (l * l) * v + 2.0 * d1 / l * vp - s2 / (l * l) * w - 2.0 * s1 / l * wp)
        };
        let a = BAND.0 * l + delta.min(0.0);
        let b = BAND.1 * l + delta.max(0.0);
        let end = l + delta;
        norm2 += coarse.integrate_composite(0.0, a, 8, |x| value(x).powi(2))
            + gl.integrate(a, b, |x| value(x).powi(2))
            + coarse.integrate_composite(b, end, 8, |x| value(x).powi(2));
        res2 += gl.integrate(a, b, |x| residual(x).powi(2));
    }
    let raw_norm = norm2.sqrt();
    Ok(ShiftedQuasimode { lambda0, t, epsilon: res2.sqrt() / raw_norm, raw_norm, deltas, base: u0.clone() })
}

/// Outcome of searching `D(λ₀, ε^γ)` for a resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proximity {
    pub holds: bool,
    pub distance: f64,
    pub radius: f64,
    pub witness: Option<SpectralPoint>,
    /// `(winding number, located multiplicity)` of every window searched.
    pub searches: Vec<(usize, usize)>,
}

/// Nearest spectral point of `g_t` to `λ₀`; `holds` when it lies inside
/// the disc of radius `ε^γ`. Square windows around `λ₀` are doubled from a
/// small size up to half-width `2ε^γ` until one contains a point closer than
/// its half-width, which is then the nearest point overall.
pub fn check_resonance_proximity(g_t: &MetricGraph, lambda0: f64, epsilon: f64, gamma: f64) -> Result<Proximity> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("γ = {gamma} must lie in (0, 1)")));
    }
    if !(epsilon >= 0.0) || !(lambda0 > MIN_RE) {
        return Err(Error::InvalidArgument(format!("need ε ≥ 0 and λ₀ > {MIN_RE}")));
    }
    let radius = epsilon.powf(gamma);
    let max_half = (2.0 * radius).max(1e-3);
    let center = Complex64::new(lambda0, 0.0);
    let mut half = max_half.min(0.25);
    let mut searches = Vec::new();
    loop {
        let window = Window::new((lambda0 - half).max(MIN_RE), lambda0 + half, -half, half)?;
        let found = search_spectral_points(g_t, &window, &SearchOptions::default())?;
        searches.push((found.winding, found.total_multiplicity()));
        let witness = found
            .points
            .into_iter()
            .min_by(|a, b| (a.lambda - center).norm().total_cmp(&(b.lambda - center).norm()));
        let distance = witness.as_ref().map_or(f64::INFINITY, |w| (w.lambda - center).norm());
        if distance <= half || half >= max_half {
            return Ok(Proximity { holds: distance < radius || distance <= 1e-9, distance, radius, witness, searches });
        }
        half = (2.0 * half).min(max_half);
    }
}

/// JSON record of one quasimode/proximity evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasimodeReport {
    pub lambda0: f64,
    pub t: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub distance: f64,
    pub holds: bool,
    /// `distance / ε`, the constant of the conjectured linear law.
    #[serde(rename = "C_observed")]
    pub c_observed: f64,
    pub eps_over_t: f64,
    pub witness: Option<Complex64>,
}

/// Builds the shifted quasimode at `t` and checks for a nearby resonance.
pub fn quasimode_report(g: &MetricGraph, p: &PerturbationFamily, t: f64, lambda0: f64, u0: &EdgeWave, gamma: f64) -> Result<QuasimodeReport> {
    let q = build_shifted_quasimode(g, p, t, lambda0, u0)?;
    let gt = lengths_at(p, g, t)?;
    let prox = check_resonance_proximity(&gt, lambda0, q.epsilon, gamma)?;
    Ok(QuasimodeReport {
        lambda0,
        t,
        epsilon: q.epsilon,
        gamma,
        distance: prox.distance,
        holds: prox.holds,
        c_observed: if q.epsilon > 0.0 { prox.distance / q.epsilon } else { 0.0 },
        eps_over_t: if t != 0.0 { q.epsilon / t.abs() } else { 0.0 },
        witness: prox.witness.map(|w| w.lambda),
    })
}

/// Resonant state cut off on the leads by `χ(x/r)`, used as a quasimode at
/// `λ₀ = Re λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseQuasimode {
    pub lambda: Complex64,
    pub lambda0: f64,
    /// `|Im λ|`.
    pub epsilon: f64,
    pub r: f64,
    /// `‖v‖²` over the finite edges.
    pub norm_h0_sq: f64,
    /// `Σ_k |a_k|²` of the outgoing lead amplitudes.
    pub lead_flux: f64,
    /// `|Σ|a_k|² + 2 Im λ ‖v‖²| / Σ|a_k|²`, or the absolute value when the flux vanishes.
    pub flux_defect: f64,
    /// `‖(P − λ₀²)ũ‖ / ‖ũ‖`.
    pub residual: f64,
    /// Contribution of the finite edges and `[0, r]` of the leads.
    pub bulk_residual: f64,
    /// Contribution of the cutoff band `[r, 2r]`.
    pub commutator_residual: f64,
    /// `residual / (ε(λ₀ + ε))`.
    pub c0_observed: f64,
}

pub fn quasimode_from_resonance(g: &MetricGraph, sp: &SpectralPoint, r: f64, radius: f64) -> Result<ConverseQuasimode> {
    if !(r > 0.0 && 2.0 * r <= radius) {
        return Err(Error::InvalidArgument(format!("cutoff radius r = {r} must satisfy 0 < 2r ≤ R = {radius}")));
    }
    let lambda = sp.lambda;
    if lambda.im > 1e-12 {
        return Err(Error::NotOutgoing);
    }
    if sp.multiplicity != 1 || sp.kernel_basis.len() != 1 {
        return Err(Error::NotSimple(sp.multiplicity));
    }
    let v = &sp.kernel_basis[0];
    if v.leads.iter().any(|l| l.incoming.norm() > 0.0) {
        return Err(Error::NotOutgoing);
    }
    let lambda0 = lambda.re;
    let eps = -lambda.im.min(0.0);
    // the cutoff argument needs Re λ bounded away from 0 relative to ε
    let bound = 0.25 * lambda0;
    if eps >= bound {
        return Err(Error::ResonanceTooDeep { eps, bound });
    }
    let norm_h0_sq = inner_product(v, v, g, &Weights::compact(g))?.re;
    let lead_flux: f64 = v.leads.iter().map(|l| l.outgoing.norm_sqr()).sum();
    let flux_gap = (lead_flux + 2.0 * lambda.im * norm_h0_sq).abs();
    let flux_defect = if lead_flux > 0.0 { flux_gap / lead_flux } else { flux_gap };

    let shift = lambda * lambda - lambda0 * lambda0;
    let step = SmoothStep::new(1.0, 2.0);
    let gl = GaussLegendre::new(128);
    // ∫_0^r e^{2εx} dx
    let flat = if eps * r < 1e-12 { r * (1.0 + eps * r) } else { (2.0 * eps * r).exp_m1() / (2.0 * eps) };
    let chi2 = gl.integrate(r, 2.0 * r, |x| step.eval_falling(x / r).0.powi(2) * (2.0 * eps * x).exp());
    let band = gl.integrate(r, 2.0 * r, |x| {
        let (c, c1, c2) = step.eval_falling(x / r);
        let e = (Complex64::i() * lambda * x).exp();
        (shift * c * e - c2 / (r * r) * e - 2.0 * c1 / r * Complex64::i() * lambda * e).norm_sqr()
    });
    let norm_sq = norm_h0_sq + lead_flux * (flat + chi2);
    let bulk = shift.norm_sqr() * (norm_h0_sq + lead_flux * flat);
    let comm = lead_flux * band;
    let residual = ((bulk + comm) / norm_sq).sqrt();
    let scale = eps * (lambda0 + eps);
    Ok(ConverseQuasimode {
        lambda,
        lambda0,
        epsilon: eps,
        r,
        norm_h0_sq,
        lead_flux,
        flux_defect,
        residual,
        bulk_residual: (bulk / norm_sq).sqrt(),
        commutator_residual: (comm / norm_sq).sqrt(),
        c0_observed: if scale > 0.0 { residual / scale } else { 0.0 },
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Kind check shared by callers that need an embedded seed.
pub fn require_embedded(sp: &SpectralPoint) -> Result<()> {
    match sp.kind {
        SpectralKind::EmbeddedEigenvalue => Ok(()),
        _ => Err(Error::NotEmbedded),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::secular::{classify, eigenfunction, find_spectral_points};
    use std::f64::consts::PI;

    fn fig2_eigen() -> (MetricGraph, SpectralPoint, EdgeWave) {
        let g = fixtures::fig2();
        let w = Window::around(Complex64::new(PI, 0.0), 0.05).unwrap();
        let sp = find_spectral_points(&g, &w, &SearchOptions::default()).unwrap().remove(0);
        let u = eigenfunction(&g, &sp).unwrap();
        (g, sp, u)
    }

    #[test]
    fn unperturbed_quasimode_is_exact() {
        let (g, _, u) = fig2_eigen();
        let p = fixtures::fig2_family(&g, 'b');
        let q = build_shifted_quasimode(&g, &p, 0.0, PI, &u).unwrap();
        assert!(q.epsilon < 1e-12);
        assert!((q.raw_norm - 1.0).abs() < 1e-12);
        assert!((q.eval(&g, 0, 0.25) - (PI * 0.25).sin()).abs() < 1e-12);
    }

    #[test]
    fn epsilon_is_linear_in_t() {
        let (g, _, u) = fig2_eigen();
        let p = fixtures::fig2_family(&g, 'b');
        let e1 = build_shifted_quasimode(&g, &p, 1e-3, PI, &u).unwrap().epsilon;
        let e2 = build_shifted_quasimode(&g, &p, 2e-3, PI, &u).unwrap().epsilon;
        assert!((e2 / e1 - 2.0).abs() < 1e-2, "{e1} {e2}");
    }

    #[test]
    fn overlapping_supports_rejected() {
        let (g, _, u) = fig2_eigen();
        let p = fixtures::fig2_family(&g, 'b');
        assert!(matches!(build_shifted_quasimode(&g, &p, 0.5, PI, &u), Err(Error::SupportsOverlap { .. })));
    }

    #[test]
    fn embedded_eigenvalue_is_its_own_witness() {
        let (g, _, _) = fig2_eigen();
        let prox = check_resonance_proximity(&g, PI, 0.0, 0.9).unwrap();
        assert!(prox.holds && prox.distance < 1e-9);
    }

    #[test]
    fn converse_on_embedded_and_deep_points() {
        let (g, sp, _) = fig2_eigen();
        let c = quasimode_from_resonance(&g, &sp, 0.5, 1.0).unwrap();
        assert!(c.residual < 1e-12 && c.lead_flux < 1e-16);
        let deep = classify(&g, Complex64::new(PI, -(3f64).ln()), 1);
        assert!(matches!(quasimode_from_resonance(&g, &deep, 0.5, 1.0), Err(Error::ResonanceTooDeep { .. })));
    }

    #[test]
    fn exponent_fit() {
        let xs = [1.0, 2.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        assert!((fit_exponent(&xs, &ys).unwrap() - 0.5).abs() < 1e-12);
    }
}
