//! First-order shift and second-order decay rate of a resonance born from a
//! simple embedded eigenvalue under an edge-length perturbation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeEnd, MetricGraph};
use crate::secular::{eigenfunction, generalized_eigenfunction_report, Gauge, SpectralKind, SpectralPoint};
use crate::wavefield::{inner_product, EdgeWave, Weights};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Whether the generalized eigenfunction enters the boundary sum of `F_k`
/// conjugated (the default) or unconjugated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryConvention {
    #[default]
    Conjugated,
    Unconjugated,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FgrOptions {
    pub convention: BoundaryConvention,
    pub gauge: Gauge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgrReport {
    pub lambda: f64,
    pub z: f64,
    pub z_dot: f64,
    /// Imaginary part of the computed `ż`; zero up to rounding.
    pub z_dot_imag: f64,
    pub lambda_dot: f64,
    #[serde(rename = "F")]
    pub f: Vec<Complex64>,
    /// `λ⟨ȧu, e^k⟩` per lead.
    pub volume: Vec<Complex64>,
    /// The vertex sum of `F_k` per lead.
    pub boundary: Vec<Complex64>,
    pub im_lambda_ddot: f64,
    /// Every `λℓ_m ∈ πℤ`, which forces the boundary terms to vanish.
    pub example1_condition_met: bool,
    pub convention: BoundaryConvention,
    pub gauge: Gauge,
    /// Largest lead-amplitude difference between the two gauges of `e^k`.
    pub gauge_lead_discrepancy: f64,
}

fn vertex_ends(g: &MetricGraph) -> impl Iterator<Item = EdgeEnd> + '_ {
    (0..g.vertices().len()).flat_map(move |v| g.incident(v).iter().copied())
}

fn edge_of(end: EdgeEnd) -> Option<usize> {
    match end {
        EdgeEnd::Start(m) | EdgeEnd::End(m) => Some(m),
        EdgeEnd::Lead(_) => None,
    }
}

/// `ż = 2z⟨ȧu, u⟩ + Σ_v Σ_{e_m ∋ v} ȧ_m ∂_ν u_m(v) u(v)` for a normalized,
/// real eigenfunction `u`; the imaginary part is a rounding diagnostic.
pub fn z_dot(g: &MetricGraph, u: &EdgeWave, adot: &[f64]) -> Result<Complex64> {
    if adot.len() != g.num_edges() {
        return Err(Error::InvalidArgument(format!("ȧ has {} entries for {} edges", adot.len(), g.num_edges())));
    }
    let z = u.lambda * u.lambda;
    let volume = inner_product(u, u, g, &Weights::edges(g, adot))?;
    let boundary: Complex64 = vertex_ends(g)
        .filter_map(|end| {
            let m = edge_of(end)?;
            let (value, normal) = u.end_data(g, end);
            Some(adot[m] * normal * value)
        })
        .sum();
    Ok(2.0 * z * volume + boundary)
}

fn lengths_commensurate(g: &MetricGraph, lambda: f64) -> bool {
    g.edges().iter().all(|e| {
        let n = lambda * e.length / PI;
        (n - n.round()).abs() <= 1e-10 * n.abs().max(1.0)
    })
}

/// `F_k` and `Im λ̈ = −Σ|F_k|²` at the simple embedded eigenvalue `sp`.
pub fn fgr_coefficients(g: &MetricGraph, sp: &SpectralPoint, adot: &[f64]) -> Result<FgrReport> {
    fgr_coefficients_with(g, sp, adot, &FgrOptions::default())
}

pub fn fgr_coefficients_with(g: &MetricGraph, sp: &SpectralPoint, adot: &[f64], opts: &FgrOptions) -> Result<FgrReport> {
    if sp.kind != SpectralKind::EmbeddedEigenvalue {
        return Err(Error::NotEmbedded);
    }
    let u = eigenfunction(g, sp)?;
    fgr_from_eigenfunction(g, &u, adot, opts)
}

/// As [`fgr_coefficients`], with the eigenfunction supplied directly.
pub fn fgr_from_eigenfunction(g: &MetricGraph, u: &EdgeWave, adot: &[f64], opts: &FgrOptions) -> Result<FgrReport> {
    let zd = z_dot(g, u, adot)?;
    let lambda = u.lambda.re;
    let z = lambda * lambda;
    let weights = Weights::edges(g, adot);
    let mut f = Vec::with_capacity(g.num_leads());
    let mut volume = Vec::with_capacity(g.num_leads());
    let mut boundary = Vec::with_capacity(g.num_leads());
    let mut discrepancy: f64 = 0.0;
    for lead in g.leads() {
        let report = generalized_eigenfunction_report(g, lambda, &lead.id, opts.gauge)?;
        discrepancy = discrepancy.max(report.lead_discrepancy);
        let e = &report.wave;
        let vol = lambda * inner_product(u, e, g, &weights)?;
        let mut bnd = ZERO;
        for end in vertex_ends(g) {
            let Some(m) = edge_of(end) else { continue };
            if adot[m] == 0.0 {
                continue;
            }
            let (u_v, u_n) = u.end_data(g, end);
            let (e_v, e_n) = e.end_data(g, end);
            let (e_v, e_n) = match opts.convention {
                BoundaryConvention::Conjugated => (e_v.conj(), e_n.conj()),
                BoundaryConvention::Unconjugated => (e_v, e_n),
            };
            bnd += 0.25 * adot[m] * (3.0 * u_n * e_v - u_v * e_n);
        }
        bnd /= lambda;
        volume.push(vol);
        boundary.push(bnd);
        f.push(vol + bnd);
    }
    let im_lambda_ddot = -f.iter().map(|x| x.norm_sqr()).sum::<f64>();
    Ok(FgrReport {
        lambda,
        z,
        z_dot: zd.re,
        z_dot_imag: zd.im,
        lambda_dot: zd.re / (2.0 * lambda),
        f,
        volume,
        boundary,
        im_lambda_ddot,
        example1_condition_met: lengths_commensurate(g, lambda),
        convention: opts.convention,
        gauge: opts.gauge,
        gauge_lead_discrepancy: discrepancy,
    })
}

/// `λ̃(t) = λ + tλ̇ + (i/2)t² Im λ̈`.
pub fn second_order_model(lambda: f64, lambda_dot: f64, im_lambda_ddot: f64, t: f64) -> Complex64 {
    Complex64::new(lambda + t * lambda_dot, 0.5 * t * t * im_lambda_ddot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::secular::{classify, Window, SearchOptions, find_spectral_points};

    fn embedded(g: &MetricGraph, lambda: f64) -> SpectralPoint {
        let w = Window::around(Complex64::new(lambda, 0.0), 0.05).unwrap();
        let pts = find_spectral_points(g, &w, &SearchOptions::default()).unwrap();
        assert_eq!(pts.len(), 1, "{pts:?}");
        pts.into_iter().next().unwrap()
    }

    #[test]
    fn two_cycle_first_order_shifts() {
        let g = fixtures::fig2();
        let sp = embedded(&g, PI);
        assert_eq!(sp.kind, SpectralKind::EmbeddedEigenvalue);
        let u = eigenfunction(&g, &sp).unwrap();
        for (adot, expected) in [([1.0, 1.0], PI), ([1.0, 0.0], PI / 2.0), ([1.0, -1.0], 0.0), ([1.0, -2.0], -PI / 2.0), ([0.0, 0.0], 0.0)] {
            let zd = z_dot(&g, &u, &adot).unwrap();
            assert!((zd.re / (2.0 * PI) - expected).abs() < 1e-12, "{adot:?}: {zd}");
            assert!(zd.im.abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_scaling_has_no_decay() {
        let g = fixtures::fig2();
        let sp = embedded(&g, PI);
        let r = fgr_coefficients(&g, &sp, &[1.0, 1.0]).unwrap();
        assert!(r.im_lambda_ddot.abs() < 1e-8, "{r:?}");
        assert!(r.example1_condition_met);
        assert!(r.boundary.iter().all(|b| b.norm() < 1e-10));
    }

    #[test]
    fn zero_perturbation_report() {
        let g = fixtures::fig2();
        let sp = embedded(&g, 2.0 * PI);
        let r = fgr_coefficients(&g, &sp, &[0.0, 0.0]).unwrap();
        assert_eq!(r.z_dot, 0.0);
        assert!(r.f.iter().all(|x| *x == ZERO));
        assert_eq!(r.im_lambda_ddot, 0.0);
    }

    #[test]
    fn rejects_resonances() {
        let g = fixtures::fig2();
        let sp = classify(&g, Complex64::new(PI, -(3f64).ln()), 1);
        assert!(matches!(fgr_coefficients(&g, &sp, &[1.0, 0.0]), Err(Error::NotEmbedded)));
    }

    #[test]
    fn model_at_zero() {
        assert_eq!(second_order_model(PI, 1.0, -2.0, 0.0), Complex64::new(PI, 0.0));
        assert_eq!(second_order_model(PI, 1.0, 0.0, 0.3).im, 0.0);
    }
}
