//! Vertex-condition linear system `M(λ) c = rhs` over plane-wave amplitudes.
//!
//! Unknowns are `(α_m, β_m)` for every finite edge followed by the outgoing
//! amplitude of every lead, so the system has `2M + K` columns. Each vertex of
//! degree `d` contributes `d − 1` continuity rows and one Kirchhoff row; the
//! Kirchhoff rows are divided by `λ`, which leaves every entry a pure
//! exponential in `λ`. Eigenvalues and resonances are the zeros of
//! `det M(λ)`.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{ContourOptions, Rect, RootFinder, Sample};
use crate::error::{Error, Result};
use crate::graph::{EdgeEnd, MetricGraph};
use crate::linalg::{kernel, min_norm_solve, smallest_singular_ratio, CMatrix, CVector, Lu, ScaledComplex};
use crate::wavefield::{inner_product, EdgeWave, LeadAmplitude, Weights};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Lead amplitudes below this (relative to a unit kernel vector) count as zero.
pub const EMBEDDED_LEAD_TOL: f64 = 1e-8;
/// Spectral points with `|Im λ|` below this are treated as real.
pub const REAL_AXIS_TOL: f64 = 1e-8;

/// Assembled system at one frequency.
#[derive(Debug, Clone)]
pub struct SecularSystem {
    pub lambda: Complex64,
    pub matrix: CMatrix,
    /// Entrywise `dM/dλ`.
    pub derivative: CMatrix,
    /// Right-hand side for a unit incoming wave, when requested.
    pub rhs: Option<CVector>,
    pub num_edges: usize,
    pub num_leads: usize,
}

impl SecularSystem {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Converts a solution vector into a wave; `incoming` is the lead carrying
    /// the unit incoming amplitude, if any.
    pub fn wave(&self, c: &CVector, incoming: Option<usize>) -> EdgeWave {
        let m = self.num_edges;
        EdgeWave {
            lambda: self.lambda,
            edges: (0..m).map(|e| (c[2 * e], c[2 * e + 1])).collect(),
            leads: (0..self.num_leads)
                .map(|k| LeadAmplitude { incoming: if incoming == Some(k) { ONE } else { ZERO }, outgoing: c[2 * m + k] })
                .collect(),
        }
    }

    pub fn vector(&self, w: &EdgeWave) -> CVector {
        let m = self.num_edges;
        let mut c = CVector::zeros(self.size());
        for (e, &(a, b)) in w.edges.iter().enumerate() {
            c[2 * e] = a;
            c[2 * e + 1] = b;
        }
        for (k, l) in w.leads.iter().enumerate() {
            c[2 * m + k] = l.outgoing;
        }
        c
    }
}

/// Coefficients of one half-edge: (column, value coefficient, `∂_ν/λ`
/// coefficient, d/dλ of each).
struct EndTerms {
    terms: [(usize, Complex64, Complex64, Complex64, Complex64); 2],
    count: usize,
    /// Contribution of a unit incoming lead wave to (value, `∂_ν/λ`).
    incoming: Option<(usize, Complex64, Complex64)>,
}

fn end_terms(g: &MetricGraph, lambda: Complex64, end: EdgeEnd) -> EndTerms {
    let m = g.num_edges();
    match end {
        EdgeEnd::Start(e) => EndTerms {
            terms: [(2 * e, ONE, -I, ZERO, ZERO), (2 * e + 1, ONE, I, ZERO, ZERO)],
            count: 2,
            incoming: None,
        },
        EdgeEnd::End(e) => {
            let l = g.edges()[e].length;
            let ex = (I * lambda * l).exp();
            let exi = 1.0 / ex;
            EndTerms {
                terms: [
                    (2 * e, ex, I * ex, I * l * ex, -l * ex),
                    (2 * e + 1, exi, -I * exi, -I * l * exi, -l * exi),
                ],
                count: 2,
                incoming: None,
            }
        }
        EdgeEnd::Lead(k) => EndTerms {
            terms: [(2 * m + k, ONE, -I, ZERO, ZERO), (0, ZERO, ZERO, ZERO, ZERO)],
            count: 1,
            incoming: Some((k, ONE, I)),
        },
    }
}

fn assemble(g: &MetricGraph, lambda: Complex64, incoming: Option<usize>) -> SecularSystem {
    let n = 2 * g.num_edges() + g.num_leads();
    let mut matrix = DMatrix::zeros(n, n);
    let mut derivative = DMatrix::zeros(n, n);
    let mut rhs = incoming.map(|_| CVector::zeros(n));
    let mut row = 0;
    for v in 0..g.vertices().len() {
        let ends: Vec<EndTerms> = g.incident(v).iter().map(|&e| end_terms(g, lambda, e)).collect();
        if ends.is_empty() {
            continue;
        }
        // continuity: value(first) − value(j) = 0
        for j in 1..ends.len() {
            for (sign, end) in [(1.0, &ends[0]), (-1.0, &ends[j])] {
                for &(col, val, _, dval, _) in &end.terms[..end.count] {
                    matrix[(row, col)] += sign * val;
                    derivative[(row, col)] += sign * dval;
                }
                if let (Some(rhs), Some((k, val, _))) = (rhs.as_mut(), end.incoming) {
                    if Some(k) == incoming {
                        rhs[row] -= sign * val;
                    }
                }
            }
            row += 1;
        }
        // Kirchhoff: Σ ∂_ν u / λ = 0
        for end in &ends {
            for &(col, _, nd, _, dnd) in &end.terms[..end.count] {
                matrix[(row, col)] += nd;
                derivative[(row, col)] += dnd;
            }
            if let (Some(rhs), Some((k, _, nd))) = (rhs.as_mut(), end.incoming) {
                if Some(k) == incoming {
                    rhs[row] -= nd;
                }
            }
        }
        row += 1;
    }
    debug_assert_eq!(row, n);
    SecularSystem { lambda, matrix, derivative, rhs, num_edges: g.num_edges(), num_leads: g.num_leads() }
}

/// Builds `M(λ)`; with `incoming = Some(lead id)` the known unit incoming wave
/// on that lead is moved to the right-hand side.
pub fn build_secular(g: &MetricGraph, lambda: Complex64, incoming: Option<&str>) -> Result<SecularSystem> {
    let k = match incoming {
        None => None,
        Some(id) => {
            if g.num_leads() == 0 {
                return Err(Error::NoLeads);
            }
            Some(g.lead_index(id).ok_or_else(|| Error::UnknownEdge(id.to_string()))?)
        }
    };
    Ok(assemble(g, lambda, k))
}

/// `det M(λ)` by LU with exponent tracking.
pub fn det_secular(g: &MetricGraph, lambda: Complex64) -> ScaledComplex {
    let sys = assemble(g, lambda, None);
    if sys.size() == 0 {
        return ScaledComplex::ONE;
    }
    Lu::new(&sys.matrix).det()
}

/// `det M(λ)` together with `d/dλ log det M = tr(M⁻¹ M')`.
pub fn det_and_log_derivative(g: &MetricGraph, lambda: Complex64) -> Sample {
    let sys = assemble(g, lambda, None);
    if sys.size() == 0 {
        return Sample { value: ScaledComplex::ONE, log_derivative: ZERO };
    }
    let lu = Lu::new(&sys.matrix);
    let value = lu.det();
    let log_derivative = if lu.is_singular() { Complex64::new(f64::INFINITY, 0.0) } else { lu.trace_solve(&sys.derivative) };
    Sample { value, log_derivative }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralKind {
    EmbeddedEigenvalue,
    Resonance,
    RealResonance,
}

/// A located eigenvalue or resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub lambda: Complex64,
    pub multiplicity: usize,
    pub kind: SpectralKind,
    /// Outgoing kernel waves (zero incoming amplitudes).
    pub kernel_basis: Vec<EdgeWave>,
    /// `|det M(λ)|`.
    pub residual: f64,
}

/// Search rectangle `[re_min, re_max] × [im_min, im_max]`; closed, so points
/// on the boundary are included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let w = Self { re_min, re_max, im_min, im_max };
        if !(re_min < re_max && im_min < im_max) || [re_min, re_max, im_min, im_max].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("empty window {w:?}")));
        }
        if re_min <= 0.0 && re_max >= 0.0 && im_min <= 0.0 && im_max >= 0.0 {
            return Err(Error::InvalidArgument("window must exclude λ = 0".into()));
        }
        Ok(w)
    }

    /// Square of half-width `half` around `center`.
    pub fn around(center: Complex64, half: f64) -> Result<Self> {
        Self::new(center.re - half, center.re + half, center.im - half, center.im + half)
    }

    /// Reflection `λ ↦ −conj(λ)`.
    pub fn mirrored(&self) -> Self {
        Self { re_min: -self.re_max, re_max: -self.re_min, ..*self }
    }

    fn padded(&self, pad: f64) -> Rect {
        Rect { re_min: self.re_min - pad, re_max: self.re_max + pad, im_min: self.im_min - pad, im_max: self.im_max + pad }
    }

    fn scale(&self) -> f64 {
        (self.re_max - self.re_min).max(self.im_max - self.im_min).max(1.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub tol: f64,
    pub max_depth: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_depth: 48 }
    }
}

/// Points found in a window plus the argument-principle count of the outer
/// contour.
#[derive(Debug, Clone)]
pub struct SpectralSearch {
    pub points: Vec<SpectralPoint>,
    pub winding: usize,
}

impl SpectralSearch {
    pub fn total_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }
}

/// Locates all zeros of `det M(λ)` in `window` by recursive argument-principle
/// subdivision and Newton polishing.
pub fn search_spectral_points(g: &MetricGraph, window: &Window, opts: &SearchOptions) -> Result<SpectralSearch> {
    let finder = RootFinder::new(
        |z| det_and_log_derivative(g, z),
        ContourOptions { tol: opts.tol, max_depth: opts.max_depth, ..Default::default() },
    );
    let base = 1e-6 * window.scale();
    let mut last = None;
    for jitter in [1.0, 3.7, 0.31, 9.3] {
        let rect = window.padded(base * jitter);
        match finder.find(&rect) {
            Ok((zeros, winding)) => {
                let mut points: Vec<SpectralPoint> =
                    zeros.iter().map(|z| classify(g, z.z, z.multiplicity)).collect();
                points.sort_by(|a, b| {
                    a.lambda.re.partial_cmp(&b.lambda.re).unwrap_or(Ordering::Equal).then(
                        a.lambda.im.partial_cmp(&b.lambda.im).unwrap_or(Ordering::Equal),
                    )
                });
                return Ok(SpectralSearch { points, winding });
            }
            Err(e @ Error::ContourThroughZero { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("attempted at least once"))
}

/// Zeros of `det M(λ)` in `window`, sorted by `(Re λ, Im λ)`.
pub fn find_spectral_points(g: &MetricGraph, window: &Window, opts: &SearchOptions) -> Result<Vec<SpectralPoint>> {
    Ok(search_spectral_points(g, window, opts)?.points)
}

/// Builds a spectral point at a (polished) zero.
pub fn classify(g: &MetricGraph, lambda: Complex64, multiplicity: usize) -> SpectralPoint {
    let near_real = lambda.im.abs() <= REAL_AXIS_TOL;
    let at = if near_real { Complex64::new(lambda.re, 0.0) } else { lambda };
    let sys = assemble(g, at, None);
    let basis: Vec<EdgeWave> = if sys.size() == 0 {
        Vec::new()
    } else {
        kernel(&sys.matrix, 1e-6, 1)
            .into_iter()
            .rev()
            .take(multiplicity)
            .map(|c| sys.wave(&c, None))
            .collect()
    };
    let max_lead = basis
        .iter()
        .flat_map(|w| w.leads.iter().map(|l| l.outgoing.norm()))
        .fold(0.0, f64::max);
    let kind = match (near_real, max_lead < EMBEDDED_LEAD_TOL) {
        (true, true) => SpectralKind::EmbeddedEigenvalue,
        (true, false) => SpectralKind::RealResonance,
        (false, _) => SpectralKind::Resonance,
    };
    let lambda = if kind == SpectralKind::EmbeddedEigenvalue { at } else { lambda };
    let residual = det_secular(g, lambda).value().norm();
    SpectralPoint { lambda, multiplicity, kind, kernel_basis: basis, residual }
}

/// Polishes a single zero by Newton's method from `start`.
pub fn polish(g: &MetricGraph, start: Complex64, tol: f64) -> Option<Complex64> {
    let finder = RootFinder::new(|z| det_and_log_derivative(g, z), ContourOptions { tol, ..Default::default() });
    finder.newton(start, 1)
}

/// Normalized, real-valued eigenfunction of a simple embedded eigenvalue.
pub fn eigenfunction(g: &MetricGraph, sp: &SpectralPoint) -> Result<EdgeWave> {
    if sp.kind != SpectralKind::EmbeddedEigenvalue {
        return Err(Error::NotEmbedded);
    }
    if sp.multiplicity != 1 || sp.kernel_basis.len() != 1 {
        return Err(Error::NotSimple(sp.multiplicity.max(sp.kernel_basis.len())));
    }
    Ok(real_normalized(g, &sp.kernel_basis[0]))
}

/// Zeroes the lead part, fixes the global phase so that the largest sine
/// coefficient (first one on ties) is positive real, drops the residual
/// imaginary parts and normalizes in `L²`.
fn real_normalized(g: &MetricGraph, w: &EdgeWave) -> EdgeWave {
    let lambda = Complex64::new(w.lambda.re, 0.0);
    let coeffs: Vec<(Complex64, Complex64)> = (0..g.num_edges()).map(|m| w.cos_sin(m)).collect();
    let max_sin = coeffs.iter().map(|c| c.1.norm()).fold(0.0, f64::max);
    let max_cos = coeffs.iter().map(|c| c.0.norm()).fold(0.0, f64::max);
    let pivot = if max_sin > 1e-8 * max_cos.max(max_sin) {
        coeffs.iter().map(|c| c.1).find(|b| b.norm() >= (1.0 - 1e-6) * max_sin)
    } else {
        coeffs.iter().map(|c| c.0).find(|a| a.norm() >= (1.0 - 1e-6) * max_cos)
    }
    .unwrap_or(ONE);
    let phase = pivot.conj() / pivot.norm();
    let real: Vec<(Complex64, Complex64)> = coeffs
        .iter()
        .map(|&(a, b)| (Complex64::new((a * phase).re, 0.0), Complex64::new((b * phase).re, 0.0)))
        .collect();
    let mut u = EdgeWave::from_cos_sin(g, lambda, &real);
    let norm = inner_product(&u, &u, g, &Weights::compact(g)).expect("compact weights").re.sqrt();
    u.scale(Complex64::new(1.0 / norm, 0.0));
    u
}

/// Solves the driven system at real `λ`; falls back to the minimal-norm
/// least-squares solution when `M(λ)` is numerically singular.
fn solve_driven(g: &MetricGraph, lambda: f64, k: usize) -> Result<(SecularSystem, CVector, bool)> {
    let sys = assemble(g, Complex64::new(lambda, 0.0), Some(k));
    let rhs = sys.rhs.clone().expect("driven system");
    let singular = smallest_singular_ratio(&sys.matrix) < 1e-9;
    let c = if singular { min_norm_solve(&sys.matrix, &rhs, 1e-9) } else { Lu::new(&sys.matrix).solve(&rhs) };
    let residual = (&sys.matrix * &c - &rhs).norm();
    if residual > 1e-8 * rhs.norm().max(1.0) {
        return Err(Error::SingularInconsistent(residual));
    }
    Ok((sys, c, singular))
}

fn check_real(g: &MetricGraph, lambda: f64) -> Result<()> {
    if g.num_leads() == 0 {
        return Err(Error::NoLeads);
    }
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("λ = {lambda} must be real and nonzero")));
    }
    Ok(())
}

/// `K × K` scattering matrix; column `k` holds the outgoing amplitudes for a
/// unit incoming wave on lead `k`.
pub fn scattering_matrix(g: &MetricGraph, lambda: f64) -> Result<CMatrix> {
    check_real(g, lambda)?;
    let kk = g.num_leads();
    let m = g.num_edges();
    let mut s = CMatrix::zeros(kk, kk);
    for k in 0..kk {
        let (_, c, _) = solve_driven(g, lambda, k)?;
        for j in 0..kk {
            s[(j, k)] = c[2 * m + j];
        }
    }
    Ok(s)
}

/// How the generalized eigenfunction is pinned at an embedded eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// Richardson-extrapolated limit of `e^k(λ(1 ± η))`.
    #[default]
    Extrapolated,
    /// Minimal-norm solution with the edge part orthogonal to the eigenspace.
    MinimalNorm,
}

/// Both candidate values of `e^k(λ)` and their agreement.
#[derive(Debug, Clone)]
pub struct GeneralizedEigenfunction {
    pub wave: EdgeWave,
    pub at_eigenvalue: bool,
    pub minimal_norm: Option<EdgeWave>,
    pub extrapolated: Option<EdgeWave>,
    /// Largest difference of lead amplitudes between the two candidates.
    pub lead_discrepancy: f64,
    /// Largest difference of edge amplitudes between the two candidates.
    pub edge_discrepancy: f64,
}

const RICHARDSON_ETAS: [f64; 2] = [1e-4, 1e-5];

fn symmetric_average(g: &MetricGraph, lambda: f64, k: usize, eta: f64) -> Result<CVector> {
    let (_, plus, _) = solve_driven(g, lambda * (1.0 + eta), k)?;
    let (_, minus, _) = solve_driven(g, lambda * (1.0 - eta), k)?;
    Ok((plus + minus) * Complex64::new(0.5, 0.0))
}

/// Generalized eigenfunction with unit incoming wave on lead `lead`, with the
/// diagnostic comparison of gauges at embedded eigenvalues.
pub fn generalized_eigenfunction_report(g: &MetricGraph, lambda: f64, lead: &str, gauge: Gauge) -> Result<GeneralizedEigenfunction> {
    check_real(g, lambda)?;
    let k = g.lead_index(lead).ok_or_else(|| Error::UnknownEdge(lead.to_string()))?;
    let (sys, c, singular) = solve_driven(g, lambda, k)?;
    if !singular {
        return Ok(GeneralizedEigenfunction {
            wave: sys.wave(&c, Some(k)),
            at_eigenvalue: false,
            minimal_norm: None,
            extrapolated: None,
            lead_discrepancy: 0.0,
            edge_discrepancy: 0.0,
        });
    }
    let mut minimal = sys.wave(&c, Some(k));
    let eigen = orthonormal_eigenspace(g, &sys);
    let wts = Weights::compact(g);
    for u in &eigen {
        let proj = inner_product(&minimal, u, g, &wts)?;
        minimal.axpy(-proj, u);
    }
    let [h1, h2] = RICHARDSON_ETAS;
    let e1 = symmetric_average(g, lambda, k, h1)?;
    let e2 = symmetric_average(g, lambda, k, h2)?;
    let w1 = Complex64::new(h1 * h1 / (h1 * h1 - h2 * h2), 0.0);
    let w2 = Complex64::new(h2 * h2 / (h1 * h1 - h2 * h2), 0.0);
    let extrapolated = sys.wave(&(e2 * w1 - e1 * w2), Some(k));
    let lead_discrepancy = minimal
        .leads
        .iter()
        .zip(&extrapolated.leads)
        .map(|(a, b)| (a.outgoing - b.outgoing).norm())
        .fold(0.0, f64::max);
    let edge_discrepancy = minimal
        .edges
        .iter()
        .zip(&extrapolated.edges)
        .map(|(a, b)| (a.0 - b.0).norm().max((a.1 - b.1).norm()))
        .fold(0.0, f64::max);
    let wave = match gauge {
        Gauge::Extrapolated => extrapolated.clone(),
        Gauge::MinimalNorm => minimal.clone(),
    };
    Ok(GeneralizedEigenfunction {
        wave,
        at_eigenvalue: true,
        minimal_norm: Some(minimal),
        extrapolated: Some(extrapolated),
        lead_discrepancy,
        edge_discrepancy,
    })
}

/// `e^k(λ)` in the default (extrapolated) gauge.
pub fn generalized_eigenfunction(g: &MetricGraph, lambda: f64, lead: &str) -> Result<EdgeWave> {
    Ok(generalized_eigenfunction_report(g, lambda, lead, Gauge::default())?.wave)
}

/// `L²`-orthonormal basis of the eigenfunctions at a singular real `λ`.
fn orthonormal_eigenspace(g: &MetricGraph, sys: &SecularSystem) -> Vec<EdgeWave> {
    let plain = assemble(g, sys.lambda, None);
    let wts = Weights::compact(g);
    let mut basis: Vec<EdgeWave> = Vec::new();
    for c in kernel(&plain.matrix, 1e-9, 1) {
        let mut w = plain.wave(&c, None);
        for l in &mut w.leads {
            l.outgoing = ZERO;
        }
        for b in &basis {
            let p = inner_product(&w, b, g, &wts).expect("compact weights");
            w.axpy(-p, b);
        }
        let n = inner_product(&w, &w, g, &wts).expect("compact weights").re.sqrt();
        if n > 1e-12 {
            w.scale(Complex64::new(1.0 / n, 0.0));
            basis.push(w);
        }
    }
    basis
}

/// Residual `‖M(λ) c − rhs‖` of a wave against all vertex conditions.
pub fn vertex_residual(g: &MetricGraph, w: &EdgeWave) -> f64 {
    let incoming = w.leads.iter().position(|l| l.incoming != ZERO);
    let sys = assemble(g, w.lambda, incoming);
    let c = sys.vector(w);
    let mut r = &sys.matrix * &c;
    if let (Some(rhs), Some(k)) = (&sys.rhs, incoming) {
        r -= rhs * w.leads[k].incoming;
    }
    r.norm()
}
