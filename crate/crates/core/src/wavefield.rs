//! Per-edge plane-wave solutions `u_m(x) = α_m e^{iλx} + β_m e^{-iλx}` and
//! their traces, normal derivatives and exact inner products.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeEnd, MetricGraph};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Amplitudes of the lead wave `c_in e^{-iλx} + c_out e^{iλx}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LeadAmplitude {
    pub incoming: Complex64,
    pub outgoing: Complex64,
}

/// A solution ansatz at a fixed complex frequency, stored as amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeWave {
    pub lambda: Complex64,
    /// `(α_m, β_m)` per finite edge.
    pub edges: Vec<(Complex64, Complex64)>,
    pub leads: Vec<LeadAmplitude>,
}

/// Real weights per finite edge and per lead.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub edges: Vec<f64>,
    pub leads: Vec<f64>,
}

impl Weights {
    /// Given edge weights, zero on every lead.
    pub fn edges(g: &MetricGraph, edges: &[f64]) -> Self {
        assert_eq!(edges.len(), g.num_edges());
        Self { edges: edges.to_vec(), leads: vec![0.0; g.num_leads()] }
    }

    /// Weight one on finite edges, zero on leads: the `L²` product over the
    /// compact part.
    pub fn compact(g: &MetricGraph) -> Self {
        Self { edges: vec![1.0; g.num_edges()], leads: vec![0.0; g.num_leads()] }
    }
}

impl EdgeWave {
    pub fn zero(g: &MetricGraph, lambda: Complex64) -> Self {
        Self {
            lambda,
            edges: vec![(ZERO, ZERO); g.num_edges()],
            leads: vec![LeadAmplitude::default(); g.num_leads()],
        }
    }

    /// Wave with `A_m cos(λx) + B_m sin(λx)` on edge `m`, zero on leads.
    pub fn from_cos_sin(g: &MetricGraph, lambda: Complex64, cos_sin: &[(Complex64, Complex64)]) -> Self {
        let mut w = Self::zero(g, lambda);
        for (slot, &(a, b)) in w.edges.iter_mut().zip(cos_sin) {
            *slot = ((a - I * b) * 0.5, (a + I * b) * 0.5);
        }
        w
    }

    /// `(A_m, B_m)` with `u_m = A_m cos(λx) + B_m sin(λx)`.
    pub fn cos_sin(&self, m: usize) -> (Complex64, Complex64) {
        let (a, b) = self.edges[m];
        (a + b, I * (a - b))
    }

    /// `∂_x` of this wave, again a wave at the same λ.
    pub fn derivative(&self) -> Self {
        let il = I * self.lambda;
        Self {
            lambda: self.lambda,
            edges: self.edges.iter().map(|&(a, b)| (il * a, -il * b)).collect(),
            leads: self
                .leads
                .iter()
                .map(|l| LeadAmplitude { incoming: -il * l.incoming, outgoing: il * l.outgoing })
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: Complex64) {
        for (a, b) in &mut self.edges {
            *a *= factor;
            *b *= factor;
        }
        for l in &mut self.leads {
            l.incoming *= factor;
            l.outgoing *= factor;
        }
    }

    /// `self + factor · other` (same λ assumed).
    pub fn axpy(&mut self, factor: Complex64, other: &EdgeWave) {
        for (s, o) in self.edges.iter_mut().zip(&other.edges) {
            s.0 += factor * o.0;
            s.1 += factor * o.1;
        }
        for (s, o) in self.leads.iter_mut().zip(&other.leads) {
            s.incoming += factor * o.incoming;
            s.outgoing += factor * o.outgoing;
        }
    }

    fn edge_value(&self, m: usize, x: f64) -> Complex64 {
        let (a, b) = self.edges[m];
        let e = (I * self.lambda * x).exp();
        a * e + b / e
    }

    fn edge_slope(&self, m: usize, x: f64) -> Complex64 {
        let (a, b) = self.edges[m];
        let e = (I * self.lambda * x).exp();
        I * self.lambda * (a * e - b / e)
    }

    fn lead_value(&self, k: usize, x: f64) -> Complex64 {
        let l = self.leads[k];
        let e = (I * self.lambda * x).exp();
        l.incoming / e + l.outgoing * e
    }

    fn lead_slope(&self, k: usize, x: f64) -> Complex64 {
        let l = self.leads[k];
        let e = (I * self.lambda * x).exp();
        I * self.lambda * (l.outgoing * e - l.incoming / e)
    }

    /// Value and outward normal derivative at a half-edge.
    pub fn end_data(&self, g: &MetricGraph, end: EdgeEnd) -> (Complex64, Complex64) {
        match end {
            EdgeEnd::Start(m) => (self.edge_value(m, 0.0), -self.edge_slope(m, 0.0)),
            EdgeEnd::End(m) => {
                let l = g.edges()[m].length;
                (self.edge_value(m, l), self.edge_slope(m, l))
            }
            EdgeEnd::Lead(k) => (self.lead_value(k, 0.0), -self.lead_slope(k, 0.0)),
        }
    }
}

fn locate(g: &MetricGraph, id: &str) -> Result<EdgeRef> {
    if let Some(m) = g.edge_index(id) {
        Ok(EdgeRef::Edge(m))
    } else if let Some(k) = g.lead_index(id) {
        Ok(EdgeRef::Lead(k))
    } else {
        Err(Error::UnknownEdge(id.to_string()))
    }
}

enum EdgeRef {
    Edge(usize),
    Lead(usize),
}

/// `u(x)` on the edge or lead `id`.
pub fn eval_wave(g: &MetricGraph, w: &EdgeWave, id: &str, x: f64) -> Result<Complex64> {
    match locate(g, id)? {
        EdgeRef::Edge(m) => {
            let length = g.edges()[m].length;
            if !(0.0..=length).contains(&x) {
                return Err(Error::OutOfRange { id: id.to_string(), x, length });
            }
            Ok(w.edge_value(m, x))
        }
        EdgeRef::Lead(k) => {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::OutOfRange { id: id.to_string(), x, length: f64::INFINITY });
            }
            Ok(w.lead_value(k, x))
        }
    }
}

fn end_at(g: &MetricGraph, id: &str, vertex: &str) -> Result<EdgeEnd> {
    let not_incident = || Error::NotIncident { edge: id.to_string(), vertex: vertex.to_string() };
    let v = g.vertex_index(vertex).ok_or_else(not_incident)?;
    match locate(g, id)? {
        EdgeRef::Edge(m) => {
            let e = &g.edges()[m];
            if e.start == v {
                Ok(EdgeEnd::Start(m))
            } else if e.end == v {
                Ok(EdgeEnd::End(m))
            } else {
                Err(not_incident())
            }
        }
        EdgeRef::Lead(k) if g.leads()[k].vertex == v => Ok(EdgeEnd::Lead(k)),
        EdgeRef::Lead(_) => Err(not_incident()),
    }
}

/// `u_m(v)`.
pub fn vertex_trace(g: &MetricGraph, w: &EdgeWave, id: &str, vertex: &str) -> Result<Complex64> {
    Ok(w.end_data(g, end_at(g, id, vertex)?).0)
}

/// Outward normal derivative `∂_ν u_m(v)`: `-u'(0)` at the start, `u'(ℓ)` at
/// the end of an edge.
pub fn normal_derivative(g: &MetricGraph, w: &EdgeWave, id: &str, vertex: &str) -> Result<Complex64> {
    Ok(w.end_data(g, end_at(g, id, vertex)?).1)
}

/// `(e^z − 1)` without cancellation for small `z`.
fn expm1(z: Complex64) -> Complex64 {
    let (a, b) = (z.re, z.im);
    let half_sin = (0.5 * b).sin();
    Complex64::new(a.exp_m1() * b.cos() - 2.0 * half_sin * half_sin, a.exp() * b.sin())
}

/// `∫_0^ℓ e^{iκx} dx`.
pub(crate) fn exp_integral(kappa: Complex64, length: f64) -> Complex64 {
    let z = I * kappa * length;
    if z.norm() < 1e-8 {
        // series form: ℓ (1 + z/2)
        length * (1.0 + z * 0.5)
    } else {
        expm1(z) / (I * kappa)
    }
}

/// `Σ_m w_m ∫ u_m conj(v_m)` over finite edges plus weighted lead integrals,
/// in closed form.
pub fn inner_product(w1: &EdgeWave, w2: &EdgeWave, g: &MetricGraph, weights: &Weights) -> Result<Complex64> {
    let (l1, l2c) = (w1.lambda, w2.lambda.conj());
    let mut total = ZERO;
    for (m, e) in g.edges().iter().enumerate() {
        let wt = weights.edges[m];
        if wt == 0.0 {
            continue;
        }
        let (a1, b1) = w1.edges[m];
        let (a2, b2) = w2.edges[m];
        let (a2, b2) = (a2.conj(), b2.conj());
        let s = a1 * a2 * exp_integral(l1 - l2c, e.length)
            + a1 * b2 * exp_integral(l1 + l2c, e.length)
            + b1 * a2 * exp_integral(-(l1 + l2c), e.length)
            + b1 * b2 * exp_integral(-(l1 - l2c), e.length);
        total += wt * s;
    }
    for k in 0..g.num_leads() {
        let wt = weights.leads[k];
        if wt == 0.0 {
            continue;
        }
        let p = w1.leads[k];
        let q = w2.leads[k];
        // u = p_in e^{-iλ1 x} + p_out e^{iλ1 x}; conj(v) = conj(q_in) e^{i conj(λ2) x} + conj(q_out) e^{-i conj(λ2) x}
        let terms = [
            (p.outgoing * q.outgoing.conj(), l1 - l2c),
            (p.outgoing * q.incoming.conj(), l1 + l2c),
            (p.incoming * q.outgoing.conj(), -(l1 + l2c)),
            (p.incoming * q.incoming.conj(), -(l1 - l2c)),
        ];
        let mut s = ZERO;
        for (amp, kappa) in terms {
            if amp == ZERO {
                continue;
            }
            if kappa.im <= 0.0 {
                return Err(Error::DivergentLeadIntegral);
            }
            s += amp * I / kappa;
        }
        total += wt * s;
    }
    Ok(total)
}

/// `Σ_v Σ_{e_m ∋ v} ∂_ν f_m(v) conj(g_m(v))`, summed vertex by vertex.
pub fn boundary_sum_by_vertex(g: &MetricGraph, f: &EdgeWave, h: &EdgeWave) -> Complex64 {
    let mut s = ZERO;
    for v in 0..g.vertices().len() {
        for &end in g.incident(v) {
            s += f.end_data(g, end).1 * h.end_data(g, end).0.conj();
        }
    }
    s
}

/// The same boundary sum resummed edge by edge (finite edges, then leads).
pub fn boundary_sum_by_edge(g: &MetricGraph, f: &EdgeWave, h: &EdgeWave) -> Complex64 {
    let mut s = ZERO;
    for m in 0..g.num_edges() {
        for end in [EdgeEnd::Start(m), EdgeEnd::End(m)] {
            s += f.end_data(g, end).1 * h.end_data(g, end).0.conj();
        }
    }
    for k in 0..g.num_leads() {
        let end = EdgeEnd::Lead(k);
        s += f.end_data(g, end).1 * h.end_data(g, end).0.conj();
    }
    s
}

/// Defect of the integration-by-parts identity on the compact part,
/// `-⟨f'', g⟩ = ⟨f', g'⟩ − Σ ∂_ν f ḡ = −⟨f, g''⟩ + Σ (f ∂_ν ḡ − ∂_ν f ḡ)`.
/// Lead components must vanish; the larger of the two defects is returned.
pub fn green_identity_defect(g: &MetricGraph, f: &EdgeWave, h: &EdgeWave) -> f64 {
    let wts = Weights::compact(g);
    let (fp, hp) = (f.derivative(), h.derivative());
    let (fpp, hpp) = (fp.derivative(), hp.derivative());
    let ip = |a: &EdgeWave, b: &EdgeWave| inner_product(a, b, g, &wts).expect("compact weights");
    let lhs = -ip(&fpp, h);
    let first = ip(&fp, &hp) - boundary_sum_by_vertex(g, f, h);
    // second line: f ∂_ν ḡ − ∂_ν f ḡ
    let mut swap = ZERO;
    for v in 0..g.vertices().len() {
        for &end in g.incident(v) {
            let (fv, fn_) = f.end_data(g, end);
            let (hv, hn) = h.end_data(g, end);
            swap += fv * hn.conj() - fn_ * hv.conj();
        }
    }
    let second = -ip(f, &hpp) + swap;
    (lhs - first).norm().max((lhs - second).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sine_wave(g: &MetricGraph, lambda: f64, amps: &[f64]) -> EdgeWave {
        let cs: Vec<_> = amps.iter().map(|&b| (ZERO, c(b, 0.0))).collect();
        EdgeWave::from_cos_sin(g, c(lambda, 0.0), &cs)
    }

    #[test]
    fn evaluation_examples() {
        let g = fixtures::interval(1.0);
        let cosine = EdgeWave { lambda: c(PI, 0.0), edges: vec![(c(0.5, 0.), c(0.5, 0.))], leads: vec![] };
        assert!(eval_wave(&g, &cosine, "e1", 0.5).unwrap().norm() < 1e-15);
        let half_i = c(0.5, 0.0) / I;
        let sine = EdgeWave { lambda: c(PI, 0.0), edges: vec![(half_i, -half_i)], leads: vec![] };
        assert!((eval_wave(&g, &sine, "e1", 0.5).unwrap() - 1.0).norm() < 1e-15);
        assert!(matches!(eval_wave(&g, &sine, "e1", 1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(eval_wave(&g, &sine, "zz", 0.5), Err(Error::UnknownEdge(_))));
    }

    #[test]
    fn normal_derivative_sign_convention() {
        let g = fixtures::interval(1.0);
        let u = sine_wave(&g, PI, &[1.0]);
        assert!((normal_derivative(&g, &u, "e1", "v1").unwrap() - (-PI)).norm() < 1e-14);
        assert!((normal_derivative(&g, &u, "e1", "v2").unwrap() - (-PI)).norm() < 1e-14);
        let cosine = EdgeWave::from_cos_sin(&g, c(2.7, 0.0), &[(c(1.0, 0.0), ZERO)]);
        assert!(normal_derivative(&g, &cosine, "e1", "v1").unwrap().norm() < 1e-15);
        let two = fixtures::fig2();
        assert!(matches!(normal_derivative(&two, &u, "e1", "v2"), Err(Error::NotIncident { .. })));
    }

    #[test]
    fn sine_products() {
        let g = fixtures::interval(1.0);
        let w = Weights::compact(&g);
        let s1 = sine_wave(&g, PI, &[1.0]);
        let s2 = sine_wave(&g, 2.0 * PI, &[1.0]);
        assert!((inner_product(&s1, &s1, &g, &w).unwrap() - 0.5).norm() < 1e-15);
        assert!(inner_product(&s1, &s2, &g, &w).unwrap().norm() < 1e-15);
    }

    #[test]
    fn weighted_product_on_two_cycle() {
        let g = fixtures::fig2();
        let u = sine_wave(&g, PI, &[1.0, -1.0]);
        let norm2 = inner_product(&u, &u, &g, &Weights::compact(&g)).unwrap().re;
        assert!((norm2 - 1.0).abs() < 1e-15);
        let v = inner_product(&u, &u, &g, &Weights::edges(&g, &[1.0, 0.0])).unwrap();
        assert!((v - 0.5).norm() < 1e-15);
    }

    #[test]
    fn lead_integrals() {
        let g = fixtures::halfline();
        let lam = c(2.0, 0.3);
        let decaying = EdgeWave { lambda: lam, edges: vec![], leads: vec![LeadAmplitude { incoming: ZERO, outgoing: c(1.0, 0.0) }] };
        let w = Weights { edges: vec![], leads: vec![1.0] };
        // ∫ e^{-0.6 x} = 1/0.6
        let v = inner_product(&decaying, &decaying, &g, &w).unwrap();
        assert!((v - 1.0 / 0.6).norm() < 1e-14);
        let growing = EdgeWave { lambda: c(2.0, -0.3), ..decaying.clone() };
        assert_eq!(inner_product(&growing, &growing, &g, &w), Err(Error::DivergentLeadIntegral));
        // zero weight never diverges
        let none = Weights { edges: vec![], leads: vec![0.0] };
        assert!(inner_product(&growing, &growing, &g, &none).is_ok());
    }

    #[test]
    fn degenerate_exponent_branch() {
        for kappa in [c(1e-10, 0.0), c(0.0, 1e-12), c(3e-9, -2e-9), c(0.0, 0.0)] {
            // ℓ Σ z^n/(n+1)! with z = iκℓ
            let z = I * kappa * 2.0;
            let exact = 2.0 * (1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0);
            assert!((exp_integral(kappa, 2.0) - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn sine_eigenfunction_boundary_sums_vanish() {
        let g = fixtures::fig2();
        let u = sine_wave(&g, PI, &[1.0, -1.0]);
        assert!(green_identity_defect(&g, &u, &u) < 1e-12);
        let interval = fixtures::interval(1.0);
        let s = sine_wave(&interval, PI, &[1.0]);
        assert!(green_identity_defect(&interval, &s, &s) < 1e-12);
    }
}
