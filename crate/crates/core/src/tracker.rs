//! Continuation of a spectral point along a length-perturbation family and
//! comparison with the second-order model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{ContourOptions, RootFinder};
use crate::error::{Error, Result};
use crate::fgr::{second_order_model, FgrReport};
use crate::graph::{lengths_at, MetricGraph, PerturbationFamily, PerturbationMode};
use crate::secular::{
    det_and_log_derivative, det_secular, eigenfunction, find_spectral_points, SearchOptions, SpectralKind, SpectralPoint,
    Window,
};

/// Stencil half-widths of the Richardson second difference.
pub const RICHARDSON_STEPS: [f64; 2] = [1e-2, 5e-3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleStatus {
    Converged,
    LostTrack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub lambda: Vec<Complex64>,
    /// Second-order model, filled in by [`Trajectory::set_model`].
    pub model: Vec<Complex64>,
    /// `|det M_t(λ(t))|`.
    pub residual: Vec<f64>,
    pub status: Vec<SampleStatus>,
    pub step_cap: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.status.iter().all(|s| *s == SampleStatus::Converged)
    }

    /// Error describing the first lost sample, if any.
    pub fn require_complete(&self) -> Result<()> {
        match self.status.iter().position(|s| *s == SampleStatus::LostTrack) {
            None => Ok(()),
            Some(i) => Err(Error::LostTrack { t: self.t[i], reason: "Newton failed or jumped past the step cap".into() }),
        }
    }

    pub fn set_model(&mut self, report: &FgrReport) {
        self.model = self
            .t
            .iter()
            .map(|&t| second_order_model(report.lambda, report.lambda_dot, report.im_lambda_ddot, t))
            .collect();
    }

    /// Converged `λ` at `t`, matched to within `1e-14`.
    pub fn at(&self, t: f64) -> Option<Complex64> {
        self.t
            .iter()
            .position(|&s| (s - t).abs() <= 1e-14)
            .filter(|&i| self.status[i] == SampleStatus::Converged)
            .map(|i| self.lambda[i])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrackOptions {
    pub tol: f64,
    /// Overrides the automatically chosen continuity guard.
    pub step_cap: Option<f64>,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self { tol: 1e-12, step_cap: None }
    }
}

/// Half the distance from `seed` to the nearest other spectral point within
/// a unit neighbourhood, or 0.5 if there is none.
pub fn default_step_cap(g: &MetricGraph, seed: Complex64) -> Result<f64> {
    let window = Window::new((seed.re - 1.0).max(crate::quasimode::MIN_RE), seed.re + 1.0, seed.im - 1.0, seed.im + 1.0)?;
    let points = find_spectral_points(g, &window, &SearchOptions::default())?;
    let nearest = points
        .iter()
        .map(|p| (p.lambda - seed).norm())
        .filter(|&d| d > 1e-8)
        .fold(f64::INFINITY, f64::min);
    Ok(if nearest.is_finite() { 0.5 * nearest } else { 0.5 })
}

fn predict(history: &[(f64, Complex64)], t: f64) -> Complex64 {
    let n = history.len();
    let pts = &history[n.saturating_sub(3)..];
    // Lagrange interpolation through the last (up to) three samples
    let mut out = Complex64::new(0.0, 0.0);
    for (i, &(ti, li)) in pts.iter().enumerate() {
        let mut w = 1.0;
        for (j, &(tj, _)) in pts.iter().enumerate() {
            if i != j {
                w *= (t - tj) / (ti - tj);
            }
        }
        out += li * w;
    }
    out
}

fn polish_at(g: &MetricGraph, p: &PerturbationFamily, t: f64, start: Complex64, tol: f64) -> Result<Option<(Complex64, f64)>> {
    let gt = lengths_at(p, g, t)?;
    let finder = RootFinder::new(|z| det_and_log_derivative(&gt, z), ContourOptions { tol, max_newton: 80, ..Default::default() });
    Ok(finder.newton(start, 1).map(|z| (z, det_secular(&gt, z).value().norm())))
}

/// Follows `seed` along `t_grid` (ascending, containing 0) by Newton's method
/// on `det M_t`, outward from `t = 0` in both directions. A failed step is
/// recorded as a `LostTrack` sample and ends that direction.
pub fn track(g: &MetricGraph, p: &PerturbationFamily, seed: &SpectralPoint, t_grid: &[f64]) -> Result<Trajectory> {
    track_with(g, p, seed, t_grid, &TrackOptions::default())
}

pub fn track_with(g: &MetricGraph, p: &PerturbationFamily, seed: &SpectralPoint, t_grid: &[f64], opts: &TrackOptions) -> Result<Trajectory> {
    if seed.multiplicity != 1 {
        return Err(Error::NotSimple(seed.multiplicity));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("t grid must be strictly ascending".into()));
    }
    let zero = t_grid
        .iter()
        .position(|&t| t == 0.0)
        .ok_or_else(|| Error::InvalidArgument("t grid must contain 0".into()))?;
    let cap = match opts.step_cap {
        Some(c) => c,
        None => default_step_cap(g, seed.lambda)?,
    };
    let origin = (0.0, seed.lambda, det_secular(g, seed.lambda).value().norm());
    let run = |ts: Vec<f64>| -> Result<Vec<(f64, Complex64, f64, SampleStatus)>> {
        let mut history = vec![(0.0, seed.lambda)];
        let mut out = Vec::new();
        for t in ts {
            let guess = predict(&history, t);
            let prev = history.last().expect("nonempty").1;
            match polish_at(g, p, t, guess, opts.tol)? {
                Some((z, res)) if (z - prev).norm() <= cap && z.im <= 1e-9 => {
                    history.push((t, z));
                    out.push((t, z, res, SampleStatus::Converged));
                }
                _ => {
                    out.push((t, Complex64::new(f64::NAN, f64::NAN), f64::NAN, SampleStatus::LostTrack));
                    break;
                }
            }
        }
        Ok(out)
    };
    let backward = run(t_grid[..zero].iter().rev().copied().collect())?;
    let forward = run(t_grid[zero + 1..].to_vec())?;
    let mut traj = Trajectory { t: vec![], lambda: vec![], model: vec![], residual: vec![], status: vec![], step_cap: cap };
    let origin = (origin.0, origin.1, origin.2, SampleStatus::Converged);
    for (t, z, r, s) in backward.into_iter().rev().chain(std::iter::once(origin)).chain(forward) {
        traj.t.push(t);
        traj.lambda.push(z);
        traj.residual.push(r);
        traj.status.push(s);
    }
    Ok(traj)
}

/// Uniform grid `0, T/N, …, T`, mirrored to negative `t` when `symmetric`.
pub fn uniform_grid(t_max: f64, steps: usize, symmetric: bool) -> Vec<f64> {
    let pos: Vec<f64> = (0..=steps).map(|i| t_max * i as f64 / steps as f64).collect();
    if !symmetric {
        return pos;
    }
    pos.iter().skip(1).rev().map(|t| -t).chain(pos.iter().copied()).collect()
}

/// Grid with the symmetric stencils used for derivative estimates.
pub fn stencil_grid(extra: &[f64]) -> Vec<f64> {
    let mut ts: Vec<f64> = vec![0.0];
    for &h in RICHARDSON_STEPS.iter().chain(extra) {
        ts.push(h);
        ts.push(-h);
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// `D(h) = (f(h) − 2f(0) + f(−h))/h²` at both stencil widths, combined to
/// cancel the `h²` error term.
pub fn richardson_second_derivative(f: impl Fn(f64) -> Option<f64>) -> Option<f64> {
    let [h1, h2] = RICHARDSON_STEPS;
    let d = |h: f64| Some((f(h)? - 2.0 * f(0.0)? + f(-h)?) / (h * h));
    let (d1, d2) = (d(h1)?, d(h2)?);
    Some((h1 * h1 * d2 - h2 * h2 * d1) / (h1 * h1 - h2 * h2))
}

/// Second derivative of `Im λ(t)` at 0: Richardson when the symmetric
/// stencil is present, otherwise the one-sided four-point formula on the
/// first three positive samples of a uniform grid.
pub fn im_second_derivative(traj: &Trajectory) -> Option<f64> {
    let im = |t: f64| traj.at(t).map(|z| z.im);
    if let Some(v) = richardson_second_derivative(im) {
        return Some(v);
    }
    let zero = traj.t.iter().position(|&t| t == 0.0)?;
    let pts: Vec<(f64, Complex64)> = (zero..zero + 4)
        .map(|i| (traj.status.get(i) == Some(&SampleStatus::Converged)).then(|| (traj.t[i], traj.lambda[i])))
        .collect::<Option<_>>()?;
    let h = pts[1].0;
    if (pts[2].0 - 2.0 * h).abs() > 1e-12 * h || (pts[3].0 - 3.0 * h).abs() > 1e-12 * h {
        return None;
    }
    let f: Vec<f64> = pts.iter().map(|p| p.1.im).collect();
    Some((2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h))
}

/// Centered difference of `Re λ(t)` over the narrowest symmetric pair.
pub fn re_slope(traj: &Trajectory) -> Option<f64> {
    let h = traj
        .t
        .iter()
        .filter(|&&t| t > 0.0 && traj.at(t).is_some() && traj.at(-t).is_some())
        .fold(f64::INFINITY, |a, &b| a.min(b));
    if !h.is_finite() {
        return None;
    }
    Some((traj.at(h)?.re - traj.at(-h)?.re) / (2.0 * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    /// `max |Re λ(t) − Re λ̃(t)| / t²`.
    pub max_re_residual: f64,
    /// `max |Im λ(t) − Im λ̃(t)| / t³`.
    pub max_im_residual: f64,
    pub im_second_derivative: Option<f64>,
    pub lambda_dot_fd: Option<f64>,
}

pub fn compare_to_model(traj: &Trajectory, report: &FgrReport) -> Result<ModelComparison> {
    let samples: Vec<(f64, Complex64)> = traj
        .t
        .iter()
        .zip(&traj.lambda)
        .zip(&traj.status)
        .filter(|((t, _), s)| **t != 0.0 && **s == SampleStatus::Converged)
        .map(|((t, z), _)| (*t, *z))
        .collect();
    if samples.len() < 4 {
        return Err(Error::GridTooCoarse(samples.len()));
    }
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for (t, z) in samples {
        let m = second_order_model(report.lambda, report.lambda_dot, report.im_lambda_ddot, t);
        max_re = max_re.max((z.re - m.re).abs() / (t * t));
        max_im = max_im.max((z.im - m.im).abs() / (t * t).abs() / t.abs());
    }
    Ok(ModelComparison {
        max_re_residual: max_re,
        max_im_residual: max_im,
        im_second_derivative: im_second_derivative(traj),
        lambda_dot_fd: re_slope(traj),
    })
}

/// Derivative check for the `p`-th positive eigenvalue `μ_p = λ_p²` of a compact
/// graph when edge `edge` is scaled by `e^{-t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub mu: f64,
    pub analytic: f64,
    pub finite_difference: f64,
    pub monotone: bool,
}

/// Positive eigenvalues `λ` (with multiplicity, ascending) of a graph
/// without leads, at least `count` of them.
pub fn ordered_eigenvalues(g: &MetricGraph, count: usize) -> Result<Vec<SpectralPoint>> {
    if g.num_leads() != 0 {
        return Err(Error::InvalidArgument("ordered eigenvalues need a graph without leads".into()));
    }
    let total: f64 = g.lengths().iter().sum();
    // Weyl: roughly total·λ/π eigenvalues below λ
    let mut top = (std::f64::consts::PI * (count as f64 + 2.0) / total).max(1.0);
    loop {
        let w = Window::new(1e-3, top, -0.25, 0.25)?;
        let pts = find_spectral_points(g, &w, &SearchOptions::default())?;
        if pts.iter().map(|p| p.multiplicity).sum::<usize>() >= count {
            return Ok(pts);
        }
        top *= 1.5;
    }
}

pub fn eigenvalue_derivative_check(g: &MetricGraph, edge: &str, p: usize) -> Result<DerivativeCheck> {
    let k = g.edge_index(edge).ok_or_else(|| Error::UnknownEdge(edge.to_string()))?;
    if p == 0 {
        return Err(Error::InvalidArgument("p counts positive eigenvalues from 1".into()));
    }
    let pts = ordered_eigenvalues(g, p)?;
    let mut seen = 0;
    let sp = pts
        .iter()
        .find(|sp| {
            seen += sp.multiplicity;
            seen >= p
        })
        .expect("enough eigenvalues");
    derivative_check_at(g, sp, k)
}

/// As [`eigenvalue_derivative_check`] for a located eigenvalue `sp` and
/// edge index `k`. The finite difference is the Richardson combination of
/// centered differences at `h = 1e-3` and `5e-4`.
pub fn derivative_check_at(g: &MetricGraph, sp: &SpectralPoint, k: usize) -> Result<DerivativeCheck> {
    if sp.multiplicity != 1 || sp.kind != SpectralKind::EmbeddedEigenvalue {
        return Err(Error::NotSimple(sp.multiplicity));
    }
    let edge = &g.edges().get(k).ok_or_else(|| Error::UnknownEdge(k.to_string()))?.id;
    let lambda = sp.lambda.re;
    let mu = lambda * lambda;
    let u = eigenfunction(g, sp)?;
    let (b, a) = u.cos_sin(k);
    let analytic = mu * g.edges()[k].length * (a.re * a.re + b.re * b.re);

    let family = PerturbationFamily::from_entries(g, PerturbationMode::LogScale, &[(edge, &[0.0, 1.0])])?;
    let mu_at = |t: f64| -> Result<f64> {
        let (z, _) = polish_at(g, &family, t, sp.lambda, 1e-13)?
            .ok_or_else(|| Error::LostTrack { t, reason: "Newton did not converge".into() })?;
        Ok((z * z).re)
    };
    let centered = |h: f64| -> Result<f64> { Ok((mu_at(h)? - mu_at(-h)?) / (2.0 * h)) };
    let (d1, d2) = (centered(1e-3)?, centered(5e-4)?);
    let finite_difference = (4.0 * d2 - d1) / 3.0;
    Ok(DerivativeCheck { mu, analytic, finite_difference, monotone: analytic >= -1e-9 && finite_difference >= -1e-9 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::PI;

    fn seed_pi(g: &MetricGraph) -> SpectralPoint {
        let w = Window::around(Complex64::new(PI, 0.0), 0.05).unwrap();
        find_spectral_points(g, &w, &SearchOptions::default()).unwrap().remove(0)
    }

    #[test]
    fn identity_family_is_constant() {
        let g = fixtures::fig2();
        let sp = seed_pi(&g);
        let traj = track(&g, &PerturbationFamily::identity(&g), &sp, &uniform_grid(0.1, 5, false)).unwrap();
        assert!(traj.is_complete());
        assert!(traj.lambda.iter().all(|z| (z - sp.lambda).norm() < 1e-12));
    }

    #[test]
    fn uniform_shrink_matches_exact_scaling() {
        let g = fixtures::fig2();
        let sp = seed_pi(&g);
        let p = fixtures::fig2_family(&g, 'a');
        let traj = track(&g, &p, &sp, &uniform_grid(0.2, 20, false)).unwrap();
        traj.require_complete().unwrap();
        for (t, z) in traj.t.iter().zip(&traj.lambda) {
            assert!((z - PI / (1.0 - t)).norm() < 1e-9, "t={t}: {z}");
        }
    }

    #[test]
    fn grids() {
        assert_eq!(uniform_grid(1.0, 2, true), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(stencil_grid(&[1e-3]), vec![-1e-2, -5e-3, -1e-3, 0.0, 1e-3, 5e-3, 1e-2]);
        let quad = |t: f64| Some(3.0 * t * t - t + 2.0);
        assert!((richardson_second_derivative(quad).unwrap() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn neumann_interval_derivative() {
        let g = fixtures::interval(1.0);
        for p in 1..=3 {
            let c = eigenvalue_derivative_check(&g, "e1", p).unwrap();
            assert!((c.mu - (p as f64 * PI).powi(2)).abs() < 1e-8);
            assert!((c.analytic - 2.0 * c.mu).abs() < 1e-8 * c.mu);
            assert!((c.finite_difference - c.analytic).abs() < 1e-6 * c.analytic);
        }
    }
}
