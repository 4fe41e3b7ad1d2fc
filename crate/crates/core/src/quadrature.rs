//! Adaptive Gauss–Kronrod cubature, randomized quasi-Monte Carlo and Richardson extrapolation.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Maximal sample count of one scrambled Sobol sequence.
pub const SOBOL_MAX_POINTS: usize = 1 << 16;

/// Settings shared by all integrators.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Hard cap on integrand evaluations for the adaptive rule.
    pub max_evals: usize,
    /// Panels the adaptive rule starts from on each axis.
    pub initial_panels: usize,
    /// Total quasi-Monte Carlo points, split across the randomizations.
    pub qmc_budget: usize,
    pub qmc_randomizations: usize,
    pub seed: u64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-7,
            max_evals: 20_000_000,
            initial_panels: 8,
            qmc_budget: 1 << 20,
            qmc_randomizations: 16,
            seed: 0x5eed,
        }
    }
}

/// An integral estimate with its error bound and cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub evals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    /// Error of this level's rule.
    error: f64,
    /// Error carried up from nested integrals; refinement here cannot reduce it.
    inner: f64,
}

struct Counter<'a> {
    used: &'a AtomicUsize,
    budget: usize,
}

impl Counter<'_> {
    fn take(&self, n: usize) -> Result<()> {
        let before = self.used.fetch_add(n, Ordering::Relaxed);
        if before + n > self.budget {
            Err(Error::Budget { budget: self.budget })
        } else {
            Ok(())
        }
    }
}

/// One G7–K15 panel for an integrand that itself returns (value, error).
fn gk15<G>(g: &G, a: f64, b: f64, parallel: bool) -> Result<Panel>
where
    G: Fn(f64) -> Result<(Complex64, f64)> + Sync,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let nodes: Vec<f64> = (0..15)
        .map(|i| if i < 7 { c - h * XGK[i] } else if i == 7 { c } else { c + h * XGK[14 - i] })
        .collect();
    let vals: Vec<(Complex64, f64)> = if parallel {
        nodes.par_iter().map(|&x| g(x)).collect::<Result<_>>()?
    } else {
        nodes.iter().map(|&x| g(x)).collect::<Result<_>>()?
    };
    let mut kron = Complex64::new(0.0, 0.0);
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut inner = 0.0;
    let mut absolute = 0.0;
    let weight = |i: usize| WGK[if i <= 7 { i } else { 14 - i }];
    for (i, (v, e)) in vals.iter().enumerate() {
        let j = if i <= 7 { i } else { 14 - i };
        kron += v * WGK[j];
        inner += e * WGK[j];
        absolute += v.norm() * WGK[j];
        if j % 2 == 1 {
            gauss += v * WG[j / 2];
        }
    }
    // QUADPACK error heuristic applied to the complex values.
    let half_mean = kron * 0.5;
    let spread: f64 = vals.iter().enumerate().map(|(i, (v, _))| weight(i) * (v - half_mean).norm()).sum::<f64>() * h.abs();
    let mut err = ((kron - gauss) * h).norm();
    if spread > 0.0 && err > 0.0 {
        err = spread * (200.0 * err / spread).powf(1.5).min(1.0);
    }
    err = err.max(50.0 * f64::EPSILON * absolute * h.abs());
    Ok(Panel { a, b, value: kron * h, error: err, inner: inner * h.abs() })
}

#[allow(clippy::too_many_arguments)]
fn adapt<G>(g: &G, a: f64, b: f64, abs_tol: f64, rel_tol: f64, panels0: usize, parallel: bool, max_panels: usize) -> Result<Estimate>
where
    G: Fn(f64) -> Result<(Complex64, f64)> + Sync,
{
    let n0 = panels0.max(1);
    let w = (b - a) / n0 as f64;
    let mut panels: Vec<Panel> = (0..n0)
        .map(|i| gk15(g, a + w * i as f64, if i + 1 == n0 { b } else { a + w * (i + 1) as f64 }, parallel))
        .collect::<Result<_>>()?;
    loop {
        let value: Complex64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let inner: f64 = panels.iter().map(|p| p.inner).sum();
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = &panels[worst];
        let tiny = (p.b - p.a).abs() < 1e-12 * (1.0 + p.a.abs());
        if error <= abs_tol.max(rel_tol * value.norm()) || tiny || panels.len() >= max_panels {
            return Ok(Estimate { value, error: error + inner, evals: 15 * (panels.len() * 2 - n0) });
        }
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gk15(g, p.a, mid, parallel)?);
        panels.push(gk15(g, mid, p.b, parallel)?);
    }
}

/// Adaptive Gauss–Kronrod integral of a complex function over [a, b].
pub fn integrate_1d<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<Estimate>
where
    F: Fn(f64) -> Result<Complex64> + Sync,
{
    integrate_box(|x: &[f64]| f(x[0]), &[(a, b)], cfg)
}

/// Nested adaptive Gauss–Kronrod over a box. The outermost axis evaluates its
/// nodes in parallel; results are collected in node order so the sum is reproducible.
pub fn integrate_box<F>(f: F, bounds: &[(f64, f64)], cfg: &QuadConfig) -> Result<Estimate>
where
    F: Fn(&[f64]) -> Result<Complex64> + Sync,
{
    if bounds.is_empty() {
        return Ok(Estimate { value: f(&[])?, error: 0.0, evals: 1 });
    }
    let used = AtomicUsize::new(0);
    let counter = Counter { used: &used, budget: cfg.max_evals };
    let mut est = nested(&f, bounds, &[], cfg, cfg.abs_tol, &counter, true)?;
    est.evals = used.load(Ordering::Relaxed);
    Ok(est)
}

fn nested<F>(f: &F, bounds: &[(f64, f64)], prefix: &[f64], cfg: &QuadConfig, abs_tol: f64, counter: &Counter<'_>, parallel: bool) -> Result<Estimate>
where
    F: Fn(&[f64]) -> Result<Complex64> + Sync,
{
    let (a, b) = bounds[0];
    let width = (b - a).abs().max(1e-300);
    let max_panels = 4000;
    if bounds.len() == 1 {
        let base = prefix.to_vec();
        let g = |x: f64| -> Result<(Complex64, f64)> {
            counter.take(1)?;
            let mut point = base.clone();
            point.push(x);
            Ok((f(&point)?, 0.0))
        };
        return adapt(&g, a, b, abs_tol, cfg.rel_tol, cfg.initial_panels, parallel, max_panels);
    }
    let base = prefix.to_vec();
    let inner_tol = abs_tol / width;
    let g = |x: f64| -> Result<(Complex64, f64)> {
        let mut point = base.clone();
        point.push(x);
        let e = nested(f, &bounds[1..], &point, cfg, inner_tol, counter, false)?;
        Ok((e.value, e.error))
    };
    adapt(&g, a, b, abs_tol, cfg.rel_tol, cfg.initial_panels, parallel, max_panels)
}

/// Randomized quasi-Monte Carlo over ℝ^dim with the logistic map γ = s·ln(u/(1−u)).
///
/// Each randomization is an independently Owen-scrambled Sobol sequence. The
/// estimate is the mean over randomizations and the error their standard error.
pub fn integrate_qmc<F>(f: F, dim: usize, scale: f64, cfg: &QuadConfig) -> Result<Estimate>
where
    F: Fn(&[f64]) -> Result<Complex64> + Sync,
{
    if dim == 0 {
        return Ok(Estimate { value: f(&[])?, error: 0.0, evals: 1 });
    }
    if dim > 256 {
        return Err(Error::InvalidParam(format!("QMC dimension {dim} exceeds 256")));
    }
    let reps = cfg.qmc_randomizations.max(2);
    let per = (cfg.qmc_budget / reps).clamp(1, SOBOL_MAX_POINTS);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<(u32, u64)> = (0..reps).map(|_| (rng.random::<u32>(), rng.random::<u64>())).collect();
    let means: Vec<Complex64> = seeds
        .par_iter()
        .map(|&(scramble, jitter_seed)| {
            let mut jitter = ChaCha8Rng::seed_from_u64(jitter_seed);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut x = vec![0.0; dim];
            for i in 0..per {
                let mut weight = 1.0;
                for (d, xd) in x.iter_mut().enumerate() {
                    let s = sobol_burley::sample(i as u32, d as u32, scramble) as f64;
                    // Sobol points are f32; the jitter restores full resolution inside each cell.
                    let u = (s + jitter.random::<f64>() * f32::EPSILON as f64 * 0.5).clamp(1e-15, 1.0 - 1e-15);
                    *xd = scale * (u / (1.0 - u)).ln();
                    weight *= scale / (u * (1.0 - u));
                }
                acc += f(&x)? * weight;
            }
            Ok(acc / per as f64)
        })
        .collect::<Result<_>>()?;
    let mean: Complex64 = means.iter().sum::<Complex64>() / reps as f64;
    let var: f64 = means.iter().map(|m| (m - mean).norm_sqr()).sum::<f64>() / (reps - 1) as f64;
    Ok(Estimate { value: mean, error: (var / reps as f64).sqrt(), evals: per * reps })
}

/// Linear Richardson extrapolation to ε → 0 for a decreasing schedule.
///
/// Returns the extrapolant from the two smallest ε and, as its error, the change
/// against the extrapolant from the preceding pair. Two-point schedules report
/// the raw difference of the two values.
pub fn richardson(eps: &[f64], values: &[Complex64]) -> Result<(Complex64, f64)> {
    if eps.len() != values.len() || eps.is_empty() {
        return Err(Error::NonConvergentExtrapolation("schedule and values differ in length".into()));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(Error::NonConvergentExtrapolation("schedule must be positive and decreasing".into()));
    }
    let pair = |i: usize| {
        let r = eps[i] / eps[i + 1];
        (values[i + 1] * r - values[i]) / (r - 1.0)
    };
    let value_n = values.len();
    match value_n {
        1 => Ok((values[0], 0.0)),
        2 => Ok((pair(0), (values[1] - values[0]).norm())),
        _ => {
            let last = pair(value_n - 2);
            let prev = pair(value_n - 3);
            let err = (last - prev).norm();
            if !err.is_finite() {
                return Err(Error::NonConvergentExtrapolation("non-finite extrapolant".into()));
            }
            Ok((last, err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_on_line() {
        let cfg = QuadConfig::default();
        let e = integrate_1d(|x| Ok(Complex64::new((-x * x).exp(), 0.0)), -8.0, 8.0, &cfg).unwrap();
        assert!((e.value.re - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        assert!(e.error < 1e-8);
    }

    #[test]
    fn oscillatory_complex_1d() {
        let cfg = QuadConfig::default();
        // ∫_0^π e^{ix} dx = 2i
        let e = integrate_1d(|x| Ok(Complex64::new(0.0, x).exp()), 0.0, std::f64::consts::PI, &cfg).unwrap();
        assert!((e.value - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn nested_box() {
        let cfg = QuadConfig::default();
        let e = integrate_box(|x| Ok(Complex64::new(x[0] * x[1] * x[1], 0.0)), &[(0.0, 1.0), (0.0, 2.0)], &cfg).unwrap();
        assert!((e.value.re - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let cfg = QuadConfig { max_evals: 100, abs_tol: 1e-15, rel_tol: 1e-15, ..Default::default() };
        let r = integrate_1d(|x| Ok(Complex64::new((50.0 * x).sin().abs(), 0.0)), 0.0, 10.0, &cfg);
        assert!(matches!(r, Err(Error::Budget { .. })));
    }

    #[test]
    fn qmc_gaussian_4d() {
        let cfg = QuadConfig { qmc_budget: 1 << 16, ..Default::default() };
        let e = integrate_qmc(|x| Ok(Complex64::new((-x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)), 4, 0.5, &cfg).unwrap();
        let exact = std::f64::consts::PI.powi(2);
        assert!((e.value.re - exact).abs() < 5.0 * e.error + 1e-6, "{:?}", e);
        assert!(e.error < 1e-2);
    }

    #[test]
    fn qmc_is_reproducible() {
        let cfg = QuadConfig { qmc_budget: 1 << 12, ..Default::default() };
        let f = |x: &[f64]| Ok(Complex64::new((-x[0] * x[0] - x[1].abs()).exp(), x[2].cos()* (-x[2]*x[2]).exp()));
        let a = integrate_qmc(f, 3, 1.0, &cfg).unwrap();
        let b = integrate_qmc(f, 3, 1.0, &cfg).unwrap();
        assert_eq!(a.value.re.to_bits(), b.value.re.to_bits());
        assert_eq!(a.value.im.to_bits(), b.value.im.to_bits());
    }

    #[test]
    fn richardson_removes_linear_term() {
        let eps = [0.4, 0.2, 0.1];
        let vals: Vec<Complex64> = eps.iter().map(|e| Complex64::new(1.0 + 3.0 * e, -e)).collect();
        let (v, err) = richardson(&eps, &vals).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(err < 1e-14);
        assert!(richardson(&[0.1, 0.2], &vals[..2]).is_err());
    }
}
