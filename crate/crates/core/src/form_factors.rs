//! p-functions, the K-transform, n-particle form factors and their products.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, QuadConfig};
use crate::scattering::RapidityLayout;
use crate::special_fn::{two_body, CouplingParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest particle number the 2^n-term K-transform accepts.
pub const MAX_PARTICLES: usize = 12;
/// Particle number from which the ℓ-sum is split across threads.
const PARALLEL_FROM: usize = 9;

/// User supplied p-function: (β_n, ℓ_n) ↦ p_n(β_n | ℓ_n).
pub type PClosure = Arc<dyn Fn(&[Complex64], &[u8]) -> Complex64 + Send + Sync>;

/// The function entering the K-transform.
#[derive(Clone)]
pub enum PFunction {
    /// p_n(β|ℓ) = κⁿ (Σ_p e^{β_p})^s Σ_j a_j Q^j with Q = Σ_p (−1)^{ℓ_p}.
    ///
    /// The spin factor scales by e^{sθ} under a uniform shift for every n, and
    /// vanishes at n = 0 when s ≠ 0.
    ///
    /// The field is κ = c, s = 0, a = (0, 2πib/g). Other members serve as
    /// synthetic operators of arbitrary spin.
    Polynomial { kappa: Complex64, coeffs: Vec<Complex64> },
    Custom(PClosure),
}

impl fmt::Debug for PFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PFunction::Polynomial { kappa, coeffs } => {
                f.debug_struct("Polynomial").field("kappa", kappa).field("coeffs", coeffs).finish()
            }
            PFunction::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A local operator: its p-function together with spin and growth index.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub label: String,
    pub adjoint_label: String,
    pub spin: f64,
    pub growth: f64,
    pub p: PFunction,
}

/// ∫₀^{2πb} t/sin t dt.
pub fn field_integral(b: f64) -> Result<f64> {
    if !(b > 0.0 && b < 0.5) {
        return Err(Error::InvalidParam(format!("field constant needs 0 < b < 1/2, got {b}")));
    }
    let cfg = QuadConfig { abs_tol: 1e-15, rel_tol: 1e-15, initial_panels: 2, ..Default::default() };
    let est = integrate_1d(|t| Ok(Complex64::new(if t == 0.0 { 1.0 } else { t / t.sin() }, 0.0)), 0.0, 2.0 * PI * b, &cfg)?;
    Ok(est.value.re)
}

/// c = (−i/√(2 sin πb))·exp{(1/2π)∫₀^{2πb} t/sin t dt}.
pub fn field_constant(params: &CouplingParams) -> Result<Complex64> {
    let integral = field_integral(params.b)?;
    Ok(-I / (2.0 * (PI * params.b).sin()).sqrt() * (integral / (2.0 * PI)).exp())
}

impl OperatorSpec {
    /// The self-adjoint field operator, spin 0 and growth 0.
    pub fn field(params: &CouplingParams) -> Result<Self> {
        let c = field_constant(params)?;
        let a1 = 2.0 * PI * I * params.b / params.g;
        Ok(Self {
            label: "field".into(),
            adjoint_label: "field".into(),
            spin: 0.0,
            growth: 0.0,
            p: PFunction::Polynomial { kappa: c, coeffs: vec![Complex64::new(0.0, 0.0), a1] },
        })
    }

    /// p(β|ℓ) = κⁿ (Σe^β)^s Σ_j a_j Q^j. Periodic in each β only for integer spin.
    pub fn synthetic(label: &str, spin: f64, kappa: Complex64, coeffs: Vec<Complex64>, growth: f64) -> Self {
        Self {
            label: label.into(),
            adjoint_label: format!("{label}†"),
            spin,
            growth,
            p: PFunction::Polynomial { kappa, coeffs },
        }
    }

    pub fn custom(label: &str, spin: f64, growth: f64, p: PClosure) -> Self {
        Self { label: label.into(), adjoint_label: format!("{label}†"), spin, growth, p: PFunction::Custom(p) }
    }

    /// The operator whose form factors are conj 𝓕^α(←β̄ + iπē).
    ///
    /// Closed form for the polynomial family: κ† = conj κ and a† = e^{−iπs}·conj a.
    /// Exact for integer spin.
    pub fn adjoint(&self) -> Result<Self> {
        match &self.p {
            PFunction::Polynomial { kappa, coeffs } => {
                let kappa_adj = kappa.conj();
                let phase = (-I * PI * self.spin).exp();
                let coeffs_adj: Vec<Complex64> = coeffs.iter().map(|a| phase * a.conj()).collect();
                let self_adjoint = (kappa_adj - kappa).norm() <= 1e-14 * kappa.norm()
                    && coeffs_adj.iter().zip(coeffs).all(|(x, y)| (x - y).norm() <= 1e-14 * y.norm().max(1e-300));
                let label = if self_adjoint { self.label.clone() } else { self.adjoint_label.clone() };
                let adjoint_label = self.label.clone();
                Ok(Self {
                    label,
                    adjoint_label,
                    spin: self.spin,
                    growth: self.growth,
                    p: PFunction::Polynomial { kappa: kappa_adj, coeffs: coeffs_adj },
                })
            }
            PFunction::Custom(_) => Err(Error::InvalidParam(format!(
                "operator {} has no closed-form adjoint; use adjoint_form_factor",
                self.label
            ))),
        }
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.label == self.adjoint_label
    }

    /// p_n(β_n | ℓ_n).
    pub fn p_eval(&self, beta: &[Complex64], ell: &[u8]) -> Complex64 {
        match &self.p {
            PFunction::Polynomial { kappa, coeffs } => {
                let q: f64 = ell.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).sum();
                polynomial_prefactor(*kappa, self.spin, beta) * horner(coeffs, q)
            }
            PFunction::Custom(f) => f(beta, ell),
        }
    }

    /// p_0, the vacuum expectation value.
    pub fn p0(&self) -> Complex64 {
        self.p_eval(&[], &[])
    }
}

fn polynomial_prefactor(kappa: Complex64, spin: f64, beta: &[Complex64]) -> Complex64 {
    let mut out = kappa.powu(beta.len() as u32);
    if spin != 0.0 {
        if beta.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let sum: Complex64 = beta.iter().map(|b| b.exp()).sum();
        out *= if spin.fract() == 0.0 { sum.powi(spin as i32) } else { sum.powf(spin) };
    }
    out
}

fn horner(coeffs: &[Complex64], q: f64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * q + a)
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_PARTICLES {
        Err(Error::TooManyParticles { n, cap: MAX_PARTICLES })
    } else {
        Ok(())
    }
}

/// Sums `term(ℓ)` over ℓ ∈ {0,1}ⁿ in a fixed order, chunked across threads for large n.
fn ell_sum<T>(n: usize, term: T) -> Result<Complex64>
where
    T: Fn(&[u8]) -> Result<Complex64> + Sync,
{
    let total = 1usize << n;
    let run = |range: std::ops::Range<usize>| -> Result<Complex64> {
        let mut ell = vec![0u8; n];
        let mut acc = Complex64::new(0.0, 0.0);
        for mask in range {
            for (j, l) in ell.iter_mut().enumerate() {
                *l = ((mask >> j) & 1) as u8;
            }
            acc += term(&ell)?;
        }
        Ok(acc)
    };
    if n < PARALLEL_FROM {
        return run(0..total);
    }
    let chunk = 1usize << (n - 4);
    let parts: Vec<Complex64> = (0..16).into_par_iter().map(|c| run(c * chunk..(c + 1) * chunk)).collect::<Result<_>>()?;
    Ok(parts.into_iter().sum())
}

fn ell_sign(ell: &[u8]) -> f64 {
    if ell.iter().filter(|&&l| l == 1).count() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// K_n[p](β) = Σ_ℓ (−1)^{Σℓ} ∏_{k<s}{1 − i(ℓ_k − ℓ_s) sin 2πb / sinh β_ks} p(β|ℓ).
pub fn k_transform(spec: &OperatorSpec, beta: &[Complex64], params: &CouplingParams) -> Result<Complex64> {
    let n = beta.len();
    check_size(n)?;
    let s2 = params.sin_2pi_b();
    let mut coupling = vec![Complex64::new(0.0, 0.0); n * n];
    let mut coincident = vec![false; n * n];
    for k in 0..n {
        for s in k + 1..n {
            let sh = (beta[k] - beta[s]).sinh();
            if sh.norm() < 1e-14 {
                coincident[k * n + s] = true;
            } else {
                coupling[k * n + s] = I * s2 / sh;
            }
        }
    }
    ell_sum(n, |ell| {
        let mut term = Complex64::new(ell_sign(ell), 0.0);
        for k in 0..n {
            for s in k + 1..n {
                let d = ell[k] as i32 - ell[s] as i32;
                if d != 0 {
                    if coincident[k * n + s] {
                        return Err(Error::CoincidentRapidities { i: k, j: s });
                    }
                    term *= Complex64::new(1.0, 0.0) - coupling[k * n + s] * d as f64;
                }
            }
        }
        Ok(term * spec.p_eval(beta, ell))
    })
}

/// 𝓕^(α)(β_n) = ∏_{a<b} F(β_ab) · K_n[p](β_n).
///
/// F is folded into each K bracket as F − i(ℓ_k − ℓ_s) sin 2πb·F/sinh, which stays
/// finite where rapidities coincide, since F(0) = 0 cancels the sinh pole.
pub fn form_factor(spec: &OperatorSpec, beta: &[Complex64], params: &CouplingParams) -> Result<Complex64> {
    let n = beta.len();
    check_size(n)?;
    if n == 0 {
        return Ok(spec.p0());
    }
    let s2 = params.sin_2pi_b();
    let mut f = vec![Complex64::new(0.0, 0.0); n * n];
    let mut h = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        for s in k + 1..n {
            let t = two_body(beta[k] - beta[s], params)?;
            f[k * n + s] = t.f;
            h[k * n + s] = I * s2 * t.f_over_sinh;
        }
    }
    let beta_at_pole = |k: usize, s: usize| Error::Pole { function: "form_factor", at: beta[k] - beta[s] };
    ell_sum(n, |ell| {
        let mut term = Complex64::new(ell_sign(ell), 0.0);
        for k in 0..n {
            for s in k + 1..n {
                let d = ell[k] as i32 - ell[s] as i32;
                let idx = k * n + s;
                if d == 0 {
                    term *= f[idx];
                } else {
                    if !h[idx].is_finite() {
                        return Err(beta_at_pole(k, s));
                    }
                    term *= f[idx] - h[idx] * d as f64;
                }
            }
        }
        Ok(term * spec.p_eval(beta, ell))
    })
}

/// conj 𝓕^(α)(←β̄ + iπē), the form factor of the adjoint operator.
pub fn adjoint_form_factor(spec: &OperatorSpec, beta: &[Complex64], params: &CouplingParams) -> Result<Complex64> {
    let args: Vec<Complex64> = beta.iter().rev().map(|b| b.conj() + I * PI).collect();
    Ok(form_factor(spec, &args, params)?.conj())
}

/// Per-block weights of the imaginary contour shifts used by the t-representation.
///
/// Every shift is the weight times the common regulator ε, so the ε → 0 limit
/// removes all of them at once. `eta1` moves backward blocks, `eta2` forward
/// blocks, `delta_s` and `delta_r` move the arguments of 𝒮^(t) and R.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationParams {
    pub eta1: Vec<f64>,
    pub eta2: Vec<f64>,
    pub delta_s: Vec<f64>,
    pub delta_r: Vec<f64>,
}

impl DeformationParams {
    /// η₁ = ε, η₂ = δ = 0: the undeformed representation.
    pub fn undeformed(k: usize) -> Self {
        let nb = crate::scattering::block_count(k);
        Self { eta1: vec![1.0; nb], eta2: vec![0.0; nb], delta_s: vec![0.0; nb], delta_r: vec![0.0; nb] }
    }

    /// Checks η₁^(cb) + η₂^(dc) > 0 for all b < c < d.
    pub fn validate(&self, k: usize) -> Result<()> {
        use crate::scattering::block_index;
        let nb = crate::scattering::block_count(k);
        for v in [&self.eta1, &self.eta2, &self.delta_s, &self.delta_r] {
            if v.len() != nb {
                return Err(Error::InvalidParam(format!("deformation needs {nb} block weights")));
            }
        }
        if self.eta1.iter().chain(&self.eta2).any(|&x| x < 0.0) {
            return Err(Error::InvalidParam("η shifts must be non-negative".into()));
        }
        for b in 1..=k {
            for c in b + 1..=k {
                for d in c + 1..=k {
                    if self.eta1[block_index(c, b)] + self.eta2[block_index(d, c)] <= 0.0 {
                        return Err(Error::InvalidParam(format!("η₁^({c}{b}) + η₂^({d}{c}) must be positive")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Arguments of operator p in 𝓕_{α;ε}: backward blocks reversed and lifted by i(π − ε_p), then forward blocks.
pub fn ff_arguments(gamma: &RapidityLayout, p: usize, eps: f64) -> Vec<Complex64> {
    let k = gamma.k();
    let mut args = Vec::new();
    let lift = I * (PI - eps);
    for a in (1..p).rev() {
        args.extend(gamma.block(p, a).iter().rev().map(|&x| x + lift));
    }
    for b in (p + 1..=k).rev() {
        args.extend_from_slice(gamma.block(b, p));
    }
    args
}

/// 𝓕_{α;ε}(γ) = ∏_p 𝓕^(α_p)(←γ^(p,p−1) ∪ ... ∪ ←γ^(p1) + iπē_{ε_p}, γ^(kp) ∪ ... ∪ γ^(p+1,p)).
pub fn ff_product_eps(specs: &[OperatorSpec], gamma: &RapidityLayout, eps: &[f64], params: &CouplingParams) -> Result<Complex64> {
    let k = gamma.k();
    if specs.len() != k || eps.len() != k {
        return Err(Error::InvalidParam(format!("need {k} operators and regulators")));
    }
    let mut acc = Complex64::new(1.0, 0.0);
    for p in 1..=k {
        acc *= form_factor(&specs[p - 1], &ff_arguments(gamma, p, eps[p - 1]), params)?;
        if acc == Complex64::new(0.0, 0.0) {
            break;
        }
    }
    Ok(acc)
}

/// Arguments of operator p in the t-representation with contour weights scaled by ε.
pub fn ff_arguments_t(gamma: &RapidityLayout, p: usize, t: usize, eps: f64, deform: &DeformationParams) -> Vec<Complex64> {
    use crate::scattering::block_index;
    let k = gamma.k();
    let mut args = Vec::new();
    if p != t {
        for a in (1..p).rev() {
            let lift = I * (PI - deform.eta1[block_index(p, a)] * eps);
            args.extend(gamma.block(p, a).iter().rev().map(|&x| x + lift));
        }
        for b in (p + 1..=k).rev() {
            let lift = I * deform.eta2[block_index(b, p)] * eps;
            args.extend(gamma.block(b, p).iter().map(|&x| x + lift));
        }
    } else {
        for b in (t + 1..=k).rev() {
            let lift = -I * deform.eta2[block_index(b, t)] * eps;
            args.extend(gamma.block(b, t).iter().map(|&x| x + lift));
        }
        for a in (1..t).rev() {
            let lift = -I * (PI - deform.eta1[block_index(t, a)] * eps);
            args.extend(gamma.block(t, a).iter().rev().map(|&x| x + lift));
        }
    }
    args
}

/// 𝓕^(t)_{α;ε}(γ): operator t takes its forward blocks first and its backward blocks lowered by iπ.
pub fn ff_product_t(
    specs: &[OperatorSpec],
    gamma: &RapidityLayout,
    t: usize,
    eps: f64,
    deform: &DeformationParams,
    params: &CouplingParams,
) -> Result<Complex64> {
    let k = gamma.k();
    if specs.len() != k {
        return Err(Error::InvalidParam(format!("need {k} operators")));
    }
    if t == 0 || t > k {
        return Err(Error::IndexOutOfRange { index: t, max: k });
    }
    let mut acc = Complex64::new(1.0, 0.0);
    for p in 1..=k {
        acc *= form_factor(&specs[p - 1], &ff_arguments_t(gamma, p, t, eps, deform), params)?;
        if acc == Complex64::new(0.0, 0.0) {
            break;
        }
    }
    Ok(acc)
}

/// Result of fitting c₋₁/u + c₀ + c₁u + c₂u² around a candidate pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleFit {
    pub residue: Complex64,
    pub constant: Complex64,
    /// Relative least-squares residual.
    pub residual: f64,
}

/// Radii at which the Laurent model is sampled.
pub const PROBE_RADII: [f64; 3] = [1e-2, 1e-3, 1e-4];
const PROBE_PHASES: [f64; 3] = [0.3, 2.1, 4.4];
/// Relative residual under which the pole is accepted as simple.
pub const SIMPLE_POLE_RESIDUAL: f64 = 1e-3;

/// Fits f(pole + u) to a simple-pole Laurent model on a ring of sample points.
pub fn probe_function<F>(f: F, pole: Complex64) -> Result<PoleFit>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let mut us = Vec::new();
    for &r in &PROBE_RADII {
        for &phi in &PROBE_PHASES {
            us.push(Complex64::from_polar(r, phi));
        }
    }
    let values: Vec<Complex64> = us.iter().map(|&u| f(pole + u)).collect::<Result<_>>()?;
    let rows = us.len();
    // Rows are scaled by |u| so every sample carries comparable weight.
    let a = DMatrix::from_fn(rows, 4, |i, j| {
        let u = us[i];
        let w = u.norm();
        w * match j {
            0 => u.inv(),
            1 => Complex64::new(1.0, 0.0),
            2 => u,
            _ => u * u,
        }
    });
    let y = DVector::from_fn(rows, |i, _| values[i] * us[i].norm());
    let svd = a.clone().svd(true, true);
    let c = svd
        .solve(&y, 1e-300)
        .map_err(|e| Error::NonConvergentFit(format!("least squares failed: {e}")))?;
    let resid = (&a * &c - &y).norm() / y.norm().max(1e-300);
    if !(resid < SIMPLE_POLE_RESIDUAL) {
        return Err(Error::NonConvergentFit(format!("relative residual {resid:.3e} of the simple-pole model")));
    }
    Ok(PoleFit { residue: c[0], constant: c[1], residual: resid })
}

/// Probes 𝓕 around β_a = β_b + iπ, varying β_a only (0-based pair indices).
pub fn pole_probe(spec: &OperatorSpec, beta_base: &[Complex64], which_pair: (usize, usize), params: &CouplingParams) -> Result<PoleFit> {
    let (a, b) = which_pair;
    let n = beta_base.len();
    if a >= n || b >= n || a == b {
        return Err(Error::IndexOutOfRange { index: a.max(b), max: n.saturating_sub(1) });
    }
    let pole = beta_base[b] + I * PI;
    probe_function(
        |x| {
            let mut beta = beta_base.to_vec();
            beta[a] = x;
            form_factor(spec, &beta, params)
        },
        pole,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> CouplingParams {
        CouplingParams::from_b(0.25, 1.0).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn field_vacuum_value_vanishes() {
        let f = OperatorSpec::field(&params()).unwrap();
        assert_eq!(form_factor(&f, &[], &params()).unwrap(), c(0.0));
    }

    #[test]
    fn one_particle_k_transform() {
        let p = params();
        let f = OperatorSpec::field(&p).unwrap();
        let k1 = k_transform(&f, &[c(0.7)], &p).unwrap();
        let expect = f.p_eval(&[c(0.7)], &[0]) - f.p_eval(&[c(0.7)], &[1]);
        assert!((k1 - expect).norm() < 1e-15);
        let cst = field_constant(&p).unwrap();
        let closed = 2.0 * cst * 2.0 * PI * I * p.b / p.g;
        assert!((k1 - closed).norm() < 1e-14);
    }

    #[test]
    fn small_b_integral() {
        assert!(field_integral(1e-4).unwrap() < 1e-3);
        assert!(field_integral(0.5).is_err());
    }

    #[test]
    fn coincident_rapidities_are_flagged_in_k() {
        let p = params();
        let f = OperatorSpec::field(&p).unwrap();
        let r = k_transform(&f, &[c(0.2), c(0.2), c(0.5)], &p);
        assert!(matches!(r, Err(Error::CoincidentRapidities { i: 0, j: 1 })));
        // The folded form factor stays finite.
        assert!(form_factor(&f, &[c(0.2), c(0.2), c(0.5)], &p).unwrap().is_finite());
    }

    #[test]
    fn particle_cap() {
        let p = params();
        let f = OperatorSpec::field(&p).unwrap();
        let beta: Vec<Complex64> = (0..13).map(|i| c(i as f64 * 0.1)).collect();
        assert!(matches!(form_factor(&f, &beta, &p), Err(Error::TooManyParticles { .. })));
    }

    #[test]
    fn parallel_ell_sum_matches_serial() {
        let f = OperatorSpec::synthetic("x", 0.0, c(0.9), vec![c(0.3), c(-0.2), Complex64::new(0.1, 0.05)], 0.0);
        let beta: Vec<Complex64> = (0..9).map(|i| c(0.37 * i as f64 - 1.3)).collect();
        let direct = ell_sum(9, |ell| Ok(c(ell_sign(ell)) * f.p_eval(&beta, ell))).unwrap();
        let serial: Complex64 = (0..512).map(|mask: usize| {
            let ell: Vec<u8> = (0..9).map(|j| ((mask >> j) & 1) as u8).collect();
            c(ell_sign(&ell)) * f.p_eval(&beta, &ell)
        }).sum();
        assert!((direct - serial).norm() < 1e-14);
    }

    #[test]
    fn synthetic_spin_scaling_every_n() {
        let p = params();
        let a = OperatorSpec::synthetic("A", 1.0, Complex64::new(0.7, 0.2), vec![c(0.5), Complex64::new(0.0, 0.3), c(0.2), c(0.1)], 0.0);
        assert_eq!(a.p0(), c(0.0));
        let theta = 0.37;
        for n in 1..=4 {
            let beta: Vec<Complex64> = (0..n).map(|i| Complex64::new(0.4 * i as f64 - 0.5, 0.1)).collect();
            let moved: Vec<Complex64> = beta.iter().map(|b| b + theta).collect();
            let f0 = form_factor(&a, &beta, &p).unwrap();
            let f1 = form_factor(&a, &moved, &p).unwrap();
            assert!((f1 - theta.exp() * f0).norm() <= 1e-12 * f1.norm().max(1e-300), "n = {n}");
        }
    }

    #[test]
    fn closed_form_adjoint_matches_definition() {
        let p = params();
        for spin in [0.0, 1.0, 2.0] {
            let a = OperatorSpec::synthetic("A", spin, Complex64::new(0.7, 0.2), vec![c(0.5), Complex64::new(0.1, 0.3), c(0.2), c(0.1)], 0.0);
            let adj = a.adjoint().unwrap();
            for n in 1..=4 {
                let beta: Vec<Complex64> = (0..n).map(|i| Complex64::new(0.45 * i as f64 - 0.6, 0.05 * i as f64)).collect();
                let direct = form_factor(&adj, &beta, &p).unwrap();
                let defined = adjoint_form_factor(&a, &beta, &p).unwrap();
                assert!((direct - defined).norm() <= 1e-11 * defined.norm().max(1e-12), "s = {spin}, n = {n}: {direct} vs {defined}");
            }
        }
    }

    #[test]
    fn field_is_self_adjoint() {
        let f = OperatorSpec::field(&params()).unwrap();
        let adj = f.adjoint().unwrap();
        assert!(f.is_self_adjoint());
        assert_eq!(adj.label, "field");
    }

    #[test]
    fn eps_arguments_k3() {
        let g = RapidityLayout::from_real_blocks(3, &[vec![0.1], vec![0.2], vec![0.3, 0.4]]).unwrap();
        let lift = I * (PI - 0.1);
        // operator 1: forward blocks γ^(31) ∪ γ^(21)
        assert_eq!(ff_arguments(&g, 1, 0.1), vec![c(0.2), c(0.1)]);
        // operator 2: ←γ^(21) + lift, then γ^(32)
        assert_eq!(ff_arguments(&g, 2, 0.1), vec![c(0.1) + lift, c(0.3), c(0.4)]);
        // operator 3: ←γ^(32) ∪ ←γ^(31) + lift
        assert_eq!(ff_arguments(&g, 3, 0.1), vec![c(0.4) + lift, c(0.3) + lift, c(0.2) + lift]);
    }

    #[test]
    fn t_arguments_reduce_for_other_operators() {
        let g = RapidityLayout::from_real_blocks(3, &[vec![0.1], vec![0.2], vec![0.3, 0.4]]).unwrap();
        let d = DeformationParams::undeformed(3);
        assert_eq!(ff_arguments_t(&g, 1, 2, 0.1, &d), ff_arguments(&g, 1, 0.1));
        let t_args = ff_arguments_t(&g, 2, 2, 0.1, &d);
        assert_eq!(t_args, vec![c(0.3), c(0.4), c(0.1) - I * (PI - 0.1)]);
        assert!(d.validate(3).is_ok());
        let bad = DeformationParams { eta1: vec![0.0; 3], ..d };
        assert!(bad.validate(3).is_err());
    }

    #[test]
    fn double_pole_is_rejected() {
        let r = probe_function(|x| Ok((x - c(1.0)).powi(-2)), c(1.0));
        assert!(matches!(r, Err(Error::NonConvergentFit(_))));
        let fit = probe_function(|x| Ok(Complex64::new(0.0, 2.0) / (x - c(1.0)) + x), c(1.0)).unwrap();
        assert!((fit.residue - Complex64::new(0.0, 2.0)).norm() < 1e-9);
    }
}
