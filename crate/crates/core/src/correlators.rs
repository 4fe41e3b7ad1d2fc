//! Regularized multi-rapidity integrals I^(n), their t-representations, the reduced
//! J-form, truncated correlators W^(r) and partial sums.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form_factors::{ff_product_eps, ff_product_t, form_factor, DeformationParams, OperatorSpec};
use crate::minkowski::{momentum_transform, reduced_momenta, reduced_transform, GaussianForm, ProductTestFunction, TwoVector};
use crate::quadrature::{integrate_box, integrate_qmc, richardson, Estimate, QuadConfig};
use crate::scattering::{block_count, block_index, s_global, s_t, RapidityLayout};
use crate::special_fn::CouplingParams;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Cap on the size of any enumerated truncation set.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

/// Particle numbers n_ba per block, stored in block order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    pub k: usize,
    pub n: Vec<usize>,
}

impl MultiIndex {
    pub fn new(k: usize, n: Vec<usize>) -> Result<Self> {
        if n.len() != block_count(k) {
            return Err(Error::InvalidParam(format!("k = {k} needs {} block sizes, got {}", block_count(k), n.len())));
        }
        Ok(Self { k, n })
    }

    pub fn zeros(k: usize) -> Self {
        Self { k, n: vec![0; block_count(k)] }
    }

    pub fn get(&self, b: usize, a: usize) -> usize {
        self.n[block_index(b, a)]
    }

    /// |n| = Σ n_ba.
    pub fn total(&self) -> usize {
        self.n.iter().sum()
    }

    /// n! = ∏ n_ba!.
    pub fn factorial(&self) -> f64 {
        self.n.iter().map(|&x| (1..=x).map(|i| i as f64).product::<f64>()).product()
    }

    /// Σ_{u>p≥s} n_us: particles crossing the cut between operators p and p+1.
    pub fn cut(&self, p: usize) -> usize {
        let mut acc = 0;
        for u in p + 1..=self.k {
            for s in 1..=p {
                acc += self.get(u, s);
            }
        }
        acc
    }

    /// Number of rapidities handed to each operator.
    pub fn operator_counts(&self) -> Vec<usize> {
        (1..=self.k)
            .map(|p| (1..p).map(|a| self.get(p, a)).sum::<usize>() + (p + 1..=self.k).map(|b| self.get(b, p)).sum::<usize>())
            .collect()
    }

    /// m_ba = n_{k+1−a, k+1−b}: the relabeling that accompanies ι.
    pub fn reflected(&self) -> Self {
        let k = self.k;
        let mut m = vec![0; self.n.len()];
        for b in 2..=k {
            for a in 1..b {
                m[block_index(b, a)] = self.get(k + 1 - a, k + 1 - b);
            }
        }
        Self { k, n: m }
    }
}

/// Cut occupation numbers r_1, ..., r_{k−1}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationVector {
    pub r: Vec<usize>,
}

impl TruncationVector {
    pub fn new(r: Vec<usize>) -> Self {
        Self { r }
    }

    /// Membership in 𝒩_r.
    pub fn contains(&self, n: &MultiIndex) -> bool {
        n.k == self.r.len() + 1 && (1..n.k).all(|p| n.cut(p) == self.r[p - 1])
    }

    pub fn reversed(&self) -> Self {
        Self { r: self.r.iter().rev().copied().collect() }
    }
}

/// All n ∈ 𝒩_r in lexicographic order of the block-ordered vector.
pub fn enumerate_truncation(k: usize, r: &TruncationVector) -> Result<Vec<MultiIndex>> {
    if k < 2 || r.r.len() != k - 1 {
        return Err(Error::InvalidParam(format!("k = {k} needs a truncation vector of length {}", k.saturating_sub(1))));
    }
    let blocks: Vec<(usize, usize)> = (0..block_count(k)).map(crate::scattering::block_pair).collect();
    let mut out = Vec::new();
    let mut current = vec![0; blocks.len()];
    let mut remaining = r.r.clone();
    fn rec(
        i: usize,
        blocks: &[(usize, usize)],
        current: &mut Vec<usize>,
        remaining: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<()> {
        if i == blocks.len() {
            if remaining.iter().all(|&x| x == 0) {
                if out.len() >= ENUMERATION_LIMIT {
                    return Err(Error::EnumerationOverflow { limit: ENUMERATION_LIMIT });
                }
                out.push(current.clone());
            }
            return Ok(());
        }
        let (b, a) = blocks[i];
        // Block (b, a) crosses cuts a..b−1.
        let max = (a..b).map(|p| remaining[p - 1]).min().unwrap_or(0);
        for v in 0..=max {
            for p in a..b {
                remaining[p - 1] -= v;
            }
            current[i] = v;
            rec(i + 1, blocks, current, remaining, out)?;
            for p in a..b {
                remaining[p - 1] += v;
            }
        }
        current[i] = 0;
        Ok(())
    }
    let mut raw = Vec::new();
    rec(0, &blocks, &mut current, &mut remaining, &mut raw)?;
    for n in raw {
        out.push(MultiIndex { k, n });
    }
    Ok(out)
}

/// All n with |n| ≤ max_total, ordered by |n| and then lexicographically.
pub fn enumerate_total(k: usize, max_total: usize) -> Result<Vec<MultiIndex>> {
    let nb = block_count(k);
    let mut out: Vec<MultiIndex> = Vec::new();
    let mut current = vec![0; nb];
    fn rec(i: usize, left: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) -> Result<()> {
        if i == current.len() {
            if out.len() >= ENUMERATION_LIMIT {
                return Err(Error::EnumerationOverflow { limit: ENUMERATION_LIMIT });
            }
            out.push(current.clone());
            return Ok(());
        }
        for v in 0..=left {
            current[i] = v;
            rec(i + 1, left - v, current, out)?;
        }
        current[i] = 0;
        Ok(())
    }
    let mut raw = Vec::new();
    rec(0, max_total, &mut current, &mut raw)?;
    out.extend(raw.into_iter().map(|n| MultiIndex { k, n }));
    out.sort_by(|x, y| x.total().cmp(&y.total()).then_with(|| x.n.cmp(&y.n)));
    Ok(out)
}

/// Contribution of all terms with the same |n|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellResult {
    pub n_total: usize,
    #[serde(with = "complex_parts")]
    pub value: Complex64,
    pub quad_err: f64,
    pub eps_err: f64,
}

/// A correlator estimate with its error budget.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorResult {
    pub value: Complex64,
    pub quad_err: f64,
    pub eps_err: f64,
    pub terms_used: Vec<MultiIndex>,
    pub truncation_tag: String,
    pub shells: Vec<ShellResult>,
}

impl CorrelatorResult {
    pub fn zero(tag: &str) -> Self {
        Self { value: ZERO, quad_err: 0.0, eps_err: 0.0, terms_used: Vec::new(), truncation_tag: tag.into(), shells: Vec::new() }
    }

    pub fn combined_error(&self) -> f64 {
        self.quad_err + self.eps_err
    }

    fn absorb(&mut self, other: &CorrelatorResult, n_total: usize) {
        self.value += other.value;
        self.quad_err += other.quad_err;
        self.eps_err += other.eps_err;
        self.terms_used.extend(other.terms_used.iter().cloned());
        match self.shells.iter_mut().find(|s| s.n_total == n_total) {
            Some(s) => {
                s.value += other.value;
                s.quad_err += other.quad_err;
                s.eps_err += other.eps_err;
            }
            None => self.shells.push(ShellResult { n_total, value: other.value, quad_err: other.quad_err, eps_err: other.eps_err }),
        }
    }

    /// JSON record {value_re, value_im, quad_err, eps_err, shells}.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "value_re": self.value.re,
            "value_im": self.value.im,
            "quad_err": self.quad_err,
            "eps_err": self.eps_err,
            "truncation": self.truncation_tag,
            "terms": self.terms_used.iter().map(|t| t.n.clone()).collect::<Vec<_>>(),
            "shells": self.shells.iter().map(|s| serde_json::json!({
                "n_total": s.n_total,
                "value_re": s.value.re,
                "value_im": s.value.im,
                "quad_err": s.quad_err,
                "eps_err": s.eps_err,
            })).collect::<Vec<_>>(),
        })
    }
}

mod complex_parts {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

/// Integration and regularization settings of the correlator layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrelatorConfig {
    pub quad: QuadConfig,
    /// Strictly decreasing regulators for the ε → 0⁺ extrapolation.
    pub eps_schedule: Vec<f64>,
    /// Overrides the rapidity cutoff derived from the test functions.
    pub gamma_max: Option<f64>,
    /// Largest |n| accepted.
    pub dim_cap: usize,
    /// From this |n| on, quasi-Monte Carlo replaces the tensor rule.
    pub qmc_from: usize,
}

impl Default for CorrelatorConfig {
    fn default() -> Self {
        Self {
            quad: QuadConfig::default(),
            eps_schedule: vec![PI / 16.0, PI / 32.0, PI / 64.0],
            gamma_max: None,
            dim_cap: 6,
            qmc_from: 4,
        }
    }
}

/// The test-function factor of an integrand, as a function of the rapidities.
pub trait MomentumWeight: Sync {
    fn k(&self) -> usize;
    fn weight(&self, gamma: &RapidityLayout, m: f64) -> Result<Complex64>;
    /// |γ| beyond which the weight is negligible against any quadrature tolerance.
    fn rapidity_cutoff(&self, m: f64) -> f64;
}

/// cosh Γ large enough that exp(−½λ(m cosh Γ − |κ|)²) drops below e^{−40}.
fn cutoff_from_width(lambda: f64, kappa: f64, m: f64) -> f64 {
    let x = ((80.0 / lambda).sqrt() + kappa) / m;
    x.max(1.0).acosh() + 1.0
}

impl MomentumWeight for ProductTestFunction {
    fn k(&self) -> usize {
        ProductTestFunction::k(self)
    }

    fn weight(&self, gamma: &RapidityLayout, m: f64) -> Result<Complex64> {
        momentum_transform(self, gamma, m)
    }

    fn rapidity_cutoff(&self, m: f64) -> f64 {
        self.factors
            .iter()
            .map(|g| cutoff_from_width(g.min_momentum_precision(), g.wavevector.x0.hypot(g.wavevector.x1), m))
            .fold(0.0, f64::max)
    }
}

/// A Gaussian on difference variables, weighted through the reduced transform R̂.
pub struct ReducedWeight<'a> {
    pub form: &'a GaussianForm,
}

impl MomentumWeight for ReducedWeight<'_> {
    fn k(&self) -> usize {
        self.form.points() + 1
    }

    fn weight(&self, gamma: &RapidityLayout, m: f64) -> Result<Complex64> {
        reduced_transform(self.form, gamma, m)
    }

    fn rapidity_cutoff(&self, m: f64) -> f64 {
        let eig = self.form.precision.clone().symmetric_eigenvalues();
        let lambda = 1.0 / eig.max();
        let kappa = self.form.linear.iter().map(|h| h.im * h.im).sum::<f64>().sqrt();
        cutoff_from_width(lambda, kappa, m)
    }
}

/// Ĥ(P_1, ..., P_{k−1}) = ∏_ℓ exp(−|P_ℓ − c_ℓ|²/2w_ℓ²): a reduced test function given in momentum space.
#[derive(Debug, Clone)]
pub struct MomentumGaussian {
    pub centers: Vec<TwoVector>,
    pub widths: Vec<f64>,
}

impl MomentumWeight for MomentumGaussian {
    fn k(&self) -> usize {
        self.centers.len() + 1
    }

    fn weight(&self, gamma: &RapidityLayout, m: f64) -> Result<Complex64> {
        let pl = reduced_momenta(gamma, m);
        let mut expo = ZERO;
        for ((p, c), w) in pl.iter().zip(&self.centers).zip(&self.widths) {
            let d0 = p.p0 - c.x0;
            let d1 = p.p1 - c.x1;
            expo -= (d0 * d0 + d1 * d1) / (2.0 * w * w);
        }
        Ok(expo.exp())
    }

    fn rapidity_cutoff(&self, m: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.widths)
            .map(|(c, w)| cutoff_from_width(w * w, c.x0.hypot(c.x1), m))
            .fold(0.0, f64::max)
    }
}

/// Whether 𝓕^(α) on n particles vanishes identically, judged from two generic points.
pub fn form_factor_vanishes(spec: &OperatorSpec, n: usize, params: &CouplingParams) -> Result<bool> {
    if n == 0 {
        return Ok(spec.p0() == ZERO);
    }
    let probes = [
        [0.31, -0.77, 1.13, 0.05, -1.61, 0.92, -0.23, 1.57, -1.08, 0.64, -0.41, 1.29],
        [-0.52, 0.18, 0.87, -1.34, 0.46, -0.09, 1.21, -0.66, 0.33, -1.47, 1.02, -0.15],
    ];
    for probe in probes {
        let beta: Vec<Complex64> = probe.iter().take(n).map(|&x| Complex64::new(x, 0.13)).collect();
        let value = form_factor(spec, &beta, params)?;
        let scale = form_factor_scale(spec, &beta, params)?;
        if value.norm() > 1e-12 * scale {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Σ over ℓ of the moduli of the folded K-transform terms: the cancellation-free size.
fn form_factor_scale(spec: &OperatorSpec, beta: &[Complex64], params: &CouplingParams) -> Result<f64> {
    let n = beta.len();
    let s2 = params.sin_2pi_b();
    let mut pairs = Vec::new();
    for k in 0..n {
        for s in k + 1..n {
            let t = crate::special_fn::two_body(beta[k] - beta[s], params)?;
            pairs.push((k, s, t.f, I * s2 * t.f_over_sinh));
        }
    }
    let mut acc = 0.0;
    for mask in 0..(1usize << n) {
        let ell: Vec<u8> = (0..n).map(|j| ((mask >> j) & 1) as u8).collect();
        let mut term = spec.p_eval(beta, &ell).norm();
        for &(k, s, f, h) in &pairs {
            let d = ell[k] as f64 - ell[s] as f64;
            term *= (f - h * d).norm();
        }
        acc += term;
    }
    Ok(acc)
}

fn any_operator_vanishes(specs: &[OperatorSpec], n: &MultiIndex, params: &CouplingParams) -> Result<bool> {
    for (spec, count) in specs.iter().zip(n.operator_counts()) {
        if form_factor_vanishes(spec, count, params)? {
            return Ok(true);
        }
    }
    Ok(false)
}

fn rapidity_cutoff(weight: &dyn MomentumWeight, params: &CouplingParams, cfg: &CorrelatorConfig) -> f64 {
    cfg.gamma_max.unwrap_or_else(|| weight.rapidity_cutoff(params.m))
}

/// ∫ d^{|n|}γ/(n!(2π)^{|n|}) f(γ) over ℝ^{|n|} truncated to [−Γ, Γ]^{|n|}.
pub fn integrate_layout<F>(n: &MultiIndex, cutoff: f64, cfg: &CorrelatorConfig, f: F) -> Result<Estimate>
where
    F: Fn(&RapidityLayout) -> Result<Complex64> + Sync,
{
    let d = n.total();
    if d > cfg.dim_cap {
        return Err(Error::TooManyParticles { n: d, cap: cfg.dim_cap });
    }
    let norm = 1.0 / (n.factorial() * (2.0 * PI).powi(d as i32));
    let to_layout = |x: &[f64]| RapidityLayout::with_data(n.k, &n.n, x.iter().map(|&v| Complex64::new(v, 0.0)).collect());
    let g = |x: &[f64]| -> Result<Complex64> { f(&to_layout(x)?) };
    let mut est = if d < cfg.qmc_from {
        let bounds = vec![(-cutoff, cutoff); d];
        integrate_box(g, &bounds, &cfg.quad)?
    } else {
        // Outside |γ| ≤ Γ the weight is negligible; zero it so QMC tails stay clean.
        let clipped = |x: &[f64]| -> Result<Complex64> {
            if x.iter().any(|v| v.abs() > cutoff) {
                Ok(ZERO)
            } else {
                g(x)
            }
        };
        integrate_qmc(clipped, d, cutoff / 6.0, &cfg.quad)?
    };
    est.value *= norm;
    est.error *= norm;
    Ok(est)
}

/// Runs `per_eps` over the schedule and extrapolates to ε → 0⁺.
fn extrapolate<F>(cfg: &CorrelatorConfig, per_eps: F) -> Result<(Complex64, f64, f64)>
where
    F: Fn(f64) -> Result<Estimate>,
{
    let ests: Vec<Estimate> = cfg.eps_schedule.iter().map(|&e| per_eps(e)).collect::<Result<_>>()?;
    let values: Vec<Complex64> = ests.iter().map(|e| e.value).collect();
    let (value, eps_err) = richardson(&cfg.eps_schedule, &values)?;
    let len = ests.len();
    let quad_err = if len >= 2 {
        let r = cfg.eps_schedule[len - 2] / cfg.eps_schedule[len - 1];
        (r * ests[len - 1].error + ests[len - 2].error) / (r - 1.0)
    } else {
        ests[0].error
    };
    Ok((value, quad_err, eps_err))
}

fn single_term(n: &MultiIndex, value: Complex64, quad_err: f64, eps_err: f64, tag: String) -> CorrelatorResult {
    CorrelatorResult {
        value,
        quad_err,
        eps_err,
        terms_used: vec![n.clone()],
        truncation_tag: tag,
        shells: vec![ShellResult { n_total: n.total(), value, quad_err, eps_err }],
    }
}

fn check_shapes(specs: &[OperatorSpec], weight: &dyn MomentumWeight, n: &MultiIndex) -> Result<()> {
    if specs.len() != n.k || weight.k() != n.k {
        return Err(Error::InvalidParam(format!(
            "{} operators and a {}-point test function for k = {}",
            specs.len(),
            weight.k(),
            n.k
        )));
    }
    if n.k == 0 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    Ok(())
}

/// I^(n)_α[G] = lim_{ε→0⁺} ∫ d^{|n|}γ/(n!(2π)^{|n|}) 𝒮·w·𝓕_{α;ε}, with w = R[G] for
/// product test functions, R̂[H] for reduced Gaussians, or any other weight.
pub fn eval_i_n(
    specs: &[OperatorSpec],
    weight: &dyn MomentumWeight,
    n: &MultiIndex,
    params: &CouplingParams,
    cfg: &CorrelatorConfig,
) -> Result<CorrelatorResult> {
    check_shapes(specs, weight, n)?;
    let tag = format!("n = {:?}", n.n);
    if any_operator_vanishes(specs, n, params)? {
        return Ok(single_term(n, ZERO, 0.0, 0.0, tag));
    }
    let cutoff = rapidity_cutoff(weight, params, cfg);
    let k = n.k;
    let (value, quad_err, eps_err) = extrapolate(cfg, |eps| {
        let eps_vec = vec![eps; k];
        integrate_layout(n, cutoff, cfg, |gamma| {
            let ff = ff_product_eps(specs, gamma, &eps_vec, params)?;
            if ff == ZERO {
                return Ok(ZERO);
            }
            Ok(s_global(gamma, params)? * weight.weight(gamma, params.m)? * ff)
        })
    })?;
    Ok(single_term(n, value, quad_err, eps_err, tag))
}

/// J^(n)_α[H]: the same integral with the reduced transform R̂[H] as weight.
pub fn eval_j_n(
    specs: &[OperatorSpec],
    h: &GaussianForm,
    n: &MultiIndex,
    params: &CouplingParams,
    cfg: &CorrelatorConfig,
) -> Result<CorrelatorResult> {
    eval_i_n(specs, &ReducedWeight { form: h }, n, params, cfg)
}

fn shifted_blocks(gamma: &RapidityLayout, weights: &[f64], eps: f64) -> RapidityLayout {
    if weights.iter().all(|&w| w == 0.0) {
        return gamma.clone();
    }
    let mut out = gamma.clone();
    for (i, (b, a)) in gamma.pairs().enumerate() {
        let shift = I * weights[i] * eps;
        out.block_mut(b, a).iter_mut().for_each(|x| *x += shift);
    }
    out
}

/// I^(n)_{α;t}[G]: the representation built on 𝒮^(t) and 𝓕^(t), with optional contour deformation.
pub fn eval_i_n_t(
    specs: &[OperatorSpec],
    weight: &dyn MomentumWeight,
    n: &MultiIndex,
    t: usize,
    deform: &DeformationParams,
    params: &CouplingParams,
    cfg: &CorrelatorConfig,
) -> Result<CorrelatorResult> {
    check_shapes(specs, weight, n)?;
    if t == 0 || t > n.k {
        return Err(Error::IndexOutOfRange { index: t, max: n.k });
    }
    deform.validate(n.k)?;
    let tag = format!("n = {:?}, t = {t}", n.n);
    if any_operator_vanishes(specs, n, params)? {
        return Ok(single_term(n, ZERO, 0.0, 0.0, tag));
    }
    let cutoff = rapidity_cutoff(weight, params, cfg);
    let (value, quad_err, eps_err) = extrapolate(cfg, |eps| {
        integrate_layout(n, cutoff, cfg, |gamma| {
            let ff = ff_product_t(specs, gamma, t, eps, deform, params)?;
            if ff == ZERO {
                return Ok(ZERO);
            }
            let s = s_t(&shifted_blocks(gamma, &deform.delta_s, eps), t, params)?;
            let w = weight.weight(&shifted_blocks(gamma, &deform.delta_r, eps), params.m)?;
            Ok(s * w * ff)
        })
    })?;
    Ok(single_term(n, value, quad_err, eps_err, tag))
}

/// W^(r)_α[G] = Σ_{n∈𝒩_r} I^(n)_α[G].
pub fn eval_w_r(
    specs: &[OperatorSpec],
    weight: &dyn MomentumWeight,
    r: &TruncationVector,
    params: &CouplingParams,
    cfg: &CorrelatorConfig,
) -> Result<CorrelatorResult> {
    let k = specs.len();
    let mut out = CorrelatorResult::zero(&format!("r = {:?}", r.r));
    for n in enumerate_truncation(k, r)? {
        let term = eval_i_n(specs, weight, &n, params, cfg)?;
        out.absorb(&term, n.total());
    }
    Ok(out)
}

/// Σ_{|n| ≤ N} I^(n)_α[G], reported shell by shell. The last shell is the truncation diagnostic.
pub fn eval_w_partial(
    specs: &[OperatorSpec],
    weight: &dyn MomentumWeight,
    total_cap: usize,
    params: &CouplingParams,
    cfg: &CorrelatorConfig,
) -> Result<CorrelatorResult> {
    let k = specs.len();
    let mut out = CorrelatorResult::zero(&format!("|n| <= {total_cap}"));
    for shell in 0..=total_cap {
        out.shells.push(ShellResult { n_total: shell, value: ZERO, quad_err: 0.0, eps_err: 0.0 });
    }
    for n in enumerate_total(k, total_cap)? {
        let term = eval_i_n(specs, weight, &n, params, cfg)?;
        out.absorb(&term, n.total());
    }
    Ok(out)
}

/// Shells of the unsmeared two-point kernel at spacelike separation x = x_2 − x_1.
///
/// With x = ±ρ(sinh φ, cosh φ) every rapidity is moved to u + φ ∓ iπ/2. The phase
/// e^{i p̄(γ)*x} becomes e^{−mρ Σ cosh u}, so the regulator limit is taken exactly.
pub fn two_point_kernel(
    spec1: &OperatorSpec,
    spec2: &OperatorSpec,
    x: TwoVector,
    total_cap: usize,
    params: &CouplingParams,
    cfg: &CorrelatorConfig,
) -> Result<CorrelatorResult> {
    if !x.is_spacelike() {
        return Err(Error::Timelike { x0: x.x0, x1: x.x1 });
    }
    let rho = (x.x1 * x.x1 - x.x0 * x.x0).sqrt();
    let phi = (x.x0 / x.x1).atanh();
    let shift = Complex64::new(phi, -x.x1.signum() * PI / 2.0);
    let mr = params.m * rho;
    let cutoff = cfg.gamma_max.unwrap_or_else(|| (45.0 / mr).max(1.0).acosh() + 1.0);
    let mut out = CorrelatorResult::zero(&format!("|n| <= {total_cap}"));
    for n_total in 0..=total_cap {
        let n = MultiIndex::new(2, vec![n_total])?;
        let shell = if form_factor_vanishes(spec1, n_total, params)? || form_factor_vanishes(spec2, n_total, params)? {
            single_term(&n, ZERO, 0.0, 0.0, String::new())
        } else {
            let est = integrate_layout(&n, cutoff, cfg, |gamma| {
                let u = gamma.data();
                let args1: Vec<Complex64> = u.iter().map(|&v| v + shift).collect();
                let args2: Vec<Complex64> = u.iter().rev().map(|&v| v + shift + I * PI).collect();
                let damping: f64 = u.iter().map(|v| v.re.cosh()).sum::<f64>() * mr;
                Ok(form_factor(spec1, &args1, params)? * form_factor(spec2, &args2, params)? * (-damping).exp())
            })?;
            single_term(&n, est.value, est.error, 0.0, String::new())
        };
        out.absorb(&shell, n_total);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_sets() {
        let set = enumerate_truncation(2, &TruncationVector::new(vec![3])).unwrap();
        assert_eq!(set, vec![MultiIndex::new(2, vec![3]).unwrap()]);
        let set = enumerate_truncation(3, &TruncationVector::new(vec![1, 1])).unwrap();
        let got: Vec<Vec<usize>> = set.iter().map(|m| m.n.clone()).collect();
        assert_eq!(got, vec![vec![0, 1, 0], vec![1, 0, 1]]);
        let set = enumerate_truncation(3, &TruncationVector::new(vec![0, 0])).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set[0].total(), 0);
    }

    #[test]
    fn truncation_matches_brute_force() {
        let r = TruncationVector::new(vec![2, 1, 2]);
        let set = enumerate_truncation(4, &r).unwrap();
        let mut brute = Vec::new();
        for code in 0..3usize.pow(6) {
            let n: Vec<usize> = (0..6).map(|i| (code / 3usize.pow(i)) % 3).collect();
            let m = MultiIndex::new(4, n).unwrap();
            if r.contains(&m) {
                brute.push(m);
            }
        }
        brute.sort_by(|a, b| a.n.cmp(&b.n));
        assert_eq!(set, brute);
    }

    #[test]
    fn reflection_is_an_involution() {
        let n = MultiIndex::new(4, vec![1, 0, 2, 3, 0, 1]).unwrap();
        assert_eq!(n.reflected().reflected(), n);
        // m_21 = n_43
        assert_eq!(n.reflected().get(2, 1), n.get(4, 3));
    }

    #[test]
    fn operator_counts_k3() {
        let n = MultiIndex::new(3, vec![1, 2, 3]).unwrap();
        assert_eq!(n.operator_counts(), vec![3, 4, 5]);
        assert_eq!(n.cut(1), 3);
        assert_eq!(n.cut(2), 5);
    }

    #[test]
    fn totals_are_ordered() {
        let all = enumerate_total(3, 2).unwrap();
        assert_eq!(all.len(), 10);
        assert!(all.windows(2).all(|w| w[0].total() <= w[1].total()));
    }

    #[test]
    fn field_even_form_factors_vanish() {
        let p = CouplingParams::from_b(0.25, 1.0).unwrap();
        let f = OperatorSpec::field(&p).unwrap();
        assert!(form_factor_vanishes(&f, 0, &p).unwrap());
        assert!(!form_factor_vanishes(&f, 1, &p).unwrap());
        assert!(form_factor_vanishes(&f, 2, &p).unwrap());
        assert!(!form_factor_vanishes(&f, 3, &p).unwrap());
        assert!(form_factor_vanishes(&f, 4, &p).unwrap());
    }
}
