//! Minkowski ℝ^{1,1} kinematics, Gaussian test functions and the momentum transforms.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scattering::RapidityLayout;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A real point of ℝ^{1,1}: time x0 and space x1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoVector {
    pub x0: f64,
    pub x1: f64,
}

impl TwoVector {
    pub const ZERO: TwoVector = TwoVector { x0: 0.0, x1: 0.0 };

    pub fn new(x0: f64, x1: f64) -> Self {
        Self { x0, x1 }
    }

    pub fn square(&self) -> f64 {
        minkowski_dot(*self, *self)
    }

    pub fn is_spacelike(&self) -> bool {
        self.square() < 0.0
    }

    fn as_vector(self) -> Vector2<f64> {
        Vector2::new(self.x0, self.x1)
    }

    fn from_vector(v: Vector2<f64>) -> Self {
        Self { x0: v[0], x1: v[1] }
    }
}

impl std::ops::Add for TwoVector {
    type Output = TwoVector;
    fn add(self, o: TwoVector) -> TwoVector {
        TwoVector::new(self.x0 + o.x0, self.x1 + o.x1)
    }
}

impl std::ops::Sub for TwoVector {
    type Output = TwoVector;
    fn sub(self, o: TwoVector) -> TwoVector {
        TwoVector::new(self.x0 - o.x0, self.x1 - o.x1)
    }
}

impl std::ops::Mul<TwoVector> for f64 {
    type Output = TwoVector;
    fn mul(self, o: TwoVector) -> TwoVector {
        TwoVector::new(self * o.x0, self * o.x1)
    }
}

/// x*y = x0 y0 − x1 y1.
pub fn minkowski_dot(x: TwoVector, y: TwoVector) -> f64 {
    x.x0 * y.x0 - x.x1 * y.x1
}

/// A complex 2-momentum, as produced by complex rapidities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Momentum {
    pub p0: Complex64,
    pub p1: Complex64,
}

impl Momentum {
    pub fn square(&self) -> Complex64 {
        self.p0 * self.p0 - self.p1 * self.p1
    }

    /// Pairing with a real point, p*x.
    pub fn dot(&self, x: TwoVector) -> Complex64 {
        self.p0 * x.x0 - self.p1 * x.x1
    }
}

impl std::ops::Add for Momentum {
    type Output = Momentum;
    fn add(self, o: Momentum) -> Momentum {
        Momentum { p0: self.p0 + o.p0, p1: self.p1 + o.p1 }
    }
}

impl std::ops::Sub for Momentum {
    type Output = Momentum;
    fn sub(self, o: Momentum) -> Momentum {
        Momentum { p0: self.p0 - o.p0, p1: self.p1 - o.p1 }
    }
}

impl std::ops::AddAssign for Momentum {
    fn add_assign(&mut self, o: Momentum) {
        self.p0 += o.p0;
        self.p1 += o.p1;
    }
}

impl std::ops::SubAssign for Momentum {
    fn sub_assign(&mut self, o: Momentum) {
        self.p0 -= o.p0;
        self.p1 -= o.p1;
    }
}

/// Λ_θ = ((cosh θ, −sinh θ), (−sinh θ, cosh θ)).
pub fn boost(theta: f64) -> [[f64; 2]; 2] {
    let (c, s) = (theta.cosh(), theta.sinh());
    [[c, -s], [-s, c]]
}

fn boost_matrix(theta: f64) -> Matrix2<f64> {
    let l = boost(theta);
    Matrix2::new(l[0][0], l[0][1], l[1][0], l[1][1])
}

pub fn apply_boost(theta: f64, x: TwoVector) -> TwoVector {
    TwoVector::from_vector(boost_matrix(theta) * x.as_vector())
}

/// p(β) = m(cosh β, sinh β).
pub fn two_momentum(beta: Complex64, m: f64) -> Momentum {
    Momentum { p0: beta.cosh() * m, p1: beta.sinh() * m }
}

/// p̄(β) = Σ_a p(β_a).
pub fn pbar(betas: &[Complex64], m: f64) -> Momentum {
    betas.iter().fold(Momentum::default(), |acc, &b| acc + two_momentum(b, m))
}

/// g(x) = A·exp(−½(x−c)ᵀM(x−c) + iκ·(x−c)) with Euclidean products inside.
///
/// Boosts turn an isotropic packet into a sheared one, so the precision
/// matrix M is kept general.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub amplitude: Complex64,
    pub center: TwoVector,
    /// Symmetric positive definite precision matrix, row major.
    pub precision: [[f64; 2]; 2],
    pub wavevector: TwoVector,
}

impl GaussianPacket {
    /// Isotropic packet of width σ normalized to unit amplitude.
    pub fn isotropic(center: TwoVector, sigma: f64, wavevector: TwoVector) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParam(format!("width {sigma} must be positive")));
        }
        let w = 1.0 / (sigma * sigma);
        Ok(Self { amplitude: Complex64::new(1.0, 0.0), center, precision: [[w, 0.0], [0.0, w]], wavevector })
    }

    pub fn with_amplitude(mut self, amplitude: Complex64) -> Self {
        self.amplitude = amplitude;
        self
    }

    fn m(&self) -> Matrix2<f64> {
        let p = self.precision;
        Matrix2::new(p[0][0], p[0][1], p[1][0], p[1][1])
    }

    pub fn eval(&self, x: TwoVector) -> Complex64 {
        let y = (x - self.center).as_vector();
        let quad = (y.transpose() * self.m() * y)[0];
        self.amplitude * (Complex64::new(-0.5 * quad, 0.0) + I * self.wavevector.as_vector().dot(&y)).exp()
    }

    /// ĝ(q) = ∫d²x g(x) e^{i q*x}, valid for complex q.
    pub fn fourier(&self, q: Momentum) -> Complex64 {
        let m = self.m();
        let det = m.determinant();
        let inv = m.try_inverse().expect("positive definite precision");
        // q*x = q̃·x with q̃ = (q0, −q1)
        let qt = [q.p0, -q.p1];
        let u = [qt[0] + self.wavevector.x0, qt[1] + self.wavevector.x1];
        let mut quad = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                quad += u[i] * inv[(i, j)] * u[j];
            }
        }
        let phase = I * (qt[0] * self.center.x0 + qt[1] * self.center.x1);
        self.amplitude * (2.0 * PI / det.sqrt()) * (phase - 0.5 * quad).exp()
    }

    /// ∫d²x g(x).
    pub fn integral(&self) -> Complex64 {
        self.fourier(Momentum::default())
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            amplitude: self.amplitude.conj(),
            wavevector: TwoVector::new(-self.wavevector.x0, -self.wavevector.x1),
            ..*self
        }
    }

    /// x ↦ g(Λ_θ^{-1}(x + v)).
    pub fn poincare(&self, theta: f64, v: TwoVector) -> Self {
        let l = boost_matrix(theta);
        let linv = boost_matrix(-theta);
        let center = TwoVector::from_vector(l * self.center.as_vector()) - v;
        let m = linv * self.m() * linv;
        let k = linv * self.wavevector.as_vector();
        Self {
            amplitude: self.amplitude,
            center,
            precision: [[m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)])], [0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]]],
            wavevector: TwoVector::from_vector(k),
        }
    }

    /// Smallest eigenvalue of M⁻¹, the narrowest momentum-space direction.
    pub fn min_momentum_precision(&self) -> f64 {
        let inv = self.m().try_inverse().expect("positive definite precision");
        inv.symmetric_eigenvalues().min()
    }

    /// Largest spatial standard deviation of the packet.
    pub fn max_width(&self) -> f64 {
        let inv = self.m().try_inverse().expect("positive definite precision");
        inv.symmetric_eigenvalues().max().sqrt()
    }

    pub fn is_isotropic(&self) -> bool {
        let p = self.precision;
        p[0][1].abs() < 1e-14 * p[0][0] && (p[0][0] - p[1][1]).abs() < 1e-14 * p[0][0]
    }
}

/// G(X_k) = ∏_s g_s(x_s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTestFunction {
    pub factors: Vec<GaussianPacket>,
}

impl ProductTestFunction {
    pub fn new(factors: Vec<GaussianPacket>) -> Self {
        Self { factors }
    }

    pub fn k(&self) -> usize {
        self.factors.len()
    }

    pub fn eval(&self, xs: &[TwoVector]) -> Complex64 {
        self.factors.iter().zip(xs).map(|(g, &x)| g.eval(x)).product()
    }

    pub fn poincare_apply(&self, theta: f64, v: TwoVector) -> Self {
        Self::new(self.factors.iter().map(|g| g.poincare(theta, v)).collect())
    }

    /// (σ·G) has factor j equal to the old factor σ(j), both 0-based.
    pub fn permute(&self, sigma: &[usize]) -> Result<Self> {
        let k = self.k();
        let mut seen = vec![false; k];
        if sigma.len() != k {
            return Err(Error::InvalidParam(format!("permutation of length {} for k = {k}", sigma.len())));
        }
        for &s in sigma {
            if s >= k || seen[s] {
                return Err(Error::IndexOutOfRange { index: s, max: k.saturating_sub(1) });
            }
            seen[s] = true;
        }
        Ok(Self::new(sigma.iter().map(|&s| self.factors[s]).collect()))
    }

    /// τ_s exchanges factors s and s+1, with 1 ≤ s ≤ k−1.
    pub fn transpose_adjacent(&self, s: usize) -> Result<Self> {
        let k = self.k();
        if s == 0 || s >= k {
            return Err(Error::IndexOutOfRange { index: s, max: k.saturating_sub(1) });
        }
        let mut out = self.clone();
        out.factors.swap(s - 1, s);
        Ok(out)
    }

    /// ι reverses the factor order.
    pub fn invert(&self) -> Self {
        Self::new(self.factors.iter().rev().copied().collect())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.factors.iter().map(GaussianPacket::conj).collect())
    }
}

/// Momentum q_s(γ) conjugate to x_s in the phase ∏_{b>a} e^{i p̄(γ^(ba))*(x_b − x_a)}.
pub fn point_momenta(gamma: &RapidityLayout, m: f64) -> Vec<Momentum> {
    let k = gamma.k();
    let mut q = vec![Momentum::default(); k];
    for (b, a) in gamma.pairs() {
        let p = pbar(gamma.block(b, a), m);
        q[b - 1] += p;
        q[a - 1] -= p;
    }
    q
}

/// R[G](γ) = ∏_s ĝ_s(q_s(γ)).
pub fn momentum_transform(g: &ProductTestFunction, gamma: &RapidityLayout, m: f64) -> Result<Complex64> {
    if g.k() != gamma.k() {
        return Err(Error::InvalidParam(format!("test function has {} factors, layout k = {}", g.k(), gamma.k())));
    }
    Ok(g.factors.iter().zip(point_momenta(gamma, m)).map(|(f, q)| f.fourier(q)).product())
}

/// P_ℓ(γ) = Σ_{b>ℓ≥a} p̄(γ^(ba)) for ℓ = 1..k−1.
pub fn reduced_momenta(gamma: &RapidityLayout, m: f64) -> Vec<Momentum> {
    let k = gamma.k();
    let mut out = vec![Momentum::default(); k.saturating_sub(1)];
    for (b, a) in gamma.pairs() {
        let p = pbar(gamma.block(b, a), m);
        for slot in out.iter_mut().take(b - 1).skip(a - 1) {
            *slot += p;
        }
    }
    out
}

/// exp(a − ½yᵀPy + hᵀy) on (ℝ^{1,1})^n, coordinates ordered (y_1^0, y_1^1, y_2^0, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianForm {
    pub log_scale: Complex64,
    pub precision: DMatrix<f64>,
    pub linear: DVector<Complex64>,
}

impl GaussianForm {
    pub fn points(&self) -> usize {
        self.linear.len() / 2
    }

    pub fn eval(&self, ys: &[TwoVector]) -> Complex64 {
        let y = DVector::from_iterator(2 * ys.len(), ys.iter().flat_map(|v| [v.x0, v.x1]));
        let quad = (y.transpose() * &self.precision * &y)[0];
        let lin: Complex64 = self.linear.iter().zip(y.iter()).map(|(h, &v)| h * v).sum();
        (self.log_scale - 0.5 * quad + lin).exp()
    }

    /// ∫ exp(a − ½yᵀPy + (h + extra)ᵀy) dy over all coordinates.
    pub fn integrate_with(&self, extra: &[Complex64]) -> Result<Complex64> {
        let n = self.linear.len();
        if n == 0 {
            return Ok(self.log_scale.exp());
        }
        let chol = self
            .precision
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidParam("Gaussian precision is not positive definite".into()))?;
        let h = DVector::from_iterator(n, self.linear.iter().zip(extra).map(|(a, b)| a + b));
        let inv = chol.inverse();
        let mut quad = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                quad += h[i] * inv[(i, j)] * h[j];
            }
        }
        let det = chol.determinant();
        let log_norm = 0.5 * n as f64 * (2.0 * PI).ln() - 0.5 * det.ln();
        Ok((self.log_scale + 0.5 * quad + log_norm).exp())
    }

    /// Integrates out the last point, returning a form on the first n−1 points.
    pub fn marginalize_last(&self) -> Result<GaussianForm> {
        let n = self.linear.len();
        if n < 2 {
            return Err(Error::InvalidParam("nothing to marginalize".into()));
        }
        let u = n - 2;
        let puu = self.precision.view((0, 0), (u, u)).into_owned();
        let puw = self.precision.view((0, u), (u, 2)).into_owned();
        let pww = self.precision.view((u, u), (2, 2)).into_owned();
        let pww_inv = pww
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidParam("singular block in Gaussian marginal".into()))?;
        let hw = [self.linear[u], self.linear[u + 1]];
        let precision = &puu - &puw * &pww_inv * puw.transpose();
        let mut linear = DVector::from_iterator(u, self.linear.iter().take(u).copied());
        for i in 0..u {
            for a in 0..2 {
                for c in 0..2 {
                    linear[i] -= puw[(i, a)] * pww_inv[(a, c)] * hw[c];
                }
            }
        }
        let mut quad = Complex64::new(0.0, 0.0);
        for a in 0..2 {
            for c in 0..2 {
                quad += hw[a] * pww_inv[(a, c)] * hw[c];
            }
        }
        let log_scale = self.log_scale + 0.5 * quad + (2.0 * PI / pww.determinant().sqrt()).ln();
        Ok(GaussianForm { log_scale, precision, linear })
    }
}

/// G in the difference variables y_s = x_s − x_{s+1}, y_k = x_k, before integrating y_k.
fn product_in_differences(g: &ProductTestFunction) -> GaussianForm {
    let k = g.k();
    let n = 2 * k;
    let mut precision = DMatrix::<f64>::zeros(n, n);
    let mut linear = DVector::<Complex64>::zeros(n);
    let mut log_scale = Complex64::new(0.0, 0.0);
    for (s, f) in g.factors.iter().enumerate() {
        let m = f.m();
        let c = f.center.as_vector();
        let kap = f.wavevector.as_vector();
        let mc = m * c;
        // x_s = Σ_{p ≥ s} y_p
        for p in s..k {
            for q in s..k {
                for i in 0..2 {
                    for j in 0..2 {
                        precision[(2 * p + i, 2 * q + j)] += m[(i, j)];
                    }
                }
            }
            for i in 0..2 {
                linear[2 * p + i] += Complex64::new(mc[i], kap[i]);
            }
        }
        log_scale += f.amplitude.ln() - 0.5 * c.dot(&mc) - I * kap.dot(&c);
    }
    GaussianForm { log_scale, precision, linear }
}

/// L[G](Y_{k−1}) = ∫dy_k G(Σ_{s≥1} y_s, ..., y_k) in closed form.
pub fn l_map(g: &ProductTestFunction) -> Result<GaussianForm> {
    if g.k() == 0 {
        return Err(Error::InvalidParam("empty test function".into()));
    }
    product_in_differences(g).marginalize_last()
}

/// R̂[H](γ) = ∫d^{k−1}Y H(Y) ∏_ℓ e^{−i y_ℓ*P_ℓ(γ)}.
pub fn reduced_transform(h: &GaussianForm, gamma: &RapidityLayout, m: f64) -> Result<Complex64> {
    let pl = reduced_momenta(gamma, m);
    if pl.len() != h.points() {
        return Err(Error::InvalidParam(format!("form on {} points, layout needs {}", h.points(), pl.len())));
    }
    // −i y*P = −i(y0 P0 − y1 P1)
    let extra: Vec<Complex64> = pl.iter().flat_map(|p| [-I * p.p0, I * p.p1]).collect();
    h.integrate_with(&extra)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(c0: f64, c1: f64, s: f64, k0: f64, k1: f64) -> GaussianPacket {
        GaussianPacket::isotropic(TwoVector::new(c0, c1), s, TwoVector::new(k0, k1)).unwrap()
    }

    #[test]
    fn boost_preserves_the_metric() {
        let x = TwoVector::new(0.3, -1.2);
        let y = TwoVector::new(2.0, 0.7);
        let d = minkowski_dot(apply_boost(0.8, x), apply_boost(0.8, y));
        assert!((d - minkowski_dot(x, y)).abs() < 1e-14);
    }

    #[test]
    fn boost_shifts_rapidity() {
        let p = two_momentum(Complex64::new(0.4, 0.0), 1.0);
        let l = boost(0.25);
        let q0 = l[0][0] * p.p0.re + l[0][1] * p.p1.re;
        let expect = two_momentum(Complex64::new(0.15, 0.0), 1.0);
        assert!((q0 - expect.p0.re).abs() < 1e-14);
    }

    #[test]
    fn pbar_of_nothing() {
        assert_eq!(pbar(&[], 1.0), Momentum::default());
        let p = two_momentum(Complex64::new(0.0, 0.0), 2.0);
        assert_eq!((p.p0.re, p.p1.re), (2.0, 0.0));
    }

    #[test]
    fn identity_action() {
        let g = ProductTestFunction::new(vec![packet(0.1, 0.2, 0.5, 0.3, -0.1)]);
        let h = g.poincare_apply(0.0, TwoVector::ZERO);
        assert!((h.factors[0].center.x0 - 0.1).abs() < 1e-15);
        assert_eq!(h.factors[0].precision, g.factors[0].precision);
    }

    #[test]
    fn poincare_action_moves_the_packet() {
        let g = packet(0.3, -0.4, 0.7, 0.5, 0.2).with_amplitude(Complex64::new(0.5, 0.25));
        let (theta, v) = (0.4, TwoVector::new(0.2, -0.6));
        let h = g.poincare(theta, v);
        for x in [TwoVector::new(0.1, 0.3), TwoVector::new(-1.0, 0.4)] {
            let direct = g.eval(apply_boost(-theta, x + v));
            assert!((h.eval(x) - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn reorderings() {
        let g = ProductTestFunction::new(vec![packet(0.0, 0.0, 1.0, 0.0, 0.0), packet(1.0, 0.0, 1.0, 0.0, 0.0), packet(2.0, 0.0, 1.0, 0.0, 0.0)]);
        assert_eq!(g.invert().invert(), g);
        assert_eq!(g.invert().factors[0], g.factors[2]);
        assert_eq!(g.transpose_adjacent(2).unwrap().transpose_adjacent(2).unwrap(), g);
        assert!(g.transpose_adjacent(3).is_err());
        assert_eq!(g.permute(&[2, 1, 0]).unwrap(), g.invert());
        assert!(g.permute(&[0, 0, 1]).is_err());
    }

    #[test]
    fn empty_phase_gives_plain_integrals() {
        let g = ProductTestFunction::new(vec![packet(0.0, 1.0, 0.5, 0.2, 0.0), packet(0.0, -1.0, 0.3, 0.0, 0.1)]);
        let gamma = RapidityLayout::zeros(2, &[0]).unwrap();
        let r = momentum_transform(&g, &gamma, 1.0).unwrap();
        let expect = g.factors[0].integral() * g.factors[1].integral();
        assert!((r - expect).norm() < 1e-15);
    }

    #[test]
    fn reduced_momenta_layout_k3() {
        let gamma = RapidityLayout::from_real_blocks(3, &[vec![0.0], vec![], vec![0.0, 0.0]]).unwrap();
        let p = reduced_momenta(&gamma, 1.0);
        // P_1 collects γ^(21), γ^(31); P_2 collects γ^(31), γ^(32).
        assert!((p[0].p0.re - 1.0).abs() < 1e-15);
        assert!((p[1].p0.re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn l_map_matches_r() {
        let g = ProductTestFunction::new(vec![
            packet(0.1, 0.4, 0.6, 0.3, -0.2),
            packet(-0.2, -0.5, 0.4, 0.0, 0.5),
            packet(0.3, 0.1, 0.8, -0.4, 0.1).with_amplitude(Complex64::new(0.0, 2.0)),
        ]);
        let h = l_map(&g).unwrap();
        let gamma = RapidityLayout::from_real_blocks(3, &[vec![0.3], vec![-0.4], vec![0.9, 0.1]]).unwrap();
        let direct = momentum_transform(&g, &gamma, 1.0).unwrap();
        let reduced = reduced_transform(&h, &gamma, 1.0).unwrap();
        assert!((direct - reduced).norm() < 1e-10 * direct.norm().max(1e-300), "{direct} vs {reduced}");
    }
}
