//! Complex log-Gamma, Barnes log-G and the two-body form factor.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, QuadConfig};

const I: Complex64 = Complex64::new(0.0, 1.0);
const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// ζ'(−1) = 1/12 − ln A with A the Glaisher–Kinkelin constant.
const ZETA_PRIME_M1: f64 = -0.165_421_143_700_450_93;
/// Below this real part both asymptotic series are used only after shifting.
const ASYMPTOTIC_RE: f64 = 10.0;

/// B_2, B_4, ..., B_26.
const BERNOULLI_EVEN: [f64; 13] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
];

/// Model constants: the coupling in its two equivalent forms and the particle mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub b: f64,
    pub b_hat: f64,
    pub g: f64,
    pub m: f64,
}

impl CouplingParams {
    /// Builds the parameters from b ∈ (0, 1/2]. At b = 1/2 the coupling is infinite.
    pub fn from_b(b: f64, m: f64) -> Result<Self> {
        if !(b > 0.0 && b <= 0.5) {
            return Err(Error::InvalidParam(format!("b = {b} outside (0, 1/2]")));
        }
        Self::check_mass(m)?;
        let g = if b == 0.5 {
            f64::INFINITY
        } else {
            (8.0 * PI * 2.0 * b / (1.0 - 2.0 * b)).sqrt()
        };
        Ok(Self { b, b_hat: 0.5 - b, g, m })
    }

    pub fn from_g(g: f64, m: f64) -> Result<Self> {
        if !(g > 0.0) {
            return Err(Error::InvalidParam(format!("g = {g} must be positive")));
        }
        Self::check_mass(m)?;
        let b = if g.is_infinite() {
            0.5
        } else {
            0.5 * g * g / (8.0 * PI + g * g)
        };
        Ok(Self { b, b_hat: 0.5 - b, g, m })
    }

    fn check_mass(m: f64) -> Result<()> {
        if m > 0.0 && m.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!("mass {m} must be positive")))
        }
    }

    /// b recomputed from g; agrees with `self.b` to rounding.
    pub fn b_from_g(&self) -> f64 {
        if self.g.is_infinite() {
            0.5
        } else {
            0.5 * self.g * self.g / (8.0 * PI + self.g * self.g)
        }
    }

    pub fn sin_2pi_b(&self) -> f64 {
        (2.0 * PI * self.b).sin()
    }
}

fn nonpositive_integer(z: Complex64) -> bool {
    let r = z.re.round();
    r <= 0.0 && (z - r).norm() < 1e-14
}

fn stirling_log_gamma(w: Complex64) -> Complex64 {
    let mut series = Complex64::new(0.0, 0.0);
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut pow = inv;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        let k2 = 2.0 * (k as f64 + 1.0);
        series += pow * (b / (k2 * (k2 - 1.0)));
        pow *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * LN_2PI + series
}

/// Asymptotic expansion of log G(u + 1) for large |u|.
fn asymptotic_log_g1(u: Complex64) -> Complex64 {
    let ln_u = u.ln();
    let u2 = u * u;
    let inv2 = u2.inv();
    let mut pow = inv2;
    let mut series = Complex64::new(0.0, 0.0);
    for (k, b2k) in BERNOULLI_EVEN.iter().enumerate().take(12).skip(1) {
        let kf = k as f64;
        series += pow * (b2k / (4.0 * kf * (kf + 1.0)));
        pow *= inv2;
    }
    (u2 * 0.5 - 1.0 / 12.0) * ln_u - u2 * 0.75 + u * (0.5 * LN_2PI) + ZETA_PRIME_M1 + series
}

/// Principal-branch log Γ(z), continued analytically off the negative real axis.
///
/// Shifts upward with the recursion until the Stirling series is accurate,
/// which also covers Re z < 0 without a reflection formula.
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if !z.is_finite() || nonpositive_integer(z) {
        return Err(Error::Pole { function: "log_gamma", at: z });
    }
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.re < ASYMPTOTIC_RE + 5.0 {
        shift += w.ln();
        w += 1.0;
    }
    Ok(stirling_log_gamma(w) - shift)
}

/// log G(z) determined modulo 2πi. This is all that exponentiated products need.
fn log_barnes_g_mod(z: Complex64) -> Result<Complex64> {
    if !z.is_finite() {
        return Err(Error::InvalidParam(format!("non-finite Barnes G argument {z}")));
    }
    if nonpositive_integer(z) {
        return Err(Error::ZeroOfG { at: z });
    }
    let n = (ASYMPTOTIC_RE - z.re).ceil().max(0.0) as usize;
    let w = z + n as f64;
    // Σ (j+1) log(z+j) accumulated as a product, flushed to the log before overflow.
    let mut acc = Complex64::new(0.0, 0.0);
    let mut prod = Complex64::new(1.0, 0.0);
    for j in 0..n {
        let f = z + j as f64;
        if f.norm() < 1e-300 {
            return Err(Error::ZeroOfG { at: z });
        }
        prod *= f.powi(j as i32 + 1);
        let mag = prod.norm();
        if !(1e-150..=1e150).contains(&mag) {
            acc += prod.ln();
            prod = Complex64::new(1.0, 0.0);
        }
    }
    acc += prod.ln();
    Ok(asymptotic_log_g1(w - 1.0) - stirling_log_gamma(w) * n as f64 + acc)
}

fn wrap_imag(z: Complex64) -> Complex64 {
    let two_pi = 2.0 * PI;
    let mut im = z.im - two_pi * (z.im / two_pi).round();
    if im <= -PI {
        im += two_pi;
    }
    Complex64::new(z.re, im)
}

/// Principal value of log G(z) for the Barnes G-function, imaginary part in (−π, π].
///
/// Recurses upward into Re z ≥ 10 and applies the large-argument expansion
/// of log G there; small positive integers are summed exactly. The zeros at
/// z = 0, −1, −2, ... are reported as errors.
pub fn log_barnes_g(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re.fract() == 0.0 && (1.0..=64.0).contains(&z.re) {
        // G(n) = ∏_{k<n−1} k!, so log G(n) = Σ_{j=1}^{n−2} (n−1−j) ln j.
        let n = z.re as usize;
        let re: f64 = (1..n.saturating_sub(1)).map(|j| (n - 1 - j) as f64 * (j as f64).ln()).sum();
        return Ok(Complex64::new(re, 0.0));
    }
    log_barnes_g_mod(z).map(wrap_imag)
}

/// Log of the eight-factor Barnes G ratio, or `None` when a numerator factor vanishes.
fn log_g_ratio(beta: Complex64, p: &CouplingParams) -> Result<Option<Complex64>> {
    let z = I * beta / (2.0 * PI);
    let (b, bh) = (p.b, p.b_hat);
    let den = [b - z, 1.0 + b + z, bh - z, 1.0 + bh + z];
    let num = [1.0 - b - z, 2.0 - b + z, 1.0 - bh - z, 2.0 - bh + z];
    let mut acc = Complex64::new(0.0, 0.0);
    for d in den {
        acc -= log_barnes_g_mod(d).map_err(|e| match e {
            Error::ZeroOfG { .. } => Error::Pole { function: "two_body_F", at: beta },
            other => other,
        })?;
    }
    for n in num {
        match log_barnes_g_mod(n) {
            Ok(v) => acc += v,
            Err(Error::ZeroOfG { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(acc))
}

/// Minimal two-body form factor F(β) with its regular companion F(β)/sinh β.
#[derive(Debug, Clone, Copy)]
pub struct TwoBody {
    pub f: Complex64,
    /// F(β)/sinh β. Finite at β = 0, infinite at the kinematic point β = iπ.
    pub f_over_sinh: Complex64,
}

/// Evaluates F and F/sinh from one Barnes G ratio.
///
/// Uses 1/(Γ(1+z)Γ(−z)) = −sin(πz)/π with z = iβ/2π, so no Gamma
/// function has to be evaluated at the zero of F at β = 0.
pub fn two_body(beta: Complex64, p: &CouplingParams) -> Result<TwoBody> {
    let ratio = match log_g_ratio(beta, p)? {
        Some(l) => l.exp(),
        None => Complex64::new(0.0, 0.0),
    };
    let half = beta * 0.5;
    let f = -I * half.sinh() / PI * ratio;
    let ch = half.cosh();
    let f_over_sinh = if ch.norm() < 1e-300 {
        Complex64::new(f64::INFINITY, 0.0)
    } else {
        -I * ratio / (2.0 * PI * ch)
    };
    Ok(TwoBody { f, f_over_sinh })
}

/// The two-body form factor F(β): the Barnes G ratio over Γ(1+z)Γ(−z), z = iβ/2π.
pub fn two_body_f(beta: Complex64, p: &CouplingParams) -> Result<Complex64> {
    two_body(beta, p).map(|t| t.f)
}

/// Modified Bessel K₀(x) for x > 0 from ∫₀^∞ e^{−x cosh t} dt.
pub fn bessel_k0(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParam(format!("K0 needs x > 0, got {x}")));
    }
    // e^{−x cosh t} < e^{−745} beyond this point.
    let upper = (745.0 / x).max(1.0).acosh() + 1.0;
    let cfg = QuadConfig { abs_tol: 1e-300, rel_tol: 1e-14, initial_panels: 4, ..Default::default() };
    let est = integrate_1d(|t| Ok(Complex64::new((-x * t.cosh()).exp(), 0.0)), 0.0, upper, &cfg)?;
    Ok(est.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn log_gamma_classical_values() {
        assert!(log_gamma(c(1.0, 0.0)).unwrap().norm() < 1e-15);
        let half = log_gamma(c(0.5, 0.0)).unwrap();
        assert!((half - c(PI.sqrt().ln(), 0.0)).norm() < 1e-14, "{half}");
        assert!(matches!(log_gamma(c(-3.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn log_gamma_factorial() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            let v = log_gamma(c(n as f64 + 1.0, 0.0)).unwrap();
            fact *= n as f64;
            assert!((v.re - fact.ln()).abs() < 1e-13 * fact.ln().max(1.0), "n = {n}");
        }
    }

    #[test]
    fn barnes_g_small_integers() {
        assert_eq!(log_barnes_g(c(1.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert_eq!(log_barnes_g(c(2.0, 0.0)).unwrap(), c(0.0, 0.0));
        // The exact branch and the asymptotic path agree just off the integers.
        let off = log_barnes_g(c(4.0, 1e-300)).unwrap();
        assert!((off - c(2f64.ln(), 0.0)).norm() < 1e-13);
        assert!((log_barnes_g(c(4.0, 0.0)).unwrap() - c(2f64.ln(), 0.0)).norm() < 1e-13);
        // G(5) = 1!·2!·3! = 12
        assert!((log_barnes_g(c(5.0, 0.0)).unwrap() - c(12f64.ln(), 0.0)).norm() < 1e-13);
        assert!(matches!(log_barnes_g(c(-2.0, 0.0)), Err(Error::ZeroOfG { .. })));
    }

    #[test]
    fn coupling_round_trip() {
        let p = CouplingParams::from_b(0.3, 1.0).unwrap();
        let q = CouplingParams::from_g(p.g, 1.0).unwrap();
        assert!((p.b - q.b).abs() < 1e-15);
        assert!((p.b_from_g() - p.b).abs() < 1e-15 * p.b);
        assert_eq!(p.b + p.b_hat, 0.5);
        assert!(CouplingParams::from_b(0.6, 1.0).is_err());
        assert!(CouplingParams::from_b(0.2, -1.0).is_err());
    }

    #[test]
    fn f_vanishes_at_origin() {
        let p = CouplingParams::from_b(0.25, 1.0).unwrap();
        assert_eq!(two_body_f(c(0.0, 0.0), &p).unwrap(), c(0.0, 0.0));
        // Symmetric offset limit; F(−δ) ≈ −F(δ) because S(0) = −1.
        let d = 1e-6;
        let limit = 0.5 * (two_body_f(c(d, 0.0), &p).unwrap() + two_body_f(c(-d, 0.0), &p).unwrap());
        assert!(limit.norm() < 1e-6);
    }
}
