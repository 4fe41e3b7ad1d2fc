//! JSON run configuration for the command-line tool.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlators::CorrelatorConfig;
use crate::error::{Error, Result};
use crate::form_factors::OperatorSpec;
use crate::minkowski::{GaussianPacket, ProductTestFunction, TwoVector};
use crate::quadrature::QuadConfig;
use crate::special_fn::CouplingParams;

/// Coupling given either as b or as g; b wins when both are set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDecl {
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub g: Option<f64>,
    #[serde(default = "unit_mass")]
    pub mass: f64,
}

fn unit_mass() -> f64 {
    1.0
}

impl Default for ParamsDecl {
    fn default() -> Self {
        Self { b: Some(0.25), g: None, mass: 1.0 }
    }
}

/// A built-in operator by name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorDecl {
    Field,
    Synthetic {
        label: String,
        #[serde(default)]
        spin: f64,
        kappa: Complex64,
        coeffs: Vec<Complex64>,
        #[serde(default)]
        growth: f64,
    },
}

impl OperatorDecl {
    pub fn build(&self, params: &CouplingParams) -> Result<OperatorSpec> {
        match self {
            OperatorDecl::Field => OperatorSpec::field(params),
            OperatorDecl::Synthetic { label, spin, kappa, coeffs, growth } => {
                if spin.fract() != 0.0 {
                    return Err(Error::Config(format!("synthetic operator {label}: spin must be an integer")));
                }
                Ok(OperatorSpec::synthetic(label, *spin, *kappa, coeffs.clone(), *growth))
            }
        }
    }
}

/// An isotropic Gaussian packet.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketDecl {
    pub center: [f64; 2],
    pub sigma: f64,
    #[serde(default)]
    pub wavevector: [f64; 2],
    #[serde(default = "unit")]
    pub amplitude: Complex64,
}

fn unit() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl PacketDecl {
    pub fn build(&self) -> Result<GaussianPacket> {
        let p = GaussianPacket::isotropic(
            TwoVector::new(self.center[0], self.center[1]),
            self.sigma,
            TwoVector::new(self.wavevector[0], self.wavevector[1]),
        )?;
        Ok(p.with_amplitude(self.amplitude))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    /// Largest total particle number |n| of partial sums.
    pub n_total: usize,
    /// Largest entry of a truncation vector.
    pub r_max: usize,
    pub dim_cap: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self { n_total: 2, r_max: 1, dim_cap: 6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureDecl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
    pub qmc_budget: usize,
    /// Fixed rapidity cutoff; derived from the test functions when absent.
    pub gamma_max: Option<f64>,
}

impl Default for QuadratureDecl {
    fn default() -> Self {
        let q = QuadConfig::default();
        Self { abs_tol: q.abs_tol, rel_tol: q.rel_tol, max_evals: q.max_evals, qmc_budget: q.qmc_budget, gamma_max: None }
    }
}

/// A k-point correlator: operator and packet indices into the declared lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelatorDecl {
    pub operators: Vec<usize>,
    pub packets: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsDecl,
    pub operators: Vec<OperatorDecl>,
    pub test_functions: Vec<PacketDecl>,
    pub correlator: Option<CorrelatorDecl>,
    pub caps: Caps,
    pub quadrature: QuadratureDecl,
    pub eps_schedule: Vec<f64>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ParamsDecl::default(),
            operators: vec![OperatorDecl::Field],
            test_functions: vec![
                PacketDecl { center: [0.0, 0.0], sigma: 0.5, wavevector: [0.3, -0.2], amplitude: unit() },
                PacketDecl { center: [0.2, 1.0], sigma: 0.5, wavevector: [0.0, 0.1], amplitude: unit() },
            ],
            correlator: Some(CorrelatorDecl { operators: vec![0, 0], packets: vec![0, 1] }),
            caps: Caps::default(),
            quadrature: QuadratureDecl::default(),
            eps_schedule: CorrelatorConfig::default().eps_schedule,
            seed: QuadConfig::default().seed,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.caps.n_total == 0 || self.caps.r_max == 0 || self.caps.dim_cap == 0 {
            return Err(Error::Config("all caps must be positive".into()));
        }
        if self.eps_schedule.is_empty() || self.eps_schedule.windows(2).any(|w| w[1] >= w[0]) || self.eps_schedule[0] <= 0.0 {
            return Err(Error::Config("eps_schedule must be positive and strictly decreasing".into()));
        }
        if !(self.quadrature.abs_tol > 0.0 && self.quadrature.rel_tol > 0.0) {
            return Err(Error::Config("quadrature tolerances must be positive".into()));
        }
        if let Some(c) = &self.correlator {
            if c.operators.len() != c.packets.len() || c.operators.is_empty() {
                return Err(Error::Config("correlator needs one packet per operator".into()));
            }
            if c.operators.iter().any(|&i| i >= self.operators.len()) || c.packets.iter().any(|&i| i >= self.test_functions.len()) {
                return Err(Error::Config("correlator refers to an undeclared operator or packet".into()));
            }
        }
        self.coupling().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn coupling(&self) -> Result<CouplingParams> {
        match (self.params.b, self.params.g) {
            (Some(b), _) => CouplingParams::from_b(b, self.params.mass),
            (None, Some(g)) => CouplingParams::from_g(g, self.params.mass),
            (None, None) => Err(Error::Config("params needs b or g".into())),
        }
    }

    pub fn correlator_config(&self) -> CorrelatorConfig {
        let quad = QuadConfig {
            abs_tol: self.quadrature.abs_tol,
            rel_tol: self.quadrature.rel_tol,
            max_evals: self.quadrature.max_evals,
            qmc_budget: self.quadrature.qmc_budget,
            seed: self.seed,
            ..QuadConfig::default()
        };
        CorrelatorConfig {
            quad,
            eps_schedule: self.eps_schedule.clone(),
            gamma_max: self.quadrature.gamma_max,
            dim_cap: self.caps.dim_cap,
            ..CorrelatorConfig::default()
        }
    }

    pub fn operator_specs(&self, params: &CouplingParams) -> Result<Vec<OperatorSpec>> {
        self.operators.iter().map(|o| o.build(params)).collect()
    }

    pub fn packets(&self) -> Result<Vec<GaussianPacket>> {
        self.test_functions.iter().map(PacketDecl::build).collect()
    }

    /// Operators and product test function of the declared correlator.
    pub fn correlator_setup(&self, params: &CouplingParams) -> Result<(Vec<OperatorSpec>, ProductTestFunction)> {
        let c = self.correlator.as_ref().ok_or_else(|| Error::Config("no correlator declared".into()))?;
        let specs = self.operator_specs(params)?;
        let packets = self.packets()?;
        Ok((
            c.operators.iter().map(|&i| specs[i].clone()).collect(),
            ProductTestFunction::new(c.packets.iter().map(|&i| packets[i]).collect()),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back.caps.n_total, cfg.caps.n_total);
        assert_eq!(back.test_functions.len(), 2);
    }

    #[test]
    fn synthetic_declaration() {
        let text = r#"{"operators": [{"kind": "synthetic", "label": "A", "spin": 1, "kappa": [0.8, 0], "coeffs": [[0.5, 0], [0, 0.3]]}]}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        let p = cfg.coupling().unwrap();
        let specs = cfg.operator_specs(&p).unwrap();
        assert_eq!(specs[0].label, "A");
        assert_eq!(specs[0].spin, 1.0);
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(matches!(RunConfig::from_json("{"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"caps": {"n_total": 0}}"#), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"eps_schedule": [0.1, 0.2]}"#), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"params": {"b": 0.7}}"#), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"unknown": 1}"#), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json(r#"{"params": {"mass": 2}}"#), Err(Error::Config(_))));
        let by_g = RunConfig::from_json(r#"{"params": {"g": 2.0}}"#).unwrap();
        assert!((by_g.coupling().unwrap().g - 2.0).abs() < 1e-12);
        assert!(matches!(
            RunConfig::from_json(r#"{"correlator": {"operators": [0, 3], "packets": [0, 1]}}"#),
            Err(Error::Config(_))
        ));
    }
}
