//! Function specs (TOML, schema 1) and their content digest.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use minmod_core::{
    lower_order_half_bands, minimal_type_bands, realize_bands, regular_function, BandSequence, CountingLaw, DeltaSpec,
    DensityRule, EntireProductFunction, EpsSpec, Error, EvalSettings, ZeroDistribution,
};

use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub schema: u32,
    #[serde(default)]
    pub log_c: f64,
    #[serde(flatten)]
    pub family: Family,
    #[serde(default, skip_serializing_if = "EvalOverrides::is_empty")]
    pub eval: EvalOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    /// Zeros `-t` for each listed `t > 0`.
    Explicit { zeros: Vec<f64> },
    /// `t_n = n^exponent`.
    Power { exponent: f64 },
    /// Continuous counting `n(t) = scale t^exponent`.
    AnalyticPower { scale: f64, exponent: f64 },
    Regular { eps: EpsSpec, max_log10_r: f64 },
    BandsMinimalType {
        delta: DeltaSpec,
        seed_log_a0: f64,
        seed_log_b0: f64,
        n_bands: usize,
        #[serde(default = "default_moderation")]
        moderation_exponent: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<DensityRule>,
        #[serde(default = "default_budget")]
        budget: u64,
        #[serde(default)]
        drop_first: usize,
    },
    BandsLowerHalf {
        seed_log_a0: f64,
        seed_log_b0: f64,
        n_bands: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<DensityRule>,
        #[serde(default = "default_budget")]
        budget: u64,
        #[serde(default)]
        drop_first: usize,
    },
}

fn default_moderation() -> f64 {
    10.0
}

fn default_budget() -> u64 {
    100_000
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_terms: Option<u64>,
}

impl EvalOverrides {
    fn is_empty(&self) -> bool {
        self.rel_tolerance.is_none() && self.max_terms.is_none()
    }
}

/// A spec turned into something evaluable.
pub struct Built {
    pub function: EntireProductFunction,
    pub bands: Option<BandSequence>,
    /// Set when the band recurrence stopped at the representation horizon.
    pub horizon: Option<usize>,
}

impl FunctionSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: FunctionSpec = toml::from_str(text).map_err(|e| CliError::Spec(format!("spec parse error: {e}")))?;
        if spec.schema != SCHEMA {
            return Err(CliError::Spec(format!("field `schema`: unsupported version {} (expected {SCHEMA})", spec.schema)));
        }
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn digest(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn settings(&self, tolerance: Option<f64>) -> Result<EvalSettings, CliError> {
        let mut s = EvalSettings::default();
        if let Some(t) = self.eval.rel_tolerance {
            s.rel_tolerance = t;
        }
        if let Some(m) = self.eval.max_terms {
            s.max_terms = m;
        }
        if let Some(t) = tolerance {
            s.rel_tolerance = t;
        }
        s.validate().map_err(|e| CliError::Spec(format!("field `eval`: {e}")))?;
        Ok(s)
    }

    pub fn build(&self) -> Result<Built, CliError> {
        let field = |name: &str| {
            let name = name.to_string();
            move |e: Error| match e {
                Error::NonConvergent(_) | Error::UnboundedTail(_) => CliError::from(e),
                other => CliError::Spec(format!("field `{name}`: {other}")),
            }
        };
        if !self.log_c.is_finite() {
            return Err(CliError::Spec("field `log_c`: must be finite".into()));
        }
        let plain = |dist: Result<ZeroDistribution, Error>, name: &str| -> Result<Built, CliError> {
            let d = dist.map_err(field(name))?;
            Ok(Built { function: EntireProductFunction::new(self.log_c, d).map_err(field(name))?, bands: None, horizon: None })
        };
        match &self.family {
            Family::Explicit { zeros } => plain(ZeroDistribution::explicit(zeros), "zeros"),
            Family::Power { exponent } => {
                if !(*exponent > 1.0 && exponent.is_finite()) {
                    return Err(CliError::Spec(format!("field `exponent`: {exponent} must exceed 1 (order < 1)")));
                }
                plain(Ok(ZeroDistribution::PowerSequence { exponent: *exponent }), "exponent")
            }
            Family::AnalyticPower { scale, exponent } => {
                if !(*scale > 0.0 && *exponent > 0.0 && *exponent < 1.0) {
                    return Err(CliError::Spec("fields `scale`, `exponent`: need scale > 0 and 0 < exponent < 1".into()));
                }
                plain(
                    Ok(ZeroDistribution::AnalyticCounting(CountingLaw::Power { scale: *scale, exponent: *exponent })),
                    "exponent",
                )
            }
            Family::Regular { eps, max_log10_r } => {
                let f = regular_function(eps, max_log10_r * std::f64::consts::LN_10).map_err(field("eps"))?;
                let function = EntireProductFunction { log_c: self.log_c, ..f };
                Ok(Built { function, bands: None, horizon: None })
            }
            Family::BandsMinimalType {
                delta,
                seed_log_a0,
                seed_log_b0,
                n_bands,
                moderation_exponent,
                density,
                budget,
                drop_first,
            } => {
                let (seq, horizon) = settle(minimal_type_bands(
                    delta,
                    *seed_log_a0,
                    *seed_log_b0,
                    *n_bands,
                    *moderation_exponent,
                ))
                .map_err(field("delta"))?;
                let rule = density.clone().unwrap_or(DensityRule::GrowthCap { delta: delta.clone() });
                self.realize(seq, horizon, &rule, *budget, *drop_first)
            }
            Family::BandsLowerHalf { seed_log_a0, seed_log_b0, n_bands, density, budget, drop_first } => {
                let (seq, horizon) =
                    settle(lower_order_half_bands(*seed_log_a0, *seed_log_b0, *n_bands)).map_err(field("seed_log_a0"))?;
                let rule = density.clone().unwrap_or(DensityRule::Balanced);
                self.realize(seq, horizon, &rule, *budget, *drop_first)
            }
        }
    }

    fn realize(
        &self,
        seq: BandSequence,
        horizon: Option<usize>,
        rule: &DensityRule,
        budget: u64,
        drop_first: usize,
    ) -> Result<Built, CliError> {
        let real = realize_bands(&seq, rule, budget, drop_first).map_err(|e| match e {
            Error::NonConvergent(_) => CliError::from(e),
            other => CliError::Spec(format!("field `density`: {other}")),
        })?;
        let function = EntireProductFunction { log_c: self.log_c, ..real.function };
        Ok(Built { function, bands: Some(seq), horizon })
    }
}

/// Accepts a horizon stop as a (shorter) sequence.
pub fn settle(r: Result<BandSequence, Error>) -> Result<(BandSequence, Option<usize>), Error> {
    match r {
        Ok(s) => Ok((s, None)),
        Err(Error::OverflowHorizon { representable, partial }) => Ok((*partial, Some(representable))),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_digest_are_stable() {
        let text = "schema = 1\nkind = \"explicit\"\nzeros = [1.0, 4.0, 9.0]\n";
        let spec = FunctionSpec::parse(text).unwrap();
        let again = FunctionSpec::parse(&spec.to_toml()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(spec.digest(), again.digest());
        assert_eq!(spec.digest().len(), 64);
    }

    #[test]
    fn nested_specs_parse() {
        let text = r#"
schema = 1
kind = "regular"
max_log10_r = 4.0
eps = { form = "k-family", alpha = 1.0, beta = 1.0, depth = 2 }
"#;
        let spec = FunctionSpec::parse(text).unwrap();
        assert!(spec.build().is_ok());
        let bands = r#"
schema = 1
kind = "bands-minimal-type"
delta = { form = "inverse-log", scale = 0.01 }
seed_log_a0 = 1.0
seed_log_b0 = 2.0
n_bands = 5
moderation_exponent = 2.0
density = { rule = "balanced" }
"#;
        let built = FunctionSpec::parse(bands).unwrap().build().unwrap();
        assert!(built.horizon.is_some());
        assert!(built.function.valid_up_to.is_some());
    }

    #[test]
    fn negative_zero_names_field() {
        let spec = FunctionSpec::parse("schema = 1\nkind = \"explicit\"\nzeros = [1.0, -4.0]\n").unwrap();
        match spec.build() {
            Err(CliError::Spec(msg)) => assert!(msg.contains("`zeros`"), "{msg}"),
            _ => panic!("expected a spec error"),
        }
    }

    #[test]
    fn wrong_schema_rejected() {
        assert!(matches!(FunctionSpec::parse("schema = 2\nkind = \"power\"\nexponent = 2.0\n"), Err(CliError::Spec(_))));
    }
}
