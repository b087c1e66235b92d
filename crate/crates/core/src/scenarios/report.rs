use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{FieldValue, ScenarioConfig, ScenarioKind, FIELDS};
use crate::ratemodels::RateCurve;

/// Loss contributions in dB. Every component is non-negative and the total
/// is their plain sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LossBudget {
    pub chain_diffraction: f64,
    pub ground_diffraction: f64,
    pub reflection: f64,
    pub atmospheric: f64,
    pub turbulence_excess: f64,
    pub pointing: f64,
    pub error_excess: f64,
    /// Detector and source inefficiency allowance, or a lumped channel loss.
    pub other: f64,
}

impl LossBudget {
    pub const COMPONENTS: [&'static str; 8] = [
        "chain_diffraction",
        "ground_diffraction",
        "reflection",
        "atmospheric",
        "turbulence_excess",
        "pointing",
        "error_excess",
        "other",
    ];

    pub fn components(&self) -> [(&'static str, f64); 8] {
        let v = [
            self.chain_diffraction,
            self.ground_diffraction,
            self.reflection,
            self.atmospheric,
            self.turbulence_excess,
            self.pointing,
            self.error_excess,
            self.other,
        ];
        std::array::from_fn(|i| (Self::COMPONENTS[i], v[i]))
    }

    pub fn total(&self) -> f64 {
        self.components().iter().map(|c| c.1).sum()
    }

    pub fn diffraction_total(&self) -> f64 {
        self.chain_diffraction + self.ground_diffraction
    }

    /// Everything outside diffraction and reflection.
    pub fn other_aggregate(&self) -> f64 {
        self.atmospheric + self.turbulence_excess + self.pointing + self.error_excess + self.other
    }

    pub fn validate(&self) -> std::result::Result<(), super::StageError> {
        for (name, v) in self.components() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(super::StageError::Other(format!(
                    "budget component {name} = {v} dB is not a finite non-negative loss"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedBudget {
    pub name: String,
    pub budget: LossBudget,
    pub total: f64,
}

impl NamedBudget {
    pub fn new(name: &str, budget: LossBudget) -> Self {
        Self {
            name: name.into(),
            total: budget.total(),
            budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultValue {
    pub name: String,
    pub value: f64,
    pub unit: String,
}

/// Summary of one ensemble quantity. Percentiles interpolate linearly
/// between order statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub quantity: String,
    pub trials: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single trial.
    pub std: f64,
    pub p10: f64,
    pub p90: f64,
    pub samples: Vec<f64>,
}

impl EnsembleStats {
    pub fn from_samples(quantity: &str, samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            quantity: quantity.into(),
            trials: n,
            mean,
            std,
            p10: percentile(&sorted, 0.10),
            p90: percentile(&sorted, 0.90),
            samples: samples.to_vec(),
        }
    }
}

pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub hop: usize,
    pub cum_db: f64,
}

/// A swept quantity against the swept parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub tag: String,
    pub unit: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn of(cfg: &ScenarioConfig) -> Self {
        Self {
            config_hash: config_hash(cfg),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: ScenarioKind,
    pub budgets: Vec<NamedBudget>,
    /// Headline result first.
    pub results: Vec<ResultValue>,
    pub curves: Vec<RateCurve>,
    pub ensemble: Vec<EnsembleStats>,
    pub trace: Vec<TracePoint>,
    pub sweep: Option<String>,
    pub series: Vec<Series>,
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(scenario: ScenarioKind) -> Self {
        Self {
            scenario,
            budgets: Vec::new(),
            results: Vec::new(),
            curves: Vec::new(),
            ensemble: Vec::new(),
            trace: Vec::new(),
            sweep: None,
            series: Vec::new(),
            notes: Vec::new(),
            provenance: Provenance::default(),
        }
    }

    pub fn push_result(&mut self, name: &str, value: f64, unit: &str) {
        self.results.push(ResultValue {
            name: name.into(),
            value,
            unit: unit.into(),
        });
    }

    pub fn result(&self, name: &str) -> Option<f64> {
        self.results
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.value)
    }

    pub fn stats(&self, quantity: &str) -> Option<&EnsembleStats> {
        self.ensemble.iter().find(|s| s.quantity == quantity)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Canonical `path = value` listing of every field, SI units, in registry
/// order. Floats print in shortest round-trip form.
pub fn canonical_text(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    for f in FIELDS {
        s.push_str(f.path);
        s.push_str(" = ");
        s.push_str(&render(&(f.get)(cfg)));
        s.push('\n');
    }
    s
}

fn render(v: &FieldValue) -> String {
    match v {
        FieldValue::Num(x) => format!("{x:?}"),
        FieldValue::Int(i) => i.to_string(),
        FieldValue::Text(t) => format!("{t:?}"),
        FieldValue::List(l) => {
            let parts: Vec<String> = l.iter().map(|x| format!("{x:?}")).collect();
            format!("[{}]", parts.join(", "))
        }
        FieldValue::Table(t) => {
            let parts: Vec<String> = t.iter().map(|(a, b)| format!("{a:?}:{b:?}")).collect();
            format!("{{{}}}", parts.join(", "))
        }
    }
}

pub fn config_hash(cfg: &ScenarioConfig) -> String {
    hex_digest(canonical_text(cfg).as_bytes())
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_endpoints() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 5.0);
        assert!((percentile(&v, 0.1) - 1.4).abs() < 1e-12);
    }

    #[test]
    fn single_sample_stats() {
        let s = EnsembleStats::from_samples("x", &[2.5]);
        assert_eq!((s.mean, s.std, s.p10, s.p90), (2.5, 0.0, 2.5, 2.5));
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = super::super::preset("asqn_entanglement").unwrap();
        let mut b = a.clone();
        b.link.zenith_deg = 1.0;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
    }
}
