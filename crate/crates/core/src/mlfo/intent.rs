//! The declarative ML intent: a JSON document describing the use case, model, pipeline
//! placement, policies, monitoring and normalization the orchestrator should realize.

use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::assoc::{DEFAULT_INDIFFERENCE_MBPS, FEATURE_NAMES};
use crate::nn::{NormSchema, TrainingConfig};
use crate::pipeline::{check_hosts, check_order, HostRole, PolicyRule, Role, StageKind, StageSpec};
use crate::sandbox::{DivergenceKnobs, SandboxConfig, ScenarioWeight, ValidationThresholds};
use crate::underlay::RadioConfig;

/// Use cases the orchestrator knows how to realize.
pub const KNOWN_USE_CASES: &[&str] = &["ap_association"];

/// The example intent shipped with the crate.
pub const EXAMPLE_INTENT: &str = include_str!("../../intents/ap_association.json");

/// The published JSON schema of the intent format.
pub const INTENT_SCHEMA: &str = include_str!("../../schemas/ml_intent.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub layer_sizes: Vec<usize>,
    pub training: TrainingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    pub hosts: Vec<HostRole>,
    pub stages: Vec<StageSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitoringSpec {
    /// Rolling window length, in ticks.
    pub eval_window: u64,
    pub retrain_rel_error_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandboxSpec {
    pub scenarios: Vec<ScenarioWeight>,
    /// Training episodes per collection window.
    pub episodes: usize,
    pub validation_episodes: usize,
    pub seed: u64,
    pub exploration_epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<DivergenceKnobs>,
}

impl SandboxSpec {
    /// Sandbox config for training-data generation against `radio`, with `seed`.
    pub fn training_config(&self, radio: RadioConfig, seed: u64) -> SandboxConfig {
        SandboxConfig {
            scenarios: self.scenarios.clone(),
            episodes: self.episodes,
            seed,
            exploration_epsilon: self.exploration_epsilon,
            divergence: self.divergence,
            radio,
            ..SandboxConfig::default()
        }
    }

    /// Sandbox config for pre-deployment validation.
    pub fn validation_config(&self, radio: RadioConfig) -> SandboxConfig {
        SandboxConfig {
            episodes: self.validation_episodes,
            ..self.training_config(radio, self.seed)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectionSpec {
    /// Labelled episodes the edge (underlay) sources contribute per window.
    pub underlay_episodes: usize,
    /// Training attempts before the instance is declared failed.
    pub max_training_attempts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementSpec {
    pub indifference_mbps: f64,
}

impl Default for PlacementSpec {
    fn default() -> Self {
        Self {
            indifference_mbps: DEFAULT_INDIFFERENCE_MBPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MLIntent {
    pub use_case: String,
    pub model_spec: ModelSpec,
    pub pipeline_spec: PipelineSpec,
    pub policies: Vec<PolicyRule>,
    pub monitoring: MonitoringSpec,
    pub norm_schema: NormSchema,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sandbox: Option<SandboxSpec>,
    pub validation: ValidationThresholds,
    pub collection: CollectionSpec,
    #[serde(default)]
    pub placement: PlacementSpec,
}

impl MLIntent {
    /// Whether synthetic training data is requested: a sandbox section and a sandbox-hosted source.
    pub fn wants_sandbox(&self) -> bool {
        self.sandbox.is_some()
            && self
                .pipeline_spec
                .stages
                .iter()
                .any(|s| s.kind == StageKind::Source && s.role == Role::Sandbox)
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("intent serializes")
    }

    pub fn example() -> Self {
        parse_intent(EXAMPLE_INTENT.as_bytes()).expect("shipped example intent is valid")
    }
}

/// One validation problem, located by a JSON path into the intent file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for IntentIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every problem found in an intent, not just the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntentErrors(pub Vec<IntentIssue>);

impl IntentErrors {
    pub fn mentions(&self, needle: &str) -> bool {
        self.0.iter().any(|i| i.to_string().contains(needle))
    }
}

impl fmt::Display for IntentErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} intent validation error(s):", self.0.len())?;
        for issue in &self.0 {
            writeln!(f, "  {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for IntentErrors {}

struct Checker {
    issues: Vec<IntentIssue>,
}

impl Checker {
    fn issue(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(IntentIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    /// Deserializes a required top-level section, recording a missing or malformed one.
    fn section<T: DeserializeOwned>(&mut self, root: &serde_json::Map<String, Value>, key: &str) -> Option<T> {
        let path = format!("$.{key}");
        match root.get(key) {
            None => {
                self.issue(path, format!("missing {key}"));
                None
            }
            Some(v) => match serde_json::from_value(v.clone()) {
                Ok(t) => Some(t),
                Err(e) => {
                    self.issue(path, e.to_string());
                    None
                }
            },
        }
    }

    fn optional<T: DeserializeOwned>(&mut self, root: &serde_json::Map<String, Value>, key: &str) -> Option<Option<T>> {
        match root.get(key) {
            None | Some(Value::Null) => Some(None),
            Some(_) => self.section(root, key).map(Some),
        }
    }
}

/// Parses and fully validates an intent file.
///
/// An empty file is treated as an empty document, so it reports every missing section.
pub fn parse_intent(file_bytes: &[u8]) -> Result<MLIntent, IntentErrors> {
    let mut c = Checker { issues: Vec::new() };
    let text = std::str::from_utf8(file_bytes).map_err(|_| {
        IntentErrors(vec![IntentIssue {
            path: "$".into(),
            message: "intent is not UTF-8".into(),
        }])
    })?;
    let root: Value = if text.trim().is_empty() {
        Value::Object(Default::default())
    } else {
        serde_json::from_str(text).map_err(|e| {
            IntentErrors(vec![IntentIssue {
                path: "$".into(),
                message: format!("malformed JSON: {e}"),
            }])
        })?
    };
    let Value::Object(root) = root else {
        return Err(IntentErrors(vec![IntentIssue {
            path: "$".into(),
            message: "intent must be a JSON object".into(),
        }]));
    };

    const KNOWN_KEYS: &[&str] = &[
        "use_case",
        "model_spec",
        "pipeline_spec",
        "policies",
        "monitoring",
        "norm_schema",
        "sandbox",
        "validation",
        "collection",
        "placement",
    ];
    for key in root.keys().filter(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        c.issue(format!("$.{key}"), "unknown field");
    }

    let use_case: Option<String> = c.section(&root, "use_case");
    let model_spec: Option<ModelSpec> = c.section(&root, "model_spec");
    let pipeline_spec: Option<PipelineSpec> = c.section(&root, "pipeline_spec");
    let policies = policies_section(&mut c, &root);
    let monitoring: Option<MonitoringSpec> = c.section(&root, "monitoring");
    let norm_schema: Option<NormSchema> = c.section(&root, "norm_schema");
    let sandbox: Option<Option<SandboxSpec>> = c.optional(&root, "sandbox");
    let validation: Option<ValidationThresholds> = c.section(&root, "validation");
    let collection: Option<CollectionSpec> = c.section(&root, "collection");
    let placement: Option<Option<PlacementSpec>> = c.optional(&root, "placement");

    if let Some(u) = &use_case {
        if !KNOWN_USE_CASES.contains(&u.as_str()) {
            c.issue("$.use_case", format!("unknown use_case `{u}`"));
        }
    }
    if let Some(m) = &model_spec {
        check_model(&mut c, m);
    }
    if let Some(p) = &pipeline_spec {
        if let Err(e) = check_hosts(&p.hosts) {
            c.issue("$.pipeline_spec.hosts", e.to_string());
        }
        if let Err(e) = check_order(&p.stages) {
            c.issue("$.pipeline_spec.stages", e.to_string());
        }
        for (i, s) in p.stages.iter().enumerate() {
            if !p.hosts.iter().any(|h| h.role == s.role) {
                c.issue(
                    format!("$.pipeline_spec.stages[{i}].role"),
                    format!("no {} host declared for the {} stage", s.role, s.kind),
                );
            }
        }
    }
    if let Some(m) = &monitoring {
        if m.eval_window == 0 {
            c.issue("$.monitoring.eval_window", "must be at least 1 tick");
        }
        let t = m.retrain_rel_error_threshold;
        if !(t > 0.0 && t < 1.0) {
            c.issue(
                "$.monitoring.retrain_rel_error_threshold",
                format!("{t} is outside (0, 1)"),
            );
        }
    }
    if let Some(s) = &norm_schema {
        check_schema(&mut c, s);
    }
    if let Some(Some(s)) = &sandbox {
        check_sandbox(&mut c, s);
    }
    if let Some(v) = &validation {
        if !v.gain_floor.is_finite() {
            c.issue("$.validation.gain_floor", "must be finite");
        }
        if !(v.min_throughput_ratio > 0.0) || !v.min_throughput_ratio.is_finite() {
            c.issue("$.validation.min_throughput_ratio", "must be positive");
        }
    }
    if let Some(col) = &collection {
        if col.max_training_attempts == 0 {
            c.issue("$.collection.max_training_attempts", "must be at least 1");
        }
    }
    if let Some(Some(p)) = &placement {
        if !(p.indifference_mbps >= 0.0) || !p.indifference_mbps.is_finite() {
            c.issue("$.placement.indifference_mbps", "must be a non-negative number");
        }
    }
    if let (Some(p), Some(None), Some(_)) = (&pipeline_spec, &sandbox, &use_case) {
        if p.stages.iter().any(|s| s.role == Role::Sandbox) {
            c.issue("$.sandbox", "sandbox-hosted stages need a sandbox section");
        }
    }

    if !c.issues.is_empty() {
        return Err(IntentErrors(c.issues));
    }
    Ok(MLIntent {
        use_case: use_case.expect("checked"),
        model_spec: model_spec.expect("checked"),
        pipeline_spec: pipeline_spec.expect("checked"),
        policies: policies.expect("checked"),
        monitoring: monitoring.expect("checked"),
        norm_schema: norm_schema.expect("checked"),
        sandbox: sandbox.expect("checked"),
        validation: validation.expect("checked"),
        collection: collection.expect("checked"),
        placement: placement.expect("checked").unwrap_or_default(),
    })
}

/// Policies are parsed one by one so each bad rule gets its own path.
fn policies_section(c: &mut Checker, root: &serde_json::Map<String, Value>) -> Option<Vec<PolicyRule>> {
    let Some(v) = root.get("policies") else {
        c.issue("$.policies", "missing policies");
        return None;
    };
    let Value::Array(items) = v else {
        c.issue("$.policies", "expected a list of policy rules");
        return None;
    };
    let before = c.issues.len();
    let mut rules = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let path = format!("$.policies[{i}]");
        let kind = item.get("kind").and_then(Value::as_str);
        let value = item.get("value").and_then(Value::as_f64);
        match (kind, value) {
            (Some(kind), Some(value)) => match kind.parse() {
                Ok(kind) => {
                    let rule = PolicyRule { kind, value };
                    match rule.validate() {
                        Ok(()) => rules.push(rule),
                        Err(e) => c.issue(format!("{path}.value"), e.to_string()),
                    }
                }
                Err(e) => c.issue(format!("{path}.kind"), e.to_string()),
            },
            _ => c.issue(path, "policy needs a string `kind` and a numeric `value`"),
        }
    }
    (c.issues.len() == before).then_some(rules)
}

fn check_model(c: &mut Checker, m: &ModelSpec) {
    let sizes = &m.layer_sizes;
    if sizes.len() < 2 || sizes.contains(&0) {
        c.issue(
            "$.model_spec.layer_sizes",
            "need at least input and output layers, all positive",
        );
    } else {
        if sizes[0] != FEATURE_NAMES.len() {
            c.issue(
                "$.model_spec.layer_sizes[0]",
                format!("input size must equal the {} association features", FEATURE_NAMES.len()),
            );
        }
        if sizes.last() != Some(&1) {
            c.issue("$.model_spec.layer_sizes", "output layer must have one unit");
        }
    }
    if let Err(e) = m.training.validate() {
        c.issue("$.model_spec.training", e.to_string());
    }
}

fn check_schema(c: &mut Checker, s: &NormSchema) {
    let names: Vec<&str> = s.names();
    if names != FEATURE_NAMES {
        c.issue(
            "$.norm_schema.features",
            format!("features must be {FEATURE_NAMES:?} in that order, got {names:?}"),
        );
    }
    for (i, r) in s.features.iter().enumerate() {
        if !(r.min < r.max) {
            c.issue(
                format!("$.norm_schema.features[{i}]"),
                format!("`{}` needs min < max", r.name),
            );
        }
    }
    if !(s.target.min < s.target.max) {
        c.issue("$.norm_schema.target", "target needs min < max");
    }
}

fn check_sandbox(c: &mut Checker, s: &SandboxSpec) {
    let total: f64 = s.scenarios.iter().map(|w| w.weight).sum();
    if s.scenarios.is_empty() || (total - 1.0).abs() > 1e-9 || s.scenarios.iter().any(|w| !(w.weight >= 0.0)) {
        c.issue("$.sandbox.scenarios", "weights must be non-negative and sum to 1");
    }
    if s.episodes == 0 {
        c.issue("$.sandbox.episodes", "must be at least 1");
    }
    if s.validation_episodes == 0 {
        c.issue("$.sandbox.validation_episodes", "must be at least 1");
    }
    if !(0.0..=1.0).contains(&s.exploration_epsilon) {
        c.issue("$.sandbox.exploration_epsilon", "must lie in [0, 1]");
    }
}
