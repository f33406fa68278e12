//! Scenario files: TOML schema, validating loader, and dotted-path
//! overrides.
//!
//! A scenario pins everything a run needs: topology, mode, horizon,
//! adversary family and parameters, reference-policy budgets, scheduler
//! choice, transmission mode, seed, and output directory. Loading rejects
//! unknown keys and invalid combinations with messages naming the offending
//! key.

use serde::{Deserialize, Serialize};

use crate::adversary::{CapacityFamily, TraceMode, TraceParams, UtilityProcess};
use crate::error::{AnoqError, Result};
use crate::net::{Topology, TransmissionMode};
use crate::olo::BaseLearnerKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub scenario: ScenarioSection,
    pub topology: TopologySection,
    pub adversary: AdversarySection,
    #[serde(default)]
    pub arrivals: Option<ArrivalsSection>,
    pub reference: ReferenceSection,
    #[serde(default)]
    pub utility: Option<UtilitySection>,
    #[serde(default)]
    pub arrival_set: Option<ArrivalSetSection>,
    pub scheduler: SchedulerSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub mode: TraceMode,
    pub rounds: usize,
    pub seed: u64,
    #[serde(default = "default_transmission")]
    pub transmission: TransmissionMode,
}

fn default_transmission() -> TransmissionMode {
    TransmissionMode::Deterministic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub servers: usize,
    /// 1-based (from, to) pairs.
    pub links: Vec<(usize, usize)>,
    pub capacity_bound: f64,
    pub arrival_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySection {
    /// "piecewise", "sinusoid", or "jamming".
    pub family: String,
    pub slack_target: f64,
    // piecewise
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_min: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_max: Option<usize>,
    // sinusoid / jamming
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burst_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burst_len: Option<usize>,
}

impl AdversarySection {
    pub fn capacity_family(&self) -> Result<CapacityFamily> {
        let need_f = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| {
                AnoqError::Scenario(format!(
                    "adversary.{key} is required for family \"{}\"",
                    self.family
                ))
            })
        };
        let need_u = |v: Option<usize>, key: &str| {
            v.ok_or_else(|| {
                AnoqError::Scenario(format!(
                    "adversary.{key} is required for family \"{}\"",
                    self.family
                ))
            })
        };
        match self.family.as_str() {
            "piecewise" => Ok(CapacityFamily::Piecewise {
                cap_lo: need_f(self.cap_lo, "cap_lo")?,
                cap_hi: need_f(self.cap_hi, "cap_hi")?,
                phase_min: need_u(self.phase_min, "phase_min")?,
                phase_max: need_u(self.phase_max, "phase_max")?,
            }),
            "sinusoid" => Ok(CapacityFamily::Sinusoid {
                base: need_f(self.base, "base")?,
                amp: need_f(self.amp, "amp")?,
                period: need_u(self.period, "period")?,
                window_len: need_u(self.window_len, "window_len")?,
            }),
            "jamming" => Ok(CapacityFamily::Jamming {
                base: need_f(self.base, "base")?,
                burst_prob: need_f(self.burst_prob, "burst_prob")?,
                burst_len: need_u(self.burst_len, "burst_len")?,
                window_len: need_u(self.window_len, "window_len")?,
            }),
            other => Err(AnoqError::Scenario(format!("unknown adversary.family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalsSection {
    /// 1-based (server, commodity) pairs.
    pub entries: Vec<(usize, usize)>,
    /// Per-phase arrival levels (cycled), aligned with `entries`.
    pub levels: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    /// Allocation path budget `P_t ≤ c_a · t^{1/2 − delta_a}`.
    pub c_a: f64,
    pub delta_a: f64,
    /// Arrival path budget (utility mode).
    #[serde(default)]
    pub c_lambda: Option<f64>,
    #[serde(default)]
    pub delta_lambda: Option<f64>,
    /// Reference arrivals at the controllable entries (utility mode).
    #[serde(default)]
    pub ref_arrivals: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySection {
    /// "log" or "linquad".
    pub family: String,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub drift_amp: f64,
    #[serde(default = "default_drift_period")]
    pub drift_period: usize,
}

fn default_drift_period() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalSetSection {
    /// "box" or "ball".
    pub geometry: String,
    /// 1-based (server, commodity) pairs.
    pub entries: Vec<(usize, usize)>,
    #[serde(default)]
    pub lo: Option<Vec<f64>>,
    #[serde(default)]
    pub hi: Option<Vec<f64>>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub inner_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    Nso,
    Umo2,
    OracleBackpressure,
    UniformRandom,
    FixedPlan,
}

impl SchedulerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchedulerKind::Nso => "nso",
            SchedulerKind::Umo2 => "umo2",
            SchedulerKind::OracleBackpressure => "oracle_backpressure",
            SchedulerKind::UniformRandom => "uniform_random",
            SchedulerKind::FixedPlan => "fixed_plan",
        }
    }
}

impl std::str::FromStr for SchedulerKind {
    type Err = AnoqError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nso" => Ok(SchedulerKind::Nso),
            "umo2" => Ok(SchedulerKind::Umo2),
            "oracle_backpressure" => Ok(SchedulerKind::OracleBackpressure),
            "uniform_random" => Ok(SchedulerKind::UniformRandom),
            "fixed_plan" => Ok(SchedulerKind::FixedPlan),
            other => Err(AnoqError::Scenario(format!("unknown scheduler kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulerSection {
    pub kind: SchedulerKind,
    /// Utility weight (umo2).
    #[serde(default)]
    pub v: Option<f64>,
    #[serde(default)]
    pub base_learner: BaseLearnerKind,
    /// Per-link allocation replayed by the fixed_plan baseline.
    #[serde(default)]
    pub fixed_plan: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text)
            .map_err(|e| AnoqError::Scenario(format!("TOML parse failed: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Parse with `key.path=value` overrides applied before validation.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Value = toml::from_str(text)
            .map_err(|e| AnoqError::Scenario(format!("TOML parse failed: {e}")))?;
        for ov in overrides {
            let (path, raw) = ov.split_once('=').ok_or_else(|| {
                AnoqError::Scenario(format!("override '{ov}' is not of the form key=value"))
            })?;
            apply_override(&mut value, path.trim(), raw.trim())?;
        }
        let scenario: Scenario = value
            .try_into()
            .map_err(|e| AnoqError::Scenario(format!("invalid scenario after overrides: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn build_topology(&self) -> Result<Topology> {
        let links: Vec<(usize, usize)> = self
            .topology
            .links
            .iter()
            .map(|&(a, b)| {
                if a == 0 || b == 0 {
                    return Err(AnoqError::Scenario(format!(
                        "topology.links: endpoints are 1-based, got ({a}, {b})"
                    )));
                }
                Ok((a - 1, b - 1))
            })
            .collect::<Result<_>>()?;
        Topology::new(
            self.topology.servers,
            links,
            self.topology.capacity_bound,
            self.topology.arrival_bound,
        )
    }

    /// Controllable / externally loaded entries, 0-based.
    pub fn arrival_entries(&self) -> Result<Vec<(usize, usize)>> {
        let raw = match self.scenario.mode {
            TraceMode::Stability => {
                &self
                    .arrivals
                    .as_ref()
                    .ok_or_else(|| {
                        AnoqError::Scenario("stability mode needs an [arrivals] section".into())
                    })?
                    .entries
            }
            TraceMode::Utility => {
                &self
                    .arrival_set
                    .as_ref()
                    .ok_or_else(|| {
                        AnoqError::Scenario("utility mode needs an [arrival_set] section".into())
                    })?
                    .entries
            }
        };
        raw.iter()
            .map(|&(s, k)| {
                if s == 0 || k == 0 {
                    return Err(AnoqError::Scenario(format!(
                        "arrival entries are 1-based, got ({s}, {k})"
                    )));
                }
                Ok((s - 1, k - 1))
            })
            .collect()
    }

    /// The arrival-set box bounds in ambient coordinates (utility mode).
    pub fn arrival_domain(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let set = self.arrival_set.as_ref().ok_or_else(|| {
            AnoqError::Scenario("utility mode needs an [arrival_set] section".into())
        })?;
        match set.geometry.as_str() {
            "box" => {
                let lo = set.lo.clone().ok_or_else(|| {
                    AnoqError::Scenario("arrival_set.lo is required for box geometry".into())
                })?;
                let hi = set.hi.clone().ok_or_else(|| {
                    AnoqError::Scenario("arrival_set.hi is required for box geometry".into())
                })?;
                Ok((lo, hi))
            }
            "ball" => {
                let center = set.center.clone().ok_or_else(|| {
                    AnoqError::Scenario("arrival_set.center is required for ball geometry".into())
                })?;
                let radius = set.radius.ok_or_else(|| {
                    AnoqError::Scenario("arrival_set.radius is required for ball geometry".into())
                })?;
                let lo = center.iter().map(|c| c - radius).collect();
                let hi = center.iter().map(|c| c + radius).collect();
                Ok((lo, hi))
            }
            other => {
                Err(AnoqError::Scenario(format!("arrival_set.geometry '{other}' unsupported")))
            }
        }
    }

    pub fn trace_params(&self) -> Result<TraceParams> {
        let entries = self.arrival_entries()?;
        let (ref_arrivals, utility, utility_domain, arrival_path_budget) =
            match self.scenario.mode {
                TraceMode::Stability => (None, None, None, None),
                TraceMode::Utility => {
                    let us = self.utility.as_ref().ok_or_else(|| {
                        AnoqError::Scenario("utility mode needs a [utility] section".into())
                    })?;
                    let c_l = self.reference.c_lambda.ok_or_else(|| {
                        AnoqError::Scenario("reference.c_lambda is required in utility mode".into())
                    })?;
                    let d_l = self.reference.delta_lambda.ok_or_else(|| {
                        AnoqError::Scenario(
                            "reference.delta_lambda is required in utility mode".into(),
                        )
                    })?;
                    let refs = self.reference.ref_arrivals.clone().ok_or_else(|| {
                        AnoqError::Scenario(
                            "reference.ref_arrivals is required in utility mode".into(),
                        )
                    })?;
                    (
                        Some(refs),
                        Some(UtilityProcess {
                            family: us.family.clone(),
                            weights: us.weights.clone(),
                            drift_amp: us.drift_amp,
                            drift_period: us.drift_period,
                        }),
                        Some(self.arrival_domain()?),
                        Some((c_l, d_l)),
                    )
                }
            };
        Ok(TraceParams {
            rounds: self.scenario.rounds,
            capacity: self.adversary.capacity_family()?,
            arrival_entries: entries,
            arrival_levels: self
                .arrivals
                .as_ref()
                .map(|a| a.levels.clone())
                .unwrap_or_default(),
            ref_arrivals,
            utility,
            utility_domain,
            slack_target: self.adversary.slack_target,
            alloc_path_budget: (self.reference.c_a, self.reference.delta_a),
            arrival_path_budget,
        })
    }

    /// The theorem-side sanity ceiling on `V`:
    /// `min(T^{2δ_a/3}, T^{2δ_λ/7})`. `None` in stability mode.
    pub fn v_sanity_ceiling(&self) -> Option<f64> {
        if self.scenario.mode != TraceMode::Utility {
            return None;
        }
        let t = self.scenario.rounds as f64;
        let d_a = self.reference.delta_a;
        let d_l = self.reference.delta_lambda?;
        Some(t.powf(2.0 * d_a / 3.0).min(t.powf(2.0 * d_l / 7.0)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario.rounds == 0 {
            return Err(AnoqError::Scenario("scenario.rounds must be at least 1".into()));
        }
        self.adversary.capacity_family()?;
        let topo = self.build_topology()?;
        let entries = self.arrival_entries()?;
        for &(s, k) in &entries {
            if s >= topo.server_count || k >= topo.server_count {
                return Err(AnoqError::Scenario(format!(
                    "arrival entry ({}, {}) outside the {}-server topology",
                    s + 1,
                    k + 1,
                    topo.server_count
                )));
            }
            if s == k {
                return Err(AnoqError::Scenario(format!(
                    "arrival entry ({}, {}) loads a destination queue",
                    s + 1,
                    k + 1
                )));
            }
        }
        if !(0.0..0.5).contains(&self.reference.delta_a) {
            return Err(AnoqError::Scenario(format!(
                "reference.delta_a must be in [0, 0.5), got {}",
                self.reference.delta_a
            )));
        }
        match self.scenario.mode {
            TraceMode::Stability => {
                let arr = self.arrivals.as_ref().ok_or_else(|| {
                    AnoqError::Scenario("stability mode needs an [arrivals] section".into())
                })?;
                if arr.levels.is_empty() {
                    return Err(AnoqError::Scenario("arrivals.levels must be nonempty".into()));
                }
                for level in &arr.levels {
                    if level.len() != arr.entries.len() {
                        return Err(AnoqError::Scenario(format!(
                            "arrivals.levels entry has {} values for {} entries",
                            level.len(),
                            arr.entries.len()
                        )));
                    }
                }
                if self.scheduler.kind == SchedulerKind::Umo2 {
                    return Err(AnoqError::Scenario(
                        "scheduler.kind umo2 requires utility mode".into(),
                    ));
                }
            }
            TraceMode::Utility => {
                let set = self.arrival_set.as_ref().ok_or_else(|| {
                    AnoqError::Scenario("utility mode needs an [arrival_set] section".into())
                })?;
                let (lo, hi) = self.arrival_domain()?;
                if lo.len() != set.entries.len() || hi.len() != set.entries.len() {
                    return Err(AnoqError::Scenario(
                        "arrival_set bounds must match the entry count".into(),
                    ));
                }
                for (i, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
                    if l < -1e-12 || h > topo.arrival_bound + 1e-12 || l >= h {
                        return Err(AnoqError::Scenario(format!(
                            "arrival_set coordinate {i} range [{l}, {h}] must sit inside \
                             [0, {}]",
                            topo.arrival_bound
                        )));
                    }
                }
                if let Some(d_l) = self.reference.delta_lambda {
                    if !(0.0..0.5).contains(&d_l) {
                        return Err(AnoqError::Scenario(format!(
                            "reference.delta_lambda must be in [0, 0.5), got {d_l}"
                        )));
                    }
                }
                if let Some(refs) = &self.reference.ref_arrivals {
                    if refs.len() != set.entries.len() {
                        return Err(AnoqError::Scenario(format!(
                            "reference.ref_arrivals has {} values for {} entries",
                            refs.len(),
                            set.entries.len()
                        )));
                    }
                }
                if self.scheduler.kind != SchedulerKind::Umo2 {
                    return Err(AnoqError::Scenario(
                        "utility mode requires scheduler.kind = \"umo2\"".into(),
                    ));
                }
                if self.scheduler.v.is_none() {
                    return Err(AnoqError::Scenario("scheduler.v is required for umo2".into()));
                }
            }
        }
        if self.scheduler.kind == SchedulerKind::FixedPlan && self.scheduler.fixed_plan.is_none() {
            return Err(AnoqError::Scenario(
                "scheduler.fixed_plan is required for kind = \"fixed_plan\"".into(),
            ));
        }
        Ok(())
    }
}

fn apply_override(root: &mut toml::Value, path: &str, raw: &str) -> Result<()> {
    // Parse the value as TOML, falling back to a bare string.
    let parsed: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut table) => table.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(AnoqError::Scenario(format!("override path '{path}' is malformed")));
    }
    for seg in &segments[..segments.len() - 1] {
        cursor = cursor
            .as_table_mut()
            .ok_or_else(|| {
                AnoqError::Scenario(format!("override path '{path}': '{seg}' is not a table"))
            })?
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let last = segments[segments.len() - 1];
    cursor
        .as_table_mut()
        .ok_or_else(|| AnoqError::Scenario(format!("override path '{path}' is not a table")))?
        .insert(last.to_string(), parsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const STABILITY_TOML: &str = r#"
[scenario]
mode = "stability"
rounds = 500
seed = 7

[topology]
servers = 3
links = [[1, 2], [2, 1], [2, 3], [3, 2]]
capacity_bound = 1.0
arrival_bound = 1.0

[adversary]
family = "piecewise"
cap_lo = 0.95
cap_hi = 1.0
phase_min = 40
phase_max = 80
slack_target = 0.28

[arrivals]
entries = [[1, 3]]
levels = [[0.2], [0.3]]

[reference]
c_a = 1.0
delta_a = 0.25

[scheduler]
kind = "nso"
"#;

    #[test]
    fn loads_and_validates_stability_scenario() {
        let s = Scenario::from_toml_str(STABILITY_TOML).unwrap();
        assert_eq!(s.scenario.rounds, 500);
        assert_eq!(s.scheduler.kind, SchedulerKind::Nso);
        assert_eq!(s.scenario.transmission, TransmissionMode::Deterministic);
        let topo = s.build_topology().unwrap();
        assert_eq!(topo.link_count(), 4);
        assert_eq!(s.arrival_entries().unwrap(), vec![(0, 2)]);
    }

    #[test]
    fn unknown_keys_are_named() {
        let bad = STABILITY_TOML.replace("slack_target", "slack_tarjet");
        let err = Scenario::from_toml_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("slack_tarjet") || msg.contains("unknown field"), "{msg}");
    }

    #[test]
    fn missing_required_section_is_reported() {
        let bad = STABILITY_TOML.replace("[arrivals]", "[output]").replace(
            "entries = [[1, 3]]\nlevels = [[0.2], [0.3]]",
            "",
        );
        let err = Scenario::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("arrivals"), "{err}");
    }

    #[test]
    fn overrides_change_nested_keys() {
        let s = Scenario::from_toml_with_overrides(
            STABILITY_TOML,
            &["scenario.rounds=123".into(), "scheduler.kind=\"uniform_random\"".into()],
        )
        .unwrap();
        assert_eq!(s.scenario.rounds, 123);
        assert_eq!(s.scheduler.kind, SchedulerKind::UniformRandom);
    }

    #[test]
    fn bad_override_paths_error() {
        assert!(Scenario::from_toml_with_overrides(STABILITY_TOML, &["nonsense".into()]).is_err());
        assert!(Scenario::from_toml_with_overrides(
            STABILITY_TOML,
            &["scenario.rounds=\"many\"".into()]
        )
        .is_err());
    }

    pub const UTILITY_TOML: &str = r#"
[scenario]
mode = "utility"
rounds = 400
seed = 11

[topology]
servers = 3
links = [[1, 2], [2, 1], [2, 3], [3, 2]]
capacity_bound = 1.0
arrival_bound = 1.0

[adversary]
family = "piecewise"
cap_lo = 0.95
cap_hi = 1.0
phase_min = 40
phase_max = 80
slack_target = 0.1

[reference]
c_a = 1.0
delta_a = 0.25
c_lambda = 0.5
delta_lambda = 0.45
ref_arrivals = [0.35, 0.3]

[utility]
family = "log"
weights = [1.0, 1.0]
drift_amp = 0.3
drift_period = 200

[arrival_set]
geometry = "box"
entries = [[1, 3], [2, 3]]
lo = [0.0, 0.0]
hi = [1.0, 1.0]

[scheduler]
kind = "umo2"
v = 10.0
"#;

    #[test]
    fn loads_utility_scenario_and_v_ceiling() {
        let s = Scenario::from_toml_str(UTILITY_TOML).unwrap();
        let ceil = s.v_sanity_ceiling().unwrap();
        let t = 400.0_f64;
        let expected = t.powf(2.0 * 0.25 / 3.0).min(t.powf(2.0 * 0.45 / 7.0));
        assert!((ceil - expected).abs() < 1e-12);
        // V = 10 exceeds the ceiling at this small T: sanity check is a
        // warning, not a validation failure.
        assert!(10.0 > ceil);
    }

    #[test]
    fn utility_mode_requires_umo2_and_v() {
        let bad = UTILITY_TOML.replace("kind = \"umo2\"", "kind = \"nso\"");
        assert!(Scenario::from_toml_str(&bad).is_err());
        let bad = UTILITY_TOML.replace("v = 10.0", "");
        assert!(Scenario::from_toml_str(&bad).is_err());
    }

    #[test]
    fn arrival_set_must_fit_the_bound_box() {
        let bad = UTILITY_TOML.replace("hi = [1.0, 1.0]", "hi = [1.5, 1.0]");
        let err = Scenario::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("arrival_set"), "{err}");
    }
}
