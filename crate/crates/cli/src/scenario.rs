//! Scenario files: versioned JSON describing a source, a channel, candidate
//! inputs and the grids to sweep.
//!
//! Leaf values are validated as they are parsed, so a bad distribution is
//! reported at its position in the file.

use std::collections::BTreeMap;

use infospec::analysis::{Condition, ThresholdSchedule};
use infospec::bounds::GammaSchedule;
use infospec::coding::ChannelDecoding;
use infospec::models::{
    Budget, ChannelModel, Encoder, InputModel, Kernel, MessageSizes, Pmf, SourceModel,
};
use serde::Deserialize;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "Vec<f64>")]
pub struct ProbsSpec(pub Pmf);

impl TryFrom<Vec<f64>> for ProbsSpec {
    type Error = String;
    fn try_from(v: Vec<f64>) -> Result<Self, String> {
        Pmf::new(v).map(ProbsSpec).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>")]
pub struct KernelSpec(pub Kernel);

impl TryFrom<Vec<Vec<f64>>> for KernelSpec {
    type Error = String;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, String> {
        Kernel::new(rows).map(KernelSpec).map_err(|e| e.to_string())
    }
}

/// Per-blocklength map. JSON object keys are strings, and tagged enums buffer
/// their content, so keys are parsed here rather than by serde.
#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "BTreeMap<String, T>")]
#[serde(bound = "T: Deserialize<'de>")]
pub struct Blocks<T>(pub BTreeMap<usize, T>);

impl<T> TryFrom<BTreeMap<String, T>> for Blocks<T> {
    type Error = String;
    fn try_from(raw: BTreeMap<String, T>) -> Result<Self, String> {
        let mut out = BTreeMap::new();
        for (k, v) in raw {
            let n: usize = k
                .trim()
                .parse()
                .map_err(|_| format!("block key {k:?} is not a blocklength"))?;
            if n == 0 {
                return Err("block key 0 is not a blocklength".into());
            }
            out.insert(n, v);
        }
        if out.is_empty() {
            return Err("block map is empty".into());
        }
        Ok(Blocks(out))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SizesSpec {
    Constant(u64),
    Power(u64),
    Rate(f64),
    Explicit(Blocks<u64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "RawSource")]
pub struct SourceSpec(pub SourceModel);

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawSource {
    Iid { probs: ProbsSpec },
    Bernoulli { p: f64 },
    UniformMessage { sizes: SizesSpec },
    Table { blocks: Blocks<ProbsSpec> },
    Mixed { components: Vec<SourceComponent> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceComponent {
    weight: f64,
    source: SourceSpec,
}

impl TryFrom<RawSource> for SourceSpec {
    type Error = String;
    fn try_from(raw: RawSource) -> Result<Self, String> {
        let model = match raw {
            RawSource::Iid { probs } => SourceModel::Iid(probs.0),
            RawSource::Bernoulli { p } => {
                SourceModel::Iid(Pmf::bernoulli(p).map_err(|e| e.to_string())?)
            }
            RawSource::UniformMessage { sizes } => {
                let sizes = match sizes {
                    SizesSpec::Constant(m) => MessageSizes::Constant(m),
                    SizesSpec::Power(b) => MessageSizes::Power(b),
                    SizesSpec::Rate(r) if r >= 0.0 && r.is_finite() => MessageSizes::Rate(r),
                    SizesSpec::Rate(r) => {
                        return Err(format!("message rate {r} must be nonnegative"))
                    }
                    SizesSpec::Explicit(m) => MessageSizes::Explicit(m.0),
                };
                SourceModel::UniformMessage(sizes)
            }
            RawSource::Table { blocks } => {
                SourceModel::Table(blocks.0.into_iter().map(|(n, p)| (n, p.0)).collect())
            }
            RawSource::Mixed { components } => SourceModel::mixed(
                components
                    .into_iter()
                    .map(|c| (c.weight, c.source.0))
                    .collect(),
            )
            .map_err(|e| e.to_string())?,
        };
        Ok(SourceSpec(model))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "RawChannel")]
pub struct ChannelSpec(pub ChannelModel);

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawChannel {
    Dmc { rows: KernelSpec },
    Bsc { p: f64 },
    Identity { size: usize },
    Deterministic { map: Vec<usize>, outputs: usize },
    Table { blocks: Blocks<KernelSpec> },
    Mixed { components: Vec<ChannelComponent> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelComponent {
    weight: f64,
    channel: ChannelSpec,
}

impl TryFrom<RawChannel> for ChannelSpec {
    type Error = String;
    fn try_from(raw: RawChannel) -> Result<Self, String> {
        let s = |e: infospec::Error| e.to_string();
        let model = match raw {
            RawChannel::Dmc { rows } => ChannelModel::Dmc(rows.0),
            RawChannel::Bsc { p } => ChannelModel::Dmc(Kernel::bsc(p).map_err(s)?),
            RawChannel::Identity { size } => ChannelModel::Dmc(Kernel::identity(size).map_err(s)?),
            RawChannel::Deterministic { map, outputs } => {
                Kernel::from_map(&map, outputs).map_err(s)?;
                ChannelModel::Deterministic { map, outputs }
            }
            RawChannel::Table { blocks } => {
                ChannelModel::Table(blocks.0.into_iter().map(|(n, k)| (n, k.0)).collect())
            }
            RawChannel::Mixed { components } => ChannelModel::mixed(
                components
                    .into_iter()
                    .map(|c| (c.weight, c.channel.0))
                    .collect(),
            )
            .map_err(s)?,
        };
        Ok(ChannelSpec(model))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "RawInput")]
pub struct InputSpec(pub InputModel);

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawInput {
    Iid {
        probs: ProbsSpec,
    },
    Uniform {
        size: usize,
    },
    Table {
        blocks: Blocks<ProbsSpec>,
    },
    ConditionalIid {
        rows: Vec<ProbsSpec>,
    },
    ConditionalTable {
        blocks: Blocks<Vec<ProbsSpec>>,
    },
    Encoder {
        #[serde(default)]
        letterwise: Option<Vec<usize>>,
        #[serde(default)]
        table: Option<Blocks<Vec<usize>>>,
    },
}

impl TryFrom<RawInput> for InputSpec {
    type Error = String;
    fn try_from(raw: RawInput) -> Result<Self, String> {
        let model = match raw {
            RawInput::Iid { probs } => InputModel::Iid(probs.0),
            RawInput::Uniform { size } => {
                InputModel::Iid(Pmf::uniform(size).map_err(|e| e.to_string())?)
            }
            RawInput::Table { blocks } => {
                InputModel::Table(blocks.0.into_iter().map(|(n, p)| (n, p.0)).collect())
            }
            RawInput::ConditionalIid { rows } if rows.is_empty() => {
                return Err("conditional input has no rows".into())
            }
            RawInput::ConditionalIid { rows } => {
                InputModel::ConditionalIid(rows.into_iter().map(|p| p.0).collect())
            }
            RawInput::ConditionalTable { blocks } => InputModel::ConditionalTable(
                blocks
                    .0
                    .into_iter()
                    .map(|(n, rows)| (n, rows.into_iter().map(|p| p.0).collect()))
                    .collect(),
            ),
            RawInput::Encoder {
                letterwise: Some(map),
                table: None,
            } => InputModel::Encoder(Encoder::Letterwise(map)),
            RawInput::Encoder {
                letterwise: None,
                table: Some(t),
            } => InputModel::Encoder(Encoder::Table(t.0)),
            RawInput::Encoder { .. } => {
                return Err("encoder needs exactly one of `letterwise` or `table`".into())
            }
        };
        Ok(InputSpec(model))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedInput {
    pub name: String,
    pub law: InputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(try_from = "RawGamma")]
pub struct GammaSpec(pub GammaSchedule);

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawGamma {
    Power { c: f64, p: f64 },
    Constant { value: f64 },
    Explicit { values: Vec<f64> },
}

impl TryFrom<RawGamma> for GammaSpec {
    type Error = String;
    fn try_from(raw: RawGamma) -> Result<Self, String> {
        let s = match raw {
            RawGamma::Power { c, p } => GammaSchedule::Power { c, p },
            RawGamma::Constant { value } => GammaSchedule::Constant(value),
            RawGamma::Explicit { values } => GammaSchedule::Explicit(values),
        };
        s.validate().map_err(|e| e.to_string())?;
        Ok(GammaSpec(s))
    }
}

/// Threshold schedule as written in a scenario; `midpoint` is resolved at run time.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdSpec {
    Midpoint,
    Constant { value: f64 },
    Explicit { values: Vec<f64> },
    Alternating { low: f64, high: f64 },
}

impl ThresholdSpec {
    pub fn resolve(
        &self,
        midpoint: impl FnOnce() -> Result<f64, infospec::Error>,
    ) -> Result<ThresholdSchedule, infospec::Error> {
        Ok(match self {
            ThresholdSpec::Midpoint => ThresholdSchedule::Constant(midpoint()?),
            ThresholdSpec::Constant { value } => ThresholdSchedule::Constant(*value),
            ThresholdSpec::Explicit { values } => ThresholdSchedule::Explicit(values.clone()),
            ThresholdSpec::Alternating { low, high } => ThresholdSchedule::Alternating {
                low: *low,
                high: *high,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionName {
    Direct,
    Converse,
    StrictDomination,
    Domination,
    ProductDomination,
    EpsDirect,
    EpsConverse,
}

impl From<ConditionName> for Condition {
    fn from(c: ConditionName) -> Self {
        match c {
            ConditionName::Direct => Condition::Direct,
            ConditionName::Converse => Condition::Converse,
            ConditionName::StrictDomination => Condition::StrictDomination,
            ConditionName::Domination => Condition::Domination,
            ConditionName::ProductDomination => Condition::ProductDomination,
            ConditionName::EpsDirect => Condition::EpsDirect,
            ConditionName::EpsConverse => Condition::EpsConverse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DecodingName {
    #[default]
    Threshold,
    Map,
}

impl From<DecodingName> for ChannelDecoding {
    fn from(d: DecodingName) -> Self {
        match d {
            DecodingName::Threshold => ChannelDecoding::Threshold,
            DecodingName::Map => ChannelDecoding::Map,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    pub ns: Vec<usize>,
    /// Source rate of the two-step code; the rate midpoint when absent.
    #[serde(default)]
    pub rate: Option<f64>,
    /// Random threshold codes drawn per input and blocklength.
    #[serde(default)]
    pub samples: usize,
    #[serde(default)]
    pub decoding: DecodingName,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub ns: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    #[serde(default = "default_enumeration")]
    pub enumeration: u64,
    #[serde(default = "default_oracle")]
    pub oracle: u64,
}

fn default_enumeration() -> u64 {
    infospec::models::DEFAULT_ENUMERATION_BUDGET
}

fn default_oracle() -> u64 {
    infospec::models::DEFAULT_ORACLE_BUDGET
}

fn default_eps() -> f64 {
    infospec::analysis::DEFAULT_EPS
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    pub source: SourceSpec,
    pub channel: ChannelSpec,
    pub inputs: Vec<NamedInput>,
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub gamma: Option<GammaSpec>,
    /// Slack values swept by the `bounds` command; the schedule value when absent.
    #[serde(default)]
    pub bound_gammas: Option<Vec<f64>>,
    #[serde(default)]
    pub c_schedule: Option<ThresholdSpec>,
    #[serde(default)]
    pub d_schedule: Option<ThresholdSpec>,
    /// Tail level of the limit estimators.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Target level for the eps-direct and eps-converse checks.
    #[serde(default)]
    pub eps_level: Option<f64>,
    #[serde(default)]
    pub conditions: Option<Vec<ConditionName>>,
    /// Grid for rate estimates; `n_grid` when absent.
    #[serde(default)]
    pub rate_grid: Option<Vec<usize>>,
    #[serde(default)]
    pub code: Option<CodeSpec>,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub budget: Option<BudgetSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n_grid: Option<Vec<usize>>,
    pub gammas: Option<Vec<f64>>,
    pub eps: Option<f64>,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, String> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Ok(s)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = &o.n_grid {
            self.n_grid = n.clone();
        }
        if let Some(g) = &o.gammas {
            self.bound_gammas = Some(g.clone());
            if let [single] = g.as_slice() {
                self.gamma = Some(GammaSpec(GammaSchedule::Constant(*single)));
            }
        }
        if let Some(e) = o.eps {
            self.eps = e;
        }
        if let Some(b) = o.budget {
            let oracle = self.budget.map_or_else(default_oracle, |b| b.oracle);
            self.budget = Some(BudgetSpec {
                enumeration: b,
                oracle,
            });
        }
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
    }

    /// Cross-field checks that individual values cannot make on their own.
    pub fn validate(&self) -> Result<(), String> {
        if self.version != SCENARIO_VERSION {
            return Err(format!(
                "unsupported scenario version {} (expected {SCENARIO_VERSION})",
                self.version
            ));
        }
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(format!(
                "scenario name {:?} must be nonempty ASCII letters, digits, '-', '_' or '.'",
                self.name
            ));
        }
        check_grid("n_grid", &self.n_grid)?;
        if let Some(g) = &self.rate_grid {
            check_grid("rate_grid", g)?;
        }
        if self.inputs.is_empty() {
            return Err("at least one input is required".into());
        }
        let mut names: Vec<&str> = self.inputs.iter().map(|i| i.name.as_str()).collect();
        for name in &names {
            if name.is_empty()
                || !name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
            {
                return Err(format!(
                    "input name {name:?} must be nonempty ASCII letters, digits, '-', '_' or '.'"
                ));
            }
        }
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err("input names must be distinct".into());
        }
        let source_letters = self.source.0.letter_alphabet();
        let channel_letters = self.channel.0.input_letters();
        for input in &self.inputs {
            check_input_alphabets(&input.name, &input.law.0, source_letters, channel_letters)?;
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(format!("eps {} must lie in (0, 0.5)", self.eps));
        }
        if let Some(e) = self.eps_level {
            if !(0.0..1.0).contains(&e) {
                return Err(format!("eps_level {e} must lie in [0, 1)"));
            }
        }
        if let Some(GammaSpec(GammaSchedule::Explicit(v))) = &self.gamma {
            if v.len() != self.n_grid.len() {
                return Err(format!(
                    "explicit gamma schedule has {} values for {} grid points",
                    v.len(),
                    self.n_grid.len()
                ));
            }
        }
        if let Some(g) = &self.bound_gammas {
            if g.is_empty() || g.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err("bound_gammas must be a nonempty list of positive values".into());
            }
        }
        for (what, s) in [
            ("c_schedule", &self.c_schedule),
            ("d_schedule", &self.d_schedule),
        ] {
            if let Some(ThresholdSpec::Explicit { values }) = s {
                if values.len() != self.n_grid.len() {
                    return Err(format!(
                        "{what} has {} values for {} grid points",
                        values.len(),
                        self.n_grid.len()
                    ));
                }
            }
        }
        if let Some(b) = &self.budget {
            if b.enumeration == 0 || b.oracle == 0 {
                return Err("budgets must be positive".into());
            }
        }
        if let Some(code) = &self.code {
            if code.ns.is_empty() || code.ns.contains(&0) {
                return Err("code.ns must be a nonempty list of positive blocklengths".into());
            }
            if self.seed.is_none() {
                return Err("a seed is required when code construction is enabled".into());
            }
        }
        if let Some(o) = &self.oracle {
            if o.ns.is_empty() || o.ns.contains(&0) {
                return Err("oracle.ns must be a nonempty list of positive blocklengths".into());
            }
        }
        Ok(())
    }

    pub fn budget(&self) -> Budget {
        match self.budget {
            Some(b) => Budget {
                enumeration: b.enumeration,
                oracle: b.oracle,
            },
            None => Budget::default(),
        }
    }

    pub fn gamma(&self) -> GammaSchedule {
        self.gamma.as_ref().map(|g| g.0.clone()).unwrap_or_default()
    }

    pub fn rate_grid(&self) -> &[usize] {
        self.rate_grid.as_deref().unwrap_or(&self.n_grid)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn named_inputs(&self) -> Vec<(String, InputModel)> {
        self.inputs
            .iter()
            .map(|i| (i.name.clone(), i.law.0.clone()))
            .collect()
    }

    /// Inputs that do not depend on the source (capacity candidates).
    pub fn independent_inputs(&self) -> Vec<(String, InputModel)> {
        self.named_inputs()
            .into_iter()
            .filter(|i| i.1.is_independent())
            .collect()
    }
}

fn check_grid(what: &str, grid: &[usize]) -> Result<(), String> {
    if grid.is_empty() || grid.contains(&0) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!(
            "{what} must be a nonempty, strictly increasing list of positive blocklengths"
        ));
    }
    Ok(())
}

fn check_input_alphabets(
    name: &str,
    input: &InputModel,
    source_letters: Option<usize>,
    channel_letters: Option<usize>,
) -> Result<(), String> {
    let mismatch = |what: String| Err(format!("input {name:?}: {what}"));
    match input {
        InputModel::Iid(p) => {
            if let Some(k) = channel_letters {
                if p.len() != k {
                    return mismatch(format!("{} letters, channel accepts {k}", p.len()));
                }
            }
        }
        InputModel::ConditionalIid(rows) => {
            if let Some(k) = source_letters {
                if rows.len() != k {
                    return mismatch(format!("{} rows, source has {k} letters", rows.len()));
                }
            }
            if let Some(k) = channel_letters {
                if rows.iter().any(|r| r.len() != k) {
                    return mismatch(format!("rows must have {k} entries to match the channel"));
                }
            }
        }
        InputModel::Encoder(Encoder::Letterwise(map)) => {
            if let Some(k) = source_letters {
                if map.len() != k {
                    return mismatch(format!(
                        "letterwise map has {} entries, source has {k} letters",
                        map.len()
                    ));
                }
            }
            if let Some(k) = channel_letters {
                if map.iter().any(|&x| x >= k) {
                    return mismatch(format!(
                        "letterwise map uses a letter outside the channel's {k} inputs"
                    ));
                }
            }
        }
        _ => {}
    }
    Ok(())
}
