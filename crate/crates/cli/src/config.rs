//! Run configuration, layered as: command-line flag, then environment, then
//! config file, then built-in default.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use attrib_core::clients::{load_fixture_clients, ClientConfig, Clients, HttpClient};
use attrib_core::datagen::DatagenConfig;
use attrib_core::evalharness::{EvalConfig, LOW_ATTRIBUTION};
use attrib_core::research::{ResearchConfig, DEFAULT_STRIDE, DEFAULT_WINDOW};
use attrib_core::revision::{EditConfig, SegmentTemplate};
use attrib_core::{DEFAULT_REPORT_BUDGET, PACKED_EVIDENCE};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Prefix of every environment variable the tool reads.
pub const ENV_PREFIX: &str = "ATTRIB_";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfigs {
    pub generate: ClientConfig,
    pub editor: ClientConfig,
    pub score: ClientConfig,
    pub nli: ClientConfig,
    pub search: ClientConfig,
}

impl ServiceConfigs {
    fn named_mut(&mut self) -> [(&'static str, &mut ClientConfig); 5] {
        [
            ("GENERATE", &mut self.generate),
            ("EDITOR", &mut self.editor),
            ("SCORE", &mut self.score),
            ("NLI", &mut self.nli),
            ("SEARCH", &mut self.search),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub clients: ServiceConfigs,
    pub budget: usize,
    pub slots: usize,
    pub gold_cap: usize,
    pub threshold: f64,
    pub query_cap: usize,
    pub top_pages: usize,
    pub window: usize,
    pub stride: usize,
    pub parallelism: usize,
    pub seed: u64,
    pub max_tokens: u32,
    pub corruption_retries: u32,
    pub low_attr_threshold: f64,
    pub abstention_token: String,
    pub template: SegmentTemplate,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            clients: ServiceConfigs::default(),
            budget: DEFAULT_REPORT_BUDGET,
            slots: PACKED_EVIDENCE,
            gold_cap: PACKED_EVIDENCE,
            threshold: 0.5,
            query_cap: 5,
            top_pages: 5,
            window: DEFAULT_WINDOW,
            stride: DEFAULT_STRIDE,
            parallelism: 4,
            seed: 0,
            max_tokens: 256,
            corruption_retries: 2,
            low_attr_threshold: LOW_ATTRIBUTION,
            abstention_token: "No edit.".into(),
            template: SegmentTemplate::default(),
            paths: Paths::default(),
        }
    }
}

/// Values given on the command line. `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub parallelism: Option<usize>,
    pub fixtures: Option<PathBuf>,
    pub budget: Option<usize>,
    pub slots: Option<usize>,
    pub threshold: Option<f64>,
}

fn parse_env<T: std::str::FromStr>(name: &str, raw: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| CliError::Config(format!("{name}={raw:?}: {e}")))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let body = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&body).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies `ATTRIB_*` variables found through `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
        let get = |key: &str| lookup(&format!("{ENV_PREFIX}{key}")).map(|v| (format!("{ENV_PREFIX}{key}"), v));
        if let Some((k, v)) = get("SEED") {
            self.seed = parse_env(&k, &v)?;
        }
        if let Some((k, v)) = get("PARALLELISM") {
            self.parallelism = parse_env(&k, &v)?;
        }
        if let Some((k, v)) = get("BUDGET") {
            self.budget = parse_env(&k, &v)?;
        }
        if let Some((k, v)) = get("SLOTS") {
            self.slots = parse_env(&k, &v)?;
        }
        if let Some((k, v)) = get("THRESHOLD") {
            self.threshold = parse_env(&k, &v)?;
        }
        if let Some((_, v)) = get("FIXTURES") {
            self.paths.fixtures = Some(PathBuf::from(v));
        }
        for (name, client) in self.clients.named_mut() {
            if let Some((_, v)) = get(&format!("{name}_URL")) {
                client.base_url = v;
            }
            if let Some((_, v)) = get(&format!("{name}_API_KEY")) {
                client.api_key = Some(v);
            }
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.parallelism {
            self.parallelism = v;
        }
        if let Some(v) = &o.fixtures {
            self.paths.fixtures = Some(v.clone());
        }
        if let Some(v) = o.budget {
            self.budget = v;
        }
        if let Some(v) = o.slots {
            self.slots = v;
        }
        if let Some(v) = o.threshold {
            self.threshold = v;
        }
    }

    /// Default, then file, then environment, then flags; validated.
    pub fn resolve(
        file: Option<&Path>,
        lookup: impl Fn(&str) -> Option<String>,
        overrides: &Overrides,
    ) -> Result<Self, CliError> {
        let mut cfg = match file {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        cfg.apply_env(lookup)?;
        cfg.apply_overrides(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        let at_least_one = [
            ("budget", self.budget),
            ("slots", self.slots),
            ("query_cap", self.query_cap),
            ("top_pages", self.top_pages),
            ("parallelism", self.parallelism),
        ];
        for (name, v) in at_least_one {
            if v < 1 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        if !(1..=PACKED_EVIDENCE).contains(&self.gold_cap) {
            return fail(format!("gold_cap must be between 1 and {PACKED_EVIDENCE}"));
        }
        if self.stride < 1 || self.window < self.stride {
            return fail(format!(
                "need window >= stride >= 1, got {} and {}",
                self.window, self.stride
            ));
        }
        if !self.threshold.is_finite() {
            return fail("threshold must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.low_attr_threshold) {
            return fail("low_attr_threshold must be in [0, 1]".into());
        }
        if self.template.max_words < 1 {
            return fail("template.max_words must be at least 1".into());
        }
        let mut services = self.clients.clone();
        for (name, client) in services.named_mut() {
            client
                .validate()
                .map_err(|e| CliError::Config(format!("clients.{}: {e}", name.to_lowercase())))?;
        }
        Ok(())
    }

    pub fn research(&self) -> ResearchConfig {
        ResearchConfig {
            query_cap: self.query_cap,
            top_pages: self.top_pages,
            window: self.window,
            stride: self.stride,
            parallelism: self.parallelism,
            max_tokens: self.max_tokens,
        }
    }

    pub fn edit(&self) -> EditConfig {
        EditConfig {
            slots: self.slots,
            template: self.template.clone(),
            abstention_token: self.abstention_token.clone(),
            max_tokens: self.max_tokens,
        }
    }

    pub fn eval(&self) -> EvalConfig {
        EvalConfig {
            research: self.research(),
            budget: self.budget,
            edit: self.edit(),
            parallelism: self.parallelism,
            low_attr_threshold: self.low_attr_threshold,
        }
    }

    pub fn datagen(&self) -> DatagenConfig {
        DatagenConfig {
            seed: self.seed,
            threshold: self.threshold,
            gold_cap: self.gold_cap,
            top_pages: self.top_pages,
            window: self.window,
            stride: self.stride,
            parallelism: self.parallelism,
            corruption_retries: self.corruption_retries,
            max_tokens: self.max_tokens,
        }
    }

    /// Fixture clients when a fixture directory is set, HTTP clients otherwise.
    pub fn clients(&self) -> Result<Clients, CliError> {
        if let Some(dir) = &self.paths.fixtures {
            return Ok(load_fixture_clients(dir)?);
        }
        let http = |c: &ClientConfig| {
            HttpClient::new(c)
                .map(Arc::new)
                .map_err(|e| CliError::Config(e.to_string()))
        };
        Ok(Clients {
            generator: http(&self.clients.generate)?,
            editor: http(&self.clients.editor)?,
            scorer: http(&self.clients.score)?,
            nli: http(&self.clients.nli)?,
            search: http(&self.clients.search)?,
        })
    }
}
