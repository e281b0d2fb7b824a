//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Unset keys keep their defaults.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::agents::{AgreeablenessSpec, PersonaMix, SpecialtyAssignment};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigErrorKind {
    #[error("expected `key = value`")]
    MissingEquals,
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("malformed value `{value}` for `{key}`")]
    Malformed { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ConfigError {
    /// 1-based; 0 for whole-config checks.
    pub line: usize,
    pub kind: ConfigErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `default` or a path to an ASCII layout file.
    pub layout: String,
    pub team_size: usize,
    pub comm_cost: u64,
    pub soup_ratio: f64,
    pub n_orders: usize,
    pub meals_per_order: usize,
    pub frac_initiative: f64,
    pub frac_skill_assertion: f64,
    pub frac_join_existing: f64,
    pub agreeableness: AgreeablenessSpec,
    pub stall_timeout: u64,
    pub max_ticks: u64,
    pub seed: u64,
    pub specialty_assignment: SpecialtyAssignment,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            layout: "default".to_string(),
            team_size: 4,
            comm_cost: 25,
            soup_ratio: 0.5,
            n_orders: 10,
            meals_per_order: 10,
            frac_initiative: 0.5,
            frac_skill_assertion: 0.5,
            frac_join_existing: 0.5,
            agreeableness: AgreeablenessSpec::Fixed(0.8),
            stall_timeout: 200,
            max_ticks: 20000,
            seed: 1,
            specialty_assignment: SpecialtyAssignment::RoundRobin,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigErrorKind> {
    value.parse().map_err(|_| ConfigErrorKind::Malformed {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_agreeableness(key: &str, value: &str) -> Result<AgreeablenessSpec, ConfigErrorKind> {
    if let Some(rest) = value.strip_prefix("uniform:") {
        let (lo, hi) = rest.split_once(':').ok_or_else(|| ConfigErrorKind::Malformed {
            key: key.to_string(),
            value: value.to_string(),
        })?;
        return Ok(AgreeablenessSpec::Uniform(parse(key, lo)?, parse(key, hi)?));
    }
    Ok(AgreeablenessSpec::Fixed(parse(key, value)?))
}

fn agreeableness_text(a: AgreeablenessSpec) -> String {
    match a {
        AgreeablenessSpec::Fixed(v) => v.to_string(),
        AgreeablenessSpec::Uniform(lo, hi) => format!("uniform:{lo}:{hi}"),
    }
}

impl ExperimentConfig {
    /// Field names in declaration order.
    pub const KEYS: [&'static str; 14] = [
        "layout",
        "team_size",
        "comm_cost",
        "soup_ratio",
        "n_orders",
        "meals_per_order",
        "frac_initiative",
        "frac_skill_assertion",
        "frac_join_existing",
        "agreeableness",
        "stall_timeout",
        "max_ticks",
        "seed",
        "specialty_assignment",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigErrorKind> {
        match key {
            "layout" => self.layout = value.to_string(),
            "team_size" => self.team_size = parse(key, value)?,
            "comm_cost" => self.comm_cost = parse(key, value)?,
            "soup_ratio" => self.soup_ratio = parse(key, value)?,
            "n_orders" => self.n_orders = parse(key, value)?,
            "meals_per_order" => self.meals_per_order = parse(key, value)?,
            "frac_initiative" => self.frac_initiative = parse(key, value)?,
            "frac_skill_assertion" => self.frac_skill_assertion = parse(key, value)?,
            "frac_join_existing" => self.frac_join_existing = parse(key, value)?,
            "agreeableness" => self.agreeableness = parse_agreeableness(key, value)?,
            "stall_timeout" => self.stall_timeout = parse(key, value)?,
            "max_ticks" => self.max_ticks = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "specialty_assignment" => {
                self.specialty_assignment = match value {
                    "round_robin" => SpecialtyAssignment::RoundRobin,
                    "random" => SpecialtyAssignment::Random,
                    _ => {
                        return Err(ConfigErrorKind::Malformed {
                            key: key.to_string(),
                            value: value.to_string(),
                        })
                    }
                }
            }
            _ => return Err(ConfigErrorKind::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// The value of `key` as it would be written in a config file.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "layout" => self.layout.clone(),
            "team_size" => self.team_size.to_string(),
            "comm_cost" => self.comm_cost.to_string(),
            "soup_ratio" => self.soup_ratio.to_string(),
            "n_orders" => self.n_orders.to_string(),
            "meals_per_order" => self.meals_per_order.to_string(),
            "frac_initiative" => self.frac_initiative.to_string(),
            "frac_skill_assertion" => self.frac_skill_assertion.to_string(),
            "frac_join_existing" => self.frac_join_existing.to_string(),
            "agreeableness" => agreeableness_text(self.agreeableness),
            "stall_timeout" => self.stall_timeout.to_string(),
            "max_ticks" => self.max_ticks.to_string(),
            "seed" => self.seed.to_string(),
            "specialty_assignment" => match self.specialty_assignment {
                SpecialtyAssignment::RoundRobin => "round_robin".to_string(),
                SpecialtyAssignment::Random => "random".to_string(),
            },
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigErrorKind> {
        let invalid = |m: &str| Err(ConfigErrorKind::Invalid(m.to_string()));
        if self.team_size < 1 {
            return invalid("team_size must be at least 1");
        }
        if self.max_ticks < 1 {
            return invalid("max_ticks must be at least 1");
        }
        if self.n_orders < 1 || self.meals_per_order < 1 {
            return invalid("n_orders and meals_per_order must be at least 1");
        }
        for (name, v) in [
            ("soup_ratio", self.soup_ratio),
            ("frac_initiative", self.frac_initiative),
            ("frac_skill_assertion", self.frac_skill_assertion),
            ("frac_join_existing", self.frac_join_existing),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return invalid(&format!("{name} must lie in [0, 1]"));
            }
        }
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        match self.agreeableness {
            AgreeablenessSpec::Fixed(p) if ok(p) => {}
            AgreeablenessSpec::Uniform(lo, hi) if ok(lo) && ok(hi) && lo <= hi => {}
            _ => return invalid("agreeableness must lie in [0, 1]"),
        }
        Ok(())
    }

    pub fn persona_mix(&self) -> PersonaMix {
        PersonaMix {
            frac_initiative: self.frac_initiative,
            frac_skill_assertion: self.frac_skill_assertion,
            frac_join_existing: self.frac_join_existing,
            agreeableness: self.agreeableness,
            specialties: self.specialty_assignment,
        }
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for key in Self::KEYS {
            writeln!(f, "{key} = {}", self.get(key).unwrap_or_default())?;
        }
        Ok(())
    }
}

/// Splits `key = value` lines, skipping blanks and comments.
pub(crate) fn entries(text: &str) -> impl Iterator<Item = (usize, Result<(&str, &str), ConfigError>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        let entry = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or(ConfigError {
                line: i + 1,
                kind: ConfigErrorKind::MissingEquals,
            });
        Some((i + 1, entry))
    })
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut last_line = 0;
    for (line, entry) in entries(text) {
        let (key, value) = entry?;
        cfg.set(key, value).map_err(|kind| ConfigError { line, kind })?;
        last_line = line;
        cfg.validate().map_err(|kind| ConfigError { line, kind })?;
    }
    cfg.validate().map_err(|kind| ConfigError {
        line: last_line,
        kind,
    })?;
    Ok(cfg)
}
