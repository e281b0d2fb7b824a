//! Single runs, replicated sweeps and summary CSV emission.

use std::cmp::Ordering;
use std::io;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::agents::assign_personas;
use crate::config::{entries, parse_config, ConfigError, ConfigErrorKind, ExperimentConfig};
use crate::coordination::CommConfig;
use crate::events::EventLog;
use crate::metrics::{summarize, SummaryStats};
use crate::sim::Simulation;
use crate::tasks::build_order_book;
use crate::world::{parse_layout, LayoutError, DEFAULT_LAYOUT};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("layout: {0}")]
    Layout(#[from] LayoutError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Layout text named by `layout`: the built-in kitchen or a file.
pub fn layout_text(layout: &str) -> Result<String, HarnessError> {
    if layout == "default" {
        Ok(DEFAULT_LAYOUT.to_string())
    } else {
        Ok(std::fs::read_to_string(Path::new(layout))?)
    }
}

/// Reads and parses a config file. A relative layout path is taken relative
/// to the config file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    resolve_layout(&mut cfg, path);
    Ok(cfg)
}

fn resolve_layout(cfg: &mut ExperimentConfig, config_path: &Path) {
    if cfg.layout != "default" && Path::new(&cfg.layout).is_relative() {
        if let Some(dir) = config_path.parent() {
            cfg.layout = dir.join(&cfg.layout).to_string_lossy().into_owned();
        }
    }
}

/// Builds the initial simulation. The run's single generator first draws
/// personas, then drives every stochastic decision of the run.
pub fn build_simulation(cfg: &ExperimentConfig) -> Result<Simulation, HarnessError> {
    cfg.validate().map_err(|kind| ConfigError { line: 0, kind })?;
    let world = parse_layout(&layout_text(&cfg.layout)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let agents = assign_personas(cfg.team_size, &cfg.persona_mix(), &mut rng);
    let meals = build_order_book(cfg.soup_ratio, cfg.n_orders, cfg.meals_per_order)
        .into_iter()
        .flat_map(|o| o.meals)
        .collect();
    Ok(Simulation::new(
        world,
        agents,
        meals,
        CommConfig {
            cost: cfg.comm_cost,
        },
        cfg.stall_timeout,
        rng,
    ))
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: EventLog,
    pub stats: SummaryStats,
}

/// Simulates until every meal is served or `max_ticks` is reached.
pub fn run_single(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let mut sim = build_simulation(cfg)?;
    sim.run(cfg.max_ticks);
    let stats = summarize(&sim.log, cfg.team_size, sim.tick());
    Ok(RunOutput {
        log: sim.log,
        stats,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub stats: SummaryStats,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    /// Axis field and its values, in declaration order.
    pub axes: Vec<(String, Vec<String>)>,
    pub n_seeds: usize,
}

/// Parses axis lines of the form `field = v1, v2, ...`.
pub fn parse_axes(text: &str) -> Result<Vec<(String, Vec<String>)>, ConfigError> {
    let mut axes = Vec::new();
    for (line, entry) in entries(text) {
        let (key, values) = entry?;
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(ConfigError {
                line,
                kind: ConfigErrorKind::Malformed {
                    key: key.to_string(),
                    value: String::new(),
                },
            });
        }
        axes.push((key.to_string(), values));
    }
    Ok(axes)
}

impl SweepSpec {
    /// Every (config point, seed) combination, validated up front.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>, ConfigError> {
        if self.n_seeds < 1 {
            return Err(ConfigError {
                line: 0,
                kind: ConfigErrorKind::Invalid("n_seeds must be at least 1".into()),
            });
        }
        let mut points = vec![self.base.clone()];
        for (line, (key, values)) in self.axes.iter().enumerate() {
            let mut next = Vec::with_capacity(points.len() * values.len());
            for p in &points {
                for v in values {
                    let mut c = p.clone();
                    let err = |kind| ConfigError {
                        line: line + 1,
                        kind,
                    };
                    c.set(key, v).map_err(err)?;
                    c.validate().map_err(err)?;
                    next.push(c);
                }
            }
            points = next;
        }
        Ok(points
            .into_iter()
            .flat_map(|p| {
                (0..self.n_seeds as u64).map(move |r| ExperimentConfig {
                    seed: p.seed + r,
                    ..p.clone()
                })
            })
            .collect())
    }
}

fn compare_values(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

/// Runs every replication of the sweep. Rows come back sorted by axis values
/// (in axis order) and then seed, whatever the execution order.
pub fn run_sweep(spec: &SweepSpec, parallel: bool) -> Result<Vec<RunRecord>, HarnessError> {
    let configs = spec.expand()?;
    let one = |cfg: &ExperimentConfig| -> Result<RunRecord, HarnessError> {
        let start = Instant::now();
        let out = run_single(cfg)?;
        Ok(RunRecord {
            config: cfg.clone(),
            stats: out.stats,
            wall_time: start.elapsed(),
        })
    };
    let mut rows: Vec<RunRecord> = if parallel {
        configs.par_iter().map(one).collect::<Result<_, _>>()?
    } else {
        configs.iter().map(one).collect::<Result<_, _>>()?
    };
    let keys: Vec<&str> = spec.axes.iter().map(|(k, _)| k.as_str()).collect();
    rows.sort_by(|a, b| {
        keys.iter()
            .map(|k| {
                compare_values(
                    &a.config.get(k).unwrap_or_default(),
                    &b.config.get(k).unwrap_or_default(),
                )
            })
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
            .then(a.config.seed.cmp(&b.config.seed))
    });
    Ok(rows)
}

/// Summary CSV: config fields, then metric fields. Wall time is not written.
pub fn write_csv<W: io::Write>(rows: &[RunRecord], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = ExperimentConfig::KEYS
        .iter()
        .chain(SummaryStats::FIELDS.iter())
        .copied()
        .collect();
    w.write_record(&header)?;
    for r in rows {
        let mut record: Vec<String> = ExperimentConfig::KEYS
            .iter()
            .map(|k| r.config.get(k).unwrap_or_default())
            .collect();
        record.extend(r.stats.cells());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[RunRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Sample mean and standard error; `None` for an empty sample.
pub fn mean_stderr(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

/// Mean with a two-sided 95% Student-t confidence interval `(lo, hi)`.
pub fn mean_ci95(xs: &[f64]) -> Option<(f64, f64, f64)> {
    let (mean, se) = mean_stderr(xs)?;
    if xs.len() < 2 {
        return Some((mean, mean, mean));
    }
    let t = StudentsT::new(0.0, 1.0, (xs.len() - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    Some((mean, mean - t * se, mean + t * se))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_parse_and_expand() {
        let axes = parse_axes("team_size = 2, 4\ncomm_cost = 0,25").unwrap();
        let spec = SweepSpec {
            base: ExperimentConfig::default(),
            axes,
            n_seeds: 3,
        };
        let cfgs = spec.expand().unwrap();
        assert_eq!(cfgs.len(), 12);
        assert_eq!(cfgs[0].seed, 1);
        assert_eq!(cfgs[2].seed, 3);
        let bad = SweepSpec {
            axes: parse_axes("colour = red").unwrap(),
            ..spec
        };
        assert!(bad.expand().is_err());
    }

    #[test]
    fn confidence_interval_matches_t_table() {
        let (m, lo, hi) = mean_ci95(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(m, 3.0);
        // t(0.975, 4) = 2.776445
        let half = 2.776445105 * (2.5f64 / 5.0).sqrt();
        assert!((hi - m - half).abs() < 1e-6);
        assert!((m - lo - half).abs() < 1e-6);
    }
}
