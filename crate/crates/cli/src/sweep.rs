//! Single runs, parameter sweeps, CSV rows and per-point aggregates.

use std::collections::HashMap;
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sleac_core::engine::EngineError;
use sleac_core::{run, Region, RunMetrics, Termination};
use thiserror::Error;

use crate::config::{Config, ConfigError, KEYS};

/// Bumped whenever the column set of [`Row`] changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Seeds per sweep point when none are given.
pub const DEFAULT_SEEDS: u32 = 50;

/// Largest number of runs a sweep may expand to unless raised.
pub const DEFAULT_CAP: usize = 100_000;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep expands to {size} runs, above the cap of {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("`--vary {0}`: expected key=v1,v2,...")]
    BadVary(String),
    #[error("`--vary`: unknown key `{0}`")]
    UnknownVaryKey(String),
    #[error("`--vary {0}`: no values")]
    NoValues(String),
    #[error("key `{0}` varied twice")]
    RepeatedVary(String),
    #[error("seed count must be at least 1")]
    NoSeeds,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One output row: the full parameter set of a run and its metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub run_id: u64,
    pub region: String,
    pub n: usize,
    pub algorithm: String,
    pub approach: u8,
    pub scheduler: String,
    pub dt: u32,
    pub e0: u32,
    pub alpha: f64,
    pub ecrit_mobile: u32,
    pub ecrit_settled: f64,
    pub seed: u64,
    pub terminated: String,
    #[serde(rename = "T_C")]
    pub t_c: u64,
    #[serde(rename = "N")]
    pub n_agents: usize,
    #[serde(rename = "E_total")]
    pub e_total: f64,
    #[serde(rename = "max_Ei")]
    pub max_ei: f64,
    #[serde(rename = "A_C")]
    pub a_c: usize,
    #[serde(rename = "NDA_shutdown")]
    pub nda_shutdown: usize,
    #[serde(rename = "NDA_failed")]
    pub nda_failed: usize,
}

impl Row {
    pub fn new(run_id: u64, config: &Config, region: &Region, m: &RunMetrics) -> Self {
        let p = &config.params;
        Row {
            run_id,
            region: config.region.label(),
            n: region.n(),
            algorithm: p.algorithm.as_str().to_string(),
            approach: p.approach.number(),
            scheduler: p.scheduler.as_str().to_string(),
            dt: p.dt,
            e0: p.e0,
            alpha: p.alpha,
            ecrit_mobile: p.ecrit_mobile,
            ecrit_settled: p.ecrit_settled,
            seed: p.seed,
            terminated: m.termination.as_str().to_string(),
            t_c: m.t_c,
            n_agents: m.n_agents,
            e_total: m.e_total,
            max_ei: m.max_ei,
            a_c: m.a_c,
            nda_shutdown: m.nda_shutdown,
            nda_failed: m.nda_failed,
        }
    }

    pub fn hit_step_cap(&self) -> bool {
        self.terminated == Termination::StepCap.as_str()
    }

    /// Parameter columns other than the seed, identifying a sweep point.
    pub fn point_key(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}|{}|{}|{}|{}",
            self.region,
            self.algorithm,
            self.approach,
            self.scheduler,
            self.dt,
            self.e0,
            self.alpha,
            self.ecrit_mobile,
            self.ecrit_settled
        )
    }
}

/// Runs one configuration and builds its row.
pub fn run_config(run_id: u64, config: &Config) -> Result<(Row, RunMetrics), SweepError> {
    let region = config.region.load()?;
    let metrics = run(&region, &config.params)?;
    Ok((Row::new(run_id, config, &region, &metrics), metrics))
}

/// Parses one `key=v1,v2,...` argument.
pub fn parse_vary(arg: &str) -> Result<(String, Vec<String>), SweepError> {
    let (key, values) = arg
        .split_once('=')
        .ok_or_else(|| SweepError::BadVary(arg.to_string()))?;
    let key = key.trim();
    if !KEYS.contains(&key) || key == "seed" {
        return Err(SweepError::UnknownVaryKey(key.to_string()));
    }
    let values: Vec<String> = values
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(SweepError::NoValues(arg.to_string()));
    }
    Ok((key.to_string(), values))
}

/// A cross product of varied keys over a base configuration, repeated for
/// consecutive seeds starting at the base seed.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: Config,
    pub vary: Vec<(String, Vec<String>)>,
    pub seeds: u32,
    pub cap: usize,
}

impl SweepSpec {
    pub fn new(base: Config) -> Self {
        SweepSpec {
            base,
            vary: Vec::new(),
            seeds: DEFAULT_SEEDS,
            cap: DEFAULT_CAP,
        }
    }

    pub fn vary(mut self, key: &str, values: &[&str]) -> Self {
        self.vary.push((
            key.to_string(),
            values.iter().map(|v| v.to_string()).collect(),
        ));
        self
    }

    pub fn seeds(mut self, seeds: u32) -> Self {
        self.seeds = seeds;
        self
    }

    /// Total number of runs, saturating on overflow.
    pub fn size(&self) -> usize {
        self.vary
            .iter()
            .fold(self.seeds as usize, |acc, (_, v)| acc.saturating_mul(v.len()))
    }

    /// Expands the varied keys into one configuration per point, the first
    /// key varying slowest. Seeds are not applied.
    pub fn points(&self) -> Result<Vec<Config>, SweepError> {
        if self.seeds == 0 {
            return Err(SweepError::NoSeeds);
        }
        let size = self.size();
        if size > self.cap {
            return Err(SweepError::TooLarge {
                size,
                cap: self.cap,
            });
        }
        for (k, (key, values)) in self.vary.iter().enumerate() {
            if values.is_empty() {
                return Err(SweepError::NoValues(key.clone()));
            }
            if self.vary[..k].iter().any(|(other, _)| other == key) {
                return Err(SweepError::RepeatedVary(key.clone()));
            }
        }
        let mut points = vec![self.base.clone()];
        for (key, values) in &self.vary {
            let mut next = Vec::with_capacity(points.len() * values.len());
            for p in &points {
                for v in values {
                    next.push(p.with(key, v)?);
                }
            }
            points = next;
        }
        Ok(points)
    }

    /// Runs every point and seed in parallel; rows come back sorted by
    /// `run_id`, which is `point_index * seeds + seed_offset`.
    pub fn run(&self) -> Result<Vec<Row>, SweepError> {
        let points = self.points()?;
        let seeds = u64::from(self.seeds);
        let base_seed = self.base.params.seed;
        let regions = points
            .iter()
            .map(|p| p.region.load())
            .collect::<Result<Vec<_>, _>>()?;
        let jobs: Vec<(usize, u64)> = (0..points.len())
            .flat_map(|p| (0..seeds).map(move |s| (p, s)))
            .collect();
        let mut rows = jobs
            .into_par_iter()
            .map(|(p, s)| {
                let mut config = points[p].clone();
                config.params.seed = base_seed + s;
                let metrics = run(&regions[p], &config.params)?;
                Ok(Row::new(p as u64 * seeds + s, &config, &regions[p], &metrics))
            })
            .collect::<Result<Vec<_>, SweepError>>()?;
        rows.sort_by_key(|r| r.run_id);
        Ok(rows)
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let k = values.len();
        if k == 0 {
            return Stat::default();
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let std = if k < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (k - 1) as f64).sqrt()
        };
        Stat { mean, std }
    }
}

/// Summary of all seeds run at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    /// First row of the point; its parameter columns describe the point.
    pub first: Row,
    pub runs: usize,
    pub closed: usize,
    pub low_energy: usize,
    pub step_cap: usize,
    pub t_c: Stat,
    pub n_agents: Stat,
    pub e_total: Stat,
    pub max_ei: Stat,
    pub a_c: Stat,
    pub nda: Stat,
    pub a_c_min: usize,
    pub a_c_max: usize,
    pub t_c_min: u64,
    pub t_c_max: u64,
    pub max_ei_max: f64,
}

pub const AGGREGATE_HEADER: [&str; 31] = [
    "region",
    "n",
    "algorithm",
    "approach",
    "scheduler",
    "dt",
    "e0",
    "alpha",
    "ecrit_mobile",
    "ecrit_settled",
    "runs",
    "closed",
    "low_energy",
    "step_cap",
    "T_C_mean",
    "T_C_std",
    "N_mean",
    "N_std",
    "E_total_mean",
    "E_total_std",
    "max_Ei_mean",
    "max_Ei_std",
    "A_C_mean",
    "A_C_std",
    "NDA_mean",
    "NDA_std",
    "A_C_min",
    "A_C_max",
    "T_C_min",
    "T_C_max",
    "max_Ei_max",
];

/// Groups rows by parameter point, in order of first appearance.
pub fn aggregate(rows: &[Row]) -> Vec<Aggregate> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<&Row>> = HashMap::new();
    for r in rows {
        let key = r.point_key();
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .iter()
        .map(|key| {
            let g = &groups[key];
            let col = |f: &dyn Fn(&Row) -> f64| g.iter().map(|r| f(r)).collect::<Vec<_>>();
            let count = |s: &str| g.iter().filter(|r| r.terminated == s).count();
            Aggregate {
                first: g[0].clone(),
                runs: g.len(),
                closed: count(Termination::Closed.as_str()),
                low_energy: count(Termination::LowEnergy.as_str()),
                step_cap: count(Termination::StepCap.as_str()),
                t_c: Stat::of(&col(&|r| r.t_c as f64)),
                n_agents: Stat::of(&col(&|r| r.n_agents as f64)),
                e_total: Stat::of(&col(&|r| r.e_total)),
                max_ei: Stat::of(&col(&|r| r.max_ei)),
                a_c: Stat::of(&col(&|r| r.a_c as f64)),
                nda: Stat::of(&col(&|r| (r.nda_shutdown + r.nda_failed) as f64)),
                a_c_min: g.iter().map(|r| r.a_c).min().unwrap_or(0),
                a_c_max: g.iter().map(|r| r.a_c).max().unwrap_or(0),
                t_c_min: g.iter().map(|r| r.t_c).min().unwrap_or(0),
                t_c_max: g.iter().map(|r| r.t_c).max().unwrap_or(0),
                max_ei_max: g.iter().map(|r| r.max_ei).fold(0.0, f64::max),
            }
        })
        .collect()
}

/// Writes rows as CSV with a header.
pub fn write_rows<W: io::Write>(out: W, rows: &[Row]) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(row_header())?;
    }
    w.flush()?;
    Ok(())
}

/// Appends rows to a CSV file, writing the header only if the file is new
/// or empty.
pub fn append_rows(path: &std::path::Path, rows: &[Row]) -> Result<(), SweepError> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: io::Read>(input: R) -> Result<Vec<Row>, SweepError> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<Result<Vec<Row>, _>>()?;
    Ok(rows)
}

/// Column names of [`Row`] in output order.
pub fn row_header() -> [&'static str; 20] {
    [
        "run_id",
        "region",
        "n",
        "algorithm",
        "approach",
        "scheduler",
        "dt",
        "e0",
        "alpha",
        "ecrit_mobile",
        "ecrit_settled",
        "seed",
        "terminated",
        "T_C",
        "N",
        "E_total",
        "max_Ei",
        "A_C",
        "NDA_shutdown",
        "NDA_failed",
    ]
}

/// Writes one aggregate line per point.
pub fn write_aggregates<W: io::Write>(out: W, aggs: &[Aggregate]) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for a in aggs {
        let f = &a.first;
        let mut rec: Vec<String> = vec![
            f.region.clone(),
            f.n.to_string(),
            f.algorithm.clone(),
            f.approach.to_string(),
            f.scheduler.clone(),
            f.dt.to_string(),
            f.e0.to_string(),
            f.alpha.to_string(),
            f.ecrit_mobile.to_string(),
            f.ecrit_settled.to_string(),
            a.runs.to_string(),
            a.closed.to_string(),
            a.low_energy.to_string(),
            a.step_cap.to_string(),
        ];
        for s in [a.t_c, a.n_agents, a.e_total, a.max_ei, a.a_c, a.nda] {
            rec.push(format!("{:.4}", s.mean));
            rec.push(format!("{:.4}", s.std));
        }
        rec.extend([
            a.a_c_min.to_string(),
            a.a_c_max.to_string(),
            a.t_c_min.to_string(),
            a.t_c_max.to_string(),
            a.max_ei_max.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(text: &str) -> Config {
        Config::parse(text, None).unwrap()
    }

    #[test]
    fn cross_product_size_and_order() {
        let spec = SweepSpec::new(base("region = open:41x41"))
            .vary("dt", &["1", "2", "4", "8"])
            .vary("e0", &["8", "15", "23"])
            .vary("algorithm", &["SLLG", "SLUG", "SLTT"])
            .seeds(50);
        assert_eq!(spec.size(), 1800);
        let points = spec.points().unwrap();
        assert_eq!(points.len(), 36);
        assert_eq!(points[0].params.dt, 1);
        assert_eq!(points[35].params.dt, 8);
        assert_eq!(points[1].params.algorithm, sleac_core::Algorithm::Slug);
    }

    #[test]
    fn cap_reports_computed_size() {
        let mut spec = SweepSpec::new(base("region = line:5"))
            .vary("dt", &["1", "2", "3"])
            .seeds(10);
        spec.cap = 29;
        match spec.points() {
            Err(SweepError::TooLarge { size, cap }) => assert_eq!((size, cap), (30, 29)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vary_parsing() {
        assert_eq!(
            parse_vary("dt=1, 2,4").unwrap(),
            ("dt".to_string(), vec!["1".into(), "2".into(), "4".into()])
        );
        assert!(matches!(parse_vary("dt"), Err(SweepError::BadVary(_))));
        assert!(matches!(parse_vary("speed=1"), Err(SweepError::UnknownVaryKey(_))));
        assert!(matches!(parse_vary("seed=1,2"), Err(SweepError::UnknownVaryKey(_))));
        assert!(matches!(parse_vary("dt=,"), Err(SweepError::NoValues(_))));
    }

    #[test]
    fn constant_metric_has_zero_std() {
        let s = Stat::of(&[4.0, 4.0, 4.0]);
        assert_eq!((s.mean, s.std), (4.0, 0.0));
        let s = Stat::of(&[1.0, 3.0]);
        assert_eq!((s.mean, s.std), (2.0, 2f64.sqrt()));
    }

    #[test]
    fn sweep_rows_are_sorted_and_self_describing() {
        let spec = SweepSpec::new(base("region = line:6\ne0 = 40\nseed = 10"))
            .vary("dt", &["2", "4"])
            .seeds(3);
        let rows = spec.run().unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.windows(2).all(|w| w[0].run_id < w[1].run_id));
        assert_eq!(rows[4].dt, 4);
        assert_eq!(rows[4].seed, 11);
        let aggs = aggregate(&rows);
        assert_eq!(aggs.len(), 2);
        assert_eq!(aggs[1].runs, 3);

        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), row_header().join(","));
        assert_eq!(read_rows(buf.as_slice()).unwrap(), rows);
    }
}
