use std::fmt;
use std::io::Write;
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::align::{Method, Order, Pipeline};
use crate::corpus::{Corpus, InjectionScheme, TargetSet};
use crate::error::{Error, Result};
use crate::io::KeyValues;
use crate::measures::{median_split, score_targets, Measure, DEFAULT_LND_K};
use crate::sgns::TrainingConfig;

use super::eval::{accuracy, freq_bias, spearman};

pub const DEFAULT_DIMS: [usize; 13] = [5, 10, 25, 50, 80, 150, 200, 250, 300, 350, 500, 750, 1000];
pub const DEFAULT_RUNS: usize = 5;

pub const CELLS_HEADER: &str =
    "method,order,dim,run,seed,epochs,spearman,accuracy,freq_bias,wallclock_s";
pub const AGGREGATE_HEADER: &str = "dim,metric,mean,min,max";

/// A grid of (dimensionality, run) cells sharing one pipeline. Run `i`
/// trains with `seeds[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub dims: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Template; `dim` and `seed` are replaced per cell.
    pub pipeline: Pipeline,
    /// Neighbourhood size for the LND labels.
    pub k: usize,
    /// Cells trained concurrently.
    pub jobs: usize,
    /// Record per-cell wallclock. Off gives reproducible files.
    pub wallclock: bool,
}

impl SweepSpec {
    /// Default grid and `DEFAULT_RUNS` runs seeded `base_seed + i`.
    pub fn new(pipeline: Pipeline, base_seed: u64) -> Self {
        SweepSpec {
            dims: DEFAULT_DIMS.to_vec(),
            seeds: default_seeds(base_seed, DEFAULT_RUNS),
            pipeline,
            k: DEFAULT_LND_K,
            jobs: 1,
            wallclock: true,
        }
    }

    pub fn runs(&self) -> usize {
        self.seeds.len()
    }

    pub fn epochs(&self) -> usize {
        self.pipeline.config.epochs
    }

    /// Reads a flat config. `method`, `order`, `dims` and `epochs` are
    /// required; everything else falls back to the usual defaults.
    ///
    /// Optional keys: `runs`, `seed` (base seed), `seeds` (explicit list),
    /// `window`, `negatives`, `lr`, `subsample`, `threads`, `jobs`, `k`,
    /// `init_context`, `injection` (`wi` or `tr`), `wallclock`.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let known = [
            "method",
            "order",
            "dims",
            "epochs",
            "runs",
            "seed",
            "seeds",
            "window",
            "negatives",
            "lr",
            "subsample",
            "threads",
            "jobs",
            "k",
            "init_context",
            "injection",
            "wallclock",
        ];
        if let Some(k) = kv.keys().find(|k| !known.contains(k)) {
            return Err(Error::InvalidParameter(format!("unknown sweep key `{k}`")));
        }
        let method: Method = kv.require("method")?.parse()?;
        let order: Order = kv.require("order")?.parse()?;
        let dims: Vec<usize> = kv.parse_list("dims")?.unwrap_or_default();
        let epochs: usize = kv.parse_value("epochs")?.ok_or_else(|| missing("epochs"))?;
        let d = TrainingConfig::default();
        let config = TrainingConfig {
            epochs,
            window: kv.parse_value("window")?.unwrap_or(d.window),
            negatives: kv.parse_value("negatives")?.unwrap_or(d.negatives),
            learning_rate: kv.parse_value("lr")?.unwrap_or(d.learning_rate),
            subsample_threshold: kv.parse_value("subsample")?,
            threads: kv.parse_value("threads")?.unwrap_or(d.threads),
            ..d
        };
        let injection = match kv.get("injection") {
            None | Some("wi") => InjectionScheme::WordInjection,
            Some("tr") => InjectionScheme::TemporalReferencing,
            Some(other) => {
                return Err(Error::InvalidParameter(format!(
                    "unknown injection scheme `{other}`"
                )))
            }
        };
        let pipeline = Pipeline {
            method,
            order,
            config,
            init_context: kv.parse_value("init_context")?.unwrap_or(true),
            injection,
        };
        let base_seed: u64 = kv.parse_value("seed")?.unwrap_or(1);
        let seeds = match kv.parse_list::<u64>("seeds")? {
            Some(seeds) => {
                if let Some(runs) = kv.parse_value::<usize>("runs")? {
                    if runs != seeds.len() {
                        return Err(Error::InvalidParameter(format!(
                            "runs={runs} but {} seeds listed",
                            seeds.len()
                        )));
                    }
                }
                seeds
            }
            None => default_seeds(base_seed, kv.parse_value("runs")?.unwrap_or(DEFAULT_RUNS)),
        };
        let spec = SweepSpec {
            dims,
            seeds,
            pipeline,
            k: kv.parse_value("k")?.unwrap_or(DEFAULT_LND_K),
            jobs: kv.parse_value("jobs")?.unwrap_or(1),
            wallclock: kv.parse_value("wallclock")?.unwrap_or(true),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("dims must list positive integers".into());
        }
        if self.seeds.is_empty() {
            return bad("runs must be positive".into());
        }
        if self.pipeline.config.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if self.k == 0 || self.jobs == 0 {
            return bad("k and jobs must be positive".into());
        }
        self.pipeline.validate()
    }

    fn cells(&self) -> Vec<(usize, usize, u64)> {
        self.dims
            .iter()
            .flat_map(|&dim| {
                self.seeds
                    .iter()
                    .enumerate()
                    .map(move |(run, &seed)| (dim, run, seed))
            })
            .collect()
    }
}

fn missing(key: &str) -> Error {
    Error::InvalidParameter(format!("missing required key `{key}`"))
}

pub fn default_seeds(base: u64, runs: usize) -> Vec<u64> {
    (0..runs as u64).map(|i| base.wrapping_add(i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Spearman,
    Accuracy,
    FreqBias,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Spearman, Metric::Accuracy, Metric::FreqBias];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Spearman => "spearman",
            Metric::Accuracy => "accuracy",
            Metric::FreqBias => "freq_bias",
        })
    }
}

/// One trained pipeline. Metrics that could not be computed are `None`;
/// the reasons are in `notes`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub dim: usize,
    pub run: usize,
    pub seed: u64,
    pub epochs: usize,
    pub spearman: Option<f64>,
    pub accuracy: Option<f64>,
    pub freq_bias: Option<f64>,
    pub wallclock_s: Option<f64>,
    pub notes: Vec<String>,
}

impl SweepCell {
    pub fn metric(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Spearman => self.spearman,
            Metric::Accuracy => self.accuracy,
            Metric::FreqBias => self.freq_bias,
        }
    }

    /// A cell with no metric at all, typically because training failed.
    pub fn is_failed(&self) -> bool {
        Metric::ALL.iter().all(|&m| self.metric(m).is_none())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub dim: usize,
    pub metric: Metric,
    /// Mean, min and max over the cells reporting the metric.
    pub summary: Option<(f64, f64, f64)>,
    /// Number of cells that contributed.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub method: Method,
    pub order: Order,
    /// Ordered by dimensionality (as listed in the spec), then run.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut dims: Vec<usize> = Vec::new();
        for c in &self.cells {
            if !dims.contains(&c.dim) {
                dims.push(c.dim);
            }
        }
        dims.into_iter()
            .flat_map(|dim| {
                Metric::ALL.into_iter().map(move |metric| {
                    let values: Vec<f64> = self
                        .cells
                        .iter()
                        .filter(|c| c.dim == dim)
                        .filter_map(|c| c.metric(metric))
                        .collect();
                    let summary = (!values.is_empty()).then(|| {
                        let mean = values.iter().sum::<f64>() / values.len() as f64;
                        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        (mean, min, max)
                    });
                    Aggregate {
                        dim,
                        metric,
                        summary,
                        n: values.len(),
                    }
                })
            })
            .collect()
    }

    pub fn aggregate(&self, dim: usize, metric: Metric) -> Option<Aggregate> {
        self.aggregates()
            .into_iter()
            .find(|a| a.dim == dim && a.metric == metric)
    }

    /// Dimensionalities where every cell failed.
    pub fn failed_dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self.cells.iter().map(|c| c.dim).collect();
        dims.dedup();
        dims.retain(|&d| {
            self.cells
                .iter()
                .filter(|c| c.dim == d)
                .all(SweepCell::is_failed)
        });
        dims
    }

    pub fn write_cells(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{CELLS_HEADER}")?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                self.method,
                self.order,
                c.dim,
                c.run,
                c.seed,
                c.epochs,
                fmt_value(c.spearman),
                fmt_value(c.accuracy),
                fmt_value(c.freq_bias),
                c.wallclock_s
                    .map_or_else(|| "NA".to_owned(), |w| format!("{w:.3}"))
            )?;
        }
        Ok(())
    }

    pub fn write_aggregates(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{AGGREGATE_HEADER}")?;
        for a in self.aggregates() {
            match a.summary {
                Some((mean, min, max)) => {
                    writeln!(out, "{},{},{mean:.6},{min:.6},{max:.6}", a.dim, a.metric)?
                }
                None => writeln!(out, "{},{},NA,NA,NA", a.dim, a.metric)?,
            }
        }
        Ok(())
    }
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), |v| format!("{v:.6}"))
}

/// Parses rows written by [`SweepResult::write_cells`], e.g. to resume an
/// interrupted sweep. Metric values are read back at the written precision.
pub fn parse_cells(text: &str) -> Result<Vec<SweepCell>> {
    let mut lines = text.lines();
    let bad = |line: usize, m: String| Error::Parse {
        path: "<sweep cells>".into(),
        line,
        message: m,
    };
    match lines.next() {
        Some(h) if h == CELLS_HEADER => {}
        _ => return Err(bad(1, "missing sweep header".into())),
    }
    let opt = |s: &str, line: usize| -> Result<Option<f64>> {
        if s == "NA" {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| bad(line, format!("bad number `{s}`")))
        }
    };
    let mut cells = Vec::new();
    for (i, row) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let line = i + 2;
        let f: Vec<&str> = row.split(',').collect();
        if f.len() != 10 {
            return Err(bad(line, format!("expected 10 fields, found {}", f.len())));
        }
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| bad(line, format!("bad integer `{s}`")))
        };
        cells.push(SweepCell {
            dim: int(f[2])? as usize,
            run: int(f[3])? as usize,
            seed: int(f[4])?,
            epochs: int(f[5])? as usize,
            spearman: opt(f[6], line)?,
            accuracy: opt(f[7], line)?,
            freq_bias: opt(f[8], line)?,
            wallclock_s: opt(f[9], line)?,
            notes: Vec::new(),
        });
    }
    Ok(cells)
}

/// Trains and evaluates one cell. Ranking uses CD against graded gold,
/// labels come from a median split of LND scores.
pub fn run_cell(
    spec: &SweepSpec,
    (dim, run, seed): (usize, usize, u64),
    corpus1: &Corpus,
    corpus2: &Corpus,
    targets: &TargetSet,
) -> SweepCell {
    let start = Instant::now();
    let mut pipeline = spec.pipeline.clone();
    pipeline.config.dim = dim;
    pipeline.config.seed = seed;
    let mut cell = SweepCell {
        dim,
        run,
        seed,
        epochs: pipeline.config.epochs,
        spearman: None,
        accuracy: None,
        freq_bias: None,
        wallclock_s: None,
        notes: Vec::new(),
    };
    match pipeline.run(corpus1, corpus2, targets) {
        Err(e) => cell.notes.push(format!("pipeline: {e}")),
        Ok(spaces) => {
            let cd = score_targets(&spaces, targets, Measure::Cd, spec.k);
            match spearman(&cd, targets) {
                Ok(c) => cell.spearman = Some(c.rho),
                Err(e) => cell.notes.push(format!("spearman: {e}")),
            }
            match freq_bias(&cd, corpus2, targets) {
                Ok(c) => cell.freq_bias = Some(c.rho),
                Err(e) => cell.notes.push(format!("freq_bias: {e}")),
            }
            let lnd = score_targets(&spaces, targets, Measure::Lnd, spec.k);
            match median_split(&lnd).and_then(|labels| accuracy(&labels, targets)) {
                Ok(a) => cell.accuracy = Some(a.value),
                Err(e) => cell.notes.push(format!("accuracy: {e}")),
            }
        }
    }
    if spec.wallclock {
        cell.wallclock_s = Some(start.elapsed().as_secs_f64());
    }
    cell
}

/// Runs every cell of the grid; see [`resume_sweep`].
pub fn run_sweep(
    spec: &SweepSpec,
    corpus1: &Corpus,
    corpus2: &Corpus,
    targets: &TargetSet,
) -> Result<SweepResult> {
    resume_sweep(spec, corpus1, corpus2, targets, &[], &|_| {})
}

/// Runs the cells of the grid not already in `done` (matched on dim, run,
/// seed and epochs; failed cells are retried). `on_cell` sees each newly
/// finished cell, in completion order. Cell failures are recorded, not
/// returned; only an invalid spec is an error.
pub fn resume_sweep(
    spec: &SweepSpec,
    corpus1: &Corpus,
    corpus2: &Corpus,
    targets: &TargetSet,
    done: &[SweepCell],
    on_cell: &(dyn Fn(&SweepCell) + Sync),
) -> Result<SweepResult> {
    spec.validate()?;
    let previous = |&(dim, run, seed): &(usize, usize, u64)| {
        done.iter().find(|c| {
            c.dim == dim
                && c.run == run
                && c.seed == seed
                && c.epochs == spec.epochs()
                && !c.is_failed()
        })
    };
    let todo: Vec<(usize, usize, u64)> = spec
        .cells()
        .into_iter()
        .filter(|c| previous(c).is_none())
        .collect();
    let work = |key: &(usize, usize, u64)| {
        let cell = run_cell(spec, *key, corpus1, corpus2, targets);
        on_cell(&cell);
        cell
    };

    #[cfg(feature = "parallel")]
    let fresh: Vec<SweepCell> = if spec.jobs > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.jobs)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| todo.par_iter().map(work).collect())
    } else {
        todo.iter().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let fresh: Vec<SweepCell> = todo.iter().map(work).collect();

    let mut fresh = fresh.into_iter();
    let cells = spec
        .cells()
        .iter()
        .map(|key| match previous(key) {
            Some(c) => c.clone(),
            None => fresh.next().expect("one fresh cell per missing key"),
        })
        .collect();
    Ok(SweepResult {
        method: spec.pipeline.method,
        order: spec.pipeline.order,
        cells,
    })
}
