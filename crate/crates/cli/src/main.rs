use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};
use semchange::align::{Method, Order, Pipeline};
use semchange::corpus::{corpus_stats, load_corpus, threshold_corpus, Corpus, InjectionScheme};
use semchange::experiments::{self, gen_synthetic_pair, SweepSpec, SyntheticSpec};
use semchange::io::{self as sio, KeyValues};
use semchange::measures::{median_split, score_targets, Measure};
use semchange::{digest_hex, AlignedSpaces, TrainingConfig};

const USAGE: u8 = 2;
const STRICT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "semchange",
    version,
    about = "Detect lexical semantic change between two corpora"
)]
struct Cli {
    /// Directory for outputs whose path is not given explicitly.
    #[arg(long, global = true, env = "SEMCHANGE_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Token, type and TTR counts per corpus.
    Stats {
        #[arg(required = true)]
        corpora: Vec<PathBuf>,
        /// Also print the frequency of each word in this targets file.
        #[arg(long)]
        targets: Option<PathBuf>,
    },
    /// Train and align embeddings for two corpora.
    #[command(alias = "train")]
    Align(AlignArgs),
    /// Score targets on aligned spaces.
    Score {
        spaces: PathBuf,
        targets: PathBuf,
        #[arg(long, default_value = "cd")]
        measure: Measure,
        #[arg(long, default_value_t = semchange::measures::DEFAULT_LND_K)]
        k: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Fail with exit code 3 if any target cannot be scored.
        #[arg(long)]
        strict: bool,
    },
    /// Median-split graded scores into binary labels.
    Label {
        scores: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Spearman and accuracy against gold targets.
    Eval {
        gold: PathBuf,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Dimensionality sweep described by a key=value config.
    Sweep {
        config: PathBuf,
        corpus1: PathBuf,
        corpus2: PathBuf,
        targets: PathBuf,
        #[arg(long, default_value_t = 1)]
        threshold1: u64,
        #[arg(long, default_value_t = 1)]
        threshold2: u64,
        /// Cells trained concurrently; overrides the config.
        #[arg(long)]
        jobs: Option<usize>,
        /// Write NA instead of timings so reruns are byte-identical.
        #[arg(long)]
        no_wallclock: bool,
    },
    /// Generate a synthetic corpus pair with designed change.
    Synth { config: PathBuf },
    /// Check the inputs recorded in a manifest against their checksums.
    Verify { manifest: PathBuf },
}

#[derive(Args)]
struct AlignArgs {
    corpus1: PathBuf,
    corpus2: PathBuf,
    #[arg(long, default_value = "vi")]
    method: Method,
    /// Training order of vector initialisation.
    #[arg(long)]
    order: Option<Order>,
    /// Targets to inject; required by `--method wi`.
    #[arg(long)]
    targets: Option<PathBuf>,
    /// `wi` tags targets everywhere, `tr` only as training targets.
    #[arg(long, default_value = "wi")]
    injection: String,
    #[arg(long, default_value_t = 300)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 10)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 0.025)]
    lr: f64,
    #[arg(long)]
    subsample: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 1)]
    threshold1: u64,
    #[arg(long, default_value_t = 1)]
    threshold2: u64,
    /// Start the second VI stage's context vectors from the first model.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    init_context: bool,
    /// Output directory; defaults to `<out-dir>/spaces`.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<semchange::Error> for Failure {
    fn from(e: semchange::Error) -> Self {
        Failure {
            code: USAGE,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: USAGE,
        message: message.into(),
    }
}

fn write_err(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| usage(format!("cannot write {}: {e}", path.display()))
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli, started) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("semchange: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli, started: Instant) -> Outcome {
    let out_dir = &cli.out_dir;
    match &cli.command {
        Command::Stats { corpora, targets } => cmd_stats(corpora, targets.as_deref()),
        Command::Align(args) => cmd_align(args, out_dir, started),
        Command::Score {
            spaces,
            targets,
            measure,
            k,
            output,
            strict,
        } => {
            let output = output.clone().unwrap_or_else(|| out_dir.join("scores.tsv"));
            cmd_score(spaces, targets, *measure, *k, &output, *strict, started)
        }
        Command::Label { scores, output } => {
            let output = output.clone().unwrap_or_else(|| out_dir.join("labels.tsv"));
            cmd_label(scores, &output, started)
        }
        Command::Eval {
            gold,
            scores,
            labels,
            output,
        } => {
            let output = output.clone().unwrap_or_else(|| out_dir.join("eval.tsv"));
            cmd_eval(gold, scores.as_deref(), labels.as_deref(), &output, started)
        }
        Command::Sweep {
            config,
            corpus1,
            corpus2,
            targets,
            threshold1,
            threshold2,
            jobs,
            no_wallclock,
        } => cmd_sweep(
            config,
            [corpus1, corpus2],
            [*threshold1, *threshold2],
            targets,
            *jobs,
            *no_wallclock,
            out_dir,
            started,
        ),
        Command::Synth { config } => cmd_synth(config, out_dir, started),
        Command::Verify { manifest } => cmd_verify(manifest),
    }
}

/// Provenance written next to every output: how it was produced and from
/// which inputs.
struct Manifest {
    config: String,
    seeds: Vec<u64>,
    inputs: Vec<(PathBuf, String)>,
}

impl Manifest {
    fn new(config: String, seeds: Vec<u64>, inputs: &[&Path]) -> Result<Self, Failure> {
        let inputs = inputs
            .iter()
            .map(|p| Ok((p.to_path_buf(), file_digest(p)?)))
            .collect::<Result<_, Failure>>()?;
        Ok(Manifest {
            config,
            seeds,
            inputs,
        })
    }

    /// Identifies the inputs and configuration, not the run.
    fn digest(&self) -> String {
        let mut text = self.config.clone();
        for (_, sum) in &self.inputs {
            text.push_str(sum);
            text.push('\n');
        }
        digest_hex(text.as_bytes())
    }

    fn write(&self, path: &Path, wallclock: Option<f64>) -> Outcome {
        let command: Vec<String> = std::env::args().collect();
        let mut text = format!(
            "tool=semchange {}\ncommand={}\nconfig_digest={}\nrun_digest={}\nseeds={}\n",
            env!("CARGO_PKG_VERSION"),
            command.join(" "),
            digest_hex(self.config.as_bytes()),
            self.digest(),
            self.seeds
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        for (i, (p, sum)) in self.inputs.iter().enumerate() {
            text.push_str(&format!(
                "input{i}={}\ninput{i}_sha256={sum}\n",
                p.display()
            ));
        }
        if let Some(w) = wallclock {
            text.push_str(&format!("wallclock_s={w:.3}\n"));
        }
        text.push_str("# config\n");
        for line in self.config.lines() {
            text.push_str(&format!("config.{line}\n"));
        }
        write_file(path, text.as_bytes())
    }
}

fn file_digest(path: &Path) -> Result<String, Failure> {
    let bytes =
        fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(digest_hex(&bytes))
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    output.with_file_name(name)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(write_err(parent))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(write_err(path))
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    let mut out = create(path)?;
    out.write_all(bytes)
        .and_then(|_| out.flush())
        .map_err(write_err(path))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Outcome {
    let mut out = create(path)?;
    f(&mut out)
        .and_then(|_| out.flush())
        .map_err(write_err(path))
}

fn load_thresholded(path: &Path, threshold: u64) -> Result<Corpus, Failure> {
    let corpus = load_corpus(path, None)?;
    if threshold > 1 {
        Ok(threshold_corpus(&corpus, threshold)?)
    } else {
        Ok(corpus)
    }
}

fn cmd_stats(corpora: &[PathBuf], targets: Option<&Path>) -> Outcome {
    let targets = targets.map(sio::load_targets).transpose()?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut loaded = Vec::new();
    writeln!(out, "corpus\ttokens\ttypes\tTTR").map_err(write_err(Path::new("stdout")))?;
    for path in corpora {
        let corpus = load_corpus(path, None)?;
        let s = corpus_stats(&corpus)?;
        writeln!(
            out,
            "{}\t{}\t{}\t{:.2}",
            path.display(),
            s.tokens,
            s.types,
            s.ttr
        )
        .map_err(write_err(Path::new("stdout")))?;
        loaded.push(corpus);
    }
    if let Some(targets) = targets {
        let header: Vec<String> = corpora.iter().map(|p| p.display().to_string()).collect();
        writeln!(out, "\nword\t{}", header.join("\t")).map_err(write_err(Path::new("stdout")))?;
        for word in targets.words() {
            let counts: Vec<String> = loaded
                .iter()
                .map(|c| c.frequency(word).to_string())
                .collect();
            writeln!(out, "{word}\t{}", counts.join("\t"))
                .map_err(write_err(Path::new("stdout")))?;
        }
    }
    Ok(())
}

fn cmd_align(args: &AlignArgs, out_dir: &Path, started: Instant) -> Outcome {
    if args.order.is_some() && !matches!(args.method, Method::Vi | Method::ViOp) {
        return Err(usage(format!(
            "--order applies to vi only, not --method {}",
            args.method
        )));
    }
    let injection = match args.injection.as_str() {
        "wi" => InjectionScheme::WordInjection,
        "tr" => InjectionScheme::TemporalReferencing,
        other => {
            return Err(usage(format!(
                "unknown --injection `{other}`, expected wi or tr"
            )))
        }
    };
    if args.method == Method::Wi && args.targets.is_none() {
        return Err(usage("--method wi needs --targets"));
    }
    let config = TrainingConfig {
        dim: args.dim,
        window: args.window,
        negatives: args.negatives,
        learning_rate: args.lr,
        epochs: args.epochs,
        subsample_threshold: args.subsample,
        seed: args.seed,
        threads: args.threads,
        ..TrainingConfig::default()
    };
    let pipeline = Pipeline {
        method: args.method,
        order: args.order.unwrap_or_default(),
        config,
        init_context: args.init_context,
        injection,
    };
    pipeline.validate()?;
    let c1 = load_thresholded(&args.corpus1, args.threshold1)?;
    let c2 = load_thresholded(&args.corpus2, args.threshold2)?;
    let targets = match &args.targets {
        Some(p) => sio::load_targets(p)?,
        None => semchange::TargetSet::new(Vec::new())?,
    };
    let spaces = pipeline.run(&c1, &c2, &targets)?;
    for w in &spaces.warnings {
        eprintln!("semchange: warning: {w}");
    }
    let dir = args
        .output
        .clone()
        .unwrap_or_else(|| out_dir.join("spaces"));
    spaces.save(&dir)?;

    let config_text = format!(
        "method={}\norder={}\ninjection={}\ninit_context={}\nthreshold1={}\nthreshold2={}\n{}",
        pipeline.method,
        pipeline.order,
        args.injection,
        pipeline.init_context,
        args.threshold1,
        args.threshold2,
        pipeline.config.describe()
    );
    let mut inputs: Vec<&Path> = vec![&args.corpus1, &args.corpus2];
    if let Some(t) = &args.targets {
        inputs.push(t);
    }
    Manifest::new(config_text, vec![args.seed], &inputs)?.write(
        &dir.join("manifest.txt"),
        Some(started.elapsed().as_secs_f64()),
    )
}

fn cmd_score(
    spaces_dir: &Path,
    targets_path: &Path,
    measure: Measure,
    k: usize,
    output: &Path,
    strict: bool,
    started: Instant,
) -> Outcome {
    let spaces = AlignedSpaces::load(spaces_dir)?;
    let targets = sio::load_targets(targets_path)?;
    let scores = score_targets(&spaces, &targets, measure, k);
    write_with(output, |out| sio::write_scores(out, &scores))?;
    let mut sidecar = output.as_os_str().to_owned();
    sidecar.push(".excluded");
    let sidecar = PathBuf::from(sidecar);
    if scores.excluded.is_empty() {
        if sidecar.exists() {
            fs::remove_file(&sidecar).map_err(write_err(&sidecar))?;
        }
    } else {
        write_with(&sidecar, |out| {
            scores
                .excluded
                .iter()
                .try_for_each(|(w, reason)| writeln!(out, "{w}\t{reason}"))
        })?;
        eprintln!(
            "semchange: warning: {} target(s) could not be scored, see {}",
            scores.excluded.len(),
            sidecar.display()
        );
    }
    let inputs = [
        spaces_dir.join("space1.vec"),
        spaces_dir.join("space2.vec"),
        targets_path.to_path_buf(),
    ];
    let refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    Manifest::new(format!("measure={measure}\nk={k}\n"), Vec::new(), &refs)?.write(
        &manifest_path(output),
        Some(started.elapsed().as_secs_f64()),
    )?;
    if strict && !scores.excluded.is_empty() {
        return Err(Failure {
            code: STRICT,
            message: format!(
                "{} target(s) unresolved in strict mode",
                scores.excluded.len()
            ),
        });
    }
    Ok(())
}

fn cmd_label(scores_path: &Path, output: &Path, started: Instant) -> Outcome {
    let scores = sio::load_scores(scores_path, Measure::Cd)?;
    let labels = median_split(&scores)?;
    write_with(output, |out| sio::write_labels(out, &labels))?;
    Manifest::new("median_split\n".into(), Vec::new(), &[scores_path])?.write(
        &manifest_path(output),
        Some(started.elapsed().as_secs_f64()),
    )
}

fn cmd_eval(
    gold_path: &Path,
    scores: Option<&Path>,
    labels: Option<&Path>,
    output: &Path,
    started: Instant,
) -> Outcome {
    if scores.is_none() && labels.is_none() {
        return Err(usage("eval needs --scores, --labels or both"));
    }
    let gold = sio::load_targets(gold_path)?;
    let pred_scores = scores
        .map(|p| sio::load_scores(p, Measure::Cd))
        .transpose()?;
    let pred_labels = labels.map(sio::load_labels).transpose()?;
    let report = experiments::evaluate(pred_scores.as_ref(), pred_labels.as_ref(), &gold);
    for (what, why) in &report.excluded {
        eprintln!("semchange: warning: {what}: {why}");
    }
    write_file(output, report.to_tsv().as_bytes())?;
    let mut inputs = vec![gold_path];
    inputs.extend(scores);
    inputs.extend(labels);
    Manifest::new("eval\n".into(), Vec::new(), &inputs)?.write(
        &manifest_path(output),
        Some(started.elapsed().as_secs_f64()),
    )
}

const PARTIAL_PREFIX: &str = "# run_digest=";

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    config_path: &Path,
    corpora: [&PathBuf; 2],
    thresholds: [u64; 2],
    targets_path: &Path,
    jobs: Option<usize>,
    no_wallclock: bool,
    out_dir: &Path,
    started: Instant,
) -> Outcome {
    let kv = KeyValues::load(config_path)?;
    let mut spec = SweepSpec::from_kv(&kv)?;
    if let Some(j) = jobs {
        spec.jobs = j;
    }
    if no_wallclock {
        spec.wallclock = false;
    }
    spec.validate()?;
    let config_text = format!(
        "{}threshold1={}\nthreshold2={}\n",
        kv.canonical(),
        thresholds[0],
        thresholds[1]
    );
    let manifest = Manifest::new(
        config_text,
        spec.seeds.clone(),
        &[corpora[0], corpora[1], targets_path],
    )?;
    let digest = manifest.digest();
    let cells_path = out_dir.join("sweep.csv");
    let partial_path = out_dir.join("sweep.partial.csv");
    let done = previous_cells(&cells_path, &partial_path, &digest);

    let c1 = load_thresholded(corpora[0], thresholds[0])?;
    let c2 = load_thresholded(corpora[1], thresholds[1])?;
    let targets = sio::load_targets(targets_path)?;

    // Cells are appended as they finish so an interrupted sweep can resume.
    let mut partial = String::new();
    partial.push_str(&format!(
        "{PARTIAL_PREFIX}{digest}\n{}\n",
        experiments::sweep::CELLS_HEADER
    ));
    let partial_file = Mutex::new(create(&partial_path)?);
    {
        let mut f = partial_file.lock().expect("partial file");
        f.write_all(partial.as_bytes())
            .map_err(write_err(&partial_path))?;
        for c in &done {
            f.write_all(cell_line(&spec, c).as_bytes())
                .map_err(write_err(&partial_path))?;
        }
        f.flush().map_err(write_err(&partial_path))?;
    }
    let on_cell = |c: &experiments::SweepCell| {
        for note in &c.notes {
            eprintln!("semchange: cell dim={} run={}: {note}", c.dim, c.run);
        }
        let mut f = partial_file.lock().expect("partial file");
        let _ = f
            .write_all(cell_line(&spec, c).as_bytes())
            .and_then(|_| f.flush());
    };
    let result = experiments::resume_sweep(&spec, &c1, &c2, &targets, &done, &on_cell)?;
    drop(partial_file);

    write_with(&cells_path, |out| result.write_cells(out))?;
    write_with(&out_dir.join("sweep_aggregate.csv"), |out| {
        result.write_aggregates(out)
    })?;
    let wallclock = spec.wallclock.then(|| started.elapsed().as_secs_f64());
    manifest.write(&out_dir.join("sweep.manifest"), wallclock)?;
    fs::remove_file(&partial_path).map_err(write_err(&partial_path))?;
    for d in result.failed_dims() {
        eprintln!("semchange: warning: every cell failed at dim {d}");
    }
    Ok(())
}

fn cell_line(spec: &SweepSpec, cell: &experiments::SweepCell) -> String {
    let result = experiments::SweepResult {
        method: spec.pipeline.method,
        order: spec.pipeline.order,
        cells: vec![cell.clone()],
    };
    let mut buf = Vec::new();
    result.write_cells(&mut buf).expect("in-memory write");
    let text = String::from_utf8(buf).expect("utf-8");
    text.lines()
        .nth(1)
        .map(|l| format!("{l}\n"))
        .unwrap_or_default()
}

/// Cells from an earlier run with the same inputs and configuration, taken
/// from a finished sweep or an interrupted one.
fn previous_cells(
    cells_path: &Path,
    partial_path: &Path,
    digest: &str,
) -> Vec<experiments::SweepCell> {
    let manifest = cells_path.with_file_name("sweep.manifest");
    if let Ok(kv) = KeyValues::load(&manifest) {
        if kv.get("run_digest") == Some(digest) {
            if let Ok(cells) = fs::read_to_string(cells_path).map(|t| experiments::parse_cells(&t))
            {
                return cells.unwrap_or_default();
            }
        }
    }
    let Ok(text) = fs::read_to_string(partial_path) else {
        return Vec::new();
    };
    match text.split_once('\n') {
        Some((first, rest)) if first.strip_prefix(PARTIAL_PREFIX) == Some(digest) => {
            experiments::parse_cells(rest).unwrap_or_default()
        }
        _ => Vec::new(),
    }
}

fn cmd_synth(config_path: &Path, out_dir: &Path, started: Instant) -> Outcome {
    let kv = KeyValues::load(config_path)?;
    let spec = SyntheticSpec::from_kv(&kv)?;
    let pair = gen_synthetic_pair(&spec)?;
    write_with(&out_dir.join("corpus1.txt"), |out| {
        pair.corpus1.write_text(out)
    })?;
    write_with(&out_dir.join("corpus2.txt"), |out| {
        pair.corpus2.write_text(out)
    })?;
    write_with(&out_dir.join("targets.tsv"), |out| {
        sio::write_targets(out, &pair.targets)
    })?;
    Manifest::new(kv.canonical(), vec![spec.seed], &[config_path])?.write(
        &out_dir.join("synth.manifest"),
        Some(started.elapsed().as_secs_f64()),
    )
}

fn cmd_verify(manifest_path: &Path) -> Outcome {
    let kv = KeyValues::load(manifest_path)?;
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for i in 0.. {
        let Some(path) = kv.get(&format!("input{i}")) else {
            break;
        };
        let expected = kv.require(&format!("input{i}_sha256"))?;
        checked += 1;
        match file_digest(Path::new(path)) {
            Ok(sum) if sum == expected => {}
            Ok(_) => mismatches.push(format!("{path}: checksum differs")),
            Err(f) => mismatches.push(f.message),
        }
    }
    if mismatches.is_empty() {
        println!("{checked} input(s) verified");
        Ok(())
    } else {
        Err(Failure {
            code: STRICT,
            message: mismatches.join("; "),
        })
    }
}
