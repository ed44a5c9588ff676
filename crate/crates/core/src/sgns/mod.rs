//! Skip-gram with negative sampling.
//!
//! The trainer runs in one of two modes. With `threads == 1` it is a single
//! seeded worker and reproduces its output bit for bit. With more threads
//! (and the `parallel` feature) sentence shards are processed concurrently
//! against shared matrices without locks, so runs are no longer
//! reproducible. Without the feature, `threads` is ignored.

mod kernel;
mod noise;

use std::cell::Cell;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, PairScheme, Vocabulary};
use crate::error::{Error, Result};
use crate::io;

pub use kernel::sigmoid;
pub use noise::{negative_sample, NoiseTable};

/// Final learning rate as a fraction of the initial one.
pub const MIN_LEARNING_RATE_RATIO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub dim: usize,
    /// Symmetric context window, in tokens on each side.
    pub window: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Frequent-word down-sampling threshold; `None` disables it.
    pub subsample_threshold: Option<f64>,
    pub unigram_exponent: f64,
    /// Draw each centre word's window uniformly from `1..=window`.
    pub shrink_window: bool,
    pub seed: u64,
    pub threads: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dim: 300,
            window: 10,
            negatives: 5,
            learning_rate: 0.025,
            epochs: 5,
            subsample_threshold: None,
            unigram_exponent: 1.0,
            shrink_window: false,
            seed: 1,
            threads: 1,
        }
    }
}

impl TrainingConfig {
    pub fn with_dim(dim: usize) -> Self {
        TrainingConfig {
            dim,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.dim == 0 {
            return bad("dimensionality must be positive");
        }
        if self.window == 0 {
            return bad("window must be positive");
        }
        if self.negatives == 0 {
            return bad("number of negative samples must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be a positive number");
        }
        if !(0.0..=1.0).contains(&self.unigram_exponent) {
            return bad("unigram exponent must lie in [0, 1]");
        }
        if self.threads == 0 {
            return bad("thread count must be positive");
        }
        if let Some(t) = self.subsample_threshold {
            if !(t.is_finite() && t > 0.0) {
                return bad("sub-sampling threshold must be positive");
            }
        }
        Ok(())
    }

    /// Canonical `key=value` lines, used for digests and metadata files.
    pub fn describe(&self) -> String {
        let subsample = self
            .subsample_threshold
            .map(|t| t.to_string())
            .unwrap_or_else(|| "off".into());
        format!(
            "dim={}\nwindow={}\nnegatives={}\nlr={}\nepochs={}\nsubsample={}\nunigram_exponent={}\nshrink_window={}\nseed={}\nthreads={}\n",
            self.dim,
            self.window,
            self.negatives,
            self.learning_rate,
            self.epochs,
            subsample,
            self.unigram_exponent,
            self.shrink_window,
            self.seed,
            self.threads
        )
    }

    /// Learning rate after `done` of `total` planned tokens: linear decay from
    /// the initial rate down to `MIN_LEARNING_RATE_RATIO` of it.
    pub fn learning_rate_at(&self, done: u64, total: u64) -> f64 {
        let progress = if total == 0 {
            0.0
        } else {
            (done as f64 / total as f64).min(1.0)
        };
        self.learning_rate * (1.0 - (1.0 - MIN_LEARNING_RATE_RATIO) * progress)
    }
}

/// Word and context matrices over one vocabulary; row `i` belongs to id `i`.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    vocab: Arc<Vocabulary>,
    word_vectors: Array2<f64>,
    context_vectors: Array2<f64>,
    config: TrainingConfig,
    label: String,
}

impl EmbeddingModel {
    pub fn from_parts(
        vocab: Arc<Vocabulary>,
        word_vectors: Array2<f64>,
        context_vectors: Array2<f64>,
        config: TrainingConfig,
        label: impl Into<String>,
    ) -> Result<Self> {
        if word_vectors.nrows() != vocab.len() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                found: word_vectors.nrows(),
            });
        }
        if word_vectors.dim() != context_vectors.dim() {
            return Err(Error::DimensionMismatch {
                expected: word_vectors.ncols(),
                found: context_vectors.ncols(),
            });
        }
        if !word_vectors
            .iter()
            .chain(context_vectors.iter())
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("embedding matrix"));
        }
        // Rows are addressed as contiguous slices.
        let word_vectors = word_vectors.as_standard_layout().into_owned();
        let context_vectors = context_vectors.as_standard_layout().into_owned();
        Ok(EmbeddingModel {
            vocab,
            word_vectors,
            context_vectors,
            config,
            label: label.into(),
        })
    }

    /// A model whose context matrix is all zeros.
    pub fn from_word_vectors(
        vocab: Arc<Vocabulary>,
        word_vectors: Array2<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let context = Array2::zeros(word_vectors.dim());
        let config = TrainingConfig::with_dim(word_vectors.ncols());
        Self::from_parts(vocab, word_vectors, context, config, label)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn shared_vocab(&self) -> Arc<Vocabulary> {
        Arc::clone(&self.vocab)
    }

    pub fn dim(&self) -> usize {
        self.word_vectors.ncols()
    }

    pub fn len(&self) -> usize {
        self.word_vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn word_vectors(&self) -> &Array2<f64> {
        &self.word_vectors
    }

    pub fn context_vectors(&self) -> &Array2<f64> {
        &self.context_vectors
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn vector(&self, word: &str) -> Option<ArrayView1<'_, f64>> {
        self.vocab
            .id(word)
            .map(|id| self.word_vectors.row(id as usize))
    }

    pub fn is_finite(&self) -> bool {
        self.word_vectors
            .iter()
            .chain(self.context_vectors.iter())
            .all(|v| v.is_finite())
    }

    pub(crate) fn with_word_vectors(mut self, word_vectors: Array2<f64>) -> Self {
        debug_assert_eq!(word_vectors.dim(), self.word_vectors.dim());
        self.word_vectors = word_vectors.as_standard_layout().into_owned();
        self
    }

    /// Writes the word matrix to `path` and the context matrix next to it
    /// with a `.ctx` suffix.
    pub fn save(&self, path: &Path) -> Result<()> {
        io::save_vectors(path, &self.vocab, &self.word_vectors)?;
        io::save_vectors(&io::context_path(path), &self.vocab, &self.context_vectors)
    }

    /// Loads a model saved by [`EmbeddingModel::save`]. A missing context file
    /// yields a zero context matrix.
    pub fn load(path: &Path) -> Result<Self> {
        let (vocab, word) = io::load_vectors(path)?;
        let ctx_path = io::context_path(path);
        let context = if ctx_path.exists() {
            let (ctx_vocab, ctx) = io::load_vectors(&ctx_path)?;
            if ctx_vocab.words() != vocab.words() {
                return Err(Error::InvalidParameter(format!(
                    "{} does not match the rows of {}",
                    ctx_path.display(),
                    path.display()
                )));
            }
            ctx
        } else {
            Array2::zeros(word.dim())
        };
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let config = TrainingConfig::with_dim(word.ncols());
        Self::from_parts(Arc::new(vocab), word, context, config, label)
    }

    fn matrices_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (
            self.word_vectors.as_slice_mut().expect("standard layout"),
            self.context_vectors
                .as_slice_mut()
                .expect("standard layout"),
        )
    }
}

/// How the trainer fills the matrices before the first update.
#[derive(Debug, Clone, Copy, Default)]
pub enum InitSpec<'a> {
    #[default]
    Random,
    /// Start from a prior model on the shared vocabulary. Words only the
    /// prior knows are carried over unchanged after the corpus vocabulary.
    FromModel {
        prior: &'a EmbeddingModel,
        init_context: bool,
    },
}

impl<'a> InitSpec<'a> {
    pub fn from_model(prior: &'a EmbeddingModel) -> Self {
        InitSpec::FromModel {
            prior,
            init_context: true,
        }
    }
}

/// Calls `f(w, c)` for every pair in `sentence`. `reach(i)` gives the window
/// of the centre at position `i`; `map` rewrites context ids.
#[inline]
fn visit_pairs(
    sentence: &[u32],
    mut reach: impl FnMut(usize) -> usize,
    map: Option<&[u32]>,
    mut f: impl FnMut(u32, u32),
) {
    let n = sentence.len();
    for (i, &w) in sentence.iter().enumerate() {
        let b = reach(i);
        let lo = i.saturating_sub(b);
        let hi = (i + b + 1).min(n);
        for (j, &c) in sentence.iter().enumerate().take(hi).skip(lo) {
            if j == i {
                continue;
            }
            let c = match map {
                Some(m) => m[c as usize],
                None => c,
            };
            f(w, c);
        }
    }
}

/// All (word, context) pairs within a fixed symmetric window, in corpus
/// order.
pub fn extract_pairs(corpus: &Corpus, window: usize, scheme: &PairScheme) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for sentence in corpus.sentences() {
        visit_pairs(
            sentence,
            |_| window,
            scheme.context_map(),
            |w, c| out.push((w, c)),
        );
    }
    out
}

fn pair_count(corpus: &Corpus, window: usize) -> u64 {
    corpus
        .sentences()
        .map(|s| {
            let n = s.len();
            (0..n)
                .map(|i| (i.min(window) + (n - 1 - i).min(window)) as u64)
                .sum::<u64>()
        })
        .sum()
}

/// Applies one SGD step for the positive pair `(w, c)` and its negatives.
pub fn sgd_step(model: &mut EmbeddingModel, pair: (u32, u32), negatives: &[u32], lr: f64) {
    let dim = model.dim();
    let mut grad = vec![0.0; dim];
    let (word, context) = model.matrices_mut();
    let word = Cell::from_mut(word).as_slice_of_cells();
    let context = Cell::from_mut(context).as_slice_of_cells();
    kernel::update_pair(word, context, dim, pair.0, pair.1, negatives, lr, &mut grad);
}

/// Negative per-pair objective `-(log σ(c·w) + Σ_n log σ(-n·w))`.
pub fn pair_loss(model: &EmbeddingModel, pair: (u32, u32), negatives: &[u32]) -> f64 {
    let w = model.word_vectors.row(pair.0 as usize);
    let score = |id: u32| w.dot(&model.context_vectors.row(id as usize));
    -(log_sigmoid(score(pair.1))
        + negatives
            .iter()
            .map(|&n| log_sigmoid(-score(n)))
            .sum::<f64>())
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Mean [`pair_loss`] over a sample of pairs with their negatives.
pub fn mean_pair_loss(model: &EmbeddingModel, sample: &[((u32, u32), Vec<u32>)]) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    sample
        .iter()
        .map(|(p, n)| pair_loss(model, *p, n))
        .sum::<f64>()
        / sample.len() as f64
}

/// Trains on `corpus` with plain pair extraction.
pub fn train(
    corpus: &Corpus,
    config: &TrainingConfig,
    init: InitSpec<'_>,
) -> Result<EmbeddingModel> {
    train_with_scheme(corpus, &PairScheme::Plain, config, init)
}

pub fn train_with_scheme(
    corpus: &Corpus,
    scheme: &PairScheme,
    config: &TrainingConfig,
    init: InitSpec<'_>,
) -> Result<EmbeddingModel> {
    config.validate()?;
    if let InitSpec::FromModel { prior, .. } = init {
        if prior.dim() != config.dim {
            return Err(Error::DimensionMismatch {
                expected: config.dim,
                found: prior.dim(),
            });
        }
    }
    if pair_count(corpus, config.window) == 0 {
        return Err(Error::NoPairs(corpus.label().to_owned()));
    }
    if let Some(map) = scheme.context_map() {
        if map.len() != corpus.vocab().len() {
            return Err(Error::InvalidParameter(
                "context map does not match the corpus vocabulary".into(),
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = initialise(corpus, config, init, &mut rng)?;

    let mut noise_counts = vec![0u64; model.len()];
    let token_counts = corpus.token_counts();
    for (id, &count) in token_counts.iter().enumerate() {
        let ctx = scheme.context_map().map_or(id, |m| m[id] as usize);
        noise_counts[ctx] += count;
    }
    let noise = NoiseTable::new(&noise_counts, config.unigram_exponent)?;
    let keep = config
        .subsample_threshold
        .map(|t| keep_probabilities(&token_counts, corpus.n_tokens() as u64, t));

    let job = Job {
        corpus,
        map: scheme.context_map(),
        config,
        noise: &noise,
        keep: keep.as_deref(),
        total: config.epochs as u64 * corpus.n_tokens() as u64,
    };
    let dim = model.dim();
    let (word, context) = model.matrices_mut();
    if config.threads > 1 && cfg!(feature = "parallel") {
        #[cfg(feature = "parallel")]
        job.run_parallel(word, context, dim)?;
    } else {
        job.run_sequential(word, context, dim, &mut rng);
    }
    if !model.is_finite() {
        return Err(Error::NonFinite("trained model"));
    }
    Ok(model)
}

fn initialise(
    corpus: &Corpus,
    config: &TrainingConfig,
    init: InitSpec<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<EmbeddingModel> {
    let dim = config.dim;
    let base = corpus.vocab();
    let rows = base.len();
    let mut word = Array2::zeros((rows, dim));
    let scale = 1.0 / dim as f64;
    for v in word.iter_mut() {
        *v = (rng.random::<f64>() - 0.5) * scale;
    }
    let mut context = Array2::zeros((rows, dim));

    let vocab = match init {
        InitSpec::Random => corpus.shared_vocab(),
        InitSpec::FromModel {
            prior,
            init_context,
        } => {
            for (id, w, _) in base.iter() {
                if let Some(pid) = prior.vocab().id(w) {
                    word.row_mut(id as usize)
                        .assign(&prior.word_vectors.row(pid as usize));
                    if init_context {
                        context
                            .row_mut(id as usize)
                            .assign(&prior.context_vectors.row(pid as usize));
                    }
                }
            }
            let carried: Vec<(u32, &str)> = prior
                .vocab()
                .iter()
                .filter(|(_, w, _)| !base.contains(w))
                .map(|(pid, w, _)| (pid, w))
                .collect();
            if carried.is_empty() {
                corpus.shared_vocab()
            } else {
                let extended = base.with_appended(carried.iter().map(|&(_, w)| (w, 0)));
                let mut w2 = Array2::zeros((extended.len(), dim));
                let mut c2 = Array2::zeros((extended.len(), dim));
                w2.slice_mut(ndarray::s![..rows, ..]).assign(&word);
                c2.slice_mut(ndarray::s![..rows, ..]).assign(&context);
                for (k, &(pid, _)) in carried.iter().enumerate() {
                    w2.row_mut(rows + k)
                        .assign(&prior.word_vectors.row(pid as usize));
                    c2.row_mut(rows + k)
                        .assign(&prior.context_vectors.row(pid as usize));
                }
                word = w2;
                context = c2;
                Arc::new(extended)
            }
        }
    };
    EmbeddingModel::from_parts(vocab, word, context, config.clone(), corpus.label())
}

/// Per-id probability of keeping a token under frequent-word down-sampling.
fn keep_probabilities(counts: &[u64], total: u64, threshold: f64) -> Vec<f64> {
    let scaled = threshold * total as f64;
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                1.0
            } else {
                let c = c as f64;
                (((c / scaled).sqrt() + 1.0) * scaled / c).min(1.0)
            }
        })
        .collect()
}

struct Job<'a> {
    corpus: &'a Corpus,
    map: Option<&'a [u32]>,
    config: &'a TrainingConfig,
    noise: &'a NoiseTable,
    keep: Option<&'a [f64]>,
    total: u64,
}

impl Job<'_> {
    fn run_sequential(
        &self,
        word: &mut [f64],
        context: &mut [f64],
        dim: usize,
        rng: &mut ChaCha8Rng,
    ) {
        let word = Cell::from_mut(word).as_slice_of_cells();
        let context = Cell::from_mut(context).as_slice_of_cells();
        let mut worker = Worker::new(self, dim);
        let mut done = 0u64;
        for _ in 0..self.config.epochs {
            for sentence in self.corpus.sentences() {
                let lr = self.config.learning_rate_at(done, self.total);
                worker.sentence(sentence, word, context, lr, rng);
                done += sentence.len() as u64;
            }
        }
    }

    #[cfg(feature = "parallel")]
    fn run_parallel(&self, word: &mut [f64], context: &mut [f64], dim: usize) -> Result<()> {
        use std::sync::atomic::{AtomicU64, Ordering};

        fn as_atomic(slice: &mut [f64]) -> &[AtomicU64] {
            const _: () = assert!(
                std::mem::size_of::<AtomicU64>() == std::mem::size_of::<f64>()
                    && std::mem::align_of::<AtomicU64>() == std::mem::align_of::<f64>()
            );
            // SAFETY: identical size and alignment, and the exclusive borrow
            // guarantees no other access for the returned lifetime.
            unsafe { &*(slice as *mut [f64] as *const [AtomicU64]) }
        }

        let threads = self.config.threads;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        let word = as_atomic(word);
        let context = as_atomic(context);
        let n = self.corpus.n_sentences();
        let shard = n.div_ceil(threads);
        let done = AtomicU64::new(0);
        for epoch in 0..self.config.epochs {
            pool.scope(|scope| {
                for t in 0..threads {
                    let done = &done;
                    scope.spawn(move |_| {
                        let seed = self.config.seed
                            ^ ((epoch as u64) << 32 | t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let mut worker = Worker::new(self, dim);
                        for i in (t * shard)..((t + 1) * shard).min(n) {
                            let sentence = self.corpus.sentence(i);
                            let lr = self
                                .config
                                .learning_rate_at(done.load(Ordering::Relaxed), self.total);
                            worker.sentence(sentence, word, context, lr, &mut rng);
                            done.fetch_add(sentence.len() as u64, Ordering::Relaxed);
                        }
                    });
                }
            });
        }
        Ok(())
    }
}

struct Worker<'a> {
    job: &'a Job<'a>,
    dim: usize,
    grad: Vec<f64>,
    negatives: Vec<u32>,
    kept: Vec<u32>,
    reach: Vec<usize>,
}

impl<'a> Worker<'a> {
    fn new(job: &'a Job<'a>, dim: usize) -> Self {
        Worker {
            job,
            dim,
            grad: vec![0.0; dim],
            negatives: vec![0; job.config.negatives],
            kept: Vec::new(),
            reach: Vec::new(),
        }
    }

    fn sentence<S: kernel::Slot>(
        &mut self,
        sentence: &[u32],
        word: &[S],
        context: &[S],
        lr: f64,
        rng: &mut ChaCha8Rng,
    ) {
        let sentence = match self.job.keep {
            None => sentence,
            Some(keep) => {
                self.kept.clear();
                for &t in sentence {
                    let p = keep[t as usize];
                    if p >= 1.0 || rng.random::<f64>() < p {
                        self.kept.push(t);
                    }
                }
                &self.kept
            }
        };
        let window = self.job.config.window;
        self.reach.clear();
        if self.job.config.shrink_window {
            self.reach
                .extend((0..sentence.len()).map(|_| rng.random_range(1..=window)));
        }
        let Worker {
            job,
            dim,
            grad,
            negatives,
            reach,
            ..
        } = self;
        let shrink = job.config.shrink_window;
        visit_pairs(
            sentence,
            |i| if shrink { reach[i] } else { window },
            job.map,
            |w, c| {
                job.noise.fill(rng, negatives);
                kernel::update_pair(word, context, *dim, w, c, negatives, lr, grad);
            },
        );
    }
}
