//! Making two embedding spaces comparable: vector initialisation, orthogonal
//! Procrustes and word injection.

mod procrustes;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Axis;

use crate::corpus::{
    inject_targets, Corpus, InjectedCorpus, InjectionScheme, Tags, TargetSet, Vocabulary,
};
use crate::error::{Error, Result};
use crate::io::{self, KeyValues};
use crate::sgns::{self, EmbeddingModel, InitSpec, TrainingConfig};

pub use procrustes::{
    frobenius, preprocess, preprocess_rows, solve_procrustes, PreprocessOptions, ProcrustesSolution,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Vi,
    Op,
    Wi,
    ViOp,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Vi => "vi",
            Method::Op => "op",
            Method::Wi => "wi",
            Method::ViOp => "vi+op",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vi" => Ok(Method::Vi),
            "op" => Ok(Method::Op),
            "wi" => Ok(Method::Wi),
            "vi+op" | "viop" => Ok(Method::ViOp),
            _ => Err(Error::InvalidParameter(format!(
                "unknown alignment method `{s}`"
            ))),
        }
    }
}

/// Which corpus vector initialisation trains first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Order {
    #[default]
    Forward,
    Backward,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Order::Forward => "fwd",
            Order::Backward => "bwd",
        })
    }
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fwd" | "forward" => Ok(Order::Forward),
            "bwd" | "backward" => Ok(Order::Backward),
            _ => Err(Error::InvalidParameter(format!(
                "unknown training order `{s}`"
            ))),
        }
    }
}

/// Two comparable spaces. `space1` always belongs to corpus 1, whatever the
/// training order.
#[derive(Debug, Clone)]
pub struct AlignedSpaces {
    pub space1: EmbeddingModel,
    pub space2: EmbeddingModel,
    pub method: Method,
    pub order: Order,
    /// Words present in both spaces, sorted.
    pub shared_vocab: Vec<String>,
    pub procrustes: Option<ProcrustesSolution>,
    pub warnings: Vec<String>,
}

impl AlignedSpaces {
    /// Pairs two spaces of equal dimensionality as they are.
    pub fn new(
        space1: EmbeddingModel,
        space2: EmbeddingModel,
        method: Method,
        order: Order,
    ) -> Result<Self> {
        if space1.dim() != space2.dim() {
            return Err(Error::DimensionMismatch {
                expected: space1.dim(),
                found: space2.dim(),
            });
        }
        let shared_vocab = shared_words(space1.vocab(), space2.vocab());
        Ok(AlignedSpaces {
            space1,
            space2,
            method,
            order,
            shared_vocab,
            procrustes: None,
            warnings: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.space1.dim()
    }

    /// Writes `space1.vec`, `space2.vec` (each with a `.ctx` sibling) and a
    /// `meta.txt` record into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.space1.save(&dir.join("space1.vec"))?;
        self.space2.save(&dir.join("space2.vec"))?;
        let meta_path = dir.join("meta.txt");
        let mut out = io::create(&meta_path)?;
        write!(
            out,
            "method={}\norder={}\ndim={}\nconfig_digest={}\nshared_vocab={}\n",
            self.method,
            self.order,
            self.dim(),
            crate::digest_hex(self.space1.config().describe().as_bytes()),
            self.shared_vocab.len()
        )
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&meta_path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta = KeyValues::load(&dir.join("meta.txt"))?;
        let method: Method = meta.require("method")?.parse()?;
        let order: Order = meta.require("order")?.parse()?;
        let space1 = EmbeddingModel::load(&dir.join("space1.vec"))?;
        let space2 = EmbeddingModel::load(&dir.join("space2.vec"))?;
        Self::new(space1, space2, method, order)
    }
}

fn shared_words(a: &Vocabulary, b: &Vocabulary) -> Vec<String> {
    let mut words: Vec<String> = a
        .words()
        .iter()
        .filter(|w| b.contains(w))
        .cloned()
        .collect();
    words.sort_unstable();
    words
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViOptions {
    pub order: Order,
    /// Also start the second stage's context vectors from the first model.
    pub init_context: bool,
    /// Epochs of the second stage; defaults to the config's epochs.
    pub second_epochs: Option<usize>,
}

impl Default for ViOptions {
    fn default() -> Self {
        ViOptions {
            order: Order::Forward,
            init_context: true,
            second_epochs: None,
        }
    }
}

/// Seed of the second training stage, derived from the first.
fn second_stage_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Vector initialisation: train on one corpus, then continue training on the
/// other starting from those vectors.
pub fn align_vi(
    corpus1: &Corpus,
    corpus2: &Corpus,
    config: &TrainingConfig,
    options: ViOptions,
) -> Result<AlignedSpaces> {
    let (first, second) = match options.order {
        Order::Forward => (corpus1, corpus2),
        Order::Backward => (corpus2, corpus1),
    };
    let shared = first
        .vocab()
        .words()
        .iter()
        .any(|w| second.vocab().contains(w));
    if !shared {
        return Err(Error::EmptySharedVocabulary);
    }
    let first_model = sgns::train(first, config, InitSpec::Random)?;
    let second_config = TrainingConfig {
        epochs: options.second_epochs.unwrap_or(config.epochs),
        seed: second_stage_seed(config.seed),
        ..config.clone()
    };
    let second_model = sgns::train(
        second,
        &second_config,
        InitSpec::FromModel {
            prior: &first_model,
            init_context: options.init_context,
        },
    )?;
    let (space1, space2) = match options.order {
        Order::Forward => (first_model, second_model),
        Order::Backward => (second_model, first_model),
    };
    AlignedSpaces::new(space1, space2, Method::Vi, options.order)
}

/// Orthogonal Procrustes alignment of two independently trained models.
///
/// Both word matrices are length-normalised and mean-centred (means over the
/// shared rows), the rotation is solved on the shared rows, and every row of
/// the second matrix is rotated.
pub fn align_op(model1: &EmbeddingModel, model2: &EmbeddingModel) -> Result<AlignedSpaces> {
    align_op_with(model1, model2, PreprocessOptions::default())
}

pub fn align_op_with(
    model1: &EmbeddingModel,
    model2: &EmbeddingModel,
    options: PreprocessOptions,
) -> Result<AlignedSpaces> {
    if model1.dim() != model2.dim() {
        return Err(Error::DimensionMismatch {
            expected: model1.dim(),
            found: model2.dim(),
        });
    }
    let shared = shared_words(model1.vocab(), model2.vocab());
    if shared.is_empty() {
        return Err(Error::EmptySharedVocabulary);
    }
    let rows = |m: &EmbeddingModel| -> Vec<usize> {
        shared
            .iter()
            .map(|w| m.vocab().id(w).unwrap() as usize)
            .collect()
    };
    let (rows1, rows2) = (rows(model1), rows(model2));
    let prep = |m: &EmbeddingModel, rows: &[usize]| {
        preprocess_rows(m.word_vectors(), Some(rows), options).map_err(|r| {
            Error::ZeroVector(format!("`{}` in {}", m.vocab().word(r as u32), m.label()))
        })
    };
    let a = prep(model1, &rows1)?;
    let b = prep(model2, &rows2)?;
    let solution = solve_procrustes(&a.select(Axis(0), &rows1), &b.select(Axis(0), &rows2))?;
    let b_rotated = b.dot(&solution.rotation);
    let mut spaces = AlignedSpaces::new(
        model1.clone().with_word_vectors(a),
        model2.clone().with_word_vectors(b_rotated),
        Method::Op,
        Order::Forward,
    )?;
    spaces.procrustes = Some(solution);
    Ok(spaces)
}

/// Trains both corpora separately, then aligns them with Procrustes.
pub fn train_and_align_op(
    corpus1: &Corpus,
    corpus2: &Corpus,
    config: &TrainingConfig,
) -> Result<AlignedSpaces> {
    let m1 = sgns::train(corpus1, config, InitSpec::Random)?;
    let config2 = TrainingConfig {
        seed: second_stage_seed(config.seed),
        ..config.clone()
    };
    let m2 = sgns::train(corpus2, &config2, InitSpec::Random)?;
    align_op(&m1, &m2)
}

/// Procrustes on top of vector-initialised spaces.
pub fn align_vi_then_op(spaces: &AlignedSpaces) -> Result<AlignedSpaces> {
    if spaces.method != Method::Vi {
        return Err(Error::InvalidParameter(format!(
            "expected vector-initialised spaces, got {}",
            spaces.method
        )));
    }
    let mut out = align_op(&spaces.space1, &spaces.space2)?;
    out.method = Method::ViOp;
    out.order = spaces.order;
    Ok(out)
}

/// Word injection: one model over the joint corpus, viewed twice. Each view
/// holds every untagged word plus, for each target, the row of its tagged
/// form from that corpus, under the target's own name.
pub fn align_wi(joint: &InjectedCorpus, config: &TrainingConfig) -> Result<AlignedSpaces> {
    if !joint.targets.iter().any(|t| t.is_usable()) {
        return Err(Error::InvalidParameter(
            "no target occurs in both corpora".into(),
        ));
    }
    let model =
        sgns::train_with_scheme(&joint.corpus, joint.pair_scheme(), config, InitSpec::Random)?;
    wi_views(&model, joint)
}

pub(crate) fn wi_views(model: &EmbeddingModel, joint: &InjectedCorpus) -> Result<AlignedSpaces> {
    let vocab = model.vocab();
    let mut hidden = vec![false; vocab.len()];
    for t in &joint.targets {
        for id in t.tagged.iter().chain(std::iter::once(&t.base)).flatten() {
            hidden[*id as usize] = true;
        }
    }
    let mut warnings = joint.warnings.clone();
    for t in joint.targets.iter().filter(|t| !t.is_usable()) {
        warnings.push(format!(
            "target `{}` lacks a tagged form and is excluded from one space",
            t.word
        ));
    }
    let view = |which: usize| -> Result<EmbeddingModel> {
        let mut rows: Vec<usize> = Vec::with_capacity(vocab.len());
        let mut entries: Vec<(String, u64)> = Vec::with_capacity(vocab.len());
        for (id, w, c) in vocab.iter() {
            if !hidden[id as usize] {
                rows.push(id as usize);
                entries.push((w.to_owned(), c));
            }
        }
        for t in &joint.targets {
            if let Some(id) = t.tagged[which] {
                rows.push(id as usize);
                entries.push((t.word.clone(), vocab.count(id)));
            }
        }
        EmbeddingModel::from_parts(
            Arc::new(Vocabulary::from_entries(entries)?),
            model.word_vectors().select(Axis(0), &rows),
            model.context_vectors().select(Axis(0), &rows),
            model.config().clone(),
            format!("{}[{}]", model.label(), which + 1),
        )
    };
    let mut spaces = AlignedSpaces::new(view(0)?, view(1)?, Method::Wi, Order::Forward)?;
    spaces.warnings = warnings;
    Ok(spaces)
}

/// A full alignment recipe: method plus everything it needs besides the
/// corpora.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub method: Method,
    pub order: Order,
    pub config: TrainingConfig,
    pub init_context: bool,
    pub injection: InjectionScheme,
}

impl Pipeline {
    pub fn new(method: Method, config: TrainingConfig) -> Self {
        Pipeline {
            method,
            order: Order::Forward,
            config,
            init_context: true,
            injection: InjectionScheme::WordInjection,
        }
    }

    /// Only vector initialisation has a training order.
    pub fn validate(&self) -> Result<()> {
        if self.order == Order::Backward && !matches!(self.method, Method::Vi | Method::ViOp) {
            return Err(Error::InvalidParameter(format!(
                "training order applies to vi only, not {}",
                self.method
            )));
        }
        self.config.validate()
    }

    /// Builds aligned spaces; word injection tags `targets`.
    pub fn run(
        &self,
        corpus1: &Corpus,
        corpus2: &Corpus,
        targets: &TargetSet,
    ) -> Result<AlignedSpaces> {
        self.validate()?;
        let vi = ViOptions {
            order: self.order,
            init_context: self.init_context,
            second_epochs: None,
        };
        match self.method {
            Method::Vi => align_vi(corpus1, corpus2, &self.config, vi),
            Method::ViOp => align_vi_then_op(&align_vi(corpus1, corpus2, &self.config, vi)?),
            Method::Op => train_and_align_op(corpus1, corpus2, &self.config),
            Method::Wi => {
                let joint = inject_targets(
                    corpus1,
                    corpus2,
                    targets,
                    self.injection,
                    &Tags::default(),
                    self.config.seed,
                )?;
                align_wi(&joint, &self.config)
            }
        }
    }
}
