//! Tokenised corpora, frequency-thresholded vocabularies and target tagging
//! for word injection / temporal referencing.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io;

/// Bijection between surface words and dense ids, with occurrence counts.
///
/// Vocabularies built from counts order their ids by descending count with
/// ties broken lexicographically, so the same corpus always yields the same
/// ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Counts `tokens` and keeps every word seen at least `threshold` times.
    pub fn build<I, S>(tokens: I, threshold: u64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for token in tokens {
            let token = token.as_ref();
            match counts.get_mut(token) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(token.to_owned(), 1);
                }
            }
        }
        Self::from_counts(counts, threshold)
    }

    pub fn from_counts(
        counts: impl IntoIterator<Item = (String, u64)>,
        threshold: u64,
    ) -> Result<Self> {
        if threshold == 0 {
            return Err(Error::InvalidParameter(
                "frequency threshold must be at least 1".into(),
            ));
        }
        let mut entries: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= threshold)
            .collect();
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary(threshold));
        }
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_entries(entries)
    }

    /// Keeps the given order verbatim; only uniqueness is checked.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        let mut words = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        for (i, (word, count)) in entries.into_iter().enumerate() {
            if index.insert(word.clone(), i as u32).is_some() {
                return Err(Error::DuplicateWord(word));
            }
            words.push(word);
            counts.push(count);
        }
        Ok(Vocabulary {
            words,
            counts,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn count_of(&self, word: &str) -> Option<u64> {
        self.id(word).map(|id| self.count(id))
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str, u64)> + '_ {
        self.words
            .iter()
            .zip(&self.counts)
            .enumerate()
            .map(|(i, (w, &c))| (i as u32, w.as_str(), c))
    }

    /// Appends words not yet present, after all existing ids.
    pub(crate) fn with_appended<'a>(
        &self,
        extra: impl IntoIterator<Item = (&'a str, u64)>,
    ) -> Self {
        let mut out = self.clone();
        for (word, count) in extra {
            if out.index.contains_key(word) {
                continue;
            }
            out.index.insert(word.to_owned(), out.words.len() as u32);
            out.words.push(word.to_owned());
            out.counts.push(count);
        }
        out
    }
}

/// Token-id sentences tied to one [`Vocabulary`]. Never holds empty
/// sentences.
#[derive(Debug, Clone)]
pub struct Corpus {
    label: String,
    vocab: Arc<Vocabulary>,
    tokens: Vec<u32>,
    bounds: Vec<usize>,
}

impl Corpus {
    /// Empty sentences are dropped; out-of-range ids are rejected.
    pub fn new(
        label: impl Into<String>,
        vocab: Arc<Vocabulary>,
        sentences: impl IntoIterator<Item = Vec<u32>>,
    ) -> Result<Self> {
        let mut corpus = Corpus {
            label: label.into(),
            vocab,
            tokens: Vec::new(),
            bounds: vec![0],
        };
        let n = corpus.vocab.len() as u32;
        for sentence in sentences {
            if let Some(&bad) = sentence.iter().find(|&&id| id >= n) {
                return Err(Error::InvalidParameter(format!(
                    "token id {bad} out of range for a vocabulary of {n} words"
                )));
            }
            corpus.push_sentence(&sentence);
        }
        Ok(corpus)
    }

    /// Builds a corpus from tokenised text. Without a vocabulary, a full
    /// (threshold 1) vocabulary is derived from the text; with one, unknown
    /// tokens are dropped.
    pub fn from_tokens<S, T>(
        label: impl Into<String>,
        sentences: &[S],
        vocab: Option<Arc<Vocabulary>>,
    ) -> Result<Self>
    where
        S: AsRef<[T]>,
        T: AsRef<str>,
    {
        let label = label.into();
        let vocab = match vocab {
            Some(v) => v,
            None => {
                let tokens = sentences.iter().flat_map(|s| s.as_ref().iter());
                match Vocabulary::build(tokens, 1) {
                    Ok(v) => Arc::new(v),
                    Err(Error::EmptyVocabulary(_)) => return Err(Error::EmptyCorpus(label)),
                    Err(e) => return Err(e),
                }
            }
        };
        let mut corpus = Corpus {
            label,
            vocab,
            tokens: Vec::new(),
            bounds: vec![0],
        };
        let mut buf = Vec::new();
        for sentence in sentences {
            buf.clear();
            buf.extend(
                sentence
                    .as_ref()
                    .iter()
                    .filter_map(|t| corpus.vocab.id(t.as_ref())),
            );
            corpus.push_sentence(&buf);
        }
        Ok(corpus)
    }

    fn push_sentence(&mut self, sentence: &[u32]) {
        if sentence.is_empty() {
            return;
        }
        self.tokens.extend_from_slice(sentence);
        self.bounds.push(self.tokens.len());
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn shared_vocab(&self) -> Arc<Vocabulary> {
        Arc::clone(&self.vocab)
    }

    pub fn n_sentences(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn sentence(&self, i: usize) -> &[u32] {
        &self.tokens[self.bounds[i]..self.bounds[i + 1]]
    }

    pub fn sentences(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.bounds.windows(2).map(|w| &self.tokens[w[0]..w[1]])
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    /// Occurrence count per vocabulary id, taken from the token stream.
    pub fn token_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.vocab.len()];
        for &t in &self.tokens {
            counts[t as usize] += 1;
        }
        counts
    }

    /// Occurrence count of `word` in this corpus' token stream.
    pub fn frequency(&self, word: &str) -> u64 {
        match self.vocab.id(word) {
            Some(id) => self.tokens.iter().filter(|&&t| t == id).count() as u64,
            None => 0,
        }
    }

    /// Vocabulary of the words occurring at least `threshold` times here.
    pub fn vocabulary_at(&self, threshold: u64) -> Result<Vocabulary> {
        let counts = self.token_counts();
        Vocabulary::from_counts(
            self.vocab
                .words()
                .iter()
                .cloned()
                .zip(counts)
                .filter(|(_, c)| *c > 0),
            threshold,
        )
    }

    pub fn write_text(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        for sentence in self.sentences() {
            for (i, &t) in sentence.iter().enumerate() {
                if i > 0 {
                    out.write_all(b" ")?;
                }
                out.write_all(self.vocab.word(t).as_bytes())?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Loads a corpus with one sentence per line and whitespace-separated
/// tokens. Gzip input is detected by its magic bytes.
pub fn load_corpus(path: impl AsRef<Path>, vocab: Option<Arc<Vocabulary>>) -> Result<Corpus> {
    let path = path.as_ref();
    let bytes = io::read_maybe_gzip(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".into());
    let sentences = io::tokenised_lines(path, &bytes)?;
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus(label));
    }
    Corpus::from_tokens(label, &sentences, vocab)
}

/// Vocabulary of all tokens occurring at least `threshold` times.
pub fn build_vocab<I, S>(tokens: I, threshold: u64) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    Vocabulary::build(tokens, threshold)
}

#[derive(Debug, Clone)]
pub struct Filtered {
    pub corpus: Corpus,
    pub removed_tokens: usize,
    pub removed_sentences: usize,
}

impl Filtered {
    /// Set when filtering left nothing behind.
    pub fn is_degenerate(&self) -> bool {
        self.corpus.is_empty()
    }
}

/// Deletes tokens missing from `vocab` and drops sentences that become empty.
/// The surviving tokens are re-indexed into `vocab`.
pub fn filter_corpus(corpus: &Corpus, vocab: Arc<Vocabulary>) -> Filtered {
    let remap: Vec<Option<u32>> = corpus.vocab.words().iter().map(|w| vocab.id(w)).collect();
    let mut out = Corpus {
        label: corpus.label.clone(),
        vocab,
        tokens: Vec::with_capacity(corpus.n_tokens()),
        bounds: vec![0],
    };
    let mut removed_sentences = 0;
    let mut buf = Vec::new();
    for sentence in corpus.sentences() {
        buf.clear();
        buf.extend(sentence.iter().filter_map(|&t| remap[t as usize]));
        if buf.is_empty() {
            removed_sentences += 1;
        }
        out.push_sentence(&buf);
    }
    let removed_tokens = corpus.n_tokens() - out.n_tokens();
    Filtered {
        corpus: out,
        removed_tokens,
        removed_sentences,
    }
}

/// Applies a frequency threshold computed on the corpus itself.
pub fn threshold_corpus(corpus: &Corpus, threshold: u64) -> Result<Corpus> {
    let vocab = Arc::new(corpus.vocabulary_at(threshold)?);
    Ok(filter_corpus(corpus, vocab).corpus)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    pub tokens: u64,
    pub types: u64,
    /// Types per thousand tokens.
    pub ttr: f64,
}

impl CorpusStats {
    pub fn from_counts(tokens: u64, types: u64) -> Result<Self> {
        if tokens == 0 {
            return Err(Error::EmptyCorpus(String::new()));
        }
        Ok(CorpusStats {
            tokens,
            types,
            ttr: types as f64 / tokens as f64 * 1000.0,
        })
    }
}

pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(corpus.label.clone()));
    }
    let types = corpus.token_counts().iter().filter(|&&c| c > 0).count();
    CorpusStats::from_counts(corpus.n_tokens() as u64, types as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub word: String,
    pub binary: Option<bool>,
    pub graded: Option<f64>,
}

impl Target {
    pub fn new(word: impl Into<String>) -> Self {
        Target {
            word: word.into(),
            binary: None,
            graded: None,
        }
    }

    pub fn with_gold(word: impl Into<String>, binary: Option<bool>, graded: Option<f64>) -> Self {
        Target {
            word: word.into(),
            binary,
            graded,
        }
    }
}

/// Evaluation words with optional gold labels. Words are unique.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TargetSet {
    targets: Vec<Target>,
}

impl TargetSet {
    pub fn new(targets: Vec<Target>) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &targets {
            if !seen.insert(t.word.as_str()) {
                return Err(Error::DuplicateWord(t.word.clone()));
            }
            if let Some(g) = t.graded {
                if !g.is_finite() {
                    return Err(Error::NonFinite("graded gold score"));
                }
            }
        }
        Ok(TargetSet { targets })
    }

    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Result<Self> {
        Self::new(words.iter().map(|w| Target::new(w.as_ref())).collect())
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Target> {
        self.targets.iter()
    }

    pub fn get(&self, word: &str) -> Option<&Target> {
        self.targets.iter().find(|t| t.word == word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.targets.iter().map(|t| t.word.as_str())
    }
}

impl<'a> IntoIterator for &'a TargetSet {
    type Item = &'a Target;
    type IntoIter = std::slice::Iter<'a, Target>;

    fn into_iter(self) -> Self::IntoIter {
        self.targets.iter()
    }
}

/// How (word, context) pairs are read off a corpus.
#[derive(Debug, Clone, Default)]
pub enum PairScheme {
    #[default]
    Plain,
    /// Context slots are rewritten through the map (tagged id -> untagged
    /// id); target slots keep the tagged id.
    TemporalReferencing(Arc<[u32]>),
}

impl PairScheme {
    pub fn context_map(&self) -> Option<&[u32]> {
        match self {
            PairScheme::Plain => None,
            PairScheme::TemporalReferencing(map) => Some(map),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionScheme {
    WordInjection,
    TemporalReferencing,
}

/// Suffixes marking which corpus a tagged target came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tags {
    pub first: String,
    pub second: String,
}

impl Default for Tags {
    fn default() -> Self {
        Tags {
            first: "_c1".into(),
            second: "_c2".into(),
        }
    }
}

impl Tags {
    pub fn tag(&self, word: &str, which: usize) -> String {
        let suffix = if which == 0 {
            &self.first
        } else {
            &self.second
        };
        format!("{word}{suffix}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InjectedTarget {
    pub word: String,
    /// Joint-vocabulary ids of the corpus-1 and corpus-2 tagged forms.
    pub tagged: [Option<u32>; 2],
    /// Untagged id, present only under temporal referencing.
    pub base: Option<u32>,
}

impl InjectedTarget {
    pub fn is_usable(&self) -> bool {
        self.tagged[0].is_some() && self.tagged[1].is_some()
    }
}

/// Shuffled joint corpus with corpus-tagged target occurrences.
#[derive(Debug, Clone)]
pub struct InjectedCorpus {
    pub corpus: Corpus,
    pub scheme: InjectionScheme,
    pub tags: Tags,
    pub targets: Vec<InjectedTarget>,
    pub warnings: Vec<String>,
    pair_scheme: PairScheme,
}

impl InjectedCorpus {
    pub fn pair_scheme(&self) -> &PairScheme {
        &self.pair_scheme
    }
}

/// Rewrites every target occurrence as `word+tag` according to its corpus of
/// origin and shuffles the sentences of both corpora into one corpus.
///
/// Under [`InjectionScheme::TemporalReferencing`] the text is the same, but
/// the joint vocabulary also holds the untagged target forms (counted once
/// per tagged occurrence) and the returned pair scheme maps tagged forms back
/// to them in the context slot.
pub fn inject_targets(
    corpus1: &Corpus,
    corpus2: &Corpus,
    targets: &TargetSet,
    scheme: InjectionScheme,
    tags: &Tags,
    seed: u64,
) -> Result<InjectedCorpus> {
    if tags.first == tags.second || tags.first.is_empty() || tags.second.is_empty() {
        return Err(Error::InvalidParameter(
            "corpus tags must be distinct and non-empty".into(),
        ));
    }
    let target_words: HashSet<&str> = targets.words().collect();
    for t in targets.words() {
        for which in 0..2 {
            let tagged = tags.tag(t, which);
            if corpus1.vocab.contains(&tagged) || corpus2.vocab.contains(&tagged) {
                return Err(Error::TagCollision(tagged));
            }
        }
    }

    // Provisional joint ids: position in `names`.
    let mut names: Vec<String> = Vec::new();
    let mut name_ids: HashMap<String, u32> = HashMap::new();
    let mut intern = |w: String| -> u32 {
        if let Some(&id) = name_ids.get(&w) {
            return id;
        }
        let id = names.len() as u32;
        name_ids.insert(w.clone(), id);
        names.push(w);
        id
    };
    let remaps: Vec<Vec<u32>> = [corpus1, corpus2]
        .iter()
        .enumerate()
        .map(|(which, c)| {
            c.vocab
                .words()
                .iter()
                .map(|w| {
                    if target_words.contains(w.as_str()) {
                        intern(tags.tag(w, which))
                    } else {
                        intern(w.clone())
                    }
                })
                .collect()
        })
        .collect();

    let mut sentences: Vec<Vec<u32>> =
        Vec::with_capacity(corpus1.n_sentences() + corpus2.n_sentences());
    for (which, c) in [corpus1, corpus2].iter().enumerate() {
        for s in c.sentences() {
            sentences.push(s.iter().map(|&t| remaps[which][t as usize]).collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sentences.shuffle(&mut rng);

    let mut counts = vec![0u64; names.len()];
    for s in &sentences {
        for &t in s {
            counts[t as usize] += 1;
        }
    }
    let mut entries: Vec<(String, u64)> = names
        .iter()
        .cloned()
        .zip(counts.iter().copied())
        .filter(|(_, c)| *c > 0)
        .collect();

    let mut warnings = Vec::new();
    if scheme == InjectionScheme::TemporalReferencing {
        for t in targets.words() {
            let total: u64 = (0..2)
                .filter_map(|which| name_ids.get(&tags.tag(t, which)))
                .map(|&id| counts[id as usize])
                .sum();
            if total > 0 {
                if name_ids.contains_key(t) {
                    return Err(Error::TagCollision(t.to_owned()));
                }
                entries.push((t.to_owned(), total));
            }
        }
    }
    entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let vocab = Arc::new(Vocabulary::from_entries(entries)?);

    let final_ids: Vec<u32> = names
        .iter()
        .map(|w| vocab.id(w).unwrap_or(u32::MAX))
        .collect();
    for s in &mut sentences {
        for t in s.iter_mut() {
            *t = final_ids[*t as usize];
        }
    }

    let mut injected = Vec::with_capacity(targets.len());
    let mut context_map: Vec<u32> = (0..vocab.len() as u32).collect();
    for t in targets.words() {
        let tagged = [vocab.id(&tags.tag(t, 0)), vocab.id(&tags.tag(t, 1))];
        let base = match scheme {
            InjectionScheme::TemporalReferencing => vocab.id(t),
            InjectionScheme::WordInjection => None,
        };
        if let Some(base) = base {
            for id in tagged.iter().flatten() {
                context_map[*id as usize] = base;
            }
        }
        match tagged {
            [None, None] => warnings.push(format!("target `{t}` occurs in neither corpus")),
            [Some(_), None] => {
                warnings.push(format!("target `{t}` occurs only in {}", corpus1.label))
            }
            [None, Some(_)] => {
                warnings.push(format!("target `{t}` occurs only in {}", corpus2.label))
            }
            _ => {}
        }
        injected.push(InjectedTarget {
            word: t.to_owned(),
            tagged,
            base,
        });
    }

    let pair_scheme = match scheme {
        InjectionScheme::WordInjection => PairScheme::Plain,
        InjectionScheme::TemporalReferencing => PairScheme::TemporalReferencing(context_map.into()),
    };
    let label = format!("{}+{}", corpus1.label, corpus2.label);
    Ok(InjectedCorpus {
        corpus: Corpus::new(label, vocab, sentences)?,
        scheme,
        tags: tags.clone(),
        targets: injected,
        warnings,
        pair_scheme,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(label: &str, text: &str) -> Corpus {
        let sentences: Vec<Vec<&str>> = text
            .lines()
            .map(|l| l.split_whitespace().collect::<Vec<_>>())
            .collect();
        Corpus::from_tokens(label, &sentences, None).unwrap()
    }

    fn words(c: &Corpus) -> Vec<Vec<String>> {
        c.sentences()
            .map(|s| s.iter().map(|&t| c.vocab().word(t).to_owned()).collect())
            .collect()
    }

    #[test]
    fn vocab_threshold_keeps_frequent_words() {
        let tokens = "a a a a a b b b c".split(' ');
        let v = build_vocab(tokens, 4).unwrap();
        assert_eq!(v.words(), ["a"]);
        assert_eq!(v.count(0), 5);

        let mut counts = vec![("x".to_string(), 39), ("y".to_string(), 38)];
        counts.push(("z".to_string(), 2));
        let v = Vocabulary::from_counts(counts, 39).unwrap();
        assert_eq!(v.words(), ["x"]);
    }

    #[test]
    fn vocab_threshold_one_keeps_everything_in_canonical_order() {
        let v = build_vocab("c b a b c d".split(' '), 1).unwrap();
        assert_eq!(v.words(), ["b", "c", "a", "d"]);
        assert_eq!(v.counts(), [2, 2, 1, 1]);
        for (id, w, _) in v.iter() {
            assert_eq!(v.id(w), Some(id));
        }
    }

    #[test]
    fn vocab_errors() {
        assert!(matches!(
            build_vocab("a b".split(' '), 3),
            Err(Error::EmptyVocabulary(3))
        ));
        assert!(matches!(
            build_vocab("a b".split(' '), 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn filter_deletes_oov_tokens_and_empty_sentences() {
        let c = corpus("c", "a b c\nb\n");
        let vocab = Arc::new(build_vocab(["a", "c"], 1).unwrap());
        let f = filter_corpus(&c, vocab);
        assert_eq!(words(&f.corpus), vec![vec!["a", "c"]]);
        assert_eq!(f.removed_tokens, 2);
        assert_eq!(f.removed_sentences, 1);
        assert!(!f.is_degenerate());
    }

    #[test]
    fn filter_everything_oov_is_flagged() {
        let c = corpus("c", "a b\n");
        let f = filter_corpus(&c, Arc::new(build_vocab(["z"], 1).unwrap()));
        assert!(f.is_degenerate());
        assert_eq!(f.removed_sentences, 1);
    }

    #[test]
    fn filter_with_full_vocab_is_identity() {
        let c = corpus("c", "a b c\nc a\n");
        let f = filter_corpus(&c, c.shared_vocab());
        assert_eq!(words(&f.corpus), words(&c));
        assert_eq!(f.removed_tokens, 0);
    }

    #[test]
    fn stats_match_hand_count() {
        let s = corpus_stats(&corpus("c", "a a a b")).unwrap();
        assert_eq!((s.tokens, s.types), (4, 2));
        assert_eq!(s.ttr, 500.0);
    }

    #[test]
    fn stats_ttr_convention() {
        let s = CorpusStats::from_counts(6_500_000, 87_000).unwrap();
        assert!((s.ttr - 13.38).abs() < 0.005);
        let s = CorpusStats::from_counts(1_700_000, 65_000).unwrap();
        assert!((s.ttr - 38.24).abs() < 0.005);
    }

    #[test]
    fn stats_on_empty_corpus_fails() {
        let c = filter_corpus(&corpus("c", "a"), Arc::new(build_vocab(["z"], 1).unwrap())).corpus;
        assert!(matches!(corpus_stats(&c), Err(Error::EmptyCorpus(_))));
    }

    #[test]
    fn word_injection_tags_by_origin() {
        let c1 = corpus("c1", "the bank closed");
        let c2 = corpus("c2", "a bank river");
        let targets = TargetSet::from_words(&["bank"]).unwrap();
        let inj = inject_targets(
            &c1,
            &c2,
            &targets,
            InjectionScheme::WordInjection,
            &Tags::default(),
            7,
        )
        .unwrap();
        let mut text = words(&inj.corpus);
        text.sort();
        assert_eq!(
            text,
            vec![
                vec!["a", "bank_c2", "river"],
                vec!["the", "bank_c1", "closed"]
            ]
        );
        assert!(inj.targets[0].is_usable());
        assert!(inj.corpus.vocab().id("bank").is_none());
        assert!(inj.warnings.is_empty());
    }

    #[test]
    fn injection_without_targets_is_a_shuffled_concatenation() {
        let c1 = corpus("c1", "a b\nc d\ne f");
        let c2 = corpus("c2", "g h\ni j");
        let inj = inject_targets(
            &c1,
            &c2,
            &TargetSet::default(),
            InjectionScheme::WordInjection,
            &Tags::default(),
            1,
        )
        .unwrap();
        let mut got = words(&inj.corpus);
        got.sort();
        let mut want = words(&c1);
        want.extend(words(&c2));
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn injection_shuffle_is_seeded() {
        let text: String = (0..50).map(|i| format!("w{i} x\n")).collect();
        let c1 = corpus("c1", &text);
        let c2 = corpus("c2", &text);
        let t = TargetSet::default();
        let run = |seed| {
            words(
                &inject_targets(
                    &c1,
                    &c2,
                    &t,
                    InjectionScheme::WordInjection,
                    &Tags::default(),
                    seed,
                )
                .unwrap()
                .corpus,
            )
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn injection_rejects_tag_collisions() {
        let c1 = corpus("c1", "bank bank_c2");
        let c2 = corpus("c2", "bank");
        let targets = TargetSet::from_words(&["bank"]).unwrap();
        let err = inject_targets(
            &c1,
            &c2,
            &targets,
            InjectionScheme::WordInjection,
            &Tags::default(),
            0,
        );
        assert!(matches!(err, Err(Error::TagCollision(w)) if w == "bank_c2"));
    }

    #[test]
    fn injection_warns_about_missing_targets() {
        let c1 = corpus("c1", "bank x");
        let c2 = corpus("c2", "y x");
        let targets = TargetSet::from_words(&["bank", "ghost"]).unwrap();
        let inj = inject_targets(
            &c1,
            &c2,
            &targets,
            InjectionScheme::WordInjection,
            &Tags::default(),
            0,
        )
        .unwrap();
        assert_eq!(inj.warnings.len(), 2);
        assert!(!inj.targets[0].is_usable());
    }

    #[test]
    fn temporal_referencing_adds_untagged_context_forms() {
        let c1 = corpus("c1", "bank river");
        let c2 = corpus("c2", "bank money");
        let targets = TargetSet::from_words(&["bank", "river"]).unwrap();
        let inj = inject_targets(
            &c1,
            &c2,
            &targets,
            InjectionScheme::TemporalReferencing,
            &Tags::default(),
            0,
        )
        .unwrap();
        let v = inj.corpus.vocab();
        let map = inj.pair_scheme().context_map().unwrap();
        assert_eq!(
            map[v.id("bank_c1").unwrap() as usize],
            v.id("bank").unwrap()
        );
        assert_eq!(
            map[v.id("bank_c2").unwrap() as usize],
            v.id("bank").unwrap()
        );
        assert_eq!(map[v.id("money").unwrap() as usize], v.id("money").unwrap());
        assert_eq!(v.count_of("bank"), Some(2));
        // `river` only occurs in corpus 1.
        assert_eq!(inj.targets[1].tagged[1], None);
    }

    #[test]
    fn target_set_rejects_duplicates_and_nan() {
        assert!(TargetSet::from_words(&["a", "a"]).is_err());
        assert!(TargetSet::new(vec![Target::with_gold("a", None, Some(f64::NAN))]).is_err());
    }
}
