use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;

use crate::corpus::{Corpus, Target, TargetSet, Vocabulary};
use crate::error::{Error, Result};
use crate::io::KeyValues;

/// How often each target occurs; the same count applies in both corpora.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetFrequency {
    Fixed(u64),
    /// Geometrically spaced from `min` to `max` and assigned to targets in
    /// seeded random order.
    LogSpread {
        min: u64,
        max: u64,
    },
}

impl fmt::Display for TargetFrequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetFrequency::Fixed(n) => write!(f, "fixed:{n}"),
            TargetFrequency::LogSpread { min, max } => write!(f, "logspread:{min}:{max}"),
        }
    }
}

impl FromStr for TargetFrequency {
    type Err = Error;

    /// `fixed:F` or `logspread:MIN:MAX`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad target frequency `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.trim().parse::<u64>().map_err(|_| bad());
        match parts.as_slice() {
            ["fixed", f] => Ok(TargetFrequency::Fixed(num(f)?)),
            ["logspread", min, max] => Ok(TargetFrequency::LogSpread {
                min: num(min)?,
                max: num(max)?,
            }),
            _ => Err(bad()),
        }
    }
}

/// A generated corpus pair over a background vocabulary split into topics.
///
/// Background sentences pick a topic uniformly and draw every word from a
/// Zipf distribution over that topic, except that each slot is taken from a
/// uniformly chosen topic instead with probability `general_share`. Each target occurrence gets its own
/// sentence, filled from the target's home topic. In the second corpus a
/// changed target draws a fraction `p` of its sentences from a disjoint
/// topic instead, with `p` uniform in `[swap_min, swap_max]`; the realised
/// fraction is its graded gold score. Stable targets score 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub vocab_size: usize,
    pub topics: usize,
    /// Sentences per corpus, target sentences included.
    pub sentences: usize,
    pub sentence_len: usize,
    pub n_stable: usize,
    pub n_changed: usize,
    pub target_frequency: TargetFrequency,
    pub swap_min: f64,
    pub swap_max: f64,
    pub zipf_exponent: f64,
    /// Chance that a context slot is filled from the whole vocabulary
    /// rather than from the sentence's topic.
    pub general_share: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            vocab_size: 2000,
            topics: 20,
            sentences: 20_000,
            sentence_len: 10,
            n_stable: 10,
            n_changed: 10,
            target_frequency: TargetFrequency::Fixed(200),
            swap_min: 0.5,
            swap_max: 1.0,
            zipf_exponent: 1.0,
            general_share: 0.0,
            seed: 1,
        }
    }
}

/// Generated corpora, gold, and the role each target was given.
#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub corpus1: Corpus,
    pub corpus2: Corpus,
    pub targets: TargetSet,
    pub roles: Vec<TargetRole>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetRole {
    pub word: String,
    pub frequency: u64,
    pub home_topic: usize,
    /// Topic used for swapped occurrences in the second corpus.
    pub new_topic: Option<usize>,
    pub swapped: u64,
}

// Independent streams so that roles and frequency assignment do not depend
// on how much text is generated.
const ROLE_STREAM: u64 = 1;
const FREQUENCY_STREAM: u64 = 2;
const TEXT_STREAMS: [u64; 2] = [3, 4];

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl SyntheticSpec {
    pub fn n_targets(&self) -> usize {
        self.n_stable + self.n_changed
    }

    /// Reads a flat config; absent keys keep their defaults.
    ///
    /// Keys: `vocab_size`, `topics`, `sentences`, `sentence_len`, `stable`,
    /// `changed`, `frequency` (`fixed:F` or `logspread:MIN:MAX`), `swap_min`,
    /// `swap_max`, `zipf`, `general_share`, `seed`.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let known = [
            "vocab_size",
            "topics",
            "sentences",
            "sentence_len",
            "stable",
            "changed",
            "frequency",
            "swap_min",
            "swap_max",
            "zipf",
            "general_share",
            "seed",
        ];
        if let Some(k) = kv.keys().find(|k| !known.contains(k)) {
            return Err(Error::InvalidParameter(format!("unknown synth key `{k}`")));
        }
        let d = SyntheticSpec::default();
        let spec = SyntheticSpec {
            vocab_size: kv.parse_value("vocab_size")?.unwrap_or(d.vocab_size),
            topics: kv.parse_value("topics")?.unwrap_or(d.topics),
            sentences: kv.parse_value("sentences")?.unwrap_or(d.sentences),
            sentence_len: kv.parse_value("sentence_len")?.unwrap_or(d.sentence_len),
            n_stable: kv.parse_value("stable")?.unwrap_or(d.n_stable),
            n_changed: kv.parse_value("changed")?.unwrap_or(d.n_changed),
            target_frequency: match kv.get("frequency") {
                Some(v) => v.parse()?,
                None => d.target_frequency,
            },
            swap_min: kv.parse_value("swap_min")?.unwrap_or(d.swap_min),
            swap_max: kv.parse_value("swap_max")?.unwrap_or(d.swap_max),
            zipf_exponent: kv.parse_value("zipf")?.unwrap_or(d.zipf_exponent),
            general_share: kv.parse_value("general_share")?.unwrap_or(d.general_share),
            seed: kv.parse_value("seed")?.unwrap_or(d.seed),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let infeasible = |m: String| Err(Error::Infeasible(m));
        if self.topics < 2 {
            return infeasible("at least 2 topics are needed to swap contexts".into());
        }
        if self.vocab_size < self.topics {
            return infeasible(format!(
                "vocab_size {} is smaller than topics {}",
                self.vocab_size, self.topics
            ));
        }
        if self.sentence_len < 2 {
            return infeasible("sentence_len must be at least 2".into());
        }
        if self.n_targets() == 0 {
            return infeasible("no targets requested".into());
        }
        if !(0.0..=1.0).contains(&self.swap_min) || !(self.swap_min..=1.0).contains(&self.swap_max)
        {
            return infeasible(format!(
                "swap range [{}, {}] must satisfy 0 <= min <= max <= 1",
                self.swap_min, self.swap_max
            ));
        }
        if !(0.0..=1.0).contains(&self.general_share) {
            return infeasible("general_share must lie in [0, 1]".into());
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return infeasible("zipf exponent must be finite and non-negative".into());
        }
        match self.target_frequency {
            TargetFrequency::Fixed(0) => {
                return infeasible("target frequency must be positive".into())
            }
            TargetFrequency::LogSpread { min, max } if min == 0 || max < min => {
                return infeasible(format!(
                    "log-spread range [{min}, {max}] must satisfy 0 < min <= max"
                ));
            }
            _ => {}
        }
        let slots: u64 = self.frequencies_in_order().iter().sum();
        if slots > self.sentences as u64 {
            return infeasible(format!(
                "targets need {slots} sentences per corpus but only {} are available",
                self.sentences
            ));
        }
        Ok(())
    }

    fn frequencies_in_order(&self) -> Vec<u64> {
        let n = self.n_targets();
        match self.target_frequency {
            TargetFrequency::Fixed(f) => vec![f; n],
            TargetFrequency::LogSpread { min, max } => (0..n)
                .map(|i| {
                    let t = if n == 1 {
                        0.0
                    } else {
                        i as f64 / (n - 1) as f64
                    };
                    ((min as f64) * (max as f64 / min as f64).powf(t)).round() as u64
                })
                .collect(),
        }
    }

    /// Target words paired with their designed frequency. Depends only on the
    /// seed, target counts and frequency mode.
    pub fn target_frequencies(&self) -> Vec<(String, u64)> {
        let mut freqs = self.frequencies_in_order();
        freqs.shuffle(&mut stream(self.seed, FREQUENCY_STREAM));
        freqs
            .into_iter()
            .enumerate()
            .map(|(i, f)| (target_name(i), f))
            .collect()
    }

    fn roles(&self) -> Vec<TargetRole> {
        let n = self.n_targets();
        let mut rng = stream(self.seed, ROLE_STREAM);
        let mut changed = vec![false; n];
        changed[..self.n_changed].fill(true);
        changed.shuffle(&mut rng);
        self.target_frequencies()
            .into_iter()
            .zip(changed)
            .enumerate()
            .map(|(i, ((word, frequency), changed))| {
                let home_topic = i % self.topics;
                let (new_topic, swapped) = if changed {
                    let p = rng.random_range(self.swap_min..=self.swap_max);
                    let swapped = ((p * frequency as f64).round() as u64).min(frequency);
                    (Some((home_topic + self.topics / 2) % self.topics), swapped)
                } else {
                    (None, 0)
                };
                TargetRole {
                    word,
                    frequency,
                    home_topic,
                    new_topic,
                    swapped,
                }
            })
            .collect()
    }
}

fn target_name(i: usize) -> String {
    format!("t{i:02}")
}

fn background_name(i: usize) -> String {
    format!("w{i:05}")
}

struct Topics {
    /// First background id of each topic, plus the end.
    starts: Vec<usize>,
    samplers: Vec<WeightedAliasIndex<f64>>,
    general_share: f64,
}

impl Topics {
    fn new(spec: &SyntheticSpec) -> Result<Self> {
        let starts: Vec<usize> = (0..=spec.topics)
            .map(|t| t * spec.vocab_size / spec.topics)
            .collect();
        let samplers = starts
            .windows(2)
            .map(|w| {
                let weights = (1..=w[1] - w[0])
                    .map(|r| (r as f64).powf(-spec.zipf_exponent))
                    .collect();
                WeightedAliasIndex::new(weights)
                    .map_err(|e| Error::InvalidParameter(format!("topic weights: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(Topics {
            starts,
            samplers,
            general_share: spec.general_share,
        })
    }

    fn draw(&self, topic: usize, rng: &mut ChaCha8Rng) -> u32 {
        let topic = if self.general_share > 0.0 && rng.random_bool(self.general_share) {
            rng.random_range(0..self.samplers.len())
        } else {
            topic
        };
        (self.starts[topic] + self.samplers[topic].sample(rng)) as u32
    }
}

/// Generates the corpus pair. Identical specs give identical corpora.
pub fn gen_synthetic_pair(spec: &SyntheticSpec) -> Result<SyntheticPair> {
    spec.validate()?;
    let roles = spec.roles();
    let topics = Topics::new(spec)?;
    let v = spec.vocab_size;
    let names: Vec<String> = (0..v)
        .map(background_name)
        .chain(roles.iter().map(|r| r.word.clone()))
        .collect();

    let mut corpora = Vec::with_capacity(2);
    for (which, &stream_id) in TEXT_STREAMS.iter().enumerate() {
        let mut rng = stream(spec.seed, stream_id);
        let mut sentences: Vec<Vec<u32>> = Vec::with_capacity(spec.sentences);
        for (i, role) in roles.iter().enumerate() {
            let swapped = if which == 1 { role.swapped } else { 0 };
            for occurrence in 0..role.frequency {
                let topic = match role.new_topic {
                    Some(t) if occurrence < swapped => t,
                    _ => role.home_topic,
                };
                let mut s: Vec<u32> = (1..spec.sentence_len)
                    .map(|_| topics.draw(topic, &mut rng))
                    .collect();
                let at = rng.random_range(0..spec.sentence_len);
                s.insert(at, (v + i) as u32);
                sentences.push(s);
            }
        }
        while sentences.len() < spec.sentences {
            let topic = rng.random_range(0..spec.topics);
            sentences.push(
                (0..spec.sentence_len)
                    .map(|_| topics.draw(topic, &mut rng))
                    .collect(),
            );
        }
        sentences.shuffle(&mut rng);
        corpora.push(reindex(
            &format!("synthetic{}", which + 1),
            &names,
            sentences,
        )?);
    }
    let corpus2 = corpora.pop().expect("two corpora");
    let corpus1 = corpora.pop().expect("two corpora");

    let targets = TargetSet::new(
        roles
            .iter()
            .map(|r| {
                let graded = r.swapped as f64 / r.frequency as f64;
                Target::with_gold(r.word.clone(), Some(r.new_topic.is_some()), Some(graded))
            })
            .collect(),
    )?;
    Ok(SyntheticPair {
        corpus1,
        corpus2,
        targets,
        roles,
    })
}

/// Maps generator ids onto a frequency-sorted vocabulary of the words that
/// actually occur.
fn reindex(label: &str, names: &[String], sentences: Vec<Vec<u32>>) -> Result<Corpus> {
    let mut counts = vec![0u64; names.len()];
    for s in &sentences {
        for &id in s {
            counts[id as usize] += 1;
        }
    }
    let vocab = Vocabulary::from_counts(
        names
            .iter()
            .zip(&counts)
            .filter(|(_, &c)| c > 0)
            .map(|(w, &c)| (w.clone(), c)),
        1,
    )?;
    let remap: Vec<u32> = names
        .iter()
        .map(|w| vocab.id(w).unwrap_or(u32::MAX))
        .collect();
    let vocab = Arc::new(vocab);
    Corpus::new(
        label,
        vocab,
        sentences
            .into_iter()
            .map(|s| s.into_iter().map(|id| remap[id as usize]).collect()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            vocab_size: 200,
            topics: 4,
            sentences: 3000,
            sentence_len: 6,
            n_stable: 3,
            n_changed: 3,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn fixed_frequency_is_exact_in_both_corpora() {
        let pair = gen_synthetic_pair(&small()).unwrap();
        for t in &pair.targets {
            assert_eq!(pair.corpus1.frequency(&t.word), 200);
            assert_eq!(pair.corpus2.frequency(&t.word), 200);
        }
        assert_eq!(pair.corpus1.n_sentences(), 3000);
        assert_eq!(pair.corpus1.n_tokens(), 3000 * 6);
    }

    #[test]
    fn log_spread_covers_the_range() {
        let spec = SyntheticSpec {
            target_frequency: TargetFrequency::LogSpread { min: 20, max: 2000 },
            n_stable: 5,
            n_changed: 5,
            sentences: 8000,
            ..small()
        };
        let freqs: Vec<u64> = spec
            .target_frequencies()
            .into_iter()
            .map(|(_, f)| f)
            .collect();
        assert_eq!(*freqs.iter().min().unwrap(), 20);
        assert_eq!(*freqs.iter().max().unwrap(), 2000);
        let pair = gen_synthetic_pair(&spec).unwrap();
        for (word, f) in spec.target_frequencies() {
            assert_eq!(pair.corpus2.frequency(&word), f);
        }
    }

    #[test]
    fn no_changed_targets_means_no_positive_gold() {
        let pair = gen_synthetic_pair(&SyntheticSpec {
            n_changed: 0,
            ..small()
        })
        .unwrap();
        assert!(pair
            .targets
            .iter()
            .all(|t| t.binary == Some(false) && t.graded == Some(0.0)));
    }

    #[test]
    fn fully_swapped_contexts_do_not_overlap() {
        let spec = SyntheticSpec {
            swap_min: 1.0,
            swap_max: 1.0,
            ..small()
        };
        let pair = gen_synthetic_pair(&spec).unwrap();
        let contexts = |corpus: &Corpus, word: &str| -> HashSet<String> {
            let id = corpus.vocab().id(word).unwrap();
            corpus
                .sentences()
                .filter(|s| s.contains(&id))
                .flat_map(|s| {
                    s.iter()
                        .filter(|&&t| t != id)
                        .map(|&t| corpus.vocab().word(t).to_owned())
                })
                .collect()
        };
        for t in &pair.targets {
            let overlap = contexts(&pair.corpus1, &t.word)
                .intersection(&contexts(&pair.corpus2, &t.word))
                .count();
            if t.binary == Some(true) {
                assert_eq!(overlap, 0, "{}", t.word);
            } else {
                assert!(overlap > 0, "{}", t.word);
            }
        }
    }

    #[test]
    fn infeasible_specs_name_the_constraint() {
        let err = gen_synthetic_pair(&SyntheticSpec {
            sentences: 100,
            ..small()
        })
        .unwrap_err();
        assert!(err.to_string().contains("1200 sentences"), "{err}");
        assert!(SyntheticSpec {
            topics: 1,
            ..small()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn config_keys_round_trip() {
        let kv = KeyValues::from_pairs([
            ("frequency", "logspread:20:2000"),
            ("seed", "7"),
            ("changed", "4"),
        ]);
        let spec = SyntheticSpec::from_kv(&kv).unwrap();
        assert_eq!(
            spec.target_frequency,
            TargetFrequency::LogSpread { min: 20, max: 2000 }
        );
        assert_eq!(spec.target_frequency.to_string(), "logspread:20:2000");
        assert_eq!((spec.seed, spec.n_changed), (7, 4));
        assert!(SyntheticSpec::from_kv(&KeyValues::from_pairs([("colour", "red")])).is_err());
    }
}
