use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, TargetSet};
use crate::error::{Error, Result};
use crate::measures::{BinaryLabels, ChangeScores};

/// Ranks starting at 1; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman's ρ: Pearson correlation of average ranks. A constant input has
/// no ranking to agree with and yields 0.
pub fn rank_correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "rank correlation needs paired samples");
    if x.len() < 2 {
        return 0.0;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub rho: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub value: f64,
    pub n: usize,
}

/// Spearman's ρ between predicted scores and graded gold, on the words
/// present in both.
pub fn spearman(pred: &ChangeScores, gold: &TargetSet) -> Result<Correlation> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut missing = Vec::new();
    for t in gold {
        let Some(g) = t.graded else { continue };
        match pred.get(&t.word) {
            Some(s) => {
                x.push(s);
                y.push(g);
            }
            None => missing.push(t.word.clone()),
        }
    }
    if x.len() < 3 {
        return Err(Error::InsufficientOverlap {
            needed: 3,
            found: x.len(),
            missing,
        });
    }
    Ok(Correlation {
        rho: rank_correlation(&x, &y),
        n: x.len(),
    })
}

/// Share of matching binary labels over the words with binary gold.
pub fn accuracy(pred: &BinaryLabels, gold: &TargetSet) -> Result<Accuracy> {
    let mut hits = 0;
    let mut n = 0;
    let mut missing = Vec::new();
    for t in gold {
        let Some(g) = t.binary else { continue };
        match pred.get(&t.word) {
            Some(l) => {
                n += 1;
                hits += usize::from(l == g);
            }
            None => missing.push(t.word.clone()),
        }
    }
    if n == 0 {
        return Err(Error::InsufficientOverlap {
            needed: 1,
            found: 0,
            missing,
        });
    }
    Ok(Accuracy {
        value: hits as f64 / n as f64,
        n,
    })
}

/// Spearman's ρ between the scores of `targets` and a per-word frequency.
pub fn frequency_correlation(
    pred: &ChangeScores,
    targets: &TargetSet,
    frequency: impl Fn(&str) -> Option<f64>,
) -> Result<Correlation> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut missing = Vec::new();
    for word in targets.words() {
        match (pred.get(word), frequency(word)) {
            (Some(s), Some(f)) => {
                x.push(s);
                y.push(f);
            }
            _ => missing.push(word.to_owned()),
        }
    }
    if x.len() < 3 {
        return Err(Error::InsufficientOverlap {
            needed: 3,
            found: x.len(),
            missing,
        });
    }
    Ok(Correlation {
        rho: rank_correlation(&x, &y),
        n: x.len(),
    })
}

/// Correlation between predicted change and target frequency in the second
/// corpus. Passing gold graded scores as `pred` gives the reference value of
/// the gold data itself.
pub fn freq_bias(
    pred: &ChangeScores,
    corpus2: &Corpus,
    targets: &TargetSet,
) -> Result<Correlation> {
    let counts = corpus2.token_counts();
    let vocab = corpus2.vocab();
    frequency_correlation(pred, targets, |w| {
        vocab.id(w).map(|id| counts[id as usize] as f64)
    })
}

/// Gold graded scores viewed as predictions.
pub fn gold_as_scores(gold: &TargetSet) -> ChangeScores {
    ChangeScores::new(
        crate::measures::Measure::Cd,
        gold.iter()
            .filter_map(|t| t.graded.map(|g| (t.word.clone(), g)))
            .collect(),
    )
}

/// Upper `quantile` of the mean |ρ| across `samples` under the null of no
/// association, estimated by independently permuting each sample's second
/// coordinate `draws` times.
pub fn permutation_null_quantile(
    samples: &[(Vec<f64>, Vec<f64>)],
    quantile: f64,
    draws: usize,
    seed: u64,
) -> f64 {
    assert!(!samples.is_empty() && draws > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats: Vec<f64> = (0..draws)
        .map(|_| {
            samples
                .iter()
                .map(|(x, y)| {
                    let mut y = y.clone();
                    y.shuffle(&mut rng);
                    rank_correlation(x, &y).abs()
                })
                .sum::<f64>()
                / samples.len() as f64
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let idx = ((quantile * draws as f64).ceil() as usize).clamp(1, draws) - 1;
    stats[idx]
}

/// Spearman and accuracy against gold, whichever the inputs allow.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub spearman: Option<Correlation>,
    pub accuracy: Option<Accuracy>,
    pub excluded: Vec<(String, String)>,
}

pub fn evaluate(
    scores: Option<&ChangeScores>,
    labels: Option<&BinaryLabels>,
    gold: &TargetSet,
) -> EvalReport {
    let mut report = EvalReport::default();
    if let Some(scores) = scores {
        report.excluded.extend(scores.excluded.iter().cloned());
        match spearman(scores, gold) {
            Ok(c) => report.spearman = Some(c),
            Err(e) => report.excluded.push(("spearman".into(), e.to_string())),
        }
    }
    if let Some(labels) = labels {
        match accuracy(labels, gold) {
            Ok(a) => report.accuracy = Some(a),
            Err(e) => report.excluded.push(("accuracy".into(), e.to_string())),
        }
    }
    report
}

impl EvalReport {
    /// `metric<TAB>value<TAB>n` lines; absent metrics print `NA`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tvalue\tn\n");
        match self.spearman {
            Some(c) => out.push_str(&format!("spearman\t{:.6}\t{}\n", c.rho, c.n)),
            None => out.push_str("spearman\tNA\t0\n"),
        }
        match self.accuracy {
            Some(a) => out.push_str(&format!("accuracy\t{:.6}\t{}\n", a.value, a.n)),
            None => out.push_str("accuracy\tNA\t0\n"),
        }
        out
    }
}
