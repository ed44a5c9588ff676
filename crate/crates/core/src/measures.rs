//! Change measures over aligned spaces: cosine distance (CD), local
//! neighbourhood distance (LND), and the median split turning graded scores
//! into binary change labels.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, Axis};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::align::AlignedSpaces;
use crate::corpus::TargetSet;
use crate::error::{Error, Result};

/// Neighbourhood size used by LND unless configured otherwise.
pub const DEFAULT_LND_K: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Cd,
    Lnd,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Cd => "cd",
            Measure::Lnd => "lnd",
        })
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cd" => Ok(Measure::Cd),
            "lnd" => Ok(Measure::Lnd),
            _ => Err(Error::InvalidParameter(format!("unknown measure `{s}`"))),
        }
    }
}

/// Graded change score per resolvable target. Targets that could not be
/// scored are listed in `excluded` with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeScores {
    pub measure: Measure,
    pub entries: Vec<(String, f64)>,
    pub excluded: Vec<(String, String)>,
}

impl ChangeScores {
    pub fn new(measure: Measure, entries: Vec<(String, f64)>) -> Self {
        ChangeScores {
            measure,
            entries,
            excluded: Vec::new(),
        }
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(w, _)| w == word)
            .map(|(_, s)| *s)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryLabels {
    pub entries: Vec<(String, bool)>,
}

impl BinaryLabels {
    pub fn get(&self, word: &str) -> Option<bool> {
        self.entries
            .iter()
            .find(|(w, _)| w == word)
            .map(|(_, l)| *l)
    }

    pub fn positives(&self) -> usize {
        self.entries.iter().filter(|(_, l)| *l).count()
    }
}

/// `1 − cos(x, y)`, clamped to `[0, 2]`.
pub fn cosine_distance(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let nx = x.dot(&x).sqrt();
    if nx == 0.0 {
        return Err(Error::ZeroVector(
            "first argument of the cosine distance".into(),
        ));
    }
    let ny = y.dot(&y).sqrt();
    if ny == 0.0 {
        return Err(Error::ZeroVector(
            "second argument of the cosine distance".into(),
        ));
    }
    Ok((1.0 - x.dot(&y) / (nx * ny)).clamp(0.0, 2.0))
}

/// Unit-normalised word rows of both spaces restricted to their shared
/// vocabulary (in lexicographic order), for repeated neighbourhood queries.
pub struct NeighbourIndex<'a> {
    words: &'a [String],
    unit: [Array2<f64>; 2],
}

impl<'a> NeighbourIndex<'a> {
    pub fn new(spaces: &'a AlignedSpaces) -> Self {
        let words = spaces.shared_vocab.as_slice();
        let unit = [&spaces.space1, &spaces.space2].map(|space| {
            let rows: Vec<usize> = words
                .iter()
                .map(|w| space.vocab().id(w).expect("shared word") as usize)
                .collect();
            let mut m = space.word_vectors().select(Axis(0), &rows);
            for mut row in m.rows_mut() {
                let n = row.dot(&row).sqrt();
                if n > 0.0 {
                    row /= n;
                }
            }
            m
        });
        NeighbourIndex { words, unit }
    }

    fn position(&self, word: &str) -> Option<usize> {
        self.words.binary_search_by(|w| w.as_str().cmp(word)).ok()
    }

    /// Local neighbourhood distance of `word` with `k` neighbours per space.
    ///
    /// The neighbour set is the union of the word's `k` nearest shared words
    /// (by cosine similarity, ties broken lexicographically, the word itself
    /// excluded) in each space. The word's similarities to that set, listed
    /// in lexicographic order, form one profile per space; the result is the
    /// cosine distance between the two profiles.
    pub fn lnd(&self, word: &str, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        let pos = self
            .position(word)
            .ok_or_else(|| Error::MissingWord(word.to_owned()))?;
        let pool = self.words.len() - 1;
        if pool < k {
            return Err(Error::NeighbourPool {
                word: word.to_owned(),
                available: pool,
                k,
            });
        }
        let sims: [Array1<f64>; 2] = [0, 1].map(|s| self.unit[s].dot(&self.unit[s].row(pos)));
        let mut union: Vec<usize> = Vec::with_capacity(2 * k);
        for s in &sims {
            let mut candidates: Vec<usize> = (0..self.words.len()).filter(|&i| i != pos).collect();
            let by_rank = |a: &usize, b: &usize| s[*b].total_cmp(&s[*a]).then(a.cmp(b));
            if k < candidates.len() {
                candidates.select_nth_unstable_by(k - 1, by_rank);
                candidates.truncate(k);
            }
            union.extend(candidates);
        }
        union.sort_unstable();
        union.dedup();
        let profile = |s: &Array1<f64>| -> Array1<f64> { union.iter().map(|&i| s[i]).collect() };
        cosine_distance(profile(&sims[0]).view(), profile(&sims[1]).view())
    }
}

/// One-off LND computation; build a [`NeighbourIndex`] for many words.
pub fn lnd(word: &str, spaces: &AlignedSpaces, k: usize) -> Result<f64> {
    NeighbourIndex::new(spaces).lnd(word, k)
}

enum Scorer<'a> {
    Cd(&'a AlignedSpaces),
    Lnd(NeighbourIndex<'a>, usize),
}

impl Scorer<'_> {
    fn score(&self, word: &str) -> std::result::Result<f64, String> {
        match self {
            Scorer::Cd(spaces) => {
                let x = spaces
                    .space1
                    .vector(word)
                    .ok_or_else(|| "not in space 1".to_string())?;
                let y = spaces
                    .space2
                    .vector(word)
                    .ok_or_else(|| "not in space 2".to_string())?;
                cosine_distance(x, y).map_err(|e| e.to_string())
            }
            Scorer::Lnd(index, k) => index.lnd(word, *k).map_err(|e| e.to_string()),
        }
    }
}

/// Scores every target with `measure`; LND uses `k` neighbours.
pub fn score_targets(
    spaces: &AlignedSpaces,
    targets: &TargetSet,
    measure: Measure,
    k: usize,
) -> ChangeScores {
    let scorer = match measure {
        Measure::Cd => Scorer::Cd(spaces),
        Measure::Lnd => Scorer::Lnd(NeighbourIndex::new(spaces), k),
    };
    let words: Vec<&str> = targets.words().collect();
    #[cfg(feature = "parallel")]
    let results: Vec<_> = words.par_iter().map(|w| scorer.score(w)).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = words.iter().map(|w| scorer.score(w)).collect();

    let mut scores = ChangeScores::new(measure, Vec::new());
    for (word, result) in words.into_iter().zip(results) {
        match result {
            Ok(s) => scores.entries.push((word.to_owned(), s)),
            Err(reason) => scores.excluded.push((word.to_owned(), reason)),
        }
    }
    scores
}

/// Labels the top `⌊n/2⌋` scores as changed. Ties are ordered
/// lexicographically, earlier words first.
pub fn median_split(scores: &ChangeScores) -> Result<BinaryLabels> {
    let n = scores.entries.len();
    if n < 2 {
        return Err(Error::TooFewEntries {
            needed: 2,
            found: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (wa, sa) = &scores.entries[a];
        let (wb, sb) = &scores.entries[b];
        sb.total_cmp(sa).then_with(|| wa.cmp(wb))
    });
    let mut labels = vec![false; n];
    for &i in &order[..n / 2] {
        labels[i] = true;
    }
    Ok(BinaryLabels {
        entries: scores
            .entries
            .iter()
            .zip(labels)
            .map(|((w, _), l)| (w.clone(), l))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cosine_distance_reference_points() {
        let x = array![0.3, -1.2, 2.0];
        assert!(cosine_distance(x.view(), x.view()).unwrap() < 1e-15);
        assert!((cosine_distance(x.view(), (-&x).view()).unwrap() - 2.0).abs() < 1e-15);
        let e1 = array![1.0, 0.0];
        let e2 = array![0.0, 1.0];
        assert_eq!(cosine_distance(e1.view(), e2.view()).unwrap(), 1.0);
    }

    #[test]
    fn cosine_distance_names_the_zero_argument() {
        let z = array![0.0, 0.0];
        let x = array![1.0, 0.0];
        let err = cosine_distance(x.view(), z.view()).unwrap_err();
        assert!(err.to_string().contains("second"));
        let err = cosine_distance(z.view(), x.view()).unwrap_err();
        assert!(err.to_string().contains("first"));
    }

    fn scores(pairs: &[(&str, f64)]) -> ChangeScores {
        ChangeScores::new(
            Measure::Lnd,
            pairs.iter().map(|(w, s)| (w.to_string(), *s)).collect(),
        )
    }

    #[test]
    fn median_split_labels_the_high_half() {
        let labels =
            median_split(&scores(&[("a", 0.9), ("b", 0.1), ("c", 0.8), ("d", 0.2)])).unwrap();
        assert_eq!(labels.get("a"), Some(true));
        assert_eq!(labels.get("c"), Some(true));
        assert_eq!(labels.get("b"), Some(false));
        assert_eq!(labels.get("d"), Some(false));
    }

    #[test]
    fn median_split_odd_and_tied() {
        let labels = median_split(&scores(&[
            ("a", 1.0),
            ("b", 2.0),
            ("c", 3.0),
            ("d", 4.0),
            ("e", 5.0),
        ]))
        .unwrap();
        assert_eq!(labels.positives(), 2);
        let labels =
            median_split(&scores(&[("d", 0.5), ("b", 0.5), ("a", 0.5), ("c", 0.5)])).unwrap();
        assert_eq!(labels.positives(), 2);
        assert_eq!(labels.get("a"), Some(true));
        assert_eq!(labels.get("b"), Some(true));
        assert!(median_split(&scores(&[("a", 1.0)])).is_err());
    }
}
