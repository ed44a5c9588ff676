//! File formats: corpora, embedding text files, target / score / label TSVs
//! and flat `key=value` configuration files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use ndarray::Array2;

use crate::corpus::{Target, TargetSet, Vocabulary};
use crate::error::{Error, Result};
use crate::measures::{BinaryLabels, ChangeScores, Measure};

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

pub fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        MultiGzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Splits raw bytes into non-empty lines of whitespace-separated tokens.
pub(crate) fn tokenised_lines<'a>(path: &Path, bytes: &'a [u8]) -> Result<Vec<Vec<&'a str>>> {
    let mut out = Vec::new();
    for (i, line) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = std::str::from_utf8(line).map_err(|_| Error::Decode {
            path: path.to_owned(),
            line: i + 1,
        })?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !tokens.is_empty() {
            out.push(tokens);
        }
    }
    Ok(out)
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = read_maybe_gzip(path)?;
    String::from_utf8(bytes).map_err(|e| {
        let valid = &e.as_bytes()[..e.utf8_error().valid_up_to()];
        Error::Decode {
            path: path.to_owned(),
            line: valid.iter().filter(|&&b| b == b'\n').count() + 1,
        }
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `|V| d` followed by `word v1 .. vd` rows with six decimals.
pub fn write_vectors(
    out: &mut impl Write,
    vocab: &Vocabulary,
    matrix: &Array2<f64>,
) -> std::io::Result<()> {
    let (rows, dim) = matrix.dim();
    debug_assert_eq!(rows, vocab.len());
    writeln!(out, "{rows} {dim}")?;
    for (word, row) in vocab.words().iter().zip(matrix.rows()) {
        out.write_all(word.as_bytes())?;
        for v in row {
            // Avoid "-0.000000" so identical models always print identically.
            let v = if v.abs() < 5e-7 { 0.0 } else { *v };
            write!(out, " {v:.6}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_vectors(path: &Path, vocab: &Vocabulary, matrix: &Array2<f64>) -> Result<()> {
    let mut out = create(path)?;
    write_vectors(&mut out, vocab, matrix)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Reads a text embedding file. Counts are not stored in the format, so the
/// returned vocabulary keeps file order with zero counts.
pub fn load_vectors(path: &Path) -> Result<(Vocabulary, Array2<f64>)> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing header"))?;
    let mut fields = header.split_whitespace();
    let mut header_field = || -> Result<usize> {
        fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| parse_err(path, 1, "header must be `<rows> <dim>`"))
    };
    let rows = header_field()?;
    let dim = header_field()?;
    let mut words = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * dim);
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let word = fields.next().unwrap_or_default();
        let before = data.len();
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(path, i + 1, format!("bad number `{f}`")))?;
            data.push(v);
        }
        if data.len() - before != dim {
            return Err(parse_err(path, i + 1, format!("expected {dim} values")));
        }
        words.push((word.to_owned(), 0));
    }
    if words.len() != rows {
        return Err(parse_err(
            path,
            1,
            format!("header promises {rows} rows, found {}", words.len()),
        ));
    }
    let vocab = Vocabulary::from_entries(words)?;
    let matrix = Array2::from_shape_vec((rows, dim), data).expect("shape checked above");
    Ok((vocab, matrix))
}

/// Sibling path holding the context matrix of an embedding file.
pub fn context_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".ctx");
    PathBuf::from(s)
}

/// Reads `word<TAB>binary<TAB>graded` lines; the gold columns may be empty
/// or missing.
pub fn load_targets(path: &Path) -> Result<TargetSet> {
    let text = read_text(path)?;
    let mut targets = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let word = cols.next().unwrap_or_default().trim();
        let binary = match cols.next().map(str::trim) {
            None | Some("") => None,
            Some("0") => Some(false),
            Some("1") => Some(true),
            Some(other) => {
                return Err(parse_err(
                    path,
                    i + 1,
                    format!("binary label must be 0 or 1, got `{other}`"),
                ))
            }
        };
        let graded =
            match cols.next().map(str::trim) {
                None | Some("") => None,
                Some(v) => Some(v.parse::<f64>().ok().filter(|g| g.is_finite()).ok_or_else(
                    || {
                        parse_err(
                            path,
                            i + 1,
                            format!("graded score `{v}` is not a finite number"),
                        )
                    },
                )?),
            };
        targets.push(Target::with_gold(word, binary, graded));
    }
    TargetSet::new(targets)
}

pub fn write_targets(out: &mut impl Write, targets: &TargetSet) -> std::io::Result<()> {
    for t in targets {
        let binary = t.binary.map(|b| if b { "1" } else { "0" }).unwrap_or("");
        let graded = t.graded.map(|g| format!("{g}")).unwrap_or_default();
        writeln!(out, "{}\t{binary}\t{graded}", t.word)?;
    }
    Ok(())
}

pub fn write_scores(out: &mut impl Write, scores: &ChangeScores) -> std::io::Result<()> {
    for (word, score) in &scores.entries {
        writeln!(out, "{word}\t{score:.6}")?;
    }
    Ok(())
}

pub fn load_scores(path: &Path, measure: Measure) -> Result<ChangeScores> {
    let text = read_text(path)?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (word, value) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(path, i + 1, "expected `word<TAB>score`"))?;
        let score: f64 = value
            .trim()
            .parse()
            .map_err(|_| parse_err(path, i + 1, format!("bad score `{value}`")))?;
        entries.push((word.to_owned(), score));
    }
    Ok(ChangeScores {
        measure,
        entries,
        excluded: Vec::new(),
    })
}

pub fn write_labels(out: &mut impl Write, labels: &BinaryLabels) -> std::io::Result<()> {
    for (word, label) in &labels.entries {
        writeln!(out, "{word}\t{}", u8::from(*label))?;
    }
    Ok(())
}

pub fn load_labels(path: &Path) -> Result<BinaryLabels> {
    let text = read_text(path)?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (word, value) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(path, i + 1, "expected `word<TAB>label`"))?;
        let label = match value.trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    path,
                    i + 1,
                    format!("label must be 0 or 1, got `{other}`"),
                ))
            }
        };
        entries.push((word.to_owned(), label));
    }
    Ok(BinaryLabels { entries })
}

/// Flat `key=value` configuration. `#` starts a comment line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    source: PathBuf,
    map: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        Self::parse(path, &text)
    }

    pub fn parse(source: &Path, text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(source, i + 1, "expected `key=value`"))?;
            if map
                .insert(k.trim().to_owned(), (i + 1, v.trim().to_owned()))
                .is_some()
            {
                return Err(parse_err(
                    source,
                    i + 1,
                    format!("duplicate key `{}`", k.trim()),
                ));
            }
        }
        Ok(KeyValues {
            source: source.to_owned(),
            map,
        })
    }

    pub fn from_pairs<K: Into<String>, V: Into<String>>(
        pairs: impl IntoIterator<Item = (K, V)>,
    ) -> Self {
        KeyValues {
            source: PathBuf::from("<memory>"),
            map: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), (0, v.into())))
                .collect(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> + '_ {
        self.map.keys().map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| parse_err(&self.source, 0, format!("missing required key `{key}`")))
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.map.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| {
                parse_err(&self.source, *line, format!("bad value `{v}` for `{key}`"))
            }),
        }
    }

    pub fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.map.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|_| {
                        parse_err(
                            &self.source,
                            *line,
                            format!("bad list item `{item}` for `{key}`"),
                        )
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Canonical `key=value` rendering, sorted by key.
    pub fn canonical(&self) -> String {
        self.map
            .iter()
            .map(|(k, (_, v))| format!("{k}={v}\n"))
            .collect()
    }

    pub fn source(&self) -> &Path {
        &self.source
    }
}
