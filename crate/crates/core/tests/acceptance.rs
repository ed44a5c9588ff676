//! Acceptance checks, one line per criterion. Run a subset with
//! `cargo test --test acceptance -- 1 3 9`.

use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semchange::align::{
    align_op, align_vi, align_wi, frobenius, solve_procrustes, AlignedSpaces, Method, Order,
    Pipeline, ViOptions,
};
use semchange::corpus::{inject_targets, InjectionScheme, Tags, Target, TargetSet, Vocabulary};
use semchange::experiments::{
    accuracy, freq_bias, frequency_correlation, gen_synthetic_pair, permutation_null_quantile,
    run_sweep, spearman, SweepSpec, SyntheticPair, SyntheticSpec, TargetFrequency,
};
use semchange::measures::{
    cosine_distance, lnd, score_targets, BinaryLabels, ChangeScores, Measure,
};
use semchange::sgns::{pair_loss, sgd_step, train, InitSpec};
use semchange::{Corpus, EmbeddingModel, TrainingConfig};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let minutes = |m: u64| Duration::from_secs(60 * m);
    let criteria = [
        Criterion {
            id: 1,
            budget: Duration::from_secs(1),
            run: gradient_check,
        },
        Criterion {
            id: 2,
            budget: Duration::from_secs(10),
            run: procrustes_suite,
        },
        Criterion {
            id: 3,
            budget: Duration::from_secs(5),
            run: lnd_oracle,
        },
        Criterion {
            id: 4,
            budget: Duration::from_secs(10),
            run: rank_oracle,
        },
        Criterion {
            id: 5,
            budget: minutes(2),
            run: self_alignment,
        },
        Criterion {
            id: 6,
            budget: minutes(15),
            run: synthetic_detection,
        },
        Criterion {
            id: 7,
            budget: minutes(30),
            run: frequency_bias_grows,
        },
        Criterion {
            id: 8,
            budget: minutes(30),
            run: fixed_frequency_control,
        },
        Criterion {
            id: 9,
            budget: minutes(5),
            run: determinism,
        },
    ];
    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| wanted.is_empty() || wanted.contains(&c.id))
    {
        let start = Instant::now();
        let outcome = (c.run)();
        let secs = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if secs > c.budget => {
                Err(format!("{detail}; over the {}s budget", c.budget.as_secs()))
            }
            other => other,
        };
        let (verdict, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!(
            "criterion {}: {verdict} ({detail}; {:.1}s)",
            c.id,
            secs.as_secs_f64()
        );
        failed += usize::from(outcome.is_err());
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i:02}")).collect()
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

fn model_from(
    words: &[String],
    word_vectors: Array2<f64>,
    context_vectors: Array2<f64>,
) -> EmbeddingModel {
    let vocab = Vocabulary::from_entries(words.iter().map(|w| (w.clone(), 1)).collect()).unwrap();
    EmbeddingModel::from_parts(
        Arc::new(vocab),
        word_vectors,
        context_vectors,
        TrainingConfig::default(),
        "m",
    )
    .unwrap()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn gradient_check() -> Outcome {
    const STEP: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vocab = names(8);
    let mut worst: f64 = 0.0;
    for instance in 0..100 {
        let dim = if instance % 2 == 0 { 2 } else { 5 };
        let word = uniform_matrix(&mut rng, vocab.len(), dim);
        let context = uniform_matrix(&mut rng, vocab.len(), dim);
        let mut ids: Vec<u32> = (0..vocab.len() as u32).collect();
        ids.shuffle(&mut rng);
        let pair = (rng.random_range(0..vocab.len() as u32), ids[0]);
        let negatives = &ids[1..4];

        // One step at rate 1 moves every touched row by minus its gradient.
        let mut stepped = model_from(&vocab, word.clone(), context.clone());
        sgd_step(&mut stepped, pair, negatives, 1.0);
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        let loss = |w: &Array2<f64>, c: &Array2<f64>| {
            pair_loss(&model_from(&vocab, w.clone(), c.clone()), pair, negatives)
        };
        for j in 0..dim {
            let row = pair.0 as usize;
            analytic.push(word[[row, j]] - stepped.word_vectors()[[row, j]]);
            let (mut up, mut down) = (word.clone(), word.clone());
            up[[row, j]] += STEP;
            down[[row, j]] -= STEP;
            numeric.push((loss(&up, &context) - loss(&down, &context)) / (2.0 * STEP));
        }
        for &id in std::iter::once(&pair.1).chain(negatives) {
            let row = id as usize;
            for j in 0..dim {
                analytic.push(context[[row, j]] - stepped.context_vectors()[[row, j]]);
                let (mut up, mut down) = (context.clone(), context.clone());
                up[[row, j]] += STEP;
                down[[row, j]] -= STEP;
                numeric.push((loss(&word, &up) - loss(&word, &down)) / (2.0 * STEP));
            }
        }
        let a = Array1::from(analytic);
        let n = Array1::from(numeric);
        let diff = (&a - &n).mapv(|v| v * v).sum().sqrt();
        let scale = a.dot(&a).sqrt().max(n.dot(&n).sqrt()).max(1e-12);
        worst = worst.max(diff / scale);
    }
    check(
        worst < 1e-4,
        format!("max relative error {worst:.2e} over 100 instances"),
    )
}

fn random_rotation(rng: &mut ChaCha8Rng, d: usize) -> Array2<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let q = m.qr().q();
    Array2::from_shape_fn((d, d), |(i, j)| q[(i, j)])
}

fn procrustes_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut ortho, mut planted, mut excess) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for instance in 0..50 {
        let d = 2 + instance % 9;
        let n = d + 5 + instance % 20;
        let a = uniform_matrix(&mut rng, n, d);
        let b = uniform_matrix(&mut rng, n, d);
        let s = solve_procrustes(&a, &b).map_err(|e| e.to_string())?;
        ortho = ortho.max(s.orthogonality_error());
        excess = excess.max(s.residual - frobenius(&(&b - &a)));

        let q = random_rotation(&mut rng, d);
        let rotated = a.dot(&q.t());
        let s = solve_procrustes(&a, &rotated).map_err(|e| e.to_string())?;
        planted = planted.max(s.residual).max(frobenius(&(&s.rotation - &q)));
    }
    check(
        ortho < 1e-8 && planted < 1e-6 && excess <= 1e-12,
        format!("orthogonality {ortho:.1e}, planted residual {planted:.1e}, residual minus identity residual at most {excess:.2}"),
    )
}

/// Neighbourhood profile distance computed from scratch, without the
/// library's index.
fn brute_lnd(word: &str, s1: &EmbeddingModel, s2: &EmbeddingModel, k: usize) -> f64 {
    let mut shared: Vec<&str> = s1
        .vocab()
        .words()
        .iter()
        .map(String::as_str)
        .filter(|w| s2.vocab().contains(w))
        .collect();
    shared.sort_unstable();
    let cos = |m: &EmbeddingModel, a: &str, b: &str| {
        let (x, y) = (m.vector(a).unwrap(), m.vector(b).unwrap());
        x.dot(&y) / (x.dot(&x).sqrt() * y.dot(&y).sqrt())
    };
    let mut union: Vec<&str> = Vec::new();
    for m in [s1, s2] {
        let mut others: Vec<(f64, &str)> = shared
            .iter()
            .filter(|w| **w != word)
            .map(|w| (cos(m, word, w), *w))
            .collect();
        others.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
        union.extend(others.iter().take(k).map(|(_, w)| *w));
    }
    union.sort_unstable();
    union.dedup();
    let p1: Vec<f64> = union.iter().map(|w| cos(s1, word, w)).collect();
    let p2: Vec<f64> = union.iter().map(|w| cos(s2, word, w)).collect();
    let dot: f64 = p1.iter().zip(&p2).map(|(a, b)| a * b).sum();
    let norm = |p: &[f64]| p.iter().map(|v| v * v).sum::<f64>().sqrt();
    (1.0 - dot / (norm(&p1) * norm(&p2))).clamp(0.0, 2.0)
}

fn lnd_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let shared = names(20);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        // The second space lists its words in another order and knows two
        // words the first does not.
        let mut second = shared.clone();
        second.shuffle(&mut rng);
        second.extend(["x1".to_string(), "x2".to_string()]);
        let zero = |n: usize| Array2::zeros((n, 5));
        let s1 = model_from(&shared, uniform_matrix(&mut rng, 20, 5), zero(20));
        let s2 = model_from(&second, uniform_matrix(&mut rng, 22, 5), zero(22));
        let spaces =
            AlignedSpaces::new(s1, s2, Method::Op, Order::Forward).map_err(|e| e.to_string())?;
        for w in &shared {
            let got = lnd(w, &spaces, 3).map_err(|e| e.to_string())?;
            worst = worst.max((got - brute_lnd(w, &spaces.space1, &spaces.space2, 3)).abs());
        }
    }
    check(
        worst < 1e-10,
        format!("max deviation {worst:.1e} over 100 instances of 20 words"),
    )
}

/// Rank of each value counting smaller values, ties at their mean position.
fn definitional_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let below = x.iter().filter(|u| *u < v).count() as f64;
            let equal = x.iter().filter(|u| *u == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn definitional_pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn rank_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mut rho_err, mut acc_err, mut with_ties, mut done) = (0.0f64, 0.0f64, 0, 0);
    while done < 1000 {
        let n = rng.random_range(3..40);
        let levels = rng.random_range(2..12);
        let pred: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(0..levels)) / 4.0)
            .collect();
        let gold: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(0..levels)) / 4.0)
            .collect();
        let (rp, rg) = (definitional_ranks(&pred), definitional_ranks(&gold));
        if mean(&rp.iter().map(|r| (r - mean(&rp)).abs()).collect::<Vec<_>>()) == 0.0
            || mean(&rg.iter().map(|r| (r - mean(&rg)).abs()).collect::<Vec<_>>()) == 0.0
        {
            continue;
        }
        done += 1;
        let words = names(n);
        with_ties += usize::from(rp.iter().any(|r| r.fract() != 0.0));
        let scores = ChangeScores::new(
            Measure::Cd,
            words.iter().cloned().zip(pred.iter().copied()).collect(),
        );
        let gold_bin: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let targets = TargetSet::new(
            words
                .iter()
                .zip(&gold)
                .zip(&gold_bin)
                .map(|((w, g), b)| Target::with_gold(w.clone(), Some(*b), Some(*g)))
                .collect(),
        )
        .unwrap();
        let rho = spearman(&scores, &targets).map_err(|e| e.to_string())?.rho;
        rho_err = rho_err.max((rho - definitional_pearson(&rp, &rg)).abs());

        let pred_labels = BinaryLabels {
            entries: words.iter().cloned().zip(labels.iter().copied()).collect(),
        };
        let acc = accuracy(&pred_labels, &targets)
            .map_err(|e| e.to_string())?
            .value;
        let hits = labels.iter().zip(&gold_bin).filter(|(a, b)| a == b).count();
        acc_err = acc_err.max((acc - hits as f64 / n as f64).abs());
    }
    check(
        rho_err < 1e-12 && acc_err < 1e-12,
        format!("max deviation rho {rho_err:.1e}, accuracy {acc_err:.1e}; {with_ties} of 1000 instances with ties"),
    )
}

fn fixture_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        vocab_size: 1000,
        topics: 20,
        sentences: 10_000,
        sentence_len: 10,
        n_stable: 5,
        n_changed: 5,
        target_frequency: TargetFrequency::Fixed(300),
        seed,
        ..SyntheticSpec::default()
    }
}

fn first_half(corpus: &Corpus) -> Corpus {
    let vocab = corpus.vocab();
    let sentences: Vec<Vec<&str>> = corpus
        .sentences()
        .take(corpus.n_sentences() / 2)
        .map(|s| s.iter().map(|&id| vocab.word(id)).collect())
        .collect();
    Corpus::from_tokens("half", &sentences, None).unwrap()
}

fn max_target_cd(spaces: &AlignedSpaces, targets: &TargetSet) -> f64 {
    let scores = score_targets(spaces, targets, Measure::Cd, 10);
    targets
        .words()
        .map(|w| scores.get(w).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

fn self_alignment() -> Outcome {
    let pair = gen_synthetic_pair(&fixture_spec(5)).map_err(|e| e.to_string())?;
    let config = TrainingConfig {
        dim: 50,
        epochs: 5,
        ..TrainingConfig::default()
    };
    let fail = |e: semchange::Error| e.to_string();

    let no_second = ViOptions {
        second_epochs: Some(0),
        ..ViOptions::default()
    };
    let vi = align_vi(&pair.corpus1, &pair.corpus2, &config, no_second).map_err(fail)?;
    let vi_max = max_target_cd(&vi, &pair.targets);

    let model = train(&pair.corpus1, &config, InitSpec::Random).map_err(fail)?;
    let op = align_op(&model, &model).map_err(fail)?;
    let op_max = max_target_cd(&op, &pair.targets);

    let half = first_half(&pair.corpus1);
    let targets = TargetSet::from_words(
        &pair
            .targets
            .words()
            .filter(|w| half.vocab().contains(w))
            .collect::<Vec<_>>(),
    )
    .map_err(fail)?;
    let mut wi_ok = true;
    let (mut wi_max, mut p10_min) = (0.0f64, f64::INFINITY);
    for seed in 1..=5 {
        let config = TrainingConfig {
            seed,
            ..config.clone()
        };
        let joint = inject_targets(
            &half,
            &half,
            &targets,
            InjectionScheme::WordInjection,
            &Tags::default(),
            seed,
        )
        .map_err(fail)?;
        let spaces = align_wi(&joint, &config).map_err(fail)?;
        let worst = max_target_cd(&spaces, &targets);
        let space = &spaces.space1;
        let words = &spaces.shared_vocab;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut random: Vec<f64> = (0..2000)
            .filter_map(|_| {
                let a = &words[rng.random_range(0..words.len())];
                let b = &words[rng.random_range(0..words.len())];
                (a != b).then(|| {
                    cosine_distance(space.vector(a).unwrap(), space.vector(b).unwrap()).unwrap()
                })
            })
            .collect();
        random.sort_by(f64::total_cmp);
        let p10 = random[random.len() / 10];
        wi_ok &= worst < p10;
        wi_max = wi_max.max(worst);
        p10_min = p10_min.min(p10);
    }
    check(
        vi_max < 1e-6 && op_max < 1e-6 && wi_ok,
        format!(
            "{} tokens; max target CD vi {vi_max:.1e}, op {op_max:.1e}, wi {wi_max:.3} (lowest random-pair p10 {p10_min:.3})",
            pair.corpus1.n_tokens()
        ),
    )
}

fn synthetic_detection() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    let mut tokens = 0;
    for method in [Method::Vi, Method::Op, Method::Wi] {
        let mut rhos = Vec::new();
        for seed in 1..=5 {
            let spec = SyntheticSpec {
                sentences: 100_000,
                seed,
                ..SyntheticSpec::default()
            };
            let pair = gen_synthetic_pair(&spec).map_err(|e| e.to_string())?;
            tokens = pair.corpus1.n_tokens();
            let config = TrainingConfig {
                dim: 25,
                seed,
                ..TrainingConfig::default()
            };
            let spaces = Pipeline::new(method, config)
                .run(&pair.corpus1, &pair.corpus2, &pair.targets)
                .map_err(|e| e.to_string())?;
            let scores = score_targets(&spaces, &pair.targets, Measure::Cd, 10);
            rhos.push(
                spearman(&scores, &pair.targets)
                    .map_err(|e| e.to_string())?
                    .rho,
            );
        }
        let rho = mean(&rhos);
        ok &= rho >= 0.8;
        detail.push(format!("{method} {rho:.3}"));
    }
    check(
        ok,
        format!("{tokens} tokens per corpus; mean rho {}", detail.join(", ")),
    )
}

const BIAS_DIMS: [usize; 2] = [25, 500];
const BIAS_SEEDS: u64 = 5;

fn bias_spec(seed: u64, target_frequency: TargetFrequency) -> SyntheticSpec {
    SyntheticSpec {
        sentences: 30_000,
        n_stable: 20,
        n_changed: 20,
        target_frequency,
        general_share: 0.5,
        seed,
        ..SyntheticSpec::default()
    }
}

fn bias_config(dim: usize, seed: u64) -> TrainingConfig {
    TrainingConfig {
        dim,
        learning_rate: 0.1,
        seed,
        ..TrainingConfig::default()
    }
}

const LOG_SPREAD: TargetFrequency = TargetFrequency::LogSpread { min: 20, max: 2000 };

/// VI change scores for each seed of the bias experiment at `dim`.
fn vi_runs(
    dim: usize,
    frequency: TargetFrequency,
) -> Result<Vec<(SyntheticPair, ChangeScores)>, String> {
    (1..=BIAS_SEEDS)
        .map(|seed| {
            let pair =
                gen_synthetic_pair(&bias_spec(seed, frequency)).map_err(|e| e.to_string())?;
            let spaces = align_vi(
                &pair.corpus1,
                &pair.corpus2,
                &bias_config(dim, seed),
                ViOptions::default(),
            )
            .map_err(|e| e.to_string())?;
            let scores = score_targets(&spaces, &pair.targets, Measure::Cd, 10);
            Ok((pair, scores))
        })
        .collect()
}

fn frequency_bias_grows() -> Outcome {
    let mut bias = Vec::new();
    let mut rho = Vec::new();
    for dim in BIAS_DIMS {
        let runs = vi_runs(dim, LOG_SPREAD)?;
        let mut fb = Vec::new();
        let mut sp = Vec::new();
        for (pair, scores) in &runs {
            fb.push(
                freq_bias(scores, &pair.corpus2, &pair.targets)
                    .map_err(|e| e.to_string())?
                    .rho
                    .abs(),
            );
            sp.push(
                spearman(scores, &pair.targets)
                    .map_err(|e| e.to_string())?
                    .rho,
            );
        }
        bias.push(mean(&fb));
        rho.push(mean(&sp));
    }
    check(
        bias[1] > bias[0] && rho[1] < rho[0],
        format!(
            "mean |freq_bias| {:.3} at d=25, {:.3} at d=500; mean rho {:.3} at d=25, {:.3} at d=500",
            bias[0], bias[1], rho[0], rho[1]
        ),
    )
}

fn fixed_frequency_control() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for dim in BIAS_DIMS {
        let runs = vi_runs(dim, TargetFrequency::Fixed(200))?;
        let mut samples = Vec::new();
        let mut observed = Vec::new();
        let mut literal = Vec::new();
        for (seed, (pair, scores)) in (1..=BIAS_SEEDS).zip(&runs) {
            // Every target occurs exactly 200 times, so the bias is measured
            // against the frequencies the same seed would have assigned.
            let nominal: std::collections::HashMap<String, f64> = bias_spec(seed, LOG_SPREAD)
                .target_frequencies()
                .into_iter()
                .map(|(w, f)| (w, f as f64))
                .collect();
            let c = frequency_correlation(scores, &pair.targets, |w| nominal.get(w).copied())
                .map_err(|e| e.to_string())?;
            observed.push(c.rho.abs());
            literal.push(
                freq_bias(scores, &pair.corpus2, &pair.targets)
                    .map_err(|e| e.to_string())?
                    .rho
                    .abs(),
            );
            let (x, y): (Vec<f64>, Vec<f64>) = pair
                .targets
                .words()
                .map(|w| (scores.get(w).unwrap(), nominal[w]))
                .unzip();
            samples.push((x, y));
        }
        let null = permutation_null_quantile(&samples, 0.95, 2000, dim as u64);
        let bias = mean(&observed);
        ok &= bias < null;
        detail.push(format!(
            "d={dim} mean |freq_bias| {bias:.3} vs null 95% {null:.3} (against corpus counts {:.3})",
            mean(&literal)
        ));
    }
    check(ok, detail.join("; "))
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let spec = SyntheticSpec {
        sentences: 3000,
        ..fixture_spec(9)
    };
    let pair = gen_synthetic_pair(&spec).map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = TrainingConfig {
        dim: 20,
        epochs: 2,
        threads: 1,
        seed: 4,
        ..TrainingConfig::default()
    };
    let mut compared = 0;
    for method in [Method::Vi, Method::ViOp, Method::Op, Method::Wi] {
        let mut outputs = Vec::new();
        for attempt in 0..2 {
            let dir = tmp.path().join(format!("{method}-{attempt}"));
            Pipeline::new(method, config.clone())
                .run(&pair.corpus1, &pair.corpus2, &pair.targets)
                .and_then(|s| s.save(&dir))
                .map_err(|e| e.to_string())?;
            outputs.push(dir_bytes(&dir));
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{method} spaces differ between runs"));
        }
        compared += outputs[0].len();
    }
    let mut sweep = SweepSpec::new(Pipeline::new(Method::Vi, config), 7);
    sweep.dims = vec![5, 10];
    sweep.seeds = vec![7, 8];
    sweep.wallclock = false;
    let mut csv = Vec::new();
    for _ in 0..2 {
        let result = run_sweep(&sweep, &pair.corpus1, &pair.corpus2, &pair.targets)
            .map_err(|e| e.to_string())?;
        let mut cells = Vec::new();
        let mut aggregates = Vec::new();
        result.write_cells(&mut cells).map_err(|e| e.to_string())?;
        result
            .write_aggregates(&mut aggregates)
            .map_err(|e| e.to_string())?;
        csv.push((cells, aggregates));
    }
    check(
        csv[0] == csv[1],
        format!("{compared} space files and 2 sweep CSVs byte-identical across two runs"),
    )
}
