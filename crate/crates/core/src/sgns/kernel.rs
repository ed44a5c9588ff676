//! Per-pair SGNS update, generic over the storage cell so the same code
//! drives the single-threaded trainer (`Cell<f64>`) and the lock-free
//! parallel trainer (`AtomicU64` holding f64 bits).

use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering};

pub(crate) trait Slot {
    fn get(&self) -> f64;
    fn set(&self, v: f64);
}

impl Slot for Cell<f64> {
    #[inline(always)]
    fn get(&self) -> f64 {
        Cell::get(self)
    }

    #[inline(always)]
    fn set(&self, v: f64) {
        Cell::set(self, v)
    }
}

impl Slot for AtomicU64 {
    #[inline(always)]
    fn get(&self) -> f64 {
        f64::from_bits(self.load(Ordering::Relaxed))
    }

    #[inline(always)]
    fn set(&self, v: f64) {
        self.store(v.to_bits(), Ordering::Relaxed)
    }
}

/// Logistic function, evaluated on the side that cannot overflow.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline(always)]
fn dot<S: Slot>(a: &[S], b: &[S]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4 * 4;
    let (a_head, a_tail) = a.split_at(chunks);
    let (b_head, b_tail) = b.split_at(chunks);
    for (x, y) in a_head.chunks_exact(4).zip(b_head.chunks_exact(4)) {
        acc[0] += x[0].get() * y[0].get();
        acc[1] += x[1].get() * y[1].get();
        acc[2] += x[2].get() * y[2].get();
        acc[3] += x[3].get() * y[3].get();
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in a_tail.iter().zip(b_tail) {
        sum += x.get() * y.get();
    }
    sum
}

#[inline(always)]
pub(crate) fn row<S>(matrix: &[S], id: u32, dim: usize) -> &[S] {
    &matrix[id as usize * dim..(id as usize + 1) * dim]
}

/// One stochastic ascent step on `log σ(c·w) + Σ_n log σ(-n·w)`.
///
/// Every context-row update reads the pre-update word vector; the word vector
/// receives the accumulated gradient once all context rows are done.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn update_pair<S: Slot>(
    word: &[S],
    context: &[S],
    dim: usize,
    w: u32,
    c: u32,
    negatives: &[u32],
    lr: f64,
    grad: &mut [f64],
) {
    let vw = row(word, w, dim);
    grad.fill(0.0);
    let targets = std::iter::once((c, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
    for (target, label) in targets {
        let vc = row(context, target, dim);
        let g = (label - sigmoid(dot(vw, vc))) * lr;
        for ((acc, x), y) in grad.iter_mut().zip(vc).zip(vw) {
            let cv = x.get();
            *acc += g * cv;
            x.set(cv + g * y.get());
        }
    }
    for (x, acc) in vw.iter().zip(grad.iter()) {
        x.set(x.get() + acc);
    }
}
