//! Equal-length word pairs whose quotient lies deep in the central series,
//! and bounded-denominator Diophantine tests of their projections.
//!
//! With `L_0 = w_0`, `R_0 = w_0'` and
//! `L_p = L_{p-1} w_p R_{p-1}`, `R_p = R_{p-1} w_p L_{p-1}`, one has
//! `L_p R_p^{-1} = [L_{p-1} R_{p-1}^{-1}, R_{p-1} w_p]` (group commutator), so
//! `log(L_p R_p^{-1}) ≡ [...[k_0·V, k_1·V], ..., k_p·V] mod g^(p+1)` with
//! `k_0 = c(w_0) - c(w_0')` and `k_i = c(R_{i-1}) + c(w_i)`, where `c` counts letters.

use rayon::prelude::*;
use serde::Serialize;

use crate::bch::{Group, GroupElement, Word};
use crate::error::{Error, Result};
use crate::lie::{CentralSeries, LieVector, NilpotentAlgebra};
use crate::scalar::{Rational, Real, Scalar};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordPair {
    pub w1: Word,
    pub w2: Word,
    pub level: usize,
    /// `k_0, ..., k_p`, one count vector per level.
    pub k_sequence: Vec<Vec<i64>>,
    /// The seed words `w_0, w_0', w_1, ..., w_p`.
    pub seeds: Vec<Word>,
}

impl WordPair {
    /// `k_i >= k_{i-1}` componentwise for every `i >= 2`.
    pub fn is_monotone(&self) -> bool {
        self.k_sequence
            .windows(2)
            .skip(1)
            .all(|w| w[1].iter().zip(&w[0]).all(|(a, b)| a >= b))
    }

    /// `min(p(W1), p(W2))`.
    pub fn probability(&self, probs: &[f64]) -> f64 {
        self.w1.probability(probs).min(self.w2.probability(probs))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "level": self.level,
            "w1": self.w1.labels(),
            "w2": self.w2.labels(),
            "k_sequence": self.k_sequence,
            "seeds": self.seeds.iter().map(Word::labels).collect::<Vec<_>>(),
        })
    }
}

fn add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Runs the recursion on `w_list = (w_0, w_0', w_1, ..., w_p)` over `m` letters.
pub fn build_lr(p: usize, w_list: &[Word], m: usize) -> Result<WordPair> {
    if w_list.len() != p + 2 {
        return Err(Error::InvalidParameter(format!(
            "level {p} needs {} seed words, got {}",
            p + 2,
            w_list.len()
        )));
    }
    for w in w_list {
        w.check(m)?;
    }
    if w_list[0].is_empty() || w_list[1].is_empty() {
        return Err(Error::InvalidParameter("the base words w_0 and w_0' must be nonempty".into()));
    }
    if p == 0 && w_list[0].len() != w_list[1].len() {
        return Err(Error::LengthMismatch(w_list[0].len(), w_list[1].len()));
    }
    let (mut l, mut r) = (w_list[0].clone(), w_list[1].clone());
    let mut k = vec![l.counts(m).iter().zip(r.counts(m)).map(|(a, b)| a - b).collect::<Vec<_>>()];
    for w in &w_list[2..] {
        k.push(add(&r.counts(m), &w.counts(m)));
        let nl = l.concat(w).concat(&r);
        let nr = r.concat(w).concat(&l);
        l = nl;
        r = nr;
    }
    Ok(WordPair { w1: l, w2: r, level: p, k_sequence: k, seeds: w_list.to_vec() })
}

/// Both sides of the word/bracket identity, reduced modulo `g^(p+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub pass: bool,
    /// `log(W1 W2^-1)`, unreduced.
    pub log_quotient: LieVector,
    /// `[...[k_0·V, k_1·V], ..., k_p·V]` with `V_i = log g_i`.
    pub nested: LieVector,
    pub residual: LieVector,
    /// `log(W1 W2^-1) ∈ g^(p)`.
    pub level_contained: bool,
    pub monotone: bool,
}

fn combination<S: Scalar>(k: &[i64], v: &[GroupElement<S>], dim: usize) -> LieVector<S> {
    let mut out = LieVector::<S>::zero(dim);
    for (c, g) in k.iter().zip(v) {
        if *c != 0 {
            out.add_assign(&g.log.scale(&S::from_i64(*c)));
        }
    }
    out
}

/// Computes `log(W1 W2^-1)` by BCH word evaluation and the nested bracket of
/// the recorded `k`-combinations directly, and compares them modulo `g^(p+1)`.
pub fn verify_word_bracket_identity(
    alg: &NilpotentAlgebra,
    pair: &WordPair,
    generators: &[GroupElement],
) -> Result<IdentityCheck> {
    let group = Group::<Rational>::new(alg);
    let p = pair.level;
    let a = group.word_eval(&pair.w1, generators)?;
    let b = group.word_eval(&pair.w2, generators)?;
    let log_quotient = group.bch(&a.log, &b.log.neg());
    let n = alg.dim();
    let mut nested = combination(&pair.k_sequence[0], generators, n);
    for k in &pair.k_sequence[1..] {
        nested = alg.bracket(&nested, &combination(k, generators, n))?;
    }
    let residual = alg.series.truncate(&log_quotient.sub(&nested), p);
    Ok(IdentityCheck {
        pass: residual.is_zero(),
        level_contained: alg.series.in_level(&log_quotient, p),
        monotone: pair.is_monotone(),
        log_quotient,
        nested,
        residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiophantineReport {
    pub vector: Vec<f64>,
    pub tau: f64,
    pub q_max: u64,
    /// `min |n·v - m| |n|^τ` over `0 < |n|_∞ <= q_max`.
    pub gamma_hat: f64,
    pub worst_n: Vec<i64>,
    /// The same minimum restricted to `q_max/10 < |n|_∞ <= q_max`.
    pub gamma_tail: f64,
    pub worst_tail_n: Vec<i64>,
    /// Bound on the floating-point error of the reported minima.
    pub error_bound: f64,
}

/// Default denominator bound by torus dimension.
pub fn default_qmax(dim: usize) -> u64 {
    match dim {
        0..=2 => 10_000,
        3..=4 => 100,
        _ => 10,
    }
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    index: usize,
}

impl Best {
    fn none() -> Self {
        Best { value: f64::INFINITY, index: usize::MAX }
    }

    fn offer(&mut self, value: f64, index: usize) {
        if value < self.value || (value == self.value && index < self.index) {
            *self = Best { value, index };
        }
    }

    fn merge(mut self, other: Best) -> Best {
        self.offer(other.value, other.index);
        self
    }
}

/// Integer vectors of the half-space (first nonzero coordinate positive) with
/// `|n|_∞ <= q`, indexed as base-`(2q+1)` digits offset by `q`.
fn decode(mut index: usize, d: usize, q: i64) -> Vec<i64> {
    let base = (2 * q + 1) as usize;
    let mut n = vec![0; d];
    for x in n.iter_mut().rev() {
        *x = (index % base) as i64 - q;
        index /= base;
    }
    n
}

fn scan_block(v: &[f64], tau: f64, q: i64, tail_from: i64, first: i64) -> (Best, Best) {
    let d = v.len();
    let base = (2 * q + 1) as usize;
    let width = base.pow(d as u32 - 1);
    let (mut all, mut tail) = (Best::none(), Best::none());
    let offset = (first + q) as usize * width;
    let mut n = vec![0i64; d];
    n[0] = first;
    for r in 0..width {
        let mut rest = r;
        let mut dot = first as f64 * v[0];
        let mut norm = first.abs();
        let mut sign_ok = first > 0;
        let mut nonzero = first != 0;
        for i in (1..d).rev() {
            n[i] = (rest % base) as i64 - q;
            rest /= base;
        }
        for i in 1..d {
            if !nonzero && n[i] != 0 {
                nonzero = true;
                sign_ok = n[i] > 0;
            }
            dot += n[i] as f64 * v[i];
            norm = norm.max(n[i].abs());
        }
        if !nonzero || !sign_ok {
            continue;
        }
        let value = (dot - dot.round()).abs() * (norm as f64).powf(tau);
        all.offer(value, offset + r);
        if norm > tail_from {
            tail.offer(value, offset + r);
        }
    }
    (all, tail)
}

/// Exhaustive scan of `|n·v - m| |n|_∞^τ` over nonzero integer `n` with
/// `|n|_∞ <= q_max` and `m` the nearest integer to `n·v`. Ties go to the
/// lexicographically smallest `n`.
pub fn diophantine_estimate(v: &[f64], tau: f64, q_max: u64) -> Result<DiophantineReport> {
    if v.is_empty() {
        return Err(Error::InvalidParameter("Diophantine test needs a nonempty vector".into()));
    }
    if q_max == 0 || tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidParameter("need q_max >= 1 and tau >= 0".into()));
    }
    let d = v.len();
    let q = q_max as i64;
    let tail_from = q / 10;
    let (all, tail) = (0..=q)
        .into_par_iter()
        .map(|first| scan_block(v, tau, q, tail_from, first))
        .reduce(|| (Best::none(), Best::none()), |a, b| (a.0.merge(b.0), a.1.merge(b.1)));
    let sum: f64 = v.iter().map(|x| x.abs()).sum();
    let error_bound = 2.0 * d as f64 * f64::EPSILON * (q as f64) * (sum + 1.0) * (q as f64).powf(tau);
    let worst = |b: Best| if b.index == usize::MAX { Vec::new() } else { decode(b.index, d, q) };
    Ok(DiophantineReport {
        vector: v.to_vec(),
        tau,
        q_max,
        gamma_hat: all.value,
        worst_n: worst(all),
        gamma_tail: if tail.index == usize::MAX { all.value } else { tail.value },
        worst_tail_n: if tail.index == usize::MAX { worst(all) } else { worst(tail) },
        error_bound,
    })
}

/// Words of length `lo..=hi` over `m` letters, shortest first, lexicographic.
fn short_words(m: usize, lo: usize, hi: usize) -> Vec<Word> {
    let mut out = Vec::new();
    for len in lo..=hi {
        for idx in 0..m.pow(len as u32) {
            let mut letters = vec![0; len];
            let mut r = idx;
            for l in letters.iter_mut().rev() {
                *l = r % m;
                r /= m;
            }
            out.push(Word::new(letters));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct NiceCandidate {
    /// Position in the seed enumeration.
    pub index: usize,
    pub pair: WordPair,
    pub report: DiophantineReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NiceSearch {
    /// The pair with the largest `gamma_hat`; `None` when every candidate
    /// projected to zero.
    pub best: Option<NiceCandidate>,
    pub evaluated: usize,
    pub zero_projections: usize,
}

/// Enumerates seed words (`w_0, w_0'` of length 1–2, `w_i` of length 0–2),
/// projects `log(W2 W1^-1)` to level `p`, and keeps the pair whose
/// projection has the largest `gamma_hat`.
#[allow(clippy::too_many_arguments)]
pub fn nice_pair_search<S: Real>(
    group: &Group<S>,
    series: &CentralSeries,
    generators: &[GroupElement<S>],
    p: usize,
    tau: f64,
    q_max: u64,
    budget: usize,
    zero_tol: f64,
) -> Result<NiceSearch> {
    if p >= series.step.max(1) {
        return Err(Error::LevelOutOfRange { level: p, step: series.step });
    }
    let m = generators.len();
    if m == 0 {
        return Err(Error::InvalidParameter("no generators".into()));
    }
    let base = short_words(m, 1, 2);
    let step_words = short_words(m, 0, 2);
    let total = (base.len() * base.len()).saturating_mul(step_words.len().saturating_pow(p as u32));
    let limit = total.min(budget);
    let seeds = |mut t: usize| -> Vec<Word> {
        let mut out = vec![base[t % base.len()].clone()];
        t /= base.len();
        out.push(base[t % base.len()].clone());
        t /= base.len();
        for _ in 0..p {
            out.push(step_words[t % step_words.len()].clone());
            t /= step_words.len();
        }
        out
    };
    let results: Vec<Option<(bool, Option<NiceCandidate>)>> = (0..limit)
        .into_par_iter()
        .map(|t| -> Result<Option<(bool, Option<NiceCandidate>)>> {
            let w = seeds(t);
            if p == 0 && w[0].len() != w[1].len() {
                return Ok(None);
            }
            let pair = build_lr(p, &w, m)?;
            let h = group.difference(&pair.w1, &pair.w2, generators)?;
            let v: Vec<f64> = series.project(&h, p)?.iter().map(Real::to_f64).collect();
            if v.iter().all(|x| x.abs() <= zero_tol) {
                return Ok(Some((true, None)));
            }
            let report = diophantine_estimate(&v, tau, q_max)?;
            Ok(Some((false, Some(NiceCandidate { index: t, pair, report }))))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<NiceCandidate> = None;
    let (mut evaluated, mut zero) = (0, 0);
    for r in results.into_iter().flatten() {
        evaluated += 1;
        if r.0 {
            zero += 1;
        }
        if let Some(c) = r.1 {
            if best.as_ref().is_none_or(|b| c.report.gamma_hat > b.report.gamma_hat) {
                best = Some(c);
            }
        }
    }
    Ok(NiceSearch { best, evaluated, zero_projections: zero })
}

/// Generators `exp(X_i)` for the first `m` level-0 basis vectors, used when
/// no explicit generators are given.
pub fn basis_generators(alg: &NilpotentAlgebra, m: usize) -> Vec<GroupElement> {
    alg.generators()
        .iter()
        .take(m)
        .map(|&i| GroupElement::exp(LieVector::basis(alg.dim(), i)))
        .collect()
}

/// Exponentials of the given rational vectors, checked against the dimension.
pub fn generators_from(alg: &NilpotentAlgebra, logs: &[Vec<Rational>]) -> Result<Vec<GroupElement>> {
    logs.iter()
        .map(|l| {
            if l.len() != alg.dim() {
                return Err(Error::DimensionMismatch { expected: alg.dim(), got: l.len() });
            }
            Ok(GroupElement::exp(LieVector::from_coords(l.clone())))
        })
        .collect()
}
