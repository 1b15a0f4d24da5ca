//! Group law of a simply connected nilpotent group in exponential coordinates.
//!
//! `log(exp x · exp y)` is evaluated with Dynkin's series, truncated at the
//! nesting depth where brackets vanish. The series is expanded once per step
//! into right-nested words in two letters with rational coefficients, and the
//! words are evaluated through a suffix-sharing plan.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::lie::{BracketTable, LieVector, NilpotentAlgebra};
use crate::scalar::{Rational, Scalar};

const X: u8 = 0;
const Y: u8 = 1;

/// Coefficients of the Dynkin series in right-nested words
/// `[a_1,[a_2,[...,a_L]]]`, letters `0 = x`, `1 = y`, length at most `depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct DynkinTable {
    pub depth: usize,
    pub terms: Vec<(Vec<u8>, Rational)>,
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * BigInt::from(k))
}

impl DynkinTable {
    pub fn new(depth: usize) -> Self {
        let mut acc: BTreeMap<Vec<u8>, Rational> = BTreeMap::new();
        let mut blocks = Vec::new();
        collect_blocks(depth, 0, &mut blocks, &mut acc);
        let terms = acc
            .into_iter()
            .filter(|(_, c)| !Scalar::is_zero(c))
            .collect();
        DynkinTable { depth, terms }
    }
}

/// Enumerates `(r_1,s_1),...,(r_n,s_n)` with `r_i + s_i > 0` and total length
/// at most `depth`, adding each Dynkin term to `acc`.
fn collect_blocks(
    depth: usize,
    used: usize,
    blocks: &mut Vec<(usize, usize)>,
    acc: &mut BTreeMap<Vec<u8>, Rational>,
) {
    if !blocks.is_empty() {
        add_dynkin_term(blocks, used, acc);
    }
    for len in 1..=(depth - used) {
        for r in 0..=len {
            blocks.push((r, len - r));
            collect_blocks(depth, used + len, blocks, acc);
            blocks.pop();
        }
    }
}

fn add_dynkin_term(blocks: &[(usize, usize)], total: usize, acc: &mut BTreeMap<Vec<u8>, Rational>) {
    let n = blocks.len();
    let mut den = BigInt::from(n) * BigInt::from(total);
    let mut word = Vec::with_capacity(total);
    for &(r, s) in blocks {
        den *= factorial(r) * factorial(s);
        word.extend(std::iter::repeat_n(X, r));
        word.extend(std::iter::repeat_n(Y, s));
    }
    let sign = if n % 2 == 1 { 1 } else { -1 };
    let mut coeff = Rational::new(BigInt::from(sign), den);
    // The innermost bracket [a, b] is antisymmetric: [a,a] = 0 and [y,x] = -[x,y].
    if word.len() >= 2 {
        let l = word.len();
        if word[l - 2] == word[l - 1] {
            return;
        }
        if word[l - 2] == Y {
            word.swap(l - 2, l - 1);
            coeff = -coeff;
        }
    }
    *acc.entry(word).or_insert_with(<Rational as Scalar>::zero) += coeff;
}

#[derive(Clone, Debug)]
struct PlanNode {
    letter: u8,
    /// Right operand of the bracket; `None` for a bare letter.
    inner: Option<usize>,
}

/// Group structure over a coefficient ring `S`.
#[derive(Clone, Debug)]
pub struct Group<S: Scalar> {
    pub table: BracketTable<S>,
    pub step: usize,
    /// Nodes in evaluation order (inner before outer).
    nodes: Vec<PlanNode>,
    terms: Vec<(usize, S)>,
}

impl<S: Scalar> Group<S> {
    pub fn new(alg: &NilpotentAlgebra) -> Self {
        Self::from_table(alg.sc.table_as::<S>(), alg.step())
    }

    pub fn from_table(table: BracketTable<S>, step: usize) -> Self {
        let dynkin = DynkinTable::new(step.max(1));
        let mut index: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        let mut nodes = Vec::new();
        let mut words: Vec<&Vec<u8>> = dynkin.terms.iter().map(|(w, _)| w).collect();
        words.sort_by_key(|w| w.len());
        for w in &words {
            for start in (0..w.len()).rev() {
                let suffix = w[start..].to_vec();
                if index.contains_key(&suffix) {
                    continue;
                }
                let inner = (suffix.len() > 1).then(|| index[&suffix[1..]]);
                index.insert(suffix.clone(), nodes.len());
                nodes.push(PlanNode { letter: suffix[0], inner });
            }
        }
        let terms = dynkin
            .terms
            .iter()
            .map(|(w, c)| (index[w], S::from_rational(c)))
            .collect();
        Group { table, step, nodes, terms }
    }

    pub fn dim(&self) -> usize {
        self.table.dim
    }

    pub fn bracket(&self, x: &LieVector<S>, y: &LieVector<S>) -> LieVector<S> {
        self.table.bracket(x, y)
    }

    /// `log(exp x · exp y)`.
    pub fn bch(&self, x: &LieVector<S>, y: &LieVector<S>) -> LieVector<S> {
        if self.step <= 1 {
            return x.add(y);
        }
        let n = self.dim();
        let mut buf: Vec<S> = vec![S::zero(); self.nodes.len() * n];
        let mut live = vec![false; self.nodes.len()];
        for (idx, node) in self.nodes.iter().enumerate() {
            let letter = if node.letter == X { x } else { y };
            match node.inner {
                None => {
                    buf[idx * n..(idx + 1) * n].clone_from_slice(&letter.coords);
                    live[idx] = !letter.is_zero();
                }
                Some(i) if live[i] => {
                    let (before, after) = buf.split_at_mut(idx * n);
                    let out = &mut after[..n];
                    self.table.bracket_into(&letter.coords, &before[i * n..(i + 1) * n], out);
                    live[idx] = out.iter().any(|c| !c.is_zero());
                }
                Some(_) => {}
            }
        }
        let mut out = LieVector::<S>::zero(n);
        for (node, c) in &self.terms {
            if !live[*node] {
                continue;
            }
            for (o, a) in out.coords.iter_mut().zip(&buf[node * n..(node + 1) * n]) {
                if !a.is_zero() {
                    o.add_assign_ref(&a.mul_ref(c));
                }
            }
        }
        out
    }

    /// `Ad(exp(t X_i)) v = exp(ad(t X_i)) v`.
    pub fn adjoint_exp(&self, i: usize, t: &S, v: &LieVector<S>) -> LieVector<S> {
        let n = self.dim();
        let mut e = LieVector::<S>::zero(n);
        e.coords[i] = t.clone();
        let mut out = v.clone();
        let mut term = v.clone();
        for j in 1..self.step.max(1) {
            term = self.table.bracket(&e, &term);
            if term.is_zero() {
                break;
            }
            let inv = S::from_rational(&Rational::new(1.into(), (j as i64).into()));
            term = term.scale(&inv);
            out.add_assign(&term);
        }
        out
    }

    pub fn identity(&self) -> GroupElement<S> {
        GroupElement { log: LieVector::zero(self.dim()) }
    }

    pub fn mul(&self, a: &GroupElement<S>, b: &GroupElement<S>) -> GroupElement<S> {
        GroupElement { log: self.bch(&a.log, &b.log) }
    }

    pub fn inverse(&self, a: &GroupElement<S>) -> GroupElement<S> {
        GroupElement { log: a.log.neg() }
    }

    /// Group commutator `a b a^-1 b^-1`.
    pub fn commutator(&self, a: &GroupElement<S>, b: &GroupElement<S>) -> GroupElement<S> {
        let ab = self.bch(&a.log, &b.log);
        let ab_ai = self.bch(&ab, &a.log.neg());
        GroupElement { log: self.bch(&ab_ai, &b.log.neg()) }
    }

    /// Left-to-right product of the word's letters; the empty word is the identity.
    pub fn word_eval(&self, word: &Word, generators: &[GroupElement<S>]) -> Result<GroupElement<S>> {
        word.check(generators.len())?;
        let mut log = LieVector::zero(self.dim());
        for &l in &word.letters {
            log = self.bch(&log, &generators[l].log);
        }
        Ok(GroupElement { log })
    }

    /// `log(W2 · W1^-1)` for words of equal length.
    pub fn difference(&self, w1: &Word, w2: &Word, generators: &[GroupElement<S>]) -> Result<LieVector<S>> {
        if w1.len() != w2.len() {
            return Err(Error::LengthMismatch(w1.len(), w2.len()));
        }
        let a = self.word_eval(w1, generators)?;
        let b = self.word_eval(w2, generators)?;
        Ok(self.bch(&b.log, &a.log.neg()))
    }

    /// `log(exp(c_1 X_1) exp(c_2 X_2) ... exp(c_n X_n))`.
    pub fn from_second_kind(&self, coords: &[S]) -> LieVector<S> {
        let n = self.dim();
        let mut log = LieVector::zero(n);
        for (i, c) in coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut e = LieVector::zero(n);
            e.coords[i] = c.clone();
            log = self.bch(&log, &e);
        }
        log
    }

    /// Inverse of [`from_second_kind`](Self::from_second_kind). Valid when every
    /// tail `span(X_i, ..., X_n)` of the basis is an ideal, which holds for
    /// level-sorted adapted bases.
    pub fn to_second_kind(&self, log: &LieVector<S>) -> Vec<S> {
        let n = self.dim();
        let mut z = log.clone();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let c = z.coords[i].clone();
            if !c.is_zero() {
                let mut e = LieVector::zero(n);
                e.coords[i] = c.neg_ref();
                z = self.bch(&e, &z);
            }
            out.push(c);
        }
        out
    }
}

/// Group element `exp(log)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement<S = Rational> {
    pub log: LieVector<S>,
}

impl<S: Scalar> GroupElement<S> {
    pub fn exp(log: LieVector<S>) -> Self {
        GroupElement { log }
    }
}

/// Finite sequence of generator indices (0-based internally, printed 1-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word {
    pub letters: Vec<usize>,
}

impl Word {
    pub fn new(letters: Vec<usize>) -> Self {
        Word { letters }
    }

    pub fn empty() -> Self {
        Word::default()
    }

    /// From 1-based generator labels, as they are written in the literature.
    pub fn from_labels(labels: &[usize]) -> Self {
        Word { letters: labels.iter().map(|&l| l - 1).collect() }
    }

    pub fn labels(&self) -> Vec<usize> {
        self.letters.iter().map(|l| l + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Word { letters }
    }

    /// Number of occurrences of each generator.
    pub fn counts(&self, m: usize) -> Vec<i64> {
        let mut c = vec![0; m];
        for &l in &self.letters {
            c[l] += 1;
        }
        c
    }

    /// `p(W)`: product of the letter probabilities.
    pub fn probability(&self, probs: &[f64]) -> f64 {
        self.letters.iter().map(|&l| probs[l]).product()
    }

    pub fn check(&self, m: usize) -> Result<()> {
        match self.letters.iter().find(|&&l| l >= m) {
            Some(&l) => Err(Error::BadLetter { letter: l + 1, generators: m }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.labels().iter().map(usize::to_string).collect();
        write!(f, "({})", s.join(","))
    }
}
