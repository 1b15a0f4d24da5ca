//! Symbolic pencils `H_{m,p}(k, α)` and greatness certificates.
//!
//! Generic vectors are `V_i = Σ_j α_{ij} X_j` over the level-0 basis vectors;
//! the pencil is the level-`p` part of `[...[k_0·V, k_1·V], ..., k_p·V]` with
//! `k_q·V = Σ_i k_{qi} V_i`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie::{LieVector, NilpotentAlgebra};
use crate::linalg::{left_kernel, rank};
use crate::poly::{Monomial, MultiPoly};
use crate::scalar::{fmt_rational, int, JsonRational, Rational, Scalar};

/// Variable numbering: `α_{ij}` is `i·n0 + j`, `k_{qi}` is `m·n0 + q·m + i`
/// (all 0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PencilVars {
    pub m: usize,
    pub n0: usize,
}

impl PencilVars {
    pub fn alpha(&self, i: usize, j: usize) -> usize {
        i * self.n0 + j
    }

    pub fn k(&self, q: usize, i: usize) -> usize {
        self.m * self.n0 + q * self.m + i
    }

    pub fn is_alpha(&self, v: usize) -> bool {
        v < self.m * self.n0
    }

    /// Printed label: `a12` for `α_{12}`, `k01` for `k_{01}`.
    pub fn name(&self, v: usize) -> String {
        let join = |a: usize, b: usize| {
            if a < 10 && b < 10 {
                format!("{a}{b}")
            } else {
                format!("{a}_{b}")
            }
        };
        if self.is_alpha(v) {
            format!("a{}", join(v / self.n0 + 1, v % self.n0 + 1))
        } else {
            let r = v - self.m * self.n0;
            format!("k{}", join(r / self.m, r % self.m + 1))
        }
    }

    pub fn fmt(&self, p: &MultiPoly) -> String {
        p.fmt_with(|v| self.name(v))
    }
}

/// `V_1, ..., V_m` with symbolic level-0 coordinates.
pub fn generic_vectors(alg: &NilpotentAlgebra, m: usize) -> Vec<LieVector<MultiPoly>> {
    let gens = alg.generators();
    let vars = PencilVars { m, n0: gens.len() };
    (0..m)
        .map(|i| {
            let mut v = LieVector::<MultiPoly>::zero(alg.dim());
            for (j, &g) in gens.iter().enumerate() {
                v.coords[g] = MultiPoly::var(vars.alpha(i, j));
            }
            v
        })
        .collect()
}

/// Left-nested bracket of level-0 vectors, keeping only the part each stage
/// can contribute to the final level.
fn nested_level<S: Scalar>(alg: &NilpotentAlgebra, vectors: &[LieVector<S>]) -> LieVector<S> {
    let table = alg.sc.table_as::<S>();
    let mut acc = alg.series.truncate(&vectors[0], 0);
    for (q, v) in vectors.iter().enumerate().skip(1) {
        acc = alg.series.truncate(&table.bracket(&acc, v), q);
        if acc.is_zero() {
            break;
        }
    }
    acc
}

fn check_level(alg: &NilpotentAlgebra, p: usize) -> Result<()> {
    if p >= alg.step() {
        return Err(Error::LevelOutOfRange { level: p, step: alg.step() });
    }
    Ok(())
}

/// Level-`p` coordinates of `M_{i_0 ... i_p} = [...[V_{i_0}, V_{i_1}], ..., V_{i_p}]`
/// as polynomials in `α`. Indices are 1-based, as in `M_{121}`.
pub fn generic_nested_bracket(alg: &NilpotentAlgebra, indices: &[usize]) -> Result<Vec<MultiPoly>> {
    if indices.is_empty() {
        return Err(Error::InvalidParameter("empty index sequence".into()));
    }
    let p = indices.len() - 1;
    check_level(alg, p)?;
    let m = *indices.iter().max().expect("nonempty");
    if let Some(&bad) = indices.iter().find(|&&i| i == 0) {
        return Err(Error::BadIndex { index: bad, dim: m });
    }
    let v = generic_vectors(alg, m);
    let seq: Vec<_> = indices.iter().map(|&i| v[i - 1].clone()).collect();
    alg.series.project(&nested_level(alg, &seq), p)
}

/// The polynomial map `H_{m,p}` in both variable blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Pencil {
    pub m: usize,
    pub p: usize,
    pub vars: PencilVars,
    pub coords: Vec<MultiPoly>,
}

fn k_combination(v: &[LieVector<MultiPoly>], coeff: impl Fn(usize) -> MultiPoly) -> LieVector<MultiPoly> {
    let mut out = LieVector::<MultiPoly>::zero(v[0].dim());
    for (i, vi) in v.iter().enumerate() {
        let c = coeff(i);
        if Scalar::is_zero(&c) {
            continue;
        }
        for (o, x) in out.coords.iter_mut().zip(&vi.coords) {
            if !Scalar::is_zero(x) {
                o.add_assign_ref(&x.mul_ref(&c));
            }
        }
    }
    out
}

pub fn build_pencil(alg: &NilpotentAlgebra, m: usize, p: usize) -> Result<Pencil> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    if p == 0 {
        return Err(Error::InvalidParameter("pencil level must be at least 1".into()));
    }
    check_level(alg, p)?;
    let vars = PencilVars { m, n0: alg.generators().len() };
    let v = generic_vectors(alg, m);
    let seq: Vec<_> = (0..=p)
        .map(|q| k_combination(&v, |i| MultiPoly::var(vars.k(q, i))))
        .collect();
    let coords = alg.series.project(&nested_level(alg, &seq), p)?;
    Ok(Pencil { m, p, vars, coords })
}

fn check_shape(k: &[Vec<i64>], rows: usize, m: usize) -> Result<()> {
    if k.len() != rows {
        return Err(Error::DimensionMismatch { expected: rows, got: k.len() });
    }
    if let Some(r) = k.iter().find(|r| r.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, got: r.len() });
    }
    Ok(())
}

impl Pencil {
    /// Substitutes the integer matrix `k[q][i] = k_{qi}`, leaving polynomials in `α`.
    pub fn evaluate_at_k(&self, k: &[Vec<i64>]) -> Result<Vec<MultiPoly>> {
        check_shape(k, self.p + 1, self.m)?;
        let vars = self.vars;
        let value = |v: usize| {
            (!vars.is_alpha(v)).then(|| {
                let r = v - vars.m * vars.n0;
                int(k[r / vars.m][r % vars.m])
            })
        };
        Ok(self.coords.iter().map(|c| c.substitute(value)).collect())
    }

    pub fn is_identically_zero(&self) -> bool {
        self.coords.iter().all(Scalar::is_zero)
    }

    /// Coefficient of each `k`-monomial, as a vector of `α`-polynomials.
    pub fn k_slices(&self) -> BTreeMap<Monomial, Vec<MultiPoly>> {
        let mut out: BTreeMap<Monomial, Vec<MultiPoly>> = BTreeMap::new();
        let n = self.coords.len();
        for (idx, c) in self.coords.iter().enumerate() {
            for (km, poly) in c.collect_by(|v| !self.vars.is_alpha(v)) {
                out.entry(km).or_insert_with(|| vec![MultiPoly::default(); n])[idx] = poly;
            }
        }
        out
    }
}

/// `H_{m,p}(k̄, α)` computed directly from the numeric combinations `k̄_q·V`,
/// where `p + 1 = k.len()`.
pub fn pencil_at_k(alg: &NilpotentAlgebra, k: &[Vec<i64>]) -> Result<Vec<MultiPoly>> {
    if k.len() < 2 {
        return Err(Error::InvalidParameter("need at least two rows of k".into()));
    }
    let m = k[0].len();
    check_shape(k, k.len(), m)?;
    let p = k.len() - 1;
    check_level(alg, p)?;
    let v = generic_vectors(alg, m);
    let seq: Vec<_> = k
        .iter()
        .map(|row| k_combination(&v, |i| MultiPoly::constant(int(row[i]))))
        .collect();
    alg.series.project(&nested_level(alg, &seq), p)
}

/// Outcome of an exact rank test on polynomial coefficient vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Independence {
    pub independent: bool,
    pub rank: usize,
    /// Primitive integer relation `Σ λ_i P_i = 0` when dependent.
    pub kernel: Option<Vec<Rational>>,
}

fn primitive(v: Vec<Rational>) -> Vec<Rational> {
    use num_integer::Integer;
    use num_traits::{One, Signed};
    let lcm = v.iter().fold(num_bigint::BigInt::one(), |a, r| a.lcm(r.denom()));
    let ints: Vec<_> = v.iter().map(|r| (r * Rational::from_integer(lcm.clone())).to_integer()).collect();
    let mut g = ints.iter().fold(num_bigint::BigInt::from(0), |a, b| a.gcd(b));
    if let Some(first) = ints.iter().find(|x| !num_traits::Zero::is_zero(*x)) {
        if first.is_negative() {
            g = -g;
        }
    }
    if num_traits::Zero::is_zero(&g) {
        return v;
    }
    ints.into_iter().map(|x| Rational::from_integer(x / &g)).collect()
}

/// Exact linear independence over ℚ of `polys`, via the coefficient matrix
/// with one row per polynomial and one column per monomial.
pub fn linearly_independent(polys: &[MultiPoly]) -> Result<Independence> {
    if polys.is_empty() {
        return Err(Error::InvalidParameter("empty polynomial list".into()));
    }
    let mut columns: BTreeMap<&Monomial, usize> = BTreeMap::new();
    for p in polys {
        for (m, _) in p.terms() {
            let next = columns.len();
            columns.entry(m).or_insert(next);
        }
    }
    let rows: Vec<Vec<Rational>> = polys
        .iter()
        .map(|p| {
            let mut row = vec![<Rational as Scalar>::zero(); columns.len()];
            for (m, c) in p.terms() {
                row[columns[m]] = c.clone();
            }
            row
        })
        .collect();
    let r = if columns.is_empty() { 0 } else { rank(&rows) };
    if r == polys.len() {
        return Ok(Independence { independent: true, rank: r, kernel: None });
    }
    let kernel = if columns.is_empty() {
        let mut k = vec![<Rational as Scalar>::zero(); polys.len()];
        k[0] = int(1);
        k
    } else {
        primitive(left_kernel(&rows).swap_remove(0))
    };
    Ok(Independence { independent: false, rank: r, kernel: Some(kernel) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessSource {
    Structured,
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LevelOutcome {
    /// `H_{m,p}(k, ·)` has linearly independent coordinates.
    Witness { k: Vec<Vec<i64>>, source: WitnessSource, candidates_tried: usize },
    /// A single relation annihilates the pencil for every `k`.
    Degenerate { kernel: Vec<Rational>, identically_zero: bool },
    Undetermined { candidates_tried: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelCertificate {
    pub p: usize,
    pub n_p: usize,
    pub outcome: LevelOutcome,
    /// Witness: the evaluated `α`-polynomials. Degenerate: the full pencil.
    pub polys: Vec<MultiPoly>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Great,
    Bad { level: usize },
    Undetermined { level: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreatnessCertificate {
    pub m: usize,
    pub step: usize,
    pub budget: usize,
    pub seed: u64,
    pub vars: PencilVars,
    pub levels: Vec<LevelCertificate>,
}

/// Structured candidates: `((1,0,..),(0,1,..)^p)` and the unit rows `e_0, ..., e_p`.
fn structured_candidates(m: usize, p: usize) -> Vec<Vec<Vec<i64>>> {
    let unit = |i: usize| {
        let mut r = vec![0i64; m];
        r[i] = 1;
        r
    };
    let mut out = Vec::new();
    if m >= 2 {
        out.push(std::iter::once(unit(0)).chain(std::iter::repeat_n(unit(1), p)).collect());
    }
    if m > p {
        let c: Vec<_> = (0..=p).map(unit).collect();
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

fn certify_level(alg: &NilpotentAlgebra, m: usize, p: usize, budget: usize, seed: u64) -> Result<LevelCertificate> {
    let n_p = alg.series.level_dim(p);
    let mut tried = 0;
    let try_k = |k: &Vec<Vec<i64>>| -> Result<Option<Vec<MultiPoly>>> {
        let polys = pencil_at_k(alg, k)?;
        Ok(linearly_independent(&polys)?.independent.then_some(polys))
    };
    for k in structured_candidates(m, p) {
        tried += 1;
        if let Some(polys) = try_k(&k)? {
            let outcome = LevelOutcome::Witness { k, source: WitnessSource::Structured, candidates_tried: tried };
            return Ok(LevelCertificate { p, n_p, outcome, polys });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(p as u64);
    for _ in 0..budget {
        let k: Vec<Vec<i64>> = (0..=p).map(|_| (0..m).map(|_| rng.gen_range(-3..=3)).collect()).collect();
        tried += 1;
        if k.iter().any(|row| row.iter().all(|&x| x == 0)) {
            continue;
        }
        if let Some(polys) = try_k(&k)? {
            let outcome = LevelOutcome::Witness { k, source: WitnessSource::Random, candidates_tried: tried };
            return Ok(LevelCertificate { p, n_p, outcome, polys });
        }
    }
    let pencil = build_pencil(alg, m, p)?;
    let ind = linearly_independent(&pencil.coords)?;
    let outcome = match ind.kernel {
        Some(kernel) => LevelOutcome::Degenerate { kernel, identically_zero: pencil.is_identically_zero() },
        None => LevelOutcome::Undetermined { candidates_tried: tried },
    };
    Ok(LevelCertificate { p, n_p, outcome, polys: pencil.coords })
}

/// Searches, for every level `1 <= p < step`, for an integer `k̄` making
/// `H_{m,p}(k̄, ·)` non-degenerate; falls back to a symbolic degeneracy proof.
pub fn certify_greatness(alg: &NilpotentAlgebra, m: usize, budget: usize, seed: u64) -> Result<GreatnessCertificate> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let levels = (1..alg.step())
        .into_par_iter()
        .map(|p| certify_level(alg, m, p, budget, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(GreatnessCertificate {
        m,
        step: alg.step(),
        budget,
        seed,
        vars: PencilVars { m, n0: alg.generators().len() },
        levels,
    })
}

impl GreatnessCertificate {
    pub fn verdict(&self) -> Verdict {
        for l in &self.levels {
            match l.outcome {
                LevelOutcome::Witness { .. } => {}
                LevelOutcome::Degenerate { .. } => return Verdict::Bad { level: l.p },
                LevelOutcome::Undetermined { .. } => return Verdict::Undetermined { level: l.p },
            }
        }
        Verdict::Great
    }

    pub fn is_great(&self) -> bool {
        self.verdict() == Verdict::Great
    }

    /// Recomputes every stored witness and degeneracy relation from scratch.
    pub fn verify(&self, alg: &NilpotentAlgebra) -> Result<bool> {
        for l in &self.levels {
            match &l.outcome {
                LevelOutcome::Witness { k, .. } => {
                    let polys = pencil_at_k(alg, k)?;
                    if polys != l.polys || !linearly_independent(&polys)?.independent {
                        return Ok(false);
                    }
                }
                LevelOutcome::Degenerate { kernel, .. } => {
                    let pencil = build_pencil(alg, self.m, l.p)?;
                    let mut sum = MultiPoly::default();
                    for (c, poly) in kernel.iter().zip(&pencil.coords) {
                        sum.add_assign_ref(&poly.mul_ref(&MultiPoly::constant(c.clone())));
                    }
                    if !Scalar::is_zero(&sum) || kernel.iter().all(Scalar::is_zero) {
                        return Ok(false);
                    }
                }
                LevelOutcome::Undetermined { .. } => {}
            }
        }
        Ok(true)
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        let levels: Vec<_> = self
            .levels
            .iter()
            .map(|l| {
                let polys: Vec<String> = l.polys.iter().map(|p| self.vars.fmt(p)).collect();
                let outcome = match &l.outcome {
                    LevelOutcome::Witness { k, source, candidates_tried } => json!({
                        "status": "witness",
                        "k": k,
                        "source": source,
                        "candidates_tried": candidates_tried,
                    }),
                    LevelOutcome::Degenerate { kernel, identically_zero } => json!({
                        "status": "degenerate",
                        "kernel": kernel.iter().map(|c| JsonRational(c.clone())).collect::<Vec<_>>(),
                        "kernel_text": kernel.iter().map(fmt_rational).collect::<Vec<_>>(),
                        "identically_zero": identically_zero,
                    }),
                    LevelOutcome::Undetermined { candidates_tried } => json!({
                        "status": "undetermined",
                        "candidates_tried": candidates_tried,
                    }),
                };
                json!({ "p": l.p, "n_p": l.n_p, "outcome": outcome, "polynomials": polys })
            })
            .collect();
        let verdict = match self.verdict() {
            Verdict::Great => json!({ "great": true }),
            Verdict::Bad { level } => json!({ "great": false, "degenerate_level": level }),
            Verdict::Undetermined { level } => json!({ "great": null, "undetermined_level": level }),
        };
        json!({
            "m": self.m,
            "step": self.step,
            "budget": self.budget,
            "seed": self.seed,
            "verdict": verdict,
            "levels": levels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn variable_names() {
        let v = PencilVars { m: 2, n0: 2 };
        assert_eq!(v.name(v.alpha(0, 1)), "a12");
        assert_eq!(v.name(v.k(0, 0)), "k01");
        assert_eq!(v.name(v.k(2, 1)), "k22");
    }

    #[test]
    fn heisenberg_pencil_is_determinant_times_minor() {
        let h = catalog::heisenberg().unwrap();
        let pen = build_pencil(&h, 2, 1).unwrap();
        assert_eq!(pen.coords.len(), 1);
        let v = pen.vars;
        let a = |i, j| MultiPoly::var(v.alpha(i, j));
        let k = |q, i| MultiPoly::var(v.k(q, i));
        let mut det = a(0, 0).mul_ref(&a(1, 1));
        det.sub_assign_ref(&a(0, 1).mul_ref(&a(1, 0)));
        let mut minor = k(0, 0).mul_ref(&k(1, 1));
        minor.sub_assign_ref(&k(0, 1).mul_ref(&k(1, 0)));
        assert_eq!(pen.coords[0], det.mul_ref(&minor));
    }

    #[test]
    fn single_generator_pencils_vanish() {
        let a = catalog::example_3_2().unwrap();
        for p in 1..3 {
            assert!(build_pencil(&a, 1, p).unwrap().is_identically_zero());
        }
        assert!(generic_nested_bracket(&a, &[1, 1, 1]).unwrap().iter().all(Scalar::is_zero));
    }

    #[test]
    fn independence_examples() {
        let x = MultiPoly::var(0);
        let y = MultiPoly::var(1);
        assert!(linearly_independent(&[x.clone(), y]).unwrap().independent);
        let two_x = x.mul_ref(&MultiPoly::constant(int(2)));
        let dep = linearly_independent(&[x, two_x]).unwrap();
        assert!(!dep.independent);
        assert_eq!(dep.kernel.unwrap(), vec![int(2), int(-1)]);
        assert!(linearly_independent(&[]).is_err());
        assert!(!linearly_independent(&[MultiPoly::default()]).unwrap().independent);
    }

    #[test]
    fn shape_and_level_errors() {
        let a = catalog::example_3_2().unwrap();
        let pen = build_pencil(&a, 2, 2).unwrap();
        assert!(pen.evaluate_at_k(&[vec![1, 0], vec![0, 1]]).is_err());
        assert!(pen.evaluate_at_k(&[vec![1, 0], vec![0, 1], vec![1]]).is_err());
        assert!(build_pencil(&a, 2, 3).is_err());
        assert!(build_pencil(&a, 2, 0).is_err());
        assert!(generic_nested_bracket(&a, &[1, 2, 1, 2]).is_err());
    }

    #[test]
    fn zero_k_gives_zero() {
        let a = catalog::example_3_2().unwrap();
        let pen = build_pencil(&a, 2, 2).unwrap();
        let z = pen.evaluate_at_k(&vec![vec![0, 0]; 3]).unwrap();
        assert!(z.iter().all(Scalar::is_zero));
    }

    #[test]
    fn abelian_certificate_has_no_levels() {
        let c = certify_greatness(&catalog::abelian(3).unwrap(), 2, 10, 0).unwrap();
        assert!(c.levels.is_empty() && c.is_great());
    }
}
