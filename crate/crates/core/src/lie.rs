//! Nilpotent Lie algebras given by rational structure constants.
//!
//! A basis is *adapted* when every term `g^(j)` of the lower central series is
//! spanned by the basis vectors whose level is at least `j`. All downstream
//! modules assume an adapted basis; [`NilpotentAlgebra::new`] checks it.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Subspace;
use crate::scalar::{fmt_rational, JsonInt, Rational, Scalar};

/// Coordinate vector in the fixed basis. Exact by default.
#[derive(Clone, Debug, PartialEq)]
pub struct LieVector<S = Rational> {
    pub coords: Vec<S>,
}

impl<S: Scalar> LieVector<S> {
    pub fn zero(dim: usize) -> Self {
        LieVector { coords: vec![S::zero(); dim] }
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zero(dim);
        v.coords[i] = S::from_i64(1);
        v
    }

    pub fn from_coords(coords: Vec<S>) -> Self {
        LieVector { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Scalar::is_zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.coords.iter_mut().zip(&other.coords) {
            if !b.is_zero() {
                a.add_assign_ref(b);
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.coords.iter_mut().zip(&other.coords) {
            if !b.is_zero() {
                a.sub_assign_ref(b);
            }
        }
        out
    }

    pub fn scale(&self, c: &S) -> Self {
        LieVector {
            coords: self
                .coords
                .iter()
                .map(|x| if x.is_zero() { S::zero() } else { x.mul_ref(c) })
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        LieVector { coords: self.coords.iter().map(Scalar::neg_ref).collect() }
    }

    /// Coefficient-wise conversion, e.g. exact to floating point.
    pub fn map<T, F: Fn(&S) -> T>(&self, f: F) -> LieVector<T> {
        LieVector { coords: self.coords.iter().map(f).collect() }
    }
}

impl LieVector<Rational> {
    pub fn to_f64(&self) -> LieVector<f64> {
        self.map(<f64 as Scalar>::from_rational)
    }
}

impl fmt::Display for LieVector<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(fmt_rational).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// One nonzero bracket `[X_i, X_j] = Σ c_k X_k` with `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketEntry<S> {
    pub i: usize,
    pub j: usize,
    pub out: Vec<(usize, S)>,
}

/// Sparse bracket table with coefficients already converted to `S`.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketTable<S> {
    pub dim: usize,
    pub entries: Vec<BracketEntry<S>>,
}

impl<S: Scalar> BracketTable<S> {
    pub fn bracket(&self, x: &LieVector<S>, y: &LieVector<S>) -> LieVector<S> {
        let mut out = LieVector::zero(self.dim);
        self.bracket_into(&x.coords, &y.coords, &mut out.coords);
        out
    }

    /// Adds `[x, y]` into `out`.
    pub fn bracket_into(&self, x: &[S], y: &[S], out: &mut [S]) {
        for e in &self.entries {
            let (xi, xj, yi, yj) = (&x[e.i], &x[e.j], &y[e.i], &y[e.j]);
            let mut t = if xi.is_zero() || yj.is_zero() { S::zero() } else { xi.mul_ref(yj) };
            if !xj.is_zero() && !yi.is_zero() {
                t.sub_assign_ref(&xj.mul_ref(yi));
            }
            if t.is_zero() {
                continue;
            }
            for (k, c) in &e.out {
                out[*k].add_assign_ref(&t.mul_ref(c));
            }
        }
    }
}

/// The defining data of an algebra: dimension, basis names, sparse brackets,
/// and optionally the declared level of each basis vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    pub dim: usize,
    pub names: Vec<String>,
    declared_levels: Option<Vec<usize>>,
    table: BracketTable<Rational>,
}

impl StructureConstants {
    /// Builds constants from `[X_i, X_j] = Σ c X_k` relations (0-based indices).
    /// Pairs with `i > j` are normalized by antisymmetry; repeated pairs add up.
    pub fn new(
        dim: usize,
        names: Option<Vec<String>>,
        relations: &[((usize, usize), Vec<(usize, Rational)>)],
        levels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let names = match names {
            Some(n) if n.len() != dim => {
                return Err(Error::DimensionMismatch { expected: dim, got: n.len() })
            }
            Some(n) => n,
            None => (1..=dim).map(|i| format!("X{i}")).collect(),
        };
        if let Some(l) = &levels {
            if l.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: l.len() });
            }
        }
        let mut acc: BTreeMap<(usize, usize), BTreeMap<usize, Rational>> = BTreeMap::new();
        for ((i, j), out) in relations {
            for &idx in [i, j].into_iter().chain(out.iter().map(|(k, _)| k)) {
                if idx >= dim {
                    return Err(Error::BadIndex { index: idx, dim });
                }
            }
            if i == j {
                if out.iter().any(|(_, c)| !c.is_zero()) {
                    return Err(Error::Format(format!("nonzero self-bracket on basis vector {}", i + 1)));
                }
                continue;
            }
            let (a, b, sign) = if i < j { (*i, *j, 1) } else { (*j, *i, -1) };
            let slot = acc.entry((a, b)).or_default();
            for (k, c) in out {
                let c = if sign < 0 { -c.clone() } else { c.clone() };
                *slot.entry(*k).or_insert_with(<Rational as Scalar>::zero) += c;
            }
        }
        let entries = acc
            .into_iter()
            .filter_map(|((i, j), out)| {
                let out: Vec<_> = out.into_iter().filter(|(_, c)| !c.is_zero()).collect();
                (!out.is_empty()).then_some(BracketEntry { i, j, out })
            })
            .collect();
        Ok(StructureConstants {
            dim,
            names,
            declared_levels: levels,
            table: BracketTable { dim, entries },
        })
    }

    pub fn declared_levels(&self) -> Option<&[usize]> {
        self.declared_levels.as_deref()
    }

    pub fn table(&self) -> &BracketTable<Rational> {
        &self.table
    }

    /// The bracket table with coefficients converted into another ring.
    pub fn table_as<S: Scalar>(&self) -> BracketTable<S> {
        BracketTable {
            dim: self.dim,
            entries: self
                .table
                .entries
                .iter()
                .map(|e| BracketEntry {
                    i: e.i,
                    j: e.j,
                    out: e.out.iter().map(|(k, c)| (*k, S::from_rational(c))).collect(),
                })
                .collect(),
        }
    }

    pub fn basis_vector(&self, i: usize) -> LieVector {
        LieVector::basis(self.dim, i)
    }

    pub fn bracket(&self, x: &LieVector, y: &LieVector) -> Result<LieVector> {
        for v in [x, y] {
            if v.dim() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: v.dim() });
            }
        }
        Ok(self.table.bracket(x, y))
    }

    /// `[X_i, X_j]` for basis vectors.
    pub fn basis_bracket(&self, i: usize, j: usize) -> LieVector {
        self.table.bracket(&self.basis_vector(i), &self.basis_vector(j))
    }

    pub fn nonzero_brackets(&self) -> usize {
        self.table.entries.len()
    }

    pub fn to_json(&self) -> AlgebraJson {
        let levels = self.declared_levels.as_ref().map(|lv| {
            let top = lv.iter().copied().max().unwrap_or(0);
            (0..=top)
                .map(|l| (0..self.dim).filter(|&i| lv[i] == l).map(|i| i + 1).collect())
                .collect()
        });
        AlgebraJson {
            dim: self.dim,
            names: Some(self.names.clone()),
            levels,
            brackets: self
                .table
                .entries
                .iter()
                .map(|e| BracketJson {
                    i: e.i + 1,
                    j: e.j + 1,
                    out: e
                        .out
                        .iter()
                        .map(|(k, c)| TermJson {
                            k: k + 1,
                            num: JsonInt::from_big(c.numer()),
                            den: JsonInt::from_big(c.denom()),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &AlgebraJson) -> Result<Self> {
        let dim = j.dim;
        let levels = match &j.levels {
            None => None,
            Some(groups) => {
                let mut lv = vec![usize::MAX; dim];
                for (l, group) in groups.iter().enumerate() {
                    for &idx in group {
                        if idx == 0 || idx > dim {
                            return Err(Error::BadIndex { index: idx, dim });
                        }
                        if lv[idx - 1] != usize::MAX {
                            return Err(Error::Format(format!("basis vector {idx} listed twice in levels")));
                        }
                        lv[idx - 1] = l;
                    }
                }
                if let Some(missing) = lv.iter().position(|&l| l == usize::MAX) {
                    return Err(Error::Format(format!("basis vector {} has no level", missing + 1)));
                }
                Some(lv)
            }
        };
        let mut relations = Vec::with_capacity(j.brackets.len());
        for b in &j.brackets {
            if b.i == 0 || b.j == 0 {
                return Err(Error::Format("indices are 1-based".into()));
            }
            let mut out = Vec::with_capacity(b.out.len());
            for t in &b.out {
                if t.k == 0 {
                    return Err(Error::Format("indices are 1-based".into()));
                }
                let num = t.num.to_big().map_err(Error::Format)?;
                let den = t.den.to_big().map_err(Error::Format)?;
                if num_traits::Zero::is_zero(&den) {
                    return Err(Error::Format("zero denominator".into()));
                }
                out.push((t.k - 1, Rational::new(num, den)));
            }
            relations.push(((b.i - 1, b.j - 1), out));
        }
        StructureConstants::new(dim, j.names.clone(), &relations, levels)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: AlgebraJson = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_json(&j)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializable")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<Vec<usize>>>,
    pub brackets: Vec<BracketJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BracketJson {
    pub i: usize,
    pub j: usize,
    pub out: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermJson {
    pub k: usize,
    pub(crate) num: JsonInt,
    pub(crate) den: JsonInt,
}

#[derive(Clone, Debug, PartialEq)]
pub enum JacobiReport {
    Pass,
    /// 0-based triple and the nonzero Jacobi sum for it.
    Violation { triple: (usize, usize, usize), residual: LieVector },
}

impl JacobiReport {
    pub fn passed(&self) -> bool {
        matches!(self, JacobiReport::Pass)
    }
}

/// Checks `[[X_i,X_j],X_k] + [[X_j,X_k],X_i] + [[X_k,X_i],X_j] = 0` on every
/// 3-subset of basis vectors (triples with a repeated index hold by antisymmetry).
pub fn check_jacobi(sc: &StructureConstants) -> JacobiReport {
    let n = sc.dim;
    let e: Vec<LieVector> = (0..n).map(|i| sc.basis_vector(i)).collect();
    let brackets: Vec<Vec<LieVector>> = (0..n)
        .map(|i| (0..n).map(|j| sc.table.bracket(&e[i], &e[j])).collect())
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let mut r = sc.table.bracket(&brackets[i][j], &e[k]);
                r.add_assign(&sc.table.bracket(&brackets[j][k], &e[i]));
                r.add_assign(&sc.table.bracket(&brackets[k][i], &e[j]));
                if !r.is_zero() {
                    return JacobiReport::Violation { triple: (i, j, k), residual: r };
                }
            }
        }
    }
    JacobiReport::Pass
}

/// Lower central series in an adapted basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralSeries {
    /// `terms[j]` is `g^(j)`, for `j < step`.
    pub terms: Vec<Subspace>,
    /// `n_p = dim g^(p) - dim g^(p+1)`.
    pub dims: Vec<usize>,
    pub step: usize,
    /// Level of each basis vector.
    pub basis_level: Vec<usize>,
    /// Basis indices at each level, in increasing order.
    pub level_indices: Vec<Vec<usize>>,
}

/// Computes `g^(j) = [g^(j-1), g]` as exact spans and checks the basis is
/// adapted to it, inferring levels when none were declared.
pub fn lower_central_series(sc: &StructureConstants) -> Result<CentralSeries> {
    let n = sc.dim;
    let basis: Vec<LieVector> = (0..n).map(|i| sc.basis_vector(i)).collect();
    let mut terms = vec![Subspace::span(n, &basis.iter().map(|v| v.coords.clone()).collect::<Vec<_>>())];
    loop {
        let last = terms.last().expect("nonempty");
        if last.dim() == 0 {
            terms.pop();
            break;
        }
        let mut gens = Vec::with_capacity(last.dim() * n);
        for v in last.basis() {
            let v = LieVector::from_coords(v.clone());
            for e in &basis {
                gens.push(sc.table.bracket(&v, e).coords);
            }
        }
        let next = Subspace::span(n, &gens);
        if next.dim() == last.dim() {
            return Err(Error::NotNilpotent { stalled_dim: next.dim() });
        }
        terms.push(next);
    }
    let step = terms.len();
    let dims: Vec<usize> = (0..step)
        .map(|j| terms[j].dim() - terms.get(j + 1).map_or(0, Subspace::dim))
        .collect();

    let basis_level: Vec<usize> = match sc.declared_levels() {
        Some(l) => l.to_vec(),
        None => (0..n)
            .map(|i| (0..step).rev().find(|&j| terms[j].contains(&basis[i].coords)).unwrap_or(0))
            .collect(),
    };
    for (j, term) in terms.iter().enumerate() {
        let expected: Vec<Vec<Rational>> = (0..n)
            .filter(|&i| basis_level[i] >= j)
            .map(|i| basis[i].coords.clone())
            .collect();
        let expected = Subspace::span(n, &expected);
        if expected.dim() != term.dim() || !term.contains_subspace(&expected) {
            return Err(Error::NotAdapted(format!(
                "g^({j}) has dimension {} but the basis vectors of level >= {j} span dimension {}",
                term.dim(),
                expected.dim()
            )));
        }
    }
    if let Some(&top) = basis_level.iter().max() {
        if top >= step.max(1) {
            return Err(Error::NotAdapted(format!("declared level {top} but the step is {step}")));
        }
    }
    let level_indices = (0..step.max(1))
        .map(|l| (0..n).filter(|&i| basis_level[i] == l).collect())
        .collect();
    Ok(CentralSeries { terms, dims, step, basis_level, level_indices })
}

impl CentralSeries {
    /// Coordinates of `x` in `g^(p) / g^(p+1)`. Only meaningful for `x ∈ g^(p)`;
    /// the map reads off the level-`p` basis coordinates.
    pub fn project<S: Scalar>(&self, x: &LieVector<S>, p: usize) -> Result<Vec<S>> {
        if p >= self.step.max(1) {
            return Err(Error::LevelOutOfRange { level: p, step: self.step });
        }
        Ok(self.level_indices[p].iter().map(|&i| x.coords[i].clone()).collect())
    }

    /// Zeroes all coordinates of level > p, i.e. reduces modulo `g^(p+1)`.
    pub fn truncate<S: Scalar>(&self, x: &LieVector<S>, p: usize) -> LieVector<S> {
        LieVector {
            coords: x
                .coords
                .iter()
                .zip(&self.basis_level)
                .map(|(c, &l)| if l <= p { c.clone() } else { S::zero() })
                .collect(),
        }
    }

    /// True when every coordinate below level `p` vanishes, i.e. `x ∈ g^(p)`.
    pub fn in_level<S: Scalar>(&self, x: &LieVector<S>, p: usize) -> bool {
        x.coords.iter().zip(&self.basis_level).all(|(c, &l)| l >= p || c.is_zero())
    }

    pub fn level_dim(&self, p: usize) -> usize {
        self.dims.get(p).copied().unwrap_or(0)
    }

    /// True when basis vectors appear in nondecreasing level order, which
    /// makes every tail of the basis span an ideal.
    pub fn is_level_sorted(&self) -> bool {
        self.basis_level.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Structure constants together with their verified adapted central series.
#[derive(Clone, Debug, PartialEq)]
pub struct NilpotentAlgebra {
    pub sc: StructureConstants,
    pub series: CentralSeries,
}

impl NilpotentAlgebra {
    pub fn new(sc: StructureConstants) -> Result<Self> {
        if let JacobiReport::Violation { triple: (i, j, k), .. } = check_jacobi(&sc) {
            return Err(Error::Format(format!(
                "Jacobi identity fails on basis triple ({}, {}, {})",
                i + 1,
                j + 1,
                k + 1
            )));
        }
        let series = lower_central_series(&sc)?;
        Ok(NilpotentAlgebra { sc, series })
    }

    pub fn dim(&self) -> usize {
        self.sc.dim
    }

    pub fn step(&self) -> usize {
        self.series.step
    }

    pub fn bracket(&self, x: &LieVector, y: &LieVector) -> Result<LieVector> {
        self.sc.bracket(x, y)
    }

    /// Basis indices of level 0, i.e. the coordinates of the abelianization.
    pub fn generators(&self) -> &[usize] {
        &self.series.level_indices[0]
    }

    /// `g / g^(p+1)`: drops every basis vector of level > p.
    pub fn quotient(&self, p: usize) -> Result<NilpotentAlgebra> {
        NilpotentAlgebra::new(quotient_algebra(&self.sc, &self.series, p)?)
    }

    pub fn product(&self, other: &NilpotentAlgebra) -> Result<NilpotentAlgebra> {
        let levels: Vec<usize> = self
            .series
            .basis_level
            .iter()
            .chain(&other.series.basis_level)
            .copied()
            .collect();
        NilpotentAlgebra::new(direct_product(&self.sc, &other.sc, Some(levels))?)
    }
}

/// Structure constants of `g / g^(p+1)` in the surviving basis vectors.
pub fn quotient_algebra(sc: &StructureConstants, series: &CentralSeries, p: usize) -> Result<StructureConstants> {
    if p >= series.step.max(1) {
        return Err(Error::LevelOutOfRange { level: p, step: series.step });
    }
    let keep: Vec<usize> = (0..sc.dim).filter(|&i| series.basis_level[i] <= p).collect();
    let new_index: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(n, &o)| (o, n)).collect();
    let relations: Vec<_> = sc
        .table
        .entries
        .iter()
        .filter(|e| new_index.contains_key(&e.i) && new_index.contains_key(&e.j))
        .map(|e| {
            let out = e
                .out
                .iter()
                .filter_map(|(k, c)| new_index.get(k).map(|&nk| (nk, c.clone())))
                .collect();
            ((new_index[&e.i], new_index[&e.j]), out)
        })
        .collect();
    let names = keep.iter().map(|&i| sc.names[i].clone()).collect();
    let levels = keep.iter().map(|&i| series.basis_level[i]).collect();
    StructureConstants::new(keep.len(), Some(names), &relations, Some(levels))
}

/// Block-diagonal structure constants of `g1 × g2`; basis of `g1` first.
pub fn direct_product(
    a: &StructureConstants,
    b: &StructureConstants,
    levels: Option<Vec<usize>>,
) -> Result<StructureConstants> {
    let off = a.dim;
    let mut relations: Vec<_> = a
        .table
        .entries
        .iter()
        .map(|e| ((e.i, e.j), e.out.clone()))
        .collect();
    relations.extend(b.table.entries.iter().map(|e| {
        ((e.i + off, e.j + off), e.out.iter().map(|(k, c)| (k + off, c.clone())).collect())
    }));
    let names = a
        .names
        .iter()
        .map(|s| format!("{s}'"))
        .chain(b.names.iter().map(|s| format!("{s}''")))
        .collect();
    let levels = levels.or_else(|| match (a.declared_levels(), b.declared_levels()) {
        (Some(x), Some(y)) => Some(x.iter().chain(y).copied().collect()),
        _ => None,
    });
    StructureConstants::new(a.dim + b.dim, Some(names), &relations, levels)
}
