//! Random walks `x_n = g_k x_{n-1}` on `M = G/Γ`, where `Γ` is the set of
//! points with integer coordinates of the second kind in the adapted basis.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bch::{Group, GroupElement};
use crate::error::{Error, Result};
use crate::lie::{LieVector, NilpotentAlgebra};
use crate::scalar::{int, is_integer, rational_to_f64, Rational};
use crate::stats::NeumaierSum;

/// Samples per RNG stream; fixes the work decomposition independently of
/// the thread count.
pub const CHUNK: usize = 1024;

pub(crate) fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// `e(t) = exp(2πi t)`.
pub fn e(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * t)
}

#[derive(Clone, Debug)]
pub struct Nilmanifold {
    pub alg: NilpotentAlgebra,
    exact: Group<Rational>,
    float: Group<f64>,
}

impl Nilmanifold {
    /// Requires a level-sorted adapted basis whose integer second-kind points
    /// form a group.
    pub fn new(alg: NilpotentAlgebra) -> Result<Self> {
        if !alg.series.is_level_sorted() {
            return Err(Error::NotAdapted("walks need basis vectors sorted by level".into()));
        }
        let exact = Group::<Rational>::new(&alg);
        let float = Group::<f64>::new(&alg);
        let nil = Nilmanifold { alg, exact, float };
        nil.check_integrality()?;
        Ok(nil)
    }

    pub fn dim(&self) -> usize {
        self.alg.dim()
    }

    pub fn group(&self) -> &Group<Rational> {
        &self.exact
    }

    pub fn float_group(&self) -> &Group<f64> {
        &self.float
    }

    /// Exact check that products of lattice points with `exp(±X_i)`, on
    /// either side, keep integer second-kind coordinates. The sample covers
    /// all `±e_j` and a fixed set of small random integer points.
    pub fn check_integrality(&self) -> Result<()> {
        let n = self.dim();
        let g = &self.exact;
        let mut points: Vec<Vec<i64>> = Vec::new();
        for j in 0..n {
            for s in [1, -1] {
                let mut v = vec![0; n];
                v[j] = s;
                points.push(v);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x6c61_7474);
        for _ in 0..12 {
            points.push((0..n).map(|_| rng.gen_range(-2..=2)).collect());
        }
        for pt in &points {
            let coords: Vec<Rational> = pt.iter().map(|&c| int(c)).collect();
            let gamma = g.from_second_kind(&coords);
            for i in 0..n {
                for s in [1, -1] {
                    let mut e = LieVector::<Rational>::zero(n);
                    e.coords[i] = int(s);
                    for prod in [g.bch(&gamma, &e), g.bch(&e, &gamma)] {
                        let c = g.to_second_kind(&prod);
                        if let Some(bad) = c.iter().position(|x| !is_integer(x)) {
                            return Err(Error::NotIntegral(format!(
                                "lattice point {pt:?} times exp({}X{}) has second-kind coordinate {} = {}",
                                s,
                                i + 1,
                                bad + 1,
                                c[bad]
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Reduces a point given by its first-kind log. Returns the reduced point
    /// and the lattice word `[(i, k_i)]` with `reduced = x · Π exp(k_i X_i)`.
    pub fn reduce_log(&self, log: &LieVector<f64>) -> (WalkPoint, Vec<(usize, i64)>) {
        let n = self.dim();
        let g = &self.float;
        let mut z = log.clone();
        let mut coords = Vec::with_capacity(n);
        let mut word = Vec::new();
        for i in 0..n {
            let c = z.coords[i];
            let mut k = c.floor();
            if c - k >= 1.0 {
                k += 1.0;
            }
            let mut e = LieVector::<f64>::zero(n);
            e.coords[i] = -c;
            z = g.bch(&e, &z);
            z.coords[i] = 0.0;
            if k != 0.0 {
                z = g.adjoint_exp(i, &k, &z);
                word.push((i, -(k as i64)));
            }
            coords.push((c - k).clamp(0.0, 1.0 - f64::EPSILON / 2.0));
        }
        let log = g.from_second_kind(&coords);
        (WalkPoint { coords, log }, word)
    }

    /// Canonical representative, in `[0,1)^n`, of a point given by second-kind coordinates.
    pub fn reduce(&self, coords: &[f64]) -> Result<WalkPoint> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: coords.len() });
        }
        Ok(self.reduce_log(&self.float.from_second_kind(coords)).0)
    }

    /// Like [`reduce`](Self::reduce), also returning the lattice word that was applied.
    pub fn reduce_with_word(&self, coords: &[f64]) -> Result<(WalkPoint, Vec<(usize, i64)>)> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: coords.len() });
        }
        Ok(self.reduce_log(&self.float.from_second_kind(coords)))
    }

    /// Haar-distributed point: uniform second-kind coordinates in `[0,1)^n`.
    pub fn uniform_point<R: Rng>(&self, rng: &mut R) -> WalkPoint {
        let coords: Vec<f64> = (0..self.dim()).map(|_| rng.gen::<f64>()).collect();
        let log = self.float.from_second_kind(&coords);
        WalkPoint { coords, log }
    }

    /// Left translation followed by reduction.
    pub fn translate(&self, g: &LieVector<f64>, x: &WalkPoint) -> WalkPoint {
        self.reduce_log(&self.float.bch(g, &x.log)).0
    }
}

/// A point of `M` in reduced second-kind coordinates, with its first-kind log.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkPoint {
    pub coords: Vec<f64>,
    pub log: LieVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkConfig {
    pub generators: Vec<GroupElement>,
    pub probs: Vec<Rational>,
    pub seed: u64,
}

impl WalkConfig {
    pub fn new(generators: Vec<GroupElement>, probs: Vec<Rational>, seed: u64) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidParameter("a walk needs at least one generator".into()));
        }
        if generators.len() != probs.len() {
            return Err(Error::BadProbabilities(format!(
                "{} generators but {} probabilities",
                generators.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| p <= &int(0)) {
            return Err(Error::BadProbabilities("probabilities must be positive".into()));
        }
        let total = probs.iter().fold(int(0), |a, b| a + b);
        if total != int(1) {
            return Err(Error::BadProbabilities(format!("probabilities sum to {total}, not 1")));
        }
        Ok(WalkConfig { generators, probs, seed })
    }

    /// Uniform probabilities.
    pub fn uniform(generators: Vec<GroupElement>, seed: u64) -> Result<Self> {
        let m = generators.len() as i64;
        let probs = vec![Rational::new(1.into(), m.max(1).into()); generators.len()];
        Self::new(generators, probs, seed)
    }

    pub fn probs_f64(&self) -> Vec<f64> {
        self.probs.iter().map(rational_to_f64).collect()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        WalkConfig { seed, ..self.clone() }
    }
}

/// A configuration prepared for fast stepping.
#[derive(Clone, Debug)]
pub struct Walker<'a> {
    pub nil: &'a Nilmanifold,
    gens: Vec<LieVector<f64>>,
    cumulative: Vec<f64>,
}

impl<'a> Walker<'a> {
    pub fn new(nil: &'a Nilmanifold, cfg: &WalkConfig) -> Result<Self> {
        if let Some(g) = cfg.generators.iter().find(|g| g.log.dim() != nil.dim()) {
            return Err(Error::DimensionMismatch { expected: nil.dim(), got: g.log.dim() });
        }
        let mut acc = 0.0;
        let cumulative = cfg
            .probs_f64()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Walker { nil, gens: cfg.generators.iter().map(|g| g.log.to_f64()).collect(), cumulative })
    }

    pub fn pick<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cumulative.iter().position(|&c| u < c).unwrap_or(self.gens.len() - 1)
    }

    pub fn step<R: Rng>(&self, x: &WalkPoint, rng: &mut R) -> WalkPoint {
        let k = self.pick(rng);
        self.nil.translate(&self.gens[k], x)
    }

    /// Deterministic image `g_k x`.
    pub fn apply(&self, k: usize, x: &WalkPoint) -> WalkPoint {
        self.nil.translate(&self.gens[k], x)
    }
}

/// One step of the walk: samples `k` with probability `p_k` and applies `g_k`.
pub fn step<R: Rng>(nil: &Nilmanifold, x: &WalkPoint, cfg: &WalkConfig, rng: &mut R) -> Result<WalkPoint> {
    Ok(Walker::new(nil, cfg)?.step(x, rng))
}

/// `χ_λ(g) = e(λ(log g))` for an integer functional `λ` in the adapted basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Character {
    pub lambda: Vec<i64>,
    /// Euclidean norm of `λ`.
    pub norm: f64,
}

impl Character {
    /// Validates `λ`: correct length, nonzero, and `χ(xγ) = χ(x)` on 100
    /// random pairs of points `x` and lattice words `γ`.
    pub fn new(nil: &Nilmanifold, lambda: Vec<i64>) -> Result<Self> {
        if lambda.len() != nil.dim() {
            return Err(Error::DimensionMismatch { expected: nil.dim(), got: lambda.len() });
        }
        if lambda.iter().all(|&l| l == 0) {
            return Err(Error::InvalidParameter("the trivial character is not admitted".into()));
        }
        let norm = lambda.iter().map(|&l| (l * l) as f64).sum::<f64>().sqrt();
        let chi = Character { lambda, norm };
        if !chi.is_well_defined(nil, 100) {
            return Err(Error::IllDefinedCharacter(chi.lambda));
        }
        Ok(chi)
    }

    /// Supported on level 0, hence constant on `Γ`-cosets by construction.
    pub fn is_abelian(&self, nil: &Nilmanifold) -> bool {
        self.lambda.iter().zip(&nil.alg.series.basis_level).all(|(&l, &lev)| l == 0 || lev == 0)
    }

    pub fn is_well_defined(&self, nil: &Nilmanifold, trials: usize) -> bool {
        let n = nil.dim();
        let g = nil.float_group();
        let mut rng = ChaCha8Rng::seed_from_u64(0x6368_6172);
        for _ in 0..trials {
            let coords: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x = g.from_second_kind(&coords);
            let mut gamma = LieVector::<f64>::zero(n);
            for _ in 0..rng.gen_range(1..=4) {
                let mut e = LieVector::<f64>::zero(n);
                e.coords[rng.gen_range(0..n)] = if rng.gen() { 1.0 } else { -1.0 };
                gamma = g.bch(&gamma, &e);
            }
            let moved = g.bch(&x, &gamma);
            if (self.value_at_log(&moved) - self.value_at_log(&x)).norm() > 1e-8 {
                return false;
            }
        }
        true
    }

    pub fn phase_at_log(&self, log: &LieVector<f64>) -> f64 {
        self.lambda.iter().zip(&log.coords).map(|(&l, &c)| l as f64 * c).sum()
    }

    pub fn value_at_log(&self, log: &LieVector<f64>) -> Complex64 {
        e(self.phase_at_log(log))
    }

    pub fn value(&self, x: &WalkPoint) -> Complex64 {
        self.value_at_log(&x.log)
    }

    /// `λ(log g) mod 1`, exactly.
    pub fn exact_phase(&self, g: &GroupElement) -> Rational {
        let t = self
            .lambda
            .iter()
            .zip(&g.log.coords)
            .fold(int(0), |acc, (&l, c)| acc + c * int(l));
        let floor = t.numer().div_floor(t.denom());
        t - Rational::from_integer(floor)
    }
}

type ObservableFn = Arc<dyn Fn(&WalkPoint) -> Complex64 + Send + Sync>;

/// Bounded observables on `M`.
#[derive(Clone)]
pub enum Observable {
    Character(Character),
    RealPart(Character),
    Constant(f64),
    /// Finite combination `Σ c_χ χ`.
    Expansion(Vec<(Complex64, Character)>),
    Custom(ObservableFn),
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Observable::Character(c) => write!(f, "Character({:?})", c.lambda),
            Observable::RealPart(c) => write!(f, "RealPart({:?})", c.lambda),
            Observable::Constant(c) => write!(f, "Constant({c})"),
            Observable::Expansion(v) => write!(f, "Expansion({} terms)", v.len()),
            Observable::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl Observable {
    pub fn value(&self, x: &WalkPoint) -> Complex64 {
        match self {
            Observable::Character(c) => c.value(x),
            Observable::RealPart(c) => Complex64::new(c.value(x).re, 0.0),
            Observable::Constant(c) => Complex64::new(*c, 0.0),
            Observable::Expansion(terms) => terms.iter().map(|(a, c)| a * c.value(x)).sum(),
            Observable::Custom(f) => f(x),
        }
    }

    /// Character expansion `Σ a_χ χ`, when the observable has one.
    pub fn expansion(&self) -> Option<Vec<(Complex64, Character)>> {
        match self {
            Observable::Character(c) => Some(vec![(Complex64::new(1.0, 0.0), c.clone())]),
            Observable::RealPart(c) => {
                let conj = Character { lambda: c.lambda.iter().map(|l| -l).collect(), norm: c.norm };
                Some(vec![(Complex64::new(0.5, 0.0), c.clone()), (Complex64::new(0.5, 0.0), conj)])
            }
            Observable::Constant(c) if *c == 0.0 => Some(Vec::new()),
            Observable::Expansion(v) => Some(v.clone()),
            _ => None,
        }
    }
}

/// `ρ̂(N)` with its delta-method standard error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub n: usize,
    pub re: f64,
    pub im: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl CorrelationEstimate {
    pub fn estimate(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

fn complex_mean(values: impl Iterator<Item = Complex64>) -> Complex64 {
    let (mut re, mut im) = (NeumaierSum::default(), NeumaierSum::default());
    let mut count = 0usize;
    for v in values {
        re.add(v.re);
        im.add(v.im);
        count += 1;
    }
    Complex64::new(re.total(), im.total()) / count.max(1) as f64
}

/// Monte Carlo estimate of `ρ̄_{A,B}(N) = E[A(x_N) conj(B(x_0))] - E[A] conj(E[B])`
/// with `x_0` Haar-distributed, for every `N` in `n_list`, along shared paths.
pub fn estimate_correlation(
    nil: &Nilmanifold,
    cfg: &WalkConfig,
    a: &Observable,
    b: &Observable,
    n_list: &[usize],
    samples: usize,
) -> Result<Vec<CorrelationEstimate>> {
    let pair = [(a.clone(), b.clone())];
    Ok(estimate_correlations(nil, cfg, &pair, n_list, samples)?.remove(0))
}

/// [`estimate_correlation`] for several `(A, B)` pairs, all read off the same paths.
pub fn estimate_correlations(
    nil: &Nilmanifold,
    cfg: &WalkConfig,
    pairs: &[(Observable, Observable)],
    n_list: &[usize],
    samples: usize,
) -> Result<Vec<Vec<CorrelationEstimate>>> {
    if samples < 2 {
        return Err(Error::NotEnoughData(format!("{samples} samples; need at least 2")));
    }
    let walker = Walker::new(nil, cfg)?;
    let horizon = n_list.iter().copied().max().unwrap_or(0);
    let mut wanted = vec![false; horizon + 1];
    for &n in n_list {
        wanted[n] = true;
    }
    let chunks = samples.div_ceil(CHUNK);
    // Per sample and pair: conj(B(x_0)) and A(x_N) for each N in n_list.
    type Row = Vec<(Complex64, Vec<Complex64>)>;
    let rows: Vec<Vec<Row>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(cfg.seed, c);
            let count = CHUNK.min(samples - c * CHUNK);
            (0..count)
                .map(|_| {
                    let mut x = nil.uniform_point(&mut rng);
                    let mut row: Row = pairs.iter().map(|(_, b)| (b.value(&x).conj(), Vec::new())).collect();
                    let mut at = vec![Vec::new(); horizon + 1];
                    for t in 0..=horizon {
                        if t > 0 {
                            x = walker.step(&x, &mut rng);
                        }
                        if wanted[t] {
                            at[t] = pairs.iter().map(|(a, _)| a.value(&x)).collect();
                        }
                    }
                    for (k, r) in row.iter_mut().enumerate() {
                        r.1 = n_list.iter().map(|&n| at[n][k]).collect();
                    }
                    row
                })
                .collect()
        })
        .collect();
    let rows: Vec<Row> = rows.into_iter().flatten().collect();
    let nf = samples as f64;
    Ok((0..pairs.len())
        .map(|k| {
            let mean_b = complex_mean(rows.iter().map(|r| r[k].0));
            n_list
                .iter()
                .enumerate()
                .map(|(j, &n)| {
                    let mean_a = complex_mean(rows.iter().map(|r| r[k].1[j]));
                    let mean_u = complex_mean(rows.iter().map(|r| r[k].1[j] * r[k].0));
                    let est = mean_u - mean_a * mean_b;
                    let mut var = NeumaierSum::default();
                    for r in &rows {
                        let (b0, a_n) = (r[k].0, r[k].1[j]);
                        let psi = (a_n * b0 - mean_u) - mean_b * (a_n - mean_a) - mean_a * (b0 - mean_b);
                        var.add(psi.norm_sqr());
                    }
                    let stderr = (var.total() / (nf * (nf - 1.0))).sqrt();
                    CorrelationEstimate { n, re: est.re, im: est.im, stderr, samples }
                })
                .collect()
        })
        .collect())
}

/// Contraction factor of the transfer operator on `H_χ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapEntry {
    pub lambda: Vec<i64>,
    pub norm: f64,
    pub z_re: f64,
    pub z_im: f64,
    /// `ε(χ) = |Σ_j p_j χ(g_j)|`.
    pub epsilon: f64,
    /// All phases agree exactly, so `ε = 1`.
    pub resonant: bool,
}

impl GapEntry {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.z_re, self.z_im)
    }
}

/// `z_χ = Σ_j p_j χ(g_j)` for each character, with phases reduced exactly.
pub fn gap_profile(cfg: &WalkConfig, characters: &[Character]) -> Vec<GapEntry> {
    let probs = cfg.probs_f64();
    characters
        .iter()
        .map(|chi| {
            let phases: Vec<Rational> = cfg.generators.iter().map(|g| chi.exact_phase(g)).collect();
            let resonant = phases.windows(2).all(|w| w[0] == w[1]);
            let z: Complex64 = if resonant {
                e(rational_to_f64(&phases[0]))
            } else {
                phases.iter().zip(&probs).map(|(t, p)| *p * e(rational_to_f64(t))).sum()
            };
            GapEntry {
                lambda: chi.lambda.clone(),
                norm: chi.norm,
                z_re: z.re,
                z_im: z.im,
                epsilon: if resonant { 1.0 } else { z.norm().min(1.0) },
                resonant,
            }
        })
        .collect()
}

/// Nonzero `λ` supported on level 0 with `|λ|_∞ <= radius`, in lexicographic order.
pub fn lambda_box(nil: &Nilmanifold, radius: i64) -> Vec<Vec<i64>> {
    let gens = nil.alg.generators().to_vec();
    let side = (2 * radius + 1) as usize;
    let total = side.pow(gens.len() as u32);
    (0..total)
        .filter_map(|mut idx| {
            let mut lambda = vec![0i64; nil.dim()];
            for &g in gens.iter().rev() {
                lambda[g] = (idx % side) as i64 - radius;
                idx /= side;
            }
            lambda.iter().any(|&l| l != 0).then_some(lambda)
        })
        .collect()
}

/// `1 - ε(χ) >= c ‖χ‖^{-2τ}`: `c` is fitted as the minimum over the inner box
/// `|λ|_∞ <= fit_radius` and then checked on every entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapFit {
    pub tau: f64,
    pub fit_radius: i64,
    pub c_fit: f64,
    pub c_all: f64,
    pub fitted_on: usize,
    pub checked: usize,
    pub violations: Vec<Vec<i64>>,
}

pub fn fit_gap_bound(entries: &[GapEntry], tau: f64, fit_radius: i64) -> GapFit {
    let scaled = |g: &GapEntry| (1.0 - g.epsilon) * g.norm.powf(2.0 * tau);
    let inner: Vec<&GapEntry> = entries
        .iter()
        .filter(|g| g.lambda.iter().map(|l| l.abs()).max().unwrap_or(0) <= fit_radius)
        .collect();
    let c_fit = inner.iter().map(|g| scaled(g)).fold(f64::INFINITY, f64::min);
    let c_all = entries.iter().map(scaled).fold(f64::INFINITY, f64::min);
    let violations = entries
        .iter()
        .filter(|g| 1.0 - g.epsilon < c_fit * g.norm.powf(-2.0 * tau))
        .map(|g| g.lambda.clone())
        .collect();
    GapFit { tau, fit_radius, c_fit, c_all, fitted_on: inner.len(), checked: entries.len(), violations }
}

/// Log-log fit of `sup_x |ℒ^N A(x)|` against `N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TameFit {
    pub r: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual of the fit in log space.
    pub residual: f64,
    pub sup_norms: Vec<(usize, f64)>,
}

/// Evaluation points: a regular grid on the circle, otherwise seeded uniform points.
fn grid_points(nil: &Nilmanifold, count: usize, seed: u64) -> Vec<WalkPoint> {
    if nil.dim() == 1 {
        return (0..count)
            .map(|i| {
                let c = i as f64 / count as f64;
                WalkPoint { coords: vec![c], log: LieVector::from_coords(vec![c]) }
            })
            .collect();
    }
    let mut rng = chunk_rng(seed, 0);
    (0..count).map(|_| nil.uniform_point(&mut rng)).collect()
}

/// Least-squares line through `(x_i, y_i)`; returns slope, intercept, RMS residual.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    (slope, intercept, rms)
}

/// For `A = Σ ‖χ‖^{-r} χ` over `family`, evaluates `ℒ^N A = Σ ‖χ‖^{-r} z_χ^N χ`
/// on `grid` points and fits the decay exponent of its sup norm.
pub fn tame_decay_fit(
    nil: &Nilmanifold,
    cfg: &WalkConfig,
    family: &[Character],
    r: f64,
    n_list: &[usize],
    grid: usize,
) -> Result<TameFit> {
    if n_list.len() < 3 {
        return Err(Error::NotEnoughData("a decay fit needs at least three values of N".into()));
    }
    if family.is_empty() || grid == 0 {
        return Err(Error::NotEnoughData("empty character family or grid".into()));
    }
    let gaps = gap_profile(cfg, family);
    let points = grid_points(nil, grid, cfg.seed);
    let values: Vec<Vec<Complex64>> = points.iter().map(|x| family.iter().map(|c| c.value(x)).collect()).collect();
    let weights: Vec<f64> = family.iter().map(|c| c.norm.powf(-r)).collect();
    let sup_norms: Vec<(usize, f64)> = n_list
        .iter()
        .map(|&n| {
            let coeff: Vec<Complex64> = gaps.iter().zip(&weights).map(|(g, w)| g.z().powu(n as u32) * *w).collect();
            let sup = values
                .par_iter()
                .map(|row| row.iter().zip(&coeff).map(|(v, c)| v * c).sum::<Complex64>().norm())
                .reduce(|| 0.0, f64::max);
            (n, sup)
        })
        .collect();
    let xs: Vec<f64> = sup_norms.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = sup_norms.iter().map(|(_, s)| s.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, intercept, residual) = linear_fit(&xs, &ys);
    Ok(TameFit { r, slope, intercept, residual, sup_norms })
}

/// Characters `χ_n(x) = e(n x)` for `n = ±1, ..., ±k` on a one-dimensional torus.
pub fn circle_family(nil: &Nilmanifold, k: i64) -> Result<Vec<Character>> {
    if nil.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: nil.dim() });
    }
    (1..=k).flat_map(|n| [n, -n]).map(|n| Character::new(nil, vec![n])).collect()
}

/// Level-0 irrational offsets: the golden mean, then `√q - ⌊√q⌋` for q = 2, 3, 5, 7, ...
pub fn diophantine_offsets(count: usize) -> Vec<f64> {
    let mut out = vec![(5f64.sqrt() - 1.0) / 2.0];
    let mut q = 2u32;
    while out.len() < count {
        if (2..q).all(|d| !q.is_multiple_of(d)) {
            let r = (q as f64).sqrt();
            out.push(r - r.floor());
        }
        q += 1;
    }
    out.truncate(count);
    out
}

/// One generator per level-0 basis vector `X_j`: coordinate `θ_j` from
/// [`diophantine_offsets`] on `X_j`, zero on the other level-0 vectors and
/// `0.1·(j+1)·θ_j` on every higher-level vector.
pub fn diophantine_generators(alg: &NilpotentAlgebra) -> Vec<GroupElement> {
    let gens = alg.generators();
    let offsets = diophantine_offsets(gens.len());
    gens.iter()
        .enumerate()
        .map(|(j, &g)| {
            let coords: Vec<f64> = (0..alg.dim())
                .map(|i| {
                    if i == g {
                        offsets[j]
                    } else if alg.series.basis_level[i] == 0 {
                        0.0
                    } else {
                        0.1 * (j + 1) as f64 * offsets[j]
                    }
                })
                .collect();
            generator_from_f64(&coords)
        })
        .collect()
}

/// Exact rational nearest to an `f64` generator coordinate list.
pub fn generator_from_f64(coords: &[f64]) -> GroupElement {
    GroupElement::exp(LieVector::from_coords(coords.iter().map(|&c| crate::scalar::rational_from_f64(c)).collect()))
}

/// Integer second-kind coordinates of a lattice word, exactly.
pub fn lattice_word_coords(nil: &Nilmanifold, word: &[(usize, i64)]) -> Vec<i64> {
    let g = nil.group();
    let mut log = LieVector::<Rational>::zero(nil.dim());
    for &(i, k) in word {
        let mut e = LieVector::<Rational>::zero(nil.dim());
        e.coords[i] = int(k);
        log = g.bch(&log, &e);
    }
    g.to_second_kind(&log)
        .iter()
        .map(|c| c.to_integer().to_i64().expect("small lattice coordinate"))
        .collect()
}
