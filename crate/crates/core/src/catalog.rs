//! Named algebras used as the reference corpus: abelian, Heisenberg,
//! quasi-abelian ladders, filiform, strictly upper triangular, the
//! five-dimensional step-3 example, the fifteen-dimensional step-4 algebra
//! that is not 2-great, and random step-3 algebras.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lie::{NilpotentAlgebra, StructureConstants};
use crate::linalg::{self, nullspace};
use crate::scalar::{int, Rational, Scalar};

const EXAMPLE_5_6_JSON: &str = include_str!("../data/example_5_6.json");

type Relations = Vec<((usize, usize), Vec<(usize, Rational)>)>;

fn build(dim: usize, names: Vec<String>, relations: &Relations, levels: Vec<usize>) -> Result<NilpotentAlgebra> {
    NilpotentAlgebra::new(StructureConstants::new(dim, Some(names), relations, Some(levels))?)
}

pub fn abelian(n: usize) -> Result<NilpotentAlgebra> {
    if n == 0 {
        return Err(Error::InvalidParameter("abelian algebra needs n >= 1".into()));
    }
    build(n, (1..=n).map(|i| format!("X{i}")).collect(), &vec![], vec![0; n])
}

pub fn heisenberg() -> Result<NilpotentAlgebra> {
    build(
        3,
        vec!["X1".into(), "X2".into(), "X3".into()],
        &vec![((0, 1), vec![(2, int(1))])],
        vec![0, 0, 1],
    )
}

/// Quasi-abelian algebra with basis `X, Y_{i,j}` for `0 <= i < ladders[j]` and
/// the single family of relations `[X, Y_{i,j}] = Y_{i+1,j}`.
pub fn quasi_abelian(ladders: &[usize]) -> Result<NilpotentAlgebra> {
    if ladders.is_empty() || ladders.contains(&0) {
        return Err(Error::InvalidParameter("ladder lengths must be positive".into()));
    }
    if ladders.iter().all(|&l| l < 2) {
        return Err(Error::InvalidParameter("a quasi-abelian algebra is not abelian: some ladder needs length >= 2".into()));
    }
    let top = *ladders.iter().max().expect("nonempty");
    // Basis order: X, then Y_{i,j} grouped by i (the level), then by j.
    let mut names = vec!["X".to_string()];
    let mut levels = vec![0];
    let mut index = vec![vec![usize::MAX; top]; ladders.len()];
    for i in 0..top {
        for (j, &len) in ladders.iter().enumerate() {
            if i < len {
                index[j][i] = names.len();
                names.push(format!("Y{i},{j}"));
                levels.push(i);
            }
        }
    }
    let mut relations = Vec::new();
    for (j, &len) in ladders.iter().enumerate() {
        for i in 0..len.saturating_sub(1) {
            relations.push(((0, index[j][i]), vec![(index[j][i + 1], int(1))]));
        }
    }
    build(names.len(), names, &relations, levels)
}

/// Model filiform algebra of dimension `n`: `[X, Y_i] = Y_{i+1}`, step `n - 1`.
pub fn filiform(n: usize) -> Result<NilpotentAlgebra> {
    if n < 3 {
        return Err(Error::InvalidParameter("filiform algebras need n >= 3".into()));
    }
    quasi_abelian(&[n - 1])
}

/// Strictly upper triangular `(s+1) x (s+1)` matrices, basis `E_ij` (i < j)
/// ordered by superdiagonal; `E_ij` sits at level `j - i - 1`.
pub fn triangular(s: usize) -> Result<NilpotentAlgebra> {
    if s == 0 {
        return Err(Error::InvalidParameter("triangular algebra needs s >= 1".into()));
    }
    let size = s + 1;
    let mut pairs = Vec::new();
    for d in 1..size {
        for i in 0..(size - d) {
            pairs.push((i, i + d));
        }
    }
    let pos = |i: usize, j: usize| pairs.iter().position(|&p| p == (i, j)).expect("basis pair");
    let mut relations = Vec::new();
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for (b, &(k, l)) in pairs.iter().enumerate().skip(a + 1) {
            // [E_ij, E_kl] = δ_jk E_il − δ_li E_kj
            let mut out = Vec::new();
            if j == k {
                out.push((pos(i, l), int(1)));
            }
            if l == i {
                out.push((pos(k, j), int(-1)));
            }
            if !out.is_empty() {
                relations.push(((a, b), out));
            }
        }
    }
    let names = pairs.iter().map(|(i, j)| format!("E{},{}", i + 1, j + 1)).collect();
    let levels = pairs.iter().map(|(i, j)| j - i - 1).collect();
    build(pairs.len(), names, &relations, levels)
}

/// Step-3, dimension 5: `[X1,X2] = Y`, `[Y,X1] = Z1`, `[Y,X2] = Z2`.
pub fn example_3_2() -> Result<NilpotentAlgebra> {
    build(
        5,
        ["X1", "X2", "Y", "Z1", "Z2"].map(String::from).to_vec(),
        &vec![
            ((0, 1), vec![(2, int(1))]),
            ((2, 0), vec![(3, int(1))]),
            ((2, 1), vec![(4, int(1))]),
        ],
        vec![0, 0, 1, 2, 2],
    )
}

/// Step-4, dimension 15, with level dimensions (3, 3, 8, 1); its pencil at
/// level 3 vanishes identically for two generators.
pub fn example_5_6() -> Result<NilpotentAlgebra> {
    NilpotentAlgebra::new(StructureConstants::from_json_str(EXAMPLE_5_6_JSON)?)
}

pub fn example_5_6_json() -> &'static str {
    EXAMPLE_5_6_JSON
}

/// Random step-3 algebra of dimension at most `max_dim` (>= 5).
///
/// Level-0 generators `X_a`, level-1 `Y_t`, level-2 `Z_u`. `[X_a, X_b]` gets
/// random small integer coefficients on the `Y`s and `Z`s; `[Y_t, X_a]` is a
/// random point of the solution space of the Jacobi identity on `X`-triples
/// (the only triples that can fail for this shape). Draws that are not step 3
/// in the declared basis are rejected and redrawn.
pub fn random_step3<R: Rng>(rng: &mut R, max_dim: usize) -> Result<NilpotentAlgebra> {
    if max_dim < 5 {
        return Err(Error::InvalidParameter("random step-3 algebras need max_dim >= 5".into()));
    }
    for _ in 0..1000 {
        if let Some(alg) = try_random_step3(rng, max_dim) {
            return Ok(alg);
        }
    }
    Err(Error::InvalidParameter("could not draw a step-3 algebra".into()))
}

fn small_int<R: Rng>(rng: &mut R, sparse: bool) -> i64 {
    if sparse && rng.gen_bool(0.4) {
        0
    } else {
        rng.gen_range(-2..=2)
    }
}

fn try_random_step3<R: Rng>(rng: &mut R, max_dim: usize) -> Option<NilpotentAlgebra> {
    let n0 = if max_dim >= 7 && rng.gen_bool(0.5) { 3 } else { 2 };
    let pairs: Vec<(usize, usize)> = (0..n0).flat_map(|a| ((a + 1)..n0).map(move |b| (a, b))).collect();
    let n1 = if n0 == 2 { 1 } else { rng.gen_range(2..=3) };
    let room = max_dim - n0 - n1;
    if room == 0 {
        return None;
    }
    let n2 = rng.gen_range(1..=room.min(3));
    let (y0, z0) = (n0, n0 + n1);
    let dim = z0 + n2;

    // [X_a, X_b] = Σ_t A[p][t] Y_t (+ Z noise)
    let a_mat: Vec<Vec<i64>> = pairs.iter().map(|_| (0..n1).map(|_| small_int(rng, true)).collect()).collect();
    let a_rat: Vec<Vec<Rational>> = a_mat.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect();
    if linalg::rank(&a_rat) < n1 {
        return None;
    }
    let coeff_xx = |a: usize, b: usize, t: usize| -> i64 {
        if a < b {
            a_mat[pairs.iter().position(|&p| p == (a, b)).unwrap()][t]
        } else if a > b {
            -a_mat[pairs.iter().position(|&p| p == (b, a)).unwrap()][t]
        } else {
            0
        }
    };

    // Unknowns B[t][a] (one copy per Z_u): [Y_t, X_a] = Σ_u B_u[t][a] Z_u.
    // Jacobi on (a,b,c): Σ_t A_ab,t B[t][c] + A_bc,t B[t][a] + A_ca,t B[t][b] = 0.
    let var = |t: usize, a: usize| t * n0 + a;
    let nvars = n1 * n0;
    let mut constraints: Vec<Vec<Rational>> = Vec::new();
    for a in 0..n0 {
        for b in (a + 1)..n0 {
            for c in (b + 1)..n0 {
                let mut row = vec![int(0); nvars];
                for t in 0..n1 {
                    row[var(t, c)] += int(coeff_xx(a, b, t));
                    row[var(t, a)] += int(coeff_xx(b, c, t));
                    row[var(t, b)] += int(coeff_xx(c, a, t));
                }
                constraints.push(row);
            }
        }
    }
    let solutions = if constraints.is_empty() {
        (0..nvars)
            .map(|i| (0..nvars).map(|j| int((i == j) as i64)).collect())
            .collect()
    } else {
        nullspace(&constraints, nvars)
    };
    if solutions.is_empty() {
        return None;
    }

    let mut relations: Relations = Vec::new();
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let mut out: Vec<(usize, Rational)> = (0..n1)
            .filter(|&t| a_mat[p][t] != 0)
            .map(|t| (y0 + t, int(a_mat[p][t])))
            .collect();
        for u in 0..n2 {
            let c = small_int(rng, true);
            if c != 0 && rng.gen_bool(0.3) {
                out.push((z0 + u, int(c)));
            }
        }
        relations.push(((a, b), out));
    }
    let mut yx: Vec<Vec<Vec<(usize, Rational)>>> = vec![vec![Vec::new(); n0]; n1];
    for u in 0..n2 {
        let mut b = vec![int(0); nvars];
        for s in &solutions {
            let c = int(small_int(rng, false));
            for (x, v) in b.iter_mut().zip(s) {
                *x += &c * v;
            }
        }
        for t in 0..n1 {
            for a in 0..n0 {
                let v = &b[var(t, a)];
                if !Scalar::is_zero(v) {
                    yx[t][a].push((z0 + u, v.clone()));
                }
            }
        }
    }
    for (t, row) in yx.into_iter().enumerate() {
        for (a, out) in row.into_iter().enumerate() {
            if !out.is_empty() {
                relations.push(((y0 + t, a), out));
            }
        }
    }

    let names = (0..n0)
        .map(|a| format!("X{}", a + 1))
        .chain((0..n1).map(|t| format!("Y{}", t + 1)))
        .chain((0..n2).map(|u| format!("Z{}", u + 1)))
        .collect();
    let levels = [vec![0; n0], vec![1; n1], vec![2; n2]].concat();
    let alg = build(dim, names, &relations, levels).ok()?;
    (alg.step() == 3).then_some(alg)
}

/// Known facts about a catalog algebra, used as regression expectations.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub algebra: NilpotentAlgebra,
    pub expected_step: usize,
    pub expected_dims: Vec<usize>,
    /// `(m, is_m_great)` facts known to hold.
    pub greatness: Vec<(usize, bool)>,
}

fn entry(name: &str, algebra: NilpotentAlgebra, step: usize, dims: &[usize], greatness: &[(usize, bool)]) -> CatalogEntry {
    CatalogEntry {
        name: name.to_string(),
        algebra,
        expected_step: step,
        expected_dims: dims.to_vec(),
        greatness: greatness.to_vec(),
    }
}

/// The fixed corpus of named algebras with their expected invariants.
pub fn entries() -> Result<Vec<CatalogEntry>> {
    let mut v = Vec::new();
    for n in 1..=6 {
        v.push(entry(&format!("abelian({n})"), abelian(n)?, 1, &[n], &[(2, true)]));
    }
    v.push(entry("heisenberg", heisenberg()?, 2, &[2, 1], &[(2, true)]));
    for n in 4..=7 {
        let dims: Vec<usize> = std::iter::once(2).chain(std::iter::repeat_n(1, n - 2)).collect();
        v.push(entry(&format!("filiform({n})"), filiform(n)?, n - 1, &dims, &[(2, true)]));
    }
    v.push(entry("quasi_abelian([3,2])", quasi_abelian(&[3, 2])?, 3, &[3, 2, 1], &[(2, true)]));
    v.push(entry("quasi_abelian([4,1,2])", quasi_abelian(&[4, 1, 2])?, 4, &[4, 2, 1, 1], &[(2, true)]));
    for s in 2..=4 {
        let dims: Vec<usize> = (1..=s).rev().collect();
        v.push(entry(&format!("triangular({s})"), triangular(s)?, s, &dims, &[(2, true)]));
    }
    v.push(entry("example_3_2", example_3_2()?, 3, &[2, 1, 2], &[(2, true)]));
    v.push(entry("example_5_6", example_5_6()?, 4, &[3, 3, 8, 1], &[(2, false), (4, true)]));
    Ok(v)
}

/// Looks up a catalog algebra by CLI name and integer parameters.
pub fn by_name(name: &str, n: Option<usize>, s: Option<usize>, ladders: Option<&[usize]>) -> Result<NilpotentAlgebra> {
    let need = |v: Option<usize>, flag: &str| {
        v.ok_or_else(|| Error::InvalidParameter(format!("catalog entry {name:?} needs --{flag}")))
    };
    match name {
        "abelian" => abelian(need(n, "n")?),
        "heisenberg" => heisenberg(),
        "filiform" => filiform(need(n, "n")?),
        "triangular" => triangular(need(s, "s")?),
        "quasi_abelian" => quasi_abelian(ladders.ok_or_else(|| {
            Error::InvalidParameter("quasi_abelian needs --ladders".into())
        })?),
        "example_3_2" => example_3_2(),
        "example_5_6" => example_5_6(),
        other => Err(Error::InvalidParameter(format!("unknown catalog entry {other:?}"))),
    }
}

pub const NAMES: &[&str] = &[
    "abelian",
    "heisenberg",
    "quasi_abelian",
    "filiform",
    "triangular",
    "example_3_2",
    "example_5_6",
];
