//! Acceptance suite. Each criterion prints one PASS/FAIL line to stderr
//! (unbuffered, so it shows without `--nocapture`); the test fails if any
//! criterion fails.

use std::io::Write;
use std::time::{Duration, Instant};

use nilwalk::catalog;
use nilwalk::pencil::{build_pencil, certify_greatness, generic_nested_bracket, LevelOutcome, PencilVars, Verdict};
use nilwalk::poly::{Monomial, MultiPoly};
use nilwalk::stats::{clt_experiment, lemma_a1_check, martingale_variance, single_character_sigma2};
use nilwalk::walk::{
    circle_family, diophantine_generators, estimate_correlations, fit_gap_bound, gap_profile, generator_from_f64,
    lambda_box, tame_decay_fit, Character, Nilmanifold, Observable, WalkConfig,
};
use nilwalk::words::{build_lr, verify_word_bracket_identity, basis_generators};
use nilwalk::bch::Word;
use nilwalk::{check_jacobi, int, rat, LieVector, NilpotentAlgebra, Rational, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;
const THREADS: usize = 2;

// Tolerances and budgets.
const C1_BUDGET: Duration = Duration::from_secs(60);
const C3_BUDGET: Duration = Duration::from_secs(600);
const C4_SEEDS: usize = 50;
const C5_SAMPLES: usize = 100_000;
const C5_N: [usize; 4] = [4, 16, 64, 256];
const C5_SIGMAS: f64 = 3.0;
const C5_TAU: f64 = 2.0;
const C5_FIT_RADIUS: i64 = 10;
const C5_BOX: i64 = 20;
const C6_BUDGET: Duration = Duration::from_secs(300);
const C6_R: [f64; 3] = [4.0, 8.0, 16.0];
const C6_FAMILY: i64 = 1000;
const C6_GRID: usize = 1000;
const C7_BUDGET: Duration = Duration::from_secs(600);
const C7_N: usize = 2048;
const C7_TRIALS: usize = 5000;
const C7_KS: f64 = 0.05;
const C7_REL: f64 = 0.05;
const C7_MV_LEN: usize = 256;
const C7_MV_TRIALS: usize = 2000;
const C8_GRID: usize = 1_000_000;
const C8_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, elapsed: Duration, o: &Outcome) {
    let line = format!(
        "{} [{id}] {name} ({:.1}s): {}\n",
        if o.pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        o.detail
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn c1_counterexample() -> Outcome {
    let a = catalog::example_5_6().unwrap();
    let jacobi = check_jacobi(&a.sc).passed();
    let zero = |idx: &[usize]| generic_nested_bracket(&a, idx).unwrap().iter().all(Scalar::is_zero);
    let (m1211, m1212) = (zero(&[1, 2, 1, 1]), zero(&[1, 2, 1, 2]));
    let cert = certify_greatness(&a, 2, 200, SEED).unwrap();
    let level3 = cert.levels.iter().find(|l| l.p == 3).map(|l| &l.outcome);
    let symbolic_zero = matches!(level3, Some(LevelOutcome::Degenerate { identically_zero: true, .. }))
        && build_pencil(&a, 2, 3).unwrap().is_identically_zero();
    let verified = cert.verify(&a).unwrap();
    Outcome {
        pass: jacobi && m1211 && m1212 && symbolic_zero && verified && cert.verdict() == Verdict::Bad { level: 3 },
        detail: format!(
            "jacobi={jacobi} M1211=0:{m1211} M1212=0:{m1212} H23≡0:{symbolic_zero} verdict={:?} reverified={verified}",
            cert.verdict()
        ),
    }
}

fn mono(vars: &[(usize, u16)]) -> Monomial {
    Monomial::from_pairs(vars.to_vec())
}

fn c2_example_3_2() -> Outcome {
    let a = catalog::example_3_2().unwrap();
    let v = PencilVars { m: 2, n0: 2 };
    let (a11, a12, a21, a22) = (v.alpha(0, 0), v.alpha(0, 1), v.alpha(1, 0), v.alpha(1, 1));
    let expansion = vec![
        MultiPoly::from_terms([(mono(&[(a11, 2), (a22, 1)]), int(1)), (mono(&[(a11, 1), (a12, 1), (a21, 1)]), int(-1))]),
        MultiPoly::from_terms([(mono(&[(a11, 1), (a12, 1), (a22, 1)]), int(1)), (mono(&[(a12, 2), (a21, 1)]), int(-1))]),
    ];
    let m121 = generic_nested_bracket(&a, &[1, 2, 1]).unwrap();

    // Oracle: numeric [[V1, V2], V1] from the structure constants at random rational α.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let gens = a.generators().to_vec();
    let mut oracle_ok = true;
    for _ in 0..200 {
        let alpha: Vec<Vec<Rational>> =
            (0..2).map(|_| (0..2).map(|_| rat(rng.gen_range(-9..=9), rng.gen_range(1..=7))).collect()).collect();
        let vec_of = |i: usize| {
            let mut x = LieVector::<Rational>::zero(a.dim());
            for (j, &g) in gens.iter().enumerate() {
                x.coords[g] = alpha[i][j].clone();
            }
            x
        };
        let nested = a.bracket(&a.bracket(&vec_of(0), &vec_of(1)).unwrap(), &vec_of(0)).unwrap();
        let numeric = a.series.project(&nested, 2).unwrap();
        let at = |v: usize| alpha[(v / 2) % 2][v % 2].clone();
        let from_expansion: Vec<Rational> = expansion.iter().map(|p| p.eval(at)).collect();
        oracle_ok &= numeric == from_expansion;
    }

    let pencil = build_pencil(&a, 2, 2).unwrap();
    let key = mono(&[(v.k(0, 0), 1), (v.k(1, 1), 1), (v.k(2, 0), 1)]);
    let slice_ok = pencil.k_slices().get(&key) == Some(&m121);
    let at_k = pencil.evaluate_at_k(&[vec![1, 0], vec![0, 1], vec![1, 0]]).unwrap();
    let pass = m121 == expansion && oracle_ok && slice_ok && at_k == m121;
    Outcome {
        pass,
        detail: format!(
            "M121=expansion:{} oracle(200 rational α):{oracle_ok} k01k12k21-coefficient:{slice_ok} evaluate_at_k:{}; Z1 = {}, Z2 = {}",
            m121 == expansion,
            at_k == m121,
            v.fmt(&m121[0]),
            v.fmt(&m121[1])
        ),
    }
}

fn great(a: &NilpotentAlgebra, m: usize) -> bool {
    let c = certify_greatness(a, m, 200, SEED).unwrap();
    c.is_great() && c.verify(a).unwrap()
}

fn c3_greatness() -> Outcome {
    let mut named: Vec<(String, NilpotentAlgebra)> = Vec::new();
    for n in 1..=6 {
        named.push((format!("abelian({n})"), catalog::abelian(n).unwrap()));
    }
    named.push(("heisenberg".into(), catalog::heisenberg().unwrap()));
    for n in 4..=7 {
        named.push((format!("filiform({n})"), catalog::filiform(n).unwrap()));
    }
    for ladders in [vec![3, 2], vec![4, 1, 2], vec![2, 2, 2]] {
        named.push((format!("quasi_abelian({ladders:?})"), catalog::quasi_abelian(&ladders).unwrap()));
    }
    for s in 2..=4 {
        named.push((format!("triangular({s})"), catalog::triangular(s).unwrap()));
    }
    named.push(("example_3_2".into(), catalog::example_3_2().unwrap()));
    let mut failures: Vec<String> = named.iter().filter(|(_, a)| !great(a, 2)).map(|(n, _)| n.clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut random_ok = 0;
    for i in 0..30 {
        let a = catalog::random_step3(&mut rng, 8).unwrap();
        if check_jacobi(&a.sc).passed() && a.step() == 3 && a.dim() <= 8 && great(&a, 2) {
            random_ok += 1;
        } else {
            failures.push(format!("random#{i}"));
        }
    }

    let e56 = catalog::example_5_6().unwrap();
    if !great(&e56, 4) {
        failures.push("example_5_6 m=4".into());
    }
    let product = catalog::heisenberg().unwrap().product(&catalog::filiform(5).unwrap()).unwrap();
    if !great(&product, 2) {
        failures.push("heisenberg x filiform(5)".into());
    }
    let quotient = catalog::triangular(4).unwrap().quotient(2).unwrap();
    if !(quotient.step() == 3 && great(&quotient, 2)) {
        failures.push("triangular(4)/level 3".into());
    }
    let e56_quotient = e56.quotient(2).unwrap();
    if !(e56_quotient.step() == 3 && great(&e56_quotient, 2)) {
        failures.push("example_5_6/level 3".into());
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{} named algebras, {random_ok}/30 random step-3, example_5_6 4-great, product and quotients 2-great; failures: {failures:?}",
            named.len()
        ),
    }
}

fn c4_word_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checks = 0;
    let mut failures = Vec::new();
    for entry in catalog::entries().unwrap() {
        let a = &entry.algebra;
        let m = a.generators().len();
        let gens = basis_generators(a, m);
        for p in 0..a.step() {
            for _ in 0..C4_SEEDS {
                let mut w: Vec<Word> = Vec::new();
                let len0 = rng.gen_range(1..=3);
                for q in 0..p + 2 {
                    let len = if q < 2 { if p == 0 { len0 } else { rng.gen_range(1..=3) } } else { rng.gen_range(0..=3) };
                    w.push(Word::new((0..len).map(|_| rng.gen_range(0..m)).collect()));
                }
                let pair = build_lr(p, &w, m).unwrap();
                let check = verify_word_bracket_identity(a, &pair, &gens).unwrap();
                checks += 1;
                if !(check.pass && check.level_contained && check.monotone && pair.is_monotone()) {
                    failures.push(format!("{} p={p}", entry.name));
                }
            }
        }
    }
    Outcome { pass: failures.is_empty(), detail: format!("{checks} identities with zero residual; failures: {failures:?}") }
}

struct WalkOutputs {
    c5: String,
    c6: String,
    c7: String,
}

fn heisenberg_walk() -> (Nilmanifold, WalkConfig) {
    let nil = Nilmanifold::new(catalog::heisenberg().unwrap()).unwrap();
    let cfg = WalkConfig::new(diophantine_generators(&nil.alg), vec![rat(1, 2), rat(1, 2)], SEED).unwrap();
    (nil, cfg)
}

fn c5_spectral_gap() -> (Outcome, String) {
    let (nil, cfg) = heisenberg_walk();
    let lambdas = [vec![1, 0, 0], vec![0, 1, 0], vec![1, 1, 0], vec![2, -1, 0], vec![1, 2, 0]];
    let chars: Vec<Character> = lambdas.iter().map(|l| Character::new(&nil, l.clone()).unwrap()).collect();
    let gaps = gap_profile(&cfg, &chars);
    let pairs: Vec<(Observable, Observable)> =
        chars.iter().map(|c| (Observable::Character(c.clone()), Observable::Character(c.clone()))).collect();
    let est = estimate_correlations(&nil, &cfg, &pairs, &C5_N, C5_SAMPLES).unwrap();
    let mut worst = 0.0f64;
    for (g, row) in gaps.iter().zip(&est) {
        for e in row {
            let exact = g.z().powu(e.n as u32);
            worst = worst.max((e.estimate() - exact).norm() / e.stderr);
        }
    }
    let mc_ok = worst <= C5_SIGMAS;

    let boxed: Vec<Character> =
        lambda_box(&nil, C5_BOX).into_iter().map(|l| Character::new(&nil, l).unwrap()).collect();
    let profile = gap_profile(&cfg, &boxed);
    let fit = fit_gap_bound(&profile, C5_TAU, C5_FIT_RADIUS);
    let fit_ok = fit.violations.is_empty() && fit.c_fit > 0.0 && !profile.iter().any(|g| g.resonant);
    let serialized = serde_json::to_string(&(&est, &fit)).unwrap();
    (
        Outcome {
            pass: mc_ok && fit_ok,
            detail: format!(
                "max |ρ̂-z^N|/stderr = {worst:.2} (≤ {C5_SIGMAS}) over 5 characters x N={C5_N:?} at {C5_SAMPLES} samples; \
                 1-ε ≥ c‖χ‖^(-2τ), τ={C5_TAU}: c fitted on |λ|≤{C5_FIT_RADIUS} = {:.4}, min over |λ|≤{C5_BOX} = {:.4}, violations {}",
                fit.c_fit,
                fit.c_all,
                fit.violations.len()
            ),
        },
        serialized,
    )
}

fn c6_tame_decay() -> (Outcome, String) {
    let c = Nilmanifold::new(catalog::abelian(1).unwrap()).unwrap();
    let theta = (5f64.sqrt() - 1.0) / 2.0;
    let cfg = WalkConfig::new(
        vec![generator_from_f64(&[0.0]), generator_from_f64(&[theta])],
        vec![rat(1, 2), rat(1, 2)],
        SEED,
    )
    .unwrap();
    let family = circle_family(&c, C6_FAMILY).unwrap();
    let n_list: Vec<usize> = (6..=14).map(|k| 1usize << k).collect();
    let fits: Vec<_> = C6_R.iter().map(|&r| tame_decay_fit(&c, &cfg, &family, r, &n_list, C6_GRID).unwrap()).collect();
    let slopes: Vec<f64> = fits.iter().map(|f| f.slope).collect();
    let decreasing = slopes.windows(2).all(|w| w[1] < w[0]) && slopes[0] < 0.0;
    (
        Outcome {
            pass: decreasing,
            detail: format!(
                "log-log slopes of sup|ℒ^N A| for r={C6_R:?}: {:?} (residuals {:?})",
                slopes.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>(),
                fits.iter().map(|f| format!("{:.3}", f.residual)).collect::<Vec<_>>()
            ),
        },
        serde_json::to_string(&fits).unwrap(),
    )
}

fn c7_clt() -> (Outcome, String) {
    let (nil, cfg) = heisenberg_walk();
    let chi = Character::new(&nil, vec![1, 0, 0]).unwrap();
    let closed = single_character_sigma2(gap_profile(&cfg, std::slice::from_ref(&chi))[0].z());
    let a = Observable::RealPart(chi);
    let r = clt_experiment(&nil, &cfg, &a, C7_N, C7_TRIALS).unwrap();
    let mv = martingale_variance(&nil, &cfg, &a, C7_MV_LEN, C7_MV_TRIALS).unwrap();
    let rel = (mv.sigma2 - r.sigma2_hat).abs() / r.sigma2_hat;
    let pass = r.ks_stat < C7_KS && rel <= C7_REL;
    (
        Outcome {
            pass,
            detail: format!(
                "KS = {:.4} (< {C7_KS}) at N={C7_N}, trials={C7_TRIALS}; σ̂² = {:.4}, martingale σ² = {:.4} ± {:.4}, closed form {closed:.4}, rel. diff {:.2}% (≤ {}%)",
                r.ks_stat,
                r.sigma2_hat,
                mv.sigma2,
                mv.stderr,
                100.0 * rel,
                100.0 * C7_REL
            ),
        },
        serde_json::to_string(&(&r, &mv)).unwrap(),
    )
}

fn c8_lemma() -> Outcome {
    let r = lemma_a1_check(C8_GRID);
    Outcome {
        pass: r.max_residual <= C8_TOL,
        detail: format!("max residual {:.3e} at θ = {} over {} points", r.max_residual, r.argmax, r.grid_size),
    }
}

fn walk_criteria() -> (Vec<(Outcome, Duration)>, WalkOutputs) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(THREADS).build().unwrap();
    pool.install(|| {
        let ((o5, s5), t5) = timed(c5_spectral_gap);
        let ((o6, s6), t6) = timed(c6_tame_decay);
        let ((o7, s7), t7) = timed(c7_clt);
        (vec![(o5, t5), (o6, t6), (o7, t7)], WalkOutputs { c5: s5, c6: s6, c7: s7 })
    })
}

#[test]
fn acceptance() {
    let mut all = Vec::new();
    let mut record = |id: usize, name: &str, o: Outcome, t: Duration| {
        report(id, name, t, &o);
        all.push((id, o.pass));
    };

    let (o, t) = timed(c1_counterexample);
    let within = t < C1_BUDGET;
    record(1, "counterexample H_{2,3} ≡ 0", Outcome { pass: o.pass && within, detail: o.detail }, t);
    let (o, t) = timed(c2_example_3_2);
    record(2, "five-dimensional step-3 nested bracket", o, t);
    let (o, t) = timed(c3_greatness);
    record(3, "greatness suite", Outcome { pass: o.pass && t < C3_BUDGET, detail: o.detail }, t);
    let (o, t) = timed(c4_word_identity);
    record(4, "word-bracket identity", o, t);

    let (walk, first) = walk_criteria();
    let budgets = [None, Some(C6_BUDGET), Some(C7_BUDGET)];
    let names = ["spectral gap consistency", "tame decay", "CLT"];
    for (k, ((o, t), budget)) in walk.into_iter().zip(budgets).enumerate() {
        let pass = o.pass && budget.is_none_or(|b| t < b);
        record(5 + k, names[k], Outcome { pass, detail: o.detail }, t);
    }

    let (o, t) = timed(c8_lemma);
    record(8, "cosine bound grid", o, t);

    let ((_, second), t) = timed(walk_criteria);
    let same = [first.c5 == second.c5, first.c6 == second.c6, first.c7 == second.c7];
    record(
        9,
        "determinism",
        Outcome {
            pass: same.iter().all(|&s| s),
            detail: format!("byte-identical reruns of criteria 5, 6, 7 with seed {SEED} and {THREADS} threads: {same:?}"),
        },
        t,
    );

    let failed: Vec<usize> = all.iter().filter(|(_, p)| !p).map(|(id, _)| *id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
