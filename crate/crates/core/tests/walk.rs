use nilwalk::bch::GroupElement;
use nilwalk::catalog;
use nilwalk::stats::{chi_square, chi_square_critical, ks_uniform};
use nilwalk::walk::{
    diophantine_generators, e, estimate_correlation, gap_profile, generator_from_f64, lambda_box, step,
    tame_decay_fit, Character, Nilmanifold, Observable, WalkConfig, WalkPoint,
};
use nilwalk::{int, rat, LieVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;

fn heisenberg() -> Nilmanifold {
    Nilmanifold::new(catalog::heisenberg().unwrap()).unwrap()
}

fn circle() -> Nilmanifold {
    Nilmanifold::new(catalog::abelian(1).unwrap()).unwrap()
}

fn half_half(gens: Vec<GroupElement>) -> WalkConfig {
    WalkConfig::new(gens, vec![rat(1, 2), rat(1, 2)], SEED).unwrap()
}

fn in_unit_cube(x: &WalkPoint) -> bool {
    x.coords.iter().all(|&c| (0.0..1.0).contains(&c))
}

#[test]
fn reduction_subtracts_a_lattice_word() {
    let nil = heisenberg();
    let input = [1.25, -0.5, 0.3];
    let (x, word) = nil.reduce_with_word(&input).unwrap();
    assert!(in_unit_cube(&x));
    let g = nil.float_group();
    let mut back = g.from_second_kind(&input);
    for &(i, k) in &word {
        let mut v = LieVector::<f64>::zero(3);
        v.coords[i] = k as f64;
        back = g.bch(&back, &v);
    }
    for (a, b) in back.coords.iter().zip(&x.log.coords) {
        assert!((a - b).abs() < 1e-12, "{back:?} vs {:?}", x.log);
    }
}

#[test]
fn unscaled_filiform_basis_is_not_a_lattice() {
    let err = Nilmanifold::new(catalog::filiform(4).unwrap()).unwrap_err();
    assert!(matches!(err, nilwalk::Error::NotIntegral(_)), "{err}");
}

#[test]
fn reduction_is_idempotent_on_several_algebras() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for alg in [catalog::heisenberg().unwrap(), catalog::triangular(3).unwrap(), catalog::triangular(4).unwrap()] {
        let nil = Nilmanifold::new(alg).unwrap();
        for _ in 0..200 {
            let raw: Vec<f64> = (0..nil.dim()).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let once = nil.reduce(&raw).unwrap();
            assert!(in_unit_cube(&once));
            let twice = nil.reduce(&once.coords).unwrap();
            for (a, b) in once.coords.iter().zip(&twice.coords) {
                let d = (a - b).abs();
                assert!(d < 1e-9 || (1.0 - d) < 1e-9, "{:?} vs {:?}", once.coords, twice.coords);
            }
        }
    }
}

#[test]
fn integer_and_abelian_reduction() {
    let nil = Nilmanifold::new(catalog::triangular(3).unwrap()).unwrap();
    let x = nil.reduce(&[3.0, -1.0, 2.0, 4.0, -2.0, 7.0]).unwrap();
    assert!(x.coords.iter().all(|&c| c == 0.0 || c > 1.0 - 1e-9), "{:?}", x.coords);
    let torus = Nilmanifold::new(catalog::abelian(2).unwrap()).unwrap();
    assert_eq!(torus.reduce(&[-0.75, 2.5]).unwrap().coords, vec![0.25, 0.5]);
}

#[test]
fn lattice_translation_preserves_haar() {
    let nil = heisenberg();
    let gamma = nil.float_group().from_second_kind(&[1.0, 2.0, -1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let n = 100_000;
    let moved: Vec<WalkPoint> = (0..n).map(|_| nil.translate(&gamma, &nil.uniform_point(&mut rng))).collect();
    let critical = 1.628 / (n as f64).sqrt();
    for i in 0..3 {
        let col: Vec<f64> = moved.iter().map(|x| x.coords[i]).collect();
        let d = ks_uniform(&col);
        assert!(d < critical, "coordinate {i}: KS {d} >= {critical}");
    }
}

#[test]
fn identity_and_rotation_steps() {
    let nil = heisenberg();
    let id = GroupElement::exp(LieVector::zero(3));
    let cfg = half_half(vec![id.clone(), id]);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let x = nil.reduce(&[0.3, 0.6, 0.9]).unwrap();
    let y = step(&nil, &x, &cfg, &mut rng).unwrap();
    for (a, b) in x.coords.iter().zip(&y.coords) {
        assert!((a - b).abs() < 1e-15);
    }

    let c = circle();
    let alpha = 0.375;
    let cfg = WalkConfig::new(vec![generator_from_f64(&[alpha])], vec![int(1)], SEED).unwrap();
    let mut x = c.reduce(&[0.5]).unwrap();
    for k in 1..=10 {
        x = step(&c, &x, &cfg, &mut rng).unwrap();
        let expected = (0.5 + k as f64 * alpha).fract();
        assert!((x.coords[0] - expected).abs() < 1e-12);
    }
}

#[test]
fn one_step_follows_the_two_point_law() {
    let nil = heisenberg();
    let gens = diophantine_generators(&nil.alg);
    let cfg = WalkConfig::new(gens, vec![rat(1, 3), rat(2, 3)], SEED).unwrap();
    let x0 = nil.reduce(&[0.2, 0.7, 0.4]).unwrap();
    let targets: Vec<WalkPoint> = cfg.generators.iter().map(|g| nil.translate(&g.log.to_f64(), &x0)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut counts = [0u64; 2];
    for _ in 0..100_000 {
        let y = step(&nil, &x0, &cfg, &mut rng).unwrap();
        let hit = targets
            .iter()
            .position(|t| t.coords.iter().zip(&y.coords).all(|(a, b)| (a - b).abs() < 1e-12))
            .expect("step lands on one of the two images");
        counts[hit] += 1;
    }
    let stat = chi_square(&counts, &[1.0 / 3.0, 2.0 / 3.0]);
    assert!(stat < chi_square_critical(1, 0.01), "chi2 = {stat}, counts {counts:?}");
}

#[test]
fn constant_and_norm_correlations() {
    let nil = heisenberg();
    let cfg = half_half(diophantine_generators(&nil.alg));
    let chi = Observable::Character(Character::new(&nil, vec![1, 0, 0]).unwrap());
    let one = Observable::Constant(1.0);
    for est in estimate_correlation(&nil, &cfg, &one, &chi, &[0, 3], 5000).unwrap() {
        assert!(est.estimate().norm() <= 3.0 * est.stderr + 1e-12, "{est:?}");
    }
    let est = &estimate_correlation(&nil, &cfg, &chi, &chi, &[0], 5000).unwrap()[0];
    assert!((est.estimate() - 1.0).norm() <= 3.0 * est.stderr, "{est:?}");
    assert!(estimate_correlation(&nil, &cfg, &chi, &chi, &[0], 1).is_err());
}

#[test]
fn correlation_decays_like_the_gap_profile() {
    let nil = heisenberg();
    let cfg = half_half(diophantine_generators(&nil.alg));
    let chi = Character::new(&nil, vec![1, 0, 0]).unwrap();
    let z = gap_profile(&cfg, std::slice::from_ref(&chi))[0].z();
    let obs = Observable::Character(chi);
    let est = estimate_correlation(&nil, &cfg, &obs, &obs, &[4, 64], 20_000).unwrap();
    assert!(est[1].estimate().norm() < est[0].estimate().norm());
    for e in &est {
        let exact = z.powu(e.n as u32);
        assert!((e.estimate() - exact).norm() <= 3.0 * e.stderr, "N={} {:?} vs {exact}", e.n, e.estimate());
    }
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let nil = heisenberg();
    let cfg = half_half(diophantine_generators(&nil.alg));
    let obs = Observable::RealPart(Character::new(&nil, vec![1, 1, 0]).unwrap());
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_correlation(&nil, &cfg, &obs, &obs, &[2, 8], 3000).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn gap_profile_closed_forms() {
    let nil = heisenberg();
    let lattice = vec![
        GroupElement::exp(LieVector::from_coords(vec![int(1), int(0), int(3)])),
        GroupElement::exp(LieVector::from_coords(vec![int(0), int(-2), int(0)])),
    ];
    let cfg = half_half(lattice);
    let chars: Vec<Character> =
        lambda_box(&nil, 3).into_iter().map(|l| Character::new(&nil, l).unwrap()).collect();
    assert_eq!(chars.len(), 48);
    for g in gap_profile(&cfg, &chars) {
        assert!(g.resonant && g.epsilon == 1.0);
    }

    let c = circle();
    let theta = 0.618_033_988_749_894_9;
    let cfg = half_half(vec![generator_from_f64(&[0.0]), generator_from_f64(&[theta])]);
    let chars: Vec<Character> = (1..=50).map(|n| Character::new(&c, vec![n]).unwrap()).collect();
    for (n, g) in (1..=50).zip(gap_profile(&cfg, &chars)) {
        let direct = (0.5 * Complex64::new(1.0, 0.0) + 0.5 * e(n as f64 * theta)).norm();
        assert!((g.epsilon - direct).abs() < 1e-12);
        assert!((g.epsilon - (std::f64::consts::PI * n as f64 * theta).cos().abs()).abs() < 1e-12);
        assert!(!g.resonant && g.epsilon < 1.0);
        let frac = {
            let t = n as f64 * theta;
            let f = t - t.round();
            f.abs()
        };
        assert!(g.epsilon <= 1.0 - 4.0 * frac * frac + 1e-12);
    }
}

fn circle_cfg(c: &Nilmanifold, theta: f64) -> WalkConfig {
    let _ = c;
    half_half(vec![generator_from_f64(&[0.0]), generator_from_f64(&[theta])])
}

/// `sup_x |Σ_n |n|^{-r} cos(πnθ)^N e(n(x + Nθ/2))|` on the same grid, from `½(1 + e(t)) = cos(πt) e(t/2)`.
fn circle_oracle(theta: f64, k: i64, r: f64, n: usize, grid: usize) -> f64 {
    (0..grid)
        .map(|i| {
            let x = i as f64 / grid as f64;
            (1..=k)
                .flat_map(|m| [m, -m])
                .map(|m| {
                    let mf = m as f64;
                    let t = mf * theta;
                    (mf.abs().powf(-r) * (std::f64::consts::PI * t).cos().powi(n as i32)) * e(mf * x + n as f64 * t / 2.0)
                })
                .sum::<Complex64>()
                .norm()
        })
        .fold(0.0, f64::max)
}

#[test]
fn tame_decay_on_a_diophantine_rotation() {
    let c = circle();
    let theta = (5f64.sqrt() - 1.0) / 2.0;
    let cfg = circle_cfg(&c, theta);
    let family = nilwalk::walk::circle_family(&c, 200).unwrap();
    let n_list = [16, 32, 64, 128, 256, 512];
    let grid = 256;
    let fit8 = tame_decay_fit(&c, &cfg, &family, 8.0, &n_list, grid).unwrap();
    for &(n, sup) in &fit8.sup_norms {
        let oracle = circle_oracle(theta, 200, 8.0, n, grid);
        assert!((sup - oracle).abs() <= 1e-9 * oracle.max(1e-300), "N={n}: {sup} vs {oracle}");
    }
    assert!(fit8.slope <= -1.0, "slope {}", fit8.slope);
    let fit16 = tame_decay_fit(&c, &cfg, &family, 16.0, &n_list, grid).unwrap();
    assert!(fit16.slope < fit8.slope, "{} !< {}", fit16.slope, fit8.slope);

    let lattice = circle_cfg(&c, 1.0);
    let flat = tame_decay_fit(&c, &lattice, &family, 8.0, &n_list, grid).unwrap();
    assert_eq!(flat.slope, 0.0);
    assert!(tame_decay_fit(&c, &cfg, &family, 8.0, &[4, 8], grid).is_err());
}
