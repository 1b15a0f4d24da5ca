use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use nilwalk::pencil::{build_pencil, certify_greatness, generic_nested_bracket, LevelOutcome, Verdict};
use nilwalk::stats::{clt_experiment, lemma_a1_check, martingale_variance, single_character_sigma2};
use nilwalk::walk::{
    diophantine_generators, estimate_correlation, fit_gap_bound, gap_profile, lambda_box, Character, Nilmanifold,
    Observable, WalkConfig,
};
use nilwalk::words::{basis_generators, default_qmax, nice_pair_search, verify_word_bracket_identity};
use nilwalk::{catalog, check_jacobi, Error, JacobiReport, NilpotentAlgebra, StructureConstants};

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_UNDETERMINED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "nilwalk", version, about = "Random walks on nilmanifolds: greatness certificates, word identities and mixing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct AlgebraArgs {
    /// Algebra description in JSON.
    #[arg(long, conflicts_with = "catalog")]
    algebra: Option<PathBuf>,
    /// Catalog entry name.
    #[arg(long)]
    catalog: Option<String>,
    /// Dimension parameter (abelian, filiform).
    #[arg(long)]
    n: Option<usize>,
    /// Step parameter (triangular).
    #[arg(long)]
    s: Option<usize>,
    /// Ladder lengths for quasi_abelian, comma separated.
    #[arg(long, value_delimiter = ',')]
    ladders: Option<Vec<usize>>,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum GeneratorKind {
    Basis,
    Diophantine,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Jacobi identity and lower central series.
    Check {
        #[command(flatten)]
        alg: AlgebraArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Print the coordinates of the pencil H_{m,p}.
    Pencil {
        #[command(flatten)]
        alg: AlgebraArgs,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// m-greatness certificate.
    Certify {
        #[command(flatten)]
        alg: AlgebraArgs,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Reproduce the 15-dimensional 2-bad, 4-great algebra.
    Counterexample {
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Nice word pair search and word-bracket identity check.
    Words {
        #[command(flatten)]
        alg: AlgebraArgs,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 2.0)]
        tau: f64,
        #[arg(long)]
        qmax: Option<u64>,
        /// `basis` uses exp(X_i); `diophantine` adds irrational offsets.
        #[arg(long, value_enum, default_value_t = GeneratorKind::Diophantine)]
        generators: GeneratorKind,
        #[arg(long, default_value_t = 5000)]
        budget: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Contraction factors of the walk operator on character spaces.
    Gap {
        #[command(flatten)]
        alg: AlgebraArgs,
        /// Box radius for level-0 functionals.
        #[arg(long, default_value_t = 5)]
        radius: i64,
        #[arg(long, default_value_t = 2.0)]
        tau: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Monte Carlo correlation decay for a character.
    Correlate {
        #[command(flatten)]
        alg: AlgebraArgs,
        /// Integer functional, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambda: Option<Vec<i64>>,
        #[arg(long = "N", required = true)]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Central limit experiment for the real part of a character.
    Clt {
        #[command(flatten)]
        alg: AlgebraArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambda: Option<Vec<i64>>,
        #[arg(long = "N", default_value_t = 256)]
        length: usize,
        /// Number of trials.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Grid check of |1 + e(θ)| <= 2 - 8θ².
    #[command(name = "lemma-a1")]
    CosineBound {
        #[arg(long, default_value_t = 1_000_000)]
        grid: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

struct Report {
    body: Value,
    table: Option<(Vec<String>, Vec<Vec<String>>)>,
    exit: u8,
}

impl Report {
    fn json(body: Value, exit: u8) -> Self {
        Report { body, table: None, exit }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Violation(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::LevelOutOfRange { .. } | Error::DimensionMismatch { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Lib(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

struct Loaded {
    sc: StructureConstants,
    source: String,
}

fn load_structure(args: &AlgebraArgs) -> CliResult<Loaded> {
    match (&args.algebra, &args.catalog) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            let sc = StructureConstants::from_json_str(&text).map_err(|e| Failure::Usage(e.to_string()))?;
            Ok(Loaded { sc, source: path.display().to_string() })
        }
        (None, Some(name)) => {
            let alg = catalog::by_name(name, args.n, args.s, args.ladders.as_deref())?;
            Ok(Loaded { sc: alg.sc, source: format!("catalog:{name}") })
        }
        (None, None) => Err(Failure::Usage("one of --algebra or --catalog is required".into())),
    }
}

fn jacobi_violation(sc: &StructureConstants) -> Option<Value> {
    match check_jacobi(sc) {
        JacobiReport::Pass => None,
        JacobiReport::Violation { triple: (i, j, k), residual } => Some(json!({
            "triple": [i + 1, j + 1, k + 1],
            "residual": residual.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        })),
    }
}

fn load_algebra(args: &AlgebraArgs) -> CliResult<(NilpotentAlgebra, String)> {
    let loaded = load_structure(args)?;
    if let Some(v) = jacobi_violation(&loaded.sc) {
        return Err(Failure::Violation(format!("Jacobi identity fails: {v}")));
    }
    let hash = sha256(&loaded.sc.to_json_string());
    Ok((NilpotentAlgebra::new(loaded.sc)?, hash))
}

fn sha256(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn default_lambda(nil: &Nilmanifold, lambda: Option<Vec<i64>>) -> Vec<i64> {
    lambda.unwrap_or_else(|| {
        let mut l = vec![0; nil.dim()];
        l[nil.alg.generators()[0]] = 1;
        l
    })
}

fn walk_setup(alg: NilpotentAlgebra, seed: u64) -> CliResult<(Nilmanifold, WalkConfig)> {
    let nil = Nilmanifold::new(alg)?;
    let cfg = WalkConfig::uniform(diophantine_generators(&nil.alg), seed)?;
    Ok((nil, cfg))
}

fn generators_json(cfg: &WalkConfig) -> Value {
    json!(cfg
        .generators
        .iter()
        .map(|g| g.log.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn run(cmd: Command) -> CliResult<(Report, Option<String>, Option<u64>, OutputArgs)> {
    match cmd {
        Command::Check { alg, out } => {
            let loaded = load_structure(&alg)?;
            let hash = sha256(&loaded.sc.to_json_string());
            if let Some(v) = jacobi_violation(&loaded.sc) {
                let body = json!({"source": loaded.source, "jacobi": "fail", "violation": v});
                return Ok((Report::json(body, EXIT_VIOLATION), Some(hash), None, out));
            }
            let a = NilpotentAlgebra::new(loaded.sc)?;
            let body = json!({
                "source": loaded.source,
                "jacobi": "pass",
                "dim": a.dim(),
                "step": a.step(),
                "level_dims": (0..a.step()).map(|p| a.series.level_dim(p)).collect::<Vec<_>>(),
                "level_sorted": a.series.is_level_sorted(),
            });
            Ok((Report::json(body, 0), Some(hash), None, out))
        }
        Command::Pencil { alg, m, p, out } => {
            let (a, hash) = load_algebra(&alg)?;
            let pencil = build_pencil(&a, m, p)?;
            let vars = pencil.vars;
            let coords: Vec<String> = pencil.coords.iter().map(|c| c.fmt_with(|v| vars.name(v))).collect();
            let rows = coords.iter().enumerate().map(|(i, c)| vec![(i + 1).to_string(), c.clone()]).collect();
            let body = json!({"m": m, "p": p, "identically_zero": pencil.is_identically_zero(), "coordinates": coords});
            let report = Report { body, table: Some((vec!["coordinate".into(), "polynomial".into()], rows)), exit: 0 };
            Ok((report, Some(hash), None, out))
        }
        Command::Certify { alg, m, budget, seed, out } => {
            let (a, hash) = load_algebra(&alg)?;
            let cert = certify_greatness(&a, m, budget, seed)?;
            if !cert.verify(&a)? {
                return Err(Failure::Violation("certificate failed independent re-verification".into()));
            }
            let exit = match cert.verdict() {
                Verdict::Great => 0,
                Verdict::Bad { .. } => EXIT_VIOLATION,
                Verdict::Undetermined { .. } => EXIT_UNDETERMINED,
            };
            Ok((Report::json(cert.to_json(), exit), Some(hash), Some(seed), out))
        }
        Command::Counterexample { budget, seed, out } => {
            let sc = catalog::example_5_6()?.sc;
            let hash = sha256(&sc.to_json_string());
            let jacobi = jacobi_violation(&sc).is_none();
            let a = NilpotentAlgebra::new(sc)?;
            let level_dims: Vec<usize> = (0..a.step()).map(|p| a.series.level_dim(p)).collect();
            let m1211 = generic_nested_bracket(&a, &[1, 2, 1, 1])?;
            let m1212 = generic_nested_bracket(&a, &[1, 2, 1, 2])?;
            let vanish = |v: &[nilwalk::poly::MultiPoly]| v.iter().all(nilwalk::Scalar::is_zero);
            let two = certify_greatness(&a, 2, budget, seed)?;
            let four = certify_greatness(&a, 4, budget, seed)?;
            let level3_zero = two.levels.iter().any(|l| {
                l.p == 3 && matches!(l.outcome, LevelOutcome::Degenerate { identically_zero: true, .. })
            });
            let reproduced = jacobi
                && level_dims == [3, 3, 8, 1]
                && vanish(&m1211)
                && vanish(&m1212)
                && two.verdict() == Verdict::Bad { level: 3 }
                && level3_zero
                && four.is_great()
                && two.verify(&a)?
                && four.verify(&a)?;
            let body = json!({
                "jacobi": jacobi,
                "level_dims": level_dims,
                "M1211_zero": vanish(&m1211),
                "M1212_zero": vanish(&m1212),
                "m2": two.to_json(),
                "m4": four.to_json(),
                "reproduced": reproduced,
            });
            Ok((Report::json(body, if reproduced { 0 } else { EXIT_VIOLATION }), Some(hash), Some(seed), out))
        }
        Command::Words { alg, m, p, tau, qmax, generators, budget, out } => {
            let (a, hash) = load_algebra(&alg)?;
            let gens: Vec<_> = match generators {
                GeneratorKind::Basis => basis_generators(&a, m),
                GeneratorKind::Diophantine => diophantine_generators(&a).into_iter().take(m).collect(),
            };
            if gens.len() < m {
                return Err(Failure::Usage(format!("algebra has only {} level-0 generators", gens.len())));
            }
            let group = nilwalk::bch::Group::<nilwalk::Rational>::new(&a);
            let q_max = qmax.unwrap_or_else(|| default_qmax(a.series.level_dim(p)));
            let search = nice_pair_search(&group, &a.series, &gens, p, tau, q_max, budget, 0.0)?;
            let mut body = json!({
                "m": m, "p": p, "tau": tau, "qmax": q_max, "budget": budget,
                "generators": gens.iter().map(|g| g.log.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "evaluated": search.evaluated, "zero_projections": search.zero_projections,
            });
            let exit = match &search.best {
                None => EXIT_UNDETERMINED,
                Some(best) => {
                    let check = verify_word_bracket_identity(&a, &best.pair, &gens)?;
                    body["pair"] = best.pair.to_json();
                    body["diophantine"] = serde_json::to_value(&best.report).expect("serializable");
                    body["identity_pass"] = json!(check.pass);
                    if check.pass { 0 } else { EXIT_VIOLATION }
                }
            };
            Ok((Report::json(body, exit), Some(hash), None, out))
        }
        Command::Gap { alg, radius, tau, seed, out } => {
            let (a, hash) = load_algebra(&alg)?;
            let (nil, cfg) = walk_setup(a, seed)?;
            let chars: Vec<Character> =
                lambda_box(&nil, radius).into_iter().map(|l| Character::new(&nil, l)).collect::<Result<_, _>>()?;
            let entries = gap_profile(&cfg, &chars);
            let fit = fit_gap_bound(&entries, tau, (radius / 2).max(1));
            let resonant = entries.iter().filter(|e| e.resonant).count();
            let mut headers: Vec<String> = (1..=nil.dim()).map(|i| format!("lambda{i}")).collect();
            headers.push("epsilon".into());
            let rows = entries
                .iter()
                .map(|e| {
                    let mut r: Vec<String> = e.lambda.iter().map(|l| l.to_string()).collect();
                    r.push(format!("{:.17e}", e.epsilon));
                    r
                })
                .collect();
            let body = json!({
                "generators": generators_json(&cfg),
                "radius": radius,
                "resonant": resonant,
                "fit": fit,
                "entries": entries,
            });
            Ok((Report { body, table: Some((headers, rows)), exit: 0 }, Some(hash), Some(seed), out))
        }
        Command::Correlate { alg, lambda, n_list, samples, seed, out } => {
            let (a, hash) = load_algebra(&alg)?;
            let (nil, cfg) = walk_setup(a, seed)?;
            let chi = Character::new(&nil, default_lambda(&nil, lambda))?;
            let predicted = gap_profile(&cfg, std::slice::from_ref(&chi))[0].z();
            let obs = Observable::Character(chi.clone());
            let est = estimate_correlation(&nil, &cfg, &obs, &obs, &n_list, samples)?;
            let headers = ["N", "estimate", "estimate_im", "stderr", "samples"].map(String::from).to_vec();
            let rows = est
                .iter()
                .map(|e| {
                    vec![e.n.to_string(), format!("{:.17e}", e.re), format!("{:.17e}", e.im), format!("{:.17e}", e.stderr), e.samples.to_string()]
                })
                .collect();
            let body = json!({
                "generators": generators_json(&cfg),
                "lambda": chi.lambda,
                "estimates": est,
                "predicted": est.iter().map(|e| {
                    let z = predicted.powu(e.n as u32);
                    json!({"N": e.n, "re": z.re, "im": z.im})
                }).collect::<Vec<_>>(),
            });
            Ok((Report { body, table: Some((headers, rows)), exit: 0 }, Some(hash), Some(seed), out))
        }
        Command::Clt { alg, lambda, length: n, samples, seed, out } => {
            let (a, hash) = load_algebra(&alg)?;
            let (nil, cfg) = walk_setup(a, seed)?;
            let chi = Character::new(&nil, default_lambda(&nil, lambda))?;
            let z = gap_profile(&cfg, std::slice::from_ref(&chi))[0].z();
            let obs = Observable::RealPart(chi.clone());
            let report = clt_experiment(&nil, &cfg, &obs, n, samples)?;
            let mv = martingale_variance(&nil, &cfg, &obs, n.min(64), samples.min(1000))?;
            let exit = if report.pass { 0 } else { EXIT_VIOLATION };
            let body = json!({
                "generators": generators_json(&cfg),
                "lambda": chi.lambda,
                "report": report,
                "martingale_variance": mv,
                "closed_form_sigma2": single_character_sigma2(z),
            });
            Ok((Report::json(body, exit), Some(hash), Some(seed), out))
        }
        Command::CosineBound { grid, out } => {
            let r = lemma_a1_check(grid);
            let exit = if r.max_residual <= 1e-12 { 0 } else { EXIT_VIOLATION };
            Ok((Report::json(json!(r), exit), None, None, out))
        }
    }
}

fn render(report: &Report, provenance: &Value, format: Format) -> CliResult<String> {
    match (format, &report.table) {
        (Format::Json, _) => {
            let doc = json!({"provenance": provenance, "result": report.body});
            Ok(serde_json::to_string_pretty(&doc).expect("serializable") + "\n")
        }
        (Format::Csv, Some((headers, rows))) => {
            let mut out = format!("# {}\n", serde_json::to_string(provenance).expect("serializable"));
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(headers).map_err(|e| Failure::Usage(e.to_string()))?;
            for r in rows {
                w.write_record(r).map_err(|e| Failure::Usage(e.to_string()))?;
            }
            out.push_str(&String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8"));
            Ok(out)
        }
        (Format::Csv, None) => Err(Failure::Usage("this subcommand has no tabular output; use --format json".into())),
    }
}

/// Command-line arguments without the output path.
fn recorded_args(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("NILWALK_THREADS") {
        let n: usize = v.parse().map_err(|_| Failure::Usage(format!("NILWALK_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| {
        let (report, hash, seed, out) = run(cli.command)?;
        let provenance = json!({
            "tool": "nilwalk",
            "version": env!("CARGO_PKG_VERSION"),
            "args": recorded_args(&argv[1..]),
            "algebra_sha256": hash,
            "seed": seed,
        });
        let text = render(&report, &provenance, out.format)?;
        match &out.out {
            Some(path) => fs::write(path, &text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
            None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Usage(e.to_string()))?,
        }
        Ok(report.exit)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::NotIntegral(_) | Error::NotNilpotent { .. } | Error::Resonance(_) | Error::IllDefinedCharacter(_) => {
                    EXIT_VIOLATION
                }
                _ => EXIT_USAGE,
            };
            ExitCode::from(code)
        }
    }
}
