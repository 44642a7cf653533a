//! `clw`: command-line front end.
//!
//! Exit status is 0 on success or equality, 1 on a mismatch or violation,
//! and 2 on a usage error or unusable input.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use clw::formula::{check_wellformed, eval, eval_table, parse_formula, Env, Var};
use clw::gen;
use clw::io::{parse_borel, parse_structure, IoError};
use clw::scott::{
    gh_bruteforce, gh_rank, rank_table, scott_formula, FiniteSpace, RankEngine, ScottError,
    DEFAULT_ALPHA_CEILING,
};
use clw::structure::{iso_check, tuples, Signature, StructureCode, StructureError};
use clw::synthesis::{env_for, synthesize, verify_formula_all_u, PrefixPolicy, StructureClass, SynthesisError};
use clw::vaught::{default_budget, AStarOracle, BorelCode, VaughtError};

#[derive(Parser)]
#[command(name = "clw", version, about = "Continuous infinitary logic over finite metric structures")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,
    /// Cap on enumerated tuples; overrides CLW_BUDGET.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    budget: Option<u64>,
    /// Write the main output here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check a structure file against the metric and modulus axioms.
    Validate { structure: PathBuf },
    /// Evaluate a formula (text or file) in a structure.
    Eval {
        formula: String,
        structure: PathBuf,
        /// Assignment such as `x=0,y=1`.
        #[arg(long, default_value = "")]
        env: String,
    },
    /// Lower a Borel code to a formula in x0..x{k-1}.
    Synthesize {
        code: PathBuf,
        #[arg(short, default_value_t = 0)]
        k: usize,
        /// Compare with the oracle at every u on these structures.
        #[arg(long, num_args = 1..)]
        verify: Vec<PathBuf>,
        /// Emit this many members per negation-case join (a lower bound).
        #[arg(long)]
        prefix: Option<usize>,
        /// Certify the truncation on every structure at most this large
        /// with least positive truncated distance at least `--min-distance`.
        #[arg(long, requires = "min_distance")]
        max_size: Option<usize>,
        #[arg(long)]
        min_distance: Option<String>,
        /// Multiply the certified prefix length.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        multiplier: u64,
    },
    /// The Vaught transform by enumeration.
    Astar {
        code: PathBuf,
        structure: PathBuf,
        #[arg(short, default_value_t = 0)]
        k: usize,
        /// Point indices such as `0,2`; all of points^k when omitted.
        #[arg(short)]
        u: Option<String>,
    },
    /// Gromov–Hausdorff distance from stabilized ranks.
    GhRank {
        x: PathBuf,
        y: PathBuf,
        /// Cross-check against the correspondence search.
        #[arg(long)]
        check: bool,
    },
    /// The formula ψ_{α,ā} of a finite space.
    ScottFormula {
        space: PathBuf,
        #[arg(long)]
        alpha: usize,
        #[arg(short, default_value_t = 0)]
        n: usize,
        /// Tuple ā such as `0,1`; zeros when omitted.
        #[arg(long)]
        a: Option<String>,
    },
    /// Search for an isomorphism after quotienting zero distances.
    IsoCheck { a: PathBuf, b: PathBuf },
    /// Rank values r_α(ā, b̄) as CSV.
    RankTable {
        x: PathBuf,
        y: PathBuf,
        #[arg(long, default_value_t = 2)]
        alpha_max: usize,
        #[arg(long, default_value_t = 1)]
        n_max: usize,
    },
    /// Stabilization rank of a pair of spaces.
    Stabilize {
        x: PathBuf,
        y: PathBuf,
        #[arg(long)]
        n_probe: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_ALPHA_CEILING)]
        alpha_ceiling: usize,
    },
    /// Seeded random synthesis and distance checks.
    Sweep {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        codes: usize,
        #[arg(long, default_value_t = 4)]
        structures: usize,
        #[arg(long, default_value_t = 4)]
        spaces: usize,
    },
}

/// Input that cannot be used; exit 2.
enum Failure {
    Input { code: &'static str, message: String },
}

fn input(code: &'static str, message: impl ToString) -> Failure {
    Failure::Input { code, message: message.to_string() }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        input(e.code(), e)
    }
}

impl From<StructureError> for Failure {
    fn from(e: StructureError) -> Self {
        input(e.code(), e)
    }
}

impl From<ScottError> for Failure {
    fn from(e: ScottError) -> Self {
        input(e.code(), e)
    }
}

impl From<VaughtError> for Failure {
    fn from(e: VaughtError) -> Self {
        input(e.code(), e)
    }
}

impl From<clw::formula::FormulaError> for Failure {
    fn from(e: clw::formula::FormulaError) -> Self {
        input(e.code(), e)
    }
}

impl From<SynthesisError> for Failure {
    fn from(e: SynthesisError) -> Self {
        input(e.code(), e)
    }
}

struct Report {
    human: String,
    json: Value,
    /// Set for a mismatch or violation.
    failed: bool,
}

impl Report {
    fn ok(human: String, json: Value) -> Self {
        Report { human, json, failed: false }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input("Io", format!("{}: {e}", path.display())))
}

fn load_structure(path: &Path) -> Result<StructureCode, Failure> {
    let p = parse_structure(&read(path)?)?;
    p.validate()?;
    Ok(p)
}

fn load_space(path: &Path) -> Result<FiniteSpace, Failure> {
    let p = parse_structure(&read(path)?)?;
    p.validate_metric()?;
    Ok(FiniteSpace::from_structure(&p.quotient_zero_distance()?)?)
}

fn load_code(path: &Path) -> Result<(Signature, BorelCode), Failure> {
    let (sig, code) = parse_borel(&read(path)?)?;
    code.validate(&sig)?;
    Ok((sig, code))
}

/// Every symbol of `sig` is declared identically in `wide`.
fn extends(wide: &Signature, sig: &Signature) -> bool {
    sig.predicates().iter().all(|s| wide.predicates().contains(s))
}

fn parse_indices(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| input("Usage", format!("bad index `{s}`"))))
        .collect()
}

fn parse_env(text: &str) -> Result<Env, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (name, value) = item.split_once('=').ok_or_else(|| input("Usage", format!("bad binding `{item}`")))?;
            let value = value.trim().parse().map_err(|_| input("Usage", format!("bad point index in `{item}`")))?;
            Ok((Var::new(name.trim()), value))
        })
        .collect()
}

fn tuple_text(t: &[usize]) -> String {
    t.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn validate(path: &Path) -> Result<Report, Failure> {
    let p = parse_structure(&read(path)?)?;
    Ok(match p.validate() {
        Ok(()) => Report::ok("valid".into(), json!({"valid": true})),
        Err(e) => Report {
            human: format!("invalid: {}: {e}", e.code()),
            json: json!({"valid": false, "error": {"code": e.code(), "message": e.to_string()}}),
            failed: true,
        },
    })
}

fn eval_cmd(formula: &str, structure: &Path, env: &str) -> Result<Report, Failure> {
    let p = load_structure(structure)?;
    let text = if Path::new(formula).is_file() { read(Path::new(formula))? } else { formula.to_string() };
    let f = parse_formula(text.trim(), p.signature())?;
    let env = parse_env(env)?;
    check_wellformed(&f, p.signature(), Some(&env.keys().cloned().collect()))?;
    let result = eval(&f, &p, &env)?;
    Ok(Report::ok(result.to_string(), json!({"value": result.value, "tag": result.tag})))
}

fn policy_for(
    verify: &[StructureCode],
    prefix: Option<usize>,
    max_size: Option<usize>,
    min_distance: Option<&str>,
    multiplier: usize,
) -> Result<PrefixPolicy, Failure> {
    if let Some(n) = prefix {
        return Ok(PrefixPolicy::Fixed(n));
    }
    let mut class = StructureClass::covering(verify);
    match max_size {
        Some(max_size) => {
            let delta: clw::Rational = min_distance
                .unwrap_or_default()
                .parse()
                .map_err(|_| input("Usage", "`--min-distance` must be a positive rational"))?;
            if delta.is_negative() || delta.is_zero() {
                return Err(input("Usage", "`--min-distance` must be a positive rational"));
            }
            class.max_size = class.max_size.max(max_size);
            class.min_distance = Some(match class.min_distance {
                Some(d) => d.min_of(delta),
                None => delta,
            });
        }
        None if verify.is_empty() => {
            return Err(input("Usage", "give `--verify`, `--max-size` with `--min-distance`, or `--prefix`"))
        }
        None => {}
    }
    Ok(PrefixPolicy::Certified { class, multiplier })
}

#[allow(clippy::too_many_arguments)]
fn synthesize_cmd(
    code_path: &Path,
    k: usize,
    verify: &[PathBuf],
    prefix: Option<usize>,
    max_size: Option<usize>,
    min_distance: Option<&str>,
    multiplier: usize,
    budget: u64,
) -> Result<Report, Failure> {
    let (sig, code) = load_code(code_path)?;
    let structures = verify.iter().map(|p| load_structure(p)).collect::<Result<Vec<_>, _>>()?;
    for (path, p) in verify.iter().zip(&structures) {
        if !extends(p.signature(), &sig) {
            return Err(input("SignatureMismatch", format!("{} lacks a symbol of the code", path.display())));
        }
    }
    let policy = policy_for(&structures, prefix, max_size, min_distance, multiplier)?;
    let phi = synthesize(&code, k, &sig, &policy)?;
    let formula = phi.to_string();
    if verify.is_empty() {
        return Ok(Report::ok(formula.clone(), json!({"formula": formula})));
    }
    let mut equal = 0;
    let mut lines = Vec::new();
    let mut entries = Vec::new();
    for (path, p) in verify.iter().zip(&structures) {
        let name = path.display().to_string();
        let table = eval_table(&phi, p)?;
        let oracle = AStarOracle::new(&code, p, k, budget)?;
        let mut instances = 0;
        let mut mismatch = None;
        for u in tuples(p.size(), k) {
            instances += 1;
            let lhs = table.get(&env_for(&u))?.clone();
            let rhs = oracle.value(&u)?;
            if lhs != rhs && mismatch.is_none() {
                mismatch = Some((u, lhs, rhs));
            }
        }
        match mismatch {
            None => {
                equal += 1;
                lines.push(format!("{name}: equal on {instances} assignments"));
                entries.push(json!({"structure": name, "verdict": "equal", "instances": instances, "tag": table.tag}));
            }
            Some((u, lhs, rhs)) => {
                lines.push(format!("{name}: mismatch at u = ({}): formula {lhs}, oracle {rhs}", tuple_text(&u)));
                entries.push(json!({
                    "structure": name, "verdict": "mismatch", "instances": instances, "tag": table.tag,
                    "u": u, "formula": lhs, "oracle": rhs,
                }));
            }
        }
    }
    let total = structures.len();
    lines.push(format!("{equal}/{total} equal"));
    Ok(Report {
        human: lines.join("\n"),
        json: json!({"formula": formula, "verification": entries, "equal": equal, "total": total}),
        failed: equal != total,
    })
}

fn astar_cmd(code_path: &Path, structure: &Path, k: usize, u: Option<&str>, budget: u64) -> Result<Report, Failure> {
    let (sig, code) = load_code(code_path)?;
    let p = load_structure(structure)?;
    if !extends(p.signature(), &sig) {
        return Err(input("SignatureMismatch", "structure lacks a symbol of the code"));
    }
    let oracle = AStarOracle::new(&code, &p, k, budget)?;
    let us: Vec<Vec<usize>> = match u {
        Some(text) => vec![parse_indices(text)?],
        None => tuples(p.size(), k).collect(),
    };
    let mut lines = String::new();
    let mut entries = Vec::new();
    for u in us {
        let value = oracle.value(&u)?;
        let _ = writeln!(lines, "({}) {value}", tuple_text(&u));
        entries.push(json!({"u": u, "value": value}));
    }
    Ok(Report::ok(lines.trim_end().to_string(), json!({"k": k, "values": entries})))
}

fn gh_cmd(x: &Path, y: &Path, check: bool, budget: u64) -> Result<Report, Failure> {
    let (xs, ys) = (load_space(x)?, load_space(y)?);
    let result = gh_rank(&xs, &ys)?;
    let mut human = format!("{}\nscale_factor {}\nalpha_star {}", result.value, result.scale_factor, result.alpha_star);
    let mut json = serde_json::to_value(&result).expect("serializable");
    let mut failed = false;
    if check {
        let brute = gh_bruteforce(&xs.scaled(&result.scale_factor), &ys.scaled(&result.scale_factor), budget)?;
        failed = brute != result.value;
        let _ = write!(human, "\nbruteforce {brute} ({})", if failed { "mismatch" } else { "equal" });
        json["bruteforce"] = json!(brute);
        json["equal"] = json!(!failed);
    }
    Ok(Report { human, json, failed })
}

fn scott_cmd(space: &Path, alpha: usize, n: usize, a: Option<&str>, budget: u64) -> Result<Report, Failure> {
    let x = load_space(space)?;
    let a = match a {
        Some(text) => parse_indices(text)?,
        None => vec![0; n],
    };
    if a.len() != n {
        return Err(input("LengthMismatch", format!("`--a` has {} entries, expected {n}", a.len())));
    }
    let psi = scott_formula(&x, alpha, &a, budget)?;
    let text = psi.to_string();
    Ok(Report::ok(text.clone(), json!({"alpha": alpha, "a": a, "formula": text})))
}

fn iso_cmd(a: &Path, b: &Path) -> Result<Report, Failure> {
    let pa = load_structure(a)?.quotient_zero_distance()?;
    let pb = load_structure(b)?.quotient_zero_distance()?;
    Ok(match iso_check(&pa, &pb) {
        Some(iso) => Report::ok(
            format!("isomorphic: {}", tuple_text(&iso.map)),
            json!({"isomorphic": true, "map": iso.map}),
        ),
        None => Report { human: "not isomorphic".into(), json: json!({"isomorphic": false}), failed: true },
    })
}

fn rank_table_cmd(x: &Path, y: &Path, alpha_max: usize, n_max: usize) -> Result<Report, Failure> {
    let (xs, ys) = (load_space(x)?, load_space(y)?);
    let table = rank_table(&xs, &ys, alpha_max, n_max)?;
    let rows: Vec<Value> = table
        .rows()
        .map(|(alpha, n, a, b, v)| json!({"alpha": alpha, "n": n, "a": a, "b": b, "value": v}))
        .collect();
    Ok(Report::ok(table.to_csv().trim_end().to_string(), json!({"rows": rows})))
}

fn stabilize_cmd(x: &Path, y: &Path, n_probe: Option<usize>, ceiling: usize) -> Result<Report, Failure> {
    let (xs, ys) = (load_space(x)?, load_space(y)?);
    let n_probe = n_probe.unwrap_or(xs.size() * ys.size());
    let mut engine = RankEngine::new(&xs, &ys)?;
    let alpha = engine.stabilize(n_probe, ceiling)?;
    Ok(Report::ok(alpha.to_string(), json!({"alpha_star": alpha, "n_probe": n_probe})))
}

fn sweep_cmd(seed: u64, codes: usize, structures: usize, spaces: usize, budget: u64) -> Result<Report, Failure> {
    let mut rng = gen::rng(seed);
    let sig = gen::corpus_signature();
    let shape = gen::BorelShape { depth: 3, max_support: 2, max_members: 2, theta_depth: 2 };
    let ps: Vec<StructureCode> =
        (0..structures).map(|i| gen::random_structure(&mut rng, 1 + i % 4, &sig)).collect();
    let policy = PrefixPolicy::Certified { class: StructureClass::covering(&ps), multiplier: 1 };
    let mut instances = 0usize;
    let mut mismatches = Vec::new();
    for c in 0..codes {
        let code = gen::random_borel(&mut rng, &sig, shape);
        for k in 0..=2 {
            let phi = synthesize(&code, k, &sig, &policy)?;
            for (j, p) in ps.iter().enumerate() {
                match verify_formula_all_u(&phi, &code, p, k, budget) {
                    Ok(v) => instances += v.len(),
                    Err(SynthesisError::Mismatch { u, lhs, rhs }) => {
                        mismatches.push(json!({"code": c, "structure": j, "k": k, "u": u, "formula": lhs, "oracle": rhs}))
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    let xs: Vec<FiniteSpace> = (0..spaces).map(|i| gen::random_space(&mut rng, 1 + i % 4, 8, 4)).collect();
    let mut gh = Vec::new();
    for (i, a) in xs.iter().enumerate() {
        for (j, b) in xs.iter().enumerate().skip(i) {
            let r = gh_rank(a, b)?;
            let brute = gh_bruteforce(&a.scaled(&r.scale_factor), &b.scaled(&r.scale_factor), budget)?;
            if brute != r.value {
                mismatches.push(json!({"x": i, "y": j, "gh_rank": r.value, "bruteforce": brute}));
            }
            gh.push(json!({"x": i, "y": j, "value": r.value, "alpha_star": r.alpha_star}));
        }
    }
    let failed = !mismatches.is_empty();
    let human = format!(
        "seed {seed}: {instances} synthesis instances, {} distance pairs, {} mismatches",
        gh.len(),
        mismatches.len()
    );
    Ok(Report {
        human,
        json: json!({"seed": seed, "instances": instances, "gh": gh, "mismatches": mismatches}),
        failed,
    })
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let budget = cli.budget.unwrap_or_else(default_budget);
    match &cli.command {
        Command::Validate { structure } => validate(structure),
        Command::Eval { formula, structure, env } => eval_cmd(formula, structure, env),
        Command::Synthesize { code, k, verify, prefix, max_size, min_distance, multiplier } => synthesize_cmd(
            code,
            *k,
            verify,
            *prefix,
            *max_size,
            min_distance.as_deref(),
            *multiplier as usize,
            budget,
        ),
        Command::Astar { code, structure, k, u } => astar_cmd(code, structure, *k, u.as_deref(), budget),
        Command::GhRank { x, y, check } => gh_cmd(x, y, *check, budget),
        Command::ScottFormula { space, alpha, n, a } => scott_cmd(space, *alpha, *n, a.as_deref(), budget),
        Command::IsoCheck { a, b } => iso_cmd(a, b),
        Command::RankTable { x, y, alpha_max, n_max } => rank_table_cmd(x, y, *alpha_max, *n_max),
        Command::Stabilize { x, y, n_probe, alpha_ceiling } => stabilize_cmd(x, y, *n_probe, *alpha_ceiling),
        Command::Sweep { seed, codes, structures, spaces } => sweep_cmd(*seed, *codes, *structures, *spaces, budget),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.output {
        Some(path) => std::fs::write(path, format!("{text}\n"))
            .map_err(|e| input("Io", format!("{}: {e}", path.display()))),
        None => {
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|report| {
        let text = match cli.format {
            Format::Human => report.human.clone(),
            Format::Json => serde_json::to_string_pretty(&report.json).expect("serializable"),
        };
        emit(&cli, &text)?;
        Ok(report.failed)
    });
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(Failure::Input { code, message }) => {
            match cli.format {
                Format::Human => eprintln!("error[{code}]: {message}"),
                Format::Json => println!("{}", json!({"error": {"code": code, "message": message}})),
            }
            ExitCode::from(2)
        }
    }
}
