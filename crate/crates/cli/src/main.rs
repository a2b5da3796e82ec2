//! `fairassign` command-line front end.
//!
//! Exit codes: 0 ok, 2 parse error, 3 infeasible or invalid input, 4 oracle
//! budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use fairassign::assign::{theorem1_bound, Heuristic, SubroutineOptions};
use fairassign::baselines::{hard_bruteforce, OracleBudget};
use fairassign::coverage::{coverage_objective, TopicProfile};
use fairassign::experiments::crowd::CorpusSpec;
use fairassign::experiments::report::report_csv;
use fairassign::experiments::sweep::{world_recovery, World};
use fairassign::experiments::{
    crowd_eval, fairness_report, generate_case, run_recovery_sweep, solve, synthetic_corpus, Algorithm, CaseId,
    CaseSpec, CrowdConfig, ResponseMatrix, SweepConfig, SweepRecord,
};
use fairassign::extreal::{round_sig, ExtReal};
use fairassign::io::{read_loads_json, read_similarity_csv, read_world_json, write_assignment_csv};
use fairassign::metrics::{cumulative_quality, paper_sum_profile, validate_assignment};
use fairassign::{peer_review_4all, Error, LoadConstraints, Mode, NoiseFn, Pr4aOptions, SimilarityMatrix, Transform};

#[derive(Parser)]
#[command(name = "fairassign", version, about = "Max-min fair reviewer assignment")]
struct Cli {
    /// Worker threads for parallel trials (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one assignment.
    Assign(AssignArgs),
    /// Fairness and cumulative similarity of several algorithms.
    Report(ReportArgs),
    /// Monte Carlo top-k recovery sweep.
    Simulate(SimulateArgs),
    /// Majority-vote evaluation on crowd responses.
    CrowdEval(CrowdArgs),
    /// Exact fairness optimum on a small instance.
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Similarity CSV.
    similarity: PathBuf,
    /// Loads JSON: {"lambda": .., "mu": ..}.
    loads: PathBuf,
}

#[derive(Args, Clone)]
struct TransformArgs {
    /// identity | inverse-one-minus-s | inverse-h | one-minus-h | threshold:<zeta>
    #[arg(long = "f", default_value = "inverse-one-minus-s")]
    f: String,
    /// Noise function: one-minus-s | scaled:<c> | constant:<c>
    #[arg(long = "h", default_value = "one-minus-s")]
    h: String,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum HeuristicArg {
    Maxcost,
    Coverage,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Full,
    EarlyStop,
}

#[derive(Args)]
struct AssignArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    transform: TransformArgs,
    #[arg(long, value_enum, default_value = "maxcost")]
    heuristic: HeuristicArg,
    /// Topic profiles JSON, required with --heuristic coverage.
    #[arg(long)]
    topics: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "full")]
    mode: ModeArg,
    /// pr4a | tpms | hartvigsen | random
    #[arg(long, default_value = "pr4a")]
    algorithm: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    transform: TransformArgs,
    /// Comma-separated algorithm names.
    #[arg(long, default_value = "pr4a,tpms,hartvigsen,random")]
    algorithms: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for report.csv, report.json and manifest.json.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Synthetic case: c1 | c2 | c3 | c5.
    #[arg(long, conflicts_with = "similarity")]
    case: Option<String>,
    /// Reviewers and papers of the synthetic case.
    #[arg(long, num_args = 2, value_names = ["N", "M"], default_values_t = [100, 100])]
    size: Vec<usize>,
    /// Similarity CSV instead of a synthetic case.
    #[arg(long)]
    similarity: Option<PathBuf>,
    /// Sweep configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Fixed world JSON; runs repeated sampling in that world instead of the
    /// delta sweep.
    #[arg(long)]
    world: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CrowdArgs {
    /// Responses CSV; omit together with --key to use the synthetic corpus.
    #[arg(long, requires = "key")]
    responses: Option<PathBuf>,
    #[arg(long, requires = "responses")]
    key: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "pr4a,tpms,hartvigsen,random")]
    algorithms: String,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    transform: TransformArgs,
    /// Search node budget.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    inputs: Vec<String>,
    config: serde_json::Value,
    version: &'static str,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Io(_) => 2,
        Error::OracleBudget(_) => 4,
        _ => 3,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, content: &str) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), content)?;
    Ok(())
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<(), Error> {
    write(dir, "manifest.json", &(serde_json::to_string_pretty(m).expect("serializable") + "\n"))
}

fn load_instance(args: &InstanceArgs) -> Result<(SimilarityMatrix, LoadConstraints), Error> {
    let s = read_similarity_csv(&read(&args.similarity)?)?;
    let lc = read_loads_json(&read(&args.loads)?, s.n_reviewers(), s.n_papers())?;
    Ok((s, lc))
}

fn parse_transform(args: &TransformArgs) -> Result<(Transform, NoiseFn), Error> {
    let h: NoiseFn = args.h.parse()?;
    Ok((Transform::parse_with_noise(&args.f, h)?, h))
}

fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>, Error> {
    list.split(',').map(|a| a.trim().parse()).collect()
}

fn paths(ps: &[&Path]) -> Vec<String> {
    ps.iter().map(|p| p.display().to_string()).collect()
}

fn ext(v: f64) -> String {
    ExtReal(round_sig(v, 10)).to_string()
}

fn cmd_assign(args: &AssignArgs, as_json: bool) -> Result<(), Error> {
    let (s, lc) = load_instance(&args.instance)?;
    let (f, h) = parse_transform(&args.transform)?;
    let alg: Algorithm = args.algorithm.parse()?;
    let topics = match (args.heuristic, &args.topics) {
        (HeuristicArg::Coverage, Some(p)) => Some(TopicProfile::from_json(&read(p)?, &s)?),
        (HeuristicArg::Coverage, None) => {
            return Err(Error::InvalidInput("--heuristic coverage needs --topics".into()))
        }
        (HeuristicArg::Maxcost, _) => None,
    };
    let (a, trace) = match alg {
        Algorithm::Pr4a => {
            let opts = Pr4aOptions {
                mode: match args.mode {
                    ModeArg::Full => Mode::Full,
                    ModeArg::EarlyStop => Mode::EarlyStop,
                },
                subroutine: SubroutineOptions {
                    heuristic: topics.as_ref().map_or(Heuristic::MaxCost, Heuristic::Coverage),
                    ..Default::default()
                },
            };
            let (a, t) = peer_review_4all(&s, &lc, &f, &opts)?;
            (a, Some(t))
        }
        Algorithm::Hard => return Err(Error::InvalidInput("use the oracle command for the exact solver".into())),
        other => (solve(other, &s, &lc, &f, args.seed)?, None),
    };
    validate_assignment(&a, &s, &lc)?;
    let profile = paper_sum_profile(&a, &s, &f)?;
    let fairness = profile.first().copied().unwrap_or(f64::INFINITY);
    let cumulative = cumulative_quality(&a, &s)?;
    let mut summary = json!({
        "algorithm": alg,
        "fairness": ExtReal(round_sig(fairness, 10)),
        "cumulative": round_sig(cumulative, 10),
        "profile": profile.iter().map(|&v| ExtReal(round_sig(v, 10))).collect::<Vec<_>>(),
        "iterations": trace.as_ref().map(|t| &t.iterations),
        "early_stopped": trace.as_ref().map(|t| t.early_stopped),
    });
    if let Some(tp) = &topics {
        summary["coverage"] = json!(coverage_objective(&a, tp));
    }
    write(&args.out, "assignment.csv", &write_assignment_csv(&a, &s))?;
    write(&args.out, "trace.json", &(serde_json::to_string_pretty(&summary).expect("serializable") + "\n"))?;
    let mut inputs = vec![args.instance.similarity.as_path(), args.instance.loads.as_path()];
    if let Some(p) = &args.topics {
        inputs.push(p);
    }
    write_manifest(
        &args.out,
        &Manifest {
            command: "assign",
            inputs: paths(&inputs),
            config: json!({
                "lambda": lc.paper_demand,
                "mu": lc.reviewer_capacity,
                "f": f.to_string(),
                "h": h.to_string(),
                "heuristic": args.heuristic,
                "mode": args.mode,
                "algorithm": alg,
                "seed": args.seed,
            }),
            version: env!("CARGO_PKG_VERSION"),
        },
    )?;
    if as_json {
        println!("{summary}");
    } else {
        println!("algorithm={alg} fairness={} cumulative={}", ext(fairness), ext(cumulative));
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs, as_json: bool) -> Result<(), Error> {
    let (s, lc) = load_instance(&args.instance)?;
    let (f, h) = parse_transform(&args.transform)?;
    let algs = parse_algorithms(&args.algorithms)?;
    let rows = fairness_report(&s, &lc, &f, &algs, args.seed);
    let csv = report_csv(&rows)?;
    let rows_json = serde_json::to_string(&rows).expect("serializable");
    if let Some(dir) = &args.out {
        write(dir, "report.csv", &csv)?;
        write(dir, "report.json", &(rows_json.clone() + "\n"))?;
        write_manifest(
            dir,
            &Manifest {
                command: "report",
                inputs: paths(&[&args.instance.similarity, &args.instance.loads]),
                config: json!({"f": f.to_string(), "h": h.to_string(), "algorithms": algs, "seed": args.seed}),
                version: env!("CARGO_PKG_VERSION"),
            },
        )?;
    }
    if as_json {
        println!("{rows_json}");
    } else {
        print!("{csv}");
    }
    if rows.iter().all(|r| r.failure.is_some()) {
        return Err(Error::InvalidInput("every algorithm failed".into()));
    }
    Ok(())
}

fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from("case,algorithm,delta,t,mean,stderr,prob,prob_stderr,trials,failure\n");
    let opt = |v: Option<f64>| v.map(|x| round_sig(x, 10).to_string()).unwrap_or_default();
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.case,
            r.algorithm,
            r.delta,
            r.t,
            opt(r.mean),
            opt(r.stderr),
            opt(r.prob),
            opt(r.prob_stderr),
            r.trials,
            r.failure.as_deref().unwrap_or("").replace(',', ";")
        ));
    }
    out
}

fn cmd_simulate(args: &SimulateArgs, as_json: bool) -> Result<(), Error> {
    let mut cfg: SweepConfig =
        serde_json::from_str(&read(&args.config)?).map_err(|e| Error::Parse(format!("sweep JSON: {e}")))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let (label, s) = match (&args.case, &args.similarity) {
        (Some(c), None) => {
            let id: CaseId = c.parse()?;
            let spec = CaseSpec::scaled(id, args.size[0], args.size[1]);
            (id.to_string(), generate_case(&spec, cfg.seed)?)
        }
        (None, Some(p)) => (p.display().to_string(), read_similarity_csv(&read(p)?)?),
        _ => return Err(Error::InvalidInput("give exactly one of --case and --similarity".into())),
    };
    let mut inputs = vec![args.config.display().to_string()];
    inputs.extend(args.similarity.iter().map(|p| p.display().to_string()));
    let (jsonl, csv, failed) = if let Some(wp) = &args.world {
        inputs.push(wp.display().to_string());
        let world: World = read_world_json(&read(wp)?)?;
        let lc = LoadConstraints::uniform(s.n_reviewers(), s.n_papers(), cfg.lambda, cfg.mu);
        let recs = world_recovery(
            &world,
            &s,
            &lc,
            &cfg.transform,
            &cfg.algorithms,
            cfg.estimator,
            cfg.shape,
            cfg.trials,
            cfg.seed,
        )?;
        let jsonl: String = recs.iter().map(|r| serde_json::to_string(r).expect("serializable") + "\n").collect();
        let mut csv = String::from("algorithm,prob,stderr,bound,trials,failure\n");
        let opt = |v: Option<f64>| v.map(|x| round_sig(x, 10).to_string()).unwrap_or_default();
        for r in &recs {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.algorithm,
                opt(r.prob),
                opt(r.stderr),
                opt(r.bound),
                r.trials,
                r.failure.as_deref().unwrap_or("").replace(',', ";")
            ));
        }
        (jsonl, csv, recs.iter().all(|r| r.failure.is_some()))
    } else {
        let recs = run_recovery_sweep(&cfg, &label, &s)?;
        let jsonl: String = recs.iter().map(|r| serde_json::to_string(r).expect("serializable") + "\n").collect();
        (jsonl, sweep_csv(&recs), recs.iter().all(|r| r.failure.is_some()))
    };
    write(&args.out, "results.jsonl", &jsonl)?;
    write(&args.out, "curves.csv", &csv)?;
    write_manifest(
        &args.out,
        &Manifest {
            command: "simulate",
            inputs,
            config: json!({
                "case": args.case,
                "size": args.size,
                "sweep": cfg,
            }),
            version: env!("CARGO_PKG_VERSION"),
        },
    )?;
    if as_json {
        print!("{jsonl}");
    } else {
        print!("{csv}");
    }
    if failed {
        return Err(Error::InvalidInput("every algorithm failed".into()));
    }
    Ok(())
}

fn cmd_crowd(args: &CrowdArgs, as_json: bool) -> Result<(), Error> {
    let (rm, inputs) = match (&args.responses, &args.key) {
        (Some(r), Some(k)) => (
            ResponseMatrix::from_csv(&read(r)?, &read(k)?)?,
            paths(&[r.as_path(), k.as_path()]),
        ),
        _ => (synthetic_corpus(&CorpusSpec::default(), args.seed), Vec::new()),
    };
    let cfg = CrowdConfig {
        trials: args.trials,
        seed: args.seed,
        algorithms: parse_algorithms(&args.algorithms)?,
        ..CrowdConfig::default()
    };
    let rows = crowd_eval(&rm, &cfg)?;
    let rows_json = serde_json::to_string(&rows).expect("serializable");
    let opt = |v: Option<f64>| v.map(|x| round_sig(x, 10).to_string()).unwrap_or_default();
    let mut csv = String::from("algorithm,error_mean,error_stderr,fairness_mean,cumulative_mean,trials,failure\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.algorithm,
            opt(r.error_mean),
            opt(r.error_stderr),
            opt(r.fairness_mean),
            opt(r.cumulative_mean),
            r.trials,
            r.failure.as_deref().unwrap_or("").replace(',', ";")
        ));
    }
    if let Some(dir) = &args.out {
        write(dir, "crowd.csv", &csv)?;
        write(dir, "crowd.json", &(rows_json.clone() + "\n"))?;
        write_manifest(
            dir,
            &Manifest {
                command: "crowd-eval",
                inputs,
                config: serde_json::to_value(&cfg).expect("serializable"),
                version: env!("CARGO_PKG_VERSION"),
            },
        )?;
    }
    if as_json {
        println!("{rows_json}");
    } else {
        print!("{csv}");
    }
    if rows.iter().all(|r| r.failure.is_some()) {
        return Err(Error::InvalidInput("every algorithm failed".into()));
    }
    Ok(())
}

fn cmd_oracle(args: &OracleArgs, as_json: bool) -> Result<(), Error> {
    let (s, lc) = load_instance(&args.instance)?;
    let (f, _) = parse_transform(&args.transform)?;
    let budget = OracleBudget {
        max_search_nodes: args.budget,
        ..OracleBudget::default()
    };
    let opt = hard_bruteforce(&s, &lc, &f, &budget)?;
    let (a, _) = peer_review_4all(&s, &lc, &f, &Pr4aOptions::default())?;
    let ours = paper_sum_profile(&a, &s, &f)?.first().copied().unwrap_or(f64::INFINITY);
    let ratio = match (ours, opt.fairness) {
        (x, y) if x == y => 1.0,
        (_, y) if y == 0.0 || y.is_infinite() => 0.0,
        (x, y) => x / y,
    };
    let bound = lc.uniform_demand().map(|_| theorem1_bound(&s, &lc, &f)).transpose()?;
    if as_json {
        println!(
            "{}",
            json!({
                "optimal_fairness": ExtReal(round_sig(opt.fairness, 10)),
                "pr4a_fairness": ExtReal(round_sig(ours, 10)),
                "ratio": round_sig(ratio, 10),
                "bound": bound,
                "nodes_visited": opt.nodes_visited,
                "certificate": opt.assignment.pairs().collect::<Vec<_>>(),
            })
        );
    } else {
        println!("optimal fairness: {}", ext(opt.fairness));
        println!("pr4a fairness:    {}", ext(ours));
        println!("realized ratio:   {}", round_sig(ratio, 10));
        match bound {
            Some(b) => println!("guaranteed ratio: {}", round_sig(b.ratio, 10)),
            None => println!("guaranteed ratio: n/a (non-uniform demand)"),
        }
        println!("nodes visited:    {}", opt.nodes_visited);
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Assign(a) => cmd_assign(a, cli.json),
        Command::Report(a) => cmd_report(a, cli.json),
        Command::Simulate(a) => cmd_simulate(a, cli.json),
        Command::CrowdEval(a) => cmd_crowd(a, cli.json),
        Command::Oracle(a) => cmd_oracle(a, cli.json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
