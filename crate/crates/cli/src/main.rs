use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qet_core::code::{Code, Node};
use qet_core::corpus::{parse_cont, render, run_corpus, Corpus, CorpusOpts};
use qet_core::cost::{ExpectedCost, ExpectedValue, FixpointCfg, Probability};
use qet_core::denot::strong_adequacy_check;
use qet_core::invariant::{CheckOpts, Checker, InvariantFile};
use qet_core::lang::program_to_string;
use qet_core::pars::{ecost_approx, expand, expected_value_approx, Config, ExpandOpts, DEFAULT_BRANCH_CAP};
use qet_core::qet::{wp_denotational, wp_eval, wp_step_indexed_expect, with_big_stack};
use qet_core::state::{state_from_json, state_to_json, MachineState};
use qet_core::{Error, Result};

const SCHEMA: &str = "qet-report/1";

#[derive(Parser)]
#[command(name = "qet", version, about = "Expected-cost analysis for classical-quantum while programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse, expand and validate a program; print it with loop labels.
    Parse(Common),
    /// Run the forward semantics for a number of steps.
    Run(Common),
    /// Evaluate the expectation transformer.
    Wp(Common),
    /// Check invariants and summaries, then bound the program.
    Check(Common),
    /// Compare forward and backward engines at matched depth and in the limit.
    Adequacy(Common),
    /// Strong adequacy of the density-map denotation.
    Denot(Common),
    /// Run the case-study corpus and print expected against computed values.
    Corpus(CorpusArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Structure {
    Ecost,
    Value,
    Wp,
    Denot,
}

#[derive(Args)]
struct Knobs {
    /// Forward steps.
    #[arg(long, default_value_t = 800)]
    steps: usize,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BRANCH_CAP)]
    branch_cap: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct Common {
    program: PathBuf,
    /// Initial state: JSON literal or @file.
    #[arg(long)]
    init: Option<String>,
    /// Post-expectation: zero, one, an s-expression or @file.
    #[arg(long, default_value = "zero")]
    cont: String,
    #[arg(long = "cost-structure", alias = "cost", value_enum, default_value = "ecost")]
    cost_structure: Structure,
    /// Invariant and summary file.
    #[arg(long)]
    invariant: Option<PathBuf>,
    /// Random states added to the check suite.
    #[arg(long, default_value_t = 200)]
    suite: usize,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus directory; the bundled copy is used when omitted.
    dir: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    chain_steps: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BRANCH_CAP)]
    branch_cap: usize,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))
}

fn text_or_file(arg: &str) -> Result<String> {
    match arg.strip_prefix('@') {
        Some(p) => read(Path::new(p)),
        None => Ok(arg.to_string()),
    }
}

fn initial_state(code: &Code, init: &Option<String>) -> Result<MachineState> {
    match init {
        None => Ok(MachineState::zero(&code.layout)),
        Some(arg) => {
            let text = text_or_file(arg)?;
            let v: Value =
                serde_json::from_str(&text).map_err(|e| Error::State(format!("initial state is not JSON: {e}")))?;
            state_from_json(&v, &code.layout)
        }
    }
}

fn fixpoint(k: &Knobs) -> Result<FixpointCfg> {
    let cfg = FixpointCfg {
        max_iter: k.max_iter,
        tol: k.tol,
        ..FixpointCfg::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn expand_opts(k: &Knobs) -> Result<ExpandOpts> {
    if k.branch_cap == 0 {
        return Err(Error::Usage("--branch-cap must be positive".into()));
    }
    Ok(ExpandOpts {
        branch_cap: k.branch_cap,
        ..ExpandOpts::default()
    })
}

struct Outcome {
    pass: bool,
    report: Value,
}

fn ok(report: Value) -> Outcome {
    Outcome { pass: true, report }
}

fn cmd_parse(c: &Common) -> Result<Outcome> {
    let code = Code::compile(&read(&c.program)?)?;
    let labels: Vec<Value> = code
        .loops(code.root())
        .into_iter()
        .filter_map(|n| match code.node(n) {
            Node::While { label: Some(l), .. } => Some(json!({"label": l.name, "at": code.span(n).to_string()})),
            _ => None,
        })
        .collect();
    let expanded = program_to_string(&code.program);
    let vars: Vec<Value> = code
        .layout
        .vars()
        .iter()
        .map(|(n, k)| json!({"name": n, "kind": format!("{k:?}")}))
        .collect();
    let regs: Vec<Value> = code.layout.regs().iter().map(|(n, d)| json!({"name": n, "dim": d})).collect();
    println!("{expanded}");
    for l in &labels {
        println!("loop {} at {}", l["label"].as_str().unwrap_or(""), l["at"].as_str().unwrap_or(""));
    }
    Ok(ok(json!({"expanded": expanded, "loops": labels, "vars": vars, "regs": regs})))
}

fn cmd_run(c: &Common) -> Result<Outcome> {
    let code = Code::compile(&read(&c.program)?)?;
    let s = initial_state(&code, &c.init)?;
    let n = c.knobs.steps;
    let r = expand(&code, vec![(1.0, Config::start(&code, code.root(), s))], n, &expand_opts(&c.knobs)?)?;
    println!("steps           {n}");
    println!("expected cost   {}", r.cost.get());
    println!("terminal mass   {}", r.terminal_mass + 0.0);
    println!("residual mass   {}", r.residual_mass);
    println!("running configs {}", r.running.len());
    if let Some(t) = &r.truncation {
        println!("truncated       {} events, mass {}", t.events, t.dropped_mass);
    }
    let mut terminal: Vec<(f64, Value)> = r
        .terminal
        .iter()
        .map(|(w, s)| (*w, state_to_json(s, &code.layout)))
        .collect();
    terminal.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.to_string().cmp(&b.1.to_string())));
    for (w, s) in terminal.iter().take(8) {
        println!("  {w:.9}  {}", s["store"]);
    }
    Ok(ok(json!({
        "steps": n,
        "expected_cost": r.cost,
        "terminal_mass": r.terminal_mass + 0.0,
        "residual_mass": r.residual_mass,
        "running_configs": r.running.len(),
        "truncation": r.truncation,
        "terminal": terminal.iter().map(|(w, s)| json!({"weight": w, "state": s})).collect::<Vec<_>>(),
        "partial": r.residual_mass > 0.0,
    })))
}

fn cmd_wp(c: &Common) -> Result<Outcome> {
    let code = Code::compile(&read(&c.program)?)?;
    let s = initial_state(&code, &c.init)?;
    let cfg = fixpoint(&c.knobs)?;
    if c.cost_structure == Structure::Denot {
        let r = wp_denotational(&code, code.root(), &s, &cfg)?;
        println!("status    {:?}", r.status);
        println!("trace     {}", r.value.total_trace());
        println!("support   {} stores", r.value.entries.len());
        return Ok(ok(json!({"structure": "denot", "result": r})));
    }
    let f = parse_cont(&text_or_file(&c.cont)?)?;
    let root = code.root();
    let r = with_big_stack(|| match c.cost_structure {
        Structure::Ecost => wp_eval(&code, &ExpectedCost, root, &f, &s, &cfg),
        Structure::Value => wp_eval(&code, &ExpectedValue, root, &f, &s, &cfg),
        _ => wp_eval(&code, &Probability, root, &f, &s, &cfg),
    })?;
    println!("value     {}", r.value);
    println!("status    {:?}", r.status);
    println!("iterations {}", r.iterations);
    let name = match c.cost_structure {
        Structure::Ecost => "ecost",
        Structure::Value => "value",
        _ => "wp",
    };
    Ok(ok(json!({"structure": name, "continuation": f.to_string(), "result": r})))
}

fn cmd_check(c: &Common) -> Result<Outcome> {
    let code = Code::compile(&read(&c.program)?)?;
    let path = c
        .invariant
        .as_ref()
        .ok_or_else(|| Error::Usage("check needs --invariant FILE".into()))?;
    let file = InvariantFile::parse(&read(path)?)?;
    let s = initial_state(&code, &c.init)?;
    let opts = CheckOpts {
        tol: c.knobs.tol,
        seed: c.knobs.seed,
        random_states: c.suite,
        ..CheckOpts::default()
    };
    let mut ch = Checker::new(&code, &file, vec![s.clone()], opts)?;
    let cert = ch.certify()?;
    for r in &cert.reports {
        println!("{}", r.headline());
    }
    let bound = if cert.all_passed {
        match ch.bound_states(std::slice::from_ref(&s)) {
            Ok(b) => Some(b[0]),
            Err(Error::Refused(m)) => {
                println!("bound refused: {m}");
                return Ok(Outcome {
                    pass: false,
                    report: json!({"certification": cert, "bound": null, "refused": m}),
                });
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    match bound {
        Some(b) => println!("Pass, bound {b}"),
        None => println!("Fail"),
    }
    Ok(Outcome {
        pass: cert.all_passed,
        report: json!({"verdict": if cert.all_passed {"Pass"} else {"Fail"}, "certification": cert, "bound": bound}),
    })
}

fn cmd_adequacy(c: &Common) -> Result<Outcome> {
    let code = Code::compile(&read(&c.program)?)?;
    let s = initial_state(&code, &c.init)?;
    let f = parse_cont(&text_or_file(&c.cont)?)?;
    let n = c.knobs.steps;
    let cfg0 = Config::start(&code, code.root(), s.clone());
    let opts = expand_opts(&c.knobs)?;
    let fwd_cost = ecost_approx(&code, cfg0.clone(), n, &opts)?.0.get();
    let ev = expected_value_approx(&code, cfg0.clone(), &f, n, &opts)?.get();
    let stepped = wp_step_indexed_expect(&code, &ExpectedCost, &cfg0, &f, n)?.get();
    let limit = with_big_stack(|| wp_eval(&code, &ExpectedCost, code.root(), &f, &s, &fixpoint(&c.knobs)?))?;
    let matched_gap = (stepped - (fwd_cost + ev)).abs();
    let pass = matched_gap <= c.knobs.tol * stepped.abs().max(1.0) && stepped <= limit.value.get() + c.knobs.tol;
    println!("forward ecost^[n] + E_nf f  {}", fwd_cost + ev);
    println!("step-indexed (n = {n})        {stepped}");
    println!("backward limit               {} ({:?})", limit.value, limit.status);
    println!("{}", if pass { "Pass" } else { "Fail" });
    Ok(Outcome {
        pass,
        report: json!({
            "steps": n,
            "forward": fwd_cost + ev,
            "forward_cost": fwd_cost,
            "forward_expectation": ev,
            "step_indexed": stepped,
            "matched_gap": matched_gap,
            "backward": limit,
            "verdict": if pass {"Pass"} else {"Fail"},
        }),
    })
}

fn cmd_denot(c: &Common) -> Result<Outcome> {
    let code = Code::compile(&read(&c.program)?)?;
    let s = initial_state(&code, &c.init)?;
    let r = strong_adequacy_check(&code, &s, c.knobs.steps, c.knobs.tol.max(1e-6))?;
    println!("steps          {}", r.steps);
    println!("terminal mass  {}", r.terminal_mass);
    println!("residual mass  {}", r.residual_mass);
    println!("gap            {}", r.gap);
    println!("matched gap    {}", r.matched_gap);
    println!("Löwner ordered {}", r.loewner_ordered);
    println!("{}", if r.holds { "Pass" } else { "Fail" });
    Ok(Outcome {
        pass: r.holds,
        report: serde_json::to_value(&r).map_err(|e| Error::Invalid(e.to_string()))?,
    })
}

fn cmd_corpus(a: &CorpusArgs) -> Result<Outcome> {
    let corpus = match &a.dir {
        Some(d) => Corpus::from_dir(d)?,
        None => Corpus::bundled(),
    };
    let opts = CorpusOpts {
        seed: a.seed,
        tol: a.tol,
        chain_steps: a.chain_steps,
        branch_cap: a.branch_cap,
    };
    let rows = run_corpus(&corpus, &opts);
    print!("{}", render(&rows));
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!("{} rows, {failed} failed", rows.len());
    Ok(Outcome {
        pass: failed == 0,
        report: json!({"rows": rows, "failed": failed}),
    })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Syntax { .. }
        | Error::UnknownIdent { .. }
        | Error::Duplicate { .. }
        | Error::Arity { .. }
        | Error::Type { .. }
        | Error::Macro(_)
        | Error::State(_)
        | Error::Usage(_)
        | Error::Invalid(_) => 2,
        _ => 1,
    }
}

fn write_json(path: &Path, command: &str, out: &Outcome) -> Result<()> {
    let doc = json!({
        "schema": SCHEMA,
        "command": command,
        "pass": out.pass,
        "report": out.report,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Invalid(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, json_path, result) = match &cli.cmd {
        Cmd::Parse(c) => ("parse", &c.knobs.json, cmd_parse(c)),
        Cmd::Run(c) => ("run", &c.knobs.json, cmd_run(c)),
        Cmd::Wp(c) => ("wp", &c.knobs.json, cmd_wp(c)),
        Cmd::Check(c) => ("check", &c.knobs.json, cmd_check(c)),
        Cmd::Adequacy(c) => ("adequacy", &c.knobs.json, cmd_adequacy(c)),
        Cmd::Denot(c) => ("denot", &c.knobs.json, cmd_denot(c)),
        Cmd::Corpus(a) => ("corpus", &a.json, cmd_corpus(a)),
    };
    match result {
        Ok(out) => {
            if let Some(p) = json_path {
                if let Err(e) = write_json(p, name, &out) {
                    eprintln!("error: {e}");
                    return ExitCode::from(exit_code(&e));
                }
            }
            ExitCode::from(if out.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
