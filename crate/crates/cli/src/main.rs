use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use goi_core::groupoid::{Clause, PartialInjectionOp};
use goi_core::linalg::tau_num;
use goi_core::logic::{
    interpret_mll_goi1, mall_soundness, parse_basis, parse_proof, soundness_check_mll, LogicError, ProofTree,
};
use goi_core::suites::{run_suite, CheckRecord, Status, Suite, SuiteConfig};

const SCHEMA: &str = "goi-report/1";

const EXIT_FAIL: u8 = 1;
const EXIT_SYNTAX: u8 = 2;
const EXIT_RULE: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(name = "goi", version, about = "Check, interpret and verify linear logic proofs as operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and rule-check a proof file.
    Check { file: PathBuf },
    /// Interpret a checked proof.
    Interpret {
        proof: PathBuf,
        basis: PathBuf,
        #[arg(long, value_enum, default_value = "matricial")]
        backend: Backend,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the seeded property suites.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = goi_core::sampling::DEFAULT_SEED, value_parser = parse_seed)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Flip one weight sign in the first fax and in the With project.
        #[arg(long)]
        mutate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Backend {
    Goi1,
    Matricial,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SuiteArg {
    Identities,
    Coherence,
    Soundness,
    All,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    }
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Report {
    schema: &'static str,
    command: Value,
    tolerance: f64,
    status: Status,
    checks: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<Value>,
}

impl Report {
    fn new(command: Value) -> Self {
        Self { schema: SCHEMA, command, tolerance: tau_num(), status: Status::Pass, checks: Vec::new(), result: None, error: None }
    }

    fn failed(mut self, error: Value) -> Self {
        self.status = Status::Fail;
        self.error = Some(error);
        self
    }

    fn settle(&mut self) {
        if self.checks.iter().any(|c| c.status == Status::Fail) {
            self.status = Status::Fail;
        } else if self.checks.iter().any(|c| c.status == Status::Indeterminate) && self.status == Status::Pass {
            self.status = Status::Indeterminate;
        }
    }
}

fn emit(report: &Report, out: Option<&Path>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    match out {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| format!("{}: {e}", p.display())),
        None => {
            use std::io::Write;
            // a closed pipe is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
    }
}

fn error_code(e: &LogicError) -> u8 {
    match e {
        LogicError::Syntax(_) => EXIT_SYNTAX,
        LogicError::Rule(_) => EXIT_RULE,
        LogicError::MissingVariable(_) | LogicError::Basis(_) | LogicError::Unsupported(_) => EXIT_CONFIG,
        LogicError::Project(_) | LogicError::Exec(_) => EXIT_FAIL,
    }
}

fn error_value(e: &LogicError, path: &Path) -> Value {
    let mut v = json!({ "kind": kind_name(e), "message": e.to_string(), "input": path.display().to_string() });
    match e {
        LogicError::Syntax(s) => {
            v["line"] = json!(s.line);
            v["column"] = json!(s.column);
        }
        LogicError::Rule(r) => {
            v["rule"] = json!(r.rule);
            v["path"] = json!(r.path);
        }
        _ => {}
    }
    v
}

fn kind_name(e: &LogicError) -> &'static str {
    match e {
        LogicError::Syntax(_) => "syntax",
        LogicError::Rule(_) => "rule",
        LogicError::MissingVariable(_) => "missing_variable",
        LogicError::Basis(_) => "basis",
        LogicError::Unsupported(_) => "unsupported",
        LogicError::Project(_) => "project",
        LogicError::Exec(_) => "execution",
    }
}

fn read(path: &Path) -> Result<String, (u8, Value)> {
    std::fs::read_to_string(path)
        .map_err(|e| (EXIT_CONFIG, json!({ "kind": "io", "message": e.to_string(), "input": path.display().to_string() })))
}

fn load_proof(path: &Path) -> Result<ProofTree, (u8, Value)> {
    let text = read(path)?;
    parse_proof(&text).map_err(|e| (error_code(&e), error_value(&e, path)))
}

fn check_record(name: &str, ok: bool, detail: String, input: &Path) -> CheckRecord {
    CheckRecord {
        name: name.to_string(),
        status: if ok { Status::Pass } else { Status::Fail },
        trials: 1,
        values: Default::default(),
        detail,
        reproducer: (!ok).then(|| input.display().to_string()),
    }
}

fn cmd_check(file: &Path) -> (u8, Report) {
    let report = Report::new(json!({ "name": "check", "file": file.display().to_string() }));
    match load_proof(file) {
        Ok(p) => {
            let mut report = report;
            report.result = Some(json!({
                "conclusion": p.conclusion_formulas().iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                "cuts": p.cut_count(),
                "depth": p.depth(),
                "mll": p.is_mll(),
                "rules": p.rules_used(),
            }));
            (0, report)
        }
        Err((code, e)) => (code, report.failed(e)),
    }
}

fn clause_text(c: &Clause) -> String {
    if c.weight == goi_core::linalg::cr(1.0) {
        format!("{} <- {}", c.target, c.source)
    } else {
        format!("({}) {} <- {}", c.weight, c.target, c.source)
    }
}

fn op_text(op: &PartialInjectionOp) -> Value {
    match op {
        PartialInjectionOp::Clauses(cs) => json!(cs.iter().map(clause_text).collect::<Vec<_>>()),
        other => serde_json::to_value(other).expect("serializes"),
    }
}

fn interpret_goi1(p: &ProofTree, proof: &Path, report: &mut Report) -> Result<(), (u8, Value)> {
    let err = |e: LogicError| (error_code(&e), error_value(&e, proof));
    let it = interpret_mll_goi1(p).map_err(err)?;
    let s = soundness_check_mll(p).map_err(err)?;
    report.result = Some(json!({
        "backend": "goi1",
        "pi": op_text(&it.pi),
        "sigma": op_text(&it.sigma),
        "sigma_support": it.cut_words.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "addresses": it.addresses.iter().map(|(k, w)| (k.to_string(), w.to_string())).collect::<std::collections::BTreeMap<_, _>>(),
        "nilpotency_degree": s.nilpotency_degree,
        "execution": s.execution_clauses,
        "normal_form": s.normal_form_clauses,
    }));
    report.checks.push(check_record("proof_is_symmetry", s.proof_is_symmetry, "π is a partial symmetry".into(), proof));
    report.checks.push(check_record("cuts_are_symmetry", s.cuts_are_symmetry, "σ is a partial symmetry".into(), proof));
    report.checks.push(check_record(
        "execution_matches_normal_form",
        s.holds,
        "execution equals the interpretation of the cut-free form".into(),
        proof,
    ));
    Ok(())
}

fn interpret_matricial(p: &ProofTree, proof: &Path, basis_path: &Path, report: &mut Report) -> Result<(), (u8, Value)> {
    let text = read(basis_path)?;
    let berr = |e: LogicError| (error_code(&e), error_value(&e, basis_path));
    let basis = parse_basis(&text).map_err(berr)?;
    basis.validate().map_err(berr)?;
    let (a, s) = mall_soundness(p, &basis, None).map_err(|e| (error_code(&e), error_value(&e, proof)))?;
    let support: usize = a.op.blocks().iter().map(|b| b.entries().iter().filter(|x| x.norm() > tau_num()).count()).sum();
    report.result = Some(json!({
        "backend": "matricial",
        "carrier": a.carrier,
        "dialect": a.dialect().blocks,
        "pseudo_trace": a.pseudo_trace().weights,
        "wager": a.wager,
        "support": support,
        "promising": s.promising,
        "witnesses": s.witnesses,
    }));
    let r = &s.promising;
    for (name, ok) in [
        ("dialect", r.dialect),
        ("pseudo_trace", r.pseudo_trace),
        ("wager", r.wager),
        ("symmetry", r.symmetry),
        ("traces", r.traces),
    ] {
        let detail = if ok { "holds" } else { "violated" };
        report.checks.push(check_record(&format!("promising.{name}"), ok, detail.into(), proof));
    }
    let bad = s.witnesses.iter().filter(|w| !w.verdict.orthogonal).count();
    report.checks.push(check_record(
        "witness_orthogonality",
        bad == 0,
        format!("{} of {} dual witnesses orthogonal", s.witnesses.len() - bad, s.witnesses.len()),
        proof,
    ));
    Ok(())
}

fn cmd_interpret(proof: &Path, basis: &Path, backend: Backend) -> (u8, Report) {
    let mut report = Report::new(json!({
        "name": "interpret",
        "proof": proof.display().to_string(),
        "basis": basis.display().to_string(),
        "backend": backend,
    }));
    let run = |report: &mut Report| -> Result<(), (u8, Value)> {
        let p = load_proof(proof)?;
        match backend {
            Backend::Goi1 => interpret_goi1(&p, proof, report),
            Backend::Matricial => interpret_matricial(&p, proof, basis, report),
        }
    };
    match run(&mut report) {
        Ok(()) => {
            report.settle();
            let code = if report.status == Status::Fail { EXIT_FAIL } else { 0 };
            (code, report)
        }
        Err((code, e)) => (code, report.failed(e)),
    }
}

fn cmd_verify(suite: SuiteArg, seed: u64, trials: usize, mutate: bool) -> (u8, Report) {
    let mut report = Report::new(json!({
        "name": "verify",
        "suite": suite,
        "seed": seed,
        "trials": trials,
        "mutate": mutate,
    }));
    let cfg = SuiteConfig { seed, trials, mutate };
    let suites: Vec<Suite> = match suite {
        SuiteArg::Identities => vec![Suite::Identities],
        SuiteArg::Coherence => vec![Suite::Coherence],
        SuiteArg::Soundness => vec![Suite::Soundness],
        SuiteArg::All => Suite::ALL.to_vec(),
    };
    for s in suites {
        report.checks.extend(run_suite(s, &cfg));
    }
    report.settle();
    let code = if report.status == Status::Fail { EXIT_FAIL } else { 0 };
    (code, report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (code, report, out) = match cli.command {
        Command::Check { file } => {
            let (c, r) = cmd_check(&file);
            (c, r, None)
        }
        Command::Interpret { proof, basis, backend, out } => {
            let (c, r) = cmd_interpret(&proof, &basis, backend);
            (c, r, out)
        }
        Command::Verify { suite, seed, trials, mutate, out } => {
            let (c, r) = cmd_verify(suite, seed, trials, mutate);
            (c, r, out)
        }
    };
    if let Err(e) = emit(&report, out.as_deref()) {
        eprintln!("goi: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    if let Some(e) = &report.error {
        eprintln!("goi: {}", e["message"].as_str().unwrap_or("error"));
    }
    ExitCode::from(code)
}
