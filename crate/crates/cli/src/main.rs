//! `virtint`: validate timed test-case diagrams, translate them to timed-arc
//! Petri nets, and check a set of them for mutual consistency.
//!
//! Exit codes: 0 success or consistent, 1 invalid input or inconsistent,
//! 2 I/O, usage or binding problems, 3 inconclusive (a bound was hit).

mod style;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use virtint_core::export::{report_document, to_dot, to_tapaal_xml, ReportDocument, ReportInput};
use virtint_core::integrate::{
    check_consistency, merge, AnalysisReport, CheckOptions, InstanceMap, IntegrateError, Overall,
    Policy, Status, Verdict,
};
use virtint_core::model::Tcsd;
use virtint_core::parser::{parse_architecture, parse_tcsd, Architecture, ParsedTcsd};
use virtint_core::translate::{structural_report, translate, TranslationUnit};

use style::Style;

#[derive(Parser)]
#[command(name = "virtint", version, about = "Virtual integration of timed test cases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate diagram files.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Translate one diagram into a timed-arc Petri net.
    Translate {
        file: PathBuf,
        #[command(flatten)]
        out: Outputs,
    },
    /// Check bound test cases for consistency.
    Check(CheckArgs),
}

#[derive(Args)]
struct Outputs {
    /// Write the net as Graphviz DOT.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the net as TAPAAL XML.
    #[arg(long)]
    tapaal: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Maximal,
    Strict,
}

#[derive(Args)]
struct CheckArgs {
    /// Architecture file with the component bindings.
    #[arg(long)]
    arch: PathBuf,
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Write the analysis as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "maximal")]
    policy: PolicyArg,
    /// Every matching must succeed, not just one.
    #[arg(long)]
    require_all: bool,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_states: u64,
    /// Largest total delay explored; defaults to a bound derived from each
    /// merged net.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_delay: Option<u64>,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    max_matchings: u64,
    /// Accept several test cases per component and check every combination
    /// that takes one per component.
    #[arg(long)]
    cross_product: bool,
    #[command(flatten)]
    out: Outputs,
}

/// Outcome classes, each with a fixed exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Outcome {
    Ok,
    Inconclusive,
    Failed,
    Environment,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::Failed => 1,
            Outcome::Environment => 2,
            Outcome::Inconclusive => 3,
        }
    }
}

struct Failure {
    outcome: Outcome,
    message: String,
}

impl Failure {
    fn env(message: impl Into<String>) -> Self {
        Failure {
            outcome: Outcome::Environment,
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            outcome: Outcome::Failed,
            message: message.into(),
        }
    }
}

impl From<IntegrateError> for Failure {
    fn from(e: IntegrateError) -> Self {
        let outcome = match e {
            IntegrateError::Unmatched(_) | IntegrateError::Reach(_) => Outcome::Failed,
            _ => Outcome::Environment,
        };
        Failure {
            outcome,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let style = Style::from_env();
    let result = match cli.command {
        Command::Validate { files } => cmd_validate(&files, &style),
        Command::Translate { file, out } => cmd_translate(&file, &out, &style),
        Command::Check(args) => cmd_check(&args, &style),
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("{} {}", style.error("error:"), f.message);
            }
            ExitCode::from(f.outcome.code())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::env(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::env(format!("cannot write {}: {e}", path.display())))
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Output paths must not overwrite an input or each other.
fn check_outputs(inputs: &[&Path], outputs: &[&Path]) -> Result<(), Failure> {
    let key = |p: &Path| fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
    let ins: Vec<PathBuf> = inputs.iter().map(|p| key(p)).collect();
    let mut seen: Vec<PathBuf> = Vec::new();
    for out in outputs {
        let k = key(out);
        if ins.contains(&k) {
            return Err(Failure::env(format!("output {} would overwrite an input", out.display())));
        }
        if seen.contains(&k) {
            return Err(Failure::env(format!("output {} is given twice", out.display())));
        }
        seen.push(k);
    }
    Ok(())
}

/// Parses `path`; syntax errors are reported as invalid input.
fn load_tcsd(path: &Path, source: &str) -> Result<ParsedTcsd, Failure> {
    parse_tcsd(source, &path.display().to_string()).map_err(|e| Failure::invalid(e.to_string()))
}

/// Prints violations with their source positions. Returns whether the
/// diagram is valid.
fn report_violations(parsed: &ParsedTcsd, file: &Path, style: &Style) -> bool {
    let violations = virtint_core::model::validate(&parsed.tcsd);
    for v in &violations {
        let span = v
            .elements
            .iter()
            .find_map(|e| parsed.spans.get(e))
            .map(|s| s.to_string())
            .unwrap_or_else(|| file.display().to_string());
        eprintln!("{span}: {} {v}", style.error("invalid:"));
    }
    violations.is_empty()
}

fn cmd_validate(files: &[PathBuf], style: &Style) -> Result<Outcome, Failure> {
    let mut sources = Vec::with_capacity(files.len());
    for f in files {
        sources.push(read(f)?);
    }
    let mut invalid = 0;
    for (f, src) in files.iter().zip(&sources) {
        match load_tcsd(f, src) {
            Ok(parsed) => {
                if !report_violations(&parsed, f, style) {
                    invalid += 1;
                }
            }
            Err(e) => {
                eprintln!("{} {}", style.error("error:"), e.message);
                invalid += 1;
            }
        }
    }
    if invalid > 0 {
        eprintln!("{invalid} of {} file(s) invalid", files.len());
        return Ok(Outcome::Failed);
    }
    println!("{} file(s) valid", files.len());
    Ok(Outcome::Ok)
}

fn translate_checked(parsed: &ParsedTcsd, file: &Path, style: &Style) -> Result<TranslationUnit, Failure> {
    if !report_violations(parsed, file, style) {
        return Err(Failure::invalid(format!("{} is not a valid diagram", file.display())));
    }
    let valid = parsed
        .tcsd
        .validated()
        .map_err(|_| Failure::invalid(format!("{} is not a valid diagram", file.display())))?;
    translate(&valid).map_err(|e| Failure::invalid(format!("{}: {e}", file.display())))
}

fn cmd_translate(file: &Path, out: &Outputs, style: &Style) -> Result<Outcome, Failure> {
    let outputs: Vec<&Path> = out.dot.iter().chain(&out.tapaal).map(PathBuf::as_path).collect();
    check_outputs(&[file], &outputs)?;
    let source = read(file)?;
    let parsed = load_tcsd(file, &source)?;
    let tu = translate_checked(&parsed, file, style)?;
    if let Some(p) = &out.dot {
        write(p, &to_dot(&tu.net, Some(&tu.m0)))?;
    }
    if let Some(p) = &out.tapaal {
        write(p, &to_tapaal_xml(&tu))?;
    }
    let r = structural_report(&tu);
    println!(
        "{}: {} places, {} transitions ({} labeled, {} partition steps, {} silent), {} timeouts, C_max {}",
        tu.diagram, r.places, r.transitions, r.labeled, r.partition_steps, r.silent, r.timeouts, r.c_max
    );
    Ok(Outcome::Ok)
}

struct Input {
    path: PathBuf,
    sha256: String,
    unit: TranslationUnit,
    tcsd: Tcsd,
}

fn cmd_check(args: &CheckArgs, style: &Style) -> Result<Outcome, Failure> {
    let mut in_paths: Vec<&Path> = vec![args.arch.as_path()];
    in_paths.extend(args.files.iter().map(PathBuf::as_path));
    let outputs: Vec<&Path> = args
        .report
        .iter()
        .chain(&args.out.dot)
        .chain(&args.out.tapaal)
        .map(PathBuf::as_path)
        .collect();
    check_outputs(&in_paths, &outputs)?;

    let arch_src = read(&args.arch)?;
    let arch = parse_architecture(&arch_src, &args.arch.display().to_string())
        .map_err(|e| Failure::invalid(e.to_string()))?;
    let mut sources = Vec::with_capacity(args.files.len());
    for f in &args.files {
        sources.push(read(f)?);
    }
    let mut inputs = Vec::with_capacity(args.files.len());
    for (f, src) in args.files.iter().zip(&sources) {
        let parsed = load_tcsd(f, src)?;
        let unit = translate_checked(&parsed, f, style)?;
        inputs.push(Input {
            path: f.clone(),
            sha256: sha256_hex(src),
            unit,
            tcsd: parsed.tcsd,
        });
    }
    let arch_input = ReportInput {
        file: args.arch.display().to_string(),
        sha256: sha256_hex(&arch_src),
    };

    let opts = CheckOptions {
        policy: match args.policy {
            PolicyArg::Maximal => Policy::Maximal,
            PolicyArg::Strict => Policy::Strict,
        },
        require_all: args.require_all,
        max_matchings: usize::try_from(args.max_matchings).unwrap_or(usize::MAX),
        max_states: usize::try_from(args.max_states).unwrap_or(usize::MAX),
        max_total_delay: args.max_delay,
    };

    let runs = if args.cross_product {
        combinations(&arch, &inputs)?
    } else {
        vec![(0..inputs.len()).collect()]
    };

    let mut documents = Vec::with_capacity(runs.len());
    let mut summary = String::new();
    let mut worst = Outcome::Ok;
    for (k, run) in runs.iter().enumerate() {
        let chosen: Vec<&Input> = run.iter().map(|&i| &inputs[i]).collect();
        let tcsds: Vec<&Tcsd> = chosen.iter().map(|i| &i.tcsd).collect();
        let map = InstanceMap::from_architecture(&arch, &tcsds)?;
        let units: Vec<TranslationUnit> = chosen.iter().map(|i| i.unit.clone()).collect();
        let report = check_consistency(&units, &map, &opts)?;

        if runs.len() > 1 {
            let names: Vec<&str> = chosen.iter().map(|i| i.unit.diagram.as_str()).collect();
            summary.push_str(&format!("run {k}: {}\n", names.join(", ")));
        }
        summarize(&report, &mut summary);
        worst = worst.max(match report.overall {
            Overall::Consistent => Outcome::Ok,
            Overall::Inconclusive => Outcome::Inconclusive,
            Overall::Inconsistent => Outcome::Failed,
        });

        // nets of the first run only, so the output names stay fixed
        if k == 0 {
            if let Some(v) = report.decisive() {
                let merged = merge(&units, &v.matching)?;
                if let Some(p) = &args.out.dot {
                    write(p, &to_dot(&merged.unit.net, Some(&merged.unit.m0)))?;
                }
                if let Some(p) = &args.out.tapaal {
                    write(p, &to_tapaal_xml(&merged.unit))?;
                }
            }
        }

        let mut report_inputs = vec![arch_input.clone()];
        report_inputs.extend(chosen.iter().map(|i| ReportInput {
            file: i.path.display().to_string(),
            sha256: i.sha256.clone(),
        }));
        documents.push(report_document(&report, &report_inputs));
    }

    if let Some(p) = &args.report {
        write(p, &report_json(&documents, args.cross_product))?;
    }
    if worst == Outcome::Ok {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(worst)
}

fn report_json(documents: &[ReportDocument], many: bool) -> String {
    let mut s = if many {
        serde_json::to_string_pretty(documents)
    } else {
        serde_json::to_string_pretty(&documents[0])
    }
    .expect("report types serialize infallibly");
    s.push('\n');
    s
}

/// Input index sets taking one test case per tested component, in the
/// order components first appear among the inputs.
fn combinations(arch: &Architecture, inputs: &[Input]) -> Result<Vec<Vec<usize>>, Failure> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    for (i, input) in inputs.iter().enumerate() {
        let name = input.tcsd.name();
        let binding = arch
            .bindings
            .get(name)
            .ok_or_else(|| Failure::from(IntegrateError::Unbound(name.to_string())))?;
        let slot = match order.iter().position(|c| *c == binding.sut) {
            Some(s) => s,
            None => {
                order.push(&binding.sut);
                order.len() - 1
            }
        };
        groups.entry(slot).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let mut runs = vec![Vec::new()];
    for g in &groups {
        runs = runs
            .into_iter()
            .flat_map(|run: Vec<usize>| {
                g.iter().map(move |&i| {
                    let mut r = run.clone();
                    r.push(i);
                    r
                })
            })
            .collect();
    }
    Ok(runs)
}

fn summarize(report: &AnalysisReport, out: &mut String) {
    let overall = match report.overall {
        Overall::Consistent => "consistent",
        Overall::Inconsistent => "inconsistent",
        Overall::Inconclusive => "inconclusive",
    };
    let mut head = format!("overall: {overall} ({} matching(s) analyzed", report.verdicts.len());
    if report.truncated {
        head.push_str(", enumeration truncated");
    }
    if report.require_all {
        head.push_str(", all required");
    }
    out.push_str(&head);
    out.push_str(")\n");
    for v in &report.verdicts {
        describe(v, out);
    }
}

fn describe(v: &Verdict, out: &mut String) {
    out.push_str(&format!("matching {}: {}\n", v.index, v.status.describe()));
    for p in &v.pairs {
        out.push_str(&format!("  sync {}: {} = {}\n", p.label, p.a, p.b));
    }
    match v.status {
        Status::Consistent => {
            out.push_str("  witness:\n");
            for s in &v.witness {
                let label = s.label.as_deref().map(|l| format!(" ({l})")).unwrap_or_default();
                out.push_str(&format!("    +{} {}{label}\n", s.delay, s.transition));
            }
        }
        Status::OrderingDeadlock | Status::TimingConflict => {
            let mut labels: Vec<&str> = v.blocking.iter().map(|b| b.label.as_str()).collect();
            labels.dedup();
            out.push_str(&format!("  blocking labels: {}\n", labels.join(", ")));
            for b in &v.blocking {
                out.push_str(&format!("    {} at {}\n", b.label, b.transition));
            }
        }
        Status::BoundExceeded => {
            out.push_str(&format!(
                "  search bound hit after {} states (delay bound {})\n",
                v.timed.states,
                v.delay_bound.map_or("none".to_string(), |d| d.to_string())
            ));
        }
    }
}
