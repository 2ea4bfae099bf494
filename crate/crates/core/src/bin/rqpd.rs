use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use rqpd_core::casebook::{self, Options};
use rqpd_core::comparability::{check_comparability, collect_constraints};
use rqpd_core::coupling::{max_coupling_value, CouplingProblem};
use rqpd_core::judgment::{check_judgment, check_projective_judgment, Judgment, Sampler, SideCondition, Status};
use rqpd_core::lang::{parse, Program};
use rqpd_core::linalg::Matrix;
use rqpd_core::rules::{CheckOptions, Outline, Policy};
use rqpd_core::semantics::{run, BranchTree, Configuration};
use rqpd_core::{Error, Result};

const USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "rqpd", version, about = "Relational verification workbench for quantum while-programs")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Random inputs per sampled check.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Print JSON instead of a text summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Runs a program on an input state.
    Run {
        file: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Also prints the branching tree up to this many steps.
        #[arg(long)]
        tree_depth: Option<usize>,
    },
    /// Checks a judgment file by sampling.
    Check {
        file: PathBuf,
        /// Samples pure inputs only.
        #[arg(long)]
        pure: bool,
    },
    /// Checks a proof outline.
    Prove {
        file: PathBuf,
        #[arg(long, default_value = "strict")]
        policy: Policy,
    },
    /// Maximizes tr(Bσ) over couplings of two states.
    Coupling {
        #[arg(long)]
        rho1: PathBuf,
        #[arg(long)]
        rho2: PathBuf,
        #[arg(long)]
        objective: PathBuf,
        #[arg(long)]
        support: Option<PathBuf>,
        #[arg(long)]
        ppt: bool,
    },
    /// Collects the comparability constraints of two programs.
    Comparable {
        p1: PathBuf,
        p2: PathBuf,
        #[arg(long, num_args = 2, value_names = ["RHO1", "RHO2"])]
        check: Option<Vec<PathBuf>>,
    },
    /// Bundled case studies.
    Casebook {
        #[command(subcommand)]
        cmd: CaseCmd,
    },
}

#[derive(Subcommand)]
enum CaseCmd {
    /// Runs one scenario, or all of them.
    Run {
        id: String,
        #[arg(long)]
        serial: bool,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        walk_n: Option<usize>,
        #[arg(long, default_value = "strict")]
        policy: Policy,
        /// Records wall-clock time in the reports.
        #[arg(long)]
        timing: bool,
    },
    List,
    /// Writes the programs and fixture of a scenario to a directory.
    Export { id: String, dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("rqpd: {e}");
            ExitCode::from(USAGE)
        }
    }
}

fn status_code(s: Status) -> u8 {
    s.exit_code() as u8
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn matrix(path: &Path) -> Result<Matrix> {
    Ok(serde_json::from_str(&read(path)?)?)
}

fn program(path: &Path) -> Result<Program> {
    parse(&read(path)?)
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

/// A program or matrix given inline or as a path relative to the file
/// that mentions it.
#[derive(Deserialize)]
#[serde(untagged)]
enum Source<T> {
    Inline(T),
    Path(String),
}

#[derive(Deserialize)]
struct JudgmentFile {
    left: String,
    right: String,
    pre: Source<Matrix>,
    post: Source<Matrix>,
    #[serde(default)]
    projective: bool,
    /// Restricts inputs to product states between the two sides.
    #[serde(default)]
    separable: bool,
}

fn program_ref(s: &str, base: &Path) -> Result<Program> {
    let path = base.join(s);
    if path.is_file() {
        program(&path)
    } else {
        parse(s)
    }
}

fn matrix_ref(s: &Source<Matrix>, base: &Path) -> Result<Matrix> {
    match s {
        Source::Inline(m) => Ok(m.clone()),
        Source::Path(p) => matrix(&base.join(p)),
    }
}

fn base_of(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn dispatch(cli: &Cli) -> Result<u8> {
    let samples = cli.samples.unwrap_or(200);
    match &cli.cmd {
        Cmd::Run { file, input, tree_depth } => {
            let p = program(file)?;
            let rho = matrix(input)?;
            let out = run(&p, &rho)?;
            match tree_depth {
                Some(n) => {
                    let tree = BranchTree::expand(Configuration::initial(&p, &rho)?, *n);
                    print_json(&serde_json::json!({ "output": out, "tree": tree.to_report() }))?;
                }
                None => print_json(&out)?,
            }
            Ok(0)
        }
        Cmd::Check { file, pure } => {
            let jf: JudgmentFile = serde_json::from_str(&read(file)?)?;
            let base = base_of(file);
            let (p1, p2) = (program_ref(&jf.left, &base)?, program_ref(&jf.right, &base)?);
            let (pre, post) = (matrix_ref(&jf.pre, &base)?, matrix_ref(&jf.post, &base)?);
            let mut sampler = Sampler::new(samples, cli.seed);
            sampler.pure_only = *pure || sampler.pure_only;
            let v = if jf.projective {
                check_projective_judgment(&p1, &p2, &pre, &post, &sampler)?
            } else {
                let mut j = Judgment::new(p1.clone(), p2.clone(), pre, post);
                if jf.separable {
                    j = j.with_gamma(vec![SideCondition::separable_sides(&p1, &p2)?]);
                }
                check_judgment(&j, &sampler)?
            };
            if cli.json {
                print_json(&v)?;
            } else {
                println!("{:?}: {} samples, worst margin {:.3e}", v.status, v.samples_used, v.worst_margin);
                for n in &v.notes {
                    println!("  {n}");
                }
            }
            Ok(status_code(v.status))
        }
        Cmd::Prove { file, policy } => {
            let mut outline = Outline::from_json(&read(file)?)?;
            let base = base_of(file);
            for side in [&mut outline.left, &mut outline.right] {
                let path = base.join(side.as_str());
                if path.is_file() {
                    *side = read(&path)?;
                }
            }
            let opts = CheckOptions { policy: *policy, sampler: Sampler::new(cli.samples.unwrap_or(100), cli.seed), projective: false };
            let rep = outline.check(&opts)?;
            if cli.json {
                print_json(&rep)?;
            } else {
                println!("{} {}", if rep.valid { "valid" } else { "INVALID" }, rep.conclusion);
                for e in &rep.errors {
                    println!("  {e}");
                }
                for s in rep.derivation.failures() {
                    println!("  {} {:?}: {}", s.path, s.rule, s.error.as_deref().unwrap_or("obligation failed"));
                    for o in s.obligations.iter().filter(|o| !o.passed) {
                        println!("    {:?} {} (residual {:.3e})", o.kind, o.description, o.residual);
                    }
                }
            }
            Ok(if rep.valid { 0 } else { 1 })
        }
        Cmd::Coupling { rho1, rho2, objective, support, ppt } => {
            let mut prob = CouplingProblem::new(matrix(rho1)?, matrix(rho2)?, matrix(objective)?);
            if let Some(x) = support {
                prob = prob.with_support(matrix(x)?);
            }
            if *ppt {
                prob = prob.with_ppt();
            }
            print_json(&max_coupling_value(&prob)?)?;
            Ok(0)
        }
        Cmd::Comparable { p1, p2, check } => {
            let (a, b) = (program(p1)?, program(p2)?);
            let c = collect_constraints(&a, &b)?;
            let verdict = match check {
                Some(paths) => {
                    let (r1, r2) = (matrix(&paths[0])?, matrix(&paths[1])?);
                    Some((check_comparability(&c, &r1, &r2)?, c.max_defect(&r1, &r2)?))
                }
                None => None,
            };
            if cli.json {
                let mut doc = serde_json::json!({ "constraints": c.len() });
                if let Some((ok, defect)) = verdict {
                    doc["comparable"] = ok.into();
                    doc["defect"] = defect.into();
                }
                print_json(&doc)?;
            } else {
                println!("{} constraints", c.len());
                if let Some((ok, defect)) = verdict {
                    println!("{} (defect {defect:.3e})", if ok { "comparable" } else { "not comparable" });
                }
            }
            Ok(match verdict {
                Some((false, _)) => 1,
                _ => 0,
            })
        }
        Cmd::Casebook { cmd } => casebook_cmd(cli, cmd),
    }
}

fn casebook_cmd(cli: &Cli, cmd: &CaseCmd) -> Result<u8> {
    match cmd {
        CaseCmd::List => {
            let entries = casebook::list_scenarios()?;
            if cli.json {
                print_json(&entries)?;
            } else {
                for e in entries {
                    println!("{:<28} {}", e.id, e.title);
                }
            }
            Ok(0)
        }
        CaseCmd::Export { id, dir } => {
            for path in casebook::export_fixture(id, dir, &options(cli, None, None, Policy::Strict, false))? {
                println!("{}", path.display());
            }
            Ok(0)
        }
        CaseCmd::Run { id, serial, noise, walk_n, policy, timing } => {
            let opts = options(cli, *noise, *walk_n, *policy, *timing);
            let results = if id == "all" {
                casebook::run_all(&opts, *serial)
            } else {
                vec![(id.clone(), casebook::run_scenario(id, &opts))]
            };
            let mut reports = Vec::new();
            for (id, r) in results {
                match r {
                    Ok(rep) => reports.push(rep),
                    Err(e) => {
                        eprintln!("rqpd: {id}: {e}");
                        return Ok(USAGE);
                    }
                }
            }
            if cli.json {
                if reports.len() == 1 {
                    print_json(&reports[0])?;
                } else {
                    print_json(&reports)?;
                }
            } else {
                for r in &reports {
                    print!("{}", r.summary());
                }
            }
            Ok(status_code(casebook::overall(reports.iter().map(|r| r.status))))
        }
    }
}

fn options(cli: &Cli, noise: Option<f64>, walk_n: Option<usize>, policy: Policy, timing: bool) -> Options {
    let d = Options::default();
    Options {
        seed: cli.seed,
        samples: cli.samples.unwrap_or(d.samples),
        tol: cli.tol,
        noise: noise.unwrap_or(d.noise),
        walk_n: walk_n.unwrap_or(d.walk_n),
        policy,
        timing,
    }
}
