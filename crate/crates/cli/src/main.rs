use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use flexconn_core::oracle::threads_from_env;
use flexconn_core::{
    emit_instance, emit_solution, exact_opt, format_cost, generate, parse_instance, parse_solution, ratio_report, Feasibility,
    GenParams, InstanceClass, OracleBudget, OracleOutcome, ReportOptions, SolutionFile,
};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_REFUSED: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// Flexible graph connectivity network design.
#[derive(Parser)]
#[command(name = "flexconn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write a verified solution file.
    Solve {
        instance: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Use exact Steiner trees in the first FST stage.
        #[arg(long)]
        exact_stage_one: bool,
    },
    /// Check a solution file against an instance.
    Verify { instance: PathBuf, solution: PathBuf },
    /// Exact optimum by exhaustive search.
    Oracle {
        instance: PathBuf,
        /// Largest number of subsets or search nodes to examine.
        #[arg(long)]
        budget: Option<u64>,
        /// Enumerate every subset instead of the pruned search.
        #[arg(long)]
        full: bool,
    },
    /// Print a seeded random instance.
    Gen {
        #[arg(long, value_parser = parse_class)]
        class: InstanceClass,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        q: Option<u32>,
    },
    /// Compare solver cost against the exact optimum on random instances.
    RatioReport {
        #[arg(long, value_parser = parse_class)]
        class: InstanceClass,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        q: Option<u32>,
        #[arg(long)]
        exact_stage_one: bool,
    },
}

fn parse_class(s: &str) -> Result<InstanceClass, String> {
    s.parse().map_err(|e: flexconn_core::Error| e.to_string())
}

fn read_instance(path: &PathBuf) -> Result<flexconn_core::InstanceFile, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_instance(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(command: Command) -> Result<u8, String> {
    match command {
        Command::Solve { instance, out, exact_stage_one } => {
            let file = read_instance(&instance)?;
            let problem = &file.problem;
            let solved = if exact_stage_one {
                problem.solve_with_stage(&flexconn_core::ExactSteiner)
            } else {
                problem.solve()
            }
            .map_err(|e| e.to_string())?;
            let verdict = problem.verify(&solved.edges).map_err(|e| e.to_string())?;
            if !verdict.feasible {
                return Err(format!("solver output failed verification: {}", verdict.detail));
            }
            let solution = SolutionFile {
                problem: problem.kind().to_string(),
                algorithm: solved.algorithm.to_string(),
                cost: problem.graph().cost_of(&solved.edges),
                edges: solved.edges,
                feasible: true,
                opt: None,
            };
            let text = emit_solution(&solution);
            match out {
                Some(path) => fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Verify { instance, solution } => {
            let file = read_instance(&instance)?;
            let text = fs::read_to_string(&solution).map_err(|e| format!("{}: {e}", solution.display()))?;
            let sol = parse_solution(&text).map_err(|e| format!("{}: {e}", solution.display()))?;
            sol.check_against(&file.problem).map_err(|e| e.to_string())?;
            let verdict = file.problem.verify(&sol.edges).map_err(|e| e.to_string())?;
            if verdict.feasible {
                println!("feasible cost {}", format_cost(&sol.cost));
                Ok(0)
            } else {
                println!("infeasible: {}", verdict.detail);
                Ok(EXIT_INFEASIBLE)
            }
        }
        Command::Oracle { instance, budget, full } => {
            let file = read_instance(&instance)?;
            let mut b = if full { OracleBudget::full(threads_from_env()) } else { OracleBudget::default() };
            if let Some(limit) = budget {
                b.max_subsets = limit;
            }
            match exact_opt(&file.problem, &b) {
                Ok(OracleOutcome::Optimal { cost, edges }) => {
                    let ids: Vec<String> = edges.iter().map(|e| e.to_string()).collect();
                    println!("opt {} edges [{}]", format_cost(&cost), ids.join(", "));
                    Ok(0)
                }
                Ok(OracleOutcome::Infeasible) => {
                    println!("infeasible: no edge subset satisfies the demands");
                    Ok(EXIT_INFEASIBLE)
                }
                Err(e @ flexconn_core::Error::BudgetExceeded(_)) => {
                    eprintln!("refused: {e}");
                    Ok(EXIT_REFUSED)
                }
                Err(e) => Err(e.to_string()),
            }
        }
        Command::Gen { class, n, seed, p, q } => {
            let mut params = GenParams::new(n, seed);
            params.p = p;
            params.q = q;
            let file = generate(class, &params).map_err(|e| e.to_string())?;
            print!("{}", emit_instance(&file));
            Ok(0)
        }
        Command::RatioReport { class, trials, seed, n, p, q, exact_stage_one } => {
            let options = ReportOptions {
                n,
                p,
                q,
                exact_stage_one,
                budget: OracleBudget { threads: threads_from_env(), ..OracleBudget::default() },
            };
            let report = ratio_report(class, trials, seed, &options).map_err(|e| e.to_string())?;
            print!("{}", report.render());
            Ok(if report.all_pass() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
