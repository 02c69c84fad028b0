//! Command-line entry point.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::benchmarks::{format_result, load_benchmark, BenchmarkError};
use crate::harness::{
    build_and_save_model, matching_size, parse_config, run_rq1, run_rq2, run_rq3, stream,
    write_report, ConfigError, ConfigOverrides, ExperimentConfig, HarnessError, Session, SEED_ENV,
};
use crate::heuristics::Heuristic;
use crate::minilang::{enumerate_elements, execute, parse, print_program, ElementId};
use crate::mutation::{enumerate_fom_sites, read_catalog, write_catalog, Mutant, MutationError};
use crate::trace_eval::{kill_matrix_csv, ORIGINAL_STEP_LIMIT};

#[derive(Debug, Parser)]
#[command(
    name = "homsmith",
    version,
    about = "Causal-effect guided higher-order mutant sampling"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Seed for every random stream (falls back to HOMSMITH_SEED, then 0)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// INI-style file of `key = value` settings
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Bundled benchmark name or path to a .mut file
    #[arg(long, global = true, value_name = "NAME|PATH")]
    benchmark: Option<String>,
    /// Worker threads for mutant evaluation
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Fail instead of building a missing CPDA model
    #[arg(long, global = true)]
    no_build: bool,
    /// First-order mutants sampled per element for the CPDA model
    #[arg(long, global = true)]
    per_element: Option<usize>,
    /// Second-order mutants per heuristic
    #[arg(long, global = true)]
    budget: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a program and print it back in canonical form
    Parse { file: PathBuf },
    /// Run the benchmark's test suite on the original program
    Run {
        /// Compare against the expected outputs and fail on any difference
        #[arg(long)]
        check: bool,
    },
    /// List program elements
    Elements,
    /// List first-order mutants as a JSON-lines catalog
    Foms {
        /// Only this element
        #[arg(long)]
        element: Option<usize>,
    },
    /// Build or inspect the causal model
    Cpda {
        #[command(subcommand)]
        action: CpdaAction,
    },
    /// Allocate the HOM budget over element pairs with a heuristic
    Sample { heuristic: Heuristic },
    /// Kill matrix of a mutant catalog against the test suite
    Evaluate { catalog: PathBuf },
    /// SSHOM yield per causal-effect bucket
    Rq1,
    /// Heuristic comparison: dScore, SSHOMs, unique SSHOMs
    Rq2,
    /// Surviving mutants per heuristic and for first-order mutants
    Rq3,
    /// Long-format CSV of all per-trial results in the output directory
    Report,
}

#[derive(Debug, Subcommand)]
enum CpdaAction {
    /// Build the model and write observations.csv and model.json
    Build,
    /// Print the cached model's structure and strongest effects
    Show {
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Failed(String),
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })
}

fn config(g: &GlobalArgs) -> Result<ExperimentConfig, CliError> {
    let file = match &g.config {
        Some(p) => Some(parse_config(&read(p)?)?),
        None => None,
    };
    let flags = ConfigOverrides {
        benchmark: g.benchmark.clone(),
        seed: g.seed,
        per_element: g.per_element,
        budget: g.budget,
        out: g.out.clone(),
        jobs: g.jobs,
        no_build: g.no_build.then_some(true),
        ..ConfigOverrides::default()
    };
    let env = std::env::var(SEED_ENV).ok();
    Ok(ExperimentConfig::resolve(
        &flags,
        file.as_ref(),
        env.as_deref(),
    )?)
}

/// Runs the command line `args` (program name first) and returns the exit
/// status: 0 on success, 1 on a usage error, 2 when the command fails.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

macro_rules! emit {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|source| CliError::Io { path: "<stdout>".into(), source })?
    };
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = config(&cli.global)?;
    match cli.command {
        Command::Parse { file } => {
            let p = parse(&read(&file)?)
                .map_err(|e| CliError::Failed(format!("{}: {e}", file.display())))?;
            emit!(out, "{}", print_program(&p).trim_end());
        }
        Command::Run { check } => {
            let case = load_benchmark(&cfg.benchmark)?;
            let mut text = String::new();
            for t in &case.suite {
                let r = execute(&case.program, t, ORIGINAL_STEP_LIMIT);
                text.push_str(&format_result(t, &r));
                text.push('\n');
            }
            write!(out, "{text}").map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })?;
            if check {
                match &case.golden {
                    Some(g) if *g == text => {}
                    Some(_) => {
                        return Err(CliError::Failed(format!(
                            "{}: outputs differ from the golden file",
                            case.name
                        )))
                    }
                    None => return Err(CliError::Failed(format!("{}: no golden file", case.name))),
                }
            }
        }
        Command::Elements => {
            let case = load_benchmark(&cfg.benchmark)?;
            emit!(out, "element,kind,function,line,column,sites");
            for e in enumerate_elements(&case.program) {
                let sites = enumerate_fom_sites(&case.program, e.id).len();
                emit!(
                    out,
                    "{},{},{},{},{},{}",
                    e.id,
                    e.kind,
                    e.function,
                    e.location.line,
                    e.location.column,
                    sites
                );
            }
        }
        Command::Foms { element } => {
            let case = load_benchmark(&cfg.benchmark)?;
            let n = case.program.element_count();
            let elements: Vec<ElementId> = match element {
                Some(e) if e < n => vec![ElementId(e)],
                Some(e) => {
                    return Err(CliError::Failed(format!(
                        "element {e} out of range (program has {n})"
                    )))
                }
                None => (0..n).map(ElementId).collect(),
            };
            let foms: Vec<Mutant> = elements
                .into_iter()
                .flat_map(|e| enumerate_fom_sites(&case.program, e))
                .map(Mutant::first_order)
                .collect();
            write!(out, "{}", write_catalog(&foms)).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })?;
        }
        Command::Cpda {
            action: CpdaAction::Build,
        } => {
            let file = build_and_save_model(&cfg)?;
            emit!(
                out,
                "built model for {} (seed {}, {} per element): {} elements, {} tests, {} edges, {} positive effects",
                file.benchmark,
                file.seed,
                file.per_element,
                file.element_count,
                file.test_count,
                file.model.structure.parents.iter().map(Vec::len).sum::<usize>(),
                file.model.ce.positive_pairs().len()
            );
            emit!(out, "wrote {}", cfg.out.join("model.json").display());
        }
        Command::Cpda {
            action: CpdaAction::Show { top },
        } => {
            let s = Session::new(ExperimentConfig {
                no_build: true,
                ..cfg
            })?;
            let model = s.model()?.model;
            emit!(out, "element,parents");
            for (e, ps) in model.structure.parents.iter().enumerate() {
                let ps: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
                emit!(out, "{},{}", ElementId(e), ps.join(" "));
            }
            let mut pairs = model.ce.positive_pairs();
            pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
            emit!(out, "cause,effect,ce");
            for (i, j, v) in pairs.into_iter().take(top) {
                emit!(out, "{i},{j},{v}");
            }
        }
        Command::Sample { heuristic } => {
            let s = Session::new(ExperimentConfig {
                no_build: true,
                ..cfg
            })?;
            let model = s.model()?.model;
            let ce = s.masked_ce(&model.ce);
            let n_mwm = matching_size(&model, &ce);
            let mut rng = stream(s.cfg.seed, &format!("sample/{}", heuristic.name()));
            let alloc = s
                .allocate(heuristic, &model, &ce, n_mwm, &mut rng)
                .map_err(CliError::from)?;
            let json = serde_json::to_string_pretty(&alloc).expect("allocation serializes");
            emit!(out, "{json}");
        }
        Command::Evaluate { catalog } => {
            let mutants = read_catalog(&read(&catalog)?)?;
            let mut s = Session::new(cfg)?;
            let kills = crate::harness::with_jobs(s.cfg.jobs, || s.kill_vectors(&mutants))??;
            let rows: Vec<_> = mutants.iter().map(Mutant::id).zip(kills).collect();
            write!(out, "{}", kill_matrix_csv(&rows, &s.case.suite)).map_err(|source| {
                CliError::Io {
                    path: "<stdout>".into(),
                    source,
                }
            })?;
        }
        Command::Rq1 => {
            let r = run_rq1(&cfg)?;
            emit!(out, "bucket,pairs,ce_lo,ce_hi,avg_sshom");
            for b in &r.buckets {
                emit!(
                    out,
                    "{},{},{:.4},{:.4},{:.1}",
                    b.bucket,
                    b.pairs,
                    b.ce_lo,
                    b.ce_hi,
                    b.avg_sshom
                );
            }
        }
        Command::Rq2 => {
            let r = run_rq2(&cfg)?;
            emit!(out, "heuristic,dscore,sshom,unique_sshom");
            for h in &r.summary {
                emit!(
                    out,
                    "{},{:.3},{:.1},{:.1}",
                    h.heuristic,
                    h.dscore,
                    h.sshom,
                    h.unique_sshom
                );
            }
        }
        Command::Rq3 => {
            let r = run_rq3(&cfg)?;
            emit!(out, "group,survived");
            for g in &r.summary {
                emit!(out, "{},{:.1}", g.group, g.survived);
            }
        }
        Command::Report => {
            let n = write_report(&cfg.out)?;
            if n == 0 {
                return Err(CliError::Failed(format!(
                    "no rq*_trials.csv files under {}",
                    cfg.out.display()
                )));
            }
            emit!(
                out,
                "wrote {} rows to {}",
                n,
                cfg.out.join("report.csv").display()
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("homsmith").chain(args.iter().copied()),
            &mut o,
            &mut e,
        );
        (
            code,
            String::from_utf8(o).unwrap(),
            String::from_utf8(e).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_one() {
        let (code, _, err) = call(&["frobnicate"]);
        assert_eq!(code, 1);
        assert!(err.contains("Usage"));
        assert_eq!(call(&["rq1", "--bogus"]).0, 1);
        assert_eq!(call(&["sample", "greedy"]).0, 1);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn elements_and_run() {
        let (code, out, _) = call(&["elements", "--benchmark", "motivating"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 7);
        let (code, out, _) = call(&["run", "--check", "--benchmark", "motivating"]);
        assert_eq!(code, 0, "{out}");
        assert_eq!(out.lines().count(), 10);
        assert_eq!(call(&["run", "--benchmark", "nowhere"]).0, 2);
    }
}
