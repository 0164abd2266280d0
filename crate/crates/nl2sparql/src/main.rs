//! Command-line entry point. Exit codes: 0 on success, 1 on usage or
//! configuration errors, 2 on runtime aborts.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use nl2sparql::execution::{self, ExecutionStatus};
use nl2sparql::postprocess::{clean, extract_query, structural_diff};
use nl2sparql::runner::{rerender_from_dir, run_pipeline, PipelineContext, RunConfig, RunnerError};
use nl2sparql::sparql::{parse, validate_aggregation};

#[derive(Parser)]
#[command(
    name = "nl2sparql",
    version,
    about = "Generate, repair, execute, and score SPARQL queries for questions over the ORKG"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for every test item, repeated over N runs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Serve every LLM call and SPARQL execution from local caches;
        /// any miss aborts.
        #[arg(long)]
        offline_replay: bool,
        /// Override the configured output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Generate a query for a single question using the configured
    /// strategy and print it after extraction and cleaning.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        question: String,
        /// Cache salt; reuse a run salt to replay that run's answer.
        #[arg(long, default_value = "adhoc")]
        salt: String,
    },
    /// Apply the deterministic cleaning rules to a query file and print
    /// the result; rule ids go to stderr.
    Clean { file: PathBuf },
    /// Parse and validate a query file; prints OK or the diagnostics.
    /// Findings are output, not failures: the exit code stays 0.
    Validate { file: PathBuf },
    /// Execute a query file against a SPARQL endpoint and print the
    /// resulting table as TSV.
    Execute {
        #[arg(long)]
        endpoint: String,
        #[arg(long, default_value_t = 60)]
        timeout_secs: u64,
        file: PathBuf,
    },
    /// Score a candidate query against a reference query.
    Score {
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        reference: PathBuf,
    },
    /// Re-render report.csv and summary.txt from an existing run
    /// directory.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Structural diff of two queries: isomorphism, triple-count delta,
    /// and differing constants.
    Diff { generated: PathBuf, gold: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version on stdout with success status.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunnerError::Config(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(RunnerError::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn read_file(path: &PathBuf) -> Result<String, RunnerError> {
    std::fs::read_to_string(path)
        .map_err(|e| RunnerError::Config(format!("cannot read {}: {e}", path.display())))
}

fn dispatch(command: Command) -> Result<(), RunnerError> {
    match command {
        Command::Run {
            config,
            offline_replay,
            output_dir,
        } => {
            let mut run_config = RunConfig::from_toml_file(&config)?;
            if offline_replay {
                run_config.offline_replay = true;
            }
            if let Some(dir) = output_dir {
                run_config.output_dir = dir;
            }
            run_pipeline(&run_config)?;
            let summary = run_config.output_dir.join("summary.txt");
            if let Ok(text) = std::fs::read_to_string(&summary) {
                print!("{text}");
            }
            println!("reports written to {}", run_config.output_dir.display());
            Ok(())
        }
        Command::Generate {
            config,
            question,
            salt,
        } => {
            let run_config = RunConfig::from_toml_file(&config)?;
            let context = PipelineContext::new(run_config)?;
            let prompt = context.build_prompt(&question)?;
            let record = context
                .generation
                .generate(&prompt, &salt)
                .map_err(|e| RunnerError::Runtime(e.to_string()))?;
            let extracted = extract_query(&record.raw_output)
                .map_err(|e| RunnerError::Runtime(e.to_string()))?;
            println!("{}", clean(&extracted).output);
            Ok(())
        }
        Command::Clean { file } => {
            let report = clean(read_file(&file)?.trim_end());
            if report.changed {
                eprintln!("rules applied: {}", report.rules_applied.join(", "));
            } else {
                eprintln!("already clean");
            }
            println!("{}", report.output);
            Ok(())
        }
        Command::Validate { file } => {
            let text = read_file(&file)?;
            match parse(&text) {
                Ok(ast) => {
                    let diagnostics = validate_aggregation(&ast);
                    if diagnostics.is_empty() {
                        println!("OK");
                    } else {
                        for diagnostic in diagnostics {
                            println!("{diagnostic}");
                        }
                    }
                }
                Err(diagnostics) => {
                    for diagnostic in diagnostics {
                        println!("{diagnostic}");
                    }
                }
            }
            Ok(())
        }
        Command::Execute {
            endpoint,
            timeout_secs,
            file,
        } => {
            let query = read_file(&file)?;
            let outcome =
                execution::execute(&query, &endpoint, Duration::from_secs(timeout_secs));
            match outcome.status {
                ExecutionStatus::Success => {
                    let table = outcome.table.expect("success outcome has a table");
                    println!("{}", table.vars.join("\t"));
                    for row in table.rows {
                        println!("{}", row.join("\t"));
                    }
                    Ok(())
                }
                ExecutionStatus::SyntaxError => {
                    println!("syntax_error: {}", outcome.message);
                    Ok(())
                }
                status => Err(RunnerError::Runtime(format!(
                    "{status:?}: {}",
                    outcome.message
                ))),
            }
        }
        Command::Score {
            candidate,
            reference,
        } => {
            use nl2sparql::metrics::{bleu4, rouge_l, rouge_n, tokenize_query};
            let cand = tokenize_query(&read_file(&candidate)?);
            let reference = tokenize_query(&read_file(&reference)?);
            println!(
                "BLEU-4 {:.6}  ROUGE-1 {:.6}  ROUGE-2 {:.6}  ROUGE-L {:.6}",
                bleu4(&cand, &reference),
                rouge_n(&cand, &reference, 1),
                rouge_n(&cand, &reference, 2),
                rouge_l(&cand, &reference),
            );
            Ok(())
        }
        Command::Report { run_dir } => {
            let written = rerender_from_dir(&run_dir)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Diff { generated, gold } => {
            let gen_ast = parse(&read_file(&generated)?)
                .map_err(|d| RunnerError::Config(format!("generated query: {}", d[0])))?;
            let gold_ast = parse(&read_file(&gold)?)
                .map_err(|d| RunnerError::Config(format!("gold query: {}", d[0])))?;
            let diff = structural_diff(&gen_ast, &gold_ast);
            println!("isomorphic: {}", diff.isomorphic);
            println!("triple_count_delta: {}", diff.triple_count_delta);
            for (gold_term, gen_term) in diff.differing_constants {
                println!("constant differs: gold {gold_term} vs generated {gen_term}");
            }
            Ok(())
        }
    }
}
