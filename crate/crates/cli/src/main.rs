//! Command-line front end: environment validation, lie classification,
//! mechanism synthesis, equilibrium verification, condition checks, and the
//! fixture corpus.
//!
//! Exit codes: 0 clean / implements, 1 violations or failing verdicts,
//! 2 inconclusive, 64 usage errors, 65 parse errors.

use clap::{Args, Parser, Subcommand};
use evimech::env::validate_structure;
use evimech::game::GameLimits;
use evimech::io::{mechanism_json, parse_environment, serialize_environment};
use evimech::lies::classify;
use evimech::rational::parse_q;
use evimech::renegotiation::check_rp_conditions;
use evimech::variant::{synthesize, synthesize_unchecked, Mechanism, VariantRequest};
use evimech::variation::{is_evidence_monotonic_cp, is_evidence_monotonic_star, EmVerdict};
use evimech::verify::{verify_implementation, VerifyConfig};
use evimech::Environment;
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_FINDINGS: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_PARSE: u8 = 65;

#[derive(Parser)]
#[command(
    name = "evimech",
    about = "Synthesize and verify evidence-based direct revelation mechanisms",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural evidence axioms and report every violation.
    Validate(EnvArg),
    /// Print the lie partition at a true state.
    Classify {
        #[command(flatten)]
        env: EnvArg,
        /// True state label.
        #[arg(long)]
        state: String,
    },
    /// Synthesize a mechanism variant and emit its description.
    Synthesize {
        #[command(flatten)]
        env: EnvArg,
        #[command(flatten)]
        variant: VariantArg,
        /// Include the fully evaluated outcome/transfer table.
        #[arg(long)]
        extensional: bool,
        /// Output path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Enumerate equilibria of the induced games and render verdicts.
    Verify {
        #[command(flatten)]
        env: EnvArg,
        #[command(flatten)]
        variant: VariantArg,
        /// True state label, or "all".
        #[arg(long, default_value = "all")]
        state: String,
        /// Number of sampled utility profiles.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Seed for utility sampling.
        #[arg(long, default_value_t = 0xE71D)]
        seed: u64,
        /// Mixed-strategy support cap (two-player games).
        #[arg(long, default_value_t = 3)]
        max_support: usize,
        /// Cap on induced-game size in message profiles.
        #[arg(long, default_value_t = 1_000_000)]
        profile_cap: u128,
        /// Bypass the synthesis gates (diagnostics and negative controls).
        #[arg(long)]
        force: bool,
    },
    /// Report evidence monotonicity under constant preferences and the
    /// directional cheapest-set condition.
    CheckEm(EnvArg),
    /// Check the pairwise refutation conditions for renegotiation-proof
    /// implementation.
    CheckRp(EnvArg),
    /// Write the canonical fixture corpus.
    Corpus {
        /// Target directory.
        #[arg(short, long, default_value = "fixtures")]
        output: PathBuf,
        /// Number of seeded random environments.
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// Base seed for the random environments.
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Args)]
struct EnvArg {
    /// Environment JSON file.
    env: PathBuf,
}

#[derive(Args)]
struct VariantArg {
    /// One of: theorem1, balanced, small:<dbar>, small-trunc:<rounds>,
    /// theorem3, theorem4, theorem4multi, emstar:<eps>, rp.
    #[arg(long)]
    variant: String,
    /// Epsilon for theorem3 (probability split in the penalty scales).
    #[arg(long)]
    epsilon: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn load_env(path: &Path) -> Result<Environment, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))?;
    parse_environment(&text).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn parse_variant(arg: &VariantArg) -> Result<VariantRequest, Failure> {
    let request = VariantRequest::parse(&arg.variant)
        .map_err(|e| fail(EXIT_USAGE, e))?;
    Ok(match (&request, &arg.epsilon) {
        (VariantRequest::Theorem3 { .. }, Some(eps)) => VariantRequest::Theorem3 {
            epsilon: parse_q(eps).map_err(|e| fail(EXIT_USAGE, format!("--epsilon: {e}")))?,
        },
        _ => request,
    })
}

fn build_mechanism(
    env: &Environment,
    arg: &VariantArg,
    force: bool,
) -> Result<Mechanism, Failure> {
    let request = parse_variant(arg)?;
    let result = if force {
        synthesize_unchecked(env, &request)
    } else {
        synthesize(env, &request)
    };
    result.map_err(|e| fail(EXIT_FINDINGS, format!("synthesis refused: {e}")))
}

fn emit<T: serde::Serialize>(value: &T, output: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    match output {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, text)
            .map_err(|e| fail(EXIT_USAGE, format!("cannot write {}: {e}", path.display()))),
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Validate(arg) => {
            let env = load_env(&arg.env)?;
            let report = validate_structure(&env);
            emit(&report, None)?;
            Ok(if report.is_clean() { EXIT_OK } else { EXIT_FINDINGS })
        }
        Command::Classify { env, state } => {
            let env = load_env(&env.env)?;
            let s = env
                .states
                .find(&state)
                .ok_or_else(|| fail(EXIT_USAGE, format!("unknown state {state:?}")))?;
            let partition = classify(&env, s);
            emit(&partition.report(&env), None)?;
            Ok(EXIT_OK)
        }
        Command::Synthesize { env, variant, extensional, output } => {
            let env = load_env(&env.env)?;
            let mech = build_mechanism(&env, &variant, false)?;
            emit(&mechanism_json(&env, &mech, extensional), output.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            env,
            variant,
            state,
            samples,
            seed,
            max_support,
            profile_cap,
            force,
        } => {
            let env = load_env(&env.env)?;
            let mech = build_mechanism(&env, &variant, force)?;
            let cfg = VerifyConfig {
                samples,
                seed,
                max_support,
                limits: GameLimits { profile_cap },
                ..Default::default()
            };
            let states: Vec<_> = if state == "all" {
                env.states.ids().collect()
            } else {
                vec![env
                    .states
                    .find(&state)
                    .ok_or_else(|| fail(EXIT_USAGE, format!("unknown state {state:?}")))?]
            };
            let mut worst = EXIT_OK;
            let reports: Vec<_> = states
                .into_iter()
                .map(|s| {
                    let report = verify_implementation(&mech, &env, s, &cfg);
                    worst = worst.max(report.exit_code() as u8);
                    report
                })
                .collect();
            emit(&reports, None)?;
            Ok(worst)
        }
        Command::CheckEm(arg) => {
            let env = load_env(&arg.env)?;
            let em_cp = is_evidence_monotonic_cp(&env)
                .map_err(|e| fail(EXIT_PARSE, e.to_string()))?;
            let em_star = is_evidence_monotonic_star(&env)
                .map_err(|e| fail(EXIT_PARSE, e.to_string()))?;
            let (cp_flag, cp_detail) = match &em_cp {
                EmVerdict::Holds(designation) => {
                    let witness: Vec<serde_json::Value> = env
                        .agent_ids()
                        .map(|i| {
                            json!(env
                                .states
                                .ids()
                                .map(|s| env
                                    .article(i, designation.of(i, s))
                                    .name(&env.states))
                                .collect::<Vec<_>>())
                        })
                        .collect();
                    (json!(true), json!({ "selection": witness }))
                }
                EmVerdict::Fails { pair } => (
                    json!(false),
                    json!({
                        "violation": [env.states.label(pair.0), env.states.label(pair.1)]
                    }),
                ),
                EmVerdict::Incomplete => (json!("incomplete"), json!({})),
            };
            let star = match em_star {
                Ok(()) => json!({ "em_star": true }),
                Err((s, t)) => json!({
                    "em_star": false,
                    "em_star_violation": [env.states.label(s), env.states.label(t)]
                }),
            };
            let mut value = json!({ "em_cp": cp_flag, "detail": cp_detail });
            value
                .as_object_mut()
                .unwrap()
                .extend(star.as_object().unwrap().clone());
            emit(&value, None)?;
            Ok(EXIT_OK)
        }
        Command::CheckRp(arg) => {
            let env = load_env(&arg.env)?;
            let report = check_rp_conditions(&env)
                .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            emit(&report, None)?;
            Ok(if report.passes() { EXIT_OK } else { EXIT_FINDINGS })
        }
        Command::Corpus { output, count, seed } => {
            std::fs::create_dir_all(&output)
                .map_err(|e| fail(EXIT_USAGE, format!("cannot create {}: {e}", output.display())))?;
            let mut written = Vec::new();
            for (name, env) in evimech::fixtures::named_fixtures() {
                let path = output.join(format!("{name}.json"));
                std::fs::write(&path, serialize_environment(&env))
                    .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
                written.push(path.display().to_string());
            }
            for (k, env) in evimech::fixtures::random_corpus(count, seed, &Default::default())
                .into_iter()
                .enumerate()
            {
                let report = validate_structure(&env);
                assert!(report.is_clean(), "generated fixture must pass the axioms");
                let path = output.join(format!("random_{k:03}.json"));
                std::fs::write(&path, serialize_environment(&env))
                    .map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
                written.push(path.display().to_string());
            }
            emit(&json!({ "written": written }), None)?;
            Ok(EXIT_OK)
        }
    }
}
