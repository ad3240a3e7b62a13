//! `elab`: rigidity proofs, symbolic identity checks and flow experiments.
//!
//! Exit status: 0 when every check passes, 1 for usage or configuration
//! errors, 2 when a check fails (any report is still written).

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

mod config;
mod run;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use elab_core::jetlab::prove_affine_rigidity;
use elab_core::ratpoly::{buchberger, normal_form, BaseOrder, MonomialOrder};
use elab_core::symflow::{derive_rotation_system, n12_expand, verify_thm56, SymbolicBlockMatrix};

use config::{Assignments, RunConfig};

#[derive(Parser)]
#[command(
    name = "elab",
    version,
    about = "Lagrangian flows built from SL(2) time matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Lex,
    Degrevlex,
}

#[derive(Clone, Copy, ValueEnum)]
enum Identity {
    /// N12 factorization for two rotation blocks.
    Thm52,
    /// Normal-form chain for the constrained general matrix.
    Thm56,
    /// Derived systems for every reflection choice.
    Reflections,
}

#[derive(Subcommand)]
enum Command {
    /// Prove that harmonic area-preserving maps are affine; prints a JSON report.
    ProveRigidity {
        /// Write the report here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "degrevlex")]
        order: Order,
    },
    /// Check a symbolic identity and print its certificate.
    VerifyIdentities {
        #[arg(value_enum)]
        which: Identity,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Build a flow, run the verification suite and export the results.
    Flow(FlowArgs),
}

#[derive(clap::Args)]
struct FlowArgs {
    /// `key = value` configuration file; flags override it.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// gerstner, kirchhoff, family1, family2, family3 or elliptic-inverse.
    #[arg(long, alias = "family")]
    preset: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Grid as `N1xN2`.
    #[arg(long)]
    grid: Option<String>,
    /// Times as `start:step:end`.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    /// Output directory for report.json, trajectories.csv and field.csv.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Extra `key=value` settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ProveRigidity { output, order } => prove_rigidity(output, order),
        Command::VerifyIdentities { which, json } => verify_identities(which, json),
        Command::Flow(args) => flow(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Failed(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(2)
        }
    }
}

fn prove_rigidity(output: Option<PathBuf>, order: Order) -> Result<(), CliError> {
    let order = match order {
        Order::Lex => BaseOrder::Lex,
        Order::Degrevlex => BaseOrder::DegRevLex,
    };
    let rep = prove_affine_rigidity(order).map_err(|e| CliError::Failed(e.to_string()))?;
    let text =
        serde_json::to_string_pretty(&rep).map_err(|e| CliError::Failed(e.to_string()))? + "\n";
    match output {
        Some(p) => {
            fs::write(&p, text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => print!("{text}"),
    }
    let second = ["u1_02", "u1_11", "u1_20", "u2_02", "u2_11", "u2_20"];
    if rep.vanishing_jets.len() == second.len()
        && second
            .iter()
            .all(|j| rep.vanishing_jets.iter().any(|v| v == j))
    {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "second jets forced to zero: {:?}",
            rep.vanishing_jets
        )))
    }
}

fn failed(e: impl ToString) -> CliError {
    CliError::Failed(e.to_string())
}

fn verify_identities(which: Identity, json: bool) -> Result<(), CliError> {
    match which {
        Identity::Thm52 => {
            let d = derive_rotation_system(false, false).map_err(failed)?;
            // Independent check of the factorization against the displayed form.
            let m = SymbolicBlockMatrix::rotation([false, false]);
            let ring = m.ring().clone();
            let n12 = n12_expand(&m).map_err(failed)?.target;
            let q1 = "(u3_10*u2_01 - u3_01*u2_10 - u4_10*u1_01 + u4_01*u1_10)";
            let q2 = "(u4_10*u2_01 - u4_01*u2_10 + u3_10*u1_01 - u3_01*u1_10)";
            let display = ring
                .parse(&format!(
                    "(mu^2 - theta^2)*((s2*c1 - c2*s1)*{q1} + (c1*c2 + s1*s2)*{q2})"
                ))
                .map_err(failed)?;
            let trig = buchberger(
                &[
                    ring.parse("c1^2 + s1^2 - 1").map_err(failed)?,
                    ring.parse("c2^2 + s2^2 - 1").map_err(failed)?,
                ],
                &MonomialOrder::DegRevLex,
            )
            .map_err(failed)?;
            let rem = normal_form(&(&n12 - &display), &trig).map_err(failed)?;
            if json {
                let v = serde_json::json!({ "system": d, "remainder": rem.to_string() });
                println!("{}", serde_json::to_string_pretty(&v).map_err(failed)?);
            } else {
                println!("q1 = {}", d.equations[0]);
                println!("q2 = {}", d.equations[1]);
                if let Some([f1, f2]) = &d.n12_factors {
                    println!("N12 = ({f1})*q1 + ({f2})*q2  mod c1^2 + s1^2 - 1, c2^2 + s2^2 - 1");
                }
                println!("N12 - (mu^2 - theta^2)((s2 c1 - c2 s1) q1 + (c1 c2 + s1 s2) q2) reduces to {rem}");
            }
            if rem.is_zero() {
                Ok(())
            } else {
                Err(failed(format!("factorization remainder {rem}")))
            }
        }
        Identity::Thm56 => {
            let r = verify_thm56().map_err(failed)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r).map_err(failed)?);
            } else {
                for (i, p) in r.p_normal_forms.iter().enumerate() {
                    println!("NF(p{}) = {p}", i + 1);
                }
                println!("det(dphi) formula holds: {}", r.det_formula_holds);
                println!("NF(f2) = NF(f3) = NF(f6) = {}", r.common_normal_form);
                for (i, f) in r.reduced_f.iter().enumerate() {
                    println!("f{}^ = {f}", i + 1);
                }
                println!("f1^ + f4^ - f5^ = {}", r.relation_residual);
                println!("N12 = ({}) (g1 - g4)  mod g4 + g5", r.n12_factor);
                println!(
                    "transport: {} = 0, {} = 0",
                    r.transport.equations[0], r.transport.equations[1]
                );
            }
            if r.det_formula_holds && r.relation_residual == "0" {
                Ok(())
            } else {
                Err(failed("normal-form chain does not close"))
            }
        }
        Identity::Reflections => {
            let mut all = Vec::new();
            for flags in [[false, false], [true, false], [false, true], [true, true]] {
                let d = derive_rotation_system(flags[0], flags[1]).map_err(failed)?;
                if !json {
                    println!("reflections {flags:?}");
                    println!("  q1 = {}", d.equations[0]);
                    println!("  q2 = {}", d.equations[1]);
                    if let Some([f1, f2]) = &d.n12_factors {
                        println!("  N12 = ({f1})*q1 + ({f2})*q2");
                    }
                }
                all.push(d);
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&all).map_err(failed)?);
            }
            Ok(())
        }
    }
}

fn flow(a: FlowArgs) -> Result<(), CliError> {
    let mut asg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            Assignments::parse_text(&text)?
        }
        None => Assignments::default(),
    };
    if let Some(v) = &a.preset {
        asg.push("preset", v);
    }
    for (key, v) in [
        ("k", a.k),
        ("s0", a.s0),
        ("mu0", a.mu0),
        ("mu", a.mu),
        ("theta", a.theta),
    ] {
        if let Some(v) = v {
            asg.push(key, v);
        }
    }
    if let Some(v) = &a.grid {
        asg.push("grid", v);
    }
    if let Some(v) = &a.t {
        asg.push("t", v);
    }
    if let Some(v) = &a.out {
        asg.push("out", v.display());
    }
    for s in &a.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
        asg.push(k.trim(), v.trim());
    }
    let cfg = RunConfig::from_assignments(&asg)?;
    let report = run::run(&cfg).map_err(|e| match e {
        run::RunError::Rejected(m) => CliError::Usage(m),
        run::RunError::Io(e) => CliError::Usage(e.to_string()),
    })?;
    println!("{} ({})", report.preset, report.description);
    for r in &report.reports {
        println!("  {r}");
    }
    if let Some(e) = &report.error {
        println!("  error: {e}");
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "{} check(s) failed",
            report.reports.iter().filter(|r| !r.pass).count().max(1)
        )))
    }
}
