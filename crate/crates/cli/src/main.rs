//! `causalg`: compile algebraic causal models, evaluate and manipulate
//! them, and decide identifiability of causal effects.
//!
//! Exit status is 0 for a conclusive answer, 2 for an inconclusive one
//! (undetermined identifiability, no feasible point found) and 1 for
//! errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use causalg::calculus::{
    condition, manipulate, marginalize, mu_eval, premanipulation_marginal_check, EventSpec, JointPoint,
    ManipulationSpec, ParameterPoint,
};
use causalg::identify::{
    feasible, identify_effect, reproduce_movie_example, EffectSpec, FeasibilityResult, IdentifyOptions, ManifestSpec,
    Verdict, DEFAULT_TRIALS,
};
use causalg::models::{
    apply_constraints, bn_to_dot, compile_poset, hasse_to_dot, parse_constraint_lines, parse_dot, parse_model_file,
    CompiledModel, ModelSource,
};
use causalg::poly::{parse_rational, DEFAULT_STEP_LIMIT};
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "causalg", version, about = "Algebraic causal models: compile, manipulate, identify")]
struct Cli {
    /// Model file (`model bn|tree|poset ...`, or a DOT digraph).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Extra constraint files, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    constraints: Vec<PathBuf>,
    #[arg(long, global = true, env = "CAUSALG_SEED", default_value_t = 0)]
    seed: u64,
    /// S-pair budget for each Gröbner computation.
    #[arg(long, global = true, default_value_t = DEFAULT_STEP_LIMIT)]
    step_limit: usize,
    /// Sampling budget for witness and feasibility search.
    #[arg(long, global = true, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a summary of the compiled model.
    Compile,
    /// Joint distribution at a parameter point (random if none is given).
    Joint {
        /// JSON object mapping parameter names to rationals.
        #[arg(long)]
        point: Option<PathBuf>,
    },
    /// Margin of a BN joint on some variables.
    Marginal {
        /// Joint in the JSON-lines form written by `joint`.
        #[arg(long)]
        joint: PathBuf,
        /// Variables to keep, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        keep: Vec<String>,
    },
    /// Condition a joint on an event such as `X1=0` or `p(1,2),p(2,1)`.
    Condition {
        /// Joint in the JSON-lines form written by `joint`.
        #[arg(long)]
        joint: PathBuf,
        /// Value constraints `X1=0,X2=1` or an atom list.
        #[arg(long)]
        event: String,
    },
    /// Manipulated model, from a manipulation file or `X=x` text.
    Do {
        /// Manipulation file, or `X=x` text.
        manipulation: String,
        /// Also evaluate the manipulated joint at this point.
        #[arg(long)]
        point: Option<PathBuf>,
    },
    /// Decide whether an effect is identifiable from manifest files.
    Identify {
        /// Manifest files, comma separated; their observables are pooled.
        #[arg(long, value_delimiter = ',', required = true)]
        manifest: Vec<PathBuf>,
        /// Effect file with one `effect name = expr` line.
        #[arg(long)]
        effect: PathBuf,
        /// Manipulation resolving `pihat`/`phat` in the effect.
        #[arg(long = "do")]
        manipulation: Option<String>,
    },
    /// Search for a point satisfying every constraint.
    Feasible,
    /// List the atoms with their polynomials.
    Chains,
    /// Graph of the model in DOT.
    ExportDot,
    /// Rerun the bundled violent-movie study and check its claims.
    ReproduceMovie,
}

type CliResult = Result<ExitCode, String>;

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn at(path: &Path) -> impl Fn(&dyn std::fmt::Display) -> String + '_ {
    move |e| format!("{}: {e}", path.display())
}

struct Loaded {
    model: CompiledModel,
    source: ModelSource,
}

fn load(cli: &Cli) -> Result<Loaded, String> {
    let path = cli.model.as_deref().ok_or("--model is required")?;
    let text = read(path)?;
    let (mut model, source) = if text.trim_start().starts_with("digraph") {
        let d = parse_dot(&text).map_err(|e| at(path)(&e))?;
        (compile_poset(&d).map_err(|e| at(path)(&e))?, ModelSource::Poset(d))
    } else {
        let f = parse_model_file(&text).map_err(|e| at(path)(&e))?;
        (f.compile().map_err(|e| at(path)(&e))?, f.source)
    };
    for c in &cli.constraints {
        let lines = parse_constraint_lines(&read(c)?).map_err(|e| at(c)(&e))?;
        model = apply_constraints(model, &lines).map_err(|e| at(c)(&e))?;
    }
    Ok(Loaded { model, source })
}

fn emit(cli: &Cli, text: &str) -> Result<(), String> {
    match &cli.out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn plural(n: usize, one: &str, many: &str) -> String {
    format!("{n} {}", if n == 1 { one } else { many })
}

fn summary(m: &CompiledModel) -> String {
    let degrees: std::collections::BTreeSet<u32> = m.atoms.iter().map(|a| a.factors.len() as u32).collect();
    let degree = match (degrees.first(), degrees.last()) {
        (Some(a), Some(b)) if a == b => format!("degree {a}"),
        (Some(a), Some(b)) => format!("degree {a}..{b}"),
        _ => "degree 0".into(),
    };
    format!(
        "{}, {}, {} after pinning, {degree}\n{} parameters ({} free), {}, {}, {}\n",
        plural(m.atoms.len(), "atom", "atoms"),
        plural(m.blocks.len(), "block", "blocks"),
        plural(m.live_atoms().count(), "chain", "chains"),
        m.parameters().len(),
        m.free_dimension(),
        plural(m.pinned.len(), "pin", "pins"),
        plural(m.equalities.len(), "equality", "equalities"),
        plural(m.inequalities.len(), "inequality", "inequalities"),
    )
}

fn dot(source: &ModelSource) -> Result<String, String> {
    Ok(match source {
        ModelSource::Bn(s) => bn_to_dot(s),
        ModelSource::Tree(t) => hasse_to_dot(&t.to_hasse().map_err(|e| e.to_string())?),
        ModelSource::Poset(d) => hasse_to_dot(d),
    })
}

fn parse_point(model: &CompiledModel, path: &Path) -> Result<ParameterPoint, String> {
    let v: serde_json::Value = serde_json::from_str(&read(path)?).map_err(|e| at(path)(&e))?;
    let obj = v.as_object().ok_or_else(|| at(path)(&"expected a JSON object"))?;
    let mut p = ParameterPoint::default();
    for (name, x) in obj {
        let var = model
            .table
            .get(name)
            .ok_or_else(|| at(path)(&format!("unknown parameter `{name}`")))?;
        let text = match x {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            _ => return Err(at(path)(&format!("value of `{name}` is not a rational"))),
        };
        let r = parse_rational(&text).ok_or_else(|| at(path)(&format!("value of `{name}` is not a rational")))?;
        p.set(var, r);
    }
    Ok(p)
}

fn point_or_sample(cli: &Cli, model: &CompiledModel, path: Option<&Path>) -> Result<ParameterPoint, String> {
    match path {
        Some(p) => parse_point(model, p),
        None => match feasible(model, cli.trials.max(1), cli.seed) {
            FeasibilityResult::FoundPoint(p) => Ok(p),
            FeasibilityResult::NoneFound(n) => Err(format!("no valid point found in {n} trials")),
        },
    }
}

fn manipulation(model: &CompiledModel, arg: &str) -> Result<ManipulationSpec, String> {
    let path = Path::new(arg);
    if path.is_file() {
        ManipulationSpec::parse_file(model, &read(path)?).map_err(|e| at(path)(&e))
    } else {
        ManipulationSpec::parse_do(model, arg).map_err(|e| e.to_string())
    }
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Compile => {
            let l = load(cli)?;
            print!("{}", summary(&l.model));
            if let Some(p) = &cli.out {
                fs::write(p, dot(&l.source)?).map_err(|e| format!("{}: {e}", p.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Joint { point } => {
            let l = load(cli)?;
            let p = point_or_sample(cli, &l.model, point.as_deref())?;
            let j = mu_eval(&l.model, &p).map_err(|e| e.to_string())?;
            emit(cli, &j.to_json_lines())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Marginal { joint, keep } => {
            let l = load(cli)?;
            let info = l.model.bn().ok_or("marginal needs a BN model")?;
            let keep = keep
                .iter()
                .map(|n| info.spec.index_of(n.trim()).ok_or_else(|| format!("unknown variable `{n}`")))
                .collect::<Result<Vec<_>, _>>()?;
            let j = JointPoint::from_json_lines(&read(joint)?).map_err(|e| at(joint)(&e))?;
            let m = marginalize(&l.model, &j, &keep).map_err(|e| e.to_string())?;
            emit(cli, &m.to_json_lines())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Condition { joint, event } => {
            let l = load(cli)?;
            let j = JointPoint::from_json_lines(&read(joint)?).map_err(|e| at(joint)(&e))?;
            let ev = EventSpec::parse(&l.model, event).map_err(|e| e.to_string())?;
            let c = condition(&l.model, &j, &ev).map_err(|e| e.to_string())?;
            emit(cli, &c.to_json_lines())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Do { manipulation: arg, point } => {
            let l = load(cli)?;
            let spec = manipulation(&l.model, arg)?;
            let after = manipulate(&l.model, &spec).map_err(|e| e.to_string())?;
            let prefix = premanipulation_marginal_check(&l.model, &spec).map_err(|e| e.to_string())?;
            let out = match point {
                Some(p) => {
                    let p = parse_point(&l.model, p)?;
                    mu_eval(&after, &p).map_err(|e| e.to_string())?.to_json_lines()
                }
                None => {
                    let mut s = String::new();
                    for a in &after.atoms {
                        s.push_str(&format!("{} = {}\n", a.label, a.poly.display(&after.table)));
                    }
                    s
                }
            };
            emit(cli, &out)?;
            eprintln!(
                "{} after manipulation; pre-manipulation margin {}",
                plural(after.atoms.len(), "atom", "atoms"),
                if prefix { "unchanged" } else { "CHANGED" }
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Identify {
            manifest,
            effect,
            manipulation: arg,
        } => {
            let l = load(cli)?;
            let parts = manifest
                .iter()
                .map(|p| ManifestSpec::parse(&l.model, &read(p)?).map_err(|e| at(p)(&e)))
                .collect::<Result<Vec<_>, _>>()?;
            let manifest = ManifestSpec::union(&parts).map_err(|e| e.to_string())?;
            let spec = match arg {
                Some(a) => manipulation(&l.model, a)?,
                None => ManipulationSpec::new(),
            };
            let eff = EffectSpec::parse(&l.model, &spec, &read(effect)?).map_err(|e| at(effect)(&e))?;
            let opts = IdentifyOptions {
                step_limit: cli.step_limit,
                trials: cli.trials,
                seed: cli.seed,
                ..Default::default()
            };
            let r = identify_effect(&l.model, &manifest, &eff, &opts).map_err(|e| e.to_string())?;
            match r.expression() {
                Some(e) => eprintln!("{}: {e}", r.verdict_name()),
                None => eprintln!("{}", r.verdict_name()),
            }
            emit(cli, &format!("{:#}\n", r.to_json(&l.model)))?;
            Ok(match r.verdict {
                Verdict::Undetermined(_) => ExitCode::from(2),
                _ => ExitCode::SUCCESS,
            })
        }
        Command::Feasible => {
            let l = load(cli)?;
            match feasible(&l.model, cli.trials.max(1), cli.seed) {
                FeasibilityResult::FoundPoint(p) => {
                    let named = p.named(&l.model);
                    emit(cli, &format!("{:#}\n", json!({ "verdict": "feasible", "point": named })))?;
                    Ok(ExitCode::SUCCESS)
                }
                FeasibilityResult::NoneFound(n) => {
                    emit(cli, &format!("{:#}\n", json!({ "verdict": "none-found", "trials": n })))?;
                    Ok(ExitCode::from(2))
                }
            }
        }
        Command::Chains => {
            let l = load(cli)?;
            let mut s = String::new();
            for (_, a) in l.model.live_atoms() {
                s.push_str(&format!("{}\t{}\t{}\n", a.label, a.path.join(" "), a.poly.display(&l.model.table)));
            }
            emit(cli, &s)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportDot => {
            let l = load(cli)?;
            emit(cli, &dot(&l.source)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ReproduceMovie => {
            let opts = IdentifyOptions {
                step_limit: cli.step_limit,
                trials: cli.trials,
                seed: cli.seed,
                ..Default::default()
            };
            let r = reproduce_movie_example(&opts).map_err(|e| e.to_string())?;
            for c in &r.cases {
                let detail = c.result.expression().unwrap_or_default();
                eprintln!(
                    "{:<7} {:<10} {:<17} {}{detail}",
                    c.effect,
                    format!("{:?}", c.experiments),
                    c.result.verdict_name(),
                    if c.agrees() { "" } else { "MISMATCH " }
                );
            }
            emit(cli, &format!("{:#}\n", r.to_json()))?;
            Ok(if r.claims_hold() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
