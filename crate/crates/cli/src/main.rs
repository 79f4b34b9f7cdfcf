//! `cfm`: build nets of CFM specifications and check them for distributed
//! non-interference.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use cfm_core::equivalence::{branching_bisim, rooted_partition};
use cfm_core::generate::spec_from_seed;
use cfm_core::security::{
    dni_compositional, dni_definitional, dni_structural, rooted_dni, sbndc_interleaving, Verdict,
    DEFAULT_STATE_LIMIT,
};
use cfm_core::typing::{equivalent_terms, type_check, Outcome};
use cfm_core::{build_net, parse_spec, restrict_net, Lts, Net, Spec, Term};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "cfm", version, about = "Petri net semantics and non-interference checks for CFM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the net of the main process.
    Net {
        #[command(flatten)]
        input: Input,
        /// Print the restricted net (high transitions removed, places renamed).
        #[arg(long)]
        restrict: bool,
    },
    /// Print the labeled transition system of the main process.
    Lts {
        #[command(flatten)]
        input: Input,
    },
    /// List the markings reachable from the initial marking.
    Reach {
        #[command(flatten)]
        input: Input,
    },
    /// Compare two processes, or print the classes of the net's places.
    Equiv {
        #[command(flatten)]
        input: Input,
        #[arg(long, requires = "right")]
        left: Option<String>,
        #[arg(long, requires = "left")]
        right: Option<String>,
        /// Use the rooted equivalence.
        #[arg(long)]
        rooted: bool,
    },
    /// Check distributed non-interference.
    Dni {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = Method::Struct)]
        method: Method,
        /// Also run the interleaving SBNDC check.
        #[arg(long)]
        sbndc: bool,
    },
    /// Run the type system for rooted non-interference.
    Type {
        #[command(flatten)]
        input: Input,
    },
}

#[derive(Args)]
struct Input {
    /// Specification file. Omit together with --seed to use a random one.
    #[arg(required_unless_present = "seed")]
    file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Cap on explored markings or states.
    #[arg(long, default_value_t = DEFAULT_STATE_LIMIT, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    max_states: usize,
    /// Seed of a random specification (used when no file is given).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Def,
    Struct,
    Comp,
    Rooted,
    All,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

/// Output text and whether the check passed.
type Report = Result<(String, bool), Failure>;

fn load(input: &Input) -> Result<Spec, Failure> {
    match &input.file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            parse_spec(&text).map_err(|e| Failure(format!("{}:{e}", path.display())))
        }
        None => Ok(spec_from_seed(input.seed.expect("clap requires file or seed"))),
    }
}

fn no_dot(input: &Input, what: &str) -> Result<(), Failure> {
    if input.format == Format::Dot {
        return Err(Failure(format!("{what} has no dot output")));
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize")
}

fn net_text(net: &Net) -> String {
    let mut out = String::from("places:\n");
    for p in net.places() {
        writeln!(out, "  {p}").unwrap();
    }
    out.push_str("transitions:\n");
    for t in net.transitions() {
        writeln!(out, "  {}", net.format_transition(t)).unwrap();
    }
    writeln!(out, "initial: {}", net.format_marking(net.initial())).unwrap();
    out
}

fn run_net(input: &Input, restrict: bool) -> Report {
    let spec = load(input)?;
    let mut net = build_net(&spec);
    if restrict {
        net = restrict_net(&net, spec.high_actions());
    }
    let out = match input.format {
        Format::Text => net_text(&net),
        Format::Json => net.to_json(),
        Format::Dot => net.to_dot(),
    };
    Ok((out, true))
}

fn run_lts(input: &Input) -> Report {
    let spec = load(input)?;
    let lts = Lts::explore(spec.main(), &spec, input.max_states)?;
    let out = match input.format {
        Format::Dot => lts.to_dot(),
        Format::Json => {
            let edges: Vec<Value> = lts
                .edges()
                .iter()
                .map(|e| json!({"source": e.source, "label": e.label.to_string(), "target": e.target}))
                .collect();
            let states: Vec<&str> = (0..lts.len()).map(|i| lts.name(i)).collect();
            pretty(&json!({"states": states, "initial": lts.initial(), "edges": edges}))
        }
        Format::Text => {
            let mut out = format!("{} states, {} edges\n", lts.len(), lts.edges().len());
            for e in lts.edges() {
                writeln!(out, "{} -{}-> {}", lts.name(e.source), e.label, lts.name(e.target)).unwrap();
            }
            out
        }
    };
    Ok((out, true))
}

fn run_reach(input: &Input) -> Report {
    no_dot(input, "reach")?;
    let spec = load(input)?;
    let net = build_net(&spec);
    let reach = net.reach_bounded(net.initial(), input.max_states)?;
    let out = match input.format {
        Format::Json => {
            let ms: Vec<Value> = reach
                .iter()
                .map(|m| {
                    let named: serde_json::Map<String, Value> = net
                        .marking_names(m)
                        .iter()
                        .map(|(n, c)| (n.clone(), json!(c)))
                        .collect();
                    Value::Object(named)
                })
                .collect();
            pretty(&json!({"markings": ms}))
        }
        _ => {
            let mut out = format!("{} reachable markings\n", reach.len());
            for m in &reach {
                writeln!(out, "{}", net.format_marking(m)).unwrap();
            }
            out
        }
    };
    Ok((out, true))
}

fn term(spec: &Spec, text: &str, side: &str) -> Result<Term, Failure> {
    let t = spec
        .parse_term(text)
        .map_err(|e| Failure(format!("--{side}:{e}")))?;
    spec.with_main(t.clone())
        .map_err(|e| Failure(format!("--{side}: {e}")))?;
    Ok(t)
}

fn run_equiv(input: &Input, pair: Option<(&str, &str)>, rooted: bool) -> Report {
    no_dot(input, "equiv")?;
    let spec = load(input)?;
    let relation = if rooted { "rooted branching team" } else { "branching team" };
    if let Some((l, r)) = pair {
        let p = term(&spec, l, "left")?;
        let q = term(&spec, r, "right")?;
        let eq = equivalent_terms(&p, &q, &spec, rooted);
        let out = match input.format {
            Format::Json => pretty(&json!({"left": p.to_string(), "right": q.to_string(), "rooted": rooted, "equivalent": eq})),
            _ => format!(
                "{p} and {q} are {}{relation} equivalent\n",
                if eq { "" } else { "not " }
            ),
        };
        return Ok((out, eq));
    }
    let net = build_net(&spec);
    let mut partition = branching_bisim(&net);
    if rooted {
        partition = rooted_partition(&net, &partition);
    }
    let out = match input.format {
        Format::Json => partition.to_json(&net),
        _ => {
            let mut out = String::new();
            for c in partition.named_classes(&net) {
                writeln!(out, "{{{}}}", c.join(", ")).unwrap();
            }
            out
        }
    };
    Ok((out, true))
}

fn verdict_text(name: &str, v: &Verdict) -> String {
    let mut out = format!("{name}: {}\n", if v.secure { "secure" } else { "insecure" });
    for w in &v.witnesses {
        let t = &w.high_transition;
        let post = t.post.as_deref().unwrap_or("θ");
        write!(out, "  {} -{}-> {post}", t.pre, t.label).unwrap();
        if let Some(m) = &w.context_marking {
            let parts: Vec<String> = m
                .iter()
                .map(|(p, c)| if *c == 1 { p.clone() } else { format!("{c}·{p}") })
                .collect();
            write!(out, " at {{{}}}", parts.join(", ")).unwrap();
        }
        writeln!(out, ": {}", w.reason).unwrap();
    }
    out
}

fn run_dni(input: &Input, method: Method, sbndc: bool) -> Report {
    no_dot(input, "dni")?;
    let spec = load(input)?;
    let mut verdicts: Vec<(&str, Verdict)> = Vec::new();
    if matches!(method, Method::Def | Method::All) {
        verdicts.push(("definitional", dni_definitional(&spec, input.max_states)?));
    }
    if matches!(method, Method::Struct | Method::All) {
        verdicts.push(("structural", dni_structural(&spec)));
    }
    if matches!(method, Method::Comp | Method::All) {
        verdicts.push(("compositional", dni_compositional(&spec)));
    }
    if method == Method::Rooted {
        verdicts.push(("rooted", rooted_dni(&spec)));
    }
    if sbndc {
        verdicts.push(("sbndc", sbndc_interleaving(&spec, input.max_states)?));
    }
    let ok = verdicts.iter().all(|(_, v)| v.secure);
    let out = match input.format {
        Format::Json => {
            let map: serde_json::Map<String, Value> = verdicts
                .iter()
                .map(|(n, v)| (n.to_string(), serde_json::to_value(v).expect("verdicts serialize")))
                .collect();
            pretty(&Value::Object(map))
        }
        _ => verdicts.iter().map(|(n, v)| verdict_text(n, v)).collect(),
    };
    Ok((out, ok))
}

fn run_type(input: &Input) -> Report {
    no_dot(input, "type")?;
    let spec = load(input)?;
    let j = type_check(&spec);
    let out = match input.format {
        Format::Json => j.to_json(),
        _ => match &j.outcome {
            Outcome::Typed {
                derivation,
                reordered,
                reordered_defs,
            } => {
                let mut out = format!("typed\n{derivation}");
                if reordered != spec.main() {
                    writeln!(out, "reordered: {reordered}").unwrap();
                }
                for (c, body) in reordered_defs {
                    if spec.body(c) != Some(body) {
                        writeln!(out, "reordered: {c} := {body}").unwrap();
                    }
                }
                out
            }
            Outcome::Untyped { reason, subterm } => {
                format!("untyped: {reason}\n  at {subterm}\n")
            }
        },
    };
    Ok((out, j.is_typed()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match &cli.command {
        Command::Net { input, restrict } => run_net(input, *restrict),
        Command::Lts { input } => run_lts(input),
        Command::Reach { input } => run_reach(input),
        Command::Equiv {
            input,
            left,
            right,
            rooted,
        } => run_equiv(
            input,
            left.as_deref().zip(right.as_deref()),
            *rooted,
        ),
        Command::Dni {
            input,
            method,
            sbndc,
        } => run_dni(input, *method, *sbndc),
        Command::Type { input } => run_type(input),
    };
    match report {
        Ok((out, ok)) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
