//! Command-line front end. [`run`] parses arguments, dispatches one
//! subcommand and returns the exit code with everything it would print, so
//! the binary and the tests share one code path.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::Path;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use posscond::axioms::{
    check_d_axioms, independence_product, recover_coefficients, rott_entails, search_independent_joint,
    verify_independence, AxiomReport, JointGrid, MarginalSpec,
};
use posscond::conditioning::{confidence_transfer, RuleId};
use posscond::logic::{parse_formula, Formula, Frame, Literal};
use posscond::network::{load_net, oracle_marginal, PossibilisticNet, ALARM_MODEL};
use posscond::possibility::{parse_density, Density};
use posscond::propagation::{query_target, MarkovTree, Potential};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Exit code plus the text destined for stdout and stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    fn domain(e: impl std::fmt::Display) -> Self {
        CliError::Domain(e.to_string())
    }

    fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "posscond", version, about = "Possibilistic conditioning and propagation")]
struct Cli {
    /// Output encoding.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Engine {
    Propagate,
    Oracle,
    Both,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Rule {
    Dempster,
    Minimum,
    Yager,
}

impl Rule {
    fn id(self) -> RuleId {
        match self {
            Rule::Dempster => RuleId::Dempster,
            Rule::Minimum => RuleId::Minimum,
            Rule::Yager => RuleId::Yager,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Demo {
    Alarm,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and validate a network model.
    Validate { model: String },
    /// Compute (Π(P|ε), Π(¬P|ε)) for one variable.
    Query {
        /// Model file, or `alarm` for the bundled network.
        model: String,
        /// Evidence; a conjunction of literals unless the engine is `oracle`.
        #[arg(long, default_value = "true")]
        evidence: String,
        #[arg(long)]
        target: String,
        #[arg(long, value_enum, default_value_t = Engine::Propagate)]
        engine: Engine,
    },
    /// Condition a density on a formula by confidence transfer.
    Condition {
        density: String,
        #[arg(long)]
        on: String,
        #[arg(long, value_enum, default_value_t = Rule::Dempster)]
        rule: Rule,
    },
    /// Check (D1)-(D3) for the conditional produced by a rule, or for a
    /// conditional read from a file.
    Axioms {
        density: String,
        #[arg(long)]
        on: String,
        #[arg(long, value_enum, default_value_t = Rule::Dempster)]
        rule: Rule,
        /// Density file to check instead of the rule's output.
        #[arg(long)]
        conditional: Option<String>,
    },
    /// Decide α |~ γ by Co(α ⊃ γ) > Co(¬α).
    Entails {
        density: String,
        #[arg(long)]
        given: String,
        #[arg(long)]
        query: String,
    },
    /// Check or search for belief-independent joints of two partitions.
    Independence {
        #[arg(long, value_enum)]
        rule: Rule,
        /// Comma-separated Π(αᵢ).
        #[arg(long = "marginal-a")]
        marginal_a: String,
        /// Comma-separated Π(βⱼ).
        #[arg(long = "marginal-b")]
        marginal_b: String,
        /// Search the value lattice instead of checking the product joint.
        #[arg(long)]
        search: bool,
        #[arg(long, default_value_t = 0.01)]
        resolution: f64,
    },
    /// Walk through a bundled example.
    Demo {
        #[arg(value_enum)]
        name: Demo,
    },
}

struct Output {
    human: String,
    json: Value,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandResult {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                CommandResult {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match dispatch(&cli.command) {
        Ok(out) => CommandResult {
            code: EXIT_OK,
            stdout: match cli.format {
                Format::Human => out.human,
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&out.json).expect("serializable")),
            },
            stderr: String::new(),
        },
        Err(CliError::Usage(msg)) => CommandResult {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
        Err(CliError::Domain(msg)) => CommandResult {
            code: EXIT_DOMAIN,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
    }
}

fn dispatch(command: &Command) -> Result<Output, CliError> {
    match command {
        Command::Validate { model } => validate(model),
        Command::Query {
            model,
            evidence,
            target,
            engine,
        } => query(model, evidence, target, *engine),
        Command::Condition { density, on, rule } => condition(density, on, *rule),
        Command::Axioms {
            density,
            on,
            rule,
            conditional,
        } => axioms(density, on, *rule, conditional.as_deref()),
        Command::Entails { density, given, query } => entails(density, given, query),
        Command::Independence {
            rule,
            marginal_a,
            marginal_b,
            search,
            resolution,
        } => independence(*rule, marginal_a, marginal_b, *search, *resolution),
        Command::Demo { name: Demo::Alarm } => demo_alarm(),
    }
}

/// Shortest round-trip decimal, always with a fractional part.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn read(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Domain(format!("cannot read {path}: {e}")))
}

fn read_model(model: &str) -> Result<PossibilisticNet, CliError> {
    let text = if model == "alarm" && !Path::new(model).exists() {
        ALARM_MODEL.to_string()
    } else {
        read(model)?
    };
    load_net(&text).map_err(|e| CliError::Domain(format!("invalid model: {e}")))
}

fn read_density(path: &str) -> Result<Density, CliError> {
    parse_density(&read(path)?).map_err(|e| CliError::Domain(format!("invalid density: {e}")))
}

fn formula(text: &str, frame: &Frame) -> Result<Formula, CliError> {
    parse_formula(text, frame).map_err(|e| CliError::Usage(format!("formula `{text}`: {e}")))
}

fn validate(model: &str) -> Result<Output, CliError> {
    let net = read_model(model)?;
    let f = net.frame();
    let tree = MarkovTree::from_net(&net).map_err(CliError::domain)?;
    let families: Vec<Vec<&str>> = net
        .families()
        .iter()
        .map(|fam| fam.iter().map(|&v| f.name(v)).collect())
        .collect();
    let mut human = format!("valid model: {} variables\n", f.len());
    for (q, fam) in families.iter().enumerate() {
        let _ = writeln!(human, "  {}: family {{{}}}", f.name(q), fam.join(", "));
    }
    human.push_str("markov tree:\n");
    for line in tree.render_adjacency().lines() {
        let _ = writeln!(human, "  {line}");
    }
    Ok(Output {
        human,
        json: json!({
            "valid": true,
            "variables": f.names(),
            "families": families,
            "tree": tree_json(&tree),
        }),
    })
}

fn tree_json(tree: &MarkovTree) -> Value {
    let f = tree.frame();
    json!({
        "nodes": (0..tree.len())
            .map(|i| tree.scope(i).iter().map(|v| f.name(v)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "edges": tree.edges().iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>(),
    })
}

struct QueryRow {
    engine: &'static str,
    positive: f64,
    negative: f64,
}

fn run_query(
    net: &PossibilisticNet,
    evidence: &Formula,
    target: usize,
    engine: Engine,
) -> Result<Vec<QueryRow>, CliError> {
    let literals: Option<Vec<Literal>> = evidence.literal_conjunction();
    let mut rows = Vec::new();
    if matches!(engine, Engine::Propagate | Engine::Both) {
        let literals = literals.ok_or_else(|| {
            CliError::Usage("evidence must be a conjunction of literals unless --engine oracle".into())
        })?;
        let tree = MarkovTree::from_net(net).map_err(CliError::domain)?;
        let (positive, negative) = query_target(&tree, target, &literals).map_err(CliError::domain)?;
        rows.push(QueryRow {
            engine: "propagate",
            positive,
            negative,
        });
    }
    if matches!(engine, Engine::Oracle | Engine::Both) {
        let (positive, negative) = oracle_marginal(net, target, evidence).map_err(CliError::domain)?;
        rows.push(QueryRow {
            engine: "oracle",
            positive,
            negative,
        });
    }
    Ok(rows)
}

fn max_diff(rows: &[QueryRow]) -> Option<f64> {
    match rows {
        [a, b] => Some((a.positive - b.positive).abs().max((a.negative - b.negative).abs())),
        _ => None,
    }
}

fn query_table(target: &str, evidence: &str, rows: &[QueryRow]) -> String {
    let pos = format!("Π({target}|ε)");
    let neg = format!("Π(!{target}|ε)");
    let mut out = format!("target {target}, evidence ε = {evidence}\n");
    let _ = writeln!(out, "{:<10} {:<22} {}", "engine", pos, neg);
    for r in rows {
        let _ = writeln!(out, "{:<10} {:<22} {}", r.engine, num(r.positive), num(r.negative));
    }
    if let Some(d) = max_diff(rows) {
        let _ = writeln!(out, "max |diff| {}", num(d));
    }
    out
}

fn query_json(target: &str, evidence: &str, rows: &[QueryRow]) -> Value {
    let mut value = json!({
        "target": target,
        "evidence": evidence,
        "results": rows
            .iter()
            .map(|r| json!({"engine": r.engine, "positive": r.positive, "negative": r.negative}))
            .collect::<Vec<_>>(),
    });
    if let Some(d) = max_diff(rows) {
        value["max_abs_diff"] = json!(d);
    }
    value
}

fn query(model: &str, evidence: &str, target: &str, engine: Engine) -> Result<Output, CliError> {
    let net = read_model(model)?;
    let f = net.frame();
    let var = f
        .index_of(target)
        .ok_or_else(|| CliError::Usage(format!("unknown target variable `{target}`")))?;
    let ev = formula(evidence, f)?;
    let rows = run_query(&net, &ev, var, engine)?;
    Ok(Output {
        human: query_table(target, evidence, &rows),
        json: query_json(target, evidence, &rows),
    })
}

fn density_table(d: &Density) -> String {
    let f = d.frame();
    let mut out = format!("{}  value\n", f.names().join(" "));
    for w in f.worlds() {
        let label: Vec<String> = f.world_label(w).chars().map(String::from).collect();
        let _ = writeln!(out, "{}  {}", label.join(" "), num(d.value(w)));
    }
    out
}

fn density_json(d: &Density) -> Value {
    let f = d.frame();
    json!({
        "frame": f.names(),
        "worlds": f.worlds()
            .map(|w| json!({"world": f.world_label(w), "value": d.value(w)}))
            .collect::<Vec<_>>(),
    })
}

fn condition(path: &str, on: &str, rule: Rule) -> Result<Output, CliError> {
    let d = read_density(path)?;
    let alpha = formula(on, d.frame())?.models(d.frame());
    let cond = confidence_transfer(&d, &alpha, &rule.id()).map_err(CliError::domain)?;
    let rule = rule.id();
    Ok(Output {
        human: format!("conditioned on {on} ({rule})\n{}", density_table(&cond)),
        json: json!({"on": on, "rule": rule.name(), "density": density_json(&cond)}),
    })
}

fn report_lines(report: &AxiomReport) -> (String, Value) {
    let mut human = String::new();
    let mut items = Vec::new();
    for o in &report.outcomes {
        let status = if o.passed() { "pass" } else { "FAIL" };
        let _ = writeln!(
            human,
            "{:<8} {status}  {} instances, {} violations",
            o.axiom.to_string(),
            o.instances,
            o.violations.len()
        );
        for v in o.violations.iter().take(5) {
            let _ = writeln!(human, "  {}", v.certificate());
        }
        items.push(json!({
            "axiom": o.axiom.to_string(),
            "passed": o.passed(),
            "instances": o.instances,
            "violations": o.violations.iter().map(|v| v.certificate()).collect::<Vec<_>>(),
        }));
    }
    (human, Value::Array(items))
}

fn axioms(path: &str, on: &str, rule: Rule, conditional: Option<&str>) -> Result<Output, CliError> {
    let prior = read_density(path)?;
    let alpha = formula(on, prior.frame())?.models(prior.frame());
    let rule = rule.id();
    let (cond, source) = match conditional {
        Some(p) => {
            let c = read_density(p)?;
            if c.frame().names() != prior.frame().names() {
                return Err(CliError::Domain("conditional and prior use different frames".into()));
            }
            let c = Density::new(prior.frame(), c.values().to_vec()).map_err(CliError::domain)?;
            (c, p.to_string())
        }
        None => (
            confidence_transfer(&prior, &alpha, &rule).map_err(CliError::domain)?,
            format!("{rule} rule"),
        ),
    };
    let report = check_d_axioms(&prior, &alpha, &cond).map_err(CliError::domain)?;
    let coefficients = recover_coefficients(&prior, &alpha, &cond).map_err(CliError::domain)?;
    let (lines, items) = report_lines(&report);
    let mut human = format!("conditional on {on} from {source}\n{lines}");
    match &coefficients {
        Some(c) => {
            let c: Vec<String> = c.iter().map(|&x| num(x)).collect();
            let _ = writeln!(human, "coefficients: {}", c.join(" "));
        }
        None => human.push_str("coefficients: not reachable by confidence transfer\n"),
    }
    Ok(Output {
        human,
        json: json!({
            "on": on,
            "source": source,
            "passed": report.passed(),
            "axioms": items,
            "coefficients": coefficients,
        }),
    })
}

fn entails(path: &str, given: &str, query: &str) -> Result<Output, CliError> {
    let d = read_density(path)?;
    let f = d.frame().clone();
    let (alpha, gamma) = (formula(given, &f)?, formula(query, &f)?);
    let verdict = rott_entails(&d, &alpha, &gamma).map_err(CliError::domain)?;
    let not_alpha = Formula::not(alpha.clone());
    let co_implication = 1.0 - d.measure_of(&Formula::not(Formula::implies(alpha, gamma)));
    let co_not_given = 1.0 - d.measure_of(&Formula::not(not_alpha));
    let symbol = if verdict { "|~" } else { "does not |~" };
    Ok(Output {
        human: format!(
            "{given} {symbol} {query}\nCo(α ⊃ γ) = {}\nCo(¬α) = {}\n",
            num(co_implication),
            num(co_not_given)
        ),
        json: json!({
            "given": given,
            "query": query,
            "entails": verdict,
            "co_implication": co_implication,
            "co_not_given": co_not_given,
        }),
    })
}

fn parse_marginal(prefix: &str, text: &str) -> Result<MarginalSpec, CliError> {
    let values = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("marginal value `{}` is not a number", t.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    MarginalSpec::new(prefix, values).map_err(CliError::domain)
}

fn grid_lines(grid: &JointGrid) -> String {
    let mut out = String::new();
    for row in grid.to_rows() {
        let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
        let _ = writeln!(out, "  {}", cells.join("  "));
    }
    out
}

fn independence(
    rule: Rule,
    marginal_a: &str,
    marginal_b: &str,
    search: bool,
    resolution: f64,
) -> Result<Output, CliError> {
    let a = parse_marginal("a", marginal_a)?;
    let b = parse_marginal("b", marginal_b)?;
    let rule = rule.id();
    if search {
        if a.len() > 2 || b.len() > 2 {
            return Err(CliError::Usage("--search supports partitions of at most two cells".into()));
        }
        let found = search_independent_joint(&a, &b, &rule, resolution).map_err(CliError::usage)?;
        let human = match &found {
            Some(grid) => format!("independent joint under {rule} at resolution {resolution}:\n{}", grid_lines(grid)),
            None => format!("no independent joint under {rule} at resolution {resolution}\n"),
        };
        return Ok(Output {
            human,
            json: json!({
                "rule": rule.name(),
                "resolution": resolution,
                "found": found.as_ref().map(JointGrid::to_rows),
            }),
        });
    }
    let grid = independence_product(&a, &b);
    let report = verify_independence(&grid, &a, &b, &rule).map_err(CliError::domain)?;
    let (lines, items) = report_lines(&report);
    let verdict = if report.passed() { "independent" } else { "not independent" };
    Ok(Output {
        human: format!("product joint under {rule}: {verdict}\n{}{lines}", grid_lines(&grid)),
        json: json!({
            "rule": rule.name(),
            "grid": grid.to_rows(),
            "passed": report.passed(),
            "checks": items,
        }),
    })
}

fn demo_alarm() -> Result<Output, CliError> {
    let net = read_model("alarm")?;
    let f = net.frame();
    let tree = MarkovTree::from_net(&net).map_err(CliError::domain)?;
    let mut human = String::from("potentials\n");
    let mut potentials = Vec::new();
    for q in 0..f.len() {
        let p = Potential::from_node(&net, q);
        let _ = writeln!(human, "\n{}", p.scope().render(f));
        human.push_str(&p.render(2));
        potentials.push(json!({
            "scope": p.scope().iter().map(|v| f.name(v)).collect::<Vec<_>>(),
            "values": p.values(),
        }));
    }
    human.push_str("\nmarkov tree\n");
    human.push_str(&tree.render_adjacency());

    let mut queries = Vec::new();
    let mut overall: f64 = 0.0;
    for evidence in ["W & R", "!W"] {
        let ev = formula(evidence, f)?;
        let _ = writeln!(human, "\nevidence {evidence}");
        let _ = writeln!(human, "{:<4} {:<22} {:<22} |diff|", "var", "propagate", "oracle");
        for var in 0..f.len() {
            let rows = run_query(&net, &ev, var, Engine::Both)?;
            let diff = max_diff(&rows).expect("both engines ran");
            overall = overall.max(diff);
            let pair = |r: &QueryRow| format!("({}, {})", num(r.positive), num(r.negative));
            let _ = writeln!(
                human,
                "{:<4} {:<22} {:<22} {}",
                f.name(var),
                pair(&rows[0]),
                pair(&rows[1]),
                num(diff)
            );
            queries.push(query_json(f.name(var), evidence, &rows));
        }
    }
    let _ = writeln!(human, "\nmax |diff| over all queries {}", num(overall));
    Ok(Output {
        human,
        json: json!({
            "potentials": potentials,
            "tree": tree_json(&tree),
            "queries": queries,
            "max_abs_diff": overall,
        }),
    })
}
