//! Possibilistic causal networks over binary variables: a DAG with priors on
//! roots and conditional tables elsewhere, the chain-product joint, and a
//! brute-force conditional oracle.

use std::fmt::Write as _;

use thiserror::Error;

use crate::logic::{Event, Formula, Frame, Literal, LogicError, World};
use crate::possibility::{Density, LEVEL_TOLERANCE};

/// The alarm network bundled with the crate.
pub const ALARM_MODEL: &str = include_str!("../fixtures/alarm");

/// Largest number of fraction digits accepted in model files.
pub const MAX_FRACTION_DIGITS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("node {node}: {message}")]
    Structure { node: String, message: String },
    #[error("cycle detected through {0}")]
    Cycle(String),
    #[error("node {node}: missing table row {row}")]
    MissingRow { node: String, row: String },
    #[error("node {node}, row {row}: row maximum {max} is not 1")]
    RowMaximum { node: String, row: String, max: f64 },
    #[error("node {node}, row {row}: value {value} is outside [0, 1]")]
    OutOfRange { node: String, row: String, value: f64 },
    #[error("impossible evidence")]
    ImpossibleEvidence,
}

/// One node's specification: its parents (frame indices, in table order) and
/// one `[Π(Q|cfg), Π(¬Q|cfg)]` row per parent configuration.
///
/// Row `r` assigns parent `i` the value F iff bit `k−1−i` of `r` is set, so
/// the first parent is the most significant and T precedes F. A root has no
/// parents and a single row holding its prior.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub parents: Vec<usize>,
    pub rows: Vec<[f64; 2]>,
}

impl NodeSpec {
    pub fn root(prior: [f64; 2]) -> Self {
        Self {
            parents: Vec::new(),
            rows: vec![prior],
        }
    }

    pub fn conditional(parents: Vec<usize>, rows: Vec<[f64; 2]>) -> Self {
        Self { parents, rows }
    }

    pub fn is_root(&self) -> bool {
        self.parents.is_empty()
    }
}

/// Renders a parent configuration like `T F`.
fn row_label(parent_count: usize, row: usize) -> String {
    if parent_count == 0 {
        return "prior".into();
    }
    (0..parent_count)
        .map(|i| if row >> (parent_count - 1 - i) & 1 == 0 { "T" } else { "F" })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PossibilisticNet {
    frame: Frame,
    nodes: Vec<NodeSpec>,
    order: Vec<usize>,
}

impl PossibilisticNet {
    /// Validates acyclicity, table completeness, value ranges and row maxima.
    /// Row maxima within `1e-9` of 1 are stored as exactly 1.
    pub fn new(frame: &Frame, mut nodes: Vec<NodeSpec>) -> Result<Self, NetError> {
        let n = frame.len();
        if nodes.len() != n {
            return Err(NetError::Structure {
                node: String::new(),
                message: format!("{} node specs for {n} variables", nodes.len()),
            });
        }
        for (q, spec) in nodes.iter_mut().enumerate() {
            let name = frame.name(q).to_string();
            for (i, &p) in spec.parents.iter().enumerate() {
                if p >= n {
                    return Err(NetError::Structure {
                        node: name,
                        message: format!("parent index {p} is outside the frame"),
                    });
                }
                if p == q || spec.parents[..i].contains(&p) {
                    return Err(NetError::Structure {
                        node: name,
                        message: format!("invalid parent {}", frame.name(p)),
                    });
                }
            }
            let expected = 1usize << spec.parents.len();
            if spec.rows.len() < expected {
                return Err(NetError::MissingRow {
                    node: name,
                    row: row_label(spec.parents.len(), spec.rows.len()),
                });
            }
            if spec.rows.len() > expected {
                return Err(NetError::Structure {
                    node: name,
                    message: format!("{} rows, expected {expected}", spec.rows.len()),
                });
            }
            for (r, row) in spec.rows.iter_mut().enumerate() {
                let label = || row_label(spec.parents.len(), r);
                if let Some(&value) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(NetError::OutOfRange {
                        node: name,
                        row: label(),
                        value,
                    });
                }
                let max = row[0].max(row[1]);
                if (max - 1.0).abs() > LEVEL_TOLERANCE {
                    return Err(NetError::RowMaximum {
                        node: name,
                        row: label(),
                        max,
                    });
                }
                let top = if row[0] >= row[1] { 0 } else { 1 };
                row[top] = 1.0;
            }
        }
        let order = topological_order(frame, &nodes)?;
        Ok(Self {
            frame: frame.clone(),
            nodes,
            order,
        })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn node(&self, var: usize) -> &NodeSpec {
        &self.nodes[var]
    }

    /// Variables parents-first; ties follow declaration order.
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// `{Q} ∪ parents(Q)` for every node, in declaration order.
    pub fn families(&self) -> Vec<Vec<usize>> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(q, spec)| {
                let mut family = spec.parents.clone();
                family.push(q);
                family.sort_unstable();
                family
            })
            .collect()
    }

    /// Table row selected by `world` for node `var`.
    pub fn row_index(&self, var: usize, world: World) -> usize {
        let parents = &self.nodes[var].parents;
        let k = parents.len();
        parents.iter().enumerate().fold(0, |acc, (i, &p)| {
            if self.frame.holds(world, p) {
                acc
            } else {
                acc | 1 << (k - 1 - i)
            }
        })
    }

    /// The node's factor in the product joint at `world`.
    pub fn factor(&self, var: usize, world: World) -> f64 {
        let row = self.nodes[var].rows[self.row_index(var, world)];
        if self.frame.holds(world, var) {
            row[0]
        } else {
            row[1]
        }
    }

    /// Product of the factors of the nodes in `vars` at `world`, multiplied
    /// in topological order.
    pub fn partial_product(&self, vars: &[usize], world: World) -> f64 {
        self.order
            .iter()
            .filter(|q| vars.contains(q))
            .fold(1.0, |acc, &q| acc * self.factor(q, world))
    }

    /// Serializes in the model file format.
    pub fn to_model_text(&self) -> String {
        let mut out = format!("vars: {}\n", self.frame.names().join(" "));
        for (q, spec) in self.nodes.iter().enumerate() {
            let name = self.frame.name(q);
            if spec.is_root() {
                let [t, f] = spec.rows[0];
                let _ = writeln!(out, "prior {name}: {t} {f}");
                continue;
            }
            let parents: Vec<&str> = spec.parents.iter().map(|&p| self.frame.name(p)).collect();
            let _ = writeln!(out, "cond {name} | {}:", parents.join(" "));
            for (r, [t, f]) in spec.rows.iter().enumerate() {
                let _ = writeln!(out, "  {} : {t} {f}", row_label(spec.parents.len(), r));
            }
        }
        out
    }
}

/// Kahn's algorithm, always releasing the lowest-indexed ready node.
fn topological_order(frame: &Frame, nodes: &[NodeSpec]) -> Result<Vec<usize>, NetError> {
    let n = nodes.len();
    let mut pending: Vec<usize> = nodes.iter().map(|s| s.parents.len()).collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let Some(next) = (0..n).find(|&q| !done[q] && pending[q] == 0) else {
            let stuck: Vec<&str> = (0..n).filter(|&q| !done[q]).map(|q| frame.name(q)).collect();
            return Err(NetError::Cycle(stuck.join(", ")));
        };
        done[next] = true;
        order.push(next);
        for (q, spec) in nodes.iter().enumerate() {
            if spec.parents.contains(&next) {
                pending[q] -= 1;
            }
        }
    }
    Ok(order)
}

/// The product joint `π(ω) = ∏_Q Π(L_Q | L_parents(Q))`.
pub fn joint_density(net: &PossibilisticNet) -> Density {
    let frame = net.frame();
    let all: Vec<usize> = (0..frame.len()).collect();
    let values = frame.worlds().map(|w| net.partial_product(&all, w)).collect();
    Density::from_parts(frame, values)
}

/// `Π(target ∧ evidence) / Π(evidence)` read off a joint density.
pub fn conditional_from_joint(
    joint: &Density,
    target: &Event,
    evidence: &Event,
) -> Result<f64, NetError> {
    let pi_evidence = joint.measure_unchecked(evidence);
    if pi_evidence <= 0.0 {
        return Err(NetError::ImpossibleEvidence);
    }
    let both = target.intersection(evidence)?;
    Ok(joint.measure_unchecked(&both) / pi_evidence)
}

/// Brute-force `Π(target | evidence)` by enumerating every world.
pub fn oracle_conditional(
    net: &PossibilisticNet,
    target: &Formula,
    evidence: &Formula,
) -> Result<f64, NetError> {
    let frame = net.frame();
    let joint = joint_density(net);
    conditional_from_joint(&joint, &target.models(frame), &evidence.models(frame))
}

/// `(Π(P | ε), Π(¬P | ε))` by enumeration.
pub fn oracle_marginal(
    net: &PossibilisticNet,
    target: usize,
    evidence: &Formula,
) -> Result<(f64, f64), NetError> {
    let frame = net.frame();
    let joint = joint_density(net);
    let e = evidence.models(frame);
    let pos = Formula::literal(Literal::new(target, true)).models(frame);
    Ok((
        conditional_from_joint(&joint, &pos, &e)?,
        conditional_from_joint(&joint, &pos.complement(), &e)?,
    ))
}

fn parse_value(token: &str, line: usize) -> Result<f64, NetError> {
    let err = |message: String| NetError::Syntax { line, message };
    let (int, frac) = token.split_once('.').unwrap_or((token, ""));
    let digits_ok = !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.bytes().all(|b| b.is_ascii_digit());
    if !digits_ok {
        return Err(err(format!("invalid number `{token}`")));
    }
    if frac.len() > MAX_FRACTION_DIGITS {
        return Err(err(format!(
            "`{token}` has more than {MAX_FRACTION_DIGITS} fraction digits"
        )));
    }
    token
        .parse()
        .map_err(|_| err(format!("invalid number `{token}`")))
}

fn parse_pair(text: &str, line: usize) -> Result<[f64; 2], NetError> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() != 2 {
        return Err(NetError::Syntax {
            line,
            message: format!("expected two values, found {}", tokens.len()),
        });
    }
    Ok([parse_value(tokens[0], line)?, parse_value(tokens[1], line)?])
}

struct PendingCond {
    node: usize,
    parents: Vec<usize>,
    rows: Vec<Option<[f64; 2]>>,
}

/// Parses and validates a model file.
///
/// ```text
/// vars: B E A
/// prior B: 1.0 1.0
/// prior E: 1.0 1.0
/// cond A | B E:
///   T T : 1.0 0.05
///   ...
/// ```
pub fn load_net(text: &str) -> Result<PossibilisticNet, NetError> {
    let mut frame: Option<Frame> = None;
    let mut specs: Vec<Option<NodeSpec>> = Vec::new();
    let mut current: Option<PendingCond> = None;

    fn finish(
        frame: &Frame,
        specs: &mut [Option<NodeSpec>],
        pending: Option<PendingCond>,
    ) -> Result<(), NetError> {
        let Some(p) = pending else { return Ok(()) };
        let mut rows = Vec::with_capacity(p.rows.len());
        for (r, row) in p.rows.iter().enumerate() {
            match row {
                Some(v) => rows.push(*v),
                None => {
                    return Err(NetError::MissingRow {
                        node: frame.name(p.node).to_string(),
                        row: row_label(p.parents.len(), r),
                    })
                }
            }
        }
        specs[p.node] = Some(NodeSpec::conditional(p.parents, rows));
        Ok(())
    }

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| NetError::Syntax { line, message };
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let indented = content.starts_with([' ', '\t']);
        let content = content.trim();

        if indented {
            let (Some(f), Some(cond)) = (frame.as_ref(), current.as_mut()) else {
                return Err(err("table row outside a `cond` block".into()));
            };
            let (lhs, rhs) = content
                .split_once(':')
                .ok_or_else(|| err("expected `<T|F ...> : <value> <value>`".into()))?;
            let labels: Vec<&str> = lhs.split_whitespace().collect();
            let k = cond.parents.len();
            if labels.len() != k {
                return Err(err(format!(
                    "row for {} needs {k} parent values, found {}",
                    f.name(cond.node),
                    labels.len()
                )));
            }
            let mut r = 0;
            for (j, label) in labels.iter().enumerate() {
                match *label {
                    "T" => {}
                    "F" => r |= 1 << (k - 1 - j),
                    other => return Err(err(format!("expected T or F, found `{other}`"))),
                }
            }
            let pair = parse_pair(rhs, line)?;
            if cond.rows[r].replace(pair).is_some() {
                return Err(err(format!("duplicate row `{}`", labels.join(" "))));
            }
            continue;
        }

        if let Some(f) = frame.as_ref() {
            finish(f, &mut specs, current.take())?;
        }

        if let Some(rest) = content.strip_prefix("vars:") {
            if frame.is_some() {
                return Err(err("duplicate `vars:` line".into()));
            }
            let f = Frame::new(rest.split_whitespace()).map_err(|e| err(e.to_string()))?;
            specs = vec![None; f.len()];
            frame = Some(f);
            continue;
        }
        let Some(f) = frame.as_ref() else {
            return Err(err("expected `vars:` before any specification".into()));
        };
        let lookup = |name: &str| {
            f.index_of(name)
                .ok_or_else(|| err(format!("unknown variable `{name}`")))
        };

        if let Some(rest) = content.strip_prefix("prior ") {
            let (name, values) = rest
                .split_once(':')
                .ok_or_else(|| err("expected `prior <var>: <value> <value>`".into()))?;
            let q = lookup(name.trim())?;
            if specs[q].is_some() {
                return Err(err(format!("variable `{}` specified twice", f.name(q))));
            }
            specs[q] = Some(NodeSpec::root(parse_pair(values, line)?));
        } else if let Some(rest) = content.strip_prefix("cond ") {
            let (head, tail) = rest
                .split_once(':')
                .ok_or_else(|| err("expected `cond <var> | <parents>:`".into()))?;
            if !tail.trim().is_empty() {
                return Err(err("table rows go on the following indented lines".into()));
            }
            let (name, parents) = head
                .split_once('|')
                .ok_or_else(|| err("expected `cond <var> | <parents>:`".into()))?;
            let q = lookup(name.trim())?;
            if specs[q].is_some() {
                return Err(err(format!("variable `{}` specified twice", f.name(q))));
            }
            let parents = parents
                .split_whitespace()
                .map(lookup)
                .collect::<Result<Vec<_>, _>>()?;
            if parents.is_empty() {
                return Err(err("`cond` needs at least one parent; use `prior`".into()));
            }
            if parents.len() > 16 {
                return Err(err("too many parents".into()));
            }
            // Mark as taken so a duplicate line is caught before the block ends.
            specs[q] = Some(NodeSpec::root([1.0, 1.0]));
            current = Some(PendingCond {
                node: q,
                rows: vec![None; 1 << parents.len()],
                parents,
            });
        } else {
            return Err(err(format!("unrecognized line `{content}`")));
        }
    }

    let frame = frame.ok_or(NetError::Syntax {
        line: 0,
        message: "missing `vars:` line".into(),
    })?;
    finish(&frame, &mut specs, current.take())?;
    let nodes = specs
        .into_iter()
        .enumerate()
        .map(|(q, s)| {
            s.ok_or_else(|| NetError::Structure {
                node: frame.name(q).to_string(),
                message: "no `prior` or `cond` line".into(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    PossibilisticNet::new(&frame, nodes)
}

/// The bundled alarm network.
pub fn alarm_net() -> PossibilisticNet {
    load_net(ALARM_MODEL).expect("bundled alarm model is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;

    fn world(net: &PossibilisticNet, values: &[bool]) -> World {
        net.frame().world_from_values(values)
    }

    #[test]
    fn alarm_model_matches_the_listing() {
        let net = alarm_net();
        let f = net.frame();
        assert_eq!(f.names(), ["B", "E", "A", "R", "W", "G"]);
        let b = f.index_of("B").unwrap();
        let e = f.index_of("E").unwrap();
        let a = f.index_of("A").unwrap();
        assert_eq!(net.node(b).rows, [[1.0, 1.0]]);
        assert_eq!(net.node(a).parents, [b, e]);
        assert_eq!(
            net.node(a).rows,
            [[1.0, 0.05], [1.0, 0.4], [1.0, 0.85], [0.05, 1.0]]
        );
        assert_eq!(net.node(3).rows, [[1.0, 0.05], [0.0, 1.0]]);
        assert_eq!(net.node(4).rows, [[1.0, 0.8], [1.0, 1.0]]);
        assert_eq!(net.node(5).rows, [[1.0, 0.8], [1.0, 1.0]]);
        assert_eq!(net.topological_order(), [0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn joint_examples() {
        let net = alarm_net();
        let joint = joint_density(&net);
        let v = |vals: &[bool]| joint.value(world(&net, vals));
        // 0.8 · 0.8 rounds to the double just above 0.64.
        assert!((v(&[true, true, true, true, false, false]) - 0.64).abs() < 1e-15);
        assert_eq!(v(&[false, false, true, true, true, true]), 0.0);
        assert_eq!(v(&[false, false, false, false, true, false]), 1.0);
        assert!(joint.validate().is_ok());
    }

    #[test]
    fn oracle_examples() {
        let net = alarm_net();
        let f = net.frame().clone();
        let p = |s: &str| parse_formula(s, &f).unwrap();
        assert_eq!(oracle_conditional(&net, &p("E"), &p("R")).unwrap(), 1.0);
        assert_eq!(oracle_conditional(&net, &p("!E"), &p("R")).unwrap(), 0.0);
        assert_eq!(oracle_conditional(&net, &p("!A"), &p("!W")).unwrap(), 1.0);
        assert_eq!(oracle_conditional(&net, &p("A"), &p("!W")).unwrap(), 0.8);
        assert_eq!(oracle_conditional(&net, &p("W & G"), &p("W & G")).unwrap(), 1.0);
        assert_eq!(oracle_marginal(&net, 2, &p("!W")).unwrap(), (0.8, 1.0));
        assert_eq!(
            oracle_conditional(&net, &p("B"), &p("R & !R")),
            Err(NetError::ImpossibleEvidence)
        );
    }

    #[test]
    fn rejects_bad_row_maximum() {
        let text = "vars: A B\nprior A: 1.0 0.5\ncond B | A:\n  T T : 0.9 0.05\n";
        let text = text.replace("T T :", "T :") + "  F : 1.0 1.0\n";
        let err = load_net(&text).unwrap_err();
        assert!(matches!(err, NetError::RowMaximum { ref node, ref row, .. } if node == "B" && row == "T"));
        assert!(err.to_string().contains("row maximum"));
    }

    #[test]
    fn rejects_cycles() {
        let text = "vars: A B\ncond A | B:\n  T : 1 1\n  F : 1 1\ncond B | A:\n  T : 1 1\n  F : 1 1\n";
        assert!(matches!(load_net(text), Err(NetError::Cycle(_))));
    }

    #[test]
    fn rejects_malformed_files() {
        let cases = [
            ("prior A: 1 1\n", "vars"),
            ("vars: A\nprior A: 1 1.0000001\n", "fraction digits"),
            ("vars: A\nprior A: 1 -0.5\n", "invalid number"),
            ("vars: A\nprior Z: 1 1\n", "unknown variable"),
            ("vars: A B\nprior A: 1 1\n", "no `prior`"),
            ("vars: A B\nprior A: 1 1\ncond B | A:\n  T : 1 1\n", "missing table row F"),
            ("vars: A B\nprior A: 1 1\ncond B | A:\n  T : 1 1\n  T : 1 1\n", "duplicate row"),
            ("vars: A\nprior A: 1 1\nprior A: 1 1\n", "twice"),
            ("vars: A\nprior A: 1.5 1\n", "outside [0, 1]"),
            ("vars: A\n  T : 1 1\n", "outside a `cond`"),
        ];
        for (text, needle) in cases {
            let err = load_net(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{text:?}: {err}");
        }
    }

    #[test]
    fn snaps_row_maxima_and_roundtrips_text() {
        let f = Frame::new(["A"]).unwrap();
        let snapped = PossibilisticNet::new(&f, vec![NodeSpec::root([0.9999999999, 0.5])]).unwrap();
        assert_eq!(snapped.node(0).rows, [[1.0, 0.5]]);
        let text = "vars: A B\nprior A: 1 0.5\ncond B | A:\n  F : 0.3 1\n  T : 1 0\n";
        let net = load_net(text).unwrap();
        assert_eq!(net.node(1).rows, [[1.0, 0.0], [0.3, 1.0]]);
        assert_eq!(load_net(&net.to_model_text()).unwrap(), net);
        let alarm = alarm_net();
        assert_eq!(load_net(&alarm.to_model_text()).unwrap(), alarm);
    }
}
