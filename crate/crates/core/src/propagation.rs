//! Local computation on Markov trees: potentials with pointwise-product
//! combination and max-marginalization, tree construction by variable
//! elimination, evidence leaves, one-sweep collect and normalized queries.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::logic::{Frame, Literal, LogicError, World};
use crate::network::PossibilisticNet;

/// Largest scope a potential table may have.
pub const MAX_SCOPE: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("potentials are not combinable (every product is 0)")]
    NotCombinable,
    #[error("{0} is not a subset of the potential's scope")]
    NotSubset(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("no families given")]
    EmptyInput,
    #[error("variable {0} does not occur in the tree")]
    VariableAbsent(String),
    #[error("node {0} is not in the tree")]
    UnknownNode(usize),
    #[error("impossible evidence")]
    ImpossibleEvidence,
}

/// A set of primitives, bit `i` for frame index `i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct VariableSet(u32);

impl VariableSet {
    pub const EMPTY: VariableSet = VariableSet(0);

    pub fn from_vars<I: IntoIterator<Item = usize>>(vars: I) -> Self {
        VariableSet(vars.into_iter().fold(0, |acc, v| acc | 1 << v))
    }

    pub fn singleton(var: usize) -> Self {
        VariableSet(1 << var)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, var: usize) -> bool {
        var < 32 && self.0 >> var & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: VariableSet) -> Self {
        VariableSet(self.0 | other.0)
    }

    pub fn intersection(self, other: VariableSet) -> Self {
        VariableSet(self.0 & other.0)
    }

    pub fn without(self, var: usize) -> Self {
        VariableSet(self.0 & !(1 << var))
    }

    pub fn is_subset_of(self, other: VariableSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&v| self.0 >> v & 1 == 1)
    }

    pub fn render(self, frame: &Frame) -> String {
        let names: Vec<&str> = self.iter().map(|v| frame.name(v)).collect();
        format!("{{{}}}", names.join(", "))
    }
}

impl fmt::Debug for VariableSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Bitmask of the frame variables assigned F, bit `v` for variable `v`.
type Falsity = u32;

/// Assignment of configuration `index` over `vars` (first most significant).
fn falsity_of(vars: &[usize], index: usize) -> Falsity {
    let k = vars.len();
    vars.iter()
        .enumerate()
        .filter(|(i, _)| index >> (k - 1 - i) & 1 == 1)
        .fold(0, |acc, (_, &v)| acc | 1 << v)
}

fn index_of(vars: &[usize], falsity: Falsity) -> usize {
    vars.iter()
        .fold(0, |acc, &v| acc << 1 | (falsity >> v & 1) as usize)
}

/// A table over the configurations of `scope`.
///
/// Configurations run over the scope's variables in ascending frame order,
/// first variable most significant, T before F; `TT…T` is index 0.
#[derive(Clone, PartialEq)]
pub struct Potential {
    frame: Frame,
    scope: VariableSet,
    vars: Vec<usize>,
    values: Vec<f64>,
}

impl Potential {
    pub fn new(frame: &Frame, scope: VariableSet, values: Vec<f64>) -> Result<Self, PropagationError> {
        if scope.iter().any(|v| v >= frame.len()) {
            return Err(PropagationError::InvalidPotential(
                "scope reaches outside the frame".into(),
            ));
        }
        if scope.len() > MAX_SCOPE {
            return Err(LogicError::Capacity(scope.len()).into());
        }
        if values.len() != 1 << scope.len() {
            return Err(PropagationError::InvalidPotential(format!(
                "{} values for a scope of {} variables",
                values.len(),
                scope.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(PropagationError::InvalidPotential(format!(
                "{v} is outside [0, 1]"
            )));
        }
        Ok(Self::from_parts(frame, scope, values))
    }

    fn from_parts(frame: &Frame, scope: VariableSet, values: Vec<f64>) -> Self {
        Self {
            frame: frame.clone(),
            scope,
            vars: scope.iter().collect(),
            values,
        }
    }

    /// All ones: the identity for [`Potential::combine`].
    pub fn vacuous(frame: &Frame, scope: VariableSet) -> Result<Self, PropagationError> {
        Self::new(frame, scope, vec![1.0; 1 << scope.len()])
    }

    /// Singleton potential: the observed literal ↦ 1, its negation ↦ 0.
    pub fn observation(frame: &Frame, literal: Literal) -> Result<Self, PropagationError> {
        if literal.var >= frame.len() {
            return Err(PropagationError::VariableAbsent(format!("#{}", literal.var)));
        }
        let values = if literal.positive { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
        Self::new(frame, VariableSet::singleton(literal.var), values)
    }

    /// The potential of a net node on `{Q} ∪ parents(Q)`.
    pub fn from_node(net: &PossibilisticNet, var: usize) -> Self {
        let frame = net.frame();
        let n = frame.len();
        let scope = VariableSet::from_vars(net.node(var).parents.iter().copied().chain([var]));
        let vars: Vec<usize> = scope.iter().collect();
        let values = (0..1usize << vars.len())
            .map(|c| {
                let falsity = falsity_of(&vars, c);
                let world = (0..n)
                    .filter(|v| falsity >> v & 1 == 1)
                    .fold(0, |acc, v| acc | 1 << (n - 1 - v));
                net.factor(var, World::from_index(world))
            })
            .collect();
        Self::from_parts(frame, scope, values)
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn scope(&self) -> VariableSet {
        self.scope
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at the configuration given by truth values of the scope's
    /// variables in ascending order.
    pub fn value(&self, assignment: &[bool]) -> f64 {
        let index = assignment
            .iter()
            .fold(0, |acc, &t| acc << 1 | usize::from(!t));
        self.values[index]
    }

    /// Pointwise product on the union of scopes.
    pub fn combine(&self, other: &Potential) -> Result<Potential, PropagationError> {
        if self.frame != other.frame {
            return Err(LogicError::FrameMismatch.into());
        }
        let scope = self.scope.union(other.scope);
        if scope.len() > MAX_SCOPE {
            return Err(LogicError::Capacity(scope.len()).into());
        }
        let vars: Vec<usize> = scope.iter().collect();
        let values: Vec<f64> = (0..1usize << vars.len())
            .map(|c| {
                let falsity = falsity_of(&vars, c);
                self.values[index_of(&self.vars, falsity)]
                    * other.values[index_of(&other.vars, falsity)]
            })
            .collect();
        if values.iter().all(|&v| v == 0.0) {
            return Err(PropagationError::NotCombinable);
        }
        Ok(Self::from_parts(&self.frame, scope, values))
    }

    /// Max over the configurations of the variables outside `onto`.
    pub fn marginalize(&self, onto: VariableSet) -> Result<Potential, PropagationError> {
        if !onto.is_subset_of(self.scope) {
            return Err(PropagationError::NotSubset(onto.render(&self.frame)));
        }
        let vars: Vec<usize> = onto.iter().collect();
        let mut values = vec![0.0f64; 1 << vars.len()];
        for (c, &v) in self.values.iter().enumerate() {
            let slot = &mut values[index_of(&vars, falsity_of(&self.vars, c))];
            *slot = slot.max(v);
        }
        Ok(Self::from_parts(&self.frame, onto, values))
    }

    /// The table with `digits` decimals, one configuration per line.
    pub fn render(&self, digits: usize) -> String {
        let names: Vec<&str> = self.vars.iter().map(|&v| self.frame.name(v)).collect();
        let widths: Vec<usize> = names.iter().map(|n| n.len()).collect();
        let mut out = String::new();
        for (name, w) in names.iter().zip(&widths) {
            let _ = write!(out, "{name:<w$} ");
        }
        out.push_str("value\n");
        for (c, v) in self.values.iter().enumerate() {
            let falsity = falsity_of(&self.vars, c);
            for (&var, w) in self.vars.iter().zip(&widths) {
                let t = if falsity >> var & 1 == 1 { "F" } else { "T" };
                let _ = write!(out, "{t:<w$} ");
            }
            let _ = writeln!(out, "{v:.digits$}");
        }
        out
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("scope", &self.scope.render(&self.frame))
            .field("values", &self.values)
            .finish()
    }
}

/// Combines a non-empty list left to right.
pub fn combine_all(potentials: &[Potential]) -> Result<Potential, PropagationError> {
    let (first, rest) = potentials.split_first().ok_or(PropagationError::EmptyInput)?;
    rest.iter().try_fold(first.clone(), |acc, p| acc.combine(p))
}

/// A tree of potentials. Node ids are indices; adjacency lists are sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovTree {
    frame: Frame,
    potentials: Vec<Potential>,
    adjacency: Vec<Vec<usize>>,
}

impl MarkovTree {
    pub fn new(
        frame: &Frame,
        potentials: Vec<Potential>,
        edges: &[(usize, usize)],
    ) -> Result<Self, PropagationError> {
        let n = potentials.len();
        if n == 0 {
            return Err(PropagationError::InvalidTree("no nodes".into()));
        }
        if potentials.iter().any(|p| p.frame() != frame) {
            return Err(LogicError::FrameMismatch.into());
        }
        if potentials.iter().any(|p| p.scope().is_empty()) {
            return Err(PropagationError::InvalidTree("empty node scope".into()));
        }
        if edges.len() != n - 1 {
            return Err(PropagationError::InvalidTree(format!(
                "{} edges for {n} nodes",
                edges.len()
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b || adjacency[a].contains(&b) {
                return Err(PropagationError::InvalidTree(format!("bad edge {a}-{b}")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        adjacency.iter_mut().for_each(|list| list.sort_unstable());
        let tree = Self {
            frame: frame.clone(),
            potentials,
            adjacency,
        };
        if tree.bfs(0).0.len() != n {
            return Err(PropagationError::InvalidTree("not connected".into()));
        }
        Ok(tree)
    }

    /// The tree for a net's node potentials; node `i` holds variable `i`'s
    /// family potential.
    pub fn from_net(net: &PossibilisticNet) -> Result<Self, PropagationError> {
        let potentials = (0..net.frame().len())
            .map(|q| Potential::from_node(net, q))
            .collect();
        markov_tree_for(net.frame(), potentials)
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn len(&self) -> usize {
        self.potentials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potentials.is_empty()
    }

    pub fn scope(&self, node: usize) -> VariableSet {
        self.potentials[node].scope()
    }

    pub fn potential(&self, node: usize) -> &Potential {
        &self.potentials[node]
    }

    pub fn potentials(&self) -> &[Potential] {
        &self.potentials
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    /// Edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Breadth-first order from `root` with each node's parent.
    fn bfs(&self, root: usize) -> (Vec<usize>, Vec<Option<usize>>) {
        let mut parent = vec![None; self.len()];
        let mut seen = vec![false; self.len()];
        let mut order = Vec::with_capacity(self.len());
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        (order, parent)
    }

    /// Smallest node whose scope contains `set`; ties go to the lowest id.
    pub fn smallest_containing(&self, set: VariableSet) -> Option<usize> {
        (0..self.len())
            .filter(|&i| set.is_subset_of(self.scope(i)))
            .min_by_key(|&i| (self.scope(i).len(), i))
    }

    /// One line per node: id, scope and neighbours.
    pub fn render_adjacency(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            let neighbors: Vec<String> = self.adjacency[i].iter().map(|j| format!("n{j}")).collect();
            let _ = writeln!(
                out,
                "n{i} {} -- {}",
                self.scope(i).render(&self.frame),
                if neighbors.is_empty() { "(none)".into() } else { neighbors.join(" ") }
            );
        }
        out
    }
}

/// Whether every variable's nodes induce a connected subtree.
pub fn check_markov_property(tree: &MarkovTree) -> bool {
    (0..tree.frame().len()).all(|var| {
        let holders: Vec<usize> = (0..tree.len()).filter(|&i| tree.scope(i).contains(var)).collect();
        let Some(&start) = holders.first() else { return true };
        let mut seen = vec![false; tree.len()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut reached = 0;
        while let Some(u) = stack.pop() {
            reached += 1;
            for &v in tree.neighbors(u) {
                if !seen[v] && tree.scope(v).contains(var) {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        reached == holders.len()
    })
}

/// Node scopes and edges of the tree built for `families`.
///
/// Variables are eliminated one at a time, always the one whose
/// neighbourhood clique is smallest (ties to the lowest frame index). Each
/// clique is linked to the clique of the first later-eliminated variable in
/// its separator; cliques contained in a neighbour are merged into it. Node
/// `i` of the result has scope `families[i]`: families matching a clique take
/// its place, others become leaves on the smallest clique containing them.
/// Remaining cliques follow.
fn tree_shape(families: &[VariableSet]) -> (Vec<VariableSet>, Vec<(usize, usize)>) {
    let covered = families.iter().fold(VariableSet::EMPTY, |acc, f| acc.union(*f));
    let mut neighbors = [VariableSet::EMPTY; 32];
    for family in families {
        for v in family.iter() {
            neighbors[v] = neighbors[v].union(family.without(v));
        }
    }

    let mut remaining = covered;
    let mut cliques: Vec<VariableSet> = Vec::new();
    let mut eliminated_at = [usize::MAX; 32];
    let mut eliminated_var = Vec::new();
    while !remaining.is_empty() {
        let v = remaining
            .iter()
            .min_by_key(|&v| (neighbors[v].intersection(remaining).len(), v))
            .expect("non-empty");
        let around = neighbors[v].intersection(remaining);
        for u in around.iter() {
            neighbors[u] = neighbors[u].union(around.without(u));
        }
        eliminated_at[v] = cliques.len();
        eliminated_var.push(v);
        cliques.push(around.union(VariableSet::singleton(v)));
        remaining = remaining.without(v);
    }

    let mut links: Vec<(usize, usize)> = Vec::new();
    let mut component_roots = Vec::new();
    for (t, clique) in cliques.iter().enumerate() {
        let separator = clique.without(eliminated_var[t]);
        match separator.iter().map(|u| eliminated_at[u]).min() {
            Some(s) => links.push((t, s)),
            None => component_roots.push(t),
        }
    }
    for pair in component_roots.windows(2) {
        links.push((pair[0], pair[1]));
    }

    // Merge cliques into a superset neighbour until none is left.
    let mut alive = vec![true; cliques.len()];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); cliques.len()];
    for &(a, b) in &links {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    loop {
        let merge = (0..cliques.len()).filter(|&i| alive[i]).find_map(|i| {
            adjacency[i]
                .iter()
                .copied()
                .filter(|&j| cliques[i].is_subset_of(cliques[j]))
                .min_by_key(|&j| (usize::MAX - cliques[j].len(), j))
                .map(|j| (i, j))
        });
        let Some((i, j)) = merge else { break };
        alive[i] = false;
        for k in std::mem::take(&mut adjacency[i]) {
            adjacency[k].retain(|&x| x != i);
            if k != j && !adjacency[j].contains(&k) {
                adjacency[j].push(k);
                adjacency[k].push(j);
            }
        }
    }

    let clique_ids: Vec<usize> = (0..cliques.len()).filter(|&i| alive[i]).collect();
    let mut final_id = vec![None; cliques.len()];
    let mut scopes: Vec<VariableSet> = families.to_vec();
    let mut leaves = Vec::new();
    for (f, family) in families.iter().enumerate() {
        match clique_ids
            .iter()
            .find(|&&c| final_id[c].is_none() && cliques[c] == *family)
        {
            Some(&c) => final_id[c] = Some(f),
            None => leaves.push(f),
        }
    }
    for &c in &clique_ids {
        if final_id[c].is_none() {
            final_id[c] = Some(scopes.len());
            scopes.push(cliques[c]);
        }
    }

    let mut edges = Vec::new();
    for &c in &clique_ids {
        for &k in &adjacency[c] {
            let (a, b) = (final_id[c].unwrap(), final_id[k].unwrap());
            if a < b {
                edges.push((a, b));
            }
        }
    }
    for f in leaves {
        let host = clique_ids
            .iter()
            .map(|&c| final_id[c].unwrap())
            .filter(|&id| families[f].is_subset_of(scopes[id]))
            .min_by_key(|&id| (scopes[id].len(), id))
            .expect("every family lies inside an elimination clique");
        edges.push((f.min(host), f.max(host)));
    }
    edges.sort_unstable();
    (scopes, edges)
}

/// A Markov tree whose nodes include every family, with vacuous potentials.
pub fn build_markov_tree(
    frame: &Frame,
    families: &[VariableSet],
) -> Result<MarkovTree, PropagationError> {
    let potentials = families
        .iter()
        .map(|&f| Potential::vacuous(frame, f))
        .collect::<Result<Vec<_>, _>>()?;
    markov_tree_for(frame, potentials)
}

/// A Markov tree carrying `potentials[i]` on node `i`; added nodes are
/// vacuous.
pub fn markov_tree_for(
    frame: &Frame,
    potentials: Vec<Potential>,
) -> Result<MarkovTree, PropagationError> {
    if potentials.is_empty() {
        return Err(PropagationError::EmptyInput);
    }
    let families: Vec<VariableSet> = potentials.iter().map(Potential::scope).collect();
    if families.iter().any(|f| f.is_empty()) {
        return Err(PropagationError::InvalidTree("empty family".into()));
    }
    let (scopes, edges) = tree_shape(&families);
    let mut nodes = potentials;
    for &scope in &scopes[nodes.len()..] {
        nodes.push(Potential::vacuous(frame, scope)?);
    }
    MarkovTree::new(frame, nodes, &edges)
}

/// Adds an observation leaf per literal, each linked to the smallest
/// original node containing its variable (ties to the lowest id).
pub fn attach_evidence(tree: &MarkovTree, evidence: &[Literal]) -> Result<MarkovTree, PropagationError> {
    let mut potentials = tree.potentials.clone();
    let mut edges = tree.edges();
    for literal in evidence {
        if literal.var >= tree.frame.len() {
            return Err(PropagationError::VariableAbsent(format!("#{}", literal.var)));
        }
        let host = tree
            .smallest_containing(VariableSet::singleton(literal.var))
            .ok_or_else(|| PropagationError::VariableAbsent(tree.frame.name(literal.var).into()))?;
        edges.push((host, potentials.len()));
        potentials.push(Potential::observation(&tree.frame, *literal)?);
    }
    MarkovTree::new(&tree.frame, potentials, &edges)
}

/// One leaves-to-root sweep. Each node combines its own potential with its
/// children's messages in ascending child id order and passes the result,
/// marginalized to the separator, to its parent.
pub fn collect(tree: &MarkovTree, root: usize) -> Result<Potential, PropagationError> {
    if root >= tree.len() {
        return Err(PropagationError::UnknownNode(root));
    }
    let (order, parent) = tree.bfs(root);
    let mut messages: Vec<Option<Potential>> = vec![None; tree.len()];
    let mut result = None;
    for &u in order.iter().rev() {
        let mut acc = tree.potentials[u].clone();
        for &child in &tree.adjacency[u] {
            if parent[child] == Some(u) {
                let message = messages[child].take().expect("children finish first");
                acc = acc.combine(&message)?;
            }
        }
        match parent[u] {
            Some(p) => {
                let separator = tree.scope(u).intersection(tree.scope(p));
                messages[u] = Some(acc.marginalize(separator)?);
            }
            None => result = Some(acc),
        }
    }
    Ok(result.expect("root is visited"))
}

/// `(Π(P | ε), Π(¬P | ε))` by attaching the evidence, collecting at the
/// smallest node containing `P` and dividing by the larger value.
pub fn query_target(
    tree: &MarkovTree,
    target: usize,
    evidence: &[Literal],
) -> Result<(f64, f64), PropagationError> {
    let target_set = VariableSet::singleton(target);
    if target >= tree.frame.len() || tree.smallest_containing(target_set).is_none() {
        return Err(PropagationError::VariableAbsent(
            tree.frame.names().get(target).cloned().unwrap_or_else(|| format!("#{target}")),
        ));
    }
    let extended = attach_evidence(tree, evidence)?;
    let root = extended.smallest_containing(target_set).expect("checked above");
    let collected = collect(&extended, root).map_err(|e| match e {
        PropagationError::NotCombinable => PropagationError::ImpossibleEvidence,
        other => other,
    })?;
    let marginal = collected.marginalize(target_set)?;
    let (t, f) = (marginal.values[0], marginal.values[1]);
    let max = t.max(f);
    if max <= 0.0 {
        return Err(PropagationError::ImpossibleEvidence);
    }
    Ok((t / max, f / max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::alarm_net;

    fn vars(frame: &Frame, names: &[&str]) -> VariableSet {
        VariableSet::from_vars(names.iter().map(|n| frame.index_of(n).unwrap()))
    }

    fn alarm_potential(names: &[&str]) -> Potential {
        let net = alarm_net();
        let scope = vars(net.frame(), names);
        (0..6)
            .map(|q| Potential::from_node(&net, q))
            .find(|p| p.scope() == scope)
            .unwrap()
    }

    #[test]
    fn alarm_potentials_match_the_tables() {
        assert_eq!(
            alarm_potential(&["B", "E", "A"]).values(),
            [1.0, 0.05, 1.0, 0.4, 1.0, 0.85, 0.05, 1.0]
        );
        assert_eq!(alarm_potential(&["E", "R"]).values(), [1.0, 0.05, 0.0, 1.0]);
        assert_eq!(alarm_potential(&["A", "W"]).values(), [1.0, 0.8, 1.0, 1.0]);
        assert_eq!(alarm_potential(&["A", "G"]).values(), [1.0, 0.8, 1.0, 1.0]);
        assert_eq!(alarm_potential(&["B"]).values(), [1.0, 1.0]);
        assert_eq!(alarm_potential(&["E"]).values(), [1.0, 1.0]);
        let table = alarm_potential(&["E", "R"]).render(2);
        assert_eq!(table, "E R value\nT T 1.00\nT F 0.05\nF T 0.00\nF F 1.00\n");
    }

    #[test]
    fn combine_examples() {
        let aw = alarm_potential(&["A", "W"]);
        let f = aw.frame().clone();
        let w = f.index_of("W").unwrap();
        let observed = aw.combine(&Potential::observation(&f, Literal::new(w, true)).unwrap()).unwrap();
        assert_eq!(observed.values(), [1.0, 0.0, 1.0, 0.0]);
        assert_eq!(aw.combine(&Potential::vacuous(&f, aw.scope()).unwrap()).unwrap(), aw);
        let t = Potential::observation(&f, Literal::new(w, true)).unwrap();
        let nt = Potential::observation(&f, Literal::new(w, false)).unwrap();
        assert_eq!(t.combine(&nt), Err(PropagationError::NotCombinable));
    }

    #[test]
    fn marginalize_examples() {
        let bea = alarm_potential(&["B", "E", "A"]);
        let f = bea.frame().clone();
        let be = bea.marginalize(vars(&f, &["B", "E"])).unwrap();
        assert_eq!(be.values(), [1.0; 4]);
        assert_eq!(bea.marginalize(bea.scope()).unwrap(), bea);
        let r = alarm_potential(&["E", "R"]).marginalize(vars(&f, &["R"])).unwrap();
        assert_eq!(r.values(), [1.0, 1.0]);
        assert!(matches!(
            r.marginalize(vars(&f, &["B"])),
            Err(PropagationError::NotSubset(_))
        ));
    }

    #[test]
    fn alarm_tree_has_the_expected_shape() {
        let net = alarm_net();
        let tree = MarkovTree::from_net(&net).unwrap();
        let f = net.frame();
        assert_eq!(tree.len(), 6);
        assert!(check_markov_property(&tree));
        let id = |names: &[&str]| (0..6).find(|&i| tree.scope(i) == vars(f, names)).unwrap();
        let bea = id(&["B", "E", "A"]);
        assert_eq!(tree.neighbors(id(&["E", "R"])), [id(&["E"]), bea]);
        assert_eq!(tree.neighbors(id(&["A", "W"])), [bea]);
        assert_eq!(tree.neighbors(id(&["A", "G"])), [bea]);
        assert_eq!(tree.neighbors(id(&["B"])), [bea]);
        assert_eq!(tree.neighbors(id(&["E"])), [id(&["E", "R"])]);
    }

    #[test]
    fn small_trees() {
        let f = Frame::new(["A", "B", "C"]).unwrap();
        let single = build_markov_tree(&f, &[vars(&f, &["A", "B"])]).unwrap();
        assert_eq!(single.len(), 1);
        assert!(check_markov_property(&single));

        let cycle = [vars(&f, &["A", "B"]), vars(&f, &["B", "C"]), vars(&f, &["A", "C"])];
        let tree = build_markov_tree(&f, &cycle).unwrap();
        assert!(check_markov_property(&tree));
        assert!((0..tree.len()).any(|i| tree.scope(i) == vars(&f, &["A", "B", "C"])));
        assert_eq!(build_markov_tree(&f, &[]), Err(PropagationError::EmptyInput));
    }

    #[test]
    fn markov_property_violation_is_detected() {
        let f = Frame::new(["A", "B", "C"]).unwrap();
        let nodes = [["A", "B"], ["B", "C"], ["A", "C"]]
            .iter()
            .map(|n| Potential::vacuous(&f, vars(&f, n)).unwrap())
            .collect();
        let path = MarkovTree::new(&f, nodes, &[(0, 1), (1, 2)]).unwrap();
        assert!(!check_markov_property(&path));
        let nodes = vec![Potential::vacuous(&f, vars(&f, &["A"])).unwrap(); 2];
        assert!(MarkovTree::new(&f, nodes.clone(), &[]).is_err());
        assert!(MarkovTree::new(&f, nodes, &[(0, 0)]).is_err());
    }

    #[test]
    fn evidence_leaves_attach_to_the_smallest_superset() {
        let net = alarm_net();
        let f = net.frame();
        let tree = MarkovTree::from_net(&net).unwrap();
        let w = f.index_of("W").unwrap();
        let r = f.index_of("R").unwrap();
        let extended = attach_evidence(&tree, &[Literal::new(w, true), Literal::new(r, true)]).unwrap();
        assert_eq!(extended.len(), 8);
        assert_eq!(extended.neighbors(6), [w]);
        assert_eq!(extended.neighbors(7), [r]);
        assert_eq!(extended.scope(w), vars(f, &["A", "W"]));
        assert_eq!(extended.scope(r), vars(f, &["E", "R"]));
        assert!(check_markov_property(&extended));
        assert_eq!(attach_evidence(&tree, &[]).unwrap(), tree);
        assert!(matches!(
            attach_evidence(&tree, &[Literal::new(9, true)]),
            Err(PropagationError::VariableAbsent(_))
        ));
    }

    #[test]
    fn collect_examples() {
        let aw = alarm_potential(&["A", "W"]);
        let f = aw.frame().clone();
        let w = f.index_of("W").unwrap();
        let single = MarkovTree::new(&f, vec![aw.clone()], &[]).unwrap();
        assert_eq!(collect(&single, 0).unwrap(), aw);
        let obs = Potential::observation(&f, Literal::new(w, true)).unwrap();
        let pair = MarkovTree::new(&f, vec![aw.clone(), obs.clone()], &[(0, 1)]).unwrap();
        assert_eq!(collect(&pair, 0).unwrap(), aw.combine(&obs).unwrap());
        assert_eq!(collect(&pair, 2), Err(PropagationError::UnknownNode(2)));
    }

    #[test]
    fn alarm_queries() {
        let net = alarm_net();
        let f = net.frame();
        let tree = MarkovTree::from_net(&net).unwrap();
        let lit = |n: &str, p: bool| Literal::new(f.index_of(n).unwrap(), p);
        let e = f.index_of("E").unwrap();
        let a = f.index_of("A").unwrap();
        let b = f.index_of("B").unwrap();
        assert_eq!(query_target(&tree, e, &[lit("R", true)]).unwrap(), (1.0, 0.0));
        assert_eq!(query_target(&tree, a, &[lit("W", false)]).unwrap(), (0.8, 1.0));
        let (t, nt) = query_target(&tree, b, &[lit("W", true), lit("R", true)]).unwrap();
        assert_eq!(t, nt);
        assert_eq!(
            query_target(&tree, b, &[lit("R", true), lit("R", false)]),
            Err(PropagationError::ImpossibleEvidence)
        );
    }
}
