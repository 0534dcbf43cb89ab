//! Executable checks of the conditioning axioms (D1)–(D3), Rott's
//! entailment criterion, the two-way correspondence between those axioms and
//! confidence transfer, and the belief-independence machinery for joints of
//! two mutually exclusive partitions.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::conditioning::{stratify, transfer_values, ConditioningError, RuleId};
use crate::logic::{Event, Formula, LogicError, World};
use crate::possibility::{Density, LEVEL_TOLERANCE};

/// Additive slack for every axiom inequality.
pub const AXIOM_SLACK: f64 = 1e-9;

/// Frames up to this size are checked over every event.
pub const EXHAUSTIVE_FRAME_LIMIT: usize = 3;

/// Number of random events drawn for larger frames; their pairs exceed 10⁴.
pub const SAMPLED_EVENTS: usize = 128;

const SAMPLING_SEED: u64 = 0x005e_edd1_d2d3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AxiomError {
    #[error(transparent)]
    Conditioning(#[from] ConditioningError),
    #[error("invalid marginal: {0}")]
    InvalidMarginal(String),
    #[error("invalid joint grid: {0}")]
    InvalidGrid(String),
    #[error("grid is {rows}x{cols} but the marginals are {expected_rows}x{expected_cols}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("resolution {0} must be positive and divide 1 evenly")]
    Resolution(f64),
}

impl From<LogicError> for AxiomError {
    fn from(e: LogicError) -> Self {
        AxiomError::Conditioning(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxiomId {
    /// The conditional is a consonant belief function (a valid density).
    D1,
    D2,
    D3,
    /// `Π(αᵢ | B) = Π(αᵢ)` for unions `B` of columns.
    RowIndependence,
    /// `Π(βⱼ | A) = Π(βⱼ)` for unions `A` of rows.
    ColumnIndependence,
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AxiomId::D1 => "D1",
            AxiomId::D2 => "D2",
            AxiomId::D3 => "D3",
            AxiomId::RowIndependence => "IND-ROW",
            AxiomId::ColumnIndependence => "IND-COL",
        })
    }
}

/// A set named in a counterexample.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Event { role: &'static str, event: Event },
    /// Grid cells, row-major, bit `i·m + j` for cell `(i, j)`.
    Cells { role: &'static str, mask: u64 },
}

impl Witness {
    pub fn role(&self) -> &'static str {
        match self {
            Witness::Event { role, .. } | Witness::Cells { role, .. } => role,
        }
    }

    pub fn mask_hex(&self) -> String {
        match self {
            Witness::Event { event, .. } => event.to_hex(),
            Witness::Cells { mask, .. } => format!("{mask:#x}"),
        }
    }
}

/// A violated inequality `lhs ≥ rhs` (or equality for independence) with the
/// sets that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub axiom: AxiomId,
    pub witnesses: Vec<Witness>,
    pub lhs: f64,
    pub rhs: f64,
}

impl Counterexample {
    /// One-line certificate: axiom id, witness bitmasks, both sides.
    pub fn certificate(&self) -> String {
        let mut out = self.axiom.to_string();
        for w in &self.witnesses {
            out.push_str(&format!(" {}={}", w.role(), w.mask_hex()));
        }
        out.push_str(&format!(" lhs={} rhs={}", self.lhs, self.rhs));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomOutcome {
    pub axiom: AxiomId,
    pub instances: usize,
    pub violations: Vec<Counterexample>,
}

impl AxiomOutcome {
    fn new(axiom: AxiomId) -> Self {
        Self {
            axiom,
            instances: 0,
            violations: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub outcomes: Vec<AxiomOutcome>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(AxiomOutcome::passed)
    }

    pub fn outcome(&self, axiom: AxiomId) -> Option<&AxiomOutcome> {
        self.outcomes.iter().find(|o| o.axiom == axiom)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Counterexample> {
        self.outcomes.iter().flat_map(|o| &o.violations)
    }
}

/// Events the D-axioms quantify over: all of them on small frames, otherwise
/// the structural events plus a deterministic random sample.
fn quantified_events(alpha: &Event) -> Vec<Event> {
    let frame = alpha.frame();
    if frame.len() <= EXHAUSTIVE_FRAME_LIMIT {
        return Event::all(frame)
            .expect("small frames enumerate")
            .collect();
    }
    let mut events = vec![
        Event::empty(frame),
        Event::full(frame),
        alpha.clone(),
        alpha.complement(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLING_SEED);
    while events.len() < SAMPLED_EVENTS {
        let mut e = Event::empty(frame);
        for w in frame.worlds() {
            if rng.gen_bool(0.5) {
                e.insert(w);
            }
        }
        events.push(e);
    }
    events
}

/// Checks (D1)–(D3) for `cond` as the conditional of `prior` on `alpha`.
///
/// D2: if `Co(α⊃β) ≥ Co(α⊃γ)` then `Co(β|α) − Co(γ|α) ≥ Co(α⊃β) − Co(α⊃γ)`.
/// D3: `Co(β|α) ≥ Co(β) − Co(¬α)`.
pub fn check_d_axioms(
    prior: &Density,
    alpha: &Event,
    cond: &Density,
) -> Result<AxiomReport, ConditioningError> {
    let frame = prior.frame();
    if alpha.frame() != frame || cond.frame() != frame {
        return Err(LogicError::FrameMismatch.into());
    }
    if prior.measure_unchecked(alpha) <= 0.0 {
        return Err(ConditioningError::ZeroPossibilityEvidence);
    }

    let mut d1 = AxiomOutcome::new(AxiomId::D1);
    d1.instances = 1;
    if cond.validate().is_err() {
        let max = cond.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bad = cond
            .values()
            .iter()
            .position(|v| !(0.0..=1.0).contains(v));
        let event = match bad {
            Some(i) => Event::from_worlds(frame, [World::from_index(i)]),
            None => Event::full(frame),
        };
        d1.violations.push(Counterexample {
            axiom: AxiomId::D1,
            witnesses: vec![Witness::Event { role: "world", event }],
            lhs: bad.map_or(max, |i| cond.values()[i]),
            rhs: 1.0,
        });
    }

    let not_alpha = alpha.complement();
    let co = |d: &Density, e: &Event| 1.0 - d.measure_unchecked(&e.complement());
    let co_not_alpha = co(prior, &not_alpha);
    let events = quantified_events(alpha);
    let co_implies: Vec<f64> = events
        .iter()
        .map(|e| co(prior, &not_alpha.union(e).expect("same frame")))
        .collect();
    let co_given: Vec<f64> = events.iter().map(|e| co(cond, e)).collect();
    let co_prior: Vec<f64> = events.iter().map(|e| co(prior, e)).collect();

    let mut d2 = AxiomOutcome::new(AxiomId::D2);
    for b in 0..events.len() {
        for g in 0..events.len() {
            if co_implies[b] < co_implies[g] {
                continue;
            }
            d2.instances += 1;
            let lhs = co_given[b] - co_given[g];
            let rhs = co_implies[b] - co_implies[g];
            if lhs < rhs - AXIOM_SLACK {
                d2.violations.push(Counterexample {
                    axiom: AxiomId::D2,
                    witnesses: vec![
                        Witness::Event {
                            role: "beta",
                            event: events[b].clone(),
                        },
                        Witness::Event {
                            role: "gamma",
                            event: events[g].clone(),
                        },
                    ],
                    lhs,
                    rhs,
                });
            }
        }
    }

    let mut d3 = AxiomOutcome::new(AxiomId::D3);
    for (b, event) in events.iter().enumerate() {
        d3.instances += 1;
        let lhs = co_given[b];
        let rhs = co_prior[b] - co_not_alpha;
        if lhs < rhs - AXIOM_SLACK {
            d3.violations.push(Counterexample {
                axiom: AxiomId::D3,
                witnesses: vec![Witness::Event {
                    role: "beta",
                    event: event.clone(),
                }],
                lhs,
                rhs,
            });
        }
    }

    Ok(AxiomReport {
        outcomes: vec![d1, d2, d3],
    })
}

/// Rott's criterion on events: `α |~ γ` iff `Co(α ⊃ γ) > Co(¬α)`.
pub fn rott_entails_events(
    d: &Density,
    alpha: &Event,
    gamma: &Event,
) -> Result<bool, ConditioningError> {
    if alpha.frame() != d.frame() || gamma.frame() != d.frame() {
        return Err(LogicError::FrameMismatch.into());
    }
    if d.measure_unchecked(alpha) <= 0.0 {
        return Err(ConditioningError::ZeroPossibilityEvidence);
    }
    let not_alpha = alpha.complement();
    let co = |e: &Event| 1.0 - d.measure_unchecked(&e.complement());
    let co_implies = co(&not_alpha.union(gamma)?);
    Ok(co_implies > co(&not_alpha) + LEVEL_TOLERANCE)
}

/// Rott's criterion on formulas; undefined when `Π(α) = 0`.
pub fn rott_entails(
    d: &Density,
    alpha: &Formula,
    gamma: &Formula,
) -> Result<bool, ConditioningError> {
    let frame = d.frame();
    rott_entails_events(d, &alpha.models(frame), &gamma.models(frame))
}

/// Recovers the coefficients `c₁..cₙ` that turn `prior` into `cond` by
/// confidence transfer on `alpha`, or `None` when no valid vector exists.
pub fn recover_coefficients(
    prior: &Density,
    alpha: &Event,
    cond: &Density,
) -> Result<Option<Vec<f64>>, ConditioningError> {
    if cond.frame() != prior.frame() {
        return Err(LogicError::FrameMismatch.into());
    }
    let strata = stratify(prior, alpha)?;
    let tol = LEVEL_TOLERANCE;

    let outside = alpha.complement();
    let outside_or_null = outside
        .worlds()
        .map(World::index)
        .chain(strata.null_positions().iter().copied());
    for p in outside_or_null {
        if cond.values()[p].abs() > tol {
            return Ok(None);
        }
    }

    let mut offsets = Vec::with_capacity(strata.len());
    for block in strata.blocks() {
        let first = cond.values()[block[0]] - prior.values()[block[0]];
        if block
            .iter()
            .any(|&p| ((cond.values()[p] - prior.values()[p]) - first).abs() > tol)
        {
            return Ok(None);
        }
        offsets.push(first);
    }

    let mut coefficients = Vec::with_capacity(offsets.len());
    let mut previous = 0.0;
    for &o in &offsets {
        let c = o - previous;
        if c < -tol {
            return Ok(None);
        }
        coefficients.push(c.max(0.0));
        previous = o;
    }
    if (previous - strata.constant()).abs() > tol {
        return Ok(None);
    }
    // Absorb rounding so the vector meets the rule contract exactly.
    let drift = strata.constant() - coefficients.iter().sum::<f64>();
    if let Some(last) = coefficients.iter_mut().rev().find(|c| **c + drift >= 0.0) {
        *last += drift;
    }
    Ok(Some(coefficients))
}

/// Possibilities of a mutually exclusive, exhaustive family of formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSpec {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl MarginalSpec {
    /// Labels default to `prefix1..prefixN`.
    pub fn new(prefix: &str, values: Vec<f64>) -> Result<Self, AxiomError> {
        let labels = (1..=values.len()).map(|i| format!("{prefix}{i}")).collect();
        Self::with_labels(labels, values)
    }

    pub fn with_labels(labels: Vec<String>, values: Vec<f64>) -> Result<Self, AxiomError> {
        if values.is_empty() || values.len() > 8 {
            return Err(AxiomError::InvalidMarginal(format!(
                "expected 1 to 8 values, got {}",
                values.len()
            )));
        }
        if labels.len() != values.len() {
            return Err(AxiomError::InvalidMarginal(
                "one label per value required".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(AxiomError::InvalidMarginal(format!("{v} is outside [0, 1]")));
        }
        let max = values.iter().copied().fold(0.0, f64::max);
        if (max - 1.0).abs() > LEVEL_TOLERANCE {
            return Err(AxiomError::InvalidMarginal(format!(
                "maximum is {max}, expected 1"
            )));
        }
        Ok(Self { labels, values })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `Π(αᵢ ∧ βⱼ)` for every pair of partition cells.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGrid {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl JointGrid {
    /// Cells row-major.
    pub fn new(rows: usize, cols: usize, cells: Vec<f64>) -> Result<Self, AxiomError> {
        if rows == 0 || cols == 0 || rows > 8 || cols > 8 {
            return Err(AxiomError::InvalidGrid(format!(
                "dimensions {rows}x{cols} outside 1..=8"
            )));
        }
        if cells.len() != rows * cols {
            return Err(AxiomError::InvalidGrid(format!(
                "{} cells for a {rows}x{cols} grid",
                cells.len()
            )));
        }
        if let Some(v) = cells.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(AxiomError::InvalidGrid(format!("{v} is outside [0, 1]")));
        }
        let max = cells.iter().copied().fold(0.0, f64::max);
        if (max - 1.0).abs() > LEVEL_TOLERANCE {
            return Err(AxiomError::InvalidGrid(format!("maximum is {max}, expected 1")));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AxiomError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(AxiomError::InvalidGrid("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.cells.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// Cellwise comparison within `tolerance`.
    pub fn approx_eq(&self, other: &JointGrid, tolerance: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(a, b)| (a - b).abs() <= tolerance)
    }
}

/// The product joint `Π(αᵢ ∧ βⱼ) = Π(αᵢ)·Π(βⱼ)`.
pub fn independence_product(a: &MarginalSpec, b: &MarginalSpec) -> JointGrid {
    let cells = a
        .values()
        .iter()
        .flat_map(|&x| b.values().iter().map(move |&y| x * y))
        .collect();
    JointGrid {
        rows: a.len(),
        cols: b.len(),
        cells,
    }
}

/// Checks belief independence of the two partitions under `rule`: for every
/// union `B` of columns with `Π(B) > 0`, `Π(αᵢ | B) = Π(αᵢ)`, and
/// symmetrically for unions of rows. Conditioning acts on the `n·m` cells.
pub fn verify_independence(
    grid: &JointGrid,
    a: &MarginalSpec,
    b: &MarginalSpec,
    rule: &RuleId,
) -> Result<AxiomReport, AxiomError> {
    if grid.rows != a.len() || grid.cols != b.len() {
        return Err(AxiomError::DimensionMismatch {
            rows: grid.rows,
            cols: grid.cols,
            expected_rows: a.len(),
            expected_cols: b.len(),
        });
    }
    let (n, m) = (grid.rows, grid.cols);
    let row_cells = |i: usize| (0..m).map(move |j| i * m + j);
    let col_cells = |j: usize| (0..n).map(move |i| i * m + j);
    let mask_of = |cells: &mut dyn Iterator<Item = usize>| cells.fold(0u64, |acc, c| acc | 1 << c);

    let mut rows_outcome = AxiomOutcome::new(AxiomId::RowIndependence);
    for columns in 1u32..(1 << m) {
        let members: Vec<usize> = (0..m)
            .filter(|j| columns >> j & 1 == 1)
            .flat_map(col_cells)
            .collect();
        if !members.iter().any(|&c| grid.cells[c] > 0.0) {
            continue;
        }
        let conditioned = transfer_values(&grid.cells, members.iter().copied(), rule)?;
        for i in 0..n {
            rows_outcome.instances += 1;
            let lhs = row_cells(i).map(|c| conditioned[c]).fold(0.0, f64::max);
            let rhs = a.values()[i];
            if (lhs - rhs).abs() > AXIOM_SLACK {
                rows_outcome.violations.push(Counterexample {
                    axiom: AxiomId::RowIndependence,
                    witnesses: vec![
                        Witness::Cells {
                            role: "target",
                            mask: mask_of(&mut row_cells(i)),
                        },
                        Witness::Cells {
                            role: "given",
                            mask: mask_of(&mut members.iter().copied()),
                        },
                    ],
                    lhs,
                    rhs,
                });
            }
        }
    }

    let mut cols_outcome = AxiomOutcome::new(AxiomId::ColumnIndependence);
    for rows in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n)
            .filter(|i| rows >> i & 1 == 1)
            .flat_map(row_cells)
            .collect();
        if !members.iter().any(|&c| grid.cells[c] > 0.0) {
            continue;
        }
        let conditioned = transfer_values(&grid.cells, members.iter().copied(), rule)?;
        for j in 0..m {
            cols_outcome.instances += 1;
            let lhs = col_cells(j).map(|c| conditioned[c]).fold(0.0, f64::max);
            let rhs = b.values()[j];
            if (lhs - rhs).abs() > AXIOM_SLACK {
                cols_outcome.violations.push(Counterexample {
                    axiom: AxiomId::ColumnIndependence,
                    witnesses: vec![
                        Witness::Cells {
                            role: "target",
                            mask: mask_of(&mut col_cells(j)),
                        },
                        Witness::Cells {
                            role: "given",
                            mask: mask_of(&mut members.iter().copied()),
                        },
                    ],
                    lhs,
                    rhs,
                });
            }
        }
    }

    Ok(AxiomReport {
        outcomes: vec![rows_outcome, cols_outcome],
    })
}

fn lattice_steps(resolution: f64) -> Result<u32, AxiomError> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(AxiomError::Resolution(resolution));
    }
    let steps = (1.0 / resolution).round();
    if (steps * resolution - 1.0).abs() > LEVEL_TOLERANCE || steps > 10_000.0 {
        return Err(AxiomError::Resolution(resolution));
    }
    Ok(steps as u32)
}

/// Lattice rows of length `len` whose maximum is `target / steps`.
fn lattice_rows(len: usize, target: f64, steps: u32) -> Vec<Vec<u32>> {
    let k = (target * f64::from(steps)).round();
    if (k / f64::from(steps) - target).abs() > LEVEL_TOLERANCE {
        return Vec::new();
    }
    let k = k as u32;
    let mut out = Vec::new();
    let mut row = vec![0u32; len];
    loop {
        if row.contains(&k) {
            out.push(row.clone());
        }
        // Odometer over {0..=k}^len, last cell fastest, ascending.
        let mut pos = len;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if row[pos] < k {
                row[pos] += 1;
                row[pos + 1..].iter_mut().for_each(|c| *c = 0);
                break;
            }
        }
    }
}

/// Every joint on the lattice `{0, res, …, 1}` whose row and column maxima
/// match the marginals and which passes [`verify_independence`], in
/// lexicographic (row-major) order.
pub fn independent_joints(
    a: &MarginalSpec,
    b: &MarginalSpec,
    rule: &RuleId,
    resolution: f64,
) -> Result<Vec<JointGrid>, AxiomError> {
    let mut found = Vec::new();
    search_lattice(a, b, rule, resolution, |grid| {
        found.push(grid);
        true
    })?;
    Ok(found)
}

/// First joint found by [`independent_joints`], if any.
pub fn search_independent_joint(
    a: &MarginalSpec,
    b: &MarginalSpec,
    rule: &RuleId,
    resolution: f64,
) -> Result<Option<JointGrid>, AxiomError> {
    let mut first = None;
    search_lattice(a, b, rule, resolution, |grid| {
        first = Some(grid);
        false
    })?;
    Ok(first)
}

fn search_lattice(
    a: &MarginalSpec,
    b: &MarginalSpec,
    rule: &RuleId,
    resolution: f64,
    mut accept: impl FnMut(JointGrid) -> bool,
) -> Result<(), AxiomError> {
    let steps = lattice_steps(resolution)?;
    let (n, m) = (a.len(), b.len());
    let col_targets: Vec<u32> = b
        .values()
        .iter()
        .map(|v| (v * f64::from(steps)).round() as u32)
        .collect();
    let candidates: Vec<Vec<Vec<u32>>> = a
        .values()
        .iter()
        .map(|&v| {
            lattice_rows(m, v, steps)
                .into_iter()
                // A cell can never exceed its column's maximum.
                .filter(|row| row.iter().zip(&col_targets).all(|(c, t)| c <= t))
                .collect()
        })
        .collect();
    if candidates.iter().any(Vec::is_empty) {
        return Ok(());
    }

    let mut choice = vec![0usize; n];
    loop {
        let column_maxima_match = (0..m).all(|j| {
            (0..n).map(|i| candidates[i][choice[i]][j]).max() == Some(col_targets[j])
        });
        if column_maxima_match {
            let cells: Vec<f64> = (0..n)
                .flat_map(|i| candidates[i][choice[i]].iter())
                .map(|&k| f64::from(k) / f64::from(steps))
                .collect();
            let grid = JointGrid::new(n, m, cells)?;
            if verify_independence(&grid, a, b, rule)?.passed() && !accept(grid) {
                return Ok(());
            }
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            if choice[pos] + 1 < candidates[pos].len() {
                choice[pos] += 1;
                choice[pos + 1..].iter_mut().for_each(|c| *c = 0);
                break;
            }
        }
    }
}
