//! Confidence transfer: conditioning a density on an event by zeroing the
//! worlds outside it, stratifying the worlds inside it by possibility, and
//! adding cumulative normalization coefficients chosen by a rule.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::logic::{Event, LogicError, World};
use crate::possibility::{Density, LEVEL_TOLERANCE};

/// Tolerance of the coefficient contract (non-negativity and sum).
pub const COEFFICIENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditioningError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("conditioning event has possibility 0, the conditional is undefined")]
    ZeroPossibilityEvidence,
    #[error("normalization rule broke its contract: {0}")]
    RuleContract(String),
}

/// Partition of the positive-possibility worlds of an event by their
/// original possibility, ordered by strictly increasing level.
///
/// Positions are world indices when built from a density and cell indices
/// when built from a joint grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Strata {
    blocks: Vec<Vec<usize>>,
    levels: Vec<f64>,
    null: Vec<usize>,
}

impl Strata {
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// `p₁ < … < pₙ`; the last level is the possibility of the event.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Members of the event with possibility 0. They belong to no stratum
    /// and stay at 0 under every rule.
    pub fn null_positions(&self) -> &[usize] {
        &self.null
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Possibility of the conditioning event.
    pub fn top_level(&self) -> f64 {
        *self.levels.last().expect("strata are never empty")
    }

    /// The normalization constant `1 − Π(α)`.
    pub fn constant(&self) -> f64 {
        1.0 - self.top_level()
    }
}

/// Stratifies the members of an event given the values of all positions.
pub(crate) fn stratify_values(
    values: &[f64],
    members: impl IntoIterator<Item = usize>,
) -> Result<Strata, ConditioningError> {
    let mut positive = Vec::new();
    let mut null = Vec::new();
    for p in members {
        if values[p] > 0.0 {
            positive.push(p);
        } else {
            null.push(p);
        }
    }
    if positive.is_empty() {
        return Err(ConditioningError::ZeroPossibilityEvidence);
    }
    positive.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut levels: Vec<f64> = Vec::new();
    let mut start = f64::NEG_INFINITY;
    for p in positive {
        let v = values[p];
        if v - start > LEVEL_TOLERANCE {
            start = v;
            blocks.push(Vec::new());
            levels.push(v);
        }
        blocks.last_mut().expect("block opened").push(p);
        *levels.last_mut().expect("level opened") = v;
    }
    Ok(Strata {
        blocks,
        levels,
        null,
    })
}

/// Partitions `[α]` by the original possibilities of its worlds.
pub fn stratify(d: &Density, alpha: &Event) -> Result<Strata, ConditioningError> {
    if alpha.frame() != d.frame() {
        return Err(LogicError::FrameMismatch.into());
    }
    stratify_values(d.values(), alpha.worlds().map(World::index))
}

/// Strategy choosing `c₁..cₙ` from the levels `p₁ < … < pₙ` and the
/// normalization constant `1 − Π(α)`.
pub trait NormalizationRule: Send + Sync {
    fn coefficients(&self, levels: &[f64], constant: f64) -> Vec<f64>;
}

impl<F> NormalizationRule for F
where
    F: Fn(&[f64], f64) -> Vec<f64> + Send + Sync,
{
    fn coefficients(&self, levels: &[f64], constant: f64) -> Vec<f64> {
        self(levels, constant)
    }
}

#[derive(Clone)]
pub enum RuleId {
    /// `π(ω|α) = π(ω) / Π(α)`.
    Dempster,
    /// Raises the top stratum to 1 and leaves the rest unchanged.
    Minimum,
    /// Adds the whole constant to every stratum.
    Yager,
    Custom(Arc<dyn NormalizationRule>),
}

impl RuleId {
    pub fn custom(rule: impl NormalizationRule + 'static) -> Self {
        RuleId::Custom(Arc::new(rule))
    }

    /// A rule that always answers with the given coefficients.
    pub fn fixed(coefficients: Vec<f64>) -> Self {
        RuleId::custom(move |_: &[f64], _: f64| coefficients.clone())
    }

    pub fn name(&self) -> &'static str {
        match self {
            RuleId::Dempster => "dempster",
            RuleId::Minimum => "minimum",
            RuleId::Yager => "yager",
            RuleId::Custom(_) => "custom",
        }
    }

    fn raw_coefficients(&self, levels: &[f64], constant: f64) -> Vec<f64> {
        let n = levels.len();
        match self {
            RuleId::Yager => {
                let mut c = vec![0.0; n];
                c[0] = constant;
                c
            }
            RuleId::Minimum => {
                let mut c = vec![0.0; n];
                c[n - 1] = constant;
                c
            }
            RuleId::Dempster => {
                let top = levels[n - 1];
                let scale = constant / top;
                let mut prev = 0.0;
                levels
                    .iter()
                    .map(|&p| {
                        let c = (p - prev) * scale;
                        prev = p;
                        c
                    })
                    .collect()
            }
            RuleId::Custom(rule) => rule.coefficients(levels, constant),
        }
    }
}

impl fmt::Debug for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dempster" => Ok(RuleId::Dempster),
            "minimum" => Ok(RuleId::Minimum),
            "yager" => Ok(RuleId::Yager),
            other => Err(format!(
                "unknown rule `{other}` (expected dempster, minimum or yager)"
            )),
        }
    }
}

/// Coefficients of `rule` for `strata`, checked against the contract:
/// one per stratum, each `≥ 0` and summing to `1 − Π(α)`.
pub fn coefficients(rule: &RuleId, strata: &Strata) -> Result<Vec<f64>, ConditioningError> {
    let constant = strata.constant();
    let c = rule.raw_coefficients(strata.levels(), constant);
    if c.len() != strata.len() {
        return Err(ConditioningError::RuleContract(format!(
            "{} coefficients for {} strata",
            c.len(),
            strata.len()
        )));
    }
    if let Some((i, v)) = c
        .iter()
        .enumerate()
        .find(|(_, &v)| v.is_nan() || v < -COEFFICIENT_TOLERANCE)
    {
        return Err(ConditioningError::RuleContract(format!(
            "coefficient c{} = {v} is negative",
            i + 1
        )));
    }
    let sum: f64 = c.iter().sum();
    if (sum - constant).abs() > COEFFICIENT_TOLERANCE {
        return Err(ConditioningError::RuleContract(format!(
            "coefficients sum to {sum}, expected {constant}"
        )));
    }
    Ok(c)
}

/// Applies confidence transfer to raw values: positions outside `members`
/// become 0, a member in stratum `i` receives `π + c₁ + … + cᵢ`.
pub(crate) fn transfer_values(
    values: &[f64],
    members: impl IntoIterator<Item = usize>,
    rule: &RuleId,
) -> Result<Vec<f64>, ConditioningError> {
    let strata = stratify_values(values, members)?;
    let c = coefficients(rule, &strata)?;
    let top = strata.top_level();
    let mut out = vec![0.0; values.len()];
    let mut cumulative = 0.0;
    for (block, ci) in strata.blocks().iter().zip(&c) {
        cumulative += ci;
        for &p in block {
            out[p] = if values[p] == top {
                1.0
            } else {
                (values[p] + cumulative).min(1.0)
            };
        }
    }
    Ok(out)
}

/// `π(·|α)` by confidence transfer under `rule`.
pub fn confidence_transfer(
    d: &Density,
    alpha: &Event,
    rule: &RuleId,
) -> Result<Density, ConditioningError> {
    if alpha.frame() != d.frame() {
        return Err(LogicError::FrameMismatch.into());
    }
    let values = transfer_values(d.values(), alpha.worlds().map(World::index), rule)?;
    Ok(Density::from_parts(d.frame(), values))
}

/// `Π(β|α)` under `rule`.
pub fn conditional_measure(
    d: &Density,
    alpha: &Event,
    beta: &Event,
    rule: &RuleId,
) -> Result<f64, ConditioningError> {
    let conditioned = confidence_transfer(d, alpha, rule)?;
    conditioned.measure(beta).map_err(|e| match e {
        crate::possibility::PossibilityError::Logic(l) => l.into(),
        other => unreachable!("measure only fails on frame mismatch: {other}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, Frame};
    use approx::assert_abs_diff_eq;

    fn d0() -> Density {
        let f = Frame::new(["X", "Y"]).unwrap();
        Density::new(&f, vec![1.0, 0.4, 0.2, 0.1]).unwrap()
    }

    fn ev(d: &Density, idx: &[usize]) -> Event {
        Event::from_worlds(d.frame(), idx.iter().map(|&i| World::from_index(i)))
    }

    fn assert_values(d: &Density, expected: [f64; 4]) {
        for (got, want) in d.values().iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn stratify_orders_blocks_by_level() {
        let d = d0();
        let s = stratify(&d, &ev(&d, &[2, 3])).unwrap();
        assert_eq!(s.blocks(), [vec![3], vec![2]]);
        assert_eq!(s.levels(), [0.1, 0.2]);

        let s = stratify(&d, &Event::full(d.frame())).unwrap();
        assert_eq!(s.blocks(), [vec![3], vec![2], vec![1], vec![0]]);
        assert_eq!(s.levels(), [0.1, 0.2, 0.4, 1.0]);
    }

    #[test]
    fn stratify_groups_within_tolerance_and_sets_zero_aside() {
        let f = Frame::new(["X", "Y"]).unwrap();
        let d = Density::new(&f, vec![1.0, 0.3, 0.3 + 1e-12, 0.0]).unwrap();
        let s = stratify(&d, &Event::full(&f)).unwrap();
        assert_eq!(s.blocks(), [vec![1, 2], vec![0]]);
        assert_eq!(s.null_positions(), [3]);
    }

    #[test]
    fn zero_possibility_evidence_is_rejected() {
        let f = Frame::new(["X", "Y"]).unwrap();
        let d = Density::new(&f, vec![1.0, 0.0, 0.0, 0.5]).unwrap();
        let alpha = ev(&d, &[1, 2]);
        assert_eq!(
            stratify(&d, &alpha),
            Err(ConditioningError::ZeroPossibilityEvidence)
        );
        for rule in [RuleId::Dempster, RuleId::Minimum, RuleId::Yager] {
            assert_eq!(
                confidence_transfer(&d, &alpha, &rule),
                Err(ConditioningError::ZeroPossibilityEvidence)
            );
        }
    }

    #[test]
    fn named_rule_coefficients() {
        let d = d0();
        let s = stratify(&d, &ev(&d, &[2, 3])).unwrap();
        assert_abs_diff_eq!(s.constant(), 0.8, epsilon = 1e-15);
        let yager = coefficients(&RuleId::Yager, &s).unwrap();
        assert_abs_diff_eq!(yager[0], 0.8, epsilon = 1e-12);
        assert_eq!(yager[1], 0.0);
        let minimum = coefficients(&RuleId::Minimum, &s).unwrap();
        assert_eq!(minimum[0], 0.0);
        assert_abs_diff_eq!(minimum[1], 0.8, epsilon = 1e-12);
        let dempster = coefficients(&RuleId::Dempster, &s).unwrap();
        assert_abs_diff_eq!(dempster[0], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(dempster[1], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn single_stratum_rules_coincide() {
        let f = Frame::new(["X", "Y"]).unwrap();
        let d = Density::new(&f, vec![1.0, 0.5, 0.5, 0.2]).unwrap();
        let alpha = ev(&d, &[1, 2]);
        let s = stratify(&d, &alpha).unwrap();
        assert_eq!(s.len(), 1);
        for rule in [RuleId::Dempster, RuleId::Minimum, RuleId::Yager] {
            let c = coefficients(&rule, &s).unwrap();
            assert_abs_diff_eq!(c[0], 0.5, epsilon = 1e-15);
            assert_values(
                &confidence_transfer(&d, &alpha, &rule).unwrap(),
                [0.0, 1.0, 1.0, 0.0],
            );
        }
    }

    #[test]
    fn transfer_examples_on_d0() {
        let d = d0();
        let alpha = ev(&d, &[2, 3]);
        let dempster = confidence_transfer(&d, &alpha, &RuleId::Dempster).unwrap();
        assert_values(&dempster, [0.0, 0.0, 1.0, 0.5]);
        let minimum = confidence_transfer(&d, &alpha, &RuleId::Minimum).unwrap();
        assert_values(&minimum, [0.0, 0.0, 1.0, 0.1]);
        let yager = confidence_transfer(&d, &alpha, &RuleId::Yager).unwrap();
        assert_values(&yager, [0.0, 0.0, 1.0, 0.9]);
        for rule in [RuleId::Dempster, RuleId::Minimum, RuleId::Yager] {
            let same = confidence_transfer(&d, &Event::full(d.frame()), &rule).unwrap();
            assert_eq!(same, d);
        }
    }

    #[test]
    fn conditional_measure_examples() {
        let d = d0();
        let alpha = ev(&d, &[2, 3]);
        let f = d.frame().clone();
        let y = parse_formula("Y", &f).unwrap().models(&f);
        let not_y = y.complement();
        let rule = RuleId::Dempster;
        assert_abs_diff_eq!(conditional_measure(&d, &alpha, &y, &rule).unwrap(), 1.0);
        assert_abs_diff_eq!(
            conditional_measure(&d, &alpha, &not_y, &rule).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_eq!(
            conditional_measure(&d, &alpha, &Event::full(&f), &RuleId::Yager).unwrap(),
            1.0
        );
    }

    #[test]
    fn zero_worlds_inside_the_event_stay_zero() {
        let f = Frame::new(["X", "Y"]).unwrap();
        let d = Density::new(&f, vec![1.0, 0.0, 0.3, 0.6]).unwrap();
        let alpha = ev(&d, &[1, 2, 3]);
        for rule in [RuleId::Dempster, RuleId::Minimum, RuleId::Yager] {
            let c = confidence_transfer(&d, &alpha, &rule).unwrap();
            assert_eq!(c.values()[1], 0.0, "{rule}");
            assert_eq!(c.values()[0], 0.0, "{rule}");
            assert_eq!(c.values()[3], 1.0, "{rule}");
        }
    }

    #[test]
    fn custom_rules_are_checked() {
        let d = d0();
        let alpha = ev(&d, &[2, 3]);
        let even = RuleId::custom(|levels: &[f64], constant: f64| {
            vec![constant / levels.len() as f64; levels.len()]
        });
        let c = confidence_transfer(&d, &alpha, &even).unwrap();
        assert_values(&c, [0.0, 0.0, 1.0, 0.5]);

        let short = RuleId::fixed(vec![0.8]);
        assert!(matches!(
            confidence_transfer(&d, &alpha, &short),
            Err(ConditioningError::RuleContract(_))
        ));
        let negative = RuleId::fixed(vec![0.9, -0.1]);
        assert!(matches!(
            confidence_transfer(&d, &alpha, &negative),
            Err(ConditioningError::RuleContract(_))
        ));
        let wrong_sum = RuleId::fixed(vec![0.5, 0.5]);
        assert!(matches!(
            confidence_transfer(&d, &alpha, &wrong_sum),
            Err(ConditioningError::RuleContract(_))
        ));
    }

    #[test]
    fn rule_names_parse() {
        for name in ["dempster", "minimum", "yager"] {
            assert_eq!(name.parse::<RuleId>().unwrap().name(), name);
        }
        assert!("average".parse::<RuleId>().is_err());
    }
}
