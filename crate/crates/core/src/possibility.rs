//! Possibility densities, the measures they induce, necessity, consonant
//! m-value functions and the expectation ordering.

use std::cmp::Ordering;
use std::fmt::Write as _;

use thiserror::Error;

use crate::logic::{Event, Formula, Frame, LogicError, World};

/// Values closer than this are treated as the same possibility level.
pub const LEVEL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PossibilityError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("density has {got} values but the frame has {expected} worlds")]
    WrongLength { expected: usize, got: usize },
    #[error("possibility {value} of world {world} is outside [0, 1]")]
    OutOfRange { world: String, value: f64 },
    #[error("invalid density: maximum possibility is {0}, expected 1")]
    NotNormalized(f64),
    #[error("invalid m-value function: {0}")]
    InvalidMValue(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Possibility distribution over the worlds of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    frame: Frame,
    values: Vec<f64>,
}

impl Density {
    /// Validated density: one value per world, all in `[0, 1]`, maximum 1.
    pub fn new(frame: &Frame, values: Vec<f64>) -> Result<Self, PossibilityError> {
        let density = Self::new_unchecked(frame, values)?;
        density.validate()?;
        Ok(density)
    }

    /// Builds a density without range or normalization checks. Only the
    /// length is enforced. Use [`Density::validate`] before relying on it.
    pub fn new_unchecked(frame: &Frame, values: Vec<f64>) -> Result<Self, PossibilityError> {
        if values.len() != frame.world_count() {
            return Err(PossibilityError::WrongLength {
                expected: frame.world_count(),
                got: values.len(),
            });
        }
        Ok(Self {
            frame: frame.clone(),
            values,
        })
    }

    /// Divides by the maximum so the result attains 1.
    pub fn normalized(frame: &Frame, mut values: Vec<f64>) -> Result<Self, PossibilityError> {
        let max = values.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(PossibilityError::NotNormalized(max));
        }
        for v in &mut values {
            *v /= max;
        }
        Self::new(frame, values)
    }

    pub fn from_fn(
        frame: &Frame,
        f: impl Fn(World) -> f64,
    ) -> Result<Self, PossibilityError> {
        Self::new(frame, frame.worlds().map(f).collect())
    }

    /// The vacuous density: every world totally possible.
    pub fn uniform(frame: &Frame) -> Self {
        Self {
            frame: frame.clone(),
            values: vec![1.0; frame.world_count()],
        }
    }

    pub(crate) fn from_parts(frame: &Frame, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), frame.world_count());
        Self {
            frame: frame.clone(),
            values,
        }
    }

    pub fn validate(&self) -> Result<(), PossibilityError> {
        for (i, &v) in self.values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(PossibilityError::OutOfRange {
                    world: self.frame.world_label(World::from_index(i)),
                    value: v,
                });
            }
        }
        let max = self.max_value();
        if (max - 1.0).abs() > LEVEL_TOLERANCE {
            return Err(PossibilityError::NotNormalized(max));
        }
        Ok(())
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, world: World) -> f64 {
        self.values[world.index()]
    }

    fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Π(A) = max{π(ω) : ω ∈ A}`, 0 for the empty event.
    pub fn measure(&self, event: &Event) -> Result<f64, PossibilityError> {
        self.check_frame(event)?;
        Ok(self.measure_unchecked(event))
    }

    pub(crate) fn measure_unchecked(&self, event: &Event) -> f64 {
        event
            .worlds()
            .map(|w| self.values[w.index()])
            .fold(0.0, f64::max)
    }

    /// `Co(A) = 1 − Π(¬A)`.
    pub fn necessity(&self, event: &Event) -> Result<f64, PossibilityError> {
        self.check_frame(event)?;
        Ok(1.0 - self.measure_unchecked(&event.complement()))
    }

    pub fn measure_of(&self, formula: &Formula) -> f64 {
        self.measure_unchecked(&formula.models(&self.frame))
    }

    /// Consonant m-value function with the same necessity.
    pub fn to_mvalue(&self) -> MValueFunction {
        let levels = distinct_levels(&self.values);
        let mut focal = Vec::with_capacity(levels.len());
        for (i, &level) in levels.iter().enumerate() {
            let next = levels.get(i + 1).copied().unwrap_or(0.0);
            let set = Event::from_worlds(
                &self.frame,
                self.frame
                    .worlds()
                    .filter(|&w| self.values[w.index()] >= level - LEVEL_TOLERANCE),
            );
            focal.push(FocalElement {
                set,
                mass: level - next,
            });
        }
        MValueFunction {
            frame: self.frame.clone(),
            focal,
        }
    }

    /// Expectation ordering: `a ≥_E b` iff `Π(¬a) ≤ Π(¬b)`. The result is
    /// `Greater` when `a` is strictly more expected than `b`.
    pub fn compare_expectation(&self, a: &Formula, b: &Formula) -> Ordering {
        let surprise_a = self.measure_unchecked(&a.models(&self.frame).complement());
        let surprise_b = self.measure_unchecked(&b.models(&self.frame).complement());
        surprise_b
            .partial_cmp(&surprise_a)
            .expect("possibility values are never NaN")
    }

    /// Checks (E1)–(E4) of the expectation ordering over a sample of formulas.
    pub fn check_expectation_axioms(
        &self,
        sample: &[Formula],
    ) -> Result<ExpectationReport, PossibilityError> {
        self.validate()?;
        let n = sample.len();
        // Π of each negation; a ≥_E b iff surprise[a] ≤ surprise[b].
        let models: Vec<Event> = sample.iter().map(|f| f.models(&self.frame)).collect();
        let surprise: Vec<f64> = models
            .iter()
            .map(|m| self.measure_unchecked(&m.complement()))
            .collect();
        let geq = |a: f64, b: f64| a <= b;
        let mut report = ExpectationReport {
            e1_instances: n * n * n,
            ..ExpectationReport::default()
        };

        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if geq(surprise[i], surprise[j])
                        && geq(surprise[j], surprise[k])
                        && !geq(surprise[i], surprise[k])
                    {
                        report.violations.push(ExpectationViolation {
                            axiom: ExpectationAxiom::E1,
                            formulas: vec![i, j, k],
                        });
                    }
                }
            }
        }

        for i in 0..n {
            for j in 0..n {
                let conj = models[i].intersection(&models[j])?;
                let conj_surprise = self.measure_unchecked(&conj.complement());
                report.e3_instances += 1;
                if !geq(conj_surprise, surprise[i]) && !geq(conj_surprise, surprise[j]) {
                    report.violations.push(ExpectationViolation {
                        axiom: ExpectationAxiom::E3,
                        formulas: vec![i, j],
                    });
                }
                // ⊢ sample[i] ⊃ sample[j] when every model of i is a model of j.
                if models[i].is_subset_of(&models[j])? {
                    report.e2_instances += 1;
                    if !geq(surprise[j], surprise[i]) {
                        report.violations.push(ExpectationViolation {
                            axiom: ExpectationAxiom::E2,
                            formulas: vec![i, j],
                        });
                    }
                }
            }
        }

        if self.compare_expectation(&Formula::True, &Formula::False) != Ordering::Greater {
            report.violations.push(ExpectationViolation {
                axiom: ExpectationAxiom::E4,
                formulas: vec![],
            });
        }
        Ok(report)
    }

    fn check_frame(&self, event: &Event) -> Result<(), LogicError> {
        if event.frame() == &self.frame {
            Ok(())
        } else {
            Err(LogicError::FrameMismatch)
        }
    }
}

/// Distinct positive values, descending, grouped within [`LEVEL_TOLERANCE`].
fn distinct_levels(values: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("no NaN"));
    let mut levels: Vec<f64> = Vec::new();
    for v in sorted {
        match levels.last() {
            Some(&last) if last - v <= LEVEL_TOLERANCE => {}
            _ => levels.push(v),
        }
    }
    levels
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectationAxiom {
    E1,
    E2,
    E3,
    E4,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectationViolation {
    pub axiom: ExpectationAxiom,
    /// Indices into the checked sample.
    pub formulas: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExpectationReport {
    pub e1_instances: usize,
    pub e2_instances: usize,
    pub e3_instances: usize,
    pub violations: Vec<ExpectationViolation>,
}

impl ExpectationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocalElement {
    pub set: Event,
    pub mass: f64,
}

/// Consonant mass assignment: strictly nested focal sets with positive masses
/// summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MValueFunction {
    frame: Frame,
    focal: Vec<FocalElement>,
}

impl MValueFunction {
    /// Focal elements must be given from the smallest to the largest.
    pub fn new(frame: &Frame, focal: Vec<(Event, f64)>) -> Result<Self, PossibilityError> {
        let invalid = |m: &str| Err(PossibilityError::InvalidMValue(m.to_string()));
        if focal.is_empty() {
            return invalid("no focal elements");
        }
        let mut total = 0.0;
        for (i, (set, mass)) in focal.iter().enumerate() {
            if set.frame() != frame {
                return Err(LogicError::FrameMismatch.into());
            }
            if set.is_empty() {
                return invalid("mass on the empty set");
            }
            if mass.is_nan() || *mass <= 0.0 {
                return invalid("focal masses must be positive");
            }
            if i > 0 {
                let prev = &focal[i - 1].0;
                if !prev.is_subset_of(set)? || prev.len() == set.len() {
                    return invalid("focal elements are not strictly nested");
                }
            }
            total += mass;
        }
        if (total - 1.0).abs() > LEVEL_TOLERANCE {
            return Err(PossibilityError::InvalidMValue(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            frame: frame.clone(),
            focal: focal
                .into_iter()
                .map(|(set, mass)| FocalElement { set, mass })
                .collect(),
        })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn focal_elements(&self) -> &[FocalElement] {
        &self.focal
    }

    /// Consonant belief `Co_m(A)`: total mass of focal elements inside `A`.
    pub fn belief(&self, event: &Event) -> Result<f64, PossibilityError> {
        let mut total = 0.0;
        for f in &self.focal {
            if f.set.is_subset_of(event)? {
                total += f.mass;
            }
        }
        Ok(total)
    }

    /// Possibility density: `π(ω)` is the total mass of focal sets holding `ω`.
    pub fn to_density(&self) -> Density {
        let mut values = vec![0.0; self.frame.world_count()];
        // Largest focal element first, so each world's sum starts from the
        // smallest masses.
        for f in self.focal.iter().rev() {
            for w in f.set.worlds() {
                values[w.index()] += f.mass;
            }
        }
        Density::from_parts(&self.frame, values)
    }
}

/// `from_mvalue`: the density dual to an m-value function.
pub fn from_mvalue(m: &MValueFunction) -> Density {
    m.to_density()
}

/// `to_mvalue`: the m-value function dual to a density.
pub fn to_mvalue(d: &Density) -> MValueFunction {
    d.to_mvalue()
}

/// Parses the density text format:
///
/// ```text
/// # comment
/// frame: X Y
/// T T : 1.0
/// T F : 0.4
/// ```
///
/// Unlisted worlds default to 0.
pub fn parse_density(text: &str) -> Result<Density, PossibilityError> {
    let mut frame: Option<Frame> = None;
    let mut values: Vec<Option<f64>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| PossibilityError::Parse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("frame:") {
            if frame.is_some() {
                return Err(err("duplicate `frame:` line".into()));
            }
            let f = Frame::new(rest.split_whitespace()).map_err(|e| err(e.to_string()))?;
            values = vec![None; f.world_count()];
            frame = Some(f);
            continue;
        }
        let Some(f) = frame.as_ref() else {
            return Err(err("expected `frame:` before world lines".into()));
        };
        let (lhs, rhs) = line
            .split_once(':')
            .ok_or_else(|| err("expected `<T|F ...> : <value>`".into()))?;
        let literals: Vec<&str> = lhs.split_whitespace().collect();
        if literals.len() != f.len() {
            return Err(err(format!(
                "expected {} truth values, found {}",
                f.len(),
                literals.len()
            )));
        }
        let mut assignment = Vec::with_capacity(f.len());
        for lit in literals {
            match lit {
                "T" => assignment.push(true),
                "F" => assignment.push(false),
                other => return Err(err(format!("expected T or F, found `{other}`"))),
            }
        }
        let value: f64 = rhs
            .trim()
            .parse()
            .map_err(|_| err(format!("invalid number `{}`", rhs.trim())))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(err(format!("possibility {value} is outside [0, 1]")));
        }
        let world = f.world_from_values(&assignment);
        if values[world.index()].replace(value).is_some() {
            return Err(err(format!("world {} listed twice", f.world_label(world))));
        }
    }
    let frame = frame.ok_or(PossibilityError::Parse {
        line: 0,
        message: "missing `frame:` line".into(),
    })?;
    Density::new(&frame, values.into_iter().map(|v| v.unwrap_or(0.0)).collect())
}

/// Renders a density in the text format accepted by [`parse_density`].
pub fn render_density(d: &Density) -> String {
    let frame = d.frame();
    let mut out = format!("frame: {}\n", frame.names().join(" "));
    for w in frame.worlds() {
        let lits: Vec<String> = frame
            .world_label(w)
            .chars()
            .map(|c| c.to_string())
            .collect();
        let _ = writeln!(out, "{} : {}", lits.join(" "), d.value(w));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;
    use approx::assert_abs_diff_eq;

    fn xy() -> Frame {
        Frame::new(["X", "Y"]).unwrap()
    }

    fn d0() -> Density {
        Density::new(&xy(), vec![1.0, 0.4, 0.2, 0.1]).unwrap()
    }

    fn ev(frame: &Frame, idx: &[usize]) -> Event {
        Event::from_worlds(frame, idx.iter().map(|&i| World::from_index(i)))
    }

    #[test]
    fn measure_and_necessity() {
        let d = d0();
        let f = d.frame().clone();
        assert_eq!(d.measure(&Event::full(&f)).unwrap(), 1.0);
        assert_eq!(d.measure(&Event::empty(&f)).unwrap(), 0.0);
        assert_eq!(d.measure(&ev(&f, &[2, 3])).unwrap(), 0.2);
        assert_eq!(d.necessity(&Event::full(&f)).unwrap(), 1.0);
        assert_eq!(d.necessity(&Event::empty(&f)).unwrap(), 0.0);
        assert_abs_diff_eq!(d.necessity(&ev(&f, &[0, 1])).unwrap(), 0.8, epsilon = 1e-15);

        let other = Frame::new(["A", "B"]).unwrap();
        assert!(d.measure(&Event::full(&other)).is_err());
    }

    #[test]
    fn density_validation() {
        let f = xy();
        assert!(matches!(
            Density::new(&f, vec![0.9, 0.4, 0.2, 0.1]),
            Err(PossibilityError::NotNormalized(_))
        ));
        assert!(matches!(
            Density::new(&f, vec![1.0, 1.4, 0.2, 0.1]),
            Err(PossibilityError::OutOfRange { .. })
        ));
        assert!(matches!(
            Density::new(&f, vec![1.0]),
            Err(PossibilityError::WrongLength { .. })
        ));
        let n = Density::normalized(&f, vec![0.5, 0.25, 0.0, 0.0]).unwrap();
        assert_eq!(n.values(), [1.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn mvalue_of_d0_has_four_strata() {
        let m = d0().to_mvalue();
        let f = m.frame().clone();
        let expected = [
            (ev(&f, &[0]), 0.6),
            (ev(&f, &[0, 1]), 0.2),
            (ev(&f, &[0, 1, 2]), 0.1),
            (ev(&f, &[0, 1, 2, 3]), 0.1),
        ];
        assert_eq!(m.focal_elements().len(), 4);
        for (fe, (set, mass)) in m.focal_elements().iter().zip(expected) {
            assert_eq!(fe.set, set);
            assert_abs_diff_eq!(fe.mass, mass, epsilon = 1e-15);
        }
        assert_eq!(m.to_density(), d0());
    }

    #[test]
    fn vacuous_and_crisp_mvalues() {
        let f = xy();
        let m = Density::uniform(&f).to_mvalue();
        assert_eq!(m.focal_elements().len(), 1);
        assert_eq!(m.focal_elements()[0].set, Event::full(&f));
        assert_eq!(m.focal_elements()[0].mass, 1.0);
        assert_eq!(from_mvalue(&m), Density::uniform(&f));

        let crisp = Density::new(&f, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let m = crisp.to_mvalue();
        assert_eq!(m.focal_elements().len(), 1);
        assert_eq!(m.focal_elements()[0].set, ev(&f, &[0, 1]));
    }

    #[test]
    fn from_mvalue_partial_sums() {
        let f = xy();
        let m = MValueFunction::new(&f, vec![(ev(&f, &[0]), 0.5), (ev(&f, &[0, 1]), 0.5)]).unwrap();
        assert_eq!(m.to_density().values(), [1.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn mvalue_validation() {
        let f = xy();
        let bad_nest = MValueFunction::new(&f, vec![(ev(&f, &[0]), 0.5), (ev(&f, &[1]), 0.5)]);
        assert!(matches!(bad_nest, Err(PossibilityError::InvalidMValue(_))));
        let equal = MValueFunction::new(&f, vec![(ev(&f, &[0]), 0.5), (ev(&f, &[0]), 0.5)]);
        assert!(equal.is_err());
        let sum = MValueFunction::new(&f, vec![(ev(&f, &[0]), 0.5)]);
        assert!(sum.is_err());
        let empty = MValueFunction::new(&f, vec![(Event::empty(&f), 1.0)]);
        assert!(empty.is_err());
    }

    #[test]
    fn expectation_ordering() {
        let d = d0();
        let f = d.frame().clone();
        let x = parse_formula("X", &f).unwrap();
        let y = parse_formula("Y", &f).unwrap();
        assert_eq!(d.compare_expectation(&x, &y), Ordering::Greater);
        assert_eq!(d.compare_expectation(&y, &x), Ordering::Less);
        assert_eq!(d.compare_expectation(&x, &x), Ordering::Equal);
        assert_eq!(
            d.compare_expectation(&Formula::True, &Formula::False),
            Ordering::Greater
        );
    }

    #[test]
    fn expectation_axioms_hold_for_d0() {
        let d = d0();
        let f = d.frame().clone();
        let sample: Vec<Formula> = ["X", "Y", "X & Y"]
            .iter()
            .map(|s| parse_formula(s, &f).unwrap())
            .collect();
        let report = d.check_expectation_axioms(&sample).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.e1_instances, 27);
        assert_eq!(report.e3_instances, 9);
        // X∧Y ⊆ X, X∧Y ⊆ Y and the three reflexive pairs.
        assert_eq!(report.e2_instances, 5);
    }

    #[test]
    fn expectation_axioms_reject_unnormalized_density() {
        let f = xy();
        let corrupted = Density::new_unchecked(&f, vec![0.5, 0.4, 0.2, 0.1]).unwrap();
        assert!(matches!(
            corrupted.check_expectation_axioms(&[Formula::True]),
            Err(PossibilityError::NotNormalized(_))
        ));
    }

    #[test]
    fn parses_density_files() {
        let d = parse_density(
            "# d0\nframe: X Y\nT T : 1.0\nT F : 0.4 # note\nF T : 0.2\nF F : 0.1\n",
        )
        .unwrap();
        assert_eq!(d, d0());
        let sparse = parse_density("frame: X Y\nF T : 1.0\n").unwrap();
        assert_eq!(sparse.values(), [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(parse_density(&render_density(&d0())).unwrap(), d0());
    }

    #[test]
    fn density_parse_errors() {
        let err = |s: &str| parse_density(s).unwrap_err();
        assert!(matches!(err("T T : 1.0"), PossibilityError::Parse { line: 1, .. }));
        assert!(matches!(
            err("frame: X Y\nT : 1.0"),
            PossibilityError::Parse { line: 2, .. }
        ));
        assert!(matches!(
            err("frame: X Y\nT T : 1.0\nT T : 0.5"),
            PossibilityError::Parse { line: 3, .. }
        ));
        assert!(matches!(
            err("frame: X Y\nT T : 0.5"),
            PossibilityError::NotNormalized(_)
        ));
        assert!(matches!(
            err("frame: X Y\nT Q : 1.0"),
            PossibilityError::Parse { line: 2, .. }
        ));
    }
}
