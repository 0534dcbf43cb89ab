//! Propositional frames, worlds, events and the formula language.
//!
//! A [`Frame`] fixes an ordered list of primitives. Worlds are encoded as
//! indices in `[0, 2^n)`: the first declared primitive is the most
//! significant bit and a clear bit means `T`, so for a frame `(B, E)` the
//! worlds enumerate as `TT, TF, FT, FF`. Model and density files depend on
//! this ordering.

use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;
use thiserror::Error;

/// Largest frame for which worlds are enumerated.
pub const MAX_PRIMITIVES: usize = 24;

/// Largest frame for which every event can be enumerated (`2^(2^4)` events).
pub const MAX_EXHAUSTIVE_PRIMITIVES: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogicError {
    #[error("frame must declare at least one primitive")]
    EmptyFrame,
    #[error("duplicate primitive `{0}`")]
    DuplicatePrimitive(String),
    #[error("invalid primitive name `{0}`")]
    InvalidName(String),
    #[error("frame has {0} primitives, at most {limit} are supported here", limit = MAX_PRIMITIVES)]
    Capacity(usize),
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),
    #[error("events belong to different frames")]
    FrameMismatch,
}

/// Ordered, non-empty set of distinct propositional primitives.
///
/// Cloning is cheap; clones compare equal by pointer before falling back to
/// comparing names.
#[derive(Clone)]
pub struct Frame {
    names: Arc<[String]>,
}

impl Frame {
    pub fn new<I, S>(names: I) -> Result<Self, LogicError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(LogicError::EmptyFrame);
        }
        if names.len() > MAX_PRIMITIVES {
            return Err(LogicError::Capacity(names.len()));
        }
        for (i, name) in names.iter().enumerate() {
            if !is_identifier(name) || name == "true" || name == "false" {
                return Err(LogicError::InvalidName(name.clone()));
            }
            if names[..i].contains(name) {
                return Err(LogicError::DuplicatePrimitive(name.clone()));
            }
        }
        Ok(Self {
            names: names.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, primitive: usize) -> &str {
        &self.names[primitive]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn world_count(&self) -> usize {
        1usize << self.names.len()
    }

    pub fn worlds(&self) -> impl Iterator<Item = World> {
        (0..self.world_count() as u32).map(World)
    }

    /// Truth value of `primitive` in `world`.
    pub fn holds(&self, world: World, primitive: usize) -> bool {
        let shift = self.names.len() - 1 - primitive;
        (world.0 >> shift) & 1 == 0
    }

    /// Builds the world assigning `values[i]` to primitive `i`.
    ///
    /// # Panics
    /// If `values` does not have one entry per primitive.
    pub fn world_from_values(&self, values: &[bool]) -> World {
        assert_eq!(values.len(), self.len(), "one truth value per primitive");
        let index = values
            .iter()
            .fold(0u32, |acc, &v| (acc << 1) | u32::from(!v));
        World(index)
    }

    /// `T`/`F` string for a world, one letter per primitive.
    pub fn world_label(&self, world: World) -> String {
        (0..self.len())
            .map(|p| if self.holds(world, p) { 'T' } else { 'F' })
            .collect()
    }

    fn same(&self, other: &Frame) -> bool {
        Arc::ptr_eq(&self.names, &other.names) || self.names == other.names
    }
}

impl PartialEq for Frame {
    fn eq(&self, other: &Self) -> bool {
        self.same(other)
    }
}

impl Eq for Frame {}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Frame").field(&self.names).finish()
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A total truth assignment, stored as its world index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct World(u32);

impl World {
    pub fn from_index(index: usize) -> Self {
        World(index as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A set of worlds of one frame, stored as a bitset indexed by world.
#[derive(Clone, PartialEq, Eq)]
pub struct Event {
    frame: Frame,
    bits: SmallVec<[u64; 1]>,
}

impl Event {
    pub fn empty(frame: &Frame) -> Self {
        let words = frame.world_count().div_ceil(64);
        Self {
            frame: frame.clone(),
            bits: SmallVec::from_elem(0, words),
        }
    }

    pub fn full(frame: &Frame) -> Self {
        Self::empty(frame).complement()
    }

    pub fn from_worlds<I: IntoIterator<Item = World>>(frame: &Frame, worlds: I) -> Self {
        let mut event = Self::empty(frame);
        for w in worlds {
            event.insert(w);
        }
        event
    }

    /// Event from a bitmask where bit `w` marks world `w`.
    ///
    /// # Panics
    /// If the frame has more than 64 worlds.
    pub fn from_mask(frame: &Frame, mask: u64) -> Self {
        assert!(frame.world_count() <= 64, "mask events need at most 64 worlds");
        let mut event = Self::empty(frame);
        event.bits[0] = mask & full_word_mask(frame.world_count());
        event
    }

    /// Every event of the frame, in mask order. Only small frames qualify.
    pub fn all(frame: &Frame) -> Result<impl Iterator<Item = Event> + '_, LogicError> {
        if frame.len() > MAX_EXHAUSTIVE_PRIMITIVES {
            return Err(LogicError::Capacity(frame.len()));
        }
        let count = 1u64 << frame.world_count();
        Ok((0..count).map(move |mask| Event::from_mask(frame, mask)))
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// The bitmask of the event when the frame has at most 64 worlds.
    pub fn mask(&self) -> Option<u64> {
        (self.frame.world_count() <= 64).then(|| self.bits[0])
    }

    pub fn insert(&mut self, world: World) {
        let i = world.index();
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, world: World) -> bool {
        let i = world.index();
        i < self.frame.world_count() && (self.bits[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn worlds(&self) -> impl Iterator<Item = World> + '_ {
        self.bits.iter().enumerate().flat_map(|(i, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros();
                rest &= rest - 1;
                Some(World((i * 64) as u32 + bit))
            })
        })
    }

    pub fn complement(&self) -> Self {
        let count = self.frame.world_count();
        let mut bits: SmallVec<[u64; 1]> = self.bits.iter().map(|w| !w).collect();
        let last = bits.len() - 1;
        bits[last] &= full_word_mask(count - last * 64);
        Self {
            frame: self.frame.clone(),
            bits,
        }
    }

    pub fn intersection(&self, other: &Event) -> Result<Self, LogicError> {
        self.zip(other, |a, b| a & b)
    }

    pub fn union(&self, other: &Event) -> Result<Self, LogicError> {
        self.zip(other, |a, b| a | b)
    }

    pub fn difference(&self, other: &Event) -> Result<Self, LogicError> {
        self.zip(other, |a, b| a & !b)
    }

    pub fn is_subset_of(&self, other: &Event) -> Result<bool, LogicError> {
        self.check_frame(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0))
    }

    /// Hexadecimal bitmask, bit `w` set when world `w` is a member.
    pub fn to_hex(&self) -> String {
        let mut out = String::from("0x");
        let mut leading = true;
        for word in self.bits.iter().rev() {
            if leading {
                if *word == 0 {
                    continue;
                }
                out.push_str(&format!("{word:x}"));
                leading = false;
            } else {
                out.push_str(&format!("{word:016x}"));
            }
        }
        if leading {
            out.push('0');
        }
        out
    }

    fn check_frame(&self, other: &Event) -> Result<(), LogicError> {
        if self.frame.same(&other.frame) {
            Ok(())
        } else {
            Err(LogicError::FrameMismatch)
        }
    }

    fn zip(&self, other: &Event, op: impl Fn(u64, u64) -> u64) -> Result<Self, LogicError> {
        self.check_frame(other)?;
        Ok(Self {
            frame: self.frame.clone(),
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.worlds().map(|w| self.frame.world_label(w)))
            .finish()
    }
}

fn full_word_mask(worlds: usize) -> u64 {
    if worlds >= 64 {
        u64::MAX
    } else {
        (1u64 << worlds) - 1
    }
}

/// A literal `P` or `¬P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn new(var: usize, positive: bool) -> Self {
        Self { var, positive }
    }
}

/// Propositional formula over the primitives of a frame.
///
/// Atoms store the primitive's index in the frame they were built for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Atom(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(primitive: usize) -> Self {
        Formula::Atom(primitive)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn literal(lit: Literal) -> Self {
        if lit.positive {
            Formula::Atom(lit.var)
        } else {
            Formula::not(Formula::Atom(lit.var))
        }
    }

    /// Left-nested conjunction of literals; `true` for an empty list.
    pub fn conjunction(literals: &[Literal]) -> Self {
        literals
            .iter()
            .map(|&l| Formula::literal(l))
            .reduce(Formula::and)
            .unwrap_or(Formula::True)
    }

    /// Classical truth value in a world.
    pub fn eval(&self, frame: &Frame, world: World) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(p) => frame.holds(world, *p),
            Formula::Not(f) => !f.eval(frame, world),
            Formula::And(a, b) => a.eval(frame, world) && b.eval(frame, world),
            Formula::Or(a, b) => a.eval(frame, world) || b.eval(frame, world),
            Formula::Implies(a, b) => !a.eval(frame, world) || b.eval(frame, world),
        }
    }

    /// The set of worlds satisfying the formula, computed with set algebra.
    pub fn models(&self, frame: &Frame) -> Event {
        match self {
            Formula::True => Event::full(frame),
            Formula::False => Event::empty(frame),
            Formula::Atom(p) => {
                Event::from_worlds(frame, frame.worlds().filter(|&w| frame.holds(w, *p)))
            }
            Formula::Not(f) => f.models(frame).complement(),
            Formula::And(a, b) => same_frame(a.models(frame).intersection(&b.models(frame))),
            Formula::Or(a, b) => same_frame(a.models(frame).union(&b.models(frame))),
            Formula::Implies(a, b) => {
                same_frame(a.models(frame).complement().union(&b.models(frame)))
            }
        }
    }

    /// The literals of a conjunction of literals, or `None` for any other shape.
    pub fn literal_conjunction(&self) -> Option<Vec<Literal>> {
        fn walk(f: &Formula, out: &mut Vec<Literal>) -> bool {
            match f {
                Formula::True => true,
                Formula::Atom(p) => {
                    out.push(Literal::new(*p, true));
                    true
                }
                Formula::Not(inner) => match **inner {
                    Formula::Atom(p) => {
                        out.push(Literal::new(p, false));
                        true
                    }
                    _ => false,
                },
                Formula::And(a, b) => walk(a, out) && walk(b, out),
                _ => false,
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out).then_some(out)
    }

    /// Renders with the minimal parentheses the grammar needs.
    pub fn render(&self, frame: &Frame) -> String {
        let mut out = String::new();
        self.write(frame, &mut out);
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(..) => 4,
            _ => 5,
        }
    }

    fn write(&self, frame: &Frame, out: &mut String) {
        let child = |f: &Formula, parens: bool, out: &mut String| {
            if parens {
                out.push('(');
                f.write(frame, out);
                out.push(')');
            } else {
                f.write(frame, out);
            }
        };
        let prec = self.precedence();
        match self {
            Formula::True => out.push_str("true"),
            Formula::False => out.push_str("false"),
            Formula::Atom(p) => out.push_str(frame.name(*p)),
            Formula::Not(f) => {
                out.push('!');
                child(f, f.precedence() < prec, out);
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                let op = if matches!(self, Formula::And(..)) { " & " } else { " | " };
                child(a, a.precedence() < prec, out);
                out.push_str(op);
                child(b, b.precedence() <= prec, out);
            }
            Formula::Implies(a, b) => {
                child(a, a.precedence() <= prec, out);
                out.push_str(" -> ");
                child(b, b.precedence() < prec, out);
            }
        }
    }
}

fn same_frame(result: Result<Event, LogicError>) -> Event {
    result.expect("sub-formula models share the frame")
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Not,
    And,
    Or,
    Arrow,
    Open,
    Close,
    Ident(String),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, LogicError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let token = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'!' => Token::Not,
            b'&' => Token::And,
            b'|' => Token::Or,
            b'(' => Token::Open,
            b')' => Token::Close,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Token::Arrow
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i + 1 < bytes.len()
                    && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_')
                {
                    i += 1;
                }
                Token::Ident(text[start..=i].to_string())
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(LogicError::Syntax {
                    pos: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        i += 1;
        tokens.push((start, token));
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    next: usize,
    end: usize,
    frame: &'a Frame,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.next).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.next).map_or(self.end, |(p, _)| *p)
    }

    fn eat(&mut self, token: &Token) -> bool {
        if self.peek() == Some(token) {
            self.next += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, message: impl Into<String>) -> LogicError {
        LogicError::Syntax {
            pos: self.pos(),
            message: message.into(),
        }
    }

    fn implication(&mut self) -> Result<Formula, LogicError> {
        let lhs = self.disjunction()?;
        if self.eat(&Token::Arrow) {
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, LogicError> {
        let mut f = self.conjunction()?;
        while self.eat(&Token::Or) {
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula, LogicError> {
        let mut f = self.negation()?;
        while self.eat(&Token::And) {
            f = Formula::and(f, self.negation()?);
        }
        Ok(f)
    }

    fn negation(&mut self) -> Result<Formula, LogicError> {
        if self.eat(&Token::Not) {
            return Ok(Formula::not(self.negation()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, LogicError> {
        match self.peek().cloned() {
            Some(Token::Ident(name)) => {
                self.next += 1;
                match name.as_str() {
                    "true" => Ok(Formula::True),
                    "false" => Ok(Formula::False),
                    _ => self
                        .frame
                        .index_of(&name)
                        .map(Formula::Atom)
                        .ok_or(LogicError::UnknownPrimitive(name)),
                }
            }
            Some(Token::Open) => {
                self.next += 1;
                let f = self.implication()?;
                if !self.eat(&Token::Close) {
                    return Err(self.error("expected `)`"));
                }
                Ok(f)
            }
            Some(_) => Err(self.error("expected a primitive, constant or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

/// Parses `text` against `frame`.
///
/// Precedence from tightest: `!`, `&`, `|`, `->`. `&` and `|` associate to
/// the left, `->` to the right.
pub fn parse_formula(text: &str, frame: &Frame) -> Result<Formula, LogicError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        next: 0,
        end: text.len(),
        frame,
    };
    let formula = parser.implication()?;
    if parser.next != parser.tokens.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(formula)
}

/// Worlds satisfying `formula` in `frame`.
pub fn models(formula: &Formula, frame: &Frame) -> Event {
    formula.models(frame)
}
