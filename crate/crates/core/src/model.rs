//! Variables, literals, clauses, clause multisets, substitutions and
//! blocking-variable instances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Not;

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("clause {0} is tautological")]
    Tautology(Clause),
    #[error("variable {var} out of range 1..={nvars}")]
    VarOutOfRange { var: u32, nvars: u32 },
    #[error("blocking variable {0} declared twice")]
    DuplicateBlocking(u32),
    #[error("assignment covers {len} variables but the instance has {nvars}")]
    NotTotal { len: usize, nvars: u32 },
}

/// A propositional variable with a 1-based id.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    /// Panics on id 0.
    pub fn new(id: u32) -> Var {
        assert!(id >= 1, "variable ids start at 1");
        Var(id)
    }

    pub fn try_new(id: u32) -> Option<Var> {
        (id >= 1).then_some(Var(id))
    }

    pub fn from_index(index: usize) -> Var {
        Var(index as u32 + 1)
    }

    pub fn id(self) -> u32 {
        self.0
    }

    /// 0-based index.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn pos(self) -> Lit {
        Lit::new(self, true)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Lit {
        Lit::new(self, false)
    }

    pub fn lit(self, positive: bool) -> Lit {
        Lit::new(self, positive)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A literal, packed as `2 * index + negated`.
///
/// The packing makes the derived ordering ascending by variable, positive
/// before negative, which is the canonical clause order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        Lit(((var.0 - 1) << 1) | u32::from(!positive))
    }

    pub fn from_dimacs(value: i32) -> Option<Lit> {
        let var = Var::try_new(value.unsigned_abs())?;
        Some(Lit::new(var, value > 0))
    }

    pub fn to_dimacs(self) -> i32 {
        let id = self.var().0 as i32;
        if self.is_positive() {
            id
        } else {
            -id
        }
    }

    pub fn from_code(code: usize) -> Lit {
        Lit(code as u32)
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn var(self) -> Var {
        Var((self.0 >> 1) + 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub fn is_negative(self) -> bool {
        !self.is_positive()
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A normalized clause: literals sorted, duplicates removed.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    lits: Vec<Lit>,
}

impl Clause {
    pub fn new<I: IntoIterator<Item = Lit>>(lits: I) -> Clause {
        let mut lits: Vec<Lit> = lits.into_iter().collect();
        lits.sort_unstable();
        lits.dedup();
        Clause { lits }
    }

    /// The empty clause.
    pub fn empty() -> Clause {
        Clause { lits: Vec::new() }
    }

    pub fn unit(lit: Lit) -> Clause {
        Clause { lits: vec![lit] }
    }

    /// Builds a clause from DIMACS integers; `None` if any of them is 0.
    pub fn from_dimacs(values: &[i32]) -> Option<Clause> {
        values
            .iter()
            .map(|&v| Lit::from_dimacs(v))
            .collect::<Option<Vec<_>>>()
            .map(Clause::new)
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn as_unit(&self) -> Option<Lit> {
        match self.lits.as_slice() {
            [lit] => Some(*lit),
            _ => None,
        }
    }

    /// Complementary literals are adjacent in canonical order.
    pub fn is_tautology(&self) -> bool {
        self.lits.windows(2).any(|w| w[1] == !w[0])
    }

    pub fn contains(&self, lit: Lit) -> bool {
        self.lits.binary_search(&lit).is_ok()
    }

    pub fn contains_var(&self, var: Var) -> bool {
        self.contains(var.pos()) || self.contains(var.neg())
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        let mut last = None;
        self.lits.iter().filter_map(move |lit| {
            let v = lit.var();
            (last.replace(v) != Some(v)).then_some(v)
        })
    }

    pub fn max_var(&self) -> Option<Var> {
        self.lits.last().map(|l| l.var())
    }

    /// `self ∨ other`.
    pub fn or(&self, other: &Clause) -> Clause {
        Clause::new(self.lits.iter().chain(other.lits.iter()).copied())
    }

    pub fn with(&self, lit: Lit) -> Clause {
        Clause::new(self.lits.iter().copied().chain(std::iter::once(lit)))
    }

    pub fn without(&self, lit: Lit) -> Clause {
        Clause {
            lits: self.lits.iter().copied().filter(|&l| l != lit).collect(),
        }
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lits.is_empty() {
            return write!(f, "⊥");
        }
        write!(f, "(")?;
        for (i, lit) in self.lits.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{lit}")?;
        }
        write!(f, ")")
    }
}

/// DIMACS body including the terminating `0`.
impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for lit in &self.lits {
            write!(f, "{lit} ")?;
        }
        write!(f, "0")
    }
}

/// A multiset of clauses. Iteration follows first-insertion order.
#[derive(Clone, Default)]
pub struct Formula {
    clauses: IndexMap<Clause, usize>,
    total: usize,
}

impl Formula {
    pub fn new() -> Formula {
        Formula::default()
    }

    /// Adds one copy and returns the new multiplicity.
    pub fn add(&mut self, clause: Clause) -> usize {
        self.add_copies(clause, 1)
    }

    pub fn add_copies(&mut self, clause: Clause, copies: usize) -> usize {
        self.total += copies;
        let count = self.clauses.entry(clause).or_insert(0);
        *count += copies;
        *count
    }

    /// Removes one copy; false if the clause was absent.
    pub fn remove_one(&mut self, clause: &Clause) -> bool {
        match self.clauses.get_mut(clause) {
            None => false,
            Some(count) => {
                *count -= 1;
                if *count == 0 {
                    self.clauses.shift_remove(clause);
                }
                self.total -= 1;
                true
            }
        }
    }

    pub fn count(&self, clause: &Clause) -> usize {
        self.clauses.get(clause).copied().unwrap_or(0)
    }

    pub fn contains(&self, clause: &Clause) -> bool {
        self.clauses.contains_key(clause)
    }

    /// Number of clauses counted with multiplicity.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn distinct_len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Distinct clauses with their multiplicities.
    pub fn iter(&self) -> impl Iterator<Item = (&Clause, usize)> {
        self.clauses.iter().map(|(c, &n)| (c, n))
    }

    pub fn distinct(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.keys()
    }

    /// Every copy, grouped by clause.
    pub fn expanded(&self) -> impl Iterator<Item = &Clause> {
        self.clauses
            .iter()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.distinct().flat_map(|c| c.vars()).collect()
    }

    pub fn max_var(&self) -> Option<Var> {
        self.distinct().filter_map(Clause::max_var).max()
    }

    pub fn extend_from(&mut self, other: &Formula) {
        for (c, n) in other.iter() {
            self.add_copies(c.clone(), n);
        }
    }
}

impl FromIterator<Clause> for Formula {
    fn from_iter<I: IntoIterator<Item = Clause>>(iter: I) -> Formula {
        let mut f = Formula::new();
        for c in iter {
            f.add(c);
        }
        f
    }
}

/// Multiset equality; insertion order is ignored.
impl PartialEq for Formula {
    fn eq(&self, other: &Formula) -> bool {
        self.total == other.total
            && self.clauses.len() == other.clauses.len()
            && self.iter().all(|(c, n)| other.count(c) == n)
    }
}

impl Eq for Formula {}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.expanded()).finish()
    }
}

/// The image of a variable (or literal) under a substitution.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Image {
    False,
    True,
    Lit(Lit),
}

impl Image {
    pub fn constant(value: bool) -> Image {
        if value {
            Image::True
        } else {
            Image::False
        }
    }

    pub fn as_constant(self) -> Option<bool> {
        match self {
            Image::False => Some(false),
            Image::True => Some(true),
            Image::Lit(_) => None,
        }
    }

    pub fn negate(self) -> Image {
        match self {
            Image::False => Image::True,
            Image::True => Image::False,
            Image::Lit(l) => Image::Lit(!l),
        }
    }
}

impl Not for Image {
    type Output = Image;

    fn not(self) -> Image {
        self.negate()
    }
}

/// A substitution. Unlisted variables are fixed points; identity entries are
/// never stored.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Substitution {
    map: BTreeMap<Var, Image>,
}

impl Substitution {
    pub fn identity() -> Substitution {
        Substitution::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Var, Image)>>(pairs: I) -> Substitution {
        let mut s = Substitution::identity();
        for (v, img) in pairs {
            s.set(v, img);
        }
        s
    }

    /// An assignment making every literal in `lits` true.
    pub fn satisfying<I: IntoIterator<Item = Lit>>(lits: I) -> Substitution {
        Substitution::from_pairs(
            lits.into_iter()
                .map(|l| (l.var(), Image::constant(l.is_positive()))),
        )
    }

    pub fn set(&mut self, var: Var, image: Image) {
        if image == Image::Lit(var.pos()) {
            self.map.remove(&var);
        } else {
            self.map.insert(var, image);
        }
    }

    pub fn get(&self, var: Var) -> Image {
        self.map.get(&var).copied().unwrap_or(Image::Lit(var.pos()))
    }

    pub fn apply(&self, lit: Lit) -> Image {
        let img = self.get(lit.var());
        if lit.is_positive() {
            img
        } else {
            !img
        }
    }

    /// Non-identity entries in variable order.
    pub fn entries(&self) -> impl Iterator<Item = (Var, Image)> + '_ {
        self.map.iter().map(|(&v, &i)| (v, i))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    /// Every image is a constant (identity entries are never stored).
    pub fn is_assignment(&self) -> bool {
        self.map.values().all(|img| img.as_constant().is_some())
    }

    /// Variables not mapped to themselves.
    pub fn moved(&self) -> impl Iterator<Item = Var> + '_ {
        self.map.keys().copied()
    }

    /// Variables mentioned as keys or inside images.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut vars: BTreeSet<Var> = self.map.keys().copied().collect();
        for img in self.map.values() {
            if let Image::Lit(l) = img {
                vars.insert(l.var());
            }
        }
        vars
    }

    pub fn max_var(&self) -> Option<Var> {
        self.vars().last().copied()
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, img)) in self.entries().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match img {
                Image::False => write!(f, "{v}↦0")?,
                Image::True => write!(f, "{v}↦1")?,
                Image::Lit(l) => write!(f, "{v}↦{l}")?,
            }
        }
        write!(f, "}}")
    }
}

/// `(σ∘τ)(x) = σ(τ(x))`.
pub fn compose(sigma: &Substitution, tau: &Substitution) -> Substitution {
    let mut out = Substitution::identity();
    for v in sigma.moved().chain(tau.moved()) {
        let img = match tau.get(v) {
            Image::Lit(l) => sigma.apply(l),
            constant => constant,
        };
        out.set(v, img);
    }
    out
}

/// The assignment falsifying every literal of `clause`.
pub fn negation_of(clause: &Clause) -> Result<Substitution, ModelError> {
    if clause.is_tautology() {
        return Err(ModelError::Tautology(clause.clone()));
    }
    Ok(Substitution::satisfying(clause.lits().iter().map(|&l| !l)))
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Restricted {
    Satisfied,
    Clause(Clause),
}

pub fn restrict_clause(clause: &Clause, sigma: &Substitution) -> Restricted {
    let mut lits = Vec::with_capacity(clause.len());
    for &lit in clause.lits() {
        match sigma.apply(lit) {
            Image::True => return Restricted::Satisfied,
            Image::False => {}
            Image::Lit(l) => lits.push(l),
        }
    }
    let image = Clause::new(lits);
    if image.is_tautology() {
        Restricted::Satisfied
    } else {
        Restricted::Clause(image)
    }
}

pub fn restrict_formula(formula: &Formula, sigma: &Substitution) -> Formula {
    let mut out = Formula::new();
    for (c, n) in formula.iter() {
        if let Restricted::Clause(image) = restrict_clause(c, sigma) {
            out.add_copies(image, n);
        }
    }
    out
}

/// A total assignment over variables `1..=len`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn all_false(nvars: usize) -> Assignment {
        Assignment {
            values: vec![false; nvars],
        }
    }

    pub fn from_values(values: Vec<bool>) -> Assignment {
        Assignment { values }
    }

    /// Bit `i` of `bits` is the value of variable `i + 1`.
    pub fn from_bits(nvars: usize, bits: u64) -> Assignment {
        Assignment {
            values: (0..nvars).map(|i| bits >> i & 1 == 1).collect(),
        }
    }

    /// Parses a bit string such as `00100`.
    pub fn from_bitstring(s: &str) -> Option<Assignment> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Assignment::from_values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn value(&self, var: Var) -> bool {
        self.values[var.index()]
    }

    pub fn set(&mut self, var: Var, value: bool) {
        self.values[var.index()] = value;
    }

    pub fn lit_value(&self, lit: Lit) -> bool {
        self.value(lit.var()) == lit.is_positive()
    }

    pub fn satisfies_clause(&self, clause: &Clause) -> bool {
        clause.lits().iter().any(|&l| self.lit_value(l))
    }

    pub fn satisfies(&self, formula: &Formula) -> bool {
        formula.distinct().all(|c| self.satisfies_clause(c))
    }

    /// The literals made true, one per variable.
    pub fn lits(&self) -> impl Iterator<Item = Lit> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &b)| Var::from_index(i).lit(b))
    }

    /// The widest clause this assignment falsifies.
    pub fn blocking_clause(&self) -> Clause {
        Clause::new(self.lits().map(|l| !l))
    }

    pub fn to_substitution(&self) -> Substitution {
        Substitution::satisfying(self.lits())
    }

    pub fn hamming(&self, other: &Assignment) -> Option<usize> {
        (self.len() == other.len()).then(|| {
            self.values
                .iter()
                .zip(&other.values)
                .filter(|(a, b)| a != b)
                .count()
        })
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Bit string, variable 1 first.
impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.values {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// A MaxSAT instance encoded with blocking variables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Instance {
    hard: Formula,
    blocking: Vec<Var>,
    nvars: u32,
    is_blocking: Vec<bool>,
}

impl Instance {
    pub fn new(hard: Formula, blocking: Vec<Var>, nvars: u32) -> Result<Instance, ModelError> {
        let mut is_blocking = vec![false; nvars as usize];
        for &b in &blocking {
            if b.id() > nvars {
                return Err(ModelError::VarOutOfRange { var: b.id(), nvars });
            }
            if std::mem::replace(&mut is_blocking[b.index()], true) {
                return Err(ModelError::DuplicateBlocking(b.id()));
            }
        }
        if let Some(v) = hard.max_var() {
            if v.id() > nvars {
                return Err(ModelError::VarOutOfRange { var: v.id(), nvars });
            }
        }
        Ok(Instance {
            hard,
            blocking,
            nvars,
            is_blocking,
        })
    }

    pub fn hard(&self) -> &Formula {
        &self.hard
    }

    pub fn blocking(&self) -> &[Var] {
        &self.blocking
    }

    pub fn nvars(&self) -> u32 {
        self.nvars
    }

    pub fn is_blocking(&self, var: Var) -> bool {
        self.is_blocking.get(var.index()).copied().unwrap_or(false)
    }

    /// Same blocking variables, different hard part.
    pub fn with_hard(&self, hard: Formula) -> Result<Instance, ModelError> {
        Instance::new(hard, self.blocking.clone(), self.nvars)
    }
}

/// Number of blocking variables `alpha` sets true.
pub fn cost_of(alpha: &Assignment, inst: &Instance) -> Result<usize, ModelError> {
    if alpha.len() < inst.nvars() as usize {
        return Err(ModelError::NotTotal {
            len: alpha.len(),
            nvars: inst.nvars(),
        });
    }
    Ok(inst.blocking().iter().filter(|&&b| alpha.value(b)).count())
}
