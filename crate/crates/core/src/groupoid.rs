//! Weighted partial injections on a countable basis.
//!
//! Three representations share one type: finite tables, finite sums of
//! address clauses `w · p q*` over the isometries `R: n ↦ 2n` and
//! `L: n ↦ 2n+1`, and computable rules (β codec, exponential, shift).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{cr, tau_num, DenseOperator, Label, C64};

/// Orbit budget per seed.
pub const DEFAULT_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Index {
    pub value: u64,
    pub slot: u64,
}

impl Index {
    pub fn new(value: u64) -> Self {
        Self { value, slot: 0 }
    }

    pub fn with_slot(value: u64, slot: u64) -> Self {
        Self { value, slot }
    }

    /// Dense label: `slot << 32 | value`.
    pub fn label(&self) -> Label {
        (self.slot << 32) | self.value
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.slot == 0 {
            write!(f, "{}", self.value)
        } else {
            write!(f, "{}@{}", self.value, self.slot)
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GroupoidError {
    #[error("operators overlap at index {0}")]
    Disjointness(Index),
    #[error("index {0} escapes the window")]
    Window(Index),
    #[error("weight of modulus {0} is not unimodular")]
    Weight(f64),
    #[error("two sources map to target {0}")]
    NotInjective(Index),
    #[error("operation unsupported for this representation: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    R,
    L,
}

/// Word over `{R, L}`; the leftmost letter is applied last, so the letter
/// `x1` of `x1 x2 … xk` decides the lowest bit of the image.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|ch| match ch {
                'R' | 'r' => Some(Letter::R),
                'L' | 'l' => Some(Letter::L),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&self, l: Letter) -> Word {
        let mut v = self.0.clone();
        v.push(l);
        Word(v)
    }

    /// `self = prefix · rest`; returns `rest`.
    pub fn strip_prefix(&self, prefix: &Word) -> Option<Word> {
        self.0.strip_prefix(prefix.0.as_slice()).map(|r| Word(r.to_vec()))
    }

    pub fn comparable(&self, other: &Word) -> bool {
        self.0.starts_with(&other.0) || other.0.starts_with(&self.0)
    }

    fn bits(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .map(|(i, l)| if *l == Letter::L { 1u64 << i } else { 0 })
            .sum()
    }

    pub fn apply(&self, n: u64) -> Option<u64> {
        let k = self.len() as u32;
        if k >= 64 || n.checked_shl(k)?.checked_shr(k)? != n {
            return None;
        }
        Some((n << k) | self.bits())
    }

    /// Inverse on the range of the word.
    pub fn unapply(&self, n: u64) -> Option<u64> {
        let k = self.len() as u32;
        if k >= 64 {
            return None;
        }
        let mask = (1u64 << k) - 1;
        if n & mask == self.bits() {
            Some(n >> k)
        } else {
            None
        }
    }

    /// All words of a given length, in lexicographic order.
    pub fn all_of_length(k: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|w| [w.push(Letter::R), w.push(Letter::L)])
                .collect();
        }
        out
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        for l in &self.0 {
            write!(f, "{}", if *l == Letter::R { 'R' } else { 'L' })?;
        }
        Ok(())
    }
}

/// `weight · target · source*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub target: Word,
    pub source: Word,
    pub weight: C64,
}

impl Clause {
    pub fn new(target: Word, source: Word) -> Self {
        Self { target, source, weight: cr(1.0) }
    }

    pub fn adjoint(&self) -> Clause {
        Clause { target: self.source.clone(), source: self.target.clone(), weight: self.weight.conj() }
    }

    /// Product `self · other`.
    pub fn then_after(&self, other: &Clause) -> Option<Clause> {
        let weight = self.weight * other.weight;
        if let Some(t) = other.target.strip_prefix(&self.source) {
            Some(Clause { target: self.target.concat(&t), source: other.source.clone(), weight })
        } else {
            self.source.strip_prefix(&other.target).map(|t| Clause {
                target: self.target.clone(),
                source: other.source.concat(&t),
                weight,
            })
        }
    }

    fn apply(&self, n: u64) -> Option<(u64, C64)> {
        let m = self.source.unapply(n)?;
        Some((self.target.apply(m)?, self.weight))
    }

    /// A point `n` with `self(n) = n`, if any.
    fn fixed_point(&self) -> Option<u64> {
        let (a, b) = (self.target.len() as u32, self.source.len() as u32);
        let (x, y) = (self.target.bits() as i128, self.source.bits() as i128);
        // m·2^a + x = m·2^b + y
        let denom = (1i128 << a) - (1i128 << b);
        if denom == 0 {
            return if x == y { self.source.apply(0) } else { None };
        }
        let num = y - x;
        if num % denom != 0 {
            return None;
        }
        let m = num / denom;
        if m < 0 || m > u32::MAX as i128 {
            return None;
        }
        self.source.apply(m as u64)
    }
}

/// Computable injections with computable partial inverses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Rule {
    /// `δ_(n,m) ↦ δ_β(n,m)`, from value/slot pairs to single indices.
    UBeta,
    /// Internalised tensor `u ⊗̄ v = u_β (u ⊗ v) u_β*`.
    Internal(Box<PartialInjectionOp>, Box<PartialInjectionOp>),
    /// `β(β(p,q),r) ↦ β(p,β(q,r))`.
    Gamma,
    /// `n ↦ n + 1`.
    Shift,
    /// Product, rightmost factor applied first.
    Compose(Vec<PartialInjectionOp>),
    /// Sum of operators with disjoint domains and ranges.
    Sum(Vec<PartialInjectionOp>),
    Adjoint(Box<PartialInjectionOp>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PartialInjectionOp {
    Table(BTreeMap<Index, (Index, C64)>),
    Clauses(Vec<Clause>),
    Rule(Rule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Table,
    Rule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Nilpotency {
    Nilpotent(usize),
    Cyclic(Index),
    Exceeded,
}

impl Nilpotency {
    pub fn is_nilpotent(&self) -> bool {
        matches!(self, Nilpotency::Nilpotent(_))
    }
}

fn unimodular(w: C64) -> Result<(), GroupoidError> {
    if (w.norm() - 1.0).abs() > tau_num() {
        Err(GroupoidError::Weight(w.norm()))
    } else {
        Ok(())
    }
}

impl PartialInjectionOp {
    pub fn zero() -> Self {
        Self::Table(BTreeMap::new())
    }

    pub fn identity() -> Self {
        Self::Clauses(vec![Clause::new(Word::empty(), Word::empty())])
    }

    /// Table from `(source, target, weight)` triples.
    pub fn table(entries: impl IntoIterator<Item = (Index, Index, C64)>) -> Result<Self, GroupoidError> {
        let mut map = BTreeMap::new();
        let mut targets = BTreeSet::new();
        for (s, t, w) in entries {
            unimodular(w)?;
            if map.insert(s, (t, w)).is_some() {
                return Err(GroupoidError::Disjointness(s));
            }
            if !targets.insert(t) {
                return Err(GroupoidError::NotInjective(t));
            }
        }
        Ok(Self::Table(map))
    }

    /// Table with unit weights on plain indices.
    pub fn arrows(pairs: &[(u64, u64)]) -> Result<Self, GroupoidError> {
        Self::table(pairs.iter().map(|&(s, t)| (Index::new(s), Index::new(t), cr(1.0))))
    }

    pub fn projection(indices: impl IntoIterator<Item = Index>) -> Self {
        Self::Table(indices.into_iter().map(|i| (i, (i, cr(1.0)))).collect())
    }

    pub fn clauses(clauses: Vec<Clause>) -> Result<Self, GroupoidError> {
        for cl in &clauses {
            unimodular(cl.weight)?;
        }
        for (i, a) in clauses.iter().enumerate() {
            for b in &clauses[i + 1..] {
                if a.source.comparable(&b.source) {
                    let at = a.source.apply(0).unwrap_or(0).max(b.source.apply(0).unwrap_or(0));
                    return Err(GroupoidError::Disjointness(Index::new(at)));
                }
                if a.target.comparable(&b.target) {
                    let at = a.target.apply(0).unwrap_or(0).max(b.target.apply(0).unwrap_or(0));
                    return Err(GroupoidError::NotInjective(Index::new(at)));
                }
            }
        }
        Ok(Self::Clauses(clauses))
    }

    /// `p q*` for address words.
    pub fn link(target: &Word, source: &Word) -> Self {
        Self::Clauses(vec![Clause::new(target.clone(), source.clone())])
    }

    pub fn kind(&self) -> Kind {
        match self {
            Self::Table(_) => Kind::Table,
            _ => Kind::Rule,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Table(t) => t.is_empty(),
            Self::Clauses(c) => c.is_empty(),
            Self::Rule(Rule::Sum(v)) => v.iter().all(|u| u.is_zero()),
            Self::Rule(Rule::Compose(v)) => v.iter().any(|u| u.is_zero()),
            _ => false,
        }
    }

    pub fn apply(&self, i: Index) -> Option<(Index, C64)> {
        match self {
            Self::Table(t) => t.get(&i).copied(),
            Self::Clauses(cs) => cs.iter().find_map(|cl| {
                cl.apply(i.value).map(|(v, w)| (Index::with_slot(v, i.slot), w))
            }),
            Self::Rule(r) => apply_rule(r, i),
        }
    }

    pub fn apply_adjoint(&self, i: Index) -> Option<(Index, C64)> {
        match self {
            Self::Table(t) => t.iter().find(|(_, (tgt, _))| *tgt == i).map(|(s, (_, w))| (*s, w.conj())),
            Self::Clauses(cs) => cs.iter().find_map(|cl| {
                cl.adjoint().apply(i.value).map(|(v, w)| (Index::with_slot(v, i.slot), w))
            }),
            Self::Rule(r) => apply_rule(&adjoint_rule(r), i),
        }
    }

    pub fn adjoint(&self) -> Self {
        match self {
            Self::Table(t) => Self::Table(t.iter().map(|(s, (tg, w))| (*tg, (*s, w.conj()))).collect()),
            Self::Clauses(cs) => Self::Clauses(cs.iter().map(Clause::adjoint).collect()),
            Self::Rule(r) => Self::Rule(adjoint_rule(r)),
        }
    }

    /// Finite domain of a table; `None` for rule operators.
    pub fn domain(&self) -> Option<Vec<Index>> {
        match self {
            Self::Table(t) => Some(t.keys().copied().collect()),
            Self::Clauses(c) if c.is_empty() => Some(Vec::new()),
            _ => None,
        }
    }

    pub fn support_size(&self) -> Option<usize> {
        match self {
            Self::Table(t) => Some(t.len()),
            Self::Clauses(c) if c.is_empty() => Some(0),
            _ => None,
        }
    }

    /// Clause count for address operators.
    pub fn clause_count(&self) -> Option<usize> {
        match self {
            Self::Clauses(c) => Some(c.len()),
            _ => None,
        }
    }

    /// Range projection `u u*`, restricted to tables.
    pub fn range_projection(&self) -> Option<Self> {
        match self {
            Self::Table(t) => Some(Self::projection(t.values().map(|(tg, _)| *tg))),
            _ => None,
        }
    }
}

fn adjoint_rule(r: &Rule) -> Rule {
    match r {
        Rule::Compose(v) => Rule::Compose(v.iter().rev().map(|u| u.adjoint()).collect()),
        Rule::Sum(v) => Rule::Sum(v.iter().map(|u| u.adjoint()).collect()),
        Rule::Adjoint(u) => match u.as_ref() {
            PartialInjectionOp::Rule(inner) => inner.clone(),
            other => Rule::Compose(vec![other.clone()]),
        },
        Rule::Internal(u, v) => Rule::Internal(Box::new(u.adjoint()), Box::new(v.adjoint())),
        other => Rule::Adjoint(Box::new(PartialInjectionOp::Rule(other.clone()))),
    }
}

fn apply_rule(r: &Rule, i: Index) -> Option<(Index, C64)> {
    match r {
        Rule::UBeta => {
            let k = beta_encode_checked(u32::try_from(i.value).ok()?, i.slot)?;
            Some((Index::new(k), cr(1.0)))
        }
        Rule::Internal(u, v) => {
            let (n, m) = beta_decode(i.value);
            let (n2, w1) = u.apply(Index::new(n as u64))?;
            let (m2, w2) = v.apply(Index::new(m))?;
            let k = beta_encode_checked(u32::try_from(n2.value).ok()?, m2.value)?;
            Some((Index::with_slot(k, i.slot), w1 * w2))
        }
        Rule::Gamma => {
            let (a, r) = beta_decode(i.value);
            let (p, q) = beta_decode(a as u64);
            let inner = beta_encode_checked(u32::try_from(q).ok()?, r)?;
            let k = beta_encode_checked(p, inner)?;
            Some((Index::with_slot(k, i.slot), cr(1.0)))
        }
        Rule::Shift => Some((Index::with_slot(i.value.checked_add(1)?, i.slot), cr(1.0))),
        Rule::Compose(v) => {
            let mut cur = (i, cr(1.0));
            for u in v.iter().rev() {
                let (j, w) = u.apply(cur.0)?;
                cur = (j, cur.1 * w);
            }
            Some(cur)
        }
        Rule::Sum(v) => v.iter().find_map(|u| u.apply(i)),
        Rule::Adjoint(u) => match u.as_ref() {
            PartialInjectionOp::Rule(Rule::UBeta) => {
                let (n, m) = beta_decode(i.value);
                Some((Index::with_slot(n as u64, m), cr(1.0)))
            }
            PartialInjectionOp::Rule(Rule::Gamma) => {
                let (p, b) = beta_decode(i.value);
                let (q, r) = beta_decode(b);
                let a = beta_encode_checked(p, q as u64)?;
                let k = beta_encode_checked(u32::try_from(a).ok()?, r)?;
                Some((Index::with_slot(k, i.slot), cr(1.0)))
            }
            PartialInjectionOp::Rule(Rule::Shift) => {
                Some((Index::with_slot(i.value.checked_sub(1)?, i.slot), cr(1.0)))
            }
            other => other.apply_adjoint(i),
        },
    }
}

/// `R: n ↦ 2n`.
pub fn r_isometry() -> PartialInjectionOp {
    PartialInjectionOp::link(&Word(vec![Letter::R]), &Word::empty())
}

/// `L: n ↦ 2n + 1`.
pub fn l_isometry() -> PartialInjectionOp {
    PartialInjectionOp::link(&Word(vec![Letter::L]), &Word::empty())
}

/// `L R*`, the partial isometry from the even copy to the odd copy.
pub fn tta() -> PartialInjectionOp {
    PartialInjectionOp::link(&Word(vec![Letter::L]), &Word(vec![Letter::R]))
}

/// `τ(p1, p2) = p2 p1*`.
pub fn tau(p1: &Word, p2: &Word) -> PartialInjectionOp {
    PartialInjectionOp::link(p2, p1)
}

/// Relational composition `u ∘ v` (apply `v` first).
pub fn compose(u: &PartialInjectionOp, v: &PartialInjectionOp) -> PartialInjectionOp {
    use PartialInjectionOp::*;
    match (u, v) {
        (_, Table(tv)) => {
            let mut out = BTreeMap::new();
            for (s, (t, w)) in tv {
                if let Some((t2, w2)) = u.apply(*t) {
                    out.insert(*s, (t2, w * w2));
                }
            }
            Table(out)
        }
        (Table(tu), _) => {
            let mut out = BTreeMap::new();
            for (s, (t, w)) in tu {
                if let Some((s0, w0)) = v.apply_adjoint(*s) {
                    out.insert(s0, (*t, w * w0.conj()));
                }
            }
            Table(out)
        }
        (Clauses(cu), Clauses(cv)) => {
            let mut out = Vec::new();
            for a in cu {
                for b in cv {
                    if let Some(cl) = a.then_after(b) {
                        out.push(cl);
                    }
                }
            }
            Clauses(out)
        }
        _ => Rule(crate::groupoid::Rule::Compose(vec![u.clone(), v.clone()])),
    }
}

/// Union of graphs for operators with disjoint domains and ranges.
pub fn sum_disjoint(u: &PartialInjectionOp, v: &PartialInjectionOp) -> Result<PartialInjectionOp, GroupoidError> {
    use PartialInjectionOp::*;
    if u.is_zero() {
        return Ok(v.clone());
    }
    if v.is_zero() {
        return Ok(u.clone());
    }
    match (u, v) {
        (Table(a), Table(b)) => {
            let mut map = a.clone();
            let targets: BTreeSet<Index> = a.values().map(|(t, _)| *t).collect();
            for (s, (t, w)) in b {
                if map.contains_key(s) {
                    return Err(GroupoidError::Disjointness(*s));
                }
                if targets.contains(t) {
                    return Err(GroupoidError::Disjointness(*t));
                }
                map.insert(*s, (*t, *w));
            }
            Ok(Table(map))
        }
        (Clauses(a), Clauses(b)) => {
            let mut all = a.clone();
            all.extend(b.iter().cloned());
            PartialInjectionOp::clauses(all).map_err(|e| match e {
                GroupoidError::NotInjective(i) => GroupoidError::Disjointness(i),
                e => e,
            })
        }
        (Table(t), other) | (other, Table(t)) => {
            for (s, (tg, _)) in t {
                if other.apply(*s).is_some() {
                    return Err(GroupoidError::Disjointness(*s));
                }
                if other.apply_adjoint(*tg).is_some() {
                    return Err(GroupoidError::Disjointness(*tg));
                }
            }
            Ok(Rule(crate::groupoid::Rule::Sum(vec![u.clone(), v.clone()])))
        }
        _ => Ok(Rule(crate::groupoid::Rule::Sum(vec![u.clone(), v.clone()]))),
    }
}

/// Conjugation by an address word: `w u w*`.
pub fn conjugate(w: &Word, u: &PartialInjectionOp) -> PartialInjectionOp {
    use PartialInjectionOp::*;
    match u {
        Clauses(cs) => Clauses(
            cs.iter()
                .map(|cl| Clause { target: w.concat(&cl.target), source: w.concat(&cl.source), weight: cl.weight })
                .collect(),
        ),
        Table(t) => Table(
            t.iter()
                .filter_map(|(s, (tg, wt))| {
                    Some((
                        Index::with_slot(w.apply(s.value)?, s.slot),
                        (Index::with_slot(w.apply(tg.value)?, tg.slot), *wt),
                    ))
                })
                .collect(),
        ),
        Rule(_) => {
            let wp = PartialInjectionOp::link(w, &Word::empty());
            Rule(crate::groupoid::Rule::Compose(vec![wp.clone(), u.clone(), wp.adjoint()]))
        }
    }
}

/// `u ⊙ v = R u R* + L v L*`.
pub fn odot(u: &PartialInjectionOp, v: &PartialInjectionOp) -> PartialInjectionOp {
    let a = conjugate(&Word(vec![Letter::R]), u);
    let b = conjugate(&Word(vec![Letter::L]), v);
    sum_disjoint(&a, &b).expect("R and L have disjoint ranges")
}

/// Canonical form of an address operator: every clause expanded to sources
/// of length `k`.
pub fn canonical(cs: &[Clause], k: usize) -> BTreeMap<Word, (Word, C64)> {
    let mut out = BTreeMap::new();
    for cl in cs {
        let extra = k.saturating_sub(cl.source.len());
        for y in Word::all_of_length(extra) {
            out.insert(cl.source.concat(&y), (cl.target.concat(&y), cl.weight));
        }
    }
    out
}

/// Exact equality for tables and address operators; `None` when either side
/// is a rule.
pub fn exact_eq(u: &PartialInjectionOp, v: &PartialInjectionOp) -> Option<bool> {
    use PartialInjectionOp::*;
    match (u, v) {
        (Table(a), Table(b)) => Some(a == b),
        (Clauses(a), Clauses(b)) => {
            let k = a.iter().chain(b).map(|c| c.source.len()).max().unwrap_or(0);
            Some(canonical(a, k) == canonical(b, k))
        }
        (Table(t), Clauses(c)) | (Clauses(c), Table(t)) => Some(t.is_empty() && c.is_empty()),
        _ => None,
    }
}

fn sample_eq(u: &PartialInjectionOp, v: &PartialInjectionOp, budget: usize) -> bool {
    (0..budget as u64).all(|n| {
        let i = Index::new(n);
        match (u.apply(i), v.apply(i)) {
            (None, None) => true,
            (Some((a, wa)), Some((b, wb))) => a == b && (wa - wb).norm() <= tau_num(),
            _ => false,
        }
    })
}

/// Equality, exact where decidable and otherwise sampled on `0..budget`.
pub fn op_eq(u: &PartialInjectionOp, v: &PartialInjectionOp, budget: usize) -> bool {
    exact_eq(u, v).unwrap_or_else(|| sample_eq(u, v, budget))
}

/// `u = u*` and `u³ = u`; exact on tables and address operators, sampled on
/// `0..budget` for rules.
pub fn is_partial_symmetry(u: &PartialInjectionOp, budget: usize) -> bool {
    let adj = u.adjoint();
    let cube = compose(u, &compose(u, u));
    match (exact_eq(u, &adj), exact_eq(u, &cube)) {
        (Some(a), Some(b)) => a && b,
        _ => sample_eq(u, &adj, budget) && sample_eq(u, &cube, budget),
    }
}

/// `u u* u = u`, checked the same way.
pub fn is_partial_isometry(u: &PartialInjectionOp, budget: usize) -> bool {
    let uuu = compose(u, &compose(&u.adjoint(), u));
    op_eq(u, &uuu, budget)
}

/// Orbit classification of `u`.
///
/// Tables default to their full domain as seeds; address operators without
/// seeds are classified symbolically through their powers; rules need seeds.
pub fn nilpotency(u: &PartialInjectionOp, seeds: Option<&[Index]>, budget: usize) -> Nilpotency {
    match (u, seeds) {
        (PartialInjectionOp::Clauses(cs), None) => clause_nilpotency(cs, budget),
        (_, Some(s)) => orbit_nilpotency(u, s, budget),
        (PartialInjectionOp::Table(t), None) => {
            let s: Vec<Index> = t.keys().copied().collect();
            orbit_nilpotency(u, &s, budget)
        }
        (PartialInjectionOp::Rule(_), None) => Nilpotency::Exceeded,
    }
}

fn orbit_nilpotency(u: &PartialInjectionOp, seeds: &[Index], budget: usize) -> Nilpotency {
    let mut degree = 1;
    for &s in seeds {
        let mut seen = BTreeSet::from([s]);
        let mut cur = s;
        let mut steps = 0;
        loop {
            match u.apply(cur) {
                None => break,
                Some((next, _)) => {
                    steps += 1;
                    if !seen.insert(next) {
                        return Nilpotency::Cyclic(next);
                    }
                    if steps >= budget {
                        return Nilpotency::Exceeded;
                    }
                    cur = next;
                }
            }
        }
        degree = degree.max(steps + 1);
    }
    Nilpotency::Nilpotent(degree)
}

fn clause_nilpotency(cs: &[Clause], budget: usize) -> Nilpotency {
    let mut power: Vec<Clause> = cs.to_vec();
    let mut k = 1;
    let mut work = 0;
    loop {
        if power.is_empty() {
            return Nilpotency::Nilpotent(k);
        }
        for cl in &power {
            if let Some(n) = cl.fixed_point() {
                return Nilpotency::Cyclic(Index::new(n));
            }
        }
        work += power.len();
        if work > budget {
            return Nilpotency::Exceeded;
        }
        let mut next = Vec::new();
        for a in cs {
            for b in &power {
                if let Some(cl) = a.then_after(b) {
                    next.push(cl);
                }
            }
        }
        power = next;
        k += 1;
    }
}

/// Matrix of `u` on a finite window, which `u` must map into itself.
pub fn to_dense(u: &PartialInjectionOp, window: &[Index]) -> Result<DenseOperator, GroupoidError> {
    let labels: Vec<Label> = window.iter().map(Index::label).collect();
    let mut m = DenseOperator::zeros(labels);
    let pos: BTreeMap<Index, usize> = window.iter().enumerate().map(|(k, i)| (*i, k)).collect();
    for (col, &i) in window.iter().enumerate() {
        if let Some((j, w)) = u.apply(i) {
            let row = *pos.get(&j).ok_or(GroupoidError::Window(j))?;
            m.set(row, col, w);
        }
    }
    Ok(m)
}

/// Partial injection read off a dense matrix whose columns each carry at most
/// one unimodular entry (within `tol`) and whose rows do too.
pub fn from_dense(m: &DenseOperator, tol: f64) -> Option<PartialInjectionOp> {
    let n = m.dim();
    let mut entries = Vec::new();
    let mut used_rows = BTreeSet::new();
    for col in 0..n {
        let mut hit = None;
        for row in 0..n {
            let z = m.get(row, col);
            if z.norm() <= tol {
                continue;
            }
            if (z.norm() - 1.0).abs() > tol || hit.is_some() {
                return None;
            }
            hit = Some((row, z));
        }
        if let Some((row, z)) = hit {
            if !used_rows.insert(row) {
                return None;
            }
            let w = snap_phase(z);
            entries.push((Index::new(col as u64), Index::new(row as u64), w));
        }
    }
    PartialInjectionOp::table(entries).ok()
}

/// Round a unimodular weight to an exact fourth root of unity when it is
/// within rounding distance of one.
pub fn snap_phase(z: C64) -> C64 {
    for w in [cr(1.0), cr(-1.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)] {
        if (z - w).norm() <= 1e-12 {
            return w;
        }
    }
    z / z.norm()
}

/// `β(n, m) = 2^n (2m + 1) − 1`, `None` on overflow.
pub fn beta_encode_checked(n: u32, m: u64) -> Option<u64> {
    let odd = m.checked_mul(2)?.checked_add(1)?;
    if n >= 64 {
        return None;
    }
    let v = odd.checked_shl(n)?;
    if v >> n != odd {
        return None;
    }
    Some(v - 1)
}

pub fn beta_encode(n: u32, m: u64) -> u64 {
    beta_encode_checked(n, m).expect("β code exceeds 64 bits")
}

pub fn beta_decode(k: u64) -> (u32, u64) {
    let v = k as u128 + 1;
    let n = v.trailing_zeros();
    let odd = v >> n;
    (n, ((odd - 1) / 2) as u64)
}

/// `u ⊗̄ v`.
pub fn internal_tensor(u: &PartialInjectionOp, v: &PartialInjectionOp) -> PartialInjectionOp {
    PartialInjectionOp::Rule(Rule::Internal(Box::new(u.clone()), Box::new(v.clone())))
}

/// `!u = 1 ⊗̄ u`.
pub fn bang(u: &PartialInjectionOp) -> PartialInjectionOp {
    internal_tensor(&PartialInjectionOp::identity(), u)
}

pub fn u_beta() -> PartialInjectionOp {
    PartialInjectionOp::Rule(Rule::UBeta)
}

pub fn gamma_assoc() -> PartialInjectionOp {
    PartialInjectionOp::Rule(Rule::Gamma)
}

pub fn shift() -> PartialInjectionOp {
    PartialInjectionOp::Rule(Rule::Shift)
}

/// Element `((x_n), p)` of `Z^(Z) ⋊ Z` with finitely supported `x`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct GroupElement {
    pub x: BTreeMap<i64, i64>,
    pub p: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    A,
    B,
}

impl GroupElement {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn gen_a() -> Self {
        Self { x: BTreeMap::from([(0, 1)]), p: 0 }
    }

    pub fn gen_b() -> Self {
        Self { x: BTreeMap::new(), p: 1 }
    }

    pub fn coeff(&self, n: i64) -> i64 {
        self.x.get(&n).copied().unwrap_or(0)
    }

    /// Coefficients `y` of the factorisation `self = b^p · ((y_n), 0)`,
    /// that is `y_n = x_(n − p)`.
    pub fn shift_first_coefficients(&self) -> BTreeMap<i64, i64> {
        self.x.iter().map(|(&n, &v)| (n + self.p, v)).collect()
    }
}

/// `((x_n), p) · ((y_n), q) = ((x_n + y_(n+p)), p + q)`.
pub fn g_compose(g: &GroupElement, h: &GroupElement) -> GroupElement {
    let mut x = g.x.clone();
    for (&m, &v) in &h.x {
        // y_(n+p) contributes at n = m − p
        let e = x.entry(m - g.p).or_insert(0);
        *e += v;
        if *e == 0 {
            x.remove(&(m - g.p));
        }
    }
    GroupElement { x, p: g.p + h.p }
}

/// Product of `gen^exp` blocks, composed left to right.
pub fn monoid_word_eval(word: &[(Generator, u32)]) -> GroupElement {
    let mut acc = GroupElement::identity();
    for &(g, e) in word {
        let gen = match g {
            Generator::A => GroupElement::gen_a(),
            Generator::B => GroupElement::gen_b(),
        };
        for _ in 0..e {
            acc = g_compose(&acc, &gen);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(n: u64) -> Index {
        Index::new(n)
    }

    #[test]
    fn r_and_l_rules() {
        assert_eq!(r_isometry().apply(idx(3)).unwrap().0, idx(6));
        assert_eq!(l_isometry().apply(idx(3)).unwrap().0, idx(7));
        let rr = compose(&r_isometry().adjoint(), &r_isometry());
        assert_eq!(exact_eq(&rr, &PartialInjectionOp::identity()), Some(true));
        let sum = sum_disjoint(
            &compose(&r_isometry(), &r_isometry().adjoint()),
            &compose(&l_isometry(), &l_isometry().adjoint()),
        )
        .unwrap();
        for n in 0..100 {
            assert_eq!(sum.apply(idx(n)).unwrap().0, idx(n));
        }
        assert_eq!(exact_eq(&sum, &PartialInjectionOp::identity()), Some(true));
    }

    #[test]
    fn composition_examples() {
        let rl = compose(&r_isometry(), &l_isometry());
        for n in 0..20 {
            assert_eq!(rl.apply(idx(n)).unwrap().0, idx(4 * n + 2));
        }
        let u = PartialInjectionOp::arrows(&[(0, 1), (2, 5)]).unwrap();
        let uu = compose(&u, &u.adjoint());
        assert_eq!(uu, PartialInjectionOp::projection([idx(1), idx(5)]));
        let a = PartialInjectionOp::arrows(&[(0, 1)]).unwrap();
        let b = PartialInjectionOp::arrows(&[(2, 3)]).unwrap();
        assert!(compose(&a, &b).is_zero());
    }

    #[test]
    fn disjoint_sums() {
        let u = PartialInjectionOp::arrows(&[(0, 1)]).unwrap();
        assert_eq!(sum_disjoint(&u, &PartialInjectionOp::zero()).unwrap(), u);
        let fax = sum_disjoint(&tta(), &tta().adjoint()).unwrap();
        assert!(is_partial_symmetry(&fax, 64));
        let v = PartialInjectionOp::arrows(&[(3, 1)]).unwrap();
        assert!(matches!(sum_disjoint(&u, &v), Err(GroupoidError::Disjointness(_))));
    }

    #[test]
    fn odot_examples() {
        assert!(odot(&PartialInjectionOp::zero(), &PartialInjectionOp::zero()).is_zero());
        let id0 = PartialInjectionOp::projection([idx(0)]);
        let d = odot(&id0, &id0);
        assert_eq!(d, PartialInjectionOp::projection([idx(0), idx(1)]));
    }

    #[test]
    fn symmetry_examples() {
        assert!(is_partial_symmetry(&PartialInjectionOp::projection([idx(2), idx(4)]), 16));
        assert!(!is_partial_symmetry(&tta(), 16));
    }

    #[test]
    fn nilpotency_examples() {
        let arrow = PartialInjectionOp::arrows(&[(0, 1)]).unwrap();
        assert_eq!(nilpotency(&arrow, None, DEFAULT_BUDGET), Nilpotency::Nilpotent(2));
        let swap = PartialInjectionOp::arrows(&[(0, 1), (1, 0)]).unwrap();
        assert_eq!(nilpotency(&swap, None, DEFAULT_BUDGET), Nilpotency::Cyclic(idx(0)));
        assert_eq!(nilpotency(&shift(), Some(&[idx(0)]), 10), Nilpotency::Exceeded);
        assert_eq!(nilpotency(&tta(), None, DEFAULT_BUDGET), Nilpotency::Nilpotent(2));
        let fax = sum_disjoint(&tta(), &tta().adjoint()).unwrap();
        assert!(matches!(nilpotency(&fax, None, DEFAULT_BUDGET), Nilpotency::Cyclic(_)));
    }

    #[test]
    fn beta_codec() {
        assert_eq!(beta_encode(0, 0), 0);
        assert_eq!(beta_encode(1, 2), 9);
        for n in 0..64u32 {
            for m in 0..64u64 {
                if let Some(k) = beta_encode_checked(n, m) {
                    assert_eq!(beta_decode(k), (n, m));
                }
            }
        }
        for k in 0..(1u64 << 16) {
            let (n, m) = beta_decode(k);
            assert_eq!(beta_encode(n, m), k);
        }
    }

    #[test]
    fn bang_examples() {
        let b = bang(&PartialInjectionOp::identity());
        for k in 0..200 {
            assert_eq!(b.apply(idx(k)).unwrap().0, idx(k));
        }
        let arrow = PartialInjectionOp::arrows(&[(0, 1)]).unwrap();
        let ba = bang(&arrow);
        for n in 0..=8u32 {
            let (t, _) = ba.apply(idx(beta_encode(n, 0))).unwrap();
            assert_eq!(t, idx(beta_encode(n, 1)));
        }
    }

    #[test]
    fn gamma_internalises_associativity() {
        let u = PartialInjectionOp::arrows(&[(0, 1), (1, 0), (2, 2)]).unwrap();
        let v = PartialInjectionOp::arrows(&[(0, 3), (3, 0)]).unwrap();
        let w = PartialInjectionOp::arrows(&[(1, 2), (2, 1)]).unwrap();
        let left = internal_tensor(&internal_tensor(&u, &v), &w);
        let right = internal_tensor(&u, &internal_tensor(&v, &w));
        let g = gamma_assoc();
        let lhs = compose(&g, &left);
        let rhs = compose(&right, &g);
        for p in 0..3u32 {
            for q in 0..4u64 {
                for r in 0..3u64 {
                    let k = beta_encode(u32::try_from(beta_encode(p, q)).unwrap(), r);
                    assert_eq!(lhs.apply(idx(k)), rhs.apply(idx(k)));
                }
            }
        }
        let gg = compose(&g.adjoint(), &g);
        for k in 0..500 {
            assert_eq!(gg.apply(idx(k)).map(|x| x.0), Some(idx(k)));
        }
    }

    #[test]
    fn group_examples() {
        let g = monoid_word_eval(&[(Generator::A, 3), (Generator::B, 2)]);
        assert_eq!(g_compose(&GroupElement::identity(), &g), g);
        assert_eq!(g_compose(&g, &GroupElement::identity()), g);
    }

    #[test]
    fn dense_windows() {
        let swap = PartialInjectionOp::arrows(&[(0, 1), (1, 0)]).unwrap();
        let m = to_dense(&swap, &[idx(0), idx(1)]).unwrap();
        assert_eq!(m, DenseOperator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap());
        let window: Vec<Index> = (0..8).map(idx).collect();
        assert_eq!(to_dense(&r_isometry(), &window), Err(GroupoidError::Window(idx(8))));
        let p = PartialInjectionOp::projection([idx(1)]);
        let d = to_dense(&p, &window[..3]).unwrap();
        assert_eq!(d, DenseOperator::from_real_rows(&[&[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]).unwrap());
    }
}
