//! Dialects, pseudo-traces, dialectal operators and the measurements built on
//! `ldet`.
//!
//! A dialectal operator on carrier `P` with dialect `⊕ M_(k_i)` is stored as
//! one dense block per dialect summand, acting on `P ⊗ ℂ^(k_i)`. Block rows
//! are labelled `dlabel(loc, a)` in location-major order.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::groupoid::{from_dense, nilpotency, Nilpotency, DEFAULT_BUDGET};
use crate::linalg::{tau_num, BlockWeight, DenseOperator, Label, LinalgError, UnitGate, C64};
use crate::projects::Project;

const DIALECT_BITS: u32 = 20;

/// Label of `(loc, a)` inside a dialect block.
pub fn dlabel(loc: Label, a: usize) -> Label {
    debug_assert!(a < 1 << DIALECT_BITS && loc < 1 << (64 - DIALECT_BITS));
    (loc << DIALECT_BITS) | a as u64
}

pub fn dlabel_split(l: Label) -> (Label, usize) {
    (l >> DIALECT_BITS, (l & ((1 << DIALECT_BITS) - 1)) as usize)
}

fn block_labels(carrier: &[Label], k: usize) -> Vec<Label> {
    carrier.iter().flat_map(|&loc| (0..k).map(move |a| dlabel(loc, a))).collect()
}

/// Element of `ℝ ∪ {∞}`, or an uncertified value.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Finite(f64),
    Infinite,
    Indeterminate(String),
}

impl Measure {
    pub fn zero() -> Self {
        Measure::Finite(0.0)
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Measure::Finite(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Measure::Infinite)
    }

    pub fn is_indeterminate(&self) -> bool {
        matches!(self, Measure::Indeterminate(_))
    }

    /// `∞` absorbs everything, including uncertified values.
    pub fn add(&self, other: &Measure) -> Measure {
        match (self, other) {
            (Measure::Infinite, _) | (_, Measure::Infinite) => Measure::Infinite,
            (Measure::Indeterminate(a), _) => Measure::Indeterminate(a.clone()),
            (_, Measure::Indeterminate(b)) => Measure::Indeterminate(b.clone()),
            (Measure::Finite(a), Measure::Finite(b)) => Measure::Finite(a + b),
        }
    }

    /// `λ · ∞ = ∞` for `λ ≠ 0` and `0 · ∞ = 0`.
    pub fn scale(&self, lambda: f64) -> Measure {
        match self {
            Measure::Finite(v) => Measure::Finite(lambda * v),
            Measure::Infinite if lambda == 0.0 => Measure::zero(),
            other => other.clone(),
        }
    }

    /// Distance between two measures; equal infinities are at distance 0.
    pub fn distance(&self, other: &Measure) -> f64 {
        match (self, other) {
            (Measure::Finite(a), Measure::Finite(b)) => (a - b).abs(),
            (Measure::Infinite, Measure::Infinite) => 0.0,
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Finite(v) => write!(f, "{v}"),
            Measure::Infinite => write!(f, "inf"),
            Measure::Indeterminate(n) => write!(f, "indeterminate ({n})"),
        }
    }
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Measure::Finite(v) => s.serialize_f64(*v),
            Measure::Infinite => s.serialize_str("inf"),
            Measure::Indeterminate(_) => s.serialize_str("indeterminate"),
        }
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Measure::Finite(v)),
            Raw::Tag(t) if t == "inf" => Ok(Measure::Infinite),
            Raw::Tag(t) if t == "indeterminate" => Ok(Measure::Indeterminate(String::new())),
            Raw::Tag(t) => Err(serde::de::Error::custom(format!("unknown measure tag {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dialect {
    pub blocks: Vec<usize>,
}

impl Dialect {
    pub fn new(blocks: Vec<usize>) -> Result<Self, LinalgError> {
        if blocks.is_empty() || blocks.contains(&0) {
            return Err(LinalgError::Invalid("dialect blocks must be non-empty and positive".into()));
        }
        Ok(Self { blocks })
    }

    /// The dialect `ℂ`.
    pub fn trivial() -> Self {
        Self { blocks: vec![1] }
    }

    pub fn matrix(k: usize) -> Self {
        Self { blocks: vec![k] }
    }

    pub fn total(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn is_factor(&self) -> bool {
        self.blocks.len() == 1
    }

    /// `self ⊗ other`, blocks ordered left-major.
    pub fn tensor(&self, other: &Dialect) -> Dialect {
        let blocks = self.blocks.iter().flat_map(|&k| other.blocks.iter().map(move |&l| k * l)).collect();
        Dialect { blocks }
    }

    pub fn direct_sum(&self, other: &Dialect) -> Dialect {
        Dialect { blocks: self.blocks.iter().chain(&other.blocks).copied().collect() }
    }
}

/// `⊕ λ_i tr_i` with normalized block traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoTrace {
    pub weights: Vec<f64>,
}

impl PseudoTrace {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    pub fn trivial() -> Self {
        Self { weights: vec![1.0] }
    }

    /// `α(1)`.
    pub fn unit_value(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_faithful(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    pub fn is_normalized(&self) -> bool {
        (self.unit_value() - 1.0).abs() <= tau_num()
    }

    pub fn tensor(&self, other: &PseudoTrace) -> PseudoTrace {
        let weights = self.weights.iter().flat_map(|&a| other.weights.iter().map(move |&b| a * b)).collect();
        PseudoTrace { weights }
    }

    /// `self ⊕ λ other`.
    pub fn direct_sum(&self, lambda: f64, other: &PseudoTrace) -> PseudoTrace {
        let mut weights = self.weights.clone();
        weights.extend(other.weights.iter().map(|w| lambda * w));
        PseudoTrace { weights }
    }

    pub fn scale(&self, lambda: f64) -> PseudoTrace {
        PseudoTrace { weights: self.weights.iter().map(|w| lambda * w).collect() }
    }
}

/// `Σ λ_i tr_i(M_i)` over dialect blocks `M_i` of size `k_i`.
pub fn pseudo_trace_eval(alpha: &PseudoTrace, dialect: &Dialect, m: &[DenseOperator]) -> Result<C64, LinalgError> {
    if alpha.weights.len() != dialect.blocks.len() || m.len() != dialect.blocks.len() {
        return Err(LinalgError::Invalid("pseudo-trace and dialect disagree on block count".into()));
    }
    let mut acc = C64::default();
    for ((w, &k), blk) in alpha.weights.iter().zip(&dialect.blocks).zip(m) {
        if blk.dim() != k {
            return Err(LinalgError::Invalid(format!("block of size {} in a dialect summand of size {k}", blk.dim())));
        }
        acc += blk.trace() * (w / k as f64);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialectalOperator {
    carrier: Vec<Label>,
    dialect: Dialect,
    trace: PseudoTrace,
    blocks: Vec<DenseOperator>,
}

impl DialectalOperator {
    /// Blocks are given in location-major order, `(loc, a) ↦ loc·k + a`.
    pub fn new(
        carrier: Vec<Label>,
        dialect: Dialect,
        trace: PseudoTrace,
        blocks: Vec<DenseOperator>,
    ) -> Result<Self, LinalgError> {
        if trace.weights.len() != dialect.blocks.len() || blocks.len() != dialect.blocks.len() {
            return Err(LinalgError::Invalid("dialect, pseudo-trace and blocks disagree".into()));
        }
        if carrier.iter().collect::<BTreeSet<_>>().len() != carrier.len() {
            return Err(LinalgError::Invalid("repeated carrier label".into()));
        }
        let n = carrier.len();
        let blocks = blocks
            .into_iter()
            .zip(&dialect.blocks)
            .map(|(b, &k)| {
                if b.dim() != n * k {
                    return Err(LinalgError::Invalid(format!(
                        "block of size {} for carrier {n} and dialect summand {k}",
                        b.dim()
                    )));
                }
                b.relabel(block_labels(&carrier, k))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { carrier, dialect, trace, blocks })
    }

    /// Operator with the trivial dialect `ℂ` and trace `1_ℂ`.
    pub fn plain(op: &DenseOperator) -> Self {
        let carrier = op.carrier().to_vec();
        let block = op.relabel(block_labels(&carrier, 1)).expect("same size");
        Self { carrier, dialect: Dialect::trivial(), trace: PseudoTrace::trivial(), blocks: vec![block] }
    }

    pub fn zero(carrier: Vec<Label>, dialect: Dialect, trace: PseudoTrace) -> Self {
        let blocks = dialect.blocks.iter().map(|&k| DenseOperator::zeros(block_labels(&carrier, k))).collect();
        Self { carrier, dialect, trace, blocks }
    }

    pub fn carrier(&self) -> &[Label] {
        &self.carrier
    }

    pub fn dialect(&self) -> &Dialect {
        &self.dialect
    }

    pub fn pseudo_trace(&self) -> &PseudoTrace {
        &self.trace
    }

    pub fn blocks(&self) -> &[DenseOperator] {
        &self.blocks
    }

    pub fn with_trace(&self, trace: PseudoTrace) -> Result<Self, LinalgError> {
        if trace.weights.len() != self.dialect.blocks.len() {
            return Err(LinalgError::Invalid("pseudo-trace does not match dialect".into()));
        }
        Ok(Self { trace, ..self.clone() })
    }

    /// Plain operator, for trivial dialects.
    pub fn as_plain(&self) -> Option<DenseOperator> {
        if self.dialect.blocks == [1] {
            Some(self.blocks[0].relabel(self.carrier.clone()).expect("same size"))
        } else {
            None
        }
    }

    /// Block-diagonal matrix over all dialect summands, positionally labelled.
    pub fn full(&self) -> DenseOperator {
        let mut acc = DenseOperator::zeros(vec![]);
        for b in &self.blocks {
            acc = acc.direct_sum(b).expect("labels are dropped below");
        }
        let n = acc.dim();
        acc.relabel((0..n as Label).collect()).expect("same size")
    }

    pub fn adjoint(&self) -> Self {
        Self { blocks: self.blocks.iter().map(DenseOperator::adjoint).collect(), ..self.clone() }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| b.is_hermitian(tol))
    }

    pub fn norm(&self) -> Result<f64, LinalgError> {
        self.blocks.iter().try_fold(0.0_f64, |m, b| Ok(m.max(b.operator_norm()?)))
    }

    pub fn is_exact_zero(&self) -> bool {
        self.blocks.iter().all(DenseOperator::is_exact_zero)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, LinalgError> {
        if self.dialect != other.dialect {
            return Err(LinalgError::Invalid("dialects differ".into()));
        }
        let mut m = 0.0_f64;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            m = m.max(a.max_abs_diff(b)?);
        }
        Ok(m)
    }

    /// Zero padding to a carrier containing the current one.
    pub fn embed(&self, carrier: &[Label]) -> Result<Self, LinalgError> {
        let blocks = self
            .blocks
            .iter()
            .zip(&self.dialect.blocks)
            .map(|(b, &k)| b.embed(&block_labels(carrier, k)))
            .collect::<Result<_, _>>()?;
        Ok(Self { carrier: carrier.to_vec(), blocks, ..self.clone() })
    }

    /// Compression to a sub-carrier.
    pub fn restrict(&self, carrier: &[Label]) -> Result<Self, LinalgError> {
        let blocks = self
            .blocks
            .iter()
            .zip(&self.dialect.blocks)
            .map(|(b, &k)| b.restrict(&block_labels(carrier, k)))
            .collect::<Result<_, _>>()?;
        Ok(Self { carrier: carrier.to_vec(), blocks, ..self.clone() })
    }

    /// Rename locations; the result carrier is `carrier` mapped in order.
    pub fn relocate(&self, map: &dyn Fn(Label) -> Label) -> Result<Self, LinalgError> {
        let carrier: Vec<Label> = self.carrier.iter().map(|&l| map(l)).collect();
        Self::new(carrier, self.dialect.clone(), self.trace.clone(), self.blocks.clone())
    }

    /// Reorder the carrier.
    pub fn align_to(&self, carrier: &[Label]) -> Result<Self, LinalgError> {
        let blocks = self
            .blocks
            .iter()
            .zip(&self.dialect.blocks)
            .map(|(b, &k)| b.align_to(&block_labels(carrier, k)))
            .collect::<Result<_, _>>()?;
        Ok(Self { carrier: carrier.to_vec(), blocks, ..self.clone() })
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dialect != other.dialect {
            return Err(LinalgError::Invalid("dialects differ".into()));
        }
        let other = other.align_to(&self.carrier)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.add(b)).collect::<Result<_, _>>()?;
        Ok(Self { blocks, ..self.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dialect != other.dialect {
            return Err(LinalgError::Invalid("dialects differ".into()));
        }
        let other = other.align_to(&self.carrier)?;
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.sub(b)).collect::<Result<_, _>>()?;
        Ok(Self { blocks, ..self.clone() })
    }

    /// Blockwise product; both operands share dialect and carrier.
    pub fn mul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dialect != other.dialect {
            return Err(LinalgError::Invalid("dialects differ".into()));
        }
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.mat_mul(b)).collect::<Result<_, _>>()?;
        Ok(Self { blocks, ..self.clone() })
    }

    /// `A ⊕ B` on a common carrier, with pseudo-trace `α ⊕ λβ`.
    pub fn direct_sum(&self, lambda: f64, other: &Self) -> Result<Self, LinalgError> {
        let other = other.align_to(&self.carrier)?;
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        Ok(Self {
            carrier: self.carrier.clone(),
            dialect: self.dialect.direct_sum(&other.dialect),
            trace: self.trace.direct_sum(lambda, &other.trace),
            blocks,
        })
    }

    /// `tr ⊗ α(A)` with the unnormalized carrier trace.
    pub fn trace_value(&self) -> C64 {
        self.blocks
            .iter()
            .zip(&self.dialect.blocks)
            .zip(&self.trace.weights)
            .map(|((b, &k), w)| b.trace() * (w / k as f64))
            .sum()
    }

    /// Dialect block of `A` between two locations, for summand `i`.
    pub fn local_block(&self, i: usize, row: Label, col: Label) -> Option<DenseOperator> {
        let k = self.dialect.blocks[i];
        let b = &self.blocks[i];
        let r = b.position(dlabel(row, 0))?;
        let c = b.position(dlabel(col, 0))?;
        let mut data = Vec::with_capacity(k * k);
        for a in 0..k {
            for bb in 0..k {
                data.push(b.get(r + a, c + bb));
            }
        }
        DenseOperator::positional(k, data).ok()
    }
}

/// `A^†_𝓑 = A ⊗ 1_𝓑`; the result has dialect `𝓐 ⊗ 𝓑` and pseudo-trace `α ⊗ β`.
pub fn dagger(a: &DialectalOperator, d: &Dialect, beta: &PseudoTrace) -> DialectalOperator {
    let n = a.carrier.len();
    let mut blocks = Vec::new();
    for (blk, &k) in a.blocks.iter().zip(&a.dialect.blocks) {
        for &l in &d.blocks {
            let dim = n * k * l;
            let mut data = vec![C64::default(); dim * dim];
            for x in 0..n * k {
                for y in 0..n * k {
                    let v = blk.get(x, y);
                    if v == C64::default() {
                        continue;
                    }
                    for b in 0..l {
                        data[(x * l + b) * dim + y * l + b] = v;
                    }
                }
            }
            blocks.push(DenseOperator::positional(dim, data).expect("square"));
        }
    }
    DialectalOperator::new(a.carrier.clone(), a.dialect.tensor(d), a.trace.tensor(beta), blocks)
        .expect("consistent shapes")
}

/// `B^‡_𝓐 = (Id ⊗ τ)(B ⊗ 1_𝓐)`; the result has dialect `𝓐 ⊗ 𝓑` and
/// pseudo-trace `α ⊗ β`, with `τ` swapping the dialect factors.
pub fn ddagger(b: &DialectalOperator, d: &Dialect, alpha: &PseudoTrace) -> DialectalOperator {
    let n = b.carrier.len();
    let mut blocks = Vec::new();
    for &k in &d.blocks {
        for (blk, &l) in b.blocks.iter().zip(&b.dialect.blocks) {
            let dim = n * k * l;
            let mut data = vec![C64::default(); dim * dim];
            for x in 0..n * l {
                let (lx, bx) = (x / l, x % l);
                for y in 0..n * l {
                    let v = blk.get(x, y);
                    if v == C64::default() {
                        continue;
                    }
                    let (ly, by) = (y / l, y % l);
                    for a in 0..k {
                        let r = (lx * k + a) * l + bx;
                        let c = (ly * k + a) * l + by;
                        data[r * dim + c] = v;
                    }
                }
            }
            blocks.push(DenseOperator::positional(dim, data).expect("square"));
        }
    }
    DialectalOperator::new(b.carrier.clone(), d.tensor(&b.dialect), alpha.tensor(&b.trace), blocks)
        .expect("consistent shapes")
}

/// Labels present in both carriers, in the order of the first.
pub fn shared_carrier(a: &[Label], b: &[Label]) -> Vec<Label> {
    let bs: BTreeSet<Label> = b.iter().copied().collect();
    a.iter().copied().filter(|l| bs.contains(l)).collect()
}

/// `A^† B^‡` compressed to the shared carrier. Only the shared part
/// contributes to traces of powers, so the measurements use this compression.
pub fn extended_product(a: &DialectalOperator, b: &DialectalOperator) -> Result<DialectalOperator, LinalgError> {
    let s = shared_carrier(&a.carrier, &b.carrier);
    let ad = dagger(&a.restrict(&s)?, &b.dialect, &b.trace);
    let bd = ddagger(&b.restrict(&s)?, &a.dialect, &a.trace);
    ad.mul(&bd)
}

/// `−log det(1 − M)` for one block, gated on the spectral radius of `M`.
/// Groupoid-shaped blocks are decided exactly through their orbits.
pub fn block_ldet(m: &DenseOperator) -> Measure {
    if m.dim() == 0 || m.is_exact_zero() {
        return Measure::zero();
    }
    if let Some(u) = from_dense(m, tau_num()) {
        match nilpotency(&u, None, DEFAULT_BUDGET) {
            Nilpotency::Nilpotent(_) => return Measure::zero(),
            Nilpotency::Cyclic(_) => return Measure::Infinite,
            Nilpotency::Exceeded => {}
        }
    }
    let report = m.spectral_radius(1e-12);
    match report.gate() {
        UnitGate::AtLeast => Measure::Infinite,
        UnitGate::Straddles => Measure::Indeterminate(format!(
            "spectral radius in [{:.3e}, {:.3e}]",
            report.lower, report.upper
        )),
        UnitGate::Below => {
            let det = m.one_minus().plain_det();
            if det.norm() == 0.0 {
                return Measure::Infinite;
            }
            let lg = det.ln();
            if lg.im.abs() > 1e-9 {
                return Measure::Indeterminate(format!("complex residue {:.3e}", lg.im));
            }
            Measure::Finite(-lg.re)
        }
    }
}

/// `ldet(1 − X) = Σ_k tr ⊗ α(X^k) / k`, computed through the determinant
/// of each dialect block when the spectral radius is certified below 1.
pub fn ldet(x: &DialectalOperator) -> Measure {
    let mut acc = Measure::zero();
    for ((b, &k), &w) in x.blocks.iter().zip(&x.dialect.blocks).zip(&x.trace.weights) {
        let v = block_ldet(b);
        if v.is_infinite() {
            return Measure::Infinite;
        }
        acc = acc.add(&v.scale(w / k as f64));
    }
    acc
}

/// Truncated series `Σ_(k≤terms) tr ⊗ α(X^k)/k` and its remainder bound
/// `Σ_b |w_b|/k_b · n_b · ρ^(K+1) / ((K+1)(1−ρ))`, with `ρ` the certified
/// upper bound. Returns `None` when `ρ ≥ 1`.
pub fn ldet_series(x: &DialectalOperator, terms: usize) -> Option<(f64, f64)> {
    let mut value = 0.0;
    let mut bound = 0.0;
    for ((b, &k), &w) in x.blocks.iter().zip(&x.dialect.blocks).zip(&x.trace.weights) {
        if b.dim() == 0 {
            continue;
        }
        let rho = b.spectral_radius(1e-12).upper;
        if rho >= 1.0 {
            return None;
        }
        let coef = w / k as f64;
        let mut p = b.clone();
        for j in 1..=terms {
            value += coef * p.trace().re / j as f64;
            p = p.mat_mul(b).expect("same carrier");
        }
        let kk = (terms + 1) as f64;
        bound += coef.abs() * b.dim() as f64 * rho.powf(kk) / (kk * (1.0 - rho));
    }
    Some((value, bound))
}

/// `⟦A, B⟧ = ldet(1 − A†B‡)`.
pub fn meas_mat(a: &DialectalOperator, b: &DialectalOperator) -> Result<Measure, LinalgError> {
    Ok(ldet(&extended_product(a, b)?))
}

/// `−log det_(tr⊗α⊗β)(1 − A†B‡)` with the Fuglede–Kadison determinant and
/// no spectral gate; a vanishing determinant gives `∞`.
pub fn meas_hyp(a: &DialectalOperator, b: &DialectalOperator) -> Result<Measure, LinalgError> {
    let x = extended_product(a, b)?;
    let n = x.carrier.len();
    if n == 0 {
        return Ok(Measure::zero());
    }
    let mut weights = Vec::new();
    let mut full = DenseOperator::zeros(vec![]);
    for ((blk, &k), &w) in x.blocks.iter().zip(&x.dialect.blocks).zip(&x.trace.weights) {
        // coefficient w/k on the unnormalized trace of a block of size n·k
        weights.push(BlockWeight { dim: n * k, weight: w * n as f64 });
        full = full.direct_sum(&blk.one_minus())?;
    }
    let d = full.fk_det(Some(&weights))?;
    if d == 0.0 {
        return Ok(Measure::Infinite);
    }
    Ok(Measure::Finite(-d.ln()))
}

/// `−log |det(1 − uv)|` for plain operators.
pub fn meas_hyp_plain(u: &DenseOperator, v: &DenseOperator) -> Result<Measure, LinalgError> {
    meas_hyp(&DialectalOperator::plain(u), &DialectalOperator::plain(v))
}

/// `ldet(1 − uv)` for plain operators.
pub fn meas_mat_plain(u: &DenseOperator, v: &DenseOperator) -> Result<Measure, LinalgError> {
    meas_mat(&DialectalOperator::plain(u), &DialectalOperator::plain(v))
}

/// `α(1)·b + β(1)·a + m`.
fn sca_with(a: &Project, b: &Project, m: Measure) -> Measure {
    let alpha1 = a.op.pseudo_trace().unit_value();
    let beta1 = b.op.pseudo_trace().unit_value();
    a.wager.scale(beta1).add(&b.wager.scale(alpha1)).add(&m)
}

pub fn sca_mat(a: &Project, b: &Project) -> Result<Measure, LinalgError> {
    let m = meas_mat(&a.op, &b.op)?;
    Ok(sca_with(a, b, m))
}

pub fn sca_hyp(a: &Project, b: &Project) -> Result<Measure, LinalgError> {
    let m = meas_hyp(&a.op, &b.op)?;
    Ok(sca_with(a, b, m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub orthogonal: bool,
    pub note: Option<String>,
}

/// `sca ∉ {0, ∞}`; uncertified values are not orthogonal, and values within
/// ten times the tolerance of 0 are flagged.
pub fn orthogonality(sca: &Measure) -> Verdict {
    let tau = tau_num();
    match sca {
        Measure::Infinite => Verdict { orthogonal: false, note: Some("infinite".into()) },
        Measure::Indeterminate(n) => Verdict { orthogonal: false, note: Some(format!("indeterminate: {n}")) },
        Measure::Finite(v) if v.abs() <= tau => Verdict { orthogonal: false, note: Some("zero".into()) },
        Measure::Finite(v) if v.abs() <= 10.0 * tau => {
            Verdict { orthogonal: true, note: Some(format!("suspiciously close to 0: {v:e}")) }
        }
        Measure::Finite(_) => Verdict { orthogonal: true, note: None },
    }
}

pub fn orthogonal_mat(a: &Project, b: &Project) -> bool {
    sca_mat(a, b).map(|s| orthogonality(&s).orthogonal).unwrap_or(false)
}

pub fn orthogonal_hyp(a: &Project, b: &Project) -> bool {
    sca_hyp(a, b).map(|s| orthogonality(&s).orthogonal).unwrap_or(false)
}

/// Dialect isomorphism: block permutation followed by a unitary per block.
/// New block `i` is `(1 ⊗ U_i) A_(perm[i]) (1 ⊗ U_i*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialectIso {
    pub perm: Vec<usize>,
    pub unitaries: Vec<DenseOperator>,
}

impl DialectIso {
    pub fn identity(d: &Dialect) -> Self {
        Self {
            perm: (0..d.blocks.len()).collect(),
            unitaries: d.blocks.iter().map(|&k| DenseOperator::identity((0..k as Label).collect())).collect(),
        }
    }
}

pub fn apply_variant(a: &DialectalOperator, phi: &DialectIso) -> Result<DialectalOperator, LinalgError> {
    let nb = a.dialect.blocks.len();
    let mut seen = vec![false; nb];
    if phi.perm.len() != nb || phi.unitaries.len() != nb {
        return Err(LinalgError::Invalid("isomorphism does not match the dialect".into()));
    }
    for &p in &phi.perm {
        if p >= nb || std::mem::replace(&mut seen[p], true) {
            return Err(LinalgError::Invalid("block map is not a permutation".into()));
        }
    }
    let n = a.carrier.len();
    let mut blocks = Vec::new();
    let mut dims = Vec::new();
    let mut weights = Vec::new();
    for (i, &p) in phi.perm.iter().enumerate() {
        let k = a.dialect.blocks[p];
        let u = &phi.unitaries[i];
        if u.dim() != k {
            return Err(LinalgError::Invalid("unitary size does not match block".into()));
        }
        let id = DenseOperator::identity((0..n as Label).collect());
        let big = id.tensor(&u.relabel((0..k as Label).collect())?)?;
        let big = big.relabel(block_labels(&a.carrier, k))?;
        let blk = big.mat_mul(&a.blocks[p])?.mat_mul(&big.adjoint())?;
        blocks.push(blk);
        dims.push(k);
        weights.push(a.trace.weights[p]);
    }
    DialectalOperator::new(a.carrier.clone(), Dialect::new(dims)?, PseudoTrace::new(weights), blocks)
}

/// `|sca(a, probe) − sca(a^φ, probe)|`.
pub fn variant_invariance_residual(a: &Project, phi: &DialectIso, probe: &Project) -> Result<f64, LinalgError> {
    let av = Project { op: apply_variant(&a.op, phi)?, ..a.clone() };
    Ok(sca_mat(a, probe)?.distance(&sca_mat(&av, probe)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cr;

    fn plain(rows: &[&[f64]]) -> DenseOperator {
        DenseOperator::from_real_rows(rows).unwrap()
    }

    #[test]
    fn pseudo_trace_examples() {
        let x = DenseOperator::positional(1, vec![cr(3.5)]).unwrap();
        let v = pseudo_trace_eval(&PseudoTrace::trivial(), &Dialect::trivial(), &[x]).unwrap();
        assert_eq!(v, cr(3.5));
        let one = DenseOperator::identity(vec![0]);
        let kappa = PseudoTrace::new(vec![0.5, 0.5]);
        let v = pseudo_trace_eval(&kappa, &Dialect::new(vec![1, 1]).unwrap(), &[one.clone(), one]).unwrap();
        assert_eq!(v, cr(1.0));
    }

    #[test]
    fn ldet_examples() {
        let z = DialectalOperator::plain(&plain(&[&[0.0]]));
        assert_eq!(ldet(&z), Measure::zero());
        let half = DialectalOperator::plain(&plain(&[&[0.5]]));
        let v = ldet(&half).value().unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-12);
        let nil = DialectalOperator::plain(&plain(&[&[0.0, 1.0], &[0.0, 0.0]]));
        assert_eq!(ldet(&nil), Measure::Finite(0.0));
        let swap = DialectalOperator::plain(&plain(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert_eq!(ldet(&swap), Measure::Infinite);
    }

    #[test]
    fn counterexample_measurements() {
        let u = plain(&[&[0.0, -1.0], &[-1.0, 0.0]]);
        let v = plain(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(meas_mat_plain(&u, &v).unwrap(), Measure::Infinite);
        let uv = u.mat_mul(&v).unwrap();
        assert!((uv.one_minus().plain_det() - cr(4.0)).norm() < 1e-12);
        let h = 0.5f64.sqrt();
        let u = plain(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        let v = plain(&[&[0.0, h, -h], &[h, 0.0, 0.0], &[-h, 0.0, 0.0]]);
        let m = meas_mat_plain(&u, &v).unwrap().value().unwrap();
        assert!((m + ((1.0 - h) * (1.0 - h)).ln()).abs() < 1e-10);
    }

    #[test]
    fn dagger_shapes() {
        let a = DialectalOperator::plain(&plain(&[&[0.0, 1.0], &[1.0, 0.0]]));
        let d = Dialect::new(vec![2, 1]).unwrap();
        let t = PseudoTrace::new(vec![0.3, 0.7]);
        let ad = dagger(&a, &d, &t);
        assert_eq!(ad.dialect().blocks, vec![2, 1]);
        assert_eq!(ad.pseudo_trace().weights, vec![0.3, 0.7]);
        let bd = ddagger(&a, &d, &t);
        assert_eq!(bd, ad);
    }

    #[test]
    fn measure_serialisation() {
        let v = vec![Measure::Finite(1.5), Measure::Infinite, Measure::Indeterminate("x".into())];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[1.5,"inf","indeterminate"]"#);
        let back: Vec<Measure> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[..2], v[..2]);
    }
}
