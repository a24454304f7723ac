//! Solutions of the feedback equation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::groupoid::{
    compose, from_dense, nilpotency, Clause, Index, Nilpotency, PartialInjectionOp, Word, DEFAULT_BUDGET,
};
use crate::linalg::{cr, tau_num, DenseOperator, Label, LinalgError, UnitGate};
use crate::measurement::{
    dagger, ddagger, dlabel, dlabel_split, meas_hyp_plain, meas_mat, shared_carrier, DialectalOperator,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("product is not nilpotent: orbit revisits {0}")]
    NotNilpotent(Index),
    #[error("nilpotency undecided within the orbit budget")]
    BudgetExceeded,
    #[error("1 - uv is singular")]
    FeedbackSingular,
    #[error("operands are not orthogonal: {0}")]
    NotOrthogonal(String),
    #[error("spectral certificate straddles 1: {0}")]
    Indeterminate(String),
    #[error("operand norm {0} exceeds 1")]
    Norm(f64),
    #[error("interface violation: {0}")]
    Interface(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceSplit {
    pub kept: Vec<Label>,
    pub cut: Vec<Label>,
}

impl InterfaceSplit {
    pub fn new(kept: Vec<Label>, cut: Vec<Label>) -> Result<Self, ExecError> {
        let k: BTreeSet<_> = kept.iter().collect();
        if cut.iter().any(|l| k.contains(l)) {
            return Err(ExecError::Interface("kept and cut overlap".into()));
        }
        Ok(Self { kept, cut })
    }

    pub fn full(&self) -> Vec<Label> {
        self.kept.iter().chain(&self.cut).copied().collect()
    }
}

/// Cylinders covering the complement of a finite union of cylinders.
pub fn complement_cylinders(words: &[Word]) -> Vec<Word> {
    fn go(prefix: Word, words: Vec<Word>, out: &mut Vec<Word>) {
        if words.is_empty() {
            out.push(prefix);
            return;
        }
        if words.iter().any(Word::is_empty) {
            return;
        }
        for l in [crate::groupoid::Letter::R, crate::groupoid::Letter::L] {
            let sub: Vec<Word> = words
                .iter()
                .filter(|w| w.0[0] == l)
                .map(|w| Word(w.0[1..].to_vec()))
                .collect();
            go(prefix.push(l), sub, out);
        }
    }
    let mut out = Vec::new();
    go(Word::empty(), words.to_vec(), &mut out);
    out
}

fn cylinder_projection(words: &[Word]) -> PartialInjectionOp {
    PartialInjectionOp::Clauses(words.iter().map(|w| Clause::new(w.clone(), w.clone())).collect())
}

/// `(1 − σ²)(Σ_k (uσ)^k u)(1 − σ²)` by alternating-path summation.
///
/// `cut_proj` is the projection `σ²` on the cut; the product `uσ` must be
/// nilpotent.
pub fn ex_goi1(
    u: &PartialInjectionOp,
    sigma: &PartialInjectionOp,
    cut_proj: &PartialInjectionOp,
) -> Result<PartialInjectionOp, ExecError> {
    let seeds = u.domain();
    match nilpotency(&compose(u, sigma), None, DEFAULT_BUDGET) {
        Nilpotency::Nilpotent(_) => {}
        Nilpotency::Cyclic(w) => return Err(ExecError::NotNilpotent(w)),
        Nilpotency::Exceeded => {
            if seeds.is_none() {
                return Err(ExecError::BudgetExceeded);
            }
        }
    }
    match (u, cut_proj) {
        (PartialInjectionOp::Clauses(_), PartialInjectionOp::Clauses(cp)) => {
            let words: Vec<Word> = cp.iter().map(|c| c.source.clone()).collect();
            let outside = cylinder_projection(&complement_cylinders(&words));
            let mut acc: Vec<Clause> = Vec::new();
            let mut term = u.clone();
            let us = compose(u, sigma);
            for _ in 0..DEFAULT_BUDGET {
                if term.is_zero() {
                    let out = PartialInjectionOp::Clauses(acc);
                    return Ok(out);
                }
                if let PartialInjectionOp::Clauses(cs) = compose(&outside, &compose(&term, &outside)) {
                    acc.extend(cs);
                }
                term = compose(&us, &term);
            }
            Err(ExecError::BudgetExceeded)
        }
        _ => {
            let seeds = seeds.ok_or_else(|| ExecError::Interface("path summation needs a finite domain".into()))?;
            let in_cut = |i: Index| cut_proj.apply(i).is_some();
            let mut out = Vec::new();
            for s in seeds.into_iter().filter(|s| !in_cut(*s)) {
                let (mut x, mut w) = match u.apply(s) {
                    Some(p) => p,
                    None => continue,
                };
                let mut steps = 0;
                let mut alive = true;
                while in_cut(x) {
                    steps += 1;
                    if steps > DEFAULT_BUDGET {
                        return Err(ExecError::BudgetExceeded);
                    }
                    match sigma.apply(x).and_then(|(y, w1)| u.apply(y).map(|(z, w2)| (z, w1 * w2))) {
                        Some((z, wz)) => {
                            x = z;
                            w *= wz;
                        }
                        None => {
                            alive = false;
                            break;
                        }
                    }
                }
                if alive {
                    out.push((s, x, w));
                }
            }
            PartialInjectionOp::table(out).map_err(|e| ExecError::Interface(e.to_string()))
        }
    }
}

fn projection_on(carrier: &[Label], keep: &BTreeSet<Label>, loc_of: impl Fn(Label) -> Label) -> DenseOperator {
    let mut p = DenseOperator::zeros(carrier.to_vec());
    for (i, &l) in carrier.iter().enumerate() {
        if keep.contains(&loc_of(l)) {
            p.set(i, i, cr(1.0));
        }
    }
    p
}

/// `(pA + q)(1 − BA)^(−1)(p + Bq)` restricted to `p + q`, where `A` and `B`
/// act on the full carrier, `p` is the part of the kept carrier covered by `A`
/// and `q` the rest. `resolvent` supplies `(1 − BA)^(−1) X`.
fn feedback_core(
    a: &DenseOperator,
    b: &DenseOperator,
    p: &DenseOperator,
    q: &DenseOperator,
    kept: &[Label],
    resolvent: &dyn Fn(&DenseOperator, &DenseOperator) -> Result<DenseOperator, ExecError>,
) -> Result<DenseOperator, ExecError> {
    let ba = b.mat_mul(a)?;
    let rhs = p.add(&b.mat_mul(q)?)?;
    let x = resolvent(&ba, &rhs)?;
    let left = p.mat_mul(a)?.add(q)?;
    Ok(left.mat_mul(&x)?.restrict(kept)?)
}

fn solve_resolvent(ba: &DenseOperator, rhs: &DenseOperator) -> Result<DenseOperator, ExecError> {
    ba.one_minus().solve(rhs).map_err(|e| match e {
        LinalgError::Singular => ExecError::FeedbackSingular,
        e => ExecError::Linalg(e),
    })
}

/// Dense solution of the feedback equation. `u` lives on
/// `kept_u ∪ cut`, `v` on `cut ∪ kept_v`; the result lives on `split.kept`.
pub fn feedback_dense(u: &DenseOperator, v: &DenseOperator, split: &InterfaceSplit) -> Result<DenseOperator, ExecError> {
    for m in [u, v] {
        let n = m.operator_norm()?;
        if n > 1.0 + tau_num() {
            return Err(ExecError::Norm(n));
        }
    }
    let full = split.full();
    let cut: BTreeSet<Label> = split.cut.iter().copied().collect();
    let ucar: BTreeSet<Label> = u.carrier().iter().copied().collect();
    let vcar: BTreeSet<Label> = v.carrier().iter().copied().collect();
    let p: BTreeSet<Label> = split.kept.iter().copied().filter(|l| ucar.contains(l)).collect();
    let q: BTreeSet<Label> = split.kept.iter().copied().filter(|l| !ucar.contains(l)).collect();
    if vcar.iter().any(|l| p.contains(l)) {
        return Err(ExecError::Interface("v reaches the kept part of u".into()));
    }
    if ucar.iter().chain(&vcar).any(|l| !cut.contains(l) && !p.contains(l) && !q.contains(l)) {
        return Err(ExecError::Interface("operand carrier outside the split".into()));
    }
    let a = u.embed(&full)?;
    let b = v.embed(&full)?;
    let pp = projection_on(&full, &p, |l| l);
    let qq = projection_on(&full, &q, |l| l);
    feedback_core(&a, &b, &pp, &qq, &split.kept, &solve_resolvent)
}

/// Truncated series `(p + p″v) Σ_(i<terms) (uv)^i (up + p″)`, the test oracle
/// for `feedback_dense`.
pub fn feedback_series(
    u: &DenseOperator,
    v: &DenseOperator,
    split: &InterfaceSplit,
    terms: usize,
) -> Result<DenseOperator, ExecError> {
    let full = split.full();
    let ucar: BTreeSet<Label> = u.carrier().iter().copied().collect();
    let p: BTreeSet<Label> = split.kept.iter().copied().filter(|l| ucar.contains(l)).collect();
    let q: BTreeSet<Label> = split.kept.iter().copied().filter(|l| !ucar.contains(l)).collect();
    let a = u.embed(&full)?;
    let b = v.embed(&full)?;
    let pp = projection_on(&full, &p, |l| l);
    let qq = projection_on(&full, &q, |l| l);
    let series = move |ba: &DenseOperator, rhs: &DenseOperator| -> Result<DenseOperator, ExecError> {
        let mut acc = rhs.clone();
        let mut term = rhs.clone();
        for _ in 1..terms {
            term = ba.mat_mul(&term)?;
            acc = acc.add(&term)?;
        }
        Ok(acc)
    };
    feedback_core(&a, &b, &pp, &qq, &split.kept, &series)
}

/// Union of two carriers, first operand's order then the rest, sorted.
fn sorted_union(a: &[Label], b: &[Label]) -> Vec<Label> {
    let s: BTreeSet<Label> = a.iter().chain(b).copied().collect();
    s.into_iter().collect()
}

/// `A ∎ B = (pA† + q)(1 − B‡A†)^(−1)(p + B‡q)` per dialect block, on the
/// symmetric difference of the carriers.
///
/// Blocks with unimodular partial-permutation shape are solved exactly by a
/// finite series once their product is found nilpotent.
pub fn plug_dialectal(a: &DialectalOperator, b: &DialectalOperator) -> Result<DialectalOperator, ExecError> {
    let ad = dagger(a, b.dialect(), b.pseudo_trace());
    let bd = ddagger(b, a.dialect(), a.pseudo_trace());
    let shared: BTreeSet<Label> = shared_carrier(a.carrier(), b.carrier()).into_iter().collect();
    let union = sorted_union(a.carrier(), b.carrier());
    let out: Vec<Label> = union.iter().copied().filter(|l| !shared.contains(l)).collect();
    let ad = ad.embed(&union)?;
    let bd = bd.embed(&union)?;
    if shared.is_empty() {
        return Ok(ad.add(&bd)?);
    }
    let acar: BTreeSet<Label> = a.carrier().iter().copied().collect();
    let p: BTreeSet<Label> = out.iter().copied().filter(|l| acar.contains(l)).collect();
    let q: BTreeSet<Label> = out.iter().copied().filter(|l| !acar.contains(l)).collect();
    let mut blocks = Vec::new();
    for (k, (ab, bb)) in ad.blocks().iter().zip(bd.blocks()).enumerate() {
        let dim = ad.dialect().blocks[k];
        let labels = ab.carrier().to_vec();
        let kept: Vec<Label> = out.iter().flat_map(|&l| (0..dim).map(move |x| dlabel(l, x))).collect();
        let loc = |l: Label| dlabel_split(l).0;
        let pp = projection_on(&labels, &p, loc);
        let qq = projection_on(&labels, &q, loc);
        let blk = plug_block(ab, bb, &pp, &qq, &kept)?;
        blocks.push(blk);
    }
    Ok(DialectalOperator::new(out, ad.dialect().clone(), ad.pseudo_trace().clone(), blocks)?)
}

fn plug_block(
    a: &DenseOperator,
    b: &DenseOperator,
    p: &DenseOperator,
    q: &DenseOperator,
    kept: &[Label],
) -> Result<DenseOperator, ExecError> {
    let positional = |m: &DenseOperator| m.relabel((0..m.dim() as Label).collect()).expect("same size");
    if let (Some(ua), Some(ub)) = (from_dense(&positional(a), tau_num()), from_dense(&positional(b), tau_num())) {
        match nilpotency(&compose(&ub, &ua), None, DEFAULT_BUDGET) {
            Nilpotency::Nilpotent(d) => {
                let series = move |ba: &DenseOperator, rhs: &DenseOperator| -> Result<DenseOperator, ExecError> {
                    let mut acc = rhs.clone();
                    let mut term = rhs.clone();
                    for _ in 1..d {
                        term = ba.mat_mul(&term)?;
                        acc = acc.add(&term)?;
                    }
                    Ok(acc)
                };
                return feedback_core(a, b, p, q, kept, &series);
            }
            Nilpotency::Cyclic(w) => {
                return Err(ExecError::NotOrthogonal(format!("cycle through position {}", w.value)))
            }
            Nilpotency::Exceeded => {}
        }
    }
    let ab = a.mat_mul(b)?;
    let rep = ab.spectral_radius(1e-12);
    match rep.gate() {
        UnitGate::Below => feedback_core(a, b, p, q, kept, &solve_resolvent),
        UnitGate::AtLeast => Err(ExecError::NotOrthogonal(format!("spectral radius ≥ {:.6}", rep.lower))),
        UnitGate::Straddles => Err(ExecError::Indeterminate(format!("[{:.3e}, {:.3e}]", rep.lower, rep.upper))),
    }
}

/// `|⟪u, v + w⟫ − ⟪u, v⟫ − ⟪u ∎ v, w⟫|` with `v` on the cut and `w` on the
/// kept part.
pub fn adjunction_residual_hyp(
    u: &DenseOperator,
    v: &DenseOperator,
    w: &DenseOperator,
    split: &InterfaceSplit,
) -> Result<f64, ExecError> {
    let full = split.full();
    let vw = v.embed(&full)?.add(&w.embed(&full)?)?;
    let lhs = meas_hyp_plain(&u.embed(&full)?, &vw)?;
    let uv = feedback_dense(u, v, split)?;
    let rhs = meas_hyp_plain(u, v)?.add(&meas_hyp_plain(&uv, w)?);
    Ok(lhs.distance(&rhs))
}

/// `|⟦F, G ∪ H⟧ − ρ(1_H)⟦F, G⟧ − ⟦H, F ∎ G⟧|` for `G`, `H` on disjoint carriers.
pub fn adjunction_residual_mat(
    f: &DialectalOperator,
    g: &DialectalOperator,
    h: &DialectalOperator,
) -> Result<f64, ExecError> {
    if !shared_carrier(g.carrier(), h.carrier()).is_empty() {
        return Err(ExecError::Interface("G and H share locations".into()));
    }
    let gh = plug_dialectal(g, h)?;
    let lhs = meas_mat(f, &gh)?;
    let fg = plug_dialectal(f, g)?;
    let rho1 = h.pseudo_trace().unit_value();
    let rhs = meas_mat(f, g)?.scale(rho1).add(&meas_mat(h, &fg)?);
    Ok(lhs.distance(&rhs))
}

/// Distance between `(a ∎ f) ∎ b` and `a ∎ (f ∎ b)`; exactly 0 when every
/// block took the exact route.
pub fn associativity_residual(
    a: &DialectalOperator,
    f: &DialectalOperator,
    b: &DialectalOperator,
) -> Result<f64, ExecError> {
    let left = plug_dialectal(&plug_dialectal(a, f)?, b)?;
    let right = plug_dialectal(a, &plug_dialectal(f, b)?)?;
    let right = right.align_to(left.carrier())?;
    Ok(left.max_abs_diff(&right)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{exact_eq, sum_disjoint};

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn link(a: &str, b: &str) -> PartialInjectionOp {
        sum_disjoint(&PartialInjectionOp::link(&w(a), &w(b)), &PartialInjectionOp::link(&w(b), &w(a))).unwrap()
    }

    #[test]
    fn complement_of_cylinders() {
        let c = complement_cylinders(&[w("R"), w("LR")]);
        assert_eq!(c, vec![w("LL")]);
        assert_eq!(complement_cylinders(&[]), vec![Word::empty()]);
        assert!(complement_cylinders(&[Word::empty()]).is_empty());
    }

    #[test]
    fn path_summation_examples() {
        // a = RR, b = RL, c = LR, d = LL
        let u = sum_disjoint(&link("RR", "RL"), &link("LR", "LL")).unwrap();
        let empty = PartialInjectionOp::Clauses(vec![]);
        let ex = ex_goi1(&u, &empty, &empty).unwrap();
        assert_eq!(exact_eq(&ex, &u), Some(true));
        let sigma = link("RL", "LR");
        let cut = cylinder_projection(&[w("RL"), w("LR")]);
        let ex = ex_goi1(&u, &sigma, &cut).unwrap();
        assert_eq!(exact_eq(&ex, &link("RR", "LL")), Some(true));
        let loop_u = link("R", "L");
        let loop_sigma = link("R", "L");
        let cut = cylinder_projection(&[w("R"), w("L")]);
        assert!(matches!(ex_goi1(&loop_u, &loop_sigma, &cut), Err(ExecError::NotNilpotent(_))));
    }

    #[test]
    fn table_path_summation() {
        let u = PartialInjectionOp::arrows(&[(0, 1), (1, 0), (2, 3), (3, 2)]).unwrap();
        let sigma = PartialInjectionOp::arrows(&[(1, 2), (2, 1)]).unwrap();
        let cut = PartialInjectionOp::projection([Index::new(1), Index::new(2)]);
        let ex = ex_goi1(&u, &sigma, &cut).unwrap();
        assert_eq!(ex, PartialInjectionOp::arrows(&[(0, 3), (3, 0)]).unwrap());
    }

    #[test]
    fn feedback_with_zero_opponent() {
        let u = DenseOperator::from_real_rows(&[&[0.1, 0.2], &[0.2, -0.3]]).unwrap();
        let v = DenseOperator::zeros(vec![1]);
        let split = InterfaceSplit::new(vec![0], vec![1]).unwrap();
        let r = feedback_dense(&u, &v, &split).unwrap();
        assert!((r.get(0, 0) - cr(0.1)).norm() < 1e-15);
    }

    #[test]
    fn plug_disjoint_is_union() {
        let a = DialectalOperator::plain(&DenseOperator::new(vec![0], vec![cr(0.5)]).unwrap());
        let b = DialectalOperator::plain(&DenseOperator::new(vec![1], vec![cr(-0.5)]).unwrap());
        let r = plug_dialectal(&a, &b).unwrap();
        assert_eq!(r.carrier(), &[0, 1]);
        let m = r.as_plain().unwrap();
        assert_eq!(m.get(0, 0), cr(0.5));
        assert_eq!(m.get(1, 1), cr(-0.5));
    }

    #[test]
    fn fax_composition_is_identity() {
        let swap = |x: Label, y: Label| {
            DialectalOperator::plain(
                &DenseOperator::from_rows(vec![x, y], &[vec![cr(0.0), cr(1.0)], vec![cr(1.0), cr(0.0)]]).unwrap(),
            )
        };
        let r = plug_dialectal(&swap(0, 1), &swap(1, 2)).unwrap();
        assert_eq!(r.carrier(), &[0, 2]);
        assert_eq!(r.as_plain().unwrap(), swap(0, 2).as_plain().unwrap());
        assert!(matches!(plug_dialectal(&swap(0, 1), &swap(0, 1)), Err(ExecError::NotOrthogonal(_))));
    }
}
