//! Projects of the matricial model and the constructions on them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::execution::{plug_dialectal, ExecError};
use crate::groupoid::{from_dense, is_partial_symmetry, Index, PartialInjectionOp};
use crate::linalg::{cr, tau_num, DenseOperator, Label, LinalgError};
use crate::measurement::{
    apply_variant, dagger, meas_mat, orthogonality, sca_mat, Dialect, DialectIso, DialectalOperator, Measure,
    PseudoTrace, Verdict,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProjectError {
    #[error("carrier violation: {0}")]
    Carrier(String),
    #[error("delocation mismatch: {0}")]
    Delocation(String),
    #[error("measurement is not certified: {0}")]
    Indeterminate(String),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `(carrier, wager, dialect, pseudo-trace, operator)`; the carrier is kept
/// sorted and the last three fields live in `op`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub carrier: Vec<Label>,
    pub wager: Measure,
    pub op: DialectalOperator,
}

fn sorted(c: &[Label]) -> Vec<Label> {
    c.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
}

impl Project {
    pub fn new(wager: Measure, op: DialectalOperator) -> Result<Self, ProjectError> {
        let carrier = sorted(op.carrier());
        let op = op.align_to(&carrier)?;
        Ok(Self { carrier, wager, op })
    }

    /// `(carrier, 0, ℂ, 1, 0)`.
    pub fn zero_on(carrier: &[Label]) -> Self {
        let carrier = sorted(carrier);
        let op = DialectalOperator::zero(carrier.clone(), Dialect::trivial(), PseudoTrace::trivial());
        Self { carrier, wager: Measure::zero(), op }
    }

    /// Project with empty carrier and the given wager.
    pub fn scalar(wager: f64) -> Self {
        Self { wager: Measure::Finite(wager), ..Self::zero_on(&[]) }
    }

    pub fn dialect(&self) -> &Dialect {
        self.op.dialect()
    }

    pub fn pseudo_trace(&self) -> &PseudoTrace {
        self.op.pseudo_trace()
    }

    /// Rename locations through a map; labels outside the map are kept.
    pub fn relocate(&self, map: &BTreeMap<Label, Label>) -> Result<Self, ProjectError> {
        let op = self.op.relocate(&|l| *map.get(&l).unwrap_or(&l))?;
        if op.carrier().iter().collect::<BTreeSet<_>>().len() != op.carrier().len() {
            return Err(ProjectError::Delocation("relocation is not injective on the carrier".into()));
        }
        Project::new(self.wager.clone(), op)
    }

    pub fn variant(&self, phi: &DialectIso) -> Result<Self, ProjectError> {
        Ok(Self { op: apply_variant(&self.op, phi)?, ..self.clone() })
    }
}

/// Positional bijection between two carriers, a partial isometry in the
/// groupoid of the diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delocation {
    pub source: Vec<Label>,
    pub target: Vec<Label>,
}

impl Delocation {
    pub fn new(source: Vec<Label>, target: Vec<Label>) -> Result<Self, ProjectError> {
        if source.len() != target.len() {
            return Err(ProjectError::Delocation("source and target sizes differ".into()));
        }
        for c in [&source, &target] {
            if c.iter().collect::<BTreeSet<_>>().len() != c.len() {
                return Err(ProjectError::Delocation("repeated label".into()));
            }
        }
        Ok(Self { source, target })
    }

    pub fn identity(carrier: &[Label]) -> Self {
        Self { source: carrier.to_vec(), target: carrier.to_vec() }
    }

    pub fn map(&self) -> BTreeMap<Label, Label> {
        self.source.iter().copied().zip(self.target.iter().copied()).collect()
    }

    pub fn to_op(&self) -> PartialInjectionOp {
        PartialInjectionOp::table(
            self.source.iter().zip(&self.target).map(|(&s, &t)| (Index::new(s), Index::new(t), cr(1.0))),
        )
        .expect("bijection")
    }

    pub fn apply(&self, a: &Project) -> Result<Project, ProjectError> {
        let src: BTreeSet<Label> = self.source.iter().copied().collect();
        if a.carrier.iter().any(|l| !src.contains(l)) {
            return Err(ProjectError::Delocation("project carrier is not inside the source".into()));
        }
        a.relocate(&self.map())
    }

    pub fn compose_after(&self, other: &Delocation) -> Result<Delocation, ProjectError> {
        let m = self.map();
        let target = other
            .target
            .iter()
            .map(|l| m.get(l).copied().ok_or_else(|| ProjectError::Delocation(format!("label {l} not in source"))))
            .collect::<Result<_, _>>()?;
        Delocation::new(other.source.clone(), target)
    }
}

fn check_disjoint(a: &[Label], b: &[Label]) -> Result<(), ProjectError> {
    let s: BTreeSet<Label> = a.iter().copied().collect();
    if let Some(l) = b.iter().find(|l| s.contains(l)) {
        return Err(ProjectError::Carrier(format!("location {l} is shared")));
    }
    Ok(())
}

/// `a ⊗ b = (a β(1) + α(1) b) · + · α⊗β + A† + B‡`.
pub fn tensor_project(a: &Project, b: &Project) -> Result<Project, ProjectError> {
    check_disjoint(&a.carrier, &b.carrier)?;
    let wager = a
        .wager
        .scale(b.pseudo_trace().unit_value())
        .add(&b.wager.scale(a.pseudo_trace().unit_value()));
    Project::new(wager, plug_dialectal(&a.op, &b.op)?)
}

/// `f ∎ a = (f α(1) + a φ(1) + ldet(1 − F†A‡)) · + · φ⊗α + F ∎ A`.
pub fn plug_project(f: &Project, a: &Project) -> Result<Project, ProjectError> {
    let m = meas_mat(&f.op, &a.op)?;
    match &m {
        Measure::Infinite => return Err(ExecError::NotOrthogonal("ldet is infinite".into()).into()),
        Measure::Indeterminate(n) => return Err(ProjectError::Indeterminate(n.clone())),
        Measure::Finite(_) => {}
    }
    let op = plug_dialectal(&f.op, &a.op)?;
    let wager = f
        .wager
        .scale(a.pseudo_trace().unit_value())
        .add(&a.wager.scale(f.pseudo_trace().unit_value()))
        .add(&m);
    Project::new(wager, op)
}

/// `a + λb = (a + λb) · + · α ⊕ λβ + A ⊕ B` on a common carrier.
pub fn sum_lambda(a: &Project, lambda: f64, b: &Project) -> Result<Project, ProjectError> {
    if a.carrier != b.carrier {
        return Err(ProjectError::Carrier("sum of projects with different carriers".into()));
    }
    let wager = a.wager.add(&b.wager.scale(lambda));
    Project::new(wager, a.op.direct_sum(lambda, &b.op)?)
}

/// Zero padding of the operator to `carrier ∪ q`.
pub fn extend_carrier(a: &Project, q: &[Label]) -> Result<Project, ProjectError> {
    check_disjoint(&a.carrier, q)?;
    let carrier = sorted(&[a.carrier.as_slice(), q].concat());
    Project::new(a.wager.clone(), a.op.embed(&carrier)?)
}

pub fn restrict_carrier(a: &Project, carrier: &[Label]) -> Result<Project, ProjectError> {
    let carrier = sorted(carrier);
    Project::new(a.wager.clone(), a.op.restrict(&carrier)?)
}

/// Single-block form of a dialect `⊕ M_(k_i)` whose weights are proportional
/// to the block sizes; the dialect coordinates of the blocks are concatenated.
pub fn factor_embed(op: &DialectalOperator) -> Option<DialectalOperator> {
    let d = op.dialect();
    let w = &op.pseudo_trace().weights;
    if d.is_factor() {
        return Some(op.clone());
    }
    let ratio = w[0] / d.blocks[0] as f64;
    if d.blocks.iter().zip(w).any(|(&k, &wi)| (wi / k as f64 - ratio).abs() > tau_num()) {
        return None;
    }
    let total = d.total();
    let n = op.carrier().len();
    let dim = n * total;
    let mut data = vec![crate::linalg::C64::default(); dim * dim];
    let mut offset = 0;
    for (blk, &k) in op.blocks().iter().zip(&d.blocks) {
        for x in 0..n * k {
            let (lx, ax) = (x / k, x % k);
            for y in 0..n * k {
                let v = blk.get(x, y);
                if v == crate::linalg::C64::default() {
                    continue;
                }
                let (ly, ay) = (y / k, y % k);
                data[(lx * total + offset + ax) * dim + ly * total + offset + ay] = v;
            }
        }
        offset += k;
    }
    let block = DenseOperator::positional(dim, data).ok()?;
    DialectalOperator::new(
        op.carrier().to_vec(),
        Dialect::matrix(total),
        PseudoTrace::new(vec![w.iter().sum()]),
        vec![block],
    )
    .ok()
}

/// `f &̄ g = (p+q+r, (f+g)/2, ½(φ ⊕ γ), F ⊕ G)` after delocating `f` by `θ₁`
/// and `g` by `θ₂`. Factor dialects are first brought to a common size by
/// `F ⊗ 1_b` and `G ⊗ 1_a`, which leaves measurements unchanged.
pub fn with_bar(f: &Project, g: &Project, theta1: &Delocation, theta2: &Delocation) -> Result<Project, ProjectError> {
    let f = theta1.apply(f)?;
    let g = theta2.apply(g)?;
    let carrier = sorted(&[f.carrier.as_slice(), g.carrier.as_slice()].concat());
    let fo = factor_embed(&f.op).unwrap_or(f.op.clone()).embed(&carrier)?;
    let go = factor_embed(&g.op).unwrap_or(g.op.clone()).embed(&carrier)?;
    let (ka, kb) = (fo.dialect().total(), go.dialect().total());
    let fx = dagger(&fo, &Dialect::matrix(kb), &PseudoTrace::trivial());
    let gx = dagger(&go, &Dialect::matrix(ka), &PseudoTrace::trivial());
    let half = fx.with_trace(fx.pseudo_trace().scale(0.5))?;
    let op = half.direct_sum(0.5, &gx)?;
    let wager = f.wager.add(&g.wager).scale(0.5);
    Project::new(wager, op)
}

/// Symmetric link `θ + θ*` between source and target of a delocation, as
/// `(row, col)` pairs.
fn link_pairs(d: &Delocation) -> Vec<(Label, Label)> {
    d.source.iter().zip(&d.target).flat_map(|(&s, &t)| [(t, s), (s, t)]).collect()
}

fn operator_from_pairs(carrier: &[Label], pairs: &[(Label, Label)]) -> Result<DenseOperator, ProjectError> {
    let mut m = DenseOperator::zeros(carrier.to_vec());
    for &(r, c) in pairs {
        let (i, j) = (
            m.position(r).ok_or_else(|| ProjectError::Carrier(format!("location {r} missing")))?,
            m.position(c).ok_or_else(|| ProjectError::Carrier(format!("location {c} missing")))?,
        );
        if m.get(i, j) != crate::linalg::C64::default() {
            return Err(ProjectError::Delocation(format!("links overlap at ({r}, {c})")));
        }
        m.set(i, j, cr(1.0));
    }
    Ok(m)
}

/// Axiom project `(θ-target + φ-target, 0, 1, ℂ, θφ* + φθ*)`.
pub fn build_fax(theta: &Delocation, phi: &Delocation) -> Result<Project, ProjectError> {
    if theta.source != phi.source {
        return Err(ProjectError::Delocation("fax delocations must share their source".into()));
    }
    check_disjoint(&theta.target, &phi.target)?;
    let carrier = sorted(&[theta.target.as_slice(), phi.target.as_slice()].concat());
    let pairs: Vec<(Label, Label)> =
        theta.target.iter().zip(&phi.target).flat_map(|(&a, &b)| [(a, b), (b, a)]).collect();
    let m = operator_from_pairs(&carrier, &pairs)?;
    Project::new(Measure::zero(), DialectalOperator::plain(&m))
}

/// The With/distr project: dialect `ℂ ⊕ ℂ`, pseudo-trace `½ ⊕ ½`, operator
/// `(θ₁+θ₁*+θ₂+θ₂*) ⊕ (θ₁φ*+φθ₁*+θ₃+θ₃*)`.
pub fn build_with_project(
    theta1: &Delocation,
    theta2: &Delocation,
    theta3: &Delocation,
    phi: &Delocation,
) -> Result<Project, ProjectError> {
    if theta1.source != phi.source {
        return Err(ProjectError::Delocation("θ₁ and φ must share their source".into()));
    }
    let mut all: Vec<Label> = Vec::new();
    for d in [theta1, theta2, theta3] {
        all.extend(&d.source);
        all.extend(&d.target);
    }
    all.extend(&phi.target);
    let carrier = sorted(&all);
    if carrier.len() != all.len() {
        return Err(ProjectError::Delocation("delocation carriers are not pairwise disjoint".into()));
    }
    let mut first = link_pairs(theta1);
    first.extend(link_pairs(theta2));
    let mut second: Vec<(Label, Label)> =
        theta1.target.iter().zip(&phi.target).flat_map(|(&a, &b)| [(a, b), (b, a)]).collect();
    second.extend(link_pairs(theta3));
    let k1 = operator_from_pairs(&carrier, &first)?;
    let k2 = operator_from_pairs(&carrier, &second)?;
    let op = DialectalOperator::new(
        carrier.clone(),
        Dialect::new(vec![1, 1])?,
        PseudoTrace::new(vec![0.5, 0.5]),
        vec![k1, k2],
    )?;
    Project::new(Measure::zero(), op)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromisingReport {
    pub dialect: bool,
    pub pseudo_trace: bool,
    pub wager: bool,
    pub symmetry: bool,
    pub traces: bool,
}

impl PromisingReport {
    pub fn all(&self) -> bool {
        self.dialect && self.pseudo_trace && self.wager && self.symmetry && self.traces
    }

    pub fn failed_fields(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (ok, name) in [
            (self.dialect, "dialect"),
            (self.pseudo_trace, "pseudo-trace"),
            (self.wager, "wager"),
            (self.symmetry, "symmetry"),
            (self.traces, "traces"),
        ] {
            if !ok {
                out.push(name);
            }
        }
        out
    }
}

/// The five success conditions, after embedding a proportionally weighted
/// dialect into a single factor.
pub fn is_promising(a: &Project) -> PromisingReport {
    let op = factor_embed(&a.op).unwrap_or_else(|| a.op.clone());
    let tau = tau_num();
    let dialect = op.dialect().is_factor();
    let pseudo_trace = dialect && op.pseudo_trace().is_normalized();
    let wager = matches!(a.wager, Measure::Finite(w) if w.abs() <= tau);
    let symmetry = op.blocks().iter().all(|b| {
        b.is_hermitian(tau)
            && from_dense(&b.relabel((0..b.dim() as Label).collect()).expect("same size"), tau)
                .map(|u| is_partial_symmetry(&u, 0))
                .unwrap_or(false)
    });
    let traces = (0..op.dialect().blocks.len()).all(|i| {
        op.carrier()
            .iter()
            .all(|&x| op.local_block(i, x, x).map(|m| m.is_zero(tau)).unwrap_or(true))
    });
    PromisingReport { dialect, pseudo_trace, wager, symmetry, traces }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Primal,
    Dual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductWitnessSet {
    pub carrier: Vec<Label>,
    pub members: Vec<Project>,
    pub polarity: Polarity,
}

impl ConductWitnessSet {
    pub fn new(carrier: &[Label], members: Vec<Project>, polarity: Polarity) -> Result<Self, ProjectError> {
        let carrier = sorted(carrier);
        if let Some(m) = members.iter().find(|m| m.carrier != carrier) {
            return Err(ProjectError::Carrier(format!("witness on {:?} in a set on {:?}", m.carrier, carrier)));
        }
        Ok(Self { carrier, members, polarity })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRow {
    pub witness: usize,
    pub sca: Measure,
    pub verdict: Verdict,
}

pub fn orthogonal_witness_suite(a: &Project, s: &ConductWitnessSet) -> Result<Vec<WitnessRow>, ProjectError> {
    if s.members.is_empty() {
        return Ok(Vec::new());
    }
    if a.carrier != s.carrier {
        return Err(ProjectError::Carrier("project and witnesses live on different carriers".into()));
    }
    s.members
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let sca = sca_mat(a, t)?;
            let verdict = orthogonality(&sca);
            Ok(WitnessRow { witness: i, sca, verdict })
        })
        .collect()
}

/// `sca(a, t) = sca(a′, t)` within tolerance for every witness `t`.
pub fn obs_equiv(a: &Project, a2: &Project, witnesses: &ConductWitnessSet) -> Result<bool, ProjectError> {
    for t in &witnesses.members {
        let d = sca_mat(a, t)?.distance(&sca_mat(a2, t)?);
        if d > tau_num() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Negate the `(row, col)` entry of dialect coordinate `(a, a)` in the first
/// block; used to build non-symmetric mutants.
pub fn flip_entry(p: &Project, a: usize, row: Label, col: Label) -> Result<Project, ProjectError> {
    let op = &p.op;
    let k = op.dialect().blocks[0];
    let mut blocks = op.blocks().to_vec();
    let (i, j) = (
        op.carrier().iter().position(|&l| l == row).ok_or_else(|| ProjectError::Carrier(format!("{row}")))?,
        op.carrier().iter().position(|&l| l == col).ok_or_else(|| ProjectError::Carrier(format!("{col}")))?,
    );
    let (x, y) = (i * k + a, j * k + a);
    let v = blocks[0].get(x, y);
    blocks[0].set(x, y, -v);
    let op = DialectalOperator::new(op.carrier().to_vec(), op.dialect().clone(), op.pseudo_trace().clone(), blocks)?;
    Ok(Project { op, ..p.clone() })
}

/// Permutation unitary on dialect coordinates, `U[target, source] = 1`.
fn permutation_unitary(k: usize, map: impl Fn(usize) -> usize) -> DenseOperator {
    let mut u = DenseOperator::zeros((0..k as Label).collect());
    for s in 0..k {
        u.set(map(s), s, cr(1.0));
    }
    u
}

/// Isomorphism `(𝓕⊗𝓖)⊗(𝓐⊗𝓒) → (𝓕⊗𝓐)⊗(𝓖⊗𝓒)` exchanging the middle factors.
pub fn interchange_iso(f: &Dialect, g: &Dialect, a: &Dialect, c: &Dialect) -> DialectIso {
    let (nf, ng, na, nc) = (f.blocks.len(), g.blocks.len(), a.blocks.len(), c.blocks.len());
    let mut perm = Vec::new();
    let mut unitaries = Vec::new();
    for i in 0..nf {
        for j in 0..na {
            for k in 0..ng {
                for l in 0..nc {
                    // source block (i, k, j, l)
                    perm.push(((i * ng + k) * na + j) * nc + l);
                    let (kf, kg, ka, kc) = (f.blocks[i], g.blocks[k], a.blocks[j], c.blocks[l]);
                    unitaries.push(permutation_unitary(kf * kg * ka * kc, |s| {
                        let xc = s % kc;
                        let xa = (s / kc) % ka;
                        let xg = (s / (kc * ka)) % kg;
                        let xf = s / (kc * ka * kg);
                        ((xf * ka + xa) * kg + xg) * kc + xc
                    }));
                }
            }
        }
    }
    DialectIso { perm, unitaries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fax(a: Label, b: Label) -> Project {
        build_fax(&Delocation::new(vec![100], vec![a]).unwrap(), &Delocation::new(vec![100], vec![b]).unwrap())
            .unwrap()
    }

    #[test]
    fn tensor_examples() {
        let z = tensor_project(&Project::zero_on(&[0]), &Project::zero_on(&[1])).unwrap();
        assert_eq!(z.carrier, vec![0, 1]);
        assert!(z.op.is_exact_zero());
        let a = Project { wager: Measure::Finite(1.0), ..Project::zero_on(&[0]) };
        let b = Project { wager: Measure::Finite(2.0), ..Project::zero_on(&[1]) };
        assert_eq!(tensor_project(&a, &b).unwrap().wager, Measure::Finite(3.0));
        let ff = tensor_project(&fax(0, 1), &fax(2, 3)).unwrap();
        assert!(is_promising(&ff).all());
        assert!(tensor_project(&fax(0, 1), &fax(1, 2)).is_err());
    }

    #[test]
    fn fax_examples() {
        let f = fax(0, 1);
        let m = f.op.as_plain().unwrap();
        assert_eq!(m, DenseOperator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap());
        assert!(is_promising(&f).all());
        let g = plug_project(&fax(0, 1), &fax(1, 2)).unwrap();
        assert_eq!(g.carrier, vec![0, 2]);
        assert_eq!(g.op.as_plain().unwrap(), fax(0, 2).op.as_plain().unwrap());
        assert_eq!(g.wager, Measure::Finite(0.0));
    }

    #[test]
    fn rejected_candidates() {
        let id = Project::new(Measure::zero(), DialectalOperator::plain(&DenseOperator::identity(vec![0, 1]))).unwrap();
        let r = is_promising(&id);
        assert!(!r.traces && r.symmetry && r.wager && r.dialect && r.pseudo_trace);
        let mut blk = DenseOperator::zeros((0..4).collect());
        for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            blk.set(i, j, cr(1.0));
        }
        let c = DialectalOperator::new(vec![0, 1], Dialect::matrix(2), PseudoTrace::trivial(), vec![blk]).unwrap();
        let r = is_promising(&Project::new(Measure::zero(), c).unwrap());
        assert!(!r.traces && r.symmetry);
    }

    #[test]
    fn plug_can_break_local_blocks() {
        // F on {0, 1, 2} with dialect M₂ links (0,0)↔(1,0) and (0,1)↔(2,0);
        // G links 1↔2. Both pass every field, F∎G swaps (0,0)↔(0,1).
        let mut blk = DenseOperator::zeros((0..6).collect());
        for (i, j) in [(0, 2), (2, 0), (1, 4), (4, 1)] {
            blk.set(i, j, cr(1.0));
        }
        let f = DialectalOperator::new(vec![0, 1, 2], Dialect::matrix(2), PseudoTrace::trivial(), vec![blk]).unwrap();
        let f = Project::new(Measure::zero(), f).unwrap();
        let g = fax(1, 2);
        assert!(is_promising(&f).all() && is_promising(&g).all());
        let h = plug_project(&f, &g).unwrap();
        assert_eq!(h.carrier, vec![0]);
        let r = is_promising(&h);
        assert!(!r.traces && r.symmetry && r.wager);
    }

    #[test]
    fn with_bar_of_faxes() {
        let f = fax(0, 1);
        let w = with_bar(&f, &f, &Delocation::identity(&f.carrier), &Delocation::identity(&f.carrier)).unwrap();
        assert_eq!(w.dialect().blocks, vec![1, 1]);
        assert_eq!(w.pseudo_trace().weights, vec![0.5, 0.5]);
        assert!(is_promising(&w).all());
    }

    #[test]
    fn extend_round_trip() {
        let f = fax(0, 1);
        let e = extend_carrier(&f, &[5, 7]).unwrap();
        assert_eq!(e.carrier, vec![0, 1, 5, 7]);
        assert_eq!(restrict_carrier(&e, &[0, 1]).unwrap(), f);
    }

    #[test]
    fn with_project_is_promising() {
        let theta1 = Delocation::new(vec![0], vec![10]).unwrap();
        let phi = Delocation::new(vec![0], vec![2]).unwrap();
        let theta2 = Delocation::new(vec![1], vec![11]).unwrap();
        let theta3 = Delocation::new(vec![3], vec![12]).unwrap();
        let k = build_with_project(&theta1, &theta2, &theta3, &phi).unwrap();
        assert!(is_promising(&k).all());
        assert_eq!(k.carrier, vec![0, 1, 2, 3, 10, 11, 12]);
        let bad = flip_entry(&k, 0, 10, 0).unwrap();
        assert!(!is_promising(&bad).symmetry);
    }
}
