//! Seeded property suites shared by the CLI and the acceptance tests.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus;
use crate::execution::{adjunction_residual_hyp, adjunction_residual_mat, feedback_dense, feedback_series, InterfaceSplit};
use crate::groupoid::{g_compose, monoid_word_eval, GroupElement, Generator};
use crate::linalg::{cr, tau_num, DenseOperator, Label, C64};
use crate::logic::{
    interpret_recording, mall_soundness, parse_basis, parse_proof, soundness_check_mll, InterpretationBasis, Mutation,
    ProofTree,
};
use crate::measurement::{
    dagger, extended_product, ldet, ldet_series, meas_mat, Dialect, DialectIso, DialectalOperator, Measure, PseudoTrace,
};
use crate::projects::{
    build_fax, build_with_project, flip_entry, interchange_iso, is_promising, obs_equiv, orthogonal_witness_suite,
    plug_project, sum_lambda, tensor_project, ConductWitnessSet, Delocation, Polarity, Project,
};
use crate::sampling::{
    random_contraction, random_dialect, random_dialectal, random_invertible, random_matrix,
    random_nilpotent, random_trace, random_unitary, rng, Shape,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    pub trials: usize,
    pub values: BTreeMap<String, f64>,
    pub detail: String,
    pub reproducer: Option<String>,
}

impl CheckRecord {
    fn new(name: &str, ok: bool, trials: usize, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            status: if ok { Status::Pass } else { Status::Fail },
            trials,
            values: BTreeMap::new(),
            detail: detail.into(),
            reproducer: None,
        }
    }

    fn value(mut self, k: &str, v: f64) -> Self {
        self.values.insert(k.to_string(), v);
        self
    }

    fn reproducer(mut self, r: Option<String>) -> Self {
        if self.status != Status::Pass {
            self.reproducer = r;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Coherence,
    Soundness,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Identities, Suite::Coherence, Suite::Soundness];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: usize,
    /// Flip one weight sign in the first fax of every interpretation and in
    /// the With project.
    pub mutate: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: crate::sampling::DEFAULT_SEED, trials: 100, mutate: false }
    }
}

impl SuiteConfig {
    fn mutation(&self) -> Option<Mutation> {
        self.mutate.then_some(Mutation::FlipFaxSign(0))
    }

    /// Independent stream per check.
    fn rng_for(&self, check: &str) -> ChaCha8Rng {
        let h = check.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3));
        rng(self.seed ^ h)
    }

    fn repro(&self, check: &str, trial: usize) -> String {
        format!("goi verify --seed {} --trials {} ({check}, trial {trial})", self.seed, self.trials)
    }
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Vec<CheckRecord> {
    match suite {
        Suite::Identities => vec![
            det_regression(),
            group_arithmetic(),
            fk_determinant(cfg),
            block_determinant(cfg),
            adjunction_hyp(cfg),
            adjunction_mat(cfg),
            ldet_rules(cfg),
        ],
        Suite::Coherence => vec![
            coherence(cfg),
            compositionality(cfg),
            with_distributivity(cfg),
            variant_congruence(cfg),
            tensor_variant(cfg),
            tensor_associativity(cfg),
        ],
        Suite::Soundness => vec![
            basis_validity(),
            mll_exact_soundness(),
            mall_property_soundness(cfg),
            tensor_rule_inclusion(cfg),
            inflation(cfg),
        ],
    }
}

pub fn bundled_basis() -> InterpretationBasis {
    parse_basis(corpus::BASIS).expect("bundled basis parses")
}

pub fn bundled_proofs(set: &[(&'static str, &'static str)]) -> Vec<(&'static str, ProofTree)> {
    set.iter().map(|(n, t)| (*n, parse_proof(t).unwrap_or_else(|e| panic!("{n}: {e}")))).collect()
}

fn positional(rows: &[&[f64]]) -> DenseOperator {
    DenseOperator::from_real_rows(rows).expect("square")
}

// ---------------------------------------------------------------------------
// identities

pub fn det_regression() -> CheckRecord {
    let u2 = positional(&[&[0.0, -1.0], &[-1.0, 0.0]]);
    let v2 = positional(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let d2 = u2.mat_mul(&v2).expect("same carrier").one_minus().plain_det();
    let h = 0.5f64.sqrt();
    let u3 = positional(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
    let v3 = positional(&[&[0.0, h, -h], &[h, 0.0, 0.0], &[-h, 0.0, 0.0]]);
    let uv = u3.mat_mul(&v3).expect("same carrier");
    let d3 = uv.one_minus().plain_det();
    let expected3 = (1.0 - h) * (1.0 - h);
    let e2 = (d2 - cr(4.0)).norm();
    let e3 = (d3 - cr(expected3)).norm();
    let not_pi = !uv.is_partial_isometry(tau_num());
    let ok = e2 <= 1e-12 && e3 <= 1e-10 && not_pi;
    CheckRecord::new("det_regression", ok, 2, format!("det2 = {:.12}, det3 = {:.10}, uv partial isometry: {}", d2.re, d3.re, !not_pi))
        .value("det2", d2.re)
        .value("det3", d3.re)
        .value("err2", e2)
        .value("err3", e3)
}

/// `((x), p) ↦ [[t^(−p), X(t)], [0, 1]]` over Laurent polynomials.
#[derive(Debug, Clone, PartialEq, Eq)]
struct AffineLaurent {
    shift: i64,
    poly: BTreeMap<i64, i64>,
}

impl AffineLaurent {
    fn one() -> Self {
        Self { shift: 0, poly: BTreeMap::new() }
    }

    fn mul(&self, o: &Self) -> Self {
        // [[t^a, X], [0, 1]] · [[t^b, Y], [0, 1]] = [[t^(a+b), X + t^a Y], [0, 1]]
        let mut poly = self.poly.clone();
        for (&e, &c) in &o.poly {
            let v = poly.entry(e + self.shift).or_insert(0);
            *v += c;
            if *v == 0 {
                poly.remove(&(e + self.shift));
            }
        }
        Self { shift: self.shift + o.shift, poly }
    }
}

fn word_oracle(word: &[Generator]) -> AffineLaurent {
    let a = AffineLaurent { shift: 0, poly: BTreeMap::from([(0, 1)]) };
    let b = AffineLaurent { shift: -1, poly: BTreeMap::new() };
    word.iter().fold(AffineLaurent::one(), |acc, g| acc.mul(if *g == Generator::A { &a } else { &b }))
}

fn as_laurent(g: &GroupElement) -> AffineLaurent {
    AffineLaurent { shift: -g.p, poly: g.x.clone() }
}

pub fn group_arithmetic() -> CheckRecord {
    let g = monoid_word_eval(&[(Generator::A, 2), (Generator::B, 1), (Generator::A, 48), (Generator::B, 2)]);
    let coords = g.shift_first_coefficients();
    let example = g.p == 3 && coords == BTreeMap::from([(2, 48), (3, 2)]);
    let mut word = vec![Generator::A; 2];
    word.push(Generator::B);
    word.extend(vec![Generator::A; 48]);
    word.extend(vec![Generator::B; 2]);
    let oracle_example = as_laurent(&g) == word_oracle(&word);
    let mut seen = BTreeSet::new();
    let mut words = 0;
    let mut oracle_ok = true;
    for len in 0..=6 {
        for bits in 0..(1u32 << len) {
            let w: Vec<Generator> =
                (0..len).map(|i| if bits >> i & 1 == 0 { Generator::A } else { Generator::B }).collect();
            let e = w.iter().fold(GroupElement::identity(), |acc, gen| {
                g_compose(&acc, &if *gen == Generator::A { GroupElement::gen_a() } else { GroupElement::gen_b() })
            });
            oracle_ok &= as_laurent(&e) == word_oracle(&w);
            seen.insert(e);
            words += 1;
        }
    }
    let free = seen.len() == words;
    let ok = example && oracle_example && free && oracle_ok;
    CheckRecord::new(
        "group_arithmetic",
        ok,
        words + 1,
        format!("p = {}, shift-first coefficients {:?}, {} distinct of {} words", g.p, coords, seen.len(), words),
    )
    .value("p", g.p as f64)
}

pub fn fk_determinant(cfg: &SuiteConfig) -> CheckRecord {
    let mut r = cfg.rng_for("fk_determinant");
    let mut mult = 0.0f64;
    let mut first_fail = None;
    for t in 0..cfg.trials {
        let a = random_invertible(&mut r, 4);
        let b = random_invertible(&mut r, 4);
        let ab = a.mat_mul(&b).expect("same carrier").fk_det(None).expect("square");
        let prod = a.fk_det(None).unwrap() * b.fk_det(None).unwrap();
        let rel = (ab - prod).abs() / prod.abs().max(1e-300);
        mult = mult.max(rel);
        if rel > 1e-8 && first_fail.is_none() {
            first_fail = Some(cfg.repro("fk_determinant/multiplicativity", t));
        }
    }
    let mut unip = 0.0f64;
    for t in 0..20 {
        let mut n = random_nilpotent(&mut r, 4);
        let s = n.operator_norm().unwrap();
        if s > 2.0 {
            n = n.scale(cr(2.0 / s));
        }
        let d = DenseOperator::identity(n.carrier().to_vec()).add(&n).unwrap().fk_det(None).unwrap();
        unip = unip.max((d - 1.0).abs());
        if (d - 1.0).abs() > 1e-9 && first_fail.is_none() {
            first_fail = Some(cfg.repro("fk_determinant/unipotent", t));
        }
    }
    let mut excess = f64::NEG_INFINITY;
    for t in 0..cfg.trials {
        let m = random_matrix(&mut r, &[0, 1, 2, 3]);
        let d = m.fk_det(None).unwrap();
        let rho = m.spectral_radius(1e-12).upper;
        excess = excess.max(d - rho);
        if d > rho + 1e-8 && first_fail.is_none() {
            first_fail = Some(cfg.repro("fk_determinant/spectral_bound", t));
        }
    }
    let ok = mult <= 1e-8 && unip <= 1e-9 && excess <= 1e-8;
    CheckRecord::new("fk_determinant", ok, 2 * cfg.trials + 20, format!("multiplicativity {mult:.2e}, det(1+N) {unip:.2e}, fk − ρ ≤ {excess:.2e}"))
        .value("multiplicativity", mult)
        .value("unipotent", unip)
        .value("spectral_excess", excess)
        .reproducer(first_fail)
}

pub fn block_determinant(cfg: &SuiteConfig) -> CheckRecord {
    let mut r = cfg.rng_for("block_determinant");
    let cut: Vec<Label> = vec![0, 1, 2];
    let kept: Vec<Label> = vec![3, 4, 5];
    let split = InterfaceSplit::new(kept.clone(), cut.clone()).expect("disjoint");
    let all: Vec<Label> = (0..6).collect();
    let mut worst = 0.0f64;
    let mut oracle = 0.0f64;
    let mut fail = None;
    for t in 0..cfg.trials {
        let f = random_contraction(&mut r, &all, 0.9);
        let g = random_contraction(&mut r, &cut, 0.9);
        let h = random_contraction(&mut r, &kept, 0.9);
        let gh = g.direct_sum(&h).unwrap();
        let lhs = f.mat_mul(&gh).unwrap().one_minus().plain_det();
        let fcc = f.restrict(&cut).unwrap();
        let ex = match feedback_dense(&f, &g, &split) {
            Ok(x) => x,
            Err(_) => {
                worst = f64::INFINITY;
                fail.get_or_insert(cfg.repro("block_determinant", t));
                continue;
            }
        };
        let series = feedback_series(&f, &g, &split, 400).unwrap();
        oracle = oracle.max(ex.max_abs_diff(&series).unwrap());
        let rhs = fcc.mat_mul(&g).unwrap().one_minus().plain_det() * ex.mat_mul(&h).unwrap().one_minus().plain_det();
        let res = (lhs - rhs).norm() / lhs.norm().max(1.0);
        worst = worst.max(res);
        if res > 1e-8 && fail.is_none() {
            fail = Some(cfg.repro("block_determinant", t));
        }
    }
    let ok = worst <= 1e-8 && oracle <= 1e-8;
    CheckRecord::new("block_determinant", ok, cfg.trials, format!("max residual {worst:.2e}, feedback vs series {oracle:.2e}"))
        .value("max_residual", worst)
        .value("series_gap", oracle)
        .reproducer(fail)
}

pub fn adjunction_hyp(cfg: &SuiteConfig) -> CheckRecord {
    let mut r = cfg.rng_for("adjunction_hyp");
    let cut: Vec<Label> = vec![0, 1, 2];
    let kept: Vec<Label> = vec![3, 4];
    let split = InterfaceSplit::new(kept.clone(), cut.clone()).expect("disjoint");
    let all: Vec<Label> = (0..5).collect();
    let mut worst = 0.0f64;
    let mut fail = None;
    for t in 0..cfg.trials {
        let u = random_contraction(&mut r, &all, 0.9);
        let v = random_contraction(&mut r, &cut, 0.9);
        let w = random_contraction(&mut r, &kept, 0.9);
        let res = adjunction_residual_hyp(&u, &v, &w, &split).unwrap_or(f64::INFINITY);
        worst = worst.max(res);
        if res > 1e-6 && fail.is_none() {
            fail = Some(cfg.repro("adjunction_hyp", t));
        }
    }
    CheckRecord::new("adjunction_hyp", worst <= 1e-6, cfg.trials, format!("max residual {worst:.2e}"))
        .value("max_residual", worst)
        .reproducer(fail)
}

pub fn adjunction_mat(cfg: &SuiteConfig) -> CheckRecord {
    let mut r = cfg.rng_for("adjunction_mat");
    let cut: Vec<Label> = vec![0, 1];
    let kept: Vec<Label> = vec![2, 3];
    let all: Vec<Label> = (0..4).collect();
    let mut worst = 0.0f64;
    let mut fail = None;
    for t in 0..cfg.trials {
        let mut sample = |carrier: &[Label]| {
            let d = random_dialect(&mut r, 2, 2);
            let tr = random_trace(&mut r, &d);
            random_dialectal(&mut r, carrier, &d, &tr, 0.6, Shape::Hermitian)
        };
        let f = sample(&all);
        let g = sample(&cut);
        let h = sample(&kept);
        let res = adjunction_residual_mat(&f, &g, &h).unwrap_or(f64::INFINITY);
        worst = worst.max(res);
        if res > 1e-6 && fail.is_none() {
            fail = Some(cfg.repro("adjunction_mat", t));
        }
    }
    CheckRecord::new("adjunction_mat", worst <= 1e-6, cfg.trials, format!("max residual {worst:.2e}"))
        .value("max_residual", worst)
        .reproducer(fail)
}

/// Strictly increasing partial injection on `n` points with unimodular weights.
fn random_nilpotent_permutation(r: &mut ChaCha8Rng, n: usize) -> DenseOperator {
    let mut m = DenseOperator::zeros((0..n as Label).collect());
    let phases = [cr(1.0), cr(-1.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)];
    let mut targets: Vec<usize> = (0..n).collect();
    targets.shuffle(r);
    for (i, &j) in targets.iter().enumerate() {
        if j > i && r.gen_bool(0.8) {
            m.set(j, i, *phases.choose(r).expect("nonempty"));
        }
    }
    m
}

pub fn ldet_rules(cfg: &SuiteConfig) -> CheckRecord {
    let mut r = cfg.rng_for("ldet_rules");
    let mut nil_ok = 0;
    for _ in 0..50 {
        let k = r.gen_range(1..=2);
        let n = r.gen_range(2..=4);
        let carrier: Vec<Label> = (0..n as Label).collect();
        let blk = random_nilpotent_permutation(&mut r, n * k);
        let x = DialectalOperator::new(carrier, Dialect::matrix(k), PseudoTrace::new(vec![r.gen_range(0.25..1.0)]), vec![blk])
            .expect("consistent");
        if ldet(&x) == Measure::Finite(0.0) {
            nil_ok += 1;
        }
    }
    let carrier: Vec<Label> = (0..4).collect();
    let mut sum_res = 0.0f64;
    let mut out_res = 0.0f64;
    let mut series_res = 0.0f64;
    let mut series_n = 0;
    for _ in 0..50 {
        let d = random_dialect(&mut r, 2, 2);
        let tr = random_trace(&mut r, &d);
        let u = random_dialectal(&mut r, &carrier, &d, &tr, 0.4, Shape::Real);
        let v = random_dialectal(&mut r, &carrier, &d, &tr, 0.4, Shape::Real);
        let w = u.add(&v).unwrap().sub(&u.mul(&v).unwrap()).unwrap();
        let lhs = ldet(&w);
        let rhs = ldet(&u).add(&ldet(&v));
        sum_res = sum_res.max(lhs.distance(&rhs));

        let e = random_dialect(&mut r, 2, 2);
        let beta = random_trace(&mut r, &e);
        let ux = dagger(&u, &e, &beta);
        out_res = out_res.max(ldet(&ux).distance(&ldet(&u).scale(beta.unit_value())));

        let x = random_dialectal(&mut r, &carrier, &d, &tr, 0.85, Shape::Real);
        let rho = x.blocks().iter().map(|b| b.spectral_radius(1e-12).upper).fold(0.0, f64::max);
        if rho <= 0.9 {
            if let (Some((s, bound)), Measure::Finite(v)) = (ldet_series(&x, 400), ldet(&x)) {
                series_res = series_res.max(((s - v).abs() - bound).max(0.0));
                series_n += 1;
            } else {
                series_res = f64::INFINITY;
            }
        }
    }
    let ok = nil_ok == 50 && sum_res <= 1e-9 && out_res <= 1e-9 && series_res <= 1e-8;
    CheckRecord::new(
        "ldet_rules",
        ok,
        150,
        format!(
            "nilpotent exact {nil_ok}/50, sum rule {sum_res:.2e}, dialect inflation {out_res:.2e}, series gap {series_res:.2e} on {series_n}"
        ),
    )
    .value("sum_rule", sum_res)
    .value("dialect_inflation", out_res)
    .value("series_gap", series_res)
}

// ---------------------------------------------------------------------------
// coherence

struct CorpusCuts {
    records: Vec<(String, crate::logic::CutRecord)>,
    errors: Vec<String>,
}

fn corpus_cuts(cfg: &SuiteConfig) -> CorpusCuts {
    let basis = bundled_basis();
    let mut out = CorpusCuts { records: Vec::new(), errors: Vec::new() };
    for set in [corpus::MLL, corpus::MALL] {
        for (name, p) in bundled_proofs(set) {
            match interpret_recording(&p, &basis, cfg.mutation()) {
                Ok((_, cuts)) => out.records.extend(cuts.into_iter().map(|c| (name.to_string(), c))),
                Err(e) => out.errors.push(format!("{name}: {e}")),
            }
        }
    }
    out
}

pub fn coherence(cfg: &SuiteConfig) -> CheckRecord {
    let cuts = corpus_cuts(cfg);
    let mut checked = 0;
    let mut bad = cuts.errors.clone();
    for (name, c) in &cuts.records {
        let (pl, pr) = (is_promising(&c.left), is_promising(&c.right));
        if !pl.all() || !pr.all() {
            bad.push(format!("{name} {}: premise not promising", c.path));
            continue;
        }
        let x = match extended_product(&c.left.op, &c.right.op) {
            Ok(x) => x,
            Err(e) => {
                bad.push(format!("{name} {}: {e}", c.path));
                continue;
            }
        };
        let certified = x.blocks().iter().all(|b| b.spectral_radius(1e-12).upper < 1.0);
        let m = meas_mat(&c.left.op, &c.right.op).map_err(|e| e.to_string());
        match m {
            Ok(Measure::Finite(0.0)) => checked += 1,
            Ok(m) if certified => bad.push(format!("{name} {}: ldet = {m}", c.path)),
            Ok(_) => {}
            Err(e) => bad.push(format!("{name} {}: {e}", c.path)),
        }
    }
    let ok = bad.is_empty() && checked > 0;
    CheckRecord::new("coherence", ok, cuts.records.len(), format!("{checked} promising pairings with ldet exactly 0; {}", summary(&bad)))
        .reproducer(bad.first().cloned())
}

fn summary(bad: &[String]) -> String {
    match bad.len() {
        0 => "no failures".into(),
        n => format!("{n} failure(s), first: {}", bad[0]),
    }
}

pub fn compositionality(cfg: &SuiteConfig) -> CheckRecord {
    let cuts = corpus_cuts(cfg);
    let mut bad = cuts.errors.clone();
    for (name, c) in &cuts.records {
        let rep = is_promising(&c.plugged);
        if !rep.all() {
            bad.push(format!("{name} {}: composition fails {:?}", c.path, rep.failed_fields()));
        }
    }
    let ok = bad.is_empty() && !cuts.records.is_empty();
    CheckRecord::new("compositionality", ok, cuts.records.len(), summary(&bad)).reproducer(bad.first().cloned())
}

fn labels(range: std::ops::Range<Label>) -> Vec<Label> {
    range.collect()
}

/// Plugging the With project against `f₁⊗0 + 0⊗f₂` and then `θ₁(a)` gives
/// `½θ₂(f₁∎a)⊗0 + ½θ₃(f₂∎φ(a))⊗0` up to two zero blocks. Returns the largest
/// block difference, or `None` if some step is rejected, together with the
/// verdict of `is_promising` on the With project.
pub fn with_distributivity_instance(r: &mut ChaCha8Rng, mutate: bool) -> (bool, Option<f64>) {
    let mut promising = true;
    let gap = with_distributivity_gap(r, mutate, &mut promising);
    (promising, gap)
}

fn with_distributivity_gap(r: &mut ChaCha8Rng, mutate: bool, promising: &mut bool) -> Option<f64> {
    let s = 2;
    let (pa, pb, pc) = (labels(0..s), labels(10..10 + s), labels(20..20 + s));
    let (pa1, pa2, pb1, pc1) = (labels(30..30 + s), labels(40..40 + s), labels(50..50 + s), labels(60..60 + s));
    let phi = Delocation::new(pa.clone(), pa1.clone()).ok()?;
    let theta1 = Delocation::new(pa.clone(), pa2.clone()).ok()?;
    let theta2 = Delocation::new(pb.clone(), pb1.clone()).ok()?;
    let theta3 = Delocation::new(pc.clone(), pc1.clone()).ok()?;
    let mut with = build_with_project(&theta1, &theta2, &theta3, &phi).ok()?;
    if mutate {
        with = flip_entry(&with, 0, pa[0], pa2[0]).ok()?;
    }
    *promising = is_promising(&with).all();
    let mut sample = |carrier: &[Label]| {
        let d = random_dialect(r, 1, 2);
        let tr = random_trace(r, &d);
        Project::new(Measure::zero(), random_dialectal(r, carrier, &d, &tr, 0.5, Shape::Hermitian)).ok()
    };
    let f1 = sample(&[pa.clone(), pb.clone()].concat())?;
    let f2 = sample(&[pa1.clone(), pc.clone()].concat())?;
    let a = sample(&pa)?;
    let f1x = crate::projects::extend_carrier(&f1, &[pa1.clone(), pc.clone()].concat()).ok()?;
    let f2x = crate::projects::extend_carrier(&f2, &[pa.clone(), pb.clone()].concat()).ok()?;
    let f = sum_lambda(&f1x, 1.0, &f2x).ok()?;
    let result = plug_project(&plug_project(&with, &f).ok()?, &theta1.apply(&a).ok()?).ok()?;

    let x = theta2.apply(&plug_project(&f1, &a).ok()?).ok()?;
    let y = theta3.apply(&plug_project(&f2, &phi.apply(&a).ok()?).ok()?).ok()?;
    let x = crate::projects::extend_carrier(&x, &pc1).ok()?;
    let y = crate::projects::extend_carrier(&y, &pb1).ok()?;
    // result blocks: (k0, F1), (k0, F2), (k1, F1), (k1, F2), each tensored with 𝓐
    let (n1, n2) = (f1.dialect().blocks.len(), f2.dialect().blocks.len());
    let na = a.dialect().blocks.len();
    let rb = result.op.blocks();
    let rw = &result.pseudo_trace().weights;
    let half = |p: &Project| p.pseudo_trace().weights.iter().map(|w| w * 0.5).collect::<Vec<_>>();
    let mut gap = 0.0f64;
    let seg = |k: usize, start: usize, len: usize| (k * (n1 + n2) + start) * na..(k * (n1 + n2) + start + len) * na;
    for (range, expected) in [(seg(0, 0, n1), Some(&x)), (seg(0, n1, n2), None), (seg(1, 0, n1), None), (seg(1, n1, n2), Some(&y))] {
        match expected {
            Some(e) => {
                let e = e.op.align_to(result.op.carrier()).ok()?;
                for (i, j) in range.clone().zip(0..) {
                    gap = gap.max(rb[i].max_abs_diff(&e.blocks()[j]).ok()?);
                }
                let hw = half(&Project { op: e, ..x.clone() });
                for (i, j) in range.zip(0..) {
                    gap = gap.max((rw[i] - hw[j]).abs());
                }
            }
            None => {
                for i in range {
                    gap = gap.max(rb[i].max_abs());
                }
            }
        }
    }
    let expected_wager = x.wager.scale(0.5).add(&y.wager.scale(0.5));
    gap = gap.max(result.wager.distance(&expected_wager));
    Some(gap)
}

pub fn with_distributivity(cfg: &SuiteConfig) -> CheckRecord {
    let mut r = cfg.rng_for("with_distributivity");
    let trials = cfg.trials.min(20);
    let mut worst = 0.0f64;
    let mut promising = true;
    let mut fail = None;
    for t in 0..trials {
        let (p, g) = with_distributivity_instance(&mut r, cfg.mutate);
        promising &= p;
        match g {
            Some(g) => {
                worst = worst.max(g);
                if (!p || g > 1e-9) && fail.is_none() {
                    fail = Some(cfg.repro("with_distributivity", t));
                }
            }
            None => {
                worst = f64::INFINITY;
                fail.get_or_insert(cfg.repro("with_distributivity", t));
            }
        }
    }
    CheckRecord::new(
        "with_distributivity",
        promising && worst <= 1e-9,
        trials,
        format!("With promising: {promising}, max block gap {worst:.2e}"),
    )
    .value("max_gap", worst)
    .reproducer(fail)
}

fn random_project(r: &mut ChaCha8Rng, carrier: &[Label], scale: f64) -> Project {
    let d = random_dialect(r, 3, 2);
    let tr = random_trace(r, &d);
    let op = random_dialectal(r, carrier, &d, &tr, scale, Shape::Hermitian);
    Project::new(Measure::Finite(r.gen_range(-1.0..1.0)), op).expect("valid")
}

fn random_iso(r: &mut ChaCha8Rng, d: &Dialect) -> DialectIso {
    let mut perm: Vec<usize> = (0..d.blocks.len()).collect();
    perm.shuffle(r);
    let unitaries = perm.iter().map(|&p| random_unitary(r, d.blocks[p])).collect();
    DialectIso { perm, unitaries }
}

pub fn variant_congruence(cfg: &SuiteConfig) -> CheckRecord {
    let mut r = cfg.rng_for("variant_congruence");
    let carrier: Vec<Label> = vec![0, 1, 2];
    let trials = cfg.trials.clamp(1, 50);
    let mut bad = 0;
    let mut fail = None;
    for t in 0..trials {
        let a = random_project(&mut r, &carrier, 0.6);
        let phi = random_iso(&mut r, a.dialect());
        let w: Vec<Project> = (0..5).map(|_| random_project(&mut r, &carrier, 0.6)).collect();
        let set = ConductWitnessSet::new(&carrier, w, Polarity::Dual).expect("shared carrier");
        let ok = a.variant(&phi).and_then(|v| obs_equiv(&a, &v, &set)).unwrap_or(false);
        if !ok {
            bad += 1;
            fail.get_or_insert(cfg.repro("variant_congruence", t));
        }
    }
    CheckRecord::new("variant_congruence", bad == 0, trials, format!("{bad} of {trials} isomorphisms changed a measurement"))
        .reproducer(fail)
}

/// `(f⊗g)∎(a⊗c)` against `(f∎a)⊗(g∎c)` through the interchange isomorphism.
pub fn tensor_variant_gap(r: &mut ChaCha8Rng) -> Option<f64> {
    let (ca, cb, cc, cd) = (labels(0..2), labels(10..12), labels(20..22), labels(30..31));
    let f = random_project(r, &[ca.clone(), cb.clone()].concat(), 0.5);
    let g = random_project(r, &[cc.clone(), cd.clone()].concat(), 0.5);
    let a = random_project(r, &ca, 0.5);
    let c = random_project(r, &cc, 0.5);
    let lhs = plug_project(&tensor_project(&f, &g).ok()?, &tensor_project(&a, &c).ok()?).ok()?;
    let rhs = tensor_project(&plug_project(&f, &a).ok()?, &plug_project(&g, &c).ok()?).ok()?;
    let iso = interchange_iso(f.dialect(), g.dialect(), a.dialect(), c.dialect());
    let moved = lhs.variant(&iso).ok()?;
    let mut gap = moved.op.max_abs_diff(&rhs.op).ok()?;
    gap = gap.max(moved.wager.distance(&rhs.wager));
    for (x, y) in moved.pseudo_trace().weights.iter().zip(&rhs.pseudo_trace().weights) {
        gap = gap.max((x - y).abs());
    }
    if moved.dialect() != rhs.dialect() {
        return None;
    }
    Some(gap)
}

pub fn tensor_variant(cfg: &SuiteConfig) -> CheckRecord {
    let mut r = cfg.rng_for("tensor_variant");
    let trials = cfg.trials.clamp(1, 20);
    let mut worst = 0.0f64;
    let mut fail = None;
    for t in 0..trials {
        let g = tensor_variant_gap(&mut r).unwrap_or(f64::INFINITY);
        worst = worst.max(g);
        if g > 1e-9 && fail.is_none() {
            fail = Some(cfg.repro("tensor_variant", t));
        }
    }
    CheckRecord::new("tensor_variant", worst <= 1e-9, trials, format!("max gap {worst:.2e}"))
        .value("max_gap", worst)
        .reproducer(fail)
}

pub fn tensor_associativity(cfg: &SuiteConfig) -> CheckRecord {
    let mut r = cfg.rng_for("tensor_associativity");
    let trials = cfg.trials.clamp(1, 20);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let a = random_project(&mut r, &[0, 1], 0.5);
        let b = random_project(&mut r, &[2], 0.5);
        let c = random_project(&mut r, &[3, 4], 0.5);
        let gap = (|| {
            let l = tensor_project(&tensor_project(&a, &b).ok()?, &c).ok()?;
            let rr = tensor_project(&a, &tensor_project(&b, &c).ok()?).ok()?;
            if l.dialect() != rr.dialect() {
                return None;
            }
            let phi = DialectIso::identity(l.dialect());
            let l = l.variant(&phi).ok()?;
            Some(l.op.max_abs_diff(&rr.op).ok()?.max(l.wager.distance(&rr.wager)))
        })()
        .unwrap_or(f64::INFINITY);
        worst = worst.max(gap);
    }
    CheckRecord::new("tensor_associativity", worst <= 1e-12, trials, format!("max gap {worst:.2e}")).value("max_gap", worst)
}

// ---------------------------------------------------------------------------
// soundness

pub fn basis_validity() -> CheckRecord {
    let b = bundled_basis();
    match b.validate() {
        Ok(()) => CheckRecord::new("basis_validity", true, b.vars.len(), "every positive witness is orthogonal to every negative one"),
        Err(e) => CheckRecord::new("basis_validity", false, b.vars.len(), e.to_string()),
    }
}

pub fn mll_exact_soundness() -> CheckRecord {
    let proofs = bundled_proofs(corpus::MLL);
    let mut bad = Vec::new();
    let mut max_cuts = 0;
    let mut max_depth = 0;
    for (name, p) in &proofs {
        max_cuts = max_cuts.max(p.cut_count());
        max_depth = max_depth.max(p.depth());
        match soundness_check_mll(p) {
            Ok(s) if s.holds && s.proof_is_symmetry && s.cuts_are_symmetry && s.nilpotency_degree.is_some() => {}
            Ok(s) => bad.push(format!("{name}: {s:?}")),
            Err(e) => bad.push(format!("{name}: {e}")),
        }
    }
    let ok = bad.is_empty() && proofs.len() >= 12 && max_cuts <= 4 && max_depth <= 5;
    CheckRecord::new(
        "mll_exact_soundness",
        ok,
        proofs.len(),
        format!("{} proofs, at most {max_cuts} cuts, depth at most {max_depth}; {}", proofs.len(), summary(&bad)),
    )
    .value("proofs", proofs.len() as f64)
    .reproducer(bad.first().map(|b| format!("corpus/mll/{}", b.split(':').next().unwrap_or(""))))
}

pub fn mall_property_soundness(cfg: &SuiteConfig) -> CheckRecord {
    let basis = bundled_basis();
    let proofs = bundled_proofs(corpus::MALL);
    let mut bad = Vec::new();
    let mut rules = BTreeSet::new();
    let mut witnesses = 0;
    for (name, p) in &proofs {
        rules.extend(p.rules_used());
        match mall_soundness(p, &basis, cfg.mutation()) {
            Ok((_, s)) => {
                witnesses += s.witnesses.len();
                if !s.holds {
                    bad.push(format!("{name}: promising {:?}, witnesses orthogonal {}", s.promising.failed_fields(), s.witnesses.iter().all(|w| w.verdict.orthogonal)));
                }
            }
            Err(e) => bad.push(format!("{name}: {e}")),
        }
    }
    let needed = ["ax", "cut", "tensor", "par", "with", "plusl", "plusr", "top"];
    let covered = needed.iter().all(|r| rules.contains(r));
    let ok = bad.is_empty() && proofs.len() >= 10 && covered;
    CheckRecord::new(
        "mall_property_soundness",
        ok,
        proofs.len(),
        format!("{} proofs, {witnesses} dual witnesses, rules {:?}; {}", proofs.len(), rules, summary(&bad)),
    )
    .value("proofs", proofs.len() as f64)
    .value("witnesses", witnesses as f64)
    .reproducer(bad.first().map(|b| format!("corpus/mall/{} --seed {}", b.split(':').next().unwrap_or(""), cfg.seed)))
}

/// Faxes `A → B` and `C → D` tensored and plugged with `a ⊗ c` land in the
/// witness-defined `B ⊗ D`.
pub fn tensor_rule_inclusion(cfg: &SuiteConfig) -> CheckRecord {
    let basis = bundled_basis();
    let x1 = basis.spec("X1").expect("bundled variable");
    let x2 = basis.spec("X2").expect("bundled variable");
    let (s1, s2) = (x1.size as Label, x2.size as Label);
    let (ca, cb) = (labels(0..s1), labels(100..100 + s1));
    let (cc, cd) = (labels(200..200 + s2), labels(300..300 + s2));
    let fax = |p: &[Label], q: &[Label], prim: &[Label]| {
        build_fax(&Delocation::new(prim.to_vec(), p.to_vec()).unwrap(), &Delocation::new(prim.to_vec(), q.to_vec()).unwrap())
    };
    let mut f = fax(&ca, &cb, &x1.carrier).expect("fax");
    let g = fax(&cc, &cd, &x2.carrier).expect("fax");
    if cfg.mutate {
        f = flip_entry(&f, 0, ca[0], cb[0]).expect("entry");
    }
    let fg = tensor_project(&f, &g).expect("disjoint");
    let to = |c: &[Label], prim: &[Label]| Delocation::new(prim.to_vec(), c.to_vec()).unwrap();
    let mut rows = 0;
    let mut bad = Vec::new();
    for i in 0..x1.pos.len() {
        for j in 0..x2.pos.len() {
            let a = to(&ca, &x1.carrier).apply(&basis.witness("X1", false, i).unwrap()).unwrap();
            let c = to(&cc, &x2.carrier).apply(&basis.witness("X2", false, j).unwrap()).unwrap();
            let out = match plug_project(&fg, &tensor_project(&a, &c).unwrap()) {
                Ok(o) => o,
                Err(e) => {
                    bad.push(format!("pos ({i}, {j}): {e}"));
                    continue;
                }
            };
            let mut duals = Vec::new();
            for k in 0..x1.neg.len() {
                for l in 0..x2.neg.len() {
                    let b = to(&cb, &x1.carrier).apply(&basis.witness("X1", true, k).unwrap()).unwrap();
                    let d = to(&cd, &x2.carrier).apply(&basis.witness("X2", true, l).unwrap()).unwrap();
                    duals.push(tensor_project(&b, &d).unwrap());
                }
            }
            let set = ConductWitnessSet::new(&[cb.clone(), cd.clone()].concat(), duals, Polarity::Dual).unwrap();
            match orthogonal_witness_suite(&out, &set) {
                Ok(tab) => {
                    rows += tab.len();
                    if tab.iter().any(|w| !w.verdict.orthogonal) {
                        bad.push(format!("pos ({i}, {j}) meets a non-orthogonal witness"));
                    }
                }
                Err(e) => bad.push(format!("pos ({i}, {j}): {e}")),
            }
        }
    }
    let faithful = is_promising(&fg).all();
    let ok = bad.is_empty() && faithful;
    CheckRecord::new("tensor_rule_inclusion", ok, rows, format!("{rows} witness pairings; {}", summary(&bad))).reproducer(
        (!ok).then(|| cfg.repro("tensor_rule_inclusion", 0)),
    )
}

/// Passing all witnesses survives `a + λ·0` for `λ ∈ {1, 2.5}`.
pub fn inflation(cfg: &SuiteConfig) -> CheckRecord {
    let basis = bundled_basis();
    let mut checked = 0;
    let mut bad = Vec::new();
    for (name, p) in bundled_proofs(corpus::MALL) {
        let plan = match crate::logic::allocate_locations(&p, &basis) {
            Ok(pl) => pl,
            Err(e) => {
                bad.push(format!("{name}: {e}"));
                continue;
            }
        };
        let Ok((a, s)) = mall_soundness(&p, &basis, cfg.mutation()) else {
            bad.push(format!("{name}: interpretation failed"));
            continue;
        };
        if !s.witnesses.iter().all(|w| w.verdict.orthogonal) {
            continue;
        }
        let duals = crate::logic::dual_witnesses(&p, &plan, &basis).expect("generated before");
        for lambda in [1.0, 2.5] {
            let zero = Project::zero_on(&a.carrier);
            let infl = sum_lambda(&a, lambda, &zero).expect("same carrier");
            match orthogonal_witness_suite(&infl, &duals) {
                Ok(t) if t.iter().all(|w| w.verdict.orthogonal) => checked += 1,
                _ => bad.push(format!("{name}: inflation by {lambda} loses a witness")),
            }
        }
    }
    CheckRecord::new("inflation", bad.is_empty() && checked > 0, checked, summary(&bad)).reproducer(bad.first().cloned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laurent_oracle_matches_generators() {
        assert_eq!(as_laurent(&GroupElement::gen_a()), word_oracle(&[Generator::A]));
        assert_eq!(as_laurent(&GroupElement::gen_b()), word_oracle(&[Generator::B]));
    }

    #[test]
    fn nilpotent_permutations_are_nilpotent() {
        let mut r = rng(3);
        for _ in 0..10 {
            let m = random_nilpotent_permutation(&mut r, 5);
            let mut p = m.clone();
            for _ in 0..4 {
                p = p.mat_mul(&m).unwrap();
            }
            assert!(p.is_exact_zero());
        }
    }
}
