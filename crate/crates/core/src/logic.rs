//! Formulas and proofs of MALL with units ⊤ and 0, and their interpretations.
//!
//! Proof syntax (0-based indices, the active formula of `tensor`, `plusl`,
//! `plusr` and the left premise of `cut` is the last one; the right premise of
//! `cut` has the dual formula first):
//!
//! ```text
//! formula ::= var | (dual var) | (tensor f f) | (par f f) | (with f f) | (plus f f) | top | zero
//! proof   ::= (ax var) | (cut formula proof proof) | (tensor proof proof) | (par i j proof)
//!           | (plusl formula proof) | (plusr formula proof) | (with proof proof)
//!           | (top (formula ...)) | (ex i j proof)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use lexpr::datum::Ref;
use serde::{Deserialize, Serialize};

use crate::execution::{ex_goi1, ExecError};
use crate::groupoid::{
    compose, exact_eq, is_partial_symmetry, nilpotency, Clause, Letter, Nilpotency, PartialInjectionOp, Word,
    DEFAULT_BUDGET,
};
use crate::linalg::Label;
use crate::measurement::{orthogonality, sca_mat, DialectalOperator, Measure};
use crate::projects::{
    build_fax, extend_carrier, flip_entry, is_promising, orthogonal_witness_suite, plug_project, sum_lambda,
    tensor_project, with_bar, ConductWitnessSet, Delocation, Polarity, Project, ProjectError, PromisingReport,
    WitnessRow,
};
use crate::sampling::{random_hermitian, rng};

pub type AtomId = usize;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Formula {
    Var(String),
    Dual(String),
    Tensor(Box<Formula>, Box<Formula>),
    Par(Box<Formula>, Box<Formula>),
    With(Box<Formula>, Box<Formula>),
    Plus(Box<Formula>, Box<Formula>),
    Top,
    Zero,
}

impl Formula {
    pub fn var(x: &str) -> Self {
        Formula::Var(x.to_string())
    }

    pub fn dual_var(x: &str) -> Self {
        Formula::Dual(x.to_string())
    }

    pub fn tensor(a: Formula, b: Formula) -> Self {
        Formula::Tensor(Box::new(a), Box::new(b))
    }

    pub fn par(a: Formula, b: Formula) -> Self {
        Formula::Par(Box::new(a), Box::new(b))
    }

    pub fn with(a: Formula, b: Formula) -> Self {
        Formula::With(Box::new(a), Box::new(b))
    }

    pub fn plus(a: Formula, b: Formula) -> Self {
        Formula::Plus(Box::new(a), Box::new(b))
    }

    /// Linear negation by De Morgan; leaves keep their left-to-right order.
    pub fn dual(&self) -> Formula {
        use Formula::*;
        match self {
            Var(x) => Dual(x.clone()),
            Dual(x) => Var(x.clone()),
            Tensor(a, b) => Par(Box::new(a.dual()), Box::new(b.dual())),
            Par(a, b) => Tensor(Box::new(a.dual()), Box::new(b.dual())),
            With(a, b) => Plus(Box::new(a.dual()), Box::new(b.dual())),
            Plus(a, b) => With(Box::new(a.dual()), Box::new(b.dual())),
            Top => Zero,
            Zero => Top,
        }
    }

    /// Variable leaves in order, with `true` for dual occurrences.
    pub fn atoms(&self) -> Vec<(String, bool)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<(String, bool)>) {
        use Formula::*;
        match self {
            Var(x) => out.push((x.clone(), false)),
            Dual(x) => out.push((x.clone(), true)),
            Tensor(a, b) | Par(a, b) | With(a, b) | Plus(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Top | Zero => {}
        }
    }

    pub fn atom_count(&self) -> usize {
        self.atoms().len()
    }

    pub fn is_mll(&self) -> bool {
        use Formula::*;
        match self {
            Var(_) | Dual(_) => true,
            Tensor(a, b) | Par(a, b) => a.is_mll() && b.is_mll(),
            _ => false,
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.atoms().into_iter().map(|(x, _)| x).collect()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Formula::*;
        match self {
            Var(x) => write!(f, "{x}"),
            Dual(x) => write!(f, "(dual {x})"),
            Tensor(a, b) => write!(f, "(tensor {a} {b})"),
            Par(a, b) => write!(f, "(par {a} {b})"),
            With(a, b) => write!(f, "(with {a} {b})"),
            Plus(a, b) => write!(f, "(plus {a} {b})"),
            Top => write!(f, "top"),
            Zero => write!(f, "zero"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[error("{rule} rule at node {path}: {message}")]
pub struct RuleError {
    pub rule: String,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LogicError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("variable {0} is not in the basis")]
    MissingVariable(String),
    #[error("invalid basis: {0}")]
    Basis(String),
    #[error("rule {0} is outside MLL")]
    Unsupported(String),
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

fn syntax_at(r: &Ref<'_>, message: impl Into<String>) -> SyntaxError {
    let p = r.span().start();
    SyntaxError { line: p.line(), column: p.column() + 1, message: message.into() }
}

fn from_lexpr(e: lexpr::parse::Error) -> SyntaxError {
    let (line, column) = e.location().map(|l| (l.line(), l.column())).unwrap_or((0, 0));
    SyntaxError { line, column, message: e.to_string() }
}

fn list_items<'a>(r: &Ref<'a>) -> Option<Vec<Ref<'a>>> {
    if r.value().is_null() {
        return Some(Vec::new());
    }
    if !r.value().is_list() {
        return None;
    }
    r.list_iter().map(|it| it.collect())
}

const FORMULA_HEADS: [&str; 7] = ["dual", "tensor", "par", "with", "plus", "top", "zero"];

fn formula_from(r: &Ref<'_>) -> Result<Formula, SyntaxError> {
    if let Some(s) = r.value().as_symbol() {
        return match s {
            "top" => Ok(Formula::Top),
            "zero" => Ok(Formula::Zero),
            s if FORMULA_HEADS.contains(&s) => Err(syntax_at(r, format!("`{s}` is not a variable"))),
            s => Ok(Formula::Var(s.to_string())),
        };
    }
    let items = list_items(r).ok_or_else(|| syntax_at(r, "expected a formula"))?;
    let head = items.first().and_then(|h| h.value().as_symbol()).ok_or_else(|| syntax_at(r, "expected a connective"))?;
    let args = &items[1..];
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(syntax_at(r, format!("`{head}` takes {n} argument(s), got {}", args.len())))
        }
    };
    match head {
        "dual" => {
            arity(1)?;
            match formula_from(&args[0])? {
                Formula::Var(x) => Ok(Formula::Dual(x)),
                _ => Err(syntax_at(&args[0], "`dual` applies to variables only")),
            }
        }
        "tensor" | "par" | "with" | "plus" => {
            arity(2)?;
            let (a, b) = (formula_from(&args[0])?, formula_from(&args[1])?);
            Ok(match head {
                "tensor" => Formula::tensor(a, b),
                "par" => Formula::par(a, b),
                "with" => Formula::with(a, b),
                _ => Formula::plus(a, b),
            })
        }
        other => Err(syntax_at(r, format!("unknown connective `{other}`"))),
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, SyntaxError> {
    let d = lexpr::datum::from_str(text).map_err(from_lexpr)?;
    formula_from(&d.as_ref())
}

/// Proof as written, before rule checking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RawProof {
    Ax(String),
    Cut(Formula, Box<RawProof>, Box<RawProof>),
    Tensor(Box<RawProof>, Box<RawProof>),
    Par(usize, usize, Box<RawProof>),
    PlusL(Formula, Box<RawProof>),
    PlusR(Formula, Box<RawProof>),
    With(Box<RawProof>, Box<RawProof>),
    Top(Vec<Formula>),
    Ex(usize, usize, Box<RawProof>),
}

impl fmt::Display for RawProof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use RawProof::*;
        match self {
            Ax(x) => write!(f, "(ax {x})"),
            Cut(a, p, q) => write!(f, "(cut {a} {p} {q})"),
            Tensor(p, q) => write!(f, "(tensor {p} {q})"),
            Par(i, j, p) => write!(f, "(par {i} {j} {p})"),
            PlusL(b, p) => write!(f, "(plusl {b} {p})"),
            PlusR(a, p) => write!(f, "(plusr {a} {p})"),
            With(p, q) => write!(f, "(with {p} {q})"),
            Top(seq) => {
                write!(f, "(top (")?;
                for (i, a) in seq.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, "))")
            }
            Ex(i, j, p) => write!(f, "(ex {i} {j} {p})"),
        }
    }
}

fn index_from(r: &Ref<'_>) -> Result<usize, SyntaxError> {
    r.value().as_u64().map(|n| n as usize).ok_or_else(|| syntax_at(r, "expected a non-negative index"))
}

fn proof_from(r: &Ref<'_>) -> Result<RawProof, SyntaxError> {
    let items = list_items(r).ok_or_else(|| syntax_at(r, "expected a proof"))?;
    let head = items.first().and_then(|h| h.value().as_symbol()).ok_or_else(|| syntax_at(r, "expected a rule name"))?;
    let args = &items[1..];
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(syntax_at(r, format!("`{head}` takes {n} argument(s), got {}", args.len())))
        }
    };
    let sub = |i: usize| proof_from(&args[i]).map(Box::new);
    Ok(match head {
        "ax" => {
            arity(1)?;
            match formula_from(&args[0])? {
                Formula::Var(x) => RawProof::Ax(x),
                _ => return Err(syntax_at(&args[0], "`ax` takes a variable")),
            }
        }
        "cut" => {
            arity(3)?;
            RawProof::Cut(formula_from(&args[0])?, sub(1)?, sub(2)?)
        }
        "tensor" => {
            arity(2)?;
            RawProof::Tensor(sub(0)?, sub(1)?)
        }
        "par" | "ex" => {
            arity(3)?;
            let (i, j, p) = (index_from(&args[0])?, index_from(&args[1])?, sub(2)?);
            if head == "par" {
                RawProof::Par(i, j, p)
            } else {
                RawProof::Ex(i, j, p)
            }
        }
        "plusl" => {
            arity(2)?;
            RawProof::PlusL(formula_from(&args[0])?, sub(1)?)
        }
        "plusr" => {
            arity(2)?;
            RawProof::PlusR(formula_from(&args[0])?, sub(1)?)
        }
        "with" => {
            arity(2)?;
            RawProof::With(sub(0)?, sub(1)?)
        }
        "top" => {
            arity(1)?;
            let seq = list_items(&args[0]).ok_or_else(|| syntax_at(&args[0], "expected a list of formulas"))?;
            RawProof::Top(seq.iter().map(formula_from).collect::<Result<_, _>>()?)
        }
        other => return Err(syntax_at(r, format!("unknown rule `{other}`"))),
    })
}

pub fn parse_raw_proof(text: &str) -> Result<RawProof, SyntaxError> {
    let d = lexpr::datum::from_str(text).map_err(from_lexpr)?;
    proof_from(&d.as_ref())
}

/// Parse and rule-check.
pub fn parse_proof(text: &str) -> Result<ProofTree, LogicError> {
    Ok(check_proof(&parse_raw_proof(text)?)?)
}

/// A formula occurrence; `atoms` are the ids of its variable leaves in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occ {
    pub formula: Formula,
    pub atoms: Vec<AtomId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    Ax { var: String },
    /// `links` pairs each atom of the cut formula with the matching atom of its dual.
    Cut { formula: Formula, links: Vec<(AtomId, AtomId)> },
    Tensor,
    Par { i: usize, j: usize },
    PlusL { added: Formula },
    PlusR { added: Formula },
    /// `links` pairs the atoms of the two premise contexts.
    With { links: Vec<(AtomId, AtomId)> },
    Top,
    Exchange { i: usize, j: usize },
}

impl RuleKind {
    pub fn name(&self) -> &'static str {
        match self {
            RuleKind::Ax { .. } => "ax",
            RuleKind::Cut { .. } => "cut",
            RuleKind::Tensor => "tensor",
            RuleKind::Par { .. } => "par",
            RuleKind::PlusL { .. } => "plusl",
            RuleKind::PlusR { .. } => "plusr",
            RuleKind::With { .. } => "with",
            RuleKind::Top => "top",
            RuleKind::Exchange { .. } => "ex",
        }
    }
}

/// Checked proof; every node carries its conclusion sequent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofTree {
    pub rule: RuleKind,
    pub premises: Vec<ProofTree>,
    pub conclusion: Vec<Occ>,
}

impl ProofTree {
    pub fn cut_count(&self) -> usize {
        usize::from(matches!(self.rule, RuleKind::Cut { .. }))
            + self.premises.iter().map(ProofTree::cut_count).sum::<usize>()
    }

    /// Height counting only logical rules.
    pub fn depth(&self) -> usize {
        let below = self.premises.iter().map(ProofTree::depth).max().unwrap_or(0);
        if matches!(self.rule, RuleKind::Exchange { .. }) {
            below
        } else {
            below + 1
        }
    }

    pub fn is_mll(&self) -> bool {
        matches!(
            self.rule,
            RuleKind::Ax { .. } | RuleKind::Cut { .. } | RuleKind::Tensor | RuleKind::Par { .. } | RuleKind::Exchange { .. }
        ) && self.premises.iter().all(ProofTree::is_mll)
    }

    pub fn rules_used(&self) -> BTreeSet<&'static str> {
        let mut s: BTreeSet<&'static str> = self.premises.iter().flat_map(|p| p.rules_used()).collect();
        s.insert(self.rule.name());
        s
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut s: BTreeSet<String> = self.conclusion.iter().flat_map(|o| o.formula.vars()).collect();
        if let RuleKind::Cut { formula, .. } = &self.rule {
            s.extend(formula.vars());
        }
        for p in &self.premises {
            s.extend(p.vars());
        }
        s
    }

    /// Every atom id with its variable and polarity (`true` for dual).
    pub fn atom_vars(&self) -> BTreeMap<AtomId, (String, bool)> {
        let mut out = BTreeMap::new();
        self.collect_atom_vars(&mut out);
        out
    }

    fn collect_atom_vars(&self, out: &mut BTreeMap<AtomId, (String, bool)>) {
        for o in &self.conclusion {
            for (id, a) in o.atoms.iter().zip(o.formula.atoms()) {
                out.insert(*id, a);
            }
        }
        for p in &self.premises {
            p.collect_atom_vars(out);
        }
    }

    pub fn to_raw(&self) -> RawProof {
        let p = |i: usize| Box::new(self.premises[i].to_raw());
        match &self.rule {
            RuleKind::Ax { var } => RawProof::Ax(var.clone()),
            RuleKind::Cut { formula, .. } => RawProof::Cut(formula.clone(), p(0), p(1)),
            RuleKind::Tensor => RawProof::Tensor(p(0), p(1)),
            RuleKind::Par { i, j } => RawProof::Par(*i, *j, p(0)),
            RuleKind::PlusL { added } => RawProof::PlusL(added.clone(), p(0)),
            RuleKind::PlusR { added } => RawProof::PlusR(added.clone(), p(0)),
            RuleKind::With { .. } => RawProof::With(p(0), p(1)),
            RuleKind::Top => {
                RawProof::Top(self.conclusion[..self.conclusion.len() - 1].iter().map(|o| o.formula.clone()).collect())
            }
            RuleKind::Exchange { i, j } => RawProof::Ex(*i, *j, p(0)),
        }
    }

    pub fn conclusion_formulas(&self) -> Vec<Formula> {
        self.conclusion.iter().map(|o| o.formula.clone()).collect()
    }
}

struct Checker {
    next_atom: AtomId,
}

impl Checker {
    fn fresh(&mut self, f: &Formula) -> Occ {
        let n = f.atom_count();
        let atoms = (self.next_atom..self.next_atom + n).collect();
        self.next_atom += n;
        Occ { formula: f.clone(), atoms }
    }

    fn check(&mut self, raw: &RawProof, path: &str) -> Result<ProofTree, RuleError> {
        let err = |rule: &str, message: String| RuleError { rule: rule.to_string(), path: path.to_string(), message };
        let child = |i: usize| format!("{path}.{i}");
        match raw {
            RawProof::Ax(x) => {
                let neg = self.fresh(&Formula::Dual(x.clone()));
                let pos = self.fresh(&Formula::Var(x.clone()));
                Ok(ProofTree { rule: RuleKind::Ax { var: x.clone() }, premises: vec![], conclusion: vec![neg, pos] })
            }
            RawProof::Cut(a, l, r) => {
                let l = self.check(l, &child(0))?;
                let r = self.check(r, &child(1))?;
                let last = l.conclusion.last().ok_or_else(|| err("cut", "left premise has an empty conclusion".into()))?;
                let first = r.conclusion.first().ok_or_else(|| err("cut", "right premise has an empty conclusion".into()))?;
                if &last.formula != a {
                    return Err(err("cut", format!("left premise ends with {}, expected {a}", last.formula)));
                }
                if first.formula != a.dual() {
                    return Err(err("cut", format!("right premise starts with {}, expected {}", first.formula, a.dual())));
                }
                let links = last.atoms.iter().copied().zip(first.atoms.iter().copied()).collect();
                let mut conclusion = l.conclusion[..l.conclusion.len() - 1].to_vec();
                conclusion.extend_from_slice(&r.conclusion[1..]);
                Ok(ProofTree { rule: RuleKind::Cut { formula: a.clone(), links }, premises: vec![l, r], conclusion })
            }
            RawProof::Tensor(l, r) => {
                let l = self.check(l, &child(0))?;
                let r = self.check(r, &child(1))?;
                let (Some(a), Some(b)) = (l.conclusion.last(), r.conclusion.last()) else {
                    return Err(err("tensor", "premise with an empty conclusion".into()));
                };
                let occ = Occ {
                    formula: Formula::tensor(a.formula.clone(), b.formula.clone()),
                    atoms: [a.atoms.as_slice(), b.atoms.as_slice()].concat(),
                };
                let mut conclusion = l.conclusion[..l.conclusion.len() - 1].to_vec();
                conclusion.extend_from_slice(&r.conclusion[..r.conclusion.len() - 1]);
                conclusion.push(occ);
                Ok(ProofTree { rule: RuleKind::Tensor, premises: vec![l, r], conclusion })
            }
            RawProof::Par(i, j, p) | RawProof::Ex(i, j, p) => {
                let is_par = matches!(raw, RawProof::Par(..));
                let name = if is_par { "par" } else { "ex" };
                let p = self.check(p, &child(0))?;
                let n = p.conclusion.len();
                if *i >= n || *j >= n || i == j {
                    return Err(err(name, format!("indices ({i}, {j}) invalid for a sequent of {n} formulas")));
                }
                let mut conclusion = p.conclusion.clone();
                if is_par {
                    let (a, b) = (&p.conclusion[*i], &p.conclusion[*j]);
                    let occ = Occ {
                        formula: Formula::par(a.formula.clone(), b.formula.clone()),
                        atoms: [a.atoms.as_slice(), b.atoms.as_slice()].concat(),
                    };
                    conclusion = p
                        .conclusion
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| k != i && k != j)
                        .map(|(_, o)| o.clone())
                        .collect();
                    conclusion.push(occ);
                    Ok(ProofTree { rule: RuleKind::Par { i: *i, j: *j }, premises: vec![p], conclusion })
                } else {
                    conclusion.swap(*i, *j);
                    Ok(ProofTree { rule: RuleKind::Exchange { i: *i, j: *j }, premises: vec![p], conclusion })
                }
            }
            RawProof::PlusL(added, p) | RawProof::PlusR(added, p) => {
                let left = matches!(raw, RawProof::PlusL(..));
                let p = self.check(p, &child(0))?;
                let Some(a) = p.conclusion.last() else {
                    return Err(err(if left { "plusl" } else { "plusr" }, "premise has an empty conclusion".into()));
                };
                let extra = self.fresh(added);
                let occ = if left {
                    Occ { formula: Formula::plus(a.formula.clone(), added.clone()), atoms: [a.atoms.clone(), extra.atoms].concat() }
                } else {
                    Occ { formula: Formula::plus(added.clone(), a.formula.clone()), atoms: [extra.atoms, a.atoms.clone()].concat() }
                };
                let mut conclusion = p.conclusion[..p.conclusion.len() - 1].to_vec();
                conclusion.push(occ);
                let rule = if left { RuleKind::PlusL { added: added.clone() } } else { RuleKind::PlusR { added: added.clone() } };
                Ok(ProofTree { rule, premises: vec![p], conclusion })
            }
            RawProof::With(l, r) => {
                let l = self.check(l, &child(0))?;
                let r = self.check(r, &child(1))?;
                let (Some(a), Some(b)) = (l.conclusion.last(), r.conclusion.last()) else {
                    return Err(err("with", "premise with an empty conclusion".into()));
                };
                let gl = &l.conclusion[..l.conclusion.len() - 1];
                let gr = &r.conclusion[..r.conclusion.len() - 1];
                if gl.len() != gr.len() {
                    return Err(err("with", "premise contexts differ".into()));
                }
                let mut used = vec![false; gr.len()];
                let mut links = Vec::new();
                for o in gl {
                    let k = (0..gr.len())
                        .find(|&k| !used[k] && gr[k].formula == o.formula)
                        .ok_or_else(|| err("with", format!("{} has no partner in the right context", o.formula)))?;
                    used[k] = true;
                    links.extend(o.atoms.iter().copied().zip(gr[k].atoms.iter().copied()));
                }
                let occ = Occ {
                    formula: Formula::with(a.formula.clone(), b.formula.clone()),
                    atoms: [a.atoms.as_slice(), b.atoms.as_slice()].concat(),
                };
                let mut conclusion = gl.to_vec();
                conclusion.push(occ);
                Ok(ProofTree { rule: RuleKind::With { links }, premises: vec![l, r], conclusion })
            }
            RawProof::Top(seq) => {
                let mut conclusion: Vec<Occ> = seq.iter().map(|f| self.fresh(f)).collect();
                conclusion.push(Occ { formula: Formula::Top, atoms: vec![] });
                Ok(ProofTree { rule: RuleKind::Top, premises: vec![], conclusion })
            }
        }
    }
}

/// Rule check; atom ids are assigned in depth-first order.
pub fn check_proof(raw: &RawProof) -> Result<ProofTree, RuleError> {
    Checker { next_atom: 0 }.check(raw, "$")
}

// ---------------------------------------------------------------------------
// GoI1 interpretation of MLL

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Goi1Interpretation {
    pub pi: PartialInjectionOp,
    pub sigma: PartialInjectionOp,
    pub addresses: BTreeMap<AtomId, Word>,
    pub cut_words: Vec<Word>,
}

impl Goi1Interpretation {
    pub fn cut_projection(&self) -> PartialInjectionOp {
        PartialInjectionOp::Clauses(self.cut_words.iter().map(|w| Clause::new(w.clone(), w.clone())).collect())
    }
}

struct Goi1Parts {
    pi: Vec<Clause>,
    sigma: Vec<Clause>,
    addresses: BTreeMap<AtomId, Word>,
    cut_words: Vec<Word>,
}

fn prefixed(l: Letter, cs: Vec<Clause>) -> Vec<Clause> {
    let w = Word(vec![l]);
    cs.into_iter()
        .map(|c| Clause { target: w.concat(&c.target), source: w.concat(&c.source), weight: c.weight })
        .collect()
}

fn goi1_parts(p: &ProofTree) -> Result<Goi1Parts, LogicError> {
    let r = Word(vec![Letter::R]);
    let l = Word(vec![Letter::L]);
    match &p.rule {
        RuleKind::Ax { .. } => Ok(Goi1Parts {
            pi: vec![Clause::new(l.clone(), r.clone()), Clause::new(r.clone(), l.clone())],
            sigma: vec![],
            addresses: BTreeMap::from([(p.conclusion[0].atoms[0], r), (p.conclusion[1].atoms[0], l)]),
            cut_words: vec![],
        }),
        RuleKind::Par { .. } | RuleKind::Exchange { .. } => goi1_parts(&p.premises[0]),
        RuleKind::Tensor | RuleKind::Cut { .. } => {
            let a = goi1_parts(&p.premises[0])?;
            let b = goi1_parts(&p.premises[1])?;
            let mut pi = prefixed(Letter::R, a.pi);
            pi.extend(prefixed(Letter::L, b.pi));
            let mut sigma = prefixed(Letter::R, a.sigma);
            sigma.extend(prefixed(Letter::L, b.sigma));
            let mut addresses: BTreeMap<AtomId, Word> = a.addresses.into_iter().map(|(k, w)| (k, r.concat(&w))).collect();
            addresses.extend(b.addresses.into_iter().map(|(k, w)| (k, l.concat(&w))));
            let mut cut_words: Vec<Word> = a.cut_words.iter().map(|w| r.concat(w)).collect();
            cut_words.extend(b.cut_words.iter().map(|w| l.concat(w)));
            if let RuleKind::Cut { links, .. } = &p.rule {
                for (x, y) in links {
                    let (px, py) = (addresses[x].clone(), addresses[y].clone());
                    sigma.push(Clause::new(py.clone(), px.clone()));
                    sigma.push(Clause::new(px.clone(), py.clone()));
                    cut_words.push(px);
                    cut_words.push(py);
                }
            }
            Ok(Goi1Parts { pi, sigma, addresses, cut_words })
        }
        other => Err(LogicError::Unsupported(other.name().to_string())),
    }
}

/// `(π•, σπ)` with the address of every atom.
pub fn interpret_mll_goi1(p: &ProofTree) -> Result<Goi1Interpretation, LogicError> {
    let parts = goi1_parts(p)?;
    let build = |cs: Vec<Clause>| {
        PartialInjectionOp::clauses(cs).map_err(|e| LogicError::Exec(ExecError::Interface(e.to_string())))
    };
    Ok(Goi1Interpretation {
        pi: build(parts.pi)?,
        sigma: build(parts.sigma)?,
        addresses: parts.addresses,
        cut_words: parts.cut_words,
    })
}

// ---------------------------------------------------------------------------
// MLL cut elimination

#[derive(Debug, Clone, PartialEq, Eq)]
enum Net {
    Ax { var: String, neg: AtomId, pos: AtomId },
    Tensor { l: Box<Net>, r: Box<Net>, a: AtomId, b: AtomId },
    Par { p: Box<Net>, a: AtomId, b: AtomId },
    Cut { l: Box<Net>, r: Box<Net>, a: AtomId, b: AtomId },
}

fn key(o: &Occ) -> AtomId {
    o.atoms[0]
}

fn to_net(p: &ProofTree) -> Result<Net, LogicError> {
    Ok(match &p.rule {
        RuleKind::Ax { var } => Net::Ax { var: var.clone(), neg: key(&p.conclusion[0]), pos: key(&p.conclusion[1]) },
        RuleKind::Tensor => Net::Tensor {
            l: Box::new(to_net(&p.premises[0])?),
            r: Box::new(to_net(&p.premises[1])?),
            a: key(p.premises[0].conclusion.last().expect("checked")),
            b: key(p.premises[1].conclusion.last().expect("checked")),
        },
        RuleKind::Cut { .. } => Net::Cut {
            l: Box::new(to_net(&p.premises[0])?),
            r: Box::new(to_net(&p.premises[1])?),
            a: key(p.premises[0].conclusion.last().expect("checked")),
            b: key(&p.premises[1].conclusion[0]),
        },
        RuleKind::Par { i, j } => Net::Par {
            p: Box::new(to_net(&p.premises[0])?),
            a: key(&p.premises[0].conclusion[*i]),
            b: key(&p.premises[0].conclusion[*j]),
        },
        RuleKind::Exchange { .. } => to_net(&p.premises[0])?,
        other => return Err(LogicError::Unsupported(other.name().to_string())),
    })
}

fn net_conclusion(n: &Net) -> Vec<Occ> {
    let take = |v: &mut Vec<Occ>, k: AtomId| {
        let i = v.iter().position(|o| key(o) == k).expect("key present");
        v.remove(i)
    };
    match n {
        Net::Ax { var, neg, pos } => vec![
            Occ { formula: Formula::Dual(var.clone()), atoms: vec![*neg] },
            Occ { formula: Formula::Var(var.clone()), atoms: vec![*pos] },
        ],
        Net::Tensor { l, r, a, b } => {
            let (mut cl, mut cr) = (net_conclusion(l), net_conclusion(r));
            let (x, y) = (take(&mut cl, *a), take(&mut cr, *b));
            cl.extend(cr);
            cl.push(Occ { formula: Formula::tensor(x.formula, y.formula), atoms: [x.atoms, y.atoms].concat() });
            cl
        }
        Net::Par { p, a, b } => {
            let mut c = net_conclusion(p);
            let x = take(&mut c, *a);
            let y = take(&mut c, *b);
            c.push(Occ { formula: Formula::par(x.formula, y.formula), atoms: [x.atoms, y.atoms].concat() });
            c
        }
        Net::Cut { l, r, a, b } => {
            let (mut cl, mut cr) = (net_conclusion(l), net_conclusion(r));
            take(&mut cl, *a);
            take(&mut cr, *b);
            cl.extend(cr);
            cl
        }
    }
}

fn rename(n: Net, from: AtomId, to: AtomId) -> Net {
    let f = |x: AtomId| if x == from { to } else { x };
    match n {
        Net::Ax { var, neg, pos } => Net::Ax { var, neg: f(neg), pos: f(pos) },
        Net::Tensor { l, r, a, b } => {
            Net::Tensor { l: Box::new(rename(*l, from, to)), r: Box::new(rename(*r, from, to)), a: f(a), b: f(b) }
        }
        Net::Par { p, a, b } => Net::Par { p: Box::new(rename(*p, from, to)), a: f(a), b: f(b) },
        Net::Cut { l, r, a, b } => {
            Net::Cut { l: Box::new(rename(*l, from, to)), r: Box::new(rename(*r, from, to)), a: f(a), b: f(b) }
        }
    }
}

fn introduces(n: &Net, k: AtomId) -> bool {
    match n {
        Net::Ax { .. } => true,
        Net::Tensor { a, .. } | Net::Par { a, .. } => *a == k,
        Net::Cut { .. } => false,
    }
}

fn has_key(n: &Net, k: AtomId) -> bool {
    net_conclusion(n).iter().any(|o| key(o) == k)
}

/// Cut between cut-free `l` (on key `a`) and cut-free `r` (on key `b`).
fn eliminate(l: Net, r: Net, a: AtomId, b: AtomId) -> Net {
    if let Net::Ax { neg, pos, .. } = &l {
        let other = if *neg == a { *pos } else { *neg };
        return rename(r, b, other);
    }
    if let Net::Ax { neg, pos, .. } = &r {
        let other = if *neg == b { *pos } else { *neg };
        return rename(l, a, other);
    }
    match (introduces(&l, a), introduces(&r, b)) {
        (true, true) => match (l, r) {
            (Net::Tensor { l: l1, r: l2, a: a1, b: b1 }, Net::Par { p, a: a2, b: b2 }) => {
                let inner = eliminate(*l1, *p, a1, a2);
                eliminate(*l2, inner, b1, b2)
            }
            (l @ Net::Par { .. }, r @ Net::Tensor { .. }) => eliminate(r, l, b, a),
            _ => unreachable!("dual principal formulas are a tensor and a par"),
        },
        (false, _) => match l {
            Net::Tensor { l: l1, r: l2, a: x, b: y } => {
                if has_key(&l1, a) {
                    Net::Tensor { l: Box::new(eliminate(*l1, r, a, b)), r: l2, a: x, b: y }
                } else {
                    Net::Tensor { l: l1, r: Box::new(eliminate(*l2, r, a, b)), a: x, b: y }
                }
            }
            Net::Par { p, a: x, b: y } => Net::Par { p: Box::new(eliminate(*p, r, a, b)), a: x, b: y },
            _ => unreachable!("premises are cut-free"),
        },
        (true, false) => eliminate(r, l, b, a),
    }
}

fn normalize_net(n: Net) -> Net {
    match n {
        Net::Ax { .. } => n,
        Net::Tensor { l, r, a, b } => {
            Net::Tensor { l: Box::new(normalize_net(*l)), r: Box::new(normalize_net(*r)), a, b }
        }
        Net::Par { p, a, b } => Net::Par { p: Box::new(normalize_net(*p)), a, b },
        Net::Cut { l, r, a, b } => eliminate(normalize_net(*l), normalize_net(*r), a, b),
    }
}

fn exchange(p: ProofTree, i: usize, j: usize) -> ProofTree {
    if i == j {
        return p;
    }
    let mut conclusion = p.conclusion.clone();
    conclusion.swap(i, j);
    ProofTree { rule: RuleKind::Exchange { i, j }, premises: vec![p], conclusion }
}

fn move_to(p: ProofTree, k: AtomId, pos: usize) -> ProofTree {
    let i = p.conclusion.iter().position(|o| key(o) == k).expect("key present");
    exchange(p, i, pos)
}

fn from_net(n: &Net) -> ProofTree {
    match n {
        Net::Ax { var, .. } => ProofTree { rule: RuleKind::Ax { var: var.clone() }, premises: vec![], conclusion: net_conclusion(n) },
        Net::Tensor { l, r, a, b } => {
            let pl = from_net(l);
            let pl = { let last = pl.conclusion.len() - 1; move_to(pl, *a, last) };
            let pr = from_net(r);
            let pr = { let last = pr.conclusion.len() - 1; move_to(pr, *b, last) };
            let (x, y) = (pl.conclusion.last().unwrap().clone(), pr.conclusion.last().unwrap().clone());
            let mut conclusion = pl.conclusion[..pl.conclusion.len() - 1].to_vec();
            conclusion.extend_from_slice(&pr.conclusion[..pr.conclusion.len() - 1]);
            conclusion.push(Occ { formula: Formula::tensor(x.formula, y.formula), atoms: [x.atoms, y.atoms].concat() });
            ProofTree { rule: RuleKind::Tensor, premises: vec![pl, pr], conclusion }
        }
        Net::Par { p, a, b } => {
            let pp = from_net(p);
            let i = pp.conclusion.iter().position(|o| key(o) == *a).unwrap();
            let j = pp.conclusion.iter().position(|o| key(o) == *b).unwrap();
            let (x, y) = (pp.conclusion[i].clone(), pp.conclusion[j].clone());
            let mut conclusion: Vec<Occ> =
                pp.conclusion.iter().enumerate().filter(|(k, _)| *k != i && *k != j).map(|(_, o)| o.clone()).collect();
            conclusion.push(Occ { formula: Formula::par(x.formula, y.formula), atoms: [x.atoms, y.atoms].concat() });
            ProofTree { rule: RuleKind::Par { i, j }, premises: vec![pp], conclusion }
        }
        Net::Cut { l, r, a, b } => {
            let pl = from_net(l);
            let pl = { let last = pl.conclusion.len() - 1; move_to(pl, *a, last) };
            let pr = move_to(from_net(r), *b, 0);
            let x = pl.conclusion.last().unwrap().clone();
            let links = x.atoms.iter().copied().zip(pr.conclusion[0].atoms.iter().copied()).collect();
            let mut conclusion = pl.conclusion[..pl.conclusion.len() - 1].to_vec();
            conclusion.extend_from_slice(&pr.conclusion[1..]);
            ProofTree { rule: RuleKind::Cut { formula: x.formula, links }, premises: vec![pl, pr], conclusion }
        }
    }
}

/// Cut-free MLL proof of the same sequent; surviving atoms keep their ids.
pub fn normalize_mll(p: &ProofTree) -> Result<ProofTree, LogicError> {
    let n = normalize_net(to_net(p)?);
    let mut out = from_net(&n);
    for (pos, o) in p.conclusion.iter().enumerate() {
        out = move_to(out, key(o), pos);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MllSoundness {
    pub holds: bool,
    pub proof_is_symmetry: bool,
    pub cuts_are_symmetry: bool,
    pub nilpotency_degree: Option<usize>,
    pub execution_clauses: usize,
    pub normal_form_clauses: usize,
}

/// `Ex(π•, σπ)` against the interpretation of the cut-free form, after
/// moving the conclusion atoms to their addresses in the normal form.
pub fn soundness_check_mll(p: &ProofTree) -> Result<MllSoundness, LogicError> {
    let it = interpret_mll_goi1(p)?;
    let degree = match nilpotency(&compose(&it.pi, &it.sigma), None, DEFAULT_BUDGET) {
        Nilpotency::Nilpotent(d) => Some(d),
        _ => None,
    };
    let ex = ex_goi1(&it.pi, &it.sigma, &it.cut_projection())?;
    let nf = normalize_mll(p)?;
    let it2 = interpret_mll_goi1(&nf)?;
    let theta = PartialInjectionOp::Clauses(
        p.conclusion
            .iter()
            .flat_map(|o| o.atoms.iter())
            .map(|id| Clause::new(it2.addresses[id].clone(), it.addresses[id].clone()))
            .collect(),
    );
    let moved = compose(&theta, &compose(&ex, &theta.adjoint()));
    let back = compose(&theta.adjoint(), &compose(&it2.pi, &theta));
    let forward = exact_eq(&moved, &it2.pi).unwrap_or(false);
    let backward = exact_eq(&back, &ex).unwrap_or(false);
    Ok(MllSoundness {
        holds: forward && backward && nf.cut_count() == 0,
        proof_is_symmetry: is_partial_symmetry(&it.pi, 0),
        cuts_are_symmetry: is_partial_symmetry(&it.sigma, 0),
        nilpotency_degree: degree,
        execution_clauses: ex.clause_count().unwrap_or(0),
        normal_form_clauses: it2.pi.clause_count().unwrap_or(0),
    })
}

// ---------------------------------------------------------------------------
// Matricial interpretation

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessSpec {
    pub wager: f64,
    pub scale: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarSpec {
    pub size: usize,
    pub carrier: Vec<Label>,
    pub pos: Vec<WitnessSpec>,
    pub neg: Vec<WitnessSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationBasis {
    pub vars: BTreeMap<String, VarSpec>,
}

/// Primitive carriers start here, far above the labels used by plans.
pub const PRIMITIVE_BASE: Label = 1 << 30;

impl InterpretationBasis {
    /// Assign pairwise disjoint primitive carriers in name order.
    pub fn new(specs: BTreeMap<String, (usize, Vec<WitnessSpec>, Vec<WitnessSpec>)>) -> Self {
        let mut next = PRIMITIVE_BASE;
        let vars = specs
            .into_iter()
            .map(|(x, (size, pos, neg))| {
                let carrier = (next..next + size as Label).collect();
                next += size as Label;
                (x, VarSpec { size, carrier, pos, neg })
            })
            .collect();
        Self { vars }
    }

    pub fn spec(&self, x: &str) -> Result<&VarSpec, LogicError> {
        self.vars.get(x).ok_or_else(|| LogicError::MissingVariable(x.to_string()))
    }

    /// Witness project on the primitive carrier of `x`.
    pub fn witness(&self, x: &str, dual: bool, i: usize) -> Result<Project, LogicError> {
        let v = self.spec(x)?;
        let w = if dual { v.neg[i] } else { v.pos[i] };
        let op = random_hermitian(&mut rng(w.seed), &v.carrier, w.scale);
        Ok(Project::new(Measure::Finite(w.wager), DialectalOperator::plain(&op))?)
    }

    /// Every positive witness must be orthogonal to every negative one.
    pub fn validate(&self) -> Result<(), LogicError> {
        for (x, v) in &self.vars {
            if v.size == 0 {
                return Err(LogicError::Basis(format!("{x} has an empty carrier")));
            }
            for i in 0..v.pos.len() {
                for j in 0..v.neg.len() {
                    let s = sca_mat(&self.witness(x, false, i)?, &self.witness(x, true, j)?)
                        .map_err(|e| LogicError::Basis(e.to_string()))?;
                    let verdict = orthogonality(&s);
                    if !verdict.orthogonal || verdict.note.is_some() {
                        return Err(LogicError::Basis(format!("{x}: witnesses pos {i} and neg {j} give {s}")));
                    }
                }
            }
        }
        Ok(())
    }
}

fn number(r: &Ref<'_>) -> Result<f64, SyntaxError> {
    r.value().as_f64().ok_or_else(|| syntax_at(r, "expected a number"))
}

/// Records `(X size (pos (wit wager scale seed) ...) (neg ...))`.
pub fn parse_basis(text: &str) -> Result<InterpretationBasis, LogicError> {
    let mut parser = lexpr::Parser::from_str(text);
    let mut specs = BTreeMap::new();
    for d in parser.datum_iter() {
        let d = d.map_err(from_lexpr)?;
        let r = d.as_ref();
        let items = list_items(&r).ok_or_else(|| syntax_at(&r, "expected a variable record"))?;
        if items.len() < 2 {
            return Err(syntax_at(&r, "a record needs a variable and a carrier size").into());
        }
        let name = items[0].value().as_symbol().ok_or_else(|| syntax_at(&items[0], "expected a variable"))?;
        let size = items[1].value().as_u64().ok_or_else(|| syntax_at(&items[1], "expected a carrier size"))? as usize;
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for group in &items[2..] {
            let g = list_items(group).ok_or_else(|| syntax_at(group, "expected (pos ...) or (neg ...)"))?;
            let head = g.first().and_then(|h| h.value().as_symbol());
            let target = match head {
                Some("pos") => &mut pos,
                Some("neg") => &mut neg,
                _ => return Err(syntax_at(group, "expected (pos ...) or (neg ...)").into()),
            };
            for w in &g[1..] {
                let f = list_items(w).ok_or_else(|| syntax_at(w, "expected (wit wager scale seed)"))?;
                if f.len() != 4 || f[0].value().as_symbol() != Some("wit") {
                    return Err(syntax_at(w, "expected (wit wager scale seed)").into());
                }
                let seed = f[3].value().as_u64().ok_or_else(|| syntax_at(&f[3], "expected a seed"))?;
                target.push(WitnessSpec { wager: number(&f[1])?, scale: number(&f[2])?, seed });
            }
        }
        if specs.insert(name.to_string(), (size, pos, neg)).is_some() {
            return Err(LogicError::Basis(format!("{name} is declared twice")));
        }
    }
    Ok(InterpretationBasis::new(specs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationPlan {
    pub atoms: BTreeMap<AtomId, Vec<Label>>,
    pub delocations: BTreeMap<AtomId, Delocation>,
}

impl LocationPlan {
    pub fn carrier_of(&self, atoms: &[AtomId]) -> Vec<Label> {
        let mut c: Vec<Label> = atoms.iter().flat_map(|a| self.atoms[a].iter().copied()).collect();
        c.sort_unstable();
        c
    }

    pub fn sequent_carrier(&self, seq: &[Occ]) -> Vec<Label> {
        self.carrier_of(&seq.iter().flat_map(|o| o.atoms.iter().copied()).collect::<Vec<_>>())
    }
}

fn collect_links(p: &ProofTree, out: &mut Vec<(AtomId, AtomId)>) {
    match &p.rule {
        RuleKind::Cut { links, .. } | RuleKind::With { links } => out.extend(links),
        _ => {}
    }
    for q in &p.premises {
        collect_links(q, out);
    }
}

fn find(parent: &mut BTreeMap<AtomId, AtomId>, x: AtomId) -> AtomId {
    let p = parent[&x];
    if p == x {
        return x;
    }
    let r = find(parent, p);
    parent.insert(x, r);
    r
}

/// Atoms joined by a cut or by the shared context of a with rule get the same
/// locations; classes are numbered by their smallest atom id.
pub fn allocate_locations(p: &ProofTree, basis: &InterpretationBasis) -> Result<LocationPlan, LogicError> {
    let vars = p.atom_vars();
    let mut parent: BTreeMap<AtomId, AtomId> = vars.keys().map(|&a| (a, a)).collect();
    let mut links = Vec::new();
    collect_links(p, &mut links);
    for (x, y) in links {
        let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
        if rx != ry {
            parent.insert(rx.max(ry), rx.min(ry));
        }
    }
    let mut class_labels: BTreeMap<AtomId, Vec<Label>> = BTreeMap::new();
    let mut next: Label = 0;
    let mut plan = LocationPlan { atoms: BTreeMap::new(), delocations: BTreeMap::new() };
    for (&a, (x, _)) in &vars {
        let spec = basis.spec(x)?;
        let root = find(&mut parent, a);
        let labels = class_labels
            .entry(root)
            .or_insert_with(|| {
                let l: Vec<Label> = (next..next + spec.size as Label).collect();
                next += spec.size as Label;
                l
            })
            .clone();
        plan.delocations.insert(a, Delocation::new(spec.carrier.clone(), labels.clone())?);
        plan.atoms.insert(a, labels);
    }
    Ok(plan)
}

/// Change applied while interpreting, for mutation testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mutation {
    /// Negate one weight of the fax of the `n`-th axiom (depth-first order).
    FlipFaxSign(usize),
}

/// The two premises of a cut and the result of plugging them.
#[derive(Debug, Clone, PartialEq)]
pub struct CutRecord {
    pub path: String,
    pub left: Project,
    pub right: Project,
    pub plugged: Project,
}

struct Interpreter<'a> {
    plan: &'a LocationPlan,
    mutation: Option<Mutation>,
    axioms: usize,
    cuts: Vec<CutRecord>,
}

fn interpret_node(p: &ProofTree, path: &str, st: &mut Interpreter<'_>) -> Result<Project, LogicError> {
    let plan = st.plan;
    let mutation = st.mutation;
    let sub = |i: usize, st: &mut Interpreter<'_>| interpret_node(&p.premises[i], &format!("{path}.{i}"), st);
    Ok(match &p.rule {
        RuleKind::Ax { .. } => {
            let (neg, pos) = (key(&p.conclusion[0]), key(&p.conclusion[1]));
            let fax = build_fax(&plan.delocations[&neg], &plan.delocations[&pos])?;
            let n = st.axioms;
            st.axioms += 1;
            match mutation {
                Some(Mutation::FlipFaxSign(k)) if k == n => {
                    flip_entry(&fax, 0, plan.atoms[&neg][0], plan.atoms[&pos][0])?
                }
                _ => fax,
            }
        }
        RuleKind::Cut { .. } => {
            let a = sub(0, st)?;
            let b = sub(1, st)?;
            let plugged = plug_project(&a, &b)?;
            st.cuts.push(CutRecord { path: path.to_string(), left: a, right: b, plugged: plugged.clone() });
            plugged
        }
        RuleKind::Tensor => {
            let a = sub(0, st)?;
            let b = sub(1, st)?;
            tensor_project(&a, &b)?
        }
        RuleKind::Par { .. } | RuleKind::Exchange { .. } => sub(0, st)?,
        RuleKind::PlusL { .. } | RuleKind::PlusR { .. } => {
            let a = sub(0, st)?;
            let occ = p.conclusion.last().expect("checked");
            let kept: BTreeSet<Label> = a.carrier.iter().copied().collect();
            let added: Vec<Label> = plan.carrier_of(&occ.atoms).into_iter().filter(|l| !kept.contains(l)).collect();
            extend_carrier(&a, &added)?
        }
        RuleKind::With { .. } => {
            let a = sub(0, st)?;
            let b = sub(1, st)?;
            with_bar(&a, &b, &Delocation::identity(&a.carrier), &Delocation::identity(&b.carrier))?
        }
        RuleKind::Top => Project::zero_on(&plan.sequent_carrier(&p.conclusion)),
    })
}

pub fn interpret_mall_matricial(p: &ProofTree, basis: &InterpretationBasis) -> Result<Project, LogicError> {
    interpret_mall_matricial_with(p, basis, None)
}

pub fn interpret_mall_matricial_with(
    p: &ProofTree,
    basis: &InterpretationBasis,
    mutation: Option<Mutation>,
) -> Result<Project, LogicError> {
    Ok(interpret_recording(p, basis, mutation)?.0)
}

/// Interpretation together with every cut met on the way.
pub fn interpret_recording(
    p: &ProofTree,
    basis: &InterpretationBasis,
    mutation: Option<Mutation>,
) -> Result<(Project, Vec<CutRecord>), LogicError> {
    let plan = allocate_locations(p, basis)?;
    let mut st = Interpreter { plan: &plan, mutation, axioms: 0, cuts: Vec::new() };
    let a = interpret_node(p, "$", &mut st)?;
    Ok((a, st.cuts))
}

/// Number of witnesses kept for each composite formula.
pub const WITNESS_CAP: usize = 12;

/// Pairs `(i, j)` in order of `i + j`, at most `cap` of them.
fn diagonal_pairs(na: usize, nb: usize, cap: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if na == 0 || nb == 0 {
        return out;
    }
    for s in 0..na + nb - 1 {
        for i in 0..=s {
            let j = s - i;
            if i < na && j < nb {
                out.push((i, j));
                if out.len() == cap {
                    return out;
                }
            }
        }
    }
    out
}

/// Witnesses for an occurrence of `f` whose leaves are `atoms`.
pub fn formula_witnesses(
    f: &Formula,
    atoms: &[AtomId],
    plan: &LocationPlan,
    basis: &InterpretationBasis,
) -> Result<Vec<Project>, LogicError> {
    use Formula::*;
    match f {
        Var(x) | Dual(x) => {
            let v = basis.spec(x)?;
            let dual = matches!(f, Dual(_));
            let n = if dual { v.neg.len() } else { v.pos.len() };
            (0..n)
                .map(|i| Ok(plan.delocations[&atoms[0]].apply(&basis.witness(x, dual, i)?)?))
                .collect()
        }
        Tensor(a, b) | Par(a, b) | With(a, b) | Plus(a, b) => {
            let k = a.atom_count();
            let (ta, tb) = (&atoms[..k], &atoms[k..]);
            let wa = formula_witnesses(a, ta, plan, basis)?;
            let wb = formula_witnesses(b, tb, plan, basis)?;
            let (ca, cb) = (plan.carrier_of(ta), plan.carrier_of(tb));
            match f {
                Tensor(..) | Par(..) => diagonal_pairs(wa.len(), wb.len(), WITNESS_CAP)
                    .into_iter()
                    .map(|(i, j)| Ok(tensor_project(&wa[i], &wb[j])?))
                    .collect(),
                Plus(..) => {
                    let mut out = Vec::new();
                    for x in &wa {
                        out.push(extend_carrier(x, &cb)?);
                    }
                    for y in &wb {
                        out.push(extend_carrier(y, &ca)?);
                    }
                    out.truncate(WITNESS_CAP);
                    Ok(out)
                }
                _ => diagonal_pairs(wa.len(), wb.len(), WITNESS_CAP)
                    .into_iter()
                    .map(|(i, j)| Ok(sum_lambda(&extend_carrier(&wa[i], &cb)?, 1.0, &extend_carrier(&wb[j], &ca)?)?))
                    .collect(),
            }
        }
        Top => Ok(vec![Project::scalar(1.0)]),
        Zero => Ok(vec![]),
    }
}

/// Witnesses of the dual of `⊢ Γ`: tensors of witnesses of each `Γᵢ^⊥`.
pub fn dual_witnesses(
    p: &ProofTree,
    plan: &LocationPlan,
    basis: &InterpretationBasis,
) -> Result<ConductWitnessSet, LogicError> {
    let mut acc = vec![Project::scalar(0.0)];
    for o in &p.conclusion {
        let w = formula_witnesses(&o.formula.dual(), &o.atoms, plan, basis)?;
        acc = diagonal_pairs(acc.len(), w.len(), WITNESS_CAP)
            .into_iter()
            .map(|(i, j)| tensor_project(&acc[i], &w[j]))
            .collect::<Result<_, _>>()?;
    }
    Ok(ConductWitnessSet::new(&plan.sequent_carrier(&p.conclusion), acc, Polarity::Dual)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MallSoundness {
    pub promising: PromisingReport,
    pub witnesses: Vec<WitnessRow>,
    pub holds: bool,
}

/// The interpretation is promising and orthogonal to every dual witness.
pub fn mall_soundness(
    p: &ProofTree,
    basis: &InterpretationBasis,
    mutation: Option<Mutation>,
) -> Result<(Project, MallSoundness), LogicError> {
    let plan = allocate_locations(p, basis)?;
    let a = interpret_mall_matricial_with(p, basis, mutation)?;
    let promising = is_promising(&a);
    let dual = dual_witnesses(p, &plan, basis)?;
    let witnesses = orthogonal_witness_suite(&a, &dual)?;
    let holds = promising.all() && witnesses.iter().all(|w| w.verdict.orthogonal);
    Ok((a, MallSoundness { promising, witnesses, holds }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis() -> InterpretationBasis {
        parse_basis(
            "(X1 2 (pos (wit 1.0 0.3 1) (wit 0.5 0.4 2)) (neg (wit 1.0 0.3 3)))
             (X2 1 (pos (wit 1.0 0.2 4)) (neg (wit 1.0 0.2 5) (wit 2.0 0.5 6)))",
        )
        .unwrap()
    }

    #[test]
    fn formula_parsing() {
        let f = parse_formula("(tensor X1 (dual X2))").unwrap();
        assert_eq!(f, Formula::tensor(Formula::var("X1"), Formula::dual_var("X2")));
        assert_eq!(f.dual(), Formula::par(Formula::dual_var("X1"), Formula::var("X2")));
        assert_eq!(f.dual().dual(), f);
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
        assert!(parse_formula("(dual (tensor X Y))").is_err());
        let e = parse_formula("(tensor X1\n  (foo X2 X3))").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
    }

    #[test]
    fn proof_checking() {
        let p = parse_proof("(ax X1)").unwrap();
        assert_eq!(p.conclusion_formulas(), vec![Formula::dual_var("X1"), Formula::var("X1")]);
        let c = parse_proof("(cut X1 (ax X1) (ax X1))").unwrap();
        assert_eq!(c.conclusion_formulas(), vec![Formula::dual_var("X1"), Formula::var("X1")]);
        assert_eq!(c.cut_count(), 1);
        let w = parse_proof("(with (ax A) (ax B))");
        assert!(matches!(w, Err(LogicError::Rule(_))));
        let w = parse_proof("(with (plusl B (ax A)) (plusr C (ax A)))").unwrap();
        assert_eq!(w.conclusion.len(), 2);
        let bad = parse_proof("(tensor (ax X1) (par 0 0 (ax X1)))").unwrap_err();
        match bad {
            LogicError::Rule(r) => assert_eq!((r.rule.as_str(), r.path.as_str()), ("par", "$.1")),
            e => panic!("{e}"),
        }
        assert!(matches!(parse_proof("(ax X1"), Err(LogicError::Syntax(_))));
        let round = parse_proof(&w.to_raw().to_string()).unwrap();
        assert_eq!(round, w);
    }

    #[test]
    fn goi1_clauses() {
        let p = parse_proof("(ax X1)").unwrap();
        let it = interpret_mll_goi1(&p).unwrap();
        assert!(exact_eq(&it.pi, &PartialInjectionOp::Clauses(vec![
            Clause::new(Word::parse("L").unwrap(), Word::parse("R").unwrap()),
            Clause::new(Word::parse("R").unwrap(), Word::parse("L").unwrap()),
        ]))
        .unwrap());
        assert!(it.sigma.is_zero());
        let q = parse_proof("(par 0 1 (ax X1))").unwrap();
        assert_eq!(interpret_mll_goi1(&q).unwrap(), it);
        let c = interpret_mll_goi1(&parse_proof("(cut X1 (ax X1) (ax X1))").unwrap()).unwrap();
        assert_eq!(c.sigma.clause_count(), Some(2));
        assert!(is_partial_symmetry(&c.sigma, 0));
        assert!(interpret_mll_goi1(&parse_proof("(top ())").unwrap()).is_err());
    }

    #[test]
    fn cut_elimination() {
        let c = parse_proof("(cut X1 (ax X1) (ax X1))").unwrap();
        let n = normalize_mll(&c).unwrap();
        assert!(matches!(n.rule, RuleKind::Ax { .. }));
        assert_eq!(n.conclusion, c.conclusion);
        let free = parse_proof("(tensor (ax X1) (ax X2))").unwrap();
        assert_eq!(normalize_mll(&free).unwrap(), free);
        let principal = parse_proof(
            "(cut (tensor X1 X2) (tensor (ax X1) (ax X2)) (ex 0 1 (par 0 1 (tensor (ax X1) (ax X2)))))",
        );
        let principal = principal.unwrap();
        let n = normalize_mll(&principal).unwrap();
        assert_eq!(n.cut_count(), 0);
        assert_eq!(n.conclusion, principal.conclusion);
        assert!(check_proof(&n.to_raw()).is_ok());
        for p in [&c, &principal] {
            let s = soundness_check_mll(p).unwrap();
            assert!(s.holds, "{s:?}");
        }
    }

    #[test]
    fn plans_are_disjoint_and_deterministic() {
        let b = basis();
        let p = parse_proof("(tensor (ax X1) (ax X2))").unwrap();
        let plan = allocate_locations(&p, &b).unwrap();
        let all: Vec<Label> = plan.atoms.values().flatten().copied().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all.iter().collect::<BTreeSet<_>>().len(), 6);
        assert_eq!(allocate_locations(&p, &b).unwrap(), plan);
        let missing = parse_proof("(ax Y)").unwrap();
        assert_eq!(allocate_locations(&missing, &b), Err(LogicError::MissingVariable("Y".into())));
    }

    #[test]
    fn matricial_examples() {
        let b = basis();
        b.validate().unwrap();
        let (a, s) = mall_soundness(&parse_proof("(ax X1)").unwrap(), &b, None).unwrap();
        assert!(s.holds, "{s:?}");
        assert_eq!(a.carrier.len(), 4);
        let (t, s) = mall_soundness(&parse_proof("(top (X1))").unwrap(), &b, None).unwrap();
        assert!(s.holds);
        assert!(t.op.is_exact_zero());
        let (_, s) = mall_soundness(&parse_proof("(with (ax X1) (ax X1))").unwrap(), &b, None).unwrap();
        assert!(s.holds, "{s:?}");
        let p = parse_proof("(with (plusl X2 (ax X1)) (plusr X1 (ax X1)))").unwrap();
        let (_, s) = mall_soundness(&p, &b, None).unwrap();
        assert!(s.holds, "{s:?}");
        let (_, s) = mall_soundness(&parse_proof("(ax X1)").unwrap(), &b, Some(Mutation::FlipFaxSign(0))).unwrap();
        assert!(!s.promising.symmetry);
    }
}
