//! Bundled proof corpora and interpretation basis.

pub const BASIS: &str = include_str!("../corpus/basis.sexp");

pub const MLL: &[(&str, &str)] = &[
    ("axiom", include_str!("../corpus/mll/axiom.proof")),
    ("commuting_cut", include_str!("../corpus/mll/commuting_cut.proof")),
    ("cut_axioms", include_str!("../corpus/mll/cut_axioms.proof")),
    ("cut_balanced_3", include_str!("../corpus/mll/cut_balanced_3.proof")),
    ("cut_balanced_4", include_str!("../corpus/mll/cut_balanced_4.proof")),
    ("cut_chain_2", include_str!("../corpus/mll/cut_chain_2.proof")),
    ("cut_chain_3", include_str!("../corpus/mll/cut_chain_3.proof")),
    ("eta_cut", include_str!("../corpus/mll/eta_cut.proof")),
    ("eta_cut_chain", include_str!("../corpus/mll/eta_cut_chain.proof")),
    ("par_axiom", include_str!("../corpus/mll/par_axiom.proof")),
    ("parallel_cuts", include_str!("../corpus/mll/parallel_cuts.proof")),
    ("principal_par", include_str!("../corpus/mll/principal_par.proof")),
    ("principal_tensor", include_str!("../corpus/mll/principal_tensor.proof")),
    ("tensor_axioms", include_str!("../corpus/mll/tensor_axioms.proof")),
];

pub const MALL: &[(&str, &str)] = &[
    ("axiom", include_str!("../corpus/mall/axiom.proof")),
    ("cut_axioms", include_str!("../corpus/mall/cut_axioms.proof")),
    ("cut_top", include_str!("../corpus/mall/cut_top.proof")),
    ("cut_with_plus", include_str!("../corpus/mall/cut_with_plus.proof")),
    ("eta_tensor", include_str!("../corpus/mall/eta_tensor.proof")),
    ("plus_cut_with", include_str!("../corpus/mall/plus_cut_with.proof")),
    ("plus_left", include_str!("../corpus/mall/plus_left.proof")),
    ("plus_right", include_str!("../corpus/mall/plus_right.proof")),
    ("principal_tensor", include_str!("../corpus/mall/principal_tensor.proof")),
    ("tensor_axioms", include_str!("../corpus/mall/tensor_axioms.proof")),
    ("top", include_str!("../corpus/mall/top.proof")),
    ("with_axioms", include_str!("../corpus/mall/with_axioms.proof")),
    ("with_plus", include_str!("../corpus/mall/with_plus.proof")),
    ("with_tensor", include_str!("../corpus/mall/with_tensor.proof")),
    ("with_top", include_str!("../corpus/mall/with_top.proof")),
];
