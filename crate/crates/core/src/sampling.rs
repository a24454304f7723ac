//! Seeded random operators.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c, cr, DenseOperator, Label, C64};
use crate::measurement::{dlabel, Dialect, DialectalOperator, PseudoTrace};

pub const DEFAULT_SEED: u64 = 0xC0FFEE;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_like(rng: &mut ChaCha8Rng) -> f64 {
    // sum of uniforms is enough here; only genericity matters
    (0..4).map(|_| rng.gen_range(-1.0..1.0)).sum::<f64>() / 2.0
}

pub fn random_matrix(rng: &mut ChaCha8Rng, carrier: &[Label]) -> DenseOperator {
    let n = carrier.len();
    let data = (0..n * n).map(|_| c(gaussian_like(rng), gaussian_like(rng))).collect();
    DenseOperator::new(carrier.to_vec(), data).expect("square")
}

pub fn random_real_matrix(rng: &mut ChaCha8Rng, carrier: &[Label]) -> DenseOperator {
    let n = carrier.len();
    let data = (0..n * n).map(|_| cr(gaussian_like(rng))).collect();
    DenseOperator::new(carrier.to_vec(), data).expect("square")
}

/// Hermitian operator with operator norm exactly `scale` (zero if the carrier
/// is empty).
pub fn random_hermitian(rng: &mut ChaCha8Rng, carrier: &[Label], scale: f64) -> DenseOperator {
    let g = random_matrix(rng, carrier);
    let h = g.add(&g.adjoint()).expect("same carrier").scale(cr(0.5));
    let norm = h.operator_norm().expect("finite");
    if norm == 0.0 {
        return h;
    }
    h.scale(cr(scale / norm))
}

/// Real symmetric operator with operator norm exactly `scale`.
pub fn random_real_symmetric(rng: &mut ChaCha8Rng, carrier: &[Label], scale: f64) -> DenseOperator {
    let g = random_real_matrix(rng, carrier);
    let h = g.add(&g.adjoint()).expect("same carrier").scale(cr(0.5));
    let norm = h.operator_norm().expect("finite");
    if norm == 0.0 {
        return h;
    }
    h.scale(cr(scale / norm))
}

/// Operator with operator norm exactly `scale`.
pub fn random_contraction(rng: &mut ChaCha8Rng, carrier: &[Label], scale: f64) -> DenseOperator {
    let g = random_matrix(rng, carrier);
    let norm = g.operator_norm().expect("finite");
    if norm == 0.0 {
        return g;
    }
    g.scale(cr(scale / norm))
}

/// Real operator with operator norm exactly `scale`.
pub fn random_real_contraction(rng: &mut ChaCha8Rng, carrier: &[Label], scale: f64) -> DenseOperator {
    let g = random_real_matrix(rng, carrier);
    let norm = g.operator_norm().expect("finite");
    if norm == 0.0 {
        return g;
    }
    g.scale(cr(scale / norm))
}

/// Dialect with `1..=max_blocks` blocks of size `1..=max_size`.
pub fn random_dialect(rng: &mut ChaCha8Rng, max_blocks: usize, max_size: usize) -> Dialect {
    let nb = rng.gen_range(1..=max_blocks);
    Dialect::new((0..nb).map(|_| rng.gen_range(1..=max_size)).collect()).expect("nonempty blocks")
}

/// Positive weights in `[0.25, 1]`.
pub fn random_trace(rng: &mut ChaCha8Rng, d: &Dialect) -> PseudoTrace {
    PseudoTrace::new(d.blocks.iter().map(|_| rng.gen_range(0.25..=1.0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Hermitian,
    Real,
    General,
}

/// Dialectal operator whose blocks have operator norm `scale`.
pub fn random_dialectal(
    rng: &mut ChaCha8Rng,
    carrier: &[Label],
    dialect: &Dialect,
    trace: &PseudoTrace,
    scale: f64,
    shape: Shape,
) -> DialectalOperator {
    let blocks = dialect
        .blocks
        .iter()
        .map(|&k| {
            let labels: Vec<Label> = carrier.iter().flat_map(|&l| (0..k).map(move |a| dlabel(l, a))).collect();
            match shape {
                Shape::Hermitian => random_hermitian(rng, &labels, scale),
                Shape::Real => random_real_contraction(rng, &labels, scale),
                Shape::General => random_contraction(rng, &labels, scale),
            }
        })
        .collect();
    DialectalOperator::new(carrier.to_vec(), dialect.clone(), trace.clone(), blocks).expect("consistent shapes")
}

/// Unitary from the QR factorisation of a random matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DenseOperator {
    let g = random_matrix(rng, &(0..n as Label).collect::<Vec<_>>());
    let m = DMatrix::from_row_slice(n, n, g.entries());
    let q = m.qr().q();
    let data: Vec<C64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| q[(i, j)]).collect();
    DenseOperator::positional(n, data).expect("square")
}

/// Random matrix shifted away from singularity: `G + (‖G‖ + 1)·e^{iθ}`.
pub fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> DenseOperator {
    let carrier: Vec<Label> = (0..n as Label).collect();
    let g = random_matrix(rng, &carrier);
    let s = g.operator_norm().expect("finite") + 1.0;
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    g.add(&DenseOperator::identity(carrier).scale(C64::from_polar(s, theta))).expect("same carrier")
}

/// `P T P⁻¹` with `T` strictly upper triangular.
pub fn random_nilpotent(rng: &mut ChaCha8Rng, n: usize) -> DenseOperator {
    let mut t = DenseOperator::zeros((0..n as Label).collect());
    for i in 0..n {
        for j in i + 1..n {
            t.set(i, j, c(gaussian_like(rng), gaussian_like(rng)));
        }
    }
    let p = random_invertible(rng, n);
    p.mat_mul(&t).and_then(|pt| pt.mat_mul(&p.inverse()?)).expect("invertible")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_shaped() {
        let a = random_hermitian(&mut rng(7), &[0, 1, 2], 0.3);
        let b = random_hermitian(&mut rng(7), &[0, 1, 2], 0.3);
        assert_eq!(a, b);
        assert!(a.is_hermitian(1e-12));
        assert!((a.operator_norm().unwrap() - 0.3).abs() < 1e-9);
        let u = random_unitary(&mut rng(1), 4);
        let uu = u.mat_mul(&u.adjoint()).unwrap();
        assert!(uu.max_abs_diff(&DenseOperator::identity((0..4).collect())).unwrap() < 1e-12);
        let n = random_nilpotent(&mut rng(2), 4);
        let n4 = n.mat_mul(&n).unwrap().mat_mul(&n).unwrap().mat_mul(&n).unwrap();
        assert!(n4.max_abs() < 1e-8 * (1.0 + n.max_abs().powi(4)));
    }
}
