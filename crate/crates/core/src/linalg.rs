//! Dense complex matrices labelled by carrier locations.
//!
//! Entries are stored row-major. Rows and columns follow the order of the
//! carrier labels; operations that combine two operators align them by label.

use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;
pub type Label = u64;

/// Tolerance for determinant identities.
pub const DET_TOL: f64 = 1e-8;

const DEFAULT_TAU: f64 = 1e-9;

/// Structural tolerance, overridable through the `GOI_TOL` environment variable.
pub fn tau_num() -> f64 {
    static TAU: OnceLock<f64> = OnceLock::new();
    *TAU.get_or_init(|| {
        std::env::var("GOI_TOL")
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|t| t.is_finite() && *t > 0.0)
            .unwrap_or(DEFAULT_TAU)
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("matrix is singular")]
    Singular,
    #[error("invalid operator: {0}")]
    Invalid(String),
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseOperator {
    carrier: Vec<Label>,
    data: Vec<C64>,
}

/// Weight attached to a contiguous diagonal block, used by weighted traces and
/// determinants. The block trace is normalized, so a block of dimension `dim`
/// with weight `w` contributes `w / dim * trace`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockWeight {
    pub dim: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Largest singular value.
    pub norm: f64,
    /// Best upper estimate of the spectral radius.
    pub spectral_radius: f64,
    /// Certified lower bound.
    pub lower: f64,
    /// Certified upper bound (monotone Gelfand bound).
    pub upper: f64,
    /// Width of the certified interval.
    pub bound: f64,
    /// Some power of the matrix is exactly zero.
    pub exact_zero: bool,
    pub note: String,
}

/// Position of the spectral radius relative to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitGate {
    Below,
    AtLeast,
    Straddles,
}

impl SpectralReport {
    pub fn gate(&self) -> UnitGate {
        if self.upper < 1.0 {
            UnitGate::Below
        } else if self.lower >= 1.0 - 1e-12 {
            UnitGate::AtLeast
        } else {
            UnitGate::Straddles
        }
    }
}

impl DenseOperator {
    pub fn new(carrier: Vec<Label>, data: Vec<C64>) -> Result<Self, LinalgError> {
        let n = carrier.len();
        if data.len() != n * n {
            return Err(LinalgError::Invalid(format!(
                "expected {} entries for carrier of size {}, got {}",
                n * n,
                n,
                data.len()
            )));
        }
        let distinct: BTreeSet<_> = carrier.iter().collect();
        if distinct.len() != n {
            return Err(LinalgError::Invalid("duplicate carrier label".into()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::Invalid("non-finite entry".into()));
        }
        Ok(Self { carrier, data })
    }

    /// Carrier `0..n`.
    pub fn positional(n: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        Self::new((0..n as Label).collect(), data)
    }

    pub fn from_rows(carrier: Vec<Label>, rows: &[Vec<C64>]) -> Result<Self, LinalgError> {
        let n = carrier.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(LinalgError::Invalid("rows do not form a square matrix".into()));
        }
        Self::new(carrier, rows.iter().flatten().copied().collect())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|&x| cr(x)).collect()).collect();
        Self::from_rows((0..n as Label).collect(), &rows)
    }

    pub fn zeros(carrier: Vec<Label>) -> Self {
        let n = carrier.len();
        Self { carrier, data: vec![C64::default(); n * n] }
    }

    pub fn identity(carrier: Vec<Label>) -> Self {
        let mut m = Self::zeros(carrier);
        for i in 0..m.dim() {
            m.set(i, i, cr(1.0));
        }
        m
    }

    pub fn diagonal(carrier: Vec<Label>, diag: &[C64]) -> Result<Self, LinalgError> {
        if diag.len() != carrier.len() {
            return Err(LinalgError::Invalid("diagonal length differs from carrier".into()));
        }
        let mut m = Self::zeros(carrier);
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.carrier.len()
    }

    pub fn carrier(&self) -> &[Label] {
        &self.carrier
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        let n = self.dim();
        self.data[i * n + j] = z;
    }

    pub fn position(&self, label: Label) -> Option<usize> {
        self.carrier.iter().position(|&l| l == label)
    }

    pub fn relabel(&self, carrier: Vec<Label>) -> Result<Self, LinalgError> {
        Self::new(carrier, self.data.clone())
    }

    /// Reorder rows and columns to follow `carrier`, which must be a
    /// permutation of the current carrier.
    pub fn align_to(&self, carrier: &[Label]) -> Result<Self, LinalgError> {
        if carrier == self.carrier.as_slice() {
            return Ok(self.clone());
        }
        if carrier.len() != self.dim() {
            return Err(LinalgError::CarrierMismatch(format!(
                "sizes {} and {}",
                self.dim(),
                carrier.len()
            )));
        }
        let index: HashMap<Label, usize> =
            self.carrier.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let perm: Vec<usize> = carrier
            .iter()
            .map(|l| {
                index
                    .get(l)
                    .copied()
                    .ok_or_else(|| LinalgError::CarrierMismatch(format!("label {l} not in carrier")))
            })
            .collect::<Result<_, _>>()?;
        let n = self.dim();
        let mut data = Vec::with_capacity(n * n);
        for &pi in &perm {
            for &pj in &perm {
                data.push(self.get(pi, pj));
            }
        }
        Self::new(carrier.to_vec(), data)
    }

    fn aligned(&self, other: &Self) -> Result<Self, LinalgError> {
        other.align_to(&self.carrier)
    }

    pub fn mat_mul(&self, other: &Self) -> Result<Self, LinalgError> {
        let b = self.aligned(other)?;
        let n = self.dim();
        let mut data = vec![C64::default(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::default() {
                    continue;
                }
                let row = &b.data[k * n..(k + 1) * n];
                let out = &mut data[i * n..(i + 1) * n];
                for (o, &x) in out.iter_mut().zip(row) {
                    *o += a * x;
                }
            }
        }
        Ok(Self { carrier: self.carrier.clone(), data })
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        let b = self.aligned(other)?;
        let data = self.data.iter().zip(&b.data).map(|(x, y)| x + y).collect();
        Ok(Self { carrier: self.carrier.clone(), data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        let b = self.aligned(other)?;
        let data = self.data.iter().zip(&b.data).map(|(x, y)| x - y).collect();
        Ok(Self { carrier: self.carrier.clone(), data })
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { carrier: self.carrier.clone(), data: self.data.iter().map(|x| x * z).collect() }
    }

    /// `1 - self`.
    pub fn one_minus(&self) -> Self {
        let mut m = self.scale(cr(-1.0));
        for i in 0..m.dim() {
            let d = m.get(i, i);
            m.set(i, i, d + 1.0);
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim();
        let mut data = vec![C64::default(); n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        Self { carrier: self.carrier.clone(), data }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Sum of normalized block traces, blocks taken contiguously along the diagonal.
    pub fn weighted_trace(&self, weights: &[BlockWeight]) -> Result<C64, LinalgError> {
        check_blocks(self.dim(), weights)?;
        let mut start = 0;
        let mut acc = C64::default();
        for bw in weights {
            let t: C64 = (start..start + bw.dim).map(|i| self.get(i, i)).sum();
            acc += t * (bw.weight / bw.dim as f64);
            start += bw.dim;
        }
        Ok(acc)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, LinalgError> {
        let b = self.aligned(other)?;
        Ok(self.data.iter().zip(&b.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.data.iter().all(|z| z.norm() <= tol)
    }

    pub fn is_exact_zero(&self) -> bool {
        self.data.iter().all(|z| *z == C64::default())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (i..n).all(|j| (self.get(i, j) - self.get(j, i).conj()).norm() <= tol))
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        let sq = self.mat_mul(self).expect("same carrier");
        sq.max_abs_diff(self).map(|d| d <= tol).unwrap_or(false)
    }

    /// `a a* a = a`.
    pub fn is_partial_isometry(&self, tol: f64) -> bool {
        let aa = self.mat_mul(&self.adjoint()).expect("same carrier");
        let aaa = aa.mat_mul(self).expect("same carrier");
        aaa.max_abs_diff(self).map(|d| d <= tol).unwrap_or(false)
    }

    /// Largest singular value by power iteration on `a* a`.
    pub fn operator_norm(&self) -> Result<f64, LinalgError> {
        let n = self.dim();
        if n == 0 || self.is_exact_zero() {
            return Ok(0.0);
        }
        let m = self.adjoint().mat_mul(self)?;
        let mut x: Vec<C64> = (0..n)
            .map(|i| {
                let t = i as f64;
                c(1.0 + (t * 0.754_877_666_2).fract(), (t * 0.569_840_291).fract())
            })
            .collect();
        normalize(&mut x);
        let mut lambda_prev = -1.0;
        for iter in 0..200_000 {
            let mut y = mat_vec(&m, &x);
            let lambda = vec_norm(&y);
            if lambda == 0.0 {
                // start vector in the kernel: restart on a nonzero column
                let col = (0..n).find(|&j| (0..n).any(|i| m.get(i, j) != C64::default()));
                match col {
                    Some(j) if iter < 2 => {
                        x = (0..n).map(|i| if i == j { cr(1.0) } else { C64::default() }).collect();
                        continue;
                    }
                    _ => return Ok(0.0),
                }
            }
            for v in &mut y {
                *v /= lambda;
            }
            x = y;
            if iter > 1 && (lambda - lambda_prev).abs() <= 1e-10 * lambda {
                return Ok(lambda.sqrt());
            }
            lambda_prev = lambda;
        }
        Err(LinalgError::Numeric("power iteration did not converge".into()))
    }

    /// Gelfand estimate of the spectral radius by repeated squaring.
    ///
    /// Upper bounds are `‖A^(2^k)‖_F^(2^-k)`, kept monotone. Lower bounds come
    /// from `|tr A^m| / n ≤ ρ^m` along several squaring chains and from
    /// `|det A|^(1/n)`.
    pub fn spectral_radius(&self, tol: f64) -> SpectralReport {
        let n = self.dim();
        let norm = self.operator_norm().unwrap_or_else(|_| self.frobenius_norm());
        if n == 0 || self.is_exact_zero() {
            return zero_report(norm, "zero matrix");
        }
        let nf = n as f64;
        let mut upper = f64::INFINITY;
        let mut lower: f64 = 0.0;
        let mut note = String::from("converged");

        let det = self.plain_det().norm();
        if det > 0.0 {
            lower = lower.max(det.powf(1.0 / nf));
        }

        // Main chain: A^(2^k), scaled to unit Frobenius norm with log scale tracked.
        let mut b = self.clone();
        let mut log_scale = 0.0_f64;
        let mut prev_upper = f64::INFINITY;
        let mut power = 1.0_f64;
        let mut converged = false;
        for k in 0..48 {
            let fro = b.frobenius_norm();
            if fro == 0.0 {
                return zero_report(norm, "exact zero power");
            }
            let log_norm = fro.ln() + log_scale;
            let u = (log_norm / power).exp();
            upper = upper.min(u);
            let tr = b.trace().norm();
            if tr > 0.0 {
                let l = ((tr.ln() + log_scale - nf.ln()) / power).exp();
                lower = lower.max(l);
            }
            if upper <= lower || (k >= 3 && (prev_upper - upper).abs() <= tol * upper.max(1e-300)) {
                converged = true;
                break;
            }
            if upper < 1e-300 {
                converged = true;
                break;
            }
            prev_upper = upper;
            b = b.scale(cr(1.0 / fro));
            log_scale += fro.ln();
            b = b.mat_mul(&b).expect("same carrier");
            log_scale *= 2.0;
            power *= 2.0;
        }
        if !converged {
            note = "iteration cap reached".into();
        }

        // Side chains A^(m 2^j) for small odd m sharpen the trace lower bound.
        if lower < 1.0 && upper >= 1.0 {
            let mut am = self.clone();
            for m in 2..=6u32 {
                am = am.mat_mul(self).expect("same carrier");
                if m % 2 == 0 {
                    continue;
                }
                let mut b = am.clone();
                let mut log_scale = 0.0_f64;
                let mut power = m as f64;
                for _ in 0..24 {
                    let fro = b.frobenius_norm();
                    if fro == 0.0 {
                        break;
                    }
                    let tr = b.trace().norm();
                    if tr > 0.0 {
                        let l = ((tr.ln() + log_scale - nf.ln()) / power).exp();
                        lower = lower.max(l);
                    }
                    b = b.scale(cr(1.0 / fro));
                    log_scale += fro.ln();
                    b = b.mat_mul(&b).expect("same carrier");
                    log_scale *= 2.0;
                    power *= 2.0;
                }
            }
        }

        let lower = lower.min(upper);
        if lower < 1.0 && upper >= 1.0 {
            note = "bounds straddle 1".into();
        }
        SpectralReport {
            norm,
            spectral_radius: upper,
            lower,
            upper,
            bound: upper - lower,
            exact_zero: false,
            note,
        }
    }

    /// Determinant by LU with partial pivoting.
    pub fn plain_det(&self) -> C64 {
        match lu(self) {
            Some((lu, _, sign)) => {
                let n = self.dim();
                (0..n).map(|i| lu[i * n + i]).product::<C64>() * sign
            }
            None => C64::default(),
        }
    }

    /// Solve `self · X = rhs` column by column.
    pub fn solve(&self, rhs: &Self) -> Result<Self, LinalgError> {
        let rhs = self.aligned(rhs)?;
        let n = self.dim();
        let (lu, perm, _) = lu(self).ok_or(LinalgError::Singular)?;
        let scale = self.max_abs().max(1.0);
        if (0..n).any(|i| lu[i * n + i].norm() <= 1e-14 * scale) {
            return Err(LinalgError::Singular);
        }
        let mut out = vec![C64::default(); n * n];
        for col in 0..n {
            let mut y: Vec<C64> = (0..n).map(|i| rhs.get(perm[i], col)).collect();
            for i in 0..n {
                for k in 0..i {
                    let l = lu[i * n + k];
                    y[i] = y[i] - l * y[k];
                }
            }
            for i in (0..n).rev() {
                for k in i + 1..n {
                    let u = lu[i * n + k];
                    y[i] = y[i] - u * y[k];
                }
                y[i] /= lu[i * n + i];
            }
            for i in 0..n {
                out[i * n + col] = y[i];
            }
        }
        Ok(Self { carrier: self.carrier.clone(), data: out })
    }

    pub fn inverse(&self) -> Result<Self, LinalgError> {
        self.solve(&Self::identity(self.carrier.clone()))
    }

    /// Eigen-decomposition of a hermitian matrix: real eigenvalues and the
    /// unitary whose columns are eigenvectors.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, Vec<C64>) {
        let n = self.dim();
        let m = DMatrix::from_row_slice(n, n, &self.data);
        let eig = m.symmetric_eigen();
        let mut vecs = vec![C64::default(); n * n];
        for i in 0..n {
            for j in 0..n {
                vecs[i * n + j] = eig.eigenvectors[(i, j)];
            }
        }
        (eig.eigenvalues.iter().copied().collect(), vecs)
    }

    /// Fuglede–Kadison determinant `exp(τ(log|A|))`.
    ///
    /// Without weights `τ` is the normalized trace and the result is
    /// `|det A|^(1/n)`. With block weights `τ = Σ λ_b tr_b`, normalized per block.
    /// Singular matrices map to 0.
    pub fn fk_det(&self, weights: Option<&[BlockWeight]>) -> Result<f64, LinalgError> {
        let n = self.dim();
        if n == 0 {
            return Ok(1.0);
        }
        let default = [BlockWeight { dim: n, weight: 1.0 }];
        let weights = weights.unwrap_or(&default);
        check_blocks(n, weights)?;
        let h = self.adjoint().mat_mul(self)?;
        let (mu, v) = h.hermitian_eigen();
        let top = mu.iter().copied().fold(0.0, f64::max);
        // coefficient of each eigenvalue in the weighted trace
        let mut coeff = vec![0.0; n];
        let mut start = 0;
        for bw in weights {
            let w = bw.weight / bw.dim as f64;
            for i in start..start + bw.dim {
                for (j, cj) in coeff.iter_mut().enumerate() {
                    *cj += w * v[i * n + j].norm_sqr();
                }
            }
            start += bw.dim;
        }
        let mut exponent = 0.0;
        for (j, &m) in mu.iter().enumerate() {
            if coeff[j].abs() <= 1e-15 {
                continue;
            }
            if m <= top * 1e-300 || m <= 0.0 {
                return Ok(0.0);
            }
            exponent += coeff[j] * 0.5 * m.ln();
        }
        Ok(exponent.exp())
    }

    /// Block-diagonal sum with concatenated carriers.
    pub fn direct_sum(&self, other: &Self) -> Result<Self, LinalgError> {
        let mut carrier = self.carrier.clone();
        carrier.extend_from_slice(&other.carrier);
        let n = carrier.len();
        let (na, nb) = (self.dim(), other.dim());
        let mut data = vec![C64::default(); n * n];
        for i in 0..na {
            for j in 0..na {
                data[i * n + j] = self.get(i, j);
            }
        }
        for i in 0..nb {
            for j in 0..nb {
                data[(na + i) * n + na + j] = other.get(i, j);
            }
        }
        Self::new(carrier, data)
    }

    /// Kronecker product; the label of `(x, y)` is `x << 32 | y`.
    pub fn tensor(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.carrier.iter().chain(&other.carrier).any(|&l| l >= 1 << 32) {
            return Err(LinalgError::Invalid("tensor labels must fit in 32 bits".into()));
        }
        let (na, nb) = (self.dim(), other.dim());
        let carrier: Vec<Label> = self
            .carrier
            .iter()
            .flat_map(|&x| other.carrier.iter().map(move |&y| (x << 32) | y))
            .collect();
        let data = kron(&self.data, na, &other.data, nb);
        Self::new(carrier, data)
    }

    /// Compression to a sub-carrier, in the order given.
    pub fn restrict(&self, labels: &[Label]) -> Result<Self, LinalgError> {
        let pos: Vec<usize> = labels
            .iter()
            .map(|&l| {
                self.position(l)
                    .ok_or_else(|| LinalgError::CarrierMismatch(format!("label {l} not in carrier")))
            })
            .collect::<Result<_, _>>()?;
        let mut data = Vec::with_capacity(pos.len() * pos.len());
        for &i in &pos {
            for &j in &pos {
                data.push(self.get(i, j));
            }
        }
        Self::new(labels.to_vec(), data)
    }

    /// Zero-padding to a larger carrier containing the current one.
    pub fn embed(&self, carrier: &[Label]) -> Result<Self, LinalgError> {
        let pos: Vec<usize> = self
            .carrier
            .iter()
            .map(|&l| {
                carrier
                    .iter()
                    .position(|&m| m == l)
                    .ok_or_else(|| LinalgError::CarrierMismatch(format!("label {l} not in target")))
            })
            .collect::<Result<_, _>>()?;
        let mut out = Self::zeros(carrier.to_vec());
        for (a, &i) in pos.iter().enumerate() {
            for (b, &j) in pos.iter().enumerate() {
                out.set(i, j, self.get(a, b));
            }
        }
        Ok(out)
    }
}

fn zero_report(norm: f64, note: &str) -> SpectralReport {
    SpectralReport {
        norm,
        spectral_radius: 0.0,
        lower: 0.0,
        upper: 0.0,
        bound: 0.0,
        exact_zero: true,
        note: note.into(),
    }
}

fn check_blocks(n: usize, weights: &[BlockWeight]) -> Result<(), LinalgError> {
    let total: usize = weights.iter().map(|b| b.dim).sum();
    if total != n || weights.iter().any(|b| b.dim == 0) {
        return Err(LinalgError::Invalid(format!(
            "block dimensions sum to {total}, matrix has size {n}"
        )));
    }
    Ok(())
}

pub(crate) fn kron(a: &[C64], na: usize, b: &[C64], nb: usize) -> Vec<C64> {
    let n = na * nb;
    let mut data = vec![C64::default(); n * n];
    for i in 0..na {
        for j in 0..na {
            let x = a[i * na + j];
            if x == C64::default() {
                continue;
            }
            for k in 0..nb {
                for l in 0..nb {
                    data[(i * nb + k) * n + j * nb + l] = x * b[k * nb + l];
                }
            }
        }
    }
    data
}

fn mat_vec(m: &DenseOperator, x: &[C64]) -> Vec<C64> {
    let n = m.dim();
    (0..n).map(|i| (0..n).map(|j| m.get(i, j) * x[j]).sum()).collect()
}

fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(x: &mut [C64]) {
    let n = vec_norm(x);
    for v in x.iter_mut() {
        *v /= n;
    }
}

/// LU factorization with partial pivoting. Returns packed factors, the row
/// permutation, and the permutation sign; `None` for an exactly singular matrix.
fn lu(a: &DenseOperator) -> Option<(Vec<C64>, Vec<usize>, C64)> {
    let n = a.dim();
    let mut m = a.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = cr(1.0);
    for k in 0..n {
        let (p, best) = (k..n)
            .map(|i| (i, m[i * n + k].norm()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == 0.0 {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = m[k * n + k];
        for i in k + 1..n {
            let f = m[i * n + k] / pivot;
            m[i * n + k] = f;
            if f == C64::default() {
                continue;
            }
            for j in k + 1..n {
                let u = m[k * n + j];
                m[i * n + j] -= f * u;
            }
        }
    }
    Some((m, perm, sign))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schoolbook(a: &DenseOperator, b: &DenseOperator) -> Vec<C64> {
        let n = a.dim();
        let mut out = vec![C64::default(); n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out[i * n + j] += a.get(i, k) * b.get(k, j);
                }
            }
        }
        out
    }

    fn sample(n: usize, seed: u64) -> DenseOperator {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let data = (0..n * n).map(|_| c(next(), next())).collect();
        DenseOperator::positional(n, data).unwrap()
    }

    #[test]
    fn identity_product() {
        let a = sample(3, 1);
        let i = DenseOperator::identity(a.carrier().to_vec());
        assert_eq!(i.mat_mul(&a).unwrap(), a);
    }

    #[test]
    fn product_matches_schoolbook() {
        for seed in 0..10 {
            let (a, b) = (sample(4, seed), sample(4, seed + 100));
            let p = a.mat_mul(&b).unwrap();
            let o = schoolbook(&a, &b);
            for (x, y) in p.entries().iter().zip(&o) {
                assert!((x - y).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn product_aligns_by_label() {
        let a = DenseOperator::from_rows(vec![5, 9], &[vec![cr(1.0), cr(2.0)], vec![cr(3.0), cr(4.0)]]).unwrap();
        let b = DenseOperator::from_rows(vec![9, 5], &[vec![cr(1.0), cr(0.0)], vec![cr(0.0), cr(2.0)]]).unwrap();
        // b in (5, 9) order is diag(2, 1)
        let p = a.mat_mul(&b).unwrap();
        assert_eq!(p.get(0, 0), cr(2.0));
        assert_eq!(p.get(0, 1), cr(2.0));
        assert_eq!(p.get(1, 0), cr(6.0));
        let bad = DenseOperator::zeros(vec![1, 2]);
        assert!(matches!(a.mat_mul(&bad), Err(LinalgError::CarrierMismatch(_))));
    }

    #[test]
    fn adjoint_examples() {
        let n = DenseOperator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let expect = DenseOperator::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(n.adjoint(), expect);
        let (a, b) = (sample(3, 7), sample(3, 8));
        let lhs = a.mat_mul(&b).unwrap().adjoint();
        let rhs = b.adjoint().mat_mul(&a.adjoint()).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
        assert_eq!(a.adjoint().adjoint(), a);
    }

    #[test]
    fn norm_examples() {
        assert_eq!(DenseOperator::zeros(vec![0, 1]).operator_norm().unwrap(), 0.0);
        let perm = DenseOperator::from_real_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]).unwrap();
        assert!((perm.operator_norm().unwrap() - 1.0).abs() <= 1e-9);
        let d = DenseOperator::from_real_rows(&[&[0.5, 0.0], &[0.0, 0.25]]).unwrap();
        assert!((d.operator_norm().unwrap() - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn spectral_examples() {
        let j = DenseOperator::from_real_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]).unwrap();
        let r = j.spectral_radius(1e-12);
        assert_eq!(r.spectral_radius, 0.0);
        assert!(r.exact_zero);
        let d = DenseOperator::from_real_rows(&[&[0.5, 0.0], &[0.0, 0.25]]).unwrap();
        let r = d.spectral_radius(1e-12);
        assert!((r.spectral_radius - 0.5).abs() <= 1e-6, "{r:?}");
        let m = DenseOperator::identity(vec![0, 1]).scale(cr(-1.0));
        let r = m.spectral_radius(1e-12);
        assert!((r.spectral_radius - 1.0).abs() <= 1e-9);
        assert_eq!(r.gate(), UnitGate::AtLeast);
    }

    #[test]
    fn determinants() {
        assert!((DenseOperator::identity(vec![0, 1, 2]).plain_det() - 1.0).norm() <= 1e-15);
        let d = DenseOperator::from_real_rows(&[&[2.0, 0.0], &[0.0, 2.0]]).unwrap();
        assert!((d.fk_det(None).unwrap() - 2.0).abs() <= 1e-12);
        let n = DenseOperator::from_real_rows(&[&[0.0, 3.0], &[0.0, 0.0]]).unwrap();
        assert!((n.one_minus().scale(cr(-1.0)).add(&DenseOperator::identity(vec![0, 1]).scale(cr(2.0))).unwrap().fk_det(None).unwrap() - 1.0).abs() <= 1e-9);
        let singular = DenseOperator::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        assert_eq!(singular.fk_det(None).unwrap(), 0.0);
    }

    #[test]
    fn sums_and_tensors() {
        let a = sample(2, 3);
        let empty = DenseOperator::zeros(vec![]);
        assert_eq!(a.direct_sum(&empty).unwrap(), a);
        let i2 = DenseOperator::identity(vec![0, 1]);
        let t = i2.tensor(&a).unwrap();
        for blk in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(t.get(blk * 2 + i, blk * 2 + j), a.get(i, j));
                    assert_eq!(t.get(blk * 2 + i, (1 - blk) * 2 + j), C64::default());
                }
            }
        }
    }

    #[test]
    fn solve_and_inverse() {
        let a = sample(4, 11).add(&DenseOperator::identity((0..4).collect()).scale(cr(3.0))).unwrap();
        let inv = a.inverse().unwrap();
        let id = a.mat_mul(&inv).unwrap();
        assert!(id.max_abs_diff(&DenseOperator::identity((0..4).collect())).unwrap() <= 1e-12);
    }
}
