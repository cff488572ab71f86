//! Thin SVD and the spectral filters used to pseudo-invert the feature matrix.
//!
//! Orientation follows the sample-side-first convention: a matrix `A` of shape
//! `S×P` is factored as `A = V diag(σ) Uᵀ`, with `V` (`S×r`) spanning sample
//! space and `U` (`P×r`) spanning parameter space, `r = min(S, P)`. The
//! pseudo-inverse is therefore `U diag(σ⁺) Vᵀ`. Nothing in this module
//! transposes silently; callers always receive factors in this orientation.
//!
//! The factorization is a Householder QR with column pivoting followed by a
//! one-sided (Hestenes) Jacobi iteration on the transposed triangular factor.
//! Jacobi keeps small singular values accurate to working precision relative
//! to the largest one, which matters once residuals reach `1e-10` and below.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_JACOBI_SWEEPS: usize = 80;
/// Entries below this magnitude are skipped when fixing column signs.
const SIGN_THRESHOLD: f64 = 1e-12;

/// Thin singular value decomposition `A = V diag(σ) Uᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// `V`, shape `S×r`, orthonormal columns.
    pub sample_side: DMatrix<f64>,
    /// `U`, shape `P×r`, orthonormal columns.
    pub parameter_side: DMatrix<f64>,
    /// `σ`, length `r`, non-negative and non-increasing.
    pub singular_values: DVector<f64>,
}

impl SvdFactors {
    /// Rank dimension `r = min(S, P)`.
    pub fn rank_dim(&self) -> usize {
        self.singular_values.len()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_side.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.parameter_side.nrows()
    }

    /// Number of strictly positive singular values.
    pub fn numerical_rank(&self) -> usize {
        self.singular_values.iter().filter(|&&s| s > 0.0).count()
    }

    /// `V diag(σ) Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.sample_side.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * self.parameter_side.transpose()
    }

    /// Coefficients `Vᵀ g` of a sample-space vector.
    pub fn sample_coefficients(&self, g: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("sample-space vector", self.sample_count(), g.len())?;
        Ok(self.sample_side.tr_mul(g))
    }
}

/// How the inverse spectrum is regularized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralFilter {
    /// Keep `1/σᵢ` for every `σᵢ ≥ α`.
    HardCutoffByThreshold(f64),
    /// Keep `1/σᵢ` for the leading `k` components.
    HardCutoffByRank(usize),
    /// Ridge filter `σᵢ / (σᵢ² + S·α)`.
    Ridge { alpha: f64, sample_count: usize },
}

/// Inverse spectrum produced by a filter, plus the clamp record if the
/// requested rank exceeded the available one.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSpectrum {
    pub values: DVector<f64>,
    pub rank_clamp: Option<RankClamp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankClamp {
    pub requested: usize,
    pub used: usize,
}

/// Number of leading singular values at or above `alpha`.
pub fn rank_from_threshold(singular_values: &DVector<f64>, alpha: f64) -> usize {
    singular_values
        .iter()
        .take_while(|&&s| s >= alpha && s > 0.0)
        .count()
}

pub fn filtered_inverse_spectrum(
    singular_values: &DVector<f64>,
    filter: SpectralFilter,
) -> Result<FilteredSpectrum> {
    let r = singular_values.len();
    let mut rank_clamp = None;
    let values = match filter {
        SpectralFilter::HardCutoffByThreshold(alpha) => {
            if !(alpha > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "cutoff threshold must be positive, got {alpha}"
                )));
            }
            DVector::from_iterator(
                r,
                singular_values
                    .iter()
                    .map(|&s| if s >= alpha && s > 0.0 { 1.0 / s } else { 0.0 }),
            )
        }
        SpectralFilter::HardCutoffByRank(k) => {
            let used = if k > r {
                log::warn!("cutoff rank {k} exceeds spectrum length {r}, clamping");
                rank_clamp = Some(RankClamp { requested: k, used: r });
                r
            } else {
                k
            };
            DVector::from_iterator(
                r,
                singular_values.iter().enumerate().map(|(i, &s)| {
                    if i < used && s > 0.0 {
                        1.0 / s
                    } else {
                        0.0
                    }
                }),
            )
        }
        SpectralFilter::Ridge {
            alpha,
            sample_count,
        } => {
            if !(alpha > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "ridge strength must be positive, got {alpha}"
                )));
            }
            let shift = sample_count as f64 * alpha;
            DVector::from_iterator(
                r,
                singular_values.iter().map(|&s| {
                    if s > 0.0 {
                        s / (s * s + shift)
                    } else {
                        0.0
                    }
                }),
            )
        }
    };
    Ok(FilteredSpectrum { values, rank_clamp })
}

/// `U diag(filter(σ)) Vᵀ g`: the regularized natural-gradient direction.
pub fn apply_pseudoinverse(
    factors: &SvdFactors,
    filter: SpectralFilter,
    g: &DVector<f64>,
) -> Result<DVector<f64>> {
    let coefficients = factors.sample_coefficients(g)?;
    let inverse = filtered_inverse_spectrum(&factors.singular_values, filter)?;
    let scaled = coefficients.component_mul(&inverse.values);
    Ok(&factors.parameter_side * scaled)
}

/// `V Π_k Vᵀ`: the empirical kernel of the projection onto the span of the
/// leading `k` sample-side singular vectors. `k` is clamped to `r`.
pub fn projection_kernel(factors: &SvdFactors, retained: usize) -> DMatrix<f64> {
    let k = retained.min(factors.rank_dim());
    let basis = factors.sample_side.columns(0, k);
    &basis * basis.transpose()
}

/// Thin SVD of an `S×P` matrix.
pub fn thin_svd(matrix: &DMatrix<f64>) -> Result<SvdFactors> {
    let (rows, cols) = matrix.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(format!(
            "cannot factor an empty {rows}x{cols} matrix"
        )));
    }
    for c in 0..cols {
        for r in 0..rows {
            if !matrix[(r, c)].is_finite() {
                return Err(Error::NonFiniteEntry { row: r, col: c });
            }
        }
    }

    let tall = rows >= cols;
    let work = if tall {
        matrix.clone()
    } else {
        matrix.transpose()
    };
    // work (m×n, m ≥ n) = left · diag(σ) · rightᵀ
    let (left, sigma, right) = tall_svd(work);

    let (sample_side, parameter_side) = if tall {
        (left, right)
    } else {
        (right, left)
    };
    let mut factors = SvdFactors {
        sample_side,
        parameter_side,
        singular_values: sigma,
    };
    fix_signs(&mut factors);
    Ok(factors)
}

/// SVD of a tall `m×n` matrix, returned as `(left m×n, σ, right n×n)`,
/// sorted by non-increasing `σ` with ties kept in column order.
fn tall_svd(a: DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let n = a.ncols();
    let (q, r, perm) = pivoted_qr(a);

    // One-sided Jacobi on Rᵀ: Rᵀ J = W Σ, so R = J Σ Wᵀ and
    // A Π = Q R = (Q J) Σ Wᵀ, i.e. A = (Q J) Σ (Π W)ᵀ.
    let mut b = r.transpose();
    let mut jac = DMatrix::<f64>::identity(n, n);
    one_sided_jacobi(&mut b, &mut jac);

    let norms: Vec<f64> = (0..n).map(|j| b.column(j).norm()).collect();
    let scale = norms.iter().cloned().fold(0.0_f64, f64::max);
    let mut w = DMatrix::<f64>::zeros(n, n);
    let mut null_cols = Vec::new();
    for j in 0..n {
        if norms[j] > scale * f64::EPSILON * 1e-3 && norms[j] > f64::MIN_POSITIVE {
            w.set_column(j, &(b.column(j) / norms[j]));
        } else {
            null_cols.push(j);
        }
    }
    complete_orthonormal(&mut w, &null_cols);
    let mut sigma: Vec<f64> = norms;
    for &j in &null_cols {
        sigma[j] = 0.0;
    }

    let left_unsorted = q * jac;
    let mut right_unsorted = DMatrix::<f64>::zeros(n, n);
    for (k, &src) in perm.iter().enumerate() {
        right_unsorted.set_row(src, &w.row(k));
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal singular values keep their column order
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());

    let m = left_unsorted.nrows();
    let mut left = DMatrix::<f64>::zeros(m, n);
    let mut right = DMatrix::<f64>::zeros(n, n);
    let mut values = DVector::<f64>::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        left.set_column(dst, &left_unsorted.column(src));
        right.set_column(dst, &right_unsorted.column(src));
        values[dst] = sigma[src];
    }
    (left, values, right)
}

/// Householder QR with column pivoting of a tall matrix. Returns the thin
/// `Q` (`m×n`), upper-triangular `R` (`n×n`) and the permutation with
/// `A[:, perm[k]] = (Q R)[:, k]`.
fn pivoted_qr(mut a: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, Vec<usize>) {
    let (m, n) = a.shape();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reflectors: Vec<(DVector<f64>, f64)> = Vec::with_capacity(n);

    for k in 0..n {
        // pivot on the largest trailing column norm
        let mut best = k;
        let mut best_norm = -1.0;
        for j in k..n {
            let s: f64 = a.column(j).rows(k, m - k).norm_squared();
            if s > best_norm {
                best_norm = s;
                best = j;
            }
        }
        if best != k {
            a.swap_columns(k, best);
            perm.swap(k, best);
        }

        let x = a.column(k).rows(k, m - k).clone_owned();
        let norm_x = x.norm();
        if norm_x == 0.0 {
            reflectors.push((DVector::zeros(m - k), 0.0));
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm_x } else { norm_x };
        let mut v = x;
        v[0] -= alpha;
        let v_norm_sq = v.norm_squared();
        let tau = if v_norm_sq > 0.0 { 2.0 / v_norm_sq } else { 0.0 };
        // apply H = I - tau v vᵀ to the trailing block
        for j in k..n {
            let mut col = a.column_mut(j);
            let mut tail = col.rows_mut(k, m - k);
            let dot = v.dot(&tail);
            tail.axpy(-tau * dot, &v, 1.0);
        }
        reflectors.push((v, tau));
    }

    let mut r = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            r[(i, j)] = a[(i, j)];
        }
    }

    let mut q = DMatrix::<f64>::zeros(m, n);
    for i in 0..n {
        q[(i, i)] = 1.0;
    }
    for k in (0..n).rev() {
        let (v, tau) = &reflectors[k];
        if *tau == 0.0 {
            continue;
        }
        for j in k..n {
            let mut col = q.column_mut(j);
            let mut tail = col.rows_mut(k, m - k);
            let dot = v.dot(&tail);
            tail.axpy(-tau * dot, v, 1.0);
        }
    }
    (q, r, perm)
}

/// Rotates columns of `b` until they are mutually orthogonal, accumulating
/// the rotations into `acc`.
fn one_sided_jacobi(b: &mut DMatrix<f64>, acc: &mut DMatrix<f64>) {
    let n = b.ncols();
    let rows_b = b.nrows();
    let rows_acc = acc.nrows();
    let tol = f64::EPSILON * (rows_b as f64).sqrt();

    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let data = b.as_slice();
                    let bp = &data[p * rows_b..(p + 1) * rows_b];
                    let bq = &data[q * rows_b..(q + 1) * rows_b];
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for (x, y) in bp.iter().zip(bq) {
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    (alpha, beta, gamma)
                };
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(b.as_mut_slice(), rows_b, p, q, c, s);
                rotate_columns(acc.as_mut_slice(), rows_acc, p, q, c, s);
            }
        }
        if !rotated {
            return;
        }
    }
    log::warn!("one-sided Jacobi did not converge in {MAX_JACOBI_SWEEPS} sweeps");
}

fn rotate_columns(data: &mut [f64], rows: usize, p: usize, q: usize, c: f64, s: f64) {
    debug_assert!(p < q);
    let (head, tail) = data.split_at_mut(q * rows);
    let cp = &mut head[p * rows..(p + 1) * rows];
    let cq = &mut tail[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Fills the listed columns of a square matrix so that all columns are
/// orthonormal, using canonical vectors and two rounds of Gram–Schmidt.
fn complete_orthonormal(w: &mut DMatrix<f64>, null_cols: &[usize]) {
    if null_cols.is_empty() {
        return;
    }
    let n = w.nrows();
    let mut filled: Vec<usize> = (0..w.ncols()).filter(|j| !null_cols.contains(j)).collect();
    let mut candidate = 0;
    for &target in null_cols {
        loop {
            assert!(candidate < n, "orthonormal completion ran out of candidates");
            let mut v = DVector::<f64>::zeros(n);
            v[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for &j in &filled {
                    let proj = w.column(j).dot(&v);
                    v.axpy(-proj, &w.column(j), 1.0);
                }
            }
            let norm = v.norm();
            if norm > 1e-8 {
                w.set_column(target, &(v / norm));
                filled.push(target);
                break;
            }
        }
    }
}

fn fix_signs(factors: &mut SvdFactors) {
    for j in 0..factors.rank_dim() {
        let first = factors
            .parameter_side
            .column(j)
            .iter()
            .copied()
            .find(|x| x.abs() > SIGN_THRESHOLD);
        if matches!(first, Some(x) if x < 0.0) {
            factors.parameter_side.column_mut(j).neg_mut();
            factors.sample_side.column_mut(j).neg_mut();
        }
    }
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}
