//! Thin wrappers over BLAS/LAPACK for the complex matrices used throughout.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use lax::layout::MatrixLayout;
use lax::Lapack;
use ndarray_linalg::{Eigh, QR, SVD, UPLO};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::Result;

pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;
pub type RMat = Array2<f64>;

/// Largest dimension for which spectral norms use dense eigenvalues.
pub const DENSE_LIMIT: usize = 600;

pub fn adjoint(m: &ArrayView2<C64>) -> CMat {
    m.t().mapv(|z| z.conj())
}

/// Multiplies column `j` of `m` by `s[j]`.
pub fn scale_columns(m: &CMat, s: &[f64]) -> CMat {
    let mut out = m.clone();
    for (mut col, &f) in out.axis_iter_mut(Axis(1)).zip(s) {
        col.mapv_inplace(|z| z * f);
    }
    out
}

pub fn scale_columns_complex(m: &CMat, s: &[C64]) -> CMat {
    let mut out = m.clone();
    for (mut col, &f) in out.axis_iter_mut(Axis(1)).zip(s) {
        col.mapv_inplace(|z| z * f);
    }
    out
}

pub fn hermitize(m: &CMat) -> CMat {
    let mut h = m + &adjoint(&m.view());
    h.mapv_inplace(|z| z * 0.5);
    h
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigvals(m: &CMat) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    eigvals_only(hermitize(m))
}

// ndarray-linalg's eigvalsh also computes eigenvectors; ask LAPACK for values only.
fn eigvals_only(m: CMat) -> Result<Vec<f64>> {
    let n = m.nrows() as i32;
    let layout = MatrixLayout::C { row: n, lda: n };
    let mut vals = match real_copy(&m) {
        Some(r) => {
            let mut data = r.into_raw_vec();
            f64::eigh(false, layout, UPLO::Lower, &mut data)?
        }
        None => {
            let mut data = m.as_standard_layout().into_owned().into_raw_vec();
            // Row-major storage of a Hermitian matrix is its conjugate, which has the same spectrum.
            C64::eigh(false, layout, UPLO::Lower, &mut data)?
        }
    };
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// The real parts in standard layout, when every imaginary part is exactly zero.
fn real_copy(m: &CMat) -> Option<RMat> {
    m.iter().all(|z| z.im == 0.0).then(|| m.mapv(|z| z.re).as_standard_layout().into_owned())
}

fn split(m: &CMat) -> (RMat, RMat) {
    (m.mapv(|z| z.re), m.mapv(|z| z.im))
}

fn join(re: RMat, im: &RMat) -> CMat {
    let mut out = re.mapv(|x| C64::new(x, 0.0));
    out.zip_mut_with(im, |z, &y| z.im = y);
    out
}

/// Thin QR factorization: `Q` and the moduli of the diagonal of `R`.
pub fn thin_qr(m: &CMat) -> Result<(CMat, Vec<f64>)> {
    Ok(match real_copy(m) {
        Some(r) => {
            let (q, r) = r.qr()?;
            (q.mapv(|x| C64::new(x, 0.0)), r.diag().iter().map(|x| x.abs()).collect())
        }
        None => {
            let (q, r) = m.qr()?;
            (q, r.diag().iter().map(|z| z.norm()).collect())
        }
    })
}

/// `a·b`, in real arithmetic for whichever factors have no imaginary part.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    match (real_copy(a), real_copy(b)) {
        (Some(ar), Some(br)) => ar.dot(&br).mapv(|x| C64::new(x, 0.0)),
        (Some(ar), None) => {
            let (re, im) = split(b);
            join(ar.dot(&re), &ar.dot(&im))
        }
        (None, Some(br)) => {
            let (re, im) = split(a);
            join(re.dot(&br), &im.dot(&br))
        }
        (None, None) => a.dot(b),
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let h = hermitize(m);
    let (vals, vecs) = h.eigh(UPLO::Lower)?;
    Ok((vals.to_vec(), vecs))
}

/// All singular values in nonincreasing order.
///
/// Hermitian input goes through the eigenvalues, which is several times cheaper than an SVD.
pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let mut v = if is_hermitian(m, 1e-13) {
        eigvals_only(m.clone())?.iter().map(|l| l.abs()).collect()
    } else {
        match real_copy(m) {
            Some(r) => r.svd(false, false)?.1.to_vec(),
            None => m.svd(false, false)?.1.to_vec(),
        }
    };
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

/// `max |m_ij − conj(m_ji)| ≤ tol · max |m_ij|` on a square matrix.
pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = max_abs(m);
    let n = m.nrows();
    (0..n).all(|i| (0..=i).all(|j| (m[[i, j]] - m[[j, i]].conj()).norm() <= tol * scale))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value: dense eigenvalues up to [`DENSE_LIMIT`], Lanczos on `AᴴA` beyond.
pub fn spectral_norm(m: &CMat) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    if m.nrows().max(m.ncols()) > DENSE_LIMIT {
        return lanczos_norm(m, 1e-14);
    }
    if is_hermitian(m, 1e-13) {
        let vals = eigvals_only(m.clone())?;
        return Ok(vals.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    let g = matmul(&adjoint(&m.view()), m);
    let top = eigvals_only(hermitize(&g))?.last().copied().unwrap_or(0.0);
    Ok(top.max(0.0).sqrt())
}

/// Spectral norm from the top Ritz value of `AᴴA` (Lanczos with full reorthogonalization,
/// fixed seed). Stops once the Ritz value moves by less than `tol` relative over five steps.
pub fn lanczos_norm(m: &CMat, tol: f64) -> Result<f64> {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut q: CVec = (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let q0 = norm(&q);
    q.mapv_inplace(|z| z / q0);
    let mh = adjoint(&m.view());
    let max_steps = n.min(LANCZOS_MAX_STEPS);
    let mut basis: Vec<CVec> = Vec::with_capacity(max_steps);
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut theta = 0.0;
    for k in 0..max_steps {
        let mut w = mh.dot(&m.dot(&q));
        let a = inner(&w, &q).re;
        basis.push(q);
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = inner(&w, v);
                w.zip_mut_with(v, |x, y| *x -= c * y);
            }
        }
        let b = norm(&w);
        let done = k + 1 == max_steps || b <= 1e-14 * a.abs().max(theta);
        if done || (k + 1) % 5 == 0 {
            let next = top_tridiagonal(&alpha, &beta)?;
            if done || (k >= 9 && (next - theta).abs() <= tol * next) {
                return Ok(next.max(0.0).sqrt());
            }
            theta = next;
        }
        beta.push(b);
        q = w.mapv(|z| z / b);
    }
    Ok(theta.max(0.0).sqrt())
}

const LANCZOS_MAX_STEPS: usize = 400;

fn top_tridiagonal(alpha: &[f64], beta: &[f64]) -> Result<f64> {
    let k = alpha.len();
    let t = CMat::from_shape_fn((k, k), |(i, j)| {
        if i == j {
            C64::new(alpha[i], 0.0)
        } else if i + 1 == j || j + 1 == i {
            C64::new(beta[i.min(j)], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(eigvals_only(t)?.last().copied().unwrap_or(0.0))
}

pub fn norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨u, v⟩ = Σ u_i conj(v_i)`, linear in the first slot.
pub fn inner(u: &CVec, v: &CVec) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// Orthonormal basis of the column span of `m`, keeping directions whose Gram
/// eigenvalue exceeds `cutoff` times the largest.
pub fn orthonormal_span(m: &CMat, cutoff: f64) -> Result<CMat> {
    let gram = adjoint(&m.view()).dot(m);
    let (vals, vecs) = hermitian_eig(&gram)?;
    let top = vals.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..vals.len()).rev().filter(|&i| vals[i] > cutoff * top).collect();
    let mut out = CMat::zeros((m.nrows(), keep.len()));
    for (c, &i) in keep.iter().enumerate() {
        let col = m.dot(&vecs.column(i));
        let s = 1.0 / vals[i].sqrt();
        out.column_mut(c).assign(&col.mapv(|z| z * s));
    }
    Ok(out)
}

/// Random complex vector with standard normal-like entries, deterministic in `seed`.
pub fn random_vector(dim: usize, rng: &mut ChaCha8Rng) -> CVec {
    (0..dim)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect()
}

pub fn identity(n: usize) -> CMat {
    CMat::from_diag_elem(n, C64::new(1.0, 0.0))
}

extern "C" {
    fn openblas_set_num_threads(n: std::os::raw::c_int);
}

/// Caps the number of threads used by the BLAS backend.
pub fn set_blas_threads(n: usize) {
    let n = n.clamp(1, i32::MAX as usize) as std::os::raw::c_int;
    // SAFETY: plain setter exported by the linked OpenBLAS; it takes no pointers.
    unsafe { openblas_set_num_threads(n) }
}
