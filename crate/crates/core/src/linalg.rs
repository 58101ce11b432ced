//! Dense complex helpers on top of nalgebra.

use nalgebra::{Schur, SVD};

use crate::error::{Error, Result};
use crate::{CMatrix, Complex};

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

/// Frobenius norm.
pub fn norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn diag(values: &[Complex]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { values[i] } else { Complex::new(0.0, 0.0) })
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = SVD::new(m.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Numerical rank: singular values above `rel_tol · max(floor, σ_max)`.
pub fn rank(m: &CMatrix, rel_tol: f64, floor: f64) -> usize {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0).max(floor);
    s.iter().filter(|&&x| x > rel_tol * top).count()
}

/// Right singular vectors of `m` ordered by ascending singular value,
/// together with those singular values. Zero rows are padded in so that the
/// full right basis is always available.
pub fn right_singular_ascending(m: &CMatrix) -> (Vec<f64>, Vec<nalgebra::DVector<Complex>>) {
    let cols = m.ncols();
    let padded = if m.nrows() < cols {
        let mut p = zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| {
        svd.singular_values[a]
            .partial_cmp(&svd.singular_values[b])
            .unwrap()
    });
    let values = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let vectors = idx
        .iter()
        .map(|&i| v_t.row(i).adjoint().into_owned())
        .collect();
    (values, vectors)
}

/// Orthonormal basis (as columns) of the `dim` least-significant right
/// singular directions of `m`.
pub fn smallest_right_subspace(m: &CMatrix, dim: usize) -> CMatrix {
    let (_, vecs) = right_singular_ascending(m);
    let mut out = zeros(m.ncols(), dim);
    for (j, v) in vecs.iter().take(dim).enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Null space by singular-value thresholding relative to `σ_max`.
pub fn null_space(m: &CMatrix, rel_tol: f64) -> CMatrix {
    null_space_with_floor(m, rel_tol, 0.0)
}

/// As [`null_space`], with the reference scale `max(σ_max, floor)`, so that a
/// system made only of round-off is recognized as zero.
pub fn null_space_with_floor(m: &CMatrix, rel_tol: f64, floor: f64) -> CMatrix {
    let (values, vecs) = right_singular_ascending(m);
    let top = values.iter().copied().fold(floor, f64::max);
    let keep: Vec<_> = values
        .iter()
        .zip(vecs.iter())
        .filter(|(s, _)| top == 0.0 || **s <= rel_tol * top)
        .map(|(_, v)| v.clone())
        .collect();
    let mut out = zeros(m.ncols(), keep.len());
    for (j, v) in keep.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Inverse with a conditioning guard: fails when `σ_min/σ_max` drops below
/// `rcond`.
pub fn inverse(m: &CMatrix, rcond: f64) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::SizeMismatch(format!(
            "cannot invert a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let s = singular_values(m);
    let (hi, lo) = (s.first().copied().unwrap_or(0.0), s.last().copied().unwrap_or(0.0));
    if hi == 0.0 || lo < rcond * hi {
        return Err(Error::SingularInput(format!(
            "condition estimate {:.3e}",
            if lo == 0.0 { f64::INFINITY } else { hi / lo }
        )));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularInput("LU inversion failed".into()))
}

pub fn is_invertible(m: &CMatrix, rcond: f64) -> bool {
    inverse(m, rcond).is_ok()
}

/// Eigenvalues from the diagonal of the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<Complex> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![m[(0, 0)]];
    }
    let (_, t) = Schur::new(m.clone()).unpack();
    (0..n).map(|i| t[(i, i)]).collect()
}

/// Complex Schur decomposition `m = Q·T·Q^H`.
pub fn schur(m: &CMatrix) -> (CMatrix, CMatrix) {
    Schur::new(m.clone()).unpack()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Block-diagonal matrix from square or rectangular blocks.
pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Jordan block `J(value, size)`: `value` on the diagonal and ones on the
/// superdiagonal.
pub fn jordan_block(value: Complex, size: usize) -> CMatrix {
    CMatrix::from_fn(size, size, |i, j| {
        if i == j {
            value
        } else if j == i + 1 {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}

/// `m^p` by repeated squaring.
pub fn power(m: &CMatrix, mut p: u32) -> CMatrix {
    let mut base = m.clone();
    let mut acc = identity(m.nrows());
    while p > 0 {
        if p & 1 == 1 {
            acc = &acc * &base;
        }
        base = &base * &base;
        p >>= 1;
    }
    acc
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let nrm = norm(m);
    let mut squarings = 0u32;
    let mut scaled = m.clone();
    if nrm > 0.5 {
        squarings = (nrm / 0.5).log2().ceil() as u32;
        scaled /= Complex::new(2f64.powi(squarings as i32), 0.0);
    }
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..=20 {
        term = &term * &scaled / Complex::new(k as f64, 0.0);
        sum += &term;
        if norm(&term) < 1e-18 * norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Solves `m·x = rhs` for square invertible `m`.
pub fn solve(m: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::SingularInput("linear solve failed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_nilpotent_terminates() {
        let mut n = zeros(2, 2);
        n[(0, 1)] = c(3.0, 0.0);
        let e = expm(&n);
        assert!((e[(0, 1)] - c(3.0, 0.0)).norm() < 1e-14);
        assert!((e[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn expm_scalar_matches_exp() {
        let z = c(1.3, -0.7);
        let e = expm(&diag(&[z]));
        assert!((e[(0, 0)] - z.exp()).norm() < 1e-12);
    }

    #[test]
    fn null_space_of_rank_one() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.ncols(), 1);
        assert!(norm(&(&m * &ns)) < 1e-12);
    }

    #[test]
    fn inverse_rejects_singular() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(inverse(&m, 1e-12), Err(Error::SingularInput(_))));
    }
}
