//! Bounded-support solver for `g(qz)·a(z) = ã(z)·g(z)` over matrix Laurent
//! polynomials, with `g` of shape `ñ × n`.

use std::f64::consts::PI;

use crate::config::{ModulusConfig, ToleranceConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::series::LaurentMatrix;
use crate::spectral::jordan_decomposition;
use crate::testkit::Rng;
use crate::{CMatrix, Complex};

/// Random combinations tried when searching for an invertible solution.
pub const CERTIFICATE_TRIALS: usize = 32;
/// Points of the unit circle at which determinants are sampled.
const DET_SAMPLES: usize = 11;

#[derive(Debug, Clone)]
pub struct SolutionSpace {
    /// Exponent window, in units of `1/m_cov`.
    pub window: (i64, i64),
    pub m_cov: u32,
    pub basis: Vec<LaurentMatrix>,
    pub dim: usize,
}

fn polynomial_terms(a: &LaurentMatrix) -> Vec<(i64, CMatrix)> {
    a.terms().map(|(k, c)| (k, c.clone())).collect()
}

fn span(a: &LaurentMatrix) -> (i64, i64) {
    let ks: Vec<i64> = a.terms().map(|(k, _)| k).collect();
    match (ks.first(), ks.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0, 0),
    }
}

/// Window containing the support of every Laurent-polynomial intertwiner.
pub fn support_bound(a: &LaurentMatrix, a2: &LaurentMatrix, cfg: &ModulusConfig, tol: &ToleranceConfig) -> Result<(i64, i64)> {
    let (a, a2) = LaurentMatrix::common_covering(a, a2)?;
    let m = a.m_cov() as f64;
    let lead = |x: &LaurentMatrix| -> Vec<Complex> {
        x.terms().next().map(|(_, c)| linalg::eigenvalues(c)).unwrap_or_default()
    };
    let (la, la2) = (lead(&a), lead(&a2));
    let cap = (tol.l_max as f64 * m).ceil() as i64;
    let mut hits: Vec<i64> = Vec::new();
    for l in &la {
        for mu in &la2 {
            if l.norm() == 0.0 || mu.norm() == 0.0 {
                continue;
            }
            // |q^{k/m}·λ| = |μ| fixes k up to rounding.
            let t = (mu.norm() / l.norm()).ln() / cfg.q_abs().ln() * m;
            for k in [t.floor() as i64, t.ceil() as i64] {
                if k.abs() > cap {
                    continue;
                }
                let v = cfg.q_pow(k as f64 / m) * l;
                if (v - mu).norm() <= tol.eps_eig * mu.norm() {
                    hits.push(k);
                }
            }
        }
    }
    let (sa, sa2) = (span(&a), span(&a2));
    let spread = (sa.1 - sa.0).max(sa2.1 - sa2.0);
    let widen = spread * a.n().max(a2.n()) as i64;
    let lo = hits.iter().copied().min().unwrap_or(0);
    let hi = hits.iter().copied().max().unwrap_or(0);
    Ok((lo - widen, hi + widen))
}

/// Null space of the coefficient system on `window`. Columns are equilibrated
/// before the singular-value threshold `eps_eig` is applied.
pub fn solve_intertwiners(
    a: &LaurentMatrix,
    a2: &LaurentMatrix,
    window: (i64, i64),
    cfg: &ModulusConfig,
    tol: &ToleranceConfig,
) -> Result<SolutionSpace> {
    if !a.is_square() || !a2.is_square() {
        return Err(Error::SizeMismatch("intertwiner inputs must be square".into()));
    }
    if window.0 > window.1 {
        return Err(Error::Parse(format!("empty window [{}, {}]", window.0, window.1)));
    }
    let (a, a2) = LaurentMatrix::common_covering(a, a2)?;
    // Work in bases adapted to the leading coefficients; this keeps entries
    // of very different magnitude in separate rows and columns.
    let (p1, p1_inv) = adapted_basis(&a, tol);
    let (p2, p2_inv) = adapted_basis(&a2, tol);
    let a = a.conjugate_by_constant(&p1_inv, &p1);
    let a2 = a2.conjugate_by_constant(&p2_inv, &p2);
    let m = a.m_cov();
    let (n1, n2) = (a.n(), a2.n());
    let block = n1 * n2;
    let (ta, ta2) = (polynomial_terms(&a), polynomial_terms(&a2));
    let (sa, sa2) = (span(&a), span(&a2));
    let row_lo = window.0 + sa.0.min(sa2.0);
    let row_hi = window.1 + sa.1.max(sa2.1);
    let nk = (window.1 - window.0 + 1) as usize;
    let nj = (row_hi - row_lo + 1) as usize;
    let mut sys = linalg::zeros(nj * block, nk * block);
    let id1 = linalg::identity(n1);
    let id2 = linalg::identity(n2);
    for ki in 0..nk {
        let k = window.0 + ki as i64;
        let qk = cfg.q_pow(k as f64 / m as f64);
        // vec(g_k·A) = (Aᵀ ⊗ I)·vec(g_k), vec(B·g_k) = (I ⊗ B)·vec(g_k).
        for (e, c) in &ta {
            let j = (k + e - row_lo) as usize;
            let blk = linalg::kron(&c.transpose(), &id2) * qk;
            let mut v = sys.view_mut((j * block, ki * block), (block, block));
            v += &blk;
        }
        for (e, c) in &ta2 {
            let j = (k + e - row_lo) as usize;
            let blk = linalg::kron(&id1, c);
            let mut v = sys.view_mut((j * block, ki * block), (block, block));
            v -= &blk;
        }
    }
    // Each unknown `g_k[r, c]` is scaled by the size of the terms it meets
    // before cancellation: row `c` of `a` and column `r` of `ã`.
    let row_size = |c: usize| ta.iter().map(|(_, x)| x.row(c).norm()).fold(0.0, f64::max);
    let col_size = |r: usize| ta2.iter().map(|(_, x)| x.column(r).norm()).fold(0.0, f64::max);
    let mut scales = Vec::with_capacity(nk * block);
    for ki in 0..nk {
        let k = window.0 + ki as i64;
        let qk = cfg.q_abs().powf(k as f64 / m as f64);
        for c in 0..n1 {
            for r in 0..n2 {
                let s = qk * row_size(c) + col_size(r);
                scales.push(if s > 0.0 { s } else { 1.0 });
            }
        }
    }
    for (c, s) in scales.iter().enumerate() {
        let mut col = sys.column_mut(c);
        col /= Complex::new(*s, 0.0);
    }
    // Scaled columns have unit size before cancellation.
    let null = linalg::null_space_with_floor(&sys, tol.eps_eig, 1.0);
    let mut basis = Vec::new();
    for col in 0..null.ncols() {
        let v: Vec<Complex> = (0..null.nrows()).map(|r| null[(r, col)] / scales[r]).collect();
        let mut terms = Vec::new();
        for ki in 0..nk {
            let g = CMatrix::from_column_slice(n2, n1, &v[ki * block..(ki + 1) * block]);
            terms.push((window.0 + ki as i64, g));
        }
        let g = LaurentMatrix::new(n2, n1, m, window, terms)?.conjugate_by_constant(&p2, &p1_inv);
        let s = g.scale();
        basis.push(g.scaled(Complex::new(1.0 / s, 0.0)));
    }
    let dim = basis.len();
    Ok(SolutionSpace { window, m_cov: m, basis, dim })
}

fn adapted_basis(a: &LaurentMatrix, tol: &ToleranceConfig) -> (CMatrix, CMatrix) {
    let lead = a.terms().next().map(|(_, c)| c.clone());
    match lead.map(|c| jordan_decomposition(&c, tol)) {
        Some(Ok(j)) => (j.basis, j.basis_inv),
        _ => (linalg::identity(a.n()), linalg::identity(a.n())),
    }
}

pub fn hom_dimension_measured(a: &LaurentMatrix, a2: &LaurentMatrix, cfg: &ModulusConfig, tol: &ToleranceConfig) -> Result<usize> {
    let w = support_bound(a, a2, cfg, tol)?;
    Ok(solve_intertwiners(a, a2, w, cfg, tol)?.dim)
}

/// True when `det g(z)` is not identically zero, judged at sample points on
/// the unit circle.
fn generically_invertible(g: &LaurentMatrix, tol: &ToleranceConfig) -> bool {
    (0..DET_SAMPLES).any(|i| {
        let z = Complex::from_polar(1.0, 2.0 * PI * (i as f64 + 0.37) / DET_SAMPLES as f64);
        let s = linalg::singular_values(&g.evaluate(z));
        s[0] > 0.0 && s[s.len() - 1] > tol.eps_eig * s[0]
    })
}

/// Searches the intertwiner space for an invertible element.
pub fn certificate_conjugator(
    a: &LaurentMatrix,
    a2: &LaurentMatrix,
    cfg: &ModulusConfig,
    tol: &ToleranceConfig,
) -> Result<Option<LaurentMatrix>> {
    if a.n() != a2.n() || !a.is_square() || !a2.is_square() {
        return Ok(None);
    }
    let n = a.n();
    if a.max_diff(a2)? <= tol.eps_eig * a.scale().max(1.0) {
        return Ok(Some(LaurentMatrix::identity(n, 0)));
    }
    let space = solve_intertwiners(a, a2, support_bound(a, a2, cfg, tol)?, cfg, tol)?;
    if space.dim == 0 {
        return Ok(None);
    }
    let mut rng = Rng::new(0x5EED ^ space.dim as u64);
    for _ in 0..CERTIFICATE_TRIALS {
        let mut g = LaurentMatrix::zero(n, n, space.m_cov, space.window);
        for b in &space.basis {
            g = g.add(&b.scaled(rng.disc(1.0)))?;
        }
        if generically_invertible(&g, tol) {
            return Ok(Some(g));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag, jordan_block};
    use crate::testkit::random_reduced_constant;

    fn setup() -> (ModulusConfig, ToleranceConfig) {
        (ModulusConfig::default(), ToleranceConfig::default())
    }

    fn lam(cfg: &ModulusConfig) -> Complex {
        cfg.point_value(0.2718281828, 0.3141592653)
    }

    fn konst(m: CMatrix) -> LaurentMatrix {
        LaurentMatrix::constant(&m, 0)
    }

    /// `g(qz)·a − ã·g` on the exact polynomial product.
    fn residual(g: &LaurentMatrix, a: &LaurentMatrix, a2: &LaurentMatrix, cfg: &ModulusConfig) -> f64 {
        let hi = 64;
        let w = |x: &LaurentMatrix| x.with_known_top(hi);
        let lhs = w(g).q_shift(cfg).multiply(&w(a)).unwrap();
        let rhs = w(a2).multiply(&w(g)).unwrap();
        lhs.max_diff(&rhs).unwrap()
    }

    #[test]
    fn support_examples() {
        let (cfg, tol) = setup();
        let l = lam(&cfg);
        let s = konst(diag(&[l, c(0.5, 0.5)]));
        assert_eq!(support_bound(&s, &s, &cfg, &tol).unwrap(), (0, 0));
        let i = konst(linalg::identity(2));
        assert_eq!(support_bound(&i, &i, &cfg, &tol).unwrap(), (0, 0));
        let a = konst(diag(&[l, cfg.q() * l]));
        let b = konst(diag(&[l, l]));
        let (lo, hi) = support_bound(&a, &b, &cfg, &tol).unwrap();
        assert!(lo <= -1 && hi >= -1);
    }

    #[test]
    fn solve_examples() {
        let (cfg, tol) = setup();
        let l = lam(&cfg);
        let s = konst(diag(&[l, c(0.5, 0.5)]));
        assert_eq!(hom_dimension_measured(&s, &s, &cfg, &tol).unwrap(), 2);

        let a = konst(diag(&[l, cfg.q() * l]));
        let b = konst(diag(&[l, l]));
        let sp = solve_intertwiners(&a, &b, (-2, 2), &cfg, &tol).unwrap();
        for g in &sp.basis {
            let r = residual(g, &a, &b, &cfg);
            assert!(r < 1e-9, "{r} {g:?}");
        }
        // diag(1, z^{-1}) lies in the span.
        let target = LaurentMatrix::new(
            2,
            2,
            1,
            (-2, 2),
            vec![(0, diag(&[c(1.0, 0.0), c(0.0, 0.0)])), (-1, diag(&[c(0.0, 0.0), c(1.0, 0.0)]))],
        )
        .unwrap();
        let flat = |g: &LaurentMatrix| -> nalgebra::DVector<Complex> {
            let mut v = Vec::new();
            for k in -2..=2 {
                v.extend(g.coeff(k).unwrap().iter().copied());
            }
            nalgebra::DVector::from_vec(v)
        };
        let basis = CMatrix::from_columns(&sp.basis.iter().map(flat).collect::<Vec<_>>());
        let t = flat(&target);
        let coef = basis.clone().svd(true, true).solve(&t, 1e-12).unwrap();
        assert!((basis * coef - t).norm() < 1e-9);
    }

    #[test]
    fn hom_examples() {
        let (cfg, tol) = setup();
        let one = konst(linalg::identity(1));
        let f2 = konst(jordan_block(c(1.0, 0.0), 2));
        assert_eq!(hom_dimension_measured(&one, &one, &cfg, &tol).unwrap(), 1);
        assert_eq!(hom_dimension_measured(&one, &f2, &cfg, &tol).unwrap(), 1);
        assert_eq!(hom_dimension_measured(&f2, &f2, &cfg, &tol).unwrap(), 2);
        let l = lam(&cfg);
        assert_eq!(hom_dimension_measured(&konst(diag(&[l])), &konst(diag(&[cfg.q() * l])), &cfg, &tol).unwrap(), 1);
        assert_eq!(hom_dimension_measured(&konst(diag(&[l])), &konst(diag(&[c(0.5, 0.1)])), &cfg, &tol).unwrap(), 0);
    }

    #[test]
    fn certificate_examples() {
        let (cfg, tol) = setup();
        let l = lam(&cfg);
        let a = konst(diag(&[l, cfg.q() * l]));
        let b = konst(diag(&[l, l]));
        let g = certificate_conjugator(&a, &a, &cfg, &tol).unwrap().unwrap();
        assert!(g.max_diff(&LaurentMatrix::identity(2, 0)).unwrap() < 1e-15);

        let g = certificate_conjugator(&a, &b, &cfg, &tol).unwrap().unwrap();
        let a_hi = a.with_known_top(16);
        let got = LaurentMatrix::twisted_conjugate(&g.with_known_top(16), &a_hi, &cfg).unwrap();
        assert!(got.max_diff(&b.with_known_top(16)).unwrap() < 1e-9);

        let j = konst(jordan_block(c(1.0, 0.0), 2) * l);
        assert!(certificate_conjugator(&b, &j, &cfg, &tol).unwrap().is_none());
    }

    #[test]
    fn reduced_constants_have_constant_intertwiners() {
        let (cfg, tol) = setup();
        let mut rng = Rng::new(42);
        for n in 1..=4 {
            let s = random_reduced_constant(&mut rng, n, &cfg, &tol);
            let sl = konst(s.clone());
            let sp = solve_intertwiners(&sl, &sl, (-2, 2), &cfg, &tol).unwrap();
            assert_eq!(sp.dim, jordan_decomposition(&s, &tol).unwrap().centralizer_dim());
            for g in &sp.basis {
                assert!(g.nonconstant_scale() < 1e-8);
            }
        }
    }
}
