//! Covering descent of an aligned form to a reduced constant with its
//! finite-order companion.

use crate::align::AlignedForm;
use crate::config::{unit_pow, ModulusConfig, ToleranceConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::resonance::{is_reduced, ResonanceData};
use crate::series::LaurentMatrix;
use crate::spectral::jordan_decomposition;
use crate::CMatrix;

#[derive(Debug, Clone)]
pub struct DescentData {
    pub m: u32,
    /// Cocharacter exponents, one per basis column.
    pub phi: Vec<i64>,
    pub basis: CMatrix,
    pub basis_inv: CMatrix,
    /// Reduced constant; the b-cycle monodromy.
    pub c: CMatrix,
    /// Finite-order element `φ(e^{2πi/m})`; the a-cycle monodromy.
    pub theta_a: CMatrix,
    pub s_red_eigs: Vec<crate::Complex>,
    /// Residual of the explicit conjugation check, entrywise in the adapted
    /// basis and relative to the size of each entry before cancellation.
    pub witness_residual: f64,
    pub theta_order_residual: f64,
    pub commutator_residual: f64,
}

impl DescentData {
    /// The conjugator `φ(z^{1/m})^{-1} = P·diag(z^{-φ_i/m})·P^{-1}` and its
    /// inverse, exact Laurent polynomials over `z^{1/m}` known to `known_to`.
    pub fn conjugator(&self, known_to: i64) -> Result<(LaurentMatrix, LaurentMatrix)> {
        let (d, d_inv) = diagonal_cocharacter(&self.phi, self.m, known_to)?;
        Ok((
            d.conjugate_by_constant(&self.basis, &self.basis_inv),
            d_inv.conjugate_by_constant(&self.basis, &self.basis_inv),
        ))
    }
}

/// `diag(z^{-φ_i/m})` and `diag(z^{φ_i/m})`.
fn diagonal_cocharacter(phi: &[i64], m: u32, known_to: i64) -> Result<(LaurentMatrix, LaurentMatrix)> {
    let n = phi.len();
    let lo = phi.iter().map(|p| -p.abs()).min().unwrap_or(0);
    let build = |sign: i64| {
        let terms = phi.iter().enumerate().map(|(i, p)| {
            let mut e = linalg::zeros(n, n);
            e[(i, i)] = linalg::c(1.0, 0.0);
            (sign * p, e)
        });
        LaurentMatrix::new(n, n, m, (lo, known_to.max(-lo)), terms)
    };
    Ok((build(-1)?, build(1)?))
}

/// `galois_shift(g)·g^{-1}`, required to be a constant of order dividing `m`.
pub fn galois_cocycle(g: &LaurentMatrix, m: u32) -> Result<CMatrix> {
    let g_inv = g.invert()?;
    galois_cocycle_with_inverse(g, &g_inv, m)
}

pub fn galois_cocycle_with_inverse(g: &LaurentMatrix, g_inv: &LaurentMatrix, m: u32) -> Result<CMatrix> {
    let g = g.with_covering(m)?;
    let g_inv = g_inv.with_covering(m)?;
    let prod = g.galois_shift().multiply(&g_inv)?;
    let theta = prod.coeff(0).unwrap_or_else(|| linalg::zeros(g.rows(), g.cols()));
    let scale = linalg::max_abs(&theta).max(1.0);
    let residual = prod.nonconstant_scale() / scale;
    if residual > 1e-9 {
        return Err(Error::NotConstantCocycle { residual });
    }
    let order = linalg::max_abs(&(linalg::power(&theta, m) - linalg::identity(theta.nrows())));
    if order > 1e-9 {
        return Err(Error::VerificationFailed {
            what: format!("cocycle has order not dividing {m}"),
            residual: order,
        });
    }
    Ok(theta)
}

/// Exact `exp` of a strictly block upper triangular matrix.
fn exp_nilpotent(y: &CMatrix) -> CMatrix {
    let n = y.nrows();
    let mut sum = linalg::identity(n);
    let mut term = linalg::identity(n);
    for p in 1..=n {
        term = &term * y / linalg::c(p as f64, 0.0);
        sum += &term;
    }
    sum
}

pub fn descend(af: &AlignedForm, rd: &ResonanceData, cfg: &ModulusConfig, tol: &ToleranceConfig) -> Result<DescentData> {
    let j = &af.jordan;
    let n = j.n();
    if rd.phi.len() != n {
        return Err(Error::SizeMismatch(format!(
            "resonance data has {} entries for rank {n}",
            rd.phi.len()
        )));
    }
    let m = rd.m;
    let weights = af.weights_in_basis();
    for (i, y) in weights.iter().enumerate() {
        let scale = linalg::max_abs(y);
        for r in 0..n {
            for s in 0..n {
                if y[(r, s)].norm() > 1e-12 * scale.max(1e-300)
                    && rd.phi[r] - rd.phi[s] != m as i64 * (i as i64 + 1)
                {
                    return Err(Error::ResonanceMismatch {
                        index: i + 1,
                        row: r,
                        col: s,
                    });
                }
            }
        }
    }
    // Components of the original x_i outside the resolved weight blocks.
    for (i, (x, y)) in af.xs.iter().zip(&weights).enumerate() {
        let stray = linalg::max_abs(&(j.to_basis(x) - y));
        if stray > tol.eps_rank * linalg::max_abs(x).max(1.0) {
            let full = j.to_basis(x) - y;
            let (mut r, mut s) = (0, 0);
            for a in 0..n {
                for b in 0..n {
                    if full[(a, b)].norm() > full[(r, s)].norm() {
                        (r, s) = (a, b);
                    }
                }
            }
            return Err(Error::ResonanceMismatch { index: i + 1, row: r, col: s });
        }
    }

    let mut a0_p = linalg::zeros(n, n);
    let a0_full = j.to_basis(&af.a0);
    for cl in &j.clusters {
        a0_p.view_mut((cl.start, cl.start), (cl.len, cl.len))
            .copy_from(&a0_full.view((cl.start, cl.start), (cl.len, cl.len)));
    }
    let shift_inv: Vec<_> = rd.phi.iter().map(|p| cfg.q_pow(-(*p as f64) / m as f64)).collect();
    let mut c_p = linalg::diag(&shift_inv) * &a0_p;
    for y in &weights {
        c_p *= exp_nilpotent(y);
    }
    let c = j.from_basis(&c_p);
    let theta_diag: Vec<_> = rd.phi.iter().map(|p| unit_pow(*p as f64 / m as f64)).collect();

    let mut dd = DescentData {
        m,
        phi: rd.phi.clone(),
        basis: j.basis.clone(),
        basis_inv: j.basis_inv.clone(),
        c,
        theta_a: linalg::zeros(n, n),
        s_red_eigs: rd.s_red_eigs.clone(),
        witness_residual: f64::INFINITY,
        theta_order_residual: f64::INFINITY,
        commutator_residual: f64::INFINITY,
    };

    // a-cycle monodromy: the Galois cocycle of φ(z^{1/m}), computed on the
    // diagonal form and carried to the original basis.
    let (d, d_inv) = diagonal_cocharacter(&rd.phi, m, 0)?;
    let theta_p = galois_cocycle_with_inverse(&d_inv, &d, m)?;
    debug_assert!(linalg::max_abs(&(&theta_p - linalg::diag(&theta_diag))) < 1e-12);
    dd.theta_a = j.from_basis(&theta_p);

    // Witness: explicit twisted conjugation of the aligned polynomial, done
    // in the adapted basis where the conjugator is diagonal. Entry (i, j) of
    // the conjugate is q^{-φ_i/m} times the matching entry of the loop, and
    // is compared with that size.
    let poly = af.expand(0)?;
    let spread = rd.phi.iter().map(|p| p.abs()).max().unwrap_or(0);
    let top = (poly.window().1 + 1) * m as i64 + 2 * spread + m as i64;
    let poly = poly
        .with_covering(m)?
        .with_known_top(top)
        .conjugate_by_constant(&dd.basis_inv, &dd.basis);
    let (dw, dw_inv) = diagonal_cocharacter(&rd.phi, m, top)?;
    let conj = LaurentMatrix::twisted_conjugate_with_inverse(&dw, &dw_inv, &poly, cfg)?;
    conj.coeff(0).ok_or(Error::VerificationFailed {
        what: "conjugated loop lost its constant term".into(),
        residual: f64::INFINITY,
    })?;
    let c_scale = linalg::max_abs(&dd.c).max(1.0);
    let a_scale = poly.scale().max(f64::MIN_POSITIVE);
    let row_size: Vec<f64> = rd
        .phi
        .iter()
        .map(|p| cfg.q_abs().powf(-(*p as f64) / m as f64) * a_scale)
        .collect();
    let mut worst: f64 = 0.0;
    for (k, x) in conj.terms() {
        let r = if k == 0 { x - &c_p } else { x.clone() };
        for i in 0..n {
            for jj in 0..n {
                worst = worst.max(r[(i, jj)].norm() / row_size[i]);
            }
        }
    }
    dd.witness_residual = worst;
    if dd.witness_residual > tol.eps_rank {
        return Err(Error::VerificationFailed {
            what: "twisted conjugation to the reduced constant".into(),
            residual: dd.witness_residual,
        });
    }
    dd.theta_order_residual =
        linalg::max_abs(&(linalg::power(&dd.theta_a, m) - linalg::identity(n)));
    dd.commutator_residual =
        linalg::max_abs(&(&dd.theta_a * &dd.c - &dd.c * &dd.theta_a)) / c_scale;
    if dd.theta_order_residual > tol.eps_rank || dd.commutator_residual > tol.eps_rank {
        return Err(Error::VerificationFailed {
            what: "monodromy pair relations".into(),
            residual: dd.theta_order_residual.max(dd.commutator_residual),
        });
    }
    let c_eigs = jordan_decomposition(&dd.c, tol)?.eigs;
    if !is_reduced(&c_eigs, cfg, tol) {
        return Err(Error::VerificationFailed {
            what: "descended constant is not reduced".into(),
            residual: 0.0,
        });
    }
    Ok(dd)
}
