//! Alignment of integral loops into the finite normal form
//! `a0·exp(x_1 z)·…·exp(x_K z^K)` with `Ad(a0^ss)·x_i = q^i·x_i`.

use crate::config::{ModulusConfig, ToleranceConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::series::LaurentMatrix;
use crate::spectral::{jordan_decomposition, q_power_of, weight_decomposition, JordanData};
use crate::{CMatrix, Complex};

/// Safety factor on the a-priori round-off bound of the order-`k` residual
/// below which a correction is indistinguishable from zero.
const ROUNDOFF_FACTOR: f64 = 16.0;

#[derive(Debug, Clone)]
pub struct AlignedForm {
    pub a0: CMatrix,
    pub jordan: JordanData,
    /// `x_1, …, x_K`; entries may be zero.
    pub xs: Vec<CMatrix>,
    pub k: u32,
    pub cfg: ModulusConfig,
    pub tol: ToleranceConfig,
}

impl AlignedForm {
    pub fn n(&self) -> usize {
        self.a0.nrows()
    }

    /// Builds an aligned form from a constant and weight vectors, checking
    /// the weight condition.
    pub fn new(a0: CMatrix, xs: Vec<CMatrix>, cfg: &ModulusConfig, tol: &ToleranceConfig) -> Result<Self> {
        let jordan = jordan_decomposition(&a0, tol)?;
        let k = weight_decomposition(&jordan, cfg, tol).k_max;
        let af = Self { a0, jordan, xs, k, cfg: *cfg, tol: *tol };
        let res = af.weight_residual(cfg);
        if res > tol.eps_rank {
            return Err(Error::VerificationFailed {
                what: "weight condition Ad(a0^ss)x_i = q^i x_i".into(),
                residual: res,
            });
        }
        Ok(af)
    }

    /// `max_i ‖Ad(a0^ss)x_i − q^i x_i‖ / max(1, ‖x_i‖)`, evaluated in the
    /// eigenbasis where `Ad(a0^ss)` acts on entry `(r, c)` by `λ_r/λ_c`.
    /// Each entry is taken relative to `|λ_r/λ_c| + |q^i|`.
    pub fn weight_residual(&self, cfg: &ModulusConfig) -> f64 {
        let eigs = &self.jordan.eigs;
        self.xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let qi = cfg.q_pow((i + 1) as f64);
                let xb = self.jordan.to_basis(x);
                let mut r = xb.clone();
                for ((row, col), v) in r.iter_mut().enumerate().map(|(k, v)| ((k % xb.nrows(), k / xb.nrows()), v)) {
                    let ratio = eigs[row] / eigs[col];
                    *v *= (ratio - qi) / (ratio.norm() + qi.norm());
                }
                linalg::norm(&r) / linalg::norm(&xb).max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Degree of the expanded polynomial.
    pub fn degree_bound(&self) -> i64 {
        let n = self.n() as i64;
        self.xs
            .iter()
            .enumerate()
            .filter(|(_, x)| linalg::max_abs(x) > 0.0)
            .map(|(i, _)| (i as i64 + 1) * (n - 1))
            .sum()
    }

    /// `a0·exp(x_1 z)·…·exp(x_K z^K)` as an exact polynomial known at least
    /// to exponent `known_to`. Products are formed in the eigenbasis, where
    /// each `x_i` is strictly block upper triangular, so nilpotency is exact.
    pub fn expand(&self, known_to: i64) -> Result<LaurentMatrix> {
        let hi = known_to.max(self.degree_bound()).max(0);
        let j = &self.jordan;
        let mut out = LaurentMatrix::constant(&block_diagonal_part(j, &j.to_basis(&self.a0)), hi);
        for (i, y) in self.weights_in_basis().iter().enumerate() {
            if linalg::max_abs(y) == 0.0 {
                continue;
            }
            let e = LaurentMatrix::monomial(y, i as i64 + 1, 1, hi).exp_series()?;
            out = out.multiply(&e.with_low(0))?;
        }
        Ok(out.conjugate_by_constant(&j.basis, &j.basis_inv))
    }

    /// `P^{-1}·x_i·P` restricted to the cluster blocks of weight `q^i`.
    pub fn weights_in_basis(&self) -> Vec<CMatrix> {
        let j = &self.jordan;
        let q_blocks = |i: usize| -> Vec<(usize, usize)> {
            let mut out = Vec::new();
            for (a, ca) in j.clusters.iter().enumerate() {
                for (b, cb) in j.clusters.iter().enumerate() {
                    let bound = self.tol.l_max.max(i as u32);
                    if q_power_of(ca.value / cb.value, &self.cfg, &self.tol, bound) == Some(i as i64) {
                        out.push((a, b));
                    }
                }
            }
            out
        };
        self.xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let full = j.to_basis(x);
                let mut y = linalg::zeros(j.n(), j.n());
                for (a, b) in q_blocks(i + 1) {
                    let (ca, cb) = (&j.clusters[a], &j.clusters[b]);
                    y.view_mut((ca.start, cb.start), (ca.len, cb.len))
                        .copy_from(&full.view((ca.start, cb.start), (ca.len, cb.len)));
                }
                y
            })
            .collect()
    }

    pub fn is_constant(&self) -> bool {
        self.xs.iter().all(|x| linalg::max_abs(x) == 0.0)
    }
}

/// Verifies the loop lies in `GL_n[[z]]` and returns it over `z` with a
/// power-series window.
pub fn check_integral(a: &LaurentMatrix) -> Result<LaurentMatrix> {
    if !a.is_square() {
        return Err(Error::SizeMismatch("loops must be square".into()));
    }
    let m = a.m_cov() as i64;
    for (k, c) in a.terms() {
        if k < 0 {
            let (r, col) = argmax(c);
            return Err(Error::NotIntegralRepresentative(format!(
                "entry ({}, {}) has a term at exponent {} (coefficient {:.6e}{:+.6e}i)",
                r + 1,
                col + 1,
                format_exponent(k, m),
                c[(r, col)].re,
                c[(r, col)].im
            )));
        }
        if k % m != 0 {
            let (r, col) = argmax(c);
            return Err(Error::NotIntegralRepresentative(format!(
                "entry ({}, {}) has a fractional exponent {}",
                r + 1,
                col + 1,
                format_exponent(k, m)
            )));
        }
    }
    let hi = a.window().1;
    let lead = a.coeff(0).ok_or(Error::WindowTooShort { need: 0, have: hi })?;
    if !linalg::is_invertible(&lead, 1e-12) {
        return Err(Error::NotIntegralRepresentative(
            "constant term is singular".into(),
        ));
    }
    let terms: Vec<(i64, CMatrix)> = a.terms().map(|(k, c)| (k / m, c.clone())).collect();
    LaurentMatrix::new(a.rows(), a.cols(), 1, (0, hi.div_euclid(m)), terms)
}

fn argmax(c: &CMatrix) -> (usize, usize) {
    let mut best = (0, 0);
    for i in 0..c.nrows() {
        for j in 0..c.ncols() {
            if c[(i, j)].norm() > c[best].norm() {
                best = (i, j);
            }
        }
    }
    best
}

fn format_exponent(k: i64, m: i64) -> String {
    if m == 1 {
        k.to_string()
    } else {
        format!("{k}/{m}")
    }
}

fn coeff_abs(s: &LaurentMatrix, k: i64) -> f64 {
    s.coeff(k).map(|c| linalg::max_abs(&c)).unwrap_or(0.0)
}

fn chop(x: &mut CMatrix, floor: f64) {
    for z in x.iter_mut() {
        if z.norm() < floor {
            *z = Complex::new(0.0, 0.0);
        }
    }
}

/// Solves one step of the alignment recursion. All matrices are in the
/// eigenbasis; `a0_p` is block diagonal. Returns `(x_k, y_k)`.
fn step(
    a_p: &CMatrix,
    a0_p: &CMatrix,
    k: i64,
    j: &JordanData,
    cfg: &ModulusConfig,
    tol: &ToleranceConfig,
) -> Result<(CMatrix, CMatrix)> {
    let n = j.n();
    let qk = cfg.q_pow(k as f64);
    let mut x_p = linalg::zeros(n, n);
    let mut y_p = linalg::zeros(n, n);
    for ca in &j.clusters {
        for cb in &j.clusters {
            let block = a_p.view((ca.start, cb.start), (ca.len, cb.len)).into_owned();
            if linalg::max_abs(&block) == 0.0 {
                continue;
            }
            if q_power_of(ca.value / cb.value, cfg, tol, tol.l_max.max(k as u32)) == Some(k) {
                y_p.view_mut((ca.start, cb.start), (ca.len, cb.len)).copy_from(&block);
                continue;
            }
            // q^k·B_a^{-1}·X·B_b − X = −A on this block.
            let b_a = a0_p.view((ca.start, ca.start), (ca.len, ca.len)).into_owned();
            let b_b = a0_p.view((cb.start, cb.start), (cb.len, cb.len)).into_owned();
            let b_a_inv = linalg::inverse(&b_a, 1e-14)?;
            let op = linalg::kron(&b_b.transpose(), &b_a_inv) * qk
                - linalg::identity(ca.len * cb.len);
            let rhs = CMatrix::from_iterator(ca.len * cb.len, 1, block.iter().map(|z| -z));
            let sol = linalg::solve(&op, &rhs)?;
            let x_block = CMatrix::from_iterator(ca.len, cb.len, sol.iter().copied());
            x_p.view_mut((ca.start, cb.start), (ca.len, cb.len)).copy_from(&x_block);
        }
    }
    Ok((x_p, y_p))
}

/// Keeps only the cluster-diagonal blocks of a matrix in the eigenbasis.
fn block_diagonal_part(j: &JordanData, m: &CMatrix) -> CMatrix {
    let mut out = linalg::zeros(j.n(), j.n());
    for c in &j.clusters {
        out.view_mut((c.start, c.start), (c.len, c.len))
            .copy_from(&m.view((c.start, c.start), (c.len, c.len)));
    }
    out
}

/// Aligns `a`, returning the aligned form and a conjugator `g` with
/// `g(qz)·a(z)·g(z)⁻¹` equal to the expanded aligned polynomial on the
/// input window.
///
/// The recursion runs in the eigenbasis of `a0^ss`, continuing past `K` to
/// the top of the input window so that the conjugator is complete there;
/// weight components beyond `K` vanish identically.
pub fn align(a: &LaurentMatrix, cfg: &ModulusConfig, tol: &ToleranceConfig) -> Result<(AlignedForm, LaurentMatrix)> {
    let a = check_integral(a)?;
    let n = a.n();
    let hi = a.window().1;
    let a0 = a.coeff(0).expect("window starts at 0");
    let jordan = jordan_decomposition(&a0, tol)?;
    let big_k = weight_decomposition(&jordan, cfg, tol).k_max;
    if hi < big_k as i64 + 1 {
        return Err(Error::WindowTooShort {
            need: big_k as i64 + 1,
            have: hi,
        });
    }
    let a0_p = block_diagonal_part(&jordan, &jordan.to_basis(&a0));
    let a0_p_inv = linalg::inverse(&a0_p, 1e-14)?;
    let a0_inv_abs = linalg::max_abs(&a0_p_inv);
    let a0_inv = LaurentMatrix::constant(&a0_p_inv, hi);
    let scale = (linalg::norm(&a0_p) * linalg::norm(&a0_p_inv)).max(1.0);

    let mut current = a.conjugate_by_constant(&jordan.basis_inv, &jordan.basis);
    let mut conj = LaurentMatrix::identity(n, hi);
    let mut e_inv = LaurentMatrix::identity(n, hi);
    let mut ys: Vec<CMatrix> = Vec::new();
    for k in 1..=hi {
        let residual = e_inv.multiply(&a0_inv)?.multiply(&current)?;
        let a_k = residual.coeff(k).expect("k within window");
        let (mut x, mut y) = step(&a_k, &a0_p, k, &jordan, cfg, tol)?;
        let magnitude: f64 = (0..=k)
            .map(|i| coeff_abs(&e_inv, i) * coeff_abs(&current, k - i))
            .sum::<f64>()
            * a0_inv_abs
            * n as f64;
        let floor = ROUNDOFF_FACTOR * f64::EPSILON * magnitude;
        chop(&mut x, floor);
        chop(&mut y, floor);
        if k <= big_k as i64 {
            ys.push(jordan.from_basis(&y));
        } else if linalg::max_abs(&y) > tol.eps_rank * scale {
            return Err(Error::VerificationFailed {
                what: format!("weight component beyond K at order {k}"),
                residual: linalg::max_abs(&y),
            });
        }
        if linalg::max_abs(&x) > 0.0 {
            let h = LaurentMatrix::monomial(&x, k, 1, hi).exp_series()?.with_low(0);
            let h_inv = LaurentMatrix::monomial(&(-&x), k, 1, hi).exp_series()?.with_low(0);
            current = LaurentMatrix::twisted_conjugate_with_inverse(&h, &h_inv, &current, cfg)?;
            conj = h.multiply(&conj)?;
        }
        if linalg::max_abs(&y) > 0.0 {
            let ey = LaurentMatrix::monomial(&(-&y), k, 1, hi).exp_series()?.with_low(0);
            e_inv = ey.multiply(&e_inv)?;
        }
    }
    let conj = conj.conjugate_by_constant(&jordan.basis, &jordan.basis_inv);
    let af = AlignedForm {
        a0,
        jordan,
        xs: ys,
        k: big_k,
        cfg: *cfg,
        tol: *tol,
    };
    let res = af.weight_residual(cfg);
    if res > tol.eps_rank {
        return Err(Error::VerificationFailed {
            what: "weight condition Ad(a0^ss)x_i = q^i x_i".into(),
            residual: res,
        });
    }
    Ok((af, conj))
}

/// Round-trip residual of an alignment, measured in the rescaled variable
/// `ρz` with `ρ` set by the growth of the conjugator and its inverse. The
/// conjugator is a formal series that generally diverges, so unscaled
/// high-order coefficients only carry relative accuracy.
pub fn round_trip_residual(
    a: &LaurentMatrix,
    af: &AlignedForm,
    g: &LaurentMatrix,
    cfg: &ModulusConfig,
) -> Result<f64> {
    let a = check_integral(a)?;
    let hi = a.window().1;
    let g_inv = g.invert()?;
    let lhs = LaurentMatrix::twisted_conjugate_with_inverse(g, &g_inv, &a, cfg)?.truncate(hi);
    let rhs = af.expand(hi)?.truncate(hi);
    let growth = g.growth_rate().max(g_inv.growth_rate()).max(a.growth_rate()).max(1.0);
    let scale = linalg::norm(&af.a0).max(1.0);
    Ok(lhs.scaled_max_diff(&rhs, 1.0 / growth)? / scale)
}

/// Conjugates an aligned form by a constant so that `a0` is upper
/// triangular with clusters ordered by increasing modulus; every `x_i` is
/// then strictly upper triangular.
pub fn triangularize(af: &AlignedForm, cfg: &ModulusConfig, tol: &ToleranceConfig) -> Result<AlignedForm> {
    let t = triangularizing_basis(af)?;
    let t_inv = linalg::inverse(&t, 1e-14)?;
    let a0 = &t_inv * &af.a0 * &t;
    let xs = af.xs.iter().map(|x| &t_inv * x * &t).collect();
    let jordan = jordan_decomposition(&a0, tol)?;
    let k = weight_decomposition(&jordan, cfg, tol).k_max;
    Ok(AlignedForm { a0, jordan, xs, k, cfg: *cfg, tol: *tol })
}

/// Eigenbasis of `a0` refined by a unitary Schur step inside each cluster
/// whose block is not already upper triangular.
pub fn triangularizing_basis(af: &AlignedForm) -> Result<CMatrix> {
    let j = &af.jordan;
    let in_basis = j.to_basis(&af.a0);
    let scale = linalg::norm(&af.a0).max(1.0);
    let mut qs = Vec::with_capacity(j.clusters.len());
    for c in &j.clusters {
        let block = in_basis.view((c.start, c.start), (c.len, c.len)).into_owned();
        let lower = (0..c.len)
            .flat_map(|r| (0..r).map(move |s| (r, s)))
            .map(|(r, s)| block[(r, s)].norm())
            .fold(0.0, f64::max);
        if lower <= 1e-13 * scale {
            qs.push(linalg::identity(c.len));
        } else {
            qs.push(linalg::schur(&block).0);
        }
    }
    Ok(&j.basis * linalg::block_diag(&qs))
}
