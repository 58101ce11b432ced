//! Truncated matrix Laurent series in a formal variable `z^{1/m}`.
//!
//! A [`LaurentMatrix`] stores coefficients indexed by integer exponents in
//! units of `1/m_cov`, together with an explicit window `[lo, hi]`.
//! Everything below `lo` is zero; everything above `hi` is unknown. Every
//! operation computes the largest output window on which its result is
//! actually determined by the inputs.

use std::collections::BTreeMap;

use num_integer::Integer;

use crate::config::{unit_pow, ModulusConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::{CMatrix, Complex};

/// Relative size under which a coefficient counts as absent when locating
/// leading terms.
const NEGLIGIBLE: f64 = 1e-13;
/// Conditioning floor for leading coefficients.
const LEADING_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LaurentMatrix {
    rows: usize,
    cols: usize,
    m_cov: u32,
    lo: i64,
    hi: i64,
    coeffs: BTreeMap<i64, CMatrix>,
}

impl LaurentMatrix {
    /// Builds a series from `(exponent, coefficient)` pairs. Exponents must lie
    /// in `window`; repeated exponents are summed.
    pub fn new(
        rows: usize,
        cols: usize,
        m_cov: u32,
        window: (i64, i64),
        terms: impl IntoIterator<Item = (i64, CMatrix)>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::SizeMismatch("matrix dimensions must be positive".into()));
        }
        if m_cov == 0 {
            return Err(Error::Parse("m_cov must be at least 1".into()));
        }
        if window.0 > window.1 {
            return Err(Error::Parse(format!(
                "empty window [{}, {}]",
                window.0, window.1
            )));
        }
        let mut out = Self::zero(rows, cols, m_cov, window);
        for (k, m) in terms {
            if m.nrows() != rows || m.ncols() != cols {
                return Err(Error::SizeMismatch(format!(
                    "coefficient at exponent {k} is {}x{}, expected {rows}x{cols}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Parse(format!("non-finite entry at exponent {k}")));
            }
            if k < window.0 || k > window.1 {
                return Err(Error::Parse(format!(
                    "exponent {k} outside window [{}, {}]",
                    window.0, window.1
                )));
            }
            out.add_term(k, &m);
        }
        Ok(out)
    }

    pub fn zero(rows: usize, cols: usize, m_cov: u32, window: (i64, i64)) -> Self {
        Self {
            rows,
            cols,
            m_cov,
            lo: window.0,
            hi: window.1,
            coeffs: BTreeMap::new(),
        }
    }

    /// Constant loop known exactly up to exponent `known_to`.
    pub fn constant(m: &CMatrix, known_to: i64) -> Self {
        let mut out = Self::zero(m.nrows(), m.ncols(), 1, (0, known_to.max(0)));
        out.add_term(0, m);
        out
    }

    pub fn identity(n: usize, known_to: i64) -> Self {
        Self::constant(&linalg::identity(n), known_to)
    }

    /// `coeff·z^{k/m_cov}`, known on `[k, known_to]`.
    pub fn monomial(coeff: &CMatrix, k: i64, m_cov: u32, known_to: i64) -> Self {
        let mut out = Self::zero(coeff.nrows(), coeff.ncols(), m_cov, (k, known_to.max(k)));
        out.add_term(k, coeff);
        out
    }

    fn add_term(&mut self, k: i64, m: &CMatrix) {
        let entry = self
            .coeffs
            .entry(k)
            .or_insert_with(|| linalg::zeros(self.rows, self.cols));
        *entry += m;
        if entry.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            self.coeffs.remove(&k);
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Size of a square series.
    pub fn n(&self) -> usize {
        self.rows
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn m_cov(&self) -> u32 {
        self.m_cov
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    /// Coefficient at exponent `k`; zero when not stored. Exponents above the
    /// window are unknown and yield `None`.
    pub fn coeff(&self, k: i64) -> Option<CMatrix> {
        if k > self.hi {
            return None;
        }
        Some(
            self.coeffs
                .get(&k)
                .cloned()
                .unwrap_or_else(|| linalg::zeros(self.rows, self.cols)),
        )
    }

    /// Stored (nonzero) terms in ascending exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &CMatrix)> {
        self.coeffs.iter().map(|(k, m)| (*k, m))
    }

    /// Largest coefficient magnitude over the stored terms.
    pub fn scale(&self) -> f64 {
        self.coeffs.values().map(linalg::max_abs).fold(0.0, f64::max)
    }

    /// Lowest exponent whose coefficient is not negligible. The threshold is
    /// relative to the largest coefficient but capped at unit scale, since
    /// higher coefficients of formal conjugators may grow without bound.
    pub fn valuation(&self) -> Option<i64> {
        let s = self.scale().min(1.0);
        self.coeffs
            .iter()
            .find(|(_, m)| linalg::max_abs(m) > NEGLIGIBLE * s)
            .map(|(k, _)| *k)
    }

    /// Highest stored exponent.
    pub fn degree(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    /// Restricts the known window to `[lo, min(hi, new_hi)]`.
    pub fn truncate(&self, new_hi: i64) -> Self {
        let hi = self.hi.min(new_hi).max(self.lo);
        let mut out = Self::zero(self.rows, self.cols, self.m_cov, (self.lo, hi));
        out.coeffs = self.coeffs.range(..=hi).map(|(k, m)| (*k, m.clone())).collect();
        out
    }

    /// Widens the known window upward, declaring all unstored coefficients up
    /// to `new_hi` to be zero. Only valid for genuine polynomials.
    pub fn with_known_top(&self, new_hi: i64) -> Self {
        let mut out = self.clone();
        out.hi = new_hi.max(self.degree().unwrap_or(self.lo)).max(self.lo);
        out
    }

    /// Lowers the window floor; coefficients below `lo` are zero, so this
    /// never loses information.
    pub fn with_low(&self, new_lo: i64) -> Self {
        let mut out = self.clone();
        out.lo = out.lo.min(new_lo);
        out
    }

    /// Re-expresses the series over `z^{1/m}` for a multiple `m` of `m_cov`.
    pub fn with_covering(&self, m: u32) -> Result<Self> {
        if m == self.m_cov {
            return Ok(self.clone());
        }
        if m == 0 || !m.is_multiple_of(self.m_cov) {
            return Err(Error::CoveringMismatch(self.m_cov, m));
        }
        let f = (m / self.m_cov) as i64;
        let mut out = Self::zero(self.rows, self.cols, m, (self.lo * f, (self.hi + 1) * f - 1));
        out.coeffs = self.coeffs.iter().map(|(k, c)| (k * f, c.clone())).collect();
        Ok(out)
    }

    /// Rescales both operands to the least common covering denominator.
    pub fn common_covering(a: &Self, b: &Self) -> Result<(Self, Self)> {
        let m = a.m_cov.lcm(&b.m_cov);
        Ok((a.with_covering(m)?, b.with_covering(m)?))
    }

    fn check_same_covering(&self, other: &Self) -> Result<()> {
        if self.m_cov != other.m_cov {
            return Err(Error::CoveringMismatch(self.m_cov, other.m_cov));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_covering(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::SizeMismatch("addition of differently sized series".into()));
        }
        let lo = self.lo.min(other.lo);
        let hi = self.hi.min(other.hi);
        let mut out = Self::zero(self.rows, self.cols, self.m_cov, (lo, hi.max(lo)));
        for (k, m) in self.coeffs.range(..=hi).chain(other.coeffs.range(..=hi)) {
            out.add_term(*k, m);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(Complex::new(-1.0, 0.0)))
    }

    pub fn scaled(&self, s: Complex) -> Self {
        let mut out = self.clone();
        for m in out.coeffs.values_mut() {
            *m *= s;
        }
        out.coeffs.retain(|_, m| m.iter().any(|z| z.re != 0.0 || z.im != 0.0));
        out
    }

    /// Left and right multiplication by constant matrices.
    pub fn conjugate_by_constant(&self, left: &CMatrix, right: &CMatrix) -> Self {
        let mut out = Self::zero(left.nrows(), right.ncols(), self.m_cov, (self.lo, self.hi));
        for (k, m) in &self.coeffs {
            out.add_term(*k, &(left * m * right));
        }
        out
    }

    /// Coefficientwise convolution. The output window stops where the first
    /// unknown coefficient of either factor would contribute.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_same_covering(other)?;
        if self.cols != other.rows {
            return Err(Error::SizeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let lo = self.lo + other.lo;
        let hi = (self.lo + other.hi).min(other.lo + self.hi);
        let mut out = Self::zero(self.rows, other.cols, self.m_cov, (lo, hi));
        for (i, a) in &self.coeffs {
            for (j, b) in other.coeffs.range(..=(hi - i)) {
                out.add_term(i + j, &(a * b));
            }
        }
        Ok(out)
    }

    /// Inverse of a series whose leading behaviour can be normalized to an
    /// invertible constant, first by a scalar monomial `z^v` and failing that
    /// by column-wise monomials `diag(z^{v_j})`.
    pub fn invert(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::SizeMismatch("only square series can be inverted".into()));
        }
        let v = self
            .valuation()
            .ok_or(Error::NonInvertibleLeadingTerm { exponent: self.lo })?;
        let lead = self.coeff(v).expect("valuation lies in window");
        if linalg::is_invertible(&lead, LEADING_RCOND) {
            let shifts = vec![v; self.cols];
            return self.invert_column_shifted(&shifts);
        }
        let shifts = self.column_valuations();
        let lead = self.column_leading(&shifts);
        if linalg::is_invertible(&lead, LEADING_RCOND) {
            return self.invert_column_shifted(&shifts);
        }
        Err(Error::NonInvertibleLeadingTerm { exponent: v })
    }

    fn column_valuations(&self) -> Vec<i64> {
        let s = self.scale();
        (0..self.cols)
            .map(|j| {
                self.coeffs
                    .iter()
                    .find(|(_, m)| m.column(j).iter().any(|z| z.norm() > NEGLIGIBLE * s))
                    .map(|(k, _)| *k)
                    .unwrap_or(self.hi)
            })
            .collect()
    }

    fn column_leading(&self, shifts: &[i64]) -> CMatrix {
        let mut lead = linalg::zeros(self.rows, self.cols);
        for (j, &v) in shifts.iter().enumerate() {
            if let Some(m) = self.coeffs.get(&v) {
                lead.set_column(j, &m.column(j));
            }
        }
        lead
    }

    /// Inverts `A = B·diag(z^{v_j})` through the power-series inverse of `B`.
    fn invert_column_shifted(&self, shifts: &[i64]) -> Result<Self> {
        let n = self.rows;
        let vmax = *shifts.iter().max().unwrap();
        let top = self.hi - vmax;
        if top < 0 {
            return Err(Error::NonInvertibleLeadingTerm { exponent: vmax });
        }
        // B_k column j = A_{k + v_j} column j, known for k <= hi - v_j.
        let b: Vec<CMatrix> = (0..=top)
            .map(|k| {
                let mut m = linalg::zeros(n, n);
                for (j, &v) in shifts.iter().enumerate() {
                    if let Some(a) = self.coeffs.get(&(k + v)) {
                        m.set_column(j, &a.column(j));
                    }
                }
                m
            })
            .collect();
        let b0_inv = linalg::inverse(&b[0], LEADING_RCOND)
            .map_err(|_| Error::NonInvertibleLeadingTerm { exponent: vmax })?;
        let mut inv: Vec<CMatrix> = Vec::with_capacity(b.len());
        inv.push(b0_inv.clone());
        for k in 1..b.len() {
            let mut acc = linalg::zeros(n, n);
            for i in 1..=k {
                if b[i].iter().any(|z| z.re != 0.0 || z.im != 0.0) {
                    acc += &b[i] * &inv[k - i];
                }
            }
            inv.push(-(&b0_inv * acc));
        }
        // A^{-1} = diag(z^{-v_i})·B^{-1}: row i of B^{-1} shifts by -v_i.
        let lo = -vmax;
        let hi = top - vmax;
        let mut out = Self::zero(n, n, self.m_cov, (lo, hi));
        for (k, m) in inv.iter().enumerate() {
            for (i, &v) in shifts.iter().enumerate() {
                let e = k as i64 - v;
                if e > hi {
                    continue;
                }
                let mut row = linalg::zeros(n, n);
                row.set_row(i, &m.row(i));
                out.add_term(e, &row);
            }
        }
        if out.lo > out.coeffs.keys().next().copied().unwrap_or(out.lo) {
            out.lo = *out.coeffs.keys().next().unwrap();
        }
        Ok(out)
    }

    /// Substitution `z^{1/m} ↦ e^{2πiτ/m}·z^{1/m}`.
    pub fn q_shift(&self, cfg: &ModulusConfig) -> Self {
        let m = self.m_cov as f64;
        let mut out = self.clone();
        for (k, c) in out.coeffs.iter_mut() {
            *c *= cfg.q_pow(*k as f64 / m);
        }
        out
    }

    /// Galois generator `z^{1/m} ↦ e^{2πi/m}·z^{1/m}`.
    pub fn galois_shift(&self) -> Self {
        let m = self.m_cov as i64;
        let mut out = self.clone();
        for (k, c) in out.coeffs.iter_mut() {
            *c *= unit_pow(k.rem_euclid(m) as f64 / m as f64);
        }
        out
    }

    /// Twisted conjugation `g(qz)·a(z)·g(z)⁻¹`.
    pub fn twisted_conjugate(g: &Self, a: &Self, cfg: &ModulusConfig) -> Result<Self> {
        let g_inv = g.invert()?;
        Self::twisted_conjugate_with_inverse(g, &g_inv, a, cfg)
    }

    /// Twisted conjugation with a caller-supplied inverse of `g`.
    pub fn twisted_conjugate_with_inverse(
        g: &Self,
        g_inv: &Self,
        a: &Self,
        cfg: &ModulusConfig,
    ) -> Result<Self> {
        let m = g.m_cov.lcm(&a.m_cov).lcm(&g_inv.m_cov);
        let g = g.with_covering(m)?;
        let g_inv = g_inv.with_covering(m)?;
        let a = a.with_covering(m)?;
        g.q_shift(cfg).multiply(&a)?.multiply(&g_inv)
    }

    fn require_positive_valuation(&self, what: &str) -> Result<()> {
        let s = self.scale();
        if let Some((k, _)) = self
            .coeffs
            .iter()
            .find(|(k, m)| **k <= 0 && linalg::max_abs(m) > NEGLIGIBLE * s.max(1.0))
        {
            return Err(Error::ValuationViolation(format!(
                "{what} needs strictly positive valuation, found exponent {k}"
            )));
        }
        Ok(())
    }

    /// `exp(X)` for `X` of strictly positive valuation.
    pub fn exp_series(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::SizeMismatch("exp of non-square series".into()));
        }
        self.require_positive_valuation("exp_series")?;
        let x = self.positive_part();
        let one = Self::identity(self.rows, self.hi.max(0)).with_covering_unchecked(self.m_cov);
        let mut sum = one.clone();
        let mut term = one;
        let v = x.valuation().unwrap_or(self.hi + 1).max(1);
        let mut p = 1;
        while p as i64 * v <= self.hi {
            term = term.multiply(&x)?.scaled(Complex::new(1.0 / p as f64, 0.0));
            sum = sum.add(&term)?;
            p += 1;
        }
        Ok(sum.truncate(self.hi))
    }

    /// `log(A)` for `A = I + (strictly positive valuation)`.
    pub fn log_series(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::SizeMismatch("log of non-square series".into()));
        }
        let one = Self::identity(self.rows, self.hi.max(0)).with_covering_unchecked(self.m_cov);
        let n = self.sub(&one)?;
        n.require_positive_valuation("log_series")?;
        let n = n.positive_part();
        let mut sum = Self::zero(self.rows, self.cols, self.m_cov, (0, self.hi.max(0)));
        let mut power = one;
        let v = n.valuation().unwrap_or(self.hi + 1).max(1);
        let mut p = 1;
        while p as i64 * v <= self.hi {
            power = power.multiply(&n)?;
            let sign = if p % 2 == 1 { 1.0 } else { -1.0 };
            sum = sum.add(&power.scaled(Complex::new(sign / p as f64, 0.0)))?;
            p += 1;
        }
        Ok(sum.truncate(self.hi))
    }

    /// Drops coefficients at exponents `<= 0` and sets the window floor to 1.
    fn positive_part(&self) -> Self {
        let lo = 1.min(self.hi);
        let mut out = Self::zero(self.rows, self.cols, self.m_cov, (lo, self.hi.max(lo)));
        out.coeffs = self.coeffs.range(1..).map(|(k, m)| (*k, m.clone())).collect();
        out
    }

    fn with_covering_unchecked(mut self, m: u32) -> Self {
        self.m_cov = m;
        self
    }

    /// Maximum entry difference over the common window.
    pub fn max_diff(&self, other: &Self) -> Result<f64> {
        let (a, b) = Self::common_covering(self, other)?;
        let hi = a.hi.min(b.hi);
        let d = a.truncate(hi).sub(&b.truncate(hi))?;
        Ok(d.scale())
    }

    /// `max_{k>0} ‖c_k‖^{1/k}`, an estimate of the inverse convergence radius.
    pub fn growth_rate(&self) -> f64 {
        let m = self.m_cov as f64;
        self.coeffs
            .iter()
            .filter(|(k, _)| **k > 0)
            .map(|(k, c)| linalg::max_abs(c).powf(m / *k as f64))
            .fold(0.0, f64::max)
    }

    /// Maximum coefficient difference after the substitution `z ↦ ρz`.
    pub fn scaled_max_diff(&self, other: &Self, rho: f64) -> Result<f64> {
        let (a, b) = Self::common_covering(self, other)?;
        let hi = a.hi.min(b.hi);
        let d = a.truncate(hi).sub(&b.truncate(hi))?;
        let m = d.m_cov as f64;
        Ok(d.coeffs
            .iter()
            .map(|(k, c)| linalg::max_abs(c) * rho.powf(*k as f64 / m))
            .fold(0.0, f64::max))
    }

    /// Largest coefficient magnitude at nonzero exponents.
    pub fn nonconstant_scale(&self) -> f64 {
        self.coeffs
            .iter()
            .filter(|(k, _)| **k != 0)
            .map(|(_, m)| linalg::max_abs(m))
            .fold(0.0, f64::max)
    }

    /// Evaluates a Laurent polynomial at `z` using the principal branch of
    /// `z^{1/m_cov}`.
    pub fn evaluate(&self, z: Complex) -> CMatrix {
        let root = if self.m_cov == 1 {
            z
        } else {
            z.powf(1.0 / self.m_cov as f64)
        };
        let mut out = linalg::zeros(self.rows, self.cols);
        for (k, m) in &self.coeffs {
            out += m * root.powi(*k as i32);
        }
        out
    }

    /// Matrix transpose of every coefficient.
    pub fn transpose(&self) -> Self {
        let mut out = Self::zero(self.cols, self.rows, self.m_cov, (self.lo, self.hi));
        out.coeffs = self.coeffs.iter().map(|(k, m)| (*k, m.transpose())).collect();
        out
    }

    /// Kronecker product of two series over a common covering.
    pub fn kronecker(&self, other: &Self) -> Result<Self> {
        self.check_same_covering(other)?;
        let lo = self.lo + other.lo;
        let hi = (self.lo + other.hi).min(other.lo + self.hi);
        let mut out = Self::zero(self.rows * other.rows, self.cols * other.cols, self.m_cov, (lo, hi));
        for (i, a) in &self.coeffs {
            for (j, b) in other.coeffs.range(..=(hi - i)) {
                out.add_term(i + j, &linalg::kron(a, b));
            }
        }
        Ok(out)
    }

    /// Block-diagonal sum of two series.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        self.check_same_covering(other)?;
        let lo = self.lo.min(other.lo);
        let hi = self.hi.min(other.hi);
        let (r, c) = (self.rows + other.rows, self.cols + other.cols);
        let mut out = Self::zero(r, c, self.m_cov, (lo, hi));
        let zero_a = linalg::zeros(self.rows, self.cols);
        let zero_b = linalg::zeros(other.rows, other.cols);
        let keys: std::collections::BTreeSet<i64> = self
            .coeffs
            .range(..=hi)
            .chain(other.coeffs.range(..=hi))
            .map(|(k, _)| *k)
            .collect();
        for k in keys {
            let a = self.coeffs.get(&k).unwrap_or(&zero_a);
            let b = other.coeffs.get(&k).unwrap_or(&zero_b);
            out.add_term(k, &linalg::block_diag(&[a.clone(), b.clone()]));
        }
        Ok(out)
    }
}
