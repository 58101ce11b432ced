//! Recognition of eigenvalues in `Γ = {z : z^k = q^l}` and extraction of the
//! covering order and cocharacter.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Signed, Zero};

use crate::config::{ModulusConfig, ToleranceConfig};
use crate::error::{Error, Result};
use crate::Complex;

/// `λ = e^{2πi(τ·r + r1)}` with `r1 ∈ [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GammaExponent {
    pub r: Rational64,
    pub r1: Rational64,
}

impl GammaExponent {
    pub fn new(r: Rational64, r1: Rational64) -> Self {
        Self { r, r1: frac(r1) }
    }

    pub fn zero() -> Self {
        Self::new(Rational64::zero(), Rational64::zero())
    }

    pub fn value(&self, cfg: &ModulusConfig) -> Complex {
        cfg.point_value(to_f64(self.r), to_f64(self.r1))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.r + other.r, self.r1 + other.r1)
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.r, -self.r1)
    }
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: Rational64) -> Rational64 {
    x - x.floor()
}

pub fn to_f64(x: Rational64) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Continued-fraction convergents of `x` with denominator at most `d_max`.
pub fn convergents(x: f64, d_max: u32) -> Vec<Rational64> {
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    let (mut h_prev, mut h) = (1i64, x.floor() as i64);
    let (mut k_prev, mut k) = (0i64, 1i64);
    out.push(Rational64::new(h, k));
    let mut rem = x - x.floor();
    for _ in 0..64 {
        if rem.abs() < 1e-15 {
            break;
        }
        let y = 1.0 / rem;
        let a = y.floor();
        if a > 1e9 {
            break;
        }
        let a = a as i64;
        let (h_next, k_next) = (a * h + h_prev, a * k + k_prev);
        if k_next > d_max as i64 {
            break;
        }
        (h_prev, h, k_prev, k) = (h, h_next, k, k_next);
        out.push(Rational64::new(h, k));
        rem = y - y.floor();
    }
    out
}

/// Recognizes `λ` as `e^{2πi(τr + r1)}` with small-denominator rationals.
/// The acceptance test is relative to `|λ|`.
pub fn gamma_recognize(lambda: Complex, cfg: &ModulusConfig, tol: &ToleranceConfig) -> Option<GammaExponent> {
    if lambda.norm() == 0.0 || !lambda.norm().is_finite() {
        return None;
    }
    let (r_f, _) = cfg.exponents_of(lambda);
    if r_f.abs() > tol.l_max as f64 + 0.5 {
        return None;
    }
    for r in convergents(r_f, tol.d_max).into_iter().rev() {
        if r.abs() > Rational64::from_integer(tol.l_max as i64) {
            continue;
        }
        // Recompute the unit exponent against the candidate r before
        // recognizing it, so that rounding in r does not leak into r1.
        let w = lambda.ln() / Complex::new(0.0, 2.0 * PI);
        let r1_guess = (w.re - to_f64(r) * cfg.tau().re).rem_euclid(1.0);
        for r1 in convergents(r1_guess, tol.d_max).into_iter().rev() {
            let g = GammaExponent::new(r, r1);
            if (g.value(cfg) - lambda).norm() < tol.eps_res * lambda.norm() {
                return Some(g);
            }
        }
    }
    None
}

/// How one eigenvalue relates to `Γ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    Recognized(GammaExponent),
    /// `λ_i = λ_base·e^{2πi(τ·offset.r + offset.r1)}`.
    Generic {
        cluster: usize,
        base: usize,
        offset: GammaExponent,
    },
}

impl Membership {
    /// The τ-exponent assigned to the eigenvalue.
    pub fn tau_exponent(&self) -> Rational64 {
        match self {
            Membership::Recognized(g) => g.r,
            Membership::Generic { offset, .. } => offset.r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceData {
    pub membership: Vec<Membership>,
    pub m: u32,
    pub phi: Vec<i64>,
    pub s_red_eigs: Vec<Complex>,
}

impl ResonanceData {
    pub fn tau_exponents(&self) -> Vec<Rational64> {
        self.membership.iter().map(|m| m.tau_exponent()).collect()
    }
}

pub fn resonance_analyze(eigs: &[Complex], cfg: &ModulusConfig, tol: &ToleranceConfig) -> Result<ResonanceData> {
    let n = eigs.len();
    let mut membership: Vec<Option<Membership>> = eigs
        .iter()
        .map(|&l| gamma_recognize(l, cfg, tol).map(Membership::Recognized))
        .collect();
    let generic: Vec<usize> = (0..n).filter(|&i| membership[i].is_none()).collect();
    let mut cluster_count = 0;
    for &base in &generic {
        if membership[base].is_some() {
            continue;
        }
        let cluster = cluster_count;
        cluster_count += 1;
        let mut offsets: Vec<Option<GammaExponent>> = vec![None; n];
        offsets[base] = Some(GammaExponent::zero());
        let mut queue = VecDeque::from([base]);
        while let Some(i) = queue.pop_front() {
            let oi = offsets[i].expect("queued nodes carry offsets");
            for &j in &generic {
                if j == i {
                    continue;
                }
                let Some(edge) = gamma_recognize(eigs[j] / eigs[i], cfg, tol) else {
                    continue;
                };
                let oj = oi.add(&edge);
                match offsets[j] {
                    None => {
                        if membership[j].is_some() {
                            // Already claimed by an earlier component: the
                            // recognition relation is not transitive here.
                            return Err(Error::InconsistentResonanceGraph { i, j });
                        }
                        offsets[j] = Some(oj);
                        queue.push_back(j);
                    }
                    Some(prev) if prev != oj => {
                        return Err(Error::InconsistentResonanceGraph { i, j });
                    }
                    Some(_) => {}
                }
            }
        }
        for (j, o) in offsets.iter().enumerate() {
            if let Some(offset) = o {
                membership[j] = Some(Membership::Generic {
                    cluster,
                    base,
                    offset: *offset,
                });
            }
        }
    }
    let membership: Vec<Membership> = membership.into_iter().map(|m| m.expect("all assigned")).collect();
    let m = membership
        .iter()
        .map(|x| *x.tau_exponent().denom())
        .fold(1i64, |acc, d| acc.lcm(&d));
    let phi: Vec<i64> = membership
        .iter()
        .map(|x| {
            let v = x.tau_exponent() * Rational64::from_integer(m);
            debug_assert!(v.is_integer());
            v.to_integer()
        })
        .collect();
    let s_red_eigs = eigs
        .iter()
        .zip(&phi)
        .map(|(l, p)| l * cfg.q_pow(-(*p as f64) / m as f64))
        .collect();
    Ok(ResonanceData {
        membership,
        m: m as u32,
        phi,
        s_red_eigs,
    })
}

/// True when no eigenvalue or eigenvalue ratio is recognized in `Γ` with a
/// nonzero τ-exponent. Roots of unity are allowed.
pub fn is_reduced(eigs: &[Complex], cfg: &ModulusConfig, tol: &ToleranceConfig) -> bool {
    let bad = |v: Complex| gamma_recognize(v, cfg, tol).is_some_and(|g| !g.r.is_zero());
    for (i, &li) in eigs.iter().enumerate() {
        if bad(li) {
            return false;
        }
        for &lj in &eigs[i + 1..] {
            if bad(li / lj) {
                return false;
            }
        }
    }
    true
}
