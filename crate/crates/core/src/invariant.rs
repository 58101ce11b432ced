//! The classification invariant: a multiset of `(point of E, Jordan size)`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::align::{align, AlignedForm};
use crate::config::{ModulusConfig, ToleranceConfig};
use crate::descent::{descend, DescentData};
use crate::error::{Error, Result};
use crate::linalg;
use crate::resonance::{resonance_analyze, ResonanceData};
use crate::series::LaurentMatrix;
use crate::spectral::joint_block_decomposition;

/// Coordinates closer than this to 1 are folded back to 0.
const SNAP: f64 = 1e-11;

fn reduce(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if !(SNAP..=1.0 - SNAP).contains(&r) {
        0.0
    } else {
        r
    }
}

/// Point `e^{2πi(τ·t_tau + t_one)}` of `E = C*/q^Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EPoint {
    pub t_tau: f64,
    pub t_one: f64,
}

impl EPoint {
    pub fn new(t_tau: f64, t_one: f64) -> Self {
        Self {
            t_tau: reduce(t_tau),
            t_one: reduce(t_one),
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn from_value(value: crate::Complex, cfg: &ModulusConfig) -> Self {
        let (t, t1) = cfg.exponents_of(value);
        Self::new(t, t1)
    }

    pub fn value(&self, cfg: &ModulusConfig) -> crate::Complex {
        cfg.point_value(self.t_tau, self.t_one)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.t_tau + other.t_tau, self.t_one + other.t_one)
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.t_tau, -self.t_one)
    }

    pub fn scaled(&self, k: usize) -> Self {
        Self::new(self.t_tau * k as f64, self.t_one * k as f64)
    }

    /// Euclidean distance on the torus `R²/Z²`.
    pub fn distance(&self, other: &Self) -> f64 {
        let d = |a: f64, b: f64| {
            let x = (a - b).rem_euclid(1.0);
            x.min(1.0 - x)
        };
        d(self.t_tau, other.t_tau).hypot(d(self.t_one, other.t_one))
    }

    fn cmp_lex(&self, other: &Self) -> Ordering {
        self.t_tau
            .partial_cmp(&other.t_tau)
            .unwrap_or(Ordering::Equal)
            .then(self.t_one.partial_cmp(&other.t_one).unwrap_or(Ordering::Equal))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantEntry {
    pub point: EPoint,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EllipticInvariant {
    entries: Vec<InvariantEntry>,
}

impl EllipticInvariant {
    pub fn new(mut entries: Vec<InvariantEntry>) -> Result<Self> {
        if entries.iter().any(|e| e.size == 0) {
            return Err(Error::Parse("invariant entries need size >= 1".into()));
        }
        if entries
            .iter()
            .any(|e| !(e.point.t_tau.is_finite() && e.point.t_one.is_finite()))
        {
            return Err(Error::Parse("invariant points must be finite".into()));
        }
        entries.sort_by(|a, b| a.point.cmp_lex(&b.point).then(a.size.cmp(&b.size)));
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[InvariantEntry] {
        &self.entries
    }

    pub fn rank(&self) -> usize {
        self.entries.iter().map(|e| e.size).sum()
    }

    /// Size-weighted sum of the points: the point of the determinant.
    pub fn determinant_point(&self) -> EPoint {
        self.entries
            .iter()
            .fold(EPoint::zero(), |acc, e| acc.add(&e.point.scaled(e.size)))
    }

    /// Multiset equality: exact sizes, points within `eps` on the torus.
    pub fn matches(&self, other: &Self, eps: f64) -> bool {
        if self.entries.len() != other.entries.len() {
            return false;
        }
        let mut used = vec![false; other.entries.len()];
        for e in &self.entries {
            let found = other.entries.iter().enumerate().position(|(i, f)| {
                !used[i] && f.size == e.size && f.point.distance(&e.point) < eps
            });
            match found {
                Some(i) => used[i] = true,
                None => return false,
            }
        }
        true
    }

    /// Largest point distance in the matching, if the multisets match.
    pub fn max_point_distance(&self, other: &Self, eps: f64) -> Option<f64> {
        if !self.matches(other, eps) {
            return None;
        }
        let mut used = vec![false; other.entries.len()];
        let mut worst: f64 = 0.0;
        for e in &self.entries {
            let (i, d) = other
                .entries
                .iter()
                .enumerate()
                .filter(|(i, f)| !used[*i] && f.size == e.size)
                .map(|(i, f)| (i, f.point.distance(&e.point)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())?;
            used[i] = true;
            worst = worst.max(d);
        }
        Some(worst)
    }
}

pub fn atiyah_data(dd: &DescentData, cfg: &ModulusConfig, tol: &ToleranceConfig) -> Result<EllipticInvariant> {
    let m = dd.m as f64;
    let theta_p = &dd.basis_inv * &dd.theta_a * &dd.basis;
    // θ is diagonal in the eigenbasis; drop the round-off off the diagonal.
    let theta_p = linalg::diag(&(0..theta_p.nrows()).map(|i| theta_p[(i, i)]).collect::<Vec<_>>());
    let c_p = &dd.basis_inv * &dd.c * &dd.basis;
    let mut entries = Vec::new();
    for jb in joint_block_decomposition(&theta_p, &c_p, tol)? {
        let j = (jb.theta.arg() / (2.0 * PI) * m).round().rem_euclid(m);
        let shift = cfg.q_pow(j / m);
        for (beta, size) in jb.blocks {
            entries.push(InvariantEntry {
                point: EPoint::from_value(beta * shift, cfg),
                size,
            });
        }
    }
    EllipticInvariant::new(entries)
}

/// Every intermediate stage of a classification.
#[derive(Debug, Clone)]
pub struct Classification {
    pub aligned: AlignedForm,
    pub conjugator: LaurentMatrix,
    pub resonance: ResonanceData,
    pub descent: DescentData,
    pub invariant: EllipticInvariant,
}

pub fn classify_full(a: &LaurentMatrix, cfg: &ModulusConfig, tol: &ToleranceConfig) -> Result<Classification> {
    tol.validate()?;
    let (aligned, conjugator) = align(a, cfg, tol)?;
    let resonance = resonance_analyze(&aligned.jordan.eigs, cfg, tol)?;
    let descent = descend(&aligned, &resonance, cfg, tol)?;
    let invariant = atiyah_data(&descent, cfg, tol)?;
    Ok(Classification {
        aligned,
        conjugator,
        resonance,
        descent,
        invariant,
    })
}

pub fn classify(a: &LaurentMatrix, cfg: &ModulusConfig, tol: &ToleranceConfig) -> Result<EllipticInvariant> {
    Ok(classify_full(a, cfg, tol)?.invariant)
}

pub fn equivalent(a: &LaurentMatrix, a2: &LaurentMatrix, cfg: &ModulusConfig, tol: &ToleranceConfig) -> Result<bool> {
    if a.n() != a2.n() {
        return Ok(false);
    }
    let i1 = classify(a, cfg, tol)?;
    let i2 = classify(a2, cfg, tol)?;
    Ok(i1.matches(&i2, tol.eps_res))
}

/// Constant block-diagonal multiplier `⊕ p·J(1, size)`, known to `trunc`.
pub fn synthesize(inv: &EllipticInvariant, cfg: &ModulusConfig, trunc: u32) -> Result<LaurentMatrix> {
    if inv.rank() == 0 {
        return Err(Error::SizeMismatch("cannot synthesize a rank-0 invariant".into()));
    }
    let blocks: Vec<_> = inv
        .entries()
        .iter()
        .map(|e| linalg::jordan_block(linalg::c(1.0, 0.0), e.size) * e.point.value(cfg))
        .collect();
    Ok(LaurentMatrix::constant(&linalg::block_diag(&blocks), trunc as i64))
}

/// Block sizes of `J(1,a) ⊗ J(1,b)`.
pub fn clebsch_gordan(a: usize, b: usize) -> Vec<usize> {
    let lo = a.abs_diff(b) + 1;
    (0..a.min(b)).map(|i| a + b - 1 - 2 * i).filter(|&s| s >= lo).collect()
}

pub fn tensor_data(inv1: &EllipticInvariant, inv2: &EllipticInvariant) -> EllipticInvariant {
    let mut entries = Vec::new();
    for e in inv1.entries() {
        for f in inv2.entries() {
            let point = e.point.add(&f.point);
            for size in clebsch_gordan(e.size, f.size) {
                entries.push(InvariantEntry { point, size });
            }
        }
    }
    EllipticInvariant::new(entries).expect("sizes stay positive")
}

pub fn dual_data(inv: &EllipticInvariant) -> EllipticInvariant {
    let entries = inv
        .entries()
        .iter()
        .map(|e| InvariantEntry {
            point: e.point.neg(),
            size: e.size,
        })
        .collect();
    EllipticInvariant::new(entries).expect("sizes stay positive")
}

pub fn sum_data(inv1: &EllipticInvariant, inv2: &EllipticInvariant) -> EllipticInvariant {
    let entries = inv1.entries().iter().chain(inv2.entries()).copied().collect();
    EllipticInvariant::new(entries).expect("sizes stay positive")
}

/// Number of zero-point summands of `inv1^∨ ⊗ inv2`; each indecomposable
/// of degree zero at the origin carries exactly one section.
pub fn hom_dimension_formula(inv1: &EllipticInvariant, inv2: &EllipticInvariant, eps: f64) -> usize {
    tensor_data(&dual_data(inv1), inv2)
        .entries()
        .iter()
        .filter(|e| e.point.distance(&EPoint::zero()) < eps)
        .count()
}
