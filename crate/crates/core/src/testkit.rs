//! Seeded generators for loops, invariants and class pairs, and the
//! self-test harness built on them.

use std::f64::consts::PI;

use num_rational::Rational64;
use serde::Serialize;

use crate::align::AlignedForm;
use crate::config::{ModulusConfig, ToleranceConfig};
use crate::error::Result;
use crate::invariant::{equivalent, synthesize, EPoint, EllipticInvariant, InvariantEntry};
use crate::linalg;
use crate::resonance::{frac, is_reduced, to_f64};
use crate::series::LaurentMatrix;
use crate::{CMatrix, Complex};

/// xorshift64* generator.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let s = seed ^ 0x9E37_79B9_7F4A_7C15;
        Self {
            state: if s == 0 { 1 } else { s },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Uniform in the closed disc of radius `r`.
    pub fn disc(&mut self, r: f64) -> Complex {
        let rho = r * self.next_f64().sqrt();
        Complex::from_polar(rho, 2.0 * PI * self.next_f64())
    }

    pub fn matrix(&mut self, rows: usize, cols: usize, r: f64) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| self.disc(r))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub n: usize,
    pub deg: u32,
    pub coeff_bound: f64,
    /// τ-exponents planted into eigenvalues.
    pub resonance_menu: Vec<Rational64>,
}

impl GeneratorSpec {
    pub fn new(seed: u64, n: usize) -> Self {
        Self {
            seed,
            n,
            deg: 2,
            coeff_bound: 1.0,
            resonance_menu: default_menu(),
        }
    }
}

pub fn default_menu() -> Vec<Rational64> {
    [(0, 1), (1, 2), (1, 3), (2, 3), (1, 4), (3, 4), (1, 1), (-1, 1)]
        .iter()
        .map(|&(a, b)| Rational64::new(a, b))
        .collect()
}

/// `I + small perturbation` plus bounded higher coefficients.
pub fn random_polynomial_loop(spec: &GeneratorSpec) -> LaurentMatrix {
    let mut rng = Rng::new(spec.seed);
    polynomial_with(&mut rng, spec.n, spec.deg, spec.coeff_bound)
}

fn polynomial_with(rng: &mut Rng, n: usize, deg: u32, bound: f64) -> LaurentMatrix {
    let c0 = linalg::identity(n) + rng.matrix(n, n, 0.2 / n as f64);
    let mut terms = vec![(0, c0)];
    for k in 1..=deg as i64 {
        terms.push((k, rng.matrix(n, n, bound)));
    }
    LaurentMatrix::new(n, n, 1, (0, deg as i64), terms).expect("shapes agree")
}

/// Polynomial loop with entries bounded by `bound`, conditioned so that its
/// inverse series does not blow up faster than `max_growth` per order.
pub fn random_conjugator(rng: &mut Rng, n: usize, deg: u32, bound: f64, max_growth: f64) -> LaurentMatrix {
    loop {
        let mut terms = Vec::new();
        for k in 0..=deg as i64 {
            terms.push((k, rng.matrix(n, n, bound)));
        }
        let g = LaurentMatrix::new(n, n, 1, (0, 12), terms).expect("shapes agree");
        let s = linalg::singular_values(&g.coeff(0).unwrap());
        if s[s.len() - 1] < 0.2 * s[0] {
            continue;
        }
        if let Ok(inv) = g.invert() {
            if inv.growth_rate() <= max_growth && g.growth_rate() <= max_growth {
                return g;
            }
        }
    }
}

/// Well-conditioned constant change of basis.
pub fn random_basis(rng: &mut Rng, n: usize) -> CMatrix {
    loop {
        let p = linalg::identity(n) + rng.matrix(n, n, 0.6);
        let s = linalg::singular_values(&p);
        if s[s.len() - 1] > 0.25 * s[0] {
            return p;
        }
    }
}

/// Minimum torus distance kept between distinct generated points, so that
/// distinct points never fall into one eigenvalue cluster.
const MIN_SEPARATION: f64 = 0.02;

fn planted_point(rng: &mut Rng, menu: &[Rational64]) -> EPoint {
    let r = if menu.is_empty() {
        Rational64::new(0, 1)
    } else {
        menu[rng.below(menu.len())]
    };
    let d = [1, 2, 3, 4, 6][rng.below(5)];
    let j = rng.below(d) as f64;
    EPoint::new(to_f64(frac(r)), j / d as f64)
}

fn fresh_point(rng: &mut Rng, menu: &[Rational64], taken: &[EPoint], generic_only: bool) -> EPoint {
    loop {
        let p = if generic_only || rng.chance(0.5) {
            EPoint::new(rng.uniform(0.02, 0.98), rng.next_f64())
        } else {
            planted_point(rng, menu)
        };
        if taken.iter().all(|t| t.distance(&p) > MIN_SEPARATION) {
            return p;
        }
    }
}

/// Random invariant of the given rank. Points are either generic, planted
/// from the menu, or repeated.
pub fn random_invariant(rng: &mut Rng, rank: usize, menu: &[Rational64]) -> EllipticInvariant {
    let mut entries: Vec<InvariantEntry> = Vec::new();
    let mut points: Vec<EPoint> = Vec::new();
    let mut left = rank;
    while left > 0 {
        let size = 1 + rng.below(left.min(3));
        let point = if !points.is_empty() && rng.chance(0.3) {
            points[rng.below(points.len())]
        } else {
            let p = fresh_point(rng, menu, &points, false);
            points.push(p);
            p
        };
        entries.push(InvariantEntry { point, size });
        left -= size;
    }
    EllipticInvariant::new(entries).expect("sizes are positive")
}

/// Random reduced constant of rank `n`: Jordan blocks at separated generic
/// points or roots of unity, in a random basis.
pub fn random_reduced_constant(rng: &mut Rng, n: usize, cfg: &ModulusConfig, tol: &ToleranceConfig) -> CMatrix {
    loop {
        let mut blocks = Vec::new();
        let mut values = Vec::new();
        let mut points: Vec<EPoint> = Vec::new();
        let mut left = n;
        while left > 0 {
            let size = 1 + rng.below(left.min(2));
            let point = if !points.is_empty() && rng.chance(0.3) {
                points[rng.below(points.len())]
            } else if rng.chance(0.25) {
                let d = [1, 2, 3, 4][rng.below(4)];
                EPoint::new(0.0, rng.below(d) as f64 / d as f64)
            } else {
                fresh_point(rng, &[], &points, true)
            };
            if !points.contains(&point) {
                if points.iter().any(|t| t.distance(&point) < MIN_SEPARATION) {
                    continue;
                }
                points.push(point);
            }
            values.push(point.value(cfg));
            blocks.push(linalg::jordan_block(linalg::c(1.0, 0.0), size) * point.value(cfg));
            left -= size;
        }
        if !is_reduced(&values, cfg, tol) {
            continue;
        }
        let p = random_basis(rng, n);
        let p_inv = linalg::inverse(&p, 1e-12).expect("conditioned basis");
        return &p * linalg::block_diag(&blocks) * p_inv;
    }
}

/// Random aligned polynomial: semisimple `a0` whose eigenvalues form
/// `q`-chains, with random weight vectors, in a random basis.
pub fn random_aligned_form(
    rng: &mut Rng,
    n: usize,
    menu: &[Rational64],
    cfg: &ModulusConfig,
    tol: &ToleranceConfig,
) -> Result<AlignedForm> {
    let mut eigs: Vec<Complex> = Vec::new();
    let mut points: Vec<EPoint> = Vec::new();
    while eigs.len() < n {
        let base = fresh_point(rng, menu, &points, false);
        points.push(base);
        let chain = 1 + rng.below((n - eigs.len()).min(3));
        for _ in 0..chain {
            let shift = rng.below(3) as f64;
            eigs.push(base.value(cfg) * cfg.q_pow(shift));
        }
    }
    let mut xs: Vec<CMatrix> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 1..=2usize {
                let ratio = eigs[i] / eigs[j];
                if (ratio - cfg.q_pow(k as f64)).norm() < 1e-9 * ratio.norm().max(1.0) && rng.chance(0.7) {
                    while xs.len() < k {
                        xs.push(linalg::zeros(n, n));
                    }
                    xs[k - 1][(i, j)] = rng.disc(1.0);
                }
            }
        }
    }
    let p = random_basis(rng, n);
    let p_inv = linalg::inverse(&p, 1e-12)?;
    let a0 = &p * linalg::diag(&eigs) * &p_inv;
    let xs = xs.iter().map(|x| &p * x * &p_inv).collect();
    AlignedForm::new(a0, xs, cfg, tol)
}

/// Same invariant with one entry's value moved by a full lattice step.
fn lattice_shifted(inv: &EllipticInvariant, cfg: &ModulusConfig, trunc: u32) -> LaurentMatrix {
    let blocks: Vec<CMatrix> = inv
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let shift = if i == 0 { cfg.q() } else { linalg::c(1.0, 0.0) };
            linalg::jordan_block(linalg::c(1.0, 0.0), e.size) * (e.point.value(cfg) * shift)
        })
        .collect();
    LaurentMatrix::constant(&linalg::block_diag(&blocks), trunc as i64)
}

/// A different invariant of the same rank.
fn perturbed(rng: &mut Rng, inv: &EllipticInvariant) -> EllipticInvariant {
    let mut entries = inv.entries().to_vec();
    if let Some(i) = entries.iter().position(|e| e.size > 1) {
        if rng.chance(0.5) {
            let e = entries.remove(i);
            entries.push(InvariantEntry { point: e.point, size: e.size - 1 });
            entries.push(InvariantEntry { point: e.point, size: 1 });
            return EllipticInvariant::new(entries).expect("sizes are positive");
        }
    }
    let i = rng.below(entries.len());
    entries[i].point = entries[i].point.add(&EPoint::new(0.37, 0.11));
    EllipticInvariant::new(entries).expect("sizes are positive")
}

/// Pair of loops with known equivalence: conjugates of one loop, lattice
/// shifts of one invariant, or two distinct invariants.
pub fn random_integral_class_pair(
    spec: &GeneratorSpec,
    cfg: &ModulusConfig,
    tol: &ToleranceConfig,
) -> Result<(LaurentMatrix, LaurentMatrix, bool)> {
    let mut rng = Rng::new(spec.seed);
    let inv = random_invariant(&mut rng, spec.n, &spec.resonance_menu);
    match rng.below(3) {
        0 => {
            let a = if rng.chance(0.5) {
                synthesize(&inv, cfg, tol.trunc)?
            } else {
                random_aligned_form(&mut rng, spec.n, &spec.resonance_menu, cfg, tol)?.expand(tol.trunc as i64)?
            };
            let g = polynomial_with(&mut rng, spec.n, spec.deg, spec.coeff_bound).with_known_top(tol.trunc as i64);
            let a2 = LaurentMatrix::twisted_conjugate(&g, &a, cfg)?;
            Ok((a, a2, true))
        }
        1 => Ok((synthesize(&inv, cfg, tol.trunc)?, lattice_shifted(&inv, cfg, tol.trunc), true)),
        _ => {
            let other = perturbed(&mut rng, &inv);
            Ok((synthesize(&inv, cfg, tol.trunc)?, synthesize(&other, cfg, tol.trunc)?, false))
        }
    }
}

/// One line of the self-test report.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub case: String,
    pub pass: bool,
    pub detail: String,
}

/// Runs `trials` ground-truth equivalence checks starting at `seed`.
pub fn selftest(seed: u64, trials: u32, cfg: &ModulusConfig, tol: &ToleranceConfig) -> Vec<TrialRecord> {
    (0..trials as u64)
        .map(|t| {
            let s = seed.wrapping_add(t);
            let mut spec = GeneratorSpec::new(s, 1 + (s % 4) as usize);
            spec.deg = 1 + (s % 3) as u32;
            let rec = |case: &str, pass: bool, detail: String| TrialRecord {
                seed: s,
                case: case.into(),
                pass,
                detail,
            };
            match random_integral_class_pair(&spec, cfg, tol) {
                Err(e) => rec("generate", false, e.to_string()),
                Ok((a, a2, expected)) => {
                    let case = if expected { "equivalent" } else { "inequivalent" };
                    match equivalent(&a, &a2, cfg, tol) {
                        Ok(got) => rec(case, got == expected, format!("n={} expected={expected} got={got}", spec.n)),
                        Err(e) => rec(case, false, e.to_string()),
                    }
                }
            }
        })
        .collect()
}
