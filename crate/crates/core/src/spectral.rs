//! Constant-matrix spectral algebra.
//!
//! Eigenvalues are clustered by single linkage at relative distance
//! `eps_eig`; each cluster's generalized eigenspace is recovered as the
//! smallest right singular subspace of `(A − μI)^d`, so the semisimple part
//! is assembled from spectral projectors rather than from a Jordan form.
//! Jordan block sizes come from rank sequences of the normalized nilpotent
//! part of each cluster.

use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::config::{ModulusConfig, ToleranceConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::{CMatrix, Complex};

/// One eigenvalue cluster: a contiguous range of basis columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub value: Complex,
    pub start: usize,
    pub len: usize,
    /// Jordan block sizes of the restriction, descending.
    pub block_sizes: Vec<usize>,
}

/// Multiplicative Jordan decomposition `A = S·U = U·S`.
#[derive(Debug, Clone)]
pub struct JordanData {
    pub s: CMatrix,
    pub u: CMatrix,
    /// Columns span the generalized eigenspaces, grouped by cluster.
    pub basis: CMatrix,
    pub basis_inv: CMatrix,
    /// Eigenvalue attached to each basis column.
    pub eigs: Vec<Complex>,
    pub clusters: Vec<Cluster>,
}

impl JordanData {
    pub fn n(&self) -> usize {
        self.eigs.len()
    }

    /// Index of the cluster owning basis column `i`.
    pub fn cluster_of(&self, i: usize) -> usize {
        self.clusters
            .iter()
            .position(|c| i >= c.start && i < c.start + c.len)
            .expect("column index in range")
    }

    /// Expresses `m` in the eigenbasis.
    pub fn to_basis(&self, m: &CMatrix) -> CMatrix {
        &self.basis_inv * m * &self.basis
    }

    pub fn from_basis(&self, m: &CMatrix) -> CMatrix {
        &self.basis * m * &self.basis_inv
    }

    /// Dimension of the centralizer of `A`: `Σ_clusters Σ_{i,j} min(n_i, n_j)`.
    pub fn centralizer_dim(&self) -> usize {
        self.clusters
            .iter()
            .map(|c| {
                c.block_sizes
                    .iter()
                    .flat_map(|a| c.block_sizes.iter().map(move |b| (*a).min(*b)))
                    .sum::<usize>()
            })
            .sum()
    }
}

/// Order used for clusters: increasing modulus, then argument in `[0, 2π)`.
fn spectral_order(a: &Complex, b: &Complex) -> Ordering {
    let (ma, mb) = (a.norm(), b.norm());
    let scale = ma.max(mb).max(f64::MIN_POSITIVE);
    if (ma - mb).abs() > 1e-9 * scale {
        return ma.partial_cmp(&mb).unwrap();
    }
    let arg = |z: &Complex| z.arg().rem_euclid(2.0 * PI);
    arg(a).partial_cmp(&arg(b)).unwrap_or(Ordering::Equal)
}

/// Single-linkage clustering at relative distance `eps`. Returns cluster
/// members (indices into `values`).
pub fn cluster_values(values: &[Complex], eps: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut i = i;
        while p[i] != r {
            let next = p[i];
            p[i] = r;
            i = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = values[i].norm().max(values[j].norm());
            if (values[i] - values[j]).norm() <= eps * scale {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_slot[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_slot[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Gauss–Jordan column normalization: returns `V·M` whose pivot rows form
/// the identity. Gives a canonical basis of the column span.
fn echelon_basis(v: &CMatrix) -> CMatrix {
    let mut w = v.clone();
    let (n, d) = (w.nrows(), w.ncols());
    let mut used = vec![false; n];
    let mut pivots = Vec::with_capacity(d);
    for t in 0..d {
        let (mut best, mut best_val) = (0, -1.0);
        for r in 0..n {
            if !used[r] && w[(r, t)].norm() > best_val {
                best = r;
                best_val = w[(r, t)].norm();
            }
        }
        used[best] = true;
        pivots.push(best);
        let pivot = w[(best, t)];
        let col = w.column(t) / pivot;
        w.set_column(t, &col);
        for s in 0..d {
            if s != t {
                let f = w[(best, s)];
                let new = w.column(s) - w.column(t) * f;
                w.set_column(s, &new);
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by_key(|&t| pivots[t]);
    CMatrix::from_fn(n, d, |r, t| w[(r, order[t])])
}

/// Block sizes (descending) of a nilpotent matrix from its rank sequence.
pub fn nilpotent_block_sizes(nil: &CMatrix, rel_tol: f64) -> Vec<usize> {
    let d = nil.nrows();
    let scale = linalg::norm(nil).max(1.0);
    let mut ranks = vec![d];
    let mut p = linalg::identity(d);
    for k in 1..=d {
        p = &p * nil;
        let r = linalg::rank(&p, rel_tol * scale.powi(k as i32), 1.0);
        ranks.push(r);
        if r == 0 {
            break;
        }
    }
    while ranks.len() < d + 2 {
        ranks.push(0);
    }
    let mut sizes = Vec::new();
    for k in 1..=d {
        let at_least_k = ranks[k - 1] - ranks[k];
        let at_least_k1 = ranks[k] - ranks[k + 1];
        for _ in 0..at_least_k.saturating_sub(at_least_k1) {
            sizes.push(k);
        }
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Jordan-typing threshold derived from the rank tolerance.
pub(crate) fn typing_tol(tol: &ToleranceConfig) -> f64 {
    tol.eps_rank.sqrt()
}

pub fn jordan_decomposition(a: &CMatrix, tol: &ToleranceConfig) -> Result<JordanData> {
    let n = a.nrows();
    if n != a.ncols() || n == 0 {
        return Err(Error::SizeMismatch("jordan_decomposition needs a square matrix".into()));
    }
    if !linalg::is_invertible(a, 1e-14) {
        return Err(Error::SingularInput("jordan_decomposition of a singular matrix".into()));
    }
    let raw = linalg::eigenvalues(a);
    let groups = cluster_values(&raw, tol.eps_eig);
    let mut clusters: Vec<(Complex, usize)> = groups
        .iter()
        .map(|g| {
            let mean = g.iter().map(|&i| raw[i]).sum::<Complex>() / g.len() as f64;
            (mean, g.len())
        })
        .collect();
    clusters.sort_by(|x, y| spectral_order(&x.0, &y.0));

    let mut columns: Vec<CMatrix> = Vec::with_capacity(clusters.len());
    for (mu, d) in &clusters {
        let shifted = a - linalg::identity(n) * *mu;
        let v = if *d == n {
            linalg::identity(n)
        } else {
            linalg::smallest_right_subspace(&linalg::power(&shifted, *d as u32), *d)
        };
        columns.push(echelon_basis(&v));
    }
    let mut basis = linalg::zeros(n, n);
    let mut offset = 0;
    for v in &columns {
        basis.view_mut((0, offset), (n, v.ncols())).copy_from(v);
        offset += v.ncols();
    }
    let dims: Vec<usize> = clusters.iter().map(|(_, d)| *d).collect();
    let (basis, basis_inv) = decouple(a, basis, &dims)?;
    let in_basis = &basis_inv * a * &basis;

    let mut s_diag = Vec::with_capacity(n);
    let mut unip_blocks = Vec::with_capacity(clusters.len());
    let mut out_clusters = Vec::with_capacity(clusters.len());
    let mut start = 0;
    for (_, d) in &clusters {
        let block = in_basis.view((start, start), (*d, *d)).into_owned();
        let mu = block.trace() / *d as f64;
        let unip = &block / mu;
        let nil = &unip - linalg::identity(*d);
        let sizes = nilpotent_block_sizes(&nil, typing_tol(tol));
        s_diag.extend(std::iter::repeat_n(mu, *d));
        unip_blocks.push(unip);
        out_clusters.push(Cluster {
            value: mu,
            start,
            len: *d,
            block_sizes: sizes,
        });
        start += d;
    }
    let s = &basis * linalg::diag(&s_diag) * &basis_inv;
    let u = &basis * linalg::block_diag(&unip_blocks) * &basis_inv;
    Ok(JordanData {
        s,
        u,
        basis,
        basis_inv,
        eigs: s_diag,
        clusters: out_clusters,
    })
}

fn independent_inverse(basis: &CMatrix) -> Result<CMatrix> {
    linalg::inverse(basis, 1e-14).map_err(|_| Error::VerificationFailed {
        what: "generalized eigenspaces are not independent".into(),
        residual: f64::INFINITY,
    })
}

/// Refines the cluster columns of `basis` until `basis⁻¹·a·basis` is block
/// diagonal to working precision. The null space of `(a − μ)^d` is only
/// accurate to about `eps·‖a‖^d` over the gap to the next eigenvalue raised
/// to `d`; each step solves the Sylvester equations for the off-diagonal
/// blocks and converges quadratically.
fn decouple(a: &CMatrix, mut basis: CMatrix, dims: &[usize]) -> Result<(CMatrix, CMatrix)> {
    let n = a.nrows();
    let starts: Vec<usize> = dims.iter().scan(0, |acc, d| {
        let s = *acc;
        *acc += d;
        Some(s)
    }).collect();
    let mut basis_inv = independent_inverse(&basis)?;
    if dims.len() < 2 {
        return Ok((basis, basis_inv));
    }
    for _ in 0..4 {
        let t = &basis_inv * a * &basis;
        let mut x = linalg::zeros(n, n);
        let mut off: f64 = 0.0;
        for (i, (&si, &di)) in starts.iter().zip(dims).enumerate() {
            for (j, (&sj, &dj)) in starts.iter().zip(dims).enumerate() {
                if i == j {
                    continue;
                }
                let tij = t.view((si, sj), (di, dj)).into_owned();
                off = off.max(linalg::max_abs(&tij));
                // T_ii·X − X·T_jj = −T_ij
                let tii = t.view((si, si), (di, di)).into_owned();
                let tjj = t.view((sj, sj), (dj, dj)).into_owned();
                let sys = linalg::kron(&linalg::identity(dj), &tii) - linalg::kron(&tjj.transpose(), &linalg::identity(di));
                let rhs = CMatrix::from_column_slice(di * dj, 1, (-&tij).as_slice());
                let Ok(v) = linalg::solve(&sys, &rhs) else {
                    continue;
                };
                x.view_mut((si, sj), (di, dj)).copy_from(&CMatrix::from_column_slice(di, dj, v.as_slice()));
            }
        }
        if off <= f64::EPSILON * linalg::max_abs(&t) {
            break;
        }
        basis = &basis * (linalg::identity(n) + x);
        basis_inv = independent_inverse(&basis)?;
    }
    Ok((basis, basis_inv))
}

/// Adjoint weight data of the semisimple part.
#[derive(Debug, Clone)]
pub struct WeightData {
    pub basis: CMatrix,
    /// `ratio[(i, j)] = λ_i / λ_j`, the `Ad(S)`-eigenvalue of `E_ij`.
    pub ratio: CMatrix,
    /// Ascending list of `k ≥ 1` with some ratio equal to `q^k`.
    pub resonant_exponents: Vec<u32>,
    /// Largest resonant exponent, 0 if none.
    pub k_max: u32,
}

impl WeightData {
    /// Positions `(i, j)` whose ratio is `q^k`.
    pub fn positions(&self, k: u32, cfg: &ModulusConfig, tol: &ToleranceConfig) -> Vec<(usize, usize)> {
        let n = self.ratio.nrows();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if q_power_of(self.ratio[(i, j)], cfg, tol, tol.l_max) == Some(k as i64) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// The integer `k` with `|ρ − q^k| < eps_res·|q^k|` and `|k| ≤ bound`, if any.
pub fn q_power_of(rho: Complex, cfg: &ModulusConfig, tol: &ToleranceConfig, bound: u32) -> Option<i64> {
    if rho.norm() == 0.0 {
        return None;
    }
    let k = (rho.norm().ln() / cfg.q_abs().ln()).round();
    if !k.is_finite() || k.abs() > bound as f64 {
        return None;
    }
    let qk = cfg.q_pow(k);
    if (rho - qk).norm() < tol.eps_res * qk.norm() {
        Some(k as i64)
    } else {
        None
    }
}

pub fn weight_decomposition(j: &JordanData, cfg: &ModulusConfig, tol: &ToleranceConfig) -> WeightData {
    let n = j.n();
    let ratio = CMatrix::from_fn(n, n, |a, b| j.eigs[a] / j.eigs[b]);
    let mut exps: Vec<u32> = ratio
        .iter()
        .filter_map(|&r| q_power_of(r, cfg, tol, tol.l_max))
        .filter(|&k| k >= 1)
        .map(|k| k as u32)
        .collect();
    exps.sort_unstable();
    exps.dedup();
    let k_max = exps.last().copied().unwrap_or(0);
    WeightData {
        basis: j.basis.clone(),
        ratio,
        resonant_exponents: exps,
        k_max,
    }
}

/// One eigenvalue of the finite-order factor with the Jordan type of the
/// other factor restricted to its eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct JointBlock {
    pub theta: Complex,
    /// `(eigenvalue, block size)` pairs.
    pub blocks: Vec<(Complex, usize)>,
}

pub fn joint_block_decomposition(
    theta: &CMatrix,
    c: &CMatrix,
    tol: &ToleranceConfig,
) -> Result<Vec<JointBlock>> {
    if theta.shape() != c.shape() || theta.nrows() != theta.ncols() {
        return Err(Error::SizeMismatch("joint decomposition needs equal square matrices".into()));
    }
    let comm = theta * c - c * theta;
    let residual = linalg::norm(&comm) / (linalg::norm(theta) * linalg::norm(c)).max(1.0);
    if residual > tol.eps_rank.sqrt() {
        return Err(Error::NonCommutingPair { residual });
    }
    let jt = jordan_decomposition(theta, tol)?;
    let c_in = jt.to_basis(c);
    let mut out = Vec::new();
    for cl in &jt.clusters {
        let sub = c_in.view((cl.start, cl.start), (cl.len, cl.len)).into_owned();
        let jc = jordan_decomposition(&sub, tol)?;
        let blocks = jc
            .clusters
            .iter()
            .flat_map(|k| k.block_sizes.iter().map(move |&s| (k.value, s)))
            .collect();
        out.push(JointBlock {
            theta: cl.value,
            blocks,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn m(rows: usize, v: &[f64]) -> CMatrix {
        CMatrix::from_row_slice(rows, v.len() / rows, &v.iter().map(|x| c(*x, 0.0)).collect::<Vec<_>>())
    }

    fn reconstructs(a: &CMatrix, j: &JordanData) {
        assert!(linalg::max_abs(&(&j.s * &j.u - a)) < 1e-12);
        assert!(linalg::max_abs(&(&j.s * &j.u - &j.u * &j.s)) < 1e-12);
        let nil = &j.u - linalg::identity(a.nrows());
        assert!(linalg::max_abs(&linalg::power(&nil, a.nrows() as u32)) < 1e-10);
    }

    #[test]
    fn unipotent_input() {
        let a = m(2, &[1.0, 1.0, 0.0, 1.0]);
        let j = jordan_decomposition(&a, &tol()).unwrap();
        assert!(linalg::max_abs(&(&j.s - linalg::identity(2))) < 1e-14);
        assert!(linalg::max_abs(&(&j.u - &a)) < 1e-14);
        assert_eq!(j.clusters[0].block_sizes, vec![2]);
    }

    #[test]
    fn semisimple_input() {
        let a = diag(&[c(2.0, 0.0), c(3.0, 0.0)]);
        let j = jordan_decomposition(&a, &tol()).unwrap();
        assert!(linalg::max_abs(&(&j.s - &a)) < 1e-14);
        assert!(linalg::max_abs(&(&j.u - linalg::identity(2))) < 1e-14);
        assert_eq!(j.clusters.len(), 2);
    }

    #[test]
    fn jordan_block_lambda_two() {
        let a = m(2, &[2.0, 1.0, 0.0, 2.0]);
        let j = jordan_decomposition(&a, &tol()).unwrap();
        assert!(linalg::max_abs(&(&j.s - diag(&[c(2.0, 0.0), c(2.0, 0.0)]))) < 1e-14);
        assert!(linalg::max_abs(&(&j.u - m(2, &[1.0, 0.5, 0.0, 1.0]))) < 1e-14);
        reconstructs(&a, &j);
    }

    #[test]
    fn conjugated_mixed_structure() {
        // P·(diag · unipotent)·P^{-1} with a size-3 block and a simple eigenvalue.
        let core = linalg::block_diag(&[
            linalg::jordan_block(c(0.5, 0.5), 3),
            diag(&[c(-1.2, 0.3)]),
        ]);
        let p = CMatrix::from_fn(4, 4, |i, k| c(((i * 7 + k * 3) % 5) as f64 * 0.3 + if i == k { 1.0 } else { 0.0 }, 0.1 * (i as f64 - k as f64)));
        let a = &p * &core * p.clone().try_inverse().unwrap();
        let j = jordan_decomposition(&a, &tol()).unwrap();
        reconstructs(&a, &j);
        let mut sizes: Vec<usize> = j.clusters.iter().flat_map(|c| c.block_sizes.clone()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 3]);
        assert_eq!(j.centralizer_dim(), 3 + 1);
    }

    #[test]
    fn singular_rejected() {
        let a = m(2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(jordan_decomposition(&a, &tol()), Err(Error::SingularInput(_))));
    }

    #[test]
    fn weight_examples() {
        let cfg = ModulusConfig::default();
        let lam = c(0.8, 0.3);
        let j = jordan_decomposition(&linalg::identity(2), &tol()).unwrap();
        let w = weight_decomposition(&j, &cfg, &tol());
        assert!(w.resonant_exponents.is_empty());
        assert_eq!(w.k_max, 0);

        let a = diag(&[lam, cfg.q() * lam]);
        let j = jordan_decomposition(&a, &tol()).unwrap();
        let w = weight_decomposition(&j, &cfg, &tol());
        assert_eq!(w.resonant_exponents, vec![1]);
        assert_eq!(w.k_max, 1);
        // The small eigenvalue comes first in the basis order.
        assert_eq!(w.positions(1, &cfg, &tol()), vec![(0, 1)]);
        let pos = w.positions(1, &cfg, &tol())[0];
        let e = j.from_basis(&CMatrix::from_fn(2, 2, |r, s| {
            if (r, s) == pos { c(1.0, 0.0) } else { c(0.0, 0.0) }
        }));
        // In original coordinates that unit is E_21.
        assert!((e[(1, 0)] - c(1.0, 0.0)).norm() < 1e-14);

        let a = diag(&[lam, cfg.q() * cfg.q() * lam]);
        let j = jordan_decomposition(&a, &tol()).unwrap();
        let w = weight_decomposition(&j, &cfg, &tol());
        assert_eq!(w.resonant_exponents, vec![2]);
        assert_eq!(w.k_max, 2);
    }

    #[test]
    fn joint_examples() {
        let t = tol();
        let r = joint_block_decomposition(&linalg::identity(2), &m(2, &[1.0, 1.0, 0.0, 1.0]), &t).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].blocks.len(), 1);
        assert_eq!(r[0].blocks[0].1, 2);
        assert!((r[0].blocks[0].0 - c(1.0, 0.0)).norm() < 1e-12);

        let r = joint_block_decomposition(
            &diag(&[c(1.0, 0.0), c(-1.0, 0.0)]),
            &diag(&[c(5.0, 0.0), c(7.0, 0.0)]),
            &t,
        )
        .unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].theta - c(1.0, 0.0)).norm() < 1e-12);
        assert!((r[0].blocks[0].0 - c(5.0, 0.0)).norm() < 1e-12);
        assert!((r[1].theta + c(1.0, 0.0)).norm() < 1e-12);
        assert!((r[1].blocks[0].0 - c(7.0, 0.0)).norm() < 1e-12);

        let r = joint_block_decomposition(&diag(&[c(-1.0, 0.0)]), &diag(&[c(1.0, 0.0)]), &t).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].blocks, vec![(c(1.0, 0.0), 1)]);
    }

    #[test]
    fn joint_rejects_noncommuting() {
        let r = joint_block_decomposition(
            &diag(&[c(1.0, 0.0), c(-1.0, 0.0)]),
            &m(2, &[1.0, 1.0, 0.0, 1.0]),
            &tol(),
        );
        assert!(matches!(r, Err(Error::NonCommutingPair { .. })));
    }

    #[test]
    fn echelon_normalizes_identity_span() {
        let v = CMatrix::from_fn(2, 2, |i, k| c((i + 2 * k) as f64 + 1.0, 0.5));
        let w = echelon_basis(&v);
        assert!(linalg::max_abs(&(w - linalg::identity(2))) < 1e-12);
    }
}
