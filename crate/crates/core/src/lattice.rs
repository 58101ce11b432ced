//! Exact integer lattice splitting for symbolic eigenvalue data.
//!
//! Eigenvalues are given as `e^{2πi(τr + r1)}·g_tag` with rational `r, r1`
//! and an optional opaque generic factor `g_tag`. The relation lattice is
//! the kernel of the tag-count matrix; a unimodular complement comes out of
//! the same column reduction.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::config::{ModulusConfig, ToleranceConfig};
use crate::error::{Error, Result};
use crate::resonance::{frac, to_f64, GammaExponent};
use crate::Complex;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSplit {
    /// Basis vectors of the saturated relation lattice `L`.
    pub l_basis: Vec<Vec<BigInt>>,
    /// Basis vectors of a complement with `Z^n = L ⊕ L_red`.
    pub complement_basis: Vec<Vec<BigInt>>,
}

impl LatticeSplit {
    /// Determinant of the matrix whose columns are `L` followed by the
    /// complement.
    pub fn determinant(&self) -> BigInt {
        let cols: Vec<Vec<BigInt>> = self
            .l_basis
            .iter()
            .chain(self.complement_basis.iter())
            .cloned()
            .collect();
        bareiss_det(&cols)
    }

    pub fn is_unimodular(&self) -> bool {
        self.determinant().abs().is_one()
    }
}

/// Integer determinant by fraction-free elimination. `cols` are columns.
pub fn bareiss_det(cols: &[Vec<BigInt>]) -> BigInt {
    let n = cols.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = (0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&r| !a[r][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Splits `Z^n` along the kernel of `relations` (rows of length `n`).
///
/// Column operations reduce each row to a single pivot placed at the
/// rightmost free column; the columns of the accumulated unimodular
/// transform left of the pivots span the kernel.
pub fn lattice_split(relations: &[Vec<i64>], n: usize) -> Result<LatticeSplit> {
    if relations.iter().any(|r| r.len() != n) {
        return Err(Error::SizeMismatch("relation rows must have length n".into()));
    }
    let mut rel: Vec<Vec<BigInt>> = relations
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut u: Vec<Vec<BigInt>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let col_op = |rel: &mut Vec<Vec<BigInt>>, u: &mut Vec<Vec<BigInt>>, dst: usize, src: usize, f: &BigInt| {
        for row in rel.iter_mut() {
            let d = &row[src] * f;
            row[dst] -= d;
        }
        let s = u[src].clone();
        for (x, y) in u[dst].iter_mut().zip(s.iter()) {
            *x -= y * f;
        }
    };
    let swap = |rel: &mut Vec<Vec<BigInt>>, u: &mut Vec<Vec<BigInt>>, a: usize, b: usize| {
        for row in rel.iter_mut() {
            row.swap(a, b);
        }
        u.swap(a, b);
    };
    let mut free = n;
    for i in 0..rel.len() {
        loop {
            let nonzero: Vec<usize> = (0..free).filter(|&j| !rel[i][j].is_zero()).collect();
            if nonzero.len() <= 1 {
                break;
            }
            let pivot = *nonzero
                .iter()
                .rev()
                .min_by(|&&a, &&b| rel[i][a].abs().cmp(&rel[i][b].abs()))
                .expect("nonempty");
            for &j in &nonzero {
                if j != pivot {
                    let f = rel[i][j].div_floor(&rel[i][pivot]);
                    col_op(&mut rel, &mut u, j, pivot, &f);
                }
            }
        }
        if let Some(j) = (0..free).find(|&j| !rel[i][j].is_zero()) {
            swap(&mut rel, &mut u, j, free - 1);
            if rel[i][free - 1].is_negative() {
                for row in rel.iter_mut() {
                    row[free - 1] = -row[free - 1].clone();
                }
                for x in u[free - 1].iter_mut() {
                    *x = -x.clone();
                }
            }
            free -= 1;
        }
    }
    let mut l_basis: Vec<Vec<BigInt>> = u[..free].to_vec();
    for v in l_basis.iter_mut() {
        if let Some(first) = v.iter().find(|x| !x.is_zero()) {
            if first.is_negative() {
                for x in v.iter_mut() {
                    *x = -x.clone();
                }
            }
        }
    }
    Ok(LatticeSplit {
        l_basis,
        complement_basis: u[free..].to_vec(),
    })
}

/// One symbolic eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactEigen {
    pub r: Rational64,
    pub r1: Rational64,
    pub tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResonance {
    pub split: LatticeSplit,
    pub m: u32,
    pub phi: Vec<i64>,
    /// τ-exponent assigned to each eigenvalue (relative to its tag base).
    pub r: Vec<Rational64>,
    pub tags: Vec<String>,
}

/// Tag-count matrix: one row per distinct tag, in order of first use.
pub fn relation_matrix(eigs: &[ExactEigen]) -> (Vec<String>, Vec<Vec<i64>>) {
    let mut tags: Vec<String> = Vec::new();
    for e in eigs {
        if let Some(t) = &e.tag {
            if !tags.contains(t) {
                tags.push(t.clone());
            }
        }
    }
    let rows = tags
        .iter()
        .map(|t| eigs.iter().map(|e| i64::from(e.tag.as_ref() == Some(t))).collect())
        .collect();
    (tags, rows)
}

pub fn exact_analyze(eigs: &[ExactEigen]) -> Result<ExactResonance> {
    if eigs.is_empty() {
        return Err(Error::SizeMismatch("empty eigenvalue list".into()));
    }
    let (tags, rows) = relation_matrix(eigs);
    let split = lattice_split(&rows, eigs.len())?;
    let mut base: BTreeMap<&str, Rational64> = BTreeMap::new();
    let r: Vec<Rational64> = eigs
        .iter()
        .map(|e| match &e.tag {
            None => e.r,
            Some(t) => e.r - *base.entry(t.as_str()).or_insert(e.r),
        })
        .collect();
    let m = r.iter().fold(1i64, |acc, x| acc.lcm(x.denom()));
    let phi = r
        .iter()
        .map(|x| (x * Rational64::from_integer(m)).to_integer())
        .collect();
    Ok(ExactResonance {
        split,
        m: m as u32,
        phi,
        r,
        tags,
    })
}

/// `⟨α, φ⟩` in exact arithmetic.
pub fn pairing(alpha: &[BigInt], phi: &[i64]) -> BigInt {
    alpha.iter().zip(phi).map(|(a, p)| a * BigInt::from(*p)).sum()
}

/// `Σ α_i r_i` as a rational, or `None` on overflow.
pub fn alpha_exponent(alpha: &[BigInt], r: &[Rational64]) -> Option<Rational64> {
    let mut acc = Rational64::zero();
    for (a, x) in alpha.iter().zip(r) {
        acc += x * Rational64::from_integer(a.to_i64()?);
    }
    Some(acc)
}

/// Generic factor used when rendering a tag numerically: a point with
/// irrational coordinates, distinct per tag index.
pub fn tag_value(index: usize, cfg: &ModulusConfig) -> Complex {
    let k = index as f64;
    let t = (0.2718281828 + 0.1414213562 * k).fract() * 0.5;
    let t1 = (0.3141592653 + 0.1732050807 * k).fract();
    cfg.point_value(t, t1)
}

/// Floating rendering of symbolic eigenvalues.
pub fn render(eigs: &[ExactEigen], cfg: &ModulusConfig) -> Vec<Complex> {
    let (tags, _) = relation_matrix(eigs);
    eigs.iter()
        .map(|e| {
            let g = GammaExponent::new(e.r, e.r1).value(cfg);
            match &e.tag {
                None => g,
                Some(t) => g * tag_value(tags.iter().position(|x| x == t).expect("known tag"), cfg),
            }
        })
        .collect()
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    s.trim()
        .parse::<Rational64>()
        .map_err(|_| Error::Parse(format!("not a rational number: {s:?}")))
}

/// Checks that rendered numeric data would be recognized consistently.
pub fn rendering_is_recognizable(eigs: &[ExactEigen], tol: &ToleranceConfig) -> bool {
    eigs.iter().all(|e| {
        *e.r.denom() <= tol.d_max as i64
            && *frac(e.r1).denom() <= tol.d_max as i64
            && to_f64(e.r.abs()) <= tol.l_max as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance::resonance_analyze;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn distinct_tags_have_no_relations() {
        let s = lattice_split(&[vec![1, 0], vec![0, 1]], 2).unwrap();
        assert!(s.l_basis.is_empty());
        assert_eq!(s.complement_basis.len(), 2);
        assert!(s.is_unimodular());
    }

    #[test]
    fn equal_tags_pair() {
        let s = lattice_split(&[vec![1, 1]], 2).unwrap();
        assert_eq!(s.l_basis, vec![big(&[1, -1])]);
        assert_eq!(s.complement_basis, vec![big(&[0, 1])]);
        assert!(s.is_unimodular());
    }

    #[test]
    fn two_tags_three_entries() {
        let s = lattice_split(&[vec![1, 1, 0], vec![0, 0, 1]], 3).unwrap();
        assert_eq!(s.l_basis, vec![big(&[1, -1, 0])]);
        assert!(s.is_unimodular());
    }

    #[test]
    fn general_relation_rows() {
        let s = lattice_split(&[vec![2, 4, 6, 1], vec![0, 3, -3, 0]], 4).unwrap();
        assert_eq!(s.l_basis.len(), 2);
        assert!(s.is_unimodular());
        for v in &s.l_basis {
            let dot1: BigInt = v.iter().zip([2, 4, 6, 1]).map(|(a, b)| a * b).sum();
            let dot2: BigInt = v.iter().zip([0, 3, -3, 0]).map(|(a, b)| a * b).sum();
            assert!(dot1.is_zero() && dot2.is_zero());
        }
    }

    #[test]
    fn exact_and_numeric_agree() {
        let cfg = ModulusConfig::default();
        let tol = ToleranceConfig::default();
        let e = |r: (i64, i64), r1: (i64, i64), tag: Option<&str>| ExactEigen {
            r: Rational64::new(r.0, r.1),
            r1: Rational64::new(r1.0, r1.1),
            tag: tag.map(String::from),
        };
        let eigs = vec![
            e((1, 3), (0, 1), Some("t")),
            e((4, 3), (1, 2), Some("t")),
            e((1, 2), (0, 1), None),
            e((0, 1), (1, 5), Some("u")),
        ];
        let ex = exact_analyze(&eigs).unwrap();
        assert_eq!(ex.m, 2);
        assert_eq!(ex.phi, vec![0, 2, 1, 0]);
        let num = resonance_analyze(&render(&eigs, &cfg), &cfg, &tol).unwrap();
        assert_eq!(num.m, ex.m);
        assert_eq!(num.phi, ex.phi);
    }

    #[test]
    fn determinant_of_identity() {
        assert_eq!(bareiss_det(&[big(&[1, 0]), big(&[0, 1])]), BigInt::one());
        assert_eq!(bareiss_det(&[big(&[0, 1]), big(&[1, 0])]), -BigInt::one());
        assert_eq!(bareiss_det(&[big(&[2, 1]), big(&[4, 2])]), BigInt::zero());
    }
}
