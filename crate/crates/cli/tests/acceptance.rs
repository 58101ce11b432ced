//! Acceptance suite: ten criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p qtwist-cli --test acceptance`.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::Rational64;
use qtwist_core::invariant::{clebsch_gordan, classify_full, Classification};
use qtwist_core::lattice::{alpha_exponent, exact_analyze, pairing, render, rendering_is_recognizable, ExactEigen};
use qtwist_core::linalg::{self, c};
use qtwist_core::testkit::{
    default_menu, random_aligned_form, random_conjugator, random_invariant, random_reduced_constant, Rng,
};
use qtwist_core::*;

type Outcome = std::result::Result<String, String>;

fn setup() -> (ModulusConfig, ToleranceConfig) {
    (ModulusConfig::default(), ToleranceConfig::default())
}

fn lam(cfg: &ModulusConfig) -> Complex {
    cfg.point_value(0.2718281828, 0.3141592653)
}

fn konst(m: CMatrix) -> LaurentMatrix {
    LaurentMatrix::constant(&m, 4)
}

fn inv(entries: &[(f64, f64, usize)]) -> EllipticInvariant {
    EllipticInvariant::new(
        entries
            .iter()
            .map(|&(t, t1, size)| InvariantEntry { point: EPoint::new(t, t1), size })
            .collect(),
    )
    .unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Classifications of a loop and of a random polynomial conjugate of it.
struct Trial {
    seed: u64,
    runs: Vec<Classification>,
}

const TRIALS: u64 = 200;
/// Bound on the growth rate of the conjugator and of its inverse series.
const GROWTH_CAP: f64 = 4.0;

fn conjugation_trials(cfg: &ModulusConfig, tol: &ToleranceConfig) -> std::result::Result<Vec<Trial>, String> {
    let mut out = Vec::new();
    for t in 0..TRIALS {
        let seed = 1000 + t;
        let mut rng = Rng::new(seed);
        let n = 1 + rng.below(4);
        let a = if rng.chance(0.5) {
            synthesize(&random_invariant(&mut rng, n, &default_menu()), cfg, tol.trunc).map_err(|e| e.to_string())?
        } else {
            random_aligned_form(&mut rng, n, &default_menu(), cfg, tol)
                .and_then(|af| af.expand(tol.trunc as i64))
                .map_err(|e| format!("seed {seed}: {e}"))?
        };
        let deg = rng.below(4) as u32;
        let g = random_conjugator(&mut rng, n, deg, 2.0, GROWTH_CAP).with_known_top(tol.trunc as i64);
        let b = LaurentMatrix::twisted_conjugate(&g, &a, cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        let mut runs = Vec::new();
        for x in [&a, &b] {
            runs.push(classify_full(x, cfg, tol).map_err(|e| format!("seed {seed} (n = {n}): {e}"))?);
        }
        out.push(Trial { seed, runs });
    }
    Ok(out)
}

fn c1_conjugation_invariance(trials: &[Trial]) -> Outcome {
    let mut worst: f64 = 0.0;
    for t in trials {
        let (ia, ib) = (&t.runs[0].invariant, &t.runs[1].invariant);
        let d = ia
            .max_point_distance(ib, 1e-6)
            .ok_or_else(|| format!("seed {}: {ia:?} vs {ib:?}", t.seed))?;
        worst = worst.max(d);
    }
    Ok(format!("{} trials, max point distance {worst:.1e}", trials.len()))
}

fn c2_alignment(trials: &[Trial], cfg: &ModulusConfig, tol: &ToleranceConfig) -> Outcome {
    let mut worst_weight: f64 = 0.0;
    let mut worst_fixed: f64 = 0.0;
    for t in trials {
        for run in &t.runs {
            let af = &run.aligned;
            let w = af.weight_residual(cfg);
            ensure(w < 1e-9, || format!("seed {}: weight residual {w:.2e}", t.seed))?;
            worst_weight = worst_weight.max(w);
            let poly = af.expand(tol.trunc as i64).map_err(|e| e.to_string())?;
            let (again, conj) = align(&poly, cfg, tol).map_err(|e| format!("seed {}: {e}", t.seed))?;
            let id = LaurentMatrix::identity(af.n(), conj.window().1);
            let d = conj.max_diff(&id).map_err(|e| e.to_string())?;
            ensure(d < 1e-9, || format!("seed {}: re-alignment conjugator differs from I by {d:.2e}", t.seed))?;
            let da = linalg::max_abs(&(&again.a0 - &af.a0)) / linalg::max_abs(&af.a0);
            ensure(da < 1e-9, || format!("seed {}: re-aligned a0 moved by {da:.2e}", t.seed))?;
            worst_fixed = worst_fixed.max(d);
        }
    }
    Ok(format!(
        "{} aligned forms, max weight residual {worst_weight:.1e}, max re-alignment deviation {worst_fixed:.1e}",
        2 * trials.len()
    ))
}

fn c3_descent(trials: &[Trial], cfg: &ModulusConfig, tol: &ToleranceConfig) -> Outcome {
    let mut worst: f64 = 0.0;
    for t in trials {
        for run in &t.runs {
            let dd = &run.descent;
            let r = dd.witness_residual.max(dd.theta_order_residual).max(dd.commutator_residual);
            ensure(r < 1e-9, || format!("seed {}: descent residual {r:.2e}", t.seed))?;
            let eigs = spectral::jordan_decomposition(&dd.c, tol).map_err(|e| e.to_string())?.eigs;
            ensure(is_reduced(&eigs, cfg, tol), || format!("seed {}: c is not reduced", t.seed))?;
            worst = worst.max(r);
        }
    }
    Ok(format!("{} descents, max residual {worst:.1e}", 2 * trials.len()))
}

fn c4_reduced_intertwiners(cfg: &ModulusConfig, tol: &ToleranceConfig) -> Outcome {
    let mut rng = Rng::new(4);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let n = 1 + rng.below(4);
        let s = random_reduced_constant(&mut rng, n, cfg, tol);
        let sl = konst(s.clone());
        let want = spectral::jordan_decomposition(&s, tol).map_err(|e| e.to_string())?.centralizer_dim();
        for window in [support_bound(&sl, &sl, cfg, tol).map_err(|e| e.to_string())?, (-2, 2)] {
            let sp = solve_intertwiners(&sl, &sl, window, cfg, tol).map_err(|e| e.to_string())?;
            ensure(sp.dim == want, || format!("case {i}: dim {} vs centralizer {want} on {window:?}", sp.dim))?;
            for g in &sp.basis {
                let off = g.nonconstant_scale();
                ensure(off < 1e-8, || format!("case {i}: nonconstant coefficient {off:.2e}"))?;
                worst = worst.max(off);
            }
        }
    }
    Ok(format!("50 reduced constants, max nonconstant coefficient {worst:.1e}"))
}

fn c5_hom_agreement(cfg: &ModulusConfig, tol: &ToleranceConfig) -> Outcome {
    let one = konst(linalg::identity(1));
    let f2 = konst(linalg::jordan_block(c(1.0, 0.0), 2));
    let l = lam(cfg);
    let (lc, lqc) = (konst(linalg::diag(&[l])), konst(linalg::diag(&[cfg.q() * l])));
    let generic = konst(linalg::diag(&[c(0.5, 0.1)]));
    let named = [("(O,O)", &one, &one, 1), ("(O,F2)", &one, &f2, 1), ("(F2,F2)", &f2, &f2, 2), ("(L(c),L(qc))", &lc, &lqc, 1), ("(L(c),L(c'))", &lc, &generic, 0)];
    for (name, a, b, want) in named {
        let measured = hom_dimension_measured(a, b, cfg, tol).map_err(|e| e.to_string())?;
        let formula = hom_dimension_formula(&classify(a, cfg, tol).map_err(|e| e.to_string())?, &classify(b, cfg, tol).map_err(|e| e.to_string())?, tol.eps_res);
        ensure(measured == want && formula == want, || format!("{name}: measured {measured}, formula {formula}, expected {want}"))?;
    }
    let g = certificate_conjugator(&lc, &lqc, cfg, tol)
        .map_err(|e| e.to_string())?
        .ok_or("no certificate for (L(c), L(qc))")?;
    let s = g.scale();
    let terms = g.terms().filter(|(_, m)| linalg::max_abs(m) > 1e-9 * s).count();
    ensure(terms == 1, || format!("certificate for (L(c), L(qc)) has {terms} terms"))?;

    let mut rng = Rng::new(5);
    for i in 0..50 {
        let (r1, r2) = (1 + rng.below(3), 1 + rng.below(3));
        let i1 = random_invariant(&mut rng, r1, &default_menu());
        let i2 = if rng.chance(0.4) { i1.clone() } else { random_invariant(&mut rng, r2, &default_menu()) };
        let (a, b) = (synthesize(&i1, cfg, 0).unwrap(), synthesize(&i2, cfg, 0).unwrap());
        let measured = hom_dimension_measured(&a, &b, cfg, tol).map_err(|e| e.to_string())?;
        let formula = hom_dimension_formula(&i1, &i2, tol.eps_res);
        ensure(measured == formula, || format!("pair {i}: measured {measured}, formula {formula}"))?;
    }
    Ok("5 named pairs, monomial certificate, 50 random pairs: exact agreement".into())
}

/// Jordan sizes of the unipotent `u` from the ranks of powers of `u - I`.
fn unipotent_sizes(u: &CMatrix) -> Vec<usize> {
    let n = u.nrows();
    let nil = u - linalg::identity(n);
    let mut ranks = vec![n];
    let mut p = linalg::identity(n);
    for _ in 0..n {
        p = &p * &nil;
        ranks.push(linalg::rank(&p, 1e-9, 1e-12));
    }
    let mut sizes = Vec::new();
    for k in 1..=n {
        let exact = ranks[k - 1] + ranks.get(k + 1).copied().unwrap_or(0) - 2 * ranks[k];
        sizes.extend(std::iter::repeat_n(k, exact));
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

fn c6_tensor(cfg: &ModulusConfig, tol: &ToleranceConfig) -> Outcome {
    for a in 1..=3 {
        for b in 1..=3 {
            let one = c(1.0, 0.0);
            let k = linalg::kron(&linalg::jordan_block(one, a), &linalg::jordan_block(one, b));
            let got = unipotent_sizes(&k);
            ensure(got == clebsch_gordan(a, b), || format!("J{a} x J{b}: ranks give {got:?}"))?;
        }
    }
    let mut rng = Rng::new(6);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let (r1, r2) = (1 + rng.below(3), 1 + rng.below(3));
        let i1 = random_invariant(&mut rng, r1, &default_menu());
        let i2 = random_invariant(&mut rng, r2, &default_menu());
        let a = synthesize(&i1, cfg, tol.trunc)
            .and_then(|x| x.kronecker(&synthesize(&i2, cfg, tol.trunc)?))
            .map_err(|e| e.to_string())?;
        let got = classify(&a, cfg, tol).map_err(|e| format!("pair {i}: {e}"))?;
        let want = tensor_data(&i1, &i2);
        let d = got.max_point_distance(&want, 1e-6).ok_or_else(|| format!("pair {i}: {got:?} vs {want:?}"))?;
        worst = worst.max(d);
    }
    Ok(format!("size rule matches Kronecker ranks up to 3x3; 50 pairs, max point distance {worst:.1e}"))
}

fn c7_round_trip(cfg: &ModulusConfig, tol: &ToleranceConfig) -> Outcome {
    let mut rng = Rng::new(7);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let rank = 1 + rng.below(4);
        let x = random_invariant(&mut rng, rank, &default_menu());
        let a = synthesize(&x, cfg, tol.trunc).map_err(|e| e.to_string())?;
        let got = classify(&a, cfg, tol).map_err(|e| format!("invariant {i}: {e}"))?;
        let d = got.max_point_distance(&x, 1e-9).ok_or_else(|| format!("invariant {i}: {x:?} -> {got:?}"))?;
        worst = worst.max(d);
    }
    Ok(format!("100 invariants, max point distance {worst:.1e}"))
}

fn c8_rejections() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join("sl2_pair_equiv");
    let (a, b) = (dir.join("input_a.json"), dir.join("input_b.json"));
    for p in [&a, &b] {
        let out = Command::new(env!("CARGO_BIN_EXE_qtwist")).arg("classify").arg(p).output().map_err(|e| e.to_string())?;
        let err: serde_json::Value = serde_json::from_slice(&out.stderr).map_err(|e| e.to_string())?;
        ensure(out.status.code() == Some(2) && err["error"] == "NotIntegralRepresentative", || {
            format!("{}: exit {:?}, {err}", p.display(), out.status.code())
        })?;
    }
    let out = Command::new(env!("CARGO_BIN_EXE_qtwist")).arg("equiv").arg(&a).arg(&b).output().map_err(|e| e.to_string())?;
    ensure(out.status.code() == Some(2), || format!("equiv exit {:?}", out.status.code()))?;
    Ok("both matrices rejected as NotIntegralRepresentative, exit code 2".into())
}

fn c9_exact_mode(cfg: &ModulusConfig, tol: &ToleranceConfig) -> Outcome {
    let mut rng = Rng::new(9);
    let tags = [None, Some("a"), Some("b"), Some("c")];
    let mut relations = 0;
    for ds in 0..20 {
        let d = 1 + rng.below(12) as i64;
        let n = 2 + rng.below(5);
        let mut eigs: Vec<ExactEigen> = Vec::new();
        for i in 0..n {
            // Plant integer relations by repeating an earlier tag with an
            // integer shift of its exponent.
            if i > 0 && rng.chance(0.4) {
                let prev = eigs[rng.below(i)].clone();
                let shift = Rational64::from_integer(rng.below(3) as i64 - 1);
                eigs.push(ExactEigen { r: prev.r + shift, r1: prev.r1, tag: prev.tag });
                continue;
            }
            let r = Rational64::new(rng.below((6 * d + 1) as usize) as i64 - 3 * d, d);
            let r1 = Rational64::new(rng.below(12) as i64, 12);
            eigs.push(ExactEigen { r, r1, tag: tags[rng.below(tags.len())].map(String::from) });
        }
        ensure(rendering_is_recognizable(&eigs, tol), || format!("dataset {ds} exceeds recognition bounds"))?;
        let er = exact_analyze(&eigs).map_err(|e| e.to_string())?;
        ensure(er.split.is_unimodular(), || format!("dataset {ds}: split is not unimodular"))?;
        let r_abs: Vec<Rational64> = eigs.iter().map(|e| e.r).collect();
        let m = BigInt::from(er.m);
        let mut alphas: Vec<Vec<BigInt>> = er.split.l_basis.clone();
        for _ in 0..5 {
            let mut combo = vec![BigInt::from(0); n];
            for b in &er.split.l_basis {
                let k = BigInt::from(rng.below(5) as i64 - 2);
                for (x, y) in combo.iter_mut().zip(b) {
                    *x += &k * y;
                }
            }
            alphas.push(combo);
        }
        for alpha in &alphas {
            let l = alpha_exponent(alpha, &r_abs).ok_or("overflow")?;
            let lhs = pairing(alpha, &er.phi);
            let rhs = &m * BigInt::from(*l.numer()) / BigInt::from(*l.denom());
            ensure(&m * BigInt::from(*l.numer()) % BigInt::from(*l.denom()) == BigInt::from(0) && lhs == rhs, || {
                format!("dataset {ds}: <alpha, phi> = {lhs} but m*l = {}", Rational64::from_integer(er.m as i64) * l)
            })?;
            if l.is_integer() {
                relations += 1;
            }
        }
        let numeric = resonance_analyze(&render(&eigs, cfg), cfg, tol).map_err(|e| format!("dataset {ds}: {e}"))?;
        for i in 0..n {
            let x = Rational64::new(numeric.phi[i], numeric.m as i64);
            let y = Rational64::new(er.phi[i], er.m as i64);
            ensure(x == y, || format!("dataset {ds}, eigenvalue {i}: numeric {x} vs exact {y}"))?;
        }
    }
    Ok(format!("20 datasets unimodular, {relations} integral relations checked, numeric phi/m agrees"))
}

fn c10_named(cfg: &ModulusConfig, tol: &ToleranceConfig) -> Outcome {
    let l = lam(cfg);
    let (t, t1) = (0.2718281828, 0.3141592653);
    let half = LaurentMatrix::constant(&linalg::diag(&[cfg.q_pow(0.5)]), 4);
    let got = classify(&half, cfg, tol).map_err(|e| e.to_string())?;
    ensure(got.max_point_distance(&inv(&[(0.5, 0.0, 1)]), 1e-9).is_some(), || format!("q^(1/2): {got:?}"))?;

    let tri = LaurentMatrix::new(
        2,
        2,
        1,
        (0, 6),
        vec![
            (0, linalg::diag(&[l, cfg.q() * l])),
            (1, CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])),
        ],
    )
    .map_err(|e| e.to_string())?;
    let want = inv(&[(t, t1, 1), (t, t1, 1)]);
    let got = classify(&tri, cfg, tol).map_err(|e| e.to_string())?;
    ensure(got.max_point_distance(&want, 1e-9).is_some(), || format!("triangular: {got:?}"))?;
    let target = synthesize(&want, cfg, 0).map_err(|e| e.to_string())?;
    let g = certificate_conjugator(&tri, &target, cfg, tol)
        .map_err(|e| e.to_string())?
        .ok_or("no certificate for the triangular loop")?;
    let hi = 12;
    let moved = LaurentMatrix::twisted_conjugate(&g.with_known_top(hi), &tri.with_known_top(hi), cfg).map_err(|e| e.to_string())?;
    let r = moved.max_diff(&target.with_known_top(hi)).map_err(|e| e.to_string())?;
    ensure(r < 1e-9, || format!("certificate residual {r:.2e}"))?;

    let j = LaurentMatrix::constant(&(linalg::jordan_block(c(1.0, 0.0), 2) * l), 4);
    let got = classify(&j, cfg, tol).map_err(|e| e.to_string())?;
    ensure(got.max_point_distance(&inv(&[(t, t1, 2)]), 1e-9).is_some(), || format!("lambda J: {got:?}"))?;
    Ok(format!("three named classifications, certificate residual {r:.1e}"))
}

fn main() -> ExitCode {
    let (cfg, tol) = setup();
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let start = Instant::now();
    let trials = conjugation_trials(&cfg, &tol);
    let trial_time = start.elapsed().as_secs_f64();
    let shared = |f: &dyn Fn(&[Trial]) -> Outcome| match &trials {
        Ok(t) => f(t),
        Err(e) => Err(e.clone()),
    };
    let timed = |f: &dyn Fn() -> Outcome| {
        let s = Instant::now();
        let r = f();
        (r, s.elapsed().as_secs_f64())
    };
    let (r, s) = timed(&|| shared(&c1_conjugation_invariance));
    results.push(("1 conjugation invariance", r, s + trial_time));
    let (r, s) = timed(&|| shared(&|t| c2_alignment(t, &cfg, &tol)));
    results.push(("2 alignment postcondition", r, s));
    let (r, s) = timed(&|| shared(&|t| c3_descent(t, &cfg, &tol)));
    results.push(("3 descent witness", r, s));
    let (r, s) = timed(&|| c4_reduced_intertwiners(&cfg, &tol));
    results.push(("4 reduced constants have constant intertwiners", r, s));
    let (r, s) = timed(&|| c5_hom_agreement(&cfg, &tol));
    results.push(("5 hom dimension agreement", r, s));
    let (r, s) = timed(&|| c6_tensor(&cfg, &tol));
    results.push(("6 tensor functoriality", r, s));
    let (r, s) = timed(&|| c7_round_trip(&cfg, &tol));
    results.push(("7 synthesize round trip", r, s));
    let (r, s) = timed(&c8_rejections);
    results.push(("8 non-integral rejection", r, s));
    let (r, s) = timed(&|| c9_exact_mode(&cfg, &tol));
    results.push(("9 exact lattice mode", r, s));
    let (r, s) = timed(&|| c10_named(&cfg, &tol));
    results.push(("10 named classifications", r, s));

    let mut failed = 0;
    for (name, r, secs) in &results {
        match r {
            Ok(d) => println!("PASS  criterion {name}: {d} ({secs:.1} s)"),
            Err(d) => {
                failed += 1;
                println!("FAIL  criterion {name}: {d} ({secs:.1} s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
