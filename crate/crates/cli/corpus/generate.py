"""Writes the corpus inputs and expected documents.

Expected values are computed here without the Rust code: points come from
the closed form of each eigenvalue, intertwiner dimensions from a numpy
null-space computation of q^k g a = b g degree by degree (the inputs are
constant, so degrees decouple). Run from this directory:

    python3 generate.py
"""

import cmath
import json
import math
import os
import shutil

import numpy as np

TAU = complex(0.3, 1.1)
T, T1 = 0.2718281828, 0.3141592653


def pv(t, t1):
    return cmath.exp(2j * math.pi * (TAU * t + t1))


Q = pv(1, 0)
LAM = pv(T, T1)


def point_of(v):
    t = math.log(abs(v)) / (-2 * math.pi * TAU.imag)
    t1 = (cmath.phase(v) / (2 * math.pi) - TAU.real * t) % 1.0
    return t % 1.0, t1


def cx(z):
    return [z.real, z.imag]


def mat(m):
    return [[cx(complex(z)) for z in row] for row in m]


def loop(terms, window, n=None, m_cov=1):
    n = n or len(terms[0][1])
    return {"n": n, "m_cov": m_cov, "window": list(window),
            "terms": [{"k": k, "matrix": mat(m)} for k, m in terms]}


def const(m, top=4):
    return loop([(0, m)], (0, top))


def entry(t, t1, size):
    return {"t_tau": t, "t_one": t1, "size": size}


def invariant(entries):
    return {"rank": sum(e["size"] for e in entries), "entries": entries}


def hom_dim(a, b, kmin=-3, kmax=3):
    a, b = np.asarray(a, complex), np.asarray(b, complex)
    n1, n2 = len(a), len(b)
    dim = 0
    for k in range(kmin, kmax + 1):
        m = (Q ** k) * np.kron(a.T, np.eye(n2)) - np.kron(np.eye(n1), b)
        s = np.linalg.svd(m, compute_uv=False)
        scale = abs(Q ** k) * np.abs(a).max() + np.abs(b).max()
        dim += int(np.sum(s <= 1e-8 * scale)) + (n1 * n2 - len(s))
    return dim


def jordan(v, size):
    return v * (np.eye(size) + np.eye(size, k=1))


CASES = {}


def case(name, provenance, args, inputs, exit=0, output=None, error=None):
    CASES[name] = dict(provenance=provenance, args=args, inputs=inputs, exit=exit, output=output, error=error)


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    lt, lt1 = point_of(LAM)
    f2 = jordan(1, 2)

    case("identity2_classify",
         "kind: trivial\n\nThe identity loop is already a reduced constant; every eigenvalue is 1, so the invariant is two size-1 entries at the origin.",
         ["classify"], {"input.json": const(np.eye(2))},
         output=invariant([entry(0, 0, 1), entry(0, 0, 1)]))

    sl_a = loop([(1, [[1, 0], [0, 0]]), (-1, [[0, 0], [0, 1]])], (-1, 4))
    sl_b = loop([(1, [[1, 0], [0, 0]]), (-1, [[0, 1], [0, 1]])], (-1, 4))
    rejection = ("kind: reference\n\nThe pair diag(z, 1/z) and [[z, 1/z], [0, 1/z]] in SL_2((z)) are twisted conjugate only by a "
                 "divergent element, and neither lies in GL_2[[z]]. The input check must reject them, naming the "
                 "offending entry, with exit code 2.")
    case("sl2_pair_equiv", rejection, ["equiv"], {"input_a.json": sl_a, "input_b.json": sl_b},
         exit=2, error="NotIntegralRepresentative")
    case("sl2_second_classify", rejection, ["classify"], {"input.json": sl_b},
         exit=2, error="NotIntegralRepresentative")

    case("half_power_classify",
         "kind: derived\n\nOracle: the 1x1 constant q^(1/2) descends on the double cover by z^(-1/2) to the constant 1 "
         "with a-cycle element -1; the point is q^(1/2), i.e. coordinates (1/2, 0), computed in generate.py "
         "from the closed form of the eigenvalue.",
         ["classify"], {"input.json": const([[Q ** 0.5]])},
         output=invariant([entry(*point_of(Q ** 0.5), 1)]))

    tri = loop([(0, [[LAM, 0], [0, Q * LAM]]), (1, [[0, 1], [0, 0]])], (0, 6))
    tri_note = ("kind: derived\n\nOracle: a_1 = E_12/lambda lies in the weight q^(-1) part and is solved away, and every "
                "later correction stays there, so the aligned form is the constant diag(lambda, q lambda). Both "
                "eigenvalues give the point of lambda = e^(2 pi i (tau t + t1)) with t = 0.2718281828, "
                "t1 = 0.3141592653. An invertible polynomial intertwiner with diag(lambda, lambda) exists "
                "(checked by the equiv case).")
    case("triangular_classify", tri_note, ["classify"], {"input.json": tri},
         output=invariant([entry(lt, lt1, 1), entry(lt, lt1, 1)]))
    case("triangular_align", tri_note, ["align"], {"input.json": tri},
         output={"K": 1, "xs": [mat(np.zeros((2, 2)))], "weight_residual": 0.0})
    case("triangular_equiv", tri_note, ["equiv"], {"input_a.json": tri, "input_b.json": const(LAM * np.eye(2), 6)},
         output={"equivalent": True, "certificate": "*"})

    case("jordan_classify",
         "kind: derived\n\nOracle: lambda J(1,2) is a reduced constant with one Jordan block of size 2 "
         "(rank of the nilpotent part is 1), so the invariant is a single size-2 entry at the point of lambda.",
         ["classify"], {"input.json": const(jordan(LAM, 2))},
         output=invariant([entry(lt, lt1, 2)]))

    shift_note = ("kind: derived\n\nOracle: g = diag(1, 1/z) satisfies g(qz) diag(lambda, q lambda) g(z)^-1 = "
                  "diag(lambda, lambda) by direct multiplication.")
    case("shifted_pair_equiv", shift_note, ["equiv"],
         {"input_a.json": const(np.diag([LAM, Q * LAM])), "input_b.json": const(LAM * np.eye(2))},
         output={"equivalent": True, "certificate": "*"})
    case("jordan_vs_scalar_equiv",
         "kind: derived\n\nOracle: every intertwiner from lambda I to lambda J(1,2) is a singular constant "
         "(numpy null space in generate.py), and the Jordan sizes differ.",
         ["equiv"], {"input_a.json": const(LAM * np.eye(2)), "input_b.json": const(jordan(LAM, 2))},
         output={"equivalent": False, "certificate": None})

    hom_cases = [
        ("homdim_one_one", "kind: trivial\n\nOnly constants intertwine 1 with itself.", [[1]], [[1]]),
        ("homdim_one_f2", "kind: derived\n\nOracle: the recurrence f2(qz) = f2(z), f1(qz) = f1(z) + f2(z) forces "
         "f2 = 0 and f1 constant; confirmed by the numpy null space in generate.py.", [[1]], f2),
        ("homdim_f2_f2", "kind: derived\n\nOracle: the centralizer of J(1,2) is two-dimensional and no other "
         "degree contributes; numpy null space in generate.py.", f2, f2),
        ("homdim_l_ql", "kind: derived\n\nOracle: g = 1/z intertwines lambda with q lambda; numpy null space "
         "in generate.py.", [[LAM]], [[Q * LAM]]),
        ("homdim_l_generic", "kind: derived\n\nOracle: lambda and 0.5+0.1i differ by no power of q; numpy null "
         "space in generate.py.", [[LAM]], [[0.5 + 0.1j]]),
    ]
    for name, note, a, b in hom_cases:
        d = hom_dim(a, b)
        case(name, note, ["homdim"], {"input_a.json": const(a), "input_b.json": const(b)},
             output={"measured": d, "formula": d})

    case("synth_half_point",
         "kind: derived\n\nOracle: the entry ((1/2, 0), 1) is realized by the constant e^(2 pi i tau/2).",
         ["synth"], {"input.json": invariant([entry(0.5, 0, 1)])},
         output={"n": 1, "m_cov": 1, "terms": [{"k": 0, "matrix": mat([[Q ** 0.5]])}]})
    case("tensor_f2_f2",
         "kind: derived\n\nOracle: (J(1,2) kron J(1,2) - I) has ranks 4, 2, 0 for powers 0, 1, 2, "
         "hence Jordan sizes 3 and 1.",
         ["tensor"], {"input_a.json": invariant([entry(0, 0, 2)]), "input_b.json": invariant([entry(0, 0, 2)])},
         output=invariant([entry(0, 0, 3), entry(0, 0, 1)]))
    case("dual_point",
         "kind: derived\n\nOracle: the dual of a line bundle at (t, t1) sits at (-t, -t1) mod 1.",
         ["dual"], {"input.json": invariant([entry(0.25, 0.5, 3)])},
         output=invariant([entry(0.75, 0.5, 3)]))
    case("sum_points",
         "kind: trivial\n\nDirect sum concatenates the entries.",
         ["sum"], {"input_a.json": invariant([entry(0.1, 0.2, 1)]), "input_b.json": invariant([entry(0.0, 0.0, 2)])},
         output=invariant([entry(0.1, 0.2, 1), entry(0.0, 0.0, 2)]))

    eigs = [
        {"r": "1/2", "r1": "0", "tag": None},
        {"r": "0", "r1": "0", "tag": "t"},
        {"r": "1", "r1": "1/3", "tag": "t"},
        {"r": "1/3", "r1": "0", "tag": "u"},
    ]
    tag0 = ((T + 0.0) % 1 * 0.5, T1 % 1)
    tag1 = ((T + 0.1414213562) % 1 * 0.5, (T1 + 0.1732050807) % 1)
    case("exact_mode_classify",
         "kind: derived\n\nOracle: the tag matrix has rows (0,1,1,0) and (0,0,0,1); its kernel is spanned by "
         "(1,0,0,0) and (0,1,-1,0). Exponents relative to each tag's first member are 1/2, 0, 1, 0, so m = 2 and "
         "phi = (1, 0, 2, 0). Points add the tag's generic factor to (r, r1).",
         ["classify", "--mode", "exact"], {"input.json": eigs},
         output={
             "exact": {"m": 2, "phi": [1, 0, 2, 0], "unimodular": True},
             "entries": [entry(0.5, 0, 1), entry(tag0[0], tag0[1], 1),
                         entry(tag0[0], (tag0[1] + 1 / 3) % 1, 1),
                         entry((tag1[0] + 1 / 3) % 1, tag1[1], 1)],
         })

    for name in sorted(os.listdir(here)):
        path = os.path.join(here, name)
        if os.path.isdir(path):
            shutil.rmtree(path)
    for name, c in CASES.items():
        d = os.path.join(here, name)
        os.makedirs(d)
        for fname, doc in c["inputs"].items():
            with open(os.path.join(d, fname), "w") as f:
                json.dump(doc, f, indent=1)
        expected = {"args": c["args"], "exit": c["exit"]}
        if c["output"] is not None:
            expected["output"] = c["output"]
        if c["error"] is not None:
            expected["error"] = c["error"]
        with open(os.path.join(d, "expected.json"), "w") as f:
            json.dump(expected, f, indent=1)
        with open(os.path.join(d, "PROVENANCE.md"), "w") as f:
            f.write(f"# {name}\n\n{c['provenance']}\n")


if __name__ == "__main__":
    main()
