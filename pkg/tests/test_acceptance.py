"""Acceptance checks, one test per criterion.

Each check records a one-line verdict; the lines are printed in the pytest
terminal summary and when this file is run as a script.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
import yaml
from scipy import stats

from simplexlab.cli import endpoints_agree, main
from simplexlab.forms import check_uniform_decay, fit_decay_exponent
from simplexlab.identities import check_conv_identities, check_heat_identity
from simplexlab.rng import Stream
from simplexlab.sampling import HAAR, SPHERE, gram_residual, unit_configurations
from simplexlab.scan import lambda_grid, oracle_feasible, scan_lambda
from simplexlab.sets import full, random_set, subcube
from simplexlab.simplex import ProductShape, equilateral_simplex, right_simplex, validate_simplex
from simplexlab.singular import ThetaSpec, check_telescoping, estimate_theta, growth_probe
from simplexlab.structured import jensen_chain

VERDICTS: list = []


def record(num, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2} {name}: {detail}"
    VERDICTS.append(line)
    print(line)
    return ok


# 1 -------------------------------------------------------------------------

def family(k):
    gen = np.random.default_rng(100 + k)
    return [right_simplex(k), equilateral_simplex(k),
            validate_simplex(gen.normal(size=(k, k)) + 2 * np.eye(k))]


def test_c01_gram_invariance():
    t0 = time.perf_counter()
    worst = 0.0
    for k in (1, 2, 3):
        for si, s in enumerate(family(k)):
            for lam in (0.1, 0.5, 1.0):
                for method in (SPHERE, HAAR):
                    Y = lam * unit_configurations(s, 10_000, Stream(1).child(k, si, method), method)
                    tol = 1e-9 * lam ** 2 * np.abs(s.gram).max()
                    worst = max(worst, gram_residual(Y, s, lam) / tol)
    dt = time.perf_counter() - t0
    ok = worst <= 1.0 and dt < 10
    assert record(1, "gram invariance", ok, f"max residual/tol={worst:.2e}, {dt:.2f}s")


# 2 -------------------------------------------------------------------------

def ks_features(Y):
    y1, y2 = Y[:, 0], Y[:, 1]
    u1 = y1 / np.linalg.norm(y1, axis=1, keepdims=True)
    w = y2 - (y2 * u1).sum(1, keepdims=True) * u1
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return u1[:, 0], w[:, 0], w[:, 2]


def test_c02_sampler_equivalence():
    N = 100_000
    crit = 1.628 * math.sqrt(2.0 / N)
    worst, details = 0.0, []
    for name, s in (("equilateral", equilateral_simplex(2)), ("right", right_simplex(2))):
        A = ks_features(unit_configurations(s, N, Stream(2).child(name, "sphere"), SPHERE))
        B = ks_features(unit_configurations(s, N, Stream(2).child(name, "haar"), HAAR))
        ds = [stats.ks_2samp(a, b).statistic for a, b in zip(A, B)]
        worst = max(worst, max(ds))
        details.append(f"{name} D={max(ds):.4f}")
    ok = worst < crit
    assert record(2, "sampler equivalence", ok, f"{', '.join(details)} (1% crit {crit:.4f})")


# 3 -------------------------------------------------------------------------

#: grids beyond 2^22 cells are skipped: cheap to state, slow to enumerate at desk scale
CELL_CAP = 2 ** 22
COST_CAP = 2 ** 27


def _cost(R, m, K):
    c = R // 2 ** m
    M = [c ** (k + 1) for k in K]
    cubes = 2 ** (m * sum(k + 1 for k in K))
    if len(K) == 1:
        return cubes * M[0]
    pa, pb = K[0] + 1, K[1] + 1
    return cubes * min(M[0] ** pa * M[1], M[1] ** pb * M[0])


def structured_cases(count=100, seed=3):
    gen = np.random.default_rng(seed)
    cases = []
    while len(cases) < count:
        n = int(gen.integers(1, 3))
        K = tuple(int(x) for x in gen.integers(1, 3, size=n))
        R = int(gen.choice([8, 16, 32]))
        delta = float(gen.choice([0.1, 0.2, 0.3, 0.4, 0.5]))
        if R ** sum(k + 1 for k in K) > CELL_CAP:
            continue
        ms = [m for m in range(1, int(math.log2(R)) + 1) if _cost(R, m, K) <= COST_CAP]
        if not ms:
            continue
        m = int(gen.choice(ms))
        lam = float(gen.uniform(2.0 ** -m, 2.0 ** (-m + 1)))
        if lam <= 2.0 ** -m:
            continue
        cases.append((K, R, delta, m, lam, int(gen.integers(0, 2 ** 31))))
    return cases


def test_c03_structured_chain():
    t0 = time.perf_counter()
    bad, eq_bad, covered = [], [], set()
    for K, R, delta, m, lam, s in structured_cases():
        A = random_set(ProductShape(K), R, delta, seed=s)
        ch = jensen_chain(A, lam)
        assert ch.m == m
        covered.add((len(K), R))
        if not (ch.per_cube_ok and ch.lhs >= ch.power_mean >= ch.rhs and ch.lhs >= A.measure ** ch.kappa):
            bad.append((K, R, delta, m))
        if len(K) == 1 and not ch.per_cube_equal:
            eq_bad.append((K, R, delta, m))
    dt = time.perf_counter() - t0
    ok = not bad and not eq_bad
    assert record(3, "structured chain", ok,
                  f"100 sets, failures={len(bad)}, n=1 non-equalities={len(eq_bad)}, "
                  f"(n,R) covered={sorted(covered)}, {dt:.1f}s")


# 4 -------------------------------------------------------------------------

def test_c04_identities():
    t0 = time.perf_counter()
    heat = max(check_heat_identity(t, lam, d) for d in range(1, 7) for t, lam in ((0.05, 0.5), (1.0, 0.3)))
    conv = [check_conv_identities(s, 1.0, 0.3, d) for d in (1, 2) for s in (1.5 * 2 ** -7, 2 ** -6)]
    gkh = max(r.gkh_residual for r in conv)
    khh = max(r.khh_residual for r in conv)
    dt = time.perf_counter() - t0
    ok = heat <= 1e-4 and gkh <= 1e-3 and khh <= 1e-3 and dt < 60
    assert record(4, "exact identities", ok,
                  f"heat={heat:.2e} gkh={gkh:.2e} khhconv={khh:.2e}, {dt:.1f}s")


# 5 -------------------------------------------------------------------------

def test_c05_telescoping():
    S = ProductShape((1, 1))
    worst, rows = 0.0, []
    for seed in (1, 2, 3):
        A = random_set(S, 8, 0.4, seed=seed)
        for ratio in (2, 8):
            rep = check_telescoping((1, 1), 0.05, 0.05 * ratio, ((1.0, 1.0), (1.0, 1.0)), A,
                                    100_000, Stream(5).child(seed, ratio))
            z = rep.residual / rep.stderr
            worst = max(worst, z)
            rows.append(f"{z:.2f}")
    ok = worst <= 3.0
    assert record(5, "telescoping", ok, f"residual/stderr per case={rows}")


# 6 -------------------------------------------------------------------------

def random_theta_specs(count=20, seed=6):
    gen = np.random.default_rng(seed)
    out = []
    for i in range(count):
        K = [(1,), (2,), (1, 1), (1, 2), (2, 1)][int(gen.integers(0, 5))]
        n = len(K)
        z = int(gen.integers(0, n))
        L = tuple(1 if i == z else int(gen.integers(1, K[i] + 1)) for i in range(n))
        alpha = []
        for i in range(n):
            al = list(gen.uniform(0.5, 2.0, size=L[i] + 1))
            if i == z:
                al[1] = al[0]
            alpha.append(tuple(float(x) for x in al))
        a = float(gen.uniform(0.02, 0.1))
        b = a * float(gen.uniform(2.0, 16.0))
        R = 4 if sum(k + 1 for k in K) > 4 else 8
        A = random_set(ProductShape(K), R, float(gen.choice([0.3, 0.5, 0.7])), seed=int(gen.integers(1e6)))
        out.append((ThetaSpec(z, L, a, b, tuple(alpha)), A))
    return out


def test_c06_nonnegativity():
    zs, ok = [], True
    for i, (spec, A) in enumerate(random_theta_specs()):
        est = estimate_theta(spec, A, 20_000, Stream(6).child(i))
        z = est.value / est.stderr if est.stderr > 0 else 0.0
        zs.append(z)
        ok &= est.value >= -3 * est.stderr
    assert record(6, "non-negativity", ok, f"20 specs, min value/stderr={min(zs):.2f}")


# 7 -------------------------------------------------------------------------

def test_c07_uniform_decay():
    A = random_set(ProductShape((1,)), 8, 0.3, seed=4)
    pts = check_uniform_decay(A, [right_simplex(1)], 1 / 8, [0.2, 0.1, 0.05, 0.025], 1_000_000,
                              Stream(7))
    sig = [p for p in pts if p.significant()]
    monotone = all(a.difference > b.difference for a, b in zip(sig, sig[1:]))
    expo = fit_decay_exponent(pts)
    ok = monotone and math.isfinite(expo) and expo >= 0.3
    zs = ", ".join(f"{p.epsilon}:{p.difference / p.stderr:.1f}sd" for p in pts)
    assert record(7, "uniform decay", ok, f"exponent={expo:.3f}, monotone={monotone}, z=[{zs}]")


# 8 -------------------------------------------------------------------------

def test_c08_end_to_end_scan():
    A = subcube(ProductShape((1,)), 64, 0.3)
    seg = [right_simplex(1)]
    rep = scan_lambda(A, seg, 0.05, 1.0, 30, 200_000, Stream(8))
    feas = oracle_feasible(A, seg, rep.lambdas, 500, 64, Stream(8).child("oracle"))
    verified = rep.witnesses_verified and all(w.verify(A, seg) for ws in rep.witnesses.values() for w in ws)
    ok = bool(rep.intervals) and endpoints_agree(rep.detected, feas) and verified
    d = [i for i, f in enumerate(rep.detected) if f]
    o = [i for i, f in enumerate(feas) if f]
    geom = math.sqrt(2) * 35 / 64
    assert record(8, "end-to-end scan", ok,
                  f"|A|={A.density:.4f}, detected idx [{d[0]}, {d[-1]}] lam [{rep.lambdas[d[0]]:.3f}, "
                  f"{rep.lambdas[d[-1]]:.3f}], oracle idx [{o[0]}, {o[-1]}], diagonal bound {geom:.3f}, "
                  f"witnesses verified={verified}")


# 9 -------------------------------------------------------------------------

def test_c09_growth_probe():
    rep = growth_probe(full(ProductShape((1,)), 2), [right_simplex(1)], 0.1, list(range(1, 13)),
                       200_000, Stream(9), bootstrap=200)
    ok = math.isfinite(rep.upper95) and rep.upper95 <= 1.0
    assert record(9, "growth probe", ok,
                  f"exponent={rep.exponent:.3f}, 95% upper={rep.upper95:.3f}, "
                  f"target (reported only)={rep.target}")


# 10 ------------------------------------------------------------------------

SMALL = {
    "scan": {"simplices": [{"preset": "right", "k": 1}], "set": {"kind": "subcube", "delta": 0.3},
             "resolution": 16, "lambda_min": 0.05, "lambda_max": 1.0, "grid_points": 8,
             "samples": 20_000, "oracle": {"rotation_samples": 20, "base_grid": 16}},
    "structured": {"simplices": [{"preset": "right", "k": 1}, {"preset": "right", "k": 1}],
                   "set": {"kind": "random", "delta": 0.3, "seed": 1}, "resolution": 8, "lam": 0.3,
                   "samples": 20_000},
    "identities": {"conv": {"dims": [1]}},
    "telescoping": {"simplices": [{"preset": "right", "k": 1}] * 2,
                    "set": {"kind": "random", "delta": 0.5, "seed": 2}, "resolution": 4,
                    "L": [1, 1], "alpha": [[1.0, 1.0], [1.0, 1.0]], "samples": 20_000},
    "growth": {"simplices": [{"preset": "right", "k": 1}], "set": {"kind": "full"}, "resolution": 2,
               "J": [1, 2, 4, 8], "samples": 20_000, "bootstrap": 20},
    "uniform-decay": {"simplices": [{"preset": "right", "k": 1}],
                      "set": {"kind": "random", "delta": 0.3, "seed": 4}, "resolution": 8,
                      "lam": 0.125, "samples": 40_000},
}


def test_c10_reproducibility(tmp_path):
    mismatched = []
    for kind, body in SMALL.items():
        cfg = tmp_path / f"{kind}.yaml"
        cfg.write_text(yaml.safe_dump({"experiment": kind, "seed": 10, **body}))
        outs = []
        for tag, w in (("a", 1), ("b", 3), ("c", 1)):
            d = tmp_path / f"{kind}-{tag}"
            main(["run", str(cfg), "--out", str(d), "--workers", str(w)])
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "metadata.json"})
        if not (outs[0] == outs[1] == outs[2] and outs[0]):
            mismatched.append(kind)
    ok = not mismatched
    assert record(10, "reproducibility", ok,
                  f"{len(SMALL)} experiment kinds x workers {{1,3,1}}, mismatched={mismatched}")


if __name__ == "__main__":
    import sys
    import tempfile

    sys.exit(pytest.main([__file__, "-q"]))
