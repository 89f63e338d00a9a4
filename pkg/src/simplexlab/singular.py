"""Monte Carlo estimators for the scale-truncated singular forms.

Conventions (factor and coordinate indices are zero-based):

* ``alpha[i]`` has ``L[i] + 1`` entries; entry ``r >= 1`` is the scale factor
  of the Gaussian tying x_i^r to x_i^0, entry 0 is the scale of the
  q-kernel in the tilde form.
* The block Gaussian of factor i at scale s is prod_r g_(s alpha_i^r)(x_i^r - x_i^0),
  and its Laplacian is taken in the split form
  sum_w (Delta g)_(s alpha^w)(x^w - x^0) prod_(r != w) g_(s alpha^r)(x^r - x^0).
  With this reading the telescoping identity
  sum_z Theta^(z) = 2 pi (Xi_a - Xi_b) is exact.
* ``ds/s`` on [a, b] is sampled log-uniformly with weight log(b/a).

A Gaussian displacement with density g_sigma is sigma * zeta / sqrt(2 pi)
with zeta standard normal; then (Delta g)_sigma / g_sigma = 2 pi (|zeta|^2 - d).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import BadSpec
from .forms import FormEstimate, HypergraphIndex, estimate_from_samples, form_samples, hyper_product
from .rng import Stream, as_stream, map_chunks
from .sets import GridSet

TWO_PI = 2.0 * math.pi
PHI_KINDS = ("g", "dg")


@dataclass(frozen=True)
class ThetaSpec:
    v: int
    L: tuple
    a: float
    b: float
    alpha: tuple
    w: int | None = None
    m: int | None = None
    phi: str = "g"

    def __post_init__(self):
        object.__setattr__(self, "L", tuple(int(l) for l in self.L))
        object.__setattr__(self, "alpha", tuple(tuple(float(x) for x in a) for a in self.alpha))

    def validate(self, K: Sequence[int], tilde: bool = False):
        n = len(K)
        if len(self.L) != n:
            raise BadSpec(f"L has {len(self.L)} entries, expected {n}")
        for l, k in zip(self.L, K):
            if not 1 <= l <= k:
                raise BadSpec(f"need 1 <= l_i <= k_i, got l={l}, k={k}")
        if not 0 <= self.v < n:
            raise BadSpec(f"v={self.v} outside 0..{n - 1}")
        if not (self.a > 0 and self.b / self.a >= 2.0):
            raise BadSpec(f"need a > 0 and b/a >= 2, got a={self.a}, b={self.b}")
        if len(self.alpha) != n or any(len(al) != l + 1 for al, l in zip(self.alpha, self.L)):
            raise BadSpec("alpha[i] must have L[i] + 1 entries")
        if any(x <= 0 for al in self.alpha for x in al):
            raise BadSpec("alpha entries must be positive")
        if tilde:
            if self.w is None or not 1 <= self.w <= self.L[self.v]:
                raise BadSpec(f"need 1 <= w <= l_v, got w={self.w}")
            if self.m is None or not 0 <= self.m <= K[self.v]:
                raise BadSpec(f"need 0 <= m <= k_v, got m={self.m}")
            if self.phi not in PHI_KINDS:
                raise BadSpec(f"phi must be one of {PHI_KINDS}")


def _log_uniform(gen, a, b, size):
    return a * (b / a) ** gen.random(size)


@dataclass
class _Draw:
    s: np.ndarray  # (m,)
    x0: list  # per factor (m, d_i)
    zeta: list  # per factor (m, l_i, d_i)


def _draw(K, L, a, b, size, stream: Stream) -> _Draw:
    s = _log_uniform(stream.child("s").generator(), a, b, size)
    x0 = [stream.child("x0", i).generator().random((size, k + 1)) for i, k in enumerate(K)]
    zeta = [stream.child("zeta", i).generator().standard_normal((size, l, k + 1))
            for i, (k, l) in enumerate(zip(K, L))]
    return _Draw(s, x0, zeta)


def _points(draw: _Draw, scale: np.ndarray, alpha) -> list[np.ndarray]:
    """x_i^r = x_i^0 + scale * alpha_i^r * zeta_i^r / sqrt(2 pi)."""
    out = []
    for x0, z, al in zip(draw.x0, draw.zeta, alpha):
        sd = scale[:, None, None] * np.asarray(al[1:])[None, :, None] / math.sqrt(TWO_PI)
        out.append(np.concatenate([x0[:, None], x0[:, None] + sd * z], axis=1))
    return out


def _lap_weight(zeta: np.ndarray) -> np.ndarray:
    """sum over blocks of (Delta g)/g at unit scale: 2 pi (|zeta_w|^2 - d)."""
    d = zeta.shape[-1]
    return TWO_PI * ((zeta ** 2).sum(-1) - d).sum(-1)


def _shape_K(A: GridSet):
    return A.shape.K


def _theta_chunk(A, spec, vs, draw):
    """Signed per-sample values of Theta^(v) for each v in ``vs``."""
    pts = _points(draw, draw.s, spec.alpha)
    ind = hyper_product(A, pts).astype(float)
    logw = math.log(spec.b / spec.a)
    return [-logw * _lap_weight(draw.zeta[v]) * ind for v in vs]


def _xi_chunk(A, alpha, scale, draw):
    pts = _points(draw, np.full(draw.s.shape, scale), alpha)
    return hyper_product(A, pts).astype(float)


def estimate_theta(spec: ThetaSpec, A: GridSet, samples: int, rng=None,
                   workers: int | None = None) -> FormEstimate:
    """Signed estimate of Theta^(v)_(L,a,b,alpha)(A)."""
    K = _shape_K(A)
    spec.validate(K)
    stream = as_stream(rng).child("theta")

    def run(c, m):
        draw = _draw(K, spec.L, spec.a, spec.b, m, stream.child(c))
        return _theta_chunk(A, spec, [spec.v], draw)[0]

    vals = np.concatenate(map_chunks(run, samples, workers))
    return estimate_from_samples(vals, stream.id, form=f"Theta[v={spec.v}]")


def estimate_xi(L, a: float, alpha, A: GridSet, samples: int, rng=None,
                workers: int | None = None) -> FormEstimate:
    """Estimate of Xi_(L,a,alpha)(A), which lies in [0, 1]."""
    K = _shape_K(A)
    spec = ThetaSpec(0, L, a, 2 * a, alpha)
    spec.validate(K)
    stream = as_stream(rng).child("xi")

    def run(c, m):
        draw = _draw(K, spec.L, a, a, m, stream.child(c))
        return _xi_chunk(A, spec.alpha, a, draw)

    vals = np.concatenate(map_chunks(run, samples, workers))
    return estimate_from_samples(vals, stream.id, form="Xi", extra={"a": a})


def _phi_offsets(gen, phi: str, m: int, size: int, d: int):
    """Draw xi with density phi / ||phi||_1; returns (xi, ||phi||_1)."""
    xi = gen.standard_normal((size, d)) / math.sqrt(TWO_PI)
    if phi == "g":
        return xi, 1.0
    # |d_m g| / 2: Rayleigh modulus in coordinate m, random sign
    mag = np.sqrt(-np.log1p(-gen.random(size)) / math.pi)
    sign = np.where(gen.random(size) < 0.5, -1.0, 1.0)
    xi[:, m] = sign * mag
    return xi, 2.0


def estimate_theta_tilde(spec: ThetaSpec, A: GridSet, samples: int, rng=None,
                         inner: int = 64, workers: int | None = None) -> FormEstimate:
    """Non-negative nested estimate of the tilde form.

    The absolute value of the inner integral over x_v^w is estimated with
    ``inner`` importance samples from |d_m g| / 2.  ``extra["bias_bound"]``
    bounds the upward bias E|X| - |E X| by the mean inner standard error.
    """
    K = _shape_K(A)
    spec.validate(K, tilde=True)
    v, w, mc = spec.v, spec.w, spec.m
    d_v = K[v] + 1
    members = HypergraphIndex(spec.L).restricted(v, w)
    stream = as_stream(rng).child("theta_tilde")
    logw = math.log(spec.b / spec.a)
    sq2pi = math.sqrt(TWO_PI)

    def run(c, size):
        st = stream.child(c)
        draw = _draw(K, spec.L, spec.a, spec.b, size, st)
        s = draw.s
        xi, mass = _phi_offsets(st.child("q").generator(), spec.phi, mc, size, d_v)
        q = draw.x0[v] - (s * spec.alpha[v][0])[:, None] * xi
        pts = _points(draw, s, spec.alpha)
        # inner importance samples for x_v^w around q
        gen = st.child("inner").generator()
        eta = gen.standard_normal((size, inner, d_v)) / sq2pi
        mag = np.sqrt(-np.log1p(-gen.random((size, inner))) / math.pi)
        sgn = np.where(gen.random((size, inner)) < 0.5, -1.0, 1.0)
        eta[:, :, mc] = sgn * mag
        y = q[:, None, :] + (s * spec.alpha[v][w])[:, None, None] * eta
        rep = [np.repeat(p, inner, axis=0) for p in pts]
        rep[v] = rep[v].copy()
        rep[v][:, w] = y.reshape(-1, d_v)
        F = hyper_product(A, rep, members).reshape(size, inner).astype(float)
        contrib = -2.0 * sgn * F
        mean = contrib.mean(axis=1)
        se = contrib.std(axis=1, ddof=1) / math.sqrt(inner) if inner > 1 else np.zeros(size)
        return logw * mass * np.abs(mean), logw * mass * se

    parts = map_chunks(run, samples, workers)
    vals = np.concatenate([p[0] for p in parts])
    bias = float(np.concatenate([p[1] for p in parts]).mean()) if samples else 0.0
    return estimate_from_samples(vals, stream.id, form=f"ThetaTilde[v={v},w={w},m={mc}]",
                                 extra={"bias_bound": bias, "inner": inner})


def tilde_alpha(alpha, v: int, w: int) -> tuple:
    """alpha with alpha_v^0 = alpha_v^w = alpha_v^w / sqrt(2)."""
    out = [list(a) for a in alpha]
    val = alpha[v][w] / math.sqrt(2.0)
    out[v][0] = val
    out[v][w] = val
    return tuple(tuple(a) for a in out)


@dataclass(frozen=True)
class TriangleReport:
    theta: FormEstimate
    tilde_terms: tuple
    bound: float  # 2 * sum of tilde terms; the 2 comes from -(1/2) in the convolution identity
    bound_stderr: float

    @property
    def slack(self) -> float:
        """bound - |theta|; should not be below -3 combined stderr."""
        return self.bound - abs(self.theta.value)

    @property
    def combined_stderr(self) -> float:
        return math.hypot(self.theta.stderr, self.bound_stderr)

    def holds(self, sigmas: float = 3.0) -> bool:
        return self.slack >= -sigmas * self.combined_stderr


def check_triangle(spec: ThetaSpec, A: GridSet, samples: int, rng=None, inner: int = 64,
                   workers: int | None = None) -> TriangleReport:
    """|Theta^(v)| <= 2 sum_w sum_m ThetaTilde^(v,w,m) with phi = |d_m g| and rescaled alpha."""
    K = _shape_K(A)
    spec.validate(K)
    stream = as_stream(rng)
    theta = estimate_theta(spec, A, samples, stream, workers)
    terms = []
    for w in range(1, spec.L[spec.v] + 1):
        for mc in range(K[spec.v] + 1):
            ts = replace(spec, alpha=tilde_alpha(spec.alpha, spec.v, w), w=w, m=mc, phi="dg")
            terms.append(estimate_theta_tilde(ts, A, samples, stream.child("tri", w, mc), inner, workers))
    bound = 2.0 * sum(t.value for t in terms)
    se = 2.0 * math.sqrt(sum(t.stderr ** 2 for t in terms))
    return TriangleReport(theta, tuple(terms), bound, se)


@dataclass(frozen=True)
class TelescopingReport:
    theta_sum: float
    xi_a: float
    xi_b: float
    residual: float
    stderr: float
    samples: int
    thetas: tuple = ()

    def holds(self, sigmas: float = 3.0) -> bool:
        return self.residual <= sigmas * self.stderr

    def to_record(self) -> dict:
        return {"theta_sum": self.theta_sum, "xi_a": self.xi_a, "xi_b": self.xi_b,
                "residual": self.residual, "stderr": self.stderr, "samples": self.samples,
                "thetas": list(self.thetas)}


def check_telescoping(L, a: float, b: float, alpha, A: GridSet, samples: int, rng=None,
                      workers: int | None = None) -> TelescopingReport:
    """|sum_z Theta^(z) - 2 pi (Xi_a - Xi_b)| with every term on the same draws."""
    K = _shape_K(A)
    spec = ThetaSpec(0, L, a, b, alpha)
    spec.validate(K)
    n = len(K)
    stream = as_stream(rng).child("telescoping")

    def run(c, m):
        draw = _draw(K, spec.L, a, b, m, stream.child(c))
        th = np.stack(_theta_chunk(A, spec, range(n), draw))
        xa = _xi_chunk(A, spec.alpha, a, draw)
        xb = _xi_chunk(A, spec.alpha, b, draw)
        return th, xa, xb

    parts = map_chunks(run, samples, workers)
    th = np.concatenate([p[0] for p in parts], axis=1)
    xa = np.concatenate([p[1] for p in parts])
    xb = np.concatenate([p[2] for p in parts])
    D = th.sum(axis=0) - TWO_PI * (xa - xb)
    N = D.size
    se = float(D.std(ddof=1) / math.sqrt(N)) if N > 1 else 0.0
    return TelescopingReport(float(th.sum(axis=0).mean()), float(xa.mean()), float(xb.mean()),
                             abs(float(D.mean())), se, N, tuple(float(t.mean()) for t in th))


@dataclass(frozen=True)
class GrowthReport:
    epsilon: float
    lambdas: tuple
    J: tuple
    sums: tuple
    sum_stderr: tuple
    exponent: float
    ci_low: float
    ci_high: float
    upper95: float
    fitted_J: tuple
    target: float

    def rows(self):
        for J, S, se in zip(self.J, self.sums, self.sum_stderr):
            yield {"J": J, "sum": S, "stderr": se, "fitted": J in self.fitted_J}


def _slope(logx, logy):
    x = logx - logx.mean()
    return float((x * (logy - logy.mean())).sum() / (x ** 2).sum())


def growth_probe(A: GridSet, simplices, epsilon: float, J_list: Sequence[int], samples: int,
                 rng=None, workers: int | None = None, bootstrap: int = 200) -> GrowthReport:
    """Fit the growth of sum_(j<=J) |N^eps_(lam_j) - N^1_(lam_j)| in J.

    lam_j = 1.5 * 2^-j is the midpoint of (2^-j, 2^(-j+1)].  Every term uses
    the same base draws.  The confidence band comes from a bootstrap over
    samples; ``upper95`` is the one-sided 95% upper bound on the exponent.
    """
    J_list = sorted(int(j) for j in J_list)
    if not J_list or J_list[0] < 1 or J_list[-1] > 12:
        raise BadSpec("J values must lie in 1..12")
    if any(a >= b for a, b in zip(J_list, J_list[1:])):
        raise BadSpec("J_list must be strictly increasing")
    Jmax = J_list[-1]
    lams = [1.5 * 2.0 ** -j for j in range(1, Jmax + 1)]
    settings = [(lam, e) for lam in lams for e in (epsilon, 1.0)]
    stream = as_stream(rng)
    vals = form_samples(A, simplices, settings, samples, stream.child("growth"), workers)
    d = vals[0::2].astype(np.int8) - vals[1::2].astype(np.int8)  # (Jmax, N)
    N = d.shape[1]

    def sums_of(means):
        return np.cumsum(np.abs(means), axis=-1)

    means = d.mean(axis=1)
    S_all = sums_of(means)
    sgn = np.sign(means)
    lin = np.cumsum(sgn[:, None] * d, axis=0)  # per-sample linearisation of each partial sum
    se_all = lin.std(axis=1, ddof=1) / math.sqrt(N) if N > 1 else np.zeros(Jmax)
    idx = np.array(J_list) - 1
    S, se = S_all[idx], se_all[idx]
    keep = S > 3.0 * se
    Jf = np.array(J_list, dtype=float)[keep]

    exponent = ci_low = ci_high = upper = float("nan")
    if keep.sum() >= 2:
        exponent = _slope(np.log(Jf), np.log(S[keep]))
        gen = stream.child("bootstrap").generator()
        slopes = []
        df = d.astype(np.float64)
        for _ in range(bootstrap):
            pick = gen.integers(0, N, N)
            Sb = sums_of(df[:, pick].mean(axis=1))[idx][keep]
            if np.all(Sb > 0):
                slopes.append(_slope(np.log(Jf), np.log(Sb)))
        if slopes:
            ci_low, ci_high, upper = (float(np.percentile(slopes, p)) for p in (2.5, 97.5, 95.0))
    n = A.shape.n
    return GrowthReport(float(epsilon), tuple(lams), tuple(J_list), tuple(map(float, S)),
                        tuple(map(float, se)), exponent, ci_low, ci_high, upper,
                        tuple(int(j) for j in Jf), 1.0 - 2.0 ** -n)
