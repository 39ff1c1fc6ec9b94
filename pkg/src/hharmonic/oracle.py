"""Brute-force reference evaluators.

Apart from the zonal harmonic under test, nothing here uses the series
machinery of :mod:`hharmonic.hypergeom`: the
sphere integrals are done by quadrature or Monte Carlo, and ``I_m(s)``
takes ``S_m`` from :func:`scipy.special.hyp2f1`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

from .errors import DomainError, NonConvergence
from .geometry import BallPoint, KernelParams, as_point

SCHEMES = ("tensor-gauss-jacobi", "monte-carlo")
_MC_BATCH = 1 << 16
# largest node count for the full product rule on general integrands
_PRODUCT_RULE_MAX = 1 << 22


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str = "tensor-gauss-jacobi"
    nodes_radial: int = 128
    nodes_angular: int = 128
    mc_samples: int = 10 ** 6
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown quadrature scheme {self.scheme!r}")
        for name in ("nodes_radial", "nodes_angular", "mc_samples"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class QuadratureResult:
    """Integral estimate; ``stderr`` is zero for deterministic rules."""

    value: float
    stderr: float
    evaluations: int

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class SphereFunction:
    """Integrand on the unit sphere.

    ``fn`` maps an ``(N, n)`` array of unit vectors to ``N`` values.  With
    ``two_coordinate`` set the value may depend on ``eta_1, eta_2`` only,
    which lets quadrature collapse to the unit disk.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    two_coordinate: bool = False

    def __call__(self, eta):
        return np.asarray(self.fn(np.asarray(eta, dtype=float)), dtype=float)


def _check_dim(n):
    if int(n) != n or n < 3:
        raise DomainError(f"sphere integrals need n >= 3, got {n!r}")


# --------------------------------------------------------------------------
# rules


def _jacobi_value_and_slope(N, a, b, x):
    """``P_N^(a,b)(x)`` and its derivative by the three-term recurrence."""
    prev = np.ones_like(x)
    cur = 0.5 * (a - b + (a + b + 2.0) * x)
    for k in range(2, N + 1):
        c = 2.0 * k + a + b
        cur, prev = (((c - 1.0) * (a * a - b * b) + (c - 2.0) * (c - 1.0) * c * x) * cur
                     - 2.0 * (k + a - 1.0) * (k + b - 1.0) * c * prev) / (2.0 * k * (k + a + b) * (c - 2.0)), cur
    c = 2.0 * N + a + b
    slope = (N * ((a - b) - c * x) * cur + 2.0 * (N + a) * (N + b) * prev) / (c * (1.0 - x * x))
    return cur, slope


@lru_cache(maxsize=64)
def _jacobi01(N: int, a: float, b: float):
    """Nodes/weights on [0, 1] for weight ``(1-t)^a t^b``.

    scipy's nodes are polished by Newton steps on the recurrence and the
    weights rebuilt from ``1 / ((1-x^2) P_N'(x)^2)``; this keeps the rule
    exact on high-degree monomials to ~1e-14, where the raw rule drifts to
    1e-11 and worse as N grows.
    """
    x, _ = special.roots_jacobi(N, a, b)
    if N > 1:
        for _ in range(2):
            p, dp = _jacobi_value_and_slope(N, a, b, x)
            x = x - p / dp
        _, dp = _jacobi_value_and_slope(N, a, b, x)
        w = 1.0 / ((1.0 - x * x) * dp * dp)
    else:
        w = np.ones(1)
    w *= math.exp(special.betaln(a + 1.0, b + 1.0)) / math.fsum(w.tolist())
    return (1.0 + x) / 2.0, w


def _disk_rule(n, nr, nt):
    """Rule for the two-coordinate marginal of the normalised sphere measure.

    Polar coordinates with ``w = r^2``; the radial weight ``(1-w)^((n-4)/2)``
    is absorbed into Gauss-Jacobi, the angle uses the trapezoid rule.
    """
    w, wr = _jacobi01(nr, (n - 4) / 2.0, 0.0)
    theta = 2.0 * np.pi * np.arange(nt) / nt
    r = np.sqrt(w)
    u = (r[:, None] * np.cos(theta)[None, :]).ravel()
    v = (r[:, None] * np.sin(theta)[None, :]).ravel()
    # c_n = (n-2)/(2 pi); r dr = dw/2; trapezoid weight 2 pi / nt
    weights = np.repeat(wr, nt) * ((n - 2) / 2.0 / nt)
    return u, v, weights


def _lift(u, v, n):
    """Unit vectors with the given first two coordinates."""
    eta = np.zeros((u.size, n))
    eta[:, 0], eta[:, 1] = u, v
    eta[:, 2] = np.sqrt(np.clip(1.0 - u * u - v * v, 0.0, None))
    return eta


def _sphere_product_rule(n, nr, nt):
    """Product rule on ``S^(n-1)``: ``eta = (t, sqrt(1-t^2) xi)`` recursively."""
    if n == 2:
        theta = 2.0 * np.pi * np.arange(nt) / nt
        return np.stack([np.cos(theta), np.sin(theta)], axis=1), np.full(nt, 1.0 / nt)
    a = (n - 3) / 2.0
    t, wt = _jacobi01(nr, a, a)
    t = 2.0 * t - 1.0
    wt = wt / wt.sum()
    sub, wsub = _sphere_product_rule(n - 1, nr, nt)
    rad = np.sqrt(1.0 - t * t)
    pts = np.concatenate([t.repeat(sub.shape[0])[:, None],
                          (rad[:, None, None] * sub[None, :, :]).reshape(-1, n - 1)], axis=1)
    return pts, np.outer(wt, wsub).ravel()


def _spot_check_two_coordinate(f: SphereFunction, n: int, seed: int):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5E7]))
    eta = rng.standard_normal((8, n))
    eta /= np.linalg.norm(eta, axis=1, keepdims=True)
    other = eta.copy()
    tail = rng.standard_normal((8, n - 2))
    tail *= (np.linalg.norm(eta[:, 2:], axis=1) / np.linalg.norm(tail, axis=1))[:, None]
    other[:, 2:] = tail
    a, b = f(eta), f(other)
    if not np.allclose(a, b, rtol=1e-12, atol=1e-300):
        raise DomainError("integrand declared two-coordinate depends on eta_3..eta_n")


def sphere_monte_carlo(f: SphereFunction, n: int, samples: int, seed: int) -> QuadratureResult:
    """Mean of ``f`` over uniform sphere points (normalised Gaussians).

    Samples come in fixed-size batches, each with its own child stream of
    ``SeedSequence(seed)``, so the estimate does not depend on how batches
    are scheduled.
    """
    _check_dim(n)
    nbatch = -(-samples // _MC_BATCH)
    children = np.random.SeedSequence(seed).spawn(nbatch)
    total, total_sq = [], []
    for i, child in enumerate(children):
        size = min(_MC_BATCH, samples - i * _MC_BATCH)
        g = np.random.default_rng(child).standard_normal((size, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        vals = f(g)
        total.append(math.fsum(vals.tolist()))
        total_sq.append(math.fsum((vals * vals).tolist()))
    mean = math.fsum(total) / samples
    var = max(math.fsum(total_sq) / samples - mean * mean, 0.0)
    err = math.sqrt(var / (samples - 1)) if samples > 1 else math.inf
    return QuadratureResult(mean, err, samples)


def sphere_quadrature(f: SphereFunction, n: int, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Integral of ``f`` against normalised surface measure on ``S^(n-1)``.

    Two-coordinate integrands use the disk rule.  General integrands use a
    full product rule while it has at most ``2^22`` nodes and Monte Carlo
    beyond that; check ``stderr`` to see which one ran.
    """
    _check_dim(n)
    spec = spec or QuadratureSpec()
    if spec.scheme == "monte-carlo":
        return sphere_monte_carlo(f, n, spec.mc_samples, spec.seed)
    if f.two_coordinate:
        _spot_check_two_coordinate(f, n, spec.seed)
        u, v, w = _disk_rule(n, spec.nodes_radial, spec.nodes_angular)
        vals = f(_lift(u, v, n))
    elif spec.nodes_radial ** (n - 2) * spec.nodes_angular > _PRODUCT_RULE_MAX:
        # the full product rule grows like nodes^(n-1); past the budget, sample instead
        return sphere_monte_carlo(f, n, spec.mc_samples, spec.seed)
    else:
        eta, w = _sphere_product_rule(n, spec.nodes_radial, spec.nodes_angular)
        vals = f(eta)
    return QuadratureResult(math.fsum((w * vals).tolist()), 0.0, w.size)


# --------------------------------------------------------------------------
# kernel integrals


def _normal_form(x: BallPoint, y: BallPoint):
    """``(a, b, c)`` with ``x -> a e_1`` and ``y -> b e_1 + c e_2`` under a rotation."""
    a = x.norm
    b = x.dot(y) / a if a > 0.0 else 0.0
    c = math.sqrt(max(y.norm_sq - b * b, 0.0))
    return a, b, c


def pair_integrand(x: BallPoint, y: BallPoint, alpha: float, beta: float,
                   rotate: bool = True) -> SphereFunction:
    """``|x-eta|^(-2(alpha-1)) |y-eta|^(-2(beta-1))``, rotated to normal form unless told not to."""
    if rotate:
        a, b, c = _normal_form(x, y)
        hx, hy = 1.0 + x.norm_sq, 1.0 + y.norm_sq

        def fn(eta):
            e1, e2 = eta[:, 0], eta[:, 1]
            return ((hx - 2.0 * a * e1) ** (1.0 - alpha)
                    * (hy - 2.0 * b * e1 - 2.0 * c * e2) ** (1.0 - beta))

        return SphereFunction(fn, two_coordinate=True)
    xa, ya = x.array, y.array

    def raw(eta):
        dx = np.sum((eta - xa) ** 2, axis=1)
        dy = np.sum((eta - ya) ** 2, axis=1)
        return dx ** (1.0 - alpha) * dy ** (1.0 - beta)

    return SphereFunction(raw)


def pair_integral_quadrature(x, y, alpha: float, beta: float, n: int,
                             spec: QuadratureSpec | None = None) -> QuadratureResult:
    if not (alpha > 1.0 and beta > 1.0):
        raise DomainError(f"need alpha, beta > 1, got alpha = {alpha}, beta = {beta}")
    x, y = as_point(x, n), as_point(y, n)
    return sphere_quadrature(pair_integrand(x, y, alpha, beta), n, spec)


def szego_quadrature(x, y, n: int, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Szegő kernel as the sphere integral of a product of two Poisson kernels."""
    x, y = as_point(x, n), as_point(y, n)
    raw = pair_integral_quadrature(x, y, float(n), float(n), n, spec)
    pre = math.exp((n - 1) * (math.log1p(-x.norm_sq) + math.log1p(-y.norm_sq)))
    return QuadratureResult(raw.value * pre, raw.stderr * pre, raw.evaluations)


# --------------------------------------------------------------------------
# I_m(s)

_IM_MAX_NODES = 1 << 13
# scipy's hyp2f1(m, 1-n/2; m+n/2; t) loses accuracy near t = 1 beyond this
# degree (checked against extended precision; see the test suite)
IM_MAX_DEGREE = 128


def _im_integrand(m, n, t):
    """``t^m S_m(t)^2`` with the Pochhammer ratio kept in log space."""
    log_lead = special.gammaln(n - 1.0 + m) - special.gammaln(n - 1.0) \
        - special.gammaln(n / 2.0 + m) + special.gammaln(n / 2.0)
    f = special.hyp2f1(m, 1.0 - n / 2.0, m + n / 2.0, t)
    return np.exp(m * np.log(t) + 2.0 * log_lead) * f * f


def i_m_quadrature(m: int, params: KernelParams, spec: QuadratureSpec | None = None) -> float:
    """``I_m(s)`` by Gauss-Jacobi quadrature with node doubling.

    The weight ``(1-t)^s t^(n/2-1)`` is built into the rule, whose weights
    are then divided by their sum; this realises the Beta normalisation
    exactly.  Starts from ``spec.nodes_radial`` nodes and doubles until two
    successive values agree to 1e-12.
    """
    if int(m) != m or m < 0:
        raise DomainError("m must be a non-negative integer")
    if m > IM_MAX_DEGREE:
        raise DomainError(f"I_m is only available for m <= {IM_MAX_DEGREE}")
    spec = spec or QuadratureSpec()
    n, s = params.n, params.s
    N = max(spec.nodes_radial, 8)
    prev = None
    while N <= _IM_MAX_NODES:
        t, w = _jacobi01(N, s, n / 2.0 - 1.0)
        vals = _im_integrand(m, n, t)
        cur = math.fsum((w * vals).tolist()) / math.fsum(w.tolist())
        if prev is not None and abs(cur - prev) <= 1e-12 * abs(cur):
            return cur
        prev, N = cur, 2 * N
    raise NonConvergence(f"I_{m}({s}) did not settle to 1e-12 with {_IM_MAX_NODES} nodes")


# --------------------------------------------------------------------------
# hyperbolic Laplacian by finite differences


def hharmonicity_residual(f: Callable[[np.ndarray], float], x, n: int, h: float,
                          coeff: int | None = None) -> float:
    """Central-difference estimate of ``(1-|x|^2)[(1-|x|^2) Lap f + 2c <x, grad f>]``.

    ``coeff`` is ``c``; the default is ``n - 2``.  The stencil is second order.
    """
    if not h > 0:
        raise DomainError("step h must be positive")
    c = n - 2 if coeff is None else coeff
    if c not in (n - 1, n - 2):
        raise DomainError(f"coefficient must be n-1 or n-2, got {coeff}")
    x = as_point(x, n)
    if x.norm + 2.0 * h >= 1.0:
        raise DomainError("x must sit at least 2h inside the ball")
    base = np.array(x.coords)
    f0 = f(base)
    lap, grad = [], []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        fp, fm = f(base + e), f(base - e)
        lap.append((fp - 2.0 * f0 + fm) / (h * h))
        grad.append((fp - fm) / (2.0 * h))
    q = 1.0 - x.norm_sq
    return q * (q * math.fsum(lap) + 2.0 * c * math.fsum(g * xi for g, xi in zip(grad, base)))


def hharmonicity_extrapolated(f: Callable[[np.ndarray], float], x, n: int, h: float,
                              coeff: int | None = None) -> float:
    """Richardson combination ``(4 r(h/2) - r(h)) / 3`` of two residuals.

    Removes the ``h^2`` error term, leaving ``O(h^4)`` plus rounding.
    """
    r1 = hharmonicity_residual(f, x, n, h, coeff)
    r2 = hharmonicity_residual(f, x, n, h / 2.0, coeff)
    return (4.0 * r2 - r1) / 3.0


# --------------------------------------------------------------------------
# spherical harmonics and the zonal reproducing check


def _poly_mul_norm2(p, n):
    out = {}
    for e, c in p.items():
        for i in range(n):
            f = list(e)
            f[i] += 2
            out[tuple(f)] = out.get(tuple(f), 0.0) + c
    return out


def _poly_laplacian(p, n):
    out = {}
    for e, c in p.items():
        for i in range(n):
            if e[i] >= 2:
                f = list(e)
                f[i] -= 2
                out[tuple(f)] = out.get(tuple(f), 0.0) + c * e[i] * (e[i] - 1)
    return {k: v for k, v in out.items() if v != 0.0}


def harmonic_projection(p: dict, n: int, m: int) -> dict:
    """Harmonic part of a homogeneous degree-``m`` polynomial (exponent dict)."""
    out = dict(p)
    lap_j, norm_j = dict(p), 1.0
    for j in range(1, m // 2 + 1):
        lap_j = _poly_laplacian(lap_j, n)
        norm_j *= -2.0 * j * (n + 2 * m - 2 - 2 * j)
        term = lap_j
        for _ in range(j):
            term = _poly_mul_norm2(term, n)
        for e, c in term.items():
            out[e] = out.get(e, 0.0) + c / norm_j
    return {k: v for k, v in out.items() if abs(v) > 1e-15}


def eval_poly(p: dict, eta) -> np.ndarray:
    eta = np.atleast_2d(np.asarray(eta, dtype=float))
    out = np.zeros(eta.shape[0])
    for e, c in p.items():
        out += c * np.prod(eta ** np.array(e), axis=1)
    return out


def spherical_harmonic_basis(n: int, m: int) -> list:
    """A basis of degree-``m`` harmonics: projections of monomials with ``x_n``-degree <= 1."""
    _check_dim(n)
    basis = []

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for k in range(total, -1, -1):
            for rest in compositions(total - k, parts - 1):
                yield (k,) + rest

    for last in (0, 1):
        if last > m:
            continue
        for head in compositions(m - last, n - 1):
            basis.append(harmonic_projection({head + (last,): 1.0}, n, m))
    return basis


def zonal_reproducing_check(m: int, p: dict, x, n: int,
                            spec: QuadratureSpec | None = None) -> float:
    """``|integral of Z_m(x, eta) p(eta) d sigma - p(x)|`` for a unit vector ``x``."""
    from .hypergeom import zonal

    _check_dim(n)
    xv = np.asarray(x, dtype=float)
    if xv.shape != (n,) or abs(float(xv @ xv) - 1.0) > 1e-12:
        raise DomainError("x must be a unit vector in R^n")

    def fn(eta):
        return zonal(m, xv, eta, n) * eval_poly(p, eta)

    q = sphere_quadrature(SphereFunction(fn), n, spec)
    return abs(q.value - float(eval_poly(p, xv)[0]))
