"""Real hypergeometric-type series and the polynomials built on them.

Every infinite sum returns an :class:`EvalResult`.  Single-index series stop
once three consecutive terms fall below tolerance and a ratio bound on the
tail agrees; multi-index series (Appell ``F1``, Exton ``X9``) are summed in
shells of fixed total degree; each shell is reduced with compensated
summation and derived from the previous shell by Pochhammer ratios, never
recomputed from scratch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, NonConvergence
from ._kernels import f1_shells, x9_shells
from .summation import CompensatedSum

# Consecutive below-tolerance terms (or shells) required before stopping.
_QUIET_RUN = 3
# Above this degree the Gegenbauer explicit sum gives way to the recurrence.
_GEGENBAUER_EXPLICIT_MAX = 16
# Shells generated per call into the compiled X9 kernel.
_X9_CHUNK = 32


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation policy shared by all series evaluators.

    ``max_terms`` caps the number of terms of a single-index series and the
    number of shells (total degree) of a multi-index one.
    """

    rel_tol: float = 1e-14
    abs_tol: float = 0.0
    max_terms: int = 1000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if not self.abs_tol >= 0:
            raise DomainError("abs_tol must be non-negative")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError("max_terms must be a positive integer")

    def threshold(self, value: float) -> float:
        return max(self.rel_tol * abs(value), self.abs_tol)


DEFAULT_CONFIG = SeriesConfig()


@dataclass(frozen=True)
class EvalResult:
    value: float
    terms_used: int
    tail_estimate: float
    converged: bool

    def __float__(self):
        return float(self.value)

    def scaled(self, factor: float) -> "EvalResult":
        return EvalResult(self.value * factor, self.terms_used,
                          self.tail_estimate * abs(factor), self.converged)


@dataclass(frozen=True)
class HypergeomParams:
    """Upper parameters ``a_1..a_p``, lower ``b_1..b_q`` and argument ``z``."""

    upper: tuple
    lower: tuple
    argument: float

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(float(a) for a in self.upper))
        object.__setattr__(self, "lower", tuple(float(b) for b in self.lower))
        object.__setattr__(self, "argument", float(self.argument))
        for b in self.lower:
            if is_nonpositive_integer(b):
                raise DomainError(f"lower parameter {b} is zero or a negative integer")


def is_nonpositive_integer(v: float) -> bool:
    return v <= 0 and v == math.floor(v)


# --------------------------------------------------------------------------
# Pochhammer symbols


def pochhammer(a: float, m: int) -> float:
    """Rising factorial ``a (a+1) ... (a+m-1)`` as a direct product."""
    if m < 0:
        raise DomainError("Pochhammer index must be non-negative")
    out = 1.0
    for k in range(m):
        out *= a + k
    return out


def log_pochhammer(a: float, m: int) -> tuple[float, int]:
    """``(log|(a)_m|, sign)``; a vanishing symbol gives ``(-inf, 0)``."""
    if m < 0:
        raise DomainError("Pochhammer index must be non-negative")
    if m == 0:
        return 0.0, 1
    if is_nonpositive_integer(a):
        if m > -a:
            return -math.inf, 0
        # |a (a+1) ... (a+m-1)| = (-a)! / (-a-m)!
        k = int(-a)
        sign = -1 if m % 2 else 1
        return math.lgamma(k + 1) - math.lgamma(k - m + 1), sign
    negatives = 0 if a > 0 else min(m, math.ceil(-a))
    sign = -1 if negatives % 2 else 1
    return math.lgamma(a + m) - math.lgamma(a), sign


def pochhammer_ratio(a: float, b: float, m: int) -> float:
    """``(a)_m / (b)_m`` without forming either symbol."""
    if m <= 256:
        out = 1.0
        for k in range(m):
            if b + k == 0.0:
                raise DomainError(f"({b})_{m} vanishes")
            out *= (a + k) / (b + k)
        return out
    la, sa = log_pochhammer(a, m)
    lb, sb = log_pochhammer(b, m)
    if sb == 0:
        raise DomainError(f"({b})_{m} vanishes")
    if sa == 0:
        return 0.0
    return sa * sb * math.exp(la - lb)


def _log_abs_gamma(x: float) -> tuple[float, int]:
    if is_nonpositive_integer(x):
        return math.inf, 0
    sign = 1 if x > 0 or math.floor(x) % 2 == 0 else -1
    return math.lgamma(x), sign


# --------------------------------------------------------------------------
# single-index series


def _sum_hypergeometric(upper, lower, z, cfg, limit_ratio, terminate_at=None):
    """Sum ``sum_k prod(upper)_k / (prod(lower)_k k!) z^k``.

    With ``terminate_at = N`` the first ``N + 1`` terms are summed exactly and
    nothing else.  Otherwise the ratio bound ``max(current ratio, limit)``
    estimates the tail.
    """
    acc = CompensatedSum(1.0)
    term = 1.0

    def ratio(k):
        r = z / (k + 1)
        for a in upper:
            r *= a + k
        for b in lower:
            r /= b + k
        return r

    if terminate_at is not None:
        for k in range(terminate_at):
            term *= ratio(k)
            acc.add(term)
        return EvalResult(acc.value, terminate_at + 1, 0.0, True)

    quiet = 0
    tail = math.inf
    for k in range(cfg.max_terms - 1):
        term *= ratio(k)
        acc.add(term)
        value = acc.value
        thr = cfg.threshold(value)
        quiet = quiet + 1 if abs(term) <= thr else 0
        rho = max(abs(ratio(k + 1)), limit_ratio)
        tail = abs(term) * rho / (1.0 - rho) if rho < 1.0 else math.inf
        if quiet >= _QUIET_RUN and tail <= thr:
            return EvalResult(value, k + 2, tail, True)
    partial = EvalResult(acc.value, cfg.max_terms, tail, False)
    raise NonConvergence(
        f"hypergeometric series not converged after {cfg.max_terms} terms "
        f"(z = {z!r}, tail ~ {tail:.3g})", partial)


def _termination_index(params: Sequence[float]):
    idx = [int(-a) for a in params if is_nonpositive_integer(a)]
    return min(idx) if idx else None


def gauss_2f1(a: float, b: float, c: float, z: float,
              cfg: SeriesConfig = DEFAULT_CONFIG) -> EvalResult:
    """Gauss hypergeometric function ``2F1(a, b; c; z)`` for real ``z <= 1``.

    Terminating series are summed exactly for any ``z``.  Negative arguments
    go through the Pfaff transformation to ``z/(z-1)`` in ``[0, 1)``; ``z = 1``
    uses Gauss's summation when ``c - a - b > 0``.
    """
    a, b, c, z = float(a), float(b), float(c), float(z)
    stop = _termination_index((a, b))
    if stop is not None:
        if is_nonpositive_integer(c) and -c < stop:
            raise DomainError(f"2F1 lower parameter c = {c} hits zero before termination")
        return _sum_hypergeometric((a, b), (c,), z, cfg, 0.0, terminate_at=stop)
    if is_nonpositive_integer(c):
        raise DomainError(f"2F1 lower parameter c = {c} is a non-positive integer")
    if z == 0.0:
        return EvalResult(1.0, 1, 0.0, True)
    if z < 1.0 and (c == a or c == b):
        # 2F1(a, b; b; z) is the binomial series (1 - z)^(-a)
        return EvalResult((1.0 - z) ** -(b if c == a else a), 1, 0.0, True)
    if z < 0.0:
        w = z / (z - 1.0)
        # pick the Pfaff branch that terminates, if either does
        if is_nonpositive_integer(c - a) and not is_nonpositive_integer(c - b):
            inner = gauss_2f1(c - a, b, c, w, cfg)
            return inner.scaled((1.0 - z) ** (-b))
        inner = gauss_2f1(a, c - b, c, w, cfg)
        return inner.scaled((1.0 - z) ** (-a))
    if z == 1.0:
        if c - a - b <= 0:
            raise DomainError("2F1 at z = 1 diverges unless c - a - b > 0")
        return EvalResult(_gauss_sum(a, b, c), 1, 0.0, True)
    if z > 1.0:
        raise DomainError(f"2F1 argument z = {z} > 1 is outside the supported domain")
    return _sum_hypergeometric((a, b), (c,), z, cfg, z)


def _gauss_sum(a, b, c):
    """Gauss's theorem ``2F1(a, b; c; 1) = G(c) G(c-a-b) / (G(c-a) G(c-b))``."""
    num1, s1 = _log_abs_gamma(c)
    num2, s2 = _log_abs_gamma(c - a - b)
    den1, s3 = _log_abs_gamma(c - a)
    den2, s4 = _log_abs_gamma(c - b)
    if s3 == 0 or s4 == 0:
        return 0.0
    return s1 * s2 * s3 * s4 * math.exp(num1 + num2 - den1 - den2)


def pfq(params: HypergeomParams, cfg: SeriesConfig = DEFAULT_CONFIG) -> EvalResult:
    """Generalized hypergeometric series ``pFq(a; b; z)``."""
    upper, lower, z = params.upper, params.lower, params.argument
    p, q = len(upper), len(lower)
    stop = _termination_index(upper)
    if stop is not None:
        return _sum_hypergeometric(upper, lower, z, cfg, 0.0, terminate_at=stop)
    if z == 0.0:
        return EvalResult(1.0, 1, 0.0, True)
    if p > q + 1:
        raise DomainError(f"{p}F{q} with p > q + 1 diverges for z != 0")
    if p == q + 1:
        if abs(z) >= 1.0:
            raise DomainError(f"{p}F{q} needs |z| < 1, got {z}")
        return _sum_hypergeometric(upper, lower, z, cfg, abs(z))
    return _sum_hypergeometric(upper, lower, z, cfg, 0.0)


# --------------------------------------------------------------------------
# shell-summed multi-index series


class _ShellTracker:
    """Stopping rule for series summed by total degree."""

    def __init__(self, cfg: SeriesConfig, limit_ratio: float = 0.0, start: float = 1.0):
        self.cfg = cfg
        self.limit_ratio = limit_ratio
        self.acc = CompensatedSum(start)
        self.prev_abs = abs(start) or 1.0
        self.quiet = 0
        self.tail = math.inf

    def push(self, shell_sum: float, shell_abs: float) -> bool:
        self.acc.add(shell_sum)
        value = self.acc.value
        thr = self.cfg.threshold(value)
        self.quiet = self.quiet + 1 if shell_abs <= thr else 0
        if shell_abs == 0.0:
            self.tail = 0.0
        else:
            rho = shell_abs / self.prev_abs if self.prev_abs > 0 else math.inf
            rho = max(rho, self.limit_ratio)
            self.tail = shell_abs * rho / (1.0 - rho) if rho < 1.0 else math.inf
        self.prev_abs = shell_abs
        return self.quiet >= _QUIET_RUN and self.tail <= thr

    def result(self, shells: int, converged: bool) -> EvalResult:
        return EvalResult(self.acc.value, shells, self.tail, converged)


def appell_f1(a: float, b1: float, b2: float, c: float, x: float, y: float,
              cfg: SeriesConfig = DEFAULT_CONFIG) -> EvalResult:
    """First Appell function ``F1(a; b1, b2; c; x, y)``."""
    a, b1, b2, c, x, y = map(float, (a, b1, b2, c, x, y))
    if is_nonpositive_integer(c):
        raise DomainError(f"F1 lower parameter c = {c} is a non-positive integer")
    ends_a = is_nonpositive_integer(a)
    if not (abs(x) < 1.0 or ends_a or is_nonpositive_integer(b1)):
        raise DomainError(f"F1 needs |x| < 1, got x = {x}")
    if not (abs(y) < 1.0 or ends_a or is_nonpositive_integer(b2)):
        raise DomainError(f"F1 needs |y| < 1, got y = {y}")
    if y == 0.0:
        return gauss_2f1(a, b1, c, x, cfg)
    if x == 0.0:
        return gauss_2f1(a, b2, c, y, cfg)
    track = _ShellTracker(cfg, min(max(abs(x), abs(y)), 1.0))
    shell = np.ones(1)
    k = 0
    while k < cfg.max_terms - 1:
        count = min(_X9_CHUNK, cfg.max_terms - 1 - k)
        sums, abss, shell = f1_shells(a, b1, b2, c, x, y, k, count, shell)
        for i in range(count):
            if track.push(sums[i], abss[i]):
                return track.result(k + i + 2, True)
        k += count
    partial = track.result(cfg.max_terms, False)
    raise NonConvergence(
        f"Appell F1 not converged after {cfg.max_terms} shells (x = {x}, y = {y})", partial)


def x9_region_ok(x: float, y: float, z: float) -> bool:
    """Strict absolute-convergence region of Exton's ``X9``."""
    ax, az = abs(x), abs(z)
    if not (ax < 0.25 and az < 0.25):
        return False
    return abs(y) < 0.5 * (1.0 + math.sqrt((1.0 - 4.0 * ax) * (1.0 - 4.0 * az)))


def exton_x9(alpha: float, beta: float, gamma: float, x: float, y: float, z: float,
             cfg: SeriesConfig = DEFAULT_CONFIG) -> EvalResult:
    """Exton's triple series ``X9(alpha, beta; gamma; x, y, z)``.

    Terms ``(alpha)_{2p+q} (beta)_{2l+q} / ((gamma)_{p+q+l} p! q! l!) x^p y^q z^l``
    are summed shell by shell in ``k = p + q + l``; see :func:`_kernels.x9_shells`
    for the shell-to-shell update.
    """
    al, be, ga, x, y, z = map(float, (alpha, beta, gamma, x, y, z))
    if is_nonpositive_integer(ga):
        raise DomainError(f"X9 lower parameter gamma = {ga} is a non-positive integer")
    if not x9_region_ok(x, y, z):
        raise DomainError(
            f"(x, y, z) = ({x}, {y}, {z}) outside the X9 region "
            "|x|, |z| < 1/4, |y| < (1 + sqrt((1-4|x|)(1-4|z|)))/2")
    track = _ShellTracker(cfg)
    shell = np.ones((1, 1))
    k = 0
    while k < cfg.max_terms - 1:
        count = min(_X9_CHUNK, cfg.max_terms - 1 - k)
        sums, abss, shell = x9_shells(al, be, ga, x, y, z, k, count, shell)
        for i in range(count):
            if track.push(sums[i], abss[i]):
                return track.result(k + i + 2, True)
        k += count
    partial = track.result(cfg.max_terms, False)
    raise NonConvergence(
        f"Exton X9 not converged after {cfg.max_terms} shells "
        f"(x = {x}, y = {y}, z = {z})", partial)


# --------------------------------------------------------------------------
# Gegenbauer polynomials, zonal harmonics, radial factor


def gegenbauer(m: int, lam: float, t):
    """Gegenbauer polynomial ``C_m^lam(t)``; ``t`` may be an array.

    Degrees up to 16 use the explicit finite sum, higher degrees the
    three-term recurrence.
    """
    if m < 0:
        raise DomainError("degree must be non-negative")
    if not lam > 0:
        raise DomainError(f"Gegenbauer parameter must be positive, got {lam}")
    t = np.asarray(t, dtype=float)
    return _gegenbauer_homogeneous(m, lam, t, np.ones_like(t))


def _gegenbauer_homogeneous(m, lam, u, r2):
    """``r^m C_m^lam(u / r)`` written without dividing by ``r = sqrt(r2)``."""
    if m <= _GEGENBAUER_EXPLICIT_MAX:
        # alternating terms grow to ~1e9 near |t| = 1, so accumulate in long double
        ld = np.longdouble
        two_u, r2l = 2 * np.asarray(u, dtype=ld), np.asarray(r2, dtype=ld)
        out = np.zeros(np.broadcast(u, r2).shape, dtype=ld)
        lam_l = ld(lam)
        for k in range(m // 2 + 1):
            coef = np.prod(lam_l + np.arange(m - k, dtype=ld)) / (ld(math.factorial(k)) * ld(math.factorial(m - 2 * k)))
            out = out + (-1) ** k * coef * two_u ** (m - 2 * k) * r2l ** k
        out = out.astype(float)
        return out if out.ndim else float(out)
    prev = np.ones(np.broadcast(u, r2).shape)
    cur = 2.0 * lam * u * prev
    for j in range(2, m + 1):
        prev, cur = cur, (2.0 * (j + lam - 1.0) * u * cur - (j + 2.0 * lam - 2.0) * r2 * prev) / j
    return cur if cur.ndim else float(cur)


def _coords(v):
    if hasattr(v, "coords"):
        return np.array(v.coords)
    return np.asarray(v, dtype=float)


def zonal(m: int, x, y, n: int):
    """Zonal harmonic ``Z_m(x, y)`` on ``R^n``, homogeneous of degree ``m`` in each argument.

    ``x`` and ``y`` are BallPoints or coordinate arrays; either may carry a
    leading batch axis (e.g. quadrature nodes on the sphere).
    """
    if n < 3:
        raise DomainError("zonal harmonics need n >= 3")
    if m < 0:
        raise DomainError("degree must be non-negative")
    xc, yc = _coords(x), _coords(y)
    if xc.shape[-1] != n or yc.shape[-1] != n:
        raise DomainError(f"points must have {n} coordinates")
    u = np.sum(xc * yc, axis=-1)
    r2 = np.sum(xc * xc, axis=-1) * np.sum(yc * yc, axis=-1)
    if m == 0:
        out = np.ones(np.shape(u))
        return out if out.ndim else 1.0
    lam = (n - 2) / 2.0
    scale = (n - 2 + 2 * m) / (n - 2)
    out = scale * np.asarray(_gegenbauer_homogeneous(m, lam, u, r2))
    # degree-m homogeneity: exactly zero when either argument is the origin
    out = np.where(r2 == 0.0, 0.0, out)
    return out if out.ndim else float(out)


def s_m(m: int, n: int, t: float, cfg: SeriesConfig = DEFAULT_CONFIG) -> EvalResult:
    """Radial factor ``S_m(t) = (n-1)_m / (n/2)_m * 2F1(m, 1 - n/2; m + n/2; t)``."""
    if n < 3:
        raise DomainError("S_m needs n >= 3")
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"S_m is defined for 0 <= t <= 1, got {t}")
    lead = pochhammer_ratio(n - 1.0, n / 2.0, m)
    return gauss_2f1(m, 1.0 - n / 2.0, m + n / 2.0, t, cfg).scaled(lead)
