"""Hyperbolic Poisson, Szegő and weighted Bergman kernels on the unit ball.

Every representation takes :class:`BallPoint` arguments and returns an
:class:`EvalResult`; the only exceptions are :func:`poisson_h` and
:func:`szego_diagonal`, which are closed forms and return plain floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, NonConvergence
from .geometry import BallPoint, KernelParams, as_point
from .hypergeom import (DEFAULT_CONFIG, EvalResult, SeriesConfig, _ShellTracker,
                        appell_f1, exton_x9, gauss_2f1, pochhammer, s_m, zonal)
from .oracle import IM_MAX_DEGREE, QuadratureSpec, i_m_quadrature
from .summation import CompensatedSum, compensated_sum_axis

REPRESENTATIONS = ("x9", "finite-sum", "radial-f1", "diagonal", "auto")

# Empirical radius inside which the Bergman triple series is trusted.
TRIPLE_SERIES_RADIUS = 0.6
# Beyond these the (1 - |x|^2)^(n-1) prefactors are formed in log space.
_LOG_PREFACTOR_DIM = 10
_LOG_PREFACTOR_RADIUS = 0.9


def _use_log(n: int, *points: BallPoint) -> bool:
    return n >= _LOG_PREFACTOR_DIM or any(p.norm > _LOG_PREFACTOR_RADIUS for p in points)


def _power(logs, bases, exponent, use_log):
    """``prod(bases) ** exponent``; ``logs`` are the matching ``log(base)`` values."""
    if use_log:
        return math.exp(exponent * math.fsum(logs))
    return math.prod(bases) ** exponent


def poisson_h(eta, x, n: int):
    """Hyperbolic Poisson kernel ``(1-|x|^2)^(n-1) / |x-eta|^(2(n-1))``.

    ``eta`` is a unit vector or an ``(N, n)`` array of them.
    """
    x = as_point(x, n)
    eta = np.asarray(eta, dtype=float)
    if eta.shape[-1] != n:
        raise DomainError(f"eta must have {n} coordinates")
    if not np.allclose(np.sum(eta * eta, axis=-1), 1.0, rtol=0.0, atol=1e-12):
        raise DomainError("eta must lie on the unit sphere")
    d2 = np.sum((x.array - eta) ** 2, axis=-1)
    out = ((1.0 - x.norm_sq) / d2) ** (n - 1)
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# Szegő kernel


@dataclass(frozen=True)
class ExtonArgs:
    """Arguments of ``X9`` and the kernel prefactor for a pair of points."""

    X: float
    Y: float
    Z: float
    prefactor: float

    @classmethod
    def of(cls, x: BallPoint, y: BallPoint, n: int) -> "ExtonArgs":
        px, py = 1.0 + x.norm_sq, 1.0 + y.norm_sq
        X = x.norm_sq / (px * px)
        Z = y.norm_sq / (py * py)
        Y = 2.0 * x.dot(y) / (px * py)
        mx, my = 1.0 - x.norm_sq, 1.0 - y.norm_sq
        logs = (math.log1p(-x.norm_sq), math.log1p(-y.norm_sq),
                -math.log1p(x.norm_sq), -math.log1p(y.norm_sq))
        pre = _power(logs, (mx, my, 1.0 / px, 1.0 / py), n - 1, _use_log(n, x, y))
        return cls(X, Y, Z, pre)


def _pair(x, y, params: KernelParams):
    n = params.n
    return as_point(x, n), as_point(y, n)


def pair_integral_x9(x, y, alpha: float, beta: float, params: KernelParams,
                     cfg: SeriesConfig = DEFAULT_CONFIG) -> EvalResult:
    """Closed form of the sphere average of ``|x-eta|^(-2(alpha-1)) |y-eta|^(-2(beta-1))``."""
    if not (alpha > 1.0 and beta > 1.0):
        raise DomainError(f"need alpha, beta > 1, got alpha = {alpha}, beta = {beta}")
    x, y = _pair(x, y, params)
    args = ExtonArgs.of(x, y, params.n)
    logs = ((1.0 - alpha) * math.log1p(x.norm_sq), (1.0 - beta) * math.log1p(y.norm_sq))
    pre = math.exp(math.fsum(logs))
    return exton_x9(alpha - 1.0, beta - 1.0, params.n / 2.0,
                    args.X, args.Y, args.Z, cfg).scaled(pre)


def szego_x9(x, y, params: KernelParams, cfg: SeriesConfig = DEFAULT_CONFIG) -> EvalResult:
    """Szegő kernel through the ``X9`` form."""
    x, y = _pair(x, y, params)
    n = params.n
    args = ExtonArgs.of(x, y, n)
    return exton_x9(n - 1.0, n - 1.0, n / 2.0, args.X, args.Y, args.Z, cfg).scaled(args.prefactor)


def szego_finite_sum(x, y, params: KernelParams,
                     cfg: SeriesConfig = DEFAULT_CONFIG) -> EvalResult:
    """Szegő kernel as a finite double sum of ``2F1`` at a non-positive argument.

    ``(1-n)_{p+l}`` vanishes for ``p + l >= n``, so only ``p + l <= n - 1``
    contributes.  ``terms_used`` counts those ``(p, l)`` pairs; the tail
    estimate collects the tails of the inner ``2F1`` series.
    """
    x, y = _pair(x, y, params)
    n = params.n
    hx, hy = 1.0 - x.norm_sq, 1.0 - y.norm_sq
    u = x.dist_sq(y) / (hx * hy)
    wx, wy = -x.norm_sq / hx, -y.norm_sq / hy
    half = n / 2.0
    acc = CompensatedSum()
    tail = 0.0
    count = 0
    for p in range(n):
        cp = pochhammer(n - 1.0, p) / math.factorial(p) * wx ** p
        for l in range(n - p):
            coef = (pochhammer(1.0 - n, p + l) / pochhammer(half, p + l)
                    * cp * pochhammer(n - 1.0, l) / math.factorial(l) * wy ** l)
            inner = gauss_2f1(1.0 + p - half, 1.0 + l - half, half + p + l, -u, cfg)
            acc.add(coef * inner.value)
            tail += abs(coef) * inner.tail_estimate
            count += 1
    if _use_log(n, x, y):
        pre = math.exp((2.0 - 1.5 * n) * math.log1p(u))
    else:
        pre = (1.0 + u) ** (2.0 - 1.5 * n)
    return EvalResult(acc.value * pre, count, tail * pre, True)


def szego_radial_f1(x, lam: float, params: KernelParams,
                    cfg: SeriesConfig = DEFAULT_CONFIG) -> EvalResult:
    """Szegő kernel at ``(x, lam x)`` through an Appell ``F1``."""
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    x = as_point(x, params.n)
    y = x.scaled(lam)
    n = params.n
    rx, ry = x.norm, y.norm
    logs = (math.log1p(-x.norm_sq), math.log1p(-y.norm_sq),
            -2.0 * math.log1p(rx), -2.0 * math.log1p(ry))
    bases = (1.0 - x.norm_sq, 1.0 - y.norm_sq, (1.0 + rx) ** -2, (1.0 + ry) ** -2)
    pre = _power(logs, bases, n - 1, _use_log(n, x, y))
    tx, ty = 4.0 * rx / (1.0 + rx) ** 2, 4.0 * ry / (1.0 + ry) ** 2
    return appell_f1((n - 1) / 2.0, n - 1.0, n - 1.0, n - 1.0, tx, ty, cfg).scaled(pre)


def szego_diagonal(x, params: KernelParams) -> float:
    """``K_h(x, x)`` from a terminating ``2F1`` with at most ``n`` terms."""
    x = as_point(x, params.n)
    n = params.n
    poly = gauss_2f1(2.0 - 1.5 * n, 1.0 - n, n / 2.0, x.norm_sq).value
    if _use_log(n, x):
        return poly * math.exp(-(n - 1) * math.log1p(-x.norm_sq))
    return poly / (1.0 - x.norm_sq) ** (n - 1)


def _collinear_ratio(x: BallPoint, y: BallPoint):
    """``(base, lam)`` with ``small = lam * base`` if x, y point the same way, else None."""
    if x.is_origin():
        return y, 0.0
    if y.is_origin():
        return x, 0.0
    d = x.dot(y)
    if d <= 0.0 or abs(d * d - x.norm_sq * y.norm_sq) > 1e-14 * x.norm_sq * y.norm_sq:
        return None
    if y.norm_sq <= x.norm_sq:
        return x, min(y.norm / x.norm, 1.0)
    return y, min(x.norm / y.norm, 1.0)


def szego_labelled(x, y, params: KernelParams, cfg: SeriesConfig = DEFAULT_CONFIG,
                   rep: str = "auto") -> tuple[str, EvalResult]:
    """Evaluate the Szegő kernel and report which representation produced it."""
    x, y = _pair(x, y, params)
    if rep not in REPRESENTATIONS:
        raise DomainError(f"unknown representation {rep!r}; choose from {REPRESENTATIONS}")
    if rep == "x9":
        return rep, szego_x9(x, y, params, cfg)
    if rep == "finite-sum":
        return rep, szego_finite_sum(x, y, params, cfg)
    if rep == "diagonal":
        if x.coords != y.coords:
            raise DomainError("the diagonal representation needs x = y")
        return rep, EvalResult(szego_diagonal(x, params), params.n, 0.0, True)
    if rep == "radial-f1":
        radial = _collinear_ratio(x, y)
        if radial is None:
            raise DomainError("the radial-f1 representation needs y = lambda x with 0 <= lambda <= 1")
        return rep, szego_radial_f1(radial[0], radial[1], params, cfg)

    if x.coords == y.coords:
        return "diagonal", EvalResult(szego_diagonal(x, params), params.n, 0.0, True)
    if _collinear_ratio(x, y) is not None:
        try:
            return szego_labelled(x, y, params, cfg, "radial-f1")
        except NonConvergence:
            pass
    try:
        return "finite-sum", szego_finite_sum(x, y, params, cfg)
    except NonConvergence:
        return "x9", szego_x9(x, y, params, cfg)


def szego(x, y, params: KernelParams, cfg: SeriesConfig = DEFAULT_CONFIG,
          rep: str = "auto") -> EvalResult:
    """Szegő kernel ``K_h(x, y)`` through the chosen representation.

    ``auto`` tries diagonal, then radial-f1, then finite-sum, then x9,
    taking the first that applies and converges.
    """
    return szego_labelled(x, y, params, cfg, rep)[1]


# --------------------------------------------------------------------------
# the I_m(s) table


@dataclass(frozen=True)
class ImTable:
    """``I_m(s)`` for ``m = 0..M`` at dimension ``n``.  Immutable."""

    n: int
    s: float
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise DomainError("an I_m table needs at least I_0")
        if not all(v > 0.0 and math.isfinite(v) for v in vals):
            raise DomainError("I_m(s) must be finite and strictly positive")
        object.__setattr__(self, "values", vals)

    @property
    def M(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, m: int) -> float:
        return self.values[m]

    @classmethod
    def constant(cls, n: int, s: float, M: int, value: float = 1.0) -> "ImTable":
        """A table with every entry equal to ``value``; ``1`` gives the Hardy inner product."""
        return cls(int(n), float(s), (float(value),) * (M + 1))

    def is_constant(self) -> bool:
        return len(set(self.values)) == 1


@lru_cache(maxsize=4096)
def _im_entry(m: int, params: KernelParams, spec: QuadratureSpec) -> float:
    return i_m_quadrature(m, params, spec)


def compute_im_table(params: KernelParams, M: int,
                     spec: QuadratureSpec | None = None) -> ImTable:
    """``I_m(s)`` for ``m <= M`` by Gauss-Jacobi quadrature (entries cached)."""
    if M < 0:
        raise DomainError("table depth must be non-negative")
    spec = spec or QuadratureSpec()
    return ImTable(params.n, params.s, tuple(_im_entry(m, params, spec) for m in range(M + 1)))


def _check_table(params: KernelParams, im: ImTable):
    if im.n != params.n:
        raise DomainError(f"I_m table is for n = {im.n}, kernel has n = {params.n}")


# --------------------------------------------------------------------------
# Bergman kernel: zonal series


def bergman_zonal_series(x, y, params: KernelParams, im: ImTable,
                         cfg: SeriesConfig = DEFAULT_CONFIG) -> EvalResult:
    """``sum_m S_m(|x|^2) S_m(|y|^2) Z_m(x, y) / I_m(s)``.

    Tail control runs on the majorant ``|S_m S_m| dim_m (|x||y|)^m / I_m``,
    which bounds every term because ``|Z_m(x, y)| <= dim_m |x|^m |y|^m``.
    """
    x, y = _pair(x, y, params)
    _check_table(params, im)
    n = params.n
    if x.is_origin() or y.is_origin():
        return EvalResult(1.0 / im[0], 1, 0.0, True)
    rho = x.norm * y.norm
    acc = CompensatedSum()
    quiet = 0
    prev = None
    tail = math.inf
    thr = 0.0
    dim_m = 1.0
    for m in range(im.M + 1):
        if m > 0:
            # dim of degree-m harmonics: (n-2+2m)/(n-2) * (n-2)_m / m!
            dim_m = (n - 2 + 2 * m) / (n - 2) * pochhammer(n - 2.0, m) / math.factorial(m)
        radial = s_m(m, n, x.norm_sq, cfg).value * s_m(m, n, y.norm_sq, cfg).value / im[m]
        acc.add(radial * zonal(m, x, y, n))
        bound = abs(radial) * dim_m * rho ** m
        thr = cfg.threshold(acc.value)
        quiet = quiet + 1 if bound <= thr else 0
        r = max(rho, bound / prev) if prev else rho
        tail = bound * r / (1.0 - r) if r < 1.0 else math.inf
        prev = bound
        if m >= 1 and quiet >= 3 and tail <= thr:
            return EvalResult(acc.value, m + 1, tail, True)
    # shells still needed, from the geometric decay of the majorant
    need = im.M + 3
    if 0.0 < prev and thr > 0.0 and rho < 1.0:
        need += max(0, math.ceil(math.log(thr / prev) / math.log(rho)))
    partial = EvalResult(acc.value, im.M + 1, tail, False)
    raise NonConvergence(
        f"zonal Bergman series needs more than the {im.M + 1} I_m values available",
        partial, required_depth=need)


# --------------------------------------------------------------------------
# Bergman kernel: triple series


def _log_leading(n, alpha, beta, gamma):
    """log of the ``j = 0`` factor of ``A`` without ``I_gamma`` (arrays allowed in alpha, beta)."""
    from scipy.special import gammaln

    half, lam = n / 2.0, (n - 2) / 2.0
    return (gammaln(n - 1 + 2 * alpha + gamma) + gammaln(n - 1 + 2 * beta + gamma)
            - 2 * gammaln(n - 1.0) + 2 * gammaln(half)
            - gammaln(half + alpha + gamma) - gammaln(half + beta + gamma)
            - gammaln(alpha + 1.0) - gammaln(beta + 1.0) - gammaln(gamma + 1.0)
            + gammaln(lam + gamma) - gammaln(lam) + math.log((n - 2 + 2 * gamma) / (n - 2)))


def bergman_coeff(alpha: int, beta: int, gamma: int, params: KernelParams,
                  im: ImTable) -> float:
    """``A_{alpha, beta, gamma}``: a finite alternating sum over ``j <= min(alpha, beta)``.

    Each term is formed in log space with its sign and the terms are added
    exactly.
    """
    for v in (alpha, beta, gamma):
        if int(v) != v or v < 0:
            raise DomainError("coefficient indices must be non-negative integers")
    _check_table(params, im)
    alpha, beta, gamma = int(alpha), int(beta), int(gamma)
    J = min(alpha, beta)
    if im.M < gamma + 2 * J:
        raise DomainError(f"A_({alpha},{beta},{gamma}) needs I_m up to m = {gamma + 2 * J}, "
                          f"table stops at {im.M}")
    n = params.n
    lam, half = (n - 2) / 2.0, n / 2.0
    lg = math.lgamma
    fixed = (lg(n - 1 + 2 * alpha + gamma) + lg(n - 1 + 2 * beta + gamma) - 2 * lg(n - 1)
             - lg(gamma + 1) - math.log(n - 2))
    terms = []
    for j in range(J + 1):
        log_t = (fixed + lg(lam + gamma + j) - lg(lam) + math.log(n - 2 + 2 * (gamma + 2 * j))
                 - math.log(im[gamma + 2 * j]) - lg(j + 1)
                 - lg(half + alpha + gamma + j) - lg(half + beta + gamma + j) + 2 * lg(half)
                 - lg(alpha - j + 1) - lg(beta - j + 1))
        # (-1)^j (-alpha)_j (-beta)_j / (alpha! beta!) = (-1)^j / ((alpha-j)! (beta-j)!)
        terms.append((-1) ** j * math.exp(log_t))
    return math.fsum(terms)


@lru_cache(maxsize=32)
def bergman_coeff_table(params: KernelParams, im: ImTable, K: int) -> np.ndarray:
    """Dense ``A[alpha, beta, gamma]`` for ``alpha + beta + gamma <= K`` (zero elsewhere).

    For fixed ``gamma`` the ``j = 0`` factor ``C`` (without ``I_g``) is pulled
    out: ``A = C / I_g * sum_j (-1)^j w_j R_a[j] R_b[j]`` where
    ``R_a[j] = prod_{i<j} (a-i)/(n/2+a+g+i)`` lies in ``[0, 1]`` and
    ``w_j = (I_g / I_{g+2j}) ((n-2)/2+g)_j / j! (n-2+2g+4j)/(n-2+2g)``.
    Only ``C`` passes through log space; the alternating sums are
    compensated.
    """
    _check_table(params, im)
    if im.M < K:
        raise DomainError(f"coefficient table to degree {K} needs I_m up to m = {K}")
    n = params.n
    lam, half = (n - 2) / 2.0, n / 2.0
    A = np.zeros((K + 1, K + 1, K + 1))
    I = np.array(im.values)
    for g in range(K + 1):
        L = K - g
        a = np.arange(L + 1, dtype=float)
        grid_a, grid_b = np.meshgrid(a, a, indexing="ij")
        C = np.exp(_log_leading(n, grid_a, grid_b, g))
        C[grid_a + grid_b > L] = 0.0
        J = L // 2
        j = np.arange(J + 1, dtype=float)
        # R[a, j] via cumulative products; zero once j > a
        steps = (a[:, None] - j[None, :-1]) / (half + a[:, None] + g + j[None, :-1])
        R = np.ones((L + 1, J + 1))
        if J:
            R[:, 1:] = np.cumprod(np.clip(steps, 0.0, None), axis=1)
        w = np.ones(J + 1)
        if J:
            ratio = (lam + g + j[:-1]) / (j[:-1] + 1.0)
            w[1:] = np.cumprod(ratio)
        w *= (n - 2 + 2 * g + 4 * j) / (n - 2 + 2 * g) * I[g] / I[g + 2 * j.astype(int)]
        w *= (-1.0) ** j
        terms = w[None, None, :] * R[:, None, :] * R[None, :, :]
        S = compensated_sum_axis(terms, axis=-1)
        A[:L + 1, :L + 1, g] = C * S / I[g]
    return A


@lru_cache(maxsize=64)
def _shell_order(K: int):
    """Flat indices of a ``(K+1)^3`` array grouped by ``alpha + beta + gamma``."""
    idx = np.indices((K + 1,) * 3).reshape(3, -1)
    deg = idx.sum(axis=0)
    keep = np.flatnonzero(deg <= K)
    order = keep[np.argsort(deg[keep], kind="stable")]
    bounds = np.searchsorted(deg[order], np.arange(K + 2))
    return order, bounds


def bergman_triple_series(x, y, params: KernelParams, im: ImTable,
                          cfg: SeriesConfig = DEFAULT_CONFIG) -> EvalResult:
    """Bergman kernel as the prefactored triple power series in ``X, Y, Z``.

    Summed by total degree ``alpha + beta + gamma``; the table depth bounds
    the number of shells.  Radii above :data:`TRIPLE_SERIES_RADIUS` are
    rejected because convergence there has not been established.
    """
    x, y = _pair(x, y, params)
    _check_table(params, im)
    if max(x.norm, y.norm) > TRIPLE_SERIES_RADIUS:
        raise DomainError(f"triple series guarded to |x|, |y| <= {TRIPLE_SERIES_RADIUS}")
    args = ExtonArgs.of(x, y, params.n)
    K = min(im.M, cfg.max_terms - 1)
    A = bergman_coeff_table(params, im, K)
    k = np.arange(K + 1, dtype=float)
    powers = (args.X ** k)[:, None, None] * (args.Z ** k)[None, :, None] * (args.Y ** k)[None, None, :]
    flat = (A * powers).ravel()
    order, bounds = _shell_order(K)
    track = _ShellTracker(cfg, start=flat[0])
    for d in range(1, K + 1):
        shell = flat[order[bounds[d]:bounds[d + 1]]]
        if track.push(math.fsum(shell.tolist()), float(np.abs(shell).sum())):
            return track.result(d + 1, True).scaled(args.prefactor)
    partial = track.result(K + 1, False).scaled(args.prefactor)
    raise NonConvergence(
        f"Bergman triple series not converged within {K + 1} shells",
        partial, required_depth=2 * K + 2 if K + 1 < cfg.max_terms else None)


# --------------------------------------------------------------------------
# convenience front end with automatic table depth

_INITIAL_DEPTH = 24


def bergman(x, y, params: KernelParams, rep: str = "zonal", im: ImTable | None = None,
            spec: QuadratureSpec | None = None,
            cfg: SeriesConfig = DEFAULT_CONFIG) -> tuple[EvalResult, ImTable]:
    """Weighted Bergman kernel with the I_m table extended on demand.

    Returns the result and the table actually used.  A caller-supplied
    constant table (the Hardy override) is extended with the same constant.
    """
    if rep not in ("zonal", "triple"):
        raise DomainError(f"unknown Bergman representation {rep!r}")
    fn = bergman_zonal_series if rep == "zonal" else bergman_triple_series
    if im is None:
        im = compute_im_table(params, _INITIAL_DEPTH, spec)
    while True:
        try:
            return fn(x, y, params, im, cfg), im
        except NonConvergence as exc:
            depth = exc.required_depth
            cap = IM_MAX_DEGREE
            if depth is None or im.M >= cap:
                raise
            depth = min(max(depth, 2 * im.M), cap)
            if im.is_constant():
                im = ImTable.constant(im.n, im.s, depth, im[0])
            else:
                im = compute_im_table(params, depth, spec)
