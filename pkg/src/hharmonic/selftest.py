"""Seeded invariant suite behind ``hharmonic selftest``.

Each family returns ``{"family", "passed", "total", "detail"}``.  The draws
are small so the whole run stays within a few seconds.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import ortho_group

from . import kernels as K
from .geometry import BallPoint, KernelParams, random_ball_points
from .oracle import (QuadratureSpec, SphereFunction, hharmonicity_residual, i_m_quadrature,
                     sphere_quadrature, szego_quadrature)


def _family(name, checks, detail=""):
    checks = list(checks)
    return {"family": name, "passed": sum(bool(c) for c in checks), "total": len(checks),
            "detail": detail}


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def run_selftest(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    report = []
    p3 = KernelParams(3, 1.0)
    im3 = K.compute_im_table(p3, 60)
    pts = random_ball_points(rng, 3, 10, 0.4)
    pairs = list(zip(pts[:5], pts[5:]))

    szego_routes = {
        "x9": lambda x, y: K.szego_x9(x, y, p3).value,
        "finite-sum": lambda x, y: K.szego_finite_sum(x, y, p3).value,
        "bergman-zonal": lambda x, y: K.bergman_zonal_series(x, y, p3, im3).value,
        "bergman-triple": lambda x, y: K.bergman_triple_series(x, y, p3, im3).value,
    }

    report.append(_family("symmetry", (
        _rel(f(x, y), f(y, x)) <= 1e-10 for f in szego_routes.values() for x, y in pairs),
        "K(x,y) = K(y,x) to 1e-10"))

    rots = [ortho_group.rvs(3, random_state=rng) for _ in pairs]
    report.append(_family("rotation invariance", (
        _rel(f(x, y), f(BallPoint.of(U @ x.array), BallPoint.of(U @ y.array))) <= 1e-10
        for f in szego_routes.values() for (x, y), U in zip(pairs, rots)),
        "K(Ux,Uy) = K(x,y) to 1e-10"))

    zero = BallPoint.origin(3)
    report.append(_family("reproducing constants", (
        abs(f(zero, y) - 1.0) <= 1e-12 for f in szego_routes.values() for _, y in pairs),
        "K(0,y) = 1 to 1e-12"))

    report.append(_family("Cauchy-Schwarz", (
        f(x, y) ** 2 <= f(x, x) * f(y, y) * (1 + 1e-9)
        for f in szego_routes.values() for x, y in pairs),
        "K(x,y)^2 <= K(x,x) K(y,y)"))

    gram_ok = []
    for f in (szego_routes["x9"], szego_routes["bergman-zonal"]):
        six = random_ball_points(rng, 3, 6, 0.5)
        G = np.array([[f(a, b) for b in six] for a in six])
        ev = np.linalg.eigvalsh((G + G.T) / 2)
        gram_ok.append(ev[0] >= -1e-8 * ev[-1])
    report.append(_family("Gram PSD", gram_ok, "6-point Gram matrices"))

    agree = []
    for n in (3, 4):
        pn = KernelParams(n)
        for x, y in zip(random_ball_points(rng, n, 3, 0.5), random_ball_points(rng, n, 3, 0.5)):
            a = K.szego_x9(x, y, pn).value
            b = K.szego_finite_sum(x, y, pn).value
            c = szego_quadrature(x, y, n).value
            agree.append(max(_rel(a, b), _rel(a, c), _rel(b, c)) <= 1e-6)
    report.append(_family("representation agreement", agree, "x9 / finite-sum / quadrature"))

    chain = []
    for n in (3, 5):
        pn = KernelParams(n)
        for r in (0.1, 0.4, 0.7):
            x = BallPoint.of([r] + [0.0] * (n - 1))
            d = K.szego_diagonal(x, pn)
            others = (K.szego_radial_f1(x, 1.0, pn, K.SeriesConfig(max_terms=20000)).value,
                      K.szego_finite_sum(x, x, pn).value, K.szego_x9(x, x, pn).value)
            chain.append(all(_rel(d, o) <= 1e-8 for o in others))
    report.append(_family("diagonal chain", chain, "diagonal = radial-f1 = finite-sum = x9"))

    one = K.ImTable.constant(3, 1.0, 60)
    report.append(_family("Hardy limit", (
        _rel(g(x, y, p3, one).value, K.szego_x9(x, y, p3).value) <= 1e-7
        for g in (K.bergman_zonal_series, K.bergman_triple_series) for x, y in pairs),
        "I_m = 1 reduces Bergman to Szegő"))

    report.append(_family("I_m exactness", [
        *(abs(i_m_quadrature(0, KernelParams(n, s)) - 1.0) <= 1e-10
          for n in (3, 4, 5) for s in (0.0, 0.5, 2.0)),
        abs(i_m_quadrature(1, KernelParams(4, 0.0)) - 0.85) <= 1e-10], "I_0 = 1, I_1(0) = 17/20 at n=4"))

    y0 = BallPoint.of([0.1, -0.2, 0.3])
    p0 = KernelParams(3)

    def slice_(z):
        return K.szego_finite_sum(BallPoint.of(z), y0, p0).value

    orders = []
    for x in random_ball_points(rng, 3, 2, 0.5):
        r = [abs(hharmonicity_residual(slice_, x, 3, h)) for h in (1e-2, 5e-3, 2.5e-3)]
        orders.append(min(math.log2(r[0] / r[1]), math.log2(r[1] / r[2])) >= 1.8)
    report.append(_family("H-harmonicity", orders, "finite-difference residual order >= 1.8"))

    spec = QuadratureSpec()
    quad = []
    for n in (3, 4, 6):
        quad.append(abs(sphere_quadrature(SphereFunction(lambda e: np.ones(len(e)), True), n, spec).value - 1) <= 1e-12)
        quad.append(abs(sphere_quadrature(SphereFunction(lambda e: e[:, 0] ** 2, True), n, spec).value - 1 / n) <= 1e-12)
    report.append(_family("sphere quadrature", quad, "mass 1 and second moment 1/n"))
    return report
