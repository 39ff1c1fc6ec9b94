import math

import mpmath as mp
import numpy as np
import pytest
from scipy import special

from hharmonic import kernels as K
from hharmonic.errors import DomainError
from hharmonic.geometry import BallPoint, KernelParams, random_ball_points
from hharmonic.oracle import (IM_MAX_DEGREE, QuadratureSpec, SphereFunction, _jacobi01,
                              eval_poly, hharmonicity_extrapolated, hharmonicity_residual,
                              i_m_quadrature, pair_integral_quadrature, pair_integrand,
                              spherical_harmonic_basis, sphere_monte_carlo, sphere_quadrature,
                              szego_quadrature, zonal_reproducing_check, _poly_laplacian)

from conftest import rel

TENSOR = QuadratureSpec()
MC = QuadratureSpec(scheme="monte-carlo", mc_samples=200_000, seed=7)


def const(e):
    return np.ones(len(e))


def first(e):
    return e[:, 0]


def first_sq(e):
    return e[:, 0] ** 2


# ---- sphere quadrature --------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 5, 7])
def test_moments_two_coordinate(n):
    for fn, expected in ((const, 1.0), (first, 0.0), (first_sq, 1.0 / n)):
        q = sphere_quadrature(SphereFunction(fn, two_coordinate=True), n, TENSOR)
        assert abs(q.value - expected) <= 1e-13 and q.stderr == 0.0


@pytest.mark.parametrize("n", [3, 4])
def test_moments_full_product_rule(n):
    spec = QuadratureSpec(nodes_radial=32, nodes_angular=32)
    for fn, expected in ((const, 1.0), (first, 0.0), (first_sq, 1.0 / n),
                         (lambda e: e[:, -1] ** 4, 3.0 / (n * (n + 2)))):
        assert abs(sphere_quadrature(SphereFunction(fn), n, spec).value - expected) <= 1e-13


@pytest.mark.parametrize("n", [3, 6])
def test_moments_monte_carlo(n):
    assert sphere_quadrature(SphereFunction(const), n, MC).value == pytest.approx(1.0, abs=1e-15)
    for fn, expected in ((first, 0.0), (first_sq, 1.0 / n)):
        q = sphere_quadrature(SphereFunction(fn), n, MC)
        assert abs(q.value - expected) <= 4 * q.stderr


def test_large_dimension_general_integrand_falls_back_to_sampling():
    q = sphere_quadrature(SphereFunction(first_sq), 6, QuadratureSpec(mc_samples=100_000))
    assert q.stderr > 0 and abs(q.value - 1 / 6) <= 4 * q.stderr


def test_monte_carlo_is_bit_reproducible():
    f = SphereFunction(lambda e: np.exp(e[:, 0] - 0.3 * e[:, 2]))
    a = sphere_monte_carlo(f, 4, 150_001, 99)
    b = sphere_monte_carlo(f, 4, 150_001, 99)
    c = sphere_monte_carlo(f, 4, 150_001, 100)
    assert a == b and a.value != c.value


def test_two_coordinate_declaration_is_spot_checked():
    with pytest.raises(DomainError):
        sphere_quadrature(SphereFunction(lambda e: e[:, 2] ** 2, two_coordinate=True), 4, TENSOR)


def test_dimension_and_spec_validation():
    with pytest.raises(DomainError):
        sphere_quadrature(SphereFunction(const), 2)
    with pytest.raises(DomainError):
        QuadratureSpec(scheme="simpson")
    with pytest.raises(DomainError):
        QuadratureSpec(nodes_radial=0)


def test_polished_jacobi_rule_is_exact_on_monomials():
    for a, b in ((0.0, 0.5), (-0.5, 0.0), (2.0, 1.5), (0.5, 0.0)):
        for N in (64, 1024):
            t, w = _jacobi01(N, a, b)
            mass = special.beta(a + 1, b + 1)
            assert rel(w.sum(), mass) <= 1e-14
            for k in (3, 40, 150):
                exact = special.beta(a + 1, b + 1 + k) / mass
                assert rel(math.fsum((w * t ** k).tolist()) / mass, exact) <= 1e-12


# ---- kernel integrals -----------------------------------------------------------

def test_pair_integral_quadrature_examples():
    o = BallPoint.origin(3)
    assert pair_integral_quadrature(o, o, 2.5, 3.0, 3).value == pytest.approx(1.0, abs=1e-14)
    x, y = BallPoint.of([0.2, 0.1, 0.0]), BallPoint.of([-0.3, 0.0, 0.2])
    # alpha = beta = n is the unnormalised Szegő integrand
    raw = pair_integral_quadrature(x, y, 3.0, 3.0, 3).value
    pre = ((1 - x.norm_sq) * (1 - y.norm_sq)) ** 2
    assert rel(raw * pre, szego_quadrature(x, y, 3).value) <= 1e-14


@pytest.mark.parametrize("n", [3, 4])
def test_tensor_and_monte_carlo_agree(n, rng):
    for x, y in zip(random_ball_points(rng, n, 3, 0.6), random_ball_points(rng, n, 3, 0.6)):
        for a, b in ((2.0, 2.5), (float(n), float(n))):
            t = pair_integral_quadrature(x, y, a, b, n, TENSOR).value
            m = pair_integral_quadrature(x, y, a, b, n, MC)
            assert abs(t - m.value) <= 4 * m.stderr


@pytest.mark.parametrize("n", [3, 5])
def test_rotation_to_normal_form(n, rng):
    for x, y in zip(random_ball_points(rng, n, 3, 0.5), random_ball_points(rng, n, 3, 0.5)):
        rotated = sphere_quadrature(pair_integrand(x, y, 2.2, 3.0), n, TENSOR).value
        raw = sphere_monte_carlo(pair_integrand(x, y, 2.2, 3.0, rotate=False), n, 200_000, 3)
        assert abs(rotated - raw.value) <= 4 * raw.stderr


def test_node_doubling_gains_a_factor_ten(rng):
    # from 32 nodes on the rule is in its asymptotic regime up to radius 0.8
    for n in (3, 4, 6):
        p = KernelParams(n)
        edge = BallPoint.of([0.8] + [0.0] * (n - 1))
        pairs = list(zip(random_ball_points(rng, n, 3, 0.8), random_ball_points(rng, n, 3, 0.8)))
        for x, y in pairs + [(edge, edge)]:
            ref = K.szego_finite_sum(x, y, p).value
            errs = [abs(szego_quadrature(x, y, n, QuadratureSpec(nodes_radial=N, nodes_angular=N)).value - ref)
                    for N in (32, 64, 128, 256)]
            for e0, e1 in zip(errs, errs[1:]):
                if e0 > 1e-13 * ref:
                    assert e1 <= e0 / 10


def test_szego_quadrature_examples():
    y = BallPoint.of([0.1, -0.5, 0.3])
    assert abs(szego_quadrature(BallPoint.origin(3), y, 3).value - 1.0) <= 1e-13
    x = BallPoint.of([0.3, 0.0, 0.0])
    assert rel(szego_quadrature(x, x, 3).value, 1.3081 / 0.8281) <= 1e-12
    z = BallPoint.of([0.2, 0.4, -0.1])
    assert rel(szego_quadrature(y, z, 3).value, szego_quadrature(z, y, 3).value) <= 1e-12


# ---- I_m(s) --------------------------------------------------------------------------

def mp_im(m, n, s):
    """I_m(s) by tanh-sinh adaptive quadrature and mpmath's own 2F1."""
    mp.mp.dps = 30
    n, s = mp.mpf(n), mp.mpf(s)
    lead = mp.rf(n - 1, m) / mp.rf(n / 2, m)
    f = lambda t: t ** (m + n / 2 - 1) * (1 - t) ** s * (lead * mp.hyp2f1(m, 1 - n / 2, m + n / 2, t)) ** 2
    norm = mp.gamma(n / 2 + s + 1) / (mp.gamma(n / 2) * mp.gamma(s + 1))
    return float(norm * mp.quad(f, [0, 0.5, 0.9, 0.99, 0.999, 1]))


@pytest.mark.parametrize("m,n,s", [(1, 4, 0.0), (2, 3, 0.5), (7, 5, 2.0), (30, 3, 0.0),
                                   (77, 3, 0.0), (100, 3, -0.5), (128, 4, 0.5)])
def test_i_m_matches_extended_precision(m, n, s):
    assert rel(i_m_quadrature(m, KernelParams(n, s)), mp_im(m, n, s)) <= 1e-10


def test_i_m_examples():
    for n in (3, 4, 5, 8):
        for s in (-0.5, 0.0, 0.5, 2.0):
            assert abs(i_m_quadrature(0, KernelParams(n, s)) - 1.0) <= 1e-13
    assert abs(i_m_quadrature(1, KernelParams(4, 0.0)) - 17 / 20) <= 1e-13
    assert all(i_m_quadrature(m, KernelParams(3, 1.0)) > 0 for m in range(21))


def test_i_m_degree_cap():
    with pytest.raises(DomainError):
        i_m_quadrature(IM_MAX_DEGREE + 1, KernelParams(3))


def test_scipy_hyp2f1_is_sound_up_to_the_degree_cap():
    """The I_m integrand leans on scipy's 2F1 near t = 1; check it where it matters."""
    mp.mp.dps = 30
    for n in (3, 5):
        for m in (60, IM_MAX_DEGREE):
            for t in (0.5, 0.9, 0.99, 0.9999):
                ours = special.hyp2f1(m, 1 - n / 2, m + n / 2, t)
                ref = float(mp.hyp2f1(m, 1 - mp.mpf(n) / 2, m + mp.mpf(n) / 2, t))
                assert rel(ours, ref) <= 1e-12


# ---- finite-difference hyperbolic Laplacian ---------------------------------------------

ETA0 = np.array([0.6, 0.0, 0.8])
X0 = BallPoint.of([0.2, 0.1, 0.0])


def poisson_slice(z):
    return K.poisson_h(ETA0, BallPoint.of(z), 3)


def test_constant_has_zero_residual():
    assert hharmonicity_residual(lambda z: 1.0, X0, 3, 1e-3) == 0.0


def test_poisson_kernel_singles_out_n_minus_2():
    hs = (1e-2, 5e-3, 2.5e-3)
    good = [abs(hharmonicity_residual(poisson_slice, X0, 3, h)) for h in hs]
    assert min(math.log2(good[0] / good[1]), math.log2(good[1] / good[2])) >= 1.9
    # the other coefficient leaves an h-independent residual far above the truncation error
    bad = [abs(hharmonicity_residual(poisson_slice, X0, 3, h, coeff=2)) for h in hs]
    assert max(bad) / min(bad) < 1.01 and min(bad) > 1e3 * good[-1]


@pytest.mark.parametrize("n", [4, 5])
def test_poisson_kernel_coefficient_in_higher_dimension(n):
    eta = np.zeros(n)
    eta[0], eta[1] = 0.8, -0.6
    x = BallPoint.of([0.1, 0.2, -0.1] + [0.0] * (n - 3))
    f = lambda z: K.poisson_h(eta, BallPoint.of(z), n)
    assert abs(hharmonicity_extrapolated(f, x, n, 1e-2)) <= 1e-6
    assert abs(hharmonicity_extrapolated(f, x, n, 1e-2, coeff=n - 1)) > 1e-2


def test_extrapolated_residual_at_1e3():
    assert abs(hharmonicity_residual(poisson_slice, X0, 3, 1e-3)) <= 1e-3
    assert abs(hharmonicity_extrapolated(poisson_slice, X0, 3, 1e-3)) <= 1e-5


def test_norm_squared_is_not_h_harmonic():
    f = lambda z: float(np.dot(z, z))
    r = [abs(hharmonicity_residual(f, X0, 3, h)) for h in (1e-2, 1e-3, 1e-4)]
    assert min(r) > 1.0


def test_residual_argument_checks():
    with pytest.raises(DomainError):
        hharmonicity_residual(poisson_slice, X0, 3, 1e-3, coeff=3)
    with pytest.raises(DomainError):
        hharmonicity_residual(poisson_slice, BallPoint.of([0.995, 0, 0]), 3, 1e-2)
    with pytest.raises(DomainError):
        hharmonicity_residual(poisson_slice, X0, 3, 0.0)


# ---- spherical harmonics and the zonal reproducing property --------------------------------

@pytest.mark.parametrize("m", range(5))
def test_harmonic_basis_size_and_harmonicity(m):
    basis = spherical_harmonic_basis(3, m)
    assert len(basis) == 2 * m + 1
    for p in basis:
        lap = _poly_laplacian(p, 3)
        assert all(abs(c) <= 1e-12 for c in lap.values())
    rng = np.random.default_rng(m)
    pts = rng.standard_normal((2 * m + 4, 3))
    vals = np.array([eval_poly(p, pts) for p in basis])
    assert np.linalg.matrix_rank(vals, tol=1e-9) == 2 * m + 1


@pytest.mark.parametrize("m", range(5))
def test_zonal_reproduces_the_basis(m, rng):
    for _ in range(2):
        x = rng.standard_normal(3)
        x /= np.linalg.norm(x)
        for p in spherical_harmonic_basis(3, m):
            assert zonal_reproducing_check(m, p, x, 3, QuadratureSpec(nodes_radial=32, nodes_angular=32)) <= 1e-6


def test_zonal_reproducing_examples():
    e1 = np.array([1.0, 0.0, 0.0])
    assert zonal_reproducing_check(0, {(0, 0, 0): 1.0}, e1, 3) <= 1e-13
    assert zonal_reproducing_check(1, {(1, 0, 0): 1.0}, e1, 3) <= 1e-13
    x = np.array([0.6, 0.8, 0.0])
    assert zonal_reproducing_check(2, {(1, 1, 0): 1.0}, x, 3) <= 1e-13


def test_zonal_check_rejects_non_unit_point():
    with pytest.raises(DomainError):
        zonal_reproducing_check(1, {(1, 0, 0): 1.0}, np.array([0.5, 0, 0]), 3)
