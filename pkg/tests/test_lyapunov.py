import math

import numpy as np
import pytest

from zerodef.errors import InfeasibleError
from zerodef.models import mckeithan
from zerodef.network import ReactionNetwork
from zerodef.equilibria import base_equilibrium, log_imbalance
from zerodef.lyapunov import (
    certify,
    comparison_field,
    dissipation_coeff,
    dissipation_margin,
    dissipation_margin_batch,
    entropy_distance,
    exponential_rate,
    laplacian_gap,
    lyapunov_value,
    min_activity,
    robust_margin,
)
from conftest import random_mckeithan


def test_entropy_distance_values(assoc):
    one = np.ones(3)
    assert entropy_distance(assoc, one, one) == pytest.approx(0.0)
    assert entropy_distance(assoc, [math.e, 1, 1], one) == pytest.approx(1.0)


def test_entropy_strictly_above_diagonal(assoc, rng):
    for _ in range(200):
        z = rng.uniform(0.1, 5.0, 3)
        x = rng.uniform(0.0, 5.0, 3)
        if np.allclose(x, z):
            continue
        assert entropy_distance(assoc, x, z) > entropy_distance(assoc, z, z)


def test_lyapunov_value_properties(assoc, rng):
    x_bar = np.ones(3)
    assert lyapunov_value(assoc, x_bar, x_bar) == 0.0
    assert lyapunov_value(assoc, [math.e, 1, 1], x_bar) == pytest.approx(1.0)
    for _ in range(100):
        x = rng.uniform(0.0, 6.0, 3)
        v = lyapunov_value(assoc, x, x_bar)
        assert v >= 0.0
        if np.abs(x - x_bar).max() > 1e-8:
            assert v > 0.0


def test_lyapunov_gradient_matches_finite_differences(assoc, mck_unit, rng):
    # interior gradient is the log-activity offset
    for net in (assoc, mck_unit(1)):
        x_bar = base_equilibrium(net).x
        for _ in range(20):
            x = rng.uniform(0.2, 5.0, net.n)
            grad = np.array(
                [k.rho(xi) - k.rho(bi) for k, xi, bi in zip(net.kinetics, x, x_bar)]
            )
            h = 1e-6
            for i in range(net.n):
                e = np.zeros(net.n)
                e[i] = h
                fd = (
                    lyapunov_value(net, x + e, x_bar)
                    - lyapunov_value(net, x - e, x_bar)
                ) / (2 * h)
                assert fd == pytest.approx(grad[i], rel=1e-5, abs=1e-8)


def test_gradient_check_spec_point(assoc):
    x = np.array([2.0, 3.0, 0.5])
    x_bar = np.ones(3)
    expect = np.log([2.0, 3.0, 0.5])
    h = 1e-6
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        fd = (lyapunov_value(assoc, x + e, x_bar) - lyapunov_value(assoc, x - e, x_bar)) / (2 * h)
        assert fd == pytest.approx(expect[i], rel=1e-5)


def test_gradient_vanishes_only_at_equilibrium(assoc, rng):
    x_bar = np.ones(3)
    for _ in range(100):
        x = rng.uniform(0.1, 4.0, 3)
        if np.linalg.norm(x - x_bar) <= 1e-3:
            continue
        grad = np.log(x)  # offset from rho(1) = 0
        assert np.linalg.norm(grad) > 0.0


def test_gap_values(assoc):
    assert laplacian_gap(assoc) == pytest.approx(1.0, abs=1e-12)
    net2 = ReactionNetwork([[0, 2], [2, 0]], assoc.B)
    assert laplacian_gap(net2) == pytest.approx(2.0, abs=1e-12)


def _random_irreducible(rng, m):
    A = rng.uniform(0.0, 3.0, (m, m))
    A[rng.random((m, m)) < 0.4] = 0.0
    for i in range(m):  # a cycle guarantees strong connectivity
        A[(i + 1) % m, i] = max(A[(i + 1) % m, i], rng.uniform(0.2, 2.0))
    np.fill_diagonal(A, 0.0)
    return A


def test_gap_bound_and_tightness(rng):
    for _ in range(12):
        m = int(rng.integers(2, 7))
        A = _random_irreducible(rng, m)
        n = m + 1
        B = np.zeros((n, m))
        for j in range(m):
            B[j, j] = 1.0
            B[m, j] = 1.0
        net = ReactionNetwork(A, B)
        gap, direction = laplacian_gap(net, with_direction=True)
        assert gap > 0
        Q = rng.normal(size=(10_000, m))
        diffs = Q[:, :, None] - Q[:, None, :]
        quad = np.einsum("ij,nij->n", A, diffs**2)
        total = (diffs**2).sum(axis=(1, 2))
        assert (quad - gap * total).min() >= -1e-10 * (1 + np.abs(quad).max())
        # the eigen-direction attains the bound
        d = direction[:, None] - direction[None, :]
        attained = float((A * d**2).sum() / (d**2).sum())
        assert attained == pytest.approx(gap, rel=1e-6)


def test_activity_coefficients(assoc):
    assert min_activity(assoc, [1, 1, 1]) == pytest.approx(1.0)
    assert dissipation_coeff(assoc, [1, 1, 1]) == pytest.approx(0.5)
    assert min_activity(assoc, [2, 2, 2]) == pytest.approx(2.0)
    assert dissipation_coeff(assoc, [2, 2, 2]) == pytest.approx(1.0)


def test_comparison_field(assoc, rng):
    v0 = comparison_field(assoc, np.zeros(3))
    assert v0 == pytest.approx([0.5, 0.5, 1.0])
    for _ in range(50):
        sigma = rng.normal(0, 2, 3)
        v = comparison_field(assoc, sigma)
        for j in range(assoc.m):
            b = assoc.B[:, j]
            assert b @ v == pytest.approx(math.exp(b @ sigma), rel=1e-12)


def test_margin_hand_value(assoc):
    m = dissipation_margin(assoc, [2.0, 2.0, 2.0], [1.0, 1.0, 1.0])
    assert m == pytest.approx(2 * math.log(2) - math.log(2) ** 2, rel=1e-12)
    assert dissipation_margin(assoc, [1.5, 0.5, 2.0], [1.5, 0.5, 2.0]) == pytest.approx(
        0.0, abs=1e-12
    )


def test_margin_out_of_range_marker(assoc):
    big = math.exp(260.0)  # inner products past the exp guard
    assert dissipation_margin(assoc, [big, big, 1.0], [1.0, 1.0, 1.0]) is None


def test_margin_nonnegative_on_dominating_pairs(assoc, linear_exchange, mck_unit, rng):
    # provable regime: every complex activity of x at least matches z's
    # (nonnegative per-complex log ratios)
    for net in (assoc, linear_exchange, mck_unit(1)):
        gap = laplacian_gap(net)
        for _ in range(2000):
            z = rng.uniform(0.1, 10.0, net.n)
            sigma = rng.uniform(0.0, 2.0, net.n)
            x = np.array(
                [k.rho_inv(k.rho(zi) + s) for k, zi, s in zip(net.kinetics, z, sigma)]
            )
            m = dissipation_margin(net, x, z, gap)
            assert m is not None and m >= -1e-9


def test_margin_batch_agrees_with_scalar(assoc, mck_unit, rng):
    for net in (assoc, mck_unit(1)):
        X = rng.uniform(0.1, 10.0, size=(100, net.n))
        Z = rng.uniform(0.1, 10.0, size=(100, net.n))
        batch = dissipation_margin_batch(net, X, Z)
        for i in range(100):
            scalar = dissipation_margin(net, X[i], Z[i])
            assert batch[i] == pytest.approx(scalar, rel=1e-9, abs=1e-9)


def test_robust_margin(assoc):
    x_bar = np.ones(3)
    assert robust_margin(assoc, x_bar, x_bar) == 0.0
    x = np.array([1.5, 1.5, 0.5])  # same class as (1,1,1)
    expect = log_imbalance(assoc, x, x_bar) / 16.0
    assert robust_margin(assoc, x_bar, x) == pytest.approx(expect, rel=1e-12)
    with pytest.raises(InfeasibleError):
        robust_margin(assoc, x_bar, [2.0, 2.0, 2.0])  # different class


def test_exponential_rate_positive(assoc, mck_unit, rng):
    for net in (assoc, mck_unit(1)):
        eq = base_equilibrium(net)
        rate, radius = exponential_rate(net, eq.x)
        assert rate > 0 and radius > 0
    net = mckeithan(random_mckeithan(1, rng))
    eq = base_equilibrium(net)
    rate, radius = exponential_rate(net, eq.x)
    assert rate > 0 and radius > 0


def test_exponential_rate_association_value(assoc):
    eq = base_equilibrium(assoc)
    rate, radius = exponential_rate(assoc, eq.x)
    # curvature diag(1/x) = I at (1,1,1): c1 = 1/2; c = 1/2; d = 3 so d2 = 3/2
    assert rate == pytest.approx(0.5 * 0.5 * 1.5 * 0.5, rel=1e-9)


def test_certificate_report(assoc):
    cert = certify(assoc, np.array([1.5, 1.5, 0.5]))
    assert cert.kappa == pytest.approx(1.0, abs=1e-12)
    assert cert.c_at == pytest.approx(cert.kappa * cert.c0_at / 2.0, rel=1e-12)
    assert cert.delta_S_at > 0
    assert cert.exp_rate > 0 and cert.exp_radius > 0
    with pytest.raises(InfeasibleError):
        certify(assoc, np.array([2.0, 2.0, 2.0]), class_rep=np.array([2.0, 2.0, 0.0]))


def test_certificate_zero_at_equilibrium(assoc):
    cert = certify(assoc, np.array([1.0, 1.0, 1.0]))
    assert cert.delta_S_at == pytest.approx(0.0, abs=1e-18)
    assert cert.inequality_margin == pytest.approx(0.0, abs=1e-12)
