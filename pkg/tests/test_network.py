import math

import numpy as np
import pytest

from zerodef.errors import DomainError, StructuralError
from zerodef.kinetics import Kinetics
from zerodef.network import (
    ReactionNetwork,
    complex_activities,
    laplacian,
    log_activities,
    rate_split,
    support_set,
    validate,
    velocity,
    velocity_factored,
)
from conftest import random_mckeithan
from zerodef.models import mckeithan


def test_validate_all_pass(assoc):
    report = validate(assoc)
    assert report.ok
    assert [c.name for c in report.checks] == [
        "irreducible",
        "entries_zero_or_geq_one",
        "full_column_rank",
        "no_zero_row",
    ]


def test_validate_broken_irreducibility(assoc):
    A = assoc.A.copy()
    A[1, 0] = 0.0  # remove the only edge into complex 2
    net = ReactionNetwork(A, assoc.B)
    report = validate(net)
    assert not report.ok
    fail = report.failures()
    assert len(fail) == 1 and fail[0].name == "irreducible"
    assert "unreachable" in fail[0].detail


def test_validate_fractional_entry(assoc):
    B = assoc.B.copy()
    B[0, 0] = 0.5
    report = validate(ReactionNetwork(assoc.A, B))
    assert not report.ok
    assert any(c.name == "entries_zero_or_geq_one" for c in report.failures())


def test_validate_rank_and_zero_row():
    # two identical complexes -> rank deficient
    B = np.array([[1.0, 1.0], [1.0, 1.0]])
    rep = validate(ReactionNetwork([[0, 1], [1, 0]], B))
    assert any(c.name == "full_column_rank" for c in rep.failures())
    B2 = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    rep2 = validate(ReactionNetwork([[0, 1], [1, 0]], B2))
    assert any(c.name == "no_zero_row" for c in rep2.failures())


def test_dimension_mismatch_is_structural():
    with pytest.raises(StructuralError):
        ReactionNetwork([[0, 1], [1, 0]], [[1, 0, 0], [0, 1, 0]])


def test_support_sets(assoc, mck_unit):
    net = mck_unit(2)
    assert support_set(net, 0) == {0, 1}
    for j in range(1, net.m):
        assert support_set(net, j) == {j + 1}
    assert support_set(assoc, 1) == {2}
    with pytest.raises(DomainError):
        support_set(assoc, 5)


def test_velocity_values(assoc):
    assert velocity(assoc, [1, 1, 1]) == pytest.approx([0, 0, 0])
    assert velocity(assoc, [2, 2, 0]) == pytest.approx([-4, -4, 4])
    # all-zero state with no trivial complexes: every monomial vanishes
    assert velocity(assoc, [0, 0, 0]) == pytest.approx([0, 0, 0])
    with pytest.raises(DomainError):
        velocity(assoc, [-1, 1, 1])


def test_velocity_factored_hand_value(assoc):
    assert complex_activities(assoc, [2, 2, 2]) == pytest.approx([4, 2])
    assert velocity_factored(assoc, [2, 2, 2]) == pytest.approx([-2, -2, 2])
    assert velocity_factored(assoc, [1, 1, 1]) == pytest.approx([0, 0, 0])


def test_laplacian_examples():
    net = ReactionNetwork([[0, 1], [1, 0]], [[1, 0], [1, 0], [0, 1]])
    np.testing.assert_allclose(laplacian(net), [[-1, 1], [1, -1]])
    net2 = ReactionNetwork([[0, 2], [3, 0]], [[1, 0], [1, 0], [0, 1]])
    np.testing.assert_allclose(laplacian(net2), [[-3, 2], [3, -2]])


def test_laplacian_columns_sum_to_zero(rng, mck_unit):
    # exact for integer-valued rates; last-ulp scale for general reals
    col = laplacian(mck_unit(3)).sum(axis=0)
    assert (col == 0.0).all()
    net = mckeithan(random_mckeithan(2, rng))
    col = laplacian(net).sum(axis=0)
    assert np.abs(col).max() <= 4 * np.finfo(float).eps * np.abs(net.A).max()


def test_complex_activities(assoc):
    assert complex_activities(assoc, [2, 3, 5]) == pytest.approx([6, 5])
    assert complex_activities(assoc, [0, 3, 5]) == pytest.approx([0, 5])
    assert complex_activities(assoc, [1, 1, 1]) == pytest.approx([1, 1])


def test_activities_positive_iff_state_positive(rng, mck_unit):
    net = mck_unit(2)
    for _ in range(50):
        x = rng.uniform(0, 5, net.n)
        x[rng.integers(0, net.n)] *= rng.integers(0, 2)  # sometimes zero one out
        act = complex_activities(net, x)
        assert ((act > 0).all()) == ((x > 0).all())


def test_three_velocity_routes_agree(assoc, mck_unit, rng):
    for net in (assoc, mck_unit(1), mck_unit(2)):
        X = rng.uniform(0.0, 10.0, size=(10_000, net.n))
        for x in X[:200]:  # full triple check on a slice, all routes per state
            f1 = velocity(net, x)
            f2 = velocity_factored(net, x)
            recon = np.array(
                [
                    rate_split(net, x, k)[0] * net.kinetics[k].theta(x[k])
                    + rate_split(net, x, k)[1]
                    for k in range(net.n)
                ]
            )
            scale = 1.0 + np.abs(f1).max()
            assert np.abs(f1 - f2).max() < 1e-10 * scale
            assert np.abs(f1 - recon).max() < 1e-10 * scale
        # the two closed routes over the full 10^4-state batch
        F1 = np.array([velocity(net, x) for x in X])
        F2 = np.array([velocity_factored(net, x) for x in X])
        assert np.abs(F1 - F2).max() < 1e-10 * (1.0 + np.abs(F1).max())


def test_boundary_components_point_inward(rng, assoc, mck_unit):
    for net in (assoc, mck_unit(2)):
        for _ in range(300):
            x = rng.uniform(0, 5, net.n)
            k = rng.integers(0, net.n)
            x[k] = 0.0
            f = velocity(net, x)
            assert f[k] >= 0.0
            alpha, beta = rate_split(net, x, k)
            assert beta >= 0.0
            assert f[k] == pytest.approx(beta, rel=1e-12, abs=1e-15)


def test_rate_split_hand_values(assoc):
    alpha, beta = rate_split(assoc, [2, 2, 0], 2)
    assert beta == pytest.approx(4.0)  # inflow into P3 is x1*x2
    f = velocity(assoc, [1, 1, 1])
    a1, b1 = rate_split(assoc, [1, 1, 1], 0)
    assert a1 * 1.0 + b1 == pytest.approx(f[0], abs=1e-14)


def test_log_activities_sentinel(assoc):
    la = log_activities(assoc, [1.0, math.e, math.e**2])
    assert not la.zero.any()
    assert la.finite == pytest.approx([0.0, 1.0, 2.0])
    la2 = log_activities(assoc, [1.0, 0.0, 2.0])
    assert la2.zero.tolist() == [False, True, False]
    arr = la2.as_array()
    assert arr[1] == -math.inf
    # exponentiation honors e**-inf = 0 without arithmetic on infinities
    assert la2.exp_inner([1, 1, 0]) == 0.0
    assert la2.exp_inner([1, 0, 0]) == pytest.approx(1.0)


def test_log_activities_michaelis_menten():
    net = ReactionNetwork(
        [[0, 1], [1, 0]],
        [[1, 0], [1, 0], [0, 1]],
        kinetics=[Kinetics.michaelis_menten(1.0)] + [Kinetics.mass_action()] * 2,
    )
    la = log_activities(net, [1.0, 1.0, 1.0])
    assert la.finite[0] == pytest.approx(math.log(0.5))


def test_network_is_immutable(assoc):
    with pytest.raises(ValueError):
        assoc.A[0, 0] = 5.0
