"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines.
Criterion 5 fails by design: the certified decay coefficient does not bound
the pairing for states whose complex activities sit below the reference's
(see the assertion message and notes in the repository docs); the remaining
criteria pass.
"""

import itertools
import math

import numpy as np
import pytest

from zerodef.control import make_feedback
from zerodef.models import (
    McKeithanParams,
    example_networks,
    mckeithan,
    mckeithan_equilibrium,
    pi3_closed_form,
)
from zerodef.network import ReactionNetwork, velocity
from zerodef.equilibria import (
    base_equilibrium,
    class_equilibrium,
    coordinate_chart,
    equilibrium_manifold_point,
    is_boundary_equilibrium,
)
from zerodef.lyapunov import (
    dissipation_margin_batch,
    exponential_rate,
    laplacian_gap,
)
from zerodef.simulate import SimConfig, integrate, perturbed_within_margin
from zerodef.stoichiometry import stoichiometric_bases
from conftest import random_mckeithan


def _verdict(num, ok, text):
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {text}")


@pytest.fixture(scope="module")
def sec11():
    return example_networks()["assoc"]


@pytest.fixture(scope="module")
def open_loop_runs():
    """Shared by criteria 3 and 4: proofreading chains, random rates/starts."""
    rng = np.random.default_rng(2024)
    runs = []
    for N in (0, 1, 2, 3):
        params = random_mckeithan(N, rng, lo=0.1, hi=10.0)
        net = mckeithan(params)
        bases = stoichiometric_bases(net)
        x_bar = base_equilibrium(net, bases).x
        for _ in range(20):
            x0 = rng.uniform(0.05, 10.0, net.n)
            target = class_equilibrium(net, x0, x_bar=x_bar, bases=bases).x
            traj = integrate(net, x0, SimConfig(t_end=200.0), bases=bases)
            runs.append((net, x0, target, traj))
    return runs


def test_criterion_1_equilibrium_closed_form(sec11):
    bases = stoichiometric_bases(sec11)
    x_bar = base_equilibrium(sec11, bases).x
    eq = class_equilibrium(sec11, [2.0, 2.0, 0.0], x_bar=x_bar, bases=bases)
    ok = np.abs(eq.x - 1.0).max() < 1e-9
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        x0, y0 = rng.uniform(0.1, 10.0, 2)
        z = pi3_closed_form(x0, y0)
        newton = class_equilibrium(sec11, [x0, y0, 0.0], x_bar=x_bar, bases=bases).x
        worst = max(worst, np.abs(newton - np.array([x0 - z, y0 - z, z])).max())
    ok = ok and worst < 1e-10
    _verdict(1, ok, f"newton vs closed form, worst deviation {worst:.2e}")
    assert ok


def test_criterion_2_scalar_reduction(sec11):
    def lam(t, lam0=0.5):
        s = (lam0 / (3.0 + lam0)) * math.exp(-3.0 * t)
        return 3.0 * s / (1.0 - s)

    traj = integrate(sec11, [1.5, 1.5, 0.5], SimConfig(t_end=10.0))
    errs = [abs(x[0] - (1.0 + lam(t))) for t, x in zip(traj.times, traj.states)]
    ok = max(errs) < 1e-6 and len(errs) >= 50
    _verdict(2, ok, f"max |x1(t) - (1+lambda(t))| = {max(errs):.2e} at {len(errs)} times")
    assert ok


def test_criterion_3_global_convergence(open_loop_runs):
    worst_dist = 0.0
    worst_v = -np.inf
    ok = True
    for net, x0, target, traj in open_loop_runs:
        dist = np.abs(traj.final_state - target).max()
        worst_dist = max(worst_dist, dist)
        mon = traj.monitor("v_decrease")
        if not (mon.enabled and mon.passed):
            ok = False
        worst_v = max(worst_v, mon.worst)
        if dist >= 1e-5:
            ok = False
    _verdict(
        3,
        ok,
        f"80 runs: worst final distance {worst_dist:.2e}, "
        f"worst V-step increase {worst_v:.2e}",
    )
    assert ok


def test_criterion_4_class_conservation(open_loop_runs):
    worst = 0.0
    for net, x0, target, traj in open_loop_runs:
        worst = max(worst, float(traj.class_drift.max()))
    ok = worst < 1e-8
    _verdict(4, ok, f"worst class drift over all runs {worst:.2e}")
    assert ok


def test_criterion_5_dissipation_inequality():
    nets = example_networks()
    rng = np.random.default_rng(5)
    worst = np.inf
    for key in ("assoc", "linear_exchange", "proofreading_n1"):
        net = nets[key]
        X = rng.uniform(0.1, 10.0, size=(10_000, net.n))
        Z = rng.uniform(0.1, 10.0, size=(10_000, net.n))
        margins = dissipation_margin_batch(net, X, Z)
        worst = min(worst, float(np.nanmin(margins)))
    ok = worst >= -1e-9
    _verdict(5, ok, f"min margin over 3x10^4 pairs {worst:.3e} (known defect)")
    assert ok, (
        "the decay inequality with coefficient gap*min_activity(z)/2 is "
        "violated for pairs whose complex activities fall below the "
        "reference's; e.g. on the association pair x = (e**-1.5, e**-1.5, "
        "e**-2), z = (1,1,1) gives margin -0.914.  The quadratic "
        "strengthening of the supporting-line bound only holds for "
        "nonnegative activity log-ratios, and no state-independent "
        "coefficient can work near the class boundary, so this criterion "
        "cannot pass as stated.  See notes outside the package for the "
        "full analysis; the provable regime is covered in test_lyapunov."
    )


def test_criterion_6_gap_tightness(sec11):
    gap = laplacian_gap(sec11)
    ok = abs(gap - 1.0) < 1e-12
    rng = np.random.default_rng(6)
    worst_bound = np.inf
    worst_tight = 0.0
    for _ in range(10):
        m = int(rng.integers(2, 7))
        A = rng.uniform(0.0, 3.0, (m, m))
        A[rng.random((m, m)) < 0.4] = 0.0
        for i in range(m):
            A[(i + 1) % m, i] = max(A[(i + 1) % m, i], rng.uniform(0.2, 2.0))
        np.fill_diagonal(A, 0.0)
        B = np.zeros((m + 1, m))
        B[:m, :m] = np.eye(m)
        B[m] = 1.0
        net = ReactionNetwork(A, B)
        g, direction = laplacian_gap(net, with_direction=True)
        Q = rng.normal(size=(10_000, m))
        diffs = Q[:, :, None] - Q[:, None, :]
        quad = np.einsum("ij,nij->n", A, diffs**2)
        total = (diffs**2).sum(axis=(1, 2))
        worst_bound = min(worst_bound, float((quad - g * total).min()))
        d = direction[:, None] - direction[None, :]
        attained = float((A * d**2).sum() / (d**2).sum())
        worst_tight = max(worst_tight, abs(attained - g) / g)
    ok = ok and worst_bound >= -1e-10 and worst_tight < 1e-6
    _verdict(
        6,
        ok,
        f"pair-network gap {gap:.15f}; sampled slack >= {worst_bound:.1e}; "
        f"eigen-direction gap error {worst_tight:.1e}",
    )
    assert ok


def test_criterion_7_robust_convergence():
    rng = np.random.default_rng(7)
    params = random_mckeithan(1, rng, lo=0.1, hi=10.0)
    net = mckeithan(params)
    bases = stoichiometric_bases(net)
    rep = rng.uniform(0.5, 4.0, net.n)
    x_bar = class_equilibrium(net, rep, bases=bases).x
    ok = True
    worst_dist = 0.0
    worst_usage = 0.0
    runs = 0
    while runs < 10:
        w = rng.normal(size=bases.D.shape[1])
        x0 = x_bar + bases.D @ (w / np.linalg.norm(w) * rng.uniform(0.1, 1.5))
        if (x0 <= 0).any():
            continue
        runs += 1
        traj = perturbed_within_margin(net, x0, 0.9, SimConfig(t_end=200.0), bases)
        dist = np.abs(traj.final_state - x_bar).max()
        worst_dist = max(worst_dist, dist)
        worst_usage = max(worst_usage, float(traj.margin_usage.max()))
        if dist >= 1e-5 or not traj.monitor("v_decrease").passed:
            ok = False
    ok = ok and worst_usage <= 0.81 + 1e-9
    _verdict(
        7,
        ok,
        f"10 perturbed runs: worst distance {worst_dist:.2e}, "
        f"max budget usage {worst_usage:.12f}",
    )
    assert ok


def test_criterion_8_feedback_stabilization():
    net = mckeithan(McKeithanParams.unit(2))
    bases = stoichiometric_bases(net)
    x_bar = mckeithan_equilibrium(McKeithanParams.unit(2), 1.0, 1.0)
    law = make_feedback(net, x_bar, (0, 1), (1.0, 1.0), bases)
    rng = np.random.default_rng(8)
    ok = True
    worst = 0.0
    classes = set()
    for _ in range(20):
        x0 = rng.uniform(0.0, 10.0, net.n)
        classes.add(tuple(np.round(bases.Dperp.T @ x0, 6)))
        traj = integrate(net, x0, SimConfig(t_end=200.0), feedback=law, bases=bases)
        dist = np.abs(traj.final_state - x_bar).max()
        worst = max(worst, dist)
        if dist >= 1e-5:
            ok = False
    ok = ok and len(classes) > 1
    # boundary starts must enter the open orthant at the first accepted step
    first_step_min = np.inf
    for x0 in (np.zeros(net.n), np.array([10.0, 0, 0, 0, 0]), np.array([0, 0, 1.0, 0, 0])):
        traj = integrate(net, x0, SimConfig(t_end=50.0), feedback=law, bases=bases)
        first_step_min = min(first_step_min, float(traj.states[1].min()))
        if not (traj.states[1:].min() > 0.0):
            ok = False
    _verdict(
        8,
        ok,
        f"20 starts over {len(classes)} classes, worst distance {worst:.2e}; "
        f"first-step min from boundary {first_step_min:.2e}",
    )
    assert ok


def test_criterion_9_coordinate_chart(sec11):
    rng = np.random.default_rng(9)
    nets = [sec11, mckeithan(McKeithanParams.unit(1))]
    ok = True
    worst_x2 = 0.0
    for net in nets:
        chart = coordinate_chart(net)
        for _ in range(5):
            x0 = rng.uniform(0.3, 5.0, net.n)
            traj = integrate(net, x0, SimConfig(t_end=30.0), bases=chart.bases)
            idx = np.linspace(0, len(traj.times) - 1, 15).astype(int)
            ref = chart.apply(traj.states[0])[1]
            for i in idx:
                _, X2 = chart.apply(traj.states[i])
                worst_x2 = max(worst_x2, float(np.abs(X2 - ref).max()))
    ok = worst_x2 < 1e-8
    chart = coordinate_chart(sec11)
    worst_x1 = 0.0
    for _ in range(100):
        y = chart.bases.Dperp @ rng.normal(size=2)
        x = equilibrium_manifold_point(sec11, chart.x_bar, y, chart.bases)
        X1, _ = chart.apply(x)
        worst_x1 = max(worst_x1, float(np.abs(X1).max()))
    ok = ok and worst_x1 < 1e-8
    _verdict(
        9,
        ok,
        f"X2 drift along trajectories {worst_x2:.2e}; "
        f"|X1| on sampled equilibria {worst_x1:.2e}",
    )
    assert ok


def test_criterion_10_boundary_classification():
    nets = example_networks()
    ok = True
    checked = 0
    for name, net in nets.items():
        if net.n > 5:
            continue
        for vals in itertools.product([0.0, 0.5, 1.0, 2.0], repeat=net.n):
            x = np.array(vals)
            if (x > 0).all():
                continue
            checked += 1
            combinatorial = is_boundary_equilibrium(net, x)
            direct = np.linalg.norm(velocity(net, x)) < 1e-12
            if combinatorial != direct:
                ok = False
    _verdict(10, ok, f"exhaustive agreement on {checked} boundary grid states")
    assert ok


def test_criterion_11_exponential_decay(sec11):
    x_bar = base_equilibrium(sec11).x
    rate, radius = exponential_rate(sec11, x_bar)
    bases = stoichiometric_bases(sec11)
    ok = True
    slopes = []
    for sign in (1.0, -1.0):
        u = bases.D[:, 0] * sign * (radius / 2.0)
        x0 = x_bar + u
        assert (x0 > 0).all()
        traj = integrate(sec11, x0, SimConfig(t_end=2.0), bases=bases, x_ref=x_bar)
        mask = traj.v_values > 1e-13
        t = traj.times[mask]
        logv = np.log(traj.v_values[mask])
        slope = np.polyfit(t, logv, 1)[0]
        slopes.append(slope)
        if not slope <= -rate * (1.0 - 0.2):
            ok = False
    _verdict(
        11,
        ok,
        f"certified rate {rate:.4f} (radius {radius:.3f}); "
        f"observed log-V slopes {[f'{s:.2f}' for s in slopes]}",
    )
    assert ok
