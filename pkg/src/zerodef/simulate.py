"""Monitored ODE integration of open-loop, perturbed, and closed-loop dynamics.

Stepping runs in a selectable kernel (compiled when available); invariants
are evaluated over the recorded states afterwards, one verdict per monitor:
nonnegativity, class conservation, immediate interior entry from non-blocked
boundary starts, Lyapunov decrease, and classification of the limit on
convergence.  A failed monitor marks the trajectory, it does not raise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, InfeasibleError, NumericalError, StructuralError
from .network import ReactionNetwork, laplacian, velocity
from .equilibria import (
    class_equilibrium,
    is_boundary_equilibrium,
    log_imbalance,
)
from .lyapunov import dissipation_coeff, laplacian_gap
from .stoichiometry import SubspaceBases, stoichiometric_bases
from ._kernels import BACKEND_NAME, backend, purepy

__all__ = [
    "PerturbationSpec",
    "SimConfig",
    "MonitorResult",
    "Trajectory",
    "integrate",
    "perturbed_within_margin",
]

_REASONS = {0: "t_end", 1: "converged", 2: "step_failure"}


@dataclass(frozen=True)
class PerturbationSpec:
    """Disturbance added to the base dynamics.

    - "none": the plain vector field.
    - "class_preserving": fixed disturbance matrix ``epsilons``; each pairwise
      term scales the product of the source complex's support species, so it
      vanishes whenever one of them does and classes stay invariant.
    - "margin_scaled": the same shape of disturbance, rescaled online so the
      squared total always spends exactly ``scale**2`` of the certified
      budget for the start's class.
    - "general": arbitrary user hook x -> g(x); the hook promises to keep the
      orthant invariant (nonnegative components where x vanishes), which the
      boundary-guard monitor spot-checks.
    """

    kind: str = "none"
    epsilons: np.ndarray | None = None
    scale: float = 0.0
    hook: Callable | None = None

    @staticmethod
    def none() -> "PerturbationSpec":
        return PerturbationSpec("none")

    @staticmethod
    def class_preserving(epsilons) -> "PerturbationSpec":
        eps = np.array(epsilons, dtype=float)
        if eps.ndim != 2 or eps.shape[0] != eps.shape[1]:
            raise StructuralError("disturbance matrix must be square")
        if (eps < 0).any():
            raise DomainError("disturbance rates must be nonnegative")
        return PerturbationSpec("class_preserving", epsilons=eps)

    @staticmethod
    def margin_scaled(scale: float) -> "PerturbationSpec":
        if not 0.0 <= scale < 1.0:
            raise DomainError("scale must lie in [0, 1)")
        return PerturbationSpec("margin_scaled", scale=float(scale))

    @staticmethod
    def general(hook: Callable) -> "PerturbationSpec":
        return PerturbationSpec("general", hook=hook)


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    method: str = "adaptive"  # "adaptive" (embedded 4/5) or "rk4" (fixed step)
    step: float = 1e-3
    rtol: float = 1e-8
    atol: float = 1e-10
    conv_tol: float = 1e-9
    conv_window: int = 10
    h_max: float | None = None  # default: t_end / 50
    max_steps: int = 5_000_000
    monitors: bool = True
    v_monitor: bool | None = None  # None: on for "none"/"margin_scaled" runs

    def __post_init__(self):
        if self.t_end <= 0 or self.step <= 0 or self.rtol <= 0 or self.atol <= 0:
            raise DomainError("t_end, step, rtol, atol must be positive")
        if self.method not in ("adaptive", "rk4"):
            raise DomainError(f"unknown method {self.method!r}")


@dataclass
class MonitorResult:
    name: str
    enabled: bool
    passed: bool = True
    n_checked: int = 0
    n_failed: int = 0
    worst: float = 0.0
    detail: str = ""


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    reason: str
    n_accepted: int
    n_rejected: int
    monitors: list[MonitorResult] = field(default_factory=list)
    v_values: np.ndarray | None = None
    class_drift: np.ndarray | None = None
    min_component: np.ndarray | None = None
    margin_usage: np.ndarray | None = None
    backend: str = BACKEND_NAME

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def invariant_violated(self) -> bool:
        return any(m.enabled and not m.passed for m in self.monitors)

    def monitor(self, name: str) -> MonitorResult:
        for m in self.monitors:
            if m.name == name:
                return m
        raise KeyError(name)

    def to_csv(self, path_or_file, manifest: dict | None = None) -> None:
        """Write t, x1..xn, V, class_drift rows (17 significant digits)."""
        n = self.states.shape[1]
        close = False
        if isinstance(path_or_file, (str, bytes)):
            fh = open(path_or_file, "w")
            close = True
        else:
            fh = path_or_file
        try:
            if manifest is not None:
                fh.write("# manifest: " + json.dumps(manifest, sort_keys=True) + "\n")
            fh.write("t," + ",".join(f"x{i + 1}" for i in range(n)) + ",V,class_drift\n")
            v = self.v_values
            drift = self.class_drift
            for i, t in enumerate(self.times):
                row = [format(t, ".17g")]
                row += [format(x, ".17g") for x in self.states[i]]
                row.append(format(v[i] if v is not None else math.nan, ".17g"))
                row.append(format(drift[i] if drift is not None else math.nan, ".17g"))
                fh.write(",".join(row) + "\n")
        finally:
            if close:
                fh.close()

    def to_json(self, path_or_file=None, manifest: dict | None = None):
        doc = {
            "manifest": manifest,
            "reason": self.reason,
            "backend": self.backend,
            "n_accepted": self.n_accepted,
            "n_rejected": self.n_rejected,
            "times": self.times.tolist(),
            "states": self.states.tolist(),
            "monitors": [
                {
                    "name": m.name,
                    "enabled": m.enabled,
                    "passed": m.passed,
                    "n_checked": m.n_checked,
                    "n_failed": m.n_failed,
                    "worst": m.worst,
                    "detail": m.detail,
                }
                for m in self.monitors
            ],
            "invariant_violated": self.invariant_violated,
        }
        if path_or_file is None:
            return doc
        if isinstance(path_or_file, (str, bytes)):
            with open(path_or_file, "w") as fh:
                json.dump(doc, fh, sort_keys=True)
        else:
            json.dump(doc, path_or_file, sort_keys=True)
        return doc


def _kinetics_arrays(net: ReactionNetwork):
    kinds = np.array(
        [0 if k.kind == "mass_action" else 1 for k in net.kinetics], dtype=np.intc
    )
    params = np.array([k.K for k in net.kinetics], dtype=float)
    return kinds, params


def integrate(
    net: ReactionNetwork,
    x0,
    cfg: SimConfig,
    perturbation: PerturbationSpec | None = None,
    feedback=None,
    bases: SubspaceBases | None = None,
    x_ref: np.ndarray | None = None,
) -> Trajectory:
    """Integrate from x0 and evaluate all enabled monitors over the result.

    ``feedback`` takes a :class:`zerodef.control.FeedbackLaw`; combining it
    with a perturbation is not supported.  ``x_ref`` optionally supplies the
    reference equilibrium for the Lyapunov series (computed from x0's class
    when omitted and computable).
    """
    x0 = net.check_state(x0)
    pert = perturbation or PerturbationSpec.none()
    if feedback is not None and pert.kind != "none":
        raise DomainError("feedback cannot be combined with a perturbation")
    if bases is None:
        bases = stoichiometric_bases(net)

    n, m = net.n, net.m
    B = np.ascontiguousarray(net.B)
    BA = np.ascontiguousarray(net.B @ laplacian(net))
    kinds, params = _kinetics_arrays(net)

    BE = np.zeros((n, m))
    scale = 0.0
    rho_ref = np.zeros(n)
    c_ref = 0.0
    pert_code = 0
    g_hook = None
    v_reference = x_ref

    if pert.kind == "class_preserving":
        eps = pert.epsilons
        if eps.shape != (m, m):
            raise StructuralError(f"disturbance matrix must be {m}x{m}")
        BE = np.ascontiguousarray(net.B @ (eps - np.diag(eps.sum(axis=0))))
        pert_code = 1
    elif pert.kind == "margin_scaled":
        if v_reference is None:
            v_reference = class_equilibrium(net, x0, bases=bases).x
        rho_ref = np.array(
            [k.rho(v) for k, v in zip(net.kinetics, v_reference)], dtype=float
        )
        c_ref = dissipation_coeff(net, v_reference)
        scale = pert.scale
        pert_code = 2
    elif pert.kind == "general":
        g_hook = pert.hook

    if feedback is not None:
        fb_idx = np.array(feedback.indices, dtype=np.int64)
        fb_gain = np.array(feedback.gains, dtype=float)
        fb_target = np.array(feedback.target[list(feedback.indices)], dtype=float)
        if v_reference is None:
            v_reference = np.array(feedback.target, dtype=float)
    else:
        fb_idx = np.empty(0, dtype=np.int64)
        fb_gain = np.empty(0)
        fb_target = np.empty(0)

    h_init = cfg.step if cfg.method == "rk4" else min(1e-2, cfg.t_end / 100.0)
    if cfg.h_max is not None:
        h_max = cfg.h_max
    elif cfg.method == "rk4":
        h_max = math.inf  # the user's step choice is authoritative
    else:
        h_max = cfg.t_end / 50.0  # keep enough tail steps for the detector
    runner = purepy if g_hook is not None else backend
    times, states, reason_code, n_acc, n_rej = runner.run_integration(
        B,
        BA,
        kinds,
        params,
        np.array(x0, dtype=float),
        cfg.t_end,
        0 if cfg.method == "rk4" else 1,
        h_init,
        cfg.rtol,
        cfg.atol,
        h_max,
        pert_code,
        BE,
        scale,
        rho_ref,
        c_ref,
        fb_idx,
        fb_gain,
        fb_target,
        cfg.conv_tol,
        cfg.conv_window,
        cfg.max_steps,
        g_hook=g_hook,
    )

    traj = Trajectory(
        times=times,
        states=states,
        reason=_REASONS[reason_code],
        n_accepted=n_acc,
        n_rejected=n_rej,
        backend=runner.NAME,
    )
    _attach_series(net, traj, x0, bases, pert, feedback, v_reference)
    if cfg.monitors:
        _run_monitors(net, traj, x0, cfg, bases, pert, feedback)
    return traj


def _attach_series(net, traj, x0, bases, pert, feedback, v_reference):
    states = traj.states
    traj.min_component = states.min(axis=1)
    traj.class_drift = np.linalg.norm((states - states[0]) @ bases.Dperp, axis=1)

    if v_reference is None and pert.kind != "general":
        try:
            v_reference = class_equilibrium(net, x0, bases=bases).x
        except (InfeasibleError, NumericalError):
            v_reference = None
    if v_reference is not None:
        kinds = np.array([0 if k.kind == "mass_action" else 1 for k in net.kinetics])
        Ks = np.array([k.K for k in net.kinetics])
        traj.v_values = _entropy_series(states, v_reference, kinds, Ks)

    if pert.kind == "margin_scaled":
        traj.margin_usage = _usage_series(net, traj, pert.scale, v_reference)


def _entropy_series(states, ref, kinds, Ks):
    """Vectorized Lyapunov values against a fixed positive reference."""
    c = np.where(kinds == 0, np.log(ref), np.log(ref) - np.log(Ks + ref))

    def W_terms(X):
        xlogx = np.where(X > 0, X * np.log(np.maximum(X, 1e-300)), 0.0)
        ma = xlogx - X + 1.0
        KX = np.maximum(Ks + X, 1e-300)
        mm = ma - (KX * np.log(KX) - KX) + (
            (Ks + 1.0) * np.log(Ks + 1.0) - (Ks + 1.0)
        )
        return np.where(kinds == 0, ma, mm) - X * c

    vals = W_terms(states).sum(axis=1)
    ref_val = W_terms(ref[None, :]).sum(axis=1)[0]
    return vals - ref_val


def _usage_series(net, traj, scale, x_ref):
    """Fraction of the squared budget actually spent, recomputed independently."""
    gap = laplacian_gap(net)
    c = dissipation_coeff(net, x_ref, gap)
    m = net.m
    usage = np.zeros(len(traj.times))
    for i, x in enumerate(traj.states):
        if (x <= 0).any():
            continue
        delta = log_imbalance(net, x, x_ref)
        budget = 0.25 * c * c * delta
        if budget <= 0:
            continue
        th = np.array([k.theta(v) for k, v in zip(net.kinetics, x)])
        P = np.array([th[net.B[:, j] > 0].prod() for j in range(m)])
        den = (m - 1) * float(P @ P)
        if den <= 0:
            continue
        eta = scale * math.sqrt(budget / den)
        total_sq = eta * eta * den
        usage[i] = total_sq / budget
    return usage


def _run_monitors(net, traj, x0, cfg, bases, pert, feedback):
    mons = traj.monitors
    states = traj.states
    norms = np.linalg.norm(states, axis=1)

    floor = -1e-12 * (1.0 + norms)
    bad = traj.min_component < floor
    mons.append(
        MonitorResult(
            "nonneg",
            True,
            passed=not bad.any(),
            n_checked=len(states),
            n_failed=int(bad.sum()),
            worst=float(traj.min_component.min()),
        )
    )

    class_applies = pert.kind in ("none", "class_preserving", "margin_scaled") and feedback is None
    if class_applies:
        tol = 1e-8 * (1.0 + float(np.linalg.norm(x0)))
        bad = traj.class_drift >= tol
        mons.append(
            MonitorResult(
                "class",
                True,
                passed=not bad.any(),
                n_checked=len(states),
                n_failed=int(bad.sum()),
                worst=float(traj.class_drift.max()),
            )
        )
    else:
        mons.append(MonitorResult("class", False))

    on_boundary = (np.asarray(x0) <= 1e-12 * (1.0 + np.linalg.norm(x0))).any()
    # the closed loop escapes even boundary equilibria of the open-loop field
    escapes = feedback is not None or not is_boundary_equilibrium(net, x0)
    if on_boundary and escapes and len(states) > 1:
        mins = traj.min_component[1:]
        bad = mins <= 0.0
        mons.append(
            MonitorResult(
                "interior_entry",
                True,
                passed=not bad.any(),
                n_checked=len(mins),
                n_failed=int(bad.sum()),
                worst=float(mins.min()),
            )
        )
    else:
        mons.append(MonitorResult("interior_entry", False))

    v_on = cfg.v_monitor
    if v_on is None:
        v_on = pert.kind in ("none", "margin_scaled") and feedback is None
    if v_on and traj.v_values is not None and len(traj.v_values) > 1:
        diffs = np.diff(traj.v_values)
        bad = diffs >= 1e-9
        mons.append(
            MonitorResult(
                "v_decrease",
                True,
                passed=not bad.any(),
                n_checked=len(diffs),
                n_failed=int(bad.sum()),
                worst=float(diffs.max()),
            )
        )
    else:
        mons.append(MonitorResult("v_decrease", False))

    if traj.reason == "converged":
        final = traj.final_state
        f = velocity(net, np.maximum(final, 0.0))
        interior_eq = (final > 0).all() and np.linalg.norm(f) < 10 * cfg.conv_tol * (
            1.0 + np.linalg.norm(final)
        )
        boundary_eq = is_boundary_equilibrium(net, np.maximum(final, 0.0))
        mons.append(
            MonitorResult(
                "omega_limit",
                True,
                passed=bool(interior_eq or boundary_eq),
                n_checked=1,
                n_failed=0 if (interior_eq or boundary_eq) else 1,
                detail="interior" if interior_eq else ("boundary" if boundary_eq else "none"),
            )
        )
    else:
        mons.append(MonitorResult("omega_limit", False))

    if pert.kind == "general" and pert.hook is not None:
        n_checked = 0
        n_failed = 0
        for x in states:
            thr = 1e-6 * (1.0 + float(np.linalg.norm(x)))
            for k in range(net.n):
                if x[k] < thr:
                    probe = np.maximum(x, 0.0)
                    probe[k] = 0.0
                    n_checked += 1
                    if float(np.asarray(pert.hook(probe))[k]) < 0.0:
                        n_failed += 1
        mons.append(
            MonitorResult(
                "boundary_guard",
                True,
                passed=n_failed == 0,
                n_checked=n_checked,
                n_failed=n_failed,
            )
        )
    else:
        mons.append(MonitorResult("boundary_guard", False))


def perturbed_within_margin(
    net: ReactionNetwork,
    x0,
    scale: float,
    cfg: SimConfig,
    bases: SubspaceBases | None = None,
) -> Trajectory:
    """Run the class-preserving disturbance at a fixed fraction of the budget.

    The disturbance magnitude is rescaled at every evaluation point so its
    squared total equals scale**2 times the certified budget of the start's
    class; the usage series records the ratio actually spent per step.
    """
    x0 = net.check_state(x0)
    return integrate(
        net,
        x0,
        cfg,
        perturbation=PerturbationSpec.margin_scaled(scale),
        bases=bases,
    )
