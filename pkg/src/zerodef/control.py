"""Synthesis of globally stabilizing proportional inflow feedback.

With r = n - m + 1 actuated species, negative feedback on the deviations
from a chosen positive equilibrium makes it globally attractive, provided
the actuated directions complete the difference space to all of R^n and the
actuated set covers the support of at least one complex.  Both conditions
are checked here; the candidate actuator sets are found by rank completion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleError
from .network import ReactionNetwork, support_set, velocity
from .equilibria import _residual_scale
from .stoichiometry import SubspaceBases, stoichiometric_bases

__all__ = ["FeedbackLaw", "ActuatorChoice", "select_actuators", "make_feedback"]

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class FeedbackLaw:
    """Proportional inflow law: add gain * (target_k - x_k) on each actuated k."""

    indices: tuple[int, ...]
    gains: tuple[float, ...]
    target: np.ndarray

    def g(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        idx = list(self.indices)
        out[idx] = np.array(self.gains) * (self.target[idx] - x[idx])
        return out


@dataclass(frozen=True)
class ActuatorChoice:
    indices: tuple[int, ...]
    covering_complex: int  # complex whose support is inside the actuated set


def _rank(M) -> int:
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    return int((sv > _RANK_TOL * sv[0]).sum())


def select_actuators(
    net: ReactionNetwork, bases: SubspaceBases | None = None
) -> list[ActuatorChoice]:
    """Admissible actuator sets, one completion per covering complex.

    Complexes are visited by increasing support size; supports that fit in an
    r-set are extended greedily (lowest species index first) with coordinate
    directions that raise the rank of the difference space.  Every returned
    set satisfies both the span and the support-covering conditions; the
    list is sorted by index set, and sets certified by a smallest support
    are always present.  Empty means feedback of this form cannot work.
    """
    if bases is None:
        bases = stoichiometric_bases(net)
    D = bases.D
    n = net.n
    r = n - net.m + 1
    eye = np.eye(n)

    found: dict[tuple[int, ...], int] = {}
    supports = sorted(range(net.m), key=lambda j: (len(support_set(net, j)), j))
    for j in supports:
        sj = sorted(support_set(net, j))
        if len(sj) > r:
            continue
        chosen = list(sj)
        rank = _rank(np.hstack([D, eye[:, chosen]]))
        for k in range(n):
            if len(chosen) == r:
                break
            if k in chosen:
                continue
            cand = _rank(np.hstack([D, eye[:, chosen + [k]]]))
            if cand > rank:
                chosen.append(k)
                rank = cand
        chosen.sort()
        if len(chosen) == r and rank == n:
            key = tuple(chosen)
            if key not in found:
                found[key] = j
    return [
        ActuatorChoice(idx, found[idx]) for idx in sorted(found.keys())
    ]


def make_feedback(
    net: ReactionNetwork,
    x_bar,
    indices,
    gains,
    bases: SubspaceBases | None = None,
) -> FeedbackLaw:
    """Validate the actuator conditions and build the feedback law.

    Raises with the violated condition named: actuator count must be
    n - m + 1 distinct species, gains positive, the target a positive
    equilibrium, the actuated directions must complete the difference space
    (span condition), and some complex's support must lie inside the
    actuated set (support condition).
    """
    if bases is None:
        bases = stoichiometric_bases(net)
    x_bar = net.check_state(x_bar, positive=True)
    indices = tuple(int(k) for k in indices)
    gains = tuple(float(g) for g in gains)
    r = net.n - net.m + 1
    if len(indices) != r or len(set(indices)) != r:
        raise DomainError(f"need {r} distinct actuated species, got {indices}")
    if any(not 0 <= k < net.n for k in indices):
        raise DomainError("actuator index out of range")
    if len(gains) != r or any(g <= 0 for g in gains):
        raise DomainError("gains must be positive, one per actuator")

    residual = float(np.linalg.norm(velocity(net, x_bar)))
    if residual >= 1e-9 * _residual_scale(net, x_bar):
        raise InfeasibleError(f"target is not an equilibrium (residual {residual})")

    eye = np.eye(net.n)
    if _rank(np.hstack([bases.D, eye[:, list(indices)]])) != net.n:
        raise InfeasibleError(
            "span condition violated: actuated directions do not complete "
            "the difference space"
        )
    if not any(
        support_set(net, j) <= set(indices) for j in range(net.m)
    ):
        raise InfeasibleError(
            "support condition violated: no complex is fully actuated"
        )
    return FeedbackLaw(indices, gains, x_bar.copy())
