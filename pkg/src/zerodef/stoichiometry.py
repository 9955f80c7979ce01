"""Stoichiometric subspace, class membership, and the positive-shell test.

The span of the complex differences is the subspace every velocity lies in;
its translates intersected with the nonnegative orthant are the invariant
classes.  Orthonormal bases for the subspace and its complement are the
package's shared coordinate frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StructuralError
from .network import ReactionNetwork
from . import simplex

__all__ = [
    "SubspaceBases",
    "ClassId",
    "stoichiometric_bases",
    "class_of",
    "same_class",
    "positive_witness",
]


@dataclass(frozen=True)
class SubspaceBases:
    """Orthonormal bases: columns of D span the difference space, Dperp its complement."""

    D: np.ndarray      # n x (m-1)
    Dperp: np.ndarray  # n x (n-m+1)

    def __post_init__(self):
        self.D.flags.writeable = False
        self.Dperp.flags.writeable = False


@dataclass(frozen=True)
class ClassId:
    """A class is identified by the complement coordinates of any representative."""

    coords: tuple[float, ...]
    representative: np.ndarray


def stoichiometric_bases(net: ReactionNetwork) -> SubspaceBases:
    """SVD of the generator matrix [b_2-b_1 ... b_m-b_1], completed to R^n.

    The generator span must have dimension m-1; anything else contradicts the
    full-column-rank hypothesis and raises.
    """
    B = net.B
    n, m = net.n, net.m
    diffs = B[:, 1:] - B[:, [0]]
    if m == 1:
        raise StructuralError("network with a single complex has no dynamics")
    U, s, _ = np.linalg.svd(diffs, full_matrices=True)
    rank = int((s > 1e-10 * (s[0] if s.size else 1.0)).sum())
    if rank != m - 1:
        raise StructuralError(
            f"difference space has dimension {rank}, expected m-1 = {m - 1}"
        )
    return SubspaceBases(D=U[:, : m - 1].copy(), Dperp=U[:, m - 1 :].copy())


def class_of(net: ReactionNetwork, p, bases: SubspaceBases | None = None) -> ClassId:
    """Class tag of a nonnegative state: its complement coordinates."""
    p = net.check_state(p)
    if bases is None:
        bases = stoichiometric_bases(net)
    coords = bases.Dperp.T @ p
    return ClassId(tuple(float(v) for v in coords), p.copy())


def same_class(net: ReactionNetwork, p, q, bases: SubspaceBases | None = None) -> bool:
    """True iff p - q lies in the difference space (tolerance scaled by |p|, |q|)."""
    p = net.check_state(p)
    q = net.check_state(q)
    if bases is None:
        bases = stoichiometric_bases(net)
    drift = np.linalg.norm(bases.Dperp.T @ (p - q))
    return drift < 1e-9 * (1.0 + np.linalg.norm(p) + np.linalg.norm(q))


def positive_witness(
    net: ReactionNetwork, p, bases: SubspaceBases | None = None
) -> np.ndarray | None:
    """A shift d in the difference space with p + d > 0, or None if none exists.

    Decides membership in the union of classes that meet the open orthant, by
    maximizing the worst component margin t of p + D@y over the subspace;
    strictly positive optimum means the class is positive.  p itself may have
    negative entries (any real vector is allowed).
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (net.n,):
        raise StructuralError(f"state must have {net.n} components")
    if (p > 0).all():
        return np.zeros(net.n)
    if bases is None:
        bases = stoichiometric_bases(net)
    D = bases.D
    n, r = D.shape
    cap = 1.0 + float(np.linalg.norm(p))

    # Columns: y+ (r), y- (r), t+ , t-, row slacks (n), cap slack.
    # Rows:   D@y - t - s = -p   and   t + s_cap = cap.
    ncol = 2 * r + 2 + n + 1
    A = np.zeros((n + 1, ncol))
    b = np.zeros(n + 1)
    A[:n, :r] = D
    A[:n, r : 2 * r] = -D
    A[:n, 2 * r] = -1.0
    A[:n, 2 * r + 1] = 1.0
    A[:n, 2 * r + 2 : 2 * r + 2 + n] = -np.eye(n)
    b[:n] = -p
    A[n, 2 * r] = 1.0
    A[n, 2 * r + 1] = -1.0
    A[n, -1] = 1.0
    b[n] = cap
    c = np.zeros(ncol)
    c[2 * r] = 1.0
    c[2 * r + 1] = -1.0

    res = simplex.maximize(c, A, b)
    if res.status != "optimal" or res.value <= 1e-12 * (1.0 + np.linalg.norm(p)):
        return None
    y = res.x[:r] - res.x[r : 2 * r]
    return D @ y
