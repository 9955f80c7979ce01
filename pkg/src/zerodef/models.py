"""Built-in model generators and their closed-form oracles.

The kinetic proofreading chain is the package's reference family: a receptor
T and ligand M associate into C0, which is modified stepwise to C_N, with
every intermediate able to dissociate back to T + M.  Equilibria of the chain
have closed forms, which the test suite uses as independent oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .network import ReactionNetwork

__all__ = [
    "McKeithanParams",
    "mckeithan",
    "mckeithan_equilibrium",
    "pi3_closed_form",
    "example_networks",
]


@dataclass(frozen=True)
class McKeithanParams:
    """Rates of the proofreading chain with N modification steps.

    ``k1`` is the association rate, ``kp`` the N forward modification rates,
    and ``km`` the N+1 dissociation rates (one per intermediate).
    """

    N: int
    k1: float = 1.0
    kp: tuple[float, ...] = ()
    km: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if self.N < 0:
            raise DomainError("N must be nonnegative")
        if len(self.kp) != self.N:
            raise DomainError(f"need {self.N} forward rates, got {len(self.kp)}")
        if len(self.km) != self.N + 1:
            raise DomainError(f"need {self.N + 1} dissociation rates, got {len(self.km)}")
        if self.k1 <= 0 or any(k <= 0 for k in self.kp) or any(k <= 0 for k in self.km):
            raise DomainError("all rates must be positive")

    @staticmethod
    def unit(N: int) -> "McKeithanParams":
        return McKeithanParams(N, 1.0, (1.0,) * N, (1.0,) * (N + 1))


def mckeithan(params: McKeithanParams) -> ReactionNetwork:
    """Build the proofreading network with species order (T, M, C0..CN)."""
    N = params.N
    m = N + 2
    n = N + 3
    B = np.zeros((n, m))
    B[0, 0] = B[1, 0] = 1.0  # complex 1 is T + M
    for j in range(1, m):  # complex j+1 is C_{j-1}
        B[j + 1, j] = 1.0
    A = np.zeros((m, m))
    A[1, 0] = params.k1
    for i in range(1, m):
        A[0, i] = params.km[i - 1]
    for i in range(2, m):
        A[i, i - 1] = params.kp[i - 2]
    species = ("T", "M") + tuple(f"C{i}" for i in range(N + 1))
    return ReactionNetwork(A, B, species=species)


def mckeithan_equilibrium(params: McKeithanParams, alpha: float, beta: float) -> np.ndarray:
    """Positive equilibrium with T = alpha, M = beta, via the chain recursion.

    C0 = k1*alpha*beta / (km[0] + kp[0]) (just km[0] when N = 0), then each
    C_i picks up the factor kp[i-1]/(km[i] + kp[i]), with the final step
    losing the forward term.  Note alpha, beta are the equilibrium values of
    T and M themselves, not the class totals.
    """
    if alpha <= 0 or beta <= 0:
        raise DomainError("alpha and beta must be positive")
    N = params.N
    c = np.empty(N + 1)
    denom0 = params.km[0] + (params.kp[0] if N >= 1 else 0.0)
    c[0] = params.k1 * alpha * beta / denom0
    for i in range(1, N + 1):
        denom = params.km[i] + (params.kp[i] if i < N else 0.0)
        c[i] = params.kp[i - 1] * c[i - 1] / denom
    return np.concatenate(([alpha, beta], c))


def pi3_closed_form(x0: float, y0: float) -> float:
    """Equilibrium C0 on the class with totals (x0, y0), N = 0 and unit rates.

    Solves z = (x0 - z)(y0 - z) for the root in (0, min(x0, y0)); the smaller
    quadratic root is the admissible one.
    """
    if x0 <= 0 or y0 <= 0:
        raise DomainError("totals must be positive")
    disc = (x0 - y0) ** 2 + 2.0 * (x0 + y0) + 1.0
    return 0.5 * (x0 + y0 + 1.0 - math.sqrt(disc))


def example_networks() -> dict[str, ReactionNetwork]:
    """Small canned networks with known equilibrium structure.

    - "assoc": P1 + P2 <-> P3 with unit rates; unique interior equilibrium
      (1,1,1) on its class, boundary equilibria {(x,0,0)} and {(0,y,0)}.
    - "scalar_pump": two complexes over the same pair of species; each class
      {x2 = r} carries the interior equilibrium (1, r) and the boundary
      equilibrium (0, r).
    - "linear_exchange": x1 <-> x2; linear dynamics, classes {x1 + x2 = c}
      with no boundary equilibria except the origin's class.
    - "proofreading_n1": the N = 1 chain with unit rates.
    """
    nets = {}
    nets["assoc"] = ReactionNetwork(
        A=[[0.0, 1.0], [1.0, 0.0]],
        B=[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        species=("P1", "P2", "P3"),
    )
    nets["scalar_pump"] = ReactionNetwork(
        A=[[0.0, 1.0], [1.0, 0.0]],
        B=[[1.0, 2.0], [1.0, 1.0]],
        species=("X1", "X2"),
    )
    nets["linear_exchange"] = ReactionNetwork(
        A=[[0.0, 1.0], [1.0, 0.0]],
        B=[[1.0, 0.0], [0.0, 1.0]],
        species=("X1", "X2"),
    )
    nets["proofreading_n1"] = mckeithan(McKeithanParams.unit(1))
    return nets
