"""Canonical network representation, hypothesis checks, and the vector field.

A network is the pair of matrices (A, B) plus one rate law per species.
``A[i, j]`` is the rate constant on the edge complex j -> complex i, and the
columns of ``B`` are the complex vectors.  The dynamics evaluated here are

    xdot = sum_ij A[i,j] * prod_k theta_k(x_k)**B[k,j] * (B[:,i] - B[:,j])

with the power conventions r**0 = 1 and 0**c = 0 for c > 0, so boundary
states never produce NaNs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, StructuralError
from .kinetics import Kinetics

__all__ = [
    "ReactionNetwork",
    "ValidationReport",
    "LogActivities",
    "validate",
    "support_set",
    "velocity",
    "velocity_factored",
    "laplacian",
    "complex_activities",
    "rate_split",
    "log_activities",
]


def _power(r: float, c: float) -> float:
    # r**0 = 1, 0**c = 0, else exp(c ln r); small integer exponents multiplied
    # out directly for speed and exactness.
    if c == 0.0:
        return 1.0
    if r == 0.0:
        return 0.0
    ci = int(c)
    if c == ci and 1 <= ci <= 8:
        out = r
        for _ in range(ci - 1):
            out *= r
        return out
    return math.exp(c * math.log(r))


@dataclass(frozen=True)
class ReactionNetwork:
    """Immutable (A, B, kinetics, species) bundle.

    Construction only enforces dimensional consistency and finiteness; the
    structural hypotheses are checked separately by :func:`validate` so a
    report of individual failures can be produced.
    """

    A: np.ndarray
    B: np.ndarray
    kinetics: tuple[Kinetics, ...]
    species: tuple[str, ...]

    def __init__(self, A, B, kinetics=None, species=None):
        A = np.array(A, dtype=float)
        B = np.array(B, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise StructuralError(f"A must be square, got shape {A.shape}")
        if B.ndim != 2:
            raise StructuralError(f"B must be a matrix, got shape {B.shape}")
        n, m = B.shape
        if A.shape[0] != m:
            raise StructuralError(
                f"A is {A.shape[0]}x{A.shape[0]} but B has {m} columns"
            )
        if not (np.isfinite(A).all() and np.isfinite(B).all()):
            raise StructuralError("matrix entries must be finite")
        if (A < 0).any() or (B < 0).any():
            raise StructuralError("matrix entries must be nonnegative")
        if kinetics is None:
            kinetics = tuple(Kinetics.mass_action() for _ in range(n))
        else:
            kinetics = tuple(kinetics)
        if len(kinetics) != n:
            raise StructuralError(f"need {n} rate laws, got {len(kinetics)}")
        if species is None:
            species = tuple(f"P{i + 1}" for i in range(n))
        else:
            species = tuple(str(s) for s in species)
        if len(species) != n:
            raise StructuralError(f"need {n} species names, got {len(species)}")
        if len(set(species)) != n:
            raise StructuralError("species names must be distinct")
        A.flags.writeable = False
        B.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "kinetics", kinetics)
        object.__setattr__(self, "species", species)

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def species_index(self, name: str) -> int:
        try:
            return self.species.index(name)
        except ValueError:
            raise DomainError(f"unknown species {name!r}") from None

    def check_state(self, x, positive=False) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise StructuralError(f"state must have {self.n} components")
        if positive:
            if (x <= 0).any():
                raise DomainError("state must be strictly positive")
        elif (x < 0).any():
            raise DomainError("state must be nonnegative")
        return x


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    """Outcome of the four structural hypothesis checks."""

    checks: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            suffix = f" ({c.detail})" if c.detail else ""
            lines.append(f"{c.name}: {status}{suffix}")
        return "\n".join(lines)


def _strongly_connected(A: np.ndarray) -> tuple[bool, str]:
    # Two BFS passes (forward and backward from node 0) over the edge set
    # {j -> i : A[i,j] > 0, i != j}.
    m = A.shape[0]
    if m == 1:
        return True, ""

    def bfs(adj):
        seen = [False] * m
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        return seen

    fwd = [[i for i in range(m) if i != j and A[i, j] > 0] for j in range(m)]
    bwd = [[j for j in range(m) if i != j and A[i, j] > 0] for i in range(m)]
    seen_f = bfs(fwd)
    if not all(seen_f):
        bad = seen_f.index(False)
        return False, f"complex {bad + 1} unreachable from complex 1"
    seen_b = bfs(bwd)
    if not all(seen_b):
        bad = seen_b.index(False)
        return False, f"complex 1 unreachable from complex {bad + 1}"
    return True, ""


def validate(net: ReactionNetwork) -> ValidationReport:
    """Run the four admissibility checks and return a per-check report.

    The checks are: strong connectivity of the reaction graph, every entry of
    B either 0 or >= 1, rank(B) = m <= n, and no vanishing row of B.
    A network is admissible for the rest of the package iff all four pass.
    """
    report = ValidationReport()
    A, B = net.A, net.B
    n, m = net.n, net.m

    ok, detail = _strongly_connected(A)
    report.checks.append(CheckResult("irreducible", ok, detail))

    bad = [
        (k, j)
        for k in range(n)
        for j in range(m)
        if B[k, j] != 0.0 and B[k, j] < 1.0
    ]
    detail = ""
    if bad:
        k, j = bad[0]
        detail = f"B[{k + 1},{j + 1}] = {B[k, j]} lies in (0, 1)"
    report.checks.append(CheckResult("entries_zero_or_geq_one", not bad, detail))

    if m > n:
        report.checks.append(
            CheckResult("full_column_rank", False, f"m = {m} exceeds n = {n}")
        )
    else:
        sv = np.linalg.svd(B, compute_uv=False)
        rank = int((sv > 1e-10 * sv[0]).sum()) if sv.size else 0
        report.checks.append(
            CheckResult(
                "full_column_rank",
                rank == m,
                "" if rank == m else f"rank {rank} < m = {m}",
            )
        )

    zero_rows = [k for k in range(n) if not (B[k] > 0).any()]
    detail = f"row {zero_rows[0] + 1} of B vanishes" if zero_rows else ""
    report.checks.append(CheckResult("no_zero_row", not zero_rows, detail))
    return report


def support_set(net: ReactionNetwork, j: int) -> set[int]:
    """Indices of the species carried by complex ``j`` (0-based)."""
    if not 0 <= j < net.m:
        raise DomainError(f"complex index {j} out of range")
    return {int(k) for k in np.nonzero(net.B[:, j] > 0)[0]}


def laplacian(net: ReactionNetwork) -> np.ndarray:
    """A minus the diagonal of its column sums, so the constants are a left
    null vector.

    Exact zeros whenever the rate arithmetic is exact (integer-valued rates);
    for general reals a correction pass pushes the column-sum residue down to
    the last ulp of the largest entry.
    """
    L = net.A - np.diag(net.A.sum(axis=0))
    for _ in range(3):
        r = L.sum(axis=0)
        if not r.any():
            break
        L[np.diag_indices_from(L)] -= r
    return L


def complex_activities(net: ReactionNetwork, x) -> np.ndarray:
    """Monomial vector: component j is prod_k theta_k(x_k)**B[k,j]."""
    x = net.check_state(x)
    th = [kin.theta(v) for kin, v in zip(net.kinetics, x)]
    B = net.B
    out = np.empty(net.m)
    for j in range(net.m):
        acc = 1.0
        for k in range(net.n):
            b = B[k, j]
            if b != 0.0:
                acc *= _power(th[k], b)
        out[j] = acc
    return out


def velocity(net: ReactionNetwork, x) -> np.ndarray:
    """State velocity as the literal double sum over graph edges."""
    x = net.check_state(x)
    act = complex_activities(net, x)
    A, B = net.A, net.B
    f = np.zeros(net.n)
    for j in range(net.m):
        if act[j] == 0.0:
            continue
        for i in range(net.m):
            if i == j or A[i, j] == 0.0:
                continue
            f += A[i, j] * act[j] * (B[:, i] - B[:, j])
    return f


def velocity_factored(net: ReactionNetwork, x) -> np.ndarray:
    """Same vector field in factored matrix form B @ laplacian @ activities."""
    act = complex_activities(net, x)
    return net.B @ (laplacian(net) @ act)


def rate_split(net: ReactionNetwork, x, k: int) -> tuple[float, float]:
    """Split the k-th velocity component as alpha*theta_k(x_k) + beta.

    ``alpha`` collects the terms whose monomial contains theta_k (one factor
    divided out), ``beta`` the remaining strictly nonnegative inflow, so at
    x_k = 0 the component reduces to beta and points into the orthant.
    """
    x = net.check_state(x)
    if not 0 <= k < net.n:
        raise DomainError(f"species index {k} out of range")
    A, B = net.A, net.B
    th = [kin.theta(v) for kin, v in zip(net.kinetics, x)]
    alpha = 0.0
    beta = 0.0
    for j in range(net.m):
        coeff_a = sum(A[i, j] * (B[k, i] - B[k, j]) for i in range(net.m))
        coeff_b = sum(A[i, j] * B[k, i] for i in range(net.m))
        if B[k, j] >= 1.0:
            prod = 1.0
            for kk in range(net.n):
                b = B[kk, j] - 1.0 if kk == k else B[kk, j]
                if b != 0.0:
                    prod *= _power(th[kk], b)
            alpha += coeff_a * prod
        else:
            prod = 1.0
            for kk in range(net.n):
                b = B[kk, j]
                if b != 0.0:
                    prod *= _power(th[kk], b)
            beta += coeff_b * prod
    return alpha, beta


@dataclass(frozen=True)
class LogActivities:
    """Componentwise ln theta(x) with an explicit mask for the -inf entries.

    Keeping the zero set as a boolean mask (rather than IEEE -inf values)
    makes 0 * (-inf) impossible by construction; ``finite`` holds a
    placeholder 0.0 wherever ``zero`` is set.
    """

    finite: np.ndarray
    zero: np.ndarray

    def as_array(self) -> np.ndarray:
        """Materialize with -inf filled in (display / export only)."""
        out = self.finite.copy()
        out[self.zero] = -math.inf
        return out

    def exp_inner(self, b) -> float:
        """e**<b, rho> honoring e**-inf = 0 when the zero set meets supp(b)."""
        b = np.asarray(b, dtype=float)
        if (self.zero & (b > 0)).any():
            return 0.0
        return math.exp(float(b @ self.finite))


def log_activities(net: ReactionNetwork, x) -> LogActivities:
    """Vector of ln theta_i(x_i) with tagged -inf entries at zero coordinates."""
    x = net.check_state(x)
    zero = x == 0.0
    finite = np.zeros(net.n)
    for i in range(net.n):
        if not zero[i]:
            finite[i] = net.kinetics[i].rho(x[i])
    return LogActivities(finite, zero)


def rho_positive(net: ReactionNetwork, x) -> np.ndarray:
    """Plain ln theta(x) for strictly positive states (raises otherwise)."""
    x = net.check_state(x, positive=True)
    return np.array([kin.rho(v) for kin, v in zip(net.kinetics, x)])


def rho_prime_diag(net: ReactionNetwork, x) -> np.ndarray:
    x = net.check_state(x, positive=True)
    return np.array([kin.rho_prime(v) for kin, v in zip(net.kinetics, x)])


def rho_inverse(net: ReactionNetwork, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (net.n,):
        raise StructuralError(f"log-activity vector must have {net.n} components")
    return np.array([kin.rho_inv(v) for kin, v in zip(net.kinetics, z)])
