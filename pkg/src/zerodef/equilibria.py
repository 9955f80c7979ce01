"""Interior and boundary equilibria, the class projection, and global coordinates.

The unique positive kernel direction of the network Laplacian pins down all
interior equilibria: a positive state is an equilibrium iff its activity
vector lies on that ray.  Every class that meets the open orthant carries
exactly one of them, computed here by a damped Newton iteration on the
mixed linear / log-activity system that characterizes it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleError, NumericalError
from .network import (
    ReactionNetwork,
    complex_activities,
    laplacian,
    rho_inverse,
    rho_positive,
    rho_prime_diag,
    support_set,
    velocity,
)
from .stoichiometry import (
    ClassId,
    SubspaceBases,
    class_of,
    positive_witness,
    stoichiometric_bases,
)
from . import simplex

__all__ = [
    "PerronVector",
    "Equilibrium",
    "CoordinateChart",
    "positive_kernel",
    "base_equilibrium",
    "log_imbalance",
    "log_imbalance_strict",
    "project_to_class",
    "class_equilibrium",
    "is_boundary_equilibrium",
    "class_has_boundary_equilibria",
    "equilibrium_manifold_point",
    "coordinate_chart",
    "homogeneity_check",
]


@dataclass(frozen=True)
class PerronVector:
    """Positive kernel direction of the Laplacian, max component scaled to 1."""

    y: np.ndarray
    residual: float


@dataclass(frozen=True)
class Equilibrium:
    """A positive equilibrium state with its velocity residual and class tag."""

    x: np.ndarray
    residual: float
    class_id: ClassId


def _residual_scale(net: ReactionNetwork, x) -> float:
    act = complex_activities(net, x)
    return 1.0 + float(np.abs(net.A).sum()) * float(np.abs(act).max(initial=0.0))


def positive_kernel(net: ReactionNetwork, tol: float = 1e-14,
                    max_iters: int = 100_000) -> PerronVector:
    """Power iteration for the positive kernel vector of the Laplacian.

    Shifts by 1 + the largest column absolute sum, which makes the iteration
    matrix nonnegative with positive diagonal (hence primitive), so the
    iteration converges to the unique positive kernel direction.
    """
    L = laplacian(net)
    m = net.m
    gamma = 1.0 + float(np.abs(L).sum(axis=0).max())
    M = L + gamma * np.eye(m)
    v = np.full(m, 1.0 / m)
    for _ in range(max_iters):
        w = M @ v
        w /= w.max()
        if float(np.abs(w - v).max()) < tol:
            v = w
            break
        v = w
    else:
        raise NumericalError(
            f"power iteration did not converge in {max_iters} iterations; "
            f"last iterate {v.tolist()}"
        )
    y = v / v.max()
    # max-abs norms: squaring would underflow for extreme rate scales and
    # turn the gate into 0 >= 0
    residual = float(np.abs(L @ y).max())
    if residual >= 1e-12 * np.abs(L).max():
        raise NumericalError(
            f"kernel residual {residual:.3e} exceeds 1e-12 of the largest "
            f"rate; the iteration stalled (degenerate rate scales?)"
        )
    return PerronVector(y, residual)


def _homogeneity_witness(net: ReactionNetwork) -> np.ndarray | None:
    """q > 0 with B.T @ q = all-ones, or None; strict margin enforced by LP."""
    B = net.B
    n, m = net.n, net.m
    # Variables: u (n, >=0), t+ , t-, cap slack; q = u + t*1.
    bt1 = B.sum(axis=0)
    A = np.zeros((m + 1, n + 3))
    b = np.zeros(m + 1)
    A[:m, :n] = B.T
    A[:m, n] = bt1
    A[:m, n + 1] = -bt1
    b[:m] = 1.0
    A[m, n] = 1.0
    A[m, n + 1] = -1.0
    A[m, n + 2] = 1.0
    b[m] = 1.0
    c = np.zeros(n + 3)
    c[n] = 1.0
    c[n + 1] = -1.0
    res = simplex.maximize(c, A, b)
    if res.status != "optimal" or res.value <= 1e-9:
        return None
    t = res.x[n] - res.x[n + 1]
    return res.x[:n] + t


def homogeneity_check(net: ReactionNetwork) -> bool:
    """True iff the all-ones vector is hit by B.T on the open positive orthant.

    Holds in particular whenever the complexes all have the same total
    weight; it certifies equilibrium existence for saturating kinetics.
    """
    return _homogeneity_witness(net) is not None


def base_equilibrium(net: ReactionNetwork,
                     bases: SubspaceBases | None = None) -> Equilibrium:
    """One positive equilibrium, from the minimum-norm log-activity solve.

    Solves B.T @ z = ln(kernel vector) for the minimum-norm z and inverts the
    log-activities componentwise.  Saturating kinetics bound the admissible z
    from above; if the solve lands outside that box, the kernel ray is
    rescaled using a homogeneity witness when one exists, otherwise no
    equilibrium is constructed and the request is infeasible.
    """
    kern = positive_kernel(net)
    target = np.log(kern.y)
    z, *_ = np.linalg.lstsq(net.B.T, target, rcond=None)
    sup = np.array([k.log_sup for k in net.kinetics])
    if not (z < sup).all():
        w = _homogeneity_witness(net)
        if w is None:
            raise InfeasibleError(
                "no equilibrium constructed: kinetics saturate below the "
                "required activities and no positive uniform-weighting "
                "witness exists (see homogeneity_check)"
            )
        bounded = np.isfinite(sup)
        shift = float(((sup[bounded] - z[bounded]) / w[bounded]).min()) - 1.0
        z = z + shift * w
    x_bar = rho_inverse(net, z)
    residual = float(np.linalg.norm(velocity(net, x_bar)))
    if residual >= 1e-9 * _residual_scale(net, x_bar):
        raise NumericalError(f"constructed equilibrium has residual {residual}")
    return Equilibrium(x_bar, residual, class_of(net, x_bar, bases))


def log_imbalance(net: ReactionNetwork, x, z) -> float:
    """Squared pairings of the log-activity difference with all complex gaps.

    Zero exactly when ln-activity(x) - ln-activity(z) is orthogonal to the
    difference space; in particular zero against a positive equilibrium iff
    x is itself an equilibrium.  Both arguments must be strictly positive.
    """
    drho = rho_positive(net, x) - rho_positive(net, z)
    g = net.B.T @ drho
    total = 0.0
    for i in range(net.m):
        for j in range(net.m):
            d = g[i] - g[j]
            total += d * d
    return float(total)


def log_imbalance_strict(net: ReactionNetwork, x, z,
                         bases: SubspaceBases | None = None) -> float:
    """Generator form of the imbalance plus the class offset; zero iff x = z."""
    x = net.check_state(x, positive=True)
    z = net.check_state(z, positive=True)
    if bases is None:
        bases = stoichiometric_bases(net)
    drho = rho_positive(net, x) - rho_positive(net, z)
    diffs = net.B[:, 1:] - net.B[:, [0]]
    gen = diffs.T @ drho
    return float(gen @ gen) + float(np.sum((bases.Dperp.T @ (x - z)) ** 2))


def project_to_class(net: ReactionNetwork, p, q,
                     bases: SubspaceBases | None = None,
                     max_iters: int = 200) -> np.ndarray:
    """The unique positive x in p's class whose log-activity offset from q
    is orthogonal to the difference space.

    Damped Newton on the stacked system (complement coordinates of x match
    p's, difference-space coordinates of the log activities match q's), with
    backtracking that keeps every iterate strictly positive.  ``p`` may lie
    outside the orthant as long as its class has a positive point.
    """
    q = net.check_state(q, positive=True)
    p = np.asarray(p, dtype=float)
    if bases is None:
        bases = stoichiometric_bases(net)
    V, W = bases.Dperp, bases.D

    target_v = V.T @ p
    target_w = W.T @ rho_positive(net, q)

    def G(x):
        return np.concatenate([V.T @ x - target_v, W.T @ rho_positive(net, x) - target_w])

    starts = [q]
    if (p > 0).all():
        starts.append(p)
    else:
        d = positive_witness(net, p, bases)
        if d is None:
            raise InfeasibleError("the point's class contains no positive state")
        starts.append(p + d)
    starts.sort(key=lambda s: np.linalg.norm(G(s)))

    tol = 1e-12 * (1.0 + float(np.linalg.norm(p)) + float(np.linalg.norm(target_w)))
    last_err: NumericalError | None = None
    for x0 in starts:
        x = x0.copy()
        gx = G(x)
        ok = True
        for _ in range(max_iters):
            norm_g = np.linalg.norm(gx)
            if norm_g < tol:
                break
            J = np.vstack([V.T, W.T * rho_prime_diag(net, x)[None, :]])
            try:
                dx = np.linalg.solve(J, -gx)
            except np.linalg.LinAlgError:
                ok = False
                last_err = NumericalError("singular Newton system")
                break
            lam = 1.0
            while True:
                x_new = x + lam * dx
                if (x_new > 0).all():
                    g_new = G(x_new)
                    if np.linalg.norm(g_new) <= (1.0 - 1e-4 * lam) * norm_g:
                        break
                lam *= 0.5
                if lam < 1e-14:
                    ok = False
                    last_err = NumericalError("Newton stagnation")
                    break
            if not ok:
                break
            x, gx = x_new, g_new
        else:
            ok = np.linalg.norm(gx) < tol
            if not ok:
                last_err = NumericalError(
                    f"Newton did not converge in {max_iters} iterations"
                )
        if ok and np.linalg.norm(gx) < tol:
            drift = np.linalg.norm(V.T @ (x - p))
            if drift >= 1e-8 * (1.0 + np.linalg.norm(p)):
                raise NumericalError(f"class drift {drift} after projection")
            return x
    raise last_err or NumericalError("projection failed")


def class_equilibrium(net: ReactionNetwork, p,
                      x_bar: np.ndarray | None = None,
                      bases: SubspaceBases | None = None) -> Equilibrium:
    """The unique positive equilibrium in p's class; idempotent.

    ``x_bar`` may supply any known positive equilibrium to avoid recomputing
    the base one.
    """
    if bases is None:
        bases = stoichiometric_bases(net)
    if x_bar is None:
        x_bar = base_equilibrium(net, bases).x
    x = project_to_class(net, p, x_bar, bases)
    residual = float(np.linalg.norm(velocity(net, x)))
    if residual >= 1e-9 * _residual_scale(net, x):
        raise NumericalError(f"class equilibrium residual {residual}")
    return Equilibrium(x, residual, class_of(net, np.maximum(x, 0.0), bases))


def is_boundary_equilibrium(net: ReactionNetwork, x) -> bool:
    """Combinatorial test: every complex has a support species at zero.

    Equivalent to membership in the boundary equilibrium set; zero detection
    uses the relative threshold 1e-12 * (1 + |x|).
    """
    x = net.check_state(x)
    thr = 1e-12 * (1.0 + float(np.linalg.norm(x)))
    zero = x <= thr
    return all(any(zero[k] for k in support_set(net, j)) for j in range(net.m))


class _HitCapExceeded(Exception):
    pass


def _minimal_hitting_sets(sets: list[frozenset[int]], cap: int):
    """All inclusion-minimal hitting sets of the family, depth-first.

    Raises _HitCapExceeded when more than ``cap`` partial candidates are
    examined.
    """
    results: list[frozenset[int]] = []
    counter = 0

    def rec(partial: frozenset[int], remaining):
        nonlocal counter
        counter += 1
        if counter > cap:
            raise _HitCapExceeded
        unhit = [s for s in remaining if not (s & partial)]
        if not unhit:
            for z in partial:
                rem = partial - {z}
                if all(s & rem for s in sets):
                    return  # not minimal
            if partial not in results:
                results.append(partial)
            return
        first = min(unhit, key=len)
        for z in sorted(first):
            rec(partial | {z}, unhit)

    rec(frozenset(), sets)
    return results


def class_has_boundary_equilibria(
    net: ReactionNetwork,
    cls: ClassId,
    bases: SubspaceBases | None = None,
    cap: int = 10**6,
) -> tuple[bool | None, np.ndarray | None]:
    """Decide whether a positive class touches the boundary equilibrium set.

    Enumerates minimal hitting sets of the support families and tests, for
    each, nonnegative feasibility of the class constraints with those species
    pinned to zero.  Returns (True, witness), (False, None), or
    (None, None) when the enumeration cap is exceeded (undecided).
    """
    if bases is None:
        bases = stoichiometric_bases(net)
    if positive_witness(net, cls.representative, bases) is None:
        raise InfeasibleError("class has no positive point")
    sets = [frozenset(support_set(net, j)) for j in range(net.m)]
    try:
        hitting = _minimal_hitting_sets(sets, cap)
    except _HitCapExceeded:
        return None, None
    coords = np.array(cls.coords)
    for Z in sorted(hitting, key=lambda s: (len(s), sorted(s))):
        keep = [k for k in range(net.n) if k not in Z]
        sol = simplex.feasible_nonneg(bases.Dperp.T[:, keep], coords)
        if sol is not None:
            witness = np.zeros(net.n)
            witness[keep] = sol
            return True, witness
    return False, None


def equilibrium_manifold_point(net: ReactionNetwork, x_bar, y,
                               bases: SubspaceBases | None = None) -> np.ndarray:
    """Map a complement-space log offset onto the positive equilibrium set.

    ``y`` must be orthogonal to the difference space (checked); the image is
    the state whose log activities are those of ``x_bar`` shifted by ``y``.
    """
    x_bar = net.check_state(x_bar, positive=True)
    y = np.asarray(y, dtype=float)
    if bases is None:
        bases = stoichiometric_bases(net)
    if np.linalg.norm(bases.D.T @ y) > 1e-10 * (1.0 + np.linalg.norm(y)):
        raise DomainError("offset is not orthogonal to the difference space")
    x = rho_inverse(net, y + rho_positive(net, x_bar))
    residual = float(np.linalg.norm(velocity(net, x)))
    if residual >= 1e-8 * _residual_scale(net, x):
        raise NumericalError(f"manifold point residual {residual}")
    return x


@dataclass(frozen=True)
class CoordinateChart:
    """Global coordinates splitting state space into class offset and class label.

    ``apply`` returns (X1, X2): X1 the difference-space coordinates of
    x - equilibrium(x), zero exactly on the equilibrium manifold, and X2 the
    complement coordinates of the equilibrium's log-activity offset from the
    base equilibrium, constant along every trajectory.
    """

    net: ReactionNetwork
    bases: SubspaceBases
    x_bar: np.ndarray
    rho_bar: np.ndarray

    def apply(self, x) -> tuple[np.ndarray, np.ndarray]:
        pi_x = project_to_class(self.net, x, self.x_bar, self.bases)
        X1 = self.bases.D.T @ (np.asarray(x, dtype=float) - pi_x)
        X2 = self.bases.Dperp.T @ (rho_positive(self.net, pi_x) - self.rho_bar)
        return X1, X2


def coordinate_chart(net: ReactionNetwork) -> CoordinateChart:
    bases = stoichiometric_bases(net)
    eq = base_equilibrium(net, bases)
    return CoordinateChart(net, bases, eq.x, rho_positive(net, eq.x))
