"""Entropy distance, dissipation certificates, and robustness margins.

The per-species integrals of the log rate laws sum to a proper Lyapunov
function whose decay is certified by one inequality: the pairing of the
log-activity offset with the vector field is bounded by a negative multiple
of the imbalance plus a comparison term that vanishes at equilibria.  The
constants in that bound, and the perturbation budget they buy, are computed
here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleError, NumericalError
from .network import (
    ReactionNetwork,
    complex_activities,
    laplacian,
    rho_positive,
    rho_prime_diag,
    velocity,
)
from .equilibria import class_equilibrium, log_imbalance
from .stoichiometry import SubspaceBases, same_class, stoichiometric_bases

__all__ = [
    "CertificateReport",
    "entropy_distance",
    "lyapunov_value",
    "laplacian_gap",
    "min_activity",
    "dissipation_coeff",
    "comparison_field",
    "dissipation_margin",
    "dissipation_margin_batch",
    "robust_margin",
    "exponential_rate",
    "certify",
]

# Inner products beyond this in absolute value would overflow exp; the margin
# check reports out-of-range instead of producing infs.
EXP_GUARD = 500.0


def entropy_distance(net: ReactionNetwork, x, z) -> float:
    """Sum of per-species entropy integrals of x against the reference z > 0."""
    x = net.check_state(x)
    z = net.check_state(z, positive=True)
    return float(
        sum(
            kin.entropy_term(xi, kin.rho(zi))
            for kin, xi, zi in zip(net.kinetics, x, z)
        )
    )


def lyapunov_value(net: ReactionNetwork, x, x_bar) -> float:
    """Entropy distance to the equilibrium, shifted so its minimum is 0.

    Nonnegative, zero only at x_bar, with gradient equal to the log-activity
    offset at interior points.
    """
    return entropy_distance(net, x, x_bar) - entropy_distance(net, x_bar, x_bar)


def laplacian_gap(net: ReactionNetwork, with_direction: bool = False):
    """Largest constant comparing the rate-weighted pair form to the complete one.

    Both quadratic forms vanish exactly on the constants, so the bound is the
    smallest eigenvalue of the weighted form restricted to their complement,
    divided by 2m (the restricted complete form is 2m times the identity).
    Strictly positive whenever the reaction graph is strongly connected.
    """
    A = net.A
    m = net.m
    MQ = np.diag(A.sum(axis=1)) + np.diag(A.sum(axis=0)) - A - A.T
    ones = np.ones((1, m))
    _, _, vt = np.linalg.svd(ones)
    U = vt[1:].T  # orthonormal basis of the complement of span{1}
    evals, evecs = np.linalg.eigh(U.T @ MQ @ U)
    gap = float(evals[0]) / (2.0 * m)
    if gap <= 0 and gap > -1e-13:
        gap = abs(gap)
    if with_direction:
        return gap, U @ evecs[:, 0]
    return gap


def min_activity(net: ReactionNetwork, z) -> float:
    """Smallest complex activity at a positive state."""
    z = net.check_state(z, positive=True)
    return float(complex_activities(net, z).min())


def dissipation_coeff(net: ReactionNetwork, z, gap: float | None = None) -> float:
    """The coefficient multiplying the imbalance in the decay bound: gap * c0 / 2."""
    if gap is None:
        gap = laplacian_gap(net)
    return 0.5 * gap * min_activity(net, z)


def _pseudo_left_inverse(net: ReactionNetwork) -> np.ndarray:
    Bp = np.linalg.pinv(net.B)
    if np.abs(Bp @ net.B - np.eye(net.m)).max() > 1e-12:
        raise NumericalError("left inverse of the complex matrix is inaccurate")
    return Bp


def comparison_field(net: ReactionNetwork, sigma) -> np.ndarray:
    """The vector pairing to exp of the per-complex components of sigma.

    Satisfies <b_j, v(sigma)> = exp(<b_j, sigma>) for every complex j, which
    is what makes it the right comparison term in the decay inequality.
    """
    sigma = np.asarray(sigma, dtype=float)
    Bp = _pseudo_left_inverse(net)
    return Bp.T @ np.exp(net.B.T @ sigma)


def dissipation_margin(net: ReactionNetwork, x, z,
                       gap: float | None = None) -> float | None:
    """Slack in the decay inequality at the pair (x, z); None when out of range.

    Returns RHS - LHS of
        <offset, f(x)>  <=  -c(z) * imbalance(x, z) + <v(offset), f(z)>
    where offset is the log-activity difference.  Nonnegative up to roundoff
    for every pair of positive states.  Pairs whose per-complex inner
    products exceed the exp guard return None instead of overflowing.
    """
    x = net.check_state(x, positive=True)
    z = net.check_state(z, positive=True)
    sigma = rho_positive(net, x) - rho_positive(net, z)
    q = net.B.T @ sigma
    if np.abs(q).max() > EXP_GUARD:
        return None
    c = dissipation_coeff(net, z, gap)
    lhs = float(sigma @ velocity(net, x))
    rhs = -c * log_imbalance(net, x, z) + float(
        comparison_field(net, sigma) @ velocity(net, z)
    )
    return rhs - lhs


def dissipation_margin_batch(net: ReactionNetwork, X, Z,
                             gap: float | None = None) -> np.ndarray:
    """Vectorized margins over row-paired batches of positive states.

    Same quantity as :func:`dissipation_margin`; rows out of exp range come
    back as NaN.  Used for large certificate sweeps.
    """
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if X.ndim != 2 or X.shape != Z.shape or X.shape[1] != net.n:
        raise DomainError("batches must be matching (N, n) arrays")
    if (X <= 0).any() or (Z <= 0).any():
        raise DomainError("batch states must be strictly positive")
    if gap is None:
        gap = laplacian_gap(net)
    kinds = np.array([0 if k.kind == "mass_action" else 1 for k in net.kinetics])
    Ks = np.array([k.K for k in net.kinetics])

    def rho(M):
        theta = np.where(kinds == 0, M, M / (Ks + M))
        return np.log(theta)

    B = net.B
    BA = B @ laplacian(net)
    rho_x, rho_z = rho(X), rho(Z)
    sigma = rho_x - rho_z
    qx = rho_x @ B
    qz = rho_z @ B
    q = qx - qz
    out_of_range = np.abs(q).max(axis=1) > EXP_GUARD
    fx = np.exp(qx) @ BA.T
    fz = np.exp(qz) @ BA.T
    m = net.m
    delta = 2.0 * m * np.sum(q * q, axis=1) - 2.0 * q.sum(axis=1) ** 2
    c0 = np.exp(qz).min(axis=1)
    c = 0.5 * gap * c0
    Bp = _pseudo_left_inverse(net)
    v = np.exp(q) @ Bp
    lhs = np.sum(sigma * fx, axis=1)
    rhs = -c * delta + np.sum(v * fz, axis=1)
    margins = rhs - lhs
    margins[out_of_range] = np.nan
    return margins


def robust_margin(net: ReactionNetwork, x_bar, x,
                  bases: SubspaceBases | None = None,
                  gap: float | None = None) -> float:
    """Squared perturbation budget at x for the class of the equilibrium x_bar.

    The class-preserving disturbance total may spend up to this amount
    (squared) without losing stability; zero exactly at the equilibrium.
    """
    x_bar = net.check_state(x_bar, positive=True)
    x = net.check_state(x, positive=True)
    if not same_class(net, x_bar, x, bases):
        raise InfeasibleError("state does not lie in the equilibrium's class")
    c = dissipation_coeff(net, x_bar, gap)
    return 0.25 * c * c * log_imbalance(net, x, x_bar)


def exponential_rate(net: ReactionNetwork, x_bar,
                     bases: SubspaceBases | None = None,
                     gap: float | None = None,
                     samples: int = 200) -> tuple[float, float]:
    """Certified local decay rate of the Lyapunov value, with a validity radius.

    Rate = c(x_bar) * d2 * c1 / 2 where c1 is half the smallest curvature of
    the Lyapunov Hessian at the equilibrium and d2 half the squared
    singular-value bound comparing the imbalance to the squared class offset.
    The radius is found by shrinking a ball until sampled values of both the
    Lyapunov function and the imbalance match their quadratic models within a
    factor of two; the reported rate is an estimate valid inside that ball.
    """
    x_bar = net.check_state(x_bar, positive=True)
    if bases is None:
        bases = stoichiometric_bases(net)
    rp = rho_prime_diag(net, x_bar)
    c1 = 0.5 * float(rp.min())
    r_diag = np.sqrt(rp)
    gen = net.B[:, 1:] - net.B[:, [0]]
    W = r_diag[:, None] * gen
    RD = r_diag[:, None] * bases.D
    T, _ = np.linalg.qr(RD)
    sv = np.linalg.svd(W.T @ T, compute_uv=False)
    d0 = float(sv.min())
    d1 = float(r_diag.min())
    d2 = 0.5 * (d0 * d1) ** 2
    c = dissipation_coeff(net, x_bar, gap)
    rate = 0.5 * c * d2 * c1

    rng = np.random.default_rng(0)
    radius = 0.5 * float(x_bar.min())
    dim = bases.D.shape[1]
    for _ in range(60):
        ok = True
        for _ in range(samples):
            w = rng.normal(size=dim)
            w *= radius * rng.uniform(0.2, 1.0) / np.linalg.norm(w)
            u = bases.D @ w
            x = x_bar + u
            if (x <= 0).any():
                ok = False
                break
            v = lyapunov_value(net, x, x_bar)
            v_quad = 0.5 * float(u @ (rp * u))
            if not (0.5 * v_quad <= v <= 2.0 * v_quad):
                ok = False
                break
            if log_imbalance(net, x, x_bar) < d2 * float(u @ u):
                ok = False
                break
        if ok:
            break
        radius *= 0.5
    else:
        raise NumericalError("could not validate a quadratic neighborhood")
    return rate, radius


@dataclass(frozen=True)
class CertificateReport:
    """Certificate constants and inequality slack at one state of a class."""

    kappa: float
    c0_at: float
    c_at: float
    inequality_margin: float | None
    delta_S_at: float
    exp_rate: float
    exp_radius: float


def certify(net: ReactionNetwork, at, class_rep=None,
            bases: SubspaceBases | None = None) -> CertificateReport:
    """Assemble the certificate for the class of ``class_rep`` (default: of ``at``)."""
    at = net.check_state(at, positive=True)
    if bases is None:
        bases = stoichiometric_bases(net)
    rep = at if class_rep is None else class_rep
    eq = class_equilibrium(net, rep, bases=bases)
    if not same_class(net, at, eq.x, bases):
        raise InfeasibleError("state does not lie in the requested class")
    gap = laplacian_gap(net)
    if gap <= 0:
        raise NumericalError("connectivity gap must be positive")
    c0 = min_activity(net, eq.x)
    c = 0.5 * gap * c0
    rate, radius = exponential_rate(net, eq.x, bases, gap)
    return CertificateReport(
        kappa=gap,
        c0_at=c0,
        c_at=c,
        inequality_margin=dissipation_margin(net, at, eq.x, gap),
        delta_S_at=0.25 * c * c * log_imbalance(net, at, eq.x),
        exp_rate=rate,
        exp_radius=radius,
    )
