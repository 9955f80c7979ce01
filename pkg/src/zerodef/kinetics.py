"""Per-species rate laws.

Two families are built in: mass action (theta(y) = y, unbounded) and
Michaelis-Menten saturation (theta(y) = y/(K+y), bounded by 1).  Both are
strictly increasing on [0, inf) with theta(0) = 0, and both have
integrable log near 0, which is what the downstream entropy machinery needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

MASS_ACTION = "mass_action"
MICHAELIS_MENTEN = "michaelis_menten"


@dataclass(frozen=True)
class Kinetics:
    """A single species' rate law; immutable and hashable."""

    kind: str
    K: float = 0.0

    def __post_init__(self):
        if self.kind not in (MASS_ACTION, MICHAELIS_MENTEN):
            raise DomainError(f"unknown kinetics kind {self.kind!r}")
        if self.kind == MICHAELIS_MENTEN and not self.K > 0:
            raise DomainError("Michaelis-Menten constant must be positive")

    @staticmethod
    def mass_action() -> "Kinetics":
        return Kinetics(MASS_ACTION)

    @staticmethod
    def michaelis_menten(K: float) -> "Kinetics":
        return Kinetics(MICHAELIS_MENTEN, float(K))

    @property
    def log_sup(self) -> float:
        """ln of the supremum of theta: +inf for mass action, 0 for saturation."""
        return math.inf if self.kind == MASS_ACTION else 0.0

    def theta(self, y: float) -> float:
        if y < 0:
            raise DomainError("kinetics evaluated at a negative concentration")
        if self.kind == MASS_ACTION:
            return y
        return y / (self.K + y)

    def theta_prime(self, y: float) -> float:
        if self.kind == MASS_ACTION:
            return 1.0
        return self.K / (self.K + y) ** 2

    def rho(self, y: float) -> float:
        """ln theta(y) for y > 0."""
        if y <= 0:
            raise DomainError("log-activity undefined at the boundary")
        if self.kind == MASS_ACTION:
            return math.log(y)
        return math.log(y) - math.log(self.K + y)

    def rho_prime(self, y: float) -> float:
        """d/dy ln theta(y); strictly positive for y > 0."""
        if y <= 0:
            raise DomainError("log-activity derivative undefined at the boundary")
        if self.kind == MASS_ACTION:
            return 1.0 / y
        return self.K / (y * (self.K + y))

    def rho_inv(self, s: float) -> float:
        """Inverse of rho on (-inf, log_sup)."""
        if not s < self.log_sup:
            raise DomainError(
                f"log-activity target {s} is not below the saturation level"
            )
        if self.kind == MASS_ACTION:
            return math.exp(s)
        e = math.exp(s)
        return self.K * e / (1.0 - e)

    def entropy_term(self, r: float, c: float) -> float:
        """Integral of rho from 1 to r, minus c*r (closed form).

        Mass action: r ln r - r + 1 - c r, with 0 ln 0 = 0.
        Michaelis-Menten: the same bracket minus the (K+r)-bracket, shifted so
        the value at r = 1 stays 0 before the -c r term.
        """
        if r < 0:
            raise DomainError("entropy term evaluated at a negative concentration")
        xlogx = 0.0 if r == 0 else r * math.log(r)
        if self.kind == MASS_ACTION:
            return xlogx - r + 1.0 - c * r
        K = self.K
        bracket_r = xlogx - r - ((K + r) * math.log(K + r) - (K + r))
        bracket_1 = -1.0 - ((K + 1.0) * math.log(K + 1.0) - (K + 1.0))
        return bracket_r - bracket_1 - c * r

    def entropy_term_quad(self, r: float, c: float, tol: float = 1e-12) -> float:
        """Quadrature fallback for the entropy term (kept for future rate laws).

        Adaptive Simpson on rho over [min(1,r), max(1,r)]; the integrable
        singularity at 0 is handled by the closed antiderivative of ln near the
        endpoint, so we simply require r > 0 here.
        """
        if r <= 0:
            raise DomainError("quadrature route needs r > 0")
        if r == 1.0:
            return -c * r
        val = _adaptive_simpson(self.rho, min(1.0, r), max(1.0, r), tol)
        if r < 1.0:
            val = -val
        return val - c * r


def _adaptive_simpson(f, a, b, tol):
    fa, fb = f(a), f(b)
    mid = 0.5 * (a + b)
    fm = f(mid)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(f, a, b, fa, fb, fm, whole, tol, 50)


def _simpson_rec(f, a, b, fa, fb, fm, whole, tol, depth):
    mid = 0.5 * (a + b)
    lm, rm = 0.5 * (a + mid), 0.5 * (mid + b)
    flm, frm = f(lm), f(rm)
    left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    half = 0.5 * tol
    return _simpson_rec(f, a, mid, fa, fm, flm, left, half, depth - 1) + _simpson_rec(
        f, mid, b, fm, fb, frm, right, half, depth - 1
    )
