"""Pure numpy integration backend.

Reference implementation of the stepping loop; the compiled backend in
``speed.pyx`` mirrors it operation for operation.  Stage evaluations may see
slightly negative components (the embedded pair probes beyond the current
state), so rate laws are evaluated on |y|; accepted states are kept
nonnegative by step rejection, never by clamping.
"""

from __future__ import annotations

import math

import numpy as np

NAME = "purepy"

# Reached t_end / convergence detector fired / step size underflow (or cap).
REASON_T_END = 0
REASON_CONVERGED = 1
REASON_STEP_FAILURE = 2

# Dormand-Prince 4(5) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array(
    [
        [0, 0, 0, 0, 0, 0],
        [1 / 5, 0, 0, 0, 0, 0],
        [3 / 40, 9 / 40, 0, 0, 0, 0],
        [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    ]
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array(
    [
        71 / 57600,
        0.0,
        -71 / 16695,
        71 / 1920,
        -17253 / 339200,
        22 / 525,
        -1 / 40,
    ]
)


def _theta_vec(kind, param, x):
    y = np.abs(x)
    # the guard keeps the unused mass-action branch from dividing 0/0
    return np.where(kind == 0, y, y / np.maximum(param + y, 1e-300))


def _activities(B, th):
    # prod_k th_k**B[k,j] with 0**0 = 1; th >= 0 so a masked log/exp is exact
    # except at zeros, handled explicitly.
    m = B.shape[1]
    act = np.ones(m)
    for j in range(m):
        col = B[:, j]
        nz = col != 0.0
        vals = th[nz]
        if (vals == 0.0).any():
            act[j] = 0.0
            continue
        act[j] = math.exp(float(col[nz] @ np.log(vals)))
    return act


def _support_products(B, th):
    m = B.shape[1]
    out = np.empty(m)
    for j in range(m):
        out[j] = th[B[:, j] > 0.0].prod()
    return out


class _Problem:
    """Precompiled right-hand side f(x) + g(x)."""

    def __init__(
        self,
        B,
        BA,
        kin_kind,
        kin_param,
        pert_kind,
        BE,
        scale,
        rho_ref,
        c_ref,
        fb_idx,
        fb_gain,
        fb_target,
        g_hook,
    ):
        self.B = B
        self.BA = BA
        self.kind = kin_kind
        self.param = kin_param
        self.pert_kind = pert_kind
        self.BE = BE
        self.scale = scale
        self.rho_ref = rho_ref
        self.c_ref = c_ref
        self.fb_idx = fb_idx
        self.fb_gain = fb_gain
        self.fb_target = fb_target
        self.g_hook = g_hook
        self.m = B.shape[1]
        self.b_colsum = B.sum(axis=0)
        self.s_vec = B.sum(axis=1)

    def rhs(self, x):
        th = _theta_vec(self.kind, self.param, x)
        f = self.BA @ _activities(self.B, th)
        if self.pert_kind == 1:
            f = f + self.BE @ _support_products(self.B, th)
        elif self.pert_kind == 2:
            f = f + self._margin_g(x, th)
        if self.fb_idx.size:
            g = np.zeros_like(f)
            g[self.fb_idx] = self.fb_gain * (self.fb_target - x[self.fb_idx])
            f = f + g
        if self.g_hook is not None:
            f = f + np.asarray(self.g_hook(x), dtype=float)
        return f

    def _margin_g(self, x, th):
        # Uniform off-diagonal disturbance rescaled so its squared total is
        # exactly scale**2 times the certified budget 0.25*c**2*delta(x, ref).
        if (th <= 0.0).any():
            return 0.0
        q = self.B.T @ (np.log(th) - self.rho_ref)
        delta = 2.0 * self.m * float(q @ q) - 2.0 * float(q.sum()) ** 2
        if delta <= 0.0:
            return 0.0
        budget = 0.25 * self.c_ref * self.c_ref * delta
        P = _support_products(self.B, th)
        den = (self.m - 1) * float(P @ P)
        if den <= 0.0:
            return 0.0
        eta = self.scale * math.sqrt(budget / den)
        return eta * (self.s_vec * P.sum() - self.m * (self.B @ P))


def run_integration(
    B,
    BA,
    kin_kind,
    kin_param,
    x0,
    t_end,
    method,
    h_init,
    rtol,
    atol,
    h_max,
    pert_kind,
    BE,
    scale,
    rho_ref,
    c_ref,
    fb_idx,
    fb_gain,
    fb_target,
    conv_tol,
    conv_window,
    max_steps,
    g_hook=None,
):
    prob = _Problem(
        B,
        BA,
        kin_kind,
        kin_param,
        pert_kind,
        BE,
        scale,
        rho_ref,
        c_ref,
        fb_idx,
        fb_gain,
        fb_target,
        g_hook,
    )
    x = np.array(x0, dtype=float)
    n = x.size
    t = 0.0
    times = [0.0]
    states = [x.copy()]
    n_acc = 0
    n_rej = 0
    min_step = 1e-14 * t_end
    reason = REASON_T_END
    conv_run = 0
    h_nominal = h_init
    h = min(h_init, h_max, t_end)
    k1 = prob.rhs(x)
    k = np.empty((7, n))

    while t < t_end:
        h = min(h, h_max, t_end - t)
        if h < min_step:
            reason = REASON_STEP_FAILURE
            break
        if method == 0:
            # classic RK4
            k1s = k1
            k2s = prob.rhs(x + 0.5 * h * k1s)
            k3s = prob.rhs(x + 0.5 * h * k2s)
            k4s = prob.rhs(x + h * k3s)
            x_new = x + (h / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
            accept = True
        else:
            k[0] = k1
            for s in range(1, 6):
                xs = x + h * (k[:s].T @ _A[s, :s])
                k[s] = prob.rhs(xs)
            x_new = x + h * (k[:6].T @ _B5[:6])
            k[6] = prob.rhs(x_new)
            err = h * (k.T @ _E)
            sc = atol + rtol * np.maximum(np.abs(x), np.abs(x_new))
            err_norm = math.sqrt(float(np.mean((err / sc) ** 2)))
            accept = err_norm <= 1.0

        neg_floor = -1e-12 * (1.0 + float(np.linalg.norm(x)))
        if accept and float(x_new.min()) < neg_floor:
            n_rej += 1
            h *= 0.5
            continue
        if not accept:
            n_rej += 1
            h *= max(0.2, 0.9 * err_norm ** -0.2)
            continue

        t += h
        x = x_new
        times.append(t)
        states.append(x.copy())
        n_acc += 1
        if method == 0:
            h = h_nominal
            k1 = prob.rhs(x)
        else:
            # zero error estimate (exactly at an equilibrium) means max growth
            grow = 0.9 * err_norm ** -0.2 if err_norm > 0.0 else 5.0
            h *= min(5.0, max(0.2, grow))
            k1 = k[6]  # FSAL

        fnorm = float(np.linalg.norm(k1))
        if fnorm < conv_tol * (1.0 + float(np.linalg.norm(x))):
            conv_run += 1
            if conv_run >= conv_window:
                reason = REASON_CONVERGED
                break
        else:
            conv_run = 0
        if n_acc >= max_steps:
            reason = REASON_STEP_FAILURE
            break

    return np.array(times), np.array(states), reason, n_acc, n_rej
