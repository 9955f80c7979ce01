# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration backend; mirrors purepy.py operation for operation.

Power conventions: r**0 = 1, 0**c = 0 for c > 0, small integer exponents
multiplied out.  Stage evaluations use |y| inside the rate laws because the
embedded pair probes slightly beyond the current state; accepted states are
kept nonnegative by step rejection in the caller loop below.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, pow, sqrt

cnp.import_array()

NAME = "speed"

REASON_T_END = 0
REASON_CONVERGED = 1
REASON_STEP_FAILURE = 2

# Dormand-Prince 4(5) tableau (flattened lower triangle rows 1..5).
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0
cdef double A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef inline double _theta(int kind, double K, double y) nogil:
    y = fabs(y)
    if kind == 0:
        return y
    return y / (K + y)


cdef inline double _powc(double r, double c) nogil:
    cdef int ci, i
    cdef double out
    if c == 0.0:
        return 1.0
    if r == 0.0:
        return 0.0
    ci = <int> c
    if c == ci and 1 <= ci <= 8:
        out = r
        for i in range(ci - 1):
            out *= r
        return out
    return exp(c * log(r))


cdef void _rhs(double[:, ::1] B, double[:, ::1] BA,
               int[::1] kind, double[::1] param,
               int pert_kind, double[:, ::1] BE, double scale,
               double[::1] rho_ref, double c_ref,
               long[::1] fb_idx, double[::1] fb_gain, double[::1] fb_target,
               double[::1] s_vec,
               double[::1] x, double[::1] th, double[::1] act, double[::1] P,
               double[::1] out) nogil:
    cdef int n = B.shape[0]
    cdef int m = B.shape[1]
    cdef int i, j, kk, ok
    cdef double a, b, qsum, qsq, qj, delta, budget, den, eta, psum

    for kk in range(n):
        th[kk] = _theta(kind[kk], param[kk], x[kk])
    for j in range(m):
        a = 1.0
        for kk in range(n):
            b = B[kk, j]
            if b != 0.0:
                a *= _powc(th[kk], b)
        act[j] = a
    for kk in range(n):
        a = 0.0
        for j in range(m):
            a += BA[kk, j] * act[j]
        out[kk] = a

    if pert_kind == 1:
        for j in range(m):
            a = 1.0
            for kk in range(n):
                if B[kk, j] > 0.0:
                    a *= th[kk]
            P[j] = a
        for kk in range(n):
            a = 0.0
            for j in range(m):
                a += BE[kk, j] * P[j]
            out[kk] += a
    elif pert_kind == 2:
        ok = 1
        for kk in range(n):
            if th[kk] <= 0.0:
                ok = 0
                break
        if ok:
            qsum = 0.0
            qsq = 0.0
            for j in range(m):
                qj = 0.0
                for kk in range(n):
                    b = B[kk, j]
                    if b != 0.0:
                        qj += b * (log(th[kk]) - rho_ref[kk])
                qsum += qj
                qsq += qj * qj
            delta = 2.0 * m * qsq - 2.0 * qsum * qsum
            if delta > 0.0:
                budget = 0.25 * c_ref * c_ref * delta
                psum = 0.0
                den = 0.0
                for j in range(m):
                    a = 1.0
                    for kk in range(n):
                        if B[kk, j] > 0.0:
                            a *= th[kk]
                    P[j] = a
                    psum += a
                    den += a * a
                den *= (m - 1)
                if den > 0.0:
                    eta = scale * sqrt(budget / den)
                    for kk in range(n):
                        a = 0.0
                        for j in range(m):
                            a += B[kk, j] * P[j]
                        out[kk] += eta * (s_vec[kk] * psum - m * a)

    for i in range(fb_idx.shape[0]):
        out[fb_idx[i]] += fb_gain[i] * (fb_target[i] - x[fb_idx[i]])


def run_integration(
    cnp.ndarray[double, ndim=2] B_in,
    cnp.ndarray[double, ndim=2] BA_in,
    cnp.ndarray[int, ndim=1] kin_kind,
    cnp.ndarray[double, ndim=1] kin_param,
    cnp.ndarray[double, ndim=1] x0,
    double t_end,
    int method,
    double h_init,
    double rtol,
    double atol,
    double h_max,
    int pert_kind,
    cnp.ndarray[double, ndim=2] BE_in,
    double scale,
    cnp.ndarray[double, ndim=1] rho_ref,
    double c_ref,
    cnp.ndarray[long, ndim=1] fb_idx,
    cnp.ndarray[double, ndim=1] fb_gain,
    cnp.ndarray[double, ndim=1] fb_target,
    double conv_tol,
    int conv_window,
    long max_steps,
    g_hook=None,
):
    if g_hook is not None:
        raise ValueError("compiled backend does not take python-level hooks")

    # inputs may be read-only views owned by the network; copy before viewing
    cdef double[:, ::1] B = np.array(B_in, dtype=np.float64, order="C")
    cdef double[:, ::1] BA = np.array(BA_in, dtype=np.float64, order="C")
    cdef double[:, ::1] BE = np.array(BE_in, dtype=np.float64, order="C")
    cdef int[::1] kind = np.ascontiguousarray(kin_kind)
    cdef double[::1] param = np.ascontiguousarray(kin_param)
    cdef double[::1] rho_ref_v = np.ascontiguousarray(rho_ref)
    cdef long[::1] fbi = np.ascontiguousarray(fb_idx)
    cdef double[::1] fbg = np.ascontiguousarray(fb_gain)
    cdef double[::1] fbt = np.ascontiguousarray(fb_target)

    cdef int n = B.shape[0]
    cdef int m = B.shape[1]
    cdef double[::1] s_vec = np.ascontiguousarray(B_in.sum(axis=1))

    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef double[::1] th = np.empty(n)
    cdef double[::1] act = np.empty(m)
    cdef double[::1] P = np.empty(m)
    cdef double[::1] k1 = np.empty(n)
    cdef double[::1] k2 = np.empty(n)
    cdef double[::1] k3 = np.empty(n)
    cdef double[::1] k4 = np.empty(n)
    cdef double[::1] k5 = np.empty(n)
    cdef double[::1] k6 = np.empty(n)
    cdef double[::1] k7 = np.empty(n)
    cdef double[::1] xs = np.empty(n)
    cdef double[::1] x_new = np.empty(n)

    cdef long cap = 4096
    times_arr = np.empty(cap)
    states_arr = np.empty((cap, n))
    cdef double[::1] times = times_arr
    cdef double[:, ::1] states = states_arr

    cdef double t = 0.0
    cdef long n_acc = 0, n_rej = 0, rec = 1
    cdef int reason = REASON_T_END
    cdef int conv_run = 0
    cdef double h_nominal = h_init
    cdef double h = h_init
    if h > h_max:
        h = h_max
    if h > t_end:
        h = t_end
    cdef double min_step = 1e-14 * t_end
    cdef int i, accept
    cdef double err_norm, sc, e, neg_floor, xnorm, fnorm, xmin, factor

    times[0] = 0.0
    for i in range(n):
        states[0, i] = x[i]

    _rhs(B, BA, kind, param, pert_kind, BE, scale, rho_ref_v, c_ref,
         fbi, fbg, fbt, s_vec, x, th, act, P, k1)

    while t < t_end:
        if h > h_max:
            h = h_max
        if t_end - t < h:
            h = t_end - t
        if h < min_step:
            reason = REASON_STEP_FAILURE
            break

        err_norm = 0.0
        if method == 0:
            for i in range(n):
                xs[i] = x[i] + 0.5 * h * k1[i]
            _rhs(B, BA, kind, param, pert_kind, BE, scale, rho_ref_v, c_ref,
                 fbi, fbg, fbt, s_vec, xs, th, act, P, k2)
            for i in range(n):
                xs[i] = x[i] + 0.5 * h * k2[i]
            _rhs(B, BA, kind, param, pert_kind, BE, scale, rho_ref_v, c_ref,
                 fbi, fbg, fbt, s_vec, xs, th, act, P, k3)
            for i in range(n):
                xs[i] = x[i] + h * k3[i]
            _rhs(B, BA, kind, param, pert_kind, BE, scale, rho_ref_v, c_ref,
                 fbi, fbg, fbt, s_vec, xs, th, act, P, k4)
            for i in range(n):
                x_new[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            accept = 1
        else:
            for i in range(n):
                xs[i] = x[i] + h * A21 * k1[i]
            _rhs(B, BA, kind, param, pert_kind, BE, scale, rho_ref_v, c_ref,
                 fbi, fbg, fbt, s_vec, xs, th, act, P, k2)
            for i in range(n):
                xs[i] = x[i] + h * (A31 * k1[i] + A32 * k2[i])
            _rhs(B, BA, kind, param, pert_kind, BE, scale, rho_ref_v, c_ref,
                 fbi, fbg, fbt, s_vec, xs, th, act, P, k3)
            for i in range(n):
                xs[i] = x[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            _rhs(B, BA, kind, param, pert_kind, BE, scale, rho_ref_v, c_ref,
                 fbi, fbg, fbt, s_vec, xs, th, act, P, k4)
            for i in range(n):
                xs[i] = x[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            _rhs(B, BA, kind, param, pert_kind, BE, scale, rho_ref_v, c_ref,
                 fbi, fbg, fbt, s_vec, xs, th, act, P, k5)
            for i in range(n):
                xs[i] = x[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                    + A64 * k4[i] + A65 * k5[i])
            _rhs(B, BA, kind, param, pert_kind, BE, scale, rho_ref_v, c_ref,
                 fbi, fbg, fbt, s_vec, xs, th, act, P, k6)
            for i in range(n):
                x_new[i] = x[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                       + B5 * k5[i] + B6 * k6[i])
            _rhs(B, BA, kind, param, pert_kind, BE, scale, rho_ref_v, c_ref,
                 fbi, fbg, fbt, s_vec, x_new, th, act, P, k7)
            err_norm = 0.0
            for i in range(n):
                e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i]
                         + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                sc = atol + rtol * (fabs(x[i]) if fabs(x[i]) > fabs(x_new[i]) else fabs(x_new[i]))
                err_norm += (e / sc) * (e / sc)
            err_norm = sqrt(err_norm / n)
            accept = 1 if err_norm <= 1.0 else 0

        if accept:
            xnorm = 0.0
            for i in range(n):
                xnorm += x[i] * x[i]
            neg_floor = -1e-12 * (1.0 + sqrt(xnorm))
            xmin = x_new[0]
            for i in range(1, n):
                if x_new[i] < xmin:
                    xmin = x_new[i]
            if xmin < neg_floor:
                n_rej += 1
                h *= 0.5
                continue
        if not accept:
            n_rej += 1
            factor = 0.9 * pow(err_norm, -0.2)
            if factor < 0.2:
                factor = 0.2
            h *= factor
            continue

        t += h
        for i in range(n):
            x[i] = x_new[i]
        if rec >= cap:
            cap *= 2
            times_arr = np.resize(times_arr, cap)
            new_states = np.empty((cap, n))
            new_states[:rec] = states_arr[:rec]
            states_arr = new_states
            times = times_arr
            states = states_arr
        times[rec] = t
        for i in range(n):
            states[rec, i] = x[i]
        rec += 1
        n_acc += 1

        if method == 0:
            h = h_nominal
            _rhs(B, BA, kind, param, pert_kind, BE, scale, rho_ref_v, c_ref,
                 fbi, fbg, fbt, s_vec, x, th, act, P, k1)
        else:
            factor = 0.9 * pow(err_norm, -0.2)
            if factor < 0.2:
                factor = 0.2
            elif factor > 5.0:
                factor = 5.0
            h *= factor
            for i in range(n):
                k1[i] = k7[i]  # FSAL

        fnorm = 0.0
        xnorm = 0.0
        for i in range(n):
            fnorm += k1[i] * k1[i]
            xnorm += x[i] * x[i]
        if sqrt(fnorm) < conv_tol * (1.0 + sqrt(xnorm)):
            conv_run += 1
            if conv_run >= conv_window:
                reason = REASON_CONVERGED
                break
        else:
            conv_run = 0
        if n_acc >= max_steps:
            reason = REASON_STEP_FAILURE
            break

    return (
        times_arr[:rec].copy(),
        states_arr[:rec].copy(),
        reason,
        n_acc,
        n_rej,
    )
