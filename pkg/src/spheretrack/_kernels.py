"""Compiled RK4 loops for the constant-sigma systems.

These mirror :func:`spheretrack.dynamics.system_rhs` and
:func:`spheretrack.frame.coupled_rhs` term by term; the test-suite checks the
two agree to roundoff.  The raw target control is supplied pre-sampled on the
half-step grid ``t0 + k*dt/2`` so arbitrary Python callables can drive it.
"""

import numpy as np
from numba import njit

OK = 0
NON_FINITE = 1
BLOWUP = 2
ANTIPODAL = 3


@njit(cache=True, inline="always")
def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(cache=True)
def _cross(a, b, out):
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


@njit(cache=True)
def _target_and_angular(qg, pg, u, dpg, w, dw):
    qq = _dot(qg, qg)
    pp = _dot(pg, pg)
    uq = _dot(u, qg)
    U = np.empty(3)
    for k in range(3):
        U[k] = qq * u[k] - uq * qg[k]
        dpg[k] = -pp / qq * qg[k] + U[k]
    _cross(qg, pg, w)
    _cross(qg, U, dw)


@njit(cache=True)
def _agent_forces(q, p, qg, pg, w, dw, sigma, c_q, c_p, psi, k0, full_info, dp,
                  align_pg):
    """dp for every agent.  q, p, dp have shape (N, 3)."""
    n = q.shape[0]
    tmp = np.empty(3)
    tmp2 = np.empty(3)
    for i in range(n):
        qi = q[i]
        pi = p[i]
        qq = _dot(qi, qi)
        pp = _dot(pi, pi)
        for k in range(3):
            dp[i, k] = -pp / qq * qi[k]
        # cooperative
        for j in range(n):
            gij = _dot(qi, q[j])
            for k in range(3):
                dp[i, k] += sigma / n * (qq * q[j, k] - gij * qi[k])
        # bonding
        gig = _dot(qi, qg)
        for k in range(3):
            dp[i, k] += c_q * (qq * qg[k] - gig * qi[k])
        # alignment with P_{q_gamma -> q_i}(p_gamma)
        if align_pg:
            qgpg = _dot(qg, pg)
            qipg = _dot(qi, pg)
            for k in range(3):
                dp[i, k] += c_p * (gig * pg[k] + qi[k] * qgpg - qg[k] * qipg - pi[k])
        else:
            for k in range(3):
                dp[i, k] += -c_p * pi[k]
        if full_info:
            wq = _dot(w, qi)
            _cross(qi, pi, tmp)
            _cross(dw, qi, tmp2)
            for k in range(3):
                dp[i, k] += 2.0 * wq * tmp[k] + tmp2[k] - wq * (qq * w[k] - wq * qi[k])
        if psi > 0.0:
            for j in range(n):
                if j == i:
                    continue
                qj = q[j]
                pj = p[j]
                c = _dot(qj, qi)
                s2 = 0.0
                for k in range(3):
                    s2 += (qj[k] + qi[k]) ** 2
                if s2 < 1e-16:
                    return False
                _cross(qj, qi, tmp)
                a1 = _dot(qj, pj)
                a2 = _dot(qi, pj)
                a3 = _dot(tmp, pj) / (1.0 + c)
                for k in range(3):
                    dp[i, k] += psi / n * (c * pj[k] + qi[k] * a1 - qj[k] * a2
                                           + tmp[k] * a3 - pi[k])
        if k0 > 0.0:
            r = np.sqrt(qq)
            for k in range(3):
                dp[i, k] += -k0 * (qi[k] - qi[k] / r)
    return True


@njit(cache=True)
def ambient_rhs(y, u, n, sigma, c_q, c_p, psi, k0, full_info, with_frame, out):
    qg = y[0:3]
    pg = y[3:6]
    q = y[6:6 + 3 * n].reshape((n, 3))
    p = y[6 + 3 * n:6 + 6 * n].reshape((n, 3))
    w = np.empty(3)
    dw = np.empty(3)
    dpg = np.empty(3)
    _target_and_angular(qg, pg, u, dpg, w, dw)
    out[0:3] = pg
    out[3:6] = dpg
    out[6:6 + 3 * n] = y[6 + 3 * n:6 + 6 * n]
    dp = out[6 + 3 * n:6 + 6 * n].reshape((n, 3))
    ok = _agent_forces(q, p, qg, pg, w, dw, sigma, c_q, c_p, psi, k0, full_info, dp, True)
    if with_frame:
        S = y[6 + 6 * n:15 + 6 * n].reshape((3, 3))
        dS = out[6 + 6 * n:15 + 6 * n].reshape((3, 3))
        _skew_times(w, S, dS)
    return ok


@njit(cache=True)
def _skew_times(w, S, dS):
    for c in range(3):
        dS[0, c] = -w[2] * S[1, c] + w[1] * S[2, c]
        dS[1, c] = w[2] * S[0, c] - w[0] * S[2, c]
        dS[2, c] = -w[1] * S[0, c] + w[0] * S[1, c]


@njit(cache=True)
def structural_rhs(y, u, n, sigma, c_q, c_p, full_info, x_gamma, out):
    """Layout: q_gamma, p_gamma, S (9), x (3N), v (3N)."""
    qg = y[0:3]
    pg = y[3:6]
    S = y[6:15].reshape((3, 3))
    x = y[15:15 + 3 * n].reshape((n, 3))
    v = y[15 + 3 * n:15 + 6 * n].reshape((n, 3))
    w = np.empty(3)
    dw = np.empty(3)
    dpg = np.empty(3)
    _target_and_angular(qg, pg, u, dpg, w, dw)
    out[0:3] = pg
    out[3:6] = dpg
    _skew_times(w, S, out[6:15].reshape((3, 3)))
    out[15:15 + 3 * n] = y[15 + 3 * n:15 + 6 * n]
    dv = out[15 + 3 * n:15 + 6 * n].reshape((n, 3))
    # structural system = ambient forces with w = dw = 0, x_gamma fixed, no P transport
    zero = np.zeros(3)
    _agent_forces(x, v, x_gamma, zero, zero, zero, sigma, c_q, c_p, 0.0, 0.0, False, dv, False)
    if not full_info:
        # A_i = -S^T U1_i
        q = np.empty(3)
        p = np.empty(3)
        tmp = np.empty(3)
        tmp2 = np.empty(3)
        for i in range(n):
            for r in range(3):
                q[r] = S[r, 0] * x[i, 0] + S[r, 1] * x[i, 1] + S[r, 2] * x[i, 2]
            _cross(w, q, tmp)
            for r in range(3):
                p[r] = tmp[r] + S[r, 0] * v[i, 0] + S[r, 1] * v[i, 1] + S[r, 2] * v[i, 2]
            wq = _dot(w, q)
            qq = _dot(q, q)
            _cross(q, p, tmp)
            _cross(dw, q, tmp2)
            for r in range(3):
                tmp[r] = 2.0 * wq * tmp[r] + tmp2[r] - wq * (qq * w[r] - wq * q[r])
            for c in range(3):
                dv[i, c] -= S[0, c] * tmp[0] + S[1, c] * tmp[1] + S[2, c] * tmp[2]
    return True


@njit(cache=True)
def _orthonormalize(S):
    # S <- S (3I - S^T S) / 2
    StS = S.T @ S
    M = -StS
    for k in range(3):
        M[k, k] += 3.0
    return 0.5 * (S @ M)


@njit(cache=True)
def _renormalize_pairs(y, offset_q, offset_p, n):
    for i in range(n):
        qi = y[offset_q + 3 * i:offset_q + 3 * i + 3]
        pi = y[offset_p + 3 * i:offset_p + 3 * i + 3]
        r = np.sqrt(_dot(qi, qi))
        for k in range(3):
            qi[k] /= r
        a = _dot(pi, qi)
        for k in range(3):
            pi[k] -= a * qi[k]


@njit(cache=True, nogil=True)
def integrate_ambient(y0, dt, nsteps, u_grid, n, sigma, c_q, c_p, psi, k0, full_info,
                      with_frame, record_every, renormalize, blowup_tol):
    """Returns (records, n_recorded, status, failed_step)."""
    m = y0.shape[0]
    nrec = nsteps // record_every + 1
    rec = np.empty((nrec, m))
    y = y0.copy()
    rec[0] = y
    r = 1
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    ys = np.empty(m)
    for step in range(nsteps):
        ua = u_grid[2 * step]
        ub = u_grid[2 * step + 1]
        uc = u_grid[2 * step + 2]
        ok = ambient_rhs(y, ua, n, sigma, c_q, c_p, psi, k0, full_info, with_frame, k1)
        ys[:] = y + 0.5 * dt * k1
        ok &= ambient_rhs(ys, ub, n, sigma, c_q, c_p, psi, k0, full_info, with_frame, k2)
        ys[:] = y + 0.5 * dt * k2
        ok &= ambient_rhs(ys, ub, n, sigma, c_q, c_p, psi, k0, full_info, with_frame, k3)
        ys[:] = y + dt * k3
        ok &= ambient_rhs(ys, uc, n, sigma, c_q, c_p, psi, k0, full_info, with_frame, k4)
        if not ok:
            return rec, r, ANTIPODAL, step
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if with_frame:
            S = y[6 + 6 * n:15 + 6 * n].reshape((3, 3))
            y[6 + 6 * n:15 + 6 * n] = _orthonormalize(S).ravel()
        if renormalize:
            _renormalize_pairs(y, 0, 3, 1)
            _renormalize_pairs(y, 6, 6 + 3 * n, n)
        for k in range(m):
            if not np.isfinite(y[k]):
                return rec, r, NON_FINITE, step
        drift = 0.0
        for i in range(n):
            qi = y[6 + 3 * i:9 + 3 * i]
            d = abs(np.sqrt(_dot(qi, qi)) - 1.0)
            if d > drift:
                drift = d
        if drift > blowup_tol:
            if (step + 1) % record_every == 0:
                rec[r] = y
                r += 1
            return rec, r, BLOWUP, step
        if (step + 1) % record_every == 0:
            rec[r] = y
            r += 1
    return rec, r, OK, nsteps


@njit(cache=True, nogil=True)
def integrate_structural(y0, dt, nsteps, u_grid, n, sigma, c_q, c_p, full_info, x_gamma,
                         record_every):
    m = y0.shape[0]
    nrec = nsteps // record_every + 1
    rec = np.empty((nrec, m))
    y = y0.copy()
    rec[0] = y
    r = 1
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    ys = np.empty(m)
    for step in range(nsteps):
        ua = u_grid[2 * step]
        ub = u_grid[2 * step + 1]
        uc = u_grid[2 * step + 2]
        structural_rhs(y, ua, n, sigma, c_q, c_p, full_info, x_gamma, k1)
        ys[:] = y + 0.5 * dt * k1
        structural_rhs(ys, ub, n, sigma, c_q, c_p, full_info, x_gamma, k2)
        ys[:] = y + 0.5 * dt * k2
        structural_rhs(ys, ub, n, sigma, c_q, c_p, full_info, x_gamma, k3)
        ys[:] = y + dt * k3
        structural_rhs(ys, uc, n, sigma, c_q, c_p, full_info, x_gamma, k4)
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        S = y[6:15].reshape((3, 3))
        y[6:15] = _orthonormalize(S).ravel()
        for k in range(m):
            if not np.isfinite(y[k]):
                return rec, r, NON_FINITE, step
        if (step + 1) % record_every == 0:
            rec[r] = y
            r += 1
    return rec, r, OK, nsteps


@njit(cache=True)
def flat_rhs(y, u, n, sigma, c_q, c_p, psi, match_target, out):
    """Layout: q_gamma, p_gamma, q (3N), p (3N); all coordinates unwrapped."""
    qg = y[0:3]
    pg = y[3:6]
    q = y[6:6 + 3 * n].reshape((n, 3))
    p = y[6 + 3 * n:6 + 6 * n].reshape((n, 3))
    out[0:3] = pg
    out[3:6] = u
    out[6:6 + 3 * n] = y[6 + 3 * n:6 + 6 * n]
    dp = out[6 + 3 * n:6 + 6 * n].reshape((n, 3))
    qc = np.zeros(3)
    pc = np.zeros(3)
    for j in range(n):
        for k in range(3):
            qc[k] += q[j, k] / n
            pc[k] += p[j, k] / n
    for i in range(n):
        for k in range(3):
            dp[i, k] = (sigma * (qc[k] - q[i, k]) + psi * (pc[k] - p[i, k])
                        + c_q * (qg[k] - q[i, k]) + c_p * (pg[k] - p[i, k]))
            if match_target:
                dp[i, k] += u[k]


@njit(cache=True, nogil=True)
def integrate_flat(y0, dt, nsteps, u_grid, n, sigma, c_q, c_p, psi, match_target,
                   record_every):
    m = y0.shape[0]
    nrec = nsteps // record_every + 1
    rec = np.empty((nrec, m))
    y = y0.copy()
    rec[0] = y
    r = 1
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    for step in range(nsteps):
        ua = u_grid[2 * step]
        ub = u_grid[2 * step + 1]
        uc = u_grid[2 * step + 2]
        flat_rhs(y, ua, n, sigma, c_q, c_p, psi, match_target, k1)
        flat_rhs(y + 0.5 * dt * k1, ub, n, sigma, c_q, c_p, psi, match_target, k2)
        flat_rhs(y + 0.5 * dt * k2, ub, n, sigma, c_q, c_p, psi, match_target, k3)
        flat_rhs(y + dt * k3, uc, n, sigma, c_q, c_p, psi, match_target, k4)
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for k in range(m):
            if not np.isfinite(y[k]):
                return rec, r, NON_FINITE, step
        if (step + 1) % record_every == 0:
            rec[r] = y
            r += 1
    return rec, r, OK, nsteps
