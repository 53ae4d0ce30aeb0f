"""Compiled inner loops for path simulation and the implicit PDE march.

All kernels are pure functions of their arguments: randomness enters only
through an explicitly passed ``numpy.random.Generator``, so a path is a
deterministic function of its own seed regardless of batching or thread
scheduling.  Each kernel releases the GIL and may be dispatched across a
thread pool by the callers.

When numba is unavailable the kernels degrade to pure Python with identical
semantics (numba's scalar ``Generator.standard_normal`` draws match numpy's
stream bit for bit).
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco


# model flags
EPP, FP, OP = 0, 1, 2
# noise flags
WHITE, OU, KT = 0, 1, 2
# observable flags for the 1d friction kernels
G_IDENTITY, G_SQUARE, G_INDICATOR = 0, 1, 2


@njit(nogil=True, cache=True)
def sim_path(gen, z0, dt, nsteps, stride, model, noise, n, cb, pot_k,
             theta_v, kt_k, kt_gamma0, out):
    """March one path of the extended SDE, storing every ``stride``-th state.

    ``out`` must have shape (nsteps // stride + 1, d).  Returns -1 on
    success or the 1-based step index at which the state became non-finite.
    ``pot_k`` = 0 encodes the zero potential, otherwise the quadratic
    stiffness.
    """
    d = z0.shape[0]
    zeta = 0.0
    eta = 0.0
    if noise == KT:
        zeta = z0[0]
        eta = z0[1]
    elif noise == OU:
        eta = z0[0]
    y = z0[d - 2]
    x = z0[d - 1]
    sq = math.sqrt(dt)

    out[0, d - 2] = y
    out[0, d - 1] = x
    if noise == OU:
        out[0, 0] = eta
    elif noise == KT:
        out[0, 0] = zeta
        out[0, 1] = eta

    s = 1
    for k in range(1, nsteps + 1):
        du = pot_k * x
        if model == OP:
            if x > 1.0:
                du += n * (x - 1.0)
            elif x < -1.0:
                du += n * (x + 1.0)
        fny = 0.0
        if model == FP:
            fny = n * y
            if fny > 1.0:
                fny = 1.0
            elif fny < -1.0:
                fny = -1.0
        fnx = 0.0
        if model == EPP:
            if x > 1.0:
                fnx = n * (x - 1.0)
            elif x < -1.0:
                fnx = n * (x + 1.0)

        dy = -du - cb * y - fny
        dx = y - fnx
        g = gen.standard_normal()
        # drift update first, noise added separately: matches the plain
        # Python stepping loop bit for bit
        if noise == WHITE:
            y += dy * dt
            y += sq * g
            x += dx * dt
        elif noise == OU:
            deta = -theta_v * eta
            y += (dy + eta) * dt
            x += dx * dt
            eta += deta * dt
            eta += sq * g
        else:
            dzeta = -kt_k * eta - kt_gamma0 * zeta
            deta = zeta
            y += (dy + eta) * dt
            x += dx * dt
            zeta += dzeta * dt
            zeta += sq * g
            eta += deta * dt

        if not (math.isfinite(y) and math.isfinite(x)
                and math.isfinite(eta) and math.isfinite(zeta)):
            return k
        if k % stride == 0:
            out[s, d - 2] = y
            out[s, d - 1] = x
            if noise == OU:
                out[s, 0] = eta
            elif noise == KT:
                out[s, 0] = zeta
                out[s, 1] = eta
            s += 1
    return -1


@njit(nogil=True, cache=True)
def friction1d_integrals(gen, y0, dt, nsteps, checkpoint_steps, g_flag, g_a,
                         g_b, n, cb, out_integral):
    """1d friction velocity process with a running left-endpoint integral.

    Accumulates I += g(y) dt before each Euler update and records I at the
    requested step indices (sorted ascending; 0 records the initial value).
    Also returns the running maximum of |I| over the whole horizon.
    """
    y = y0
    acc = 0.0
    running_max = 0.0
    sq = math.sqrt(dt)
    ci = 0
    ncp = checkpoint_steps.shape[0]
    while ci < ncp and checkpoint_steps[ci] == 0:
        out_integral[ci] = acc
        ci += 1
    for k in range(1, nsteps + 1):
        if g_flag == G_IDENTITY:
            gv = y
        elif g_flag == G_SQUARE:
            gv = y * y
        else:
            gv = 1.0 if (g_a <= y <= g_b) else 0.0
        acc += gv * dt
        a = abs(acc)
        if a > running_max:
            running_max = a
        ap = n * y
        if ap > 1.0:
            ap = 1.0
        elif ap < -1.0:
            ap = -1.0
        y += (-cb * y - ap) * dt + sq * gen.standard_normal()
        while ci < ncp and checkpoint_steps[ci] == k:
            out_integral[ci] = acc
            ci += 1
    return running_max


@njit(nogil=True, cache=True)
def friction1d_first_crossing(gen, y0, dt, nsteps, threshold, g_flag, g_a,
                              g_b, n, cb):
    """First step at which |integral of g| reaches ``threshold``, or -1.

    Stops early on crossing; the returned index k corresponds to time k*dt.
    """
    y = y0
    acc = 0.0
    sq = math.sqrt(dt)
    for k in range(1, nsteps + 1):
        if g_flag == G_IDENTITY:
            gv = y
        elif g_flag == G_SQUARE:
            gv = y * y
        else:
            gv = 1.0 if (g_a <= y <= g_b) else 0.0
        acc += gv * dt
        if abs(acc) >= threshold:
            return k
        ap = n * y
        if ap > 1.0:
            ap = 1.0
        elif ap < -1.0:
            ap = -1.0
        y += (-cb * y - ap) * dt + sq * gen.standard_normal()
    return -1


@njit(nogil=True, cache=True)
def wiener_barrier_crossings(gen, dt, nsteps, barriers, out_steps):
    """First-crossing steps of |W| over symmetric barriers, sampled exactly.

    Between grid points the path is a Brownian bridge, so the probability
    that it touches a barrier the endpoints stay below is
    exp(-2*(b - w0)*(b - w1)/dt); one uniform draw per step thresholds all
    barriers at once, which keeps the crossing events nested across barrier
    levels.  (The two-barrier double-crossing correction is below 1e-300
    for the step sizes used here.)  ``barriers`` must be sorted ascending;
    ``out_steps`` receives the first-crossing step per barrier, or -1.
    Consumes one normal and one uniform per step.
    """
    nb = barriers.shape[0]
    for j in range(nb):
        out_steps[j] = -1
    w = 0.0
    sq = math.sqrt(dt)
    lowest = 0  # lowest barrier not yet crossed
    for k in range(1, nsteps + 1):
        w_new = w + sq * gen.standard_normal()
        u = gen.random()
        for j in range(lowest, nb):
            b = barriers[j]
            crossed = False
            if w_new >= b or w_new <= -b:
                crossed = True
            else:
                # bridge touch probabilities; skip the exponentials when
                # both endpoints are far from the barrier (prob < 1e-18)
                p = 0.0
                prod_up = (b - w) * (b - w_new)
                if prod_up < 20.0 * dt:
                    p += math.exp(-2.0 * prod_up / dt)
                prod_dn = (b + w) * (b + w_new)
                if prod_dn < 20.0 * dt:
                    p += math.exp(-2.0 * prod_dn / dt)
                if u < p:
                    crossed = True
            if crossed:
                out_steps[j] = k
                lowest = j + 1
            else:
                break
        if lowest >= nb:
            return
        w = w_new


@njit(nogil=True, cache=True)
def wiener_running_max(gen, dt, checkpoint_steps, out_max):
    """Running maximum of |W| for a standard Wiener path.

    Records the running max at the requested (sorted) step indices; the
    horizon is the last checkpoint.
    """
    w = 0.0
    m = 0.0
    sq = math.sqrt(dt)
    ci = 0
    ncp = checkpoint_steps.shape[0]
    nsteps = checkpoint_steps[ncp - 1]
    while ci < ncp and checkpoint_steps[ci] == 0:
        out_max[ci] = m
        ci += 1
    for k in range(1, nsteps + 1):
        w += sq * gen.standard_normal()
        a = abs(w)
        if a > m:
            m = a
        while ci < ncp and checkpoint_steps[ci] == k:
            out_max[ci] = m
            ci += 1
    return m


@njit(nogil=True, cache=True)
def pde_march(sub, diag, sup, gvals, dy, dt, nsteps, center_idx,
              checkpoint_steps, w_fields, v_fields, w_center, v_center):
    """Implicit time march of the paired mean/variance fields.

    One backward-Euler step solves M w_new = dt*g + w_old on interior rows
    with homogeneous Neumann boundary rows (zero right-hand side), then the
    variance field takes dt * |centered gradient of w_new|^2 as its source.
    The tridiagonal factorization is computed once (the operator is
    time-independent).  Returns -(row+1) on a zero pivot in row ``row``,
    else -1.

    ``w_center``/``v_center`` must have length nsteps + 1 and receive the
    center-node values at every step; full fields are copied out at the
    requested checkpoint steps.
    """
    nn = diag.shape[0]
    cp = np.empty(nn)
    inv_den = np.empty(nn)
    if diag[0] == 0.0:
        return -1 - 0
    inv_den[0] = 1.0 / diag[0]
    cp[0] = sup[0] * inv_den[0]
    for i in range(1, nn):
        den = diag[i] - sub[i] * cp[i - 1]
        if den == 0.0:
            return -1 - i
        inv_den[i] = 1.0 / den
        cp[i] = sup[i] * inv_den[i]

    w = np.zeros(nn)
    v = np.zeros(nn)
    rw = np.empty(nn)
    rv = np.empty(nn)
    w_center[0] = 0.0
    v_center[0] = 0.0

    ci = 0
    ncp = checkpoint_steps.shape[0]
    while ci < ncp and checkpoint_steps[ci] == 0:
        for i in range(nn):
            w_fields[ci, i] = w[i]
            v_fields[ci, i] = v[i]
        ci += 1

    inv2dy = 1.0 / (2.0 * dy)
    for k in range(1, nsteps + 1):
        rw[0] = 0.0
        rw[nn - 1] = 0.0
        for i in range(1, nn - 1):
            rw[i] = dt * gvals[i] + w[i]
        # forward sweep / back substitution on the fixed factorization
        rw[0] = rw[0] * inv_den[0]
        for i in range(1, nn):
            rw[i] = (rw[i] - sub[i] * rw[i - 1]) * inv_den[i]
        w[nn - 1] = rw[nn - 1]
        for i in range(nn - 2, -1, -1):
            w[i] = rw[i] - cp[i] * w[i + 1]

        rv[0] = 0.0
        rv[nn - 1] = 0.0
        for i in range(1, nn - 1):
            dw = (w[i + 1] - w[i - 1]) * inv2dy
            rv[i] = dt * dw * dw + v[i]
        rv[0] = rv[0] * inv_den[0]
        for i in range(1, nn):
            rv[i] = (rv[i] - sub[i] * rv[i - 1]) * inv_den[i]
        v[nn - 1] = rv[nn - 1]
        for i in range(nn - 2, -1, -1):
            v[i] = rv[i] - cp[i] * v[i + 1]

        w_center[k] = w[center_idx]
        v_center[k] = v[center_idx]
        while ci < ncp and checkpoint_steps[ci] == k:
            for i in range(nn):
                w_fields[ci, i] = w[i]
                v_fields[ci, i] = v[i]
            ci += 1
    return -1
