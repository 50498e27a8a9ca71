"""Pure-Python kernels.

Reference implementations of the hot loops; ``_kernels.pyx`` mirrors them
operation for operation. Signatures and return conventions are identical.

Status codes shared by the integrators::

    0  reached the last requested time
    1  stopped early (decay criterion / fixed-point convergence)
    2  step size underflow, or phase singularity for the classical flow
    3  step budget exhausted
"""
import math

import numpy as np
import scipy.sparse as sp

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)
SAFETY, FAC_MIN, FAC_MAX = 0.9, 0.2, 5.0


def _new_step(h, err, rejected):
    if err == 0.0:
        fac = FAC_MAX
    else:
        fac = SAFETY * err ** -0.2
        fac = min(FAC_MAX, max(FAC_MIN, fac))
    if rejected:
        fac = min(fac, 1.0)
    return h * fac


def dopri_linear(indptr, indices, data, y0, t_out, obs, atol, rtol, h0, hmin,
                 max_steps, stop_tol, stop_ref, stop_window, store_states):
    """Integrate ``y' = A y`` (``A`` in CSR arrays) and sample at ``t_out``.

    ``obs`` is a ``(k, n)`` complex array of row functionals recorded at each
    sample. With ``stop_window > 0`` the run ends once ``|obs[0] y - stop_ref|``
    has stayed at or below ``stop_tol`` for ``stop_window`` consecutive samples.

    Returns ``(values, states, n_done, n_steps, n_rejected, status)``.
    """
    n = y0.shape[0]
    A = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    nt = t_out.shape[0]
    nobs = obs.shape[0]
    values = np.zeros((nobs, nt), dtype=complex)
    states = np.zeros((nt if store_states else 0, n), dtype=complex)
    y = np.array(y0, dtype=complex)
    values[:, 0] = obs @ y
    if store_states:
        states[0] = y
    t = t_out[0]
    h = h0
    k1 = A @ y
    nsteps = nrej = 0
    quiet = 0
    if stop_window > 0 and abs(values[0, 0] - stop_ref) <= stop_tol:
        quiet = 1
    for j in range(1, nt):
        target = t_out[j]
        while t < target:
            if nsteps + nrej >= max_steps:
                return values, states, j, nsteps, nrej, 3
            if h < hmin:
                return values, states, j, nsteps, nrej, 2
            last = t + h >= target
            hs = target - t if last else h
            k2 = A @ (y + hs * (A21 * k1))
            k3 = A @ (y + hs * (A31 * k1 + A32 * k2))
            k4 = A @ (y + hs * (A41 * k1 + A42 * k2 + A43 * k3))
            k5 = A @ (y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
            k6 = A @ (y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
            ynew = y + hs * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            k7 = A @ ynew
            e = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
            err = float(np.max(np.abs(e) / scale))
            if err <= 1.0:
                nsteps += 1
                t = target if last else t + hs
                y = ynew
                k1 = k7
                hn = _new_step(hs, err, False)
                # a step shortened to land on a sample does not shrink the next one
                h = max(h, hn) if last else hn
            else:
                nrej += 1
                h = _new_step(hs, err, True)
        values[:, j] = obs @ y
        if store_states:
            states[j] = y
        if stop_window > 0:
            if abs(values[0, j] - stop_ref) <= stop_tol:
                quiet += 1
                if quiet >= stop_window:
                    return values, states, j + 1, nsteps, nrej, 1
            else:
                quiet = 0
    return values, states, nt, nsteps, nrej, 0


def classical_rhs(R, phi, p):
    delta, force, eta, theta, g1, g2 = p
    a = 2.0 * phi - theta
    dR = 0.5 * g1 * R - g2 * R ** 3 - force * math.cos(phi) - 2.0 * eta * R * math.cos(a)
    dphi = -delta + force * math.sin(phi) / R + 2.0 * eta * math.sin(a)
    return dR, dphi


def classical_jacobian(R, phi, p):
    delta, force, eta, theta, g1, g2 = p
    a = 2.0 * phi - theta
    return (
        0.5 * g1 - 3.0 * g2 * R * R - 2.0 * eta * math.cos(a),
        force * math.sin(phi) + 4.0 * eta * R * math.sin(a),
        -force * math.sin(phi) / (R * R),
        force * math.cos(phi) / R + 4.0 * eta * math.cos(a),
    )


def classical_dopri(R0, phi0, p, t_end, dt_out, atol, rtol, h0, conv_tol, r_min,
                    max_steps):
    """Adaptive integration of the amplitude-phase flow.

    Samples every ``dt_out`` (phase unwrapped); the final state is always the
    last sample. Returns ``(t, R, phi, status)``.
    """
    force = p[1]
    nmax = int(math.floor(t_end / dt_out)) + 2
    ts = np.zeros(nmax)
    Rs = np.zeros(nmax)
    ps = np.zeros(nmax)
    ts[0], Rs[0], ps[0] = 0.0, R0, phi0
    m = 1
    t, R, phi, h = 0.0, R0, phi0, h0
    next_out = dt_out
    nsteps = 0
    status = 0
    if force != 0.0 and R <= r_min:
        return ts[:1], Rs[:1], ps[:1], 2
    f1 = classical_rhs(R, phi, p)
    if math.hypot(*f1) < conv_tol:
        return ts[:1], Rs[:1], ps[:1], 1
    while t < t_end:
        if nsteps >= max_steps:
            status = 3
            break
        if h < 1e-14 * max(1.0, t):
            status = 2
            break
        hs = min(h, t_end - t)
        r2, q2 = R + hs * A21 * f1[0], phi + hs * A21 * f1[1]
        f2 = classical_rhs(r2, q2, p)
        r3 = R + hs * (A31 * f1[0] + A32 * f2[0])
        q3 = phi + hs * (A31 * f1[1] + A32 * f2[1])
        f3 = classical_rhs(r3, q3, p)
        r4 = R + hs * (A41 * f1[0] + A42 * f2[0] + A43 * f3[0])
        q4 = phi + hs * (A41 * f1[1] + A42 * f2[1] + A43 * f3[1])
        f4 = classical_rhs(r4, q4, p)
        r5 = R + hs * (A51 * f1[0] + A52 * f2[0] + A53 * f3[0] + A54 * f4[0])
        q5 = phi + hs * (A51 * f1[1] + A52 * f2[1] + A53 * f3[1] + A54 * f4[1])
        f5 = classical_rhs(r5, q5, p)
        r6 = R + hs * (A61 * f1[0] + A62 * f2[0] + A63 * f3[0] + A64 * f4[0] + A65 * f5[0])
        q6 = phi + hs * (A61 * f1[1] + A62 * f2[1] + A63 * f3[1] + A64 * f4[1] + A65 * f5[1])
        f6 = classical_rhs(r6, q6, p)
        rn = R + hs * (B1 * f1[0] + B3 * f3[0] + B4 * f4[0] + B5 * f5[0] + B6 * f6[0])
        qn = phi + hs * (B1 * f1[1] + B3 * f3[1] + B4 * f4[1] + B5 * f5[1] + B6 * f6[1])
        if rn <= (r_min if force != 0.0 else 0.0):
            if hs > 1e-6:
                h = 0.25 * hs
                continue
            status = 2
            R, phi, t = rn, qn, t + hs
            break
        f7 = classical_rhs(rn, qn, p)
        er = hs * (E1 * f1[0] + E3 * f3[0] + E4 * f4[0] + E5 * f5[0] + E6 * f6[0] + E7 * f7[0])
        eq = hs * (E1 * f1[1] + E3 * f3[1] + E4 * f4[1] + E5 * f5[1] + E6 * f6[1] + E7 * f7[1])
        err = max(abs(er) / (atol + rtol * max(abs(R), abs(rn))),
                  abs(eq) / (atol + rtol * max(abs(phi), abs(qn))))
        if err > 1.0:
            h = _new_step(hs, err, True)
            continue
        nsteps += 1
        t_prev, R_prev, phi_prev = t, R, phi
        t, R, phi, f1 = t + hs, rn, qn, f7
        h = _new_step(hs, err, False)
        while next_out <= t and m < nmax - 1:
            # linear interpolation between accepted points
            w = (next_out - t_prev) / (t - t_prev)
            ts[m] = next_out
            Rs[m] = R_prev + w * (R - R_prev)
            ps[m] = phi_prev + w * (phi - phi_prev)
            m += 1
            next_out += dt_out
        if math.hypot(f1[0], f1[1]) < conv_tol:
            status = 1
            break
    if ts[m - 1] != t:
        ts[m], Rs[m], ps[m] = t, R, phi
        m += 1
    return ts[:m], Rs[:m], ps[:m], status


def newton_multistart(starts, p, tol, max_iter, r_min, r_max):
    """Newton iteration from each row ``(R, phi)`` of ``starts``.

    Returns ``(roots, ok)``; ``ok[i]`` is true when start ``i`` reached
    ``|rhs| < tol`` inside ``(r_min, r_max]``.
    """
    m = starts.shape[0]
    roots = np.zeros((m, 2))
    ok = np.zeros(m, dtype=bool)
    for i in range(m):
        R, phi = starts[i, 0], starts[i, 1]
        good = False
        for _ in range(max_iter):
            fR, fp = classical_rhs(R, phi, p)
            if math.hypot(fR, fp) < tol:
                good = True
                break
            a, b, c, d = classical_jacobian(R, phi, p)
            det = a * d - b * c
            if det == 0.0 or not math.isfinite(det):
                break
            dR = -(d * fR - b * fp) / det
            dp = -(-c * fR + a * fp) / det
            lam = 1.0
            while R + lam * dR <= r_min and lam > 1e-4:
                lam *= 0.5
            R += lam * dR
            phi += lam * dp
            if not (r_min < R <= 2.0 * r_max) or not math.isfinite(phi):
                break
        roots[i, 0] = R
        roots[i, 1] = phi
        ok[i] = good and r_min < R <= r_max
    return roots, ok


def wigner_clenshaw(rho, alpha):
    """Wigner function (normalised to unit area in the alpha plane).

    ``W = (2/pi) exp(-2|a|^2) Re sum_k w_k z^k / sqrt(k!) T_k``, ``z = 2 conj(a)``,
    where ``T_k = sum_n (-1)^n rho[n+k, n] q_n^(k)(4|a|^2)`` and ``q`` are the
    normalised associated Laguerre polynomials, summed by Clenshaw recurrence.
    The outer sum over ``k`` is evaluated by Horner's rule.
    """
    N = rho.shape[0]
    x = 4.0 * np.abs(alpha) ** 2
    z = 2.0 * np.conj(alpha)
    acc = np.zeros(alpha.shape, dtype=complex)
    signs = (-1.0) ** np.arange(N)
    for k in range(N - 1, -1, -1):
        coeffs = signs[: N - k] * np.diagonal(rho, -k) * (2.0 if k else 1.0)
        M = N - k - 1
        b1 = np.zeros(alpha.shape, dtype=complex)
        b2 = np.zeros(alpha.shape, dtype=complex)
        for nn in range(M, -1, -1):
            A = (2 * nn + 1 + k - x) / math.sqrt((nn + 1) * (nn + 1 + k))
            B = -math.sqrt((nn + 1) * (nn + 1 + k) / ((nn + 2) * (nn + 2 + k)))
            b0 = coeffs[nn] + A * b1 + B * b2
            b2 = b1
            b1 = b0
        acc = b1 + acc * z / math.sqrt(k + 1) if k < N - 1 else b1
    return (2.0 / math.pi) * np.exp(-0.5 * x) * acc.real
