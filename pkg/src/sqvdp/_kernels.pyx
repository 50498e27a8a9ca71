# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Same contracts as ``sqvdp._fallback``."""
import numpy as np

from libc.math cimport sqrt, cos, sin, exp, fabs, floor, hypot, isfinite


cdef inline double cabs(double complex z) noexcept nogil:
    return hypot(z.real, z.imag)

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247
cdef double A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40
cdef double SAFETY = 0.9, FAC_MIN = 0.2, FAC_MAX = 5.0


cdef inline double _new_step(double h, double err, bint rejected) nogil:
    cdef double fac
    if err == 0.0:
        fac = FAC_MAX
    else:
        fac = SAFETY * err ** -0.2
        if fac > FAC_MAX:
            fac = FAC_MAX
        if fac < FAC_MIN:
            fac = FAC_MIN
    if rejected and fac > 1.0:
        fac = 1.0
    return h * fac


cdef inline void _matvec(const int[:] indptr, const int[:] indices, const double complex[:] data,
                         double complex[:] x, double complex[:] out) noexcept nogil:
    cdef Py_ssize_t i, jj, n = out.shape[0]
    cdef double complex s
    for i in range(n):
        s = 0
        for jj in range(indptr[i], indptr[i + 1]):
            s = s + data[jj] * x[indices[jj]]
        out[i] = s


cdef inline double complex _dot(const double complex[:] row, double complex[:] y) noexcept nogil:
    cdef Py_ssize_t i
    cdef double complex s = 0
    for i in range(y.shape[0]):
        s = s + row[i] * y[i]
    return s


def dopri_linear(indptr_, indices_, data_, y0, t_out_, obs_, double atol, double rtol,
                 double h0, double hmin, long max_steps, double stop_tol,
                 double complex stop_ref, long stop_window, bint store_states):
    cdef const int[:] indptr = np.ascontiguousarray(indptr_, dtype=np.intc)
    cdef const int[:] indices = np.ascontiguousarray(indices_, dtype=np.intc)
    cdef const double complex[:] data = np.ascontiguousarray(data_, dtype=complex)
    cdef const double[:] t_out = np.ascontiguousarray(t_out_, dtype=float)
    cdef const double complex[:, :] obs = np.ascontiguousarray(obs_, dtype=complex)
    cdef Py_ssize_t n = y0.shape[0], nt = t_out.shape[0], nobs = obs.shape[0]
    values_ = np.zeros((nobs, nt), dtype=complex)
    states_ = np.zeros((nt if store_states else 0, n), dtype=complex)
    cdef double complex[:, :] values = values_
    cdef double complex[:, :] states = states_
    cdef double complex[:] y = np.array(y0, dtype=complex)
    cdef double complex[:] ynew = np.zeros(n, dtype=complex)
    cdef double complex[:] tmp = np.zeros(n, dtype=complex)
    cdef double complex[:] k1 = np.zeros(n, dtype=complex)
    cdef double complex[:] k2 = np.zeros(n, dtype=complex)
    cdef double complex[:] k3 = np.zeros(n, dtype=complex)
    cdef double complex[:] k4 = np.zeros(n, dtype=complex)
    cdef double complex[:] k5 = np.zeros(n, dtype=complex)
    cdef double complex[:] k6 = np.zeros(n, dtype=complex)
    cdef double complex[:] k7 = np.zeros(n, dtype=complex)
    cdef double complex[:] swap
    cdef Py_ssize_t i, j, q
    cdef double t, h, hs, hn, target, err, sc, ai, bi
    cdef double complex e
    cdef bint last
    cdef long nsteps = 0, nrej = 0, quiet = 0
    cdef int status = 0
    cdef Py_ssize_t done = nt

    for q in range(nobs):
        values[q, 0] = _dot(obs[q], y)
    if store_states:
        states[0, :] = y
    t = t_out[0]
    h = h0
    _matvec(indptr, indices, data, y, k1)
    if stop_window > 0 and cabs(values[0, 0] - stop_ref) <= stop_tol:
        quiet = 1
    with nogil:
        for j in range(1, nt):
            target = t_out[j]
            while t < target:
                if nsteps + nrej >= max_steps:
                    status = 3
                    break
                if h < hmin:
                    status = 2
                    break
                last = t + h >= target
                hs = target - t if last else h
                for i in range(n):
                    tmp[i] = y[i] + hs * (A21 * k1[i])
                _matvec(indptr, indices, data, tmp, k2)
                for i in range(n):
                    tmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i])
                _matvec(indptr, indices, data, tmp, k3)
                for i in range(n):
                    tmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
                _matvec(indptr, indices, data, tmp, k4)
                for i in range(n):
                    tmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
                _matvec(indptr, indices, data, tmp, k5)
                for i in range(n):
                    tmp[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                          + A64 * k4[i] + A65 * k5[i])
                _matvec(indptr, indices, data, tmp, k6)
                for i in range(n):
                    ynew[i] = y[i] + hs * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                           + B5 * k5[i] + B6 * k6[i])
                _matvec(indptr, indices, data, ynew, k7)
                err = 0.0
                for i in range(n):
                    e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                              + E6 * k6[i] + E7 * k7[i])
                    ai = cabs(y[i])
                    bi = cabs(ynew[i])
                    sc = atol + rtol * (ai if ai > bi else bi)
                    if cabs(e) / sc > err:
                        err = cabs(e) / sc
                if err <= 1.0:
                    nsteps += 1
                    t = target if last else t + hs
                    swap = y
                    y = ynew
                    ynew = swap
                    swap = k1
                    k1 = k7
                    k7 = swap
                    hn = _new_step(hs, err, False)
                    if last:
                        h = h if h > hn else hn
                    else:
                        h = hn
                else:
                    nrej += 1
                    h = _new_step(hs, err, True)
            if status != 0:
                done = j
                break
            for q in range(nobs):
                values[q, j] = _dot(obs[q], y)
            if store_states:
                for i in range(n):
                    states[j, i] = y[i]
            if stop_window > 0:
                if cabs(values[0, j] - stop_ref) <= stop_tol:
                    quiet += 1
                    if quiet >= stop_window:
                        status = 1
                        done = j + 1
                        break
                else:
                    quiet = 0
    return values_, states_, done, nsteps, nrej, status


cdef inline void _rhs(double R, double phi, double* p, double* out) noexcept nogil:
    cdef double a = 2.0 * phi - p[3]
    out[0] = 0.5 * p[4] * R - p[5] * R * R * R - p[1] * cos(phi) - 2.0 * p[2] * R * cos(a)
    out[1] = -p[0] + p[1] * sin(phi) / R + 2.0 * p[2] * sin(a)


cdef inline void _jac(double R, double phi, double* p, double* out) noexcept nogil:
    cdef double a = 2.0 * phi - p[3]
    out[0] = 0.5 * p[4] - 3.0 * p[5] * R * R - 2.0 * p[2] * cos(a)
    out[1] = p[1] * sin(phi) + 4.0 * p[2] * R * sin(a)
    out[2] = -p[1] * sin(phi) / (R * R)
    out[3] = p[1] * cos(phi) / R + 4.0 * p[2] * cos(a)


def classical_rhs(double R, double phi, p_):
    cdef double p[6]
    cdef double out[2]
    for i in range(6):
        p[i] = p_[i]
    _rhs(R, phi, p, out)
    return out[0], out[1]


def classical_jacobian(double R, double phi, p_):
    cdef double p[6]
    cdef double out[4]
    for i in range(6):
        p[i] = p_[i]
    _jac(R, phi, p, out)
    return out[0], out[1], out[2], out[3]


def classical_dopri(double R0, double phi0, p_, double t_end, double dt_out, double atol,
                    double rtol, double h0, double conv_tol, double r_min, long max_steps):
    cdef double p[6]
    cdef Py_ssize_t i
    for i in range(6):
        p[i] = p_[i]
    cdef double force = p[1]
    cdef Py_ssize_t nmax = <Py_ssize_t>floor(t_end / dt_out) + 2
    ts_ = np.zeros(nmax)
    Rs_ = np.zeros(nmax)
    ps_ = np.zeros(nmax)
    cdef double[:] ts = ts_
    cdef double[:] Rs = Rs_
    cdef double[:] ps = ps_
    cdef double f1[2]
    cdef double f2[2]
    cdef double f3[2]
    cdef double f4[2]
    cdef double f5[2]
    cdef double f6[2]
    cdef double f7[2]
    cdef double t = 0.0, R = R0, phi = phi0, h = h0, hs
    cdef double r2, q2, r3, q3, r4, q4, r5, q5, r6, q6, rn, qn, er, eq, err, e1, e2
    cdef double t_prev, R_prev, phi_prev, w, next_out = dt_out
    cdef long nsteps = 0
    cdef int status = 0
    cdef Py_ssize_t m = 1
    ts[0] = 0.0
    Rs[0] = R0
    ps[0] = phi0
    if force != 0.0 and R <= r_min:
        return ts_[:1], Rs_[:1], ps_[:1], 2
    _rhs(R, phi, p, f1)
    if hypot(f1[0], f1[1]) < conv_tol:
        return ts_[:1], Rs_[:1], ps_[:1], 1
    with nogil:
        while t < t_end:
            if nsteps >= max_steps:
                status = 3
                break
            if h < 1e-14 * (t if t > 1.0 else 1.0):
                status = 2
                break
            hs = h if h < t_end - t else t_end - t
            r2 = R + hs * A21 * f1[0]
            q2 = phi + hs * A21 * f1[1]
            _rhs(r2, q2, p, f2)
            r3 = R + hs * (A31 * f1[0] + A32 * f2[0])
            q3 = phi + hs * (A31 * f1[1] + A32 * f2[1])
            _rhs(r3, q3, p, f3)
            r4 = R + hs * (A41 * f1[0] + A42 * f2[0] + A43 * f3[0])
            q4 = phi + hs * (A41 * f1[1] + A42 * f2[1] + A43 * f3[1])
            _rhs(r4, q4, p, f4)
            r5 = R + hs * (A51 * f1[0] + A52 * f2[0] + A53 * f3[0] + A54 * f4[0])
            q5 = phi + hs * (A51 * f1[1] + A52 * f2[1] + A53 * f3[1] + A54 * f4[1])
            _rhs(r5, q5, p, f5)
            r6 = R + hs * (A61 * f1[0] + A62 * f2[0] + A63 * f3[0] + A64 * f4[0] + A65 * f5[0])
            q6 = phi + hs * (A61 * f1[1] + A62 * f2[1] + A63 * f3[1] + A64 * f4[1] + A65 * f5[1])
            _rhs(r6, q6, p, f6)
            rn = R + hs * (B1 * f1[0] + B3 * f3[0] + B4 * f4[0] + B5 * f5[0] + B6 * f6[0])
            qn = phi + hs * (B1 * f1[1] + B3 * f3[1] + B4 * f4[1] + B5 * f5[1] + B6 * f6[1])
            if rn <= (r_min if force != 0.0 else 0.0):
                if hs > 1e-6:
                    h = 0.25 * hs
                    continue
                status = 2
                R = rn
                phi = qn
                t = t + hs
                break
            _rhs(rn, qn, p, f7)
            er = hs * (E1 * f1[0] + E3 * f3[0] + E4 * f4[0] + E5 * f5[0] + E6 * f6[0] + E7 * f7[0])
            eq = hs * (E1 * f1[1] + E3 * f3[1] + E4 * f4[1] + E5 * f5[1] + E6 * f6[1] + E7 * f7[1])
            e1 = fabs(er) / (atol + rtol * (fabs(R) if fabs(R) > fabs(rn) else fabs(rn)))
            e2 = fabs(eq) / (atol + rtol * (fabs(phi) if fabs(phi) > fabs(qn) else fabs(qn)))
            err = e1 if e1 > e2 else e2
            if err > 1.0:
                h = _new_step(hs, err, True)
                continue
            nsteps += 1
            t_prev = t
            R_prev = R
            phi_prev = phi
            t = t + hs
            R = rn
            phi = qn
            f1[0] = f7[0]
            f1[1] = f7[1]
            h = _new_step(hs, err, False)
            while next_out <= t and m < nmax - 1:
                w = (next_out - t_prev) / (t - t_prev)
                ts[m] = next_out
                Rs[m] = R_prev + w * (R - R_prev)
                ps[m] = phi_prev + w * (phi - phi_prev)
                m += 1
                next_out += dt_out
            if hypot(f1[0], f1[1]) < conv_tol:
                status = 1
                break
    if ts[m - 1] != t:
        ts[m] = t
        Rs[m] = R
        ps[m] = phi
        m += 1
    return ts_[:m], Rs_[:m], ps_[:m], status


def newton_multistart(starts_, p_, double tol, long max_iter, double r_min, double r_max):
    cdef const double[:, :] starts = np.ascontiguousarray(starts_, dtype=float)
    cdef Py_ssize_t m = starts.shape[0], i
    cdef long it
    cdef double p[6]
    for i in range(6):
        p[i] = p_[i]
    roots_ = np.zeros((m, 2))
    ok_ = np.zeros(m, dtype=np.uint8)
    cdef double[:, :] roots = roots_
    cdef unsigned char[:] ok = ok_
    cdef double R, phi, det, dR, dp, lam
    cdef double f[2]
    cdef double J[4]
    cdef bint good
    with nogil:
        for i in range(m):
            R = starts[i, 0]
            phi = starts[i, 1]
            good = False
            for it in range(max_iter):
                _rhs(R, phi, p, f)
                if hypot(f[0], f[1]) < tol:
                    good = True
                    break
                _jac(R, phi, p, J)
                det = J[0] * J[3] - J[1] * J[2]
                if det == 0.0 or not isfinite(det):
                    break
                dR = -(J[3] * f[0] - J[1] * f[1]) / det
                dp = -(-J[2] * f[0] + J[0] * f[1]) / det
                lam = 1.0
                while R + lam * dR <= r_min and lam > 1e-4:
                    lam *= 0.5
                R += lam * dR
                phi += lam * dp
                if not (r_min < R <= 2.0 * r_max) or not isfinite(phi):
                    break
            roots[i, 0] = R
            roots[i, 1] = phi
            ok[i] = good and r_min < R <= r_max
    return roots_, ok_.astype(bool)


def wigner_clenshaw(rho_, alpha_):
    cdef const double complex[:, :] rho = np.ascontiguousarray(rho_, dtype=complex)
    alpha_arr = np.ascontiguousarray(alpha_, dtype=complex)
    shape = alpha_arr.shape
    cdef const double complex[:] alpha = alpha_arr.ravel()
    cdef Py_ssize_t N = rho.shape[0], P = alpha.shape[0], pt, k, nn
    out_ = np.zeros(P)
    cdef double[:] out = out_
    # recurrence coefficients depend only on (n, k); precompute them
    Aoff_ = np.zeros((N, N + 1))
    Acoef_ = np.zeros((N, N + 1))
    Bcoef_ = np.zeros((N, N + 1))
    cdef double[:, :] Aoff = Aoff_
    cdef double[:, :] Acoef = Acoef_
    cdef double[:, :] Bcoef = Bcoef_
    for k in range(N):
        for nn in range(N - k):
            Acoef[k, nn] = 1.0 / sqrt((nn + 1.0) * (nn + 1.0 + k))
            Aoff[k, nn] = 2.0 * nn + 1.0 + k
            Bcoef[k, nn] = -sqrt((nn + 1.0) * (nn + 1.0 + k) / ((nn + 2.0) * (nn + 2.0 + k)))
    cdef double x, sgn, wk
    cdef double complex z, acc, b0, b1, b2, c
    with nogil:
        for pt in range(P):
            x = 4.0 * (alpha[pt].real * alpha[pt].real + alpha[pt].imag * alpha[pt].imag)
            z.real = 2.0 * alpha[pt].real
            z.imag = -2.0 * alpha[pt].imag
            acc = 0
            for k in range(N - 1, -1, -1):
                wk = 2.0 if k else 1.0
                b1 = 0
                b2 = 0
                for nn in range(N - k - 1, -1, -1):
                    sgn = -1.0 if nn & 1 else 1.0
                    c = sgn * rho[nn + k, nn] * wk
                    b0 = c + (Aoff[k, nn] - x) * Acoef[k, nn] * b1 + Bcoef[k, nn] * b2
                    b2 = b1
                    b1 = b0
                if k < N - 1:
                    acc = b1 + acc * z / sqrt(k + 1.0)
                else:
                    acc = b1
            out[pt] = (2.0 / 3.141592653589793) * exp(-0.5 * x) * acc.real
    return out_.reshape(shape)
