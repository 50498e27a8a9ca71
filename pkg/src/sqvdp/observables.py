"""Steady-state observables: Wigner function, Mandel Q, phase distribution,
power spectrum, observed frequency and linewidth.

Spectrum sign convention
------------------------
The transform ``S(w) = int e^{i w tau} <b^dag(tau) b(0)> dtau`` puts the
peak of a free oscillator detuned by ``delta`` at ``w = -delta``. Results keep
that literal axis as ``omega_raw`` and also expose ``omega = -omega_raw``, on
which an unentrained oscillator peaks at ``+delta`` and entrainment pulls the
peak towards zero. ``omega_obs`` and ``sigma_fwhm`` refer to ``omega``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _backend
from .dynamics import Correlation
from .errors import (AccuracyError, DimensionError, GridTooNarrowError, PreconditionError,
                     TruncationError, UndefinedObservableError)
from .fock import annihilation
from .liouvillian import Liouvillian, trace_row, vec
from .steady import mean_number

# ---------------------------------------------------------------- photon statistics


def mandel_q(rho) -> float:
    """``(<n^2> - <n>^2 - <n>) / <n>``."""
    p = np.diag(np.asarray(rho)).real
    n = np.arange(p.size)
    mean = float(n @ p)
    if mean <= 1e-14:
        raise UndefinedObservableError("Mandel Q is undefined for the vacuum")
    var = float((n * n) @ p) - mean * mean
    return (var - mean) / mean


# ---------------------------------------------------------------- phase distribution


def phase_distribution(rho, resolution: int = 512):
    """``P(phi) = (1/2pi) sum_nm e^{-i(n-m)phi} rho_nm`` on ``resolution`` points.

    Returns ``(phi, P)`` with ``phi`` in ``[0, 2pi)``; a coherent state peaks at ``arg(alpha)``.
    """
    rho = np.asarray(rho)
    if resolution < 64:
        raise PreconditionError("phase resolution must be at least 64")
    N = rho.shape[0]
    resolution = int(resolution)
    if resolution < 2 * N:
        # fewer points than Fourier modes would alias the normalisation
        raise PreconditionError(f"phase resolution must be at least {2 * N} for cutoff {N}")
    phi = 2.0 * np.pi * np.arange(resolution) / resolution
    coeff = np.zeros(resolution, dtype=complex)
    for d in range(-(N - 1), N):
        # rho_nm with n - m = d lies on the diagonal at offset -d
        coeff[d % resolution] = np.trace(rho, offset=-d)
    P = np.fft.fft(coeff).real / (2.0 * np.pi)
    return phi, P


def local_maxima(values, rel_tol: float = 1e-9) -> np.ndarray:
    """Indices of strict local maxima of a periodic sequence.

    A sequence whose spread is below ``rel_tol`` times its maximum is flat and
    has none.
    """
    v = np.asarray(values, dtype=float)
    if v.max() - v.min() <= rel_tol * max(abs(v.max()), 1e-300):
        return np.array([], dtype=int)
    left = np.roll(v, 1)
    right = np.roll(v, -1)
    return np.flatnonzero((v > left) & (v >= right))


# ---------------------------------------------------------------- Wigner function


@dataclass(frozen=True)
class WignerField:
    x: np.ndarray          # Re(alpha)
    y: np.ndarray          # Im(alpha)
    values: np.ndarray     # shape (len(y), len(x))
    normalization: float
    convention: str = "integral of W over d^2 alpha equals 1"


def default_wigner_extent(rho) -> float:
    return 1.0 + 3.0 * math.sqrt(mean_number(rho) + 1.0)


def wigner_at(rho, alpha, kernels=None) -> np.ndarray:
    """Pointwise Wigner function at complex ``alpha`` (any shape)."""
    kernels = kernels or _backend.kernels
    rho = np.ascontiguousarray(rho, dtype=complex)
    alpha = np.asarray(alpha, dtype=complex)
    return kernels.wigner_clenshaw(rho, alpha.ravel()).reshape(alpha.shape)


def wigner_displaced_parity(rho, alpha: complex, pad: int | None = None) -> float:
    """``(2/pi) Tr[rho D(alpha) P D(alpha)^dag]`` with a dense matrix exponential.

    Independent of the Laguerre series; the displacement is built in a space
    enlarged by ``pad`` levels so truncation does not reach the block used.
    """
    rho = np.asarray(rho, dtype=complex)
    N = rho.shape[0]
    if pad is None:
        pad = 40 + int(6 * abs(alpha) ** 2 + 12 * abs(alpha))
    M = N + pad
    a = annihilation(M)
    D = scipy.linalg.expm(alpha * a.conj().T - np.conj(alpha) * a)
    parity = (-1.0) ** np.arange(M)
    K = (D * parity) @ D.conj().T
    return float((2.0 / math.pi) * np.sum(rho * K[:N, :N].T).real)


def wigner(rho, xvec=None, yvec=None, *, points: int = 201, strict: bool = False,
           validate: bool = True, kernels=None) -> WignerField:
    """Wigner function on the rectangular grid ``alpha = x + i y``.

    The default grid is square with half-width ``1 + 3 sqrt(nbar + 1)``. The
    result is spot-checked against :func:`wigner_displaced_parity` at ten
    seeded random points when ``validate`` is set. A grid whose trapezoidal
    normalisation misses 1 by more than ``1e-3`` warns, or raises
    :class:`AccuracyError` with ``strict``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"expected a square density matrix, got {rho.shape}")
    if xvec is None or yvec is None:
        ext = default_wigner_extent(rho)
        grid = np.linspace(-ext, ext, points)
        xvec = grid if xvec is None else xvec
        yvec = grid if yvec is None else yvec
    xvec = np.asarray(xvec, dtype=float)
    yvec = np.asarray(yvec, dtype=float)
    X, Y = np.meshgrid(xvec, yvec)
    W = wigner_at(rho, X + 1j * Y, kernels=kernels)
    norm = float(np.trapezoid(np.trapezoid(W, xvec, axis=1), yvec))
    if abs(norm - 1.0) > 1e-3:
        msg = f"Wigner grid misses normalisation by {abs(norm - 1.0):.3g}"
        if strict:
            raise AccuracyError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    if validate:
        rng = np.random.default_rng(2017)
        pts = (rng.uniform(xvec.min(), xvec.max(), 10)
               + 1j * rng.uniform(yvec.min(), yvec.max(), 10))
        fast = wigner_at(rho, pts, kernels=kernels)
        for a, w in zip(pts, fast):
            ref = wigner_displaced_parity(rho, a)
            if abs(ref - w) > 1e-8:
                raise AccuracyError(f"Wigner series disagrees with displaced parity at {a}: "
                                    f"{w!r} vs {ref!r}")
    return WignerField(x=xvec, y=yvec, values=W, normalization=norm)


# ---------------------------------------------------------------- spectra

# Bernoulli numbers B_2, B_4, ... for the Euler-Maclaurin correction
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66)


@dataclass(frozen=True)
class SpectrumResult:
    """Power spectrum on the entrainment axis plus the literal transform axis.

    ``total_power`` is the sum rule over the whole sampled band (it includes
    ``coherent_weight`` and should equal the mean photon number).
    ``window_power`` integrates only the reported window ``|omega| <= omega_max``;
    the gain noise gives ``S`` a ``gamma1 / omega^2`` tail, so it is smaller.
    """

    omega: np.ndarray
    values: np.ndarray
    omega_obs: float
    sigma_fwhm: float
    multi_peak: bool
    total_power: float
    coherent_weight: float
    window_power: float
    omega_raw: np.ndarray = field(repr=False)
    values_raw: np.ndarray = field(repr=False)


def _euler_maclaurin(omega, dt, ders):
    """Left-end Euler-Maclaurin correction, truncated at its smallest term."""
    total = np.zeros(omega.shape, dtype=complex)
    prev = np.full(omega.shape, np.inf)
    active = np.ones(omega.shape, dtype=bool)
    iw = 1j * omega
    for k in range(1, len(_BERNOULLI) + 1):
        m = 2 * k - 1
        if m >= len(ders):
            break
        fm = sum(comb(m, j) * iw ** (m - j) * ders[j] for j in range(m + 1))
        term = _BERNOULLI[k - 1] * dt ** (2 * k) / factorial(2 * k) * fm
        mag = np.abs(term)
        active &= mag < prev
        total += np.where(active, term, 0.0)
        prev = mag
    return total


def _exponential_tail(omega, dt, c):
    """Beyond the last sample, continue ``c`` as a single decaying exponential.

    Also removes the half weight the trapezoidal sum gives the last sample.
    """
    T = dt * (c.size - 1)
    last = c[-1]
    phase = np.exp(1j * omega * T)
    out = -0.5 * dt * last * phase
    if c.size < 2 or last == 0 or c[-2] == 0:
        return out
    rate = np.log(last / c[-2]) / dt
    if rate.real >= 0:
        return out
    return out - last * phase / (rate + 1j * omega)


def _derivatives_from_samples(c, dt, count=10, order=12):
    """Derivatives at ``tau = 0`` from forward differences.

    Uses ``d/dtau = log(1 + Delta) / dt`` with the operator series truncated
    at ``order`` differences. ``c`` is smooth on the sampling scale, so this
    converges where differencing ``e^{i w tau} c`` would not.
    """
    order = min(order, len(c) - 1)
    diffs = np.array([np.diff(c[: order + 1], n=k)[0] for k in range(order + 1)])
    log1p = np.zeros(order + 1)
    log1p[1:] = [(-1.0) ** (k + 1) / k for k in range(1, order + 1)]
    series = np.zeros(order + 1)
    series[0] = 1.0
    out = np.empty(count, dtype=complex)
    for m in range(count):
        out[m] = series @ diffs / dt ** m
        series = np.polynomial.polynomial.polymul(series, log1p)[: order + 1]
    return out


def power_spectrum(g, dt: float | None = None, *, derivatives=None, coherent: complex = 0.0,
                   decayed: bool | None = None, decay_tol: float = 1e-6,
                   omega_max: float = 8.0, d_omega: float = 4e-3,
                   min_value_tol: float = 1e-8) -> SpectrumResult:
    """Spectrum ``S(w) = 2 Re int_0^inf e^{i w tau} (g(tau) - coherent) dtau``.

    ``g`` is a :class:`~sqvdp.dynamics.Correlation` or a sampled series with
    spacing ``dt``. The one-sided transform is a zero-padded FFT of the
    trapezoidal sum with a left-end correction: Euler-Maclaurin from exact
    ``tau = 0`` derivatives, estimated from forward differences when not given.
    The stationary part ``coherent`` (a delta peak at zero) is removed and
    reported as ``coherent_weight``.
    """
    if isinstance(g, Correlation):
        corr = g
        dt, derivatives, coherent = corr.dt, corr.derivatives, corr.coherent
        decayed = corr.decayed if decayed is None else decayed
        series = corr.g
    else:
        if dt is None:
            raise PreconditionError("dt is required for a raw correlation series")
        series = np.asarray(g, dtype=complex)
    c = series - coherent
    scale = abs(series[0]) if abs(series[0]) > 0 else 1.0
    tail = float(abs(c[-1]) / scale)
    if decayed is False or tail > decay_tol:
        raise TruncationError(f"correlation not decayed at tau_max (|g - g_inf|/|g0| = {tail:.3g})",
                              residual=tail)

    size = 1 << int(math.ceil(math.log2(max(c.size, 2.0 * math.pi / (dt * d_omega)))))
    padded = np.zeros(size, dtype=complex)
    padded[: c.size] = c
    om = 2.0 * math.pi * np.fft.fftfreq(size, d=dt)
    one_sided = dt * (size * np.fft.ifft(padded) - 0.5 * c[0])
    raw_sum = one_sided.copy()
    one_sided += _exponential_tail(om, dt, c)
    if derivatives is None:
        derivatives = _derivatives_from_samples(c, dt)
    one_sided += _euler_maclaurin(om, dt, np.asarray(derivatives, dtype=complex))
    S_full = 2.0 * one_sided.real
    order = np.argsort(om)
    om, S_full = om[order], S_full[order]
    # sum rule over the full sampled band: the discrete inverse transform of the
    # plain trapezoid sum at tau = 0, plus the delta peak
    total = float(np.sum(2.0 * raw_sum.real) / (size * dt)) + float(abs(coherent))

    keep = np.abs(om) <= omega_max + 1e-12
    omega_raw, values_raw = om[keep], S_full[keep]
    if values_raw.min() < -min_value_tol * max(values_raw.max(), 1.0):
        raise AccuracyError(f"spectrum has negative value {values_raw.min():.3g}")
    omega = -omega_raw[::-1]
    values = values_raw[::-1].copy()
    w_obs = observed_frequency(omega, values)
    sigma, multi = fwhm(omega, values, return_flag=True)
    return SpectrumResult(omega=omega, values=values, omega_obs=w_obs, sigma_fwhm=sigma,
                          multi_peak=multi, total_power=total,
                          coherent_weight=float(abs(coherent)),
                          window_power=float(np.trapezoid(values, omega) / (2.0 * np.pi)),
                          omega_raw=omega_raw, values_raw=values_raw)


def _peak_index(omega, values) -> int:
    i = int(np.argmax(values))
    if i == 0 or i == len(values) - 1:
        raise GridTooNarrowError(f"grid too narrow: spectral peak at grid edge omega={omega[i]:.4g}")
    peak = values[i]
    if peak < 2.0 * values[0] or peak < 2.0 * values[-1]:
        raise GridTooNarrowError("grid too narrow: spectral peak does not exceed both grid endpoints by 2x")
    return i


def observed_frequency(omega, values=None) -> float:
    """Peak position by a parabola through the discrete maximum and its neighbours."""
    if isinstance(omega, SpectrumResult):
        return omega.omega_obs
    omega = np.asarray(omega)
    values = np.asarray(values)
    i = _peak_index(omega, values)
    ym, y0, yp = values[i - 1], values[i], values[i + 1]
    denom = ym - 2.0 * y0 + yp
    shift = 0.5 * (ym - yp) / denom if denom != 0 else 0.0
    return float(omega[i] + shift * (omega[i + 1] - omega[i]))


def fwhm(omega, values=None, *, return_flag: bool = False):
    """Full width at half maximum of the dominant peak.

    Half-maximum crossings are located by linear interpolation walking out
    from the peak. With more than two crossings in total the spectrum is
    multi-peaked; the dominant width is still returned and, with
    ``return_flag``, reported alongside ``True``.
    """
    if isinstance(omega, SpectrumResult):
        return (omega.sigma_fwhm, omega.multi_peak) if return_flag else omega.sigma_fwhm
    omega = np.asarray(omega)
    values = np.asarray(values)
    i = _peak_index(omega, values)
    ym, y0, yp = values[i - 1], values[i], values[i + 1]
    denom = ym - 2.0 * y0 + yp
    peak = y0 - 0.125 * (ym - yp) ** 2 / denom if denom != 0 else y0
    half = 0.5 * peak
    lo = i
    while lo > 0 and values[lo] >= half:
        lo -= 1
    hi = i
    while hi < len(values) - 1 and values[hi] >= half:
        hi += 1
    if values[lo] >= half or values[hi] >= half:
        raise GridTooNarrowError("half maximum not reached inside the frequency grid")
    def crossing(a, b):
        return omega[a] + (half - values[a]) * (omega[b] - omega[a]) / (values[b] - values[a])

    left = crossing(lo, lo + 1)
    right = crossing(hi - 1, hi)
    crossings = int(np.count_nonzero(np.diff(values >= half)))
    width = float(right - left)
    multi = crossings > 2
    return (width, multi) if return_flag else width


def resolvent_spectrum(L: Liouvillian, rho_ss, omega_raw) -> np.ndarray:
    """Frequency-domain evaluation ``-2 Re Tr[b^dag (L + i w)^{-1} (b - <b>) rho_ss]``.

    Same literal axis as ``SpectrumResult.omega_raw``. The first row of
    ``L + i w`` is replaced by the trace functional (the source is traceless),
    which keeps the system regular at ``w = 0``.
    """
    rho_ss = np.asarray(rho_ss, dtype=complex)
    n = L.n
    b = annihilation(n)
    v = vec(b @ rho_ss)
    mean_b = trace_row(n) @ v
    v = v - mean_b * vec(rho_ss)
    v[0] = 0.0
    obs = vec(b.conj())
    keep = np.ones(L.dim)
    keep[0] = 0.0
    cols = np.flatnonzero(trace_row(n))
    first = sp.csc_matrix((np.ones(cols.size, dtype=complex), (np.zeros(cols.size, dtype=int), cols)),
                          shape=(L.dim, L.dim))
    eye = sp.identity(L.dim, dtype=complex, format="csc")
    out = []
    for w in np.atleast_1d(omega_raw):
        A = (sp.diags(keep) @ (L.matrix + 1j * w * eye) + first).tocsc()
        x = spla.spsolve(A, v)
        out.append(-2.0 * (obs @ x).real)
    return np.array(out)


def spectrum(rho_ss, L: Liouvillian, **kwargs) -> SpectrumResult:
    """Correlation plus transform in one call; keyword arguments go to both stages."""
    from .dynamics import correlation_bdag_b

    corr_keys = {"tau_grid", "decay_tol", "stop_span", "controls", "n_derivatives", "kernels"}
    ckw = {k: kwargs.pop(k) for k in list(kwargs) if k in corr_keys}
    corr = correlation_bdag_b(rho_ss, L, **ckw)
    if "decay_tol" in ckw:
        kwargs.setdefault("decay_tol", ckw["decay_tol"])
    return power_spectrum(corr, **kwargs)
