"""Influence kernels and the discretized quadratic influence action.

Kernels are the real/imaginary split of twice the two-time correlation,
``k^R = 2 Re C`` and ``k^I = 2i Im C``, with ``k^I`` stored as a purely
imaginary complex number.  The influence table integrates the physical
(Hermitian-coupling) correlation over pairs of time slices.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .correlations import correlation_exponentials
from .errors import DivergenceError, ValidationError
from .fock import BathSpec, LinearBoseBathSpec

__all__ = [
    "KernelPair", "Regime", "kernel_terms", "fermi_kernels",
    "bose_linear_kernels", "bose_bilinear_kernels", "kernel_limits",
    "InfluenceTable", "PathPair", "eta_coefficients", "fv_action",
    "influence_weight",
]


@dataclass(frozen=True)
class KernelPair:
    """Kernel values at lag(s) ``tau``; both components are complex."""

    tau: np.ndarray
    k_real: np.ndarray
    k_imag: np.ndarray


class Regime(str, enum.Enum):
    LOW_T = "LowT"
    HIGH_T = "HighT"


def _trig(energies, tau):
    tau = np.asarray(tau, dtype=float)
    w = energies.reshape((-1,) + (1,) * tau.ndim)
    return tau, np.cos(w * tau), np.sin(w * tau)


def kernel_terms(bath: BathSpec, tau):
    """Mode-resolved kernel summands ``(k^R_kl, k^I_kl)``, shape ``(M, M, ...)``.

    Fermions::

        k^R_kl = -4 g_kl^2 [c_k c_l - s_k s_l T_k T_l]
        k^I_kl = 4i g_kl^2 [s_k c_l T_k + c_k s_l T_l]

    with ``c = cos(E tau)``, ``s = sin(E tau)``, ``T = tanh(beta E / 2)``.
    The bilinear bosonic summands follow from ``k_BB,kl = -coth_k coth_l
    k_F,kl`` applied to both parts.
    """
    tau, c, s = _trig(bath.energies, tau)
    shape = (-1,) + (1,) * tau.ndim
    half = bath.beta * bath.energies / 2
    g2 = (bath.g ** 2).reshape(bath.g.shape + (1,) * tau.ndim)
    if bath.is_fermi:
        T = np.tanh(half).reshape(shape)
        kr = -4.0 * g2 * (c[:, None] * c[None, :]
                          - (s * T)[:, None] * (s * T)[None, :])
        ki = 4j * g2 * ((s * T)[:, None] * c[None, :] + c[:, None] * (s * T)[None, :])
        return kr + 0j, ki
    if bath.beta == 0:
        raise DivergenceError("bilinear bosonic kernels have a coth pole at beta = 0")
    K = (1.0 / np.tanh(half)).reshape(shape)
    kr = 4.0 * g2 * ((c * K)[:, None] * (c * K)[None, :] - s[:, None] * s[None, :])
    ki = -4j * g2 * ((c * K)[:, None] * s[None, :] + s[:, None] * (c * K)[None, :])
    return kr + 0j, ki


def _summed(bath, tau) -> KernelPair:
    kr, ki = kernel_terms(bath, tau)
    return KernelPair(np.asarray(tau, dtype=float), kr.sum(axis=(0, 1))[()],
                      ki.sum(axis=(0, 1))[()])


def fermi_kernels(bath: BathSpec, tau) -> KernelPair:
    """Fermionic noise and dissipation kernels at lag ``tau``."""
    if not bath.is_fermi:
        raise ValidationError("fermi_kernels requires Fermi statistics")
    return _summed(bath, tau)


def bose_bilinear_kernels(bath: BathSpec, tau) -> KernelPair:
    """Kernels of bosonic modes coupled through ``sum g_kl Q_k Q_l``."""
    if bath.is_fermi:
        raise ValidationError("bose_bilinear_kernels requires BoseBilinear statistics")
    return _summed(bath, tau)


def bose_linear_kernels(spec: LinearBoseBathSpec, tau) -> KernelPair:
    """Kernels of harmonic modes coupled linearly through ``sum c_k x_k``.

    ``k^R = sum a_k coth(beta w_k / 2) cos(w_k tau)`` and
    ``k^I = i sum a_k sin(w_k tau)`` with ``a_k = c_k^2 / (2 m_k w_k)``.
    """
    if spec.beta == 0:
        raise DivergenceError("linear bosonic kernels have a coth pole at beta = 0")
    tau, c, s = _trig(spec.omega, tau)
    a = (spec.c ** 2 / (2 * spec.m * spec.omega)).reshape((-1,) + (1,) * tau.ndim)
    coth = (1.0 / np.tanh(spec.beta * spec.omega / 2)).reshape(a.shape)
    kr = np.asarray(np.sum(a * coth * c, axis=0) + 0j)
    ki = np.asarray(1j * np.sum(a * s, axis=0))
    return KernelPair(tau, kr[()], ki[()])


def kernel_limits(bath: BathSpec, tau, regime) -> KernelPair:
    """Low- or high-temperature approximation of the fermionic kernels.

    LowT sets every ``tanh`` to 1, leaving only sum frequencies; HighT sets
    them to 0, so the dissipation kernel vanishes.
    """
    if not bath.is_fermi:
        raise ValidationError("kernel_limits requires Fermi statistics")
    regime = Regime(regime)
    tau, c, s = _trig(bath.energies, tau)
    g2 = (bath.g ** 2).reshape(bath.g.shape + (1,) * tau.ndim)
    if regime is Regime.LOW_T:
        w = bath.energies
        arg = (w[:, None] + w[None, :]).reshape(g2.shape) * tau
        kr = -4.0 * np.sum(g2 * np.cos(arg), axis=(0, 1))
        ki = 4.0 * np.sum(g2 * np.sin(arg), axis=(0, 1))
    else:
        kr = -4.0 * np.sum(g2 * c[:, None] * c[None, :], axis=(0, 1))
        ki = np.zeros_like(kr)
    return KernelPair(tau, (kr + 0j)[()], (1j * ki)[()])


@dataclass(frozen=True, eq=False)
class InfluenceTable:
    """Slice-pair influence coefficients.

    ``eta[i, j]`` for ``j <= i`` is the integral of the physical correlation
    over slice ``i`` (later time) and slice ``j``; the diagonal integrates
    over the half-square ``t1 > t2``.  Entries above the diagonal are zero.
    """

    N: int
    dt: float
    eta: np.ndarray

    def __post_init__(self):
        eta = np.array(self.eta, dtype=complex)
        if self.N < 1 or self.dt <= 0:
            raise ValidationError("InfluenceTable needs N >= 1 and dt > 0")
        if eta.shape != (self.N, self.N):
            raise ValidationError(f"eta must have shape ({self.N}, {self.N})")
        if not np.all(np.isfinite(eta)):
            raise ValidationError("eta entries must be finite")
        eta = np.tril(eta)
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "dt", float(self.dt))


@dataclass(frozen=True, eq=False)
class PathPair:
    """Forward path ``X`` and backward path ``Y`` of slice values in {+1, -1}."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 1 or X.shape != Y.shape:
            raise ValidationError("X and Y must be 1-D and of equal length")
        if not (np.all(np.abs(X) == 1) and np.all(np.abs(Y) == 1)):
            raise ValidationError("path values must be exactly +1 or -1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)


_TAYLOR_CUT = 0.5


def _half_square(x: np.ndarray) -> np.ndarray:
    """``(1 - e^{-ix} - ix) / x^2``: half-square integral of ``e^{-i W u}``.

    Evaluated by its power series near ``x = 0`` (limit 1/2).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < _TAYLOR_CUT
    xs = x[small]
    # (1 - e^{-ix} - ix) / x^2 = -sum_{n>=2} (-i)^n x^(n-2) / n!
    series = np.zeros(xs.shape, dtype=complex)
    term = np.full(xs.shape, -1.0 + 0j)        # (-i)^2 x^0
    fact = 2.0
    for n in range(2, 24):
        series += term / fact
        term = term * (-1j * xs)
        fact *= n + 1
    out[small] = -series
    xl = x[~small]
    out[~small] = (1 - np.exp(-1j * xl) - 1j * xl) / xl ** 2
    return out


def eta_coefficients(bath: BathSpec, N: int, dt: float) -> InfluenceTable:
    """Closed-form influence table for a uniform grid of ``N`` slices.

    The physical correlation is ``sum_r w_r exp(-i W_r tau)``.  For ``i > j``
    a slice pair contributes ``w e^{-i W (i-j) dt} dt^2 sinc^2(W dt / 2)``;
    the diagonal uses the time-ordered half-square.
    """
    N = int(N)
    if N < 1 or not dt > 0:
        raise ValidationError("eta_coefficients needs N >= 1 and dt > 0")
    w, W = correlation_exponentials(bath)
    x = W * dt
    lag = np.arange(N)
    # np.sinc is the normalized sinc, sin(pi y) / (pi y)
    off = dt ** 2 * np.sinc(x / (2 * np.pi)) ** 2
    per_lag = np.exp(-1j * np.outer(lag, x)) @ (w * off)
    per_lag[0] = dt ** 2 * np.sum(w * _half_square(x))
    idx = np.subtract.outer(lag, lag)
    eta = np.where(idx >= 0, per_lag[np.clip(idx, 0, None)], 0.0)
    return InfluenceTable(N, dt, eta)


def _log_influence(X, Y, eta):
    xi = X - Y
    return -np.sum(xi[:, None] * (eta * X[None, :] - eta.conj() * Y[None, :]))


def fv_action(paths: PathPair, table: InfluenceTable) -> complex:
    """Quadratic influence action ``S`` with influence weight ``exp(i S)``.

    ``i S = -sum_{i >= j} (x_i - y_i)(eta_ij x_j - conj(eta_ij) y_j)``, so
    ``S`` vanishes identically when ``X == Y`` and ``Re(i S) <= 0``.
    """
    if paths.X.size != table.N:
        raise ValidationError(f"path length {paths.X.size} != table.N = {table.N}")
    return complex(-1j * _log_influence(paths.X, paths.Y, table.eta))


def influence_weight(paths: PathPair, table: InfluenceTable) -> complex:
    return complex(np.exp(1j * fv_action(paths, table)))
