"""Dense operator representations of small fermionic and bosonic baths.

Fermionic modes are built with a Jordan-Wigner string, mode 0 being the
leftmost tensor factor::

    c_k = sz (x) ... (x) sz (x) s- (x) 1 (x) ... (x) 1

Bosonic modes are truncated at ``n_max`` quanta per mode.  Units are
hbar = k_B = 1, so a mode energy doubles as its angular frequency.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Optional, Sequence

import numpy as np
from scipy import linalg as sla

from .errors import SizeError, ValidationError

__all__ = [
    "Statistics", "BathSpec", "LinearBoseBathSpec", "random_bath",
    "build_fermion_ops", "build_boson_ops", "mode_operators",
    "bath_hamiltonian", "thermal_state", "quadrature", "coupling_operator",
    "physical_coupling", "propagator", "boson_cutoff",
]

MAX_FERMION_MODES = 12
MAX_BOSON_DIM = 4096

_SM = np.array([[0, 1], [0, 0]], dtype=complex)
_SZ = np.diag([1.0, -1.0]).astype(complex)
_ID = np.eye(2, dtype=complex)


class Statistics(str, enum.Enum):
    FERMI = "fermi"
    BOSE_BILINEAR = "bose_bilinear"


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BathSpec:
    """Discrete bath of free modes with a pairwise coupling matrix.

    Parameters
    ----------
    energies : array_like, shape (M,)
        Mode energies, all strictly positive.
    g : array_like, shape (M, M)
        Real coupling matrix; must be exactly antisymmetric.
    beta : float
        Inverse temperature, ``beta >= 0``.  ``beta = 0`` is accepted.
    statistics : Statistics
        Fermionic modes or bilinearly coupled bosonic modes.
    n_max : int, optional
        Boson truncation (quanta per mode).  Required for matrix
        representations of bosonic baths only.
    """

    energies: np.ndarray
    g: np.ndarray
    beta: float
    statistics: Statistics = Statistics.FERMI
    n_max: Optional[int] = None

    def __post_init__(self):
        E = _frozen(self.energies)
        g = _frozen(self.g)
        if E.ndim != 1 or E.size == 0:
            raise ValidationError("energies must be a non-empty 1-D array")
        if not np.all(np.isfinite(E)) or np.any(E <= 0):
            raise ValidationError("energies must be finite and > 0")
        M = E.size
        if g.shape != (M, M):
            raise ValidationError(f"g must have shape ({M}, {M}), got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValidationError("g must be finite")
        if not np.array_equal(g, -g.T):
            raise ValidationError("g must be antisymmetric: g[k][l] == -g[l][k]")
        beta = float(self.beta)
        if not math.isfinite(beta) or beta < 0:
            raise ValidationError("beta must be finite and >= 0")
        stats = Statistics(self.statistics)
        n_max = self.n_max
        if n_max is not None:
            n_max = int(n_max)
            if n_max < 1:
                raise ValidationError("n_max must be a positive integer")
        object.__setattr__(self, "energies", E)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "statistics", stats)
        object.__setattr__(self, "n_max", n_max)

    @property
    def num_modes(self) -> int:
        return self.energies.size

    @property
    def is_fermi(self) -> bool:
        return self.statistics is Statistics.FERMI

    def scaled(self, lam: float) -> "BathSpec":
        return BathSpec(self.energies, lam * self.g, self.beta,
                        self.statistics, self.n_max)

    def replace(self, **changes) -> "BathSpec":
        kw = dict(energies=self.energies, g=self.g, beta=self.beta,
                  statistics=self.statistics, n_max=self.n_max)
        kw.update(changes)
        return BathSpec(**kw)


@dataclass(frozen=True, eq=False)
class LinearBoseBathSpec:
    """Harmonic oscillators coupled linearly through ``sum_k c_k x_k``."""

    omega: np.ndarray
    c: np.ndarray
    m: np.ndarray
    beta: float

    def __post_init__(self):
        omega, c, m = _frozen(self.omega), _frozen(self.c), _frozen(self.m)
        if omega.ndim != 1 or omega.size == 0:
            raise ValidationError("omega must be a non-empty 1-D array")
        if c.shape != omega.shape or m.shape != omega.shape:
            raise ValidationError("omega, c and m must have equal length")
        if np.any(omega <= 0) or np.any(m <= 0):
            raise ValidationError("omega and m must be > 0")
        beta = float(self.beta)
        if not math.isfinite(beta) or beta < 0:
            raise ValidationError("beta must be finite and >= 0")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "beta", beta)

    @property
    def num_modes(self) -> int:
        return self.omega.size


def random_bath(rng: np.random.Generator, num_modes: int, *,
                beta: Optional[float] = None,
                statistics: Statistics = Statistics.FERMI,
                n_max: Optional[int] = None) -> BathSpec:
    """Draw a well-conditioned random bath.

    Energies are uniform in [0.5, 2.0], upper-triangle couplings uniform in
    [-0.3, 0.3] (then antisymmetrized) and, unless given, beta is drawn
    from {0.1, 1, 10}.
    """
    E = rng.uniform(0.5, 2.0, size=num_modes)
    upper = np.triu(rng.uniform(-0.3, 0.3, size=(num_modes, num_modes)), 1)
    if beta is None:
        beta = float(rng.choice([0.1, 1.0, 10.0]))
    return BathSpec(E, upper - upper.T, beta, statistics, n_max)


def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)


@lru_cache(maxsize=16)
def _fermion_ops(M: int) -> tuple:
    ops = []
    for k in range(M):
        c = _kron_all([_SZ] * k + [_SM] + [_ID] * (M - k - 1))
        c.setflags(write=False)
        ops.append(c)
    return tuple(ops)


def build_fermion_ops(M: int) -> list:
    """Annihilation operators of ``M`` fermionic modes (Jordan-Wigner)."""
    if not isinstance(M, (int, np.integer)) or not 1 <= M <= MAX_FERMION_MODES:
        raise SizeError(f"number of fermion modes must be in [1, {MAX_FERMION_MODES}], got {M}")
    return list(_fermion_ops(int(M)))


@lru_cache(maxsize=16)
def _boson_ops(M: int, n_max: int) -> tuple:
    a = np.diag(np.sqrt(np.arange(1, n_max + 1)), 1).astype(complex)
    eye = np.eye(n_max + 1, dtype=complex)
    ops = []
    for k in range(M):
        op = _kron_all([eye] * k + [a] + [eye] * (M - k - 1))
        op.setflags(write=False)
        ops.append(op)
    return tuple(ops)


def build_boson_ops(M: int, n_max: int) -> list:
    """Truncated annihilation operators of ``M`` bosonic modes."""
    if M < 1 or n_max < 1:
        raise SizeError("M and n_max must be positive")
    if (n_max + 1) ** M > MAX_BOSON_DIM:
        raise SizeError(f"boson Fock dimension (n_max+1)^M = {(n_max + 1) ** M} "
                        f"exceeds {MAX_BOSON_DIM}")
    return list(_boson_ops(int(M), int(n_max)))


def boson_cutoff(energies, beta: float, tol: float = 1e-8) -> int:
    """Smallest ``n_max`` with ``exp(-beta E_min n) (n+1) < tol``.

    The factor ``n+1`` bounds the error the truncated top level makes in
    ``<a a^dagger>``.
    """
    if beta <= 0:
        raise ValidationError("a finite boson cutoff needs beta > 0")
    x = beta * float(np.min(energies))
    n = 1
    while math.exp(-x * n) * (n + 1) >= tol:
        n += 1
    return n


def mode_operators(bath: BathSpec) -> list:
    if bath.is_fermi:
        return build_fermion_ops(bath.num_modes)
    if bath.n_max is None:
        raise ValidationError("bosonic matrix representation requires n_max")
    return build_boson_ops(bath.num_modes, bath.n_max)


def _occupations(bath: BathSpec) -> np.ndarray:
    """Occupation numbers of the product basis, shape (dim, M)."""
    levels = 2 if bath.is_fermi else bath.n_max + 1
    grids = np.indices((levels,) * bath.num_modes).reshape(bath.num_modes, -1)
    return grids.T.astype(float)


def bath_hamiltonian(bath: BathSpec) -> np.ndarray:
    """``H_B = sum_k E_k n_k`` as a (diagonal) dense matrix."""
    return np.diag((_occupations(bath) @ bath.energies).astype(complex))


def thermal_state(bath: BathSpec) -> np.ndarray:
    """Normalized Gibbs state ``exp(-beta H_B) / Z`` in the occupation basis."""
    energy = _occupations(bath) @ bath.energies
    w = np.exp(-bath.beta * (energy - energy.min()))
    return np.diag((w / w.sum()).astype(complex))


def quadrature(bath: BathSpec, k: int, t: float) -> np.ndarray:
    """Interaction-picture quadrature ``c_k e^{-i w_k t} + h.c.``"""
    if not 0 <= k < bath.num_modes:
        raise IndexError(f"mode index {k} out of range for {bath.num_modes} modes")
    c = mode_operators(bath)[k]
    ph = np.exp(-1j * bath.energies[k] * t)
    return c * ph + c.conj().T * np.conj(ph)


def coupling_operator(bath: BathSpec, t: float = 0.0) -> np.ndarray:
    """Bath factor of the interaction, ``B(t) = sum_kl g_kl Q_k(t) Q_l(t)``.

    For fermions with real antisymmetric ``g`` this operator is
    anti-Hermitian.  Bosonic quadratures commute, so the bosonic operator is
    taken over ordered pairs, ``2 sum_{k<l} g_kl Q_k Q_l``.
    """
    M = bath.num_modes
    Q = [quadrature(bath, k, t) for k in range(M)]
    B = np.zeros_like(Q[0])
    for k in range(M):
        for l in range(k + 1, M):
            if bath.g[k, l] == 0.0:
                continue
            if bath.is_fermi:
                B += bath.g[k, l] * (Q[k] @ Q[l]) + bath.g[l, k] * (Q[l] @ Q[k])
            else:
                B += 2.0 * bath.g[k, l] * (Q[k] @ Q[l])
    return B


def physical_coupling(bath: BathSpec, t: float = 0.0) -> np.ndarray:
    """Hermitian bath operator entering the qubit interaction ``sz (x) B``.

    Fermionic: ``i sum_kl g_kl Q_k Q_l``.  Bosonic: unchanged.
    """
    B = coupling_operator(bath, t)
    return 1j * B if bath.is_fermi else B


def propagator(H: np.ndarray, dt: float, *, atol: float = 1e-12) -> np.ndarray:
    """``exp(-i H dt)`` for Hermitian ``H`` via spectral decomposition."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValidationError("H must be a square matrix")
    scale = max(1.0, float(np.max(np.abs(H))) if H.size else 1.0)
    if np.max(np.abs(H - H.conj().T), initial=0.0) > atol * scale:
        raise ValidationError("propagator requires a Hermitian matrix")
    w, V = sla.eigh(H)
    return (V * np.exp(-1j * w * dt)) @ V.conj().T
