"""Reduced qubit dynamics: exact propagation and influence-functional path sums.

The qubit couples to the bath through ``sz (x) B_phys`` with ``H_S = eps/2 sz
+ delta/2 sx``.  Basis index 0 is the ``sz = +1`` state.  Path sums use a
symmetric splitting: each slice of width ``dt`` is ``e^{-i H_S dt/2}``
followed by the bath interaction at constant path value and another
``e^{-i H_S dt/2}``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import linalg as sla

from . import fock
from .correlations import correlation_exponentials
from .errors import SizeError, ValidationError
from .fock import BathSpec
from .kernels import InfluenceTable, eta_coefficients

__all__ = [
    "SystemSpec", "TimeGrid", "TrajectorySeries", "Observable",
    "exact_reduced_dynamics", "pathsum_reduced_dynamics",
    "gaussian_reduced_dynamics", "richardson", "trace_norm",
    "max_trace_distance", "ScalingResult", "error_scaling",
    "observable_series",
]

SZ = np.diag([1.0, -1.0]).astype(complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
MAX_TOTAL_DIM = 8192
MAX_PSEUDOMODE_DIM = 4096
MAX_MEMORY = 12


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Qubit with level splitting ``epsilon``, tunnelling ``delta`` and state ``rho0``."""

    epsilon: float
    delta: float
    rho0: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho0, dtype=complex)
        if rho.shape != (2, 2):
            raise ValidationError("rho0 must be a 2x2 matrix")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise ValidationError("rho0 must be Hermitian")
        if abs(np.trace(rho) - 1) > 1e-12:
            raise ValidationError("rho0 must have unit trace")
        if np.min(np.linalg.eigvalsh(rho)) < -1e-12:
            raise ValidationError("rho0 must be positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho0", rho)
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def hamiltonian(self) -> np.ndarray:
        return 0.5 * self.epsilon * SZ + 0.5 * self.delta * SX


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``N`` slices on ``[t0, tf]``."""

    t0: float
    tf: float
    N: int

    def __post_init__(self):
        if not self.tf > self.t0:
            raise ValidationError("TimeGrid needs tf > t0")
        if int(self.N) != self.N or self.N < 1:
            raise ValidationError("TimeGrid needs an integer N >= 1")

    @property
    def dt(self) -> float:
        return (self.tf - self.t0) / self.N

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.N + 1)

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t0, self.tf, self.N * factor)


class Observable(str, enum.Enum):
    SZ = "Sz"
    SX = "Sx"
    SY = "Sy"
    PURITY = "Purity"


@dataclass(frozen=True, eq=False)
class TrajectorySeries:
    """Reduced density matrices ``rho[n]`` at ``times[n]``."""

    times: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        times = np.asarray(self.times, dtype=float)
        if rho.shape != (times.size, 2, 2):
            raise ValidationError("rho must have shape (len(times), 2, 2)")
        herm = np.max(np.abs(rho - rho.conj().transpose(0, 2, 1)), initial=0.0)
        tr = np.max(np.abs(np.trace(rho, axis1=1, axis2=2) - 1), initial=0.0)
        if herm > 1e-10 or tr > 1e-8:
            raise ValidationError(f"reduced states violate Hermiticity ({herm:.2e}) "
                                  f"or unit trace ({tr:.2e})")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "times", times)

    @property
    def observables(self) -> dict:
        return {o.value: observable_series(self, o)
                for o in (Observable.SZ, Observable.SX, Observable.PURITY)}

    @property
    def trace_deviation(self) -> np.ndarray:
        return np.abs(np.trace(self.rho, axis1=1, axis2=2) - 1)


def observable_series(traj: TrajectorySeries, which) -> np.ndarray:
    """``<sz>``, ``<sx>``, ``<sy>`` or the purity ``Tr rho^2`` along a trajectory."""
    which = Observable(which)
    r = traj.rho
    if which is Observable.SZ:
        return (r[:, 0, 0] - r[:, 1, 1]).real
    if which is Observable.SX:
        return 2 * r[:, 0, 1].real
    if which is Observable.SY:
        return -2 * r[:, 0, 1].imag
    return np.einsum("nij,nji->n", r, r).real


def trace_norm(a: np.ndarray) -> float:
    """Schatten-1 norm (sum of singular values)."""
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def max_trace_distance(a: TrajectorySeries, b: TrajectorySeries) -> float:
    """Maximum over shared grid times of ``||rho_a - rho_b||_1``."""
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times):
        raise ValidationError("trajectories live on different time grids")
    return max(trace_norm(x - y) for x, y in zip(a.rho, b.rho))


def richardson(coarse: TrajectorySeries, fine: TrajectorySeries) -> TrajectorySeries:
    """Second-order extrapolation ``(4 rho(dt/2) - rho(dt)) / 3`` on the coarse grid."""
    step = (fine.times.size - 1) // (coarse.times.size - 1)
    if step != 2 or not np.allclose(fine.times[::2], coarse.times):
        raise ValidationError("fine trajectory must use half the coarse step")
    return TrajectorySeries(coarse.times, (4 * fine.rho[::2] - coarse.rho) / 3)


def _reduced_series(Z, phases, rho_total, dim_sys=2):
    """Reduced states of ``Z diag(u_n) Z^H rho Z diag(conj u_n) Z^H``.

    ``phases`` has shape ``(n_times, D)`` with the eigenphase factors per time.
    The bath trace is folded into ``D x D`` matrices once, so each time point
    costs ``O(D^2)``.
    """
    D = Z.shape[0]
    R = Z.conj().T @ rho_total @ Z
    Zs = Z.reshape(dim_sys, D // dim_sys, D)
    out = np.empty((phases.shape[0], dim_sys, dim_sys), dtype=complex)
    for a in range(dim_sys):
        for b in range(a, dim_sys):
            M = R * (Zs[a].T @ Zs[b].conj())
            out[:, a, b] = np.sum((phases @ M) * phases.conj(), axis=1)
            if b != a:
                out[:, b, a] = out[:, a, b].conj()
    for a in range(dim_sys):
        out[:, a, a] = out[:, a, a].real
    return out


def _resolve_bath(bath: BathSpec) -> BathSpec:
    if not bath.is_fermi and bath.n_max is None:
        return bath.replace(n_max=fock.boson_cutoff(bath.energies, bath.beta))
    return bath


def exact_reduced_dynamics(sys: SystemSpec, bath: BathSpec,
                           grid: TimeGrid) -> TrajectorySeries:
    """Brute-force propagation of qubit plus bath with a partial trace."""
    bath = _resolve_bath(bath)
    rho_b = fock.thermal_state(bath)
    dim = 2 * rho_b.shape[0]
    if dim > MAX_TOTAL_DIM:
        raise SizeError(f"total dimension {dim} exceeds {MAX_TOTAL_DIM}")
    eye_b = np.eye(rho_b.shape[0])
    H = (np.kron(sys.hamiltonian, eye_b) + np.kron(np.eye(2), fock.bath_hamiltonian(bath))
         + np.kron(SZ, fock.physical_coupling(bath)))
    w, Z = sla.eigh(H)
    t = grid.times - grid.t0
    phases = np.exp(-1j * np.outer(t, w))
    rho = _reduced_series(Z, phases, np.kron(sys.rho0, rho_b))
    return TrajectorySeries(grid.times, rho)


# pair index p = 2 a + b for ket index a and bra index b
_KET = np.array([0, 0, 1, 1])
_BRA = np.array([0, 1, 0, 1])
_X = 1.0 - 2.0 * _KET
_Y = 1.0 - 2.0 * _BRA
_XI = _X - _Y


def _phi(eta: complex) -> np.ndarray:
    """Influence factor ``[p_new, p_old]`` for one slice pair."""
    return np.exp(-_XI[:, None] * (eta * _X[None, :] - np.conj(eta) * _Y[None, :]))


def pathsum_reduced_dynamics(sys: SystemSpec, table: InfluenceTable, grid: TimeGrid,
                             memory: Optional[int] = None) -> TrajectorySeries:
    """Forward/backward path sum weighted by the quadratic influence action.

    An augmented density tensor carries the last ``memory`` slice pairs;
    influence between slices further apart is dropped.  ``memory=None``
    keeps the full history (exact summation over all ``4^N`` path pairs).
    """
    N = grid.N
    if table.N != N or not math.isclose(table.dt, grid.dt, rel_tol=1e-12):
        raise ValidationError("influence table does not match the time grid")
    K = N if memory is None else int(memory)
    if not 1 <= K <= N:
        raise ValidationError(f"memory must be in [1, {N}], got {memory}")
    if K > MAX_MEMORY:
        raise SizeError(f"memory of {K} slices exceeds {MAX_MEMORY}; pass a shorter memory")
    eta = table.eta
    Kh = fock.propagator(sys.hamiltonian, grid.dt / 2)
    Kf = Kh @ Kh
    bond = (Kf[_KET[:, None], _KET[None, :]] * Kf[_BRA[:, None], _BRA[None, :]].conj()).T
    rho_half = Kh @ sys.rho0 @ Kh.conj().T

    def emit(A):
        v = A.sum(axis=tuple(range(A.ndim - 1))) if A.ndim > 1 else A
        return (Kh[:, _KET] * v) @ Kh[:, _BRA].conj().T

    A = rho_half[_KET, _BRA] * np.diag(_phi(eta[0, 0]))
    window = [0]
    out = [sys.rho0, emit(A)]
    for n in range(1, N):
        A = A[..., :, None] * bond
        h = len(window)
        for axis, j in enumerate(window):
            if n - j < K:
                shape = [1] * (h + 1)
                shape[axis] = 4
                shape[h] = 4
                A = A * _phi(eta[n, j]).T.reshape(shape)
        A = A * np.diag(_phi(eta[n, n]))
        window.append(n)
        if len(window) > K:
            A = A.sum(axis=0)
            window.pop(0)
        out.append(emit(A))
    return TrajectorySeries(grid.times, np.array(out))


@dataclass(frozen=True)
class _Pseudomodes:
    freqs: np.ndarray
    couplings: np.ndarray
    occupations: np.ndarray
    static_variance: float


def _pseudomodes(bath: BathSpec, rtol: float = 1e-12) -> _Pseudomodes:
    """Thermal oscillators reproducing the physical correlation exactly."""
    w, W = correlation_exponentials(bath)
    if w.size == 0:
        return _Pseudomodes(np.zeros(0), np.zeros(0), np.zeros(0), 0.0)
    scale = max(1.0, float(np.max(np.abs(W))))
    static = np.abs(W) <= rtol * scale
    groups = {}
    for wi, Wi in zip(w[~static], W[~static]):
        key = None
        for k in groups:
            if abs(abs(Wi) - k) <= rtol * scale:
                key = k
                break
        key = abs(Wi) if key is None else key
        up, down = groups.get(key, (0.0, 0.0))
        groups[key] = (up + wi, down) if Wi > 0 else (up, down + wi)
    freqs, cpl, occ = [], [], []
    for Om in sorted(groups):
        up, down = groups[Om]
        c2 = up - down
        if not c2 > rtol * up:
            raise ValidationError("correlation has no pseudomode representation "
                                  "(classical noise component, e.g. beta = 0)")
        freqs.append(Om)
        cpl.append(math.sqrt(c2))
        occ.append(down / c2)
    return _Pseudomodes(np.array(freqs), np.array(cpl), np.array(occ),
                        float(np.sum(w[static])))


def _levels(Om, c, n, tol):
    beta_eff = math.log1p(1.0 / n) if n > 0 else math.inf
    levels = 1
    while math.exp(-beta_eff * levels) * (levels + 1) >= tol:
        levels += 1
    return levels + 6 + math.ceil(4 * (c / Om) ** 2)


def _aux_operators(pm: _Pseudomodes, tol: float):
    dims = [_levels(Om, c, n, tol) + 1 for Om, c, n in
            zip(pm.freqs, pm.couplings, pm.occupations)]
    D = int(np.prod(dims)) if dims else 1
    if 2 * D > MAX_PSEUDOMODE_DIM:
        raise SizeError(f"pseudomode space of dimension {2 * D} exceeds {MAX_PSEUDOMODE_DIM}")
    H = np.zeros((D, D), dtype=complex)
    X = np.zeros((D, D), dtype=complex)
    rho = np.ones((1, 1))
    for r, d in enumerate(dims):
        a = np.diag(np.sqrt(np.arange(1, d)), 1)
        left = np.eye(int(np.prod(dims[:r])))
        right = np.eye(int(np.prod(dims[r + 1:])))
        num = np.kron(np.kron(left, np.diag(np.arange(d))), right)
        H += pm.freqs[r] * num
        X += pm.couplings[r] * np.kron(np.kron(left, a + a.T), right)
        n = pm.occupations[r]
        p = (n / (1 + n)) ** np.arange(d) if n > 0 else (np.arange(d) == 0) * 1.0
        rho = np.kron(rho, np.diag(p / p.sum()))
    return H, X, rho


def _pseudomode_run(sys, H_aux, X_aux, rho_aux, h, grid, split):
    I = np.eye(H_aux.shape[0])
    rho_total = np.kron(sys.rho0, rho_aux)
    n = np.arange(grid.N + 1)
    if not split:
        H = (np.kron(sys.hamiltonian, I) + np.kron(np.eye(2), H_aux)
             + np.kron(SZ, X_aux + h * I))
        w, Z = sla.eigh(H)
        return _reduced_series(Z, np.exp(-1j * np.outer(n * grid.dt, w)), rho_total)
    Kh = np.kron(fock.propagator(sys.hamiltonian, grid.dt / 2), I)
    middle = sla.block_diag(fock.propagator(H_aux + X_aux + h * I, grid.dt),
                            fock.propagator(H_aux - X_aux - h * I, grid.dt))
    W = Kh @ middle @ Kh
    T, Z = sla.schur(W, output="complex")
    lam = np.diag(T)
    phases = np.abs(lam)[None, :] ** n[:, None] * np.exp(1j * np.outer(n, np.angle(lam)))
    return _reduced_series(Z, phases, rho_total)


def gaussian_reduced_dynamics(sys: SystemSpec, bath: BathSpec, grid: TimeGrid, *,
                              split: bool = True, tol: float = 1e-12,
                              quadrature_nodes: int = 64) -> TrajectorySeries:
    """Quadratic-influence dynamics contracted exactly over full memory.

    The physical correlation ``sum w e^{-i W tau}`` is realized by thermal
    harmonic pseudomodes (one per distinct ``|W| > 0``); a static component
    (degenerate mode energies) becomes a Gaussian random field averaged by
    Gauss-Hermite quadrature.  With ``split=True`` the result equals the
    full-memory :func:`pathsum_reduced_dynamics` on the table from
    :func:`~fvkernel.kernels.eta_coefficients`; ``split=False`` gives its
    ``dt -> 0`` limit.

    Parameters
    ----------
    tol : float
        Thermal tail tolerance used to truncate each pseudomode.
    quadrature_nodes : int
        Gauss-Hermite nodes for the static component, if present.
    """
    pm = _pseudomodes(bath)
    H_aux, X_aux, rho_aux = _aux_operators(pm, tol)
    if pm.static_variance > 0:
        nodes, weights = hermegauss(quadrature_nodes)
        weights = weights / weights.sum()
        fields = nodes * math.sqrt(pm.static_variance)
    else:
        fields, weights = np.zeros(1), np.ones(1)
    rho = sum(wt * _pseudomode_run(sys, H_aux, X_aux, rho_aux, h, grid, split)
              for h, wt in zip(fields, weights))
    return TrajectorySeries(grid.times, rho)


@dataclass(frozen=True)
class ScalingResult:
    """Error ``D(lambda)`` and its fitted log-log slope."""

    lambdas: np.ndarray
    distances: np.ndarray
    slope: float
    intercept: float
    inconclusive: bool


NOISE_FLOOR = 1e-12


def _influence_dynamics(sys, bath, grid, method, memory):
    if method == "gaussian":
        return gaussian_reduced_dynamics(sys, bath, grid)
    table = eta_coefficients(bath, grid.N, grid.dt)
    return pathsum_reduced_dynamics(sys, table, grid, memory)


def error_scaling(sys: SystemSpec, bath_template: BathSpec, grid: TimeGrid,
                  lambdas: Sequence[float], *, method: str = "gaussian",
                  extrapolate: bool = True,
                  memory: Optional[int] = None) -> ScalingResult:
    """Coupling-strength scaling of the quadratic-influence error.

    For each ``lambda`` the couplings are ``lambda * g``; ``D`` is the
    largest trace-norm distance between exact and influence-functional
    reduced states over the grid.  With ``extrapolate`` the influence
    trajectory is Richardson-extrapolated from steps ``dt`` and ``dt/2``.

    Parameters
    ----------
    method : {"gaussian", "table"}
        ``"gaussian"`` contracts the full memory through pseudomodes;
        ``"table"`` runs :func:`pathsum_reduced_dynamics` with ``memory``.
    """
    if method not in ("gaussian", "table"):
        raise ValidationError(f"unknown scaling method {method!r}")
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size < 2 or np.any(lambdas <= 0):
        raise ValidationError("need at least two positive lambda values")
    D = []
    for lam in lambdas:
        bath = bath_template.scaled(lam)
        exact = exact_reduced_dynamics(sys, bath, grid)
        approx = _influence_dynamics(sys, bath, grid, method, memory)
        if extrapolate:
            fine = _influence_dynamics(sys, bath, grid.refined(2), method,
                                       None if memory is None else 2 * memory)
            approx = richardson(approx, fine)
        D.append(max_trace_distance(exact, approx))
    D = np.array(D)
    ok = D > NOISE_FLOOR
    if ok.sum() < 2:
        return ScalingResult(lambdas, D, math.nan, math.nan, True)
    slope, intercept = np.polyfit(np.log(lambdas[ok]), np.log(D[ok]), 1)
    return ScalingResult(lambdas, D, float(slope), float(intercept), False)
