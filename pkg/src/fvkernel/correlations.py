"""Bath correlation functions of the quadratic coupling operator.

The bath enters the interaction through ``B(t) = sum_kl g_kl Q_k(t) Q_l(t)``
(see :func:`fvkernel.fock.coupling_operator`).  Multi-time super-operator
correlations place each insertion to the left or the right of the bath
state::

    C^{d}(t_1..t_n) = Tr[ T_desc(prod_{d_i=L} B(t_i)) rho_B T_asc(prod_{d_i=R} B(t_i)) ]

Cyclicity turns this into a plain correlation ``Tr[B(s_1)...B(s_n) rho_B]``
of the re-ordered times ``s`` (right insertions ascending, then left
insertions descending); :func:`superoperator_order` computes that order.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import fock
from .errors import DivergenceError, ValidationError
from .fock import BathSpec

__all__ = [
    "Side", "parse_sides", "all_side_combinations", "superoperator_order",
    "occupations", "pair_expectation", "pair_table", "two_time_analytic",
    "physical_correlation", "correlation_exponentials", "ordered_trace",
    "multitime_trace",
    "wick_multitime", "cumulant4", "g4_normalized", "wick_check",
    "PairingReport", "pairing_decomposition",
]


class Side(str, enum.Enum):
    """Side of the bath state an insertion acts on (LEFT is ``+``/``>``)."""

    LEFT = "L"
    RIGHT = "R"


_SIDE_ALIASES = {"L": Side.LEFT, "+": Side.LEFT, ">": Side.LEFT,
                 "R": Side.RIGHT, "-": Side.RIGHT, "<": Side.RIGHT}


def parse_sides(d) -> tuple:
    """Accept a string such as ``"LRRL"`` / ``"+--+"`` or a sequence of Side."""
    out = []
    for s in d:
        if isinstance(s, Side):
            out.append(s)
        elif s in _SIDE_ALIASES:
            out.append(_SIDE_ALIASES[s])
        else:
            raise ValidationError(f"unknown super-operator index {s!r}")
    return tuple(out)


def all_side_combinations(n: int) -> list:
    return [tuple(c) for c in itertools.product((Side.LEFT, Side.RIGHT), repeat=n)]


def superoperator_order(times: Sequence[float], d) -> list:
    """Argument indices in the order the insertions appear in the plain trace.

    Right insertions come first in ascending time, then left insertions in
    descending time.  Equal times keep their argument order.
    """
    d = parse_sides(d)
    if len(d) != len(times):
        raise ValidationError("times and super-operator indices differ in length")
    right = [i for i in range(len(d)) if d[i] is Side.RIGHT]
    left = [i for i in range(len(d)) if d[i] is Side.LEFT]
    right.sort(key=lambda i: times[i])
    left.sort(key=lambda i: -times[i])
    return right + left


def occupations(bath: BathSpec) -> np.ndarray:
    """Thermal occupation of each mode (Fermi-Dirac or Bose-Einstein)."""
    x = bath.beta * bath.energies
    if bath.is_fermi:
        return 1.0 / (np.exp(x) + 1.0)
    if bath.beta == 0:
        raise DivergenceError("bosonic occupation diverges at beta = 0")
    return 1.0 / np.expm1(x)


def pair_table(bath: BathSpec, tau) -> np.ndarray:
    """``<Q_k(t1) Q_k(t2)>`` for every mode, lag ``tau = t1 - t2``.

    Returns shape ``(M,) + np.shape(tau)``.
    """
    tau = np.asarray(tau, dtype=float)
    w = bath.energies.reshape((-1,) + (1,) * tau.ndim)
    x = bath.beta * w / 2
    cos, sin = np.cos(w * tau), np.sin(w * tau)
    if bath.is_fermi:
        return cos - 1j * np.tanh(x) * sin
    if bath.beta == 0:
        raise DivergenceError("bosonic pair expectation has a coth pole at beta = 0")
    return cos / np.tanh(x) - 1j * sin


def pair_expectation(bath: BathSpec, k: int, t1, t2):
    """Thermal ``<Q_k(t1) Q_k(t2)>``.

    Fermions: ``cos w tau - i tanh(beta E/2) sin w tau``.
    Bosons: ``coth(beta E/2) cos w tau - i sin w tau``.
    """
    if not 0 <= k < bath.num_modes:
        raise IndexError(f"mode index {k} out of range")
    tau = np.subtract(t1, t2, dtype=float)
    return pair_table(bath, tau)[k][()]


def _sign(bath: BathSpec) -> float:
    # exchange of the two modes inside Tr[Q_k Q_l Q_k Q_l rho] costs a
    # fermionic sign; the (k,l) and (l,k) orderings contribute equally
    return -2.0 if bath.is_fermi else 2.0


def two_time_analytic(bath: BathSpec, t1, t2):
    """Closed form of ``Tr[B(t1) B(t2) rho_B]``.

    ``C = -2 sum_kl g_kl^2 <Q_k Q_k> <Q_l Q_l>`` for fermions and
    ``+2 sum_kl ...`` (with bosonic pair expectations) for the bilinear
    bosonic bath.
    """
    tau = np.subtract(t1, t2, dtype=float)
    P = pair_table(bath, tau)
    g2 = bath.g ** 2
    return (_sign(bath) * np.einsum("kl,k...,l...->...", g2, P, P))[()]


def physical_correlation(bath: BathSpec, t1, t2):
    """Correlation of the Hermitian coupling used in the dynamics.

    Equals ``-two_time_analytic`` for fermions (coupling ``iB``) and
    ``two_time_analytic`` for bosons.  It is a positive-type kernel.
    """
    c = two_time_analytic(bath, t1, t2)
    return -c if bath.is_fermi else c


def correlation_exponentials(bath: BathSpec):
    """Weights and frequencies with ``physical_correlation = sum w e^{-i W tau}``.

    Returns
    -------
    weights, freqs : ndarray
        Real non-negative weights and real (signed) frequencies, one entry
        per (ordered mode pair, branch); zero-weight entries are dropped.
    """
    n = occupations(bath)
    if bath.is_fermi:
        up, down = 1.0 - n, n          # coefficients of e^{-iwt}, e^{+iwt}
    else:
        up, down = 1.0 + n, n
    E = bath.energies
    weights, freqs = [], []
    M = bath.num_modes
    for k in range(M):
        for l in range(M):
            g2 = bath.g[k, l] ** 2
            if g2 == 0.0:
                continue
            for ak, sk in ((up[k], 1.0), (down[k], -1.0)):
                for al, sl in ((up[l], 1.0), (down[l], -1.0)):
                    weights.append(2.0 * g2 * ak * al)
                    freqs.append(sk * E[k] + sl * E[l])
    weights, freqs = np.array(weights), np.array(freqs)
    keep = weights != 0.0
    return weights[keep], freqs[keep]


def _resolve_bath(bath: BathSpec) -> BathSpec:
    if not bath.is_fermi and bath.n_max is None:
        if bath.beta == 0:
            raise DivergenceError("bosonic traces need beta > 0 to choose a cutoff")
        return bath.replace(n_max=fock.boson_cutoff(bath.energies, bath.beta))
    return bath


def ordered_trace(bath: BathSpec, times: Sequence[float]) -> complex:
    """Plain correlation ``Tr[B(t_1) B(t_2) ... B(t_n) rho_B]`` in argument order."""
    times = [float(t) for t in times]
    if not times:
        raise ValidationError("need at least one time")
    bath = _resolve_bath(bath)
    rho = np.diag(fock.thermal_state(bath)).copy()
    if not np.any(bath.g):
        return 0j
    cache = {}
    prod = None
    for t in times:
        if t not in cache:
            cache[t] = fock.coupling_operator(bath, t)
        prod = cache[t] if prod is None else prod @ cache[t]
    return complex(np.sum(np.diag(prod) * rho))


def multitime_trace(bath: BathSpec, times: Sequence[float], d) -> complex:
    """Super-operator correlation of ``n in {2, 4}`` insertions by dense traces."""
    times = [float(t) for t in times]
    if len(times) not in (2, 4):
        raise ValidationError("multitime_trace supports n = 2 or 4 insertions")
    order = superoperator_order(times, d)
    return ordered_trace(bath, [times[i] for i in order])


@lru_cache(maxsize=4)
def _matchings(n: int) -> tuple:
    """Perfect matchings of ``range(n)`` with their permutation signs."""
    def rec(items):
        if not items:
            yield ()
            return
        a = items[0]
        for j in range(1, len(items)):
            rest = items[1:j] + items[j + 1:]
            for m in rec(rest):
                yield ((a, items[j]),) + m

    out = []
    for m in rec(tuple(range(n))):
        perm = [x for pair in m for x in pair]
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        out.append((m, -1.0 if inv % 2 else 1.0))
    return tuple(out)


def wick_multitime(bath: BathSpec, times: Sequence[float], d) -> complex:
    """Fermionic super-operator correlation via Wick's theorem.

    Independent of the Jordan-Wigner matrices: every index assignment of
    the ``2n`` quadratures is contracted with signed pair expectations
    (a Pfaffian expanded over perfect matchings).
    """
    if not bath.is_fermi:
        raise ValidationError("wick_multitime is implemented for fermionic baths")
    times = [float(t) for t in times]
    n = len(times)
    if n not in (2, 3, 4):
        raise ValidationError("wick_multitime supports n = 2, 3 or 4 insertions")
    s = [times[i] for i in superoperator_order(times, d)]
    pairs = [(k, l) for k in range(bath.num_modes) for l in range(bath.num_modes)
             if bath.g[k, l] != 0.0]
    if not pairs:
        return 0j
    pairs = np.array(pairs)
    combos = np.array(list(itertools.product(range(len(pairs)), repeat=n)))
    modes = pairs[combos].reshape(len(combos), 2 * n)      # op a -> mode
    weight = np.prod(bath.g[pairs[combos, 0], pairs[combos, 1]], axis=1)
    op_time = np.repeat(np.arange(n), 2)
    ptab = pair_table(bath, np.subtract.outer(s, s))       # (M, n, n)
    total = np.zeros(len(combos), dtype=complex)
    for matching, sign in _matchings(2 * n):
        term = np.full(len(combos), sign, dtype=complex)
        for a, b in matching:
            same = modes[:, a] == modes[:, b]
            term *= np.where(same, ptab[modes[:, a], op_time[a], op_time[b]], 0.0)
        total += term
    return complex(np.sum(weight * total))


_PAIRINGS = (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))


def _cumulant4_terms(bath, times, d):
    d = parse_sides(d)
    times = [float(t) for t in times]
    if len(times) != 4 or len(d) != 4:
        raise ValidationError("cumulant4 needs four times and four indices")
    full = multitime_trace(bath, times, d)
    products = []
    for (a, b), (c, e) in _PAIRINGS:
        products.append(multitime_trace(bath, (times[a], times[b]), (d[a], d[b]))
                        * multitime_trace(bath, (times[c], times[e]), (d[c], d[e])))
    return full, products


def cumulant4(bath: BathSpec, times: Sequence[float], d) -> complex:
    """Fourth-order super-operator cumulant
    ``C(1234) - C(12)C(34) - C(13)C(24) - C(14)C(23)``."""
    full, products = _cumulant4_terms(bath, times, d)
    return full - sum(products)


def g4_normalized(bath: BathSpec, times: Sequence[float], d) -> tuple:
    """``(G4, |G4| / S)`` with ``S`` the summed magnitudes of the four terms."""
    full, products = _cumulant4_terms(bath, times, d)
    g4 = full - sum(products)
    scale = abs(full) + sum(abs(p) for p in products)
    return g4, (abs(g4) / scale if scale > 0 else 0.0)


def wick_check(bath: BathSpec, k: int, times: Sequence[float]) -> float:
    """Residual of the single-mode fermionic Wick identity
    ``<1234> = <12><34> - <13><24> + <14><23>``."""
    if not bath.is_fermi:
        raise ValidationError("wick_check requires a fermionic bath")
    t = [float(x) for x in times]
    if len(t) != 4:
        raise ValidationError("wick_check needs four times")
    rho = np.diag(fock.thermal_state(bath))
    prod = fock.quadrature(bath, k, t[0])
    for x in t[1:]:
        prod = prod @ fock.quadrature(bath, k, x)
    lhs = np.sum(np.diag(prod) * rho)

    def p(i, j):
        return pair_expectation(bath, k, t[i], t[j])

    rhs = p(0, 1) * p(2, 3) - p(0, 2) * p(1, 3) + p(0, 3) * p(1, 2)
    return float(abs(lhs - rhs))


@dataclass(frozen=True)
class PairingReport:
    """Index-grouping contributions to the four-time correlation.

    ``caseI``: all four indices paired with distinct partners (k != k',
    l != l'); ``caseII``: one four-fold grouping (exactly one of k = k',
    l = l'); ``caseIII``: k = k' and l = l'.  ``counter_terms`` is
    ``C(12)C(34) + C(13)C(24) + C(14)C(23)`` from dense traces and
    ``trace`` the dense four-time correlation.
    """

    caseI: complex
    caseII: complex
    caseIII: complex
    counter_terms: complex
    trace: complex

    @property
    def case_sum(self) -> complex:
        return self.caseI + self.caseII + self.caseIII

    @property
    def rel_vs_trace(self) -> float:
        return _rel(self.case_sum, self.trace)

    @property
    def rel_vs_counter(self) -> float:
        return _rel(self.case_sum, self.counter_terms)


def _rel(a: complex, b: complex) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def pairing_decomposition(bath: BathSpec, times: Sequence[float], d) -> PairingReport:
    """Evaluate the grouping formulas with pair expectations.

    Each grouping contributes, for the three pairings (ab|ce) of the
    re-ordered times, ``4 g_kl^2 g_k'l'^2 <ab>_k <ab>_l <ce>_k' <ce>_l'``
    restricted to its index class.  The pairwise-grouping argument discards
    mixed pairings, so the case sum reproduces the counter terms; the
    dense trace is reported alongside for comparison.
    """
    if not bath.is_fermi:
        raise ValidationError("pairing_decomposition requires a fermionic bath")
    d = parse_sides(d)
    times = [float(t) for t in times]
    s = [times[i] for i in superoperator_order(times, d)]
    ptab = pair_table(bath, np.subtract.outer(s, s))
    g2 = bath.g ** 2
    M = bath.num_modes
    eye = np.eye(M, dtype=bool)
    kk = eye[:, None, :, None]          # k == k' over axes (k, l, k', l')
    ll = eye[None, :, None, :]
    masks = {
        "caseI": ~kk & ~ll,
        "caseII": kk ^ ll,
        "caseIII": kk & ll,
    }
    sums = dict.fromkeys(masks, 0j)
    for (a, b), (c, e) in _PAIRINGS:
        left = g2 * np.outer(ptab[:, a, b], ptab[:, a, b])
        right = g2 * np.outer(ptab[:, c, e], ptab[:, c, e])
        T = _sign(bath) ** 2 * np.einsum("ij,kl->ijkl", left, right)
        for name, mask in masks.items():
            sums[name] += complex(np.sum(np.where(mask, T, 0.0)))
    full, products = _cumulant4_terms(bath, times, d)
    return PairingReport(counter_terms=complex(sum(products)), trace=full, **sums)
