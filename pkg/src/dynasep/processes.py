"""Jump rates, sparse generators, and reversible measures.

Eight continuous-time Markov jump processes on bounded-occupancy
configurations share one interface here:

* ``asep``           asymmetric exclusion with per-site capacities,
* ``asep_r``         exclusion modulated by a right-anchored height function,
* ``asep_l``         exclusion modulated by a left-anchored height function,
* ``ssep``           the symmetric q = 1 exclusion process,
* ``ssep_r``         symmetric exclusion with right-anchored height factors,
* ``ssep_l``         symmetric exclusion with left-anchored height factors,
* ``tazrp_right``    totally asymmetric zero range process, rightward jumps,
* ``tazrp_left``     totally asymmetric zero range process, leftward jumps.

Rates are closed-form nonnegative reals, generators are conservative
sparse matrices on a fixed state sector, and each reversible weight
family comes with a detailed-balance residual checker.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    DegenerateParameter,
    IndexOutOfRange,
    NegativeRate,
)
from .lattice import (
    Configuration,
    StateSector,
    apply_move,
    height,
    reverse_config,
    u_factor,
)
from .qspecial import CLASSICAL_EPS, q_bracket, site_weight

PROCESS_KINDS = frozenset({
    "asep", "asep_r", "asep_l",
    "ssep", "ssep_r", "ssep_l",
    "tazrp_right", "tazrp_left",
})
DYNAMIC_RIGHT_KINDS = frozenset({"asep_r", "ssep_r"})
DYNAMIC_LEFT_KINDS = frozenset({"asep_l", "ssep_l"})
MEASURE_KINDS = frozenset({"w", "W_R", "W_L", "W_R_inv", "W_hat_R", "W_hat_L"})
DIRECTIONS = ("right", "left")


@dataclass(frozen=True)
class ProcessSpec:
    """Process kind plus its parameters.

    ``q`` is ignored by the symmetric kinds.  ``rho`` anchors the
    right-height kinds (asep_r, ssep_r), ``lam`` the left-height kinds
    (asep_l, ssep_l).  For ssep_r/ssep_l the boundary parameter must
    satisfy ``|rho| > sum(capacities)`` resp. ``|lam| > sum(capacities)``;
    this is exactly the condition keeping every jump rate nonnegative.
    """

    kind: str
    capacities: tuple[int, ...]
    q: float = 1.0
    rho: float | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.kind not in PROCESS_KINDS:
            raise DegenerateParameter(f"unknown process kind {self.kind!r}")
        caps = tuple(int(c) for c in self.capacities)
        if not caps or any(c < 1 for c in caps):
            raise IndexOutOfRange("capacities must be positive integers")
        object.__setattr__(self, "capacities", caps)
        object.__setattr__(self, "q", float(self.q))
        if not self.q > 0:
            raise DegenerateParameter("q must be positive")
        if self.kind in DYNAMIC_RIGHT_KINDS and self.rho is None:
            raise DegenerateParameter(f"{self.kind} requires rho")
        if self.kind in DYNAMIC_LEFT_KINDS and self.lam is None:
            raise DegenerateParameter(f"{self.kind} requires lam")
        if self.rho is not None:
            object.__setattr__(self, "rho", float(self.rho))
        if self.lam is not None:
            object.__setattr__(self, "lam", float(self.lam))
        total_cap = sum(caps)
        if self.kind == "ssep_r" and not abs(self.rho) > total_cap:
            raise NegativeRate(
                f"ssep_r needs |rho| > {total_cap} to keep rates nonnegative")
        if self.kind == "ssep_l" and not abs(self.lam) > total_cap:
            raise NegativeRate(
                f"ssep_l needs |lam| > {total_cap} to keep rates nonnegative")

    @property
    def sites(self) -> int:
        return len(self.capacities)


def _ch(q: float, a: float) -> float:
    # q^a + q^-a, strictly positive for q > 0 and real a
    return q ** a + q ** (-a)


def _asep_rate(config: Configuration, k: int, direction: str, q: float) -> float:
    occ = config.occupations
    cap = config.capacities
    i = k - 1
    if direction == "right":
        return (q ** (-(occ[i + 1] + cap[i] - occ[i] + 1))
                * q_bracket(occ[i], q) * q_bracket(cap[i + 1] - occ[i + 1], q))
    return (q ** (occ[i - 1] + cap[i] - occ[i] + 1)
            * q_bracket(occ[i], q) * q_bracket(cap[i - 1] - occ[i - 1], q))


def _dynamic_right_rate(config: Configuration, k: int, direction: str,
                        rho: float, q: float) -> float:
    occ = config.occupations
    cap = config.capacities
    i = k - 1
    h_k = height("plus", config, k, rho)
    h_k1 = height("plus", config, k + 1, rho)
    if direction == "right":
        num = _ch(q, h_k - occ[i]) * _ch(q, h_k1 - occ[i + 1])
        den = _ch(q, h_k1) * _ch(q, h_k1 + 1)
        brackets = q_bracket(occ[i], q) * q_bracket(cap[i + 1] - occ[i + 1], q)
    else:
        num = _ch(q, h_k + occ[i - 1]) * _ch(q, h_k1 + occ[i])
        den = _ch(q, h_k) * _ch(q, h_k - 1)
        brackets = q_bracket(occ[i], q) * q_bracket(cap[i - 1] - occ[i - 1], q)
    return brackets * num / den


def _dynamic_left_rate(config: Configuration, k: int, direction: str,
                       lam: float, q: float) -> float:
    occ = config.occupations
    cap = config.capacities
    i = k - 1
    h_km1 = height("minus", config, k - 1, lam)
    h_k = height("minus", config, k, lam)
    if direction == "right":
        num = _ch(q, h_km1 + occ[i]) * _ch(q, h_k + occ[i + 1])
        den = _ch(q, h_k) * _ch(q, h_k - 1)
        brackets = q_bracket(occ[i], q) * q_bracket(cap[i + 1] - occ[i + 1], q)
    else:
        num = _ch(q, h_km1 - occ[i - 1]) * _ch(q, h_k - occ[i])
        den = _ch(q, h_km1) * _ch(q, h_km1 + 1)
        brackets = q_bracket(occ[i], q) * q_bracket(cap[i - 1] - occ[i - 1], q)
    return brackets * num / den


def _ssep_rate(config: Configuration, k: int, direction: str) -> float:
    occ = config.occupations
    cap = config.capacities
    i = k - 1
    if direction == "right":
        return float(occ[i] * (cap[i + 1] - occ[i + 1]))
    return float(occ[i] * (cap[i - 1] - occ[i - 1]))


def _dynamic_ssep_right_rate(config: Configuration, k: int, direction: str,
                             rho: float) -> float:
    occ = config.occupations
    cap = config.capacities
    i = k - 1
    h_k = height("plus", config, k, rho)
    h_k1 = height("plus", config, k + 1, rho)
    if direction == "right":
        rate = (occ[i] * (cap[i + 1] - occ[i + 1])
                * (h_k - occ[i]) * (h_k1 - occ[i + 1])
                / (h_k1 * (h_k1 + 1)))
    else:
        rate = (occ[i] * (cap[i - 1] - occ[i - 1])
                * (h_k + occ[i - 1]) * (h_k1 + occ[i])
                / (h_k * (h_k - 1)))
    if rate < 0:
        raise NegativeRate(
            f"ssep_r rate {rate} < 0 at site {k}, direction {direction}")
    return rate


def _dynamic_ssep_left_rate(config: Configuration, k: int, direction: str,
                            lam: float) -> float:
    occ = config.occupations
    cap = config.capacities
    i = k - 1
    h_km1 = height("minus", config, k - 1, lam)
    h_k = height("minus", config, k, lam)
    if direction == "right":
        rate = (occ[i] * (cap[i + 1] - occ[i + 1])
                * (h_km1 + occ[i]) * (h_k + occ[i + 1])
                / (h_k * (h_k - 1)))
    else:
        rate = (occ[i] * (cap[i - 1] - occ[i - 1])
                * (h_km1 - occ[i - 1]) * (h_k - occ[i])
                / (h_km1 * (h_km1 + 1)))
    if rate < 0:
        raise NegativeRate(
            f"ssep_l rate {rate} < 0 at site {k}, direction {direction}")
    return rate


def _zero_range_rate(n: int, q: float) -> float:
    if n == 0:
        return 0.0
    if abs(q - 1.0) < CLASSICAL_EPS:
        return float(n)
    return (1.0 - q ** (2 * n)) / (1.0 - q * q)


def jump_rate(spec: ProcessSpec, config: Configuration, k: int,
              direction: str) -> float:
    """Rate at which a particle at site ``k`` jumps one step.

    ``direction`` is "right" (k -> k+1) or "left" (k -> k-1).  Illegal
    moves (no neighbor, empty source, full destination, or a direction
    the process never uses) have rate 0.

    Raises NegativeRate if a height-modulated symmetric rate evaluates
    negative, which the ProcessSpec boundary guard normally excludes.
    """
    if direction not in DIRECTIONS:
        raise DegenerateParameter(f"unknown direction {direction!r}")
    if config.capacities != spec.capacities:
        raise DegenerateParameter("configuration capacities do not match spec")
    m = config.sites
    if not 1 <= k <= m:
        raise IndexOutOfRange(f"site {k} outside 1..{m}")
    target = k + 1 if direction == "right" else k - 1
    if not 1 <= target <= m:
        return 0.0
    if config.occupations[k - 1] == 0:
        return 0.0
    if config.occupations[target - 1] >= config.capacities[target - 1]:
        return 0.0
    kind = spec.kind
    if kind == "asep":
        return _asep_rate(config, k, direction, spec.q)
    if kind == "asep_r":
        return _dynamic_right_rate(config, k, direction, spec.rho, spec.q)
    if kind == "asep_l":
        return _dynamic_left_rate(config, k, direction, spec.lam, spec.q)
    if kind == "ssep":
        return _ssep_rate(config, k, direction)
    if kind == "ssep_r":
        return _dynamic_ssep_right_rate(config, k, direction, spec.rho)
    if kind == "ssep_l":
        return _dynamic_ssep_left_rate(config, k, direction, spec.lam)
    if kind == "tazrp_right":
        if direction != "right":
            return 0.0
        return _zero_range_rate(config.occupations[k - 1], spec.q)
    # tazrp_left
    if direction != "left":
        return 0.0
    return _zero_range_rate(config.occupations[k - 1], spec.q)


@dataclass(frozen=True)
class GeneratorMatrix:
    """Conservative CTMC generator on a state sector.

    Off-diagonal rates are stored as coordinate triplets in a fixed
    deterministic order (source state ordinal ascending, then site,
    then right before left); the diagonal closes each row to zero.
    """

    sector: StateSector
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    rates: tuple[float, ...]
    diagonal: tuple[float, ...]

    @property
    def size(self) -> int:
        return self.sector.size

    def to_coo(self) -> sp.coo_matrix:
        n = self.size
        rows = np.concatenate([np.asarray(self.rows, dtype=np.int64),
                               np.arange(n, dtype=np.int64)])
        cols = np.concatenate([np.asarray(self.cols, dtype=np.int64),
                               np.arange(n, dtype=np.int64)])
        vals = np.concatenate([np.asarray(self.rates, dtype=float),
                               np.asarray(self.diagonal, dtype=float)])
        return sp.coo_matrix((vals, (rows, cols)), shape=(n, n))

    def to_dense(self) -> np.ndarray:
        return self.to_coo().toarray()

    def row_entries(self, i: int) -> list[tuple[int, float]]:
        """Off-diagonal (target ordinal, rate) pairs out of state ``i``."""
        lo = bisect_left(self.rows, i)
        hi = bisect_right(self.rows, i)
        return list(zip(self.cols[lo:hi], self.rates[lo:hi]))

    def max_abs_row_sum(self) -> float:
        sums = np.asarray(self.diagonal, dtype=float).copy()
        for r, v in zip(self.rows, self.rates):
            sums[r] += v
        return float(np.max(np.abs(sums))) if self.size else 0.0

    def min_off_diagonal(self) -> float:
        return min(self.rates, default=0.0)


def build_generator(spec: ProcessSpec, sector: StateSector) -> GeneratorMatrix:
    """Generator matrix of ``spec`` restricted to ``sector``."""
    if sector.capacities != spec.capacities:
        raise DegenerateParameter("sector capacities do not match spec")
    rows: list[int] = []
    cols: list[int] = []
    rates: list[float] = []
    diagonal = [0.0] * sector.size
    for i, state in enumerate(sector):
        for k in range(1, state.sites + 1):
            for direction in DIRECTIONS:
                rate = jump_rate(spec, state, k, direction)
                if rate == 0.0:
                    continue
                target = k + 1 if direction == "right" else k - 1
                j = sector.ordinal(apply_move(state, k, target))
                rows.append(i)
                cols.append(j)
                rates.append(rate)
                diagonal[i] -= rate
    return GeneratorMatrix(sector, tuple(rows), tuple(cols),
                           tuple(rates), tuple(diagonal))


def stationary_measure(kind: str, spec: ProcessSpec,
                       config: Configuration) -> float:
    """Reversible weight of one configuration.

    Kinds: "w" (exclusion weight with the quadratic exchange exponent),
    "W_R"/"W_L" (height-coupled weights, left kind evaluated at 1/q),
    "W_R_inv" (per-site variant invariant under q <-> 1/q), and
    "W_hat_R"/"W_hat_L" (classical height-coupled weights).
    """
    if kind not in MEASURE_KINDS:
        raise DegenerateParameter(f"unknown measure kind {kind!r}")
    if config.capacities != spec.capacities:
        raise DegenerateParameter("configuration capacities do not match spec")
    q = spec.q
    occ = config.occupations
    cap = config.capacities
    if kind == "w":
        value = q ** u_factor(config)
        for n, c in zip(occ, cap):
            value *= site_weight("w", n, c, q=q)
        return value
    if kind in ("W_R", "W_R_inv", "W_hat_R"):
        if spec.rho is None:
            raise DegenerateParameter(f"measure {kind} requires spec.rho")
        site_kind = {"W_R": "W", "W_R_inv": "W_inv", "W_hat_R": "W_hat"}[kind]
        value = 1.0
        for k in range(1, config.sites + 1):
            h = height("plus", config, k + 1, spec.rho)
            value *= site_weight(site_kind, occ[k - 1], cap[k - 1], rho=h, q=q)
        return value
    # left-anchored kinds
    if spec.lam is None:
        raise DegenerateParameter(f"measure {kind} requires spec.lam")
    value = 1.0
    for k in range(1, config.sites + 1):
        h = height("minus", config, k - 1, spec.lam)
        if kind == "W_L":
            value *= site_weight("W", occ[k - 1], cap[k - 1], rho=h, q=1.0 / q)
        else:  # W_hat_L
            value *= site_weight("W_hat", occ[k - 1], cap[k - 1], rho=h)
    return value


def measure_vector(kind: str, spec: ProcessSpec,
                   sector: StateSector) -> np.ndarray:
    """Measure weights for every state of a sector, in sector order."""
    return np.array([stationary_measure(kind, spec, s) for s in sector],
                    dtype=float)


def detailed_balance_residual(gen: GeneratorMatrix, measure) -> float:
    """Largest relative violation of mu(s) L(s,s') = mu(s') L(s',s).

    Normalized by the largest probability flux; a generator with no
    transitions has residual 0.
    """
    mu = np.asarray(measure, dtype=float)
    if mu.shape != (gen.size,):
        raise DegenerateParameter("measure length does not match sector size")
    if np.any(mu <= 0):
        raise DegenerateParameter("measure must be strictly positive")
    a = gen.to_dense()
    np.fill_diagonal(a, 0.0)
    flux = mu[:, None] * a
    scale = float(flux.max(initial=0.0))
    if scale == 0.0:
        return 0.0
    return float(np.abs(flux - flux.T).max() / scale)


def height_chain_step(h: float, q: float) -> tuple[float, float]:
    """Probabilities (up, down) for one step of the height-increment chain.

    up = q^{-2h} / (1 + q^{-2h}) and down = 1 / (1 + q^{-2h}); they sum
    to one exactly.
    """
    if not q > 0:
        raise DegenerateParameter("q must be positive")
    try:
        t = q ** (-2.0 * float(h))
    except OverflowError:
        t = math.inf
    if math.isinf(t):
        return (1.0, 0.0)
    up = t / (1.0 + t)
    return (up, 1.0 - up)
