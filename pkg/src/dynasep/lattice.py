"""Configurations on a finite segment, height functions, and enumeration.

A configuration is a vector of per-site occupations together with the vector
of per-site capacities.  Site indices in the public API are 1-based; storage
is 0-based.  Height functions are cumulative occupation sums anchored at a
boundary value on the right (plus) or on the left (minus).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import IllegalMove, IndexOutOfRange


@dataclass(frozen=True)
class Configuration:
    """Occupation numbers with their per-site capacities."""

    occupations: tuple[int, ...]
    capacities: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(n) for n in self.occupations)
        cap = tuple(int(n) for n in self.capacities)
        object.__setattr__(self, "occupations", occ)
        object.__setattr__(self, "capacities", cap)
        if len(occ) != len(cap):
            raise IndexOutOfRange(
                f"occupation length {len(occ)} != capacity length {len(cap)}")
        if any(n <= 0 for n in cap):
            raise IndexOutOfRange(f"capacities must be positive: {cap}")
        if any(n < 0 or n > c for n, c in zip(occ, cap)):
            raise IndexOutOfRange(
                f"occupations {occ} violate capacities {cap}")

    @property
    def sites(self) -> int:
        return len(self.occupations)

    @property
    def total(self) -> int:
        return sum(self.occupations)

    @property
    def total_capacity(self) -> int:
        return sum(self.capacities)

    def occupation(self, k: int) -> int:
        """Occupation at 1-based site k."""
        if not 1 <= k <= self.sites:
            raise IndexOutOfRange(f"site {k} outside 1..{self.sites}")
        return self.occupations[k - 1]

    def capacity(self, k: int) -> int:
        """Capacity at 1-based site k."""
        if not 1 <= k <= self.sites:
            raise IndexOutOfRange(f"site {k} outside 1..{self.sites}")
        return self.capacities[k - 1]


def height(side: str, config: Configuration, k: int, boundary: float) -> float:
    """Height function anchored at a boundary value.

    side "plus": h+_k = boundary + sum_{j=k}^{M} (2 n_j - N_j) for
    1 <= k <= M+1 (k = M+1 gives the boundary itself).
    side "minus": h-_k = boundary + sum_{j=1}^{k} (2 n_j - N_j) for
    0 <= k <= M (k = 0 gives the boundary itself).
    """
    m = config.sites
    occ, cap = config.occupations, config.capacities
    if side == "plus":
        if not 1 <= k <= m + 1:
            raise IndexOutOfRange(f"plus height index {k} outside 1..{m + 1}")
        return boundary + sum(2 * occ[j] - cap[j] for j in range(k - 1, m))
    if side == "minus":
        if not 0 <= k <= m:
            raise IndexOutOfRange(f"minus height index {k} outside 0..{m}")
        return boundary + sum(2 * occ[j] - cap[j] for j in range(k))
    raise IndexOutOfRange(f"unknown height side {side!r}")


def u_factor(config: Configuration) -> float:
    """Quadratic exponent u = sum_k (n_k N_k - 2 n_k sum_{j<=k} N_j)."""
    occ, cap = config.occupations, config.capacities
    running = 0
    total = 0
    for n, c in zip(occ, cap):
        running += c
        total += n * c - 2 * n * running
    return float(total)


def apply_move(config: Configuration, from_site: int, to_site: int
               ) -> Configuration:
    """Move one particle between adjacent sites; the input is unchanged."""
    m = config.sites
    if not (1 <= from_site <= m and 1 <= to_site <= m):
        raise IllegalMove(f"sites ({from_site},{to_site}) outside 1..{m}")
    if abs(from_site - to_site) != 1:
        raise IllegalMove(f"sites {from_site} and {to_site} not adjacent")
    occ = list(config.occupations)
    if occ[from_site - 1] == 0:
        raise IllegalMove(f"site {from_site} is empty")
    if occ[to_site - 1] >= config.capacities[to_site - 1]:
        raise IllegalMove(f"site {to_site} is at capacity")
    occ[from_site - 1] -= 1
    occ[to_site - 1] += 1
    return Configuration(tuple(occ), config.capacities)


def reverse_config(config: Configuration) -> Configuration:
    """Reverse both occupations and capacities."""
    return Configuration(config.occupations[::-1], config.capacities[::-1])


@dataclass(frozen=True)
class StateSector:
    """Ordered enumeration of configurations with an index map."""

    capacities: tuple[int, ...]
    total: int | None
    states: tuple[Configuration, ...]
    index: dict = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.states)

    def ordinal(self, config: Configuration) -> int:
        try:
            return self.index[config.occupations]
        except KeyError:
            raise IndexOutOfRange(
                f"configuration {config.occupations} not in sector") from None

    def __iter__(self):
        return iter(self.states)


def enumerate_states(capacities: tuple[int, ...] | list,
                     total: int | None = None) -> StateSector:
    """Enumerate configurations in mixed-radix lexicographic order.

    Without `total`, all prod(N_k + 1) configurations; with it, exactly the
    configurations whose occupations sum to `total`.
    """
    cap = tuple(int(n) for n in capacities)
    states = []
    index = {}
    for occ in itertools.product(*(range(n + 1) for n in cap)):
        if total is not None and sum(occ) != total:
            continue
        index[occ] = len(states)
        states.append(Configuration(occ, cap))
    return StateSector(cap, total, tuple(states), index)


# spec-facing alias for the enumeration operation
enumerate = enumerate_states
