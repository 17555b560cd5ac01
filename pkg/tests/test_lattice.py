"""Tests for configurations, heights, moves, and enumeration."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynasep.errors import IllegalMove, IndexOutOfRange
from dynasep.lattice import (
    Configuration,
    apply_move,
    enumerate_states,
    height,
    reverse_config,
    u_factor,
)


def cfg(occ, cap):
    return Configuration(tuple(occ), tuple(cap))


# ---------------------------------------------------------------------------
# heights
# ---------------------------------------------------------------------------

def test_height_plus_boundary():
    c = cfg((1, 0), (1, 1))
    assert height("plus", c, 3, 0.7) == 0.7


def test_height_plus_frozen():
    c = cfg((1, 0), (1, 1))
    assert height("plus", c, 1, 0.0) == 0.0
    assert height("plus", c, 2, 0.0) == -1.0


def test_height_minus_frozen():
    c = cfg((0, 0), (1, 1))
    assert height("minus", c, 2, 2.5) == 0.5
    assert height("minus", c, 0, 2.5) == 2.5


def test_height_index_errors():
    c = cfg((1, 0), (1, 1))
    for k in (0, 4):
        with pytest.raises(IndexOutOfRange):
            height("plus", c, k, 0.0)
    for k in (-1, 3):
        with pytest.raises(IndexOutOfRange):
            height("minus", c, k, 0.0)
    with pytest.raises(IndexOutOfRange):
        height("sideways", c, 1, 0.0)


def test_height_plus_leftmost_identity():
    # h+_1 = rho + 2|xi| - |N|
    rho = 0.4
    for c in enumerate_states((2, 1, 3)):
        expect = rho + 2 * c.total - c.total_capacity
        assert abs(height("plus", c, 1, rho) - expect) < 1e-12


def test_height_plus_telescoping():
    rho = -1.2
    for c in enumerate_states((2, 2, 1)):
        for k in range(1, c.sites + 1):
            lhs = height("plus", c, k, rho)
            rhs = (height("plus", c, k + 1, rho)
                   + 2 * c.occupations[k - 1] - c.capacities[k - 1])
            assert abs(lhs - rhs) < 1e-12


def test_height_reversal_identity():
    # h+_{M-k+1, lam}(zeta^rev) = h-_{k, lam}(zeta)
    lam = 0.9
    for c in enumerate_states((1, 3, 2)):
        r = reverse_config(c)
        m = c.sites
        for k in range(0, m + 1):
            assert (height("plus", r, m - k + 1, lam)
                    == height("minus", c, k, lam))


# ---------------------------------------------------------------------------
# u factor
# ---------------------------------------------------------------------------

def test_u_factor_vacuum():
    assert u_factor(cfg((0, 0, 0), (1, 2, 1))) == 0.0


def test_u_factor_frozen():
    assert u_factor(cfg((1, 0), (1, 1))) == -1.0


def test_u_factor_reversal_sum():
    # u(eta; N) + u(eta^rev; N^rev) = -2 |eta| |N|
    for c in enumerate_states((1, 2, 2)):
        r = reverse_config(c)
        assert (u_factor(c) + u_factor(r)
                == -2.0 * c.total * c.total_capacity)


def test_u_factor_site_exponent_form():
    # u = -2 sum_k n_k u_k with u_k = -N_k/2 + sum_{j<=k} N_j
    for c in enumerate_states((2, 1, 3)):
        acc = 0.0
        run = 0
        for n, N in zip(c.occupations, c.capacities):
            run += N
            acc += -2.0 * n * (-0.5 * N + run)
        assert u_factor(c) == acc


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)),
                min_size=1, max_size=6))
@settings(max_examples=60, deadline=None)
def test_product_expansion_identity(pairs):
    # |A||B| = sum_k sum_{j>k} (A_k B_j + A_j B_k) + sum_k A_k B_k
    a = [p[0] for p in pairs]
    b = [p[1] for p in pairs]
    lhs = sum(a) * sum(b)
    rhs = sum(a[k] * b[j] + a[j] * b[k]
              for k in range(len(a)) for j in range(k + 1, len(a)))
    rhs += sum(a[k] * b[k] for k in range(len(a)))
    assert lhs == rhs


# ---------------------------------------------------------------------------
# moves
# ---------------------------------------------------------------------------

def test_apply_move_basic():
    c = cfg((1, 0), (1, 1))
    moved = apply_move(c, 1, 2)
    assert moved.occupations == (0, 1)
    assert c.occupations == (1, 0)  # input unchanged


def test_apply_move_empty_source():
    with pytest.raises(IllegalMove):
        apply_move(cfg((0, 1), (1, 1)), 1, 2)


def test_apply_move_full_destination():
    with pytest.raises(IllegalMove):
        apply_move(cfg((2, 1), (2, 2)), 2, 1)


def test_apply_move_non_adjacent():
    c = cfg((1, 0, 0), (1, 1, 1))
    with pytest.raises(IllegalMove):
        apply_move(c, 1, 3)
    with pytest.raises(IllegalMove):
        apply_move(c, 1, 1)
    with pytest.raises(IllegalMove):
        apply_move(c, 0, 1)


def test_apply_move_conserves_total():
    for c in enumerate_states((2, 2)):
        for frm, to in ((1, 2), (2, 1)):
            try:
                moved = apply_move(c, frm, to)
            except IllegalMove:
                continue
            assert moved.total == c.total


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

def test_enumerate_full_space():
    sector = enumerate_states((1, 2))
    assert sector.size == 6
    occs = [s.occupations for s in sector]
    assert occs == sorted(occs)  # lexicographic
    assert occs[0] == (0, 0) and occs[-1] == (1, 2)


def test_enumerate_sector_small():
    sector = enumerate_states((1, 1), total=1)
    assert {s.occupations for s in sector} == {(1, 0), (0, 1)}


def test_enumerate_sector_count():
    sector = enumerate_states((2, 2), total=2)
    assert sector.size == 3
    assert all(s.total == 2 for s in sector)


def test_enumerate_index_bijective():
    sector = enumerate_states((2, 1, 2))
    assert sector.size == 3 * 2 * 3
    for i, s in enumerate(sector.states):
        assert sector.ordinal(s) == i


def test_sector_rejects_foreign_config():
    sector = enumerate_states((1, 1), total=1)
    with pytest.raises(IndexOutOfRange):
        sector.ordinal(cfg((1, 1), (1, 1)))


# ---------------------------------------------------------------------------
# reversal and validation
# ---------------------------------------------------------------------------

def test_reverse_config_examples():
    c = reverse_config(cfg((1, 0), (1, 2)))
    assert c.occupations == (0, 1) and c.capacities == (2, 1)
    p = cfg((1, 1), (1, 1))
    assert reverse_config(p).occupations == (1, 1)
    d = cfg((0, 2, 1), (1, 2, 2))
    assert reverse_config(reverse_config(d)) == d


def test_configuration_validation():
    with pytest.raises(IndexOutOfRange):
        cfg((1, 2), (1, 1))  # over capacity
    with pytest.raises(IndexOutOfRange):
        cfg((1,), (1, 1))  # length mismatch
    with pytest.raises(IndexOutOfRange):
        cfg((0,), (0,))  # zero capacity
    with pytest.raises(IndexOutOfRange):
        cfg((-1, 0), (1, 1))  # negative occupation
