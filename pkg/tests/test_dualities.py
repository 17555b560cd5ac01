"""Duality kernels: pointwise identities, generator intertwining,
biorthogonality, invariant factors, and the degeneration web."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dynasep.dualities import (
    DEGENERATION_CASES,
    DualityEvaluator,
    InvariantFactor,
    biorthogonality_residual,
    degeneration_residual,
    duality_eval,
    duality_matrix,
    duality_residual,
    invariant_factor,
    invariant_factor_product,
)
from dynasep.errors import (
    DegenerateParameter,
    DivergentTerm,
    IndexOutOfRange,
    PoleHit,
)
from dynasep.lattice import Configuration, enumerate_states, reverse_config
from dynasep.processes import ProcessSpec, stationary_measure
from dynasep.qspecial import omega, one_site_duality, site_weight

REL_TOL = 1e-12
DUALITY_TOL = 1e-9
GRAM_TOL = 1e-9
Q_GRID = (0.5, 0.8, 1.25)
BOUNDARY_PAIRS = ((-1.2, 0.7), (0.0, -1.2), (0.7, 0.0))
V_GRID = (0.6, 1.5)
GRID_CAPS = (1, 2, 1)


def config(occ, cap):
    return Configuration(tuple(occ), tuple(cap))


def hatted_anchors(caps):
    # the height-free symmetric processes need |rho|, |lam| above the total
    # capacity; the fractional offsets dodge the 4F3 parameter poles
    b = sum(caps)
    return b + 3.7, -(b + 4.0)


def _measure(kind, spec):
    return lambda c: stationary_measure(kind, spec, c)


def _omega_weight(kind, b, **kw):
    return lambda t: omega(kind, t, total_n=b, **kw)


# --------------------------------------------------------------- pointwise

def test_k_r_empty_left_row_is_one():
    caps = (1, 2, 1)
    d = DualityEvaluator("K_R", caps, q=0.6, rho=0.4)
    empty = config((0, 0, 0), caps)
    for x in enumerate_states(caps):
        assert duality_eval(d, empty, x) == 1.0, x.occupations


def test_tazrp_kernel_one_on_empty_configurations():
    caps = (3, 3)
    d = DualityEvaluator("D_tazrp", caps, q=0.7)
    empty = config((0, 0), caps)
    for c in enumerate_states(caps):
        assert duality_eval(d, empty, c) == 1.0
        assert duality_eval(d, c, empty) == 1.0


def test_r_v_product_and_sum_routes_agree_frozen():
    caps = (1, 2)
    q, rho, lam, v = 0.7, 0.3, -0.4, 1.3
    dp = DualityEvaluator("R_v_product", caps, q=q, rho=rho, lam=lam, v=v)
    ds = DualityEvaluator("R_v_sum", caps, q=q, rho=rho, lam=lam, v=v)
    for z in enumerate_states(caps):
        for x in enumerate_states(caps):
            a = duality_eval(dp, z, x)
            b = duality_eval(ds, z, x)
            assert abs(a - b) < 1e-10 * max(1.0, abs(a)), (
                f"{z.occupations} {x.occupations}: {a} vs {b}")


def test_p_v_r_small_v_collapses_to_k_r():
    # v^{-|zeta|} P^{v,R} approaches (-1)^{|zeta|} q^{-|zeta|(|zeta|-1/2)} K^R
    caps = (1, 2)
    q, rho, v = 0.7, 0.4, 1e-6
    dp = DualityEvaluator("P_v_R", caps, q=q, rho=rho, v=v)
    dk = DualityEvaluator("K_R", caps, q=q, rho=rho)
    for z in enumerate_states(caps):
        t = z.total
        pref = (-1.0) ** t * q ** (-t * (t - 0.5))
        for x in enumerate_states(caps):
            got = duality_eval(dp, z, x) * v ** (-t)
            want = pref * duality_eval(dk, z, x)
            assert abs(got - want) < 1e-4 * max(1.0, abs(want)), (
                f"{z.occupations} {x.occupations}: {got} vs {want}")


# --------------------------------------------------------- invariant factors

def test_invariant_equal_totals_value_one():
    for t in range(5):
        f = InvariantFactor("C_v", t, t, rho=0.3, lam=-0.8, v=0.7,
                            total_capacity=4, q=0.8)
        assert invariant_factor(f) == 1.0
    # the small factor has an empty numerator exactly at full left total
    f = InvariantFactor("c_v", 4, 4, rho=0.3, lam=-0.8, v=0.7,
                        total_capacity=4, q=0.8)
    assert math.isfinite(invariant_factor(f))


def test_invariant_c_v_full_left_total_closed_form():
    # |zeta| = |N| leaves only the reciprocal right-total factor
    q, v, rho, lam, b = 0.7, 1.3, 0.4, -0.6, 4
    for c_tot in range(b + 1):
        f = InvariantFactor("c_v", b, c_tot, lam=lam, rho=rho, v=v,
                            total_capacity=b, q=q)
        den = 1.0
        base = v * q ** (lam - rho - 2 * c_tot + b + 1)
        for j in range(c_tot):
            den *= 1.0 - base * q ** (2 * j)
        want = 1.0 / den
        got = invariant_factor(f)
        assert abs(got - want) < REL_TOL * abs(want), f"c={c_tot}: {got}"


def test_invariant_product_route_matches_closed_form():
    caps = (1, 2, 1)
    q, v, rho, lam = 0.7, 1.3, 0.4, -0.6
    b = sum(caps)
    for kind in ("c_v", "C_v"):
        for z in enumerate_states(caps):
            for x in enumerate_states(caps):
                f = InvariantFactor(kind, z.total, x.total, lam=lam, rho=rho,
                                    v=v, total_capacity=b, q=q)
                closed = invariant_factor(f)
                per_site = invariant_factor_product(f, z, x)
                assert abs(per_site - closed) < 1e-12 * max(1.0, abs(closed)), (
                    f"{kind} {z.occupations} {x.occupations}")


def test_invariant_factor_validation():
    with pytest.raises(DegenerateParameter):
        invariant_factor(InvariantFactor("x_v", 1, 1))
    good = InvariantFactor("c_v", 1, 1, lam=-0.5, rho=0.3, v=0.7,
                           total_capacity=2, q=0.7)
    with pytest.raises(IndexOutOfRange):
        invariant_factor_product(good, config((1, 0), (1, 1)),
                                 config((0, 1, 0), (1, 1, 1)))
    with pytest.raises(IndexOutOfRange):
        invariant_factor_product(good, config((0, 0), (1, 1)),
                                 config((0, 1), (1, 1)))


# ------------------------------------------------------ generator dualities

def test_duality_k_r_grid():
    caps = GRID_CAPS
    sec = enumerate_states(caps)
    for q in Q_GRID:
        for rho, _ in BOUNDARY_PAIRS:
            right = ProcessSpec("asep_r", caps, q=q, rho=rho)
            res = duality_residual(
                ProcessSpec("asep", caps, q=q), right,
                DualityEvaluator("K_R", caps, q=q, rho=rho), sec, sec)
            assert res < DUALITY_TOL, f"K_R q={q} rho={rho}: {res}"
            # the same kernel at base 1/q pairs the asymmetry-flipped free
            # process with the unchanged height-anchored one
            res = duality_residual(
                ProcessSpec("asep", caps, q=1.0 / q), right,
                DualityEvaluator("K_R", caps, q=1.0 / q, rho=rho), sec, sec)
            assert res < DUALITY_TOL, f"K_R flip q={q} rho={rho}: {res}"


def test_duality_k_l_grid():
    caps = GRID_CAPS
    sec = enumerate_states(caps)
    for q in Q_GRID:
        for _, lam in BOUNDARY_PAIRS:
            left = ProcessSpec("asep", caps, q=q)
            right = ProcessSpec("asep_l", caps, q=q, lam=lam)
            res = duality_residual(
                left, right,
                DualityEvaluator("K_L", caps, q=q, lam=lam), sec, sec)
            assert res < DUALITY_TOL, f"K_L q={q} lam={lam}: {res}"
            for v in V_GRID:
                res = duality_residual(
                    left, right,
                    DualityEvaluator("K_L_v", caps, q=q, lam=lam, v=v),
                    sec, sec)
                assert res < DUALITY_TOL, f"K_L_v q={q} lam={lam} v={v}"


def test_duality_r_v_grid():
    caps = GRID_CAPS
    sec = enumerate_states(caps)
    for q in Q_GRID:
        for rho, lam in BOUNDARY_PAIRS:
            left = ProcessSpec("asep_l", caps, q=q, lam=lam)
            right = ProcessSpec("asep_r", caps, q=q, rho=rho)
            for v in V_GRID:
                for family in ("R_v_product", "R_v_sum"):
                    d = DualityEvaluator(family, caps, q=q, rho=rho,
                                         lam=lam, v=v)
                    res = duality_residual(left, right, d, sec, sec)
                    assert res < DUALITY_TOL, (
                        f"{family} q={q} rho={rho} lam={lam} v={v}: {res}")


def test_duality_p_v_r_grid():
    caps = GRID_CAPS
    sec = enumerate_states(caps)
    for q in Q_GRID:
        for rho, _ in BOUNDARY_PAIRS:
            left = ProcessSpec("asep", caps, q=q)
            right = ProcessSpec("asep_r", caps, q=q, rho=rho)
            for v in V_GRID:
                for family in ("P_v_R", "P_prime_R"):
                    d = DualityEvaluator(family, caps, q=q, rho=rho, v=v)
                    res = duality_residual(left, right, d, sec, sec)
                    assert res < DUALITY_TOL, (
                        f"{family} q={q} rho={rho} v={v}: {res}")


def test_duality_self_kernel_grid():
    # the quantum-basis kernel pairs the free process with itself; the
    # affine one pairs it with its asymmetry-flipped copy
    caps = GRID_CAPS
    sec = enumerate_states(caps)
    for q in Q_GRID:
        auto = ProcessSpec("asep", caps, q=q)
        flip = ProcessSpec("asep", caps, q=1.0 / q)
        for v in V_GRID:
            res = duality_residual(
                auto, auto,
                DualityEvaluator("K_qtm", caps, q=q, v=v), sec, sec)
            assert res < DUALITY_TOL, f"K_qtm q={q} v={v}: {res}"
            res = duality_residual(
                auto, flip,
                DualityEvaluator("K_aff", caps, q=q, v=v), sec, sec)
            assert res < DUALITY_TOL, f"K_aff q={q} v={v}: {res}"


def test_duality_triangular_grid():
    caps = GRID_CAPS
    sec = enumerate_states(caps)
    for q in Q_GRID:
        auto = ProcessSpec("asep", caps, q=q)
        flip = ProcessSpec("asep", caps, q=1.0 / q)
        res = duality_residual(
            auto, auto, DualityEvaluator("D_tri", caps, q=q), sec, sec)
        assert res < DUALITY_TOL, f"D_tri q={q}: {res}"
        res = duality_residual(
            auto, flip, DualityEvaluator("D_tri_prime", caps, q=q), sec, sec)
        assert res < DUALITY_TOL, f"D_tri_prime q={q}: {res}"


def test_duality_tazrp_sector_grid():
    # the zero-range kernel intertwines the two drift directions on sectors
    # whose per-site capacity equals the conserved total
    for total in (2, 3):
        caps = (total, total, total)
        sec = enumerate_states(caps, total=total)
        for q in Q_GRID:
            res = duality_residual(
                ProcessSpec("tazrp_left", caps, q=q),
                ProcessSpec("tazrp_right", caps, q=q),
                DualityEvaluator("D_tazrp", caps, q=q), sec, sec)
            assert res < DUALITY_TOL, f"D_tazrp T={total} q={q}: {res}"


def test_duality_hatted_grid():
    caps = GRID_CAPS
    sec = enumerate_states(caps)
    rho, lam = hatted_anchors(caps)
    ssep = ProcessSpec("ssep", caps)
    ssep_r = ProcessSpec("ssep_r", caps, rho=rho)
    ssep_l = ProcessSpec("ssep_l", caps, lam=lam)
    for v in V_GRID:
        res = duality_residual(
            ssep_l, ssep_r,
            DualityEvaluator("R_hat", caps, rho=rho, lam=lam, v=v), sec, sec)
        assert res < DUALITY_TOL, f"R_hat v={v}: {res}"
        res = duality_residual(
            ssep, ssep_r,
            DualityEvaluator("P_hat_R", caps, rho=rho, v=v), sec, sec)
        assert res < DUALITY_TOL, f"P_hat_R v={v}: {res}"
        res = duality_residual(
            ssep, ssep,
            DualityEvaluator("K_hat", caps, v=v), sec, sec)
        assert res < DUALITY_TOL, f"K_hat v={v}: {res}"


def test_zero_particle_sector_residual_exactly_zero():
    caps = (1, 2, 1)
    sec = enumerate_states(caps, total=0)
    res = duality_residual(
        ProcessSpec("asep", caps, q=0.6),
        ProcessSpec("asep_r", caps, q=0.6, rho=0.4),
        DualityEvaluator("K_R", caps, q=0.6, rho=0.4), sec, sec)
    assert res == 0.0


def test_duality_scaled_by_invariant_factor_still_intertwines():
    # both generators conserve the particle totals, so multiplying a kernel
    # by either closed-form total factor must leave the residual at zero
    caps = (1, 2)
    q, rho, lam, v = 0.7, 0.4, -0.6, 1.3
    b = sum(caps)
    sec = enumerate_states(caps)
    base = DualityEvaluator("R_v_product", caps, q=q, rho=rho, lam=lam, v=v)
    left = ProcessSpec("asep_l", caps, q=q, lam=lam)
    right = ProcessSpec("asep_r", caps, q=q, rho=rho)
    for kind in ("c_v", "C_v"):
        def scaled(zc, xc, kind=kind):
            f = InvariantFactor(kind, zc.total, xc.total, lam=lam, rho=rho,
                                v=v, total_capacity=b, q=q)
            return invariant_factor(f) * duality_eval(base, zc, xc)

        res = duality_residual(left, right, scaled, sec, sec)
        assert res < DUALITY_TOL, f"{kind}: {res}"


# ----------------------------------------------------------------- symmetry

def test_r_v_lattice_reversal_symmetry():
    # reversing both configurations, swapping the two anchors, and
    # inverting the base reproduces the kernel
    caps = (1, 2)
    q, rho, lam, v = 0.7, 0.3, -0.4, 1.3
    d = DualityEvaluator("R_v_product", caps, q=q, rho=rho, lam=lam, v=v)
    dr = DualityEvaluator("R_v_product", caps[::-1], q=1.0 / q, rho=lam,
                          lam=rho, v=v)
    for z in enumerate_states(caps):
        for x in enumerate_states(caps):
            a = duality_eval(d, z, x)
            b = duality_eval(dr, reverse_config(x), reverse_config(z))
            assert abs(a - b) < 1e-9 * max(1.0, abs(a)), (
                f"{z.occupations} {x.occupations}: {a} vs {b}")


def test_r_v_parameter_inversion_ratio_invariance():
    # (q, v) -> (1/q, 1/v) changes the kernel only through a factor that
    # depends on the two conserved totals
    caps = (1, 2)
    q, rho, lam, v = 0.7, 0.3, -0.4, 1.3
    d = DualityEvaluator("R_v_product", caps, q=q, rho=rho, lam=lam, v=v)
    dinv = DualityEvaluator("R_v_product", caps, q=1.0 / q, rho=rho,
                            lam=lam, v=1.0 / v)
    states = list(enumerate_states(caps))
    ratios = {}
    for z in states:
        for x in states:
            r = duality_eval(d, z, x) / duality_eval(dinv, z, x)
            key = (z.total, x.total)
            if key in ratios:
                assert abs(r - ratios[key]) < 1e-9 * max(1.0, abs(r)), (
                    f"totals {key}: {r} vs {ratios[key]}")
            else:
                ratios[key] = r


# ---------------------------------------------------------- biorthogonality

def test_gram_k_r_single_site_frozen():
    caps = (2,)
    q, rho = 0.6, 0.4
    d = DualityEvaluator("K_R", caps, q=q, rho=rho)
    res = biorthogonality_residual(
        d, d,
        _measure("w", ProcessSpec("asep", caps, q=q)),
        _measure("W_R", ProcessSpec("asep_r", caps, q=q, rho=rho)))
    assert res < 1e-10, res


def test_gram_r_v_two_site_frozen():
    # the two-anchor kernel is biorthogonal against its v -> 1/v partner
    caps = (1, 1)
    q, rho, lam, v = 0.7, 0.3, -0.4, 1.3
    res = biorthogonality_residual(
        DualityEvaluator("R_v_product", caps, q=q, rho=rho, lam=lam, v=v),
        DualityEvaluator("R_v_product", caps, q=q, rho=rho, lam=lam,
                         v=1.0 / v),
        _measure("W_L", ProcessSpec("asep_l", caps, q=q, lam=lam)),
        _measure("W_R", ProcessSpec("asep_r", caps, q=q, rho=rho)))
    assert res < GRAM_TOL, res


def test_gram_k_hat_frozen():
    caps = (2, 1)
    v = 0.8
    d = DualityEvaluator("K_hat", caps, v=v)
    mu = _measure("w", ProcessSpec("ssep", caps))
    res = biorthogonality_residual(
        d, d, mu, mu,
        extra_weights=(None, _omega_weight("k_hat", sum(caps), v=v)))
    assert res < GRAM_TOL, res


def _gram_board(caps, q, rho, lam, v):
    b = sum(caps)
    asep = ProcessSpec("asep", caps, q=q)
    asep_inv = ProcessSpec("asep", caps, q=1.0 / q)
    rasep = ProcessSpec("asep_r", caps, q=q, rho=rho)
    lasep = ProcessSpec("asep_l", caps, q=q, lam=lam)
    k_r = DualityEvaluator("K_R", caps, q=q, rho=rho)
    k_l = DualityEvaluator("K_L", caps, q=q, lam=lam)
    p_v = DualityEvaluator("P_v_R", caps, q=q, rho=rho, v=v)
    k_qtm = DualityEvaluator("K_qtm", caps, q=q, v=v)
    k_aff = DualityEvaluator("K_aff", caps, q=q, v=v)
    return [
        ("K_R", k_r, k_r,
         _measure("w", asep), _measure("W_R", rasep), None),
        ("K_L", k_l, k_l,
         _measure("w", asep), _measure("W_L", lasep), None),
        ("R_v",
         DualityEvaluator("R_v_product", caps, q=q, rho=rho, lam=lam, v=v),
         DualityEvaluator("R_v_product", caps, q=q, rho=rho, lam=lam,
                          v=1.0 / v),
         _measure("W_L", lasep), _measure("W_R", rasep), None),
        ("P_v_R", p_v, p_v,
         _measure("w", asep), _measure("W_R", rasep),
         (_omega_weight("p", b, rho=rho, v=v, q=q),
          _omega_weight("pR", b, rho=rho, v=v, q=q))),
        ("K_qtm", k_qtm, k_qtm,
         _measure("w", asep), _measure("w", asep),
         (_omega_weight("qtm", b, v=v, q=q),
          _omega_weight("qtmR", b, v=v, q=q))),
        ("K_aff", k_aff, k_aff,
         _measure("w", asep), _measure("w", asep_inv),
         (_omega_weight("aff", b, v=v, q=q),
          _omega_weight("affR", b, v=v, q=q))),
    ]


def _hatted_gram_board(caps, v):
    # the alternating signs are what survives of the dynamic-weight phase
    # in the symmetric limit; without them no diagonal normalization works
    b = sum(caps)
    rho, lam = hatted_anchors(caps)
    ssep = ProcessSpec("ssep", caps)
    ssep_r = ProcessSpec("ssep_r", caps, rho=rho)
    ssep_l = ProcessSpec("ssep_l", caps, lam=lam)
    p_hat = DualityEvaluator("P_hat_R", caps, rho=rho, v=v)
    k_hat = DualityEvaluator("K_hat", caps, v=v)
    pr_hat = _omega_weight("pR_hat", b, rho=rho, v=v)
    return [
        ("R_hat",
         DualityEvaluator("R_hat", caps, rho=rho, lam=lam, v=v),
         DualityEvaluator("R_hat", caps, rho=rho, lam=lam, v=-v),
         _measure("W_hat_L", ssep_l), _measure("W_hat_R", ssep_r),
         (lambda t: (-1.0) ** t, lambda t: (-1.0) ** (b - t))),
        ("P_hat", p_hat, p_hat,
         _measure("w", ssep), _measure("W_hat_R", ssep_r),
         (_omega_weight("p_hat", b, rho=rho, v=v),
          lambda t: (-1.0) ** t * pr_hat(t))),
        ("K_hat", k_hat, k_hat,
         _measure("w", ssep), _measure("w", ssep),
         (None, _omega_weight("k_hat", b, v=v))),
    ]


def test_biorthogonality_board():
    lattices = ((1, 2), (2, 1, 1))
    # v must avoid integer powers of q, where the basis-change factors pole
    params = ((0.6, 0.4, -0.7, 0.9), (1.25, -1.2, 0.7, 1.5))
    for caps in lattices:
        for q, rho, lam, v in params:
            for name, dp, dm, mul, mur, extra in _gram_board(
                    caps, q, rho, lam, v):
                for side in ("left", "right"):
                    res = biorthogonality_residual(
                        dp, dm, mul, mur, extra_weights=extra, sum_over=side)
                    assert res < GRAM_TOL, (
                        f"{name} {caps} q={q} v={v} {side}: {res}")


def test_biorthogonality_hatted_board():
    for caps in ((1, 2), (2, 1, 1)):
        for v in V_GRID:
            for name, dp, dm, mul, mur, extra in _hatted_gram_board(caps, v):
                for side in ("left", "right"):
                    res = biorthogonality_residual(
                        dp, dm, mul, mur, extra_weights=extra, sum_over=side)
                    assert res < GRAM_TOL, f"{name} {caps} v={v} {side}: {res}"


# ------------------------------------------------------------ degenerations

DEGENERATION_TABLE = {
    # anchor parameter pushed past the window: rates coincide exactly
    "rates_asepR_to_asep_minus": (40.0, 1e-12),
    "rates_asepR_to_asep_plus": (40.0, 1e-12),
    "rates_asepL_to_asep_plus": (40.0, 1e-12),
    "rates_asepL_to_asep_minus": (40.0, 1e-12),
    # structural kernel and measure limits, exponentially fast in the anchor
    "WR_to_w_minus": (40.0, 1e-9),
    "WR_to_w_plus": (40.0, 1e-9),
    "WL_to_w_plus": (40.0, 1e-9),
    "WL_to_w_minus": (40.0, 1e-9),
    "PvR_from_Rv": (40.0, 1e-9),
    "PvR_from_Rv_second": (40.0, 1e-9),
    "PvR_from_Rv_inverse_base": (40.0, 1e-9),
    "Kqtm_from_PvR": (40.0, 1e-9),
    "Kqtm_from_PvR_inverse_base": (40.0, 1e-9),
    "Kaff_from_PvR": (40.0, 1e-9),
    "Kaff_from_PvR_inverse_base": (40.0, 1e-9),
    "KR_to_triangular": (40.0, 1e-9),
    "KR_to_triangular_prime": (40.0, 1e-9),
    "KR_to_triangular_support": (40.0, 1e-9),
    # algebraic limits, polynomially fast in the scale
    "KR_from_PvR_v0": (1e-6, 1e-4),
    "Dtazrp_from_Rv": (30.0, 1e-9),
    "rates_tazrp_right": (30.0, 1e-7),
    "rates_tazrp_left": (30.0, 1e-7),
    "rates_ssepR_to_ssep": (1e8, 1e-6),
    "rates_ssepL_to_ssep": (1e8, 1e-6),
    # continuity at base one, evaluated at q = 1 - scale
    "qto1_R_hat": (1e-4, 1e-3),
    "qto1_P_hat": (1e-4, 1e-3),
    "qto1_K_hat": (1e-4, 1e-3),
    "qto1_W_hat_R": (1e-4, 1e-3),
    "qto1_W_hat_L": (1e-4, 1e-3),
    "qto1_w_hat": (1e-4, 1e-3),
    "qto1_WR_plain": (1e-4, 1e-3),
    "qto1_WR_free_param": (1e-4, 1e-3),
    "qto1_omega_p": (1e-4, 1e-3),
}


def test_degeneration_table_covers_every_case():
    assert set(DEGENERATION_TABLE) == set(DEGENERATION_CASES)
    assert len(DEGENERATION_TABLE) == 33


@pytest.mark.parametrize("case", sorted(DEGENERATION_TABLE))
def test_degeneration_residual_within_tolerance(case):
    scale, tol = DEGENERATION_TABLE[case]
    res = degeneration_residual(case, scale)
    assert res < tol, f"{case} at scale {scale}: {res}"


def test_ssep_rate_limit_residual_decays_linearly():
    a = degeneration_residual("rates_ssepR_to_ssep", 1e6)
    b = degeneration_residual("rates_ssepR_to_ssep", 1e8)
    assert b < a / 10.0, (a, b)


def test_qto1_residual_decays_with_offset():
    a = degeneration_residual("qto1_K_hat", 1e-2)
    b = degeneration_residual("qto1_K_hat", 1e-4)
    assert b < a / 10.0, (a, b)


# --------------------------------------------------------------- validation

def test_duality_validation():
    caps = (1, 1)
    sec = enumerate_states(caps)
    with pytest.raises(DegenerateParameter):
        DualityEvaluator("K_X", caps)
    with pytest.raises(DegenerateParameter):
        duality_matrix(3.0, sec, sec)
    d = DualityEvaluator("K_R", caps, q=0.6, rho=0.4)
    other = DualityEvaluator("K_R", (2, 1), q=0.6, rho=0.4)
    with pytest.raises(IndexOutOfRange):
        biorthogonality_residual(d, other, np.ones(4), np.ones(4))
    with pytest.raises(DegenerateParameter):
        biorthogonality_residual(d, d, np.ones(4), np.ones(4), sum_over="up")
    with pytest.raises(IndexOutOfRange):
        biorthogonality_residual(d, d, np.ones(3), np.ones(4))
    with pytest.raises(DegenerateParameter):
        degeneration_residual("nope", 40.0)
    with pytest.raises(DegenerateParameter):
        degeneration_residual("WL_to_w_plus", 0.0)
    with pytest.raises(DegenerateParameter):
        omega("bogus", 1)
    with pytest.raises(DegenerateParameter):
        one_site_duality("k_hat", 1, 1, v=-0.5, N=2)
    with pytest.raises(PoleHit):
        site_weight("W_hat", 1, 2, rho=2.0)


# --------------------------------------------------------------- properties

@settings(max_examples=30, deadline=None)
@given(
    z=st.tuples(st.integers(0, 1), st.integers(0, 2)),
    x=st.tuples(st.integers(0, 1), st.integers(0, 2)),
    q=st.one_of(st.floats(0.45, 0.9), st.floats(1.1, 1.9)),
    v=st.floats(0.3, 2.0),
    rho=st.floats(-1.5, 1.5),
    lam=st.floats(-1.5, 1.5),
)
def test_r_v_routes_agree_everywhere(z, x, q, v, rho, lam):
    caps = (1, 2)
    dp = DualityEvaluator("R_v_product", caps, q=q, rho=rho, lam=lam, v=v)
    ds = DualityEvaluator("R_v_sum", caps, q=q, rho=rho, lam=lam, v=v)
    zc, xc = config(z, caps), config(x, caps)
    try:
        a = duality_eval(dp, zc, xc)
        b = duality_eval(ds, zc, xc)
    except (PoleHit, DivergentTerm):
        assume(False)
    assume(math.isfinite(a) and math.isfinite(b))
    assert abs(a - b) < 1e-8 * max(1.0, abs(a), abs(b))


@settings(max_examples=30, deadline=None)
@given(
    z=st.tuples(st.integers(0, 1), st.integers(0, 2), st.integers(0, 1)),
    x=st.tuples(st.integers(0, 1), st.integers(0, 2), st.integers(0, 1)),
    kind=st.sampled_from(("c_v", "C_v")),
    q=st.floats(0.5, 0.9),
    v=st.floats(0.3, 0.9),
)
def test_invariant_product_route_agrees_everywhere(z, x, kind, q, v):
    caps = (1, 2, 1)
    f = InvariantFactor(kind, sum(z), sum(x), lam=-0.81, rho=0.37, v=v,
                        total_capacity=sum(caps), q=q)
    try:
        closed = invariant_factor(f)
        per_site = invariant_factor_product(f, config(z, caps),
                                            config(x, caps))
    except (PoleHit, ZeroDivisionError):
        assume(False)
    assume(math.isfinite(closed))
    assert abs(per_site - closed) < 1e-9 * max(1.0, abs(closed))
