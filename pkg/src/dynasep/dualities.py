"""Two-argument duality functions and the checks built on top of them.

Fifteen duality families share one evaluator interface: given a left-process
configuration and a right-process configuration on the same capacity vector,
each family evaluates to a real number, almost always as a product of
one-site kernels times an explicit exponential prefactor.  The families:

* ``K_R``         dual q-Krawtchouk product, left exclusion / right dynamic,
* ``K_L``         mirror product built on 1/q kernels with left heights,
* ``K_L_v``       K_L times (-v)^{total}, the summand of the bilinear form,
* ``R_v_product`` q-Racah product coupling both dynamic processes,
* ``R_v_sum``     the same function as a weighted bilinear sum over K_L_v, K_R,
* ``P_v_R``       q-Hahn product (large left-height limit of R_v),
* ``P_prime_R``   same shape with the alternative q-Hahn kernel,
* ``K_qtm``       quantum q-Krawtchouk product (self-duality),
* ``K_aff``       affine q-Krawtchouk product (q versus 1/q duality),
* ``D_tri``       triangular self-duality with support eta_k <= xi_k,
* ``D_tri_prime`` triangular variant with support eta_k <= N_k - xi_k,
* ``D_tazrp``     zero range duality q^{2 xi_k (zeta_1+...+zeta_k)} product,
* ``R_hat``       classical Racah product for the symmetric dynamic pair,
* ``P_hat_R``     classical Hahn product, symmetric / right-dynamic pair,
* ``K_hat``       classical Krawtchouk-type self-duality product.

On top of the evaluators sit sector prefactors (``invariant_factor``), a
generator-level intertwining residual (``duality_residual``), a weighted
Gram residual (``biorthogonality_residual``), and a harness of named
limit cases (``degeneration_residual``) that evaluates scaled pre-limit
expressions against their closed-form targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateParameter, IndexOutOfRange, PoleHit
from .lattice import (
    Configuration,
    StateSector,
    enumerate_states,
    height,
    u_factor,
)
from .processes import ProcessSpec, build_generator, jump_rate
from .qspecial import (
    LOG_ZERO,
    k_subbed_sl,
    omega,
    omega_flagged_p_sl,
    one_site_duality_sl,
    p_flagged_sl,
    r_flagged_sl,
    site_weight_flagged_sl,
    site_weight_sl,
    sl_div,
    sl_float,
    sl_ipow,
    sl_mul,
    sl_of,
    sl_qpoch,
    sl_qpoch_den,
    sl_qpow,
)

DUALITY_FAMILIES = frozenset({
    "K_R", "K_L", "K_L_v", "R_v_product", "R_v_sum",
    "P_v_R", "P_prime_R", "K_qtm", "K_aff",
    "D_tri", "D_tri_prime", "D_tazrp",
    "R_hat", "P_hat_R", "K_hat",
})

INVARIANT_KINDS = frozenset({"c_v", "C_v"})

SL_ONE = (1.0, 0.0)
SL_ZERO = (0.0, LOG_ZERO)


@dataclass(frozen=True)
class DualityEvaluator:
    """A duality family plus every parameter needed to evaluate it.

    ``rho`` anchors the right height function (plus side), ``lam`` the left
    height function, ``v`` is the free parameter of the v-families; each
    family reads only the parameters it uses.  The classical families
    (R_hat, P_hat_R, K_hat) ignore ``q``.
    """

    family: str
    capacities: tuple[int, ...]
    q: float = 1.0
    rho: float = 0.0
    lam: float = 0.0
    v: float = 1.0

    def __post_init__(self):
        if self.family not in DUALITY_FAMILIES:
            raise DegenerateParameter(
                f"unknown duality family {self.family!r}")
        cap = tuple(int(n) for n in self.capacities)
        object.__setattr__(self, "capacities", cap)
        if not cap or any(n <= 0 for n in cap):
            raise IndexOutOfRange(f"capacities must be positive: {cap}")
        if self.q <= 0.0:
            raise DegenerateParameter(f"q must be positive, got {self.q}")

    @property
    def sites(self) -> int:
        return len(self.capacities)


def _check_pair(d: DualityEvaluator, left: Configuration,
                right: Configuration) -> None:
    if left.capacities != d.capacities or right.capacities != d.capacities:
        raise IndexOutOfRange(
            f"configuration capacities {left.capacities}/{right.capacities} "
            f"do not match evaluator capacities {d.capacities}")


def _weight_w_sl(config: Configuration, q: float) -> tuple[float, float]:
    # exclusion weight q^{u} prod_k w(n_k; N_k; q); the site factor is
    # invariant under q <-> 1/q, only the u-exponent base flips
    acc = sl_qpow(q, u_factor(config))
    for k in range(1, config.sites + 1):
        acc = sl_mul(acc, site_weight_sl(
            "w", config.occupation(k), config.capacity(k), q=q))
    return acc


def _weight_WR_sl(config: Configuration, rho: float,
                  q: float) -> tuple[float, float]:
    acc = SL_ONE
    for k in range(1, config.sites + 1):
        acc = sl_mul(acc, site_weight_sl(
            "W", config.occupation(k), config.capacity(k),
            rho=height("plus", config, k + 1, rho), q=q))
    return acc


def _weight_WL_sl(config: Configuration, lam: float,
                  q: float) -> tuple[float, float]:
    acc = SL_ONE
    for k in range(1, config.sites + 1):
        acc = sl_mul(acc, site_weight_sl(
            "W", config.occupation(k), config.capacity(k),
            rho=height("minus", config, k - 1, lam), q=1.0 / q))
    return acc


def _kr_sl(d: DualityEvaluator, eta: Configuration,
           xi: Configuration) -> tuple[float, float]:
    acc = sl_qpow(d.q, -0.5 * u_factor(eta))
    for k in range(1, d.sites + 1):
        acc = sl_mul(acc, one_site_duality_sl(
            "k", eta.occupation(k), xi.occupation(k),
            rho=height("plus", xi, k + 1, d.rho),
            N=d.capacities[k - 1], q=d.q))
    return acc


def _kl_sl(d: DualityEvaluator, eta: Configuration,
           zeta: Configuration) -> tuple[float, float]:
    # same prefactor base q as K_R; the one-site kernels run at 1/q with
    # left-anchored heights
    acc = sl_qpow(d.q, -0.5 * u_factor(eta))
    for k in range(1, d.sites + 1):
        acc = sl_mul(acc, one_site_duality_sl(
            "k", eta.occupation(k), zeta.occupation(k),
            rho=height("minus", zeta, k - 1, d.lam),
            N=d.capacities[k - 1], q=1.0 / d.q))
    return acc


def _klv_sl(d: DualityEvaluator, eta: Configuration,
            zeta: Configuration) -> tuple[float, float]:
    return sl_mul(sl_ipow(sl_of(-d.v), eta.total), _kl_sl(d, eta, zeta))


def _rv_product_sl(d: DualityEvaluator, zeta: Configuration,
                   xi: Configuration) -> tuple[float, float]:
    acc = SL_ONE
    for k in range(1, d.sites + 1):
        acc = sl_mul(acc, one_site_duality_sl(
            "r", zeta.occupation(k), xi.occupation(k),
            lam=height("minus", zeta, k - 1, d.lam),
            rho=height("plus", xi, k + 1, d.rho),
            v=d.v, N=d.capacities[k - 1], q=d.q))
    return acc


def _rv_sum(d: DualityEvaluator, zeta: Configuration,
            xi: Configuration) -> float:
    total = 0.0
    for eta in enumerate_states(d.capacities):
        term = sl_mul(_klv_sl(d, eta, zeta), _kr_sl(d, eta, xi),
                      _weight_w_sl(eta, d.q))
        total += sl_float(term)
    return total


def _hahn_sl(kind: str, d: DualityEvaluator, eta: Configuration,
             xi: Configuration) -> tuple[float, float]:
    # shared wiring of P_v_R and P_prime_R: left heights are zero-anchored
    acc = SL_ONE
    for k in range(1, d.sites + 1):
        acc = sl_mul(acc, one_site_duality_sl(
            kind, eta.occupation(k), xi.occupation(k),
            lam=height("minus", eta, k - 1, 0.0),
            rho=height("plus", xi, k + 1, d.rho),
            v=d.v, N=d.capacities[k - 1], q=d.q))
    return acc


def _krawtchouk_sl(kind: str, d: DualityEvaluator, eta: Configuration,
                   xi: Configuration) -> tuple[float, float]:
    # K_qtm and K_aff: both height slots zero-anchored, no free boundary
    acc = SL_ONE
    for k in range(1, d.sites + 1):
        acc = sl_mul(acc, one_site_duality_sl(
            kind, eta.occupation(k), xi.occupation(k),
            lam=height("minus", eta, k - 1, 0.0),
            rho=height("plus", xi, k + 1, 0.0),
            v=d.v, N=d.capacities[k - 1], q=d.q))
    return acc


def _triangular_sl(d: DualityEvaluator, eta: Configuration,
                   xi: Configuration, prime: bool) -> tuple[float, float]:
    q = d.q
    q2 = q * q
    acc = sl_qpow(q, -0.5 * u_factor(eta))
    for k in range(1, d.sites + 1):
        n = eta.occupation(k)
        x = xi.occupation(k)
        cap = d.capacities[k - 1]
        if (n > cap - x) if prime else (n > x):
            return SL_ZERO
        h0 = height("plus", xi, k + 1, 0.0)
        if prime:
            num = sl_qpoch(q ** (2 * x - 2 * cap), q2, n)
            expo = n * (-2.0 * x + 0.5 * cap - 0.5 - h0)
        else:
            num = sl_qpoch(q ** (-2 * x), q2, n)
            expo = n * (2.0 * x - 1.5 * cap - 0.5 + h0)
        den = sl_qpoch_den(q ** (-2 * cap), q2, n,
                           "(q^{-2N}; q^2)_eta", error=PoleHit)
        acc = sl_mul(acc, sl_div(num, den), sl_qpow(q, expo))
    return acc


def _tazrp_sl(d: DualityEvaluator, zeta: Configuration,
              xi: Configuration) -> tuple[float, float]:
    expo = 0.0
    cum = 0
    for k in range(1, d.sites + 1):
        cum += zeta.occupation(k)
        expo += 2.0 * xi.occupation(k) * cum
    return sl_qpow(d.q, expo)


def _rhat_sl(d: DualityEvaluator, zeta: Configuration,
             xi: Configuration) -> tuple[float, float]:
    acc = SL_ONE
    for k in range(1, d.sites + 1):
        acc = sl_mul(acc, one_site_duality_sl(
            "r_hat", zeta.occupation(k), xi.occupation(k),
            lam=height("minus", zeta, k - 1, d.lam),
            rho=height("plus", xi, k + 1, d.rho),
            v=d.v, N=d.capacities[k - 1]))
    return acc


def _phat_sl(d: DualityEvaluator, eta: Configuration,
             xi: Configuration) -> tuple[float, float]:
    acc = SL_ONE
    for k in range(1, d.sites + 1):
        acc = sl_mul(acc, one_site_duality_sl(
            "p_hat", eta.occupation(k), xi.occupation(k),
            lam=height("minus", eta, k - 1, 0.0),
            rho=height("plus", xi, k + 1, d.rho),
            v=d.v, N=d.capacities[k - 1]))
    return acc


def _khat_sl(d: DualityEvaluator, eta: Configuration,
             xi: Configuration) -> tuple[float, float]:
    acc = SL_ONE
    for k in range(1, d.sites + 1):
        acc = sl_mul(acc, one_site_duality_sl(
            "k_hat", eta.occupation(k), xi.occupation(k),
            v=d.v, N=d.capacities[k - 1]))
    return acc


def _eval_sl(d: DualityEvaluator, left: Configuration,
             right: Configuration) -> tuple[float, float]:
    fam = d.family
    if fam == "K_R":
        return _kr_sl(d, left, right)
    if fam == "K_L":
        return _kl_sl(d, left, right)
    if fam == "K_L_v":
        return _klv_sl(d, left, right)
    if fam == "R_v_product":
        return _rv_product_sl(d, left, right)
    if fam == "R_v_sum":
        return sl_of(_rv_sum(d, left, right))
    if fam == "P_v_R":
        return _hahn_sl("p", d, left, right)
    if fam == "P_prime_R":
        return _hahn_sl("p_prime", d, left, right)
    if fam == "K_qtm":
        return _krawtchouk_sl("k_qtm", d, left, right)
    if fam == "K_aff":
        return _krawtchouk_sl("k_aff", d, left, right)
    if fam == "D_tri":
        return _triangular_sl(d, left, right, prime=False)
    if fam == "D_tri_prime":
        return _triangular_sl(d, left, right, prime=True)
    if fam == "D_tazrp":
        return _tazrp_sl(d, left, right)
    if fam == "R_hat":
        return _rhat_sl(d, left, right)
    if fam == "P_hat_R":
        return _phat_sl(d, left, right)
    return _khat_sl(d, left, right)


def duality_eval(d: DualityEvaluator, left: Configuration,
                 right: Configuration) -> float:
    """Evaluate the duality function at (left, right).

    Both configurations must carry the evaluator's capacity vector.  The
    triangular families return exactly 0 outside their support.
    """
    _check_pair(d, left, right)
    return sl_float(_eval_sl(d, left, right))


# ---------------------------------------------------------------------------
# sector prefactors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InvariantFactor:
    """Total-particle prefactor that maps a duality function to another.

    ``c_v`` and ``C_v`` depend on the two configurations only through their
    totals; each also has a site-by-site product form whose agreement with
    the closed form below is an identity (``invariant_factor_product``).
    """

    kind: str
    zeta_total: int
    xi_total: int
    lam: float = 0.0
    rho: float = 0.0
    v: float = 1.0
    total_capacity: int = 1
    q: float = 1.0

    def __post_init__(self):
        if self.kind not in INVARIANT_KINDS:
            raise DegenerateParameter(
                f"unknown invariant factor kind {self.kind!r}")
        if self.total_capacity < 1:
            raise IndexOutOfRange(
                f"total capacity must be positive: {self.total_capacity}")
        for total in (self.zeta_total, self.xi_total):
            if not 0 <= total <= self.total_capacity:
                raise IndexOutOfRange(
                    f"total {total} outside 0..{self.total_capacity}")
        if self.q <= 0.0:
            raise DegenerateParameter(f"q must be positive, got {self.q}")


def _invariant_sl(f: InvariantFactor) -> tuple[float, float]:
    a, c, b = f.zeta_total, f.xi_total, f.total_capacity
    q = f.q
    q2 = q * q
    if f.kind == "c_v":
        num = sl_qpoch(f.v * q ** (f.lam - f.rho + 2 * a - b + 1), q2, b - a)
        den = sl_qpoch_den(
            f.v * q ** (f.lam - f.rho - 2 * c + b + 1), q2, c,
            "(v q^{lam-rho-2xi+N+1}; q^2)_xi", error=PoleHit)
        return sl_div(num, den)
    base = -f.v * q ** (f.rho + f.lam - b + 1)
    num = sl_qpoch(base, q2, c)
    den = sl_qpoch_den(base, q2, a,
                       "(-v q^{rho+lam-N+1}; q^2)_zeta", error=PoleHit)
    return sl_div(num, den)


def invariant_factor(f: InvariantFactor) -> float:
    """Closed form of the factor, a ratio of two q-Pochhammer symbols."""
    return sl_float(_invariant_sl(f))


def invariant_factor_product(f: InvariantFactor, zeta: Configuration,
                             xi: Configuration) -> float:
    """Site-by-site form of the same factor.

    The configurations must have the totals and total capacity recorded in
    ``f``; the return value agrees with ``invariant_factor(f)`` although no
    single site factor depends on totals alone.
    """
    if zeta.capacities != xi.capacities:
        raise IndexOutOfRange("configurations live on different capacities")
    if (zeta.total != f.zeta_total or xi.total != f.xi_total
            or zeta.total_capacity != f.total_capacity):
        raise IndexOutOfRange(
            "configuration totals do not match the invariant factor record")
    q = f.q
    q2 = q * q
    acc = SL_ONE
    for k in range(1, zeta.sites + 1):
        zk = zeta.occupation(k)
        xk = xi.occupation(k)
        cap = zeta.capacity(k)
        hp = height("plus", xi, k + 1, f.rho)
        hm = height("minus", zeta, k - 1, f.lam)
        if f.kind == "c_v":
            num = sl_qpoch(f.v * q ** (2 * zk - hp + hm - cap + 1), q2, cap)
            den = sl_qpoch_den(
                f.v * q ** (-2 * xk - hp + hm + cap + 1), q2, xk + zk,
                "(v q^{-2xi-h+h-+N+1}; q^2)_{xi+zeta}", error=PoleHit)
        else:
            base = -f.v * q ** (hp + hm - cap + 1)
            num = sl_qpoch(base, q2, xk)
            den = sl_qpoch_den(base, q2, zk,
                               "(-v q^{h+h--N+1}; q^2)_zeta", error=PoleHit)
        acc = sl_mul(acc, sl_div(num, den))
    return sl_float(acc)


# ---------------------------------------------------------------------------
# generator-level residuals
# ---------------------------------------------------------------------------

def duality_matrix(d, sector_left: StateSector,
                   sector_right: StateSector) -> np.ndarray:
    """Dense matrix of duality values over two sectors.

    ``d`` is a DualityEvaluator or any callable (left, right) -> float,
    which lets total-particle multiples be tested without a new family.
    """
    if isinstance(d, DualityEvaluator):
        fn = lambda a, b: duality_eval(d, a, b)
    elif callable(d):
        fn = d
    else:
        raise DegenerateParameter(
            "d must be a DualityEvaluator or a callable")
    out = np.empty((sector_left.size, sector_right.size), dtype=float)
    for i, left in enumerate(sector_left):
        for j, right in enumerate(sector_right):
            out[i, j] = fn(left, right)
    return out


def duality_residual(spec_left: ProcessSpec, spec_right: ProcessSpec, d,
                     sector_left: StateSector,
                     sector_right: StateSector) -> float:
    """Intertwining defect of two generators through a duality function.

    Returns max |(L_left D(., xi))(eta) - (L_right D(eta, .))(xi)| over the
    sector pair, divided by the larger of the two one-sided maxima, floored
    at 1 so an identically small defect is reported absolutely.
    """
    gen_left = build_generator(spec_left, sector_left).to_dense()
    gen_right = build_generator(spec_right, sector_right).to_dense()
    dual = duality_matrix(d, sector_left, sector_right)
    lhs = gen_left @ dual
    rhs = dual @ gen_right.T
    scale = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))), 1.0)
    return float(np.max(np.abs(lhs - rhs))) / scale


def _measure_values(measure, space: StateSector) -> np.ndarray:
    if callable(measure):
        return np.array([measure(s) for s in space], dtype=float)
    values = np.asarray(measure, dtype=float)
    if values.shape != (space.size,):
        raise IndexOutOfRange(
            f"measure vector length {values.shape} != sector size "
            f"{space.size}")
    return values


def biorthogonality_residual(d_plus: DualityEvaluator,
                             d_minus: DualityEvaluator,
                             mu_left, mu_right,
                             extra_weights=None,
                             sum_over: str = "left") -> float:
    """Deviation of a weighted Gram matrix from the identity.

    ``mu_left`` attaches to the left variable of the duality functions and
    ``mu_right`` to the right variable (callables on configurations, or
    vectors over the full state space in enumeration order).
    ``extra_weights`` is an optional pair of callables on the total particle
    number, again (left, right).  With ``sum_over="left"`` the Gram sum runs
    over the left variable and the right measure prescribes the diagonal:

        G[a, b] = sum_x d_plus(x, s_a) d_minus(x, s_b) mu_l(x) w_l(|x|),
        residual = max |G[a, b] mu_r(s_a) w_r(|s_a|) - delta_{ab}|;

    ``sum_over="right"`` exchanges the roles of the two variables.
    """
    if sum_over not in ("left", "right"):
        raise DegenerateParameter(f"unknown summation side {sum_over!r}")
    caps = d_plus.capacities
    if d_minus.capacities != caps:
        raise IndexOutOfRange(
            "the two evaluators live on different capacities")
    space = enumerate_states(caps)
    weight_left, weight_right = (None, None)
    if extra_weights is not None:
        weight_left, weight_right = extra_weights

    plus = duality_matrix(d_plus, space, space)
    minus = duality_matrix(d_minus, space, space)
    mu_l = _measure_values(mu_left, space)
    mu_r = _measure_values(mu_right, space)
    if weight_left is not None:
        mu_l = mu_l * np.array([weight_left(s.total) for s in space])
    if weight_right is not None:
        mu_r = mu_r * np.array([weight_right(s.total) for s in space])

    if sum_over == "left":
        gram = plus.T @ (mu_l[:, None] * minus)
        out = mu_r
    else:
        gram = (plus * mu_r[None, :]) @ minus.T
        out = mu_l
    deviation = gram * out[:, None] - np.eye(space.size)
    return float(np.max(np.abs(deviation)))


# ---------------------------------------------------------------------------
# degeneration harness
# ---------------------------------------------------------------------------

_DEG_CAPS = (1, 2)
_DEG_Q = 0.5
_DEG_RHO = 0.7
_DEG_LAM = 0.3
_DEG_V = 1.3


def _deviation(pre_sl: tuple[float, float],
               target_sl: tuple[float, float]) -> float:
    # relative deviation against nonzero targets, absolute against zero ones
    if target_sl[0] == 0.0:
        return abs(sl_float(pre_sl))
    return abs(sl_float(sl_div(pre_sl, target_sl)) - 1.0)


def _pairs(caps):
    space = enumerate_states(caps)
    return [(a, b) for a in space for b in space]


def _case_kr_to_triangular(scale: float, prime: bool,
                           support_only: bool = False) -> float:
    q = _DEG_Q
    rho = scale if prime else -scale
    d_pre = DualityEvaluator("K_R", _DEG_CAPS, q=q, rho=rho)
    fam = "D_tri_prime" if prime else "D_tri"
    d_tgt = DualityEvaluator(fam, _DEG_CAPS, q=q)
    worst = 0.0
    for eta, xi in _pairs(_DEG_CAPS):
        if prime:
            pref = sl_mul(sl_ipow(sl_of(-1.0), eta.total),
                          sl_qpow(q, rho * eta.total))
        else:
            pref = sl_qpow(q, -rho * eta.total)
        pre = sl_mul(pref, _eval_sl(d_pre, eta, xi))
        target = _eval_sl(d_tgt, eta, xi)
        if support_only and target[0] != 0.0:
            continue
        worst = max(worst, _deviation(pre, target))
    return worst


def _case_pvr_from_rv(scale: float, inverse_base: bool = False) -> float:
    # inverse_base runs the same contraction in the q -> 1/q
    # representation, where the large height parameter enters with the
    # opposite sign; this is the arrow that lands on the pair with the
    # inverted asymmetry
    q = 1.0 / _DEG_Q if inverse_base else _DEG_Q
    lam = -scale if inverse_base else scale
    d_pre = DualityEvaluator("R_v_product", _DEG_CAPS, q=q, rho=_DEG_RHO,
                             lam=lam, v=_DEG_V * q ** (-lam))
    d_tgt = DualityEvaluator("P_v_R", _DEG_CAPS, q=q, rho=_DEG_RHO, v=_DEG_V)
    worst = 0.0
    for zeta, xi in _pairs(_DEG_CAPS):
        pre = sl_mul(sl_qpow(q, 2.0 * lam * zeta.total),
                     _eval_sl(d_pre, zeta, xi))
        worst = max(worst, _deviation(pre, _eval_sl(d_tgt, zeta, xi)))
    return worst


def _case_pvr_from_rv_second(scale: float) -> float:
    # the other large-lam route: no exponential scaling, but the limit
    # carries both invariant factors at zero lam slot
    q = _DEG_Q
    b = sum(_DEG_CAPS)
    d_pre = DualityEvaluator("R_v_product", _DEG_CAPS, q=q, rho=_DEG_RHO,
                             lam=scale, v=q ** scale / _DEG_V)
    d_tgt = DualityEvaluator("P_v_R", _DEG_CAPS, q=q, rho=_DEG_RHO, v=_DEG_V)
    worst = 0.0
    for zeta, xi in _pairs(_DEG_CAPS):
        shared = dict(lam=0.0, rho=_DEG_RHO, v=_DEG_V, total_capacity=b, q=q)
        small_c = _invariant_sl(InvariantFactor(
            "c_v", zeta.total, xi.total, **shared))
        big_c = _invariant_sl(InvariantFactor(
            "C_v", zeta.total, xi.total, **shared))
        pre = sl_mul(sl_ipow(sl_of(_DEG_V), 2 * zeta.total),
                     sl_mul(small_c, big_c), _eval_sl(d_pre, zeta, xi))
        worst = max(worst, _deviation(pre, _eval_sl(d_tgt, zeta, xi)))
    return worst


def _case_kqtm_from_pvr(scale: float, inverse_base: bool = False) -> float:
    q = 1.0 / _DEG_Q if inverse_base else _DEG_Q
    b = sum(_DEG_CAPS)
    rho = scale if inverse_base else -scale
    d_pre = DualityEvaluator("P_v_R", _DEG_CAPS, q=q, rho=rho,
                             v=_DEG_V * q ** rho)
    d_tgt = DualityEvaluator("K_qtm", _DEG_CAPS, q=q, v=_DEG_V)
    worst = 0.0
    for eta, xi in _pairs(_DEG_CAPS):
        zero_c = _invariant_sl(InvariantFactor(
            "c_v", eta.total, xi.total, lam=0.0, rho=0.0, v=_DEG_V,
            total_capacity=b, q=q))
        big_c = _invariant_sl(InvariantFactor(
            "C_v", eta.total, xi.total, lam=0.0, rho=2.0 * rho, v=_DEG_V,
            total_capacity=b, q=q))
        pref = sl_mul(sl_ipow(sl_of(1.0 / (_DEG_V * _DEG_V)), eta.total),
                      sl_qpow(q, -2.0 * rho * eta.total))
        pre = sl_mul(pref, sl_div(sl_div(_eval_sl(d_pre, eta, xi), zero_c),
                                  big_c))
        worst = max(worst, _deviation(pre, _eval_sl(d_tgt, eta, xi)))
    return worst


def _case_kaff_from_pvr(scale: float, inverse_base: bool = False) -> float:
    q = 1.0 / _DEG_Q if inverse_base else _DEG_Q
    b = sum(_DEG_CAPS)
    rho = -scale if inverse_base else scale
    d_pre = DualityEvaluator("P_v_R", _DEG_CAPS, q=q, rho=rho,
                             v=-_DEG_V * q ** (-rho))
    d_tgt = DualityEvaluator("K_aff", _DEG_CAPS, q=q, v=_DEG_V)
    worst = 0.0
    for eta, xi in _pairs(_DEG_CAPS):
        neg_c = _invariant_sl(InvariantFactor(
            "c_v", eta.total, xi.total, lam=0.0, rho=2.0 * rho, v=-_DEG_V,
            total_capacity=b, q=q))
        pre = sl_div(sl_mul(sl_qpow(q, 2.0 * rho * eta.total),
                            _eval_sl(d_pre, eta, xi)), neg_c)
        worst = max(worst, _deviation(pre, _eval_sl(d_tgt, eta, xi)))
    return worst


def _case_kr_from_pvr_v0(scale: float) -> float:
    q = _DEG_Q
    d_pre = DualityEvaluator("P_v_R", _DEG_CAPS, q=q, rho=_DEG_RHO, v=scale)
    d_tgt = DualityEvaluator("K_R", _DEG_CAPS, q=q, rho=_DEG_RHO)
    worst = 0.0
    for eta, xi in _pairs(_DEG_CAPS):
        tot = eta.total
        pre = sl_mul(sl_ipow(sl_of(1.0 / scale), tot),
                     _eval_sl(d_pre, eta, xi))
        # constant is (-q^{-1/2})^tot times q^{-tot(tot-1)}
        target = sl_mul(sl_ipow(sl_of(-1.0), tot),
                        sl_qpow(q, -tot * (tot - 0.5)),
                        _eval_sl(d_tgt, eta, xi))
        worst = max(worst, _deviation(pre, target))
    return worst


def _case_dtazrp_from_rv(scale: float) -> float:
    # scale is the common site capacity; occupations are probed up to 2
    q = _DEG_Q
    cap = int(round(scale))
    sites = 2
    caps = (cap,) * sites
    d_pre = DualityEvaluator("R_v_product", caps, q=q, rho=_DEG_RHO,
                             lam=_DEG_LAM, v=_DEG_V)
    d_tgt = DualityEvaluator("D_tazrp", caps, q=q)
    worst = 0.0
    box = enumerate_states((2,) * sites)
    for small_z in box:
        for small_x in box:
            zeta = Configuration(small_z.occupations, caps)
            xi = Configuration(small_x.occupations, caps)
            inv = _invariant_sl(InvariantFactor(
                "c_v", zeta.total, xi.total, lam=_DEG_LAM, rho=_DEG_RHO,
                v=_DEG_V, total_capacity=sites * cap, q=q))
            tot = xi.total
            pref = sl_mul(
                sl_ipow(sl_of(1.0 / _DEG_V), tot),
                sl_qpow(q, -tot * (tot + _DEG_RHO + _DEG_LAM)),
                sl_qpow(q, tot * sites * cap))
            pre = sl_mul(pref, sl_div(_eval_sl(d_pre, zeta, xi), inv))
            worst = max(worst, _deviation(pre, _eval_sl(d_tgt, zeta, xi)))
    return worst


def _rate_arrow(spec_pre: ProcessSpec, spec_tgt: ProcessSpec,
                rate_scale: float, caps_box) -> float:
    worst = 0.0
    for config in enumerate_states(caps_box):
        lifted = Configuration(config.occupations, spec_pre.capacities)
        target_cfg = Configuration(config.occupations, spec_tgt.capacities)
        for k in range(1, lifted.sites + 1):
            for direction in ("right", "left"):
                pre = rate_scale * jump_rate(spec_pre, lifted, k, direction)
                tgt = jump_rate(spec_tgt, target_cfg, k, direction)
                if tgt == 0.0:
                    worst = max(worst, abs(pre))
                else:
                    worst = max(worst, abs(pre / tgt - 1.0))
    return worst


def _case_rates_dynamic_to_asep(scale: float, kind: str,
                                sign: float) -> float:
    caps = (1, 2, 1)
    q = _DEG_Q
    if kind == "asep_r":
        spec_pre = ProcessSpec("asep_r", caps, q=q, rho=sign * scale)
        q_tgt = q if sign < 0 else 1.0 / q
    else:
        spec_pre = ProcessSpec("asep_l", caps, q=q, lam=sign * scale)
        q_tgt = q if sign > 0 else 1.0 / q
    spec_tgt = ProcessSpec("asep", caps, q=q_tgt)
    return _rate_arrow(spec_pre, spec_tgt, 1.0, caps)


def _case_rates_ssep(scale: float, kind: str) -> float:
    caps = (1, 2, 1)
    spec_tgt = ProcessSpec("ssep", caps)
    worst = 0.0
    for sign in (-1.0, 1.0):
        if kind == "ssep_r":
            spec_pre = ProcessSpec("ssep_r", caps, rho=sign * scale)
        else:
            spec_pre = ProcessSpec("ssep_l", caps, lam=sign * scale)
        worst = max(worst, _rate_arrow(spec_pre, spec_tgt, 1.0, caps))
    return worst


def _case_rates_tazrp(scale: float, side: str) -> float:
    # the rate arrow needs a global q^{2N} time rescale on top of the
    # bracket normalization; without it the scaled rates diverge like
    # q^{-2N} for q < 1
    q = 0.6
    cap = int(round(scale))
    sites = 3
    caps = (cap,) * sites
    rate_scale = (1.0 / q - q) * q ** (2 * cap)
    if side == "right":
        spec_pre = ProcessSpec("asep_r", caps, q=q, rho=_DEG_RHO)
        spec_tgt = ProcessSpec("tazrp_right", caps, q=q)
    else:
        spec_pre = ProcessSpec("asep_l", caps, q=q, lam=_DEG_LAM)
        spec_tgt = ProcessSpec("tazrp_left", caps, q=q)
    return _rate_arrow(spec_pre, spec_tgt, rate_scale, (3,) * sites)


def _beta1(a: float, b: float) -> float:
    return b - a * (a + 1.0) - (b - a) ** 2


def _beta2(a: float, b: float) -> float:
    return a * (1.0 - 2.0 * a + 2.0 * b)


def _gamma1(a: float) -> float:
    return a * (2.0 * a - 1.0)


def _gamma2(a: float, b: float) -> float:
    return -b + a * (a + 1.0) + (b - a) ** 2 - 2.0 * a * b


def _case_measure_limit(scale: float, which: str) -> float:
    q = _DEG_Q
    caps = _DEG_CAPS
    b = sum(caps)
    worst = 0.0
    for config in enumerate_states(caps):
        a = config.total
        if which == "WR_minus":
            pre = sl_mul(sl_qpow(q, -2.0 * scale * a),
                         _weight_WR_sl(config, -scale, q))
            target = sl_mul(sl_qpow(q, _beta2(a, b)),
                            _weight_w_sl(config, q))
        elif which == "WR_plus":
            pre = sl_mul(sl_qpow(q, 2.0 * scale * (a - b)),
                         _weight_WR_sl(config, scale, q))
            target = sl_mul(sl_qpow(q, _beta1(a, b)),
                            _weight_w_sl(config, 1.0 / q))
        elif which == "WL_plus":
            pre = sl_mul(sl_qpow(q, -2.0 * scale * a),
                         _weight_WL_sl(config, scale, q))
            target = sl_mul(sl_qpow(q, _gamma1(a)),
                            _weight_w_sl(config, q))
        else:
            pre = sl_mul(sl_qpow(q, 2.0 * scale * (a - b)),
                         _weight_WL_sl(config, -scale, q))
            target = sl_mul(sl_qpow(q, _gamma2(a, b)),
                            _weight_w_sl(config, 1.0 / q))
        worst = max(worst, _deviation(pre, target))
    return worst


def _case_qto1_r_hat(scale: float) -> float:
    q = 1.0 - scale
    caps = _DEG_CAPS
    v = 1.1
    d_tgt = DualityEvaluator("R_hat", caps, rho=_DEG_RHO, lam=_DEG_LAM, v=v)
    worst = 0.0
    for zeta, xi in _pairs(caps):
        acc = sl_mul(sl_ipow(sl_of(-1.0), zeta.total),
                     sl_ipow(sl_of(1.0 / (1.0 - q * q)), sum(caps)))
        for k in range(1, zeta.sites + 1):
            acc = sl_mul(acc, r_flagged_sl(
                zeta.occupation(k), xi.occupation(k),
                rho=height("plus", xi, k + 1, _DEG_RHO),
                lam=height("minus", zeta, k - 1, _DEG_LAM),
                v=v, N=caps[k - 1], q=q))
        worst = max(worst, _deviation(acc, _eval_sl(d_tgt, zeta, xi)))
    return worst


def _case_qto1_p_hat(scale: float) -> float:
    q = 1.0 - scale
    caps = _DEG_CAPS
    v = 1.1
    d_tgt = DualityEvaluator("P_hat_R", caps, rho=_DEG_RHO, v=v)
    worst = 0.0
    for eta, xi in _pairs(caps):
        acc = sl_ipow(sl_of(1.0 - q * q), eta.total - sum(caps))
        for k in range(1, eta.sites + 1):
            acc = sl_mul(acc, p_flagged_sl(
                eta.occupation(k), xi.occupation(k),
                rho=height("plus", xi, k + 1, _DEG_RHO),
                lam=height("minus", eta, k - 1, 0.0),
                v=v, N=caps[k - 1], q=q))
        worst = max(worst, _deviation(acc, _eval_sl(d_tgt, eta, xi)))
    return worst


def _case_qto1_k_hat(scale: float) -> float:
    q = 1.0 - scale
    caps = _DEG_CAPS
    v = 1.5
    d_tgt = DualityEvaluator("K_hat", caps, v=v)
    worst = 0.0
    for eta, xi in _pairs(caps):
        tot = eta.total
        acc = sl_mul(sl_ipow(sl_of(-1.0), tot),
                     sl_qpow(q, -0.5 * u_factor(eta)))
        for k in range(1, eta.sites + 1):
            acc = sl_mul(acc, k_subbed_sl(
                eta.occupation(k), xi.occupation(k),
                h0=height("plus", xi, k + 1, 0.0),
                v=v, N=caps[k - 1], q=q))
        worst = max(worst, _deviation(acc, _eval_sl(d_tgt, eta, xi)))
    return worst


def _case_qto1_w_hat(scale: float, side: str) -> float:
    q = 1.0 - scale
    caps = (1, 1)
    anchor = 2.5  # outside the total capacity so the weights stay positive
    worst = 0.0
    for config in enumerate_states(caps):
        sign = -1.0 if config.total % 2 else 1.0
        acc = (sign, 0.0)
        target = SL_ONE
        for k in range(1, config.sites + 1):
            n = config.occupation(k)
            cap = config.capacity(k)
            if side == "right":
                h = height("plus", config, k + 1, anchor)
                acc = sl_mul(acc, sl_ipow(sl_of(1.0 - q * q), cap),
                             site_weight_flagged_sl(n, cap, h, q))
            else:
                h = height("minus", config, k - 1, anchor)
                qi = 1.0 / q
                acc = sl_mul(acc, sl_ipow(sl_of(1.0 - qi * qi), cap),
                             site_weight_flagged_sl(n, cap, h, qi))
            target = sl_mul(target, site_weight_sl("W_hat", n, cap, rho=h))
        worst = max(worst, _deviation(acc, target))
    return worst


def _case_qto1_w_plain(scale: float) -> float:
    q = 1.0 - scale
    caps = _DEG_CAPS
    worst = 0.0
    for config in enumerate_states(caps):
        pre = _weight_w_sl(config, q)
        target = SL_ONE
        for k in range(1, config.sites + 1):
            target = sl_mul(target, sl_of(math.comb(
                config.capacity(k), config.occupation(k))))
        worst = max(worst, _deviation(pre, target))
    return worst


def _case_qto1_wr(scale: float, free_param: bool) -> float:
    q = 1.0 - scale
    caps = _DEG_CAPS
    b = sum(caps)
    worst = 0.0
    if free_param:
        v = 1.5
        rho = math.log(v) / (2.0 * math.log(q))
        p_v = 1.0 / (1.0 + v)
    else:
        rho = _DEG_RHO
    for config in enumerate_states(caps):
        pre = _weight_WR_sl(config, rho, q)
        binom = SL_ONE
        for k in range(1, config.sites + 1):
            binom = sl_mul(binom, sl_of(math.comb(
                config.capacity(k), config.occupation(k))))
        a = config.total
        if free_param:
            target = sl_mul(sl_of(p_v ** a * (1.0 - p_v) ** (b - a)), binom)
        else:
            target = sl_mul(sl_of(0.5 ** b), binom)
        worst = max(worst, _deviation(pre, target))
    return worst


def _case_qto1_omega_p(scale: float) -> float:
    q = 1.0 - scale
    b = 3
    rho = _DEG_RHO
    v = 1.1
    worst = 0.0
    for x in range(b + 1):
        left = sl_mul(sl_ipow(sl_of(1.0 - q * q), b - 2 * x),
                      omega_flagged_p_sl(x, rho=rho, v=v, total_n=b, q=q,
                                         right=False))
        worst = max(worst, _deviation(
            left, sl_of(omega("p_hat", x, rho=rho, v=v, total_n=b))))
        right = omega_flagged_p_sl(x, rho=rho, v=v, total_n=b, q=q,
                                   right=True)
        worst = max(worst, _deviation(
            right, sl_of(omega("pR_hat", x, rho=rho, v=v, total_n=b))))
    return worst


DEGENERATION_CASES = {
    "KR_to_triangular": lambda s: _case_kr_to_triangular(s, prime=False),
    "KR_to_triangular_support":
        lambda s: _case_kr_to_triangular(s, prime=False, support_only=True),
    "KR_to_triangular_prime":
        lambda s: _case_kr_to_triangular(s, prime=True),
    "PvR_from_Rv": _case_pvr_from_rv,
    "PvR_from_Rv_second": _case_pvr_from_rv_second,
    "PvR_from_Rv_inverse_base":
        lambda s: _case_pvr_from_rv(s, inverse_base=True),
    "Kqtm_from_PvR": _case_kqtm_from_pvr,
    "Kqtm_from_PvR_inverse_base":
        lambda s: _case_kqtm_from_pvr(s, inverse_base=True),
    "Kaff_from_PvR": _case_kaff_from_pvr,
    "Kaff_from_PvR_inverse_base":
        lambda s: _case_kaff_from_pvr(s, inverse_base=True),
    "KR_from_PvR_v0": _case_kr_from_pvr_v0,
    "Dtazrp_from_Rv": _case_dtazrp_from_rv,
    "rates_asepR_to_asep_minus":
        lambda s: _case_rates_dynamic_to_asep(s, "asep_r", -1.0),
    "rates_asepR_to_asep_plus":
        lambda s: _case_rates_dynamic_to_asep(s, "asep_r", 1.0),
    "rates_asepL_to_asep_plus":
        lambda s: _case_rates_dynamic_to_asep(s, "asep_l", 1.0),
    "rates_asepL_to_asep_minus":
        lambda s: _case_rates_dynamic_to_asep(s, "asep_l", -1.0),
    "rates_ssepR_to_ssep": lambda s: _case_rates_ssep(s, "ssep_r"),
    "rates_ssepL_to_ssep": lambda s: _case_rates_ssep(s, "ssep_l"),
    "rates_tazrp_right": lambda s: _case_rates_tazrp(s, "right"),
    "rates_tazrp_left": lambda s: _case_rates_tazrp(s, "left"),
    "WR_to_w_minus": lambda s: _case_measure_limit(s, "WR_minus"),
    "WR_to_w_plus": lambda s: _case_measure_limit(s, "WR_plus"),
    "WL_to_w_plus": lambda s: _case_measure_limit(s, "WL_plus"),
    "WL_to_w_minus": lambda s: _case_measure_limit(s, "WL_minus"),
    "qto1_R_hat": _case_qto1_r_hat,
    "qto1_P_hat": _case_qto1_p_hat,
    "qto1_K_hat": _case_qto1_k_hat,
    "qto1_W_hat_R": lambda s: _case_qto1_w_hat(s, "right"),
    "qto1_W_hat_L": lambda s: _case_qto1_w_hat(s, "left"),
    "qto1_w_hat": _case_qto1_w_plain,
    "qto1_WR_plain": lambda s: _case_qto1_wr(s, free_param=False),
    "qto1_WR_free_param": lambda s: _case_qto1_wr(s, free_param=True),
    "qto1_omega_p": _case_qto1_omega_p,
}


def degeneration_residual(case: str, scale: float) -> float:
    """Evaluate a named limit case at a finite scale.

    ``scale`` is the large height parameter for the dynamic-parameter
    arrows, the site capacity for the zero range arrows, 1 - q for the
    classical continuity cases, and the small v for the v -> 0 collapse.
    The return value is the worst deviation over the case's probe grid,
    relative against nonzero targets, absolute against zero ones (so
    emerging support indicators are checked by decay).
    """
    try:
        fn = DEGENERATION_CASES[case]
    except KeyError:
        raise DegenerateParameter(
            f"unknown degeneration case {case!r}") from None
    if scale <= 0.0:
        raise DegenerateParameter(f"scale must be positive, got {scale}")
    return fn(scale)
