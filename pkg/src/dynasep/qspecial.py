"""q-deformed special functions and one-site building blocks.

This module provides the scalar machinery everything else is assembled from:
symmetric q-brackets, q-shifted factorials, q-binomials, terminating basic
hypergeometric series and their classical companions, the named orthogonal
polynomial families, the one-site duality kernels, the one-site weight
functions, the three-term recurrence coefficients of the dual q-Krawtchouk
kernel, and the sector-dependent omega factors that appear in the degenerate
orthogonality relations.

Two conventions used throughout:

* products of many q-power and q-shifted-factorial factors are accumulated in
  (sign, log-magnitude) form and exponentiated once at the end, so parameter
  regimes with |rho| ~ 40 stay inside double precision;
* a result is evaluated on the classical branch when |q - 1| < CLASSICAL_EPS,
  and the q-dependent kernels refuse q that close to 1 (the hatted kernels
  cover the classical point exactly).
"""

from __future__ import annotations

import math

from .errors import (
    DegenerateParameter,
    DivergentTerm,
    NonTerminating,
    PoleHit,
)

CLASSICAL_EPS = 1e-12

# A denominator factor this close to zero is reported as degenerate rather
# than divided through: exponent cancellations that are exact in real
# arithmetic leave ~1e-16 residues in floats.
DEGENERATE_EPS = 1e-12

# Checking whether a parameter is q^{-m} (or -m) for integer m >= 0 tolerates
# this much absolute error on m; parameters built as q**(-m) are far tighter.
_INT_DETECT_TOL = 1e-8

LOG_ZERO = float("-inf")

POLY_FAMILIES = frozenset({
    "q_racah", "q_hahn", "q_krawtchouk", "qtm_krawtchouk", "aff_krawtchouk",
    "racah", "hahn", "krawtchouk",
})

DUALITY_KERNELS = frozenset({
    "k", "r", "p", "p_prime", "k_qtm", "k_aff", "r_hat", "p_hat", "k_hat",
})

SITE_WEIGHT_KINDS = frozenset({"w", "W", "W_inv", "W_hat"})

RECURRENCE_KINDS = frozenset({
    "a_minus1", "a_0", "a_1",
    "a_{-2,2}", "a_{-1,2}", "a_{0,2}",
    "a_{0,-2}", "a_{1,-2}", "a_{2,-2}",
})

OMEGA_KINDS = frozenset({
    "p", "pR", "qtm", "qtmR", "aff", "affR", "p_hat", "pR_hat", "k_hat",
})


# ---------------------------------------------------------------------------
# sign/log-magnitude arithmetic
# ---------------------------------------------------------------------------

def sl_of(value: float) -> tuple[float, float]:
    """Represent a float as (sign, log|value|), with sign 0 for zero."""
    if value == 0.0:
        return (0.0, LOG_ZERO)
    return (math.copysign(1.0, value), math.log(abs(value)))


def sl_mul(*factors: tuple[float, float]) -> tuple[float, float]:
    sign = 1.0
    log = 0.0
    for s, l in factors:
        if s == 0.0:
            return (0.0, LOG_ZERO)
        sign *= s
        log += l
    return (sign, log)


def sl_div(num: tuple[float, float], den: tuple[float, float]) -> tuple[float, float]:
    if den[0] == 0.0:
        raise ZeroDivisionError("sign/log division by exact zero")
    if num[0] == 0.0:
        return (0.0, LOG_ZERO)
    return (num[0] * den[0], num[1] - den[1])


def sl_float(value: tuple[float, float]) -> float:
    sign, log = value
    if sign == 0.0:
        return 0.0
    return sign * math.exp(log)


def sl_qpow(q: float, exponent: float) -> tuple[float, float]:
    """q**exponent in (sign, log) form; q must be positive."""
    return (1.0, exponent * math.log(q))


def sl_ipow(base: tuple[float, float], n: int) -> tuple[float, float]:
    """Integer power of a (sign, log) value."""
    if n == 0:
        return (1.0, 0.0)
    if base[0] == 0.0:
        return (0.0, LOG_ZERO)
    return (base[0] ** n, n * base[1])


def sl_qpoch(a: float, q: float, n: int) -> tuple[float, float]:
    """(a; q)_n = prod_{j=0}^{n-1} (1 - a q^j) in (sign, log) form."""
    sign = 1.0
    log = 0.0
    aqj = a
    for _ in range(n):
        factor = 1.0 - aqj
        if factor == 0.0:
            return (0.0, LOG_ZERO)
        sign *= math.copysign(1.0, factor)
        log += math.log(abs(factor))
        aqj *= q
    return (sign, log)


def sl_poch(a: float, n: int) -> tuple[float, float]:
    """Rising factorial (a)_n = a (a+1) ... (a+n-1) in (sign, log) form."""
    sign = 1.0
    log = 0.0
    for j in range(n):
        factor = a + j
        if factor == 0.0:
            return (0.0, LOG_ZERO)
        sign *= math.copysign(1.0, factor)
        log += math.log(abs(factor))
    return (sign, log)


def sl_qpoch_den(a: float, q: float, n: int, what: str,
                 error: type = DegenerateParameter) -> tuple[float, float]:
    """(a; q)_n for use in a denominator: a factor vanishing to double
    precision raises `error` instead of poisoning the quotient."""
    sign = 1.0
    log = 0.0
    aqj = a
    for _ in range(n):
        factor = 1.0 - aqj
        if abs(factor) < DEGENERATE_EPS:
            raise error(f"denominator {what} vanishes")
        sign *= math.copysign(1.0, factor)
        log += math.log(abs(factor))
        aqj *= q
    return (sign, log)


def sl_poch_den(a: float, n: int, what: str,
                error: type = DegenerateParameter) -> tuple[float, float]:
    """Rising factorial for use in a denominator; near-zero factors raise."""
    sign = 1.0
    log = 0.0
    for j in range(n):
        factor = a + j
        if abs(factor) < DEGENERATE_EPS:
            raise error(f"denominator {what} vanishes")
        sign *= math.copysign(1.0, factor)
        log += math.log(abs(factor))
    return (sign, log)


# ---------------------------------------------------------------------------
# elementary q-functions
# ---------------------------------------------------------------------------

def q_bracket(a: float, q: float) -> float:
    """Symmetric q-number (q^a - q^{-a}) / (q - q^{-1}); equals a at q = 1."""
    if q <= 0.0:
        raise DegenerateParameter(f"q must be positive, got {q}")
    if abs(q - 1.0) < CLASSICAL_EPS:
        return float(a)
    return (q ** a - q ** (-a)) / (q - 1.0 / q)


def q_pochhammer(a: float, q: float, n: int) -> float:
    """q-shifted factorial (a; q)_n = prod_{j=0}^{n-1} (1 - a q^j)."""
    if n < 0:
        raise DegenerateParameter(f"pochhammer length must be >= 0, got {n}")
    out = 1.0
    aqj = a
    for _ in range(n):
        out *= 1.0 - aqj
        aqj *= q
    return out


def poch(a: float, n: int) -> float:
    """Rising factorial (a)_n = a (a+1) ... (a+n-1)."""
    if n < 0:
        raise DegenerateParameter(f"pochhammer length must be >= 0, got {n}")
    out = 1.0
    for j in range(n):
        out *= a + j
    return out


def q_binomial(n: int, k: int, q: float) -> float:
    """Gaussian binomial coefficient in base q; zero outside 0 <= k <= n."""
    if q <= 0.0:
        raise DegenerateParameter(f"q must be positive, got {q}")
    if k < 0 or k > n:
        return 0.0
    if abs(q - 1.0) < CLASSICAL_EPS:
        return float(math.comb(n, k))
    num = sl_qpoch(q, q, n)
    den = sl_mul(sl_qpoch(q, q, k), sl_qpoch(q, q, n - k))
    return sl_float(sl_div(num, den))


# ---------------------------------------------------------------------------
# terminating hypergeometric series
# ---------------------------------------------------------------------------

def _q_power_index(a: float, q: float) -> int | None:
    """Return m if a == q^{-m} for an integer m >= 0, else None."""
    if a <= 0.0:
        return None
    logq = math.log(q)
    if logq == 0.0:
        return None
    m_real = -math.log(a) / logq
    m = round(m_real)
    if m < 0 or abs(m_real - m) > _INT_DETECT_TOL:
        return None
    return m


def _neg_int_index(a: float) -> int | None:
    """Return m if a == -m for an integer m >= 0, else None."""
    m = round(-a)
    if m < 0 or abs(a + m) > _INT_DETECT_TOL:
        return None
    return m


def basic_hyp(numerator: list[float], denominator: list[float],
              q: float, z: float) -> float:
    """Terminating basic hypergeometric series r+1_phi_s style sum.

    Computes sum_j  [prod_i (a_i; q)_j] / [(q; q)_j prod_i (b_i; q)_j]
    * ((-1)^j q^{j(j-1)/2})^{1 + s - r} * z^j, where r+1 = len(numerator)
    and s = len(denominator).  Termination is detected from a numerator
    parameter of the form q^{-m} with integer m >= 0.

    Raises
    ------
    NonTerminating
        If no numerator parameter has the form q^{-m}.
    DivergentTerm
        If a denominator factor vanishes before the series terminates.
    """
    if q <= 0.0 or abs(q - 1.0) < CLASSICAL_EPS:
        raise DegenerateParameter(
            f"base q must be positive and away from 1, got {q}")
    stop = None
    for a in numerator:
        m = _q_power_index(a, q)
        if m is not None:
            stop = m if stop is None else min(stop, m)
    if stop is None:
        raise NonTerminating(
            "no numerator parameter of the form q^-m with integer m >= 0")
    for b in denominator:
        m = _q_power_index(b, q)
        if m is not None and m < stop:
            raise DivergentTerm(
                f"denominator parameter q^-{m} vanishes at term {m + 1} "
                f"before termination at {stop}")
    extra_power = 1 + len(denominator) - len(numerator)
    total = 1.0
    term = 1.0
    qj = 1.0  # q^{j-1} while processing term j
    for j in range(1, stop + 1):
        num = 1.0
        for a in numerator:
            num *= 1.0 - a * qj
        den = 1.0 - q ** j
        for b in denominator:
            den *= 1.0 - b * qj
        if num == 0.0:
            break
        if den == 0.0:
            raise DivergentTerm(f"denominator factor vanishes at term {j}")
        term *= num / den * z
        if extra_power:
            term *= (-qj) ** extra_power
        total += term
        qj *= q
    return total


def hyp_F(numerator: list[float], denominator: list[float], z: float) -> float:
    """Terminating ordinary hypergeometric sum with rising factorials.

    Computes sum_j [prod_i (a_i)_j] / [j! prod_i (b_i)_j] z^j, terminating
    at the smallest nonnegative integer m with -m among the numerator
    parameters.

    Raises
    ------
    NonTerminating
        If no numerator parameter is a nonpositive integer.
    DivergentTerm
        If a denominator factor vanishes before the series terminates.
    """
    stop = None
    for a in numerator:
        m = _neg_int_index(a)
        if m is not None:
            stop = m if stop is None else min(stop, m)
    if stop is None:
        raise NonTerminating(
            "no numerator parameter is a nonpositive integer")
    for b in denominator:
        m = _neg_int_index(b)
        if m is not None and m < stop:
            raise DivergentTerm(
                f"denominator parameter -{m} vanishes at term {m + 1} "
                f"before termination at {stop}")
    total = 1.0
    term = 1.0
    for j in range(1, stop + 1):
        num = 1.0
        for a in numerator:
            num *= a + j - 1
        den = float(j)
        for b in denominator:
            den *= b + j - 1
        if num == 0.0:
            break
        if den == 0.0:
            raise DivergentTerm(f"denominator factor vanishes at term {j}")
        term *= num / den * z
        total += term
    return total


# ---------------------------------------------------------------------------
# named polynomial families
# ---------------------------------------------------------------------------

def poly_eval(family: str, n: int, x: float, params: dict) -> float:
    """Evaluate an orthogonal polynomial family member.

    Parameters
    ----------
    family : str
        One of POLY_FAMILIES.  The q-families expect a base ``q`` in params;
        the classical families do not.
    n : int
        Degree.
    x : float
        Evaluation point (an integer lattice point for the discrete families).
    params : dict
        Family parameters: ``alpha, beta, gamma, delta`` (racah kinds),
        ``alpha, beta, N`` (hahn kinds), ``c, N`` (q_krawtchouk),
        ``p, N`` (krawtchouk kinds), plus ``q`` for q-families.
    """
    if family not in POLY_FAMILIES:
        raise DegenerateParameter(f"unknown polynomial family {family!r}")
    if family == "q_racah":
        a, b, g, d, q = (params[key] for key in
                         ("alpha", "beta", "gamma", "delta", "q"))
        return basic_hyp(
            [q ** -n, a * b * q ** (n + 1), q ** -x, g * d * q ** (x + 1)],
            [a * q, b * d * q, g * q], q, q)
    if family == "q_hahn":
        a, b, nn, q = (params[key] for key in ("alpha", "beta", "N", "q"))
        return basic_hyp(
            [q ** -n, a * b * q ** (n + 1), q ** -x],
            [a * q, q ** -nn], q, q)
    if family == "q_krawtchouk":
        c, nn, q = (params[key] for key in ("c", "N", "q"))
        return basic_hyp(
            [q ** -n, q ** -x, -c * q ** (x - nn)],
            [q ** -nn, 0.0], q, q)
    if family == "qtm_krawtchouk":
        p, nn, q = (params[key] for key in ("p", "N", "q"))
        return basic_hyp(
            [q ** -n, q ** -x], [q ** -nn], q, p * q ** (n + 1))
    if family == "aff_krawtchouk":
        p, nn, q = (params[key] for key in ("p", "N", "q"))
        return basic_hyp(
            [q ** -n, 0.0, q ** -x], [p * q, q ** -nn], q, q)
    if family == "racah":
        a, b, g, d = (params[key] for key in
                      ("alpha", "beta", "gamma", "delta"))
        return hyp_F(
            [-n, n + a + b + 1, -x, x + g + d + 1],
            [a + 1, b + d + 1, g + 1], 1.0)
    if family == "hahn":
        a, b, nn = (params[key] for key in ("alpha", "beta", "N"))
        return hyp_F([-n, n + a + b + 1, -x], [a + 1, -nn], 1.0)
    # krawtchouk
    p, nn = params["p"], params["N"]
    return hyp_F([-n, -x], [-nn], 1.0 / p)


# ---------------------------------------------------------------------------
# one-site duality kernels
# ---------------------------------------------------------------------------

def _require_q(q: float) -> None:
    if q <= 0.0:
        raise DegenerateParameter(f"q must be positive, got {q}")
    if abs(q - 1.0) < CLASSICAL_EPS:
        raise DegenerateParameter(
            "q-dependent kernel evaluated at q = 1; use the hatted kind")


def one_site_duality_sl(kind: str, n: int, x: int, *, rho: float = 0.0,
                        lam: float = 0.0, v: float = 1.0, N: int = 1,
                        q: float = 1.0) -> tuple[float, float]:
    """One-site duality kernel in (sign, log-magnitude) form.

    ``n`` is the occupation variable of the left process, ``x`` of the right
    process.  ``rho`` and ``lam`` are the height values entering the kernel
    (callers pass nested heights, not the bare boundary parameters).
    """
    if kind not in DUALITY_KERNELS:
        raise DegenerateParameter(f"unknown duality kernel {kind!r}")
    q2 = q * q

    if kind == "k":
        _require_q(q)
        if 2 * x > N:
            # reflect to the shorter series: k(n,x;rho) = (-1)^n k(n,N-x;-rho)
            inner = one_site_duality_sl("k", n, N - x, rho=-rho, N=N, q=q)
            return sl_mul((-1.0 if n % 2 else 1.0, 0.0), inner)
        series = basic_hyp(
            [q ** (-2 * n), q ** (-2 * x), -q ** (2 * rho + 2 * x - 2 * N)],
            [q ** (-2 * N), 0.0], q2, q2)
        sign = -1.0 if n % 2 else 1.0
        pref = (sign, (-n * rho + 0.5 * n * (N - 1)) * math.log(q))
        return sl_mul(pref, sl_of(series))

    if kind == "r":
        _require_q(q)
        series = basic_hyp(
            [q ** (-2 * x), -q ** (2 * rho + 2 * x - 2 * N),
             q ** (-2 * n), -q ** (2 * lam + 2 * n - 2 * N)],
            [-q ** (rho + lam - N + 1) / v, -v * q ** (rho + lam - N + 1),
             q ** (-2 * N)], q2, q2)
        coeff = sl_mul(
            sl_ipow(sl_of(v), n),
            sl_qpoch(-v * q ** (rho + lam - N + 1), q2, x),
            sl_qpoch(-q ** (rho + lam - N + 1) / v, q2, n),
            sl_qpoch(v * q ** (2 * n - rho + lam - N + 1), q2, N),
        )
        den = sl_mul(
            sl_qpow(q, n * (n + rho + lam - N)),
            sl_qpoch_den(v * q ** (-2 * x - rho + lam + N + 1), q2, x + n,
                         "(v q^{-2x-rho+lam+N+1}; q^2)_{x+n}"),
        )
        return sl_mul(sl_div(coeff, den), sl_of(series))

    if kind in ("p", "p_prime"):
        _require_q(q)
        series = basic_hyp(
            [q ** (-2 * x), -q ** (2 * rho + 2 * x - 2 * N), q ** (-2 * n)],
            [-v * q ** (rho + lam - N + 1), q ** (-2 * N)], q2, q2)
        if kind == "p":
            coeff = sl_mul(
                sl_ipow(sl_of(v), n),
                sl_qpoch(-v * q ** (rho + lam - N + 1), q2, x),
                sl_qpoch(v * q ** (2 * n - rho + lam - N + 1), q2, N),
            )
            den = sl_mul(
                sl_qpow(q, n * (n + rho + lam - N)),
                sl_qpoch_den(v * q ** (-2 * x - rho + lam + N + 1), q2,
                             x + n,
                             "(v q^{-2x-rho+lam+N+1}; q^2)_{x+n}"),
            )
            return sl_mul(sl_div(coeff, den), sl_of(series))
        coeff = sl_mul(
            sl_ipow(sl_of(v), n),
            sl_qpow(q, -n * (n + rho + lam - N)),
            sl_qpoch(-v * q ** (rho + lam - N + 1), q2, n),
        )
        return sl_mul(coeff, sl_of(series))

    if kind == "k_qtm":
        _require_q(q)
        series = basic_hyp(
            [q ** (-2 * x), q ** (-2 * n)], [q ** (-2 * N)],
            q2, q ** (rho - lam - N + 2 * x + 1) / v)
        return sl_of(series)

    if kind == "k_aff":
        _require_q(q)
        series = basic_hyp(
            [q ** (-2 * x), 0.0, q ** (-2 * n)],
            [v * q ** (rho + lam - N + 1), q ** (-2 * N)], q2, q2)
        coeff = sl_mul(
            sl_ipow(sl_of(-v), n),
            sl_qpoch(v * q ** (rho + lam - N + 1), q2, x),
            sl_qpow(q, -n * (n + rho + lam - N)),
        )
        return sl_mul(coeff, sl_of(series))

    if kind == "r_hat":
        series = hyp_F(
            [-x, x + rho - N, -n, n + lam - N],
            [0.5 * (rho + lam - N - v + 1), 0.5 * (rho + lam - N + v + 1),
             -N], 1.0)
        coeff = sl_mul(
            sl_poch(0.5 * (rho + lam - N + v + 1), x),
            sl_poch(0.5 * (rho + lam - N - v + 1), n),
            sl_poch(n + 0.5 * (lam - rho - N + v + 1), N),
        )
        den = sl_poch_den(-x + 0.5 * (lam - rho + N + v + 1), x + n,
                          "(-x + (lam-rho+N+v+1)/2)_{x+n}")
        return sl_mul(sl_div(coeff, den), sl_of(series))

    if kind == "p_hat":
        series = hyp_F(
            [-x, x + rho - N, -n],
            [0.5 * (rho + lam - N + v + 1), -N], 1.0)
        coeff = sl_mul(
            sl_poch(0.5 * (rho + lam - N + v + 1), x),
            sl_poch(n + 0.5 * (lam - rho - N + 1 + v), N),
        )
        den = sl_poch_den(-x + 0.5 * (lam - rho + N + 1 + v), x + n,
                          "(-x + (lam-rho+N+1+v)/2)_{x+n}")
        return sl_mul(sl_div(coeff, den), sl_of(series))

    # k_hat; the v exponent is pinned by the orthogonality with the
    # omega k_hat sector factor, not free
    if v <= 0.0:
        raise DegenerateParameter(f"k_hat requires v > 0, got {v}")
    series = hyp_F([-n, -x], [-N], 1.0 + v)
    return sl_mul((1.0, -0.5 * n * math.log(v)), sl_of(series))


def one_site_duality(kind: str, n: int, x: int, *, rho: float = 0.0,
                     lam: float = 0.0, v: float = 1.0, N: int = 1,
                     q: float = 1.0) -> float:
    """One-site duality kernel as a float; see one_site_duality_sl."""
    return sl_float(one_site_duality_sl(
        kind, n, x, rho=rho, lam=lam, v=v, N=N, q=q))


# ---------------------------------------------------------------------------
# one-site weight functions
# ---------------------------------------------------------------------------

def site_weight_sl(kind: str, x: int, N: int, rho: float = 0.0,
                   q: float = 1.0) -> tuple[float, float]:
    """One-site weight in (sign, log-magnitude) form.

    Kinds: ``w`` the exclusion-process weight q^{x(x-N)} qbinom_{q^2}(N, x);
    ``W`` the dynamic weight with height parameter rho; ``W_inv`` the
    q <-> 1/q invariant rescaling of W; ``W_hat`` the classical (q = 1)
    dynamic weight.
    """
    if kind not in SITE_WEIGHT_KINDS:
        raise DegenerateParameter(f"unknown site weight {kind!r}")
    if x < 0 or x > N:
        return (0.0, LOG_ZERO)

    if kind == "w":
        if abs(q - 1.0) < CLASSICAL_EPS:
            return sl_of(float(math.comb(N, x)))
        return sl_mul(sl_qpow(q, x * (x - N)),
                      sl_of(q_binomial(N, x, q * q)))

    if kind == "W_hat":
        if abs(rho - N) < DEGENERATE_EPS:
            raise PoleHit("W_hat: rho - N vanishes")
        ratio = (2 * x + rho - N) / (rho - N)
        den1 = sl_poch_den(rho + 1.0, x, "W_hat (rho+1)_x", error=PoleHit)
        den2 = sl_poch_den(-rho, N, "W_hat (-rho)_N", error=PoleHit)
        return sl_mul(sl_of(ratio), sl_div(sl_poch(rho - N, x),
                                           sl_mul(den1, den2)),
                      sl_of(float(math.comb(N, x))))

    # W and W_inv
    if abs(q - 1.0) < CLASSICAL_EPS:
        base = sl_of(float(math.comb(N, x)) * 0.5 ** N)
        if kind == "W":
            return base
        return base  # the rescaling power is q^{...} = 1 at q = 1
    q2 = q * q
    ratio_num = 1.0 + q ** (4 * x + 2 * rho - 2 * N)
    ratio_den = 1.0 + q ** (2 * rho - 2 * N)
    if ratio_den == 0.0:
        raise PoleHit("W: 1 + q^{2 rho - 2N} vanishes")
    den = sl_mul(
        sl_qpoch(-q ** (2 * rho + 2), q2, x),
        sl_qpoch(-q ** (-2 * rho), q2, N),
    )
    if den[0] == 0.0:
        raise PoleHit("W: a q-pochhammer denominator vanishes")
    out = sl_mul(
        sl_of(ratio_num / ratio_den),
        sl_div(sl_qpoch(-q ** (2 * rho - 2 * N), q2, x), den),
        sl_qpow(q, -x * (2 * rho + 1 + x - 2 * N)),
        sl_of(q_binomial(N, x, q2)),
    )
    if kind == "W_inv":
        out = sl_mul(out, sl_qpow(
            q, 2 * x * (x + rho - N) + 0.5 * N * (N - 2 * rho - 1)))
    return out


def site_weight(kind: str, x: int, N: int, rho: float = 0.0,
                q: float = 1.0) -> float:
    """One-site weight as a float; see site_weight_sl."""
    return sl_float(site_weight_sl(kind, x, N, rho, q))


def site_weight_flagged_sl(x: int, N: int, rho: float,
                           q: float) -> tuple[float, float]:
    """The dynamic one-site weight with q^{2 rho} replaced by -q^{2 rho}.

    Used by the continuity checks against W_hat: as q -> 1,
    (1-q^2)^N * this converges to (-1)^x W_hat(x; N, rho).
    """
    if x < 0 or x > N:
        return (0.0, LOG_ZERO)
    _require_q(q)
    q2 = q * q
    ratio_num = 1.0 - q ** (4 * x + 2 * rho - 2 * N)
    ratio_den = 1.0 - q ** (2 * rho - 2 * N)
    if ratio_den == 0.0:
        raise PoleHit("flagged W: 1 - q^{2 rho - 2N} vanishes")
    den = sl_mul(
        sl_qpoch(q ** (2 * rho + 2), q2, x),
        sl_qpoch(q ** (-2 * rho), q2, N),
    )
    if den[0] == 0.0:
        raise PoleHit("flagged W: a q-pochhammer denominator vanishes")
    sign = -1.0 if x % 2 else 1.0
    return sl_mul(
        sl_of(ratio_num / ratio_den),
        sl_div(sl_qpoch(q ** (2 * rho - 2 * N), q2, x), den),
        (sign, -x * (2 * rho + 1 + x - 2 * N) * math.log(q)),
        sl_of(q_binomial(N, x, q2)),
    )


# ---------------------------------------------------------------------------
# flagged / substituted kernels used only by the continuity probes
# ---------------------------------------------------------------------------

def r_flagged_sl(n: int, x: int, *, rho: float, lam: float, v: float, N: int,
                 q: float) -> tuple[float, float]:
    """The top-level kernel r after (v, rho, lam) -> (q^v, flagged, flagged).

    Both q^{2 rho} and q^{2 lam} carry the sign flag (q^{rho+lam} flips sign,
    q^{lam-rho} does not) and the free parameter becomes q^v.  Everything is
    real; as q -> 1, (1-q^2)^{-N} * this converges to (-1)^n r_hat.
    """
    _require_q(q)
    q2 = q * q
    vq = q ** v
    series = basic_hyp(
        [q ** (-2 * x), q ** (2 * rho + 2 * x - 2 * N),
         q ** (-2 * n), q ** (2 * lam + 2 * n - 2 * N)],
        [q ** (rho + lam - N + 1) / vq, vq * q ** (rho + lam - N + 1),
         q ** (-2 * N)], q2, q2)
    sign = -1.0 if n % 2 else 1.0
    coeff = sl_mul(
        (sign, n * v * math.log(q)),
        sl_qpoch(vq * q ** (rho + lam - N + 1), q2, x),
        sl_qpoch(q ** (rho + lam - N + 1) / vq, q2, n),
        sl_qpoch(vq * q ** (2 * n - rho + lam - N + 1), q2, N),
    )
    den = sl_mul(
        sl_qpow(q, n * (n + rho + lam - N)),
        sl_qpoch_den(vq * q ** (-2 * x - rho + lam + N + 1), q2, x + n,
                     "flagged r denominator"),
    )
    return sl_mul(sl_div(coeff, den), sl_of(series))


def p_flagged_sl(n: int, x: int, *, rho: float, lam: float, v: float, N: int,
                 q: float) -> tuple[float, float]:
    """The q-Hahn kernel p after (v, rho) -> (i q^v, flagged rho).

    The imaginary bookkeeping cancels exactly, leaving a real expression;
    as q -> 1, (1-q^2)^{n-N} * this converges to p_hat.
    """
    _require_q(q)
    q2 = q * q
    series = basic_hyp(
        [q ** (-2 * x), q ** (2 * rho + 2 * x - 2 * N), q ** (-2 * n)],
        [q ** (v + rho + lam - N + 1), q ** (-2 * N)], q2, q2)
    coeff = sl_mul(
        sl_qpow(q, v * n),
        sl_qpoch(q ** (v + rho + lam - N + 1), q2, x),
        sl_qpoch(q ** (2 * n + v - rho + lam - N + 1), q2, N),
    )
    den = sl_mul(
        sl_qpow(q, n * (n + rho + lam - N)),
        sl_qpoch_den(q ** (v - 2 * x - rho + lam + N + 1), q2, x + n,
                     "flagged p denominator"),
    )
    return sl_mul(sl_div(coeff, den), sl_of(series))


def k_subbed_sl(n: int, x: int, *, h0: float, v: float, N: int,
                q: float) -> tuple[float, float]:
    """The kernel k with height rho + h0 after substituting q^{2 rho} = v.

    As q -> 1, (-1)^n * this converges to k_hat(n, x; v, N).
    """
    _require_q(q)
    if v <= 0.0:
        raise DegenerateParameter(f"substitution requires v > 0, got {v}")
    if 2 * x > N:
        inner = k_subbed_sl(n, N - x, h0=-h0, v=1.0 / v, N=N, q=q)
        return sl_mul((-1.0 if n % 2 else 1.0, 0.0), inner)
    q2 = q * q
    series = basic_hyp(
        [q ** (-2 * n), q ** (-2 * x), -v * q ** (2 * h0 + 2 * x - 2 * N)],
        [q ** (-2 * N), 0.0], q2, q2)
    sign = -1.0 if n % 2 else 1.0
    pref = (sign,
            -0.5 * n * math.log(v) + (-n * h0 + 0.5 * n * (N - 1)) * math.log(q))
    return sl_mul(pref, sl_of(series))


def omega_flagged_p_sl(x: int, *, rho: float, v: float, total_n: int,
                       q: float, right: bool) -> tuple[float, float]:
    """The omega^p / omega^p_R factors after (v, rho) -> (i q^v, flagged).

    As q -> 1: (1-q^2)^{total_n - 2x} * omega^p(flagged) -> omega-hat^p and
    omega^p_R(flagged) -> omega-hat^p_R (no scaling).
    """
    _require_q(q)
    q2 = q * q
    if right:
        den = sl_qpoch_den(q ** (v + rho - total_n + 1), q2, x,
                           "flagged omega pR denominator")
        return sl_div(sl_qpoch(q ** (v - rho - 2 * x + total_n + 1), q2, x),
                      den)
    sign = -1.0 if x % 2 else 1.0
    den = sl_qpoch_den(q ** (v - rho + 2 * x - total_n + 1), q2, total_n - x,
                       "flagged omega p denominator")
    return sl_div(
        sl_mul((sign, -2 * v * x * math.log(q)),
               sl_qpow(q, x * (2 * x - 1)),
               sl_qpoch(q ** (v + rho - total_n + 1), q2, x)),
        den)


# ---------------------------------------------------------------------------
# recurrence coefficients of the kernel k in its x variable
# ---------------------------------------------------------------------------

def recurrence_coeff(kind: str, x: int, rho: float, N: int, q: float) -> float:
    """Coefficients of the three-term x-recurrences of the kernel k.

    The three recurrence families expand q^{-2n} k(n, x; rho) over
    neighbouring x at height rho (kinds a_minus1, a_0, a_1), at height
    rho + 2 (kinds a_{-2,2}, a_{-1,2}, a_{0,2}), and at height rho - 2
    (kinds a_{0,-2}, a_{1,-2}, a_{2,-2}).
    """
    if kind not in RECURRENCE_KINDS:
        raise DegenerateParameter(f"unknown recurrence coefficient {kind!r}")
    _require_q(q)

    if kind == "a_minus1":
        return (-q ** (4 * x + 2 * rho - 4 * N - 2)
                * (1 - q ** (2 * x)) * (1 + q ** (2 * x + 2 * rho))
                / ((1 + q ** (4 * x + 2 * rho - 2 * N - 2))
                   * (1 + q ** (4 * x + 2 * rho - 2 * N))))
    if kind == "a_1":
        return ((1 - q ** (2 * x - 2 * N)) * (1 + q ** (2 * x + 2 * rho - 2 * N))
                / ((1 + q ** (4 * x + 2 * rho - 2 * N))
                   * (1 + q ** (4 * x + 2 * rho - 2 * N + 2))))
    if kind == "a_0":
        return 1.0 - recurrence_coeff("a_minus1", x, rho, N, q) \
            - recurrence_coeff("a_1", x, rho, N, q)
    if kind == "a_{-2,2}":
        return ((1 - q ** (-2 * x)) * (1 - q ** (-2 * x + 2))
                / ((1 + q ** (2 * N - 2 * rho - 4 * x))
                   * (1 + q ** (2 * N - 2 * rho - 4 * x + 2))))
    if kind == "a_{-1,2}":
        return ((1 + q ** -2) * (1 - q ** (-2 * x))
                * (1 + q ** (2 * rho + 2 * x - 2 * N))
                / ((1 + q ** (2 * N - 2 * rho - 4 * x - 2))
                   * (1 + q ** (4 * x + 2 * rho - 2 * N - 2))))
    if kind == "a_{0,2}":
        return ((1 + q ** (2 * rho + 2 * x - 2 * N))
                * (1 + q ** (2 * rho + 2 * x - 2 * N + 2))
                / ((1 + q ** (2 * rho + 4 * x - 2 * N))
                   * (1 + q ** (2 * rho + 4 * x - 2 * N + 2))))
    if kind == "a_{0,-2}":
        return ((1 + q ** (-2 * rho - 2 * x)) * (1 + q ** (-2 * rho - 2 * x + 2))
                / ((1 + q ** (2 * N - 2 * rho - 4 * x))
                   * (1 + q ** (2 * N - 2 * rho - 4 * x + 2))))
    if kind == "a_{1,-2}":
        return ((1 + q ** -2) * (1 - q ** (2 * x - 2 * N))
                * (1 + q ** (-2 * rho - 2 * x))
                / ((1 + q ** (2 * rho + 4 * x - 2 * N - 2))
                   * (1 + q ** (2 * N - 2 * rho - 4 * x - 2))))
    # a_{2,-2}
    return ((1 - q ** (2 * x - 2 * N)) * (1 - q ** (2 * x - 2 * N + 2))
            / ((1 + q ** (2 * rho + 4 * x - 2 * N))
               * (1 + q ** (2 * rho + 4 * x - 2 * N + 2))))


# ---------------------------------------------------------------------------
# omega factors for the degenerate orthogonality relations
# ---------------------------------------------------------------------------

def omega(kind: str, x: int, *, rho: float = 0.0, v: float = 1.0,
          total_n: int = 0, q: float = 1.0) -> float:
    """Sector factor multiplying the reversible measures in the degenerate
    orthogonality relations.

    ``x`` is the total particle number of the configuration; ``total_n`` is
    the total capacity.  Kinds ending in R pair with the right-process
    measure, the others with the left-process measure; the _hat kinds are
    the classical (q = 1) factors.
    """
    if kind not in OMEGA_KINDS:
        raise DegenerateParameter(f"unknown omega factor {kind!r}")
    b = total_n
    if kind in ("p", "pR", "qtm", "qtmR", "aff", "affR"):
        _require_q(q)
        q2 = q * q
    if kind == "p":
        den = sl_qpoch_den(v * q ** (-rho + 2 * x - b + 1), q2, b - x,
                           "omega p", error=PoleHit)
        return sl_float(sl_div(
            sl_mul(sl_of(v ** (-2 * x)), sl_qpow(q, x * (2 * x - 1)),
                   sl_qpoch(-v * q ** (rho - b + 1), q2, x)),
            den))
    if kind == "pR":
        den = sl_qpoch_den(-v * q ** (rho - b + 1), q2, x,
                           "omega pR", error=PoleHit)
        return sl_float(sl_div(
            sl_qpoch(v * q ** (-rho - 2 * x + b + 1), q2, x), den))
    if kind == "qtm":
        # the positive v power is pinned by the quantum Krawtchouk Gram
        return sl_float(sl_mul(
            sl_of(v ** x), sl_qpow(q, x * (x + b - 1)),
            sl_qpoch(v * q ** (2 * x - b + 1), q2, b - x)))
    if kind == "qtmR":
        den = sl_qpoch_den(v * q ** (1 + b - 2 * x), q2, x,
                           "omega qtmR", error=PoleHit)
        return sl_float(sl_div(
            sl_mul(sl_of(v ** x), sl_qpow(q, x * (b - x + 1))), den))
    if kind == "aff":
        return sl_float(sl_mul(
            sl_of(v ** (b - 3 * x)), sl_qpow(q, x * (b + x - 1)),
            sl_qpoch(v * q ** (1 - b), q2, x)))
    if kind == "affR":
        # the v^{-x} factor is pinned by the affine Krawtchouk Gram
        den = sl_qpoch_den(v * q ** (1 - b), q2, x,
                           "omega affR", error=PoleHit)
        return sl_float(sl_div(
            sl_mul(sl_of(v ** -x),
                   sl_qpow(q, b * (1 - b) + x * (b - x - 1))), den))
    if kind == "p_hat":
        den = sl_poch_den(x + 0.5 * (v - rho - b + 1), b - x,
                          "omega p_hat", error=PoleHit)
        sign = -1.0 if x % 2 else 1.0
        return sl_float(sl_div(
            sl_mul(sl_of(sign), sl_poch(0.5 * (rho - b + v + 1), x)), den))
    if kind == "pR_hat":
        den = sl_poch_den(0.5 * (v + rho - b + 1), x,
                          "omega pR_hat", error=PoleHit)
        return sl_float(sl_div(sl_poch(-x + 0.5 * (v - rho + b + 1), x), den))
    # k_hat
    if v <= 0.0:
        raise DegenerateParameter(f"omega k_hat requires v > 0, got {v}")
    return v ** (-x) / (1.0 + 1.0 / v) ** b
