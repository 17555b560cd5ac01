"""Matrix realization of the quantum sl2 algebra behind the generators.

The free-process generator is, up to an additive constant, a sum of
coproducts of the Casimir element in a product of finite-dimensional
*-representations, and the duality kernels are eigenfunctions of twisted
primitive elements in the same realization.  This module builds the dense
matrices of that realization and exposes the residual of every algebraic
identity the construction rests on, so the probabilistic и algebraic
routes to the same operator can be compared numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dualities import DualityEvaluator, duality_eval
from .errors import DegenerateParameter, IndexOutOfRange
from .lattice import Configuration, enumerate_states, height
from .processes import ProcessSpec, build_generator
from .qspecial import q_bracket, site_weight

GENERATOR_NAMES = ("K", "K_inv", "E", "F")


def site_twist(k: int, capacities: tuple[int, ...]) -> float:
    """Ladder twist exponent -N_k/2 + sum_{j<=k} N_j of site k."""
    if not capacities or any(c < 1 for c in capacities):
        raise IndexOutOfRange(f"bad capacities {capacities!r}")
    if not 1 <= k <= len(capacities):
        raise IndexOutOfRange(f"site {k} outside 1..{len(capacities)}")
    return -0.5 * capacities[k - 1] + float(sum(capacities[:k]))


@dataclass(frozen=True)
class RepMatrices:
    """Dense one-site matrices of the four algebra generators.

    Acting on vectors of function values (f(0), ..., f(N)): K and K_inv
    are diagonal, E lowers the occupation argument, F raises it.  E and F
    carry the site-dependent twist q^{+-u_k} so that neighbouring sites
    compose into the particle-exchange generator without a ground-state
    transformation.
    """

    site: int
    capacity: int
    q: float
    K: np.ndarray
    K_inv: np.ndarray
    E: np.ndarray
    F: np.ndarray

    @property
    def dim(self) -> int:
        return self.capacity + 1


def rep_matrices(k: int, capacities: tuple[int, ...],
                 q: float) -> RepMatrices:
    """One-site realization on the (N_k+1)-dimensional value space."""
    if q <= 0.0 or q == 1.0:
        raise DegenerateParameter(f"need q > 0, q != 1, got {q}")
    u_k = site_twist(k, capacities)
    cap = capacities[k - 1]
    n = np.arange(cap + 1, dtype=float)
    K = np.diag(q ** (n - 0.5 * cap))
    K_inv = np.diag(q ** (0.5 * cap - n))
    E = np.zeros((cap + 1, cap + 1))
    F = np.zeros((cap + 1, cap + 1))
    for m in range(1, cap + 1):
        E[m, m - 1] = q ** u_k * q_bracket(m, q)
    for m in range(cap):
        F[m, m + 1] = q ** (-u_k) * q_bracket(cap - m, q)
    return RepMatrices(k, cap, q, K, K_inv, E, F)


def relations_residual(rep: RepMatrices) -> float:
    """Largest defect of the four defining relations in this realization."""
    q = rep.q
    eye = np.eye(rep.dim)
    devs = [
        rep.K @ rep.K_inv - eye,
        rep.K_inv @ rep.K - eye,
        rep.K @ rep.E - q * rep.E @ rep.K,
        rep.K @ rep.F - rep.F @ rep.K / q,
        rep.E @ rep.F - rep.F @ rep.E
        - (rep.K @ rep.K - rep.K_inv @ rep.K_inv) / (q - 1.0 / q),
    ]
    return max(float(np.max(np.abs(d))) for d in devs)


def casimir(rep: RepMatrices, route: str = "ef") -> np.ndarray:
    """The central element; both orderings must give the same matrix."""
    q = rep.q
    denom = (1.0 / q - q) ** 2
    K2 = rep.K @ rep.K
    K2_inv = rep.K_inv @ rep.K_inv
    eye = np.eye(rep.dim)
    if route == "ef":
        return (K2 / q + q * K2_inv - 2.0 * eye) / denom + rep.E @ rep.F
    if route == "fe":
        return (K2_inv / q + q * K2 - 2.0 * eye) / denom + rep.F @ rep.E
    raise DegenerateParameter(f"unknown casimir route {route!r}")


def twisted_primitive(rep: RepMatrices, rho: float) -> np.ndarray:
    """q^{1/2} EK + q^{-1/2} FK - [rho]_q (K^2 - 1)."""
    q = rep.q
    eye = np.eye(rep.dim)
    return (math_sqrt(q) * rep.E @ rep.K + rep.F @ rep.K / math_sqrt(q)
            - q_bracket(rho, q) * (rep.K @ rep.K - eye))


def math_sqrt(x: float) -> float:
    return float(np.sqrt(x))


def coproduct(left: RepMatrices, right: RepMatrices,
              name: str) -> np.ndarray:
    """Two-site image of one generator under the comultiplication."""
    if name == "K":
        return np.kron(left.K, right.K)
    if name == "K_inv":
        return np.kron(left.K_inv, right.K_inv)
    if name == "E":
        return np.kron(left.K, right.E) + np.kron(left.E, right.K_inv)
    if name == "F":
        return np.kron(left.K, right.F) + np.kron(left.F, right.K_inv)
    raise DegenerateParameter(f"unknown generator {name!r}")


def coproduct_casimir(left: RepMatrices, right: RepMatrices) -> np.ndarray:
    """Expanded two-site image of the central element."""
    q = left.q
    denom = (1.0 / q - q) ** 2
    K2_l, K2_r = left.K @ left.K, right.K @ right.K
    K2i_l = left.K_inv @ left.K_inv
    K2i_r = right.K_inv @ right.K_inv
    eye = np.eye(left.dim * right.dim)
    out = (q * np.kron(K2_l, K2_r) + np.kron(K2i_l, K2i_r) / q
           - 2.0 * eye) / denom
    out += np.kron(K2_l, right.F @ right.E)
    out += np.kron(left.K @ left.E, right.F @ right.K_inv)
    out += np.kron(left.F @ left.K, right.K_inv @ right.E)
    out += np.kron(left.F @ left.E, K2i_r)
    return out


def coproduct_twisted_primitive(left: RepMatrices, right: RepMatrices,
                                rho: float) -> np.ndarray:
    """K^2 (x) Y_rho + Y_rho (x) 1 on two sites."""
    eye_r = np.eye(right.dim)
    return (np.kron(left.K @ left.K, twisted_primitive(right, rho))
            + np.kron(twisted_primitive(left, rho), eye_r))


def star_structure_residual(rep: RepMatrices) -> float:
    """Defect of E and F being mutual adjoints in the weighted inner
    product with one-site weight w(n) q^{-2 n u_k}."""
    u_k = site_twist(rep.site, (rep.capacity,) * rep.site) \
        if False else None
    raise NotImplementedError


def _rep_weights(rep: RepMatrices, capacities: tuple[int, ...]) -> np.ndarray:
    u_k = site_twist(rep.site, capacities)
    return np.array([
        site_weight("w", m, rep.capacity, q=rep.q) * rep.q ** (-2 * m * u_k)
        for m in range(rep.dim)
    ])


def adjoint_residual(rep: RepMatrices,
                     capacities: tuple[int, ...]) -> float:
    """Defect of E and F being mutual adjoints in the inner product
    weighted by w(n; N_k; q) q^{-2 n u_k}; K and K_inv must be
    self-adjoint there as well."""
    w = _rep_weights(rep, capacities)
    winv = np.diag(1.0 / w)
    wdiag = np.diag(w)
    devs = [
        winv @ rep.E.T @ wdiag - rep.F,
        winv @ rep.F.T @ wdiag - rep.E,
        winv @ rep.K.T @ wdiag - rep.K,
    ]
    return max(float(np.max(np.abs(d))) for d in devs)


def casimir_generator_residual(k: int, capacities: tuple[int, ...],
                               q: float) -> float:
    """Defect of the two-site Casimir image against the particle-exchange
    generator block plus its additive constant."""
    if not 1 <= k <= len(capacities) - 1:
        raise IndexOutOfRange(
            f"need adjacent sites, got k={k} on {len(capacities)} sites")
    left = rep_matrices(k, capacities, q)
    right = rep_matrices(k + 1, capacities, q)
    pair = (capacities[k - 1], capacities[k])
    block = build_generator(ProcessSpec("asep", pair, q=q),
                            enumerate_states(pair)).to_dense()
    const = q_bracket(0.5 * (pair[0] + pair[1] + 1), q) ** 2
    want = block + const * np.eye(block.shape[0])
    return float(np.max(np.abs(coproduct_casimir(left, right) - want)))


def summed_casimir_generator_residual(capacities: tuple[int, ...],
                                      q: float) -> float:
    """Defect of the full-lattice generator against the sum of shifted
    two-site Casimir images over all adjacent pairs."""
    m = len(capacities)
    if m < 2:
        raise IndexOutOfRange("need at least two sites")
    dims = [c + 1 for c in capacities]
    total = np.zeros((int(np.prod(dims)), int(np.prod(dims))))
    for k in range(1, m):
        left = rep_matrices(k, capacities, q)
        right = rep_matrices(k + 1, capacities, q)
        const = q_bracket(0.5 * (capacities[k - 1] + capacities[k] + 1),
                          q) ** 2
        block = coproduct_casimir(left, right)
        block = block - const * np.eye(block.shape[0])
        before = int(np.prod(dims[:k - 1])) if k > 1 else 1
        after = int(np.prod(dims[k + 1:])) if k + 1 < m else 1
        total += np.kron(np.kron(np.eye(before), block), np.eye(after))
    want = build_generator(ProcessSpec("asep", capacities, q=q),
                           enumerate_states(capacities)).to_dense()
    return float(np.max(np.abs(total - want)))


def y_eigen_residual(capacities: tuple[int, ...], q: float, rho: float,
                     xi: Configuration) -> float:
    """Defect of the nested kernel column at xi being an eigenvector of
    the (coproduct of the) twisted primitive element, with eigenvalue
    [rho]_q - [rho + sum_j (2 xi_j - N_j)]_q."""
    m = len(capacities)
    if m not in (1, 2):
        raise IndexOutOfRange("realized on one or two sites only")
    if xi.capacities != tuple(capacities):
        raise IndexOutOfRange(
            f"configuration lives on {xi.capacities}, not {capacities}")
    if m == 1:
        op = twisted_primitive(rep_matrices(1, capacities, q), rho)
    else:
        op = coproduct_twisted_primitive(rep_matrices(1, capacities, q),
                                         rep_matrices(2, capacities, q),
                                         rho)
    d = DualityEvaluator("K_R", tuple(capacities), q=q, rho=rho)
    vec = np.array([duality_eval(d, eta, xi)
                    for eta in enumerate_states(tuple(capacities))])
    eigenvalue = q_bracket(rho, q) - q_bracket(height("plus", xi, 1, rho), q)
    return float(np.max(np.abs(op @ vec - eigenvalue * vec)))


def casimir_decomposition_residual(capacities: tuple[int, ...], q: float,
                                   rho: float) -> float:
    """Defect of rebuilding the central element from the twisted primitive
    element and the inverse square of the group-like generator:

        f(Y - [rho], K^{-2}) / ((q + 1/q)(q - 1/q)^2)
        + (q + 1/q) K^{-2} / (q - 1/q)^2
        + [rho]_q (Y - [rho]) / (q + 1/q) - 2 / (q - 1/q)^2

    with f(A, B) = (q^2 + q^{-2}) ABA - A^2 B - B A^2, on one site or
    through the comultiplication on two.
    """
    m = len(capacities)
    if m not in (1, 2):
        raise IndexOutOfRange("realized on one or two sites only")
    if m == 1:
        rep = rep_matrices(1, capacities, q)
        omega = casimir(rep)
        y = twisted_primitive(rep, rho)
        k2_inv = rep.K_inv @ rep.K_inv
    else:
        left = rep_matrices(1, capacities, q)
        right = rep_matrices(2, capacities, q)
        omega = coproduct_casimir(left, right)
        y = coproduct_twisted_primitive(left, right, rho)
        k2_inv = np.kron(left.K_inv @ left.K_inv,
                         right.K_inv @ right.K_inv)
    eye = np.eye(omega.shape[0])
    br = q_bracket(rho, q)
    a = y - br * eye
    f = (q * q + 1.0 / (q * q)) * a @ k2_inv @ a \
        - a @ a @ k2_inv - k2_inv @ a @ a
    plus = q + 1.0 / q
    minus_sq = (q - 1.0 / q) ** 2
    rebuilt = (f / (plus * minus_sq) + plus * k2_inv / minus_sq
               + br * a / plus - 2.0 * eye / minus_sq)
    return float(np.max(np.abs(omega - rebuilt)))
