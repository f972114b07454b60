"""Shifted Legendre basis on [0, 1] and the moment coupling coefficients.

The basis functions are

    phi_j(zeta) = 1/j! d^j/dzeta^j (zeta - zeta^2)^j

so that phi_j(0) = 1 and int_0^1 phi_m phi_n = delta_mn / (2n + 1).
Equivalently phi_j(zeta) = P_j(1 - 2 zeta) with P_j the Legendre polynomial,
which is how values are computed: the three-term recurrence avoids the
cancellation that monomial coefficients suffer beyond order ~5.
All three coefficient families are integrals of polynomial products and are
evaluated with a Gauss-Legendre rule that is exact for their degree.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable

import numpy as np

__all__ = [
    "CouplingTables",
    "build_coupling_tables",
    "eval_dphi",
    "eval_phi",
    "gauss_unit",
    "phi_coeffs",
    "project_velocity_profile",
    "reconstruct_profile",
]


@lru_cache(maxsize=None)
def phi_coeffs(j: int) -> np.ndarray:
    """Monomial coefficients (lowest degree first) of ``phi_j``."""
    if j < 0:
        raise ValueError(f"basis index must be non-negative, got {j}")
    k = np.arange(j + 1)
    coeffs = np.array([(-1) ** kk * comb(j, kk) * comb(j + kk, kk) for kk in k], dtype=float)
    coeffs.flags.writeable = False
    return coeffs


def _check_zeta(zeta) -> np.ndarray:
    z = np.asarray(zeta, dtype=float)
    if np.any(z < 0.0) or np.any(z > 1.0) or np.any(~np.isfinite(z)):
        raise ValueError("zeta must lie in [0, 1]")
    return z


def _basis_values(n: int, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """phi_j, phi_j' and int_0^zeta phi_j for j = 0..n at points ``z``.

    Uses P_{j+1} = ((2j+1) x P_j - j P_{j-1}) / (j+1) with x = 1 - 2 zeta,
    P'_{j+1} = P'_{j-1} + (2j+1) P_j and
    int_x^1 P_j = (P_{j-1} - P_{j+1}) / (2j+1).
    """
    x = 1.0 - 2.0 * np.asarray(z, dtype=float)
    P = np.empty((n + 2,) + x.shape)
    dP = np.zeros_like(P)
    P[0] = 1.0
    P[1] = x
    dP[1] = 1.0
    for j in range(1, n + 1):
        P[j + 1] = ((2 * j + 1) * x * P[j] - j * P[j - 1]) / (j + 1)
        dP[j + 1] = dP[j - 1] + (2 * j + 1) * P[j]
    integ = np.empty((n + 1,) + x.shape)
    integ[0] = 0.5 * (1.0 - x)
    for j in range(1, n + 1):
        integ[j] = 0.5 * (P[j - 1] - P[j + 1]) / (2 * j + 1)
    return P[: n + 1], -2.0 * dP[: n + 1], integ


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def eval_phi(j: int, zeta):
    """Evaluate ``phi_j`` at ``zeta`` (scalar or array)."""
    if j < 0:
        raise ValueError(f"basis index must be non-negative, got {j}")
    z = _check_zeta(zeta)
    return _scalar(_basis_values(j, z)[0][j])


def eval_dphi(j: int, zeta):
    """Evaluate the derivative of ``phi_j`` at ``zeta``."""
    if j < 0:
        raise ValueError(f"basis index must be non-negative, got {j}")
    z = _check_zeta(zeta)
    return _scalar(_basis_values(j, z)[1][j])


def gauss_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(max(n, 1))
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class CouplingTables:
    """Coupling coefficients for moment orders up to ``order``.

    Arrays are indexed from 0 so that ``A[i, j, k]`` is the coefficient with
    the same indices; row/column 0 is kept (it corresponds to phi_0 = 1) but
    the moment equations only use indices 1..order.

    A[i, j, k] = (2i+1) int phi_i phi_j phi_k
    B[i, j, k] = (2i+1) int phi_i' (int_0^zeta phi_j) phi_k
    C[i, j]    = int phi_i' phi_j'
    """

    order: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray


@lru_cache(maxsize=32)
def build_coupling_tables(order: int) -> CouplingTables:
    """Tabulate A, B and C for all indices 0..order.

    Results are cached and the arrays are read-only, so the same instance can
    be shared freely.
    """
    if order < 0:
        raise ValueError(f"order must be non-negative, got {order}")
    n_nodes = -(-(3 * order + 2) // 2)
    z, w = gauss_unit(n_nodes)

    n = order + 1
    phi, dphi, iphi = _basis_values(order, z)
    scale = (2.0 * np.arange(n) + 1.0)[:, None, None]
    A = scale * np.einsum("iq,jq,kq,q->ijk", phi, phi, phi, w)
    B = scale * np.einsum("iq,jq,kq,q->ijk", dphi, iphi, phi, w)
    C = np.einsum("iq,jq,q->ij", dphi, dphi, w)

    # the rule is exact, so anything at rounding level is a structural zero
    for arr in (A, B, C):
        arr[np.abs(arr) < 1e-13] = 0.0
        arr.flags.writeable = False
    return CouplingTables(order=order, A=A, B=B, C=C)


def project_velocity_profile(
    f: Callable[[np.ndarray], np.ndarray], order: int, n_nodes: int | None = None
) -> tuple[float, np.ndarray]:
    """Split a vertical profile into its mean and Legendre coefficients.

    Parameters
    ----------
    f : callable
        Profile on [0, 1]; must accept an array of zeta values.
    order : int
        Number of coefficients to return.
    n_nodes : int, optional
        Quadrature nodes. The default is exact for polynomial profiles of
        degree up to ``order + 1`` and is raised to at least 16 so smooth
        non-polynomial profiles are also well resolved.

    Returns
    -------
    mean : float
    coeffs : ndarray of shape (order,)
        ``coeffs[j-1] = (2j+1) int (f - mean) phi_j``.
    """
    if order < 0:
        raise ValueError(f"order must be non-negative, got {order}")
    if n_nodes is None:
        n_nodes = max(order + 1, 16)
    z, w = gauss_unit(n_nodes)
    fz = np.broadcast_to(np.asarray(f(z), dtype=float), z.shape)
    mean = float(w @ fz)
    phi = _basis_values(order, z)[0]
    coeffs = (2.0 * np.arange(1, order + 1) + 1.0) * (phi[1:] @ (w * (fz - mean)))
    return mean, coeffs


def reconstruct_profile(mean: float, coeffs, zeta):
    """Evaluate ``mean + sum_j coeffs[j-1] phi_j(zeta)``."""
    z = _check_zeta(zeta)
    c = np.asarray(coeffs, dtype=float)
    phi = _basis_values(c.size, z)[0]
    out = float(mean) + np.tensordot(c, phi[1:], axes=1)
    return _scalar(out)
