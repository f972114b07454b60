"""Axisymmetric moment system: fluxes, system matrices and source terms.

Conservative state layout (length ``m = 3 + n_r + n_theta``)::

    (h, h*v_r, h*alpha_1 .. h*alpha_nr, h*v_theta, h*gamma_1 .. h*gamma_nt)

Every function accepts a single state of shape ``(m,)`` or a batch of shape
``(..., m)`` and returns arrays with the same leading dimensions.  The bottom
is flat and gravity points along ``e_z``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .basis import CouplingTables, build_coupling_tables

__all__ = [
    "ClosedFormUnavailable",
    "Layout",
    "ModelConfig",
    "Primitives",
    "Variant",
    "flux_jacobian",
    "flux_radial",
    "forcing",
    "haswme_closed_form",
    "nonconservative_matrix",
    "primitives",
    "source_friction",
    "state_from_primitives",
    "system_matrix",
    "truncate",
]


class Variant(str, enum.Enum):
    ASWME = "aswme"
    HASWME = "haswme"


class ClosedFormUnavailable(ValueError):
    """Raised when no analytic matrix exists for the requested orders."""


@dataclass(frozen=True)
class ModelConfig:
    """Model orders and physical parameters."""

    n_r: int = 0
    n_theta: int = 0
    g: float = 1.0
    nu: float = 0.0
    slip: float = 1.0
    variant: Variant = Variant.ASWME

    def __post_init__(self):
        if self.n_r < 0 or self.n_theta < 0:
            raise ValueError("expansion orders must be non-negative")
        if not self.g > 0:
            raise ValueError("gravity must be positive")
        if self.nu < 0:
            raise ValueError("viscosity must be non-negative")
        if not self.slip > 0:
            raise ValueError("slip length must be positive")
        object.__setattr__(self, "variant", Variant(self.variant))

    @property
    def size(self) -> int:
        return 3 + self.n_r + self.n_theta

    @property
    def layout(self) -> "Layout":
        return Layout(self.n_r, self.n_theta)

    @property
    def tables(self) -> CouplingTables:
        return build_coupling_tables(max(self.n_r, self.n_theta))

    def with_(self, **changes) -> "ModelConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class Layout:
    """Index bookkeeping for the conservative vector."""

    n_r: int
    n_theta: int

    @property
    def size(self) -> int:
        return 3 + self.n_r + self.n_theta

    h = 0
    vr = 1

    @property
    def alpha(self) -> slice:
        return slice(2, 2 + self.n_r)

    @property
    def vt(self) -> int:
        return 2 + self.n_r

    @property
    def gamma(self) -> slice:
        return slice(3 + self.n_r, 3 + self.n_r + self.n_theta)

    def names(self) -> list[str]:
        return (
            ["h", "v_rm"]
            + [f"alpha_{i}" for i in range(1, self.n_r + 1)]
            + ["v_thm"]
            + [f"gamma_{i}" for i in range(1, self.n_theta + 1)]
        )


@dataclass
class Primitives:
    """Primitive fields; alpha/gamma are zero-padded to a common length."""

    h: np.ndarray
    vr: np.ndarray
    alpha: np.ndarray
    vt: np.ndarray
    gamma: np.ndarray


def _as_state(state, cfg: ModelConfig) -> np.ndarray:
    U = np.asarray(state, dtype=float)
    if U.shape[-1] != cfg.size:
        raise ValueError(f"state has {U.shape[-1]} components, expected {cfg.size}")
    if np.any(~(U[..., 0] > 0)):
        raise ValueError("water height must be positive")
    return U


def primitives(state, cfg: ModelConfig) -> Primitives:
    """Convert conservative states to primitives (moments padded with zeros)."""
    U = _as_state(state, cfg)
    lay = cfg.layout
    M = max(cfg.n_r, cfg.n_theta)
    h = U[..., 0]
    alpha = np.zeros(U.shape[:-1] + (M,))
    gamma = np.zeros(U.shape[:-1] + (M,))
    alpha[..., : cfg.n_r] = U[..., lay.alpha] / h[..., None]
    gamma[..., : cfg.n_theta] = U[..., lay.gamma] / h[..., None]
    return Primitives(h, U[..., 1] / h, alpha, U[..., lay.vt] / h, gamma)


def state_from_primitives(cfg: ModelConfig, h, vr=0.0, alpha=(), vt=0.0, gamma=()) -> np.ndarray:
    """Build a conservative state; missing moments default to zero."""
    h = np.asarray(h, dtype=float)
    shape = np.broadcast_shapes(h.shape, np.shape(vr), np.shape(vt))
    U = np.zeros(shape + (cfg.size,))
    lay = cfg.layout
    U[..., 0] = h
    U[..., 1] = h * vr
    U[..., lay.vt] = h * vt
    a = np.asarray(alpha, dtype=float)
    c = np.asarray(gamma, dtype=float)
    if a.shape[-1:] and a.shape[-1] > cfg.n_r or c.shape[-1:] and c.shape[-1] > cfg.n_theta:
        raise ValueError("more moments given than the model order allows")
    if a.size:
        U[..., 2 : 2 + a.shape[-1]] = h[..., None] * a
    if c.size:
        start = lay.gamma.start
        U[..., start : start + c.shape[-1]] = h[..., None] * c
    return U


def truncate(state, cfg: ModelConfig) -> np.ndarray:
    """Zero every moment above the first (the hyperbolic regularization)."""
    U = np.array(state, dtype=float, copy=True)
    lay = cfg.layout
    U[..., 3 : 2 + cfg.n_r] = 0.0
    U[..., lay.gamma.start + 1 : lay.gamma.stop] = 0.0
    return U


def _sub_tables(cfg: ModelConfig):
    M = max(cfg.n_r, cfg.n_theta)
    t = cfg.tables
    idx = slice(1, M + 1)
    inv = 1.0 / (2.0 * np.arange(1, M + 1) + 1.0)
    return t.A[idx, idx, idx], t.B[idx, idx, idx], t.C[idx, idx], inv


def flux_radial(state, cfg: ModelConfig) -> np.ndarray:
    """Conservative radial flux ``F_r``."""
    p = primitives(state, cfg)
    A, _, _, inv = _sub_tables(cfg)
    lay = cfg.layout
    h, v, a, w, c = p.h, p.vr, p.alpha, p.vt, p.gamma
    F = np.empty(np.shape(h) + (cfg.size,))
    F[..., 0] = h * v
    F[..., 1] = h * (v**2 + np.sum(a**2 * inv, axis=-1)) + 0.5 * cfg.g * h**2
    Aaa = np.einsum("ijk,...j,...k->...i", A, a, a)
    Aac = np.einsum("ijk,...j,...k->...i", A, a, c)
    F[..., lay.alpha] = (h[..., None] * (2.0 * v[..., None] * a + Aaa))[..., : cfg.n_r]
    F[..., lay.vt] = h * (v * w + np.sum(a * c * inv, axis=-1))
    Fg = h[..., None] * (v[..., None] * c + w[..., None] * a + Aac)
    F[..., lay.gamma] = Fg[..., : cfg.n_theta]
    return F


def _primitive_jacobian(p: Primitives, cfg: ModelConfig) -> np.ndarray:
    """dF/dW with W = (h, v, alpha, v_theta, gamma) in the state layout."""
    A, _, _, inv = _sub_tables(cfg)
    lay = cfg.layout
    nr, nt = cfg.n_r, cfg.n_theta
    h, v, a, w, c = p.h, p.vr, p.alpha, p.vt, p.gamma
    hh = h[..., None]
    J = np.zeros(np.shape(h) + (cfg.size, cfg.size))
    ia, ig, it = lay.alpha, lay.gamma, lay.vt

    J[..., 0, 0] = v
    J[..., 0, 1] = h

    J[..., 1, 0] = v**2 + np.sum(a**2 * inv, axis=-1) + cfg.g * h
    J[..., 1, 1] = 2.0 * h * v
    J[..., 1, ia] = (2.0 * hh * a * inv)[..., :nr]

    Aaa = np.einsum("ijk,...j,...k->...i", A, a, a)
    Asym = A + np.swapaxes(A, 1, 2)
    J[..., ia, 0] = (2.0 * v[..., None] * a + Aaa)[..., :nr]
    J[..., ia, 1] = (2.0 * hh * a)[..., :nr]
    da = hh[..., None] * np.einsum("ilk,...k->...il", Asym, a)
    da = da + 2.0 * (h * v)[..., None, None] * np.eye(a.shape[-1])
    J[..., ia, ia] = da[..., :nr, :nr]

    J[..., it, 0] = v * w + np.sum(a * c * inv, axis=-1)
    J[..., it, 1] = h * w
    J[..., it, ia] = (hh * c * inv)[..., :nr]
    J[..., it, it] = h * v
    J[..., it, ig] = (hh * a * inv)[..., :nt]

    Aac = np.einsum("ijk,...j,...k->...i", A, a, c)
    J[..., ig, 0] = (v[..., None] * c + w[..., None] * a + Aac)[..., :nt]
    J[..., ig, 1] = (hh * c)[..., :nt]
    eye = np.eye(a.shape[-1])
    dga = hh[..., None] * (w[..., None, None] * eye + np.einsum("ilk,...k->...il", A, c))
    J[..., ig, ia] = dga[..., :nt, :nr]
    J[..., ig, it] = (hh * a)[..., :nt]
    dgc = hh[..., None] * (v[..., None, None] * eye + np.einsum("ijl,...j->...il", A, a))
    J[..., ig, ig] = dgc[..., :nt, :nt]
    return J


def flux_jacobian(state, cfg: ModelConfig) -> np.ndarray:
    """Analytic Jacobian of :func:`flux_radial` in conservative variables."""
    p = primitives(state, cfg)
    U = np.asarray(state, dtype=float)
    dFdW = _primitive_jacobian(p, cfg)
    # W_0 = U_0, W_k = U_k / U_0: column 0 picks up -W_k/h, others scale by 1/h
    W = U / p.h[..., None]
    J = dFdW / p.h[..., None, None]
    J[..., :, 0] = dFdW[..., :, 0] - np.einsum("...ik,...k->...i", dFdW[..., :, 1:], W[..., 1:]) / p.h[..., None]
    return J


def nonconservative_matrix(state, cfg: ModelConfig) -> np.ndarray:
    """Matrix ``Q_r`` of the non-conservative product ``Q_r dV/dr``."""
    p = primitives(state, cfg)
    _, B, _, _ = _sub_tables(cfg)
    lay = cfg.layout
    nr, nt = cfg.n_r, cfg.n_theta
    eye = np.eye(p.alpha.shape[-1])
    Q = np.zeros(np.shape(p.h) + (cfg.size, cfg.size))
    qa = p.vr[..., None, None] * eye - np.einsum("ijk,...k->...ij", B, p.alpha)
    qg = p.vt[..., None, None] * eye - np.einsum("ijk,...k->...ij", B, p.gamma)
    Q[..., lay.alpha, lay.alpha] = qa[..., :nr, :nr]
    Q[..., lay.gamma, lay.alpha] = qg[..., :nt, :nr]
    return Q


def system_matrix(state, cfg: ModelConfig) -> np.ndarray:
    """Quasilinear system matrix ``dF/dV - Q``.

    For the hyperbolic variant the same assembly is evaluated at the state
    with all moments of index >= 2 removed.
    """
    U = np.asarray(state, dtype=float)
    if cfg.variant is Variant.HASWME:
        U = truncate(U, cfg)
    return flux_jacobian(U, cfg) - nonconservative_matrix(U, cfg)


def haswme_closed_form(cfg: ModelConfig, h, vr, alpha1=0.0, vt=0.0, gamma1=0.0) -> np.ndarray:
    """Hyperbolic system matrix written down entry by entry.

    Supported for ``n_theta == 0`` and ``n_theta == n_r``; the result has the
    block lower-triangular form with a tridiagonal alpha chain, an angular
    block ``C`` and a coupling block ``B`` driven by ``gamma1``.
    """
    nr, nt = cfg.n_r, cfg.n_theta
    if nt not in (0, nr):
        raise ClosedFormUnavailable(
            f"no closed form for orders ({nr}, {nt}); use system_matrix on the truncated state"
        )
    if nt > 0 and nr == 0:
        raise ClosedFormUnavailable("angular moments need n_r >= 1")
    h = float(h)
    if not h > 0:
        raise ValueError("water height must be positive")
    v, a1, w, c1, g = float(vr), float(alpha1), float(vt), float(gamma1), cfg.g
    lay = cfg.layout
    M = np.zeros((cfg.size, cfg.size))
    if nr == 0:
        a1 = 0.0
    M[0, 1] = 1.0
    M[1, 0] = g * h - v**2 - a1**2 / 3.0
    M[1, 1] = 2.0 * v
    if nr >= 1:
        M[1, 2] = 2.0 * a1 / 3.0
        M[2, 0] = -2.0 * v * a1
        M[2, 1] = 2.0 * a1
    if nr >= 2:
        M[3, 0] = -2.0 * a1**2 / 3.0
    for i in range(1, nr + 1):
        r = 1 + i
        M[r, r] = v
        if i < nr:
            M[r, r + 1] = (i + 2) / (2 * i + 3) * a1
        if i > 1:
            M[r, r - 1] = (i - 1) / (2 * i - 1) * a1

    it = lay.vt
    M[it, it] = v
    M[it, 1] = w
    if nt == 0:
        M[it, 0] = -v * w
        return M

    # angular block: mean row followed by gamma rows
    M[it, 0] = -v * w - a1 * c1 / 3.0
    M[it, 2] = c1 / 3.0
    M[it, it + 1] = a1 / 3.0
    g0 = lay.gamma.start
    M[g0, 0] = -v * c1 - w * a1
    M[g0, 1] = c1
    M[g0, it] = a1
    if nt >= 2:
        M[g0 + 1, 0] = -2.0 * a1 * c1 / 3.0
    for i in range(1, nt + 1):
        r = g0 + i - 1
        M[r, r] = v
        if i < nt:
            M[r, r + 1] = (i + 1) / (2 * i + 3) * a1
            M[r, 2 + i] = c1 / (2 * i + 3)
        if i > 1:
            M[r, r - 1] = i / (2 * i - 1) * a1
            M[r, i] = -c1 / (2 * i - 1)
    return M


def forcing(state, r, cfg: ModelConfig) -> np.ndarray:
    """Geometric 1/r forcing on the right-hand side."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise ValueError("radius must be positive")
    p = primitives(state, cfg)
    A, B, _, inv = _sub_tables(cfg)
    lay = cfg.layout
    nr, nt = cfg.n_r, cfg.n_theta
    h, v, a, w, c = p.h, p.vr, p.alpha, p.vt, p.gamma
    hh = h[..., None]
    G = np.empty(np.shape(h) + (cfg.size,))
    G[..., 0] = -h * v
    G[..., 1] = h * (-(v**2) + w**2 - np.sum(a**2 * inv, axis=-1) + np.sum(c**2 * inv, axis=-1))
    Gi = hh * (
        -v[..., None] * a
        + 2.0 * w[..., None] * c
        - np.einsum("ijk,...j,...k->...i", A, a, a)
        + np.einsum("ijk,...j,...k->...i", A, c, c)
        - np.einsum("ijk,...k,...j->...i", B, a, a)
    )
    G[..., lay.alpha] = Gi[..., :nr]
    G[..., lay.vt] = -2.0 * h * (v * w + np.sum(a * c * inv, axis=-1))
    Gt = -hh * (
        2.0 * v[..., None] * c
        + w[..., None] * a
        + np.einsum("ijk,...j,...k->...i", 2.0 * A + B, a, c)
    )
    G[..., lay.gamma] = Gt[..., :nt]
    return G / np.asarray(r)[..., None]


def source_friction(state, cfg: ModelConfig) -> np.ndarray:
    """Bottom friction source (Newtonian closure with slip length)."""
    p = primitives(state, cfg)
    _, _, C, _ = _sub_tables(cfg)
    lay = cfg.layout
    nr, nt = cfg.n_r, cfg.n_theta
    k = cfg.nu / cfg.slip
    S = np.zeros(np.shape(p.h) + (cfg.size,))
    if cfg.nu == 0.0:
        return S
    M = p.alpha.shape[-1]
    odd = (2.0 * np.arange(1, M + 1) + 1.0)

    def block(mean, mom, n):
        total = mean + np.sum(mom, axis=-1)
        visc = (cfg.slip / p.h)[..., None] * np.einsum("ij,...j->...i", C, mom)
        return -k * total, (-odd * k * (total[..., None] + visc))[..., :n]

    S[..., 1], S[..., lay.alpha] = block(p.vr, p.alpha, nr)
    S[..., lay.vt], S[..., lay.gamma] = block(p.vt, p.gamma, nt)
    return S
