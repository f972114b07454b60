"""Eigenvalues, hyperbolicity checks and region scans."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import ModelConfig, Variant, state_from_primitives, system_matrix

__all__ = [
    "EigenSolverError",
    "SpectralReport",
    "char_poly_roots_factored",
    "classify_hyperbolic",
    "diagonal_symmetrizer",
    "eigenvalues_dense",
    "haswme_eigenvalues",
    "scan_region",
    "spectral_radius",
    "tridiagonal_a2",
    "tridiagonal_a3",
    "unit_speeds",
    "write_region_csv",
    "write_region_pgm",
]

TOL_IMAG = 1e-9
CLUSTER_TOL = 1e-7


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray
    max_abs_imag: float
    hyperbolic: bool
    diagonalizable: bool | None = None


def eigenvalues_dense(M) -> np.ndarray:
    """All eigenvalues of a real square matrix (or a stack of them).

    The result is complex and sorted by real part, then imaginary part.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigenvalue iteration failed for matrix of shape {M.shape}: {exc}") from exc
    ev = ev.astype(complex)
    order = np.lexsort((ev.imag, ev.real), axis=-1)
    return np.take_along_axis(ev, order, axis=-1)


def tridiagonal_a2(n: int, alpha1: float = 1.0) -> np.ndarray:
    """Zero-diagonal alpha chain: below ``(i-1)/(2i-1)``, above ``(i+2)/(2i+3)``."""
    T = np.zeros((n, n))
    for i in range(1, n):
        T[i - 1, i] = (i + 2) / (2 * i + 3) * alpha1
        T[i, i - 1] = i / (2 * i + 1) * alpha1
    return T


def tridiagonal_a3(n: int, alpha1: float = 1.0, vr: float = 0.0) -> np.ndarray:
    """Angular block of size ``n + 1`` (mean velocity row first)."""
    T = np.diag(np.full(n + 1, float(vr)))
    if n >= 1:
        T[0, 1] = alpha1 / 3.0
        T[1, 0] = alpha1
    for i in range(1, n):
        T[i, i + 1] = (i + 1) / (2 * i + 3) * alpha1
        T[i + 1, i] = (i + 1) / (2 * i + 1) * alpha1
    return T


def diagonal_symmetrizer(T) -> np.ndarray:
    """Positive diagonal ``d`` such that ``diag(d) T diag(d)^-1`` is symmetric.

    Needs ``T[i, i+1] * T[i+1, i] > 0`` for every off-diagonal pair.
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    up = np.diag(T, 1)
    lo = np.diag(T, -1)
    if np.any(up * lo <= 0):
        raise ValueError("off-diagonal products must be strictly positive")
    d = np.ones(n)
    for i in range(n - 1):
        d[i + 1] = d[i] * np.sqrt(up[i] / lo[i])
    return d


def _chain_eigenvalues(T) -> np.ndarray:
    """Eigenvalues of a symmetrizable tridiagonal matrix via its symmetric form."""
    n = T.shape[0]
    if n == 0:
        return np.zeros(0)
    if n == 1:
        return np.array([T[0, 0]])
    d = diagonal_symmetrizer(T)
    S = d[:, None] * T / d[None, :]
    return np.linalg.eigvalsh(0.5 * (S + S.T))


def unit_speeds(n_r: int, n_theta: int) -> tuple[np.ndarray, np.ndarray]:
    """Speed factors ``b`` (alpha chain) and ``s`` (angular block) for alpha1 = 1."""
    b = _chain_eigenvalues(tridiagonal_a2(n_r)) if n_r else np.zeros(0)
    if n_r == 0:
        s = np.zeros(n_theta + 1)
    else:
        s = _chain_eigenvalues(tridiagonal_a3(n_theta))
    return b, s


def haswme_eigenvalues(cfg: ModelConfig, h, vr, alpha1) -> np.ndarray:
    """Closed-form real spectrum of the hyperbolic system matrix, sorted.

    The spectrum is ``v +- sqrt(g h + alpha1^2)`` together with the alpha
    chain speeds ``v + b_i alpha1`` and the angular block speeds
    ``v + s_i alpha1``; for ``n_theta = 0`` the angular block is the single
    speed ``v``.
    """
    if cfg.variant is not Variant.HASWME:
        raise ValueError("closed-form spectrum exists only for the hyperbolic variant")
    h = float(h)
    if not h > 0:
        raise ValueError("water height must be positive")
    a1 = float(alpha1) if cfg.n_r else 0.0
    b, s = unit_speeds(cfg.n_r, cfg.n_theta)
    c = np.sqrt(cfg.g * h + a1**2)
    ev = np.concatenate([[vr - c, vr + c], vr + b * a1, vr + s * a1])
    return np.sort(ev)


def spectral_radius(states, cfg: ModelConfig) -> np.ndarray:
    """Largest |eigenvalue| of the system matrix for each state in a batch."""
    U = np.asarray(states, dtype=float)
    if cfg.variant is Variant.HASWME:
        h = U[..., 0]
        v = U[..., 1] / h
        a1 = U[..., 2] / h if cfg.n_r else np.zeros_like(h)
        b, s = unit_speeds(cfg.n_r, cfg.n_theta)
        slow = np.max(np.abs(np.concatenate([b, s])))
        return np.maximum(np.abs(v) + np.sqrt(cfg.g * h + a1**2), np.abs(v) + slow * np.abs(a1))
    return np.max(np.abs(eigenvalues_dense(system_matrix(U, cfg))), axis=-1)


def _geometric_deficit(M, ev, scale, exempt) -> bool:
    """True when every eigenvalue cluster has a full eigenspace."""
    n = M.shape[0]
    vals = np.sort(ev.real)
    clusters = []
    start = 0
    for i in range(1, n + 1):
        if i == n or vals[i] - vals[i - 1] > CLUSTER_TOL * scale:
            clusters.append(vals[start:i])
            start = i
    rank_tol = 10 * CLUSTER_TOL * scale
    for cl in clusters:
        if cl.size == 1:
            continue
        lam = cl.mean()
        if exempt is not None and abs(lam - exempt) <= CLUSTER_TOL * scale:
            continue
        sv = np.linalg.svd(M - lam * np.eye(n), compute_uv=False)
        if np.count_nonzero(sv <= rank_tol) < cl.size:
            return False
    return True


def classify_hyperbolic(
    M, tol_imag: float = TOL_IMAG, check_diagonalizable: bool = False, exempt: float | None = None
) -> SpectralReport:
    """Decide hyperbolicity of a single system matrix.

    ``exempt`` names an eigenvalue whose cluster is skipped in the
    diagonalizability test (used at exact equilibrium, where the multiple
    mean-velocity eigenvalue is left open).
    """
    if not tol_imag > 0:
        raise ValueError("tol_imag must be positive")
    M = np.asarray(M, dtype=float)
    ev = eigenvalues_dense(M)
    scale = max(1.0, float(np.max(np.abs(ev))))
    max_imag = float(np.max(np.abs(ev.imag)))
    real = max_imag <= tol_imag * scale
    diag = None
    if check_diagonalizable:
        diag = bool(real and _geometric_deficit(M, ev, scale, exempt))
    hyperbolic = real and (diag is None or diag)
    return SpectralReport(ev, max_imag, bool(hyperbolic), diag)


# Factored characteristic polynomials, coefficients highest degree first, in
# the scaled speed c with lambda = v_r + c sqrt(g h).
def _quintic(a1: float, a2: float) -> list[float]:
    return [
        1.0,
        -10 * a2 / 7,
        -(1 + 6 * a1**2 / 5 + 6 * a2**2 / 35),
        -(-10 * a2 / 7 + 6 * a1**2 * a2 / 35 - 22 * a2**3 / 35),
        -(-(a1**2) / 5 - a1**4 / 5 + 3 * a2**2 / 7 + 6 * a1**2 * a2**2 / 35 + a2**4 / 35),
        0.0,
    ]


def _septic(a1: float) -> list[float]:
    return [
        -1.0,
        0.0,
        9 * a1**2 / 5 + 1,
        0.0,
        -23 * a1**4 / 25 - 4 * a1**2 / 5,
        0.0,
        3 * a1**6 / 25 + 3 * a1**4 / 25,
        0.0,
    ]


def char_poly_roots_factored(system, alpha1: float, alpha2: float = 0.0) -> np.ndarray:
    """Roots of the factored characteristic polynomial of the (2,0) or (2,2) system.

    ``alpha1`` and ``alpha2`` are in units of ``sqrt(g h)``.  The degree-7
    polynomial of the (2,2) system is only available for ``alpha2 = 0``.
    """
    key = tuple(system)
    if key == (2, 0):
        coeffs = _quintic(alpha1, alpha2)
    elif key == (2, 2):
        if alpha2 != 0:
            raise ValueError("the (2,2) polynomial is only given for alpha2 = 0")
        coeffs = _septic(alpha1)
    else:
        raise ValueError(f"no factored polynomial for system {system}")
    roots = np.roots(coeffs)
    # np.roots drops trailing zero coefficients; put those roots back
    n_zero = len(coeffs) - 1 - roots.size
    roots = np.concatenate([roots.astype(complex), np.zeros(n_zero, dtype=complex)])
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def _grid_states(cfg: ModelConfig, a1, a2) -> np.ndarray:
    A1, A2 = np.meshgrid(a1, a2, indexing="ij")
    alpha = np.zeros(A1.shape + (cfg.n_r,))
    alpha[..., 0] = A1
    alpha[..., 1] = A2
    return state_from_primitives(cfg, np.ones_like(A1), 0.0, alpha, 0.0)


def scan_region(
    system,
    alpha1_range=(-3.0, 3.0, 601),
    alpha2_range=(-3.0, 3.0, 601),
    tol_imag: float = TOL_IMAG,
    chunk: int = 20000,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hyperbolicity map over (alpha1, alpha2) at h = g = 1 and zero mean velocities.

    Parameters
    ----------
    system : (n_r, n_theta) tuple or ModelConfig
        A tuple selects the non-regularized system with g = 1.
    alpha1_range, alpha2_range : (lo, hi, n)
        Grid axes, ``numpy.linspace`` semantics.

    Returns
    -------
    a1, a2 : 1-D axes
    grid : bool array of shape (len(a1), len(a2)); True where hyperbolic.
    """
    if isinstance(system, ModelConfig):
        cfg = system.with_(g=1.0)
    else:
        n_r, n_t = system
        cfg = ModelConfig(n_r, n_t, g=1.0)
    if cfg.n_r < 2:
        raise ValueError("region scans need n_r >= 2")
    ranges = []
    for lo, hi, n in (alpha1_range, alpha2_range):
        if int(n) < 2 or not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError("ranges must be finite with at least 2 points")
        ranges.append(np.linspace(float(lo), float(hi), int(n)))
    a1, a2 = ranges
    states = _grid_states(cfg, a1, a2).reshape(-1, cfg.size)
    flags = np.empty(states.shape[0], dtype=bool)
    for s in range(0, states.shape[0], chunk):
        ev = np.linalg.eigvals(system_matrix(states[s : s + chunk], cfg))
        scale = np.maximum(1.0, np.max(np.abs(ev), axis=-1))
        flags[s : s + chunk] = np.max(np.abs(ev.imag), axis=-1) <= tol_imag * scale
    return a1, a2, flags.reshape(a1.size, a2.size)


def write_region_csv(path, a1, a2, grid, header: str | None = None) -> Path:
    path = Path(path)
    A1, A2 = np.meshgrid(a1, a2, indexing="ij")
    with path.open("w", newline="\n") as fh:
        if header:
            fh.write(f"# {header}\n")
        fh.write("alpha_1,alpha_2,hyperbolic\n")
        for x, y, f in zip(A1.ravel(), A2.ravel(), grid.ravel()):
            fh.write(f"{x:.17g},{y:.17g},{int(f)}\n")
    return path


def write_region_pgm(path, grid, header: str | None = None) -> Path:
    """Plain PGM; columns run along alpha1, the top row is the largest alpha2."""
    path = Path(path)
    img = np.where(np.asarray(grid).T[::-1], 255, 0)
    with path.open("w", newline="\n") as fh:
        fh.write("P2\n")
        if header:
            fh.write(f"# {header}\n")
        fh.write(f"{img.shape[1]} {img.shape[0]}\n255\n")
        for row in img:
            fh.write(" ".join(str(v) for v in row) + "\n")
    return path
