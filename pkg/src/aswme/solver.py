"""First-order path-conservative finite volumes with forward Euler.

Interface fluctuations use the straight-line path between neighbouring
states, with the path integral of the system matrix approximated by its
midpoint value, plus Rusanov dissipation::

    D+- = 1/2 (A(U_mid) +- s I) (U_R - U_L)

Geometric forcing and friction are added pointwise in the same Euler step.
Ghost cells copy the boundary cells (zero-order extrapolation).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Layout, ModelConfig, forcing, primitives, source_friction, system_matrix
from .spectral import spectral_radius

__all__ = [
    "RadialGrid",
    "RunResult",
    "SolverError",
    "SolverParams",
    "evolve",
    "restrict",
    "run",
    "snapshot_table",
    "stable_dt",
    "step",
    "write_snapshot_csv",
]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Numerical breakdown; carries the failing cell and time when known."""

    def __init__(self, message: str, cell: int | None = None, time: float | None = None):
        super().__init__(message)
        self.cell = cell
        self.time = time


@dataclass(frozen=True)
class RadialGrid:
    r_min: float = 10.0
    r_max: float = 20.0
    n_cells: int = 250

    def __post_init__(self):
        if not self.r_min > 0:
            raise ValueError("r_min must be positive (r = 0 is singular)")
        if not self.r_max > self.r_min:
            raise ValueError("r_max must exceed r_min")
        if self.n_cells < 1:
            raise ValueError("need at least one cell")

    @property
    def dr(self) -> float:
        return (self.r_max - self.r_min) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.r_min + (np.arange(self.n_cells) + 0.5) * self.dr

    def refined(self, factor: int) -> "RadialGrid":
        return RadialGrid(self.r_min, self.r_max, self.n_cells * factor)


@dataclass(frozen=True)
class SolverParams:
    cfl: float = 0.1
    t_end: float = 0.1
    boundary: str = "outflow"
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if not self.t_end >= 0:
            raise ValueError("t_end must be non-negative")
        if self.boundary != "outflow":
            raise ValueError(f"unsupported boundary treatment {self.boundary!r}")
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))


@dataclass
class RunResult:
    states: np.ndarray
    time: float
    n_steps: int
    snapshots: dict[float, np.ndarray] = field(default_factory=dict)
    dt_min: float = np.inf
    dt_max: float = 0.0


def _check(U, t, what="state"):
    bad = ~np.all(np.isfinite(U), axis=-1) | ~(U[:, 0] > 0)
    if np.any(bad):
        cell = int(np.flatnonzero(bad)[0])
        raise SolverError(f"inadmissible {what} in cell {cell} at t={t:.6g}: {U[cell]}", cell, t)


def stable_dt(states, grid: RadialGrid, cfg: ModelConfig, params: SolverParams, t: float = 0.0) -> float:
    """CFL time step from the largest wave speed over all cells."""
    return _dt_from_speeds(spectral_radius(states, cfg), grid, params, t)


def _dt_from_speeds(speeds, grid, params, t):
    smax = float(np.max(speeds))
    if smax <= 0.0:
        return params.t_end - t
    return params.cfl * grid.dr / smax


def step(states, grid: RadialGrid, cfg: ModelConfig, dt: float, speeds=None, t: float = 0.0) -> np.ndarray:
    """Advance all cells by one forward Euler step of size ``dt``."""
    U = np.asarray(states, dtype=float)
    if speeds is None:
        speeds = spectral_radius(U, cfg)
    Ue = np.concatenate([U[:1], U, U[-1:]])
    se = np.concatenate([speeds[:1], speeds, speeds[-1:]])
    dU = Ue[1:] - Ue[:-1]
    s = np.maximum(se[1:], se[:-1])

    active = np.any(dU != 0.0, axis=-1)
    Dp = np.zeros_like(dU)
    Dm = np.zeros_like(dU)
    if np.any(active):
        mid = 0.5 * (Ue[1:][active] + Ue[:-1][active])
        Ad = np.einsum("nij,nj->ni", system_matrix(mid, cfg), dU[active])
        sd = s[active, None] * dU[active]
        Dp[active] = 0.5 * (Ad + sd)
        Dm[active] = 0.5 * (Ad - sd)

    rhs = forcing(U, grid.centers, cfg) + source_friction(U, cfg)
    out = U - dt / grid.dr * (Dp[:-1] + Dm[1:]) + dt * rhs
    _check(out, t + dt)
    return out


def run(initial, grid: RadialGrid, cfg: ModelConfig, params: SolverParams) -> RunResult:
    """Integrate to ``params.t_end``; the last step is shortened to land on it.

    Each requested snapshot time maps to the nearest completed step (no
    interpolation); time zero maps to the initial condition.
    """
    U = np.array(initial, dtype=float)
    if U.shape != (grid.n_cells, cfg.size):
        raise ValueError(f"initial data has shape {U.shape}, expected {(grid.n_cells, cfg.size)}")
    _check(U, 0.0, "initial state")
    pending = sorted(t for t in params.snapshot_times if t <= params.t_end)
    result = RunResult(U, 0.0, 0)
    t = 0.0
    while pending and pending[0] <= t:
        result.snapshots[pending.pop(0)] = U.copy()
    while t < params.t_end:
        speeds = spectral_radius(U, cfg)
        dt = _dt_from_speeds(speeds, grid, params, t)
        last = t + dt >= params.t_end
        if last:
            dt = params.t_end - t
        U_prev, t_prev = U, t
        try:
            U = step(U, grid, cfg, dt, speeds, t)
        except SolverError as exc:
            exc.args = (f"{exc.args[0]} (reached t={t:.6g} after {result.n_steps} steps)",)
            raise
        t = params.t_end if last else t + dt
        result.n_steps += 1
        result.dt_min = min(result.dt_min, dt)
        result.dt_max = max(result.dt_max, dt)
        while pending and pending[0] <= t:
            tp = pending.pop(0)
            result.snapshots[tp] = (U if t - tp <= tp - t_prev else U_prev).copy()
    result.states = U
    result.time = t
    log.debug("run finished: %d steps, t=%g", result.n_steps, t)
    return result


def snapshot_table(states, grid: RadialGrid, cfg: ModelConfig) -> tuple[list[str], np.ndarray]:
    """Primitive columns ``r, h, v_rm, alpha_*, v_thm, gamma_*`` per cell."""
    p = primitives(states, cfg)
    cols = [grid.centers, p.h, p.vr]
    cols += [p.alpha[:, i] for i in range(cfg.n_r)]
    cols += [p.vt]
    cols += [p.gamma[:, i] for i in range(cfg.n_theta)]
    names = ["r"] + Layout(cfg.n_r, cfg.n_theta).names()
    return names, np.column_stack(cols)


def write_snapshot_csv(path, states, grid: RadialGrid, cfg: ModelConfig, header: str | None = None) -> Path:
    path = Path(path)
    names, data = snapshot_table(states, grid, cfg)
    with path.open("w", newline="\n") as fh:
        if header:
            fh.write(f"# {header}\n")
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
    return path


def evolve(initial, grid: RadialGrid, cfg: ModelConfig, t_end: float, cfl: float = 0.1) -> np.ndarray:
    """Shorthand for ``run(...).states``."""
    return run(initial, grid, cfg, SolverParams(cfl=cfl, t_end=t_end)).states


def restrict(fine, factor: int) -> np.ndarray:
    """Cell-average a fine-grid field onto a grid ``factor`` times coarser."""
    fine = np.asarray(fine)
    n = fine.shape[0] // factor
    return fine[: n * factor].reshape((n, factor) + fine.shape[1:]).mean(axis=1)
