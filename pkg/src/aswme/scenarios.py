"""Test-case definitions, error norms and the model-order study."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .basis import project_velocity_profile
from .model import ModelConfig, Variant, primitives, state_from_primitives
from .solver import RadialGrid, SolverError, SolverParams, restrict, run

__all__ = [
    "ConvergenceRow",
    "ReferenceSpec",
    "Scenario",
    "convergence_study",
    "dam_break_scenario",
    "error_norm",
    "field_values",
    "initial_state",
    "reference_solution",
    "smooth_scenario",
    "write_convergence_csv",
]

log = logging.getLogger(__name__)

FIELDS = ("h", "v_rm", "v_thm")


@dataclass(frozen=True)
class Scenario:
    name: str
    cfg: ModelConfig
    grid: RadialGrid
    t_end: float
    height: Callable[[np.ndarray], np.ndarray]
    radial_profile: Callable[[np.ndarray], np.ndarray]
    angular_profile: Callable[[np.ndarray], np.ndarray]
    cfl: float = 0.1
    extra_times: tuple[float, ...] = ()

    def with_(self, **changes) -> "Scenario":
        cfg_keys = {"n_r", "n_theta", "g", "nu", "slip", "variant"}
        cfg_changes = {k: changes.pop(k) for k in list(changes) if k in cfg_keys}
        if "n_cells" in changes:
            changes["grid"] = replace(self.grid, n_cells=int(changes.pop("n_cells")))
        out = replace(self, **changes)
        if cfg_changes:
            out = replace(out, cfg=out.cfg.with_(**cfg_changes))
        return out

    @property
    def params(self) -> SolverParams:
        return SolverParams(cfl=self.cfl, t_end=self.t_end)


def _dam_height(r):
    r = np.asarray(r, dtype=float)
    return np.where(r <= 14.0, 5.0, 1.0)


def _dam_profile(z):
    return 0.25 - 2.5 * z + 7.5 * z**2 - 5.0 * z**3


def _sigmoid_height(r):
    r = np.asarray(r, dtype=float)
    return 1.0 + 4.0 / (1.0 + np.exp(2.0 * (r - 14.0)))


def _zero(z):
    return np.zeros_like(np.asarray(z, dtype=float))


def _half(z):
    return np.full_like(np.asarray(z, dtype=float), 0.5)


def dam_break_scenario(**overrides) -> Scenario:
    """Radial dam break: h = 5 inside r <= 14, 1 outside; cubic radial profile."""
    base = Scenario(
        name="dam_break",
        cfg=ModelConfig(3, 3, g=1.0, nu=0.1, slip=0.1, variant=Variant.HASWME),
        grid=RadialGrid(10.0, 20.0, 1000),
        t_end=0.1,
        height=_dam_height,
        radial_profile=_dam_profile,
        angular_profile=_zero,
        extra_times=(0.3,),
    )
    return base.with_(**overrides)


def smooth_scenario(**overrides) -> Scenario:
    """Reverse-sigmoid height, fluid at radial rest with uniform swirl 0.5."""
    base = Scenario(
        name="smooth",
        cfg=ModelConfig(3, 3, g=1.0, nu=1.0, slip=0.1, variant=Variant.ASWME),
        grid=RadialGrid(10.0, 20.0, 1000),
        t_end=0.5,
        height=_sigmoid_height,
        radial_profile=_zero,
        angular_profile=_half,
    )
    return base.with_(**overrides)


def initial_state(scenario: Scenario) -> np.ndarray:
    """Cell states from the scenario's height and projected velocity profiles."""
    cfg = scenario.cfg
    r = scenario.grid.centers
    vr, alpha = project_velocity_profile(scenario.radial_profile, cfg.n_r)
    vt, gamma = project_velocity_profile(scenario.angular_profile, cfg.n_theta)
    h = scenario.height(r)
    return state_from_primitives(
        cfg,
        h,
        np.full_like(h, vr),
        np.broadcast_to(alpha, h.shape + alpha.shape),
        np.full_like(h, vt),
        np.broadcast_to(gamma, h.shape + gamma.shape),
    )


def field_values(states, cfg: ModelConfig, name: str) -> np.ndarray:
    p = primitives(states, cfg)
    try:
        return {"h": p.h, "v_rm": p.vr, "v_thm": p.vt}[name]
    except KeyError:
        raise ValueError(f"unknown variable {name!r}; choose from {FIELDS}") from None


def error_norm(solution, reference, variable: str | None = None, cfg: ModelConfig | None = None) -> float:
    """Relative discrete L1 error ``sum|q - q_ref| / sum|q_ref|``.

    With ``variable`` set, ``solution`` and ``reference`` are cell states
    (both under ``cfg``) and the named primitive field is compared;
    otherwise they are the field values themselves.
    """
    if variable is not None:
        if cfg is None:
            raise ValueError("cfg is required to extract a variable from states")
        solution = field_values(solution, cfg, variable)
        reference = field_values(reference, cfg, variable)
    q = np.asarray(solution, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if q.shape != ref.shape:
        raise ValueError(f"grids differ: {q.shape} vs {ref.shape}")
    denom = np.sum(np.abs(ref))
    if denom == 0:
        raise ValueError("reference field has zero L1 norm; relative error undefined")
    return float(np.sum(np.abs(q - ref)) / denom)


@dataclass(frozen=True)
class ReferenceSpec:
    """Surrogate reference: a higher-order run on a refined grid."""

    n_r: int = 4
    n_theta: int = 4
    variant: Variant = Variant.HASWME
    refine: int = 4


@dataclass
class ConvergenceRow:
    variant: str
    order: tuple[int, int]
    errors: dict[str, float] = field(default_factory=dict)
    failure: str | None = None


def reference_solution(scenario: Scenario, spec: ReferenceSpec) -> tuple[np.ndarray, ModelConfig]:
    """Run the reference and restrict it to the scenario grid (conservative averages)."""
    sc = scenario.with_(
        n_r=spec.n_r, n_theta=spec.n_theta, variant=spec.variant, n_cells=scenario.grid.n_cells * spec.refine
    )
    res = run(initial_state(sc), sc.grid, sc.cfg, sc.params)
    return restrict(res.states, spec.refine), sc.cfg


def convergence_study(
    scenario: Scenario,
    orders: Sequence[tuple[int, int]],
    variant: Variant | str = Variant.ASWME,
    reference: ReferenceSpec = ReferenceSpec(),
    reference_states: tuple[np.ndarray, ModelConfig] | None = None,
) -> list[ConvergenceRow]:
    """Relative L1 errors of h, v_rm and v_thm for each model order.

    The reference can be passed in precomputed (``reference_states``) so
    that several variants share it.
    """
    variant = Variant(variant)
    if not orders:
        raise ValueError("need at least one order")
    ref_states, ref_cfg = reference_states or reference_solution(scenario, reference)
    ref_fields = {name: field_values(ref_states, ref_cfg, name) for name in FIELDS}
    rows = []
    for n_r, n_t in orders:
        row = ConvergenceRow(variant.value, (n_r, n_t))
        sc = scenario.with_(n_r=n_r, n_theta=n_t, variant=variant)
        try:
            res = run(initial_state(sc), sc.grid, sc.cfg, sc.params)
            for name in FIELDS:
                row.errors[name] = error_norm(field_values(res.states, sc.cfg, name), ref_fields[name])
        except (SolverError, ValueError) as exc:
            log.warning("order (%d,%d) %s failed: %s", n_r, n_t, variant.value, exc)
            row.failure = str(exc)
            row.errors = {name: float("nan") for name in FIELDS}
        rows.append(row)
    return rows


def write_convergence_csv(path, rows: Sequence[ConvergenceRow], header: str | None = None) -> Path:
    path = Path(path)
    with path.open("w", newline="\n") as fh:
        if header:
            fh.write(f"# {header}\n")
        fh.write("variant,n_r,n_theta,error_h,error_vrm,error_vthm,status\n")
        for row in rows:
            errs = ",".join(f"{row.errors[name]:.17g}" for name in FIELDS)
            status = "ok" if row.failure is None else "failed: " + row.failure.replace(",", ";").replace("\n", " ")
            fh.write(f"{row.variant},{row.order[0]},{row.order[1]},{errs},{status}\n")
    return path
