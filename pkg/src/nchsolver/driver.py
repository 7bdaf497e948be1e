"""Time-integration loop with diagnostics and equilibrium detection.

A run advances the selected scheme from an initial field until either the
trajectory reaches a discrete equilibrium or a step budget is exhausted.
The equilibrium criterion combines the increment rate with the variance of
the chemical potential,

    max( ||u^{n+1} - u^n||_2 / tau ,  ||omega - mean(omega)||_2 ) <= eq_tol,

because the limit object is a state with constant chemical potential and
prescribed mass; the increment alone can stall on plateaus.  Runs never
assert that different schemes reach the *same* equilibrium -- each
trajectory converges to *a* steady state, and the driver only records what
it finds.

Per-step diagnostics (mass, energies, increment norms, stationarity
residuals, Newton iteration counts) are collected at a configurable cadence
plus always at the terminating step; field snapshots and checkpoints use
the binary formats from :mod:`nchsolver.fieldio`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .energetics import PotentialSpec, chemical_potential, energy, \
    modified_energy_two_step, modified_energy_two_step_linear
from .errors import ConfigError, SolverError
from .fieldio import write_checkpoint, write_field
from .grid import Field, GridGeometry, mean, norm2, project_zero_mean
from .kernels import SampledKernel, gamma0
from .spectral import SpectralCache, gradient, norm_neg1
from .steppers import SchemeConfig, SchemeState, advance
from .grid import edge_inner_product


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One row of the per-step time series."""

    step: int
    time: float
    mass: float
    energy: float
    modified_energy: Optional[float]
    increment_l2: float
    increment_hneg1: float
    grad_omega_l2: float
    omega_variance: float
    newton_iters: int


@dataclass(frozen=True)
class RunOptions:
    """Loop controls: budget, equilibrium tolerance, record/snapshot cadence."""

    max_steps: int
    eq_tol: float = 1e-9
    record_every: int = 1
    snapshot_every: int = 0
    snapshot_dir: Optional[Path] = None

    def __post_init__(self):
        if self.max_steps < 1:
            raise ConfigError("max_steps must be at least 1")
        if self.record_every < 1:
            raise ConfigError("record_every must be at least 1")
        if self.snapshot_every < 0:
            raise ConfigError("snapshot_every must be >= 0")
        if self.snapshot_every > 0 and self.snapshot_dir is None:
            raise ConfigError("snapshot cadence set but no snapshot directory given")


@dataclass(frozen=True)
class RunResult:
    final_state: SchemeState
    records: list[DiagnosticsRecord] = field(repr=False)
    termination: str = "max_steps"  # "equilibrium" | "max_steps" | "error"
    equilibrium_residual: float = math.inf
    error_detail: str = ""


def random_initial_field(geometry: GridGeometry, mean_value: float = 0.0,
                         delta: float = 0.05, seed: int = 0) -> Field:
    """Seeded uniform perturbation in [-delta, delta] about a mean.

    The sample is re-centered so the mass hits the target exactly; the
    conserved quantity then starts at its nominal value.
    """
    rng = np.random.default_rng(seed)
    values = mean_value + rng.uniform(-delta, delta, size=(geometry.n, geometry.n))
    values += mean_value - values.mean()
    return Field(geometry, values)


def equilibrium_residual(u: Field, omega: Field, kernel: SampledKernel, epsilon: float,
                         potential: PotentialSpec) -> float:
    """Distance from the discrete stationary system.

    Combines the variance of the chemical potential (zero iff omega is
    constant) with the defect of the potential equation; both vanish
    exactly at a discrete equilibrium.
    """
    variance = norm2(project_zero_mean(omega))
    defect_field = Field(u.geometry,
                         omega.values - chemical_potential(u, kernel, epsilon, potential).values)
    return max(variance, norm2(defect_field))


def _grad_norm(omega: Field) -> float:
    g = gradient(omega)
    return omega.geometry.h * math.sqrt(max(edge_inner_product(g, g), 0.0))


def _record(step_index: int, time: float, state: SchemeState, increment: Optional[Field],
            omega: Field, newton_iters: int, cfg: SchemeConfig, kernel: SampledKernel,
            cache: SpectralCache) -> DiagnosticsRecord:
    pot = cfg.potential
    e = energy(state.u, kernel, cfg.epsilon, pot)
    modified = None
    if increment is not None and cfg.scheme in ("bdf2", "two_li"):
        du = project_zero_mean(increment)
        if cfg.scheme == "bdf2":
            modified = modified_energy_two_step(state.u, du, cfg.tau, kernel,
                                                cfg.epsilon, cache, pot)
        else:
            modified = modified_energy_two_step_linear(state.u, du, cfg.tau, cfg.beta,
                                                       kernel, cfg.epsilon, cache, pot)
    if increment is None:
        inc_l2 = inc_neg = 0.0
    else:
        inc_l2 = norm2(increment)
        inc_neg = norm_neg1(project_zero_mean(increment), cache)
    return DiagnosticsRecord(
        step=step_index,
        time=time,
        mass=mean(state.u),
        energy=e,
        modified_energy=modified,
        increment_l2=inc_l2,
        increment_hneg1=inc_neg,
        grad_omega_l2=_grad_norm(omega),
        omega_variance=norm2(project_zero_mean(omega)),
        newton_iters=newton_iters,
    )


def run(u0: Optional[Field], cfg: SchemeConfig, kernel: SampledKernel, cache: SpectralCache,
        options: RunOptions, initial_state: Optional[SchemeState] = None) -> RunResult:
    """Advance the scheme until equilibrium or the step budget runs out.

    Either ``u0`` (a fresh start at step 0) or ``initial_state`` (resume
    from a checkpoint) must be given.  Stepper failures terminate the run
    with ``termination == "error"`` and the failing step in the detail;
    records collected so far are kept.
    """
    if (u0 is None) == (initial_state is None):
        raise ConfigError("exactly one of u0 and initial_state must be given")
    g0 = gamma0(kernel, cfg.epsilon)
    if not g0 > 0.0:
        raise ConfigError(
            f"gamma0 = {g0!r} <= 0: the kernel/epsilon pair violates the "
            "positive-diffusivity assumption"
        )

    pot = cfg.potential
    records: list[DiagnosticsRecord] = []
    if initial_state is None:
        state = SchemeState(u=u0, step_index=0, time=0.0)
        omega0 = chemical_potential(u0, kernel, cfg.epsilon, pot)
        records.append(_record(0, 0.0, state, None, omega0, 0, cfg, kernel, cache))
    else:
        state = initial_state

    termination = "max_steps"
    detail = ""
    final_omega = state.omega
    while state.step_index < options.max_steps:
        previous = state.u
        try:
            state, result = advance(state, cfg, kernel, cache)
        except SolverError as err:
            termination = "error"
            detail = f"step {state.step_index + 1}: {err}"
            break
        increment = Field(previous.geometry, state.u.values - previous.values)
        final_omega = result.omega

        at_cadence = state.step_index % options.record_every == 0
        inc_rate = norm2(increment) / cfg.tau
        variance = norm2(project_zero_mean(result.omega))
        reached_equilibrium = max(inc_rate, variance) <= options.eq_tol
        if at_cadence or reached_equilibrium or state.step_index >= options.max_steps:
            records.append(_record(state.step_index, state.time, state, increment,
                                   result.omega, result.newton_iters, cfg, kernel, cache))
        if options.snapshot_every and state.step_index % options.snapshot_every == 0:
            write_field(Path(options.snapshot_dir) / f"u_{state.step_index:08d}.nchf",
                        state.u, state.time)
        if reached_equilibrium:
            termination = "equilibrium"
            break

    if final_omega is None:
        final_omega = chemical_potential(state.u, kernel, cfg.epsilon, pot)
    residual = equilibrium_residual(state.u, final_omega, kernel, cfg.epsilon, pot)
    return RunResult(final_state=state, records=records, termination=termination,
                     equilibrium_residual=residual, error_detail=detail)


def run_batch(jobs: Sequence[tuple[Field, SchemeConfig, SampledKernel, SpectralCache, RunOptions]]
              ) -> list[RunResult]:
    """Execute independent runs in order; each job owns its private state."""
    return [run(u0, cfg, kernel, cache, options) for u0, cfg, kernel, cache, options in jobs]


@dataclass(frozen=True)
class DecayProbe:
    """Empirical decay constants scanned from a trailing window of records.

    ``c2_hat`` is the smallest observed energy-drop ratio
    (E_n - E_{n+1}) / ||du||_2^2 and ``c3_hat`` the largest observed
    gradient-to-increment ratio ||grad omega||_2 / ||du||_2; purely
    observational, steps with negligible increments are excluded.
    """

    c2_hat: Optional[float]
    c3_hat: Optional[float]
    window: int
    steps_used: int


def h1h2_probe(records: Sequence[DiagnosticsRecord], window: int) -> DecayProbe:
    """Estimate the decay constants over the trailing ``window`` records."""
    if len(records) < window:
        raise ValueError(f"need at least {window} records, got {len(records)}")
    tail = records[-window:]
    c2 = None
    c3 = None
    used = 0
    for before, after in zip(tail[:-1], tail[1:]):
        du = after.increment_l2
        if du < 1e-14:
            continue
        used += 1
        drop = (before.energy - after.energy) / du**2
        ratio = after.grad_omega_l2 / du
        c2 = drop if c2 is None else min(c2, drop)
        c3 = ratio if c3 is None else max(c3, ratio)
    return DecayProbe(c2_hat=c2, c3_hat=c3, window=window, steps_used=used)


def save_checkpoint(path, state: SchemeState) -> None:
    write_checkpoint(path, state)
