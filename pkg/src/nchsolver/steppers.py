"""The five fully discrete schemes as one-step (or two-step) maps.

Every scheme advances the conserved-order-parameter system

    (u^{n+1} - u^n) / tau = Lap(omega^{n+1})        (mass equation)
    omega = F'(u) + eps^2 [J(*)1] u - eps^2 [J (*) u]   (chemical potential)

in one of five ways:

* ``backward_euler``  -- fully implicit, first order; nonlinear solve.
* ``convex_splitting``-- implicit convex part (cubic + strong quadratic),
  explicit concave part; unconditionally energy stable; nonlinear solve.
* ``ssi1``            -- stabilized linear semi-implicit with the truncated
  potential, explicit F_K'(u^n) plus S (u^{n+1} - u^n); one DFT-diagonal
  linear solve; energy stable for S >= beta/2.
* ``bdf2``            -- two-step backward differentiation with the implicit
  chemical potential; dissipates the modified energy.
* ``two_li``          -- two-step linearly implicit with extrapolated
  2 F_K'(u^n) - F_K'(u^{n-1}); one DFT-diagonal linear solve.

Admissibility is decided by an exact per-mode check instead of a
non-constructive kernel constant: for each nonzero DFT mode the convexity
quantity

    q(m) = 1 / (c_s tau lambda_m) + eps^2 [J(*)1] - eps^2 j_hat_m - 1

must be nonnegative (c_s = 1 for backward Euler, 2/3 for the two-step
scheme, matching the coefficient of the negative-norm term in the
respective convexity computations).  The linear schemes use the closed-form
inequalities on (S, beta) and (beta, tau, gamma0), with the same per-mode
surrogate replacing the kernel constant.  The policy field decides whether
an inadmissible configuration rejects the step, warns, or is ignored.

The nonlinear solves eliminate omega and run Newton on u alone, matrix-free
and preconditioned by the frozen-coefficient DFT-diagonal operator;
omega is reconstructed from the potential equation afterwards.  Accepted
steps re-center the solution mass on the conserved value (a shift at
rounding magnitude), so mass is conserved exactly along trajectories.

Steps are sequential by nature (level n+1 needs level n); independent
simulations may run concurrently on shared immutable kernels and caches.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .energetics import PotentialSpec, potential_d1, potential_d2
from .errors import ConfigError, StabilityError, StateError
from .grid import Field, GridGeometry, mean
from .kernels import SampledKernel, convolve_values, gamma0
from .solvers import newton_solve, spectral_preconditioner
from .spectral import SpectralCache, laplacian_apply

SCHEMES = ("backward_euler", "convex_splitting", "ssi1", "bdf2", "two_li")
TWO_STEP_SCHEMES = ("bdf2", "two_li")
STABILITY_POLICIES = ("enforce", "warn", "ignore")


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme selector with step size, model and solver parameters.

    ``stabilization`` is the linear stabilization constant S of the
    semi-implicit scheme; ``cutoff`` the truncation point K of the modified
    potential (its curvature bound beta = 3K^2 - 1 is derived, never
    user-supplied).  ``potential_variant`` may force the truncated
    potential for the implicit schemes; "auto" resolves to the double well
    for backward Euler / convex splitting / BDF2 and to the truncation for
    the linear schemes, which are defined through F_K.
    """

    scheme: str
    tau: float
    epsilon: float
    stabilization: float = 0.0
    cutoff: float = 2.0
    newton_tol: float = 1e-11
    newton_max_iter: int = 50
    krylov_tol: float = 1e-12
    stability_policy: str = "enforce"
    potential_variant: str = "auto"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.tau > 0.0:
            raise ConfigError(f"time step must be positive, got {self.tau}")
        if not self.epsilon > 0.0:
            raise ConfigError(f"interface parameter must be positive, got {self.epsilon}")
        if self.stabilization < 0.0:
            raise ConfigError(f"stabilization constant must be >= 0, got {self.stabilization}")
        if not self.cutoff > 1.0:
            raise ConfigError(f"truncation point K must exceed 1, got {self.cutoff}")
        if self.newton_max_iter < 1:
            raise ConfigError("newton_max_iter must be at least 1")
        if not (self.newton_tol > 0.0 and self.krylov_tol > 0.0):
            raise ConfigError("solver tolerances must be positive")
        if self.stability_policy not in STABILITY_POLICIES:
            raise ConfigError(
                f"unknown stability policy {self.stability_policy!r}; expected one of {STABILITY_POLICIES}"
            )
        if self.potential_variant not in ("auto", "double_well", "truncated"):
            raise ConfigError(f"unknown potential variant {self.potential_variant!r}")
        if self.scheme == "convex_splitting" and self.potential_variant == "truncated":
            raise ConfigError("the convex splitting step is defined for the double-well potential only")
        if self.scheme in ("ssi1", "two_li") and self.potential_variant == "double_well":
            raise ConfigError(f"{self.scheme} requires the truncated potential")
        if self.scheme == "ssi1" and self.stability_policy == "enforce" \
                and self.stabilization < 0.5 * self.beta:
            raise ConfigError(
                f"ssi1 under the enforce policy needs S >= beta/2 = {0.5 * self.beta}, "
                f"got S = {self.stabilization}"
            )

    @property
    def beta(self) -> float:
        """Curvature bound 3K^2 - 1 of the truncated potential."""
        return 3.0 * self.cutoff**2 - 1.0

    @property
    def potential(self) -> PotentialSpec:
        if self.potential_variant == "truncated" or self.scheme in ("ssi1", "two_li"):
            return PotentialSpec("truncated", self.cutoff)
        return PotentialSpec("double_well")


@dataclass(frozen=True)
class SchemeState:
    """Trajectory state: current field, optional previous level, bookkeeping."""

    u: Field
    u_prev: Optional[Field] = None
    omega: Optional[Field] = None
    step_index: int = 0
    time: float = 0.0

    def __post_init__(self):
        if self.u_prev is not None:
            m, mp = mean(self.u), mean(self.u_prev)
            if abs(m - mp) > 1e-12 * (1.0 + max(abs(m), abs(mp))):
                raise StateError(
                    f"two-step state with unequal masses: {m!r} vs {mp!r}"
                )


class StepResult(NamedTuple):
    u: Field
    omega: Field
    newton_iters: int


@dataclass(frozen=True)
class SolvabilityReport:
    """Exact per-grid admissibility check of the scheme's step size.

    ``per_mode_min`` is the minimum over nonzero DFT modes of the scheme's
    convexity/stability quantity; ``margin`` the binding margin whose
    nonnegativity decides admissibility (infinite for the unconditional
    scheme).  ``gamma0 > 0`` is required for every scheme.
    """

    scheme: str
    tau: float
    gamma0: float
    conv_one: float
    beta: float
    stabilization: float
    admissible: bool
    margin: float
    per_mode_min: float
    note: str = ""
    # Literal step-size bound 2 gamma0 / (C eps^4) (or its two-step analogue)
    # for a caller-supplied kernel constant C; reporting only, never enforced.
    literal_tau_bound: Optional[float] = None


def _nonzero_mode_mask(cache: SpectralCache) -> np.ndarray:
    return cache.minus_laplacian_eigenvalues > 0.0


def check_solvability(cfg: SchemeConfig, kernel: SampledKernel, cache: SpectralCache,
                      kernel_constant: Optional[float] = None) -> SolvabilityReport:
    """Evaluate the scheme's admissibility condition mode by mode.

    Admissibility is always decided by the exact per-mode quantities; when a
    ``kernel_constant`` is supplied explicitly, the coarser literal bound it
    induces on the step size is reported alongside for comparison.
    Boundary cases with margin exactly 0 are admissible; the note records
    that the underlying sufficient conditions are sharp there.
    """
    lam = cache.minus_laplacian_eigenvalues
    mask = _nonzero_mode_mask(cache)
    lam_nz = lam[mask]
    eps2 = cfg.epsilon**2
    nonlocal_gap = eps2 * (kernel.conv_one - kernel.symbol)[mask]
    g0 = gamma0(kernel, cfg.epsilon)
    beta = cfg.beta
    note = ""

    if cfg.scheme == "convex_splitting":
        per_mode_min = margin = np.inf
        admissible = g0 > 0.0
    elif cfg.scheme in ("backward_euler", "bdf2"):
        c_s = 1.0 if cfg.scheme == "backward_euler" else 2.0 / 3.0
        q = 1.0 / (c_s * cfg.tau * lam_nz) + nonlocal_gap - 1.0
        per_mode_min = float(q.min())
        margin = per_mode_min
        admissible = g0 > 0.0 and margin >= 0.0
    elif cfg.scheme == "ssi1":
        q = 1.0 / (cfg.tau * lam_nz) + cfg.stabilization + nonlocal_gap
        per_mode_min = float(q.min())
        margin = cfg.stabilization - 0.5 * beta
        admissible = g0 > 0.0 and margin >= 0.0 and per_mode_min > 0.0
    else:  # two_li
        q = 2.0 / (cfg.tau * lam_nz) + nonlocal_gap - 3.0 * beta
        per_mode_min = float(q.min())
        closed_form = (g0 + 1.0) / 3.0 - beta
        margin = min(closed_form, per_mode_min)
        admissible = g0 > 0.0 and closed_form >= 0.0 and per_mode_min >= 0.0

    if g0 <= 0.0:
        note = f"gamma0 = {g0!r} <= 0 violates the positive-diffusivity assumption"
    elif margin == 0.0:
        note = "margin is exactly 0: admissibility is decided at the sharp boundary"

    literal = None
    if kernel_constant is not None and kernel_constant > 0.0:
        if cfg.scheme in ("backward_euler", "bdf2"):
            literal = 2.0 * g0 / (kernel_constant * cfg.epsilon**4)
        elif cfg.scheme == "two_li":
            literal = 2.0 * (g0 + 1.0 - 3.0 * beta) / (kernel_constant * cfg.epsilon**4)

    return SolvabilityReport(
        scheme=cfg.scheme,
        tau=cfg.tau,
        gamma0=g0,
        conv_one=kernel.conv_one,
        beta=beta,
        stabilization=cfg.stabilization,
        admissible=admissible,
        margin=float(margin),
        per_mode_min=float(per_mode_min),
        note=note,
        literal_tau_bound=literal,
    )


def _apply_policy(cfg: SchemeConfig, kernel: SampledKernel, cache: SpectralCache):
    if cfg.stability_policy == "ignore":
        return
    report = check_solvability(cfg, kernel, cache)
    if report.admissible:
        return
    message = (
        f"{cfg.scheme} inadmissible at tau = {cfg.tau}: margin = {report.margin:.6e}, "
        f"gamma0 = {report.gamma0:.6e}. {report.note}".rstrip()
    )
    if cfg.stability_policy == "enforce":
        raise StabilityError(message)
    warnings.warn(message, RuntimeWarning, stacklevel=3)


def _weighted_norm(h: float):
    return lambda r: h * float(np.sqrt(np.sum(r * r, dtype=np.longdouble)))


def _snap_mass(values: np.ndarray, target: float) -> np.ndarray:
    return values + (target - float(np.sum(values, dtype=np.longdouble)) / values.size)


def _omega_values(u, kernel, eps2, pot):
    return potential_d1(pot, u) + eps2 * (kernel.conv_one * u - convolve_values(kernel, u))


def _implicit_potential_solve(a: float, rhs: np.ndarray, u_init: np.ndarray,
                              cfg: SchemeConfig, kernel: SampledKernel,
                              cache: SpectralCache, pot: PotentialSpec):
    """Newton solve of a u - Lap(omega(u)) = rhs shared by the implicit schemes."""
    h = cache.geometry.h
    eps2 = cfg.epsilon**2
    lam = cache.minus_laplacian_eigenvalues

    def residual(u):
        return a * u - rhs - laplacian_apply(_omega_values(u, kernel, eps2, pot), h)

    def jacobian(u, v):
        curv = potential_d2(pot, u)
        jv = (curv + eps2 * kernel.conv_one) * v - eps2 * convolve_values(kernel, v)
        return a * v - laplacian_apply(jv, h)

    # Frozen-coefficient symbol: cubic term dropped, local slope -1 kept.
    coef = eps2 * (kernel.conv_one - kernel.symbol) - 1.0
    symbol = a + lam * coef
    bad = symbol <= 0.0
    if bad.any():
        symbol = np.where(bad, a + lam * np.maximum(coef, 0.0), symbol)

    return newton_solve(residual, jacobian, u_init, cfg.newton_tol, cfg.newton_max_iter,
                        spectral_preconditioner(symbol), cfg.krylov_tol, _weighted_norm(h))


def step_backward_euler(state: SchemeState, cfg: SchemeConfig, kernel: SampledKernel,
                        cache: SpectralCache) -> StepResult:
    """One fully implicit step; nonlinear solve with the previous level as guess."""
    _apply_policy(cfg, kernel, cache)
    pot = cfg.potential
    u_n = state.u.values
    target = mean(state.u)
    u_vals, iters, _ = _implicit_potential_solve(
        1.0 / cfg.tau, u_n / cfg.tau, u_n, cfg, kernel, cache, pot)
    u_vals = _snap_mass(u_vals, target)
    u_next = Field(state.u.geometry, u_vals)
    omega = Field(state.u.geometry, _omega_values(u_vals, kernel, cfg.epsilon**2, pot))
    return StepResult(u_next, omega, iters)


def step_convex_splitting(state: SchemeState, cfg: SchemeConfig, kernel: SampledKernel,
                          cache: SpectralCache) -> StepResult:
    """One convex-splitting step: cubic and strong quadratic implicit, rest explicit.

    Unconditionally uniquely solvable; dissipates the plain energy for every
    step size.
    """
    _apply_policy(cfg, kernel, cache)
    h = cache.geometry.h
    eps2 = cfg.epsilon**2
    tau = cfg.tau
    u_n = state.u.values
    target = mean(state.u)

    # Explicit part of the chemical potential, fixed during the solve.
    explicit = u_n + eps2 * (kernel.conv_one * u_n + convolve_values(kernel, u_n))

    def omega_of(u):
        return u**3 + 2.0 * eps2 * kernel.conv_one * u - explicit

    def residual(u):
        return (u - u_n) / tau - laplacian_apply(omega_of(u), h)

    def jacobian(u, v):
        return v / tau - laplacian_apply((3.0 * u**2 + 2.0 * eps2 * kernel.conv_one) * v, h)

    lam = cache.minus_laplacian_eigenvalues
    symbol = 1.0 / tau + 2.0 * eps2 * kernel.conv_one * lam
    u_vals, iters, _ = newton_solve(residual, jacobian, u_n, cfg.newton_tol,
                                    cfg.newton_max_iter, spectral_preconditioner(symbol),
                                    cfg.krylov_tol, _weighted_norm(h))
    u_vals = _snap_mass(u_vals, target)
    u_next = Field(state.u.geometry, u_vals)
    omega = Field(state.u.geometry, omega_of(u_vals))
    return StepResult(u_next, omega, iters)


def _linear_spectral_solve(numerator_hat: np.ndarray, denominator: np.ndarray,
                           zero_mode: complex, geometry: GridGeometry,
                           target_mass: float) -> np.ndarray:
    if denominator.min() <= 0.0:
        raise ConfigError(
            "non-positive modal denominator in the linear solve; "
            "the kernel/stabilization configuration is outside the solvable regime"
        )
    u_hat = numerator_hat / denominator
    u_hat[0, 0] = zero_mode
    return _snap_mass(np.fft.ifft2(u_hat).real, target_mass)


def step_ssi1(state: SchemeState, cfg: SchemeConfig, kernel: SampledKernel,
              cache: SpectralCache) -> StepResult:
    """One stabilized linear semi-implicit step (single DFT-diagonal solve)."""
    _apply_policy(cfg, kernel, cache)
    pot = cfg.potential
    eps2 = cfg.epsilon**2
    tau, s = cfg.tau, cfg.stabilization
    lam = cache.minus_laplacian_eigenvalues
    u_n = state.u.values
    target = mean(state.u)

    f_explicit = potential_d1(pot, u_n)
    u_hat = np.fft.fft2(u_n)
    numerator = u_hat / tau - lam * (np.fft.fft2(f_explicit) - s * u_hat)
    denominator = 1.0 / tau + lam * (s + eps2 * (kernel.conv_one - kernel.symbol))
    u_vals = _linear_spectral_solve(numerator, denominator, u_hat[0, 0],
                                    state.u.geometry, target)
    u_next = Field(state.u.geometry, u_vals)
    omega_vals = f_explicit + s * (u_vals - u_n) \
        + eps2 * (kernel.conv_one * u_vals - convolve_values(kernel, u_vals))
    return StepResult(u_next, Field(state.u.geometry, omega_vals), 0)


def _require_history(state: SchemeState, scheme: str) -> Field:
    if state.u_prev is None:
        raise StateError(f"{scheme} needs the previous level u_prev; bootstrap the state first")
    return state.u_prev


def step_bdf2(state: SchemeState, cfg: SchemeConfig, kernel: SampledKernel,
              cache: SpectralCache) -> StepResult:
    """One two-step backward-differentiation step with implicit potential."""
    u_prev = _require_history(state, "bdf2")
    _apply_policy(cfg, kernel, cache)
    pot = cfg.potential
    tau = cfg.tau
    u_n = state.u.values
    target = mean(state.u)
    rhs = (4.0 * u_n - u_prev.values) / (2.0 * tau)
    u_vals, iters, _ = _implicit_potential_solve(
        3.0 / (2.0 * tau), rhs, u_n, cfg, kernel, cache, pot)
    u_vals = _snap_mass(u_vals, target)
    u_next = Field(state.u.geometry, u_vals)
    omega = Field(state.u.geometry, _omega_values(u_vals, kernel, cfg.epsilon**2, pot))
    return StepResult(u_next, omega, iters)


def step_two_li(state: SchemeState, cfg: SchemeConfig, kernel: SampledKernel,
                cache: SpectralCache) -> StepResult:
    """One linearly implicit two-step step with extrapolated nonlinearity."""
    u_prev = _require_history(state, "two_li")
    _apply_policy(cfg, kernel, cache)
    pot = cfg.potential
    eps2 = cfg.epsilon**2
    tau = cfg.tau
    lam = cache.minus_laplacian_eigenvalues
    u_n = state.u.values
    target = mean(state.u)

    extrapolated = 2.0 * potential_d1(pot, u_n) - potential_d1(pot, u_prev.values)
    u_hat = np.fft.fft2(u_n)
    u_hat_prev = np.fft.fft2(u_prev.values)
    numerator = (4.0 * u_hat - u_hat_prev) / (2.0 * tau) - lam * np.fft.fft2(extrapolated)
    denominator = 3.0 / (2.0 * tau) + lam * eps2 * (kernel.conv_one - kernel.symbol)
    zero_mode = (4.0 * u_hat[0, 0] - u_hat_prev[0, 0]) / 3.0
    u_vals = _linear_spectral_solve(numerator, denominator, zero_mode,
                                    state.u.geometry, target)
    u_next = Field(state.u.geometry, u_vals)
    omega_vals = extrapolated + eps2 * (kernel.conv_one * u_vals - convolve_values(kernel, u_vals))
    return StepResult(u_next, Field(state.u.geometry, omega_vals), 0)


STEP_FUNCTIONS = {
    "backward_euler": step_backward_euler,
    "convex_splitting": step_convex_splitting,
    "ssi1": step_ssi1,
    "bdf2": step_bdf2,
    "two_li": step_two_li,
}


def bootstrap_config(cfg: SchemeConfig) -> SchemeConfig:
    """First-order startup scheme for the two-step methods.

    BDF2 starts with one backward-Euler step, the linearly implicit scheme
    with one stabilized semi-implicit step (stabilization raised to beta/2
    if needed); either preserves mass, which is all the two-step stability
    results require of the starting pair.
    """
    if cfg.scheme == "bdf2":
        return replace(cfg, scheme="backward_euler")
    if cfg.scheme == "two_li":
        return replace(cfg, scheme="ssi1",
                       stabilization=max(cfg.stabilization, 0.5 * cfg.beta))
    raise ConfigError(f"{cfg.scheme} is a one-step scheme and needs no bootstrap")


def advance(state: SchemeState, cfg: SchemeConfig, kernel: SampledKernel,
            cache: SpectralCache) -> tuple[SchemeState, StepResult]:
    """Advance one step, bootstrapping a fresh two-step state transparently."""
    if cfg.scheme in TWO_STEP_SCHEMES and state.u_prev is None:
        startup = bootstrap_config(cfg)
        result = STEP_FUNCTIONS[startup.scheme](state, startup, kernel, cache)
    else:
        result = STEP_FUNCTIONS[cfg.scheme](state, cfg, kernel, cache)
    keep_prev = state.u if cfg.scheme in TWO_STEP_SCHEMES else None
    next_state = SchemeState(
        u=result.u,
        u_prev=keep_prev,
        omega=result.omega,
        step_index=state.step_index + 1,
        time=state.time + cfg.tau,
    )
    return next_state, result
