"""Backward stochastic difference equations on the lattice.

Solves, for given terminal data y measurable at stage N,

    Y_n + Z_n eta_n = Y_{n+1} + f(n+1, Y_{n+1}, Z_{n+1})
                      + g(n+1, Y_{n+1}, Z_{n+1}) xi_{n+1},      Y_N = y,

with Z_N = 0.  The right-hand side is generally not representable as an
affine function of eta_n given level-n information, so the solver uses
projections: with M = E[RHS | level n+1],

    Y_n = E[M | level n],   Z_n = E[eta_n M | level n],
    R_n = M - Y_n - Z_n eta_n.

R_n is the representation residual at level n+1; by construction
E[R_n | level n] = 0 and E[eta_n R_n | level n] = 0, and both are
reported so violations of the affine representation never pass silently.

When the stage-N noise coefficient vanishes (`terminal_noise_free`) a
depth-N lattice suffices; otherwise xi_N is needed and the lattice must
extend one stage past the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import ControlProcess, ModelSpec, StateProcess, _stage_value
from .errors import DepthMismatch, NonFiniteValue, TerminalConditionViolated
from .lattice import (
    AdaptedValue,
    NoiseLattice,
    as_adapted,
    condexp,
    noise_value,
    white_value,
)
from .noise import WhiteningBasis

Driver = Callable[[int, AdaptedValue, AdaptedValue], AdaptedValue | float | np.ndarray]


@dataclass(frozen=True)
class DriverSpec:
    """Terminal data plus stage drivers f, g for stages 1..horizon.

    f and g are called as f(n, y, z) with y, z adapted values; the stage-
    horizon f must not depend on z (the solver passes Z_N = 0 there).
    Set `terminal_noise_free` when g at the final stage vanishes
    identically, which drops the xi_N term and the extra lattice stage.
    """

    horizon: int
    terminal: AdaptedValue
    f: Driver
    g: Driver
    terminal_noise_free: bool

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.terminal.level != self.horizon:
            raise DepthMismatch(
                f"terminal data at level {self.terminal.level}, expected {self.horizon}"
            )


@dataclass(frozen=True)
class BsdeSolution:
    """Backward solution: Y_n (levels 0..N), Z_n and R_n (stages 0..N-1).

    Z_n sits at level n; R_n is the level-(n+1) representation residual.
    """

    y: tuple[AdaptedValue, ...]
    z: tuple[AdaptedValue, ...]
    r: tuple[AdaptedValue, ...]

    @property
    def horizon(self) -> int:
        return len(self.y) - 1


def solve_bsde(driver: DriverSpec, lat: NoiseLattice) -> BsdeSolution:
    """Solve the backward equation on the lattice by exact projections."""
    n_stages = driver.horizon
    needed = n_stages if driver.terminal_noise_free else n_stages + 1
    if lat.depth < needed:
        raise DepthMismatch(
            f"lattice depth {lat.depth} < {needed} required "
            f"(terminal_noise_free={driver.terminal_noise_free})"
        )
    if driver.terminal.lattice is not lat:
        raise DepthMismatch("terminal data lives on a different lattice")

    y: list[AdaptedValue | None] = [None] * (n_stages + 1)
    z: list[AdaptedValue | None] = [None] * n_stages
    r: list[AdaptedValue | None] = [None] * n_stages
    y[n_stages] = driver.terminal

    for n in range(n_stages - 1, -1, -1):
        s = n + 1
        z_arg = lat.constant(0.0, n_stages) if s == n_stages else z[s]
        rhs = y[s] + as_adapted(lat, s, driver.f(s, y[s], z_arg))
        if s < n_stages or not driver.terminal_noise_free:
            rhs = rhs + noise_value(lat, s) * as_adapted(lat, s, driver.g(s, y[s], z_arg))
        projected = condexp(rhs, s)
        eta = white_value(lat, n)
        y[n] = condexp(projected, n)
        z[n] = condexp(eta * projected, n)
        r[n] = projected - y[n] - z[n] * eta
        for name, val in (("Y", y[n]), ("Z", z[n])):
            if not np.all(np.isfinite(val.values)):
                raise NonFiniteValue(f"{name}_{n} is non-finite")
    return BsdeSolution(y=tuple(y), z=tuple(z), r=tuple(r))


def residual_orthogonality(sol: BsdeSolution, lat: NoiseLattice) -> tuple[float, float]:
    """Worst nodewise |E[R_n|level n]| and |E[eta_n R_n|level n]|."""
    worst_mean = 0.0
    worst_eta = 0.0
    for n, res in enumerate(sol.r):
        eta = white_value(lat, n)
        worst_mean = max(worst_mean, float(np.max(np.abs(condexp(res, n).values))))
        worst_eta = max(worst_eta, float(np.max(np.abs(condexp(eta * res, n).values))))
    return worst_mean, worst_eta


def adjoint_driver(
    model: ModelSpec,
    u_star: ControlProcess,
    x_star: StateProcess,
    basis: WhiteningBasis,
) -> DriverSpec:
    """Adjoint backward equation along a reference pair (u*, X*).

    Terminal data is phi_x(X*_N); for stages 1 <= k <= N-1,

        f(k, p, q) = b_x*(k) p + b[k,k] sigma_x*(k) q + l_x*(k),
        g(k, p, q) = sigma_x*(k) p,

    with coefficients frozen along the reference pair.  Stage-N
    coefficients vanish because b, sigma, l vanish at the final stage;
    this is spot checked on the derivative callables before trusting it.
    """
    n_stages = model.horizon
    if x_star.horizon != n_stages or u_star.horizon != n_stages:
        raise DepthMismatch("reference pair does not match the model horizon")
    if basis.size < n_stages:
        raise DepthMismatch(f"basis covers {basis.size} stages, need {n_stages}")
    lat = x_star.lattice

    rng = np.random.default_rng(1729)
    xs = 2.0 * rng.standard_normal(8)
    us = 2.0 * rng.standard_normal(8)
    for name in ("b_x", "sigma_x", "l_x"):
        vals = np.asarray(getattr(model, name)(n_stages, xs, us), dtype=np.float64)
        if np.max(np.abs(vals)) > 1e-12:
            raise TerminalConditionViolated(
                f"{name} must vanish at stage {n_stages} for the adjoint equation"
            )

    # Coefficients at stage k use (X*_k, u*_k); k runs over 1..N-1 where
    # a control exists.  Stage N never contributes.
    coeff: dict[str, list[AdaptedValue | None]] = {"b_x": [None] * n_stages,
                                                   "sigma_x": [None] * n_stages,
                                                   "l_x": [None] * n_stages}
    for k in range(1, n_stages):
        xk, uk = x_star[k], u_star[k]
        for name in coeff:
            coeff[name][k] = _stage_value(
                lat, k, getattr(model, name)(k, xk.values, uk.values)
            )

    b_diag = np.diag(basis.b_mat)

    def f(k, p, q):
        if k == n_stages:
            return lat.constant(0.0, k)
        return coeff["b_x"][k] * p + b_diag[k] * (coeff["sigma_x"][k] * q) + coeff["l_x"][k]

    def g(k, p, q):
        if k == n_stages:
            return lat.constant(0.0, k)
        return coeff["sigma_x"][k] * p

    terminal = _stage_value(lat, n_stages, model.phi_x(x_star[n_stages].values))
    return DriverSpec(
        horizon=n_stages, terminal=terminal, f=f, g=g, terminal_noise_free=True
    )
