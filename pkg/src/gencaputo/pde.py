"""Implicit solver for the generalized time-fractional advection-diffusion equation.

The problem

.. math::

    D^\\alpha_{[\\zeta,\\omega]} U = D\\,U_{xx} - A\\,U_x + g(x, t),
    \\quad U(x, 0) = U_0(x),\\quad U(0, t) = \\rho_1(t),\\quad U(a, t) = \\rho_2(t)

is first rewritten for :math:`u = \\omega(t) U - \\omega(0) U_0(x)`, which has
zero initial data and obeys the same equation with unit weight and source

.. math::

    f = D\\,\\omega(0) U_0'' - A\\,\\omega(0) U_0' + \\omega(t)\\, g.

Each time level then needs one tridiagonal solve with central differences in
space and the high-order weights in time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import (
    ConfigError,
    DegenerateGridError,
    DivisionDegeneracyError,
    DominanceError,
)
from .functions import GridFunction1D, ScaleWeightPair, SpaceGrid, TimeGrid
from .weights import LambdaWeights, Method, lambda_table

SpaceFn = Callable[[np.ndarray], np.ndarray]
TimeFn = Callable[[float], float]
SourceFn = Callable[[np.ndarray, float], np.ndarray]

COMPATIBILITY_TOL = 1e-10


@dataclass(frozen=True)
class AdvectionDiffusionProblem:
    """Data of one advection-diffusion problem.

    ``source(x, t)`` and ``U0(x)`` take an array of positions; ``rho1`` and
    ``rho2`` take a scalar time.  ``U0_x`` and ``U0_xx`` are optional analytic
    derivatives of the initial condition.
    """

    alpha: float
    D: float
    A: float
    scale: GridFunction1D
    weight: GridFunction1D
    source: SourceFn
    U0: SpaceFn
    rho1: TimeFn
    rho2: TimeFn
    a: float = 1.0
    T: float = 1.0
    U0_x: SpaceFn | None = None
    U0_xx: SpaceFn | None = None

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.D > 0:
            raise ConfigError(f"D must be positive, got {self.D}")
        if not self.A >= 0:
            raise ConfigError(f"A must be non-negative, got {self.A}")
        ends = np.asarray(self.U0(np.array([0.0, self.a])), dtype=np.float64)
        for end, rho, name in ((ends[0], self.rho1, "x=0"), (ends[1], self.rho2, "x=a")):
            if abs(end - rho(0.0)) > COMPATIBILITY_TOL:
                raise ConfigError(f"initial and boundary data disagree at {name}, t=0")


@dataclass(frozen=True)
class TransformedProblem:
    """Unit-weight problem sampled on the grids, with zero initial data.

    ``f`` has shape ``(M + 1, N + 1)``; ``phi1`` and ``phi2`` have ``N + 1``
    entries and vanish at ``t = 0``.
    """

    alpha: float
    D: float
    A: float
    pair: ScaleWeightPair
    space: SpaceGrid
    f: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray

    @property
    def time(self) -> TimeGrid:
        return self.pair.grid


@dataclass(frozen=True)
class TridiagonalSystem:
    """Rows ``lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]``.

    ``lower`` and ``upper`` have one entry fewer than ``diag``.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    def dominance_margin(self) -> np.ndarray:
        """``|diag| - |lower| - |upper|`` per row; positive means dominant."""
        off = np.zeros_like(self.diag)
        off[1:] += np.abs(self.lower)
        off[:-1] += np.abs(self.upper)
        return np.abs(self.diag) - off

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.lower * x[:-1]
        y[:-1] += self.upper * x[1:]
        return y

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower, -1) + np.diag(self.upper, 1)


@dataclass(frozen=True)
class SolutionField:
    """Values on the space-time grid, ``values[i, n]`` at ``(x_i, t_n)``."""

    space: SpaceGrid
    time: TimeGrid
    values: np.ndarray

    def at_level(self, n: int) -> np.ndarray:
        return self.values[:, n]

    @property
    def final(self) -> np.ndarray:
        return self.values[:, -1]


def _second_derivative_fd(v: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
    out[0] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h**2
    out[-1] = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / h**2
    return out


def transform_problem(
    p: AdvectionDiffusionProblem,
    space: SpaceGrid,
    time: TimeGrid,
    allow_fd: bool = True,
) -> TransformedProblem:
    """Rewrite ``p`` for ``u = omega(t) U - omega(0) U0`` and sample it.

    When ``U0`` is not identically zero its derivatives enter the source.
    Analytic ``U0_x``/``U0_xx`` are used if given.  Otherwise second-order
    finite differences on ``space`` are used if ``allow_fd`` is set.

    Raises
    ------
    ConfigError
        ``U0`` derivatives are needed, missing, and differencing is disallowed.
    """
    if p.T != time.T or p.a != space.a:
        raise ConfigError("grids do not cover the problem domain")
    x, t = space.nodes, time.nodes
    pair = ScaleWeightPair.on_grid(p.scale, p.weight, time)
    omega = pair.omega
    u0 = np.asarray(p.U0(x), dtype=np.float64) * np.ones_like(x)
    f = np.empty((x.size, t.size), order="F")
    for n in range(t.size):
        f[:, n] = omega[n] * np.asarray(p.source(x, float(t[n])), dtype=np.float64)
    if np.any(u0 != 0):
        if p.U0_x is not None and p.U0_xx is not None:
            ux = np.asarray(p.U0_x(x), dtype=np.float64) * np.ones_like(x)
            uxx = np.asarray(p.U0_xx(x), dtype=np.float64) * np.ones_like(x)
        elif allow_fd:
            if space.M < 3:
                raise DegenerateGridError("finite-difference derivatives need M >= 3")
            ux = np.gradient(u0, space.h, edge_order=2)
            uxx = _second_derivative_fd(u0, space.h)
        else:
            raise ConfigError("initial-condition derivatives are required but not supplied")
        f += (omega[0] * (p.D * uxx - p.A * ux))[:, None]
    rho1 = np.array([p.rho1(float(tn)) for tn in t])
    rho2 = np.array([p.rho2(float(tn)) for tn in t])
    phi1 = omega * rho1 - omega[0] * rho1[0]
    phi2 = omega * rho2 - omega[0] * rho2[0]
    for arr in (f, phi1, phi2):
        arr.setflags(write=False)
    return TransformedProblem(
        alpha=p.alpha,
        D=p.D,
        A=p.A,
        pair=pair.with_unit_weight(),
        space=space,
        f=f,
        phi1=phi1,
        phi2=phi2,
    )


def stencil(D: float, A: float, h: float) -> tuple[float, float, float]:
    """``(lower, -2 D / h**2, upper)`` of the central-difference operator."""
    return D / h**2 + A / (2 * h), -2 * D / h**2, D / h**2 - A / (2 * h)


def assemble_step(
    tp: TransformedProblem, n: int, history: np.ndarray, lam: LambdaWeights
) -> TridiagonalSystem:
    """System for the interior values of ``u`` at level ``n``.

    ``history`` holds the full columns ``u_0..u_{n-1}`` as shape ``(M + 1, n)``.
    The row for node ``i`` is

    .. math::

        (\\tfrac{D}{h^2}+\\tfrac{A}{2h}) u^{i-1}_n - (\\lambda_0+\\tfrac{2D}{h^2}) u^i_n
        + (\\tfrac{D}{h^2}-\\tfrac{A}{2h}) u^{i+1}_n
        = \\sum_{l=0}^{n-1}\\lambda_{n-l} u^i_l - f^i_n

    with the known boundary values moved to the right-hand side.

    Raises
    ------
    DegenerateGridError
        ``M < 3``.
    DominanceError
        A row is not strictly diagonally dominant.
    """
    M = tp.space.M
    if M < 3:
        raise DegenerateGridError(f"at least three subintervals are needed, got M={M}")
    if lam.n != n or history.shape != (M + 1, n):
        raise ValueError("weights or history do not match the time level")
    lo, mid, up = stencil(tp.D, tp.A, tp.space.h)
    lam0 = lam.values[0]
    rhs = history[1:M, :] @ lam.values[n:0:-1] - tp.f[1:M, n]
    rhs[0] -= lo * tp.phi1[n]
    rhs[-1] -= up * tp.phi2[n]
    system = TridiagonalSystem(
        lower=np.full(M - 2, lo),
        diag=np.full(M - 1, mid - lam0),
        upper=np.full(M - 2, up),
        rhs=rhs,
    )
    _require_dominance(system)
    return system


def _require_dominance(system: TridiagonalSystem) -> None:
    margin = system.dominance_margin()
    if not np.all(margin > 0):
        row = int(np.argmin(margin))
        raise DominanceError(f"row {row} is not strictly diagonally dominant")


def thomas_solve(system: TridiagonalSystem) -> np.ndarray:
    """Forward elimination and back substitution without pivoting.

    Raises
    ------
    DominanceError
        The system is not strictly diagonally dominant.
    """
    _require_dominance(system)
    lower = system.lower.tolist()
    diag = system.diag.tolist()
    upper = system.upper.tolist()
    rhs = system.rhs.tolist()
    m = len(diag)
    cp = [0.0] * m
    dp = [0.0] * m
    denom = diag[0]
    cp[0] = upper[0] / denom if m > 1 else 0.0
    dp[0] = rhs[0] / denom
    for i in range(1, m):
        denom = diag[i] - lower[i - 1] * cp[i - 1]
        if i < m - 1:
            cp[i] = upper[i] / denom
        dp[i] = (rhs[i] - lower[i - 1] * dp[i - 1]) / denom
    x = dp
    for i in range(m - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return np.array(x)


def time_march(
    tp: TransformedProblem,
    weights: Sequence[LambdaWeights] | None = None,
    method: Method = "stable",
) -> SolutionField:
    """March the transformed problem from zero data to ``T``.

    ``weights`` may carry a precomputed unit-weight
    :func:`~gencaputo.weights.lambda_table` for ``tp.pair``.
    """
    M, N = tp.space.M, tp.time.N
    table = weights if weights is not None else lambda_table(tp.pair, tp.alpha, method)
    u = np.zeros((M + 1, N + 1), order="F")
    for n in range(1, N + 1):
        system = assemble_step(tp, n, u[:, :n], table[n - 1])
        u[1:M, n] = thomas_solve(system)
        u[0, n] = tp.phi1[n]
        u[M, n] = tp.phi2[n]
    u.setflags(write=False)
    return SolutionField(tp.space, tp.time, u)


def recover_original(u: SolutionField, p: AdvectionDiffusionProblem) -> SolutionField:
    """Invert ``u = omega(t) U - omega(0) U0`` and impose the boundary data.

    Raises
    ------
    DivisionDegeneracyError
        ``omega(t_n) = 0`` at some level ``n >= 1``.
    """
    x, t = u.space.nodes, u.time.nodes
    omega = np.asarray(p.weight(t), dtype=np.float64) * np.ones_like(t)
    if np.any(omega[1:] == 0):
        raise DivisionDegeneracyError("weight vanishes at a time level")
    u0 = np.asarray(p.U0(x), dtype=np.float64) * np.ones_like(x)
    U = np.empty_like(u.values, order="F")
    U[:, 0] = u0
    U[:, 1:] = (u.values[:, 1:] + omega[0] * u0[:, None]) / omega[1:]
    U[0, 1:] = [p.rho1(float(tn)) for tn in t[1:]]
    U[-1, 1:] = [p.rho2(float(tn)) for tn in t[1:]]
    U.setflags(write=False)
    return SolutionField(u.space, u.time, U)


def solve(
    p: AdvectionDiffusionProblem,
    space: SpaceGrid,
    time: TimeGrid,
    weights: Sequence[LambdaWeights] | None = None,
) -> SolutionField:
    """Transform, march and back-transform in one call."""
    tp = transform_problem(p, space, time)
    return recover_original(time_march(tp, weights), p)

