"""Builtin benchmark problems with manufactured exact solutions.

``ex51``
    Derivative study of ``U(t) = t**(4 + alpha)`` on ``[0, 1]``.
``ex52``
    ``D = A = 1`` on ``(0, 1)**2`` with exact ``U = exp(x) t**(6 + alpha)``.
``ex54``
    ``D = A = 1`` with exact ``U = t**7 sin(x)``.
``exp_t5``
    ``D = A = 1`` with exact ``U = exp(x) t**(5 + alpha)``, the classical-case
    benchmark used for cross-validation against an earlier cubic scheme.

The PDE problems are manufactured for ``zeta(t) = t`` and ``omega = 1``; their
exact solutions are only attached in that case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .exceptions import ConfigError
from .functions import GridFunction1D
from .pde import AdvectionDiffusionProblem
from .weights import gamma

Field = Callable[[np.ndarray, float], np.ndarray]

BUILTIN_NAMES = ("ex51", "ex52", "ex54", "exp_t5")


@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact solution with the partial derivatives needed to check its source."""

    u: Field
    caputo_t: Field
    u_x: Field
    u_xx: Field


@dataclass(frozen=True)
class BuiltinProblem:
    """A named benchmark.

    ``kind`` is ``"derivative"`` (only ``exponent`` is meaningful: the study
    differentiates ``t**exponent``) or ``"pde"``.
    """

    name: str
    alpha: float
    kind: str
    exponent: float | None = None
    problem: AdvectionDiffusionProblem | None = None
    solution: ManufacturedSolution | None = None

    @property
    def exact(self) -> Field | None:
        return None if self.solution is None else self.solution.u

    def self_check(self, samples: int = 20, seed: int = 0) -> float | None:
        """Largest PDE residual of the exact solution at random interior points.

        Returns ``None`` when no analytic check is possible.
        """
        if self.problem is None or self.solution is None:
            return None
        p, s = self.problem, self.solution
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            x = np.array([rng.uniform(0, p.a)])
            t = float(rng.uniform(0.05 * p.T, p.T))
            lhs = s.caputo_t(x, t)
            rhs = p.D * s.u_xx(x, t) - p.A * s.u_x(x, t) + p.source(x, t)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst

    def homogeneous(self) -> BuiltinProblem:
        """Same problem with zero source, boundary and initial data."""
        if self.problem is None:
            raise ConfigError(f"{self.name} has no PDE data to zero")
        zero_t = lambda t: 0.0  # noqa: E731
        p = replace(
            self.problem,
            source=lambda x, t: np.zeros_like(x),
            U0=lambda x: np.zeros_like(x),
            rho1=zero_t,
            rho2=zero_t,
            U0_x=None,
            U0_xx=None,
        )
        zero = lambda x, t: np.zeros_like(x)  # noqa: E731
        return replace(self, problem=p, solution=ManufacturedSolution(zero, zero, zero, zero))


def _exp_power(alpha: float, q: float) -> tuple[Field, ManufacturedSolution]:
    """Source and solution for ``U = exp(x) t**q`` with ``D = A = 1``."""
    c = gamma(q + 1) / gamma(q + 1 - alpha)

    def u(x, t):
        return np.exp(x) * t**q

    def caputo(x, t):
        return np.exp(x) * c * t ** (q - alpha)

    # D u_xx - A u_x vanishes, so the source is the time derivative alone.
    return caputo, ManufacturedSolution(u, caputo, u, u)


def _sin_t7(alpha: float) -> tuple[Field, ManufacturedSolution]:
    c = gamma(8) / gamma(8 - alpha)

    def u(x, t):
        return t**7 * np.sin(x)

    def caputo(x, t):
        return c * t ** (7 - alpha) * np.sin(x)

    def u_x(x, t):
        return t**7 * np.cos(x)

    def u_xx(x, t):
        return -(t**7) * np.sin(x)

    def source(x, t):
        return c * t ** (7 - alpha) * np.sin(x) + t**7 * (np.sin(x) + np.cos(x))

    return source, ManufacturedSolution(u, caputo, u_x, u_xx)


def builtin_problem(
    name: str,
    alpha: float,
    scale: GridFunction1D | None = None,
    weight: GridFunction1D | None = None,
) -> BuiltinProblem:
    """Look up a builtin benchmark.

    ``scale`` and ``weight`` default to ``t`` and ``1``.  For the PDE problems
    any other choice keeps the data but drops the exact solution.

    Raises
    ------
    ConfigError
        Unknown name or ``alpha`` outside ``(0, 1)``.
    """
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    scale = scale if scale is not None else GridFunction1D.identity()
    weight = weight if weight is not None else GridFunction1D.constant(1.0)
    if name == "ex51":
        return BuiltinProblem(name, alpha, "derivative", exponent=4 + alpha)
    if name in ("ex52", "exp_t5"):
        q = 6 + alpha if name == "ex52" else 5 + alpha
        source, sol = _exp_power(alpha, q)
        rho1 = lambda t: t**q  # noqa: E731
        rho2 = lambda t: math.e * t**q  # noqa: E731
    elif name == "ex54":
        source, sol = _sin_t7(alpha)
        rho1 = lambda t: 0.0  # noqa: E731
        rho2 = lambda t: t**7 * math.sin(1.0)  # noqa: E731
    else:
        raise ConfigError(f"unknown builtin problem {name!r}; choose from {BUILTIN_NAMES}")
    problem = AdvectionDiffusionProblem(
        alpha=alpha,
        D=1.0,
        A=1.0,
        scale=scale,
        weight=weight,
        source=source,
        U0=lambda x: np.zeros_like(x),
        rho1=rho1,
        rho2=rho2,
    )
    classical = scale == GridFunction1D.identity() and weight.kind == "constant"
    return BuiltinProblem(name, alpha, "pde", problem=problem, solution=sol if classical else None)
