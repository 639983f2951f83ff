"""Scale and weight functions, uniform grids, and hypothesis checks.

Scale (``zeta``) and weight (``omega``) functions are symbolic descriptors
that are only ever evaluated at grid nodes.  Every discretisation formula in
this package needs nothing but the node values, so no inverse or derivative
of a descriptor is ever formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, NamedTuple

import numpy as np

from .exceptions import ConfigError, DomainError, GridMismatchError

# Keyword names accepted for each descriptor kind, in positional order.
_PARAMS: dict[str, tuple[str, ...]] = {
    "identity": (),
    "constant": ("value",),
    "affine": ("p", "q"),
    "power": ("sigma",),
    "exponential": ("k",),
    "tabulated": ("values", "T"),
}


def _readonly(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_n = n * tau`` on ``[0, T]`` with ``N`` subintervals."""

    T: float
    N: int

    def __post_init__(self) -> None:
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise DomainError(f"T must be positive and finite, got {self.T!r}")

    @property
    def tau(self) -> float:
        return self.T / self.N

    @cached_property
    def nodes(self) -> np.ndarray:
        t = np.arange(self.N + 1, dtype=np.float64) * self.tau
        t[-1] = self.T
        return _readonly(t)


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform grid ``x_i = i * h`` on ``[0, a]`` with ``M`` subintervals."""

    a: float
    M: int

    def __post_init__(self) -> None:
        if not isinstance(self.M, (int, np.integer)) or self.M < 1:
            raise DomainError(f"M must be a positive integer, got {self.M!r}")
        if not (self.a > 0 and math.isfinite(self.a)):
            raise DomainError(f"a must be positive and finite, got {self.a!r}")

    @property
    def h(self) -> float:
        return self.a / self.M

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.M + 1, dtype=np.float64) * self.h
        x[-1] = self.a
        return _readonly(x)


@dataclass(frozen=True)
class GridFunction1D:
    """A scalar function of one variable given by a named closed form.

    Use the constructors (:meth:`identity`, :meth:`affine`, :meth:`power`,
    :meth:`exponential`, :meth:`constant`, :meth:`tabulated`) rather than the
    raw fields.  A tabulated function only knows its values on the grid it was
    declared with and refuses to interpolate.
    """

    kind: str
    coeffs: tuple[float, ...] = ()
    table: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in _PARAMS:
            raise ConfigError(f"unknown function kind {self.kind!r}")

    @classmethod
    def identity(cls) -> GridFunction1D:
        return cls("identity")

    @classmethod
    def constant(cls, value: float) -> GridFunction1D:
        return cls("constant", (float(value),))

    @classmethod
    def affine(cls, p: float, q: float) -> GridFunction1D:
        return cls("affine", (float(p), float(q)))

    @classmethod
    def power(cls, sigma: float) -> GridFunction1D:
        return cls("power", (float(sigma),))

    @classmethod
    def exponential(cls, k: float) -> GridFunction1D:
        return cls("exponential", (float(k),))

    @classmethod
    def tabulated(cls, values, T: float) -> GridFunction1D:
        table = np.array(values, dtype=np.float64)
        if table.ndim != 1 or table.size < 2:
            raise ConfigError("tabulated function needs at least two values")
        if not np.all(np.isfinite(table)):
            raise ConfigError("tabulated values must be finite")
        return cls("tabulated", (float(T),), _readonly(table))

    @property
    def declared_grid(self) -> TimeGrid | None:
        """Grid of a tabulated function; ``None`` for closed forms."""
        if self.kind != "tabulated":
            return None
        return TimeGrid(self.coeffs[0], self.table.size - 1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridFunction1D):
            return NotImplemented
        if (self.kind, self.coeffs) != (other.kind, other.coeffs):
            return False
        if self.table is None or other.table is None:
            return self.table is other.table
        return bool(np.array_equal(self.table, other.table))

    def __hash__(self) -> int:
        extra = None if self.table is None else self.table.tobytes()
        return hash((self.kind, self.coeffs, extra))

    def __call__(self, t):
        """Evaluate at a point or an array of points."""
        if self.kind == "tabulated":
            return self._lookup(t)
        t = np.asarray(t, dtype=np.float64)
        kind, c = self.kind, self.coeffs
        if kind == "identity":
            out = t.copy()
        elif kind == "constant":
            out = np.full_like(t, c[0])
        elif kind == "affine":
            out = c[0] * t + c[1]
        elif kind == "power":
            if np.any(t < 0):
                raise DomainError("power function evaluated at negative argument")
            out = np.power(t, c[0])
        else:
            out = np.exp(c[0] * t)
        return out[()] if out.ndim == 0 else out

    def _lookup(self, t):
        grid = self.declared_grid
        t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        pos = t_arr / grid.tau
        idx = np.rint(pos).astype(np.int64)
        ok = (idx >= 0) & (idx <= grid.N)
        ok &= np.abs(grid.nodes[np.clip(idx, 0, grid.N)] - t_arr) <= 4 * np.spacing(
            np.maximum(np.abs(t_arr), grid.tau)
        )
        if not np.all(ok):
            raise GridMismatchError("tabulated function evaluated off its declared grid")
        out = self.table[idx]
        return out[0] if np.ndim(t) == 0 else out

    def to_config(self) -> dict[str, Any]:
        names = _PARAMS[self.kind]
        if self.kind == "tabulated":
            return {"kind": "tabulated", "values": self.table.tolist(), "T": self.coeffs[0]}
        return {"kind": self.kind, **dict(zip(names, self.coeffs))}

    @classmethod
    def from_config(cls, desc: Mapping[str, Any] | str) -> GridFunction1D:
        """Build a descriptor from ``{kind=..., <params>}`` or a builtin name."""
        if isinstance(desc, str):
            try:
                return BUILTIN_FUNCTIONS[desc]
            except KeyError:
                raise ConfigError(f"unknown builtin function {desc!r}") from None
        if not isinstance(desc, Mapping) or "kind" not in desc:
            raise ConfigError(f"function descriptor needs a 'kind' key: {desc!r}")
        kind = desc["kind"]
        if kind not in _PARAMS:
            raise ConfigError(f"unknown function kind {kind!r}")
        names = _PARAMS[kind]
        extra = set(desc) - set(names) - {"kind"}
        if extra:
            raise ConfigError(f"unknown key(s) {sorted(extra)} for function kind {kind!r}")
        missing = [n for n in names if n not in desc]
        if missing:
            raise ConfigError(f"function kind {kind!r} is missing {missing}")
        if kind == "tabulated":
            return cls.tabulated(desc["values"], float(desc["T"]))
        try:
            args = [float(desc[n]) for n in names]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"non-numeric parameter in {desc!r}") from exc
        return getattr(cls, kind)(*args)


BUILTIN_FUNCTIONS: dict[str, GridFunction1D] = {
    "one": GridFunction1D.constant(1.0),
    "t": GridFunction1D.identity(),
    "t+1": GridFunction1D.affine(1.0, 1.0),
    "sqrt(t)": GridFunction1D.power(0.5),
    "t^4": GridFunction1D.power(4.0),
    "exp(t)": GridFunction1D.exponential(1.0),
    "exp(2t)": GridFunction1D.exponential(2.0),
}


def eval_on_grid(f: GridFunction1D, grid: TimeGrid) -> np.ndarray:
    """Values of ``f`` at the ``N + 1`` nodes of ``grid`` (read-only array)."""
    if f.kind == "tabulated":
        own = f.declared_grid
        if own.N != grid.N or own.T != grid.T:
            raise GridMismatchError(
                f"tabulated function declared on (T={own.T}, N={own.N}), "
                f"evaluated on (T={grid.T}, N={grid.N})"
            )
        return f.table
    return _readonly(np.array(f(grid.nodes), dtype=np.float64))


def lipschitz_constant(f: GridFunction1D, T: float) -> tuple[float, bool]:
    """Lipschitz constant of ``f`` on ``[0, T]``.

    Returns ``(L, is_estimate)``.  Closed forms are exact; a tabulated function
    gets the largest difference quotient between neighbouring nodes, which is
    only a lower estimate of the true constant.
    """
    kind, c = f.kind, f.coeffs
    if kind == "identity":
        return 1.0, False
    if kind == "constant":
        return 0.0, False
    if kind == "affine":
        return abs(c[0]), False
    if kind == "power":
        sigma = c[0]
        if sigma == 0:
            return 0.0, False
        if sigma < 1:
            return math.inf, False
        return sigma * T ** (sigma - 1), False
    if kind == "exponential":
        k = c[0]
        return abs(k) * math.exp(max(k, 0.0) * T), False
    grid = f.declared_grid
    return float(np.max(np.abs(np.diff(f.table))) / grid.tau), True


class Violation(NamedTuple):
    """One failed grid-point hypothesis."""

    hypothesis: str
    index: int


@dataclass(frozen=True)
class ScaleWeightPair:
    """Scale and weight functions together with their values on a time grid."""

    scale: GridFunction1D
    weight: GridFunction1D
    grid: TimeGrid
    zeta: np.ndarray = field(compare=False, repr=False)
    omega: np.ndarray = field(compare=False, repr=False)

    @classmethod
    def on_grid(
        cls, scale: GridFunction1D, weight: GridFunction1D, grid: TimeGrid
    ) -> ScaleWeightPair:
        return cls(scale, weight, grid, eval_on_grid(scale, grid), eval_on_grid(weight, grid))

    @classmethod
    def classical(cls, grid: TimeGrid) -> ScaleWeightPair:
        """``zeta(t) = t`` and ``omega(t) = 1``: the ordinary Caputo derivative."""
        return cls.on_grid(GridFunction1D.identity(), GridFunction1D.constant(1.0), grid)

    @property
    def unit_weight(self) -> bool:
        return bool(np.all(self.omega == 1.0))

    def with_unit_weight(self) -> ScaleWeightPair:
        return ScaleWeightPair.on_grid(self.scale, GridFunction1D.constant(1.0), self.grid)


def validate_pair(pair: ScaleWeightPair) -> list[Violation]:
    """List every grid-point hypothesis the pair violates.

    Checked at the nodes only: ``zeta`` strictly increasing, ``omega_n > 0`` for
    ``n >= 1`` (``omega_0 >= 0``), and ``omega`` nondecreasing.  An empty list
    means the coefficient positivity and zero-sum properties are guaranteed.
    Never raises.
    """
    zeta, omega = pair.zeta, pair.omega
    report: list[Violation] = []
    for n in range(zeta.size):
        if not (math.isfinite(zeta[n]) and math.isfinite(omega[n])):
            report.append(Violation("non_finite_value", n))
    for n in range(1, zeta.size):
        if not zeta[n] > zeta[n - 1]:
            report.append(Violation("scale_not_increasing", n))
    if not omega[0] >= 0:
        report.append(Violation("weight_negative", 0))
    for n in range(1, omega.size):
        if not omega[n] > 0:
            report.append(Violation("weight_not_positive", n))
    for n in range(1, omega.size):
        if omega[n] < omega[n - 1]:
            report.append(Violation("weight_decreasing", n))
    return report
