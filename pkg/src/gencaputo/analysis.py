"""Error norms, observed rates, the stability diagnostic and truncation bounds."""

from __future__ import annotations

import csv
import io
import json
import math
import time as _time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Literal, NamedTuple, Sequence

import numpy as np

from .exceptions import DomainError, GCFDError
from .pde import SolutionField
from .weights import gamma

ExactFn = Callable[[np.ndarray, float], np.ndarray]


def format_float(x: float | None) -> str:
    """17 significant digits, enough to round-trip binary64; empty for ``None``."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.17g}"


def _interior_error(numeric: SolutionField, exact: ExactFn, level: int | None) -> np.ndarray:
    n = numeric.time.N if level is None else level
    x = numeric.space.nodes[1:-1]
    t = float(numeric.time.nodes[n])
    ref = np.asarray(exact(x, t), dtype=np.float64) * np.ones_like(x)
    return numeric.values[1:-1, n] - ref


def error_inf(numeric: SolutionField, exact: ExactFn, level: int | None = None) -> float:
    """Largest interior error at the final level (or at ``level``)."""
    return float(np.max(np.abs(_interior_error(numeric, exact, level))))


def error_l2(numeric: SolutionField, exact: ExactFn, level: int | None = None) -> float:
    """``sqrt(h * sum(e_i**2))`` over interior nodes at the final level (or ``level``)."""
    e = _interior_error(numeric, exact, level)
    peak = float(np.max(np.abs(e)))
    if peak == 0 or not math.isfinite(peak):
        return peak
    # Scale before squaring so tiny errors do not underflow to zero.
    r = e / peak
    return peak * math.sqrt(numeric.space.h * math.fsum(r * r))


def observed_rate(err_coarse: float, err_fine: float) -> float:
    """``log2(err_coarse / err_fine)``; ``nan`` unless both errors are positive and finite."""
    ok = all(math.isfinite(e) and e > 0 for e in (err_coarse, err_fine))
    return math.log2(err_coarse / err_fine) if ok else math.nan


class StabilityVerdict(NamedTuple):
    """Outcome of the sufficient stability inequality.

    ``rhs`` may be ``inf`` when it overflows; ``log_rhs`` is ``log|rhs|`` and
    is always finite for positive factors.
    """

    holds: bool
    lhs: float
    rhs: float
    log_rhs: float


def stability_check(lam0: float, lam1: float, D: float, A: float, h: float, M: int) -> StabilityVerdict:
    """Evaluate ``lam1 <= lam0**(M-3) (lam0 + D/h**2 - A/(2h)) (lam0 + D/h**2 + A/(2h))``.

    The product is formed directly and, if that overflows, compared in log
    space so a verdict is always returned.
    """
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    if M < 3:
        raise DomainError(f"M must be at least 3, got {M}")
    factors = [(lam0, M - 3), (lam0 + D / h**2 - A / (2 * h), 1), (lam0 + D / h**2 + A / (2 * h), 1)]
    sign, log_mag = 1.0, 0.0
    for base, power in factors:
        if power == 0:
            continue
        if base == 0:
            sign, log_mag = 0.0, -math.inf
            break
        if base < 0 and power % 2:
            sign = -sign
        log_mag += power * math.log(abs(base))
    try:
        rhs = math.pow(lam0, M - 3) * factors[1][0] * factors[2][0]
    except OverflowError:
        rhs = sign * math.inf
    if math.isfinite(rhs):
        holds = lam1 <= rhs
    elif sign > 0:
        holds = lam1 <= 0 or math.log(lam1) <= log_mag
    else:
        holds = lam1 < 0 and math.log(-lam1) >= log_mag
    return StabilityVerdict(bool(holds), float(lam1), rhs, log_mag)


TruncationCase = Literal["n_eq_1", "n_eq_2", "n_ge_3"]


def truncation_bound(
    case: TruncationCase,
    alpha: float,
    tau: float,
    L: float,
    maxg2: float = 0.0,
    maxg3: float = 0.0,
    maxg4: float = 0.0,
    omega_n: float = 1.0,
    t_n: float | None = None,
    t_2: float | None = None,
) -> float:
    """Upper bound on the local truncation error of the discrete operator.

    ``maxgK`` is the sup norm of the ``K``-th derivative of ``g = omega U`` in
    the scale variable, and ``L`` the Lipschitz constant of the scale.  With
    :math:`P = \\alpha\\,\\omega_n^{-1}/\\Gamma(1-\\alpha)`:

    ``n_eq_1``
        :math:`P[\\frac{1}{8\\alpha}+\\frac{1}{2(1-\\alpha)(2-\\alpha)}]
        \\|g''\\| (L\\tau)^{2-\\alpha}`
    ``n_eq_2``
        :math:`P\\{\\frac{1}{12}\\|g''\\|(t_2-t_1)^{-\\alpha-1}L^{2-\\alpha}\\tau^3
        + [\\frac{1}{12}+\\frac{1}{3(1-\\alpha)(2-\\alpha)}(\\frac12+\\frac{1}{3-\\alpha})]
        \\|g'''\\|(L\\tau)^{3-\\alpha}\\}` with ``t_2 - t_1 = tau``
    ``n_ge_3``
        :math:`P\\{\\frac{1}{72}\\|g'''\\|(t_n-t_2)^{-\\alpha-1}L^{3-\\alpha}\\tau^4
        + [\\frac{3}{128\\alpha}+\\frac{1}{12(1-\\alpha)(2-\\alpha)}
        (1+\\frac{3}{3-\\alpha}+\\frac{3}{(3-\\alpha)(4-\\alpha)})]
        \\|g^{(4)}\\|(L\\tau)^{4-\\alpha}\\}`
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not (tau > 0 and L > 0):
        raise DomainError("tau and L must be positive")
    if min(maxg2, maxg3, maxg4) < 0:
        raise DomainError("sup norms must be non-negative")
    al = alpha
    pref = al / (omega_n * gamma(1 - al))
    if case == "n_eq_1":
        bracket = 1 / (8 * al) + 1 / (2 * (1 - al) * (2 - al))
        return pref * bracket * maxg2 * L ** (2 - al) * tau ** (2 - al)
    if case == "n_eq_2":
        # t_2 - t_1 equals tau on a uniform grid.
        first = maxg2 * tau ** (-al - 1) * L ** (2 - al) * tau**3 / 12 if maxg2 else 0.0
        bracket = 1 / 12 + (0.5 + 1 / (3 - al)) / (3 * (1 - al) * (2 - al))
        return pref * (first + bracket * maxg3 * L ** (3 - al) * tau ** (3 - al))
    if case == "n_ge_3":
        if t_n is None or t_2 is None or not t_n > t_2:
            raise DomainError("case n_ge_3 needs t_n > t_2")
        first = maxg3 * (t_n - t_2) ** (-al - 1) * L ** (3 - al) * tau**4 / 72
        bracket = 3 / (128 * al) + (1 + 3 / (3 - al) + 3 / ((3 - al) * (4 - al))) / (
            12 * (1 - al) * (2 - al)
        )
        return pref * (first + bracket * maxg4 * L ** (4 - al) * tau ** (4 - al))
    raise DomainError(f"unknown truncation case {case!r}")


@dataclass(frozen=True)
class ReportRow:
    """One resolution of a refinement study.

    ``rate`` compares ``E_inf`` with the previous row.  ``flag`` explains a
    missing value: a failed solve or an undefined rate.
    """

    resolution: int
    E_inf: float | None
    E_2: float | None
    rate: float | None
    seconds: float
    flag: str | None = None


@dataclass(frozen=True)
class ConvergenceReport:
    """Refinement study along one axis with the other resolution fixed."""

    axis: Literal["time", "space"]
    fixed: dict[str, Any]
    rows: tuple[ReportRow, ...]
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r.E_inf is not None for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["resolution", "E_inf", "E_2", "rate", "seconds"])
        for r in self.rows:
            writer.writerow(
                [r.resolution, format_float(r.E_inf), format_float(r.E_2), format_float(r.rate), f"{r.seconds:.6f}"]
            )
        return buf.getvalue()

    def to_json(self) -> dict[str, Any]:
        return {
            "axis": self.axis,
            "fixed": self.fixed,
            "metadata": self.metadata,
            "rows": [asdict(r) for r in self.rows],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def run_refinement_study(
    errors: Callable[[int], tuple[float, float]],
    axis: Literal["time", "space"],
    resolutions: Sequence[int],
    fixed: dict[str, Any],
    metadata: dict[str, Any] | None = None,
) -> ConvergenceReport:
    """Evaluate ``errors(resolution) -> (E_inf, E_2)`` at each resolution.

    A row whose solve raises a package error is kept with empty errors and a
    flag; the study carries on with the next resolution.  Rates are only
    reported between consecutive rows whose resolutions double.
    """
    if axis not in ("time", "space"):
        raise DomainError(f"axis must be 'time' or 'space', got {axis!r}")
    rows: list[ReportRow] = []
    prev: tuple[int, float | None] | None = None
    for res in resolutions:
        start = _time.perf_counter()
        flag = None
        try:
            e_inf, e_2 = errors(res)
        except GCFDError as exc:
            e_inf = e_2 = None
            flag = f"failed: {type(exc).__name__}: {exc}"
        seconds = _time.perf_counter() - start
        rate = None
        if prev is not None and flag is None:
            if res != 2 * prev[0]:
                flag = "rate undefined: resolution did not double"
            elif prev[1] is None:
                flag = "rate undefined: previous row failed"
            else:
                r = observed_rate(prev[1], e_inf)
                if math.isnan(r):
                    flag = "rate undefined: non-positive error"
                else:
                    rate = r
        rows.append(ReportRow(int(res), e_inf, e_2, rate, seconds, flag))
        prev = (res, e_inf)
    return ConvergenceReport(axis, dict(fixed), tuple(rows), dict(metadata or {}))
