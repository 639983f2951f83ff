"""The discrete generalized Caputo derivative and analytic references."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import EmptySeriesError, UnsupportedOracleError
from .functions import GridFunction1D, ScaleWeightPair, TimeGrid
from .weights import LambdaWeights, Method, gamma, lambda_table


@dataclass(frozen=True)
class DerivativeSeries:
    """Approximate derivative at ``t_1..t_N``; ``values[n - 1]`` belongs to ``t_n``."""

    grid: TimeGrid
    alpha: float
    values: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes[1:]


def gcfd_apply(
    samples,
    pair: ScaleWeightPair,
    alpha: float,
    weights: Sequence[LambdaWeights] | None = None,
    method: Method = "stable",
) -> DerivativeSeries:
    """Apply the high-order operator to samples ``U_0..U_N``.

    .. math::

        {}^{H}D^\\alpha U(t_n) = \\sum_{l=0}^{n} \\lambda_l\\,\\omega_{n-l}\\,U_{n-l}

    Parameters
    ----------
    samples
        ``N + 1`` values of ``U`` on ``pair.grid``.
    pair
        Scale and weight values.
    alpha
        Order in ``(0, 1)``.
    weights
        Optional precomputed :func:`~gencaputo.weights.lambda_table`.
    method
        Coefficient route used when ``weights`` is not supplied.
    """
    U = np.asarray(samples, dtype=np.float64)
    N = pair.grid.N
    if U.shape != (N + 1,):
        raise ValueError(f"expected {N + 1} samples, got shape {U.shape}")
    if N < 1:
        raise EmptySeriesError("no interior time levels")
    table = weights if weights is not None else lambda_table(pair, alpha, method)
    g = pair.omega * U
    out = np.empty(N)
    for lw in table:
        n = lw.n
        out[n - 1] = np.dot(lw.values, g[n::-1])
    out.setflags(write=False)
    return DerivativeSeries(pair.grid, alpha, out)


def caputo_power(beta: float, alpha: float, t) -> np.ndarray:
    """Classical Caputo derivative of ``t**beta`` (zero for ``beta == 0``)."""
    t = np.asarray(t, dtype=np.float64)
    if beta == 0:
        return np.zeros_like(t)
    return gamma(beta + 1) / gamma(beta + 1 - alpha) * np.power(t, beta - alpha)


def gcfd_reference(p: float, alpha: float, grid: TimeGrid, pair: ScaleWeightPair | None = None):
    """Exact derivative of ``t**p`` at ``t_1..t_N`` for ``zeta = t`` and ``omega = 1``.

    Raises
    ------
    UnsupportedOracleError
        ``pair`` is given and is not the classical pair.
    """
    if pair is not None and not (
        pair.scale == GridFunction1D.identity() and np.all(pair.omega == 1.0)
    ):
        raise UnsupportedOracleError("power-rule reference needs zeta(t) = t and omega = 1")
    return caputo_power(p, alpha, grid.nodes[1:])


def _series_terms(weight: GridFunction1D, q: float, t_max: float) -> list[tuple[float, float]]:
    """Expand ``omega(t) * t**q`` as a list of ``(coefficient, exponent)``."""
    kind, c = weight.kind, weight.coeffs
    if kind == "constant":
        return [(c[0], q)]
    if kind == "identity":
        return [(1.0, q + 1)]
    if kind == "affine":
        return [(c[0], q + 1), (c[1], q)]
    if kind == "power":
        return [(1.0, q + c[0])]
    if kind == "exponential":
        k = c[0]
        terms, m, coef = [], 0, 1.0
        # Stop once the remaining tail is far below double precision.
        while True:
            terms.append((coef, q + m))
            m += 1
            coef *= k / m
            if m > abs(k) * t_max and abs(coef) * max(t_max, 1.0) ** (q + m) < 1e-20:
                return terms
    raise UnsupportedOracleError(f"no series reference for weight kind {kind!r}")


def weighted_power_reference(q: float, alpha: float, pair: ScaleWeightPair) -> np.ndarray:
    """Exact generalized derivative of ``U(t) = t**q`` at ``t_1..t_N``.

    Available when the scale is ``p*t + r`` (``p > 0``) or ``t``, and the weight
    is a closed form other than tabulated.  Uses

    .. math::

        D^\\alpha_{[\\zeta,\\omega]} U(t)
          = \\omega(t)^{-1} p^{-\\alpha}\\, {}^{C}D^\\alpha [\\omega U](t)

    with the product expanded termwise.
    """
    scale = pair.scale
    if scale.kind == "identity":
        slope = 1.0
    elif scale.kind == "affine" and scale.coeffs[0] > 0:
        slope = scale.coeffs[0]
    else:
        raise UnsupportedOracleError("series reference needs an affine increasing scale")
    t = pair.grid.nodes[1:]
    total = np.zeros_like(t)
    for coef, beta in _series_terms(pair.weight, q, pair.grid.T):
        if beta > 0:
            log_ratio = math.lgamma(beta + 1) - math.lgamma(beta + 1 - alpha)
            total += coef * math.exp(log_ratio) * np.power(t, beta - alpha)
    return total * slope**-alpha / pair.omega[1:]
