"""Discretisation coefficients and per-level weights of the GCFD operator.

At time level ``n`` the history integral is split into the subintervals
``[t_{l-1}, t_l]``.  The first is handled with a linear interpolant, the second
with a quadratic and every later one with a cubic.  Each subinterval yields a
handful of coefficients.  All of them are stored by the distance
``j = n - l``, so ``a[j]`` is :math:`a_{n-l}`.

.. math::

    a_{n-l} = \\alpha_0^{(n)}
        \\frac{(\\zeta_n-\\zeta_{l-1})^{1-\\alpha}-(\\zeta_n-\\zeta_l)^{1-\\alpha}}
             {\\zeta_l-\\zeta_{l-1}},
    \\qquad \\alpha_0^{(n)} = \\frac{\\omega_n^{-1}}{\\Gamma(2-\\alpha)}

and similarly for :math:`b_{n-l}`, :math:`c_{n-l}` and the Lagrange-form
coefficients :math:`A_{1..4,n-l}`.

Two evaluation routes are provided.

``"closed_form"``
    The power-difference formulas term by term.  These lose all accuracy when
    a subinterval is short compared with its distance to ``t_n`` (for instance
    near ``t = 0`` under ``zeta(t) = t**4``), because they subtract nearly
    equal powers and divide by a high power of a tiny increment.

``"stable"`` (default)
    Each coefficient equals
    :math:`\\frac{\\omega_n^{-1}}{\\Gamma(1-\\alpha)}\\int_0^1 K(s)\\,q'(s)\\,ds`
    with :math:`K(s) = (\\zeta_n-\\zeta_l+\\Delta_l(1-s))^{-\\alpha}` and ``q`` an
    interpolation basis polynomial.  When ``zeta_n - zeta_l >= Delta_l`` the
    kernel is analytic well beyond ``[0, 1]`` and a Gauss-Legendre rule is
    accurate to rounding.  Writing :math:`K(s) = K(1/2) + [K(s)-K(1/2)]` with
    the bracket evaluated through ``expm1``/``log1p`` removes the remaining
    cancellation.  Closer to ``t_n`` the closed forms are well conditioned and
    are used as is.

The Newton coefficients ``a, b, c`` and the Lagrange coefficients ``A1..A4``
are computed from different basis polynomials, so the linear identities
linking them are a genuine check rather than a tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .exceptions import DegenerateScaleError, DivisionDegeneracyError, DomainError
from .functions import ScaleWeightPair

Method = Literal["stable", "closed_form"]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_S = 0.5 * (_GL_NODES + 1.0)
_W = 0.5 * _GL_WEIGHTS

# Derivatives on [0, 1] of the Newton basis (forward differences at s = 1)
# and of the Lagrange basis on the nodes s = 1, 0, -1, -2, as coefficient
# vectors in powers of s.  The second entry is q(1) - q(0).
_NEWTON = {
    "a": (np.array([1.0]), 1.0),
    "b": (np.array([-0.5, 1.0]), 0.0),
    "c": (np.array([-1.0 / 6.0, 0.0, 0.5]), 0.0),
}
_LAGRANGE = (
    (np.array([2.0, 6.0, 3.0]) / 6.0, 1.0),  # s(s+1)(s+2)/6
    (np.array([1.0, -4.0, -3.0]) / 2.0, -1.0),  # -(s-1)(s+1)(s+2)/2
    (np.array([-2.0, 2.0, 3.0]) / 2.0, 0.0),  # (s-1)s(s+2)/2
    (np.array([1.0, 0.0, -3.0]) / 6.0, 0.0),  # -(s-1)s(s+1)/6
)


def gamma(x: float) -> float:
    """Euler's gamma function for real ``x > 0``."""
    if not x > 0:
        raise DomainError(f"gamma is only provided for x > 0, got {x!r}")
    return math.gamma(x)


@dataclass(frozen=True)
class KernelCoefficients:
    """All coefficients of one time level, indexed by distance ``j = n - l``.

    ``a`` has ``n`` entries (``l = 1..n``), ``b`` has ``n - 1`` (``l = 2..n``),
    ``c`` has ``n - 2`` (``l = 3..n``) and ``A`` has shape ``(4, n - 2)`` with
    row ``i`` holding :math:`A_{i+1, j}`.
    """

    n: int
    alpha: float
    alpha0: float
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    A: np.ndarray


def _pow0(x: np.ndarray, beta: float) -> np.ndarray:
    """``x**beta`` for ``x >= 0`` with ``0**beta`` exactly 0."""
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] ** beta
    return out


def _geometry(n: int, pair: ScaleWeightPair, alpha: float):
    """Increments, distances and the prefactor shared by every coefficient."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    N = pair.grid.N
    if not 1 <= n <= N:
        raise DomainError(f"time level n={n} outside 1..{N}")
    omega_n = float(pair.omega[n])
    if not omega_n > 0:
        raise DivisionDegeneracyError(f"weight must be positive at level {n}, got {omega_n}")
    zeta = pair.zeta[: n + 1]
    j = np.arange(n)
    l = n - j
    delta = zeta[l] - zeta[l - 1]
    if np.any(delta == 0):
        bad = int(l[np.argmax(delta == 0)])
        raise DegenerateScaleError(f"zeta_{bad} equals zeta_{bad - 1}")
    if np.any(delta < 0):
        raise DomainError("scale values must increase along the grid")
    dc = zeta[n] - zeta[l]
    dc[0] = 0.0
    dp = zeta[n] - zeta[l - 1]
    return omega_n, delta, dc, dp


def _closed_form(alpha: float, delta, dc, dp):
    """Newton and Lagrange coefficients (without the prefactor) as displayed."""
    p1p, p1c = _pow0(dp, 1 - alpha), _pow0(dc, 1 - alpha)
    p2p, p2c = _pow0(dp, 2 - alpha), _pow0(dc, 2 - alpha)
    p3p, p3c = _pow0(dp, 3 - alpha), _pow0(dc, 3 - alpha)
    g2, g3 = 2 - alpha, (2 - alpha) * (3 - alpha)
    d1, d2, d3 = delta, delta**2, delta**3
    a = (p1p - p1c) / d1
    b = (p2p - p2c) / (g2 * d2) - 0.5 * (p1p + p1c) / d1
    c = (p3p - p3c) / (g3 * d3) - p2c / (g2 * d2) - (p1p + 2 * p1c) / (6 * d1)
    A = np.empty((4,) + delta.shape)
    A[0] = (2 * p1p - 11 * p1c) / (6 * d1) + (p2p - 2 * p2c) / (g2 * d2) + (p3p - p3c) / (g3 * d3)
    A[1] = (6 * p1c + p1p) / (2 * d1) + (5 * p2c - 2 * p2p) / (g2 * d2) + 3 * (p3c - p3p) / (g3 * d3)
    A[2] = -(2 * p1p + 3 * p1c) / (2 * d1) + (p2p - 4 * p2c) / (g2 * d2) + 3 * (p3p - p3c) / (g3 * d3)
    A[3] = (p1p + 2 * p1c) / (6 * d1) + p2c / (g2 * d2) + (p3c - p3p) / (g3 * d3)
    return a, b, c, A


def _quadrature(alpha: float, delta, dc):
    """Same quantities from the integral form, scaled to match the closed form.

    The closed forms carry ``1/Gamma(2 - alpha)`` while the integrals carry
    ``1/Gamma(1 - alpha)``; the ratio is ``1 - alpha``.
    """
    mid = dc + 0.5 * delta
    k_mid = mid**-alpha
    # K(s) - K(1/2) without cancellation.
    rel = np.subtract.outer(0.5, _S)[None, :] * (delta / mid)[:, None]
    dk = k_mid[:, None] * np.expm1(-alpha * np.log1p(rel))

    def integrate(poly, jump):
        q = np.polynomial.polynomial.polyval(_S, poly)
        return (1 - alpha) * (k_mid * jump + dk @ (_W * q))

    a, b, c = (integrate(*_NEWTON[k]) for k in "abc")
    A = np.stack([integrate(*basis) for basis in _LAGRANGE])
    return a, b, c, A


def kernel_coefficients(
    n: int, pair: ScaleWeightPair, alpha: float, method: Method = "stable"
) -> KernelCoefficients:
    """Every coefficient needed at time level ``n``.

    Parameters
    ----------
    n
        Time level, ``1 <= n <= N``.
    pair
        Scale and weight values on the time grid.
    alpha
        Fractional order in ``(0, 1)``.
    method
        ``"stable"`` or ``"closed_form"``; see the module notes.

    Raises
    ------
    DegenerateScaleError
        Two consecutive scale values coincide.
    DivisionDegeneracyError
        ``omega_n <= 0``.
    """
    omega_n, delta, dc, dp = _geometry(n, pair, alpha)
    a, b, c, A = _closed_form(alpha, delta, dc, dp)
    if method == "stable":
        far = dc >= delta
        if np.any(far):
            qa, qb, qc, qA = _quadrature(alpha, delta[far], dc[far])
            a[far], b[far], c[far] = qa, qb, qc
            A[:, far] = qA
    elif method != "closed_form":
        raise ValueError(f"unknown coefficient method {method!r}")
    alpha0 = 1.0 / (omega_n * gamma(2 - alpha))

    def finish(x: np.ndarray) -> np.ndarray:
        out = alpha0 * x
        out.setflags(write=False)
        return out

    # Coefficient j = n - l exists for b when l >= 2 and for c, A when l >= 3.
    return KernelCoefficients(
        n=n,
        alpha=alpha,
        alpha0=alpha0,
        a=finish(a),
        b=finish(b[: n - 1]),
        c=finish(c[: max(n - 2, 0)]),
        A=finish(A[:, : max(n - 2, 0)]),
    )


def _check_l(n: int, l: int, lowest: int, name: str) -> None:
    if not lowest <= l <= n:
        raise DomainError(f"{name} needs {lowest} <= l <= n, got n={n}, l={l}")


def coeff_a(n: int, l: int, pair: ScaleWeightPair, alpha: float, method: Method = "stable") -> float:
    """:math:`a_{n-l}` for ``1 <= l <= n``."""
    _check_l(n, l, 1, "coeff_a")
    return float(kernel_coefficients(n, pair, alpha, method).a[n - l])


def coeff_b(n: int, l: int, pair: ScaleWeightPair, alpha: float, method: Method = "stable") -> float:
    """:math:`b_{n-l}` for ``2 <= l <= n``."""
    _check_l(n, l, 2, "coeff_b")
    return float(kernel_coefficients(n, pair, alpha, method).b[n - l])


def coeff_c(n: int, l: int, pair: ScaleWeightPair, alpha: float, method: Method = "stable") -> float:
    """:math:`c_{n-l}` for ``3 <= l <= n``."""
    _check_l(n, l, 3, "coeff_c")
    return float(kernel_coefficients(n, pair, alpha, method).c[n - l])


def coeff_A(
    i: int, n: int, l: int, pair: ScaleWeightPair, alpha: float, method: Method = "stable"
) -> float:
    """:math:`A_{i,n-l}` for ``i`` in 1..4 and ``3 <= l <= n``."""
    if i not in (1, 2, 3, 4):
        raise DomainError(f"A coefficients are numbered 1..4, got {i}")
    _check_l(n, l, 3, "coeff_A")
    return float(kernel_coefficients(n, pair, alpha, method).A[i - 1, n - l])


@dataclass(frozen=True)
class LambdaWeights:
    """Weights :math:`\\lambda_0..\\lambda_n` of level ``n``.

    The discrete derivative at ``t_n`` is
    ``sum(lam[l] * omega[n - l] * U[n - l] for l in range(n + 1))``.
    ``provenance`` names the case table that produced the vector.
    """

    n: int
    values: np.ndarray
    provenance: str

    def __len__(self) -> int:
        return self.values.size


def lambda_weights(
    n: int,
    pair: ScaleWeightPair,
    alpha: float,
    method: Method = "stable",
    kernel: KernelCoefficients | None = None,
) -> LambdaWeights:
    """Assemble the weight vector of level ``n`` from the per-``n`` case tables."""
    k = kernel if kernel is not None else kernel_coefficients(n, pair, alpha, method)
    a, b = k.a, k.b
    A1, A2, A3, A4 = k.A
    lam = np.zeros(n + 1)
    if n == 1:
        lam[:] = a[0], -a[0]
        source = "n=1"
    elif n == 2:
        lam[:] = a[0] + b[0], a[1] - a[0] - 2 * b[0], -a[1] + b[0]
        source = "n=2"
    elif n == 3:
        lam[:] = (
            A1[0],
            A2[0] + a[1] + b[1],
            A3[0] + a[2] - a[1] - 2 * b[1],
            A4[0] - a[2] + b[1],
        )
        source = "n=3"
    elif n == 4:
        lam[:] = (
            A1[0],
            A1[1] + A2[0],
            A2[1] + A3[0] + a[2] + b[2],
            A3[1] + A4[0] + a[3] - a[2] - 2 * b[2],
            A4[1] - a[3] + b[2],
        )
        source = "n=4"
    elif n == 5:
        lam[:] = (
            A1[0],
            A1[1] + A2[0],
            A1[2] + A2[1] + A3[0],
            A2[2] + A3[1] + A4[0] + a[3] + b[3],
            A3[2] + A4[1] + a[4] - a[3] - 2 * b[3],
            A4[2] - a[4] + b[3],
        )
        source = "n=5"
    else:
        lam[0] = A1[0]
        lam[1] = A1[1] + A2[0]
        lam[2] = A1[2] + A2[1] + A3[0]
        mid = np.arange(3, n - 2)
        lam[mid] = A1[mid] + A2[mid - 1] + A3[mid - 2] + A4[mid - 3]
        lam[n - 2] = a[n - 2] + b[n - 2] + A2[n - 3] + A3[n - 4] + A4[n - 5]
        lam[n - 1] = a[n - 1] - a[n - 2] - 2 * b[n - 2] + A3[n - 3] + A4[n - 4]
        lam[n] = -a[n - 1] + b[n - 2] + A4[n - 3]
        source = "n>=6"
    lam.setflags(write=False)
    return LambdaWeights(n, lam, source)


def lambda_table(
    pair: ScaleWeightPair, alpha: float, method: Method = "stable"
) -> list[LambdaWeights]:
    """Weights for every level ``1..N``; entry ``n - 1`` belongs to level ``n``."""
    return [lambda_weights(n, pair, alpha, method) for n in range(1, pair.grid.N + 1)]
