"""Even periodic pair interactions and their trigonometric approximations."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._util import fit_line
from .errors import ApproximationFailure, DomainError, InsufficientData

QUAD_POINTS = 8192
CERT_POINTS = 8192
K_MAX = 512


def _grid(n):
    return 2.0 * np.pi * np.arange(n) / n


@dataclass
class Interaction:
    """An even, 2pi-periodic interaction f0 scaled by ``beta``.

    Calling the object returns ``beta * f0(x)``, the quantity that enters
    the Gibbs weight.
    """

    evaluator: Callable
    beta: float = 1.0
    smoothness: float | None = None
    name: str = "custom"

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError("beta must be positive")
        x = np.linspace(-np.pi, np.pi, 2048)
        a = np.asarray(self.evaluator(x), dtype=float)
        b = np.asarray(self.evaluator(-x), dtype=float)
        if not np.all(np.isfinite(a)):
            raise DomainError(f"interaction {self.name!r} is not finite on the grid")
        if np.max(np.abs(a - b)) > 1e-12 * max(1.0, np.max(np.abs(a))):
            raise DomainError(f"interaction {self.name!r} is not even")

    def __call__(self, x):
        return self.beta * np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)

    def with_beta(self, beta: float) -> "Interaction":
        return Interaction(self.evaluator, beta, self.smoothness, self.name)


def _wrap(x):
    # map to [-pi, pi)
    return np.mod(np.asarray(x, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


def _xy(x):
    return np.cos(x)


def _clock_smooth(x):
    # an analytic interaction with a four-fold harmonic
    return np.cos(x) + 0.5 * np.exp(np.cos(4.0 * x) - 1.0)


def _abs_kink(x):
    return np.abs(_wrap(x))


def holder(s: float) -> Interaction:
    """|2 sin(x/2)|^s: even, periodic, Hoelder of order s at x = 0."""
    if not s > 0:
        raise DomainError("Hoelder exponent must be positive")
    return Interaction(lambda x: np.abs(2.0 * np.sin(0.5 * np.asarray(x))) ** s,
                       smoothness=s, name=f"holder{s:g}")


def trig_interaction(coefficients, name="trig") -> Interaction:
    """Interaction sum_k c_k cos(kx) with c_1 = coefficients[0]."""
    c = np.asarray(coefficients, dtype=float)
    k = np.arange(1, c.size + 1)

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.cos(np.multiply.outer(x, k)) @ c

    return Interaction(f, name=name)


BUILTIN = {
    "xy": lambda: Interaction(_xy, name="xy"),
    "clock_smooth": lambda: Interaction(_clock_smooth, name="clock_smooth"),
    "abs_kink": lambda: Interaction(_abs_kink, smoothness=1.0, name="abs_kink"),
}


def builtin(name: str, beta: float = 1.0) -> Interaction:
    try:
        f = BUILTIN[name]()
    except KeyError:
        raise DomainError(f"unknown interaction {name!r}; choose from {sorted(BUILTIN)}") from None
    return f.with_beta(beta)


def load_coefficients_csv(path) -> Interaction:
    """Read a ``k,c_k`` CSV (header row optional) into a trig interaction."""
    pairs = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() == "k":
                continue
            k, c = int(row[0]), float(row[1])
            if k < 0:
                raise DomainError(f"negative frequency {k} in {path}")
            pairs[k] = c
    pairs.pop(0, None)  # the constant term does not change the Gibbs measure
    if not pairs:
        raise InsufficientData(f"no coefficients in {path}")
    coeffs = np.zeros(max(pairs))
    for k, c in pairs.items():
        coeffs[k - 1] = c
    return trig_interaction(coeffs, name=str(path))


def _all_coefficients(f: Interaction, n: int = QUAD_POINTS) -> np.ndarray:
    # trapezoid rule on n points; entry k is (1/pi) int f(x) cos(kx) dx
    vals = f(_grid(n))
    return 2.0 / n * np.fft.rfft(vals).real


def fourier_coefficient(f: Interaction, k: int, n: int = QUAD_POINTS) -> float:
    """(1/pi) * integral over [-pi, pi] of f(x) cos(kx), by the trapezoid rule."""
    if k < 1:
        raise DomainError("k must be a positive integer")
    if n < 4096:
        raise DomainError("quadrature needs at least 4096 points")
    if k > n // 2:
        raise DomainError("k beyond the grid Nyquist frequency")
    return float(_all_coefficients(f, n)[k])


@dataclass
class TrigApprox:
    """Trig polynomial sum_{k<=K} c_k cos(kx) and its certified remainder.

    The remainder is eps_bar = f - constant - sum_k c_k cos(kx); on the
    certification grid it lies in [remainder_min, remainder_max].
    """

    coefficients: np.ndarray
    epsilon: float
    remainder_min: float
    remainder_max: float
    constant: float = 0.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)

    @property
    def K(self) -> int:
        return int(self.coefficients.size)

    @property
    def C_K(self) -> float:
        return float(math.fsum(np.abs(self.coefficients)))

    @property
    def D_K(self) -> float:
        k = np.arange(1, self.K + 1)
        return float(math.fsum(np.abs(self.coefficients) * k * k))

    def evaluate(self, x):
        k = np.arange(1, self.K + 1)
        return np.cos(np.multiply.outer(np.asarray(x, dtype=float), k)) @ self.coefficients


def approximate(f: Interaction, epsilon: float, k_max: int = K_MAX) -> TrigApprox:
    """Smallest-degree Fourier partial sum within epsilon/2 of f, then shifted.

    The signed error e = f - c_0/2 - S_K satisfies |e| <= epsilon/2 on the
    grid; the remainder e + epsilon/2 is therefore in [0, epsilon] and the
    shift is absorbed into the dropped constant.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if k_max > CERT_POINTS // 2 - 1:
        raise DomainError("k_max too large for the certification grid")
    coeffs = _all_coefficients(f, QUAD_POINTS)
    x = _grid(CERT_POINTS)
    err = f(x) - 0.5 * coeffs[0]
    best = np.inf
    half = 0.5 * epsilon
    for K in range(0, k_max + 1):
        if K > 0:
            err -= coeffs[K] * np.cos(K * x)
        sup = float(np.max(np.abs(err)))
        best = min(best, sup)
        if sup <= half and K > 0:
            rem = err + half
            return TrigApprox(coeffs[1:K + 1].copy(), float(epsilon),
                              max(0.0, float(rem.min())), float(rem.max()),
                              constant=float(0.5 * coeffs[0] - half))
    raise ApproximationFailure(
        f"no K <= {k_max} reaches sup error {half:g} (best {best:.3g})", best)


def partial_sum_error(f: Interaction, K: int) -> float:
    """Sup-grid distance between f and its centred Fourier partial sum of degree K."""
    coeffs = _all_coefficients(f, QUAD_POINTS)
    x = _grid(CERT_POINTS)
    k = np.arange(1, K + 1)
    s = 0.5 * coeffs[0] + np.cos(np.multiply.outer(x, k)) @ coeffs[1:K + 1]
    return float(np.max(np.abs(f(x) - s)))


@dataclass
class DecayFit:
    slope: float
    residual: float
    n_points: int


def coefficient_decay_check(approx, s: float | None = None, rel_floor: float = 1e-10) -> DecayFit:
    """Slope of log|c_k| against log k over the nonzero coefficients.

    ``approx`` may be a :class:`TrigApprox` or a plain coefficient array
    (c_1 first).  Coefficients below ``rel_floor`` times the largest one
    count as zero.  ``s`` is the exponent being probed; it is only used to
    require K >= 8 for a meaningful check.
    """
    c = approx.coefficients if isinstance(approx, TrigApprox) else np.asarray(approx, float)
    if s is not None and c.size < 8:
        raise InsufficientData("decay check needs K >= 8")
    k = np.arange(1, c.size + 1)
    a = np.abs(c)
    keep = a > rel_floor * a.max() if a.size else a > 0
    if keep.sum() < 4:
        raise InsufficientData(f"only {int(keep.sum())} nonzero coefficients")
    fit = fit_line(np.log(k[keep]), np.log(a[keep]))
    return DecayFit(fit.slope, fit.residual, fit.n_points)
