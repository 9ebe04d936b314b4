"""Square-lattice geometry and the long-range coupling family.

Vertices of the box Lambda_M = {-M..M}^2 are stored in flat arrays with
index ``(x + M) * W + (y + M)`` where ``W = 2M + 1``.  All radii are sup
norms unless a family is built with ``norm="l1"``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._util import zeta
from .errors import DomainError


def linf(x, y):
    return np.maximum(np.abs(x), np.abs(y))


def inner_radius(R: int) -> int:
    """Ceiling of sqrt(R); the radius of the inner box cut out of Delta_R."""
    r = math.isqrt(int(R))
    return r if r * r == R else r + 1


@dataclass(frozen=True)
class Box:
    """The box Lambda_M.

    Parameters
    ----------
    M : int
        Half width; the box has (2M+1)^2 vertices.
    """

    M: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 0:
            raise DomainError(f"box half width must be a nonnegative integer, got {self.M}")

    @property
    def width(self) -> int:
        return 2 * self.M + 1

    @property
    def n_vertices(self) -> int:
        return self.width ** 2

    @cached_property
    def coords(self):
        """(x, y) coordinate arrays in flat-index order."""
        r = np.arange(-self.M, self.M + 1)
        xs, ys = np.meshgrid(r, r, indexing="ij")
        return xs.ravel(), ys.ravel()

    @cached_property
    def norms(self) -> np.ndarray:
        xs, ys = self.coords
        return linf(xs, ys)

    def index(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        if np.any(np.maximum(np.abs(x), np.abs(y)) > self.M):
            raise DomainError("vertex outside the box")
        return (x + self.M) * self.width + (y + self.M)

    @property
    def origin(self) -> int:
        return self.M * self.width + self.M

    def layer(self, i: int) -> np.ndarray:
        """Flat indices of the layer L_i = {z : |z|_inf = i}."""
        if not 0 <= i <= self.M:
            raise DomainError(f"layer {i} not inside box of half width {self.M}")
        return np.flatnonzero(self.norms == i)


def layer_coords(i: int) -> np.ndarray:
    """Coordinates of L_i as an (8i, 2) integer array (the origin for i = 0)."""
    if i < 0:
        raise DomainError("layer index must be nonnegative")
    if i == 0:
        return np.zeros((1, 2), dtype=np.int64)
    r = np.arange(-i, i + 1)
    xs, ys = np.meshgrid(r, r, indexing="ij")
    keep = linf(xs, ys) == i
    return np.stack([xs[keep], ys[keep]], axis=1).astype(np.int64)


def delta_annulus(R: int) -> np.ndarray:
    """Coordinates of Delta_R = Lambda_R minus Lambda_{ceil(sqrt R)}."""
    if R < 4:
        raise DomainError(f"annulus needs R >= 4, got {R}")
    r0 = inner_radius(R)
    r = np.arange(-R, R + 1)
    xs, ys = np.meshgrid(r, r, indexing="ij")
    keep = linf(xs, ys) > r0
    return np.stack([xs[keep], ys[keep]], axis=1).astype(np.int64)


@dataclass(frozen=True)
class CouplingFamily:
    """Couplings J_x = c |x|^(-alpha) for 0 < |x| <= cutoff_radius.

    Parameters
    ----------
    alpha : float
        Decay exponent, must exceed 4.
    amplitude : float
        The constant c.  It doubles as the constant J of the upper bound
        J_x <= J |x|^(-alpha).
    cutoff_radius : int
        Couplings vanish beyond this radius.
    normalized : bool
        Marks families whose amplitude was chosen so that the untruncated
        couplings sum to one.
    norm : {"linf", "l1"}
        Norm used for |x|.  With "l1" and cutoff 1 the family is the
        nearest-neighbour lattice.
    """

    alpha: float
    amplitude: float
    cutoff_radius: int
    normalized: bool = False
    norm: str = "linf"
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if not self.alpha > 4:
            raise DomainError(f"alpha must exceed 4, got {self.alpha}")
        if not self.amplitude > 0:
            raise DomainError("amplitude must be positive")
        if int(self.cutoff_radius) != self.cutoff_radius or self.cutoff_radius < 1:
            raise DomainError("cutoff_radius must be a positive integer")
        if self.norm not in ("linf", "l1"):
            raise DomainError(f"unknown norm {self.norm!r}")

    @classmethod
    def normalized_family(cls, alpha: float, cutoff_radius: int, norm: str = "linf"):
        """Family with amplitude fixed by sum over all x != 0 of J_x = 1."""
        mult = 8.0 if norm == "linf" else 4.0
        c = 1.0 / (mult * zeta(alpha - 1.0))
        return cls(alpha, c, cutoff_radius, normalized=True, norm=norm)

    @property
    def J(self) -> float:
        return self.amplitude

    @property
    def _sphere(self) -> float:
        # number of lattice points at radius i is _sphere * i
        return 8.0 if self.norm == "linf" else 4.0

    def radius(self, x, y):
        if self.norm == "linf":
            return linf(x, y)
        return np.abs(x) + np.abs(y)

    @property
    def mass_within_cutoff(self) -> float:
        """Exact sum of J_x over 0 < |x| <= cutoff (layer by layer)."""
        i = np.arange(1, self.cutoff_radius + 1, dtype=float)
        return float(math.fsum(self._sphere * self.amplitude * i ** (1.0 - self.alpha)))

    @property
    def tail_correction(self) -> float:
        """Exact mass the truncation removes (Hurwitz zeta)."""
        return self._sphere * self.amplitude * zeta(self.alpha - 1.0, self.cutoff_radius + 1.0)

    @property
    def tail_bound(self) -> float:
        """Integral bound on the removed mass, c * s * cutoff^(2-alpha)/(alpha-2)."""
        return (self._sphere * self.amplitude * self.cutoff_radius ** (2.0 - self.alpha)
                / (self.alpha - 2.0))

    def displacements(self, half: bool = False):
        """Arrays (dx, dy, J) over all displacements inside the cutoff.

        With ``half=True`` only one of each pair {d, -d} is kept, which
        enumerates every unoriented edge exactly once.
        """
        key = ("half" if half else "full")
        if key not in self._cache:
            c = self.cutoff_radius
            r = np.arange(-c, c + 1)
            dx, dy = np.meshgrid(r, r, indexing="ij")
            dx = dx.ravel()
            dy = dy.ravel()
            rad = self.radius(dx, dy)
            keep = (rad > 0) & (rad <= c)
            if half:
                keep &= (dx > 0) | ((dx == 0) & (dy > 0))
            dx, dy, rad = dx[keep], dy[keep], rad[keep]
            J = self.amplitude * rad.astype(float) ** (-self.alpha)
            self._cache[key] = (dx.astype(np.int64), dy.astype(np.int64), J)
        return self._cache[key]

    def max_coupling(self) -> float:
        return self.amplitude


def coupling(family: CouplingFamily, x):
    """J_x for a lattice vector (or an (..., 2) array of vectors).

    Raises
    ------
    DomainError
        If any vector is zero.
    """
    arr = np.asarray(x)
    scalar = arr.ndim == 1
    arr = np.atleast_2d(arr)
    rad = family.radius(arr[..., 0], arr[..., 1])
    if np.any(rad == 0):
        raise DomainError("no self-coupling: x must be nonzero")
    r = rad.astype(float)
    out = np.where(rad <= family.cutoff_radius, family.amplitude * r ** (-family.alpha), 0.0)
    return float(out[0]) if scalar else out


def layer_pair_mass(family: CouplingFamily, i: int, j: int) -> float:
    """Sum of J_{u,v} over u in L_i and v in L_{i+j}, by direct enumeration."""
    if i < 0 or j < 1:
        raise DomainError("need i >= 0 and j >= 1")
    u = layer_coords(i)
    v = layer_coords(i + j)
    d = v[None, :, :] - u[:, None, :]
    rad = family.radius(d[..., 0], d[..., 1])
    w = np.where(rad <= family.cutoff_radius,
                 family.amplitude * rad.astype(float) ** (-family.alpha), 0.0)
    return float(math.fsum(w.ravel()))
