"""Points of the open unit ball and kernel parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class BallPoint:
    """A point of the open unit ball ``B^n`` with its squared norm cached."""

    coords: tuple
    norm_sq: float

    def __post_init__(self):
        if len(self.coords) < 1:
            raise DomainError("a ball point needs at least one coordinate")
        if not all(math.isfinite(c) for c in self.coords):
            raise DomainError(f"non-finite coordinates {self.coords}")
        if not self.norm_sq < 1.0:
            raise DomainError(f"|x|^2 = {self.norm_sq!r} is not inside the open unit ball")

    @classmethod
    def of(cls, coords: Sequence[float]) -> "BallPoint":
        c = tuple(float(v) for v in np.ravel(coords))
        return cls(c, math.fsum(v * v for v in c))

    @classmethod
    def origin(cls, n: int) -> "BallPoint":
        return cls((0.0,) * n, 0.0)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_sq)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coords)

    def is_origin(self) -> bool:
        return self.norm_sq == 0.0

    def dot(self, other: "BallPoint") -> float:
        _check_same_dim(self, other)
        return math.fsum(a * b for a, b in zip(self.coords, other.coords))

    def dist_sq(self, other: "BallPoint") -> float:
        _check_same_dim(self, other)
        return math.fsum((a - b) ** 2 for a, b in zip(self.coords, other.coords))

    def scaled(self, factor: float) -> "BallPoint":
        return BallPoint.of([factor * c for c in self.coords])


def _check_same_dim(x: BallPoint, y: BallPoint) -> None:
    if x.dim != y.dim:
        raise DomainError(f"dimension mismatch: {x.dim} vs {y.dim}")


def as_point(x, n: int | None = None) -> BallPoint:
    """Coerce a coordinate sequence (or a BallPoint) and check its dimension."""
    p = x if isinstance(x, BallPoint) else BallPoint.of(x)
    if n is not None and p.dim != n:
        raise DomainError(f"point has {p.dim} coordinates, expected n = {n}")
    return p


@dataclass(frozen=True)
class KernelParams:
    """Dimension ``n >= 3`` and Bergman weight ``s > -1``."""

    n: int
    s: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            # the zonal normalisation divides by n - 2
            raise DomainError(f"dimension n must be an integer >= 3, got {self.n!r}")
        if not self.s > -1.0:
            raise DomainError(f"Bergman weight s must exceed -1, got {self.s!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "s", float(self.s))


def random_ball_points(rng: np.random.Generator, n: int, count: int,
                       radius: float) -> list[BallPoint]:
    """``count`` points uniform in the ball of the given radius (``radius < 1``)."""
    if not 0.0 <= radius < 1.0:
        raise DomainError(f"sampling radius must lie in [0, 1), got {radius}")
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.uniform(size=count) ** (1.0 / n)
    return [BallPoint.of(v) for v in g * r[:, None]]
