"""Grids, discrete inner products and the discretized white-noise model.

Observations live on a finite sample set ``S`` of a domain ``D``.  Functions
are represented by their values on ``S`` and paired through the weighted sum

    <x, y>_n = vol(D) / n * sum_s x_s * conj(y_s)

so that the scaled noise ``sqrt(n / vol(D)) * xi`` has covariance ``<x, x'>_n``
under this pairing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "SampledFunction",
    "ScalarField",
    "ObservationConfig",
    "GridMismatchError",
    "make_uniform_grid",
    "product_grid",
    "inner_product_n",
    "replication_rng",
    "standard_noise",
    "simulate_observation",
]


class GridMismatchError(ValueError):
    """Two objects that must share a sample grid do not."""


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor-product sample set with an attached domain volume.

    Parameters
    ----------
    axes : tuple of 1-D arrays
        Sample locations along each coordinate.  A 1-D grid has one axis.
    volume : float
        ``vol(D)`` of the sampled domain.
    """

    axes: tuple
    volume: float

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float).ravel() for a in self.axes)
        if not axes or any(a.size == 0 for a in axes):
            raise ValueError("grid needs at least one point per axis")
        if not np.isfinite(self.volume) or self.volume <= 0:
            raise ValueError(f"grid volume must be positive, got {self.volume}")
        for a in axes:
            if a.size > 1 and np.any(np.diff(a) <= 0):
                raise ValueError("grid axes must be strictly increasing")
        object.__setattr__(self, "axes", axes)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(a.size for a in self.axes)

    @property
    def n(self) -> int:
        return int(np.prod(self.shape))

    @property
    def weight(self) -> float:
        """Quadrature weight ``vol(D) / n``."""
        return self.volume / self.n

    @cached_property
    def spacing(self) -> tuple:
        out = []
        for a in self.axes:
            out.append(float(a[1] - a[0]) if a.size > 1 else float("nan"))
        return tuple(out)

    @cached_property
    def is_uniform(self) -> bool:
        for a in self.axes:
            if a.size > 2:
                d = np.diff(a)
                if np.max(np.abs(d - d[0])) > 1e-9 * max(abs(d[0]), 1e-300):
                    return False
        return True

    @property
    def points(self) -> np.ndarray:
        """All sample locations as an ``(n, ndim)`` array, row-major."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def same_as(self, other: "Grid") -> bool:
        if self is other:
            return True
        if not isinstance(other, Grid) or self.shape != other.shape:
            return False
        if not np.isclose(self.volume, other.volume, rtol=1e-12, atol=0):
            return False
        return all(np.allclose(a, b, rtol=0, atol=1e-12) for a, b in zip(self.axes, other.axes))

    def zeros(self, dtype=float) -> "SampledFunction":
        return SampledFunction(self, np.zeros(self.shape, dtype=dtype))


def make_uniform_grid(a: float, b: float, n: int) -> Grid:
    """Equispaced left-endpoint grid ``a + i (b - a) / n`` on ``[a, b)``."""
    if int(n) != n or n < 1:
        raise ValueError(f"number of points must be a positive integer, got {n}")
    if not b > a:
        raise ValueError(f"need b > a, got a={a}, b={b}")
    n = int(n)
    pts = a + (b - a) * np.arange(n) / n
    return Grid((pts,), float(b - a))


def product_grid(*grids: Grid) -> Grid:
    """Tensor product of grids; volumes multiply."""
    axes = []
    vol = 1.0
    for g in grids:
        axes.extend(g.axes)
        vol *= g.volume
    return Grid(tuple(axes), vol)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values of a function on a :class:`Grid`, shaped like ``grid.shape``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        if vals.size != self.grid.n:
            raise ValueError(f"expected {self.grid.n} values, got {vals.size}")
        vals = vals.reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("sampled values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def norm(self) -> float:
        return float(np.sqrt(inner_product_n(self, self).real))

    def __add__(self, other):
        _check_same_grid(self.grid, other.grid)
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self.grid, other.grid)
        return SampledFunction(self.grid, self.values - other.values)

    def __mul__(self, c):
        return SampledFunction(self.grid, self.values * c)

    __rmul__ = __mul__


class ScalarField(enum.Enum):
    REAL = "real"
    COMPLEX = "complex"

    @property
    def epsilon(self) -> float:
        """Field factor: 1 for real spaces, sqrt(2) for complex ones."""
        return 1.0 if self is ScalarField.REAL else float(np.sqrt(2.0))

    @classmethod
    def coerce(cls, value) -> "ScalarField":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"field must be 'real' or 'complex', got {value!r}") from None


@dataclass(frozen=True)
class ObservationConfig:
    """Noise level, seed and scalar field of a simulated observation.

    ``noiseless=True`` returns the exact image ``A_S f`` (the sigma -> 0 limit).
    """

    sigma: float
    seed: int = 0
    field: ScalarField = ScalarField.REAL
    noiseless: bool = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "field", ScalarField.coerce(self.field))


def _check_same_grid(g1: Grid, g2: Grid):
    if not g1.same_as(g2):
        raise GridMismatchError(f"grid mismatch: shapes {g1.shape} vs {g2.shape}")


def inner_product_n(x: SampledFunction, y: SampledFunction) -> complex | float:
    """Weighted pairing ``vol(D)/n * sum x_s conj(y_s)``."""
    _check_same_grid(x.grid, y.grid)
    val = x.grid.weight * np.vdot(y.flat, x.flat)
    if np.iscomplexobj(x.values) or np.iscomplexobj(y.values):
        return complex(val)
    return float(np.real(val))


def replication_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator for the stream ``(seed, *stream)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys, so
    draws for a given ``(seed, index)`` do not depend on how many other
    streams are used or in which order they run.
    """
    seq = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(seq))


def standard_noise(rng: np.random.Generator, size, field: ScalarField = ScalarField.REAL):
    """N(0, 1) draws, or X1 + i X2 with X1, X2 iid N(0, 1) (variance 2) if complex."""
    field = ScalarField.coerce(field)
    if field is ScalarField.REAL:
        return rng.standard_normal(size)
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


def simulate_observation(op, f: SampledFunction, cfg: ObservationConfig) -> SampledFunction:
    """Draw ``Y = A_S f + sigma * sqrt(n / vol(D)) * xi`` on the operator's output grid."""
    image = op.apply(f)
    if cfg.noiseless:
        return image
    grid = image.grid
    xi = standard_noise(replication_rng(cfg.seed), grid.shape, cfg.field)
    scale = cfg.sigma * np.sqrt(grid.n / grid.volume)
    return SampledFunction(grid, image.values + scale * xi)
