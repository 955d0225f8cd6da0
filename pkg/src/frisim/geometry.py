"""Surface geometry: candidate grid, subarea partition and RIS baselines."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .specfun import bessel_j0

__all__ = [
    "SurfaceGeometry",
    "Configuration",
    "KernelMode",
    "CorrelationKernel",
    "Grid",
    "build_grid",
    "correlation_matrix",
    "baseline_conventional",
    "baseline_compact",
    "min_pairwise_distance",
    "SPEED_OF_LIGHT",
]

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class SurfaceGeometry:
    """Aperture of ``n_h x n_v`` preset positions split into rectangular subareas.

    ``d_h``/``d_v`` are the element width/height (they set the element area
    ``a_p``); the candidate pitch follows from the aperture and grid size.
    """

    width_m: float
    height_m: float
    n_h: int
    n_v: int
    d_h: float
    d_v: float
    wavelength_m: float
    m_subareas_h: int = 1
    m_subareas_v: int = 1

    def __post_init__(self):
        if self.n_h < 1 or self.n_v < 1:
            raise ConfigError("grid needs at least one column and one row")
        if self.width_m < 0 or self.height_m < 0:
            raise ConfigError("aperture dimensions must be non-negative")
        if min(self.d_h, self.d_v, self.wavelength_m) <= 0:
            raise ConfigError("d_h, d_v and wavelength must be positive")
        if self.m_subareas_h < 1 or self.m_subareas_v < 1:
            raise ConfigError("need at least one subarea per direction")
        if self.n_h % self.m_subareas_h or self.n_v % self.m_subareas_v:
            raise ConfigError(
                f"subareas {self.m_subareas_h}x{self.m_subareas_v} do not divide "
                f"the {self.n_h}x{self.n_v} grid"
            )

    @property
    def n(self) -> int:
        return self.n_h * self.n_v

    @property
    def m(self) -> int:
        return self.m_subareas_h * self.m_subareas_v

    @property
    def per_subarea(self) -> int:
        return self.n // self.m

    @property
    def sub_h(self) -> int:
        return self.n_h // self.m_subareas_h

    @property
    def sub_v(self) -> int:
        return self.n_v // self.m_subareas_v

    @property
    def a_p(self) -> float:
        return self.d_h * self.d_v

    @property
    def pitch_h(self) -> float:
        return self.width_m / (self.n_h - 1) if self.n_h > 1 else 0.0

    @property
    def pitch_v(self) -> float:
        return self.height_m / (self.n_v - 1) if self.n_v > 1 else 0.0

    @property
    def pitch(self) -> float:
        """Smallest nonzero candidate spacing (used as the default ``D``)."""
        p = [x for x in (self.pitch_h, self.pitch_v) if x > 0]
        return min(p) if p else 0.0


@dataclass(frozen=True)
class Grid:
    """Candidate coordinates with their subarea tags.

    ``members[s]`` lists the global indices of subarea ``s`` in local order,
    so ``members[s][a]`` is the candidate reached by local action ``a``.
    """

    points: np.ndarray  # (N, 2)
    subarea: np.ndarray  # (N,)
    local: np.ndarray  # (N,)
    members: np.ndarray  # (M, N/M)


@dataclass(frozen=True)
class Configuration:
    """One active candidate per subarea, ordered by subarea."""

    positions: tuple[int, ...]
    coordinates: np.ndarray  # (M, 2)

    @property
    def m(self) -> int:
        return len(self.positions)

    @classmethod
    def from_indices(cls, grid: Grid, positions) -> "Configuration":
        pos = tuple(int(p) for p in positions)
        return cls(pos, grid.points[list(pos)].copy())

    def validate(self, grid: Grid, min_spacing: float = 0.0) -> None:
        """Raise :class:`ConfigError` unless the configuration is admissible."""
        n = grid.points.shape[0]
        if any(p < 0 or p >= n for p in self.positions):
            raise ConfigError("candidate index out of range")
        subs = [int(grid.subarea[p]) for p in self.positions]
        if subs != list(range(grid.members.shape[0])):
            raise ConfigError("configuration must hold exactly one candidate per subarea, in order")
        if len(self.positions) > 1 and min_pairwise_distance(self.coordinates) < min_spacing * (1 - 1e-12):
            raise ConfigError("minimum spacing violated")


class KernelMode(str, enum.Enum):
    PAPER_LITERAL = "paper_literal"
    JAKES_2PI = "jakes_2pi"


@dataclass(frozen=True)
class CorrelationKernel:
    """Bessel spatial-correlation kernel.

    ``paper_literal`` evaluates ``J0(2 d / lambda)``; ``jakes_2pi`` the
    classical ``J0(2 pi d / lambda)``.
    """

    mode: KernelMode = KernelMode.PAPER_LITERAL
    wavelength_m: float = 0.125

    def __post_init__(self):
        object.__setattr__(self, "mode", KernelMode(self.mode))
        if not self.wavelength_m > 0:
            raise DomainError("wavelength must be positive")

    @property
    def wavenumber(self) -> float:
        scale = 2.0 if self.mode is KernelMode.PAPER_LITERAL else 2.0 * math.pi
        return scale / self.wavelength_m


def build_grid(geometry: SurfaceGeometry) -> Grid:
    """Uniform candidate grid spanning the full aperture (endpoints included).

    Candidates are numbered row-major: index ``j * n_h + i`` sits at
    ``(i * pitch_h, j * pitch_v)``. A single column/row is placed at the
    aperture centre.
    """
    g = geometry
    xs = np.arange(g.n_h) * g.pitch_h if g.n_h > 1 else np.array([g.width_m / 2])
    ys = np.arange(g.n_v) * g.pitch_v if g.n_v > 1 else np.array([g.height_m / 2])
    jj, ii = np.meshgrid(np.arange(g.n_v), np.arange(g.n_h), indexing="ij")
    ii = ii.ravel()
    jj = jj.ravel()
    points = np.column_stack([xs[ii], ys[jj]])
    sub = (jj // g.sub_v) * g.m_subareas_h + ii // g.sub_h
    local = (jj % g.sub_v) * g.sub_h + ii % g.sub_h
    members = np.empty((g.m, g.per_subarea), dtype=np.int64)
    members[sub, local] = np.arange(g.n)
    return Grid(points, sub, local, members)


def _distances(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2:
        raise DomainError("points must be an (n, 2) array")
    diff = p[:, None, :] - p[None, :, :]
    return np.sqrt((diff**2).sum(-1))


def correlation_matrix(points, kernel: CorrelationKernel) -> np.ndarray:
    """Symmetric correlation matrix ``J0(kappa * |u_a - u_b|)`` with unit diagonal."""
    dist = _distances(points)
    if dist.shape[0] == 0:
        raise DomainError("need at least one point")
    arg = kernel.wavenumber * dist
    # J0 is evaluated once per distinct argument; grids repeat distances heavily.
    uniq, inv = np.unique(np.round(arg, 12), return_inverse=True)
    vals = np.array([bessel_j0(float(u)) for u in uniq])
    r = vals[inv].reshape(arg.shape)
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, 1.0)
    return r


def baseline_conventional(geometry: SurfaceGeometry, grid: Grid | None = None) -> Configuration:
    """Candidate nearest to each subarea centroid (lowest index on ties)."""
    grid = build_grid(geometry) if grid is None else grid
    chosen = []
    for s in range(geometry.m):
        idx = grid.members[s]
        pts = grid.points[idx]
        centre = pts.mean(axis=0)
        d2 = ((pts - centre) ** 2).sum(1)
        best = np.flatnonzero(d2 <= d2.min() + 1e-15)
        chosen.append(int(idx[best].min()))
    return Configuration.from_indices(grid, chosen)


def baseline_compact(geometry: SurfaceGeometry, spacing_m: float) -> np.ndarray:
    """Dense ``m_subareas_h x m_subareas_v`` lattice of pitch ``spacing_m``, centred.

    The points are free-standing (not tied to grid candidates).
    """
    g = geometry
    if not spacing_m > 0:
        raise ConfigError("compact spacing must be positive")
    if spacing_m > g.wavelength_m / 2 * (1 + 1e-12):
        raise ConfigError(f"compact spacing {spacing_m} exceeds lambda/2")
    span_h = (g.m_subareas_h - 1) * spacing_m
    span_v = (g.m_subareas_v - 1) * spacing_m
    if span_h > g.width_m * (1 + 1e-12) or span_v > g.height_m * (1 + 1e-12):
        raise ConfigError("compact lattice does not fit inside the aperture")
    xs = g.width_m / 2 + (np.arange(g.m_subareas_h) - (g.m_subareas_h - 1) / 2) * spacing_m
    ys = g.height_m / 2 + (np.arange(g.m_subareas_v) - (g.m_subareas_v - 1) / 2) * spacing_m
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def min_pairwise_distance(points) -> float:
    dist = _distances(points)
    if dist.shape[0] < 2:
        raise DomainError("need at least two points")
    iu = np.triu_indices(dist.shape[0], 1)
    return float(dist[iu].min())
