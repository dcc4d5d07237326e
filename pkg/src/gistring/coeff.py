"""Coefficient data for a regular generalized indefinite string on [0,1).

A string is the pair of coefficients of the differential equation

    -f'' = z*omega*f + z^2*nu*f

restricted to the regular, absolutely continuous case: omega is carried by
its normalized anti-derivative (one real value per grid cell) and nu by its
Radon-Nikodym density (one positive value per cell).  Everything lives on a
uniform grid so that every L1/L2 gap integral between two strings is an
exact cell sum.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpecError, StructureError

__all__ = [
    "GridPartition",
    "PiecewiseConstFn",
    "StringSpec",
    "SpecSequence",
    "CumulativeDensity",
    "SampledCoefficient",
    "DensityCheck",
    "SequenceRow",
    "SequenceReport",
    "cumulative_density",
    "combined_coefficient",
    "check_density",
    "check_sequence",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class GridPartition:
    """Uniform partition of [0,1) into ``n_cells`` half-open cells.

    Node j sits at j*h for j = 0..n_cells; cell j covers [j*h, (j+1)*h).
    """

    n_cells: int

    def __post_init__(self):
        if not isinstance(self.n_cells, (int, np.integer)) or self.n_cells < 2:
            raise InvalidSpecError(f"n_cells must be an integer >= 2, got {self.n_cells!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.h

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.h

    def cell_index(self, x) -> np.ndarray:
        """Cell containing each x in [0,1).  Evaluation at 1 is disallowed."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0) or np.any(x >= 1.0):
            raise ValueError("coefficient evaluation is only defined on [0,1)")
        return np.minimum((x * self.n_cells).astype(int), self.n_cells - 1)


@dataclass(frozen=True)
class PiecewiseConstFn:
    """One scalar per cell; evaluation returns the value of the containing cell."""

    partition: GridPartition
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        if v.shape != (self.partition.n_cells,):
            raise InvalidSpecError(
                f"expected {self.partition.n_cells} cell values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidSpecError("cell values must all be finite")
        object.__setattr__(self, "values", _readonly(v))

    def __call__(self, x) -> np.ndarray:
        return self.values[self.partition.cell_index(x)]

    @property
    def is_real(self) -> bool:
        return self.values.dtype.kind == "f"


def _require_real(fn: PiecewiseConstFn, name: str) -> None:
    if not fn.is_real:
        raise InvalidSpecError(f"{name} must be real-valued")


@dataclass(frozen=True)
class StringSpec:
    """Grid representation of a regular string.

    ``antider`` carries the distributional coefficient omega through its
    normalized anti-derivative; ``density`` carries the measure coefficient nu
    through its Radon-Nikodym density.  Construction checks structure only;
    operations that mathematically require a positive density reject
    non-positive cells when they run.
    """

    partition: GridPartition
    antider: PiecewiseConstFn
    density: PiecewiseConstFn

    def __post_init__(self):
        if self.antider.partition != self.partition or self.density.partition != self.partition:
            raise StructureError("antider and density must live on the spec partition")
        _require_real(self.antider, "antider")
        _require_real(self.density, "density")

    @property
    def density_positive(self) -> bool:
        return bool(np.all(self.density.values > 0.0))

    @property
    def total_mass(self) -> float:
        # Same accumulation as cumulative_density, so the two agree exactly.
        return float(np.cumsum(self.density.values * self.partition.h)[-1])


@dataclass(frozen=True)
class SpecSequence:
    """A base string together with an indexed family of perturbed strings.

    All members share the base partition; ``dominator`` is the non-negative
    integrable bound required of the member densities.
    """

    base: StringSpec
    members: dict[int, StringSpec]
    dominator: PiecewiseConstFn

    def __post_init__(self):
        for n, member in self.members.items():
            if member.partition != self.base.partition:
                raise StructureError(f"member {n} does not share the base partition")
        if self.dominator.partition != self.base.partition:
            raise StructureError("dominator must live on the base partition")
        _require_real(self.dominator, "dominator")
        if np.any(self.dominator.values < 0.0):
            raise InvalidSpecError("dominator values must be non-negative")

    def indices(self) -> list[int]:
        return sorted(self.members)


@dataclass(frozen=True)
class CumulativeDensity:
    """Piecewise-linear anti-derivative q of a cell density, q(0) = 0.

    ``node_values[j]`` is q at node j; within cell j the slope is the cell
    density, so mid-cell values are exact.
    """

    partition: GridPartition
    node_values: np.ndarray
    slopes: np.ndarray

    @property
    def midpoint_values(self) -> np.ndarray:
        return self.node_values[:-1] + self.slopes * (self.partition.h / 2.0)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise ValueError("cumulative density is defined on [0,1]")
        n = self.partition.n_cells
        j = np.minimum((x * n).astype(int), n - 1)
        return self.node_values[j] + self.slopes[j] * (x - j * self.partition.h)


@dataclass(frozen=True)
class SampledCoefficient:
    """Midpoint samples of the combined anti-derivative z*w + z^2*q.

    This is the discrete stand-in for the L2 coefficient of the first-order
    reformulation of the string equation.  ``z`` records the spectral
    parameter the samples were built for (None for hand-built samples).
    """

    partition: GridPartition
    values: np.ndarray
    z: complex | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.partition.n_cells,):
            raise InvalidSpecError(
                f"expected {self.partition.n_cells} samples, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidSpecError("coefficient samples must be finite")
        object.__setattr__(self, "values", _readonly(v))


def cumulative_density(density: PiecewiseConstFn) -> CumulativeDensity:
    """Anti-derivative of a positive cell density: continuous, non-decreasing,
    piecewise linear with the cell value as slope.
    """
    v = density.values
    if not density.is_real or np.any(v <= 0.0):
        raise InvalidSpecError("density must be real and positive on every cell")
    h = density.partition.h
    nodes = np.concatenate(([0.0], np.cumsum(v * h)))
    return CumulativeDensity(density.partition, _readonly(nodes), v)


def combined_coefficient(spec: StringSpec, z: complex) -> SampledCoefficient:
    """Per-cell samples u_j = z*w_j + z^2*q(m_j) at the cell midpoints m_j."""
    q = cumulative_density(spec.density)
    u = z * spec.antider.values + (z * z) * q.midpoint_values
    return SampledCoefficient(spec.partition, u.astype(complex), z=complex(z))


@dataclass(frozen=True)
class DensityCheck:
    """Diagnostic outcome for the measure coefficient of one spec."""

    ok: bool
    positive: bool
    finite_mass: bool
    total_mass: float
    min_density: float


def check_density(spec: StringSpec) -> DensityCheck:
    """Positivity and finite total mass of the measure coefficient.

    Diagnostic: never raises.
    """
    v = spec.density.values
    positive = bool(np.all(v > 0.0))
    mass = float(np.sum(v * spec.partition.h))
    finite = bool(np.isfinite(mass))
    return DensityCheck(
        ok=positive and finite,
        positive=positive,
        finite_mass=finite,
        total_mass=mass,
        min_density=float(np.min(v)),
    )


@dataclass(frozen=True)
class SequenceRow:
    index: int
    density_ok: bool
    dominated: bool
    l1_density_gap: float
    sqrt_density_gap: float
    antider_gap: float
    max_density_gap: float


@dataclass(frozen=True)
class SequenceReport:
    """Per-member convergence diagnostics for a sequence of strings.

    The three gap columns are the exact cell-sum quadratures of
    int |p_n - p| dx, int |sqrt(p_n) - sqrt(p)|^2 dx and int |w_n - w|^2 dx;
    ``max_density_gap`` is the max cellwise density deviation, the grid
    analog of pointwise a.e. convergence.
    """

    rows: list[SequenceRow] = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return all(r.density_ok and r.dominated for r in self.rows)

    def row(self, n: int) -> SequenceRow:
        for r in self.rows:
            if r.index == n:
                return r
        raise KeyError(n)


def check_sequence(seq: SpecSequence) -> SequenceReport:
    """Domination and gap diagnostics for every member of a sequence."""
    h = seq.base.partition.h
    p = seq.base.density.values
    w = seq.base.antider.values
    g = seq.dominator.values
    sqrt_p = np.sqrt(np.maximum(p, 0.0))
    rows = []
    for n in seq.indices():
        member = seq.members[n]
        pn = member.density.values
        wn = member.antider.values
        density_ok = check_density(member).ok
        dominated = bool(np.all(pn <= g))
        sqrt_pn = np.sqrt(np.maximum(pn, 0.0))
        rows.append(
            SequenceRow(
                index=n,
                density_ok=density_ok,
                dominated=dominated,
                l1_density_gap=float(np.sum(np.abs(pn - p)) * h),
                sqrt_density_gap=float(np.sum((sqrt_pn - sqrt_p) ** 2) * h),
                antider_gap=float(np.sum((wn - w) ** 2) * h),
                max_density_gap=float(np.max(np.abs(pn - p))),
            )
        )
    return SequenceReport(rows=rows)
