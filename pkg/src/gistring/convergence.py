"""Convergence experiments over built-in perturbation families.

Three experiments track a perturbed string against its base as the
perturbation decays: solution distance (sup norm of the solution and L2
norm of its derivative at a fixed probe parameter), resolvent distance at a
non-real probe, and the one-sided spectral semi-distance

    rho(sigma_n, sigma) = sup over member eigenvalues of dist(., sigma)

inside a window, whose decay expresses upper semi-continuity of spectra.
Only the one-sided direction is asserted; the reverse is recorded for
diagnostics.
"""

import math
from dataclasses import dataclass

import numpy as np

from .coeff import (
    PiecewiseConstFn,
    SpecSequence,
    StringSpec,
    check_sequence,
    combined_coefficient,
)
from .errors import GisError, InsufficientDataError, InvalidSpecError
from .propagator import propagate, reconstruct_derivative
from .resolvent import resolvent_difference
from .spectral import find_eigenvalues

__all__ = [
    "PerturbationFamily",
    "ConvergenceRow",
    "ConvergenceReport",
    "make_family",
    "run_experiment",
    "fit_rate",
]

FAMILY_KINDS = ("density-shift", "density-wobble", "antiderivative-wobble", "random-bounded")


@dataclass(frozen=True)
class PerturbationFamily:
    """Family n -> perturbed string with amplitude a_n = amplitude / n.

    Wobble kinds oscillate at k_n = max(1, round(frequency * n)) grid-sampled
    full periods; random-bounded draws seeded cellwise perturbations of both
    coefficients with magnitude <= a_n.  The dominator covers every member by
    construction.
    """

    kind: str
    base: StringSpec
    amplitude: float
    frequency: float = 1.0
    seed: int | None = None
    dominator_override: PiecewiseConstFn | None = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise InvalidSpecError(f"unknown family kind {self.kind!r}")
        if not np.isfinite(self.amplitude) or self.amplitude < 0.0:
            raise InvalidSpecError("amplitude must be finite and non-negative")
        if self.kind == "density-wobble" and self.amplitude > 0.5:
            raise InvalidSpecError("density-wobble amplitude must stay <= 1/2")
        if self.kind == "random-bounded" and self.seed is None:
            raise InvalidSpecError("random-bounded families require an explicit seed")
        if not self.base.density_positive:
            raise InvalidSpecError("base density must be positive")

    def _amp(self, n: int) -> float:
        return self.amplitude / n

    def member(self, n: int) -> StringSpec:
        if n < 1:
            raise InvalidSpecError("member index must be >= 1")
        a = self._amp(n)
        part = self.base.partition
        w = self.base.antider.values
        p = self.base.density.values
        x = part.midpoints
        if self.kind == "density-shift":
            pn, wn = p * (1.0 + a), w
        elif self.kind == "density-wobble":
            k = max(1, round(self.frequency * n))
            pn, wn = p * (1.0 + a * np.sin(2.0 * np.pi * k * x)), w
        elif self.kind == "antiderivative-wobble":
            k = max(1, round(self.frequency * n))
            pn, wn = p, w + a * np.sin(2.0 * np.pi * k * x)
        else:  # random-bounded
            rng = np.random.default_rng([self.seed, n])
            pn = p + rng.uniform(-a, a, size=p.shape)
            wn = w + rng.uniform(-a, a, size=w.shape)
        if np.any(pn <= 0.0):
            raise InvalidSpecError(f"member {n} has a non-positive density cell")
        return StringSpec(part, PiecewiseConstFn(part, wn), PiecewiseConstFn(part, pn))

    def dominator(self) -> PiecewiseConstFn:
        if self.dominator_override is not None:
            return self.dominator_override
        p = self.base.density.values
        if self.kind == "random-bounded":
            g = p + self.amplitude
        else:
            g = p * (1.0 + self.amplitude)
        return PiecewiseConstFn(self.base.partition, g)

    def sequence(self, n_list) -> SpecSequence:
        members = {int(n): self.member(int(n)) for n in n_list}
        return SpecSequence(self.base, members, self.dominator())


def make_family(
    kind: str,
    base: StringSpec,
    amplitude: float,
    frequency: float = 1.0,
    seed: int | None = None,
    dominator: PiecewiseConstFn | None = None,
) -> PerturbationFamily:
    return PerturbationFamily(kind, base, amplitude, frequency, seed, dominator)


@dataclass
class ConvergenceRow:
    n: int
    sup_f_gap: float = math.nan
    deriv_gap: float = math.nan
    resolvent_gap: float = math.nan
    spectral_gap: float = math.nan
    spectral_gap_rev: float = math.nan
    valid: bool = True
    note: str = ""


_COLUMNS = ("sup_f_gap", "deriv_gap", "resolvent_gap", "spectral_gap")


@dataclass
class ConvergenceReport:
    rows: list[ConvergenceRow]
    slopes: dict[str, tuple[float, float] | None]

    def column(self, name: str) -> list[float]:
        return [getattr(r, name) for r in self.rows]


def fit_rate(ns, values) -> tuple[float, float]:
    """Least-squares slope of log(value) against log(n), with RMS residual."""
    pairs = [
        (float(n), float(v))
        for n, v in zip(ns, values)
        if np.isfinite(v) and v > 0.0
    ]
    if len(pairs) < 3:
        raise InsufficientDataError("need at least 3 positive values to fit a rate")
    ln = np.log([p[0] for p in pairs])
    lv = np.log([p[1] for p in pairs])
    slope, intercept = np.polyfit(ln, lv, 1)
    residual = float(np.sqrt(np.mean((slope * ln + intercept - lv) ** 2)))
    return float(slope), residual


def _windows_list(window):
    if window and np.ndim(window[0]) == 1:
        return [(float(a), float(b)) for a, b in window]
    return [(float(window[0]), float(window[1]))]


def _window_eigs(spec, windows, scan_step, tol, trim: bool):
    out = []
    for lo, hi in windows:
        sp = find_eigenvalues(spec, (lo, hi), scan_step, tol)
        eigs = sp.eigenvalues
        if trim and eigs.size:
            keep = (eigs > lo + scan_step) & (eigs < hi - scan_step)
            eigs = eigs[keep]
        out.append(eigs)
    return np.sort(np.concatenate(out)) if out else np.empty(0)


def _semi_distance(from_set: np.ndarray, to_set: np.ndarray) -> float:
    if from_set.size == 0:
        return 0.0
    if to_set.size == 0:
        return math.inf
    return float(np.max(np.min(np.abs(from_set[:, None] - to_set[None, :]), axis=1)))


def run_experiment(
    family: PerturbationFamily,
    kind: str = "all",
    n_list=(4, 8, 16, 32, 64),
    window=(0.1, 10.0),
    z_probe: complex = 1j,
    solution_z: float = 1.0,
    solution_data: tuple[complex, complex] = (0.0, 1.0),
    scan_step: float = 0.01,
    tol: float = 1e-10,
) -> ConvergenceReport:
    """Run the requested experiment for every member of the family.

    The family must pass the sequence diagnostics (positive densities,
    dominated); a member whose computation fails is reported as an invalid
    row rather than aborting the run.
    """
    if kind not in ("solution", "resolvent", "spectrum", "all"):
        raise ValueError(f"unknown experiment kind {kind!r}")
    z_probe = complex(z_probe)
    if kind in ("resolvent", "all") and z_probe.imag == 0.0:
        raise ValueError("resolvent probe must be non-real")

    seq = family.sequence(n_list)
    report = check_sequence(seq)
    if not report.all_ok:
        bad = [r.index for r in report.rows if not (r.density_ok and r.dominated)]
        raise InvalidSpecError(f"family members {bad} violate the sequence hypotheses")

    base = family.base
    windows = _windows_list(window)

    do_solution = kind in ("solution", "all")
    do_resolvent = kind in ("resolvent", "all")
    do_spectrum = kind in ("spectrum", "all")

    if do_solution:
        base_coeff = combined_coefficient(base, solution_z)
        base_path = propagate(base_coeff, "left", solution_data)
        base_deriv = reconstruct_derivative(base_path, base_coeff)
    if do_spectrum:
        base_eigs = _window_eigs(base, windows, scan_step, tol, trim=False)

    h = base.partition.h
    rows = []
    for n in sorted(int(n) for n in n_list):
        row = ConvergenceRow(n=n)
        member = seq.members[n]
        try:
            if do_solution:
                coeff = combined_coefficient(member, solution_z)
                path = propagate(coeff, "left", solution_data)
                deriv = reconstruct_derivative(path, coeff)
                row.sup_f_gap = float(np.max(np.abs(path.f - base_path.f)))
                row.deriv_gap = float(np.sum(np.abs(deriv - base_deriv) ** 2) * h)
            if do_resolvent:
                row.resolvent_gap = resolvent_difference(member, base, z_probe)
            if do_spectrum:
                member_eigs = _window_eigs(member, windows, scan_step, tol, trim=True)
                row.spectral_gap = _semi_distance(member_eigs, base_eigs)
                row.spectral_gap_rev = _semi_distance(base_eigs, member_eigs)
        except GisError as exc:
            row.valid = False
            row.note = str(exc)
        rows.append(row)

    ns = [r.n for r in rows if r.valid]
    slopes: dict[str, tuple[float, float] | None] = {}
    for column in _COLUMNS:
        values = [getattr(r, column) for r in rows if r.valid]
        try:
            slopes[column] = fit_rate(ns, values)
        except InsufficientDataError:
            slopes[column] = None
    return ConvergenceReport(rows=rows, slopes=slopes)
