"""Fundamental solutions, Wronskians, and eigenvalue location.

Under the boundary conditions f(0) = 0 and f(1-) = 0 the eigenvalues of the
string relation are the real zeros of the characteristic function

    E(z) = value at 1- of the solution with f(0) = 0, f'(0-) = 1.

E(0) = 1 for every valid string (zero spectral parameter gives the linear
path x), so 0 never appears in a spectrum report.  The scan-and-bisect
search assumes the spectrum inside the window is discrete and that zeros are
simple; even-order zeros produce no sign change and are not found.
"""

from dataclasses import dataclass

import numpy as np

from .coeff import StringSpec, combined_coefficient, cumulative_density
from .errors import NearEigenvalueError, StructureError
from .propagator import SolutionPath, _sweep_left, propagate

__all__ = [
    "FundamentalPair",
    "Spectrum",
    "fundamental_pair",
    "wronskian",
    "characteristic",
    "characteristic_batch",
    "find_eigenvalues",
]

# Relative smallness of the right-propagated solution at 0 that flags z as
# sitting on (or next to) an eigenvalue, where the pair degenerates.
_EIGEN_PROXIMITY = 1e-8


@dataclass(frozen=True)
class FundamentalPair:
    """Normalized solution pair at one spectral parameter.

    ``left_vanishing`` has f(0) = 0 and f'(0-) = 1; ``right_vanishing`` has
    f(0) = 1 and f(1-) = 0.  Their Wronskian is 1 by construction.
    """

    z: complex
    left_vanishing: SolutionPath
    right_vanishing: SolutionPath
    wronskian: complex


def wronskian(theta: SolutionPath, phi: SolutionPath) -> complex:
    """theta(0)*phi'(0-) - theta'(0-)*phi(0) for two paths at the same z."""
    if theta.partition != phi.partition:
        raise StructureError("paths must share the partition")
    if theta.z is not None and phi.z is not None and theta.z != phi.z:
        raise StructureError("paths were propagated at different spectral parameters")
    return complex(theta.f[0] * phi.delta0 - theta.delta0 * phi.f[0])


def fundamental_pair(spec: StringSpec, z: complex) -> FundamentalPair:
    """Build the normalized pair by one forward and one backward sweep.

    The backward solution is rescaled by its value at 0; when that value is
    negligible relative to the solution size, z is at or near an eigenvalue
    and the pair does not exist.
    """
    z = complex(z)
    coeff = combined_coefficient(spec, z)
    left = propagate(coeff, "left", (0.0, 1.0))
    phi = propagate(coeff, "right", (0.0, 1.0))
    scale = phi.f[0]
    if abs(scale) < _EIGEN_PROXIMITY * np.max(np.abs(phi.f)):
        raise NearEigenvalueError(f"z = {z} is at or near an eigenvalue")
    psi1 = phi.scaled(1.0 / scale)
    return FundamentalPair(z, left, psi1, wronskian(psi1, left))


def characteristic(spec: StringSpec, z: complex) -> complex:
    """E(z): endpoint value of the left-normalized solution."""
    coeff = combined_coefficient(spec, complex(z))
    path = propagate(coeff, "left", (0.0, 1.0))
    return complex(path.f[-1])


def characteristic_batch(spec: StringSpec, zs: np.ndarray) -> np.ndarray:
    """E evaluated at an array of spectral parameters in one sweep."""
    zs = np.asarray(zs, dtype=complex)
    if zs.size == 0:
        return np.empty(0, dtype=complex)
    w = spec.antider.values
    qmid = cumulative_density(spec.density).midpoint_values
    u = zs[:, None] * w[None, :] + (zs * zs)[:, None] * qmid[None, :]
    f, _ = _sweep_left(u, spec.partition.h, 0.0, 1.0)
    return f[:, -1]


@dataclass(frozen=True)
class Spectrum:
    """Sorted real eigenvalues found inside a window, with |E| residuals."""

    window: tuple[float, float]
    eigenvalues: np.ndarray
    residuals: np.ndarray
    scan_step: float


def _scan_grid(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(np.floor((hi - lo) / step)) + 1
    grid = lo + step * np.arange(count)
    if grid[-1] < hi - 1e-12 * max(1.0, abs(hi)):
        grid = np.append(grid, hi)
    return grid


def find_eigenvalues(
    spec: StringSpec,
    window: tuple[float, float],
    scan_step: float = 0.01,
    tol: float = 1e-10,
) -> Spectrum:
    """Scan E on a real grid, bracket sign changes, refine by bisection.

    Roots are reported once each, strictly inside the window, sorted, with
    residual |E|.  Roots closer to 0 than half a scan step are dropped (E(0)
    is identically 1, so they can only be windowing artifacts).
    """
    lo, hi = float(window[0]), float(window[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise ValueError(f"invalid window [{lo}, {hi}]")
    if scan_step <= 0.0 or tol <= 0.0:
        raise ValueError("scan_step and tol must be positive")

    grid = _scan_grid(lo, hi, scan_step)
    ev = characteristic_batch(spec, grid).real

    roots = list(grid[ev == 0.0])
    sign_change = ev[:-1] * ev[1:] < 0.0
    a = grid[:-1][sign_change]
    b = grid[1:][sign_change]
    ea = ev[:-1][sign_change]
    while a.size and np.max(b - a) > tol:
        mid = 0.5 * (a + b)
        em = characteristic_batch(spec, mid).real
        go_left = ea * em <= 0.0
        b = np.where(go_left, mid, b)
        a = np.where(go_left, a, mid)
        ea = np.where(go_left, ea, em)
    roots.extend(0.5 * (a + b))

    roots = sorted(r for r in roots if lo < r < hi and abs(r) > 0.5 * scan_step)
    deduped: list[float] = []
    for r in roots:
        if not deduped or r - deduped[-1] > tol:
            deduped.append(float(r))
    eigs = np.asarray(deduped)
    residuals = np.abs(characteristic_batch(spec, eigs)) if eigs.size else np.empty(0)
    return Spectrum((lo, hi), eigs, residuals, float(scan_step))
