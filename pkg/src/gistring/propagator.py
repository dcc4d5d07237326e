"""Exact per-cell transfer propagation of the string equation.

With u the combined anti-derivative, the equation -f'' = z*omega*f + z^2*nu*f
is equivalent to the first-order system F' = R(u) F for the state
F = (f, f' + u*f), where

    R(u) = [[-u, 1], [-u^2, u]].

R(u)^2 = 0, so for u frozen on a cell of width h the exact solution operator
is exp(h*R) = I + h*R, a matrix with determinant exactly 1.  Freezing u at
the cell midpoint makes the sweep second-order accurate while every cell
matrix stays exactly unimodular; right-endpoint data is handled with the
exact inverse (I + h*R)^{-1} = I - h*R rather than by reversing arrays.
"""

from dataclasses import dataclass

import numpy as np

from .coeff import GridPartition, SampledCoefficient, StringSpec, combined_coefficient
from .errors import PropagationOverflowError, StructureError

__all__ = [
    "SolutionPath",
    "cell_transfer",
    "propagate",
    "reconstruct_derivative",
    "weak_residual",
]


@dataclass(frozen=True)
class SolutionPath:
    """Discrete trajectory of F = (f, f' + u*f) for one spectral parameter.

    ``f`` and ``s`` hold the two state components at the n+1 grid nodes;
    ``delta0`` is f'(0-), which equals s(0) because the combined
    anti-derivative is normalized to vanish at 0.
    """

    z: complex | None
    partition: GridPartition
    f: np.ndarray
    s: np.ndarray

    @property
    def delta0(self) -> complex:
        return complex(self.s[0])

    def scaled(self, factor: complex) -> "SolutionPath":
        return SolutionPath(self.z, self.partition, self.f * factor, self.s * factor)


def cell_transfer(u: complex, h: float) -> np.ndarray:
    """Exact transfer matrix I + h*R(u) of one cell with frozen coefficient."""
    if h <= 0.0:
        raise ValueError("cell width must be positive")
    u = complex(u)
    return np.array([[1.0 - h * u, h], [-h * u * u, 1.0 + h * u]], dtype=complex)


def _sweep_left(u: np.ndarray, h: float, d1: complex, d2: complex):
    """Forward sweep; u has shape (..., n).  Returns node arrays (..., n+1)."""
    n = u.shape[-1]
    shape = u.shape[:-1] + (n + 1,)
    f = np.empty(shape, dtype=complex)
    s = np.empty(shape, dtype=complex)
    f[..., 0] = d1
    s[..., 0] = d2
    for j in range(n):
        uj = u[..., j]
        fj = f[..., j]
        sj = s[..., j]
        f[..., j + 1] = (1.0 - h * uj) * fj + h * sj
        s[..., j + 1] = (-h) * uj * uj * fj + (1.0 + h * uj) * sj
    return f, s


def _sweep_right(u: np.ndarray, h: float, a: complex):
    """Backward sweep from F(1-) = (0, a) using the exact inverse transfers."""
    n = u.shape[-1]
    shape = u.shape[:-1] + (n + 1,)
    f = np.empty(shape, dtype=complex)
    s = np.empty(shape, dtype=complex)
    f[..., n] = 0.0
    s[..., n] = a
    for j in range(n - 1, -1, -1):
        uj = u[..., j]
        fj = f[..., j + 1]
        sj = s[..., j + 1]
        f[..., j] = (1.0 + h * uj) * fj - h * sj
        s[..., j] = h * uj * uj * fj + (1.0 - h * uj) * sj
    return f, s


def _check_finite(f: np.ndarray, s: np.ndarray) -> None:
    bad = ~(np.isfinite(f) & np.isfinite(s))
    if bad.any():
        node = int(np.argmax(bad.reshape(-1, bad.shape[-1]).any(axis=0)))
        raise PropagationOverflowError(max(node - 1, 0))


def propagate(
    coeff: SampledCoefficient,
    start: str,
    data: tuple[complex, complex],
) -> SolutionPath:
    """Propagate the state across all cells from one endpoint.

    ``start="left"`` imposes F(0) = data; ``start="right"`` imposes
    F(1-) = data and requires the first component of data to be 0.
    """
    d1, d2 = complex(data[0]), complex(data[1])
    if not (np.isfinite(d1) and np.isfinite(d2)):
        raise ValueError("initial data must be finite")
    h = coeff.partition.h
    if start == "left":
        f, s = _sweep_left(coeff.values, h, d1, d2)
    elif start == "right":
        if d1 != 0.0:
            raise ValueError("right-endpoint data must have vanishing first component")
        f, s = _sweep_right(coeff.values, h, d2)
    else:
        raise ValueError(f"start must be 'left' or 'right', got {start!r}")
    _check_finite(f, s)
    return SolutionPath(coeff.z, coeff.partition, f, s)


def reconstruct_derivative(path: SolutionPath, coeff: SampledCoefficient) -> np.ndarray:
    """Per-cell derivative values f'_j = s_j - u_j*f_j at the left cell nodes."""
    if path.partition != coeff.partition:
        raise StructureError("path and coefficient must share the partition")
    return path.s[:-1] - coeff.values * path.f[:-1]


def weak_residual(path: SolutionPath, spec: StringSpec, z: complex, k: int) -> complex:
    """Defect of the weak form of the string equation against the hat at node k.

    The test function is the piecewise-linear hat supported on
    [(k-1)h, (k+1)h]; it must vanish at 0 and its support must stay away
    from 1, so 1 <= k <= n-2.  The distributional coefficient acts through
    integration by parts against its anti-derivative.
    """
    n = spec.partition.n_cells
    if not 1 <= k <= n - 2:
        raise ValueError(
            "hat index must satisfy 1 <= k <= n_cells - 2 (support inside (0,1))"
        )
    z = complex(z)
    if path.z is not None and path.z != z:
        raise StructureError("path was propagated at a different spectral parameter")
    if path.partition != spec.partition:
        raise StructureError("path and spec must share the partition")

    h = spec.partition.h
    coeff = combined_coefficient(spec, z)
    fp = reconstruct_derivative(path, coeff)
    f_mid = 0.5 * (path.f[:-1] + path.f[1:])

    hat = np.zeros(n + 1)
    hat[k] = 1.0
    hat_mid = 0.5 * (hat[:-1] + hat[1:])
    hat_prime = np.diff(hat) / h

    lhs = np.sum(fp * hat_prime) * h  # delta0 * hat(0) vanishes for k >= 1
    w_term = -z * np.sum(spec.antider.values * (fp * hat_mid + f_mid * hat_prime)) * h
    p_term = (z * z) * np.sum(spec.density.values * f_mid * hat_mid) * h
    return complex(lhs - (w_term + p_term))
