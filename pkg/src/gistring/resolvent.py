"""Resolvents of the string relation on the unweighted product space.

The relation associated with a string acts on pairs (f1, f2) where f1 has a
square-integrable derivative and vanishes at both ends of [0,1) and f2 is
square integrable against the string measure.  Multiplying the second
component by sqrt(density) maps that space isometrically onto the flat
product space; there the resolvent acts through the Green's kernel

    G(x,t) = psi1(max(x,t)) * psi2(min(x,t)) / W(psi1, psi2)

built from the fundamental pair.  On the grid the first component is stored
through its per-cell derivative (zero cell-sum encodes the two boundary
conditions), the second as per-cell values, and the kernel application
reduces to prefix sums, so one apply costs O(n) and a full matrix O(n^2).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .coeff import GridPartition, PiecewiseConstFn, StringSpec
from .errors import InvalidSpecError, NumericError, StructureError
from .spectral import FundamentalPair, fundamental_pair

__all__ = [
    "StateVector",
    "ResolventMatrix",
    "unweight",
    "reweight",
    "unweight_state",
    "reweight_state",
    "greens_function",
    "resolvent_apply",
    "resolvent_matrix",
    "operator_norm",
    "resolvent_difference",
    "state_to_coords",
    "coords_to_state",
]

_MEAN_TOL = 1e-12


@dataclass(frozen=True)
class StateVector:
    """Element of the discretized product space.

    ``f1_prime`` holds the per-cell derivative of the first component; its
    cell sum must vanish so the reconstructed function is 0 at both ends.
    ``f2`` holds the per-cell values of the second component.
    """

    partition: GridPartition
    f1_prime: np.ndarray
    f2: np.ndarray

    def __post_init__(self):
        n = self.partition.n_cells
        f1p = np.asarray(self.f1_prime, dtype=complex)
        f2 = np.asarray(self.f2, dtype=complex)
        if f1p.shape != (n,) or f2.shape != (n,):
            raise InvalidSpecError(f"state components must have shape ({n},)")
        if not (np.all(np.isfinite(f1p)) and np.all(np.isfinite(f2))):
            raise InvalidSpecError("state components must be finite")
        mean = abs(np.sum(f1p) * self.partition.h)
        scale = max(1.0, float(np.max(np.abs(f1p))) if n else 1.0)
        if mean > _MEAN_TOL * scale:
            raise InvalidSpecError(
                f"first component violates the zero-mean boundary encoding ({mean:.3e})"
            )
        object.__setattr__(self, "f1_prime", f1p)
        object.__setattr__(self, "f2", f2)

    @classmethod
    def projected(cls, partition: GridPartition, f1_prime, f2) -> "StateVector":
        """Build a state after removing the cell mean of the first component."""
        f1p = np.asarray(f1_prime, dtype=complex)
        return cls(partition, f1p - np.mean(f1p), np.asarray(f2, dtype=complex))

    def first_component_nodes(self) -> np.ndarray:
        """Node values of the reconstructed first component (0 at both ends)."""
        h = self.partition.h
        return np.concatenate(([0.0], np.cumsum(self.f1_prime * h)))

    def norm(self) -> float:
        h = self.partition.h
        return float(
            np.sqrt(h * (np.sum(np.abs(self.f1_prime) ** 2) + np.sum(np.abs(self.f2) ** 2)))
        )

    def weighted_norm(self, density: PiecewiseConstFn) -> float:
        """Norm with the second component measured against the string measure."""
        h = self.partition.h
        return float(
            np.sqrt(
                h
                * (
                    np.sum(np.abs(self.f1_prime) ** 2)
                    + np.sum(density.values * np.abs(self.f2) ** 2)
                )
            )
        )


def _sqrt_density(density: PiecewiseConstFn) -> np.ndarray:
    if not density.is_real or np.any(density.values <= 0.0):
        raise InvalidSpecError("density must be real and positive on every cell")
    return np.sqrt(density.values)


def unweight(values: np.ndarray, density: PiecewiseConstFn) -> np.ndarray:
    """Multiply by sqrt(density): isometry from the weighted into the flat L2."""
    return np.asarray(values) * _sqrt_density(density)


def reweight(values: np.ndarray, density: PiecewiseConstFn) -> np.ndarray:
    """Divide by sqrt(density): inverse of :func:`unweight`."""
    return np.asarray(values) / _sqrt_density(density)


def unweight_state(state: StateVector, density: PiecewiseConstFn) -> StateVector:
    """Map a weighted-space state to the flat space (second component only)."""
    return StateVector(state.partition, state.f1_prime, unweight(state.f2, density))


def reweight_state(state: StateVector, density: PiecewiseConstFn) -> StateVector:
    return StateVector(state.partition, state.f1_prime, reweight(state.f2, density))


def greens_function(pair: FundamentalPair, x, t) -> np.ndarray:
    """Scalar kernel factor at node indices (x, t); symmetric by construction."""
    x = np.asarray(x, dtype=int)
    t = np.asarray(t, dtype=int)
    hi = np.maximum(x, t)
    lo = np.minimum(x, t)
    psi1 = pair.right_vanishing.f
    psi2 = pair.left_vanishing.f
    return psi1[hi] * psi2[lo] / pair.wronskian


def _kernel_apply(spec: StringSpec, z: complex, pair: FundamentalPair, g1p, g2):
    """Apply the Green's kernel to per-cell data (vectorized over columns).

    Returns (r1p, r2, h_nodes).  The t-integrals use exact node differences
    for the derivative part and per-cell trapezoids for the measure part, so
    the whole quadratic form is complex symmetric.
    """
    h = spec.partition.h
    sqrt_p = _sqrt_density(spec.density)
    psi1 = pair.right_vanishing.f / pair.wronskian
    psi2 = pair.left_vanishing.f

    g1p = np.asarray(g1p, dtype=complex)
    g2 = np.asarray(g2, dtype=complex)
    squeeze = g1p.ndim == 1
    if squeeze:
        g1p = g1p[:, None]
        g2 = g2[:, None]

    dpsi1 = np.diff(psi1)[:, None]
    dpsi2 = np.diff(psi2)[:, None]
    mpsi1 = (0.5 * (psi1[:-1] + psi1[1:]))[:, None]
    mpsi2 = (0.5 * (psi2[:-1] + psi2[1:]))[:, None]
    weight = (z * h) * sqrt_p[:, None] * g2

    a = g1p * dpsi2 + weight * mpsi2
    b = g1p * dpsi1 + weight * mpsi1
    zero_row = np.zeros((1, a.shape[1]), dtype=complex)
    prefix = np.concatenate([zero_row, np.cumsum(a, axis=0)])
    suffix = np.concatenate([np.cumsum(b[::-1], axis=0)[::-1], zero_row])
    h_nodes = psi1[:, None] * prefix + psi2[:, None] * suffix

    r1p = np.diff(h_nodes, axis=0) / (z * h) - g1p / z
    r2 = sqrt_p[:, None] * 0.5 * (h_nodes[:-1] + h_nodes[1:])
    if squeeze:
        return r1p[:, 0], r2[:, 0], h_nodes[:, 0]
    return r1p, r2, h_nodes


def resolvent_apply(spec: StringSpec, z: complex, g: StateVector, return_h: bool = False):
    """Apply the resolvent of the flat-space relation to a state.

    Valid for any z away from the spectrum; z = 0 is unsupported because the
    kernel formula produces z times the resolvent.
    """
    z = complex(z)
    if z == 0.0:
        raise ValueError("z = 0 is not supported by the resolvent formula")
    if g.partition != spec.partition:
        raise StructureError("state and spec must share the partition")
    pair = fundamental_pair(spec, z)
    r1p, r2, h_nodes = _kernel_apply(spec, z, pair, g.f1_prime, g.f2)
    out = StateVector(spec.partition, r1p, r2)
    if return_h:
        return out, h_nodes
    return out


@lru_cache(maxsize=8)
def _mean_zero_basis(n: int) -> np.ndarray:
    """Orthonormal basis (Euclidean) of the mean-zero subspace of R^n.

    Columns are orthonormalized differences of adjacent cell indicators.
    """
    d = np.zeros((n, n - 1))
    idx = np.arange(n - 1)
    d[idx, idx] = 1.0
    d[idx + 1, idx] = -1.0
    q, _ = np.linalg.qr(d)
    return q


@dataclass(frozen=True)
class ResolventMatrix:
    """Dense resolvent matrix in the orthonormal basis of the discrete space.

    Coordinates: n_cells - 1 mean-zero derivative directions followed by
    n_cells normalized cell indicators; the Euclidean norm of a coordinate
    vector equals the space norm of the state it represents, so spectral
    norms of these matrices are honest operator norms.
    """

    z: complex
    partition: GridPartition
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return 2 * self.partition.n_cells - 1


def state_to_coords(state: StateVector) -> np.ndarray:
    n = state.partition.n_cells
    sh = np.sqrt(state.partition.h)
    v1 = _mean_zero_basis(n)
    return np.concatenate([sh * (v1.T @ state.f1_prime), sh * state.f2])


def coords_to_state(partition: GridPartition, coords: np.ndarray) -> StateVector:
    n = partition.n_cells
    coords = np.asarray(coords, dtype=complex)
    if coords.shape != (2 * n - 1,):
        raise StructureError(f"expected {2 * n - 1} coordinates")
    sh = np.sqrt(partition.h)
    v1 = _mean_zero_basis(n)
    return StateVector(partition, (v1 @ coords[: n - 1]) / sh, coords[n - 1 :] / sh)


def resolvent_matrix(spec: StringSpec, z: complex) -> ResolventMatrix:
    """Assemble the resolvent on the full orthonormal basis in one batch."""
    z = complex(z)
    if z == 0.0:
        raise ValueError("z = 0 is not supported by the resolvent formula")
    n = spec.partition.n_cells
    sh = np.sqrt(spec.partition.h)
    v1 = _mean_zero_basis(n)
    g1p = np.concatenate([v1 / sh, np.zeros((n, n))], axis=1)
    g2 = np.concatenate([np.zeros((n, n - 1)), np.eye(n) / sh], axis=1)
    pair = fundamental_pair(spec, z)
    r1p, r2, _ = _kernel_apply(spec, z, pair, g1p, g2)
    top = sh * (v1.T @ r1p)
    bottom = sh * r2
    return ResolventMatrix(z, spec.partition, np.concatenate([top, bottom], axis=0))


def operator_norm(m: np.ndarray, tol: float = 1e-10, max_iter: int = 10000) -> float:
    """Largest singular value by seeded block power iteration.

    For small matrices (min dimension <= 64) the value is cross-checked
    against a full decomposition; disagreement raises ``NumericError``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValueError("operator_norm expects a 2-D matrix")
    if m.size == 0:
        return 0.0
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")

    k = min(m.shape)
    block = min(4, k)
    rng = np.random.default_rng(180451)
    v = rng.standard_normal((m.shape[1], block)) + 1j * rng.standard_normal(
        (m.shape[1], block)
    )
    v, _ = np.linalg.qr(v)

    sigma = 0.0
    stable = 0
    converged = False
    for _ in range(max_iter):
        w = m @ v
        gram = w.conj().T @ w
        estimate = float(np.sqrt(max(np.linalg.eigvalsh(gram).max(), 0.0)))
        if estimate == 0.0:
            sigma = 0.0
            converged = True
            break
        if abs(estimate - sigma) <= tol * estimate:
            stable += 1
            sigma = estimate
            if stable >= 2:
                converged = True
                break
        else:
            stable = 0
            sigma = estimate
        v, _ = np.linalg.qr(m.conj().T @ w)
    if not converged:
        raise NumericError(f"power iteration did not converge in {max_iter} iterations")

    if k <= 64:
        sv = np.linalg.svd(m, compute_uv=False)
        reference = float(sv[0]) if sv.size else 0.0
        if abs(sigma - reference) > 1e-8 * max(1.0, reference):
            raise NumericError(
                f"power iteration ({sigma}) disagrees with full decomposition ({reference})"
            )
    return sigma


def resolvent_difference(spec_a: StringSpec, spec_b: StringSpec, z: complex) -> float:
    """Operator-norm distance between the resolvents of two strings."""
    if spec_a.partition != spec_b.partition:
        raise StructureError("strings must share the partition")
    ma = resolvent_matrix(spec_a, z)
    mb = resolvent_matrix(spec_b, z)
    return operator_norm(ma.matrix - mb.matrix)
