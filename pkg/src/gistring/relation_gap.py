"""Finite-dimensional laboratory for closed linear relations and their gap.

A linear relation on C^d is a subspace of C^d x C^d: a possibly multi-valued
operator, stored here through an orthonormal basis of the subspace.  The gap
between two closed relations,

    gap(S, T) = max(delta(S, T), delta(T, S)),
    delta(S, T) = sup{ dist(v, T) : v in S, |v| = 1 },

metrizes generalized convergence.  For subspaces of a Hilbert space the
directed gap equals the norm of (I - P_T) restricted to S, i.e. the sine of
the largest principal angle, which turns the sup into a singular-value
computation.  The suite below stress-tests the perturbation bounds that
connect norm-resolvent convergence to gap convergence and gap smallness to
spectral enclosure.
"""

from dataclasses import dataclass

import numpy as np

from .errors import StructureError
from .resolvent import operator_norm

__all__ = [
    "FiniteRelation",
    "BoundedOp",
    "gap",
    "transform",
    "random_relation",
    "SuiteReport",
    "perturbation_suite",
]

_ORTHO_TOL = 1e-12


def _orthonormalize(columns: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the column span (rank-revealing, deterministic)."""
    if columns.size == 0:
        return np.zeros((columns.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(columns, full_matrices=False)
    rank = int(np.sum(s > s[0] * 1e-12)) if s.size and s[0] > 0.0 else 0
    return u[:, :rank]


@dataclass(frozen=True)
class FiniteRelation:
    """Closed subspace of C^d + C^d given by an orthonormal basis matrix.

    Rows 0..d-1 of ``basis`` are the domain block, rows d..2d-1 the range
    block.  Rank 0 (the zero relation) is allowed.
    """

    dim: int
    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim != 2 or b.shape[0] != 2 * self.dim:
            raise StructureError(f"basis must have 2*{self.dim} rows")
        if b.shape[1]:
            defect = np.max(np.abs(b.conj().T @ b - np.eye(b.shape[1])))
            if defect > _ORTHO_TOL:
                raise StructureError(f"basis columns not orthonormal (defect {defect:.3e})")
        object.__setattr__(self, "basis", b)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def from_span(cls, dim: int, vectors: np.ndarray) -> "FiniteRelation":
        return cls(dim, _orthonormalize(np.asarray(vectors, dtype=complex)))

    @classmethod
    def from_graph(cls, matrix: np.ndarray) -> "FiniteRelation":
        """Graph {(f, M f)} of a square matrix."""
        m = np.asarray(matrix, dtype=complex)
        d = m.shape[0]
        if m.shape != (d, d):
            raise StructureError("graph construction needs a square matrix")
        return cls.from_span(d, np.vstack([np.eye(d), m]))

    def is_multivalued(self) -> bool:
        """True when the relation maps 0 to a nonzero vector."""
        if self.rank == 0:
            return False
        top = self.basis[: self.dim]
        s = np.linalg.svd(top, compute_uv=False)
        # rank deficiency of the domain block <=> a basis combination (0, g)
        return s.size < self.rank or bool(s[-1] < 1e-10)


@dataclass(frozen=True)
class BoundedOp:
    """Everywhere-defined single-valued operator with its cached norm."""

    matrix: np.ndarray
    norm: float

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "BoundedOp":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StructureError("bounded operator must be a square matrix")
        return cls(m, operator_norm(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _directed_gap(s: FiniteRelation, t: FiniteRelation) -> float:
    if s.rank == 0:
        return 0.0
    if t.rank == 0:
        return 1.0
    residual = s.basis - t.basis @ (t.basis.conj().T @ s.basis)
    sv = np.linalg.svd(residual, compute_uv=False)
    return float(np.clip(sv[0], 0.0, 1.0))


def gap(s: FiniteRelation, t: FiniteRelation) -> float:
    """Symmetric gap; 0 by convention when either relation is the zero subspace."""
    if s.dim != t.dim:
        raise StructureError("relations must share the ambient dimension")
    if s.rank == 0 or t.rank == 0:
        return 0.0
    return max(_directed_gap(s, t), _directed_gap(t, s))


def transform(
    relation: FiniteRelation,
    kind: str,
    op: BoundedOp | None = None,
    z: complex | None = None,
) -> FiniteRelation:
    """Relation arithmetic: add a bounded operator, shift by z, or invert.

    add:     {(f, g + A f) : (f, g) in T}
    shift:   T - z, i.e. add with A = -z I
    inverse: swap the domain and range blocks
    """
    d = relation.dim
    b = relation.basis.copy()
    if kind == "add":
        if op is None or op.dim != d:
            raise StructureError("add requires a bounded operator of matching dimension")
        b[d:] += op.matrix @ b[:d]
    elif kind == "shift":
        if z is None:
            raise StructureError("shift requires a value")
        b[d:] -= z * b[:d]
    elif kind == "inverse":
        b = np.vstack([b[d:], b[:d]])
    else:
        raise ValueError(f"unknown transform kind {kind!r}")
    return FiniteRelation.from_span(d, b)


def random_relation(rng: np.random.Generator, dim: int, multivalued_share: float = 0.3):
    """Orthonormalized Gaussian frame with rank uniform in [1, 2*dim - 1].

    With probability ``multivalued_share`` the generators include one or two
    pure (0, g) pairs, so the sample is genuinely multi-valued.
    """
    rank = int(rng.integers(1, 2 * dim))
    cols = rng.standard_normal((2 * dim, rank)) + 1j * rng.standard_normal((2 * dim, rank))
    if rng.random() < multivalued_share:
        pure = min(rank, int(rng.integers(1, 3)))
        cols[:dim, :pure] = 0.0
    return FiniteRelation.from_span(dim, cols)


def _random_bounded(rng: np.random.Generator, dim: int) -> BoundedOp:
    scale = float(np.exp(rng.uniform(np.log(0.05), np.log(3.0))))
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m *= scale / max(np.linalg.svd(m, compute_uv=False)[0], 1e-30)
    return BoundedOp.from_matrix(m)


@dataclass
class SuiteReport:
    """Worst margins (bound minus value; negative means violation) per check."""

    seed: int
    trials: int
    dim: int
    add_norm_worst_margin: float
    add_norm_violations: int
    sum_stability_worst_margin: float
    sum_stability_violations: int
    inverse_worst_defect: float
    inverse_violations: int
    graph_bound_worst_margin: float
    graph_bound_violations: int
    decay_worst_ratio: float
    decay_violations: int
    enclosure_violations: int
    enclosure_informative: int

    @property
    def ok(self) -> bool:
        return (
            self.add_norm_violations == 0
            and self.sum_stability_violations == 0
            and self.inverse_violations == 0
            and self.graph_bound_violations == 0
            and self.decay_violations == 0
            and self.enclosure_violations == 0
        )


_SLACK = 1e-8
_INVERSE_TOL = 1e-10


def _decay_check(rng: np.random.Generator, dim: int) -> float:
    """Shrinking perturbations of a matrix graph: resolvent-difference norms
    and gaps must both decay.  Returns the worse of the two last/first ratios.
    """
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    direction = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    direction /= np.linalg.svd(direction, compute_uv=False)[0]
    z = 1j * (np.linalg.svd(m, compute_uv=False)[0] + 2.0)
    graph = FiniteRelation.from_graph(m)
    eye = np.eye(dim)
    base_res = np.linalg.inv(m - z * eye)

    sizes = [0.5 * 2.0**-j for j in range(6)]
    res_norms = []
    gaps = []
    for c in sizes:
        perturbed = m + c * direction
        res_norms.append(operator_norm(np.linalg.inv(perturbed - z * eye) - base_res))
        gaps.append(gap(FiniteRelation.from_graph(perturbed), graph))
    ratios = []
    for seq in (res_norms, gaps):
        ratios.append(seq[-1] / seq[0] if seq[0] > 0.0 else 0.0)
    return max(ratios)


def _enclosure_check(rng: np.random.Generator, dim: int):
    """Empirical spectral-enclosure threshold for a disk in the resolvent set.

    Bisects on the perturbation size for the first eigenvalue intrusion into
    the disk; the gap at half that size must stay below the gap at the
    intrusion (small gap keeps the disk eigenvalue-free).  Returns
    (informative, violated).
    """
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    direction = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    direction /= np.linalg.svd(direction, compute_uv=False)[0]
    eigs = np.linalg.eigvals(m)
    center = float(np.max(eigs.real)) + 1.5
    radius = 0.5

    def intrudes(c: float) -> bool:
        lam = np.linalg.eigvals(m + c * direction)
        return bool(np.min(np.abs(lam - center)) <= radius)

    c_hi = 4.0 * (abs(center) + float(np.max(np.abs(eigs))) + 1.0)
    if not intrudes(c_hi):
        return False, False  # no intrusion within range: nothing to certify
    c_lo = 0.0
    for _ in range(40):
        mid = 0.5 * (c_lo + c_hi)
        if intrudes(mid):
            c_hi = mid
        else:
            c_lo = mid
    graph = FiniteRelation.from_graph(m)
    gap_at_intrusion = gap(FiniteRelation.from_graph(m + c_hi * direction), graph)
    safe = 0.5 * c_hi
    if intrudes(safe):
        return True, True
    gap_safe = gap(FiniteRelation.from_graph(m + safe * direction), graph)
    return True, bool(gap_safe >= gap_at_intrusion)


def perturbation_suite(seed: int, trials: int, dim: int) -> SuiteReport:
    """Randomized battery for the gap perturbation bounds.

    Per trial (independent substream (seed, trial)):
      * gap(T + A, T) <= |A| for a bounded single-valued A;
      * gap(S + A, T + A) <= 2 (1 + |A|^2) gap(S, T);
      * gap(S^{-1}, T^{-1}) = gap(S, T);
      * gap(graph M, graph M') <= |M - M'|;
      * decaying graph perturbations: resolvent-difference norms and gaps
        both decay;
      * spectral enclosure under small gap (disk in the resolvent set).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 2 <= dim <= 64:
        raise ValueError("dim must be between 2 and 64")

    add_worst = np.inf
    add_bad = 0
    sum_worst = np.inf
    sum_bad = 0
    inv_worst = 0.0
    inv_bad = 0
    graph_worst = np.inf
    graph_bad = 0
    decay_worst = 0.0
    decay_bad = 0
    encl_bad = 0
    encl_info = 0

    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        s = random_relation(rng, dim)
        t = random_relation(rng, dim)
        a = _random_bounded(rng, dim)

        margin = a.norm - gap(transform(t, "add", op=a), t)
        add_worst = min(add_worst, margin)
        if margin < -_SLACK:
            add_bad += 1

        base_gap = gap(s, t)
        shifted_gap = gap(transform(s, "add", op=a), transform(t, "add", op=a))
        margin = 2.0 * (1.0 + a.norm**2) * base_gap - shifted_gap
        sum_worst = min(sum_worst, margin)
        if margin < -_SLACK:
            sum_bad += 1

        defect = abs(gap(transform(s, "inverse"), transform(t, "inverse")) - base_gap)
        inv_worst = max(inv_worst, defect)
        if defect > _INVERSE_TOL:
            inv_bad += 1

        m1 = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        m2 = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        margin = operator_norm(m1 - m2) - gap(
            FiniteRelation.from_graph(m1), FiniteRelation.from_graph(m2)
        )
        graph_worst = min(graph_worst, margin)
        if margin < -_SLACK:
            graph_bad += 1

        ratio = _decay_check(rng, dim)
        decay_worst = max(decay_worst, ratio)
        if ratio > 0.5:
            decay_bad += 1

        informative, violated = _enclosure_check(rng, dim)
        encl_info += int(informative)
        encl_bad += int(violated)

    return SuiteReport(
        seed=seed,
        trials=trials,
        dim=dim,
        add_norm_worst_margin=float(add_worst),
        add_norm_violations=add_bad,
        sum_stability_worst_margin=float(sum_worst),
        sum_stability_violations=sum_bad,
        inverse_worst_defect=float(inv_worst),
        inverse_violations=inv_bad,
        graph_bound_worst_margin=float(graph_worst),
        graph_bound_violations=graph_bad,
        decay_worst_ratio=float(decay_worst),
        decay_violations=decay_bad,
        enclosure_violations=encl_bad,
        enclosure_informative=encl_info,
    )
