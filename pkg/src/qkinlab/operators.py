"""Labeled many-body operators on finite tensor-product Hilbert spaces.

Everything downstream (propagators, cumulants, hierarchies) manipulates dense
operators on (C^d)^{⊗n} that carry an explicit tuple of particle labels.  The
labels are what make embeddings, partial traces and the combinatorial sums of
the kinetic hierarchies unambiguous: an operator "on particles (1, 3)" can be
embedded into the space of particles (1, 2, 3), composed there with operators
on other label sets, and traced back down.

Conventions
-----------
* labels are strictly increasing positive integers; the i-th tensor factor of
  the matrix corresponds to ``labels[i]`` (big-endian mixed radix, matching
  ``numpy.kron`` order);
* a 0-particle operator is a scalar stored as a 1x1 matrix;
* hbar = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations
from math import factorial

import numpy as np

# Tolerance used when an operator is declared hermitian and for the
# permutation-symmetry validation of sequence components.
HERMITICITY_ATOL = 1e-12
SYMMETRY_ATOL = 1e-12

# Dense propagator algebra becomes unreasonable past this matrix side.
MAX_MATRIX_SIDE = 4096


def _as_complex_matrix(matrix) -> np.ndarray:
    out = np.asarray(matrix, dtype=np.complex128)
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {out.shape}")
    return out


@dataclass(frozen=True, eq=False)
class ManyBodyOperator:
    """A dense operator on the particles listed in ``labels``.

    Parameters
    ----------
    dim:
        One-particle Hilbert space dimension d.
    labels:
        Strictly increasing tuple of particle labels; may be empty.
    matrix:
        Complex square array of side ``dim ** len(labels)``.
    hermitian:
        Declares the operator hermitian; checked on construction.
    """

    dim: int
    labels: tuple
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(int(l) for l in self.labels))
        object.__setattr__(self, "matrix", _as_complex_matrix(self.matrix))
        if self.dim < 1:
            raise ValueError("one-particle dimension must be >= 1")
        if any(l < 1 for l in self.labels):
            raise ValueError("labels must be positive integers")
        if list(self.labels) != sorted(set(self.labels)):
            raise ValueError(f"labels must be strictly increasing, got {self.labels}")
        side = self.dim ** len(self.labels)
        if side > MAX_MATRIX_SIDE:
            raise ValueError(
                f"matrix side {side} exceeds the dense-operator cap {MAX_MATRIX_SIDE}"
            )
        if self.matrix.shape != (side, side):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match "
                f"dim**n = {side} for labels {self.labels}"
            )
        if self.hermitian:
            drift = np.max(np.abs(self.matrix - self.matrix.conj().T))
            if drift > HERMITICITY_ATOL:
                raise ValueError(
                    f"operator declared hermitian but max|A - A^+| = {drift:.3e}"
                )

    # -- bookkeeping -------------------------------------------------------

    @property
    def order(self) -> int:
        """Number of particles the operator acts on."""
        return len(self.labels)

    @property
    def scalar(self) -> complex:
        if self.order != 0:
            raise ValueError("scalar only defined for 0-particle operators")
        return complex(self.matrix[0, 0])

    def relabel(self, new_labels) -> "ManyBodyOperator":
        """Same matrix on a different (order-preserving) label set."""
        new_labels = tuple(new_labels)
        if len(new_labels) != self.order:
            raise ValueError("relabel must preserve the particle count")
        return ManyBodyOperator(self.dim, new_labels, self.matrix, self.hermitian)

    # -- elementwise algebra (same labels) ---------------------------------

    def _check_compatible(self, other: "ManyBodyOperator"):
        if self.dim != other.dim or self.labels != other.labels:
            raise ValueError(
                f"incompatible operators: ({self.dim}, {self.labels}) vs "
                f"({other.dim}, {other.labels})"
            )

    def __add__(self, other):
        self._check_compatible(other)
        return ManyBodyOperator(self.dim, self.labels, self.matrix + other.matrix)

    def __sub__(self, other):
        self._check_compatible(other)
        return ManyBodyOperator(self.dim, self.labels, self.matrix - other.matrix)

    def __mul__(self, scalar):
        return ManyBodyOperator(self.dim, self.labels, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def __matmul__(self, other):
        self._check_compatible(other)
        return ManyBodyOperator(self.dim, self.labels, self.matrix @ other.matrix)

    def dagger(self) -> "ManyBodyOperator":
        return ManyBodyOperator(self.dim, self.labels, self.matrix.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_hermitian(self, atol: float = HERMITICITY_ATOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= atol)


def identity_operator(dim: int, labels=()) -> ManyBodyOperator:
    side = dim ** len(tuple(labels))
    return ManyBodyOperator(dim, tuple(labels), np.eye(side), hermitian=True)


def scalar_operator(dim: int, value) -> ManyBodyOperator:
    return ManyBodyOperator(dim, (), np.array([[value]], dtype=np.complex128))


# ---------------------------------------------------------------------------
# factor permutation plumbing
# ---------------------------------------------------------------------------

def _permute_factors(matrix: np.ndarray, dim: int, perm) -> np.ndarray:
    """Reorder the tensor factors of a d^n x d^n matrix.

    ``perm[i]`` says from which old factor position the new i-th factor is
    taken, for rows and columns simultaneously.
    """
    n = len(perm)
    if n <= 1:
        return matrix
    tensor = matrix.reshape((dim,) * (2 * n))
    axes = list(perm) + [p + n for p in perm]
    return tensor.transpose(axes).reshape(matrix.shape)


def tensor_embed(op: ManyBodyOperator, host_labels) -> ManyBodyOperator:
    """Embed ``op`` into the space of ``host_labels`` as op ⊗ identity.

    The host labels must contain ``op.labels``; the complement is filled with
    identity factors, and factors are arranged in increasing host-label order.
    """
    host = tuple(int(l) for l in host_labels)
    if list(host) != sorted(set(host)):
        raise ValueError(f"host labels must be strictly increasing, got {host}")
    if not set(op.labels) <= set(host):
        raise ValueError(f"host labels {host} do not contain {op.labels}")
    extra = tuple(l for l in host if l not in set(op.labels))
    if not extra:
        return op.relabel(host)
    d = op.dim
    raw = np.kron(op.matrix, np.eye(d ** len(extra)))
    # raw factor order is (op.labels..., extra...); bring it to host order.
    raw_order = list(op.labels) + list(extra)
    perm = [raw_order.index(l) for l in host]
    return ManyBodyOperator(d, host, _permute_factors(raw, d, perm))


def partial_trace(op: ManyBodyOperator, keep) -> ManyBodyOperator:
    """Trace out every label of ``op`` not listed in ``keep``."""
    keep = tuple(int(l) for l in keep)
    if not set(keep) <= set(op.labels):
        raise ValueError(f"keep labels {keep} not a subset of {op.labels}")
    if list(keep) != sorted(set(keep)):
        raise ValueError("keep labels must be strictly increasing")
    if keep == op.labels:
        return op
    d = op.dim
    n = op.order
    traced_positions = [i for i, l in enumerate(op.labels) if l not in set(keep)]
    tensor = op.matrix.reshape((d,) * (2 * n))
    # contract row/col axes pairwise, highest position first so earlier
    # positions keep their axis numbers
    for pos in sorted(traced_positions, reverse=True):
        tensor = np.trace(tensor, axis1=pos, axis2=pos + tensor.ndim // 2)
    side = d ** len(keep)
    return ManyBodyOperator(d, keep, tensor.reshape(side, side))


def tensor_product(a: ManyBodyOperator, b: ManyBodyOperator) -> ManyBodyOperator:
    """Tensor product of operators on disjoint label sets."""
    if set(a.labels) & set(b.labels):
        raise ValueError("tensor_product requires disjoint labels")
    host = tuple(sorted(a.labels + b.labels))
    return tensor_embed(a, host) @ tensor_embed(b, host)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def trace_norm(op: ManyBodyOperator) -> float:
    """Sum of singular values (Schatten-1)."""
    return float(np.linalg.svd(op.matrix, compute_uv=False).sum())


def operator_norm(op: ManyBodyOperator) -> float:
    """Largest singular value (Schatten-inf)."""
    s = np.linalg.svd(op.matrix, compute_uv=False)
    return float(s[0]) if s.size else 0.0


@dataclass(frozen=True)
class NormWeight:
    """Geometric weight for sequence norms, max_n gamma^n / n! * |g_n|."""

    gamma: float

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")


# ---------------------------------------------------------------------------
# operator sequences (one component per particle number)
# ---------------------------------------------------------------------------

def permutation_symmetry_defect(op: ManyBodyOperator) -> float:
    """Largest deviation of the matrix under adjacent factor transpositions."""
    n = op.order
    if n < 2:
        return 0.0
    worst = 0.0
    for i in range(n - 1):
        perm = list(range(n))
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
        swapped = _permute_factors(op.matrix, op.dim, perm)
        worst = max(worst, float(np.max(np.abs(swapped - op.matrix))))
    return worst


def symmetrize(op: ManyBodyOperator) -> ManyBodyOperator:
    """Average over all permutations of the tensor factors."""
    n = op.order
    if n < 2:
        return op
    acc = np.zeros_like(op.matrix)
    for perm in permutations(range(n)):
        acc += _permute_factors(op.matrix, op.dim, perm)
    return ManyBodyOperator(op.dim, op.labels, acc / factorial(n))


@dataclass(eq=False)
class OperatorSequence:
    """Sequence g = (g_0, g_1, g_2, ...) with one component per particle count.

    Component n is a ManyBodyOperator on labels (1..n); component 0 is a
    scalar.  Components must be invariant under permutations of their factors
    (validated up to SYMMETRY_ATOL) — that invariance is what allows the
    hierarchy sums to relabel components onto arbitrary label subsets.
    """

    dim: int
    components: list = field(default_factory=list)
    validate: bool = True

    def __post_init__(self):
        for n, comp in enumerate(self.components):
            if comp.dim != self.dim:
                raise ValueError("component dimension mismatch")
            if comp.labels != tuple(range(1, n + 1)):
                raise ValueError(
                    f"component {n} must carry labels (1..{n}), got {comp.labels}"
                )
            if self.validate and n >= 2:
                defect = permutation_symmetry_defect(comp)
                if defect > SYMMETRY_ATOL:
                    raise ValueError(
                        f"component {n} is not permutation symmetric "
                        f"(defect {defect:.3e})"
                    )

    @property
    def n_max(self) -> int:
        return len(self.components) - 1

    def component(self, n: int) -> ManyBodyOperator:
        """Component n; raises for n beyond the stored range."""
        if not 0 <= n <= self.n_max:
            raise ValueError(f"sequence has no component {n}")
        return self.components[n]

    def component_on(self, labels) -> ManyBodyOperator:
        """Component of order len(labels), relabeled onto ``labels``."""
        labels = tuple(labels)
        return self.component(len(labels)).relabel(labels)


def sequence_norm(seq: OperatorSequence, weight: NormWeight) -> float:
    """max over n of gamma^n / n! * operator_norm(g_n)."""
    best = 0.0
    for n, comp in enumerate(seq.components):
        scale = weight.gamma ** n / factorial(n)
        value = abs(comp.scalar) if n == 0 else operator_norm(comp)
        best = max(best, scale * value)
    return best


def constant_correlation_sequence(dim: int, n_max: int) -> OperatorSequence:
    """Identity correlations: g_0 = 1, g_n = identity — the uncorrelated case."""
    comps = [scalar_operator(dim, 1.0)]
    for n in range(1, n_max + 1):
        comps.append(identity_operator(dim, tuple(range(1, n + 1))))
    return OperatorSequence(dim, comps)
