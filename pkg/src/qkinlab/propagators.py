"""Hamiltonians, unitary groups of operators and their generators.

An interaction model fixes a one-particle kinetic operator K, a symmetric
pair interaction Phi and the coupling epsilon; the n-particle Hamiltonian is

    H_n = sum_i K(i) + epsilon * sum_{i<j} Phi(i, j).

Time evolution acts on observables (Heisenberg picture)

    G_n(t) g = exp(+i t H_n) g exp(-i t H_n)

and on states (dual / von Neumann picture)

    G*_n(t) f = exp(-i t H_n) f exp(+i t H_n),

with generators N g = i[H, g] and N* f = -i[H, f].  Propagator matrices come
from a cached eigendecomposition of H_n per particle count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import (
    MAX_MATRIX_SIDE,
    ManyBodyOperator,
    _permute_factors,
    identity_operator,
    tensor_embed,
)


@dataclass(eq=False)
class InteractionModel:
    """Finite-dimensional mean-field interaction model.

    Parameters
    ----------
    dim:
        One-particle Hilbert space dimension d.
    kinetic:
        Hermitian d x d one-particle operator K.
    pair:
        Hermitian, permutation-symmetric d^2 x d^2 pair interaction Phi.
    epsilon:
        Mean-field coupling in front of the pair sum; 0 switches the
        interaction off, 1 gives the unscaled dynamics of the limit hierarchy.
    """

    dim: int
    kinetic: np.ndarray
    pair: np.ndarray
    epsilon: float = 1.0
    _eig_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.kinetic = np.asarray(self.kinetic, dtype=np.complex128)
        self.pair = np.asarray(self.pair, dtype=np.complex128)
        d = self.dim
        if self.kinetic.shape != (d, d):
            raise ValueError(f"kinetic operator must be {d}x{d}")
        if self.pair.shape != (d * d, d * d):
            raise ValueError(f"pair interaction must be {d * d}x{d * d}")
        if np.max(np.abs(self.kinetic - self.kinetic.conj().T)) > 1e-12:
            raise ValueError("kinetic operator must be hermitian")
        if np.max(np.abs(self.pair - self.pair.conj().T)) > 1e-12:
            raise ValueError("pair interaction must be hermitian")
        swapped = _permute_factors(self.pair, d, (1, 0))
        if np.max(np.abs(swapped - self.pair)) > 1e-12:
            raise ValueError("pair interaction must be symmetric under exchange")

    def with_epsilon(self, epsilon: float) -> "InteractionModel":
        """Same K and Phi at a different coupling (fresh propagator cache)."""
        return InteractionModel(self.dim, self.kinetic, self.pair, epsilon)

    def pair_norm(self) -> float:
        """Operator norm of Phi (largest singular value)."""
        return float(np.linalg.svd(self.pair, compute_uv=False)[0])

    # -- Hamiltonians ------------------------------------------------------

    def hamiltonian(self, n: int) -> np.ndarray:
        """Dense H_n on particles (1..n); n = 0 gives the 1x1 zero matrix."""
        d = self.dim
        if d ** n > MAX_MATRIX_SIDE:
            raise ValueError(f"H_{n} would have side {d ** n} > {MAX_MATRIX_SIDE}")
        labels = tuple(range(1, n + 1))
        h = np.zeros((d ** n, d ** n), dtype=np.complex128)
        k_op = ManyBodyOperator(d, (1,), self.kinetic)
        for j in labels:
            h += tensor_embed(k_op.relabel((j,)), labels).matrix
        if self.epsilon != 0.0 and n >= 2:
            for a in range(1, n + 1):
                for b in range(a + 1, n + 1):
                    phi = ManyBodyOperator(d, (a, b), self.pair)
                    h += self.epsilon * tensor_embed(phi, labels).matrix
        return h

    def _eig(self, n: int):
        if n not in self._eig_cache:
            w, v = np.linalg.eigh(self.hamiltonian(n))
            self._eig_cache[n] = (w, v)
        return self._eig_cache[n]

    def unitary(self, n: int, t: float) -> np.ndarray:
        """exp(+i t H_n) from the cached eigendecomposition."""
        if t == 0.0:
            # exactly the identity, so t=0 cancellations hold to the bit
            return np.eye(self.dim**n, dtype=complex)
        w, v = self._eig(n)
        return (v * np.exp(1j * t * w)) @ v.conj().T


def build_hamiltonian(model: InteractionModel, n: int) -> ManyBodyOperator:
    """H_n as a labeled operator on particles (1..n)."""
    return ManyBodyOperator(
        model.dim, tuple(range(1, n + 1)), model.hamiltonian(n), hermitian=True
    )


# ---------------------------------------------------------------------------
# groups
# ---------------------------------------------------------------------------

def _conjugate(u: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    return u @ matrix @ u.conj().T


def evolve_block(
    model: InteractionModel,
    t: float,
    block,
    target: ManyBodyOperator,
    dual: bool = False,
) -> ManyBodyOperator:
    """Apply the group of the sub-Hamiltonian on ``block`` to ``target``.

    ``block`` is a subset of ``target.labels``; the block Hamiltonian is the
    full interacting H_{|block|} (same K, Phi, epsilon) embedded on those
    labels.  ``dual=False`` conjugates Heisenberg-style (e^{itH} . e^{-itH}),
    ``dual=True`` the state way around.
    """
    block = tuple(sorted(block))
    if not block:
        return target
    if not set(block) <= set(target.labels):
        raise ValueError(f"block {block} not within target labels {target.labels}")
    u_small = model.unitary(len(block), t)
    u = tensor_embed(
        ManyBodyOperator(model.dim, block, u_small), target.labels
    ).matrix
    if dual:
        u = u.conj().T
    return ManyBodyOperator(
        model.dim, target.labels, _conjugate(u, target.matrix)
    )


def heisenberg_group(
    model: InteractionModel, t: float, target: ManyBodyOperator
) -> ManyBodyOperator:
    """G_n(t) applied to an observable on its own labels."""
    return evolve_block(model, t, target.labels, target, dual=False)


def schrodinger_group(
    model: InteractionModel, t: float, target: ManyBodyOperator
) -> ManyBodyOperator:
    """G*_n(t) = G_n(-t) applied to a state."""
    return evolve_block(model, t, target.labels, target, dual=True)


def free_flow(
    model: InteractionModel,
    t: float,
    labels,
    target: ManyBodyOperator,
    dual: bool = False,
) -> ManyBodyOperator:
    """Product of one-particle groups on ``labels`` applied to ``target``.

    Used by the limit hierarchies, where every flow between interaction
    insertions factorizes into one-particle groups.
    """
    labels = tuple(sorted(labels))
    if not set(labels) <= set(target.labels):
        raise ValueError(f"flow labels {labels} not within {target.labels}")
    if not labels:
        return target
    u1 = model.unitary(1, t)
    d = model.dim
    factors = [u1 if l in set(labels) else np.eye(d) for l in target.labels]
    u = factors[0]
    for f in factors[1:]:
        u = np.kron(u, f)
    if dual:
        u = u.conj().T
    return ManyBodyOperator(model.dim, target.labels, _conjugate(u, target.matrix))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _embedded_hamiltonian_part(
    model: InteractionModel, kind: str, labels, host
) -> np.ndarray:
    d = model.dim
    if kind == "free":
        (j,) = labels
        return tensor_embed(
            ManyBodyOperator(d, (j,), model.kinetic), host
        ).matrix
    if kind == "pair":
        a, b = sorted(labels)
        return tensor_embed(ManyBodyOperator(d, (a, b), model.pair), host).matrix
    raise ValueError(f"unknown generator kind {kind!r}")


def generator(
    model: InteractionModel,
    target: ManyBodyOperator,
    kind: str = "full",
    labels=None,
    adjoint: bool = False,
) -> ManyBodyOperator:
    """Infinitesimal generator applied to ``target``.

    kind="full"  : N g = i[H_n, g] with H_n on all target labels (includes
                   the epsilon-weighted pair sum);
    kind="free"  : N(j) g = i[K(j), g], labels=(j,);
    kind="pair"  : N_int(j1, j2) g = i[Phi(j1, j2), g], labels=(j1, j2) —
                   note: no epsilon factor; callers scale explicitly.

    ``adjoint=True`` gives the state-side generator N* = -N.
    """
    host = target.labels
    if kind == "full":
        h = tensor_embed(build_hamiltonian(model, len(host)).relabel(host), host).matrix
    else:
        if labels is None:
            raise ValueError(f"kind {kind!r} needs explicit labels")
        h = _embedded_hamiltonian_part(model, kind, tuple(labels), host)
    sign = -1.0 if adjoint else 1.0
    commutator = h @ target.matrix - target.matrix @ h
    return ManyBodyOperator(model.dim, host, sign * 1j * commutator)
