"""Ready-made model and state builders.

Small named factories used by the command-line runner, the demos and the test
suite: lattice kinetic operators, on-site interactions, random hermitian
instances and simple correlation sequences that commute with product states
(so that correlated initial data stays hermitian and positive).
"""

from __future__ import annotations

import numpy as np

from .operators import (
    ManyBodyOperator,
    OperatorSequence,
    identity_operator,
    scalar_operator,
    symmetrize,
    tensor_embed,
)
from .propagators import InteractionModel


def hopping_kinetic(dim: int, periodic: bool = True) -> np.ndarray:
    """Discrete one-dimensional kinetic operator -(1/2) * lattice Laplacian."""
    k = np.zeros((dim, dim), dtype=np.complex128)
    for q in range(dim):
        k[q, q] = 1.0
        k[q, (q + 1) % dim] -= 0.5
        k[q, (q - 1) % dim] -= 0.5
    if not periodic:
        k[0, dim - 1] = 0.0
        k[dim - 1, 0] = 0.0
    return k


def onsite_pair(dim: int, strength: float = 1.0) -> np.ndarray:
    """Two-particle interaction supported on coinciding lattice sites."""
    phi = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    for q in range(dim):
        idx = q * dim + q
        phi[idx, idx] = strength
    return phi


def random_hermitian(rng: np.random.Generator, side: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(side, side)) + 1j * rng.normal(size=(side, side))
    h = (a + a.conj().T) / 2.0
    return scale * h / max(1.0, np.linalg.norm(h, 2))


def random_pair(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    """Random hermitian exchange-symmetric pair interaction."""
    raw = ManyBodyOperator(dim, (1, 2), random_hermitian(rng, dim * dim, scale))
    return symmetrize(raw).matrix


def random_density(rng: np.random.Generator, dim: int, trace_norm: float) -> np.ndarray:
    """Random positive matrix with prescribed trace norm (= trace)."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return trace_norm * rho / np.trace(rho).real


def random_model(
    rng: np.random.Generator,
    dim: int = 2,
    epsilon: float = 0.1,
    kinetic_scale: float = 1.0,
    pair_scale: float = 1.0,
) -> InteractionModel:
    return InteractionModel(
        dim,
        random_hermitian(rng, dim, kinetic_scale),
        random_pair(rng, dim, pair_scale),
        epsilon,
    )


def exchange_correlation(dim: int, n: int, weight: float) -> ManyBodyOperator:
    """g_n = identity + weight * (average over transpositions).

    Commutes with every product state f^{⊗n}, stays hermitian, and for
    |weight| < 1 keeps correlated product states positive.
    """
    labels = tuple(range(1, n + 1))
    if n < 2:
        return identity_operator(dim, labels)
    side = dim ** n
    acc = np.zeros((side, side), dtype=np.complex128)
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    for a, b in pairs:
        perm = list(range(n))
        perm[a], perm[b] = perm[b], perm[a]
        p = np.zeros((side, side), dtype=np.complex128)
        # permutation matrix on the tensor factors
        for idx in range(side):
            digits = []
            rest = idx
            for _ in range(n):
                digits.append(rest % dim)
                rest //= dim
            digits = digits[::-1]
            permuted = [digits[perm[i]] for i in range(n)]
            jdx = 0
            for dgt in permuted:
                jdx = jdx * dim + dgt
            p[jdx, idx] = 1.0
        acc += p
    g = np.eye(side) + weight * acc / len(pairs)
    return ManyBodyOperator(dim, labels, g, hermitian=True)


def correlation_sequence(
    dim: int, n_max: int, weight: float = 0.0
) -> OperatorSequence:
    """Correlation sequence (1, id, g_2, ..., g_{n_max}) of exchange type.

    weight = 0 reproduces the uncorrelated sequence (all identities).
    """
    comps = [scalar_operator(dim, 1.0), identity_operator(dim, (1,))]
    for n in range(2, n_max + 1):
        comps.append(exchange_correlation(dim, n, weight))
    return OperatorSequence(dim, comps)


def pair_correlation_sequence(
    dim: int, n_max: int, g2: ManyBodyOperator
) -> OperatorSequence:
    """Sequence with a user-supplied g_2; higher components default to identity.

    The default for n >= 3 is a modeling choice, flagged here so callers know
    the higher-order correlations are not derived from g_2.
    """
    if g2.labels != (1, 2) or g2.dim != dim:
        raise ValueError("g2 must act on particles (1, 2)")
    comps = [scalar_operator(dim, 1.0), identity_operator(dim, (1,)), g2]
    for n in range(3, n_max + 1):
        comps.append(identity_operator(dim, tuple(range(1, n + 1))))
    return OperatorSequence(dim, comps)


def product_state(
    f1: ManyBodyOperator, labels
) -> ManyBodyOperator:
    """Tensor power of a one-particle state on ``labels``."""
    labels = tuple(labels)
    if not labels:
        return scalar_operator(f1.dim, 1.0)
    out = None
    for l in labels:
        emb = tensor_embed(f1.relabel((l,)), labels)
        out = emb if out is None else out @ emb
    return out
