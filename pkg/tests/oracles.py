"""Independent brute-force oracles used to pin expected values.

Everything here is deliberately naive — index loops, explicit time stepping,
inclusion-exclusion over subsets — so that agreement with the library is a
genuine two-route check rather than the same code exercised twice.
"""

from __future__ import annotations

from itertools import combinations, product
from math import factorial

import numpy as np


def embed_by_index_loop(matrix, dim, labels, host):
    """Embed a matrix on ``labels`` into ``host`` by looping over multi-indices."""
    labels = list(labels)
    host = list(host)
    pos = [host.index(l) for l in labels]
    n = len(host)
    side = dim ** n
    out = np.zeros((side, side), dtype=complex)
    for row in product(range(dim), repeat=n):
        for col in product(range(dim), repeat=n):
            if any(row[i] != col[i] for i in range(n) if i not in pos):
                continue
            r_small = 0
            c_small = 0
            for p in pos:
                r_small = r_small * dim + row[p]
                c_small = c_small * dim + col[p]
            r = 0
            c = 0
            for i in range(n):
                r = r * dim + row[i]
                c = c * dim + col[i]
            out[r, c] = matrix[r_small, c_small]
    return out


def partial_trace_by_index_sum(matrix, dim, labels, keep):
    """Partial trace by explicit double index sums."""
    labels = list(labels)
    keep = list(keep)
    kept_pos = [labels.index(l) for l in keep]
    traced_pos = [i for i in range(len(labels)) if labels[i] not in keep]
    side = dim ** len(keep)
    out = np.zeros((side, side), dtype=complex)
    n = len(labels)
    for row in product(range(dim), repeat=n):
        for col in product(range(dim), repeat=n):
            if any(row[p] != col[p] for p in traced_pos):
                continue
            r_small = 0
            c_small = 0
            for p in kept_pos:
                r_small = r_small * dim + row[p]
                c_small = c_small * dim + col[p]
            r = 0
            c = 0
            for i in range(n):
                r = r * dim + row[i]
                c = c * dim + col[i]
            out[r_small, c_small] += matrix[r, c]
    return out


def singular_values_by_squaring(matrix):
    """Singular values via eigenvalues of A^+ A (independent of numpy's svd)."""
    w = np.linalg.eigvalsh(matrix.conj().T @ matrix)
    return np.sqrt(np.clip(w[::-1], 0.0, None))


def heisenberg_by_stepping(h, g0, t, steps=4000):
    """Integrate dg/dt = i[H, g] with classical RK4 steps."""
    def rhs(g):
        return 1j * (h @ g - g @ h)

    g = np.array(g0, dtype=complex)
    dt = t / steps
    for _ in range(steps):
        k1 = rhs(g)
        k2 = rhs(g + 0.5 * dt * k1)
        k3 = rhs(g + 0.5 * dt * k2)
        k4 = rhs(g + dt * k3)
        g = g + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return g


def bell_by_recurrence(n):
    """Bell numbers from the binomial recurrence, no caching tricks."""
    bell = [1]
    for m in range(n):
        nxt = 0
        for k in range(m + 1):
            c = factorial(m) // (factorial(k) * factorial(m - k))
            nxt += c * bell[k]
        bell.append(nxt)
    return bell[n]


def gauss_legendre_integral(f, a, b, nodes=24):
    """Simple one-dimensional Gauss-Legendre quadrature of a matrix-valued f."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    mid = (a + b) / 2.0
    half = (b - a) / 2.0
    total = None
    for xi, wi in zip(x, w):
        val = f(mid + half * xi) * (wi * half)
        total = val if total is None else total + val
    return total


def full_hamiltonian_by_embedding(kinetic, pair, epsilon, dim, n):
    """n-particle Hamiltonian assembled with index-loop embeddings."""
    host = list(range(1, n + 1))
    side = dim**n
    h = np.zeros((side, side), dtype=complex)
    for j in host:
        h += embed_by_index_loop(kinetic, dim, [j], host)
    for a, b in combinations(host, 2):
        h += epsilon * embed_by_index_loop(pair, dim, [a, b], host)
    return h


def unitary_by_eigh(h, t):
    """exp(i t H) through a fresh eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * t * w)) @ v.conj().T


def fock_kinetic_f1(kinetic, pair, epsilon, dim, t, dressed, n_top):
    """One-particle density by sector-wise inclusion-exclusion.

    ``dressed[j]`` is the d^j x d^j matrix of the dressed j-particle
    component.  Each order n propagates a leading block of m particles with
    the full m-particle unitary and weight (-1)^(n+1-m)/((m-1)!(n+1-m)!),
    then traces everything but particle 1.  Agrees with the cumulant series
    at equal truncation because fully traced conjugations drop out.
    """
    out = np.zeros((dim, dim), dtype=complex)
    for n in range(n_top + 1):
        d_block = dressed[n + 1]
        labels = list(range(1, n + 2))
        for m in range(1, n + 2):
            k = n + 1 - m
            h = full_hamiltonian_by_embedding(kinetic, pair, epsilon, dim, m)
            u = np.kron(unitary_by_eigh(h, -t), np.eye(dim**k))
            moved = u @ d_block @ u.conj().T
            coeff = (-1.0) ** k / (factorial(m - 1) * factorial(k))
            out += coeff * partial_trace_by_index_sum(moved, dim, labels, [1])
    return out


def fock_mean_value(kinetic, pair, epsilon, dim, t, initial, dressed, s_top):
    """Mean value of evolved observables by cluster inversion.

    ``initial[v]`` is the d^v x d^v matrix of the initial v-particle
    component (v=0: a plain complex number).  Every evolved sector is an
    alternating sum over leading blocks W of the fully propagated
    "microscopic" observable sum_{V subset W} initial[|V|](V).
    """
    total = complex(initial[0])
    for s in range(1, s_top + 1):
        d_block = dressed[s]
        for m in range(0, s + 1):
            sign = (-1.0) ** (s - m)
            weight = sign / (factorial(m) * factorial(s - m))
            if m == 0:
                total += weight * complex(initial[0]) * np.trace(d_block)
                continue
            host = list(range(1, m + 1))
            micro = complex(initial[0]) * np.eye(dim**m, dtype=complex)
            for size in range(1, m + 1):
                for sub in combinations(host, size):
                    micro += embed_by_index_loop(
                        initial[size], dim, list(sub), host
                    )
            h = full_hamiltonian_by_embedding(kinetic, pair, epsilon, dim, m)
            u = unitary_by_eigh(h, t)
            evolved = np.kron(u @ micro @ u.conj().T, np.eye(dim ** (s - m)))
            total += weight * np.trace(evolved @ d_block)
    return total
