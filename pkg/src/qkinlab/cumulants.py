"""Cumulants of unitary groups and kinetic generating operators.

The cumulant of order 1+n attached to a cluster {Z} and n distinguished
particles is the Moebius inversion of group factorization over set partitions,

    A_{1+n}(t, {Z}, j_1..j_n)
        = sum_P (-1)^{|P|-1} (|P|-1)! prod_{blocks} G_{|theta(block)|}(t),

where theta flattens the cluster back into its particle labels.  At epsilon=0
the groups factorize and every cumulant of order >= 2 vanishes identically —
cumulants measure exactly the interacting part of the dynamics.

Scattering cumulants dress the dual cumulants with an initial-correlation
operator and undo the free one-particle flows; generating operators combine
them over dissections of label blocks into the expansion coefficients of the
marginal state functionals.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .operators import ManyBodyOperator, OperatorSequence, tensor_embed, _permute_factors
from .partitions import dissections, compositions, partition_weight, set_partitions
from .propagators import InteractionModel, free_flow

GENERATING_ORDER_CAP = 7  # largest s+n the dissection expansion will attempt


@dataclass(frozen=True)
class ClusterArgument:
    """Argument list of a cumulant: one glued cluster plus singleton labels.

    ``cluster`` may be empty (the cumulant is then inert and vanishes at
    order >= 2); ``extras`` are the distinguished singleton particles.
    """

    cluster: tuple
    extras: tuple

    def __post_init__(self):
        object.__setattr__(self, "cluster", tuple(int(l) for l in self.cluster))
        object.__setattr__(self, "extras", tuple(int(l) for l in self.extras))
        if set(self.cluster) & set(self.extras):
            raise ValueError("cluster and extras must be disjoint")

    @property
    def order(self) -> int:
        """Cumulant order 1+n (the cluster counts once, even when empty)."""
        return 1 + len(self.extras)

    @property
    def host(self) -> tuple:
        return tuple(sorted(self.cluster + self.extras))

    def elements(self) -> list:
        """Partition elements: the cluster as one element, extras as singletons."""
        return [self.cluster] + [(j,) for j in self.extras]


def _assemble_block_unitary(dim, host, blocks, unitaries):
    """Product over blocks of embedded block unitaries, as one host matrix.

    The blocks are disjoint label tuples covering part of ``host``; uncovered
    labels receive identity factors.  Assembled by kron in block order, then a
    factor permutation into host order.
    """
    order = []
    mats = []
    for b in blocks:
        if not b:
            continue
        order.extend(b)
        mats.append(unitaries[b])
    covered = set(order)
    rest = [l for l in host if l not in covered]
    if rest:
        order.extend(rest)
        mats.append(np.eye(dim ** len(rest)))
    if not mats:
        return np.eye(1)
    u = mats[0]
    for m in mats[1:]:
        u = np.kron(u, m)
    perm = [order.index(l) for l in host]
    return _permute_factors(u, dim, perm)


def cumulant(
    model: InteractionModel,
    t: float,
    arg: ClusterArgument,
    target: ManyBodyOperator,
    dual: bool = False,
) -> ManyBodyOperator:
    """Apply the (1+n)-order cumulant of groups to ``target``.

    The target may live on any label set; it is embedded into the union of
    its own labels and the cumulant's, and each partition term conjugates by
    the product of block propagators (interacting sub-Hamiltonians on the
    block labels).  ``dual=True`` uses the state-side groups G*(t) = G(-t).
    """
    host = tuple(sorted(set(arg.host) | set(target.labels)))
    work = tensor_embed(target, host)
    elements = arg.elements()

    # distinct blocks across all partitions -> block unitaries, cached by labels
    unitaries = {}
    acc = np.zeros_like(work.matrix)
    for part in set_partitions(elements):
        blocks = []
        for block in part:
            labels = tuple(sorted(l for element in block for l in element))
            blocks.append(labels)
            if labels and labels not in unitaries:
                unitaries[labels] = model.unitary(len(labels), t)
        u = _assemble_block_unitary(model.dim, host, blocks, unitaries)
        if dual:
            u = u.conj().T
        acc += partition_weight(len(part)) * (u @ work.matrix @ u.conj().T)
    return ManyBodyOperator(model.dim, host, acc)


def dual_cumulant(
    model: InteractionModel, t: float, labels, target: ManyBodyOperator
) -> ManyBodyOperator:
    """State-side cumulant over a plain label set (all singletons)."""
    labels = tuple(labels)
    if not labels:
        raise ValueError("dual cumulant needs at least one label")
    arg = ClusterArgument((labels[0],), labels[1:])
    return cumulant(model, t, arg, target, dual=True)


def inverse_first_cumulant(
    model: InteractionModel, t: float, labels, target: ManyBodyOperator
) -> ManyBodyOperator:
    """Undo first-order dual flows: product over labels of G*_1(-t).

    A single particle carries no interaction, so the first-order cumulant is
    the free one-particle group and its inverse is the flow at -t.
    """
    return free_flow(model, -t, tuple(labels), target, dual=True)


def scattering_cumulant(
    model: InteractionModel,
    t: float,
    arg: ClusterArgument,
    correlations: OperatorSequence,
    target: ManyBodyOperator,
) -> ManyBodyOperator:
    """Correlation-dressed dual cumulant applied to ``target``.

    Reading right to left: undo the free one-particle flows on the cumulant's
    own labels, multiply by the initial-correlation component on those labels,
    then apply the dual cumulant of interacting groups.  With identity
    correlations and epsilon = 0 this is the identity map.
    """
    own = arg.host
    host = tuple(sorted(set(own) | set(target.labels)))
    work = tensor_embed(target, host)
    work = inverse_first_cumulant(model, t, own, work)
    g = tensor_embed(correlations.component_on(own), host)
    work = g @ work
    return cumulant(model, t, arg, work, dual=True)


def generating_operator(
    model: InteractionModel,
    t: float,
    s: int,
    n: int,
    correlations: OperatorSequence,
    target: ManyBodyOperator,
) -> ManyBodyOperator:
    """Order-(1+n) generating operator of the marginal functionals.

    Expansion over signed chains of dissections: a leading scattering
    cumulant carries the cluster (1..s) together with the first m extra
    particles, and each level j hands its label block Z_j to scattering
    cumulants hosted by distinct lower particles.  Level 1 hits the target
    first and the leading cumulant acts last.  The target must cover the
    particles (1..s+n).

    The printed low orders fix the conventions:
      n=0:  Gen_1 = Sc_1({Y})
      n=1:  Gen_2 = Sc_2({Y}, s+1) - Sc_1({Y}) sum_i Sc_2(i, s+1)
    """
    if s < 1:
        raise ValueError("the leading cluster needs at least one particle")
    if s + n > GENERATING_ORDER_CAP:
        raise ValueError(
            f"generating operator capped at s+n <= {GENERATING_ORDER_CAP}"
        )
    host = tuple(range(1, s + n + 1))
    if not set(host) <= set(target.labels):
        raise ValueError(f"target must cover particles {host}")
    work = tensor_embed(target, tuple(sorted(set(target.labels) | set(host))))

    total = None
    for k in range(0, n + 1):
        for comp in compositions(n, k):
            m = n - sum(comp)
            cur = work
            # levels act in increasing order: level 1 hits the target first,
            # the leading cumulant comes last.  This is what makes the
            # one-particle marginal functional reproduce its own input
            # (generating operators with a one-particle cluster vanish for
            # n >= 1), which the duality functionals require.
            for j in range(1, k + 1):
                p_j = sum(comp[:j])
                p_jm1 = sum(comp[:j - 1])
                block = tuple(range(s + n - p_j + 1, s + n - p_jm1 + 1))
                hosts = tuple(range(1, s + n - p_j + 1))
                acc = None
                for assignment in dissections(block, hosts):
                    piece = cur
                    weight = 1.0
                    for host_label, part in assignment:
                        weight /= factorial(len(part))
                        piece = scattering_cumulant(
                            model,
                            t,
                            ClusterArgument((host_label,), tuple(part)),
                            correlations,
                            piece,
                        )
                    piece = weight * piece
                    acc = piece if acc is None else acc + piece
                if acc is None:  # no admissible dissection (host budget)
                    cur = 0.0 * cur
                else:
                    cur = acc
            lead = ClusterArgument(tuple(range(1, s + 1)), tuple(range(s + 1, s + m + 1)))
            cur = scattering_cumulant(model, t, lead, correlations, cur)
            coeff = factorial(n) * (-1) ** k / factorial(m)
            term = coeff * cur
            total = term if total is None else total + term
    return total
