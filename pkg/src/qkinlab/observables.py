"""Evolution of marginal observables and its mean-field limit.

The s-particle observable at time t is assembled non-perturbatively from
cumulants of the interacting groups acting on the initial components.  That
expansion solves the dual hierarchy of evolution equations in which the
(s-1)-particle component sources the s-particle one; `dual_bbgky_residual`
measures how well a finite-difference derivative matches that structure.

In the scaling limit the interacting cumulants contract to iterated
collision integrals with unit coupling.  Those are evaluated two independent
ways: nested quadrature over the time-ordered simplex
(`limit_marginal_observable`) and direct integration of the limit hierarchy
as a triangular ODE system (`integrate_dual_vlasov`).
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from math import isclose

import numpy as np

from .cumulants import ClusterArgument, cumulant
from .operators import (
    ManyBodyOperator,
    OperatorSequence,
    scalar_operator,
    tensor_embed,
    trace_norm,
)
from .propagators import InteractionModel, free_flow, generator

MAX_LIMIT_SECTOR = 5

OBSERVABLE_KINDS = ("general", "additive", "k-ary")


class QuadratureResolutionWarning(UserWarning):
    """Successive quadrature refinements disagree beyond tolerance."""


# ---------------------------------------------------------------------------
# observable sequences


def zero_observable(dim: int, n: int) -> ManyBodyOperator:
    if n == 0:
        return scalar_operator(dim, 0.0)
    side = dim**n
    return ManyBodyOperator(
        dim, tuple(range(1, n + 1)), np.zeros((side, side), dtype=complex)
    )


def additive_observable(b1: ManyBodyOperator, n_max: int) -> OperatorSequence:
    """Sequence whose only nonzero component is the one-particle one."""
    if b1.labels != (1,):
        b1 = b1.relabel((1,))
    comps = [zero_observable(b1.dim, 0), b1]
    comps += [zero_observable(b1.dim, n) for n in range(2, n_max + 1)]
    return OperatorSequence(b1.dim, comps)


def kary_observable(bk: ManyBodyOperator, n_max: int) -> OperatorSequence:
    """Sequence whose only nonzero component acts on k = bk.order particles."""
    k = bk.order
    if n_max < k:
        raise ValueError("n_max must cover the k-particle component")
    bk = bk.relabel(tuple(range(1, k + 1)))
    comps = [
        bk if n == k else zero_observable(bk.dim, n) for n in range(n_max + 1)
    ]
    return OperatorSequence(bk.dim, comps)


def classify_observable(seq: OperatorSequence) -> str:
    """Tag a sequence as additive / k-ary / general by its nonzero components."""
    live = []
    for n in range(seq.n_max + 1):
        comp = seq.component(n)
        size = abs(comp.scalar) if n == 0 else trace_norm(comp)
        if size > 0:
            live.append(n)
    if live == [1]:
        return "additive"
    if len(live) == 1:
        return "k-ary"
    return "general"


@dataclass
class ObservableSequence:
    """An initial observable sequence together with its evolved snapshots.

    ``evolved`` maps times to sequences; the ``kind`` tag records the support
    pattern of the initial data (additive sequences have only a one-particle
    component, k-ary ones a single component of some other order).
    """

    initial: OperatorSequence
    evolved: dict = field(default_factory=dict)
    kind: str = "general"

    def __post_init__(self):
        if self.kind not in OBSERVABLE_KINDS:
            raise ValueError(f"unknown observable kind {self.kind!r}")
        if self.kind in ("additive", "k-ary") and classify_observable(
            self.initial
        ) != self.kind:
            raise ValueError(
                f"initial components do not match the {self.kind!r} tag"
            )

    @property
    def times(self) -> tuple:
        return tuple(self.evolved)

    def at(self, t: float) -> OperatorSequence:
        for key, seq in self.evolved.items():
            if isclose(key, t, rel_tol=0.0, abs_tol=1e-12):
                return seq
        raise KeyError(f"no snapshot stored at t={t}")


# ---------------------------------------------------------------------------
# the non-perturbative solution of the dual hierarchy


def marginal_observable(
    model: InteractionModel, t: float, s: int, initial: OperatorSequence
) -> ManyBodyOperator:
    """Evolved s-particle observable B_s(t).

    Sum over subsets X of Y = (1..s): the cumulant with cluster Y\\X and
    singleton extras X applied to the initial component on Y\\X.  (The sum
    over ordered tuples of distinct extras divided by n! is exactly the sum
    over subsets.)  At t=0 only the full-cluster term survives, returning the
    initial component; for additive initial data the expansion collapses to a
    single s-particle cumulant acting on the sum of one-particle terms.
    """
    if not 1 <= s <= initial.n_max:
        raise ValueError(f"sector s={s} outside stored range 0..{initial.n_max}")
    labels = tuple(range(1, s + 1))
    total = None
    for n in range(0, s + 1):
        for extras in itertools.combinations(labels, n):
            cluster = tuple(l for l in labels if l not in extras)
            base = initial.component_on(cluster)
            term = cumulant(model, t, ClusterArgument(cluster, extras), base)
            if term.labels != labels:
                term = tensor_embed(term, labels)
            total = term if total is None else total + term
    return total


def dual_bbgky_residual(
    model: InteractionModel,
    t: float,
    s: int,
    initial: OperatorSequence,
    dt: float,
) -> float:
    """Trace-norm defect of the dual hierarchy at time t.

    Central difference of B_s minus [full s-particle generator acting on
    B_s(t) plus the interaction terms sourcing from B_{s-1}(t) with one
    particle struck out].  Decays O(dt^2) since the expansion solves the
    hierarchy exactly.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    plus = marginal_observable(model, t + dt, s, initial)
    minus = marginal_observable(model, t - dt, s, initial)
    derivative = (0.5 / dt) * (plus - minus)

    now = marginal_observable(model, t, s, initial)
    rhs = generator(model, now, kind="full")
    if s >= 2:
        labels = tuple(range(1, s + 1))
        below = marginal_observable(model, t, s - 1, initial)
        for j1 in labels:
            rest = tuple(l for l in labels if l != j1)
            lifted = tensor_embed(below.relabel(rest), labels)
            for j2 in labels:
                if j2 == j1:
                    continue
                pair = tuple(sorted((j1, j2)))
                rhs = rhs + model.epsilon * generator(
                    model, lifted, kind="pair", labels=pair
                )
    return trace_norm(derivative - rhs)


# ---------------------------------------------------------------------------
# mean-field limit: nested quadrature of the iterated collision integrals


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretization of the time-ordered simplex integrals.

    ``nodes_per_level`` points per nesting level (each level integrates one
    collision time over [0, parent time]).  With ``refine`` the evaluation is
    repeated at doubled resolution; a mismatch beyond ``refinement_tol``
    raises a QuadratureResolutionWarning and the refined value is returned.
    """

    scheme: str = "gauss_legendre"
    nodes_per_level: int = 16
    max_nesting: int | None = None
    refine: bool = True
    refinement_tol: float = 1e-6

    def __post_init__(self):
        if self.scheme not in ("gauss_legendre", "simpson"):
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if self.nodes_per_level < 4:
            raise ValueError("need at least 4 nodes per level")

    def nodes(self, upper: float, count: int):
        """Points and weights for integrating over [0, upper]."""
        if upper == 0.0:
            return np.zeros(0), np.zeros(0)
        if self.scheme == "gauss_legendre":
            x, w = _leggauss(count)
            return 0.5 * upper * (x + 1.0), 0.5 * upper * w
        # composite Simpson needs an odd point count
        m = count if count % 2 == 1 else count + 1
        pts = np.linspace(0.0, upper, m)
        wts = np.full(m, 2.0)
        wts[1::2] = 4.0
        wts[0] = wts[-1] = 1.0
        wts *= upper / (m - 1) / 3.0
        return pts, wts


@lru_cache(maxsize=None)
def _leggauss(count: int):
    return np.polynomial.legendre.leggauss(count)


def _limit_term(
    model: InteractionModel,
    t: float,
    labels: tuple,
    initial: OperatorSequence,
    depth: int,
    quad: QuadratureSpec,
    count: int,
) -> ManyBodyOperator:
    """One nesting order of the limit expansion, with unit coupling.

    Evaluated inside out: the deepest level free-streams the surviving-label
    initial component, each level up applies a collision generator summed
    over pairs of survivors (the second index of the pair is struck out) and
    free-streams the survivors for the time remaining to its parent node.
    """

    def level(upper: float, alive: tuple, remaining: int) -> ManyBodyOperator:
        if remaining == 0:
            base = tensor_embed(initial.component_on(alive), labels)
            return free_flow(model, upper, alive, base)
        pts, wts = quad.nodes(upper, count)
        acc = None
        for point, weight in zip(pts, wts):
            collided = None
            for struck in alive:
                survivors = tuple(l for l in alive if l != struck)
                inner = level(point, survivors, remaining - 1)
                for partner in survivors:
                    pair = tuple(sorted((partner, struck)))
                    kick = generator(model, inner, kind="pair", labels=pair)
                    collided = kick if collided is None else collided + kick
            streamed = free_flow(model, upper - point, alive, collided)
            piece = weight * streamed
            acc = piece if acc is None else acc + piece
        if acc is None:
            base = tensor_embed(initial.component_on(alive), labels)
            return 0.0 * base
        return acc

    return level(t, labels, depth)


def limit_marginal_observable(
    model: InteractionModel,
    t: float,
    s: int,
    initial: OperatorSequence,
    quad: QuadratureSpec | None = None,
) -> ManyBodyOperator:
    """Limit s-particle observable b_s(t) by nested quadrature.

    The coupling in front of the collision terms is 1 regardless of
    model.epsilon — the limit objects absorb the scaling.  Nesting depth runs
    to s-1 (every collision strikes one particle out) unless capped by the
    quadrature spec.
    """
    quad = quad or QuadratureSpec()
    if not 1 <= s <= initial.n_max:
        raise ValueError(f"sector s={s} outside stored range 0..{initial.n_max}")
    if s > MAX_LIMIT_SECTOR:
        raise ValueError(f"nested quadrature capped at s <= {MAX_LIMIT_SECTOR}")
    deepest = s - 1
    if quad.max_nesting is not None:
        deepest = min(deepest, quad.max_nesting)
    labels = tuple(range(1, s + 1))

    def evaluate(count: int) -> ManyBodyOperator:
        total = None
        for depth in range(0, deepest + 1):
            term = _limit_term(model, t, labels, initial, depth, quad, count)
            total = term if total is None else total + term
        return total

    coarse = evaluate(quad.nodes_per_level)
    if not quad.refine:
        return coarse
    fine = evaluate(2 * quad.nodes_per_level)
    gap = trace_norm(fine - coarse)
    if gap > quad.refinement_tol:
        warnings.warn(
            QuadratureResolutionWarning(
                f"refinement moved the result by {gap:.3e} "
                f"(tolerance {quad.refinement_tol:.1e}); increase "
                "nodes_per_level"
            )
        )
    return fine


# ---------------------------------------------------------------------------
# mean-field limit: the dual hierarchy as a triangular ODE system


def _limit_rhs(model: InteractionModel, comps: list) -> list:
    """Right-hand side of the limit hierarchy for stacked components.

    comps[s] is the matrix of the s-particle component.  Component s feels
    its own free streaming plus collisions sourced by component s-1; the
    scalar component is inert.  Unit coupling throughout.
    """
    out = [np.zeros_like(c) for c in comps]
    for s in range(1, len(comps)):
        labels = tuple(range(1, s + 1))
        op = ManyBodyOperator(model.dim, labels, comps[s])
        rhs = None
        for j in labels:
            kick = generator(model, op, kind="free", labels=(j,))
            rhs = kick if rhs is None else rhs + kick
        if s >= 2:
            below = ManyBodyOperator(
                model.dim, tuple(range(1, s)), comps[s - 1]
            )
            for j1 in labels:
                rest = tuple(l for l in labels if l != j1)
                lifted = tensor_embed(below.relabel(rest), labels)
                for j2 in labels:
                    if j2 == j1:
                        continue
                    pair = tuple(sorted((j1, j2)))
                    rhs = rhs + generator(model, lifted, kind="pair", labels=pair)
        out[s] = rhs.matrix
    return out


def _rk4_step(model: InteractionModel, comps: list, h: float) -> list:
    k1 = _limit_rhs(model, comps)
    k2 = _limit_rhs(model, [c + 0.5 * h * k for c, k in zip(comps, k1)])
    k3 = _limit_rhs(model, [c + 0.5 * h * k for c, k in zip(comps, k2)])
    k4 = _limit_rhs(model, [c + h * k for c, k in zip(comps, k3)])
    return [
        c + (h / 6.0) * (a + 2.0 * b + 2.0 * d + e)
        for c, a, b, d, e in zip(comps, k1, k2, k3, k4)
    ]


def integrate_dual_vlasov(
    model: InteractionModel,
    t_grid,
    initial: OperatorSequence,
    local_error: float = 1e-9,
    h_initial: float = 1e-2,
) -> ObservableSequence:
    """Solve the limit hierarchy bottom-up over a time grid.

    Classical 4th-order steps with step doubling: a step is rejected and
    halved when the doubled-step/two-half-steps discrepancy exceeds
    ``local_error``.  Returns the trajectory with a snapshot per grid time.
    """
    t_grid = [float(t) for t in t_grid]
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("t_grid must be strictly increasing")
    comps = [
        initial.component(n).matrix.copy() for n in range(initial.n_max + 1)
    ]
    history = ObservableSequence(
        initial=initial, kind=classify_observable(initial)
    )

    now = 0.0
    h = h_initial
    for t_stop in t_grid:
        if t_stop < now:
            raise ValueError("t_grid must start at or after 0")
        while now < t_stop - 1e-15:
            h = min(h, t_stop - now)
            coarse = _rk4_step(model, comps, h)
            half = _rk4_step(model, comps, 0.5 * h)
            fine = _rk4_step(model, half, 0.5 * h)
            err = max(
                (np.linalg.norm(a - b) for a, b in zip(coarse, fine)),
                default=0.0,
            ) / 15.0
            if err > local_error and h > 1e-12:
                h *= 0.5  # reject and retry
                continue
            comps = fine
            now += h
            if err < local_error / 64.0:
                h *= 2.0
        snapshot = [
            ManyBodyOperator(model.dim, tuple(range(1, n + 1)), comps[n])
            if n > 0
            else scalar_operator(model.dim, comps[0][0, 0])
            for n in range(len(comps))
        ]
        history.evolved[t_stop] = OperatorSequence(
            model.dim, snapshot, validate=False
        )
    return history
