"""Correlated states, mean-value functionals, and the closed kinetic picture.

A correlated state dresses products of a one-particle density with a
sequence of correlation operators.  Mean values of observable sequences pair
the two sector by sector (`mean_value`).  The one-particle density evolves
through a series of traced dual cumulants (`kinetic_series_F1`); the higher
marginals are functionals of that evolved density assembled from generating
operators (`marginal_functional`).  `duality_check` confronts the two
descriptions and `gqke_residual` measures the defect of the closed kinetic
equation the evolved density satisfies.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import exp, factorial

import numpy as np

from .cumulants import dual_cumulant, generating_operator
from .observables import marginal_observable
from .operators import (
    ManyBodyOperator,
    OperatorSequence,
    partial_trace,
    trace_norm,
)
from .presets import product_state
from .propagators import InteractionModel, generator

#: trace-norm ceiling under which the sector series of the mean-value
#: functional is guaranteed to converge
FUNCTIONAL_NORM_CEILING = exp(-1.0)

KINETIC_ORDER_CAP = 5


class ConvergenceConditionWarning(UserWarning):
    """A norm condition guaranteeing series convergence is violated."""


class SeriesTailWarning(UserWarning):
    """The last computed series terms are not decaying."""


@dataclass(frozen=True)
class CorrelatedState:
    """One-particle density plus correlation dressing plus scaling parameter.

    ``correlations`` must start with the scalar 1 (no zero-particle
    correlation) and the identity at one particle; the n-particle component
    of the state is ``g_n · f1^{⊗n}``.  ``epsilon`` records the scaling the
    state was prepared at (0 tags a limit state).
    """

    f1: ManyBodyOperator
    correlations: OperatorSequence
    epsilon: float = 1.0

    def __post_init__(self):
        if self.f1.labels != (1,):
            raise ValueError("f1 must live on the single label (1,)")
        if not self.f1.is_hermitian():
            raise ValueError("f1 must be Hermitian")
        if trace_norm(self.f1) == 0.0:
            raise ValueError("f1 must be nonzero")
        if self.correlations.dim != self.f1.dim:
            raise ValueError("correlations and f1 disagree on dimension")
        if abs(self.correlations.component(0).scalar - 1.0) > 1e-12:
            raise ValueError("zero-particle correlation must equal 1")
        if self.correlations.n_max >= 1:
            g1 = self.correlations.component(1).matrix
            if np.max(np.abs(g1 - np.eye(self.f1.dim))) > 1e-12:
                raise ValueError("one-particle correlation must be the identity")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be nonnegative")

    @property
    def dim(self) -> int:
        return self.f1.dim

    @property
    def n_max(self) -> int:
        return self.correlations.n_max


def state_component(state: CorrelatedState, n: int) -> ManyBodyOperator:
    """n-particle component g_n · f1^{⊗n} on labels (1..n)."""
    if not 1 <= n <= state.n_max:
        raise ValueError(f"state stores components 1..{state.n_max}, asked {n}")
    labels = tuple(range(1, n + 1))
    block = product_state(state.f1, labels)
    if n == 1:
        return block
    return state.correlations.component(n) @ block


def positivity_report(state: CorrelatedState) -> tuple:
    """Smallest eigenvalue of each dressed component g_n · f1^{⊗n}.

    The algebraic identities of the theory hold for any Hermitian dressing;
    whether the dressed products are genuine (positive) states is a separate
    question this reports on without enforcing.
    """
    lows = []
    for n in range(1, state.n_max + 1):
        comp = state_component(state, n)
        if comp.is_hermitian(atol=1e-10):
            lows.append(float(np.linalg.eigvalsh(comp.matrix).min()))
        else:
            lows.append(float("nan"))
    return tuple(lows)


# ---------------------------------------------------------------------------
# mean values of observable sequences


@dataclass(frozen=True)
class FunctionalTruncation:
    """Sector cutoff for the mean-value series plus an a-priori tail bound."""

    s_max: int
    tail_bound: float = 0.0

    def __post_init__(self):
        if self.s_max < 1:
            raise ValueError("s_max must be at least 1")

    @classmethod
    def for_state(cls, state: CorrelatedState, s_max: int) -> "FunctionalTruncation":
        """Crude geometric tail estimate from the convergence parameter."""
        rho = np.e * trace_norm(state.f1)
        if rho < 1.0:
            bound = rho ** (s_max + 1) / (1.0 - rho)
        else:
            bound = float("inf")
        return cls(s_max=s_max, tail_bound=bound)


@dataclass(frozen=True)
class MeanValueResult:
    value: complex
    terms: tuple
    tail_bound: float


def mean_value(
    observable: OperatorSequence,
    state: CorrelatedState,
    truncation: FunctionalTruncation,
) -> MeanValueResult:
    """Pairing sum_s (1/s!) Tr[B_s · g_s f1^{⊗s}] through sector s_max.

    The observable sequence is taken as given (evolve it first if a mean at
    t > 0 is wanted).  The reported tail bound is the observed geometric
    estimate |last| · r/(1-r); monotone growth over the last sectors raises,
    since then no truncation is trustworthy.
    """
    if trace_norm(state.f1) >= FUNCTIONAL_NORM_CEILING:
        warnings.warn(
            ConvergenceConditionWarning(
                "trace norm of f1 is not below 1/e; the sector series has no "
                "convergence guarantee"
            )
        )
    s_top = min(truncation.s_max, observable.n_max, state.n_max)
    terms = [complex(observable.component(0).scalar)]
    for s in range(1, s_top + 1):
        pairing = (observable.component(s) @ state_component(state, s)).trace()
        terms.append(pairing / factorial(s))

    live = [abs(term) for term in terms[1:] if abs(term) > 0.0]
    if len(live) >= 3 and live[-1] > live[-2] > live[-3]:
        raise ValueError(
            "sector terms stopped decreasing before the cutoff; "
            "the truncated mean value is unreliable"
        )
    tail = 0.0
    if len(live) >= 2 and live[-2] > 0.0:
        ratio = live[-1] / live[-2]
        if ratio < 1.0:
            tail = live[-1] * ratio / (1.0 - ratio)
        else:
            tail = float("inf")
    return MeanValueResult(
        value=complex(sum(terms)), terms=tuple(terms), tail_bound=tail
    )


def evolved_observable(
    model: InteractionModel,
    t: float,
    initial: OperatorSequence,
    s_max: int,
) -> OperatorSequence:
    """Sequence of evolved components B_s(t) for s = 0..s_max."""
    if s_max > initial.n_max:
        raise ValueError("initial sequence too short for requested s_max")
    comps = [initial.component(0)]
    for s in range(1, s_max + 1):
        comps.append(marginal_observable(model, t, s, initial))
    return OperatorSequence(model.dim, comps, validate=False)


# ---------------------------------------------------------------------------
# the kinetic series for the one-particle density


def kinetic_series_F1(
    model: InteractionModel,
    t: float,
    state: CorrelatedState,
    n_trunc: int,
) -> ManyBodyOperator:
    """One-particle density at time t as a series of traced dual cumulants.

    Order n conjugates the dressed (n+1)-particle component by the dual
    cumulant on singletons and traces out particles 2..n+1.  At t=0 every
    order beyond the zeroth vanishes and the initial density returns; with
    no interaction the free dual flow of it returns.
    """
    if n_trunc > KINETIC_ORDER_CAP:
        raise ValueError(f"series order capped at {KINETIC_ORDER_CAP}")
    if n_trunc + 1 > state.n_max:
        raise ValueError(
            f"order {n_trunc} needs correlation components up to {n_trunc + 1}"
        )
    total = None
    norms = []
    for n in range(n_trunc + 1):
        labels = tuple(range(1, n + 2))
        dressed = state_component(state, n + 1)
        moved = dual_cumulant(model, t, labels, dressed)
        term = moved if n == 0 else partial_trace(moved, keep=(1,))
        term = (1.0 / factorial(n)) * term
        norms.append(trace_norm(term))
        total = term if total is None else total + term
    # growth below the arithmetic floor of the leading term is just noise
    if (
        len(norms) >= 2
        and norms[-1] > norms[-2] > 0.0
        and norms[-1] > 1e-13 * max(norms)
    ):
        warnings.warn(
            SeriesTailWarning(
                f"last series term grew ({norms[-2]:.3e} -> {norms[-1]:.3e}); "
                "the truncation error may be understated"
            )
        )
    return total


def marginal_functional(
    model: InteractionModel,
    t: float,
    s: int,
    f1_t: ManyBodyOperator,
    correlations: OperatorSequence,
    n_trunc: int,
) -> ManyBodyOperator:
    """s-particle marginal as a functional of the evolved density f1_t.

    Order n applies the (1+n)-order generating operator to the (s+n)-fold
    product of f1_t and traces out the extra particles.  At t=0 with
    identity correlations this returns the bare product.
    """
    if s + n_trunc > 7:
        raise ValueError("functional capped at s + n_trunc <= 7")
    ceiling = exp(-(3.0 * s + 2.0))
    if trace_norm(f1_t) >= ceiling:
        warnings.warn(
            ConvergenceConditionWarning(
                f"trace norm of f1 exceeds exp(-(3s+2)) = {ceiling:.2e}; the "
                "functional series has no convergence guarantee at this order"
            )
        )
    keep = tuple(range(1, s + 1))
    total = None
    for n in range(n_trunc + 1):
        labels = tuple(range(1, s + n + 1))
        target = product_state(f1_t.relabel((1,)), labels)
        moved = generating_operator(model, t, s, n, correlations, target)
        term = moved if n == 0 else partial_trace(moved, keep=keep)
        term = (1.0 / factorial(n)) * term
        total = term if total is None else total + term
    return total


# ---------------------------------------------------------------------------
# duality of the two descriptions


@dataclass(frozen=True)
class DualityReport:
    lhs: complex
    rhs: complex
    lhs_tail: float
    residual: float


def duality_check(
    model: InteractionModel,
    t: float,
    initial: OperatorSequence,
    state: CorrelatedState,
    truncation: FunctionalTruncation,
) -> DualityReport:
    """Mean of evolved observables vs. pairing with marginal functionals.

    The left side evolves the observable sequence and pairs it with the
    initial state; the right side pairs the *initial* sequence with the
    marginal functionals of the evolved one-particle density.  Truncations
    are aligned so that sector s on the left corresponds to functional
    order s - k on the right for a component of order k; for additive
    sequences the two sides then agree to numerical precision.
    """
    s_max = truncation.s_max
    lhs = mean_value(
        evolved_observable(model, t, initial, s_max), state, truncation
    )

    f1_t = kinetic_series_F1(
        model, t, state, min(s_max - 1, KINETIC_ORDER_CAP)
    )
    rhs = complex(initial.component(0).scalar)
    for k in range(1, min(s_max, initial.n_max) + 1):
        b_k = initial.component(k)
        size = abs(b_k.scalar) if k == 0 else trace_norm(b_k)
        if size == 0.0:
            continue
        if k == 1:
            sector = f1_t
        else:
            sector = marginal_functional(
                model, t, k, f1_t, state.correlations, s_max - k
            )
        rhs += (b_k @ sector).trace() / factorial(k)

    residual = abs(lhs.value - rhs)
    return DualityReport(
        lhs=lhs.value, rhs=rhs, lhs_tail=lhs.tail_bound, residual=residual
    )


# ---------------------------------------------------------------------------
# the closed kinetic equation


def gqke_residual(
    model: InteractionModel,
    t: float,
    state: CorrelatedState,
    dt: float,
    n_trunc: int,
) -> float:
    """Defect of the closed one-particle equation at time t.

    Central difference of the kinetic series minus [free dual generator +
    epsilon-weighted traced collision with the two-particle functional of
    the same series].  Decays O(dt^2) down to the series-truncation floor.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    series = lambda u: kinetic_series_F1(model, u, state, n_trunc)
    derivative = (0.5 / dt) * (series(t + dt) - series(t - dt))

    f1_t = series(t)
    rhs = generator(model, f1_t, kind="free", labels=(1,), adjoint=True)
    f2 = marginal_functional(
        model, t, 2, f1_t, state.correlations, max(n_trunc - 1, 0)
    )
    collided = generator(model, f2, kind="pair", labels=(1, 2), adjoint=True)
    rhs = rhs + model.epsilon * partial_trace(collided, keep=(1,))
    return trace_norm(derivative - rhs)
