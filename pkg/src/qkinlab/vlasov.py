"""Mean-field kinetic equation with correlation-dressed collisions.

The one-particle density closes on itself in the collective limit: it obeys a
nonlinear equation whose collision term carries the initial pair correlation,
transported by free one-particle flows.  This module integrates that closed
equation directly, evaluates the iterated-integral series that solves it from
multi-particle correlated data, checks how initial correlations propagate, and
reduces the pure-state case to a lattice nonlinear Schrodinger flow.

Conventions: the collision term enters with unit coupling -- the model's
epsilon plays no role in the limit dynamics and is ignored everywhere except
`correlation_propagation_check`, which compares against the pre-limit state
at an explicit coupling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .operators import (
    MAX_MATRIX_SIDE,
    ManyBodyOperator,
    OperatorSequence,
    identity_operator,
    partial_trace,
    scalar_operator,
    tensor_embed,
    trace_norm,
)
from .presets import pair_correlation_sequence, product_state
from .propagators import InteractionModel, free_flow, generator
from .states import CorrelatedState, kinetic_series_F1, marginal_functional

__all__ = [
    "CLOSURES",
    "SERIES_ORDER_CAP",
    "HermiticityDriftWarning",
    "VlasovProblem",
    "PureStateProfile",
    "product_closure_sequence",
    "dressed_correlation",
    "vlasov_rhs",
    "integrate_vlasov",
    "vlasov_series_terms",
    "vlasov_series",
    "correlation_propagation_check",
    "gp_evolution",
]

#: correlation closures accepted when only the pair component is supplied
CLOSURES = ("identity", "product")

#: the iterated-integral series is evaluated at most to this order
SERIES_ORDER_CAP = 6


class HermiticityDriftWarning(UserWarning):
    """The integrated one-particle operator stopped being hermitian.

    Expected for general pair correlations: the dressed collision operator
    times a product of densities need not be symmetric.  We integrate in the
    full complex operator space and report the drift rather than symmetrize.
    """


# ---------------------------------------------------------------------------
# problem container


@dataclass(frozen=True)
class VlasovProblem:
    """Closed one-particle dynamics with correlated initial data.

    ``correlations`` holds the g_n sequence (g_0 = 1, g_1 = identity); the
    series needs components up to n_trunc + 1 particles.  The convergence
    radius ``t0`` shrinks with both the interaction strength and the size of
    the initial operator.
    """

    model: InteractionModel
    f1_0: ManyBodyOperator
    correlations: OperatorSequence
    t_grid: tuple

    def __post_init__(self):
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        if self.f1_0.labels != (1,):
            raise ValueError("f1_0 must act on particle (1,)")
        if self.f1_0.dim != self.model.dim:
            raise ValueError("dimension mismatch between f1_0 and model")
        if self.correlations.dim != self.model.dim:
            raise ValueError("dimension mismatch between correlations and model")
        if not self.f1_0.is_hermitian(atol=1e-12):
            raise ValueError("f1_0 must be hermitian")
        g0 = self.correlations.component(0).matrix
        if abs(g0[0, 0] - 1.0) > 1e-12:
            raise ValueError("vacuum correlation component must equal 1")
        if self.correlations.n_max >= 1:
            g1 = self.correlations.component(1).matrix
            if not np.allclose(g1, np.eye(self.model.dim), atol=1e-12):
                raise ValueError("one-particle correlation must be the identity")
        grid = self.t_grid
        if len(grid) == 0 or grid[0] != 0.0:
            raise ValueError("t_grid must start at 0")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("t_grid must be strictly increasing")

    @property
    def t0(self) -> float:
        """Convergence radius 1 / (2 ‖Φ‖ ‖f1_0‖₁); infinite for free models."""
        scale = 2.0 * self.model.pair_norm() * trace_norm(self.f1_0)
        return float("inf") if scale == 0.0 else 1.0 / scale

    @classmethod
    def from_pair(
        cls,
        model: InteractionModel,
        f1_0: ManyBodyOperator,
        t_grid,
        g2: Optional[ManyBodyOperator] = None,
        n_max: int = 3,
        closure: str = "identity",
    ) -> "VlasovProblem":
        """Build the correlation sequence from a pair component alone.

        ``closure`` fixes the components beyond g_2 that the series needs but
        the caller did not supply: "identity" (no correlations beyond pair
        level) or "product" (one pair factor per two-particle subset).  With
        ``g2=None`` every component is the identity.  The series to order n
        needs ``n_max >= n + 1``; the default stays small because component
        n is a dense dim**n matrix.
        """
        if closure not in CLOSURES:
            raise ValueError(f"closure must be one of {CLOSURES}")
        if model.dim**n_max > MAX_MATRIX_SIDE:
            raise ValueError(
                f"correlation component {n_max} would need matrices of side "
                f"{model.dim ** n_max}; lower n_max"
            )
        if g2 is None:
            comps = [scalar_operator(model.dim, 1.0)] + [
                identity_operator(model.dim, tuple(range(1, n + 1)))
                for n in range(1, n_max + 1)
            ]
            corr = OperatorSequence(model.dim, comps)
        elif closure == "identity":
            corr = pair_correlation_sequence(model.dim, n_max, g2)
        else:
            corr = product_closure_sequence(model.dim, n_max, g2)
        return cls(model, f1_0, corr, tuple(t_grid))


def product_closure_sequence(
    dim: int, n_max: int, g2: ManyBodyOperator
) -> OperatorSequence:
    """One pair factor per two-particle subset, multiplied lexicographically.

    Only when the embedded factors commute (g2 diagonal, say) is the result
    order-independent and exchange symmetric.
    """
    if g2.labels != (1, 2) or g2.dim != dim:
        raise ValueError("g2 must act on particles (1, 2)")
    comps = [scalar_operator(dim, 1.0), identity_operator(dim, (1,))]
    for n in range(2, n_max + 1):
        host = tuple(range(1, n + 1))
        total = np.eye(dim**n, dtype=complex)
        for i, j in combinations(host, 2):
            total = total @ tensor_embed(g2.relabel((i, j)), host).matrix
        comps.append(ManyBodyOperator(dim, host, total))
    return OperatorSequence(dim, comps, validate=False)


# ---------------------------------------------------------------------------
# the closed equation


def dressed_correlation(problem: VlasovProblem, t: float, n: int = 2) -> ManyBodyOperator:
    """g_n transported by free one-particle flows: Π u(t) g_n Π u(t)†.

    The one-particle propagators come from the model's cached
    eigendecomposition, so repeated calls cost one matrix sandwich each.
    """
    labels = tuple(range(1, n + 1))
    return free_flow(problem.model, t, labels, problem.correlations.component(n), dual=True)


def vlasov_rhs(problem: VlasovProblem, t: float, f1: ManyBodyOperator) -> ManyBodyOperator:
    """Free streaming plus the correlation-dressed binary collision term."""
    if f1.labels != (1,) or f1.dim != problem.model.dim:
        raise ValueError("f1 must be a one-particle operator of the model dimension")
    model = problem.model
    free = generator(model, f1, kind="free", labels=(1,), adjoint=True)
    pair_density = product_state(f1, (1, 2))
    dressed = dressed_correlation(problem, t).matrix @ pair_density.matrix
    collided = generator(
        model,
        ManyBodyOperator(model.dim, (1, 2), dressed),
        kind="pair",
        labels=(1, 2),
        adjoint=True,
    )
    return free + partial_trace(collided, keep=(1,))


def integrate_vlasov(
    problem: VlasovProblem,
    dt: Optional[float] = None,
    local_error: float = 1e-9,
    hermiticity_tol: float = 1e-9,
) -> list:
    """Solve the closed equation on the problem's grid.

    Classical 4th-order stepping; without ``dt`` the step adapts by doubling
    (compare one full step against two halves, reject above ``local_error``).
    The trace is conserved by the commutator structure; hermiticity is only
    guaranteed when the dressed correlation commutes past the product of
    densities, so drift beyond ``hermiticity_tol`` raises a warning rather
    than being projected away.
    """
    if dt is not None and dt <= 0:
        raise ValueError("dt must be positive")

    def rhs(time, mat):
        op = ManyBodyOperator(problem.model.dim, (1,), mat)
        return vlasov_rhs(problem, time, op).matrix

    def rk4(time, mat, h):
        k1 = rhs(time, mat)
        k2 = rhs(time + h / 2, mat + h / 2 * k1)
        k3 = rhs(time + h / 2, mat + h / 2 * k2)
        k4 = rhs(time + h, mat + h * k3)
        return mat + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    f = problem.f1_0.matrix.copy()
    out = [problem.f1_0]
    warned = False
    t_now = 0.0
    h = dt if dt is not None else 1e-2
    for t_next in problem.t_grid[1:]:
        while t_now < t_next - 1e-14:
            step = min(h, t_next - t_now)
            if dt is not None:
                f = rk4(t_now, f, step)
                t_now += step
                continue
            coarse = rk4(t_now, f, step)
            half = rk4(t_now, f, step / 2)
            fine = rk4(t_now + step / 2, half, step / 2)
            err = np.max(np.abs(coarse - fine)) / 15.0
            if err > local_error and step > 1e-8:
                h = step / 2
                continue
            f = fine
            t_now += step
            if err < local_error / 64.0:
                h = step * 2
        snap = ManyBodyOperator(problem.model.dim, (1,), f.copy())
        defect = trace_norm(snap + (-1.0) * snap.dagger()) / 2.0
        if defect > hermiticity_tol and not warned:
            warnings.warn(
                HermiticityDriftWarning(
                    f"hermiticity defect {defect:.2e} at t={t_next:g}; the "
                    "dressed pair correlation does not commute with the "
                    "density product"
                )
            )
            warned = True
        out.append(snap)
    return out


# ---------------------------------------------------------------------------
# the iterated-integral series


def vlasov_series_terms(
    problem: VlasovProblem,
    t: float,
    n_trunc: int,
    dt: float = 1e-3,
    force: bool = False,
) -> list:
    """Terms 0..n_trunc of the series solving the closed equation.

    Term n lives on n + 1 particles before tracing: free flows interleave n
    binary collisions, each hooking the next ancillary particle to any of the
    existing ones, applied to g_{1+n} times a product of initial operators.
    Evaluated by one triangular chain of coupled linear blocks per term
    (block k feels its own free flow plus the collision pulse from block
    k + 1), stepped at fixed ``dt``.

    Successive term norms shrink roughly like t / t0; ``t >= t0`` is refused
    unless ``force`` is set.
    """
    if n_trunc < 0 or n_trunc > SERIES_ORDER_CAP:
        raise ValueError(f"series order capped at {SERIES_ORDER_CAP}")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t >= problem.t0 and not force:
        raise ValueError(
            f"t={t:g} is outside the convergence radius t0={problem.t0:g}; "
            "pass force=True to evaluate anyway"
        )
    if n_trunc + 1 > problem.correlations.n_max:
        raise ValueError(
            f"series to order {n_trunc} needs correlation components up to "
            f"{n_trunc + 1} particles"
        )
    if dt <= 0:
        raise ValueError("dt must be positive")

    model = problem.model
    d = model.dim
    terms = []
    for n in range(n_trunc + 1):
        m = n + 1
        if d**m > MAX_MATRIX_SIDE:
            raise ValueError(f"series term {n} needs matrices of side {d ** m}")
        terms.append(_series_term(problem, t, n, dt))
    return terms


def _series_term(problem: VlasovProblem, t: float, n: int, dt: float) -> ManyBodyOperator:
    model = problem.model
    d = model.dim
    m = n + 1
    host = tuple(range(1, m + 1))

    top = problem.correlations.component(m).matrix @ product_state(
        problem.f1_0, host
    ).matrix
    if n == 0:
        return free_flow(model, t, (1,), ManyBodyOperator(d, (1,), top), dual=True)

    kin = [
        tensor_embed(ManyBodyOperator(d, (j,), model.kinetic), host).matrix
        for j in host
    ]
    k_sums = {1: kin[0]}
    for k in range(2, m + 1):
        k_sums[k] = k_sums[k - 1] + kin[k - 1]
    phi_sums = {
        k: sum(
            tensor_embed(ManyBodyOperator(d, (kappa, k + 1), model.pair), host).matrix
            for kappa in range(1, k + 1)
        )
        for k in range(1, m)
    }

    # blocks 1..m; block m starts at the correlated product and streams
    # freely, each lower block integrates the collision pulse from above
    blocks = [None] + [np.zeros((d**m, d**m), dtype=complex) for _ in range(m)]
    blocks[m] = top

    def deriv(state):
        out = [None] * (m + 1)
        for k in range(1, m + 1):
            acc = -1j * (k_sums[k] @ state[k] - state[k] @ k_sums[k])
            if k < m:
                upper = state[k + 1]
                acc = acc + -1j * (phi_sums[k] @ upper - upper @ phi_sums[k])
            out[k] = acc
        return out

    n_steps = max(1, int(round(t / dt)))
    h = t / n_steps
    for _ in range(n_steps):
        k1 = deriv(blocks)
        s2 = [None] + [blocks[k] + h / 2 * k1[k] for k in range(1, m + 1)]
        k2 = deriv(s2)
        s3 = [None] + [blocks[k] + h / 2 * k2[k] for k in range(1, m + 1)]
        k3 = deriv(s3)
        s4 = [None] + [blocks[k] + h * k3[k] for k in range(1, m + 1)]
        k4 = deriv(s4)
        blocks = [None] + [
            blocks[k] + h / 6 * (k1[k] + 2 * k2[k] + 2 * k3[k] + k4[k])
            for k in range(1, m + 1)
        ]
    return partial_trace(ManyBodyOperator(d, host, blocks[1]), keep=(1,))


def vlasov_series(
    problem: VlasovProblem,
    t: float,
    n_trunc: int,
    dt: float = 1e-3,
    force: bool = False,
) -> ManyBodyOperator:
    """Sum of the series terms through order ``n_trunc``.

    This is the collective limit of the underlying dynamics for correlated
    data.  It coincides with `integrate_vlasov` exactly when the pair
    correlation is the identity (and through first order in t always); for
    genuinely correlated data the two differ at order t² because each
    collision history carries its own pair factors, which no fixed
    correlation sequence reproduces.
    """
    terms = vlasov_series_terms(problem, t, n_trunc, dt=dt, force=force)
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total


# ---------------------------------------------------------------------------
# propagation of initial correlations


def correlation_propagation_check(
    problem: VlasovProblem,
    t: float,
    k: int,
    epsilon: float = 0.1,
    n_kinetic: int = 3,
    n_functional: int = 2,
    n_series: int = 4,
    series_dt: float = 1e-3,
) -> float:
    """Distance between the scaled k-particle functional and the dressed product.

    The pre-limit side evolves the scaled state (one-particle operator
    epsilon^{-1} f1_0) at coupling ``epsilon`` and assembles the k-particle
    functional of it, weighted by epsilon^k.  The limit side transports g_k
    with free flows and multiplies k copies of the series solution.  The
    distance vanishes identically at t = 0 and shrinks linearly in epsilon.
    """
    if k not in (2, 3):
        raise ValueError("k must be 2 or 3")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    labels = tuple(range(1, k + 1))

    model_eps = problem.model.with_epsilon(epsilon)
    scaled = CorrelatedState(
        (1.0 / epsilon) * problem.f1_0, problem.correlations, epsilon=epsilon
    )
    f1_eps = kinetic_series_F1(model_eps, t, scaled, n_kinetic)
    functional = marginal_functional(
        model_eps, t, k, f1_eps, problem.correlations, n_functional
    )

    f1_limit = vlasov_series(problem, t, n_series, dt=series_dt)
    dressed = dressed_correlation(problem, t, k).matrix @ product_state(
        f1_limit, labels
    ).matrix

    gap = (epsilon**k) * functional + ManyBodyOperator(
        problem.model.dim, labels, -dressed
    )
    return trace_norm(gap)


# ---------------------------------------------------------------------------
# pure states: the lattice nonlinear Schrodinger reduction


@dataclass(frozen=True)
class PureStateProfile:
    """Unit wavefunction together with the dressed coupling at that time."""

    time: float
    psi: np.ndarray
    coupling: ManyBodyOperator

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex).reshape(-1)
        object.__setattr__(self, "psi", psi)
        if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
            raise ValueError("psi must have unit norm")

    @property
    def projector(self) -> ManyBodyOperator:
        return ManyBodyOperator(len(self.psi), (1,), np.outer(self.psi, self.psi.conj()))


def gp_evolution(
    problem: VlasovProblem,
    dt: float = 1e-3,
    norm_tol: float = 1e-8,
) -> list:
    """Wavefunction form of the closed equation for projector initial data.

    Requires f1_0 = |psi><psi| with unit trace and a diagonal pair interaction
    (the lattice counterpart of a contact potential).  The effective one-body
    field is the partial contraction of the interaction with the dressed pair
    correlation and the instantaneous projector; with identity correlations it
    is hermitian and the flow is exactly norm preserving (a cubic nonlinear
    Schrodinger lattice equation).  For general correlations the field need
    not be hermitian, and norm drift beyond ``norm_tol`` aborts.
    """
    model = problem.model
    d = model.dim
    f0 = problem.f1_0.matrix
    if abs(np.trace(f0) - 1.0) > 1e-10:
        raise ValueError("pure-state reduction needs a unit-trace projector")
    if trace_norm(problem.f1_0 @ problem.f1_0 + (-1.0) * problem.f1_0) > 1e-10:
        raise ValueError("f1_0 must be a rank-one projector")
    if not np.allclose(model.pair, np.diag(np.diag(model.pair)), atol=1e-12):
        raise ValueError("pure-state reduction needs a diagonal pair interaction")

    vals, vecs = np.linalg.eigh(f0)
    psi = vecs[:, -1].astype(complex)

    g2 = problem.correlations.component(2)
    chaos = np.allclose(g2.matrix, np.eye(d * d), atol=1e-14)
    eye = np.eye(d, dtype=complex)

    def field(time, vec):
        proj = np.outer(vec, vec.conj())
        m2 = g2.matrix if chaos else dressed_correlation(problem, time).matrix
        two = ManyBodyOperator(d, (1, 2), model.pair @ m2 @ np.kron(eye, proj))
        return partial_trace(two, keep=(1,)).matrix

    def rhs(time, vec):
        return -1j * (model.kinetic @ vec + field(time, vec) @ vec)

    out = [PureStateProfile(0.0, psi.copy(), dressed_correlation(problem, 0.0))]
    t_now = 0.0
    for t_next in problem.t_grid[1:]:
        while t_now < t_next - 1e-14:
            h = min(dt, t_next - t_now)
            k1 = rhs(t_now, psi)
            k2 = rhs(t_now + h / 2, psi + h / 2 * k1)
            k3 = rhs(t_now + h / 2, psi + h / 2 * k2)
            k4 = rhs(t_now + h, psi + h * k3)
            psi = psi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t_now += h
        drift = abs(np.linalg.norm(psi) - 1.0)
        if drift > norm_tol:
            raise RuntimeError(
                f"wavefunction norm drifted by {drift:.2e} at t={t_next:g}: "
                "the dressed coupling field is not hermitian for this pair "
                "correlation, so the pure-state reduction does not apply"
            )
        out.append(
            PureStateProfile(
                t_next,
                psi / np.linalg.norm(psi),
                dressed_correlation(problem, t_next),
            )
        )
    return out
