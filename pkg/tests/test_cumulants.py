"""Cumulants of groups, scattering cumulants, generating operators."""

import numpy as np
import pytest

from qkinlab.cumulants import (
    ClusterArgument,
    cumulant,
    dual_cumulant,
    generating_operator,
    inverse_first_cumulant,
    scattering_cumulant,
)
from qkinlab.operators import (
    ManyBodyOperator,
    identity_operator,
    tensor_embed,
    trace_norm,
)
from qkinlab.presets import (
    correlation_sequence,
    product_state,
    random_density,
    random_hermitian,
    random_model,
)
from qkinlab.propagators import heisenberg_group, schrodinger_group, free_flow


def _random_target(rng, labels):
    side = 2 ** len(labels)
    return ManyBodyOperator(2, tuple(labels), random_hermitian(rng, side))


def test_first_order_cumulant_is_the_group(rng, model):
    target = _random_target(rng, (1, 2))
    arg = ClusterArgument((1, 2), ())
    out = cumulant(model, 0.8, arg, target)
    expected = heisenberg_group(model, 0.8, target)
    np.testing.assert_allclose(out.matrix, expected.matrix, atol=1e-12)


@pytest.mark.parametrize("s", [2, 3])
def test_second_order_cumulant_hand_formula(rng, model, s):
    """A_2(t, {Y\\(s)}, s) = G_s - G_{s-1} G_1."""
    labels = tuple(range(1, s + 1))
    target = _random_target(rng, labels)
    arg = ClusterArgument(labels[:-1], (s,))
    out = cumulant(model, 0.6, arg, target)

    full = heisenberg_group(model, 0.6, target)
    from qkinlab.propagators import evolve_block

    split = evolve_block(model, 0.6, labels[:-1], evolve_block(model, 0.6, (s,), target))
    expected = full - split
    np.testing.assert_allclose(out.matrix, expected.matrix, atol=1e-12)


def test_dual_second_order_hand_formula(rng, model):
    target = _random_target(rng, (1, 2))
    out = dual_cumulant(model, 0.9, (1, 2), target)
    full = schrodinger_group(model, 0.9, target)
    split = free_flow(model, 0.9, (1, 2), target, dual=True)
    np.testing.assert_allclose(out.matrix, (full - split).matrix, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_cumulants_vanish_at_time_zero(rng, model, n):
    labels = tuple(range(1, n + 2))
    target = _random_target(rng, labels)
    arg = ClusterArgument((1,), labels[1:])
    out = cumulant(model, 0.0, arg, target)
    assert trace_norm(out) < 1e-12
    out_dual = cumulant(model, 0.0, arg, target, dual=True)
    assert trace_norm(out_dual) < 1e-12


@pytest.mark.parametrize("n", [1, 2])
def test_cumulants_vanish_without_interaction(rng, n):
    model = random_model(rng, dim=2, epsilon=0.0)
    labels = tuple(range(1, n + 2))
    target = _random_target(rng, labels)
    out = cumulant(model, 1.1, ClusterArgument((1,), labels[1:]), target)
    assert trace_norm(out) < 1e-12


def test_empty_cluster_is_inert(rng, model):
    # the cumulant attached to an empty cluster vanishes at order >= 2
    target = _random_target(rng, (1,))
    out = cumulant(model, 0.7, ClusterArgument((), (1,)), target)
    assert trace_norm(out) < 1e-12


@pytest.mark.parametrize("k", [2, 3, 4])
def test_cumulant_inversion_recovers_group(rng, model, k):
    """Summing block-cumulant products over all partitions gives back G_k."""
    from qkinlab.partitions import set_partitions

    labels = tuple(range(1, k + 1))
    target = _random_target(rng, labels)
    t = 0.75
    acc = None
    for part in set_partitions(labels):
        piece = target
        for block in part:
            piece = cumulant(model, t, ClusterArgument((block[0],), tuple(block[1:])), piece)
        acc = piece if acc is None else acc + piece
    expected = heisenberg_group(model, t, target)
    assert trace_norm(acc - expected) < 1e-10


def test_inverse_first_cumulant_composition(rng, model):
    target = _random_target(rng, (1, 2))
    t = 1.2
    flowed = free_flow(model, t, (1, 2), target, dual=True)
    back = inverse_first_cumulant(model, t, (1, 2), flowed)
    np.testing.assert_allclose(back.matrix, target.matrix, atol=1e-12)


# --- scattering cumulants ---------------------------------------------------


def test_scattering_cumulant_at_time_zero_multiplies_by_g(rng, model):
    g = correlation_sequence(2, 3, weight=0.3)
    target = identity_operator(2, (1, 2))
    out = scattering_cumulant(model, 0.0, ClusterArgument((1, 2), ()), g, target)
    np.testing.assert_allclose(out.matrix, g.component(2).matrix, atol=1e-12)


def test_scattering_cumulant_free_identity_is_identity_map(rng):
    model = random_model(rng, dim=2, epsilon=0.0)
    g = correlation_sequence(2, 3, weight=0.0)
    target = _random_target(rng, (1, 2))
    out = scattering_cumulant(model, 0.9, ClusterArgument((1, 2), ()), g, target)
    np.testing.assert_allclose(out.matrix, target.matrix, atol=1e-12)


def test_scattering_cumulant_higher_orders_vanish_at_zero(rng, model):
    g = correlation_sequence(2, 4, weight=0.2)
    target = _random_target(rng, (1, 2, 3))
    out = scattering_cumulant(model, 0.0, ClusterArgument((1, 2), (3,)), g, target)
    assert trace_norm(out) < 1e-12


# --- generating operators ----------------------------------------------------


def test_generating_operator_order_zero_is_leading_cumulant(rng, model):
    g = correlation_sequence(2, 3, weight=0.25)
    f1 = ManyBodyOperator(2, (1,), random_density(rng, 2, 0.4))
    target = product_state(f1, (1, 2))
    out = generating_operator(model, 0.8, 2, 0, g, target)
    expected = scattering_cumulant(model, 0.8, ClusterArgument((1, 2), ()), g, target)
    np.testing.assert_allclose(out.matrix, expected.matrix, atol=1e-12)


def test_generating_operator_first_order_printed_form(rng, model):
    """Gen_2({Y}, s+1) = Sc_2({Y}, s+1) - Sc_1({Y}) sum_i Sc_2(i, s+1), s=2."""
    s = 2
    g = correlation_sequence(2, 4, weight=0.25)
    f1 = ManyBodyOperator(2, (1,), random_density(rng, 2, 0.4))
    target = product_state(f1, (1, 2, 3))
    t = 0.7

    out = generating_operator(model, t, s, 1, g, target)

    lead = scattering_cumulant(model, t, ClusterArgument((1, 2), (3,)), g, target)
    sub = None
    for i in (1, 2):
        inner = scattering_cumulant(model, t, ClusterArgument((i,), (3,)), g, target)
        piece = scattering_cumulant(model, t, ClusterArgument((1, 2), ()), g, inner)
        sub = piece if sub is None else sub + piece
    expected = lead - sub
    np.testing.assert_allclose(out.matrix, expected.matrix, atol=1e-12)


def test_generating_operator_higher_orders_vanish_at_zero(rng, model):
    g = correlation_sequence(2, 4, weight=0.25)
    f1 = ManyBodyOperator(2, (1,), random_density(rng, 2, 0.4))
    for n in (1, 2):
        target = product_state(f1, tuple(range(1, 2 + n + 1)))
        out = generating_operator(model, 0.0, 2, n, g, target)
        assert trace_norm(out) < 1e-12


def test_generating_operator_free_identity_correlations(rng):
    """Free dynamics with identity correlations: order 0 is the identity map,
    higher orders vanish."""
    model = random_model(rng, dim=2, epsilon=0.0)
    g = correlation_sequence(2, 4, weight=0.0)
    f1 = ManyBodyOperator(2, (1,), random_density(rng, 2, 0.4))
    target0 = product_state(f1, (1, 2))
    out0 = generating_operator(model, 1.0, 2, 0, g, target0)
    np.testing.assert_allclose(out0.matrix, target0.matrix, atol=1e-12)
    target1 = product_state(f1, (1, 2, 3))
    out1 = generating_operator(model, 1.0, 2, 1, g, target1)
    assert trace_norm(out1) < 1e-12


def test_generating_operator_cap():
    rng = np.random.default_rng(0)
    model = random_model(rng, dim=2)
    g = correlation_sequence(2, 2, weight=0.0)
    f1 = identity_operator(2, (1,))
    with pytest.raises(ValueError, match="capped"):
        generating_operator(model, 0.5, 6, 2, g, product_state(f1, tuple(range(1, 9))))


@pytest.mark.parametrize("n", [1, 2])
def test_generating_operator_one_particle_cluster_vanishes(rng, model, n):
    """With a one-particle cluster the corrections cancel exactly, so the
    expansion applied to a product reproduces its one-particle input.  This
    pins the composition order of the levels."""
    g = correlation_sequence(2, 4, weight=0.3)
    f1 = ManyBodyOperator(2, (1,), random_density(rng, 2, 0.4))
    target = product_state(f1, tuple(range(1, 1 + n + 1)))
    out = generating_operator(model, 0.9, 1, n, g, target)
    assert trace_norm(out) < 1e-11
