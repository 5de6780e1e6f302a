"""Randomized invariants, driven by hypothesis through seeded numpy generators."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_belief, random_chain
from oracles import minimax_value
from searchgame import (
    Belief,
    GameSpec,
    SimplexGrid,
    classify,
    condition,
    propagate,
    q_value,
    solve_batch,
    specio,
    stationary_distribution,
    step_belief,
    tv_distance,
    value_finite,
)

seeds = st.integers(0, 2**32 - 1)
sizes = st.integers(2, 5)
FAST = settings(max_examples=60, deadline=None)
SLOW = settings(max_examples=25, deadline=None)


def game(seed, n, zeros=0.0):
    rng = np.random.default_rng(seed)
    return rng, GameSpec.from_arrays([random_chain(rng, n, zeros)], random_belief(rng, n, zeros))


@FAST
@given(seeds, sizes, st.floats(0.0, 0.6))
def test_condition_idempotent_and_on_simplex(seed, n, zeros):
    rng = np.random.default_rng(seed)
    p = random_belief(rng, n, zeros)
    s = int(rng.integers(n))
    if p[s] >= 1 - 1e-12:
        return
    c = condition(p, s)
    assert c.probs[s] == 0.0
    assert abs(c.probs.sum() - 1.0) <= 1e-12 and c.probs.min() >= 0
    assert np.allclose(condition(c, s).probs, c.probs, atol=1e-15)
    # supports outside s keep their ratios
    keep = np.arange(n) != s
    assert np.allclose(c.probs[keep] * (1 - p[s]), p[keep], atol=1e-12)


@FAST
@given(seeds, sizes, st.floats(0.0, 0.6))
def test_propagate_preserves_simplex_and_contracts(seed, n, zeros):
    rng = np.random.default_rng(seed)
    P = random_chain(rng, n, zeros)
    p, q = random_belief(rng, n), random_belief(rng, n, zeros)
    pp, qq = propagate(p, P).probs, propagate(q, P).probs
    assert abs(pp.sum() - 1.0) <= 1e-12 and pp.min() >= 0
    assert tv_distance(pp, qq) <= tv_distance(p, q) + 1e-12


@FAST
@given(seeds, sizes)
def test_tv_is_a_metric(seed, n):
    rng = np.random.default_rng(seed)
    a, b, c = (random_belief(rng, n, 0.3) for _ in range(3))
    ab = tv_distance(a, b)
    assert 0.0 <= ab <= 1.0
    assert ab == tv_distance(b, a)
    assert tv_distance(a, c) <= ab + tv_distance(b, c) + 1e-12
    assert tv_distance(a, a) == 0.0


@FAST
@given(seeds, sizes, st.floats(0.0, 0.7))
def test_classify_commutes_with_relabelling(seed, n, zeros):
    rng = np.random.default_rng(seed)
    P = random_chain(rng, n, zeros)
    perm = rng.permutation(n)
    a = classify(P)
    # state j of the relabelled chain is state perm[j] of the original
    b = classify(P[np.ix_(perm, perm)])
    relabel = lambda S: {int(perm[j]) for j in S}  # noqa: E731
    assert relabel(b.transient_states) == a.transient_states
    assert relabel(b.absorbing_states) == a.absorbing_states
    assert {frozenset(relabel(c)) for c in b.ergodic_classes} == set(a.ergodic_classes)
    assert (a.irreducible, a.period) == (b.irreducible, b.period)


@FAST
@given(seeds)
def test_mixing_chains_converge_to_stationary(seed):
    rng = np.random.default_rng(seed)
    P = 0.8 * random_chain(rng, 4) + 0.2 / 4
    pi = stationary_distribution(P).probs
    p = random_belief(rng, 4, 0.5)
    for _ in range(200):
        p = propagate(p, P).probs
    assert tv_distance(p, pi) <= 1e-6


@SLOW
@given(seeds, st.integers(2, 4), st.integers(1, 7), st.floats(0.0, 1.0), st.floats(0.0, 0.5))
def test_q_value_is_affine_towards_the_searched_vertex(seed, n, T, lam, zeros):
    rng, spec = game(seed, n, zeros)
    s = int(rng.integers(n))
    p = spec.initial.probs
    if p[s] >= 1 - 1e-12:
        return
    mix = lam * np.eye(n)[s] + (1 - lam) * p
    q, _ = solve_batch(spec, np.vstack([p, mix]), T)
    assert abs(q[1, s] - (lam + (1 - lam) * q[0, s])) <= 1e-9


@SLOW
@given(seeds, st.integers(2, 4), st.integers(1, 7), st.floats(0.0, 0.5))
def test_values_are_one_lipschitz_in_tv(seed, n, T, zeros):
    rng, spec = game(seed, n, zeros)
    p, r = spec.initial.probs, random_belief(rng, n, zeros)
    q, v = solve_batch(spec, np.vstack([p, r]), T)
    d = tv_distance(p, r)
    assert abs(v[0] - v[1]) <= d + 1e-9
    assert np.all(np.abs(q[0] - q[1]) <= d + 1e-9)


@SLOW
@given(seeds, st.integers(2, 3), st.integers(1, 5), st.floats(0.0, 0.6), st.sampled_from([1, 2]))
def test_solver_matches_brute_force(seed, n, T, zeros, player):
    _, spec = game(seed, n, zeros)
    mats = [m.rows for m in spec.schedule.matrices]
    want = minimax_value(mats, spec.initial.probs, T, player=player)
    assert abs(value_finite(spec, T, player).value - want) <= 1e-12


@SLOW
@given(seeds, st.integers(2, 3), st.integers(1, 6))
def test_values_sum_to_at_most_one(seed, n, T):
    # the find probabilities of the two players, each under its own optimum, bracket the split
    _, spec = game(seed, n)
    v1 = value_finite(spec, T, 1).value
    v2 = value_finite(spec, T, 2).value
    assert v1 + v2 <= 1.0 + 1e-12
    assert abs(max(q_value(spec, T, s) for s in range(n)) - v1) <= 1e-15


@FAST
@given(seeds, sizes, st.floats(0.0, 0.6))
def test_step_belief_is_condition_then_propagate(seed, n, zeros):
    rng, spec = game(seed, n, zeros)
    s = int(rng.integers(n))
    if spec.initial.probs[s] >= 1 - 1e-12:
        return
    a = step_belief(spec.initial, s, 1, spec).probs
    b = propagate(condition(spec.initial, s), spec.matrix(1)).probs
    assert np.allclose(a, b, atol=1e-15)


@FAST
@given(seeds, st.integers(1, 4), st.integers(1, 3))
def test_spec_document_round_trip(seed, n, L):
    rng = np.random.default_rng(seed)
    spec = GameSpec.from_arrays([random_chain(rng, n, 0.3) for _ in range(L)], random_belief(rng, n, 0.3),
                                repeat=("cycle", "hold_last")[seed % 2])
    again = specio.loads(specio.dumps(spec))
    assert again.schedule.repeat_rule == spec.schedule.repeat_rule
    for a, b in zip(spec.schedule.matrices, again.schedule.matrices):
        assert np.array_equal(a.rows, b.rows)
    assert np.array_equal(again.initial.probs, spec.initial.probs)
    assert np.array_equal(Belief(again.initial.probs).probs, again.initial.probs)


@FAST
@given(st.integers(1, 5), st.integers(1, 8))
def test_grid_points_are_beliefs(n, N):
    g = SimplexGrid(n, N)
    assert len(g) == SimplexGrid.size(n, N)
    for p in g.points:
        Belief(p)
