import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraccl.initial_data import FluxModel, SignedBVInitial, unit_riemann_datum
from fraccl.particles import (NumericalAbort, ParticleState, SignedCdf, SimulationConfig,
                              check_kill_invariants, euler_step, evaluate_cdf, init_particles,
                              kill_pairs, leftmost_kill_reference, run_simulation, signed_cdf,
                              total_signed_mass, total_variation)
from fraccl.stable_levy import StableDriver

BURGERS = FluxModel.burgers()


def state(positions, signs):
    n = len(positions)
    return ParticleState(np.asarray(positions, float), np.asarray(signs, np.int8),
                         np.ones(n, bool), np.full(n, np.inf))


def killed_set(positions, signs, eps):
    _, rep = kill_pairs(state(positions, signs), eps, 0.0)
    return sorted(map(tuple, rep.pairs.tolist()))


# -- killing -------------------------------------------------------------------------

def test_kill_examples():
    assert killed_set([0, 0.05, 0.10], [1, -1, 1], 0.06) == [(0, 1)]
    assert killed_set([0, 0.04, 0.05], [-1, -1, 1], 0.06) == [(1, 2)]
    assert killed_set([0, 0.05, 0.08, 0.20], [1, -1, 1, -1], 0.06) == [(0, 1)]
    assert killed_set([0, 0.01, 0.02], [1, 1, 1], 10.0) == []


def test_kill_threshold_is_strict_and_ties_are_killed():
    assert killed_set([0.0, 1.0], [1, -1], 1.0) == []
    assert killed_set([0.5, 0.5], [1, -1], 1e-9) == [(0, 1)]


def test_kill_a_single_or_no_particle():
    new, rep = kill_pairs(state([0.0], [1]), 0.1, 0.0)
    assert rep.n_pairs == 0 and new.n_alive == 1
    with pytest.raises(ValueError):
        kill_pairs(state([0.0], [1]), 0.0, 0.0)


def _exhaustive(nmax, eps=1.0):
    mismatches = 0
    for n in range(1, nmax + 1):
        for signs in itertools.product((1, -1), repeat=n):
            for gaps in itertools.product((0.5, 2.0), repeat=n - 1):
                pos = np.concatenate([[0.0], np.cumsum(gaps)])
                ref = sorted(leftmost_kill_reference(pos, signs, eps))
                if killed_set(pos, signs, eps) != ref:
                    mismatches += 1
    return mismatches


def test_stack_scan_equals_recursive_rule_exhaustive_small():
    assert _exhaustive(7) == 0


def test_recursive_oracle_hand_trace():
    # + - + within eps: leftmost couple (0, 1) dies, then + at 2 survives
    assert leftmost_kill_reference([0, 0.5, 1.0], [1, -1, 1], 1.0) == [(0, 1)]
    # - + - + chain: (0,1) then (2,3)
    assert leftmost_kill_reference([0, .5, 1, 1.5], [-1, 1, -1, 1], 1.0) == [(0, 1), (2, 3)]
    # + + - -: the middle couple dies first, which makes 0 and 3 consecutive
    assert leftmost_kill_reference([0, .3, .6, .9], [1, 1, -1, -1], 1.0) == [(1, 2), (0, 3)]


signs_st = st.lists(st.sampled_from([1, -1]), min_size=1, max_size=40)


@settings(max_examples=100, deadline=None)
@given(signs=signs_st, data=st.data())
def test_kill_invariants_and_permutation_invariance(signs, data):
    n = len(signs)
    pos = np.array(data.draw(st.lists(st.integers(0, 30), min_size=n, max_size=n)), float) / 10
    eps = data.draw(st.sampled_from([0.05, 0.15, 0.3, 1.0]))
    before = state(pos, signs)
    after, rep = kill_pairs(before, eps, 0.7)
    assert check_kill_invariants(before, after, rep, eps) == []
    assert np.all(after.death_time[~after.alive] == 0.7)
    # relabel: same positions/signs in a shuffled order -> same killed multiset
    # (ties between equal-position equal-sign particles are interchangeable)
    perm = np.random.default_rng(n).permutation(n)
    after2, rep2 = kill_pairs(state(pos[perm], np.asarray(signs)[perm]), eps, 0.7)
    key = lambda r: sorted(map(tuple, np.column_stack([r.positions.ravel(), r.signs.ravel()]).tolist()))
    if len(set(pos)) == n:
        assert key(rep) == key(rep2)
    assert after.mass_numerator == after2.mass_numerator
    assert after.n_alive == after2.n_alive


@settings(max_examples=100, deadline=None)
@given(signs=signs_st, data=st.data())
def test_survivor_cdf_preserved(signs, data):
    n = len(signs)
    pos = np.sort(np.array(data.draw(st.lists(st.floats(0, 3), min_size=n, max_size=n,
                                              unique=True))))
    before = state(pos, signs)
    after, rep = kill_pairs(before, 0.4, 0.0)
    cb, ca = signed_cdf(before), signed_cdf(after)
    alive = after.positions[after.alive]
    assert np.array_equal(np.round(evaluate_cdf(cb, alive) * n), np.round(evaluate_cdf(ca, alive) * n))
    assert total_signed_mass(after) == total_signed_mass(before)
    assert total_variation(after) == pytest.approx(total_variation(before) - 2 * rep.n_pairs / n)


# -- CDF -------------------------------------------------------------------------------

def test_evaluate_cdf_examples():
    c = SignedCdf(np.array([1.0, 2.0]), np.array([1, 0]), 2)
    assert evaluate_cdf(c, 1.5) == 0.5
    assert evaluate_cdf(c, 2.0) == 0.0
    assert evaluate_cdf(c, 0.0) == 0.0
    assert np.allclose(evaluate_cdf(c, np.array([0.0, 1.0, 5.0])), [0, 0.5, 0])


def test_cdf_to_piecewise():
    c = signed_cdf(state([0.0, 1.0, 3.0], [1, 1, -1]))
    p = c.to_piecewise(scale=4.0, offset=1.0)
    q = np.array([-1, 0, 0.5, 1, 2, 3, 4])
    assert np.allclose(p(q), 1 + 4 * evaluate_cdf(c, q))


# -- Euler step ------------------------------------------------------------------------

def test_euler_examples():
    s = euler_step(state([0.0], [1]), BURGERS, 0.0, 1.5, 0.01, None)
    assert s.positions.tolist() == [0.01] and s.k == 1
    s = euler_step(state([0.0, 1.0], [1, 1]), BURGERS, 0.0, 1.5, 0.1, None)
    assert np.allclose(s.positions, [0.05, 1.1])   # displacements [0.05, 0.1]
    s = euler_step(state([0.0, 1.0], [1, -1]), BURGERS, 0.0, 1.5, 0.1, None)
    assert np.allclose(s.positions, [0.05, 1.0])


def test_zero_noise_single_sign_characteristics():
    n, h = 16, 0.03
    pos = np.random.default_rng(0).uniform(0, 1, n)
    s = state(pos, np.ones(n))
    new = euler_step(s, BURGERS, 0.0, 1.0, h, None)
    order = np.argsort(pos)
    assert np.allclose(new.positions[order] - pos[order], np.arange(1, n + 1) / n * h, atol=1e-15, rtol=0)


def test_zero_noise_tied_block_spreads():
    s = state(np.zeros(4), np.ones(4))
    new = euler_step(s, BURGERS, 0.0, 1.0, 1.0, None)
    assert sorted(new.positions.tolist()) == [0.25, 0.5, 0.75, 1.0]


def test_dead_particles_frozen():
    s, _ = kill_pairs(state([0.0, 0.01, 2.0], [1, -1, 1]), 0.1, 0.0)
    d = StableDriver(1.5, seed=0)
    for _ in range(5):
        s = euler_step(s, BURGERS, 1.0, 1.5, 0.1, d)
    assert s.positions[:2].tolist() == [0.0, 0.01]
    assert s.positions[2] != 2.0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_euler_errors():
    s = state([0.0], [1])
    with pytest.raises(ValueError):
        euler_step(s, BURGERS, 1.0, 1.5, 0.1, None)
    with pytest.raises(ValueError):
        euler_step(s, BURGERS, 0.0, 1.5, 0.0, None)
    with pytest.raises(NumericalAbort):
        euler_step(s, FluxModel.polynomial([0, 1e308, 1e308]), 0.0, 1.5, 1e10, None)


# -- initialization and full runs ---------------------------------------------------------

def test_init_examples():
    rng = np.random.default_rng(0)
    s = init_particles(SignedBVInitial(atoms=((0.0, 1.0),)), 50, 0.3, rng)
    assert s.n_alive == 50
    s = init_particles(SignedBVInitial(atoms=((0.0, 0.5), (0.005, -0.5))), 8, 0.01, rng)
    assert s.n_alive == abs(s.mass_numerator)
    assert np.all(s.death_time[~s.alive] == 0)
    s = init_particles(unit_riemann_datum(), 1000, 0.04, rng)
    assert s.n_alive == 1000


def test_run_T0_and_single_particle_trace():
    init = SignedBVInitial(atoms=((0.0, 1.0),))
    r = run_simulation(SimulationConfig(init, BURGERS, 1, 0.1, 0.05, 0.0, 0.0, 1.5))
    assert len(r.snapshots) == 1 and r.snapshots[0][0] == 0.0
    trace = []
    run_simulation(SimulationConfig(init, BURGERS, 1, 0.1, 0.05, 1.0, 0.0, 1.5),
                   callback=lambda t, c, s: trace.append(s.positions[0]))
    assert np.allclose(trace, np.arange(11) * 0.1)


def test_run_invariants_and_determinism():
    cfg = SimulationConfig(unit_riemann_datum(), FluxModel.polynomial([0, 0, 2]), 400, 0.02,
                           0.08, 1.0, 1.0, 1.2, seed=3)
    a = run_simulation(cfg, check_invariants=True)
    b = run_simulation(cfg)
    assert a.violations == []
    assert len(set(a.mass_numerators)) == 1
    assert all(y <= x for x, y in zip(a.alive_counts, a.alive_counts[1:]))
    assert a.alive_counts[-1] < 400
    assert np.array_equal(a.final_state.positions, b.final_state.positions)
    for (_, c), (_, d) in zip(a.snapshots, b.snapshots):
        assert np.array_equal(c.breakpoints, d.breakpoints)
    for _, c in a.snapshots:
        v = c.cumulative
        assert np.all(np.abs(v) <= 1)
    # post-kill separation on every snapshot
    for _, c in a.snapshots:
        sg = np.diff(np.concatenate([[0], c.cum_counts]))
        close = (sg[1:] != sg[:-1]) & (np.diff(c.breakpoints) < cfg.eps)
        assert not close.any()


def test_stratified_even_N_starts_with_zero_mass():
    cfg = SimulationConfig(unit_riemann_datum(), BURGERS, 1000, 0.1, 0.04, 0.0, 1.0, 1.5,
                           stratified=True)
    r = run_simulation(cfg)
    assert r.mass_numerators[0] == 0


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig(unit_riemann_datum(), BURGERS, 0, 0.1, 0.1, 1, 1, 1)
    with pytest.raises(ValueError):
        SimulationConfig(unit_riemann_datum(), BURGERS, 10, 0.1, 0.1, 1, 1, 2.5)
