"""Backward sampling, path statistics and distributional checks.

All sampling is seed-deterministic, so the statistical assertions below
are fixed outcomes, with tolerances sized so that any correct RNG stream
would pass (several sigma).
"""

import math

import numpy as np
import pytest

from fairshift import (
    Abs, TransitionRuleSet, build_backward_kernel, biased_walk,
    equidistribution_test, factorial_chain, fair_measure_from, five_three_chain,
    full_shift, geo_mean_convergence, geo_mean_series, origin_broadcast,
    path_statistics, sample_backward, sample_paths, solve_stationary,
    unbiased_walk,
)

FAMILIES = [unbiased_walk(), biased_walk(), origin_broadcast(),
            factorial_chain(), five_three_chain(), full_shift(2)]


def kernel_of(m):
    return build_backward_kernel(m)


def measure_of(m):
    kernel = kernel_of(m)
    pi = solve_stationary(kernel)
    return fair_measure_from(pi, kernel, pi.window)


# -- legality and determinism --------------------------------------------------

def test_every_sampled_step_is_backward_admissible():
    for m in FAMILIES:
        k = kernel_of(m)
        start = m.spiral(1)[0]
        path = sample_backward(k, start=start, length=2_000, seed=5)
        assert path.states[0] == start
        preds = {}
        for a, b in zip(path.states, path.states[1:]):
            a = int(a)
            if a not in preds:
                preds[a] = set(m.predecessors(a))
            assert int(b) in preds[a], m.name


def test_same_seed_same_path():
    for m in (unbiased_walk(), origin_broadcast(), five_three_chain()):
        k = kernel_of(m)
        s = m.spiral(1)[0]
        a = sample_backward(k, s, 5_000, seed=9)
        b = sample_backward(k, s, 5_000, seed=9)
        c = sample_backward(k, s, 5_000, seed=10)
        assert np.array_equal(a.states, b.states)
        assert not np.array_equal(a.states, c.states)


def test_sample_paths_uses_consecutive_seeds():
    k = kernel_of(unbiased_walk())
    paths = sample_paths(k, 0, 100, n_paths=4, seed=20)
    assert [p.seed for p in paths] == [20, 21, 22, 23]
    single = sample_backward(k, 0, 100, seed=22)
    assert np.array_equal(paths[2].states, single.states)


def test_out_of_domain_start_rejected():
    with pytest.raises(ValueError):
        sample_backward(kernel_of(origin_broadcast()), start=-3, length=10)


def test_stuck_state_is_an_error():
    m = TransitionRuleSet(lo=0, hi=1, head=2,
                          explicit={0: (Abs(1),), 1: (Abs(1),)},
                          name="orphan")
    with pytest.raises(ValueError):
        sample_backward(kernel_of(m), start=0, length=10)


def test_deterministic_cycle_path():
    m = TransitionRuleSet(lo=0, hi=2, head=3,
                          explicit={0: (Abs(1),), 1: (Abs(2),), 2: (Abs(0),)},
                          name="three-cycle")
    path = sample_backward(kernel_of(m), start=0, length=9, seed=0)
    assert path.states.tolist() == [0, 2, 1, 0, 2, 1, 0, 2, 1, 0]
    stats = path_statistics(path, m)
    assert stats.geo_mean_c == 1.0
    assert stats.visit_frequencies[0] == pytest.approx(0.4)


# -- marginal statistics ---------------------------------------------------------

def test_unbiased_steps_split_evenly():
    path = sample_backward(kernel_of(unbiased_walk()), 0, 1_000_000, seed=0)
    steps = np.diff(path.states)
    up = float(np.mean(steps == 1))
    assert abs(up - 0.5) < 0.002            # 4 sigma at n = 1e6


def test_one_step_conditionals_match_the_kernel():
    """Empirical next-state distribution per state ~ uniform over the
    predecessor set, for every state visited often enough."""
    for m in (origin_broadcast(), factorial_chain(), full_shift(2)):
        k = kernel_of(m)
        start = m.spiral(1)[0]
        path = sample_backward(k, start, 200_000, seed=4)
        states = path.states
        for s in np.unique(states[:-1]):
            s = int(s)
            idx = np.nonzero(states[:-1] == s)[0]
            if idx.size < 100:
                continue
            nxt = states[idx + 1]
            preds = m.predecessors(s)
            p = 1.0 / len(preds)
            bound = 5.0 * math.sqrt(p * (1 - p) / idx.size)
            for t in preds:
                emp = float(np.mean(nxt == t))
                assert abs(emp - p) <= bound, (m.name, s, t)


def test_visit_frequency_of_first_state_factorial():
    # stationary probability of the lowest state is 1/e
    path = sample_backward(kernel_of(factorial_chain()), 1, 1_000_000, seed=0)
    freq = float(np.mean(path.states == 1))
    assert abs(freq - 1.0 / math.e) < 0.005


def test_path_statistics_shapes():
    m = origin_broadcast()
    path = sample_backward(kernel_of(m), 0, 10_000, seed=1)
    stats = path_statistics(path, m, depth=2)
    assert stats.length == 10_000
    assert abs(sum(stats.visit_frequencies.values()) - 1.0) < 1e-12
    assert abs(sum(v for w, v in stats.cylinder_frequencies.items()
                   if len(w) == 2) - 1.0) < 1e-12
    for s, t in stats.last_visit.items():
        assert int(path.states[t]) == s
    assert stats.frequency((99, 99)) == 0.0
    visits = path.origin_visits()
    assert visits[0] == 0
    assert all(path.states[i] == 0 for i in visits)


# -- geometric means ----------------------------------------------------------

def test_geo_mean_is_exactly_two_on_constant_column_chains():
    for m in (unbiased_walk(), biased_walk(), origin_broadcast(), full_shift(2)):
        path = sample_backward(kernel_of(m), m.spiral(1)[0], 3_000, seed=6)
        series = geo_mean_series(path, kernel_of(m))
        assert np.all(series == 2.0), m.name


def test_geo_mean_tracks_the_entropy_target():
    mu = measure_of(factorial_chain())
    path = sample_backward(kernel_of(factorial_chain()), 1, 100_000, seed=0)
    report = geo_mean_convergence(path, mu)
    assert report.target == pytest.approx(2.85052, abs=2e-4)
    assert abs(report.final() - report.target) / report.target < 0.02
    assert report.means.size == path.states.size


def test_geo_mean_convergence_on_broadcast():
    mu = measure_of(origin_broadcast())
    path = sample_backward(kernel_of(origin_broadcast()), 0, 50_000, seed=2)
    report = geo_mean_convergence(path, mu)
    assert report.target == pytest.approx(2.0, abs=1e-9)
    assert report.final() == pytest.approx(2.0, abs=1e-9)


# -- equidistribution -----------------------------------------------------------

def test_paths_equidistribute_for_broadcast_chain():
    mu = measure_of(origin_broadcast())
    paths = sample_paths(kernel_of(origin_broadcast()), 0, 50_000,
                         n_paths=4, seed=0)
    assert equidistribution_test(paths, mu, depth=1) < 0.02


def test_paths_equidistribute_on_pairs_of_full_shift():
    mu = measure_of(full_shift(2))
    paths = sample_paths(kernel_of(full_shift(2)), 0, 40_000, n_paths=2, seed=3)
    assert equidistribution_test(paths, mu, depth=2) < 0.01


def test_short_stuck_sample_has_large_discrepancy():
    # a length-1 path cannot equidistribute; unseen words keep their mass
    mu = measure_of(origin_broadcast())
    paths = [sample_backward(kernel_of(origin_broadcast()), 5, 1, seed=0)]
    assert equidistribution_test(paths, mu, depth=1) > 0.2


def test_transient_paths_abandon_the_origin():
    k = kernel_of(biased_walk())
    gone = 0
    for seed in range(20):
        path = sample_backward(k, 0, 100_000, seed=seed)
        visits = path.origin_visits()
        if visits.size == 0 or visits[-1] < 90_000:
            gone += 1
    assert gone >= 19
