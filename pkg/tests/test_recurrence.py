"""Return series, Monte Carlo return estimates and the combined verdict.

The exact series values below were frozen from an independent dynamic
program over the backward offset laws:

    unbiased: (Q^{2n})_00 = C(2n, n) / 4^n        -> 1/2, 3/8, 5/16, ...
    biased:   (Q^{3n})_00 = (3n)!/((2n)! n!) / 8^n -> 3/8, 15/64, 21/128, 495/4096
"""

from fractions import Fraction
from math import comb, factorial

import pytest

from fairshift import (
    Abs, ClassifyPolicy, Rel, TransitionRuleSet, WindowInsufficient,
    biased_walk, build_backward_kernel, classify, factorial_chain,
    five_three_chain, full_shift, monte_carlo_return, origin_broadcast,
    series_test, unbiased_walk,
)


def kernel_of(m):
    return build_backward_kernel(m)


# -- exact return series -----------------------------------------------------

def test_unbiased_series_terms():
    res = series_test(kernel_of(unbiased_walk()), n_max=8)
    assert res.terms[0] == 1
    assert res.terms[1] == 0
    assert res.terms[2] == Fraction(1, 2)
    for n in range(1, 5):
        assert res.terms[2 * n] == Fraction(comb(2 * n, n), 4 ** n)
        if 2 * n + 1 <= 8:
            assert res.terms[2 * n + 1] == 0


def test_biased_series_terms():
    res = series_test(kernel_of(biased_walk()), n_max=12)
    assert res.terms[3] == Fraction(3, 8)
    assert res.terms[6] == Fraction(15, 64)
    assert res.terms[9] == Fraction(21, 128)
    assert res.terms[12] == Fraction(495, 4096)
    for n in range(1, 5):
        got = res.terms[3 * n]
        assert got == Fraction(factorial(3 * n),
                               factorial(2 * n) * factorial(n) * 8 ** n)
    assert all(res.terms[k] == 0 for k in range(13) if k % 3 and k > 0)


def test_broadcast_series_head():
    res = series_test(kernel_of(origin_broadcast()), n_max=6)
    assert res.terms[1] == Fraction(1, 2)
    assert res.terms[2] == Fraction(1, 2)


def test_partial_sums_are_monotone():
    for m in (unbiased_walk(), biased_walk(), five_three_chain()):
        res = series_test(kernel_of(m), n_max=20)
        sums = res.partial_sums
        assert all(a <= b for a, b in zip(sums, sums[1:]))
        assert sums[0] == 1


def test_series_window_guard_raises():
    with pytest.raises(WindowInsufficient) as exc:
        series_test(kernel_of(unbiased_walk()), n_max=40,
                    window=16, max_window=16)
    err = exc.value
    assert err.cap == 16
    assert err.span > 16
    # support after n steps spans [-n, n]; a span of 17 needs step 17
    assert err.step == 17


def test_series_window_doubles_transparently():
    small = series_test(kernel_of(unbiased_walk()), n_max=30, window=4)
    big = series_test(kernel_of(unbiased_walk()), n_max=30, window=1024)
    assert small.terms == big.terms


def test_series_respects_origin():
    res0 = series_test(kernel_of(five_three_chain()), n_max=8, origin=0)
    res1 = series_test(kernel_of(five_three_chain()), n_max=8, origin=1)
    assert res0.origin == 0 and res1.origin == 1
    assert res0.terms != res1.terms     # parity classes differ


# -- Monte Carlo return ------------------------------------------------------

def test_one_state_loop_always_returns_in_one_step():
    loop = TransitionRuleSet(lo=0, hi=0, head=1, explicit={0: (Abs(0),)},
                             name="loop")
    est = monte_carlo_return(kernel_of(loop), trials=500, horizon=10, seed=3)
    assert est.frequency == 1.0
    assert est.returned == 500
    assert est.escaped == 0
    assert est.mean_return_time_of_returners == 1.0


def test_one_way_ray_never_returns():
    ray = TransitionRuleSet(tail={0: (Rel(1),)}, name="ray")
    est = monte_carlo_return(kernel_of(ray), trials=400, horizon=50, seed=0)
    assert est.returned == 0
    assert est.frequency == 0.0
    assert est.mean_return_time_of_returners is None


def test_biased_walk_return_mass_is_bounded_away_from_one():
    est = monte_carlo_return(kernel_of(biased_walk()), trials=100_000,
                             horizon=10_000, seed=0, escape_radius=256)
    assert est.returned > 0
    assert 0.5 < est.frequency < 0.7       # true mass ~ 0.576
    assert est.wilson_high < 0.99
    assert est.mean_return_time_of_returners is not None


def test_unbiased_walk_return_mass_grows_with_horizon():
    ests = [monte_carlo_return(kernel_of(unbiased_walk()), trials=20_000,
                               horizon=h, seed=1) for h in (100, 1_000, 10_000)]
    freqs = [e.frequency for e in ests]
    assert freqs[0] < freqs[1] < freqs[2]
    assert freqs[2] > 0.97
    mean_rts = [e.mean_return_time_of_returners for e in ests]
    assert mean_rts[0] < mean_rts[1] < mean_rts[2]


def test_monte_carlo_is_seed_deterministic():
    k = kernel_of(five_three_chain())
    a = monte_carlo_return(k, trials=2_000, horizon=200, seed=7)
    b = monte_carlo_return(k, trials=2_000, horizon=200, seed=7)
    c = monte_carlo_return(k, trials=2_000, horizon=200, seed=8)
    assert a.as_dict() == b.as_dict()
    assert a.returned != c.returned or a.mean_return_time_of_returners != \
        c.mean_return_time_of_returners


def test_wilson_interval_brackets_the_frequency():
    est = monte_carlo_return(kernel_of(unbiased_walk()), trials=5_000,
                             horizon=100, seed=2)
    assert 0.0 <= est.wilson_low <= est.frequency <= est.wilson_high <= 1.0


# -- combined classification ---------------------------------------------------

# smaller sample than the default but the full top horizon: the top
# horizon is what separates "slowly creeping to 1" from "capped below 1"
QUICK = ClassifyPolicy(trials=5_000, horizons=(100, 1_000, 10_000))


def test_classify_the_five_builtin_families():
    expected = {
        "unbiased-walk": "null-recurrent",
        "biased-walk": "transient",
        "origin-broadcast": "positive-recurrent",
        "factorial-chain": "positive-recurrent",
        "five-three": "null-recurrent",
    }
    for m in (unbiased_walk(), biased_walk(), origin_broadcast(),
              factorial_chain(), five_three_chain()):
        got = classify(kernel_of(m), QUICK)
        assert got.verdict == expected[m.name], m.name


def test_classify_full_shift_positive():
    got = classify(kernel_of(full_shift(2)), QUICK)
    assert got.verdict == "positive-recurrent"
    assert got.has_fair_measure is True


def test_has_fair_measure_tracks_verdict():
    assert classify(kernel_of(biased_walk()), QUICK).has_fair_measure is False
    assert classify(kernel_of(unbiased_walk()), QUICK).has_fair_measure is False
    assert classify(kernel_of(origin_broadcast()), QUICK).has_fair_measure is True


def test_positive_verdict_requires_solver_success():
    for m in (unbiased_walk(), biased_walk(), origin_broadcast(),
              factorial_chain(), five_three_chain(), full_shift(3)):
        got = classify(kernel_of(m), QUICK)
        if got.verdict == "positive-recurrent":
            assert got.evidence["solver"]["outcome"] == "summable"
        else:
            assert got.evidence["solver"]["outcome"] != "summable"


def test_classify_evidence_layout():
    got = classify(kernel_of(unbiased_walk()), QUICK)
    assert set(got.evidence) >= {"policy", "solver", "series", "monte_carlo"}
    assert got.evidence["policy"]["origin"] == 0
    assert len(got.evidence["monte_carlo"]["estimates"]) == len(QUICK.horizons)
    # null recurrence needs diverging series plus near-one return mass
    assert got.evidence["series"]["last_quarter_growth"] > 1e-6


def test_classify_starved_window_is_unknown():
    got = classify(kernel_of(unbiased_walk()),
                   ClassifyPolicy(max_window=8, trials=500,
                                  horizons=(50,), series_nmax=20))
    assert got.verdict in ("unknown", "null-recurrent")
    if got.verdict == "unknown":
        assert got.has_fair_measure is None


def test_classify_is_seed_reproducible():
    p = ClassifyPolicy(trials=3_000, horizons=(100, 500), seed=11)
    a = classify(kernel_of(five_three_chain()), p)
    b = classify(kernel_of(five_three_chain()), p)
    assert a.verdict == b.verdict
    assert a.evidence["monte_carlo"] == b.evidence["monte_carlo"]
