"""Graph self-maps: dyadic placement, refinement, and the two pipelines."""

from fractions import Fraction

import pytest

from fairshift import (
    NotMarkov, TameGraphMapSpec, check_irreducible, cut_and_paste,
    dendrite_example, full_shift, refined_transition_matrix,
    transition_matrix,
)

F = Fraction


def entries_equal(a, b, window):
    sa, sb = a.states(window), b.states(window)
    if set(sa) != set(sb):
        return False
    return all(a.entry(i, j) == b.entry(i, j) for i in sa for j in sa)


def exchange_spec():
    return TameGraphMapSpec(arcs=(1, 2),
                            covers={1: ((2, True),), 2: ((1, True),)},
                            name="exchange")


# -- spec validation -----------------------------------------------------------

def test_spec_rejects_malformed_graphs():
    with pytest.raises(NotMarkov):
        TameGraphMapSpec(arcs=(), covers={})
    with pytest.raises(NotMarkov):
        TameGraphMapSpec(arcs=(1, 1), covers={1: ((1, True),)})
    with pytest.raises(NotMarkov):
        TameGraphMapSpec(arcs=(1,), covers={1: ((2, True),)})
    with pytest.raises(NotMarkov):
        TameGraphMapSpec(arcs=(1, 2), covers={1: ((2, True),), 2: ()})


# -- placement geometry ----------------------------------------------------------

def test_arcs_are_placed_on_disjoint_dyadic_slots():
    spec = dendrite_example(4)
    model = cut_and_paste(spec)
    for k, a in enumerate(spec.arcs):
        assert model.placements[a] == (F(1, 2 ** (k + 1)), F(1, 2 ** k))
    slots = sorted(model.placements.values())
    assert all(lo_hi[1] == nxt[0] for lo_hi, nxt in zip(slots, slots[1:]))


def test_refined_state_enumeration_is_spatial():
    spec = exchange_spec()
    model = cut_and_paste(spec)
    # arc 2 sits on (1/4, 1/2), left of arc 1 on (1/2, 1)
    assert model.pair_of[0] == (2, 0)
    assert model.pair_of[1] == (1, 0)
    lo0, _ = model.interval_map.partition.bounds(0)
    lo1, _ = model.interval_map.partition.bounds(1)
    assert lo0 < lo1


def test_legs_split_a_slot_evenly():
    spec = TameGraphMapSpec(arcs=(1,), covers={1: ((1, True), (1, False))},
                            name="fold")
    model = cut_and_paste(spec)
    part = model.interval_map.partition
    assert part.points == (F(1, 2), F(3, 4), F(1))
    b0, b1 = model.interval_map.branch(0), model.interval_map.branch(1)
    assert (b0.img_lo, b0.img_hi) == (F(1, 2), F(1))
    assert b0.increasing and not b1.increasing


# -- the two compilation routes agree ----------------------------------------------

def test_refined_matrix_matches_interval_matrix_on_small_graphs():
    specs = [
        exchange_spec(),
        TameGraphMapSpec(arcs=(1,), covers={1: ((1, True), (1, False))},
                         name="fold"),
        TameGraphMapSpec(arcs=(1,), covers={1: ((1, True), (1, True))},
                         name="double"),
        TameGraphMapSpec(arcs=(1, 2),
                         covers={1: ((2, True), (2, False)),
                                 2: ((1, True), (2, True))},
                         name="mixed"),
    ]
    for spec in specs:
        refined = refined_transition_matrix(spec)
        compiled = transition_matrix(cut_and_paste(spec).interval_map)
        n = sum(len(spec.covers[a]) for a in spec.arcs)
        assert len(refined.states(10 ** 6)) == n
        assert entries_equal(refined, compiled, 10 ** 6), spec.name


def test_refined_matrix_matches_interval_matrix_on_dendrites():
    for window in (2, 3, 4, 6):
        spec = dendrite_example(window)
        refined = refined_transition_matrix(spec)
        compiled = transition_matrix(cut_and_paste(spec).interval_map)
        assert entries_equal(refined, compiled, 10 ** 6), window


# -- structure of the refined chains ------------------------------------------------

def test_folded_arc_refines_to_the_full_two_shift():
    spec = TameGraphMapSpec(arcs=(1,), covers={1: ((1, True), (1, False))},
                            name="fold")
    assert entries_equal(refined_transition_matrix(spec), full_shift(2), 9)


def test_exchange_refines_to_a_two_cycle():
    m = refined_transition_matrix(exchange_spec())
    assert m.successors(0) == [1]
    assert m.successors(1) == [0]
    ok, _ = check_irreducible(m, 4)
    assert ok


def test_dendrite_refinement_grows_with_the_window():
    sizes = []
    for window in (2, 4, 6):
        spec = dendrite_example(window)
        sizes.append(len(spec.refined_states()))
        assert all(len(spec.covers[a]) >= 1 for a in spec.arcs)
    assert sizes[0] < sizes[1] < sizes[2]


def test_dendrite_refined_chain_has_boundary_states():
    """Truncating the blade family leaves last-generation states with no
    predecessors, so the refined chain is reducible by construction; the
    fair analysis must run per closed class."""
    m = refined_transition_matrix(dendrite_example(4))
    ok, _ = check_irreducible(m, 10 ** 6)
    assert not ok
    orphans = [j for j in m.states(10 ** 6) if m.column_count(j) == 0]
    assert orphans
