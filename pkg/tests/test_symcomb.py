from __future__ import annotations

import itertools
from collections import deque

import pytest
from hypothesis import given, strategies as st

from idconv.symcomb import (
    CapExceeded,
    DegreeMismatch,
    NoncrossingPartition,
    Permutation,
    all_permutations,
    catalan,
    cayley_distance,
    count_simple_chains,
    cycles_below,
    enumerate_noncrossing,
    geodesic_leq,
    interval_below,
    kreweras,
    simple_chains_ending_at,
    simple_predecessors,
    symmetric_group,
)

P = Permutation.from_cycles


def perms(max_n: int = 6):
    return st.integers(1, max_n).flatmap(
        lambda n: st.permutations(list(range(1, n + 1))).map(lambda p: Permutation(tuple(p)))
    )


def test_distance_examples():
    assert cayley_distance(Permutation.identity(3), P(3, (1, 2, 3))) == 2
    assert cayley_distance(P(3, (1, 2)), P(3, (1, 2))) == 0
    assert cayley_distance(P(3, (1, 2)), P(3, (1, 2, 3))) == 1


def test_order_examples():
    for s in all_permutations(4):
        assert geodesic_leq(Permutation.identity(4), s)
    assert geodesic_leq(P(3, (1, 2)), P(3, (1, 2, 3)))
    assert not geodesic_leq(P(4, (1, 2), (3, 4)), P(4, (1, 2, 3)))


def test_degree_mismatch():
    with pytest.raises(DegreeMismatch):
        cayley_distance(Permutation.identity(2), Permutation.identity(3))


def test_cycle_canonical_form():
    s = Permutation((3, 1, 2, 5, 4))
    assert s.cycles() == ((1, 3, 2), (4, 5))
    assert str(s) == "(1 3 2)(4 5)"
    assert s.cycle_type() == (3, 2)
    assert s.norm() == 3


@pytest.mark.parametrize("n", range(1, 6))
def test_norm_is_word_length(n):
    # breadth-first search in the Cayley graph generated by transpositions
    start = Permutation.identity(n)
    transp = [P(n, (i, j)) for i, j in itertools.combinations(range(1, n + 1), 2)]
    dist = {start: 0}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for t in transp:
            u = s * t
            if u not in dist:
                dist[u] = dist[s] + 1
                queue.append(u)
    assert len(dist) == symmetric_group(n).order
    assert all(s.norm() == d for s, d in dist.items())


@pytest.mark.parametrize("n", range(1, 5))
def test_geodesic_order_is_partial_order(n):
    ps = list(all_permutations(n))
    for a in ps:
        assert geodesic_leq(a, a)
        for b in ps:
            if a != b and geodesic_leq(a, b):
                assert not geodesic_leq(b, a)
                for c in interval_below(b):
                    if geodesic_leq(c, a):
                        assert geodesic_leq(c, b)


@given(perms())
def test_interval_matches_definition(s):
    below = set(interval_below(s))
    assert below == {r for r in all_permutations(s.n) if geodesic_leq(r, s)}


@given(perms(7))
def test_permutation_json_round_trip(s):
    assert Permutation.from_json(s.to_json()) == s
    assert (s * s.inverse()) == Permutation.identity(s.n)


def test_noncrossing_examples():
    assert len(enumerate_noncrossing(4)) == 14
    (only,) = enumerate_noncrossing(1)
    assert only.blocks == ((1,),)
    pi = NoncrossingPartition(3, ((1, 3), (2,)))
    assert pi.permutation == P(3, (1, 3))


def test_crossing_partition_rejected():
    with pytest.raises(ValueError):
        NoncrossingPartition(4, ((1, 3), (2, 4)))


@pytest.mark.parametrize("n", range(1, 11))
def test_catalan_count(n):
    assert len(enumerate_noncrossing(n)) == catalan(n)


def test_noncrossing_cap():
    with pytest.raises(CapExceeded):
        enumerate_noncrossing(5, cap=4)


@pytest.mark.parametrize("n", range(1, 7))
def test_biane_map_is_order_isomorphism(n):
    nc = enumerate_noncrossing(n)
    for a in nc:
        for b in nc:
            assert a.leq(b) == geodesic_leq(a.permutation, b.permutation)


def test_kreweras_examples():
    for n in range(1, 6):
        zero, one = NoncrossingPartition.zero(n), NoncrossingPartition.one(n)
        assert kreweras(zero, one) == one
        assert kreweras(one, one) == zero
    assert kreweras(NoncrossingPartition(2, ((1,), (2,))), NoncrossingPartition.one(2)).blocks == ((1, 2),)


@pytest.mark.parametrize("n", range(1, 6))
def test_kreweras_reverses_order(n):
    nc = enumerate_noncrossing(n)
    one = NoncrossingPartition.one(n)
    image = {p: kreweras(p, one) for p in nc}
    assert len(set(image.values())) == len(nc)
    for a in nc:
        for b in nc:
            if a.leq(b):
                assert image[b].leq(image[a])


def test_chain_examples():
    assert [c.length for c in simple_chains_ending_at(Permutation.identity(3))] == [0]
    chains = list(simple_chains_ending_at(P(2, (1, 2))))
    assert [c.steps for c in chains] == [(P(2, (1, 2)),), (Permutation.identity(2), P(2, (1, 2)))]
    lengths = [c.length for c in simple_chains_ending_at(P(3, (1, 2, 3)))]
    assert sorted(lengths) == [0, 1, 1, 1, 1, 2, 2, 2]


def brute_chains(sigma: Permutation) -> int:
    """Count increasing sequences ending at σ with single-cycle quotients, by brute force."""
    ps = list(all_permutations(sigma.n))

    def ending_at(t):
        total = 1
        for r in ps:
            if r != t and geodesic_leq(r, t) and (r.inverse() * t).is_cycle():
                total += ending_at(r)
        return total

    return ending_at(sigma)


@pytest.mark.parametrize("n", range(1, 6))
def test_chain_count_to_full_cycle(n):
    full = P(n, tuple(range(1, n + 1))) if n > 1 else Permutation.identity(1)
    expected = brute_chains(full)
    assert count_simple_chains(full) == expected
    assert sum(1 for _ in simple_chains_ending_at(full)) == expected


@given(perms(5))
def test_chains_are_simple_and_geodesic(s):
    for chain in simple_chains_ending_at(s):
        steps = chain.steps
        assert steps[-1] == s
        total = steps[0].norm()
        for a, b in zip(steps, steps[1:]):
            assert (a.inverse() * b).is_cycle()
            total += cayley_distance(a, b)
        assert total == s.norm()


@given(perms(5))
def test_chain_stream_is_deterministic(s):
    assert [c.steps for c in simple_chains_ending_at(s)] == [c.steps for c in simple_chains_ending_at(s)]


def test_cycles_below_examples():
    for m in (2, 3):
        assert cycles_below(Permutation.identity(3), m) == []
    assert cycles_below(P(2, (1, 2)), 2) == [P(2, (1, 2))]
    assert cycles_below(P(3, (1, 2, 3)), 2) == sorted(P(3, t) for t in [(1, 2), (1, 3), (2, 3)])


@given(perms(5), st.integers(2, 5))
def test_cycles_below_property(s, m):
    if m > s.n:
        return
    for c in cycles_below(s, m):
        assert c.is_cycle() and len(c.support()) == m
        assert geodesic_leq(c * s, s)


@given(perms(5))
def test_simple_predecessors(s):
    for rho, m in simple_predecessors(s):
        q = rho.inverse() * s
        assert q.is_cycle() and len(q.support()) == m
        assert geodesic_leq(rho, s) and rho != s


@pytest.mark.parametrize("n", range(1, 6))
def test_group_tables(n):
    G = symmetric_group(n)
    ps = G.perms
    for i in range(0, G.order, max(1, G.order // 7)):
        for j in range(0, G.order, max(1, G.order // 5)):
            a, b = G.element(i), G.element(j)
            assert G.element(int(G.mul[i, j])) == a * b
            assert int(G.compose_ranks(i, j)) == G.rank(a * b)
    assert G.rank(Permutation.identity(n)) == G.identity_rank
    assert len(ps) == G.order


def test_chain_cap():
    with pytest.raises(CapExceeded):
        count_simple_chains(Permutation.identity(9))
