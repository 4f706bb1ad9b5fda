import itertools
import math

import numpy as np
import pytest

from incitensor import faces as F
from incitensor import oracle
from incitensor.equimap import EquivariantMap, PoolBroadcastTerm, Signature, apply_map, apply_term, enumerate_terms, tau
from incitensor.errors import RangeError, UnderResolvedOrbitsError
from incitensor.tensors import FaceVector

# frozen reference values
BELL = [1, 1, 2, 5, 15, 52, 203, 877, 4140]
STIRLING_4 = [0, 1, 7, 6, 1]


class TestNumbers:
    def test_bell(self):
        assert [oracle.bell(n) for n in range(9)] == BELL

    def test_stirling(self):
        assert oracle.stirling(3, 2) == 3
        assert [oracle.stirling(4, k) for k in range(5)] == STIRLING_4
        assert oracle.stirling(4, 7) == 0

    def test_bell_is_row_sum(self):
        for n in range(1, 10):
            assert sum(oracle.stirling(n, k) for k in range(n + 1)) == oracle.bell(n)

    @pytest.mark.parametrize("n", [-1, 13])
    def test_range(self, n):
        with pytest.raises(RangeError):
            oracle.bell(n)


class TestOrbits:
    @pytest.mark.parametrize("m,n,nodes,count", [(1, 1, 3, 2), (2, 2, 5, 7), (2, 3, 5, 13), (3, 3, 6, 34)])
    def test_counts(self, m, n, nodes, count):
        assert len(oracle.enumerate_orbits_bruteforce(m, n, nodes)) == count == tau(m, n)

    @pytest.mark.parametrize("m,n", list(itertools.product([1, 2], [1, 2, 3])))
    def test_closure_and_partition(self, m, n):
        nodes = m + n
        orbits = oracle.enumerate_orbits_bruteforce(m, n, nodes)
        assert oracle.check_orbit_closure(orbits, m, n, nodes)
        shape = (math.perm(nodes, n), math.perm(nodes, m))
        assert np.array_equal(sum(o.indicator(shape) for o in orbits), np.ones(shape, dtype=np.int64))

    def test_undercount(self):
        with pytest.raises(UnderResolvedOrbitsError):
            oracle.enumerate_orbits_bruteforce(2, 2, 3)
        assert len(oracle.enumerate_orbits_bruteforce(2, 2, 3, allow_underresolved=True)) == 6

    def test_bijection_with_terms(self):
        for m, n in itertools.product(range(1, 4), repeat=2):
            orbits = oracle.enumerate_orbits_bruteforce(m, n, m + n)
            keys = {oracle.orbit_to_term(o.pattern).key for o in orbits}
            assert keys == {t.key for t in enumerate_terms(m, n)}


class TestPatternToTerm:
    def test_pool_both(self):
        term = oracle.orbit_to_term(oracle.OrbitPattern(2, 1, ()))
        assert (term.pooled, term.placement) == ((1, 2), ())

    def test_pool_second(self):
        term = oracle.orbit_to_term(oracle.OrbitPattern(2, 1, ((1, 1),)))
        assert (term.pooled, term.placement) == ((2,), (1,))

    def test_identity(self):
        term = oracle.orbit_to_term(oracle.OrbitPattern(3, 3, ((1, 1), (2, 2), (3, 3))))
        assert term == PoolBroadcastTerm(3, 3, (), (1, 2, 3))

    def test_blocks(self):
        assert oracle.OrbitPattern(2, 1, ((1, 1),)).blocks() == [("d1", "e1"), ("d2",)]


class TestDenseW:
    def test_identity(self):
        w = oracle.term_to_denseW(PoolBroadcastTerm(2, 2, (), (1, 2)), 4)
        assert np.array_equal(w, np.eye(12, dtype=np.int64))

    def test_all_ones(self):
        assert np.all(oracle.term_to_denseW(PoolBroadcastTerm(2, 1, (1, 2), ()), 4) == 1)

    @pytest.mark.parametrize("m,n", list(itertools.product([1, 2], [1, 2, 3])))
    def test_union_of_containing_orbits(self, m, n):
        nodes = m + n
        orbits = oracle.enumerate_orbits_bruteforce(m, n, nodes)
        shape = (math.perm(nodes, n), math.perm(nodes, m))
        exact = {o.pattern.matching: o for o in orbits}
        for term in enumerate_terms(m, n):
            w = oracle.term_to_denseW(term, nodes)
            # the exact-pattern orbit is inside, and w is the union of its super-patterns
            assert np.all(exact[term.matching].indicator(shape) <= w)
            union = sum(o.indicator(shape) for o in orbits if set(term.matching) <= set(o.pattern.matching))
            assert np.array_equal(w, union)

    @pytest.mark.parametrize("m,n", list(itertools.product([1, 2], [1, 2, 3])))
    def test_matches_apply_term(self, m, n):
        rng = np.random.default_rng(m * 10 + n)
        x = FaceVector(5, m, True, rng.integers(-9, 10, size=(math.perm(5, m), 1)))
        for term in enumerate_terms(m, n):
            assert np.array_equal(oracle.term_to_denseW(term, 5) @ x.values, apply_term(term, x).values)


class TestOracleApply:
    def test_zero(self):
        orbits = oracle.enumerate_orbits_bruteforce(1, 2, 3)
        x = FaceVector(3, 1, True, [[1], [2], [3]])
        assert not np.any(oracle.oracle_apply(np.zeros(len(orbits), dtype=int), x, orbits, 2).values)

    @pytest.mark.parametrize("m,n", list(itertools.product([1, 2], [1, 2, 3])))
    def test_equals_apply_map(self, m, n):
        rng = np.random.default_rng(100 + 10 * m + n)
        orbits = oracle.enumerate_orbits_bruteforce(m, n, 5)
        layer = EquivariantMap.random(Signature(((m, 1),), 2), Signature(((n, 1),), 3), rng, integer=True)
        x = FaceVector(5, m, True, rng.integers(-9, 10, size=(math.perm(5, m), 2)))
        w = oracle.term_weights_to_orbit_weights(layer.weights[((m, 0), (n, 0))], orbits, m, n)
        fast = apply_map(layer, {(m, 0): x})[(n, 0)]
        assert oracle.oracle_apply(w, x, orbits, n) == fast

    def test_graph_layer_n4(self):
        rng = np.random.default_rng(4)
        sig = Signature.from_dims([1, 1])
        layer = EquivariantMap.random(sig, sig, rng, integer=True)
        parts = {(1, 0): FaceVector(4, 1, True, rng.integers(-9, 10, size=(4, 1))),
                 (2, 0): FaceVector(4, 2, True, rng.integers(-9, 10, size=(12, 1)))}
        out = apply_map(layer, parts)
        for (n, _), y in out.items():
            total = 0
            for (m, _), x in parts.items():
                orbits = oracle.enumerate_orbits_bruteforce(m, n, 4, allow_underresolved=True)
                # with N < M+M' some patterns are empty; weights still map term-by-term
                w = oracle.term_weights_to_orbit_weights(layer.weights[((m, 0), (n, 0))], orbits, m, n)
                total = total + oracle.oracle_apply(w, x, orbits, n).values
            assert np.array_equal(total, y.values)


class TestSharingGrid:
    @pytest.mark.parametrize("m,n,symbols", [(1, 1, 2), (2, 2, 7), (2, 3, 13)])
    def test_symbols(self, m, n, symbols):
        grid, orbits = oracle.sharing_grid(m, n, 5)
        assert len(np.unique(grid)) == len(orbits) == symbols
        assert grid.shape == (F.face_count(5, n, True), F.face_count(5, m, True))

    def test_formula_check(self):
        row = oracle.orbit_count_formula_check(2, 2, 3)
        assert not row["resolved"] and row["orbit_count"] == 6 and row["tau"] == 7
