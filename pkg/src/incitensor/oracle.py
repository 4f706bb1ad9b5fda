"""Brute-force ground truth for equivariant maps between face-vectors.

Orbits of the weight matrix under simultaneous relabelling of input and
output nodes are found by grouping index pairs on the equality pattern of
their concatenated node tuples, never through the pool/broadcast code.
Everything here stays in integer arithmetic so comparisons are exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import faces as F
from .equimap import PoolBroadcastTerm, enumerate_terms
from .errors import RangeError, ShapeMismatchError, UnderResolvedOrbitsError
from .tensors import FaceVector

MAX_COMBINATORIAL_N = 12


def _check_range(n: int) -> None:
    if not 0 <= n <= MAX_COMBINATORIAL_N:
        raise RangeError(f"n must lie in [0, {MAX_COMBINATORIAL_N}], got {n}")


def bell(n: int) -> int:
    """Bell number via the Bell triangle."""
    _check_range(n)
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def stirling(n: int, k: int) -> int:
    """Stirling number of the second kind, S(n,k) = k S(n-1,k) + S(n-1,k-1)."""
    _check_range(n)
    if k < 0 or k > n:
        return 0
    table = [[0] * (n + 1) for _ in range(n + 1)]
    table[0][0] = 1
    for i in range(1, n + 1):
        for j in range(1, i + 1):
            table[i][j] = j * table[i - 1][j] + table[i - 1][j - 1]
    return table[n][k]


@dataclass(frozen=True)
class OrbitPattern:
    """Equality pattern of an orbit: which input position equals which output position.

    Unmatched positions are singletons; everything not in ``matching`` is
    pairwise distinct.
    """

    input_size: int
    output_size: int
    matching: tuple[tuple[int, int], ...]

    def __post_init__(self):
        matching = tuple(sorted((int(a), int(b)) for a, b in self.matching))
        ins = [a for a, _ in matching]
        outs = [b for _, b in matching]
        if len(set(ins)) != len(ins) or len(set(outs)) != len(outs):
            raise ShapeMismatchError(f"matching {matching} pairs a position twice")
        if any(not 1 <= a <= self.input_size for a in ins) or any(not 1 <= b <= self.output_size for b in outs):
            raise ShapeMismatchError(f"matching {matching} out of range")
        object.__setattr__(self, "matching", matching)

    def blocks(self) -> list[tuple[str, ...]]:
        """Blocks over labels ``d1..dM`` (input) and ``e1..eM'`` (output)."""
        matched_in = {a for a, _ in self.matching}
        matched_out = {b for _, b in self.matching}
        blocks = [(f"d{a}", f"e{b}") for a, b in self.matching]
        blocks += [(f"d{a}",) for a in range(1, self.input_size + 1) if a not in matched_in]
        blocks += [(f"e{b}",) for b in range(1, self.output_size + 1) if b not in matched_out]
        return blocks

    @classmethod
    def from_nodes(cls, in_face: Sequence[int], out_face: Sequence[int]) -> "OrbitPattern":
        pos = {v: i for i, v in enumerate(in_face, start=1)}
        matching = [(pos[v], b) for b, v in enumerate(out_face, start=1) if v in pos]
        return cls(len(in_face), len(out_face), tuple(matching))


@dataclass(frozen=True, eq=False)
class Orbit:
    pattern: OrbitPattern
    pairs: np.ndarray  # rows of (out_face_index, in_face_index)

    def indicator(self, shape: tuple[int, int]) -> np.ndarray:
        w = np.zeros(shape, dtype=np.int64)
        w[self.pairs[:, 0], self.pairs[:, 1]] = 1
        return w


def _equality_codes(rows: np.ndarray) -> np.ndarray:
    # first position holding the same node, per position: a canonical equality pattern
    eq = rows[:, :, None] == rows[:, None, :]
    return np.argmax(eq, axis=2)


def enumerate_orbits_bruteforce(input_size: int, output_size: int, n_nodes: int,
                                allow_underresolved: bool = False) -> list[Orbit]:
    """Group all (output face, input face) index pairs of the dense map into orbits.

    Orbits come sorted by their equality code. With ``n_nodes`` below
    ``input_size + output_size`` some patterns cannot occur; that raises
    unless ``allow_underresolved`` is set.
    """
    if n_nodes < input_size + output_size and not allow_underresolved:
        raise UnderResolvedOrbitsError(
            f"N={n_nodes} < M+M'={input_size + output_size}: not every orbit is realizable")
    fin = F.face_array(n_nodes, input_size, True)
    fout = F.face_array(n_nodes, output_size, True)
    o_idx, i_idx = np.meshgrid(np.arange(len(fout)), np.arange(len(fin)), indexing="ij")
    o_idx, i_idx = o_idx.ravel(), i_idx.ravel()
    rows = np.concatenate([fin[i_idx], fout[o_idx]], axis=1)
    if rows.shape[1] == 0:
        codes = np.zeros((len(rows), 0), dtype=np.int64)
    else:
        codes = _equality_codes(rows)
    uniq, label = np.unique(codes, axis=0, return_inverse=True)
    label = label.ravel()
    orbits = []
    for j, _ in enumerate(uniq):
        members = np.flatnonzero(label == j)
        first = members[0]
        pattern = OrbitPattern.from_nodes(fin[i_idx[first]].tolist(), fout[o_idx[first]].tolist())
        pairs = np.stack([o_idx[members], i_idx[members]], axis=1)
        orbits.append(Orbit(pattern, pairs))
    return orbits


def orbit_label_matrix(orbits: Sequence[Orbit], shape: tuple[int, int]) -> np.ndarray:
    labels = np.full(shape, -1, dtype=np.int64)
    for j, orbit in enumerate(orbits):
        labels[orbit.pairs[:, 0], orbit.pairs[:, 1]] = j
    return labels


def all_or_sampled_permutations(n_nodes: int, exhaustive_limit: int = 5,
                                samples: int = 200, rng=0) -> list[tuple[int, ...]]:
    if n_nodes <= exhaustive_limit:
        return list(itertools.permutations(range(1, n_nodes + 1)))
    rng = np.random.default_rng(rng)
    return [tuple(int(v) + 1 for v in rng.permutation(n_nodes)) for _ in range(samples)]


def check_orbit_closure(orbits: Sequence[Orbit], input_size: int, output_size: int,
                        n_nodes: int, perms=None) -> bool:
    """Every orbit maps onto itself under each permutation (all of S_N by default for N <= 5)."""
    shape = (F.face_count(n_nodes, output_size, True), F.face_count(n_nodes, input_size, True))
    labels = orbit_label_matrix(orbits, shape)
    if np.any(labels < 0):
        return False
    for perm in perms if perms is not None else all_or_sampled_permutations(n_nodes):
        p_out = F.face_permutation(n_nodes, output_size, True, perm)
        p_in = F.face_permutation(n_nodes, input_size, True, perm)
        if not np.array_equal(labels[np.ix_(p_out, p_in)], labels):
            return False
    return True


def orbit_to_term(pattern: OrbitPattern) -> PoolBroadcastTerm:
    """Unmatched inputs are pooled, matched inputs placed at their partner, the rest broadcast."""
    matched = dict(pattern.matching)
    pooled = tuple(a for a in range(1, pattern.input_size + 1) if a not in matched)
    placement = tuple(matched[a] for a in sorted(matched))
    return PoolBroadcastTerm(pattern.input_size, pattern.output_size, pooled, placement)


def term_to_pattern(term: PoolBroadcastTerm) -> OrbitPattern:
    return OrbitPattern(term.input_size, term.output_size, term.matching)


def term_to_denseW(term: PoolBroadcastTerm, n_nodes: int) -> np.ndarray:
    """0/1 matrix (output faces x input faces): 1 where every matched pair holds equal nodes."""
    fin = F.face_array(n_nodes, term.input_size, True)
    fout = F.face_array(n_nodes, term.output_size, True)
    w = np.ones((len(fout), len(fin)), dtype=np.int64)
    for a, b in term.matching:
        w &= (fout[:, b - 1][:, None] == fin[:, a - 1][None, :])
    return w


def term_weights_to_orbit_weights(term_weights, orbits: Sequence[Orbit],
                                  input_size: int, output_size: int) -> np.ndarray:
    """Change of basis from term weights to orbit weights.

    A term covers every orbit whose matching contains the term's matching,
    so the orbit weight is the sum over such terms.
    """
    terms = enumerate_terms(input_size, output_size)
    term_weights = np.asarray(term_weights)
    if len(term_weights) != len(terms):
        raise ShapeMismatchError(f"expected {len(terms)} term weights, got {len(term_weights)}")
    out = np.zeros((len(orbits), *term_weights.shape[1:]), dtype=term_weights.dtype)
    for j, orbit in enumerate(orbits):
        have = set(orbit.pattern.matching)
        for t, term in enumerate(terms):
            if set(term.matching) <= have:
                out[j] += term_weights[t]
    return out


def oracle_apply(orbit_weights, x: FaceVector, orbits: Sequence[Orbit],
                 output_size: int) -> FaceVector:
    """Dense matrix-vector product with ``sum_o w_o * indicator(o)``.

    ``orbit_weights`` has shape ``(n_orbits,)`` or ``(n_orbits, C_in, C_out)``.
    """
    w = np.asarray(orbit_weights)
    if len(w) != len(orbits):
        raise ShapeMismatchError(f"expected {len(orbits)} orbit weights, got {len(w)}")
    if w.ndim == 1:
        w = w[:, None, None]
    shape = (F.face_count(x.n_nodes, output_size, True), len(x.values))
    out = np.zeros((shape[0], w.shape[2]), dtype=np.result_type(w, x.values))
    for weight, orbit in zip(w, orbits):
        out += orbit.indicator(shape) @ x.values @ weight
    return FaceVector(x.n_nodes, output_size, True, out)


def sharing_grid(input_size: int, output_size: int, n_nodes: int) -> tuple[np.ndarray, list[Orbit]]:
    """Orbit id of each weight (output face x input face), plus the orbits."""
    orbits = enumerate_orbits_bruteforce(input_size, output_size, n_nodes, allow_underresolved=True)
    shape = (F.face_count(n_nodes, output_size, True), F.face_count(n_nodes, input_size, True))
    return orbit_label_matrix(orbits, shape), orbits


def orbit_count_formula_check(input_size: int, output_size: int, n_nodes: int) -> dict:
    from .equimap import tau

    orbits = enumerate_orbits_bruteforce(input_size, output_size, n_nodes, allow_underresolved=True)
    expected = tau(input_size, output_size)
    return {"M": input_size, "M_prime": output_size, "N": n_nodes,
            "orbit_count": len(orbits), "tau": expected,
            "resolved": n_nodes >= input_size + output_size,
            "match": len(orbits) == expected}

