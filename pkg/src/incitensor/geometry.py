"""Simplicial complexes and graded posets as incidence tensors."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import faces as F
from .errors import IncitensorError, InvalidFaceError, UnsupportedIrregularError, UnsupportedRuleError
from .tensors import ConstraintSet, Dim, IncidenceTensor


@dataclass(frozen=True)
class SimplicialComplex:
    n_nodes: int
    faces: Mapping[int, tuple[F.Face, ...]]
    directed: bool = False

    @property
    def counts(self) -> dict[int, int]:
        return {m: len(fs) for m, fs in sorted(self.faces.items())}

    @property
    def dimension(self) -> int:
        return max(self.faces, default=0) - 1

    def all_faces(self) -> list[F.Face]:
        return [f for m in sorted(self.faces) for f in self.faces[m]]

    def __contains__(self, face) -> bool:
        face = F.canonical_face(face, self.directed)
        return face in self.faces.get(len(face), ())


def closure(facets: Iterable[Sequence[int]], n_nodes: int, directed: bool = False) -> SimplicialComplex:
    """Smallest complex containing ``facets``: all nonempty subsets (or
    order-preserving subsequences when directed)."""
    found: dict[int, set] = {}
    for facet in facets:
        facet = F.canonical_face(F.check_face(facet, n_nodes), directed)
        for k in range(1, len(facet) + 1):
            found.setdefault(k, set()).update(itertools.combinations(facet, k))
    return SimplicialComplex(n_nodes, {k: tuple(sorted(v)) for k, v in sorted(found.items())}, directed)


def _present(c: SimplicialComplex, size: int) -> np.ndarray:
    keep = np.zeros(F.face_count(c.n_nodes, size, c.directed), dtype=bool)
    for face in c.faces.get(size, ()):
        keep[F.face_to_index(face, c.n_nodes, c.directed)] = True
    return keep


def _contains(small: Sequence[int], big: Sequence[int], directed: bool) -> bool:
    if not directed:
        return set(small) <= set(big)
    it = iter(big)
    return all(v in it for v in small)


def incidence_from_complex(c: SimplicialComplex, row_size: int, col_size: int,
                           shared_size: int | None = None) -> tuple[IncidenceTensor, np.ndarray]:
    """Densified incidence between faces of two sizes, with the mask of incident present pairs.

    Different sizes are incident when one face contains the other. Equal
    sizes are incident when the two distinct faces share a present face of
    ``shared_size`` nodes (default one less than their size).
    """
    n = c.n_nodes
    if not 1 <= row_size <= n or not 1 <= col_size <= n:
        raise UnsupportedRuleError(f"face sizes must lie in [1, {n}]")
    rows = F.face_array(n, row_size, c.directed)
    cols = F.face_array(n, col_size, c.directed)
    if row_size != col_size:
        small_first = row_size < col_size
        def related(r, q):
            return _contains(r, q, c.directed) if small_first else _contains(q, r, c.directed)
        k = min(row_size, col_size)
    else:
        k = row_size - 1 if shared_size is None else shared_size
        if not 1 <= k < row_size:
            raise UnsupportedRuleError(f"shared face size must lie in [1, {row_size - 1}], got {k}")
        shared = set(c.faces.get(k, ()))
        def related(r, q):
            if tuple(r) == tuple(q):
                return False
            return any(F.canonical_face(s, c.directed) in shared
                       for s in itertools.combinations(r, k) if _contains(s, q, c.directed))
    mask = np.zeros((len(rows), len(cols)), dtype=bool)
    rp, cp = _present(c, row_size), _present(c, col_size)
    for a in np.flatnonzero(rp):
        for b in np.flatnonzero(cp):
            mask[a, b] = related(rows[a].tolist(), cols[b].tolist())
    # subset incidence pins k node positions of the row face to k of the column face
    groups = [] if c.directed else [((1, i), (2, i)) for i in range(1, k + 1)]
    dims = (Dim(row_size, c.directed), Dim(col_size, c.directed))
    tensor = IncidenceTensor(n, dims, ConstraintSet(tuple(groups)), mask.astype(np.int64)[..., None])
    return tensor, mask


def complex_from_json(data: Mapping) -> SimplicialComplex:
    try:
        return closure(data["facets"], int(data["n_nodes"]), bool(data.get("directed", False)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, IncitensorError):
            raise
        raise IncitensorError(f"malformed complex JSON: {exc}") from exc


# -- graded posets ------------------------------------------------------------

@dataclass(frozen=True)
class PosetElement:
    id: str
    nodes: tuple[int, ...]
    rank: int


@dataclass(frozen=True)
class GradedPoset:
    elements: tuple[PosetElement, ...]
    order: frozenset[tuple[str, str]]  # (a, b) means a < b

    @classmethod
    def from_covers(cls, elements: Iterable[PosetElement], covers: Iterable[tuple[str, str]]) -> "GradedPoset":
        elements = tuple(elements)
        succ: dict[str, set[str]] = {e.id: set() for e in elements}
        for a, b in covers:
            if a not in succ or b not in succ:
                raise IncitensorError(f"cover ({a}, {b}) names an unknown element")
            succ[a].add(b)
        order = set()
        for start in succ:
            stack, seen = list(succ[start]), set()
            while stack:
                v = stack.pop()
                if v in seen:
                    continue
                seen.add(v)
                order.add((start, v))
                stack.extend(succ[v])
        return cls(elements, frozenset(order))

    def by_id(self) -> dict[str, PosetElement]:
        return {e.id: e for e in self.elements}

    def rank_sizes(self) -> dict[int, int]:
        sizes: dict[int, int] = {}
        for e in self.elements:
            sizes[e.rank] = sizes.get(e.rank, 0) + 1
        return dict(sorted(sizes.items()))

    def covering_pairs(self) -> set[tuple[str, str]]:
        ids = [e.id for e in self.elements]
        return {(a, b) for a, b in self.order
                if not any((a, c) in self.order and (c, b) in self.order for c in ids)}


@dataclass
class PosetReport:
    valid: bool
    violations: list[str] = field(default_factory=list)
    rank_sizes: dict[int, int] = field(default_factory=dict)


def validate_poset(p: GradedPoset) -> PosetReport:
    violations = []
    ids = p.by_id()
    if len(ids) != len(p.elements):
        violations.append("duplicate element ids")
    for a, b in sorted(p.order):
        if a == b:
            violations.append(f"irreflexivity: {a} < {a}")
    for a, b in sorted(p.order):
        for c, d in sorted(p.order):
            if b == c and (a, d) not in p.order:
                violations.append(f"transitivity: {a} < {b} < {d} but not {a} < {d}")
    for a, b in sorted(p.order):
        if a in ids and b in ids and not ids[a].rank < ids[b].rank:
            violations.append(f"rank order: {a} < {b} but rank {ids[a].rank} >= {ids[b].rank}")
    for a, b in sorted(p.covering_pairs()):
        if a in ids and b in ids and a != b and ids[b].rank != ids[a].rank + 1:
            violations.append(f"covering rank: {b} covers {a} but ranks differ by {ids[b].rank - ids[a].rank}")
    return PosetReport(not violations, violations, p.rank_sizes())


def _uniform_size(p: GradedPoset, rank: int) -> tuple[list[PosetElement], int]:
    members = [e for e in p.elements if e.rank == rank]
    if not members:
        raise IncitensorError(f"no elements of rank {rank}")
    sizes = {len(e.nodes) for e in members}
    if len(sizes) != 1:
        raise UnsupportedIrregularError(f"rank {rank} mixes face sizes {sorted(sizes)}")
    return members, sizes.pop()


def incidence_from_poset(p: GradedPoset, rank_a: int, rank_b: int,
                         lower_rank: int | None = None) -> tuple[IncidenceTensor, np.ndarray]:
    """Densified incidence between two ranks; mask 1 where the order relates the elements.

    Equal ranks relate distinct elements covering a common element of
    ``lower_rank`` (default one below).
    """
    rows, size_a = _uniform_size(p, rank_a)
    cols, size_b = _uniform_size(p, rank_b)
    n = max((v for e in p.elements for v in e.nodes), default=0)
    mask = np.zeros((F.face_count(n, size_a, False), F.face_count(n, size_b, False)), dtype=bool)
    if rank_a == rank_b:
        low = rank_a - 1 if lower_rank is None else lower_rank
        below = {e.id: {a for a, b in p.order if b == e.id and p.by_id()[a].rank == low} for e in rows}
    for ea in rows:
        ia = F.face_to_index(ea.nodes, n)
        for eb in cols:
            if rank_a == rank_b:
                hit = ea.id != eb.id and bool(below[ea.id] & below[eb.id])
            else:
                hit = (ea.id, eb.id) in p.order or (eb.id, ea.id) in p.order
            if hit:
                mask[ia, F.face_to_index(eb.nodes, n)] = True
    dims = (Dim(size_a, False), Dim(size_b, False))
    return IncidenceTensor(n, dims, ConstraintSet(), mask.astype(np.int64)[..., None]), mask


def poset_from_json(data: Mapping) -> GradedPoset:
    try:
        elements = [PosetElement(str(e["id"]), tuple(int(v) for v in e["nodes"]), int(e["rank"]))
                    for e in data["elements"]]
        covers = [(str(a), str(b)) for a, b in data.get("covers", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise IncitensorError(f"malformed poset JSON: {exc}") from exc
    for e in elements:
        if len(set(e.nodes)) != len(e.nodes) or any(v < 1 for v in e.nodes):
            raise InvalidFaceError(f"element {e.id} has invalid nodes {e.nodes}")
    return GradedPoset.from_covers(elements, covers)


def load_json(path):
    with open(path) as fh:
        return json.load(fh)
