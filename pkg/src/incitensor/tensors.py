"""Face-vectors, constrained incidence tensors and their orbit decomposition.

An incidence tensor has one axis per face dimension plus a trailing channel
axis. Its constraint set lists groups of node positions ``(d, i)`` (both
1-based: dimension d, position i inside that dimension's face) which must
hold the same node for an entry to be nonzero. An undirected dimension
satisfies a constraint when *some* ordering of its face does, so the
node-edge matrix is ``dims=[(1, False), (2, False)]`` with the single group
``{(1, 1), (2, 1)}``.

Under simultaneous relabelling of nodes the entries split into orbits, one
per admissible equality pattern of the node positions. Each orbit is a copy
of a directed face-vector; :func:`decompose` and :func:`reassemble` convert
between the two views.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import faces as F
from .errors import (
    InconsistentDecompositionError,
    IncitensorError,
    InfeasibleConstraintsError,
    InvalidFaceError,
    InvalidSignatureError,
    ShapeMismatchError,
)

Position = tuple[int, int]
Partition = tuple[tuple[Position, ...], ...]


class Dim(NamedTuple):
    face_size: int
    directed: bool = False


def as_dims(dims: Iterable) -> tuple[Dim, ...]:
    out = []
    for d in dims:
        if isinstance(d, Dim):
            out.append(d)
        elif isinstance(d, Mapping):
            out.append(Dim(int(d["face_size"]), bool(d.get("directed", False))))
        elif isinstance(d, int):
            out.append(Dim(d, False))
        else:
            out.append(Dim(int(d[0]), bool(d[1])))
    if not out:
        raise InvalidSignatureError("an incidence tensor needs at least one dimension")
    for d in out:
        if d.face_size < 1:
            raise InvalidSignatureError(f"face size must be >= 1, got {d.face_size}")
    return tuple(out)


def _positions(dims: Sequence[Dim]) -> list[Position]:
    return [(d, i) for d, dim in enumerate(dims, start=1) for i in range(1, dim.face_size + 1)]


@dataclass(frozen=True)
class ConstraintSet:
    """Disjoint groups of node positions forced to be equal."""

    groups: tuple[tuple[Position, ...], ...] = ()

    def __post_init__(self):
        groups = []
        seen: set[Position] = set()
        for g in self.groups:
            g = tuple(sorted({(int(d), int(i)) for d, i in g}))
            if len(g) < 2:
                continue
            if seen.intersection(g):
                raise InvalidSignatureError(f"constraint groups overlap at {sorted(seen.intersection(g))}")
            seen.update(g)
            groups.append(g)
        object.__setattr__(self, "groups", tuple(sorted(groups)))

    @classmethod
    def coerce(cls, constraints) -> "ConstraintSet":
        if constraints is None:
            return cls()
        if isinstance(constraints, ConstraintSet):
            return constraints
        return cls(tuple(tuple(tuple(p) for p in g) for g in constraints))

    def validate(self, dims: Sequence[Dim]) -> None:
        valid = set(_positions(dims))
        for g in self.groups:
            bad = [p for p in g if p not in valid]
            if bad:
                raise InvalidSignatureError(f"constraint positions {bad} do not exist")
            counts = Counter(d for d, _ in g)
            if any(c > 1 for c in counts.values()):
                raise InfeasibleConstraintsError(
                    f"group {g} equates two positions of the same face")

    def to_json(self) -> list:
        return [[list(p) for p in g] for g in self.groups]

    def __bool__(self) -> bool:
        return bool(self.groups)


def _normalize(dims, constraints) -> tuple[tuple[Dim, ...], ConstraintSet]:
    dims = as_dims(dims)
    constraints = ConstraintSet.coerce(constraints)
    constraints.validate(dims)
    return dims, constraints


# -- set partitions ---------------------------------------------------------

@lru_cache(maxsize=None)
def _partitions(dims: tuple[Dim, ...], constraints: ConstraintSet) -> tuple[Partition, ...]:
    positions = _positions(dims)
    grouped = {p for g in constraints.groups for p in g}
    units = [tuple(g) for g in constraints.groups] + [(p,) for p in positions if p not in grouped]
    units.sort(key=lambda u: u[0])
    unit_dims = [frozenset(d for d, _ in u) for u in units]

    result: list[Partition] = []
    blocks: list[list[int]] = []
    block_dims: list[set[int]] = []

    def extend(k: int) -> None:
        if k == len(units):
            parts = tuple(tuple(sorted(p for u in b for p in units[u])) for b in blocks)
            result.append(parts)
            return
        for b, bd in zip(blocks, block_dims):
            if bd.isdisjoint(unit_dims[k]):
                b.append(k)
                bd.update(unit_dims[k])
                extend(k + 1)
                b.pop()
                bd.difference_update(unit_dims[k])
        blocks.append([k])
        block_dims.append(set(unit_dims[k]))
        extend(k + 1)
        blocks.pop()
        block_dims.pop()

    extend(0)
    return tuple(result)


def enumerate_valid_partitions(dims, constraints=None) -> list[Partition]:
    """Admissible equality patterns of the node positions of ``dims``.

    Positions of one face land in different blocks and every constraint group
    lands inside a single block. Blocks are ordered by their smallest
    position; partitions come in restricted-growth-string order.
    """
    dims, constraints = _normalize(dims, constraints)
    return list(_partitions(dims, constraints))


def multiplicity(dims, constraints=None, m: int = 1) -> int:
    """Number of size-``m`` face-vectors in the orbit decomposition."""
    if m < 1:
        raise InvalidSignatureError("face size m must be >= 1")
    return sum(1 for p in enumerate_valid_partitions(dims, constraints) if len(p) == m)


def multiplicities(dims, constraints=None) -> dict[int, int]:
    counts = Counter(len(p) for p in enumerate_valid_partitions(dims, constraints))
    return dict(sorted(counts.items()))


# -- face-vectors -----------------------------------------------------------

def _check_values(values, shape_head: tuple[int, ...], what: str) -> np.ndarray:
    arr = np.array(values)
    if arr.dtype == bool:
        arr = arr.astype(np.int64)
    if not (np.issubdtype(arr.dtype, np.integer) or np.issubdtype(arr.dtype, np.floating)):
        raise ShapeMismatchError(f"{what} values must be real numbers, got dtype {arr.dtype}")
    if arr.ndim == len(shape_head):
        arr = arr[..., None]
    if arr.shape[:-1] != shape_head or arr.ndim != len(shape_head) + 1:
        raise ShapeMismatchError(f"{what} values have shape {arr.shape}, expected {shape_head} + (channels,)")
    if arr.shape[-1] < 1:
        raise ShapeMismatchError(f"{what} needs at least one channel")
    if np.issubdtype(arr.dtype, np.floating) and not np.all(np.isfinite(arr)):
        raise ShapeMismatchError(f"{what} values must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FaceVector:
    """Values over all faces of one size, shape ``(face_count, channels)``."""

    n_nodes: int
    face_size: int
    directed: bool
    values: np.ndarray

    def __post_init__(self):
        count = F.face_count(self.n_nodes, self.face_size, self.directed)
        object.__setattr__(self, "values", _check_values(self.values, (count,), "face-vector"))

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @property
    def faces(self) -> np.ndarray:
        return F.face_array(self.n_nodes, self.face_size, self.directed)

    @classmethod
    def zeros(cls, n_nodes, face_size, directed=True, channels=1, dtype=np.int64):
        count = F.face_count(n_nodes, face_size, directed)
        return cls(n_nodes, face_size, directed, np.zeros((count, channels), dtype=dtype))

    def with_values(self, values) -> "FaceVector":
        return FaceVector(self.n_nodes, self.face_size, self.directed, values)

    def __eq__(self, other):
        if not isinstance(other, FaceVector):
            return NotImplemented
        return (self.n_nodes, self.face_size, self.directed) == (other.n_nodes, other.face_size, other.directed) \
            and np.array_equal(self.values, other.values)

    __hash__ = None


def permute_face_vector(x: FaceVector, perm: Sequence[int]) -> FaceVector:
    perm = F.check_permutation(perm, x.n_nodes)
    target = F.face_permutation(x.n_nodes, x.face_size, x.directed, perm)
    out = np.empty_like(x.values)
    out[target] = x.values
    return x.with_values(out)


def symmetric_cover(x: FaceVector) -> FaceVector:
    """Directed face-vector with every ordering of a face carrying its value."""
    if x.directed:
        return x
    faces = F.face_array(x.n_nodes, x.face_size, True)
    src = F.lookup_indices(faces, x.n_nodes, directed=False) if x.face_size else np.zeros(len(faces), dtype=np.int64)
    return FaceVector(x.n_nodes, x.face_size, True, x.values[src])


def is_argwise_symmetric(x: FaceVector, atol: float = 0.0) -> bool:
    """True when a directed face-vector is invariant under reordering each face."""
    if not x.directed or x.face_size < 2:
        return True
    faces = F.face_array(x.n_nodes, x.face_size, True)
    canon = F.lookup_indices(np.sort(faces, axis=1), x.n_nodes, True)
    return bool(np.all(np.abs(x.values - x.values[canon]) <= atol))


# -- incidence tensors ------------------------------------------------------

class _Plan(NamedTuple):
    partitions: tuple[Partition, ...]
    entries: tuple[np.ndarray, ...]    # flat entry index per directed face of each partition
    canonical: tuple[np.ndarray, ...]  # whether that face is the entry's chosen representative
    allowed: np.ndarray                # flat boolean mask of constraint-admissible entries


@lru_cache(maxsize=256)
def _plan(n_nodes: int, dims: tuple[Dim, ...], constraints: ConstraintSet) -> _Plan:
    shape = tuple(F.face_count(n_nodes, d.face_size, d.directed) for d in dims)
    size = int(np.prod(shape))
    parts = _partitions(dims, constraints)
    entries, codes = [], []
    for part in parts:
        block_of = {p: j for j, block in enumerate(part) for p in block}
        nodes = F.face_array(n_nodes, len(part), True)
        idx = []
        for d, dim in enumerate(dims, start=1):
            cols = [block_of[(d, i)] for i in range(1, dim.face_size + 1)]
            idx.append(F.lookup_indices(nodes[:, cols], n_nodes, dim.directed))
        flat = np.ravel_multi_index(idx, shape) if len(nodes) else np.zeros(0, dtype=np.int64)
        entries.append(np.asarray(flat, dtype=np.int64))
        order = [block_of[p] for p in _positions(dims)]
        weights = n_nodes ** np.arange(len(order) - 1, -1, -1, dtype=np.int64)
        codes.append((nodes[:, order] - 1) @ weights if len(nodes) else np.zeros(0, dtype=np.int64))
    all_entries = np.concatenate(entries) if entries else np.zeros(0, dtype=np.int64)
    all_codes = np.concatenate(codes) if codes else np.zeros(0, dtype=np.int64)
    # representative of an entry: the node assignment with the smallest code
    best = np.full(size, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(best, all_entries, all_codes)
    canonical = tuple(best[e] == c for e, c in zip(entries, codes))
    allowed = np.zeros(size, dtype=bool)
    allowed[all_entries] = True
    for arr in (*entries, *canonical, allowed):
        arr.flags.writeable = False
    return _Plan(parts, tuple(entries), canonical, allowed)


def tensor_shape(n_nodes: int, dims) -> tuple[int, ...]:
    return tuple(F.face_count(n_nodes, d.face_size, d.directed) for d in as_dims(dims))


def constraint_mask(n_nodes: int, dims, constraints=None) -> np.ndarray:
    """Boolean array marking entries whose faces can satisfy the constraints."""
    dims, constraints = _normalize(dims, constraints)
    return _plan(n_nodes, dims, constraints).allowed.reshape(tensor_shape(n_nodes, dims))


@dataclass(frozen=True, eq=False)
class IncidenceTensor:
    n_nodes: int
    dims: tuple[Dim, ...]
    constraints: ConstraintSet
    values: np.ndarray

    def __post_init__(self):
        dims, constraints = _normalize(self.dims, self.constraints)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "constraints", constraints)
        if self.n_nodes < 1:
            raise InvalidSignatureError("n_nodes must be >= 1")
        for d in dims:
            if d.face_size > self.n_nodes:
                raise InvalidSignatureError(f"face size {d.face_size} exceeds {self.n_nodes} nodes")
        values = _check_values(self.values, tensor_shape(self.n_nodes, dims), "incidence tensor")
        allowed = constraint_mask(self.n_nodes, dims, constraints)
        if np.any(values[~allowed]):
            raise ShapeMismatchError("nonzero entries violate the constraint set")
        object.__setattr__(self, "values", values)

    @property
    def channels(self) -> int:
        return self.values.shape[-1]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape[:-1]

    @classmethod
    def zeros(cls, n_nodes, dims, constraints=None, channels=1, dtype=np.int64):
        shape = tensor_shape(n_nodes, dims)
        return cls(n_nodes, dims, constraints, np.zeros((*shape, channels), dtype=dtype))

    @classmethod
    def random(cls, n_nodes, dims, constraints=None, channels=1, rng=None, integer=True):
        rng = np.random.default_rng(rng)
        dims, constraints = _normalize(dims, constraints)
        shape = tensor_shape(n_nodes, dims)
        if integer:
            vals = rng.integers(-9, 10, size=(*shape, channels))
        else:
            vals = rng.standard_normal((*shape, channels))
        vals = vals * constraint_mask(n_nodes, dims, constraints)[..., None]
        return cls(n_nodes, dims, constraints, vals)

    def with_values(self, values) -> "IncidenceTensor":
        return IncidenceTensor(self.n_nodes, self.dims, self.constraints, values)

    def __eq__(self, other):
        if not isinstance(other, IncidenceTensor):
            return NotImplemented
        return (self.n_nodes, self.dims, self.constraints) == (other.n_nodes, other.dims, other.constraints) \
            and np.array_equal(self.values, other.values)

    __hash__ = None


def permute_tensor(t: IncidenceTensor, perm: Sequence[int]) -> IncidenceTensor:
    """Relabel nodes: the entry at ``(pi.f_1, ..., pi.f_D)`` takes the value at ``(f_1, ..., f_D)``."""
    perm = F.check_permutation(perm, t.n_nodes)
    targets = [F.face_permutation(t.n_nodes, d.face_size, d.directed, perm) for d in t.dims]
    out = np.empty_like(t.values)
    out[np.ix_(*targets)] = t.values
    return t.with_values(out)


# -- orbit decomposition ----------------------------------------------------

@dataclass(frozen=True, eq=False)
class OrbitPart:
    face_size: int
    copy: int
    partition: Partition
    face_vector: FaceVector


@dataclass(frozen=True, eq=False)
class OrbitDecomposition:
    n_nodes: int
    parts: tuple[OrbitPart, ...] = field(default_factory=tuple)

    def by_key(self) -> dict[tuple[int, int], FaceVector]:
        """Face-vectors keyed by ``(face_size, copy)``."""
        return {(p.face_size, p.copy): p.face_vector for p in self.parts}

    def multiplicities(self) -> dict[int, int]:
        return dict(sorted(Counter(p.face_size for p in self.parts).items()))


def orbit_keys(dims, constraints=None) -> list[tuple[int, int, Partition]]:
    """``(face_size, copy, partition)`` for each orbit; copies count up per size."""
    seen: Counter = Counter()
    keys = []
    for part in enumerate_valid_partitions(dims, constraints):
        m = len(part)
        keys.append((m, seen[m], part))
        seen[m] += 1
    return keys


def decompose(t: IncidenceTensor) -> OrbitDecomposition:
    plan = _plan(t.n_nodes, t.dims, t.constraints)
    flat = t.values.reshape(-1, t.channels)
    parts = []
    for (m, k, part), entries in zip(orbit_keys(t.dims, t.constraints), plan.entries):
        fv = FaceVector(t.n_nodes, m, True, flat[entries])
        parts.append(OrbitPart(m, k, part, fv))
    return OrbitDecomposition(t.n_nodes, tuple(parts))


def reassemble(decomposition: OrbitDecomposition | Mapping[tuple[int, int], FaceVector],
               dims, constraints=None, n_nodes: int | None = None) -> IncidenceTensor:
    """Inverse of :func:`decompose`.

    Accepts an :class:`OrbitDecomposition` or a mapping ``(face_size, copy) ->
    FaceVector``. Entries of undirected dimensions are read from one fixed
    representative node assignment, so a decomposition of an actual tensor
    round-trips exactly.
    """
    dims, constraints = _normalize(dims, constraints)
    if isinstance(decomposition, OrbitDecomposition):
        n_nodes = decomposition.n_nodes if n_nodes is None else n_nodes
        given = decomposition.by_key()
    else:
        given = dict(decomposition)
        if n_nodes is None:
            if not given:
                raise InconsistentDecompositionError("cannot infer n_nodes from an empty decomposition")
            n_nodes = next(iter(given.values())).n_nodes
    keys = orbit_keys(dims, constraints)
    if set(given) != {(m, k) for m, k, _ in keys}:
        raise InconsistentDecompositionError(
            f"parts {sorted(given)} do not match orbits {[(m, k) for m, k, _ in keys]}")
    channels = {fv.channels for fv in given.values()}
    if len(channels) != 1:
        raise InconsistentDecompositionError(f"parts disagree on channel count: {sorted(channels)}")
    (channels,) = channels
    plan = _plan(n_nodes, dims, constraints)
    shape = tensor_shape(n_nodes, dims)
    dtype = np.result_type(*(fv.values.dtype for fv in given.values()))
    out = np.zeros((int(np.prod(shape)), channels), dtype=dtype)
    for (m, k, _), entries, canon in zip(keys, plan.entries, plan.canonical):
        fv = given[(m, k)]
        if fv.n_nodes != n_nodes or fv.face_size != m or not fv.directed:
            raise InconsistentDecompositionError(f"part ({m}, {k}) has the wrong face signature")
        out[entries[canon]] = fv.values[canon]
    return IncidenceTensor(n_nodes, dims, constraints, out.reshape(*shape, channels))


def densify(faces_present: Mapping[int, Iterable[Sequence[int]]], n_nodes: int, dims,
            constraints=None) -> tuple[IncidenceTensor, np.ndarray]:
    """Complete a partial incidence structure with every face of each size.

    Returns the 0/1 indicator tensor and its boolean mask: an entry is 1 when
    each of its faces is listed in ``faces_present`` (keyed by face size) and
    the entry satisfies the constraints.
    """
    dims, constraints = _normalize(dims, constraints)
    shape = tensor_shape(n_nodes, dims)
    present = {}
    for size, listed in faces_present.items():
        present[int(size)] = list(listed)
    axes = []
    for dim in dims:
        keep = np.zeros(F.face_count(n_nodes, dim.face_size, dim.directed), dtype=bool)
        for face in present.get(dim.face_size, []):
            face = F.check_face(face, n_nodes)
            if len(face) != dim.face_size:
                raise InvalidFaceError(f"face {face} listed under size {dim.face_size}")
            keep[F.face_to_index(face, n_nodes, dim.directed)] = True
        axes.append(keep)
    mask = np.ones(shape, dtype=bool)
    for d, keep in enumerate(axes):
        view = [None] * len(shape)
        view[d] = slice(None)
        mask = mask & keep[tuple(view)]
    mask &= constraint_mask(n_nodes, dims, constraints)
    return IncidenceTensor(n_nodes, dims, constraints, mask.astype(np.int64)[..., None]), mask


# -- JSON -------------------------------------------------------------------

def _number(v):
    return int(v) if isinstance(v, (np.integer, int)) else float(v)


def tensor_to_json(t: IncidenceTensor) -> dict:
    entries = []
    flat = t.values.reshape(-1, t.channels)
    face_lists = [F.face_array(t.n_nodes, d.face_size, d.directed) for d in t.dims]
    for idx in np.flatnonzero(np.any(flat != 0, axis=1)):
        multi = np.unravel_index(idx, t.shape)
        entries.append({
            "faces": [face_lists[d][j].tolist() for d, j in enumerate(multi)],
            "value": [_number(v) for v in flat[idx]],
        })
    return {
        "n_nodes": t.n_nodes,
        "dims": [{"face_size": d.face_size, "directed": d.directed} for d in t.dims],
        "constraints": t.constraints.to_json(),
        "channels": t.channels,
        "entries": entries,
    }


def tensor_from_json(data: Mapping) -> IncidenceTensor:
    try:
        n = int(data["n_nodes"])
        dims = as_dims(data["dims"])
        constraints = ConstraintSet.coerce(data.get("constraints", []))
        channels = int(data.get("channels", 1))
        raw = data.get("entries", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise IncitensorError(f"malformed tensor JSON: {exc}") from exc
    constraints.validate(dims)
    shape = tensor_shape(n, dims)
    is_int = all(isinstance(v, int) for e in raw for v in _as_list(e.get("value")))
    values = np.zeros((*shape, channels), dtype=np.int64 if is_int else np.float64)
    for entry in raw:
        faces = entry["faces"]
        if len(faces) != len(dims):
            raise ShapeMismatchError(f"entry {entry} has {len(faces)} faces, expected {len(dims)}")
        idx = []
        for face, dim in zip(faces, dims):
            if len(face) != dim.face_size:
                raise ShapeMismatchError(f"face {face} does not have size {dim.face_size}")
            idx.append(F.face_to_index(face, n, dim.directed))
        value = _as_list(entry["value"])
        if len(value) != channels:
            raise ShapeMismatchError(f"entry {entry} has {len(value)} channels, expected {channels}")
        values[tuple(idx)] = value
    return IncidenceTensor(n, dims, constraints, values)


def _as_list(v):
    return v if isinstance(v, list) else [v]


def load_tensor(path) -> IncidenceTensor:
    with open(path) as fh:
        return tensor_from_json(json.load(fh))
