"""Equivariant linear maps between face-vectors built from pool and broadcast.

Every linear map from size-M to size-M' directed face-vectors that commutes
with relabelling the nodes is a weighted sum of ``broadcast(pool(x, P), B)``
terms: pool the input positions in P, then place each surviving position at
the output position named by B and replicate along the rest. A layer on
incidence tensors decomposes input and output into face-vectors and applies
one such map per (input copy, output copy) pair, with channels mixed by a
weight matrix per term.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import faces as F
from .errors import IncitensorError, InvalidSignatureError, ShapeMismatchError
from .tensors import (
    ConstraintSet,
    Dim,
    FaceVector,
    IncidenceTensor,
    as_dims,
    constraint_mask,
    decompose,
    multiplicities,
    reassemble,
)

AGGREGATORS = ("sum", "mean", "max")

OrbitKey = tuple[int, int]  # (face_size, copy)


def _check_agg(agg: str) -> str:
    if agg not in AGGREGATORS:
        raise ValueError(f"aggregator must be one of {AGGREGATORS}, got {agg!r}")
    return agg


# -- primitives ---------------------------------------------------------------

def pool(x: FaceVector, pooled: Iterable[int], agg: str = "sum") -> FaceVector:
    """Aggregate ``x`` over the node positions in ``pooled`` (1-based).

    The result is indexed by the surviving positions in their original
    order. Only injective completions exist in a face-vector, so the
    aggregate at a surviving face runs over all ways to fill the pooled
    positions with nodes distinct from it and from each other.
    """
    _check_agg(agg)
    if not x.directed:
        raise ShapeMismatchError("pool expects a directed face-vector")
    pooled = sorted(set(pooled))
    if any(p < 1 or p > x.face_size for p in pooled):
        raise ShapeMismatchError(f"pooled positions {pooled} out of range for face size {x.face_size}")
    if not pooled:
        return x
    keep = [i for i in range(x.face_size) if i + 1 not in pooled]
    size = len(keep)
    target = F.lookup_indices(x.faces[:, keep], x.n_nodes, True)
    count = F.face_count(x.n_nodes, size, True)
    if agg == "sum":
        out = np.zeros((count, x.channels), dtype=x.values.dtype)
        np.add.at(out, target, x.values)
        return FaceVector(x.n_nodes, size, True, out)
    hits = np.bincount(target, minlength=count)
    if np.any(hits == 0):
        raise ShapeMismatchError(f"{agg} over an empty set of completions")
    if agg == "mean":
        out = np.zeros((count, x.channels), dtype=np.float64)
        np.add.at(out, target, x.values)
        out /= hits[:, None]
    else:
        out = np.full((count, x.channels), -np.inf)
        np.maximum.at(out, target, x.values)
        if np.issubdtype(x.values.dtype, np.integer):
            out = out.astype(x.values.dtype)
    return FaceVector(x.n_nodes, size, True, out)


def broadcast(x: FaceVector, placement: Sequence[int], target_size: int) -> FaceVector:
    """Place position j of ``x`` at output position ``placement[j]`` and
    replicate over the remaining output positions."""
    if not x.directed:
        raise ShapeMismatchError("broadcast expects a directed face-vector")
    placement = tuple(int(b) for b in placement)
    if len(placement) != x.face_size:
        raise ShapeMismatchError(f"placement {placement} must have length {x.face_size}")
    if len(set(placement)) != len(placement) or any(b < 1 or b > target_size for b in placement):
        raise ShapeMismatchError(f"placement {placement} is not injective into [1, {target_size}]")
    out_faces = F.face_array(x.n_nodes, target_size, True)
    if x.face_size == 0:
        src = np.zeros(len(out_faces), dtype=np.int64)
    else:
        src = F.lookup_indices(out_faces[:, [b - 1 for b in placement]], x.n_nodes, True)
    return FaceVector(x.n_nodes, target_size, True, x.values[src])


_KEY_RE = re.compile(r"^P=\{([0-9,\s]*)\};B=\(([0-9,\s]*)\)$")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


@dataclass(frozen=True, order=True)
class PoolBroadcastTerm:
    input_size: int
    output_size: int
    pooled: tuple[int, ...]
    placement: tuple[int, ...]

    def __post_init__(self):
        pooled = tuple(sorted(self.pooled))
        placement = tuple(self.placement)
        object.__setattr__(self, "pooled", pooled)
        object.__setattr__(self, "placement", placement)
        if len(set(pooled)) != len(pooled) or any(p < 1 or p > self.input_size for p in pooled):
            raise InvalidSignatureError(f"pooled set {pooled} is not a subset of [1, {self.input_size}]")
        if len(set(placement)) != len(placement) or any(b < 1 or b > self.output_size for b in placement):
            raise InvalidSignatureError(f"placement {placement} is not injective into [1, {self.output_size}]")
        if len(placement) != self.input_size - len(pooled):
            raise InvalidSignatureError("placement length must equal the number of surviving positions")

    @property
    def key(self) -> str:
        return "P={%s};B=(%s)" % (",".join(map(str, self.pooled)), ",".join(map(str, self.placement)))

    @property
    def matching(self) -> tuple[tuple[int, int], ...]:
        """(input position, output position) pairs tied by this term."""
        kept = [i for i in range(1, self.input_size + 1) if i not in self.pooled]
        return tuple(zip(kept, self.placement))

    @property
    def matched(self) -> int:
        return len(self.placement)

    @classmethod
    def from_key(cls, key: str, input_size: int, output_size: int) -> "PoolBroadcastTerm":
        found = _KEY_RE.match(key.replace(" ", ""))
        if not found:
            raise InvalidSignatureError(f"bad term key {key!r}")
        return cls(input_size, output_size, _ints(found.group(1)), _ints(found.group(2)))


def enumerate_terms(input_size: int, output_size: int) -> list[PoolBroadcastTerm]:
    """All pool-broadcast terms between the two face sizes, in canonical order."""
    terms = []
    for k in range(input_size + 1):
        survivors = input_size - k
        if survivors > output_size:
            continue
        for pooled in itertools.combinations(range(1, input_size + 1), k):
            for placement in itertools.permutations(range(1, output_size + 1), survivors):
                terms.append(PoolBroadcastTerm(input_size, output_size, pooled, placement))
    return terms


def tau(input_size: int, output_size: int) -> int:
    """Number of independent parameters of a map between directed face-vectors."""
    return sum(math.comb(input_size, m) * math.comb(output_size, m) * math.factorial(m)
               for m in range(min(input_size, output_size) + 1))


def tau_symmetric(input_size: int, output_size: int) -> int:
    """Parameter count when input and output face-vectors are symmetric."""
    return min(input_size, output_size) + 1


def symmetric_node_count(order: int) -> int:
    """Sum of ``tau_symmetric(m, m')`` over ``1 <= m, m' <= order``."""
    return sum(tau_symmetric(m, n) for m in range(1, order + 1) for n in range(1, order + 1))


def symmetric_node_count_closed_form(order: int) -> int:
    value, rem = divmod(2 * order ** 3 + 9 * order ** 2 + order, 6)
    assert rem == 0
    return value


def apply_term(term: PoolBroadcastTerm, x: FaceVector, agg: str = "sum") -> FaceVector:
    if x.face_size != term.input_size:
        raise ShapeMismatchError(f"term expects face size {term.input_size}, got {x.face_size}")
    return broadcast(pool(x, term.pooled, agg), term.placement, term.output_size)


# -- signatures and layers ----------------------------------------------------

@dataclass(frozen=True)
class Signature:
    """Orbit content of one side of a layer: ``(face_size, copies)`` and channels.

    ``dims``/``constraints`` are kept when the signature came from an
    incidence tensor so that outputs can be reassembled.
    """

    orbits: tuple[tuple[int, int], ...]
    channels: int = 1
    dims: tuple[Dim, ...] | None = None
    constraints: ConstraintSet | None = None

    def __post_init__(self):
        orbits = tuple(sorted((int(m), int(c)) for m, c in self.orbits if int(c) > 0))
        if len({m for m, _ in orbits}) != len(orbits):
            raise InvalidSignatureError(f"face size listed twice in {orbits}")
        if any(m < 0 for m, _ in orbits):
            raise InvalidSignatureError("face sizes must be >= 0")
        if self.channels < 1:
            raise InvalidSignatureError("channels must be >= 1")
        object.__setattr__(self, "orbits", orbits)
        if self.dims is not None:
            object.__setattr__(self, "dims", as_dims(self.dims))
            object.__setattr__(self, "constraints", ConstraintSet.coerce(self.constraints))

    @classmethod
    def from_dims(cls, dims, constraints=None, channels: int = 1) -> "Signature":
        dims = as_dims(dims)
        constraints = ConstraintSet.coerce(constraints)
        return cls(tuple(multiplicities(dims, constraints).items()), channels, dims, constraints)

    def keys(self) -> list[OrbitKey]:
        return [(m, k) for m, c in self.orbits for k in range(c)]

    def copies(self, m: int) -> int:
        return dict(self.orbits).get(m, 0)

    def compatible(self, other: "Signature") -> bool:
        return self.orbits == other.orbits and self.channels == other.channels

    def to_json(self) -> dict:
        data = {"orbits": [{"m": m, "copies": c} for m, c in self.orbits], "channels": self.channels}
        if self.dims is not None:
            data["dims"] = [{"face_size": d.face_size, "directed": d.directed} for d in self.dims]
            data["constraints"] = self.constraints.to_json()
        return data

    @classmethod
    def from_json(cls, data: Mapping) -> "Signature":
        dims = data.get("dims")
        if "orbits" in data:
            orbits = tuple((int(o["m"]), int(o["copies"])) for o in data["orbits"])
        elif dims is not None:
            orbits = tuple(multiplicities(as_dims(dims), data.get("constraints")).items())
        else:
            raise InvalidSignatureError("signature needs 'orbits' or 'dims'")
        sig = cls(orbits, int(data.get("channels", 1)), dims, data.get("constraints") if dims else None)
        if dims is not None:
            derived = Signature.from_dims(dims, data.get("constraints"), sig.channels)
            if derived.orbits != sig.orbits:
                raise InvalidSignatureError(f"orbits {sig.orbits} disagree with dims (expected {derived.orbits})")
        return sig


def total_parameters(input_sig: Signature, output_sig: Signature, symmetric: bool = False) -> int:
    count = tau_symmetric if symmetric else tau
    total = sum(c_in * c_out * count(m, n)
                for m, c_in in input_sig.orbits for n, c_out in output_sig.orbits)
    return total * input_sig.channels * output_sig.channels


def parameter_breakdown(input_sig: Signature, output_sig: Signature,
                        symmetric: bool = False) -> list[dict]:
    """Per (m, m') rows of the total: multiplicities, per-block count, product."""
    count = tau_symmetric if symmetric else tau
    rows = []
    for m, c_in in input_sig.orbits:
        for n, c_out in output_sig.orbits:
            t = count(m, n)
            rows.append({"m": m, "m_prime": n, "copies_in": c_in, "copies_out": c_out,
                         "tau": t, "subtotal": c_in * c_out * t})
    return rows


def bell_identity_check(order: int) -> tuple[int, int]:
    """Both sides of sum_{m,m'} S(D,m) S(D,m') tau(m,m') = Bell(2D).

    The left side takes the Stirling numbers from the partition enumeration
    of a node^D tensor; the right side comes from the Bell triangle.
    """
    from .oracle import bell

    if not 1 <= order <= 6:
        raise ValueError("order must lie in [1, 6]")
    kappa = multiplicities([1] * order)
    lhs = sum(kappa[m] * kappa[n] * tau(m, n) for m in kappa for n in kappa)
    return lhs, bell(2 * order)


BlockKey = tuple[OrbitKey, OrbitKey]


def _block_key_str(block: BlockKey) -> str:
    (m, k), (n, j) = block
    return f"{k},{m}->{j},{n}"


def _parse_block_key(text: str) -> BlockKey:
    found = re.match(r"^\s*(\d+)\s*,\s*(\d+)\s*->\s*(\d+)\s*,\s*(\d+)\s*$", text)
    if not found:
        raise InvalidSignatureError(f"bad block key {text!r}; expected 'k,m->k',m''")
    k, m, j, n = (int(g) for g in found.groups())
    return (m, k), (n, j)


@dataclass(frozen=True, eq=False)
class EquivariantMap:
    """Weights of a layer: for each (input orbit, output orbit) block an array
    of shape ``(n_terms, in_channels, out_channels)`` in :func:`enumerate_terms`
    order.

    With ``symmetric=True`` the weights inside a block are tied across terms
    with the same number of matched positions.
    """

    input: Signature
    output: Signature
    weights: Mapping[BlockKey, np.ndarray]
    symmetric: bool = False

    def __post_init__(self):
        expected = set(self.blocks())
        if set(self.weights) != expected:
            missing = sorted(expected - set(self.weights))
            extra = sorted(set(self.weights) - expected)
            raise ShapeMismatchError(f"weight blocks mismatch (missing {missing}, unexpected {extra})")
        frozen = {}
        for block in self.blocks():
            (m, _), (n, _) = block
            w = np.array(self.weights[block])
            shape = (tau(m, n), self.input.channels, self.output.channels)
            if w.shape != shape:
                raise ShapeMismatchError(f"block {_block_key_str(block)} has shape {w.shape}, expected {shape}")
            if np.issubdtype(w.dtype, np.floating) and not np.all(np.isfinite(w)):
                raise ShapeMismatchError("weights must be finite")
            if self.symmetric and not _is_tied(w, m, n):
                raise ShapeMismatchError(f"block {_block_key_str(block)} is not tied for a symmetric map")
            w.flags.writeable = False
            frozen[block] = w
        object.__setattr__(self, "weights", frozen)

    def blocks(self) -> list[BlockKey]:
        return [(a, b) for a in self.input.keys() for b in self.output.keys()]

    @property
    def n_parameters(self) -> int:
        return total_parameters(self.input, self.output, self.symmetric)

    @classmethod
    def from_function(cls, input_sig, output_sig, make, symmetric=False):
        weights = {}
        for block in [(a, b) for a in input_sig.keys() for b in output_sig.keys()]:
            (m, _), (n, _) = block
            weights[block] = make(block, (tau(m, n), input_sig.channels, output_sig.channels))
        return cls(input_sig, output_sig, weights, symmetric)

    @classmethod
    def zeros(cls, input_sig, output_sig, dtype=np.int64):
        return cls.from_function(input_sig, output_sig, lambda _, shape: np.zeros(shape, dtype=dtype))

    @classmethod
    def random(cls, input_sig, output_sig, rng=None, integer=False):
        rng = np.random.default_rng(rng)
        if integer:
            return cls.from_function(input_sig, output_sig, lambda _, s: rng.integers(-5, 6, size=s))
        return cls.from_function(input_sig, output_sig, lambda _, s: rng.standard_normal(s))

    @classmethod
    def identity(cls, sig: Signature):
        """Map each orbit copy and channel to itself."""
        def make(block, shape):
            w = np.zeros(shape, dtype=np.int64)
            if block[0] == block[1]:
                w[0] = np.eye(sig.channels, dtype=np.int64)
            return w
        return cls.from_function(sig, sig, make)

    def to_json(self) -> dict:
        weights = {}
        for block, w in self.weights.items():
            (m, _), (n, _) = block
            weights[_block_key_str(block)] = {
                term.key: w[t].tolist() for t, term in enumerate(enumerate_terms(m, n))}
        return {"input": self.input.to_json(), "output": self.output.to_json(),
                "symmetric": self.symmetric, "weights": weights}

    @classmethod
    def from_json(cls, data: Mapping) -> "EquivariantMap":
        try:
            input_sig = Signature.from_json(data["input"])
            output_sig = Signature.from_json(data["output"])
            raw = data.get("weights", {})
        except (KeyError, TypeError) as exc:
            raise IncitensorError(f"malformed layer JSON: {exc}") from exc
        weights = {}
        for key, terms in raw.items():
            block = _parse_block_key(key)
            (m, _), (n, _) = block
            order = {t.key: i for i, t in enumerate(enumerate_terms(m, n))}
            values = [None] * len(order)
            for tkey, w in terms.items():
                term = PoolBroadcastTerm.from_key(tkey, m, n)
                values[order[term.key]] = w
            if any(v is None for v in values):
                raise ShapeMismatchError(f"block {key} does not list every term")
            weights[block] = np.array(values)
        return cls(input_sig, output_sig, weights, bool(data.get("symmetric", False)))


def _tie_groups(m: int, n: int) -> list[np.ndarray]:
    matched = np.array([t.matched for t in enumerate_terms(m, n)])
    return [np.flatnonzero(matched == j) for j in range(min(m, n) + 1)]


def _is_tied(w: np.ndarray, m: int, n: int) -> bool:
    return all(np.all(w[g] == w[g[0]]) for g in _tie_groups(m, n) if len(g))


def symmetrize_map(layer: EquivariantMap) -> EquivariantMap:
    """Tie weights of terms with equal matched-position count (group mean)."""
    weights = {}
    for block, w in layer.weights.items():
        (m, _), (n, _) = block
        if _is_tied(w, m, n):
            weights[block] = w
            continue
        out = np.array(w, dtype=np.float64)
        for g in _tie_groups(m, n):
            out[g] = out[g].mean(axis=0)
        weights[block] = out
    return EquivariantMap(layer.input, layer.output, weights, symmetric=True)


def _check_parts(layer: EquivariantMap, parts: Mapping[OrbitKey, FaceVector]) -> int:
    if set(parts) != set(layer.input.keys()):
        raise ShapeMismatchError(f"input parts {sorted(parts)} do not match signature {layer.input.keys()}")
    sizes = {fv.n_nodes for fv in parts.values()}
    if len(sizes) != 1:
        raise ShapeMismatchError(f"input parts disagree on n_nodes: {sorted(sizes)}")
    for (m, _), fv in parts.items():
        if fv.face_size != m or not fv.directed or fv.channels != layer.input.channels:
            raise ShapeMismatchError(f"part ({m}, ...) has the wrong face size, direction or channels")
    return sizes.pop()


def apply_map(layer: EquivariantMap, parts: Mapping[OrbitKey, FaceVector],
              agg: str = "sum") -> dict[OrbitKey, FaceVector]:
    """Apply a layer to face-vectors keyed by ``(face_size, copy)``."""
    _check_agg(agg)
    n_nodes = _check_parts(layer, parts) if layer.input.keys() else None
    if n_nodes is None:
        raise ShapeMismatchError("cannot apply a layer without input orbits")
    out: dict[OrbitKey, np.ndarray] = {}
    dtype = np.result_type(*(fv.values.dtype for fv in parts.values()),
                           *(w.dtype for w in layer.weights.values()))
    if agg == "mean":
        dtype = np.result_type(dtype, np.float64)
    for key in layer.output.keys():
        out[key] = np.zeros((F.face_count(n_nodes, key[0], True), layer.output.channels), dtype=dtype)
    for in_key in layer.input.keys():
        x = parts[in_key]
        for n in sorted({k[0] for k in layer.output.keys()}):
            stacked = np.stack([apply_term(t, x, agg).values for t in enumerate_terms(in_key[0], n)])
            for out_key in layer.output.keys():
                if out_key[0] != n:
                    continue
                w = layer.weights[(in_key, out_key)]
                out[out_key] += np.einsum("tfc,tcd->fd", stacked, w)
    return {k: FaceVector(n_nodes, k[0], True, v) for k, v in out.items()}


def apply_masked(layer: EquivariantMap, parts: Mapping[OrbitKey, FaceVector],
                 masks: Mapping[OrbitKey, np.ndarray], agg: str = "sum") -> dict[OrbitKey, FaceVector]:
    """Layer output multiplied entrywise by a 0/1 mask per output orbit."""
    out = apply_map(layer, parts, agg)
    if set(masks) != set(out):
        raise ShapeMismatchError(f"mask keys {sorted(masks)} do not match outputs {sorted(out)}")
    result = {}
    for key, fv in out.items():
        mask = _check_mask(masks[key], fv.values.shape)
        result[key] = fv.with_values(fv.values * mask)
    return result


def _check_mask(mask, shape) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.shape == shape[:-1]:
        mask = mask[..., None]
    if mask.shape != shape and mask.shape != (*shape[:-1], 1):
        raise ShapeMismatchError(f"mask shape {mask.shape} does not match output {shape}")
    if not np.all((mask == 0) | (mask == 1)):
        raise ShapeMismatchError("mask entries must be 0 or 1")
    return mask.astype(np.int64)


# -- layers on incidence tensors ----------------------------------------------

def input_sparsity_mask(t: IncidenceTensor) -> np.ndarray:
    """1 where any channel of the input is nonzero."""
    return np.any(t.values != 0, axis=-1)


def apply_layer(layer: EquivariantMap, t: IncidenceTensor, output_dims=None,
                output_constraints=None, agg: str = "sum", mask=None) -> IncidenceTensor:
    """Decompose ``t``, apply the layer orbit-wise and reassemble the output.

    ``mask`` (output tensor shape, optional trailing channel axis) is applied
    after the linear map; pass :func:`input_sparsity_mask` to keep the input's
    zeros when input and output shapes agree.
    """
    in_sig = Signature.from_dims(t.dims, t.constraints, t.channels)
    if not in_sig.compatible(layer.input):
        raise ShapeMismatchError(f"tensor orbits {in_sig.orbits}x{in_sig.channels} do not match the layer input")
    if output_dims is None:
        if layer.output.dims is None:
            raise ShapeMismatchError("layer output has no dims; pass output_dims")
        output_dims, output_constraints = layer.output.dims, layer.output.constraints
    out_sig = Signature.from_dims(output_dims, output_constraints, layer.output.channels)
    if not out_sig.compatible(layer.output):
        raise ShapeMismatchError(f"output dims give orbits {out_sig.orbits}, layer has {layer.output.orbits}")
    parts = decompose(t).by_key()
    out = apply_map(layer, parts, agg)
    result = reassemble(out, out_sig.dims, out_sig.constraints, n_nodes=t.n_nodes)
    if mask is None:
        return result
    mask = _check_mask(mask, result.values.shape)
    return result.with_values(result.values * mask)


# -- relaxed symmetry ---------------------------------------------------------

def relaxed_subsets(order: int) -> list[tuple[int, ...]]:
    """Subsets of the tensor axes (1-based), by size then lexicographically."""
    return [c for k in range(order + 1) for c in itertools.combinations(range(1, order + 1), k)]


def relaxed_map(values: np.ndarray, weights, agg: str = "sum") -> np.ndarray:
    """Pool-and-broadcast whole axes of ``values`` (last axis = channels).

    ``weights`` has shape ``(2**D, in_channels, out_channels)``, or ``(2**D,)``
    for a single channel, in :func:`relaxed_subsets` order.
    """
    _check_agg(agg)
    values = np.asarray(values)
    order = values.ndim - 1
    weights = np.asarray(weights)
    if weights.ndim == 1:
        weights = weights[:, None, None]
    if weights.shape[0] != 2 ** order or weights.shape[1] != values.shape[-1]:
        raise ShapeMismatchError(f"relaxed weights need shape (2**{order}, {values.shape[-1]}, C_out), got {weights.shape}")
    reduce = {"sum": np.sum, "mean": np.mean, "max": np.max}[agg]
    out = None
    for w, subset in zip(weights, relaxed_subsets(order)):
        axes = tuple(a - 1 for a in subset)
        pooled = reduce(values, axis=axes, keepdims=True) if axes else values
        term = np.einsum("...c,cd->...d", np.broadcast_to(pooled, values.shape), w)
        out = term if out is None else out + term
    return out


def apply_relaxed(t: IncidenceTensor, weights, agg: str = "sum", mask=None) -> IncidenceTensor:
    """Layer equivariant to independent permutations of each axis' face list.

    The dense output generally fills constraint-forbidden entries, so it
    carries no constraints unless a ``mask`` zeroes them again.
    """
    out = relaxed_map(t.values, weights, agg)
    if mask is not None:
        out = out * _check_mask(mask, out.shape)
    allowed = constraint_mask(t.n_nodes, t.dims, t.constraints)
    keep = t.constraints if not np.any(out[~allowed]) else ConstraintSet()
    return IncidenceTensor(t.n_nodes, t.dims, keep, out)


def load_layer(path) -> EquivariantMap:
    with open(path) as fh:
        return EquivariantMap.from_json(json.load(fh))
