"""Operator algebra of equivariant maps on undirected graphs.

Node and edge features are stacked into one vector of length
``Q = N + N(N-1)/2`` (nodes 1..N, then edges in lexicographic order). The
operator ``L(m -> m', i)`` pools a size-m face-vector down to size i and
broadcasts it over size-m' faces in every way; there are nine of them for
m, m' in {1, 2}. Claims about products and spans of these operators are
checked numerically on explicit matrices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import faces as F
from .equimap import broadcast, pool
from .errors import ShapeMismatchError, UnsupportedRuleError
from .tensors import FaceVector

RANK_RTOL = 1e-9


class LOperator(NamedTuple):
    source: int
    target: int
    pooled_rank: int

    def __str__(self) -> str:
        return f"L[{self.source}->{self.target}]_{self.pooled_rank}"


NINE_OPERATORS = tuple(
    LOperator(m, n, i) for m in (1, 2) for n in (1, 2) for i in range(min(m, n) + 1))

# a single relaxed node-edge layer misses the partially pooled edge-to-edge map
SINGLE_RELAXED_OPERATORS = tuple(op for op in NINE_OPERATORS if op != LOperator(2, 2, 1))


def _check(op: LOperator) -> LOperator:
    op = LOperator(*op)
    if op not in NINE_OPERATORS:
        raise UnsupportedRuleError(f"{op} is not one of the nine graph operators")
    return op


def feature_size(n_nodes: int) -> int:
    return n_nodes + n_nodes * (n_nodes - 1) // 2


def _offset(size: int, n_nodes: int) -> int:
    return 0 if size == 1 else n_nodes


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    n_nodes: int
    matrix: np.ndarray

    def block(self, source: int, target: int) -> np.ndarray:
        rows = slice(_offset(target, self.n_nodes), _offset(target, self.n_nodes) + F.face_count(self.n_nodes, target, False))
        cols = slice(_offset(source, self.n_nodes), _offset(source, self.n_nodes) + F.face_count(self.n_nodes, source, False))
        return self.matrix[rows, cols]

    def to_csv(self, path) -> None:
        np.savetxt(path, self.matrix, delimiter=",", fmt="%g")


def _l_block(op: LOperator, n_nodes: int) -> np.ndarray:
    m, n, i = op
    # columns: directed covers of the undirected basis faces
    cover = F.face_array(n_nodes, m, True)
    src = F.lookup_indices(cover, n_nodes, False)
    basis = np.zeros((len(cover), F.face_count(n_nodes, m, False)), dtype=np.int64)
    basis[np.arange(len(cover)), src] = 1
    x = FaceVector(n_nodes, m, True, basis)
    pooled = pool(x, range(1, m - i + 1))
    out = np.zeros((F.face_count(n_nodes, n, True), basis.shape[1]), dtype=np.int64)
    for placement in itertools.combinations(range(1, n + 1), i):
        out += broadcast(pooled, placement, n).values
    # undirected output: read each face at its sorted ordering
    rows = F.lookup_indices(F.face_array(n_nodes, n, False), n_nodes, True)
    return out[rows]


def build_L(op: LOperator, n_nodes: int) -> OperatorMatrix:
    """The operator embedded in the Q x Q node/edge feature space."""
    op = _check(op)
    if n_nodes < 3:
        raise ShapeMismatchError("graph operators need at least 3 nodes")
    q = feature_size(n_nodes)
    mat = np.zeros((q, q), dtype=np.int64)
    block = _l_block(op, n_nodes)
    r, c = _offset(op.target, n_nodes), _offset(op.source, n_nodes)
    mat[r:r + block.shape[0], c:c + block.shape[1]] = block
    mat.flags.writeable = False
    return OperatorMatrix(n_nodes, mat)


def predicted_product_basis(first: LOperator, second: LOperator) -> list[LOperator]:
    """Operators spanning ``second @ first`` according to the multiplication rule."""
    first, second = _check(first), _check(second)
    if first.target != second.source:
        raise ShapeMismatchError(f"cannot compose {second} after {first}")
    i, j, mid = first.pooled_rank, second.pooled_rank, first.target
    return [LOperator(first.source, second.target, k)
            for k in range(max(0, i + j - mid), min(i, j) + 1)]


@dataclass(frozen=True, eq=False)
class CompositionCheck:
    product: np.ndarray
    basis: list[LOperator]
    coefficients: np.ndarray
    residual: float


def fit_span(target: np.ndarray, ops: Sequence[LOperator], n_nodes: int) -> tuple[np.ndarray, float]:
    """Least-squares fit of ``target`` by the given operators; returns (coefficients, residual norm)."""
    if not ops:
        return np.zeros(0), float(np.linalg.norm(target))
    A = np.stack([build_L(op, n_nodes).matrix.ravel() for op in ops], axis=1).astype(np.float64)
    b = np.asarray(target, dtype=np.float64).ravel()
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    return coef, float(np.linalg.norm(A @ coef - b))


def compose_check(first: LOperator, second: LOperator, n_nodes: int) -> CompositionCheck:
    """Check that ``L(second) @ L(first)`` lies in the span the multiplication rule predicts."""
    basis = predicted_product_basis(first, second)
    product = build_L(second, n_nodes).matrix @ build_L(first, n_nodes).matrix
    coef, residual = fit_span(product, basis, n_nodes)
    return CompositionCheck(product, basis, coef, residual)


def legal_compositions() -> list[tuple[LOperator, LOperator]]:
    return [(a, b) for a in NINE_OPERATORS for b in NINE_OPERATORS if a.target == b.source]


def matrix_rank(mats: Iterable[np.ndarray], rtol: float = RANK_RTOL) -> int:
    rows = [np.asarray(m, dtype=np.float64).ravel() for m in mats]
    if not rows:
        return 0
    s = np.linalg.svd(np.stack(rows), compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def span_dimension(ops: Iterable[LOperator], n_nodes: int) -> int:
    return matrix_rank(build_L(op, n_nodes).matrix for op in ops)


def two_layer_span_check(n_nodes: int) -> tuple[int, int, int]:
    """Span dimensions of the full layer, one relaxed layer and two stacked relaxed layers.

    Two stacked layers span every single-layer operator (the second layer
    contains the identity) and every pairwise product.
    """
    single = [build_L(op, n_nodes).matrix for op in SINGLE_RELAXED_OPERATORS]
    stacked = single + [b @ a for a in single for b in single]
    return (span_dimension(NINE_OPERATORS, n_nodes), matrix_rank(single), matrix_rank(stacked))


def predicted_closure(ops: Sequence[LOperator]) -> list[LOperator]:
    """Operators reachable as one op or a product of two, by the multiplication rule alone."""
    out = set(ops)
    for a in ops:
        for b in ops:
            if a.target == b.source:
                out.update(predicted_product_basis(a, b))
    return sorted(out)


def feature_permutation(perm: Sequence[int]) -> np.ndarray:
    """Index map of a node relabelling on the Q node/edge feature slots."""
    n = len(perm)
    nodes = F.face_permutation(n, 1, False, perm)
    edges = F.face_permutation(n, 2, False, perm) + n
    return np.concatenate([nodes, edges])
