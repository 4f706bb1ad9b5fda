"""Faces over the node set [N] = {1, ..., N}.

A directed face is a tuple of distinct node ids; an undirected face is
stored as its ascending-sorted tuple. Faces of one size are enumerated in
lexicographic order, which fixes the row order of every face-vector.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import InvalidFaceError, InvalidSignatureError

Face = tuple[int, ...]
Permutation = tuple[int, ...]


def face_count(n_nodes: int, face_size: int, directed: bool) -> int:
    if face_size < 0 or n_nodes < 0:
        return 0
    if directed:
        return math.perm(n_nodes, face_size)
    return math.comb(n_nodes, face_size)


@lru_cache(maxsize=None)
def _face_table(n_nodes: int, face_size: int, directed: bool) -> tuple[Face, ...]:
    nodes = range(1, n_nodes + 1)
    if directed:
        return tuple(itertools.permutations(nodes, face_size))
    return tuple(itertools.combinations(nodes, face_size))


def enumerate_faces(n_nodes: int, face_size: int, directed: bool = False) -> list[Face]:
    """All faces of ``face_size`` nodes over [n_nodes], in canonical order."""
    if face_size < 1 or face_size > n_nodes:
        raise InvalidSignatureError(
            f"face size must lie in [1, {n_nodes}], got {face_size}")
    return list(_face_table(n_nodes, face_size, directed))


def face_array(n_nodes: int, face_size: int, directed: bool) -> np.ndarray:
    """Canonical faces as an int array of shape (count, face_size), 1-based.

    Unlike :func:`enumerate_faces` this accepts ``face_size == 0`` (one empty
    face, the scalar) and ``face_size > n_nodes`` (no faces).
    """
    return _face_array(n_nodes, face_size, directed)


@lru_cache(maxsize=None)
def _face_array(n_nodes: int, face_size: int, directed: bool) -> np.ndarray:
    table = _face_table(n_nodes, face_size, directed) if face_size <= n_nodes else ()
    arr = np.array(table, dtype=np.int64).reshape(len(table), face_size)
    arr.flags.writeable = False
    return arr


@lru_cache(maxsize=None)
def _lookup(n_nodes: int, face_size: int, directed: bool) -> np.ndarray:
    # flat base-N code of a 0-based node tuple -> face index, -1 if repeated nodes
    table = np.full(n_nodes ** face_size, -1, dtype=np.int64)
    if face_size > n_nodes:
        table.flags.writeable = False
        return table
    for tup in itertools.permutations(range(n_nodes), face_size):
        key = tuple(sorted(tup)) if not directed else tup
        code = _code(tup, n_nodes)
        table[code] = _index_map(n_nodes, face_size, directed)[tuple(v + 1 for v in key)]
    table.flags.writeable = False
    return table


def _code(tup: Sequence[int], n_nodes: int) -> int:
    code = 0
    for v in tup:
        code = code * n_nodes + v
    return code


@lru_cache(maxsize=None)
def _index_map(n_nodes: int, face_size: int, directed: bool) -> dict[Face, int]:
    return {f: i for i, f in enumerate(_face_table(n_nodes, face_size, directed))}


def lookup_indices(nodes: np.ndarray, n_nodes: int, directed: bool) -> np.ndarray:
    """Face indices for rows of a (rows, M) array of 1-based node ids.

    Undirected lookups accept any ordering of a face. Rows with repeated
    nodes map to -1.
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    rows, size = nodes.shape
    if size == 0:
        return np.zeros(rows, dtype=np.int64)
    weights = n_nodes ** np.arange(size - 1, -1, -1, dtype=np.int64)
    codes = (nodes - 1) @ weights
    return _lookup(n_nodes, size, directed)[codes]


def check_face(face: Sequence[int], n_nodes: int) -> Face:
    face = tuple(int(v) for v in face)
    if any(v < 1 or v > n_nodes for v in face):
        raise InvalidFaceError(f"face {face} has node ids outside [1, {n_nodes}]")
    if len(set(face)) != len(face):
        raise InvalidFaceError(f"face {face} repeats a node")
    return face


def canonical_face(face: Sequence[int], directed: bool) -> Face:
    return tuple(face) if directed else tuple(sorted(face))


def face_to_index(face: Sequence[int], n_nodes: int, directed: bool = False) -> int:
    face = canonical_face(check_face(face, n_nodes), directed)
    if not face:
        raise InvalidFaceError("empty face")
    return _index_map(n_nodes, len(face), directed)[face]


def index_to_face(index: int, n_nodes: int, face_size: int, directed: bool = False) -> Face:
    table = _face_table(n_nodes, face_size, directed)
    if not 0 <= index < len(table):
        raise IndexError(f"face index {index} out of range for {len(table)} faces")
    return table[index]


def check_permutation(perm: Sequence[int], n_nodes: int | None = None) -> Permutation:
    """Validate ``perm`` as a bijection on [N]; ``perm[v - 1]`` is the image of v."""
    perm = tuple(int(v) for v in perm)
    n = len(perm) if n_nodes is None else n_nodes
    if len(perm) != n or sorted(perm) != list(range(1, n + 1)):
        raise InvalidFaceError(f"{perm} is not a permutation of [1, {n}]")
    return perm


def identity_permutation(n_nodes: int) -> Permutation:
    return tuple(range(1, n_nodes + 1))


def invert_permutation(perm: Sequence[int]) -> Permutation:
    inv = [0] * len(perm)
    for v, image in enumerate(perm, start=1):
        inv[image - 1] = v
    return tuple(inv)


def compose_permutations(first: Sequence[int], second: Sequence[int]) -> Permutation:
    """The permutation applying ``first`` then ``second``."""
    return tuple(second[v - 1] for v in first)


def permute_face(face: Sequence[int], perm: Sequence[int], directed: bool = False) -> Face:
    check_face(face, len(perm))
    image = tuple(perm[v - 1] for v in face)
    return canonical_face(image, directed)


def face_permutation(n_nodes: int, face_size: int, directed: bool,
                     perm: Sequence[int]) -> np.ndarray:
    """Index map ``out[i] = index(perm . face_i)`` over the canonical face list."""
    faces = face_array(n_nodes, face_size, directed)
    if face_size == 0:
        return np.zeros(len(faces), dtype=np.int64)
    image = np.asarray(perm, dtype=np.int64)[faces - 1]
    return lookup_indices(image, n_nodes, directed)
