"""Exterior-power bookkeeping on a 2n-dimensional complex coordinate space.

Basis wedges are lexicographically ordered index sets; sign conventions are
fixed once by sorting permutations.  Operators on degree-1 extend either
multiplicatively (compound matrix, for frame changes and Gram matrices) or as
even derivations (for degree-(-1,1) fields).
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np


@lru_cache(maxsize=None)
def basis(dim: int, k: int) -> tuple[tuple[int, ...], ...]:
    if k < 0 or k > dim:
        raise ValueError(f"degree {k} out of range for dimension {dim}")
    return tuple(combinations(range(dim), k))


@lru_cache(maxsize=None)
def index_map(dim: int, k: int) -> dict[tuple[int, ...], int]:
    return {s: i for i, s in enumerate(basis(dim, k))}


def sort_sign(indices: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
    """Sorted index tuple and permutation sign; sign 0 on repeats."""
    arr = list(indices)
    sign = 1
    for i in range(1, len(arr)):
        j = i
        while j > 0 and arr[j - 1] > arr[j]:
            arr[j - 1], arr[j] = arr[j], arr[j - 1]
            sign = -sign
            j -= 1
    for i in range(1, len(arr)):
        if arr[i - 1] == arr[i]:
            return tuple(arr), 0
    return tuple(arr), sign


def compound_matrix(m: np.ndarray, k: int) -> np.ndarray:
    """k-th multiplicative extension: entries are k x k minors of m."""
    dim = m.shape[0]
    sets = basis(dim, k)
    if k == 0:
        return np.ones((1, 1), dtype=complex)
    m = np.asarray(m, dtype=complex)
    rows = np.array(sets)
    stack = m[rows[:, None, :, None], rows[None, :, None, :]]
    return np.linalg.det(stack)


def derivation_matrix(m: np.ndarray, k: int) -> np.ndarray:
    """Even-derivation extension sum_i 1 x .. x m x .. x 1 on degree k."""
    dim = m.shape[0]
    sets = basis(dim, k)
    idx = index_map(dim, k)
    out = np.zeros((len(sets), len(sets)), dtype=complex)
    m = np.asarray(m, dtype=complex)
    for col, cs in enumerate(sets):
        for pos in range(k):
            rest = cs[:pos] + cs[pos + 1:]
            for target in range(dim):
                coeff = m[target, cs[pos]]
                if coeff == 0.0:
                    continue
                full, sign = sort_sign(rest[:pos] + (target,) + rest[pos:])
                if sign != 0:
                    out[idx[full], col] += sign * coeff
    return out


def type_masks(n: int, k: int) -> dict[tuple[int, int], np.ndarray]:
    """Boolean masks of the (p, q) blocks; indices below n count toward p."""
    sets = basis(2 * n, k)
    out: dict[tuple[int, int], np.ndarray] = {}
    for p in range(max(0, k - n), min(k, n) + 1):
        q = k - p
        mask = np.array([sum(1 for a in s if a < n) == p for s in sets])
        if mask.any():
            out[(p, q)] = mask
    return out


def conjugation_matrix(n: int, k: int) -> np.ndarray:
    """Signed permutation of wedge indices under the swap a <-> a + n.

    Composed with entrywise conjugation of coordinates this is the real
    structure of the exterior power in a conjugation-adapted degree-1 basis.
    """
    sets = basis(2 * n, k)
    idx = index_map(2 * n, k)
    out = np.zeros((len(sets), len(sets)))
    for col, cs in enumerate(sets):
        swapped = tuple((a + n) % (2 * n) for a in cs)
        full, sign = sort_sign(swapped)
        out[idx[full], col] = sign
    return out
