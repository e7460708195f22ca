import numpy as np
from fractions import Fraction
from itertools import product
from math import ceil
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple
from numpy.typing import NDArray
from sympy import factorint, isprime
from .common import BudgetExceeded, Shape, TensorError, check_shape, segre_dimension, shape_size


MAX_VERTICES = 10**6
MAX_EXACT_VERTICES = 32
# 1-based coordinates (l_1, ..., l_d)
HammingPoint = Tuple[int, ...]


class VertexSet(NamedTuple):
    shape: Shape
    points: Tuple[HammingPoint, ...]

    def __len__(self) -> int:
        return len(self.points)


class BoundChain(NamedTuple):
    r0: int
    fractional: Fraction
    # Greedy 3-separated size, a lower bound on the packing number
    packing: int
    # Greedy dominating size, an upper bound on gamma and on r_gen
    covering: int
    r_gen_known: Optional[int]
    perfect_code: Optional[int]


def vertex_set(shape: Sequence[int], points: Iterable[Sequence[int]]) -> VertexSet:
    shape = check_shape(shape)
    unique = sorted({tuple(int(x) for x in p) for p in points})
    for p in unique:
        if len(p) != len(shape) or any(not 1 <= x <= n for x, n in zip(p, shape)):
            raise TensorError(f'Point {p} out of range for shape {shape}')
    return VertexSet(shape, tuple(unique))


def _check_size(shape: Shape, limit: int = MAX_VERTICES) -> None:
    if shape_size(shape) > limit:
        raise BudgetExceeded(f'Hamming graph of shape {shape} has more than {limit} vertices')


def hamming_distance(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(1 for x, y in zip(a, b) if x != y)


def ball(shape: Sequence[int], point: Sequence[int]) -> List[HammingPoint]:
    '''Closed radius-1 ball, lexicographic'''
    out = {tuple(point)}
    for k, n in enumerate(shape):
        for v in range(1, n + 1):
            out.add(tuple(point[:k]) + (v,) + tuple(point[k + 1:]))
    return sorted(out)


def _distance_grid(shape: Shape, point: Sequence[int]) -> NDArray[np.int64]:
    grids = np.ogrid[tuple(slice(1, n + 1) for n in shape)]
    return sum((g != x).astype(np.int64) for g, x in zip(grids, point))


def _cover_mask(S: VertexSet) -> NDArray[np.bool_]:
    covered = np.zeros(S.shape, dtype=bool)
    for p in S.points:
        idx = [x - 1 for x in p]
        for k in range(len(S.shape)):
            line: List[object] = list(idx)
            line[k] = slice(None)
            covered[tuple(line)] = True
    return covered


def verify_dominating(shape: Sequence[int], S: VertexSet) -> bool:
    shape = check_shape(shape)
    _check_size(shape)
    if S.shape != shape:
        raise TensorError(f'Vertex set shape {S.shape} does not match {shape}')
    S = vertex_set(shape, S.points)
    return bool(_cover_mask(S).all())


def verify_3separated(shape: Sequence[int], S: VertexSet) -> bool:
    S = vertex_set(shape, S.points)
    if len(S) < 2:
        return True
    P = np.array(S.points)
    distances = (P[:, None, :] != P[None, :, :]).sum(axis=2)
    np.fill_diagonal(distances, 3)
    return bool(distances.min() >= 3)


def greedy_dominating(shape: Sequence[int]) -> VertexSet:
    '''Repeatedly take the lexicographically first vertex covering the most uncovered vertices'''
    shape = check_shape(shape)
    _check_size(shape)
    d = len(shape)
    uncovered = np.ones(shape, dtype=bool)
    chosen: List[HammingPoint] = []
    while uncovered.any():
        U = uncovered.astype(np.int64)
        # closed-ball count: every line through v contains v once
        degree = sum(U.sum(axis=k, keepdims=True) for k in range(d)) - (d - 1) * U
        flat = int(np.argmax(degree))
        idx = np.unravel_index(flat, shape)
        chosen.append(tuple(int(i) + 1 for i in idx))
        for k in range(d):
            line: List[object] = [int(i) for i in idx]
            line[k] = slice(None)
            uncovered[tuple(line)] = False
    return VertexSet(shape, tuple(sorted(chosen)))


def greedy_3separated(shape: Sequence[int]) -> VertexSet:
    '''Lexicographic packing: keep a vertex unless it lies within distance 2 of a kept one'''
    shape = check_shape(shape)
    _check_size(shape)
    blocked = np.zeros(shape, dtype=bool)
    chosen: List[HammingPoint] = []
    while not blocked.all():
        flat = int(np.argmin(blocked))
        point = tuple(int(i) + 1 for i in np.unravel_index(flat, shape))
        chosen.append(point)
        blocked |= _distance_grid(shape, point) <= 2
    return VertexSet(shape, tuple(chosen))


def fractional_bound(shape: Sequence[int]) -> Fraction:
    '''N(n)/M(n): the graph is (M-1)-regular'''
    shape = check_shape(shape)
    return Fraction(shape_size(shape), segre_dimension(shape))


def lower_bound_r0(shape: Sequence[int]) -> int:
    return ceil(fractional_bound(shape))


def is_prime_power(n: int) -> bool:
    return n >= 2 and len(factorint(n)) == 1


def perfect_code_rank(n: int, d: int) -> Optional[int]:
    if n < 2:
        raise ValueError('Need n >= 2')
    if not is_prime_power(n):
        return None
    a = 2
    while (n**(a + 1) - 1) // (n - 1) <= d:
        if (n**(a + 1) - 1) // (n - 1) == d:
            return n**(d - a - 1)
        a += 1
    return None


def hamming_code(q: int, a: int) -> VertexSet:
    '''1-perfect Hamming code over GF(q) of length (q^(a+1)-1)/(q-1), q prime'''
    if not isprime(q):
        raise ValueError(f'Hamming code construction needs a prime field size, got {q}')
    if a < 1:
        raise ValueError('Need a >= 1')
    redundancy = a + 1
    length = (q**redundancy - 1) // (q - 1)
    dimension = length - redundancy
    if q**dimension > MAX_VERTICES:
        raise BudgetExceeded(f'Hamming code with {q}^{dimension} words is too large')

    # one normalized representative per projective point, unit vectors last
    columns = [
        v for v in product(range(q), repeat=redundancy)
        if any(v) and v[next(i for i, x in enumerate(v) if x)] == 1 and sum(1 for x in v if x) > 1
    ]
    H1 = np.array(columns, dtype=np.int64).T.reshape(redundancy, dimension)
    messages = np.array(list(product(range(q), repeat=dimension)), dtype=np.int64).reshape(-1, dimension)
    parity = (-messages @ H1.T) % q
    words = np.concatenate([messages, parity], axis=1) + 1
    return VertexSet((q,) * length, tuple(sorted(tuple(int(x) for x in w) for w in words)))


def exact_domination_number(shape: Sequence[int]) -> Tuple[int, VertexSet]:
    '''gamma by branch and bound, tiny graphs only'''
    shape = check_shape(shape)
    _check_size(shape, MAX_EXACT_VERTICES)
    vertices = [tuple(i + 1 for i in idx) for idx in np.ndindex(*shape)]
    index = {v: i for i, v in enumerate(vertices)}
    masks = [sum(1 << index[u] for u in ball(shape, v)) for v in vertices]
    full = (1 << len(vertices)) - 1
    ball_size = segre_dimension(shape)

    best = list(greedy_dominating(shape).points)
    best_idx = [index[p] for p in best]

    def search(covered: int, picked: List[int]) -> None:
        nonlocal best_idx
        if covered == full:
            if len(picked) < len(best_idx):
                best_idx = list(picked)
            return
        missing = bin(full & ~covered).count('1')
        if len(picked) + -(-missing // ball_size) >= len(best_idx):
            return
        first = (full & ~covered & -(full & ~covered)).bit_length() - 1
        # some chosen vertex must cover the first uncovered one
        for u in ball(shape, vertices[first]):
            j = index[u]
            picked.append(j)
            search(covered | masks[j], picked)
            picked.pop()

    search(0, [])
    return len(best_idx), vertex_set(shape, [vertices[i] for i in best_idx])


def bound_chain(shape: Sequence[int]) -> BoundChain:
    from .generic import known_generic_rank
    shape = check_shape(shape)
    reduced = [n for n in shape if n > 1]
    perfect = None
    if len(reduced) > 1 and len(set(reduced)) == 1:
        perfect = perfect_code_rank(reduced[0], len(reduced))
    return BoundChain(
        lower_bound_r0(shape),
        fractional_bound(shape),
        len(greedy_3separated(shape)),
        len(greedy_dominating(shape)),
        known_generic_rank(shape),
        perfect,
    )
