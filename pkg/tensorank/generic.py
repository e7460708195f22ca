import json
import numpy as np
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from functools import lru_cache
from math import ceil
from time import perf_counter as clock
from typing import Any, Dict, FrozenSet, List, NamedTuple, Optional, Sequence, Tuple
from numpy.typing import NDArray
from .common import (
    DEFAULT_PRIME, BudgetExceeded, Shape, log, open_resource, rank_mod_prime,
    segre_dimension, shape_size,
)


MAX_JACOBIAN_ENTRIES = 10**8
FLOAT_RANK_TOL = 1e-8


class TerraciniProbe(NamedTuple):
    shape: Shape
    # Candidate rank
    r: int
    field_prime: int
    trials: int
    seed: int


class GenericRankResult(NamedTuple):
    shape: Shape
    r0: int
    r_gen: int
    # Jacobian (rows, cols) at r_gen
    jacobian_dims: Tuple[int, int]
    # (r, best Jacobian rank over trials) for each probed r
    d_sequence: Tuple[Tuple[int, int], ...]


class QunitFormulas(NamedTuple):
    theta: Fraction
    floor: int
    delta: int
    value: int
    # False when `value` is only an upper bound
    exact: bool


class MaxRankBound(NamedTuple):
    value: int
    # (label, value) for every applicable bound
    bounds: Tuple[Tuple[str, int], ...]


class QunitRankEntry(NamedTuple):
    d: int
    n: int
    value: int
    provenance: str


def reduced_shape(shape: Sequence[int]) -> Shape:
    '''Drop size-1 modes and sort ascending'''
    return tuple(sorted(n for n in shape if n > 1))


def r0_lower_bound(shape: Sequence[int]) -> int:
    dims = reduced_shape(shape)
    if not dims:
        return 1
    return -(-shape_size(dims) // segre_dimension(dims))


def _vector_dtype(p: int) -> Any:
    return np.int64 if p < 2**31 else object


def sample_points(probe: TerraciniProbe, trial: int) -> List[List[NDArray[Any]]]:
    '''Uniform GF(p) factor vectors, seeded by (seed, r, trial)'''
    rng = np.random.default_rng(np.random.SeedSequence([probe.seed, probe.r, trial]))
    dtype = _vector_dtype(probe.field_prime)
    return [
        [rng.integers(0, probe.field_prime, size=n, dtype=np.int64).astype(dtype) for n in probe.shape]
        for _ in range(probe.r)
    ]


def _row_major_product(vectors: Sequence[NDArray[Any]], p: Optional[int], dtype: Any) -> NDArray[Any]:
    out = np.ones(1, dtype=dtype)
    for v in vectors:
        out = np.multiply.outer(out, v).reshape(-1)
        if p is not None:
            out = out % p
    return out


def _jacobian(shape: Shape, points: List[List[NDArray[Any]]], p: Optional[int], dtype: Any) -> NDArray[Any]:
    rows = shape_size(shape)
    cols = len(points) * sum(shape)
    if rows * cols > MAX_JACOBIAN_ENTRIES:
        raise BudgetExceeded(f'Terracini Jacobian {rows}x{cols} exceeds the size guard')
    blocks = []
    for factors in points:
        for k, n in enumerate(shape):
            pre = _row_major_product(factors[:k], p, dtype)
            post = _row_major_product(factors[k + 1:], p, dtype)
            outer = np.multiply.outer(pre, post)
            if p is not None:
                outer = outer % p
            # column l: factor k replaced by e_l
            block = np.zeros((len(pre), n, len(post), n), dtype=dtype)
            idx = np.arange(n)
            block[:, idx, :, idx] = outer
            blocks.append(block.reshape(rows, n))
    return np.concatenate(blocks, axis=1)


def terracini_jacobian(shape: Sequence[int], r: int, points: List[List[NDArray[Any]]], p: int = DEFAULT_PRIME) -> NDArray[Any]:
    '''N(n) x r*sum(n) Jacobian of the rank-r parametrization over GF(p)'''
    if r < 1 or len(points) != r:
        raise ValueError('Need r >= 1 sample points')
    return _jacobian(tuple(shape), points, p, _vector_dtype(p))


def terracini_jacobian_float(shape: Sequence[int], r: int, seed: int, trial: int = 0) -> NDArray[np.complex128]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, r, trial]))
    points = [
        [rng.standard_normal(n) + 1j * rng.standard_normal(n) for n in shape]
        for _ in range(r)
    ]
    return _jacobian(tuple(shape), points, None, np.complex128)


def float_jacobian_rank(shape: Sequence[int], r: int, seed: int, trial: int = 0) -> int:
    J = terracini_jacobian_float(shape, r, seed, trial)
    sv = np.linalg.svd(J, compute_uv=False)
    return int(np.sum(sv > FLOAT_RANK_TOL * sv[0]))


def probe_rank(probe: TerraciniProbe, trial: int) -> int:
    J = terracini_jacobian(probe.shape, probe.r, sample_points(probe, trial), probe.field_prime)
    return rank_mod_prime(J, probe.field_prime)


def _probe(probe: TerraciniProbe, threads: int) -> int:
    target = shape_size(probe.shape)
    if threads > 1 and probe.trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return max(pool.map(lambda t: probe_rank(probe, t), range(probe.trials)))
    best = 0
    for trial in range(probe.trials):
        best = max(best, probe_rank(probe, trial))
        if best == target:
            break
    return best


def rank_cap(shape: Sequence[int]) -> int:
    '''r(T) <= N(n)/max n_j for every tensor of the shape'''
    dims = reduced_shape(shape)
    return shape_size(dims) // dims[-1] if dims else 1


def generic_rank(
    shape: Sequence[int],
    trials: int = 3,
    seed: int = 0,
    prime: int = DEFAULT_PRIME,
    full_sequence: bool = False,
    threads: int = 1,
) -> GenericRankResult:
    dims = reduced_shape(shape)
    r0 = r0_lower_bound(dims)
    if not dims:
        return GenericRankResult(tuple(shape), 1, 1, (1, 0), ((1, 1),))
    target = shape_size(dims)
    if target > 10**6:
        raise BudgetExceeded(f'Shape {tuple(shape)} is beyond desk scale')

    t_start = clock()
    sequence: List[Tuple[int, int]] = []
    for r in range(1 if full_sequence else r0, rank_cap(dims) + 1):
        probe = TerraciniProbe(dims, r, prime, trials, seed)
        achieved = _probe(probe, threads)
        sequence.append((r, achieved))
        log(f'Probe r={r}: Jacobian rank {achieved}/{target}')
        if achieved == target:
            t_finish = clock()
            log(f'Generic rank of {dims} is {r} ({t_finish - t_start:.3f} seconds)')
            return GenericRankResult(tuple(shape), r0, r, (target, r * sum(dims)), tuple(sequence))
        # a full-size minor has degree <= target * (d - 1) in the sampled coordinates
        miss = min(1.0, target * (len(dims) - 1) / prime) ** trials
        log(f'r={r} deficient: r < r_gen unless all {trials} trials hit a root (probability <= {miss:.1e})')
    raise BudgetExceeded(f'No full-rank Jacobian found up to r={rank_cap(dims)}')


def threshold_generic_rank(shape: Sequence[int]) -> Optional[int]:
    dims = reduced_shape(shape)
    if not dims:
        return 1
    if len(dims) == 1:
        return 1
    if len(dims) == 2:
        return dims[0]
    head, last = dims[:-1], dims[-1]
    head_size = shape_size(head)
    if last >= head_size:
        return head_size
    if head_size + len(dims) - 1 - sum(head) <= last:
        return last
    return None


def qunit_formulas(n: int, d: int) -> QunitFormulas:
    if n < 2 or d < 2:
        raise ValueError('qunit formulas need n >= 2 and d >= 2')
    theta = Fraction(n**d, d * (n - 1) + 1)
    floor = theta.numerator // theta.denominator
    delta = floor % n
    lower = ceil(theta)
    if n == 2 or theta.denominator == 1 or delta == n - 1:
        return QunitFormulas(theta, floor, delta, lower, True)
    return QunitFormulas(theta, floor, delta, lower + n - 1 - delta, False)


# Embedded tables

@lru_cache(maxsize=None)
def known_tables() -> Dict[str, Any]:
    with open_resource('known_ranks.json', 'r') as table_file:
        return json.load(table_file)


def qunit_rank_entries() -> List[QunitRankEntry]:
    return [QunitRankEntry(*entry) for entry in known_tables()['qunit_generic_ranks']['entries']]


def qunit_rank_lookup(d: int, n: int) -> Optional[QunitRankEntry]:
    for entry in qunit_rank_entries():
        if (entry.d, entry.n) == (d, n):
            return entry
    return None


def max_rank_3x3p(p: int) -> FrozenSet[int]:
    '''Known r_max(3,3,p), a two-element set where only bracketed'''
    if not 1 <= p <= 9:
        raise ValueError('Table covers p = 1..9')
    return frozenset(known_tables()['max_rank_3x3p'][p - 1])


def generic_rank_3x3p(p: int) -> int:
    if not 1 <= p <= 9:
        raise ValueError('Table covers p = 1..9')
    return known_tables()['generic_rank_3x3p'][p - 1]


def ru_bound(n: int, d: int) -> int:
    '''Orthogonal product basis term bound n^d - d*n(n-1)/2'''
    return n**d - d * n * (n - 1) // 2


def orthogonal_basis_table() -> List[Dict[str, Any]]:
    table = known_tables()['orthogonal_basis_table']
    return [dict(zip(table['columns'], row)) for row in table['entries']]


def anomaly_status(k: int) -> Optional[str]:
    '''Status of r_gen(3,2k+1,2k+1) = r0 + 1'''
    for kk, status in known_tables()['anomalous_cubic_3xkxk']['entries']:
        if kk == k:
            return status
    return None


def known_generic_rank(shape: Sequence[int]) -> Optional[int]:
    '''Closed-form or tabulated generic rank, None when only computation can tell'''
    threshold = threshold_generic_rank(shape)
    if threshold is not None:
        return threshold
    dims = reduced_shape(shape)
    if len(dims) == 3 and dims[:2] == (3, 3) and dims[2] <= 9:
        return generic_rank_3x3p(dims[2])
    if len(set(dims)) == 1:
        entry = qunit_rank_lookup(len(dims), dims[0])
        if entry is not None:
            return entry.value
        if dims[0] == 2:
            return qunit_formulas(2, len(dims)).value
    return None


def max_rank_upper_bounds(shape: Sequence[int], r_gen: Optional[int] = None) -> MaxRankBound:
    dims = reduced_shape(shape)
    if not dims:
        return MaxRankBound(1, (('scalar', 1),))
    bounds: List[Tuple[str, int]] = [('segre-count', rank_cap(dims))]
    if len(dims) == 2:
        bounds.append(('matrix', dims[0]))
    if r_gen is None:
        r_gen = known_generic_rank(dims)
    if r_gen is not None and len(dims) >= 3:
        bounds.append(('twice-generic', 2 * r_gen - 1))

    if len(dims) == 3:
        if dims[0] == 2:
            from .pencil import max_rank_mn2
            bounds.append(('pencil', max_rank_mn2(dims[1], dims[2])))
        for k in range(3):
            p = dims[k]
            m, n = sorted(dims[:k] + dims[k + 1:])
            if m == n and p >= 3 and m >= 3:
                bounds.append(('atkinson-square', (p + 1) * m // 2))
            if 3 <= m and 3 <= p:
                bounds.append(('atkinson-slices', m + (p // 2) * n))
            u = m * n - p
            if 3 <= m and 0 <= u <= min(4, m, n):
                bounds.append(('atkinson-near-full', m * n - (u + 1) // 2))
        if dims[:2] == (3, 3) and dims[2] <= 9:
            bounds.append(('known-3x3p', max(max_rank_3x3p(dims[2]))))
        if dims[0] == dims[2]:
            for n, _, r_max_upper in known_tables()['cubic']['entries']:
                if n == dims[0]:
                    bounds.append(('known-cubic', r_max_upper))

    value = min(v for _, v in bounds)
    return MaxRankBound(value, tuple(bounds))
