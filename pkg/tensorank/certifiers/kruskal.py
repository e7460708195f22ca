import numpy as np
from functools import reduce
from itertools import combinations
from typing import List, Optional, Sequence, Tuple
from numpy.typing import NDArray
from scipy.optimize import linear_sum_assignment
from ..common import (
    BudgetExceeded, Decomposition, DenseTensor, Modes, TensorError,
    log, matrix_rank, numeric_term, shape_size,
)
from .common import RankCertificate, certificate


MAX_KRUSKAL_VECTORS = 20
MATCH_TOL = 1e-6


def kruskal_rank(vectors: Sequence[NDArray], tol: Optional[float] = None) -> int:
    '''Largest r such that every r of the vectors are linearly independent'''
    if not vectors:
        return 0
    if len(vectors) > MAX_KRUSKAL_VECTORS:
        raise BudgetExceeded(f'Kruskal rank of {len(vectors)} vectors needs too many subsets')
    stacked = np.stack([np.asarray(v) for v in vectors])
    for v in stacked:
        if not any(bool(x) for x in v):
            raise TensorError('Kruskal rank is undefined with a zero vector')
    limit = min(len(vectors), stacked.shape[1])
    for r in range(2, limit + 1):
        for subset in combinations(range(len(vectors)), r):
            if matrix_rank(stacked[list(subset)], tol) < r:
                return r - 1
    return limit


def kruskal_blocks(shape: Sequence[int]) -> List[Modes]:
    '''Mode 0 alone, then the split of the rest with the closest block sizes (smaller first)'''
    d = len(shape)
    if d == 3:
        return [(0,), (1,), (2,)]
    rest = tuple(range(1, d))
    best: Optional[Tuple[int, Modes, Modes]] = None
    for k in range(1, len(rest)):
        for left in combinations(rest, k):
            right = tuple(m for m in rest if m not in left)
            n_left = shape_size([shape[m] for m in left])
            n_right = shape_size([shape[m] for m in right])
            if n_left > n_right:
                continue
            gap = n_right - n_left
            if best is None or gap < best[0]:
                best = (gap, left, right)
    assert best is not None
    return [(0,), best[1], best[2]]


def _block_vector(factors: Sequence[NDArray], block: Modes) -> NDArray:
    return reduce(np.multiply.outer, [factors[m] for m in block]).reshape(-1)


def kruskal_certificate(
    dec: Decomposition,
    tol: Optional[float] = None,
    fit_tol: Optional[float] = None,
) -> Optional[RankCertificate]:
    '''Exact rank and uniqueness when the block Kruskal ranks sum to at least 2r + 2'''
    if len(dec.shape) < 3:
        raise TensorError('Kruskal certificate needs at least three modes')
    if any(term.is_zero() for term in dec.terms):
        raise TensorError('Kruskal certificate needs nonzero terms')
    terms = dec.terms if dec.exact else [numeric_term(t) for t in dec.terms]
    if tol is None and not dec.exact:
        tol = 1e-9
    r = len(terms)
    blocks = kruskal_blocks(dec.shape)
    ranks = [kruskal_rank([_block_vector(t.factors, block) for t in terms], tol) for block in blocks]
    log(f'Kruskal ranks {ranks} for {r} terms, need sum >= {2 * r + 2}')
    if sum(ranks) < 2 * r + 2:
        return None
    return certificate(
        'kruskal-exact', r, 'exact',
        decomposition=dec,
        groups=[list(b) for b in blocks],
        kruskal_ranks=ranks,
        tol=tol,
        fit_tol=(0.0 if dec.exact else 1e-8) if fit_tol is None else fit_tol,
        unique=True,
    )


def _term_vectors(dec: Decomposition) -> NDArray[np.complex128]:
    return np.array([numeric_term(t).tensor().reshape(-1) for t in dec.nonzero_terms()])


def match_decompositions(dec1: Decomposition, dec2: Decomposition, tol: float = MATCH_TOL) -> bool:
    '''Same rank-one terms up to order and the scaling inside each term'''
    if dec1.shape != dec2.shape:
        return False
    A, B = _term_vectors(dec1), _term_vectors(dec2)
    if len(A) != len(B):
        return False
    if len(A) == 0:
        return True
    scale = max(float(np.linalg.norm(A, axis=1).max()), float(np.finfo(float).tiny))
    cost = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2) / scale
    rows, cols = linear_sum_assignment(cost)
    return bool(cost[rows, cols].max() <= tol)


def uniqueness_witness(
    T: DenseTensor,
    cert: RankCertificate,
    starts: int = 16,
    seed: int = 1,
    tol: float = MATCH_TOL,
) -> bool:
    '''Every accepted ALS restart at the certified rank lands on the certified terms'''
    from .als import als_fit
    if cert.kind != 'kruskal-exact':
        raise ValueError(f'Uniqueness witness needs a Kruskal certificate, got {cert.kind}')
    reference = cert.payload['decomposition']
    recovered = 0
    for start in range(starts):
        fit = als_fit(T, cert.value, starts=1, seed=seed + start)
        if not fit.accepted:
            continue
        recovered += 1
        if not match_decompositions(reference, fit.decomposition, tol):
            log(f'Restart {start} found a different decomposition')
            return False
    log(f'{recovered}/{starts} restarts recovered the certified terms')
    return recovered > 0
