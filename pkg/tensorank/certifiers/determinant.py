'''Slice-determinant lower bound

If the slices S_1..S_p of a 3-mode tensor along one mode are n x n, the
slices other than S_k are linearly independent, and
det(S_k + sum_{i != k} a_i S_i) is a nonzero constant, then every
decomposition needs at least (p - 1) + n terms.
'''
import numpy as np
from fractions import Fraction
from typing import List, Optional, Sequence
from ..common import (
    CertificateError, DenseTensor, Matrix, TensorError,
    exact, exact_determinant, kronecker, log, matrix_rank, to_exact,
)
from ..symmetric import w_state
from .common import RankCertificate, certificate


MIN_POINTS = 5
SAMPLE_RANGE = 10**6


def _slices(T: DenseTensor, mode: int) -> List[Matrix]:
    return [np.take(T.entries, i, axis=mode) for i in range(T.shape[mode])]


def _random_point(rng: np.random.Generator, count: int) -> List[Fraction]:
    numerators = rng.integers(-SAMPLE_RANGE, SAMPLE_RANGE, size=count, endpoint=True)
    denominators = rng.integers(1, SAMPLE_RANGE, size=count, endpoint=True)
    return [Fraction(int(a), int(b)) for a, b in zip(numerators, denominators)]


def constant_determinant(
    affine: Matrix,
    others: Sequence[Matrix],
    points: int = MIN_POINTS,
    seed: int = 0,
) -> bool:
    '''det(affine + sum a_i others_i) equals det(affine) != 0 at random rational points

    The determinant has degree at most n, so at least n + 1 points are used.
    '''
    base = exact_determinant(affine)
    if not base:
        return False
    rng = np.random.default_rng(seed)
    for _ in range(max(points, affine.shape[0] + 1)):
        combination = affine.copy()
        for a, S in zip(_random_point(rng, len(others)), others):
            combination = combination + S * exact(a)
        if exact_determinant(combination) != base:
            return False
    return True


def determinant_lower_bound(
    T: DenseTensor,
    mode: Optional[int] = None,
    affine_slice: Optional[int] = None,
    points: int = MIN_POINTS,
    seed: int = 0,
) -> Optional[RankCertificate]:
    '''Best slice-determinant bound, searching modes and affine slices left open'''
    if T.order != 3:
        raise TensorError(f'Determinant criterion needs a 3-mode tensor, got order {T.order}')
    if not T.exact:
        raise TensorError('Determinant criterion needs exact entries')
    modes = range(3) if mode is None else [mode]
    best: Optional[RankCertificate] = None
    for m in modes:
        n1, n2 = (T.shape[j] for j in range(3) if j != m)
        if n1 != n2:
            continue
        slices = _slices(T, m)
        p = len(slices)
        candidates = range(p) if affine_slice is None else [affine_slice]
        for k in candidates:
            others = [S for i, S in enumerate(slices) if i != k]
            if others and matrix_rank(np.stack([S.reshape(-1) for S in others])) < len(others):
                continue
            if not constant_determinant(slices[k], others, points, seed):
                continue
            value = (p - 1) + n1
            if best is None or value > best.value:
                best = certificate(
                    'determinant-lower', value, 'lower',
                    mode=m, affine_slice=k, points=max(points, n1 + 1), seed=seed,
                )
    if best is None:
        log('Determinant criterion found no admissible slice')
    return best


def w3kron2_determinant_certificate(seed: int = 0) -> RankCertificate:
    '''Lower bound 7 for the mode-wise Kronecker square of W3'''
    T = to_exact(kronecker(w_state(3), w_state(3)))
    # slice 0 along mode 0 is the antidiagonal, the rest sit strictly above it
    cert = determinant_lower_bound(T, mode=0, affine_slice=0, seed=seed)
    if cert is None or cert.value != 7:
        raise CertificateError('Determinant identity failed for the Kronecker square of W3')
    return cert
