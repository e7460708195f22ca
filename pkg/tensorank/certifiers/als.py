import numpy as np
from concurrent.futures import ThreadPoolExecutor
from functools import reduce
from typing import List, NamedTuple, Optional, Tuple
from numpy.typing import NDArray
from ..common import Decomposition, DenseTensor, RankOneTerm, frobenius_norm, log, numeric_term
from .common import RankCertificate, certificate
from .flattening import flattening_lower_bound


# Largest accepted term weight, relative to the tensor norm
GUARD_FACTOR = 1e4
DEFAULT_MAX_ITER = 1000
STALL_TOL = 1e-10

FactorMatrices = List[NDArray[np.complex128]]


class ALSFit(NamedTuple):
    rank: int
    decomposition: Decomposition
    # Relative Frobenius residual
    residual: float
    max_weight: float
    accepted: bool
    start: int


def khatri_rao(matrices: FactorMatrices) -> NDArray[np.complex128]:
    '''Column-wise Kronecker product, first matrix slowest'''
    r = matrices[0].shape[1]
    return reduce(lambda a, b: np.einsum('ir,jr->ijr', a, b).reshape(-1, r), matrices)


def _reconstruct(factors: FactorMatrices) -> NDArray[np.complex128]:
    shape = tuple(A.shape[0] for A in factors)
    if len(factors) == 1:
        return factors[0].sum(axis=1)
    return (factors[0] @ khatri_rao(factors[1:]).T).reshape(shape)


def _random_factors(shape: Tuple[int, ...], r: int, seed: int, start: int) -> FactorMatrices:
    rng = np.random.default_rng(np.random.SeedSequence([seed, r, start]))
    return [rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r)) for n in shape]


def _als_sweeps(X: NDArray[np.complex128], factors: FactorMatrices, fit_tol: float, max_iter: int) -> float:
    norm = np.linalg.norm(X)
    d = X.ndim
    unfoldings = [np.moveaxis(X, k, 0).reshape(X.shape[k], -1) for k in range(d)]
    previous = np.inf
    residual = np.inf
    for _ in range(max_iter):
        for k in range(d):
            others = [factors[j] for j in range(d) if j != k]
            solution, *_ = np.linalg.lstsq(khatri_rao(others), unfoldings[k].T, rcond=None)
            factors[k] = solution.T
        residual = float(np.linalg.norm(X - _reconstruct(factors)) / norm)
        if residual < fit_tol or previous - residual < STALL_TOL * previous:
            break
        previous = residual
    return residual


def factors_to_decomposition(factors: FactorMatrices) -> Decomposition:
    shape = tuple(A.shape[0] for A in factors)
    terms = []
    for i in range(factors[0].shape[1]):
        columns = [A[:, i] for A in factors]
        norms = [float(np.linalg.norm(c)) for c in columns]
        if min(norms) == 0:
            continue
        terms.append(RankOneTerm(complex(np.prod(norms)), tuple(c / n for c, n in zip(columns, norms))))
    return Decomposition(shape, terms)


def max_term_weight(dec: Decomposition) -> float:
    '''Largest |weight| times product of factor norms over the terms'''
    weights = [
        abs(t.weight) * float(np.prod([np.linalg.norm(f) for f in t.factors]))
        for t in map(numeric_term, dec.terms)
    ]
    return max(weights, default=0.0)


def within_guard(dec: Decomposition, T: DenseTensor, guard: float = GUARD_FACTOR) -> bool:
    '''No term may outweigh the tensor by more than `guard`; border-rank fits blow this up'''
    return max_term_weight(dec) <= guard * frobenius_norm(T)


def als_fit(
    T: DenseTensor,
    r: int,
    starts: int = 16,
    seed: int = 0,
    fit_tol: float = 1e-8,
    guard: Optional[float] = GUARD_FACTOR,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int = 1,
) -> ALSFit:
    '''Multi-start ALS at a fixed number of terms; the first accepted start wins'''
    if r < 1:
        raise ValueError('ALS needs at least one term')
    X = T.numeric()
    norm = frobenius_norm(T)

    def run(start: int) -> ALSFit:
        factors = _random_factors(X.shape, r, seed, start)
        residual = _als_sweeps(X, factors, fit_tol, max_iter)
        dec = factors_to_decomposition(factors)
        weight = max_term_weight(dec)
        guarded = guard is None or weight <= guard * norm
        return ALSFit(r, dec, residual, weight, residual < fit_tol and guarded, start)

    fits: List[ALSFit] = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            fits = list(executor.map(run, range(starts)))
    else:
        for start in range(starts):
            fits.append(run(start))
            if fits[-1].accepted:
                break
    for fit in fits:
        if fit.accepted:
            return fit
    return min(fits, key=lambda fit: fit.residual)


def als_rank_upper(
    T: DenseTensor,
    r_cap: int,
    fit_tol: float = 1e-8,
    starts: int = 16,
    seed: int = 0,
    r_start: Optional[int] = None,
    guard: Optional[float] = GUARD_FACTOR,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int = 1,
) -> Optional[RankCertificate]:
    '''Smallest r <= r_cap with a guarded ALS fit, as a decomposition certificate'''
    if frobenius_norm(T) == 0:
        return certificate('decomposition-upper', 0, 'upper', decomposition=Decomposition(T.shape, []), method='zero')
    if T.order == 1:
        dec = Decomposition(T.shape, [RankOneTerm(1.0, (T.numeric(),))])
        return certificate('decomposition-upper', 1, 'upper', decomposition=dec, method='vector')
    if r_start is None:
        r_start = flattening_lower_bound(T).value
    for r in range(max(r_start, 1), r_cap + 1):
        fit = als_fit(T, r, starts, seed, fit_tol, guard, max_iter, threads)
        log(f'ALS r={r}: residual {fit.residual:.2e}, max term weight {fit.max_weight:.2e} '
            f'({"accepted" if fit.accepted else "rejected"})')
        if fit.accepted:
            return certificate(
                'decomposition-upper', len(fit.decomposition.nonzero_terms()), 'upper',
                decomposition=fit.decomposition,
                method='als',
                residual=fit.residual,
                fit_tol=fit_tol,
                guard_factor=guard,
                max_term_weight=fit.max_weight,
                start=fit.start,
            )
    return None
