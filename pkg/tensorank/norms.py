import numpy as np
from concurrent.futures import ThreadPoolExecutor
from math import log2, sqrt
from typing import Any, List, NamedTuple, Optional, Tuple
from numpy.typing import NDArray
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize
from .common import (
    CertificateError, Decomposition, DenseTensor, RankOneTerm, TensorError,
    evaluate, flatten, shape_size, log,
)


PRICE_TOL = 1e-9
NORMALIZED_TOL = 1e-10
W3_ZETA = np.exp(2j * np.pi / 9)

Factors = List[NDArray[np.complex128]]


class SpectralResult(NamedTuple):
    value: float
    # Unit factors, weight 1
    maximizer: RankOneTerm
    # Number of starts that reached `value` within the relative tolerance
    starts_converged: int
    iterations: int
    starts: int = 1

    @property
    def accepted(self) -> bool:
        return 2 * self.starts_converged >= self.starts


class NuclearResult(NamedTuple):
    primal_value: float
    decomposition: Decomposition
    dual_value: float
    dual_witness: DenseTensor
    gap: float
    verified: bool


class NuclearRank(NamedTuple):
    rank: int
    # Always True, the count is upper-bound evidence only
    heuristic: bool


class EntanglementMeasures(NamedTuple):
    eta: float
    eta_upper: float
    schmidt_measure: Optional[float]
    geometric_measure: float
    spectral: float


def _numeric(T: DenseTensor) -> NDArray[np.complex128]:
    X = np.asarray(T.numeric(), dtype=np.complex128)
    if not np.any(X):
        raise TensorError('Norm of the zero tensor is not defined here')
    return X


def _partial_contraction(X: NDArray[np.complex128], factors: Factors, keep: int) -> NDArray[np.complex128]:
    '''Contract every mode but `keep` against the conjugated factors'''
    out = X
    for j in reversed(range(X.ndim)):
        if j != keep:
            out = np.tensordot(out, factors[j].conj(), axes=([j], [0]))
    return out


def _overlap(X: NDArray[np.complex128], factors: Factors) -> complex:
    out: Any = X
    for j in reversed(range(X.ndim)):
        out = np.tensordot(out, factors[j].conj(), axes=([j], [0]))
    return complex(out)


def _unit(v: NDArray[np.complex128]) -> NDArray[np.complex128]:
    return v / np.linalg.norm(v)


def _hosvd_start(X: NDArray[np.complex128]) -> Factors:
    factors = []
    for k in range(X.ndim):
        U, _, _ = np.linalg.svd(np.moveaxis(X, k, 0).reshape(X.shape[k], -1), full_matrices=False)
        factors.append(U[:, 0].astype(np.complex128))
    return factors


def _random_start(shape: Tuple[int, ...], seed: int, start: int) -> Factors:
    rng = np.random.default_rng(np.random.SeedSequence([seed, start]))
    return [_unit(rng.standard_normal(n) + 1j * rng.standard_normal(n)) for n in shape]


def _hopm(X: NDArray[np.complex128], factors: Factors, tol: float, max_iter: int) -> Tuple[float, Factors, int]:
    value = 0.0
    iterations = 0
    for iterations in range(1, max_iter + 1):
        for k in range(X.ndim):
            v = _partial_contraction(X, factors, k)
            norm = float(np.linalg.norm(v))
            if norm == 0:
                return 0.0, factors, iterations
            factors[k] = v / norm
        converged = abs(norm - value) <= tol * max(1.0, norm)
        value = norm
        if converged:
            break
    return value, factors, iterations


def _hopm_runs(
    X: NDArray[np.complex128], starts: int, tol: float, max_iter: int, seed: int, threads: int = 1,
) -> List[Tuple[float, Factors, int]]:
    def run(start: int) -> Tuple[float, Factors, int]:
        factors = _hosvd_start(X) if start == 0 else _random_start(X.shape, seed, start)
        return _hopm(X, factors, tol, max_iter)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, range(starts)))
    return [run(s) for s in range(starts)]


def spectral_norm(
    T: DenseTensor, starts: int = 64, tol: float = 1e-12, max_iter: int = 2000, seed: int = 0, threads: int = 1,
) -> SpectralResult:
    '''Multi-start alternating power iteration; the value is always a lower bound on the norm

    Starts agree when within relative `tol` of the best value, which is also the
    convergence threshold of each start.
    '''
    X = _numeric(T)
    if X.ndim == 1:
        norm = float(np.linalg.norm(X))
        return SpectralResult(norm, RankOneTerm(1.0 + 0j, (X / norm,)), 1, 0, 1)
    if X.ndim == 2:
        U, s, Vh = np.linalg.svd(X)
        return SpectralResult(float(s[0]), RankOneTerm(1.0 + 0j, (U[:, 0], Vh[0])), 1, 0, 1)

    runs = _hopm_runs(X, starts, tol, max_iter, seed, threads)
    best, factors, _ = max(runs, key=lambda run: run[0])
    agree = sum(1 for value, _, _ in runs if abs(value - best) <= tol * best)
    return SpectralResult(best, RankOneTerm(1.0 + 0j, tuple(factors)), agree, sum(r[2] for r in runs), starts)


def _slice_matrix(X: NDArray[np.complex128], theta: float, phi: float) -> NDArray[np.complex128]:
    x = np.array([np.cos(theta), np.exp(1j * phi) * np.sin(theta)])
    return x[0].conj() * X[0] + x[1].conj() * X[1]


def _slice_sweep(X: NDArray[np.complex128], objective: Any, resolution: int) -> Tuple[NDArray[np.float64], int]:
    thetas = np.linspace(0, np.pi / 2, resolution)
    phis = np.linspace(0, 2 * np.pi, 2 * resolution, endpoint=False)
    grid = [(objective(t, p), t, p) for t in thetas for p in phis]
    _, t0, p0 = max(grid)
    res = minimize(
        lambda q: -objective(q[0], q[1]), np.array([t0, p0]), method='Nelder-Mead',
        options={'xatol': 1e-12, 'fatol': 1e-15, 'maxiter': 4000},
    )
    if -res.fun < objective(t0, p0):
        return np.array([t0, p0]), 0
    return res.x, int(res.nit)


def _check_2slice(T: DenseTensor) -> NDArray[np.complex128]:
    if T.order != 3 or T.shape[0] != 2:
        raise TensorError(f'Two-slice sweep needs shape (2,m,n), got {T.shape}')
    return _numeric(T)


def spectral_norm_2slice(T: DenseTensor, resolution: int = 64) -> SpectralResult:
    X = _check_2slice(T)
    (theta, phi), iterations = _slice_sweep(
        X, lambda t, p: float(np.linalg.norm(_slice_matrix(X, t, p), 2)), resolution)
    U, s, Vh = np.linalg.svd(_slice_matrix(X, theta, phi))
    x = np.array([np.cos(theta), np.exp(1j * phi) * np.sin(theta)])
    return SpectralResult(float(s[0]), RankOneTerm(1.0 + 0j, (x, U[:, 0], Vh[0])), 1, iterations, 1)


def slice_trace_witness(T: DenseTensor, resolution: int = 32) -> DenseTensor:
    '''x (x) U V^H at the maximum of the slice trace norm, a unit-spectral-norm dual witness'''
    X = _check_2slice(T)
    (theta, phi), _ = _slice_sweep(
        X, lambda t, p: float(np.linalg.norm(_slice_matrix(X, t, p), 'nuc')), resolution)
    U, _, Vh = np.linalg.svd(_slice_matrix(X, theta, phi), full_matrices=False)
    x = np.array([np.cos(theta), np.exp(1j * phi) * np.sin(theta)])
    return DenseTensor(np.multiply.outer(x, U @ Vh))


def symmetric_spectral_norm(
    S: DenseTensor, starts: int = 16, tol: float = 1e-12, max_iter: int = 5000, seed: int = 0,
) -> SpectralResult:
    from .symmetric import is_symmetric
    if not is_symmetric(S):
        raise TensorError('Symmetric spectral norm needs a symmetric tensor')
    X = _numeric(S)
    d, n = X.ndim, X.shape[0]
    warm = spectral_norm(S, starts=8, seed=seed).maximizer.factors[0]

    best_value, best_x, total = -1.0, warm, 0
    values = []
    for start in range(starts):
        x = warm.copy() if start == 0 else _random_start((n,), seed, start)[0]
        value = 0.0
        for it in range(1, max_iter + 1):
            v = _partial_contraction(X, [x] * d, 0)
            norm = float(np.linalg.norm(v))
            if norm == 0:
                break
            x = v / norm
            new = abs(_overlap(X, [x] * d))
            if abs(new - value) <= tol * max(1.0, new):
                value = new
                break
            value = new
        total += it
        values.append(value)
        if value > best_value:
            best_value, best_x = value, x
    agree = sum(1 for v in values if abs(v - best_value) <= tol * best_value)
    return SpectralResult(best_value, RankOneTerm(1.0 + 0j, (best_x,) * d), agree, total, starts)


def nuclear_lower_bound_flatten(T: DenseTensor) -> float:
    '''Largest matrix trace norm over single-mode flattenings'''
    X = DenseTensor(T.numeric())
    if T.order == 1:
        return float(np.linalg.norm(X.entries))
    return max(float(np.linalg.norm(flatten(X, [k]), 'nuc')) for k in range(T.order))


def _dual_value(X: NDArray[np.complex128], W: NDArray[np.complex128], w_norm: float) -> float:
    return float(np.vdot(W, X).real) / w_norm


def _atom(factors: Factors) -> NDArray[np.complex128]:
    out = factors[0]
    for f in factors[1:]:
        out = np.multiply.outer(out, f)
    return out.reshape(-1)


def _basis_atoms(shape: Tuple[int, ...]) -> List[Factors]:
    atoms = []
    for idx in np.ndindex(*shape):
        for phase in (1, 1j, -1, -1j):
            factors = [np.eye(n, dtype=np.complex128)[i] for n, i in zip(shape, idx)]
            factors[0] = phase * factors[0]
            atoms.append(factors)
    return atoms


def _reduce_support(A: NDArray[np.float64], lam: NDArray[np.float64]) -> NDArray[np.float64]:
    '''Drop linearly dependent atoms while keeping A @ lam fixed'''
    lam = lam.copy()
    while True:
        support = np.nonzero(lam > 0)[0]
        if len(support) < 2:
            return lam
        Z = null_space(A[:, support])
        if Z.shape[1] == 0:
            return lam
        z = Z[:, 0]
        if not np.any(z > 1e-12):
            z = -z
        pos = z > 1e-12
        step = float(np.min(lam[support][pos] / z[pos]))
        hit = support[pos][int(np.argmin(lam[support][pos] / z[pos]))]
        lam[support] = lam[support] - step * z
        lam[hit] = 0
        lam[lam < 1e-14] = 0


def nuclear_norm(
    T: DenseTensor,
    r_max_terms: Optional[int] = None,
    tol: float = 1e-6,
    starts: int = 16,
    seed: int = 0,
    max_rounds: int = 100,
    threads: int = 1,
) -> NuclearResult:
    '''Column generation over unit product states with an LP master problem'''
    X = _numeric(T)
    shape = X.shape

    if X.ndim == 1:
        norm = float(np.linalg.norm(X))
        dec = Decomposition(shape, [RankOneTerm(complex(norm), (X / norm,))])
        return NuclearResult(norm, dec, norm, DenseTensor(X / norm), 0.0, True)
    if X.ndim == 2:
        U, s, Vh = np.linalg.svd(X, full_matrices=False)
        keep = s > 1e-14 * s[0]
        terms = [RankOneTerm(complex(s[i]), (U[:, i], Vh[i])) for i in np.nonzero(keep)[0]]
        W = (U[:, keep] @ Vh[keep]).reshape(shape)
        primal = float(np.sum(s))
        dual = _dual_value(X, W, 1.0)
        return NuclearResult(primal, Decomposition(shape, terms), dual, DenseTensor(W), primal - dual, True)

    N = X.size
    b = np.concatenate([X.reshape(-1).real, X.reshape(-1).imag])

    self_runs = _hopm_runs(X, starts, 1e-13, 2000, seed, threads)
    self_norm = max(r[0] for r in self_runs)
    witnesses = [(_dual_value(X, X, self_norm), X)]
    if X.ndim == 3 and shape[0] == 2:
        Ws = slice_trace_witness(T).entries
        witnesses.append((_dual_value(X, Ws, spectral_norm(DenseTensor(Ws), starts=starts, seed=seed).value), Ws))

    atoms: List[Factors] = _basis_atoms(shape) + [list(f) for _, f, _ in self_runs]
    columns = [_atom(f) for f in atoms]

    def add_atoms(runs: List[Tuple[float, Factors, int]], threshold: float) -> int:
        added = 0
        for value, factors, _ in runs:
            if value <= threshold:
                continue
            vec = _atom(factors)
            if any(np.linalg.norm(vec - c) < 1e-10 for c in columns):
                continue
            atoms.append(list(factors))
            columns.append(vec)
            added += 1
        return added

    res = None
    for round_ in range(max_rounds):
        C = np.stack(columns, axis=1)
        A = np.concatenate([C.real, C.imag])
        res = linprog(np.ones(A.shape[1]), A_eq=A, b_eq=b, bounds=(0, None), method='highs')
        if res.status != 0:
            raise CertificateError(f'Nuclear master LP failed: {res.message}')
        y = np.asarray(res.eqlin.marginals)
        W = (y[:N] + 1j * y[N:]).reshape(shape)
        runs = _hopm_runs(W, max(4, starts // 2), 1e-13, 2000, seed + round_ + 1, threads)
        price = max(r[0] for r in runs)
        if price > 0:
            witnesses.append((_dual_value(X, W, price), W))
        best_dual = max(w[0] for w in witnesses)
        log(f'Nuclear round {round_}: primal {res.fun:.12f}, price {price:.12f}, dual {best_dual:.12f}')
        if res.fun - best_dual <= 1e-3 * tol or price <= 1 + PRICE_TOL:
            break
        if add_atoms(runs, 1 + PRICE_TOL) == 0:
            break

    assert res is not None
    C = np.stack(columns, axis=1)
    A = np.concatenate([C.real, C.imag])
    lam = np.where(res.x > 1e-12 * np.max(res.x), res.x, 0)
    lam = _reduce_support(A, lam)
    terms = [RankOneTerm(complex(lam[i]), tuple(atoms[i])) for i in np.nonzero(lam)[0]]
    primal = float(np.sum(lam))
    dual, W = max(witnesses, key=lambda w: w[0])
    gap = primal - dual
    verified = gap <= tol and (r_max_terms is None or len(terms) <= r_max_terms)
    if not verified:
        log(f'Nuclear norm unverified: gap {gap:.3e} with {len(terms)} terms')
    return NuclearResult(primal, Decomposition(shape, terms), dual, DenseTensor(W), gap, verified)


def nuclear_result_from_decomposition(T: DenseTensor, dec: Decomposition, starts: int = 16, seed: int = 0) -> NuclearResult:
    '''Wrap a known decomposition, certified by the witness W = T'''
    X = _numeric(T)
    if np.linalg.norm(evaluate(dec).numeric() - X) > 1e-9 * np.linalg.norm(X):
        raise CertificateError('Decomposition does not reproduce the tensor')
    primal = dec.energy()
    dual = _dual_value(X, X, spectral_norm(T, starts=starts, seed=seed).value)
    gap = primal - dual
    return NuclearResult(primal, dec, dual, DenseTensor(X), gap, gap <= 1e-6)


def nuclear_rank_estimate(result: NuclearResult) -> NuclearRank:
    weights = [abs(t.weight) * float(np.prod([np.linalg.norm(f) for f in t.factors]))
               for t in result.decomposition.terms]
    if not weights:
        return NuclearRank(0, True)
    top = max(weights)
    return NuclearRank(sum(1 for w in weights if w > 1e-8 * top), True)


def w3_nuclear_decomposition(zeta: complex = W3_ZETA) -> Decomposition:
    '''Three unit symmetric terms of weight 1/2 summing to the normalized W state'''
    terms = []
    for z in (1, zeta, np.conj(zeta)):
        u = np.array([sqrt(2 / 3) * z, np.conj(z)**2 / sqrt(3)], dtype=np.complex128)
        terms.append(RankOneTerm(0.5 + 0j, (u, u, u)))
    return Decomposition((2, 2, 2), terms)


def w3_nuclear_residual(zeta: complex = W3_ZETA) -> Tuple[float, float]:
    '''(reconstruction error, energy)'''
    from .symmetric import w_state
    dec = w3_nuclear_decomposition(zeta)
    target = w_state(3).numeric() / sqrt(3)
    return float(np.linalg.norm(evaluate(dec).numeric() - target)), dec.energy()


def verify_w3_nuclear_decomposition(zeta: complex = W3_ZETA, tol: float = 1e-12) -> bool:
    error, energy = w3_nuclear_residual(zeta)
    return error <= tol and abs(energy - 1.5) <= tol


def geometric_measure(T: DenseTensor, spectral: Optional[float] = None) -> float:
    if spectral is None:
        spectral = spectral_norm(T).value
    return sqrt(max(0.0, 2 * (1 - spectral)))


def entanglement_measures(
    T: DenseTensor, rank_hint: Optional[int] = None, starts: int = 64, seed: int = 0,
) -> EntanglementMeasures:
    X = _numeric(T)
    if abs(np.linalg.norm(X) - 1) > NORMALIZED_TOL:
        raise TensorError('Entanglement measures need a normalized tensor')
    sigma = spectral_norm(T, starts=starts, seed=seed).value
    eta = max(0.0, -log2(sigma**2))
    eta_upper = log2(shape_size(T.shape) / max(T.shape))
    schmidt = log2(rank_hint) if rank_hint else None
    return EntanglementMeasures(eta, eta_upper, schmidt, geometric_measure(T, sigma), sigma)
