import numpy as np
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple
from ..common import (
    DEFAULT_TOL, EXACT_ONE, Decomposition, DenseTensor, RankOneTerm, Scalar,
    basis_vector, frobenius_norm, identity_tensor, kronecker, numeric_term, tensor_product,
)
from ..generic import known_tables, max_rank_upper_bounds
from ..symmetric import symmetric_rank_rules, w3_square_decomposition, w_state, waring_w3kron_decomposition
from .common import RankCertificate, certificate


class NamedState(NamedTuple):
    name: str
    template: Callable[[], DenseTensor]
    # (lower, upper) rank bracket, equal when the rank is known
    rank: Tuple[int, int]
    construction: Optional[Callable[[], Decomposition]]
    # Number of terms in a symmetric decomposition, when there is one
    symmetric_terms: Optional[int]


class Recognition(NamedTuple):
    state: NamedState
    # T = scale * template
    scale: Scalar


def _basis_decomposition(shape: Tuple[int, ...], indices: List[Tuple[int, ...]]) -> Decomposition:
    return Decomposition(shape, [
        RankOneTerm(EXACT_ONE, tuple(basis_vector(n, i) for n, i in zip(shape, index)))
        for index in indices
    ])


def _ghz_state(n: int, d: int) -> NamedState:
    return NamedState(
        f'ghz:{n},{d}',
        lambda: identity_tensor(n, d),
        (n, n),
        lambda: _basis_decomposition((n,) * d, [(i,) * d for i in range(1, n + 1)]),
        n,
    )


def _w_named(d: int) -> NamedState:
    def construction() -> Decomposition:
        return _basis_decomposition((2,) * d, [tuple(2 if j == k else 1 for j in range(d)) for k in range(d)])
    return NamedState(f'w:{d}', lambda: w_state(d), (d, d), construction, d)


def _w3_cube() -> DenseTensor:
    W = w_state(3)
    return tensor_product(tensor_product(W, W), W)


def named_states(shape: Tuple[int, ...]) -> List[NamedState]:
    '''Named states with the given shape'''
    d = len(shape)
    states: List[NamedState] = []
    if d >= 2 and len(set(shape)) == 1 and shape[0] >= 2:
        states.append(_ghz_state(shape[0], d))
    if d >= 2 and set(shape) == {2}:
        states.append(_w_named(d))
    if shape == (4, 4, 4):
        states.append(NamedState(
            'wkron2', lambda: kronecker(w_state(3), w_state(3)), (7, 7), waring_w3kron_decomposition, 7,
        ))
    if shape == (2,) * 6:
        states.append(NamedState(
            'wsquare', lambda: tensor_product(w_state(3), w_state(3)), (8, 8), w3_square_decomposition, None,
        ))
    if shape == (2,) * 9:
        lower, upper = known_tables()['w3_cube_rank_bracket']
        states.append(NamedState('wcube', _w3_cube, (lower, upper), None, None))
    return states


def _scale(T: DenseTensor, template: DenseTensor, tol: float) -> Optional[Scalar]:
    anchor = next(idx for idx, x in np.ndenumerate(template.entries) if bool(x))
    if T.exact:
        c = T.entries[anchor] / template.entries[anchor]
        if not c:
            return None
        return c if bool(np.all(template.entries * c == T.entries)) else None
    X = T.numeric()
    c = complex(X[anchor] / template.numeric()[anchor])
    if c == 0:
        return None
    residual = np.linalg.norm(X - c * template.numeric())
    return c if residual <= tol * frobenius_norm(T) else None


def recognize(T: DenseTensor, tol: float = DEFAULT_TOL) -> Optional[Recognition]:
    for state in named_states(T.shape):
        scale = _scale(T, state.template(), tol)
        if scale is not None:
            return Recognition(state, scale)
    return None


def _scaled(dec: Decomposition, scale: Scalar, exact_entries: bool) -> Decomposition:
    if exact_entries:
        return Decomposition(dec.shape, [RankOneTerm(t.weight * scale, t.factors) for t in dec.terms])
    terms = [numeric_term(t) for t in dec.terms]
    return Decomposition(dec.shape, [RankOneTerm(t.weight * scale, t.factors) for t in terms])


def known_certificates(T: DenseTensor, tol: float = DEFAULT_TOL) -> Tuple[List[RankCertificate], List[str]]:
    '''Table values for a recognized named state, plus its explicit construction'''
    recognition = recognize(T, tol)
    if recognition is None:
        return [], []
    state, scale = recognition
    lower, upper = state.rank
    payload: Dict[str, object] = {'name': state.name, 'scale': scale}
    certs: List[RankCertificate] = []
    notes: List[str] = []
    if lower == upper:
        certs.append(certificate('table-known', lower, 'exact', **payload))
    else:
        certs.append(certificate('table-known', lower, 'lower', **payload))
        certs.append(certificate('table-known', upper, 'upper', **payload))
        notes.append(f'{state.name}: rank only bracketed, {lower} <= r <= {upper}')
    if state.construction is not None:
        dec = _scaled(state.construction(), scale, T.exact)
        certs.append(certificate(
            'decomposition-upper', len(dec), 'upper',
            decomposition=dec, method=f'construction:{state.name}', fit_tol=0.0 if T.exact else tol,
        ))
    if state.symmetric_terms is not None:
        notes.extend(symmetric_rank_rules(T.order, state.symmetric_terms))
    return certs, notes


def max_rank_certificate(T: DenseTensor) -> RankCertificate:
    bound = max_rank_upper_bounds(T.shape)
    return certificate(
        'table-known', bound.value, 'upper',
        name='max-rank', bounds=[[label, value] for label, value in bound.bounds],
    )


def recheck_known(T: DenseTensor, cert: RankCertificate) -> bool:
    name = cert.payload.get('name')
    if name == 'max-rank':
        return max_rank_upper_bounds(T.shape).value == cert.value
    recognition = recognize(T)
    if recognition is None or recognition.state.name != name:
        return False
    lower, upper = recognition.state.rank
    if cert.direction == 'exact':
        return lower == upper == cert.value
    return cert.value == (lower if cert.direction == 'lower' else upper)
