import numpy as np
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple
from numpy.typing import NDArray
from ..common import (
    CertificateError, Decomposition, DenseTensor, RankOneTerm, TensorError,
    allclose, evaluate, exact_parts, frobenius_norm, is_exact_scalar, log, numeric_term,
)


CERTIFICATE_KINDS = (
    'flattening-lower', 'pencil-exact', 'decomposition-upper',
    'kruskal-exact', 'determinant-lower', 'table-known',
)
# Which side of the rank a certificate bounds
DIRECTIONS = ('lower', 'upper', 'exact')


class RankCertificate(NamedTuple):
    kind: str
    value: int
    direction: str
    # Kind-specific evidence, re-checked by verify()
    payload: Dict[str, Any]

    @property
    def computed(self) -> bool:
        return self.kind != 'table-known'


class RankReport(NamedTuple):
    lower: int
    upper: int
    exact: Optional[int]
    certificates: List[RankCertificate]
    notes: List[str]


def certificate(kind: str, value: int, direction: str, **payload: Any) -> RankCertificate:
    if kind not in CERTIFICATE_KINDS:
        raise ValueError(f'Unknown certificate kind: {kind}')
    if direction not in DIRECTIONS:
        raise ValueError(f'Unknown certificate direction: {direction}')
    return RankCertificate(kind, int(value), direction, payload)


def _bounds(certificates: Iterable[RankCertificate], lower: int, upper: int) -> Tuple[int, int]:
    for cert in certificates:
        if cert.direction in {'lower', 'exact'}:
            lower = max(lower, cert.value)
        if cert.direction in {'upper', 'exact'}:
            upper = min(upper, cert.value)
    return lower, upper


def merge_certificates(
    certificates: Sequence[RankCertificate],
    upper: int,
    lower: int = 0,
    notes: Sequence[str] = (),
) -> RankReport:
    '''Combine computed evidence first, then check known values against it'''
    computed = [c for c in certificates if c.computed]
    known = [c for c in certificates if not c.computed]
    lo, hi = _bounds(computed, lower, upper)
    if lo > hi:
        raise CertificateError(f'Computed rank bounds contradict each other: {lo} > {hi}')

    for cert in known:
        if cert.direction in {'lower', 'exact'} and cert.value > hi:
            raise CertificateError(f'Known value {cert.value} ({cert.payload.get("name")}) exceeds computed upper {hi}')
        if cert.direction in {'upper', 'exact'} and cert.value < lo:
            raise CertificateError(f'Known value {cert.value} ({cert.payload.get("name")}) is below computed lower {lo}')
    lo, hi = _bounds(known, lo, hi)
    return RankReport(lo, hi, lo if lo == hi else None, list(certificates), list(notes))


# Verification

def _fits(T: DenseTensor, dec: Decomposition, tol: float) -> bool:
    if T.shape != dec.shape:
        return False
    approx = evaluate(dec)
    if T.exact and approx.exact:
        return allclose(approx, T)
    norm = frobenius_norm(T)
    residual = float(np.linalg.norm(approx.numeric() - T.numeric()))
    return residual <= tol * max(norm, 1.0)


def _verify_decomposition(T: DenseTensor, cert: RankCertificate) -> bool:
    dec: Decomposition = cert.payload['decomposition']
    if len(dec.nonzero_terms()) > cert.value:
        return False
    if not _fits(T, dec, cert.payload.get('fit_tol', 0.0)):
        return False
    guard = cert.payload.get('guard_factor')
    if guard is not None:
        from .als import within_guard
        return within_guard(dec, T, guard)
    return True


def _verify_flattening(T: DenseTensor, cert: RankCertificate) -> bool:
    from .flattening import flattening_rank
    source = _regrouped(T, cert.payload)
    return flattening_rank(source, cert.payload['modes']) == cert.value


def _verify_pencil(T: DenseTensor, cert: RankCertificate) -> bool:
    from ..pencil import rank_mxnx2
    rank, _ = rank_mxnx2(T, cert.payload.get('max_denominator'))
    return rank == cert.value


def _verify_kruskal(T: DenseTensor, cert: RankCertificate) -> bool:
    from .kruskal import kruskal_certificate
    dec: Decomposition = cert.payload['decomposition']
    if not _fits(T, dec, cert.payload.get('fit_tol', 0.0)):
        return False
    recomputed = kruskal_certificate(dec, cert.payload.get('tol'))
    return recomputed is not None and recomputed.value == cert.value


def _verify_determinant(T: DenseTensor, cert: RankCertificate) -> bool:
    from .determinant import determinant_lower_bound
    source = _regrouped(T, cert.payload)
    # fresh points, same slice choice
    recomputed = determinant_lower_bound(
        source, cert.payload['mode'], cert.payload['affine_slice'], seed=cert.payload.get('seed', 0) + 1,
    )
    return recomputed is not None and recomputed.value == cert.value


def _verify_known(T: DenseTensor, cert: RankCertificate) -> bool:
    from .known import recheck_known
    return recheck_known(T, cert)


def _regrouped(T: DenseTensor, payload: Dict[str, Any]) -> DenseTensor:
    groups = payload.get('groups')
    if groups is None:
        return T
    from ..common import regroup_modes
    return regroup_modes(T, groups)


_VERIFIERS = {
    'flattening-lower': _verify_flattening,
    'pencil-exact': _verify_pencil,
    'decomposition-upper': _verify_decomposition,
    'kruskal-exact': _verify_kruskal,
    'determinant-lower': _verify_determinant,
    'table-known': _verify_known,
}


def verify(T: DenseTensor, cert: RankCertificate) -> bool:
    '''Re-check a certificate from the raw tensor'''
    try:
        ok = _VERIFIERS[cert.kind](T, cert)
    except (KeyError, TensorError, CertificateError) as err:
        log(f'Certificate {cert.kind} failed to verify: {err!r}')
        return False
    if not ok:
        log(f'Certificate {cert.kind} (value {cert.value}) failed to verify')
    return ok


# Serialization

def _scalar_to_json(x: Any) -> List[Any]:
    if is_exact_scalar(x):
        re, im = exact_parts(x)
        return [re.numerator, re.denominator, im.numerator, im.denominator]
    z = complex(x)
    return [z.real, z.imag]


def _vector_to_json(v: NDArray[Any]) -> List[List[Any]]:
    return [_scalar_to_json(x) for x in v]


def term_to_json(term: RankOneTerm) -> Dict[str, Any]:
    if not term.exact:
        term = numeric_term(term)
    return {'weight': _scalar_to_json(term.weight), 'factors': [_vector_to_json(f) for f in term.factors]}


def _payload_to_json(value: Any) -> Any:
    if isinstance(value, Decomposition):
        return {'shape': list(value.shape), 'terms': [term_to_json(t) for t in value.terms]}
    if isinstance(value, dict):
        return {str(k): _payload_to_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_payload_to_json(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_payload_to_json(v) for v in value.tolist()]
    if is_exact_scalar(value) or isinstance(value, complex):
        return _scalar_to_json(value)
    if isinstance(value, np.generic):
        return value.item()
    return value


def certificate_to_json(cert: RankCertificate) -> Dict[str, Any]:
    return {
        'kind': cert.kind,
        'value': cert.value,
        'direction': cert.direction,
        'payload': _payload_to_json(cert.payload),
    }


def report_to_json(report: RankReport) -> Dict[str, Any]:
    return {
        'lower': report.lower,
        'upper': report.upper,
        'exact': report.exact,
        'certificates': [certificate_to_json(c) for c in report.certificates],
        'notes': list(report.notes),
    }
