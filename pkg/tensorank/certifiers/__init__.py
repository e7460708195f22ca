from typing import Any, Callable, List, Optional, Sequence
from time import perf_counter as clock
from ..common import (
    CertificateError, DenseTensor, direct_sum, frobenius_norm, kronecker, log, regroup_modes,
)
from .common import RankCertificate, RankReport, merge_certificates, verify
from .flattening import flattening_lower_bound
from .pencil_exact import pencil_certificate
from .als import GUARD_FACTOR, als_rank_upper
from .kruskal import MAX_KRUSKAL_VECTORS, kruskal_certificate
from .determinant import determinant_lower_bound
from .known import known_certificates, max_rank_certificate
from .strassen import AdditivityEvidence, additivity_reasons


# Largest slice size tried by the determinant search inside reports
MAX_DETERMINANT_DIM = 8


def _timed(name: str, producer: Callable[[], Optional[RankCertificate]]) -> Optional[RankCertificate]:
    t_start = clock()
    cert = producer()
    t_finish = clock()
    summary = 'nothing' if cert is None else f'{cert.direction} {cert.value}'
    log(f'Certifier {name}: {summary} in {t_finish - t_start:.3f} seconds')
    return cert


def kronecker_groups(order: int) -> Optional[List[List[int]]]:
    '''Modes {j, j+3, ...} merged, the 3-mode view of a 3k-mode Kronecker power'''
    if order <= 3 or order % 3:
        return None
    return [list(range(j, order, 3)) for j in range(3)]


def _regrouped_determinant(T: DenseTensor, groups: Optional[List[List[int]]]) -> Optional[RankCertificate]:
    source = regroup_modes(T, groups) if groups is not None else T
    if source.order != 3 or not source.exact or max(source.shape) > MAX_DETERMINANT_DIM:
        return None
    cert = determinant_lower_bound(source)
    if cert is not None and groups is not None:
        cert.payload['groups'] = groups
    return cert


def rank_report(
    T: DenseTensor,
    r_cap: Optional[int] = None,
    max_denominator: Optional[int] = None,
    fit_tol: float = 1e-8,
    starts: int = 16,
    seed: int = 0,
    threads: int = 1,
    run_als: bool = True,
    verify_certificates: bool = False,
) -> RankReport:
    '''Collect every applicable certificate for T and merge them into rank bounds'''
    t_start = clock()
    if frobenius_norm(T) == 0:
        log('Zero tensor has rank 0')
        return RankReport(0, 0, 0, [], [])

    certs: List[RankCertificate] = []
    notes: List[str] = []

    def add(name: str, producer: Callable[[], Optional[RankCertificate]]) -> None:
        cert = _timed(name, producer)
        if cert is not None:
            certs.append(cert)

    add('flattening', lambda: flattening_lower_bound(T))
    groups = kronecker_groups(T.order)
    if groups is not None:
        add('kronecker-flattening', lambda: flattening_lower_bound(T, groups))
        add('kronecker-determinant', lambda: _regrouped_determinant(T, groups))
    add('pencil', lambda: pencil_certificate(T, max_denominator))
    if T.order == 3 and not any(c.direction == 'exact' for c in certs):
        add('determinant', lambda: _regrouped_determinant(T, None))

    known, known_notes = known_certificates(T)
    certs += known
    notes += known_notes
    cap = max_rank_certificate(T)
    certs.append(cap)
    log(f'Known values: {len(known)} certificates, max-rank cap {cap.value}')

    interim = merge_certificates(certs, cap.value, notes=notes)
    if interim.exact is None and run_als and T.order >= 2:
        limit = interim.upper - 1 if r_cap is None else min(r_cap, interim.upper - 1)
        add('als', lambda: als_rank_upper(
            T, limit, fit_tol, starts, seed, r_start=interim.lower, threads=threads,
        ))

    if T.order >= 3:
        for dec_cert in [c for c in certs if c.kind == 'decomposition-upper']:
            dec = dec_cert.payload['decomposition']
            if 0 < len(dec) <= MAX_KRUSKAL_VECTORS:
                add('kruskal', lambda: kruskal_certificate(dec, fit_tol=dec_cert.payload.get('fit_tol')))
                break

    report = merge_certificates(certs, cap.value, notes=notes)
    if verify_certificates:
        for cert in report.certificates:
            if not verify(T, cert):
                raise CertificateError(f'Certificate {cert.kind} with value {cert.value} does not re-verify')
    t_finish = clock()
    exact_text = f'exact {report.exact}' if report.exact is not None else 'not exact'
    log(f'Rank of {T.shape}: {report.lower} <= r <= {report.upper} ({exact_text}) in {t_finish - t_start:.3f} seconds')
    return report


def _evidence(report: RankReport) -> AdditivityEvidence:
    flattening = max(
        (c.value for c in report.certificates if c.kind == 'flattening-lower' and 'groups' not in c.payload),
        default=0,
    )
    return AdditivityEvidence(flattening, report.upper)


def direct_sum_report(T: DenseTensor, U: DenseTensor, **options: Any) -> RankReport:
    '''Report on T + U (direct sum), tightened by subadditivity and, when a sufficient condition holds, additivity'''
    report_t = rank_report(T, **options)
    report_u = rank_report(U, **options)
    report = rank_report(direct_sum(T, U), **options)
    lower, upper, notes = report.lower, report.upper, list(report.notes)
    bound = report_t.upper + report_u.upper
    if lower > bound:
        raise CertificateError(f'Direct sum lower bound {lower} exceeds {report_t.upper} + {report_u.upper}')
    if upper > bound:
        notes.append(f'subadditivity: r <= {report_t.upper} + {report_u.upper}')
        upper = bound
    if T.order == 3 and report_t.exact is not None and report_u.exact is not None:
        reasons = additivity_reasons(T.shape, U.shape, _evidence(report_t), _evidence(report_u))
        if reasons:
            total = report_t.exact + report_u.exact
            if not lower <= total <= upper:
                raise CertificateError(f'Additive rank {total} outside [{lower}, {upper}]')
            notes.append(f'additivity holds ({"; ".join(reasons)}): r = {total}')
            lower = upper = total
    return RankReport(lower, upper, lower if lower == upper else None, report.certificates, notes)


def kronecker_audit(T: DenseTensor, U: DenseTensor, **options: Any) -> bool:
    '''Upper bound of T (x)K U never exceeds the product of the factor bounds'''
    product = rank_report(kronecker(T, U), **options)
    return product.upper <= rank_report(T, **options).upper * rank_report(U, **options).upper


__all__: Sequence[str] = (
    'GUARD_FACTOR', 'RankCertificate', 'RankReport', 'direct_sum_report', 'kronecker_audit',
    'kronecker_groups', 'rank_report', 'verify',
)
