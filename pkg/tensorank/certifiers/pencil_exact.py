from typing import Optional
from ..common import DenseTensor, log
from ..pencil import rank_mxnx2
from .common import RankCertificate, certificate


def applies(T: DenseTensor, max_denominator: Optional[int] = None) -> bool:
    return T.order == 3 and 2 in T.shape and (T.exact or max_denominator is not None)


def pencil_certificate(T: DenseTensor, max_denominator: Optional[int] = None) -> Optional[RankCertificate]:
    '''Exact rank of an m x n x 2 tensor from the Kronecker structure of its pencil'''
    if not applies(T, max_denominator):
        if T.order == 3 and 2 in T.shape:
            log('Skipping pencil certifier: numeric tensor without a denominator bound')
        return None
    rank, analysis = rank_mxnx2(T, max_denominator)
    structure = analysis.structure
    return certificate(
        'pencil-exact', rank, 'exact',
        label=analysis.certificate,
        column_minimal_indices=list(structure.column_minimal_indices),
        row_minimal_indices=list(structure.row_minimal_indices),
        regular_core_dim=structure.regular_core_dim,
        invariant_polynomials=[str(p.as_expr()) for p in structure.invariant_polynomials],
        witness=list(analysis.witness) if analysis.witness is not None else None,
        max_denominator=max_denominator,
    )
