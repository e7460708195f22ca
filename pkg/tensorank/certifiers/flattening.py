from typing import Dict, Optional, Sequence
from ..common import DEFAULT_TOL, DenseTensor, Modes, flatten, flattening_splits, matrix_rank, regroup_modes
from .common import RankCertificate, certificate


def flattening_rank(T: DenseTensor, left_modes: Sequence[int]) -> int:
    if T.order == 1:
        return int(any(bool(x) for x in T.entries.flat))
    M = flatten(T, left_modes)
    return matrix_rank(M, None if T.exact else DEFAULT_TOL)


def flattening_lower_bound(T: DenseTensor, groups: Optional[Sequence[Sequence[int]]] = None) -> RankCertificate:
    '''max matrix rank over single-mode flattenings, and balanced splits when d = 4

    With `groups`, the bound is taken on the regrouped tensor, which never
    has larger rank than T.
    '''
    source = regroup_modes(T, groups) if groups is not None else T
    if source.order == 1:
        direction = 'exact' if groups is None else 'lower'
        return certificate('flattening-lower', flattening_rank(source, ()), direction, modes=(), ranks={})

    ranks: Dict[Modes, int] = {}
    for split in flattening_splits(source.order):
        ranks[split] = flattening_rank(source, split)
    best = max(ranks, key=lambda split: ranks[split])
    # a matrix has tensor rank equal to its matrix rank
    direction = 'exact' if source.order == 2 and groups is None else 'lower'
    payload = {
        'modes': best,
        'ranks': {','.join(map(str, split)): r for split, r in ranks.items()},
    }
    if groups is not None:
        payload['groups'] = [list(g) for g in groups]
    return certificate('flattening-lower', ranks[best], direction, **payload)
