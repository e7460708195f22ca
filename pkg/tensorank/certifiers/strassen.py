from itertools import permutations
from typing import List, NamedTuple, Optional, Sequence
from ..common import Shape, check_shape


class AdditivityEvidence(NamedTuple):
    # Largest single-mode flattening rank
    flattening: int
    # Best known upper bound on the rank
    rank_upper: int


def _check_3mode(shape: Sequence[int]) -> Shape:
    shape = check_shape(shape)
    if len(shape) != 3:
        raise ValueError(f'Additivity conditions are stated for 3-mode shapes, got {shape}')
    return shape


def _product_gap(shape: Shape) -> List[int]:
    return [shape[i] * shape[j] - shape[k] for i, j, k in permutations(range(3))]


def _rank_conditions(evidence: Optional[AdditivityEvidence]) -> List[str]:
    if evidence is None:
        return []
    reasons = []
    if evidence.rank_upper <= 6:
        reasons.append('rank at most 6')
    if evidence.flattening + 2 >= evidence.rank_upper:
        reasons.append('flattening rank within 2 of the rank')
    return reasons


def additivity_reasons(
    n: Sequence[int],
    p: Sequence[int],
    evidence_n: Optional[AdditivityEvidence] = None,
    evidence_p: Optional[AdditivityEvidence] = None,
) -> List[str]:
    '''Sufficient conditions for r(T + U) = r(T) + r(U) that hold for these shapes'''
    n, p = _check_3mode(n), _check_3mode(p)
    reasons = []
    if 2 in n + p:
        reasons.append('a mode of size 2')
    if 2 in _product_gap(n) + _product_gap(p):
        reasons.append('n_i n_j - n_k = 2')
    if n.count(3) >= 2 or p.count(3) >= 2:
        reasons.append('a summand of shape (k,3,3)')
    reasons += _rank_conditions(evidence_n) + _rank_conditions(evidence_p)
    return reasons


def strassen_condition(
    n: Sequence[int],
    p: Sequence[int],
    evidence_n: Optional[AdditivityEvidence] = None,
    evidence_p: Optional[AdditivityEvidence] = None,
) -> bool:
    return bool(additivity_reasons(n, p, evidence_n, evidence_p))
