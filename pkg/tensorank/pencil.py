import numpy as np
from sympy import Poly, Symbol
from sympy.polys.domains import QQ_I
from typing import List, NamedTuple, Optional, Sequence, Tuple
from .common import (
    CertificateError, DenseTensor, Matrix, TensorError, EXACT_ZERO,
    exact, exact_determinant, matrix_rank, permute_modes, to_exact, log,
)


T_SYMBOL = Symbol('t')


class Pencil(NamedTuple):
    # Frontal slices over QQ_I, both m x n
    A: Matrix
    B: Matrix

    @property
    def shape(self) -> Tuple[int, int]:
        return self.A.shape

    def combination(self, a: int, b: int) -> Matrix:
        return self.A * exact(a) + self.B * exact(b)

    def transpose(self) -> 'Pencil':
        return Pencil(self.A.T.copy(), self.B.T.copy())


class KroneckerStructure(NamedTuple):
    # Including zero indices (zero columns/rows of the pencil)
    column_minimal_indices: Tuple[int, ...]
    row_minimal_indices: Tuple[int, ...]
    regular_core_dim: int
    # Monic, nontrivial, p_{i+1} | p_i
    invariant_polynomials: Tuple[Poly, ...]


class Rank222Class(NamedTuple):
    rank: int
    # zero, product, biseparable (2a), degenerate-span (2b), ghz (2c), w
    orbit_label: str


class PencilAnalysis(NamedTuple):
    rank: int
    structure: KroneckerStructure
    # regular, singular or degenerate
    certificate: str
    witness: Optional[Tuple[int, int]]


def pencil_of(T: DenseTensor, max_denominator: Optional[int] = None) -> Pencil:
    '''Frontal slices of a 3-mode tensor with a mode of size 2

    The last size-2 mode becomes the slicing mode. Numeric tensors are
    rationalized only when `max_denominator` is given.
    '''
    if T.order != 3:
        raise TensorError(f'Pencil analysis needs a 3-mode tensor, got order {T.order}')
    if 2 not in T.shape:
        raise TensorError(f'No mode of size 2 in shape {T.shape}')
    if not T.exact:
        if max_denominator is None:
            raise TensorError('Pencil analysis needs exact entries (rationalize with a denominator bound)')
        T = to_exact(T, max_denominator)
    mode = max(j for j in range(3) if T.shape[j] == 2)
    if mode != 2:
        T = permute_modes(T, [j for j in range(3) if j != mode] + [mode])
    return Pencil(T.entries[:, :, 0].copy(), T.entries[:, :, 1].copy())


def slices_dependent(P: Pencil) -> bool:
    stacked = np.stack([P.A.reshape(-1), P.B.reshape(-1)])
    return matrix_rank(stacked) < 2


def find_regular_witness(P: Pencil) -> Optional[Tuple[int, int]]:
    m, n = P.shape
    if m != n:
        raise TensorError('Regular witness needs a square pencil')
    # det(aA+bB) is a binary form of degree m
    for j in range(m + 1):
        if exact_determinant(P.combination(1, j)):
            return (1, j)
    return None


def normal_rank(P: Pencil) -> int:
    m, n = P.shape
    return max(matrix_rank(P.combination(1, j)) for j in range(min(m, n) + 1))


def _block_expansion(P: Pencil, depth: int) -> Matrix:
    '''(depth+1) x depth block matrix with A on the diagonal and B below it'''
    m, n = P.shape
    M = np.empty(((depth + 1) * m, depth * n), dtype=object)
    M.fill(EXACT_ZERO)
    for i in range(depth):
        M[i*m:(i+1)*m, i*n:(i+1)*n] = P.A
        M[(i+1)*m:(i+2)*m, i*n:(i+1)*n] = P.B
    return M


def column_minimal_indices(P: Pencil, nrank: Optional[int] = None) -> Tuple[int, ...]:
    m, n = P.shape
    if nrank is None:
        nrank = normal_rank(P)
    target = n - nrank
    indices: List[int] = []
    prev_nullity = 0
    prev_count = 0
    depth = 1
    while len(indices) < target:
        if depth > m + n + 1:
            raise CertificateError('Minimal index recovery did not terminate')
        M = _block_expansion(P, depth)
        nullity = depth * n - matrix_rank(M)
        # count of indices < depth
        count = nullity - prev_nullity
        indices.extend([depth - 1] * (count - prev_count))
        prev_nullity, prev_count = nullity, count
        depth += 1
    return tuple(indices)


def row_minimal_indices(P: Pencil, nrank: Optional[int] = None) -> Tuple[int, ...]:
    return column_minimal_indices(P.transpose(), nrank)


def _to_poly(c: object, d: object) -> Poly:
    return Poly(QQ_I.to_sympy(c) * T_SYMBOL - QQ_I.to_sympy(d), T_SYMBOL, domain=QQ_I)


def smith_invariants(X: Matrix, Y: Matrix) -> List[Poly]:
    '''Invariant factors of the polynomial matrix tX - Y, ascending by divisibility'''
    mat = [[_to_poly(c, d) for c, d in zip(xrow, yrow)] for xrow, yrow in zip(X.tolist(), Y.tolist())]
    diagonal: List[Poly] = []
    while mat and mat[0]:
        nonzero = [(i, j) for i, row in enumerate(mat) for j, p in enumerate(row) if not p.is_zero]
        if not nonzero:
            break
        i, j = min(nonzero, key=lambda ij: mat[ij[0]][ij[1]].degree())
        mat[0], mat[i] = mat[i], mat[0]
        for row in mat:
            row[0], row[j] = row[j], row[0]
        pivot = mat[0][0]

        dirty = False
        for i in range(1, len(mat)):
            if mat[i][0].is_zero:
                continue
            q, r = mat[i][0].div(pivot)
            mat[i] = [a - q * b for a, b in zip(mat[i], mat[0])]
            dirty = dirty or not r.is_zero
        for j in range(1, len(mat[0])):
            if mat[0][j].is_zero:
                continue
            q, r = mat[0][j].div(pivot)
            for row in mat:
                row[j] = row[j] - q * row[0]
            dirty = dirty or not r.is_zero
        if dirty:
            continue

        offender = next((
            i for i in range(1, len(mat)) for j in range(1, len(mat[0]))
            if not mat[i][j].rem(pivot).is_zero
        ), None)
        if offender is not None:
            mat[0] = [a + b for a, b in zip(mat[0], mat[offender])]
            continue

        diagonal.append(pivot.monic())
        mat = [row[1:] for row in mat[1:]]
    return diagonal


def invariant_polynomials(P: Pencil, witness: Tuple[int, int]) -> List[Poly]:
    a, b = witness
    X = P.combination(a, b)
    if P.shape[0] != P.shape[1] or not exact_determinant(X):
        raise TensorError(f'Witness {witness} is not invertible')
    c, d = (0, 1) if a else (1, 0)
    factors = [p for p in smith_invariants(X, P.combination(c, d)) if p.degree() > 0]
    return factors[::-1]


def count_multiple_root_factors(polys: Sequence[Poly]) -> int:
    return sum(1 for p in polys if p.degree() > 1 and p.gcd(p.diff()).degree() > 0)


def _core_invariants(P: Pencil, core_dim: int) -> Tuple[Optional[Tuple[int, int]], List[Poly]]:
    if core_dim == 0:
        return None, []
    # Finite eigenvalues of the core avoid at least one of core_dim+1 nodes
    for j in range(core_dim + 1):
        X = P.combination(1, j)
        factors = [p for p in smith_invariants(X, P.B) if p.degree() > 0]
        if sum(p.degree() for p in factors) == core_dim:
            return (1, j), factors[::-1]
    raise CertificateError('No witness node exposes the full regular core')


def kronecker_structure(P: Pencil) -> KroneckerStructure:
    return _analyze(P)[0]


def _analyze(P: Pencil) -> Tuple[KroneckerStructure, Optional[Tuple[int, int]]]:
    m, n = P.shape
    nrank = normal_rank(P)
    columns = column_minimal_indices(P, nrank)
    rows = row_minimal_indices(P, nrank)
    core_dim = nrank - sum(columns) - sum(rows)
    witness, polys = _core_invariants(P, core_dim)
    structure = KroneckerStructure(columns, rows, core_dim, tuple(polys))

    row_count = sum(columns) + sum(eta + 1 for eta in rows) + core_dim
    col_count = sum(eps + 1 for eps in columns) + sum(rows) + core_dim
    if (row_count, col_count) != (m, n):
        raise CertificateError(f'Kronecker bookkeeping failed: {(row_count, col_count)} != {(m, n)}')
    if sum(p.degree() for p in polys) != core_dim:
        raise CertificateError('Invariant polynomial degrees do not match the regular core')
    return structure, witness


def structure_rank(structure: KroneckerStructure) -> int:
    singular = sum(eps + 1 for eps in structure.column_minimal_indices if eps > 0)
    singular += sum(eta + 1 for eta in structure.row_minimal_indices if eta > 0)
    k = count_multiple_root_factors(structure.invariant_polynomials)
    return singular + structure.regular_core_dim + k


def analyze_pencil(P: Pencil) -> PencilAnalysis:
    structure, witness = _analyze(P)
    rank = structure_rank(structure)
    m, n = P.shape
    if slices_dependent(P):
        nonzero = [S for S in (P.A, P.B) if any(bool(x) for x in S.flat)]
        slice_rank = matrix_rank(nonzero[0]) if nonzero else 0
        if slice_rank != rank:
            raise CertificateError(f'Degenerate pencil rank mismatch: {rank} vs slice rank {slice_rank}')
        label = 'degenerate'
    elif m == n and not structure.column_minimal_indices and not structure.row_minimal_indices:
        label = 'regular'
    else:
        label = 'singular'
    log(f'Pencil {m}x{n}: indices {structure.column_minimal_indices}/{structure.row_minimal_indices}, '
        f'core {structure.regular_core_dim}, rank {rank} ({label})')
    return PencilAnalysis(rank, structure, label, witness)


def rank_mxnx2(T: DenseTensor, max_denominator: Optional[int] = None) -> Tuple[int, PencilAnalysis]:
    analysis = analyze_pencil(pencil_of(T, max_denominator))
    return analysis.rank, analysis


def classify_222(T: DenseTensor) -> Rank222Class:
    if T.shape != (2, 2, 2):
        raise TensorError(f'Expected shape (2,2,2), got {T.shape}')
    P = pencil_of(T)
    rank, _ = rank_mxnx2(T)
    if rank == 0:
        label = 'zero'
    elif rank == 1:
        label = 'product'
    elif rank == 3:
        label = 'w'
    elif slices_dependent(P):
        label = 'biseparable'
    elif find_regular_witness(P) is None:
        label = 'degenerate-span'
    else:
        label = 'ghz'
    return Rank222Class(rank, label)


def max_rank_mn2(m: int, n: int) -> int:
    if m < 1 or n < 1:
        raise ValueError('Pencil dimensions must be positive')
    m, n = sorted((m, n))
    if m == 1:
        return min(n, 2)
    if n <= 2 * m:
        return m + n // 2
    return 2 * m


def companion_matrix(coeffs: Sequence[int]) -> Matrix:
    '''Companion matrix of the monic t^m + c_{m-1} t^{m-1} + ... + c_0, coeffs = [c_0..c_{m-1}]'''
    m = len(coeffs)
    C = np.empty((m, m), dtype=object)
    C.fill(EXACT_ZERO)
    for i in range(1, m):
        C[i, i - 1] = exact(1)
    for i, c in enumerate(coeffs):
        C[i, m - 1] = exact(-c)
    return C


def jordan_pencil(eigenvalue: int, size: int) -> Pencil:
    '''(I, J) with J a single Jordan block, the regular core of a non-diagonalizable pencil'''
    A = np.empty((size, size), dtype=object)
    A.fill(EXACT_ZERO)
    B = A.copy()
    for i in range(size):
        A[i, i] = exact(1)
        B[i, i] = exact(eigenvalue)
        if i + 1 < size:
            B[i, i + 1] = exact(1)
    return Pencil(A, B)


def singular_block(eps: int) -> Pencil:
    '''eps x (eps+1) block [I 0], [0 I] with column minimal index eps'''
    A = np.empty((eps, eps + 1), dtype=object)
    A.fill(EXACT_ZERO)
    B = A.copy()
    for i in range(eps):
        A[i, i] = exact(1)
        B[i, i + 1] = exact(1)
    return Pencil(A, B)


def pencil_tensor(A: Matrix, B: Matrix) -> DenseTensor:
    return DenseTensor(np.stack([A, B], axis=2))
