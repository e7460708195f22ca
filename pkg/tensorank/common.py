from pathlib import Path
import sys
import json
import numpy as np
from fractions import Fraction
from functools import reduce
from itertools import combinations
from typing import IO, Any, AnyStr, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union
from numpy.typing import NDArray
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix


Shape = Tuple[int, ...]
Modes = Tuple[int, ...]
ExactScalar = Any  # element of QQ_I
Scalar = Union[complex, ExactScalar]
Matrix = NDArray[Any]


DEFAULT_TOL = 1e-9
DEFAULT_PRIME = 2**61 - 1
MAX_ENTRIES = 10**7
MAX_ORDER = 12


class TensorError(ValueError):
    pass


class MalformedTensorFile(TensorError):
    pass


class BudgetExceeded(RuntimeError):
    pass


class CertificateError(RuntimeError):
    pass


_quiet = False


def log(*args: object) -> None:
    if not _quiet:
        print(*args, file=sys.stderr)


def set_quiet(quiet: bool) -> None:
    global _quiet
    _quiet = quiet


def open_resource(name: str, mode: str) -> IO[AnyStr]:
    if mode in {'r', 'rb'}:
        return (Path(__file__).parent / name).open(mode)
    raise ValueError('Can only open resource for reading')


# Exact scalars

def exact(re: Union[int, Fraction, str] = 0, im: Union[int, Fraction, str] = 0) -> ExactScalar:
    re, im = Fraction(re), Fraction(im)
    return QQ_I(QQ(re.numerator, re.denominator), QQ(im.numerator, im.denominator))


EXACT_ZERO = QQ_I.zero
EXACT_ONE = QQ_I.one


def is_exact_scalar(x: object) -> bool:
    return isinstance(x, QQ_I.dtype)


def exact_parts(x: ExactScalar) -> Tuple[Fraction, Fraction]:
    return (
        Fraction(int(x.x.numerator), int(x.x.denominator)),
        Fraction(int(x.y.numerator), int(x.y.denominator)),
    )


def exact_conjugate(x: ExactScalar) -> ExactScalar:
    return QQ_I(x.x, -x.y)


def exact_to_complex(x: ExactScalar) -> complex:
    re, im = exact_parts(x)
    return complex(float(re), float(im))


def rationalize(z: complex, max_denominator: int) -> ExactScalar:
    z = complex(z)
    return exact(
        Fraction(z.real).limit_denominator(max_denominator),
        Fraction(z.imag).limit_denominator(max_denominator),
    )


def exact_sum(values: Iterable[ExactScalar]) -> ExactScalar:
    return reduce(lambda a, b: a + b, values, EXACT_ZERO)


def exact_array(values: Any) -> NDArray[Any]:
    """Convert nested ints/Fractions/Gaussian rationals into an object array of QQ_I"""
    arr = np.array(values, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        if is_exact_scalar(v):
            out[idx] = v
        elif isinstance(v, complex):
            if v.imag != int(v.imag) or v.real != int(v.real):
                raise TensorError('Use rationalize() for non-integral complex values')
            out[idx] = exact(int(v.real), int(v.imag))
        else:
            out[idx] = exact(v)
    return out


# Shapes

def shape_size(shape: Sequence[int]) -> int:
    return int(np.prod(shape, dtype=object)) if len(shape) else 1


def segre_dimension(shape: Sequence[int]) -> int:
    '''M(n) = 1 - d + sum n_j, the dimension of the rank-one cone'''
    return 1 - len(shape) + sum(shape)


def check_shape(shape: Sequence[int]) -> Shape:
    shape = tuple(int(n) for n in shape)
    if not shape or any(n < 1 for n in shape):
        raise TensorError(f'Invalid shape {shape}')
    if len(shape) > MAX_ORDER or shape_size(shape) > MAX_ENTRIES:
        raise BudgetExceeded(f'Shape {shape} is beyond supported size')
    return shape


class DenseTensor:
    """d-mode array of complex scalars, exact (QQ_I objects) or complex128"""

    def __init__(self, entries: NDArray[Any]):
        if entries.dtype != object:
            entries = entries.astype(np.complex128)
        self.entries = entries
        check_shape(entries.shape)

    def copy(self) -> 'DenseTensor':
        return DenseTensor(self.entries.copy())

    @property
    def shape(self) -> Shape:
        return tuple(self.entries.shape)

    @property
    def order(self) -> int:
        return self.entries.ndim

    @property
    def size(self) -> int:
        return self.entries.size

    @property
    def exact(self) -> bool:
        return self.entries.dtype == object

    def numeric(self) -> NDArray[np.complex128]:
        if self.exact:
            return np.vectorize(exact_to_complex, otypes=[np.complex128])(self.entries)
        return self.entries

    def __repr__(self) -> str:
        kind = 'exact' if self.exact else 'numeric'
        return f'DenseTensor({kind}, shape={self.shape})'


def zeros(shape: Sequence[int], exact_entries: bool = True) -> DenseTensor:
    shape = check_shape(shape)
    if exact_entries:
        entries = np.empty(shape, dtype=object)
        entries.fill(EXACT_ZERO)
        return DenseTensor(entries)
    return DenseTensor(np.zeros(shape, dtype=np.complex128))


def to_numeric(T: DenseTensor) -> DenseTensor:
    return DenseTensor(T.numeric()) if T.exact else T


def to_exact(T: DenseTensor, max_denominator: int = 10**6) -> DenseTensor:
    if T.exact:
        return T
    entries = np.empty(T.shape, dtype=object)
    for idx, z in np.ndenumerate(T.entries):
        entries[idx] = rationalize(z, max_denominator)
    return DenseTensor(entries)


def basis_vector(n: int, i: int, exact_entries: bool = True) -> NDArray[Any]:
    '''Unit vector e_i of length n, i is 1-based like the Dirac labels'''
    if not 1 <= i <= n:
        raise TensorError(f'Basis label {i} out of range 1..{n}')
    if exact_entries:
        v = np.empty(n, dtype=object)
        v.fill(EXACT_ZERO)
        v[i - 1] = EXACT_ONE
        return v
    v = np.zeros(n, dtype=np.complex128)
    v[i - 1] = 1
    return v


def basis_tensor(shape: Sequence[int], index: Sequence[int], exact_entries: bool = True) -> DenseTensor:
    T = zeros(shape, exact_entries)
    if len(index) != T.order:
        raise TensorError('Index length does not match tensor order')
    T.entries[tuple(i - 1 for i in index)] = EXACT_ONE if exact_entries else 1
    return T


class RankOneTerm(NamedTuple):
    # Scalar coefficient
    weight: Scalar
    # One vector per mode
    factors: Tuple[NDArray[Any], ...]

    @property
    def exact(self) -> bool:
        return is_exact_scalar(self.weight)

    def is_zero(self, tol: float = 0.0) -> bool:
        if self.exact:
            return not self.weight or any(not any(bool(x) for x in f) for f in self.factors)
        return abs(self.weight) <= tol or any(np.linalg.norm(f) <= tol for f in self.factors)

    def tensor(self) -> NDArray[Any]:
        out = reduce(np.multiply.outer, self.factors)
        return out * self.weight


def numeric_term(term: RankOneTerm) -> RankOneTerm:
    if not term.exact:
        return RankOneTerm(complex(term.weight), tuple(np.asarray(f, dtype=np.complex128) for f in term.factors))
    return RankOneTerm(
        exact_to_complex(term.weight),
        tuple(np.array([exact_to_complex(x) for x in f], dtype=np.complex128) for f in term.factors),
    )


class Decomposition:
    """Ordered list of rank-one terms of a common shape"""

    def __init__(self, shape: Sequence[int], terms: Iterable[RankOneTerm]):
        self.shape = check_shape(shape)
        self.terms: List[RankOneTerm] = list(terms)
        for term in self.terms:
            if tuple(len(f) for f in term.factors) != self.shape:
                raise TensorError(f'Term factor lengths do not match shape {self.shape}')

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def exact(self) -> bool:
        return bool(self.terms) and all(t.exact for t in self.terms)

    def nonzero_terms(self, tol: float = 0.0) -> List[RankOneTerm]:
        return [t for t in self.terms if not t.is_zero(tol)]

    def energy(self) -> float:
        '''Sum of |weight| times product of factor norms'''
        total = 0.0
        for term in map(numeric_term, self.terms):
            total += abs(term.weight) * float(np.prod([np.linalg.norm(f) for f in term.factors]))
        return total


def evaluate(dec: Decomposition) -> DenseTensor:
    if not dec.terms:
        return zeros(dec.shape, exact_entries=True)
    if dec.exact:
        T = zeros(dec.shape, exact_entries=True)
        for term in dec.terms:
            T.entries = T.entries + term.tensor()
        return T
    entries = np.zeros(dec.shape, dtype=np.complex128)
    for term in map(numeric_term, dec.terms):
        entries += term.tensor()
    return DenseTensor(entries)


# Products and contractions

def check_modes(T: DenseTensor, modes: Iterable[int]) -> Modes:
    modes = tuple(sorted(set(modes)))
    if any(m < 0 or m >= T.order for m in modes):
        raise TensorError(f'Mode out of range for order {T.order}: {modes}')
    return modes


def flatten(T: DenseTensor, left_modes: Iterable[int]) -> Matrix:
    '''Matricize T with `left_modes` (ascending) indexing rows, the rest indexing columns'''
    left = check_modes(T, left_modes)
    if not left or len(left) == T.order:
        raise TensorError('Flattening needs a nonempty proper subset of modes')
    right = tuple(m for m in range(T.order) if m not in left)
    rows = shape_size([T.shape[m] for m in left])
    return np.transpose(T.entries, left + right).reshape(rows, -1)


def regroup_modes(T: DenseTensor, groups: Sequence[Sequence[int]]) -> DenseTensor:
    '''Merge each group of modes into a single mode (row-major inside a group)'''
    order = [m for group in groups for m in group]
    if sorted(order) != list(range(T.order)):
        raise TensorError('Mode groups must partition the modes')
    dims = [shape_size([T.shape[m] for m in group]) for group in groups]
    return DenseTensor(np.transpose(T.entries, order).reshape(dims))


def permute_modes(T: DenseTensor, order: Sequence[int]) -> DenseTensor:
    return DenseTensor(np.transpose(T.entries, tuple(order)))


def _pad_order(entries: NDArray[Any], order: int) -> NDArray[Any]:
    return entries.reshape(entries.shape + (1,) * (order - entries.ndim))


def _common_backend(T: DenseTensor, U: DenseTensor) -> Tuple[NDArray[Any], NDArray[Any]]:
    if T.exact == U.exact:
        return T.entries, U.entries
    return T.numeric(), U.numeric()


def kronecker(T: DenseTensor, U: DenseTensor) -> DenseTensor:
    '''Mode-wise Kronecker product; mode-j index is the pair (T-index, U-index)'''
    a, b = _common_backend(T, U)
    d = max(a.ndim, b.ndim)
    a, b = _pad_order(a, d), _pad_order(b, d)
    outer = np.multiply.outer(a, b)
    interleave = [k for j in range(d) for k in (j, d + j)]
    dims = [a.shape[j] * b.shape[j] for j in range(d)]
    return DenseTensor(np.transpose(outer, interleave).reshape(dims))


def tensor_product(T: DenseTensor, U: DenseTensor) -> DenseTensor:
    a, b = _common_backend(T, U)
    return DenseTensor(np.multiply.outer(a, b))


def direct_sum(T: DenseTensor, U: Union[DenseTensor, NDArray[Any]]) -> DenseTensor:
    '''Block-diagonal T (+) U; U may also be an empty array with T's mode count, which leaves T unchanged'''
    if not isinstance(U, DenseTensor):
        U = np.asarray(U)
        if U.ndim != T.order:
            raise TensorError('Direct sum needs equal mode counts')
        if not any(U.shape):
            return T.copy()
        U = DenseTensor(U)
    if T.order != U.order:
        raise TensorError('Direct sum needs equal mode counts')
    a, b = _common_backend(T, U)
    exact_entries = a.dtype == object
    out = zeros([n + p for n, p in zip(a.shape, b.shape)], exact_entries)
    out.entries[tuple(slice(0, n) for n in a.shape)] = a
    out.entries[tuple(slice(n, None) for n in a.shape)] = b
    return out


def contract(T: DenseTensor, mode: int, y: NDArray[Any]) -> DenseTensor:
    '''Bilinear contraction of `mode` against y (no conjugation)'''
    check_modes(T, [mode])
    y = np.asarray(y, dtype=object if T.exact else np.complex128)
    if y.shape != (T.shape[mode],):
        raise TensorError(f'Vector length {len(y)} does not match mode size {T.shape[mode]}')
    if T.order == 1:
        raise TensorError('Cannot contract the only mode')
    return DenseTensor(np.tensordot(T.entries, y, axes=([mode], [0])))


def apply_local_operators(T: DenseTensor, matrices: Sequence[Optional[NDArray[Any]]]) -> DenseTensor:
    '''(A_1,...,A_d)(T): apply A_j to mode j, None leaves a mode unchanged'''
    if len(matrices) != T.order:
        raise TensorError('Need one operator per mode')
    entries = T.entries
    for j, A in enumerate(matrices):
        if A is None:
            continue
        A = np.asarray(A, dtype=object if T.exact else np.complex128)
        if A.shape[1] != entries.shape[j]:
            raise TensorError(f'Operator for mode {j} has wrong width')
        entries = np.moveaxis(np.tensordot(A, entries, axes=([1], [j])), 0, j)
    return DenseTensor(entries)


def inner_product(T: DenseTensor, U: DenseTensor) -> Scalar:
    '''Hermitian inner product <T,U> = sum T conj(U)'''
    if T.shape != U.shape:
        raise TensorError('Shape mismatch in inner product')
    if T.exact and U.exact:
        return exact_sum(a * exact_conjugate(b) for a, b in zip(T.entries.flat, U.entries.flat))
    a, b = _common_backend(T, U)
    return complex(np.vdot(b, a))


def frobenius_norm(T: DenseTensor) -> float:
    if T.exact:
        re, _ = exact_parts(inner_product(T, T))
        return float(np.sqrt(float(re)))
    return float(np.linalg.norm(T.entries))


def normalize(T: DenseTensor) -> DenseTensor:
    norm = frobenius_norm(T)
    if norm == 0:
        raise TensorError('Cannot normalize the zero tensor')
    return DenseTensor(T.numeric() / norm)


def allclose(T: DenseTensor, U: DenseTensor, tol: float = DEFAULT_TOL) -> bool:
    if T.shape != U.shape:
        return False
    if T.exact and U.exact:
        return bool(np.all(T.entries == U.entries))
    return bool(np.linalg.norm(T.numeric() - U.numeric()) <= tol * max(1.0, frobenius_norm(U)))


def identity_tensor(k: int, d: int, exact_entries: bool = True) -> DenseTensor:
    '''I(k,d) = sum_i e_i^{(x)d}'''
    T = zeros((k,) * d, exact_entries)
    for i in range(k):
        T.entries[(i,) * d] = EXACT_ONE if exact_entries else 1
    return T


# Matrix ranks

def to_domain_matrix(M: Matrix) -> DomainMatrix:
    rows = [[x if is_exact_scalar(x) else exact(x) for x in row] for row in M.tolist()]
    return DomainMatrix(rows, M.shape, QQ_I)


def matrix_rank(M: Matrix, tol: Optional[float] = None) -> int:
    '''Exact rank for object matrices over QQ_I, numeric rank with relative tol otherwise'''
    M = np.asarray(M)
    if M.ndim != 2:
        raise TensorError('matrix_rank needs a 2D array')
    if M.size == 0:
        return 0
    if M.dtype == object and tol is None:
        return to_domain_matrix(M).rank()
    if M.dtype == object:
        M = np.vectorize(exact_to_complex, otypes=[np.complex128])(M)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > (DEFAULT_TOL if tol is None else tol) * sv[0]))


class SchmidtDecomposition(NamedTuple):
    # Descending singular values of the flattening
    coefficients: NDArray[np.float64]
    schmidt_rank: int


def schmidt_decomposition(T: DenseTensor, left_modes: Iterable[int], tol: float = DEFAULT_TOL) -> SchmidtDecomposition:
    sv = np.linalg.svd(flatten(to_numeric(T), left_modes), compute_uv=False)
    rank = int(np.sum(sv > tol * sv[0])) if sv.size and sv[0] > 0 else 0
    return SchmidtDecomposition(sv, rank)


def exact_determinant(M: Matrix) -> ExactScalar:
    return to_domain_matrix(M).det()


def rank_mod_prime(M: NDArray[Any], p: int = DEFAULT_PRIME) -> int:
    '''Rank over GF(p) by row reduction, int64 when products fit, Python ints otherwise'''
    dtype: Any = np.int64 if p < 2**31 else object
    A = np.array(M, dtype=dtype) % p
    rows, cols = A.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        nonzero = np.nonzero(A[rank:, c] != 0)[0]
        if len(nonzero) == 0:
            continue
        pivot = rank + int(nonzero[0])
        if pivot != rank:
            A[[rank, pivot]] = A[[pivot, rank]]
        inv = pow(int(A[rank, c]), -1, p)
        A[rank, c:] = (A[rank, c:] * inv) % p
        below = A[rank + 1:, c].copy()
        mask = below != 0
        if np.any(mask):
            A[rank + 1:, c:][mask] = (A[rank + 1:, c:][mask] - np.multiply.outer(below[mask], A[rank, c:])) % p
        rank += 1
    return rank


def flattening_splits(order: int, balanced: bool = True) -> List[Modes]:
    '''Single-mode splits, plus all balanced bipartitions for order <= 4'''
    splits: List[Modes] = [(m,) for m in range(order)]
    if balanced and order == 4:
        for left in combinations(range(order), order // 2):
            if 0 in left:
                splits.append(left)
    return splits


# Interchange format

def tensor_to_json(T: DenseTensor) -> Dict[str, Any]:
    if T.exact:
        entries = []
        for x in T.entries.flat:
            re, im = exact_parts(x)
            entries.append([re.numerator, re.denominator, im.numerator, im.denominator])
    else:
        entries = [[float(z.real), float(z.imag)] for z in T.entries.flat]
    return {'shape': list(T.shape), 'entries': entries}


def tensor_from_json(data: Any) -> DenseTensor:
    try:
        shape = check_shape(data['shape'])
        raw = data['entries']
    except (KeyError, TypeError) as err:
        raise MalformedTensorFile(f'Tensor file needs "shape" and "entries": {err}')
    except TensorError as err:
        raise MalformedTensorFile(str(err))
    if not isinstance(raw, list) or len(raw) != shape_size(shape):
        raise MalformedTensorFile(f'Expected {shape_size(shape)} entries for shape {shape}')
    widths = {len(e) if isinstance(e, list) else -1 for e in raw}
    if widths == {4}:
        try:
            values = [exact(Fraction(int(a), int(b)), Fraction(int(c), int(d))) for a, b, c, d in raw]
        except (ValueError, ZeroDivisionError, TypeError) as err:
            raise MalformedTensorFile(f'Bad rational entry: {err}')
        entries = np.empty(len(values), dtype=object)
        entries[:] = values
        return DenseTensor(entries.reshape(shape))
    if widths == {2}:
        try:
            values = np.array([complex(float(re), float(im)) for re, im in raw], dtype=np.complex128)
        except (ValueError, TypeError) as err:
            raise MalformedTensorFile(f'Bad complex entry: {err}')
        return DenseTensor(values.reshape(shape))
    raise MalformedTensorFile('Entries must be all [re,im] pairs or all [num,den,num,den] quadruples')


def load_tensor(path: str) -> DenseTensor:
    try:
        if path == '-':
            data = json.load(sys.stdin)
        else:
            with open(path) as f:
                data = json.load(f)
    except json.JSONDecodeError as err:
        raise MalformedTensorFile(f'Tensor file is not valid JSON: {err}')
    except OSError as err:
        raise MalformedTensorFile(f'Cannot read tensor file: {err}')
    T = tensor_from_json(data)
    log(f'Loaded {"exact" if T.exact else "numeric"} tensor of shape {T.shape}')
    return T


def save_tensor(path: str, T: DenseTensor) -> None:
    with open(path, 'w') as f:
        json.dump(tensor_to_json(T), f, sort_keys=True)
