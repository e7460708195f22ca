import json
import numpy as np
from fractions import Fraction
from itertools import combinations_with_replacement
from math import comb, factorial, prod, sqrt
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union
from sympy import Expr, Rational, I, symbols
from .common import (
    DEFAULT_PRIME, EXACT_ONE, EXACT_ZERO, BudgetExceeded, Decomposition, DenseTensor,
    MalformedTensorFile, RankOneTerm, Scalar, TensorError, basis_vector, check_shape,
    exact, exact_parts, exact_to_complex, frobenius_norm, identity_tensor, is_exact_scalar,
    evaluate, normalize, rank_mod_prime, log,
)


MAX_SYMMETRIC_DIM = 10**5
SYMMETRY_TOL = 1e-10
AH_EXCEPTIONS = frozenset({(4, 3), (4, 4), (3, 5), (4, 5)})

# j = (j_1, ..., j_n), sum j_i = d
ExponentIndex = Tuple[int, ...]


class HomogeneousPolynomial:
    """Degree-d form in n variables, f(x) = sum_j c(j) f_j x^j, stored by f_j"""

    def __init__(self, d: int, n: int, coeffs: Dict[ExponentIndex, Scalar]):
        if d < 1 or n < 1:
            raise TensorError(f'Invalid polynomial degree {d} or variable count {n}')
        self.d, self.n = d, n
        self.coeffs: Dict[ExponentIndex, Scalar] = {}
        for j, value in coeffs.items():
            j = tuple(int(x) for x in j)
            if len(j) != n or sum(j) != d or min(j) < 0:
                raise TensorError(f'Exponent {j} is not in J({d},{n})')
            if (bool(value) if is_exact_scalar(value) else value != 0):
                self.coeffs[j] = value

    @property
    def exact(self) -> bool:
        return all(is_exact_scalar(v) for v in self.coeffs.values())

    def expression(self) -> Expr:
        '''The form as a sympy expression in x1..xn'''
        xs = symbols(f'x1:{self.n + 1}')
        total: Expr = Rational(0)
        for j, value in sorted(self.coeffs.items()):
            if is_exact_scalar(value):
                re, im = exact_parts(value)
                scalar = Rational(re.numerator, re.denominator) + I * Rational(im.numerator, im.denominator)
            else:
                scalar = complex(value)
            total += multinomial(j) * scalar * prod(x**e for x, e in zip(xs, j))
        return total

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HomogeneousPolynomial):
            return NotImplemented
        return (self.d, self.n, self.coeffs) == (other.d, other.n, other.coeffs)

    def __repr__(self) -> str:
        return f'HomogeneousPolynomial(d={self.d}, n={self.n}, terms={len(self.coeffs)})'


class SymmetricGenericRank(NamedTuple):
    value: int
    # generic, exception or quadratic-form
    flag: str


class MaxSymmetricRank(NamedTuple):
    value: int
    bound_only: bool
    note: Optional[str] = None


def exponent_indices(d: int, n: int) -> List[ExponentIndex]:
    '''J(d,n) in lexicographic order'''
    out = []
    for combo in combinations_with_replacement(range(n), d):
        j = [0] * n
        for l in combo:
            j[l] += 1
        out.append(tuple(j))
    return sorted(out)


def multinomial(j: ExponentIndex) -> int:
    return factorial(sum(j)) // prod(factorial(x) for x in j)


def exponent_of(index: Tuple[int, ...], n: int) -> ExponentIndex:
    '''Exponent of a 0-based tensor index'''
    j = [0] * n
    for l in index:
        j[l] += 1
    return tuple(j)


def representative_index(j: ExponentIndex) -> Tuple[int, ...]:
    return tuple(l for l, count in enumerate(j) for _ in range(count))


def is_symmetric(T: DenseTensor, tol: float = SYMMETRY_TOL) -> bool:
    if len(set(T.shape)) != 1:
        return False
    scale = max(1.0, frobenius_norm(T)) if not T.exact else 1.0
    # adjacent transpositions generate all mode permutations
    for k in range(T.order - 1):
        swapped = np.swapaxes(T.entries, k, k + 1)
        if T.exact:
            if not np.all(swapped == T.entries):
                return False
        elif np.linalg.norm(swapped - T.entries) > tol * scale:
            return False
    return True


def poly_to_tensor(f: HomogeneousPolynomial) -> DenseTensor:
    shape = check_shape((f.n,) * f.d)
    exact_entries = f.exact
    entries = np.empty(shape, dtype=object if exact_entries else np.complex128)
    entries.fill(EXACT_ZERO if exact_entries else 0)
    for idx in np.ndindex(*shape):
        value = f.coeffs.get(exponent_of(idx, f.n))
        if value is not None:
            entries[idx] = value
    return DenseTensor(entries)


def tensor_to_poly(S: DenseTensor) -> HomogeneousPolynomial:
    if not is_symmetric(S):
        raise TensorError('Only symmetric tensors correspond to homogeneous polynomials')
    d, n = S.order, S.shape[0]
    coeffs = {j: S.entries[representative_index(j)] for j in exponent_indices(d, n)}
    if not S.exact:
        coeffs = {j: complex(v) for j, v in coeffs.items() if abs(v) > SYMMETRY_TOL}
    return HomogeneousPolynomial(d, n, coeffs)


def w_state(d: int, normalized: bool = False) -> DenseTensor:
    '''|W_d> = sum over positions of a single e_2 among e_1 factors'''
    if d < 2:
        raise TensorError('W state needs d >= 2')
    entries = np.empty((2,) * d, dtype=object)
    entries.fill(EXACT_ZERO)
    for k in range(d):
        idx = [0] * d
        idx[k] = 1
        entries[tuple(idx)] = EXACT_ONE
    T = DenseTensor(entries)
    return normalize(T) if normalized else T


def ghz_state(n: int, d: int, normalized: bool = False) -> DenseTensor:
    if n < 2 or d < 2:
        raise TensorError('GHZ state needs n >= 2 and d >= 2')
    T = identity_tensor(n, d)
    return normalize(T) if normalized else T


def w3_polynomial() -> HomogeneousPolynomial:
    '''sqrt(3) x1^2 x2 is the normalized W state; the exact form stores f_j = 1'''
    return HomogeneousPolynomial(3, 2, {(2, 1): exact(1)})


def w3_kron_polynomial() -> HomogeneousPolynomial:
    '''3 x1^2 x4 + 6 x1 x2 x3'''
    return HomogeneousPolynomial(3, 4, {(2, 0, 0, 1): exact(1), (1, 1, 1, 0): exact(1)})


def ah_generic_symmetric_rank(d: int, n: int) -> SymmetricGenericRank:
    if n < 2 or d < 2:
        raise ValueError('Need d >= 2 and n >= 2')
    if d == 2:
        return SymmetricGenericRank(n, 'quadratic-form')
    value = -(-comb(n + d - 1, d) // n)
    if (d, n) in AH_EXCEPTIONS:
        return SymmetricGenericRank(value + 1, 'exception')
    return SymmetricGenericRank(value, 'generic')


def symmetric_terracini_matrix(d: int, n: int, r: int, seed: int = 0, prime: int = DEFAULT_PRIME) -> np.ndarray:
    '''Rows J(d,n); column (i,l) holds y_l (x_i . y)^(d-1) in the monomial basis, mod p'''
    rows = exponent_indices(d, n)
    if len(rows) > MAX_SYMMETRIC_DIM:
        raise BudgetExceeded(f'dim S^{d}(C^{n}) = {len(rows)} exceeds the size guard')
    dtype: Any = np.int64 if prime < 2**31 else object
    rng = np.random.default_rng(np.random.SeedSequence([seed, d, n, r]))
    points = rng.integers(0, prime, size=(r, n), dtype=np.int64).astype(dtype)

    # powers[i, k, e] = x_ik^e mod p
    powers = np.ones((r, n, d + 1), dtype=dtype)
    for e in range(1, d + 1):
        powers[:, :, e] = powers[:, :, e - 1] * points % prime

    E = np.array(rows, dtype=np.int64)
    columns = np.zeros((n, r, len(rows)), dtype=dtype)
    for l in range(n):
        reduced = E.copy()
        reduced[:, l] -= 1
        present = reduced[:, l] >= 0
        reduced[~present, l] = 0
        coeff = np.array(
            [multinomial(tuple(j)) % prime if ok else 0 for j, ok in zip(reduced.tolist(), present)], dtype=dtype)
        values = np.broadcast_to(coeff, (r, len(rows))).copy()
        for k in range(n):
            values = values * powers[:, k, reduced[:, k]] % prime
        columns[l] = values
    return columns.transpose(2, 1, 0).reshape(len(rows), r * n)


def symmetric_terracini_rank(d: int, n: int, r: int, seed: int = 0, prime: int = DEFAULT_PRIME) -> int:
    return rank_mod_prime(symmetric_terracini_matrix(d, n, r, seed, prime), prime)


def symmetric_generic_rank(d: int, n: int, seed: int = 0, prime: int = DEFAULT_PRIME) -> int:
    '''First r whose tangent spaces span S^d(C^n)'''
    target = comb(n + d - 1, d)
    for r in range(-(-target // n), target + 1):
        if symmetric_terracini_rank(d, n, r, seed, prime) == target:
            return r
        log(f'Symmetric probe (d={d}, n={n}) r={r} deficient')
    raise BudgetExceeded(f'No full-rank symmetric Jacobian found up to r={target}')


def known_max_symmetric_rank(d: int, n: int) -> MaxSymmetricRank:
    from .generic import known_tables
    if n == 2:
        return MaxSymmetricRank(d, False)
    if d == 2:
        return MaxSymmetricRank(n, False)
    for dd, nn, value in known_tables()['max_symmetric_ranks']['entries']:
        if (dd, nn) == (d, n):
            return MaxSymmetricRank(value, False)
    note = 'r_max(3,4) >= 7' if (d, n) == (3, 4) else None
    return MaxSymmetricRank(2 * ah_generic_symmetric_rank(d, n).value - 1, True, note)


def _cube(weight: Fraction, vector: List[Fraction]) -> RankOneTerm:
    v = np.empty(len(vector), dtype=object)
    v[:] = [exact(x) for x in vector]
    return RankOneTerm(exact(weight), (v, v.copy(), v.copy()))


def waring_w3kron_decomposition() -> Decomposition:
    '''Seven cubes of linear forms summing to 3 x1^2 x4 + 6 x1 x2 x3'''
    h, q = Fraction(1, 2), Fraction(1, 4)
    terms = [
        _cube(h, [1, 0, 0, 1]),
        _cube(-h, [1, 0, 0, -1]),
        _cube(Fraction(-1), [0, 0, 0, 1]),
        _cube(q, [1, 1, 1, 0]),
        _cube(-q, [-1, 1, 1, 0]),
        _cube(-q, [1, -1, 1, 0]),
        _cube(-q, [1, 1, -1, 0]),
    ]
    return Decomposition((4, 4, 4), terms)


def _w3_plus_z(s: Fraction) -> List[RankOneTerm]:
    '''W_3 + s^2 e_2^(x)3 = (1/2s)((e1 + s e2)^3 - (e1 - s e2)^3)'''
    a = 1 / (2 * s)
    return [_cube(a, [1, s]), _cube(-a, [1, -s])]


def _product_terms(left: List[RankOneTerm], right: List[RankOneTerm], sign: int = 1) -> List[RankOneTerm]:
    return [
        RankOneTerm(exact(sign) * u.weight * v.weight, u.factors + v.factors)
        for u in left for v in right
    ]


def w3_square_decomposition() -> Decomposition:
    '''W3 (x) W3 = (W3+z)(x)(W3+z) - (W3+(9/25)z)(x)z - z(x)(W3+(16/25)z), z = e_2^(x)3, eight terms'''
    z = [RankOneTerm(exact(1), tuple(basis_vector(2, 2) for _ in range(3)))]
    one = _w3_plus_z(Fraction(1))
    terms = _product_terms(one, one)
    terms += _product_terms(_w3_plus_z(Fraction(3, 5)), z, -1)
    terms += _product_terms(z, _w3_plus_z(Fraction(4, 5)), -1)
    return Decomposition((2,) * 6, terms)


def border_rank_demo_wd(d: int, t: Union[float, Fraction, int]) -> Decomposition:
    '''(1/t)((e1 + t e2)^(x)d - e1^(x)d), converging to W_d as t -> 0'''
    if d < 2:
        raise TensorError('Need d >= 2')
    if t == 0:
        raise TensorError('Border demonstration needs t != 0')
    if isinstance(t, (Fraction, int)):
        t = Fraction(t)
        moved = np.array([exact(1), exact(t)], dtype=object)
        e1 = basis_vector(2, 1)
        return Decomposition((2,) * d, [
            RankOneTerm(exact(1 / t), tuple(moved.copy() for _ in range(d))),
            RankOneTerm(exact(-1 / t), tuple(e1.copy() for _ in range(d))),
        ])
    moved_f = np.array([1, t], dtype=np.complex128)
    e1_f = basis_vector(2, 1, exact_entries=False)
    return Decomposition((2,) * d, [
        RankOneTerm(complex(1 / t), tuple(moved_f.copy() for _ in range(d))),
        RankOneTerm(complex(-1 / t), tuple(e1_f.copy() for _ in range(d))),
    ])


def border_residual(d: int, t: Union[float, Fraction, int]) -> float:
    approx = evaluate(border_rank_demo_wd(d, t)).numeric()
    return float(np.linalg.norm(approx - w_state(d).numeric()))


# Polynomial files

def _scalar_to_json(value: Scalar) -> List[Any]:
    if is_exact_scalar(value):
        re, im = exact_parts(value)
        return [re.numerator, re.denominator, im.numerator, im.denominator]
    value = complex(value)
    return [value.real, value.imag]


def _scalar_from_json(raw: Any) -> Scalar:
    if isinstance(raw, list) and len(raw) == 4:
        return exact(Fraction(int(raw[0]), int(raw[1])), Fraction(int(raw[2]), int(raw[3])))
    if isinstance(raw, list) and len(raw) == 2:
        return complex(float(raw[0]), float(raw[1]))
    raise ValueError(f'Bad coefficient {raw}')


def polynomial_to_json(f: HomogeneousPolynomial) -> Dict[str, Any]:
    return {
        'd': f.d,
        'n': f.n,
        'coeffs': {','.join(map(str, j)): _scalar_to_json(v) for j, v in sorted(f.coeffs.items())},
    }


def polynomial_from_json(data: Any) -> HomogeneousPolynomial:
    try:
        d, n = int(data['d']), int(data['n'])
        coeffs = {
            tuple(int(x) for x in key.split(',')): _scalar_from_json(raw)
            for key, raw in data['coeffs'].items()
        }
        values = list(coeffs.values())
        if any(is_exact_scalar(v) for v in values) and not all(is_exact_scalar(v) for v in values):
            coeffs = {j: exact_to_complex(v) if is_exact_scalar(v) else v for j, v in coeffs.items()}
        return HomogeneousPolynomial(d, n, coeffs)
    except (KeyError, TypeError, ValueError, ZeroDivisionError, AttributeError) as err:
        raise MalformedTensorFile(f'Bad polynomial file: {err}')


def load_polynomial(path: str) -> HomogeneousPolynomial:
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as err:
        raise MalformedTensorFile(f'Polynomial file is not valid JSON: {err}')
    except OSError as err:
        raise MalformedTensorFile(f'Cannot read polynomial file: {err}')
    return polynomial_from_json(data)


def save_polynomial(path: str, f: HomogeneousPolynomial) -> None:
    with open(path, 'w') as out:
        json.dump(polynomial_to_json(f), out, sort_keys=True)


def symmetric_rank_rules(d: int, symmetric_rank_upper: Optional[int]) -> List[str]:
    '''Advisory notes on when rank and symmetric rank coincide'''
    notes = []
    if symmetric_rank_upper is not None and symmetric_rank_upper <= d:
        notes.append(f'symmetric rank {symmetric_rank_upper} <= d={d}: rank equals symmetric rank')
    return notes
