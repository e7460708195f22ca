import itertools
import numpy as np
import pytest
from sympy import Poly, Symbol
from sympy.polys.domains import QQ_I
from tensorank.certifiers.als import als_rank_upper
from tensorank.common import (
    DenseTensor, TensorError, apply_local_operators, basis_tensor, exact_array, flatten, matrix_rank, permute_modes,
    to_numeric, zeros,
)
from tensorank.pencil import (
    Pencil, analyze_pencil, classify_222, companion_matrix, count_multiple_root_factors, find_regular_witness,
    jordan_pencil, kronecker_structure, max_rank_mn2, pencil_of, pencil_tensor, rank_mxnx2, singular_block,
)


def block_diagonal(P: Pencil, Q: Pencil) -> Pencil:
    def stack(X, Y):
        out = exact_array(np.zeros((X.shape[0] + Y.shape[0], X.shape[1] + Y.shape[1]), dtype=int).tolist())
        out[:X.shape[0], :X.shape[1]] = X
        out[X.shape[0]:, X.shape[1]:] = Y
        return out
    return Pencil(stack(P.A, Q.A), stack(P.B, Q.B))


def random_pencil_tensor(seed):
    rng = np.random.default_rng(seed)
    m, n = (int(k) for k in rng.integers(1, 6, size=2))
    return DenseTensor(exact_array(rng.integers(-9, 10, size=(m, n, 2)).tolist()))


def unimodular(n, rng):
    L = np.tril(rng.integers(-3, 4, size=(n, n)), -1) + np.eye(n, dtype=int)
    U = np.triu(rng.integers(-3, 4, size=(n, n)), 1) + np.eye(n, dtype=int)
    return exact_array((L @ U).tolist())


def test_w3_pencil(w3):
    rank, analysis = rank_mxnx2(w3)
    assert rank == 3
    assert analysis.certificate == 'regular'
    structure = analysis.structure
    assert structure.regular_core_dim == 2
    assert [p.degree() for p in structure.invariant_polynomials] == [2]


def test_ghz_pencil(ghz):
    rank, analysis = rank_mxnx2(ghz)
    assert rank == 2
    assert analysis.witness is not None


@pytest.mark.parametrize('rows_a, rows_b, label, rank', [
    ([[0, 0], [0, 0]], [[0, 0], [0, 0]], 'zero', 0),
    ([[1, 0], [0, 0]], [[0, 0], [0, 0]], 'product', 1),
    ([[1, 0], [0, 1]], [[0, 0], [0, 0]], 'biseparable', 2),
    ([[1, 0], [0, 0]], [[0, 1], [0, 0]], 'degenerate-span', 2),
    ([[1, 0], [0, 0]], [[0, 0], [0, 1]], 'ghz', 2),
    ([[0, 1], [1, 0]], [[1, 0], [0, 0]], 'w', 3),
])
def test_classify_222(rows_a, rows_b, label, rank):
    T = pencil_tensor(exact_array(rows_a), exact_array(rows_b))
    result = classify_222(T)
    assert result.orbit_label == label
    assert result.rank == rank


def test_classify_222_needs_qubits():
    with pytest.raises(TensorError):
        classify_222(zeros((2, 2, 3)))


def test_degenerate_span_has_no_regular_witness():
    P = Pencil(exact_array([[1, 0], [0, 0]]), exact_array([[0, 1], [0, 0]]))
    assert find_regular_witness(P) is None
    structure = kronecker_structure(P)
    assert structure.column_minimal_indices == (1,)
    assert structure.row_minimal_indices == (0,)
    assert structure.regular_core_dim == 0


@pytest.mark.parametrize('eps', [1, 2, 3])
def test_singular_block_rank(eps):
    P = singular_block(eps)
    structure = kronecker_structure(P)
    assert structure.column_minimal_indices == (eps,)
    assert analyze_pencil(P).rank == eps + 1
    assert analyze_pencil(P).certificate == 'singular'


@pytest.mark.parametrize('size, expected', [(1, 1), (2, 3), (3, 4)])
def test_jordan_block_rank(size, expected):
    P = jordan_pencil(1, size)
    assert rank_mxnx2(pencil_tensor(P.A, P.B))[0] == expected


@pytest.mark.parametrize('coeffs, expected', [
    ([-2, 0], 2),  # t^2 - 2, distinct roots
    ([1, -2], 3),  # (t - 1)^2
    ([0, 0, 0], 4),  # t^3
])
def test_companion_pencil_rank(coeffs, expected):
    C = companion_matrix(coeffs)
    identity = jordan_pencil(0, len(coeffs)).A
    assert rank_mxnx2(pencil_tensor(identity, C))[0] == expected


def test_block_diagonal_pencils_add(w3, ghz):
    P, Q = pencil_of(w3), pencil_of(ghz)
    assert analyze_pencil(block_diagonal(P, Q)).rank == 5
    R = block_diagonal(singular_block(2), jordan_pencil(0, 2))
    assert R.shape == (4, 5)
    assert analyze_pencil(R).rank == 6


def test_rank_is_invariant_under_mode_permutations():
    P = singular_block(2)
    T = pencil_tensor(P.A, P.B)
    for order in itertools.permutations(range(3)):
        assert rank_mxnx2(permute_modes(T, order))[0] == 3


def test_numeric_pencil_needs_denominator(w3):
    T = to_numeric(w3)
    with pytest.raises(TensorError):
        pencil_of(T)
    assert rank_mxnx2(T, max_denominator=100)[0] == 3


def test_pencil_needs_a_qubit_mode():
    with pytest.raises(TensorError):
        pencil_of(zeros((3, 3, 3)))
    with pytest.raises(TensorError):
        pencil_of(basis_tensor((2, 2), (1, 1)))


@pytest.mark.parametrize('m, n, expected', [(1, 5, 2), (2, 2, 3), (2, 3, 3), (3, 3, 4), (2, 5, 4), (4, 5, 6)])
def test_max_rank_mn2(m, n, expected):
    assert max_rank_mn2(m, n) == expected


def test_max_rank_is_attained_by_jordan_pencils():
    P = jordan_pencil(0, 3)
    assert analyze_pencil(P).rank == max_rank_mn2(3, 3)


def test_count_multiple_root_factors():
    t = Symbol('t')
    polys = [
        Poly(t - 1, t, domain=QQ_I),
        Poly((t - 2) ** 2, t, domain=QQ_I),
        Poly((t + 1) * (t - 3), t, domain=QQ_I),
        Poly((t ** 2 + 1) ** 2 * t, t, domain=QQ_I),
    ]
    assert count_multiple_root_factors(polys) == 2
    assert count_multiple_root_factors([]) == 0


@pytest.mark.parametrize('seed', range(200))
def test_random_pencil_rank_matches_flattenings_and_als(seed):
    T = random_pencil_tensor(seed)
    rank, _ = rank_mxnx2(T)
    flattening = max(matrix_rank(flatten(T, [k])) for k in range(3))
    assert flattening <= rank <= max_rank_mn2(*sorted(T.shape[:2]))
    cert = als_rank_upper(T, r_cap=rank)
    assert cert is not None and cert.value == rank


def structured_pencils():
    jordan, block = jordan_pencil(0, 3), singular_block(2)
    return [
        pencil_tensor(jordan.A, jordan.B),
        pencil_tensor(block.A, block.B),
        pencil_tensor(*block_diagonal(singular_block(1), jordan_pencil(2, 2))),
        random_pencil_tensor(3),
        random_pencil_tensor(4),
    ]


@pytest.mark.parametrize('index', range(5))
@pytest.mark.parametrize('seed', range(4))
def test_pencil_rank_is_invariant_under_local_gl(index, seed):
    T = structured_pencils()[index]
    rng = np.random.default_rng(seed)
    moved = apply_local_operators(T, [unimodular(n, rng) for n in T.shape])
    assert rank_mxnx2(moved)[0] == rank_mxnx2(T)[0]


@pytest.mark.parametrize('seed', range(5))
def test_w_class_is_closed_under_local_gl(w3, seed):
    rng = np.random.default_rng(seed)
    moved = apply_local_operators(w3, [unimodular(2, rng) for _ in range(3)])
    assert classify_222(moved).orbit_label == 'w'
