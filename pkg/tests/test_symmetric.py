import numpy as np
import pytest
from fractions import Fraction
from math import comb
from pathlib import Path
from sympy import symbols
import tensorank.symmetric as symmetric
from tensorank.common import (
    BudgetExceeded, MalformedTensorFile, TensorError, basis_tensor, evaluate, exact, exact_parts, kronecker,
    tensor_product,
)
from tensorank.symmetric import (
    AH_EXCEPTIONS, HomogeneousPolynomial, ah_generic_symmetric_rank, border_rank_demo_wd, border_residual,
    exponent_indices, is_symmetric, known_max_symmetric_rank, load_polynomial, multinomial, poly_to_tensor,
    polynomial_from_json, save_polynomial, symmetric_generic_rank, symmetric_rank_rules, symmetric_terracini_matrix,
    symmetric_terracini_rank, tensor_to_poly, w3_kron_polynomial, w3_polynomial, w3_square_decomposition, w_state,
    waring_w3kron_decomposition,
)


SMALL_PRIME = 2147483647

# every (d, n) with dim S^d(C^n) <= 500
AH_GRID = [(d, n) for n in range(2, 32) for d in range(2, 500) if comb(n + d - 1, d) <= 500]


def test_exponent_indices_and_multinomials():
    assert exponent_indices(3, 2) == [(0, 3), (1, 2), (2, 1), (3, 0)]
    assert len(exponent_indices(4, 3)) == 15
    assert multinomial((1, 1, 1)) == 6
    assert multinomial((2, 1)) == 3


def test_w3_polynomial_round_trip(w3):
    assert np.all(poly_to_tensor(w3_polynomial()).entries == w3.entries)
    assert tensor_to_poly(w3) == w3_polynomial()
    x1, x2 = symbols('x1 x2')
    assert (w3_polynomial().expression() - 3 * x1**2 * x2).expand() == 0


def test_w3_kron_polynomial_is_the_kronecker_square(wkron2):
    assert np.all(poly_to_tensor(w3_kron_polynomial()).entries == wkron2.entries)
    x1, x2, x3, x4 = symbols('x1:5')
    assert (w3_kron_polynomial().expression() - 3 * x1**2 * x4 - 6 * x1 * x2 * x3).expand() == 0


def test_zero_coefficients_are_dropped():
    f = HomogeneousPolynomial(2, 2, {(2, 0): exact(0), (1, 1): exact(1)})
    assert list(f.coeffs) == [(1, 1)]
    with pytest.raises(TensorError):
        HomogeneousPolynomial(2, 2, {(2, 1): exact(1)})


def test_is_symmetric(ghz, w3):
    assert is_symmetric(ghz) and is_symmetric(w3)
    assert not is_symmetric(basis_tensor((2, 2, 2), (1, 1, 2)))
    assert not is_symmetric(basis_tensor((2, 3), (1, 1)))
    with pytest.raises(TensorError):
        tensor_to_poly(basis_tensor((2, 2, 2), (1, 1, 2)))


@pytest.mark.parametrize('d, n, expected, flag', [
    (2, 5, 5, 'quadratic-form'),
    (3, 3, 4, 'generic'),
    (4, 3, 6, 'exception'),
    (3, 5, 8, 'exception'),
    (5, 3, 7, 'generic'),
])
def test_ah_generic_symmetric_rank(d, n, expected, flag):
    assert ah_generic_symmetric_rank(d, n) == (expected, flag)


@pytest.mark.parametrize('d, n', [(3, 2), (3, 3), (4, 3), (3, 5), (4, 4), (5, 3)])
def test_symmetric_terracini_matches_formula(d, n):
    assert symmetric_generic_rank(d, n, seed=1, prime=SMALL_PRIME) == ah_generic_symmetric_rank(d, n).value


def test_symmetric_terracini_with_large_prime():
    assert symmetric_generic_rank(3, 3) == 4


def test_symmetric_terracini_rank_of_binary_cubics():
    assert symmetric_terracini_rank(3, 2, 1, prime=SMALL_PRIME) == 2
    assert symmetric_terracini_rank(3, 2, 2, prime=SMALL_PRIME) == 4


def test_grid_holds_every_exception():
    assert AH_EXCEPTIONS <= set(AH_GRID)
    assert len(AH_GRID) > 500


@pytest.mark.parametrize('d, n', AH_GRID)
def test_symmetric_terracini_saturates_at_ah_value(d, n):
    target = comb(n + d - 1, d)
    value = ah_generic_symmetric_rank(d, n).value
    columns = (value - 1) * n
    if columns < target:
        assert (d, n) not in AH_EXCEPTIONS
        assert symmetric_terracini_matrix(d, n, value - 1, prime=SMALL_PRIME).shape == (target, columns)
    else:
        assert symmetric_terracini_rank(d, n, value - 1, prime=SMALL_PRIME) < target
    assert symmetric_terracini_rank(d, n, value, prime=SMALL_PRIME) == target


def test_symmetric_generic_rank_is_capped(monkeypatch):
    monkeypatch.setattr(symmetric, 'symmetric_terracini_rank', lambda *args: 0)
    with pytest.raises(BudgetExceeded):
        symmetric_generic_rank(3, 2)


def test_known_max_symmetric_rank():
    assert known_max_symmetric_rank(3, 3) == (5, False, None)
    assert known_max_symmetric_rank(5, 2).value == 5
    assert known_max_symmetric_rank(2, 4).value == 4
    bound = known_max_symmetric_rank(3, 4)
    assert bound.bound_only and bound.note == 'r_max(3,4) >= 7'


def test_waring_decomposition_of_w3_kronecker_square(wkron2):
    dec = waring_w3kron_decomposition()
    assert len(dec) == 7 and dec.exact
    assert np.all(evaluate(dec).entries == wkron2.entries)
    for term in dec.terms:
        assert all(np.all(f == term.factors[0]) for f in term.factors)


def test_eight_term_decomposition_of_w3_squared(w3):
    dec = w3_square_decomposition()
    assert len(dec) == 8 and dec.exact
    assert np.all(evaluate(dec).entries == tensor_product(w3, w3).entries)


def test_border_demo_exact():
    T = evaluate(border_rank_demo_wd(3, Fraction(1, 10)))
    assert T.exact
    assert exact_parts(T.entries[0, 0, 1]) == (1, 0)
    assert exact_parts(T.entries[0, 1, 1]) == (Fraction(1, 10), 0)
    assert exact_parts(T.entries[1, 1, 1]) == (Fraction(1, 100), 0)
    assert not bool(T.entries[0, 0, 0])


def test_border_residual_decays_linearly():
    ratios = [border_residual(3, t / 10) / border_residual(3, t) for t in (1e-2, 1e-3, 1e-4)]
    assert ratios == pytest.approx([0.1] * 3, rel=1e-3)
    assert border_residual(4, 1e-3) == pytest.approx(np.sqrt(6) * 1e-3, rel=1e-2)
    with pytest.raises(TensorError):
        border_rank_demo_wd(3, 0)


def test_symmetric_rank_rules():
    assert len(symmetric_rank_rules(3, 3)) == 1
    assert symmetric_rank_rules(3, 4) == []
    assert symmetric_rank_rules(3, None) == []


def test_polynomial_files(tmp_path):
    path = tmp_path / 'kron.json'
    save_polynomial(str(path), w3_kron_polynomial())
    assert load_polynomial(str(path)) == w3_kron_polynomial()
    sample = Path(__file__).resolve().parent.parent / 'sample-data' / 'w3_poly.json'
    assert load_polynomial(str(sample)) == w3_polynomial()


@pytest.mark.parametrize('data', [
    {'d': 3},
    {'d': 3, 'n': 2, 'coeffs': {'2,2': [1, 1, 0, 1]}},
    {'d': 3, 'n': 2, 'coeffs': {'2,1': [1, 0, 0, 1]}},
    {'d': 3, 'n': 2, 'coeffs': {'2,1': [1]}},
])
def test_malformed_polynomials(data):
    with pytest.raises(MalformedTensorFile):
        polynomial_from_json(data)


def test_w_state_needs_two_modes():
    with pytest.raises(TensorError):
        w_state(1)
    assert kronecker(w_state(2), w_state(2)).shape == (4, 4)
