import numpy as np
import pytest
from math import log2, sqrt
from tensorank.common import (
    CertificateError, DenseTensor, TensorError, apply_local_operators, basis_tensor, evaluate, frobenius_norm,
    identity_tensor, inner_product, normalize, zeros,
)
from tensorank.norms import (
    entanglement_measures, geometric_measure, nuclear_lower_bound_flatten, nuclear_norm, nuclear_rank_estimate,
    nuclear_result_from_decomposition, slice_trace_witness, spectral_norm, spectral_norm_2slice,
    symmetric_spectral_norm, verify_w3_nuclear_decomposition, w3_nuclear_decomposition, w3_nuclear_residual,
)
from tensorank.symmetric import ghz_state, w_state


@pytest.fixture
def w3_unit():
    return w_state(3, normalized=True)


def random_tensor(shape, seed):
    rng = np.random.default_rng(seed)
    return DenseTensor(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def random_unitary(n, rng):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return Q


def evaluate_term(term):
    out = term.factors[0]
    for f in term.factors[1:]:
        out = np.multiply.outer(out, f)
    return term.weight * out


def test_w3_spectral_norm(w3_unit):
    result = spectral_norm(w3_unit, starts=32, seed=1)
    assert result.value == pytest.approx(2 / 3, abs=1e-9)
    overlap = abs(np.vdot(evaluate_term(result.maximizer), w3_unit.numeric()))
    assert overlap == pytest.approx(2 / 3, abs=1e-9)


def test_w3_two_slice_sweep(w3_unit):
    assert spectral_norm_2slice(w3_unit).value == pytest.approx(2 / 3, abs=1e-7)


def test_w3_symmetric_spectral_norm(w3_unit):
    assert symmetric_spectral_norm(w3_unit, seed=2).value == pytest.approx(2 / 3, abs=1e-9)


def test_symmetric_spectral_norm_rejects_asymmetric():
    with pytest.raises(TensorError):
        symmetric_spectral_norm(basis_tensor((2, 2, 2), (1, 1, 2)))


def test_spectral_norm_of_matrix_and_vector():
    M = DenseTensor(np.diag([3.0, 1.0]))
    assert spectral_norm(M).value == pytest.approx(3)
    v = DenseTensor(np.array([3.0, 4.0]))
    assert spectral_norm(v).value == pytest.approx(5)


def test_product_state_has_unit_spectral_norm():
    T = normalize(basis_tensor((2, 3, 2), (2, 3, 1)))
    assert spectral_norm(T).value == pytest.approx(1)
    assert geometric_measure(T, 1.0) == 0


def test_zero_tensor_has_no_norm():
    with pytest.raises(TensorError):
        spectral_norm(zeros((2, 2, 2)))


def test_w3_nuclear_decomposition_is_exact():
    assert verify_w3_nuclear_decomposition()
    error, energy = w3_nuclear_residual()
    assert error < 1e-12 and energy == pytest.approx(1.5)
    # the cube roots of unity alone do not cancel the |111> component
    assert not verify_w3_nuclear_decomposition(zeta=np.exp(2j * np.pi / 3))


def test_w3_nuclear_from_decomposition(w3_unit):
    result = nuclear_result_from_decomposition(w3_unit, w3_nuclear_decomposition(), seed=1)
    assert result.primal_value == pytest.approx(1.5)
    assert result.dual_value == pytest.approx(1.5, abs=1e-8)
    assert result.verified
    assert nuclear_rank_estimate(result).rank == 3
    assert nuclear_rank_estimate(result).heuristic


def test_nuclear_from_wrong_decomposition_fails(w3_unit):
    with pytest.raises(CertificateError):
        nuclear_result_from_decomposition(normalize(ghz_state(2, 3)), w3_nuclear_decomposition())


def test_flattening_nuclear_bound(w3_unit):
    assert nuclear_lower_bound_flatten(w3_unit) == pytest.approx((1 + sqrt(2)) / sqrt(3))


def test_ghz_nuclear_norm():
    result = nuclear_norm(normalize(ghz_state(2, 3)), seed=4)
    assert result.primal_value == pytest.approx(sqrt(2), abs=1e-6)
    assert result.dual_value <= result.primal_value + 1e-9
    assert result.verified
    assert len(result.decomposition) == 2


def test_w3_nuclear_norm(w3_unit):
    result = nuclear_norm(w3_unit, seed=5)
    assert result.dual_value == pytest.approx(1.5, abs=1e-6)
    assert result.primal_value == pytest.approx(1.5, abs=1e-4)
    reconstruction = evaluate(result.decomposition).numeric()
    assert np.linalg.norm(reconstruction - w3_unit.numeric()) < 1e-6
    assert nuclear_lower_bound_flatten(w3_unit) <= result.primal_value + 1e-9


def test_matrix_nuclear_norm_is_trace_norm():
    M = DenseTensor(np.array([[3.0, 0.0], [0.0, -2.0]]))
    result = nuclear_norm(M)
    assert result.primal_value == pytest.approx(5)
    assert result.gap == pytest.approx(0, abs=1e-12)


def test_entanglement_measures(w3_unit):
    measures = entanglement_measures(w3_unit, rank_hint=3, seed=1)
    assert measures.eta == pytest.approx(log2(9 / 4), abs=1e-8)
    assert measures.eta_upper == pytest.approx(2)
    assert measures.schmidt_measure == pytest.approx(log2(3))
    assert measures.geometric_measure == pytest.approx(sqrt(2 / 3), abs=1e-8)


def test_entanglement_measures_need_unit_norm(w3):
    with pytest.raises(TensorError):
        entanglement_measures(w3)


def test_slice_trace_witness_is_dual_feasible(w3):
    W = slice_trace_witness(w3)
    assert W.shape == (2, 2, 2)
    assert spectral_norm(W).value == pytest.approx(1.0, abs=1e-6)
    assert abs(inner_product(w3, W)) <= 1.5 * sqrt(3) + 1e-6


def test_unnormalized_ghz_nuclear_norm():
    result = nuclear_norm(identity_tensor(2, 3))
    assert result.primal_value == pytest.approx(2, abs=1e-6)
    assert result.dual_value == pytest.approx(2, abs=1e-6)
    assert result.verified


@pytest.mark.parametrize('seed', range(100))
def test_matrix_norms_match_svd(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(1, 6, size=2)
    M = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    s = np.linalg.svd(M, compute_uv=False)
    T = DenseTensor(M)
    assert spectral_norm(T).value == pytest.approx(s[0], rel=1e-9)
    assert nuclear_norm(T).primal_value == pytest.approx(np.sum(s), rel=1e-9)


def test_spectral_agreement_follows_tol():
    # tol=1 stops every start after one sweep
    result = spectral_norm(random_tensor((3, 3, 3), 7), starts=8, tol=1.0)
    assert result.starts_converged == 8
    assert result.accepted


@pytest.mark.parametrize('shape, seed', [((2, 2, 2), 0), ((2, 2, 2), 1), ((2, 3, 2), 2), ((3, 3, 2), 3)])
def test_spectral_norm_is_unitarily_invariant(shape, seed):
    T = random_tensor(shape, seed)
    rng = np.random.default_rng(seed + 100)
    U = apply_local_operators(T, [random_unitary(n, rng) for n in shape])
    a = spectral_norm(T, tol=1e-14, max_iter=5000).value
    b = spectral_norm(U, tol=1e-14, max_iter=5000).value
    assert a == pytest.approx(b, abs=1e-9)


@pytest.mark.parametrize('seed', range(3))
def test_nuclear_norm_is_unitarily_invariant(seed):
    shape = (2, 2, 2)
    T = random_tensor(shape, seed)
    rng = np.random.default_rng(seed + 200)
    a = nuclear_norm(T, seed=seed)
    b = nuclear_norm(apply_local_operators(T, [random_unitary(n, rng) for n in shape]), seed=seed)
    # both values bracket the same norm
    assert abs(a.primal_value - b.primal_value) <= max(a.gap, b.gap) + 1e-6
    M = DenseTensor(rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4)))
    V = apply_local_operators(M, [random_unitary(3, rng), random_unitary(4, rng)])
    assert nuclear_norm(M).primal_value == pytest.approx(nuclear_norm(V).primal_value, abs=1e-9)


@pytest.mark.parametrize('name', ['w3', 'ghz', 'random222', 'random232'])
def test_norm_duality_sandwich(name, w3_unit):
    T = {
        'w3': w3_unit,
        'ghz': ghz_state(2, 3),
        'random222': random_tensor((2, 2, 2), 11),
        'random232': random_tensor((2, 3, 2), 12),
    }[name]
    fro = frobenius_norm(T)
    spectral = spectral_norm(T).value
    nuclear = nuclear_norm(T)
    # the LP primal carries its solver feasibility tolerance
    assert nuclear_lower_bound_flatten(T) <= nuclear.primal_value + 1e-6
    assert nuclear.dual_value <= nuclear.primal_value + 1e-6
    assert spectral * nuclear.primal_value >= fro**2 * (1 - 1e-6)
    assert spectral <= fro + 1e-12
    assert spectral >= fro / sqrt(T.entries.size / max(T.shape)) - 1e-12


@pytest.mark.parametrize('scale', [1e-3, 1.0, 1e3])
def test_norms_are_homogeneous(scale, w3_unit):
    T = DenseTensor(scale * w3_unit.numeric())
    assert spectral_norm(T, seed=1).value == pytest.approx(scale * 2 / 3, rel=1e-8)
    assert nuclear_lower_bound_flatten(T) == pytest.approx(scale * nuclear_lower_bound_flatten(w3_unit), rel=1e-12)
    G = DenseTensor(scale * ghz_state(2, 3).numeric())
    assert nuclear_norm(G).primal_value == pytest.approx(2 * scale, rel=1e-6)
