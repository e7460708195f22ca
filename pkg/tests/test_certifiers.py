import json
import numpy as np
import pytest
from tensorank.certifiers import direct_sum_report, kronecker_audit, kronecker_groups, rank_report
from tensorank.certifiers.als import (
    GUARD_FACTOR, als_fit, als_rank_upper, factors_to_decomposition, khatri_rao, max_term_weight, within_guard,
)
from tensorank.certifiers.common import certificate, merge_certificates, report_to_json, verify
from tensorank.certifiers.determinant import (
    constant_determinant, determinant_lower_bound, w3kron2_determinant_certificate,
)
from tensorank.certifiers.flattening import flattening_lower_bound
from tensorank.certifiers.known import known_certificates, max_rank_certificate, named_states, recognize
from tensorank.certifiers.kruskal import (
    kruskal_blocks, kruskal_certificate, kruskal_rank, match_decompositions, uniqueness_witness,
)
from tensorank.certifiers.pencil_exact import pencil_certificate
from tensorank.certifiers.strassen import AdditivityEvidence, additivity_reasons, strassen_condition
from tensorank.common import (
    BudgetExceeded, CertificateError, Decomposition, DenseTensor, RankOneTerm, TensorError, basis_vector,
    exact, exact_array, identity_tensor, tensor_product, to_numeric, zeros,
)
from tensorank.pencil import jordan_pencil, pencil_tensor, rank_mxnx2, singular_block
from tensorank.symmetric import border_rank_demo_wd


def random_rank3(seed: int) -> DenseTensor:
    rng = np.random.default_rng(seed)
    A, B, C = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(3))
    return DenseTensor(np.einsum('ir,jr,kr->ijk', A, B, C))


def kinds(report):
    return {c.kind for c in report.certificates}


# Flattening

def test_flattening_bounds(w3, wkron2, wsquare):
    assert flattening_lower_bound(w3).value == 2
    assert flattening_lower_bound(w3).direction == 'lower'
    assert flattening_lower_bound(wkron2).value == 4
    regrouped = flattening_lower_bound(wsquare, kronecker_groups(6))
    assert regrouped.value == 4 and regrouped.payload['groups'] == [[0, 3], [1, 4], [2, 5]]


def test_flattening_of_a_matrix_is_exact():
    cert = flattening_lower_bound(identity_tensor(3, 2))
    assert cert.value == 3 and cert.direction == 'exact'


def test_balanced_split_beats_single_modes():
    T = tensor_product(identity_tensor(2, 2), identity_tensor(2, 2))
    cert = flattening_lower_bound(T)
    assert cert.value == 4
    assert cert.payload['modes'] == (0, 2)
    assert cert.payload['ranks']['0'] == 2


# Pencil

def test_pencil_certificate(w3):
    cert = pencil_certificate(w3)
    assert cert.value == 3 and cert.direction == 'exact'
    assert cert.payload['label'] == 'regular'
    assert pencil_certificate(to_numeric(w3)) is None
    assert pencil_certificate(to_numeric(w3), max_denominator=1000).value == 3
    assert pencil_certificate(zeros((3, 3, 3))) is None


# ALS

def test_khatri_rao_columns():
    A = np.arange(4).reshape(2, 2).astype(complex)
    B = np.arange(6).reshape(3, 2).astype(complex)
    K = khatri_rao([A, B])
    assert K.shape == (6, 2)
    assert np.allclose(K[:, 1], np.kron(A[:, 1], B[:, 1]))


def test_als_fits_ghz(ghz):
    fit = als_fit(ghz, 2, seed=3)
    assert fit.accepted and fit.residual < 1e-8
    assert len(fit.decomposition) == 2


def test_als_cannot_certify_w3_with_two_terms(w3):
    assert als_rank_upper(to_numeric(w3), r_cap=2) is None
    cert = als_rank_upper(to_numeric(w3), r_cap=3)
    assert cert.value == 3
    assert cert.payload['guard_factor'] == GUARD_FACTOR
    assert verify(w3, cert)


def test_border_fit_fails_the_guard(w3):
    border = border_rank_demo_wd(3, 1e-6)
    assert not within_guard(border, w3)
    assert max_term_weight(border) > GUARD_FACTOR * np.sqrt(3)
    assert within_guard(border_rank_demo_wd(3, 0.5), w3)
    cert = certificate(
        'decomposition-upper', 2, 'upper', decomposition=border, fit_tol=1e-5, guard_factor=GUARD_FACTOR,
    )
    # close enough to pass the residual check, but only through huge terms
    assert not verify(w3, cert)
    unguarded = certificate('decomposition-upper', 2, 'upper', decomposition=border, fit_tol=1e-5)
    assert verify(w3, unguarded)


def test_als_trivial_cases():
    assert als_rank_upper(zeros((2, 2, 2)), r_cap=3).value == 0
    assert als_rank_upper(DenseTensor(np.array([1.0, 2.0])), r_cap=3).value == 1


def test_factors_to_decomposition_skips_zero_columns():
    factors = [np.array([[1, 0], [0, 0]], dtype=complex), np.array([[2, 1], [0, 1]], dtype=complex)]
    dec = factors_to_decomposition(factors)
    assert len(dec) == 1
    assert dec.terms[0].weight == pytest.approx(2)


def exact_pencil_tensor(A, B):
    return pencil_tensor(exact_array(A), exact_array(B))


def pencil_examples():
    jordan, block = jordan_pencil(0, 2), singular_block(2)
    examples = [
        exact_pencil_tensor([[1, 0, 0], [0, 1, 0], [0, 0, 1]], [[1, 0, 0], [0, 2, 0], [0, 0, 3]]),
        exact_pencil_tensor([[1, 0], [0, 1]], [[0, 1], [-1, 0]]),
        pencil_tensor(jordan.A, jordan.B),
        pencil_tensor(block.A, block.B),
    ]
    rng = np.random.default_rng(11)
    for shape in [(2, 2, 2), (3, 2, 2), (3, 3, 2), (3, 3, 2)]:
        examples.append(DenseTensor(exact_array(rng.integers(-3, 4, size=shape).tolist())))
    return examples


@pytest.mark.parametrize('T', pencil_examples())
def test_pencil_rank_agrees_with_als(T):
    rank, _ = rank_mxnx2(T)
    flattening = flattening_lower_bound(T).value
    assert flattening <= rank
    if rank == 0:
        return
    cert = als_rank_upper(T, r_cap=rank)
    assert cert is not None and cert.value == rank
    assert als_rank_upper(T, r_cap=rank - 1) is None


# Kruskal

def test_kruskal_rank():
    e1, e2 = basis_vector(2, 1), basis_vector(2, 2)
    assert kruskal_rank([e1, e1, e2]) == 1
    assert kruskal_rank([e1, e2, e1 + e2]) == 2
    with pytest.raises(TensorError):
        kruskal_rank([e1, e1 * exact(0)])
    with pytest.raises(BudgetExceeded):
        kruskal_rank([e1] * 21)


def test_kruskal_blocks():
    assert kruskal_blocks((2, 2, 2)) == [(0,), (1,), (2,)]
    assert kruskal_blocks((2, 2, 2, 2)) == [(0,), (1,), (2, 3)]
    assert kruskal_blocks((2,) * 6) == [(0,), (1, 2), (3, 4, 5)]


def test_kruskal_certifies_ghz(ghz):
    certs, _ = known_certificates(ghz)
    dec = next(c for c in certs if c.kind == 'decomposition-upper').payload['decomposition']
    cert = kruskal_certificate(dec)
    assert cert.value == 2 and cert.direction == 'exact'
    assert cert.payload['kruskal_ranks'] == [2, 2, 2]
    assert verify(ghz, cert)


def test_kruskal_needs_three_modes():
    dec = Decomposition((2, 2), [RankOneTerm(exact(1), (basis_vector(2, 1), basis_vector(2, 2)))])
    with pytest.raises(TensorError):
        kruskal_certificate(dec)


def test_kruskal_uniqueness_of_random_rank3():
    T = random_rank3(5)
    fit = als_fit(T, 3, seed=0)
    assert fit.accepted
    cert = kruskal_certificate(fit.decomposition, fit_tol=1e-8)
    assert cert is not None and cert.value == 3
    assert verify(T, cert)
    assert uniqueness_witness(T, cert, starts=4)


def test_match_decompositions():
    rng = np.random.default_rng(2)
    terms = [
        RankOneTerm(complex(w), tuple(rng.standard_normal(2) + 0j for _ in range(3)))
        for w in (1.0, 2.0)
    ]
    dec = Decomposition((2, 2, 2), terms)
    rescaled = [
        RankOneTerm(t.weight / 4, (2 * t.factors[0], -t.factors[1], -2 * t.factors[2])) for t in reversed(terms)
    ]
    assert match_decompositions(dec, Decomposition((2, 2, 2), rescaled))
    shifted = [RankOneTerm(t.weight, (t.factors[0] + 1, t.factors[1], t.factors[2])) for t in terms]
    assert not match_decompositions(dec, Decomposition((2, 2, 2), shifted))
    assert not match_decompositions(dec, Decomposition((2, 2, 2), terms[:1]))


# Determinant criterion

def test_w3kron2_determinant_certificate():
    cert = w3kron2_determinant_certificate()
    assert cert.value == 7 and cert.direction == 'lower'
    assert cert.payload['mode'] == 0 and cert.payload['affine_slice'] == 0


def test_determinant_refuses_perturbed_slices(wkron2):
    T = wkron2.copy()
    # an entry below the antidiagonal makes the determinant depend on the coefficients
    T.entries[1, 3, 3] = exact(1)
    assert determinant_lower_bound(T, mode=0, affine_slice=0) is None


def test_determinant_needs_exact_3_mode_input(wkron2):
    with pytest.raises(TensorError):
        determinant_lower_bound(to_numeric(wkron2))
    with pytest.raises(TensorError):
        determinant_lower_bound(identity_tensor(2, 2))


def test_constant_determinant():
    identity = exact_array([[1, 0], [0, 1]])
    upper = exact_array([[0, 1], [0, 0]])
    diagonal = exact_array([[1, 0], [0, 0]])
    assert constant_determinant(identity, [upper])
    assert not constant_determinant(identity, [diagonal])
    assert not constant_determinant(diagonal, [upper])


# Strassen conditions

@pytest.mark.parametrize('n, p, reason', [
    ((2, 2, 2), (4, 4, 4), 'a mode of size 2'),
    ((3, 3, 3), (4, 4, 4), 'a summand of shape (k,3,3)'),
    ((3, 4, 10), (5, 5, 5), 'n_i n_j - n_k = 2'),
])
def test_additivity_reasons(n, p, reason):
    assert reason in additivity_reasons(n, p)
    assert strassen_condition(n, p)


def test_additivity_from_rank_evidence():
    assert not strassen_condition((4, 4, 4), (5, 5, 5))
    assert strassen_condition((4, 4, 4), (5, 5, 5), AdditivityEvidence(4, 6))
    assert not strassen_condition((4, 4, 4), (5, 5, 5), AdditivityEvidence(4, 7))
    assert strassen_condition((4, 4, 4), (5, 5, 5), None, AdditivityEvidence(5, 7))
    with pytest.raises(ValueError):
        additivity_reasons((2, 2), (2, 2, 2))


# Known values and merging

def test_recognize_named_states(w3, wkron2, wsquare):
    assert recognize(w3).state.name == 'w:3'
    scaled = DenseTensor(w3.entries * exact(2))
    recognition = recognize(scaled)
    assert recognition.state.name == 'w:3' and recognition.scale == exact(2)
    assert recognize(wkron2).state.name == 'wkron2'
    assert recognize(wsquare).state.name == 'wsquare'
    assert recognize(random_rank3(1)) is None


def test_scaled_construction_verifies(w3):
    scaled = DenseTensor(w3.entries * exact(0, 3))
    certs, _ = known_certificates(scaled)
    construction = next(c for c in certs if c.kind == 'decomposition-upper')
    assert construction.value == 3
    assert verify(scaled, construction)


def test_w3_cube_is_only_bracketed(w3):
    cube = tensor_product(tensor_product(w3, w3), w3)
    assert [s.name for s in named_states(cube.shape)][-1] == 'wcube'
    certs, notes = known_certificates(cube)
    assert sorted((c.direction, c.value) for c in certs) == [('lower', 16), ('upper', 20)]
    assert notes == ['wcube: rank only bracketed, 16 <= r <= 20']


def test_max_rank_certificate(w3):
    cert = max_rank_certificate(w3)
    assert cert.value == 3 and cert.direction == 'upper' and not cert.computed
    assert verify(w3, cert)


def test_merge_certificates():
    lower = certificate('flattening-lower', 2, 'lower', modes=(0,), ranks={})
    upper = certificate('decomposition-upper', 4, 'upper', decomposition=None)
    known = certificate('table-known', 3, 'exact', name='x')
    report = merge_certificates([lower, upper, known], upper=10)
    assert (report.lower, report.upper, report.exact) == (3, 3, 3)
    report = merge_certificates([lower, upper], upper=10)
    assert (report.lower, report.upper, report.exact) == (2, 4, None)


def test_merge_rejects_contradictions():
    lower = certificate('determinant-lower', 5, 'lower', mode=0, affine_slice=0)
    upper = certificate('decomposition-upper', 4, 'upper', decomposition=None)
    with pytest.raises(CertificateError):
        merge_certificates([lower, upper], upper=10)
    known = certificate('table-known', 6, 'exact', name='x')
    with pytest.raises(CertificateError):
        merge_certificates([upper, known], upper=10)
    with pytest.raises(ValueError):
        certificate('guess', 3, 'exact')
    with pytest.raises(ValueError):
        certificate('table-known', 3, 'sideways')


def test_verify_rejects_corrupted_certificates(w3, ghz):
    flattening = flattening_lower_bound(w3)
    assert verify(w3, flattening)
    assert not verify(w3, flattening._replace(value=3))
    pencil = pencil_certificate(w3)
    assert not verify(ghz, pencil)
    assert not verify(w3, certificate('determinant-lower', 3, 'lower'))
    certs, _ = known_certificates(w3)
    construction = next(c for c in certs if c.kind == 'decomposition-upper')
    dec = construction.payload['decomposition']
    broken = Decomposition(dec.shape, dec.terms[:2])
    assert not verify(w3, construction._replace(payload={**construction.payload, 'decomposition': broken}))
    assert not verify(w3, construction._replace(value=2))


# Reports

def test_w3_report(w3):
    report = rank_report(w3, verify_certificates=True)
    assert (report.lower, report.upper, report.exact) == (3, 3, 3)
    assert 'pencil-exact' in kinds(report)


def test_numeric_w3_report(w3):
    report = rank_report(to_numeric(w3))
    assert report.exact == 3
    assert 'pencil-exact' not in kinds(report)
    assert 'table-known' in kinds(report)


def test_ghz_report(ghz):
    report = rank_report(ghz, verify_certificates=True)
    assert report.exact == 2
    assert 'kruskal-exact' in kinds(report)


def test_w3_kronecker_square_report(wkron2):
    report = rank_report(wkron2)
    assert report.exact == 7
    determinant = next(c for c in report.certificates if c.kind == 'determinant-lower')
    assert determinant.value == 7


def test_w3_squared_report(wsquare):
    report = rank_report(wsquare, verify_certificates=True)
    assert (report.lower, report.upper, report.exact) == (8, 8, 8)
    determinant = next(c for c in report.certificates if c.kind == 'determinant-lower')
    assert determinant.value == 7
    assert determinant.payload['groups'] == [[0, 3], [1, 4], [2, 5]]
    assert json.loads(json.dumps(report_to_json(report)))['exact'] == 8


def test_random_rank3_report():
    report = rank_report(random_rank3(9))
    assert report.exact == 3
    assert 'kruskal-exact' in kinds(report)


def test_zero_report():
    report = rank_report(zeros((2, 2, 2)))
    assert (report.lower, report.upper, report.exact) == (0, 0, 0)


def test_report_without_als_keeps_a_bracket():
    T = DenseTensor(np.random.default_rng(4).standard_normal((3, 3, 3)) + 0j)
    report = rank_report(T, run_als=False)
    assert report.lower == 3 and report.upper == 5 and report.exact is None


def test_kronecker_groups():
    assert kronecker_groups(3) is None
    assert kronecker_groups(4) is None
    assert kronecker_groups(6) == [[0, 3], [1, 4], [2, 5]]
    assert kronecker_groups(9) == [[0, 3, 6], [1, 4, 7], [2, 5, 8]]


def test_direct_sum_is_additive(w3, ghz):
    report = direct_sum_report(w3, ghz, run_als=False)
    assert report.exact == 5
    assert any(note.startswith('additivity holds') for note in report.notes)


def test_kronecker_audit(w3):
    assert kronecker_audit(w3, w3)
