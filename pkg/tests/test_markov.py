from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnslab import generators as gen
from gnslab import numeric as nm
from gnslab.algebra import (
    StarLinearMap,
    conjugation_hom,
    identity_hom,
    make_function_algebra,
    make_matrix_algebra,
    unit_inclusion,
)
from gnslab.errors import NoFaithfulRep, NotAdmissible, NotCP, NotIsometric, NotProjection, NotUnitary
from gnslab.gns import gns_map, make_state, monoidal_iso, phys_morphism, vectorial_state
from gnslab.markov import (
    MarkovMorphism,
    choi_matrix,
    conditioning,
    conditioning_map,
    evolve,
    gns_m,
    gns_mc,
    is_admissible_linear,
    is_completely_positive,
    kraus_map,
    markov_morphism,
    omega_transport_residual,
    scattering,
    stinespring,
    tensor_markov,
)

seeds = st.integers(0, 2**32 - 1)
PAULI_X = [[0, 1], [1, 0]]


def transpose_map(n=2):
    alg = make_matrix_algebra(n)
    t = nm.zeros((n * n, n * n), nm.EXACT)
    for p in range(n):
        for q in range(n):
            t[q * n + p, p * n + q] = nm.ONE
    return StarLinearMap(alg, alg, t)


def random_cp(rng, n_dom, n_cod, rank=2, backend=nm.EXACT):
    a, b = make_matrix_algebra(n_dom, backend), make_matrix_algebra(n_cod, backend)
    return kraus_map(a, b, gen.random_kraus(rng, n_dom, n_cod, rank, backend))


# -- admissibility


def test_admissibility_examples():
    rng = np.random.default_rng(0)
    hom = gen.random_inner_automorphism(rng, 2)
    phi = gen.random_positive_state(rng, hom.cod)
    assert is_admissible_linear(hom, phi)
    cp = random_cp(rng, 2, 3)
    assert is_admissible_linear(cp, gen.random_positive_state(rng, cp.cod, zero_prob=0.5, max_vectors=1))
    alg = make_function_algebra(["x", "y"])
    cert = is_admissible_linear(unit_inclusion(alg), make_state(alg, [1, -1]))
    assert not cert and list(cert.witness) == [1]
    with pytest.raises(NotAdmissible):
        gns_m(markov_morphism(unit_inclusion(alg), make_state(alg, [1, -1])))


# -- the covariant-free GNS_M map


def test_gns_m_of_homomorphism_is_gns_map():
    rng = np.random.default_rng(1)
    ch = gen.random_chain(rng)
    pm = phys_morphism(ch.outer, ch.state)
    assert nm.equal(gns_m(MarkovMorphism.from_phys(pm)), gns_map(pm))
    assert nm.equal(gns_m(markov_morphism(ch.outer, ch.state)), gns_map(pm))


def test_gns_m_of_averaging_map():
    m2 = make_matrix_algebra(2)
    flip = conjugation_hom(m2, nm.exact_array(PAULI_X)).matrix
    avg = StarLinearMap(m2, m2, (nm.eye(4, nm.EXACT) + flip) * F(1, 2))
    m = markov_morphism(avg, vectorial_state(m2, [1, 0]))
    # phi(a) = a_00 and classes are first columns: [a] = (a_00, a_10)
    assert m.cod_state.gns_space.dim == 4
    h = F(1, 2)
    assert gns_m(m).tolist() == [[h, 0, 0, h], [0, h, h, 0]]
    assert omega_transport_residual(m) == 0


def test_gns_mc_identity():
    rng = np.random.default_rng(2)
    phi = gen.random_positive_state(rng, make_matrix_algebra(2))
    m = markov_morphism(identity_hom(phi.algebra), phi)
    assert nm.equal(gns_mc(m), nm.eye(phi.gns_space.dim, nm.EXACT))


# -- complete positivity


def test_homomorphisms_are_cp():
    rng = np.random.default_rng(3)
    for _ in range(5):
        check = is_completely_positive(gen.random_small_hom(rng))
        assert check and check.cp_map.unital


def test_transpose_is_not_cp():
    check = is_completely_positive(transpose_map())
    assert not check
    assert abs(check.min_eigenvalue + 1) < 1e-12
    w = check.witness
    assert (np.conjugate(w) @ check.choi @ w) < 0
    # Choi matrix of the transpose is the swap on C^2 (x) C^2
    swap = nm.zeros((4, 4), nm.EXACT)
    for i in range(2):
        for j in range(2):
            swap[i * 2 + j, j * 2 + i] = nm.ONE
    assert nm.equal(choi_matrix(transpose_map()), swap)
    with pytest.raises(NotCP):
        stinespring(transpose_map(), vectorial_state(make_matrix_algebra(2), [1, 0]))


def test_compression_has_kraus_rank_one():
    m2 = make_matrix_algebra(2)
    check = is_completely_positive(conditioning_map(m2.element([1, 0, 0, 0])))
    assert check and check.cp_map.kraus_rank == 1 and not check.cp_map.unital


def test_choi_needs_faithful_representations():
    alg = make_function_algebra(["x", "y"])
    bare = type(alg)(alg.labels, alg.terms, alg.unit, alg.star, None, alg.backend)
    with pytest.raises(NoFaithfulRep):
        is_completely_positive(StarLinearMap(bare, bare, nm.eye(2, nm.EXACT)))


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_kraus_maps_are_cp_and_compose(seed):
    rng = np.random.default_rng(seed)
    f = random_cp(rng, 2, 3, rank=int(rng.integers(1, 3)))
    g = random_cp(rng, 3, 2, rank=int(rng.integers(1, 3)))
    cf, cg = is_completely_positive(f), is_completely_positive(g)
    assert cf and cg
    assert cf.cp_map.kraus_rank <= 2 and cg.cp_map.kraus_rank <= 2
    assert is_completely_positive(g.compose(f))


# -- Stinespring


def test_stinespring_identity():
    m2 = make_matrix_algebra(2)
    phi = vectorial_state(m2, [1, nm.gauss(0, 1)])
    d = stinespring(identity_hom(m2), phi)
    assert d.ok and d.residual == 0 and d.rep_residual == 0


def test_stinespring_of_compression():
    m2 = make_matrix_algebra(2)
    phi = vectorial_state(m2, [1, 1])
    d = stinespring(conditioning_map(m2.element([1, 0, 0, 0])), phi)
    assert d.ok and d.residual == 0
    # classes [a (x) b] reduce to a E11 b v, spanning a E11 C^2 = C^2
    assert d.h_dim == 2


@given(seeds)
@settings(max_examples=10, deadline=None)
def test_stinespring_factorization_exact(seed):
    rng = np.random.default_rng(seed)
    cp = random_cp(rng, 2, 2, rank=int(rng.integers(1, 3)))
    phi = gen.random_positive_state(rng, cp.cod)
    d = stinespring(cp, phi)
    assert d.form_psd and d.residual == 0 and d.rep_residual == 0


@given(seeds)
@settings(max_examples=10, deadline=None)
def test_stinespring_factorization_float(seed):
    rng = np.random.default_rng(seed)
    cp = random_cp(rng, 3, 2, rank=2, backend=nm.FLOAT)
    phi = vectorial_state(cp.cod, gen.rand_float_vector(rng, 2))
    d = stinespring(cp, phi)
    assert d.ok and d.residual <= 1e-9


# -- conditioning


def test_conditioning_by_unit_is_identity():
    m2 = make_matrix_algebra(2)
    phi = vectorial_state(m2, [1, 2])
    m, rep = conditioning(m2.one(), phi)
    assert rep.ok and m.cod_state.same_as(phi)


def test_conditioning_unnormalized_qubit():
    m2 = make_matrix_algebra(2)
    phi = vectorial_state(m2, [1, 1])
    assert phi.normalization == 2
    m, rep = conditioning(m2.element([1, 0, 0, 0]), phi)
    assert rep.ok
    assert m.cod_state.normalization == 1 and rep.phi_of_p == 1
    # P v = (1, 0): the normalized collapsed state is the vectorial state there
    assert m.cod_state.same_as(vectorial_state(m2, [1, 0]))


def test_conditioning_by_zero():
    m2 = make_matrix_algebra(2)
    m, rep = conditioning(m2.element([0, 0, 0, 0]), vectorial_state(m2, [1, 1]))
    assert nm.is_zero(m.cod_state.functional)
    assert gns_m(m).shape[1] == 0 and rep.ok


def test_conditioning_requires_projection():
    m2 = make_matrix_algebra(2)
    with pytest.raises(NotProjection):
        conditioning(m2.element([1, 1, 0, 0]), vectorial_state(m2, [1, 0]))


@given(seeds)
@settings(max_examples=12, deadline=None)
def test_conditioning_laws(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    alg = make_matrix_algebra(n)
    p = gen.exact_projection(rng, n, int(rng.integers(0, n + 1)))
    pe = alg.element(nm.exact_array([p[i, j] for i in range(n) for j in range(n)]))
    phi = gen.random_positive_state(rng, alg)
    m, rep = conditioning(pe, phi)
    assert rep.ok and m.cod_state.normalization == phi(pe.coords)
    twice = conditioning_map(pe).compose(conditioning_map(pe))
    assert nm.equal(twice.matrix, conditioning_map(pe).matrix)
    again, _ = conditioning(pe, m.cod_state)
    assert again.cod_state.same_as(m.cod_state)


# -- evolution


def test_empty_chain_is_identity():
    phi = vectorial_state(make_matrix_algebra(2), [1, 0])
    m = evolve([], phi)
    assert nm.equal(gns_m(m), nm.eye(2, nm.EXACT))


def test_commuting_conditionings_compose():
    m3 = make_matrix_algebra(3)
    p = m3.element([1, 0, 0, 0, 1, 0, 0, 0, 0])
    q = m3.element([0, 0, 0, 0, 1, 0, 0, 0, 1])
    phi = vectorial_state(m3, [1, 1, 1])
    m1, _ = conditioning(p, phi)
    m2, _ = conditioning(q, m1.cod_state)
    total = evolve([m1, m2])
    qp = m3.element(m3.multiply(q.coords, p.coords))
    assert nm.equal(total.map.matrix, conditioning_map(qp).matrix)
    assert nm.equal(gns_m(total), gns_m(m1) @ gns_m(m2))


def test_chain_of_unitary_conjugations():
    rng = np.random.default_rng(6)
    m2 = make_matrix_algebra(2)
    u1, u2 = gen.cayley_unitary(rng, 2), gen.cayley_unitary(rng, 2)
    phi = vectorial_state(m2, [1, nm.gauss(0, 1)])
    m1 = markov_morphism(conjugation_hom(m2, u1), phi)
    m2_ = markov_morphism(conjugation_hom(m2, u2), m1.cod_state)
    total = evolve([m1, m2_])
    assert nm.equal(total.map.matrix, conjugation_hom(m2, u1 @ u2).matrix)


@given(seeds)
@settings(max_examples=10, deadline=None)
def test_gns_m_functoriality_and_monoidality(seed):
    rng = np.random.default_rng(seed)
    f = random_cp(rng, 2, 2, rank=1)
    g = random_cp(rng, 2, 2, rank=2)
    phi = gen.random_positive_state(rng, f.cod)
    m1 = markov_morphism(f, phi)
    m2 = markov_morphism(g, m1.cod_state)
    assert nm.equal(gns_m(evolve([m1, m2])), gns_m(m1) @ gns_m(m2))

    h = random_cp(rng, 2, 2, rank=1)
    other = markov_morphism(h, gen.random_positive_state(rng, h.cod))
    t = tensor_markov(m1, other)
    lhs = gns_m(t) @ monoidal_iso(m1.cod_state, other.cod_state, t.cod_state)
    rhs = monoidal_iso(m1.dom_state, other.dom_state, t.dom_state) @ np.kron(gns_m(m1), gns_m(other))
    assert nm.equal(lhs, rhs)


# -- scattering


def test_scattering_trivial():
    eye = nm.eye(2, nm.EXACT)
    m, rep = scattering(eye, eye, eye, nm.exact_array([1, 2]))
    assert rep.ok and nm.equal(m.map.matrix, nm.eye(4, nm.EXACT))
    assert m.cod_state.same_as(m.dom_state)


def test_scattering_with_zero_amplitude():
    e1 = nm.exact_array([[1], [0]])
    m, rep = scattering(nm.exact_array(PAULI_X), e1, nm.dagger(e1), nm.exact_array([1]))
    assert rep.ok and rep.psi_one == 0


def test_scattering_half_rotation():
    r = np.array([[1, -1], [1, 1]], dtype=complex) / np.sqrt(2)
    e1 = np.array([[1], [0]], dtype=complex)
    m, rep = scattering(r, e1, e1.conj().T, np.array([1], dtype=complex))
    assert rep.ok and abs(rep.psi_one - 0.5) < 1e-12


def test_scattering_input_checks():
    e1 = nm.exact_array([[1], [0]])
    with pytest.raises(NotUnitary):
        scattering(nm.exact_array([[1, 1], [0, 1]]), e1, nm.dagger(e1), nm.exact_array([1]))
    with pytest.raises(NotIsometric):
        scattering(nm.eye(2, nm.EXACT), e1 * 2, nm.dagger(e1), nm.exact_array([1]))


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_scattering_probability_is_bounded(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    s = gen.cayley_unitary(rng, n)
    w = gen.cayley_unitary(rng, n)
    k = int(rng.integers(1, n + 1))
    i_alpha = w[:, :k]
    p_beta = nm.dagger(w[:, n - k:])
    m, rep = scattering(s, i_alpha, p_beta, gen.rand_exact_vector(rng, k))
    assert rep.ok and 0 <= rep.psi_one <= rep.phi_one
