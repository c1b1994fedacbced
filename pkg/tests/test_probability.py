from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnslab import generators as gen
from gnslab import numeric as nm
from gnslab.algebra import StarLinearMap, make_matrix_algebra
from gnslab.errors import NotNormal, NotPositiveMap, NotUnital, ShapeMismatch
from gnslab.gns import State, vectorial_state
from gnslab.markov import gns_m, markov_morphism
from gnslab.probability import (
    FiniteProbSpace,
    MarkovKernel,
    born_distribution,
    c_of,
    cp_to_kernel,
    deterministic_kernel,
    ee_link_check,
    function_algebra,
    has_definite_value,
    kernel_tensor,
    kernel_to_cp,
    kleisli_compose,
    l2_compare,
    l2_product_compare,
    pushforward,
    row_averaging_l2,
)

seeds = st.integers(0, 2**32 - 1)
XY = ["x", "y"]
H = F(1, 2)
SPLIT = [[H, H], [0, 1]]


def qubit(v):
    m2 = make_matrix_algebra(2)
    return m2, vectorial_state(m2, v)


# -- spaces and the L2 comparison


def test_expectation_states():
    one = c_of(FiniteProbSpace.of(["p"], [1]))
    assert one.algebra.dim == 1 and one.functional[0] == 1
    assert list(c_of(FiniteProbSpace.of(XY, [H, H])).functional) == [H, H]
    assert list(c_of(FiniteProbSpace.of(XY, [F(1, 3), F(2, 3)])).functional) == [F(1, 3), F(2, 3)]


def test_prob_space_validation():
    with pytest.raises(ValueError):
        FiniteProbSpace.of(XY, [H, F(2, 3)])
    with pytest.raises(ValueError):
        FiniteProbSpace.of(XY, [F(3, 2), -H])
    with pytest.raises(ShapeMismatch):
        FiniteProbSpace.of(XY, [1])


def test_l2_compare_uniform_and_degenerate():
    third = F(1, 3)
    rep = l2_compare(FiniteProbSpace.of(["a", "b", "c"], [third] * 3))
    assert rep.ok and rep.gns_dim == 3
    assert nm.equal(rep.gram, nm.exact_array(np.diag([third] * 3).tolist()))
    rep = l2_compare(FiniteProbSpace.of(XY, [1, 0]))
    assert rep.ok and rep.gns_dim == 1 and rep.support_size == 1


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_l2_of_products_is_monoidal(seed):
    rng = np.random.default_rng(seed)
    x = gen.random_prob_space(rng, int(rng.integers(1, 4)))
    y = gen.random_prob_space(rng, int(rng.integers(1, 4)))
    assert l2_product_compare(x, y)
    assert l2_compare(x).ok


# -- kernels and their duals


def test_identity_and_deterministic_kernels():
    ident = deterministic_kernel(XY, XY, [0, 1])
    assert nm.equal(kernel_to_cp(ident).underlying.matrix, nm.eye(2, nm.EXACT))
    g = [1, 0, 1]
    det = kernel_to_cp(deterministic_kernel(["a", "b", "c"], XY, g))
    assert det.unital
    # pullback g -> g o fn on indicator coordinates
    for x in range(3):
        for y in range(2):
            assert det.underlying.matrix[x, y] == (1 if g[x] == y else 0)
    assert nm.equal(det.underlying.matrix, gen.pullback_hom(2, 3, g).matrix)


def test_split_kernel_roundtrip():
    k = MarkovKernel.of(XY, XY, SPLIT)
    cp = kernel_to_cp(k)
    # Phi(1_y)(x) = K[x, y], so column y of the map matrix is column y of K
    assert cp.underlying.matrix.tolist() == [[H, H], [0, 1]]
    back = cp_to_kernel(cp)
    assert nm.equal(back.matrix, k.matrix) and back.dom == k.dom and back.cod == k.cod


def test_cp_to_kernel_rejects_bad_maps():
    alg = function_algebra(XY)
    with pytest.raises(NotUnital):
        cp_to_kernel(StarLinearMap(alg, alg, nm.exact_array([[1, 1], [0, 1]])))
    with pytest.raises(NotPositiveMap) as exc:
        cp_to_kernel(StarLinearMap(alg, alg, nm.exact_array([[2, -1], [0, 1]])))
    assert exc.value.witness == (0, 1)


def test_kleisli_examples():
    k = MarkovKernel.of(XY, XY, SPLIT)
    ident = deterministic_kernel(XY, XY, [0, 1])
    assert nm.equal(kleisli_compose(k, ident).matrix, k.matrix)
    assert nm.equal(kleisli_compose(ident, k).matrix, k.matrix)
    assert kleisli_compose(k, k).matrix.tolist() == [[F(1, 4), F(3, 4)], [0, 1]]
    f = deterministic_kernel(["a", "b", "c"], XY, [1, 1, 0])
    g = deterministic_kernel(XY, ["u", "v", "w"], [2, 0])
    assert nm.equal(kleisli_compose(f, g).matrix, deterministic_kernel(["a", "b", "c"], ["u", "v", "w"], [0, 0, 2]).matrix)
    with pytest.raises(ShapeMismatch):
        kleisli_compose(f, f)


def test_kernel_tensor_examples():
    ident = deterministic_kernel(XY, XY, [0, 1])
    assert nm.equal(kernel_tensor(ident, ident).matrix, nm.eye(4, nm.EXACT))
    d = deterministic_kernel(XY, XY, [1, 1])
    dd = kernel_tensor(d, d)
    assert all(sorted(row) == [0, 0, 0, 1] for row in dd.matrix.tolist())
    k = MarkovKernel.of(XY, XY, SPLIT)
    q = MarkovKernel.of(XY, XY, [[F(1, 3), F(2, 3)], [1, 0]])
    t = kernel_tensor(k, q)
    for i in range(4):
        for j in range(4):
            assert t.matrix[i, j] == k.matrix[i // 2, j // 2] * q.matrix[i % 2, j % 2]
    joint = kernel_to_cp(t).underlying
    assert nm.equal(joint.matrix, np.kron(kernel_to_cp(k).underlying.matrix, kernel_to_cp(q).underlying.matrix))


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_gelfand_roundtrip_and_contravariance(seed):
    rng = np.random.default_rng(seed)
    n, m, p = (int(rng.integers(1, 7)) for _ in range(3))
    f = gen.random_kernel(rng, n, m)
    g = MarkovKernel(f.cod, gen.points(p), gen.random_kernel(rng, m, p).matrix)
    back = cp_to_kernel(kernel_to_cp(f))
    assert nm.equal(back.matrix, f.matrix)
    cf, cg = kernel_to_cp(f).underlying, kernel_to_cp(g).underlying
    assert nm.equal(cp_to_kernel(cf).matrix, f.matrix)
    assert nm.equal(kernel_to_cp(kleisli_compose(f, g)).underlying.matrix, cf.compose(cg).matrix)


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_dual_gns_matches_row_averaging(seed):
    rng = np.random.default_rng(seed)
    x = gen.random_prob_space(rng, int(rng.integers(1, 6)))
    k = int(rng.integers(1, 6))
    f = MarkovKernel(x.points, gen.points(k), gen.random_kernel(rng, len(x.points), k).matrix)
    m = markov_morphism(kernel_to_cp(f).underlying, c_of(x))
    assert nm.equal(m.cod_state.functional, pushforward(x, f).weights)
    assert nm.equal(gns_m(m), row_averaging_l2(x, f))


# -- Born rule


def test_born_rule_of_unit():
    m2, phi = qubit([1, 2])
    dist = born_distribution(m2.one(), phi)
    assert len(dist.entries) == 1
    lam, w = dist.entries[0]
    assert abs(lam - 1) < 1e-12 and abs(w - 5) < 1e-12


def test_born_rule_qubit():
    m2, phi = qubit([1, 1])
    a = m2.element([1, 0, 0, -1])
    dist = born_distribution(a, phi)
    # p_plus = (1 + a)/2 and p_minus = (1 - a)/2 each have phi-value 1
    assert abs(dist.weight_at(1) - 1) < 1e-12 and abs(dist.weight_at(-1) - 1) < 1e-12
    assert abs(dist.total - 2) < 1e-12
    norm = born_distribution(a, phi, normalize=True)
    assert abs(norm.weight_at(1) - 0.5) < 1e-12 and abs(norm.weight_at(-1) - 0.5) < 1e-12
    assert dist.weight_at(7) == 0.0


def test_born_rule_indicator():
    x = FiniteProbSpace.of(XY, [F(1, 3), F(2, 3)])
    phi = c_of(x)
    dist = born_distribution(phi.algebra.element([1, 0]), phi)
    assert abs(dist.weight_at(1) - 1 / 3) < 1e-12 and abs(dist.weight_at(0) - 2 / 3) < 1e-12


def test_born_rule_rejects_non_normal():
    m2, phi = qubit([1, 0])
    with pytest.raises(NotNormal):
        born_distribution(m2.element([0, 1, 0, 0]), phi)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_born_weights_sum_to_normalization(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    mat, _, _ = gen.random_normal_matrix(rng, n, degenerate=bool(rng.integers(0, 2)))
    alg = make_matrix_algebra(n, nm.FLOAT)
    a = alg.element(mat.ravel())
    phi = vectorial_state(alg, gen.rand_float_vector(rng, n))
    dist = born_distribution(a, phi)
    assert all(w >= 0 for _, w in dist.entries)
    assert abs(dist.total - phi.normalization.real) <= 1e-9 * max(1, abs(phi.normalization))


# -- eigenvalue-eigenvector link and definite values


def test_ee_link_examples():
    m2, phi = qubit([1, 0])
    assert ee_link_check(m2.one(), phi, 1).as_tuple() == (True, True, True)
    a = m2.element([1, 0, 0, -1])
    assert ee_link_check(a, phi, 1).as_tuple() == (True, True, True)
    _, psi = qubit([1, 1])
    res = ee_link_check(a, psi, 1)
    assert res.as_tuple() == (False, False, False) and res.consistent


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_ee_link_agreement(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    mat, d, u = gen.random_normal_matrix(rng, n, degenerate=True)
    alg = make_matrix_algebra(n, nm.FLOAT)
    a = alg.element(mat.ravel())
    forced = rng.random() < 0.5
    lam = d[int(rng.integers(0, n))]
    if forced:
        cols = [k for k in range(n) if d[k] == lam]
        v = u[:, cols] @ (rng.normal(size=len(cols)) + 1j * rng.normal(size=len(cols)))
    else:
        v = gen.rand_float_vector(rng, n)
    res = ee_link_check(a, vectorial_state(alg, v), lam)
    assert res.consistent
    if forced:
        assert res.as_tuple() == (True, True, True)


def test_definite_values():
    phi = c_of(FiniteProbSpace.of(["x", "y", "z"], [1, 0, 0]))
    f = phi.algebra.element([F(5, 2), -1, 3])
    dv = has_definite_value(f, phi)
    assert dv is not None and dv.value == F(5, 2) and dv.eigenvector_verified
    m2, psi = qubit([1, 1])
    assert has_definite_value(m2.element([1, 0, 0, -1]), psi) is None
    one = has_definite_value(m2.one(), psi)
    assert one is not None and one.value == 1


def test_definite_value_needs_normal_observable():
    m2, psi = qubit([1, 1])
    with pytest.raises(NotNormal):
        has_definite_value(m2.element([0, 1, 0, 0]), psi)


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_point_masses_give_definite_values(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    at = int(rng.integers(0, n))
    weights = [1 if i == at else 0 for i in range(n)]
    phi = State(gen.fn_algebra(n), nm.exact_array(weights))
    f = phi.algebra.element(gen.rand_exact_vector(rng, n))
    dv = has_definite_value(f, phi)
    assert dv is not None and dv.value == f.coords[at]
