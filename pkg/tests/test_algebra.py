from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnslab import generators as gen
from gnslab import numeric as nm
from gnslab.algebra import (
    StarAlgebra,
    check_homomorphism,
    complex_unit_algebra,
    conjugate_algebra,
    conjugation_hom,
    generated_subalgebra,
    identity_hom,
    is_normal,
    is_projection,
    make_function_algebra,
    make_group_algebra,
    make_matrix_algebra,
    mul,
    star,
    tensor_algebra,
    tensor_maps,
    unit_inclusion,
)
from gnslab.errors import AlgebraMismatch, BackendMismatch, DuplicateLabel, NotAGroup, NotMultiplicative, NotUnital

seeds = st.integers(0, 2**32 - 1)


def m2_unit(alg, p, q):
    return alg.basis_element(p * 2 + q)


def test_matrix_algebra_basics():
    assert make_matrix_algebra(1).dim == 1
    m2 = make_matrix_algebra(2)
    assert m2.dim == 4 and m2.check_laws() == []
    e12, e21, e11 = m2_unit(m2, 0, 1), m2_unit(m2, 1, 0), m2_unit(m2, 0, 0)
    assert mul(e12, e21) == e11
    assert star(e12) == e21
    assert np.array_equal(e12.matrix(), nm.exact_array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        make_matrix_algebra(0)


def test_function_algebra_basics():
    assert make_function_algebra(["x"]).dim == 1
    c2 = make_function_algebra(["x", "y"])
    assert mul(c2.basis_element(0), c2.basis_element(1)) == c2.element([0, 0])
    c3 = make_function_algebra(["x", "y", "z"])
    assert list(c3.unit) == [1, 1, 1]
    assert c3.check_laws() == []
    with pytest.raises(DuplicateLabel):
        make_function_algebra(["x", "x"])


def test_group_algebras():
    z2 = make_group_algebra(gen.cyclic_table(2))
    assert z2.dim == 2
    a, b = z2.basis_element(0), z2.basis_element(1)
    assert mul(a, b) == mul(b, a)
    assert make_group_algebra([[0]]).dim == 1

    table, perms = gen.s3_table()
    s3 = make_group_algebra(table)
    assert s3.dim == 6 and s3.check_laws() == []
    # the transpositions swapping 1,2 and 0,1; composing by hand gives the two 3-cycles
    assert perms[1] == (0, 2, 1) and perms[2] == (1, 0, 2)
    g, h = s3.basis_element(1), s3.basis_element(2)
    assert mul(g, h) == s3.basis_element(4) and mul(h, g) == s3.basis_element(3)


def test_not_a_group_reports_axiom():
    with pytest.raises(NotAGroup) as exc:
        make_group_algebra([[0, 1], [1, 1]])
    assert exc.value.axiom in {"identity", "inverses", "associativity"}
    with pytest.raises(NotAGroup):
        make_group_algebra([[0, 2], [1, 0]])


def test_tensor_products():
    m2 = make_matrix_algebra(2)
    assert tensor_algebra(m2, m2).dim == 16
    c2 = make_function_algebra(["x", "y"])
    c2b = make_function_algebra(["u", "v"])
    prod = tensor_algebra(c2, c2b)
    # products of the four indicators are pointwise
    for i in range(4):
        for j in range(4):
            expected = prod.basis_vector(i) if i == j else prod.zero_vector()
            assert nm.equal(prod.multiply(prod.basis_vector(i), prod.basis_vector(j)), expected)
    assert prod.same_structure(make_function_algebra(["a", "b", "c", "d"]))
    assert tensor_algebra(m2, complex_unit_algebra()).same_structure(m2)
    with pytest.raises(BackendMismatch):
        tensor_algebra(m2, make_matrix_algebra(2, nm.FLOAT))


def test_conjugate_algebra():
    c2 = make_function_algebra(["x", "y"])
    assert conjugate_algebra(c2).same_structure(c2)
    m2 = make_matrix_algebra(2)
    assert conjugate_algebra(conjugate_algebra(m2)) is m2
    i = nm.gauss(0, 1)
    c = nm.zeros((1, 1, 1), nm.EXACT)
    c[0, 0, 0] = i
    odd = StarAlgebra.from_struct_consts(["e"], c, nm.exact_array([1]), nm.exact_array([[1]]))
    assert conjugate_algebra(odd).struct_consts[0, 0, 0] == nm.gauss(0, -1)


def test_homomorphism_checks():
    rng = np.random.default_rng(5)
    m2 = make_matrix_algebra(2)
    u = gen.cayley_unitary(rng, 2)
    hom = conjugation_hom(m2, u)
    x = gen.rand_exact_vector(rng, 4)
    assert nm.equal(m2.represent(hom(x)), u @ m2.represent(x) @ nm.dagger(u))

    transpose = nm.zeros((4, 4), nm.EXACT)
    for p in range(2):
        for q in range(2):
            transpose[q * 2 + p, p * 2 + q] = nm.ONE
    with pytest.raises(NotMultiplicative) as exc:
        check_homomorphism(m2, m2, transpose)
    i, j = exc.value.i, exc.value.j
    lhs = transpose @ m2.multiply(m2.basis_vector(i), m2.basis_vector(j))
    rhs = m2.multiply(transpose[:, i], transpose[:, j])
    assert not nm.equal(lhs, rhs)

    inc = unit_inclusion(m2)
    assert nm.equal(inc.matrix[:, 0], m2.unit)
    check_homomorphism(inc.dom, m2, inc.matrix)
    with pytest.raises(NotUnital):
        check_homomorphism(m2, m2, nm.zeros((4, 4), nm.EXACT))


def test_generated_subalgebra_examples():
    m2 = make_matrix_algebra(2)
    sub, inc = generated_subalgebra([m2.one()])
    assert sub.dim == 1 and nm.equal(inc.matrix @ sub.unit, m2.unit)
    diag = m2.element([1, 0, 0, -1])
    sub, _ = generated_subalgebra([diag])
    assert sub.dim == 2
    assert all(nm.is_zero(sub.multiply(sub.basis_vector(i), sub.basis_vector(j))
                          - sub.multiply(sub.basis_vector(j), sub.basis_vector(i)))
               for i in range(2) for j in range(2))
    sub, _ = generated_subalgebra([m2_unit(m2, 0, 1)])
    assert sub.dim == 4


def test_element_predicates():
    m2 = make_matrix_algebra(2)
    assert is_projection(m2_unit(m2, 0, 0))
    assert not is_normal(m2_unit(m2, 0, 1))
    assert not is_projection(m2.element([1, 1, 0, 0]))
    with pytest.raises(AlgebraMismatch):
        mul(m2.one(), make_matrix_algebra(3).one())


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_star_is_involutive_and_antimultiplicative(seed):
    rng = np.random.default_rng(seed)
    alg = [make_matrix_algebra(2), gen.group_algebra(gen.s3_table()[0]), gen.fn_algebra(3)][seed % 3]
    a = alg.element(gen.rand_exact_vector(rng, alg.dim))
    b = alg.element(gen.rand_exact_vector(rng, alg.dim))
    assert star(star(a)) == a
    assert star(mul(a, b)) == mul(star(b), star(a))
    assert nm.equal(alg.represent(star(a).coords), nm.dagger(alg.represent(a.coords)))


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_constructed_algebras_satisfy_laws(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    tables = [gen.cyclic_table(n + 1), gen.klein_table(), gen.s3_table()[0]]
    algs = [make_matrix_algebra(n), make_function_algebra(gen.points(n + 1)),
            make_group_algebra(tables[seed % 3])]
    for alg in algs:
        assert alg.check_laws() == []


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_tensor_of_homomorphisms_is_homomorphism(seed):
    rng = np.random.default_rng(seed)
    f = gen.random_small_hom(rng)
    g = gen.random_small_hom(rng)
    fg = tensor_maps(f, g)
    check_homomorphism(fg.dom, fg.cod, fg.matrix)
    assert tensor_maps(identity_hom(f.dom), identity_hom(g.dom)).matrix.shape == (f.dom.dim * g.dom.dim,) * 2


@pytest.mark.parametrize("table", [gen.cyclic_table(4), gen.klein_table(), gen.s3_table()[0]])
def test_regular_representation_is_by_permutations(table):
    alg = make_group_algebra(table)
    for r in alg.rep:
        assert all(x in (0, 1) for x in r.ravel())
        assert all(sum(r[i, :]) == 1 and sum(r[:, i]) == 1 for i in range(len(table)))
    for g in range(len(table)):
        for h in range(len(table)):
            assert nm.equal(alg.rep[g] @ alg.rep[h], alg.rep[table[g][h]])


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_generated_subalgebra_is_idempotent(seed):
    rng = np.random.default_rng(seed)
    m3 = make_matrix_algebra(3)
    gens = [m3.element(gen.rand_exact_vector(rng, 9, zero_prob=0.7)) for _ in range(int(rng.integers(1, 3)))]
    sub, inc = generated_subalgebra(gens)
    assert sub.check_laws() == []
    again, _ = generated_subalgebra([m3.element(inc.matrix[:, k]) for k in range(sub.dim)])
    assert again.dim == sub.dim
    for g in gens:
        assert nm.SpanBasis([inc.matrix[:, k] for k in range(sub.dim)], 9, nm.EXACT).contains(g.coords)


def test_float_backend_mirrors_exact():
    m2 = make_matrix_algebra(2)
    fl = m2.to_float()
    assert fl.backend == nm.FLOAT and fl.check_laws() == []
    x = nm.exact_array([F(1, 3), nm.gauss(0, 1), 2, -1])
    assert np.allclose(fl.multiply(nm.to_float(x), nm.to_float(x)), nm.to_float(m2.multiply(x, x)))
