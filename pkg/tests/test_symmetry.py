from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnslab import generators as gen
from gnslab import numeric as nm
from gnslab.algebra import conjugate_algebra, conjugation_hom, identity_hom, make_matrix_algebra, StarHomomorphism
from gnslab.errors import MissingArrow, NotAnAction, NotPositive
from gnslab.gns import PhysMorphism, State, conjugate_state, make_morphism, make_state, vectorial_state
from gnslab.markov import conditioning, markov_morphism
from gnslab.symmetry import (
    AntiLinearOp,
    GroupAction,
    check_time_chain,
    equivariant_gns,
    identity_chain,
    permutation_action,
    product_table,
    tensor_action,
    tensor_rep_residual,
    time_reversal,
)

seeds = st.integers(0, 2**32 - 1)


def uniform(n):
    return make_state(gen.fn_algebra(n), [F(1, n)] * n)


def regular_action(table):
    n = len(table)
    return permutation_action(table, uniform(n), [table[g] for g in range(n)])


# -- group actions and their unitary representations


def test_trivial_group():
    phi = uniform(3)
    rep = equivariant_gns(GroupAction([[0]], phi, [identity_hom(phi.algebra)]))
    assert len(rep.matrices) == 1 and nm.equal(rep.matrices[0], nm.eye(3, nm.EXACT))


def test_swap_on_two_points():
    action = permutation_action(gen.cyclic_table(2), uniform(2), [[0, 1], [1, 0]])
    rep = equivariant_gns(action)
    assert rep.dim == 2
    assert rep.matrices[1].tolist() == [[0, 1], [1, 0]]
    assert rep.covariance_residual == 0


def test_regular_representation_of_s3():
    table, _ = gen.s3_table()
    rep = equivariant_gns(regular_action(table))
    assert rep.dim == 6 and rep.character(0) == 6
    # left translation by g != e has no fixed points
    assert all(rep.character(g) == 0 for g in range(1, 6))
    for g in range(6):
        m = rep.matrices[g]
        assert all(sorted(row) == [0, 0, 0, 0, 0, 1] for row in m.tolist())
        for h in range(6):
            assert nm.equal(rep.matrices[g] @ rep.matrices[h], rep.matrices[table[g][h]])
    assert rep.triples_checked == 6 * 6 * 6


def test_action_validation():
    phi = make_state(gen.fn_algebra(2), [F(1, 3), F(2, 3)])
    with pytest.raises(NotAnAction) as exc:
        permutation_action(gen.cyclic_table(2), phi, [[0, 1], [1, 0]])
    assert exc.value.law == "state preservation" and exc.value.witness == 1
    with pytest.raises(NotAnAction):
        permutation_action(gen.cyclic_table(3), uniform(2), [[0, 1], [1, 0], [1, 0]])
    with pytest.raises(NotAnAction):
        permutation_action(gen.cyclic_table(2), uniform(2), [[0, 1]])


def test_equivariant_gns_needs_positive_state():
    phi = make_state(gen.fn_algebra(2), [1, 1])
    neg = State(phi.algebra, nm.exact_array([-1, -1]))
    action = permutation_action(gen.cyclic_table(2), neg, [[0, 1], [1, 0]])
    with pytest.raises(NotPositive):
        equivariant_gns(action)


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_permutation_actions_give_unitary_reps(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    # cyclic shift on n points; invariant states are multiples of the uniform one
    table = gen.cyclic_table(n)
    perms = [[(x + g) % n for x in range(n)] for g in range(n)]
    scale = F(int(rng.integers(1, 5)))
    phi = make_state(gen.fn_algebra(n), [scale] * n)
    rep = equivariant_gns(permutation_action(table, phi, perms))
    for g in range(n):
        assert nm.is_gram_isometry(rep.matrices[g], rep.gram, rep.gram)
        assert nm.equal(rep.matrices[g] @ rep.omega, rep.omega)
        for h in range(n):
            assert nm.equal(rep.matrices[g] @ rep.matrices[h], rep.matrices[table[g][h]])
    assert rep.covariance_residual == 0


@given(seeds)
@settings(max_examples=10, deadline=None)
def test_inner_action_on_group_algebra(seed):
    rng = np.random.default_rng(seed)
    table, _ = gen.s3_table()
    alg = gen.group_algebra(table)
    # conjugation-invariant state: a class function built from the trace of the regular rep
    phi = gen.random_positive_state(rng, alg)
    avg = sum((gen.group_inner_automorphism(table, h).matrix.T @ phi.functional for h in range(6)),
              nm.zeros(6, nm.EXACT))
    inv = make_state(alg, avg)
    action = GroupAction(table, inv, [gen.group_inner_automorphism(table, h) for h in range(6)])
    rep = equivariant_gns(action)
    for g in range(6):
        for h in range(6):
            assert nm.equal(rep.matrices[g] @ rep.matrices[h], rep.matrices[table[g][h]])


def test_tensor_of_actions():
    a1 = permutation_action(gen.cyclic_table(2), uniform(2), [[0, 1], [1, 0]])
    a2 = regular_action(gen.cyclic_table(3))
    joint = tensor_action(a1, a2)
    assert joint.order == 6
    assert joint.table == product_table(gen.cyclic_table(2), gen.cyclic_table(3))
    assert tensor_rep_residual(a1, a2) == 0


# -- time reversal


def test_time_reversal_on_real_function_algebra():
    phi = make_state(gen.fn_algebra(3), [F(1, 2), F(1, 4), F(1, 4)])
    bar = conjugate_state(phi)
    iso = make_morphism(bar, phi, StarHomomorphism(phi.algebra, bar.algebra, nm.eye(3, nm.EXACT)))
    tr = time_reversal(iso)
    assert nm.equal(tr.operator.matrix, nm.eye(3, nm.EXACT)) and tr.operator.conjugate
    assert tr.preserves_form and tr.square_sign == 1
    v = nm.exact_array([nm.gauss(1, 2), 0, nm.gauss(0, -1)])
    assert nm.equal(tr.operator(v), np.conjugate(v))


def test_time_reversal_on_qubit():
    m2 = make_matrix_algebra(2)
    phi = vectorial_state(m2, [1, 3])
    bar = conjugate_state(phi)
    iso = make_morphism(bar, phi, StarHomomorphism(m2, conjugate_algebra(m2), nm.eye(4, nm.EXACT)))
    tr = time_reversal(iso)
    assert tr.preserves_form and tr.square_sign == 1


def test_time_reversal_with_complex_vector():
    m2 = make_matrix_algebra(2)
    i = nm.gauss(0, 1)
    phi = vectorial_state(m2, [1, i])
    bar = conjugate_state(phi)
    # sigma_z maps conj(v) = (1, -i) back to v, so a -> sigma_z a sigma_z intertwines
    flip = conjugation_hom(m2, nm.exact_array([[1, 0], [0, -1]]))
    hom = StarHomomorphism(m2, bar.algebra, flip.matrix)
    tr = time_reversal(make_morphism(bar, phi, hom))
    assert tr.preserves_form and tr.square_sign == 1
    g = phi.gns_space
    v, w = nm.exact_array([1, i]), nm.exact_array([2, 1])
    assert g.inner(tr.operator(v), tr.operator(w)) == g.inner(w, v)


def test_antilinear_parity():
    t = AntiLinearOp(nm.eye(2, nm.EXACT), True)
    u = AntiLinearOp.linear(nm.exact_array([[0, 1], [1, 0]]))
    assert t.compose(u).conjugate and u.compose(t).conjugate
    assert not t.compose(t).conjugate
    v = nm.exact_array([nm.gauss(0, 1), 2])
    assert nm.equal(t.compose(u)(v), t(u(v)))
    assert nm.equal(u.compose(t)(v), u(t(v)))


# -- time chains


def test_constant_chain_passes_everything():
    phi = vectorial_state(make_matrix_algebra(2), [1, 1])
    rep = check_time_chain([0, 1, 2], identity_chain([0, 1, 2], phi))
    assert rep.variants == ["Time", "Time_th", "Time_th^t0"]


def unitary_chain(rng):
    m2 = make_matrix_algebra(2)
    w01, w12 = gen.cayley_unitary(rng, 2), gen.cayley_unitary(rng, 2)
    v0 = nm.exact_array([1, 2])
    vs = [v0, w01 @ v0, w12 @ w01 @ v0]
    states = [vectorial_state(m2, v) for v in vs]
    # the arrow t -> t2 sits over a -> W a W*, pulling the later state back to the earlier one
    arrow = lambda a, b, w: make_morphism(states[b], states[a], conjugation_hom(m2, w))  # noqa: E731
    return {(0, 1): arrow(0, 1, w01), (1, 2): arrow(1, 2, w12), (0, 2): arrow(0, 2, w12 @ w01)}, states, (w01, w12)


def test_unitary_chain_is_a_groupoid():
    maps, _, _ = unitary_chain(np.random.default_rng(3))
    rep = check_time_chain([0, 1, 2], maps)
    assert rep.time and rep.time_th and rep.time_th_from_start and rep.failures == []


def test_broken_cocycle_is_reported():
    rng = np.random.default_rng(4)
    maps, states, (w01, w12) = unitary_chain(rng)
    maps[(0, 2)] = make_morphism(states[2], states[0], conjugation_hom(make_matrix_algebra(2), w12 @ w01 * nm.gauss(0, 1)))
    assert check_time_chain([0, 1, 2], maps).time_th  # a phase does not change the conjugation
    bad = dict(maps)
    bad[(0, 2)] = 2 * nm.eye(2, nm.EXACT)
    rep = check_time_chain([0, 1, 2], bad)
    assert not rep.time_th and not rep.time_th_from_start
    assert ("Time_th", (0, 1, 2)) in rep.failures


def test_conditioning_chain_is_thermodynamical_only():
    m2 = make_matrix_algebra(2)
    p = m2.element([1, 0, 0, 0])
    later = vectorial_state(m2, [1, 1])
    step12, _ = conditioning(p, later)
    step01, _ = conditioning(p, step12.cod_state)
    step02 = markov_morphism(step12.map.compose(step01.map), later)
    rep = check_time_chain([0, 1, 2], {(0, 1): step01, (1, 2): step12, (0, 2): step02})
    assert not rep.time and rep.time_th and rep.time_th_from_start


def test_missing_forward_arrow():
    phi = vectorial_state(make_matrix_algebra(2), [1, 0])
    maps = identity_chain([0, 1, 2], phi)
    del maps[(0, 2)]
    with pytest.raises(MissingArrow):
        check_time_chain([0, 1, 2], maps)


def test_chain_from_first_time_only():
    e = nm.eye(1, nm.EXACT)
    zero = 0 * e
    maps = {("a", "b"): zero, ("a", "c"): zero, ("a", "d"): zero, ("b", "c"): e, ("c", "d"): e, ("b", "d"): 2 * e}
    rep = check_time_chain(["a", "b", "c", "d"], maps)
    # everything leaving a is zero, so triples from a hold; b -> c -> d gives 1 but b -> d is 2
    assert rep.time_th_from_start and not rep.time_th and not rep.time
    assert ("Time_th", ("b", "c", "d")) in rep.failures
