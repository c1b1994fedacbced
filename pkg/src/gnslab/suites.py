"""Seeded randomized property suites, one per acceptance criterion.

Each suite draws its own generator from ``(seed, suite index)`` so that
running a single suite reproduces the instances of a full run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import generators as gen
from . import numeric as nm
from .algebra import Element, tensor_maps, unit_inclusion
from .errors import NormalizationMismatch
from .gns import (
    State,
    dinaturality_square,
    gns_map,
    make_I,
    make_morphism,
    monoidal_iso,
    phys_morphism,
    tensor_phys,
    tensor_state,
    vectorial_state,
)
from .markov import (
    coisometry_pair,
    conditioning,
    gns_m,
    kraus_map,
    markov_morphism,
    scattering,
    stinespring,
)
from .numeric import EXACT, FLOAT
from .probability import (
    born_distribution,
    c_of,
    cp_to_kernel,
    ee_link_check,
    kernel_tensor,
    kernel_to_cp,
    kleisli_compose,
    l2_compare,
    pushforward,
    row_averaging_l2,
)
from .symmetry import equivariant_gns, permutation_action


@dataclass
class SuiteResult:
    name: str
    counts: dict = field(default_factory=dict)  # invariant -> [passed, total]
    metrics: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    elapsed: float = 0.0

    def check(self, invariant: str, ok: bool, detail=None) -> bool:
        c = self.counts.setdefault(invariant, [0, 0])
        c[1] += 1
        if ok:
            c[0] += 1
        elif len(self.failures) < 20:
            self.failures.append(f"{invariant}: {detail}")
        return ok

    def record_max(self, metric: str, value: float):
        self.metrics[metric] = max(self.metrics.get(metric, 0.0), float(value))

    @property
    def passed(self) -> bool:
        return bool(self.counts) and all(p == t for p, t in self.counts.values())

    def payload(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "counts": {k: {"passed": p, "total": t} for k, (p, t) in self.counts.items()},
            "metrics": self.metrics,
            "failures": self.failures,
        }


def _exact_equal(a, b) -> bool:
    return nm.equal(a, b, 0.0)


# ---------------------------------------------------------------- 1 functoriality


def suite_functoriality(rng, result: SuiteResult, pairs: int = 108):
    kinds = sorted(gen.CHAIN_KINDS)
    for k in range(pairs):
        chain = gen.random_chain(rng, kinds[k % len(kinds)])
        m1 = phys_morphism(chain.outer, chain.state)
        m2 = phys_morphism(chain.inner, m1.cod_state)
        comp = m1.compose(m2)
        result.check("admissible", bool(m1.admissible and m2.admissible and comp.admissible), chain.kind)
        result.check("composition", _exact_equal(gns_map(comp), gns_map(m1) @ gns_map(m2)), chain.kind)
        iso = all(nm.is_gram_isometry(gns_map(m), m.cod_state.gns_space.gram, m.dom_state.gns_space.gram)
                  for m in (m1, m2, comp))
        result.check("gram isometry", iso, chain.kind)
    result.metrics["pairs"] = pairs


# ---------------------------------------------------------------- 2 monoidality


def suite_monoidality(rng, result: SuiteResult, pairs: int = 50):
    for _ in range(pairs):
        f1, f2 = gen.random_small_hom(rng), gen.random_small_hom(rng)
        m1 = phys_morphism(f1, gen.random_positive_state(rng, f1.cod))
        m2 = phys_morphism(f2, gen.random_positive_state(rng, f2.cod))
        mt = tensor_phys(m1, m2)
        iso_dom = monoidal_iso(m1.dom_state, m2.dom_state, mt.dom_state)
        iso_cod = monoidal_iso(m1.cod_state, m2.cod_state, mt.cod_state)
        g1, g2 = m1.dom_state.gns_space, m2.dom_state.gns_space
        unitary = nm.is_gram_isometry(iso_dom, np.kron(g1.gram, g2.gram), mt.dom_state.gns_space.gram) and \
            iso_dom.shape[0] == iso_dom.shape[1] and nm.rank(iso_dom) == iso_dom.shape[0]
        result.check("unitary", unitary)
        lhs = iso_dom @ np.kron(gns_map(m1), gns_map(m2))
        rhs = gns_map(mt) @ iso_cod
        result.check("natural", _exact_equal(lhs, rhs))
        # the joint state really is the product state
        joint = tensor_state(m1.dom_state, m2.dom_state)
        result.check("product state", _exact_equal(joint.functional, mt.dom_state.functional))
    result.metrics["pairs"] = pairs


# ---------------------------------------------------------------- 3 Stinespring


def suite_stinespring(rng, result: SuiteResult, float_maps: int = 40, exact_maps: int = 12):
    plan = [(FLOAT, k) for k in range(float_maps)] + [(EXACT, k) for k in range(exact_maps)]
    for backend, k in plan:
        if backend == EXACT:
            dom_n, cod_n = 2, int(rng.integers(2, 4)) if k % 3 == 0 else 2
        else:
            dom_n, cod_n = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        rank = 1 + k % 3
        a, b = gen.matrix_algebra(dom_n, backend), gen.matrix_algebra(cod_n, backend)
        kraus = gen.random_kraus(rng, dom_n, cod_n, rank, backend)
        phi_map = kraus_map(a, b, kraus)
        v = gen.backend_vector(rng, cod_n, backend, zero_prob=0.3)
        phi = vectorial_state(b, v)
        dil = stinespring(phi_map, phi)
        if backend == EXACT:
            result.check("exact factorization", dil.residual == 0.0, (dom_n, cod_n, rank))
            result.record_max("exact residual", dil.residual)
        else:
            result.check("float factorization", dil.residual <= 1e-9, (dom_n, cod_n, rank, dil.residual))
            result.record_max("float residual", dil.residual)
        result.check("dilation form positive", bool(dil.form_psd))
        result.check("representation", dil.rep_residual <= (0.0 if backend == EXACT else 1e-9))
    result.metrics["maps"] = len(plan)


# ---------------------------------------------------------------- 4 Born rule


def suite_born(rng, result: SuiteResult, observables: int = 100):
    m2 = gen.matrix_algebra(2, EXACT)
    a = Element(m2, nm.exact_array([1, 0, 0, -1]))
    dist = born_distribution(a, vectorial_state(m2, [1, 1]), normalize=True)
    err = max(abs(dist.weight_at(1) - 0.5), abs(dist.weight_at(-1) - 0.5))
    result.check("qubit distribution", err <= 1e-12 and len(dist.entries) == 2, err)
    result.record_max("qubit error", err)
    m3 = gen.matrix_algebra(3, FLOAT)
    for k in range(observables):
        mat, _, _ = gen.random_normal_matrix(rng, 3, degenerate=k % 4 == 0)
        obs = Element(m3, mat.ravel())
        vecs = [gen.rand_float_vector(rng, 3, 0.2) for _ in range(int(rng.integers(1, 3)))]
        phi = State(m3, sum(vectorial_state(m3, v).functional for v in vecs))
        d = born_distribution(obs, phi)
        gap = abs(d.total - phi.normalization.real)
        result.check("weights sum to phi(1)", gap <= 1e-9, gap)
        result.check("weights nonnegative", all(w >= 0 for _, w in d.entries))
        result.record_max("sum error", gap)


# ---------------------------------------------------------------- 5 eigenvalue-eigenvector link


def suite_ee_link(rng, result: SuiteResult, probes: int = 100, forced: int = 20):
    for k in range(probes):
        if k < forced:
            n = int(rng.integers(2, 4))
            alg = gen.matrix_algebra(n, FLOAT)
            mat, d, u = gen.random_normal_matrix(rng, n, degenerate=k % 2 == 0)
            lam = d[int(rng.integers(0, n))]
            eigvecs = u[:, np.abs(d - lam) < 1e-12]
            coeffs = [gen.rand_float_vector(rng, eigvecs.shape[1]) for _ in range(int(rng.integers(1, 3)))]
            phi = State(alg, sum(vectorial_state(alg, eigvecs @ c).functional for c in coeffs))
            res = ee_link_check(Element(alg, mat.ravel()), phi, lam)
            result.check("forced eigenvector all true", res.as_tuple() == (True, True, True), res.as_tuple())
        elif k % 2 == 0:
            n = int(rng.integers(2, 4))
            alg = gen.matrix_algebra(n, FLOAT)
            mat, d, _ = gen.random_normal_matrix(rng, n, degenerate=k % 3 == 0)
            lam = d[int(rng.integers(0, n))] if rng.random() < 0.7 else complex(rng.normal())
            phi = State(alg, vectorial_state(alg, gen.rand_float_vector(rng, n, 0.3)).functional)
            res = ee_link_check(Element(alg, mat.ravel()), phi, lam)
        else:
            n = int(rng.integers(1, 6))
            space = gen.random_prob_space(rng, n, 0.4)
            values = [Fraction(int(rng.integers(-2, 3))) for _ in range(n)]
            if rng.random() < 0.4:
                c = Fraction(int(rng.integers(-2, 3)))
                values = [c if w != 0 else v for v, w in zip(values, space.weights)]
            phi = c_of(space)
            lam = values[int(rng.choice(space.support))]
            res = ee_link_check(Element(phi.algebra, nm.exact_array(values)), phi, lam)
        result.check("triple agreement", res.consistent, res.as_tuple())


# ---------------------------------------------------------------- 6 collapse


def suite_collapse(rng, result: SuiteResult, instances: int = 30):
    for k in range(instances):
        n = 2 + k % 2
        rank = int(rng.integers(1, n))
        alg = gen.matrix_algebra(n, EXACT)
        u = gen.cayley_unitary(rng, n)
        p = u[:, :rank] @ nm.dagger(u[:, :rank])
        v = gen.rand_exact_vector(rng, n)
        phi = vectorial_state(alg, v)
        _, rep = conditioning(Element(alg, p.ravel()), phi)
        result.check("psi(1) = phi(P)", rep.psi_one == rep.phi_of_p, (rep.psi_one, rep.phi_of_p))
        result.check("Omega to P Omega", bool(rep.omega_to_p_omega and rep.represented_by_p_omega))
        result.check("conditioning report", rep.ok)
        _, pair = coisometry_pair(nm.to_float(u[:, :rank]), nm.to_float(v))
        result.check("composite equals P", pair.composite_residual <= 1e-9, pair.composite_residual)
        result.check("factorwise composite", pair.factor_residual <= 1e-9, pair.factor_residual)
        result.record_max("composite residual", pair.composite_residual)


# ---------------------------------------------------------------- 7 Gelfand duality


def suite_gelfand(rng, result: SuiteResult, kernels: int = 101, tensors: int = 20):
    prev = None
    for k in range(kernels):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        if prev is not None:
            n = len(prev.cod)
        f = gen.random_kernel(rng, n, m)
        cp = kernel_to_cp(f)
        back = cp_to_kernel(cp)
        result.check("kernel roundtrip", _exact_equal(back.matrix, f.matrix) and back.dom == f.dom and back.cod == f.cod)
        again = kernel_to_cp(back)
        result.check("map roundtrip", _exact_equal(again.underlying.matrix, cp.underlying.matrix))
        if prev is not None:
            comp = kleisli_compose(prev, f)
            lhs = kernel_to_cp(comp).underlying
            rhs = prev_cp.underlying.compose(cp.underlying)
            result.check("contravariant functoriality", _exact_equal(lhs.matrix, rhs.matrix))
        prev, prev_cp = f, cp
    for _ in range(tensors):
        f = gen.random_kernel(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        g = gen.random_kernel(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        lhs = kernel_to_cp(kernel_tensor(f, g)).underlying
        rhs = tensor_maps(kernel_to_cp(f).underlying, kernel_to_cp(g).underlying)
        result.check("tensor duality", _exact_equal(lhs.matrix, rhs.matrix))


# ---------------------------------------------------------------- 8 probabilistic compatibility


def suite_compatibility(rng, result: SuiteResult, kernels: int = 50):
    for _ in range(kernels):
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        space = gen.random_prob_space(rng, n, 0.3)
        f = gen.random_kernel(rng, n, m, 0.5)
        cp = kernel_to_cp(f)
        mm = markov_morphism(cp.underlying, c_of(space))
        target = pushforward(space, f)
        result.check("pushforward state", _exact_equal(mm.cod_state.functional, target.weights))
        lhs = l2_compare(space).iso @ gns_m(mm)
        rhs = row_averaging_l2(space, f) @ l2_compare(target).iso
        result.check("matches row averaging", _exact_equal(lhs, rhs))


# ---------------------------------------------------------------- 9 normalization


def suite_normalization(rng, result: SuiteResult, attempts: int = 100, pairs: int = 20):
    for k in range(attempts):
        f = gen.random_small_hom(rng)
        phi = gen.random_positive_state(rng, f.cod, zero_prob=0.2)
        pulled = f.matrix.T @ phi.functional
        mode = k % 3
        if mode == 0:
            c = gen.rand_frac(rng)
            while c == 1:
                c = gen.rand_frac(rng)
            cod = State(f.dom, pulled * c)
            hom = f
        elif mode == 1:
            lam = phi.normalization + gen.rand_frac(rng) + Fraction(1, 7)
            cod = make_I(lam)
            hom = unit_inclusion(f.cod)
        else:
            # perturb the pullback in one coordinate that the unit sees
            idx = next(i for i, x in enumerate(f.dom.unit) if x != 0)
            bump = nm.zeros(f.dom.dim, EXACT)
            bump[idx] = Fraction(1, 2) + abs(gen.rand_frac(rng))
            cod = State(f.dom, pulled + bump)
            hom = f
        try:
            make_morphism(phi, cod, hom)
            rejected = False
        except NormalizationMismatch:
            rejected = True
        result.check("cross-normalization rejected", rejected, mode)
        # control: the terminal morphism at the right normalization exists
        if k % 10 == 0:
            make_morphism(phi, make_I(phi.normalization), unit_inclusion(f.cod))
            result.check("terminal morphism", True)
    for _ in range(pairs):
        lam, mu = gen.rand_frac(rng, 5, 5), gen.rand_frac(rng, 5, 5)
        joint = tensor_state(make_I(lam), make_I(mu))
        target = make_I(lam * mu)
        ok = joint.algebra.same_structure(target.algebra) and _exact_equal(joint.functional, target.functional)
        result.check("I_lam (x) I_mu = I_(lam mu)", ok, (lam, mu))


# ---------------------------------------------------------------- 10 symmetry


def suite_symmetry(rng, result: SuiteResult):
    table, _ = gen.s3_table()
    space = gen.FiniteProbSpace.of(gen.points(6), [Fraction(1, 6)] * 6)
    action = permutation_action(table, c_of(space), [table[g] for g in range(6)])
    rep = equivariant_gns(action)
    result.check("dimension 6", rep.dim == 6, rep.dim)
    result.check("character at identity", rep.character(action.identity) == 6)
    for g in range(6):
        result.check("unitary", nm.is_gram_isometry(rep.matrices[g], rep.gram, rep.gram))
        for h in range(6):
            result.check("multiplicative", _exact_equal(rep.matrices[g] @ rep.matrices[h], rep.matrices[table[g][h]]))
    result.check("covariance residual zero", rep.covariance_residual == 0.0)
    result.metrics["covariance triples"] = rep.triples_checked


# ---------------------------------------------------------------- 11 dinaturality


def suite_dinaturality(rng, result: SuiteResult, probes: int = 100):
    for _ in range(probes):
        chain = gen.random_chain(rng)
        m = phys_morphism(chain.outer, chain.state)
        dim = m.cod_state.gns_space.dim
        v = gen.rand_exact_vector(rng, dim) if dim else nm.zeros(0, EXACT)
        lhs, rhs = dinaturality_square(m, v)
        result.check("square commutes", _exact_equal(lhs.functional, rhs.functional), chain.kind)


# ---------------------------------------------------------------- 12 scattering


def suite_scattering(rng, result: SuiteResult, instances: int = 20):
    for _ in range(instances):
        n = int(rng.integers(2, 9))
        s = gen.haar_unitary(rng, n)
        ka, kb = int(rng.integers(1, n + 1)), int(rng.integers(1, n + 1))
        i_alpha = gen.haar_unitary(rng, n)[:, :ka]
        p_beta = gen.haar_unitary(rng, n)[:, :kb].conj().T
        v = gen.rand_float_vector(rng, ka)
        _, rep = scattering(s, i_alpha, p_beta, v)
        result.check("gns_mc equals transition", rep.residual <= 1e-9, rep.residual)
        result.check("0 <= psi(1) <= phi(1)", rep.probability_bounded, (rep.psi_one, rep.phi_one))
        result.record_max("residual", rep.residual)


SUITES: dict[str, Callable] = {
    "functoriality": suite_functoriality,
    "monoidality": suite_monoidality,
    "stinespring": suite_stinespring,
    "born": suite_born,
    "ee_link": suite_ee_link,
    "collapse": suite_collapse,
    "gelfand": suite_gelfand,
    "compatibility": suite_compatibility,
    "normalization": suite_normalization,
    "symmetry": suite_symmetry,
    "dinaturality": suite_dinaturality,
    "scattering": suite_scattering,
}

TIME_LIMITS = {
    "functoriality": 10.0,
    "monoidality": 5.0,
    "stinespring": 20.0,
    "born": 5.0,
    "ee_link": 10.0,
    "collapse": 5.0,
    "gelfand": 5.0,
    "compatibility": 5.0,
    "normalization": 2.0,
    "symmetry": 5.0,
    "dinaturality": 5.0,
    "scattering": 5.0,
}

DEFAULT_SEED = 20240611


def run_suite(name: str, seed: int = DEFAULT_SEED) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    index = list(SUITES).index(name)
    rng = np.random.default_rng([seed, index])
    result = SuiteResult(name)
    start = time.perf_counter()
    SUITES[name](rng, result)
    result.elapsed = time.perf_counter() - start
    return result


def run_suites(seed: int = DEFAULT_SEED, only=None) -> list[SuiteResult]:
    names = list(only) if only else list(SUITES)
    return [run_suite(n, seed) for n in names]
