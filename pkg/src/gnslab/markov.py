"""*-linear processes: admissibility, GNS_M, complete positivity, Stinespring, collapse, scattering.

A :class:`MarkovMorphism` ``(B, phi) -> (A, psi)`` sits over a *-linear map
``Phi: A -> B`` with ``psi = phi o Phi``; ``gns_m`` goes ``GNS(psi) -> GNS(phi)``
and ``gns_mc`` is its adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import numeric as nm
from .algebra import (
    Element,
    StarAlgebra,
    StarLinearMap,
    identity_hom,
    is_projection,
    make_matrix_algebra,
    tensor_maps,
)
from .errors import (
    AlgebraMismatch,
    NoFaithfulRep,
    NotAdmissible,
    NotComposable,
    NotCP,
    NotIsometric,
    NotPositive,
    NotProjection,
    NotUnitary,
)
from .gns import (
    AdmissibilityCertificate,
    FormQuotient,
    PhysMorphism,
    State,
    _require_positive,
    _transport,
    admissibility,
    same_algebra,
    tensor_state,
    vector_state,
    vectorial_state,
)
from .numeric import EXACT


@dataclass
class MarkovMorphism:
    """``(B, phi) -> (A, psi)`` over ``Phi: A -> B`` with ``psi = phi o Phi``."""

    dom_state: State
    cod_state: State
    map: StarLinearMap
    admissible: AdmissibilityCertificate = field(default=None)

    def __post_init__(self):
        if self.admissible is None:
            self.admissible = admissibility(self.map.matrix, self.cod_state, self.dom_state)

    @classmethod
    def from_phys(cls, m: PhysMorphism) -> "MarkovMorphism":
        return cls(m.dom_state, m.cod_state, m.hom, m.admissible)


def is_admissible_linear(phi_map: StarLinearMap, phi: State) -> AdmissibilityCertificate:
    """Radical of the pulled-back form must map into the radical of ``phi``'s form."""
    psi = State(phi_map.dom, phi_map.matrix.T @ phi.functional)
    return admissibility(phi_map.matrix, psi, phi)


def markov_morphism(phi_map: StarLinearMap, phi: State) -> MarkovMorphism:
    if not same_algebra(phi_map.cod, phi.algebra):
        raise AlgebraMismatch("state does not live on the codomain of the map")
    psi = State(phi_map.dom, phi_map.matrix.T @ phi.functional)
    return MarkovMorphism(phi, psi, phi_map)


def gns_m(m: MarkovMorphism) -> np.ndarray:
    """``[x] -> [Phi(x)]`` from ``GNS(psi)`` to ``GNS(phi)``."""
    if not m.admissible:
        raise NotAdmissible("process is not admissible", m.admissible.witness)
    return _transport(m.map.matrix, m.cod_state, m.dom_state)


def omega_transport_residual(m: MarkovMorphism) -> float:
    """Max residual of ``gns_m(a Omega_psi) = Phi(a) Omega_phi`` over basis ``a``."""
    g_psi, g_phi = m.cod_state.gns_space, m.dom_state.gns_space
    t = gns_m(m)
    worst = 0.0
    for a in range(m.map.dom.dim):
        lhs = t @ (g_psi.actions[a] @ g_psi.omega) if g_psi.dim else nm.zeros(g_phi.dim, g_phi.backend)
        rhs = g_phi.coords(m.map.matrix[:, a])
        worst = max(worst, nm.residual(lhs, rhs))
    return worst


def gns_mc(m: MarkovMorphism) -> np.ndarray:
    """Adjoint of :func:`gns_m`, ``GNS(phi) -> GNS(psi)``; positive states only."""
    _require_positive(m.dom_state, m.cod_state)
    fwd = gns_m(m)
    return nm.adjoint_wrt_forms(fwd, m.cod_state.gns_space.gram, m.dom_state.gns_space.gram, m.dom_state.tol)


def evolve(chain: Sequence[MarkovMorphism], state: State | None = None) -> MarkovMorphism:
    """Compose ``chain[0]`` then ``chain[1]`` ...; the map is ``Phi_0 o Phi_1 o ...``."""
    chain = list(chain)
    if not chain:
        if state is None:
            raise NotComposable(0, "empty chain needs a state")
        ident = identity_hom(state.algebra)
        return MarkovMorphism(state, state, ident)
    for k in range(len(chain) - 1):
        if not chain[k].cod_state.same_as(chain[k + 1].dom_state):
            raise NotComposable(k)
    total = chain[0].map
    for m in chain[1:]:
        total = total.compose(m.map)
    return MarkovMorphism(chain[0].dom_state, chain[-1].cod_state, total)


def tensor_markov(m1: MarkovMorphism, m2: MarkovMorphism) -> MarkovMorphism:
    return MarkovMorphism(
        tensor_state(m1.dom_state, m2.dom_state),
        tensor_state(m1.cod_state, m2.cod_state),
        tensor_maps(m1.map, m2.map),
    )


# ---------------------------------------------------------------- complete positivity


@dataclass
class CpMap:
    underlying: StarLinearMap
    choi: np.ndarray
    unital: bool
    kraus_rank: int


@dataclass
class CpCheck:
    """Outcome of the Choi test; ``cp_map`` is set exactly when the map is CP."""

    completely_positive: bool
    choi: np.ndarray
    witness: np.ndarray | None
    min_eigenvalue: float
    cp_map: CpMap | None = None

    def __bool__(self):
        return self.completely_positive


def _expectation_coords(alg: StarAlgebra) -> np.ndarray:
    """For each matrix unit ``E_pq`` of the representation space, the algebra
    coordinates of its Hilbert-Schmidt projection onto ``rho(A)``; shape (dim, n*n)."""
    cached = getattr(alg, "_expectation_coords", None)
    if cached is None:
        cached = _compute_expectation_coords(alg)
        alg._expectation_coords = cached
    return cached


def _compute_expectation_coords(alg: StarAlgebra) -> np.ndarray:
    reps = alg.rep
    n = alg.rep_dim
    flat = np.array([r.ravel() for r in reps])  # dim x n^2
    hs = np.conjugate(flat) @ flat.T  # hs[i, j] = tr(rho_i^H rho_j)
    rhs = np.conjugate(flat)  # column (p, q) holds conj(rho_i[p, q])
    return nm.solve(hs, rhs, alg.tol) if alg.dim else nm.zeros((0, n * n), alg.backend)


def choi_matrix(phi_map: StarLinearMap) -> np.ndarray:
    """Choi matrix of ``rho_B o Phi o rho_A^{-1} o E`` with ``E`` the trace-preserving
    conditional expectation of the domain representation onto ``rho_A(A)``."""
    a, b = phi_map.dom, phi_map.cod
    if a.rep is None or b.rep is None:
        raise NoFaithfulRep("Choi test needs faithful representations on both sides")
    n, m = a.rep_dim, b.rep_dim
    images = phi_map.matrix @ _expectation_coords(a)  # column (p, q) holds Phi(E(E_pq))
    choi = nm.zeros((n * m, n * m), a.backend)
    for p in range(n):
        for q in range(n):
            choi[p * m : (p + 1) * m, q * m : (q + 1) * m] = b.represent(images[:, p * n + q])
    return choi


def is_completely_positive(phi_map: StarLinearMap) -> CpCheck:
    choi = choi_matrix(phi_map)
    cert = nm.psd_certify(choi, phi_map.dom.tol)
    fl = nm.to_float(choi)
    min_eig = float(np.linalg.eigvalsh((fl + fl.conj().T) / 2)[0]) if fl.size else 0.0
    if not cert.psd:
        return CpCheck(False, choi, cert.witness, min_eig)
    unital = phi_map.cod.close(phi_map.matrix @ phi_map.dom.unit, phi_map.cod.unit)
    kraus_rank = cert.pivots if cert.pivots is not None else nm.rank(choi, phi_map.dom.tol)
    cp = CpMap(phi_map, choi, unital, kraus_rank)
    return CpCheck(True, choi, None, min_eig, cp)


def as_cp_map(phi_map) -> CpMap:
    if isinstance(phi_map, CpMap):
        return phi_map
    check = is_completely_positive(phi_map)
    if not check:
        raise NotCP("map is not completely positive", check.witness)
    return check.cp_map


def kraus_map(dom: StarAlgebra, cod: StarAlgebra, kraus: Sequence) -> StarLinearMap:
    """``a -> sum_r K_r^H rho_dom(a) K_r`` read back into ``cod`` through its representation."""
    be = dom.backend
    ks = [nm.as_backend(k, be) for k in kraus]
    basis = np.array([r.ravel() for r in cod.rep]).T
    cols = []
    for r in dom.rep:
        img = sum((nm.dagger(k) @ r @ k for k in ks), nm.zeros(cod.rep[0].shape, be))
        x, res = nm.lstsq(basis, img.ravel(), cod.tol)
        if x is None or res > 1e-8:
            raise AlgebraMismatch("Kraus image leaves the codomain representation")
        cols.append(x)
    return StarLinearMap(dom, cod, np.column_stack(cols))


# ---------------------------------------------------------------- Stinespring


@dataclass
class StinespringDilation:
    h_dim: int
    form: np.ndarray
    v: np.ndarray
    v_adjoint: np.ndarray
    pi: list
    form_psd: bool
    residual: float
    rep_residual: float

    @property
    def ok(self) -> bool:
        return self.form_psd and self.residual <= 1e-9 and self.rep_residual <= 1e-9


def stinespring(phi_map, phi: State) -> StinespringDilation:
    """Dilation of a CP map ``Phi: A -> B`` through ``H = (A (x) B) / radical``."""
    cp = as_cp_map(phi_map)
    pm = cp.underlying
    a, b = pm.dom, pm.cod
    if not same_algebra(b, phi.algebra):
        raise AlgebraMismatch("state must live on the codomain of the map")
    _require_positive(phi)
    be = a.backend
    g_phi = phi.gns_space
    gfull = g_phi.gram_full
    da, db = a.dim, b.dim
    basis_a = [a.basis_vector(i) for i in range(da)]
    stars_a = [a.apply_star(x) for x in basis_a]
    big = nm.zeros((da * db, da * db), be)
    for i in range(da):
        for k in range(da):
            x = pm.matrix @ a.multiply(stars_a[k], basis_a[i])
            block = b.left_matrix(x).T @ gfull
            big[i * db : (i + 1) * db, k * db : (k + 1) * db] = block
    psd = nm.psd_certify(big, a.tol).psd
    quot = FormQuotient(big, be, a.tol)
    qm = quot.quotient_map
    cols = [qm @ np.kron(a.unit, b.basis_vector(p)) for p in g_phi.pivots]
    v = np.column_stack(cols) if cols else nm.zeros((quot.dim, 0), be)
    pi = []
    for s in range(da):
        m = nm.zeros((quot.dim, quot.dim), be)
        for col, idx in enumerate(quot.pivots):
            i, j = divmod(idx, db)
            m[:, col] = qm @ np.kron(a.multiply(basis_a[s], basis_a[i]), b.basis_vector(j))
        pi.append(m)
    v_adj = nm.adjoint_wrt_forms(v, g_phi.gram, quot.gram, a.tol)
    res = 0.0
    rep_res = 0.0
    for s in range(da):
        lhs = v_adj @ pi[s] @ v
        rhs = g_phi.action_of(pm.matrix[:, s])
        res = max(res, nm.residual(lhs, rhs))
        star_s = sum((c * pi[t] for t, c in enumerate(stars_a[s]) if c != 0), nm.zeros(pi[s].shape, be))
        adj = nm.adjoint_wrt_forms(pi[s], quot.gram, quot.gram, a.tol) if quot.dim else pi[s]
        rep_res = max(rep_res, nm.residual(star_s, adj))
    return StinespringDilation(quot.dim, quot.gram, v, v_adj, pi, psd, res, rep_res)


# ---------------------------------------------------------------- collapse


@dataclass
class ConditioningReport:
    psi_one: object
    phi_of_p: object
    collapse_probability_ok: bool
    represented_by_p_omega: bool
    inclusion: np.ndarray
    inclusion_isometric: bool
    gns_m_is_inclusion_then_p: bool
    omega_to_p_omega: bool
    gns_mc_is_p_then_projection: bool
    composite_residual: float | None

    @property
    def ok(self) -> bool:
        return (self.collapse_probability_ok and self.represented_by_p_omega and self.inclusion_isometric
                and self.gns_m_is_inclusion_then_p and self.omega_to_p_omega and self.gns_mc_is_p_then_projection
                and (self.composite_residual is None or self.composite_residual <= 1e-9))


def conditioning_map(p: Element) -> StarLinearMap:
    alg = p.algebra
    cols = [alg.multiply(alg.multiply(p.coords, alg.basis_vector(i)), p.coords) for i in range(alg.dim)]
    return StarLinearMap(alg, alg, np.column_stack(cols))


def conditioning(p: Element, phi: State) -> tuple[MarkovMorphism, ConditioningReport]:
    """The process ``a -> P a P`` against ``phi`` with the collapse bookkeeping."""
    if not is_projection(p):
        raise NotProjection("P must satisfy P = P* = P^2")
    _require_positive(phi)
    alg = p.algebra
    m = markov_morphism(conditioning_map(p), phi)
    psi = m.cod_state
    g_phi, g_psi = phi.gns_space, psi.gns_space
    p_act = g_phi.action_of(p.coords)
    p_omega = p_act @ g_phi.omega
    psi_one, phi_p = psi.normalization, phi(p.coords)
    prob_ok = alg.close(np.array([psi_one]), np.array([phi_p]))
    represented = vector_state(g_phi, p_omega).same_as(psi) if g_phi.dim else nm.is_zero(psi.functional)
    cols = [g_phi.actions[q] @ p_omega for q in g_psi.pivots]
    incl = np.column_stack(cols) if cols else nm.zeros((g_phi.dim, 0), alg.backend)
    incl_iso = nm.is_gram_isometry(incl, g_psi.gram, g_phi.gram, alg.tol)
    fwd = gns_m(m)
    fwd_ok = g_phi.close(fwd, p_act @ incl)
    back = gns_mc(m)
    omega_ok = g_phi.close(incl @ back @ g_phi.omega, p_omega) and g_psi.close(back @ g_phi.omega, g_psi.omega)
    incl_adj = nm.adjoint_wrt_forms(incl, g_psi.gram, g_phi.gram, alg.tol)
    proj_ok = g_psi.close(back, incl_adj @ p_act)
    comp = None
    if g_psi.dim == g_phi.dim:
        comp = nm.residual(incl @ back, p_act)
    report = ConditioningReport(psi_one, phi_p, prob_ok, represented, incl, incl_iso, fwd_ok, omega_ok, proj_ok, comp)
    return m, report


def _conjugation_map(dom: StarAlgebra, cod: StarAlgebra, t) -> StarLinearMap:
    """``x -> t^H x t`` from matrices on ``t``'s codomain to matrices on its domain."""
    return kraus_map(dom, cod, [t])


@dataclass
class CoisometryPairReport:
    composite_residual: float
    factor_residual: float
    omega_residual: float

    @property
    def ok(self) -> bool:
        return max(self.composite_residual, self.factor_residual, self.omega_residual) <= 1e-9


def coisometry_pair(iso, w) -> tuple[MarkovMorphism, CoisometryPairReport]:
    """Chain ``Psi = i (.) i*`` then ``Phi = i* (.) i`` starting from the vectorial state at ``w``.

    The composite process sits over ``a -> P a P`` with ``P = i i*``; its covariant
    representative is compared with ``P`` through the vector identifications.
    """
    iso = np.asarray(iso)
    be = nm.backend_of(iso)
    big, small = iso.shape
    if not nm.equal(nm.dagger(iso) @ iso, nm.eye(small, be), 0.0 if be == EXACT else 1e-9):
        raise NotIsometric("i must satisfy i* i = 1")
    a_big, a_small = make_matrix_algebra(big, be), make_matrix_algebra(small, be)
    w = nm.as_backend(w, be)
    psi_map = _conjugation_map(a_small, a_big, nm.dagger(iso))  # End(H) -> End(H'), x -> i x i*
    phi_map = _conjugation_map(a_big, a_small, iso)  # End(H') -> End(H), y -> i* y i
    state_w = vectorial_state(a_big, w)
    m_psi = markov_morphism(psi_map, state_w)
    m_phi = markov_morphism(phi_map, m_psi.cod_state)
    comp = evolve([m_psi, m_phi])
    proj = iso @ nm.dagger(iso)
    emb_w = _vector_embedding(state_w, a_big.rep, w)
    emb_pw = _vector_embedding(comp.cod_state, a_big.rep, proj @ w)
    back = gns_mc(comp)
    comp_res = nm.residual(emb_pw @ back, proj @ emb_w)
    factor = gns_mc(m_phi) @ gns_mc(m_psi)
    fac_res = nm.residual(factor, back)
    omega_res = nm.residual(emb_pw @ back @ state_w.gns_space.omega, proj @ w)
    return comp, CoisometryPairReport(comp_res, fac_res, omega_res)


def _vector_embedding(state: State, matrices, v) -> np.ndarray:
    g = state.gns_space
    cols = [matrices[p] @ v for p in g.pivots]
    return np.column_stack(cols) if cols else nm.zeros((len(v), 0), g.backend)


# ---------------------------------------------------------------- scattering


@dataclass
class ScatteringReport:
    transition: np.ndarray
    psi_one: object
    phi_one: object
    residual: float
    probability_bounded: bool

    @property
    def ok(self) -> bool:
        return self.residual <= 1e-9 and self.probability_bounded


def scattering(s, i_alpha, p_beta, v) -> tuple[MarkovMorphism, ScatteringReport]:
    """Process ``alpha -> beta`` over ``b -> T* b T`` with ``T = p_beta S i_alpha``.

    ``v`` is the vector in ``H_alpha`` defining the vectorial state on ``End(H_alpha)``.
    """
    s = np.asarray(s)
    be = nm.backend_of(s)
    i_alpha = nm.as_backend(i_alpha, be)
    p_beta = nm.as_backend(p_beta, be)
    tol = 0.0 if be == EXACT else 1e-9
    n = s.shape[0]
    if s.shape != (n, n) or not nm.equal(nm.dagger(s) @ s, nm.eye(n, be), tol):
        raise NotUnitary("S is not unitary")
    if not nm.equal(nm.dagger(i_alpha) @ i_alpha, nm.eye(i_alpha.shape[1], be), tol):
        raise NotIsometric("i_alpha is not an isometry")
    if not nm.equal(p_beta @ nm.dagger(p_beta), nm.eye(p_beta.shape[0], be), tol):
        raise NotIsometric("p_beta is not the adjoint of an isometry")
    t = p_beta @ s @ i_alpha
    a_alpha = make_matrix_algebra(t.shape[1], be)
    a_beta = make_matrix_algebra(t.shape[0], be)
    phi_map = _conjugation_map(a_beta, a_alpha, t)
    v = nm.as_backend(v, be)
    phi = vectorial_state(a_alpha, v)
    m = markov_morphism(phi_map, phi)
    back = gns_mc(m)
    emb_a = _vector_embedding(phi, a_alpha.rep, v)
    emb_b = _vector_embedding(m.cod_state, a_beta.rep, t @ v)
    res = nm.residual(emb_b @ back, t @ emb_a)
    psi_one, phi_one = m.cod_state.normalization, phi.normalization
    if be == EXACT:
        bounded = 0 <= psi_one <= phi_one
    else:
        slack = 1e-9 * max(1.0, abs(phi_one))
        bounded = -slack <= psi_one.real <= phi_one.real + slack
    return m, ScatteringReport(t, psi_one, phi_one, res, bounded)
