"""States, GNS spaces, and the GNS functor on *-homomorphisms.

Conventions: the form induced by a state is ``<a, b> = phi(b* a)``; on coordinate
vectors ``<x, y>_G = x^T G conj(y)`` with ``G_ij = <e_i, e_j>``. A
:class:`PhysMorphism` ``(A, phi) -> (B, psi)`` stores the homomorphism ``f: B -> A``
with ``psi = phi o f``; its GNS map goes ``GNS(psi) -> GNS(phi)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import numeric as nm
from .algebra import (
    StarAlgebra,
    StarHomomorphism,
    StarLinearMap,
    complex_unit_algebra,
    conjugate_algebra,
    hom_from_rep_images,
    identity_hom,
    tensor_algebra,
    tensor_maps,
)
from .errors import (
    AlgebraMismatch,
    IsotropicState,
    NormalizationMismatch,
    NotAdmissible,
    NotFaithful,
    NotIsometric,
    NotNormalized,
    NotPositive,
    NotSameState,
    NotStarLinear,
    PullbackMismatch,
)
from .numeric import EXACT, FLOAT, ToleranceConfig


def same_algebra(a: StarAlgebra, b: StarAlgebra) -> bool:
    return a is b or a.same_structure(b)


class State:
    """A *-linear functional, stored by its values on the basis."""

    def __init__(self, algebra: StarAlgebra, functional):
        self.algebra = algebra
        self.functional = np.asarray(functional)
        nm.common_backend(self.functional, algebra.unit)

    @property
    def backend(self) -> str:
        return self.algebra.backend

    @property
    def tol(self) -> ToleranceConfig:
        return self.algebra.tol

    def __call__(self, x):
        coords = getattr(x, "coords", x)
        return self.functional @ coords

    @cached_property
    def normalization(self):
        """The value at the unit."""
        return self(self.algebra.unit)

    @cached_property
    def gns_space(self) -> "GnsSpace":
        return GnsSpace(self)

    @cached_property
    def positivity(self) -> nm.PsdCertificate:
        return nm.psd_certify(self.gns_space.gram_full, self.tol)

    def same_as(self, other: "State") -> bool:
        if not same_algebra(self.algebra, other.algebra):
            return False
        return self.algebra.close(self.functional, other.functional)

    def to_float(self) -> "State":
        return State(self.algebra.to_float(), nm.to_float(self.functional))

    def __repr__(self):
        return f"State(dim={self.algebra.dim}, phi(1)={self.normalization})"


def make_state(algebra: StarAlgebra, functional) -> State:
    """Validate *-linearity: ``phi(e_i*) = conj(phi(e_i))`` for every basis element."""
    phi = nm.as_backend(functional, algebra.backend)
    if phi.shape != (algebra.dim,):
        raise AlgebraMismatch("functional length does not match algebra dimension")
    on_stars = algebra.star.T @ phi
    target = np.conjugate(phi)
    for i in range(algebra.dim):
        if not algebra.close(on_stars[i : i + 1], target[i : i + 1]):
            raise NotStarLinear(i)
    return State(algebra, phi)


def vectorial_state(algebra: StarAlgebra, v) -> State:
    """``a -> <rho(a) v, v>`` through the algebra's faithful representation."""
    if algebra.rep is None:
        raise AttributeError("vectorial states need a faithful representation")
    v = nm.as_backend(v, algebra.backend)
    vh = np.conjugate(v)
    return State(algebra, np.array([vh @ r @ v for r in algebra.rep], dtype=algebra.unit.dtype))


def density_state(algebra: StarAlgebra, vectors: Sequence) -> State:
    """Sum of vectorial states, i.e. ``a -> tr(D rho(a))`` with ``D = sum v v*``."""
    out = nm.zeros(algebra.dim, algebra.backend)
    for v in vectors:
        out = out + vectorial_state(algebra, v).functional
    return State(algebra, out)


class FormQuotient:
    """Nondegenerate quotient of a coordinate space by the radical of a Hermitian form.

    Pivots are the leftmost independent rows of the full Gram matrix (scanned in
    ``order``); ``quotient_map`` sends a vector to coordinates on the classes of
    the pivot basis vectors.
    """

    def __init__(self, gram_full, backend: str, tol: ToleranceConfig, order: Sequence[int] | None = None):
        d = gram_full.shape[0]
        order = list(range(d)) if order is None else list(order)
        if sorted(order) != list(range(d)):
            raise ValueError("order must be a permutation of the basis indices")
        gt = gram_full.T
        picked = nm.independent_columns(gt[:, order], tol) if d else []
        self.pivots = [order[k] for k in picked]
        self.radical_basis = nm.kernel_basis(gt, tol) if d else []
        p = self.pivots
        self.dim = len(p)
        self.gram = gram_full[np.ix_(p, p)]
        if self.dim:
            self.quotient_map = nm.inverse(self.gram.T, tol) @ gram_full[:, p].T
        else:
            self.quotient_map = nm.zeros((0, d), backend)


class GnsSpace:
    """The quotient ``A / A-perp`` for the form of a state.

    Quotient representatives are basis elements ``e_p`` for pivot indices ``p``
    (the leftmost independent rows of the full Gram matrix, scanned in
    ``order``); a vector ``x`` of the algebra has quotient coordinates ``Q x``.
    """

    def __init__(self, state: State, order: Sequence[int] | None = None):
        alg = state.algebra
        self.state = state
        self.algebra = alg
        self.backend = alg.backend
        self.tol = alg.tol
        self.gram_full = _gram_full(state)
        q = FormQuotient(self.gram_full, self.backend, self.tol, order)
        self.pivots = q.pivots
        self.radical_basis = q.radical_basis
        self.dim = q.dim
        self.gram = q.gram
        self.quotient_map = q.quotient_map
        p = self.pivots
        self.quotient_reps = [alg.basis_vector(k) for k in p]
        self.omega = self.coords(alg.unit)

    def coords(self, x) -> np.ndarray:
        """Quotient coordinates of the class of the algebra vector ``x``."""
        return self.quotient_map @ x

    @cached_property
    def actions(self) -> list[np.ndarray]:
        """Left multiplication by each basis element, in quotient coordinates."""
        alg = self.algebra
        out = []
        q = self.quotient_map
        for a in range(alg.dim):
            m = nm.zeros((self.dim, self.dim), self.backend)
            row = alg._left.get(a, {})
            for col, p in enumerate(self.pivots):
                for k, c in row.get(p, []):
                    m[:, col] = m[:, col] + c * q[:, k]
            out.append(m)
        return out

    def action_of(self, x) -> np.ndarray:
        coords = getattr(x, "coords", x)
        out = nm.zeros((self.dim, self.dim), self.backend)
        for xi, m in zip(coords, self.actions):
            if xi != 0:
                out = out + xi * m
        return out

    def inner(self, v, w):
        return nm.form(self.gram, v, w)

    def adjoint(self, m) -> np.ndarray:
        return nm.adjoint_wrt_forms(m, self.gram, self.gram, self.tol)

    def close(self, x, y) -> bool:
        return self.algebra.close(x, y)

    @cached_property
    def orthonormal_frame(self) -> np.ndarray:
        """Columns ``C`` with ``C^T gram conj(C) = I`` (float backend, positive states)."""
        if self.backend != FLOAT:
            raise nm.BackendMismatch("orthonormal frames need the float backend")
        if not self.state.positivity:
            raise NotPositive("orthonormal frame needs a positive state")
        chol = np.linalg.cholesky(self.gram.T)
        return np.linalg.inv(chol.conj().T)

    def as_cyclic(self) -> "CyclicRepresentation":
        return CyclicRepresentation(self.algebra, self.gram, self.actions, self.omega)

    def __repr__(self):
        return f"GnsSpace(dim={self.dim}, algebra_dim={self.algebra.dim})"


def _gram_full(state: State) -> np.ndarray:
    """``G_ij = phi(e_j* e_i)``, via ``M_ki = phi(e_k e_i)`` and ``G = M^T S``."""
    alg = state.algebra
    d = alg.dim
    phi = state.functional
    m = nm.zeros((d, d), alg.backend)
    for (k, i), row in alg.terms.items():
        terms = [c * phi[t] for t, c in row if phi[t] != 0]
        if terms:
            m[k, i] = sum(terms[1:], terms[0])
    g = nm.zeros((d, d), alg.backend)
    star = alg.star
    for j in range(d):
        for k in range(d):
            s = star[k, j]
            if s != 0:
                g[:, j] = g[:, j] + s * m[k, :]
    return g


def gns(state: State, order: Sequence[int] | None = None) -> GnsSpace:
    """GNS space of a state; the default pivot order is cached on the state."""
    if order is None:
        return state.gns_space
    return GnsSpace(state, order)


@dataclass(frozen=True)
class PositivityResult:
    positive: bool
    witness: np.ndarray | None = None

    def __bool__(self):
        return self.positive


def is_positive(state: State) -> PositivityResult:
    """Positivity of the form; on failure ``witness`` is an ``a`` with ``phi(a* a) < 0``."""
    cert = state.positivity
    if cert.psd:
        return PositivityResult(True)
    return PositivityResult(False, np.conjugate(cert.witness))


@dataclass
class CyclicRepresentation:
    """A (possibly degenerate) module with a form, basis actions and a vector."""

    algebra: StarAlgebra
    gram: np.ndarray
    matrices: list
    vector: np.ndarray

    def functional(self) -> np.ndarray:
        v = self.vector
        return np.array([nm.form(self.gram, m @ v, v) for m in self.matrices], dtype=v.dtype).reshape(-1)

    def embedding(self, g: GnsSpace) -> np.ndarray:
        """Matrix of ``[x] -> x . vector`` on the quotient basis of ``g``."""
        cols = [self.matrices[p] @ self.vector for p in g.pivots]
        if not cols:
            return nm.zeros((len(self.vector), 0), g.backend)
        return np.column_stack(cols)


def cyclic_isomorphism(g1: GnsSpace, g2) -> np.ndarray:
    """The unique cyclic isometry ``GNS -> M`` sending ``Omega`` to the cyclic vector of ``M``."""
    rep = g2.as_cyclic() if isinstance(g2, GnsSpace) else g2
    if not g1.close(rep.functional(), g1.state.functional):
        raise NotSameState("the two modules represent different functionals")
    t = rep.embedding(g1)
    if not nm.is_gram_isometry(t, g1.gram, rep.gram, g1.tol):
        raise NotIsometric("cyclic map is not isometric")
    return t


@dataclass(frozen=True)
class AdmissibilityCertificate:
    admissible: bool
    witness: np.ndarray | None = None

    def __bool__(self):
        return self.admissible


def admissibility(matrix, source: State, target: State) -> AdmissibilityCertificate:
    """Does ``matrix`` (source algebra -> target algebra) send the source radical into the target radical?"""
    gt = target.gns_space.gram_full
    for x in source.gns_space.radical_basis:
        image = matrix @ x
        if not target.algebra.close(gt.T @ image, target.algebra.zero_vector()):
            return AdmissibilityCertificate(False, x)
    return AdmissibilityCertificate(True)


@dataclass
class PhysMorphism:
    """``(A, phi) -> (B, psi)`` over ``hom: B -> A`` with ``psi = phi o hom``."""

    dom_state: State
    cod_state: State
    hom: StarHomomorphism
    admissible: AdmissibilityCertificate = field(default=None)

    def __post_init__(self):
        if self.admissible is None:
            self.admissible = admissibility(self.hom.matrix, self.cod_state, self.dom_state)

    def compose(self, other: "PhysMorphism") -> "PhysMorphism":
        """``other o self``: first ``self: phi -> psi``, then ``other: psi -> chi``."""
        if not self.cod_state.same_as(other.dom_state):
            raise AlgebraMismatch("morphisms are not composable")
        return PhysMorphism(self.dom_state, other.cod_state, self.hom.compose(other.hom))


def check_same_normalization(dom_state: State, cod_state: State) -> None:
    a, b = dom_state.normalization, cod_state.normalization
    ok = a == b if dom_state.backend == EXACT else abs(complex(a) - complex(b)) <= dom_state.tol.psd_tol * max(1, abs(a))
    if not ok:
        raise NormalizationMismatch(f"phi(1) = {a} differs from psi(1) = {b}", (a, b))


def phys_morphism(f: StarHomomorphism, phi: State) -> PhysMorphism:
    """Pull ``phi`` on ``f.cod`` back along ``f`` and certify admissibility."""
    if not same_algebra(f.cod, phi.algebra):
        raise AlgebraMismatch("state does not live on the codomain of the homomorphism")
    psi = State(f.dom, f.matrix.T @ phi.functional)
    return PhysMorphism(phi, psi, f)


def make_morphism(dom_state: State, cod_state: State, hom: StarHomomorphism) -> PhysMorphism:
    """Explicit construction: rejects mismatched normalizations, then checks the pullback law."""
    check_same_normalization(dom_state, cod_state)
    pulled = hom.matrix.T @ dom_state.functional
    if not cod_state.algebra.close(pulled, cod_state.functional):
        raise PullbackMismatch("psi is not the pullback of phi", pulled)
    return PhysMorphism(dom_state, cod_state, hom)


def identity_morphism(phi: State) -> PhysMorphism:
    return PhysMorphism(phi, phi, identity_hom(phi.algebra))


def gns_map(m: PhysMorphism) -> np.ndarray:
    """``[x] -> [f(x)]`` from ``GNS(psi)`` to ``GNS(phi)``."""
    if not m.admissible:
        raise NotAdmissible("morphism is not admissible", m.admissible.witness)
    return _transport(m.hom.matrix, m.cod_state, m.dom_state)


def _transport(matrix, source: State, target: State) -> np.ndarray:
    gs, gt = source.gns_space, target.gns_space
    if gs.dim == 0:
        return nm.zeros((gt.dim, 0), gt.backend)
    return gt.quotient_map @ matrix[:, gs.pivots]


def _require_positive(*states: State):
    for s in states:
        if not s.positivity:
            raise NotPositive("state is not positive", np.conjugate(s.positivity.witness))


def gns_c(m: PhysMorphism) -> np.ndarray:
    """Adjoint of :func:`gns_map`, ``GNS(phi) -> GNS(psi)``; positive states only."""
    _require_positive(m.dom_state, m.cod_state)
    fwd = gns_map(m)
    return nm.adjoint_wrt_forms(fwd, m.cod_state.gns_space.gram, m.dom_state.gns_space.gram, m.dom_state.tol)


# ---------------------------------------------------------------- monoidal structure


def tensor_state(phi: State, psi: State) -> State:
    alg = tensor_algebra(phi.algebra, psi.algebra)
    return State(alg, np.kron(phi.functional, psi.functional))


def tensor_phys(m1: PhysMorphism, m2: PhysMorphism) -> PhysMorphism:
    hom = tensor_maps(m1.hom, m2.hom)
    return PhysMorphism(tensor_state(m1.dom_state, m2.dom_state), tensor_state(m1.cod_state, m2.cod_state), hom)


def monoidal_iso(phi: State, psi: State, joint: State | None = None) -> np.ndarray:
    """``GNS(phi) (x) GNS(psi) -> GNS(phi (x) psi)`` on Kronecker-ordered quotient bases."""
    g1, g2 = phi.gns_space, psi.gns_space
    joint = joint or tensor_state(phi, psi)
    g12 = joint.gns_space
    db = psi.algebra.dim
    cols = [p * db + q for p in g1.pivots for q in g2.pivots]
    iso = g12.quotient_map[:, cols] if cols else nm.zeros((g12.dim, 0), g12.backend)
    if iso.shape[0] != iso.shape[1]:
        raise NotIsometric("tensor of GNS spaces has the wrong dimension")
    if not nm.is_gram_isometry(iso, np.kron(g1.gram, g2.gram), g12.gram, phi.tol):
        raise NotIsometric("monoidal comparison is not unitary")
    return iso


def vector_state(g: GnsSpace, v) -> State:
    """``a -> <a v, v>`` on the algebra of ``g``."""
    v = np.asarray(v)
    vals = [nm.form(g.gram, m @ v, v) for m in g.actions] if g.dim else [0] * g.algebra.dim
    return State(g.algebra, nm.as_backend(vals, g.backend) if g.backend == EXACT else np.array(vals, dtype=complex))


def pullback_state(f: StarLinearMap, phi: State) -> State:
    return State(f.dom, f.matrix.T @ phi.functional)


def dinaturality_square(m: PhysMorphism, v) -> tuple[State, State]:
    """Both paths around the square for ``v`` in ``GNS(psi)``.

    First path: push ``v`` into ``GNS(phi)``, take its vector state and pull it
    back along the homomorphism.  Second path: the vector state of ``v`` itself.
    """
    pushed = vector_state(m.dom_state.gns_space, gns_map(m) @ np.asarray(v))
    return pullback_state(m.hom, pushed), vector_state(m.cod_state.gns_space, v)


# ---------------------------------------------------------------- conjugation


def conjugate_state(phi: State) -> State:
    return State(conjugate_algebra(phi.algebra), np.conjugate(phi.functional))


@dataclass(frozen=True)
class ConjugateReport:
    same_pivots: bool
    gram_conjugated: bool
    actions_conjugated: bool
    form_rule: bool

    @property
    def ok(self) -> bool:
        return self.same_pivots and self.gram_conjugated and self.actions_conjugated and self.form_rule


def verify_conjugate_gns(phi: State) -> ConjugateReport:
    g = phi.gns_space
    gb = conjugate_state(phi).gns_space
    same = g.pivots == gb.pivots
    gram_ok = same and g.close(gb.gram, np.conjugate(g.gram))
    acts_ok = same and all(g.close(a, np.conjugate(b)) for a, b in zip(gb.actions, g.actions))
    form_ok = same
    if same:
        for i in range(g.dim):
            for j in range(g.dim):
                v = nm.unit_vector(g.dim, i, g.backend)
                w = nm.unit_vector(g.dim, j, g.backend)
                if not g.close(np.array([gb.inner(np.conjugate(v), np.conjugate(w))]), np.array([g.inner(w, v)])):
                    form_ok = False
    return ConjugateReport(same, gram_ok, acts_ok, form_ok)


# ---------------------------------------------------------------- normalization


def make_I(lam, backend: str = EXACT) -> State:
    """The state on C with value ``lam`` at the unit."""
    alg = complex_unit_algebra(backend)
    return State(alg, nm.as_backend([lam], backend))


def normalize(phi: State) -> State:
    n = phi.normalization
    if n == 0:
        raise IsotropicState("cannot normalize a state with phi(1) = 0")
    return State(phi.algebra, phi.functional / n)


@dataclass(frozen=True)
class CompositeReport:
    projections_are_morphisms: bool
    noninteraction: bool
    commutation: bool

    @property
    def ok(self) -> bool:
        return self.projections_are_morphisms and self.noninteraction and self.commutation


def composite_axiom_check(phi: State, psi: State) -> CompositeReport:
    """Check the composite axioms for ``phi (x) psi`` with ``p(a) = a (x) 1`` and ``q(b) = 1 (x) b``."""
    for s in (phi, psi):
        n = s.normalization
        if not (n == 1 if s.backend == EXACT else abs(n - 1) <= s.tol.psd_tol):
            raise NotNormalized(f"state has phi(1) = {n}")
    a, b = phi.algebra, psi.algebra
    joint = tensor_state(phi, psi)
    ab = joint.algebra
    p = np.kron(nm.eye(a.dim, a.backend), b.unit.reshape(-1, 1))
    q = np.kron(a.unit.reshape(-1, 1), nm.eye(b.dim, b.backend))
    morph_ok = True
    try:
        make_morphism(joint, phi, StarHomomorphism(a, ab, p))
        make_morphism(joint, psi, StarHomomorphism(b, ab, q))
    except (PullbackMismatch, NormalizationMismatch):
        morph_ok = False
    nonint, comm = True, True
    for i in range(a.dim):
        for j in range(b.dim):
            x, y = p[:, i], q[:, j]
            xy = ab.multiply(x, y)
            if not ab.close(np.array([joint(xy)]), np.array([phi.functional[i] * psi.functional[j]])):
                nonint = False
            if not ab.close(xy, ab.multiply(y, x)):
                comm = False
    return CompositeReport(morph_ok, nonint, comm)


# ---------------------------------------------------------------- Schrodinger lift


@dataclass
class SchrodingerLift:
    """``f(a) = U a U*`` as a morphism ``(B, U psi) -> (A, psi)`` with its verification data."""

    morphism: PhysMorphism
    target: StarAlgebra
    target_matrices: list
    embedding_source: np.ndarray
    embedding_target: np.ndarray
    residual: float
    corollary_residual: float | None = None

    @property
    def ok(self) -> bool:
        tol = 1e-9
        return self.residual <= tol and (self.corollary_residual is None or self.corollary_residual <= tol)


def _embedding(g: GnsSpace, matrices, vector) -> np.ndarray:
    cols = [matrices[p] @ vector for p in g.pivots]
    return np.column_stack(cols) if cols else nm.zeros((len(vector), 0), g.backend)


def lift_schrodinger(u, psivec, algebra: StarAlgebra, target: StarAlgebra | None = None) -> SchrodingerLift:
    """Lift an isometry ``U: H -> H'`` to a morphism over ``a -> U a U*``.

    Without ``target`` the algebra ``B = U A U*`` is presented abstractly (same
    structure constants, basis ``U e_i U*``). With ``target`` (an algebra with a
    faithful representation on ``H'``) the homomorphism is solved against it,
    which requires ``U`` to be unitary.
    """
    be = algebra.backend
    u = nm.as_backend(u, be)
    v = nm.as_backend(psivec, be)
    if algebra.rep is None or algebra.rep_dim != u.shape[1]:
        raise NotFaithful("algebra must act faithfully on the domain of U")
    if nm.rank(np.array([r.ravel() for r in algebra.rep]), algebra.tol) < algebra.dim:
        raise NotFaithful("representation is not injective")
    uh = nm.dagger(u)
    eq_tol = 0.0 if be == EXACT else 1e-9
    if not nm.equal(uh @ u, nm.eye(u.shape[1], be), eq_tol):
        raise NotIsometric("U*U is not the identity")
    if nm.is_zero(v):
        raise ValueError("psivec must be nonzero")
    images = [u @ r @ uh for r in algebra.rep]
    uv = u @ v
    if target is None:
        target = StarAlgebra([f"U·{lab}·U*" for lab in algebra.labels], algebra.terms, algebra.unit,
                             algebra.star, algebra.rep, be, algebra.tol)
        hom = StarHomomorphism._raw(algebra, target, nm.eye(algebra.dim, be))
        target_mats = images
    else:
        hom = hom_from_rep_images(algebra, target, images)
        target_mats = target.rep
    target_state = vectorial_state_on(target, target_mats, uv)
    morph = phys_morphism(hom, target_state)
    source_state = morph.cod_state
    emb_src = _embedding(source_state.gns_space, algebra.rep, v)
    emb_tgt = _embedding(target_state.gns_space, target_mats, uv)
    res = nm.residual(emb_tgt @ gns_map(morph), u @ emb_src)
    cor = None
    if u.shape[0] == u.shape[1]:
        inv = StarHomomorphism._raw(target, algebra, nm.inverse(hom.matrix, algebra.tol))
        back = phys_morphism(inv, source_state)
        emb_back = _embedding(back.cod_state.gns_space, target_mats, uv)
        cor = nm.residual(emb_back @ gns_c(back), u @ emb_src)
    return SchrodingerLift(morph, target, target_mats, emb_src, emb_tgt, res, cor)


def vectorial_state_on(algebra: StarAlgebra, matrices, v) -> State:
    vh = np.conjugate(v)
    return State(algebra, np.array([vh @ m @ v for m in matrices], dtype=algebra.unit.dtype))
