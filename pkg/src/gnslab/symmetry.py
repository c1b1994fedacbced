"""Finite group actions on states, equivariant GNS, antiunitary time reversal, time chains."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import numeric as nm
from .algebra import StarHomomorphism, check_homomorphism, identity_hom, tensor_algebra, validate_group_table
from .errors import MissingArrow, NotAnAction, NotInvertible, NotPositive, NotUnitary
from .gns import (
    GnsSpace,
    PhysMorphism,
    State,
    _require_positive,
    gns_c,
    gns_map,
    make_morphism,
    monoidal_iso,
    tensor_state,
)
from .markov import MarkovMorphism, gns_m
from .numeric import EXACT


def _tolerance(backend: str, scale: float = 1.0) -> float:
    return 0.0 if backend == EXACT else 1e-9 * max(1.0, scale)


def _same(a, b, backend: str) -> bool:
    return nm.residual(a, b) <= _tolerance(backend, max(nm.max_abs(a), nm.max_abs(b)))


def product_table(t1, t2) -> list[list[int]]:
    """Multiplication table of ``G1 x G2`` with index ``g1 * |G2| + g2``."""
    n2 = len(t2)
    return [[t1[a][c] * n2 + t2[b][d] for c in range(len(t1)) for d in range(n2)]
            for a in range(len(t1)) for b in range(n2)]


@dataclass
class GroupAction:
    """A finite group acting on ``(A, phi)`` by state-preserving automorphisms.

    ``table[g][h]`` is the index of ``gh``; ``automorphisms[g]`` is ``alpha(g)``.
    """

    table: list
    state: State
    automorphisms: list
    identity: int = field(init=False)
    inverse: list = field(init=False)

    def __post_init__(self):
        self.table = [list(map(int, row)) for row in self.table]
        self.identity, self.inverse = validate_group_table(self.table)
        alg = self.state.algebra
        be = alg.backend
        n = len(self.table)
        if len(self.automorphisms) != n:
            raise NotAnAction("one automorphism per group element", len(self.automorphisms))
        mats = []
        for g, f in enumerate(self.automorphisms):
            if not isinstance(f, StarHomomorphism):
                f = check_homomorphism(alg, alg, f)
                self.automorphisms[g] = f
            if nm.rank(f.matrix, alg.tol) < alg.dim:
                raise NotAnAction("invertibility", g)
            if not alg.close(f.matrix.T @ self.state.functional, self.state.functional):
                raise NotAnAction("state preservation", g)
            mats.append(f.matrix)
        if not _same(mats[self.identity], nm.eye(alg.dim, be), be):
            raise NotAnAction("identity", self.identity)
        for g in range(n):
            for h in range(n):
                if not _same(mats[g] @ mats[h], mats[self.table[g][h]], be):
                    raise NotAnAction("composition", (g, h))

    @property
    def order(self) -> int:
        return len(self.table)

    def morphism(self, g: int) -> PhysMorphism:
        return make_morphism(self.state, self.state, self.automorphisms[g])


def permutation_action(table, state: State, perms: Sequence[Sequence[int]]) -> GroupAction:
    """Action on a function algebra ``C(X)`` by ``(alpha(g) f)(x) = f(perm_g^{-1}(x))``.

    On indicator coordinates ``alpha(g)`` sends ``1_x`` to ``1_{perm_g(x)}``.
    """
    alg = state.algebra
    be = alg.backend
    autos = []
    for p in perms:
        m = nm.zeros((alg.dim, alg.dim), be)
        for x, y in enumerate(p):
            m[y, x] = nm.scalar(1, be)
        autos.append(check_homomorphism(alg, alg, m))
    return GroupAction(table, state, autos)


def tensor_action(a1: GroupAction, a2: GroupAction) -> GroupAction:
    """``G1 x G2`` acting on ``A1 (x) A2`` factorwise."""
    alg = tensor_algebra(a1.state.algebra, a2.state.algebra)
    autos = [check_homomorphism(alg, alg, np.kron(f.matrix, h.matrix))
             for f in a1.automorphisms for h in a2.automorphisms]
    return GroupAction(product_table(a1.table, a2.table), tensor_state(a1.state, a2.state), autos)


@dataclass
class UnitaryRep:
    dim: int
    gram: np.ndarray
    matrices: list
    omega: np.ndarray
    covariance_residual: float
    triples_checked: int

    def character(self, g: int):
        return sum(np.diag(self.matrices[g]), nm.ZERO if nm.backend_of(self.gram) == EXACT else 0j)


def equivariant_gns(action: GroupAction) -> UnitaryRep:
    """Unitary representation ``U(g): [x] -> [alpha(g) x]`` on ``GNS(phi)``.

    ``U(g)`` is the covariant GNS map of the morphism over ``alpha(g^{-1})``,
    which makes the assignment multiplicative.  Every property is verified
    before returning: unitarity, ``U(g)U(h) = U(gh)``, ``U(e) = 1``,
    ``U(g) Omega = Omega`` and ``U(g) pi(a) v = pi(alpha(g) a) U(g) v`` on all
    group elements, algebra basis elements and quotient basis vectors.
    """
    phi = action.state
    if not phi.positivity:
        raise NotPositive("state is not positive", np.conjugate(phi.positivity.witness))
    g = phi.gns_space
    be = g.backend
    n = action.order
    us = [gns_c(action.morphism(action.inverse[k])) for k in range(n)]
    ident = nm.eye(g.dim, be)
    for k, u in enumerate(us):
        if not nm.is_gram_isometry(u, g.gram, g.gram, phi.tol) or nm.rank(u, phi.tol) < g.dim:
            raise NotUnitary(f"U({k}) is not unitary", k)
        if not _same(u @ g.omega, g.omega, be):
            raise NotAnAction("cyclic vector fixed", k)
    if not _same(us[action.identity], ident, be):
        raise NotAnAction("identity", action.identity)
    for a in range(n):
        for b in range(n):
            if not _same(us[a] @ us[b], us[action.table[a][b]], be):
                raise NotAnAction("multiplicativity", (a, b))
    worst = 0.0
    count = 0
    alg = phi.algebra
    for k, u in enumerate(us):
        alpha = action.automorphisms[k].matrix
        for i in range(alg.dim):
            lhs = u @ g.actions[i]
            rhs = g.action_of(alpha[:, i]) @ u
            # columns of lhs - rhs are the identity evaluated on each quotient basis vector
            worst = max(worst, nm.residual(lhs, rhs))
            count += g.dim
            if not _same(lhs, rhs, be):
                raise NotAnAction("covariance", (k, i))
    return UnitaryRep(g.dim, g.gram, us, g.omega, worst, count)


def kron_rep(r1: UnitaryRep, r2: UnitaryRep) -> list[np.ndarray]:
    return [np.kron(a, b) for a in r1.matrices for b in r2.matrices]


def tensor_rep_residual(a1: GroupAction, a2: GroupAction) -> float:
    """Compare ``equivariant_gns`` of the product action with the Kronecker of the factors."""
    joint = tensor_action(a1, a2)
    r12 = equivariant_gns(joint)
    iso = monoidal_iso(a1.state, a2.state, joint.state)
    worst = 0.0
    for u, k in zip(r12.matrices, kron_rep(equivariant_gns(a1), equivariant_gns(a2))):
        worst = max(worst, nm.residual(u @ iso, iso @ k))
    return worst


# ---------------------------------------------------------------- antiunitaries


@dataclass(frozen=True)
class AntiLinearOp:
    """``v -> matrix @ conj(v)`` when ``conjugate`` is set, else ``v -> matrix @ v``."""

    matrix: np.ndarray
    conjugate: bool

    def __call__(self, v):
        v = np.asarray(v)
        return self.matrix @ (np.conjugate(v) if self.conjugate else v)

    def compose(self, other: "AntiLinearOp") -> "AntiLinearOp":
        """``self o other``."""
        inner = np.conjugate(other.matrix) if self.conjugate else other.matrix
        return AntiLinearOp(self.matrix @ inner, self.conjugate != other.conjugate)

    @classmethod
    def linear(cls, m) -> "AntiLinearOp":
        return cls(np.asarray(m), False)


@dataclass
class TimeReversal:
    operator: AntiLinearOp
    gns: GnsSpace
    preserves_form: bool
    square: np.ndarray
    square_sign: int | None  # +1 or -1 when T^2 is that multiple of the identity


def time_reversal(iso: PhysMorphism) -> TimeReversal:
    """Antiunitary on ``GNS(phi)`` from a morphism ``conj(phi) -> phi``.

    ``gns_map(iso)`` sends ``GNS(phi)`` to ``GNS(conj(phi))``; the latter is
    identified with ``GNS(phi)`` by conjugating coordinates, since a class
    ``[x]`` of the conjugate algebra has the conjugated coordinates of ``[x]``.
    """
    phi = iso.cod_state
    _require_positive(phi, iso.dom_state)
    dim = phi.algebra.dim
    if iso.hom.matrix.shape != (dim, dim) or nm.rank(iso.hom.matrix, phi.tol) < dim:
        raise NotInvertible("homomorphism is not invertible")
    g = phi.gns_space
    gb = iso.dom_state.gns_space
    if list(gb.pivots) != list(g.pivots):
        raise NotInvertible("GNS spaces of the state and its conjugate are not aligned")
    forward = gns_map(iso)
    if nm.rank(forward, phi.tol) < g.dim:
        raise NotInvertible("induced GNS map is not invertible")
    w = np.conjugate(forward)
    op = AntiLinearOp(w, True)
    be = g.backend
    preserves = _same(w.T @ g.gram @ np.conjugate(w), g.gram.T, be)
    sq = w @ np.conjugate(w)
    ident = nm.eye(g.dim, be)
    sign = 1 if _same(sq, ident, be) else (-1 if _same(sq, -ident, be) else None)
    return TimeReversal(op, g, preserves, sq, sign)


# ---------------------------------------------------------------- time chains


@dataclass
class TimeChainReport:
    time: bool
    time_th: bool
    time_th_from_start: bool
    failures: list  # (variant, triple or arrow) pairs

    @property
    def variants(self) -> list[str]:
        names = []
        if self.time:
            names.append("Time")
        if self.time_th:
            names.append("Time_th")
        if self.time_th_from_start:
            names.append("Time_th^t0")
        return names


def _operator(m) -> np.ndarray:
    """Forward transport of an arrow: ``GNS`` at the earlier time to ``GNS`` at the later time."""
    if isinstance(m, PhysMorphism):
        return gns_map(m)
    if isinstance(m, MarkovMorphism):
        return gns_m(m)
    return np.asarray(m)


def check_time_chain(times: Sequence, maps: Mapping) -> TimeChainReport:
    """Cocycle checks for a family ``U(t, t')`` indexed by ordered times.

    ``maps[(t, t2)]`` is a matrix, a :class:`PhysMorphism` or a
    :class:`MarkovMorphism`; for morphisms the arrow ``t -> t2`` acts by
    ``gns_map``/``gns_m``, so the codomain state sits at ``t`` and the domain
    state at ``t2``.  Every forward arrow ``t < t2`` is required; missing
    diagonal arrows default to the identity; backward arrows are optional and
    only enter the groupoid variant.

    Variants: ``Time`` needs invertible arrows forming a groupoid,
    ``Time_th`` needs the cocycle on all ordered triples, and ``Time_th^t0``
    needs it only on triples starting at the first time.
    """
    times = list(times)
    n = len(times)
    ops: dict = {}
    for a in range(n):
        for b in range(a + 1, n):
            key = (times[a], times[b])
            if key not in maps:
                raise MissingArrow(times[a], times[b])
            ops[(a, b)] = _operator(maps[key])
    for (t, t2), m in maps.items():
        if t in times and t2 in times:
            ops[(times.index(t), times.index(t2))] = _operator(m)
    for a in range(n):
        if (a, a) not in ops:
            dim = ops[(a, a + 1)].shape[1] if a + 1 < n else (ops[(a - 1, a)].shape[0] if a else 0)
            be = nm.backend_of(next(iter(ops.values()))) if ops else EXACT
            ops[(a, a)] = nm.eye(dim, be)

    failures = []

    def cocycle(a, b, c) -> bool:
        first, second, whole = ops[(a, b)], ops[(b, c)], ops[(a, c)]
        if second.shape[1] != first.shape[0]:
            return False
        return _same(second @ first, whole, nm.common_backend(first, second, whole))

    diag_ok = all(_same(ops[(a, a)], nm.eye(ops[(a, a)].shape[0], nm.backend_of(ops[(a, a)])),
                        nm.backend_of(ops[(a, a)])) for a in range(n))
    if not diag_ok:
        failures.append(("identity", None))
    th = diag_ok
    th0 = diag_ok
    for a in range(n):
        for b in range(a, n):
            for c in range(b, n):
                if not cocycle(a, b, c):
                    th = False
                    failures.append(("Time_th", (times[a], times[b], times[c])))
                    if a == 0:
                        th0 = False
    grp = th
    for a in range(n):
        for b in range(a + 1, n):
            fwd = ops[(a, b)]
            if fwd.shape[0] != fwd.shape[1] or nm.rank(fwd) < fwd.shape[0]:
                grp = False
                failures.append(("Time", (times[a], times[b])))
                continue
            back = ops.get((b, a))
            if back is not None and not _same(back @ fwd, nm.eye(fwd.shape[0], nm.backend_of(fwd)), nm.backend_of(fwd)):
                grp = False
                failures.append(("Time", (times[b], times[a])))
    return TimeChainReport(grp, th, th0, failures)


def identity_chain(times: Sequence, state: State) -> dict:
    hom = identity_hom(state.algebra)
    return {(t, t2): PhysMorphism(state, state, hom) for i, t in enumerate(times) for t2 in times[i:]}
