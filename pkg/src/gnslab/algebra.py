"""Finite-dimensional unital *-algebras given by structure constants."""

from __future__ import annotations

from collections import defaultdict
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import numeric as nm
from .errors import (
    AlgebraMismatch,
    BackendMismatch,
    DuplicateLabel,
    NotAGroup,
    NotMultiplicative,
    NotStarPreserving,
    NotUnital,
)
from .numeric import DEFAULT_TOL, EXACT, FLOAT, ToleranceConfig

# (i, j) -> list of (k, c) with e_i e_j = sum c e_k
Terms = dict[tuple[int, int], list[tuple[int, object]]]


class StarAlgebra:
    """Basis, structure constants, unit, star matrix and optional faithful representation.

    ``star`` is the matrix ``S`` with ``(sum x_i e_i)* = S conj(x)``. Structure
    constants are held sparsely; :attr:`struct_consts` materializes the dense
    rank-3 array on demand.
    """

    def __init__(
        self,
        labels: Sequence[str],
        terms: Terms,
        unit,
        star,
        rep: Sequence[np.ndarray] | None = None,
        backend: str = EXACT,
        tol: ToleranceConfig = DEFAULT_TOL,
    ):
        self.labels = [str(x) for x in labels]
        self.dim = len(self.labels)
        self.backend = backend
        self.tol = tol
        self.terms = {key: list(val) for key, val in terms.items() if val}
        self.unit = np.asarray(unit)
        self.star = np.asarray(star)
        self.rep = None if rep is None else [np.asarray(r) for r in rep]
        nm.common_backend(self.unit, self.star, *(self.rep or []))
        if nm.backend_of(self.unit) != backend:
            raise BackendMismatch("algebra data does not match its backend tag")
        self._left: dict[int, dict[int, list]] = defaultdict(dict)
        for (i, j), val in self.terms.items():
            self._left[i][j] = val

    # -- construction helpers

    @classmethod
    def from_struct_consts(cls, labels, c, unit, star, rep=None, tol=DEFAULT_TOL) -> "StarAlgebra":
        c = np.asarray(c)
        backend = nm.backend_of(c)
        d = c.shape[0]
        terms: Terms = {}
        for i in range(d):
            for j in range(d):
                row = [(k, c[i, j, k]) for k in range(d) if c[i, j, k] != 0]
                if row:
                    terms[(i, j)] = row
        return cls(labels, terms, unit, star, rep, backend, tol)

    @cached_property
    def struct_consts(self) -> np.ndarray:
        c = nm.zeros((self.dim,) * 3, self.backend)
        for (i, j), row in self.terms.items():
            for k, v in row:
                c[i, j, k] = v
        return c

    @property
    def rep_dim(self) -> int | None:
        return None if self.rep is None else self.rep[0].shape[0]

    def basis_vector(self, k: int) -> np.ndarray:
        return nm.unit_vector(self.dim, k, self.backend)

    def zero_vector(self) -> np.ndarray:
        return nm.zeros(self.dim, self.backend)

    def element(self, coords) -> "Element":
        return Element(self, nm.as_backend(coords, self.backend))

    def basis_element(self, k: int) -> "Element":
        return Element(self, self.basis_vector(k))

    def one(self) -> "Element":
        return Element(self, self.unit.copy())

    # -- arithmetic on coordinate vectors

    def multiply(self, x, y) -> np.ndarray:
        out = self.zero_vector()
        xs = [(i, v) for i, v in enumerate(x) if v != 0]
        ys = [(j, v) for j, v in enumerate(y) if v != 0]
        for i, xi in xs:
            row = self._left.get(i)
            if not row:
                continue
            for j, yj in ys:
                t = row.get(j)
                if t:
                    p = xi * yj
                    for k, c in t:
                        out[k] += p * c
        return out

    def apply_star(self, x) -> np.ndarray:
        return self.star @ np.conjugate(x)

    def left_matrix(self, x) -> np.ndarray:
        """Matrix of ``y -> x y``."""
        out = nm.zeros((self.dim, self.dim), self.backend)
        for i, xi in enumerate(x):
            if xi == 0:
                continue
            for j, t in self._left.get(i, {}).items():
                for k, c in t:
                    out[k, j] += xi * c
        return out

    def represent(self, x) -> np.ndarray:
        if self.rep is None:
            raise AttributeError("algebra carries no faithful representation")
        out = nm.zeros(self.rep[0].shape, self.backend)
        for xi, r in zip(x, self.rep):
            if xi != 0:
                out = out + xi * r
        return out

    # -- conversions and comparisons

    def to_float(self) -> "StarAlgebra":
        if self.backend == FLOAT:
            return self
        terms = {key: [(k, complex(c)) for k, c in row] for key, row in self.terms.items()}
        rep = None if self.rep is None else [nm.to_float(r) for r in self.rep]
        return StarAlgebra(self.labels, terms, nm.to_float(self.unit), nm.to_float(self.star), rep, FLOAT, self.tol)

    def same_structure(self, other: "StarAlgebra") -> bool:
        if self.dim != other.dim or self.backend != other.backend:
            return False
        tol = self.tol.rank_tol
        return (
            nm.equal(self.struct_consts, other.struct_consts, tol)
            and nm.equal(self.unit, other.unit, tol)
            and nm.equal(self.star, other.star, tol)
        )

    def close(self, x, y) -> bool:
        """Exact equality, or agreement up to a scaled rank tolerance on floats."""
        if self.backend == EXACT:
            return nm.equal(x, y)
        scale = max(1.0, nm.max_abs(x), nm.max_abs(y))
        return nm.equal(x, y, 10 * self.tol.rank_tol * scale)

    # -- law checks

    def check_laws(self) -> list[str]:
        """Return the list of violated algebra laws (empty when all hold)."""
        problems = []
        d = self.dim
        basis = [self.basis_vector(k) for k in range(d)]
        for i in range(d):
            for j in range(d):
                eij = self.multiply(basis[i], basis[j])
                for k in range(d):
                    lhs = self.multiply(eij, basis[k])
                    rhs = self.multiply(basis[i], self.multiply(basis[j], basis[k]))
                    if not self.close(lhs, rhs):
                        problems.append(f"associativity({i},{j},{k})")
                        return problems
        for i in range(d):
            if not (self.close(self.multiply(self.unit, basis[i]), basis[i])
                    and self.close(self.multiply(basis[i], self.unit), basis[i])):
                problems.append(f"unit({i})")
        if not self.close(self.star @ np.conjugate(self.star), nm.eye(d, self.backend)):
            problems.append("star involutive")
        if not self.close(self.apply_star(self.unit), self.unit):
            problems.append("star fixes unit")
        for i in range(d):
            for j in range(d):
                lhs = self.apply_star(self.multiply(basis[i], basis[j]))
                rhs = self.multiply(self.apply_star(basis[j]), self.apply_star(basis[i]))
                if not self.close(lhs, rhs):
                    problems.append(f"star anti-multiplicative({i},{j})")
                    break
        if self.rep is not None:
            problems.extend(self._check_rep(basis))
        return problems

    def _check_rep(self, basis) -> list[str]:
        problems = []
        n = self.rep_dim
        if not self.close(self.represent(self.unit), nm.eye(n, self.backend)):
            problems.append("rep unital")
        for i in range(self.dim):
            if not self.close(self.represent(self.apply_star(basis[i])), nm.dagger(self.rep[i])):
                problems.append(f"rep star({i})")
            for j in range(self.dim):
                if not self.close(self.represent(self.multiply(basis[i], basis[j])), self.rep[i] @ self.rep[j]):
                    problems.append(f"rep multiplicative({i},{j})")
                    break
        stacked = np.array([r.ravel() for r in self.rep])
        if nm.rank(stacked, self.tol) < self.dim:
            problems.append("rep faithful")
        return problems

    def __repr__(self):
        return f"StarAlgebra(dim={self.dim}, backend={self.backend!r}, labels={self.labels[:4]}{'...' if self.dim > 4 else ''})"


class Element:
    """An element of a StarAlgebra with operator overloads."""

    __slots__ = ("algebra", "coords")

    def __init__(self, algebra: StarAlgebra, coords):
        coords = np.asarray(coords)
        if coords.shape != (algebra.dim,):
            raise AlgebraMismatch("coordinate vector does not match algebra dimension")
        self.algebra = algebra
        self.coords = coords

    def _same(self, other: "Element"):
        if other.algebra is not self.algebra:
            raise AlgebraMismatch("elements live in different algebras")

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1))

    def __mul__(self, other):
        if isinstance(other, Element):
            return mul(self, other)
        return scale(self, other)

    def __rmul__(self, other):
        return scale(self, other)

    def __neg__(self):
        return scale(self, -1)

    def star(self) -> "Element":
        return star(self)

    def matrix(self) -> np.ndarray:
        return self.algebra.represent(self.coords)

    def __eq__(self, other):
        return isinstance(other, Element) and other.algebra is self.algebra and self.algebra.close(self.coords, other.coords)

    __hash__ = None

    def __repr__(self):
        terms = [f"{nm.format_scalar(c) if self.algebra.backend == EXACT else c}*{lab}"
                 for c, lab in zip(self.coords, self.algebra.labels) if c != 0]
        return "Element(" + (" + ".join(terms) or "0") + ")"


def mul(a: Element, b: Element) -> Element:
    a._same(b)
    return Element(a.algebra, a.algebra.multiply(a.coords, b.coords))


def star(a: Element) -> Element:
    return Element(a.algebra, a.algebra.apply_star(a.coords))


def scale(a: Element, s) -> Element:
    return Element(a.algebra, a.coords * nm.scalar(s, a.algebra.backend))


def add(a: Element, b: Element) -> Element:
    a._same(b)
    return Element(a.algebra, a.coords + b.coords)


def commutator(a: Element, b: Element) -> Element:
    return mul(a, b) - mul(b, a)


def is_normal(a: Element) -> bool:
    c = commutator(a, star(a))
    return a.algebra.close(c.coords, a.algebra.zero_vector())


def is_projection(a: Element) -> bool:
    alg = a.algebra
    return alg.close(alg.multiply(a.coords, a.coords), a.coords) and alg.close(alg.apply_star(a.coords), a.coords)


# ---------------------------------------------------------------- constructors


def _one(backend):
    return nm.ONE if backend == EXACT else 1.0


def make_matrix_algebra(n: int, backend: str = EXACT) -> StarAlgebra:
    """Full matrix algebra M_n with matrix-unit basis ``E_pq`` (index ``p*n+q``)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    one = _one(backend)
    idx = lambda p, q: p * n + q  # noqa: E731
    terms: Terms = {}
    for p in range(n):
        for q in range(n):
            for s in range(n):
                terms[(idx(p, q), idx(q, s))] = [(idx(p, s), one)]
    d = n * n
    unit = nm.zeros(d, backend)
    for p in range(n):
        unit[idx(p, p)] = one
    star_m = nm.zeros((d, d), backend)
    rep = []
    for p in range(n):
        for q in range(n):
            star_m[idx(q, p), idx(p, q)] = one
            e = nm.zeros((n, n), backend)
            e[p, q] = one
            rep.append(e)
    labels = [f"E{p + 1}{q + 1}" if n < 10 else f"E{p + 1},{q + 1}" for p in range(n) for q in range(n)]
    return StarAlgebra(labels, terms, unit, star_m, rep, backend)


def make_function_algebra(points: Sequence, backend: str = EXACT) -> StarAlgebra:
    """Algebra C(X) of functions on a finite set, with indicator basis."""
    labels = [str(p) for p in points]
    if not labels:
        raise ValueError("need at least one point")
    if len(set(labels)) != len(labels):
        dup = next(x for x in labels if labels.count(x) > 1)
        raise DuplicateLabel(f"duplicate point label {dup!r}", dup)
    one = _one(backend)
    d = len(labels)
    terms: Terms = {(i, i): [(i, one)] for i in range(d)}
    unit = nm.zeros(d, backend)
    unit[:] = [one] * d
    rep = []
    for i in range(d):
        m = nm.zeros((d, d), backend)
        m[i, i] = one
        rep.append(m)
    return StarAlgebra(labels, terms, unit, nm.eye(d, backend), rep, backend)


def validate_group_table(table) -> tuple[int, list[int]]:
    """Check the group axioms; return the identity index and the inverse table."""
    t = [list(map(int, row)) for row in table]
    n = len(t)
    if n == 0 or any(len(row) != n for row in t):
        raise NotAGroup("square table", None)
    for i in range(n):
        for j in range(n):
            if not 0 <= t[i][j] < n:
                raise NotAGroup("closure", (i, j))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if t[t[i][j]][k] != t[i][t[j][k]]:
                    raise NotAGroup("associativity", (i, j, k))
    ident = next((e for e in range(n) if all(t[e][j] == j and t[j][e] == j for j in range(n))), None)
    if ident is None:
        raise NotAGroup("identity", None)
    inv = []
    for i in range(n):
        j = next((j for j in range(n) if t[i][j] == ident and t[j][i] == ident), None)
        if j is None:
            raise NotAGroup("inverses", i)
        inv.append(j)
    return ident, inv


def make_group_algebra(mult_table, labels: Sequence[str] | None = None, backend: str = EXACT) -> StarAlgebra:
    """Group algebra C[G] with star ``g -> g^{-1}`` and the left regular representation."""
    ident, inv = validate_group_table(mult_table)
    t = [list(map(int, row)) for row in mult_table]
    n = len(t)
    one = _one(backend)
    terms: Terms = {(i, j): [(t[i][j], one)] for i in range(n) for j in range(n)}
    unit = nm.unit_vector(n, ident, backend)
    star_m = nm.zeros((n, n), backend)
    for i in range(n):
        star_m[inv[i], i] = one
    rep = []
    for g in range(n):
        m = nm.zeros((n, n), backend)
        for h in range(n):
            m[t[g][h], h] = one
        rep.append(m)
    labels = list(labels) if labels is not None else [f"g{i}" for i in range(n)]
    return StarAlgebra(labels, terms, unit, star_m, rep, backend)


_TENSOR_CACHE: dict[tuple[int, int], tuple[StarAlgebra, StarAlgebra, StarAlgebra]] = {}
_CONJ_CACHE: dict[int, tuple[StarAlgebra, StarAlgebra]] = {}
_C_CACHE: dict[str, StarAlgebra] = {}


def tensor_algebra(a: StarAlgebra, b: StarAlgebra) -> StarAlgebra:
    """Tensor product; memoized so that repeated tensors of the same factors are identical objects."""
    if a.backend != b.backend:
        raise BackendMismatch("tensor of algebras on different backends")
    hit = _TENSOR_CACHE.get((id(a), id(b)))
    if hit is not None and hit[0] is a and hit[1] is b:
        return hit[2]
    out = _tensor_algebra(a, b)
    _TENSOR_CACHE[(id(a), id(b))] = (a, b, out)
    return out


def _tensor_algebra(a: StarAlgebra, b: StarAlgebra) -> StarAlgebra:
    db = b.dim
    terms: Terms = {}
    for (i, j), ra in a.terms.items():
        for (i2, j2), rb in b.terms.items():
            terms[(i * db + i2, j * db + j2)] = [(k * db + k2, c * c2) for k, c in ra for k2, c2 in rb]
    rep = None
    if a.rep is not None and b.rep is not None:
        rep = [np.kron(x, y) for x in a.rep for y in b.rep]
    labels = [f"{x}⊗{y}" for x in a.labels for y in b.labels]
    return StarAlgebra(labels, terms, np.kron(a.unit, b.unit), np.kron(a.star, b.star), rep, a.backend, a.tol)


def conjugate_algebra(a: StarAlgebra) -> StarAlgebra:
    """Entrywise conjugated presentation; conjugating twice returns the original object."""
    hit = _CONJ_CACHE.get(id(a))
    if hit is not None and hit[0] is a:
        return hit[1]
    out = _conjugate_algebra(a)
    _CONJ_CACHE[id(a)] = (a, out)
    _CONJ_CACHE[id(out)] = (out, a)
    return out


def _conjugate_algebra(a: StarAlgebra) -> StarAlgebra:
    terms = {key: [(k, np.conjugate(c)) for k, c in row] for key, row in a.terms.items()}
    rep = None if a.rep is None else [np.conjugate(r) for r in a.rep]
    return StarAlgebra(a.labels, terms, np.conjugate(a.unit), np.conjugate(a.star), rep, a.backend, a.tol)


def complex_unit_algebra(backend: str = EXACT) -> StarAlgebra:
    """The algebra C itself (one basis element, the unit); a shared instance per backend."""
    if backend not in _C_CACHE:
        _C_CACHE[backend] = make_function_algebra(["1"], backend)
    return _C_CACHE[backend]


# ---------------------------------------------------------------- maps


class StarLinearMap:
    """Linear map ``dom -> cod`` commuting with the stars; ``matrix`` is cod.dim x dom.dim."""

    def __init__(self, dom: StarAlgebra, cod: StarAlgebra, matrix):
        self.dom = dom
        self.cod = cod
        self.matrix = np.asarray(matrix)
        if self.matrix.shape != (cod.dim, dom.dim):
            raise AlgebraMismatch(f"map matrix has shape {self.matrix.shape}, expected {(cod.dim, dom.dim)}")
        nm.common_backend(self.matrix, dom.unit, cod.unit)

    def __call__(self, x):
        if isinstance(x, Element):
            return Element(self.cod, self.matrix @ x.coords)
        return self.matrix @ x

    @property
    def backend(self) -> str:
        return self.dom.backend

    def is_star_preserving(self) -> int | None:
        """Index of the first basis element where star preservation fails, else None."""
        lhs = self.matrix @ self.dom.star
        rhs = self.cod.star @ np.conjugate(self.matrix)
        for i in range(self.dom.dim):
            if not self.cod.close(lhs[:, i], rhs[:, i]):
                return i
        return None

    def compose(self, other: "StarLinearMap") -> "StarLinearMap":
        """``self o other``."""
        if other.cod is not self.dom and not other.cod.same_structure(self.dom):
            raise AlgebraMismatch("maps are not composable")
        return type(self)._raw(other.dom, self.cod, self.matrix @ other.matrix)

    @classmethod
    def _raw(cls, dom, cod, matrix):
        obj = cls.__new__(cls)
        StarLinearMap.__init__(obj, dom, cod, matrix)
        return obj

    def to_float(self) -> "StarLinearMap":
        return type(self)._raw(self.dom.to_float(), self.cod.to_float(), nm.to_float(self.matrix))

    def __repr__(self):
        return f"{type(self).__name__}({self.dom.dim} -> {self.cod.dim})"


def make_star_linear(dom: StarAlgebra, cod: StarAlgebra, matrix) -> StarLinearMap:
    m = StarLinearMap(dom, cod, nm.as_backend(matrix, dom.backend))
    bad = m.is_star_preserving()
    if bad is not None:
        raise NotStarPreserving(bad)
    return m


class StarHomomorphism(StarLinearMap):
    """Validated unital *-homomorphism ``dom (B) -> cod (A)``."""

    def __init__(self, dom: StarAlgebra, cod: StarAlgebra, matrix):
        super().__init__(dom, cod, matrix)
        _validate_hom(self)


def _validate_hom(f: StarLinearMap):
    dom, cod, fm = f.dom, f.cod, f.matrix
    if not cod.close(fm @ dom.unit, cod.unit):
        raise NotUnital("image of the unit is not the unit", fm @ dom.unit)
    cols = [fm[:, k] for k in range(dom.dim)]
    for i in range(dom.dim):
        for j in range(dom.dim):
            lhs = cod.zero_vector()
            for k, c in dom.terms.get((i, j), []):
                lhs = lhs + c * cols[k]
            if not cod.close(lhs, cod.multiply(cols[i], cols[j])):
                raise NotMultiplicative(i, j)
    bad = f.is_star_preserving()
    if bad is not None:
        raise NotStarPreserving(bad)


def check_homomorphism(dom: StarAlgebra, cod: StarAlgebra, matrix) -> StarHomomorphism:
    """Validate a candidate ``dom -> cod`` matrix as a unital *-homomorphism."""
    return StarHomomorphism(dom, cod, nm.as_backend(matrix, dom.backend))


def identity_hom(a: StarAlgebra) -> StarHomomorphism:
    return StarHomomorphism._raw(a, a, nm.eye(a.dim, a.backend))


def unit_inclusion(a: StarAlgebra) -> StarHomomorphism:
    """The unital map C -> A."""
    c = complex_unit_algebra(a.backend)
    return StarHomomorphism._raw(c, a, a.unit.reshape(-1, 1).copy())


def compose_homs(f: StarHomomorphism, g: StarHomomorphism) -> StarHomomorphism:
    """``f o g``."""
    return f.compose(g)


def tensor_maps(f: StarLinearMap, g: StarLinearMap) -> StarLinearMap:
    cls = StarHomomorphism if isinstance(f, StarHomomorphism) and isinstance(g, StarHomomorphism) else StarLinearMap
    return cls._raw(tensor_algebra(f.dom, g.dom), tensor_algebra(f.cod, g.cod), np.kron(f.matrix, g.matrix))


def hom_from_rep_images(dom: StarAlgebra, cod: StarAlgebra, images: Sequence[np.ndarray]) -> StarHomomorphism:
    """Homomorphism determined by represented images of the basis of ``dom``.

    ``images[i]`` is a matrix in the faithful representation of ``cod``; its
    coordinates are recovered by solving against that representation.
    """
    if cod.rep is None:
        raise AttributeError("codomain needs a faithful representation")
    basis = np.array([r.ravel() for r in cod.rep]).T
    targets = np.array([np.asarray(m).ravel() for m in images]).T
    coords, res = nm.lstsq(basis, targets, cod.tol)
    if coords is None or res > 1e-8:
        raise AlgebraMismatch("image lies outside the represented codomain")
    return check_homomorphism(dom, cod, coords)


def conjugation_hom(a: StarAlgebra, u) -> StarHomomorphism:
    """``x -> u x u*`` on an algebra with faithful rep, for a unitary ``u`` in that rep."""
    u = np.asarray(u)
    images = [u @ r @ nm.dagger(u) for r in a.rep]
    return hom_from_rep_images(a, a, images)


def generated_subalgebra(gens: Iterable[Element], tol: ToleranceConfig | None = None) -> tuple[StarAlgebra, StarHomomorphism]:
    """Smallest unital *-subalgebra containing ``gens``, as an abstract algebra plus inclusion."""
    gens = list(gens)
    if not gens:
        raise ValueError("need at least one generator")
    alg = gens[0].algebra
    for g in gens:
        if g.algebra is not alg:
            raise AlgebraMismatch("generators live in different algebras")
    tol = tol or alg.tol
    vecs = [alg.unit] + [g.coords for g in gens] + [alg.apply_star(g.coords) for g in gens]
    span = nm.SpanBasis(vecs, alg.dim, alg.backend, tol)
    for _ in range(alg.dim + 1):
        cols = [span.matrix[:, k] for k in range(span.dim)]
        cand = list(cols)
        cand += [alg.apply_star(c) for c in cols]
        cand += [alg.multiply(x, y) for x in cols for y in cols]
        new = nm.SpanBasis(cand, alg.dim, alg.backend, tol)
        if new.dim == span.dim:
            span = new
            break
        span = new
    w = span.matrix
    m = span.dim
    cols = [w[:, k] for k in range(m)]
    terms: Terms = {}
    for a in range(m):
        for b in range(m):
            coords = span.coords(alg.multiply(cols[a], cols[b]))
            row = [(k, c) for k, c in enumerate(coords) if not _negligible(c, alg.backend, tol)]
            if row:
                terms[(a, b)] = row
    unit = span.coords(alg.unit)
    star_m = nm.zeros((m, m), alg.backend)
    for a in range(m):
        star_m[:, a] = span.coords(alg.apply_star(cols[a]))
    rep = None if alg.rep is None else [alg.represent(c) for c in cols]
    sub = StarAlgebra([f"s{k}" for k in range(m)], terms, unit, star_m, rep, alg.backend, tol)
    inclusion = StarHomomorphism._raw(sub, alg, w)
    return sub, inclusion


def _negligible(c, backend, tol) -> bool:
    if backend == EXACT:
        return c == 0
    return abs(c) <= tol.rank_tol * 10
