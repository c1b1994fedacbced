"""Finite probability spaces, Markov kernels and their duals, and the Born rule."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import numeric as nm
from .algebra import (
    Element,
    StarAlgebra,
    StarLinearMap,
    generated_subalgebra,
    is_normal,
    make_function_algebra,
    tensor_algebra,
)
from .errors import (
    NoFaithfulRep,
    NotNormal,
    NotPositive,
    NotPositiveMap,
    NotUnital,
    ProjectionNotInSubalgebra,
    ShapeMismatch,
)
from .gns import CyclicRepresentation, State, cyclic_isomorphism, monoidal_iso, phys_morphism
from .markov import CpMap, is_completely_positive
from .numeric import DEFAULT_TOL, EXACT, ToleranceConfig


@dataclass
class FiniteProbSpace:
    points: list
    weights: np.ndarray

    def __post_init__(self):
        self.points = [str(p) for p in self.points]
        w = np.asarray(self.weights)
        if w.shape != (len(self.points),):
            raise ShapeMismatch("one weight per point required")
        if not _is_probability_vector(w):
            raise ValueError("weights must be nonnegative and sum to 1")
        self.weights = w

    @classmethod
    def of(cls, points: Sequence, weights: Sequence) -> "FiniteProbSpace":
        return cls(list(points), nm.exact_array(weights))

    @property
    def backend(self) -> str:
        return nm.backend_of(self.weights)

    @property
    def support(self) -> list[int]:
        return [i for i, w in enumerate(self.weights) if w != 0]


def product_space(x: FiniteProbSpace, y: FiniteProbSpace) -> FiniteProbSpace:
    pts = [f"{a}⊗{b}" for a in x.points for b in y.points]
    return FiniteProbSpace(pts, np.kron(x.weights, y.weights))


_FUNCTION_ALGEBRAS: dict[tuple, StarAlgebra] = {}


def function_algebra(points: Sequence, backend: str = EXACT) -> StarAlgebra:
    """Shared C(X) instance per point list, so states and maps agree on identity."""
    key = (tuple(str(p) for p in points), backend)
    if key not in _FUNCTION_ALGEBRAS:
        _FUNCTION_ALGEBRAS[key] = make_function_algebra(key[0], backend)
    return _FUNCTION_ALGEBRAS[key]


def c_of(x: FiniteProbSpace) -> State:
    """The expectation state on C(X)."""
    return State(function_algebra(x.points, x.backend), x.weights.copy())


def l2_representation(x: FiniteProbSpace) -> CyclicRepresentation:
    """L^2(X, mu) restricted to the support: multiplication operators and the constant 1."""
    be = x.backend
    sup = x.support
    k = len(sup)
    gram = nm.zeros((k, k), be)
    for a, i in enumerate(sup):
        gram[a, a] = x.weights[i]
    mats = []
    for i in range(len(x.points)):
        m = nm.zeros((k, k), be)
        if i in sup:
            m[sup.index(i), sup.index(i)] = nm.ONE if be == EXACT else 1.0
        mats.append(m)
    one = nm.as_backend([1] * k, be) if be == EXACT else np.ones(k, dtype=complex)
    return CyclicRepresentation(function_algebra(x.points, be), gram, mats, one)


@dataclass
class L2Report:
    support_size: int
    gns_dim: int
    iso: np.ndarray
    gram: np.ndarray

    @property
    def ok(self) -> bool:
        return self.support_size == self.gns_dim and self.iso.shape == (self.support_size, self.gns_dim)


def l2_compare(x: FiniteProbSpace) -> L2Report:
    state = c_of(x)
    g = state.gns_space
    rep = l2_representation(x)
    iso = cyclic_isomorphism(g, rep)
    if nm.rank(iso) != g.dim:
        raise ValueError("comparison map is not injective")
    return L2Report(len(x.support), g.dim, iso, rep.gram)


def l2_product_compare(x: FiniteProbSpace, y: FiniteProbSpace) -> bool:
    """GNS of the product expectation agrees with the tensor of the factors and with L^2 of the product."""
    joint = State(tensor_algebra(function_algebra(x.points, x.backend), function_algebra(y.points, y.backend)),
                  np.kron(x.weights, y.weights))
    iso = monoidal_iso(c_of(x), c_of(y), joint)
    prod = product_space(x, y)
    rep = l2_representation(prod)
    rep = CyclicRepresentation(joint.algebra, rep.gram, rep.matrices, rep.vector)
    emb = cyclic_isomorphism(joint.gns_space, rep)
    lhs = emb @ iso
    rx, ry = l2_compare(x).iso, l2_compare(y).iso
    return nm.equal(lhs, np.kron(rx, ry), 0.0 if x.backend == EXACT else 1e-9)


# ---------------------------------------------------------------- kernels


def _point_labels(x) -> list[str]:
    if isinstance(x, FiniteProbSpace):
        return list(x.points)
    return [str(p) for p in x]


def _nonnegative(v, exact: bool) -> bool:
    if exact:
        return isinstance(v, Fraction) and v >= 0
    return abs(v.imag) <= 1e-12 and v.real >= -1e-12


def _is_probability_vector(row) -> bool:
    exact = nm.backend_of(row) == EXACT
    if not all(_nonnegative(v, exact) for v in row):
        return False
    if exact:
        return sum(row, nm.ZERO) == 1
    return abs(row.sum() - 1) <= 1e-12


@dataclass
class MarkovKernel:
    """Row-stochastic matrix; rows are indexed by ``dom`` points, columns by ``cod`` points."""

    dom: list
    cod: list
    matrix: np.ndarray

    def __post_init__(self):
        self.dom = _point_labels(self.dom)
        self.cod = _point_labels(self.cod)
        m = np.asarray(self.matrix)
        if m.shape != (len(self.dom), len(self.cod)):
            raise ShapeMismatch(f"kernel matrix has shape {m.shape}")
        for r, row in enumerate(m):
            if not _is_probability_vector(row):
                raise ValueError(f"row {r} is not a probability vector")
        self.matrix = m

    @classmethod
    def of(cls, dom, cod, matrix) -> "MarkovKernel":
        return cls(list(dom), list(cod), nm.exact_array(matrix))

    @property
    def backend(self) -> str:
        return nm.backend_of(self.matrix)


def deterministic_kernel(dom: Sequence, cod: Sequence, fn: Sequence[int], backend: str = EXACT) -> MarkovKernel:
    m = nm.zeros((len(dom), len(cod)), backend)
    for x, y in enumerate(fn):
        m[x, y] = nm.ONE if backend == EXACT else 1.0
    return MarkovKernel(list(dom), list(cod), m)


def kernel_to_cp(f: MarkovKernel) -> CpMap:
    """Dual map ``C(Y) -> C(X)``, ``Phi(g)(x) = sum_y F[x, y] g(y)``.

    On indicator coordinates the matrix of ``Phi`` is the kernel matrix itself
    (column ``y`` is the image of ``1_y``).
    """
    be = f.backend
    phi_map = StarLinearMap(function_algebra(f.cod, be), function_algebra(f.dom, be), f.matrix.copy())
    check = is_completely_positive(phi_map)
    return check.cp_map


def cp_to_kernel(phi_map) -> MarkovKernel:
    """Inverse of :func:`kernel_to_cp` for unital positive maps between function algebras."""
    pm = phi_map.underlying if isinstance(phi_map, CpMap) else phi_map
    m = pm.matrix
    if not pm.cod.close(m @ pm.dom.unit, pm.cod.unit):
        raise NotUnital("map does not preserve the unit", m @ pm.dom.unit)
    exact = pm.backend == EXACT
    for x in range(m.shape[0]):
        for y in range(m.shape[1]):
            if not _nonnegative(m[x, y], exact):
                raise NotPositiveMap(f"entry ({x}, {y}) is not a nonnegative real", (x, y))
    return MarkovKernel(pm.cod.labels, pm.dom.labels, m.copy())


def kleisli_compose(f: MarkovKernel, g: MarkovKernel) -> MarkovKernel:
    """``g o f`` for ``f: X -> Y`` and ``g: Y -> Z``."""
    if f.cod != g.dom:
        raise ShapeMismatch("codomain of f differs from domain of g")
    return MarkovKernel(f.dom, g.cod, f.matrix @ g.matrix)


def kernel_tensor(f: MarkovKernel, g: MarkovKernel) -> MarkovKernel:
    dom = [f"{a}⊗{b}" for a in f.dom for b in g.dom]
    cod = [f"{a}⊗{b}" for a in f.cod for b in g.cod]
    return MarkovKernel(dom, cod, np.kron(f.matrix, g.matrix))


def pushforward(x: FiniteProbSpace, f: MarkovKernel) -> FiniteProbSpace:
    return FiniteProbSpace(f.cod, x.weights @ f.matrix)


def row_averaging_l2(x: FiniteProbSpace, f: MarkovKernel) -> np.ndarray:
    """The L^2-level map ``f -> (x -> sum_y F[x, y] f(y))`` restricted to supports."""
    nu = pushforward(x, f)
    return f.matrix[np.ix_(x.support, nu.support)]


# ---------------------------------------------------------------- Born rule


@dataclass
class SpectralDistribution:
    entries: list  # (eigenvalue, weight) pairs
    total: float
    projections: list  # algebra coordinates of each spectral projection

    def weight_at(self, lam, radius: float = DEFAULT_TOL.spec_tol) -> float:
        lam = complex(lam)
        for (mu, w) in self.entries:
            if abs(mu - lam) <= radius * max(1.0, abs(lam)):
                return w
        return 0.0

    def normalized(self) -> "SpectralDistribution":
        if self.total == 0:
            return self
        return SpectralDistribution([(mu, w / self.total) for mu, w in self.entries], 1.0, self.projections)

    def as_dict(self) -> dict:
        return {_eig_key(mu): w for mu, w in self.entries}


def _eig_key(mu: complex):
    mu = complex(mu)
    re = round(mu.real, 12) + 0.0
    im = round(mu.imag, 12) + 0.0
    return re if im == 0 else complex(re, im)


def _float_state(phi: State) -> State:
    return phi if phi.backend != EXACT else phi.to_float()


def born_distribution(a: Element, phi: State, tol: ToleranceConfig | None = None,
                      normalize: bool = False) -> SpectralDistribution:
    """Distribution of the normal observable ``a`` in the positive state ``phi``."""
    alg = a.algebra
    tol = tol or alg.tol
    if alg.rep is None:
        raise NoFaithfulRep("the Born rule needs a faithful representation")
    if not is_normal(a):
        raise NotNormal("observable is not normal")
    if not phi.positivity:
        raise NotPositive("state is not positive", np.conjugate(phi.positivity.witness))
    falg = alg.to_float()
    fa = Element(falg, nm.to_float(a.coords))
    fphi = nm.to_float(phi.functional)
    clusters = nm.spectral_clusters(falg.represent(fa.coords), tol)
    sub, inc = generated_subalgebra([fa], tol)
    basis = np.array([falg.represent(inc.matrix[:, k]).ravel() for k in range(sub.dim)]).T
    entries, projs = [], []
    total = 0.0
    for lam, proj in clusters:
        coef, res = nm.lstsq(basis, proj.ravel(), tol)
        if res > 1e-8:
            raise ProjectionNotInSubalgebra(f"spectral projection at {lam} is not in the generated subalgebra", lam)
        p_coords = inc.matrix @ coef
        w = float((fphi @ p_coords).real)
        if w < -tol.psd_tol * max(1.0, abs(complex(phi.normalization))):
            raise NotPositive("negative Born weight", lam)
        w = max(w, 0.0)
        entries.append((lam, w))
        projs.append(p_coords)
        total += w
    dist = SpectralDistribution(entries, total, projs)
    return dist.normalized() if normalize else dist


@dataclass(frozen=True)
class EELinkResult:
    eigenvector: bool
    almost_everywhere: bool
    probability_one: bool

    @property
    def consistent(self) -> bool:
        return self.eigenvector == self.almost_everywhere == self.probability_one

    def as_tuple(self) -> tuple[bool, bool, bool]:
        return (self.eigenvector, self.almost_everywhere, self.probability_one)


def ee_link_check(a: Element, phi: State, lam, tol: ToleranceConfig | None = None) -> EELinkResult:
    """Evaluate ``a Omega = lam Omega``, ``a = lam`` almost surely, and ``P(a = lam) = phi(1)``."""
    alg = a.algebra
    tol = tol or alg.tol
    dist = born_distribution(a, phi, tol)
    g = phi.gns_space
    exact_lam = alg.backend == EXACT and not isinstance(lam, (float, complex))
    if exact_lam:
        lam_s = nm.to_exact_scalar(lam)
        lhs = g.action_of(a.coords) @ g.omega
        eig = g.close(lhs, lam_s * g.omega)
    else:
        fg = _float_state(phi).gns_space
        lhs = fg.action_of(nm.to_float(a.coords)) @ fg.omega
        diff = lhs - complex(lam) * fg.omega
        norm2 = abs(nm.form(fg.gram, diff, diff))
        eig = norm2 <= tol.psd_tol * max(1.0, abs(complex(phi.normalization)))
    scale = max(1.0, max((abs(mu) for mu, _ in dist.entries), default=1.0))
    radius = tol.spec_tol * scale
    mass_tol = 1e-9 * max(1.0, dist.total)
    ae = all(abs(mu - complex(lam)) <= radius for mu, w in dist.entries if w > mass_tol)
    total = float(complex(phi.normalization).real)
    at = sum(w for mu, w in dist.entries if abs(mu - complex(lam)) <= radius)
    p_one = abs(at - total) <= mass_tol
    return EELinkResult(bool(eig), bool(ae), bool(p_one))


@dataclass
class DefiniteValue:
    value: object
    character: np.ndarray  # values of the normalized restricted state on the subalgebra basis
    subalgebra: StarAlgebra
    inclusion_admissible: bool
    eigenvector_verified: bool | None


def has_definite_value(a: Element, phi: State) -> DefiniteValue | None:
    """Return the value of ``a`` when ``phi`` restricted to ``<a>`` is a character."""
    alg = a.algebra
    if not is_normal(a):
        raise NotNormal("observable is not normal")
    n = phi.normalization
    if n == 0:
        return None
    sub, inc = generated_subalgebra([a])
    chi = (inc.matrix.T @ phi.functional) / n
    for i in range(sub.dim):
        for j in range(sub.dim):
            prod = sub.multiply(sub.basis_vector(i), sub.basis_vector(j))
            if not sub.close(np.array([chi @ prod]), np.array([chi[i] * chi[j]])):
                return None
    value = phi(a.coords) / n
    m = phys_morphism(inc, phi)
    verified = None
    if m.admissible:
        g = phi.gns_space
        verified = g.close(g.action_of(a.coords) @ g.omega, value * g.omega)
    return DefiniteValue(value, chi, sub, bool(m.admissible), verified)
