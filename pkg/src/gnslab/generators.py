"""Seeded random instances: rationals, unitaries, states, homomorphism chains, kernels."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import numeric as nm
from .algebra import (
    StarAlgebra,
    StarHomomorphism,
    check_homomorphism,
    conjugation_hom,
    hom_from_rep_images,
    make_group_algebra,
    make_matrix_algebra,
    tensor_algebra,
)
from .gns import State, density_state
from .numeric import EXACT, FLOAT
from .probability import FiniteProbSpace, MarkovKernel, function_algebra

# ---------------------------------------------------------------- scalars and matrices


def rand_frac(rng, num: int = 3, den: int = 3) -> Fraction:
    return Fraction(int(rng.integers(-num, num + 1)), int(rng.integers(1, den + 1)))


def rand_gauss(rng, num: int = 3, den: int = 3):
    im = rand_frac(rng, num, den) if rng.random() < 0.6 else 0
    return nm.gauss(rand_frac(rng, num, den), im)


def rand_exact_vector(rng, n: int, zero_prob: float = 0.0) -> np.ndarray:
    while True:
        v = [nm.ZERO if rng.random() < zero_prob else rand_gauss(rng) for _ in range(n)]
        if any(x != 0 for x in v):
            return nm.exact_array(v)


def rand_float_vector(rng, n: int, zero_prob: float = 0.0) -> np.ndarray:
    while True:
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        v[rng.random(n) < zero_prob] = 0
        if np.any(v != 0):
            return v


def cayley_unitary(rng, n: int) -> np.ndarray:
    """Exact unitary ``(1 - K)(1 + K)^{-1}`` from a random skew-Hermitian ``K`` over Q(i)."""
    a = nm.exact_array([[rand_gauss(rng, 2, 2) for _ in range(n)] for _ in range(n)])
    k = a - nm.dagger(a)
    one = nm.eye(n, EXACT)
    return (one - k) @ nm.inverse(one + k)


def haar_unitary(rng, n: int) -> np.ndarray:
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def exact_projection(rng, n: int, rank: int) -> np.ndarray:
    u = cayley_unitary(rng, n)
    cols = u[:, :rank]
    return cols @ nm.dagger(cols)


def random_normal_matrix(rng, n: int, degenerate: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``U D U*`` with complex eigenvalues; returns (matrix, eigenvalues, U)."""
    u = haar_unitary(rng, n)
    if degenerate:
        pool = np.round(rng.normal(size=2) + 1j * rng.normal(size=2), 3)
        d = pool[rng.integers(0, 2, size=n)]
    else:
        d = np.round(rng.normal(size=n) + 1j * rng.normal(size=n) * (rng.random() < 0.5), 3)
    return u @ np.diag(d) @ u.conj().T, d, u


# ---------------------------------------------------------------- algebras


@lru_cache(maxsize=None)
def matrix_algebra(n: int, backend: str = EXACT) -> StarAlgebra:
    return make_matrix_algebra(n, backend)


def points(n: int) -> list[str]:
    return [f"x{i}" for i in range(n)]


def fn_algebra(n: int, backend: str = EXACT) -> StarAlgebra:
    return function_algebra(points(n), backend)


def cyclic_table(n: int) -> list[list[int]]:
    return [[(i + j) % n for j in range(n)] for i in range(n)]


def s3_table() -> tuple[list[list[int]], list[tuple[int, ...]]]:
    """Table of S_3 with ``table[g][h]`` the index of ``g o h``; also the permutations."""
    perms = list(itertools.permutations(range(3)))
    idx = {p: i for i, p in enumerate(perms)}
    table = [[idx[tuple(p[q[i]] for i in range(3))] for q in perms] for p in perms]
    return table, perms


def klein_table() -> list[list[int]]:
    return [[i ^ j for j in range(4)] for i in range(4)]


@lru_cache(maxsize=None)
def _group_algebra(key: tuple) -> StarAlgebra:
    return make_group_algebra([list(r) for r in key])


def group_algebra(table) -> StarAlgebra:
    return _group_algebra(tuple(tuple(r) for r in table))


def _sign_s3() -> list[int]:
    _, perms = s3_table()
    out = []
    for p in perms:
        inversions = sum(1 for i in range(3) for j in range(i + 1, 3) if p[i] > p[j])
        out.append(inversions % 2)
    return out


def group_homs() -> list[tuple[list, list, list[int]]]:
    """A fixed list of (source table, target table, map) group homomorphisms."""
    s3, _ = s3_table()
    out = [
        (cyclic_table(6), cyclic_table(3), [k % 3 for k in range(6)]),
        (cyclic_table(6), cyclic_table(2), [k % 2 for k in range(6)]),
        (cyclic_table(4), cyclic_table(2), [k % 2 for k in range(4)]),
        (s3, cyclic_table(2), _sign_s3()),
        (cyclic_table(3), cyclic_table(3), [(2 * k) % 3 for k in range(3)]),
        (klein_table(), cyclic_table(2), [k & 1 for k in range(4)]),
        (cyclic_table(2), cyclic_table(1), [0, 0]),
    ]
    return out


# ---------------------------------------------------------------- homomorphisms


def pullback_hom(dom_n: int, cod_n: int, fn, backend: str = EXACT) -> StarHomomorphism:
    """``C(Y) -> C(X)``, ``g -> g o fn`` with ``fn: X -> Y`` given as a list (|X| = cod_n)."""
    m = nm.zeros((cod_n, dom_n), backend)
    for x, y in enumerate(fn):
        m[x, y] = nm.scalar(1, backend)
    return check_homomorphism(fn_algebra(dom_n, backend), fn_algebra(cod_n, backend), m)


def random_pullback(rng, dom_n: int, cod_n: int) -> StarHomomorphism:
    return pullback_hom(dom_n, cod_n, [int(rng.integers(0, dom_n)) for _ in range(cod_n)])


def projection_valued_hom(rng, dom_n: int, n: int) -> StarHomomorphism:
    """``C(Y) -> M_n`` sending indicators to orthogonal projections summing to 1."""
    u = cayley_unitary(rng, n)
    slots = [int(rng.integers(0, dom_n)) for _ in range(n)]
    images = []
    for y in range(dom_n):
        d = nm.zeros((n, n), EXACT)
        for k, s in enumerate(slots):
            if s == y:
                d[k, k] = nm.ONE
        images.append(u @ d @ nm.dagger(u))
    return hom_from_rep_images(fn_algebra(dom_n), matrix_algebra(n), images)


def random_inner_automorphism(rng, n: int) -> StarHomomorphism:
    return conjugation_hom(matrix_algebra(n), cayley_unitary(rng, n))


def group_inner_automorphism(table, h: int) -> StarHomomorphism:
    alg = group_algebra(table)
    n = len(table)
    e = _identity(table)
    inv = [next(j for j in range(n) if table[i][j] == e) for i in range(n)]
    m = nm.zeros((n, n), EXACT)
    for g in range(n):
        m[table[table[h][g]][inv[h]], g] = nm.ONE
    return check_homomorphism(alg, alg, m)


def _identity(table) -> int:
    n = len(table)
    return next(e for e in range(n) if all(table[e][j] == j for j in range(n)))


def induced_group_hom(src, tgt, fn) -> StarHomomorphism:
    m = nm.zeros((len(tgt), len(src)), EXACT)
    for g, h in enumerate(fn):
        m[h, g] = nm.ONE
    return check_homomorphism(group_algebra(src), group_algebra(tgt), m)


def regular_rep_hom(rng, table) -> StarHomomorphism:
    """``C[G] -> M_|G|`` via the left regular representation rotated by an exact unitary."""
    alg = group_algebra(table)
    n = len(table)
    u = cayley_unitary(rng, n)
    return hom_from_rep_images(alg, matrix_algebra(n), [u @ r @ nm.dagger(u) for r in alg.rep])


def tensor_hom(f: StarHomomorphism, g: StarHomomorphism) -> StarHomomorphism:
    return check_homomorphism(tensor_algebra(f.dom, g.dom), tensor_algebra(f.cod, g.cod), np.kron(f.matrix, g.matrix))


@dataclass
class Chain:
    """Composable homomorphisms ``C --inner--> B --outer--> A`` with a state on ``A``."""

    kind: str
    outer: StarHomomorphism
    inner: StarHomomorphism
    state: State


def random_positive_state(rng, alg: StarAlgebra, zero_prob: float = 0.4, max_vectors: int = 2) -> State:
    k = int(rng.integers(1, max_vectors + 1))
    return density_state(alg, [rand_exact_vector(rng, alg.rep_dim, zero_prob) for _ in range(k)])


def _chain_functions(rng, max_points: int = 5):
    nx, ny, nz = (int(rng.integers(1, max_points + 1)) for _ in range(3))
    return random_pullback(rng, ny, nx), random_pullback(rng, nz, ny)


def _chain_projections(rng):
    n = int(rng.integers(2, 4))
    ny, nz = int(rng.integers(1, 5)), int(rng.integers(1, 5))
    return projection_valued_hom(rng, ny, n), random_pullback(rng, nz, ny)


def _chain_matrix(rng):
    n = int(rng.integers(1, 4))
    if rng.random() < 0.5:
        return random_inner_automorphism(rng, n), random_inner_automorphism(rng, n)
    ny = int(rng.integers(1, 4))
    return random_inner_automorphism(rng, n), projection_valued_hom(rng, ny, n)


def _chain_group(rng):
    homs = group_homs()
    src, tgt, fn = homs[int(rng.integers(0, len(homs)))]
    if len(tgt) <= 3 and rng.random() < 0.5:
        return regular_rep_hom(rng, tgt), induced_group_hom(src, tgt, fn)
    outer = group_inner_automorphism(tgt, int(rng.integers(0, len(tgt))))
    return outer, induced_group_hom(src, tgt, fn)


def _chain_inner_group(rng):
    table, _ = s3_table()
    return (group_inner_automorphism(table, int(rng.integers(0, 6))),
            group_inner_automorphism(table, int(rng.integers(0, 6))))


def _chain_tensor(rng):
    f1, g1 = _chain_functions(rng, max_points=2)
    n = int(rng.integers(1, 3))
    f2, g2 = random_inner_automorphism(rng, n), random_inner_automorphism(rng, n)
    return tensor_hom(f1, f2), tensor_hom(g1, g2)


CHAIN_KINDS = {
    "functions": _chain_functions,
    "projections": _chain_projections,
    "matrix": _chain_matrix,
    "group": _chain_group,
    "group-inner": _chain_inner_group,
    "tensor": _chain_tensor,
}


def random_chain(rng, kind: str | None = None) -> Chain:
    names = sorted(CHAIN_KINDS)
    kind = kind or names[int(rng.integers(0, len(names)))]
    outer, inner = CHAIN_KINDS[kind](rng)
    return Chain(kind, outer, inner, random_positive_state(rng, outer.cod))


def random_small_hom(rng) -> StarHomomorphism:
    """Single homomorphism between algebras of dimension at most 4."""
    pick = int(rng.integers(0, 4))
    if pick == 0:
        return random_pullback(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
    if pick == 1:
        return random_inner_automorphism(rng, 2)
    if pick == 2:
        return projection_valued_hom(rng, int(rng.integers(1, 4)), 2)
    homs = [h for h in group_homs() if len(h[0]) <= 4]
    src, tgt, fn = homs[int(rng.integers(0, len(homs)))]
    return induced_group_hom(src, tgt, fn)


# ---------------------------------------------------------------- probability


def rand_weights(rng, n: int, zero_prob: float = 0.3) -> list[Fraction]:
    while True:
        w = [0 if rng.random() < zero_prob else int(rng.integers(1, 5)) for _ in range(n)]
        if sum(w):
            total = sum(w)
            return [Fraction(x, total) for x in w]


def random_prob_space(rng, n: int, zero_prob: float = 0.3) -> FiniteProbSpace:
    return FiniteProbSpace.of(points(n), rand_weights(rng, n, zero_prob))


def random_kernel(rng, n: int, m: int, zero_prob: float = 0.4) -> MarkovKernel:
    return MarkovKernel.of(points(n), points(m), [rand_weights(rng, m, zero_prob) for _ in range(n)])


def random_kraus(rng, dom_n: int, cod_n: int, rank: int, backend: str) -> list[np.ndarray]:
    """Kraus operators ``K_j`` of shape ``(dom_n, cod_n)`` for ``a -> sum K_j* a K_j``."""
    if backend == EXACT:
        return [nm.exact_array([[rand_gauss(rng, 2, 2) for _ in range(cod_n)] for _ in range(dom_n)])
                for _ in range(rank)]
    return [rng.normal(size=(dom_n, cod_n)) + 1j * rng.normal(size=(dom_n, cod_n)) for _ in range(rank)]


def backend_vector(rng, n: int, backend: str, zero_prob: float = 0.0) -> np.ndarray:
    if backend == FLOAT:
        return rand_float_vector(rng, n, zero_prob)
    return rand_exact_vector(rng, n, zero_prob)
