"""Scalars, dense matrices and the linear-algebra kernels shared by every module.

Two backends coexist:

* ``exact``: numpy ``object`` arrays whose entries are :class:`fractions.Fraction`
  or :class:`GaussRat` (Gaussian rationals, i.e. elements of Q(i)).
* ``float``: numpy ``complex128`` arrays.

The backend of an array is read off its dtype. Functions that take several arrays
refuse to mix backends; :func:`to_float` is the only (one-way) bridge.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import BackendMismatch, DegenerateForm, NotHermitian, NotNormal

EXACT = "exact"
FLOAT = "float"


class GaussRat:
    """Gaussian rational ``re + im*i`` with exact Fraction parts.

    Arithmetic results with a vanishing imaginary part collapse to a plain
    Fraction, so real computations never pay for the complex wrapper.
    """

    __slots__ = ("re", "im")

    def __init__(self, re_part, im_part=0):
        self.re = Fraction(re_part)
        self.im = Fraction(im_part)

    @staticmethod
    def _parts(x):
        if isinstance(x, GaussRat):
            return x.re, x.im
        if isinstance(x, Rational):
            return x, 0
        return None

    def __add__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return gauss(self.re + p[0], self.im + p[1])

    __radd__ = __add__

    def __sub__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return gauss(self.re - p[0], self.im - p[1])

    def __rsub__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return gauss(p[0] - self.re, p[1] - self.im)

    def __mul__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        a, b = self.re, self.im
        c, d = p
        if d == 0:
            return gauss(a * c, b * c)
        return gauss(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return self * _inverse(p[0], p[1])

    def __rtruediv__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return gauss(*p) * _inverse(self.re, self.im)

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __pos__(self):
        return self

    def conjugate(self):
        return GaussRat(self.re, -self.im)

    @property
    def real(self):
        return self.re

    @property
    def imag(self):
        return self.im

    def __eq__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return self.re == p[0] and self.im == p[1]

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussRat({self.re}, {self.im})"

    def __str__(self):
        return format_scalar(self)


def gauss(re_part, im_part=0):
    """Build an exact scalar, collapsing to Fraction when the imaginary part is 0."""
    if im_part == 0:
        return Fraction(re_part)
    return GaussRat(re_part, im_part)


def _inverse(a, b):
    if a == 0 and b == 0:
        raise ZeroDivisionError("division by exact zero")
    n = a * a + b * b
    return gauss(Fraction(a) / n, -Fraction(b) / n)


ZERO = Fraction(0)
ONE = Fraction(1)
I_UNIT = GaussRat(0, 1)


def exact_inv(x):
    if isinstance(x, GaussRat):
        return _inverse(x.re, x.im)
    return ONE / x


_TERM = re.compile(r"[+-]?[^+-]+")


def parse_scalar(text: str):
    """Parse ``"a/b+c/d i"`` style strings into an exact scalar."""
    s = "".join(str(text).split())
    if not s:
        raise ValueError("empty scalar")
    re_part, im_part = Fraction(0), Fraction(0)
    pos = 0
    for m in _TERM.finditer(s):
        if m.start() != pos:
            raise ValueError(f"malformed scalar {text!r}")
        pos = m.end()
        term = m.group()
        if term.endswith("i"):
            coef = term[:-1].rstrip("*")
            if coef in ("", "+", "-"):
                coef += "1"
            im_part += Fraction(coef)
        else:
            re_part += Fraction(term)
    if pos != len(s):
        raise ValueError(f"malformed scalar {text!r}")
    return gauss(re_part, im_part)


def format_scalar(x) -> str:
    if isinstance(x, GaussRat):
        re_part, im_part = x.re, x.im
    else:
        re_part, im_part = Fraction(x), Fraction(0)
    if im_part == 0:
        return str(re_part)
    im_txt = f"{im_part} i"
    if re_part == 0:
        return im_txt
    sign = "-" if im_part < 0 else "+"
    return f"{re_part}{sign}{abs(im_part)} i"


def to_exact_scalar(x):
    if isinstance(x, (GaussRat, Fraction)):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise BackendMismatch("booleans are not scalars")
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, str):
        return parse_scalar(x)
    raise BackendMismatch(f"cannot use {type(x).__name__} {x!r} as an exact scalar")


# ---------------------------------------------------------------- arrays


def backend_of(a) -> str:
    a = np.asarray(a)
    return EXACT if a.dtype == object else FLOAT


def common_backend(*arrays) -> str:
    kinds = {backend_of(a) for a in arrays if a is not None}
    if len(kinds) > 1:
        raise BackendMismatch("exact and float data mixed in one computation")
    return kinds.pop() if kinds else EXACT


def exact_array(data) -> np.ndarray:
    """Convert nested data (ints, Fractions, GaussRats, strings) to an exact array."""
    arr = np.array(data, dtype=object)
    flat = [to_exact_scalar(x) for x in arr.ravel()]
    out = np.empty(arr.shape, dtype=object)
    out.ravel()[:] = flat if flat else []
    return out


def float_array(data) -> np.ndarray:
    arr = np.asarray(data)
    if arr.dtype == object:
        raise BackendMismatch("exact data passed where float data was expected; use to_float")
    return arr.astype(np.complex128)


def to_float(a) -> np.ndarray:
    """Explicit one-way conversion to the float backend."""
    a = np.asarray(a)
    if a.dtype != object:
        return a.astype(np.complex128)
    out = np.empty(a.shape, dtype=np.complex128)
    out.ravel()[:] = [complex(x) for x in a.ravel()]
    return out


def as_backend(data, backend: str) -> np.ndarray:
    return exact_array(data) if backend == EXACT else float_array(data)


def zeros(shape, backend: str) -> np.ndarray:
    if backend == FLOAT:
        return np.zeros(shape, dtype=np.complex128)
    out = np.empty(shape, dtype=object)
    out.fill(ZERO)
    return out


def eye(n: int, backend: str) -> np.ndarray:
    out = zeros((n, n), backend)
    for i in range(n):
        out[i, i] = ONE if backend == EXACT else 1.0
    return out


def unit_vector(n: int, k: int, backend: str) -> np.ndarray:
    v = zeros(n, backend)
    v[k] = ONE if backend == EXACT else 1.0
    return v


def scalar(x, backend: str):
    if backend == EXACT:
        return to_exact_scalar(x)
    if isinstance(x, (GaussRat, Fraction)):
        return complex(x)
    return complex(x)


def conj(a):
    return np.conjugate(a)


def dagger(a):
    return np.conjugate(np.asarray(a)).T


def form(g, x, y):
    """Sesquilinear form ``<x, y>_G = sum_ij x_i conj(y_j) G_ij``."""
    return x @ g @ np.conjugate(y)


@dataclass(frozen=True)
class ToleranceConfig:
    rank_tol: float = 1e-10
    psd_tol: float = 1e-9
    spec_tol: float = 1e-8

    def __post_init__(self):
        for name in ("rank_tol", "psd_tol", "spec_tol"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @classmethod
    def uniform(cls, tol: float) -> "ToleranceConfig":
        return cls(tol, tol, tol)


DEFAULT_TOL = ToleranceConfig()


def max_abs(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    if a.dtype == object:
        return max(abs(complex(x)) for x in a.ravel())
    return float(np.max(np.abs(a)))


def residual(a, b) -> float:
    """Max-abs entrywise difference; exactly 0.0 for equal exact arrays."""
    common_backend(a, b)
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return float("inf")
    if a.dtype == object and all(x == y for x, y in zip(a.ravel(), b.ravel())):
        return 0.0
    return max_abs(a - b)


def is_zero(a, tol: float = 0.0) -> bool:
    a = np.asarray(a)
    if a.dtype == object:
        return all(x == 0 for x in a.ravel())
    return a.size == 0 or float(np.max(np.abs(a))) <= tol


def equal(a, b, tol: float = 0.0) -> bool:
    """Exact equality on the exact backend, max-abs within ``tol`` on floats."""
    common_backend(a, b)
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    if a.dtype == object:
        return all(x == y for x, y in zip(a.ravel(), b.ravel()))
    return a.size == 0 or float(np.max(np.abs(a - b))) <= tol


def _scaled(tol: float, a) -> float:
    return tol * max(1.0, max_abs(a))


# ---------------------------------------------------------------- exact elimination


def _rref_rows(rows: list[list], ncols: int) -> tuple[list[list], list[int]]:
    rows = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    nrows = len(rows)
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = exact_inv(rows[r][c])
        rows[r] = [x * inv if x != 0 else x for x in rows[r]]
        prow = rows[r]
        for i in range(nrows):
            f = rows[i][c]
            if i != r and f != 0:
                rows[i] = [a - f * b if b != 0 else a for a, b in zip(rows[i], prow)]
        pivots.append(c)
        r += 1
    return rows, pivots


def rref(m) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of an exact matrix, with pivot columns."""
    m = np.asarray(m)
    rows, pivots = _rref_rows(m.tolist(), m.shape[1])
    out = zeros(m.shape, EXACT)
    for i, row in enumerate(rows):
        out[i, :] = row
    return out, pivots


def _float_svd(m):
    m = np.asarray(m, dtype=np.complex128)
    if m.size == 0:
        return np.zeros((m.shape[0], 0)), np.zeros(0), np.eye(m.shape[1], dtype=np.complex128)
    return np.linalg.svd(m)


def rank(m, tol: ToleranceConfig = DEFAULT_TOL) -> int:
    m = np.asarray(m)
    if m.size == 0:
        return 0
    if m.dtype == object:
        return len(rref(m)[1])
    s = np.linalg.svd(m.astype(np.complex128), compute_uv=False)
    return int(np.sum(s > tol.rank_tol * s[0])) if s.size and s[0] > 0 else 0


def kernel_basis(m, tol: ToleranceConfig = DEFAULT_TOL) -> list[np.ndarray]:
    """Basis of the right null space ``{x : m x = 0}``."""
    m = np.asarray(m)
    ncols = m.shape[1]
    if m.dtype == object:
        rows, pivots = _rref_rows(m.tolist(), ncols)
        basis = []
        for j in range(ncols):
            if j in pivots:
                continue
            x = zeros(ncols, EXACT)
            x[j] = ONE
            for k, p in enumerate(pivots):
                x[p] = -rows[k][j]
            basis.append(x)
        return basis
    if m.shape[0] == 0:
        return [row for row in np.eye(ncols, dtype=np.complex128)]
    _, s, vh = np.linalg.svd(m.astype(np.complex128))
    r = int(np.sum(s > tol.rank_tol * s[0])) if s.size and s[0] > 0 else 0
    return [vh[k].conj() for k in range(r, ncols)]


def independent_columns(m, tol: ToleranceConfig = DEFAULT_TOL) -> list[int]:
    """Indices of the leftmost maximal set of linearly independent columns."""
    m = np.asarray(m)
    if m.size == 0:
        return []
    if m.dtype == object:
        return rref(m)[1]
    m = m.astype(np.complex128)
    scale = np.linalg.norm(m, 2)
    if scale == 0:
        return []
    chosen: list[int] = []
    q = np.zeros((m.shape[0], 0), dtype=np.complex128)
    for j in range(m.shape[1]):
        v = m[:, j] - q @ (q.conj().T @ m[:, j])
        v = v - q @ (q.conj().T @ v)
        nv = np.linalg.norm(v)
        if nv > tol.rank_tol * scale * 10:
            chosen.append(j)
            q = np.column_stack([q, v / nv])
    return chosen


def inverse(m, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Inverse of a square matrix; raises DegenerateForm when singular."""
    m = np.asarray(m)
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValueError("inverse needs a square matrix")
    if m.dtype == object:
        aug = [list(row) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(m.tolist())]
        rows, pivots = _rref_rows(aug, 2 * n)
        if len(pivots) < n or pivots[:n] != list(range(n)):
            raise DegenerateForm("singular matrix")
        out = zeros((n, n), EXACT)
        for i in range(n):
            out[i, :] = rows[i][n:]
        return out
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    if rank(m, tol) < n:
        raise DegenerateForm("singular matrix")
    return np.linalg.inv(m.astype(np.complex128))


def solve(a, b, tol: ToleranceConfig = DEFAULT_TOL):
    """Solve ``a x = b`` for square nonsingular ``a``."""
    return inverse(a, tol) @ b


def lstsq(a, b, tol: ToleranceConfig = DEFAULT_TOL):
    """Coordinates of ``b`` in the column span of ``a`` (exact when possible).

    Returns ``(x, residual)``; in exact mode the residual is 0.0 when ``b`` is in
    the span and ``inf`` otherwise.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.dtype == object:
        common_backend(a, b)
        vec = b.ndim == 1
        bb = b.reshape(-1, 1) if vec else b
        aug = [list(ra) + list(rb) for ra, rb in zip(a.tolist(), bb.tolist())]
        k = a.shape[1]
        rows, pivots = _rref_rows(aug, k + bb.shape[1])
        if any(p >= k for p in pivots):
            return None, float("inf")
        x = zeros((k, bb.shape[1]), EXACT)
        for r, p in enumerate(pivots):
            x[p, :] = rows[r][k:]
        return (x[:, 0] if vec else x), 0.0
    x, *_ = np.linalg.lstsq(a.astype(np.complex128), b.astype(np.complex128), rcond=None)
    return x, max_abs(a @ x - b)


class SpanBasis:
    """Canonical basis (as columns) of the span of a family of vectors.

    Exact: columns are the nonzero rows of the RREF, so coordinates of a vector
    in the span are read off at the pivot positions. Float: orthonormal columns
    from the SVD.
    """

    def __init__(self, vectors, n: int, backend: str, tol: ToleranceConfig = DEFAULT_TOL):
        self.n = n
        self.backend = backend
        self.tol = tol
        vecs = [np.asarray(v) for v in vectors]
        if backend == EXACT:
            if vecs:
                rows, pivots = _rref_rows([list(v) for v in vecs], n)
                rows = rows[: len(pivots)]
            else:
                rows, pivots = [], []
            self.pivots = pivots
            self.matrix = zeros((n, len(pivots)), EXACT)
            for k, row in enumerate(rows):
                self.matrix[:, k] = row
        else:
            self.pivots = None
            if vecs:
                u, s, _ = np.linalg.svd(np.array(vecs, dtype=np.complex128).T, full_matrices=False)
                r = int(np.sum(s > tol.rank_tol * s[0])) if s.size and s[0] > 0 else 0
                self.matrix = u[:, :r]
            else:
                self.matrix = np.zeros((n, 0), dtype=np.complex128)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def coords(self, v) -> np.ndarray:
        """Coordinates of ``v`` assuming it lies in the span."""
        v = np.asarray(v)
        if self.backend == EXACT:
            return exact_array([v[p] for p in self.pivots]) if self.pivots else zeros(0, EXACT)
        return self.matrix.conj().T @ v

    def contains(self, v) -> bool:
        v = np.asarray(v)
        back = self.matrix @ self.coords(v) if self.dim else zeros(self.n, self.backend)
        return equal(back, v, self.tol.rank_tol * max(1.0, max_abs(v)) * 10)


# ---------------------------------------------------------------- positivity


@dataclass(frozen=True)
class PsdCertificate:
    psd: bool
    witness: np.ndarray | None = None
    min_eigenvalue: float | None = None
    pivots: int | None = None  # number of positive pivots, equal to the rank when psd

    def __bool__(self):
        return self.psd


def _check_hermitian(g, tol: ToleranceConfig):
    g = np.asarray(g)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise NotHermitian("matrix is not square")
    if g.dtype == object:
        if not bool(np.all(g == dagger(g))):
            raise NotHermitian("matrix is not Hermitian")
        return
    if not is_zero(g - dagger(g), _scaled(tol.psd_tol, g)):
        raise NotHermitian("matrix is not Hermitian")


def psd_certify(g, tol: ToleranceConfig = DEFAULT_TOL) -> PsdCertificate:
    """Decide positive semidefiniteness of a Hermitian matrix.

    Exact mode runs a pivoted LDL* elimination; a failure yields a witness ``x``
    with ``x^H g x < 0``. Float mode uses the smallest eigenvalue.
    """
    _check_hermitian(g, tol)
    g = np.asarray(g)
    n = g.shape[0]
    if g.dtype != object:
        if n == 0:
            return PsdCertificate(True, None, 0.0)
        w, v = np.linalg.eigh(g.astype(np.complex128))
        ok = w[0] >= -_scaled(tol.psd_tol, g)
        return PsdCertificate(bool(ok), None if ok else v[:, 0], float(w[0]))

    mat = [list(row) for row in g.tolist()]
    basis = [[ONE if i == j else ZERO for i in range(n)] for j in range(n)]
    live = list(range(n))
    while live:
        neg = next((k for k in live if mat[k][k] < 0), None)
        if neg is not None:
            return PsdCertificate(False, exact_array(basis[neg]))
        p = next((k for k in live if mat[k][k] > 0), None)
        if p is None:
            for a in live:
                for b in live:
                    if a < b and mat[a][b] != 0:
                        s = -mat[a][b].conjugate()
                        x = [xa + s * xb for xa, xb in zip(basis[a], basis[b])]
                        return PsdCertificate(False, exact_array(x))
            return PsdCertificate(True, pivots=n - len(live))
        live.remove(p)
        d = mat[p][p]
        for j in live:
            f = mat[p][j] / d
            if f == 0:
                continue
            basis[j] = [xj - f * xp for xj, xp in zip(basis[j], basis[p])]
            for i in live:
                if mat[i][p] != 0:
                    mat[i][j] = mat[i][j] - mat[i][p] * f
    return PsdCertificate(True, pivots=n)


# ---------------------------------------------------------------- spectra


def _clusters_1d(values: np.ndarray, radius: float) -> list[list[int]]:
    order = np.argsort(values, kind="stable")
    groups: list[list[int]] = []
    for idx in order:
        if groups and values[idx] - values[groups[-1][-1]] <= radius:
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    return groups


def spectral_clusters(n, tol: ToleranceConfig = DEFAULT_TOL) -> list[tuple[complex, np.ndarray]]:
    """Spectral decomposition of a normal float matrix into clustered projections.

    The Hermitian part is diagonalized first and each of its eigenspaces is
    refined by the anti-Hermitian part, which commutes with it.
    """
    n = np.asarray(n)
    if n.dtype == object:
        raise BackendMismatch("spectral_clusters runs on the float backend; convert with to_float")
    n = n.astype(np.complex128)
    dim = n.shape[0]
    norm = max(np.linalg.norm(n, 2), 1e-300) if dim else 0.0
    comm = n @ n.conj().T - n.conj().T @ n
    if dim and np.linalg.norm(comm, 2) > 10 * tol.spec_tol * norm * max(norm, 1.0):
        raise NotNormal("matrix does not commute with its adjoint")
    if dim == 0:
        return []
    radius = tol.spec_tol * norm
    herm = (n + n.conj().T) / 2
    anti = (n - n.conj().T) / 2j
    w, v = np.linalg.eigh(herm)
    out = []
    for grp in _clusters_1d(w, radius):
        basis = v[:, grp]
        sub = basis.conj().T @ anti @ basis
        sub = (sub + sub.conj().T) / 2
        w2, v2 = np.linalg.eigh(sub)
        for grp2 in _clusters_1d(w2, radius):
            vecs = basis @ v2[:, grp2]
            proj = vecs @ vecs.conj().T
            lam = complex(np.trace(n @ proj) / len(grp2))
            out.append((lam, proj))
    out.sort(key=lambda t: (-t[0].real, -t[0].imag))
    return out


# ---------------------------------------------------------------- adjoints


def adjoint_wrt_forms(f, g_dom, g_cod, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """The unique ``f*`` with ``<f x, y>_cod = <x, f* y>_dom``.

    With ``<x,y>_G = x^T G conj(y)`` this is ``conj(G_dom)^{-1} f^H conj(G_cod)``.
    """
    common_backend(f, g_dom, g_cod)
    f = np.asarray(f)
    g_dom = np.asarray(g_dom)
    g_cod = np.asarray(g_cod)
    if g_dom.shape[0] == 0:
        return zeros((0, g_cod.shape[0]), backend_of(f))
    inv_dom = inverse(np.conjugate(g_dom), tol)
    if g_cod.shape[0] and rank(g_cod, tol) < g_cod.shape[0]:
        raise DegenerateForm("codomain form is degenerate")
    return inv_dom @ dagger(f) @ np.conjugate(g_cod)


def is_gram_isometry(f, g_dom, g_cod, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    """``<f x, f y>_cod = <x, y>_dom`` for all coordinate vectors."""
    f = np.asarray(f)
    pulled = f.T @ g_cod @ np.conjugate(f)
    return equal(pulled, g_dom, _scaled(tol.psd_tol, g_cod))
