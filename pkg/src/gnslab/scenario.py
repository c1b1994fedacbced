"""Scenario files: parsing, static validation and execution into reports.

A scenario is one JSON document::

    {"schema": "gnslab-scenario/1", "backend": "exact",
     "tolerances": {"rank_tol": 1e-10},
     "declarations": [{"name": "M", "kind": "matrix_algebra", "n": 2}, ...],
     "commands": [{"op": "gns", "state": "phi"}, ...]}

Exact scalars are strings such as ``"1/2"`` or ``"1/3-2 i"`` (plain integers
are accepted too); float scalars are JSON numbers or ``[re, im]`` pairs.
Declarations are built lazily, so a domain error raised while building one
(for instance a functional that is not *-linear) surfaces in the record of
the first command that uses it, together with its witness.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any

import numpy as np

from . import numeric as nm
from .algebra import (
    Element,
    check_homomorphism,
    conjugate_algebra,
    hom_from_rep_images,
    make_function_algebra,
    make_group_algebra,
    make_matrix_algebra,
    make_star_linear,
    tensor_algebra,
    validate_group_table,
)
from .errors import AlgebraMismatch, GnsLabError, ParseError, UnresolvedReference
from .gns import (
    State,
    composite_axiom_check,
    dinaturality_square,
    gns_c,
    gns_map,
    is_positive,
    make_state,
    monoidal_iso,
    normalize,
    phys_morphism,
)
from .markov import conditioning, is_completely_positive, kraus_map, scattering, stinespring
from .numeric import DEFAULT_TOL, EXACT, FLOAT, ToleranceConfig
from .probability import (
    FiniteProbSpace,
    MarkovKernel,
    born_distribution,
    cp_to_kernel,
    ee_link_check,
    has_definite_value,
    kernel_to_cp,
    kleisli_compose,
    l2_compare,
)
from .symmetry import GroupAction, equivariant_gns, permutation_action

SCENARIO_SCHEMA = "gnslab-scenario/1"
REPORT_SCHEMA = "gnslab-report/1"

# ---------------------------------------------------------------- JSON encoding


def to_jsonable(x) -> Any:
    """Lossless-enough JSON form: exact scalars as strings, complex as ``[re, im]``."""
    if isinstance(x, np.ndarray):
        return [to_jsonable(v) for v in x.tolist()] if x.dtype != object else [to_jsonable(v) for v in x]
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (Fraction, nm.GaussRat)):
        return nm.format_scalar(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        x = complex(x)
        return x.real if x.imag == 0 else [x.real, x.imag]
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


# ---------------------------------------------------------------- parsing


@dataclass
class Scenario:
    backend: str
    tolerances: ToleranceConfig
    declarations: list
    commands: list
    source_backend: str = EXACT


def load_text(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise ParseError("scenario must be a JSON object", 1, 1)
    return data


def load_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return load_text(fh.read())


def _tolerances(data: dict, override: float | None) -> ToleranceConfig:
    if override is not None:
        return ToleranceConfig.uniform(override)
    raw = data.get("tolerances") or {}
    return replace(DEFAULT_TOL, **{k: float(v) for k, v in raw.items()})


def scenario_from_data(data: dict, backend: str | None = None, tol: float | None = None) -> Scenario:
    diags = validate_data(data, backend)
    if diags:
        raise ParseError("; ".join(d["message"] for d in diags))
    src = data.get("backend", EXACT)
    return Scenario(backend or src, _tolerances(data, tol), data["declarations"], data["commands"], src)


# ---------------------------------------------------------------- static validation

_ALGEBRA_KINDS = {"matrix_algebra", "function_algebra", "group_algebra", "tensor_algebra", "conjugate_algebra"}
_DECL_KINDS = _ALGEBRA_KINDS | {
    "group_table", "element", "state", "hom", "linear_map", "prob_space", "kernel", "action", "matrix", "vector",
}

# argument name -> expected declaration category
COMMANDS: dict[str, dict[str, str]] = {
    "check_laws": {"algebra": "algebra"},
    "gns": {"state": "state"},
    "positivity": {"state": "state"},
    "morphism": {"hom": "hom", "state": "state"},
    "gns_c": {"hom": "hom", "state": "state"},
    "monoidal": {"left": "state", "right": "state"},
    "composite_axioms": {"left": "state", "right": "state"},
    "normalize": {"state": "state"},
    "dinaturality": {"hom": "hom", "state": "state", "vector": "vector"},
    "born": {"element": "element", "state": "state"},
    "ee_link": {"element": "element", "state": "state"},
    "definite_value": {"element": "element", "state": "state"},
    "cp_check": {"map": "map"},
    "stinespring": {"map": "map", "state": "state"},
    "conditioning": {"projection": "element", "state": "state"},
    "scattering": {"s": "matrix", "i_alpha": "matrix", "p_beta": "matrix", "vector": "vector"},
    "l2_compare": {"space": "prob_space"},
    "kernel_dual": {"kernel": "kernel"},
    "kleisli": {"first": "kernel", "second": "kernel"},
    "equivariant_gns": {"action": "action"},
}


def _category(kind: str) -> str:
    if kind in _ALGEBRA_KINDS:
        return "algebra"
    if kind in ("hom", "linear_map"):
        return "map" if kind == "linear_map" else "hom"
    return kind


class _Checker:
    def __init__(self, data: dict, backend: str | None):
        self.data = data
        self.diags: list[dict] = []
        self.info: dict[str, dict] = {}
        self.src = data.get("backend", EXACT)
        self.backend = backend

    def add(self, where: str, code: str, message: str, **extra):
        self.diags.append({"where": where, "code": code, "message": message, **extra})

    # literal checks

    def scalar(self, where, x):
        if self.src == EXACT:
            if isinstance(x, bool) or isinstance(x, float) or isinstance(x, list):
                self.add(where, "backend-mismatch", f"{where}: float literal {x!r} in an exact scenario")
            elif isinstance(x, str):
                try:
                    nm.parse_scalar(x)
                except (ValueError, ZeroDivisionError):
                    self.add(where, "bad-scalar", f"{where}: cannot parse scalar {x!r}")
            elif not isinstance(x, int):
                self.add(where, "bad-scalar", f"{where}: not a scalar: {x!r}")
        else:
            if isinstance(x, str):
                self.add(where, "backend-mismatch", f"{where}: exact scalar {x!r} in a float scenario")
            elif isinstance(x, list):
                if len(x) != 2 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
                    self.add(where, "bad-scalar", f"{where}: complex scalars are [re, im] pairs")
            elif isinstance(x, bool) or not isinstance(x, (int, float)):
                self.add(where, "bad-scalar", f"{where}: not a scalar: {x!r}")

    def vector(self, where, x, length=None) -> int | None:
        if not isinstance(x, list):
            self.add(where, "shape", f"{where}: expected a list of scalars")
            return None
        for k, v in enumerate(x):
            self.scalar(f"{where}[{k}]", v)
        if length is not None and len(x) != length:
            self.add(where, "shape", f"{where}: expected length {length}, got {len(x)}")
        return len(x)

    def matrix(self, where, x, shape=None) -> tuple | None:
        if not isinstance(x, list) or not all(isinstance(r, list) for r in x):
            self.add(where, "shape", f"{where}: expected a list of rows")
            return None
        widths = {len(r) for r in x}
        if len(widths) > 1:
            self.add(where, "shape", f"{where}: ragged rows")
            return None
        for i, r in enumerate(x):
            for j, v in enumerate(r):
                self.scalar(f"{where}[{i}][{j}]", v)
        got = (len(x), widths.pop() if widths else 0)
        if shape is not None and got != tuple(shape):
            self.add(where, "shape", f"{where}: expected shape {tuple(shape)}, got {got}")
        return got

    def ref(self, where, name, category: str | None):
        if not isinstance(name, str):
            self.add(where, "structure", f"{where}: expected a declaration name")
            return None
        if name not in self.info:
            self.add(where, "unresolved-reference", f"{where}: unresolved reference {name!r}", name=name)
            return None
        got = self.info[name]
        if category is not None and got["category"] != category:
            self.add(where, "kind", f"{where}: {name!r} is a {got['category']}, expected a {category}")
            return None
        return got

    def need(self, where, decl, key):
        if key not in decl:
            self.add(where, "structure", f"{where}: missing field {key!r}")
            return False
        return True

    # declarations

    def declaration(self, k: int, d: dict):
        where = f"declarations[{k}]"
        if not isinstance(d, dict) or "name" not in d or "kind" not in d:
            self.add(where, "structure", f"{where}: declarations need 'name' and 'kind'")
            return
        name, kind = d["name"], d["kind"]
        where = f"{where} ({name})"
        if kind not in _DECL_KINDS:
            self.add(where, "structure", f"{where}: unknown kind {kind!r}")
            return
        if name in self.info:
            self.add(where, "duplicate-name", f"{where}: name {name!r} declared twice", name=name)
            return
        info = {"category": _category(kind), "kind": kind}
        getattr(self, "_" + kind)(where, d, info)
        self.info[name] = info

    def _matrix_algebra(self, where, d, info):
        if self.need(where, d, "n"):
            n = d["n"]
            if not isinstance(n, int) or n < 1:
                self.add(where, "structure", f"{where}: n must be a positive integer")
                n = 1
            info.update(dim=n * n, rep_dim=n)

    def _function_algebra(self, where, d, info):
        if self.need(where, d, "points"):
            pts = [str(p) for p in d["points"]]
            if len(set(pts)) != len(pts):
                self.add(where, "structure", f"{where}: duplicate point labels")
            info.update(dim=len(pts), rep_dim=len(pts))

    def _group_table(self, where, d, info):
        if self.need(where, d, "table"):
            info.update(order=len(d["table"]))

    def _group_algebra(self, where, d, info):
        if "group" in d:
            g = self.ref(where + ".group", d["group"], "group_table")
            n = g["order"] if g else 1
        elif self.need(where, d, "table"):
            n = len(d["table"])
        else:
            n = 1
        info.update(dim=n, rep_dim=n)

    def _tensor_algebra(self, where, d, info):
        parts = [self.ref(f"{where}.{k}", d.get(k), "algebra") for k in ("left", "right")]
        if all(parts):
            info.update(dim=parts[0]["dim"] * parts[1]["dim"], rep_dim=parts[0]["rep_dim"] * parts[1]["rep_dim"])
        else:
            info.update(dim=None, rep_dim=None)

    def _conjugate_algebra(self, where, d, info):
        a = self.ref(where + ".of", d.get("of"), "algebra")
        info.update(dim=a["dim"] if a else None, rep_dim=a["rep_dim"] if a else None)

    def _element(self, where, d, info):
        a = self.ref(where + ".algebra", d.get("algebra"), "algebra")
        info["algebra"] = d.get("algebra")
        if not a:
            return
        if "coords" in d:
            self.vector(where + ".coords", d["coords"], a["dim"])
        elif "matrix" in d:
            r = a["rep_dim"]
            self.matrix(where + ".matrix", d["matrix"], None if r is None else (r, r))
        else:
            self.add(where, "structure", f"{where}: give 'coords' or 'matrix'")

    def _state(self, where, d, info):
        a = self.ref(where + ".algebra", d.get("algebra"), "algebra")
        info["algebra"] = d.get("algebra")
        if not a:
            return
        if "functional" in d:
            self.vector(where + ".functional", d["functional"], a["dim"])
        elif "vector" in d:
            self.vector(where + ".vector", d["vector"], a["rep_dim"])
        elif "vectors" in d:
            for k, v in enumerate(d["vectors"]):
                self.vector(f"{where}.vectors[{k}]", v, a["rep_dim"])
        elif "weights" in d:
            self.vector(where + ".weights", d["weights"], a["dim"])
        else:
            self.add(where, "structure", f"{where}: give 'functional', 'vector' or 'vectors'")

    def _maplike(self, where, d, info, allow_kraus: bool):
        dom = self.ref(where + ".dom", d.get("dom"), "algebra")
        cod = self.ref(where + ".cod", d.get("cod"), "algebra")
        info.update(dom=d.get("dom"), cod=d.get("cod"))
        if not (dom and cod):
            return
        if "matrix" in d:
            self.matrix(where + ".matrix", d["matrix"], (cod["dim"], dom["dim"]))
        elif "images" in d:
            if len(d["images"]) != dom["dim"]:
                self.add(where, "shape", f"{where}: need one image per domain basis element")
            for k, m in enumerate(d["images"]):
                self.matrix(f"{where}.images[{k}]", m, (cod["rep_dim"], cod["rep_dim"]))
        elif allow_kraus and "kraus" in d:
            for k, m in enumerate(d["kraus"]):
                self.matrix(f"{where}.kraus[{k}]", m, (dom["rep_dim"], cod["rep_dim"]))
        else:
            self.add(where, "structure", f"{where}: give 'matrix'" + (", 'images' or 'kraus'" if allow_kraus else " or 'images'"))

    def _hom(self, where, d, info):
        self._maplike(where, d, info, False)

    def _linear_map(self, where, d, info):
        self._maplike(where, d, info, True)

    def _prob_space(self, where, d, info):
        if self.need(where, d, "points") and self.need(where, d, "weights"):
            self.vector(where + ".weights", d["weights"], len(d["points"]))
            info.update(n=len(d["points"]))

    def _side(self, where, x) -> int | None:
        if isinstance(x, str):
            got = self.ref(where, x, "prob_space")
            return got["n"] if got else None
        if isinstance(x, list):
            return len(x)
        self.add(where, "structure", f"{where}: expected a point list or a prob_space name")
        return None

    def _kernel(self, where, d, info):
        n, m = self._side(where + ".dom", d.get("dom")), self._side(where + ".cod", d.get("cod"))
        if self.need(where, d, "matrix"):
            self.matrix(where + ".matrix", d["matrix"], None if n is None or m is None else (n, m))

    def _action(self, where, d, info):
        g = self.ref(where + ".group", d.get("group"), "group_table")
        self.ref(where + ".state", d.get("state"), "state")
        if "automorphisms" in d:
            for k, name in enumerate(d["automorphisms"]):
                self.ref(f"{where}.automorphisms[{k}]", name, "hom")
            count = len(d["automorphisms"])
        elif "permutations" in d:
            count = len(d["permutations"])
        else:
            self.add(where, "structure", f"{where}: give 'automorphisms' or 'permutations'")
            return
        if g and count != g["order"]:
            self.add(where, "shape", f"{where}: need one automorphism per group element")

    def _matrix(self, where, d, info):
        if self.need(where, d, "value"):
            info["shape"] = self.matrix(where + ".value", d["value"])

    def _vector(self, where, d, info):
        if self.need(where, d, "value"):
            info["length"] = self.vector(where + ".value", d["value"])

    # commands

    def command(self, k: int, c: dict):
        where = f"commands[{k}]"
        if not isinstance(c, dict) or "op" not in c:
            self.add(where, "structure", f"{where}: commands need an 'op'")
            return
        op = c["op"]
        if op not in COMMANDS:
            self.add(where, "structure", f"{where}: unknown op {op!r}")
            return
        for arg, cat in COMMANDS[op].items():
            if arg not in c:
                self.add(where, "structure", f"{where}: missing argument {arg!r}")
            else:
                self.ref(f"{where}.{arg}", c[arg], cat)
        if op == "ee_link":
            if "value" not in c:
                self.add(where, "structure", f"{where}: missing argument 'value'")
            else:
                self.scalar(where + ".value", c["value"])


def validate_data(data: dict, backend: str | None = None) -> list[dict]:
    """Static diagnostics: structure, references, shapes and literal backends."""
    ck = _Checker(data, backend)
    if data.get("schema") != SCENARIO_SCHEMA:
        ck.add("schema", "structure", f"schema must be {SCENARIO_SCHEMA!r}")
    src = data.get("backend", EXACT)
    if src not in (EXACT, FLOAT):
        ck.add("backend", "structure", f"unknown backend {src!r}")
        return ck.diags
    if backend == EXACT and src == FLOAT:
        ck.add("backend", "backend-mismatch", "a float scenario cannot run on the exact backend")
    for key in ("declarations", "commands"):
        if not isinstance(data.get(key), list):
            ck.add(key, "structure", f"{key!r} must be a list")
            return ck.diags
    unknown = set(data.get("tolerances") or {}) - {"rank_tol", "psd_tol", "spec_tol"}
    if unknown:
        ck.add("tolerances", "structure", f"unknown tolerance keys {sorted(unknown)}")
    for k, d in enumerate(data["declarations"]):
        ck.declaration(k, d)
    for k, c in enumerate(data["commands"]):
        ck.command(k, c)
    return ck.diags


def validate_file(path: str, backend: str | None = None) -> list[dict]:
    try:
        data = load_file(path)
    except ParseError as exc:
        return [{"where": f"line {exc.line}, column {exc.column}", "code": "parse", "message": str(exc)}]
    return validate_data(data, backend)


# ---------------------------------------------------------------- execution


class _Env:
    """Lazy, memoized declaration builder."""

    def __init__(self, sc: Scenario):
        self.sc = sc
        self.decls = {d["name"]: d for d in sc.declarations}
        self.values: dict[str, Any] = {}
        self.errors: dict[str, Exception] = {}

    def scalar(self, x):
        if self.sc.source_backend == EXACT:
            v = nm.to_exact_scalar(Fraction(x) if isinstance(x, int) else nm.parse_scalar(x))
            return complex(v) if self.sc.backend == FLOAT else v
        return complex(x[0], x[1]) if isinstance(x, list) else complex(x)

    def vec(self, xs):
        if self.sc.backend == EXACT:
            return nm.exact_array([self.scalar(v) for v in xs])
        return np.array([self.scalar(v) for v in xs], dtype=complex)

    def mat(self, rows):
        if self.sc.backend == EXACT:
            return nm.exact_array([[self.scalar(v) for v in r] for r in rows])
        return np.array([[self.scalar(v) for v in r] for r in rows], dtype=complex).reshape(len(rows), -1)

    def get(self, name: str):
        if name in self.errors:
            raise self.errors[name]
        if name not in self.values:
            if name not in self.decls:
                raise UnresolvedReference(name)
            try:
                self.values[name] = self._build(self.decls[name])
            except Exception as exc:
                self.errors[name] = exc
                raise
        return self.values[name]

    def _algebra(self, alg):
        alg.tol = self.sc.tolerances
        return alg

    def _build(self, d: dict):
        kind = d["kind"]
        be = self.sc.backend
        if kind == "matrix_algebra":
            return self._algebra(make_matrix_algebra(int(d["n"]), be))
        if kind == "function_algebra":
            return self._algebra(make_function_algebra([str(p) for p in d["points"]], be))
        if kind == "group_table":
            validate_group_table(d["table"])
            return [list(map(int, r)) for r in d["table"]]
        if kind == "group_algebra":
            table = self.get(d["group"]) if "group" in d else d["table"]
            return self._algebra(make_group_algebra(table, d.get("labels"), be))
        if kind == "tensor_algebra":
            return tensor_algebra(self.get(d["left"]), self.get(d["right"]))
        if kind == "conjugate_algebra":
            return conjugate_algebra(self.get(d["of"]))
        if kind == "element":
            alg = self.get(d["algebra"])
            if "coords" in d:
                return Element(alg, self.vec(d["coords"]))
            return Element(alg, _coords_of_matrix(alg, self.mat(d["matrix"])))
        if kind == "state":
            alg = self.get(d["algebra"])
            if "functional" in d:
                return make_state(alg, self.vec(d["functional"]))
            if "weights" in d:
                return make_state(alg, self.vec(d["weights"]))
            vecs = [d["vector"]] if "vector" in d else d["vectors"]
            total = nm.zeros(alg.dim, be)
            for v in vecs:
                vv = self.vec(v)
                total = total + np.array([np.conjugate(vv) @ r @ vv for r in alg.rep], dtype=alg.unit.dtype)
            return make_state(alg, total)
        if kind in ("hom", "linear_map"):
            dom, cod = self.get(d["dom"]), self.get(d["cod"])
            if "kraus" in d:
                return kraus_map(dom, cod, [self.mat(k) for k in d["kraus"]])
            if "images" in d:
                images = [self.mat(m) for m in d["images"]]
                if kind == "hom":
                    return hom_from_rep_images(dom, cod, images)
                cols = [_coords_of_matrix(cod, m) for m in images]
                return make_star_linear(dom, cod, np.column_stack(cols))
            m = self.mat(d["matrix"])
            return check_homomorphism(dom, cod, m) if kind == "hom" else make_star_linear(dom, cod, m)
        if kind == "prob_space":
            return FiniteProbSpace(list(d["points"]), self.vec(d["weights"]))
        if kind == "kernel":
            side = lambda x: self.get(x) if isinstance(x, str) else list(x)  # noqa: E731
            return MarkovKernel(side(d["dom"]), side(d["cod"]), self.mat(d["matrix"]))
        if kind == "action":
            table, state = self.get(d["group"]), self.get(d["state"])
            if "permutations" in d:
                return permutation_action(table, state, d["permutations"])
            return GroupAction(table, state, [self.get(n) for n in d["automorphisms"]])
        if kind == "matrix":
            return self.mat(d["value"])
        if kind == "vector":
            return self.vec(d["value"])
        raise ParseError(f"unknown declaration kind {kind!r}")


def _coords_of_matrix(alg, m) -> np.ndarray:
    if alg.rep is None:
        raise AlgebraMismatch("matrix input needs a faithful representation")
    flat = np.array([r.ravel() for r in alg.rep]).T
    x, res = nm.lstsq(flat, np.asarray(m).ravel(), alg.tol)
    if x is None or res > 1e-9:
        raise AlgebraMismatch("matrix is not in the represented algebra")
    return x


# ---------------------------------------------------------------- commands


def _state(env: _Env, name: str) -> State:
    return env.get(name)


def _dist_payload(dist, normalize_dist: bool):
    if normalize_dist:
        dist = dist.normalized()
    return {"entries": [[mu, w] for mu, w in dist.entries], "total": dist.total}


def _run_command(env: _Env, c: dict, normalize_dist: bool) -> tuple[dict, bool]:
    op = c["op"]
    if op == "check_laws":
        problems = env.get(c["algebra"]).check_laws()
        return {"problems": problems}, not problems
    if op == "gns":
        phi = _state(env, c["state"])
        g = phi.gns_space
        return {"dim": g.dim, "gram": g.gram, "pivots": list(g.pivots), "radical_dim": len(g.radical_basis),
                "positive": bool(phi.positivity)}, True
    if op == "positivity":
        res = is_positive(_state(env, c["state"]))
        return {"positive": bool(res), "witness": res.witness}, bool(res)
    if op in ("morphism", "gns_c"):
        m = phys_morphism(env.get(c["hom"]), _state(env, c["state"]))
        if not m.admissible:
            return {"admissible": False, "witness": m.admissible.witness}, False
        fwd = gns_map(m)
        iso = nm.is_gram_isometry(fwd, m.cod_state.gns_space.gram, m.dom_state.gns_space.gram, m.dom_state.tol)
        out = {"admissible": True, "pullback": m.cod_state.functional, "gns_map": fwd, "isometric": iso}
        if op == "gns_c":
            out["gns_c"] = gns_c(m)
        return out, iso
    if op == "monoidal":
        iso = monoidal_iso(_state(env, c["left"]), _state(env, c["right"]))
        return {"iso": iso, "dim": iso.shape[0]}, True
    if op == "composite_axioms":
        rep = composite_axiom_check(_state(env, c["left"]), _state(env, c["right"]))
        return {"projections_are_morphisms": rep.projections_are_morphisms, "noninteraction": rep.noninteraction,
                "commutation": rep.commutation}, rep.ok
    if op == "normalize":
        return {"functional": normalize(_state(env, c["state"])).functional}, True
    if op == "dinaturality":
        m = phys_morphism(env.get(c["hom"]), _state(env, c["state"]))
        lhs, rhs = dinaturality_square(m, env.get(c["vector"]))
        ok = m.dom_state.algebra.close(lhs.functional, rhs.functional)
        return {"pulled_back": lhs.functional, "direct": rhs.functional, "commutes": ok}, ok
    if op == "born":
        dist = born_distribution(env.get(c["element"]), _state(env, c["state"]))
        return _dist_payload(dist, normalize_dist or bool(c.get("normalize"))), True
    if op == "ee_link":
        res = ee_link_check(env.get(c["element"]), _state(env, c["state"]), env.scalar(c["value"]))
        return {"eigenvector": res.eigenvector, "almost_everywhere": res.almost_everywhere,
                "probability_one": res.probability_one, "consistent": res.consistent}, res.consistent
    if op == "definite_value":
        dv = has_definite_value(env.get(c["element"]), _state(env, c["state"]))
        if dv is None:
            return {"definite": False}, True
        return {"definite": True, "value": dv.value, "character": dv.character,
                "eigenvector_verified": dv.eigenvector_verified}, True
    if op == "cp_check":
        pm = env.get(c["map"])
        res = is_completely_positive(pm)
        out = {"completely_positive": res.completely_positive, "min_eigenvalue": res.min_eigenvalue,
               "witness": res.witness}
        if res.cp_map is not None:
            out.update(kraus_rank=res.cp_map.kraus_rank, unital=res.cp_map.unital)
        return out, res.completely_positive
    if op == "stinespring":
        dil = stinespring(env.get(c["map"]), _state(env, c["state"]))
        return {"h_dim": dil.h_dim, "residual": dil.residual, "rep_residual": dil.rep_residual,
                "form_psd": bool(dil.form_psd), "ok": dil.ok}, dil.ok
    if op == "conditioning":
        _, rep = conditioning(env.get(c["projection"]), _state(env, c["state"]))
        return {"psi_one": rep.psi_one, "phi_of_p": rep.phi_of_p, "omega_to_p_omega": rep.omega_to_p_omega,
                "composite_residual": rep.composite_residual, "ok": rep.ok}, rep.ok
    if op == "scattering":
        _, rep = scattering(env.get(c["s"]), env.get(c["i_alpha"]), env.get(c["p_beta"]), env.get(c["vector"]))
        return {"transition": rep.transition, "psi_one": rep.psi_one, "phi_one": rep.phi_one,
                "residual": rep.residual, "probability_bounded": rep.probability_bounded}, rep.ok
    if op == "l2_compare":
        rep = l2_compare(env.get(c["space"]))
        return {"support_size": rep.support_size, "gns_dim": rep.gns_dim, "gram": rep.gram, "iso": rep.iso}, rep.ok
    if op == "kernel_dual":
        k = env.get(c["kernel"])
        cp = kernel_to_cp(k)
        back = cp_to_kernel(cp)
        ok = nm.equal(back.matrix, k.matrix, 0.0 if k.backend == EXACT else 1e-12)
        return {"map": cp.underlying.matrix, "roundtrip": ok}, ok
    if op == "kleisli":
        f, g = env.get(c["first"]), env.get(c["second"])
        comp = kleisli_compose(f, g)
        lhs = kernel_to_cp(comp).underlying.matrix
        rhs = kernel_to_cp(f).underlying.compose(kernel_to_cp(g).underlying).matrix
        ok = nm.equal(lhs, rhs, 0.0 if comp.backend == EXACT else 1e-12)
        return {"matrix": comp.matrix, "dual_functorial": ok}, ok
    if op == "equivariant_gns":
        action = env.get(c["action"])
        rep = equivariant_gns(action)
        return {"dim": rep.dim, "character": [rep.character(g) for g in range(action.order)],
                "covariance_residual": rep.covariance_residual, "triples": rep.triples_checked}, True
    raise ParseError(f"unknown op {op!r}")


def _matches(expected, got) -> bool:
    if isinstance(expected, dict):
        return isinstance(got, dict) and all(k in got and _matches(v, got[k]) for k, v in expected.items())
    if isinstance(expected, list):
        return isinstance(got, list) and len(expected) == len(got) and all(_matches(a, b) for a, b in zip(expected, got))
    if isinstance(expected, float) or isinstance(got, float):
        try:
            return abs(complex(expected) - complex(got)) <= 1e-9
        except (TypeError, ValueError):
            return False
    return expected == got


def _error_record(exc: Exception) -> dict:
    out = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, GnsLabError):
        out["witness"] = to_jsonable(exc.witness)
    return out


@dataclass
class RunResult:
    report: dict
    exit_code: int
    summary: list[str] = field(default_factory=list)


def run_scenario(sc: Scenario, normalize_dist: bool = False) -> RunResult:
    env = _Env(sc)
    records, timings = [], []
    start = time.perf_counter()
    for k, c in enumerate(sc.commands):
        t0 = time.perf_counter()
        rec = {"index": k, "name": c.get("name", f"{c['op']}#{k}"), "op": c["op"]}
        try:
            payload, verdict = _run_command(env, c, normalize_dist)
            payload = to_jsonable(payload)
            rec["payload"] = payload
            if "expect" in c:
                verdict = _matches(c["expect"], payload)
            rec["status"] = "pass" if verdict else "fail"
            rec["error"] = None
        except GnsLabError as exc:
            rec["payload"] = None
            expected_error = c.get("expect_error")
            rec["status"] = "pass" if expected_error == type(exc).__name__ else "fail"
            rec["error"] = _error_record(exc)
        except Exception as exc:  # structured record instead of a crash
            rec["payload"] = None
            rec["status"] = "error"
            rec["error"] = _error_record(exc)
        records.append(rec)
        timings.append(time.perf_counter() - t0)
    counts = {s: sum(1 for r in records if r["status"] == s) for s in ("pass", "fail", "error")}
    report = {
        "schema": REPORT_SCHEMA,
        "backend": sc.backend,
        "records": records,
        "summary": counts,
        "timing": {"total": time.perf_counter() - start, "commands": timings},
    }
    code = 0 if counts["fail"] == 0 and counts["error"] == 0 else 1
    lines = [f"[{r['status'].upper():5s}] {r['name']} ({r['op']})" + (f": {r['error']['type']}" if r["error"] else "")
             for r in records]
    lines.append(f"{counts['pass']} passed, {counts['fail']} failed, {counts['error']} errors")
    return RunResult(report, code, lines)


def payload_section(report: dict) -> str:
    """The deterministic part of a report, serialized canonically."""
    return json.dumps({k: v for k, v in report.items() if k != "timing"}, sort_keys=True)
