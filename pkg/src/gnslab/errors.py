"""Exception hierarchy. Every domain failure carries an optional witness."""

from __future__ import annotations


class GnsLabError(Exception):
    def __init__(self, message: str = "", witness=None):
        super().__init__(message or type(self).__name__)
        self.witness = witness


class BackendMismatch(GnsLabError):
    pass


class BackendError(GnsLabError):
    pass


class NotHermitian(GnsLabError):
    pass


class NotNormal(GnsLabError):
    pass


class DegenerateForm(GnsLabError):
    pass


class DuplicateLabel(GnsLabError):
    pass


class NotAGroup(GnsLabError):
    def __init__(self, axiom: str, witness=None):
        super().__init__(f"not a group: {axiom} fails", witness)
        self.axiom = axiom


class NotUnital(GnsLabError):
    pass


class NotMultiplicative(GnsLabError):
    def __init__(self, i: int, j: int):
        super().__init__(f"not multiplicative on basis pair ({i}, {j})", (i, j))
        self.i, self.j = i, j


class NotStarPreserving(GnsLabError):
    def __init__(self, i: int):
        super().__init__(f"star not preserved on basis element {i}", i)
        self.i = i


class AlgebraMismatch(GnsLabError):
    pass


class NotStarLinear(GnsLabError):
    def __init__(self, index: int):
        super().__init__(f"functional is not *-linear at basis index {index}", index)
        self.index = index


class NotAdmissible(GnsLabError):
    pass


class NotPositive(GnsLabError):
    pass


class NotSameState(GnsLabError):
    pass


class NotIsometric(GnsLabError):
    pass


class NotFaithful(GnsLabError):
    pass


class NotUnitary(GnsLabError):
    pass


class NotInvertible(GnsLabError):
    pass


class IsotropicState(GnsLabError):
    pass


class NormalizationMismatch(GnsLabError):
    pass


class NotNormalized(GnsLabError):
    pass


class PullbackMismatch(GnsLabError):
    pass


class NoFaithfulRep(GnsLabError):
    pass


class NotCP(GnsLabError):
    pass


class NotProjection(GnsLabError):
    pass


class NotComposable(GnsLabError):
    def __init__(self, index: int, message: str = ""):
        super().__init__(message or f"chain not composable at link {index}", index)
        self.index = index


class NotPositiveMap(GnsLabError):
    pass


class ShapeMismatch(GnsLabError):
    pass


class ProjectionNotInSubalgebra(GnsLabError):
    pass


class NotAnAction(GnsLabError):
    def __init__(self, law: str, witness=None):
        super().__init__(f"not an action: {law}", witness)
        self.law = law


class MissingArrow(GnsLabError):
    def __init__(self, t, t2):
        super().__init__(f"missing arrow U({t}, {t2})", (t, t2))
        self.t, self.t2 = t, t2


class ParseError(GnsLabError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line, self.column = line, column


class UnresolvedReference(GnsLabError):
    def __init__(self, name: str):
        super().__init__(f"unresolved reference {name!r}", name)
        self.name = name
