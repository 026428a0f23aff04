"""Linear-time specification language: parsing, normal form, classification,
and a three-valued monitor over finite label traces.

ASCII operator aliases: G or [] (always), F or <> (eventually), X (next),
U (until), W (weak until), ! & | ->.  After to_pnf, negation survives only
as complement atoms, which downstream geometry materializes as set
differences against the state domain.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Optional, Sequence


class LtlError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    name: str
    complement: bool = False


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


@dataclass(frozen=True)
class Not:
    arg: "LtlAst"


@dataclass(frozen=True)
class And:
    lhs: "LtlAst"
    rhs: "LtlAst"


@dataclass(frozen=True)
class Or:
    lhs: "LtlAst"
    rhs: "LtlAst"


@dataclass(frozen=True)
class Implies:
    lhs: "LtlAst"
    rhs: "LtlAst"


@dataclass(frozen=True)
class Next:
    arg: "LtlAst"


@dataclass(frozen=True)
class Always:
    arg: "LtlAst"


@dataclass(frozen=True)
class Eventually:
    arg: "LtlAst"


@dataclass(frozen=True)
class Until:
    lhs: "LtlAst"
    rhs: "LtlAst"


@dataclass(frozen=True)
class WeakUntil:
    lhs: "LtlAst"
    rhs: "LtlAst"


LtlAst = object
TRUE = TrueF()
FALSE = FalseF()

_LTL_TOKEN = re.compile(
    r"\s*(?:(?P<sym>\[\]|<>|->|[!&|()UWGFX])|(?P<ident>[A-Za-z_][A-Za-z_0-9]*))")

_KEYWORDS = {"U", "W", "G", "F", "X"}


def _lex(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _LTL_TOKEN.match(text, pos)
        if m is None:
            raise LtlError(f"unexpected character {text[pos]!r} at column {pos + 1}")
        tok = m.group("sym") or m.group("ident")
        tokens.append((tok, pos + 1))
        pos = m.end()
    tokens.append(("", len(text) + 1))
    return tokens


class _LtlParser:
    def __init__(self, tokens, declared: Optional[set]):
        self.tokens = tokens
        self.i = 0
        self.declared = declared

    def peek(self):
        return self.tokens[self.i][0]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self):
        node = self.implies()
        tok, col = self.tokens[self.i]
        if tok:
            raise LtlError(f"unexpected trailing input {tok!r} at column {col}")
        return node

    def implies(self):
        node = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(node, self.implies())
        return node

    def disjunction(self):
        node = self.conjunction()
        while self.peek() == "|":
            self.take()
            node = Or(node, self.conjunction())
        return node

    def conjunction(self):
        node = self.until()
        while self.peek() == "&":
            self.take()
            node = And(node, self.until())
        return node

    def until(self):
        node = self.unary()
        if self.peek() in ("U", "W"):
            op, _ = self.take()
            rhs = self.until()
            return Until(node, rhs) if op == "U" else WeakUntil(node, rhs)
        return node

    def unary(self):
        tok, col = self.take()
        if tok == "!":
            return Not(self.unary())
        if tok in ("G", "[]"):
            return Always(self.unary())
        if tok in ("F", "<>"):
            return Eventually(self.unary())
        if tok == "X":
            return Next(self.unary())
        if tok == "(":
            node = self.implies()
            close, ccol = self.take()
            if close != ")":
                raise LtlError(f"expected ')' at column {ccol}")
            return node
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        if tok and tok not in _KEYWORDS and re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", tok):
            if self.declared is not None and tok not in self.declared:
                raise LtlError(f"undeclared atom {tok!r} at column {col}")
            return Atom(tok)
        raise LtlError(f"expected formula, found {tok or 'end of input'!r} "
                       f"at column {col}")


def parse_ltl(text: str, declared_atoms: Optional[Sequence[str]] = None):
    declared = set(declared_atoms) if declared_atoms is not None else None
    return _LtlParser(_lex(text), declared).parse()


def print_ltl(node) -> str:
    if isinstance(node, Atom):
        return ("!" if node.complement else "") + node.name
    if isinstance(node, TrueF):
        return "true"
    if isinstance(node, FalseF):
        return "false"
    if isinstance(node, Not):
        return f"!({print_ltl(node.arg)})"
    if isinstance(node, Next):
        return f"X ({print_ltl(node.arg)})"
    if isinstance(node, Always):
        return f"G ({print_ltl(node.arg)})"
    if isinstance(node, Eventually):
        return f"F ({print_ltl(node.arg)})"
    ops = {And: "&", Or: "|", Implies: "->", Until: "U", WeakUntil: "W"}
    return f"({print_ltl(node.lhs)} {ops[type(node)]} {print_ltl(node.rhs)})"


# ---------------------------------------------------------------------------
# positive normal form
# ---------------------------------------------------------------------------

def to_pnf(node):
    """Push negations onto atoms; negated atoms become complement atoms.

    Output uses only atoms, true/false, and/or, X, U, W and the derived G/F.
    """
    if isinstance(node, (Atom, TrueF, FalseF)):
        return node
    if isinstance(node, Not):
        return _negate(node.arg)
    if isinstance(node, Implies):
        return Or(_negate(node.lhs), to_pnf(node.rhs))
    if isinstance(node, And):
        return And(to_pnf(node.lhs), to_pnf(node.rhs))
    if isinstance(node, Or):
        return Or(to_pnf(node.lhs), to_pnf(node.rhs))
    if isinstance(node, Next):
        return Next(to_pnf(node.arg))
    if isinstance(node, Always):
        return Always(to_pnf(node.arg))
    if isinstance(node, Eventually):
        return Eventually(to_pnf(node.arg))
    if isinstance(node, Until):
        return Until(to_pnf(node.lhs), to_pnf(node.rhs))
    if isinstance(node, WeakUntil):
        return WeakUntil(to_pnf(node.lhs), to_pnf(node.rhs))
    raise LtlError(f"unknown node {node!r}")


def _negate(node):
    if isinstance(node, Atom):
        return Atom(node.name, not node.complement)
    if isinstance(node, TrueF):
        return FALSE
    if isinstance(node, FalseF):
        return TRUE
    if isinstance(node, Not):
        return to_pnf(node.arg)
    if isinstance(node, Implies):
        return And(to_pnf(node.lhs), _negate(node.rhs))
    if isinstance(node, And):
        return Or(_negate(node.lhs), _negate(node.rhs))
    if isinstance(node, Or):
        return And(_negate(node.lhs), _negate(node.rhs))
    if isinstance(node, Next):
        return Next(_negate(node.arg))
    if isinstance(node, Always):
        return Eventually(_negate(node.arg))
    if isinstance(node, Eventually):
        return Always(_negate(node.arg))
    if isinstance(node, Until):
        # not (p U q)  ==  (!q) W (!p & !q)
        np, nq = _negate(node.lhs), _negate(node.rhs)
        return WeakUntil(nq, And(np, nq))
    if isinstance(node, WeakUntil):
        np, nq = _negate(node.lhs), _negate(node.rhs)
        return Until(nq, And(np, nq))
    raise LtlError(f"unknown node {node!r}")


def complement_atoms(node) -> set:
    """Complement atoms appearing in a formula (post-PNF bookkeeping)."""
    out = set()

    def walk(n):
        if isinstance(n, Atom):
            if n.complement:
                out.add(n.name)
        elif isinstance(n, (Not, Next, Always, Eventually)):
            walk(n.arg)
        elif isinstance(n, (And, Or, Implies, Until, WeakUntil)):
            walk(n.lhs)
            walk(n.rhs)

    walk(node)
    return out


# ---------------------------------------------------------------------------
# fragment classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Safety:
    invariant: object


@dataclass(frozen=True)
class Reach:
    goal: object


@dataclass(frozen=True)
class ReachAvoid:
    goal: object
    invariant: object


@dataclass(frozen=True)
class Recurrence:
    goal: object
    invariant: object = TRUE


@dataclass(frozen=True)
class Unsupported:
    reason: str


@dataclass(frozen=True)
class ClassifiedSpec:
    fragment: object
    initial_atoms: tuple = ()


def is_boolean(node) -> bool:
    if isinstance(node, (Atom, TrueF, FalseF)):
        return True
    if isinstance(node, (And, Or)):
        return is_boolean(node.lhs) and is_boolean(node.rhs)
    return False


def _conjuncts(node):
    if isinstance(node, And):
        yield from _conjuncts(node.lhs)
        yield from _conjuncts(node.rhs)
    else:
        yield node


def classify(node) -> ClassifiedSpec:
    """Sort a PNF formula into a synthesizable shape.

    Leading atom conjuncts constrain the initial state only.  Recognized:
    G b, F b, G b1 & F b2, b1 U b2, G F b (optionally with a G b1 conjunct).
    Everything else comes back Unsupported with the reason.
    """
    initial = []
    invariants = []
    goals = []
    untils = []
    recurrences = []
    for c in _conjuncts(node):
        if isinstance(c, Atom):
            initial.append(c)
        elif isinstance(c, Always) and is_boolean(c.arg):
            invariants.append(c.arg)
        elif isinstance(c, Always) and isinstance(c.arg, Eventually) \
                and is_boolean(c.arg.arg):
            recurrences.append(c.arg.arg)
        elif isinstance(c, Eventually) and is_boolean(c.arg):
            goals.append(c.arg)
        elif isinstance(c, Until) and is_boolean(c.lhs) and is_boolean(c.rhs):
            untils.append((c.lhs, c.rhs))
        else:
            return ClassifiedSpec(
                Unsupported(f"conjunct {print_ltl(c)} is outside the "
                            f"safety/reach/reach-avoid/recurrence fragments"),
                tuple(initial))
    initial_t = tuple(initial)
    invariant = TRUE
    for inv in invariants:
        invariant = inv if invariant == TRUE else And(invariant, inv)
    shapes = (len(goals) > 0) + (len(untils) > 0) + (len(recurrences) > 0)
    if shapes > 1 or len(goals) > 1 or len(untils) > 1 or len(recurrences) > 1:
        return ClassifiedSpec(
            Unsupported("multiple temporal objectives cannot be combined"),
            initial_t)
    if untils:
        if invariants:
            return ClassifiedSpec(
                Unsupported("an until objective cannot carry extra G conjuncts"),
                initial_t)
        lhs, rhs = untils[0]
        return ClassifiedSpec(ReachAvoid(goal=rhs, invariant=lhs), initial_t)
    if recurrences:
        return ClassifiedSpec(Recurrence(goal=recurrences[0], invariant=invariant),
                              initial_t)
    if goals:
        if invariants:
            return ClassifiedSpec(ReachAvoid(goal=goals[0], invariant=invariant),
                                  initial_t)
        return ClassifiedSpec(Reach(goal=goals[0]), initial_t)
    return ClassifiedSpec(Safety(invariant=invariant), initial_t)


# ---------------------------------------------------------------------------
# three-valued bounded monitor
# ---------------------------------------------------------------------------

class Verdict(enum.Enum):
    SAT = "SAT"
    VIOLATED = "VIOLATED"
    UNKNOWN = "UNKNOWN"


_T, _F, _U = 1, 0, 2


def _and3(a, b):
    if a == _F or b == _F:
        return _F
    if a == _T and b == _T:
        return _T
    return _U


def _or3(a, b):
    if a == _T or b == _T:
        return _T
    if a == _F and b == _F:
        return _F
    return _U


def _not3(a):
    return {_T: _F, _F: _T, _U: _U}[a]


def holds_in_labels(node, labels) -> bool:
    """Two-valued evaluation of a boolean formula over one label set."""
    if isinstance(node, Atom):
        return (node.name not in labels) if node.complement else (node.name in labels)
    if isinstance(node, TrueF):
        return True
    if isinstance(node, FalseF):
        return False
    if isinstance(node, Not):
        return not holds_in_labels(node.arg, labels)
    if isinstance(node, And):
        return holds_in_labels(node.lhs, labels) and holds_in_labels(node.rhs, labels)
    if isinstance(node, Or):
        return holds_in_labels(node.lhs, labels) or holds_in_labels(node.rhs, labels)
    raise LtlError(f"not a boolean formula: {print_ltl(node)}")


def monitor(node, trace: Sequence) -> Verdict:
    """Three-valued verdict of a formula on a finite trace of label sets.

    Verdicts are decided only by prefix-forced information (until/weak-until
    unfoldings with an unknown tail); distinctions that manifest only at
    infinity remain UNKNOWN.
    """
    if len(trace) == 0:
        raise LtlError("monitor needs a non-empty trace")
    n = len(trace)
    memo: dict = {}

    def ev(f, i):
        if i >= n:
            return _U
        key = (id(f), i)
        if key in memo:
            return memo[key]
        if isinstance(f, Atom):
            inside = f.name in trace[i]
            v = _T if (inside != f.complement) else _F
        elif isinstance(f, TrueF):
            v = _T
        elif isinstance(f, FalseF):
            v = _F
        elif isinstance(f, Not):
            v = _not3(ev(f.arg, i))
        elif isinstance(f, And):
            v = _and3(ev(f.lhs, i), ev(f.rhs, i))
        elif isinstance(f, Or):
            v = _or3(ev(f.lhs, i), ev(f.rhs, i))
        elif isinstance(f, Implies):
            v = _or3(_not3(ev(f.lhs, i)), ev(f.rhs, i))
        elif isinstance(f, Next):
            v = ev(f.arg, i + 1)
        elif isinstance(f, Always):
            v = _and3(ev(f.arg, i), ev(f, i + 1))
        elif isinstance(f, Eventually):
            v = _or3(ev(f.arg, i), ev(f, i + 1))
        elif isinstance(f, (Until, WeakUntil)):
            v = _or3(ev(f.rhs, i), _and3(ev(f.lhs, i), ev(f, i + 1)))
        else:
            raise LtlError(f"unknown node {f!r}")
        memo[key] = v
        return v

    return {_T: Verdict.SAT, _F: Verdict.VIOLATED, _U: Verdict.UNKNOWN}[ev(node, 0)]
