"""Finite transition systems, uncertain overlays, and relation checkers.

Systems are immutable after a builder finalize step; the relation is stored
as (state, action)-grouped sorted successor runs so Post queries are slices.
Checkers decide the abstraction relation (uniform witness action over the
whole preimage of an abstract state), alternating simulation (per-state
witness, per-successor intersection), composition, and bounded trace
inclusion of refined strategies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


class TsysError(ValueError):
    pass


class InvalidOverlayError(TsysError):
    pass


class TransitionSystem:
    __slots__ = ("state_names", "action_names", "prop_names", "labels",
                 "_offsets", "_succ", "_state_idx", "_action_idx")

    def __init__(self, state_names, action_names, prop_names, labels,
                 offsets, succ):
        self.state_names = tuple(state_names)
        self.action_names = tuple(action_names)
        self.prop_names = tuple(prop_names)
        self.labels = tuple(frozenset(s) for s in labels)
        self._offsets = offsets
        self._succ = succ
        self._state_idx = {s: i for i, s in enumerate(self.state_names)}
        self._action_idx = {a: i for i, a in enumerate(self.action_names)}

    # -- shape ----------------------------------------------------------

    @property
    def num_states(self) -> int:
        return len(self.state_names)

    @property
    def num_actions(self) -> int:
        return len(self.action_names)

    @property
    def num_transitions(self) -> int:
        return int(self._succ.shape[0])

    def state_index(self, name: str) -> int:
        return self._state_idx[name]

    def action_index(self, name: str) -> int:
        return self._action_idx[name]

    # -- relation queries -------------------------------------------------

    def post(self, q: int, a: int) -> np.ndarray:
        base = q * self.num_actions + a
        return self._succ[self._offsets[base]:self._offsets[base + 1]]

    def post_set(self, q: int, a: int) -> frozenset:
        return frozenset(int(s) for s in self.post(q, a))

    def admissible(self, q: int) -> tuple:
        return tuple(a for a in range(self.num_actions)
                     if self._offsets[q * self.num_actions + a]
                     < self._offsets[q * self.num_actions + a + 1])

    def triples(self):
        na = self.num_actions
        for pair in range(self.num_states * na):
            for s in self._succ[self._offsets[pair]:self._offsets[pair + 1]]:
                yield pair // na, pair % na, int(s)

    def label_names(self, q: int) -> frozenset:
        return frozenset(self.prop_names[i] for i in self.labels[q])

    def raw_arrays(self):
        return self._offsets, self._succ

    def __eq__(self, other):
        if not isinstance(other, TransitionSystem):
            return NotImplemented
        return (self.state_names == other.state_names
                and self.action_names == other.action_names
                and self.prop_names == other.prop_names
                and self.labels == other.labels
                and np.array_equal(self._offsets, other._offsets)
                and np.array_equal(self._succ, other._succ))

    def __repr__(self):
        return (f"TransitionSystem({self.num_states} states, "
                f"{self.num_actions} actions, {self.num_transitions} transitions)")


class TransitionSystemBuilder:
    def __init__(self, state_names: Sequence[str], action_names: Sequence[str],
                 prop_names: Sequence[str] = ()):
        self.state_names = list(state_names)
        self.action_names = list(action_names)
        self.prop_names = list(prop_names)
        self._triples: set = set()
        self._labels = [set() for _ in state_names]

    def add_transition(self, q: int, a: int, q2: int) -> "TransitionSystemBuilder":
        nq, na = len(self.state_names), len(self.action_names)
        if not (0 <= q < nq and 0 <= a < na and 0 <= q2 < nq):
            raise TsysError(f"transition ({q}, {a}, {q2}) out of range")
        self._triples.add((q, a, q2))
        return self

    def set_label(self, q: int, props: Iterable[int]) -> "TransitionSystemBuilder":
        props = set(props)
        if any(not 0 <= p < len(self.prop_names) for p in props):
            raise TsysError(f"label for state {q} uses an undeclared proposition")
        self._labels[q] = props
        return self

    def finalize(self, require_no_terminal: bool = True) -> TransitionSystem:
        nq, na = len(self.state_names), len(self.action_names)
        triples = sorted(self._triples)
        keys = np.array([q * na + a for q, a, _ in triples], dtype=np.int64)
        succ = np.array([s for _, _, s in triples], dtype=np.int64)
        offsets = np.zeros(nq * na + 1, dtype=np.int64)
        if len(keys):
            np.add.at(offsets, keys + 1, 1)
        np.cumsum(offsets, out=offsets)
        ts = TransitionSystem(self.state_names, self.action_names,
                              self.prop_names, self._labels, offsets, succ)
        if require_no_terminal:
            for q in range(nq):
                if not ts.admissible(q):
                    raise TsysError(
                        f"terminal state {self.state_names[q]!r}: every state "
                        f"needs at least one admissible action")
        return ts


@dataclass(frozen=True)
class UncertainOverlay:
    """Extra transitions disjoint from R that never enable new actions."""

    triples: frozenset

    @classmethod
    def from_triples(cls, triples) -> "UncertainOverlay":
        return cls(frozenset((int(q), int(a), int(s)) for q, a, s in triples))

    def validate(self, ts: TransitionSystem):
        for q, a, s in sorted(self.triples):
            if s in ts.post_set(q, a):
                raise InvalidOverlayError(
                    f"overlay triple ({q}, {a}, {s}) duplicates a nominal transition")
            if len(ts.post(q, a)) == 0:
                raise InvalidOverlayError(
                    f"overlay triple ({q}, {a}, {s}) would enable a new action: "
                    f"state {q} has no nominal {a}-successor")


def apply_overlay(ts: TransitionSystem, overlay: UncertainOverlay) -> TransitionSystem:
    """Union of the nominal relation and the overlay; labels and actions kept."""
    overlay.validate(ts)
    builder = TransitionSystemBuilder(ts.state_names, ts.action_names, ts.prop_names)
    for q, a, s in ts.triples():
        builder.add_transition(q, a, s)
    for q, a, s in overlay.triples:
        builder.add_transition(q, a, s)
    for q in range(ts.num_states):
        builder.set_label(q, ts.labels[q])
    return builder.finalize()


class Relation:
    """Sparse binary relation with forward and inverse adjacency."""

    __slots__ = ("pairs", "_fwd", "_inv")

    def __init__(self, pairs: Iterable[tuple]):
        self.pairs = tuple(sorted({(int(a), int(b)) for a, b in pairs}))
        fwd: dict = {}
        inv: dict = {}
        for a, b in self.pairs:
            fwd.setdefault(a, []).append(b)
            inv.setdefault(b, []).append(a)
        self._fwd = {k: tuple(v) for k, v in fwd.items()}
        self._inv = {k: tuple(v) for k, v in inv.items()}

    @classmethod
    def identity(cls, n: int) -> "Relation":
        return cls((i, i) for i in range(n))

    def image(self, a: int) -> tuple:
        return self._fwd.get(a, ())

    def preimage(self, b: int) -> tuple:
        return self._inv.get(b, ())

    def image_of_set(self, states) -> frozenset:
        out = set()
        for s in states:
            out.update(self._fwd.get(int(s), ()))
        return frozenset(out)

    def is_single_valued(self) -> bool:
        return all(len(v) == 1 for v in self._fwd.values())

    def domain_gaps(self, num_states: int) -> list:
        return [q for q in range(num_states) if q not in self._fwd]

    def __len__(self):
        return len(self.pairs)

    def __eq__(self, other):
        if not isinstance(other, Relation):
            return NotImplemented
        return self.pairs == other.pairs


def compose(alpha1: Relation, alpha2: Relation) -> Relation:
    """Pairs (a, c) with an intermediate witness: alpha2 after alpha1."""
    pairs = set()
    for a, b in alpha1.pairs:
        for c in alpha2.image(b):
            pairs.add((a, c))
    return Relation(pairs)


@dataclass
class CheckResult:
    passed: bool
    condition: Optional[int] = None  # violated condition number on FAIL
    counterexample: Optional[tuple] = None
    message: str = ""
    certificate: dict = field(default_factory=dict)  # (q1, q2, a2) -> a1

    def __bool__(self):
        return self.passed


def _shared_props(t1: TransitionSystem, t2: TransitionSystem):
    if set(t1.prop_names) != set(t2.prop_names):
        raise TsysError("checkers need a shared proposition set; got "
                        f"{sorted(t1.prop_names)} vs {sorted(t2.prop_names)}")


def check_abstraction(t1: TransitionSystem, t2: TransitionSystem,
                      alpha: Relation) -> CheckResult:
    """Decide whether t2 abstracts t1 through alpha.

    The witness action for each (q2, a2) must work uniformly over the whole
    preimage of q2, which is what makes the refined controller playable from
    quantized state information alone.
    """
    _shared_props(t1, t2)
    for q1 in range(t1.num_states):
        if not alpha.image(q1):
            return CheckResult(False, 1, (q1,),
                               f"state {t1.state_names[q1]!r} has no abstract image")
    for q1, q2 in alpha.pairs:
        if not t2.label_names(q2) <= t1.label_names(q1):
            return CheckResult(
                False, 3, (q1, q2),
                f"label of {t2.state_names[q2]!r} is not included in label of "
                f"{t1.state_names[q1]!r}")
    # uniform witnesses per (q2, a2), searched in ascending action order
    uniform: dict = {}
    for q2 in range(t2.num_states):
        pre = alpha.preimage(q2)
        for a2 in t2.admissible(q2):
            post2 = t2.post_set(q2, a2)
            good = []
            for a1 in range(t1.num_actions):
                if all(alpha.image_of_set(t1.post(q, a1)) <= post2 for q in pre):
                    good.append(a1)
            uniform[(q2, a2)] = good
    certificate = {}
    for q1, q2 in alpha.pairs:
        adm1 = set(t1.admissible(q1))
        for a2 in t2.admissible(q2):
            a1 = next((a for a in uniform[(q2, a2)] if a in adm1), None)
            if a1 is None:
                return CheckResult(
                    False, 2, (q1, q2, a2),
                    f"no action of {t1.state_names[q1]!r} covers "
                    f"({t2.state_names[q2]!r}, {t2.action_names[a2]!r}) uniformly "
                    f"over the preimage")
            certificate[(q1, q2, a2)] = a1
    return CheckResult(True, certificate=certificate)


def check_alternating_sim(t1: TransitionSystem, t2: TransitionSystem,
                          alpha: Relation) -> CheckResult:
    """Alternating simulation: per-successor intersection, per-state witness."""
    _shared_props(t1, t2)
    for q1 in range(t1.num_states):
        if not alpha.image(q1):
            return CheckResult(False, 1, (q1,),
                               f"state {t1.state_names[q1]!r} has no abstract image")
    for q1, q2 in alpha.pairs:
        if not t2.label_names(q2) <= t1.label_names(q1):
            return CheckResult(False, 3, (q1, q2), "label inclusion fails")
    certificate = {}
    for q1, q2 in alpha.pairs:
        for a2 in t2.admissible(q2):
            post2 = t2.post_set(q2, a2)
            a1 = next(
                (a for a in t1.admissible(q1)
                 if all(set(alpha.image(int(s))) & post2 for s in t1.post(q1, a))),
                None)
            if a1 is None:
                return CheckResult(
                    False, 2, (q1, q2, a2),
                    f"no action of {t1.state_names[q1]!r} keeps every successor "
                    f"related to some ({t2.state_names[q2]!r}, "
                    f"{t2.action_names[a2]!r})-successor")
            certificate[(q1, q2, a2)] = a1
    return CheckResult(True, certificate=certificate)


def implement_strategy(certificate: dict, alpha: Relation, mu2: dict) -> dict:
    """Play an abstract memoryless strategy through the relation.

    For each concrete state x, looks up the abstract action prescribed at the
    (lowest-index) related abstract state and returns the certified uniform
    witness action.  States whose abstract image has no strategy entry are
    left undefined.
    """
    mu1 = {}
    for x in sorted({a for a, _ in alpha.pairs}):
        for q in sorted(alpha.image(x)):
            a2 = mu2.get(q)
            if a2 is not None and (x, q, a2) in certificate:
                mu1[x] = certificate[(x, q, a2)]
                break
    return mu1


def bounded_trace_inclusion(t1: TransitionSystem, mu1: dict,
                            t2: TransitionSystem, mu2: dict,
                            alpha: Relation, horizon: int,
                            initial: Optional[Iterable[int]] = None) -> CheckResult:
    """Check that mu1-controlled executions lift through alpha to
    mu2-controlled executions with pointwise label inclusion, up to horizon."""
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    _shared_props(t1, t2)
    if initial is None:
        initial = sorted(mu1.keys())

    def lift_states(x, candidates):
        lx = t1.label_names(x)
        return frozenset(q for q in candidates if t2.label_names(q) <= lx)

    frontier = {}
    for x0 in initial:
        q0s = lift_states(x0, alpha.image(x0))
        if not q0s:
            return CheckResult(False, None, (x0,),
                               f"initial state {t1.state_names[x0]!r} has no "
                               f"label-compatible lift", {})
        frontier[(x0, q0s)] = (x0,)
    for _ in range(horizon):
        nxt = {}
        for (x, qs), prefix in frontier.items():
            a1 = mu1.get(x)
            if a1 is None:
                return CheckResult(False, None, prefix,
                                   f"concrete strategy undefined at "
                                   f"{t1.state_names[x]!r}", {})
            succ2 = set()
            for q in qs:
                a2 = mu2.get(q)
                if a2 is not None:
                    succ2.update(t2.post_set(q, a2))
            for s in t1.post(x, a1):
                s = int(s)
                qs_next = lift_states(s, set(alpha.image(s)) & succ2)
                if not qs_next:
                    return CheckResult(False, None, prefix + (s,),
                                       f"execution prefix cannot be lifted at "
                                       f"{t1.state_names[s]!r}", {})
                key = (s, qs_next)
                if key not in nxt:
                    nxt[key] = prefix + (s,)
        frontier = nxt
        if not frontier:
            break
    return CheckResult(True)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def dump_transition_system(ts: TransitionSystem, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("states " + " ".join(ts.state_names) + "\n")
        fh.write("actions " + " ".join(ts.action_names) + "\n")
        if ts.prop_names:
            fh.write("props " + " ".join(ts.prop_names) + "\n")
        for q, a, s in ts.triples():
            fh.write(f"{ts.state_names[q]} {ts.action_names[a]} "
                     f"{ts.state_names[s]}\n")
        for q in range(ts.num_states):
            if ts.labels[q]:
                names = sorted(ts.prop_names[i] for i in ts.labels[q])
                fh.write(f"{ts.state_names[q]} : " + " ".join(names) + "\n")


def load_transition_system(path) -> TransitionSystem:
    states = actions = None
    props: list = []
    triples = []
    labels = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, *rest = line.split()
            if head == "states":
                states = rest
            elif head == "actions":
                actions = rest
            elif head == "props":
                props = rest
            elif ":" in line.split():
                name, _, *plist = line.split()
                labels[name] = plist
            else:
                if len(line.split()) != 3:
                    raise TsysError(f"{path}:{lineno}: expected 'q a q2' triple")
                triples.append(line.split())
    if states is None or actions is None:
        raise TsysError(f"{path}: missing states/actions header")
    builder = TransitionSystemBuilder(states, actions, props)
    sidx = {s: i for i, s in enumerate(states)}
    aidx = {a: i for i, a in enumerate(actions)}
    pidx = {p: i for i, p in enumerate(props)}
    try:
        for q, a, s in triples:
            builder.add_transition(sidx[q], aidx[a], sidx[s])
        for name, plist in labels.items():
            builder.set_label(sidx[name], [pidx[p] for p in plist])
    except KeyError as exc:
        raise TsysError(f"{path}: undeclared name {exc.args[0]!r}") from None
    return builder.finalize()


def dump_relation(rel: Relation, t1: TransitionSystem, t2: TransitionSystem, path):
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in rel.pairs:
            fh.write(f"{t1.state_names[a]} ~ {t2.state_names[b]}\n")


def load_relation(path, t1: TransitionSystem, t2: TransitionSystem) -> Relation:
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3 or parts[1] != "~":
                raise TsysError(f"{path}:{lineno}: expected 'name1 ~ name2'")
            try:
                pairs.append((t1.state_index(parts[0]), t2.state_index(parts[2])))
            except KeyError:
                raise TsysError(f"{path}:{lineno}: undeclared state name") from None
    return Relation(pairs)
