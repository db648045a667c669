"""Composable decision procedures: ArcCons, BLP, AIP and their combinators.

Every procedure is sound: a No answer means the instance has no solution.
Specs are written in a small grammar::

    atom := arccons | blp | aip
    spec := atom | spec "&" spec | "arccons>" spec | "blp>" spec
          | "singl(" spec ")" | "csingl(" spec ")"
          | "singl(" spec ")>" spec | "csingl(" spec ")>" spec

``&`` binds loosest.  Parentheses may be used for grouping.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

from .core import Instance, Verdict, change_constraint, check_assignment, reduce_domain
from .errors import ParseError
from .linrelax import (
    LPVar,
    aip_instance,
    blp_instance,
    build_relaxation,
    prune_to_support,
)
from .propagation import arc_consistency

# ----------------------------------------------------------------------------
# syntax


@dataclass(frozen=True)
class Atom:
    name: str  # arccons | blp | aip


@dataclass(frozen=True)
class And:
    left: "Spec"
    right: "Spec"


@dataclass(frozen=True)
class ArcThen:
    inner: "Spec"


@dataclass(frozen=True)
class BlpThen:
    inner: "Spec"


@dataclass(frozen=True)
class Singl:
    inner: "Spec"


@dataclass(frozen=True)
class CSingl:
    inner: "Spec"


@dataclass(frozen=True)
class SinglThen:
    first: "Spec"
    then: "Spec"


@dataclass(frozen=True)
class CSinglThen:
    first: "Spec"
    then: "Spec"


Spec = Union[Atom, And, ArcThen, BlpThen, Singl, CSingl, SinglThen, CSinglThen]

ATOMS = ("arccons", "blp", "aip")
_TOKEN = re.compile(r"\s*(csingl\(|singl\(|arccons>|blp>|arccons|blp|aip|&|\)>|\(|\))")


def _tokenize(text: str) -> list[str]:
    pos = 0
    out = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"algorithm[{pos}]", f"unexpected input {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def parse_spec(text: str) -> Spec:
    """Parse an algorithm spec string into its syntax tree."""
    toks = _tokenize(text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise ParseError(f"algorithm[token {pos}]", f"expected {expected or 'a term'}, got {tok!r}")
        pos += 1
        return tok

    def spec():
        node = term()
        while peek() == "&":
            take("&")
            node = And(node, term())
        return node

    def term():
        tok = take()
        if tok in ATOMS:
            return Atom(tok)
        if tok == "arccons>":
            return ArcThen(term())
        if tok == "blp>":
            return BlpThen(term())
        if tok in ("singl(", "csingl("):
            inner = spec()
            if peek() == ")>":
                take(")>")
                then = term()
                return SinglThen(inner, then) if tok == "singl(" else CSinglThen(inner, then)
            take(")")
            return Singl(inner) if tok == "singl(" else CSingl(inner)
        if tok == "(":
            inner = spec()
            take(")")
            return inner
        raise ParseError(f"algorithm[token {pos - 1}]", f"unexpected {tok!r}")

    node = spec()
    if pos != len(toks):
        raise ParseError(f"algorithm[token {pos}]", f"trailing input {toks[pos]!r}")
    return node


def format_spec(s: Spec) -> str:
    """Inverse of :func:`parse_spec` (adds grouping parentheses when needed)."""

    def term(x):
        txt = format_spec(x)
        return f"({txt})" if isinstance(x, And) else txt

    if isinstance(s, Atom):
        return s.name
    if isinstance(s, And):
        return f"{format_spec(s.left)}&{term(s.right)}"
    if isinstance(s, ArcThen):
        return f"arccons>{term(s.inner)}"
    if isinstance(s, BlpThen):
        return f"blp>{term(s.inner)}"
    if isinstance(s, Singl):
        return f"singl({format_spec(s.inner)})"
    if isinstance(s, CSingl):
        return f"csingl({format_spec(s.inner)})"
    if isinstance(s, SinglThen):
        return f"singl({format_spec(s.first)})>{term(s.then)}"
    if isinstance(s, CSinglThen):
        return f"csingl({format_spec(s.first)})>{term(s.then)}"
    raise TypeError(f"not a spec: {s!r}")


# ----------------------------------------------------------------------------
# reduction traces


@dataclass(frozen=True)
class DomainRemoval:
    var: str
    element: str


@dataclass(frozen=True)
class TupleRemoval:
    cid: str
    tuple: tuple


@dataclass
class ReductionTrace:
    events: list = field(default_factory=list)
    final: Instance | None = None

    def replay(self, inst: Instance) -> Instance:
        cur = inst
        for ev in self.events:
            if isinstance(ev, DomainRemoval):
                cur = reduce_domain(cur, ev.var, [a for a in cur.domains[ev.var] if a != ev.element])
            else:
                rel = cur.constraint(ev.cid).relation
                cur = change_constraint(cur, ev.cid, [t for t in rel if t != ev.tuple])
        return cur


def diff_trace(before: Instance, after: Instance) -> ReductionTrace:
    """Events that take ``before`` to ``after``: domain removals, then the
    tuple removals not already implied by them."""
    events: list = []
    cur = before
    for v in before.variables:
        gone = [a for a in before.domains[v] if a not in after.domains[v]]
        for a in gone:
            events.append(DomainRemoval(v, a))
        if gone:
            cur = reduce_domain(cur, v, after.domains[v])
    for c in cur.constraints:
        keep = set(after.constraint(c.id).relation)
        for t in c.relation:
            if t not in keep:
                events.append(TupleRemoval(c.id, t))
    return ReductionTrace(events, after)


# ----------------------------------------------------------------------------
# evaluation


def _trivial(inst: Instance) -> Verdict | None:
    if inst.has_empty():
        return Verdict(False, info={"reason": "empty domain or relation"})
    return None


@lru_cache(maxsize=8192)
def _arccons(inst: Instance):
    return arc_consistency(inst)


def run_arccons(inst: Instance) -> Verdict:
    v = _trivial(inst)
    if v is not None:
        return v
    ok, red = _arccons(inst)
    if not ok:
        return Verdict(False)
    return Verdict(True, diff_trace(inst, red), {"reduced": red})


def run_blp(inst: Instance) -> Verdict:
    v = _trivial(inst)
    if v is not None:
        return v
    sol = blp_instance(inst, False)
    return Verdict(sol is not None, sol)


def run_aip(inst: Instance) -> Verdict:
    v = _trivial(inst)
    if v is not None:
        return v
    sol = aip_instance(inst, 1)
    return Verdict(sol is not None, sol)


class Runner:
    """Evaluates specs.  ``rng`` randomises the singleton sweep order.

    The normative sweep (``rng=None``) visits variables in lexicographic
    order and values in domain order; CSingl visits constraints by id and
    tuples in relation order.  Removals take effect immediately and sweeps
    repeat until one makes no change.
    """

    def __init__(self, rng: random.Random | None = None) -> None:
        self.rng = rng

    def run(self, spec: Spec | str, inst: Instance) -> Verdict:
        if isinstance(spec, str):
            spec = parse_spec(spec)
        return self._eval(spec, inst)

    def _eval(self, s: Spec, inst: Instance) -> Verdict:
        if isinstance(s, Atom):
            return ATOM_RUNNERS[s.name](inst)
        if isinstance(s, And):
            a = self._eval(s.left, inst)
            if not a:
                return Verdict(False, info={"failed": "left"})
            b = self._eval(s.right, inst)
            if not b:
                return Verdict(False, info={"failed": "right"})
            return Verdict(True, (a.certificate, b.certificate))
        if isinstance(s, ArcThen):
            a = run_arccons(inst)
            if not a:
                return a
            inner = self._eval(s.inner, a.info["reduced"])
            return Verdict(inner.yes, inner.certificate, {"reduced": a.info["reduced"], **inner.info})
        if isinstance(s, BlpThen):
            v = _trivial(inst)
            if v is not None:
                return v
            sol = blp_instance(inst, True)
            if sol is None:
                return Verdict(False, info={"reason": "LP infeasible"})
            pruned = prune_to_support(inst, sol)
            inner = self._eval(s.inner, pruned)
            return Verdict(inner.yes, inner.certificate, {"blp": sol, "pruned": pruned})
        if isinstance(s, (Singl, SinglThen)):
            inner = s.inner if isinstance(s, Singl) else s.first
            v = self._singl(inner, inst)
            if isinstance(s, Singl) or not v:
                return v
            then = self._eval(s.then, v.certificate.final)
            return Verdict(then.yes, then.certificate, {"trace": v.certificate})
        if isinstance(s, (CSingl, CSinglThen)):
            inner = s.inner if isinstance(s, CSingl) else s.first
            v = self._csingl(inner, inst)
            if isinstance(s, CSingl) or not v:
                return v
            then = self._eval(s.then, v.certificate.final)
            return Verdict(then.yes, then.certificate, {"trace": v.certificate})
        raise TypeError(f"not a spec: {s!r}")

    def _pairs(self, items: list) -> list:
        if self.rng is not None:
            items = list(items)
            self.rng.shuffle(items)
        return items

    def _singl(self, inner: Spec, inst: Instance) -> Verdict:
        v = _trivial(inst)
        if v is not None:
            return v
        cur = inst
        events: list = []
        last = None
        changed = True
        while changed:
            changed = False
            pairs = [(x, a) for x in sorted(cur.variables) for a in cur.domains[x]]
            for x, a in self._pairs(pairs):
                if a not in cur.domains[x]:
                    continue
                res = self._eval(inner, reduce_domain(cur, x, [a]))
                if res:
                    last = res.certificate
                    continue
                rest = [b for b in cur.domains[x] if b != a]
                events.append(DomainRemoval(x, a))
                cur = reduce_domain(cur, x, rest)
                changed = True
                if not rest:
                    return Verdict(False, ReductionTrace(events, cur), {"emptied": x})
        return Verdict(True, ReductionTrace(events, cur), {"inner": last, "reduced": cur})

    def _csingl(self, inner: Spec, inst: Instance) -> Verdict:
        v = _trivial(inst)
        if v is not None:
            return v
        cur = inst
        events: list = []
        last = None
        changed = True
        while changed:
            changed = False
            pairs = [(c.id, t) for c in cur.sorted_constraints() for t in c.relation]
            for cid, t in self._pairs(pairs):
                rel = cur.constraint(cid).relation
                if t not in rel:
                    continue
                res = self._eval(inner, change_constraint(cur, cid, [t]))
                if res:
                    last = res.certificate
                    continue
                rest = [u for u in rel if u != t]
                events.append(TupleRemoval(cid, t))
                cur = change_constraint(cur, cid, rest)
                changed = True
                if not rest:
                    return Verdict(False, ReductionTrace(events, cur), {"emptied": cid})
        return Verdict(True, ReductionTrace(events, cur), {"inner": last, "reduced": cur})


ATOM_RUNNERS = {"arccons": run_arccons, "blp": run_blp, "aip": run_aip}


def run(spec: Spec | str, inst: Instance, rng: random.Random | None = None) -> Verdict:
    """Evaluate ``spec`` on ``inst``."""
    return Runner(rng).run(spec, inst)


def reduced_instance(v: Verdict) -> Instance | None:
    """The reduced instance a Yes verdict carries, if any."""
    if isinstance(v.certificate, ReductionTrace):
        return v.certificate.final
    return v.info.get("reduced")


# ----------------------------------------------------------------------------
# certificate checks


def validate_certificate(inst: Instance, spec: Spec | str, v: Verdict) -> bool:
    """Independent re-check of the certificate attached to a Yes verdict."""
    if isinstance(spec, str):
        spec = parse_spec(spec)
    if not v.yes:
        return True
    cert = v.certificate
    if isinstance(spec, Atom):
        if spec.name == "arccons":
            return isinstance(cert, ReductionTrace) and cert.replay(inst) == cert.final and is_arc_consistent(cert.final)
        sysm = build_relaxation(inst, 1)
        if not sysm.satisfied_by(cert) or set(cert) != set(sysm.vars):
            return False
        if spec.name == "blp":
            return all(0 <= q <= 1 for q in cert.values())
        return all(isinstance(q, int) for q in cert.values())
    if isinstance(spec, (Singl, CSingl)):
        return isinstance(cert, ReductionTrace) and cert.replay(inst) == cert.final
    if isinstance(spec, BlpThen):
        sol = v.info["blp"]
        sysm = build_relaxation(inst, 1)
        if not sysm.satisfied_by(sol) or not all(0 <= q <= 1 for q in sol.values()):
            return False
        return validate_certificate(v.info["pruned"], spec.inner, Verdict(True, cert))
    return True


def is_arc_consistent(inst: Instance) -> bool:
    if inst.has_empty():
        return False
    for c in inst.constraints:
        for i, x in enumerate(c.scope):
            if {t[i] for t in c.relation} != set(inst.domains[x]):
                return False
    return True


def is_solution(inst: Instance, assignment: dict) -> bool:
    return check_assignment(inst, assignment)


__all__ = [
    "Atom",
    "And",
    "ArcThen",
    "BlpThen",
    "Singl",
    "CSingl",
    "SinglThen",
    "CSinglThen",
    "ReductionTrace",
    "DomainRemoval",
    "TupleRemoval",
    "parse_spec",
    "format_spec",
    "run",
    "Runner",
    "run_arccons",
    "run_blp",
    "run_aip",
    "validate_certificate",
    "LPVar",
]
