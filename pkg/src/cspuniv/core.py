"""Instance model, mutation primitives, serialization and the brute-force oracle."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Iterable, Mapping, Sequence

from .errors import ParseError, ResourceError, UsageError

Element = str
Tuple_ = tuple[str, ...]
Assignment = dict[str, str]

DEFAULT_ORACLE_CAP = 10**8


@dataclass(frozen=True)
class Constraint:
    """A constraint ``R(x_1, ..., x_m)`` with its relation listed explicitly.

    ``relation`` is kept as a sorted tuple of distinct tuples so that two
    constraints with the same extension compare (and hash) equal.
    """

    id: str
    scope: tuple[str, ...]
    relation: tuple[Tuple_, ...]

    def __post_init__(self) -> None:
        if not self.scope:
            raise UsageError(f"constraint {self.id!r} has an empty scope")
        rel = tuple(sorted(set(tuple(t) for t in self.relation)))
        m = len(self.scope)
        for t in rel:
            if len(t) != m:
                raise UsageError(
                    f"constraint {self.id!r}: tuple {t!r} has arity {len(t)}, expected {m}"
                )
        object.__setattr__(self, "scope", tuple(self.scope))
        object.__setattr__(self, "relation", rel)

    @property
    def arity(self) -> int:
        return len(self.scope)

    def positions(self, var: str) -> list[int]:
        return [i for i, v in enumerate(self.scope) if v == var]


class Instance:
    """An immutable CSP instance: variables, ordered domains, constraints.

    Variables keep the order they were given in; algorithms that need a
    normative order use :meth:`sorted_variables`.  Domains keep insertion
    order.  Instances are hashable, which lets algorithm results be cached.
    """

    __slots__ = ("variables", "domains", "constraints", "_key", "_hash", "_by_id")

    def __init__(
        self,
        variables: Iterable[str],
        domains: Mapping[str, Iterable[str]],
        constraints: Iterable[Constraint],
        *,
        validate: bool = True,
    ) -> None:
        variables = tuple(variables)
        doms = {v: tuple(dict.fromkeys(domains[v])) for v in variables} if validate else {
            v: tuple(domains[v]) for v in variables
        }
        constraints = tuple(constraints)
        if validate:
            _validate(variables, domains, doms, constraints)
        self.variables = variables
        self.domains = MappingProxyType(doms)
        self.constraints = constraints
        self._by_id = {c.id: i for i, c in enumerate(constraints)}
        self._key = (variables, tuple(doms[v] for v in variables), constraints)
        self._hash = hash(self._key)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return self._hash == other._hash and self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return (
            f"Instance({len(self.variables)} vars, {len(self.constraints)} constraints, "
            f"sizes={[len(self.domains[v]) for v in self.variables]})"
        )

    def sorted_variables(self) -> list[str]:
        return sorted(self.variables)

    def constraint(self, cid: str) -> Constraint:
        try:
            return self.constraints[self._by_id[cid]]
        except KeyError:
            raise UsageError(f"unknown constraint {cid!r}") from None

    def constraint_ids(self) -> list[str]:
        return [c.id for c in self.constraints]

    def sorted_constraints(self) -> list[Constraint]:
        return sorted(self.constraints, key=lambda c: c.id)

    def has_empty(self) -> bool:
        """True when some domain or some relation is empty."""
        return any(not d for d in self.domains.values()) or any(
            not c.relation for c in self.constraints
        )

    def replace(
        self,
        domains: Mapping[str, Sequence[str]] | None = None,
        constraints: Sequence[Constraint] | None = None,
    ) -> "Instance":
        """Build a sibling instance without re-validating.

        Callers guarantee the invariants (used by the mutation primitives).
        """
        return Instance(
            self.variables,
            self.domains if domains is None else domains,
            self.constraints if constraints is None else constraints,
            validate=False,
        )


def _validate(variables, raw_domains, doms, constraints) -> None:
    if len(set(variables)) != len(variables):
        raise UsageError("duplicate variable ids")
    for v in variables:
        if v not in raw_domains:
            raise UsageError(f"variable {v!r} has no domain")
    seen = set()
    for c in constraints:
        if c.id in seen:
            raise UsageError(f"duplicate constraint id {c.id!r}")
        seen.add(c.id)
        for v in c.scope:
            if v not in doms:
                raise UsageError(f"constraint {c.id!r} mentions unknown variable {v!r}")
        dsets = [set(doms[v]) for v in c.scope]
        for t in c.relation:
            for i, a in enumerate(t):
                if a not in dsets[i]:
                    raise UsageError(
                        f"constraint {c.id!r}: value {a!r} not in domain of {c.scope[i]!r}"
                    )


def make_instance(
    domains: Mapping[str, Sequence[str]],
    constraints: Iterable[tuple[str, Sequence[str], Iterable[Sequence[str]]]],
    variables: Sequence[str] | None = None,
) -> Instance:
    """Convenience constructor from plain python data."""
    cons = [Constraint(cid, tuple(scope), tuple(tuple(t) for t in rel)) for cid, scope, rel in constraints]
    return Instance(list(variables) if variables is not None else list(domains), domains, cons)


# ----------------------------------------------------------------------------
# verdicts and certificates


@dataclass
class Verdict:
    yes: bool
    certificate: Any = None
    info: dict = field(default_factory=dict)

    @property
    def answer(self) -> str:
        return "Yes" if self.yes else "No"

    def __bool__(self) -> bool:
        return self.yes


def check_assignment(inst: Instance, assignment: Mapping[str, str]) -> bool:
    """Validate a total assignment against every domain and constraint."""
    for v in inst.variables:
        if v not in assignment or assignment[v] not in inst.domains[v]:
            return False
    for c in inst.constraints:
        rel = set(c.relation)
        if tuple(assignment[v] for v in c.scope) not in rel:
            return False
    return True


# ----------------------------------------------------------------------------
# mutation primitives


def reduce_domain(inst: Instance, x: str, B: Iterable[str]) -> Instance:
    """Restrict ``D_x`` to ``B`` and drop tuples that leave ``B`` at any occurrence of ``x``."""
    if x not in inst.domains:
        raise UsageError(f"unknown variable {x!r}")
    keep = set(B)
    old = inst.domains[x]
    extra = keep.difference(old)
    if extra:
        raise UsageError(f"values {sorted(extra)!r} are not in the domain of {x!r}")
    doms = dict(inst.domains)
    doms[x] = tuple(a for a in old if a in keep)
    cons = []
    for c in inst.constraints:
        pos = c.positions(x)
        if pos and len(keep) < len(old):
            rel = tuple(t for t in c.relation if all(t[i] in keep for i in pos))
            if len(rel) != len(c.relation):
                c = _raw_constraint(c.id, c.scope, rel)
        cons.append(c)
    return inst.replace(doms, cons)


def change_constraint(inst: Instance, cid: str, R: Iterable[Sequence[str]]) -> Instance:
    """Replace the relation of constraint ``cid``; everything else is untouched."""
    old = inst.constraint(cid)
    rel = tuple(sorted(set(tuple(t) for t in R)))
    dsets = [set(inst.domains[v]) for v in old.scope]
    for t in rel:
        if len(t) != old.arity:
            raise UsageError(f"tuple {t!r} has arity {len(t)}, expected {old.arity}")
        for i, a in enumerate(t):
            if a not in dsets[i]:
                raise UsageError(f"value {a!r} not in the domain of {old.scope[i]!r}")
    new = _raw_constraint(old.id, old.scope, rel)
    cons = [new if c.id == cid else c for c in inst.constraints]
    return inst.replace(None, cons)


def _raw_constraint(cid: str, scope: tuple[str, ...], rel: tuple[Tuple_, ...]) -> Constraint:
    """Build a constraint from an already sorted, deduplicated relation."""
    c = Constraint.__new__(Constraint)
    object.__setattr__(c, "id", cid)
    object.__setattr__(c, "scope", scope)
    object.__setattr__(c, "relation", rel)
    return c


# ----------------------------------------------------------------------------
# brute-force oracle


def encode_for_search(inst: Instance, order: Sequence[str] | None = None):
    """Integer encoding used by the backtracking kernel.

    Returns ``(order, dom_sizes, cons)`` where each entry of ``cons`` is
    ``(scope_idx, strides, table)``; ``table`` is a bytes bitmap over the
    mixed-radix index of the scope values.
    """
    order = list(order) if order is not None else search_order(inst)
    pos = {v: i for i, v in enumerate(order)}
    vidx = {v: {a: k for k, a in enumerate(inst.domains[v])} for v in order}
    sizes = [len(inst.domains[v]) for v in order]
    cons = []
    for c in inst.constraints:
        scope = [pos[v] for v in c.scope]
        strides = []
        s = 1
        for v in reversed(c.scope):
            strides.append(s)
            s *= len(inst.domains[v])
        strides.reverse()
        if s > 50_000_000:
            raise ResourceError(f"constraint {c.id!r} table would have {s} cells")
        table = bytearray(s)
        for t in c.relation:
            table[sum(vidx[v][a] * st for v, a, st in zip(c.scope, t, strides))] = 1
        cons.append((scope, strides, bytes(table)))
    return order, sizes, cons


def search_order(inst: Instance) -> list[str]:
    """Static variable order: greedily pick the variable most tied to the chosen ones."""
    nbrs: dict[str, dict[str, int]] = {v: {} for v in inst.variables}
    for c in inst.constraints:
        for v in set(c.scope):
            for w in set(c.scope):
                if v != w:
                    nbrs[v][w] = nbrs[v].get(w, 0) + 1
    remaining = set(inst.variables)
    score = {v: 0 for v in inst.variables}
    order: list[str] = []
    while remaining:
        best = min(remaining, key=lambda v: (-score[v], len(inst.domains[v]), v))
        order.append(best)
        remaining.discard(best)
        for w, k in nbrs[best].items():
            score[w] += k
    return order


def brute_force_solve(inst: Instance, cap: int = DEFAULT_ORACLE_CAP) -> Verdict:
    """Exhaustive backtracking over the explicit tuples.

    Yes comes with a satisfying assignment.  Raises :class:`ResourceError`
    when the product of the domain sizes exceeds ``cap``.
    """
    from .kernels import backtrack

    total = 1
    for v in inst.variables:
        total *= len(inst.domains[v])
    if total > cap:
        raise ResourceError(f"search space {total} exceeds cap {cap}")
    if inst.has_empty():
        return Verdict(False)
    order, sizes, cons = encode_for_search(inst)
    sol = backtrack(sizes, cons)
    if sol is None:
        return Verdict(False)
    assignment = {v: inst.domains[v][k] for v, k in zip(order, sol)}
    if not check_assignment(inst, assignment):  # pragma: no cover - kernel bug guard
        raise AssertionError("oracle produced an invalid assignment")
    return Verdict(True, assignment)


# ----------------------------------------------------------------------------
# JSON


def instance_to_obj(inst: Instance) -> dict:
    return {
        "variables": list(inst.variables),
        "domains": {v: list(inst.domains[v]) for v in inst.variables},
        "constraints": [
            {"id": c.id, "scope": list(c.scope), "tuples": [list(t) for t in sorted(c.relation)]}
            for c in inst.constraints
        ],
    }


def save_instance(inst: Instance) -> bytes:
    return json.dumps(instance_to_obj(inst), indent=1, ensure_ascii=False).encode("utf-8")


def _expect(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ParseError(path, msg)


def instance_from_obj(obj: Any) -> Instance:
    _expect(isinstance(obj, dict), "$", "expected an object")
    for key in ("variables", "domains", "constraints"):
        _expect(key in obj, f"$.{key}", "missing key")
    variables = obj["variables"]
    _expect(isinstance(variables, list), "$.variables", "expected a list")
    for i, v in enumerate(variables):
        _expect(isinstance(v, str) and v != "", f"$.variables[{i}]", "expected a non-empty string")
    _expect(len(set(variables)) == len(variables), "$.variables", "duplicate variable")
    domains = obj["domains"]
    _expect(isinstance(domains, dict), "$.domains", "expected an object")
    for v in variables:
        _expect(v in domains, f"$.domains.{v}", "missing domain")
    for v, dom in domains.items():
        _expect(v in variables, f"$.domains.{v}", "domain for an undeclared variable")
        _expect(isinstance(dom, list), f"$.domains.{v}", "expected a list")
        for k, a in enumerate(dom):
            _expect(isinstance(a, str) and a != "", f"$.domains.{v}[{k}]", "expected a non-empty string")
        _expect(len(set(dom)) == len(dom), f"$.domains.{v}", "duplicate element")
    cons_raw = obj["constraints"]
    _expect(isinstance(cons_raw, list), "$.constraints", "expected a list")
    cons = []
    seen = set()
    for ci, c in enumerate(cons_raw):
        p = f"$.constraints[{ci}]"
        _expect(isinstance(c, dict), p, "expected an object")
        for key in ("id", "scope", "tuples"):
            _expect(key in c, f"{p}.{key}", "missing key")
        cid = c["id"]
        _expect(isinstance(cid, str) and cid != "", f"{p}.id", "expected a non-empty string")
        _expect(cid not in seen, f"{p}.id", "duplicate constraint id")
        seen.add(cid)
        scope = c["scope"]
        _expect(isinstance(scope, list) and len(scope) >= 1, f"{p}.scope", "expected a non-empty list")
        for k, v in enumerate(scope):
            _expect(isinstance(v, str) and v in domains, f"{p}.scope[{k}]", "unknown variable")
        tuples = c["tuples"]
        _expect(isinstance(tuples, list), f"{p}.tuples", "expected a list")
        dsets = [set(domains[v]) for v in scope]
        rel = []
        for ti, t in enumerate(tuples):
            tp = f"{p}.tuples[{ti}]"
            _expect(isinstance(t, list) and len(t) == len(scope), tp, "wrong arity")
            for k, a in enumerate(t):
                _expect(isinstance(a, str), f"{tp}[{k}]", "expected a string")
                _expect(a in dsets[k], f"{tp}[{k}]", f"value {a!r} not in the domain of {scope[k]!r}")
            rel.append(tuple(t))
        _expect(len(set(rel)) == len(rel), f"{p}.tuples", "duplicate tuple")
        cons.append(Constraint(cid, tuple(scope), tuple(rel)))
    return Instance(variables, domains, cons)


def load_instance(data: bytes | str) -> Instance:
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError("$", f"invalid JSON: {exc}") from None
    return instance_from_obj(obj)
