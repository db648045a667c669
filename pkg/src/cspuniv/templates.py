"""Concrete templates and the hand-built instances that separate the algorithms."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Sequence

from .core import Constraint, Instance
from .errors import UsageError


@dataclass(frozen=True)
class Template:
    """A finite relational structure: a domain and named relations."""

    name: str
    domain: tuple[str, ...]
    relations: dict = field(hash=False)  # name -> tuple of sorted tuples
    arities: dict = field(hash=False, default_factory=dict)

    def arity(self, rel: str) -> int:
        return self.arities[rel]

    def relation(self, name: str) -> tuple:
        try:
            return self.relations[name]
        except KeyError:
            raise UsageError(f"template {self.name!r} has no relation {name!r}") from None

    def to_obj(self) -> dict:
        return {
            "name": self.name,
            "domain": list(self.domain),
            "relations": {
                k: [list(t) for t in sorted(v)] for k, v in self.relations.items()
            },
        }


def _make(name: str, domain: Sequence[str], rels: dict, arities: dict | None = None) -> Template:
    """``arities`` is only needed for empty relations."""
    relations = {k: tuple(sorted(set(v))) for k, v in rels.items()}
    ar = {k: len(v[0]) for k, v in relations.items() if v}
    ar.update(arities or {})
    return Template(name, tuple(domain), relations, ar)


def _filter(domain: Sequence[str], m: int, pred: Callable) -> list[tuple]:
    return [t for t in product(domain, repeat=m) if pred(*t)]


class TemplateInstanceBuilder:
    """Collects relation applications and turns them into an :class:`Instance`.

    Every variable gets the full template domain.  Constraint ids are
    ``c1, c2, ...`` in application order unless given explicitly.
    """

    def __init__(self, template: Template) -> None:
        self.template = template
        self.apps: list[tuple[str, str, tuple[str, ...]]] = []
        self.vars: dict[str, None] = {}

    def add(self, rel: str, *scope: str, cid: str | None = None) -> "TemplateInstanceBuilder":
        m = self.template.arity(rel) if rel in self.template.relations else None
        if m is None:
            self.template.relation(rel)
        if m != len(scope):
            raise UsageError(f"relation {rel!r} has arity {m}, got {len(scope)} variables")
        cid = cid or f"c{len(self.apps) + 1}"
        self.apps.append((cid, rel, tuple(scope)))
        for v in scope:
            self.vars.setdefault(v)
        return self

    def variable(self, *names: str) -> "TemplateInstanceBuilder":
        for v in names:
            self.vars.setdefault(v)
        return self

    def build(self, sort_variables: bool = True) -> Instance:
        variables = sorted(self.vars) if sort_variables else list(self.vars)
        doms = {v: self.template.domain for v in variables}
        cons = [Constraint(cid, scope, self.template.relation(rel)) for cid, rel, scope in self.apps]
        return Instance(variables, doms, cons)


# ----------------------------------------------------------------------------
# classic templates

BOOL = ("0", "1")


def horn3sat() -> Template:
    clause = [t for t in product(BOOL, repeat=3) if t != ("1", "1", "0")]
    return _make("horn3sat", BOOL, {"clause": clause, "zero": [("0",)], "one": [("1",)]})


# names of the 16 binary Boolean relations, keyed by membership bits of
# (00, 01, 10, 11)
TWO_SAT_NAMES = {
    "0000": "empty",
    "0001": "both1",
    "0010": "gt",
    "0011": "x1",
    "0100": "lt",
    "0101": "y1",
    "0110": "neq",
    "0111": "or",
    "1000": "both0",
    "1001": "eq",
    "1010": "y0",
    "1011": "ge",
    "1100": "x0",
    "1101": "le",
    "1110": "nand",
    "1111": "full",
}


def two_sat() -> Template:
    pairs = list(product(BOOL, repeat=2))
    rels = {}
    for bits, name in TWO_SAT_NAMES.items():
        rels[name] = [p for p, bit in zip(pairs, bits) if bit == "1"]
    return _make("two_sat", BOOL, rels, {"empty": 2})


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, int(p**0.5) + 1))


def lin_relation_name(coeffs: Sequence[int]) -> str:
    """Name of ``a1*x1 + ... + an*xn = a0`` for ``coeffs = (a0, a1, ..., an)``."""
    return "eq_" + "_".join(str(a) for a in coeffs)


def lin(n: int, p: int) -> Template:
    """Linear equations mod ``p`` in ``n`` variables, one relation per extension."""
    if n < 1:
        raise UsageError("n must be at least 1")
    if not _is_prime(p):
        raise UsageError(f"{p} is not prime")
    dom = tuple(str(k) for k in range(p))
    rels: dict[str, list] = {}
    seen: dict[tuple, str] = {}
    empty_name = None
    for coeffs in product(range(p), repeat=n + 1):
        a0, a = coeffs[0], coeffs[1:]
        ext = tuple(
            tuple(str(v) for v in xs)
            for xs in product(range(p), repeat=n)
            if sum(ai * xi for ai, xi in zip(a, xs)) % p == a0
        )
        if ext in seen:
            continue
        name = lin_relation_name(coeffs)
        seen[ext] = name
        rels[name] = list(ext)
        if not ext:
            empty_name = name
    return _make(f"lin_{n}_{p}", dom, rels, {empty_name: n} if empty_name else {})


def lin_regular_relations(t: Template) -> list[str]:
    """Relations of a LIN template with at least two nonzero coefficients.

    Exactly these are column-regular (every value appears equally often in
    every column); an equation in one variable pins that variable.
    """
    out = []
    for name in t.relations:
        coeffs = [int(a) for a in name.split("_")[1:]]
        if sum(1 for a in coeffs[1:] if a) >= 2:
            out.append(name)
    return out


def bij5() -> Template:
    rho = [("0", "1"), ("1", "0"), ("2", "3"), ("3", "4"), ("4", "2")]
    return _make("bij5", tuple("01234"), {"rho": rho})


Z2Z3_DOMAIN = ("0", "1", "0p", "1p", "2p")
_Z2 = {"0": 0, "1": 1}
_Z3 = {"0p": 0, "1p": 1, "2p": 2}


def z2_union_z3() -> Template:
    rels = {}
    for a in (0, 1):
        rels[f"l2_{a}"] = _filter(
            Z2Z3_DOMAIN,
            3,
            lambda x, y, z, a=a: (
                all(v in _Z2 for v in (x, y, z)) and (_Z2[x] + _Z2[y] + _Z2[z]) % 2 == a
            )
            or all(v in _Z3 for v in (x, y, z)),
        )
    for b in (0, 1, 2):
        rels[f"l3_{b}"] = _filter(
            Z2Z3_DOMAIN,
            3,
            lambda x, y, z, b=b: (
                all(v in _Z3 for v in (x, y, z)) and (_Z3[x] + _Z3[y] + _Z3[z]) % 3 == b
            )
            or all(v in _Z2 for v in (x, y, z)),
        )
    return _make("z2_union_z3", Z2Z3_DOMAIN, rels)


def z2_arrow_2() -> Template:
    dom = ("0", "1", "2")
    rels = {}
    for n in (3, 4):
        for c in (0, 1):
            rel = [t for t in product("01", repeat=n) if sum(map(int, t)) % 2 == c]
            rel.append(("2",) * n)
            rels[f"L{n}_{c}"] = rel
    rels["u01"] = [("0",), ("1",)]
    rels["S"] = _filter(dom, 3, lambda x, y, z: x == y or z in ("0", "1"))
    return _make("z2_arrow_2", dom, rels)


# ----------------------------------------------------------------------------
# the dihedral template on Z2^3

G8_ELEMENTS = tuple(f"{a}{b}{c}" for a, b, c in product("01", repeat=3))


def bits(x: str) -> tuple[int, int, int]:
    return int(x[0]), int(x[1]), int(x[2])


def d4_predicates() -> dict[str, tuple[int, Callable]]:
    """The defining predicates of the dihedral template, on bit triples."""

    def L3_12(a, b, c, d):
        return (
            a[0] == b[0] and a[1] == b[1] and c[0] == d[0] and c[1] == d[1]
            and (a[2] + b[2]) % 2 == (c[2] + d[2]) % 2
        )

    def L23_1(a, b, c, d):
        return (
            a[0] == b[0] == c[0] == d[0]
            and (a[1] + b[1]) % 2 == (c[1] + d[1]) % 2
            and (a[2] + b[2]) % 2 == (c[2] + d[2]) % 2
        )

    def L13_2(a, b, c, d):
        return (
            a[1] == b[1] == c[1] == d[1]
            and (a[0] + b[0]) % 2 == (c[0] + d[0]) % 2
            and (a[2] + b[2]) % 2 == (c[2] + d[2]) % 2
        )

    def E12(x, y):
        return x[0] == y[1]

    def E23_0(x, y):
        return x[0] == 0 and y[0] == 0 and x[1] == y[2]

    def E13_0(x, y):
        return x[1] == 0 and y[1] == 0 and x[0] == y[2]

    def R(x, y):
        return x[0] == y[1] and x[1] == y[0] and (x[2] + y[2]) % 2 == (x[0] * y[0]) % 2

    def zero(x):
        return x == (0, 0, 0)

    return {
        "L3_12": (4, L3_12),
        "L23_1": (4, L23_1),
        "L13_2": (4, L13_2),
        "E12": (2, E12),
        "E23_0": (2, E23_0),
        "E13_0": (2, E13_0),
        "R": (2, R),
        "zero": (1, zero),
    }


def d4_base() -> Template:
    """The eight relations, materialised by filtering ``8^arity`` tuples."""
    rels = {}
    for name, (m, pred) in d4_predicates().items():
        rels[name] = [t for t in product(G8_ELEMENTS, repeat=m) if pred(*map(bits, t))]
    return _make("d4", G8_ELEMENTS, rels)


def d4_idemp() -> Template:
    base = d4_base()
    rels = dict(base.relations)
    for a in G8_ELEMENTS:
        rels[f"const_{a}"] = [(a,)]
    return _make("d4_idemp", G8_ELEMENTS, rels)


TEMPLATES: dict[str, Callable[[], Template]] = {
    "horn3sat": horn3sat,
    "two_sat": two_sat,
    "lin_3_2": lambda: lin(3, 2),
    "lin_3_3": lambda: lin(3, 3),
    "bij5": bij5,
    "z2_union_z3": z2_union_z3,
    "z2_arrow_2": z2_arrow_2,
    "d4_idemp": d4_idemp,
}


def get_template(name: str) -> Template:
    """Look a template up by name; ``lin_<n>_<p>`` accepts any parameters."""
    if name in TEMPLATES:
        return TEMPLATES[name]()
    if name.startswith("lin_"):
        try:
            _, n, p = name.split("_")
            return lin(int(n), int(p))
        except ValueError:
            pass
    raise UsageError(f"unknown template {name!r}")


# ----------------------------------------------------------------------------
# fooling instances


def _twosat_cycle() -> Instance:
    b = TemplateInstanceBuilder(two_sat())
    b.add("le", "x1", "x2").add("le", "x2", "x3").add("le", "x3", "x4").add("le", "x4", "x1")
    b.add("neq", "x1", "x3")
    return b.build()


def _lin32_contradiction() -> Instance:
    b = TemplateInstanceBuilder(lin(3, 2))
    b.add("eq_0_1_1_1", "x1", "x2", "x3").add("eq_1_1_1_1", "x1", "x2", "x3")
    return b.build()


def _bij5_cycle() -> Instance:
    b = TemplateInstanceBuilder(bij5())
    for s in (("x1", "x2"), ("x2", "x3"), ("x3", "x1"), ("x1", "x4"), ("x4", "x1")):
        b.add("rho", *s)
    return b.build()


def _z2z3_mixed() -> Instance:
    # contradictory on the {0,1} part and on the {0p,1p,2p} part at once
    b = TemplateInstanceBuilder(z2_union_z3())
    b.add("l2_0", "x", "y", "z").add("l2_1", "x", "y", "z")
    b.add("l3_0", "x", "y", "z").add("l3_1", "x", "y", "z")
    return b.build()


def _z2arrow2_chain() -> Instance:
    b = TemplateInstanceBuilder(z2_arrow_2())
    x = [f"x{i}" for i in range(19)]
    b.add("u01", x[1])
    b.add("L4_0", x[1], x[2], x[3], x[4]).add("L3_0", x[3], x[5], x[6]).add("L3_1", x[4], x[5], x[6])
    b.add("S", x[1], x[2], x[7])
    b.add("L4_0", x[7], x[8], x[9], x[10]).add("L3_0", x[9], x[11], x[12])
    b.add("L3_1", x[10], x[11], x[12])
    b.add("S", x[7], x[8], x[13])
    b.add("L4_0", x[13], x[14], x[15], x[16]).add("L4_0", x[13], x[14], x[17], x[18])
    b.add("L4_1", x[15], x[16], x[17], x[18])
    return b.build()


def _d4_main() -> Instance:
    b = TemplateInstanceBuilder(d4_idemp())
    b.add("L23_1", "x1", "x2", "x3", "w").add("L13_2", "y1", "y2", "y3", "w")
    b.add("R", "x1", "y1").add("R", "x2", "y2")
    b.add("L3_12", "x3", "y3", "u", "v")
    b.add("const_000", "u").add("const_001", "v")
    return b.build()


FOOLING = {
    "twosat_cycle": _twosat_cycle,
    "lin32_contradiction": _lin32_contradiction,
    "bij5_cycle": _bij5_cycle,
    "z2z3_mixed": _z2z3_mixed,
    "z2arrow2_chain": _z2arrow2_chain,
    "d4_main": _d4_main,
}


def horn_chain() -> Instance:
    """Unsatisfiable Horn instance refuted by unit propagation.

    ``x = 1``, ``y = 1``, clause ``x ∧ y → z`` and ``z = 0``.
    """
    b = TemplateInstanceBuilder(horn3sat())
    b.add("one", "x").add("one", "y").add("clause", "x", "y", "z").add("zero", "z")
    return b.build()


def fooling_instance(name: str) -> Instance:
    try:
        return FOOLING[name]()
    except KeyError:
        raise UsageError(f"unknown instance {name!r}; choose from {sorted(FOOLING)}") from None


def instance_names() -> list[str]:
    return list(FOOLING)


def template_of(name: str) -> Template:
    """The template each fooling instance is built over."""
    return {
        "twosat_cycle": two_sat,
        "lin32_contradiction": lambda: lin(3, 2),
        "bij5_cycle": bij5,
        "z2z3_mixed": z2_union_z3,
        "z2arrow2_chain": z2_arrow_2,
        "d4_main": d4_idemp,
    }[name]()


def iter_relations(t: Template) -> Iterable[tuple[str, tuple]]:
    return t.relations.items()


def random_instance(
    t: Template,
    rng,
    n_vars: int | None = None,
    n_cons: int | None = None,
    relations: Sequence[str] | None = None,
    max_vars: int = 6,
    max_cons: int = 6,
) -> Instance:
    """A random instance over ``t`` (scopes may repeat variables)."""
    n_vars = n_vars if n_vars is not None else rng.randint(1, max_vars)
    n_cons = n_cons if n_cons is not None else rng.randint(1, max_cons)
    names = list(relations) if relations is not None else sorted(t.relations)
    variables = [f"v{i}" for i in range(n_vars)]
    b = TemplateInstanceBuilder(t)
    b.variable(*variables)
    for _ in range(n_cons):
        rel = rng.choice(names)
        scope = [rng.choice(variables) for _ in range(t.arity(rel))]
        b.add(rel, *scope)
    return b.build()
