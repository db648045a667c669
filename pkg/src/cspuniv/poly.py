"""Finite functions, polymorphism checks and palette block properties.

A :class:`FiniteFunction` maps tuples over a finite domain to a codomain;
its arguments are split into blocks by a :class:`PaletteShape`.  A tuple
is *palette* when every element that occurs in it fills all blocks of some
designated group.  The block properties are decided through per-block
invariants:

* ``sym``  - the multiset of the block,
* ``tsym`` - the set of elements of the block,
* ``alt``  - signed counts: occurrences at odd positions minus occurrences
  at even positions, per element.
"""

from __future__ import annotations

import random
import re
from collections import Counter
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Sequence

from . import kernels
from .core import Instance, check_assignment, reduce_domain
from .errors import ParseError, PropertyViolation, ResourceError, UsageError
from .linrelax import LPVar, combination_certificate, find_d_solution
from .templates import Template

EXHAUSTIVE_CAP = 10**7
MIN_SAMPLES = 10**6
TABLE_CAP = 5 * 10**6

FLAVORS = ("sym", "tsym", "alt")


# ----------------------------------------------------------------------------
# functions and shapes


class FiniteFunction:
    """A total function ``domain^arity -> codomain`` with named arguments.

    ``rule`` takes a tuple of domain elements.  The value table is only
    built on demand (and refused above ``TABLE_CAP`` entries).
    """

    def __init__(
        self,
        name: str,
        domain: Sequence[str],
        arity: int | Sequence[str],
        rule: Callable[[tuple], str],
        codomain: Sequence[str] | None = None,
    ) -> None:
        self.name = name
        self.domain = tuple(domain)
        self.codomain = tuple(codomain) if codomain is not None else self.domain
        if isinstance(arity, int):
            self.arg_names = tuple(f"x{i + 1}" for i in range(arity))
        else:
            self.arg_names = tuple(arity)
        self.rule = rule
        self._table: list[int] | None = None
        self._cod_index = {b: k for k, b in enumerate(self.codomain)}

    @property
    def arity(self) -> int:
        return len(self.arg_names)

    def __call__(self, *args) -> str:
        if len(args) == 1 and isinstance(args[0], (tuple, list)):
            args = tuple(args[0])
        if len(args) != self.arity:
            raise UsageError(f"{self.name} takes {self.arity} arguments, got {len(args)}")
        out = self.rule(tuple(args))
        if out not in self._cod_index:
            raise PropertyViolation(f"{self.name}{args!r} = {out!r} is outside the codomain")
        return out

    def table_size(self) -> int:
        return len(self.domain) ** self.arity

    def table(self) -> list[int]:
        """Codomain indices in lexicographic order of the arguments."""
        if self._table is None:
            size = self.table_size()
            if size > TABLE_CAP:
                raise ResourceError(f"table of {self.name} would have {size} entries")
            rule, idx = self.rule, self._cod_index
            self._table = [idx[rule(args)] for args in product(self.domain, repeat=self.arity)]
        return self._table

    def spot_check(self, rng: random.Random, k: int = 64) -> None:
        """Re-evaluate random inputs against the cached table (purity check)."""
        if self._table is None:
            return
        n = len(self.domain)
        for _ in range(k):
            args = tuple(rng.choice(self.domain) for _ in range(self.arity))
            pos = 0
            for a in args:
                pos = pos * n + self.domain.index(a)
            if self._table[pos] != self._cod_index[self.rule(args)]:
                raise PropertyViolation(f"{self.name} is not deterministic at {args!r}")

    def __repr__(self) -> str:
        return f"FiniteFunction({self.name!r}, arity={self.arity})"


@dataclass(frozen=True)
class PaletteShape:
    """Block sizes plus the overlined groups.

    ``groups`` is a tuple of disjoint tuples of 0-based block indices.  With
    ``groups=None`` there is no palette restriction and every tuple counts.
    """

    block_sizes: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self) -> None:
        if not self.block_sizes or any(k < 1 for k in self.block_sizes):
            raise UsageError("block sizes must be positive")
        if self.groups is not None:
            seen: set[int] = set()
            for g in self.groups:
                if not g:
                    raise UsageError("empty palette group")
                for b in g:
                    if not 0 <= b < len(self.block_sizes):
                        raise UsageError(f"block index {b} out of range")
                    if b in seen:
                        raise UsageError("palette groups must be disjoint")
                    seen.add(b)

    @classmethod
    def overlined(cls, sizes: Sequence[int]) -> "PaletteShape":
        """Every block is its own group, e.g. ``(3̄,3̄,3̄)``."""
        return cls(tuple(sizes), tuple((i,) for i in range(len(sizes))))

    @classmethod
    def paired(cls, n: int, l: int) -> "PaletteShape":
        """``n`` groups, each a block of size ``l+1`` followed by one of size ``l``."""
        sizes = []
        groups = []
        for g in range(n):
            sizes += [l + 1, l]
            groups.append((2 * g, 2 * g + 1))
        return cls(tuple(sizes), tuple(groups))

    @classmethod
    def plain(cls, sizes: Sequence[int]) -> "PaletteShape":
        return cls(tuple(sizes), None)

    @property
    def arity(self) -> int:
        return sum(self.block_sizes)

    def offsets(self) -> list[int]:
        out, s = [], 0
        for k in self.block_sizes:
            out.append(s)
            s += k
        return out

    def split(self, t: Sequence) -> list[tuple]:
        if len(t) != self.arity:
            raise UsageError(f"tuple of length {len(t)} does not fit shape of arity {self.arity}")
        out, s = [], 0
        for k in self.block_sizes:
            out.append(tuple(t[s : s + k]))
            s += k
        return out

    def render(self) -> str:
        sizes = ",".join(map(str, self.block_sizes))
        if self.groups is None:
            return f"({sizes})"
        gs = ";".join(",".join(str(b + 1) for b in g) for g in self.groups)
        return f"({sizes}|{gs})"


_SHAPE_RE = re.compile(r"^\(\s*([0-9 ,]+?)\s*(?:\|\s*([0-9,; *]*)\s*)?\)$")


def parse_shape(text: str) -> PaletteShape:
    """Parse ``(k1,...,kn)``, ``(k1,...,kn|*)`` or ``(k1,...,kn|1,2;3)``.

    After the bar, ``*`` overlines every block separately; otherwise groups
    are ``;``-separated lists of 1-based block indices.
    """
    m = _SHAPE_RE.match(text.strip())
    if not m:
        raise ParseError("$.shape", f"cannot parse shape {text!r}")
    try:
        sizes = tuple(int(x) for x in m.group(1).split(",") if x.strip())
    except ValueError:
        raise ParseError("$.shape", f"bad block size in {text!r}") from None
    spec = m.group(2)
    try:
        if spec is None:
            return PaletteShape.plain(sizes)
        spec = spec.strip()
        if spec == "*":
            return PaletteShape.overlined(sizes)
        groups = []
        for part in spec.split(";"):
            if not part.strip():
                continue
            groups.append(tuple(int(x) - 1 for x in part.split(",") if x.strip()))
        return PaletteShape(sizes, tuple(groups))
    except (UsageError, ValueError) as e:
        raise ParseError("$.shape", str(e)) from None


def _flavor_list(shape: PaletteShape, flavors) -> list[str]:
    if isinstance(flavors, str):
        flavors = [flavors] * len(shape.block_sizes)
    flavors = list(flavors)
    if len(flavors) != len(shape.block_sizes):
        raise UsageError("one flavor per block is required")
    for fl, k in zip(flavors, shape.block_sizes):
        if fl not in FLAVORS:
            raise UsageError(f"unknown flavor {fl!r}")
        if fl == "alt" and k % 2 == 0:
            raise UsageError("alternating blocks must have odd size")
    return flavors


# ----------------------------------------------------------------------------
# invariants and palette tuples


def net_counts(block: Sequence) -> tuple:
    c: Counter = Counter()
    for i, a in enumerate(block):
        c[a] += 1 if i % 2 == 0 else -1
    return tuple(sorted((a, n) for a, n in c.items() if n))


def block_invariant(flavor: str, block: Sequence):
    if flavor == "sym":
        return tuple(sorted(block))
    if flavor == "tsym":
        return tuple(sorted(set(block)))
    if flavor == "alt":
        return net_counts(block)
    raise UsageError(f"unknown flavor {flavor!r}")


def is_palette_tuple(shape: PaletteShape, t: Sequence) -> bool:
    blocks = shape.split(t)
    if shape.groups is None:
        return True
    filled = set()
    for g in shape.groups:
        first = blocks[g[0]][0]
        if all(all(a == first for a in blocks[b]) for b in g):
            filled.add(first)
    return all(a in filled for a in t)


def palette_equivalent(shape: PaletteShape, flavors, t1: Sequence, t2: Sequence, block: int | None = None) -> bool:
    """Equivalence of two palette tuples under the block invariants.

    With ``block=None`` every block is compared through its invariant.  With
    ``block=i`` the tuples must agree exactly outside block ``i``; this is
    the relation the definition of a palette block function uses.
    """
    fl = _flavor_list(shape, flavors)
    if not (is_palette_tuple(shape, t1) and is_palette_tuple(shape, t2)):
        raise UsageError("both tuples must be palette")
    b1, b2 = shape.split(t1), shape.split(t2)
    for i, (x, y) in enumerate(zip(b1, b2)):
        if block is None or i == block:
            if block_invariant(fl[i], x) != block_invariant(fl[i], y):
                return False
        elif x != y:
            return False
    return True


def count_palette_upper_bound(shape: PaletteShape, n_elems: int) -> int:
    if shape.groups is None:
        return n_elems ** shape.arity
    grouped = {b for g in shape.groups for b in g}
    free = sum(k for i, k in enumerate(shape.block_sizes) if i not in grouped)
    total = 0
    # each group is either filled by a constant or left open
    for pattern in product(range(n_elems + 1), repeat=len(shape.groups)):
        used = len({p for p in pattern if p < n_elems})
        open_len = free + sum(
            sum(shape.block_sizes[b] for b in g) for g, p in zip(shape.groups, pattern) if p == n_elems
        )
        total += used ** open_len if open_len else 1
        if total > 10**12:
            break
    return total


def iter_palette_tuples(shape: PaletteShape, domain: Sequence[str]) -> Iterable[tuple]:
    """Every palette tuple over ``domain``, each once, in a fixed order."""
    if shape.groups is None:
        yield from product(domain, repeat=shape.arity)
        return
    offs = shape.offsets()
    seen: set[tuple] = set()
    ng = len(shape.groups)
    for pattern in product(range(len(domain) + 1), repeat=ng):
        fill = {}
        used = []
        for g, p in zip(shape.groups, pattern):
            if p < len(domain):
                for b in g:
                    fill[b] = domain[p]
                if domain[p] not in used:
                    used.append(domain[p])
        if not used:
            continue
        open_pos = [
            offs[b] + j for b, k in enumerate(shape.block_sizes) if b not in fill for j in range(k)
        ]
        base = [None] * shape.arity
        for b, a in fill.items():
            for j in range(shape.block_sizes[b]):
                base[offs[b] + j] = a
        for vals in product(used, repeat=len(open_pos)):
            t = list(base)
            for p, v in zip(open_pos, vals):
                t[p] = v
            t = tuple(t)
            if t not in seen and is_palette_tuple(shape, t):
                seen.add(t)
                yield t


def random_palette_tuple(shape: PaletteShape, domain: Sequence[str], rng: random.Random) -> tuple:
    if shape.groups is None:
        return tuple(rng.choice(domain) for _ in range(shape.arity))
    while True:
        offs = shape.offsets()
        fill = {}
        used = []
        for g in shape.groups:
            if rng.random() < 0.6:
                a = rng.choice(domain)
                for b in g:
                    fill[b] = a
                if a not in used:
                    used.append(a)
        if not used:
            continue
        t = []
        for b, k in enumerate(shape.block_sizes):
            if b in fill:
                t += [fill[b]] * k
            else:
                t += [rng.choice(used) for _ in range(k)]
        t = tuple(t)
        if is_palette_tuple(shape, t):
            return t


def _random_move(flavor: str, block: tuple, pool: Sequence[str], rng: random.Random) -> tuple:
    """A random block with the same invariant as ``block``."""
    b = list(block)
    if flavor == "sym":
        rng.shuffle(b)
    elif flavor == "tsym":
        support = sorted(set(b))
        b = support + [rng.choice(support) for _ in range(len(b) - len(support))]
        rng.shuffle(b)
    else:
        odd, even = b[0::2], b[1::2]
        rng.shuffle(odd)
        rng.shuffle(even)
        # swap a matched (odd, even) pair of equal values for another value
        for _ in range(rng.randint(0, 2)):
            pairs = [(i, j) for i in range(len(odd)) for j in range(len(even)) if odd[i] == even[j]]
            if pairs:
                i, j = rng.choice(pairs)
                z = rng.choice(pool)
                odd[i] = even[j] = z
        b = [None] * len(block)
        b[0::2], b[1::2] = odd, even
    return tuple(b)


# ----------------------------------------------------------------------------
# reports


@dataclass
class CheckReport:
    ok: bool
    mode: str
    checks: int = 0
    counterexample: dict | None = None
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok

    def to_obj(self) -> dict:
        out = {"ok": self.ok, "mode": self.mode, "checks": self.checks}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        if self.details:
            out["details"] = self.details
        return out


# ----------------------------------------------------------------------------
# polymorphism check


def _encode_relation(rel, index: dict, m: int):
    return [index[a] for t in rel for a in t]


def _bitmap(rel, index: dict, n: int, m: int):
    strides = [n ** (m - 1 - i) for i in range(m)]
    tab = bytearray(n**m)
    for t in rel:
        tab[sum(index[a] * s for a, s in zip(t, strides))] = 1
    return bytes(tab), strides


def _python_sampled(f: FiniteFunction, rel, dst_set, m: int, samples: int, seed: int):
    state = seed & kernels.py.MASK64
    r = len(rel)
    for _ in range(samples):
        choice = []
        for _k in range(f.arity):
            state, out = kernels.py.splitmix64(state)
            choice.append(out % r)
        image = tuple(f.rule(tuple(rel[c][i] for c in choice)) for i in range(m))
        if image not in dst_set:
            return choice
    return None


def is_polymorphism(
    f: FiniteFunction,
    src: Template,
    dst: Template | None = None,
    cap: int = EXHAUSTIVE_CAP,
    samples: int = MIN_SAMPLES,
    seed: int = 0,
    relations: Sequence[str] | None = None,
) -> CheckReport:
    """Does ``f`` map every choice of ``arity`` tuples of each relation of
    ``src`` (applied coordinatewise) into the matching relation of ``dst``?

    A relation is checked exhaustively when ``|R|^arity <= cap`` and by
    ``samples`` random selections otherwise; ``mode`` is ``"sampled"`` if
    any relation was sampled.
    """
    dst = dst if dst is not None else src
    if tuple(f.domain) != tuple(src.domain) or tuple(f.codomain) != tuple(dst.domain):
        raise UsageError("function domain/codomain do not match the templates")
    names = list(relations) if relations is not None else sorted(src.relations)
    for name in names:
        if name not in dst.relations:
            raise UsageError(f"relation {name!r} missing from the target template")
    n_src, n_dst = len(src.domain), len(dst.domain)
    sidx = {a: k for k, a in enumerate(src.domain)}
    didx = {a: k for k, a in enumerate(dst.domain)}
    use_table = f.table_size() <= TABLE_CAP
    modes = {}
    total = 0
    rng = random.Random(seed)
    for k, name in enumerate(names):
        rel = src.relations[name]
        m = src.arity(name)
        if not rel:
            modes[name] = "exhaustive"
            continue
        count = len(rel) ** f.arity
        exhaustive = count <= cap
        drel = dst.relations[name]
        bad = None
        if use_table:
            ftab = f.table()
            fstrides = [n_src ** (f.arity - 1 - i) for i in range(f.arity)]
            dtab, dstr = _bitmap(drel, didx, n_dst, m)
            rows = _encode_relation(rel, sidx, m)
            if exhaustive:
                bad = kernels.poly_exhaustive(rows, f.arity, ftab, fstrides, dtab, dstr, m)
            else:
                bad = kernels.poly_sampled(rows, f.arity, ftab, fstrides, dtab, dstr, m, samples, seed + k)
        else:
            if exhaustive:
                raise ResourceError(f"exhaustive check of {f.name} needs its {f.table_size()}-entry table")
            bad = _python_sampled(f, rel, set(drel), m, samples, seed + k)
        total += count if exhaustive else samples
        modes[name] = "exhaustive" if exhaustive else "sampled"
        if bad is not None:
            rows_used = [rel[i] for i in bad]
            image = tuple(f.rule(tuple(r[i] for r in rows_used)) for i in range(m))
            return CheckReport(
                False,
                "sampled" if "sampled" in modes.values() else "exhaustive",
                total,
                {"relation": name, "rows": [list(r) for r in rows_used], "image": list(image)},
                {"relations": modes},
            )
    f.spot_check(rng)
    mode = "sampled" if "sampled" in modes.values() else "exhaustive"
    return CheckReport(True, mode, total, None, {"relations": modes})


# ----------------------------------------------------------------------------
# palette block check


def is_palette_block(
    f: FiniteFunction,
    shape: PaletteShape,
    flavors,
    cap: int = 2 * 10**6,
    samples: int = 20000,
    seed: int = 0,
) -> CheckReport:
    """Check that ``f`` is constant on every class of palette tuples that
    differ only inside one block, with that block's invariant unchanged.

    Exhaustive when the palette tuples can be listed within ``cap``; random
    pairs otherwise.  Alternating blocks are judged by signed counts.
    """
    fl = _flavor_list(shape, flavors)
    if shape.arity != f.arity:
        raise UsageError(f"shape arity {shape.arity} differs from function arity {f.arity}")
    details = {"invariant_based": "alt" in fl}
    bound = count_palette_upper_bound(shape, len(f.domain))
    offs = shape.offsets()
    if bound <= cap:
        classes: list[dict] = [dict() for _ in shape.block_sizes]
        n = 0
        for t in iter_palette_tuples(shape, f.domain):
            n += 1
            val = f(t)
            blocks = shape.split(t)
            for i in range(len(blocks)):
                key = (t[: offs[i]], block_invariant(fl[i], blocks[i]), t[offs[i] + shape.block_sizes[i] :])
                prev = classes[i].get(key)
                if prev is None:
                    classes[i][key] = (t, val)
                elif prev[1] != val:
                    return CheckReport(
                        False,
                        "exhaustive",
                        n,
                        {"block": i, "a": list(prev[0]), "b": list(t), "f(a)": prev[1], "f(b)": val},
                        details,
                    )
        return CheckReport(True, "exhaustive", n, None, details)
    rng = random.Random(seed)
    done = 0
    for _ in range(samples * 4):
        if done >= samples:
            break
        a = random_palette_tuple(shape, f.domain, rng)
        i = rng.randrange(len(shape.block_sizes))
        blocks = shape.split(a)
        nb = _random_move(fl[i], blocks[i], sorted(set(a)), rng)
        b = a[: offs[i]] + nb + a[offs[i] + shape.block_sizes[i] :]
        if not is_palette_tuple(shape, b):
            continue
        done += 1
        fa, fb = f(a), f(b)
        if fa != fb:
            return CheckReport(False, "sampled", done, {"block": i, "a": list(a), "b": list(b), "f(a)": fa, "f(b)": fb}, details)
    return CheckReport(True, "sampled", done, None, details)


# ----------------------------------------------------------------------------
# concrete constructions


def _blocks_of(shape: PaletteShape):
    offs = shape.offsets()
    return [(o, o + k) for o, k in zip(offs, shape.block_sizes)]


def first_const_block(domain: Sequence[str], shape: PaletteShape) -> FiniteFunction:
    """Value of the first constant block, or the very first argument."""
    spans = _blocks_of(shape)

    def rule(x):
        for s, e in spans:
            v = x[s]
            if all(x[k] == v for k in range(s + 1, e)):
                return v
        return x[0]

    return FiniteFunction("first_const_block", domain, shape.arity, rule)


def first_unit_block(domain: Sequence[str], shape: PaletteShape) -> FiniteFunction:
    """Like :func:`first_const_block`, but a block counts as constant ``c``
    when its signed counts are exactly one ``c``; invariant for
    alternating blocks."""
    spans = _blocks_of(shape)

    def rule(x):
        for s, e in spans:
            nc = net_counts(x[s:e])
            if len(nc) == 1 and nc[0][1] == 1:
                return nc[0][0]
        return x[0]

    return FiniteFunction("first_unit_block", domain, shape.arity, rule)


Z2_PART = {"0": 0, "1": 1}
Z3_PART = {"0p": 0, "1p": 1, "2p": 2}
Z3_NAMES = ("0p", "1p", "2p")


def z2z3_alt(shape: PaletteShape, literal: bool = False) -> FiniteFunction:
    """Alternating sum over the first block that lies in one part.

    A block "lies in" the {0,1} part when the signed count of its {0,1}
    entries is 1 (so the signed count of the primed entries is 0), and in
    the primed part when that count is 0.  The alternating sum then runs
    over the entries of that part only, modulo 2 or 3.  Blocks entirely
    inside one part always qualify, and there the value is the plain
    alternating sum.  ``literal=True`` only accepts blocks entirely inside
    one part; that variant is a polymorphism but not palette block
    alternating.
    """
    spans = _blocks_of(shape)
    if any((e - s) % 2 == 0 for s, e in spans):
        raise UsageError("alternating blocks need odd size")

    def rule(x):
        for s, e in spans:
            blk = x[s:e]
            if literal:
                if all(v in Z2_PART for v in blk):
                    return str(sum((1 if i % 2 == 0 else -1) * Z2_PART[v] for i, v in enumerate(blk)) % 2)
                if all(v in Z3_PART for v in blk):
                    return Z3_NAMES[sum((1 if i % 2 == 0 else -1) * Z3_PART[v] for i, v in enumerate(blk)) % 3]
                continue
            t2 = sum((1 if i % 2 == 0 else -1) for i, v in enumerate(blk) if v in Z2_PART)
            if t2 == 1:
                return str(sum((1 if i % 2 == 0 else -1) * Z2_PART[v] for i, v in enumerate(blk) if v in Z2_PART) % 2)
            if t2 == 0:
                return Z3_NAMES[
                    sum((1 if i % 2 == 0 else -1) * Z3_PART[v] for i, v in enumerate(blk) if v in Z3_PART) % 3
                ]
        return x[0]

    name = "z2z3_alt_literal" if literal else "z2z3_alt"
    return FiniteFunction(name, ("0", "1", "0p", "1p", "2p"), shape.arity, rule)


def z2arrow2_sum(shape: PaletteShape, literal: bool = False) -> FiniteFunction:
    """Parity of the first block whose {0,1} entries have signed count 1.

    Only the {0,1} entries of that block are summed.  Without such a block
    the result is the first entry different from 2 (or 2 when there is
    none).  ``literal=True`` only accepts blocks entirely inside {0,1} and
    falls back to the first argument; that variant fails both checks.
    """
    spans = _blocks_of(shape)
    if any((e - s) % 2 == 0 for s, e in spans):
        raise UsageError("alternating blocks need odd size")

    def rule(x):
        for s, e in spans:
            blk = x[s:e]
            if literal:
                if all(v != "2" for v in blk):
                    return str(sum(int(v) for v in blk) % 2)
                continue
            t = sum((1 if i % 2 == 0 else -1) for i, v in enumerate(blk) if v != "2")
            if t == 1:
                return str(sum(int(v) for v in blk if v != "2") % 2)
        if literal:
            return x[0]
        for v in x:
            if v != "2":
                return v
        return "2"

    name = "z2arrow2_sum_literal" if literal else "z2arrow2_sum"
    return FiniteFunction(name, ("0", "1", "2"), shape.arity, rule)


def z2arrow2_ternary() -> FiniteFunction:
    def rule(x):
        if all(v in ("0", "1") for v in x):
            return str(sum(int(v) for v in x) % 2)
        if all(v == "2" for v in x):
            return "2"
        return next(v for v in x if v != "2")

    return FiniteFunction("z2arrow2_ternary", ("0", "1", "2"), 3, rule)


def conj_n(n: int) -> FiniteFunction:
    if n < 1:
        raise UsageError("arity must be positive")
    return FiniteFunction(f"conj_{n}", ("0", "1"), n, lambda x: "1" if all(v == "1" for v in x) else "0")


def majority_odd(n: int) -> FiniteFunction:
    if n < 1 or n % 2 == 0:
        raise UsageError("majority needs an odd arity")
    return FiniteFunction(
        f"majority_{n}", ("0", "1"), n, lambda x: "1" if 2 * sum(v == "1" for v in x) > n else "0"
    )


CONSTRUCTIONS = (
    "first_const_block",
    "first_unit_block",
    "z2z3_alt",
    "z2arrow2_sum",
    "z2arrow2_ternary",
    "conj_n",
    "majority_odd",
)

_ALIASES = {"majority": "majority_odd", "conj": "conj_n"}


def construct(
    name: str,
    shape: PaletteShape | None = None,
    arity: int | None = None,
    domain: Sequence[str] | None = None,
    literal: bool = False,
) -> FiniteFunction:
    """Build one of the named functions.

    Block-based constructions need ``shape`` (and ``domain`` for the two
    first-block rules); ``conj_n`` and ``majority_odd`` need ``arity``.
    """
    name = _ALIASES.get(name, name)
    if name in ("first_const_block", "first_unit_block"):
        if shape is None or domain is None:
            raise UsageError(f"{name} needs a shape and a domain")
        return (first_const_block if name == "first_const_block" else first_unit_block)(domain, shape)
    if name == "z2z3_alt":
        if shape is None:
            raise UsageError("z2z3_alt needs a shape")
        return z2z3_alt(shape, literal)
    if name == "z2arrow2_sum":
        if shape is None:
            raise UsageError("z2arrow2_sum needs a shape")
        return z2arrow2_sum(shape, literal)
    if name == "z2arrow2_ternary":
        return z2arrow2_ternary()
    if name in ("conj_n", "majority_odd"):
        if arity is None:
            if shape is None:
                raise UsageError(f"{name} needs an arity")
            arity = shape.arity
        return conj_n(arity) if name == "conj_n" else majority_odd(arity)
    raise UsageError(f"unknown construction {name!r}")


def parse_function(text: str, shape: PaletteShape | None, domain: Sequence[str]) -> FiniteFunction:
    """``name`` or ``name:arity`` as accepted on the command line."""
    name, _, param = text.partition(":")
    arity = None
    if param:
        try:
            arity = int(param)
        except ValueError:
            raise ParseError("$.function", f"bad parameter in {text!r}") from None
    return construct(name, shape=shape, arity=arity, domain=domain)


# ----------------------------------------------------------------------------
# solutions from a palette block symmetric polymorphism


def _multiset_tuple(inst: Instance, x: str, sol: dict) -> tuple:
    out = []
    for c in inst.domains[x]:
        out += [c] * sol.get(LPVar.val(x, c), 0)
    return tuple(out)


def build_solution_from_polymorphism(
    inst: Instance,
    f: FiniteFunction,
    shape: PaletteShape,
    d_solutions: Sequence[tuple[object, dict]],
) -> dict[str, str]:
    """Assemble ``x := f(a_x1, ..., a_xn)`` where block ``j`` of ``a_x``
    lists each value ``c`` exactly ``s_j(x^c)`` times.

    ``d_solutions[j]`` is ``(tag, s_j)`` with ``s_j`` a nonnegative integer
    solution whose sums equal the size of block ``j``.  The assembled
    assignment is validated; a failure raises :class:`PropertyViolation`.
    """
    if len(d_solutions) != len(shape.block_sizes):
        raise UsageError("one d-solution per block is required")
    if f.arity != shape.arity:
        raise UsageError("function arity does not match the shape")
    assignment = {}
    for x in inst.variables:
        args: list[str] = []
        for j, (tag, sol) in enumerate(d_solutions):
            blk = _multiset_tuple(inst, x, sol)
            if len(blk) != shape.block_sizes[j]:
                raise UsageError(f"d-solution {tag!r} does not have sum {shape.block_sizes[j]} at {x!r}")
            args += blk
        assignment[x] = f(tuple(args))
    if not check_assignment(inst, assignment):
        bad = [
            c.id for c in inst.constraints if tuple(assignment[v] for v in c.scope) not in set(c.relation)
        ]
        raise PropertyViolation(f"assembled assignment violates {bad}")
    return assignment


def singleton_restrictions(reduced: Instance) -> list[tuple[tuple[str, str], Instance]]:
    """The instances obtained by fixing one variable of ``reduced`` to one value."""
    out = []
    for x in reduced.sorted_variables():
        for a in reduced.domains[x]:
            out.append(((x, a), reduce_domain(reduced, x, [a])))
    return out


def common_block_size(instances: Sequence[Instance], limit: int | None = None) -> tuple[int, list]:
    """Smallest ``d`` for which every instance has a ``d``-solution.

    The search stops at ``Q*(Q+1)`` for the largest ``Q`` from the
    combination certificates, beyond which every instance is covered.
    """
    bound = 1
    for inst in instances:
        comb = combination_certificate(inst)
        if comb is None:
            raise UsageError("an instance has no BLP+AIP certificate")
        Q = comb[0]
        bound = max(bound, Q * (Q + 1))
    if limit is not None:
        bound = min(bound, limit)
    for d in range(1, bound + 1):
        sols = []
        for inst in instances:
            s = find_d_solution(inst, d)
            if s is None:
                break
            sols.append(s)
        else:
            return d, sols
    raise ResourceError(f"no common block size up to {bound}")


def synthesize_solution(inst: Instance, template: Template, function: str = "first_const_block") -> dict[str, str]:
    """Run Singl(BLP+AIP) and, on Yes, build a solution from a palette
    block symmetric polymorphism with one overlined block per singleton
    restriction."""
    from .algorithms import reduced_instance, run

    v = run("singl(blp>aip)", inst)
    if not v:
        raise UsageError("singl(blp>aip) answers No; there is nothing to build")
    reduced = reduced_instance(v)
    omega = singleton_restrictions(reduced)
    d, sols = common_block_size([r for _, r in omega])
    shape = PaletteShape.overlined([d] * len(omega))
    f = construct(function, shape=shape, domain=template.domain)
    return build_solution_from_polymorphism(inst, f, shape, [(tag, s) for (tag, _), s in zip(omega, sols)])


__all__ = [
    "FiniteFunction",
    "PaletteShape",
    "CheckReport",
    "parse_shape",
    "is_polymorphism",
    "is_palette_tuple",
    "palette_equivalent",
    "is_palette_block",
    "block_invariant",
    "net_counts",
    "construct",
    "parse_function",
    "build_solution_from_polymorphism",
    "synthesize_solution",
]
