"""The dihedral group of order 8 on bit triples, its operation family and
the search for idempotent palette block symmetric members.

Elements are triples ``(x1, x2, x3)`` of bits with

    x o y = (x1 + y1, x2 + y2, x3 + y3 + x1*y2)   (mod 2).

An operation of the family is given by an arity ``N``, a bit vector ``a``
and a bit matrix ``c`` with ``c[i][j] + c[j][i] = a[i]*a[j]`` for
``i != j``; it computes

    f1 = sum a_i x_i1,  f2 = sum a_i x_i2,
    f3 = sum a_i x_i3 + sum_{i,j} c[i][j] x_i1 x_j2.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Sequence

from .errors import ParseError, ResourceError, UsageError
from .poly import FiniteFunction, is_polymorphism
from .templates import G8_ELEMENTS, Template, d4_base

G8 = tuple[int, int, int]
IDENTITY: G8 = (0, 0, 0)

# bit triple -> word in r, s
ISOMORPHISM = {
    (0, 0, 0): "1",
    (0, 0, 1): "r2",
    (1, 1, 0): "r",
    (1, 1, 1): "r3",
    (0, 1, 0): "s",
    (0, 1, 1): "sr2",
    (1, 0, 0): "sr",
    (1, 0, 1): "sr3",
}


def to_bits(x) -> G8:
    if isinstance(x, str):
        if len(x) != 3 or any(ch not in "01" for ch in x):
            raise UsageError(f"not an element: {x!r}")
        return int(x[0]), int(x[1]), int(x[2])
    x = tuple(x)
    if len(x) != 3 or any(b not in (0, 1) for b in x):
        raise UsageError(f"not an element: {x!r}")
    return x  # type: ignore[return-value]


def to_str(x: G8) -> str:
    return "".join(map(str, x))


def compose(x, y) -> G8:
    x, y = to_bits(x), to_bits(y)
    return ((x[0] + y[0]) % 2, (x[1] + y[1]) % 2, (x[2] + y[2] + x[0] * y[1]) % 2)


def inverse(x) -> G8:
    x = to_bits(x)
    return (x[0], x[1], (x[2] + x[0] * x[1]) % 2)


def power(x, k: int) -> G8:
    out = IDENTITY
    for _ in range(k):
        out = compose(out, x)
    return out


def _word(w: str) -> tuple[int, int]:
    """``s^i r^j`` as ``(i, j)``."""
    i = 1 if w.startswith("s") else 0
    rest = w[i:]
    if rest in ("", "1"):
        return i, 0
    return i, 1 if rest == "r" else int(rest[1:])


def _word_mul(p: tuple[int, int], q: tuple[int, int]) -> tuple[int, int]:
    # s^i r^j s^k r^l = s^(i+k) r^((-1)^k j + l)
    i, j = p
    k, l = q
    return (i + k) % 2, ((-j if k else j) + l) % 4


def check_group_presentation() -> bool:
    """``r^4 = s^2 = 1`` and ``rs = sr^3`` hold, and the element naming is a
    multiplication-preserving bijection onto ``s^i r^j``."""
    r, s = (1, 1, 0), (0, 1, 0)
    ok = power(r, 4) == IDENTITY and power(s, 2) == IDENTITY
    ok = ok and compose(r, s) == compose(s, power(r, 3))
    words = {x: _word(w) for x, w in ISOMORPHISM.items()}
    ok = ok and len(set(words.values())) == 8
    for x in ISOMORPHISM:
        for y in ISOMORPHISM:
            if words[compose(x, y)] != _word_mul(words[x], words[y]):
                return False
    return ok


def d4_relations() -> Template:
    return d4_base()


# ----------------------------------------------------------------------------
# the operation family


@dataclass(frozen=True)
class D4Op:
    a: tuple[int, ...]
    c: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.a)
        if len(self.c) != n or any(len(row) != n for row in self.c):
            raise UsageError("c must be an N x N matrix")
        if any(v not in (0, 1) for v in self.a) or any(v not in (0, 1) for row in self.c for v in row):
            raise UsageError("entries must be bits")
        for i in range(n):
            for j in range(i + 1, n):
                if (self.c[i][j] + self.c[j][i]) % 2 != self.a[i] * self.a[j]:
                    raise UsageError(f"c[{i}][{j}] + c[{j}][{i}] must equal a[{i}]*a[{j}]")

    @property
    def arity(self) -> int:
        return len(self.a)

    @classmethod
    def compose_op(cls) -> "D4Op":
        return cls((1, 1), ((0, 1), (0, 0)))

    @classmethod
    def projection(cls, n: int = 1, i: int = 0) -> "D4Op":
        a = tuple(int(k == i) for k in range(n))
        return cls(a, tuple((0,) * n for _ in range(n)))

    def to_obj(self) -> dict:
        return {"arity": self.arity, "a": list(self.a), "c": [list(r) for r in self.c]}


def random_d4op(n: int, rng: random.Random) -> D4Op:
    a = tuple(rng.randint(0, 1) for _ in range(n))
    c = [[0] * n for _ in range(n)]
    for i in range(n):
        c[i][i] = rng.randint(0, 1)
        for j in range(i + 1, n):
            c[i][j] = rng.randint(0, 1)
            c[j][i] = (c[i][j] + a[i] * a[j]) % 2
    return D4Op(a, tuple(map(tuple, c)))


def all_d4ops(n: int):
    """Every member of the family of arity ``n``."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for a in product((0, 1), repeat=n):
        for diag in product((0, 1), repeat=n):
            for upper in product((0, 1), repeat=len(pairs)):
                c = [[0] * n for _ in range(n)]
                for i in range(n):
                    c[i][i] = diag[i]
                for (i, j), v in zip(pairs, upper):
                    c[i][j] = v
                    c[j][i] = (v + a[i] * a[j]) % 2
                yield D4Op(a, tuple(map(tuple, c)))


def eval_d4op(op: D4Op, args: Sequence) -> G8:
    if len(args) != op.arity:
        raise UsageError(f"expected {op.arity} arguments, got {len(args)}")
    xs = [to_bits(x) for x in args]
    f1 = sum(a * x[0] for a, x in zip(op.a, xs)) % 2
    f2 = sum(a * x[1] for a, x in zip(op.a, xs)) % 2
    f3 = sum(a * x[2] for a, x in zip(op.a, xs))
    for i, xi in enumerate(xs):
        if xi[0]:
            row = op.c[i]
            for j, xj in enumerate(xs):
                if xj[1] and row[j]:
                    f3 += 1
    return f1, f2, f3 % 2


def d4op_function(op: D4Op) -> FiniteFunction:
    return FiniteFunction(
        f"d4op_{op.arity}",
        G8_ELEMENTS,
        op.arity,
        lambda x: to_str(eval_d4op(op, x)),
    )


def d4op_is_polymorphism(op: D4Op, **kw) -> bool:
    return is_polymorphism(d4op_function(op), d4_relations(), **kw).ok


# ----------------------------------------------------------------------------
# terms in the group operation


def generate_by_terms(op: D4Op) -> str:
    """A term in ``*`` (the group operation) and ``^-1`` defining ``op``.

    Variables with ``a_i = 1`` in increasing order, then one commutator
    ``(xi*xj*xi^-1*xj^-1)`` for each ``i < j`` with ``c[j][i] = 1`` and one
    square ``(xi*xi)`` for each ``c[i][i] = 1``.  ``e`` is the identity.
    """
    n = op.arity
    parts = [f"x{i + 1}" for i in range(n) if op.a[i]]
    for i in range(n):
        for j in range(i + 1, n):
            if op.c[j][i]:
                parts.append(f"(x{i + 1}*x{j + 1}*x{i + 1}^-1*x{j + 1}^-1)")
    for i in range(n):
        if op.c[i][i]:
            parts.append(f"(x{i + 1}*x{i + 1})")
    return "*".join(parts) if parts else "e"


_TOKEN = re.compile(r"\s*(x\d+|e|\^-1|\*|\(|\))")


def _tokens(term: str) -> list[str]:
    pos, out = 0, []
    term = term.rstrip()
    while pos < len(term):
        m = _TOKEN.match(term, pos)
        if not m:
            raise ParseError(f"$.term[{pos}]", f"unexpected text {term[pos:pos + 10]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def evaluate_term(term: str, args: Sequence) -> G8:
    xs = [to_bits(x) for x in args]
    toks = _tokens(term)
    k = 0

    def product_():
        nonlocal k
        val = factor()
        while k < len(toks) and toks[k] == "*":
            k += 1
            val = compose(val, factor())
        return val

    def factor():
        nonlocal k
        if k >= len(toks):
            raise ParseError("$.term", "unexpected end of term")
        t = toks[k]
        k += 1
        if t == "(":
            val = product_()
            if k >= len(toks) or toks[k] != ")":
                raise ParseError("$.term", "missing ')'")
            k += 1
        elif t == "e":
            val = IDENTITY
        elif t.startswith("x"):
            i = int(t[1:]) - 1
            if not 0 <= i < len(xs):
                raise ParseError("$.term", f"variable {t} out of range")
            val = xs[i]
        else:
            raise ParseError("$.term", f"unexpected token {t!r}")
        while k < len(toks) and toks[k] == "^-1":
            k += 1
            val = inverse(val)
        return val

    val = product_()
    if k != len(toks):
        raise ParseError("$.term", f"trailing token {toks[k]!r}")
    return val


def term_round_trip(op: D4Op) -> bool:
    """Evaluate the generated term against the closed form on all inputs."""
    term = generate_by_terms(op)
    elems = list(ISOMORPHISM)
    return all(evaluate_term(term, xs) == eval_d4op(op, xs) for xs in product(elems, repeat=op.arity))


# ----------------------------------------------------------------------------
# GF(2) systems with derivation tracking


class Gf2System:
    """Affine equations over GF(2) on named bits, eliminated incrementally.

    Each stored row remembers which input equations were added to form it,
    so an inconsistency comes with the exact set of equations whose sum is
    ``0 = 1``.
    """

    def __init__(self, nvars: int) -> None:
        self.nvars = nvars
        self.labels: list = []
        self.pivots: dict[int, tuple[int, int, int]] = {}  # col -> (bits, rhs, combo)
        self.conflict: list[int] | None = None

    def add(self, bits: int, rhs: int, label) -> bool:
        """Add one equation; returns False once the system is inconsistent."""
        if self.conflict is not None:
            return False
        k = len(self.labels)
        self.labels.append(label)
        combo = 1 << k
        while bits:
            p = bits.bit_length() - 1
            row = self.pivots.get(p)
            if row is None:
                self.pivots[p] = (bits, rhs, combo)
                return True
            bits ^= row[0]
            rhs ^= row[1]
            combo ^= row[2]
        if rhs:
            self.conflict = [i for i in range(combo.bit_length()) if combo >> i & 1]
            return False
        return True

    def solution(self) -> list[int]:
        """One solution (free bits set to 0); requires consistency."""
        if self.conflict is not None:
            raise UsageError("system is inconsistent")
        x = [0] * self.nvars
        for p in sorted(self.pivots):
            bits, rhs, _ = self.pivots[p]
            v = rhs
            rest = bits ^ (1 << p)
            while rest:
                q = rest.bit_length() - 1
                v ^= x[q]
                rest ^= 1 << q
            x[p] = v
        return x


# ----------------------------------------------------------------------------
# non-existence of idempotent palette block symmetric members


@dataclass
class NonexistenceResult:
    result: str  # "infeasible" | "witness"
    n: int
    l: int
    abelian_control: bool
    candidates: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    witness: dict | None = None

    def to_obj(self) -> dict:
        out = {
            "result": self.result,
            "n": self.n,
            "l": self.l,
            "arity": self.n * (2 * self.l + 1),
            "abelian_control": self.abelian_control,
            "candidates": len(self.candidates),
        }
        if self.result == "infeasible":
            out["trace"] = self.trace
        else:
            out["witness"] = self.witness
        return out


def _layout(n: int, l: int):
    """Coordinates of each block and each group for the paired shape."""
    blocks = []
    pos = 0
    for _ in range(n):
        for size in (l + 1, l):
            blocks.append(list(range(pos, pos + size)))
            pos += size
    groups = [blocks[2 * g] + blocks[2 * g + 1] for g in range(n)]
    return pos, blocks, groups


def _a_candidates(n: int, l: int, N: int, blocks) -> list[tuple[int, ...]]:
    """Block-constant ``a`` with odd total weight, in increasing order."""
    out = []
    for pattern in product((0, 1), repeat=2 * n):
        if sum(len(blocks[b]) for b in range(2 * n) if pattern[b]) % 2 != 1:
            continue
        a = [0] * N
        for b, v in enumerate(pattern):
            for i in blocks[b]:
                a[i] = v
        out.append(tuple(a))
    out.sort()
    return out


def _equation(label, a, N, blocks, groups, abelian: bool) -> tuple[int, int]:
    """Bits over the ``c`` unknowns (``c[i][j]`` at ``i*N + j``) and rhs."""
    kind = label[0]
    if kind == "coupling":
        _, i, j = label
        bits = (1 << (i * N + j)) | (1 << (j * N + i))
        rhs = 0 if abelian else a[i] * a[j]
        return bits, rhs
    if kind == "swap":
        # tuples with (1,0,0) at i and on group h, (0,1,0) at j and on
        # group k, (0,0,0) elsewhere: the third component is
        # c_ij + sum_{q in G_k} c_iq + sum_{p in G_h} c_pj + const
        _, h, k, i, j, i0, j0 = label
        bits = 0
        for ii, jj in ((i, j), (i0, j0)):
            bits ^= 1 << (ii * N + jj)
            for q in groups[k]:
                bits ^= 1 << (ii * N + q)
            for p in groups[h]:
                bits ^= 1 << (p * N + jj)
        return bits, 0
    raise UsageError(f"unknown equation label {label!r}")


def _labels(n: int, blocks, groups, N: int):
    """Coupling equations, then the substitution equations per block."""
    labels = []
    for i, j in combinations(range(N), 2):
        labels.append(("coupling", i, j))
    for g in range(n):
        others = [x for x in range(n) if x != g]
        for b in (2 * g, 2 * g + 1):
            B = blocks[b]
            if len(B) < 2:
                continue
            pairs = [(i, j) for i in B for j in B if i != j]
            for h in others:
                for k in others:
                    # the zero element must fill a group of its own
                    if k == h or len(others) < 3:
                        continue
                    i0, j0 = pairs[0]
                    for i, j in pairs[1:]:
                        labels.append(("swap", h, k, i, j, i0, j0))
    return labels


def check_palette_nonexistence(
    n: int, l: int, abelian_control: bool = False, max_candidates: int = 1 << 16
) -> NonexistenceResult:
    """Search the family for an idempotent operation that is palette block
    symmetric for ``n`` groups of blocks of sizes ``l+1`` and ``l``.

    Only necessary conditions are imposed: idempotency and first-component
    symmetry force ``a`` to be constant on blocks with odd weight; for each
    such ``a`` the substitution equations and the coupling rule form a
    linear system in ``c``.  If every system is inconsistent no such
    operation exists, and the trace lists, per candidate ``a``, equations
    whose sum is ``0 = 1``.  ``abelian_control`` replaces the coupling
    right-hand side by 0.
    """
    if n < 1 or l < 1:
        raise UsageError("n and l must be positive")
    N, blocks, groups = _layout(n, l)
    cands = _a_candidates(n, l, N, blocks)
    if len(cands) > max_candidates:
        raise ResourceError(f"{len(cands)} candidate vectors exceed the cap {max_candidates}")
    labels = _labels(n, blocks, groups, N)
    block_of = {i: b for b, blk in enumerate(blocks) for i in blk}
    local: list[list] = [[] for _ in blocks]
    for lab in labels:
        i, j = lab[-2:] if lab[0] == "coupling" else lab[3:5]
        if block_of[i] == block_of[j]:
            local[block_of[i]].append(lab)
    res = NonexistenceResult("infeasible", n, l, abelian_control, candidates=cands)
    for a in cands:
        sysm = Gf2System(N * N)
        # equations inside the blocks where a = 1 usually clash on their own
        first = [lab for b, blk in enumerate(blocks) if a[blk[0]] for lab in local[b]]
        for lab in first + labels:
            bits, rhs = _equation(lab, a, N, blocks, groups, abelian_control)
            if not sysm.add(bits, rhs, lab):
                break
        if sysm.conflict is not None:
            res.trace.append(
                {
                    "a_blocks": [a[blk[0]] for blk in blocks],
                    "equations": [list(sysm.labels[i]) for i in sysm.conflict],
                }
            )
            continue
        x = sysm.solution()
        c = [[x[i * N + j] for j in range(N)] for i in range(N)]
        res.result = "witness"
        res.witness = {"a": list(a), "c": c, "a_blocks": [a[blk[0]] for blk in blocks]}
        res.trace = []
        return res
    return res


def replay_trace(res: NonexistenceResult) -> bool:
    """Re-derive every listed equation and confirm each sums to ``0 = 1``,
    and that the candidates cover every block-constant ``a`` of odd weight."""
    if res.result != "infeasible":
        return False
    N, blocks, groups = _layout(res.n, res.l)
    cands = _a_candidates(res.n, res.l, N, blocks)
    if len(res.trace) != len(cands):
        return False
    valid_labels = set(_labels(res.n, blocks, groups, N))
    for entry, a in zip(res.trace, cands):
        if entry["a_blocks"] != [a[blk[0]] for blk in blocks]:
            return False
        bits, rhs = 0, 0
        for lab in entry["equations"]:
            lab = tuple(lab)
            if lab not in valid_labels:
                return False
            b, r = _equation(lab, a, N, blocks, groups, res.abelian_control)
            bits ^= b
            rhs ^= r
        if bits != 0 or rhs != 1:
            return False
    return True


def palette_shape(n: int, l: int):
    from .poly import PaletteShape

    return PaletteShape.paired(n, l)


__all__ = [
    "compose",
    "inverse",
    "check_group_presentation",
    "d4_relations",
    "D4Op",
    "eval_d4op",
    "generate_by_terms",
    "evaluate_term",
    "term_round_trip",
    "d4op_is_polymorphism",
    "Gf2System",
    "check_palette_nonexistence",
    "replay_trace",
]
