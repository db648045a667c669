import random
import zlib
from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cspuniv.algorithms import run
from cspuniv.core import make_instance
from cspuniv.errors import ParseError, PropertyViolation, UsageError
from cspuniv.poly import (
    FiniteFunction,
    PaletteShape,
    block_invariant,
    build_solution_from_polymorphism,
    construct,
    count_palette_upper_bound,
    first_const_block,
    first_unit_block,
    is_palette_block,
    is_palette_tuple,
    is_polymorphism,
    iter_palette_tuples,
    net_counts,
    palette_equivalent,
    parse_function,
    parse_shape,
    random_palette_tuple,
    synthesize_solution,
    z2arrow2_sum,
    z2arrow2_ternary,
    z2z3_alt,
)
from cspuniv.templates import Template, get_template, random_instance
from oracles import block_classes, naive_palette, naive_palette_block, naive_polymorphism, naive_sat

BOOL = ("0", "1")


def table_function(domain, arity, values, name="tab"):
    keys = list(product(domain, repeat=arity))
    tab = dict(zip(keys, values))
    return FiniteFunction(name, domain, arity, lambda x: tab[x])


# --- functions and shapes


def test_function_call_forms():
    f = construct("conj", arity=3)
    assert f("1", "1", "1") == "1"
    assert f(("1", "0", "1")) == "0"
    assert f.arg_names == ("x1", "x2", "x3")
    with pytest.raises(UsageError):
        f("1", "1")


def test_codomain_is_enforced():
    f = FiniteFunction("bad", BOOL, 1, lambda x: "7")
    with pytest.raises(PropertyViolation):
        f("0")


def test_named_arguments():
    f = FiniteFunction("first", BOOL, ["a", "b"], lambda x: x[0])
    assert f.arity == 2 and f.arg_names == ("a", "b")


def test_table_is_lexicographic():
    f = construct("conj", arity=2)
    assert f.table() == [0, 0, 0, 1]


def test_spot_check_catches_impure_rule():
    calls = [0]

    def rule(x):
        calls[0] += 1
        return BOOL[calls[0] % 2]

    f = FiniteFunction("flaky", BOOL, 6, rule)
    f.table()
    with pytest.raises(PropertyViolation):
        f.spot_check(random.Random(0), 64)


@pytest.mark.parametrize(
    "text,sizes,groups",
    [
        ("(3,3,3)", (3, 3, 3), None),
        ("(3,3,3|*)", (3, 3, 3), ((0,), (1,), (2,))),
        ("(2,1,2,1|1,2;3,4)", (2, 1, 2, 1), ((0, 1), (2, 3))),
        (" ( 1 , 2 | 2 ) ", (1, 2), ((1,),)),
    ],
)
def test_parse_shape(text, sizes, groups):
    s = parse_shape(text)
    assert s.block_sizes == sizes and s.groups == groups
    assert parse_shape(s.render()) == s


@pytest.mark.parametrize("text", ["", "(0,2)", "3,3", "(3,3|3)", "(3,3|1;1)", "(a,b)"])
def test_parse_shape_rejects(text):
    with pytest.raises(ParseError):
        parse_shape(text)


def test_paired_shape():
    s = PaletteShape.paired(2, 4)
    assert s.block_sizes == (5, 4, 5, 4)
    assert s.groups == ((0, 1), (2, 3))
    assert s.arity == 18


def test_even_alt_block_rejected():
    with pytest.raises(UsageError):
        palette_equivalent(PaletteShape.overlined([2]), "alt", ("0", "0"), ("0", "0"))


# --- palette tuples and invariants

SHAPE3 = PaletteShape.overlined([3, 3, 3])


def test_palette_tuple_examples():
    assert is_palette_tuple(SHAPE3, tuple("xxxxyxyyy"))
    assert not is_palette_tuple(SHAPE3, tuple("xyxxxxyxy"))
    assert is_palette_tuple(SHAPE3, tuple("zzzzzzzzz"))
    assert is_palette_tuple(PaletteShape.plain([2, 2]), tuple("abcd"))


def test_palette_equivalent_examples():
    a, b = tuple("xxxxyxyyy"), tuple("xxxyxxyyy")
    assert palette_equivalent(SHAPE3, "sym", a, b)
    assert palette_equivalent(SHAPE3, "tsym", tuple("xxxxxyyyy"), tuple("xxxxyyyyy"))
    assert not palette_equivalent(SHAPE3, "sym", tuple("xxxxxyyyy"), tuple("xxxxyyyyy"))
    s2 = PaletteShape((3, 1, 1, 1), ((1,), (2,), (3,)))
    assert not palette_equivalent(s2, "alt", tuple("xyxxyz"), tuple("xzxxyz"))


def test_palette_equivalent_single_block_mode():
    a, b = tuple("xxxxyxyyy"), tuple("xxxyxxyyy")
    assert palette_equivalent(SHAPE3, "sym", a, b, block=1)
    assert not palette_equivalent(SHAPE3, "sym", a, b, block=0)


def test_net_counts():
    assert net_counts("xyx") == (("x", 2), ("y", -1))
    assert net_counts("xyy") == (("x", 1),)
    assert block_invariant("tsym", "yxy") == ("x", "y")


@pytest.mark.parametrize("k", [1, 3, 5])
def test_alt_invariant_matches_identity_closure(k):
    # classes generated by parity-preserving swaps and the trailing-pair rule
    domain = ("a", "b", "c")
    cls = block_classes("alt", k, domain)
    by_inv = {}
    for blk, c in cls.items():
        by_inv.setdefault(net_counts(blk), set()).add(c)
    assert all(len(v) == 1 for v in by_inv.values())
    assert len(by_inv) == len(set(cls.values()))


@pytest.mark.parametrize("flavor", ["sym", "tsym"])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_sym_invariants_match_identity_closure(flavor, k):
    cls = block_classes(flavor, k, ("a", "b", "c"))
    inv = {}
    for blk, c in cls.items():
        inv.setdefault(block_invariant(flavor, blk), set()).add(c)
    assert all(len(v) == 1 for v in inv.values())
    assert len(inv) == len(set(cls.values()))


SMALL_SHAPES = [
    PaletteShape.overlined([1, 2]),
    PaletteShape.overlined([3, 1]),
    PaletteShape.overlined([2, 2, 1]),
    PaletteShape((2, 1, 2), ((0, 1),)),
    PaletteShape((1, 3, 1), ((0,), (2,))),
    PaletteShape.paired(2, 1),
    PaletteShape.plain([2, 2]),
]


@pytest.mark.parametrize("shape", SMALL_SHAPES, ids=lambda s: s.render())
def test_palette_enumeration_is_complete(shape):
    domain = ("a", "b", "c")
    want = {t for t in product(domain, repeat=shape.arity) if naive_palette(shape.block_sizes, shape.groups, t)}
    got = list(iter_palette_tuples(shape, domain))
    assert len(got) == len(set(got))
    assert set(got) == want
    assert count_palette_upper_bound(shape, 3) >= len(want)
    rng = random.Random(1)
    for _ in range(50):
        assert random_palette_tuple(shape, domain, rng) in want


@given(st.integers(0, 2**32 - 1))
def test_palette_equivalence_is_an_equivalence(seed):
    rng = random.Random(seed)
    shape = PaletteShape.overlined([3, 3])
    dom = ("a", "b", "c")
    flavors = [rng.choice(["sym", "tsym", "alt"]) for _ in range(2)]
    a, b, c = (random_palette_tuple(shape, dom, rng) for _ in range(3))
    eq = lambda x, y: palette_equivalent(shape, flavors, x, y)
    assert eq(a, a)
    assert eq(a, b) == eq(b, a)
    if eq(a, b) and eq(b, c):
        assert eq(a, c)


# --- polymorphisms


def test_known_polymorphisms():
    assert is_polymorphism(construct("conj", arity=4), get_template("horn3sat")).ok
    assert is_polymorphism(construct("majority", arity=3), get_template("two_sat")).ok
    assert is_polymorphism(z2arrow2_ternary(), get_template("z2_arrow_2")).ok


def test_xor_is_not_a_two_sat_polymorphism():
    xor3 = FiniteFunction("xor3", BOOL, 3, lambda x: str(sum(map(int, x)) % 2))
    r = is_polymorphism(xor3, get_template("two_sat"))
    assert not r.ok and r.mode == "exhaustive"
    cx = r.counterexample
    rel = get_template("two_sat").relations[cx["relation"]]
    assert all(tuple(row) in rel for row in cx["rows"])
    assert tuple(cx["image"]) not in rel
    assert tuple(xor3(tuple(row[i] for row in cx["rows"])) for i in range(len(cx["image"]))) == tuple(cx["image"])


def test_sampled_mode_is_reported():
    r = is_polymorphism(construct("conj", arity=5), get_template("two_sat"), cap=10, samples=5000)
    assert r.mode == "sampled" and not r.ok
    r = is_polymorphism(construct("majority", arity=5), get_template("two_sat"), cap=10, samples=2000)
    assert r.mode == "sampled" and r.ok


def test_ternary_construction_values():
    f = z2arrow2_ternary()
    assert f("0", "1", "1") == "0"
    assert f("2", "2", "2") == "2"
    assert f("2", "1", "2") == "1"


def random_boolean_template(rng):
    rels, arities = {}, {}
    for k in range(rng.randint(1, 3)):
        m = rng.randint(1, 2)
        full = list(product(BOOL, repeat=m))
        rels[f"r{k}"] = sorted(rng.sample(full, rng.randint(1, len(full))))
        arities[f"r{k}"] = m
    return Template("rand", BOOL, rels, arities)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_polymorphism_check_matches_nested_loops(seed, arity):
    rng = random.Random(seed)
    t = random_boolean_template(rng)
    f = table_function(BOOL, arity, [rng.choice(BOOL) for _ in range(2**arity)])
    assert is_polymorphism(f, t).ok == (naive_polymorphism(f, t) is None)


def test_domain_mismatch_rejected():
    with pytest.raises(UsageError):
        is_polymorphism(construct("conj", arity=2), get_template("bij5"))


# --- palette block property


def test_projection_is_not_block_symmetric():
    shape = PaletteShape((2, 2, 2), ((0,), (1,)))
    f = FiniteFunction("proj", ("a", "b"), 6, lambda x: x[4])
    r = is_palette_block(f, shape, "sym")
    assert not r.ok
    cx = r.counterexample
    assert cx["f(a)"] != cx["f(b)"]
    assert palette_equivalent(shape, "sym", cx["a"], cx["b"], block=cx["block"])


BLOCK_CASES = [
    (s, fl)
    for s in SMALL_SHAPES
    for fl in ("sym", "tsym", "alt")
    if fl != "alt" or all(k % 2 for k in s.block_sizes)
]


@pytest.mark.parametrize("shape,flavor", BLOCK_CASES, ids=lambda v: v.render() if hasattr(v, "render") else v)
def test_palette_block_matches_identity_closure(shape, flavor):
    dom = ("a", "b", "c")
    fl = [flavor] * len(shape.block_sizes)
    rng = random.Random(zlib.crc32((shape.render() + flavor).encode()))
    funcs = [first_const_block(dom, shape), first_unit_block(dom, shape)]
    # functions of the invariants, optionally spoiled at one palette tuple
    offs = shape.offsets()
    for spoil in (False, True, True):
        salt = rng.random()
        bad = random_palette_tuple(shape, dom, rng) if spoil else None

        def rule(x, salt=salt, bad=bad):
            if x == bad:
                return "a"
            key = tuple(block_invariant(flavor, x[o : o + k]) for o, k in zip(offs, shape.block_sizes))
            return dom[zlib.crc32(repr((key, salt)).encode()) % 3]

        funcs.append(FiniteFunction("inv", dom, shape.arity, rule))
    for f in funcs:
        want = naive_palette_block(f, shape.block_sizes, shape.groups, fl)
        assert is_palette_block(f, shape, fl).ok == want, f.name


def test_first_const_block_not_alternating_but_unit_block_is():
    shape = PaletteShape.overlined([3, 3, 3])
    dom = get_template("z2_arrow_2").domain
    assert not is_palette_block(first_const_block(dom, shape), shape, "alt").ok
    assert is_palette_block(first_unit_block(dom, shape), shape, "alt").ok


@pytest.mark.parametrize("sizes", [[1], [2, 2], [3, 3]])
@pytest.mark.parametrize("name", ["two_sat", "bij5"])
def test_first_const_block_properties(name, sizes):
    t = get_template(name)
    shape = PaletteShape.overlined(sizes)
    f = first_const_block(t.domain, shape)
    assert is_polymorphism(f, t).ok
    assert is_palette_block(f, shape, "tsym").ok


@pytest.mark.parametrize("sizes", [[1], [3], [3, 3]])
def test_alternating_constructions(sizes):
    shape = PaletteShape.overlined(sizes)
    for f, name in ((z2z3_alt(shape), "z2_union_z3"), (z2arrow2_sum(shape), "z2_arrow_2")):
        assert is_polymorphism(f, get_template(name), samples=20000).ok
        r = is_palette_block(f, shape, "alt")
        assert r.ok and r.details["invariant_based"]


def test_literal_z2z3_rule_breaks_alternation():
    shape = PaletteShape.overlined([3, 3, 3])
    f = z2z3_alt(shape, literal=True)
    assert not is_palette_block(f, shape, "alt").ok


def test_literal_z2arrow2_rule_fails():
    shape = PaletteShape.overlined([3, 3])
    f = z2arrow2_sum(shape, literal=True)
    assert not is_polymorphism(f, get_template("z2_arrow_2"), samples=20000).ok


def test_alternating_constructions_need_odd_blocks():
    with pytest.raises(UsageError):
        z2z3_alt(PaletteShape.overlined([2]))


def test_parse_function():
    f = parse_function("majority:3", None, BOOL)
    assert f.arity == 3 and f("1", "0", "1") == "1"
    with pytest.raises(ParseError):
        parse_function("majority:x", None, BOOL)
    with pytest.raises(UsageError):
        parse_function("nope", None, BOOL)
    with pytest.raises(UsageError):
        construct("majority", arity=4)


# --- solutions from polymorphisms


def test_single_constant_constraint():
    inst = make_instance({"x": ["0", "1"]}, [("c", ["x"], [("1",)])])
    assert synthesize_solution(inst, get_template("two_sat")) == {"x": "1"}


def test_assembly_detects_bad_function():
    inst = make_instance({"x": ["0", "1"]}, [("c", ["x"], [("1",)])])
    shape = PaletteShape.overlined([1])
    const0 = FiniteFunction("zero", BOOL, 1, lambda x: "0")
    from cspuniv.linrelax import find_d_solution

    sol = find_d_solution(inst, 1)
    with pytest.raises(PropertyViolation):
        build_solution_from_polymorphism(inst, const0, shape, [("x", sol)])


@given(st.integers(0, 2**32 - 1))
def test_synthesis_on_two_sat(seed):
    rng = random.Random(seed)
    t = get_template("two_sat")
    inst = random_instance(t, rng, rng.randint(1, 5), rng.randint(1, 6))
    if not naive_sat(inst):
        assert not run("singl(blp>aip)", inst)
        return
    sol = synthesize_solution(inst, t)
    assert all(tuple(sol[v] for v in c.scope) in set(c.relation) for c in inst.constraints)


def test_parity_assembly_on_lin_3_2():
    from cspuniv.algorithms import reduced_instance
    from cspuniv.linrelax import find_d_solution
    from cspuniv.poly import singleton_restrictions

    t = get_template("lin_3_2")
    rng = random.Random(5)
    done = 0
    while done < 5:
        inst = random_instance(t, rng, 4, 3)
        if not naive_sat(inst):
            continue
        omega = singleton_restrictions(reduced_instance(run("singl(blp>aip)", inst)))
        # parity of the first block is alternating for odd block sizes
        for d in (1, 3, 5, 7, 9):
            sols = [find_d_solution(r, d) for _, r in omega]
            if all(s is not None for s in sols):
                break
        shape = PaletteShape.overlined([d] * len(omega))
        f = FiniteFunction("parity1", t.domain, shape.arity, lambda x, d=d: str(x[:d].count("1") % 2))
        sol = build_solution_from_polymorphism(inst, f, shape, [(tag, s) for (tag, _), s in zip(omega, sols)])
        assert all(tuple(sol[v] for v in c.scope) in set(c.relation) for c in inst.constraints)
        done += 1
