import random
from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cspuniv.d4 import (
    IDENTITY,
    ISOMORPHISM,
    D4Op,
    Gf2System,
    _equation,
    _labels,
    _layout,
    all_d4ops,
    check_group_presentation,
    check_palette_nonexistence,
    compose,
    d4op_function,
    d4op_is_polymorphism,
    eval_d4op,
    evaluate_term,
    generate_by_terms,
    inverse,
    palette_shape,
    random_d4op,
    replay_trace,
    term_round_trip,
    to_str,
)
from cspuniv.errors import ParseError, UsageError
from cspuniv.poly import is_palette_tuple, is_polymorphism, palette_equivalent
from cspuniv.templates import G8_ELEMENTS, d4_base

ELEMS = list(product((0, 1), repeat=3))


def square_symmetry(word):
    """``s^i r^j`` as a permutation of the square's corners 0..3."""
    i = 1 if word.startswith("s") else 0
    rest = word[i:]
    j = 0 if rest in ("", "1") else (1 if rest == "r" else int(rest[1:]))
    rot = lambda v: (v + j) % 4
    ref = (lambda v: (-v) % 4) if i else (lambda v: v)
    return tuple(ref(rot(v)) for v in range(4))


def test_compose_is_a_group():
    for x, y, z in product(ELEMS, repeat=3):
        assert compose(compose(x, y), z) == compose(x, compose(y, z))
    for x in ELEMS:
        assert compose(x, IDENTITY) == x == compose(IDENTITY, x)
        assert compose(x, inverse(x)) == IDENTITY


def test_compose_matches_square_symmetries():
    # x o y acts as "apply y, then x" on corners
    perm = {x: square_symmetry(w) for x, w in ISOMORPHISM.items()}
    assert len(set(perm.values())) == 8
    for x, y in product(ELEMS, repeat=2):
        px, py = perm[x], perm[y]
        assert perm[compose(x, y)] == tuple(px[py[v]] for v in range(4))


def test_presentation():
    assert check_group_presentation()
    assert compose("110", "010") == (1, 0, 1)
    assert to_str((1, 1, 0)) == "110"


def test_elements_follow_template_naming():
    assert sorted(G8_ELEMENTS) == sorted(to_str(x) for x in ELEMS)


def test_compose_preserves_relations():
    assert is_polymorphism(d4op_function(D4Op.compose_op()), d4_base()).mode == "exhaustive"
    assert d4op_is_polymorphism(D4Op.compose_op())


def test_projection_and_compose_ops():
    for x, y in product(ELEMS, repeat=2):
        assert eval_d4op(D4Op.compose_op(), (x, y)) == compose(x, y)
        assert eval_d4op(D4Op.projection(2, 1), (x, y)) == y


def test_coupling_rule_enforced():
    with pytest.raises(UsageError):
        D4Op((1, 1), ((0, 0), (0, 0)))
    with pytest.raises(UsageError):
        D4Op((1, 2), ((0, 0), (0, 0)))
    with pytest.raises(UsageError):
        eval_d4op(D4Op.compose_op(), (IDENTITY,))


def test_family_size():
    # 2^n choices of a, 2^n of the diagonal, one free bit per unordered pair
    for n in (1, 2, 3):
        assert sum(1 for _ in all_d4ops(n)) == 2 ** (2 * n + n * (n - 1) // 2)


@pytest.mark.parametrize("n", [1, 2])
def test_round_trip_all_small(n):
    for op in all_d4ops(n):
        assert term_round_trip(op)


def test_round_trip_random_ternary():
    rng = random.Random(7)
    for _ in range(50):
        assert term_round_trip(random_d4op(3, rng))


def test_family_members_are_polymorphisms():
    for op in all_d4ops(2):
        assert d4op_is_polymorphism(op)
    rng = random.Random(3)
    for _ in range(3):
        assert d4op_is_polymorphism(random_d4op(3, rng))


def test_conjugate_word_is_a_family_member():
    # x o y o x expands to a = (0, 1) with c00 = c01 = c10 = 1
    op = D4Op((0, 1), ((1, 1), (1, 0)))
    for x, y in product(ELEMS, repeat=2):
        assert eval_d4op(op, (x, y)) == compose(compose(x, y), x)


def test_term_examples():
    r, s = (1, 1, 0), (0, 1, 0)
    assert evaluate_term("x1*x2", [r, s]) == compose(r, s)
    assert evaluate_term("(x1*x1)^-1", [r]) == inverse(compose(r, r))
    assert evaluate_term("e", []) == IDENTITY
    assert generate_by_terms(D4Op.projection(3, 0)) == "x1"
    assert generate_by_terms(D4Op((0,), ((0,),))) == "e"


@pytest.mark.parametrize("term", ["x1*", "(x1", "x1)", "x1 + x2", "x9", ""])
def test_term_parse_errors(term):
    with pytest.raises(ParseError):
        evaluate_term(term, [IDENTITY, IDENTITY])


# --- GF(2) elimination


def brute_consistent(eqs, nvars):
    return any(
        all(sum((bits >> i & 1) * x[i] for i in range(nvars)) % 2 == rhs for bits, rhs in eqs)
        for x in product((0, 1), repeat=nvars)
    )


@given(st.lists(st.tuples(st.integers(0, 31), st.integers(0, 1)), max_size=8))
def test_gf2_matches_brute_force(eqs):
    sysm = Gf2System(5)
    for k, (bits, rhs) in enumerate(eqs):
        sysm.add(bits, rhs, k)
    ok = brute_consistent(eqs, 5)
    assert (sysm.conflict is None) == ok
    if ok:
        x = sysm.solution()
        assert all(sum((b >> i & 1) * x[i] for i in range(5)) % 2 == r for b, r in eqs)
    else:
        bits = rhs = 0
        for i in sysm.conflict:
            bits ^= eqs[i][0]
            rhs ^= eqs[i][1]
        assert bits == 0 and rhs == 1


# --- the non-existence search


def palette_pair(n, l, label):
    """The two tuples a substitution equation compares."""
    N, blocks, groups = _layout(n, l)
    _, h, k, i, j, i0, j0 = label
    out = []
    for p, q in ((i, j), (i0, j0)):
        t = [(0, 0, 0)] * N
        for v in groups[h]:
            t[v] = (1, 0, 0)
        for v in groups[k]:
            t[v] = (0, 1, 0)
        t[p] = (1, 0, 0)
        t[q] = (0, 1, 0)
        out.append(tuple(to_str(x) for x in t))
    return out


@pytest.mark.parametrize("n,l", [(4, 1), (4, 2)])
def test_substitution_equations_are_sound(n, l):
    N, blocks, groups = _layout(n, l)
    shape = palette_shape(n, l)
    rng = random.Random(n * 10 + l)
    labels = [lab for lab in _labels(n, blocks, groups, N) if lab[0] == "swap"]
    assert labels
    for lab in rng.sample(labels, min(40, len(labels))):
        t1, t2 = palette_pair(n, l, lab)
        assert is_palette_tuple(shape, t1) and is_palette_tuple(shape, t2)
        assert palette_equivalent(shape, "sym", t1, t2)
        op = random_d4op(N, rng)
        bits, rhs = _equation(lab, op.a, N, blocks, groups, False)
        lhs = sum(op.c[v // N][v % N] for v in range(N * N) if bits >> v & 1) % 2
        f1 = eval_d4op(op, [tuple(map(int, x)) for x in t1])
        f2 = eval_d4op(op, [tuple(map(int, x)) for x in t2])
        assert (f1[2] + f2[2]) % 2 == (lhs + rhs) % 2


def test_idempotent_members_have_odd_weight():
    for op in all_d4ops(3):
        idem = all(eval_d4op(op, (x, x, x)) == x for x in ELEMS)
        if idem:
            assert sum(op.a) % 2 == 1


def test_nonexistence_4_4():
    res = check_palette_nonexistence(4, 4)
    assert res.result == "infeasible"
    assert len(res.candidates) == 128
    assert replay_trace(res)
    obj = res.to_obj()
    assert obj["arity"] == 36 and len(obj["trace"]) == 128


def test_tampered_trace_does_not_replay():
    res = check_palette_nonexistence(4, 4)
    entry = res.trace[5]
    entry["equations"] = entry["equations"][1:]
    assert not replay_trace(res)
    res = check_palette_nonexistence(4, 4)
    res.trace.pop()
    assert not replay_trace(res)
    res = check_palette_nonexistence(4, 4)
    res.trace[0]["equations"][0] = ["coupling", 0, 0]
    assert not replay_trace(res)


def test_abelian_control_has_witness():
    res = check_palette_nonexistence(4, 4, abelian_control=True)
    assert res.result == "witness"
    w = res.witness
    N, blocks, groups = _layout(4, 4)
    assert sum(w["a"]) % 2 == 1
    ones = [b for b, v in enumerate(w["a_blocks"]) if v]
    assert len(ones) == 1 and len(blocks[ones[0]]) % 2 == 1
    # the witness satisfies every equation of the control system
    x = [w["c"][v // N][v % N] for v in range(N * N)]
    for lab in _labels(4, blocks, groups, N):
        bits, rhs = _equation(lab, w["a"], N, blocks, groups, True)
        assert sum(x[v] for v in range(N * N) if bits >> v & 1) % 2 == rhs
    assert not replay_trace(res)


def test_smaller_parameters():
    assert check_palette_nonexistence(4, 2).result == "infeasible"
    # too few groups or too short blocks leave the equations satisfiable
    for n, l in ((4, 1), (3, 4)):
        res = check_palette_nonexistence(n, l)
        assert res.result == "witness"
        w = res.witness
        D4Op(tuple(w["a"]), tuple(map(tuple, w["c"])))


def test_candidate_cap():
    from cspuniv.errors import ResourceError

    with pytest.raises(ResourceError):
        check_palette_nonexistence(4, 4, max_candidates=10)
    with pytest.raises(UsageError):
        check_palette_nonexistence(0, 4)
