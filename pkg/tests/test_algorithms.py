import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cspuniv.algorithms import (
    ReductionTrace,
    format_spec,
    is_arc_consistent,
    parse_spec,
    reduced_instance,
    run,
    validate_certificate,
)
from cspuniv.core import brute_force_solve, change_constraint, make_instance
from cspuniv.errors import ParseError
from cspuniv.linrelax import combination_certificate, find_d_solution, is_d_solution
from cspuniv.templates import fooling_instance, horn_chain

from oracles import arc_consistent_domains, naive_sat
from strategies import raw_instances, template_instances

SPECS = [
    "arccons",
    "blp",
    "aip",
    "blp&aip",
    "arccons>aip",
    "blp>aip",
    "singl(arccons)",
    "singl(aip)",
    "singl(blp)>aip",
    "csingl(arccons)",
    "csingl(blp>aip)",
    "singl(blp>aip)",
]


@pytest.mark.parametrize("text", SPECS + ["arccons>blp>aip", "csingl(aip)>arccons", "singl(singl(aip))"])
def test_grammar_round_trip(text):
    assert format_spec(parse_spec(text)) == text


@pytest.mark.parametrize("bad", ["", "blp>", "singl(aip", "foo", "aip)", "blp&"])
def test_grammar_rejects(bad):
    with pytest.raises(ParseError):
        parse_spec(bad)


def _unary_clash():
    return make_instance({"x": ["0", "1"]}, [("a", ["x"], [("0",)]), ("b", ["x"], [("1",)])])


@pytest.mark.parametrize(
    "spec, name, answer",
    [
        ("arccons", "twosat_cycle", "Yes"),
        ("blp", "twosat_cycle", "Yes"),
        ("aip", "twosat_cycle", "Yes"),
        ("blp&aip", "twosat_cycle", "Yes"),
        ("blp>aip", "twosat_cycle", "No"),
        ("arccons>blp", "twosat_cycle", "Yes"),
        ("singl(aip)", "twosat_cycle", "Yes"),
        ("csingl(arccons)", "twosat_cycle", "No"),
        ("aip", "bij5_cycle", "Yes"),
        ("blp>aip", "bij5_cycle", "Yes"),
        ("arccons>aip", "lin32_contradiction", "No"),
        ("singl(blp)", "lin32_contradiction", "Yes"),
        ("singl(aip)", "z2arrow2_chain", "No"),
        ("singl(blp)>aip", "z2arrow2_chain", "Yes"),
        ("singl(aip)>arccons", "z2z3_mixed", "No"),
    ],
)
def test_documented_verdicts(spec, name, answer):
    inst = fooling_instance(name)
    v = run(spec, inst)
    assert v.answer == answer
    assert validate_certificate(inst, spec, v)


def test_arccons_keeps_cycle_domains_and_refutes_horn_chain():
    inst = fooling_instance("twosat_cycle")
    v = run("arccons", inst)
    assert reduced_instance(v).domains == inst.domains
    assert not run("arccons", horn_chain())
    assert not run("arccons", _unary_clash())
    assert not run("arccons>aip", _unary_clash())


def test_empty_relation_is_rejected_everywhere():
    inst = change_constraint(fooling_instance("twosat_cycle"), "c1", [])
    for spec in SPECS:
        assert not run(spec, inst)


def test_zero_constraints():
    assert run("singl(blp>aip)", make_instance({"x": ["0"]}, []))


@given(template_instances())
def test_and_is_idempotent(inst):
    for s in ("aip", "blp", "arccons"):
        assert run(f"{s}&{s}", inst).yes == run(s, inst).yes


@given(raw_instances())
def test_arccons_matches_naive_fixpoint(inst):
    v = run("arccons", inst)
    doms = arc_consistent_domains(inst)
    assert v.yes == (doms is not None and all(doms.values()))
    if v.yes:
        red = reduced_instance(v)
        assert is_arc_consistent(red)
        assert {x: set(red.domains[x]) for x in red.variables} == doms


@settings(max_examples=40)
@given(template_instances(max_vars=4, max_cons=4))
def test_soundness_and_completeness_on_satisfiable(inst):
    sat = naive_sat(inst)
    for spec in SPECS:
        v = run(spec, inst)
        if sat:
            assert v.yes, spec
        if v.yes:
            assert validate_certificate(inst, spec, v), spec


@settings(max_examples=40)
@given(template_instances(), st.randoms(use_true_random=False))
def test_fixpoint_is_order_independent(inst, rnd):
    for spec in ("singl(aip)", "csingl(arccons)"):
        ref = run(spec, inst)
        other = run(spec, inst, random.Random(rnd.random()))
        assert ref.yes == other.yes
        if ref.yes:
            assert reduced_instance(ref) == reduced_instance(other)


@given(template_instances())
def test_singleton_wrappers_are_monotone(inst):
    for inner in ("arccons", "aip", "blp"):
        if not run(inner, inst):
            assert not run(f"singl({inner})", inst)
            assert not run(f"csingl({inner})", inst)


@given(template_instances())
def test_traces_replay(inst):
    for spec in ("singl(aip)", "csingl(arccons)"):
        v = run(spec, inst)
        if v.yes:
            assert isinstance(v.certificate, ReductionTrace)
            assert v.certificate.replay(inst) == v.certificate.final


@settings(max_examples=40)
@given(template_instances(), st.integers(0, 3))
def test_combined_answer_has_d_solutions_in_window(inst, w):
    if not run("blp>aip", inst):
        return
    Q, base, aip = combination_certificate(inst)
    for d in [Q, Q + 1] + list(range(Q * (Q + 1), Q * (Q + 1) + w + 1)):
        got = find_d_solution(inst, d)
        assert got is not None and is_d_solution(inst, got, d), d


def test_horn_chain_and_fooling_instances_are_unsatisfiable():
    assert not brute_force_solve(horn_chain())
    for name in ("twosat_cycle", "lin32_contradiction", "bij5_cycle", "z2z3_mixed", "z2arrow2_chain"):
        assert not brute_force_solve(fooling_instance(name), cap=10**10)
