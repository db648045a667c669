import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cspuniv.core import (
    Instance,
    brute_force_solve,
    change_constraint,
    check_assignment,
    load_instance,
    make_instance,
    reduce_domain,
    save_instance,
)
from cspuniv.errors import ParseError, ResourceError, UsageError
from cspuniv.templates import fooling_instance, horn3sat

from oracles import naive_sat, naive_solutions
from strategies import raw_instances


def test_reduce_domain_filters_every_constraint_on_the_variable():
    inst = fooling_instance("twosat_cycle")
    red = reduce_domain(inst, "x1", ["0"])
    assert red.domains["x1"] == ("0",)
    for c in red.constraints:
        for i in c.positions("x1"):
            assert all(t[i] == "0" for t in c.relation)
    untouched = [c for c in inst.constraints if "x1" not in c.scope]
    assert all(red.constraint(c.id) == c for c in untouched)


def test_reduce_domain_full_domain_is_identity():
    inst = fooling_instance("bij5_cycle")
    assert reduce_domain(inst, "x2", inst.domains["x2"]) == inst


def test_reduce_horn_clause():
    clause = horn3sat().relation("clause")
    inst = make_instance({v: ["0", "1"] for v in "xyz"}, [("c", "xyz", clause)])
    red = reduce_domain(inst, "x", ["1"])
    assert len(red.constraint("c").relation) == 3


def test_reduce_domain_repeated_variable():
    inst = make_instance({"x": ["0", "1"], "y": ["0", "1"]}, [("c", ["x", "y", "x"], [("0", "1", "1"), ("1", "0", "1")])])
    red = reduce_domain(inst, "x", ["1"])
    assert red.constraint("c").relation == (("1", "0", "1"),)


def test_reduce_domain_errors():
    inst = fooling_instance("twosat_cycle")
    with pytest.raises(UsageError):
        reduce_domain(inst, "nope", ["0"])
    with pytest.raises(UsageError):
        reduce_domain(inst, "x1", ["7"])


def test_change_constraint():
    inst = fooling_instance("bij5_cycle")
    assert change_constraint(inst, "c1", inst.constraint("c1").relation) == inst
    one = change_constraint(inst, "c5", [("0", "1")])
    assert one.constraint("c5").relation == (("0", "1"),)
    assert all(one.constraint(c.id) == c for c in inst.constraints if c.id != "c5")
    empty = change_constraint(inst, "c1", [])
    assert empty.has_empty() and not brute_force_solve(empty)
    with pytest.raises(UsageError):
        change_constraint(inst, "c1", [("0",)])


def test_brute_force_examples():
    assert not brute_force_solve(fooling_instance("twosat_cycle"))
    assert not brute_force_solve(fooling_instance("d4_main"), cap=10**10)
    v = brute_force_solve(make_instance({"x": ["0", "1"], "y": ["0", "1"]}, [("c", "xy", [("0", "1")])]))
    assert v.yes and v.certificate == {"x": "0", "y": "1"}


def test_brute_force_cap():
    with pytest.raises(ResourceError):
        brute_force_solve(fooling_instance("d4_main"), cap=1000)


@given(raw_instances())
def test_oracle_matches_enumeration(inst):
    v = brute_force_solve(inst)
    assert v.yes == naive_sat(inst)
    if v.yes:
        assert check_assignment(inst, v.certificate)


@given(raw_instances(), st.randoms(use_true_random=False))
def test_oracle_invariant_under_constraint_order(inst, rnd):
    cons = list(inst.constraints)
    rnd.shuffle(cons)
    assert brute_force_solve(Instance(inst.variables, inst.domains, cons)).yes == brute_force_solve(inst).yes


@given(raw_instances(), st.data())
def test_reduce_domain_idempotent(inst, data):
    x = data.draw(st.sampled_from(list(inst.variables)))
    B = data.draw(st.lists(st.sampled_from(list(inst.domains[x])), unique=True))
    once = reduce_domain(inst, x, B)
    assert reduce_domain(once, x, B) == once
    # exactly the solutions with x in B survive
    want = [s for s in naive_solutions(inst) if s[x] in B]
    assert list(naive_solutions(once)) == want


def test_json_minimal_and_errors():
    doc = {"variables": ["x"], "domains": {"x": ["a", "b"]}, "constraints": [{"id": "u", "scope": ["x"], "tuples": [["a"]]}]}
    inst = load_instance(json.dumps(doc))
    assert inst.variables == ("x",) and inst.constraint("u").relation == (("a",),)
    doc["constraints"][0]["tuples"] = [["z"]]
    with pytest.raises(ParseError) as e:
        load_instance(json.dumps(doc))
    assert "$.constraints[0].tuples[0][0]" in str(e.value)
    with pytest.raises(ParseError):
        load_instance(b"{not json")
    with pytest.raises(ParseError):
        load_instance(json.dumps({"variables": ["x"], "domains": {}}))


def test_json_key_order_and_sorted_tuples():
    inst = make_instance({"x": ["1", "0"]}, [("c", ["x"], [("1",), ("0",)])])
    obj = json.loads(save_instance(inst))
    assert list(obj) == ["variables", "domains", "constraints"]
    assert list(obj["constraints"][0]) == ["id", "scope", "tuples"]
    assert obj["constraints"][0]["tuples"] == [["0"], ["1"]]


def test_round_trip_chain_instance():
    inst = fooling_instance("z2arrow2_chain")
    assert load_instance(save_instance(inst)) == inst


@given(raw_instances())
def test_round_trip(inst):
    assert load_instance(save_instance(inst)) == inst
