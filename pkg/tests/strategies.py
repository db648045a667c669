"""Hypothesis strategies for small instances."""

import random

from hypothesis import strategies as st

from cspuniv.templates import get_template, random_instance

SMALL_TEMPLATES = ["two_sat", "horn3sat", "lin_3_2", "bij5", "z2_arrow_2"]


@st.composite
def template_instances(draw, names=SMALL_TEMPLATES, max_vars=4, max_cons=4):
    name = draw(st.sampled_from(names))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = random.Random(seed)
    t = get_template(name)
    n = draw(st.integers(1, max_vars))
    m = draw(st.integers(1, max_cons))
    return random_instance(t, rng, n, m)


@st.composite
def raw_instances(draw, max_vars=4, max_dom=3, max_cons=4):
    """Instances with arbitrary explicit relations over small domains."""
    from itertools import product

    from cspuniv.core import make_instance

    n = draw(st.integers(1, max_vars))
    xs = [f"x{i}" for i in range(n)]
    doms = {x: [str(k) for k in range(draw(st.integers(1, max_dom)))] for x in xs}
    cons = []
    for j in range(draw(st.integers(0, max_cons))):
        arity = draw(st.integers(1, 3))
        scope = [draw(st.sampled_from(xs)) for _ in range(arity)]
        full = list(product(*(doms[v] for v in scope)))
        rel = draw(st.lists(st.sampled_from(full), unique=True, max_size=len(full)))
        cons.append((f"c{j}", scope, rel))
    return make_instance(doms, cons, xs)
