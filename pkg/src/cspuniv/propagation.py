"""Arc-consistency fixpoint shared by the algorithms and the LP presolve."""

from __future__ import annotations

from .core import Instance, _raw_constraint


def arc_consistency(inst: Instance):
    """Compute the greatest arc-consistent family of subdomains.

    Returns ``(ok, reduced)``.  ``ok`` is False as soon as some domain or
    relation empties; ``reduced`` is then ``None``.  Otherwise ``reduced`` has
    the shrunk domains and every relation restricted to them.
    """
    if any(not inst.domains[v] for v in inst.variables):
        return False, None
    doms = {v: set(inst.domains[v]) for v in inst.variables}
    rels = [c.relation for c in inst.constraints]
    cons = inst.constraints
    watch: dict[str, list[int]] = {v: [] for v in inst.variables}
    for k, c in enumerate(cons):
        for v in set(c.scope):
            watch[v].append(k)
    queue = list(range(len(cons)))
    queued = [True] * len(cons)
    while queue:
        k = queue.pop()
        queued[k] = False
        c = cons[k]
        scope = c.scope
        rel = [t for t in rels[k] if all(a in doms[v] for v, a in zip(scope, t))]
        if not rel:
            return False, None
        rels[k] = rel
        for i, v in enumerate(scope):
            proj = {t[i] for t in rel}
            if len(proj) < len(doms[v]):
                doms[v] &= proj
                for k2 in watch[v]:
                    if not queued[k2]:
                        queued[k2] = True
                        queue.append(k2)
    new_doms = {v: tuple(a for a in inst.domains[v] if a in doms[v]) for v in inst.variables}
    new_cons = []
    for k, c in enumerate(cons):
        rel = tuple(rels[k])
        if len(rel) != len(c.relation):
            c = _raw_constraint(c.id, c.scope, rel)
        new_cons.append(c)
    return True, inst.replace(new_doms, new_cons)
