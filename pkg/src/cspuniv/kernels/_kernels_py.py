"""Pure-Python reference versions of the hot kernels.

Every function here has a twin with the same signature in the compiled
``_kernels`` extension.  The compiled versions work on machine integers and
raise ``OverflowError`` when a value would not fit, in which case the
dispatcher retries here with Python integers.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1


def splitmix64(state):
    """One step of splitmix64; returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)

# ----------------------------------------------------------------------------
# backtracking search


def backtrack(sizes, cons):
    """Find an assignment (list of value indices) satisfying every table.

    ``cons`` holds ``(scope, strides, table)`` triples.  Each constraint is
    checked as soon as the last of its variables (in index order) is set.
    """
    n = len(sizes)
    if n == 0:
        for scope, strides, table in cons:
            if not any(table):
                return None
        return []
    if any(s == 0 for s in sizes):
        return None
    at = [[] for _ in range(n)]
    for scope, strides, table in cons:
        at[max(scope)].append((scope, strides, table))
    val = [-1] * n
    i = 0
    while i >= 0:
        val[i] += 1
        if val[i] >= sizes[i]:
            val[i] = -1
            i -= 1
            continue
        ok = True
        for scope, strides, table in at[i]:
            idx = 0
            for v, s in zip(scope, strides):
                idx += val[v] * s
            if not table[idx]:
                ok = False
                break
        if ok:
            if i == n - 1:
                return list(val)
            i += 1
    return None


# ----------------------------------------------------------------------------
# exact simplex on an integer (fraction-free) tableau


class Unbounded(Exception):
    pass


def _pivot(T, z, r, j, D):
    """Bareiss pivot on T[r][j]; returns the new common denominator."""
    p = T[r][j]
    prow = T[r]
    for i in range(len(T)):
        if i == r:
            continue
        row = T[i]
        f = row[j]
        if f:
            T[i] = [(a * p - f * b) // D for a, b in zip(row, prow)]
        elif p != D:
            T[i] = [(a * p) // D for a in row]
    f = z[j]
    if f:
        z[:] = [(a * p - f * b) // D for a, b in zip(z, prow)]
    elif p != D:
        z[:] = [(a * p) // D for a in z]
    return p


def _run(T, z, basis, D, allowed):
    """Minimise with reduced-cost row ``z`` (scaled by D) until optimal."""
    m = len(T)
    width = len(z) - 1
    degenerate = 0
    bland = False
    while True:
        j = -1
        if bland:
            for k in range(width):
                if allowed[k] and z[k] < 0:
                    j = k
                    break
        else:
            best = 0
            for k in range(width):
                if allowed[k] and z[k] < best:
                    best = z[k]
                    j = k
        if j < 0:
            return D
        r = -1
        for i in range(m):
            a = T[i][j]
            if a > 0:
                if r < 0:
                    r = i
                    continue
                # compare T[i][rhs]/a with T[r][rhs]/T[r][j]
                lhs = T[i][-1] * T[r][j]
                rhs = T[r][-1] * a
                if lhs < rhs or (lhs == rhs and basis[i] < basis[r]):
                    r = i
        if r < 0:
            raise Unbounded()
        if T[r][-1] == 0:
            degenerate += 1
            if degenerate > 2 * m + 10:
                bland = True
        else:
            degenerate = 0
        D = _pivot(T, z, r, j, D)
        basis[r] = j


def _solution(T, basis, n, D):
    x = [0] * n
    for i, bj in enumerate(basis):
        if bj < n:
            x[bj] = T[i][-1]
    return x


def simplex_support(A, b, n, want_max):
    """Feasibility of ``A x = b, x >= 0`` over the rationals.

    Returns ``None`` when infeasible.  Otherwise returns a list of basic
    feasible solutions, each as ``(numerators, denominator)``.  With
    ``want_max`` the union of their supports is the union of the supports
    of all feasible solutions, so their average has maximal support.
    """
    m = len(A)
    T = []
    for i in range(m):
        row = list(A[i])
        rhs = b[i]
        if rhs < 0:
            row = [-a for a in row]
            rhs = -rhs
        art = [0] * m
        art[i] = 1
        T.append(row + art + [rhs])
    basis = [n + i for i in range(m)]
    width = n + m
    z = [0] * (width + 1)
    for row in T:
        for k in range(n):
            z[k] -= row[k]
        z[-1] -= row[-1]
    D = 1
    allowed = [True] * width
    D = _run(T, z, basis, D, allowed)
    if z[-1] != 0:
        return None
    # drive zero-level artificials out of the basis, drop redundant rows
    r = 0
    while r < len(T):
        if basis[r] >= n:
            row = T[r]
            j = next((k for k in range(n) if row[k] != 0), -1)
            if j < 0:
                del T[r]
                del basis[r]
                continue
            if row[j] < 0:
                T[r] = [-a for a in row]
            D = _pivot(T, z, r, j, D)
            basis[r] = j
        r += 1
    T = [row[:n] + [row[-1]] for row in T]
    sols = [(_solution(T, basis, n, D), D)]
    if not want_max:
        return sols
    support = [v != 0 for v in sols[0][0]]
    allowed = [True] * n
    while not all(support):
        # maximise the mass outside the known support
        z = [0] * (n + 1)
        for k in range(n):
            if not support[k]:
                z[k] = -D
        for i, bj in enumerate(basis):
            if not support[bj]:
                row = T[i]
                for k in range(n + 1):
                    z[k] += row[k]
        D = _run(T, z, basis, D, allowed)
        x = _solution(T, basis, n, D)
        grew = False
        for k in range(n):
            if x[k] and not support[k]:
                support[k] = True
                grew = True
        if not grew:
            break
        sols.append((x, D))
    return sols


# ----------------------------------------------------------------------------
# polymorphism checks over integer-coded relations


def poly_exhaustive(src_rows, arity, ftab, fstrides, dst_table, dst_strides, m):
    """Check ``f`` on every ``arity``-selection of rows of ``src_rows``.

    ``src_rows`` is a flat list of the relation's tuples (``m`` entries each),
    ``ftab`` is the function table indexed by ``sum(arg_k * fstrides[k])`` and
    ``dst_table`` a membership bitmap indexed by ``sum(y_i * dst_strides[i])``.
    Returns the first failing selection (list of row indices) or ``None``.
    """
    r = len(src_rows) // m if m else 0
    if r == 0:
        return None
    choice = [0] * arity
    while True:
        idx = 0
        for i in range(m):
            a = 0
            for k in range(arity):
                a += src_rows[choice[k] * m + i] * fstrides[k]
            idx += ftab[a] * dst_strides[i]
        if not dst_table[idx]:
            return list(choice)
        k = arity - 1
        while k >= 0:
            choice[k] += 1
            if choice[k] < r:
                break
            choice[k] = 0
            k -= 1
        if k < 0:
            return None


def poly_sampled(src_rows, arity, ftab, fstrides, dst_table, dst_strides, m, samples, seed):
    """Random-selection version of :func:`poly_exhaustive`."""
    r = len(src_rows) // m if m else 0
    if r == 0:
        return None
    state = seed & MASK64
    choice = [0] * arity
    for _ in range(samples):
        for k in range(arity):
            state, out = splitmix64(state)
            choice[k] = out % r
        idx = 0
        for i in range(m):
            a = 0
            for k in range(arity):
                a += src_rows[choice[k] * m + i] * fstrides[k]
            idx += ftab[a] * dst_strides[i]
        if not dst_table[idx]:
            return list(choice)
    return None
