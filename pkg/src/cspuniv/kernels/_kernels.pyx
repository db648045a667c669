# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_kernels_py``.

Same signatures, same results.  Arithmetic is on 64-bit integers with
explicit overflow checks; any overflow raises ``OverflowError`` and the
dispatcher falls back to the Python implementation.
"""

from libc.stdlib cimport malloc, free, calloc
from libc.string cimport memcpy, memmove

from ._kernels_py import Unbounded

ctypedef long long i64
ctypedef unsigned long long u64

cdef extern from *:
    """
    static inline int ck_mul(long long a, long long b, long long *r) { return __builtin_mul_overflow(a, b, r); }
    static inline int ck_sub(long long a, long long b, long long *r) { return __builtin_sub_overflow(a, b, r); }
    static inline int ck_add(long long a, long long b, long long *r) { return __builtin_add_overflow(a, b, r); }
    """
    int ck_mul(i64 a, i64 b, i64 *r) nogil
    int ck_sub(i64 a, i64 b, i64 *r) nogil
    int ck_add(i64 a, i64 b, i64 *r) nogil


# ----------------------------------------------------------------------------
# backtracking search

def backtrack(sizes, cons):
    cdef Py_ssize_t n = len(sizes)
    cdef Py_ssize_t nc = len(cons)
    cdef Py_ssize_t i, k, t, total_scope, total_table
    if n == 0:
        for scope, strides, table in cons:
            if not any(table):
                return None
        return []
    for s in sizes:
        if s == 0:
            return None

    # flatten constraints, grouped by the position of their last variable
    order = sorted(range(nc), key=lambda c: max(cons[c][0]))
    total_scope = 0
    total_table = 0
    for scope, strides, table in cons:
        total_scope += len(scope)
        total_table += len(table)
    cdef int *size = <int *> malloc(n * sizeof(int))
    cdef int *val = <int *> malloc(n * sizeof(int))
    cdef int *first = <int *> calloc(n + 1, sizeof(int))
    cdef int *sc_off = <int *> malloc((nc + 1) * sizeof(int))
    cdef i64 *tb_off = <i64 *> malloc((nc + 1) * sizeof(i64))
    cdef int *sc_var = <int *> malloc((total_scope + 1) * sizeof(int))
    cdef i64 *sc_str = <i64 *> malloc((total_scope + 1) * sizeof(i64))
    cdef unsigned char *tb = <unsigned char *> malloc(total_table + 1)
    cdef int *last = <int *> malloc((nc + 1) * sizeof(int))
    cdef const unsigned char[:] view
    cdef i64 idx
    cdef int ok, a, c, lo, hi
    result = None
    try:
        for i in range(n):
            size[i] = sizes[i]
        sc_off[0] = 0
        tb_off[0] = 0
        for k in range(nc):
            scope, strides, table = cons[order[k]]
            for t in range(len(scope)):
                sc_var[sc_off[k] + t] = scope[t]
                sc_str[sc_off[k] + t] = strides[t]
            sc_off[k + 1] = sc_off[k] + len(scope)
            view = table
            for t in range(len(table)):
                tb[tb_off[k] + t] = view[t]
            tb_off[k + 1] = tb_off[k] + len(table)
            last[k] = max(scope)
        # first[i] .. first[i+1] are the constraints checked at variable i
        c = 0
        for i in range(n):
            first[i] = c
            while c < nc and last[c] == i:
                c += 1
        first[n] = c
        for i in range(n):
            val[i] = -1
        i = 0
        with nogil:
            while i >= 0:
                val[i] += 1
                if val[i] >= size[i]:
                    val[i] = -1
                    i -= 1
                    continue
                ok = 1
                lo = first[i]
                hi = first[i + 1]
                for c in range(lo, hi):
                    idx = 0
                    for t in range(sc_off[c], sc_off[c + 1]):
                        idx += val[sc_var[t]] * sc_str[t]
                    if not tb[tb_off[c] + idx]:
                        ok = 0
                        break
                if ok:
                    if i == n - 1:
                        break
                    i += 1
        if i >= 0:
            result = [val[k] for k in range(n)]
    finally:
        free(size); free(val); free(first); free(sc_off); free(tb_off)
        free(sc_var); free(sc_str); free(tb); free(last)
    return result


# ----------------------------------------------------------------------------
# exact simplex on a fraction-free tableau of 64-bit integers

cdef struct Tab:
    i64 *T      # rows * W
    i64 *z      # W
    int *basis
    int rows
    int W       # columns including rhs (last)
    i64 D


cdef int _pivot(Tab *tb, int r, int j) except -1:
    cdef i64 p = tb.T[r * tb.W + j]
    cdef i64 D = tb.D
    cdef i64 *prow = tb.T + r * tb.W
    cdef i64 *row
    cdef i64 f, a, b, x, y, w
    cdef int i, k, W = tb.W
    for i in range(tb.rows + 1):
        if i == r:
            continue
        row = tb.z if i == tb.rows else tb.T + i * W
        f = row[j]
        if f != 0:
            for k in range(W):
                if ck_mul(row[k], p, &x) or ck_mul(f, prow[k], &y) or ck_sub(x, y, &w):
                    raise OverflowError("tableau entry exceeds 64 bits")
                row[k] = w / D
        elif p != D:
            for k in range(W):
                if ck_mul(row[k], p, &x):
                    raise OverflowError("tableau entry exceeds 64 bits")
                row[k] = x / D
    tb.D = p
    return 0


cdef int _run(Tab *tb, int width) except -1:
    cdef int m = tb.rows, W = tb.W
    cdef int degenerate = 0, bland = 0
    cdef int j, k, i, r
    cdef i64 best, a, lhs, rhs
    while True:
        j = -1
        if bland:
            for k in range(width):
                if tb.z[k] < 0:
                    j = k
                    break
        else:
            best = 0
            for k in range(width):
                if tb.z[k] < best:
                    best = tb.z[k]
                    j = k
        if j < 0:
            return 0
        r = -1
        for i in range(m):
            a = tb.T[i * W + j]
            if a > 0:
                if r < 0:
                    r = i
                    continue
                if ck_mul(tb.T[i * W + W - 1], tb.T[r * W + j], &lhs) or ck_mul(tb.T[r * W + W - 1], a, &rhs):
                    raise OverflowError("ratio test exceeds 64 bits")
                if lhs < rhs or (lhs == rhs and tb.basis[i] < tb.basis[r]):
                    r = i
        if r < 0:
            raise Unbounded()
        if tb.T[r * W + W - 1] == 0:
            degenerate += 1
            if degenerate > 2 * m + 10:
                bland = 1
        else:
            degenerate = 0
        _pivot(tb, r, j)
        tb.basis[r] = j


cdef list _solution(Tab *tb, int n):
    x = [0] * n
    cdef int i
    for i in range(tb.rows):
        if tb.basis[i] < n:
            x[tb.basis[i]] = tb.T[i * tb.W + tb.W - 1]
    return x


def simplex_support(A, b, n, want_max):
    cdef int m = len(A)
    cdef int nn = n
    cdef int W = nn + m + 1
    cdef Tab tb
    cdef int i, k, r, j
    cdef i64 v, acc
    tb.T = <i64 *> calloc(<size_t> (m if m > 0 else 1) * W, sizeof(i64))
    tb.z = <i64 *> calloc(W, sizeof(i64))
    tb.basis = <int *> malloc((m + 1) * sizeof(int))
    tb.rows = m
    tb.W = W
    tb.D = 1
    cdef i64 *T2 = NULL
    try:
        for i in range(m):
            row = A[i]
            sign = -1 if b[i] < 0 else 1
            for k in range(nn):
                tb.T[i * W + k] = sign * row[k]
            tb.T[i * W + nn + i] = 1
            tb.T[i * W + W - 1] = sign * b[i]
            tb.basis[i] = nn + i
        for k in range(W):
            if nn <= k < W - 1:
                continue
            acc = 0
            for i in range(m):
                if ck_sub(acc, tb.T[i * W + k], &acc):
                    raise OverflowError()
            tb.z[k] = acc
        _run(&tb, nn + m)
        if tb.z[W - 1] != 0:
            return None
        r = 0
        while r < tb.rows:
            if tb.basis[r] >= nn:
                j = -1
                for k in range(nn):
                    if tb.T[r * W + k] != 0:
                        j = k
                        break
                if j < 0:
                    memmove(tb.T + r * W, tb.T + (r + 1) * W, (tb.rows - r - 1) * W * sizeof(i64))
                    memmove(tb.basis + r, tb.basis + r + 1, (tb.rows - r - 1) * sizeof(int))
                    tb.rows -= 1
                    continue
                if tb.T[r * W + j] < 0:
                    for k in range(W):
                        tb.T[r * W + k] = -tb.T[r * W + k]
                _pivot(&tb, r, j)
                tb.basis[r] = j
            r += 1
        # drop artificial columns
        T2 = <i64 *> calloc(<size_t> (tb.rows if tb.rows > 0 else 1) * (nn + 1), sizeof(i64))
        for i in range(tb.rows):
            memcpy(T2 + i * (nn + 1), tb.T + i * W, nn * sizeof(i64))
            T2[i * (nn + 1) + nn] = tb.T[i * W + W - 1]
        free(tb.T)
        tb.T = T2
        T2 = NULL
        tb.W = nn + 1
        W = nn + 1
        sols = [(_solution(&tb, nn), tb.D)]
        if not want_max:
            return sols
        support = [x != 0 for x in sols[0][0]]
        while not all(support):
            for k in range(W):
                tb.z[k] = 0
            for k in range(nn):
                if not support[k]:
                    tb.z[k] = -tb.D
            for i in range(tb.rows):
                if not support[tb.basis[i]]:
                    for k in range(W):
                        if ck_add(tb.z[k], tb.T[i * W + k], &v):
                            raise OverflowError()
                        tb.z[k] = v
            _run(&tb, nn)
            x = _solution(&tb, nn)
            grew = False
            for k in range(nn):
                if x[k] and not support[k]:
                    support[k] = True
                    grew = True
            if not grew:
                break
            sols.append((x, tb.D))
        return sols
    finally:
        free(tb.T)
        free(tb.z)
        free(tb.basis)
        if T2 != NULL:
            free(T2)


# ----------------------------------------------------------------------------
# polymorphism checks

cdef inline u64 _splitmix(u64 *state) nogil:
    state[0] += <u64> 0x9E3779B97F4A7C15
    cdef u64 z = state[0]
    z = (z ^ (z >> 30)) * <u64> 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <u64> 0x94D049BB133111EB
    return z ^ (z >> 31)


cdef class _PolyData:
    cdef int *rows
    cdef int *ftab
    cdef i64 *fstr
    cdef unsigned char *dst
    cdef i64 *dstr
    cdef int *choice
    cdef int r, m, arity

    def __cinit__(self, src_rows, int arity, ftab, fstrides, dst_table, dst_strides, int m):
        cdef Py_ssize_t k
        self.m = m
        self.arity = arity
        self.r = len(src_rows) // m if m else 0
        self.rows = <int *> malloc((len(src_rows) + 1) * sizeof(int))
        self.ftab = <int *> malloc((len(ftab) + 1) * sizeof(int))
        self.fstr = <i64 *> malloc((arity + 1) * sizeof(i64))
        self.dst = <unsigned char *> malloc(len(dst_table) + 1)
        self.dstr = <i64 *> malloc((m + 1) * sizeof(i64))
        self.choice = <int *> calloc(arity + 1, sizeof(int))
        for k in range(len(src_rows)):
            self.rows[k] = src_rows[k]
        for k in range(len(ftab)):
            self.ftab[k] = ftab[k]
        for k in range(arity):
            self.fstr[k] = fstrides[k]
        cdef const unsigned char[:] view = dst_table
        for k in range(len(dst_table)):
            self.dst[k] = view[k]
        for k in range(m):
            self.dstr[k] = dst_strides[k]

    def __dealloc__(self):
        free(self.rows); free(self.ftab); free(self.fstr)
        free(self.dst); free(self.dstr); free(self.choice)

    cdef inline bint ok(self) nogil:
        cdef int i, k
        cdef i64 a, idx = 0
        for i in range(self.m):
            a = 0
            for k in range(self.arity):
                a += self.rows[self.choice[k] * self.m + i] * self.fstr[k]
            idx += self.ftab[a] * self.dstr[i]
        return self.dst[idx] != 0


def poly_exhaustive(src_rows, arity, ftab, fstrides, dst_table, dst_strides, m):
    cdef _PolyData P = _PolyData(src_rows, arity, ftab, fstrides, dst_table, dst_strides, m)
    cdef int k, found = 0
    if P.r == 0:
        return None
    with nogil:
        while True:
            if not P.ok():
                found = 1
                break
            k = P.arity - 1
            while k >= 0:
                P.choice[k] += 1
                if P.choice[k] < P.r:
                    break
                P.choice[k] = 0
                k -= 1
            if k < 0:
                break
    if found:
        return [P.choice[k] for k in range(P.arity)]
    return None


def poly_sampled(src_rows, arity, ftab, fstrides, dst_table, dst_strides, m, samples, seed):
    cdef _PolyData P = _PolyData(src_rows, arity, ftab, fstrides, dst_table, dst_strides, m)
    cdef u64 state = (<u64> (seed & 0xFFFFFFFFFFFFFFFF))
    cdef long long s, total = samples
    cdef int k, found = 0
    if P.r == 0:
        return None
    with nogil:
        for s in range(total):
            for k in range(P.arity):
                P.choice[k] = <int> (_splitmix(&state) % <u64> P.r)
            if not P.ok():
                found = 1
                break
    if found:
        return [P.choice[k] for k in range(P.arity)]
    return None
