"""Hot kernels with a compiled implementation and a pure-Python fallback.

The compiled extension ``_kernels`` is used when it imports; otherwise the
pure-Python module is used.  Setting ``CSPUNIV_PURE_PYTHON=1`` forces the
fallback.  ``BACKEND`` names the active implementation.

Compiled kernels run on 64-bit integers and raise ``OverflowError`` when a
value escapes that range; the wrappers below then rerun the call in Python.
"""

from __future__ import annotations

import os

from . import _kernels_py as py

if os.environ.get("CSPUNIV_PURE_PYTHON", "") not in ("", "0"):
    _impl = py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _impl = py

BACKEND = "compiled" if _impl is not py else "python"
Unbounded = py.Unbounded


def backtrack(sizes, cons):
    return _impl.backtrack(sizes, cons)


def simplex_support(A, b, n, want_max):
    if _impl is not py:
        try:
            return _impl.simplex_support(A, b, n, want_max)
        except OverflowError:
            pass
    return py.simplex_support(A, b, n, want_max)


def poly_exhaustive(src_rows, arity, ftab, fstrides, dst_table, dst_strides, m):
    return _impl.poly_exhaustive(src_rows, arity, ftab, fstrides, dst_table, dst_strides, m)


def poly_sampled(src_rows, arity, ftab, fstrides, dst_table, dst_strides, m, samples, seed):
    return _impl.poly_sampled(
        src_rows, arity, ftab, fstrides, dst_table, dst_strides, m, samples, seed
    )
