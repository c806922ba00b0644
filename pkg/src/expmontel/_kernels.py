"""Hot numeric loops, with a numba path and a pure numpy path.

Set ``EXPMONTEL_NO_NUMBA=1`` to force the numpy path (it is also used when
numba is not importable, and always for object arrays holding exact scalars).
Both paths are importable by name through :data:`numpy_impl` and
:data:`numba_impl` so the benchmark and the tests can compare them.
"""
from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("EXPMONTEL_NO_NUMBA", "").strip().lower() not in (
    "1",
    "true",
    "yes",
)


def shrink_slices(shape, y):
    """Slices for ``out[x] = a[x + y] op a[x]`` restricted to the valid window."""
    ahead, here = [], []
    for L, k in zip(shape, y):
        k = int(k)
        if abs(k) >= L:
            return None, None
        if k >= 0:
            ahead.append(slice(k, L))
            here.append(slice(0, L - k))
        else:
            ahead.append(slice(0, L + k))
            here.append(slice(-k, L))
    return tuple(ahead), tuple(here)


# ---------------------------------------------------------------------------
# numpy implementations


def _shift_combine_np(values: np.ndarray, y, c) -> np.ndarray:
    ahead, here = shrink_slices(values.shape, y)
    if ahead is None:
        raise ValueError("shift leaves no valid points")
    return values[ahead] - c * values[here]


def _hankel_rows_np(sections: np.ndarray, r: int, scales: np.ndarray) -> np.ndarray:
    k, L = sections.shape
    win = np.lib.stride_tricks.sliding_window_view(sections, r + 1, axis=1)
    rows = win.reshape(k * (L - r), r + 1).astype(np.complex128, copy=True)
    swin = np.lib.stride_tricks.sliding_window_view(np.abs(scales), r + 1, axis=1)
    norms = np.sqrt((swin.reshape(k * (L - r), r + 1) ** 2).sum(axis=1))
    keep = norms > 0
    rows = rows[keep] / norms[keep, None]
    return rows


def _prefix_levels_np(add: np.ndarray, prefixes: np.ndarray, basis: np.ndarray) -> np.ndarray:
    g = np.broadcast_to(basis, (prefixes.shape[0],) + basis.shape)
    for j in range(prefixes.shape[1]):
        idx = add[:, prefixes[:, j]].T  # (U, G)
        g = np.take_along_axis(g, idx[:, :, None], axis=1) - g
    return g


def _difference_scan_np(add: np.ndarray, tuples: np.ndarray, basis: np.ndarray, tol: float,
                        start: int = 0, chunk: int = 16384) -> int:
    # blocks grow from a few tuples so an early failure costs little; inside
    # a block each run of tuples sharing a prefix differences it once, then
    # one gather per tuple applies the last shift
    T, m = tuples.shape
    if m == 0:
        return start if start < T and np.abs(basis).max(initial=0.0) > tol else -1
    s, size = start, 8
    while s < T:
        block = tuples[s : s + size]
        if m > 1:
            head = block[:, :-1]
            change = np.empty(block.shape[0], dtype=bool)
            change[0] = True
            np.any(head[1:] != head[:-1], axis=1, out=change[1:])
            inv = np.cumsum(change) - 1
            g = _prefix_levels_np(add, head[change], basis)
        else:
            g = basis[None]
            inv = np.zeros(block.shape[0], dtype=np.intp)
        out = g[inv[:, None], add[:, block[:, -1]].T]
        out -= g[inv]
        bad = np.abs(out).reshape(block.shape[0], -1).max(axis=1) > tol
        if bad.any():
            return s + int(np.argmax(bad))
        s += block.shape[0]
        size = min(2 * size, chunk)
    return -1


def _apply_tuple_np(add: np.ndarray, shifts, basis: np.ndarray) -> np.ndarray:
    g = basis
    for y in shifts:
        g = g[add[:, int(y)]] - g
    return g


numpy_impl = SimpleNamespace(
    shift_combine=_shift_combine_np,
    hankel_rows=_hankel_rows_np,
    difference_scan=_difference_scan_np,
    apply_tuple=_apply_tuple_np,
)


# ---------------------------------------------------------------------------
# numba implementations

if HAVE_NUMBA:

    @njit(cache=True)
    def _shift_combine_flat(flat, shape, y, c, out_shape):
        ndim = shape.shape[0]
        strides = np.empty(ndim, dtype=np.int64)
        acc = 1
        for i in range(ndim - 1, -1, -1):
            strides[i] = acc
            acc *= shape[i]
        base = np.empty(ndim, dtype=np.int64)
        off = 0
        for i in range(ndim):
            base[i] = -y[i] if y[i] < 0 else 0
            off += y[i] * strides[i]
        total = 1
        for i in range(ndim):
            total *= out_shape[i]
        out = np.empty(total, dtype=np.complex128)
        idx = np.zeros(ndim, dtype=np.int64)
        for t in range(total):
            src = 0
            for i in range(ndim):
                src += (idx[i] + base[i]) * strides[i]
            out[t] = flat[src + off] - c * flat[src]
            for i in range(ndim - 1, -1, -1):
                idx[i] += 1
                if idx[i] < out_shape[i]:
                    break
                idx[i] = 0
        return out

    def _shift_combine_nb(values: np.ndarray, y, c) -> np.ndarray:
        shape = np.asarray(values.shape, dtype=np.int64)
        yy = np.asarray(y, dtype=np.int64)
        out_shape = shape - np.abs(yy)
        if np.any(out_shape <= 0):
            raise ValueError("shift leaves no valid points")
        flat = np.ascontiguousarray(values, dtype=np.complex128).ravel()
        out = _shift_combine_flat(flat, shape, yy, complex(c), out_shape)
        return out.reshape(tuple(out_shape))

    @njit(cache=True)
    def _hankel_rows_kernel(sections, r, scales):
        k, L = sections.shape
        m = L - r
        rows = np.empty((k * m, r + 1), dtype=np.complex128)
        keep = 0
        for s in range(k):
            for j in range(m):
                nrm = 0.0
                for i in range(r + 1):
                    v = scales[s, j + i]
                    nrm += v * v
                if nrm == 0.0:
                    continue
                nrm = np.sqrt(nrm)
                for i in range(r + 1):
                    rows[keep, i] = sections[s, j + i] / nrm
                keep += 1
        return rows[:keep]

    def _hankel_rows_nb(sections: np.ndarray, r: int, scales: np.ndarray) -> np.ndarray:
        return _hankel_rows_kernel(
            np.ascontiguousarray(sections, dtype=np.complex128),
            int(r),
            np.ascontiguousarray(np.abs(scales), dtype=np.float64),
        )

    @njit(cache=True)
    def _difference_scan_kernel(add, tuples, basis, tol, start):
        # levels[j] holds the basis after the first j shifts; consecutive
        # tuples sharing a prefix reuse those levels
        T, m = tuples.shape
        G, k = basis.shape
        levels = np.empty((m + 1, G, k), dtype=np.float64)
        for x in range(G):
            for c in range(k):
                levels[0, x, c] = basis[x, c]
        valid = 0
        for t in range(start, T):
            j0 = 0
            if t > start:
                j0 = valid
                for j in range(valid):
                    if tuples[t, j] != tuples[t - 1, j]:
                        j0 = j
                        break
            for j in range(j0, m):
                y = tuples[t, j]
                for x in range(G):
                    xy = add[x, y]
                    for c in range(k):
                        levels[j + 1, x, c] = levels[j, xy, c] - levels[j, x, c]
            valid = m
            for x in range(G):
                for c in range(k):
                    if abs(levels[m, x, c]) > tol:
                        return t
        return -1

    def _difference_scan_nb(add, tuples, basis, tol, start=0, chunk=0):
        basis = np.ascontiguousarray(basis, dtype=np.float64)
        return int(
            _difference_scan_kernel(
                np.ascontiguousarray(add, dtype=np.int64),
                np.ascontiguousarray(tuples, dtype=np.int64),
                basis,
                float(tol),
                int(start),
            )
        )

    numba_impl = SimpleNamespace(
        shift_combine=_shift_combine_nb,
        hankel_rows=_hankel_rows_nb,
        difference_scan=_difference_scan_nb,
        apply_tuple=_apply_tuple_np,
    )
else:  # pragma: no cover
    numba_impl = None


_active = numba_impl if USE_NUMBA else numpy_impl


def shift_combine(values: np.ndarray, y, c) -> np.ndarray:
    """``out[x] = values[x + y] - c * values[x]`` on the shrunken window.

    Always the numpy path: two strided slices beat the compiled loop at every
    size measured (see ``benchmarks/bench_kernels.py``).
    """
    return numpy_impl.shift_combine(values, y, c)


def hankel_rows(sections: np.ndarray, r: int, scales: np.ndarray | None = None) -> np.ndarray:
    """Stacked Hankel rows of width ``r + 1`` from each row of ``sections``.

    Each row is divided by the norm of the matching window of ``scales``
    (default: the row itself); rows with a zero scale are dropped.
    """
    if scales is None:
        scales = sections
    return _active.hankel_rows(sections, r, scales)


def difference_scan(add, tuples, basis, tol, start=0) -> int:
    """First tuple index whose iterated plain difference of ``basis`` exceeds ``tol``."""
    if np.iscomplexobj(basis):
        return numpy_impl.difference_scan(add, tuples, basis, tol, start)
    return _active.difference_scan(add, tuples, basis, tol, start)


def apply_tuple(add, shifts, basis):
    return numpy_impl.apply_tuple(add, shifts, basis)


def backend_name() -> str:
    return "numba" if _active is numba_impl and numba_impl is not None else "numpy"
