"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``STOREFLEET_DISABLE_NUMBA=1`` to force the numpy path (useful when
debugging, or where numba is not installed). Both paths implement the same
pivoting rules and return identical results up to floating-point rounding.
"""

import os

import numpy as np

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None

USE_NUMBA = nb is not None and os.environ.get("STOREFLEET_DISABLE_NUMBA", "0") in ("", "0")

OPTIMAL, UNBOUNDED, ITERATION_LIMIT = 0, 1, 2


def simplex_iterate_py(T, basis, ncols, tol, max_iter, bland):
    """Primal simplex on tableau ``T`` in place.

    ``T[:-1]`` holds constraint rows ``B^-1 A | B^-1 b``; ``T[-1]`` holds the
    reduced costs and ``-z``. Only columns ``< ncols`` may enter.
    """
    m = T.shape[0] - 1
    rhs = T.shape[1] - 1
    for it in range(max_iter):
        red = T[m, :ncols]
        if bland:
            cand = np.nonzero(red < -tol)[0]
            if len(cand) == 0:
                return OPTIMAL, it
            e = int(cand[0])
        else:
            e = int(np.argmin(red))
            if red[e] >= -tol:
                return OPTIMAL, it
        col = T[:m, e]
        rows = np.nonzero(col > tol)[0]
        if len(rows) == 0:
            return UNBOUNDED, it
        ratios = T[rows, rhs] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = int(ties[np.argmin(basis[ties])])
        T[r] /= T[r, e]
        f = T[:, e].copy()
        f[r] = 0.0
        T -= np.outer(f, T[r])
        basis[r] = e
    return ITERATION_LIMIT, max_iter


def _simplex_iterate_nb(T, basis, ncols, tol, max_iter, bland):
    m = T.shape[0] - 1
    width = T.shape[1]
    rhs = width - 1
    for it in range(max_iter):
        e = -1
        if bland:
            for j in range(ncols):
                if T[m, j] < -tol:
                    e = j
                    break
        else:
            lo = -tol
            for j in range(ncols):
                if T[m, j] < lo:
                    lo = T[m, j]
                    e = j
        if e < 0:
            return OPTIMAL, it
        best = np.inf
        for i in range(m):
            a = T[i, e]
            if a > tol:
                q = T[i, rhs] / a
                if q < best:
                    best = q
        if best == np.inf:
            return UNBOUNDED, it
        band = best + 1e-12 * max(1.0, abs(best))
        r = -1
        for i in range(m):
            a = T[i, e]
            if a > tol and T[i, rhs] / a <= band:
                if r < 0 or basis[i] < basis[r]:
                    r = i
        piv = T[r, e]
        for j in range(width):
            T[r, j] /= piv
        for i in range(m + 1):
            if i == r:
                continue
            f = T[i, e]
            if f != 0.0:
                for j in range(width):
                    T[i, j] -= f * T[r, j]
        basis[r] = e
    return ITERATION_LIMIT, max_iter


# compiled lazily on first call, so importing costs nothing when disabled
simplex_iterate_nb = nb.njit(cache=True, nogil=True)(_simplex_iterate_nb) if nb is not None else None
simplex_iterate = simplex_iterate_nb if USE_NUMBA else simplex_iterate_py


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
