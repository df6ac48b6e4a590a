"""Dense two-phase tableau simplex for small linear programs.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq`` and
``x >= 0``. Pivoting uses Bland's rule by default, which cannot cycle. After
the tableau terminates the basic solution is recomputed from the original
data and its residuals are checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels


class LPError(RuntimeError):
    pass


@dataclass(frozen=True)
class LPResult:
    status: str
    x: np.ndarray | None
    fun: float | None
    iterations: int
    residual: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _as2d(A, n):
    if A is None:
        return np.zeros((0, n))
    return np.asarray(A, dtype=float).reshape(-1, n)


def _residual(A_ub, b_ub, A_eq, b_eq, x) -> float:
    parts = [0.0, float(np.max(-x, initial=0.0))]
    if len(b_ub):
        parts.append(float(np.max(A_ub @ x - b_ub, initial=0.0)))
    if len(b_eq):
        parts.append(float(np.max(np.abs(A_eq @ x - b_eq), initial=0.0)))
    return max(parts)


def linprog(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    tol: float = 1e-9,
    feas_tol: float = 1e-8,
    max_iter: int | None = None,
    rule: str = "bland",
) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = len(c)
    A_ub, A_eq = _as2d(A_ub, n), _as2d(A_eq, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m1, m2 = len(b_ub), len(b_eq)
    m = m1 + m2
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    bland = rule == "bland"
    if rule not in ("bland", "dantzig"):
        raise ValueError(f"unknown pivot rule {rule!r}")

    # columns: originals | one slack per <= row | artificials
    flip = np.concatenate([b_ub < 0, b_eq < 0])
    need_art = np.concatenate([b_ub < 0, np.ones(m2, dtype=bool)])
    n_art = int(need_art.sum())
    n_std = n + m1
    width = n_std + n_art + 1
    T = np.zeros((m + 1, width))
    T[:m1, :n] = A_ub
    T[:m1, n : n + m1] = np.eye(m1)
    T[m1:m, :n] = A_eq
    T[:m1, -1] = b_ub
    T[m1:m, -1] = b_eq
    T[:m][flip] *= -1.0
    basis = np.empty(m, dtype=np.int64)
    art_rows = np.nonzero(need_art)[0]
    for k, i in enumerate(art_rows):
        T[i, n_std + k] = 1.0
        basis[i] = n_std + k
    slack_rows = np.nonzero(~need_art)[0]
    basis[slack_rows] = n + slack_rows

    iters = 0
    if n_art:
        T[m, :] = 0.0
        T[m, n_std : n_std + n_art] = 1.0
        T[m] -= T[art_rows].sum(axis=0)
        status, it = _kernels.simplex_iterate(T, basis, n_std + n_art, tol, max_iter, bland)
        iters += it
        if status == _kernels.ITERATION_LIMIT:
            return LPResult("iteration_limit", None, None, iters)
        scale = max(1.0, float(np.abs(np.concatenate([b_ub, b_eq])).max(initial=0.0)))
        if -T[m, -1] > feas_tol * scale:
            return LPResult("infeasible", None, None, iters)
        # pivot zero-level artificials out of the basis; drop redundant rows
        keep = np.ones(m + 1, dtype=bool)
        for i in range(m):
            if basis[i] >= n_std:
                cand = np.nonzero(np.abs(T[i, :n_std]) > 1e-9)[0]
                if len(cand) == 0:
                    keep[i] = False
                    continue
                e = int(cand[np.argmax(np.abs(T[i, cand]))])
                T[i] /= T[i, e]
                f = T[:, e].copy()
                f[i] = 0.0
                T -= np.outer(f, T[i])
                basis[i] = e
        T = T[keep]
        basis = basis[keep[:m]]
        T = np.ascontiguousarray(np.delete(T, np.s_[n_std : n_std + n_art], axis=1))
        m = T.shape[0] - 1

    cost = np.concatenate([c, np.zeros(m1)])
    T[m, :n_std] = cost - cost[basis] @ T[:m, :n_std]
    T[m, -1] = -cost[basis] @ T[:m, -1]
    status, it = _kernels.simplex_iterate(T, basis, n_std, tol, max_iter, bland)
    iters += it
    if status == _kernels.UNBOUNDED:
        return LPResult("unbounded", None, None, iters)
    if status == _kernels.ITERATION_LIMIT:
        return LPResult("iteration_limit", None, None, iters)

    z = np.zeros(n_std)
    z[basis] = T[:m, -1]
    x = np.clip(z[:n], 0.0, None)
    res = _residual(A_ub, b_ub, A_eq, b_eq, x)
    # recompute the basic solution from the original rows to shed tableau drift
    A_full = np.zeros((m1 + m2, n_std))
    A_full[:m1, :n] = A_ub
    A_full[:m1, n:] = np.eye(m1)
    A_full[m1:, :n] = A_eq
    b_full = np.concatenate([b_ub, b_eq])
    zb, *_ = np.linalg.lstsq(A_full[:, basis], b_full, rcond=None)
    z2 = np.zeros(n_std)
    z2[basis] = zb
    x2 = np.clip(z2[:n], 0.0, None)
    res2 = _residual(A_ub, b_ub, A_eq, b_eq, x2)
    if res2 < res:
        x, res = x2, res2
    return LPResult("optimal", x, float(c @ x), iters, res)
