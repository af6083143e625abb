"""Kernel SVMs trained with sequential minimal optimization.

Both tasks are reduced to the same dual problem::

    min_a  0.5 a'Qa + p'a   s.t.  y'a = 0,  0 <= a_t <= C,  Q_st = y_s y_t K(s, t)

with ``y`` in {-1, +1}. Classification uses ``p = -1``; epsilon-SVR doubles
the variables into ``[alpha; alpha*]`` with ``y = [+1; -1]`` and
``p = [eps - z; eps + z]``. Working pairs are chosen with second-order
information (maximal violating ``i``, then the ``j`` with the largest
guaranteed objective decrease) and the solver stops once the maximal KKT
violation ``m(a) - M(a)`` drops below ``tol``.
"""

from __future__ import annotations

import warnings
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from numba import njit

from termlab.errors import InputError, NumericalError

TAU = 1e-12

CLASSIFICATION = "classification"
REGRESSION = "epsilon-regression"


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("rbf", "linear"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def with_default_gamma(self, x) -> "KernelSpec":
        """Fill in ``gamma = 1 / (d * Var(x))`` when it was left unset."""
        if self.kind != "rbf" or self.gamma is not None:
            return self
        x = np.asarray(x, dtype=np.float64)
        var = float(x.var()) if x.size else 0.0
        d = x.shape[1] if x.ndim == 2 else 1
        return KernelSpec("rbf", 1.0 / (d * var) if var > 0 else 1.0)

    def matrix(self, a, b) -> np.ndarray:
        if self.kind == "linear":
            k = a @ b.T
            return k.toarray() if sp.issparse(k) else np.asarray(k, dtype=np.float64)
        if self.gamma is None:
            raise ValueError("RBF kernel needs gamma")
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        d2 = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * (a @ b.T)
        np.maximum(d2, 0.0, out=d2)
        return np.exp(-self.gamma * d2)


class KernelRows:
    """Lazily computed kernel rows ``K(x_i, X)`` with a bounded LRU cache."""

    def __init__(self, x, kernel: KernelSpec, cache_rows: int = 1024):
        self.x = x
        self.kernel = kernel
        self.cache_rows = max(2, int(cache_rows))
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()
        if sp.issparse(x):
            if kernel.kind != "linear":
                raise ValueError("sparse input is only supported with the linear kernel")
            self.sq = np.asarray(x.multiply(x).sum(axis=1)).ravel()
        else:
            self.sq = (x * x).sum(axis=1)
        self.diag = self.sq.copy() if kernel.kind == "linear" else np.ones(x.shape[0])

    def __len__(self):
        return self.x.shape[0]

    def row(self, i: int) -> np.ndarray:
        r = self._rows.get(i)
        if r is not None:
            self._rows.move_to_end(i)
            return r
        if self.kernel.kind == "linear":
            r = self.x @ self.x[i].T
            r = r.toarray().ravel() if sp.issparse(r) else np.asarray(r, dtype=np.float64).ravel()
        else:
            xi = self.x[i]
            d2 = self.sq + self.sq[i] - 2.0 * (self.x @ xi)
            np.maximum(d2, 0.0, out=d2)
            r = np.exp(-self.kernel.gamma * d2)
        self._rows[i] = r
        if len(self._rows) > self.cache_rows:
            self._rows.popitem(last=False)
        return r


@dataclass
class DualSolution:
    alpha: np.ndarray
    grad: np.ndarray
    rho: float
    n_iter: int
    kkt_violation: float
    objective: float
    converged: bool


def kkt_violation(alpha, grad, y, c) -> float:
    """Maximal violating-pair gap ``m(a) - M(a)`` (0 when only one side exists)."""
    yg = -y * grad
    up = np.where(y > 0, alpha < c, alpha > 0)
    low = np.where(y > 0, alpha > 0, alpha < c)
    if not up.any() or not low.any():
        return 0.0
    return max(0.0, float(yg[up].max() - yg[low].min()))


@njit(cache=True)
def _select_i(grad, alpha, y, c):
    l = grad.shape[0]
    g_max = -np.inf
    g_min = np.inf
    i = -1
    for t in range(l):
        a = alpha[t]
        if y[t] > 0:
            yg = -grad[t]
            if a < c and yg > g_max:
                g_max = yg
                i = t
            if a > 0 and yg < g_min:
                g_min = yg
        else:
            yg = grad[t]
            if a > 0 and yg > g_max:
                g_max = yg
                i = t
            if a < c and yg < g_min:
                g_min = yg
    return i, g_max, g_min


@njit(cache=True)
def _select_j(grad, alpha, y, c, ki, kdiag, kii, g_max):
    n = kdiag.shape[0]
    best = np.inf
    j = -1
    for b in range(grad.shape[0] // n):
        off = b * n
        for s in range(n):
            t = off + s
            if y[t] > 0:
                if alpha[t] <= 0:
                    continue
                diff = g_max + grad[t]
            else:
                if alpha[t] >= c:
                    continue
                diff = g_max - grad[t]
            if diff <= 0:
                continue
            quad = kii + kdiag[s] - 2.0 * ki[s]
            if quad <= 0:
                quad = TAU
            score = -diff * diff / quad
            if score < best:
                best = score
                j = t
    return j


@njit(cache=True)
def _update_grad(grad, y, ki, kj, wi, wj):
    n = ki.shape[0]
    for b in range(grad.shape[0] // n):
        off = b * n
        for s in range(n):
            t = off + s
            grad[t] += y[t] * (wi * ki[s] + wj * kj[s])


def solve_dual(k_row: Callable[[int], np.ndarray], k_diag: np.ndarray, p: np.ndarray,
               y: np.ndarray, c: float, tol: float = 1e-3, max_iter: int | None = None,
               callback: Callable[[np.ndarray], None] | None = None) -> DualSolution:
    """Solve the dual from ``a = 0`` with ``Q_st = y_s y_t K(s mod n, t mod n)``.

    ``k_row(b)`` returns row ``b`` of the ``n x n`` kernel matrix and ``k_diag``
    its diagonal; ``len(p)`` must be a multiple of ``n`` (``n`` for
    classification, ``2n`` for epsilon-SVR).
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    p = np.ascontiguousarray(p, dtype=np.float64)
    k_diag = np.ascontiguousarray(k_diag, dtype=np.float64)
    l, n = len(p), len(k_diag)
    if l % n:
        raise ValueError("number of dual variables must be a multiple of the kernel size")
    c = float(c)
    alpha = np.zeros(l)
    grad = p.copy()
    if max_iter is None:
        max_iter = max(10_000_000, 100 * l)

    n_iter = 0
    converged = False
    gap = np.inf
    while n_iter < max_iter:
        i, g_max, g_min = _select_i(grad, alpha, y, c)
        if i < 0 or not np.isfinite(g_min):
            gap = 0.0
            converged = True
            break
        gap = g_max - g_min
        if gap < tol:
            converged = True
            break
        ki = k_row(i % n)
        j = _select_j(grad, alpha, y, c, ki, k_diag, k_diag[i % n], g_max)
        if j < 0:
            converged = True
            break
        kj = k_row(j % n)

        ai, aj = alpha[i], alpha[j]
        kii, kjj, kij = k_diag[i % n], k_diag[j % n], ki[j % n]
        quad_ij = kii + kjj - 2.0 * kij
        if quad_ij <= 0:
            quad_ij = TAU
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad_ij
            d = ai - aj
            ni, nj = ai + delta, aj + delta
            if d > 0:
                if nj < 0:
                    nj, ni = 0.0, d
            elif ni < 0:
                ni, nj = 0.0, -d
            if d > 0:
                if ni > c:
                    ni, nj = c, c - d
            elif nj > c:
                nj, ni = c, c + d
        else:
            delta = (grad[i] - grad[j]) / quad_ij
            s = ai + aj
            ni, nj = ai - delta, aj + delta
            if s > c:
                if ni > c:
                    ni, nj = c, s - c
            elif nj < 0:
                nj, ni = 0.0, s
            if s > c:
                if nj > c:
                    nj, ni = c, s - c
            elif ni < 0:
                ni, nj = 0.0, s
        alpha[i], alpha[j] = ni, nj
        _update_grad(grad, y, ki, kj, y[i] * (ni - ai), y[j] * (nj - aj))
        n_iter += 1
        if callback is not None:
            callback(alpha)

    if not np.isfinite(grad).all():
        raise NumericalError("non-finite gradient in SMO")
    if not converged:
        warnings.warn(f"SMO stopped after {n_iter} iterations with KKT gap {gap:.3g}",
                      RuntimeWarning, stacklevel=2)
    rho = _rho(alpha, grad, y, c)
    objective = float(0.5 * alpha @ (grad + p))
    return DualSolution(alpha, grad, rho, n_iter, max(0.0, float(gap)), objective, converged)


def _rho(alpha, grad, y, c) -> float:
    yg = y * grad
    at_upper = alpha >= c
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(yg[free].mean())
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yg[ub_mask].min() if ub_mask.any() else np.inf
    lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
    if not np.isfinite(ub):
        return float(lb)
    if not np.isfinite(lb):
        return float(ub)
    return float((ub + lb) / 2)


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    kernel: KernelSpec
    task: str
    n_iter: int = 0
    kkt_violation: float = 0.0
    objective: float = 0.0
    alpha: np.ndarray | None = field(default=None, repr=False)
    _w: np.ndarray | None = field(default=None, repr=False)

    def decision_function(self, x) -> np.ndarray:
        if self.kernel.kind == "linear":
            if self._w is None:
                w = self.support_vectors.T @ self.dual_coef
                self._w = np.asarray(w).ravel()
            out = x @ self._w
            return np.asarray(out, dtype=np.float64).ravel() + self.bias
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if len(self.dual_coef) == 0:
            return np.full(x.shape[0], self.bias)
        out = np.empty(x.shape[0])
        step = 2048
        for s in range(0, x.shape[0], step):
            out[s:s + step] = self.kernel.matrix(x[s:s + step], self.support_vectors) @ self.dual_coef
        return out + self.bias

    def predict(self, x) -> np.ndarray:
        f = self.decision_function(x)
        if self.task == CLASSIFICATION:
            return np.where(f > 0, 1, -1)
        return f

    def to_dict(self) -> dict:
        sv = self.support_vectors
        if sp.issparse(sv):
            sv = sv.toarray()
        return {
            "task": self.task,
            "kernel": {"kind": self.kernel.kind, "gamma": self.kernel.gamma},
            "support_vectors": np.asarray(sv).tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "bias": self.bias,
            "n_iter": self.n_iter,
            "kkt_violation": self.kkt_violation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        k = d["kernel"]
        sv = np.asarray(d["support_vectors"], dtype=np.float64)
        return cls(sv.reshape(len(d["dual_coef"]), -1), np.asarray(d["dual_coef"], dtype=np.float64),
                   float(d["bias"]), KernelSpec(k["kind"], k.get("gamma")), d["task"],
                   int(d.get("n_iter", 0)), float(d.get("kkt_violation", 0.0)))


def _check_x(x):
    if sp.issparse(x):
        x = sp.csr_matrix(x, dtype=np.float64)
        if not np.isfinite(x.data).all():
            raise InputError("non-finite feature values")
        return x
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if not np.isfinite(x).all():
        raise InputError("non-finite feature values")
    return x


def smo_train(x, y, task: str = CLASSIFICATION, kernel: KernelSpec = KernelSpec(),
              C: float = 1.0, epsilon: float = 0.1, tol: float = 1e-3,
              cache_rows: int = 1024, max_iter: int | None = None,
              callback=None) -> SvmModel:
    """Train a kernel SVM classifier (labels in {0,1} or {-1,+1}) or epsilon-SVR."""
    x = _check_x(x)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = x.shape[0]
    if n < 2:
        raise InputError("need at least 2 training samples")
    if len(y) != n:
        raise InputError("x and y lengths differ")
    if not np.isfinite(y).all():
        raise InputError("non-finite targets")
    if not C > 0:
        raise ValueError("C must be positive")
    if not sp.issparse(x):
        kernel = kernel.with_default_gamma(x)
    elif kernel.kind != "linear":
        raise InputError("sparse features need the linear kernel")
    rows = KernelRows(x, kernel, cache_rows)

    if task == CLASSIFICATION:
        labels = np.where(y > 0, 1.0, -1.0)
        if len(np.unique(labels)) < 2:
            raise InputError("classification needs both classes in the training data")

        sol = solve_dual(rows.row, rows.diag, -np.ones(n), labels, C, tol, max_iter, callback)
        coef = labels * sol.alpha
    elif task == REGRESSION:
        signs = np.concatenate([np.ones(n), -np.ones(n)])
        p = np.concatenate([epsilon - y, epsilon + y])
        sol = solve_dual(rows.row, rows.diag, p, signs, C, tol, max_iter, callback)
        coef = sol.alpha[:n] - sol.alpha[n:]
    else:
        raise ValueError(f"unknown task {task!r}")

    sv = np.flatnonzero(coef != 0)
    return SvmModel(
        support_vectors=x[sv], dual_coef=coef[sv], bias=-sol.rho, kernel=kernel, task=task,
        n_iter=sol.n_iter, kkt_violation=sol.kkt_violation, objective=sol.objective,
        alpha=sol.alpha)
