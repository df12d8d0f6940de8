"""Independent reference implementations used only by the tests.

Nothing here imports the package's solvers: the tableau simplex, the edge-use
enumeration, Bellman-Ford and the path-rank search are written from scratch so
that agreement with the package is evidence rather than tautology.
"""
from __future__ import annotations

import itertools
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

TOL = 1e-9


# ---------------------------------------------------------------------------
# dense tableau simplex, two phases, Bland's rule

def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    for i in range(T.shape[0]):
        if i != r and T[i, c] != 0.0:
            T[i] -= T[i, c] * T[r]


def _run(T: np.ndarray, basis: List[int], allowed: int, max_iter: int = 50_000) -> str:
    """Minimise with the cost row stored last as reduced costs; columns >= allowed never enter."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        enter = next((j for j in range(allowed) if T[-1, j] < -TOL), None)
        if enter is None:
            return "optimal"
        best, leave = math.inf, None
        for i in range(m):
            if T[i, enter] > TOL:
                ratio = T[i, -1] / T[i, enter]
                if ratio < best - TOL or (abs(ratio - best) <= TOL and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            return "unbounded"
        _pivot(T, leave, enter)
        basis[leave] = enter
    raise RuntimeError("tableau simplex did not terminate")


def tableau_lp(c, A_ub, b_ub, A_eq, b_eq) -> Tuple[str, Optional[float], Optional[np.ndarray]]:
    """``min c x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""
    c = np.asarray(c, float)
    n = len(c)
    A_ub = np.asarray(A_ub, float).reshape(-1, n)
    A_eq = np.asarray(A_eq, float).reshape(-1, n)
    b_ub = np.asarray(b_ub, float)
    b_eq = np.asarray(b_eq, float)
    m_ub, m_eq = len(b_ub), len(b_eq)
    m = m_ub + m_eq
    # columns: x | slacks | artificials | rhs
    T = np.zeros((m + 1, n + m_ub + m + 1))
    basis = []
    for i in range(m_ub):
        T[i, :n] = A_ub[i]
        T[i, n + i] = 1.0
        T[i, -1] = b_ub[i]
    for k in range(m_eq):
        T[m_ub + k, :n] = A_eq[k]
        T[m_ub + k, -1] = b_eq[k]
    for i in range(m):
        if T[i, -1] < 0:
            T[i] *= -1
        T[i, n + m_ub + i] = 1.0
        basis.append(n + m_ub + i)
    # phase one: minimise the sum of artificials
    T[-1, :] = 0.0
    T[-1, n + m_ub:n + m_ub + m] = 1.0
    for i in range(m):
        T[-1] -= T[i]
    _run(T, basis, n + m_ub + m)
    if -T[-1, -1] > 1e-7:
        return "infeasible", None, None
    # drive remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= n + m_ub:
            col = next((j for j in range(n + m_ub) if abs(T[i, j]) > 1e-9), None)
            if col is not None:
                _pivot(T, i, col)
                basis[i] = col
    # phase two with the real costs
    T[-1, :] = 0.0
    T[-1, :n] = c
    for i in range(m):
        if basis[i] < n + m_ub and T[-1, basis[i]] != 0.0:
            T[-1] -= T[-1, basis[i]] * T[i]
    status = _run(T, basis, n + m_ub)
    if status == "unbounded":
        return status, None, None
    x = np.zeros(n + m_ub + m)
    for i in range(m):
        x[basis[i]] = T[i, -1]
    return "optimal", float(c @ x[:n]), x[:n]


def tableau_from_model(model) -> Tuple[str, Optional[float]]:
    """Solve a model's LP relaxation with the tableau oracle.

    Columns are shifted to a zero lower bound (all lower bounds must be
    finite); finite upper bounds and two-sided rows become extra rows.
    """
    c, A, lo, hi, col_lo, col_hi = model.dense()
    if not np.all(np.isfinite(col_lo)):
        raise ValueError("oracle needs finite lower bounds")
    shift = A @ col_lo
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for i in range(A.shape[0]):
        l, h = lo[i] - shift[i], hi[i] - shift[i]
        if np.isfinite(l) and np.isfinite(h) and l == h:
            eq_rows.append(A[i])
            eq_rhs.append(l)
            continue
        if np.isfinite(h):
            ub_rows.append(A[i])
            ub_rhs.append(h)
        if np.isfinite(l):
            ub_rows.append(-A[i])
            ub_rhs.append(-l)
    n = len(c)
    for j in range(n):
        if np.isfinite(col_hi[j]):
            row = np.zeros(n)
            row[j] = 1.0
            ub_rows.append(row)
            ub_rhs.append(col_hi[j] - col_lo[j])
    status, value, _ = tableau_lp(c, np.array(ub_rows).reshape(-1, n), ub_rhs,
                                  np.array(eq_rows).reshape(-1, n), eq_rhs)
    if value is not None:
        value += float(c @ col_lo)
        if model.sense == "max":
            value = -value
    return status, value


# ---------------------------------------------------------------------------
# naive STSP enumeration

def naive_stsp(n_nodes: int, edges: Sequence[Tuple[int, int, float]], required: Sequence[int],
               cap: Optional[int] = None) -> Tuple[float, Optional[Tuple[int, ...]]]:
    """Cheapest connected even multigraph in ``{0,1,2}^E`` covering ``required`` and node 1."""
    need = set(required) | {1}
    best, arg = math.inf, None
    for x in itertools.product((0, 1, 2), repeat=len(edges)):
        if cap is not None and sum(x) > cap:
            continue
        deg = [0] * (n_nodes + 1)
        adj: Dict[int, List[int]] = {}
        for (u, v, _), k in zip(edges, x):
            if k:
                deg[u] += k
                deg[v] += k
                adj.setdefault(u, []).append(v)
                adj.setdefault(v, []).append(u)
        if any(d % 2 for d in deg):
            continue
        if len(need) > 1 and not need <= set(adj):
            continue
        if adj:
            if 1 not in adj:
                continue
            seen, stack = {1}, [1]
            while stack:
                for w in adj[stack.pop()]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            if seen != set(adj):
                continue
        cost = sum(c * k for (_, _, c), k in zip(edges, x))
        if cost < best - 1e-12:
            best, arg = cost, x
    return best, arg


# ---------------------------------------------------------------------------
# shortest paths and ranks

def bellman_ford(n_nodes: int, edges: Sequence[Tuple[int, int, float]], source: int) -> Dict[int, float]:
    dist = {i: math.inf for i in range(1, n_nodes + 1)}
    dist[source] = 0.0
    for _ in range(n_nodes - 1):
        for u, v, w in edges:
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
            if dist[v] + w < dist[u]:
                dist[u] = dist[v] + w
    return dist


def path_ranks(n_nodes: int, edges: Sequence[Tuple[int, int]], required) -> Dict[int, int]:
    """Fewest required non-depot nodes on a simple path from node 1 to ``i``, ``i`` included."""
    adj: Dict[int, List[int]] = {i: [] for i in range(1, n_nodes + 1)}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    req = set(required) - {1}
    best = {i: math.inf for i in adj}

    def dfs(node, seen, count):
        count += node in req
        best[node] = min(best[node], count)
        for w in adj[node]:
            if w not in seen:
                seen.add(w)
                dfs(w, seen, count)
                seen.remove(w)

    dfs(1, {1}, 0)
    return best


# ---------------------------------------------------------------------------
# random LPs

def random_lp(seed: int, max_size: int = 30):
    """Seeded LP with mixed senses and bounds, at most ``max_size`` columns and rows.

    Three in four are built around a point that satisfies every row; the rest
    get random right-hand sides and may be infeasible.  Columns without an
    upper bound can make the LP unbounded.
    """
    from stsp.milp import EQ, GE, LE, MAX, MIN, MilpModel

    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_size + 1))
    m = int(rng.integers(1, max_size + 1))
    lower = rng.integers(-4, 1, size=n).astype(float)
    upper = lower + rng.integers(1, 8, size=n)
    upper[rng.random(n) < 0.2] = math.inf
    model = MilpModel(f"lp{seed}")
    for j in range(n):
        model.add_variable(f"v{j}", lower[j], upper[j])
    x0 = np.where(np.isfinite(upper), lower + rng.random(n) * (np.minimum(upper, lower + 8) - lower),
                  lower + rng.random(n) * 5)
    anchored = seed % 4 != 3
    for i in range(m):
        cols = rng.choice(n, size=int(rng.integers(1, min(n, 6) + 1)), replace=False)
        coef = rng.integers(-5, 6, size=len(cols)).astype(float)
        coef[coef == 0] = 1.0
        act = float(coef @ x0[cols])
        sense = [LE, GE, EQ][int(rng.choice(3, p=[0.45, 0.45, 0.1]))]
        if anchored:
            slack = float(rng.integers(0, 4))
            rhs = act if sense == EQ else (act + slack if sense == LE else act - slack)
            rhs = round(rhs, 6)
        else:
            rhs = float(rng.integers(-10, 11))
        model.add_constraint(list(zip(cols.tolist(), coef.tolist())), sense, rhs, f"r{i}")
    obj = rng.integers(-6, 7, size=n).astype(float)
    model.set_objective(list(enumerate(obj.tolist())), MAX if rng.random() < 0.3 else MIN)
    return model
