"""LDPC constructions for desk-scale runs: PEG generation and small test codes."""

from __future__ import annotations

import numpy as np

from .ldpc import LdpcCode


def peg_code(n: int, rate: float, var_degree: int = 3, seed: int = 0) -> LdpcCode:
    """Regular-variable-degree LDPC via progressive edge growth.

    Each variable gets var_degree edges; the first goes to a lowest-degree
    check, later ones to a lowest-degree check outside (or at the boundary
    of) the variable's current BFS neighborhood, which maximizes local girth.
    Designed rate fixes the check count; true rate is (n - rank)/n and can
    be marginally higher when H is rank deficient.
    """
    if not 0 < rate < 1:
        raise ValueError("rate must be in (0, 1)")
    m = int(round(n * (1.0 - rate)))
    if m < var_degree:
        raise ValueError(f"too few checks ({m}) for variable degree {var_degree}")
    rng = np.random.default_rng(seed)
    check_deg = np.zeros(m, dtype=np.int64)
    var_adj = [[] for _ in range(n)]
    check_adj = [[] for _ in range(m)]

    def lowest_degree(candidates):
        cand = np.asarray(candidates)
        degs = check_deg[cand]
        best = cand[degs == degs.min()]
        return int(rng.choice(best))

    for v in range(n):
        for t in range(var_degree):
            if t == 0:
                c = lowest_degree(np.arange(m))
            else:
                reached = _bfs_checks(v, var_adj, check_adj, m)
                unreached = np.nonzero(~reached)[0]
                if unreached.size:
                    c = lowest_degree(unreached)
                else:
                    # graph saturated: reuse the farthest layer, skipping
                    # checks already adjacent to v
                    frontier = _deepest_layer(v, var_adj, check_adj, m)
                    frontier = [c for c in frontier if c not in var_adj[v]]
                    if not frontier:
                        frontier = [c for c in range(m) if c not in var_adj[v]]
                    c = lowest_degree(frontier)
            var_adj[v].append(c)
            check_adj[c].append(v)
            check_deg[c] += 1

    return LdpcCode(n=n,
                    var_neighbors=[np.array(sorted(a)) for a in var_adj],
                    check_neighbors=[np.array(sorted(a)) for a in check_adj])


def _bfs_checks(v, var_adj, check_adj, m) -> np.ndarray:
    """Boolean mask of checks reachable from variable v in the current graph."""
    reached = np.zeros(m, dtype=bool)
    seen_vars = {v}
    frontier_checks = set(var_adj[v])
    while frontier_checks:
        for c in frontier_checks:
            reached[c] = True
        next_vars = set()
        for c in frontier_checks:
            next_vars.update(check_adj[c])
        next_vars -= seen_vars
        seen_vars |= next_vars
        frontier_checks = set()
        for u in next_vars:
            frontier_checks.update(var_adj[u])
        frontier_checks = {c for c in frontier_checks if not reached[c]}
    return reached


def _deepest_layer(v, var_adj, check_adj, m):
    layers = []
    reached = np.zeros(m, dtype=bool)
    seen_vars = {v}
    frontier = set(var_adj[v])
    while frontier:
        layers.append(sorted(frontier))
        for c in frontier:
            reached[c] = True
        next_vars = set()
        for c in frontier:
            next_vars.update(check_adj[c])
        next_vars -= seen_vars
        seen_vars |= next_vars
        frontier = set()
        for u in next_vars:
            frontier.update(var_adj[u])
        frontier = {c for c in frontier if not reached[c]}
    return layers[-1] if layers else []


def tree_code() -> LdpcCode:
    """Cycle-free (n=5, 2 checks) code: BP is exact on its Tanner graph."""
    h = np.array([[1, 1, 1, 0, 0],
                  [0, 0, 1, 1, 1]], dtype=np.uint8)
    return code_from_dense(h)


def hamming74() -> LdpcCode:
    """The (7,4) Hamming code, handy for single-error-correction tests."""
    h = np.array([[1, 1, 1, 0, 1, 0, 0],
                  [0, 1, 1, 1, 0, 1, 0],
                  [1, 1, 0, 1, 0, 0, 1]], dtype=np.uint8)
    return code_from_dense(h)


def code_from_dense(h: np.ndarray) -> LdpcCode:
    h = np.asarray(h, dtype=np.uint8)
    var_neighbors = [np.nonzero(h[:, v])[0] for v in range(h.shape[1])]
    check_neighbors = [np.nonzero(h[c])[0] for c in range(h.shape[0])]
    return LdpcCode(n=h.shape[1], var_neighbors=var_neighbors,
                    check_neighbors=check_neighbors)
