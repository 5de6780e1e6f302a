"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The numba path is used when numba imports and the environment variable
``SEARCHGAME_NUMBA`` is not one of ``0``, ``false``, ``off``, ``no``.
:func:`set_backend` and :func:`use_backend` switch at runtime (tests and the
benchmark use them). Both paths return identical integer results and floats
that agree to rounding.
"""

from __future__ import annotations

import contextlib
import os

import numpy as np

ENV_FLAG = "SEARCHGAME_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_enabled() -> bool:
    return os.environ.get(ENV_FLAG, "1").strip().lower() not in ("0", "false", "off", "no")


_backend = "numba" if (HAVE_NUMBA and _env_enabled()) else "numpy"


def backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    prev = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
else:  # pragma: no cover
    def _jit(fn):
        return fn


# --------------------------------------------------------------------------
# expand: condition every belief on a miss at every state, then propagate

def _expand_np(B, P, thresh):
    m, n = B.shape
    certain = B >= thresh
    denom = np.where(certain, 1.0, 1.0 - B)
    C = np.repeat(B[:, None, :], n, axis=1)
    C[:, np.arange(n), np.arange(n)] = 0.0
    C /= denom[:, :, None]
    K = (C @ P).reshape(m * n, n)
    tot = K.sum(axis=1)
    flat_certain = certain.reshape(-1)
    tot[flat_certain] = 1.0
    K /= tot[:, None]
    K[flat_certain] = 0.0
    return K, certain


@_jit
def _expand_nb(B, P, thresh):
    m, n = B.shape
    K = np.zeros((m * n, n))
    certain = np.zeros((m, n), dtype=np.bool_)
    for i in range(m):
        for s in range(n):
            mass = B[i, s]
            if mass >= thresh:
                certain[i, s] = True
                continue
            r = i * n + s
            denom = 1.0 - mass
            for k in range(n):
                if k == s:
                    continue
                w = B[i, k] / denom
                if w == 0.0:
                    continue
                for j in range(n):
                    K[r, j] += w * P[k, j]
            tot = 0.0
            for j in range(n):
                tot += K[r, j]
            for j in range(n):
                K[r, j] /= tot
    return K, certain


def expand(B, P, thresh):
    """Children beliefs for every (belief, searched state) pair.

    Returns ``K`` of shape ``(m * n, n)`` where row ``i * n + s`` is
    ``propagate(condition(B[i], s), P)``, and a boolean ``(m, n)`` mask of the
    pairs where ``B[i, s] >= thresh`` (certain finds, whose rows are zero).
    """
    B = np.ascontiguousarray(B, dtype=np.float64)
    P = np.ascontiguousarray(P, dtype=np.float64)
    if _backend == "numba":
        return _expand_nb(B, P, float(thresh))
    return _expand_np(B, P, thresh)


# --------------------------------------------------------------------------
# backup: q-values of one level given the values of the next

def _backup_np(B, children, v_next, is_max, discount, thresh):
    cont = np.where(children >= 0, v_next[np.maximum(children, 0)], 0.0)
    cont = discount * (1.0 - B) * cont
    certain = B >= thresh
    if is_max:
        Q = B + cont
        Q[certain] = 1.0
    else:
        Q = cont
        Q[certain] = 0.0
    return Q


@_jit
def _backup_nb(B, children, v_next, is_max, discount, thresh):
    m, n = B.shape
    Q = np.empty((m, n))
    for i in range(m):
        for s in range(n):
            b = B[i, s]
            if b >= thresh:
                Q[i, s] = 1.0 if is_max else 0.0
                continue
            c = children[i, s]
            cont = 0.0
            if c >= 0:
                cont = discount * (1.0 - b) * v_next[c]
            Q[i, s] = b + cont if is_max else cont
    return Q


def backup(B, children, v_next, is_max, discount, thresh):
    """Q-values ``Q[i, s]`` for the player of interest at one level.

    When that player moves (``is_max``), searching ``s`` pays ``B[i, s]`` now
    plus the discounted continuation on a miss; when the opponent moves only
    the continuation counts. ``children[i, s] < 0`` marks a branch with no
    continuation (last period, or a certain find).
    """
    B = np.ascontiguousarray(B, dtype=np.float64)
    children = np.ascontiguousarray(children, dtype=np.int64)
    v_next = np.ascontiguousarray(v_next, dtype=np.float64)
    if _backend == "numba":
        return _backup_nb(B, children, v_next, bool(is_max), float(discount), float(thresh))
    return _backup_np(B, children, v_next, is_max, discount, thresh)


# --------------------------------------------------------------------------
# first_hits: Monte Carlo stopping times for a fixed action sequence

def _first_hits_np(U, init_cdf, cdfs, actions):
    trials, T = U.shape
    n = init_cdf.size
    out = np.zeros(trials, dtype=np.int64)
    x = np.minimum(np.searchsorted(init_cdf, U[:, 0], side="right"), n - 1)
    alive = np.ones(trials, dtype=bool)
    for t in range(T):
        hit = alive & (x == actions[t])
        out[hit] = t + 1
        alive &= ~hit
        if t + 1 < T:
            rows = cdfs[t][x]
            x = np.minimum((U[:, t + 1, None] >= rows).sum(axis=1), n - 1)
    return out


@_jit
def _first_hits_nb(U, init_cdf, cdfs, actions):
    trials, T = U.shape
    n = init_cdf.size
    out = np.zeros(trials, dtype=np.int64)
    for r in range(trials):
        u = U[r, 0]
        x = 0
        while x < n - 1 and u >= init_cdf[x]:
            x += 1
        for t in range(T):
            if x == actions[t]:
                out[r] = t + 1
                break
            if t + 1 < T:
                u = U[r, t + 1]
                row = cdfs[t, x]
                y = 0
                while y < n - 1 and u >= row[y]:
                    y += 1
                x = y
    return out


def first_hits(U, init_cdf, cdfs, actions):
    """Period of the first search hit for each simulated object path.

    ``U`` holds one row of uniforms per trial: column 0 draws the initial
    state, column ``t`` the move out of period ``t``. ``cdfs[t]`` are the row
    CDFs of the matrix applied after period ``t + 1``. Returns 0 for paths
    never hit within ``len(actions)`` periods.
    """
    U = np.ascontiguousarray(U, dtype=np.float64)
    init_cdf = np.ascontiguousarray(init_cdf, dtype=np.float64)
    cdfs = np.ascontiguousarray(cdfs, dtype=np.float64)
    actions = np.ascontiguousarray(actions, dtype=np.int64)
    if _backend == "numba":
        return _first_hits_nb(U, init_cdf, cdfs, actions)
    return _first_hits_np(U, init_cdf, cdfs, actions)


def row_cdfs(M):
    """Row-wise CDFs with the last positive entry pinned to exactly 1."""
    c = np.cumsum(M, axis=-1)
    return c / c[..., -1:]
