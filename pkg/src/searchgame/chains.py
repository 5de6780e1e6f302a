"""Structural classification of time-homogeneous chains and metric helpers."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core import Belief, TransitionMatrix, TransitionSchedule, _as_probs, _as_rows
from .errors import DimensionMismatch, NotIrreducible


@dataclass(frozen=True)
class ChainClassification:
    irreducible: bool
    aperiodic: bool
    period: int
    transient_states: frozenset[int]
    ergodic_classes: tuple[frozenset[int], ...]
    absorbing_states: frozenset[int]

    def to_dict(self, labels=None) -> dict:
        name = (lambda i: i) if labels is None else (lambda i: labels[i])
        return {
            "irreducible": self.irreducible,
            "aperiodic": self.aperiodic,
            "period": self.period,
            "transient_states": [name(i) for i in sorted(self.transient_states)],
            "ergodic_classes": [[name(i) for i in sorted(c)] for c in self.ergodic_classes],
            "absorbing_states": [name(i) for i in sorted(self.absorbing_states)],
        }


@dataclass(frozen=True)
class MixingCertificate:
    alpha: float

    def certifies(self, alpha: float) -> bool:
        """True if the schedule is ``alpha``-strongly mixed."""
        return alpha <= self.alpha


def _class_period(adj: np.ndarray, members: list[int]) -> int:
    # BFS levels inside a strongly connected class; period = gcd of
    # level[u] + 1 - level[v] over internal edges u -> v.
    inside = set(members)
    level = {members[0]: 0}
    queue = deque([members[0]])
    g = 0
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            v = int(v)
            if v not in inside:
                continue
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, abs(level[u] + 1 - level[v]))
    return g


def classify(m) -> ChainClassification:
    """Communication structure, period and absorbing states of ``m``.

    An edge ``i -> j`` exists iff ``m[i, j] > 0`` exactly. Ergodic classes
    are the closed communication classes; every other state is transient.
    The period is the lcm of the ergodic class periods.
    """
    P = _as_rows(m)
    n = P.shape[0]
    adj = P > 0
    ncomp, labels = connected_components(csr_matrix(adj), directed=True, connection="strong")
    classes = [sorted(np.flatnonzero(labels == c).tolist()) for c in range(ncomp)]

    ergodic = []
    for members in classes:
        outside = np.ones(n, dtype=bool)
        outside[members] = False
        if not adj[np.ix_(members, np.flatnonzero(outside))].any():
            ergodic.append(members)
    ergodic.sort(key=lambda c: c[0])

    period = 1
    for members in ergodic:
        d = _class_period(adj, members)
        period = period * d // math.gcd(period, d)

    recurrent = {i for c in ergodic for i in c}
    transient = frozenset(set(range(n)) - recurrent)
    absorbing = frozenset(i for i in range(n) if P[i, i] == 1.0)
    irreducible = len(ergodic) == 1 and not transient
    return ChainClassification(
        irreducible=irreducible,
        aperiodic=period == 1,
        period=period,
        transient_states=transient,
        ergodic_classes=tuple(frozenset(c) for c in ergodic),
        absorbing_states=absorbing,
    )


def stationary_distribution(m) -> Belief:
    """The unique ``pi`` with ``pi P = pi`` for an irreducible ``P``.

    Solves ``(P^T - I) pi = 0`` with the last equation replaced by
    ``sum(pi) = 1``.
    """
    P = _as_rows(m)
    if not classify(P).irreducible:
        raise NotIrreducible("stationary distribution is only unique for irreducible chains")
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = np.linalg.solve(A, rhs)
    pi = np.clip(pi, 0.0, None)
    return Belief._trusted(pi)


def tv_distance(b, c) -> float:
    """Total variation distance, i.e. half the L1 distance."""
    p, q = _as_probs(b), _as_probs(c)
    if p.shape != q.shape:
        raise DimensionMismatch(f"beliefs of sizes {p.size} and {q.size}")
    return float(0.5 * np.abs(p - q).sum())


def mixing_certificate(sched) -> MixingCertificate:
    """Smallest entry over every listed matrix of the schedule."""
    if isinstance(sched, TransitionSchedule):
        mats = [mm.rows for mm in sched.matrices]
    elif isinstance(sched, TransitionMatrix):
        mats = [sched.rows]
    else:
        mats = [np.asarray(sched, dtype=float)]
    return MixingCertificate(float(min(mm.min() for mm in mats)))
