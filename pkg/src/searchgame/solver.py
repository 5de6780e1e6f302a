"""Finite-horizon max-min values by backward induction over miss-histories.

The game tree is expanded one period at a time. Level ``k`` holds the
beliefs reachable at period ``start + k`` after misses only; each (belief,
action) pair points to its child belief at the next level. With
``dedupe=True`` (the default) children whose beliefs agree to ``MERGE_ATOL``
share one node, which turns the exponential history tree into a
much smaller DAG for structured chains. ``dedupe=False`` keeps the plain
history tree.

Values are computed for a *player of interest*: that player maximizes its
own find probability within the horizon and the opponent minimizes it.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import CERTAINTY_ATOL, GameSpec, TransitionSchedule, _as_probs
from .errors import HorizonTooLarge
from .strategies import Strategy

DEFAULT_NODE_BUDGET = 10**8
BUDGET_ENV = "SEARCHGAME_NODE_BUDGET"
#: Tolerance defining the optimal action set.
TIE_ATOL = 1e-9
_KEY_SCALE = 1e9
#: Children beliefs closer than this (max-norm) share one lattice node.
MERGE_ATOL = 1e-13


def node_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    return DEFAULT_NODE_BUDGET if not raw else int(float(raw))


def _player(player) -> int:
    if player in (1, "1", "one"):
        return 1
    if player in (2, "2", "two"):
        return 2
    raise ValueError(f"player must be 1/'one' or 2/'two', got {player!r}")


def _schedule(obj) -> TransitionSchedule:
    if isinstance(obj, GameSpec):
        return obj.schedule
    if isinstance(obj, TransitionSchedule):
        return obj
    return TransitionSchedule.homogeneous(obj)


@dataclass
class _Level:
    beliefs: np.ndarray
    children: np.ndarray | None = None
    q: np.ndarray | None = None
    values: np.ndarray | None = None


@dataclass
class Lattice:
    """Solved backward-induction structure for a batch of root beliefs.

    ``levels[k].q[i, s]`` is the player-of-interest value of action ``s`` at
    node ``i`` of period ``start + k``; level 0 rows are the roots in order.
    ``error_bound`` bounds the effect of node merging on every value: values
    are 1-Lipschitz in total variation, so each level adds at most the
    largest distance it merged across.
    """

    levels: list[_Level]
    start: int
    horizon: int
    first_is_max: bool
    discount: float
    nodes: int
    error_bound: float = 0.0

    def maximizer_moves(self, k: int) -> bool:
        return (k % 2 == 0) == self.first_is_max

    @property
    def root_q(self) -> np.ndarray:
        return self.levels[0].q

    @property
    def root_values(self) -> np.ndarray:
        return self.levels[0].values


def _hash_weights(n: int) -> np.ndarray:
    # fixed odd multipliers so node order is reproducible run to run
    w = np.random.default_rng(0x5EA4C4).integers(1, 2**63, size=n, dtype=np.uint64)
    return w | np.uint64(1)


def _merge_close(cand: np.ndarray, atol: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Share nodes between children beliefs within ``atol`` of each other (max-norm).

    Rows are bucketed on a grid of spacing ``max(atol, 1e-9)`` and merged into
    their bucket's first row only if they agree to ``atol``. Returns the node
    beliefs, the row-to-node map and the largest total variation distance
    between a merged row and its node.
    """
    keys = np.rint(cand / max(atol, 1.0 / _KEY_SCALE)).astype(np.int64)
    # one 64-bit hash per row; a collision only merges rows the check below splits again
    h = keys.view(np.uint64) @ _hash_weights(keys.shape[1])
    _, first, inv = np.unique(h, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    diff = np.abs(cand - cand[first][inv])
    far = diff.max(axis=1) > atol
    tv = 0.5 * diff[~far].sum(axis=1)
    moved = float(tv.max()) if tv.size else 0.0
    if not far.any():
        return cand[first], inv, moved
    extra = np.flatnonzero(far)
    inv = inv.copy()
    inv[extra] = first.size + np.arange(extra.size)
    return np.concatenate([cand[first], cand[extra]]), inv, moved


def solve_lattice(roots, schedule, horizon: int, *, start: int = 1, first_is_max: bool = True,
                  discount: float = 1.0, dedupe: bool = True, budget: int | None = None,
                  merge_atol: float = MERGE_ATOL) -> Lattice:
    """Expand and back up the game tree below each root belief.

    Parameters
    ----------
    roots : array_like, shape (r, n) or (n,)
        Beliefs at period ``start``, conditional on no find so far.
    schedule : GameSpec, TransitionSchedule or matrix
        Source of the transition matrix at each period.
    horizon : int
        Number of periods played, ``start .. start + horizon - 1``.
    first_is_max : bool
        Whether the player active at ``start`` is the player of interest.
    discount : float
        Per-period weight on later finds; 1 for the plain finite game.
    merge_atol : float
        Children within this max-norm distance share a node (with
        ``dedupe``). The default only merges beliefs equal up to rounding;
        coarser values such as ``1e-9`` trade a bounded error, reported as
        ``Lattice.error_bound``, for far fewer nodes on slowly mixing chains.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    sched = _schedule(schedule)
    B = np.atleast_2d(np.asarray(roots, dtype=float))
    n = sched.n
    if B.shape[1] != n:
        raise ValueError(f"roots have {B.shape[1]} entries, schedule has {n} states")
    budget = node_budget() if budget is None else budget
    thresh = 1.0 - CERTAINTY_ATOL

    levels = [_Level(B)]
    nodes = 0
    err = 0.0
    for k in range(horizon):
        m = B.shape[0]
        nodes += m * n
        if nodes > budget:
            raise HorizonTooLarge(
                f"horizon {horizon} needs more than {budget} nodes (reached period {start + k})")
        if k == horizon - 1:
            break
        K, certain = kernels.expand(B, sched.rows_at(start + k), thresh)
        ok = ~certain.reshape(-1)
        cand = K[ok]
        if dedupe and cand.shape[0] > 1:
            B, idx, moved = _merge_close(cand, merge_atol)
            err += moved
        else:
            B = cand
            idx = np.arange(cand.shape[0])
        children = np.full(m * n, -1, dtype=np.int64)
        children[ok] = idx
        levels[-1].children = children.reshape(m, n)
        levels.append(_Level(B))

    v_next = np.zeros(1)
    for k in range(horizon - 1, -1, -1):
        lv = levels[k]
        is_max = (k % 2 == 0) == first_is_max
        ch = lv.children if lv.children is not None else np.full(lv.beliefs.shape, -1, dtype=np.int64)
        lv.q = kernels.backup(lv.beliefs, ch, v_next, is_max, discount, thresh)
        if lv.q.shape[0] == 0:
            lv.values = np.zeros(0)
        else:
            lv.values = lv.q.max(axis=1) if is_max else lv.q.min(axis=1)
        v_next = lv.values if lv.values.size else np.zeros(1)
    return Lattice(levels, start, horizon, first_is_max, discount, nodes, err)


def _best_set(q: np.ndarray, maximize: bool, atol: float = TIE_ATOL) -> tuple[int, ...]:
    if maximize:
        return tuple(int(s) for s in np.flatnonzero(q >= q.max() - atol))
    return tuple(int(s) for s in np.flatnonzero(q <= q.min() + atol))


@dataclass
class SolveResult:
    """Outcome of a finite-horizon solve from the game's initial belief.

    ``q_values[s]`` is the value when the opening move (period 1) is ``s``
    and play is optimal afterwards. For ``for_player == 1`` the opener is the
    solver's player and ``value == max(q_values)``; for ``for_player == 2``
    the opener is player 1, the opponent, and ``value == min(q_values)``.
    ``optimal_actions`` are the openings within ``1e-9`` of that extremum.
    """

    value: float
    q_values: np.ndarray
    optimal_actions: tuple[int, ...]
    horizon: int
    for_player: int
    lattice: Lattice = field(repr=False, compare=False)

    @property
    def error_bound(self) -> float:
        return self.lattice.error_bound

    def _node(self, history) -> tuple[int, int]:
        i = 0
        levels = self.lattice.levels
        if len(history) >= self.horizon:
            raise KeyError(f"history of length {len(history)} is past the horizon")
        for k, s in enumerate(history):
            c = int(levels[k].children[i, int(s)])
            if c < 0:
                raise KeyError(f"history {tuple(history)} is not reachable on miss branches")
            i = c
        return len(history), i

    def action_at(self, history) -> int:
        """The solver player's choice after ``history`` (lowest index on ties)."""
        history = tuple(getattr(history, "actions", history))
        k, i = self._node(history)
        if not self.lattice.maximizer_moves(k):
            raise KeyError(f"period {k + 1} is not a decision period of player {self.for_player}")
        return _best_set(self.lattice.levels[k].q[i], True)[0]

    def strategy_tree(self, max_entries: int = 1_000_000) -> dict[tuple[int, ...], int]:
        """Chosen action at every reachable decision history of the solver's player.

        Opponent periods branch over every action whose miss is possible; the
        solver's own periods follow its chosen action.
        """
        levels = self.lattice.levels
        tree: dict[tuple[int, ...], int] = {}
        stack = [((), 0)]
        while stack:
            hist, i = stack.pop()
            k = len(hist)
            lv = levels[k]
            if self.lattice.maximizer_moves(k):
                a = _best_set(lv.q[i], True)[0]
                tree[hist] = a
                if len(tree) > max_entries:
                    raise HorizonTooLarge(f"strategy tree exceeds {max_entries} entries")
                branches = [a]
            else:
                branches = range(lv.q.shape[1])
            if lv.children is None:
                continue
            for s in branches:
                c = int(lv.children[i, s])
                if c >= 0:
                    stack.append((hist + (int(s),), c))
        return tree


@dataclass(frozen=True)
class ValueBracket:
    lower: float
    upper: float
    horizon: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x: float, atol: float = 0.0) -> bool:
        return self.lower - atol <= x <= self.upper + atol


@dataclass(frozen=True)
class DiscountedResult:
    value: float
    beta: float
    truncation_horizon: int
    tail_bound: float
    q_values: np.ndarray = field(repr=False, compare=False, default=None)
    error_bound: float = 0.0


def value_finite(spec: GameSpec, T: int, player=1, *, dedupe: bool = True,
                 budget: int | None = None, merge_atol: float = MERGE_ATOL) -> SolveResult:
    """Exact max-min find probability of ``player`` within periods ``1..T``.

    Player 1 is active at odd periods and player 2 at even ones. For
    ``player=1`` this is ``v_{1,T}``; for ``player=2`` it is ``v_{2,T}`` with
    player 1 minimizing player 2's find probability. ``error_bound`` on the
    result is nonzero only with a coarse ``merge_atol``.
    """
    who = _player(player)
    lat = solve_lattice(spec.initial.probs, spec.schedule, T, start=1,
                        first_is_max=(who == 1), dedupe=dedupe, budget=budget,
                        merge_atol=merge_atol)
    q = lat.root_q[0].copy()
    return SolveResult(
        value=float(lat.root_values[0]),
        q_values=q,
        optimal_actions=_best_set(q, who == 1),
        horizon=T,
        for_player=who,
        lattice=lat,
    )


def q_value(spec: GameSpec, T: int, s: int, player=1, **kw) -> float:
    """Value of opening with ``s`` at period 1, optimal play afterwards."""
    return float(value_finite(spec, T, player, **kw).q_values[s])


def value_bracket(spec: GameSpec, T: int, **kw) -> ValueBracket:
    """Interval ``[v_{1,T}, 1 - v_{2,T}]``, which contains the infinite-horizon value.

    With a coarse ``merge_atol`` each end is pushed outwards by its solve's
    error bound, so the interval stays certified.
    """
    one = value_finite(spec, T, 1, **kw)
    two = value_finite(spec, T, 2, **kw)
    return ValueBracket(one.value - one.error_bound, 1.0 - two.value + two.error_bound, T)


def discount_horizon(beta: float, tol: float) -> int:
    """Smallest ``T >= 1`` with ``beta ** T <= tol``."""
    T = max(1, math.ceil(math.log(tol) / math.log(beta)))
    while beta**T > tol:
        T += 1
    return T


def value_discounted(spec: GameSpec, beta: float, tol: float = 1e-6, player=1, **kw) -> DiscountedResult:
    """Discounted value with find at period ``t`` weighted by ``beta ** (t - 1)``.

    The game is truncated at the first ``T`` with ``beta ** T <= tol``, which
    bounds the neglected tail by ``tol``.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    who = _player(player)
    T = discount_horizon(beta, tol)
    lat = solve_lattice(spec.initial.probs, spec.schedule, T, start=1,
                        first_is_max=(who == 1), discount=beta, **kw)
    return DiscountedResult(float(lat.root_values[0]), beta, T, beta**T, lat.root_q[0].copy(),
                            lat.error_bound)


def solve_batch(spec_or_schedule, roots, T: int, *, start: int = 1, first_is_max: bool = True,
                **kw) -> tuple[np.ndarray, np.ndarray]:
    """Q-values ``(r, n)`` and values ``(r,)`` for many root beliefs in one pass."""
    lat = solve_lattice(roots, spec_or_schedule, T, start=start, first_is_max=first_is_max, **kw)
    return lat.root_q, lat.root_values


def best_action(schedule, belief, period: int, horizon: int, **kw) -> int:
    """Lowest-index optimal move for the player active at ``period``.

    Re-solves a ``horizon``-period game starting at ``period`` from
    ``belief``, with the active player as the player of interest.
    """
    p = _as_probs(belief)
    q, _ = solve_batch(schedule, p, horizon, start=period, first_is_max=True, **kw)
    return _best_set(q[0], True)[0]


class TruncationStrategy(Strategy):
    """Play the ``horizon``-period optimum from the current belief at every move.

    Each decision re-solves a fresh ``horizon``-period game starting at the
    current period (a rolling horizon), so the strategy is defined at every
    period. Solves are cached per (schedule phase, exact belief).
    """

    def __init__(self, horizon: int, player=None, spec: GameSpec | None = None):
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        self.horizon = int(horizon)
        self.player = None if player is None else _player(player)
        self.spec = spec
        self._cache: dict = {}
        super().__init__(name=f"truncation:{self.horizon}", params={"horizon": self.horizon})

    def bind(self, spec: GameSpec) -> TruncationStrategy:
        if self.spec is spec:
            return self
        return TruncationStrategy(self.horizon, self.player, spec)

    def action(self, history, belief, period: int) -> int:
        if self.spec is None:
            raise RuntimeError("truncation strategy must be bound to a spec first")
        p = _as_probs(belief)
        sched = self.spec.schedule
        # the matrices ahead depend on the period only through this key
        when = sched.phase(period) if sched.repeat_rule == "cycle" else min(period, len(sched.matrices))
        key = (when, p.tobytes())
        a = self._cache.get(key)
        if a is None:
            a = best_action(self.spec.schedule, p, period, self.horizon)
            self._cache[key] = a
        return a


def truncation_strategy(spec: GameSpec, T: int, player=1) -> TruncationStrategy:
    return TruncationStrategy(T, player, spec)

