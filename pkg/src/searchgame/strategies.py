"""Pure strategies, exact profile evaluation and seeded Monte Carlo simulation.

A strategy maps ``(history, belief, period)`` to a state index, where
``history`` is the tuple of all actions so far and ``belief`` the current
distribution of the object given no find yet. Against a pure profile the
play is a single miss-history, so evaluation is a forward pass and the
simulator only has to sample object paths against a fixed action sequence.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import CERTAINTY_ATOL, Belief, GameSpec, step_belief
from .errors import SpecMismatch, UnknownStrategy

RNG_ALGORITHM = "numpy.random.Philox (philox4x64-10), key=seed, counter=block<<128"
SIM_BLOCK = 4096


class Strategy:
    """Base class. Subclasses implement :meth:`action`."""

    def __init__(self, name: str, params: dict | None = None):
        self.name = name
        self.params = dict(params or {})

    def bind(self, spec: GameSpec) -> Strategy:
        """Prepare for play on ``spec``; returns the strategy to use."""
        return self

    def action(self, history: tuple[int, ...], belief: Belief, period: int) -> int:
        raise NotImplementedError

    def __call__(self, history, belief, period):
        return self.action(history, belief, period)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


def _greedy(belief) -> int:
    p = np.asarray(belief, dtype=float)
    return int(np.flatnonzero(p >= p.max() - 1e-12)[0])


class Greedy(Strategy):
    """Search a most likely state; lowest index on ties."""

    def __init__(self):
        super().__init__("greedy")

    def action(self, history, belief, period):
        return _greedy(belief)


class Fixed(Strategy):
    def __init__(self, state: int):
        self.state = int(state)
        super().__init__(f"fixed:{self.state}", {"state": self.state})

    def bind(self, spec):
        if not 0 <= self.state < spec.n:
            raise SpecMismatch(f"state {self.state} out of range for {spec.n} states")
        return self

    def action(self, history, belief, period):
        return self.state


class Cycle(Strategy):
    """Search ``order[(t - 1) mod len(order)]`` at period ``t``."""

    def __init__(self, order):
        self.order = tuple(int(s) for s in order)
        if not self.order:
            raise ValueError("cycle order must not be empty")
        super().__init__("cycle:" + ",".join(map(str, self.order)), {"order": self.order})

    def bind(self, spec):
        if any(not 0 <= s < spec.n for s in self.order):
            raise SpecMismatch(f"cycle order {self.order} out of range for {spec.n} states")
        return self

    def action(self, history, belief, period):
        return self.order[(period - 1) % len(self.order)]


# --------------------------------------------------------------------------
# Scripted strategies of the two counterexample chains. State names in the
# comments are the 1-based labels of the example chains.

_EX1_PATTERN = np.array([
    [1, 1, 1, 1],
    [1, 1, 1, 1],
    [0, 0, 1, 0],
    [0, 0, 0, 1],
], dtype=bool)

_EX2_EDGES = {0: [6], 1: [0], 2: [0], 3: [0], 4: [1, 2, 3], 5: [4], 6: [5, 6], 7: [7], 8: [8]}
_EX2_PATTERN = np.zeros((9, 9), dtype=bool)
for _i, _js in _EX2_EDGES.items():
    _EX2_PATTERN[_i, _js] = True


class _ScriptedStrategy(Strategy):
    pattern: np.ndarray = None
    chain_name = ""

    def bind(self, spec):
        for k, m in enumerate(spec.schedule.matrices):
            if m.n != self.pattern.shape[0] or not np.array_equal(m.rows > 0, self.pattern):
                raise SpecMismatch(
                    f"{self.name} needs the {self.chain_name} chain; matrices[{k}] has a different pattern")
        return self


class _Example1(_ScriptedStrategy):
    pattern = _EX1_PATTERN
    chain_name = "example1"
    S1, S2, S3, S4 = 0, 1, 2, 3
    INNER = (0, 1)


class Ex1Sigma(_Example1):
    """Opens at state 1, then tracks the likelier absorbing state."""

    def __init__(self):
        super().__init__("ex1_sigma")

    def action(self, history, belief, period):
        if period == 1:
            return self.S1
        last, prev = history[-1], history[-2]
        if last == self.S4 or (last in self.INNER and prev != self.S3):
            return self.S3
        # remaining cases: last == 3, or last in {1, 2} with the one before it 3
        return self.S4


class Ex1Tau(_Example1):
    """State 1 while player 1 stays in {1, 2}; afterwards the likelier absorbing state.

    Histories the case table leaves open (last two actions in {1, 2} after an
    earlier 3 or 4) fall back to greedy.
    """

    def __init__(self):
        super().__init__("ex1_tau")

    def action(self, history, belief, period):
        if all(a in self.INNER for a in history):
            return self.S1
        last = history[-1]
        prev = history[-2] if len(history) >= 2 else None
        if last == self.S4 or (last in self.INNER and prev == self.S4):
            return self.S3
        if last == self.S3 or (last in self.INNER and prev == self.S3):
            return self.S4
        return _greedy(belief)


class Ex1SwitchAt(_Example1):
    """State 1 until period ``n`` while both stay in {1, 2}, then the likelier absorbing state.

    Used as player 1's ``sigma^n`` and player 2's ``tau^n``; both follow the
    same case table. Uncovered histories fall back to greedy.
    """

    def __init__(self, n: int, role: str):
        self.n = int(n)
        super().__init__(f"ex1_{role}_n:{self.n}", {"n": self.n})

    def action(self, history, belief, period):
        inner = all(a in self.INNER for a in history)
        if inner and period < self.n:
            return self.S1
        if inner:
            return self.S3
        last = history[-1]
        prev = history[-2] if len(history) >= 2 else None
        if last == self.S4 or (last in self.INNER and prev == self.S4):
            return self.S3
        if last == self.S3 or (last in self.INNER and prev == self.S3):
            return self.S4
        return _greedy(belief)


class Ex2SwitchAt(_ScriptedStrategy):
    """State 6 until period ``n`` while both stay there, then alternate 8 and 9.

    The switch mirrors the first example: open the switch at 8, answer 8
    with 9 and 9 with 8. Uncovered histories fall back to greedy.
    """

    pattern = _EX2_PATTERN
    chain_name = "example2"
    S6, S8, S9 = 5, 7, 8

    def __init__(self, n: int, role: str):
        self.n = int(n)
        super().__init__(f"ex2_{role}_n:{self.n}", {"n": self.n})

    def action(self, history, belief, period):
        waiting = all(a == self.S6 for a in history)
        if waiting and period < self.n:
            return self.S6
        if waiting:
            return self.S8
        last = history[-1]
        prev = history[-2] if len(history) >= 2 else None
        if last == self.S9 or (last == self.S6 and prev == self.S9):
            return self.S8
        if last == self.S8 or (last == self.S6 and prev == self.S8):
            return self.S9
        return _greedy(belief)


def example_strategy(which: str, n: int | None = None) -> Strategy:
    """Scripted strategies of the counterexample chains.

    ``which`` is one of ``ex1_sigma``, ``ex1_tau``, ``ex1_sigma_n``,
    ``ex1_tau_n``, ``ex2_sigma_n``, ``ex2_tau_n``; the ``_n`` variants need
    the switch period ``n``.
    """
    if which == "ex1_sigma":
        return Ex1Sigma()
    if which == "ex1_tau":
        return Ex1Tau()
    if which in ("ex1_sigma_n", "ex1_tau_n", "ex2_sigma_n", "ex2_tau_n"):
        if n is None:
            raise UnknownStrategy(f"{which} needs a switch period n")
        role = "sigma" if "sigma" in which else "tau"
        cls = Ex1SwitchAt if which.startswith("ex1") else Ex2SwitchAt
        return cls(n, role)
    raise UnknownStrategy(f"unknown example strategy {which!r}")


def builtin(name: str, *args, **params) -> Strategy:
    """Construct a built-in strategy.

    ``greedy``; ``fixed`` (``state``); ``cycle`` (``order``);
    ``truncation`` (``horizon``, optional ``spec``); or any
    :func:`example_strategy` name.
    """
    if name == "greedy":
        return Greedy()
    if name == "fixed":
        return Fixed(*args, **params)
    if name == "cycle":
        return Cycle(*args, **params)
    if name == "truncation":
        from .solver import TruncationStrategy

        return TruncationStrategy(*args, **params)
    if name.startswith(("ex1_", "ex2_")):
        return example_strategy(name, *args, **params)
    raise UnknownStrategy(f"unknown strategy {name!r}")


def parse_strategy(text: str, spec: GameSpec | None = None) -> Strategy:
    """Parse ``name[:param]`` such as ``greedy``, ``truncation:9``, ``fixed:3``,
    ``cycle:2,1`` or ``ex1_sigma_n:11``.

    State parameters of ``fixed`` and ``cycle`` are state labels of ``spec``
    when given, else 0-based indices.
    """
    name, _, arg = text.strip().partition(":")

    def state(tok):
        tok = tok.strip()
        if spec is not None:
            try:
                return spec.states.index_of(tok)
            except KeyError:
                raise UnknownStrategy(f"{text!r}: no state labelled {tok!r}") from None
        return int(tok)

    try:
        if name == "greedy" and not arg:
            return Greedy()
        if name == "fixed":
            return Fixed(state(arg))
        if name == "cycle":
            return Cycle([state(t) for t in arg.split(",")])
        if name == "truncation":
            return builtin("truncation", int(arg))
        if name in ("ex1_sigma", "ex1_tau") and not arg:
            return example_strategy(name)
        if name in ("ex1_sigma_n", "ex1_tau_n", "ex2_sigma_n", "ex2_tau_n"):
            return example_strategy(name, int(arg))
    except ValueError as exc:
        raise UnknownStrategy(f"{text!r}: {exc}") from None
    raise UnknownStrategy(f"unknown strategy {text!r}")


# --------------------------------------------------------------------------
# exact evaluation

@dataclass(frozen=True)
class EvaluationReport:
    p1_win: float
    p2_win: float
    not_found: float
    horizon: int
    per_period_find: np.ndarray = field(repr=False)
    actions: tuple[int, ...] = field(repr=False, default=())

    def cumulative_p1(self) -> np.ndarray:
        """Player-1 find probability within the first ``t`` periods, ``t = 1..T``."""
        odd = self.per_period_find.copy()
        odd[1::2] = 0.0
        return np.cumsum(odd)

    def to_dict(self) -> dict:
        return {
            "p1_win": self.p1_win,
            "p2_win": self.p2_win,
            "not_found": self.not_found,
            "horizon": self.horizon,
            "per_period_find": self.per_period_find.tolist(),
            "actions": list(self.actions),
        }


def _play(spec: GameSpec, sigma: Strategy, tau: Strategy, T: int):
    b = spec.initial
    survival = 1.0
    per = np.zeros(T)
    actions = []
    for t in range(1, T + 1):
        strat = sigma if t % 2 == 1 else tau
        s = int(strat.action(tuple(actions), b, t))
        if not 0 <= s < spec.n:
            raise ValueError(f"{strat!r} chose state {s} at period {t}; valid range is 0..{spec.n - 1}")
        actions.append(s)
        mass = b.probs[s]
        if mass >= 1.0 - CERTAINTY_ATOL:
            per[t - 1] = survival
            survival = 0.0
            break
        per[t - 1] = survival * mass
        survival *= 1.0 - mass
        if t < T:
            b = step_belief(b, s, t, spec.schedule)
    return per, survival, tuple(actions)


def evaluate_exact(spec: GameSpec, sigma: Strategy, tau: Strategy, T: int) -> EvaluationReport:
    """Win probabilities of the pure profile ``(sigma, tau)`` within ``T`` periods.

    Player 1 is ``sigma`` (odd periods), player 2 is ``tau`` (even periods).
    The find probability at period ``t`` is the survival mass times the
    current belief at the searched state. A certain find closes the play
    early with ``not_found = 0``.
    """
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    sigma, tau = sigma.bind(spec), tau.bind(spec)
    per, survival, actions = _play(spec, sigma, tau, T)
    return EvaluationReport(
        p1_win=float(per[0::2].sum()),
        p2_win=float(per[1::2].sum()),
        not_found=float(survival),
        horizon=T,
        per_period_find=per,
        actions=actions,
    )


# --------------------------------------------------------------------------
# Monte Carlo

@dataclass(frozen=True)
class SimulationReport:
    trials: int
    seed: int
    p1_win_hat: float
    p2_win_hat: float
    not_found_hat: float
    mean_find_time: float
    ci_halfwidth: float
    counts: tuple[int, int, int]
    horizon: int
    rng: str = RNG_ALGORITHM

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "p1_win_hat": self.p1_win_hat,
            "p2_win_hat": self.p2_win_hat,
            "not_found_hat": self.not_found_hat,
            "mean_find_time": self.mean_find_time,
            "ci_halfwidth": self.ci_halfwidth,
            "counts": list(self.counts),
            "horizon": self.horizon,
            "rng": self.rng,
        }


def block_uniforms(seed: int, block: int, rows: int, cols: int) -> np.ndarray:
    """Uniforms for simulation block ``block``; depends only on (seed, block)."""
    gen = np.random.Generator(np.random.Philox(key=seed, counter=block << 128))
    return gen.random((rows, cols))


def simulate(spec: GameSpec, sigma: Strategy, tau: Strategy, T: int, trials: int, seed: int,
             workers: int = 1) -> SimulationReport:
    """Sample object paths and record who searches the object's state first.

    Trials are split into fixed blocks of ``SIM_BLOCK``; block ``k`` draws
    from a Philox stream keyed by ``seed`` with counter offset ``k << 128``,
    so results do not depend on ``workers``. Each trial uses ``T`` uniforms
    (initial state, then each move) sampled by inverse CDF.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    sigma, tau = sigma.bind(spec), tau.bind(spec)
    _, _, played = _play(spec, sigma, tau, T)
    # a play closed by a certain find searches nothing afterwards
    actions = np.full(T, -1, dtype=np.int64)
    actions[: len(played)] = played

    init_cdf = kernels.row_cdfs(spec.initial.probs)
    if T > 1:
        cdfs = kernels.row_cdfs(spec.schedule.stacked(1, T - 1))
    else:
        cdfs = np.ones((1, spec.n, spec.n))

    nblocks = -(-trials // SIM_BLOCK)

    def run(k):
        rows = min(SIM_BLOCK, trials - k * SIM_BLOCK)
        U = block_uniforms(seed, k, rows, T)
        return kernels.first_hits(U, init_cdf, cdfs, actions)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(nblocks)))
    else:
        parts = [run(k) for k in range(nblocks)]
    hits = np.concatenate(parts)

    found = hits > 0
    c1 = int(np.count_nonzero(found & (hits % 2 == 1)))
    c2 = int(np.count_nonzero(found & (hits % 2 == 0)))
    c0 = trials - c1 - c2
    p1 = c1 / trials
    return SimulationReport(
        trials=trials,
        seed=seed,
        p1_win_hat=p1,
        p2_win_hat=c2 / trials,
        not_found_hat=c0 / trials,
        mean_find_time=float(hits[found].mean()) if c1 + c2 else math.nan,
        ci_halfwidth=1.96 * math.sqrt(p1 * (1.0 - p1) / trials),
        counts=(c1, c2, c0),
        horizon=T,
    )
