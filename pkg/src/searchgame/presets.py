"""Bundled example games."""

from __future__ import annotations

import numpy as np

from .core import Belief, GameSpec, StateSpace, TransitionMatrix, TransitionSchedule
from .errors import ParameterOutOfRange

EXAMPLES = ("example1", "example2", "identity", "uniform", "figure1", "figure2")

# Short names accepted wherever a spec path is expected.
BUNDLED = {
    "example1": ("example1", {}),
    "example2": ("example2", {}),
    "figure1": ("figure1", {}),
    "figure2": ("figure2", {}),
    **{f"identity{n}": ("identity", {"n": n}) for n in range(2, 7)},
    **{f"uniform{n}": ("uniform", {"n": n}) for n in range(2, 7)},
}


def _open_interval(name, value, lo, hi, example):
    if not lo < value < hi:
        raise ParameterOutOfRange(f"{example} requires {lo} < {name} < {hi}, got {value}", name)


def _spec(rows, initial) -> GameSpec:
    rows = np.asarray(rows, dtype=float)
    n = rows.shape[0]
    return GameSpec(
        StateSpace.numbered(n),
        TransitionSchedule([TransitionMatrix(rows)]),
        Belief(initial),
    )


def example1(eta: float = 0.2, q: float = 0.2) -> GameSpec:
    """Two transient states leaking into two absorbing ones; no 0-equilibrium."""
    _open_interval("eta", eta, 0.0, 0.25, "example1")
    _open_interval("q", q, 0.0, 0.25, "example1")
    leak = [eta / 2, eta / 2, (1 - eta) / 2, (1 - eta) / 2]
    rows = [leak, leak, [0, 0, 1, 0], [0, 0, 0, 1]]
    return _spec(rows, [q, q, 0.5 - q, 0.5 - q])


def example2(eta: float = 0.1, q: float = 0.2) -> GameSpec:
    """A seven-state transient loop beside two absorbing states.

    State 7 moves to 6 with probability ``1 - eta`` and stays put with
    probability ``eta``.
    """
    _open_interval("eta", eta, 0.0, 1 / 6, "example2")
    _open_interval("q", q, 0.0, 1 / 3, "example2")
    P = np.zeros((9, 9))
    P[0, 6] = 1.0
    P[1, 0] = P[2, 0] = P[3, 0] = 1.0
    P[4, [1, 2, 3]] = 1 / 3
    P[5, 4] = 1.0
    P[6, 5] = 1 - eta
    P[6, 6] = eta
    P[7, 7] = P[8, 8] = 1.0
    init = [0, 0, 0, 0, 0, q * (1 - eta), q * eta, (1 - q) / 2, (1 - q) / 2]
    return _spec(P, init)


def identity(n: int = 2) -> GameSpec:
    """A motionless object, uniform start."""
    if n < 1:
        raise ParameterOutOfRange(f"n must be >= 1, got {n}", "n")
    return _spec(np.eye(n), np.full(n, 1.0 / n))


def uniform(n: int = 2) -> GameSpec:
    """The object jumps to a uniformly random state every period."""
    if n < 1:
        raise ParameterOutOfRange(f"n must be >= 1, got {n}", "n")
    return _spec(np.full((n, n), 1.0 / n), np.full(n, 1.0 / n))


def figure1() -> GameSpec:
    return identity(3)


def figure2() -> GameSpec:
    """Two absorbing states and a third that splits evenly between them."""
    Q = [[1, 0, 0], [0, 1, 0], [0.5, 0.5, 0]]
    return _spec(Q, np.full(3, 1 / 3))


_BUILDERS = {
    "example1": example1,
    "example2": example2,
    "identity": identity,
    "uniform": uniform,
    "figure1": figure1,
    "figure2": figure2,
}


def generate_example(name: str, **params) -> GameSpec:
    """Build a bundled example by family name with keyword parameters."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ParameterOutOfRange(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}",
                                  "name") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise ParameterOutOfRange(str(exc), name) from None


def bundled(name: str) -> GameSpec | None:
    """The bundled spec registered under ``name``, or ``None``."""
    entry = BUNDLED.get(name)
    if entry is None:
        return None
    family, params = entry
    return generate_example(family, **params)
