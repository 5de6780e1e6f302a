"""Domain types and belief algebra for the alternating search game.

States are addressed by 0-based index everywhere in the library; labels are
only used for reporting and by the CLI.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import (
    BeliefSumNotOne,
    ConditioningOnCertainty,
    DimensionMismatch,
    EmptySchedule,
    NegativeEntry,
    RowSumNotOne,
    SpecError,
)

#: Tolerance on simplex invariants (row sums, belief sums).
SIMPLEX_ATOL = 1e-12
#: A state holding at least ``1 - CERTAINTY_ATOL`` of the mass is a certain find.
CERTAINTY_ATOL = 1e-12

REPEAT_RULES = ("cycle", "hold_last")


def _readonly(arr):
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class StateSpace:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise SpecError("state space must contain at least one state", "states")
        for i, lab in enumerate(labels):
            if not isinstance(lab, str) or not lab:
                raise SpecError(f"label {lab!r} is not a non-empty string", f"states[{i}]")
        if len(set(labels)) != len(labels):
            raise SpecError("state labels must be pairwise distinct", "states")

    @classmethod
    def numbered(cls, n: int) -> StateSpace:
        """States labelled ``"1"`` .. ``"n"``."""
        return cls(tuple(str(i + 1) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.labels)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown state label {label!r}") from None

    def __len__(self):
        return len(self.labels)


def _normalized(arr: np.ndarray) -> np.ndarray:
    # leave sums already at 1 up to rounding alone, so re-reading a stored vector is bitwise stable
    total = arr.sum()
    if abs(total - 1.0) <= 8 * arr.size * np.finfo(float).eps:
        return arr
    return arr / total


class Belief:
    """A probability vector over the states, stored renormalized and read-only."""

    __slots__ = ("probs",)

    def __init__(self, probs, atol: float = SIMPLEX_ATOL, location: str = "belief"):
        arr = np.array(probs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise DimensionMismatch(f"expected a non-empty vector, got shape {arr.shape}", location)
        if not np.all(np.isfinite(arr)):
            raise SpecError("belief contains non-finite entries", location)
        neg = np.flatnonzero(arr < 0)
        if neg.size:
            j = int(neg[0])
            raise NegativeEntry(f"entry {j} is {arr[j]!r}", location)
        total = arr.sum()
        if abs(total - 1.0) > atol:
            raise BeliefSumNotOne(f"entries sum to {total!r}", location)
        self.probs = _readonly(_normalized(arr))

    @classmethod
    def _trusted(cls, arr) -> Belief:
        # Internal constructor for results of condition/propagate: renormalize only.
        obj = cls.__new__(cls)
        arr = np.asarray(arr, dtype=float)
        obj.probs = _readonly(_normalized(arr))
        return obj

    @classmethod
    def from_weights(cls, weights) -> Belief:
        """Normalize arbitrary non-negative weights with a positive sum."""
        w = np.array(weights, dtype=float)
        if np.any(w < 0) or not w.sum() > 0:
            raise SpecError("weights must be non-negative with a positive sum")
        return cls._trusted(w)

    @classmethod
    def unit(cls, n: int, s: int) -> Belief:
        e = np.zeros(n)
        e[s] = 1.0
        return cls._trusted(e)

    @classmethod
    def uniform(cls, n: int) -> Belief:
        return cls._trusted(np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __len__(self):
        return self.probs.size

    def __getitem__(self, idx):
        return self.probs[idx]

    def __iter__(self):
        return iter(self.probs.tolist())

    def __eq__(self, other):
        if not isinstance(other, Belief):
            return NotImplemented
        return self.probs.shape == other.probs.shape and bool(np.all(self.probs == other.probs))

    def __hash__(self):
        return hash(self.probs.tobytes())

    def allclose(self, other, atol: float = SIMPLEX_ATOL) -> bool:
        return bool(np.allclose(self.probs, np.asarray(other, dtype=float), rtol=0.0, atol=atol))

    def __repr__(self):
        return f"Belief({np.array2string(self.probs, precision=6, separator=', ')})"


class TransitionMatrix:
    """Row-stochastic ``n x n`` matrix; entry ``(i, j)`` is the chance of ``i -> j``."""

    __slots__ = ("rows",)

    def __init__(self, rows, atol: float = SIMPLEX_ATOL, location: str = "matrix"):
        arr = np.array(rows, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}", location)
        if not np.all(np.isfinite(arr)):
            raise SpecError("matrix contains non-finite entries", location)
        bad = np.argwhere(arr < 0)
        if bad.size:
            i, j = (int(v) for v in bad[0])
            raise NegativeEntry(f"entry ({i}, {j}) is {arr[i, j]!r}", f"{location} row {i}")
        sums = arr.sum(axis=1)
        off = np.flatnonzero(np.abs(sums - 1.0) > atol)
        if off.size:
            i = int(off[0])
            raise RowSumNotOne(f"row sums to {sums[i]!r}", f"{location} row {i}")
        self.rows = _readonly(arr)

    @classmethod
    def identity(cls, n: int) -> TransitionMatrix:
        return cls(np.eye(n))

    @classmethod
    def uniform(cls, n: int) -> TransitionMatrix:
        return cls(np.full((n, n), 1.0 / n))

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.rows if dtype is None else self.rows.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        return self.rows.shape == other.rows.shape and bool(np.all(self.rows == other.rows))

    def __hash__(self):
        return hash(self.rows.tobytes())

    def __repr__(self):
        return f"TransitionMatrix(n={self.n})"


class TransitionSchedule:
    """A finite list of matrices extended to every period by a repeat rule.

    ``cycle`` uses matrix ``(t - 1) mod len`` at period ``t``; ``hold_last``
    clamps to the last listed matrix.
    """

    __slots__ = ("matrices", "repeat_rule", "_stack")

    def __init__(self, matrices, repeat_rule: str = "hold_last"):
        mats = tuple(m if isinstance(m, TransitionMatrix) else TransitionMatrix(m) for m in matrices)
        if not mats:
            raise EmptySchedule("schedule needs at least one matrix", "matrices")
        n = mats[0].n
        for k, m in enumerate(mats):
            if m.n != n:
                raise DimensionMismatch(f"matrix is {m.n}x{m.n}, expected {n}x{n}", f"matrices[{k}]")
        if repeat_rule not in REPEAT_RULES:
            raise SpecError(f"repeat rule must be one of {REPEAT_RULES}, got {repeat_rule!r}", "repeat")
        self.matrices = mats
        self.repeat_rule = repeat_rule
        self._stack = _readonly(np.stack([m.rows for m in mats]))

    @classmethod
    def homogeneous(cls, matrix) -> TransitionSchedule:
        return cls([matrix], "hold_last")

    @property
    def n(self) -> int:
        return self.matrices[0].n

    def phase(self, t: int) -> int:
        """Index of the listed matrix used at period ``t`` (``t >= 1``)."""
        if t < 1:
            raise ValueError(f"periods start at 1, got {t}")
        L = len(self.matrices)
        if self.repeat_rule == "cycle":
            return (t - 1) % L
        return min(t - 1, L - 1)

    def matrix(self, t: int) -> TransitionMatrix:
        return self.matrices[self.phase(t)]

    def rows_at(self, t: int) -> np.ndarray:
        return self._stack[self.phase(t)]

    def stacked(self, start: int, count: int) -> np.ndarray:
        """Array of shape ``(count, n, n)`` holding ``P_start .. P_{start+count-1}``."""
        idx = [self.phase(start + k) for k in range(count)]
        return self._stack[idx]

    @property
    def is_homogeneous(self) -> bool:
        return all(m == self.matrices[0] for m in self.matrices[1:])

    def __eq__(self, other):
        if not isinstance(other, TransitionSchedule):
            return NotImplemented
        return self.repeat_rule == other.repeat_rule and self.matrices == other.matrices

    def __repr__(self):
        return f"TransitionSchedule(len={len(self.matrices)}, repeat={self.repeat_rule!r}, n={self.n})"


@dataclass(frozen=True)
class GameSpec:
    states: StateSpace
    schedule: TransitionSchedule
    initial: Belief

    def __post_init__(self):
        n = self.states.n
        if self.schedule.n != n:
            raise DimensionMismatch(f"schedule has {self.schedule.n} states, expected {n}", "matrices")
        if self.initial.n != n:
            raise DimensionMismatch(f"initial belief has {self.initial.n} entries, expected {n}", "initial")

    @classmethod
    def from_arrays(cls, matrices, initial, labels=None, repeat: str = "hold_last") -> GameSpec:
        """Build a spec from a matrix (or list of matrices) and an initial vector."""
        mats = np.asarray(matrices, dtype=float)
        if mats.ndim == 2:
            mats = mats[None]
        schedule = TransitionSchedule(list(mats), repeat)
        states = StateSpace.numbered(schedule.n) if labels is None else StateSpace(tuple(labels))
        init = initial if isinstance(initial, Belief) else Belief(initial, location="initial")
        return cls(states, schedule, init)

    @property
    def n(self) -> int:
        return self.states.n

    def matrix(self, t: int) -> TransitionMatrix:
        return self.schedule.matrix(t)

    def with_initial(self, belief) -> GameSpec:
        b = belief if isinstance(belief, Belief) else Belief(belief, location="initial")
        return GameSpec(self.states, self.schedule, b)


@dataclass(frozen=True)
class History:
    """Actions chosen so far; the game is at period ``len(actions) + 1``."""

    actions: tuple[int, ...] = ()

    @property
    def period(self) -> int:
        return len(self.actions) + 1

    @property
    def mover(self) -> int:
        """The player active at this history (1 at odd periods, 2 at even)."""
        return 1 if self.period % 2 == 1 else 2

    def extend(self, s: int) -> History:
        return History(self.actions + (int(s),))

    def __len__(self):
        return len(self.actions)


def _as_probs(b) -> np.ndarray:
    return b.probs if isinstance(b, Belief) else np.asarray(b, dtype=float)


def _as_rows(m) -> np.ndarray:
    return m.rows if isinstance(m, TransitionMatrix) else np.asarray(m, dtype=float)


def condition(b, s: int) -> Belief:
    """Belief given that the object is not at state ``s``."""
    p = _as_probs(b)
    if not 0 <= s < p.size:
        raise IndexError(f"state {s} out of range for {p.size} states")
    if p[s] >= 1.0 - CERTAINTY_ATOL:
        raise ConditioningOnCertainty(f"state {s} holds mass {p[s]!r}; a miss there has probability zero")
    out = p.copy()
    out[s] = 0.0
    return Belief._trusted(out)


def propagate(b, m) -> Belief:
    """One step of the chain: the row vector ``b`` times ``m``."""
    p = _as_probs(b)
    rows = _as_rows(m)
    if rows.shape != (p.size, p.size):
        raise DimensionMismatch(f"belief of size {p.size} against matrix of shape {rows.shape}")
    return Belief._trusted(p @ rows)


def step_belief(b, s: int, t: int, schedule) -> Belief:
    """Belief at period ``t + 1`` after a miss at ``s`` in period ``t``.

    ``schedule`` may be a ``GameSpec``, a ``TransitionSchedule`` or a single
    matrix used at every period.
    """
    if t < 1:
        raise ValueError(f"periods start at 1, got {t}")
    if isinstance(schedule, GameSpec):
        m = schedule.schedule.rows_at(t)
    elif isinstance(schedule, TransitionSchedule):
        m = schedule.rows_at(t)
    else:
        m = schedule
    return propagate(condition(b, s), m)


def validate_spec(raw: Mapping) -> GameSpec:
    """Turn a parsed spec document into a ``GameSpec``.

    The document holds ``matrices`` (list of row-major ``n x n`` arrays),
    ``initial`` (length-``n`` vector), an optional ``states`` label list
    (defaults to ``"1"..."n"``) and an optional ``repeat`` rule (defaults to
    ``"hold_last"``). The first violated constraint is raised with its
    location.
    """
    if not isinstance(raw, Mapping):
        raise SpecError("spec document must be a mapping", "<root>")
    unknown = set(raw) - {"states", "matrices", "repeat", "initial"}
    if unknown:
        raise SpecError(f"unknown field(s): {sorted(unknown)}", "<root>")
    if "matrices" not in raw:
        raise EmptySchedule("missing field", "matrices")
    if "initial" not in raw:
        raise SpecError("missing field", "initial")
    mats = raw["matrices"]
    if not isinstance(mats, Sequence) or isinstance(mats, (str, bytes)) or len(mats) == 0:
        raise EmptySchedule("schedule needs at least one matrix", "matrices")

    labels = raw.get("states")
    if labels is not None:
        if not isinstance(labels, Sequence) or isinstance(labels, (str, bytes)):
            raise SpecError("must be a list of labels", "states")
        states = StateSpace(tuple(labels))
        n = states.n
    else:
        states = None
        n = None

    checked = []
    for k, m in enumerate(mats):
        loc = f"matrices[{k}]"
        try:
            arr = np.array(m, dtype=float)
        except (TypeError, ValueError):
            raise DimensionMismatch("rows must be equal-length numeric arrays", loc) from None
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}", loc)
        if n is None:
            n = arr.shape[0]
        if arr.shape[0] != n:
            raise DimensionMismatch(f"matrix is {arr.shape[0]}x{arr.shape[1]}, expected {n}x{n}", loc)
        checked.append(TransitionMatrix(arr, location=loc))

    repeat = raw.get("repeat", "hold_last")
    schedule = TransitionSchedule(checked, repeat)
    if states is None:
        states = StateSpace.numbered(n)

    try:
        init = np.array(raw["initial"], dtype=float)
    except (TypeError, ValueError):
        raise SpecError("must be a numeric vector", "initial") from None
    if init.ndim != 1 or init.size != n:
        raise DimensionMismatch(f"expected {n} entries, got shape {init.shape}", "initial")
    initial = Belief(init, location="initial")
    return GameSpec(states, schedule, initial)


def spec_to_document(spec: GameSpec) -> dict:
    """Inverse of ``validate_spec``: a JSON-serializable mapping."""
    return {
        "states": list(spec.states.labels),
        "matrices": [m.rows.tolist() for m in spec.schedule.matrices],
        "repeat": spec.schedule.repeat_rule,
        "initial": spec.initial.probs.tolist(),
    }
