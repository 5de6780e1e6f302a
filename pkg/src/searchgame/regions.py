"""Optimal first-move regions over a discretized belief simplex.

``map_regions`` solves every point of a barycentric grid in one batched
backward induction and records, per point, the set of opening moves whose
q-value is within ``tie_tol`` of the best. The ``check_*`` helpers test the
geometric properties those sets are known to have and report what they find
rather than raising.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .chains import mixing_certificate
from .core import TransitionSchedule
from .errors import HorizonTooLarge, UnsupportedDimension
from .solver import _schedule, node_budget, solve_batch, solve_lattice

#: Region membership tolerance; looser than the solver's tie tolerance so
#: float noise at true boundaries does not split regions.
REGION_ATOL = 1e-7
WITNESS_ATOL = 1e-6


class SimplexGrid:
    """All beliefs with entries ``k / N`` in ``n`` states, in lexicographic order."""

    def __init__(self, n: int, N: int):
        if n < 1:
            raise ValueError(f"need at least one state, got n={n}")
        if N < 1:
            raise ValueError(f"grid denominator must be >= 1, got N={N}")
        self.n = int(n)
        self.N = int(N)
        self.counts = _compositions(self.n, self.N)
        self.points = self.counts / self.N

    def __len__(self):
        return self.points.shape[0]

    @staticmethod
    def size(n: int, N: int) -> int:
        return math.comb(N + n - 1, n - 1)

    def index(self, counts) -> int:
        """Row of the point with integer coordinates ``counts``."""
        hit = np.flatnonzero((self.counts == np.asarray(counts)).all(axis=1))
        if hit.size == 0:
            raise KeyError(tuple(counts))
        return int(hit[0])

    def neighbours(self):
        """Index pairs of grid points one unit step apart."""
        lookup = {tuple(c): i for i, c in enumerate(self.counts.tolist())}
        for i, c in enumerate(self.counts.tolist()):
            for a in range(self.n):
                if c[a] == 0:
                    continue
                for b in range(self.n):
                    if b == a:
                        continue
                    d = list(c)
                    d[a] -= 1
                    d[b] += 1
                    j = lookup[tuple(d)]
                    if j > i:
                        yield i, j


def _compositions(n: int, N: int) -> np.ndarray:
    # stars and bars: choose n-1 bar positions among N + n - 1 slots
    rows = []
    for bars in combinations(range(N + n - 1), n - 1):
        prev = -1
        row = []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(N + n - 2 - prev)
        rows.append(row)
    return np.array(rows[::-1], dtype=np.int64).reshape(-1, n)


@dataclass
class RegionMap:
    grid: SimplexGrid
    horizon: int
    q_values: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    assignment: list[frozenset[int]] = field(repr=False)
    schedule: TransitionSchedule = field(repr=False)
    label: str = ""
    certified: bool = False
    stable: bool | None = None
    tie_tol: float = REGION_ATOL

    def region(self, s: int) -> np.ndarray:
        """Indices of grid points where opening with ``s`` is optimal."""
        return np.array([i for i, a in enumerate(self.assignment) if s in a], dtype=np.int64)

    def summary(self) -> dict:
        n = self.grid.n
        return {
            "label": self.label,
            "horizon": self.horizon,
            "grid": self.grid.N,
            "points": len(self.grid),
            "certified": self.certified,
            "stable": self.stable,
            "region_sizes": [int(self.region(s).size) for s in range(n)],
            "multi_action_points": sum(len(a) > 1 for a in self.assignment),
        }


def _assign(q: np.ndarray, tol: float) -> list[frozenset[int]]:
    best = q.max(axis=1, keepdims=True)
    return [frozenset(np.flatnonzero(row).tolist()) for row in q >= best - tol]


def _solve_points(schedule, points, T, chunk=4096, budget=None, **kw):
    # the node budget covers the whole batch of points, not each chunk
    total = node_budget() if budget is None else budget
    left = total
    qs, vs = [], []
    for lo in range(0, points.shape[0], chunk):
        try:
            lat = solve_lattice(points[lo:lo + chunk], schedule, T, budget=left, **kw)
        except HorizonTooLarge:
            raise HorizonTooLarge(
                f"{points.shape[0]} points at horizon {T} need more than {total} nodes"
            ) from None
        left -= lat.nodes
        qs.append(lat.root_q)
        vs.append(lat.root_values)
    return np.concatenate(qs), np.concatenate(vs)


def certified_horizon(alpha: float, tol: float = REGION_ATOL) -> int | None:
    """Smallest ``T`` with ``2 (1 - alpha) ** (T - 1) < tol``; ``None`` if ``alpha == 0``."""
    if alpha <= 0.0:
        return None
    if alpha >= 1.0:
        return 1
    return max(1, math.floor(math.log(tol / 2) / math.log(1 - alpha)) + 2)


def map_regions(spec, T: int | None, N: int, *, tie_tol: float = REGION_ATOL,
                stability_check: bool = True, **kw) -> RegionMap:
    """Optimal opening moves at every point of the ``N``-grid of the simplex.

    ``T=None`` picks the certified horizon of a strongly mixed schedule.
    The map is labelled certified when ``2 (1 - alpha) ** (T - 1) < tie_tol``
    for the schedule's mixing constant ``alpha``. With ``stability_check``
    the values are recomputed at ``T + 2`` and ``stable`` records whether
    they agree to ``1e-9``.
    """
    schedule = _schedule(spec)
    alpha = mixing_certificate(schedule).alpha
    if T is None:
        T = certified_horizon(alpha, tie_tol)
        if T is None:
            raise ValueError("schedule is not strongly mixed; pass an explicit horizon")
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    budget = kw.pop("budget", None)
    # every point expands into at least n children, so this bound is safe to check up front
    size = SimplexGrid.size(schedule.n, N)
    if size * schedule.n > (node_budget() if budget is None else budget):
        raise HorizonTooLarge(
            f"a {schedule.n}-state grid with N={N} has {size} points, too many for the node budget")
    kw["budget"] = budget
    grid = SimplexGrid(schedule.n, N)
    q, v = _solve_points(schedule, grid.points, T, **kw)
    certified = alpha > 0 and 2 * (1 - alpha) ** (T - 1) < tie_tol
    stable = None
    if stability_check:
        _, v2 = _solve_points(schedule, grid.points, T + 2, **kw)
        stable = bool(np.allclose(v, v2, rtol=0.0, atol=1e-9))
    return RegionMap(
        grid=grid,
        horizon=T,
        q_values=q,
        values=v,
        assignment=_assign(q, tie_tol),
        schedule=schedule,
        label="certified regions" if certified else f"horizon-{T} regions",
        certified=certified,
        stable=stable,
        tie_tol=tie_tol,
    )


# --------------------------------------------------------------------------
# geometry checks

@dataclass
class StarConvexityReport:
    state: int
    checked: int
    violations: list[tuple[np.ndarray, float, float]]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_star_convexity(rm: RegionMap, s: int, samples: int = 200, *, lambdas=None,
                         seed: int = 0) -> StarConvexityReport:
    """Test that segments from points of region ``s`` towards the vertex ``e^s`` stay in the region.

    Up to ``samples`` region points are drawn (all of them if fewer) and
    each is moved to ``lam * e^s + (1 - lam) * p`` for every ``lam`` in
    ``lambdas``. A violation records ``(point, lam, shortfall)`` when ``s``
    falls more than ``rm.tie_tol`` below the best q-value there.
    """
    n = rm.grid.n
    members = rm.region(s)
    lambdas = np.linspace(0.0, 1.0, 11) if lambdas is None else np.asarray(lambdas, dtype=float)
    if members.size == 0:
        return StarConvexityReport(s, 0, [])
    rng = np.random.default_rng(seed)
    if members.size > samples:
        members = rng.choice(members, size=samples, replace=False)
    P = rm.grid.points[members]
    e = np.zeros(n)
    e[s] = 1.0
    X = (lambdas[:, None, None] * e + (1 - lambdas[:, None, None]) * P[None]).reshape(-1, n)
    q, _ = _solve_points(rm.schedule, X, rm.horizon)
    gap = q.max(axis=1) - q[:, s]
    bad = np.flatnonzero(gap > rm.tie_tol)
    lam_of = np.repeat(lambdas, P.shape[0])
    violations = [(X[i], float(lam_of[i]), float(gap[i])) for i in bad]
    return StarConvexityReport(s, X.shape[0], violations)


@dataclass
class IntersectionReport:
    found: bool
    point: np.ndarray | None
    spread: float
    q_values: np.ndarray | None
    method: str
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "point": None if self.point is None else self.point.tolist(),
            "spread": self.spread,
            "q_values": None if self.q_values is None else self.q_values.tolist(),
            "method": self.method,
            "message": self.message,
        }


def project_simplex(x: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, x.size + 1)
    rho = np.flatnonzero(u - css / k > 0)[-1]
    return np.maximum(x - css[rho] / (rho + 1), 0.0)


def check_intersection(rm: RegionMap, *, atol: float = WITNESS_ATOL, refine: bool = True,
                       maxiter: int = 400) -> IntersectionReport:
    """Look for a belief at which every opening move is optimal.

    The grid point with the smallest q-value spread is taken first; if its
    spread exceeds ``atol`` a Nelder-Mead search on the spread refines it.
    Failure is reported as "not found at this resolution", never as proof of
    absence.
    """
    spread = rm.q_values.max(axis=1) - rm.q_values.min(axis=1)
    i = int(np.argmin(spread))
    best_p, best_spread, best_q = rm.grid.points[i], float(spread[i]), rm.q_values[i]
    if best_spread <= atol:
        return IntersectionReport(True, best_p.copy(), best_spread, best_q.copy(), "grid")
    if not refine:
        return IntersectionReport(False, best_p.copy(), best_spread, best_q.copy(), "grid",
                                  f"no witness at resolution N={rm.grid.N}")

    def q_at(p):
        q, _ = solve_batch(rm.schedule, p, rm.horizon)
        return q[0]

    def objective(x):
        q = q_at(project_simplex(x))
        return float(q.max() - q.min())

    res = minimize(objective, best_p, method="Nelder-Mead",
                   options={"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-12,
                            "initial_simplex": _start_simplex(best_p, 1.0 / rm.grid.N)})
    p = project_simplex(res.x)
    q = q_at(p)
    s = float(q.max() - q.min())
    if s <= atol:
        return IntersectionReport(True, p, s, q, "refined")
    if s < best_spread:
        best_p, best_spread, best_q = p, s, q
    return IntersectionReport(False, best_p, best_spread, best_q, "refined",
                              f"no witness at resolution N={rm.grid.N} after local refinement")


def _start_simplex(p, step):
    n = p.size
    pts = [p]
    for k in range(n):
        d = p.copy()
        d[k] += step
        pts.append(d)
    return np.array(pts)


@dataclass
class DominationReport:
    checked: int
    violations: list[tuple[np.ndarray, int, int, float]]

    @property
    def ok(self) -> bool:
        return not self.violations


def sample_zero_mass_beliefs(n: int, samples: int, seed: int = 0) -> np.ndarray:
    """Random beliefs with at least one empty and one occupied state."""
    if n < 2:
        raise ValueError("zero-mass sampling needs at least two states")
    rng = np.random.default_rng(seed)
    out = np.empty((samples, n))
    for r in range(samples):
        k = rng.integers(1, n)  # number of empty states
        empty = rng.choice(n, size=k, replace=False)
        w = rng.exponential(size=n)
        w[empty] = 0.0
        out[r] = w / w.sum()
    return out


def check_zero_mass_domination(spec, T: int, samples: int = 100, *, seed: int = 0,
                               points=None, atol: float = 1e-9) -> DominationReport:
    """Test that opening at an empty state is never strictly better than any other opening.

    For each sampled belief ``p`` and each ``s0`` with ``p[s0] == 0``,
    a violation ``(p, s0, s, excess)`` is recorded whenever
    ``q(p, s0) > q(p, s) + atol``.
    """
    schedule = _schedule(spec)
    P = sample_zero_mass_beliefs(schedule.n, samples, seed) if points is None \
        else np.atleast_2d(np.asarray(points, dtype=float))
    q, _ = _solve_points(schedule, P, T)
    violations = []
    for p, row in zip(P, q):
        for s0 in np.flatnonzero(p == 0.0):
            excess = row[s0] - row
            for s in np.flatnonzero(excess > atol):
                violations.append((p, int(s0), int(s), float(excess[s])))
    return DominationReport(P.shape[0], violations)


# --------------------------------------------------------------------------
# export

PALETTE = ("#4c72b0", "#dd8452", "#55a868")


def _format_assignment(a) -> str:
    return "|".join(str(s) for s in sorted(a))


def export_regions(rm: RegionMap, path, format: str = "csv") -> Path:
    """Write the map as CSV (any ``n``) or as a ternary-plot SVG (``n = 3``)."""
    path = Path(path)
    if format == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"p_{k}" for k in range(rm.grid.n)] + ["value", "assignment"])
            for p, v, a in zip(rm.grid.points, rm.values, rm.assignment):
                w.writerow([repr(float(x)) for x in p] + [repr(float(v)), _format_assignment(a)])
    elif format == "svg":
        if rm.grid.n != 3:
            raise UnsupportedDimension(f"svg export needs 3 states, map has {rm.grid.n}")
        path.write_text(_svg(rm))
    else:
        raise ValueError(f"unknown format {format!r}; use csv or svg")
    return path


def read_regions_csv(path):
    """Parse an exported CSV into ``(points, values, assignments)``."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = len(header) - 2
    points = np.array([[float(x) for x in r[:n]] for r in body]).reshape(-1, n)
    values = np.array([float(r[n]) for r in body])
    assignments = [frozenset(int(s) for s in r[n + 1].split("|")) for r in body]
    return points, values, assignments


def _svg(rm: RegionMap, size: float = 480.0) -> str:
    pad = 40.0
    h = size * math.sqrt(3) / 2
    W, H = size + 2 * pad, h + 2 * pad + 40
    # barycentric corners: state 0 bottom-left, state 1 bottom-right, state 2 top
    corners = np.array([[pad, pad + h], [pad + size, pad + h], [pad + size / 2, pad]])
    r = 0.5 * size / rm.grid.N

    def xy(p):
        return p @ corners

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}" '
        f'viewBox="0 0 {W:.1f} {H:.1f}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    tri = " ".join(f"{x:.2f},{y:.2f}" for x, y in corners)
    out.append(f'<polygon points="{tri}" fill="none" stroke="black" stroke-width="1.5"/>')
    multi = []
    for p, a in zip(rm.grid.points, rm.assignment):
        x, y = xy(p)
        if len(a) == 1:
            colour = PALETTE[next(iter(a))]
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r:.2f}" fill="{colour}"/>')
        else:
            multi.append((x, y, a))
    m = max(1.5, 0.45 * r)
    for x, y, a in multi:
        out.append(f'<rect x="{x - m:.2f}" y="{y - m:.2f}" width="{2 * m:.2f}" height="{2 * m:.2f}" '
                   f'fill="black" transform="rotate(45 {x:.2f} {y:.2f})">'
                   f'<title>{_format_assignment(a)}</title></rect>')
    offsets = [(-18, 18), (8, 18), (-4, -10)]
    for k in range(3):
        x, y = corners[k]
        dx, dy = offsets[k]
        out.append(f'<text x="{x + dx:.1f}" y="{y + dy:.1f}" font-family="sans-serif" '
                   f'font-size="14">e{k}</text>')
    ly = pad + h + 32
    for k in range(3):
        lx = pad + k * 110
        out.append(f'<circle cx="{lx + 6:.1f}" cy="{ly - 4:.1f}" r="6" fill="{PALETTE[k]}"/>')
        out.append(f'<text x="{lx + 16:.1f}" y="{ly:.1f}" font-family="sans-serif" '
                   f'font-size="12">only {k}</text>')
    lx = pad + 330
    out.append(f'<rect x="{lx:.1f}" y="{ly - 9:.1f}" width="8" height="8" fill="black" '
               f'transform="rotate(45 {lx + 4:.1f} {ly - 5:.1f})"/>')
    out.append(f'<text x="{lx + 14:.1f}" y="{ly:.1f}" font-family="sans-serif" '
               f'font-size="12">tie</text>')
    out.append(f'<text x="{pad:.1f}" y="20" font-family="sans-serif" font-size="14">'
               f'{rm.label}, N={rm.grid.N}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
