"""Uniform structures induced by generator families.

Each finite tuple of generators and each eps > 0 give a basic entourage:
the pairs of points whose images under every listed generator differ by
strictly less than eps.  Comparing the uniformities of two families is a
counterexample search over the sampled cloud; probe sequences supply the
Cauchy data that completion consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .expr import DomainError, Expr, eval_expr, variables
from .space import DiffSpace, embed

__all__ = [
    "Entourage",
    "Probe",
    "CauchyVerdict",
    "RefinementRow",
    "RefinementReport",
    "entourage_contains",
    "pseudometric",
    "compare_uniformities",
    "probe_points",
    "probe_cauchy",
]


@dataclass(frozen=True)
class Entourage:
    """V(f1..fk, eps): the basic entourage carved out by finitely many
    generators at width eps (strict inequality)."""

    names: tuple[str, ...]
    eps: float

    def __post_init__(self):
        if not self.names:
            raise ValueError("an entourage needs at least one generator")
        if not (self.eps > 0.0):
            raise ValueError("entourage width must be positive")

    def describe(self) -> str:
        return f"V({','.join(self.names)};{self.eps!r})"


def _family_values(space: DiffSpace, names: Sequence[str], point: Sequence[float]) -> list[float]:
    env = dict(zip(space.carrier.ambient, point))
    return [eval_expr(space.family.get(n).expr, env) for n in names]


def entourage_contains(space: DiffSpace, v: Entourage, x: Sequence[float], y: Sequence[float]) -> bool:
    fx = _family_values(space, v.names, x)
    fy = _family_values(space, v.names, y)
    return all(abs(a - b) < v.eps for a, b in zip(fx, fy))


def pseudometric(space: DiffSpace, names: Sequence[str], x: Sequence[float], y: Sequence[float]) -> float:
    """Largest generator gap over the listed family; the finite-family
    pseudometric whose balls are the basic entourages."""
    names = tuple(names)
    if not names:
        raise ValueError("pseudometric needs at least one generator")
    fx = _family_values(space, names, x)
    fy = _family_values(space, names, y)
    return max(abs(a - b) for a, b in zip(fx, fy))


@dataclass(frozen=True)
class RefinementRow:
    target: str
    candidate_eps: float
    refines: bool
    witness_x: tuple[float, ...] | None
    witness_y: tuple[float, ...] | None
    d_g: float | None
    violated: str | None


@dataclass(frozen=True)
class RefinementReport:
    g_names: tuple[str, ...]
    h_names: tuple[str, ...]
    sample_count: int
    rows: tuple[RefinementRow, ...]

    def all_refine(self) -> bool:
        return all(row.refines for row in self.rows)


def _coordinate_matrix(space: DiffSpace, names: tuple[str, ...]) -> tuple[np.ndarray, list[tuple[float, ...]]]:
    sub = space.with_generators(names)
    cloud = embed(sub)
    ambient = [p.ambient for p in cloud.points]
    coords = np.array([p.coords for p in cloud.points], dtype=float)
    return coords, ambient

def compare_uniformities(
    space: DiffSpace,
    g_names: Sequence[str],
    h_names: Sequence[str],
    eps_grid: Sequence[float],
    target_eps: float = 1.0,
) -> RefinementReport:
    """Ask whether the G-uniformity refines the H-entourage of width
    `target_eps` at each candidate width in `eps_grid`.

    Verdicts are relative to the sampled cloud: a witness is a genuine
    counterexample pair, while "refines" only says no sampled pair within
    the search window violates the target.  The first witness in
    lexicographic sample order wins, which keeps reports reproducible.
    """
    g_names = tuple(g_names)
    h_names = tuple(h_names)
    if not (target_eps > 0.0) or any(not (e > 0.0) for e in eps_grid):
        raise ValueError("entourage widths must be positive")
    all_names = g_names + tuple(n for n in h_names if n not in g_names)
    coords, ambient = _coordinate_matrix(space, all_names)
    n_pts = coords.shape[0]
    g_idx = [all_names.index(n) for n in g_names]
    h_idx = [all_names.index(n) for n in h_names]
    target = Entourage(h_names, target_eps)

    # window heuristic: points far apart in grid order are usually far in
    # d_G as well, so a witness with d_G < eps sits within eps divided by
    # the smallest adjacent gap.  A full scan is used for small clouds.
    if n_pts <= 2048:
        max_window = n_pts - 1
    else:
        adjacent = np.abs(np.diff(coords[:, g_idx], axis=0)).max(axis=1)
        positive = adjacent[adjacent > 0.0]
        if positive.size == 0:
            max_window = n_pts - 1
        else:
            width = max(max(eps_grid), target_eps)
            max_window = int(min(n_pts - 1, math.ceil(width / float(positive.min())) + 1))

    rows = []
    for eps in eps_grid:
        best: tuple[int, int] | None = None
        for w in range(1, max_window + 1):
            a = coords[:-w]
            b = coords[w:]
            gaps = np.abs(a - b)
            d_g = gaps[:, g_idx].max(axis=1)
            d_h = gaps[:, h_idx].max(axis=1)
            hits = np.flatnonzero((d_g < eps) & (d_h >= target_eps))
            if hits.size:
                i = int(hits[0])
                if best is None or (i, i + w) < best:
                    best = (i, i + w)
        if best is None:
            rows.append(RefinementRow(target.describe(), eps, True, None, None, None, None))
        else:
            i, j = best
            d_g = max(abs(coords[i, k] - coords[j, k]) for k in g_idx)
            violated = next(
                n for n, k in zip(h_names, h_idx) if abs(coords[i, k] - coords[j, k]) >= target_eps
            )
            rows.append(
                RefinementRow(target.describe(), eps, False, tuple(ambient[i]), tuple(ambient[j]), d_g, violated)
            )
    return RefinementReport(g_names, h_names, n_pts, tuple(rows))


@dataclass(frozen=True)
class Probe:
    """An index sequence n -> parameter value, evaluated on the integer
    schedule start..stop (inclusive)."""

    name: str
    expr: Expr
    start: int = 1
    stop: int = 1000

    def __post_init__(self):
        extra = variables(self.expr) - {"n"}
        if extra:
            raise ValueError(f"probe {self.name} may only use n, found {sorted(extra)}")
        if self.start > self.stop:
            raise ValueError(f"probe {self.name} has an empty schedule")


@dataclass(frozen=True)
class CauchyVerdict:
    probe: str
    status: str  # "cauchy" | "escaping" | "undecided"
    oscillation: tuple[tuple[str, float], ...]
    limit: tuple[float, ...] | None

    def max_oscillation(self) -> float:
        return max(o for _, o in self.oscillation)


def probe_points(space: DiffSpace, probe: Probe, tail: int) -> list[tuple[int, float, tuple[float, ...]]]:
    """Evaluate the last `tail` schedule indices to (n, parameter, ambient).

    Only single-parameter carriers take probes; the index must land inside
    the parameter box, openness included.
    """
    carrier = space.carrier
    if len(carrier.params) != 1:
        raise ValueError("probes require a single-parameter carrier")
    if tail < 2:
        raise ValueError("tail must be at least 2")
    first = max(probe.start, probe.stop - tail + 1)
    box = carrier.box[0]
    out = []
    for n in range(first, probe.stop + 1):
        value = eval_expr(probe.expr, {"n": float(n)})
        if not box.contains(value):
            raise DomainError(f"probe {probe.name} leaves the box at n={n}: {value!r} not in {box}", probe.expr)
        out.append((n, value, carrier.chart_point((value,))))
    return out


def probe_cauchy(space: DiffSpace, probe: Probe, tol: float = 1e-6, tail: int = 50) -> CauchyVerdict:
    """Classify the probe over its tail window.

    cauchy: every generator coordinate stays within tol across the tail;
    the limit is the clamped coordinate-wise tail mean.  escaping: some
    coordinate's running oscillation grows strictly with every new tail
    point and ends beyond 10*tol (monotone flight, not slow convergence).
    Anything else is undecided.
    """
    if not (tol > 0.0):
        raise ValueError("tol must be positive")
    values: list[tuple[float, ...]] = []
    for _, _, apoint in probe_points(space, probe, tail):
        values.append(space.generator_values(apoint))
    names = space.family.names
    columns = list(zip(*values))
    oscillation = tuple((name, max(col) - min(col)) for name, col in zip(names, columns))
    if all(o <= tol for _, o in oscillation):
        limit = []
        for col in columns:
            mean = sum(col) / len(col)
            limit.append(min(max(mean, min(col)), max(col)))
        return CauchyVerdict(probe.name, "cauchy", oscillation, tuple(limit))
    for (_, osc), col in zip(oscillation, columns):
        if osc > 10.0 * tol and _grows_strictly(col):
            return CauchyVerdict(probe.name, "escaping", oscillation, None)
    return CauchyVerdict(probe.name, "undecided", oscillation, None)


def _grows_strictly(col: Sequence[float]) -> bool:
    """True when each new point extends the running range of the sequence."""
    lo = hi = col[0]
    for v in col[1:]:
        if not (v < lo or v > hi):
            return False
        lo = min(lo, v)
        hi = max(hi, v)
    return True
