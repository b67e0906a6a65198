"""Probe-based completion of an embedded space.

A probe whose generator coordinates settle within tolerance contributes
its limit tuple as a new point; every generator extends to the new points
by reading off its coordinate.  Completions over nested families are
connected by coordinate projection, which is the desk-scale form of the
canonical map between completions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .expr import BinOp, Expr, Pow
from .space import DiffSpace, EmbeddedCloud, Generator, GeneratorFamily, embed
from .uniform import CauchyVerdict, Probe, probe_cauchy

__all__ = [
    "AdjoinedPoint",
    "CompletedSpace",
    "ExtensionTable",
    "IotaEntry",
    "IotaReport",
    "OrderVerdict",
    "CompletenessRow",
    "CompletenessReport",
    "DEDUP_TOL",
    "complete",
    "extend_function",
    "iota",
    "order_compare",
    "completeness_probe_test",
    "maximal_family",
]

# two limit tuples (or a limit and a sample) closer than this in every
# coordinate are the same completion point
DEDUP_TOL = 1e-9


@dataclass(frozen=True)
class AdjoinedPoint:
    probe: str
    coords: tuple[float, ...]
    oscillation: float


@dataclass(frozen=True)
class CompletedSpace:
    space: DiffSpace
    base: EmbeddedCloud
    adjoined: tuple[AdjoinedPoint, ...]
    verdicts: tuple[CauchyVerdict, ...]
    duplicates: tuple[str, ...]  # probes whose limit was already present

    @property
    def names(self) -> tuple[str, ...]:
        return self.base.names

    def all_coords(self) -> list[tuple[float, ...]]:
        return [p.coords for p in self.base.points] + [a.coords for a in self.adjoined]


def _within(a: Sequence[float], b: Sequence[float], tol: float) -> bool:
    return all(abs(x - y) <= tol for x, y in zip(a, b))


def complete(space: DiffSpace, probes: Sequence[Probe], tol: float = 1e-6, tail: int = 50) -> CompletedSpace:
    """Adjoin the limit of every Cauchy probe, deduplicating against the
    embedded samples and earlier probes in declaration order."""
    names = [p.name for p in probes]
    if len(set(names)) != len(names):
        raise ValueError("duplicate probe names")
    base = embed(space)
    verdicts = []
    adjoined: list[AdjoinedPoint] = []
    duplicates: list[str] = []
    for probe in probes:
        verdict = probe_cauchy(space, probe, tol=tol, tail=tail)
        verdicts.append(verdict)
        if verdict.status != "cauchy":
            continue
        assert verdict.limit is not None
        known = any(_within(verdict.limit, p.coords, DEDUP_TOL) for p in base.points) or any(
            _within(verdict.limit, a.coords, DEDUP_TOL) for a in adjoined
        )
        if known:
            duplicates.append(probe.name)
        else:
            adjoined.append(AdjoinedPoint(probe.name, verdict.limit, verdict.max_oscillation()))
    return CompletedSpace(space, base, tuple(adjoined), tuple(verdicts), tuple(duplicates))


@dataclass(frozen=True)
class ExtensionTable:
    """Values of the continuous extension of one generator: its coordinate
    at the base samples and at every adjoined point."""

    generator: str
    base_values: tuple[float, ...]
    adjoined_values: tuple[tuple[str, float], ...]


def extend_function(cs: CompletedSpace, name: str) -> ExtensionTable:
    try:
        column = cs.names.index(name)
    except ValueError:
        raise KeyError(f"no generator named {name!r} in the completion") from None
    return ExtensionTable(
        name,
        tuple(p.coords[column] for p in cs.base.points),
        tuple((a.probe, a.coords[column]) for a in cs.adjoined),
    )


@dataclass(frozen=True)
class IotaEntry:
    source: str  # "base:<index>" or "adjoined:<probe>"
    target: str
    coords: tuple[float, ...]  # projected coordinates in the smaller family


@dataclass(frozen=True)
class IotaReport:
    sub_names: tuple[str, ...]
    full_names: tuple[str, ...]
    entries: tuple[IotaEntry, ...]
    residuals: tuple[tuple[str, float], ...]  # per sub-family generator
    uncovered: tuple[str, ...]  # sub-completion points outside the image

    def max_residual(self) -> float:
        return max((r for _, r in self.residuals), default=0.0)


def iota(cs_full: CompletedSpace, cs_sub: CompletedSpace) -> IotaReport:
    """The canonical map from the completion over the larger family to the
    completion over a subfamily: identity on base points, coordinate
    projection on adjoined points.

    The report records where each point lands, the worst disagreement
    between the projected extension values and the subfamily's own
    extension, and which subfamily completion points the map misses.
    """
    sub_names = cs_sub.names
    full_names = cs_full.names
    missing = set(sub_names) - set(full_names)
    if missing:
        raise ValueError(f"subfamily is not contained in the full family: {sorted(missing)}")
    if len(cs_full.base.points) != len(cs_sub.base.points):
        raise ValueError("completions were built over different sample clouds")
    projection = [full_names.index(n) for n in sub_names]

    entries: list[IotaEntry] = []
    residual = {n: 0.0 for n in sub_names}
    covered: set[str] = set()
    for i, (p_full, p_sub) in enumerate(zip(cs_full.base.points, cs_sub.base.points)):
        if p_full.ambient != p_sub.ambient:
            raise ValueError("completions were built over different sample clouds")
        projected = tuple(p_full.coords[k] for k in projection)
        for n, a, b in zip(sub_names, projected, p_sub.coords):
            residual[n] = max(residual[n], abs(a - b))
        entries.append(IotaEntry(f"base:{i}", f"base:{i}", projected))
    sub_by_probe = {a.probe: a for a in cs_sub.adjoined}
    for adj in cs_full.adjoined:
        projected = tuple(adj.coords[k] for k in projection)
        target = None
        if adj.probe in sub_by_probe:
            target = sub_by_probe[adj.probe]
            target_label = f"adjoined:{target.probe}"
            target_coords = target.coords
            covered.add(target.probe)
        else:
            # the probe's limit was realized in the subfamily completion by
            # an embedded sample (or an earlier probe); find it
            candidates = [
                (f"base:{i}", p.coords) for i, p in enumerate(cs_sub.base.points)
            ] + [(f"adjoined:{a.probe}", a.coords) for a in cs_sub.adjoined]
            match = next(
                ((label, coords) for label, coords in candidates if _within(projected, coords, DEDUP_TOL)),
                None,
            )
            if match is None:
                raise ValueError(
                    f"no target for probe {adj.probe}: run both completions with the same probes"
                )
            target_label, target_coords = match
            if target_label.startswith("adjoined:"):
                covered.add(target_label.split(":", 1)[1])
        for n, a, b in zip(sub_names, projected, target_coords):
            residual[n] = max(residual[n], abs(a - b))
        entries.append(IotaEntry(f"adjoined:{adj.probe}", target_label, projected))
    uncovered = tuple(a.probe for a in cs_sub.adjoined if a.probe not in covered)
    residuals = tuple((n, residual[n]) for n in sub_names)
    return IotaReport(sub_names, full_names, tuple(entries), residuals, uncovered)


class OrderVerdict(Enum):
    PRECEDES = "precedes"
    SUCCEEDS = "succeeds"
    EQUIVALENT = "equivalent"
    INCOMPARABLE = "incomparable"


def order_compare(g_names: Sequence[str], h_names: Sequence[str]) -> OrderVerdict:
    """Completion order by family inclusion: the completion over G sits
    below the completion over H exactly when G is a subfamily of H."""
    g = set(g_names)
    h = set(h_names)
    if g == h:
        return OrderVerdict.EQUIVALENT
    if g <= h:
        return OrderVerdict.PRECEDES
    if h <= g:
        return OrderVerdict.SUCCEEDS
    return OrderVerdict.INCOMPARABLE


@dataclass(frozen=True)
class CompletenessRow:
    probe: str
    status: str
    distance: float | None
    realized: bool


@dataclass(frozen=True)
class CompletenessReport:
    sub_names: tuple[str, ...]
    full_names: tuple[str, ...]
    rows: tuple[CompletenessRow, ...]
    passed: bool


def completeness_probe_test(
    space: DiffSpace,
    g_names: Sequence[str],
    h_names: Sequence[str],
    probes: Sequence[Probe],
    tol: float = 1e-6,
    tail: int = 50,
) -> CompletenessReport:
    """Probe the hypothesis that the space is already complete over the
    larger family: every H-Cauchy probe must land within tol of an
    embedded sample.  A Cauchy probe with a genuinely new limit is a
    counterexample and fails the report."""
    g = set(g_names)
    h = set(h_names)
    if not g <= h:
        raise ValueError("the first family must be a subfamily of the second")
    space_h = space.with_generators(h_names)
    cloud = embed(space_h)
    rows = []
    passed = True
    for probe in probes:
        verdict = probe_cauchy(space_h, probe, tol=tol, tail=tail)
        if verdict.status != "cauchy":
            rows.append(CompletenessRow(probe.name, verdict.status, None, True))
            continue
        assert verdict.limit is not None
        distance = min(
            max(abs(a - b) for a, b in zip(verdict.limit, p.coords)) for p in cloud.points
        )
        realized = distance <= tol
        passed = passed and realized
        rows.append(CompletenessRow(probe.name, verdict.status, distance, realized))
    return CompletenessReport(tuple(g_names), tuple(h_names), tuple(rows), passed)


def maximal_family(family: GeneratorFamily, degree: int) -> GeneratorFamily:
    """All monomials in the base generators up to the given total degree,
    as a stand-in for the full structure: the richest family this package
    can write down from a finite basis."""
    if degree < 1:
        raise ValueError("degree must be at least 1")
    base = family.generators
    exponents = []
    for combo in itertools.product(range(degree + 1), repeat=len(base)):
        total = sum(combo)
        if 1 <= total <= degree:
            exponents.append(combo)
    exponents.sort(key=lambda c: (sum(c), tuple(-e for e in c)))
    out = []
    for combo in exponents:
        name_parts = []
        expr: Expr | None = None
        bound: float | None = 1.0
        for gen, k in zip(base, combo):
            if k == 0:
                continue
            name_parts.append(gen.name if k == 1 else f"{gen.name}^{k}")
            factor = gen.expr if k == 1 else Pow(gen.expr, k)
            expr = factor if expr is None else BinOp("*", expr, factor)
            if gen.bound is None or bound is None:
                bound = None
            else:
                bound = bound * gen.bound**k
        assert expr is not None
        out.append(Generator("*".join(name_parts), expr, bound))
    return GeneratorFamily(tuple(out))
