"""Sampled differential spaces and their generator embeddings.

A space is a rectangular parameter box, a chart into ambient coordinates,
and a finite ordered family of generator functions over those ambient
coordinates.  Embedding a space evaluates every generator at every grid
sample, giving the point cloud that the uniformity, completion, and
compactification machinery works on.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .expr import BinOp, DomainError, Expr, Var, diff, eval_expr, substitute, variables

__all__ = [
    "Interval",
    "Carrier",
    "Generator",
    "GeneratorFamily",
    "DiffSpace",
    "CloudPoint",
    "EmbeddedCloud",
    "SmoothFunction",
    "SmoothMapWitness",
    "SmoothMapReport",
    "sample",
    "embed",
    "eval_smooth",
    "compose_ambient",
    "separates_points",
    "check_smooth_map",
    "restrict",
    "product_witness",
    "chart_jacobian",
]


@dataclass(frozen=True)
class Interval:
    """One axis of a parameter box; each end is open or closed."""

    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("interval endpoints must be finite")
        if self.lo > self.hi or (self.lo == self.hi and (self.lo_open or self.hi_open)):
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def contains(self, v: float) -> bool:
        if self.lo_open:
            if v <= self.lo:
                return False
        elif v < self.lo:
            return False
        if self.hi_open:
            if v >= self.hi:
                return False
        elif v > self.hi:
            return False
        return True

    def contains_interval(self, other: "Interval") -> bool:
        if other.lo < self.lo or (other.lo == self.lo and self.lo_open and not other.lo_open):
            return False
        if other.hi > self.hi or (other.hi == self.hi and self.hi_open and not other.hi_open):
            return False
        return True

    def __str__(self) -> str:
        left = "(" if self.lo_open else "["
        right = ")" if self.hi_open else "]"
        return f"{left}{self.lo!r}, {self.hi!r}{right}"


def _linspace(lo: float, hi: float, count: int) -> tuple[float, ...]:
    if count == 1:
        return (lo,)
    step = (hi - lo) / (count - 1)
    values = [lo + i * step for i in range(count)]
    values[-1] = hi
    return tuple(values)


@dataclass(frozen=True)
class Carrier:
    """Parameter box, sampling plan, and chart into ambient coordinates."""

    params: tuple[str, ...]
    box: tuple[Interval, ...]
    ambient: tuple[str, ...]
    chart: tuple[Expr, ...]
    counts: tuple[int, ...]
    inset: float = 1e-3
    # set by restrict(): explicit per-axis sample values that replace the
    # uniform grid, so restriction selects from the parent grid exactly
    axis_values: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        if len(set(self.params)) != len(self.params):
            raise ValueError("duplicate parameter names")
        if len(set(self.ambient)) != len(self.ambient):
            raise ValueError("duplicate ambient names")
        if len(self.box) != len(self.params) or len(self.counts) != len(self.params):
            raise ValueError("box and counts must match the parameter list")
        if len(self.chart) != len(self.ambient):
            raise ValueError("chart must provide one expression per ambient coordinate")
        if any(c < 1 for c in self.counts):
            raise ValueError("sample counts must be positive")
        if self.inset < 0:
            raise ValueError("inset must be non-negative")
        scope = set(self.params)
        for name, comp in zip(self.ambient, self.chart):
            extra = variables(comp) - scope
            if extra:
                raise ValueError(f"chart component {name} uses unknown names {sorted(extra)}")

    def axis_samples(self) -> tuple[tuple[float, ...], ...]:
        """Per-axis sample values; open ends are pulled in by the inset."""
        if self.axis_values is not None:
            return self.axis_values
        axes = []
        for iv, count in zip(self.box, self.counts):
            lo = iv.lo + self.inset if iv.lo_open else iv.lo
            hi = iv.hi - self.inset if iv.hi_open else iv.hi
            if lo > hi:
                raise ValueError(f"inset {self.inset} empties axis {iv}")
            axes.append(_linspace(lo, hi, count))
        return tuple(axes)

    def chart_point(self, values: Sequence[float]) -> tuple[float, ...]:
        env = dict(zip(self.params, values))
        out = []
        for name, comp in zip(self.ambient, self.chart):
            try:
                out.append(eval_expr(comp, env))
            except DomainError as err:
                raise DomainError(f"chart component {name} at {tuple(values)}: {err}", err.node) from err
        return tuple(out)


@dataclass(frozen=True)
class Generator:
    """A named generator function over ambient coordinates.

    `bound` is an optional declared sup bound; compactification requires
    one of at most 1 and re-checks it on samples.
    """

    name: str
    expr: Expr
    bound: float | None = None


@dataclass(frozen=True)
class GeneratorFamily:
    generators: tuple[Generator, ...]

    def __post_init__(self):
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise ValueError("duplicate generator names")
        if not self.generators:
            raise ValueError("a generator family must not be empty")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.generators)

    def get(self, name: str) -> Generator:
        for g in self.generators:
            if g.name == name:
                return g
        raise KeyError(f"no generator named {name!r}")

    def subfamily(self, names: Iterable[str]) -> "GeneratorFamily":
        return GeneratorFamily(tuple(self.get(n) for n in names))


@dataclass(frozen=True)
class DiffSpace:
    carrier: Carrier
    family: GeneratorFamily

    def __post_init__(self):
        scope = set(self.carrier.ambient)
        for g in self.family.generators:
            extra = variables(g.expr) - scope
            if extra:
                raise ValueError(f"generator {g.name} uses unknown names {sorted(extra)}")

    def with_generators(self, names: Iterable[str]) -> "DiffSpace":
        return dataclasses.replace(self, family=self.family.subfamily(names))

    def generator_values(self, ambient_point: Sequence[float]) -> tuple[float, ...]:
        env = dict(zip(self.carrier.ambient, ambient_point))
        out = []
        for g in self.family.generators:
            try:
                out.append(eval_expr(g.expr, env))
            except DomainError as err:
                raise DomainError(f"generator {g.name} at {tuple(ambient_point)}: {err}", err.node) from err
        return tuple(out)


@dataclass(frozen=True)
class CloudPoint:
    params: tuple[float, ...]
    ambient: tuple[float, ...]
    coords: tuple[float, ...]


@dataclass(frozen=True)
class EmbeddedCloud:
    """The generator embedding of the sampled carrier: one coordinate per
    generator, in family order."""

    names: tuple[str, ...]
    points: tuple[CloudPoint, ...]


def sample(carrier: Carrier) -> list[tuple[tuple[float, ...], tuple[float, ...]]]:
    """Grid samples as (parameter values, ambient point), row-major in
    parameter order (last axis fastest)."""
    axes = carrier.axis_samples()
    out = []
    indices = [0] * len(axes)
    total = 1
    for axis in axes:
        total *= len(axis)
    for _ in range(total):
        pvals = tuple(axes[k][indices[k]] for k in range(len(axes)))
        out.append((pvals, carrier.chart_point(pvals)))
        for k in range(len(axes) - 1, -1, -1):
            indices[k] += 1
            if indices[k] < len(axes[k]):
                break
            indices[k] = 0
    return out


def embed(space: DiffSpace) -> EmbeddedCloud:
    points = []
    for pvals, apoint in sample(space.carrier):
        points.append(CloudPoint(pvals, apoint, space.generator_values(apoint)))
    return EmbeddedCloud(space.family.names, tuple(points))


@dataclass(frozen=True)
class SmoothFunction:
    """A structure member presented by witness: omega composed with named
    generators.  `omega` is an expression in `omega_vars`, which pair up
    positionally with `gen_names`."""

    omega: Expr
    omega_vars: tuple[str, ...]
    gen_names: tuple[str, ...]

    def __post_init__(self):
        if len(self.omega_vars) != len(self.gen_names):
            raise ValueError("omega variables and generator names must pair up")
        extra = variables(self.omega) - set(self.omega_vars)
        if extra:
            raise ValueError(f"omega uses undeclared variables {sorted(extra)}")

    @classmethod
    def of_generator(cls, name: str) -> "SmoothFunction":
        return cls(Var("u1"), ("u1",), (name,))


def compose_ambient(space: DiffSpace, f: SmoothFunction) -> Expr:
    """omega with each placeholder replaced by its generator's expression,
    yielding a single tree over ambient coordinates."""
    mapping = {}
    for var, gen_name in zip(f.omega_vars, f.gen_names):
        mapping[var] = space.family.get(gen_name).expr
    return substitute(f.omega, mapping)


def eval_smooth(space: DiffSpace, f: SmoothFunction, ambient_point: Sequence[float]) -> float:
    gen_env = {}
    env = dict(zip(space.carrier.ambient, ambient_point))
    for var, gen_name in zip(f.omega_vars, f.gen_names):
        gen_env[var] = eval_expr(space.family.get(gen_name).expr, env)
    return eval_expr(f.omega, gen_env)


def product_witness(f: SmoothFunction, g: SmoothFunction) -> SmoothFunction:
    """Pointwise product as a witness over the concatenated generator lists."""
    n = len(f.omega_vars)
    fvars = tuple(f"u{i + 1}" for i in range(n))
    gvars = tuple(f"u{n + j + 1}" for j in range(len(g.omega_vars)))
    left = substitute(f.omega, {old: Var(new) for old, new in zip(f.omega_vars, fvars)})
    right = substitute(g.omega, {old: Var(new) for old, new in zip(g.omega_vars, gvars)})
    return SmoothFunction(BinOp("*", left, right), fvars + gvars, f.gen_names + g.gen_names)


def separates_points(space: DiffSpace) -> tuple[CloudPoint, CloudPoint] | None:
    """None when the embedding is injective on the sample grid; otherwise a
    witness pair whose coordinate tuples agree after rounding to 1e-12."""
    seen: dict[tuple[float, ...], CloudPoint] = {}
    for point in embed(space).points:
        key = tuple(round(c, 12) for c in point.coords)
        if key in seen:
            return (seen[key], point)
        seen[key] = point
    return None


@dataclass(frozen=True)
class SmoothMapWitness:
    """A candidate smooth map into `target`, with ambient component
    expressions (over the source ambient names) and, for every target
    generator, a witness presentation of its pullback."""

    target: DiffSpace
    components: tuple[Expr, ...]
    witnesses: Mapping[str, SmoothFunction]

    def __post_init__(self):
        if len(self.components) != len(self.target.carrier.ambient):
            raise ValueError("one component per target ambient coordinate is required")
        missing = set(self.target.family.names) - set(self.witnesses)
        if missing:
            raise ValueError(f"missing pullback witnesses for {sorted(missing)}")

    def image_point(self, source: DiffSpace, ambient_point: Sequence[float]) -> tuple[float, ...]:
        env = dict(zip(source.carrier.ambient, ambient_point))
        return tuple(eval_expr(comp, env) for comp in self.components)


@dataclass(frozen=True)
class SmoothMapReport:
    tol: float
    residuals: tuple[tuple[str, float], ...]
    worst_point: tuple[float, ...] | None
    smooth: bool

    def max_residual(self) -> float:
        return max((r for _, r in self.residuals), default=0.0)


def check_smooth_map(source: DiffSpace, witness: SmoothMapWitness, tol: float = 1e-6) -> SmoothMapReport:
    """Compare each pullback witness against the composite generator-after-map
    on every sampled source point."""
    worst = -1.0
    worst_point = None
    residuals = {name: 0.0 for name in witness.target.family.names}
    for _, apoint in sample(source.carrier):
        image = witness.image_point(source, apoint)
        target_env = dict(zip(witness.target.carrier.ambient, image))
        for gen in witness.target.family.generators:
            lhs = eval_smooth(source, witness.witnesses[gen.name], apoint)
            rhs = eval_expr(gen.expr, target_env)
            r = abs(lhs - rhs)
            if r > residuals[gen.name]:
                residuals[gen.name] = r
            if r > worst:
                worst = r
                worst_point = apoint
    rows = tuple((name, residuals[name]) for name in witness.target.family.names)
    return SmoothMapReport(tol, rows, worst_point, all(r <= tol for _, r in rows))


def restrict(space: DiffSpace, sub_box: Sequence[Interval]) -> DiffSpace:
    """Restrict to a sub-box.  Samples of the result are exactly the parent
    samples that fall inside, so restriction and embedding commute."""
    carrier = space.carrier
    if len(sub_box) != len(carrier.box):
        raise ValueError("sub-box arity does not match the carrier")
    for iv, sub in zip(carrier.box, sub_box):
        if not iv.contains_interval(sub):
            raise ValueError(f"sub-box {sub} is not contained in {iv}")
    new_axes = []
    for axis, sub in zip(carrier.axis_samples(), sub_box):
        kept = tuple(v for v in axis if sub.contains(v))
        if not kept:
            raise ValueError(f"restriction to {sub} keeps no samples")
        new_axes.append(kept)
    new_carrier = dataclasses.replace(
        carrier,
        box=tuple(sub_box),
        counts=tuple(len(a) for a in new_axes),
        axis_values=tuple(new_axes),
    )
    return dataclasses.replace(space, carrier=new_carrier)


def chart_jacobian(carrier: Carrier, param_values: Sequence[float]) -> tuple[tuple[float, ...], ...]:
    """Rows are ambient coordinates, columns parameters: the pushforward of
    the coordinate directions of the parameter box."""
    env = dict(zip(carrier.params, param_values))
    rows = []
    for comp in carrier.chart:
        rows.append(tuple(eval_expr(diff(comp, p), env) for p in carrier.params))
    return tuple(rows)
