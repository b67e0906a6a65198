"""Bounded generators and compact completions.

The pieces of the bounded-generator construction: a smooth cube splice
that is exactly one on the inner cube and exactly zero outside the outer
one, the localization of a witnessed function to bounded generators with
unit sup bound, sup-normalization of an individual generator, and the
compactification, which is completion over a family whose coordinates all
live in [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .expr import BinOp, Call, Const, Expr, Var, eval_expr, substitute
from .space import DiffSpace, Generator, GeneratorFamily, SmoothFunction, sample
from .uniform import Probe
from .completion import CompletedSpace, complete

__all__ = [
    "Cube",
    "BoundedGeneratorSet",
    "NormalizedGenerator",
    "bump",
    "boundize",
    "normalize",
    "compactify",
]

INNER_HALF_WIDTH = 1.0
OUTER_HALF_WIDTH = 2.0


@dataclass(frozen=True)
class Cube:
    center: tuple[float, ...]
    half_width: float

    def __post_init__(self):
        if not (self.half_width > 0.0):
            raise ValueError("degenerate cube: half-width must be positive")

    def contains(self, point: Sequence[float], strict: bool = True) -> bool:
        if len(point) != len(self.center):
            raise ValueError("dimension mismatch")
        for c, v in zip(self.center, point):
            gap = abs(v - c)
            if gap > self.half_width or (strict and gap == self.half_width):
                return False
        return True


def bump(inner: Cube, outer: Cube, var_names: Sequence[str]) -> Expr:
    """Product splice: exactly 1 on the inner cube, exactly 0 outside the
    outer one.  The construction is pinned to half-widths 1 and 2 around a
    shared center, which is what the splice primitive encodes."""
    if inner.center != outer.center:
        raise ValueError("cubes must share a center")
    if len(inner.center) != len(var_names):
        raise ValueError("one variable per cube axis is required")
    if inner.half_width != INNER_HALF_WIDTH or outer.half_width != OUTER_HALF_WIDTH:
        raise ValueError("the splice is defined for half-widths 1 (inner) and 2 (outer)")
    expr: Expr | None = None
    for name, c in zip(var_names, inner.center):
        arg: Expr = Var(name) if c == 0.0 else BinOp("-", Var(name), Const(c))
        factor = Call("bump1", arg)
        expr = factor if expr is None else BinOp("*", expr, factor)
    assert expr is not None
    return expr


@dataclass(frozen=True)
class BoundedGeneratorSet:
    """Output of the localization: bounded replacements for the generators
    of a witnessed function near one point.

    gamma_i = (alpha_i * eta(alpha)) / mu_i has sup at most 1, and
    omega1(gamma_1..gamma_n) agrees with the original function wherever
    the generators stay inside the inner cube.
    """

    gen_names: tuple[str, ...]
    point: tuple[float, ...]
    center: tuple[float, ...]  # generator values at the point
    mus: tuple[float, ...]
    eta: Expr  # in the ambient coordinates
    gammas: tuple[Expr, ...]  # in the ambient coordinates
    omega1: Expr
    omega1_vars: tuple[str, ...]
    max_abs_gamma: tuple[float, ...]
    local_residual: float
    local_sample_count: int

    def family(self) -> GeneratorFamily:
        gens = tuple(
            Generator(f"{name}.bounded", expr, 1.0) for name, expr in zip(self.gen_names, self.gammas)
        )
        return GeneratorFamily(gens)


def boundize(space: DiffSpace, f: SmoothFunction, point: Sequence[float]) -> BoundedGeneratorSet:
    """Replace the generators under a witnessed function with bounded ones
    that reproduce it near `point`.

    The scale mu_i = max(|alpha_i(point) + 2|, |alpha_i(point) - 2|) bounds
    alpha_i wherever the splice is nonzero, so each gamma_i lands in
    [-1, 1]; rescaling the witness by mu recovers f on the inner cube.
    Both facts are re-checked on the sampled carrier before returning.
    """
    point = tuple(point)
    alpha_exprs = [space.family.get(n).expr for n in f.gen_names]
    center = tuple(
        eval_expr(a, dict(zip(space.carrier.ambient, point))) for a in alpha_exprs
    )
    n = len(alpha_exprs)
    inner = Cube(center, INNER_HALF_WIDTH)
    outer = Cube(center, OUTER_HALF_WIDTH)
    fresh = tuple(f"u{i + 1}" for i in range(n))
    eta_fresh = bump(inner, outer, fresh)
    eta = substitute(eta_fresh, dict(zip(fresh, alpha_exprs)))
    mus = tuple(max(abs(c + OUTER_HALF_WIDTH), abs(c - OUTER_HALF_WIDTH)) for c in center)
    gammas = tuple(
        BinOp("/", BinOp("*", a, eta), Const(mu)) for a, mu in zip(alpha_exprs, mus)
    )
    omega1 = substitute(
        f.omega,
        {
            old: BinOp("*", Const(mu), Var(new))
            for old, new, mu in zip(f.omega_vars, fresh, mus)
        },
    )

    max_abs = [0.0] * n
    residual = 0.0
    local_count = 0
    for _, apoint in sample(space.carrier):
        env = dict(zip(space.carrier.ambient, apoint))
        gvals = [eval_expr(g, env) for g in gammas]
        for i, v in enumerate(gvals):
            if abs(v) > max_abs[i]:
                max_abs[i] = abs(v)
        alpha_vals = [eval_expr(a, env) for a in alpha_exprs]
        if inner.contains(alpha_vals):
            local_count += 1
            original = eval_expr(f.omega, dict(zip(f.omega_vars, alpha_vals)))
            rebuilt = eval_expr(omega1, dict(zip(fresh, gvals)))
            residual = max(residual, abs(original - rebuilt))
    for i, m in enumerate(max_abs):
        if m > 1.0:
            raise ValueError(f"bounded generator {f.gen_names[i]} exceeds 1: {m!r}")
    if residual > 1e-9:
        raise ValueError(f"localization residual {residual!r} exceeds 1e-9")
    return BoundedGeneratorSet(
        tuple(f.gen_names),
        point,
        center,
        mus,
        eta,
        gammas,
        omega1,
        fresh,
        tuple(max_abs),
        residual,
        local_count,
    )


@dataclass(frozen=True)
class NormalizedGenerator:
    name: str
    expr: Expr  # original expression divided by the sampled sup
    sup: float
    argmax_params: tuple[float, ...]
    argmax_index: int


def _axis_line(values: list[float], counts: Sequence[int], axis: int, at: Sequence[int]) -> list[float]:
    """|g| along one grid axis through a fixed multi-index."""
    strides = [1] * len(counts)
    for k in range(len(counts) - 2, -1, -1):
        strides[k] = strides[k + 1] * counts[k + 1]
    base = sum(strides[k] * at[k] for k in range(len(counts)) if k != axis)
    return [values[base + strides[axis] * i] for i in range(counts[axis])]


def _monotone_divergent(line: Sequence[float], toward_end: bool) -> bool:
    """Divergence heuristic: |g| strictly grows into the boundary and the
    growth itself never slows.  A bounded generator flattens toward its
    sup, so its increments shrink; a genuinely unbounded one does not."""
    window = min(8, len(line))
    if window < 3:
        return False
    tail = list(line[-window:]) if toward_end else list(line[:window][::-1])
    increments = [b - a for a, b in zip(tail, tail[1:])]
    if any(inc <= 0.0 for inc in increments):
        return False
    return all(b >= a * (1.0 - 1e-9) for a, b in zip(increments, increments[1:]))


def normalize(space: DiffSpace, name: str) -> NormalizedGenerator:
    """Scale a generator by its sampled sup so its range fits in [-1, 1].

    Rejected when the sampled sup is zero (nothing to scale) or when |g|
    diverges monotonically into an open boundary of the grid, which is
    the sampled shadow of an unbounded generator.
    """
    gen = space.family.get(name)
    values = []
    params = []
    for pvals, apoint in sample(space.carrier):
        env = dict(zip(space.carrier.ambient, apoint))
        values.append(abs(eval_expr(gen.expr, env)))
        params.append(pvals)
    sup = max(values)
    index = values.index(sup)
    if sup == 0.0:
        raise ValueError(f"generator {name} is identically zero on the samples")
    counts = [len(axis) for axis in space.carrier.axis_samples()]
    # decode the row-major argmax index into per-axis positions
    multi = [0] * len(counts)
    rem = index
    for k in range(len(counts) - 1, -1, -1):
        multi[k] = rem % counts[k]
        rem //= counts[k]
    # only an open end can hide an unattained sup; a closed end's boundary
    # sample belongs to the carrier, so the max found there is genuine
    for axis, interval in enumerate(space.carrier.box):
        line = _axis_line(values, counts, axis, multi)
        if (
            interval.hi_open
            and multi[axis] == counts[axis] - 1
            and _monotone_divergent(line, toward_end=True)
        ):
            raise ValueError(f"generator {name} diverges toward the upper end of axis {axis}")
        if (
            interval.lo_open
            and multi[axis] == 0
            and _monotone_divergent(line, toward_end=False)
        ):
            raise ValueError(f"generator {name} diverges toward the lower end of axis {axis}")
    scaled = BinOp("/", gen.expr, Const(sup))
    return NormalizedGenerator(name, scaled, sup, params[index], index)


def compactify(space: DiffSpace, probes: Sequence[Probe], tol: float = 1e-6, tail: int = 50) -> CompletedSpace:
    """Completion over a family of unit-bounded generators.  Every
    coordinate of the result, adjoined points included, lies in [-1, 1]."""
    for gen in space.family.generators:
        if gen.bound is None:
            raise ValueError(f"generator {gen.name} carries no bound flag")
        if gen.bound > 1.0:
            raise ValueError(f"generator {gen.name} has bound {gen.bound!r} > 1")
    for _, apoint in sample(space.carrier):
        for name, value in zip(space.family.names, space.generator_values(apoint)):
            if abs(value) > 1.0:
                raise ValueError(f"generator {name} exceeds its unit bound at {apoint}: {value!r}")
    cs = complete(space, probes, tol=tol, tail=tail)
    for adj in cs.adjoined:
        for name, value in zip(cs.names, adj.coords):
            if abs(value) > 1.0:
                raise ValueError(f"adjoined coordinate {name} of {adj.probe} leaves [-1, 1]: {value!r}")
    return cs
