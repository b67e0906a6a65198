"""Tangent vectors as derivations along ambient directions.

A tangent vector at a sampled point is a coefficient vector over the
ambient coordinates; it acts on a witnessed function by differentiating
the composed expression symbolically and summing the directional parts.
Smooth maps push vectors forward through their ambient Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .expr import Expr, diff, eval_expr, substitute
from .space import (
    DiffSpace,
    SmoothFunction,
    SmoothMapWitness,
    compose_ambient,
    eval_smooth,
    product_witness,
)

__all__ = [
    "TangentVector",
    "apply",
    "differential",
    "leibniz_check",
    "tangent_map",
    "chain_rule_check",
]


@dataclass(frozen=True)
class TangentVector:
    point: tuple[float, ...]
    coeffs: tuple[float, ...]

    def __post_init__(self):
        if len(self.point) != len(self.coeffs):
            raise ValueError("coefficients must match the ambient dimension")


def _directional(expr: Expr, ambient: Sequence[str], v: TangentVector) -> float:
    env = dict(zip(ambient, v.point))
    total = 0.0
    for name, coeff in zip(ambient, v.coeffs):
        if coeff != 0.0:
            total += coeff * eval_expr(diff(expr, name), env)
    return total


def apply(space: DiffSpace, v: TangentVector, f: SmoothFunction) -> float:
    """The derivation v acting on f: directional derivative of the composed
    ambient expression at the vector's base point.  Symbolic partials, so
    kinks (abs at zero) surface as domain errors instead of noise."""
    if len(v.point) != len(space.carrier.ambient):
        raise ValueError("vector lives in a different ambient space")
    return _directional(compose_ambient(space, f), space.carrier.ambient, v)


def differential(space: DiffSpace, f: SmoothFunction, v: TangentVector) -> float:
    """df(v), which for a generator is the coordinate reading of the vector."""
    return apply(space, v, f)


def leibniz_check(space: DiffSpace, v: TangentVector, f: SmoothFunction, g: SmoothFunction) -> float:
    """|v(fg) - f(m) v(g) - g(m) v(f)|; zero up to float summation order."""
    fg = product_witness(f, g)
    lhs = apply(space, v, fg)
    fm = eval_smooth(space, f, v.point)
    gm = eval_smooth(space, g, v.point)
    rhs = fm * apply(space, v, g) + gm * apply(space, v, f)
    return abs(lhs - rhs)


def tangent_map(source: DiffSpace, witness: SmoothMapWitness, v: TangentVector) -> TangentVector:
    """Push the vector forward through the map's ambient Jacobian; the
    result is based at the image point by construction."""
    ambient = source.carrier.ambient
    if len(v.point) != len(ambient):
        raise ValueError("vector lives in a different ambient space")
    env = dict(zip(ambient, v.point))
    coeffs = []
    for comp in witness.components:
        row = 0.0
        for name, coeff in zip(ambient, v.coeffs):
            if coeff != 0.0:
                row += coeff * eval_expr(diff(comp, name), env)
        coeffs.append(row)
    return TangentVector(witness.image_point(source, v.point), tuple(coeffs))


def chain_rule_check(
    source: DiffSpace, witness: SmoothMapWitness, v: TangentVector, beta: SmoothFunction
) -> float:
    """|d beta(TF(v)) - d(beta o F)(v)| for a target function beta.

    The composite side substitutes the map components into beta's ambient
    expression, so both sides are symbolic derivatives of the same data.
    """
    pushed = tangent_map(source, witness, v)
    lhs = differential(witness.target, beta, pushed)
    beta_ambient = compose_ambient(witness.target, beta)
    composed = substitute(
        beta_ambient, dict(zip(witness.target.carrier.ambient, witness.components))
    )
    rhs = _directional(composed, source.carrier.ambient, v)
    return abs(lhs - rhs)
