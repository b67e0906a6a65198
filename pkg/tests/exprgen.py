"""Seeded random expression trees, tame enough for finite differences.

The distribution avoids log/sqrt/division (domain holes) and keeps exp
arguments gentle, so derivatives at the sampled points stay far from
overflow and the central-difference oracle stays trustworthy.
"""

import math
import random

from sikorski.expr import BinOp, Call, Const, Pow, Var

SAFE_CALLS = ("sin", "cos", "atan")


def random_expr(rng: random.Random, names, depth: int):
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.6:
            return Var(rng.choice(names))
        return Const(round(rng.uniform(-2.0, 2.0), 3))
    roll = rng.random()
    if roll < 0.45:
        op = rng.choice("+-*")
        return BinOp(op, random_expr(rng, names, depth - 1), random_expr(rng, names, depth - 1))
    if roll < 0.70:
        return Call(rng.choice(SAFE_CALLS), random_expr(rng, names, depth - 1))
    if roll < 0.85:
        return Pow(random_expr(rng, names, depth - 1), rng.choice((2, 3)))
    return Call("exp", BinOp("/", random_expr(rng, names, depth - 1), Const(8.0)))


def finite_small(*values: float) -> bool:
    return all(math.isfinite(v) and abs(v) < 1e6 for v in values)
