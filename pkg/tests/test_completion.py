import math

import pytest

from sikorski.completion import (
    OrderVerdict,
    complete,
    completeness_probe_test,
    extend_function,
    iota,
    maximal_family,
    order_compare,
)
from sikorski.expr import Var, parse_expr
from sikorski.space import Carrier, DiffSpace, Generator, GeneratorFamily, Interval
from sikorski.uniform import Probe


def line_space(lo, hi, count, gens, lo_open=False, hi_open=False, inset=1e-3):
    carrier = Carrier(
        params=("t",),
        box=(Interval(lo, hi, lo_open, hi_open),),
        ambient=("x",),
        chart=(Var("t"),),
        counts=(count,),
        inset=inset,
    )
    family = GeneratorFamily(tuple(Generator(n, parse_expr(e, ["x"])) for n, e in gens))
    return DiffSpace(carrier, family)


SLAB = line_space(-1100.0, 1100.0, 2201, [("f", "x"), ("g", "atan(x)")])
PLUS = Probe("pplus", Var("n"), 1, 1050)
MINUS = Probe("pminus", parse_expr("-n", ["n"]), 1, 1050)


def test_arc_family_gains_two_horizon_points():
    cs = complete(SLAB.with_generators(["g"]), [PLUS, MINUS], tol=1e-3, tail=50)
    assert [a.probe for a in cs.adjoined] == ["pplus", "pminus"]
    assert cs.adjoined[0].coords == (1.5698209998564814,)
    assert cs.adjoined[1].coords == (-1.5698209998564814,)
    for a in cs.adjoined:
        assert abs(abs(a.coords[0]) - math.pi / 2) < 1e-3
        assert a.oscillation <= 1e-3
    assert cs.duplicates == ()


def test_coordinate_family_gains_nothing():
    cs = complete(SLAB.with_generators(["f"]), [PLUS, MINUS], tol=1e-3, tail=50)
    assert cs.adjoined == ()
    assert [v.status for v in cs.verdicts] == ["escaping", "escaping"]


def test_constant_probe_limit_is_deduplicated():
    space = line_space(0.0, 10.0, 11, [("f", "x")])
    const = Probe("sit", parse_expr("3 + n - n", ["n"]), 1, 100)
    cs = complete(space, [const], tol=1e-6, tail=20)
    assert cs.adjoined == ()
    assert cs.duplicates == ("sit",)


def test_two_probes_with_one_limit_adjoin_once():
    space = line_space(0.001, 2.0, 50, [("f", "x")], inset=0.0)
    low_a = Probe("a", parse_expr("1/n", ["n"]), 1, 1000)
    low_b = Probe("b", parse_expr("1/n", ["n"]), 1, 1000)
    cs = complete(space, [low_a, low_b], tol=1e-3, tail=50)
    assert [a.probe for a in cs.adjoined] == ["a"]
    assert cs.duplicates == ("b",)


def test_duplicate_probe_names_rejected():
    with pytest.raises(ValueError, match="duplicate probe names"):
        complete(SLAB, [PLUS, Probe("pplus", Var("n"))], tol=1e-3)


def test_extension_reads_off_coordinates():
    cs = complete(SLAB.with_generators(["g"]), [PLUS, MINUS], tol=1e-3, tail=50)
    ext = extend_function(cs, "g")
    assert ext.base_values == tuple(p.coords[0] for p in cs.base.points)
    assert ext.adjoined_values == (("pplus", 1.5698209998564814), ("pminus", -1.5698209998564814))
    with pytest.raises(KeyError, match="no generator named"):
        extend_function(cs, "h")


def test_iota_onto_itself_is_the_identity():
    cs = complete(SLAB.with_generators(["g"]), [PLUS, MINUS], tol=1e-3, tail=50)
    rep = iota(cs, cs)
    assert rep.max_residual() == 0.0
    assert rep.uncovered == ()
    adjoined_entries = [e for e in rep.entries if e.source.startswith("adjoined")]
    assert [(e.source, e.target) for e in adjoined_entries] == [
        ("adjoined:pplus", "adjoined:pplus"),
        ("adjoined:pminus", "adjoined:pminus"),
    ]


def test_iota_flags_points_outside_its_image():
    """Both probes escape once the raw coordinate joins the family, so the
    map from the larger completion misses the two arc-limit points."""
    cs_full = complete(SLAB, [PLUS, MINUS], tol=1e-3, tail=50)
    cs_sub = complete(SLAB.with_generators(["g"]), [PLUS, MINUS], tol=1e-3, tail=50)
    rep = iota(cs_full, cs_sub)
    assert rep.full_names == ("f", "g")
    assert rep.sub_names == ("g",)
    assert rep.max_residual() == 0.0
    assert rep.uncovered == ("pplus", "pminus")
    assert all(e.source.startswith("base") for e in rep.entries)


def test_iota_base_points_project_exactly():
    cs_full = complete(SLAB, [PLUS, MINUS], tol=1e-3, tail=50)
    cs_sub = complete(SLAB.with_generators(["g"]), [PLUS, MINUS], tol=1e-3, tail=50)
    rep = iota(cs_full, cs_sub)
    for entry, full_point in zip(rep.entries, cs_full.base.points):
        assert entry.source == entry.target
        assert entry.coords == (full_point.coords[1],)


def test_iota_requires_a_subfamily():
    cs_sub = complete(SLAB.with_generators(["g"]), [PLUS, MINUS], tol=1e-3, tail=50)
    cs_f = complete(SLAB.with_generators(["f"]), [PLUS, MINUS], tol=1e-3, tail=50)
    with pytest.raises(ValueError, match="not contained"):
        iota(cs_f, cs_sub)


def test_iota_composes_transitively():
    space = line_space(
        -1100.0,
        1100.0,
        2201,
        [("g", "atan(x)"), ("h", "atan(x)^2"), ("k", "atan(x)^3")],
    )
    probes = [PLUS, MINUS]
    cs_k = complete(space, probes, tol=1e-3, tail=50)
    cs_h = complete(space.with_generators(["g", "h"]), probes, tol=1e-3, tail=50)
    cs_g = complete(space.with_generators(["g"]), probes, tol=1e-3, tail=50)
    via_h = {e.source: e for e in iota(cs_h, cs_g).entries}
    direct = iota(cs_k, cs_g)
    step_one = iota(cs_k, cs_h)
    for first, straight in zip(step_one.entries, direct.entries):
        second = via_h[first.target]
        assert second.coords == straight.coords
        assert second.target == straight.target


def test_order_compare_is_inclusion():
    assert order_compare(["f"], ["f", "g"]) is OrderVerdict.PRECEDES
    assert order_compare(["f", "g"], ["g"]) is OrderVerdict.SUCCEEDS
    assert order_compare(["g", "f"], ["f", "g"]) is OrderVerdict.EQUIVALENT
    assert order_compare(["f"], ["g"]) is OrderVerdict.INCOMPARABLE


def test_open_end_defeats_the_completeness_hypothesis():
    space = line_space(0.0, 1.0, 101, [("f", "x")], lo_open=True, hi_open=True, inset=0.01)
    low = Probe("low", parse_expr("1/n", ["n"]), 1, 100000)
    report = completeness_probe_test(space, ["f"], ["f"], [low], tol=1e-3, tail=50)
    assert not report.passed
    row = report.rows[0]
    assert row.status == "cauchy"
    assert not row.realized
    assert row.distance > 1e-3


def test_closed_carrier_realizes_boundary_limits():
    space = line_space(0.0, 1.0, 101, [("f", "x"), ("g", "x^2")])
    low = Probe("low", parse_expr("1/n", ["n"]), 1, 100000)
    high = Probe("high", parse_expr("1 - 1/n", ["n"]), 1, 100000)
    report = completeness_probe_test(space, ["f"], ["f", "g"], [low, high], tol=1e-3, tail=50)
    assert report.passed
    assert all(row.realized for row in report.rows)


def test_escaping_probes_never_contradict_completeness():
    report = completeness_probe_test(SLAB, ["f"], ["f", "g"], [PLUS], tol=1e-3, tail=50)
    assert report.passed
    assert report.rows[0].status == "escaping"
    assert report.rows[0].distance is None


def test_completeness_requires_nested_families():
    with pytest.raises(ValueError, match="subfamily"):
        completeness_probe_test(SLAB, ["f", "g"], ["g"], [PLUS])


def test_maximal_family_lists_monomials_by_degree():
    fam = GeneratorFamily(
        (
            Generator("f", Var("x"), bound=1.0),
            Generator("g", parse_expr("x^2", ["x"]), bound=0.5),
        )
    )
    big = maximal_family(fam, 2)
    assert big.names == ("f", "g", "f^2", "f*g", "g^2")
    assert big.get("f*g").bound == 0.5
    assert big.get("g^2").bound == 0.25
    env = {"x": 1.5}
    from sikorski.expr import eval_expr

    assert eval_expr(big.get("f*g").expr, env) == 1.5 * 2.25
    assert eval_expr(big.get("f^2").expr, env) == 2.25


def test_maximal_family_without_bounds_stays_unbounded():
    fam = GeneratorFamily((Generator("f", Var("x")),))
    big = maximal_family(fam, 3)
    assert big.names == ("f", "f^2", "f^3")
    assert all(g.bound is None for g in big.generators)
    with pytest.raises(ValueError, match="degree"):
        maximal_family(fam, 0)
