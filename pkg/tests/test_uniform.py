import math

import pytest
from hypothesis import given, strategies as st

from sikorski.expr import DomainError, Var, parse_expr
from sikorski.space import Carrier, DiffSpace, Generator, GeneratorFamily, Interval
from sikorski.uniform import (
    CauchyVerdict,
    Entourage,
    Probe,
    compare_uniformities,
    entourage_contains,
    probe_cauchy,
    probe_points,
    pseudometric,
)


def line_space(lo, hi, count, gens, **kwargs):
    carrier = Carrier(
        params=("t",),
        box=(Interval(lo, hi, kwargs.get("lo_open", False), kwargs.get("hi_open", False)),),
        ambient=("x",),
        chart=(Var("t"),),
        counts=(count,),
        inset=kwargs.get("inset", 1e-3),
    )
    family = GeneratorFamily(tuple(Generator(n, parse_expr(e, ["x"])) for n, e in gens))
    return DiffSpace(carrier, family)


PARABOLA = line_space(0.0, 20.0, 401, [("f", "x"), ("g", "x^2")])
SLAB = line_space(-1100.0, 1100.0, 221, [("f", "x"), ("a", "atan(x)")])


def test_entourage_validation():
    with pytest.raises(ValueError, match="positive"):
        Entourage(("f",), 0.0)
    with pytest.raises(ValueError, match="at least one"):
        Entourage((), 1.0)


def test_entourage_membership_is_strict():
    v = Entourage(("f",), 1.0)
    assert entourage_contains(PARABOLA, v, (0.0,), (0.7,))
    assert not entourage_contains(PARABOLA, v, (0.0,), (1.5,))
    assert not entourage_contains(PARABOLA, v, (0.0,), (1.0,))


def test_every_listed_generator_must_agree():
    v = Entourage(("f", "g"), 1.0)
    assert not entourage_contains(PARABOLA, v, (10.0,), (10.05,))
    assert pseudometric(PARABOLA, ["f", "g"], (10.0,), (10.05,)) == pytest.approx(1.0025, abs=1e-9)


def test_entourage_is_symmetric_and_reflexive():
    v = Entourage(("f", "g"), 0.5)
    for x, y in [((0.0,), (0.2,)), ((3.0,), (3.4,)), ((1.0,), (1.0,))]:
        assert entourage_contains(PARABOLA, v, x, y) == entourage_contains(PARABOLA, v, y, x)
        assert entourage_contains(PARABOLA, v, x, x)


def test_pseudometric_examples():
    assert pseudometric(PARABOLA, ["f"], (1.0,), (2.0,)) == 1.0
    assert pseudometric(PARABOLA, ["f", "g"], (1.0,), (2.0,)) == 3.0
    assert pseudometric(PARABOLA, ["f", "g"], (1.3,), (1.3,)) == 0.0


@given(
    st.floats(-5.0, 5.0, allow_nan=False),
    st.floats(-5.0, 5.0, allow_nan=False),
    st.floats(-5.0, 5.0, allow_nan=False),
)
def test_pseudometric_symmetry_and_triangle(a, b, c):
    x, y, z = (a,), (b,), (c,)
    names = ["f", "g"]
    assert pseudometric(PARABOLA, names, x, y) == pseudometric(PARABOLA, names, y, x)
    assert pseudometric(PARABOLA, names, x, z) <= (
        pseudometric(PARABOLA, names, x, y) + pseudometric(PARABOLA, names, y, z) + 1e-12
    )


def test_coordinate_family_does_not_refine_the_square():
    """A small coordinate gap cannot force a small gap of the squares far
    from the origin; the scan surfaces a concrete sampled pair."""
    report = compare_uniformities(PARABOLA, ["f"], ["g"], [0.1], target_eps=1.0)
    assert report.sample_count == 401
    row = report.rows[0]
    assert row.target == "V(g;1.0)"
    assert not row.refines
    assert row.violated == "g"
    x, y = row.witness_x[0], row.witness_y[0]
    assert abs(x - y) < 0.1
    assert abs(x * x - y * y) >= 1.0
    assert x == pytest.approx(5.05, abs=1e-9)
    assert y == pytest.approx(5.15, abs=1e-9)
    assert row.d_g == pytest.approx(0.1, abs=1e-12)


def test_witnesses_exist_for_every_scale():
    report = compare_uniformities(PARABOLA, ["f"], ["g"], [1.0, 0.1], target_eps=1.0)
    assert not report.all_refine()
    for row in report.rows:
        assert not row.refines
        x, y = row.witness_x[0], row.witness_y[0]
        assert abs(x - y) < row.candidate_eps
        assert abs(x * x - y * y) >= 1.0


def test_finer_grids_find_witnesses_at_smaller_widths():
    """The 0.05-step grid has no pair closer than 0.01, so the narrow
    candidate needs a denser sample before its witness appears."""
    coarse = compare_uniformities(PARABOLA, ["f"], ["g"], [0.01], target_eps=1.0)
    assert coarse.rows[0].refines
    fine = compare_uniformities(
        line_space(0.0, 110.0, 22001, [("f", "x"), ("g", "x^2")]),
        ["f"],
        ["g"],
        [0.01],
        target_eps=1.0,
    )
    row = fine.rows[0]
    assert not row.refines
    x, y = row.witness_x[0], row.witness_y[0]
    assert abs(x - y) < 0.01
    assert abs(x * x - y * y) >= 1.0


def test_a_family_refines_entourages_over_its_own_members():
    report = compare_uniformities(PARABOLA, ["f", "g"], ["g"], [1.0, 0.5], target_eps=1.0)
    assert report.all_refine()
    same = compare_uniformities(PARABOLA, ["f"], ["f"], [1.0], target_eps=1.0)
    assert same.all_refine()


def test_nonpositive_widths_rejected():
    with pytest.raises(ValueError, match="positive"):
        compare_uniformities(PARABOLA, ["f"], ["g"], [0.0], target_eps=1.0)
    with pytest.raises(ValueError, match="positive"):
        compare_uniformities(PARABOLA, ["f"], ["g"], [0.1], target_eps=-1.0)


def test_probe_rejects_stray_variables_and_empty_schedules():
    with pytest.raises(ValueError, match="may only use n"):
        Probe("p", parse_expr("n + m", ["n", "m"]))
    with pytest.raises(ValueError, match="empty schedule"):
        Probe("p", Var("n"), start=10, stop=5)


def test_probe_points_walk_the_tail():
    probe = Probe("p", Var("n"), start=1, stop=1000)
    pts = probe_points(SLAB, probe, tail=50)
    assert len(pts) == 50
    assert pts[0][0] == 951
    assert pts[-1] == (1000, 1000.0, (1000.0,))


def test_probe_that_leaves_the_box_is_a_domain_error():
    probe = Probe("p", parse_expr("2000 * n", ["n"]), start=1, stop=10)
    with pytest.raises(DomainError, match="leaves the box"):
        probe_points(SLAB, probe, tail=5)


def test_probes_need_a_one_parameter_carrier():
    plane = DiffSpace(
        Carrier(
            params=("s", "t"),
            box=(Interval(0.0, 1.0), Interval(0.0, 1.0)),
            ambient=("x", "y"),
            chart=(Var("s"), Var("t")),
            counts=(3, 3),
        ),
        GeneratorFamily((Generator("f", Var("x")),)),
    )
    with pytest.raises(ValueError, match="single-parameter"):
        probe_points(plane, Probe("p", Var("n")), tail=5)


def test_arc_probe_settles_on_a_quarter_turn():
    space = SLAB.with_generators(["a"])
    verdict = probe_cauchy(space, Probe("p", Var("n"), stop=1050), tol=1e-3, tail=50)
    assert verdict.status == "cauchy"
    assert verdict.limit is not None
    assert abs(verdict.limit[0] - math.pi / 2) < 1e-3


def test_unbounded_coordinate_escapes():
    space = SLAB.with_generators(["f"])
    verdict = probe_cauchy(space, Probe("p", Var("n"), stop=1000), tol=1e-3, tail=50)
    assert verdict.status == "escaping"
    assert verdict.limit is None


def test_constant_probe_lands_on_its_embedding():
    verdict = probe_cauchy(SLAB, Probe("p", parse_expr("3 + n - n", ["n"]), stop=100), tol=1e-9, tail=20)
    assert verdict.status == "cauchy"
    assert verdict.limit == (3.0, math.atan(3.0))


def test_oscillation_without_flight_is_undecided():
    space = line_space(-2.0, 2.0, 5, [("f", "x")])
    verdict = probe_cauchy(space, Probe("p", parse_expr("sin(n)", ["n"]), stop=500), tol=1e-3, tail=50)
    assert verdict.status == "undecided"


def test_larger_families_dominate_smaller_ones():
    """Adding a generator can only raise the pseudometric, so a verdict of
    cauchy over the larger family carries down to the smaller one."""
    both = probe_cauchy(SLAB, Probe("p", Var("n"), stop=1000), tol=1e-3, tail=50)
    arc_only = probe_cauchy(SLAB.with_generators(["a"]), Probe("p", Var("n"), stop=1000), tol=1e-3, tail=50)
    assert both.status != "cauchy"
    assert arc_only.status == "cauchy"
    assert both.max_oscillation() >= arc_only.max_oscillation()


def test_verdict_reports_per_generator_oscillation():
    verdict = probe_cauchy(SLAB, Probe("p", Var("n"), stop=1000), tol=1e-3, tail=50)
    osc = dict(verdict.oscillation)
    assert set(osc) == {"f", "a"}
    assert osc["f"] == 49.0
    assert osc["a"] < 1e-4
