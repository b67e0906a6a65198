import math
from pathlib import Path

import pytest

import sikorski
from sikorski.specfile import SpecError, load_spec

SPEC_DIR = Path(sikorski.__file__).parent / "specs"

MINIMAL = """\
[space]
params = t
domain = [0, 1]
chart = x : t
samples = 11

[generators]
f = x
"""


def write_spec(tmp_path, text, name="t.spec"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_all_bundled_specs_load():
    stems = {
        "real_line_atan": "real_line",
        "parabola_refinement": "half_line",
        "spiral": "spiral",
        "rationals_sqrt2": "rational_grid",
        "unit_interval_compact": "unit_interval",
    }
    for stem, declared in stems.items():
        spec = load_spec(str(SPEC_DIR / f"{stem}.spec"))
        assert spec.name == declared
        assert spec.space.family.names
        assert spec.experiments


def test_real_line_spec_contents():
    spec = load_spec(str(SPEC_DIR / "real_line_atan.spec"))
    assert spec.space.carrier.params == ("t",)
    assert spec.space.family.names == ("f", "g")
    assert spec.space.carrier.box[0].lo_open and spec.space.carrier.box[0].hi_open
    plus = spec.probe("pplus")
    assert (plus.start, plus.stop) == (1, 1050)
    assert "squash" in spec.maps
    target = spec.maps["squash"].target
    assert target.name == "unit_interval"
    assert set(spec.maps["squash"].witness.witnesses) == set(target.space.family.names)
    with pytest.raises(KeyError):
        spec.probe("nope")


def test_bounded_section_sets_generator_bounds():
    spec = load_spec(str(SPEC_DIR / "unit_interval_compact.spec"))
    assert spec.space.family.get("g").bound == 1.0


def test_spiral_spec_geometry():
    spec = load_spec(str(SPEC_DIR / "spiral.spec"))
    box = spec.space.carrier.box[0]
    assert box.lo_open and box.hi_open
    assert box.hi == pytest.approx(math.pi / 2)
    assert spec.space.carrier.inset == 0.01
    assert len(spec.probes) == 5


def test_minimal_spec_loads(tmp_path):
    spec = load_spec(write_spec(tmp_path, MINIMAL))
    assert spec.name == "t"
    assert spec.probes == ()
    assert spec.maps == {}
    assert spec.experiments == ()
    assert spec.space.carrier.counts == (11,)


def test_spec_error_carries_location(tmp_path):
    path = write_spec(tmp_path, "[generators]\nf = x\n")
    with pytest.raises(SpecError) as err:
        load_spec(path)
    assert err.value.path == path
    assert err.value.line == 1
    assert str(err.value) == f"{path}:1: spec has no [space] section"


def test_missing_generators_section(tmp_path):
    text = "[space]\nparams = t\ndomain = [0, 1]\nchart = x : t\nsamples = 5\n"
    with pytest.raises(SpecError, match="no \\[generators\\]"):
        load_spec(write_spec(tmp_path, text))


def test_missing_space_key(tmp_path):
    text = "[space]\nparams = t\nchart = x : t\nsamples = 5\n\n[generators]\nf = x\n"
    with pytest.raises(SpecError, match="missing 'domain'"):
        load_spec(write_spec(tmp_path, text))


def test_expression_errors_name_the_column(tmp_path):
    text = MINIMAL.replace("f = x", "f = x + * 2")
    with pytest.raises(SpecError, match="column"):
        load_spec(write_spec(tmp_path, text))


def test_domain_arity_must_match_params(tmp_path):
    text = MINIMAL.replace("domain = [0, 1]", "domain = [0, 1] x [0, 2]")
    with pytest.raises(SpecError, match="interval"):
        load_spec(write_spec(tmp_path, text))


def test_domain_endpoints_take_expressions(tmp_path):
    text = MINIMAL.replace("domain = [0, 1]", "domain = (0, pi/2)")
    spec = load_spec(write_spec(tmp_path, text))
    box = spec.space.carrier.box[0]
    assert box.hi == math.pi / 2
    assert box.lo_open and box.hi_open


def test_duplicate_generator_rejected(tmp_path):
    text = MINIMAL + "f = x^2\n"
    with pytest.raises(SpecError, match="duplicate generator"):
        load_spec(write_spec(tmp_path, text))


def test_unknown_ambient_name_in_generator(tmp_path):
    text = MINIMAL.replace("f = x", "f = y")
    with pytest.raises(SpecError, match="unknown variable 'y'"):
        load_spec(write_spec(tmp_path, text))


def test_chart_requires_name_colon_expression(tmp_path):
    text = MINIMAL.replace("chart = x : t", "chart = x")
    with pytest.raises(SpecError, match="needs 'name : expression'"):
        load_spec(write_spec(tmp_path, text))


def test_samples_must_be_integers(tmp_path):
    text = MINIMAL.replace("samples = 11", "samples = eleven")
    with pytest.raises(SpecError, match="samples must be integers"):
        load_spec(write_spec(tmp_path, text))


def test_bad_probe_schedule(tmp_path):
    text = MINIMAL + "\n[probes]\np = 1/n @ one .. ten\n"
    with pytest.raises(SpecError, match="probe schedule"):
        load_spec(write_spec(tmp_path, text))


def test_probe_defaults_without_schedule(tmp_path):
    text = MINIMAL + "\n[probes]\np = 1/n\n"
    spec = load_spec(write_spec(tmp_path, text))
    p = spec.probe("p")
    assert (p.start, p.stop) == (1, 1000)


def test_bound_for_unknown_generator(tmp_path):
    text = MINIMAL + "\n[bounded]\ng = 1\n"
    with pytest.raises(SpecError, match="unknown generator 'g'"):
        load_spec(write_spec(tmp_path, text))


def test_unknown_section_rejected(tmp_path):
    text = MINIMAL + "\n[rockets]\nthrust = 11\n"
    with pytest.raises(SpecError, match="unknown section"):
        load_spec(write_spec(tmp_path, text))


def test_experiments_parse_shell_style(tmp_path):
    text = MINIMAL + '\n[experiments]\ngo = embed --family f\nwide = complete --tol 1e-3 --probes "p"\n'
    spec = load_spec(write_spec(tmp_path, text))
    assert [e.label for e in spec.experiments] == ["go", "wide"]
    assert spec.experiments[0].argv == ("embed", "--family", "f")
    assert spec.experiments[1].argv == ("complete", "--tol", "1e-3", "--probes", "p")


def test_experiment_labels_must_be_file_stems(tmp_path):
    text = MINIMAL + "\n[experiments]\nbad label! = embed\n"
    with pytest.raises(SpecError, match="not usable as a file stem"):
        load_spec(write_spec(tmp_path, text))


def test_map_targets_resolve_relative_to_the_spec(tmp_path):
    write_spec(tmp_path, MINIMAL, name="target.spec")
    text = (
        MINIMAL
        + "\n[map m]\ntarget = target.spec\ncomponent x = x^2\nwitness f = u1^2 : f\n"
    )
    spec = load_spec(write_spec(tmp_path, text, name="source.spec"))
    loaded = spec.maps["m"]
    assert loaded.target.name == "target"
    assert Path(loaded.target_path).parent == tmp_path


def test_map_without_target_line(tmp_path):
    text = MINIMAL + "\n[map m]\ncomponent x = x\nwitness f = u1 : f\n"
    with pytest.raises(SpecError, match="no target line"):
        load_spec(write_spec(tmp_path, text))


def test_map_target_must_exist(tmp_path):
    text = MINIMAL + "\n[map m]\ntarget = gone.spec\ncomponent x = x\nwitness f = u1 : f\n"
    with pytest.raises(SpecError, match="does not exist"):
        load_spec(write_spec(tmp_path, text))


def test_map_must_cover_target_generators(tmp_path):
    write_spec(tmp_path, MINIMAL + "g = x^2\n", name="target.spec")
    text = MINIMAL + "\n[map m]\ntarget = target.spec\ncomponent x = x\nwitness f = u1 : f\n"
    with pytest.raises(SpecError, match="lacks witnesses"):
        load_spec(write_spec(tmp_path, text, name="source.spec"))


def test_map_witness_checks_source_generators(tmp_path):
    write_spec(tmp_path, MINIMAL, name="target.spec")
    text = MINIMAL + "\n[map m]\ntarget = target.spec\ncomponent x = x\nwitness f = u1 : zap\n"
    with pytest.raises(SpecError, match="unknown generator 'zap'"):
        load_spec(write_spec(tmp_path, text, name="source.spec"))


def test_circular_map_targets_are_an_error(tmp_path):
    a = MINIMAL + "\n[map m]\ntarget = b.spec\ncomponent x = x\nwitness f = u1 : f\n"
    b = MINIMAL + "\n[map m]\ntarget = a.spec\ncomponent x = x\nwitness f = u1 : f\n"
    write_spec(tmp_path, b, name="b.spec")
    path_a = write_spec(tmp_path, a, name="a.spec")
    with pytest.raises(SpecError, match="circular"):
        load_spec(path_a)


def test_comments_and_blank_lines_are_ignored(tmp_path):
    text = "# leading note\n\n" + MINIMAL.replace("f = x", "f = x  # identity")
    spec = load_spec(write_spec(tmp_path, text))
    assert spec.space.family.names == ("f",)
