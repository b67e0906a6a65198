"""Command line front end.

Each subcommand loads a spec file, runs one construction, and writes
CSV artifacts plus a short text report under ``--out``.  Output is
deterministic: floats are printed with 17 significant digits, rows
follow declaration or sample order, and nothing timestamps itself.
Exit status is 0 on success, 1 when a library invariant fails, and 2
for usage or spec-file problems.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys
from typing import Callable, Sequence

from . import specfile, tangent
from .compactify import boundize, compactify, normalize
from .completion import CompletedSpace, IotaReport, complete, iota, maximal_family
from .expr import ExprError, eval_expr, parse_expr
from .filters import verify_filter_laws
from .space import (
    DiffSpace,
    Generator,
    GeneratorFamily,
    SmoothFunction,
    check_smooth_map,
    embed,
    eval_smooth,
)
from .specfile import SpecError
from .tangent import TangentVector
from .uniform import Probe, compare_uniformities

__all__ = ["main"]

IOTA_TOL = 1e-9
_RESIDUAL_SCALE = 1e-12

_MODULE_OF = {
    "embed": "space",
    "complete": "completion",
    "compactify": "compactify",
    "boundize": "compactify",
    "compare-uniform": "uniform",
    "tangent": "tangent",
    "check-map": "space",
    "verify-filters": "filters",
    "run": "cli",
}


class UsageError(Exception):
    pass


def _fmt(value: float) -> str:
    return "%.17g" % float(value)


def _split_names(flag: str) -> list[str]:
    names = [part.strip() for part in flag.split(",") if part.strip()]
    if not names:
        raise UsageError(f"empty name list {flag!r}")
    return names


def _parse_point(flag: str, what: str) -> tuple[float, ...]:
    values = []
    for part in _split_names(flag):
        try:
            values.append(eval_expr(parse_expr(part), {}))
        except ExprError as err:
            raise UsageError(f"{what}: {err}") from err
    return tuple(values)


def _resolve_family(space: DiffSpace, flag: str | None) -> DiffSpace:
    if not flag:
        return space
    if flag.startswith("maximal:"):
        try:
            degree = int(flag.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"--family {flag!r}: the degree must be an integer") from None
        return dataclasses.replace(space, family=maximal_family(space.family, degree))
    try:
        return space.with_generators(_split_names(flag))
    except KeyError as err:
        raise UsageError(f"--family: {err.args[0]}") from None


def _select_probes(spec: specfile.SpecFile, flag: str | None) -> list[Probe]:
    if not flag:
        return list(spec.probes)
    wanted = _split_names(flag)
    by_name = {p.name: p for p in spec.probes}
    missing = [n for n in wanted if n not in by_name]
    if missing:
        raise UsageError(f"--probes names unknown probes {missing}")
    return [by_name[n] for n in wanted]


def _artifact(args, suffix: str) -> str:
    label = args.label or args.command.replace("-", "_")
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, f"{label}_{suffix}")


def _open_csv(path: str):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def _write_report(path: str, lines: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_points(path: str, cs: CompletedSpace) -> None:
    fh, writer = _open_csv(path)
    with fh:
        writer.writerow(["point_kind", "probe_name", *cs.names])
        for p in cs.base.points:
            writer.writerow(["base", "", *(_fmt(c) for c in p.coords)])
        for a in cs.adjoined:
            writer.writerow(["adjoined", a.probe, *(_fmt(c) for c in a.coords)])


def _completion_lines(cs: CompletedSpace) -> list[str]:
    lines = []
    for v in cs.verdicts:
        osc = ", ".join(f"{n}={_fmt(o)}" for n, o in v.oscillation)
        limit = "-" if v.limit is None else "(" + ", ".join(_fmt(c) for c in v.limit) + ")"
        lines.append(f"probe {v.probe}: {v.status}  oscillation[{osc}]  limit {limit}")
    lines.append(f"adjoined: {len(cs.adjoined)}")
    lines.append("duplicates: " + (", ".join(cs.duplicates) if cs.duplicates else "none"))
    return lines


def _write_iota(path: str, rep: IotaReport) -> None:
    fh, writer = _open_csv(path)
    with fh:
        writer.writerow(["source", "target", *rep.sub_names])
        for entry in rep.entries:
            writer.writerow([entry.source, entry.target, *(_fmt(c) for c in entry.coords)])


def cmd_embed(args) -> int:
    spec = specfile.load_spec(args.spec)
    space = _resolve_family(spec.space, args.family)
    cloud = embed(space)
    path = _artifact(args, "points.csv")
    fh, writer = _open_csv(path)
    with fh:
        writer.writerow(["point_index", *space.carrier.params, *cloud.names])
        for i, p in enumerate(cloud.points):
            writer.writerow([i, *(_fmt(v) for v in p.params), *(_fmt(c) for c in p.coords)])
    print(f"embed: {len(cloud.points)} points, {len(cloud.names)} coordinates -> {path}")
    return 0


def cmd_complete(args) -> int:
    spec = specfile.load_spec(args.spec)
    space = _resolve_family(spec.space, args.family)
    probes = _select_probes(spec, args.probes)
    cs = complete(space, probes, tol=args.tol, tail=args.tail)
    _write_points(_artifact(args, "points.csv"), cs)
    lines = _completion_lines(cs)
    rc = 0
    if args.subfamily:
        sub = space.with_generators(_split_names(args.subfamily))
        cs_sub = complete(sub, probes, tol=args.tol, tail=args.tail)
        rep = iota(cs, cs_sub)
        _write_iota(_artifact(args, "iota.csv"), rep)
        for gen_name, r in rep.residuals:
            lines.append(f"iota residual {gen_name}: {_fmt(r)}")
        lines.append(
            "iota uncovered: " + (", ".join(rep.uncovered) if rep.uncovered else "none")
        )
        if rep.max_residual() > IOTA_TOL:
            print(
                f"sikorski complete (completion): invariant violated: extension"
                f" compatibility residual {_fmt(rep.max_residual())} exceeds {_fmt(IOTA_TOL)}",
                file=sys.stderr,
            )
            rc = 1
    _write_report(_artifact(args, "report.txt"), lines)
    print(f"complete: {len(cs.adjoined)} adjoined, {len(cs.duplicates)} duplicate(s)")
    return rc


def cmd_compactify(args) -> int:
    spec = specfile.load_spec(args.spec)
    space = _resolve_family(spec.space, args.family)
    probes = _select_probes(spec, args.probes)
    scaled = []
    lines = []
    for gen in space.family.generators:
        ng = normalize(space, gen.name)
        scaled.append(Generator(gen.name, ng.expr, 1.0))
        lines.append(f"normalized {gen.name}: sup {_fmt(ng.sup)} at sample {ng.argmax_index}")
    bounded = dataclasses.replace(space, family=GeneratorFamily(tuple(scaled)))
    cs = compactify(bounded, probes, tol=args.tol, tail=args.tail)
    _write_points(_artifact(args, "points.csv"), cs)
    _write_report(_artifact(args, "report.txt"), lines + _completion_lines(cs))
    print(f"compactify: {len(cs.adjoined)} adjoined, {len(cs.duplicates)} duplicate(s)")
    return 0


def cmd_boundize(args) -> int:
    spec = specfile.load_spec(args.spec)
    gen_names = _split_names(args.gens)
    omega_vars = tuple(f"u{i + 1}" for i in range(len(gen_names)))
    try:
        omega = parse_expr(args.omega, allowed_vars=omega_vars)
    except ExprError as err:
        raise UsageError(f"--omega: {err}") from err
    fn = SmoothFunction(omega, omega_vars, tuple(gen_names))
    point = _parse_point(args.point, "--point")
    bset = boundize(spec.space, fn, point)
    path = _artifact(args, "boundize.csv")
    fh, writer = _open_csv(path)
    with fh:
        writer.writerow(["generator", "mu", "max_abs_gamma", "local_residual"])
        for name, mu, mg in zip(bset.gen_names, bset.mus, bset.max_abs_gamma):
            writer.writerow([name, _fmt(mu), _fmt(mg), _fmt(bset.local_residual)])
    print(
        f"boundize: {len(bset.gen_names)} generator(s) at {args.point},"
        f" residual {_fmt(bset.local_residual)} on {bset.local_sample_count} local sample(s)"
    )
    return 0


def cmd_compare_uniform(args) -> int:
    spec = specfile.load_spec(args.spec)
    g_names = _split_names(args.g_family)
    h_names = _split_names(args.h_family)
    eps_grid = list(_parse_point(args.eps_grid, "--eps-grid"))
    rep = compare_uniformities(spec.space, g_names, h_names, eps_grid, args.target_eps)
    params = spec.space.carrier.params
    path = _artifact(args, "refinement.csv")
    fh, writer = _open_csv(path)
    with fh:
        writer.writerow(
            ["candidate_eps", "refines", "target", "violated", "d_g"]
            + [f"x_{p}" for p in params]
            + [f"y_{p}" for p in params]
        )
        for row in rep.rows:
            if row.refines:
                writer.writerow([_fmt(row.candidate_eps), "true", row.target, "", ""]
                                + [""] * (2 * len(params)))
            else:
                writer.writerow(
                    [_fmt(row.candidate_eps), "false", row.target, row.violated, _fmt(row.d_g)]
                    + [_fmt(v) for v in row.witness_x]
                    + [_fmt(v) for v in row.witness_y]
                )
    found = sum(1 for row in rep.rows if not row.refines)
    print(f"compare-uniform: {found} of {len(rep.rows)} widths produced a witness -> {path}")
    return 0


def cmd_tangent(args) -> int:
    spec = specfile.load_spec(args.spec)
    space = spec.space
    point = _parse_point(args.point, "--point")
    coeffs = _parse_point(args.vector, "--vector")
    v = TangentVector(point, coeffs)
    names = _split_names(args.functions) if args.functions else list(space.family.names)
    funcs = []
    for n in names:
        space.family.get(n)
        funcs.append((n, SmoothFunction.of_generator(n)))

    rows: list[tuple[str, str, float]] = []
    rc = 0
    failures: list[str] = []
    for n, fn in funcs:
        rows.append(("apply", n, tangent.apply(space, v, fn)))
    for i, (n1, f1) in enumerate(funcs):
        for n2, f2 in funcs[i:]:
            residual = tangent.leibniz_check(space, v, f1, f2)
            scale = 1.0 + abs(
                eval_smooth(space, f1, point) * tangent.apply(space, v, f2)
            ) + abs(eval_smooth(space, f2, point) * tangent.apply(space, v, f1))
            rows.append(("leibniz", f"{n1}*{n2}", residual))
            if residual > _RESIDUAL_SCALE * scale:
                failures.append(f"leibniz residual {_fmt(residual)} for {n1}*{n2}")

    if args.map:
        if args.map not in spec.maps:
            raise UsageError(f"--map: spec declares no map named {args.map!r}")
        loaded = spec.maps[args.map]
        pushed = tangent.tangent_map(space, loaded.witness, v)
        target = loaded.witness.target
        for amb, c in zip(target.carrier.ambient, pushed.coeffs):
            rows.append(("pushforward", f"{args.map}.{amb}", c))
        for amb, c in zip(target.carrier.ambient, pushed.point):
            rows.append(("image", f"{args.map}.{amb}", c))
        for gen_name in target.family.names:
            beta = SmoothFunction.of_generator(gen_name)
            residual = tangent.chain_rule_check(space, loaded.witness, v, beta)
            scale = 1.0 + abs(tangent.differential(target, beta, pushed))
            rows.append(("chain", f"{args.map}:{gen_name}", residual))
            if residual > _RESIDUAL_SCALE * scale:
                failures.append(f"chain rule residual {_fmt(residual)} for {gen_name}")

    path = _artifact(args, "tangent.csv")
    fh, writer = _open_csv(path)
    with fh:
        writer.writerow(["kind", "name", "value"])
        for kind, name, value in rows:
            writer.writerow([kind, name, _fmt(value)])
    for kind, name, value in rows:
        print(f"{kind} {name} = {_fmt(value)}")
    for message in failures:
        print(f"sikorski tangent (tangent): invariant violated: {message}", file=sys.stderr)
        rc = 1
    return rc


def cmd_check_map(args) -> int:
    spec = specfile.load_spec(args.spec)
    if args.map not in spec.maps:
        raise UsageError(f"--map: spec declares no map named {args.map!r}")
    loaded = spec.maps[args.map]
    rep = check_smooth_map(spec.space, loaded.witness, tol=args.tol)
    path = _artifact(args, "map.csv")
    fh, writer = _open_csv(path)
    with fh:
        writer.writerow(["generator", "max_residual"])
        for name, r in rep.residuals:
            writer.writerow([name, _fmt(r)])
    worst = "-" if rep.worst_point is None else "(" + ", ".join(_fmt(c) for c in rep.worst_point) + ")"
    _write_report(
        _artifact(args, "report.txt"),
        [
            f"map {args.map} -> {loaded.target.name}",
            f"smooth within {_fmt(rep.tol)}: {'yes' if rep.smooth else 'no'}",
            f"max residual: {_fmt(rep.max_residual())} at {worst}",
        ],
    )
    print(f"check-map: max residual {_fmt(rep.max_residual())} (tol {_fmt(rep.tol)})")
    if not rep.smooth:
        print(
            f"sikorski check-map (space): invariant violated: pullback witness residual"
            f" {_fmt(rep.max_residual())} exceeds {_fmt(rep.tol)}",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_verify_filters(args) -> int:
    rep = verify_filter_laws(args.max_size)
    path = _artifact(args, "models.csv")
    fh, writer = _open_csv(path)
    with fh:
        writer.writerow(
            ["ground_size", "model_index", "entourages", "filters", "checks", "failures"]
        )
        for m in rep.models:
            writer.writerow(
                [
                    m.ground_size,
                    m.model_index,
                    m.n_entourages,
                    m.n_filters,
                    sum(count for _, count in m.checks),
                    len(m.failures),
                ]
            )
    _write_report(_artifact(args, "report.txt"), rep.summary_text().splitlines())
    print(rep.summary_text())
    if not rep.passed:
        print(
            f"sikorski verify-filters (filters): invariant violated: {rep.first_counterexample}",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_run(args) -> int:
    spec = specfile.load_spec(args.spec)
    by_label = {e.label: e for e in spec.experiments}
    labels = args.labels or [e.label for e in spec.experiments]
    unknown = [l for l in labels if l not in by_label]
    if unknown:
        raise UsageError(f"spec declares no experiment(s) {unknown}")
    if not labels:
        raise UsageError("spec declares no experiments")
    for label in labels:
        exp = by_label[label]
        argv = [exp.argv[0]]
        if exp.argv[0] != "verify-filters":
            argv.append(args.spec)
        argv.extend(exp.argv[1:])
        argv.extend(["--out", args.out, "--label", label])
        print(f"run {label}: {' '.join(exp.argv)}")
        rc = main(argv)
        if rc != 0:
            return rc
    return 0


_HANDLERS: dict[str, Callable] = {
    "embed": cmd_embed,
    "complete": cmd_complete,
    "compactify": cmd_compactify,
    "boundize": cmd_boundize,
    "compare-uniform": cmd_compare_uniform,
    "tangent": cmd_tangent,
    "check-map": cmd_check_map,
    "verify-filters": cmd_verify_filters,
    "run": cmd_run,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sikorski",
        description="generator embeddings, completions, and compactifications of "
        "parametrized differential spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, with_spec: bool = True) -> None:
        if with_spec:
            p.add_argument("spec", help="path to a spec file")
        p.add_argument("--out", default=".", help="directory for artifacts (default: .)")
        p.add_argument("--label", default=None, help="artifact file prefix (default: command name)")

    p = sub.add_parser("embed", help="sample the carrier and write the generator embedding")
    common(p)
    p.add_argument("--family", default=None, help="comma list of generators, or maximal:<degree>")

    p = sub.add_parser("complete", help="adjoin the limits of Cauchy probes")
    common(p)
    p.add_argument("--family", default=None)
    p.add_argument("--subfamily", default=None, help="also map this completion onto a subfamily")
    p.add_argument("--probes", default=None, help="comma list of probe names (default: all)")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--tail", type=int, default=50)

    p = sub.add_parser("compactify", help="normalize the family and complete into the unit cube")
    common(p)
    p.add_argument("--family", default=None)
    p.add_argument("--probes", default=None)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--tail", type=int, default=50)

    p = sub.add_parser("boundize", help="bounded replacement generators around a point")
    common(p)
    p.add_argument("--omega", required=True, help="witness expression in u1..uk")
    p.add_argument("--gens", required=True, help="comma list of generator names")
    p.add_argument("--point", required=True, help="ambient point, comma separated")

    p = sub.add_parser("compare-uniform", help="search for refinement counterexample pairs")
    common(p)
    p.add_argument("--g-family", required=True)
    p.add_argument("--h-family", required=True)
    p.add_argument("--target-eps", type=float, default=1.0)
    p.add_argument("--eps-grid", required=True, help="comma list of candidate widths")

    p = sub.add_parser("tangent", help="directional derivatives and product/chain residuals")
    common(p)
    p.add_argument("--point", required=True)
    p.add_argument("--vector", required=True)
    p.add_argument("--functions", default=None, help="comma list of generators (default: all)")
    p.add_argument("--map", default=None, help="also push the vector through this declared map")

    p = sub.add_parser("check-map", help="validate a declared smooth-map witness on all samples")
    common(p)
    p.add_argument("--map", required=True)
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("verify-filters", help="exhaustive finite-model checks of the filter laws")
    common(p, with_spec=False)
    p.add_argument("--max-size", type=int, default=4)

    p = sub.add_parser("run", help="run experiments declared in the spec file")
    common(p)
    p.add_argument("labels", nargs="*", help="experiment labels (default: all, in order)")

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except SpecError as err:
        print(f"sikorski {args.command}: {err}", file=sys.stderr)
        return 2
    except UsageError as err:
        print(f"sikorski {args.command}: {err}", file=sys.stderr)
        return 2
    except KeyError as err:
        detail = err.args[0] if err.args else err
        print(
            f"sikorski {args.command} ({_MODULE_OF[args.command]}): invariant violated: {detail}",
            file=sys.stderr,
        )
        return 1
    except (ExprError, ValueError) as err:
        print(
            f"sikorski {args.command} ({_MODULE_OF[args.command]}): invariant violated: {err}",
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
