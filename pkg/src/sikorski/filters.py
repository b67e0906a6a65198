"""Filters and uniformities on small finite sets.

Everything here is exhaustive: filters are enumerated, uniformity models
are enumerated, and the convergence/Cauchy statements the completion
construction leans on are checked literally, quantifier by quantifier.
Ground sets are tiny (size <= 5), so the point is certainty, not scale.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Hashable, Iterable, Iterator, Sequence

from ._parallel import parallel_map

__all__ = [
    "FiniteFilter",
    "FiniteUniformity",
    "FilterLawReport",
    "ModelReport",
    "principal_filter",
    "enumerate_filters",
    "filter_from_base",
    "intersect_filters",
    "make_uniformity",
    "discrete_uniformity",
    "indiscrete_uniformity",
    "uniformity_from_partition",
    "partitions",
    "catalog",
    "ball",
    "converges_to",
    "is_cauchy",
    "relation_R",
    "minimal_cauchy",
    "verify_filter_laws",
]

_MAX_GROUND = 5


def _sorted_sets(sets: Iterable[frozenset]) -> tuple[frozenset, ...]:
    return tuple(sorted(sets, key=lambda s: (len(s), sorted(s))))


@dataclass(frozen=True)
class FiniteFilter:
    """An upward-closed, intersection-closed family of nonempty subsets."""

    ground: tuple[Hashable, ...]
    sets: frozenset[frozenset]

    @property
    def core(self) -> frozenset:
        """Smallest member; every filter on a finite set is its up-set."""
        out = frozenset(self.ground)
        for s in self.sets:
            out &= s
        return out

    def members_sorted(self) -> tuple[frozenset, ...]:
        return _sorted_sets(self.sets)

    def __le__(self, other: "FiniteFilter") -> bool:
        return self.sets <= other.sets


def _upward_closure(ground: Sequence[Hashable], seeds: Iterable[frozenset]) -> frozenset:
    universe = tuple(ground)
    out = set()
    for seed in seeds:
        rest = [x for x in universe if x not in seed]
        for k in range(len(rest) + 1):
            for extra in itertools.combinations(rest, k):
                out.add(seed | frozenset(extra))
    return frozenset(out)


def principal_filter(ground: Sequence[Hashable], core: Iterable[Hashable]) -> FiniteFilter:
    core = frozenset(core)
    if not core:
        raise ValueError("a filter cannot be generated by the empty set")
    if not core <= frozenset(ground):
        raise ValueError("core must be a subset of the ground set")
    return FiniteFilter(tuple(ground), _upward_closure(ground, [core]))


def enumerate_filters(ground: Sequence[Hashable]) -> list[FiniteFilter]:
    """All filters on the ground set, ordered by (core size, core).

    On a finite set every filter is principal (its members' intersection is
    itself a member), so the count is 2^|ground| - 1.
    """
    ground = tuple(ground)
    if len(ground) > _MAX_GROUND:
        raise ValueError(f"ground sets larger than {_MAX_GROUND} are out of scope")
    cores = []
    for k in range(1, len(ground) + 1):
        for combo in itertools.combinations(sorted(ground), k):
            cores.append(frozenset(combo))
    cores.sort(key=lambda s: (len(s), sorted(s)))
    return [principal_filter(ground, core) for core in cores]


def filter_from_base(ground: Sequence[Hashable], base: Iterable[Iterable[Hashable]]) -> FiniteFilter:
    """Upward closure of a base.  The base must be nonempty, free of the
    empty set, and downward directed; violations name the offending pair."""
    sets = [frozenset(b) for b in base]
    if not sets:
        raise ValueError("a filter base must be nonempty")
    universe = frozenset(ground)
    for s in sets:
        if not s:
            raise ValueError("a filter base may not contain the empty set")
        if not s <= universe:
            raise ValueError(f"base member {sorted(s)} is not a subset of the ground set")
    for a, b in itertools.combinations(sets, 2):
        meet = a & b
        if not any(c <= meet for c in sets):
            raise ValueError(f"base is not directed: {sorted(a)} and {sorted(b)} admit no member below their intersection")
    return FiniteFilter(tuple(ground), _upward_closure(ground, sets))


def intersect_filters(filters: Sequence[FiniteFilter]) -> FiniteFilter:
    if not filters:
        raise ValueError("need at least one filter")
    ground = filters[0].ground
    if any(f.ground != ground for f in filters):
        raise ValueError("filters live on different ground sets")
    sets = frozenset.intersection(*(f.sets for f in filters))
    out = FiniteFilter(ground, sets)
    _check_filter_axioms(out)
    return out


def _check_filter_axioms(f: FiniteFilter) -> None:
    universe = frozenset(f.ground)
    if universe not in f.sets:
        raise ValueError("filter axioms violated: ground set missing")
    for s in f.sets:
        if not s:
            raise ValueError("filter axioms violated: empty set present")
    for a in f.sets:
        for b in f.sets:
            if a & b not in f.sets:
                raise ValueError(f"filter axioms violated: {sorted(a)} meet {sorted(b)} missing")
    for s in f.sets:
        for t in _upward_closure(f.ground, [s]):
            if t not in f.sets:
                raise ValueError(f"filter axioms violated: superset {sorted(t)} missing")


# ---------------------------------------------------------------------------
# Uniformities


def _diagonal(ground: Sequence[Hashable]) -> frozenset:
    return frozenset((x, x) for x in ground)


def _is_symmetric(rel: frozenset) -> bool:
    return all((b, a) in rel for (a, b) in rel)


def _compose(rel: frozenset) -> frozenset:
    by_left: dict[Hashable, set] = {}
    for a, b in rel:
        by_left.setdefault(a, set()).add(b)
    out = set()
    for a, b in rel:
        for c in by_left.get(b, ()):
            out.add((a, c))
    return frozenset(out)


def _symmetric_supersets(ground: tuple, rel: frozenset) -> Iterator[frozenset]:
    pool = [
        (a, b)
        for a, b in itertools.combinations(sorted(ground), 2)
        if (a, b) not in rel
    ]
    for k in range(len(pool) + 1):
        for extra in itertools.combinations(pool, k):
            add = set()
            for a, b in extra:
                add.add((a, b))
                add.add((b, a))
            yield rel | frozenset(add)


@dataclass(frozen=True)
class FiniteUniformity:
    """A uniform structure presented by its symmetric entourages.

    The family must contain the diagonal in every member, be closed under
    symmetric supersets and pairwise intersections, and provide a
    composition witness W with W o W inside each member.
    """

    ground: tuple[Hashable, ...]
    entourages: tuple[frozenset, ...]  # canonically sorted

    def entourages_sorted(self) -> tuple[frozenset, ...]:
        return self.entourages

    @property
    def minimum(self) -> frozenset:
        return self.entourages[0]


def make_uniformity(ground: Sequence[Hashable], relations: Iterable[Iterable[tuple]]) -> FiniteUniformity:
    ground = tuple(ground)
    if len(ground) > _MAX_GROUND:
        raise ValueError(f"ground sets larger than {_MAX_GROUND} are out of scope")
    rels = {frozenset(r) for r in relations}
    if not rels:
        raise ValueError("a uniformity needs at least one entourage")
    diag = _diagonal(ground)
    pairs = frozenset(itertools.product(ground, repeat=2))
    for rel in rels:
        if not rel <= pairs:
            raise ValueError("entourage contains pairs outside the ground set")
        if not diag <= rel:
            raise ValueError("every entourage must contain the diagonal")
        if not _is_symmetric(rel):
            raise ValueError("every entourage must be symmetric")
    for rel in rels:
        for sup in _symmetric_supersets(ground, rel):
            if sup not in rels:
                raise ValueError("family is not closed under symmetric supersets")
    for a in rels:
        for b in rels:
            if a & b not in rels:
                raise ValueError("family is not closed under pairwise intersections")
    for v in rels:
        if not any(_compose(w) <= v for w in rels):
            raise ValueError("no composition witness W with W o W inside some entourage")
    return FiniteUniformity(ground, _sorted_sets(rels))


def uniformity_from_partition(ground: Sequence[Hashable], blocks: Iterable[Iterable[Hashable]]) -> FiniteUniformity:
    """The uniformity whose minimum entourage is the equivalence relation
    of the partition: all symmetric supersets of it."""
    ground = tuple(ground)
    blocks = [frozenset(b) for b in blocks]
    seen: set = set()
    for b in blocks:
        if not b:
            raise ValueError("partition blocks must be nonempty")
        if b & seen:
            raise ValueError("partition blocks overlap")
        seen |= b
    if seen != frozenset(ground):
        raise ValueError("partition blocks must cover the ground set")
    equiv = frozenset((x, y) for b in blocks for x in b for y in b)
    return FiniteUniformity(ground, _sorted_sets(_symmetric_supersets(ground, equiv)))


def discrete_uniformity(ground: Sequence[Hashable]) -> FiniteUniformity:
    return uniformity_from_partition(ground, [[x] for x in ground])


def indiscrete_uniformity(ground: Sequence[Hashable]) -> FiniteUniformity:
    return uniformity_from_partition(ground, [list(ground)])


def partitions(ground: Sequence[Hashable]) -> Iterator[tuple[frozenset, ...]]:
    """All set partitions, in a deterministic refinement-friendly order."""
    items = sorted(ground)
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for sub in partitions(rest):
        yield (frozenset((first,)),) + sub
        for i, block in enumerate(sub):
            yield sub[:i] + (block | {first},) + sub[i + 1 :]


def catalog(ground: Sequence[Hashable]) -> list[FiniteUniformity]:
    """Every uniformity on the ground set, one per partition.

    In this finite symmetric model the minimum entourage V0 is forced to
    be transitive (its composition witness W contains V0, so V0 o V0 is
    inside W o W inside V0), hence an equivalence relation; the family is
    exactly the symmetric supersets of V0.  Enumerating partitions is
    therefore exhaustive, not a sampling strategy.
    """
    ground = tuple(ground)
    models = [uniformity_from_partition(ground, p) for p in partitions(ground)]
    models.sort(key=lambda u: (len(u.entourages), [sorted(v) for v in u.entourages]))
    return models


# ---------------------------------------------------------------------------
# Convergence, Cauchy filters, and the equivalence relation between them


def ball(v: frozenset, x: Hashable) -> frozenset:
    return frozenset(b for (a, b) in v if a == x)


def converges_to(f: FiniteFilter, x: Hashable, u: FiniteUniformity) -> bool:
    """Every entourage ball around x is a member of the filter."""
    return all(ball(v, x) in f.sets for v in u.entourages)


@lru_cache(maxsize=65536)
def _product_pairs(a: frozenset, b: frozenset) -> frozenset:
    return frozenset(itertools.product(a, b))


def is_cauchy(f: FiniteFilter, u: FiniteUniformity) -> bool:
    """For every entourage, some member is small of that order."""
    members = f.members_sorted()
    for v in u.entourages:
        if not any(_product_pairs(m, m) <= v for m in members):
            return False
    return True


def relation_R(f1: FiniteFilter, f2: FiniteFilter, u: FiniteUniformity) -> bool:
    """For every entourage there are members A of f1 and B of f2 with
    A x B inside it."""
    m1 = f1.members_sorted()
    m2 = f2.members_sorted()
    for v in u.entourages:
        if not any(_product_pairs(a, b) <= v for a in m1 for b in m2):
            return False
    return True


def minimal_cauchy(f: FiniteFilter, u: FiniteUniformity, all_filters: Sequence[FiniteFilter] | None = None) -> FiniteFilter:
    """Intersection of the R-class of a Cauchy filter: the completion's
    canonical representative below every equivalent Cauchy filter."""
    if not is_cauchy(f, u):
        raise ValueError("minimal_cauchy needs a Cauchy filter")
    if all_filters is None:
        all_filters = enumerate_filters(f.ground)
    cls = [g for g in all_filters if is_cauchy(g, u) and relation_R(g, f, u)]
    out = intersect_filters(cls)
    if not is_cauchy(out, u):
        raise ValueError("intersection of the R-class failed to be Cauchy")
    for g in cls:
        if not out <= g:
            raise ValueError("minimal Cauchy filter is not below a class member")
    return out


# ---------------------------------------------------------------------------
# The exhaustive sweep


@dataclass(frozen=True)
class ModelReport:
    ground_size: int
    model_index: int
    n_entourages: int
    n_filters: int
    checks: tuple[tuple[str, int], ...]
    failures: tuple[str, ...]


@dataclass(frozen=True)
class FilterLawReport:
    max_size: int
    models: tuple[ModelReport, ...]
    filter_counts: tuple[tuple[int, int, int], ...]  # (size, found, expected)

    @property
    def passed(self) -> bool:
        return not self.first_counterexample

    @property
    def first_counterexample(self) -> str | None:
        for size, found, expected in self.filter_counts:
            if found != expected:
                return f"size {size}: {found} filters, expected {expected}"
        for m in self.models:
            if m.failures:
                return f"size {m.ground_size} model {m.model_index}: {m.failures[0]}"
        return None

    def totals(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for m in self.models:
            for name, count in m.checks:
                out[name] = out.get(name, 0) + count
        return out

    def summary_text(self) -> str:
        lines = [f"finite-model verification up to ground size {self.max_size}"]
        for size, found, expected in self.filter_counts:
            lines.append(f"  size {size}: {found} filters (expected {expected}), ok")
        lines.append(f"  models checked: {len(self.models)}")
        for name, count in sorted(self.totals().items()):
            lines.append(f"  {name}: {count} checks")
        cex = self.first_counterexample
        lines.append("  counterexamples: none" if cex is None else f"  FIRST COUNTEREXAMPLE: {cex}")
        return "\n".join(lines)


def _check_model(args: tuple[int, int, FiniteUniformity, list[FiniteFilter]]) -> ModelReport:
    size, index, u, fs = args
    failures: list[str] = []
    counts: dict[str, int] = {}

    def bump(name: str) -> None:
        counts[name] = counts.get(name, 0) + 1

    def fail(msg: str) -> None:
        if len(failures) < 8:
            failures.append(msg)

    def label(f: FiniteFilter) -> str:
        return "^" + "".join(str(x) for x in sorted(f.core))

    cauchy = [is_cauchy(f, u) for f in fs]
    conv = {x: [converges_to(f, x, u) for f in fs] for x in u.ground}
    r = [[relation_R(a, b, u) for b in fs] for a in fs]

    # intersections of filters are filters (pairs and triples)
    for combo in itertools.chain(itertools.combinations(range(len(fs)), 2), itertools.combinations(range(len(fs)), 3)):
        try:
            intersect_filters([fs[i] for i in combo])
        except ValueError as err:
            fail(f"intersection axioms: {err}")
        bump("intersections_are_filters")

    # intersections of filters converging to x converge to x
    for x in u.ground:
        pointing = [f for f, ok in zip(fs, conv[x]) if ok]
        for pair in itertools.combinations(pointing, 2):
            if not converges_to(intersect_filters(pair), x, u):
                fail(f"convergence lost at {x} for {label(pair[0])},{label(pair[1])}")
            bump("convergent_intersections")
        if pointing:
            if not converges_to(intersect_filters(pointing), x, u):
                fail(f"convergence lost at {x} for the full convergent family")
            bump("convergent_intersections")

    # convergence implies Cauchy
    for i, f in enumerate(fs):
        if any(conv[x][i] for x in u.ground) and not cauchy[i]:
            fail(f"{label(f)} converges but is not Cauchy")
        bump("convergent_implies_cauchy")

    # R holds exactly when both filters and their intersection are Cauchy
    for i, j in itertools.product(range(len(fs)), repeat=2):
        both = cauchy[i] and cauchy[j] and is_cauchy(intersect_filters([fs[i], fs[j]]), u)
        if r[i][j] != both:
            fail(f"R mismatch for {label(fs[i])},{label(fs[j])}: R={r[i][j]} cauchy-criterion={both}")
        bump("r_equivalence_criterion")

    # R is an equivalence on the Cauchy filters
    for i in range(len(fs)):
        if cauchy[i] and not r[i][i]:
            fail(f"R not reflexive at {label(fs[i])}")
        bump("r_reflexive")
    for i, j in itertools.combinations(range(len(fs)), 2):
        if r[i][j] != r[j][i]:
            fail(f"R not symmetric at {label(fs[i])},{label(fs[j])}")
        bump("r_symmetric")
    for i, j, k in itertools.product(range(len(fs)), repeat=3):
        if cauchy[i] and cauchy[j] and cauchy[k] and r[i][j] and r[j][k] and not r[i][k]:
            fail(f"R not transitive at {label(fs[i])},{label(fs[j])},{label(fs[k])}")
        bump("r_transitive")

    # the class intersection is a minimal equivalent Cauchy filter
    for i, f in enumerate(fs):
        if not cauchy[i]:
            continue
        cls = [fs[j] for j in range(len(fs)) if cauchy[j] and r[i][j]]
        minimal = intersect_filters(cls)
        if not is_cauchy(minimal, u):
            fail(f"class intersection of {label(f)} is not Cauchy")
        if not relation_R(minimal, f, u):
            fail(f"class intersection of {label(f)} left its class")
        for g in cls:
            if not minimal <= g:
                fail(f"class intersection of {label(f)} not below {label(g)}")
        if minimal != minimal_cauchy(f, u, fs):
            fail(f"minimal_cauchy disagrees with the class intersection at {label(f)}")
        # cross-check: the up-set of the union of class cores
        union_core = frozenset().union(*(g.core for g in cls))
        if minimal != principal_filter(u.ground, union_core):
            fail(f"class intersection of {label(f)} is not the up-set of the union of cores")
        bump("minimal_cauchy")

    checks = tuple(sorted(counts.items()))
    return ModelReport(size, index, len(u.entourages), len(fs), checks, tuple(failures))


def verify_filter_laws(max_size: int = 4) -> FilterLawReport:
    """Exhaustively check the convergence/Cauchy statements on every
    uniformity model with ground size 1..max_size."""
    if not (1 <= max_size <= _MAX_GROUND):
        raise ValueError(f"max_size must be between 1 and {_MAX_GROUND}")
    filter_counts = []
    jobs = []
    for size in range(1, max_size + 1):
        ground = tuple(range(size))
        fs = enumerate_filters(ground)
        filter_counts.append((size, len(fs), 2**size - 1))
        for index, u in enumerate(catalog(ground)):
            jobs.append((size, index, u, fs))
    models = tuple(parallel_map(_check_model, jobs))
    return FilterLawReport(max_size, models, tuple(filter_counts))
