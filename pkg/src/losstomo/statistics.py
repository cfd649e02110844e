"""Observation handling: pattern tables, internal states and internal views.

Receiver observations are kept collapsed: per tree, a map from the receiver
bit pattern to the number of probes that produced it.  Everything the
estimators consume is derived from those counts.

The internal state of a link for one probe is 1 when some receiver below
the link saw the probe, which proves the probe passed the link.  Summing
internal states over probes gives the internal view {n_i(1), n_i(0)}: the
count of confirmed passes, and the count of probes confirmed at the parent
but unseen below the link.  Internal views add across trees for links
shared by several trees.
"""

from __future__ import annotations

from dataclasses import dataclass

from .topology import GeneralNetwork, MulticastTree


class DataError(ValueError):
    """Raised when observation data is malformed or inconsistent."""


@dataclass
class PatternTable:
    """Collapsed receiver observations, one count map per tree.

    Bit order within a pattern is the ascending leaf link ids of the tree,
    leftmost bit for the smallest id.
    """

    name: str
    probes: dict[int, int]                      # tree_id -> number of probes
    receivers: dict[int, tuple[int, ...]]       # tree_id -> leaf link ids, ascending
    counts: dict[int, dict[str, int]]           # tree_id -> bit pattern -> count

    def validate(self):
        for k, n in self.probes.items():
            pats = self.counts.get(k, {})
            width = len(self.receivers[k])
            total = 0
            for bits, c in pats.items():
                if len(bits) != width or set(bits) - {"0", "1"}:
                    raise DataError(f"tree {k}: bad pattern {bits!r}")
                if c < 1:
                    raise DataError(f"tree {k}: pattern {bits} has count {c}")
                total += c
            if total != n:
                raise DataError(f"tree {k}: pattern counts sum to {total}, expected {n}")


@dataclass(frozen=True)
class InternalStateVector:
    """Link states implied by one probe's receiver pattern.

    confirmed: links the probe provably passed.
    dark_tops: links whose parent was provably reached while the whole
               subtree below stayed dark (the topmost unconfirmed links).
    unknown:   links below a dark top; they carry no likelihood term.
    """

    y: dict[int, int]
    confirmed: tuple[int, ...]
    dark_tops: tuple[int, ...]
    unknown: tuple[int, ...]


def internal_states(bits: str, tree: MulticastTree) -> InternalStateVector:
    """Compute per-link internal states for one receiver pattern."""
    if len(bits) != len(tree.leaves):
        raise DataError(
            f"pattern {bits!r} has {len(bits)} bits, tree {tree.tree_id} "
            f"has {len(tree.leaves)} receivers")
    y: dict[int, int] = {}
    for pos, leaf in enumerate(tree.leaves):
        y[leaf] = 1 if bits[pos] == "1" else 0
    for i in reversed(tree.order):
        kids = tree.children[i]
        if kids:
            y[i] = 1 if any(y[c] for c in kids) else 0
    confirmed, dark_tops, unknown = [], [], []
    for i in tree.order:
        y_up = 1 if i == tree.root_link else y[tree.parent[i]]
        if y[i]:
            confirmed.append(i)
        elif y_up:
            dark_tops.append(i)
        else:
            unknown.append(i)
    return InternalStateVector(y, tuple(confirmed), tuple(dark_tops), tuple(unknown))


def collapse_patterns(records: dict[int, list[str]], net: GeneralNetwork,
                      name: str = "data") -> PatternTable:
    """Aggregate raw per-probe bit vectors into a pattern table."""
    probes, receivers, counts = {}, {}, {}
    for k, rows in sorted(records.items()):
        tree = net.tree_by_id[k]
        width = len(tree.leaves)
        table: dict[str, int] = {}
        for bits in rows:
            if len(bits) != width or set(bits) - {"0", "1"}:
                raise DataError(f"tree {k}: bad record {bits!r}")
            table[bits] = table.get(bits, 0) + 1
        probes[k] = len(rows)
        receivers[k] = tree.leaves
        counts[k] = table
    return PatternTable(name, probes, receivers, counts)


@dataclass
class InternalView:
    """Per-link pass/unseen counts, per tree and aggregated across trees.

    r is the per-link confirmed pass fraction n1/(n1+n0), or None when the
    link received no information at all.
    """

    per_tree_n1: dict[int, dict[int, int]]
    per_tree_n0: dict[int, dict[int, int]]
    n1: dict[int, int]
    n0: dict[int, int]
    r: dict[int, float | None]
    probes: dict[int, int]


@dataclass
class RegularityReport:
    """Data conditions under which the interior MLE exists and is unique.

    all_ok requires, for every link: some confirmed passes, some confirmed
    non-passes, and the brother-set pass counts to strictly exceed the
    parent pass counts (no degenerate fixed point).
    """

    n1_zero: frozenset[int]
    n0_zero: frozenset[int]
    no_information: frozenset[int]
    brother_sum_violation: frozenset[int]
    all_ok: bool

    def flagged(self) -> frozenset[int]:
        return self.n1_zero | self.n0_zero | self.no_information | self.brother_sum_violation


def internal_views(patterns: PatternTable, net: GeneralNetwork
                   ) -> tuple[InternalView, RegularityReport]:
    """Internal views from a pattern table, plus the regularity report.

    Cost is proportional to (distinct patterns) x (links); probes never get
    replayed individually.
    """
    patterns.validate()
    per_tree_n1: dict[int, dict[int, int]] = {}
    per_tree_n0: dict[int, dict[int, int]] = {}
    for k, table in patterns.counts.items():
        tree = net.tree_by_id[k]
        n1 = {i: 0 for i in tree.links}
        for bits, c in table.items():
            states = internal_states(bits, tree)
            for i in states.confirmed:
                n1[i] += c
        n0 = {}
        for i in tree.links:
            up = patterns.probes[k] if i == tree.root_link else n1[tree.parent[i]]
            n0[i] = up - n1[i]
        per_tree_n1[k] = n1
        per_tree_n0[k] = n0

    agg1 = {i: 0 for i in net.links}
    agg0 = {i: 0 for i in net.links}
    for k in patterns.counts:
        for i, v in per_tree_n1[k].items():
            agg1[i] += v
        for i, v in per_tree_n0[k].items():
            agg0[i] += v
    r: dict[int, float | None] = {}
    for i in net.links:
        tot = agg1[i] + agg0[i]
        r[i] = agg1[i] / tot if tot > 0 else None

    view = InternalView(per_tree_n1, per_tree_n0, agg1, agg0, r, dict(patterns.probes))
    return view, regularity_report(view, net)


def regularity_report(view: InternalView, net: GeneralNetwork) -> RegularityReport:
    n1_zero, n0_zero, no_info, brother_bad = set(), set(), set(), set()
    for i in net.links:
        if view.n1[i] + view.n0[i] == 0:
            no_info.add(i)
            continue
        if view.n1[i] == 0:
            n1_zero.add(i)
        if view.n0[i] == 0:
            n0_zero.add(i)
    for brothers in net.brother_sets:
        parents = net.parent_links[brothers[0]]
        attempts = sum(view.n1[p] for p in parents)
        passes = sum(view.n1[j] for j in brothers)
        if attempts > 0 and attempts >= passes:
            brother_bad.update(brothers)
    all_ok = not (n1_zero or n0_zero or no_info or brother_bad)
    return RegularityReport(frozenset(n1_zero), frozenset(n0_zero),
                            frozenset(no_info), frozenset(brother_bad), all_ok)


def sufficiency_check(patterns_a: PatternTable, patterns_b: PatternTable,
                      net: GeneralNetwork, points: int = 100, seed: int = 20240,
                      tol: float = 1e-9) -> bool:
    """True when the two tables carry the same information about the rates.

    The tables must produce identical internal views, and their full
    log-likelihoods (per-pattern sums, not the reduced form) may differ only
    by an additive constant across random interior rate vectors.
    """
    import random

    from .likelihood import per_probe_loglik

    view_a, _ = internal_views(patterns_a, net)
    view_b, _ = internal_views(patterns_b, net)
    if view_a.n1 != view_b.n1 or view_a.n0 != view_b.n0:
        return False

    def full_loglik(patterns: PatternTable, theta: dict[int, float]) -> float:
        total = 0.0
        for k, table in patterns.counts.items():
            for bits, c in table.items():
                total += c * per_probe_loglik(bits, k, theta, net)
        return total

    rng = random.Random(seed)
    diffs = []
    for _ in range(points):
        theta = {i: rng.uniform(0.05, 0.95) for i in net.links}
        diffs.append(full_loglik(patterns_a, theta) - full_loglik(patterns_b, theta))
    spread = max(diffs) - min(diffs)
    scale = 1.0 + max(abs(d) for d in diffs)
    return spread <= tol * scale


def parse_data(text: str, net: GeneralNetwork) -> PatternTable:
    """Parse the line-oriented observation format.

    Grammar::

        data <name>
        probes <tree_id> <n_k>
        receivers <tree_id> : <leaf_link_id> ...
        pattern <tree_id> <bitstring> <count>
    """
    name = None
    probes: dict[int, int] = {}
    receivers: dict[int, tuple[int, ...]] = {}
    counts: dict[int, dict[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "data":
                if len(tok) != 2 or name is not None:
                    raise DataError("exactly one 'data <name>' line required")
                name = tok[1]
            elif tok[0] == "probes":
                if len(tok) != 3:
                    raise DataError("'probes' takes <tree_id> <count>")
                probes[int(tok[1])] = int(tok[2])
            elif tok[0] == "receivers":
                if len(tok) < 4 or tok[2] != ":":
                    raise DataError("'receivers' takes <tree_id> : <leaf links>")
                receivers[int(tok[1])] = tuple(int(x) for x in tok[3:])
            elif tok[0] == "pattern":
                if len(tok) != 4:
                    raise DataError("'pattern' takes <tree_id> <bits> <count>")
                k, bits, c = int(tok[1]), tok[2], int(tok[3])
                tree_counts = counts.setdefault(k, {})
                if bits in tree_counts:
                    raise DataError(f"duplicate pattern {bits} for tree {k}")
                tree_counts[bits] = c
            else:
                raise DataError(f"unknown keyword {tok[0]!r}")
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
        except ValueError:
            raise DataError(f"line {lineno}: malformed integer in {line!r}") from None
    if name is None:
        raise DataError("missing 'data' line")
    for k in probes:
        if k not in net.tree_by_id:
            raise DataError(f"unknown tree {k}")
        expected = net.tree_by_id[k].leaves
        if k not in receivers:
            raise DataError(f"missing receivers line for tree {k}")
        if receivers[k] != expected:
            raise DataError(
                f"tree {k}: receivers {receivers[k]} do not match leaf links {expected}")
        counts.setdefault(k, {})
    if set(receivers) - set(probes) or set(counts) - set(probes):
        raise DataError("tree mentioned without a 'probes' line")
    table = PatternTable(name, probes, receivers, counts)
    table.validate()
    return table


def serialize_data(patterns: PatternTable) -> str:
    lines = [f"data {patterns.name}"]
    for k in sorted(patterns.probes):
        lines.append(f"probes {k} {patterns.probes[k]}")
        ids = " ".join(str(i) for i in patterns.receivers[k])
        lines.append(f"receivers {k} : {ids}")
    for k in sorted(patterns.counts):
        for bits in sorted(patterns.counts[k]):
            lines.append(f"pattern {k} {bits} {patterns.counts[k][bits]}")
    return "\n".join(lines) + "\n"
