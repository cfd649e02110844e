"""Monte Carlo benchmark: methods x rate settings x sample sizes x replicates.

Per setting and replicate, one true rate vector is drawn and reused for
every sample size, so MSE comparisons across sizes are paired.  All seeds
derive from the master seed plus the cell coordinates; reruns are
byte-identical apart from the runtime column.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimators import FLAG_OK, le_xi, mvwa, nem, pcem
from .simulator import SimConfig, sample_theta, simulate
from .statistics import internal_views
from .topology import GeneralNetwork

CSV_HEADER = "setting,beta_a,beta_b,n,replicate,method,mse,runtime_ms,iterations,violations"

DEFAULT_METHODS = ("le-xi", "pcem", "mvwa")


class GridError(ValueError):
    """Raised for malformed grid files."""


@dataclass(frozen=True)
class GridCell:
    beta_a: float
    beta_b: float
    probes: int
    replicates: int
    methods: tuple[str, ...]

    @property
    def setting(self) -> str:
        return f"Beta({self.beta_a:g},{self.beta_b:g})"


@dataclass
class ExperimentGrid:
    beta_settings: list[tuple[float, float]]
    probe_counts: list[int]
    replicates: int = 100
    methods: tuple[str, ...] = DEFAULT_METHODS
    master_seed: int = 0
    explicit_cells: list[GridCell] = field(default_factory=list)

    def __post_init__(self):
        if not self.explicit_cells:
            if not self.beta_settings or not self.probe_counts:
                raise GridError("grid needs at least one setting and one probe count")
            if self.replicates < 1:
                raise GridError("replicates must be >= 1")

    def cells(self) -> list[GridCell]:
        if self.explicit_cells:
            return list(self.explicit_cells)
        return [GridCell(a, b, n, self.replicates, tuple(self.methods))
                for a, b in self.beta_settings for n in self.probe_counts]


def parse_grid(text: str, master_seed: int = 0) -> ExperimentGrid:
    """Parse grid files: one 'cell <a> <b> <n> <replicates> <methods>' per line."""
    cells = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] != "cell" or len(tok) != 6:
            raise GridError(
                f"line {lineno}: expected 'cell <beta_a> <beta_b> <n> <reps> <methods>'")
        try:
            a, b = float(tok[1]), float(tok[2])
            n, reps = int(tok[3]), int(tok[4])
        except ValueError:
            raise GridError(f"line {lineno}: malformed number") from None
        methods = tuple(tok[5].split(","))
        bad = [m for m in methods if m not in ("le-xi", "pcem", "nem", "mvwa")]
        if bad:
            raise GridError(f"line {lineno}: unknown methods {bad}")
        cells.append(GridCell(a, b, n, reps, methods))
    if not cells:
        raise GridError("grid file declares no cells")
    return ExperimentGrid([], [], methods=(), master_seed=master_seed,
                          explicit_cells=cells)


@dataclass
class ExperimentReport:
    rows: list[dict]

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for row in self.rows:
            mse_txt = "" if row["mse"] is None else repr(row["mse"])
            lines.append(
                f"{row['setting']},{row['beta_a']:g},{row['beta_b']:g},{row['n']},"
                f"{row['replicate']},{row['method']},{mse_txt},"
                f"{row['runtime_ms']:.3f},{row['iterations']},{row['violations']}")
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        cells: dict[tuple, list[dict]] = {}
        for row in self.rows:
            cells.setdefault((row["setting"], row["n"], row["method"]), []).append(row)
        lines = [f"{'setting':<18}{'n':>6}{'method':>8}{'mean_mse':>14}"
                 f"{'mean_ms':>10}{'violations':>12}"]
        for key in sorted(cells, key=lambda k: (k[0], k[1], k[2])):
            rows = cells[key]
            mses = [r["mse"] for r in rows if r["mse"] is not None]
            mean_mse = sum(mses) / len(mses) if mses else float("nan")
            mean_ms = sum(r["runtime_ms"] for r in rows) / len(rows)
            viol = sum(r["violations"] for r in rows)
            lines.append(f"{key[0]:<18}{key[1]:>6}{key[2]:>8}{mean_mse:>14.4e}"
                         f"{mean_ms:>10.2f}{viol:>12}")
        return "\n".join(lines)


def mse(theta_hat: dict[int, float | None], theta_true) -> float:
    """Mean squared error over the links estimated on both sides."""
    truth = getattr(theta_true, "theta", theta_true)
    common = [i for i, v in theta_hat.items() if v is not None and i in truth]
    if not common:
        raise ValueError("no estimable links in common")
    return sum((theta_hat[i] - truth[i]) ** 2 for i in common) / len(common)


def _theta_seed(master: int, cell: GridCell, replicate: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        (master, int(cell.beta_a * 1e6), int(cell.beta_b * 1e6), replicate))


def _data_seed(master: int, cell: GridCell, replicate: int) -> int:
    ss = np.random.SeedSequence(
        (master, int(cell.beta_a * 1e6), int(cell.beta_b * 1e6), cell.probes, replicate))
    return int(ss.generate_state(1)[0])


def _run_methods(net: GeneralNetwork, cell: GridCell, replicate: int,
                 master_seed: int) -> list[dict]:
    rng = np.random.Generator(np.random.Philox(seed=_theta_seed(master_seed, cell, replicate)))
    theta_true = sample_theta(cell.beta_a, cell.beta_b, net, rng)
    cfg = SimConfig(net, cell.probes, _data_seed(master_seed, cell, replicate),
                    replicate=replicate, beta=(cell.beta_a, cell.beta_b))
    patterns = simulate(cfg, theta_true)
    views, report = internal_views(patterns, net)
    out = []
    for method in cell.methods:
        t0 = time.perf_counter()
        try:
            if method == "le-xi":
                res = le_xi(views, net, report=report)
            elif method == "pcem":
                res = pcem(views, net, report=report)
            elif method == "nem":
                res = nem(patterns, net)
            elif method == "mvwa":
                res = mvwa(patterns, net)
            else:
                raise ValueError(f"unknown method {method!r}")
            err = mse(res.theta_hat, theta_true)
            iters = res.iterations
            violations = sum(1 for f in res.flags.values() if f != FLAG_OK)
        except ValueError as exc:
            out.append({"setting": cell.setting, "beta_a": cell.beta_a,
                        "beta_b": cell.beta_b, "n": cell.probes,
                        "replicate": replicate, "method": method, "mse": None,
                        "runtime_ms": (time.perf_counter() - t0) * 1e3,
                        "iterations": 0, "violations": -1, "error": str(exc)})
            continue
        out.append({"setting": cell.setting, "beta_a": cell.beta_a,
                    "beta_b": cell.beta_b, "n": cell.probes,
                    "replicate": replicate, "method": method, "mse": err,
                    "runtime_ms": (time.perf_counter() - t0) * 1e3,
                    "iterations": iters, "violations": violations})
    return out


def run_grid(grid: ExperimentGrid, net: GeneralNetwork,
             workers: int = 1) -> ExperimentReport:
    """Run every (cell, replicate, method) and return ordered rows."""
    tasks = [(cell, rep) for cell in grid.cells() for rep in range(cell.replicates)]

    def run(task):
        cell, rep = task
        return _run_methods(net, cell, rep, grid.master_seed)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, tasks))
    else:
        chunks = [run(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r["setting"], r["n"], r["replicate"], r["method"]))
    return ExperimentReport(rows)
