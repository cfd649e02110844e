#!/usr/bin/env python3
"""Regenerate the text fixtures under fixtures/ from the canonical builders."""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from losstomo import fixtures
from losstomo.topology import serialize_topology

STAR_DATA = """\
data star-fixture
probes 1 5
receivers 1 : 2 3
pattern 1 11 2
pattern 1 10 1
pattern 1 01 1
pattern 1 00 1
"""

DEFAULT_GRID = """\
# method-comparison grid: Beta settings x sample sizes, 100 replicates each
cell 1 100 50 100 le-xi,pcem,mvwa
cell 1 100 100 100 le-xi,pcem,mvwa
cell 1 100 200 100 le-xi,pcem,mvwa
cell 1 100 500 100 le-xi,pcem,mvwa
cell 5 1000 50 100 le-xi,pcem,mvwa
cell 5 1000 100 100 le-xi,pcem,mvwa
cell 5 1000 200 100 le-xi,pcem,mvwa
cell 5 1000 500 100 le-xi,pcem,mvwa
cell 2 1000 50 100 le-xi,pcem,mvwa
cell 2 1000 100 100 le-xi,pcem,mvwa
cell 2 1000 200 100 le-xi,pcem,mvwa
cell 2 1000 500 100 le-xi,pcem,mvwa
cell 1 1000 50 100 le-xi,pcem,mvwa
cell 1 1000 100 100 le-xi,pcem,mvwa
cell 1 1000 200 100 le-xi,pcem,mvwa
cell 1 1000 500 100 le-xi,pcem,mvwa
"""


def main() -> int:
    out = ROOT / "fixtures"
    out.mkdir(exist_ok=True)
    nets = {
        "star3.topo": fixtures.star3(),
        "toy7.topo": fixtures.toy7(),
        "twotree12.topo": fixtures.twotree12(),
        "layered49.topo": fixtures.layered49(),
    }
    for name, net in nets.items():
        (out / name).write_text(serialize_topology(net), encoding="utf-8")
        print(f"wrote fixtures/{name}")
    (out / "star3.data").write_text(STAR_DATA, encoding="utf-8")
    (out / "table_grid.txt").write_text(DEFAULT_GRID, encoding="utf-8")
    print("wrote fixtures/star3.data fixtures/table_grid.txt")
    return 0


if __name__ == "__main__":
    sys.exit(main())
