#!/usr/bin/env python3
"""Emit the bundled garr48 reference topology.

48 PoPs arranged like the Italian research backbone: a high-capacity core
ring with chords, dual-homed metro PoPs, and single- or dual-homed access
sites. Capacities are tiered 2.5G / 1G / 622M / 155M / 34M. The file this
writes ships as package data; rerun after editing to regenerate it.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gospf.graph import Link, Topology, compute_mcst, write_topology

G2500 = 2_500_000_000
G1000 = 1_000_000_000
M622 = 622_000_000
M155 = 155_000_000
M34 = 34_000_000

NODES = {
    1: "MI1", 2: "MI2", 3: "BO", 4: "RM1", 5: "RM2", 6: "NA",
    7: "TO", 8: "PD", 9: "GE", 10: "FI", 11: "PI", 12: "BA",
    13: "CT", 14: "PA", 15: "CA", 16: "TS", 17: "VE", 18: "AN",
    19: "PG", 20: "AQ", 21: "PE", 22: "CB", 23: "SA", 24: "LE",
    25: "CS", 26: "RC", 27: "ME", 28: "SS", 29: "MT", 30: "PZ",
    31: "FG", 32: "TA", 33: "BR", 34: "PR", 35: "MO", 36: "FE",
    37: "RA", 38: "UR", 39: "MC", 40: "TE", 41: "VT", 42: "FR",
    43: "LT", 44: "CE", 45: "BN", 46: "AV", 47: "TN", 48: "UD",
}

# (a, b, capacity) in deliberate order; link ids are assigned sequentially,
# which (with the ascending-id tie break) pins the spanning tree layout.
EDGES = [
    # 2.5G core ring plus chords: MI1 MI2 BO RM1 RM2 NA
    (1, 2, G2500), (1, 3, G2500), (2, 3, G2500), (3, 4, G2500),
    (4, 5, G2500), (4, 6, G2500), (5, 6, G2500),
    # 1G metro dual homing: TO PD GE FI PI BA CT TS VE
    (7, 1, G1000), (7, 2, G1000),
    (8, 1, G1000), (8, 3, G1000),
    (9, 1, G1000), (9, 7, M622),
    (10, 3, G1000), (10, 4, G1000),
    (11, 10, G1000), (11, 9, M622),
    (12, 6, G1000), (12, 4, M622),
    (13, 6, G1000), (13, 14, G1000),
    (14, 6, G1000),
    (16, 8, G1000), (16, 17, G1000),
    (17, 8, G1000), (17, 2, M622),
    # 622M regional dual homing
    (15, 4, M622), (15, 6, M622),
    (18, 3, M622), (18, 4, M622),
    (19, 4, M622), (19, 10, M622),
    (47, 8, M622), (47, 17, M155),
    (48, 16, M622), (48, 17, M155),
    (34, 1, M622), (34, 3, M155),
    (35, 3, M622), (35, 1, M155),
    # 155M access, mostly dual homed onto their regions
    (20, 4, M155), (20, 21, M155),
    (21, 5, M155),
    (22, 6, M155), (22, 21, M34),
    (23, 6, M155), (23, 46, M34),
    (25, 6, M155), (25, 26, M155),
    (26, 27, M155),
    (27, 13, M155),
    (28, 15, M155),
    # PZ star: one 155M uplink aggregating five leaves, MT dual homed to BA
    (30, 6, M155),
    (24, 30, M155), (29, 30, M155), (31, 30, M155),
    (32, 30, M155), (33, 30, M155),
    (29, 12, M155),
    (24, 12, M34), (31, 6, M34), (33, 12, M34),
    (36, 3, M155), (36, 37, M34),
    (37, 3, M155),
    (38, 18, M155), (38, 19, M34),
    (39, 18, M155),
    (40, 21, M155), (40, 20, M34),
    (41, 4, M155),
    (42, 4, M155), (42, 43, M34),
    (43, 5, M155),
    (44, 6, M155), (44, 45, M34),
    (45, 6, M155),
    (46, 6, M155),
]


def build() -> Topology:
    links = [Link(i, a, b, float(cap)) for i, (a, b, cap) in enumerate(EDGES, start=1)]
    return Topology(NODES, links)


def main() -> None:
    topo = build()
    tree = compute_mcst(topo)
    print(f"nodes={len(topo.nodes)} links={len(topo.links)} tree={len(tree.edges)}")
    assert len(topo.nodes) == 48, len(topo.nodes)
    assert len(topo.links) == 78, len(topo.links)
    assert len(tree.edges) == 47

    # PZ star invariants: uplink and leaf links on the tree, relief cut.
    uplink = topo.link_between(30, 6)
    relief = topo.link_between(29, 12)
    assert uplink in tree.edges and relief not in tree.edges
    for leaf in (24, 29, 31, 32, 33):
        assert topo.link_between(leaf, 30) in tree.edges, leaf

    out = Path(__file__).resolve().parent.parent / "src" / "gospf" / "data" / "garr48.topo"
    out.parent.mkdir(parents=True, exist_ok=True)
    header = ("# garr48: 48-node research-backbone-like reference topology\n"
              "# capacities tiered 2.5G / 1G / 622M / 155M / 34M\n")
    out.write_text(header + write_topology(topo))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
