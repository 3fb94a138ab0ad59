#!/usr/bin/env python3
"""Generate the 2D stirrer spatial mesh fixture in stmesh format.

Geometry: circular tank of diameter 6.0 centred at the origin, enclosing a
four-bladed stirrer (cross) with vertical span 5.2, horizontal span 4.0 and
blade thickness 0.3.  Boundary tags: ``outer_wall`` and ``stirrer``.

Requires the ``triangle`` package (pip install triangle).  The generated
fixtures are committed under data/, so this only needs re-running when the
resolution changes.
"""
import argparse
import math

import numpy as np
import triangle

RADIUS = 3.0
HALF_THICK = 0.15
HALF_SPAN_V = 2.6
HALF_SPAN_H = 2.0


def cross_polygon():
    a, v, h = HALF_THICK, HALF_SPAN_V, HALF_SPAN_H
    return [(a, -v), (a, -a), (h, -a), (h, a), (a, a), (a, v),
            (-a, v), (-a, a), (-h, a), (-h, -a), (-a, -a), (-a, -v)]


def subdivide(p, q, spacing):
    n = max(1, int(math.ceil(math.dist(p, q) / spacing)))
    return [(p[0] + (q[0] - p[0]) * k / n, p[1] + (q[1] - p[1]) * k / n) for k in range(n)]


def build(n_outer, cross_spacing, max_area):
    pts, segs, marks = [], [], []
    for k in range(n_outer):
        th = 2.0 * math.pi * k / n_outer
        pts.append((RADIUS * math.cos(th), RADIUS * math.sin(th)))
    for k in range(n_outer):
        segs.append((k, (k + 1) % n_outer))
        marks.append(1)
    base = len(pts)
    poly = cross_polygon()
    ring = []
    for i, p in enumerate(poly):
        ring.extend(subdivide(p, poly[(i + 1) % len(poly)], cross_spacing))
    pts.extend(ring)
    for k in range(len(ring)):
        segs.append((base + k, base + (k + 1) % len(ring)))
        marks.append(2)
    tri = triangle.triangulate(
        {"vertices": np.array(pts), "segments": np.array(segs),
         "segment_markers": np.array(marks), "holes": np.array([(0.0, 0.0)])},
        "pq30a%gY" % max_area)
    return tri


def boundary_facets(tri):
    """Boundary edges with tags, recovered from edge multiplicity and radius."""
    count = {}
    for t in tri["triangles"]:
        for i in range(3):
            e = tuple(sorted((int(t[i]), int(t[(i + 1) % 3]))))
            count[e] = count.get(e, 0) + 1
    v = tri["vertices"]
    out = []
    for e, c in sorted(count.items()):
        if c != 1:
            continue
        mid = 0.5 * (v[e[0]] + v[e[1]])
        tag = "outer_wall" if np.hypot(*mid) > 0.5 * (RADIUS + HALF_SPAN_V) else "stirrer"
        out.append((e, tag))
    return out


def write(path, tri):
    v, t = tri["vertices"], tri["triangles"]
    facets = boundary_facets(tri)
    with open(path, "w") as f:
        f.write("# 2D stirrer: tank D=6.0, spans 5.2/4.0, blade thickness 0.3\n")
        f.write("stmesh 2 %d %d %d\n" % (len(v), len(t), len(facets)))
        for p in v:
            f.write("%.17g %.17g\n" % (p[0], p[1]))
        for c in t:
            f.write("%d %d %d\n" % tuple(int(i) for i in c))
        for (a, b), tag in facets:
            f.write("%d %d %s\n" % (a, b, tag))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--outer", type=int, default=64, help="segments on the tank wall")
    ap.add_argument("--cross-spacing", type=float, default=0.25)
    ap.add_argument("--max-area", type=float, default=0.08)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()
    tri = build(args.outer, args.cross_spacing, args.max_area)
    write(args.out, tri)
    print("%s: %d nodes, %d triangles" % (args.out, len(tri["vertices"]), len(tri["triangles"])))


if __name__ == "__main__":
    main()
