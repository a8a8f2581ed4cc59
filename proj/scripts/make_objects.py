#!/usr/bin/env python3
"""Writes the shipped desk-scale object meshes and manifests into data/objects."""
import math
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "objects"


def prism(polygon, height, fan=0):
    """Closed prism over a counter-clockwise polygon; caps are fans around vertex `fan`."""
    n = len(polygon)
    verts = [(x, y, 0.0) for x, y in polygon] + [(x, y, height) for x, y in polygon]
    faces = []
    order = [(fan + k) % n for k in range(n)]
    for a, b in zip(order[1:-1], order[2:]):
        faces.append((order[0], b, a))
        faces.append((n + order[0], n + a, n + b))
    for i in range(n):
        j = (i + 1) % n
        faces.append((i, j, n + j))
        faces.append((i, n + j, n + i))
    return verts, faces


def rect(w, d):
    return [(-w / 2, -d / 2), (w / 2, -d / 2), (w / 2, d / 2), (-w / 2, d / 2)]


def write(name, mesh, manifest):
    verts, faces = mesh
    with open(OUT / f"{name}.obj", "w") as f:
        f.write(f"# {name}\n")
        for v in verts:
            f.write("v {:.9g} {:.9g} {:.9g}\n".format(*v))
        for a, b, c in faces:
            f.write(f"f {a + 1} {b + 1} {c + 1}\n")
    with open(OUT / f"{name}.object", "w") as f:
        f.write(f"id = {name}\nmesh = {name}.obj\n")
        for k, v in manifest.items():
            f.write(f"{k} = {v}\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    # Stored at unit size, scaled to 8 cm by the manifest.
    write("unit_cube", prism(rect(1.0, 1.0), 1.0), {"scale": 0.08, "mu_s": 0.3})
    write("low_box", prism(rect(0.12, 0.08), 0.05), {"scale": 1.0, "mu_s": 0.3})
    circle = [(0.035 * math.cos(2 * math.pi * k / 48), 0.035 * math.sin(2 * math.pi * k / 48)) for k in range(48)]
    write("cylinder", prism(circle, 0.10), {"scale": 1.0, "mu_s": 0.3})
    l_shape = [(0, 0), (0.10, 0), (0.10, 0.04), (0.04, 0.04), (0.04, 0.10), (0, 0.10)]
    write("l_shape", prism(l_shape, 0.06, fan=3), {"scale": 1.0, "mu_s": 0.3})
    write("tall_prism", prism(rect(0.05, 0.05), 0.25), {"scale": 1.0, "mu_s": 0.3})
    write("flat_plate", prism(rect(0.14, 0.10), 0.015), {"scale": 1.0, "mu_s": 0.3})


if __name__ == "__main__":
    main()
