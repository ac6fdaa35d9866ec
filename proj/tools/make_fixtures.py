#!/usr/bin/env python3
"""Writes the FOURBAR and SPATIAL5 model files into data/.

Links are solid cuboids with the center of mass halfway along x. Inertial
entries are about the joint origin. reference_theta holds the ground truth.
"""
import json
import os
import sys

import numpy as np


def cuboid(mass, size, com):
    sx, sy, sz = (s * s for s in size)
    ic = np.diag([mass * (sy + sz) / 12.0, mass * (sx + sz) / 12.0, mass * (sx + sy) / 12.0])
    c = np.asarray(com, dtype=float)
    L = ic + mass * (c @ c * np.eye(3) - np.outer(c, c))
    return [L[0, 0], L[0, 1], L[0, 2], L[1, 1], L[1, 2], L[2, 2], *(mass * c), mass]


def link(name, parent, axis, xyz, actuated, pos, vel=10.0):
    return {"name": name, "parent": parent, "axis": axis,
            "origin": {"xyz": xyz, "rpy": [0.0, 0.0, 0.0]},
            "actuated": actuated, "limits": {"pos": pos, "vel": vel}}


def theta(bodies, friction):
    out = []
    for m, size in bodies:
        out += cuboid(m, size, [size[0] / 2.0, 0.0, 0.0])
    for f in friction:
        out += f
    return [float(v) for v in out]


PLANE = [0.0, -1.0, 0.0]
LOOP = [
    link("crank", -1, PLANE, [0.0, 0.0, 0.0], True, [-2.0, 2.0]),
    link("coupler", 0, PLANE, [1.0, 0.0, 0.0], False, [-3.1, 3.1]),
    link("rocker", -1, PLANE, [2.0, 0.0, 0.0], False, [0.9, 2.8]),
]
CLOSURE = [{"body_p": 1, "point_p": [2.0, 0.0, 0.0], "body_s": 2, "point_s": [1.5, 0.0, 0.0], "axes": "xz"}]
LOOP_BODIES = [(1.0, [1.0, 0.06, 0.04]), (1.5, [2.0, 0.06, 0.04]), (1.2, [1.5, 0.06, 0.04])]
LOOP_FRICTION = [[0.2, 0.1, 0.05, 0.03], [0.1, 0.05, 0.02, -0.01], [0.15, 0.08, 0.03, 0.02]]
HOME = [0.0, 0.8127555613686607, 1.318116071652818]


def main(outdir):
    fourbar = {
        "name": "fourbar", "gravity": [0.0, 0.0, -9.81], "links": LOOP, "constraints": CLOSURE,
        "home": HOME, "reference_theta": theta(LOOP_BODIES, LOOP_FRICTION),
    }
    wrist = [
        link("wrist_roll", 1, [1.0, 0.0, 0.0], [1.0, 0.0, 0.0], True, [-3.0, 3.0]),
        link("wrist_yaw", 3, [0.0, 0.0, 1.0], [0.4, 0.0, 0.1], True, [-3.0, 3.0]),
    ]
    spatial = {
        "name": "spatial5", "gravity": [0.0, 0.0, -9.81], "links": LOOP + wrist, "constraints": CLOSURE,
        "home": HOME + [0.0, 0.0],
        "reference_theta": theta(LOOP_BODIES + [(0.5, [0.4, 0.05, 0.05]), (0.3, [0.3, 0.04, 0.04])],
                                 LOOP_FRICTION + [[0.05, 0.03, 0.01, 0.01], [0.04, 0.02, 0.008, -0.005]]),
    }
    for name, doc in (("fourbar.json", fourbar), ("spatial5.json", spatial)):
        with open(os.path.join(outdir, name), "w") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data"))
