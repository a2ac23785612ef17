#!/usr/bin/env python3
"""Writes fixtures/robots/hand.urdf, the parametric 12-DoF four-finger hand.

Frames: the palm link origin sits at the centre of the palm surface; +z is
the palm normal (toward the object), +x points from thumb to fingers.
"""
import sys

R_FINGER = 0.009
Z_AXIS = -0.009  # finger centre line, pads flush with the palm plane

FINGERS = [
    # name, base xyz, base yaw, link lengths
    ("thumb", (-0.01, 0.0, Z_AXIS), 3.141592653589793, (0.040, 0.030, 0.025)),
    ("index", (0.045, 0.022, Z_AXIS), 0.0, (0.045, 0.030, 0.025)),
    ("middle", (0.045, 0.0, Z_AXIS), 0.0, (0.045, 0.030, 0.025)),
    ("ring", (0.045, -0.022, Z_AXIS), 0.0, (0.045, 0.030, 0.025)),
]
LIMITS = [(-0.2, 2.2), (0.0, 1.7), (0.0, 1.4)]
SEGMENTS = ["proximal", "middle", "distal"]
JOINTS = ["mcp", "pip", "dip"]

def f(v):
    return " ".join(f"{x:.12g}" for x in v)

out = []
w = out.append
w('<?xml version="1.0"?>')
w('<robot name="graspforge_hand">')
w('  <link name="palm"/>')
for name, base, yaw, lengths in FINGERS:
    parent = "palm"
    for k in range(3):
        link = f"{name}_{SEGMENTS[k]}"
        w(f'  <link name="{link}"/>')
        origin = f(base) if k == 0 else f((lengths[k - 1], 0, 0))
        rpy = f((0, 0, yaw)) if k == 0 else "0 0 0"
        lo, hi = LIMITS[k]
        w(f'  <joint name="{name}_{JOINTS[k]}" type="revolute">')
        w(f'    <parent link="{parent}"/>')
        w(f'    <child link="{link}"/>')
        w(f'    <origin xyz="{origin}" rpy="{rpy}"/>')
        w('    <axis xyz="0 -1 0"/>')
        w(f'    <limit lower="{lo}" upper="{hi}" effort="2" velocity="3"/>')
        w('  </joint>')
        parent = link
    w(f'  <link name="{name}_tip"/>')
    w(f'  <joint name="{name}_tip_fixed" type="fixed">')
    w(f'    <parent link="{parent}"/>')
    w(f'    <child link="{name}_tip"/>')
    w(f'    <origin xyz="{f((lengths[2], 0, 0))}" rpy="0 0 0"/>')
    w('  </joint>')

w('  <graspforge_hand palm_link="palm" palm_normal="0 0 1" span="0.12">')
w('    <palm_frame xyz="0 0 0" rpy="0 0 0"/>')
w('    <anchor name="palm_center" link="palm" xyz="0 0 0" rpy="0 0 0" strategies="WholeHand Bimanual"/>')
tip_strategies = {
    "thumb": "Pinch2 Tripod3 WholeHand Bimanual",
    "index": "Pinch2 Tripod3 WholeHand Bimanual",
    "middle": "Tripod3 WholeHand Bimanual",
    "ring": "WholeHand Bimanual",
}
for name, base, yaw, lengths in FINGERS:
    pad = (0.6 * lengths[2], 0, R_FINGER)
    w(f'    <anchor name="{name}_tip" link="{name}_distal" xyz="{f(pad)}" rpy="0 0 0" '
      f'strategies="{tip_strategies[name]}"/>')
# palm spheres
for x in (-0.03, 0.0, 0.03):
    for y in (-0.02, 0.02):
        w(f'    <sphere link="palm" xyz="{f((x, y, -0.012))}" radius="0.012"/>')
for name, base, yaw, lengths in FINGERS:
    L = lengths
    w(f'    <sphere link="{name}_proximal" xyz="{f((0.35 * L[0], 0, 0))}" radius="{R_FINGER}"/>')
    w(f'    <sphere link="{name}_proximal" xyz="{f((0.8 * L[0], 0, 0))}" radius="{R_FINGER}"/>')
    w(f'    <sphere link="{name}_middle" xyz="{f((0.5 * L[1], 0, 0))}" radius="{R_FINGER}"/>')
    w(f'    <sphere link="{name}_distal" xyz="{f((0.6 * L[2], 0, 0))}" radius="{R_FINGER}"/>')

def posture(thumb, index, middle, ring):
    return f(thumb + index + middle + ring)

OPEN = (0.3, 0.3, 0.2)
TUCK = (-0.2, 0.0, 0.0)
w(f'    <open_posture strategy="WholeHand" q="{posture(OPEN, OPEN, OPEN, OPEN)}"/>')
w(f'    <open_posture strategy="Pinch2" q="{posture((0.5, 0.4, 0.3), (0.5, 0.4, 0.3), TUCK, TUCK)}"/>')
w(f'    <open_posture strategy="Tripod3" q="{posture((0.5, 0.4, 0.3), (0.5, 0.4, 0.3), (0.5, 0.4, 0.3), TUCK)}"/>')
w(f'    <open_posture strategy="Bimanual" q="{posture((0.05, 0.05, 0.05), (0.05, 0.05, 0.05), (0.05, 0.05, 0.05), (0.05, 0.05, 0.05))}"/>')
names = " ".join(f"{n}_{j}" for n, *_ in FINGERS for j in JOINTS)
w(f'    <squeeze joints="{names}"/>')
w('  </graspforge_hand>')
w('</robot>')
sys.stdout.write("\n".join(out) + "\n")
