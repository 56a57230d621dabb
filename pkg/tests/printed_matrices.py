"""Published scattering matrices of the nested interferometer, transcribed.

Rows are outputs, columns inputs; indices 0-2 are H on paths 1-3, 3-5 are V.
Two entries are transcribed as printed even though they are typos, see
``S4_PRINTED_TYPOS``.
"""

import math

import numpy as np


def _common(r1, t1, r4, t4, theta):
    tb = math.sqrt(1 - theta ** 2) / 2           # theta-bar
    v = math.sqrt(1 - theta ** 2)                # vartheta
    vp, vm = (1 + v) / 2, (1 - v) / 2
    vb = theta / 2                               # vartheta-bar
    return tb, vp, vm, vb


def S(r1, t1, r4, t4, theta=0.0):
    return np.array([
        [r1 * r4, t1 * r4, t4, 0, 0, 0],
        [-r1 * t4, -t1 * t4, r4, 0, 0, 0],
        [t1, -r1, 0, 0, 0, 0],
        [0, 0, 0, r1 * r4, t1 * r4, t4],
        [0, 0, 0, -r1 * t4, -t1 * t4, r4],
        [0, 0, 0, t1, -r1, 0],
    ], dtype=float)


def S1(r1, t1, r4, t4, theta):
    tb, *_ = _common(r1, t1, r4, t4, theta)
    th = theta
    return np.array([
        [r1 * r4 * 2 * tb, t1 * r4 * 2 * tb, t4, r1 * r4 * th, t1 * r4 * th, 0],
        [-r1 * t4 * 2 * tb, -t1 * t4 * 2 * tb, r4, -r1 * t4 * th, -t1 * t4 * th, 0],
        [t1, -r1, 0, 0, 0, 0],
        [-r1 * r4 * th, -t1 * r4 * th, 0, r1 * r4 * 2 * tb, t1 * r4 * 2 * tb, t4],
        [r1 * t4 * th, t1 * t4 * th, 0, -r1 * t4 * 2 * tb, -t1 * t4 * 2 * tb, r4],
        [0, 0, 0, t1, -r1, 0],
    ])


def S2(r1, t1, r4, t4, theta):
    tb, *_ = _common(r1, t1, r4, t4, theta)
    th = theta
    return np.array([
        [r1 * r4, t1 * r4, t4, 0, 0, 0],
        [-r1 * t4, -t1 * t4, r4, 0, 0, 0],
        [t1 * 2 * tb, -r1 * 2 * tb, 0, t1 * th, -r1 * th, 0],
        [0, 0, 0, r1 * r4, t1 * r4, t4],
        [0, 0, 0, -r1 * t4, -t1 * t4, r4],
        [-t1 * th, r1 * th, 0, t1 * 2 * tb, -r1 * 2 * tb, 0],
    ])


def S3(r1, t1, r4, t4, theta):
    tb, *_ = _common(r1, t1, r4, t4, theta)
    th = theta
    return np.array([
        [r1 * r4, t1 * r4, t4 * 2 * tb, 0, 0, t4 * th],
        [-r1 * t4, -t1 * t4, r4 * 2 * tb, 0, 0, r4 * th],
        [t1, -r1, 0, 0, 0, 0],
        [0, 0, -t4 * th, r1 * r4, t1 * r4, t4 * 2 * tb],
        [0, 0, -r4 * th, -r1 * t4, -t1 * t4, r4 * 2 * tb],
        [0, 0, 0, t1, -r1, 0],
    ])


def S4(r1, t1, r4, t4, theta):
    _, vp, vm, vb = _common(r1, t1, r4, t4, theta)
    return np.array([
        [r1 * r4 - t1 * t4 * vm, t1 * r4 + r1 * t4 * vm, t4 * vp, t1 * t4 * vb, -r1 * t4 * vb, t4 * vb ** 2],
        [-r1 * t4 - t1 * r4 * vm, -t1 * t4 + r1 * r4 * vm, r4 * vp, t1 * r4 * vb, -r1 * r4 * vb, r4 * vb],
        [t1 * vp, -r1 * vp, -vm, t1 * vb, -r1 * vb, vb],
        [-t1 * t4 * vb, r1 * t4 * vb, -t4 * vb, r1 * r4 - t1 * t4 * vm, t1 * r4 + r1 * t4 * vm, t4 * vp],
        [-t1 * r4 * vb, r1 * r4 * vb, -r4 * vb, -r1 * t4 - t1 * r4 * vm, -t1 * t4 + r1 * r4 * vm, r4 * vp],
        [-t1 * vb, r1 * vb, -vb, t1 * vp, -r1 * vp, -vm],
    ])


# (row, column) of printed entries that disagree with the unitary device.
S4_PRINTED_TYPOS = {(0, 5)}


def S5(r1, t1, r4, t4, theta):
    _, vp, vm, vb = _common(r1, t1, r4, t4, theta)
    return np.array([
        [r1 * r4 - t1 * t4 * vm, t1 * r4 + r1 * t4 * vm, -t4 * vp, -t1 * t4 * vb, r1 * t4 * vb, t4 * vb],
        [-r1 * t4 - t1 * r4 * vm, -t1 * t4 + r1 * r4 * vm, -r4 * vp, -t1 * r4 * vb, r1 * r4 * vb, r4 * vb],
        [t1 * vp, -r1 * vp, vm, -t1 * vb, r1 * vb, vb],
        [-t1 * t4 * vb, r1 * t4 * vb, t4 * vb, r1 * r4 - t1 * t4 * vp, t1 * r4 + r1 * t4 * vp, -t4 * vm],
        [-t1 * r4 * vb, r1 * r4 * vb, r4 * vb, -r1 * t4 - t1 * r4 * vp, -t1 * t4 + r1 * r4 * vp, -r4 * vm],
        [-t1 * vb, r1 * vb, vb, t1 * vm, -r1 * vm, vp],
    ])
