"""Numpy implementations of the batch kernels.

Reference semantics for the compiled ``_ckernels`` module; both must agree
bit-for-bit given the same uniform draws.  Pulse arrays are flat and k-major:
index ``(k - 1) * n + (l - 1)`` holds pulse ``(k, l)``.  Outcome arrays use
-1 for pulses that were not received.
"""

import numpy as np


def bb84_outcomes(r, s, basis, received, flip_u, coin_u, p_err):
    r = np.asarray(r, dtype=np.uint8)
    same = np.asarray(basis, dtype=np.uint8) == np.asarray(s, dtype=np.uint8)
    flipped = r ^ (np.asarray(flip_u) < p_err).astype(np.uint8)
    coin = (np.asarray(coin_u) < 0.5).astype(np.uint8)
    out = np.where(same, flipped, coin).astype(np.int8)
    out[~np.asarray(received, dtype=bool)] = -1
    return out


def projective_outcomes(a0, a1, theta, u):
    amp = np.cos(theta) * np.asarray(a0) + np.sin(theta) * np.asarray(a1)
    p0 = amp.real * amp.real + amp.imag * amp.imag
    return np.where(np.asarray(u) < p0, 0, 1).astype(np.int8)


def group_errors(r, s, outcomes, claimed, ks, n):
    r = np.asarray(r, dtype=np.uint8).reshape(-1, n)
    s = np.asarray(s, dtype=np.uint8).reshape(-1, n)
    out = np.asarray(outcomes, dtype=np.int8).reshape(-1, n)
    rows = np.asarray(ks, dtype=np.int64)
    claimed = np.asarray(claimed, dtype=np.uint8)[:, None]
    in_omega = (out[rows] >= 0) & (s[rows] == claimed)
    wrong = in_omega & (out[rows] != r[rows])
    return in_omega.sum(axis=1).astype(np.int64), wrong.sum(axis=1).astype(np.int64)
