"""Convex piecewise-linear under-approximation of a turbine power curve."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np


@dataclass(frozen=True)
class PowerCurvePWL:
    """Envelope ``max(0, max_k h0[k] + h[k] * r)`` of K supporting lines.

    ``pwmax`` is the cut-off plateau.  :meth:`evaluate` is the uncapped
    envelope that uncertainty sets use; :meth:`available` caps it.
    """

    h0: np.ndarray
    h: np.ndarray
    pwmax: float
    max_gap: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "h0", np.atleast_1d(np.asarray(self.h0, dtype=float)))
        object.__setattr__(self, "h", np.atleast_1d(np.asarray(self.h, dtype=float)))
        if self.h0.shape != self.h.shape or self.h0.size < 1:
            raise ValueError("power curve needs K >= 1 matching intercepts and slopes")
        if self.pwmax <= 0:
            raise ValueError("pwmax must be positive")
        if np.any(self.h < 0):
            raise ValueError("power curve pieces must be nondecreasing")

    @property
    def pieces(self) -> int:
        return self.h.size

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        lines = self.h0 + np.multiply.outer(r, self.h)
        return np.maximum(0.0, lines.max(axis=-1))

    def available(self, r):
        return np.minimum(self.pwmax, self.evaluate(r))

    def scaled(self, factor: float) -> "PowerCurvePWL":
        return PowerCurvePWL(self.h0 * factor, self.h * factor, self.pwmax * factor, self.max_gap * factor)

    def to_dict(self) -> dict:
        return {"h0": self.h0.tolist(), "h": self.h.tolist(), "pwmax": self.pwmax, "max_gap": self.max_gap}


def _lower_hull(v, p):
    hull: list[int] = []
    for i in range(len(v)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or above the chord a -> i
            cross = (v[b] - v[a]) * (p[i] - p[a]) - (p[b] - p[a]) * (v[i] - v[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def _increasing_part(p, pwmax):
    # from the last zero-power sample before the plateau to the first plateau sample
    top = np.flatnonzero(p >= pwmax)
    stop = int(top[0]) if top.size else len(p) - 1
    zeros = np.flatnonzero(p[:stop] <= 0)
    start = int(zeros[-1]) if zeros.size else 0
    return start, stop


def pwl_power_curve(samples, K: int = 4, pwmax: float | None = None,
                    max_combinations: int = 200_000) -> PowerCurvePWL:
    """Fit K supporting lines below the increasing part of a power curve.

    Parameters
    ----------
    samples : array (n, 2)
        ``(speed m/s, power MW)`` rows sorted by speed.
    K : int
        Maximum number of pieces.
    pwmax : float, optional
        Plateau level; defaults to the largest sample power.

    The candidate lines are the segments of the greatest convex minorant of
    the increasing part, so every subset stays below every sample.  The subset
    of at most K lines with the smallest worst-case gap is returned, and that
    gap is stored in ``max_gap``.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[1] != 2 or s.shape[0] < 2:
        raise ValueError("samples must be an (n, 2) array with n >= 2")
    v, p = s[:, 0], s[:, 1]
    if np.any(np.diff(v) <= 0):
        raise ValueError("samples must be strictly sorted by speed")
    pwmax = float(p.max()) if pwmax is None else float(pwmax)
    a, b = _increasing_part(p, pwmax)
    vi, pi = v[a:b + 1], np.minimum(p[a:b + 1], pwmax)
    if np.any(np.diff(pi) < 0):
        raise ValueError("power curve is not monotone on its increasing part")
    if len(vi) < 2:
        raise ValueError("power curve has no increasing part")

    hull = _lower_hull(vi, pi)
    slopes = np.diff(pi[hull]) / np.diff(vi[hull])
    icpts = pi[hull][:-1] - slopes * vi[hull][:-1]

    def gap(idx):
        env = np.maximum(0.0, (icpts[list(idx)] + np.multiply.outer(vi, slopes[list(idx)])).max(axis=1))
        return float(np.max(pi - env))

    nseg = len(slopes)
    if nseg <= K:
        best = tuple(range(nseg))
    else:
        from math import comb

        if comb(nseg, K) <= max_combinations:
            best = min(combinations(range(nseg), K), key=gap)
        else:
            # greedy removal of the line whose absence hurts least
            best = tuple(range(nseg))
            while len(best) > K:
                best = min((tuple(j for j in best if j != k) for k in best), key=gap)
    best = tuple(sorted(best))
    return PowerCurvePWL(icpts[list(best)], slopes[list(best)], pwmax, max_gap=gap(best))


# Representative 1.5 MW turbine curve (kW), cut-in 3.5 m/s, rated ~13 m/s.
# Not vendor data: a smooth monotone stand-in with the usual shape.
TURBINE_1500KW = np.array([
    [0.0, 0.0], [3.0, 0.0], [3.5, 0.0], [4.0, 43.0], [4.5, 85.0], [5.0, 131.0],
    [5.5, 185.0], [6.0, 250.0], [6.5, 327.0], [7.0, 416.0], [7.5, 521.0],
    [8.0, 640.0], [8.5, 775.0], [9.0, 920.0], [9.5, 1060.0], [10.0, 1181.0],
    [10.5, 1290.0], [11.0, 1380.0], [11.5, 1436.0], [12.0, 1470.0],
    [12.5, 1490.0], [13.0, 1500.0], [14.0, 1500.0], [20.0, 1500.0], [25.0, 1500.0],
])


def turbine_samples(n_turbines: int = 50) -> np.ndarray:
    """Farm-level (speed, MW) table from the stand-in turbine curve."""
    out = TURBINE_1500KW.copy()
    out[:, 1] *= n_turbines / 1000.0
    return out
