"""Post-processing of concurrence and population time series."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

NOISE_FLOOR = 1e-4
OSC_TOL = 1e-3
TAIL_FRACTION = 0.1


class DynamicsType(str, Enum):
    I = "I"
    II = "II"
    III = "III"


def detect_extrema(values) -> tuple[np.ndarray, np.ndarray]:
    """Indices of strict local maxima and minima.

    Runs of equal consecutive samples are merged into one point (reported at
    the first index of the run). Endpoints are never extrema.

    Returns
    -------
    (maxima, minima) : tuple of int ndarrays
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 5:
        raise ValueError("need at least 5 samples")
    keep = np.concatenate([[True], v[1:] != v[:-1]])
    idx = np.nonzero(keep)[0]
    w = v[idx]
    if w.size < 3:
        return np.array([], dtype=int), np.array([], dtype=int)
    mid = w[1:-1]
    is_max = (mid > w[:-2]) & (mid > w[2:])
    is_min = (mid < w[:-2]) & (mid < w[2:])
    return idx[1:-1][is_max], idx[1:-1][is_min]


@dataclass(frozen=True)
class EnvelopeFit:
    """Exponential envelope of a damped oscillation.

    Undefined rates are NaN.

    Attributes
    ----------
    c_inf : float
        Mean of the final tail of the series.
    gamma_up, gamma_low : float
        Decay rates of the peak and trough envelopes.
    peak_times, peak_values : ndarray
        Maxima used for `gamma_up`.
    trough_times, trough_values : ndarray
        Minima used for `gamma_low`.
    fit_residual : float
        RMS residual of the log-linear regressions.
    """

    c_inf: float
    gamma_up: float
    gamma_low: float
    peak_times: np.ndarray
    peak_values: np.ndarray
    trough_times: np.ndarray
    trough_values: np.ndarray
    fit_residual: float


def _loglin(t: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    if t.size < 2:
        return math.nan, np.array([])
    ly = np.log(y)
    a = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(a, ly, rcond=None)
    return float(-coef[0]), ly - a @ coef


def fit_envelope(times, values, noise_floor: float = NOISE_FLOOR) -> EnvelopeFit:
    """Fit ``|C - c_inf| ~ exp(-gamma t)`` through the maxima and minima.

    Only maxima above ``c_inf + noise_floor`` and minima below
    ``c_inf - noise_floor`` are used.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    tail = max(1, int(round(TAIL_FRACTION * v.size)))
    c_inf = float(np.mean(v[-tail:]))
    imax, imin = detect_extrema(v)
    imax = imax[v[imax] > c_inf + noise_floor]
    imin = imin[v[imin] < c_inf - noise_floor]
    g_up, r_up = _loglin(t[imax], v[imax] - c_inf)
    g_low, r_low = _loglin(t[imin], c_inf - v[imin])
    resid = np.concatenate([r_up, r_low])
    rms = float(np.sqrt(np.mean(resid**2))) if resid.size else math.nan
    return EnvelopeFit(c_inf, g_up, g_low, t[imax], v[imax], t[imin], v[imin], rms)


def classify_dynamics(times, values, osc_tol: float = OSC_TOL) -> tuple[DynamicsType, EnvelopeFit]:
    """Tag a concurrence series as type I, II or III.

    I
        At most one significant maximum: monotone rise to a plateau.
    III
        At least two significant maxima, the peak values strictly decrease
        and the trough values strictly increase towards the plateau, and
        the upper envelope decays faster than `osc_tol`.
    II
        Anything else: sustained or beating oscillation.
    """
    fit = fit_envelope(times, values)
    if fit.peak_values.size <= 1:
        return DynamicsType.I, fit
    peaks_down = bool(np.all(np.diff(fit.peak_values) < 0))
    troughs_up = bool(np.all(np.diff(fit.trough_values) > 0))
    if peaks_down and troughs_up and fit.gamma_up > osc_tol:
        return DynamicsType.III, fit
    return DynamicsType.II, fit


def steady_state_time(times, values, eps: float = 0.02) -> float:
    """Earliest sample time after which the series stays within `eps` of its tail mean.

    Returns ``inf`` if even the last sample is outside the band.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    tail = max(1, int(round(TAIL_FRACTION * v.size)))
    c_final = np.mean(v[-tail:])
    outside = np.nonzero(np.abs(v - c_final) > eps)[0]
    if outside.size == 0:
        return float(t[0])
    last = outside[-1]
    if last == v.size - 1:
        return math.inf
    return float(t[last + 1])


@dataclass(frozen=True)
class DerivativeScan:
    """Forward-difference slopes and kink flags.

    Attributes
    ----------
    slopes : ndarray, shape (n - 1,)
        ``(f[k+1] - f[k]) / h``.
    flags : ndarray of bool, shape (n,)
        True at grid points where the slope jumps.
    """

    slopes: np.ndarray
    flags: np.ndarray

    @property
    def flagged(self) -> np.ndarray:
        return np.nonzero(self.flags)[0]


def derivative_scan(values, h: float, ratio: float = 10.0, window: int = 5) -> DerivativeScan:
    """Slopes of a uniformly sampled function and the points where they jump.

    A grid point is flagged when the change of slope across it exceeds
    `ratio` times the median absolute change over `window` neighbours on each
    side, is the largest change in that neighbourhood, and is above a
    rounding floor.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    f = np.asarray(values, dtype=float)
    slopes = np.diff(f) / h
    jumps = np.abs(np.diff(slopes))
    flags = np.zeros(f.size, dtype=bool)
    floor = 1e-8 * max(1.0, float(np.max(np.abs(slopes)))) if slopes.size else 0.0
    for k in range(jumps.size):
        lo, hi = max(0, k - window), min(jumps.size, k + window + 1)
        neigh = np.concatenate([jumps[lo:k], jumps[k + 1:hi]])
        if neigh.size == 0 or jumps[k] <= floor:
            continue
        if jumps[k] > ratio * np.median(neigh) and jumps[k] >= neigh.max():
            flags[k + 1] = True
    return DerivativeScan(slopes, flags)


@dataclass(frozen=True)
class EqualPopulation:
    t: float
    spread: float


def equal_population_time(times, populations, threshold: float = 0.05,
                          window: tuple | None = None) -> EqualPopulation | None:
    """Earliest time minimising ``max_i p_i - min_i p_i``.

    Parameters
    ----------
    window : (float, float), optional
        Restrict the search to this time interval.

    Returns
    -------
    EqualPopulation or None
        None when the smallest spread is not below `threshold`.
    """
    t = np.asarray(times, dtype=float)
    p = np.asarray(populations, dtype=float)
    spread = p.max(axis=1) - p.min(axis=1)
    mask = np.ones(t.size, dtype=bool)
    if window is not None:
        mask = (t >= window[0]) & (t <= window[1])
    if not mask.any():
        return None
    idx = np.nonzero(mask)[0]
    k = idx[np.argmin(spread[idx])]
    if spread[k] >= threshold:
        return None
    return EqualPopulation(float(t[k]), float(spread[k]))
