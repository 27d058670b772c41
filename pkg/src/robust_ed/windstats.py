"""Seasonal pattern + vector autoregression for multi-site wind speeds.

Speeds are modelled as ``r_t = g_t + rt_t`` where ``g_t`` is a deterministic
harmonic pattern and the residual follows a VAR(L) driven by Gaussian
innovations with covariance ``sigma = B B'``.

Time is measured in absolute 10-minute periods since the Unix epoch, so the
phase of the daily harmonics is the time of day.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PERIODS_PER_DAY = 144
PERIOD_SECONDS = 600


# --------------------------------------------------------------------- series
@dataclass(frozen=True)
class WindSeries:
    """Speeds (time x site, m/s) on a uniform 10-minute grid starting at ``start``."""

    start: int  # absolute period index of the first row
    speeds: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.speeds, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ValueError("wind speeds must be finite and nonnegative")
        object.__setattr__(self, "speeds", s)
        object.__setattr__(self, "start", int(self.start))

    def __len__(self):
        return self.speeds.shape[0]

    @property
    def n_sites(self) -> int:
        return self.speeds.shape[1]

    @property
    def periods(self) -> np.ndarray:
        return self.start + np.arange(len(self))

    @property
    def timestamps(self) -> np.ndarray:
        return (self.periods * PERIOD_SECONDS).astype("datetime64[s]")

    def window(self, lo: int, hi: int) -> "WindSeries":
        return WindSeries(self.start + lo, self.speeds[lo:hi])


def read_wind_csv(path) -> WindSeries:
    """Read ``timestamp,site_1,...,site_N`` with ISO timestamps on a 10-minute grid."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "timestamp":
        raise ValueError(f"{path}: expected a 'timestamp' header column")
    body = [r for r in rows[1:] if r]
    if not body:
        raise ValueError(f"{path}: no data rows")
    stamps = np.array([np.datetime64(r[0], "s") for r in body]).astype(np.int64)
    if np.any(stamps % PERIOD_SECONDS):
        raise ValueError(f"{path}: timestamps are not aligned to 10 minutes")
    if len(stamps) > 1 and np.any(np.diff(stamps) != PERIOD_SECONDS):
        raise ValueError(f"{path}: timestamps are not uniformly spaced at 10 minutes")
    speeds = np.array([[float(v) for v in r[1:]] for r in body])
    return WindSeries(int(stamps[0] // PERIOD_SECONDS), speeds)


def write_wind_csv(series: WindSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp"] + [f"site_{i + 1}" for i in range(series.n_sites)])
        for ts, row in zip(series.timestamps, series.speeds):
            w.writerow([str(ts)] + [repr(float(v)) for v in row])


# ------------------------------------------------------------------- seasonal
@dataclass(frozen=True)
class SeasonalModel:
    """Per-site harmonic pattern ``coef[:, 0] + sum_k cos/sin terms``.

    ``coef`` has shape ``(n_sites, 1 + 2 * len(harmonics))``; with the default
    harmonics (144, 72) the columns are a, b, c, d, e.
    """

    coef: np.ndarray
    harmonics: tuple[float, ...] = (PERIODS_PER_DAY, PERIODS_PER_DAY / 2)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coef, dtype=float))
        if c.shape[1] != 1 + 2 * len(self.harmonics):
            raise ValueError("coefficient count does not match the harmonic set")
        object.__setattr__(self, "coef", c)
        object.__setattr__(self, "harmonics", tuple(float(h) for h in self.harmonics))

    @property
    def n_sites(self) -> int:
        return self.coef.shape[0]

    def design(self, periods) -> np.ndarray:
        t = np.asarray(periods, dtype=float)
        cols = [np.ones_like(t)]
        for h in self.harmonics:
            w = 2.0 * np.pi * t / h
            cols += [np.cos(w), np.sin(w)]
        return np.stack(cols, axis=-1)

    def evaluate(self, periods) -> np.ndarray:
        """``g`` at the given absolute periods, shape ``(len(periods), n_sites)``."""
        return self.design(periods) @ self.coef.T

    @classmethod
    def constant(cls, level, harmonics=(PERIODS_PER_DAY, PERIODS_PER_DAY / 2)) -> "SeasonalModel":
        level = np.atleast_1d(np.asarray(level, dtype=float))
        coef = np.zeros((level.size, 1 + 2 * len(harmonics)))
        coef[:, 0] = level
        return cls(coef, harmonics)


def fit_seasonal(series: WindSeries, harmonics=(PERIODS_PER_DAY, PERIODS_PER_DAY / 2),
                 min_days: float = 2.0) -> SeasonalModel:
    """Least-squares harmonic regression, one site at a time (shared design)."""
    n = len(series)
    if n < min_days * PERIODS_PER_DAY:
        raise ValueError(f"seasonal fit needs at least {min_days:g} days of data, got {n} samples")
    X = SeasonalModel.constant(np.zeros(series.n_sites), harmonics).design(series.periods)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise ValueError("seasonal design matrix is rank deficient")
    coef, *_ = np.linalg.lstsq(X, series.speeds, rcond=None)
    return SeasonalModel(coef.T, harmonics)


def residuals(series: WindSeries, seasonal: SeasonalModel) -> np.ndarray:
    return series.speeds - seasonal.evaluate(series.periods)


# ------------------------------------------------------------------------ VAR
def chol(sigma, jitter: float = 1e-10) -> np.ndarray:
    """Lower-triangular B with B B' = sigma.

    A semidefinite sigma gets ``jitter * trace / n`` added to the diagonal once
    before giving up.
    """
    S = np.atleast_2d(np.asarray(sigma, dtype=float))
    if S.shape[0] != S.shape[1]:
        raise ValueError("covariance must be square")
    if not np.allclose(S, S.T, rtol=1e-10, atol=1e-12):
        raise ValueError("covariance must be symmetric")
    S = 0.5 * (S + S.T)
    if not np.any(S):
        return np.zeros_like(S)
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        pass
    bump = jitter * np.trace(S) / S.shape[0]
    try:
        return np.linalg.cholesky(S + bump * np.eye(S.shape[0]))
    except np.linalg.LinAlgError:
        raise ValueError("covariance is not positive semidefinite") from None


@dataclass(frozen=True)
class VarModel:
    """``rt_t = sum_s A[s-1] rt_{t-s} + B u_t``; ``A`` has shape (L, N, N)."""

    A: np.ndarray
    sigma: np.ndarray
    B: np.ndarray = field(default=None)

    def __post_init__(self):
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        n = sigma.shape[0]
        A = np.asarray(self.A, dtype=float).reshape(-1, n, n)
        B = chol(sigma) if self.B is None else np.atleast_2d(np.asarray(self.B, dtype=float))
        if B.shape != (n, n):
            raise ValueError("B must match sigma's shape")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "B", B)

    @property
    def lags(self) -> int:
        return self.A.shape[0]

    @property
    def n_sites(self) -> int:
        return self.sigma.shape[0]

    def spectral_radius(self) -> float:
        """Largest modulus of the companion-matrix eigenvalues."""
        L, n = self.lags, self.n_sites
        if L == 0:
            return 0.0
        comp = np.zeros((L * n, L * n))
        comp[:n, :] = np.hstack(list(self.A))
        comp[n:, :-n] = np.eye((L - 1) * n)
        return float(np.max(np.abs(np.linalg.eigvals(comp))))

    def step(self, lags: np.ndarray) -> np.ndarray:
        """Conditional mean given ``lags`` ordered oldest to newest (shape (L, N))."""
        out = np.zeros(self.n_sites)
        for s in range(1, self.lags + 1):
            out += self.A[s - 1] @ lags[-s]
        return out


def fit_var(res, L: int) -> VarModel:
    """Multivariate least squares for the VAR coefficients, no intercept.

    ``sigma`` is the mean outer product of the fit residuals (the process has
    zero mean by construction), and B its Cholesky factor.
    """
    R = np.asarray(res, dtype=float)
    if R.ndim == 1:
        R = R[:, None]
    n, N = R.shape
    if L < 0:
        raise ValueError("lag order must be nonnegative")
    if n - L <= L * N + N:
        raise ValueError(f"not enough data for a VAR({L}) on {N} sites: {n} rows")
    Y = R[L:]
    if L == 0:
        E = Y
        A = np.zeros((0, N, N))
    else:
        Z = np.hstack([R[L - s:n - s] for s in range(1, L + 1)])
        if np.linalg.matrix_rank(Z) < Z.shape[1]:
            raise ValueError("lagged regressor matrix is numerically singular")
        coef, *_ = np.linalg.lstsq(Z, Y, rcond=None)
        E = Y - Z @ coef
        A = coef.T.reshape(N, L, N).transpose(1, 0, 2)
    sigma = E.T @ E / E.shape[0]
    sigma = 0.5 * (sigma + sigma.T)
    B = chol(sigma)
    if not np.allclose(B @ B.T, sigma, rtol=0, atol=max(1e-10, 1e-9 * np.trace(sigma))):
        raise ValueError("Cholesky factor does not reproduce the covariance")
    return VarModel(A, sigma, B)


def nominal_forecast(seasonal: SeasonalModel, var: VarModel, history, T: int, t1: int) -> np.ndarray:
    """Zero-innovation forecast of speeds for periods 2..T.

    ``history`` holds the last residuals (oldest first, newest = period 1 at
    absolute index ``t1``); at least ``var.lags`` rows are required.  Speeds
    are clipped at zero after adding the seasonal pattern.
    """
    h = np.zeros((0, var.n_sites)) if history is None else np.atleast_2d(np.asarray(history, dtype=float))
    if h.shape[0] < var.lags:
        raise ValueError(f"history has {h.shape[0]} rows, VAR needs {var.lags}")
    rt = residual_forecast(var, h, T - 1)
    g = seasonal.evaluate(t1 + np.arange(1, T))
    return np.maximum(0.0, g + rt)


def residual_forecast(var: VarModel, history, steps: int) -> np.ndarray:
    """Zero-innovation residual path (unclipped), shape (steps, N)."""
    L = var.lags
    h = np.atleast_2d(np.asarray(history, dtype=float)) if L else np.zeros((0, var.n_sites))
    state = list(h[h.shape[0] - L:]) if L else []
    out = np.zeros((steps, var.n_sites))
    for k in range(steps):
        if L:
            out[k] = var.step(np.array(state))
            state = state[1:] + [out[k]]
    return out


def simulate_wind(seasonal: SeasonalModel, var: VarModel, seed: int, n: int, start: int = 0,
                  init=None, burn_in: int = 0) -> WindSeries:
    """Draw a speed series from the seasonal + VAR model.

    Innovations are ``B z`` with standard normal ``z``; speeds are clipped at
    zero but the latent residual recursion is not.
    """
    L, N = var.lags, var.n_sites
    if n <= L:
        raise ValueError("series length must exceed the lag order")
    if seasonal.n_sites != N:
        raise ValueError("seasonal and VAR models disagree on the number of sites")
    rng = np.random.default_rng(seed)
    state = np.zeros((L, N)) if init is None else np.array(init, dtype=float).reshape(L, N)
    z = rng.standard_normal((burn_in + n, N))
    rt = np.empty((n, N))
    hist = list(state)
    for k in range(burn_in + n):
        cur = (var.step(np.array(hist)) if L else np.zeros(N)) + var.B @ z[k]
        if L:
            hist = hist[1:] + [cur]
        if k >= burn_in:
            rt[k - burn_in] = cur
    periods = start + np.arange(n)
    speeds = np.maximum(0.0, seasonal.evaluate(periods) + rt)
    return WindSeries(start, speeds)


# ------------------------------------------------------------------ model io
def save_models(path, seasonal: SeasonalModel, var: VarModel, **extra) -> None:
    doc = {
        "seasonal": {"harmonics": list(seasonal.harmonics), "coef": seasonal.coef.tolist()},
        "var": {"lags": var.lags, "A": var.A.tolist(), "sigma": var.sigma.tolist(), "B": var.B.tolist()},
    }
    doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_models(path) -> tuple[SeasonalModel, VarModel]:
    doc = json.loads(Path(path).read_text())
    s, v = doc["seasonal"], doc["var"]
    seasonal = SeasonalModel(np.array(s["coef"]), tuple(s["harmonics"]))
    n = seasonal.n_sites
    A = np.array(v["A"], dtype=float).reshape(int(v["lags"]), n, n)
    return seasonal, VarModel(A, np.array(v["sigma"]), np.array(v["B"]))
