"""Expected local-tour lengths: the fitted k* law, its calibration, and swaths.

Optimal (fully-flexible) tours over q random stops in an l-by-w zone follow
the classic scaling E[length] = k*(q, S) * sqrt(q*l*w), with the coefficient
modelled as a five-parameter Weibull-like curve in q and the zone aspect
ratio S:

    k*(q, S) = (beta1*S + beta2) * q**beta3 * exp(beta4 * q**beta5)

The module calibrates those coefficients by solving exact closed tours over
uniform points in unit-area rectangles, and also provides the serpentine
(swath) tour-length model used by semi-flexible routing, including the
enumeration of swath widths that tile a zone.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .tsp import closed_tour_lengths_batch


class ExtrapolationWarning(UserWarning):
    """Evaluation outside the calibrated (q, S) range."""


@dataclass(frozen=True)
class KStarModel:
    """Coefficients of the tour-length scaling constant k*(q, S)."""

    beta1: float
    beta2: float
    beta3: float
    beta4: float
    beta5: float


# Coefficients fitted to the Manhattan-metric calibration grid (q = 2..15,
# S = 1..3).  These are the values used by all base-case experiments.
TABLE1_MODEL = KStarModel(
    beta1=0.1102, beta2=1.4569, beta3=-0.1472, beta4=-2.5508, beta5=-2.6396
)

CALIBRATED_Q_MAX = 15
CALIBRATED_S_MAX = 3.0


def kstar(model: KStarModel, q: float, S: float) -> float:
    """Tour-length coefficient k*(q, S); q may be fractional (expected counts)."""
    if q < 1:
        raise ValueError(f"q must be at least 1, got {q}")
    if S < 1:
        raise ValueError(f"aspect ratio S must be at least 1, got {S}")
    return (
        (model.beta1 * S + model.beta2)
        * q ** model.beta3
        * math.exp(model.beta4 * q ** model.beta5)
    )


def expected_ff_tour_length(model: KStarModel, q: float, l: float, w: float) -> float:
    """Expected optimal-tour length over q stops in an l-by-w zone."""
    if l <= 0 or w <= 0:
        raise ValueError("zone dimensions must be positive")
    S = max(l, w) / min(l, w)
    if q > CALIBRATED_Q_MAX or S > CALIBRATED_S_MAX:
        warnings.warn(
            f"k* evaluated outside the calibrated range (q={q}, S={S:.3g}); "
            "treating as extrapolation",
            ExtrapolationWarning,
            stacklevel=2,
        )
    return kstar(model, q, S) * math.sqrt(q * l * w)


BENCHMARKS = ("yang", "chakraborti", "daganzo_swath")


def benchmark_kstar(benchmark: str, q: float, S: float) -> float:
    """k* according to earlier studies, reported raw (no clamping).

    ``yang``: k* = 1.1055 - 0.008*q + 1.0297*S/q (Euclidean regression).
    ``chakraborti``: constant 0.93 (large-q lattice estimate).
    ``daganzo_swath``: constant 1.15, the unconstrained serpentine optimum.
    """
    if benchmark == "yang":
        return 1.1055 - 0.008 * q + 1.0297 * S / q
    if benchmark == "chakraborti":
        return 0.93
    if benchmark == "daganzo_swath":
        return 1.15
    raise ValueError(f"unknown benchmark {benchmark!r}; expected one of {BENCHMARKS}")


# ---------------------------------------------------------------------------
# Serpentine (swath) tours
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SwathConfig:
    """A feasible swath width for a zone: w0 tiles one dimension exactly."""

    w0: float
    n_strips: int
    along: str  # "l" or "w": the dimension the strips run along

    def __post_init__(self) -> None:
        if self.w0 <= 0 or self.n_strips < 1 or self.along not in ("l", "w"):
            raise ValueError(f"invalid swath configuration {self!r}")


def swath_tour_length(q: float, area: float, w0: float) -> float:
    """Expected serpentine tour length: q*w0/3 lateral + area/w0 longitudinal."""
    if w0 <= 0:
        raise ValueError("swath width must be positive")
    if area <= 0:
        raise ValueError("zone area must be positive")
    if q < 0:
        raise ValueError("stop count must be non-negative")
    return q * w0 / 3.0 + area / w0


def unconstrained_swath_optimum(q: float, area: float) -> tuple[float, float]:
    """(w0*, length*) minimizing the swath tour with w0 unconstrained.

    The optimum w0* = sqrt(3*area/q) yields length 2*sqrt(q*area/3), i.e.
    about 1.15*sqrt(q*area).
    """
    if q <= 0:
        raise ValueError("stop count must be positive")
    w0 = math.sqrt(3.0 * area / q)
    return w0, 2.0 * math.sqrt(q * area / 3.0)


def feasible_swath_widths(l: float, w: float, max_strips: int = 4) -> list[SwathConfig]:
    """Swath widths that cut a zone into 1..max_strips equal strips.

    Candidates are l/i and w/i for i = 1..max_strips, kept only when the
    width does not exceed the zone's shorter side.  Duplicates (the same
    width arising from both dimensions) collapse to the orientation with
    fewer strips.  Sorted by decreasing width.
    """
    if l <= 0 or w <= 0:
        raise ValueError("zone dimensions must be positive")
    if max_strips < 1:
        raise ValueError("max_strips must be at least 1")
    short = min(l, w)
    best: dict[float, SwathConfig] = {}
    for i in range(1, max_strips + 1):
        for dim, other_name in ((l, "w"), (w, "l")):
            w0 = dim / i
            if w0 > short * (1 + 1e-12):
                continue
            # strips of width w0 stack across `dim`, running along the other side
            cfg = SwathConfig(w0=w0, n_strips=i, along=other_name)
            key = round(w0, 12)
            if key not in best or cfg.n_strips < best[key].n_strips:
                best[key] = cfg
    return sorted(best.values(), key=lambda c: -c.w0)


@dataclass(frozen=True)
class SwathGap:
    """Constrained-vs-unconstrained swath comparison for one stop count."""

    q: int
    w0: float  # best feasible width for the bare serpentine length
    tour_length: float  # q*w0/3 + A/w0 at that width
    unconstrained_length: float  # 2*sqrt(q*A/3)
    gap_pct: float  # (tour_length / unconstrained - 1) * 100
    realizable_w0: float  # best feasible width including the w0/2 end leg
    realizable_length: float  # q*w0/3 + A/w0 + w0/2
    realizable_gap_pct: float


def constrained_swath_mape(
    l: float, w: float, q_values: Iterable[int], max_strips: int = 4
) -> list[SwathGap]:
    """Percentage gaps between feasible swath tours and the 1.15*sqrt(qA) ideal.

    Two gaps are reported per q: one for the bare serpentine length (the
    quantity the unconstrained optimum bounds), and one for the realizable
    tour that also pays the w0/2 end leg back to the zone corner, which is
    the length the cost model actually charges per dispatch.
    """
    configs = feasible_swath_widths(l, w, max_strips)
    if not configs:
        raise ValueError(f"no feasible swath width for zone {l} x {w}")
    area = l * w
    out = []
    for q in q_values:
        if q < 1:
            raise ValueError("q values must be positive")
        _, ideal = unconstrained_swath_optimum(q, area)
        bare = min(configs, key=lambda c: swath_tour_length(q, area, c.w0))
        bare_len = swath_tour_length(q, area, bare.w0)
        real = min(configs, key=lambda c: swath_tour_length(q, area, c.w0) + c.w0 / 2)
        real_len = swath_tour_length(q, area, real.w0) + real.w0 / 2
        out.append(
            SwathGap(
                q=q,
                w0=bare.w0,
                tour_length=bare_len,
                unconstrained_length=ideal,
                gap_pct=(bare_len / ideal - 1.0) * 100.0,
                realizable_w0=real.w0,
                realizable_length=real_len,
                realizable_gap_pct=(real_len / ideal - 1.0) * 100.0,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Monte Carlo calibration of the k* coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationGrid:
    """Sampling plan for the k* calibration."""

    q_values: tuple[int, ...] = tuple(range(2, 16))
    aspect_ratios: tuple[float, ...] = (1.0, 1.5, 2.0, 3.0)
    min_instances: int = 500
    max_instances: int = 50_000
    tolerance: float = 0.01  # running-mean drift allowed over the final batch
    se_target: float = 0.005  # standard error of the cell mean at stop time
    batch_size: int = 250

    def __post_init__(self) -> None:
        if not self.q_values or min(self.q_values) < 2:
            raise ValueError("q_values must all be at least 2")
        if max(self.q_values) > 20:
            raise ValueError("q_values beyond 20 exceed the exact solver capacity")
        if not self.aspect_ratios or min(self.aspect_ratios) < 1:
            raise ValueError("aspect ratios must be at least 1")
        if self.min_instances < 1 or self.max_instances < self.min_instances:
            raise ValueError("need 1 <= min_instances <= max_instances")
        if self.tolerance <= 0 or self.se_target <= 0 or self.batch_size < 1:
            raise ValueError("tolerance, se_target, and batch_size must be positive")


@dataclass(frozen=True)
class CalibrationCell:
    """Converged Monte Carlo estimate of k* for one (q, S) grid cell."""

    q: int
    S: float
    mean_kstar: float
    std_kstar: float
    n_instances: int


@dataclass(frozen=True)
class CalibrationResult:
    cells: tuple[CalibrationCell, ...]
    model: KStarModel
    fit_mape_pct: float  # MAPE of the fitted model against its own grid
    seed: int

    def cell(self, q: int, S: float) -> CalibrationCell:
        for c in self.cells:
            if c.q == q and abs(c.S - S) < 1e-9:
                return c
        raise KeyError(f"no calibration cell for q={q}, S={S}")

    def to_csv(self, path) -> None:
        """Grid means in long form, followed by a coefficient block."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["q", "S", "mean_kstar", "n_instances"])
            for c in self.cells:
                writer.writerow([c.q, c.S, f"{c.mean_kstar:.6f}", c.n_instances])
            for name in ("beta1", "beta2", "beta3", "beta4", "beta5"):
                writer.writerow([name, "", f"{getattr(self.model, name):.6f}", ""])


def _simulate_cell(q: int, S: float, grid: CalibrationGrid, rng: np.random.Generator) -> CalibrationCell:
    """Run exact tours over unit-area aspect-S rectangles until the mean settles."""
    long_side = math.sqrt(S)
    short_side = 1.0 / long_side
    scale = np.array([long_side, short_side])
    sqrt_q = math.sqrt(q)
    # keep the DP table (batch * 2^(q-1) * (q-1) float32) under ~250 MB
    batch_cap = max(32, (1 << 22) >> q)
    samples: list[np.ndarray] = []
    n = 0
    prev_mean = None
    while True:
        batch = min(grid.batch_size, batch_cap, grid.max_instances - n)
        pts = rng.random((batch, q, 2)) * scale
        lengths = closed_tour_lengths_batch(pts, dtype=np.float32)
        samples.append(lengths.astype(np.float64) / sqrt_q)
        n += batch
        ks = np.concatenate(samples) if len(samples) > 1 else samples[0]
        mean = float(ks.mean())
        if n >= grid.max_instances:
            break
        if n >= grid.min_instances and prev_mean is not None:
            se = float(ks.std(ddof=1)) / math.sqrt(n)
            if abs(mean - prev_mean) <= grid.tolerance and se <= grid.se_target:
                break
        prev_mean = mean
    ks = np.concatenate(samples) if len(samples) > 1 else samples[0]
    return CalibrationCell(
        q=q,
        S=S,
        mean_kstar=float(ks.mean()),
        std_kstar=float(ks.std(ddof=1)),
        n_instances=n,
    )


def fit_kstar_model(cells: Sequence[CalibrationCell], x0: KStarModel = TABLE1_MODEL) -> KStarModel:
    """Least-squares fit of the five k* coefficients to grid means.

    Residuals are relative, so the optimizer targets the same MAPE-style
    objective the fit is judged by.
    """
    qs = np.array([c.q for c in cells], dtype=float)
    ss = np.array([c.S for c in cells], dtype=float)
    ys = np.array([c.mean_kstar for c in cells], dtype=float)

    def residuals(beta: np.ndarray) -> np.ndarray:
        b1, b2, b3, b4, b5 = beta
        pred = (b1 * ss + b2) * qs ** b3 * np.exp(b4 * qs ** b5)
        return pred / ys - 1.0

    start = np.array([x0.beta1, x0.beta2, x0.beta3, x0.beta4, x0.beta5])
    # lm needs at least as many residuals as parameters; tiny grids fall back
    method = "lm" if len(cells) >= 5 else "trf"
    sol = least_squares(residuals, start, method=method, xtol=1e-12, ftol=1e-12)
    return KStarModel(*(float(v) for v in sol.x))


def grid_mape(predict: Callable[[float, float], float], cells: Sequence[CalibrationCell]) -> float:
    """Mean absolute percentage error of a k* predictor over calibration cells."""
    errs = [abs(predict(c.q, c.S) - c.mean_kstar) / c.mean_kstar for c in cells]
    return 100.0 * float(np.mean(errs))


def calibrate_kstar(grid: CalibrationGrid | None = None, seed: int = 0) -> CalibrationResult:
    """Monte Carlo calibration of k* over the (q, S) grid, then the model fit.

    Each cell draws from its own RNG stream derived from (seed, q-index,
    S-index), so cells converge to identical estimates regardless of the
    order in which they are evaluated.
    """
    if grid is None:
        grid = CalibrationGrid()
    cells = []
    for qi, q in enumerate(grid.q_values):
        for si, S in enumerate(grid.aspect_ratios):
            rng = np.random.default_rng(np.random.SeedSequence((seed, qi, si)))
            cells.append(_simulate_cell(q, S, grid, rng))
    model = fit_kstar_model(cells)
    mape = grid_mape(lambda q, S: kstar(model, q, S), cells)
    return CalibrationResult(cells=tuple(cells), model=model, fit_mape_pct=mape, seed=seed)
