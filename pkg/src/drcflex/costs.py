"""Hourly generalized-cost model for both feeder routing strategies.

Every component is an hourly cost in hours of equivalent patron time for one
zone, split across nine books: discounted waiting (C_W, outbound only), local
in-vehicle time per direction (C_Tp, C_Td), line-haul riding (C_Lp, C_Ld),
terminal transfers (C_Rp, C_Rd), and agency distance and time costs (C_vk,
C_vh).  The generalized cost GC is their sum over all zones; dividing by the
total hourly patronage gives the per-patron figure the experiments report.

Under fully-flexible routing each dispatch runs a door-to-door tour over the
Q requests of a headway plus the dispatch point, with expected length
k*(Q+1, S) * sqrt((Q+1)*l*w).  Under semi-flexible routing buses sweep fixed
serpentine paths of swath width w0 and patrons walk to the passing bus, so
waiting drops (no share of the collection tour) while the vehicle path
acquires the fixed lw/w0 + w0/2 sweep.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Literal

from .expectations import TourLengthLaw, as_tour_law
from .params import ScenarioParams, ZoneGrid, ZoneIndex, line_haul_distance
from .tourlength import KStarModel, feasible_swath_widths

FULLY_FLEXIBLE = "fully_flexible"
SEMI_FLEXIBLE = "semi_flexible"
STRATEGIES = (FULLY_FLEXIBLE, SEMI_FLEXIBLE)

Direction = Literal["outbound", "inbound"]
DIRECTIONS: tuple[Direction, Direction] = ("outbound", "inbound")

# Below this per-dispatch occupancy the second-order expansions in the
# expected tour terms lose accuracy; callers are warned once.
LOW_OCCUPANCY_MEAN = 0.5


class LowOccupancyWarning(UserWarning):
    """Mean occupancy small enough to degrade the cost model's expansions."""


class InfeasibleDesignError(ValueError):
    """A design violates a hard constraint; names the constraint and zone."""

    def __init__(self, constraint: str, zone: ZoneIndex | None, detail: str):
        self.constraint = constraint
        self.zone = zone
        where = f" at zone {(zone.m, zone.n)}" if zone is not None else ""
        super().__init__(f"infeasible design: {constraint}{where}: {detail}")


@dataclass(frozen=True)
class ZoneDesign:
    """Operational variables of one zone: headways and the sync multiple."""

    z: ZoneIndex
    H_p: float  # outbound dispatch headway (h)
    H_d: float  # inbound dispatch headway (h), gamma * H_t by construction
    gamma: int

    def __post_init__(self) -> None:
        if self.H_p <= 0 or self.H_d <= 0:
            raise ValueError("headways must be positive")
        if self.gamma < 1:
            raise ValueError("gamma must be a positive integer")

    def headway(self, direction: Direction) -> float:
        return self.H_p if direction == "outbound" else self.H_d


@dataclass(frozen=True)
class DesignSolution:
    """A complete service design: strategy, grid, fleet size, zone variables."""

    strategy: str
    grid: ZoneGrid
    K: int
    zones: tuple[ZoneDesign, ...]
    w0: float | None = None

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.K < 1:
            raise ValueError("vehicle capacity K must be at least 1")
        expected = {(z.m, z.n) for z in self.grid.zones()}
        got = {(zd.z.m, zd.z.n) for zd in self.zones}
        if got != expected:
            raise ValueError("zone designs must cover every grid zone exactly once")
        if (self.w0 is not None) != (self.strategy == SEMI_FLEXIBLE):
            raise ValueError("w0 must be present exactly for the semi-flexible strategy")

    def zone(self, z: ZoneIndex) -> ZoneDesign:
        for zd in self.zones:
            if zd.z == z:
                return zd
        raise KeyError(f"no design for zone {(z.m, z.n)}")


@dataclass(frozen=True)
class ZoneCostTerms:
    """The nine hourly cost books for one zone (hours of equivalent time)."""

    C_W: float
    C_Tp: float
    C_Td: float
    C_Lp: float
    C_Ld: float
    C_Rp: float
    C_Rd: float
    C_vk: float
    C_vh: float

    FIELDS = ("C_W", "C_Tp", "C_Td", "C_Lp", "C_Ld", "C_Rp", "C_Rd", "C_vk", "C_vh")

    @property
    def total(self) -> float:
        return sum(getattr(self, f) for f in self.FIELDS)

    @property
    def user(self) -> float:
        return self.total - self.C_vk - self.C_vh

    @property
    def agency(self) -> float:
        return self.C_vk + self.C_vh


@dataclass(frozen=True)
class CostBreakdown:
    """Aggregate cost books plus the matrix of per-zone terms."""

    C_W: float
    C_Tp: float
    C_Td: float
    C_Lp: float
    C_Ld: float
    C_Rp: float
    C_Rd: float
    C_vk: float
    C_vh: float
    GC: float
    gc_per_patron_min: float
    per_zone: dict[tuple[int, int], ZoneCostTerms]

    @property
    def user(self) -> float:
        return self.C_W + self.C_Tp + self.C_Td + self.C_Lp + self.C_Ld + self.C_Rp + self.C_Rd

    @property
    def agency(self) -> float:
        return self.C_vk + self.C_vh

    def to_csv(self, path) -> None:
        """One row per zone per component, then an aggregate row."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["zone_m", "zone_n", *ZoneCostTerms.FIELDS, "total"])
            for (m, n), terms in sorted(self.per_zone.items()):
                writer.writerow(
                    [m, n]
                    + [f"{getattr(terms, f):.9f}" for f in ZoneCostTerms.FIELDS]
                    + [f"{terms.total:.9f}"]
                )
            writer.writerow(
                ["all", "all"]
                + [f"{getattr(self, f):.9f}" for f in ZoneCostTerms.FIELDS]
                + [f"{self.GC:.9f}"]
            )


# ---------------------------------------------------------------------------
# Shared per-zone quantities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _ZoneEnv:
    lam: float  # demand density for the direction (patrons/h/km^2)
    H: float  # dispatch headway for the direction (h)
    tau: float  # per-patron dwell time for the direction (h)
    mu: float  # mean occupancy per dispatch
    q2: float  # E[Q^2] = mu^2 + mu
    D: float  # line-haul distance (km)
    s: float  # sqrt(zone area) (km)
    S: float  # zone aspect ratio
    area: float


def _zone_env(
    params: ScenarioParams, grid: ZoneGrid, zd: ZoneDesign, direction: Direction
) -> _ZoneEnv:
    lam = params.lambda_p if direction == "outbound" else params.lambda_d
    tau = params.tau_p if direction == "outbound" else params.tau_d
    H = zd.headway(direction)
    area = grid.l * grid.w
    mu = lam * H * area
    return _ZoneEnv(
        lam=lam,
        H=H,
        tau=tau,
        mu=mu,
        q2=mu * mu + mu,
        D=line_haul_distance(grid, zd.z),
        s=math.sqrt(area),
        S=grid.S,
        area=area,
    )


# ---------------------------------------------------------------------------
# Fully-flexible components
# ---------------------------------------------------------------------------


def ff_wait_cost_zone(
    params: ScenarioParams,
    grid: ZoneGrid,
    zd: ZoneDesign,
    model: KStarModel | TourLengthLaw,
) -> float:
    """Discounted at-home waiting: half headway, half tour, boarding queue."""
    e = _zone_env(params, grid, zd, "outbound")
    law = as_tour_law(model)
    half_tour = law.rider_tour_units(e.mu, e.S) * e.s / (2.0 * e.H * params.v_l)
    return params.alpha * (e.mu / 2.0 + half_tour + params.tau_p / (2.0 * e.H) * e.q2)


def ff_local_tour_cost_zone(
    params: ScenarioParams,
    grid: ZoneGrid,
    zd: ZoneDesign,
    model: KStarModel | TourLengthLaw,
    direction: Direction,
) -> float:
    """In-vehicle share of the collection tour: half the tour plus dwells."""
    e = _zone_env(params, grid, zd, direction)
    law = as_tour_law(model)
    half_tour = law.rider_tour_units(e.mu, e.S) * e.s / (2.0 * e.H * params.v_l)
    return half_tour + e.tau / (2.0 * e.H) * e.q2


def line_haul_cost_zone(
    params: ScenarioParams, grid: ZoneGrid, zd: ZoneDesign, direction: Direction
) -> float:
    """Riding between the zone and the terminal: D/v per patron."""
    e = _zone_env(params, grid, zd, direction)
    return e.D / (e.H * params.v_l) * e.mu


def transfer_cost_zone(
    params: ScenarioParams, grid: ZoneGrid, zd: ZoneDesign, direction: Direction
) -> float:
    """Terminal transfer: walk, trunk-sync wait, and the boarding queue."""
    e = _zone_env(params, grid, zd, direction)
    if direction == "outbound":
        per_patron = params.t_ft + params.H_t / 2.0
        queue = params.tau_a
    else:
        per_patron = params.t_tf + (zd.gamma - 1) * zd.H_d / (2.0 * zd.gamma)
        queue = params.tau_b
    return e.mu / e.H * per_patron + queue / (2.0 * e.H) * e.q2


def ff_agency_cost_direction(
    params: ScenarioParams,
    grid: ZoneGrid,
    zd: ZoneDesign,
    model: KStarModel | TourLengthLaw,
    K: int,
    direction: Direction,
) -> tuple[float, float]:
    """One direction's (distance cost, time cost) for one zone."""
    law = as_tour_law(model)
    e = _zone_env(params, grid, zd, direction)
    dist_per_h = (e.D + law.mean_tour_units(e.mu, e.S) * e.s) / e.H
    dist_cost = params.pi_v(K) / params.theta * dist_per_h
    time_cost = params.pi_m(K) / params.theta * (dist_per_h / params.v_l + e.tau * e.mu / e.H)
    return dist_cost, time_cost


def ff_agency_cost_zone(
    params: ScenarioParams,
    grid: ZoneGrid,
    zd: ZoneDesign,
    model: KStarModel | TourLengthLaw,
    K: int,
) -> tuple[float, float]:
    """(distance cost, time cost) across both directions for one zone."""
    parts = [ff_agency_cost_direction(params, grid, zd, model, K, d) for d in DIRECTIONS]
    return sum(p[0] for p in parts), sum(p[1] for p in parts)


# ---------------------------------------------------------------------------
# Semi-flexible components
# ---------------------------------------------------------------------------


def sf_wait_cost_zone(params: ScenarioParams, grid: ZoneGrid, zd: ZoneDesign, w0: float) -> float:
    """Curbside waiting: half headway plus the bus's lateral approach."""
    if w0 <= 0:
        raise ValueError("swath width must be positive")
    e = _zone_env(params, grid, zd, "outbound")
    return params.alpha / e.H * e.mu * (e.H / 2.0 + w0 / (3.0 * params.v_l))


def sf_local_tour_cost_zone(
    params: ScenarioParams, grid: ZoneGrid, zd: ZoneDesign, w0: float, direction: Direction
) -> float:
    """In-vehicle time on the serpentine: half the sweep, detours, dwells."""
    e = _zone_env(params, grid, zd, direction)
    sweep = e.area / (params.v_l * w0) + w0 / (2.0 * params.v_l)
    return (sweep * e.mu + (w0 / (3.0 * params.v_l) + e.tau) * e.q2) / (2.0 * e.H)


def sf_agency_cost_direction(
    params: ScenarioParams,
    grid: ZoneGrid,
    zd: ZoneDesign,
    w0: float,
    K: int,
    direction: Direction,
) -> tuple[float, float]:
    """One direction's (distance cost, time cost) for one zone."""
    e = _zone_env(params, grid, zd, direction)
    dist_per_h = (e.area / w0 + w0 / 2.0 + e.D + e.mu * w0 / 3.0) / e.H
    dist_cost = params.pi_v(K) / params.theta * dist_per_h
    time_cost = params.pi_m(K) / params.theta * (dist_per_h / params.v_l + e.tau * e.mu / e.H)
    return dist_cost, time_cost


def sf_agency_cost_zone(
    params: ScenarioParams, grid: ZoneGrid, zd: ZoneDesign, w0: float, K: int
) -> tuple[float, float]:
    """(distance cost, time cost) across both directions for one zone."""
    parts = [sf_agency_cost_direction(params, grid, zd, w0, K, d) for d in DIRECTIONS]
    return sum(p[0] for p in parts), sum(p[1] for p in parts)


# ---------------------------------------------------------------------------
# Design-level aggregation
# ---------------------------------------------------------------------------


def mean_occupancy(params: ScenarioParams, grid: ZoneGrid, zd: ZoneDesign, direction: Direction) -> float:
    """Expected patrons per dispatch for one zone and direction."""
    return _zone_env(params, grid, zd, direction).mu


def capacity_ok(mu: float, K: int) -> bool:
    """Occupancy mean plus two standard deviations fits the vehicle."""
    return mu + 2.0 * math.sqrt(mu) <= K + 1e-12


def validate_design(
    params: ScenarioParams, design: DesignSolution, check_capacity: bool = True
) -> None:
    """Raise InfeasibleDesignError on any violated hard constraint.

    ``check_capacity=False`` skips the occupancy-vs-K rule, for studying
    capacity-relaxed designs; every other constraint stays hard.
    """
    grid = design.grid
    if design.strategy == SEMI_FLEXIBLE:
        widths = [c.w0 for c in feasible_swath_widths(grid.l, grid.w)]
        if not any(abs(design.w0 - w) < 1e-9 for w in widths):
            raise InfeasibleDesignError(
                "swath_width",
                None,
                f"w0={design.w0} not among feasible widths {sorted(widths)}",
            )
    for zd in design.zones:
        if not (params.H_min - 1e-12 <= zd.H_p <= params.H_max + 1e-12):
            raise InfeasibleDesignError(
                "outbound_headway_bounds",
                zd.z,
                f"H_p={zd.H_p} outside [{params.H_min}, {params.H_max}]",
            )
        lo = max(params.H_min, params.H_t)
        if not (lo - 1e-12 <= zd.H_d <= params.H_max + 1e-12):
            raise InfeasibleDesignError(
                "inbound_headway_bounds",
                zd.z,
                f"H_d={zd.H_d} outside [{lo}, {params.H_max}]",
            )
        if abs(zd.H_d - zd.gamma * params.H_t) > 1e-9:
            raise InfeasibleDesignError(
                "inbound_sync",
                zd.z,
                f"H_d={zd.H_d} is not gamma*H_t={zd.gamma * params.H_t}",
            )
        if not check_capacity:
            continue
        for direction in DIRECTIONS:
            mu = mean_occupancy(params, grid, zd, direction)
            if not capacity_ok(mu, design.K):
                raise InfeasibleDesignError(
                    "capacity",
                    zd.z,
                    f"{direction} occupancy {mu:.4f} + 2*sqrt exceeds K={design.K}",
                )


def zone_cost_terms(
    params: ScenarioParams,
    grid: ZoneGrid,
    zd: ZoneDesign,
    strategy: str,
    K: int,
    model: KStarModel | TourLengthLaw,
    w0: float | None = None,
) -> ZoneCostTerms:
    """All nine hourly books for one zone under the given strategy."""
    if strategy == FULLY_FLEXIBLE:
        c_w = ff_wait_cost_zone(params, grid, zd, model)
        c_tp = ff_local_tour_cost_zone(params, grid, zd, model, "outbound")
        c_td = ff_local_tour_cost_zone(params, grid, zd, model, "inbound")
        c_vk, c_vh = ff_agency_cost_zone(params, grid, zd, model, K)
    elif strategy == SEMI_FLEXIBLE:
        if w0 is None:
            raise InfeasibleDesignError("swath_width", zd.z, "semi-flexible cost needs w0")
        c_w = sf_wait_cost_zone(params, grid, zd, w0)
        c_tp = sf_local_tour_cost_zone(params, grid, zd, w0, "outbound")
        c_td = sf_local_tour_cost_zone(params, grid, zd, w0, "inbound")
        c_vk, c_vh = sf_agency_cost_zone(params, grid, zd, w0, K)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return ZoneCostTerms(
        C_W=c_w,
        C_Tp=c_tp,
        C_Td=c_td,
        C_Lp=line_haul_cost_zone(params, grid, zd, "outbound"),
        C_Ld=line_haul_cost_zone(params, grid, zd, "inbound"),
        C_Rp=transfer_cost_zone(params, grid, zd, "outbound"),
        C_Rd=transfer_cost_zone(params, grid, zd, "inbound"),
        C_vk=c_vk,
        C_vh=c_vh,
    )


def _low_occupancy_zones(params: ScenarioParams, design: DesignSolution) -> Iterator[tuple[int, int, str]]:
    for zd in design.zones:
        for direction in DIRECTIONS:
            if mean_occupancy(params, design.grid, zd, direction) < LOW_OCCUPANCY_MEAN:
                yield zd.z.m, zd.z.n, direction


def total_generalized_cost(
    params: ScenarioParams,
    design: DesignSolution,
    model: KStarModel | TourLengthLaw,
    check_capacity: bool = True,
) -> CostBreakdown:
    """Aggregate the nine books over every zone and report GC per patron."""
    validate_design(params, design, check_capacity=check_capacity)
    lows = list(_low_occupancy_zones(params, design))
    if lows:
        warnings.warn(
            "mean occupancy below 0.5 in some zone; second-order tour "
            "expectations may be inaccurate",
            LowOccupancyWarning,
            stacklevel=2,
        )
    per_zone: dict[tuple[int, int], ZoneCostTerms] = {}
    for zd in design.zones:
        per_zone[(zd.z.m, zd.z.n)] = zone_cost_terms(
            params, design.grid, zd, design.strategy, design.K, model, design.w0
        )
    sums = {f: sum(getattr(t, f) for t in per_zone.values()) for f in ZoneCostTerms.FIELDS}
    gc = sum(sums.values())
    patrons_per_h = (params.lambda_p + params.lambda_d) * params.L * params.W
    return CostBreakdown(
        **sums,
        GC=gc,
        gc_per_patron_min=gc * 60.0 / patrons_per_h,
        per_zone=per_zone,
    )
