"""Switch power model and network energy accounting.

A switch that carries no load costs nothing (it can sleep); an active
switch pays a fixed startup cost plus a superadditive load-dependent
term.  All loads are fluid values in Gbps; energy is accounted in
watt-timeslots (one timeslot of horizon = one unit of time), with the
conversion to joules left to presentation code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import CapacityError, ConfigError, DomainError

# Relative slack on capacity checks; fluid splitting can hit C exactly.
CAPACITY_RTOL = 1e-9


@dataclass(frozen=True)
class PowerParams:
    """Parameters of the per-switch power curve f(x) = sigma + mu * x**alpha.

    sigma:    fixed active power in watts
    mu:       watts per (Gbps)**alpha
    alpha:    superadditivity exponent, > 1
    capacity: maximum load per switch in Gbps
    """

    sigma: float = 200.0
    mu: float = 1e-4
    alpha: float = 2.0
    capacity: float = 1000.0
    high_startup: bool = field(init=False)

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if self.mu <= 0:
            raise ConfigError(f"mu must be > 0, got {self.mu}")
        if self.alpha <= 1:
            raise ConfigError(f"alpha must be > 1, got {self.alpha}")
        if self.capacity <= 0:
            raise ConfigError(f"capacity must be > 0, got {self.capacity}")
        # High-startup regime: sleeping whole switches beats balancing
        # below capacity, since the idle draw dominates the curve.
        high = self.sigma > self.mu * (self.alpha - 1.0) * self.capacity**self.alpha
        object.__setattr__(self, "high_startup", high)

    def max_load(self) -> float:
        return self.capacity * (1.0 + CAPACITY_RTOL)


@dataclass(frozen=True)
class LoadMap:
    """Per-switch loads (Gbps) for one timeslot; absent switches are asleep."""

    timeslot: int
    loads: Mapping[int, float]

    def validate(self, params: PowerParams) -> None:
        for switch, load in self.loads.items():
            if load < 0:
                raise DomainError(
                    f"negative load {load} on switch {switch} at t={self.timeslot}"
                )
            if load > params.max_load():
                raise CapacityError(
                    f"switch {switch} carries {load} Gbps > capacity "
                    f"{params.capacity} at t={self.timeslot}",
                    switches=[switch],
                    timeslot=self.timeslot,
                )


def switch_power(load: float, params: PowerParams, check: bool = True) -> float:
    """Power draw in watts of one switch at the given load (Gbps)."""
    if check:
        if load < 0:
            raise DomainError(f"load must be >= 0, got {load}")
        if load > params.max_load():
            raise CapacityError(
                f"load {load} Gbps exceeds capacity {params.capacity}",
                switches=[],
            )
    if load == 0:
        return 0.0
    return params.sigma + params.mu * load**params.alpha


def power_rate(load: float, params: PowerParams) -> float:
    """Watts consumed per Gbps of load; undefined at zero load."""
    if load <= 0:
        raise DomainError(f"power rate undefined for load {load}")
    return switch_power(load, params) / load


def optimal_rate(params: PowerParams) -> tuple[float, bool]:
    """Load that minimizes the power rate, and whether it exceeds capacity.

    Returns (r_star, exceeds_capacity).  In the realistic high-startup
    regime r_star > capacity, so the best a switch can do is run full.
    """
    r_star = (params.sigma / (params.mu * (params.alpha - 1.0))) ** (1.0 / params.alpha)
    return r_star, r_star > params.capacity


@dataclass(frozen=True)
class NetworkEnergy:
    """Energy total (watt-timeslots) with the per-timeslot power breakdown."""

    total: float
    per_timeslot: tuple[float, ...]


def network_energy(
    loads: Iterable[LoadMap], params: PowerParams, check: bool = True
) -> NetworkEnergy:
    """Sum switch power over switches and timeslots.

    Switches absent from a LoadMap are asleep and contribute nothing.
    With check=True a capacity violation raises, naming the timeslot and
    switch; check=False keeps accounting going for baselines that are
    allowed to overload (the violation is recorded elsewhere).
    """
    per_slot = []
    for load_map in loads:
        if check:
            load_map.validate(params)
        watts = 0.0
        for load in load_map.loads.values():
            watts += switch_power(load, params, check=False)
        per_slot.append(watts)
    return NetworkEnergy(total=float(sum(per_slot)), per_timeslot=tuple(per_slot))
