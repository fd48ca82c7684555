"""Street geometry and mobility of vehicles and UAVs around a fixed base station.

The street is a 1-D segment ``[0, street_length)`` that wraps around, so an
x-offset between two nodes is always taken the short way round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import GeometryConfig


@dataclass
class VehicleKinematics:
    x: float
    y: float
    speed: float


@dataclass
class UavKinematics:
    x: float
    y: float
    speed: float


@dataclass
class WorldState:
    veh_x: np.ndarray
    veh_y: np.ndarray
    veh_v: np.ndarray
    uav_x: np.ndarray
    uav_y: np.ndarray
    uav_v: np.ndarray

    @property
    def n_vehicles(self) -> int:
        return len(self.veh_x)

    @property
    def n_uavs(self) -> int:
        return len(self.uav_x)

    def vehicle(self, i: int) -> VehicleKinematics:
        return VehicleKinematics(float(self.veh_x[i]), float(self.veh_y[i]), float(self.veh_v[i]))

    def uav(self, j: int) -> UavKinematics:
        return UavKinematics(float(self.uav_x[j]), float(self.uav_y[j]), float(self.uav_v[j]))

    def copy(self) -> "WorldState":
        return WorldState(*(a.copy() for a in self.__dict__.values()))


def spawn_world(geom: GeometryConfig, n_vehicles: int, n_uavs: int, rng: np.random.Generator) -> WorldState:
    """Vehicles placed uniformly on the street in fixed lanes; UAVs evenly spaced on the centre line."""
    L = geom.street_length
    veh_x = rng.uniform(0.0, L, n_vehicles)
    veh_y = rng.uniform(-geom.lane_half_width, geom.lane_half_width, n_vehicles)
    veh_v = rng.uniform(*geom.vehicle_speed, n_vehicles)
    uav_x = (np.arange(n_uavs) + 0.5) * L / max(n_uavs, 1)
    return WorldState(
        veh_x=veh_x,
        veh_y=veh_y,
        veh_v=veh_v,
        uav_x=uav_x,
        uav_y=np.zeros(n_uavs),
        uav_v=np.full(n_uavs, float(geom.uav_speed)),
    )


def advance(world: WorldState, geom: GeometryConfig) -> WorldState:
    """Move every node one slot along x, wrapping at the street ends."""
    L = geom.street_length
    veh_x = np.mod(world.veh_x + world.veh_v * geom.slot_length, L)
    uav_x = np.mod(world.uav_x + world.uav_v * geom.slot_length, L)
    # np.mod can return L itself for tiny negative inputs
    veh_x[veh_x >= L] = 0.0
    uav_x[uav_x >= L] = 0.0
    return WorldState(veh_x, world.veh_y.copy(), world.veh_v.copy(), uav_x, world.uav_y.copy(), world.uav_v.copy())


def wrap_offset(dx, street_length: float):
    """Signed shortest offset on the wrapped street, in [-L/2, L/2)."""
    return np.mod(np.asarray(dx) + 0.5 * street_length, street_length) - 0.5 * street_length


def slant_distance(
    vehicle: VehicleKinematics, uav: UavKinematics, geom: GeometryConfig, at_next_slot: bool = True
) -> float:
    vx, ux = vehicle.x, uav.x
    if at_next_slot:
        vx += vehicle.speed * geom.slot_length
        ux += uav.speed * geom.slot_length
    dx = float(wrap_offset(vx - ux, geom.street_length))
    dy = vehicle.y - uav.y
    return math.sqrt(dx * dx + dy * dy + geom.uav_height**2)


def pair_distances(world: WorldState, geom: GeometryConfig, at_next_slot: bool = False) -> np.ndarray:
    """Vehicle-to-UAV slant distances, shape (N, M)."""
    vx, ux = world.veh_x, world.uav_x
    if at_next_slot:
        vx = vx + world.veh_v * geom.slot_length
        ux = ux + world.uav_v * geom.slot_length
    dx = wrap_offset(vx[:, None] - ux[None, :], geom.street_length)
    dy = world.veh_y[:, None] - world.uav_y[None, :]
    return np.sqrt(dx**2 + dy**2 + geom.uav_height**2)


def bs_distances(world: WorldState, geom: GeometryConfig) -> np.ndarray:
    bx, by, bz = geom.bs_position
    return np.sqrt((world.veh_x - bx) ** 2 + (world.veh_y - by) ** 2 + bz**2)


def coverage_bound(geom: GeometryConfig) -> float:
    return math.sqrt(geom.coverage_radius**2 + geom.uav_height**2)


def in_coverage(vehicle: VehicleKinematics, uav: UavKinematics, geom: GeometryConfig) -> bool:
    return slant_distance(vehicle, uav, geom, at_next_slot=True) <= coverage_bound(geom)


def coverage_matrix(world: WorldState, geom: GeometryConfig) -> np.ndarray:
    """Boolean (N, M): vehicle still inside the UAV's footprint next slot."""
    return pair_distances(world, geom, at_next_slot=True) <= coverage_bound(geom)


def elevation_angle(distance, height: float):
    """Elevation in degrees seen from the ground node. Raises for distance < height."""
    d = np.asarray(distance, dtype=float)
    if (d < height).any():
        raise ValueError(f"distance {d.min()} is below the UAV height {height}")
    # clip guards the d == height rounding case
    deg = np.degrees(np.arcsin(np.minimum(height / d, 1.0)))
    return float(deg) if deg.ndim == 0 else deg
