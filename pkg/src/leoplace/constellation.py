"""Walker constellation geometry.

Circular-orbit propagation, inter-satellite link topology, ground visibility
and per-epoch routing tables for an Earth-fixed simulation window.  Distances
are kilometres, angles degrees at the API surface (radians internally), delays
milliseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_KM = 6371.0
EARTH_MU_KM3_S2 = 398600.4418
EARTH_ROTATION_RAD_S = 7.2921159e-5
SPEED_OF_LIGHT_KM_S = 299792.458

UNREACHABLE = -1


@dataclass(frozen=True)
class WalkerConfig:
    """Shape of a Walker-star constellation and the simulated time window.

    Plane ascending nodes are spread evenly over ``raan_spread_deg``;
    ``phasing_offset_deg`` advances the along-orbit slots of successive
    planes.  The window is ``num_epochs`` snapshots ``epoch_duration_s``
    apart.
    """

    num_planes: int = 4
    sats_per_plane: int = 15
    altitude_km: float = 550.0
    inclination_deg: float = 53.0
    raan_spread_deg: float = 180.0
    phasing_offset_deg: float = 0.0
    epoch_duration_s: float = 60.0
    num_epochs: int = 15
    min_elevation_deg: float = 10.0

    def __post_init__(self) -> None:
        if self.num_planes < 1 or self.sats_per_plane < 1:
            raise ValueError("need at least one plane and one satellite per plane")
        if self.altitude_km <= 0:
            raise ValueError("altitude must be positive")
        if not -90.0 <= self.inclination_deg <= 180.0:
            raise ValueError("inclination out of range")
        if self.epoch_duration_s <= 0 or self.num_epochs < 1:
            raise ValueError("bad time window")

    @property
    def num_sats(self) -> int:
        return self.num_planes * self.sats_per_plane

    @property
    def orbit_radius_km(self) -> float:
        return EARTH_RADIUS_KM + self.altitude_km

    @property
    def orbital_period_s(self) -> float:
        return 2.0 * math.pi * math.sqrt(self.orbit_radius_km**3 / EARTH_MU_KM3_S2)


@dataclass(frozen=True)
class GroundPoint:
    """Geodetic point on a spherical Earth."""

    lat_deg: float
    lon_deg: float
    alt_km: float = 0.0

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude {self.lat_deg} out of range")
        if not -180.0 <= self.lon_deg <= 360.0:
            raise ValueError(f"longitude {self.lon_deg} out of range")

    def ecef(self) -> np.ndarray:
        lat = math.radians(self.lat_deg)
        lon = math.radians(self.lon_deg)
        r = EARTH_RADIUS_KM + self.alt_km
        return np.array(
            [
                r * math.cos(lat) * math.cos(lon),
                r * math.cos(lat) * math.sin(lon),
                r * math.sin(lat),
            ]
        )

    def up(self) -> np.ndarray:
        lat = math.radians(self.lat_deg)
        lon = math.radians(self.lon_deg)
        return np.array(
            [
                math.cos(lat) * math.cos(lon),
                math.cos(lat) * math.sin(lon),
                math.sin(lat),
            ]
        )


@dataclass(frozen=True)
class OrbitalElements:
    """Per-satellite plane membership and initial angles (radians)."""

    plane: np.ndarray
    slot: np.ndarray
    raan_rad: np.ndarray
    anomaly_rad: np.ndarray

    @property
    def num_sats(self) -> int:
        return len(self.plane)


def build_walker_star(config: WalkerConfig) -> OrbitalElements:
    """Lay out satellites on evenly spread planes with evenly spaced slots.

    Satellite index is ``plane * sats_per_plane + slot``.  Plane p sits at
    RAAN ``p * raan_spread / num_planes``; slot j starts at anomaly
    ``j * 360 / sats_per_plane`` plus the per-plane phasing offset.
    """
    planes = np.repeat(np.arange(config.num_planes), config.sats_per_plane)
    slots = np.tile(np.arange(config.sats_per_plane), config.num_planes)
    raan_step = math.radians(config.raan_spread_deg / config.num_planes)
    anomaly_step = 2.0 * math.pi / config.sats_per_plane
    phasing = math.radians(config.phasing_offset_deg)
    return OrbitalElements(
        plane=planes,
        slot=slots,
        raan_rad=planes * raan_step,
        anomaly_rad=slots * anomaly_step + planes * phasing,
    )


def inertial_positions(
    elements: OrbitalElements, config: WalkerConfig, elapsed_s: float
) -> np.ndarray:
    """Inertial-frame positions (S, 3) after ``elapsed_s`` seconds."""
    r = config.orbit_radius_km
    mean_motion = math.sqrt(EARTH_MU_KM3_S2 / r**3)
    u = elements.anomaly_rad + mean_motion * elapsed_s
    inc = math.radians(config.inclination_deg)
    # In-plane coordinates rotated by inclination, then by RAAN about z.
    x_orb = r * np.cos(u)
    y_orb = r * np.sin(u)
    cos_o, sin_o = np.cos(elements.raan_rad), np.sin(elements.raan_rad)
    cos_i, sin_i = math.cos(inc), math.sin(inc)
    x = x_orb * cos_o - y_orb * cos_i * sin_o
    y = x_orb * sin_o + y_orb * cos_i * cos_o
    z = y_orb * sin_i
    return np.column_stack([x, y, z])


def propagate(
    elements: OrbitalElements, config: WalkerConfig, epoch_index: int
) -> np.ndarray:
    """Earth-fixed positions (S, 3) at the given epoch.

    Rotates the inertial frame by the sidereal angle accumulated since
    epoch 0, so epoch 0 reproduces the initial layout exactly.
    """
    if not 0 <= epoch_index < config.num_epochs:
        raise ValueError(f"epoch {epoch_index} outside [0, {config.num_epochs})")
    t = epoch_index * config.epoch_duration_s
    eci = inertial_positions(elements, config, t)
    theta = EARTH_ROTATION_RAD_S * t
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    # ECEF = Rz(-theta) @ ECI for an eastward-rotating Earth.
    x = eci[:, 0] * cos_t + eci[:, 1] * sin_t
    y = -eci[:, 0] * sin_t + eci[:, 1] * cos_t
    return np.column_stack([x, y, eci[:, 2]])


def elevation_deg(sat_pos: np.ndarray, ground: GroundPoint) -> float:
    """Elevation of a satellite above a ground point's local horizon."""
    los = sat_pos - ground.ecef()
    rng = np.linalg.norm(los)
    if rng == 0.0:
        raise ValueError("satellite coincides with ground point")
    s = float(np.dot(ground.up(), los) / rng)
    return math.degrees(math.asin(min(1.0, max(-1.0, s))))


def access_delay_ms(sat_pos: np.ndarray, ground: GroundPoint) -> float:
    """One-way propagation delay over the slant range, in ms."""
    rng = float(np.linalg.norm(sat_pos - ground.ecef()))
    return rng / SPEED_OF_LIGHT_KM_S * 1000.0


def build_isl_graph(
    positions: np.ndarray, elements: OrbitalElements
) -> list[tuple[int, int, float]]:
    """Undirected inter-satellite links with propagation delays.

    Fixed grid wiring: fore and aft slot within the plane, plus the same
    slot in each neighbouring plane (planes form a ring).  With exactly two
    planes the cross links ladder to slots j and j+1 of the other plane, so
    every satellite still ends up with two of them.  Delays follow the
    given positions; the wiring itself never changes between epochs.

    Returns:
        Sorted list of (s, t, delay_ms) with s < t.
    """
    num_planes = int(elements.plane.max()) + 1 if elements.num_sats else 0
    per_plane = elements.num_sats // max(num_planes, 1)
    edges: set[tuple[int, int]] = set()

    def add(a: int, b: int) -> None:
        if a != b:
            edges.add((min(a, b), max(a, b)))

    for s in range(elements.num_sats):
        p, j = int(elements.plane[s]), int(elements.slot[s])
        base = p * per_plane
        if per_plane > 1:
            add(s, base + (j + 1) % per_plane)
            add(s, base + (j - 1) % per_plane)
        if num_planes < 2:
            continue
        if num_planes == 2:
            if p == 0:
                add(s, per_plane + j)
                add(s, per_plane + (j + 1) % per_plane)
        else:
            for dp in (-1, 1):
                q = (p + dp) % num_planes
                add(s, q * per_plane + j)

    out = []
    for a, b in sorted(edges):
        d = float(np.linalg.norm(positions[a] - positions[b]))
        out.append((a, b, d / SPEED_OF_LIGHT_KM_S * 1000.0))
    return out


def visibility_sets(
    positions: np.ndarray,
    users: list[tuple[int, int, GroundPoint]],
    min_elevation_deg: float,
) -> dict[tuple[int, int], list[tuple[int, float, float]]]:
    """Satellites above the elevation mask for each (slice, user).

    Returns:
        {(n, u): [(sat, elevation_deg, access_delay_ms), ...]} sorted by
        satellite index; empty list when nothing is visible.
    """
    out: dict[tuple[int, int], list[tuple[int, float, float]]] = {}
    for n, u, gp in users:
        gpos = gp.ecef()
        up = gp.up()
        los = positions - gpos
        rng = np.linalg.norm(los, axis=1)
        sin_el = np.clip((los @ up) / rng, -1.0, 1.0)
        elev = np.degrees(np.arcsin(sin_el))
        vis = np.nonzero(elev >= min_elevation_deg)[0]
        out[(n, u)] = [
            (int(s), float(elev[s]), float(rng[s] / SPEED_OF_LIGHT_KM_S * 1000.0))
            for s in vis
        ]
    return out


def shortest_paths(
    num_sats: int, isl_edges: list[tuple[int, int, float]]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All-pairs shortest paths over the link graph, minimising delay.

    Floyd-Warshall with strict improvement, so the chosen routes are
    deterministic for a given edge list.  Hop counts follow the selected
    minimum-delay route, not an independent hop metric.

    Returns:
        (hops, delay_ms, next_hop); hops is UNREACHABLE (-1) and delay inf
        for disconnected pairs; next_hop[i, j] is the neighbour of i on the
        route to j, or UNREACHABLE.
    """
    delay = np.full((num_sats, num_sats), np.inf)
    np.fill_diagonal(delay, 0.0)
    nxt = np.full((num_sats, num_sats), UNREACHABLE, dtype=np.int32)
    np.fill_diagonal(nxt, np.arange(num_sats))
    hops = np.full((num_sats, num_sats), UNREACHABLE, dtype=np.int32)
    np.fill_diagonal(hops, 0)
    for a, b, d in isl_edges:
        if d < delay[a, b]:
            delay[a, b] = delay[b, a] = d
            nxt[a, b], nxt[b, a] = b, a
            hops[a, b] = hops[b, a] = 1
    for k in range(num_sats):
        via = delay[:, k, None] + delay[None, k, :]
        better = via < delay
        if better.any():
            delay[better] = via[better]
            hops[better] = (hops[:, k, None] + hops[None, k, :])[better]
            nxt[better] = np.broadcast_to(nxt[:, k, None], nxt.shape)[better]
    return hops, delay, nxt


@dataclass(frozen=True)
class ConstellationSnapshot:
    """Frozen per-epoch topology: positions, links, visibility and routes."""

    epoch_index: int
    positions: np.ndarray
    isl_edges: list[tuple[int, int, float]]
    visibility: dict[tuple[int, int], list[tuple[int, float, float]]]
    hops: np.ndarray
    delay_ms: np.ndarray
    next_hop: np.ndarray

    @property
    def num_sats(self) -> int:
        return len(self.positions)

    def visible_sats(self, n: int, u: int) -> list[int]:
        return [s for s, _, _ in self.visibility[(n, u)]]

    def access_delay(self, n: int, u: int, sat: int) -> float:
        for s, _, d in self.visibility[(n, u)]:
            if s == sat:
                return d
        raise KeyError(f"satellite {sat} not visible to user ({n}, {u})")

    def path_edges(self, src: int, dst: int) -> list[tuple[int, int]]:
        """Undirected edge keys along the min-delay route src -> dst."""
        if src == dst:
            return []
        if self.next_hop[src, dst] == UNREACHABLE:
            raise ValueError(f"no route between satellites {src} and {dst}")
        out = []
        a = src
        while a != dst:
            b = int(self.next_hop[a, dst])
            out.append((min(a, b), max(a, b)))
            a = b
        return out


def build_snapshot(
    elements: OrbitalElements,
    config: WalkerConfig,
    epoch_index: int,
    users: list[tuple[int, int, GroundPoint]],
) -> ConstellationSnapshot:
    """Propagate one epoch and assemble its full topology tables."""
    positions = propagate(elements, config, epoch_index)
    isl = build_isl_graph(positions, elements)
    vis = visibility_sets(positions, users, config.min_elevation_deg)
    hops, delay, nxt = shortest_paths(config.num_sats, isl)
    return ConstellationSnapshot(
        epoch_index=epoch_index,
        positions=positions,
        isl_edges=isl,
        visibility=vis,
        hops=hops,
        delay_ms=delay,
        next_hop=nxt,
    )
