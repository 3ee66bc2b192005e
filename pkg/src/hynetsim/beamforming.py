"""Analytical pencil-beam model: patch element pattern times planar array factor
with electronic steering, plus geometric LOS beam alignment."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple


class CoverageError(ValueError):
    """Requested pointing lies outside the array's steerable cone."""


@dataclass(frozen=True)
class ArrayConfig:
    n: int = 8  # elements along the azimuth axis
    m: int = 8  # elements along the elevation axis
    spacing_wavelengths: float = 0.5
    frequency_hz: float = 28e9
    element_exponent: float = 2.0  # cos^q power pattern; q=2 gives a 90 deg HPBW
    element_gain_dbi: float = 6.0
    max_steer_deg: float = 60.0

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1:
            raise ValueError("array needs at least one element per axis")
        if not 0.0 < self.max_steer_deg < 90.0:
            raise ValueError("max steering deviation must lie in (0, 90) degrees")
        if self.spacing_wavelengths <= 0.0:
            raise ValueError("element spacing must be positive")


class Pointing(NamedTuple):
    azimuth_deg: float
    elevation_deg: float


def _direction_cosines(az_deg: float, el_deg: float) -> tuple[float, float, float]:
    """(u, v, w) for an az/el direction: u along the array x-axis, v along y,
    w toward boresight."""
    az, el = math.radians(az_deg), math.radians(el_deg)
    return (math.cos(el) * math.sin(az), math.sin(el), math.cos(el) * math.cos(az))


def off_boresight_deg(p: Pointing) -> float:
    _, _, w = _direction_cosines(p.azimuth_deg, p.elevation_deg)
    return math.degrees(math.acos(min(1.0, max(-1.0, w))))


def _check_cone(config: ArrayConfig, steer: Pointing) -> None:
    dev = off_boresight_deg(steer)
    if dev > config.max_steer_deg + 1e-9:
        raise CoverageError(
            f"steering {dev:.2f} deg off boresight exceeds the {config.max_steer_deg:.0f} deg cone"
        )


def _dirichlet_magnitude(count: int, phase: float) -> float:
    """|sum_{k=0}^{count-1} exp(j k phase)|."""
    half = phase / 2.0
    s = math.sin(half)
    if abs(s) < 1e-12:
        return float(count)
    return abs(math.sin(count * half) / s)


def array_factor_db(config: ArrayConfig, steer: Pointing, look: Pointing) -> float:
    """Array-factor gain in dB relative to a single element (boresight peak = 10 log10(N M))."""
    u0, v0, _ = _direction_cosines(steer.azimuth_deg, steer.elevation_deg)
    u, v, _ = _direction_cosines(look.azimuth_deg, look.elevation_deg)
    kd = 2.0 * math.pi * config.spacing_wavelengths
    af = (_dirichlet_magnitude(config.n, kd * (u - u0))
          * _dirichlet_magnitude(config.m, kd * (v - v0)))
    nm = config.n * config.m
    if af <= nm * 1e-12:
        af = nm * 1e-12  # floor deep nulls instead of -inf
    return 20.0 * math.log10(af / nm) + 10.0 * math.log10(nm)


def element_pattern_db(config: ArrayConfig, look: Pointing) -> float:
    """cos^q element power pattern in dB, normalized to 0 dB at boresight."""
    _, _, w = _direction_cosines(look.azimuth_deg, look.elevation_deg)
    w = max(w, 1e-6)
    return 10.0 * config.element_exponent * math.log10(w)


def array_gain(config: ArrayConfig, steer: Pointing, look: Pointing) -> float:
    """Total directional gain (dBi): element gain + element pattern + array factor.

    The look direction must lie in the front hemisphere; the steer direction must
    lie inside the coverage cone.
    """
    _check_cone(config, steer)
    _, _, w = _direction_cosines(look.azimuth_deg, look.elevation_deg)
    if w <= 0.0:
        raise ValueError("look direction behind the array plane")
    return (array_factor_db(config, steer, look)
            + element_pattern_db(config, look)
            + config.element_gain_dbi)


@dataclass(frozen=True)
class ArrayFrame:
    """Mounting orientation: boresight azimuth/elevation in world coordinates."""

    boresight_az_deg: float = 0.0
    boresight_el_deg: float = 0.0

    def local_pointing(self, direction: tuple[float, float, float]) -> Pointing:
        """World-frame unit direction -> (az, el) in this array's frame."""
        az0 = math.radians(self.boresight_az_deg)
        el0 = math.radians(self.boresight_el_deg)
        # boresight axis and in-plane axes of the array
        bz = (math.cos(el0) * math.cos(az0), math.cos(el0) * math.sin(az0), math.sin(el0))
        bx = (-math.sin(az0), math.cos(az0), 0.0)
        by = (bz[1] * bx[2] - bz[2] * bx[1], bz[2] * bx[0] - bz[0] * bx[2], bz[0] * bx[1] - bz[1] * bx[0])
        dx = direction[0] * bx[0] + direction[1] * bx[1] + direction[2] * bx[2]
        dy = direction[0] * by[0] + direction[1] * by[1] + direction[2] * by[2]
        dz = direction[0] * bz[0] + direction[1] * bz[1] + direction[2] * bz[2]
        return Pointing(math.degrees(math.atan2(dx, dz)), math.degrees(math.asin(min(1.0, max(-1.0, dy)))))


@dataclass(frozen=True)
class Alignment:
    tx_pointing: Pointing
    rx_pointing: Pointing
    tx_misaligned: bool
    rx_misaligned: bool


def _clamp_to_cone(config: ArrayConfig, p: Pointing) -> tuple[Pointing, bool]:
    dev = off_boresight_deg(p)
    if dev <= config.max_steer_deg:
        return p, False
    # shrink the off-boresight angle to the cone edge, preserving the bearing
    u, v, _ = _direction_cosines(p.azimuth_deg, p.elevation_deg)
    s = math.hypot(u, v)
    cone = math.radians(config.max_steer_deg)
    su, sv = u / s * math.sin(cone), v / s * math.sin(cone)
    el = math.degrees(math.asin(sv))
    az = math.degrees(math.atan2(su, math.cos(cone)))
    return Pointing(az, el), True


def align_beams(
    tx_pos,
    rx_pos,
    tx_config: ArrayConfig,
    rx_config: ArrayConfig,
    tx_frame: ArrayFrame | None = None,
    rx_frame: ArrayFrame | None = None,
) -> Alignment:
    """Ideal geometric LOS alignment: each array points exactly at its peer,
    clamped to the coverage cone (with a misalignment flag) when out of reach.

    A frame of None means the array is gimballed onto the LOS (never misaligned).
    """
    dx = rx_pos[0] - tx_pos[0]
    dy = rx_pos[1] - tx_pos[1]
    dz = rx_pos[2] - tx_pos[2]
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    if dist == 0.0:
        raise ValueError("tx and rx positions coincide")
    d = (dx / dist, dy / dist, dz / dist)
    if tx_frame is None:
        tx_point, tx_miss = Pointing(0.0, 0.0), False
    else:
        tx_point, tx_miss = _clamp_to_cone(tx_config, tx_frame.local_pointing(d))
    back = (-d[0], -d[1], -d[2])
    if rx_frame is None:
        rx_point, rx_miss = Pointing(0.0, 0.0), False
    else:
        rx_point, rx_miss = _clamp_to_cone(rx_config, rx_frame.local_pointing(back))
    return Alignment(tx_point, rx_point, tx_miss, rx_miss)


def export_pattern(config: ArrayConfig, steer: Pointing, path, step_deg: float = 1.0) -> None:
    """Sample the directional gain over an (az, el) grid to CSV.

    Gains are written in dB relative to a single element at boresight
    (element gain excluded), covering the +/- max-steer window.
    """
    _check_cone(config, steer)
    lim = config.max_steer_deg
    n_steps = int(round(2 * lim / step_deg))
    grid = [-lim + i * step_deg for i in range(n_steps + 1)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["azimuth_deg", "elevation_deg", "gain_db"])
        for el in grid:
            for az in grid:
                look = Pointing(az, el)
                _, _, w = _direction_cosines(az, el)
                if w <= 0.0:
                    continue
                gain = array_factor_db(config, steer, look) + element_pattern_db(config, look)
                writer.writerow([f"{az:.3f}", f"{el:.3f}", f"{gain:.6f}"])
