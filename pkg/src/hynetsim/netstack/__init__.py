"""Abstract radio access and traffic layer: medium-access models, flows, metrics."""

from .mac import (
    CellularInfrastructure,
    CellularLink,
    CsmaLink,
    MmWaveLink,
    RateServer,
    SpsLink,
    SpsReservation,
    Technology,
    Terminal,
)
from .radio import (
    Medium,
    RadioContext,
    SE_STEPS,
    Transmission,
    capacity_bps,
    noise_floor_dbm,
    sinr_db,
    spectral_efficiency,
)
from .traffic import FlowStats, Packet, cam_source, cbr_source, collect_stats

__all__ = [
    "CellularInfrastructure",
    "CellularLink",
    "CsmaLink",
    "FlowStats",
    "Medium",
    "MmWaveLink",
    "Packet",
    "RadioContext",
    "RateServer",
    "SE_STEPS",
    "SpsLink",
    "SpsReservation",
    "Technology",
    "Terminal",
    "Transmission",
    "cam_source",
    "capacity_bps",
    "cbr_source",
    "collect_stats",
    "noise_floor_dbm",
    "sinr_db",
    "spectral_efficiency",
]
