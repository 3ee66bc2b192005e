"""CSV trace output (RFC-4180 quoting via the csv module) with finiteness guards."""

from __future__ import annotations

import csv
import math
from pathlib import Path

MOBILITY_HEADER = ["time_s", "subject", "x", "y", "z", "speed", "ax", "ay", "az",
                   "power_w", "energy_j"]
RADIO_HEADER = ["time_s", "link", "technology", "d3d_m", "d_obs_m", "los",
                "path_loss_db", "rsrp_dbm"]
PACKETS_HEADER = ["flow", "packet", "created_s", "outcome", "reason", "delivered_s", "delay_s"]
SUMMARY_HEADER = ["flow", "technology", "sent", "delivered", "lost", "pdr",
                  "delay_mean_s", "delay_median_s", "delay_p95_s", "mean_rate_bps"]


def fmt(value) -> str:
    """Canonical numeric formatting: trims noise, raises on non-finite values."""
    if value == "" or value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite trace value {value!r}")
        return format(value, ".9g")
    return str(value)


class TraceWriter:
    """Collects rows in memory and writes one CSV per stream at the end of a run."""

    def __init__(self, out_dir: Path | str):
        self.out_dir = Path(out_dir)
        self.mobility: list[list] = []
        self.radio: list[list] = []

    def mobility_row(self, time_s, subject, x, y, z, speed, ax, ay, az, power_w="", energy_j=""):
        self.mobility.append([time_s, subject, x, y, z, speed, ax, ay, az, power_w, energy_j])

    def radio_row(self, time_s, link, technology, d3d, d_obs, los, path_loss_db, rsrp_dbm):
        self.radio.append([time_s, link, technology, d3d, d_obs, los, path_loss_db, rsrp_dbm])

    def write_all(self, packet_rows: list, summaries: list[dict]) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        write_csv(self.out_dir / "mobility.csv", MOBILITY_HEADER, self.mobility)
        write_csv(self.out_dir / "radio.csv", RADIO_HEADER, self.radio)
        write_csv(self.out_dir / "packets.csv", PACKETS_HEADER, packet_rows)
        rows = [
            [s["flow"], s["technology"], s["sent"], s["delivered"], s["lost"],
             "" if s["pdr"] is None else s["pdr"],
             _blank_nan(s["delay_mean_s"]), _blank_nan(s["delay_median_s"]),
             _blank_nan(s["delay_p95_s"]), s["mean_rate_bps"]]
            for s in summaries
        ]
        write_csv(self.out_dir / "summary.csv", SUMMARY_HEADER, rows)


def _blank_nan(x: float) -> float | str:
    return "" if isinstance(x, float) and math.isnan(x) else x


def write_csv(path: Path | str, header: list[str], rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path: Path | str) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
