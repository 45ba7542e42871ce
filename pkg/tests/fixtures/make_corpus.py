"""Regenerate the synthetic fixture corpus and its golden analysis files.

    python tests/fixtures/make_corpus.py            # rewrite corpus/
    python tests/fixtures/make_corpus.py --golden   # also refresh golden/ from a pipeline run

Everything is seeded, so repeated runs give identical files.
"""

import argparse
import csv
import datetime as dt
import json
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
CORPUS = HERE / "corpus"
GOLDEN = HERE / "golden"
YEAR = 2023
HEADER = ("kind,charge_family,rate,tier_floor,month_start,month_end,"
          "weekday_start,weekday_end,hour_start,hour_end,assessed")

sys.path.insert(0, str(HERE.parent))
from oracles import three_region_geojson  # noqa: E402

# name -> (bundling, rows); rows are (kind, family, rate, floor, ms, me, ws, we, hs, he, assessed)
TARIFFS = {
    "flat_west": ("bundled", [("energy", "E", "0.11", 0)]),
    "tou_west": ("bundled", [
        ("energy", "SUM", "0.13", 0, 6, 9), ("energy", "SUMPK", "0.09", 0, 6, 9, 0, 4, 16, 21),
        ("energy", "WIN", "0.10", 0, 1, 5), ("energy", "WIN2", "0.10", 0, 10, 12),
        ("demand", "FAC", "9.50", 0), ("demand", "PK", "6.25", 0, 6, 9, 0, 4, 16, 21),
        ("customer", "CUST", "350.00", 0),
    ]),
    "tier_central": ("bundled", [
        ("energy", "E", "0.12", 0), ("energy", "E", "0.08", "400000"),
        ("demand", "D", "11.00", 0, 1, 12, 0, 4, 12, 20),
    ]),
    "seasonal_central": ("bundled", [
        ("energy", "S", "0.125", 0, 6, 9), ("energy", "W", "0.105", 0, 1, 5),
        ("energy", "W2", "0.105", 0, 10, 12), ("demand", "D", "7.75", 0),
    ]),
    "daily_east": ("bundled", [
        ("energy", "E", "0.095", 0), ("demand", "DAY", "0.45", 0, 1, 12, 0, 6, 14, 19, "daily"),
        ("customer", "C", "120.00", 0),
    ]),
    "night_east": ("bundled", [
        ("energy", "DAY", "0.14", 0, 1, 12, 0, 6, 7, 23), ("energy", "NIGHT", "0.06", 0, 1, 12, 0, 6, 0, 7),
        ("energy", "NIGHT2", "0.06", 0, 1, 12, 0, 6, 23, 24),
    ]),
    "rural_other": ("bundled", [("energy", "E", "0.15", 0), ("demand", "D", "4.00", 0)]),
    "wires_west": ("delivery_only", [("energy", "E", "0.04", 0), ("demand", "D", "5.50", 0)]),
}

# tariff_id, zip, latitude, longitude, sector, service_type (blank coordinates -> gazetteer)
METADATA = [
    ("flat_west", "90001", "34.5", "-117.0", "Commercial", "Bundled"),
    ("tou_west", "90002", "", "", "Industrial", "Bundled"),
    ("tier_central", "73301", "31.0", "-104.0", "Industrial", "Bundled"),
    ("seasonal_central", "73302", "", "", "Commercial", "Bundled"),
    ("daily_east", "27601", "38.5", "-84.0", "Industrial", "Bundled"),
    ("night_east", "27602", "31.5", "-87.6", "Commercial", "Bundled"),
    ("rural_other", "59001", "44.0", "-110.0", "Industrial", "Bundled"),
    ("wires_west", "90003", "36.0", "-119.0", "Industrial", "Delivery Only"),
]
GAZETTEER = [("90002", "35.25", "-118.5"), ("73302", "38.5", "-96.0"), ("59001", "44.0", "-110.0")]

REGIONS = ("WEST", "CENTRAL", "EAST")
NODES_PER_REGION = 4


def _tariff_text(rows):
    lines = [HEADER]
    for row in rows:
        kind, fam, rate, floor, *win = row
        assessed = "monthly"
        if win and win[-1] == "daily":
            assessed = win.pop()
        ms, me, ws, we, hs, he = (win + [1, 12, 0, 6, 0, 24][len(win):])
        lines.append(f"{kind},{fam},{rate},{floor},{ms},{me},{ws},{we},{hs},{he},{assessed}")
    return "\n".join(lines) + "\n"


def _stamps(step_min=60):
    n = (dt.datetime(YEAR + 1, 1, 1) - dt.datetime(YEAR, 1, 1)) // dt.timedelta(minutes=step_min)
    base = dt.datetime(YEAR, 1, 1)
    return [base + dt.timedelta(minutes=step_min * k) for k in range(n)]


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def build(root=CORPUS):
    if root.exists():
        shutil.rmtree(root)
    for sub in ("tariffs", "genemis", "dam", "idropp"):
        (root / sub).mkdir(parents=True)
    rng = np.random.default_rng(2023)

    for name, (bundling, rows) in TARIFFS.items():
        (root / "tariffs" / f"{name}_{bundling}.csv").write_text(_tariff_text(rows), encoding="utf-8")
    _write_csv(
        root / "metadata.csv",
        ["tariff_id", "utility_name", "eia_id", "zip", "latitude", "longitude", "sector", "service_type",
         "iso_label", "start_date", "end_date", "min_peak_kw", "max_peak_kw"],
        [(t, f"Utility {k}", 1000 + k, z, lat, lon, sec, svc, "", "2020-01-01", "", "", "")
         for k, (t, z, lat, lon, sec, svc) in enumerate(METADATA)],
    )
    _write_csv(root / "gazetteer.csv", ["zip", "latitude", "longitude"], GAZETTEER)
    (root / "regions.geojson").write_text(json.dumps(three_region_geojson(), indent=1) + "\n", encoding="utf-8")

    hours = _stamps()
    month = np.array([t.month for t in hours])
    hour = np.array([t.hour for t in hours])
    solar = np.clip(np.sin((hour - 6) / 12 * np.pi), 0, None) * (1 + 0.4 * np.cos((month - 7) / 6 * np.pi))
    mef_shape = {}
    for r, region in enumerate(REGIONS):
        demand = 20_000 * (1 + r) * (1 + 0.25 * np.sin((hour - 9 - 2 * r) / 24 * 2 * np.pi))
        demand *= 1 + 0.15 * np.cos((month - 7 - r) / 6 * np.pi)
        gen = demand * rng.uniform(0.95, 1.05, demand.size)
        # marginal fuel is cleaner at midday (solar) and dirtier in the evening
        factor = 420 + 120 * r - 260 * solar + 80 * np.cos((hour - 19) / 24 * 2 * np.pi)
        mef_shape[region] = factor
        emis = factor * gen + rng.normal(0, 2_000, gen.size)
        _write_csv(
            root / "genemis" / f"{region}.csv",
            ["timestamp", "generation_mwh", "emissions_kg"],
            [(t.strftime("%Y-%m-%d %H:%M"), f"{g:.1f}", f"{e:.0f}") for t, g, e in zip(hours, gen, emis)],
        )

    for r, region in enumerate(REGIONS):
        for k in range(NODES_PER_REGION):
            # nodes mix a congestion term that tracks the marginal factor in some months and opposes it in others
            sign = np.where(np.isin(month, (6, 7, 8)) & (k % 2 == 1), -1.0, 1.0)
            lmp = 35 + 0.08 * sign * (mef_shape[region] - mef_shape[region].mean()) + 6 * np.sin(hour / 24 * 2 * np.pi + k)
            lmp = lmp + rng.normal(0, 1.5, lmp.size)
            if region == "WEST" and k == 0:
                lmp[(month == 4) & (hour == 13)] -= 60  # negative midday prices
            node = f"N{r}{k}"
            if region == "EAST" and k == 0:
                quarter = _stamps(15)
                fine = np.repeat(lmp, 4) + rng.normal(0, 0.5, lmp.size * 4)
                rows = [(t.strftime("%Y-%m-%d %H:%M"), f"{v:.2f}") for t, v in zip(quarter, fine)]
            else:
                rows = [(t.strftime("%Y-%m-%d %H:%M"), f"{v:.2f}") for t, v in zip(hours, lmp)]
            _write_csv(root / "dam" / f"{region}__{node}.csv", ["timestamp", "value"], rows)

    sys.path.insert(0, str(HERE.parents[1] / "src"))
    from costcarbon.idropp import COLUMN_IDS, parameters_csv

    programs = [
        {"region": "WEST", "state": "CA", "min_dur": "1", "max_dur": "4", "base_method": "10-in-10",
         "weekends": "no", "holidays": "no", "prev_events": "no", "range_val": "10", "function": "mean",
         "base_hours": "12-20", "program_rate": "8"},
        {"region": "WEST", "state": "CA", "max_dur": "5", "firm_level": "500", "program_rate": "45"},
        {"region": "CENTRAL", "state": "TX", "range_val": "5", "function": "max", "program_rate": "30"},
        {"region": "EAST", "state": "NY", "min_dur": "2", "program_rate": "120"},
    ]
    _write_csv(root / "idropp" / "us_program_parameters.csv", ["program_name", *COLUMN_IDS],
               [[f"P{k}", *(p.get(c, "n/a") for c in COLUMN_IDS)] for k, p in enumerate(programs)])
    (root / "idropp" / "program_parameters.csv").write_text(parameters_csv(), encoding="utf-8")
    _write_csv(root / "ibdr_rates.csv", ["region", "rate_usd_per_kw"],
               [("WEST", "40"), ("WEST", "95"), ("CENTRAL", "60"), ("EAST", "200"), ("EAST", "150")])

    (root / "config.txt").write_text(
        "# synthetic fixture corpus\n"
        "tariff_dir = tariffs\n"
        "metadata_file = metadata.csv\n"
        "genemis_dir = genemis\n"
        "dam_dir = dam\n"
        "regions_file = regions.geojson\n"
        "gazetteer_file = gazetteer.csv\n"
        "idropp_programs = idropp/us_program_parameters.csv\n"
        "idropp_parameters = idropp/program_parameters.csv\n"
        "ibdr_rates_file = ibdr_rates.csv\n"
        "output_dir = out\n"
        "year = 2023\n"
        "flip_months = 1, 7\n",
        encoding="utf-8",
    )


def refresh_golden():
    from costcarbon.cli import main

    with tempfile.TemporaryDirectory() as tmp:
        for stage in ("ingest", "flatten", "analyze", "report"):
            main([stage, "--config", str(CORPUS / "config.txt"), "--out", tmp])
        if GOLDEN.exists():
            shutil.rmtree(GOLDEN)
        (GOLDEN / "analysis").mkdir(parents=True)
        for path in sorted((Path(tmp) / "analysis").glob("*.csv")):
            shutil.copy(path, GOLDEN / "analysis" / path.name)
        for name in ("tariff_regions.csv", "report.txt"):
            shutil.copy(Path(tmp) / name, GOLDEN / name)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--golden", action="store_true", help="also refresh golden outputs")
    args = parser.parse_args()
    build()
    if args.golden:
        refresh_golden()
