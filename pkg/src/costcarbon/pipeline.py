"""Batch stages: ingest -> flatten -> analyze -> report.

Each stage reads its inputs from disk, so any later stage can be rerun on
its own against earlier outputs. Outputs are written in sorted order with
``repr`` float formatting, so identical inputs give byte-identical trees.
"""

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, idropp
from .emissions import average_aef, estimate_mef, mef_aef_summary, read_genemis
from .exceptions import ZipNotFoundError
from .geo import OTHER, Gazetteer, RegionSet, assign_region, zip_to_coords
from .reconcile import (
    MonthHourMatrix,
    Unit,
    flatten_tariff,
    matrix_to_csv,
    month_hour_average,
    read_hourly_series,
    read_matrix,
)
from .tariff import parse_metadata, read_tariff, split_tariff_filename

logger = logging.getLogger(__name__)

MANIFEST = "manifest.csv"
MANIFEST_COUNTS = "manifest_counts.csv"
TARIFF_REGIONS = "tariff_regions.csv"
INGEST_SUMMARY = "ingest_summary.txt"
FLATTEN_SUMMARY = "flatten_summary.txt"
ANALYZE_SUMMARY = "analyze_summary.txt"
REPORT = "report.txt"
MATRIX_DIR = "matrices"
ANALYSIS_DIR = "analysis"

EXIT_OK, EXIT_VALIDATION, EXIT_FATAL = 0, 1, 2


class StageError(RuntimeError):
    """Fatal pipeline problem (unreadable input, missing upstream stage)."""


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _listing(directory, pattern="*.csv"):
    if directory is None:
        return []
    if not directory.is_dir():
        raise StageError(f"not a readable directory: {directory}")
    return sorted(directory.glob(pattern))


def _pmap(func, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def check_inputs(config):
    missing = config.missing_paths()
    if missing:
        key, path = missing[0]
        raise StageError(f"{key}: path does not exist: {path}")


# ---------------------------------------------------------------- ingest


def _try(kind, path, loader, config, records):
    try:
        value = loader(path)
    except (ValueError, KeyError, OSError) as exc:
        records.append((kind, config.display(path), "failed", str(exc).replace("\n", " ")))
        return None
    records.append((kind, config.display(path), "ok", ""))
    return value


def _dam_label(path):
    region, sep, node = path.stem.partition("__")
    if not sep or not region or not node:
        raise ValueError(f"DAM file name {path.name!r} must look like <region>__<node>.csv")
    return region, node


def _read_dam(path):
    _dam_label(path)
    return read_hourly_series(path, unit=Unit.USD_PER_MWH)


def ingest(config):
    """Parse and validate every input, assign tariffs to regions, write the manifest.

    Returns the number of failed files.
    """
    check_inputs(config)
    out = config.output_dir
    records = []
    tariffs = [
        t for p in _listing(config.tariff_dir)
        if (t := _try("tariff", p, read_tariff, config, records)) is not None
    ]
    metadata = []
    if config.metadata_file is not None:
        metadata = _try(
            "metadata", config.metadata_file,
            lambda p: parse_metadata(p.read_text(encoding="utf-8")), config, records,
        ) or []
    for p in _listing(config.genemis_dir):
        _try("genemis", p, read_genemis, config, records)
    for p in _listing(config.aef_dir):
        _try("aef", p, lambda q: read_hourly_series(q, unit=Unit.KG_CO2E_PER_MWH), config, records)
    for p in _listing(config.dam_dir):
        _try("dam", p, _read_dam, config, records)
    regions = gazetteer = None
    if config.regions_file is not None:
        regions = _try("regions", config.regions_file, RegionSet.read, config, records)
    if config.gazetteer_file is not None:
        gazetteer = _try("gazetteer", config.gazetteer_file, Gazetteer.read, config, records)
    programs = []
    if config.idropp_programs is not None:
        programs = _try(
            "idropp_programs", config.idropp_programs,
            lambda p: idropp.parse_programs(p.read_text(encoding="utf-8")), config, records,
        ) or []
    if config.idropp_parameters is not None:
        _try(
            "idropp_parameters", config.idropp_parameters,
            lambda p: idropp.parse_parameters(p.read_text(encoding="utf-8")), config, records,
        )
    if config.ibdr_rates_file is not None:
        _try("ibdr_rates", config.ibdr_rates_file, read_ibdr_rates, config, records)

    region_rows = _assign_regions(metadata, regions, gazetteer)
    _write(out / MANIFEST, _csv_text(["input_kind", "file", "status", "detail"], records))
    counts = {}
    for kind, _, status, _ in records:
        ok, failed = counts.get(kind, (0, 0))
        counts[kind] = (ok + (status == "ok"), failed + (status != "ok"))
    _write(
        out / MANIFEST_COUNTS,
        _csv_text(
            ["input_kind", "n_files", "n_ok", "n_failed"],
            [(k, ok + bad, ok, bad) for k, (ok, bad) in sorted(counts.items())],
        ),
    )
    _write(
        out / TARIFF_REGIONS,
        _csv_text(["tariff_id", "latitude", "longitude", "iso_label", "on_boundary", "source"], region_rows),
    )
    failures = sum(bad for _, bad in counts.values())
    lines = ["== ingest ==", f"year: {config.year}"]
    lines += [f"{k}: {ok} ok, {bad} failed" for k, (ok, bad) in sorted(counts.items())]
    lines.append(f"tariffs parsed: {len(tariffs)}")
    if region_rows:
        labels = {}
        for row in region_rows:
            labels[row[3]] = labels.get(row[3], 0) + 1
        lines.append("tariff regions: " + ", ".join(f"{k}={v}" for k, v in sorted(labels.items())))
    if programs:
        bounds = [idropp.duration_bounds(p) for p in programs]
        lines.append(
            f"IBDR programs: {len(programs)}; event duration bounds "
            f"{min(b[0] for b in bounds):g}-{max(b[1] for b in bounds):g} h"
        )
    lines.append(f"validation failures: {failures}")
    _write(out / INGEST_SUMMARY, "\n".join(lines) + "\n")
    for kind, name, status, detail in records:
        if status != "ok":
            logger.error("%s %s: %s", kind, name, detail)
    return failures


def _assign_regions(metadata, regions, gazetteer):
    rows = []
    for meta in sorted(metadata, key=lambda m: m.tariff_id):
        lat, lon, source = meta.latitude, meta.longitude, "metadata"
        if (lat is None or lon is None) and gazetteer is not None and meta.zip:
            try:
                lat, lon = zip_to_coords(meta.zip, gazetteer)
                source = "gazetteer"
            except (ZipNotFoundError, ValueError):
                lat = lon = None
        if lat is None or lon is None:
            rows.append((meta.tariff_id, "", "", meta.iso_label or OTHER, "", "none"))
            continue
        if regions is None:
            rows.append((meta.tariff_id, repr(lat), repr(lon), meta.iso_label or OTHER, "", source))
            continue
        hit = assign_region(lon, lat, regions)
        if hit.on_boundary:
            logger.warning("tariff %s lies on a region boundary; assigned %s", meta.tariff_id, hit.region)
        rows.append((meta.tariff_id, repr(lat), repr(lon), hit.region, str(hit.on_boundary).lower(), source))
    return rows


def read_ibdr_rates(path):
    """``region,rate_usd_per_kw`` rows -> ``{region: [rates...]}``."""
    rates = {}
    for rownum, rec in enumerate(_read_csv(path), start=2):
        try:
            rate = float(rec["rate_usd_per_kw"])
            region = rec["region"].strip()
        except (KeyError, ValueError, AttributeError) as exc:
            raise ValueError(f"row {rownum}: {exc}") from None
        if rate < 0:
            raise ValueError(f"row {rownum}: negative rate")
        rates.setdefault(region, []).append(rate)
    return rates


# ---------------------------------------------------------------- flatten


def _manifest_ok(config, kind):
    path = config.output_dir / MANIFEST
    if not path.exists():
        raise StageError(f"missing {path}: run the ingest stage first")
    return [
        config.base_dir / row["file"] if not Path(row["file"]).is_absolute() else Path(row["file"])
        for row in _read_csv(path)
        if row["input_kind"] == kind and row["status"] == "ok"
    ]


def _flatten_task(args):
    path, year = args
    try:
        schedule = read_tariff(path)
        matrix = month_hour_average(flatten_tariff(schedule, year))
        label = Path(path).stem
        return label, matrix_to_csv(MonthHourMatrix(label, matrix.unit, matrix.cells, matrix.counts)), None
    except (ValueError, OSError) as exc:
        return Path(path).stem, None, str(exc)


def _signal_task(args):
    kind, path = args
    path = Path(path)
    try:
        if kind == "genemis":
            series = read_genemis(path)
            return [("aef_from_genemis", average_aef(series)), ("mef", estimate_mef(series))]
        if kind == "aef":
            return [("aef", month_hour_average(read_hourly_series(path, unit=Unit.KG_CO2E_PER_MWH)))]
        return [("dam", month_hour_average(read_hourly_series(path, unit=Unit.USD_PER_MWH)))]
    except (ValueError, OSError) as exc:
        return [("error", f"{path.name}: {exc}")]


def flatten(config):
    """Write a month-hour matrix per tariff and per region/node signal. Returns the failure count."""
    tariff_paths = _manifest_ok(config, "tariff")
    matrices = config.output_dir / MATRIX_DIR
    failures = 0
    n_tariffs = 0
    for label, text, error in _pmap(_flatten_task, [(p, config.year) for p in tariff_paths], config.jobs):
        if error is not None:
            failures += 1
            logger.error("flatten %s: %s", label, error)
            continue
        _write(matrices / "tariffs" / f"{label}__{Unit.USD_PER_KWH.value}.csv", text)
        n_tariffs += 1

    jobs = [("genemis", p) for p in _manifest_ok(config, "genemis")]
    jobs += [("aef", p) for p in _manifest_ok(config, "aef")]
    jobs += [("dam", p) for p in _manifest_ok(config, "dam")]
    produced = {"aef": {}, "aef_from_genemis": {}, "mef": {}, "dam": {}}
    for results in _pmap(_signal_task, jobs, config.jobs):
        for kind, value in results:
            if kind == "error":
                failures += 1
                logger.error("flatten signal %s", value)
            else:
                produced[kind][value.label] = value
    # measured AEF series win over AEF derived from generation/emissions totals
    aef = {**produced["aef_from_genemis"], **produced["aef"]}
    for sub, group in (("aef", aef), ("mef", produced["mef"]), ("dam", produced["dam"])):
        for label, matrix in sorted(group.items()):
            _write(matrices / sub / f"{label}__{matrix.unit.value}.csv", matrix_to_csv(matrix))

    lines = [
        "== flatten ==",
        f"tariff matrices: {n_tariffs}",
        f"AEF regions: {len(aef)}",
        f"MEF regions: {len(produced['mef'])}",
        f"DAM nodes: {len(produced['dam'])}",
    ]
    for region in sorted(set(aef) & set(produced["mef"])):
        try:
            ratio = mef_aef_summary(produced["mef"][region], aef[region])
        except ValueError:
            continue
        lines.append(f"MEF/AEF {region}: mean {ratio.mean:.3f} (min {ratio.min:.3f}, max {ratio.max:.3f})")
    lines.append(f"failures: {failures}")
    _write(config.output_dir / FLATTEN_SUMMARY, "\n".join(lines) + "\n")
    return failures


# ---------------------------------------------------------------- analyze


def _load_matrices(directory):
    return {m.label: m for m in (read_matrix(p) for p in _listing(directory))} if directory.is_dir() else {}


def _region_mean(mats):
    stack = np.stack([m.cells for m in mats])
    counts = np.isfinite(stack).sum(axis=0)
    with np.errstate(invalid="ignore"):
        cells = np.where(counts > 0, np.nansum(stack, axis=0) / np.maximum(counts, 1), np.nan)
    return cells, counts


def analyze(config):
    """Write the five analysis CSVs and a text summary; returns the summary text."""
    matrices = config.output_dir / MATRIX_DIR
    if not (config.output_dir / FLATTEN_SUMMARY).exists():
        raise StageError(f"missing {config.output_dir / FLATTEN_SUMMARY}: run the flatten stage first")
    if not (config.output_dir / TARIFF_REGIONS).exists():
        raise StageError(f"missing {config.output_dir / TARIFF_REGIONS}: run the ingest stage first")
    tariff_mats = _load_matrices(matrices / "tariffs")
    aef = _load_matrices(matrices / "aef")
    mef = _load_matrices(matrices / "mef")
    dam = _load_matrices(matrices / "dam")
    tariff_region = {row["tariff_id"]: row["iso_label"] for row in _read_csv(config.output_dir / TARIFF_REGIONS)}

    schedules = []
    for path in _manifest_ok(config, "tariff"):
        tariff_id, bundling = split_tariff_filename(path.name)
        if bundling.value == config.bundling and path.stem in tariff_mats:
            schedules.append(read_tariff(path))
    schedules.sort(key=lambda s: s.tariff_id)
    labels = {s.tariff_id: f"{s.tariff_id}_{s.bundling.value}" for s in schedules}

    categories = [analysis.categorize(s, config.year) for s in schedules]

    corr_rows = []
    premium_rows = []
    tariff_r = {}
    tariff_premium = {}
    by_region = {}
    for tariff_id, label in labels.items():
        matrix = tariff_mats[label]
        region = tariff_region.get(tariff_id, OTHER)
        for month in range(1, 13):
            try:
                prem = analysis.peak_premium(matrix, month)
            except ValueError:
                continue
            premium_rows.append((label, "tariff", region, month, prem))
            tariff_premium[(tariff_id, month)] = prem.ratio
        if region == OTHER:
            continue
        by_region.setdefault(region, []).append(matrix)
        if region in aef:
            for month in range(1, 13):
                rec = analysis.correlate_month(matrix, aef[region], month, region)
                corr_rows.append(("tariff_aef", rec))
                if rec.defined:
                    tariff_r[(tariff_id, month)] = rec.r

    node_r = {m: {} for m in config.flip_months}
    dam_by_region = {}
    for label, matrix in sorted(dam.items()):
        region, _, node = label.partition("__")
        dam_by_region.setdefault(region, []).append(matrix)
        for month in range(1, 13):
            try:
                premium_rows.append((label, "dam", region, month, analysis.peak_premium(matrix, month)))
            except ValueError:
                pass
        if region in mef:
            for month in range(1, 13):
                rec = analysis.correlate_month(matrix, mef[region], month, region)
                corr_rows.append(("dam_mef", rec))
                if month in node_r and rec.defined:
                    node_r[month][label] = rec.r

    heat_pairs = {}
    for region, mats in sorted(by_region.items()):
        if region in aef:
            cells, counts = _region_mean(mats)
            heat_pairs[region] = (MonthHourMatrix(f"{region}_tariffs", Unit.USD_PER_KWH, cells, counts), aef[region])
    corr_rows += [("region_tariff_aef", r) for r in analysis.correlation_table(heat_pairs)]
    heat_pairs = {}
    for region, mats in sorted(dam_by_region.items()):
        if region in mef:
            cells, counts = _region_mean(mats)
            heat_pairs[region] = (MonthHourMatrix(f"{region}_dam", Unit.USD_PER_MWH, cells, counts), mef[region])
    corr_rows += [("region_dam_mef", r) for r in analysis.correlation_table(heat_pairs)]

    rates = read_ibdr_rates(config.ibdr_rates_file) if config.ibdr_rates_file is not None else {}
    regime = analysis.regime_map(tariff_premium, tariff_r, tariff_region, rates)
    stats = analysis.summary_stats(schedules, config.year, config.summer_months)

    out = config.output_dir / ANALYSIS_DIR
    _write(out / "correlations.csv", analysis.correlations_csv(corr_rows))
    _write(out / "categories.csv", analysis.categories_csv(categories))
    _write(out / "premiums.csv", analysis.premiums_csv(premium_rows))
    _write(out / "regime_map.csv", analysis.regime_map_csv(regime))
    _write(out / "summary_stats.csv", analysis.summary_stats_csv(stats))

    text = _analysis_summary(config, categories, corr_rows, node_r, regime, stats, rates)
    _write(config.output_dir / ANALYZE_SUMMARY, text)
    return text


def _analysis_summary(config, categories, corr_rows, node_r, regime, stats, rates):
    lines = ["== analyze ==", f"tariffs analysed ({config.bundling}): {len(categories)}"]
    for attr in ("overall", "energy", "demand"):
        shares = analysis.category_shares(categories, attr)
        lines.append(
            f"category shares ({attr}): "
            + ", ".join(f"{c.value} {shares[c]:.1f}%" for c in analysis.TariffCategory)
        )
    for scope in ("tariff_aef", "dam_mef"):
        per_region = {}
        for s, rec in corr_rows:
            if s == scope and rec.defined:
                per_region.setdefault(rec.region, []).append(rec.r)
        for region, values in sorted(per_region.items()):
            lines.append(f"mean r {scope} {region}: {float(np.mean(values)):+.3f} (n={len(values)})")
    a, b = config.flip_months
    try:
        flip = analysis.flip_fraction(node_r[a], node_r[b])
        lines.append(
            f"flip fraction DAM/MEF month {a} vs {b}: {100 * flip.fraction:.1f}% "
            f"({flip.n_flipped}/{flip.n_nodes} nodes, {flip.n_zero} zero)"
        )
        regions = sorted({label.partition("__")[0] for label in set(node_r[a]) & set(node_r[b])})
        for region in regions:
            sub_a = {k: v for k, v in node_r[a].items() if k.startswith(region + "__")}
            sub_b = {k: v for k, v in node_r[b].items() if k.startswith(region + "__")}
            f = analysis.flip_fraction(sub_a, sub_b)
            lines.append(f"flip fraction {region}: {100 * f.fraction:.1f}% ({f.n_flipped}/{f.n_nodes})")
    except ValueError:
        lines.append(f"flip fraction DAM/MEF month {a} vs {b}: n/a (no nodes with defined correlations)")
    for s in stats:
        if s.n_tariffs:
            lines.append(
                f"{s.season} {s.kind}: mean {s.mean_charge:.4f}, spread {s.mean_spread:.3f} "
                f"(n={s.n_tariffs})"
            )
    lines.append(f"regime rows: {len(regime.rows)} (dropped {regime.dropped})")
    for region, (lo, hi) in sorted(regime.boxes.items()):
        lines.append(
            f"IBDR {region}: {lo:g}-{hi:g} $/kW = "
            f"{idropp.equivalent_hours(lo, config.reference_price):g}-"
            f"{idropp.equivalent_hours(hi, config.reference_price):g} h at ${config.reference_price:g}/kWh"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- report


def report(config):
    parts = []
    for name, stage in ((INGEST_SUMMARY, "ingest"), (FLATTEN_SUMMARY, "flatten"), (ANALYZE_SUMMARY, "analyze")):
        path = config.output_dir / name
        if not path.exists():
            raise StageError(f"missing {path}: run the {stage} stage first")
        parts.append(path.read_text(encoding="utf-8"))
    text = "\n".join(parts)
    _write(config.output_dir / REPORT, text)
    return text

