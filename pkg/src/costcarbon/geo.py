"""ZIP geocoding and point-in-polygon assignment of locations to grid regions."""

import csv
import io
import json
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from .exceptions import ZipNotFoundError

logger = logging.getLogger(__name__)

OTHER = "Other"
BOUNDARY_EPS = 1e-9
_ZIP = re.compile(r"^\d{5}$")


class Assignment(NamedTuple):
    region: str
    on_boundary: bool


@dataclass(frozen=True)
class Region:
    name: str
    # polygons, each a tuple of closed rings of (lon, lat); the first ring is the shell
    polygons: tuple


class RegionSet:
    """Named regions tested in file order."""

    def __init__(self, regions):
        self.regions = tuple(regions)
        names = [r.name for r in self.regions]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ValueError(f"duplicate region name(s): {', '.join(dupes)}")
        for region in self.regions:
            for polygon in region.polygons:
                for ring in polygon:
                    if len(ring) < 4 or ring[0] != ring[-1]:
                        raise ValueError(
                            f"region {region.name!r}: rings need >= 4 vertices with first == last"
                        )

    @property
    def names(self):
        return [r.name for r in self.regions]

    @classmethod
    def from_geojson(cls, data, name_property="NAME"):
        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        if data.get("type") != "FeatureCollection":
            raise ValueError("regions file must be a GeoJSON FeatureCollection")
        regions = []
        for k, feature in enumerate(data.get("features", [])):
            props = feature.get("properties") or {}
            if name_property not in props:
                raise ValueError(f"feature {k} lacks property {name_property!r}")
            geom = feature.get("geometry") or {}
            kind = geom.get("type")
            if kind == "Polygon":
                polys = [geom["coordinates"]]
            elif kind == "MultiPolygon":
                polys = geom["coordinates"]
            else:
                raise ValueError(f"feature {k}: unsupported geometry {kind!r}")
            polygons = tuple(
                tuple(tuple((float(x), float(y)) for x, y, *_ in ring) for ring in poly)
                for poly in polys
            )
            regions.append(Region(str(props[name_property]), polygons))
        return cls(regions)

    @classmethod
    def read(cls, path):
        return cls.from_geojson(Path(path).read_text(encoding="utf-8"))


def _crosses(ring, x, y):
    """Even-odd ray cast toward +x; returns the parity of edge crossings."""
    inside = False
    for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def _segment_distance(px, py, x1, y1, x2, y2):
    dx, dy = x2 - x1, y2 - y1
    seg = dx * dx + dy * dy
    t = 0.0 if seg == 0 else max(0.0, min(1.0, ((px - x1) * dx + (py - y1) * dy) / seg))
    return math.hypot(px - (x1 + t * dx), py - (y1 + t * dy))


def near_edge(ring, x, y, eps=BOUNDARY_EPS):
    return any(
        _segment_distance(x, y, x1, y1, x2, y2) <= eps
        for (x1, y1), (x2, y2) in zip(ring, ring[1:])
    )


def polygon_contains(polygon, x, y):
    """Even-odd rule across all rings, so holes punch out of the shell."""
    inside = False
    for ring in polygon:
        if _crosses(ring, x, y):
            inside = not inside
    return inside


def assign_region(lon, lat, regions):
    """First region (file order) containing the point, or ``"Other"``.

    ``on_boundary`` is set when the point lies within 1e-9 degrees of any
    ring edge, where the even-odd answer is not meaningful.
    """
    boundary = False
    hit = None
    for region in regions.regions:
        for polygon in region.polygons:
            if not boundary and any(near_edge(ring, lon, lat) for ring in polygon):
                boundary = True
            if hit is None and polygon_contains(polygon, lon, lat):
                hit = region.name
        if hit is not None and boundary:
            break
    if hit is not None:
        later = [
            r.name for r in regions.regions
            if r.name != hit and any(polygon_contains(p, lon, lat) for p in r.polygons)
        ]
        if later:
            logger.warning(
                "point (%s, %s) lies in overlapping regions %s; using %s",
                lon, lat, ", ".join([hit, *later]), hit,
            )
    return Assignment(hit or OTHER, boundary)


class Gazetteer:
    """Exact ZIP -> (latitude, longitude) lookup."""

    def __init__(self, entries=None):
        self._coords = {}
        for zip_code, (lat, lon) in (entries or {}).items():
            self.add(zip_code, lat, lon)

    def add(self, zip_code, lat, lon):
        zip_code = _check_zip(zip_code)
        lat, lon = float(lat), float(lon)
        if not (-90 <= lat <= 90 and -180 <= lon <= 180):
            raise ValueError(f"ZIP {zip_code}: coordinates ({lat}, {lon}) out of range")
        self._coords[zip_code] = (lat, lon)

    def __len__(self):
        return len(self._coords)

    def __contains__(self, zip_code):
        return zip_code in self._coords

    @classmethod
    def from_csv(cls, text):
        gaz = cls()
        reader = csv.DictReader(io.StringIO(text))
        missing = {"zip", "latitude", "longitude"} - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"gazetteer header lacks column(s) {', '.join(sorted(missing))}")
        for rownum, rec in enumerate(reader, start=2):
            try:
                gaz.add(rec["zip"].strip().zfill(5), rec["latitude"], rec["longitude"])
            except ValueError as exc:
                raise ValueError(f"gazetteer row {rownum}: {exc}") from None
        return gaz

    @classmethod
    def read(cls, path):
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


def _check_zip(zip_code):
    zip_code = str(zip_code).strip()
    if not _ZIP.match(zip_code):
        raise ValueError(f"malformed ZIP code {zip_code!r}")
    return zip_code


def zip_to_coords(zip_code, gazetteer):
    """``(latitude, longitude)`` of a ZIP code; raises :class:`ZipNotFoundError` if absent."""
    zip_code = _check_zip(zip_code)
    try:
        return gazetteer._coords[zip_code]
    except KeyError:
        raise ZipNotFoundError(zip_code) from None
