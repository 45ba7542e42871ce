import json
import logging

import pytest

from costcarbon.exceptions import ZipNotFoundError
from costcarbon.geo import OTHER, Gazetteer, Region, RegionSet, assign_region, zip_to_coords
from oracles import seeded, three_region_geojson, winding_region

UNIT = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0))


def unit_square():
    return RegionSet([Region("SQ", ((UNIT,),))])


def test_inside_and_outside_unit_square():
    assert assign_region(0.5, 0.5, unit_square()) == ("SQ", False)
    assert assign_region(2, 2, unit_square()) == (OTHER, False)


def test_boundary_is_flagged():
    assert assign_region(1.0, 0.5, unit_square()).on_boundary
    assert assign_region(0.0, 0.0, unit_square()).on_boundary
    assert assign_region(0.5, 1 + 5e-10, unit_square()).on_boundary
    assert not assign_region(0.5, 1 + 1e-6, unit_square()).on_boundary


def test_hole_and_multipolygon():
    regions = RegionSet.from_geojson(three_region_geojson())
    assert regions.names == ["WEST", "CENTRAL", "EAST"]
    assert assign_region(-100, 35, regions).region == OTHER  # in the hole
    assert assign_region(-104, 35, regions).region == "CENTRAL"
    assert assign_region(-87.5, 31, regions).region == "EAST"
    assert assign_region(-84, 39, regions).region == "EAST"
    assert assign_region(-115, 38, regions).region == OTHER  # the concave notch


def test_first_region_wins_on_overlap(caplog):
    regions = RegionSet([Region("A", ((UNIT,),)), Region("B", ((UNIT,),))])
    with caplog.at_level(logging.WARNING):
        assert assign_region(0.5, 0.5, regions).region == "A"
    assert "overlapping" in caplog.text


def test_region_set_validation():
    with pytest.raises(ValueError, match="first == last"):
        RegionSet([Region("A", ((UNIT[:-1],),))])
    with pytest.raises(ValueError, match="duplicate"):
        RegionSet([Region("A", ((UNIT,),)), Region("A", ((UNIT,),))])
    with pytest.raises(ValueError, match="FeatureCollection"):
        RegionSet.from_geojson(json.dumps({"type": "Feature"}))


def test_random_points_against_winding_oracle():
    data = three_region_geojson()
    regions = RegionSet.from_geojson(data)
    rng = seeded(21)
    checked = 0
    for _ in range(400):
        x, y = rng.uniform(-125, -75), rng.uniform(25, 45)
        got = assign_region(x, y, regions)
        if got.on_boundary:
            continue
        assert got.region == winding_region(data, x, y)
        checked += 1
    assert checked > 390


def test_two_disjoint_convex_polygons():
    tri = ((0.0, 0.0), (4.0, 0.0), (2.0, 3.0), (0.0, 0.0))
    quad = ((5.0, 5.0), (9.0, 5.0), (9.0, 8.0), (5.0, 8.0), (5.0, 5.0))
    regions = RegionSet([Region("T", ((tri,),)), Region("Q", ((quad,),))])
    data = {
        "features": [
            {"properties": {"NAME": "T"}, "geometry": {"type": "Polygon", "coordinates": [tri]}},
            {"properties": {"NAME": "Q"}, "geometry": {"type": "Polygon", "coordinates": [quad]}},
        ]
    }
    rng = seeded(3)
    for _ in range(100):
        x, y = rng.uniform(-1, 10), rng.uniform(-1, 9)
        got = assign_region(x, y, regions)
        if not got.on_boundary:
            assert got.region == winding_region(data, x, y)


def test_gazetteer_lookup():
    gaz = Gazetteer({"94305": (37.42, -122.17)})
    assert zip_to_coords("94305", gaz) == (37.42, -122.17)
    with pytest.raises(ZipNotFoundError):
        zip_to_coords("10001", gaz)
    with pytest.raises(ValueError, match="malformed"):
        zip_to_coords("9430", gaz)


def test_gazetteer_round_trip_thousand_zips():
    rng = seeded(8)
    truth = {}
    while len(truth) < 1000:
        truth[f"{rng.randrange(100000):05d}"] = (rng.uniform(-90, 90), rng.uniform(-180, 180))
    gaz = Gazetteer()
    for z, (lat, lon) in truth.items():
        gaz.add(z, lat, lon)
    assert all(zip_to_coords(z, gaz) == coords for z, coords in truth.items())


def test_gazetteer_csv_keeps_leading_zeros():
    gaz = Gazetteer.from_csv("zip,latitude,longitude\n2139,42.36,-71.09\n")
    assert zip_to_coords("02139", gaz) == (42.36, -71.09)
    with pytest.raises(ValueError, match="row 2"):
        Gazetteer.from_csv("zip,latitude,longitude\n02139,142.36,-71.09\n")
