import dataclasses
import json
import math

import numpy as np
import pytest

from celltx import radio
from celltx import network
from celltx.network import (
    Cell,
    Position,
    PowerAssignment,
    PowerDomain,
    Scenario,
    UE,
    add_nomadic_site,
    associate_best_sinr,
    associate_nearest,
    check_assignment,
    evaluate,
    generate_honeycomb,
    generate_ue_grid,
    initial_assignment,
    load_topology,
    save_topology,
)
from celltx.radio import RadioConfig

from conftest import cell, honeycomb_with_ues, make_scenario, ue


# --- generators -------------------------------------------------------------


@pytest.mark.parametrize("n_sites,n_cells", [(12, 36), (25, 75), (1, 3)])
def test_honeycomb_cell_count(n_sites, n_cells):
    s = generate_honeycomb(n_sites, 2000.0)
    assert len(s.cells) == n_cells
    assert len(set(c.id for c in s.cells)) == n_cells


def test_honeycomb_sites_have_three_sectors():
    s = generate_honeycomb(7, 1500.0)
    sites = {}
    for c in s.cells:
        sites.setdefault((c.site.x, c.site.y), []).append(c.azimuth_deg)
    assert all(sorted(az) == [0.0, 120.0, 240.0] for az in sites.values())


def test_honeycomb_margin_bounds():
    isd = 2000.0
    s = generate_honeycomb(12, isd)
    xs = [c.site.x for c in s.cells]
    ys = [c.site.y for c in s.cells]
    assert min(xs) == pytest.approx(isd / 2)
    assert min(ys) == pytest.approx(isd / 2)
    assert max(xs) == pytest.approx(s.area_x_m - isd / 2)
    assert max(ys) == pytest.approx(s.area_y_m - isd / 2)


def test_honeycomb_rejects_bad_args():
    with pytest.raises(ValueError):
        generate_honeycomb(0, 2000.0)
    with pytest.raises(ValueError):
        generate_honeycomb(5, -1.0)


@pytest.mark.parametrize("nx,ny,count", [(19, 19, 361), (18, 18, 324), (1, 1, 1)])
def test_ue_grid_count(nx, ny, count):
    ues = generate_ue_grid(nx, ny, (9000.0, 7000.0))
    assert len(ues) == count
    assert len({u.id for u in ues}) == count


def test_ue_grid_single_point_is_center():
    (only,) = generate_ue_grid(1, 1, (9000.0, 7000.0))
    assert (only.pos.x, only.pos.y) == (4500.0, 3500.0)


def test_ue_grid_cell_centered_no_boundary_points():
    ues = generate_ue_grid(4, 3, (800.0, 600.0))
    assert {u.pos.x for u in ues} == {100.0, 300.0, 500.0, 700.0}
    assert {u.pos.y for u in ues} == {100.0, 300.0, 500.0}


def test_add_nomadic_site():
    s = generate_honeycomb(12, 2000.0)
    before_ids = s.cell_ids
    grown = add_nomadic_site(s, s.center)
    assert len(grown.cells) == 39
    assert s.cell_ids == before_ids  # original unchanged
    assert set(before_ids) < set(grown.cell_ids)
    again = add_nomadic_site(grown, Position(100.0, 100.0))
    assert len(again.cells) == 42


def test_add_nomadic_site_outside_area():
    s = generate_honeycomb(4, 2000.0)
    with pytest.raises(ValueError):
        add_nomadic_site(s, Position(-1.0, 10.0))


# --- scenario and assignment invariants --------------------------------------


def test_scenario_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        make_scenario([cell(1, 0, 0), cell(1, 100, 0)])
    with pytest.raises(ValueError):
        make_scenario([cell(1, 0, 0)], ues=[ue(5, 1, 1), ue(5, 2, 2)])


def test_scenario_rejects_out_of_area_entities():
    with pytest.raises(ValueError):
        make_scenario([cell(1, 30000.0, 0)], area=(20000.0, 20000.0))
    with pytest.raises(ValueError):
        make_scenario([cell(1, 0, 0)], ues=[ue(1, 0, 25000.0)], area=(20000.0, 20000.0))


def test_scenario_rejects_default_power_outside_domain():
    with pytest.raises(ValueError):
        make_scenario([cell(1, 0, 0, power=50.0)])


def test_power_domain_grid():
    d = PowerDomain(10.0, 46.0, 2.0)
    assert d.n_levels == 19
    levels = d.levels()
    assert levels[0] == 10.0 and levels[-1] == 46.0
    assert d.level_of(44.0) == 17
    with pytest.raises(ValueError):
        d.level_of(43.0)
    with pytest.raises(ValueError):
        d.level_of(48.0)


def test_power_domain_snap():
    d = PowerDomain(10.0, 46.0, 2.0)
    assert d.snap(43.0) == 44.0  # half-way rounds up
    assert d.snap(42.9) == 42.0
    assert d.snap(100.0) == 46.0
    assert d.snap(-5.0) == 10.0


def test_initial_assignment_snaps_defaults():
    s = generate_honeycomb(2, 2000.0)  # defaults 43 dBm, off the 2 dB grid
    a = initial_assignment(s)
    check_assignment(s, a)
    assert all(a[cid] == 44.0 for cid in a)


def test_check_assignment_errors():
    s = make_scenario([cell(1, 0, 0, power=44.0), cell(2, 100, 0, power=44.0)])
    with pytest.raises(ValueError):
        check_assignment(s, PowerAssignment({1: 44.0}))
    with pytest.raises(ValueError):
        check_assignment(s, PowerAssignment({1: 44.0, 2: 44.0, 3: 44.0}))
    with pytest.raises(ValueError):
        check_assignment(s, PowerAssignment({1: 44.0, 2: 43.0}))


def test_power_assignment_mapping_behavior():
    a = PowerAssignment({3: 40.0, 1: 42.0})
    assert list(a) == [1, 3]  # deterministic id order
    assert a[3] == 40.0
    assert a == PowerAssignment({1: 42.0, 3: 40.0})
    assert hash(a) == hash(PowerAssignment({1: 42.0, 3: 40.0}))
    b = a.replace({3: 38.0})
    assert b[3] == 38.0 and a[3] == 40.0


# --- topology round trip ------------------------------------------------------


def test_topology_round_trip():
    s = honeycomb_with_ues(12, 2000.0, 6, 6)
    assert load_topology(save_topology(s)) == s


def test_topology_minimal_document():
    doc = {
        "area": {"x": 1000.0, "y": 1000.0},
        "power_domain": {"min": 10.0, "max": 46.0, "step": 2.0},
        "radio": {
            "frequency_hz": 2.0e9,
            "bandwidth_hz": 10.0e6,
            "noise_figure_db": 9.0,
            "reference_distance_m": 100.0,
            "bs_height_m": 30.0,
            "ue_height_m": 1.5,
            "terrain": "B",
            "beamwidth_deg": 120.0,
            "backlobe_db": 20.0,
            "ber": 5e-5,
        },
        "cells": [
            {"id": 1, "site": {"x": 500.0, "y": 500.0}, "azimuth_deg": 0.0, "tx_power_dbm": 43.0}
        ],
        "ues": [{"id": 1, "pos": {"x": 600.0, "y": 500.0}}],
    }
    s = load_topology(json.dumps(doc))
    assert len(s.cells) == 1 and len(s.ues) == 1


def _minimal_doc():
    return json.loads(save_topology(make_scenario([cell(1, 100, 100)], ues=[ue(1, 50, 50)])))


def test_topology_rejects_unknown_field():
    doc = _minimal_doc()
    doc["debug"] = True
    with pytest.raises(ValueError, match="unknown field 'debug'"):
        load_topology(json.dumps(doc))


def test_topology_rejects_unknown_nested_field():
    doc = _minimal_doc()
    doc["cells"][0]["tilt"] = 3
    with pytest.raises(ValueError, match="tilt"):
        load_topology(json.dumps(doc))


def test_topology_rejects_missing_field():
    doc = _minimal_doc()
    del doc["cells"][0]["azimuth_deg"]
    with pytest.raises(ValueError, match="azimuth_deg"):
        load_topology(json.dumps(doc))


def test_topology_rejects_duplicate_cell_id():
    doc = _minimal_doc()
    doc["cells"].append(dict(doc["cells"][0]))
    with pytest.raises(ValueError, match="duplicate"):
        load_topology(json.dumps(doc))


def test_topology_rejects_bad_terrain_and_types():
    doc = _minimal_doc()
    doc["radio"]["terrain"] = "D"
    with pytest.raises(ValueError, match="terrain"):
        load_topology(json.dumps(doc))
    doc = _minimal_doc()
    doc["cells"][0]["id"] = 1.5
    with pytest.raises(ValueError, match="id"):
        load_topology(json.dumps(doc))
    with pytest.raises(ValueError, match="invalid JSON"):
        load_topology(b"{nope")


# --- association ---------------------------------------------------------------


def _uniform(s, power=44.0):
    return PowerAssignment({c.id: power for c in s.cells})


def test_best_sinr_tie_breaks_to_lowest_id():
    # UE equidistant and on-boresight of two equal-power cells.
    s = make_scenario(
        [cell(7, 5000.0, 6000.0, az=270.0), cell(3, 5000.0, 4000.0, az=90.0)],
        ues=[ue(1, 5000.0, 5000.0)],
    )
    assoc = associate_best_sinr(s, _uniform(s))
    assert assoc[1] == 3


def test_best_sinr_matches_bruteforce_toy():
    # Serving decision for a UE 200 m from A (boresight) and 2000 m from B.
    cells = [cell(0, 1000.0, 5000.0, az=0.0), cell(1, 3200.0, 5000.0, az=180.0)]
    s = make_scenario(cells, ues=[ue(0, 1200.0, 5000.0)])
    a = _uniform(s)
    by_hand = max(
        cells,
        key=lambda c: radio.sinr(s.ues[0].pos, c.id, a, cells, s.radio),
    )
    assoc = associate_best_sinr(s, a)
    assert assoc[0] == by_hand.id == 0


def test_best_sinr_bruteforce_random_instances():
    rng = np.random.default_rng(42)
    for _ in range(25):
        n_cells = int(rng.integers(2, 6))
        cells = [
            cell(i, rng.uniform(100, 9900), rng.uniform(100, 9900), az=float(rng.integers(0, 360)))
            for i in range(n_cells)
        ]
        ues = [ue(j, rng.uniform(100, 9900), rng.uniform(100, 9900)) for j in range(6)]
        s = make_scenario(cells, ues=ues, area=(10000.0, 10000.0))
        levels = s.power_domain.levels()
        a = PowerAssignment({c.id: float(rng.choice(levels)) for c in cells})
        assoc = associate_best_sinr(s, a)
        for u in ues:
            best = None
            best_sinr = -math.inf
            for c in cells:
                v = radio.sinr(u.pos, c.id, a, cells, s.radio)
                if v > best_sinr:
                    best, best_sinr = c.id, v
            assert assoc[u.id] == best


def test_raising_serving_power_keeps_ues():
    s = honeycomb_with_ues(4, 2000.0, 5, 5)
    a = initial_assignment(s)
    assoc = associate_best_sinr(s, a)
    target = assoc[s.ues[7].id]
    boosted = a.replace({target: min(a[target] + 2.0, s.power_domain.max_dbm)})
    assoc2 = associate_best_sinr(s, boosted)
    served_before = {u for u, c in assoc.items() if c == target}
    served_after = {u for u, c in assoc2.items() if c == target}
    assert served_before <= served_after


def test_associate_nearest_definition_and_ties():
    cells = [cell(2, 1000.0, 1000.0, az=0.0), cell(0, 3000.0, 1000.0, az=120.0),
             cell(1, 1000.0, 1000.0, az=240.0)]
    s = make_scenario(cells, ues=[ue(0, 1200.0, 1000.0), ue(1, 2800.0, 1000.0), ue(2, 2000.0, 1000.0)])
    assoc = associate_nearest(s)
    assert assoc[0] == 1  # tie between co-sited 1 and 2: lowest id
    assert assoc[1] == 0
    assert assoc[2] == 0  # equidistant sites: cell 0 has the lowest id


def test_associate_nearest_bruteforce():
    rng = np.random.default_rng(5)
    for _ in range(20):
        cells = [
            cell(i, rng.uniform(0, 10000), rng.uniform(0, 10000)) for i in range(3)
        ]
        ues = [ue(j, rng.uniform(0, 10000), rng.uniform(0, 10000)) for j in range(5)]
        s = make_scenario(cells, ues=ues, area=(10000.0, 10000.0))
        assoc = associate_nearest(s)
        for u in ues:
            dists = sorted((u.pos.distance_to(c.site), c.id) for c in cells)
            assert assoc[u.id] == dists[0][1]


# --- evaluation -----------------------------------------------------------------


def test_evaluate_single_ue_caps_at_top_mcs():
    s = make_scenario([cell(1, 5000.0, 5000.0, az=0.0)], ues=[ue(1, 5300.0, 5000.0)])
    a = PowerAssignment({1: 44.0})
    res = evaluate(s, a)
    (rec,) = res.ue_records
    assert rec.cqi == 15
    assert rec.throughput_bps == pytest.approx(radio.MAX_EFFICIENCY_BPS_HZ * 10e6)
    assert res.total_throughput_bps == pytest.approx(rec.throughput_bps)


def test_evaluate_round_robin_division():
    positions = [(5300.0, 5000.0), (5000.0, 5400.0), (4700.0, 5000.0), (5000.0, 4600.0)]
    cells = [cell(1, 5000.0, 5000.0, az=0.0)]
    ues = [ue(i, x, y) for i, (x, y) in enumerate(positions)]
    s = make_scenario(cells, ues=ues)
    a = PowerAssignment({1: 44.0})
    res = evaluate(s, a)
    assert res.cell_load == {1: 4}
    for rec, u in zip(res.ue_records, ues):
        sinr_db = radio.sinr(u.pos, 1, a, cells, s.radio)
        expected = radio.efficiency_from_sinr(sinr_db, s.radio) * s.radio.bandwidth_hz / 4
        assert rec.throughput_bps == pytest.approx(expected, rel=1e-9)


def test_evaluate_outage_contributes_zero():
    s = make_scenario(
        [cell(1, 100.0, 100.0, az=0.0)],
        ues=[ue(1, 190000.0, 100.0)],
        area=(200000.0, 200000.0),
    )
    a = PowerAssignment({1: 10.0})
    res = evaluate(s, a)
    (rec,) = res.ue_records
    assert rec.cqi == 0
    assert rec.throughput_bps == 0.0
    assert res.total_throughput_bps == 0.0


def test_evaluate_total_is_sum_and_loads_count_everyone():
    s = honeycomb_with_ues(4, 2000.0, 6, 6)
    res = evaluate(s, initial_assignment(s))
    assert res.total_throughput_bps == pytest.approx(
        sum(r.throughput_bps for r in res.ue_records), rel=1e-12
    )
    assert sum(res.cell_load.values()) == len(s.ues)
    assert set(res.cell_load) == set(s.cell_ids)


def test_evaluate_deterministic():
    s = honeycomb_with_ues(3, 1800.0, 4, 4)
    a = initial_assignment(s)
    assert evaluate(s, a) == evaluate(s, a)


def test_evaluate_no_ues():
    s = make_scenario([cell(1, 0, 0, power=44.0)])
    res = evaluate(s, PowerAssignment({1: 44.0}))
    assert res.total_throughput_bps == 0.0
    assert res.ue_records == ()


def test_per_ue_throughput_nonincreasing_in_cell_load():
    cells = [cell(1, 5000.0, 5000.0, az=0.0)]
    a = PowerAssignment({1: 44.0})
    previous = math.inf
    for n in (1, 2, 4, 8):
        ues = [ue(i, 5200.0 + 10 * i, 5000.0) for i in range(n)]
        s = make_scenario(cells, ues=ues)
        first = evaluate(s, a).ue_records[0].throughput_bps
        assert first <= previous + 1e-9
        previous = first


def test_evaluation_result_as_dict():
    s = make_scenario([cell(1, 5000.0, 5000.0)], ues=[ue(2, 5300.0, 5000.0)])
    d = evaluate(s, PowerAssignment({1: 44.0})).as_dict()
    assert d["cell_load"] == {"1": 1}
    assert d["ues"][0]["ue_id"] == 2
    json.dumps(d)  # serializable
