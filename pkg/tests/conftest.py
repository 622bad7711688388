import dataclasses

import pytest

from celltx.network import (
    Cell,
    Position,
    PowerDomain,
    Scenario,
    UE,
    generate_honeycomb,
    generate_ue_grid,
)
from celltx.radio import RadioConfig


@pytest.fixture
def default_radio():
    return RadioConfig()


def make_scenario(cells, ues=(), area=(20000.0, 20000.0), radio=None, domain=None):
    """Scenario with relaxed defaults for hand-built toys."""
    return Scenario(
        area_x_m=area[0],
        area_y_m=area[1],
        cells=tuple(cells),
        ues=tuple(ues),
        radio=radio if radio is not None else RadioConfig(),
        power_domain=domain if domain is not None else PowerDomain(),
    )


def cell(cid, x, y, az=0.0, power=43.0):
    return Cell(cid, Position(x, y), az, power)


def ue(uid, x, y):
    return UE(uid, Position(x, y))


def honeycomb_with_ues(n_sites, isd, nx, ny, **kwargs):
    s = generate_honeycomb(n_sites, isd, **kwargs)
    return dataclasses.replace(s, ues=generate_ue_grid(nx, ny, (s.area_x_m, s.area_y_m)))
