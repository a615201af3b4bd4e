"""Field containers, dump files, and the station-flux measurement."""

import copy

import numpy as np
import pytest

from sll.errors import SchemaError
from sll.fields import (conservation_defect, read_dump, station_flux,
                        station_flux_spread, write_dump)
from sll.geometry import build_grid, straight_pipe
from sll.solver import picard_solve


def test_dump_round_trip_bit_identical(tmp_path, uniform_solution):
    p1 = tmp_path / "a.dat"
    p2 = tmp_path / "b.dat"
    write_dump(uniform_solution.flow, p1)
    reloaded = read_dump(p1)
    write_dump(reloaded, p2)
    assert p1.read_text() == p2.read_text()
    assert reloaded.mass_flux == uniform_solution.mass_flux
    np.testing.assert_array_equal(reloaded.rho, uniform_solution.flow.rho)
    np.testing.assert_array_equal(reloaded.psi, uniform_solution.flow.psi)


def test_dump_schema_errors(tmp_path, uniform_solution):
    path = tmp_path / "f.dat"
    write_dump(uniform_solution.flow, path)
    lines = path.read_text().splitlines()

    bad = tmp_path / "bad_header.dat"
    bad.write_text("nope nope\n" + "\n".join(lines[1:]))
    with pytest.raises(SchemaError) as exc:
        read_dump(bad)
    assert exc.value.line == 1

    bad2 = tmp_path / "bad_token.dat"
    rows = lines[:]
    parts = rows[5].split()
    parts[3] = "abc"
    rows[5] = " ".join(parts)
    bad2.write_text("\n".join(rows))
    with pytest.raises(SchemaError) as exc:
        read_dump(bad2)
    assert exc.value.line == 6
    assert exc.value.column == 4

    bad3 = tmp_path / "short_row.dat"
    rows = lines[:]
    rows[7] = " ".join(rows[7].split()[:-2])
    bad3.write_text("\n".join(rows))
    with pytest.raises(SchemaError) as exc:
        read_dump(bad3)
    assert exc.value.line == 8


def test_station_flux_exact_for_converged_solves(uniform_solution):
    phi = station_flux(uniform_solution.flow, uniform_solution.grid)
    np.testing.assert_allclose(phi, 0.3, atol=3e-16)
    assert conservation_defect(uniform_solution.flow, uniform_solution.grid) <= 1e-15
    assert station_flux_spread(uniform_solution.flow, uniform_solution.grid) <= 1e-15


def test_station_flux_detects_density_tampering(uniform_solution):
    pert = copy.deepcopy(uniform_solution.flow)
    pert.rho = pert.rho * (1.0 + 0.01 * np.sin(3.0 * pert.trans))
    assert conservation_defect(pert) > 1e-4


def test_station_flux_axisymmetric(gas2, uniform_data):
    grid = build_grid(straight_pipe(), 16, 16, -5.0, 5.0)
    sol = picard_solve(None, uniform_data, gas2, 0.2, grid)
    phi = station_flux(sol.flow, grid)
    np.testing.assert_allclose(phi, 0.2, atol=1e-15)
    pert = copy.deepcopy(sol.flow)
    pert.u1 = pert.u1 * 1.01
    assert conservation_defect(pert, grid) > 1e-4


def test_axi_dump_mass_flux_recovery(tmp_path, gas2, uniform_data):
    grid = build_grid(straight_pipe(), 16, 16, -5.0, 5.0)
    sol = picard_solve(None, uniform_data, gas2, 0.2, grid)
    path = tmp_path / "axi.dat"
    write_dump(sol.flow, path)
    reloaded = read_dump(path)
    # wall extrapolation of psi: exact for the quadratic uniform profile
    assert reloaded.mass_flux == pytest.approx(0.2, rel=1e-12)
