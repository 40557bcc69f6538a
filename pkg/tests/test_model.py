import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from reactsim import model
from reactsim.model import ReactionModel

from conftest import REF_Q, REF_T, REF_V


def test_defaults_validate():
    m = ReactionModel()
    assert m.step_count * m.time_step_fs == pytest.approx(m.total_time, rel=1e-15)
    with pytest.raises(ValueError):
        ReactionModel(ramp_up_end=10.0, ramp_down_start=5.0)
    with pytest.raises(ValueError):
        ReactionModel(barrier_height=0.0)
    with pytest.raises(ValueError):
        ReactionModel(step_count=2.5)


@pytest.mark.parametrize(
    "q, expected",
    [(1.0, 0.0), (-1.0, -0.000257)],
)
def test_potential_at_minima(default_model, q, expected):
    assert model.potential_at(default_model, q) == pytest.approx(expected, abs=1e-15)


def test_potential_reference_entry(default_model):
    assert round(model.potential_at(default_model, -1.08) * 1e3, 2) == -0.10


@given(st.floats(-3, 3))
def test_symmetric_well_is_even(q):
    m = ReactionModel(asymmetry=0.0)
    assert model.potential_at(m, q) == model.potential_at(m, -q)


def test_grid_positions(default_model, grid8):
    assert tuple(np.round(grid8.positions, 2)) == REF_Q
    assert grid8.spacing == pytest.approx(2 * default_model.grid_extent / 7)
    assert np.allclose(grid8.positions, -grid8.positions[::-1])
    with pytest.raises(ValueError):
        model.make_grid(default_model, 0)


def test_potential_diag_matches_reference(default_model, grid8):
    v = model.build_potential_diag(default_model, grid8).values
    assert tuple(np.round(v * 1e3, 2)) == REF_V


def test_potential_diag_without_walls(default_model, grid8):
    m = default_model.with_(wall_scale=1.0)
    v = model.build_potential_diag(m, grid8).values
    assert np.array_equal(v, model.potential_at(m, grid8.positions))


def test_potential_diag_64_walls(default_model):
    g = model.make_grid(default_model, 6)
    v = model.build_potential_diag(default_model, g).values
    direct = model.potential_at(default_model, g.positions)
    assert v[0] == pytest.approx(30 * direct[0])
    assert v[-1] == pytest.approx(30 * direct[-1])
    assert np.array_equal(v[1:-1], direct[1:-1])


def test_kinetic_diag_structure(default_model, grid8):
    t = model.build_kinetic_diag(default_model, grid8).values
    assert t[0] == 0
    assert np.all(t >= 0)
    assert t[2] / t[1] == pytest.approx(4)
    assert t[3] / t[1] == pytest.approx(9)
    assert t[4] / t[1] == pytest.approx(16)
    for k in range(1, 4):
        assert t[k] == t[8 - k]


def test_fitted_mass_reproduces_reference_kinetic(default_model, grid8):
    ref = np.array(REF_T) * 1e-3
    mass = model.fit_mass(ref, grid8)
    assert mass == pytest.approx(default_model.mass, rel=0.01)
    t = model.build_kinetic_diag(default_model.with_(mass=mass), grid8).values
    nz = ref != 0
    assert np.all(np.abs(t[nz] - np.abs(ref[nz])) <= 0.01 * np.abs(ref[nz]))
    # reference last entry carries a minus sign; a kinetic energy cannot be negative
    assert ref[-1] < 0 and t[-1] > 0


def test_kinetic_rejects_non_power_of_two(default_model):
    g = model.Grid(6, 0.1, np.arange(6) * 0.1)
    with pytest.raises(ValueError):
        model.build_kinetic_diag(default_model, g)


@pytest.mark.parametrize(
    "t, expected",
    [(0.0, 0.0), (10.0, 1.0e-3), (37.5, 0.0)],
)
def test_field_values(default_model, t, expected):
    assert model.field_at(default_model, t) == pytest.approx(expected, abs=1e-18)


def test_field_first_midpoint(default_model):
    assert round(model.field_at(default_model, 0.75) * 1e3, 2) == 0.05


def test_field_continuity(default_model):
    m = default_model
    for t in (m.ramp_up_end, m.ramp_down_start):
        assert model.field_at(m, t - 1e-9) == pytest.approx(m.field_amplitude, rel=1e-9)
        assert model.field_at(m, t + 1e-9) == pytest.approx(m.field_amplitude, rel=1e-9)


def test_field_out_of_range(default_model):
    with pytest.raises(ValueError):
        model.field_at(default_model, -0.1)
    with pytest.raises(ValueError):
        model.field_at(default_model, 40.0)


def test_field_midpoint_table(default_model):
    table = model.field_midpoint_table(default_model) * 1e3
    expected = [0.05, 0.42, 0.85] + [1.0] * 19 + [0.85, 0.42, 0.05]
    assert len(table) == 25
    assert list(np.round(table, 2)) == expected
    # last three entries straight from the envelope formula
    for entry, t in zip(table[-3:], (33.75, 35.25, 36.75)):
        assert entry == pytest.approx(1e3 * 1e-3 * math.sin(math.pi * (37.5 - t) / 10) ** 2)
    assert np.all((table >= 0) & (table <= 1.0))


def test_fs_to_au():
    assert model.fs_to_au(1.5) == pytest.approx(62.02, abs=0.01)
    assert model.fs_to_au(0.0) == 0.0
    assert model.fs_to_au(37.5) == pytest.approx(1550.5, abs=0.3)


def test_load_model(tmp_path):
    empty = tmp_path / "empty.cfg"
    empty.write_text("")
    assert model.load_model(empty) == ReactionModel()
    cfg = tmp_path / "m.cfg"
    cfg.write_text("# tweak\nasymmetry = 0\nstep_count = 50\nmodel.field_amplitude = 2e-3\n")
    m = model.load_model(cfg)
    assert (m.asymmetry, m.step_count, m.field_amplitude) == (0.0, 50, 2e-3)
    cfg.write_text("bogus = 1\n")
    with pytest.raises(ValueError):
        model.load_model(cfg)
