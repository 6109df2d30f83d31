import csv
import math

import numpy as np
import pytest

from quadprop import nls
from quadprop.errors import BlowUpError, ResolutionError, SpecError, SubcriticalError
from quadprop.grid import Grid, gaussian, soliton
from quadprop.gridprop import propagate
from quadprop.hamiltonian import AxisCoefficients, CoefficientFn, HamiltonianSpec, preset
from quadprop.nls import (
    Nonlinearity,
    StrangSolver,
    centroid,
    mass,
    momentum_center,
    solve_nls,
    step_strang,
    subcritical_check,
    write_trajectory_csv,
)


def _l2(a, b):
    return math.sqrt(np.sum(np.abs(a.values - b.values) ** 2) * a.grid.cell_volume)


@pytest.mark.parametrize("p, d, ok", [(3, 1, True), (3, 2, False), (5, 1, False), (2, 3, True), (7 / 3, 3, False)])
def test_subcritical_condition(p, d, ok):
    assert subcritical_check(p, d) is ok


def test_supercritical_refused_with_condition_in_message():
    g = Grid.uniform(64, 16.0)
    with pytest.raises(SubcriticalError, match=r"0 < p - 1 < 4/d"):
        solve_nls(preset("free"), Nonlinearity(5, 1.0), gaussian(g), 0.1, 0.01)


def test_nonlinearity_validation():
    with pytest.raises(SpecError):
        Nonlinearity(1.0)
    assert Nonlinearity(3, 2.0).h(0.5) == 2.0


def test_observables():
    g = Grid.uniform(256, 32.0)
    phi = gaussian(g, center=2.0)
    assert mass(phi) == pytest.approx(1.0, abs=1e-10)
    assert abs(centroid(phi)[0] - 2.0) < g.spacing[0]
    assert momentum_center(phi)[0] == centroid(phi)[0]


def test_linear_limit_damped():
    g = Grid.uniform(512, 40.0)
    phi = gaussian(g, center=1.0, momentum=0.5)
    spec = preset("damped", lam=0.6)
    traj = solve_nls(spec, Nonlinearity(3, 0.0), phi, 1.0, 1e-3, save_every=10 ** 6)
    assert _l2(traj.final, propagate(spec, phi, 1.0, out_grid=g)) < 1e-4


def test_linear_limit_with_drift_and_force():
    # exercises the translation part of the dilation flow
    ax = AxisCoefficients(b=CoefficientFn.constant(1.0), c=CoefficientFn.constant(-0.6),
                          f=CoefficientFn.constant(0.2), g=CoefficientFn.constant(0.3))
    spec = HamiltonianSpec(1, (ax,))
    g = Grid.uniform(512, 40.0)
    phi = gaussian(g, center=-0.5, momentum=0.3)
    traj = solve_nls(spec, Nonlinearity(3, 0.0), phi, 1.0, 1e-3, save_every=10 ** 6)
    assert _l2(traj.final, propagate(spec, phi, 1.0, out_grid=g)) < 1e-4


def test_linear_limit_time_dependent():
    spec = preset("forced_parametric", omega2=CoefficientFn.sinusoidal(0.5, 2.0, math.pi / 2, 1.0),
                  force=CoefficientFn.sinusoidal(0.3, 1.0))
    g = Grid.uniform(256, 32.0)
    phi = gaussian(g, center=0.5)
    traj = solve_nls(spec, Nonlinearity(3, 0.0), phi, 1.0, 1e-3, save_every=10 ** 6)
    assert _l2(traj.final, propagate(spec, phi, 1.0, out_grid=g)) < 1e-4


def test_single_step_matches_propagator_to_third_order():
    spec = preset("damped", lam=0.6)
    g = Grid.uniform(256, 32.0)
    phi = gaussian(g, center=1.0, momentum=0.5)
    errs = []
    for dt in (0.02, 0.01):
        one = step_strang(spec, Nonlinearity(3, 0.0), phi, dt)
        errs.append(_l2(one, propagate(spec, phi, dt, out_grid=g)))
    assert errs[0] / errs[1] > 6.0


def test_soliton_moves_rigidly():
    g = Grid.uniform(1024, 60.0)
    traj = solve_nls(preset("free"), Nonlinearity(3, -1.0), soliton(g, 1.0, 0.5), 1.0, 1e-3, save_every=250)
    x = g.axis_points(0)
    for s in traj.states:
        assert np.max(np.abs(np.abs(s.values) - 1 / np.cosh(x - s.t / 2))) < 1e-3
    assert np.max(np.abs(np.diff(traj.masses))) < 1e-8


@pytest.mark.parametrize("a", [1.05, 0.95])
def test_dilation_stage_is_exact_rescale(a):
    g = Grid.uniform(1024, 40.0)
    x = g.axis_points(0)
    solver = StrangSolver(preset("damped", lam=0.6), None, g)
    u = gaussian(g, center=1.0, momentum=0.7).values
    want = math.sqrt(a) * np.exp(-(a * x - 1.0) ** 2 / 2 + 0.7j * a * x) * math.pi ** -0.25
    np.testing.assert_allclose(solver._squeeze(u, 0, a), want, atol=1e-13)


def test_damped_cubic_conserves_mass():
    g = Grid.uniform(512, 40.0)
    traj = solve_nls(preset("damped", lam=0.6), Nonlinearity(3, 1.0), gaussian(g, center=1.0), 2.0, 1e-3,
                     save_every=500)
    assert np.max(np.abs(traj.masses - traj.masses[0])) < 1e-6


def test_strang_self_convergence_ratio():
    g = Grid.uniform(256, 30.0)
    spec = preset("damped", lam=0.6)
    nl = Nonlinearity(3, 1.0)
    phi = gaussian(g, center=1.0, momentum=0.5)
    dt = 0.04
    ref = solve_nls(spec, nl, phi, 1.0, dt / 8, save_every=10 ** 6).final
    e1 = _l2(solve_nls(spec, nl, phi, 1.0, dt, save_every=10 ** 6).final, ref)
    e2 = _l2(solve_nls(spec, nl, phi, 1.0, dt / 2, save_every=10 ** 6).final, ref)
    assert e1 / e2 == pytest.approx(4.0, abs=0.5)


def test_two_dimensional_cubic_runs_and_conserves_mass():
    # p = 3 is critical in d = 2, so the subcritical guard must be lifted explicitly
    g = Grid.uniform(64, 16.0, dimension=2)
    spec = preset("isotropic", dimension=2)
    traj = solve_nls(spec, Nonlinearity(2.5, 1.0), gaussian(g), 0.5, 1e-2, save_every=10)
    assert np.max(np.abs(traj.masses - traj.masses[0])) < 1e-10
    assert traj.centroids.shape == (51, 2)


def test_trajectory_bookkeeping(tmp_path):
    g = Grid.uniform(128, 20.0)
    traj = solve_nls(preset("isotropic"), Nonlinearity(3, 1.0), gaussian(g), 0.1, 0.01, save_every=4)
    assert len(traj.step_times) == 11
    np.testing.assert_allclose(traj.times, [0.0, 0.04, 0.08, 0.1])
    assert traj.final.t == pytest.approx(0.1)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(traj, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "mass", "centroid_0", "sup"]
    assert len(rows) == 12


def test_blow_up_guard_attaches_trajectory(monkeypatch):
    monkeypatch.setattr(nls, "BLOWUP_FACTOR", 1.5)
    g = Grid.uniform(256, 20.0)
    u0 = gaussian(g).replace(values=3.0 * gaussian(g).values)
    with pytest.raises(BlowUpError) as info:
        solve_nls(preset("free"), Nonlinearity(3, -1.0), u0, 2.0, 1e-3)
    traj = info.value.trajectory
    assert traj is not None
    assert traj.sups[-1] > 1.5 * traj.sups[0]


def test_overflow_reported_as_blow_up():
    g = Grid.uniform(64, 16.0)
    u0 = gaussian(g).replace(values=1e3 * gaussian(g).values)
    with pytest.raises(BlowUpError):
        solve_nls(preset("free"), Nonlinearity(200, 1.0), u0, 0.1, 0.01, check_subcritical=False)


def test_state_pushed_off_grid_is_reported():
    ax = AxisCoefficients(g=CoefficientFn.constant(40.0))
    spec = HamiltonianSpec(1, (ax,))
    g = Grid.uniform(128, 12.0)
    with pytest.raises(ResolutionError):
        solve_nls(spec, Nonlinearity(3, 1.0), gaussian(g), 1.0, 0.01)


def test_solver_rejects_foreign_grid():
    solver = StrangSolver(preset("free"), Nonlinearity(3, 1.0), Grid.uniform(64, 16.0))
    with pytest.raises(SpecError):
        solver.step(gaussian(Grid.uniform(64, 20.0)), 0.01)
