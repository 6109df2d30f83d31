"""Acceptance criteria 1-10, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line; the lines are printed together in
the terminal summary.
"""

from conftest import ACCEPTANCE_LINES
from quadprop import verify


def _record(number, title, results, budget, extra=""):
    seconds = sum(r.seconds for r in results)
    ok = all(r.passed for r in results) and seconds < budget
    parts = "; ".join(f"{r.name} {r.value:.3e} (tol {r.tolerance:.1e})" for r in results)
    line = f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}: {parts}; {seconds:.1f} s of {budget:g} s"
    if extra:
        line += f"; {extra}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    for r in results:
        assert r.passed, r.line()
    assert seconds < budget, f"{title} took {seconds:.1f} s, budget {budget} s"


def test_01_table1_reproduction():
    res = verify.check_table1(times=(0.3, 0.7, 1.1), n_points=200, tol=1e-9)
    _record(1, "closed-form kernel agreement", [res], 10.0)
    assert len(res.details["presets"]) == 6


def test_02_dual_path_agreement():
    res = verify.check_dual_path(tol=1e-6, n_times=20, t_range=(0.05, 1.3))
    _record(2, "dual-path coefficients", [res], 30.0)


def test_03_unitarity():
    res = verify.check_unitarity(n_states=50, n=256, tol=1e-7)
    _record(3, "unitarity (direct and fast)", [res], 60.0)


def test_04_group_law():
    res = verify.check_group_law(tol=1e-5)
    _record(4, "group law", [res], 60.0)


def test_05_fast_vs_direct():
    res = verify.check_fast_vs_direct(tol=1e-6, sizes=(64, 128, 256))
    _record(5, "fast vs direct", [res], 120.0)


def test_06_dispersive_bound():
    res = verify.check_dispersive(draws=30, tol=1e-6)
    _record(6, "dispersive bound", [res], 30.0, extra="value is max lhs/rhs, limit 1 + 1e-6")


def test_07_coherent_state():
    res = verify.check_coherent_state(n=512, tol_centroid=1e-3, tol_freq=0.01, periods=3)
    d = res.details
    _record(7, "coherent-state dynamics", [res], 60.0,
            extra=f"centroid error {d['isotropic_max_centroid_error']:.1e} (tol 1e-3), "
                  f"omega {d['damped_fitted_omega']:.6f} vs {d['damped_expected_omega']:.6f} (tol 1%)")


def test_08_nls_solver():
    results = [
        verify.check_nls_linear(tol=1e-4, n=1024, dt=1e-3, T=1.0),
        verify.check_soliton(tol=1e-3, n=1024, dt=1e-3, T=5.0),
        verify.check_strang_order(target=2.0, tol=0.25, n=1024),
        verify.check_supercritical(p=5.0, d=1),
    ]
    _record(8, "NLS solver (a)-(d)", results, 300.0)


def test_09_small_time_asymptotics():
    res = verify.check_small_time(times=(1e-2, 1e-3, 1e-4))
    _record(9, "small-time asymptotics", [res], 5.0)


def test_10_strichartz_bookkeeping():
    results = [verify.check_admissibility(), verify.check_weak_l1()]
    _record(10, "Strichartz bookkeeping", results, 10.0,
            extra=f"{results[0].details['pairs']} pairs")
    assert results[0].details["pairs"] == 50
    assert results[0].details["counts"].get("forbidden_endpoint", 0) >= 1
