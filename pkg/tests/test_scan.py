import warnings
from dataclasses import replace

import numpy as np
import pytest

from filippov_harvest import (NumericsError, ParameterError, PsiMode,
                              SimOptions, both_exist_area_fraction,
                              compute_basins, equilibrium_curve, equilibrium_y,
                              existence_boundary_p, interior_equilibria,
                              locate_boundary_bifurcations, scan_m_sweep,
                              scan_sp_plane)


class TestExistenceBoundary:
    @pytest.mark.parametrize("preset,mode,expected", [
        ("A1", PsiMode.NONHARVEST, 0.75),
        ("A1", PsiMode.HARVEST, 0.6667),
        ("A2", PsiMode.NONHARVEST, 0.38655),
        ("A2", PsiMode.HARVEST, 0.4437),
    ])
    def test_published_boundaries(self, a1, a2, preset, mode, expected):
        base = a1 if preset == "A1" else a2
        assert existence_boundary_p(base, mode) == pytest.approx(expected, abs=1e-3)

    def test_explicit_bracket(self, a1):
        value = existence_boundary_p(a1, PsiMode.NONHARVEST, p_bracket=(0.1, 2.0))
        assert value == pytest.approx(0.75, abs=1e-3)

    def test_bad_bracket_raises(self, a1):
        with pytest.raises(NumericsError):
            existence_boundary_p(a1, PsiMode.NONHARVEST, p_bracket=(0.1, 0.2))


class TestEquilibriumCurve:
    def test_values_at_base_predation_rate(self, a1):
        curve = equilibrium_curve(a1, PsiMode.NONHARVEST, (0.4, 0.7), samples=31)
        by_p = dict(curve)
        assert by_p[0.6] == pytest.approx(0.4005, abs=1e-3)
        curve = equilibrium_curve(a1, PsiMode.HARVEST, (0.4, 0.7), samples=31)
        assert dict(curve)[0.6] == pytest.approx(0.1416, abs=1e-3)

    def test_existence_gap_reported_as_nan(self, a1):
        curve = equilibrium_curve(a1, PsiMode.NONHARVEST, (0.6, 0.9), samples=31)
        values = np.array([x for _, x in curve])
        assert np.isnan(values).any()
        assert not np.isnan(values).all()

    def test_boundary_endpoint_merges_with_predator_axis_state(self, a1):
        # Approaching the existence boundary the prey root slides to zero and
        # the paired predator density tends to the predator-axis equilibrium.
        p_max = existence_boundary_p(a1, PsiMode.HARVEST)
        for eps, x_tol, y_tol in ((1e-3, 0.02, 0.02), (1e-5, 5e-4, 5e-4)):
            params = replace(a1, p=p_max - eps)
            (record,) = interior_equilibria(params, PsiMode.HARVEST)
            assert record.location.x == pytest.approx(0.0, abs=x_tol)
            axis_y = a1.k2 * (a1.r2 - a1.q2 * a1.E) / a1.r2
            assert record.location.y == pytest.approx(axis_y, abs=y_tol)
            assert record.location.y == pytest.approx(
                equilibrium_y(record.location.x, params, PsiMode.HARVEST), rel=1e-9)

    def test_requires_two_samples(self, a1):
        with pytest.raises(ParameterError):
            equilibrium_curve(a1, PsiMode.NONHARVEST, (0.4, 0.7), samples=1)


class TestBoundaryBifurcations:
    def test_published_collision_thresholds(self, a1):
        found = locate_boundary_bifurcations(a1, (0.05, 0.8))
        assert len(found) == 2
        first, second = found
        assert first.S == pytest.approx(0.1416, abs=1e-3)
        assert first.mode is PsiMode.HARVEST
        assert second.S == pytest.approx(0.4005, abs=1e-3)
        assert second.mode is PsiMode.NONHARVEST

    def test_collision_equals_prey_root(self, a1):
        # The cubic does not involve S, so the collision threshold is the
        # prey root itself up to the bisection tolerance.
        found = locate_boundary_bifurcations(a1, (0.05, 0.8), tol=1e-6)
        for rec in found:
            (eq,) = interior_equilibria(a1, rec.mode)
            assert abs(rec.S - eq.location.x) <= 2e-6

    def test_observed_type_matches_recorded_spectrum(self, a1):
        for rec in locate_boundary_bifurcations(a1, (0.05, 0.8)):
            has_imag = any(abs(z.imag) > 1e-10 for z in rec.eigenvalues)
            assert rec.observed_type == ("focus" if has_imag else "node")

    def test_empty_when_no_collision_in_range(self, a1):
        assert locate_boundary_bifurcations(a1, (0.5, 0.8)) == [] or all(
            0.5 <= r.S <= 0.8 for r in locate_boundary_bifurcations(a1, (0.5, 0.8)))

    def test_narrow_range_finds_single_collision(self, a1):
        found = locate_boundary_bifurcations(a1, (0.3, 0.8))
        assert [r.mode for r in found] == [PsiMode.NONHARVEST]


class TestScanPlane:
    def test_bistable_cell_classification(self, a2):
        grid = scan_sp_plane(a2, (3.0, 5.0), (0.15, 0.25), (5, 5))
        s_values = grid.axes[0].values()
        p_values = grid.axes[1].values()
        i = int(np.argmin(np.abs(s_values - 4.0)))
        j = int(np.argmin(np.abs(p_values - 0.2)))
        cell = grid.cell(i, j)
        assert cell.placements_nonharvest == "R"
        assert cell.placements_harvest == "R"
        assert cell.stabilities_nonharvest == "S"
        assert cell.stabilities_harvest == "S"
        assert cell.pseudo_exists
        assert cell.pseudo_stability == "U"

    def test_existence_ceilings_respected(self, a1):
        grid = scan_sp_plane(a1, (0.1, 0.6), (0.5, 0.9), (9, 17))
        p_values = grid.axes[1].values()
        for j, p_value in enumerate(p_values):
            for i in range(grid.axes[0].n):
                cell = grid.cell(i, j)
                if p_value > 0.751:
                    assert cell.n_nonharvest == 0
                if p_value > 0.667:
                    assert cell.n_harvest == 0
                if p_value < 0.66:
                    assert cell.n_nonharvest == 1 and cell.n_harvest == 1

    def test_grid_determinism(self, a1):
        first = scan_sp_plane(a1, (0.05, 0.8), (0.05, 0.9), (20, 20))
        second = scan_sp_plane(a1, (0.05, 0.8), (0.05, 0.9), (20, 20))
        assert first == second

    def test_each_placement_flips_once_along_threshold_axis(self, a1):
        s_lo, s_hi = 0.05, 0.8
        grid = scan_sp_plane(a1, (s_lo, s_hi), (0.3, 0.6), (60, 4))
        p_values = grid.axes[1].values()
        flip_seen = False
        for j, p_value in enumerate(p_values):
            params = replace(a1, p=float(p_value))
            for mode, field in ((PsiMode.NONHARVEST, "placements_nonharvest"),
                                (PsiMode.HARVEST, "placements_harvest")):
                (record,) = interior_equilibria(params, mode)
                column = [getattr(grid.cell(i, j), field)
                          for i in range(grid.axes[0].n)]
                assert all(c in ("R", "V", "B") for c in column)
                flips = sum(1 for a, b in zip(column, column[1:]) if a != b)
                expected = 1 if s_lo < record.location.x < s_hi else 0
                assert flips == expected
                flip_seen = flip_seen or expected == 1
        assert flip_seen

    def test_validation(self, a1):
        with pytest.raises(ParameterError):
            scan_sp_plane(a1, (0.0, 0.8), (0.05, 0.9), 4)
        with pytest.raises(ParameterError):
            scan_sp_plane(a1, (0.05, 0.8), (0.05, 0.9), (1, 5))

    def test_failed_column_marked_undetermined(self, a1, monkeypatch):
        import filippov_harvest.scan as scan_module
        original = scan_module._column_roots
        broken_p = []

        def flaky(params, mode):
            if not broken_p:
                broken_p.append(params.p)
            if params.p == broken_p[0]:
                raise RuntimeError("synthetic cell failure")
            return original(params, mode)

        monkeypatch.setattr(scan_module, "_column_roots", flaky)
        grid = scan_sp_plane(a1, (0.1, 0.6), (0.1, 0.8), (4, 4))
        statuses = {cell.status for cell in grid.cells}
        assert statuses == {"ok", "undetermined"}
        assert sum(1 for c in grid.cells if c.status == "undetermined") == 4


class TestMSweep:
    def test_single_element_sweep_matches_plane_scan(self, a1):
        (swept,) = scan_m_sweep(a1, [a1.m], (0.1, 0.6), (0.1, 0.8), (12, 12))
        direct = scan_sp_plane(a1, (0.1, 0.6), (0.1, 0.8), (12, 12))
        assert swept.cells == direct.cells
        assert swept.axes == direct.axes

    def test_existence_boundary_strictly_increases_with_refuge(self, a1):
        boundaries = []
        for m_value in (0.4, 0.8, 0.9):
            base = replace(a1, m=m_value)
            boundaries.append((existence_boundary_p(base, PsiMode.NONHARVEST),
                               existence_boundary_p(base, PsiMode.HARVEST)))
        for (lo_nh, lo_h), (hi_nh, hi_h) in zip(boundaries, boundaries[1:]):
            assert hi_nh > lo_nh
            assert hi_h > lo_h

    def test_coexistence_area_nondecreasing_with_refuge(self, a1):
        grids = scan_m_sweep(a1, [0.4, 0.8, 0.9], (0.05, 0.8), (0.05, 1.5), (40, 40))
        fractions = [both_exist_area_fraction(g) for g in grids]
        assert all(b >= a for a, b in zip(fractions, fractions[1:]))
        assert fractions[-1] > fractions[0]

    def test_rejects_refuge_outside_unit_interval(self, a1):
        with pytest.raises(ParameterError):
            scan_m_sweep(a1, [1.2], (0.1, 0.6), (0.1, 0.8), 4)


class TestBasins:
    def test_anchor_cells_and_coverage(self, a2):
        sim = SimOptions(t_end=150.0, rtol=1e-6, atol=1e-9,
                         attractor_radius=1e-3, attractor_dwell=1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            grid = compute_basins(a2, (0.1, 8.9), (0.1, 8.3), (12, 12), sim=sim)
        labels = set(grid.cells)
        assert "ER1" in labels and "ER2" in labels
        fraction_er1 = sum(1 for c in grid.cells if c == "ER1") / len(grid.cells)
        fraction_er2 = sum(1 for c in grid.cells if c == "ER2") / len(grid.cells)
        assert fraction_er1 >= 0.05 and fraction_er2 >= 0.05

    def test_cell_at_attractor_is_its_own_label(self, a2):
        (er1,) = interior_equilibria(a2, PsiMode.NONHARVEST)
        sim = SimOptions(t_end=20.0, rtol=1e-6, atol=1e-9,
                         attractor_radius=1e-3, attractor_dwell=1.0)
        x, y = er1.location
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            grid = compute_basins(a2, (x - 1e-5, x + 1e-5), (y - 1e-5, y + 1e-5),
                                  (2, 2), sim=sim, n_jobs=1)
        assert grid.cells == ["ER1"] * 4

    def test_single_attractor_labeling_when_not_bistable(self, a1):
        # At S=0.25 both interior states are virtual; the only candidate is
        # the pseudo-equilibrium, so the grid degrades to one basin label.
        sim = SimOptions(t_end=150.0, rtol=1e-6, atol=1e-9,
                         attractor_radius=1e-3, attractor_dwell=1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            grid = compute_basins(a1, (0.2, 1.8), (0.2, 1.6), (5, 5),
                                  sim=sim, n_jobs=1)
        assert set(grid.cells) == {"PSEUDO"}

    def test_determinism_and_tolerance_robustness(self, a2):
        kwargs = dict(x_range=(0.5, 8.5), y_range=(0.5, 8.0), resolution=(8, 8))
        sim = SimOptions(t_end=150.0, rtol=1e-6, atol=1e-9,
                         attractor_radius=1e-3, attractor_dwell=1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            first = compute_basins(a2, sim=sim, **kwargs)
            again = compute_basins(a2, sim=sim, **kwargs)
        assert first.cells == again.cells
        tighter = SimOptions(t_end=150.0, rtol=5e-7, atol=5e-10,
                             attractor_radius=1e-3, attractor_dwell=1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            refined = compute_basins(a2, sim=tighter, **kwargs)
        n_x, n_y = first.axes[0].n, first.axes[1].n
        cells = np.array(first.cells).reshape(n_x, n_y)
        changed = [(i, j) for i in range(n_x) for j in range(n_y)
                   if refined.cells[i * n_y + j] != first.cells[i * n_y + j]]
        for i, j in changed:
            neighbors = [cells[a, b]
                         for a in range(max(0, i - 1), min(n_x, i + 2))
                         for b in range(max(0, j - 1), min(n_y, j + 2))]
            assert len(set(neighbors)) > 1  # only boundary-adjacent cells may move
