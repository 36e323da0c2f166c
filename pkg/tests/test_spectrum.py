import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bscoulomb.analytic import exact_bs_eigenvalue, exact_coulomb_level
from bscoulomb.errors import InvalidInputError, NoBoundStateError
from bscoulomb.kernels import EXACT, FREE, HALFLINE, LINE, NEUMANN, PotentialFamily, ProblemSpec
from bscoulomb.quadrature import GridConfig
from bscoulomb.spectrum import (
    LevelRequest,
    bs_eigenvalues,
    count_bound_states,
    solve_level,
    spectrum_at,
)

from oracles import shooting_levels

HALF = ProblemSpec(HALFLINE)
N400 = GridConfig(n_nodes=400)
N200 = GridConfig(n_nodes=200)


class TestEigenvalues:
    def test_exact_family(self):
        eigs = bs_eigenvalues(HALF, 1.0, N400, k_max=5)
        np.testing.assert_allclose(eigs, [1 / 2, 1 / 4, 1 / 6, 1 / 8, 1 / 10], rtol=2e-6)

    def test_coupling_and_energy(self):
        eigs = bs_eigenvalues(ProblemSpec(HALFLINE, EXACT, 2.0), 4.0, N400, k_max=3)
        np.testing.assert_allclose(eigs, [exact_bs_eigenvalue(2.0, 4.0, n) for n in (1, 2, 3)], rtol=1e-6)

    def test_smeared_approach_from_below(self):
        exact = bs_eigenvalues(HALF, 1.0, N200, k_max=3)
        previous = np.zeros(3)
        for eps in (1e-1, 1e-2, 1e-3):
            eigs = bs_eigenvalues(ProblemSpec(HALFLINE, PotentialFamily("softcore", eps)), 1.0, N200, k_max=3)
            assert np.all(eigs < exact) and np.all(eigs > previous)
            previous = eigs
        np.testing.assert_allclose(previous, exact, rtol=0.02)

    def test_sandwiched_route(self):
        np.testing.assert_allclose(bs_eigenvalues(HALF, 1.0, GridConfig(n_nodes=100), route="sandwiched"),
                                   bs_eigenvalues(HALF, 1.0, GridConfig(n_nodes=100)), rtol=1e-8)

    def test_bad_k_max(self):
        with pytest.raises(InvalidInputError):
            bs_eigenvalues(HALF, 1.0, k_max=0)

    @given(st.floats(min_value=0.05, max_value=20.0), st.floats(min_value=1.05, max_value=4.0))
    @settings(max_examples=10, deadline=None)
    def test_monotone_in_energy(self, abs_e, ratio):
        config = GridConfig(n_nodes=60)
        family = PotentialFamily("softcore", 0.1)
        for problem in (HALF, ProblemSpec(NEUMANN, family)):
            shallow = bs_eigenvalues(problem, abs_e, config, k_max=3)
            deep = bs_eigenvalues(problem, abs_e * ratio, config, k_max=3)
            assert np.all(deep < shallow)


class TestLevels:
    def test_ground_level(self):
        res = solve_level(LevelRequest(ProblemSpec(HALFLINE, EXACT, 2.0), 1, N400))
        assert res.energy == pytest.approx(-1.0, rel=1e-4)
        assert res.mu_at_root == pytest.approx(1.0, abs=1e-8)
        assert abs(res.det2_at_root) < 1e-6
        assert res.multiplicity == 1 and res.iterations <= 60

    def test_second_level_against_shooting(self):
        res = solve_level(LevelRequest(HALF, 2, N400))
        assert res.energy == pytest.approx(-0.0625, rel=1e-4)
        ref = shooting_levels(1.0, lo=0.03, hi=0.2, samples=30)
        assert ref[0] == pytest.approx(-0.0625, rel=1e-8)
        assert res.energy == pytest.approx(ref[0], rel=1e-4)

    @pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_hydrogenic_series(self, lam, k):
        res = solve_level(LevelRequest(ProblemSpec(HALFLINE, EXACT, lam), k, N400))
        assert res.energy == pytest.approx(exact_coulomb_level(lam, k), rel=1e-4)

    def test_line_levels_are_doubly_degenerate(self):
        res = solve_level(LevelRequest(ProblemSpec(LINE), 1, N200))
        assert res.multiplicity == 2
        assert res.energy == pytest.approx(-0.25, rel=1e-4)

    def test_sandwiched_route_same_level(self):
        a = solve_level(LevelRequest(HALF, 1, GridConfig(n_nodes=100)))
        b = solve_level(LevelRequest(HALF, 1, GridConfig(n_nodes=100), route="sandwiched"))
        assert b.energy == pytest.approx(a.energy, rel=1e-8)

    def test_det2_changes_sign_between_levels(self):
        dets = []
        for k in (1, 2):
            mid = 0.5 * (exact_coulomb_level(1.0, k) + exact_coulomb_level(1.0, k + 1))
            dets.append(spectrum_at(HALF, -mid, N400).det2)
        assert dets[0] * dets[1] < 0 and min(map(abs, dets)) > 1e-3

    @pytest.mark.parametrize("kind", ["softcore", "cutoff", "rounded"])
    def test_smeared_odd_level_against_shooting(self, kind):
        family = PotentialFamily(kind, 0.1)
        res = solve_level(LevelRequest(ProblemSpec(HALFLINE, family), 1, N200))
        ref = shooting_levels(1.0, kind, 0.1, "odd", lo=0.1, hi=0.3, samples=20)
        assert res.energy == pytest.approx(ref[0], rel=1e-6)

    @pytest.mark.parametrize("eps", [0.1, 0.01])
    def test_even_sector_against_shooting(self, eps):
        family = PotentialFamily("softcore", eps)
        res = solve_level(LevelRequest(ProblemSpec(FREE, family), 1, N200, sector="even"))
        assert res.parity == "even"
        ref = shooting_levels(1.0, "softcore", eps, "even", lo=0.5, hi=20.0, samples=40)
        assert res.energy == pytest.approx(ref[0], rel=1e-6)

    def test_neumann_domain_matches_even_sector(self):
        family = PotentialFamily("softcore", 0.1)
        a = solve_level(LevelRequest(ProblemSpec(NEUMANN, family), 1, N200))
        b = solve_level(LevelRequest(ProblemSpec(FREE, family), 1, N200, sector="even"))
        assert a.energy == b.energy

    def test_no_level(self):
        # the Coulomb tail always binds, but at lam = 1e-4 the level lies above the search window
        problem = ProblemSpec(HALFLINE, PotentialFamily("softcore", 0.1), 1e-4)
        with pytest.raises(NoBoundStateError):
            solve_level(LevelRequest(problem, 1, GridConfig(n_nodes=50)))


class TestLevelRequest:
    @pytest.mark.parametrize("kwargs", [
        {"k": 0}, {"k": 1.5}, {"k": 11, "grid": GridConfig(n_nodes=100)}, {"root_tol": 0.0},
        {"route": "other"}, {"sector": "up"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidInputError):
            LevelRequest(HALF, **kwargs)

    def test_free_needs_sector(self):
        with pytest.raises(InvalidInputError):
            LevelRequest(ProblemSpec(FREE, PotentialFamily("softcore", 0.1)))

    def test_sector_must_match_domain(self):
        with pytest.raises(InvalidInputError):
            solve_level(LevelRequest(HALF, sector="even"))


class TestCounting:
    def test_examples(self):
        res = count_bound_states(ProblemSpec(HALFLINE, EXACT, 4.0), 1.0, N200)
        assert res.count == 2 and res.bound == pytest.approx(16 * math.pi**2 / 24)
        res = count_bound_states(HALF, 1.0, N200)
        assert res.count == 0 and res.bound == pytest.approx(0.4112335, abs=1e-6)
        assert count_bound_states(ProblemSpec(LINE, EXACT, 4.0), 1.0, N200).count == 4

    def test_level_at_the_energy_is_counted(self):
        # lam / (2 sqrt|E|) = 3 puts the third level exactly at E
        assert count_bound_states(ProblemSpec(HALFLINE, EXACT, 6.0), 1.0, N200).count == 3

    @given(st.floats(min_value=0.3, max_value=12.0), st.floats(min_value=0.2, max_value=6.0))
    @settings(max_examples=25, deadline=None)
    def test_matches_level_count(self, lam, abs_e):
        c = lam / (2 * math.sqrt(abs_e))
        if abs(c - round(c)) < 1e-3:
            return
        res = count_bound_states(ProblemSpec(HALFLINE, EXACT, lam), abs_e, N200)
        assert res.count == math.floor(c) <= res.bound

    def test_smeared_bound_is_numeric(self):
        res = count_bound_states(ProblemSpec(FREE, PotentialFamily("softcore", 0.1), 3.0), 0.5, N200)
        assert res.count <= res.bound
