import math

import numpy as np
import pytest

from bscoulomb.analytic import smeared_hs_upper_bound
from bscoulomb.convergence import (
    DEFAULT_EPS,
    hs_distance,
    klaus_experiment,
    rank_one_check,
    rank_one_parts,
    rank_one_residual,
    sector_ground_level,
    sweep,
)
from bscoulomb.errors import InvalidInputError, NumericalFailure
from bscoulomb.kernels import EXACT, HALFLINE, EnergyParam, KernelSpec, PotentialFamily, bs_kernel
from bscoulomb.quadrature import GridConfig, build_grid

from oracles import dirichlet_green, triangle_square_integral

SOFTCORE_DISTANCE_0P1 = 0.11346895939292651


class TestDistance:
    def test_exact_family_is_zero(self):
        assert hs_distance(EXACT) == 0.0
        assert hs_distance("exact") == 0.0

    def test_regression_value(self):
        assert hs_distance("softcore", 0.1) == pytest.approx(SOFTCORE_DISTANCE_0P1, rel=1e-12)

    def test_against_adaptive_quadrature(self):
        eps = 0.1
        k = lambda x, y: dirichlet_green(x, y) * (1 / math.sqrt((x + eps) * (y + eps)) - 1 / math.sqrt(x * y))
        ref = math.sqrt(triangle_square_integral(k))
        assert SOFTCORE_DISTANCE_0P1 == pytest.approx(ref, rel=1e-9)

    def test_cutoff_against_adaptive_quadrature(self):
        eps = 0.1
        k = lambda x, y: dirichlet_green(x, y) * (1 / math.sqrt(max(x, eps) * max(y, eps)) - 1 / math.sqrt(x * y))
        ref = math.sqrt(triangle_square_integral(k, breaks=(eps,)))
        assert hs_distance("cutoff", eps) == pytest.approx(ref, rel=1e-8)

    @pytest.mark.parametrize("kind", ["softcore", "cutoff", "rounded"])
    def test_decreasing(self, kind):
        values = [hs_distance(kind, e) for e in DEFAULT_EPS]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_scales_with_coupling(self):
        assert hs_distance("softcore", 0.1, coupling=3.0) == pytest.approx(3 * SOFTCORE_DISTANCE_0P1, rel=1e-12)


class TestSweep:
    @pytest.mark.parametrize("kind", ["softcore", "rounded", "cutoff"])
    def test_sweep(self, kind):
        records = sweep(kind)
        exact = math.pi**2 / 24
        assert [r.eps for r in records] == list(DEFAULT_EPS)
        assert records[-1].hs_distance < records[0].hs_distance / 10
        for r in records:
            assert r.hs_norm_sq_smeared < exact
            assert r.hs_norm_sq_smeared < r.young_bound
        assert records[-1].hs_norm_sq_smeared == pytest.approx(exact, rel=0.01)

    def test_softcore_values(self):
        records = sweep("softcore")
        assert records[0].hs_distance == pytest.approx(0.1135, abs=1e-4)
        assert records[-1].hs_distance == pytest.approx(4.7e-4, rel=0.02)

    def test_young_bound_value(self):
        family = PotentialFamily("softcore", 0.1)
        assert smeared_hs_upper_bound(family, EnergyParam(1.0), 1.0) > sweep("softcore", [0.1])[0].hs_norm_sq_smeared

    def test_workers_preserve_order(self):
        eps = (0.1, 0.03, 0.01)
        assert sweep("softcore", eps, workers=3) == sweep("softcore", eps)

    @pytest.mark.parametrize("eps", [[0.1, 0.1], [0.01, 0.1], [], [0.1, -0.01]])
    def test_eps_list_validation(self, eps):
        with pytest.raises(InvalidInputError):
            sweep("softcore", eps)

    def test_exact_family_rejected(self):
        with pytest.raises(InvalidInputError):
            sweep("exact")

    def test_young_bound_violation_detected(self, monkeypatch):
        import bscoulomb.convergence as conv

        monkeypatch.setattr(conv.analytic, "smeared_hs_upper_bound", lambda *a: 0.0)
        with pytest.raises(NumericalFailure):
            conv.sweep("softcore", [0.1])


def test_pointwise_dominance_on_nodes():
    grid = build_grid(GridConfig(n_nodes=100), 1.0)
    x, y = grid.x[:, None], grid.x[None, :]
    exact = bs_kernel(KernelSpec(HALFLINE), x, y)
    for kind in ("softcore", "cutoff", "rounded"):
        for eps in DEFAULT_EPS:
            smeared = bs_kernel(KernelSpec(HALFLINE, PotentialFamily(kind, eps)), x, y)
            assert np.all(smeared <= exact) and np.all(smeared >= 0)


class TestRankOne:
    @pytest.mark.parametrize("abs_e, n", [(1.0, 100), (4.0, 50), (0.25, 100)])
    def test_identity(self, abs_e, n):
        assert rank_one_check(abs_e, GridConfig(n_nodes=n)) <= 1e-12

    def test_perturbation_detected(self):
        free, dirichlet, g, c = rank_one_parts(1.0, build_grid(GridConfig(n_nodes=100), 1.0))
        assert rank_one_residual(free, dirichlet, g, c) <= 1e-12
        assert rank_one_residual(free, dirichlet, g, c * (1 + 1e-6)) > 1e-8
        bumped = free.copy()
        bumped[3, 5] += 1e-6
        assert rank_one_residual(bumped, dirichlet, g, c) > 1e-8

    def test_tolerance_failure(self):
        with pytest.raises(NumericalFailure):
            rank_one_check(1.0, GridConfig(n_nodes=50), tol=1e-30)


class TestKlaus:
    def test_levels(self):
        records = klaus_experiment()
        odd = [r.level_odd for r in records]
        even = [r.level_even for r in records]
        assert odd[-1] == pytest.approx(-0.25, rel=0.01)
        assert all(v >= -0.25 for v in odd)
        assert all(b < a for a, b in zip(odd, odd[1:]))
        assert all(b < a for a, b in zip(even, even[1:]))
        assert even[-1] < 100 * odd[-1]

    def test_recorded_values(self):
        records = klaus_experiment(eps_list=(0.1, 0.01))
        assert records[0].level_odd == pytest.approx(-0.21537, abs=1e-5)
        assert records[0].level_even == pytest.approx(-2.127, abs=1e-3)
        assert records[1].level_even == pytest.approx(-7.474, abs=1e-3)

    def test_workers_preserve_order(self):
        eps = (0.1, 0.01)
        assert klaus_experiment(eps_list=eps, workers=4) == klaus_experiment(eps_list=eps)

    def test_scaling_with_coupling(self):
        level = sector_ground_level(PotentialFamily("softcore", 0.01), 2.0, "odd")
        assert level < -0.25 * 4 * 0.9 and level >= -1.0
