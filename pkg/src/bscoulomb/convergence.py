"""Smearing sweeps: HS convergence of smeared kernels, the rank-one Green's identity,
and the parity-split ground levels of the smeared free-line problem.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analytic
from .errors import InvalidInputError, NoBoundStateError, NumericalFailure
from .kernels import (
    EXACT,
    FREE,
    HALFLINE,
    PotentialFamily,
    ProblemSpec,
    KernelSpec,
    as_energy,
    check_coupling,
    green_dirichlet_line,
    green_free_line,
    kernel_function,
)
from .operator import _kernel_breaks, kernel_quadrants
from .quadrature import Grid, GridConfig, build_grid
from .spectrum import LevelRequest, solve_level

DEFAULT_EPS = (1e-1, 1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class SweepRecord:
    eps: float
    hs_distance: float | None = None
    hs_norm_sq_smeared: float | None = None
    young_bound: float | None = None
    level_odd: float | None = None
    level_even: float | None = None


def _family(kind, eps) -> PotentialFamily:
    if isinstance(kind, PotentialFamily):
        kind = kind.kind
    family = PotentialFamily(kind, eps)
    if not family.smeared:
        raise InvalidInputError("smearing sweeps need a smeared family")
    return family


def _check_eps_list(eps_list) -> list[float]:
    eps = [float(e) for e in eps_list]
    if not eps:
        raise InvalidInputError("eps_list is empty")
    if any(not e > 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise InvalidInputError("eps_list must be positive and strictly decreasing")
    return eps


def _map(fn, items, workers: int | None):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def hs_distance(family, eps: float | None = None, coupling: float = 1.0, energy=1.0,
                config: GridConfig | None = None, domain: str = HALFLINE) -> float:
    """HS norm of B_eps - B, integrating the squared pointwise kernel difference.

    ``family`` is a PotentialFamily or a kind name together with ``eps``.
    An exact family gives 0.
    """
    if isinstance(family, str):
        family = PotentialFamily(family, eps) if family != "exact" else EXACT
    smeared = KernelSpec(domain, family, coupling, as_energy(energy))
    exact = KernelSpec(domain, EXACT, coupling, smeared.energy)
    if not family.smeared:
        return 0.0
    ks, ke = kernel_function(smeared), kernel_function(exact)
    parts = kernel_quadrants(lambda x, y: ks(x, y) - ke(x, y), smeared.half, smeared.energy,
                             _graded(config, family), _kernel_breaks(smeared))
    return math.sqrt(sum(parts.values()))


def _graded(config: GridConfig | None, family: PotentialFamily) -> GridConfig:
    config = config or GridConfig()
    if family.smeared and config.min_scale is None:
        config = config.replace(min_scale=family.eps)
    return config


def _hs_record(family: PotentialFamily, coupling, energy, config, domain) -> SweepRecord:
    spec = KernelSpec(domain, family, coupling, energy)
    norm_sq = sum(kernel_quadrants(kernel_function(spec), spec.half, energy,
                                   _graded(config, family), _kernel_breaks(spec)).values())
    return SweepRecord(
        eps=family.eps,
        hs_distance=hs_distance(family, None, coupling, energy, config, domain),
        hs_norm_sq_smeared=float(norm_sq),
        young_bound=analytic.smeared_hs_upper_bound(family, energy, coupling),
    )


def sweep(family, eps_list=DEFAULT_EPS, coupling: float = 1.0, energy=1.0,
          config: GridConfig | None = None, domain: str = HALFLINE,
          workers: int | None = None) -> list[SweepRecord]:
    """HS distance, smeared HS norm and Young bound along a decreasing eps list.

    Raises NumericalFailure when the distances fail to decrease strictly, the
    smeared norms fail to increase, or a norm reaches the Young bound.
    """
    eps = _check_eps_list(eps_list)
    coupling = check_coupling(coupling)
    energy = as_energy(energy)
    families = [_family(family, e) for e in eps]
    records = _map(lambda f: _hs_record(f, coupling, energy, config, domain), families, workers)
    for r in records:
        if not r.hs_norm_sq_smeared < r.young_bound:
            raise NumericalFailure(f"eps={r.eps:g}: HS norm {r.hs_norm_sq_smeared:.6g} "
                                   f"not below the Young bound {r.young_bound:.6g}")
    for a, b in zip(records, records[1:]):
        if not b.hs_distance < a.hs_distance:
            raise NumericalFailure(f"HS distance did not decrease from eps={a.eps:g} to eps={b.eps:g}")
        if not b.hs_norm_sq_smeared > a.hs_norm_sq_smeared:
            raise NumericalFailure(f"smeared HS norm did not increase from eps={a.eps:g} to eps={b.eps:g}")
    return records


# --- rank-one identity ----------------------------------------------------------


def rank_one_parts(energy, grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Weighted free and Dirichlet Green's matrices, the vector g and the coefficient 1/(2a)."""
    energy = as_energy(energy)
    if grid.x.min() > 0:
        grid = grid.mirrored()
    x, sw = grid.x, np.sqrt(grid.weights)
    a = energy.rate
    weigh = sw[:, None] * sw[None, :]
    free = weigh * green_free_line(x[:, None], x[None, :], energy)
    dirichlet = weigh * green_dirichlet_line(x[:, None], x[None, :], energy)
    g = sw * np.exp(-a * np.abs(x))
    return free, dirichlet, g, 1.0 / (2.0 * a)


def rank_one_residual(free, dirichlet, g, coefficient) -> float:
    """Frobenius norm of free - dirichlet - coefficient g g^T, relative to ||free||."""
    r = free - dirichlet - coefficient * np.outer(g, g)
    return float(np.linalg.norm(r) / np.linalg.norm(free))


def rank_one_check(energy, grid: Grid | GridConfig | None = None, tol: float = 1e-12) -> float:
    """Relative residual of the rank-one split of the free Green's matrix on a mirrored grid."""
    energy = as_energy(energy)
    if not isinstance(grid, Grid):
        grid = build_grid(grid or GridConfig(), energy)
    residual = rank_one_residual(*rank_one_parts(energy, grid))
    if not residual <= tol:
        raise NumericalFailure(f"rank-one residual {residual:.3e} above {tol:.0e}")
    return residual


# --- Klaus experiment ------------------------------------------------------------


def sector_ground_level(family: PotentialFamily, coupling: float, sector: str,
                        config: GridConfig | None = None) -> float | None:
    """Ground level of one parity sector of the smeared free-line problem, or None."""
    request = LevelRequest(ProblemSpec(FREE, family, coupling), 1, config or GridConfig(), sector=sector)
    try:
        return solve_level(request).energy
    except NoBoundStateError:
        return None


def klaus_experiment(family="softcore", coupling: float = 1.0, eps_list=DEFAULT_EPS,
                     config: GridConfig | None = None, workers: int | None = None) -> list[SweepRecord]:
    """Odd and even ground levels of the smeared free-line problem along the eps list.

    Raises NumericalFailure unless the odd level decreases towards -lam^2/4
    without passing it and the even level decreases strictly.
    """
    eps = _check_eps_list(eps_list)
    coupling = check_coupling(coupling)
    families = [_family(family, e) for e in eps]
    jobs = [(f, s) for f in families for s in ("odd", "even")]
    levels = _map(lambda job: sector_ground_level(job[0], coupling, job[1], config), jobs, workers)
    records = [SweepRecord(eps=e, level_odd=levels[2 * i], level_even=levels[2 * i + 1])
               for i, e in enumerate(eps)]
    floor = analytic.exact_coulomb_level(coupling, 1)
    odd = [r.level_odd for r in records if r.level_odd is not None]
    even = [r.level_even for r in records if r.level_even is not None]
    if any(b > a for a, b in zip(odd, odd[1:])) or any(v < floor * (1 + 1e-6) for v in odd):
        raise NumericalFailure("odd-sector levels do not decrease monotonically towards the Coulomb level")
    if any(not b < a for a, b in zip(even, even[1:])):
        raise NumericalFailure("even-sector levels do not decrease strictly")
    return records

