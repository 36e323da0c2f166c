"""Bound states through the Birman-Schwinger principle.

A level sits at the energy where the k-th eigenvalue of B(E) crosses 1.  The
eigenvalues grow as |E| shrinks, so a bisection in log|E| is safe.  Grids are
rebuilt at every energy with x_max proportional to 1/sqrt|E|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .errors import InvalidInputError, NoBoundStateError, NumericalFailure
from .kernels import FREE, HALFLINE, LINE, NEUMANN, EnergyParam, ProblemSpec, as_energy
from .operator import assemble, det2, eig_sym, hs_norm_sq_numeric, sandwiched_R
from .quadrature import GridConfig, build_grid

MAX_ITERATIONS = 60
SECTOR_OF_DOMAIN = {HALFLINE: "odd", NEUMANN: "even"}


@dataclass(frozen=True)
class LevelRequest:
    problem: ProblemSpec
    k: int = 1
    grid: GridConfig = field(default_factory=GridConfig)
    root_tol: float = 1e-10
    sector: str | None = None
    route: str = "bs"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidInputError(f"level index k must be a positive integer, got {self.k}")
        if not 0 < self.root_tol < 1:
            raise InvalidInputError("root_tol must lie in (0, 1)")
        if self.k > self.grid.n_nodes // 10:
            raise InvalidInputError(f"k={self.k} is not resolvable with {self.grid.n_nodes} nodes")
        if self.route not in ("bs", "sandwiched"):
            raise InvalidInputError(f"unknown route {self.route!r}")
        if self.problem.domain == FREE and self.sector not in ("odd", "even"):
            raise InvalidInputError("free-line levels are solved per parity sector: pass sector='odd' or 'even'")
        if self.sector is not None and self.sector not in ("odd", "even"):
            raise InvalidInputError(f"sector must be 'odd' or 'even', got {self.sector!r}")


@dataclass(frozen=True)
class LevelResult:
    energy: float
    mu_at_root: float
    det2_at_root: float
    iterations: int
    parity: str | None = None
    multiplicity: int = 1
    k: int = 1


def grid_config_for(problem: ProblemSpec, config: GridConfig | None) -> GridConfig:
    """Default grid, graded down to the smearing length for smeared families."""
    config = config or GridConfig()
    if problem.family.smeared and config.min_scale is None:
        config = config.replace(min_scale=problem.family.eps)
    return config


def _sector_problem(problem: ProblemSpec, sector: str | None) -> tuple[ProblemSpec, str | None, int]:
    """Half-line problem actually solved, its parity label and the level multiplicity."""
    if problem.domain == LINE:
        return problem.with_domain(HALFLINE), None, 2
    if problem.domain == FREE:
        return problem.with_domain(HALFLINE if sector == "odd" else NEUMANN), sector, 1
    label = SECTOR_OF_DOMAIN.get(problem.domain)
    if sector is not None and sector != label:
        raise InvalidInputError(f"{problem.domain} is the {label} sector, not {sector}")
    return problem, sector, 1


def spectrum_at(problem: ProblemSpec, energy, config: GridConfig | None = None,
                route: str = "bs", tol: float = 1e-12, vectors: bool = False, method: str = "lapack"):
    spec = problem.at(energy)
    grid = build_grid(grid_config_for(problem, config), spec.energy)
    op = assemble(spec, grid) if route == "bs" else sandwiched_R(spec, grid)
    return eig_sym(op, tol=tol, vectors=vectors, method=method)


def bs_eigenvalues(problem: ProblemSpec, energy, config: GridConfig | None = None, k_max: int = 5,
                   route: str = "bs", tol: float = 1e-12, method: str = "lapack") -> np.ndarray:
    """Top ``k_max`` eigenvalues of B(E), descending."""
    if int(k_max) != k_max or k_max < 1:
        raise InvalidInputError("k_max must be a positive integer")
    res = spectrum_at(problem, energy, config, route=route, tol=tol, method=method)
    return res.eigenvalues[: int(k_max)].copy()


def solve_level(request: LevelRequest) -> LevelResult:
    """Energy of the k-th level: bisection on mu_k(B(E)) - 1 in log|E|."""
    problem, parity, multiplicity = _sector_problem(request.problem, request.sector)
    config = grid_config_for(problem, request.grid)
    k = request.k

    def mu(abs_e: float) -> tuple[float, np.ndarray]:
        eigs = spectrum_at(problem, EnergyParam(abs_e), config, route=request.route).eigenvalues
        return float(eigs[k - 1]), eigs

    lam = problem.coupling
    if problem.family.smeared:
        shallow, deep = 1e-8, 4.0 * lam * lam * (1.0 + 1.0 / problem.family.eps)
    else:
        # mu_k scales like lam/sqrt|E|, so one evaluation at |E|=1 fixes the bracket
        guess = mu(1.0)[0] ** 2
        if not guess > 0:
            raise NoBoundStateError(f"no level {k} for {problem.domain}")
        shallow, deep = guess / 4.0, 4.0 * guess

    if not mu(shallow)[0] > 1.0:
        if problem.family.smeared:
            raise NoBoundStateError(f"no level {k} above E=-{shallow:g} in the {parity or problem.domain} sector")
        for _ in range(20):
            shallow /= 4.0
            if mu(shallow)[0] > 1.0:
                break
        else:
            raise NoBoundStateError(f"no sign change for level {k}")
    for _ in range(20):
        if mu(deep)[0] < 1.0:
            break
        shallow, deep = deep, deep * 4.0
    else:
        raise NumericalFailure(f"could not bracket level {k} from below")

    lo, hi = math.log(shallow), math.log(deep)
    iterations = 0
    while math.expm1(hi - lo) > request.root_tol:
        if iterations >= MAX_ITERATIONS:
            raise NumericalFailure(f"bisection did not reach {request.root_tol:g} in {MAX_ITERATIONS} steps")
        mid = 0.5 * (lo + hi)
        if mu(math.exp(mid))[0] > 1.0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    abs_e = math.exp(0.5 * (lo + hi))
    value, eigs = mu(abs_e)
    return LevelResult(
        energy=-abs_e,
        mu_at_root=value,
        det2_at_root=det2(eigs),
        iterations=iterations,
        parity=parity,
        multiplicity=multiplicity,
        k=k,
    )


@dataclass(frozen=True)
class CountResult:
    count: int
    bound: float
    eigenvalues: np.ndarray = field(repr=False, compare=False, default=None)


def count_bound_states(problem: ProblemSpec, energy, config: GridConfig | None = None,
                       tol: float = 1e-6) -> CountResult:
    """Number of B-S eigenvalues >= 1, next to the squared-HS-norm upper bound.

    Eigenvalues within ``tol`` of 1 count as 1, so a level sitting exactly at E
    is included.
    """
    energy = as_energy(energy)
    eigs = spectrum_at(problem, energy, config).eigenvalues
    count = int(np.count_nonzero(eigs >= 1.0 - tol))
    if problem.domain in (HALFLINE, LINE) and not problem.family.smeared:
        bound = analytic.counting_bound(problem.domain, problem.coupling, energy)
    else:
        bound = hs_norm_sq_numeric(problem.at(energy), grid_config_for(problem, config))
    if count > bound * (1.0 + tol) + tol:
        raise NumericalFailure(f"{count} bound states exceed the upper bound {bound:.6g}")
    return CountResult(count, float(bound), eigs)
