"""Closed-form reference values: Hilbert-Schmidt norms, series, bounds and exact levels.

These are the oracles the numerical modules are checked against.  Functions take
the coupling ``lam`` and an energy (``EnergyParam`` or plain |E|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import digamma, poch, rgamma

from .errors import InvalidInputError, NumericalFailure
from .kernels import HALFLINE, LINE, PotentialFamily, as_energy, canonical_domain, check_coupling
from .quadrature import GridConfig, composite_rule, square_integral

ZETA2 = math.pi**2 / 6
EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class ClosedFormReport:
    name: str
    value: float
    source: str
    formula_inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise NumericalFailure(f"{self.name} is not finite")
        if not self.source:
            raise InvalidInputError("a closed-form report needs a source")


def hs_norm_sq_halfline(lam: float, energy) -> float:
    """Squared HS norm of the half-line operator: lam^2 pi^2 / (24 |E|)."""
    lam = check_coupling(lam)
    return lam**2 * math.pi**2 / (24 * as_energy(energy).abs_e)


class LineNorms(NamedTuple):
    published_value: float
    decoupled_value: float


def hs_norm_sq_line(lam: float, energy) -> LineNorms:
    """Both candidate values for the full-line Dirichlet operator.

    The printed relation multiplies the half-line value by 4.  The kernel
    vanishes when x and y have opposite signs, so only two quadrants
    contribute and the factor is 2.  Both are returned; quadrature decides.
    """
    half = hs_norm_sq_halfline(lam, energy)
    return LineNorms(published_value=4 * half, decoupled_value=2 * half)


def sinh_integral_I(x: float, max_terms: int = 2000) -> float:
    """Sum over l >= 1 of x^(2l) / (l (2l)!), i.e. 4 * int_0^{x/2} sinh(y)^2 / y dy."""
    x = float(x)
    if x < 0:
        raise InvalidInputError("I(x) is defined for x >= 0")
    if x > 700:
        raise InvalidInputError(f"I({x}) is out of range: it overflows double precision")
    x2 = x * x
    term = x2 / 2.0  # x^2 / 2!
    total = 0.0
    for ell in range(1, max_terms + 1):
        contribution = term / ell
        total += contribution
        term *= x2 / ((2 * ell + 1) * (2 * ell + 2))
        nxt = term / (ell + 1)
        if nxt <= 1e-16 * total and ell > x:
            break
    return total


def _zeta2_integrand_root(squared: bool):
    if squared:
        # e^{-(x+y)/2} (e^{min} - 1) / sqrt(xy), folded into overflow-free form
        def h(x, y):
            m = np.minimum(x, y)
            return np.exp(-0.5 * np.abs(x - y)) * -np.expm1(-m) / np.sqrt(x * y)
    else:
        def h(x, y):
            m = np.minimum(x, y)
            return np.sqrt(np.exp(-np.abs(x - y)) * -np.expm1(-m) / np.sqrt(x * y))
    return h


def zeta2_integral(config: GridConfig | None = None, radius: float | None = None,
                   squared: bool = True) -> float:
    """Double integral of e^{-x} [(e^{min(x,y)} - 1) / sqrt(xy)]^2 e^{-y} over the quadrant.

    With ``radius`` the domain is the box [0, radius]^2; the result then misses
    a tail of about 2 / radius.  ``squared=False`` evaluates the bracket to the
    first power, which diverges logarithmically, so it needs a finite radius.
    """
    config = config or GridConfig()
    if not squared and radius is None:
        raise NumericalFailure("the unsquared integrand is not integrable over the quadrant")
    h = _zeta2_integrand_root(squared)
    return square_integral(h, length=1.0, order=config.square_order,
                           split=config.truncation_radius_factor, radius=radius)


def half_gamma_ratio(s: int) -> float:
    """Gamma(s/2 + 1) / Gamma(s/2 + 1/2) by upward recurrence from Gamma(1/2) = sqrt(pi)."""
    r = (1.0 / math.sqrt(math.pi), math.sqrt(math.pi) / 2.0)
    if s < 2:
        return r[s]
    ratio = r[s % 2]
    for k in range(s % 2, s - 1, 2):
        ratio *= (k / 2 + 1) / (k / 2 + 0.5)
    return ratio


def half_integer_gamma(k: int) -> float:
    """Gamma(k / 2) for k >= 1 via Gamma(1/2) = sqrt(pi), Gamma(1) = 1 and z Gamma(z)."""
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    g = math.sqrt(math.pi) if k % 2 else 1.0
    z = 0.5 if k % 2 else 1.0
    while z < k / 2:
        g *= z
        z += 1
    return g


def anti_diagonal_term(s: int) -> float:
    """Sum over l + m = s of Gamma^2((l+m)/2 + 1) / ((l+1)! (m+1)!).

    The inner sum of 1/((l+1)!(m+1)!) is (2^{s+2} - 2)/(s+2)!, and the duplication
    formula reduces the rest to a ratio of half-integer Gammas.
    """
    return math.sqrt(math.pi) * half_gamma_ratio(s) * (4.0 - 2.0 ** (1 - s)) / ((s + 1) * (s + 2))


def _anti_diagonal_asymptote(s):
    s = np.asarray(s, dtype=float)
    ratio = poch(s / 2 + 0.5, 0.5)
    return 4 * math.sqrt(math.pi) * ratio / ((s + 1) * (s + 2))


def _anti_diagonal_log_slope(s):
    return 0.5 * (digamma(s / 2 + 1) - digamma(s / 2 + 0.5)) - 1 / (s + 1) - 1 / (s + 2)


def _anti_diagonal_tail(last: int) -> tuple[float, float]:
    """Euler-Maclaurin estimate of the sum over s > last, and the size of its next term."""
    f = _anti_diagonal_asymptote
    # terms fall like s^-3/2; s = last / t^2 turns the integral into a smooth one
    t, w = composite_rule([0.0, 0.25, 0.5, 1.0], 24)
    integral = float(np.sum(w * f(last / t**2) * 2 * last / t**3))
    f0 = float(f(last))
    d1 = f0 * _anti_diagonal_log_slope(last)
    h = 1.0
    d3 = (f(last + 2 * h) - 2 * f(last + h) + 2 * f(last - h) - f(last - 2 * h)) / (2 * h**3)
    tail = integral - 0.5 * f0 - d1 / 12
    return tail, abs(float(d3)) / 720


def appendix_double_sum(tolerance: float = 1e-10, max_antidiagonal: int = 2000,
                        tail: bool = True) -> float:
    """Double series whose value is 13 pi^2 / 18.

    Anti-diagonal contributions decay only like s^-3/2, so plain summation to
    s = 2000 is short by about 0.2.  The remainder is added by Euler-Maclaurin
    on the smooth asymptote of the anti-diagonal term.  The loop stops when the
    next anti-diagonal and the Euler-Maclaurin error are both below
    ``tolerance``.  ``tail=False`` returns the bare partial sum at
    ``max_antidiagonal``.
    """
    if not tolerance > 0:
        raise InvalidInputError("tolerance must be positive")
    partial = 0.0
    for s in range(max_antidiagonal + 1):
        term = anti_diagonal_term(s)
        partial += term
        if tail and s >= 60:
            rest, err = _anti_diagonal_tail(s)
            if err < tolerance and abs(anti_diagonal_term(s + 1) - _anti_diagonal_asymptote(s + 1)) < tolerance:
                return partial + rest
    if tail:
        raise NumericalFailure(f"double sum did not reach {tolerance} by s = {max_antidiagonal}")
    return partial


def appendix_hs_norms(energy) -> tuple[float, float]:
    """HS norms (||b+||, ||b||) of the appendix kernels."""
    abs_e = as_energy(energy).abs_e
    base = math.sqrt(13 / (2 * abs_e)) * math.pi
    return base / 6, base / 3


def counting_bound(domain: str, lam: float, energy) -> float:
    """Upper bound on the number of bound states at or below E (squared HS norm)."""
    domain = canonical_domain(domain)
    if domain == HALFLINE:
        return hs_norm_sq_halfline(lam, energy)
    if domain == LINE:
        return hs_norm_sq_line(lam, energy).published_value
    raise InvalidInputError(f"no counting bound is stated for {domain}")


def smeared_l2_norm_sq(family: PotentialFamily) -> float:
    """Full-line integral of V_eps^2."""
    if not family.smeared:
        raise InvalidInputError("1/|x| is not square integrable")
    c = {"softcore": 2.0, "rounded": math.pi, "cutoff": 4.0}[family.kind]
    return c / family.eps


def smeared_hs_upper_bound(family: PotentialFamily, energy, lam: float = 1.0) -> float:
    """Young-inequality bound 3 lam^2 ||V_eps||_2^2 / (8 |E|^{3/2}) on ||B_eps||_2^2."""
    abs_e = as_energy(energy).abs_e
    return check_coupling(lam) ** 2 * 3 * smeared_l2_norm_sq(family) / (8 * abs_e**1.5)


def _level_index(n) -> int:
    if int(n) != n or n < 1:
        raise InvalidInputError(f"level index must be a positive integer, got {n}")
    return int(n)


def exact_coulomb_level(lam: float, n: int) -> float:
    """n-th eigenvalue -lam^2 / (4 n^2) of the Dirichlet half-line Coulomb operator."""
    return -check_coupling(lam) ** 2 / (4 * _level_index(n) ** 2)


def exact_bs_eigenvalue(lam: float, energy, n: int) -> float:
    """n-th eigenvalue lam / (2 n sqrt|E|) of the half-line Birman-Schwinger operator."""
    return check_coupling(lam) / (2 * _level_index(n) * as_energy(energy).rate)


def exact_det2(lam: float, energy) -> float:
    """Modified Fredholm determinant of the half-line operator in closed form.

    With eigenvalues c/n, c = lam / (2 sqrt|E|), the Weierstrass product gives
    prod (1 - c/n) e^{c/n} = e^{gamma c} / Gamma(1 - c).
    """
    c = check_coupling(lam) / (2 * as_energy(energy).rate)
    return float(math.exp(EULER_GAMMA * c) * rgamma(1.0 - c))


class RankOneCoefficients(NamedTuple):
    a: float
    b: float
    b_printed: float


def rank_one_resolvent_coeffs(energy) -> RankOneCoefficients:
    """(P + |E|)^{-1} = a I - b P for P = |g><g| / (2 sqrt|E|), g = exp(-sqrt|E| |x|).

    P has the single nonzero eigenvalue ||g||^2 / (2 sqrt|E|) = 1 / (2|E|), so
    b = 1 / (|E| (|E| + 1/(2|E|))).  ``b_printed`` is the printed coefficient
    1 / (|E|^{1/2} (1 + |E|^{3/2})), which corresponds to P without its prefactor.
    """
    abs_e = as_energy(energy).abs_e
    return RankOneCoefficients(
        a=1.0 / abs_e,
        b=1.0 / (abs_e**2 + 0.5),
        b_printed=1.0 / (math.sqrt(abs_e) * (1.0 + abs_e**1.5)),
    )


def closed_form_reports(lam: float = 1.0, energy=1.0) -> list[ClosedFormReport]:
    e = as_energy(energy)
    inputs = {"lambda": lam, "abs_e": e.abs_e}
    line = hs_norm_sq_line(lam, e)
    bplus, b = appendix_hs_norms(e)
    return [
        ClosedFormReport("hs_norm_sq_halfline", hs_norm_sq_halfline(lam, e), "half-line HS norm, zeta(2) evaluation", inputs),
        ClosedFormReport("hs_norm_sq_line_paper", line.published_value, "full-line HS norm, printed factor 4", inputs),
        ClosedFormReport("hs_norm_sq_line_decoupled", line.decoupled_value, "full-line HS norm, Dirichlet decoupling", inputs),
        ClosedFormReport("zeta2", ZETA2, "zeta(2) series", {}),
        ClosedFormReport("appendix_bplus_norm_sq", bplus**2, "appendix b+ norm", {"abs_e": e.abs_e}),
        ClosedFormReport("appendix_b_norm_sq", b**2, "appendix b norm", {"abs_e": e.abs_e}),
        ClosedFormReport("appendix_double_sum", 13 * math.pi**2 / 18, "appendix double series", {}),
        ClosedFormReport("counting_bound_halfline", counting_bound(HALFLINE, lam, e), "bound-state counting bound", inputs),
    ]
