"""Pointwise Green's functions, Birman-Schwinger kernels and potential families.

Units follow hbar = 2m = 1, so energies are inverse squared lengths and
``a = sqrt(|E|)`` is the decay rate of every resolvent kernel.  All functions
broadcast over numpy arrays.

Every kernel is written in the factored form ``exp(-a|x-y|) * (1 - exp(-2a min))``
with ``expm1`` doing the subtraction.  That form has no cancellation near the
diagonal or the origin and never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

HALFLINE = "halfline_dirichlet"
LINE = "line_dirichlet"
FREE = "line_free"
NEUMANN = "halfline_neumann_sector"
DOMAINS = (HALFLINE, LINE, FREE, NEUMANN)
HALF_DOMAINS = (HALFLINE, NEUMANN)

DOMAIN_ALIASES = {
    "halfline": HALFLINE,
    "line": LINE,
    "free": FREE,
    "neumann": NEUMANN,
    "even": NEUMANN,
    "odd": HALFLINE,
}

FAMILY_KINDS = ("exact", "softcore", "rounded", "cutoff")
VARIANTS = ("bs", "appendix_b")


def canonical_domain(name: str) -> str:
    name = DOMAIN_ALIASES.get(name, name)
    if name not in DOMAINS:
        raise InvalidInputError(f"unknown domain {name!r}; expected one of {DOMAINS}")
    return name


@dataclass(frozen=True)
class EnergyParam:
    """A negative energy stored by its magnitude ``abs_e``."""

    abs_e: float

    def __post_init__(self):
        if not (math.isfinite(self.abs_e) and self.abs_e > 0):
            raise InvalidInputError(f"|E| must be positive and finite, got {self.abs_e}")

    @classmethod
    def from_energy(cls, energy: float) -> "EnergyParam":
        if not energy < 0:
            raise InvalidInputError(f"bound-state energies are negative, got E={energy}")
        return cls(-float(energy))

    @property
    def rate(self) -> float:
        """Decay rate sqrt(|E|)."""
        return math.sqrt(self.abs_e)

    @property
    def energy(self) -> float:
        return -self.abs_e


def as_energy(energy) -> EnergyParam:
    if isinstance(energy, EnergyParam):
        return energy
    return EnergyParam(float(energy))


def check_coupling(lam: float) -> float:
    lam = float(lam)
    if not (math.isfinite(lam) and lam > 0):
        raise InvalidInputError(f"coupling lambda must be positive, got {lam}")
    return lam


@dataclass(frozen=True)
class PotentialFamily:
    """Exact ``1/|x|`` or one of the smeared families below it.

    ``softcore`` is 1/(|x|+eps), ``rounded`` is 1/sqrt(x^2+eps^2) and ``cutoff``
    is min(1/|x|, 1/eps).
    """

    kind: str = "exact"
    eps: float | None = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise InvalidInputError(f"unknown potential family {self.kind!r}")
        if self.kind == "exact":
            if self.eps is not None:
                raise InvalidInputError("the exact Coulomb family takes no eps")
        elif self.eps is None or not (math.isfinite(self.eps) and self.eps > 0):
            raise InvalidInputError(f"{self.kind} family needs eps > 0, got {self.eps}")

    @property
    def smeared(self) -> bool:
        return self.kind != "exact"

    @property
    def scale(self) -> float | None:
        """Length scale where the potential departs from 1/|x|."""
        return self.eps

    def label(self) -> str:
        return self.kind if self.eps is None else f"{self.kind}(eps={self.eps:g})"


EXACT = PotentialFamily()


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel to evaluate: domain, potential, coupling, energy and variant."""

    domain: str = HALFLINE
    family: PotentialFamily = field(default=EXACT)
    coupling: float = 1.0
    energy: EnergyParam = field(default_factory=lambda: EnergyParam(1.0))
    variant: str = "bs"

    def __post_init__(self):
        object.__setattr__(self, "domain", canonical_domain(self.domain))
        object.__setattr__(self, "coupling", check_coupling(self.coupling))
        object.__setattr__(self, "energy", as_energy(self.energy))
        if self.variant not in VARIANTS:
            raise InvalidInputError(f"unknown kernel variant {self.variant!r}")
        if self.variant == "appendix_b":
            if self.family.smeared:
                raise InvalidInputError("appendix kernels exist only for the exact family")
            if self.domain not in (HALFLINE, LINE):
                raise InvalidInputError("appendix kernels live on the Dirichlet half-line or line")

    @property
    def half(self) -> bool:
        return self.domain in HALF_DOMAINS

    def with_energy(self, abs_e: float) -> "KernelSpec":
        return KernelSpec(self.domain, self.family, self.coupling, EnergyParam(abs_e), self.variant)


# --- Green's functions -----------------------------------------------------


def _one_minus_exp(t):
    return -np.expm1(-t)


def green_dirichlet_halfline(x, y, energy):
    """Resolvent kernel of the Dirichlet Laplacian on [0, inf) at E = -|E|."""
    a = as_energy(energy).rate
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = np.minimum(x, y)
    return np.exp(-a * np.abs(x - y)) * _one_minus_exp(2 * a * m) / (2 * a)


def green_dirichlet_line(x, y, energy):
    """Dirichlet resolvent on the line; opposite half-lines are decoupled."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    same = np.sign(x) * np.sign(y) > 0
    g = green_dirichlet_halfline(np.abs(x), np.abs(y), energy)
    return np.where(same, g, 0.0)


def green_free_line(x, y, energy):
    a = as_energy(energy).rate
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.exp(-a * np.abs(x - y)) / (2 * a)


def green_neumann_halfline(x, y, energy):
    """Even-parity sector of the free resolvent, folded onto [0, inf)."""
    a = as_energy(energy).rate
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = np.minimum(x, y)
    return np.exp(-a * np.abs(x - y)) * (1.0 + np.exp(-2 * a * m)) / (2 * a)


GREEN = {
    HALFLINE: green_dirichlet_halfline,
    LINE: green_dirichlet_line,
    FREE: green_free_line,
    NEUMANN: green_neumann_halfline,
}


def green(domain: str, x, y, energy):
    return GREEN[canonical_domain(domain)](x, y, energy)


def green_row_integral(domain: str, x, x_max: float, energy):
    """Closed form of the integral of G(x, y) over y in the truncated domain.

    The half-line domains integrate over (0, x_max), the line domains over
    (-x_max, x_max).  Used for the diagonal correction of the Nystrom matrix.
    """
    domain = canonical_domain(domain)
    a = as_energy(energy).rate
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    near = _one_minus_exp(a * ax) + _one_minus_exp(a * (x_max - ax))
    if domain == FREE:
        return (_one_minus_exp(a * (x_max - x)) + _one_minus_exp(a * (x_max + x))) / (2 * a * a)
    image = np.exp(-a * ax) * _one_minus_exp(a * x_max)
    if domain == NEUMANN:
        return (near + image) / (2 * a * a)
    return (near - image) / (2 * a * a)


# --- potentials --------------------------------------------------------------


def potential(family: PotentialFamily, x):
    x = np.abs(np.asarray(x, dtype=float))
    if family.kind == "exact":
        if np.any(x == 0):
            raise InvalidInputError("the Coulomb potential is singular at x = 0")
        return 1.0 / x
    eps = family.eps
    if family.kind == "softcore":
        return 1.0 / (x + eps)
    if family.kind == "rounded":
        return 1.0 / np.hypot(x, eps)
    with np.errstate(divide="ignore"):
        return np.minimum(1.0 / x, 1.0 / eps)


# --- Birman-Schwinger kernels -----------------------------------------------


def bs_kernel(spec: KernelSpec, x, y):
    """lambda * sqrt(V(x)) G(x, y) sqrt(V(y)) for the domain in ``spec``."""
    if spec.variant != "bs":
        return appendix_kernel(spec, x, y)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.half and (np.any(x < 0) or np.any(y < 0)):
        raise InvalidInputError(f"{spec.domain} kernels need x, y >= 0")
    g = GREEN[spec.domain](x, y, spec.energy)
    # sqrt of the product keeps k(x, y) == k(y, x) bit for bit
    return spec.coupling * g * np.sqrt(potential(spec.family, x) * potential(spec.family, y))


def appendix_kernel(spec: KernelSpec, x, y):
    """Kernel b (line) or b+ (half-line); min(x, y) is replaced by sqrt(|x||y|).

    No coupling factor: these kernels are defined without lambda.
    """
    if spec.variant != "appendix_b":
        raise InvalidInputError("appendix_kernel needs variant='appendix_b'")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.half and (np.any(x < 0) or np.any(y < 0)):
        raise InvalidInputError("b+ lives on the half-line")
    ax, ay = np.abs(x), np.abs(y)
    if np.any(ax == 0) or np.any(ay == 0):
        raise InvalidInputError("appendix kernels are singular at the origin")
    a = spec.energy.rate
    g = np.sqrt(ax * ay)
    return np.exp(-a * (np.sqrt(ax) - np.sqrt(ay)) ** 2) * _one_minus_exp(2 * a * g) / (2 * a * g)


def kernel_function(spec: KernelSpec):
    """Return ``k(x, y)`` for ``spec`` as a closure (bs or appendix variant)."""
    if spec.variant == "appendix_b":
        return lambda x, y: appendix_kernel(spec, x, y)
    return lambda x, y: bs_kernel(spec, x, y)


@dataclass(frozen=True)
class ProblemSpec:
    """A Hamiltonian without its energy: domain, potential family and coupling."""

    domain: str = HALFLINE
    family: PotentialFamily = field(default=EXACT)
    coupling: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "domain", canonical_domain(self.domain))
        object.__setattr__(self, "coupling", check_coupling(self.coupling))

    def at(self, energy) -> KernelSpec:
        return KernelSpec(self.domain, self.family, self.coupling, as_energy(energy))

    def with_domain(self, domain: str) -> "ProblemSpec":
        return ProblemSpec(domain, self.family, self.coupling)
