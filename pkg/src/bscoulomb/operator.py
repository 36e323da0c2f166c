"""Nystrom matrices for the Birman-Schwinger operators and their spectral data.

The matrix for a kernel ``sqrt(V) G sqrt(V)`` is assembled as ``S (W^1/2 G W^1/2 + C) S``
with ``S = diag(sqrt(lam V(x_i)))``.  ``C`` is the diagonal correction
``int G(x_i, y) dy - sum_j w_j G(x_i, x_j)``.  This is singularity subtraction for
the kink of G on the diagonal, with the row integral in closed form.  It raises
the order of the rule from h^2 to roughly h^4.  It also keeps the matrix in the
exact form ``X X^T`` with ``X = S sqrt(G)``, which the sandwiched operator
``R = X^T X`` relies on.

Squared Hilbert-Schmidt norms of the continuous kernels come from
``quadrature.square_integral``, not from the truncated matrix.  The matrix's own
Frobenius norm is exposed separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalFailure
from .kernels import (
    FREE,
    HALFLINE,
    LINE,
    NEUMANN,
    GREEN,
    KernelSpec,
    as_energy,
    green_row_integral,
    kernel_function,
    potential,
)
from .quadrature import Grid, GridConfig, build_grid, square_integral


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    matrix: np.ndarray
    grid: Grid
    spec: KernelSpec
    corrected: bool = True
    sector: str | None = None
    green: np.ndarray | None = None
    sqrt_v: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def full_line(self) -> bool:
        return self.spec.domain in (LINE, FREE) and self.sector is None


@dataclass(frozen=True, eq=False)
class SpectralResult:
    eigenvalues: np.ndarray
    hs_norm_sq: float
    det2: float
    eigenvectors: np.ndarray | None = None
    parity: tuple[str, ...] | None = None


SECTOR_DOMAIN = {"odd": HALFLINE, "even": NEUMANN}


def _nodes_for(spec: KernelSpec, grid: Grid, sector: str | None) -> Grid:
    if grid.x.min() <= 0 and spec.half:
        raise InvalidInputError("half-line problems need a half-line grid")
    if sector is None and spec.domain in (LINE, FREE):
        return grid if grid.x.min() < 0 else grid.mirrored()
    if grid.x.min() < 0:
        raise InvalidInputError("sector and half-line assemblies need a half-line grid")
    return grid


def green_matrix(domain: str, grid: Grid, energy, corrected: bool = True) -> np.ndarray:
    """Weighted Green's matrix ``W^1/2 G W^1/2``, plus the diagonal correction."""
    x, w = grid.x, grid.weights
    sw = np.sqrt(w)
    g = GREEN[domain](x[:, None], x[None, :], energy)
    if corrected:
        row = green_row_integral(domain, x, grid.x_max, energy)
        correction = row - g @ w
    # outer products keep the matrix symmetric bit for bit
    gm = np.outer(sw, sw) * g
    if corrected:
        gm[np.diag_indices_from(gm)] += correction
    return gm


def assemble(spec: KernelSpec, grid: Grid, corrected: bool = True,
             sector: str | None = None) -> DiscretizedOperator:
    """Symmetric Nystrom matrix of the operator described by ``spec``.

    Line domains are assembled on the mirrored node set.  With ``sector`` set
    to ``"odd"`` or ``"even"`` a free-line problem is assembled in one parity
    sector on the half-line instead: Dirichlet kernel for odd, Neumann kernel
    for even.  The appendix kernels are smooth and get the plain rule.
    """
    if sector is not None:
        if sector not in SECTOR_DOMAIN:
            raise InvalidInputError(f"sector must be 'odd' or 'even', got {sector!r}")
        if spec.domain not in (FREE, SECTOR_DOMAIN[sector]):
            raise InvalidInputError(f"parity sectors come from the free-line problem, not {spec.domain}")
        spec = KernelSpec(SECTOR_DOMAIN[sector], spec.family, spec.coupling, spec.energy)
    grid = _nodes_for(spec, grid, sector)
    if spec.variant == "appendix_b":
        k = kernel_function(spec)(grid.x[:, None], grid.x[None, :])
        sw = np.sqrt(grid.weights)
        m = np.outer(sw, sw) * k
        return DiscretizedOperator(m, grid, spec, corrected=False, sector=sector)
    gm = green_matrix(spec.domain, grid, spec.energy, corrected)
    s = np.sqrt(spec.coupling * potential(spec.family, grid.x))
    m = np.outer(s, s) * gm
    if sector is None and spec.domain == NEUMANN:
        sector = "even"
    return DiscretizedOperator(m, grid, spec, corrected, sector, green=gm, sqrt_v=s)


def assemble_at(spec: KernelSpec, config: GridConfig | None = None, **kwargs) -> DiscretizedOperator:
    config = config or GridConfig()
    return assemble(spec, build_grid(config, spec.energy), **kwargs)


# --- eigensolvers -------------------------------------------------------------


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi rotations; returns (eigenvalues, eigenvectors) unsorted.

    Stops when the off-diagonal Frobenius norm falls below ``tol * ||a||_F``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        if _off_norm(a) <= tol * scale:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    if _off_norm(a) <= tol * scale:
        return np.diag(a).copy(), v
    raise NumericalFailure(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def _lapack_eigh(a: np.ndarray, tol: float):
    w, q = np.linalg.eigh(a)
    scale = np.linalg.norm(a)
    if scale > 0:
        off = _off_norm(q.T @ a @ q)
        if not off <= tol * scale:
            raise NumericalFailure(f"eigensolver residual {off / scale:.3e} above tolerance {tol:.1e}")
    return w, q


def eig_sym(operator, tol: float = 1e-12, vectors: bool = False, method: str = "lapack") -> SpectralResult:
    """All eigenvalues of a symmetric matrix or DiscretizedOperator, descending.

    ``method="jacobi"`` runs the in-house cyclic Jacobi solver; the default
    uses LAPACK and then checks the same off-diagonal criterion on Q^T M Q.
    """
    op = operator if isinstance(operator, DiscretizedOperator) else None
    a = op.matrix if op is not None else np.asarray(operator, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError("eig_sym needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    if method == "jacobi":
        w, q = jacobi_eigh(a, tol)
    elif method == "lapack":
        w, q = _lapack_eigh(a, tol)
    else:
        raise InvalidInputError(f"unknown eigensolver {method!r}")
    order = np.argsort(-w, kind="stable")
    w, q = w[order], q[:, order]
    parity = None
    if vectors and op is not None:
        q, parity = _parity_basis(op, w, q)
        if parity is not None:
            rank = {"even": 0, "odd": 1, "mixed": 2}
            order = sorted(range(w.size), key=lambda i: (-round(w[i], 10), rank[parity[i]]))
            w, q = w[order], q[:, order]
            parity = tuple(parity[i] for i in order)
    return SpectralResult(
        eigenvalues=w,
        hs_norm_sq=float(np.sum(w * w)),
        det2=det2(w),
        eigenvectors=q if vectors else None,
        parity=parity,
    )


def mirror_permutation(grid: Grid) -> np.ndarray:
    """Index map i -> index of -x_i on a mirrored grid."""
    return np.arange(grid.n)[::-1]


def _parity_basis(op: DiscretizedOperator, w, q):
    if op.sector is not None:
        return q, tuple(op.sector for _ in range(w.size))
    if not op.full_line:
        return q, None
    perm = mirror_permutation(op.grid)
    q = q.copy()
    labels = []
    i = 0
    scale = max(abs(w[0]), 1e-300)
    while i < w.size:
        j = i + 1
        while j < w.size and abs(w[j] - w[i]) <= 1e-8 * scale:
            j += 1
        block = q[:, i:j]
        # diagonalise the reflection inside the (near-)degenerate cluster
        refl = block.T @ block[perm, :]
        pv, pq = np.linalg.eigh(0.5 * (refl + refl.T))
        idx = np.argsort(-pv)
        q[:, i:j] = block @ pq[:, idx]
        for k in range(i, j):
            labels.append(parity_of(q[:, k], op.grid))
        i = j
    return q, labels


def parity_of(vector: np.ndarray, grid: Grid, sector: str | None = None) -> str:
    """Classify a full-line vector as even or odd by its overlap with its mirror image.

    Overlaps in (-0.9, 0.9) of the squared norm are reported as ``"mixed"``.
    """
    if sector is not None:
        return sector
    v = np.asarray(vector, dtype=float)
    if v.size != grid.n or grid.x.min() >= 0:
        raise InvalidInputError("parity needs a vector on a mirrored full-line grid")
    overlap = float(v @ v[mirror_permutation(grid)]) / float(v @ v)
    if overlap >= 0.9:
        return "even"
    if overlap <= -0.9:
        return "odd"
    return "mixed"


def det2(eigenvalues, zero_tol: float = 1e-15) -> float:
    """Modified Fredholm determinant prod (1 - mu) exp(mu), summed in log space."""
    mu = np.asarray(eigenvalues, dtype=float)
    if mu.size == 0:
        return 1.0
    gap = 1.0 - mu
    if np.any(np.abs(gap) <= zero_tol):
        return 0.0
    sign = -1.0 if np.count_nonzero(gap < 0) % 2 else 1.0
    log_abs = float(np.sum(np.log(np.abs(gap)) + mu))
    return sign * math.exp(log_abs) if log_abs < 709 else sign * math.inf


# --- derived operators and norms ----------------------------------------------


def sandwich(green: np.ndarray, potential_diag: np.ndarray, psd_tol: float = 1e-10) -> np.ndarray:
    """``sqrt(G) V sqrt(G)`` from a weighted Green's matrix and diagonal potential."""
    w, q = np.linalg.eigh(green)
    top = max(float(w.max()), 0.0)
    if w.min() < -psd_tol * max(top, 1e-300):
        raise NumericalFailure(f"Green's matrix is not positive semidefinite (min eigenvalue {w.min():.3e})")
    root = (q * np.sqrt(np.clip(w, 0.0, None))) @ q.T
    r = root @ (np.asarray(potential_diag)[:, None] * root)
    return 0.5 * (r + r.T)


def sandwiched_R(spec: KernelSpec, grid: Grid, corrected: bool = True,
                 sector: str | None = None) -> DiscretizedOperator:
    """Matrix of (H0 + |E|)^-1/2 lam V (H0 + |E|)^-1/2 on the same nodes as ``assemble``."""
    if spec.variant != "bs":
        raise InvalidInputError("the sandwiched operator is defined for Birman-Schwinger kernels")
    base = assemble(spec, grid, corrected=corrected, sector=sector)
    r = sandwich(base.green, base.sqrt_v**2)
    return DiscretizedOperator(r, base.grid, base.spec, corrected, base.sector, green=base.green,
                               sqrt_v=base.sqrt_v)


def frobenius_sq(op: DiscretizedOperator) -> float:
    return float(np.sum(op.matrix * op.matrix))


def discrete_trace(spec: KernelSpec, grid: Grid) -> float:
    """Quadrature of the kernel diagonal, sum_i w_i k(x_i, x_i)."""
    grid = _nodes_for(spec, grid, None)
    k = kernel_function(spec)
    return float(np.sum(grid.weights * k(grid.x, grid.x)))


def _kernel_breaks(spec: KernelSpec):
    if spec.family.kind == "cutoff":
        return (spec.family.eps,)
    return ()


def kernel_quadrants(k, half: bool, energy, config: GridConfig | None = None,
                     breaks=()) -> dict[str, float]:
    """Integral of k(x, y)^2 over each quadrant of the domain (one quadrant for half-lines)."""
    config = config or GridConfig()
    opts = dict(
        length=1.0 / as_energy(energy).rate,
        order=config.square_order,
        split=config.truncation_radius_factor,
        breaks=tuple(breaks),
    )
    if half:
        return {"++": square_integral(k, **opts)}
    out = {}
    for name, sx, sy in (("++", 1, 1), ("--", -1, -1), ("+-", 1, -1), ("-+", -1, 1)):
        out[name] = square_integral(lambda x, y, sx=sx, sy=sy: k(sx * x, sy * y),
                                    symmetric=False, **opts)
    return out


def hs_quadrants(spec: KernelSpec, config: GridConfig | None = None) -> dict[str, float]:
    """Squared kernel integrated over each quadrant of the domain separately."""
    return kernel_quadrants(kernel_function(spec), spec.half, spec.energy, config, _kernel_breaks(spec))


def hs_norm_sq_numeric(spec: KernelSpec, config: GridConfig | None = None) -> float:
    """Double integral of the squared kernel over the whole (untruncated) domain."""
    return float(sum(hs_quadrants(spec, config).values()))


def dump_matrix(op: DiscretizedOperator, stream) -> None:
    """Plain-text row-major dump headed by ``n <nodes> xmax <value>``."""
    stream.write(f"n {op.n} xmax {op.grid.x_max!r}\n")
    for row in op.matrix:
        stream.write(" ".join(repr(float(v)) for v in row))
        stream.write("\n")


def load_matrix(stream) -> tuple[np.ndarray, float]:
    header = stream.readline().split()
    if len(header) != 4 or header[0] != "n" or header[2] != "xmax":
        raise InvalidInputError("matrix dump must start with 'n <nodes> xmax <value>'")
    n = int(header[1])
    rows = [np.array(stream.readline().split(), dtype=float) for _ in range(n)]
    return np.vstack(rows), float(header[3])
