"""Gauss-Legendre grids for Nystrom matrices and for double integrals of squared kernels.

Two different rules live here.

``build_grid`` produces the Nystrom nodes: composite Gauss-Legendre in
``u = sqrt(x)`` on geometrically graded panels, truncated at ``x_max``.

``square_integral`` computes the integral of h(x, y)^2 over the whole quadrant.  It
splits along the diagonal, so the kink of every Green's function sits on a panel
edge, and maps the far region to a finite interval.  Along the diagonal the
Birman-Schwinger kernels decay only like 1/x, so a truncated box loses O(1/x_max)
of the squared norm.  The map keeps that tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidInputError
from .kernels import as_energy


@lru_cache(maxsize=64)
def gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(m)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def composite_rule(edges, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre with ``m`` nodes on every panel between consecutive ``edges``."""
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    t, w = gauss_legendre(m)
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * t[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


@dataclass(frozen=True)
class GridConfig:
    """Knobs of the Nystrom discretisation.

    ``truncation_radius_factor`` sets x_max = factor / sqrt(|E|).  ``min_scale``
    (optional) is a length that the graded panels must resolve near the origin;
    it adds panels until the innermost one is below it.
    """

    n_nodes: int = 400
    truncation_radius_factor: float = 40.0
    transform: str = "sqrt_substitution"
    panels: int = 8
    min_scale: float | None = None

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 8:
            raise InvalidInputError(f"n_nodes must be an integer >= 8, got {self.n_nodes}")
        if not self.truncation_radius_factor >= 10:
            raise InvalidInputError("truncation_radius_factor must be >= 10")
        if self.transform not in ("sqrt_substitution", "identity"):
            raise InvalidInputError(f"unknown transform {self.transform!r}")
        if int(self.panels) != self.panels or self.panels < 1:
            raise InvalidInputError("panels must be a positive integer")
        if self.min_scale is not None and not self.min_scale > 0:
            raise InvalidInputError("min_scale must be positive")

    def replace(self, **changes) -> "GridConfig":
        fields = dict(
            n_nodes=self.n_nodes,
            truncation_radius_factor=self.truncation_radius_factor,
            transform=self.transform,
            panels=self.panels,
            min_scale=self.min_scale,
        )
        fields.update(changes)
        return GridConfig(**fields)

    @property
    def square_order(self) -> int:
        """Per-panel Gauss order used by ``square_integral``."""
        return int(min(24, max(8, self.n_nodes // 25)))


@dataclass(frozen=True, eq=False)
class Grid:
    """Nodes ``x`` on (0, x_max] with weights that already contain the Jacobian."""

    x: np.ndarray
    weights: np.ndarray
    x_max: float
    u: np.ndarray
    panel_edges: np.ndarray

    @property
    def n(self) -> int:
        return self.x.size

    def mirrored(self) -> "Grid":
        """Symmetric node set on (-x_max, x_max): negative half first, mirrored."""
        return Grid(
            x=np.concatenate([-self.x[::-1], self.x]),
            weights=np.concatenate([self.weights[::-1], self.weights]),
            x_max=self.x_max,
            u=np.concatenate([-self.u[::-1], self.u]),
            panel_edges=self.panel_edges,
        )


def panel_count(config: GridConfig, x_max: float) -> int:
    panels = config.panels
    if config.min_scale is not None and config.transform == "sqrt_substitution":
        # innermost edge sits at x_max * 4**-(panels-1); push it below min_scale / 4
        need = math.ceil(math.log(4 * x_max / config.min_scale, 4)) + 1
        panels = max(panels, need)
    return panels


def node_counts(n: int, panels: int) -> list[int]:
    """Nodes per panel, growing linearly outwards, summing to exactly ``n``."""
    share = np.arange(panels) + 2.0
    raw = n * share / share.sum()
    counts = np.maximum(np.floor(raw).astype(int), 1)
    order = np.argsort(-(raw - counts), kind="stable")
    short = n - int(counts.sum())
    for i in order[:max(short, 0)]:
        counts[i] += 1
    for i in order[::-1][:max(-short, 0)]:
        counts[i] -= 1
    return [int(c) for c in counts]


def build_grid(config: GridConfig, energy) -> Grid:
    """Composite Gauss-Legendre grid on (0, x_max] with x = u^2.

    Panel edges in u are sqrt(x_max) * 2**-j, so they are graded towards the
    origin where smeared potentials vary on the scale eps.  Outer panels are
    wider and get proportionally more nodes.
    """
    energy = as_energy(energy)
    x_max = config.truncation_radius_factor / energy.rate
    panels = panel_count(config, x_max)
    n = int(config.n_nodes)
    if n < panels:
        raise InvalidInputError(f"{n} nodes cannot fill {panels} panels")
    top = math.sqrt(x_max) if config.transform == "sqrt_substitution" else x_max
    edges = np.concatenate([[0.0], top * 2.0 ** -np.arange(panels - 1, -1, -1)])
    counts = node_counts(n, panels)
    nodes, weights = [], []
    for p, m in enumerate(counts):
        t, w = composite_rule(edges[p : p + 2], m)
        nodes.append(t)
        weights.append(w)
    u = np.concatenate(nodes)
    wu = np.concatenate(weights)
    if config.transform == "sqrt_substitution":
        x, w = u * u, 2.0 * u * wu
    else:
        x, w = u, wu
    return Grid(x=x, weights=w, x_max=x_max, u=u, panel_edges=edges)


# --- double integrals of squared kernels -----------------------------------

_TAIL_EDGES = np.array([0.0, 0.0625, 0.125, 0.25, 0.5, 1.0])
_DEPTH = 50


@lru_cache(maxsize=16)
def _unit_triangle_rule(order: int, depth: int = _DEPTH):
    """Fractions tau in (0, 1) graded geometrically towards both endpoints."""
    low = 2.0 ** -np.arange(depth, 0, -1)
    edges = np.concatenate([[0.0], low, 1.0 - low[::-1][1:], [1.0]])
    return composite_rule(edges, order)


def _outer_rule(length, order, split, radius, breaks, tiny):
    top = split * length if radius is None else radius
    lo = tiny * length
    count = max(1, math.ceil(math.log2(top / lo)))
    edges = [0.0, *(lo * 2.0 ** np.arange(count)), top]
    edges.extend(b for b in breaks if 0 < b < top)
    edges = np.unique(np.asarray(edges, dtype=float))
    edges = edges[np.concatenate([[True], np.diff(edges) > 1e-15 * top])]
    x, w = composite_rule(edges, order)
    if radius is None:
        # x = top / t^2 carries tails decaying like x^-2 or x^-3/2 onto smooth functions of t
        t, wt = composite_rule(_TAIL_EDGES, order)
        x = np.concatenate([x, top / t**2])
        w = np.concatenate([w, wt * 2.0 * top / t**3])
    return x, w


def square_integral(
    h,
    *,
    length: float = 1.0,
    order: int = 16,
    split: float = 40.0,
    radius: float | None = None,
    breaks=(),
    symmetric: bool = True,
    tiny: float = 1e-12,
    chunk: int = 64,
) -> float:
    """Integral of h(x, y)^2 over (0, R)^2, with R = ``radius`` or infinity.

    The square is folded onto the triangle y < x.  Each inner integral uses
    fractions of x graded towards y = 0 and y = x.  ``breaks`` are points where h
    has a kink away from the diagonal; panels are split there.  ``length`` is
    the natural length scale (1/sqrt|E|), and beyond ``split * length`` the
    outer variable is mapped to a finite interval.
    """
    x, wx = _outer_rule(length, order, split, radius, tuple(breaks), tiny)
    tau, wtau = _unit_triangle_rule(order)
    total = 0.0
    inner_breaks = np.asarray(sorted(breaks), dtype=float)
    for start in range(0, x.size, chunk):
        xs = x[start : start + chunk]
        ws = wx[start : start + chunk]
        if inner_breaks.size and np.any((inner_breaks[None, :] < xs[:, None])):
            total += sum(
                wi * _inner_with_breaks(h, xi, inner_breaks, order, symmetric)
                for xi, wi in zip(xs, ws)
            )
            continue
        X = xs[:, None]
        Y = X * tau[None, :]
        vals = np.square(h(X, Y))
        if symmetric:
            vals = 2.0 * vals
        else:
            vals = vals + np.square(h(Y, X))
        total += float(ws @ (vals @ wtau * xs))
    return total


def _inner_with_breaks(h, xi, breaks, order, symmetric):
    inside = breaks[(breaks > 0) & (breaks < xi)]
    if inside.size == 0:
        tau, wtau = _unit_triangle_rule(order)
        y, wy = xi * tau, xi * wtau
    else:
        pieces = np.concatenate([[0.0], inside, [xi]])
        ys, ws = [], []
        for a, b in zip(pieces[:-1], pieces[1:]):
            tau, wtau = _unit_triangle_rule(order, 40)
            ys.append(a + (b - a) * tau)
            ws.append((b - a) * wtau)
        y, wy = np.concatenate(ys), np.concatenate(ws)
    X = np.full_like(y, xi)
    vals = np.square(h(X, y))
    vals = 2.0 * vals if symmetric else vals + np.square(h(y, X))
    return float(vals @ wy)
