"""Rectangular five-region cell geometry, structured Q1 mesh and quadrature.

The cell occupies ``[0, W] x [0, L]`` with the regions stacked along x:

    fuel | a (anode GDL) | m (membrane) | c (cathode GDL) | air

Inlets sit at ``y = 0`` and outlets at ``y = L`` of the two channels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SUBDOMAINS = ("fuel", "a", "m", "c", "air")
FLUID = ("fuel", "air")
POROUS = ("a", "m", "c")
GDL = ("a", "c")

# outer boundary tags
IN_A, IN_C, OUT_A, OUT_C, WALL, CC_A, CC_C = "in_a", "in_c", "out_a", "out_c", "w", "cc_a", "cc_c"
# interface tags
GAMMA, GAMMA_A, GAMMA_C, INTERIOR = "gamma", "gamma_a", "gamma_c", "interior"

INLET = (IN_A, IN_C)
OUTLET = (OUT_A, OUT_C)
WALL_TAGS = (WALL, CC_A, CC_C)
CC_TAGS = (CC_A, CC_C)
OUTER_TAGS = INLET + OUTLET + WALL_TAGS
FACET_TAGS = OUTER_TAGS + (GAMMA, GAMMA_A, GAMMA_C, INTERIOR)


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class CurrentCollector:
    """Placement of the current collector on the GDL walls.

    ``ends`` selects the wall edges (``"bottom"`` is y=0, ``"top"`` is y=L) and
    ``span`` the sub-interval of the GDL width, as fractions in [0, 1].
    """

    ends: tuple[str, ...] = ("bottom", "top")
    span: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if not self.ends or any(e not in ("bottom", "top") for e in self.ends):
            raise GeometryError(f"current collector ends must be bottom/top, got {self.ends}")
        lo, hi = self.span
        if not 0.0 <= lo < hi <= 1.0:
            raise GeometryError(f"current collector span must satisfy 0 <= lo < hi <= 1, got {self.span}")


@dataclass(frozen=True)
class GeometrySpec:
    l_f: float
    l_a: float
    l_m: float
    l_c: float
    L: float
    collector: CurrentCollector = field(default_factory=CurrentCollector)

    def __post_init__(self):
        for name in ("l_f", "l_a", "l_m", "l_c", "L"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise GeometryError(f"{name} must be a positive length, got {v}")

    @property
    def width(self) -> float:
        return 2 * self.l_f + self.l_a + self.l_m + self.l_c

    def widths(self) -> dict[str, float]:
        return {"fuel": self.l_f, "a": self.l_a, "m": self.l_m, "c": self.l_c, "air": self.l_f}

    def x_breaks(self) -> np.ndarray:
        """Region boundaries along x, 6 values from 0 to W."""
        return np.concatenate([[0.0], np.cumsum([self.widths()[s] for s in SUBDOMAINS])])

    def interval(self, sub: str) -> tuple[float, float]:
        b = self.x_breaks()
        k = SUBDOMAINS.index(sub)
        return float(b[k]), float(b[k + 1])


@dataclass(frozen=True)
class Resolution:
    """Cells across each region (x) and along the channel (y)."""

    fuel: int
    a: int
    m: int
    c: int
    air: int
    ny: int

    def __post_init__(self):
        for name in SUBDOMAINS + ("ny",):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise GeometryError(f"resolution {name} must be a positive integer, got {v}")

    @classmethod
    def uniform(cls, nx: int, ny: int, porous: int | None = None) -> "Resolution":
        p = nx if porous is None else porous
        return cls(nx, p, p, p, nx, ny)

    def nx(self, sub: str) -> int:
        return getattr(self, sub)

    def refined(self, factor: int = 2) -> "Resolution":
        return Resolution(*(factor * getattr(self, s) for s in SUBDOMAINS + ("ny",)))


# local node pairs of the four cell edges (ccw numbering 0..3 from the lower-left corner)
_BOTTOM, _RIGHT, _TOP, _LEFT = (0, 1), (1, 2), (3, 2), (0, 3)


class MultidomainMesh:
    """Conforming tensor-product quad mesh of the five regions.

    Node ``(i, j)`` has id ``j * (nxg + 1) + i``. Cells are numbered the same
    way with ``nxg`` columns. Facet arrays:

    * ``facet_nodes``  (nf, 2): (left, right) for horizontal, (bottom, top) for vertical facets
    * ``facet_cells``  (nf, 2): (below, above) or (left, right) cell, -1 outside
    * ``facet_local``  (nf, 2, 2): local node indices of the facet in each adjacent cell
    * ``facet_tag``    (nf,): one of ``FACET_TAGS``
    """

    def __init__(self, spec: GeometrySpec, resolution: Resolution):
        self.spec = spec
        self.resolution = resolution
        breaks = spec.x_breaks()
        xs, col_sub = [np.array([0.0])], []
        for k, sub in enumerate(SUBDOMAINS):
            n = resolution.nx(sub)
            seg = np.linspace(breaks[k], breaks[k + 1], n + 1)[1:]
            seg[-1] = breaks[k + 1]
            xs.append(seg)
            col_sub += [k] * n
        self.x = np.concatenate(xs)
        self.y = np.linspace(0.0, spec.L, resolution.ny + 1)
        self.y[-1] = spec.L
        self.col_sub = np.array(col_sub)
        self.nxg = len(self.x) - 1
        self.ny = resolution.ny
        nx1 = self.nxg + 1

        X, Y = np.meshgrid(self.x, self.y)
        self.nodes = np.column_stack([X.ravel(), Y.ravel()])

        I, J = np.meshgrid(np.arange(self.nxg), np.arange(self.ny))
        I, J = I.ravel(), J.ravel()
        n0 = J * nx1 + I
        self.cells = np.column_stack([n0, n0 + 1, n0 + 1 + nx1, n0 + nx1])
        self.cell_ij = np.column_stack([I, J])
        self.cell_sub = self.col_sub[I]
        self.cell_x0 = self.x[I]
        self.cell_y0 = self.y[J]
        self.cell_hx = np.diff(self.x)[I]
        self.cell_hy = np.diff(self.y)[J]
        self._build_facets()

    # ------------------------------------------------------------------ facets
    def _cell_id(self, i, j):
        return j * self.nxg + i

    def _build_facets(self):
        nx1, nxg, ny = self.nxg + 1, self.nxg, self.ny
        spec = self.spec
        nodes, cells, local, tags = [], [], [], []

        def sub_of_col(i):
            return SUBDOMAINS[self.col_sub[i]]

        def wall_tag(i, end):
            sub = sub_of_col(i)
            if sub in GDL:
                cc = spec.collector
                x0, x1 = spec.interval(sub)
                xm = 0.5 * (self.x[i] + self.x[i + 1])
                lo, hi = x0 + cc.span[0] * (x1 - x0), x0 + cc.span[1] * (x1 - x0)
                if end in cc.ends and lo - 1e-14 * spec.width <= xm <= hi + 1e-14 * spec.width:
                    return CC_A if sub == "a" else CC_C
            return WALL

        # horizontal facets
        for j in range(ny + 1):
            for i in range(nxg):
                n0 = j * nx1 + i
                nodes.append((n0, n0 + 1))
                below = self._cell_id(i, j - 1) if j > 0 else -1
                above = self._cell_id(i, j) if j < ny else -1
                cells.append((below, above))
                local.append((_TOP, _BOTTOM))
                sub = sub_of_col(i)
                if j == 0:
                    tags.append({"fuel": IN_A, "air": IN_C}.get(sub) or wall_tag(i, "bottom"))
                elif j == ny:
                    tags.append({"fuel": OUT_A, "air": OUT_C}.get(sub) or wall_tag(i, "top"))
                else:
                    tags.append(INTERIOR)
        # vertical facets
        iface = {("fuel", "a"): GAMMA, ("c", "air"): GAMMA, ("a", "m"): GAMMA_A, ("m", "c"): GAMMA_C}
        for j in range(ny):
            for i in range(nxg + 1):
                n0 = j * nx1 + i
                nodes.append((n0, n0 + nx1))
                left = self._cell_id(i - 1, j) if i > 0 else -1
                right = self._cell_id(i, j) if i < nxg else -1
                cells.append((left, right))
                local.append((_RIGHT, _LEFT))
                if i == 0 or i == nxg:
                    tags.append(WALL)
                else:
                    tags.append(iface.get((sub_of_col(i - 1), sub_of_col(i)), INTERIOR))

        self.facet_nodes = np.array(nodes, dtype=np.int64)
        self.facet_cells = np.array(cells, dtype=np.int64)
        self.facet_local = np.array(local, dtype=np.int64)
        self.facet_tag = np.array(tags)
        n_h = (ny + 1) * nxg
        self.facet_vertical = np.arange(len(tags)) >= n_h
        p = self.nodes[self.facet_nodes]
        self.facet_length = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)

    # ------------------------------------------------------------------ queries
    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cells_in(self, subs) -> np.ndarray:
        subs = (subs,) if isinstance(subs, str) else tuple(subs)
        idx = [SUBDOMAINS.index(s) for s in subs]
        return np.flatnonzero(np.isin(self.cell_sub, idx))

    def facets(self, tags) -> np.ndarray:
        tags = (tags,) if isinstance(tags, str) else tuple(tags)
        return np.flatnonzero(np.isin(self.facet_tag, tags))

    def facet_side(self, facets: np.ndarray, subs) -> np.ndarray:
        """Index (0 or 1) of the adjacent cell lying in ``subs`` for each facet."""
        subs = (subs,) if isinstance(subs, str) else tuple(subs)
        idx = [SUBDOMAINS.index(s) for s in subs]
        side = np.full(len(facets), -1)
        for s in (1, 0):
            c = self.facet_cells[facets, s]
            ok = (c >= 0) & np.isin(self.cell_sub[np.maximum(c, 0)], idx)
            side[ok] = s
        if np.any(side < 0):
            raise GeometryError(f"some facets do not touch region(s) {subs}")
        return side

    def measure(self, tags) -> float:
        return float(self.facet_length[self.facets(tags)].sum())

    def area(self, subs=SUBDOMAINS) -> float:
        c = self.cells_in(subs)
        return float(np.sum(self.cell_hx[c] * self.cell_hy[c]))

    def nodes_on(self, tags) -> np.ndarray:
        return np.unique(self.facet_nodes[self.facets(tags)])

    @cached_property
    def node_sub_mask(self) -> dict[str, np.ndarray]:
        """Nodes touched by cells of each region."""
        out = {}
        for k, s in enumerate(SUBDOMAINS):
            m = np.zeros(self.n_nodes, bool)
            m[self.cells[self.cell_sub == k].ravel()] = True
            out[s] = m
        return out


def build_mesh(spec: GeometrySpec, resolution: Resolution) -> MultidomainMesh:
    return MultidomainMesh(spec, resolution)


class QuadratureError(ValueError):
    pass


def quadrature_rule(order: int):
    """Tensor Gauss rule exact for polynomials of the given degree per direction.

    Returns ``(points, weights)`` on ``[-1, 1]^2`` and ``(points, weights)`` on ``[-1, 1]``.
    """
    if int(order) != order or not 1 <= order <= 5:
        raise QuadratureError(f"quadrature order must be in 1..5, got {order}")
    n = (int(order) + 2) // 2
    g, w = np.polynomial.legendre.leggauss(n)
    P, Q = np.meshgrid(g, g)
    W = np.outer(w, w)
    pts2 = np.column_stack([P.ravel(), Q.ravel()])
    return (pts2, W.ravel()), (g, w)
