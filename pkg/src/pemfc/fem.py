"""Q1 finite element spaces, quadrature-point operators, assembly and linear solves.

Every form is assembled from sparse "evaluation" matrices that map DOF vectors to
values (``E``) or gradient components (``Gx``, ``Gy``) at quadrature points; a
bilinear form with weight ``c`` is then ``E_row.T @ diag(w * c) @ E_col``. Facet
forms use trace matrices built the same way from one chosen adjacent cell.
"""
from __future__ import annotations

import inspect
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import SUBDOMAINS, MultidomainMesh, quadrature_rule

log = logging.getLogger(__name__)

REF_NODES = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


class FemError(ValueError):
    pass


class SolverError(RuntimeError):
    def __init__(self, msg, residuals=()):
        super().__init__(msg)
        self.residuals = list(residuals)


def q1_basis(pts: np.ndarray):
    """Bilinear shape functions and reference gradients at points (n, 2)."""
    xi, eta = pts[:, 0:1], pts[:, 1:2]
    a, b = REF_NODES[:, 0], REF_NODES[:, 1]
    N = 0.25 * (1 + a * xi) * (1 + b * eta)
    dN = np.stack([0.25 * a * (1 + b * eta), 0.25 * b * (1 + a * xi)], axis=-1)
    return N, dN


def _as_tuple(subs):
    if subs is None:
        return None
    return (subs,) if isinstance(subs, str) else tuple(subs)


class DiscreteSpace:
    """Scalar Q1 space on a union of regions, optionally broken at region boundaries.

    ``pieces`` partitions ``subs``; nodes shared by two pieces get one DOF per piece,
    so the field may jump across the interface between them. ``dirichlet`` lists
    facet tags (or ``(tag, sub)`` pairs restricting to the piece containing ``sub``)
    on which the DOFs are constrained.
    """

    def __init__(self, mesh: MultidomainMesh, subs=SUBDOMAINS, pieces=None, dirichlet=(), name=""):
        self.mesh = mesh
        self.name = name
        self.subs = _as_tuple(subs)
        for s in self.subs:
            if s not in SUBDOMAINS:
                raise FemError(f"unknown subdomain {s!r}")
        self.pieces = [self.subs] if pieces is None else [_as_tuple(p) for p in pieces]
        flat = [s for p in self.pieces for s in p]
        if sorted(flat) != sorted(self.subs):
            raise FemError(f"pieces {self.pieces} do not partition {self.subs}")

        self.cells = mesh.cells_in(self.subs)
        self.cell_pos = np.full(mesh.n_cells, -1)
        self.cell_pos[self.cells] = np.arange(len(self.cells))

        node_dof = np.full((len(self.pieces), mesh.n_nodes), -1)
        dof_node, dof_piece = [], []
        for k, piece in enumerate(self.pieces):
            nodes = np.unique(mesh.cells[mesh.cells_in(piece)].ravel())
            node_dof[k, nodes] = np.arange(len(nodes)) + len(dof_node)
            dof_node += list(nodes)
            dof_piece += [k] * len(nodes)
        self.node_dof = node_dof
        self.dof_node = np.array(dof_node, dtype=np.int64)
        self.dof_piece = np.array(dof_piece, dtype=np.int64)
        self.n = len(self.dof_node)
        piece_of_sub = {s: k for k, p in enumerate(self.pieces) for s in p}
        self.piece_of_sub = piece_of_sub
        cell_piece = np.array([piece_of_sub[SUBDOMAINS[s]] for s in mesh.cell_sub[self.cells]], dtype=np.int64)
        self.cell_dofs = node_dof[cell_piece[:, None], mesh.cells[self.cells]]

        self.fixed = np.zeros(self.n, bool)
        self.dirichlet = tuple(dirichlet)
        for item in self.dirichlet:
            tag, side = (item, None) if isinstance(item, str) else item
            self.fixed[self.facet_dofs(mesh.facets(tag), side, strict=False).ravel()] = True
        self.fixed_dofs = np.flatnonzero(self.fixed)
        self.free_dofs = np.flatnonzero(~self.fixed)
        self._cache = {}

    # ------------------------------------------------------------------ dofs
    @property
    def coords(self) -> np.ndarray:
        return self.mesh.nodes[self.dof_node]

    def dof_sub_mask(self, subs) -> np.ndarray:
        """DOFs belonging to the pieces that contain any of ``subs``."""
        ks = {self.piece_of_sub[s] for s in _as_tuple(subs) if s in self.piece_of_sub}
        return np.isin(self.dof_piece, list(ks))

    def facet_dofs(self, facets: np.ndarray, side=None, strict=True) -> np.ndarray:
        """DOFs (nf, 2) of the facet traces taken from the adjacent cell in ``side`` regions.

        Facets without a suitable adjacent cell are dropped unless ``strict``.
        """
        cells, local, keep = self._facet_cells(facets, side, strict)
        pos = self.cell_pos[cells]
        return self.cell_dofs[pos[:, None], local]

    def _facet_cells(self, facets, side, strict):
        mesh = self.mesh
        allowed = self.subs if side is None else tuple(s for s in _as_tuple(side) if s in self.subs)
        idx = [SUBDOMAINS.index(s) for s in allowed]
        fc = mesh.facet_cells[facets]
        ok = (fc >= 0) & np.isin(mesh.cell_sub[np.maximum(fc, 0)], idx)
        # prefer the second cell (above / right) when both qualify
        pick = np.where(ok[:, 1], 1, 0)
        good = ok.any(axis=1)
        if strict and not good.all():
            raise FemError(f"facets without an adjacent cell in {allowed} for space {self.name!r}")
        facets_ok = np.flatnonzero(good)
        pick = pick[good]
        cells = fc[facets_ok, pick]
        local = mesh.facet_local[np.asarray(facets)[facets_ok], pick]
        return cells, local, facets_ok

    # ------------------------------------------------------------------ helpers
    def zeros(self) -> np.ndarray:
        return np.zeros(self.n)

    def interpolate(self, func) -> np.ndarray:
        """Nodal interpolant; ``func(x, y)`` or ``func(x, y, sub)`` for broken spaces."""
        xy = self.coords
        if len(inspect.signature(func).parameters) < 3:
            return np.asarray(func(xy[:, 0], xy[:, 1]), dtype=float) * np.ones(self.n)
        out = np.zeros(self.n)
        for k, piece in enumerate(self.pieces):
            m = self.dof_piece == k
            out[m] = func(xy[m, 0], xy[m, 1], piece[0])
        return out

    def volume(self, region=None, order: int = 2) -> "VolumeOps":
        region = self.subs if region is None else tuple(s for s in _as_tuple(region) if s in self.subs)
        key = ("vol", region, order)
        if key not in self._cache:
            self._cache[key] = VolumeOps(self, region, order)
        return self._cache[key]

    def facet(self, tags, side=None, order: int = 2) -> "FacetOps":
        key = ("fac", _as_tuple(tags), _as_tuple(side), order)
        if key not in self._cache:
            self._cache[key] = FacetOps(self, _as_tuple(tags), _as_tuple(side), order)
        return self._cache[key]


class VolumeOps:
    """Evaluation matrices at all quadrature points of the cells in ``region``."""

    def __init__(self, space: DiscreteSpace, region: tuple, order: int):
        mesh = space.mesh
        self.region = region
        (pts, wts), _ = quadrature_rule(order)
        N, dN = q1_basis(pts)
        cells = mesh.cells_in(region) if region else np.array([], dtype=np.int64)
        self.cells = cells
        nq, nc = len(wts), len(cells)
        self.nq = nq
        hx, hy = mesh.cell_hx[cells], mesh.cell_hy[cells]
        x0, y0 = mesh.cell_x0[cells], mesh.cell_y0[cells]
        self.x = (x0[:, None] + 0.5 * hx[:, None] * (pts[None, :, 0] + 1)).ravel()
        self.y = (y0[:, None] + 0.5 * hy[:, None] * (pts[None, :, 1] + 1)).ravel()
        self.w = (0.25 * hx * hy)[:, None] * wts[None, :]
        self.w = self.w.ravel()
        dofs = space.cell_dofs[space.cell_pos[cells]]  # (nc, 4)
        rows = np.repeat(np.arange(nc * nq), 4)
        cols = np.repeat(dofs, nq, axis=0).ravel()
        shape = (nc * nq, space.n)
        self.E = sp.csr_matrix((np.tile(N, (nc, 1)).ravel(), (rows, cols)), shape=shape)
        gx = (dN[None, :, :, 0] * (2.0 / hx)[:, None, None]).reshape(nc * nq, 4)
        gy = (dN[None, :, :, 1] * (2.0 / hy)[:, None, None]).reshape(nc * nq, 4)
        self.Gx = sp.csr_matrix((gx.ravel(), (rows, cols)), shape=shape)
        self.Gy = sp.csr_matrix((gy.ravel(), (rows, cols)), shape=shape)
        self.cell_of_q = np.repeat(cells, nq)

    @property
    def n_points(self) -> int:
        return len(self.w)

    def coef(self, c) -> np.ndarray:
        """Broadcast a scalar, callable ``c(x, y)`` or per-point array to the points."""
        if callable(c):
            c = c(self.x, self.y)
        return np.broadcast_to(np.asarray(c, dtype=float), self.w.shape)

    def value(self, u):
        return self.E @ u

    def grad(self, u):
        return self.Gx @ u, self.Gy @ u

    def integrate(self, f) -> float:
        return float(self.w @ self.coef(f))


class FacetOps:
    """Trace evaluation matrix at facet quadrature points.

    The trace is taken from the adjacent cell lying in ``side`` (default: any
    cell of the space, preferring the upper/right one). An explicit ``side``
    also restricts the facets to those bordering it.
    """

    def __init__(self, space: DiscreteSpace, tags: tuple, side, order: int):
        mesh = space.mesh
        _, (g, wg) = quadrature_rule(order)
        facets = mesh.facets(tags)
        cells, local, ok = space._facet_cells(facets, side, strict=not side)
        facets = facets[ok]
        self.facets = facets
        nf, nq = len(facets), len(g)
        self.nq = nq
        p0 = mesh.nodes[mesh.facet_nodes[facets, 0]]
        p1 = mesh.nodes[mesh.facet_nodes[facets, 1]]
        t = 0.5 * (g + 1)
        self.x = (p0[:, None, 0] + t[None, :] * (p1[:, None, 0] - p0[:, None, 0])).ravel()
        self.y = (p0[:, None, 1] + t[None, :] * (p1[:, None, 1] - p0[:, None, 1])).ravel()
        self.w = (0.5 * mesh.facet_length[facets][:, None] * wg[None, :]).ravel()
        dofs = space.cell_dofs[space.cell_pos[cells][:, None], local]  # (nf, 2)
        vals = np.stack([1 - t, t], axis=-1)  # (nq, 2)
        rows = np.repeat(np.arange(nf * nq), 2)
        cols = np.repeat(dofs, nq, axis=0).ravel()
        self.T = sp.csr_matrix((np.tile(vals, (nf, 1)).ravel(), (rows, cols)), shape=(nf * nq, space.n))
        self.vertical = mesh.facet_vertical[facets]
        self.facet_of_q = np.repeat(facets, nq)

    def coef(self, c) -> np.ndarray:
        if callable(c):
            c = c(self.x, self.y)
        return np.broadcast_to(np.asarray(c, dtype=float), self.w.shape)

    def value(self, u):
        return self.T @ u

    def integrate(self, f) -> float:
        return float(self.w @ self.coef(f))


class VectorSpace:
    """Stack of scalar component spaces sharing a mesh; DOFs are concatenated."""

    def __init__(self, components: list[DiscreteSpace]):
        self.components = list(components)
        self.offsets = np.concatenate([[0], np.cumsum([c.n for c in self.components])])
        self.n = int(self.offsets[-1])
        self.mesh = self.components[0].mesh
        self.fixed = np.concatenate([c.fixed for c in self.components])
        self.free_dofs = np.flatnonzero(~self.fixed)
        self.fixed_dofs = np.flatnonzero(self.fixed)

    def split(self, u):
        return [u[self.offsets[k]:self.offsets[k + 1]] for k in range(len(self.components))]

    def join(self, parts):
        return np.concatenate(parts)

    def zeros(self):
        return np.zeros(self.n)


# ---------------------------------------------------------------------- assembly
def weighted(A: sp.spmatrix, w: np.ndarray, B: sp.spmatrix) -> sp.csr_matrix:
    """``A.T @ diag(w) @ B`` as CSR."""
    return (A.T @ sp.diags(w) @ B).tocsr()


def _ops(row: DiscreteSpace, col: DiscreteSpace, region, order):
    vr = row.volume(region, order)
    vc = col.volume(region, order)
    if not np.array_equal(vr.cells, vc.cells):
        raise FemError("row and column spaces do not share the integration cells")
    return vr, vc


FORMS = ("stiffness", "mass", "symgrad", "div", "advection", "boundary_mass", "interface_pressure", "facet_source")


def assemble_form(kind: str, row, col=None, coef=1.0, region=None, tags=None, side=None,
                  col_side=None, velocity=None, order: int = 2, adjoint: bool = False):
    """Assemble one of the bilinear forms listed in ``FORMS``.

    * ``stiffness``: ∫ c ∇u·∇v; ``mass``: ∫ c u v (scalar spaces)
    * ``symgrad``: ∫ c Du:Dv; ``div``: ∫ c (∇·u)(∇·v) (2-component ``VectorSpace``)
    * ``advection``: ∫ c u (w·∇v) with ``velocity`` = (wx, wy) at quadrature points
    * ``boundary_mass``: ∫_F c u v on facets ``tags`` (traces from ``side`` / ``col_side``)
    * ``interface_pressure``: ∫_F c p (v·n) with row a ``VectorSpace``, col scalar;
      ``coef`` carries n_x on vertical facets
    * ``facet_source``: returns the load vector ∫_F c v (``col`` unused)

    ``adjoint=True`` assembles the form with the roles of trial and test swapped,
    which equals the transpose.
    """
    if kind not in FORMS:
        raise FemError(f"unknown form {kind!r}; expected one of {FORMS}")
    col = row if col is None else col
    if adjoint:
        A = assemble_form(kind, row, col, coef, region, tags, side, col_side, velocity, order)
        return A.T.tocsr()
    if row.mesh is not col.mesh:
        raise FemError("spaces live on different meshes")

    if kind in ("stiffness", "mass", "advection"):
        vr, vc = _ops(row, col, region, order)
        w = vr.w * vr.coef(coef)
        if kind == "stiffness":
            return weighted(vr.Gx, w, vc.Gx) + weighted(vr.Gy, w, vc.Gy)
        if kind == "mass":
            return weighted(vr.E, w, vc.E)
        wx, wy = velocity
        return weighted(vr.Gx, w * wx, vc.E) + weighted(vr.Gy, w * wy, vc.E)

    if kind in ("symgrad", "div"):
        if not isinstance(row, VectorSpace) or len(row.components) != 2:
            raise FemError(f"{kind} needs a 2-component vector space")
        ops = [c.volume(region, order) for c in row.components]
        w = ops[0].w * ops[0].coef(coef)
        g = [(o.Gx, o.Gy) for o in ops]
        blocks = [[None, None], [None, None]]
        for a in range(2):
            for b in range(2):
                if kind == "div":
                    blocks[a][b] = weighted(g[a][a], w, g[b][b])
                else:
                    M = weighted(g[a][b], 0.5 * w, g[b][a])
                    if a == b:
                        M = M + 0.5 * (weighted(g[a][0], w, g[b][0]) + weighted(g[a][1], w, g[b][1]))
                    blocks[a][b] = M
        return sp.bmat(blocks, format="csr")

    if kind == "boundary_mass":
        fr = row.facet(tags, side, order)
        fc = col.facet(tags, side if col_side is None else col_side, order)
        if not np.array_equal(fr.facets, fc.facets):
            raise FemError("row and column facet sets differ")
        return weighted(fr.T, fr.w * fr.coef(coef), fc.T)

    if kind == "interface_pressure":
        if not isinstance(row, VectorSpace):
            raise FemError("interface_pressure needs a vector test space")
        f0 = row.components[0].facet(tags, side, order)
        fp = col.facet(tags, col_side, order)
        if not np.array_equal(f0.facets, fp.facets):
            raise FemError("row and column facet sets differ")
        w = f0.w * f0.coef(coef)
        B0 = weighted(f0.T, w * np.repeat(f0.vertical, f0.nq), fp.T)
        f1 = row.components[1].facet(tags, side, order)
        B1 = weighted(f1.T, w * np.repeat(~f1.vertical, f1.nq), fp.T)
        return sp.vstack([B0, B1]).tocsr()

    # facet_source
    fr = row.facet(tags, side, order)
    return fr.T.T @ (fr.w * fr.coef(coef))


def load_vector(space: DiscreteSpace, f=None, gx=None, gy=None, region=None, order: int = 2) -> np.ndarray:
    """∫ f v + ∫ (gx, gy)·∇v over ``region``."""
    vo = space.volume(region, order)
    b = np.zeros(space.n)
    if f is not None:
        b += vo.E.T @ (vo.w * vo.coef(f))
    if gx is not None:
        b += vo.Gx.T @ (vo.w * vo.coef(gx))
    if gy is not None:
        b += vo.Gy.T @ (vo.w * vo.coef(gy))
    return b


# ---------------------------------------------------------------------- norms
def l2_norm(space: DiscreteSpace, u, region=None, order: int = 3) -> float:
    vo = space.volume(region, order)
    return float(np.sqrt(vo.w @ (vo.E @ u) ** 2))


def lp_norm(space: DiscreteSpace, u, p: float, region=None, order: int = 5) -> float:
    vo = space.volume(region, order)
    return float((vo.w @ np.abs(vo.E @ u) ** p) ** (1.0 / p))


def grad_norm(space: DiscreteSpace, u, region=None, order: int = 2, p: float = 2.0) -> float:
    vo = space.volume(region, order)
    gx, gy = vo.grad(u)
    m = np.sqrt(gx**2 + gy**2)
    return float((vo.w @ m**p) ** (1.0 / p))


def facet_l2_norm(space: DiscreteSpace, u, tags, side=None, order: int = 3) -> float:
    fo = space.facet(tags, side, order)
    return float(np.sqrt(fo.w @ (fo.T @ u) ** 2))


# ---------------------------------------------------------------------- solves
def dirichlet_solve(A, b, free, fixed_values=None, solver: "ReusableSolver | None" = None, coords=None, **kw):
    """Solve ``A x = b`` on the ``free`` DOFs with the rest set to ``fixed_values``.

    With ``solver`` the free block goes through that reusable solver (``coords`` are
    the DOF positions of the full system, used for the fill-reducing ordering).
    """
    n = A.shape[0]
    x = np.zeros(n) if fixed_values is None else np.array(fixed_values, dtype=float)
    fixed = np.setdiff1d(np.arange(n), free)
    rhs = b[free] - A[free][:, fixed] @ x[fixed]
    if solver is not None:
        x[free] = solver.solve(A[free][:, free], rhs, None if coords is None else np.asarray(coords)[free])
    else:
        x[free] = solve_linear(A[free][:, free], rhs, **kw)
    return x


def nested_dissection(coords, leaf: int = 64) -> np.ndarray:
    """Fill-reducing order for DOFs on a structured grid.

    Recursively splits along the longer extent at the median grid line; that line
    is a separator for Q1 couplings and is numbered after both halves.
    """
    xy = np.asarray(coords, dtype=float)
    out = []

    def rec(idx):
        if len(idx) <= leaf:
            out.append(idx)
            return
        pts = xy[idx]
        ax = int(np.argmax(pts.max(axis=0) - pts.min(axis=0)))
        vals = np.unique(pts[:, ax])
        if len(vals) < 3:
            out.append(idx)
            return
        cut = vals[len(vals) // 2]
        c = pts[:, ax]
        rec(idx[c < cut])
        rec(idx[c > cut])
        out.append(idx[c == cut])

    rec(np.arange(len(xy)))
    return np.concatenate(out) if out else np.zeros(0, dtype=int)


class Factorization:
    """Sparse LU of ``A`` in an optional symmetric ordering ``perm``."""

    def __init__(self, A, perm=None):
        A = sp.csc_matrix(A)
        self.shape = A.shape
        self.perm = None if perm is None else np.asarray(perm)
        try:
            if self.perm is None:
                self.lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A")
            else:
                self.lu = spla.splu(A[self.perm][:, self.perm].tocsc(), permc_spec="NATURAL")
        except RuntimeError as exc:  # exactly singular factor
            raise SolverError(f"sparse LU failed: {exc}") from exc

    def solve(self, b):
        if self.perm is None:
            return self.lu.solve(b)
        x = np.empty_like(b, dtype=float)
        x[self.perm] = self.lu.solve(np.asarray(b, dtype=float)[self.perm])
        return x

    def operator(self):
        return spla.LinearOperator(self.shape, self.solve)


REFINE_STEPS = 3
LU_GMRES_RESTARTS = 3


def solve_linear(A, b, method: str = "direct", tol: float = 1e-10, gauge=None, maxiter: int = 2000):
    """Solve a sparse linear system.

    ``method`` is ``"direct"`` (sparse LU with a few steps of iterative refinement,
    then LU-preconditioned GMRES if the residual is still above ``tol``) or
    ``"gmres"`` (restarted GMRES with an incomplete-LU preconditioner). ``gauge`` is a weight vector ``c`` for systems
    whose kernel is the constants: the solve is done on the bordered system with
    the constraint ``c·x = 0`` and the result is returned in that gauge.
    """
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise FemError(f"incompatible system shapes {A.shape} and {b.shape}")
    if tol <= 0:
        raise FemError("tol must be positive")
    n = A.shape[0]
    if n == 0:
        return np.zeros(0)
    if gauge is not None:
        c = np.asarray(gauge, dtype=float)
        Ab = sp.bmat([[A, sp.csr_matrix(c[:, None])], [sp.csr_matrix(c[None, :]), None]], format="csc")
        xb = solve_linear(Ab, np.append(b, 0.0), method, tol, None, maxiter)
        x = xb[:n]
        return x - (c @ x) / c.sum() if c.sum() != 0 else x

    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros(n)
    history = []
    if method == "direct":
        return _direct(A, b, Factorization(A), tol, maxiter, history)
    if method == "gmres":
        return _gmres(A, b, tol, maxiter, None, history)
    raise FemError(f"unknown solver method {method!r}")


def _direct(A, b, fac: Factorization, tol, maxiter, history):
    bnorm = np.linalg.norm(b)
    x = fac.solve(b)
    floor = max(tol, 1e3 * np.finfo(float).eps * _cond_hint(A))
    for _ in range(REFINE_STEPS):
        if not np.all(np.isfinite(x)):
            break
        r = b - A @ x
        res = np.linalg.norm(r) / bnorm
        history.append(res)
        if res <= floor:
            return x
        x = x + fac.solve(r)
    log.info("direct solve residual %.2e above tol, continuing with gmres", history[-1] if history else np.nan)
    x0 = x if np.all(np.isfinite(x)) else None
    # with an exact factor as preconditioner GMRES converges in a few steps or not at all
    return _gmres(A, b, tol, min(maxiter, LU_GMRES_RESTARTS), x0, history, fac.operator())


class ReusableSolver:
    """Direct solves of a sequence of nearby matrices sharing one sparsity pattern.

    The last factorization is kept. A new matrix is first solved by GMRES
    preconditioned with that stale factor; if this needs more than ``max_krylov``
    iterations the matrix is refactored. ``coords`` passed to :meth:`solve` select
    the nested-dissection ordering.
    """

    def __init__(self, tol: float = 1e-11, max_krylov: int = 30, maxiter: int = 2000):
        self.tol, self.max_krylov, self.maxiter = tol, max_krylov, maxiter
        self.factor: Factorization | None = None
        self.n_factor = 0
        self.n_reuse = 0

    def solve(self, A, b, coords=None):
        A = sp.csr_matrix(A)
        b = np.asarray(b, dtype=float)
        bnorm = np.linalg.norm(b)
        if bnorm == 0:
            return np.zeros(A.shape[0])
        if self.factor is not None and self.factor.shape == A.shape:
            x, info = spla.gmres(A, b, rtol=self.tol, atol=0.0, restart=self.max_krylov, maxiter=1,
                                 M=self.factor.operator())
            if np.all(np.isfinite(x)) and np.linalg.norm(A @ x - b) <= self.tol * bnorm:
                self.n_reuse += 1
                return x
        perm = None if coords is None else nested_dissection(coords)
        self.factor = Factorization(A, perm)
        self.n_factor += 1
        return _direct(A, b, self.factor, self.tol, self.maxiter, [])


def _cond_hint(A) -> float:
    d = np.abs(A.diagonal())
    d = d[d > 0]
    return float(d.max() / d.min()) if len(d) else 1.0


def _gmres(A, b, tol, maxiter, x0, history, M=None):
    if M is None:
        try:
            ilu = spla.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=20)
            M = spla.LinearOperator(A.shape, ilu.solve)
        except RuntimeError:
            M = None
    bnorm = np.linalg.norm(b)

    def cb(r):
        history.append(float(r))

    x, info = spla.gmres(A, b, x0=x0, rtol=tol, atol=0.0, restart=100, maxiter=maxiter, M=M,
                         callback=cb, callback_type="pr_norm")
    res = np.linalg.norm(A @ x - b) / bnorm
    if info != 0 or not np.isfinite(res) or res > 10 * tol:
        raise SolverError(f"gmres did not converge (info={info}, residual={res:.3e})", history)
    return x
