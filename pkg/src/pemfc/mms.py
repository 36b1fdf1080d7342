"""Manufactured-solution convergence checks for the four decoupled linear blocks.

Each block uses the same forms as the coupled solvers. The load is the weak form
applied to a smooth exact field (values and exact gradients at the quadrature
points), and Dirichlet DOFs take the nodal values of the exact field, so the
discrete solution is the Galerkin approximation of that field. L² errors are
computed against the exact field with a three-point Gauss rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fem import DiscreteSpace, VectorSpace, assemble_form, dirichlet_solve
from .geometry import (CC_TAGS, FLUID, GAMMA, GAMMA_A, GAMMA_C, INLET, OUTLET, POROUS, SUBDOMAINS, WALL,
                       WALL_TAGS, GeometrySpec, Resolution, build_mesh)

ERR_ORDER = 5
FIELDS = ("flow_u", "flow_p", "species", "heat", "potential")


@dataclass(frozen=True)
class Smooth:
    """Scalar field with its gradient; callables of (x, y)."""

    f: object
    fx: object
    fy: object


def _trig(a, b, c, d=0.0, s=1.0):
    """s (sin(a x + d) cos(b y) + c)."""
    return Smooth(lambda x, y: s * (np.sin(a * x + d) * np.cos(b * y) + c),
                  lambda x, y: s * a * np.cos(a * x + d) * np.cos(b * y),
                  lambda x, y: -s * b * np.sin(a * x + d) * np.sin(b * y))


UX, UY = _trig(2.0, 1.5, 0.3), _trig(1.2, 2.5, 0.5, 0.4)
P_EXACT = _trig(1.7, 1.1, 0.2, 0.3)
RHO = _trig(2.2, 1.9, 0.1, 0.2)
THETA = _trig(1.4, 2.1, 1.0, 0.1)
PHI = {"a": _trig(3.0, 1.3, 0.1), "m": _trig(2.0, 2.0, -0.2, 0.5), "c": _trig(2.5, 1.7, 0.6, 1.0)}


def _coef_mu(x, y):
    return 1.0 + 0.2 * np.sin(x + y)


def _coef_D(x, y):
    return 2.0 + 0.5 * np.cos(x) * np.sin(y)


def _velocity(x, y):
    return 0.3 * np.sin(np.pi * y), 0.5 + 0.2 * np.cos(x)


def _err(space: DiscreteSpace, uh, exact: Smooth, region=None) -> float:
    vo = space.volume(region, ERR_ORDER)
    return float(np.sqrt(vo.w @ (vo.E @ uh - exact.f(vo.x, vo.y)) ** 2))


def _apply_stiff(space, exact: Smooth, coef=None, region=None):
    vo = space.volume(region, 2)
    c = 1.0 if coef is None else coef(vo.x, vo.y)
    return vo.Gx.T @ (vo.w * c * exact.fx(vo.x, vo.y)) + vo.Gy.T @ (vo.w * c * exact.fy(vo.x, vo.y))


def _apply_facet(space, exact_vals, tags, side, coef=1.0):
    fo = space.facet(tags, side, 3)
    return fo.T.T @ (fo.w * coef * exact_vals(fo.x, fo.y))


def flow_block(geo: GeometrySpec, res: Resolution, beta: float = 1.5, lam: float = 0.3, K: float = 0.8) -> dict:
    """Stokes-Darcy with slip on Γ; returns L² errors of u on Ω_f and p on Ω_p."""
    mesh = build_mesh(geo, res)
    cx = DiscreteSpace(mesh, FLUID, dirichlet=INLET + OUTLET + (WALL,), name="ux")
    cy = DiscreteSpace(mesh, FLUID, dirichlet=INLET + OUTLET, name="uy")
    Vf = VectorSpace([cx, cy])
    Hp = DiscreteSpace(mesh, POROUS, name="p")
    xm = 0.5 * geo.width
    nx = lambda x, y: np.where(np.asarray(x) < xm, 1.0, -1.0)

    ox = cx.volume(FLUID, 2)
    mu = _coef_mu(ox.x, ox.y)
    A_uu = (assemble_form("symgrad", Vf, coef=mu, region=FLUID) + assemble_form("div", Vf, coef=lam, region=FLUID)
            + sp.block_diag([sp.csr_matrix((cx.n, cx.n)), assemble_form("boundary_mass", cy, coef=beta, tags=GAMMA,
                                                                           side=FLUID)]))
    B = assemble_form("interface_pressure", Vf, Hp, coef=nx, tags=GAMMA, side=FLUID, col_side=POROUS)
    A_pp = assemble_form("stiffness", Hp, coef=K)
    A = sp.bmat([[A_uu, B], [-B.T, A_pp]], format="csr")

    X, Y = ox.x, ox.y
    d11, d22 = UX.fx(X, Y), UY.fy(X, Y)
    d12 = 0.5 * (UX.fy(X, Y) + UY.fx(X, Y))
    dv = d11 + d22
    w = ox.w
    bx = ox.Gx.T @ (w * (mu * d11 + lam * dv)) + ox.Gy.T @ (w * mu * d12)
    by = ox.Gx.T @ (w * mu * d12) + ox.Gy.T @ (w * (mu * d22 + lam * dv))
    by = by + _apply_facet(cy, UY.f, GAMMA, FLUID, beta)
    bx = bx + _apply_facet(cx, lambda x, y: nx(x, y) * P_EXACT.f(x, y), GAMMA, FLUID)
    bp = _apply_stiff(Hp, P_EXACT, lambda x, y: K) - _apply_facet(Hp, lambda x, y: nx(x, y) * UX.f(x, y), GAMMA,
                                                                   POROUS)
    b = np.concatenate([bx, by, bp])
    x0 = np.concatenate([cx.interpolate(UX.f), cy.interpolate(UY.f), np.zeros(Hp.n)])
    free = np.concatenate([Vf.free_dofs, Vf.n + np.arange(Hp.n)])
    x = dirichlet_solve(A, b, free, fixed_values=x0)
    uh_x, uh_y, ph = x[:cx.n], x[cx.n:Vf.n], x[Vf.n:]
    eu = math.hypot(_err(cx, uh_x, UX, FLUID), _err(cy, uh_y, UY, FLUID))
    return {"flow_u": eu, "flow_p": _err(Hp, ph, P_EXACT)}


def species_block(geo: GeometrySpec, res: Resolution) -> dict:
    """Advection on the channels plus diffusion everywhere, zero data on inlets and outlets replaced by exact values."""
    mesh = build_mesh(geo, res)
    V = DiscreteSpace(mesh, SUBDOMAINS, dirichlet=INLET + OUTLET, name="rho")
    vf = V.volume(FLUID, 2)
    vel = _velocity(vf.x, vf.y)
    vo = V.volume(None, 2)
    A = assemble_form("stiffness", V, coef=_coef_D(vo.x, vo.y)) + assemble_form(
        "advection", V, region=FLUID, velocity=vel)
    b = _apply_stiff(V, RHO, _coef_D) + vf.Gx.T @ (vf.w * RHO.f(vf.x, vf.y) * vel[0]) + vf.Gy.T @ (
        vf.w * RHO.f(vf.x, vf.y) * vel[1])
    x = dirichlet_solve(A, b, V.free_dofs, fixed_values=V.interpolate(RHO.f))
    return {"species": _err(V, x, RHO)}


def heat_block(geo: GeometrySpec, res: Resolution, h: float = 1.5) -> dict:
    """Conduction with Robin exchange on the walls."""
    mesh = build_mesh(geo, res)
    V = DiscreteSpace(mesh, SUBDOMAINS, dirichlet=INLET + OUTLET, name="theta")
    vo = V.volume(None, 2)
    A = assemble_form("stiffness", V, coef=_coef_D(vo.x, vo.y)) + assemble_form(
        "boundary_mass", V, coef=h, tags=WALL_TAGS)
    b = _apply_stiff(V, THETA, _coef_D) + _apply_facet(V, THETA.f, WALL_TAGS, None, h)
    x = dirichlet_solve(A, b, V.free_dofs, fixed_values=V.interpolate(THETA.f))
    return {"heat": _err(V, x, THETA)}


def potential_block(geo: GeometrySpec, res: Resolution, sigma: float = 1.1, sigma_m: float = 0.5,
                    slope: float = 2.0) -> dict:
    """Broken conduction problem with a linear interface law on the catalyst interfaces."""
    mesh = build_mesh(geo, res)
    Vp = DiscreteSpace(mesh, POROUS, pieces=[("a",), ("m",), ("c",)], dirichlet=CC_TAGS + ((GAMMA, "a"),),
                       name="phi")
    vo = Vp.volume(None, 2)
    subs = np.asarray(SUBDOMAINS)[mesh.cell_sub[vo.cell_of_q]]
    sig = np.where(subs == "m", sigma_m, sigma)
    A = assemble_form("stiffness", Vp, coef=sig)
    b = np.zeros(Vp.n)
    for el in ("a", "m", "c"):
        q = subs == el
        ex = PHI[el]
        b += vo.Gx.T @ (vo.w * q * sig * ex.fx(vo.x, vo.y)) + vo.Gy.T @ (vo.w * q * sig * ex.fy(vo.x, vo.y))
    for el, tag in (("a", GAMMA_A), ("c", GAMMA_C)):
        fl, fm = Vp.facet(tag, el, 3), Vp.facet(tag, "m", 3)
        Jm = (fl.T - fm.T).tocsr()
        A = A + slope * (Jm.T @ sp.diags(fl.w) @ Jm)
        jump = PHI[el].f(fl.x, fl.y) - PHI["m"].f(fl.x, fl.y)
        b += Jm.T @ (fl.w * slope * jump)
    x0 = Vp.interpolate(lambda x, y, s: PHI[s].f(x, y))
    x = dirichlet_solve(A.tocsr(), b, Vp.free_dofs, fixed_values=x0)
    err2 = 0.0
    ve = Vp.volume(None, ERR_ORDER)
    subs_e = np.asarray(SUBDOMAINS)[mesh.cell_sub[ve.cell_of_q]]
    exact = np.zeros(len(ve.w))
    for el in ("a", "m", "c"):
        q = subs_e == el
        exact[q] = PHI[el].f(ve.x[q], ve.y[q])
    err2 = ve.w @ (ve.E @ x - exact) ** 2
    return {"potential": float(np.sqrt(err2))}


BLOCKS = {"flow": flow_block, "species": species_block, "heat": heat_block, "potential": potential_block}


@dataclass
class ConvergenceStudy:
    h: list
    errors: dict
    orders: dict = field(default_factory=dict)

    def min_order(self, name: str) -> float:
        return float(min(self.orders[name]))

    def to_dict(self) -> dict:
        return {"h": self.h, "errors": self.errors, "orders": self.orders}


def observed_orders(errors) -> list:
    e = np.asarray(errors, dtype=float)
    return [float(v) for v in np.log2(e[:-1] / e[1:])]


def convergence_study(geo: GeometrySpec, base: Resolution, refinements: int = 3, blocks=None) -> ConvergenceStudy:
    """L² errors on ``refinements + 1`` dyadically refined meshes and the observed orders."""
    blocks = list(BLOCKS) if blocks is None else list(blocks)
    errors: dict = {}
    hs = []
    for k in range(refinements + 1):
        res = base.refined(2**k)
        hs.append(geo.L / res.ny)
        for name in blocks:
            for f, e in BLOCKS[name](geo, res).items():
                errors.setdefault(f, []).append(e)
    study = ConvergenceStudy(hs, errors)
    study.orders = {f: observed_orders(e) for f, e in errors.items()}
    return study
