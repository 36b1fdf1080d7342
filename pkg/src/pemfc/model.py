"""Discretized cell: mesh, function spaces, interpolated liftings and norm helpers."""
from __future__ import annotations

import numpy as np

from .coefficients import BoundaryData, CoefficientSet
from .fem import DiscreteSpace, VectorSpace, facet_l2_norm, grad_norm, l2_norm
from .geometry import (CC_TAGS, FLUID, GAMMA, GDL, INLET, OUTLET, POROUS, SUBDOMAINS, WALL, WALL_TAGS,
                       GeometrySpec, Resolution, build_mesh)
from .ledger import LiftingNorms


class CellModel:
    """Spaces of the weak formulation on one mesh.

    * ``Vf``: velocity on the channels, zero on inlets/outlets, zero normal part on walls
    * ``Hp``: pressure on the porous layers, continuous across the catalyst interfaces
    * ``V``:  densities and temperature on the whole cell, zero on inlets/outlets
    * ``Vp``: potential on the porous layers, broken at the catalyst interfaces,
      zero on the current collectors and on the anode side of the fluid-porous interface
    """

    def __init__(self, geo: GeometrySpec, resolution: Resolution, coeffs: CoefficientSet, bdata: BoundaryData):
        self.geo = geo
        self.resolution = resolution
        self.coeffs = coeffs
        self.bdata = bdata
        m = self.mesh = build_mesh(geo, resolution)
        self.Vf = VectorSpace([
            DiscreteSpace(m, FLUID, dirichlet=INLET + OUTLET + (WALL,), name="ux"),
            DiscreteSpace(m, FLUID, dirichlet=INLET + OUTLET, name="uy"),
        ])
        self.Hp = DiscreteSpace(m, POROUS, name="p")
        self.V = DiscreteSpace(m, SUBDOMAINS, dirichlet=INLET + OUTLET, name="V")
        self.Vp = DiscreteSpace(m, POROUS, pieces=[("a",), ("m",), ("c",)],
                                dirichlet=CC_TAGS + ((GAMMA, "a"),), name="phi")
        ux, uy = bdata.u0(geo)
        cx, cy = self.Vf.components
        self.u0 = np.concatenate([cx.interpolate(ux), cy.interpolate(uy)])
        self.rho0 = [self.V.interpolate(bdata.rho0(i, geo)) for i in (1, 2)]
        self.theta0 = self.V.interpolate(bdata.theta0(geo))
        self.x_mid = 0.5 * geo.width

    # ------------------------------------------------------------------ helpers
    def sub_index(self, vo) -> np.ndarray:
        """Region index of every quadrature point of a ``VolumeOps``."""
        return self.mesh.cell_sub[vo.cell_of_q]

    def normal_x(self, x, y):
        """x-component of the normal on the fluid-porous interface, pointing into the porous layer."""
        return np.where(np.asarray(x) < self.x_mid, 1.0, -1.0)

    def velocity_norms(self, u) -> dict:
        """||∇u||, ||Du||, ||∇·u|| on the channels and ||u_T|| on the fluid-porous interface."""
        cx, cy = self.Vf.components
        ux, uy = self.Vf.split(u)
        ox, oy = cx.volume(FLUID), cy.volume(FLUID)
        g = [ox.Gx @ ux, ox.Gy @ ux, oy.Gx @ uy, oy.Gy @ uy]
        w = ox.w
        grad2 = w @ (g[0] ** 2 + g[1] ** 2 + g[2] ** 2 + g[3] ** 2)
        D2 = w @ (g[0] ** 2 + g[3] ** 2 + 0.5 * (g[1] + g[2]) ** 2)
        div2 = w @ (g[0] + g[3]) ** 2
        uT = facet_l2_norm(cy, uy, GAMMA, FLUID)
        return {"grad": float(np.sqrt(grad2)), "D": float(np.sqrt(D2)), "div": float(np.sqrt(div2)), "T": uT}

    def w_norm_12(self, u) -> float:
        """(||∇w||² + ||w_T||²_Γ)^{1/2}, the channel-velocity norm used in the transport gate."""
        n = self.velocity_norms(u)
        return float(np.hypot(n["grad"], n["T"]))

    def lifting_norms(self) -> LiftingNorms:
        V = self.V
        u = self.velocity_norms(self.u0)
        te = self.bdata.theta_e_fn()
        fo = V.facet(WALL_TAGS, None, 3)
        theta_e_wall = float(np.sqrt(fo.w @ fo.coef(te) ** 2))
        rinf = []
        for r in self.rho0:
            mask = V.dof_sub_mask(FLUID)
            rinf.append(float(np.max(np.abs(r[mask]))) if mask.any() else 0.0)
        return LiftingNorms(
            Du0=u["D"], div_u0=u["div"],
            grad_rho0=tuple(grad_norm(V, r) for r in self.rho0),
            grad_rho0_m=tuple(grad_norm(V, r, "m") for r in self.rho0),
            rho0_inf_f=tuple(rinf),
            grad_theta0=grad_norm(V, self.theta0),
            grad_theta0_m=grad_norm(V, self.theta0, "m"),
            theta_e_wall=theta_e_wall,
        )

    def wall_norm(self, v, tags=WALL_TAGS, side=None) -> float:
        return facet_l2_norm(self.V, v, tags, side)

    def gamma_cl_measure(self) -> float:
        from .geometry import GAMMA_A, GAMMA_C
        return self.mesh.measure((GAMMA_A, GAMMA_C))

    def upsilon_norm(self, ups) -> float:
        """(Σ_i ||∇υ_i||² + ||∇υ_3||² + ||υ_3||²_{Γ_w})^{1/2} for υ = (υ_1, υ_2, υ_3)."""
        s = sum(grad_norm(self.V, v) ** 2 for v in ups)
        s += facet_l2_norm(self.V, ups[2], WALL_TAGS) ** 2
        return float(np.sqrt(s))

    def l2(self, v, region=None):
        return l2_norm(self.V, v, region)


__all__ = ["CellModel", "GDL", "POROUS"]
