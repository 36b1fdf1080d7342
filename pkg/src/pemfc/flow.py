"""Stokes-Darcy problem with slip on the fluid-porous interface and the ideal-gas load."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fem import ReusableSolver, assemble_form, dirichlet_solve, grad_norm
from .geometry import FLUID, GAMMA, POROUS, WALL
from .model import CellModel

log = logging.getLogger(__name__)


@dataclass
class FlowSolution:
    U: np.ndarray
    p: np.ndarray
    u: np.ndarray
    residual: float
    margin: dict = field(default_factory=dict)

    def p_mean_zero(self, model: CellModel) -> np.ndarray:
        """Pressure shifted to zero mean over the porous layers."""
        vo = model.Hp.volume()
        return self.p - (vo.w @ (vo.E @ self.p)) / vo.w.sum()


@dataclass
class FlowSystem:
    A: sp.csr_matrix
    b: np.ndarray
    n_u: int
    free: np.ndarray


def assemble_flow(model: CellModel, pi, varrho, xi) -> FlowSystem:
    """Matrix and load of the coupled problem for frozen pressure ``pi`` (on ``Hp``),
    density sum ``varrho`` and temperature ``xi`` (on ``V``)."""
    c = model.coeffs
    Vf, Hp, V = model.Vf, model.Hp, model.V
    cx, cy = Vf.components

    vo_f = V.volume(FLUID)
    sub_f = model.sub_index(vo_f)
    xi_f = vo_f.E @ xi
    mu_f = c.region("mu", sub_f, xi_f)
    lam_f = c.region("lam", sub_f, xi_f)
    A_uu = assemble_form("symgrad", Vf, coef=mu_f, region=FLUID) + assemble_form("div", Vf, coef=lam_f, region=FLUID)

    fo_xi = V.facet(GAMMA, FLUID)
    beta = c.beta(fo_xi.T @ xi)
    Bt = assemble_form("boundary_mass", cy, coef=beta, tags=GAMMA, side=FLUID)
    A_uu = A_uu + sp.block_diag([sp.csr_matrix((cx.n, cx.n)), Bt])

    B = assemble_form("interface_pressure", Vf, Hp, coef=model.normal_x, tags=GAMMA, side=FLUID, col_side=POROUS)

    vo_p = V.volume(POROUS)
    sub_p = model.sub_index(vo_p)
    xi_p = vo_p.E @ xi
    pi_p = Hp.volume().E @ pi
    darcy = c.klinkenberg(sub_p, pi_p) / c.region("mu", sub_p, xi_p)
    A_pp = assemble_form("stiffness", Hp, coef=darcy)

    A = sp.bmat([[A_uu, B], [-B.T, A_pp]], format="csr")

    # load: R_M ∫ ϱ ξ ∇·v - G(ξ, u0, v)
    rx = c.constants.R_M * (vo_f.E @ varrho) * xi_f
    ox, oy = cx.volume(FLUID), cy.volume(FLUID)
    b_u = np.concatenate([ox.Gx.T @ (ox.w * rx), oy.Gy.T @ (oy.w * rx)])
    G = assemble_form("symgrad", Vf, coef=mu_f, region=FLUID) + assemble_form("div", Vf, coef=lam_f, region=FLUID)
    b_u = b_u - G @ model.u0
    b = np.concatenate([b_u, np.zeros(Hp.n)])
    free = np.concatenate([Vf.free_dofs, Vf.n + np.arange(Hp.n)])
    return FlowSystem(A, b, Vf.n, free)


def flow_coords(model: CellModel) -> np.ndarray:
    """Positions of the flow unknowns (U_x, U_y, p) in system order."""
    return np.vstack([c.coords for c in model.Vf.components] + [model.Hp.coords])


def solve_flow(model: CellModel, pi, varrho, xi, method: str = "direct", tol: float = 1e-10,
               solver: ReusableSolver | None = None) -> FlowSolution:
    """Velocity correction U (zero on inlets/outlets, zero normal part on walls) and
    porous pressure p; the channel velocity is u = U + u0.

    ``solver`` reuses factorizations across calls (outer iterations)."""
    for name, v in (("pi", pi), ("varrho", varrho), ("xi", xi)):
        if not np.all(np.isfinite(v)):
            raise ValueError(f"non-finite frozen field {name}")
    sysm = assemble_flow(model, pi, varrho, xi)
    coords = flow_coords(model) if solver is not None else None
    x = dirichlet_solve(sysm.A, sysm.b, sysm.free, method=method, tol=tol, solver=solver, coords=coords)
    r = sysm.A @ x - sysm.b
    bn = np.linalg.norm(sysm.b[sysm.free])
    res = float(np.linalg.norm(r[sysm.free]) / bn) if bn > 0 else float(np.linalg.norm(r[sysm.free]))
    U, p = x[:sysm.n_u], x[sysm.n_u:]
    return FlowSolution(U, p, U + model.u0, res)


def check_flow_energy_estimate(model: CellModel, sol: FlowSolution, varrho, xi, C_K: float, C0: float,
                               rtol: float = 1e-9) -> dict:
    """Both sides of the velocity-pressure energy estimate for u = U + u0.

    LHS = μ_#/(2 C_K) ||∇u||² + β_# ||u_T||²_Γ + K_l/μ^# ||∇p||²
    RHS = (sqrt(2L) R_M/sqrt(μ_#) (||ξ||²_{Γ_w ∩ ∂Ω_f} + l_f ||∇ξ||²_{Ω_f})^{1/2} ||∇ϱ||_{Ω_f} + C0)²
    """
    if C_K < 1:
        raise ValueError("C_K must be >= 1")
    B = model.coeffs.bounds
    geo = model.geo
    n = model.velocity_norms(sol.u)
    gp = grad_norm(model.Hp, sol.p)
    lhs = B.mu_lo / (2 * C_K) * n["grad"] ** 2 + B.beta_lo * n["T"] ** 2 + B.K_l / B.mu_hi * gp**2
    xi_w = model.wall_norm(xi, (WALL,), FLUID)
    gxi = grad_norm(model.V, xi, FLUID)
    grho = grad_norm(model.V, varrho, FLUID)
    rhs = (math.sqrt(2 * geo.L) * model.coeffs.constants.R_M / math.sqrt(B.mu_lo)
           * math.sqrt(xi_w**2 + geo.l_f * gxi**2) * grho + C0) ** 2
    ok = lhs <= rhs * (1 + rtol) + 1e-300
    return {"lhs": float(lhs), "rhs": float(rhs), "margin": float(rhs - lhs), "holds": bool(ok)}
