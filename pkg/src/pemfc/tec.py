"""Coupled partial densities, temperature and potential for a frozen state.

For given channel velocity w, densities ϱ, temperature ξ and Joule density Φ the
unknowns (Υ_1, Υ_2, Θ, φ_cc) solve a linear cross-diffusion system plus the
Butler-Volmer jump terms on the catalyst interfaces, which are monotone. The
system is solved monolithically by damped Newton.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .coefficients import butler_volmer_raw, butler_volmer_slope, truncate_psi
from .fem import ReusableSolver, SolverError, assemble_form, facet_l2_norm, grad_norm, solve_linear
from .geometry import FLUID, GAMMA_A, GAMMA_C, POROUS, SUBDOMAINS, WALL_TAGS
from .model import CellModel

log = logging.getLogger(__name__)

JOULE_REGION = ("a", "c")


class GateError(ValueError):
    """The frozen velocity violates the smallness gate of the transport problem."""


@dataclass(frozen=True)
class TecOptions:
    tol: float = 1e-10
    max_newton: int = 50
    min_step: float = 2.0**-20
    method: str = "direct"
    linear_bv_slope: float | None = None   # replace j_ℓ(η) by slope·η
    root1: float | None = None             # gate bound on ||w||_{1,2}
    strict_gate: bool = False


@dataclass
class TecSolution:
    ups1: np.ndarray
    ups2: np.ndarray
    Theta: np.ndarray
    phi_cc: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray
    theta: np.ndarray
    E_cell: float
    newton_iters: int
    residuals: list = field(default_factory=list)
    gate: dict = field(default_factory=dict)

    def phi(self, model: CellModel) -> np.ndarray:
        """Full potential φ = φ_cc + E_cell χ_c on the broken porous space."""
        return self.phi_cc + self.E_cell * (model.Vp.dof_piece == 2)


@dataclass
class TecSystem:
    K: sp.csr_matrix
    f: np.ndarray
    n: tuple
    free: np.ndarray
    jumps: dict          # electrode -> (J, w)
    phi_r: dict


def _mask(sub, names):
    return np.isin(sub, [SUBDOMAINS.index(s) for s in names]).astype(float)


def assemble_tec(model: CellModel, w_u, varrho1, varrho2, xi, Phi) -> TecSystem:
    """Linear part K x = f of the transport system (BV terms excluded).

    ``w_u`` is the channel velocity on ``Vf``, ``varrho_i`` and ``xi`` live on ``V``
    (full fields, liftings included), ``Phi`` is given at the quadrature points of
    ``V.volume(("a", "c"))``.
    """
    c = model.coeffs
    V, Vp = model.V, model.Vp
    cst = c.constants

    vo = V.volume()
    sub = model.sub_index(vo)
    xq = vo.E @ xi

    D1 = c.region("D1", sub, xq)
    D2 = c.region("D2", sub, xq)
    D12 = c.region("D12", sub, xq)
    D21 = c.region("D21", sub, xq)
    S1 = c.region("rhoS1", sub, xq)
    S2 = c.region("rhoS2", sub, xq)
    Q1 = c.region("dufour1", sub, xq)
    Q2 = c.region("dufour2", sub, xq)
    k = c.region("k", sub, xq)

    def stiff(coef):
        return assemble_form("stiffness", V, coef=coef)

    # advection ∫_Ωf Υ w·∇v
    cx, cy = model.Vf.components
    ux, uy = model.Vf.split(w_u)
    wx = cx.volume(FLUID).E @ ux
    wy = cy.volume(FLUID).E @ uy
    Adv = assemble_form("advection", V, coef=1.0, region=FLUID, velocity=(wx, wy))

    # porous-region cross terms between V and Vp
    vp = V.volume(POROUS)
    subp = model.sub_index(vp)
    xp = vp.E @ xi
    r1p = vp.E @ varrho1
    mp = _mask(subp, ("m",))
    sig_m = c.sigma_m(xp)
    psi = truncate_psi(r1p, c.rho_1m) * c.kappa_over_theta(xp) * mp
    pel = c.peltier(xp) * sig_m * mp
    kap = c.kappa_m(xp) / cst.M1 * mp
    see = c.alpha_S(xp) * sig_m * mp
    sigma_p = np.where(mp > 0, sig_m, c.region("sigma", subp, xp))

    def cross(row, col, coef):
        return assemble_form("stiffness", row, col, coef=coef, region=POROUS)

    hc = c.h_c(V.facet(WALL_TAGS).T @ xi)
    Mw = assemble_form("boundary_mass", V, coef=hc, tags=WALL_TAGS)

    K11 = Adv + stiff(D1)
    K22 = Adv + stiff(D2)
    K12, K21 = stiff(D12), stiff(D21)
    K13, K23 = stiff(S1), stiff(S2)
    K31, K32 = stiff(Q1), stiff(Q2)
    K33 = stiff(k) + Mw
    K14 = cross(V, Vp, psi)
    K34 = cross(V, Vp, pel)
    K41 = cross(Vp, V, kap)
    K43 = cross(Vp, V, see)
    K44 = assemble_form("stiffness", Vp, coef=sigma_p)

    K = sp.bmat([[K11, K12, K13, K14],
                 [K21, K22, K23, None],
                 [K31, K32, K33, K34],
                 [K41, None, K43, K44]], format="csr")

    r10, r20, t0 = model.rho0[0], model.rho0[1], model.theta0
    f1 = -(K11 @ r10 + K12 @ r20 + K13 @ t0)
    f2 = -(K22 @ r20 + K21 @ r10 + K23 @ t0)
    f3 = -(K31 @ r10 + K32 @ r20 + K33 @ t0)
    te = model.bdata.theta_e_fn()
    f3 += assemble_form("facet_source", V, coef=hc * V.facet(WALL_TAGS).coef(te), tags=WALL_TAGS)
    if Phi is not None:
        vj = V.volume(JOULE_REGION)
        sj = c.region("sigma", model.sub_index(vj), vj.E @ xi)
        f3 += vj.E.T @ (vj.w * sj * np.asarray(Phi))
    f4 = -(K41 @ r10 + K43 @ t0)
    f = np.concatenate([f1, f2, f3, f4])

    jumps = {}
    for el, tag in (("a", GAMMA_A), ("c", GAMMA_C)):
        fl, fm = Vp.facet(tag, el), Vp.facet(tag, "m")
        jumps[el] = ((fl.T - fm.T).tocsr(), fl.w)
    phi_r = {"a": c.bv.phi_r_a, "c": c.bv.phi_r_c}

    n = (V.n, V.n, V.n, Vp.n)
    off = np.concatenate([[0], np.cumsum(n)])
    free = np.concatenate([off[0] + V.free_dofs, off[1] + V.free_dofs, off[2] + V.free_dofs, off[3] + Vp.free_dofs])
    return TecSystem(K, f, n, free, jumps, phi_r)


def _bv(model: CellModel, el: str, eta, slope):
    if slope is not None:
        return slope * eta, np.full_like(eta, slope)
    c = model.coeffs
    j0, jL, B = c.bv.params(el, c.constants.R, c.constants.F)
    return butler_volmer_raw(eta, j0, jL, B), butler_volmer_slope(eta, j0, jL, B)


def _nonlinear(model, sysm, phi, slope, want_jac=True):
    """BV residual contribution and Jacobian on the potential block."""
    r = np.zeros(len(phi))
    J = None
    for el, (Jm, w) in sysm.jumps.items():
        eta = Jm @ phi - sysm.phi_r[el]
        j, dj = _bv(model, el, eta, slope)
        r += Jm.T @ (w * j)
        if want_jac:
            M = (Jm.T @ sp.diags(w * dj) @ Jm).tocsr()
            J = M if J is None else J + M
    return r, J


def tec_coords(model: CellModel) -> np.ndarray:
    """Positions of the transport unknowns (Υ1, Υ2, Θ, φ_cc) in system order."""
    return np.vstack([model.V.coords] * 3 + [model.Vp.coords])


def solve_tec(model: CellModel, w_u, varrho1, varrho2, xi, Phi=None, options: TecOptions = TecOptions(),
              x0=None, solver: ReusableSolver | None = None) -> TecSolution:
    """Solve the frozen transport system by damped Newton on the free DOFs.

    ``solver`` reuses factorizations across Newton steps and calls.
    """
    for name, v in (("w", w_u), ("varrho1", varrho1), ("varrho2", varrho2), ("xi", xi)):
        if not np.all(np.isfinite(v)):
            raise ValueError(f"non-finite frozen field {name}")
    gate = {}
    if options.root1 is not None:
        wn = model.w_norm_12(w_u)
        gate = {"w_norm": wn, "root1": options.root1, "passed": bool(wn < options.root1)}
        if not gate["passed"]:
            msg = f"||w||_(1,2) = {wn:.6g} >= root1 = {options.root1:.6g}"
            if options.strict_gate:
                raise GateError(msg)
            log.warning("transport gate violated: %s", msg)

    sysm = assemble_tec(model, w_u, varrho1, varrho2, xi, Phi)
    nV = model.V.n
    off_phi = 3 * nV
    free = sysm.free
    ff = sysm.f[free]
    x = np.zeros(sysm.K.shape[0]) if x0 is None else np.array(x0, dtype=float)
    x[np.setdiff1d(np.arange(len(x)), free)] = 0.0

    def residual(x):
        rn, _ = _nonlinear(model, sysm, x[off_phi:], options.linear_bv_slope, want_jac=False)
        r = sysm.K @ x - sysm.f
        r[off_phi:] += rn
        return r[free]

    # reference potentials drive the problem through the interface law only, so scale by r(0) as well
    scale = max(np.linalg.norm(ff), np.linalg.norm(residual(np.zeros_like(x))), 1e-300)

    coords = tec_coords(model)[free] if solver is not None else None
    r = residual(x)
    history = [float(np.linalg.norm(r) / scale)]
    it = 0
    while history[-1] > options.tol:
        if it >= options.max_newton:
            raise SolverError(f"Newton did not converge in {options.max_newton} iterations", history)
        _, Jn = _nonlinear(model, sysm, x[off_phi:], options.linear_bv_slope)
        Jf = (sysm.K + sp.block_diag([sp.csr_matrix((off_phi, off_phi)), Jn]).tocsr())[free][:, free]
        if solver is not None:
            dx = solver.solve(Jf, -r, coords)
        else:
            dx = solve_linear(Jf, -r, method=options.method, tol=min(1e-12, options.tol))
        t, rn0 = 1.0, np.linalg.norm(r)
        while True:
            xt = x.copy()
            xt[free] += t * dx
            rt = residual(xt)
            if np.linalg.norm(rt) <= (1 - 1e-4 * t) * rn0 or t <= options.min_step:
                break
            t *= 0.5
        x, r = xt, rt
        it += 1
        history.append(float(np.linalg.norm(r) / scale))
        if t <= options.min_step and history[-1] >= history[-2]:
            raise SolverError("Newton line search stalled", history)

    u1, u2, T = x[:nV], x[nV:2 * nV], x[2 * nV:3 * nV]
    phi_cc = x[off_phi:]
    return TecSolution(u1, u2, T, phi_cc, u1 + model.rho0[0], u2 + model.rho0[1], T + model.theta0,
                       model.bdata.E_cell, it, history, gate)


def joule_density(model: CellModel, phi_cc) -> np.ndarray:
    """|∇φ|² at the quadrature points of the gas diffusion layers."""
    vo = model.Vp.volume(JOULE_REGION)
    gx, gy = vo.grad(phi_cc)
    return gx**2 + gy**2


def joule_norm(model: CellModel, Phi) -> float:
    vo = model.V.volume(JOULE_REGION)
    return float(np.sqrt(vo.w @ np.asarray(Phi) ** 2))


def check_tec_energy_estimate(model: CellModel, sol: TecSolution, w_u, Phi, report, rtol: float = 1e-9) -> dict:
    """Both sides of the transport energy estimate.

    ``report`` is a ledger report providing the ellipticity parameters and B0.
    """
    B = model.coeffs.bounds
    L = model.geo.L
    V, Vp = model.V, model.Vp
    a = report.a
    wn = model.w_norm_12(w_u)
    gw = model.velocity_norms(w_u)["grad"]
    drop = (0.5 + math.sqrt(2)) * math.sqrt(L) * wn + L / 4 * gw**2
    coef_f = (a.a1_sharp - drop, a.a2_sharp - drop)
    coef_p = (a.a1_m, a.a2_m)
    lhs = 0.0
    for i, u in enumerate((sol.ups1, sol.ups2)):
        lhs += coef_f[i] * grad_norm(V, u, FLUID) ** 2 + coef_p[i] * grad_norm(V, u, POROUS) ** 2
    lhs += a.a3 * grad_norm(V, sol.Theta) ** 2 + B.h_lo / 2 * facet_l2_norm(V, sol.Theta, WALL_TAGS) ** 2
    lhs += a.a4_m * grad_norm(Vp, sol.phi_cc, "m") ** 2 + B.sigma_lo / 2 * grad_norm(Vp, sol.phi_cc, JOULE_REGION) ** 2
    phin = joule_norm(model, Phi) if Phi is not None else 0.0
    rhs = B.sigma_hi**2 / B.k_lo * phin**2 + B.h_hi / 2 * report.theta_e_wall**2 + report.B0
    ok = lhs <= rhs * (1 + rtol) + 1e-300
    return {"lhs": float(lhs), "rhs": float(rhs), "margin": float(rhs - lhs), "holds": bool(ok),
            "coef_f": tuple(float(x) for x in coef_f)}
