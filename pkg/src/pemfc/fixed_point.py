"""Outer Picard iteration of the decoupled flow / transport map.

One application of the map freezes (π, υ1, υ2, υ3, Φ), solves the Stokes-Darcy
problem for (U, p), then the transport system for (Υ1, Υ2, Θ, φ_cc) driven by
u = U + u0, and returns (p, Υ1, Υ2, Θ, |∇φ|² on the gas diffusion layers).
"""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .fem import ReusableSolver, SolverError, grad_norm, l2_norm
from .flow import FlowSolution, check_flow_energy_estimate, solve_flow
from .ledger import LedgerReport
from .model import CellModel
from .tec import TecOptions, TecSolution, check_tec_energy_estimate, joule_density, joule_norm, solve_tec

log = logging.getLogger(__name__)

FIELDS = ("p", "ups1", "ups2", "Theta", "Phi")


@dataclass
class PicardConfig:
    max_outer_iters: int = 50
    tol: float = 1e-8
    omega: float = 1.0
    min_omega: float = 1.0 / 64
    adapt_omega: bool = True
    strict_gate: bool = False
    check_estimates: bool = True
    linear_method: str = "direct"
    newton_tol: float = 1e-11

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.omega <= 1:
            raise ValueError("omega must lie in (0, 1]")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")


@dataclass
class PicardState:
    """Frozen input of the map: pressure π on Hp, υ = (υ1, υ2, υ3) on V, Φ at the GDL quadrature points."""

    pi: np.ndarray
    ups: tuple
    Phi: np.ndarray

    @classmethod
    def zero(cls, model: CellModel) -> "PicardState":
        nq = len(model.V.volume(("a", "c")).w)
        z = model.V.zeros
        return cls(model.Hp.zeros(), (z(), z(), z()), np.zeros(nq))

    def fields(self) -> dict:
        return {"p": self.pi, "ups1": self.ups[0], "ups2": self.ups[1], "Theta": self.ups[2], "Phi": self.Phi}

    def relax(self, new: "PicardState", omega: float) -> "PicardState":
        mix = lambda a, b: a + omega * (b - a)
        return PicardState(mix(self.pi, new.pi), tuple(mix(a, b) for a, b in zip(self.ups, new.ups)),
                           mix(self.Phi, new.Phi))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.fields().values())


@dataclass
class CellState:
    """Physical fields of a converged (or last) iterate."""

    u: np.ndarray
    p: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    Q: np.ndarray
    flow: FlowSolution | None = None
    tec: TecSolution | None = None


@dataclass
class IterationRecord:
    iteration: int
    diffs: dict
    residual: float
    omega: float
    in_K: dict
    flow_margin: float | None
    tec_margin: float | None
    newton_iters: int
    seconds: float


@dataclass
class SolveReport:
    converged: bool = False
    status: str = "not started"
    iterations: list = field(default_factory=list)
    radii: tuple = ()

    @property
    def residuals(self) -> list:
        return [r.residual for r in self.iterations]

    def all_in_K(self) -> bool:
        return all(all(r.in_K.values()) for r in self.iterations)

    def estimates_hold(self) -> bool:
        return all((r.flow_margin is None or r.flow_margin >= 0) and (r.tec_margin is None or r.tec_margin >= 0)
                   for r in self.iterations)

    def to_dict(self) -> dict:
        return {"converged": self.converged, "status": self.status, "radii": list(self.radii),
                "iterations": [asdict(r) for r in self.iterations]}


def _field_norm(model: CellModel, name: str, v) -> float:
    if name == "p":
        return l2_norm(model.Hp, v)
    if name == "Phi":
        return joule_norm(model, v)
    return l2_norm(model.V, v)


def relative_differences(model: CellModel, old: PicardState, new: PicardState) -> dict:
    """Per-field relative L² difference ||new - old|| / max(||new||, ||old||) (0 if both vanish)."""
    out = {}
    fo, fn = old.fields(), new.fields()
    for k in FIELDS:
        d = _field_norm(model, k, fn[k] - fo[k])
        s = max(_field_norm(model, k, fn[k]), _field_norm(model, k, fo[k]))
        out[k] = float(d / s) if s > 0 else 0.0
    return out


def k_membership(model: CellModel, state: PicardState, radii) -> dict:
    R1, R2, R3 = radii
    return {"R1": bool(grad_norm(model.Hp, state.pi) <= R1),
            "R2": bool(model.upsilon_norm(state.ups) <= R2),
            "R3": bool(joule_norm(model, state.Phi) <= R3)}


def apply_T(model: CellModel, state: PicardState, report: LedgerReport | None = None,
            config: PicardConfig = PicardConfig(), tec_x0=None, solvers=None):
    """One flow solve followed by one transport solve.

    ``solvers`` is an optional (flow, transport) pair of reusable linear solvers.
    Returns (new_state, flow_solution, tec_solution).
    """
    fsol, tsol = (None, None) if solvers is None else solvers
    if not state.is_finite():
        raise ValueError("non-finite Picard state")
    if np.any(state.Phi < 0):
        raise ValueError("Joule density must be nonnegative")
    varrho1 = state.ups[0] + model.rho0[0]
    varrho2 = state.ups[1] + model.rho0[1]
    xi = state.ups[2] + model.theta0
    fs = solve_flow(model, state.pi, varrho1 + varrho2, xi, method=config.linear_method, solver=fsol)
    opts = TecOptions(tol=config.newton_tol, method=config.linear_method, strict_gate=config.strict_gate,
                      root1=None if report is None else report.root1)
    ts = solve_tec(model, fs.u, varrho1, varrho2, xi, state.Phi, opts, x0=tec_x0, solver=tsol)
    new = PicardState(fs.p_mean_zero(model), (ts.ups1, ts.ups2, ts.Theta), joule_density(model, ts.phi_cc))
    return new, fs, ts


def run_picard(model: CellModel, report: LedgerReport | None = None, config: PicardConfig = PicardConfig(),
               state0: PicardState | None = None):
    """Relaxed Picard iteration x <- x + ω (T(x) - x) from the zero state.

    Converged when the largest per-field relative difference between x and T(x)
    is at most ``tol``. ω is halved whenever that residual grows. Returns
    (CellState, SolveReport); the report records non-convergence instead of raising.
    Solver failures are re-raised with the outer iteration attached. With the direct
    method, flow and transport factorizations are reused across iterations.
    """
    state = PicardState.zero(model) if state0 is None else state0
    radii = (report.R1, report.R2, report.R3) if report is not None else ()
    rep = SolveReport(radii=tuple(float(r) for r in radii), status="running")
    omega = config.omega
    tec_x0 = None
    fs = ts = new = None
    solvers = (ReusableSolver(tol=1e-11), ReusableSolver(tol=1e-10)) if config.linear_method == "direct" else None
    for k in range(config.max_outer_iters):
        t0 = time.perf_counter()
        try:
            new, fs, ts = apply_T(model, state, report, config, tec_x0, solvers)
        except SolverError as exc:
            rep.status = f"solver failure at outer iteration {k}: {exc}"
            raise SolverError(rep.status, getattr(exc, "residuals", ())) from exc
        tec_x0 = np.concatenate([ts.ups1, ts.ups2, ts.Theta, ts.phi_cc])
        diffs = relative_differences(model, state, new)
        res = max(diffs.values())
        in_K = k_membership(model, state, radii) if radii else {}
        fm = tm = None
        if config.check_estimates and report is not None:
            fm = check_flow_energy_estimate(model, fs, state.ups[0] + state.ups[1] + model.rho0[0] + model.rho0[1],
                                            state.ups[2] + model.theta0, report.C_K, report.C0)["margin"]
            tm = check_tec_energy_estimate(model, ts, fs.u, state.Phi, report)["margin"]
        if config.adapt_omega and rep.iterations and res > rep.iterations[-1].residual:
            omega = max(0.5 * omega, config.min_omega)
        rep.iterations.append(IterationRecord(k, diffs, float(res), float(omega), in_K, fm, tm, ts.newton_iters,
                                              time.perf_counter() - t0))
        log.info("picard %d: residual %.3e omega %.3g", k, res, omega)
        if res <= config.tol:
            rep.converged, rep.status = True, "converged"
            state = new
            break
        state = state.relax(new, omega)
    else:
        rep.status = "max_iterations"
    if radii:
        rep.iterations[-1].in_K.update({f"out_{k}": v for k, v in k_membership(model, new, radii).items()})
    tec_phi = ts.phi(model)
    cell = CellState(u=fs.u, p=fs.p_mean_zero(model), rho1=ts.rho1, rho2=ts.rho2, theta=ts.theta, phi=tec_phi,
                     Q=joule_density(model, ts.phi_cc), flow=fs, tec=ts)
    return cell, rep
