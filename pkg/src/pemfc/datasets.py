"""Ready-made parameter sets.

``pemfc_si`` is a hydrogen PEM cell in SI units built from typical operating data.
The SI set fails the smallness verdict by many orders of magnitude (the membrane
cross terms dominate the ellipticity parameters), so the existence theory says
nothing about it; it is used for the sanity arithmetic and for plain simulations.

``normalized`` is a dimensionless set on a unit-length cell whose coefficient
ordering mirrors the SI set (fast gas diffusion, slow membrane transport, weak
thermoelectric couplings) but whose magnitudes satisfy the smallness condition.
``random_admissible`` draws temperature-dependent coefficient models inside the
declared bounds of the normalized set.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coefficients import (BoundaryData, Bounds, ButlerVolmerData, CoefficientSet, PhysicalConstants,
                           ThetaModel)
from .geometry import CurrentCollector, GeometrySpec
from .ledger import EpsilonVector


@dataclass
class Dataset:
    name: str
    geo: GeometrySpec
    coeffs: CoefficientSet
    bdata: BoundaryData
    eps: EpsilonVector = field(default_factory=EpsilonVector)
    notes: str = ""


# ---------------------------------------------------------------------- SI
SI_THETA = (320.0, 390.0)


def pemfc_si(L: float = 1e-2, u_in: float = 0.2) -> Dataset:
    geo = GeometrySpec(l_f=1e-3, l_a=2.5e-4, l_m=5e-5, l_c=2.5e-4, L=L, collector=CurrentCollector())
    lo, hi = SI_THETA
    mu = ThetaModel("affine", 4.8e-5, slope=-(4.8e-5 - 4.2e-5) / (hi - lo), theta_ref=lo)
    d_o2 = ThetaModel("power", 1.77e-4, exponent=1.8, theta_ref=273.0)
    d_h2o = ThetaModel("power", 2.56e-5, exponent=2.3, theta_ref=307.0)
    d1m = ThetaModel("arrhenius", 2.88e-10, activation=2933.0, theta_ref=313.0)
    d2m = ThetaModel("arrhenius", 4.1e-7 * np.exp(-2602.0 / 313.0), activation=2602.0, theta_ref=313.0)
    k_h2 = ThetaModel("affine", 0.18, slope=0.02 / 100.0, theta_ref=300.0)
    alpha = ThetaModel("power", 0.3 / lo, exponent=-1.0, theta_ref=lo)
    bounds = Bounds(
        mu_lo=4.2e-5, mu_hi=4.8e-5, lam_hi=0.0, K_l=1.76e-11, K_l_hi=1.76e-11,
        D1_lo=9.15e-5, D1_hi=float(d_o2(hi)), D2_lo=float(d_h2o(lo)), D2_hi=float(d_h2o(hi)),
        D1m_lo=float(d1m(lo)), D1m_hi=float(d1m(hi)), D2m_lo=float(d2m(lo)), D2m_hi=float(d2m(hi)),
        k_lo=0.03, k_hi=0.5, sigma_lo=100.0, sigma_hi=120.0, sigma_m_lo=5.0, sigma_m_hi=15.0,
        Pi_hi=0.3, alpha_hi=0.3 / lo, S1_hi=0.0, S2_hi=0.0, Dp1_hi=0.0, Dp2_hi=0.0,
        D12_hi=0.0, D21_hi=1.1e-8, beta_lo=1.0, beta_hi=1e5, h_lo=824.0, h_hi=2672.0, T_sharp=lo,
    )
    coeffs = CoefficientSet(
        bounds=bounds, constants=PhysicalConstants(), mu=mu, lam=0.0,
        K_l={"a": 1.76e-11, "m": 1.76e-11, "c": 1.76e-11}, b={"a": 0.0, "m": 0.0, "c": 0.0},
        D1={"fuel": 9.15e-5, "a": 9.15e-5, "m": d1m, "c": d_o2, "air": d_o2},
        D2={"fuel": d_h2o, "a": d_h2o, "m": d2m, "c": d_h2o, "air": d_h2o},
        D12=0.0, D21=1.1e-8,
        k={"fuel": k_h2, "a": 0.3, "m": 0.3, "c": 0.3, "air": 0.03},
        sigma=ThetaModel.const(110.0), sigma_m=10.0, alpha_S=alpha,
        beta=1e5, h_c=1200.0, bv=ButlerVolmerData(), rho_1m=0.05, theta_range=SI_THETA,
    )
    bdata = BoundaryData(u_in=u_in, inlet_profile="parabolic", rho1_in=(0.1, 0.27), rho1_out=(0.08, 0.22),
                         rho2_in=(0.05, 0.05), rho2_out=(0.06, 0.08), theta_in=353.15, theta_out=355.0,
                         theta_e=343.15, E_cell=0.7)
    return Dataset("pemfc_si", geo, coeffs, bdata, notes="SI units; smallness verdict fails")


# ---------------------------------------------------------------------- normalized
NORMALIZED_THETA = (0.5, 2.0)
NORMALIZED_CONSTANTS = PhysicalConstants(R=1.0, F=1.0, M1=1.0, M2=1.0, M=500.0)


def normalized_bounds() -> Bounds:
    return Bounds(
        mu_lo=1.0, mu_hi=2.0, lam_hi=0.5, K_l=1.0, K_l_hi=1.0,
        D1_lo=4.0, D1_hi=6.0, D2_lo=4.0, D2_hi=6.0, D1m_lo=1.0, D1m_hi=1.5, D2m_lo=1.0, D2m_hi=1.5,
        k_lo=4.0, k_hi=5.0, sigma_lo=1.0, sigma_hi=1.2, sigma_m_lo=100.0, sigma_m_hi=120.0,
        Pi_hi=0.005, alpha_hi=0.0025, S1_hi=0.02, S2_hi=0.02, Dp1_hi=0.02, Dp2_hi=0.02,
        D12_hi=0.05, D21_hi=0.05, beta_lo=1.0, beta_hi=2.0, h_lo=1.0, h_hi=2.0, T_sharp=0.5,
    )


NORMALIZED_BV = ButlerVolmerData(j0_a=0.02, j0_c=0.01, jL_a=0.05, jL_c=0.05, theta_a=1.0, theta_c=1.0)


def normalized_geometry() -> GeometrySpec:
    return GeometrySpec(l_f=0.25, l_a=0.1, l_m=0.1, l_c=0.1, L=1.0, collector=CurrentCollector())


def normalized(u_in: float = 0.004, rho_out: float = 0.04, theta_e: float = 1.05) -> Dataset:
    """Desk-scale dimensionless cell: fuel and air channels, GDLs and membrane of comparable width.

    Inlet densities vanish and the temperature lifting is the constant 1, so the
    wall data satisfy 0 <= θ_0 <= θ_e.
    """
    coeffs = CoefficientSet(
        bounds=normalized_bounds(), constants=NORMALIZED_CONSTANTS,
        mu=ThetaModel("affine", 1.8, slope=-0.4, theta_ref=1.0), lam=0.2,
        K_l=1.0, b=0.0,
        D1={"default": 5.0, "m": 1.2}, D2={"default": 5.0, "m": 1.2},
        D12=0.02, D21=0.03, rhoS1=0.01, rhoS2=-0.01, dufour1=0.01, dufour2=0.01,
        k=4.5, sigma=1.1, sigma_m=110.0, alpha_S=0.002,
        beta=1.5, h_c=1.5, bv=NORMALIZED_BV, rho_1m=0.5, theta_range=NORMALIZED_THETA,
    )
    bdata = BoundaryData(u_in=u_in, inlet_profile="parabolic", rho1_out=(rho_out, 0.5 * rho_out),
                         rho2_out=(0.5 * rho_out, rho_out), theta_in=1.0, theta_out=1.0, theta_e=theta_e,
                         E_cell=0.5)
    return Dataset("normalized", normalized_geometry(), coeffs, bdata)


def _random_model(rng, lo, hi, signed=False):
    """Constant or affine model whose values stay in [lo, hi] (or [-hi, hi]) on the clamp range."""
    a, b = (-hi, hi) if signed else (lo, hi)
    v0, v1 = rng.uniform(a, b, 2)
    if rng.random() < 0.5:
        return ThetaModel.const(float(v0))
    t0, t1 = NORMALIZED_THETA
    return ThetaModel("affine", float(v0), slope=float((v1 - v0) / (t1 - t0)), theta_ref=t0)


def random_admissible(seed: int) -> Dataset:
    """Random normalized dataset: every coefficient drawn inside the declared bounds."""
    rng = np.random.default_rng(seed)
    B = normalized_bounds()
    rm = lambda lo, hi, s=False: _random_model(rng, lo, hi, s)
    coeffs = CoefficientSet(
        bounds=B, constants=NORMALIZED_CONSTANTS,
        mu=rm(B.mu_lo, B.mu_hi), lam=rm(0.0, B.lam_hi), K_l=1.0, b=0.0,
        D1={"fuel": rm(B.D1_lo, B.D1_hi), "a": rm(B.D1_lo, B.D1_hi), "m": rm(B.D1m_lo, B.D1m_hi),
            "c": rm(B.D1_lo, B.D1_hi), "air": rm(B.D1_lo, B.D1_hi)},
        D2={"fuel": rm(B.D2_lo, B.D2_hi), "a": rm(B.D2_lo, B.D2_hi), "m": rm(B.D2m_lo, B.D2m_hi),
            "c": rm(B.D2_lo, B.D2_hi), "air": rm(B.D2_lo, B.D2_hi)},
        D12=rm(0, B.D12_hi, True), D21=rm(0, B.D21_hi, True),
        rhoS1=rm(0, B.S1_hi, True), rhoS2=rm(0, B.S2_hi, True),
        dufour1=rm(0, B.Dp1_hi, True), dufour2=rm(0, B.Dp2_hi, True),
        k={"default": rm(B.k_lo, B.k_hi)}, sigma=rm(B.sigma_lo, B.sigma_hi), sigma_m=rm(B.sigma_m_lo, B.sigma_m_hi),
        alpha_S=ThetaModel.const(float(rng.uniform(-B.alpha_hi, B.alpha_hi))),
        beta=rm(B.beta_lo, B.beta_hi), h_c=rm(B.h_lo, B.h_hi), bv=NORMALIZED_BV, rho_1m=0.5,
        theta_range=NORMALIZED_THETA,
    )
    r = rng.uniform(0.0, 0.04, 4)
    bdata = BoundaryData(u_in=float(rng.uniform(0.001, 0.004)), inlet_profile="parabolic",
                         rho1_out=(float(r[0]), float(r[1])), rho2_out=(float(r[2]), float(r[3])),
                         theta_in=1.0, theta_out=1.0, theta_e=float(rng.uniform(1.0, 1.1)),
                         E_cell=float(rng.uniform(0.0, 1.0)))
    return Dataset(f"random_{seed}", normalized_geometry(), coeffs, bdata)


DATASETS = {"pemfc_si": pemfc_si, "normalized": normalized}
