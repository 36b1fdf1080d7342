"""Constitutive laws, physical constants, boundary data and hypothesis checks."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .geometry import FLUID, GDL, POROUS, SUBDOMAINS, GeometrySpec


class CoefficientError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalConstants:
    """Gas constant R [J/(mol K)], Faraday constant F [C/mol] and molar masses [kg/mol].

    ``M1``, ``M2`` belong to the two species, ``M`` to the gas mixture entering
    the ideal-gas law through ``R_M = R / M``.
    """

    R: float = 8.314
    F: float = 9.6485e4
    M1: float = 2.016e-3
    M2: float = 18.015e-3
    M: float = 28.97e-3

    def __post_init__(self):
        for name in ("R", "F", "M1", "M2", "M"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise CoefficientError(f"constant {name} must be positive, got {v}")

    @property
    def R_M(self) -> float:
        return self.R / self.M

    def molar_mass(self, i: int) -> float:
        return (self.M1, self.M2)[i - 1]


MODEL_KINDS = ("constant", "affine", "power", "arrhenius", "table")


@dataclass(frozen=True)
class ThetaModel:
    """Scalar function of temperature.

    * constant:  value
    * affine:    value + slope (θ - theta_ref)
    * power:     value (θ / theta_ref)^exponent
    * arrhenius: value exp(activation (1/theta_ref - 1/θ))
    * table:     piecewise-linear interpolation of ``table`` = ((θ0, v0), (θ1, v1), ...)

    θ is clipped to ``clamp`` first, which keeps every model bounded on the real line.
    """

    kind: str = "constant"
    value: float = 0.0
    slope: float = 0.0
    exponent: float = 0.0
    activation: float = 0.0
    theta_ref: float = 1.0
    table: tuple = ()
    clamp: tuple | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise CoefficientError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.kind in ("power", "arrhenius"):
            if self.theta_ref <= 0:
                raise CoefficientError(f"{self.kind} model needs theta_ref > 0")
            if self.clamp is not None and self.clamp[0] <= 0:
                raise CoefficientError(f"{self.kind} model needs a clamp range inside θ > 0")
        if self.kind == "table":
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 2 or t.shape[1] != 2 or len(t) < 2 or np.any(np.diff(t[:, 0]) <= 0):
                raise CoefficientError("table model needs >= 2 rows (θ, value) with increasing θ")
        if self.clamp is not None and not self.clamp[0] <= self.clamp[1]:
            raise CoefficientError(f"clamp range must be ordered, got {self.clamp}")

    @classmethod
    def const(cls, value: float) -> "ThetaModel":
        return cls("constant", float(value))

    def __call__(self, theta):
        t = np.asarray(theta, dtype=float)
        if self.clamp is not None:
            t = np.clip(t, *self.clamp)
        if self.kind == "constant":
            return np.full(t.shape, self.value)
        if self.kind == "affine":
            return self.value + self.slope * (t - self.theta_ref)
        if self.kind == "power":
            return self.value * (t / self.theta_ref) ** self.exponent
        if self.kind == "arrhenius":
            return self.value * np.exp(self.activation * (1.0 / self.theta_ref - 1.0 / t))
        tab = np.asarray(self.table, dtype=float)
        return np.interp(t, tab[:, 0], tab[:, 1])

    def needs_clamp(self) -> bool:
        return self.kind in ("power", "arrhenius", "affine") and self.clamp is None


def _region_model(spec, subs) -> dict:
    """Normalize a model or a {region: model} map to a full map over ``subs``."""
    if isinstance(spec, (int, float)):
        spec = ThetaModel.const(spec)
    if isinstance(spec, ThetaModel):
        return {s: spec for s in subs}
    out = {}
    for s in subs:
        m = spec.get(s, spec.get("default"))
        if m is None:
            raise CoefficientError(f"no model given for region {s!r}")
        out[s] = ThetaModel.const(m) if isinstance(m, (int, float)) else m
    return out


@dataclass(frozen=True)
class Bounds:
    """Declared bounds of every coefficient (SI units)."""

    mu_lo: float
    mu_hi: float
    lam_hi: float
    K_l: float
    K_l_hi: float
    D1_lo: float
    D1_hi: float
    D2_lo: float
    D2_hi: float
    D1m_lo: float
    D1m_hi: float
    D2m_lo: float
    D2m_hi: float
    k_lo: float
    k_hi: float
    sigma_lo: float
    sigma_hi: float
    sigma_m_lo: float
    sigma_m_hi: float
    Pi_hi: float
    alpha_hi: float
    S1_hi: float
    S2_hi: float
    Dp1_hi: float
    Dp2_hi: float
    D12_hi: float
    D21_hi: float
    beta_lo: float
    beta_hi: float
    h_lo: float
    h_hi: float
    T_sharp: float

    PAIRS = (("mu_lo", "mu_hi"), ("K_l", "K_l_hi"), ("D1_lo", "D1_hi"), ("D2_lo", "D2_hi"),
             ("D1m_lo", "D1m_hi"), ("D2m_lo", "D2m_hi"), ("k_lo", "k_hi"), ("sigma_lo", "sigma_hi"),
             ("sigma_m_lo", "sigma_m_hi"), ("beta_lo", "beta_hi"), ("h_lo", "h_hi"))

    def violations(self) -> list[str]:
        out = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0:
                out.append(f"{f.name} must be finite and nonnegative, got {v}")
        for lo, hi in self.PAIRS:
            if getattr(self, lo) <= 0:
                out.append(f"{lo} must be positive")
            if getattr(self, lo) > getattr(self, hi):
                out.append(f"{lo} = {getattr(self, lo)} exceeds {hi} = {getattr(self, hi)}")
        if self.T_sharp <= 0:
            out.append("T_sharp must be positive")
        return out


@dataclass(frozen=True)
class ButlerVolmerData:
    """Exchange currents j0, limiting currents jL [A/m²], reference temperatures [K]
    and reference potentials [V] of the two electrodes."""

    j0_a: float = 1800.0
    j0_c: float = 0.0132
    jL_a: float = 2.0e4
    jL_c: float = 2.0e4
    theta_a: float = 353.15
    theta_c: float = 353.15
    phi_r_a: float = 0.0
    phi_r_c: float = 0.0

    def __post_init__(self):
        for name in ("j0_a", "j0_c", "jL_a", "jL_c", "theta_a", "theta_c"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise CoefficientError(f"Butler-Volmer datum {name} must be positive, got {v}")

    def params(self, electrode: str, R: float, F: float):
        """(j0, jL, B) of electrode ``"a"`` or ``"c"``."""
        if electrode not in ("a", "c"):
            raise CoefficientError(f"electrode must be 'a' or 'c', got {electrode!r}")
        j0, jL, th = (self.j0_a, self.jL_a, self.theta_a) if electrode == "a" else (self.j0_c, self.jL_c, self.theta_c)
        return j0, jL, R * th / F


@dataclass(frozen=True)
class CoefficientSet:
    """All constitutive functions with their declared bounds.

    Region maps hold one ``ThetaModel`` per subdomain. Cross coefficients that
    multiply a density in the weak form (ρ_i S_i, (R/M_i) θ² D'_i) are modelled as
    the whole product, as a function of θ.
    """

    bounds: Bounds
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    mu: object = 4.5e-5
    lam: object = 0.0
    K_l: dict = field(default_factory=lambda: {"a": 1.76e-11, "m": 1.76e-11, "c": 1.76e-11})
    b: dict = field(default_factory=lambda: {"a": 0.0, "m": 0.0, "c": 0.0})
    D1: object = 1e-5
    D2: object = 1e-5
    D12: object = 0.0
    D21: object = 0.0
    rhoS1: object = 0.0
    rhoS2: object = 0.0
    dufour1: object = 0.0
    dufour2: object = 0.0
    k: object = 0.3
    sigma: object = 100.0
    sigma_m: object = 10.0
    alpha_S: object = 0.0
    Pi: object = None
    kappa: object = None
    beta: object = 1.0
    h_c: object = 1000.0
    bv: ButlerVolmerData = field(default_factory=ButlerVolmerData)
    rho_1m: float = 1.0
    rho_water: float = 970.0
    rho_air: float = 0.995
    theta_range: tuple = (320.0, 390.0)

    def __post_init__(self):
        lo, hi = self.theta_range
        if not 0 < lo <= hi:
            raise CoefficientError(f"theta_range must satisfy 0 < lo <= hi, got {self.theta_range}")
        clamp = (float(lo), float(hi))

        def fix(m):
            return dataclasses.replace(m, clamp=clamp) if m.clamp is None else m

        regions = {
            "mu": SUBDOMAINS, "lam": FLUID, "D1": SUBDOMAINS, "D2": SUBDOMAINS, "D12": ("m",), "D21": ("m",),
            "rhoS1": SUBDOMAINS, "rhoS2": SUBDOMAINS, "dufour1": SUBDOMAINS, "dufour2": SUBDOMAINS,
            "k": SUBDOMAINS, "sigma": GDL,
        }
        for name, subs in regions.items():
            rm = _region_model(getattr(self, name), subs)
            object.__setattr__(self, name, {s: fix(m) for s, m in rm.items()})
        for name in ("sigma_m", "alpha_S", "beta", "h_c", "Pi", "kappa"):
            v = getattr(self, name)
            if v is None:
                continue
            if isinstance(v, (int, float)):
                v = ThetaModel.const(v)
            object.__setattr__(self, name, fix(v))
        for name in ("K_l", "b"):
            d = getattr(self, name)
            if isinstance(d, (int, float)):
                d = {s: float(d) for s in POROUS}
            if set(d) != set(POROUS):
                raise CoefficientError(f"{name} needs values for regions {POROUS}")
            object.__setattr__(self, name, dict(d))
        if self.b["m"] != 0:
            raise CoefficientError("the Klinkenberg correction vanishes in the membrane (b_m = 0)")
        if self.rho_1m <= 0:
            raise CoefficientError("rho_1m must be positive")
        bad = self.bounds.violations()
        if bad:
            raise CoefficientError("; ".join(bad))

    # ------------------------------------------------------------------ evaluation
    def region(self, name: str, sub_idx, theta) -> np.ndarray:
        """Evaluate the region-wise model ``name`` at points with region index ``sub_idx``."""
        models = getattr(self, name)
        sub_idx = np.asarray(sub_idx)
        theta = np.broadcast_to(np.asarray(theta, dtype=float), sub_idx.shape)
        out = np.zeros(sub_idx.shape)
        for s, m in models.items():
            mask = sub_idx == SUBDOMAINS.index(s)
            if mask.any():
                out[mask] = m(theta[mask])
        return out

    def peltier(self, theta) -> np.ndarray:
        """Π(θ); derived from the first Kelvin relation Π = θ α_S(θ) unless given."""
        if self.Pi is not None:
            return self.Pi(theta)
        t = np.clip(np.asarray(theta, dtype=float), *self.theta_range)
        return t * self.alpha_S(t)

    def kappa_m(self, theta) -> np.ndarray:
        """Proton conductivity-type coefficient κ(θ) = F D_1(θ) in the membrane unless given."""
        if self.kappa is not None:
            return self.kappa(theta)
        return self.constants.F * self.D1["m"](theta)

    def kappa_over_theta(self, theta) -> np.ndarray:
        """κ(θ) / (R θ) with θ floored at T^#, the form entering the species-1 equation."""
        t = np.maximum(np.asarray(theta, dtype=float), self.bounds.T_sharp)
        return self.kappa_m(theta) / (self.constants.R * t)

    def kappa_consistent(self) -> bool:
        """Whether κ equals F D_1 (the two ways of writing the species-potential cross term agree)."""
        if self.kappa is None:
            return True
        t = np.linspace(*self.theta_range, 101)
        return bool(np.allclose(self.kappa(t), self.constants.F * self.D1["m"](t), rtol=1e-12, atol=0))

    def klinkenberg(self, sub_idx, p) -> np.ndarray:
        """K_g = K_l (1 + b/p) with p floored so that K_g stays within [K_l, K_l^#]."""
        sub_idx = np.asarray(sub_idx)
        p = np.broadcast_to(np.asarray(p, dtype=float), sub_idx.shape)
        out = np.zeros(sub_idx.shape)
        for s in POROUS:
            mask = sub_idx == SUBDOMAINS.index(s)
            if not mask.any():
                continue
            Kl, b = self.K_l[s], self.b[s]
            if b == 0:
                out[mask] = Kl
                continue
            if self.bounds.K_l_hi <= Kl:
                raise CoefficientError(f"K_l^# must exceed K_l in region {s} when b > 0")
            floor = b * Kl / (self.bounds.K_l_hi - Kl)
            out[mask] = klinkenberg_permeability(np.maximum(p[mask], floor), Kl, b)
        return out

    def bv_current(self, eta, electrode: str):
        return butler_volmer(eta, electrode, self)

    def replace(self, **kw) -> "CoefficientSet":
        return dataclasses.replace(self, **kw)


# ---------------------------------------------------------------------- laws
def _bv_parts(x):
    """Stable pieces of the Butler-Volmer law in terms of x = |η|/B >= 0."""
    e1 = np.exp(-x)
    one_m_e2 = -np.expm1(-2.0 * x)
    return e1, one_m_e2


def butler_volmer_raw(eta, j0: float, jL: float, B: float) -> np.ndarray:
    """j(η) = jL 2 j0 sinh(η/B) / (jL + 2 j0 sinh(η/B)) for η >= 0, odd extension.

    Evaluated as jL / (1 + jL e^{-x} / (j0 (1 - e^{-2x}))), x = |η|/B, which is
    the same expression multiplied through by e^{-x}: it never overflows and its
    rounded value never exceeds jL.
    """
    eta = np.asarray(eta, dtype=float)
    x = np.abs(eta) / B
    e1, q = _bv_parts(x)
    with np.errstate(divide="ignore", over="ignore"):
        mag = jL / (1.0 + jL * e1 / (j0 * q))
    return np.sign(eta) * mag


def butler_volmer_slope(eta, j0: float, jL: float, B: float) -> np.ndarray:
    """dj/dη, an even function."""
    x = np.abs(np.asarray(eta, dtype=float)) / B
    e1, q = _bv_parts(x)
    return jL**2 * j0 * (e1 + e1**3) / (B * (jL * e1 + j0 * q) ** 2)


def butler_volmer(eta, electrode: str, data: CoefficientSet) -> np.ndarray:
    j0, jL, B = data.bv.params(electrode, data.constants.R, data.constants.F)
    return butler_volmer_raw(eta, j0, jL, B)


def truncate_psi(z, rho_1m: float) -> np.ndarray:
    """ψ(z) = z on [0, ρ_{1,m}], 0 elsewhere."""
    z = np.asarray(z, dtype=float)
    return np.where((z >= 0) & (z <= rho_1m), z, 0.0)


def klinkenberg_permeability(p, K_l: float, b: float) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if b == 0:
        return np.full(p.shape, float(K_l))
    if np.any(p <= 0):
        raise CoefficientError("Klinkenberg permeability needs p > 0 when b > 0")
    return K_l * (1.0 + b / p)


def nernst_einstein_mobility(theta, D1, z, constants: PhysicalConstants | None = None) -> np.ndarray:
    c = constants or PhysicalConstants()
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise CoefficientError("mobility needs a positive temperature")
    return abs(z) * c.F * np.asarray(D1, dtype=float) / (c.R * theta)


# ---------------------------------------------------------------------- boundary data
def smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True)
class BoundaryData:
    """Inlet/outlet data, coolant temperature, cell voltage and lifting choices.

    Species values are given per channel (anode side ``_a``, cathode side ``_c``);
    the density liftings blend the two sides across the membrane with a smoothstep,
    and inlet to outlet along y with a smoothstep, so their normal derivative
    vanishes on the walls.
    """

    u_in: float = 0.0
    u_out: float | None = None
    inlet_profile: str = "plug"
    taper: float = 0.1
    rho1_in: tuple = (0.0, 0.0)
    rho1_out: tuple = (0.0, 0.0)
    rho2_in: tuple = (0.0, 0.0)
    rho2_out: tuple = (0.0, 0.0)
    theta_in: float = 0.0
    theta_out: float = 0.0
    theta_e: float = 0.0
    E_cell: float = 0.0

    def __post_init__(self):
        if self.inlet_profile not in ("plug", "parabolic"):
            raise CoefficientError(f"inlet_profile must be plug or parabolic, got {self.inlet_profile!r}")
        if not 0 < self.taper <= 0.5:
            raise CoefficientError("taper must lie in (0, 0.5]")

    @property
    def outlet_speed(self) -> float:
        return self.u_in if self.u_out is None else self.u_out

    def _profile(self, s):
        s = np.asarray(s, dtype=float)
        if self.inlet_profile == "parabolic":
            return 4.0 * s * (1.0 - s)
        d = np.minimum(s, 1.0 - s)
        return np.clip(d / self.taper, 0.0, 1.0)

    def u0(self, geo: GeometrySpec):
        """Lifting velocity (ux, uy) as a function of (x, y) on the channels."""
        L = geo.L
        x_air = geo.x_breaks()[4]

        def uy(x, y):
            x = np.asarray(x, dtype=float)
            s = np.where(x <= geo.l_f, x / geo.l_f, (x - x_air) / geo.l_f)
            t = smoothstep(np.asarray(y) / L)
            return self._profile(s) * (self.u_in * (1 - t) + self.outlet_speed * t)

        def ux(x, y):
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

        return ux, uy

    def rho0(self, i: int, geo: GeometrySpec):
        vin = (self.rho1_in, self.rho2_in)[i - 1]
        vout = (self.rho1_out, self.rho2_out)[i - 1]
        xb = geo.x_breaks()
        xm0, xm1 = xb[2], xb[3]

        def f(x, y):
            t = smoothstep(np.asarray(y, dtype=float) / geo.L)
            side = smoothstep((np.asarray(x, dtype=float) - xm0) / (xm1 - xm0))
            a = vin[0] * (1 - t) + vout[0] * t
            c = vin[1] * (1 - t) + vout[1] * t
            return a * (1 - side) + c * side

        return f

    def theta0(self, geo: GeometrySpec):
        def f(x, y):
            t = smoothstep(np.asarray(y, dtype=float) / geo.L)
            return self.theta_in * (1 - t) + self.theta_out * t + 0 * np.asarray(x)

        return f

    def theta_e_fn(self):
        te = self.theta_e
        return te if callable(te) else (lambda x, y: np.full(np.shape(x), float(te)))


# ---------------------------------------------------------------------- hypotheses
@dataclass
class HypothesisCheck:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class HypothesisReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def get(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {c.name: {"passed": bool(c.passed), "margin": float(c.margin), "detail": c.detail} for c in self.checks}


def _rel_margin(values, lo=None, hi=None) -> float:
    """Smallest relative distance to the violated side (negative when out of bounds)."""
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        return -np.inf
    m = np.inf
    if lo is not None:
        m = min(m, np.min(v - lo) / max(abs(lo), 1e-300))
    if hi is not None:
        m = min(m, np.min(hi - v) / max(abs(hi), 1e-300))
    return float(m)


def check_hypotheses(coeffs: CoefficientSet, bdata: BoundaryData, geo: GeometrySpec,
                     samples: int = 10_000, seed: int = 0, rtol: float = 1e-12) -> HypothesisReport:
    """Randomized check of the structural hypotheses on viscosities, permeability,
    diffusivities, conductivities, cross coefficients, boundary coefficients,
    Butler-Volmer data and the liftings.

    Temperatures are sampled from the declared range widened by half its length
    on both sides (models are clamped, so this probes the behaviour outside it).
    Positivity of the ellipticity parameters is handled by the ledger.
    """
    if samples < 1:
        raise CoefficientError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    B = coeffs.bounds
    lo, hi = coeffs.theta_range
    span = hi - lo
    th = rng.uniform(max(lo - 0.5 * span, 1e-9), hi + 0.5 * span, samples)
    checks = []

    def add(name, margin, detail=""):
        checks.append(HypothesisCheck(name, bool(margin >= -rtol), float(margin), detail))

    def region_vals(name, subs):
        return np.concatenate([getattr(coeffs, name)[s](th) for s in subs])

    # H1: viscosities and permeability
    mu = region_vals("mu", SUBDOMAINS)
    mu_f = region_vals("mu", FLUID)
    lam = region_vals("lam", FLUID)
    # second-law constraint nu = lam + mu/n >= 0, n = 2; μ also enters the Darcy law on the porous layers
    m1 = min(_rel_margin(mu, B.mu_lo, B.mu_hi), _rel_margin(lam, None, B.lam_hi),
             float(np.min(lam + mu_f / 2.0)) / B.mu_lo)
    p_hi = max(1e6, 10 * max(coeffs.b.values()))
    p = rng.uniform(1e-6 * p_hi, p_hi, samples)
    kg = np.concatenate([coeffs.klinkenberg(np.full(samples, SUBDOMAINS.index(s)), p) for s in POROUS])
    m1 = min(m1, _rel_margin(kg, B.K_l, B.K_l_hi), _rel_margin([min(coeffs.K_l.values())], B.K_l, None))
    add("H1", m1, "mu_lo <= mu <= mu_hi, -mu/2 <= lam <= lam_hi, K_l <= K_g <= K_l_hi")

    # H2: leading coefficients
    outside = ("fuel", "a", "c", "air")
    m2 = min(
        _rel_margin(region_vals("D1", outside), B.D1_lo, B.D1_hi),
        _rel_margin(region_vals("D2", outside), B.D2_lo, B.D2_hi),
        _rel_margin(coeffs.D1["m"](th), B.D1m_lo, B.D1m_hi),
        _rel_margin(coeffs.D2["m"](th), B.D2m_lo, B.D2m_hi),
        _rel_margin(region_vals("k", SUBDOMAINS), B.k_lo, B.k_hi),
        _rel_margin(region_vals("sigma", GDL), B.sigma_lo, B.sigma_hi),
        _rel_margin(coeffs.sigma_m(th), B.sigma_m_lo, B.sigma_m_hi),
    )
    # membrane taper D_1 <= D_1m^# |θ| / T^# where |θ| <= T^#, checked on the declared range
    t_in = np.linspace(lo, hi, 257)
    small = t_in[t_in <= B.T_sharp]
    if len(small):
        m2 = min(m2, _rel_margin(coeffs.D1["m"](small) - B.D1m_hi * small / B.T_sharp, None, 0.0)
                 if B.D1m_hi > 0 else -1.0)
    add("H2", m2, "diffusivities, conductivities and the membrane taper within declared bounds")

    # H3: cross coefficients (absolute bounds)
    pel = coeffs.peltier(th)
    m3 = min(
        _rel_margin(np.abs(pel), None, B.Pi_hi),
        _rel_margin(np.abs(coeffs.alpha_S(th)), None, B.alpha_hi),
        _rel_margin(np.abs(region_vals("rhoS1", SUBDOMAINS)), None, B.S1_hi),
        _rel_margin(np.abs(region_vals("rhoS2", SUBDOMAINS)), None, B.S2_hi),
        _rel_margin(np.abs(region_vals("dufour1", SUBDOMAINS)), None, B.Dp1_hi),
        _rel_margin(np.abs(region_vals("dufour2", SUBDOMAINS)), None, B.Dp2_hi),
        _rel_margin(np.abs(coeffs.D12["m"](th)), None, B.D12_hi),
        _rel_margin(np.abs(coeffs.D21["m"](th)), None, B.D21_hi),
    )
    add("H3", m3, "|Pi|, |alpha_S|, |rho S_i|, |(R/M_i) theta^2 D'_i|, |D_ij| within bounds")
    if coeffs.Pi is not None:
        t = np.clip(th, lo, hi)
        res = float(np.max(np.abs(coeffs.Pi(t) - t * coeffs.alpha_S(t))))
        scale = max(float(np.max(np.abs(coeffs.Pi(t)))), 1e-300)
        checks.append(HypothesisCheck("kelvin", res <= 1e-12 * scale, -res / scale,
                                      "Pi(theta) = theta alpha_S(theta)"))
    checks.append(HypothesisCheck("kappa", coeffs.kappa_consistent(), 0.0 if coeffs.kappa_consistent() else -1.0,
                                  "kappa = F D_1 in the membrane"))

    # H4, H5
    add("H4", _rel_margin(coeffs.beta(th), B.beta_lo, B.beta_hi), "beta_lo <= beta <= beta_hi")
    add("H5", _rel_margin(coeffs.h_c(th), B.h_lo, B.h_hi), "h_lo <= h_c <= h_hi")

    # H6: Butler-Volmer increasing, odd, saturating
    m6 = np.inf
    for el in ("a", "c"):
        j0, jL, Bt = coeffs.bv.params(el, coeffs.constants.R, coeffs.constants.F)
        eta = np.sort(rng.normal(0, 5 * Bt, samples))
        j = butler_volmer_raw(eta, j0, jL, Bt)
        odd = np.max(np.abs(j + butler_volmer_raw(-eta, j0, jL, Bt)))
        m6 = min(m6, float(np.min(np.diff(j))) / jL, -odd / jL, _rel_margin(np.abs(j), None, jL))
    add("H6", m6, "j_a, j_c odd, nondecreasing and bounded by j_L")

    # H7-H9: liftings
    xs = rng.uniform(0, geo.width, samples)
    ys = rng.uniform(0, geo.L, samples)
    xb = geo.x_breaks()
    in_fuel = rng.uniform(0, geo.l_f, samples)
    in_air = rng.uniform(xb[4], xb[5], samples)
    ux, uy = bdata.u0(geo)
    prof = bdata._profile(in_fuel / geo.l_f)
    m7 = -float(np.max(np.abs(uy(in_fuel, 0 * in_fuel) - bdata.u_in * prof)))
    m7 = min(m7, -float(np.max(np.abs(uy(in_air, geo.L + 0 * in_air) - bdata.outlet_speed * bdata._profile((in_air - xb[4]) / geo.l_f)))))
    walls = np.concatenate([uy(np.zeros(10), np.linspace(0, geo.L, 10)), uy(np.full(10, geo.l_f), np.linspace(0, geo.L, 10))])
    m7 = min(m7, -float(np.max(np.abs(walls))))
    add("H7", m7, "velocity lifting matches inlet/outlet data and vanishes on walls and interface")

    xmem = rng.uniform(xb[2], xb[3], samples)
    r1m = bdata.rho0(1, geo)(xmem, ys)
    m8 = min(float(np.min(r1m)), coeffs.rho_1m - float(np.max(r1m))) / coeffs.rho_1m
    add("H8", m8, "0 <= rho_{1,0} <= rho_{1,m} in the membrane")
    t0 = bdata.theta0(geo)
    m9 = -max(abs(float(np.max(np.abs(t0(xs, 0 * ys) - bdata.theta_in)))),
              abs(float(np.max(np.abs(t0(xs, geo.L + 0 * ys) - bdata.theta_out)))))
    add("H9", m9, "temperature lifting matches inlet/outlet data")
    return HypothesisReport(checks)
