"""Explicit constants of the existence theory, ε-parameter search and the smallness verdict."""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import Bounds, PhysicalConstants

log = logging.getLogger(__name__)

SQ2 = math.sqrt(2.0)
ROOT1_LIN = 2.0 * (1.0 + 2.0 * SQ2)  # coefficient of sqrt(L) t in the first polynomial
ROOT2_LIN = 0.5 + SQ2                # coefficient of sqrt(L) t in the second polynomial


class LedgerError(ValueError):
    pass


@dataclass(frozen=True)
class EpsilonVector:
    e1: float = 0.1
    e2: float = 0.1
    e3: float = 0.1
    e4: float = 0.1
    e5: float = 0.1
    e6: float = 0.1
    e7: float = 0.1
    e8: float = 0.1
    e9: float = 0.1

    def __post_init__(self):
        bad = self.violations()
        if bad:
            raise LedgerError("epsilon box violated: " + "; ".join(bad))

    def violations(self) -> list[str]:
        v = self.as_array()
        out = [f"e{k + 1} = {x} must be positive" for k, x in enumerate(v) if not (np.isfinite(x) and x > 0)]
        e = v
        if not e[0] + e[1] + e[2] < 1:
            out.append("e1 + e2 + e3 < 1")
        if not e[3] + e[4] < 1:
            out.append("e4 + e5 < 1")
        if not e[5] + e[6] < 1:
            out.append("e6 + e7 < 1")
        if not e[7] + e[8] < 2:
            out.append("e8 + e9 < 2")
        return out

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f"e{k}") for k in range(1, 10)], dtype=float)

    @classmethod
    def from_array(cls, a) -> "EpsilonVector":
        return cls(*[float(x) for x in a])

    @staticmethod
    def feasible(a) -> bool:
        a = np.asarray(a)
        return bool(np.all(a > 0) and a[0] + a[1] + a[2] < 1 and a[3] + a[4] < 1 and a[5] + a[6] < 1 and a[7] + a[8] < 2)

    def to_dict(self) -> dict:
        return {f"eps{k}": float(getattr(self, f"e{k}")) for k in range(1, 10)}


@dataclass(frozen=True)
class AParams:
    a1_sharp: float
    a1_m: float
    a2_sharp: float
    a2_m: float
    a3_sharp: float
    a3_m: float
    a4_m: float

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def minimum(self) -> float:
        return min(self.as_dict().values())

    @property
    def a3(self) -> float:
        return min(self.a3_sharp, self.a3_m)


def kappa_sharp(bounds: Bounds, constants: PhysicalConstants, mode: str = "definition") -> float:
    """κ^# = F D_{1,m}^# / (R T^#) (``"definition"``) or F D_{1,m}^# (``"proof"``)."""
    if mode == "definition":
        return constants.F * bounds.D1m_hi / (constants.R * bounds.T_sharp)
    if mode == "proof":
        return constants.F * bounds.D1m_hi
    raise LedgerError(f"unknown kappa mode {mode!r}")


def compute_a_params(bounds: Bounds, eps: EpsilonVector, rho_1m: float, kappa: float,
                     constants: PhysicalConstants) -> AParams:
    """Ellipticity parameters; negative values are returned as they are."""
    B, e = bounds, eps
    F, M1 = constants.F, constants.M1
    dufour1 = B.Dp1_hi**2 / (e.e6 * B.k_lo)
    dufour2 = B.Dp2_hi**2 / (e.e6 * B.k_lo)
    a1s = (1 - e.e1 - e.e2 - e.e3) / 2 * B.D1_lo - dufour1
    a1m = ((1 - e.e1 - e.e3) / 2 * B.D1m_lo - dufour1 - B.D21_hi**2 / (e.e4 * B.D2m_lo)
           - F**2 / (e.e8 * M1**2) * B.D1m_hi**2 / B.sigma_m_lo)
    a2s = (1 - e.e4 - e.e5) / 2 * B.D2_lo - dufour2
    a2m = (1 - e.e4) / 2 * B.D2m_lo - dufour2 - B.D12_hi**2 / (e.e1 * B.D1m_lo)
    a3s = (1 - e.e6 - e.e7) / 2 * B.k_lo - B.S1_hi**2 / (e.e2 * B.D1_lo) - B.S2_hi**2 / (e.e5 * B.D2_lo)
    a3m = ((1 - e.e7) / 2 * B.k_lo - B.S1_hi**2 / (e.e2 * B.D1m_lo) - B.S2_hi**2 / (e.e5 * B.D2m_lo)
           - B.alpha_hi**2 * B.sigma_hi / e.e9)
    a4m = (B.sigma_m_lo * (1 - (e.e8 + e.e9) / 2 - B.Pi_hi**2 * B.sigma_m_hi / (2 * e.e7 * B.k_lo))
           - (rho_1m * kappa) ** 2 / (2 * e.e3 * B.D1m_lo))
    return AParams(a1s, a1m, a2s, a2m, a3s, a3m, a4m)


def a_sharp(ap: AParams, include_a4: bool = False) -> float:
    """Smallest of a_{i,#}, a_{i,m} over i = 1, 2, 3 (optionally also a_{4,m})."""
    vals = [ap.a1_sharp, ap.a1_m, ap.a2_sharp, ap.a2_m, ap.a3_sharp, ap.a3_m]
    if include_a4:
        vals.append(ap.a4_m)
    return min(vals)


def a_gap(ap: AParams, indices=(1, 2)) -> float:
    """min_i (a_{i,#} - a_{i,m}) over the chosen indices."""
    d = ap.as_dict()
    return min(d[f"a{i}_sharp"] - d[f"a{i}_m"] for i in indices)


# ---------------------------------------------------------------------- roots
def positive_root(c: float, b: float, a: float) -> float:
    """Positive root of c - b t - a t² = 0 for a, b >= 0, via t = 2c / (b + sqrt(b² + 4ac)).

    Returns 0 when c <= 0 (no positive root).
    """
    if a < 0 or b < 0:
        raise LedgerError("positive_root expects a, b >= 0")
    if c <= 0:
        return 0.0
    disc = b * b + 4.0 * a * c
    if disc < 0:
        raise LedgerError("negative discriminant")
    return 2.0 * c / (b + math.sqrt(disc))


def bisect_root(c: float, b: float, a: float, tol: float = 1e-15, max_iter: int = 400) -> float:
    """Same root by bisection on the decreasing polynomial, as an independent check.

    Stops when the bracket is ``tol`` relative to its upper end.
    """
    if c <= 0:
        return 0.0
    f = lambda t: c - b * t - a * t * t
    lo, hi = 0.0, 1.0
    while f(hi) > 0:
        hi *= 2.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    return 0.5 * (lo + hi)


def root1_coeffs(L: float, a_min_sharp: float):
    return 4.0 * a_min_sharp, ROOT1_LIN * math.sqrt(L), L


def root2_coeffs(L: float, gap: float):
    return gap, ROOT2_LIN * math.sqrt(L), L / 4.0


def compute_roots(L: float, a_min_sharp: float, a_gap_min: float, check: bool = True):
    """(root1, root2) of 4 a_min - 2(1+2√2)√L t - L t² and gap - (1/2+√2)√L t - (L/4) t²."""
    if not L > 0:
        raise LedgerError("L must be positive")
    r1 = positive_root(*root1_coeffs(L, a_min_sharp))
    r2 = positive_root(*root2_coeffs(L, a_gap_min))
    if check:
        for r, co in ((r1, root1_coeffs(L, a_min_sharp)), (r2, root2_coeffs(L, a_gap_min))):
            rb = bisect_root(*co)
            if abs(r - rb) > 1e-9 * max(1.0, abs(r)):
                raise LedgerError(f"root mismatch: formula {r} vs bisection {rb}")
    return r1, r2


# ---------------------------------------------------------------------- C0, B0, R3
def compute_C0(mu_hi: float, mu_lo: float, lam_hi: float, Du0_norm: float, div_u0_norm: float) -> float:
    return math.sqrt(mu_hi) * Du0_norm + lam_hi / math.sqrt(mu_lo) * div_u0_norm


@dataclass(frozen=True)
class LiftingNorms:
    """Norms of the liftings entering C0 and B0."""

    Du0: float = 0.0
    div_u0: float = 0.0
    grad_rho0: tuple = (0.0, 0.0)       # ||∇ρ_{i,0}|| on Ω
    grad_rho0_m: tuple = (0.0, 0.0)     # ||∇ρ_{i,0}|| on Ω_m
    rho0_inf_f: tuple = (0.0, 0.0)      # ||ρ_{i,0}||_∞ on Ω_f
    grad_theta0: float = 0.0            # ||∇θ_0|| on Ω
    grad_theta0_m: float = 0.0          # ||∇θ_0|| on Ω_m
    theta_e_wall: float = 0.0           # ||θ_e|| on Γ_w


def compute_B0(bounds: Bounds, eps: EpsilonVector, constants: PhysicalConstants, norms: LiftingNorms,
               L: float, kappa: float, theta_coef: str = "kappa") -> float:
    """Lifting contribution to the right-hand side of the density/temperature/potential estimate.

    ``theta_coef`` selects the factor of ||∇θ_0||²/2: ``"kappa"`` (κ^#, as written)
    or ``"k"`` (k^#).
    """
    B, e = bounds, eps
    Dhi = (B.D1_hi, B.D2_hi)
    Dp = (B.Dp1_hi, B.Dp2_hi)
    Dm_lo = (B.D1m_lo, B.D2m_lo)
    Dij = {(1, 2): B.D12_hi, (2, 1): B.D21_hi}
    S = (B.S1_hi, B.S2_hi)
    g, gm, rinf = norms.grad_rho0, norms.grad_rho0_m, norms.rho0_inf_f
    total = 0.0
    for i in range(2):
        total += (Dhi[i] / 2 + 2.0 / e.e6 * Dp[i] ** 2 / B.k_lo) * g[i] ** 2
    for (i, j), d in Dij.items():
        total += d**2 / (e.e1 * Dm_lo[i - 1]) * gm[j - 1] ** 2
    total += constants.F**2 / (e.e8 * constants.M1**2) * B.D1m_hi**2 / B.sigma_m_lo * gm[0] ** 2
    total += L * (rinf[0] ** 2 + rinf[1] ** 2)
    if theta_coef == "kappa":
        c = kappa
    elif theta_coef == "k":
        c = B.k_hi
    else:
        raise LedgerError(f"unknown theta_coef {theta_coef!r}")
    total += c / 2 * norms.grad_theta0**2
    total += (S[0] ** 2 + S[1] ** 2) / (e.e2 * B.k_lo) * norms.grad_theta0**2
    total += B.sigma_m_hi * B.alpha_hi**2 / e.e9 * norms.grad_theta0_m**2
    return float(total)


def compute_R3(sigma_lo: float, sigma_hi: float, M_r: float, j_L: float, gamma_cl: float) -> float:
    """Bound on the potential gradient in the gas diffusion layers."""
    if sigma_lo > sigma_hi or sigma_lo <= 0:
        raise LedgerError("need 0 < sigma_lo <= sigma_hi")
    root = math.sqrt(max(sigma_hi**2 - sigma_lo**2, 0.0))
    if root > 0 and not M_r < sigma_hi / root:
        raise LedgerError(f"M_r = {M_r} violates M_r < sigma^#/sqrt(sigma^#² - sigma_#²) = {sigma_hi / root}")
    denom = sigma_hi * (sigma_hi - M_r * root)
    return sigma_lo * M_r * j_L * gamma_cl / denom


# ---------------------------------------------------------------------- options & report
@dataclass(frozen=True)
class LedgerOptions:
    kappa_mode: str = "definition"     # or "proof"
    b0_theta_coef: str = "kappa"       # or "k"
    include_a4: bool = False           # a_# over i = 1, 2, 3 only by default
    gap_indices: tuple = (1, 2)        # index set of the second polynomial
    C_K: float | None = None           # None: estimate + safety factor
    korn_safety: float = 1.1
    M_r: float = 1.0
    j_L: float | None = None           # None: cathode limiting current


@dataclass
class LedgerReport:
    eps: EpsilonVector
    a: AParams
    kappa_sharp: float
    a_sharp: float
    a_gap: float
    C0: float
    B0: float
    C_K: float
    R_M: float
    L: float
    theta_e_wall: float
    a_coef: float
    root1: float
    root2: float
    b: float
    R1: float
    R2: float
    R3: float
    rhs: float
    margin: float
    verdict: bool
    roots_ordered: bool
    margin_with_joule: float
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {"eps": self.eps.to_dict()}
        d.update({k: float(v) for k, v in self.a.as_dict().items()})
        for k in ("kappa_sharp", "a_sharp", "a_gap", "C0", "B0", "C_K", "R_M", "L", "theta_e_wall", "root1",
                  "root2", "b", "R1", "R2", "R3", "rhs", "margin", "margin_with_joule"):
            d[k] = float(getattr(self, k))
        d["a"] = float(self.a_coef)
        d["verdict"] = bool(self.verdict)
        d["roots_ordered"] = bool(self.roots_ordered)
        d["notes"] = list(self.notes)
        return d


def smallness_verdict(root2: float, C0: float, C_K: float, mu_lo: float, L: float, R_M: float,
                      a_sharp_value: float, h_hi: float, theta_e_wall: float, B0: float):
    """(verdict, margin, rhs) for root2 > sqrt(2 C_K/μ_#) C0 + sqrt(C_K L)(R_M/μ_#)(1/a_#)(h^# ||θ_e||² + 2 B0)."""
    if a_sharp_value <= 0:
        return False, -math.inf, math.inf
    rhs = (math.sqrt(2 * C_K / mu_lo) * C0
           + math.sqrt(C_K * L) * R_M / mu_lo / a_sharp_value * (h_hi * theta_e_wall**2 + 2 * B0))
    margin = root2 - rhs
    return bool(margin > 0), float(margin), float(rhs)


def build_ledger(bounds: Bounds, constants: PhysicalConstants, geo_L: float, l_gamma_cl: float,
                 norms: LiftingNorms, rho_1m: float, eps: EpsilonVector, jL_c: float,
                 options: LedgerOptions = LedgerOptions(), C_K_estimate: float | None = None) -> LedgerReport:
    """Evaluate every constant and the verdict.

    ``l_gamma_cl`` is the measure of the two catalyst interfaces.
    """
    notes = []
    kap = kappa_sharp(bounds, constants, options.kappa_mode)
    ap = compute_a_params(bounds, eps, rho_1m, kap, constants)
    a_s = a_sharp(ap, options.include_a4)
    gap = a_gap(ap, options.gap_indices)
    if options.C_K is not None:
        C_K = options.C_K
    elif C_K_estimate is not None:
        C_K = options.korn_safety * C_K_estimate
    else:
        raise LedgerError("no Korn constant: set C_K or supply an estimate")
    if C_K < 1:
        raise LedgerError(f"Korn constant must be >= 1, got {C_K}")
    L = geo_L
    C0 = compute_C0(bounds.mu_hi, bounds.mu_lo, bounds.lam_hi, norms.Du0, norms.div_u0)
    B0 = compute_B0(bounds, eps, constants, norms, L, kap, options.b0_theta_coef)
    a_min_sharp = min(ap.a1_sharp, ap.a2_sharp, ap.a3_sharp)
    root1, root2 = compute_roots(L, a_min_sharp, gap)
    R_M = constants.R_M
    a_coef = 2 * math.sqrt(C_K * L) * R_M / bounds.mu_lo
    shift = math.sqrt(2 * C_K / bounds.mu_lo) * C0
    b = root1 - shift
    R2sq = (root2 - shift) / a_coef
    R2 = math.sqrt(R2sq) if R2sq > 0 else float("nan")
    R1 = math.sqrt(bounds.mu_hi / bounds.K_l) * (math.sqrt(2 * L) * R_M / math.sqrt(bounds.mu_lo) * max(R2sq, 0) + C0)
    j_L = options.j_L if options.j_L is not None else jL_c
    try:
        R3 = compute_R3(bounds.sigma_lo, bounds.sigma_hi, options.M_r, j_L, l_gamma_cl)
    except LedgerError as exc:
        notes.append(str(exc))
        R3 = math.inf
    verdict, margin, rhs = smallness_verdict(root2, C0, C_K, bounds.mu_lo, L, R_M, a_s, bounds.h_hi,
                                             norms.theta_e_wall, B0)
    if ap.minimum() <= 0:
        notes.append("some ellipticity parameter is not positive")
        verdict = False
    roots_ordered = root2 < root1
    if not roots_ordered:
        notes.append("root2 < root1 fails")
    c = bounds.h_hi / 2 * norms.theta_e_wall**2 + B0
    joule = bounds.sigma_hi**2 / bounds.k_lo * R3**2
    margin_j = root2 - shift - a_coef * (joule + c) / a_s if a_s > 0 else -math.inf
    return LedgerReport(eps, ap, kap, a_s, gap, C0, B0, C_K, R_M, L, norms.theta_e_wall, a_coef, root1, root2, b,
                        R1, R2, R3, rhs, margin, verdict, roots_ordered, float(margin_j), notes)


# ---------------------------------------------------------------------- ε search
def _project(x, floor, tie):
    x = np.maximum(np.asarray(x, dtype=float), floor)
    if tie:
        x[3], x[4] = x[0], x[1]
    return x


def _random_feasible(rng, floor, tie):
    x = np.concatenate([rng.dirichlet(np.ones(4))[:3], rng.dirichlet(np.ones(3))[:2],
                        rng.dirichlet(np.ones(3))[:2], 2 * rng.dirichlet(np.ones(3))[:2]])
    return _project(x, floor, tie)


def optimize_epsilons(objective, floor: float = 1e-6, tie: bool = False, restarts: int = 8,
                      seed: int = 0, start=None, min_step: float = 1e-9, max_evals: int = 200_000):
    """Coordinate pattern search for the ε maximizing ``objective(EpsilonVector)``.

    Moves are accepted only if they strictly improve the objective and keep ε in
    the open constraint box with every entry >= ``floor``. Returns
    ``(best_eps, best_value, history)`` where ``history`` lists the accepted values.
    """
    rng = np.random.default_rng(seed)
    starts = [np.full(9, 0.1) if start is None else np.asarray(start, dtype=float)]
    starts += [_random_feasible(rng, floor, tie) for _ in range(max(restarts - 1, 0))]
    coords = [0, 1, 2, 5, 6, 7, 8] if tie else list(range(9))

    def value(x):
        x = _project(x, floor, tie)
        if not EpsilonVector.feasible(x):
            return -math.inf
        try:
            v = objective(EpsilonVector.from_array(x))
        except (LedgerError, ValueError, ZeroDivisionError):
            return -math.inf
        return float(v) if np.isfinite(v) else -math.inf

    best_x, best_v, history = None, -math.inf, []
    evals = 0
    for x0 in starts:
        x = _project(x0, floor, tie)
        if not EpsilonVector.feasible(x):
            continue
        v = value(x)
        step = 0.25
        while step > min_step and evals < max_evals:
            improved = False
            for k in coords:
                for cand_val in (x[k] + step, x[k] - step, x[k] * (1 + step), x[k] / (1 + step)):
                    if cand_val < floor:
                        cand_val = floor
                    y = x.copy()
                    y[k] = cand_val
                    vy = value(y)
                    evals += 1
                    if vy > v:
                        x, v, improved = _project(y, floor, tie), vy, True
                        if v > best_v:
                            history.append(v)
                        break
            if not improved:
                step *= 0.5
        if v > best_v:
            best_x, best_v = x, v
            history.append(v)
    if best_x is None:
        raise LedgerError("no feasible epsilon found")
    return EpsilonVector.from_array(best_x), best_v, history


def min_a_objective(bounds: Bounds, constants: PhysicalConstants, rho_1m: float, kappa: float):
    def f(eps):
        return compute_a_params(bounds, eps, rho_1m, kappa, constants).minimum()
    return f


# ---------------------------------------------------------------------- order-of-magnitude checks
def _round_sig(x: float, digits: int = 2) -> float:
    if x == 0 or not math.isfinite(x):
        return x
    return round(x, digits - 1 - int(math.floor(math.log10(abs(x)))))


def slip_coefficient_order(K: float) -> float:
    """Order of magnitude of the slip coefficient, 10^round(log10(1/sqrt(K)))."""
    if K <= 0:
        raise LedgerError("permeability must be positive")
    return 10.0 ** round(math.log10(1.0 / math.sqrt(K)))


def sanity_arithmetic(sigma_hi: float = 120.0, alpha_hi: float = 0.3 / 320.0, k_lo: float = 0.2,
                      u_in: float = 0.2, K: float = 1.76e-11, sqrt_gamma: tuple = (0.03, 0.1),
                      bracket: tuple = (1.9, 6.3), beta_hi: float | None = None) -> dict:
    """Order-of-magnitude checks on SI operating data.

    * Seebeck bound: α^# < sqrt(k_#/σ^#).
    * Slip load: sqrt(β^#) u_in |Γ|^{1/2} over the given range of |Γ|^{1/2}; the
      endpoints, rounded to two significant digits, must lie in ``bracket``.
    """
    thr = math.sqrt(k_lo / sigma_hi)
    beta = slip_coefficient_order(K) if beta_hi is None else beta_hi
    lo, hi = (math.sqrt(beta) * u_in * g for g in sqrt_gamma)
    in_bracket = bracket[0] <= _round_sig(lo) and _round_sig(hi) <= bracket[1]
    return {"seebeck_threshold": thr, "alpha_hi": alpha_hi, "seebeck_ok": bool(alpha_hi < thr),
            "beta_hi": beta, "slip_load": (lo, hi), "slip_load_rounded": (_round_sig(lo), _round_sig(hi)),
            "bracket": tuple(bracket), "slip_ok": bool(in_bracket)}
