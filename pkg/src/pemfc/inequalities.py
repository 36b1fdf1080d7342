"""Numerical certification of the Poincaré, trace, Sobolev and trilinear bounds,
and the discrete Korn constant.

Every bound is a statement about H¹ functions with some vanishing traces, so it
must hold for Q1 functions with the same constraints. Each case samples random
fields (white noise and smooth random modes) plus adversarial fields obtained by
maximizing the ratio LHS/RHS (generalized eigenvectors for quadratic ratios,
nonlinear power iterations otherwise), and records the worst ratio.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem import DiscreteSpace, SolverError, VectorSpace, assemble_form
from .geometry import (CC_TAGS, FLUID, GAMMA, GAMMA_A, GAMMA_C, INLET, OUTLET, POROUS, WALL, WALL_TAGS,
                       GeometrySpec, MultidomainMesh, Resolution, build_mesh)

log = logging.getLogger(__name__)

ORDER = 5  # three Gauss points per direction: exact for v⁴ and trilinear Q1 integrands


# ---------------------------------------------------------------------- discrete functionals
def _vol(space, region=None):
    return space.volume(region, ORDER)


def l2sq(space, v, region=None) -> float:
    vo = _vol(space, region)
    return float(vo.w @ (vo.E @ v) ** 2)


def lp(space, v, p, region=None) -> float:
    vo = _vol(space, region)
    return float((vo.w @ np.abs(vo.E @ v) ** p) ** (1.0 / p))


def gradsq(space, v, region=None) -> float:
    vo = _vol(space, region)
    return float(vo.w @ ((vo.Gx @ v) ** 2 + (vo.Gy @ v) ** 2))


def grad_lp(space, v, p, region=None) -> float:
    vo = _vol(space, region)
    m = np.sqrt((vo.Gx @ v) ** 2 + (vo.Gy @ v) ** 2)
    return float((vo.w @ m**p) ** (1.0 / p))


def trace_sq(space, v, tags, side=None) -> float:
    fo = space.facet(tags, side, ORDER)
    return float(fo.w @ (fo.T @ v) ** 2)


def trace_l1(space, v, tags, side=None) -> float:
    """Exact ∫|v| ds of the piecewise-linear trace."""
    mesh = space.mesh
    facets = mesh.facets(tags)
    cells, local, ok = space._facet_cells(facets, side, strict=not side)
    dofs = space.cell_dofs[space.cell_pos[cells][:, None], local]
    h = mesh.facet_length[facets[ok]]
    a, b = v[dofs[:, 0]], v[dofs[:, 1]]
    same = a * b >= 0
    den = np.where(same, 1.0, np.abs(a) + np.abs(b))
    val = np.where(same, 0.5 * np.abs(a + b), 0.5 * (a * a + b * b) / np.where(den > 0, den, 1.0))
    return float(h @ val)


def div_sq(vs: VectorSpace, u, region=FLUID) -> float:
    cx, cy = vs.components
    ux, uy = vs.split(u)
    ox, oy = _vol(cx, region), _vol(cy, region)
    return float(ox.w @ (ox.Gx @ ux + oy.Gy @ uy) ** 2)


def vec_gradsq(vs: VectorSpace, u, region=FLUID) -> float:
    return sum(gradsq(c, x, region) for c, x in zip(vs.components, vs.split(u)))


def symgrad_sq(vs: VectorSpace, u, region=FLUID) -> float:
    cx, cy = vs.components
    ux, uy = vs.split(u)
    ox, oy = _vol(cx, region), _vol(cy, region)
    a, b, c, d = ox.Gx @ ux, ox.Gy @ ux, oy.Gx @ uy, oy.Gy @ uy
    return float(ox.w @ (a * a + d * d + 0.5 * (b + c) ** 2))


def korn_ratio(vs: VectorSpace, u) -> float:
    """||∇u||² / ||Du||² (0 when both vanish, inf when only Du vanishes)."""
    g, d = vec_gradsq(vs, u), symgrad_sq(vs, u)
    if d == 0:
        return 0.0 if g == 0 else math.inf
    return g / d


def _ratio(lhs, rhs):
    if rhs <= 0:
        return 0.0 if lhs <= 0 else math.inf
    return lhs / rhs


# ---------------------------------------------------------------------- cases
@dataclass
class InequalityCase:
    """One certified bound: ``lhs(*fields) <= rhs(*fields)`` over constrained discrete fields."""

    name: str
    description: str
    spaces: tuple
    lhs: object
    rhs: object
    adversarial: object = None
    worst_ratio: float = 0.0
    n_evaluated: int = 0
    worst_kind: str = ""

    def ratio(self, fields) -> float:
        return _ratio(self.lhs(*fields), self.rhs(*fields))


@dataclass
class CaseResult:
    name: str
    worst_ratio: float
    n_samples: int
    worst_kind: str
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "worst_ratio": self.worst_ratio, "n_samples": self.n_samples,
                "worst_kind": self.worst_kind, "passed": self.passed}


def _zero_fixed(space, x):
    x = np.array(x, dtype=float)
    x[space.fixed_dofs] = 0.0
    return x


def _project(space, v):
    return _zero_fixed(space, v)


def random_field(space, rng, kind: str = "noise"):
    """Random constrained field: i.i.d. nodal noise or a smooth random Fourier sum."""
    if isinstance(space, VectorSpace):
        return np.concatenate([random_field(c, rng, kind) for c in space.components])
    if kind == "noise":
        v = rng.standard_normal(space.n)
    elif kind == "smooth":
        xy = space.coords
        lo, hi = xy.min(axis=0), xy.max(axis=0)
        span = np.maximum(hi - lo, 1e-300)
        s = (xy - lo) / span
        v = np.zeros(space.n)
        for _ in range(6):
            kx, ky = rng.integers(0, 5, 2)
            px, py = rng.uniform(0, 2 * np.pi, 2)
            v += rng.standard_normal() * np.cos(np.pi * kx * s[:, 0] + px) * np.cos(np.pi * ky * s[:, 1] + py)
        if space.pieces and len(space.pieces) > 1:
            v += rng.standard_normal(len(space.pieces))[space.dof_piece]
    else:
        raise ValueError(f"unknown field kind {kind!r}")
    return _project(space, v)


def _restrict(space, M):
    f = space.free_dofs
    return M[f][:, f].tocsc(), f


def top_generalized(A, B, space, k=3, tol=1e-10):
    """Leading eigenvectors of A x = λ B x on the free DOFs (B SPD there)."""
    Af, f = _restrict(space, A)
    Bf, _ = _restrict(space, B)
    n = Af.shape[0]
    k = max(1, min(k, n - 2))
    lu = spla.splu(Bf)
    Minv = spla.LinearOperator(Bf.shape, matvec=lu.solve, dtype=float)
    try:
        vals, vecs = spla.eigsh(Af, k=k, M=Bf, Minv=Minv, which="LA", tol=tol, maxiter=20 * n)
    except spla.ArpackNoConvergence as exc:
        vals, vecs = exc.eigenvalues, exc.eigenvectors
        if len(vals) == 0:
            raise SolverError("generalized eigen-iteration stagnated") from exc
    out = []
    for j in np.argsort(vals)[::-1]:
        x = np.zeros(space.n)
        x[f] = vecs[:, j]
        out.append(x)
    return np.asarray(vals)[np.argsort(vals)[::-1]], out


def _power_l4(space, B, v0, iters=40):
    """Fixed-point iteration for max ||v||_4^4 / (v^T B v)^2: v <- B^{-1} E^T(w (Ev)^3)."""
    Bf, f = _restrict(space, B)
    lu = spla.splu(Bf)
    vo = _vol(space)
    v = v0.copy()
    for _ in range(iters):
        g = vo.E.T @ (vo.w * (vo.E @ v) ** 3)
        x = np.zeros(space.n)
        x[f] = lu.solve(g[f])
        nrm = np.sqrt(max(x @ (B @ x), 1e-300))
        if not np.isfinite(nrm) or nrm == 0:
            break
        v = x / nrm
    return v


def _stiff(space, region=None):
    return assemble_form("stiffness", space, region=region, order=2)


def _mass(space, region=None):
    return assemble_form("mass", space, region=region, order=2)


def _bmass(space, tags, side=None):
    return assemble_form("boundary_mass", space, tags=tags, side=side, order=2)


def _alternating(fields0, grads, norms, iters=25):
    """Alternating maximization of a multilinear form over quadratic seminorm balls.

    ``grads[i](fields)`` returns the gradient of the form with respect to field i;
    ``norms[i]`` = (space, SPD matrix on the free DOFs). Each step sets field i to
    N_i^{-1} g_i, the maximizer of <g_i, x>/||x||_{N_i}.
    """
    fields = [f.copy() for f in fields0]
    solvers = []
    for space, N in norms:
        Nf, free = _restrict(space, N)
        solvers.append((spla.splu(Nf), free, space.n))
    for _ in range(iters):
        for i, (lu, free, n) in enumerate(solvers):
            g = grads[i](fields)
            x = np.zeros(n)
            x[free] = lu.solve(g[free])
            s = np.sqrt(max(x @ (norms[i][1] @ x), 1e-300))
            if s > 0 and np.isfinite(s):
                fields[i] = x / s
    return fields


def build_cases(mesh: MultidomainMesh, geo: GeometrySpec) -> dict:
    """All certified bounds on ``mesh``; keys are stable case names."""
    L, lf = geo.L, geo.l_f
    lp_ = geo.l_a + geo.l_m + geo.l_c
    cases = {}
    reg = 1e-8

    # ---- Poincaré in the channels, v = 0 on the inlet
    V_in = DiscreteSpace(mesh, FLUID, dirichlet=INLET, name="v_in")
    K_in, M_in = _stiff(V_in), _mass(V_in)

    def adv_p2(rng):
        _, vecs = top_generalized(M_in, K_in, V_in)
        return [(v,) for v in vecs]

    cases["poincare2"] = InequalityCase(
        "poincare2", "||v||_{Ω_f} <= L/sqrt(2) ||∇v||_{Ω_f}, v = 0 on Γ_in", (V_in,),
        lambda v: math.sqrt(l2sq(V_in, v)), lambda v: L / math.sqrt(2) * math.sqrt(gradsq(V_in, v)), adv_p2)

    # ---- Poincaré in the gas diffusion layers with the wall trace
    V_gdl = DiscreteSpace(mesh, ("a", "c"), name="v_gdl")
    Bw = 2.0 * _bmass(V_gdl, WALL_TAGS, ("a", "c")) + L**2 * _stiff(V_gdl)

    def adv_pva(rng):
        _, vecs = top_generalized(_mass(V_gdl), Bw, V_gdl)
        return [(v,) for v in vecs]

    cases["poincareva"] = InequalityCase(
        "poincareva", "||v||_{Ω_a∪Ω_c} <= (2||v||²_{Γ_w} + L²||∇v||²)^{1/2}", (V_gdl,),
        lambda v: math.sqrt(l2sq(V_gdl, v)),
        lambda v: math.sqrt(2 * trace_sq(V_gdl, v, WALL_TAGS, ("a", "c")) + L**2 * gradsq(V_gdl, v)), adv_pva)

    # ---- L^r Poincaré across the porous layers (continuous functions vanishing at the anode interface)
    V_pr = DiscreteSpace(mesh, POROUS, dirichlet=CC_TAGS + ((GAMMA, "a"),), name="v_pr")
    K_pr = _stiff(V_pr)
    for r in (2, 4):
        c_r = lp_ / r ** (1.0 / r)

        def adv_pr(rng, r=r):
            _, vecs = top_generalized(_mass(V_pr), K_pr, V_pr)
            seeds = [(v,) for v in vecs]
            if r != 2:
                seeds += [(_power_l4(V_pr, K_pr, v),) for v in vecs]
            return seeds

        cases[f"poincarer{r}"] = InequalityCase(
            f"poincarer{r}", f"||v||_{{{r},Ω_p}} <= (l_a+l_m+l_c)/{r}^(1/{r}) ||∇v||_{{{r},Ω_p}}", (V_pr,),
            lambda v, r=r: lp(V_pr, v, r), lambda v, r=r, c_r=c_r: c_r * grad_lp(V_pr, v, r), adv_pr)

    # ---- traces on the catalyst interfaces
    for el, tag, li in (("a", GAMMA_A, geo.l_a), ("c", GAMMA_C, geo.l_c)):
        Vi = DiscreteSpace(mesh, (el,), dirichlet=((GAMMA, el),), name=f"v_{el}")
        Ki, Ti = _stiff(Vi), _bmass(Vi, (tag,), (el,))
        area = li * geo.L

        def adv_g(rng, Vi=Vi, Ki=Ki, Ti=Ti):
            _, vecs = top_generalized(Ti, Ki, Vi)
            return [(v,) for v in vecs]

        cases[f"Gammai_{el}"] = InequalityCase(
            f"Gammai_{el}", f"∫_Γ_{el} v² <= l_{el} ||∇v||²_Ω_{el}, v = 0 on Γ", (Vi,),
            lambda v, Vi=Vi, tag=tag, el=el: trace_sq(Vi, v, (tag,), (el,)),
            lambda v, Vi=Vi, li=li: li * gradsq(Vi, v), adv_g)
        cases[f"Gammai1_{el}"] = InequalityCase(
            f"Gammai1_{el}", f"∫_Γ_{el} |v| <= |Ω_{el}|^(1/2) ||∇v||_Ω_{el}, v = 0 on Γ", (Vi,),
            lambda v, Vi=Vi, tag=tag, el=el: trace_l1(Vi, v, (tag,), (el,)),
            lambda v, Vi=Vi, area=area: math.sqrt(area) * math.sqrt(gradsq(Vi, v)),
            lambda rng, f=adv_g: f(rng) + [(np.abs(v),) for (v,) in f(rng)])

    # ---- L⁴ bounds in the channels
    V_i = DiscreteSpace(mesh, FLUID, dirichlet=INLET + (WALL,), name="v_case_i")
    K_i = _stiff(V_i)
    ci = math.sqrt(lf * L) / 2

    def adv_ci(rng):
        _, vecs = top_generalized(_mass(V_i), K_i, V_i, k=2)
        return [(_power_l4(V_i, K_i, v),) for v in vecs]

    cases["casei2"] = InequalityCase(
        "casei2", "||v||²_4 <= sqrt(l_f L)/2 ||∇v||², v = 0 on the outer wall and the inlet", (V_i,),
        lambda v: lp(V_i, v, 4) ** 2, lambda v: ci * gradsq(V_i, v), adv_ci)

    Bii = _bmass(V_in, (WALL,), FLUID) + max(lf, L) * K_in

    def adv_cii(rng):
        _, vecs = top_generalized(M_in, Bii, V_in, k=2)
        return [(_power_l4(V_in, Bii, v),) for v in vecs]

    cases["caseii2"] = InequalityCase(
        "caseii2", "||v||²_4 <= ||v||²_{Γ_w} + max(l_f, L)||∇v||², v = 0 on the inlet", (V_in,),
        lambda v: lp(V_in, v, 4) ** 2,
        lambda v: trace_sq(V_in, v, (WALL,), FLUID) + max(lf, L) * gradsq(V_in, v), adv_cii)

    # ---- trilinear terms
    V_e = DiscreteSpace(mesh, FLUID, name="e")
    Vv = VectorSpace([DiscreteSpace(mesh, FLUID, name="vx"), DiscreteSpace(mesh, FLUID, name="vy")])
    ox = _vol(Vv.components[0])
    oe = _vol(V_e)
    D_div = assemble_form("div", Vv, region=FLUID, order=2)
    K_vec = assemble_form("stiffness", Vv.components[0], order=2)
    K_vv = sp.block_diag([K_vec, K_vec]).tocsr()
    M_vv = sp.block_diag([_mass(Vv.components[0])] * 2).tocsr()

    def tri_e(e, v, u):
        ux, uy = Vv.split(u)
        return float(oe.w @ ((oe.E @ e) * (oe.E @ v) * (ox.Gx @ ux + ox.Gy @ uy)))

    def tri_grads(space_e, space_v):
        def ge(f):
            e, v, u = f
            ux, uy = Vv.split(u)
            return oe.E.T @ (oe.w * (oe.E @ v) * (ox.Gx @ ux + ox.Gy @ uy))

        def gv(f):
            e, v, u = f
            ux, uy = Vv.split(u)
            return oe.E.T @ (oe.w * (oe.E @ e) * (ox.Gx @ ux + ox.Gy @ uy))

        def gu(f):
            e, v, u = f
            q = oe.w * (oe.E @ e) * (oe.E @ v)
            return np.concatenate([ox.Gx.T @ q, ox.Gy.T @ q])
        return [ge, gv, gu]

    Ne_te = _bmass(V_e, (WALL,), FLUID) + lf * _stiff(V_e)
    Ne_tev = _bmass(V_in, (WALL,), FLUID) + L * K_in

    def make_tri(name, space_e, Ne, c_tri, desc):
        def lhs(e, v, u):
            return abs(tri_e(e, v, u))

        def rhs(e, v, u, Ne=Ne):
            en = math.sqrt(max(e @ (Ne @ e), 0.0))
            return c_tri * en * math.sqrt(gradsq(V_in, v)) * math.sqrt(div_sq(Vv, u))

        def adv(rng):
            seeds = []
            for _ in range(3):
                f0 = [random_field(space_e, rng, "smooth"), random_field(V_in, rng, "smooth"),
                      random_field(Vv, rng, "smooth")]
                norms = [(space_e, Ne + reg * _mass(space_e)), (V_in, K_in),
                         (Vv, D_div + reg * (K_vv + M_vv))]
                seeds.append(tuple(_alternating(f0, tri_grads(space_e, V_in), norms)))
            return seeds

        cases[name] = InequalityCase(name, desc, (space_e, V_in, Vv), lhs, rhs, adv)

    make_tri("advte", V_e, Ne_te, math.sqrt(2 * L),
             "|∫ e v ∇·u| <= sqrt(2L)(||e||²_{Γ_w} + l_f||∇e||²)^{1/2} ||∇v|| ||∇·u||, v = 0 on Γ_in")
    make_tri("advtev", V_in, Ne_tev, math.sqrt(L),
             "|∫ e v ∇·u| <= sqrt(L)(||e||²_{Γ_w} + L||∇e||²)^{1/2} ||∇v|| ||∇·u||, e, v = 0 on Γ_in")

    # ---- transport term
    Vw = VectorSpace([DiscreteSpace(mesh, FLUID, dirichlet=INLET + (WALL,), name="wx"),
                      DiscreteSpace(mesh, FLUID, name="wy")])
    V0 = DiscreteSpace(mesh, FLUID, dirichlet=INLET + OUTLET, name="v_V")
    K0 = _stiff(V0)
    wy_space = Vw.components[1]
    o0 = _vol(V0)
    owx, owy = _vol(Vw.components[0]), _vol(wy_space)
    c2 = (0.5 + math.sqrt(2)) * math.sqrt(L)
    Kw = sp.block_diag([_stiff(Vw.components[0]), _stiff(wy_space)]).tocsr()
    Tw = sp.block_diag([sp.csr_matrix((Vw.components[0].n,) * 2), _bmass(wy_space, (GAMMA,), FLUID)]).tocsr()
    Nw = Tw + lf * Kw

    def adv2_lhs(w, v):
        wx, wy = Vw.split(w)
        return abs(float(o0.w @ (((owx.E @ wx) * (o0.Gx @ v) + (owy.E @ wy) * (o0.Gy @ v)) * (o0.E @ v))))

    def adv2_rhs(w, v):
        return c2 * math.sqrt(max(w @ (Nw @ w), 0.0)) * gradsq(V0, v)

    def adv2_adv(rng):
        # for fixed v the ratio is linear in w; for fixed w it is a quadratic-form ratio in v
        seeds = []
        for _ in range(3):
            v = random_field(V0, rng, "smooth")
            w = random_field(Vw, rng, "smooth")
            Nf, fw = _restrict(Vw, Nw + reg * sp.block_diag([_mass(Vw.components[0]), _mass(wy_space)]))
            lu = spla.splu(Nf)
            for _ in range(15):
                q = o0.w * (o0.E @ v)
                g = np.concatenate([owx.E.T @ (q * (o0.Gx @ v)), owy.E.T @ (q * (o0.Gy @ v))])
                x = np.zeros(Vw.n)
                x[fw] = lu.solve(g[fw])
                w = x / max(np.sqrt(x @ (Nw @ x)), 1e-300)
                wx, wy = Vw.split(w)
                qx, qy = owx.E @ wx, owy.E @ wy
                A = (o0.E.T @ sp.diags(o0.w * qx) @ o0.Gx + o0.E.T @ sp.diags(o0.w * qy) @ o0.Gy)
                A = 0.5 * (A + A.T)
                vals, vecs = top_generalized(A.tocsr(), K0, V0, k=1)
                vals2, vecs2 = top_generalized((-A).tocsr(), K0, V0, k=1)
                v = vecs[0] if vals[0] >= vals2[0] else vecs2[0]
            seeds.append((w, v))
        return seeds

    cases["advt2"] = InequalityCase(
        "advt2", "|∫ (w·∇v) v| <= (1/2+sqrt2)sqrt(L)(||w_T||²_Γ + l_f||∇w||²)^{1/2}||∇v||², "
        "w·n = 0 on Γ_w, v ∈ V(Ω_f)", (Vw, V0), adv2_lhs, adv2_rhs, adv2_adv)
    return cases


def certify(cases: dict, n_samples: int = 1000, seed: int = 0, tol: float = 1e-10,
            names=None) -> list:
    """Evaluate every case on ``n_samples`` fields (adversarial seeds, their perturbations, then random)."""
    rng = np.random.default_rng(seed)
    out = []
    for name, case in cases.items():
        if names is not None and name not in names:
            continue
        fields = []
        if case.adversarial is not None:
            for f in case.adversarial(rng):
                fields.append(("adversarial", f))
        base = [f for _, f in fields]
        while len(fields) < n_samples:
            k = len(fields)
            if base and k % 4 == 0:
                src = base[k % len(base)]
                f = tuple(_zero_fixed(sp_, x + 0.01 * np.linalg.norm(x) / math.sqrt(len(x)) * rng.standard_normal(len(x)))
                          for sp_, x in zip(case.spaces, src))
                fields.append(("perturbed", f))
            else:
                kind = "noise" if k % 2 else "smooth"
                fields.append((kind, tuple(random_field(s, rng, kind) for s in case.spaces)))
        worst, wk = 0.0, ""
        for kind, f in fields:
            r = case.ratio(f)
            if r > worst:
                worst, wk = r, kind
        case.worst_ratio, case.n_evaluated, case.worst_kind = worst, len(fields), wk
        out.append(CaseResult(name, float(worst), len(fields), wk, bool(worst <= 1 + tol)))
        log.info("%s: worst ratio %.6f (%s)", name, worst, wk)
    return out


# ---------------------------------------------------------------------- Korn
def korn_space(mesh: MultidomainMesh) -> VectorSpace:
    """Channel velocities: zero on inlets and outlets, zero normal component on the outer walls."""
    return VectorSpace([DiscreteSpace(mesh, FLUID, dirichlet=INLET + OUTLET + (WALL,), name="ux"),
                        DiscreteSpace(mesh, FLUID, dirichlet=INLET + OUTLET, name="uy")])


def estimate_korn_constant(mesh: MultidomainMesh, space: VectorSpace | None = None, tol: float = 1e-12):
    """max ||∇v||²/||Dv||² over the discrete velocity space (a lower bound of the Korn constant).

    Returns (value, maximizer).
    """
    vs = korn_space(mesh) if space is None else space
    G = sp.block_diag([assemble_form("stiffness", c, order=2) for c in vs.components]).tocsr()
    D = assemble_form("symgrad", vs, order=2)
    f = vs.free_dofs
    Gf, Df = G[f][:, f].tocsc(), D[f][:, f].tocsc()
    lu = spla.splu(Df)
    Minv = spla.LinearOperator(Df.shape, matvec=lu.solve, dtype=float)
    try:
        vals, vecs = spla.eigsh(Gf, k=1, M=Df, Minv=Minv, which="LA", tol=tol, maxiter=100 * len(f))
    except spla.ArpackNoConvergence as exc:
        raise SolverError("Korn eigen-iteration stagnated") from exc
    x = np.zeros(vs.n)
    x[f] = vecs[:, 0]
    val = korn_ratio(vs, x)
    return float(max(val, float(vals[0]))), x


def korn_sweep(geo: GeometrySpec, base: Resolution, levels: int = 3) -> list:
    """Korn estimates on ``levels`` dyadically refined meshes (nested spaces, so non-decreasing)."""
    out = []
    for k in range(levels):
        res = base.refined(2**k)
        out.append(estimate_korn_constant(build_mesh(geo, res))[0])
    return out
