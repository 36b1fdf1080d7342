"""YAML run configuration: parsing with line information, defaults from a preset dataset,
validation and a canonical serialization that round-trips.

All quantities are SI (m, s, kg, K, Pa, S/m, W/(m K), A/m²) unless a dimensionless
preset is selected. A config is resolved against the preset named in
``dataset.name``; every other section overrides the preset key by key.
"""
from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .coefficients import (BoundaryData, Bounds, ButlerVolmerData, CoefficientError, CoefficientSet,
                           PhysicalConstants, ThetaModel)
from .datasets import DATASETS, Dataset, random_admissible
from .fixed_point import PicardConfig
from .geometry import CurrentCollector, GeometryError, GeometrySpec, Resolution
from .ledger import EpsilonVector, LedgerError, LedgerOptions


class ConfigError(ValueError):
    """Invalid configuration; ``messages`` lists every problem found."""

    def __init__(self, messages):
        self.messages = [messages] if isinstance(messages, str) else list(messages)
        super().__init__("\n".join(self.messages))


class _Mapping(dict):
    """dict remembering the source line of each key."""

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.lines = {}


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _Mapping()
    for k_node, v_node in node.value:
        key = loader.construct_object(k_node, deep=True)
        line = k_node.start_mark.line + 1
        if key in out:
            raise ConfigError(f"line {line}: duplicate key {key!r}")
        out[key] = loader.construct_object(v_node, deep=True)
        out.lines[key] = line
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


BOUND_HYPOTHESIS = (("mu_", "H1"), ("lam_", "H1"), ("K_l", "H1"), ("D1_", "H2"), ("D2_", "H2"), ("D1m_", "H2"),
                    ("D2m_", "H2"), ("k_", "H2"), ("sigma", "H2"), ("T_sharp", "H2"), ("Pi_", "H3"),
                    ("alpha_", "H3"), ("S1_", "H3"), ("S2_", "H3"), ("Dp", "H3"), ("D12_", "H3"), ("D21_", "H3"),
                    ("beta_", "H4"), ("h_", "H5"))


def _tag_bound(msg: str) -> str:
    """Prefix a bound violation with the hypothesis it belongs to."""
    for prefix, h in BOUND_HYPOTHESIS:
        if msg.startswith(prefix):
            return f"({h}) {msg}"
    return msg


def _line(m, key) -> str:
    ln = getattr(m, "lines", {}).get(key)
    return f"line {ln}: " if ln else ""


COEFFICIENT_MODELS = ("mu", "lam", "D1", "D2", "D12", "D21", "rhoS1", "rhoS2", "dufour1", "dufour2", "k", "sigma",
                      "sigma_m", "alpha_S", "Pi", "kappa", "beta", "h_c")
COEFFICIENT_SCALARS = ("rho_1m", "rho_water", "rho_air")
PICARD_KEYS = tuple(f.name for f in dataclasses.fields(PicardConfig))
LEDGER_KEYS = ("eps", "optimize_eps", "kappa_mode", "b0_theta_coef", "include_a4", "gap_indices", "C_K",
               "korn_safety", "M_r", "j_L")

SECTION_KEYS = {
    "dataset": ("name", "seed"),
    "geometry": ("l_f", "l_a", "l_m", "l_c", "L", "collector"),
    "resolution": ("fuel", "a", "m", "c", "air", "ny"),
    "constants": ("R", "F", "M1", "M2", "M"),
    "bounds": tuple(f.name for f in dataclasses.fields(Bounds)),
    "coefficients": COEFFICIENT_MODELS + COEFFICIENT_SCALARS + ("K_l", "b", "theta_range"),
    "butler_volmer": tuple(f.name for f in dataclasses.fields(ButlerVolmerData)),
    "boundary": tuple(f.name for f in dataclasses.fields(BoundaryData)),
    "solver": PICARD_KEYS,
    "ledger": LEDGER_KEYS,
    "inequalities": ("fuel", "porous", "ny", "n_samples", "tol"),
    "convergence": ("fuel", "porous", "ny", "refinements", "min_order"),
    "output": ("dir", "vtk", "csv", "probe_y", "probe_points"),
}

DEFAULTS = {
    "resolution": {"fuel": 8, "a": 4, "m": 4, "c": 4, "air": 8, "ny": 32},
    "solver": {f.name: f.default for f in dataclasses.fields(PicardConfig)},
    "ledger": {"eps": EpsilonVector().to_dict(), "optimize_eps": False, "kappa_mode": "definition",
               "b0_theta_coef": "kappa", "include_a4": False, "gap_indices": [1, 2], "C_K": "estimate",
               "korn_safety": 1.1, "M_r": 1.0, "j_L": None},
    "inequalities": {"fuel": 32, "porous": 16, "ny": 128, "n_samples": 1000, "tol": 1e-10},
    "convergence": {"fuel": 2, "porous": 1, "ny": 4, "refinements": 3, "min_order": 1.8},
    "output": {"dir": "out", "vtk": True, "csv": True, "probe_y": 0.5, "probe_points": 200},
}


# ---------------------------------------------------------------------- serialization helpers
_MODEL_DEFAULTS = {f.name: f.default for f in dataclasses.fields(ThetaModel)}


def model_to_yaml(m: ThetaModel):
    if m.kind == "constant":
        return float(m.value)
    out = {"kind": m.kind}
    for k in ("value", "slope", "exponent", "activation", "theta_ref"):
        v = getattr(m, k)
        if k == "value" or v != _MODEL_DEFAULTS[k]:
            out[k] = float(v)
    if m.table:
        out["table"] = [[float(a), float(b)] for a, b in m.table]
    if m.clamp is not None:
        out["clamp"] = [float(m.clamp[0]), float(m.clamp[1])]
    return out


def model_from_yaml(spec, where: str = "") -> ThetaModel:
    if isinstance(spec, bool):
        raise ConfigError(f"{where}expected a number or a model mapping, got {spec!r}")
    if isinstance(spec, (int, float)):
        return ThetaModel.const(float(spec))
    if isinstance(spec, dict):
        allowed = set(_MODEL_DEFAULTS)
        bad = [k for k in spec if k not in allowed]
        if bad:
            raise ConfigError(f"{where}unknown model keys {bad}")
        kw = dict(spec)
        if "table" in kw:
            kw["table"] = tuple(tuple(float(x) for x in row) for row in kw["table"])
        if "clamp" in kw and kw["clamp"] is not None:
            kw["clamp"] = tuple(float(x) for x in kw["clamp"])
        try:
            return ThetaModel(**kw)
        except (CoefficientError, TypeError) as exc:
            raise ConfigError(f"{where}{exc}") from None
    raise ConfigError(f"{where}expected a number or a model mapping, got {spec!r}")


def _is_region_map(spec) -> bool:
    return isinstance(spec, dict) and "kind" not in spec


def _coef_to_yaml(value):
    if value is None:
        return None
    if isinstance(value, ThetaModel):
        return model_to_yaml(value)
    models = {s: model_to_yaml(m) for s, m in value.items()}
    vals = list(models.values())
    return vals[0] if all(v == vals[0] for v in vals) else models


def _coef_from_yaml(spec, where):
    if spec is None:
        return None
    if _is_region_map(spec):
        return {s: model_from_yaml(v, where) for s, v in spec.items()}
    return model_from_yaml(spec, where)


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return int(x)
    return float(x)


def dataset_sections(ds: Dataset) -> dict:
    """Sections describing a dataset, in canonical form."""
    g, c, b = ds.geo, ds.coeffs, ds.bdata
    coeffs = {name: _coef_to_yaml(getattr(c, name)) for name in COEFFICIENT_MODELS}
    coeffs.update({name: float(getattr(c, name)) for name in COEFFICIENT_SCALARS})
    coeffs["K_l"] = {k: float(v) for k, v in c.K_l.items()}
    coeffs["b"] = {k: float(v) for k, v in c.b.items()}
    coeffs["theta_range"] = [float(x) for x in c.theta_range]
    bd = dataclasses.asdict(b)
    if callable(b.theta_e):
        raise ConfigError("a callable coolant temperature cannot be serialized")
    return _plain({
        "geometry": {"l_f": g.l_f, "l_a": g.l_a, "l_m": g.l_m, "l_c": g.l_c, "L": g.L,
                     "collector": {"ends": list(g.collector.ends), "span": list(g.collector.span)}},
        "constants": dataclasses.asdict(c.constants),
        "bounds": dataclasses.asdict(c.bounds),
        "coefficients": coeffs,
        "butler_volmer": dataclasses.asdict(c.bv),
        "boundary": bd,
    })


def _preset(name: str, seed: int) -> Dataset:
    if name == "random_admissible":
        return random_admissible(seed)
    if name not in DATASETS:
        raise ConfigError(f"unknown dataset {name!r}; expected one of {sorted(DATASETS) + ['random_admissible']}")
    return DATASETS[name]()


# ---------------------------------------------------------------------- RunConfig
@dataclass
class RunConfig:
    """Fully resolved configuration; every section is a plain mapping."""

    sections: dict
    source: str = ""
    _dataset: Dataset | None = field(default=None, repr=False, compare=False)

    def __getitem__(self, name):
        return self.sections[name]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.sections)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=False)

    def save(self, path) -> None:
        Path(path).write_text(self.dump())

    # ------------------------------------------------------------------ builders
    @property
    def dataset(self) -> Dataset:
        if self._dataset is None:
            self._dataset = _build_dataset(self.sections)
        return self._dataset

    def resolution(self) -> Resolution:
        return Resolution(**self.sections["resolution"])

    def picard(self) -> PicardConfig:
        return PicardConfig(**self.sections["solver"])

    def eps(self) -> EpsilonVector:
        e = self.sections["ledger"]["eps"]
        return EpsilonVector(*[e[f"eps{k}"] for k in range(1, 10)])

    def ledger_options(self, C_K=None) -> LedgerOptions:
        s = self.sections["ledger"]
        ck = s["C_K"] if C_K is None else C_K
        return LedgerOptions(kappa_mode=s["kappa_mode"], b0_theta_coef=s["b0_theta_coef"],
                             include_a4=s["include_a4"], gap_indices=tuple(s["gap_indices"]),
                             C_K=None if ck == "estimate" else float(ck), korn_safety=s["korn_safety"],
                             M_r=s["M_r"], j_L=s["j_L"])

    def mesh_resolution(self, section: str, scale: int = 1) -> Resolution:
        s = self.sections[section]
        f, p, ny = s["fuel"], s["porous"], s["ny"]
        return Resolution(f * scale, p * scale, p * scale, p * scale, f * scale, ny * scale)


def _build_dataset(sections) -> Dataset:
    errors = []

    def attempt(label, fn):
        try:
            return fn()
        except (CoefficientError, GeometryError, LedgerError, ConfigError, TypeError, ValueError) as exc:
            msgs = exc.messages if isinstance(exc, ConfigError) else str(exc).split("; ")
            errors.extend(f"{label}: {m}" for m in msgs)
            return None

    g = sections["geometry"]
    geo = attempt("geometry", lambda: GeometrySpec(
        g["l_f"], g["l_a"], g["l_m"], g["l_c"], g["L"],
        CurrentCollector(tuple(g["collector"]["ends"]), tuple(g["collector"]["span"]))))
    consts = attempt("constants", lambda: PhysicalConstants(**sections["constants"]))
    bounds = attempt("bounds", lambda: Bounds(**sections["bounds"]))
    if bounds is not None:
        errors.extend(f"bounds: {_tag_bound(m)}" for m in bounds.violations())
    bv = attempt("butler_volmer", lambda: ButlerVolmerData(**sections["butler_volmer"]))
    bd = dict(sections["boundary"])
    for k in ("rho1_in", "rho1_out", "rho2_in", "rho2_out"):
        if isinstance(bd.get(k), list):
            bd[k] = tuple(bd[k])
    bdata = attempt("boundary", lambda: BoundaryData(**bd))
    cs = sections["coefficients"]
    kw = {}
    for name in COEFFICIENT_MODELS:
        v = attempt(f"coefficients.{name}", lambda name=name: _coef_from_yaml(cs.get(name), ""))
        if v is not None or cs.get(name) is None:
            kw[name] = v
    if errors or None in (geo, consts, bounds, bv, bdata):
        raise ConfigError(errors or ["invalid configuration"])
    if bounds.violations():
        raise ConfigError([f"bounds: {_tag_bound(m)}" for m in bounds.violations()])
    for name in ("Pi", "kappa"):
        if kw.get(name) is None:
            kw.pop(name, None)
    coeffs = attempt("coefficients", lambda: CoefficientSet(
        bounds=bounds, constants=consts, bv=bv, K_l=dict(cs["K_l"]), b=dict(cs["b"]),
        theta_range=tuple(cs["theta_range"]), **{k: cs[k] for k in COEFFICIENT_SCALARS}, **kw))
    if errors:
        raise ConfigError(errors)
    return Dataset(sections["dataset"]["name"], geo, coeffs, bdata)


def resolve(raw: dict | None, source: str = "") -> RunConfig:
    """Apply defaults, reject unknown keys and validate; errors are collected exhaustively."""
    raw = _Mapping() if raw is None else raw
    if not isinstance(raw, dict):
        raise ConfigError("top level of the config must be a mapping")
    errors = []
    for key in raw:
        if key not in SECTION_KEYS:
            errors.append(f"{_line(raw, key)}unknown section {key!r}")
        elif not isinstance(raw[key], dict):
            errors.append(f"{_line(raw, key)}section {key!r} must be a mapping")
        else:
            sec = raw[key]
            for k in sec:
                if k not in SECTION_KEYS[key]:
                    errors.append(f"{_line(sec, k)}unknown key {key}.{k}")
    if errors:
        raise ConfigError(errors)

    ds_sec = {"name": "normalized", "seed": 0}
    ds_sec.update(raw.get("dataset", {}))
    try:
        preset = _preset(ds_sec["name"], int(ds_sec["seed"]))
    except ConfigError as exc:
        raise ConfigError([f"{_line(raw.get('dataset', {}), 'name')}{m}" for m in exc.messages]) from None
    sections = dataset_sections(preset)
    sections["dataset"] = {"name": ds_sec["name"], "seed": int(ds_sec["seed"])}
    for name, d in DEFAULTS.items():
        sections[name] = copy.deepcopy(d)
    for name, sec in raw.items():
        if name == "dataset":
            continue
        for k, v in sec.items():
            if name == "geometry" and k == "collector" and isinstance(v, dict):
                sections[name][k].update(_plain(v))
            elif name == "ledger" and k == "eps" and isinstance(v, dict):
                bad = [e for e in v if e not in sections[name]["eps"]]
                if bad:
                    errors.append(f"{_line(sec, k)}unknown epsilon keys {bad}")
                sections[name]["eps"].update(_plain(v))
            else:
                sections[name][k] = _plain(v)
    if errors:
        raise ConfigError(errors)
    cfg = RunConfig(sections, source)
    try:
        ds = cfg.dataset
    except ConfigError as exc:
        raise ConfigError(exc.messages) from None
    # canonical form: rebuild the physical sections from the validated objects
    canon = dataset_sections(ds)
    for k, v in canon.items():
        cfg.sections[k] = v
    _validate_run_sections(cfg, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def _validate_run_sections(cfg: RunConfig, errors: list) -> None:
    try:
        cfg.resolution()
    except (GeometryError, TypeError) as exc:
        errors.append(f"resolution: {exc}")
    try:
        cfg.picard()
    except (ValueError, TypeError) as exc:
        errors.append(f"solver: {exc}")
    try:
        cfg.eps()
        cfg.ledger_options()
    except (LedgerError, ValueError, TypeError, KeyError) as exc:
        errors.append(f"ledger: {exc}")
    led = cfg["ledger"]
    if led["kappa_mode"] not in ("definition", "proof"):
        errors.append("ledger: kappa_mode must be 'definition' or 'proof'")
    if led["b0_theta_coef"] not in ("kappa", "k"):
        errors.append("ledger: b0_theta_coef must be 'kappa' or 'k'")
    if led["C_K"] != "estimate" and not (isinstance(led["C_K"], (int, float)) and led["C_K"] >= 1):
        errors.append("ledger: C_K must be 'estimate' or a number >= 1")
    for sec in ("inequalities", "convergence"):
        s = cfg[sec]
        for k in ("fuel", "porous", "ny"):
            if not (isinstance(s[k], int) and s[k] >= 1):
                errors.append(f"{sec}: {k} must be a positive integer")
    if not (isinstance(cfg["inequalities"]["n_samples"], int) and cfg["inequalities"]["n_samples"] >= 1):
        errors.append("inequalities: n_samples must be a positive integer")
    if not (isinstance(cfg["convergence"]["refinements"], int) and cfg["convergence"]["refinements"] >= 1):
        errors.append("convergence: refinements must be a positive integer")
    if not 0 <= cfg["output"]["probe_y"] <= 1:
        errors.append("output: probe_y is a fraction of L in [0, 1]")


def parse_text(text: str, source: str = "<string>") -> RunConfig:
    try:
        raw = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"{source}: {where}{exc.problem}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return resolve(raw, source)


def parse_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} not found")
    return parse_text(p.read_text(), str(p))
