"""Run configuration: strict JSON parsing, schema validation and object builders.

Every object rejects unknown keys. Unknown keys get a close-match suggestion,
so ``"temperture"`` is reported together with ``did you mean 'temperature'?``.
Duplicate keys are also errors.
"""

from __future__ import annotations

import difflib
import hashlib
import json
import re
from dataclasses import dataclass, field

import numpy as np
from jsonschema import Draft202012Validator

from . import bounds
from .cooling import CoolingSetup
from .errors import ColdLimitsError, ConfigError
from .network import DampingBackend, ReservoirSpec, SpectralDensity, build_network

MODES = ("bounds", "simulate", "coolscan", "validate")
BOUND_KINDS = ("masanes", "bath_family", "radiation", "time_scaling", "temperature_from_error",
               "landauer", "landauer_oracle", "scharlau", "allahverdyan", "work_qubit")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_posint = {"type": "integer", "minimum": 1}
_row = {"type": "array", "items": _num, "minItems": 1}
_matrix = {"oneOf": [_num, _row, {"type": "array", "items": _row, "minItems": 1}]}
_cutoff = {"oneOf": [_pos, {"const": "inf"}]}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


DENSITY = _obj({
    "kind": {"enum": ["delta_mode", "ohmic", "phenomenological_table", "flat"]},
    "strength": _nonneg,
    "omega_m": _pos,
    "gamma": _nonneg,
    "cutoff": _cutoff,
    "table": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
              "minItems": 2},
    "level": _nonneg,
    "band": {"type": "array", "items": _nonneg, "minItems": 2, "maxItems": 2},
    "features": {"type": "array", "items": _nonneg},
}, ["kind"])

SCHEMA = _obj({
    "version": {"type": "string"},
    "mode": {"enum": list(MODES)},
    "network": _obj({
        "V0": _matrix,
        "masses": {"oneOf": [_pos, {"type": "array", "items": _pos}]},
        "Vk": {"type": "object", "patternProperties": {"^-?[1-9][0-9]*$": _matrix},
               "additionalProperties": False},
        "omega_d": _pos,
        "time_reversal": {"type": "boolean"},
    }, ["V0"]),
    "reservoirs": {"type": "array", "items": _obj({
        "label": {"type": "string", "minLength": 1},
        "temperature": _nonneg,
        "sites": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "site_weights": _matrix,
        "density": DENSITY,
    }, ["label", "temperature", "density"])},
    "damping": _obj({
        "kind": {"enum": ["markovian_ohmic", "phenomenological", "tabulated_kernel"]},
        "from_reservoirs": {"type": "boolean"},
        "Gamma": _matrix,
        "cutoff": _cutoff,
        "gamma": {"oneOf": [_nonneg, {"type": "array", "items": _nonneg}]},
        "omega0": {"oneOf": [_pos, {"type": "array", "items": _pos}]},
    }, ["kind"]),
    "bounds_tasks": {"type": "array", "items": _obj({
        "name": {"type": "string"},
        "bound": {"enum": list(BOUND_KINDS)},
        "task": _obj({"d_S": _posint, "g": _posint, "delta": _pos, "T": _pos, "W_wc": _pos},
                     ["d_S", "g", "delta", "T", "W_wc"]),
        "dos": _obj({
            "kind": {"enum": ["power_law_entropy", "radiation", "tabulated"]},
            "a": _pos, "nu": _pos, "volume": _pos,
            "table": {"type": "array", "items": {"type": "array", "items": _num,
                                                 "minItems": 2, "maxItems": 2}},
        }, ["kind"]),
        "a": _pos, "nu": _pos, "V": _nonneg,
        "epsilon": _pos,
        "t": _pos, "w_rate": _pos, "c_speed": _pos,
        "lambda_min": _pos, "beta": _nonneg, "J_B": _nonneg,
        "T": _pos, "delta": _pos, "d_B": _posint,
        "W": _num, "H_S": _matrix,
        "dim_S": _posint, "dim_B": _posint, "trials": _posint,
    }, ["bound"])},
    "cooling": _obj({
        "omega_m": _pos, "omega_0": _pos, "gamma": _pos,
        "v": _num, "k_max": _posint,
        "dump": DENSITY,
        "omega_d_range": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
        "method": {"enum": ["weak", "balance"]},
    }, ["omega_m", "omega_0", "gamma"]),
    "numerics": _obj({
        "quad_rel_tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1},
        "floquet_K": {"oneOf": [{"const": "auto"}, _posint]},
        "floquet_method": {"enum": ["harmonic_balance", "perturbative"]},
        "scan_steps": {"type": "integer", "minimum": 3},
        "threads": {"oneOf": [{"const": "auto"}, _posint]},
        "seed": {"type": "integer", "minimum": 0},
    }),
    "output": _obj({"path": {"type": "string"}, "format": {"const": "csv"}}),
}, ["version", "mode"])

NUMERICS_DEFAULTS = {"quad_rel_tol": 1e-8, "floquet_K": "auto", "floquet_method": "harmonic_balance",
                     "scan_steps": 400, "threads": "auto", "seed": 0}

_VALIDATOR = Draft202012Validator(SCHEMA)


@dataclass
class RunConfig:
    version: str
    mode: str
    network: dict | None = None
    reservoirs: list = field(default_factory=list)
    damping: dict | None = None
    bounds_tasks: list = field(default_factory=list)
    cooling: dict | None = None
    numerics: dict = field(default_factory=lambda: dict(NUMERICS_DEFAULTS))
    output: dict = field(default_factory=lambda: {"format": "csv"})

    def to_dict(self) -> dict:
        d = {"version": self.version, "mode": self.mode, "numerics": dict(self.numerics),
             "output": dict(self.output)}
        for key in ("network", "damping", "cooling"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        if self.reservoirs:
            d["reservoirs"] = self.reservoirs
        if self.bounds_tasks:
            d["bounds_tasks"] = self.bounds_tasks
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def digest(self) -> str:
        """SHA-256 of the canonical form, independent of formatting and key order."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _no_duplicates(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise ConfigError([("", f"duplicate key {k!r}")])
        seen[k] = v
    return seen


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _allowed_keys(schema):
    props = set(schema.get("properties", {}))
    return sorted(props)


def _messages(err):
    """Flatten one jsonschema error into ``(path, message)`` pairs."""
    path = _path(err.absolute_path)
    if err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = _allowed_keys(err.schema)
        extra = [k for k in err.instance if k not in allowed and
                 not any(re.search(p, k) for p in err.schema.get("patternProperties", {}))]
        out = []
        for k in extra:
            hint = difflib.get_close_matches(k, allowed, n=1, cutoff=0.6)
            msg = f"unknown key {k!r}"
            if hint:
                msg += f"; did you mean {hint[0]!r}?"
            elif allowed:
                msg += f"; allowed keys: {', '.join(allowed)}"
            out.append((_path(list(err.absolute_path) + [k]), msg))
        return out
    if err.validator == "oneOf" and err.context:
        best = min(err.context, key=lambda e: len(list(e.absolute_path)))
        return [(path, best.message)]
    return [(path, err.message)]


def parse_config(text: str) -> RunConfig:
    """Parse and validate JSON text. Raises :class:`ConfigError` listing every problem."""
    try:
        raw = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as e:
        raise ConfigError([("", f"syntax error at line {e.lineno} column {e.colno}: {e.msg}")]) from None
    if not isinstance(raw, dict):
        raise ConfigError([("$", "top level must be an object")])
    errors = []
    for err in sorted(_VALIDATOR.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path))):
        errors.extend(_messages(err))
    if errors:
        raise ConfigError(errors)
    numerics = dict(NUMERICS_DEFAULTS)
    numerics.update(raw.get("numerics", {}))
    output = {"format": "csv"}
    output.update(raw.get("output", {}))
    cfg = RunConfig(version=raw["version"], mode=raw["mode"], network=raw.get("network"),
                    reservoirs=raw.get("reservoirs", []), damping=raw.get("damping"),
                    bounds_tasks=raw.get("bounds_tasks", []), cooling=raw.get("cooling"),
                    numerics=numerics, output=output)
    _semantic_checks(cfg)
    return cfg


def _semantic_checks(cfg: RunConfig):
    errors = []
    if cfg.mode == "simulate":
        if cfg.network is None:
            errors.append(("$.network", "simulate mode needs a network"))
        if not cfg.reservoirs:
            errors.append(("$.reservoirs", "simulate mode needs at least one reservoir"))
        if cfg.damping is None:
            errors.append(("$.damping", "simulate mode needs a damping backend"))
    if cfg.mode == "coolscan" and cfg.cooling is None:
        errors.append(("$.cooling", "coolscan mode needs a cooling section"))
    if cfg.mode == "bounds" and not cfg.bounds_tasks:
        errors.append(("$.bounds_tasks", "bounds mode needs at least one task"))
    labels = [r["label"] for r in cfg.reservoirs]
    for i, lab in enumerate(labels):
        if lab in labels[:i]:
            errors.append((f"$.reservoirs[{i}].label", f"duplicate reservoir label {lab!r}"))
    for i, t in enumerate(cfg.bounds_tasks):
        for key in _BOUND_NEEDS[t["bound"]]:
            if key not in t:
                errors.append((f"$.bounds_tasks[{i}]", f"bound {t['bound']!r} needs {key!r}"))
    if errors:
        raise ConfigError(errors)


_BOUND_NEEDS = {
    "masanes": ("task", "dos"),
    "bath_family": ("task", "a", "nu", "V"),
    "radiation": ("task", "V"),
    "time_scaling": ("task", "t", "w_rate", "c_speed"),
    "temperature_from_error": ("task", "epsilon"),
    "landauer": ("lambda_min", "beta", "J_B"),
    "landauer_oracle": ("beta",),
    "scharlau": ("T", "delta", "J_B", "d_B"),
    "allahverdyan": ("T", "delta", "J_B"),
    "work_qubit": ("W", "H_S", "beta"),
}


# builders -----------------------------------------------------------------


def _located(path):
    """Re-raise construction errors as ConfigError at ``path``."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, tp, exc, tb):
            if exc is not None and isinstance(exc, ColdLimitsError) and not isinstance(exc, ConfigError):
                raise ConfigError([(path, str(exc))]) from exc
            return False

    return _Ctx()


def _cutoff_value(c):
    return np.inf if c is None or c == "inf" else float(c)


def _weights(frag, n):
    if "site_weights" in frag:
        W = np.asarray(frag["site_weights"], dtype=float)
        if W.ndim == 0:
            W = W * np.eye(n)
        elif W.ndim == 1:
            W = np.diag(W)
        return W
    sites = frag.get("sites", list(range(n)))
    W = np.zeros((n, n))
    for s in sites:
        if s >= n:
            raise ConfigError([("sites", f"site {s} outside a {n}-node network")])
        W[s, s] = 1.0
    return W


def build_density(frag: dict, W) -> SpectralDensity:
    kind = frag["kind"]
    feats = tuple(frag.get("features", ()))
    if kind == "delta_mode":
        return SpectralDensity.delta(frag.get("strength", 1.0), frag["omega_m"], W)
    if kind == "ohmic":
        return SpectralDensity.ohmic(frag.get("gamma", 0.0), W, _cutoff_value(frag.get("cutoff")))
    if kind == "flat":
        if "band" not in frag:
            raise ConfigError([("density", "flat density needs 'band'")])
        return SpectralDensity.flat(frag.get("level", 1.0), W, tuple(frag["band"]))
    if "table" not in frag:
        raise ConfigError([("density", "phenomenological_table needs 'table'")])
    tab = np.asarray(frag["table"], dtype=float)
    return SpectralDensity.table(tab[:, 0], tab[:, 1], W, features=feats)


def build_objects(cfg: RunConfig):
    """``(network, reservoirs, damping)`` for simulate mode."""
    with _located("$.network"):
        net = build_network(cfg.network)
    n = net.n_nodes
    res = []
    for i, frag in enumerate(cfg.reservoirs):
        with _located(f"$.reservoirs[{i}]"):
            W = _weights(frag, n)
            res.append(ReservoirSpec(frag["label"], float(frag["temperature"]),
                                     build_density(frag["density"], W)))
    d = cfg.damping
    with _located("$.damping"):
        if d["kind"] == "markovian_ohmic":
            if d.get("from_reservoirs", "Gamma" not in d):
                damping = DampingBackend.from_reservoirs(res)
                if not damping.terms:
                    raise ConfigError([("$.damping", "from_reservoirs needs at least one ohmic reservoir")])
            else:
                G = np.asarray(d["Gamma"], dtype=float)
                G = np.diag(G) if G.ndim == 1 else (G * np.eye(n) if G.ndim == 0 else G)
                damping = DampingBackend.markovian(G, _cutoff_value(d.get("cutoff")))
        elif d["kind"] == "phenomenological":
            if "gamma" not in d or "omega0" not in d:
                raise ConfigError([("$.damping", "phenomenological backend needs gamma and omega0")])
            g = np.broadcast_to(np.asarray(d["gamma"], dtype=float), (n,))
            w0 = np.broadcast_to(np.asarray(d["omega0"], dtype=float), (n,))
            damping = DampingBackend.phenomenological_backend(g, w0)
        else:
            damping = DampingBackend("tabulated_kernel")
    return net, res, damping


def build_cooling(cfg: RunConfig) -> CoolingSetup:
    c = cfg.cooling
    with _located("$.cooling"):
        dump = build_density(c["dump"], [[1.0]]) if "dump" in c else None
        return CoolingSetup(c["omega_m"], c["omega_0"], c["gamma"], dump, c.get("v", 1.0),
                            c.get("k_max", 5))


def build_task(frag: dict) -> bounds.CoolingTask:
    return bounds.CoolingTask(frag["d_S"], frag["g"], frag["delta"], frag["T"], frag["W_wc"])


def build_dos(frag: dict) -> bounds.DoSModel:
    table = tuple(tuple(r) for r in frag["table"]) if "table" in frag else None
    return bounds.DoSModel(frag["kind"], frag.get("a", 1.0), frag.get("nu", 0.5),
                           frag.get("volume", 1.0), table)
