"""JSON forms of instances, covers, configs and reports.

Rationals are written as ``"num/den"`` strings so golden files never drift.
"""
from __future__ import annotations

import hashlib
import json
import math
from fractions import Fraction

from .cover import Cover, CoverEntry
from .errors import ConfigError
from .model import DiscreteLaw, IndexSet, Instance, ValueMap
from .rational import as_fraction, fmt


def jsonable(obj):
    """Recursively turn Fractions, sets, tuples and NamedTuples into JSON values."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, Fraction):
        return fmt(obj)
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, CoverEntry):
        return jsonable(obj.as_dict())
    if hasattr(obj, "_asdict"):
        return jsonable(obj._asdict())
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return sorted(jsonable(v) for v in obj)
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "as_dict"):
        return jsonable(obj.as_dict())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def canonical(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_hash(obj) -> str:
    return hashlib.sha256(canonical(obj).encode()).hexdigest()


def dumps_report(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


# -- instances -------------------------------------------------------------------------

def instance_to_dict(inst: Instance) -> dict:
    out = {
        "d": inst.d,
        "n": inst.n,
        "p": [fmt(q) for q in inst.law.p],
        "f": [fmt(v) for v in inst.f.values],
        "T": [[fmt(c) for c in t] for t in inst.T.vectors],
        "K": inst.K,
        "delta": fmt(inst.delta),
    }
    if inst.L is not None:
        out["L"] = fmt(inst.L)
    else:
        out["Kprime"] = fmt(inst.Kprime)
    return out


def _int_field(data: dict, name: str, default=None) -> int:
    value = data.get(name, default)
    if value is None:
        raise ConfigError(f"missing field {name!r}", name)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer", name)
    return value


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise ConfigError("instance must be a JSON object", "instance")
    for name in ("p", "f", "T"):
        if name not in data:
            raise ConfigError(f"missing field {name!r}", name)
        if not isinstance(data[name], list):
            raise ConfigError(f"{name} must be a list", name)
    law = DiscreteLaw(tuple(data["p"]))
    f = ValueMap(tuple(data["f"]))
    if any(not isinstance(t, list) for t in data["T"]):
        raise ConfigError("T must be a list of vectors", "T")
    T = IndexSet(tuple(tuple(t) for t in data["T"]))
    if "n" in data and _int_field(data, "n") != law.n:
        raise ConfigError(f"n={data['n']} but p has {law.n} entries", "n")
    if "d" in data and _int_field(data, "d") != T.d:
        raise ConfigError(f"d={data['d']} but T has dimension {T.d}", "d")
    K = _int_field(data, "K", 1)
    delta = as_fraction(data.get("delta", "1/2"), "delta")
    if ("L" in data) == ("Kprime" in data):
        raise ConfigError("give exactly one of L and Kprime", "L")
    if "L" in data:
        return Instance(law, f, T, K, delta, L=as_fraction(data["L"], "L"))
    return Instance(law, f, T, K, delta, Kprime=as_fraction(data["Kprime"], "Kprime"))


def cover_to_list(G) -> list:
    return jsonable(Cover(G).as_list())


def cover_from_list(items) -> Cover:
    entries = []
    for it in items:
        try:
            x = tuple(as_fraction(v, "cover.x_star") if isinstance(v, str) else v for v in it["x_star"])
            entries.append(CoverEntry(x, frozenset(it["W"])))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed cover entry: {exc}", "cover") from exc
    return Cover(entries)


# -- run configs -------------------------------------------------------------------------

COMMANDS = ("estimate", "family", "witness", "cover", "classes", "reduce", "verify", "selector")
MODES = ("exact", "mc")

_PASSTHROUGH = ("x", "y", "C", "variant", "Kprime", "checks", "random", "selector",
                "T", "continuous", "K")


def normalize_config(raw: dict) -> dict:
    """Validate a run config and return its canonical form.

    Exactly one of ``instance`` and ``continuous`` may be present; rationals
    inside the instance are rewritten as ``"num/den"``.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", "config")
    out: dict = {}
    if "instance" in raw and "continuous" in raw:
        raise ConfigError("give either an instance or a continuous law, not both", "instance")
    if "instance" in raw:
        out["instance"] = instance_to_dict(instance_from_dict(raw["instance"]))
    for key in _PASSTHROUGH:
        if key in raw:
            out[key] = jsonable(raw[key])
    if "command" in raw:
        if raw["command"] not in COMMANDS:
            raise ConfigError(f"unknown command {raw['command']!r}", "command")
        out["command"] = raw["command"]
    mode = raw.get("mode", "exact")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}", "mode")
    out["mode"] = mode
    for key, default in (("samples", 10000), ("budget", 10**7)):
        out[key] = _int_field(raw, key, default)
        if out[key] < 1:
            raise ConfigError(f"{key} must be positive", key)
    if "seed" in raw:
        out["seed"] = _int_field(raw, "seed")
    elif mode == "mc":
        raise ConfigError("mc mode needs a seed", "seed")
    return out
