"""Named instance builders and JSON-configured variants.

A model name maps to a builder taking parameter overrides plus the common
sigma/T knobs.  "custom-json" defers entirely to a config file that names a
base model and its overrides, so experiment variants live outside the code.
"""

import json

from .network import build_instance, default_params

_TUPLE_FIELDS = ("x1", "w_mean", "q", "delay_budget", "capacity")


def _build_diamond(overrides=None, sigma=None, T=None):
    params = default_params()
    if overrides:
        clean = {}
        for key, val in overrides.items():
            clean[key] = tuple(float(v) for v in val) if key in _TUPLE_FIELDS else val
        params = params.with_(**clean)
    return build_instance(params, sigma=sigma, T=T)


REGISTRY = {"diamond": _build_diamond}


def available_models():
    return sorted(REGISTRY)


def load_config(path):
    """Read a config file: {"base": name, "params": {...}, "sigma": s, "T": n}."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must contain a JSON object")
    unknown = set(data) - {"base", "params", "sigma", "T"}
    if unknown:
        raise ValueError("unknown config keys: %s" % ", ".join(sorted(unknown)))
    if "params" in data and not isinstance(data["params"], dict):
        raise ValueError("config key 'params' must be an object")
    return data


def make_instance(model="diamond", config=None, sigma=None, T=None):
    """Build a ProblemInstance from a registry name or a config dict.

    Explicit sigma/T arguments win over config values.  model="custom-json"
    requires a config whose "base" key names a registered builder.
    """
    config = config or {}
    if model == "custom-json":
        name = config.get("base", "diamond")
    else:
        name = model
    try:
        builder = REGISTRY[name]
    except KeyError:
        raise KeyError("unknown model %r; available: %s"
                       % (name, ", ".join(available_models() + ["custom-json"])))
    if sigma is None:
        sigma = config.get("sigma")
    if T is None:
        T = config.get("T")
    return builder(overrides=config.get("params"), sigma=sigma, T=T)


def instance_factory(model="diamond", config=None, T=None):
    """Callable sigma -> instance, for noise-scale sweeps."""
    def make(sigma):
        return make_instance(model, config=config, sigma=sigma, T=T)
    return make
