"""JSON run configuration: strict schema validation and model construction.

Unknown keys are rejected with their full path so typos never silently
change an experiment.  Three model types are supported:

    {"type": "pricing", "beta": ..., "clusters": [{"rho": ..., "R": [...],
     "E": [...], "C": [...], "gamma": [...]}], "price_min": [...],
     "price_max": [...], "price_steps": ...}

    {"type": "counterexample", "a0": ..., "action_count": 2}

    {"type": "raw", "rho": [...], "actions": [...], "transitions":
     [cluster][action][N][N], "rewards": [cluster][action][N],
     "reward_bound": ..., "primitivity_power": 1}

Top-level keys: "model" (required), "grid" {"resolution"}, "solver"
{"eps", "max_iter", "max_pi_iters"}, "seed", "threads".
"""

import json

import numpy as np

from .model import MeanFieldModel, PricingModel, counterexample_model, \
    pricing_model, raw_model

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"config error at '{path}': {message}")


def _require_keys(obj, path, required, optional=()):
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    for key in obj:
        if key not in required and key not in optional:
            raise ConfigError(f"{path}.{key}", "unknown key")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{path}.{key}", "missing required key")


def _number(obj, path, lo=None, hi=None):
    if not isinstance(obj, (int, float)) or isinstance(obj, bool):
        raise ConfigError(path, "expected a number")
    x = float(obj)
    if lo is not None and x < lo:
        raise ConfigError(path, f"must be >= {lo}")
    if hi is not None and x > hi:
        raise ConfigError(path, f"must be <= {hi}")
    return x


def _integer(obj, path, lo=None):
    if not isinstance(obj, int) or isinstance(obj, bool):
        raise ConfigError(path, "expected an integer")
    if lo is not None and obj < lo:
        raise ConfigError(path, f"must be >= {lo}")
    return obj


def _vector(obj, path, length=None):
    if not isinstance(obj, list) or not obj:
        raise ConfigError(path, "expected a non-empty array of numbers")
    if length is not None and len(obj) != length:
        raise ConfigError(path, f"expected {length} entries, got {len(obj)}")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(obj)])


class RunConfig:
    """Validated run configuration with a lazily built model."""

    def __init__(self, model_spec, grid_resolution, eps, max_iter,
                 max_pi_iters, seed, threads):
        self.model_spec = model_spec
        self.grid_resolution = grid_resolution
        self.eps = eps
        self.max_iter = max_iter
        self.max_pi_iters = max_pi_iters
        self.seed = seed
        self.threads = threads

    def build_model(self, gamma_override=None) -> MeanFieldModel:
        spec = self.model_spec
        if spec["type"] == "counterexample":
            return counterexample_model(spec["a0"], spec["action_count"])
        if spec["type"] == "pricing":
            gamma = spec["gamma"]
            if gamma_override is not None:
                gamma = np.full_like(gamma, float(gamma_override))
            pm = PricingModel(
                rho=spec["rho"], reservation=spec["R"], consumption=spec["E"],
                cost=spec["C"], gamma=gamma, beta=spec["beta"],
                price_min=spec["price_min"], price_max=spec["price_max"],
                price_steps=spec["price_steps"],
            )
            return pricing_model(pm)
        return raw_model(spec["rho"], spec["actions"], spec["transitions"],
                         spec["rewards"], spec["reward_bound"],
                         spec["primitivity_power"])


def parse_config(doc: dict) -> RunConfig:
    _require_keys(doc, "$", required=("model",),
                  optional=("grid", "solver", "seed", "threads"))
    model = _parse_model(doc["model"])
    grid = doc.get("grid", {})
    _require_keys(grid, "$.grid", required=(), optional=("resolution",))
    resolution = _integer(grid["resolution"], "$.grid.resolution", lo=1) \
        if "resolution" in grid else None
    solver = doc.get("solver", {})
    _require_keys(solver, "$.solver", required=(),
                  optional=("eps", "max_iter", "max_pi_iters"))
    eps = _number(solver.get("eps", 1e-5), "$.solver.eps", lo=0.0)
    if eps == 0.0:
        raise ConfigError("$.solver.eps", "must be positive")
    max_iter = _integer(solver.get("max_iter", 1_000_000), "$.solver.max_iter", lo=1)
    max_pi = _integer(solver.get("max_pi_iters", 200), "$.solver.max_pi_iters", lo=1)
    seed = _integer(doc.get("seed", 0), "$.seed", lo=0)
    threads = _integer(doc.get("threads", 1), "$.threads", lo=1)
    return RunConfig(model_spec=model, grid_resolution=resolution, eps=eps,
                     max_iter=max_iter, max_pi_iters=max_pi, seed=seed,
                     threads=threads)


def _parse_model(spec) -> dict:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("$.model", "expected an object with a 'type' key")
    kind = spec["type"]
    if kind == "counterexample":
        _require_keys(spec, "$.model", required=("type", "a0"),
                      optional=("action_count",))
        a0 = _number(spec["a0"], "$.model.a0")
        if not 0.0 < a0 < 0.5:
            raise ConfigError("$.model.a0", "must lie strictly in (0, 0.5)")
        return {"type": kind, "a0": a0,
                "action_count": _integer(spec.get("action_count", 2),
                                         "$.model.action_count", lo=2)}
    if kind == "pricing":
        _require_keys(spec, "$.model",
                      required=("type", "beta", "clusters", "price_min",
                                "price_max", "price_steps"))
        clusters = spec["clusters"]
        if not isinstance(clusters, list) or not clusters:
            raise ConfigError("$.model.clusters", "expected a non-empty array")
        offers = None
        rows = {"rho": [], "R": [], "E": [], "C": [], "gamma": []}
        for i, cl in enumerate(clusters):
            path = f"$.model.clusters[{i}]"
            _require_keys(cl, path, required=("rho", "R", "E", "C", "gamma"))
            r = _vector(cl["R"], f"{path}.R")
            if offers is None:
                offers = r.size
            rows["rho"].append(_number(cl["rho"], f"{path}.rho", lo=0.0))
            rows["R"].append(r if r.size == offers else
                             _vector(cl["R"], f"{path}.R", offers))
            rows["E"].append(_vector(cl["E"], f"{path}.E", offers))
            rows["C"].append(_vector(cl["C"], f"{path}.C", offers))
            rows["gamma"].append(_vector(cl["gamma"], f"{path}.gamma", offers + 1))
        rho = np.asarray(rows["rho"])
        if abs(rho.sum() - 1.0) > 1e-9:
            raise ConfigError("$.model.clusters", "cluster weights must sum to 1")
        return {
            "type": kind, "beta": _number(spec["beta"], "$.model.beta"),
            "rho": rho, "R": np.vstack(rows["R"]), "E": np.vstack(rows["E"]),
            "C": np.vstack(rows["C"]), "gamma": np.vstack(rows["gamma"]),
            "price_min": _vector(spec["price_min"], "$.model.price_min", offers),
            "price_max": _vector(spec["price_max"], "$.model.price_max", offers),
            "price_steps": _integer(spec["price_steps"], "$.model.price_steps", lo=2),
        }
    if kind == "raw":
        _require_keys(spec, "$.model",
                      required=("type", "rho", "actions", "transitions", "rewards"),
                      optional=("reward_bound", "primitivity_power"))
        trans = np.asarray(spec["transitions"], dtype=np.float64)
        rewards = np.asarray(spec["rewards"], dtype=np.float64)
        if trans.ndim != 4:
            raise ConfigError("$.model.transitions",
                              "expected [cluster][action][N][N] nesting")
        if rewards.ndim != 3:
            raise ConfigError("$.model.rewards",
                              "expected [cluster][action][N] nesting")
        bound = spec.get("reward_bound")
        return {
            "type": kind, "rho": _vector(spec["rho"], "$.model.rho"),
            "actions": np.asarray(spec["actions"], dtype=np.float64),
            "transitions": trans, "rewards": rewards,
            "reward_bound": None if bound is None
            else _number(bound, "$.model.reward_bound", lo=0.0),
            "primitivity_power": _integer(spec.get("primitivity_power", 1),
                                          "$.model.primitivity_power", lo=1),
        }
    raise ConfigError("$.model.type", f"unknown model type '{kind}'")


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON at line {exc.lineno}: {exc.msg}")
    return parse_config(doc)
