"""INI experiment configuration with a fixed per-experiment schema.

A config file has an ``[experiment]`` section (``name``, ``seed``,
``output_dir``) and one section named after the experiment holding its
parameters.  Missing parameters take the schema default; unknown sections or
keys are errors.  ``serialize_config`` writes a canonical form, so
``parse(serialize(parse(text))) == parse(text)``.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _split(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


# kind -> (parser, formatter)
_KINDS = {
    "int": (lambda s: int(s.strip()), str),
    "float": (lambda s: float(s.strip()), repr),
    "str": (lambda s: s.strip(), str),
    "bool": (_parse_bool, lambda v: "true" if v else "false"),
    "ints": (lambda s: [int(t) for t in _split(s)], lambda v: ", ".join(map(str, v))),
    "floats": (lambda s: [float(t) for t in _split(s)], lambda v: ", ".join(map(repr, v))),
    "strs": (_split, lambda v: ", ".join(v)),
}

M_GRID_BIASVAR = [10, 30, 60, 90, 120, 150, 180, 210, 240, 270, 300]

SCHEMAS: dict[str, dict[str, tuple[str, object]]] = {
    "conditioning": {
        "p": ("int", 300),
        "n": ("int", 300),
        "omega": ("float", 2.0),
        "m_grid": ("ints", [30, 60, 90, 120, 150]),
        "trials": ("int", 10),
        "laws": ("strs", ["haar", "gaussian"]),
    },
    "rho": {
        "p": ("int", 1000),
        "ratio": ("float", 2.0),
        "m_grid": ("ints", [100, 300, 500]),
        "trials": ("int", 10),
    },
    "biasvar": {
        "n": ("int", 360),
        "p": ("int", 300),
        "omega_grid": ("floats", [0.5, 1.0, 2.0]),
        "m_grid": ("ints", M_GRID_BIASVAR),
        "gamma_draws": ("int", 100),
        "rhs_draws": ("int", 1440),
        "law": ("str", "haar"),
    },
    "mse-scaling": {
        "p": ("int", 20),
        "m": ("int", 10),
        "q_grid": ("ints", [1, 4, 16, 64]),
        "dt_grid": ("floats", [1e-2, 5e-3, 2.5e-3, 1.25e-3]),
        "horizon": ("float", 0.1),
        "replicates": ("int", 400),
        "dt_for_q": ("float", 0.02),
        "q_for_dt": ("int", 1),
        "law": ("str", "haar"),
        "include_full": ("bool", True),
    },
    "pde": {
        "pde": ("str", "allen-cahn"),
        "epsilon": ("float", 5e-4),
        "alpha2": ("float", -0.125),
        "alpha4": ("float", 0.125**2),
        "potential": ("str", "linear"),
        "embedding_frequencies": ("int", 1),
        "hidden_layers": ("int", 3),
        "hidden_width": ("int", 12),
        "collocation": ("int", 500),
        "dt": ("float", 1e-3),
        "num_steps": ("int", 2000),
        "replicates": ("int", 4),
        "methods": ("strs", ["none", "sketch", "tikhonov"]),
        "alphas": ("floats", [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0]),
        "ranks": ("ints", []),
        "sketch_m": ("ints", [30]),
        "sketch_q": ("ints", [1]),
        "law": ("str", "haar"),
        "fit_iters": ("int", 3000),
        "fit_lr_max": ("float", 0.1),
        "fit_lr_min": ("float", 1e-6),
        "fit_points": ("int", 2000),
        "reference_size": ("int", 256),
        "rel_tol": ("float", 1e-5),
        "abs_tol": ("float", 1e-5),
        "test_points": ("int", 500),
        "test_times": ("int", 200),
        "workers": ("int", 1),
        "checkpoints": ("bool", True),
    },
}

EXPERIMENTS = tuple(SCHEMAS)
_HEADER_KEYS = {"name": "str", "seed": "int", "output_dir": "str"}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    output_dir: str = "results"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in SCHEMAS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        schema = SCHEMAS[self.experiment]
        unknown = set(self.params) - set(schema)
        if unknown:
            raise ConfigError(f"unknown keys for {self.experiment}: {', '.join(sorted(unknown))}")
        full = {k: _copy(default) for k, (_, default) in schema.items()}
        full.update(self.params)
        self.params = full


def _copy(v):
    return list(v) if isinstance(v, list) else v


def default_config(experiment: str) -> ExperimentConfig:
    return ExperimentConfig(experiment)


def parse_config(text: str, experiment: str | None = None) -> ExperimentConfig:
    """Parse INI text; ``experiment`` (e.g. the CLI subcommand) must agree with ``[experiment] name``."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    head = dict(cp["experiment"]) if cp.has_section("experiment") else {}
    bad = set(head) - set(_HEADER_KEYS)
    if bad:
        raise ConfigError(f"unknown keys in [experiment]: {', '.join(sorted(bad))}")
    name = head.get("name", "").strip() or experiment
    if name is None:
        raise ConfigError("no experiment named: set [experiment] name")
    if experiment is not None and name != experiment:
        raise ConfigError(f"config is for {name!r} but the command is {experiment!r}")
    if name not in SCHEMAS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    extra = set(cp.sections()) - {"experiment", name}
    if extra:
        raise ConfigError(f"unknown sections: {', '.join(sorted(extra))}")

    schema = SCHEMAS[name]
    params = {}
    if cp.has_section(name):
        for key, raw in cp[name].items():
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
            kind = schema[key][0]
            try:
                params[key] = _KINDS[kind][0](raw)
            except ValueError as exc:
                raise ConfigError(f"[{name}] {key}: expected {kind}, got {raw!r}") from exc
    try:
        seed = int(head.get("seed", "0"))
    except ValueError as exc:
        raise ConfigError(f"[experiment] seed must be an integer, got {head['seed']!r}") from exc
    cfg = ExperimentConfig(name, seed, head.get("output_dir", "results").strip() or "results", params)
    validate(cfg)
    return cfg


def load_config(path, experiment: str | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, experiment)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = [
        "[experiment]",
        f"name = {cfg.experiment}",
        f"seed = {cfg.seed}",
        f"output_dir = {cfg.output_dir}",
        "",
        f"[{cfg.experiment}]",
    ]
    for key, (kind, _) in SCHEMAS[cfg.experiment].items():
        lines.append(f"{key} = {_KINDS[kind][1](cfg.params[key])}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()[:16]


def validate(cfg: ExperimentConfig) -> None:
    """Cross-field checks that the schema types alone cannot express."""
    p = cfg.params
    name = cfg.experiment

    def need(cond, msg):
        if not cond:
            raise ConfigError(f"[{name}] {msg}")

    if name == "conditioning":
        need(1 <= p["p"] <= p["n"], "need 1 <= p <= n")
        need(all(1 <= m <= p["p"] for m in p["m_grid"]), "m_grid entries must lie in [1, p]")
        need(p["trials"] >= 1, "trials must be >= 1")
        need(set(p["laws"]) <= {"haar", "gaussian"} and p["laws"], "laws must be haar and/or gaussian")
    elif name == "rho":
        need(p["ratio"] > 1, "ratio (nu/gamma) must exceed 1")
        need(all(1 <= m and round(p["ratio"] * m) <= p["p"] for m in p["m_grid"]),
             "every m needs ell = ratio * m <= p")
        need(p["trials"] >= 1, "trials must be >= 1")
    elif name == "biasvar":
        need(1 <= p["p"] <= p["n"], "need 1 <= p <= n")
        need(all(1 <= m <= p["p"] for m in p["m_grid"]), "m_grid entries must lie in [1, p]")
        need(p["gamma_draws"] >= 2 and p["rhs_draws"] >= 1, "need gamma_draws >= 2 and rhs_draws >= 1")
        need(p["law"] in ("haar", "gaussian"), "law must be haar or gaussian")
    elif name == "mse-scaling":
        need(1 <= p["m"] <= p["p"] <= 50, "need 1 <= m <= p <= 50")
        need(all(q >= 1 for q in p["q_grid"]) and p["q_for_dt"] >= 1, "q values must be >= 1")
        need(all(dt > 0 for dt in p["dt_grid"] + [p["dt_for_q"]]), "time steps must be positive")
        need(p["horizon"] > 0 and p["replicates"] >= 2, "need horizon > 0 and replicates >= 2")
        need(p["law"] in ("haar", "gaussian"), "law must be haar or gaussian")
    elif name == "pde":
        need(p["pde"] in ("allen-cahn", "schrodinger"), "pde must be allen-cahn or schrodinger")
        need(p["potential"] in ("linear", "quadratic"), "potential must be linear or quadratic")
        need(set(p["methods"]) <= {"none", "tikhonov", "tsvd", "sketch"} and p["methods"],
             "methods must be drawn from none, tikhonov, tsvd, sketch")
        need(all(a > 0 for a in p["alphas"]), "alphas must be positive")
        need(all(r >= 1 for r in p["ranks"]) and all(m >= 1 for m in p["sketch_m"])
             and all(q >= 1 for q in p["sketch_q"]), "ranks, sketch_m, sketch_q must be >= 1")
        need(p["dt"] > 0 and p["num_steps"] >= 1 and p["replicates"] >= 1, "need dt > 0, num_steps >= 1, replicates >= 1")
        need(p["reference_size"] >= 2 and p["reference_size"] % 2 == 0, "reference_size must be even")
        need(p["collocation"] >= 1 and p["fit_points"] >= 1 and p["workers"] >= 1, "counts must be positive")
        need(p["test_points"] >= 1 and p["test_times"] >= 2, "need test_points >= 1 and test_times >= 2")
