"""Flat key=value experiment configurations.

A configuration file holds one ``key=value`` pair per line; blank lines
and lines starting with ``#`` are ignored.  Lists are comma separated.
``subcommand``, ``seed`` and ``output`` are common to all experiments,
every other key must appear in the schema of the subcommand.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ConfigError

COMMON = ("subcommand", "seed", "output")


def _ints(s):
    return tuple(int(v) for v in str(s).split(",") if v.strip())


def _floats(s):
    return tuple(float(v) for v in str(s).split(",") if v.strip())


def _choice(*options):
    def parse(s):
        s = str(s).strip()
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    parse.options = options
    return parse


def _string(s):
    return str(s).strip()


# key -> (parser, default); order fixes the canonical serialisation
SCHEMAS = {
    "bound": {
        "alpha": (float, 5.0),
        "beta": (float, 1.0),
        "interaction": (_string, "xy"),
        "R": (int, 1024),
        "constraint": (_choice("warmup", "general"), "warmup"),
        "c3": (float, 0.0),
        "cutoff": (int, 16),
        "approx_eps": (float, 0.05),
    },
    "perc": {
        "alpha": (float, 5.0),
        "rho": (float, 0.05),
        "R": (_ints, (16, 32, 64)),
        "M": (int, 128),
        "replicas": (int, 10_000),
        "experiment": (_choice("tails", "good", "domination", "lemmas"), "tails"),
        "cutoff": (int, 0),
        "k_max": (int, 8),
        "r_ks": (_ints, (4, 8, 16, 32)),
        "c3": (float, 0.09),
    },
    "resist": {
        "alpha": (float, 5.0),
        "epsilon": (float, 0.01),
        "x_list": (_ints, (8, 16, 32, 64)),
        "M": (int, 256),
        "replicas": (int, 20),
        "tol": (float, 1e-6),
        "cutoff": (int, 2),
        "c_tilde": (float, 0.0),
        "method": (_choice("amg", "jacobi"), "amg"),
        "workers": (int, 1),
        "chunk": (int, 4),
    },
    "mc": {
        "alpha": (float, 5.0),
        "beta": (float, 0.5),
        "interaction": (_string, "xy"),
        "M": (int, 16),
        "x_list": (_ints, (2, 4, 8)),
        "sweeps": (int, 10_000),
        "burn_in": (int, 1000),
        "boundary": (_choice("const", "random"), "const"),
        "theta_bar": (float, 0.0),
        "cutoff": (int, 4),
        "c3": (float, 0.09),
        "approx_eps": (float, 0.05),
    },
    "lemmas": {
        "k_max": (int, 10_000),
        "alphas": (_floats, (1.5, 2.0, 3.0, 5.0)),
        "n": (int, 10),
        "p": (float, 0.3),
        "eps_list": (_floats, (0.5, 1.0, 2.0)),
    },
}


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    master_seed: int = 0
    output_path: str = "out.csv"

    def __post_init__(self):
        if self.subcommand not in SCHEMAS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")


def _format(v):
    if isinstance(v, tuple):
        return ",".join(_format(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def resolve(subcommand: str, values: dict, master_seed=0, output_path="out.csv") -> ExperimentConfig:
    """Validate raw (string or typed) values against the schema and fill defaults."""
    if subcommand not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    schema = SCHEMAS[subcommand]
    params = {}
    for key, raw in values.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for subcommand {subcommand!r}")
        parser, _ = schema[key]
        try:
            if not isinstance(raw, str):
                raw = _format(tuple(raw) if isinstance(raw, (list, tuple)) else raw)
            params[key] = parser(raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value {raw!r} for key {key!r}: {e}") from None
    for key, (_, default) in schema.items():
        params.setdefault(key, default)
    try:
        seed = int(master_seed)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value {master_seed!r} for key 'seed'") from None
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    return ExperimentConfig(subcommand, params, seed, str(output_path))


def parse_pairs(text: str) -> dict:
    """Raw key -> value strings of a config text; later lines win."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = re.split(r"\s#", line, maxsplit=1)[0].strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse a config text; ``overrides`` (raw values) win over the file."""
    pairs = parse_pairs(text)
    pairs.update(overrides or {})
    sub = pairs.pop("subcommand", None)
    if sub is None:
        raise ConfigError("missing key 'subcommand'")
    seed = pairs.pop("seed", 0)
    output = pairs.pop("output", "out.csv")
    return resolve(sub, pairs, seed, output)


def serialize(config: ExperimentConfig) -> str:
    """Canonical text form: common keys, then schema order."""
    lines = [f"subcommand={config.subcommand}", f"seed={config.master_seed}",
             f"output={config.output_path}"]
    for key in SCHEMAS[config.subcommand]:
        lines.append(f"{key}={_format(config.params[key])}")
    return "\n".join(lines) + "\n"


def load(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse(fh.read())
