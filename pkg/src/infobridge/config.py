"""Run configuration: flat key=value files plus command-line overrides.

The file format is deliberately primitive — one ``key = value`` pair per
line, ``#`` comments, no sections — so acceptance configurations are
diffable and round-trip exactly.
"""

from dataclasses import dataclass, field, fields, replace

from .compensator import parse_functional
from .errors import ConfigError, DomainError
from .paths import TimeGrid

__all__ = ["RunConfig", "parse_config_file", "load_config"]


@dataclass(frozen=True)
class RunConfig:
    dist: str = "exp:1.0"
    dt: float = 0.01
    t_max: float = 2.0
    paths: int = 1000
    seed: int = 0
    workers: int = 0                       # 0: environment variable, else CPUs
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    tail_cutoff_mass: float = 1e-9
    lt_estimator: str = "occupation"
    lt_eps_coeff: float = 1.0
    lt_eps_power: float = 0.5
    kh: tuple = ()
    report_times: tuple = (0.5, 1.0, 2.0)
    residual_pairs: tuple = ((0.25, 0.75), (0.5, 1.0), (1.0, 2.0))
    functionals: tuple = ("one", "indicator_beta_above:0.2", "abs_beta")
    gate_multiplier: float = 3.0
    out: str = "."
    zero_k: bool = False

    def validate(self, command=None):
        """Check base consistency; report-time/grid alignment is enforced only
        for commands that consume report times."""
        if self.dt <= 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.t_max <= self.dt:
            raise ConfigError(f"t_max must exceed dt, got {self.t_max}")
        if self.paths < 1:
            raise ConfigError(f"paths must be at least 1, got {self.paths}")
        if self.lt_estimator not in ("occupation", "tanaka"):
            raise ConfigError(f"unknown local-time estimator {self.lt_estimator!r}")
        if self.lt_eps_coeff <= 0.0 or self.lt_eps_power <= 0.0:
            raise ConfigError("epsilon policy parameters must be positive")
        if self.gate_multiplier <= 0.0:
            raise ConfigError("gate_multiplier must be positive")
        if any(h <= 0.0 for h in self.kh):
            raise ConfigError("window lags must be positive")
        if command not in ("compensator", "convergence"):
            return self
        grid = TimeGrid.regular(self.t_max, self.dt)
        named = list(self.report_times)
        if command == "compensator":
            named += [t for p in self.residual_pairs for t in p]
        for t in named:
            if not (0.0 < t <= self.t_max):
                raise ConfigError(f"report time {t} outside (0, t_max]")
            try:
                grid.index_of(t)
            except DomainError:
                raise ConfigError(f"report time {t} does not lie on the grid") from None
        for s, t in self.residual_pairs:
            if not s < t:
                raise ConfigError(f"residual pair ({s}, {t}) needs s < t")
        for f in self.functionals:
            try:
                parse_functional(f)
            except DomainError as exc:
                raise ConfigError(str(exc)) from None
        return self


_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


def _parse_value(name, text, kind):
    text = text.strip()
    try:
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "bool":
            return _BOOL[text.lower()]
        if kind == "floats":
            return tuple(float(tok) for tok in text.split(",") if tok.strip())
        if kind == "strs":
            return tuple(tok.strip() for tok in text.split(",") if tok.strip())
        if kind == "pairs":
            out = []
            for tok in text.split(","):
                tok = tok.strip()
                if not tok:
                    continue
                a, _, b = tok.partition(":")
                out.append((float(a), float(b)))
            return tuple(out)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad value for {name!r}: {text!r}") from exc
    return text


_SCHEMA = {
    "dist": "str", "dt": "float", "t_max": "float", "paths": "int",
    "seed": "int", "workers": "int", "rel_tol": "float", "abs_tol": "float",
    "tail_cutoff_mass": "float", "lt_estimator": "str",
    "lt_eps_coeff": "float", "lt_eps_power": "float", "kh": "floats",
    "report_times": "floats", "residual_pairs": "pairs",
    "functionals": "strs", "gate_multiplier": "float", "out": "str",
    "zero_k": "bool",
}


def parse_config_file(path):
    """Read a key=value file into an (unvalidated) override mapping."""
    overrides = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            overrides[key] = _parse_value(key, value, _SCHEMA[key])
    return overrides


def load_config(config_path=None, command=None, **flag_overrides):
    """RunConfig from an optional file plus non-None flag overrides."""
    values = {}
    if config_path is not None:
        values.update(parse_config_file(config_path))
    for key, val in flag_overrides.items():
        if val is None:
            continue
        if key not in _SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}")
        values[key] = val
    known = {f.name for f in fields(RunConfig)}
    assert set(values) <= known
    return RunConfig(**values).validate(command)
