"""Run configuration: flat key = value files, documented defaults, and
validation that runs before any compute starts.

Every field of RunConfig is a key; floats round-trip losslessly through
their shortest decimal form.  Zero means "pick automatically" for the
damping, step size, and target residual knobs, matching how the solvers
treat None.
"""

from dataclasses import dataclass, fields

from .archive import read_key_values, write_key_values


class ConfigError(ValueError):
    """Invalid configuration; message carries file/line context when known."""


ALGORITHMS = ("lm", "landweber")
PHANTOMS = ("square-inclusion", "disks")


@dataclass
class RunConfig:
    grid_size: int = 129          # nodes per side, odd
    final_time: float = 4.0
    cfl: float = 0.5
    illumination_count: int = 8
    phantom: str = "square-inclusion"
    c_lo: float = 0.7
    c_hi: float = 1.3
    sigma_lo: float = 0.07
    sigma_hi: float = 0.15
    c_init: float = 1.0
    sigma_init: float = 0.1
    freeze_speed: bool = False
    freeze_absorption: bool = False
    kappa: float = 0.0
    seed: int = 0
    algorithm: str = "lm"
    outer_cap: int = 80
    cg_tol: float = 1e-8
    cg_cap: int = 50
    damping: float = 0.0          # 0 = scale from the data
    step_size: float = 0.0        # 0 = 0.9 / (estimated norm)^2
    landweber_iters: int = 500
    target_residual: float = 0.0  # 0 = run out the budget
    out_dir: str = "runs"

    def validate(self):
        if self.grid_size < 9 or self.grid_size % 2 == 0:
            raise ConfigError("grid_size must be odd and at least 9")
        if self.final_time <= 0.0:
            raise ConfigError("final_time must be positive")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError("cfl must lie in (0, 1]")
        if self.illumination_count < 1:
            raise ConfigError("illumination_count must be at least 1")
        if self.phantom not in PHANTOMS:
            raise ConfigError(f"phantom must be one of {PHANTOMS}")
        if not 0.0 < self.c_lo < self.c_hi:
            raise ConfigError("speed bounds need 0 < c_lo < c_hi")
        if not 0.0 <= self.sigma_lo < self.sigma_hi:
            raise ConfigError("absorption bounds need 0 <= sigma_lo < sigma_hi")
        if not self.c_lo <= self.c_init <= self.c_hi:
            raise ConfigError("c_init must lie within the speed bounds")
        if not self.sigma_lo <= self.sigma_init <= self.sigma_hi:
            raise ConfigError("sigma_init must lie within the absorption "
                              "bounds")
        if self.kappa < 0.0:
            raise ConfigError("kappa must be nonnegative")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
        if self.outer_cap < 1 or self.cg_cap < 1 or self.landweber_iters < 1:
            raise ConfigError("iteration caps must be at least 1")
        if self.cg_tol <= 0.0:
            raise ConfigError("cg_tol must be positive")
        if self.damping < 0.0 or self.step_size < 0.0 or \
                self.target_residual < 0.0:
            raise ConfigError("damping, step_size, and target_residual "
                              "must be nonnegative (zero means automatic)")
        return self


_COERCERS = {int: int, float: float, str: str}


def _coerce(name, kind, text, where):
    if kind is bool:
        lowered = text.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ConfigError(f"{where}: {name} expects true/false, got {text!r}")
    try:
        return _COERCERS[kind](text)
    except ValueError:
        raise ConfigError(
            f"{where}: {name} expects {kind.__name__}, got {text!r}") from None


def config_from_mapping(mapping, where="config"):
    """Build a validated RunConfig from string key/value pairs."""
    by_name = {"int": int, "float": float, "str": str, "bool": bool}
    known = {}
    for f in fields(RunConfig):
        known[f.name] = by_name[f.type] if isinstance(f.type, str) else f.type
    values = {}
    for key, text in mapping.items():
        if key not in known:
            raise ConfigError(f"{where}: unknown key {key!r}")
        values[key] = _coerce(key, known[key], text, where)
    return RunConfig(**values).validate()


def load_config(path) -> RunConfig:
    try:
        mapping = read_key_values(path)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config_from_mapping(mapping, where=str(path))


def save_config(path, config: RunConfig):
    config.validate()
    write_key_values(
        path, {f.name: getattr(config, f.name) for f in fields(RunConfig)},
        comment="run configuration; every key shows its effective value")
