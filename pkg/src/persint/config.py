"""Experiment configuration: a JSON schema with up-front validation.

A config file is a flat JSON object. ``experiment`` selects the recipe
(fig2, fig4, or mise); the remaining keys parameterize the stages. Every
constraint from every stage is checked before anything runs, and all
violations are reported together with their field paths. A missing master
seed is accepted and defaults to 0; per-stage seeds are always derived
from the master via the documented child-seed rule.
"""

import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError

DEFAULT_GENERATOR = {
    "kind": "field",
    "population": "uniform",
    "n": 60,
    "h": 0.25,
    "grid": [48, 48],
}

EXPERIMENTS = ("fig2", "fig4", "mise", "custom")


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int | None = None
    out_dir: str | None = None
    threads: int = 1
    save_intermediates: bool = True
    # pipeline stages (fig2 and fig4)
    n: int | None = None
    N: int | None = None
    h: float | None = None
    tau: float | None = None
    field_grid: list = field(default_factory=lambda: [128, 128])
    field_bounds: list | None = None
    intensity_grid: list = field(default_factory=lambda: [128, 128])
    max_dim: int = 1
    g0: float = 1.0
    g1: float = 1.0
    # fig4 sweep
    q_values: list | None = None
    B: int | None = None
    trials: int | None = None
    alphas: list = field(default_factory=lambda: [0.05, 0.01])
    # mise sweep
    N_values: list | None = None
    tau_scale: float | None = None
    reps: int | None = None
    N_ref: int | None = None
    tau_ref: float | None = None
    generator: dict = field(default_factory=lambda: dict(DEFAULT_GENERATOR))

    def master_seed(self):
        return 0 if self.seed is None else int(self.seed)

    def seed_note(self):
        if self.seed is None:
            return "seed absent from config; master seed defaulted to 0"
        return f"master seed {int(self.seed)} from config"

    def to_dict(self):
        return asdict(self)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}

# "custom" configs describe hand-driven stage runs; nothing is required.
_REQUIRED = {
    "fig2": ("n", "N", "h", "tau"),
    "fig4": ("n", "N", "h", "tau", "q_values", "B", "trials"),
    "mise": ("N_values", "tau_scale", "reps"),
    "custom": (),
}


def _check_grid(errors, name, value):
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) and v >= 2 for v in value)
    ):
        errors.append(f"{name}: must be [nx, ny] with integer nx, ny >= 2, got {value!r}")


def _check_positive(errors, name, value, kind=float):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        errors.append(f"{name}: must be a {kind.__name__} > 0, got {value!r}")


def validate_config_dict(raw):
    """All constraint violations of a raw config mapping, with field paths."""
    errors = []
    if not isinstance(raw, dict):
        return ["config root must be a JSON object"]
    unknown = sorted(set(raw) - _FIELD_NAMES)
    for key in unknown:
        errors.append(f"{key}: unknown configuration key")

    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        errors.append(f"experiment: must be one of {EXPERIMENTS}, got {exp!r}")
        return errors

    for key in _REQUIRED[exp]:
        if raw.get(key) is None:
            errors.append(f"{key}: required for experiment {exp!r}")

    seed = raw.get("seed")
    if seed is not None and (not isinstance(seed, int) or not 0 <= seed < 2**64):
        errors.append(f"seed: must be a 64-bit unsigned integer, got {seed!r}")
    threads = raw.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        errors.append(f"threads: must be an integer >= 1, got {threads!r}")

    if exp in ("fig2", "fig4", "custom"):
        if raw.get("n") is not None and (not isinstance(raw["n"], int) or raw["n"] < 1):
            errors.append(f"n: must be an integer >= 1, got {raw['n']!r}")
        if raw.get("N") is not None and (not isinstance(raw["N"], int) or raw["N"] < 1):
            errors.append(f"N: must be an integer >= 1, got {raw['N']!r}")
        if raw.get("h") is not None:
            _check_positive(errors, "h", raw["h"])
        if raw.get("tau") is not None:
            _check_positive(errors, "tau", raw["tau"])
        _check_grid(errors, "field_grid", raw.get("field_grid", [128, 128]))
        _check_grid(errors, "intensity_grid", raw.get("intensity_grid", [128, 128]))
        bounds = raw.get("field_bounds")
        if bounds is not None:
            ok = (
                isinstance(bounds, (list, tuple))
                and len(bounds) == 4
                and all(isinstance(v, (int, float)) for v in bounds)
                and bounds[0] < bounds[1]
                and bounds[2] < bounds[3]
            )
            if not ok:
                errors.append(
                    f"field_bounds: must be [x_lo, x_hi, y_lo, y_hi] with lo < hi, got {bounds!r}"
                )
        if raw.get("max_dim", 1) not in (0, 1):
            errors.append(f"max_dim: must be 0 or 1, got {raw.get('max_dim')!r}")
        for key in ("g0", "g1"):
            v = raw.get(key, 1.0)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or v < 0:
                errors.append(f"{key}: must be a number >= 0, got {v!r}")

    if exp == "fig4":
        qs = raw.get("q_values")
        if qs is not None:
            if not isinstance(qs, list) or not qs:
                errors.append(f"q_values: must be a nonempty list, got {qs!r}")
            else:
                for i, q in enumerate(qs):
                    if not isinstance(q, (int, float)) or not 0.0 <= q <= 1.0:
                        errors.append(f"q_values[{i}]: must lie in [0, 1], got {q!r}")
        if raw.get("B") is not None and (not isinstance(raw["B"], int) or raw["B"] < 1):
            errors.append(f"B: must be an integer >= 1, got {raw['B']!r}")
        if raw.get("trials") is not None and (
            not isinstance(raw["trials"], int) or raw["trials"] < 1
        ):
            errors.append(f"trials: must be an integer >= 1, got {raw['trials']!r}")
        alphas = raw.get("alphas", [0.05, 0.01])
        if not isinstance(alphas, list) or not alphas:
            errors.append(f"alphas: must be a nonempty list, got {alphas!r}")
        else:
            for i, a in enumerate(alphas):
                if not isinstance(a, (int, float)) or not 0.0 < a < 1.0:
                    errors.append(f"alphas[{i}]: must lie in (0, 1), got {a!r}")

    if exp == "mise":
        nvs = raw.get("N_values")
        if nvs is not None:
            if not isinstance(nvs, list) or not nvs:
                errors.append(f"N_values: must be a nonempty list, got {nvs!r}")
            else:
                for i, v in enumerate(nvs):
                    if not isinstance(v, int) or v < 1:
                        errors.append(f"N_values[{i}]: must be an integer >= 1, got {v!r}")
        if raw.get("tau_scale") is not None:
            _check_positive(errors, "tau_scale", raw["tau_scale"])
        if raw.get("reps") is not None and (not isinstance(raw["reps"], int) or raw["reps"] < 1):
            errors.append(f"reps: must be an integer >= 1, got {raw['reps']!r}")
        if raw.get("N_ref") is not None:
            if not isinstance(raw["N_ref"], int) or raw["N_ref"] < 2:
                errors.append(f"N_ref: must be an integer >= 2, got {raw['N_ref']!r}")
            elif isinstance(nvs, list) and nvs and all(isinstance(v, int) for v in nvs):
                if raw["N_ref"] <= max(nvs):
                    errors.append(
                        f"N_ref: must exceed the largest N in N_values, got {raw['N_ref']!r}"
                    )
        if raw.get("tau_ref") is not None:
            _check_positive(errors, "tau_ref", raw["tau_ref"])
        gen = raw.get("generator", DEFAULT_GENERATOR)
        if not isinstance(gen, dict) or gen.get("kind") not in ("field", "synthetic"):
            errors.append(
                f"generator: must be an object with kind 'field' or 'synthetic', got {gen!r}"
            )
        elif gen.get("kind") == "field":
            if "grid" in gen:
                _check_grid(errors, "generator.grid", gen["grid"])
            if "h" in gen:
                _check_positive(errors, "generator.h", gen["h"])
            if "n" in gen and (not isinstance(gen["n"], int) or gen["n"] < 1):
                errors.append(f"generator.n: must be an integer >= 1, got {gen['n']!r}")

    return errors


def config_from_dict(raw):
    """Build a validated ExperimentConfig; raises ConfigError with all violations."""
    errors = validate_config_dict(raw)
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(**raw)


def load_config(path):
    """Load and validate a config file; raises ConfigError on any violation."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path} is not valid JSON: {exc}"]) from None
    return config_from_dict(raw)


def validate_config(path):
    """All violations in a config file (empty list means valid)."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        return [f"cannot read {path}: {exc}"]
    except json.JSONDecodeError as exc:
        return [f"{path} is not valid JSON: {exc}"]
    return validate_config_dict(raw)
