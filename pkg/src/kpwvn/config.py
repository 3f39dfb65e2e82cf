"""Run configuration: a TOML file plus command-line overrides."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .asymptotics import Tolerances
from .errors import OutputError, ValidationError
from .lattice import ModelParams, PerturbationKind, TailSequence

_MODEL_KEYS = ("d", "alpha0", "c", "omega", "gamma", "kappa")


@dataclass
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    kind: PerturbationKind = PerturbationKind.NONE
    k_max: float = 8.0
    N: int | None = None
    lambdas: list = field(default_factory=list)
    lambda_grid: tuple | None = None  # (lo, hi, count)
    gap_index: int = 1
    section_sizes: tuple = (200, 400, 800)
    n_range: tuple | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    out: Path = Path("kpwvn-out")
    format: str = "json"
    plot: bool = False
    curve_points: int = 2000

    def validate(self) -> "RunConfig":
        if not self.k_max > 0:
            raise ValidationError("k_max must be positive")
        if self.N is not None and self.N < 2:
            raise ValidationError("N must be >= 2")
        if self.format not in ("json", "csv"):
            raise ValidationError("format must be json or csv")
        sizes = tuple(int(s) for s in self.section_sizes)
        if not sizes or min(sizes) < 1 or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValidationError("section sizes must be positive and strictly increasing")
        self.section_sizes = sizes
        for lam in self.lambdas:
            if not lam > 0:
                raise ValidationError(f"energies must be positive (got {lam})")
        if self.lambda_grid is not None:
            lo, hi, count = self.lambda_grid
            if not 0 < lo < hi or int(count) < 1:
                raise ValidationError("lambda grid needs 0 < lo < hi and count >= 1")
        if self.n_range is not None:
            lo, hi = self.n_range
            if not 1 <= lo < hi:
                raise ValidationError("n_range needs 1 <= lo < hi")
        if self.curve_points < 2:
            raise ValidationError("curve_points must be >= 2")
        return self

    def resolved(self) -> dict:
        """Plain-data view embedded in every output file."""
        return {
            "model": {"kind": self.kind.value, **self.params.describe()},
            "k_max": self.k_max,
            "N": self.N,
            "lambdas": list(self.lambdas),
            "lambda_grid": list(self.lambda_grid) if self.lambda_grid else None,
            "gap_index": self.gap_index,
            "section_sizes": list(self.section_sizes),
            "n_range": list(self.n_range) if self.n_range else None,
            "tolerances": dataclasses.asdict(self.tolerances),
            "format": self.format,
        }


def parse_grid(text: str) -> tuple:
    """'lo:hi:count' -> (lo, hi, count)."""
    try:
        lo, hi, count = text.split(":")
        return float(lo), float(hi), int(count)
    except ValueError:
        raise ValidationError(f"expected lo:hi:count, got {text!r}") from None


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise OutputError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"bad config {path}: {exc}") from exc


def _merge_model(base: dict, table: dict) -> dict:
    for key, val in table.items():
        if key in _MODEL_KEYS:
            base[key] = float(val)
        elif key == "kind":
            base["kind"] = val
        elif key == "q":
            base["q"] = val
        else:
            raise ValidationError(f"unknown model key {key!r}")
    return base


def build_config(file_data: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Combine file contents and overrides; overrides win, None means unset."""
    file_data = dict(file_data or {})
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    model = _merge_model({}, file_data.pop("model", {}))
    run = dict(file_data.pop("run", {}))
    gapscan = dict(file_data.pop("gapscan", {}))
    decompose = dict(file_data.pop("decompose", {}))
    tol = dict(file_data.pop("tolerances", {}))
    if file_data:
        raise ValidationError(f"unknown config sections: {sorted(file_data)}")

    for key in (*_MODEL_KEYS, "kind", "q"):
        if key in overrides:
            model[key] = overrides.pop(key)

    q = model.pop("q", "zero")
    kind = PerturbationKind.parse(model.pop("kind", "none"))
    params = ModelParams(**{k: float(v) for k, v in model.items()},
                         q=q if isinstance(q, TailSequence) else TailSequence.parse(str(q)))

    try:
        tolerances = Tolerances(**{k: float(v) for k, v in tol.items()})
    except TypeError as exc:
        raise ValidationError(f"unknown tolerance: {exc}") from None

    cfg = RunConfig(params=params, kind=kind, tolerances=tolerances)
    merged = {**run, **gapscan, **decompose, **overrides}
    for key, val in merged.items():
        if key == "k_max":
            cfg.k_max = float(val)
        elif key == "N":
            cfg.N = int(val)
        elif key in ("lambda", "lambdas"):
            cfg.lambdas = [float(v) for v in (val if isinstance(val, (list, tuple)) else [val])]
        elif key == "lambda_grid":
            cfg.lambda_grid = parse_grid(val) if isinstance(val, str) else tuple(val)
        elif key == "gap_index":
            cfg.gap_index = int(val)
        elif key == "section_sizes":
            cfg.section_sizes = tuple(int(v) for v in val)
        elif key == "n_range":
            cfg.n_range = tuple(int(v) for v in val)
        elif key == "out":
            cfg.out = Path(val)
        elif key == "format":
            cfg.format = str(val)
        elif key == "plot":
            cfg.plot = bool(val)
        elif key == "curve_points":
            cfg.curve_points = int(val)
        else:
            raise ValidationError(f"unknown option {key!r}")
    if not math.isfinite(cfg.k_max):
        raise ValidationError("k_max must be finite")
    return cfg.validate()


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    return build_config(load_toml(path) if path else None, overrides)
