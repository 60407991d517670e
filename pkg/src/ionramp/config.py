"""Run configuration: JSON schema, validation, and resolution.

A run is described by a single JSON document with unit-suffixed keys
(``B0_kHz``, ``tf_ms``) so quantities can never silently change units
between files.  The document picks exactly one coupling source (trap
synthesis, possibly with overridden trap parameters, or an explicit
coupling matrix) and one starting-field rule (absolute, or a multiple
of the largest coupling).  Every command writes the fully resolved
configuration back out, and that emission re-ingests to an equivalent
RunConfig.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .evolution import DEFAULT_TD_MS
from .exceptions import ConfigError
from .ramps import FAMILIES, LOCAL_ADIABATIC
from .spectrum import GAP_GRID_POINTS
from .spin_model import DENSE_CAP_DEFAULT, CouplingMatrix, check_spin_count
from .trap import (
    DEFAULT_ALPHA,
    DEFAULT_FX_MHZ,
    DEFAULT_FZ_MHZ,
    DEFAULT_JMAX_KHZ,
    DEFAULT_RECOIL_KHZ,
    PowerLawFit,
    TrapConfig,
    calibrate_trap,
    fit_alpha,
)

SCHEMA_VERSION = 1

# Starting field as a multiple of the largest coupling, used when the
# config gives no explicit field rule.
DEFAULT_B0_OVER_JMAX = 5.0

DEFAULT_TF_MS = 2.4
DEFAULT_N_REP = 4000
DEFAULT_SEED = 1234
DEFAULT_SNAPSHOT_POINTS = 25

# 13 sweep points covering [0, 2.4] ms in 0.2 ms steps.
DEFAULT_TF_GRID_MS: tuple[float, ...] = tuple(
    round(0.2 * i, 10) for i in range(13)
)

_TRAP_KEYS = {
    "J_max_kHz": "j_max_khz",
    "alpha": "alpha",
    "fz_MHz": "fz_mhz",
    "fx_MHz": "fx_mhz",
    "recoil_kHz": "recoil_khz",
}

_TRAP_DEFAULTS = {
    "j_max_khz": DEFAULT_JMAX_KHZ,
    "alpha": DEFAULT_ALPHA,
    "fz_mhz": DEFAULT_FZ_MHZ,
    "fx_mhz": DEFAULT_FX_MHZ,
    "recoil_khz": DEFAULT_RECOIL_KHZ,
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved description of one simulator run."""

    n: int = 6
    j_khz: tuple[tuple[float, ...], ...] | None = None
    trap: tuple[tuple[str, float], ...] = ()
    b0_khz: float | None = None
    b0_over_jmax: float | None = None
    family: str = LOCAL_ADIABATIC
    tf_ms: float = DEFAULT_TF_MS
    tf_grid_ms: tuple[float, ...] = DEFAULT_TF_GRID_MS
    gap_grid_points: int = GAP_GRID_POINTS
    schedule_samples: int = 1000
    snapshot_points: int = DEFAULT_SNAPSHOT_POINTS
    t_d_ms: float = DEFAULT_TD_MS
    n_rep: int = DEFAULT_N_REP
    seed: int = DEFAULT_SEED
    dense_cap: int = DENSE_CAP_DEFAULT
    piecewise: bool = False
    out_dir: str = "out"
    workers: int = 1

    def __post_init__(self) -> None:
        check_spin_count(self.n)
        if self.j_khz is not None and self.trap:
            raise ConfigError(
                "exactly one coupling source allowed: remove either "
                "'J_kHz' or the 'trap' overrides"
            )
        if self.j_khz is not None:
            rows = self.j_khz
            if len(rows) != self.n or any(len(r) != self.n for r in rows):
                raise ConfigError(
                    f"'J_kHz' must be an {self.n}x{self.n} matrix to match n={self.n}"
                )
        for key, _ in self.trap:
            if key not in _TRAP_DEFAULTS:
                raise ConfigError(f"unknown trap parameter {key!r}")
        if self.b0_khz is not None and self.b0_over_jmax is not None:
            raise ConfigError(
                "give at most one starting-field rule: 'B0_kHz' or 'B0_over_Jmax'"
            )
        for name, val, positive in (
            ("B0_kHz", self.b0_khz, True),
            ("B0_over_Jmax", self.b0_over_jmax, True),
            ("tf_ms", self.tf_ms, False),
            ("t_d_ms", self.t_d_ms, True),
        ):
            if val is None:
                continue
            if not math.isfinite(val) or val < 0.0 or (positive and val == 0.0):
                raise ConfigError(f"{name} must be positive and finite, got {val!r}")
        if self.family not in FAMILIES:
            raise ConfigError(
                f"family must be one of {', '.join(FAMILIES)}, got {self.family!r}"
            )
        for name, val, lo in (
            ("gap_grid_points", self.gap_grid_points, 8),
            ("schedule_samples", self.schedule_samples, 16),
            ("snapshot_points", self.snapshot_points, 2),
            ("n_rep", self.n_rep, 1),
            ("dense_cap", self.dense_cap, 2),
            ("workers", self.workers, 1),
        ):
            if val < lo:
                raise ConfigError(f"{name} must be at least {lo}, got {val}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if any(t < 0.0 or not math.isfinite(t) for t in self.tf_grid_ms):
            raise ConfigError("tf_grid_ms entries must be finite and non-negative")

    # -- coupling and field resolution ---------------------------------

    def trap_kwargs(self) -> dict[str, float]:
        kwargs = dict(_TRAP_DEFAULTS)
        kwargs.update(dict(self.trap))
        return kwargs

    def build_couplings(
        self,
    ) -> tuple[CouplingMatrix, PowerLawFit | None, TrapConfig | None]:
        """Materialize the coupling source.

        Trap synthesis returns the calibrated trap and fit alongside
        the matrix; an explicit matrix is passed through and fitted
        when it has enough ions and positive entries.
        """
        if self.j_khz is not None:
            couplings = CouplingMatrix(np.asarray(self.j_khz, dtype=np.float64))
            fit: PowerLawFit | None = None
            if couplings.n >= 3 and np.all(
                couplings.j_khz[np.triu_indices(couplings.n, k=1)] > 0.0
            ):
                fit = fit_alpha(couplings)
            return couplings, fit, None
        if self.n < 3:
            raise ConfigError(
                "trap calibration needs at least 3 ions; give an explicit "
                "'J_kHz' matrix for smaller registers"
            )
        cfg, couplings, fit = calibrate_trap(self.n, **self.trap_kwargs())
        return couplings, fit, cfg

    def resolve_b0_khz(self, couplings: CouplingMatrix) -> float:
        if self.b0_khz is not None:
            return self.b0_khz
        multiple = (
            self.b0_over_jmax
            if self.b0_over_jmax is not None
            else DEFAULT_B0_OVER_JMAX
        )
        return multiple * couplings.j_max_khz

    # -- serialization --------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError(f"config must be a JSON object, got {type(doc).__name__}")
        doc = dict(doc)
        version = doc.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(
                f"config schema_version {version!r} not supported "
                f"(this build reads version {SCHEMA_VERSION})"
            )
        kwargs: dict[str, Any] = {}
        scalar_keys = {
            "n": ("n", int),
            "B0_kHz": ("b0_khz", float),
            "B0_over_Jmax": ("b0_over_jmax", float),
            "family": ("family", str),
            "tf_ms": ("tf_ms", float),
            "gap_grid_points": ("gap_grid_points", int),
            "schedule_samples": ("schedule_samples", int),
            "snapshot_points": ("snapshot_points", int),
            "t_d_ms": ("t_d_ms", float),
            "n_rep": ("n_rep", int),
            "seed": ("seed", int),
            "dense_cap": ("dense_cap", int),
            "piecewise": ("piecewise", bool),
            "out_dir": ("out_dir", str),
            "workers": ("workers", int),
        }
        for key in list(doc):
            if key in scalar_keys:
                attr, typ = scalar_keys[key]
                val = doc.pop(key)
                try:
                    kwargs[attr] = typ(val)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"config key {key!r}: {exc}") from exc
        if "J_kHz" in doc:
            rows = doc.pop("J_kHz")
            try:
                kwargs["j_khz"] = tuple(
                    tuple(float(x) for x in row) for row in rows
                )
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key 'J_kHz': {exc}") from exc
        if "trap" in doc:
            trap_doc = doc.pop("trap")
            if not isinstance(trap_doc, dict):
                raise ConfigError("config key 'trap' must be an object")
            overrides = []
            for key, val in trap_doc.items():
                if key not in _TRAP_KEYS:
                    raise ConfigError(
                        f"unknown trap parameter {key!r}; expected one of "
                        f"{', '.join(sorted(_TRAP_KEYS))}"
                    )
                overrides.append((_TRAP_KEYS[key], float(val)))
            kwargs["trap"] = tuple(sorted(overrides))
        if "tf_grid_ms" in doc:
            grid = doc.pop("tf_grid_ms")
            try:
                kwargs["tf_grid_ms"] = tuple(float(t) for t in grid)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key 'tf_grid_ms': {exc}") from exc
        if doc:
            unknown = ", ".join(repr(k) for k in sorted(doc))
            raise ConfigError(f"unrecognized config keys: {unknown}")
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        """Unit-suffixed JSON document; from_dict(to_dict(c)) == c."""
        inverse_trap = {v: k for k, v in _TRAP_KEYS.items()}
        doc: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "n": self.n,
            "family": self.family,
            "tf_ms": self.tf_ms,
            "tf_grid_ms": list(self.tf_grid_ms),
            "gap_grid_points": self.gap_grid_points,
            "schedule_samples": self.schedule_samples,
            "snapshot_points": self.snapshot_points,
            "t_d_ms": self.t_d_ms,
            "n_rep": self.n_rep,
            "seed": self.seed,
            "dense_cap": self.dense_cap,
            "piecewise": self.piecewise,
            "out_dir": self.out_dir,
            "workers": self.workers,
        }
        if self.j_khz is not None:
            doc["J_kHz"] = [list(row) for row in self.j_khz]
        if self.trap:
            doc["trap"] = {inverse_trap[k]: v for k, v in self.trap}
        if self.b0_khz is not None:
            doc["B0_kHz"] = self.b0_khz
        if self.b0_over_jmax is not None:
            doc["B0_over_Jmax"] = self.b0_over_jmax
        return doc

    def with_overrides(self, **kwargs: Any) -> "RunConfig":
        return replace(self, **kwargs)


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON run configuration."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
        ) from exc
    return RunConfig.from_dict(doc)


def dump_config(cfg: RunConfig, path: str | Path) -> None:
    """Write the resolved configuration; output is byte-stable."""
    Path(path).write_text(
        json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
    )
