"""Command-line front end.

Each subcommand reads one JSON run configuration (defaults apply when
none is given), drives the corresponding module, and writes CSV/JSON
files into the output directory.  Outputs are deterministic: the same
configuration and seed produce byte-identical files.  ``repro``
chains the pipeline for a named figure recipe.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .analysis import imparted_energy_khz, most_prevalent, sample_counts
from .config import RunConfig, dump_config, load_config
from .evolution import (
    EvolutionResult,
    evolve,
    instantaneous_state,
    outcome_distribution,
    sweep_ramp_families,
)
from .exceptions import ConfigError, NumericalError
from .ramps import (
    EXPONENTIAL,
    FAMILIES,
    LINEAR,
    LOCAL_ADIABATIC,
    RampProfile,
    adiabaticity_trace,
    adiabatic_threshold_ms,
    critical_time,
    exponential_ramp,
    linear_ramp,
    local_adiabatic_ramp,
)
from .spectrum import (
    GapCurve,
    critical_point,
    extrapolate_critical,
    gap_curve,
    piecewise_gap,
)
from .spin_model import CouplingMatrix, neel_indices
from .trap import TrapConfig, fit_alpha, ising_couplings

# Sizes diagonalized exactly to anchor the extrapolated critical point
# of registers too large for exact treatment.
EXTRAPOLATION_SIZES: tuple[int, ...] = (4, 5, 6, 7, 8, 9)

FIGURES = ("fig2", "fig3a", "fig3b", "fig4", "fig5", "fig6b")

# Fixed-voltage register sizes scanned for the size-scaling table.
SCAN_SIZES: tuple[int, ...] = (3, 4, 5, 6, 7, 8, 9, 10)


# ---------------------------------------------------------------------------
# shared plumbing


@dataclass
class Workspace:
    """Everything a command derives from one configuration."""

    cfg: RunConfig
    couplings: CouplingMatrix
    alpha_fit: Any
    trap_cfg: TrapConfig | None
    b0_khz: float

    _gap: GapCurve | None = None

    def gap(self) -> GapCurve:
        if self._gap is None:
            if self.cfg.piecewise:
                self._gap = _extrapolated_gap(self)
            else:
                self._gap = gap_curve(
                    self.couplings,
                    self.b0_khz,
                    grid_points=self.cfg.gap_grid_points,
                    dense_cap=self.cfg.dense_cap,
                    workers=self.cfg.workers,
                )
        return self._gap


def _prepare(cfg: RunConfig) -> Workspace:
    couplings, alpha_fit, trap_cfg = cfg.build_couplings()
    return Workspace(
        cfg=cfg,
        couplings=couplings,
        alpha_fit=alpha_fit,
        trap_cfg=trap_cfg,
        b0_khz=cfg.resolve_b0_khz(couplings),
    )


def _extrapolated_gap(ws: Workspace) -> GapCurve:
    """Piecewise gap model anchored by exact runs at small sizes.

    The small registers reuse the run's trap at the same voltages and
    beams, so the extrapolation follows one physical family up to the
    requested size.
    """
    if ws.trap_cfg is None:
        raise ConfigError(
            "the piecewise gap model extrapolates from smaller registers of "
            "the same trap, so it needs trap synthesis, not an explicit matrix"
        )
    cfg = ws.cfg
    points = []
    for m in EXTRAPOLATION_SIZES:
        small = ising_couplings(ws.trap_cfg.with_ions(m))
        curve = gap_curve(
            small,
            cfg.resolve_b0_khz(small),
            grid_points=cfg.gap_grid_points,
            dense_cap=cfg.dense_cap,
            workers=cfg.workers,
        )
        points.append(critical_point(curve))
    scaling = extrapolate_critical(np.asarray(EXTRAPOLATION_SIZES), points)
    predicted = scaling.predict(cfg.n)
    curve = piecewise_gap(
        predicted.b_c_khz,
        predicted.delta_c_khz,
        ws.b0_khz,
        grid_points=cfg.gap_grid_points,
    )
    curve.meta["extrapolated"] = True
    curve.meta["anchor_sizes"] = list(EXTRAPOLATION_SIZES)
    return curve


def _design_profile(ws: Workspace, family: str, tf_ms: float) -> RampProfile:
    if family == LINEAR:
        return linear_ramp(ws.b0_khz, tf_ms, samples=ws.cfg.schedule_samples)
    if family == EXPONENTIAL:
        return exponential_ramp(ws.b0_khz, tf_ms, samples=ws.cfg.schedule_samples)
    if family == LOCAL_ADIABATIC:
        return local_adiabatic_ramp(ws.gap(), tf_ms, samples=ws.cfg.schedule_samples)
    raise ConfigError(f"unknown ramp family {family!r}")


def _snapshot_grid(cfg: RunConfig, tf_ms: float) -> np.ndarray:
    return np.linspace(0.0, tf_ms, cfg.snapshot_points)


def _jsonable(value: Any) -> Any:
    """Make numpy scalars/arrays and NaN safe for byte-stable JSON."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def _write_json(path: Path, doc: dict[str, Any]) -> Path:
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    return path


def _write_table(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow(
                [repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row]
            )
    return path


def _critical_point_doc(ws: Workspace, gap: GapCurve) -> dict[str, Any]:
    cp = critical_point(gap)
    return {
        "B_c_kHz": cp.b_c_khz,
        "Delta_c_kHz": cp.delta_c_khz,
        "B0_kHz": gap.b0_khz,
        "epsilon_kHz": gap.epsilon,
        "model": gap.meta.get("model", "exact"),
        "extrapolated": bool(gap.meta.get("extrapolated", False)),
        "coupled_index_small_B": int(gap.coupled_index[0]),
        "coupled_index_large_B": int(gap.coupled_index[-1]),
        "n": ws.cfg.n,
    }


def _ramp_doc(ws: Workspace, profile: RampProfile) -> dict[str, Any]:
    gap = ws.gap()
    doc: dict[str, Any] = {
        "family": profile.family,
        "tf_ms": profile.tf_ms,
        "B0_kHz": profile.b0_khz,
        "threshold_ms": adiabatic_threshold_ms(gap, profile.family),
        "critical_time_ms": critical_time(profile, gap),
    }
    if profile.tau_ms is not None:
        doc["tau_ms"] = profile.tau_ms
    if profile.gamma is not None:
        doc["gamma"] = profile.gamma
    doc.update(profile.meta)
    return doc


def _evolution_doc(ws: Workspace, result: EvolutionResult) -> dict[str, Any]:
    a, b = neel_indices(ws.cfg.n)
    return {
        "n": ws.cfg.n,
        "tf_ms": result.meta["tf_ms"],
        "t_d_ms": result.t_d_ms,
        "neel_indices": [a, b],
        "P_overlap": result.p_overlap[-1],
        "P_pop": result.p_pop[-1],
        "P_overlap_decohered": result.p_overlap_decohered[-1],
        "P_pop_decohered": result.p_pop_decohered[-1],
        "imparted_energy_kHz": imparted_energy_khz(result.final_state, ws.couplings),
        "integrator": {k: _jsonable(v) for k, v in result.meta.items()},
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_couplings(ws: Workspace, out: Path) -> list[Path]:
    written = []
    path = out / "couplings.csv"
    ws.couplings.to_csv(path)
    written.append(path)
    doc: dict[str, Any] = {
        "n": ws.cfg.n,
        "J_max_kHz": ws.couplings.j_max_khz,
        "B0_kHz": ws.b0_khz,
        "source": "explicit" if ws.trap_cfg is None else "trap",
    }
    if ws.alpha_fit is not None:
        doc.update(
            {
                "alpha": ws.alpha_fit.alpha,
                "fit_J_max_kHz": ws.alpha_fit.j_max_khz,
                "rms_log_residual": ws.alpha_fit.rms_log_residual,
                "n_pairs": ws.alpha_fit.n_pairs,
            }
        )
    else:
        doc["alpha"] = None
    if ws.trap_cfg is not None:
        doc["trap"] = {
            "fz_MHz": ws.trap_cfg.fz_mhz,
            "fx_MHz": ws.trap_cfg.fx_mhz,
            "rabi_kHz": ws.trap_cfg.rabi_khz,
            "recoil_kHz": ws.trap_cfg.recoil_khz,
            "detuning_kHz": ws.trap_cfg.detuning_khz,
        }
    written.append(_write_json(out / "alpha_fit.json", doc))
    return written


def cmd_spectrum(ws: Workspace, out: Path) -> list[Path]:
    gap = ws.gap()
    path = out / "gap_curve.csv"
    gap.to_csv(path)
    return [path, _write_json(out / "critical_point.json", _critical_point_doc(ws, gap))]


def cmd_ramp(ws: Workspace, out: Path) -> list[Path]:
    profile = _design_profile(ws, ws.cfg.family, ws.cfg.tf_ms)
    ramp_path = out / f"ramp_{profile.family}.csv"
    profile.to_csv(ramp_path)
    trace = adiabaticity_trace(profile, ws.gap())
    trace_path = out / f"trace_{profile.family}.csv"
    trace.to_csv(trace_path)
    return [ramp_path, trace_path, _write_json(out / "ramp.json", _ramp_doc(ws, profile))]


def cmd_evolve(ws: Workspace, out: Path) -> list[Path]:
    cfg = ws.cfg
    if cfg.tf_ms <= 0.0:
        raise ConfigError("evolve needs tf_ms > 0")
    profile = _design_profile(ws, cfg.family, cfg.tf_ms)
    result = evolve(
        ws.couplings,
        profile,
        snapshots_ms=_snapshot_grid(cfg, cfg.tf_ms),
        t_d_ms=cfg.t_d_ms,
    )
    pop_path = out / "populations.csv"
    result.to_csv(pop_path)
    dist = outcome_distribution(result.final_state)
    dist_path = out / "distribution.csv"
    dist.to_csv(dist_path)
    return [
        pop_path,
        dist_path,
        _write_json(out / "evolve.json", _evolution_doc(ws, result)),
    ]


def _sweep_tables(ws: Workspace) -> tuple[list[list], list[list], dict[str, Any]]:
    cfg = ws.cfg
    sweep = sweep_ramp_families(
        ws.couplings,
        ws.gap(),
        cfg.tf_grid_ms,
        t_d_ms=cfg.t_d_ms,
        workers=cfg.workers,
    )
    ideal_rows = []
    deco_rows = []
    for col, tf in enumerate(sweep.tf_ms):
        ideal_rows.append([tf] + [sweep.p_pop[i, col] for i in range(len(sweep.families))])
        deco_rows.append(
            [tf] + [sweep.p_pop_decohered[i, col] for i in range(len(sweep.families))]
        )
    doc = {
        "families": list(sweep.families),
        "tf_grid_ms": list(map(float, sweep.tf_ms)),
        "t_d_ms": sweep.t_d_ms,
        "n": cfg.n,
        "B0_kHz": ws.b0_khz,
    }
    return ideal_rows, deco_rows, doc


_SWEEP_HEADER = ["tf_ms", "P_linear", "P_exponential", "P_local_adiabatic"]


def cmd_sweep(ws: Workspace, out: Path) -> list[Path]:
    ideal_rows, deco_rows, doc = _sweep_tables(ws)
    return [
        _write_table(out / "sweep.csv", _SWEEP_HEADER, ideal_rows),
        _write_table(out / "sweep_decohered.csv", _SWEEP_HEADER, deco_rows),
        _write_json(out / "sweep.json", doc),
    ]


def cmd_analyze(ws: Workspace, out: Path) -> list[Path]:
    cfg = ws.cfg
    if cfg.tf_ms > 0.0:
        profile = _design_profile(ws, cfg.family, cfg.tf_ms)
        result = evolve(ws.couplings, profile, t_d_ms=cfg.t_d_ms)
        dist = outcome_distribution(result.final_state)
    else:
        dist = outcome_distribution(instantaneous_state(cfg.n))
    counts = sample_counts(dist, cfg.n_rep, cfg.seed)
    report = most_prevalent(counts, k=2)
    counts_path = out / "counts.csv"
    counts.to_csv(counts_path)
    dist_path = out / "distribution.csv"
    dist.to_csv(dist_path)
    doc = report.to_json_dict()
    doc.update({"family": cfg.family, "tf_ms": cfg.tf_ms, "n_rep": cfg.n_rep})
    a, b = neel_indices(cfg.n)
    doc["neel_indices"] = [a, b]
    doc["neel_is_top2"] = report.top_set == {a, b}
    return [counts_path, dist_path, _write_json(out / "prevalence.json", doc)]


# ---------------------------------------------------------------------------
# figure recipes


def repro_fig2(ws: Workspace, out: Path) -> list[Path]:
    """Schedule shapes, slopes, and adiabaticity traces at tf = 2.4 ms."""
    written = []
    doc: dict[str, Any] = {"tf_ms": ws.cfg.tf_ms, "families": {}}
    for family in FAMILIES:
        profile = _design_profile(ws, family, ws.cfg.tf_ms)
        ramp_path = out / f"ramp_{profile.family}.csv"
        profile.to_csv(ramp_path)
        trace_path = out / f"trace_{profile.family}.csv"
        adiabaticity_trace(profile, ws.gap()).to_csv(trace_path)
        written += [ramp_path, trace_path]
        doc["families"][profile.family] = _ramp_doc(ws, profile)
    written.append(_write_json(out / "fig2.json", doc))
    return written


def repro_fig3a(ws: Workspace, out: Path) -> list[Path]:
    """Final AFM probability against ramp time for the three families."""
    ideal_rows, deco_rows, doc = _sweep_tables(ws)
    return [
        _write_table(out / "fig3a.csv", _SWEEP_HEADER, ideal_rows),
        _write_table(out / "fig3a_decohered.csv", _SWEEP_HEADER, deco_rows),
        _write_json(out / "fig3a.json", doc),
    ]


def repro_fig3b(ws: Workspace, out: Path) -> list[Path]:
    """AFM probability at intermediate times through a tf = 2.4 ms ramp."""
    cfg = ws.cfg
    snapshots = _snapshot_grid(cfg, cfg.tf_ms)
    columns: dict[str, EvolutionResult] = {}
    doc: dict[str, Any] = {"tf_ms": cfg.tf_ms, "families": {}}
    for family in FAMILIES:
        profile = _design_profile(ws, family, cfg.tf_ms)
        result = evolve(ws.couplings, profile, snapshots_ms=snapshots, t_d_ms=cfg.t_d_ms)
        columns[family] = result
        doc["families"][profile.family] = {
            "critical_time_ms": critical_time(profile, ws.gap()),
            "final_P_pop": result.p_pop[-1],
        }
    base = columns[FAMILIES[0]]
    rows_ideal = []
    rows_deco = []
    for i, t in enumerate(base.t_ms):
        rows_ideal.append([t] + [columns[f].p_pop[i] for f in FAMILIES])
        rows_deco.append([t] + [columns[f].p_pop_decohered[i] for f in FAMILIES])
    header = ["t_ms", "P_linear", "P_exponential", "P_local_adiabatic"]
    return [
        _write_table(out / "fig3b.csv", header, rows_ideal),
        _write_table(out / "fig3b_decohered.csv", header, rows_deco),
        _write_json(out / "fig3b.json", doc),
    ]


def repro_fig4(ws: Workspace, out: Path) -> list[Path]:
    """Full outcome distribution at every ramp time of the sweep grid."""
    cfg = ws.cfg
    dim = 1 << cfg.n
    rows = []
    for tf in cfg.tf_grid_ms:
        if tf == 0.0:
            state = instantaneous_state(cfg.n)
        else:
            profile = _design_profile(ws, LOCAL_ADIABATIC, tf)
            state = evolve(ws.couplings, profile, t_d_ms=cfg.t_d_ms).final_state
        dist = outcome_distribution(state)
        rows.append([tf] + [float(p) for p in dist.probabilities])
    header = ["tf_ms"] + [f"p{i}" for i in range(dim)]
    a, b = neel_indices(cfg.n)
    final = np.asarray(rows[-1][1:])
    order = np.argsort(final)[::-1]
    doc = {
        "n": cfg.n,
        "neel_indices": [a, b],
        "tf_grid_ms": list(map(float, cfg.tf_grid_ms)),
        "top2_at_final_tf": sorted(int(i) for i in order[:2]),
        "neel_total_at_final_tf": float(final[a] + final[b]),
    }
    return [
        _write_table(out / "fig4.csv", header, rows),
        _write_json(out / "fig4.json", doc),
    ]


def repro_fig5(ws: Workspace, out: Path) -> list[Path]:
    """Size scan at fixed trap voltages: fitted range and critical gap."""
    if ws.trap_cfg is None:
        raise ConfigError("the size scan varies one trap, so it needs trap synthesis")
    cfg = ws.cfg
    rows = []
    for m in SCAN_SIZES:
        couplings = ising_couplings(ws.trap_cfg.with_ions(m))
        curve = gap_curve(
            couplings,
            cfg.resolve_b0_khz(couplings),
            grid_points=cfg.gap_grid_points,
            dense_cap=cfg.dense_cap,
            workers=cfg.workers,
        )
        cp = critical_point(curve)
        alpha = fit_alpha(couplings).alpha if m >= 3 else float("nan")
        rows.append([m, alpha, cp.b_c_khz, cp.delta_c_khz, couplings.j_max_khz])
    alphas = [r[1] for r in rows]
    deltas = [r[3] for r in rows]
    doc = {
        "sizes": list(SCAN_SIZES),
        "alpha_decreasing": bool(
            all(a > b for a, b in zip(alphas, alphas[1:]))
        ),
        "delta_c_decreasing": bool(all(a > b for a, b in zip(deltas, deltas[1:]))),
        "trap": {
            "fz_MHz": ws.trap_cfg.fz_mhz,
            "fx_MHz": ws.trap_cfg.fx_mhz,
            "rabi_kHz": ws.trap_cfg.rabi_khz,
            "recoil_kHz": ws.trap_cfg.recoil_khz,
            "detuning_kHz": ws.trap_cfg.detuning_khz,
        },
    }
    header = ["N", "alpha", "B_c_kHz", "Delta_c_kHz", "J_max_kHz"]
    return [
        _write_table(out / "fig5.csv", header, rows),
        _write_json(out / "fig5.json", doc),
    ]


def repro_fig6b(ws: Workspace, out: Path) -> list[Path]:
    """Exact outcome distribution of a large register on the model ramp."""
    cfg = ws.cfg
    profile = _design_profile(ws, LOCAL_ADIABATIC, cfg.tf_ms)
    result = evolve(ws.couplings, profile, t_d_ms=cfg.t_d_ms)
    dist = outcome_distribution(result.final_state)
    dist_path = out / "fig6b.csv"
    dist.to_csv(dist_path)
    a, b = neel_indices(cfg.n)
    order = np.argsort(dist.probabilities)[::-1]
    doc = {
        "n": cfg.n,
        "family": profile.family,
        "tf_ms": cfg.tf_ms,
        "neel_indices": [a, b],
        "top2": sorted(int(i) for i in order[:2]),
        "neel_total": float(dist.probabilities[a] + dist.probabilities[b]),
        "mean_probability": float(dist.probabilities.mean()),
        "gap_model": ws.gap().meta.get("model", "exact"),
        "P_pop_decohered": result.p_pop_decohered[-1],
    }
    return [dist_path, _write_json(out / "fig6b.json", doc)]


# Figure recipes pin the reference parameters; --config can override.
_RECIPE_CONFIGS: dict[str, RunConfig] = {
    "fig2": RunConfig(),
    "fig3a": RunConfig(),
    "fig3b": RunConfig(),
    "fig4": RunConfig(),
    "fig5": RunConfig(),
    "fig6b": RunConfig(n=14, piecewise=True),
}

_RECIPES = {
    "fig2": repro_fig2,
    "fig3a": repro_fig3a,
    "fig3b": repro_fig3b,
    "fig4": repro_fig4,
    "fig5": repro_fig5,
    "fig6b": repro_fig6b,
}

_COMMANDS = {
    "couplings": cmd_couplings,
    "spectrum": cmd_spectrum,
    "ramp": cmd_ramp,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
}


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, help="output directory (overrides config)")
    common.add_argument("--seed", type=int, help="sampling seed (overrides config)")
    common.add_argument(
        "--piecewise",
        action="store_const",
        const=True,
        help="use the extrapolated piecewise gap model",
    )
    common.add_argument(
        "--dense-cap",
        type=int,
        dest="dense_cap",
        help="largest register diagonalized densely (overrides config)",
    )
    parser = argparse.ArgumentParser(
        prog="ionramp",
        description=(
            "Long-range Ising simulator: trap-derived couplings, gap spectra, "
            "adiabatic ramp design, Schrodinger evolution, and most-prevalent-"
            "state analysis."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} stage")
    repro = sub.add_parser(
        "repro", parents=[common], help="reproduce a reference dataset end to end"
    )
    repro.add_argument("figure", choices=FIGURES)
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    if args.config is not None:
        cfg = load_config(args.config)
    elif args.command == "repro":
        cfg = _RECIPE_CONFIGS[args.figure]
    else:
        cfg = RunConfig()
    overrides: dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.piecewise is not None:
        overrides["piecewise"] = args.piecewise
    if args.dense_cap is not None:
        overrides["dense_cap"] = args.dense_cap
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    return cfg.with_overrides(**overrides) if overrides else cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        ws = _prepare(cfg)
        if args.command == "repro":
            written = _RECIPES[args.figure](ws, out)
        else:
            written = _COMMANDS[args.command](ws, out)
        config_path = out / "run_config.json"
        dump_config(cfg, config_path)
        written.append(config_path)
        for path in written:
            print(f"wrote {path}")
        return 0
    except ConfigError as exc:
        print(f"ionramp: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"ionramp: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
