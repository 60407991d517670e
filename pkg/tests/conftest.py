"""Session fixtures shared by the module and acceptance suites.

The expensive pipelines (calibration, gap curves, ramp sweeps, the
16384-state run) are built once per session; every consumer sees the
same arrays.
"""

from __future__ import annotations

import numpy as np
import pytest

from ionramp.config import RunConfig
from ionramp.evolution import evolve, sweep_ramp_families
from ionramp.ramps import local_adiabatic_ramp
from ionramp.spectrum import critical_point, gap_curve
from ionramp.trap import calibrate_trap, fit_alpha, ising_couplings

B0_OVER_JMAX = 5.0
TF_GRID_13 = tuple(round(0.2 * i, 10) for i in range(13))


@pytest.fixture(scope="session")
def calib6():
    """N=6 trap calibrated to J_max = 0.77 kHz, alpha = 1.0."""
    return calibrate_trap(6)


@pytest.fixture(scope="session")
def gap6(calib6):
    _, couplings, _ = calib6
    return gap_curve(couplings, 3.85)


@pytest.fixture(scope="session")
def crit6(gap6):
    return critical_point(gap6)


@pytest.fixture(scope="session")
def sweep13(calib6, gap6):
    """All three schedule families on the 13-point ramp-time grid."""
    _, couplings, _ = calib6
    return sweep_ramp_families(couplings, gap6, TF_GRID_13)


@pytest.fixture(scope="session")
def per_size_calibrations():
    """Independent J_max/alpha calibrations for N = 4, 6, 8."""
    out = {}
    for n in (4, 6, 8):
        _, couplings, _ = calibrate_trap(n)
        out[n] = (couplings, gap_curve(couplings, B0_OVER_JMAX * 0.77))
    return out


@pytest.fixture(scope="session")
def fixed_voltage_chains(calib6):
    """Chains of 2..10 ions in the one trap tuned for 6 ions.

    Trap voltages stay fixed; couplings, alpha, and the field window are
    re-derived per size exactly as adding ions to the device would.
    """
    trap6, _, _ = calib6
    out = {}
    for m in range(2, 11):
        cfg = trap6.with_ions(m)
        couplings = ising_couplings(cfg)
        fit = fit_alpha(couplings) if m >= 3 else None
        b0 = B0_OVER_JMAX * float(np.max(couplings.j_khz))
        out[m] = (couplings, fit, b0)
    return out


@pytest.fixture(scope="session")
def fixed_voltage_critical_points(fixed_voltage_chains):
    """Critical points for the N = 3..10 fixed-voltage family."""
    out = {}
    for m in range(3, 11):
        couplings, fit, b0 = fixed_voltage_chains[m]
        gap = gap_curve(couplings, b0)
        out[m] = (fit, critical_point(gap), gap)
    return out


@pytest.fixture(scope="session")
def pipeline14():
    """The 14-ion run: piecewise schedule from extrapolated gap data.

    Built through the same workspace path the command line uses, so the
    acceptance check exercises the production wiring.
    """
    from ionramp.cli import _prepare

    cfg = RunConfig(n=14, piecewise=True)
    ws = _prepare(cfg)
    gap = ws.gap()
    profile = local_adiabatic_ramp(gap, cfg.tf_ms, samples=cfg.schedule_samples)
    result = evolve(ws.couplings, profile, t_d_ms=cfg.t_d_ms)
    return ws.couplings, gap, result
