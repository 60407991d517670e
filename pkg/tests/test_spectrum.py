"""Low-lying spectrum, coupled-gap curve, critical point, size scaling."""

import numpy as np
import pytest
from scipy.integrate import quad

from helpers import dense_hamiltonian_z, one_site, PAULI_Y
from ionramp.exceptions import ConfigError, GapWindowError
from ionramp.spectrum import (
    CriticalPoint,
    critical_point,
    extrapolate_critical,
    gap_curve,
    low_spectrum,
    piecewise_gap,
)
from ionramp.spin_model import CouplingMatrix, build_hamiltonian
from ionramp.trap import calibrate_trap


@pytest.fixture(scope="module")
def calib6():
    _, couplings, _ = calibrate_trap(6)
    return couplings


@pytest.fixture(scope="module")
def curve6(calib6):
    return gap_curve(calib6, 5.0 * calib6.j_max_khz)


def random_couplings(n: int, seed: int) -> CouplingMatrix:
    rng = np.random.default_rng(seed)
    j = rng.uniform(0.1, 1.0, size=(n, n))
    j = 0.5 * (j + j.T)
    np.fill_diagonal(j, 0.0)
    return CouplingMatrix(j)


@pytest.mark.parametrize("n", [6, 8])
def test_iterative_eigenvalues_match_dense_oracle(n):
    c = random_couplings(n, seed=n)
    b = 0.52
    h = build_hamiltonian(c, b)
    spec_it = low_spectrum(h, 6, force_iterative=True)
    oracle = np.linalg.eigvalsh(dense_hamiltonian_z(c.j_khz, b)).real
    np.testing.assert_allclose(spec_it.values_khz, oracle[:6], atol=1e-9)


def test_dense_and_iterative_routes_agree(calib6):
    for b in (0.05, 0.19, 1.7):
        h = build_hamiltonian(calib6, b)
        d = low_spectrum(h, 8)
        it = low_spectrum(h, 8, force_iterative=True)
        np.testing.assert_allclose(d.values_khz, it.values_khz, atol=1e-9)


def test_gap_curve_shape_and_endpoints(calib6, curve6):
    b0 = 5.0 * calib6.j_max_khz
    assert curve6.b_khz[0] == 0.0
    assert curve6.b_khz[-1] == pytest.approx(b0, rel=1e-12)
    assert np.all(np.diff(curve6.b_khz) > 0.0)
    assert np.all(curve6.delta_khz > 0.0)
    # continuity: adjacent samples never jump by more than a quarter of
    # the curve's full range
    jumps = np.abs(np.diff(curve6.delta_khz))
    assert np.max(jumps) <= 0.25 * (curve6.delta_khz.max() - curve6.delta_khz.min())


def test_gap_curve_csv_header(curve6, tmp_path):
    path = tmp_path / "gap.csv"
    curve6.to_csv(path)
    assert path.read_text().splitlines()[0] == "B_kHz,Delta_kHz,coupled_index"


def test_coupled_index_endpoints_small_register():
    _, couplings, _ = calibrate_trap(4)
    curve = gap_curve(couplings, 5.0 * couplings.j_max_khz)
    assert curve.coupled_index[0] == 3
    assert curve.coupled_index[-1] == 5


def test_critical_point_matches_brute_force_scan(calib6, curve6):
    cp = critical_point(curve6)

    # independent scan: dense eigh in the z basis, coupled = nonzero
    # matrix element of the field derivative sum_i Y_i against the
    # ground state, fine grid bracketing the minimum
    n = 6
    dim = 1 << n
    y_sum = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(n):
        y_sum += one_site(n, i, PAULI_Y)

    def coupled_gap(b: float) -> float:
        h = dense_hamiltonian_z(calib6.j_khz, b)
        evals, evecs = np.linalg.eigh(h)
        g = evecs[:, 0]
        for m in range(1, dim):
            if abs(evecs[:, m].conj() @ (y_sum @ g)) > 1e-8:
                return float(evals[m] - evals[0])
        raise AssertionError("no coupled state found")

    bs = np.linspace(0.12, 0.26, 141)
    gaps = np.array([coupled_gap(b) for b in bs])
    k = int(np.argmin(gaps))
    assert cp.delta_c_khz == pytest.approx(gaps[k], rel=2e-3)
    assert cp.b_c_khz == pytest.approx(bs[k], abs=0.02)


def test_quadrature_matches_adaptive_integration(curve6):
    ours = curve6.integral_inv_delta_sq(0.0, curve6.b0_khz)
    ref, err = quad(
        lambda b: float(curve6.delta_at(b)) ** -2.0,
        0.0,
        curve6.b0_khz,
        limit=400,
    )
    assert err < 1e-6 * ref
    assert ours == pytest.approx(ref, rel=1e-5)


def test_piecewise_model_quadrature_matches_closed_form():
    b_c, d_c, b0, slope = 0.21, 0.11, 3.5, 4.0
    curve = piecewise_gap(b_c, d_c, b0, slope=slope)
    flat = b_c / d_c**2
    rise = (1.0 / d_c - 1.0 / (d_c + slope * (b0 - b_c))) / slope
    assert curve.integral_inv_delta_sq(0.0, b0) == pytest.approx(
        flat + rise, rel=1e-2
    )
    cp = critical_point(curve)
    assert cp.b_c_khz == pytest.approx(b_c, abs=1e-9)
    assert cp.delta_c_khz == pytest.approx(d_c, abs=1e-12)


def test_piecewise_model_validates_knee():
    with pytest.raises(ConfigError):
        piecewise_gap(2.0, 0.1, 1.0)
    with pytest.raises(ConfigError):
        piecewise_gap(0.5, -0.1, 1.0)


def test_window_too_small_raises(calib6):
    curve = gap_curve(calib6, 0.05)
    with pytest.raises(GapWindowError):
        critical_point(curve)


def test_extrapolation_recovers_exact_scaling():
    ns = np.array([4, 5, 6, 7, 8])
    points = [
        CriticalPoint(b_c_khz=0.1 + 0.02 * n, delta_c_khz=1.7 * n**-0.8)
        for n in ns
    ]
    scaling = extrapolate_critical(ns, points)
    pred = scaling.predict(14)
    assert pred.b_c_khz == pytest.approx(0.1 + 0.02 * 14, rel=1e-9)
    assert pred.delta_c_khz == pytest.approx(1.7 * 14.0**-0.8, rel=1e-9)


def test_extrapolation_needs_four_distinct_sizes():
    with pytest.raises(ConfigError):
        extrapolate_critical(
            np.array([4, 5, 6]),
            [CriticalPoint(0.1, 1.0)] * 3,
        )


def test_zero_field_row_is_one_sided_limit(calib6, curve6):
    floor = curve6.meta["zero_field_floor_khz"]
    assert 0.0 < floor < curve6.b_khz[1]
    # the reported B=0 gap sits on the curve's trend, not on an outlier
    assert curve6.delta_khz[0] == pytest.approx(curve6.delta_khz[1], rel=0.05)
