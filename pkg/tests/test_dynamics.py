import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from nogocool import BipartiteDims, DensityMatrix, HermitianOperator, tensor
from nogocool import _kernels
from nogocool.dynamics import (
    SIGMA_MINUS,
    JointModel,
    LindbladModel,
    amplitude_damping_model,
    contrast_report,
    exact_propagate,
    exchange_model,
    lindblad_propagate,
)
from nogocool.errors import DimensionMismatch, PositivityLoss, StepSizeTooLarge, ValidationError
from nogocool.feasibility import max_ground_population
from nogocool.scenarios import ThermalSpec, thermal_state
from nogocool.spectral import product_spectrum, spectrum

from conftest import random_density

S = DensityMatrix.diagonal([0.7, 0.3])
B = DensityMatrix.diagonal([0.8, 0.2])


def uncoupled(model: JointModel) -> JointModel:
    zero = HermitianOperator(np.zeros((model.dims.joint,) * 2))
    return JointModel(model.h_system, model.h_bath, zero, model.dims)


def test_exchange_model_structure():
    m = exchange_model(1.0, (1.0, 1.0), 0.2)
    assert m.dims == BipartiteDims(2, 4)
    h = m.total().elements
    # |1>|00> couples to |0>|10> and |0>|01> with strength g
    assert h[4, 2] == pytest.approx(0.2) and h[4, 1] == pytest.approx(0.2)
    np.testing.assert_allclose(np.diag(m.h_bath.elements).real, [0, 1, 1, 2])


def test_joint_model_dimension_checks():
    m = exchange_model()
    with pytest.raises(DimensionMismatch):
        JointModel(m.h_system, m.h_bath, HermitianOperator(np.eye(4)), m.dims)


def test_exact_uncoupled_populations_constant():
    model = uncoupled(exchange_model())
    b = thermal_state(ThermalSpec((0.0, 1.0, 1.0, 2.0), 1.0))
    traj = exact_propagate(model, tensor(S, b), np.linspace(0, 50, 60))
    np.testing.assert_allclose(traj.ground_population, 0.7, atol=1e-12)
    np.testing.assert_allclose(traj.purity, 0.58, atol=1e-12)


def test_exact_matches_scipy_expm(rng):
    model = exchange_model(1.0, (0.8, 1.3), 0.3)
    rho0 = random_density(8, rng)
    h = model.total().elements
    times = [0.0, 0.7, 3.1, 12.0]
    traj = exact_propagate(model, rho0, times)
    for t, pop in zip(times, traj.ground_population):
        u = expm(-1j * h * t)
        oracle = u @ rho0.elements @ u.conj().T
        assert pop == pytest.approx(np.trace(oracle[:4, :4]).real, abs=1e-12)
    np.testing.assert_allclose(
        traj.final_state, expm(-1j * h * 12.0) @ rho0.elements @ expm(1j * h * 12.0), atol=1e-11
    )


def test_exact_spectrum_drift_and_bound():
    model = exchange_model(1.0, (1.0, 1.0), 0.2)
    b = thermal_state(ThermalSpec((0.0, 1.0, 1.0, 2.0), 1.0))
    times = np.linspace(0, 50, 100)
    traj = exact_propagate(model, tensor(S, b), times)
    assert max(traj.joint_spectrum_drift) <= 1e-8
    bound = max_ground_population(product_spectrum(spectrum(S), spectrum(b)), 4)
    assert max(traj.ground_population) <= bound + 1e-8
    assert max(traj.ground_population) > 0.7  # population actually flows


@settings(max_examples=25, deadline=None)
@given(
    gaps=st.lists(st.floats(0.2, 2.0), min_size=1, max_size=2),
    g=st.floats(-1.0, 1.0),
    s0=st.floats(0.05, 0.95),
    temperature=st.floats(0.2, 5.0),
)
def test_exact_never_beats_bound(gaps, g, s0, temperature):
    model = exchange_model(1.0, gaps, g)
    e = tuple(np.real(np.diag(model.h_bath.elements)))
    from nogocool.scenarios import gibbs_weights

    s = DensityMatrix.diagonal([s0, 1 - s0])
    b = DensityMatrix.diagonal(gibbs_weights(ThermalSpec(e, temperature)))
    traj = exact_propagate(model, tensor(s, b), np.linspace(0, 40, 80))
    bound = max_ground_population(product_spectrum(spectrum(s), spectrum(b)), b.dim)
    assert max(traj.ground_population) <= bound + 1e-8
    assert max(traj.joint_spectrum_drift) <= 1e-8


def test_exact_time_validation():
    with pytest.raises(ValidationError):
        exact_propagate(exchange_model(), tensor(S, DensityMatrix(np.eye(4) / 4)), [1.0, 0.5])
    with pytest.raises(DimensionMismatch):
        exact_propagate(exchange_model(), tensor(S, B), [0.0])


def test_lindblad_zero_rates(kernel_mode):
    model = LindbladModel(HermitianOperator(np.diag([0.0, 1.3])), ((SIGMA_MINUS, 0.0),))
    rho = DensityMatrix([[0.6, 0.2 + 0.1j], [0.2 - 0.1j, 0.4]])
    traj = lindblad_propagate(model, rho, np.linspace(0, 10, 11), 0.01)
    np.testing.assert_allclose(traj.ground_population, 0.6, atol=1e-12)
    assert traj.joint_spectrum_drift == []


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
def test_amplitude_damping_closed_form(gamma, kernel_mode):
    model = amplitude_damping_model(1.0, gamma)
    times = np.linspace(0, 20 / gamma, 41)
    traj = lindblad_propagate(model, DensityMatrix.diagonal([0.7, 0.3]), times, 0.02 / gamma)
    closed = 1 - 0.3 * np.exp(-gamma * times)
    np.testing.assert_allclose(traj.ground_population, closed, atol=1e-6)
    assert traj.ground_population[-1] == pytest.approx(1.0, abs=1e-6)


def test_amplitude_damping_from_excited_state(kernel_mode):
    gamma = 1.0
    times = np.linspace(0, 10, 21)
    traj = lindblad_propagate(amplitude_damping_model(1.0, gamma), DensityMatrix.diagonal([0, 1]), times, 0.01)
    np.testing.assert_allclose(traj.ground_population, 1 - np.exp(-gamma * times), atol=1e-6)


def test_lindblad_step_size_guard():
    with pytest.raises(StepSizeTooLarge):
        lindblad_propagate(amplitude_damping_model(1.0, 1.0), S, [0.0, 1.0], 0.06)


def test_lindblad_positivity_monitor(monkeypatch):
    def broken(rho, h, ls, rates, dt, n):
        return np.diag([1.1, -0.1]).astype(complex), 0.0

    monkeypatch.setattr(_kernels, "lindblad_rk4", broken)
    with pytest.raises(PositivityLoss):
        lindblad_propagate(amplitude_damping_model(), S, [0.0, 1.0], 0.01)


def test_lindblad_dt_halving_converges(kernel_mode):
    model = LindbladModel(
        HermitianOperator(np.array([[0.0, 0.3], [0.3, 1.0]])),
        ((SIGMA_MINUS, 0.8), (np.diag([0.0, 1.0]), 0.3)),
    )
    rho = DensityMatrix([[0.5, 0.3], [0.3, 0.5]])
    a = lindblad_propagate(model, rho, [0.0, 5.0], 0.04)
    b = lindblad_propagate(model, rho, [0.0, 5.0], 0.02)
    assert np.max(np.abs(a.final_state - b.final_state)) <= 1e-6
    assert a.max_trace_correction <= 1e-8 and b.trace_flags == 0


def test_contrast_violation():
    rep = contrast_report(exchange_model(1.0, (1.0,), 0.2), amplitude_damping_model(1.0, 1.0), S, B, 20.0)
    assert rep.unitary_bound == pytest.approx(0.80, abs=1e-12)
    assert rep.me_asymptotic_ground_population == pytest.approx(1 - 0.3 * np.exp(-20), abs=1e-6)
    assert rep.exact_max_ground_population <= rep.unitary_bound + 1e-8
    assert rep.violation


def test_contrast_pure_bath_no_violation():
    rep = contrast_report(
        exchange_model(1.0, (1.0,), 0.2), amplitude_damping_model(1.0, 1.0), S, DensityMatrix.diagonal([1, 0]), 20.0
    )
    assert rep.unitary_bound == 1.0 and not rep.violation


def test_contrast_zero_coupling_zero_rates():
    rep = contrast_report(
        exchange_model(1.0, (1.0,), 0.0),
        LindbladModel(HermitianOperator(np.diag([0.0, 1.0])), ((SIGMA_MINUS, 0.0),)),
        S, B, 10.0, n_times=20,
    )
    np.testing.assert_allclose(rep.exact.ground_population, 0.7, atol=1e-12)
    np.testing.assert_allclose(rep.lindblad.ground_population, 0.7, atol=1e-12)
    assert not rep.violation


def test_contrast_dimension_checks():
    with pytest.raises(DimensionMismatch):
        contrast_report(exchange_model(1.0, (1.0, 1.0)), amplitude_damping_model(), S, B, 1.0)


def test_trajectory_csv_full_precision():
    traj = exact_propagate(exchange_model(1.0, (1.0,), 0.2), tensor(S, B), [0.0, 1.0 / 3.0])
    rows = list(csv.reader(io.StringIO(traj.to_csv())))
    assert rows[0] == ["time", "ground_population", "spectrum_drift", "purity"]
    assert rows[2][0] == format(1 / 3, ".17g")
    assert float(rows[2][1]) == traj.ground_population[1]
