"""Exit criteria. One test per criterion; the terminal summary prints PASS/FAIL lines."""

import itertools
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from nogocool import (
    BipartiteDims,
    DensityMatrix,
    Spectrum,
    Verdict,
    check_no_go,
    evolve,
    ground_population,
    tensor,
)
from nogocool.cli import main
from nogocool.dynamics import (
    SIGMA_MINUS,
    HermitianOperator,
    LindbladModel,
    amplitude_damping_model,
    contrast_report,
    exchange_model,
    lindblad_propagate,
)
from nogocool.feasibility import haar_bound_search
from nogocool.linalg import haar_unitaries
from nogocool.scenarios import (
    CorrelatedStateSpec,
    ThermalSpec,
    approximate_cooling_analysis,
    correlated_scenario,
    nonthermal_bath_scenario,
    swap_scenario,
)

from conftest import random_density

S = DensityMatrix.diagonal([0.7, 0.3])
B_THERMAL = DensityMatrix.diagonal([0.8, 0.2])


def test_criterion_1_spectrum_conservation():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for k in range(100):
        dim = (4, 8, 16)[k % 3]
        rho = random_density(dim, rng, rank=int(rng.integers(1, dim + 1)))
        u = haar_unitaries(1, dim, rng)[0]
        out = evolve(rho, u)
        p = np.sort(np.linalg.eigvalsh(rho.elements))[::-1]
        q = np.sort(np.linalg.eigvalsh(out.elements))[::-1]
        worst = max(worst, float(np.max(np.abs(p - q))))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-10
    assert elapsed < 5.0


def permutation_oracle(diag, n_ground):
    best = 0.0
    for perm in itertools.permutations(range(len(diag))):
        best = max(best, sum(diag[i] for i in range(len(diag)) if perm[i] < n_ground))
    return best


def test_criterion_2_no_go_soundness():
    start = time.perf_counter()
    rep = check_no_go(S, B_THERMAL)
    assert rep.verdict is Verdict.INFEASIBLE
    assert rep.d0 == 4 and rep.df_max <= 2 and rep.d0 > rep.df_max
    rho0 = tensor(S, B_THERMAL)
    oracle = permutation_oracle(np.diag(rho0.elements).real, 2)
    assert oracle == pytest.approx(0.80, abs=1e-15)
    assert rep.bound == pytest.approx(oracle, abs=1e-12)
    res = haar_bound_search(rho0, BipartiteDims(2, 2), samples=10_000, seed=0)
    assert res.max_achieved <= 0.80 + 1e-8
    assert time.perf_counter() - start < 30.0


def test_criterion_3_swap_cooling():
    res = swap_scenario(0.7)
    assert res.verdict is Verdict.FEASIBLE
    assert res.final_ground_population >= 1 - 1e-12
    np.testing.assert_allclose(sorted(res.spectra["final_bath"], reverse=True), [0.7, 0.3], atol=1e-12)


def test_criterion_4_nonthermal_bath():
    res = nonthermal_bath_scenario(S, [0.8, 0.2, 0.0, 0.0])
    assert res.report.d0 == 4 and res.checks["df"] == 4
    assert res.verdict is Verdict.FEASIBLE
    assert ground_population(evolve(tensor(S, DensityMatrix.diagonal([0.8, 0.2, 0, 0])), res.certificate), BipartiteDims(2, 4)) >= 1 - 1e-10
    assert res.checks["target_error"] <= 1e-10
    flipped = nonthermal_bath_scenario(S, [0.5, 0.3, 0.2, 0.0])
    assert flipped.verdict is Verdict.INFEASIBLE


@pytest.mark.parametrize(
    "weights,split", [((0.5, 0.5), 0), ((0.3, 0.2, 0.3, 0.2), 1), ((0.1, 0.4, 0.35, 0.15), 1)]
)
def test_criterion_5_correlated_state_cooling(weights, split):
    res = correlated_scenario(CorrelatedStateSpec(weights, split))
    ground = np.zeros((2, 2))
    ground[0, 0] = 1
    assert np.max(np.abs(res.final_system.elements - ground)) <= 1e-10
    assert np.max(np.abs(res.final_bath.elements - res.initial_bath.elements)) <= 1e-10


def test_criterion_6_approximate_cooling():
    rep = approximate_cooling_analysis(Spectrum([0.9, 0.1]), ThermalSpec((0.0, 1.0), 1.0), True)
    assert rep.gap_condition_holds
    assert abs(rep.ratio_final - rep.ratio_initial) <= 1e-9
    assert rep.implied_Tf_equals_Ti is True
    assert rep.system_spectrum_unchanged is True


def test_criterion_7_master_equation_contrast():
    gamma = 1.0
    horizon = 20 / gamma
    rep = contrast_report(exchange_model(1.0, (1.0,), 0.2), amplitude_damping_model(1.0, gamma), S, B_THERMAL, horizon)
    closed = 1 - 0.3 * math.exp(-gamma * horizon)
    assert rep.me_asymptotic_ground_population >= 0.999
    assert abs(rep.me_asymptotic_ground_population - closed) <= 1e-6
    assert rep.unitary_bound == pytest.approx(0.80, abs=1e-12)
    assert rep.violation is True
    pure = contrast_report(
        exchange_model(1.0, (1.0,), 0.2), amplitude_damping_model(1.0, gamma), S, DensityMatrix.diagonal([1, 0]), horizon
    )
    assert pure.violation is False


def test_criterion_8_lindblad_convergence():
    model = LindbladModel(
        HermitianOperator(np.array([[0.0, 0.25], [0.25, 1.0]])),
        ((SIGMA_MINUS, 1.0), (np.diag([0.0, 1.0]), 0.2)),
    )
    rho = DensityMatrix([[0.3, 0.1j], [-0.1j, 0.7]])
    coarse = lindblad_propagate(model, rho, [0.0, 10.0], 0.04)
    fine = lindblad_propagate(model, rho, [0.0, 10.0], 0.02)
    assert np.max(np.abs(coarse.final_state - fine.final_state)) <= 1e-6
    assert coarse.max_trace_correction <= 1e-8 and fine.max_trace_correction <= 1e-8


def test_criterion_9_determinism(tmp_path):
    cfg = Path(__file__).resolve().parents[1] / "configs" / "worked_examples.toml"
    assert main(["run", str(cfg), "--seed", "17", "--out", str(tmp_path / "a")]) == 0
    assert main(["run", str(cfg), "--seed", "17", "--out", str(tmp_path / "b")]) == 0
    reports = sorted((tmp_path / "a").glob("*.report.json"))
    assert len(reports) == 7
    for f in reports:
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name
        json.loads(f.read_text())
