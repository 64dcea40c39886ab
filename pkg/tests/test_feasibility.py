import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from nogocool import (
    BipartiteDims,
    DensityMatrix,
    Spectrum,
    Verdict,
    build_cooling_unitary,
    check_no_go,
    evolve,
    ground_population,
    haar_unitary,
    max_ground_population,
    pair_eigenvalues,
    product_spectrum,
    spectra_equal,
    spectrum,
    tensor,
)
from nogocool.errors import InfeasiblePairing
from nogocool.feasibility import (
    Obstruction,
    Pairing,
    ground_target_spectrum,
    haar_bound_search,
    permutation_from_pairing,
)
from nogocool.scenarios import ThermalSpec, thermal_state

from conftest import random_density


def permutation_oracle(diag, n_bath):
    """Best ground population over every basis permutation of a diagonal state."""
    diag = np.asarray(diag)
    best = 0.0
    for perm in itertools.permutations(range(diag.size)):
        # perm[i] = destination of source i; ground block = destinations < n_bath
        best = max(best, sum(diag[i] for i in range(diag.size) if perm[i] < n_bath))
    return best


def rotated(weights, rng):
    u = haar_unitary(len(weights), rng).elements
    m = u @ np.diag(weights) @ u.conj().T
    return DensityMatrix(0.5 * (m + m.conj().T))


def test_max_ground_population_examples():
    assert max_ground_population(Spectrum([1, 0, 0, 0]), 1) == 1.0
    assert max_ground_population(Spectrum([1, 0, 0, 0]), 3) == 1.0
    diag = [0.56, 0.14, 0.24, 0.06]
    oracle = permutation_oracle(diag, 2)
    assert oracle == pytest.approx(0.80, abs=1e-15)
    assert max_ground_population(Spectrum.from_values(diag), 2) == pytest.approx(oracle, abs=1e-15)
    assert max_ground_population(Spectrum([0.25] * 4), 2) == pytest.approx(0.5)


def test_max_ground_population_matches_permutation_oracle(rng):
    for _ in range(20):
        w = rng.dirichlet(np.ones(6))
        for nb in (1, 2, 3):
            assert max_ground_population(Spectrum.from_values(w), nb) == pytest.approx(
                permutation_oracle(w, nb), abs=1e-14
            )


def test_haar_never_beats_bound(kernel_mode):
    rho = tensor(DensityMatrix.diagonal([0.7, 0.3]), DensityMatrix.diagonal([0.8, 0.2]))
    res = haar_bound_search(rho, BipartiteDims(2, 2), samples=10_000, seed=3)
    assert res.max_achieved <= 0.80 + 1e-8
    assert res.max_achieved > 0.7
    assert len(res.running_max) == 10
    assert all(a <= b for a, b in zip(res.running_max, res.running_max[1:]))


def test_haar_search_deterministic_and_worker_independent():
    rho = tensor(DensityMatrix.diagonal([0.6, 0.4]), DensityMatrix.diagonal([0.9, 0.1]))
    dims = BipartiteDims(2, 2)
    a = haar_bound_search(rho, dims, samples=2500, seed=11, workers=1)
    b = haar_bound_search(rho, dims, samples=2500, seed=11, workers=3)
    assert a == b


def test_haar_search_identity_sample():
    rho = tensor(DensityMatrix.diagonal([0.7, 0.3]), DensityMatrix.diagonal([0.8, 0.2]))
    res = haar_bound_search(rho, BipartiteDims(2, 2), samples=1, include_identity=True)
    assert res.max_achieved == pytest.approx(0.7, abs=1e-15)


def test_haar_search_pure_states_bounded_by_one():
    rho = tensor(DensityMatrix.diagonal([1, 0]), DensityMatrix.diagonal([1, 0]))
    res = haar_bound_search(rho, BipartiteDims(2, 2), samples=5000, seed=1)
    assert 0.9 < res.max_achieved <= 1.0 + 1e-12


def test_check_no_go_thermal_bath_infeasible():
    b = thermal_state(ThermalSpec((0.0, np.log(4.0)), 1.0))  # weights (0.8, 0.2)
    rep = check_no_go(DensityMatrix.diagonal([0.7, 0.3]), b)
    assert rep.verdict is Verdict.INFEASIBLE
    assert (rep.d0, rep.df_max) == (4, 2)
    assert rep.bound == pytest.approx(0.80, abs=1e-12)
    assert rep.pairing is None and "d0=4" in rep.obstruction


def test_check_no_go_pure_system_pure_bath():
    rep = check_no_go(DensityMatrix.diagonal([1, 0]), DensityMatrix.diagonal([1, 0]))
    assert rep.verdict is Verdict.FEASIBLE and rep.bound == 1.0


def test_check_no_go_swap_pairing():
    s, b = DensityMatrix.diagonal([0.7, 0.3]), DensityMatrix.diagonal([1, 0])
    rep = check_no_go(s, b)
    assert rep.verdict is Verdict.FEASIBLE
    assert [(a.initial, a.final) for a in rep.pairing.assignments] == [((0, 0), (0, 0)), ((1, 0), (0, 1))]
    u = build_cooling_unitary(s, b, rep.pairing)
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    np.testing.assert_array_equal(u.elements, swap)


def test_check_no_go_nonthermal_bath():
    rep = check_no_go(DensityMatrix.diagonal([0.7, 0.3]), DensityMatrix.diagonal([0.8, 0.2, 0, 0]))
    assert (rep.d0, rep.df_max, rep.verdict) == (4, 4, Verdict.FEASIBLE)


def test_check_no_go_marginal():
    rep = check_no_go(DensityMatrix.diagonal([0.7, 0.3]), DensityMatrix.diagonal([1 - 5e-9, 5e-9]), tol=1e-9)
    assert rep.verdict is Verdict.MARGINAL


def test_pair_eigenvalues_cases():
    p = Spectrum([0.7, 0.3, 0, 0])
    pairing = pair_eigenvalues(p, p)
    assert isinstance(pairing, Pairing)
    assert [a.rank for a in pairing.assignments] == [0, 1]

    dims = BipartiteDims(2, 2)
    obst = pair_eigenvalues(Spectrum([0.56, 0.24, 0.14, 0.06]), ground_target_spectrum([0.56, 0.24], dims))
    assert isinstance(obst, Obstruction)
    assert obst.index == 2 and obst.initial_value == pytest.approx(0.14) and obst.target_value == 0.0

    b = np.array([0.4, 0.3, 0.2, 0.1])
    initial = product_spectrum(Spectrum([0.5, 0.5]), Spectrum(b))
    target = ground_target_spectrum(np.repeat(b / 2, 2), BipartiteDims(2, 8))
    full = pair_eigenvalues(initial, target)
    assert isinstance(full, Pairing) and len(full.assignments) == 8


def test_permutation_is_lexicographically_smallest():
    pairing = Pairing((pairing_entry((1, 0), (0, 1)),))
    dest = permutation_from_pairing(pairing, BipartiteDims(2, 2))
    np.testing.assert_array_equal(dest, [0, 2, 1, 3])


def pairing_entry(src, dst):
    from nogocool.feasibility import Assignment

    return Assignment(0, src, dst, 0.5)


def test_bad_pairing_rejected():
    s, b = DensityMatrix.diagonal([0.7, 0.3]), DensityMatrix.diagonal([1, 0])
    wrong = Pairing((pairing_entry((0, 0), (1, 0)), pairing_entry((1, 0), (1, 1))))
    with pytest.raises(InfeasiblePairing):
        build_cooling_unitary(s, b, wrong)
    clash = Pairing((pairing_entry((0, 0), (0, 0)), pairing_entry((1, 0), (0, 0))))
    with pytest.raises(InfeasiblePairing):
        build_cooling_unitary(s, b, clash)


def test_identity_when_already_cooled():
    s, b = DensityMatrix.diagonal([1, 0]), DensityMatrix.diagonal([0.6, 0.4])
    rep = check_no_go(s, b)
    u = build_cooling_unitary(s, b, rep.pairing)
    np.testing.assert_array_equal(u.elements, np.eye(4))


def test_certificate_for_rotated_inputs(rng):
    s = rotated([0.7, 0.3], rng)
    b = rotated([0.5, 0.3, 0.2, 0.0, 0.0, 0.0], rng)
    rep = check_no_go(s, b)
    assert rep.verdict is Verdict.FEASIBLE and rep.d0 == 6
    u = build_cooling_unitary(s, b, rep.pairing)
    rho0 = tensor(s, b)
    final = evolve(rho0, u)
    assert ground_population(final, BipartiteDims(2, 6)) >= 1 - 1e-10
    assert spectra_equal(spectrum(rho0), spectrum(final), 1e-10)


@settings(max_examples=40, deadline=None)
@given(ns=st.integers(2, 3), nb=st.integers(2, 5), bath_rank=st.integers(1, 5), seed=st.integers(0, 10_000))
def test_feasible_reports_are_tight(ns, nb, bath_rank, seed):
    r = np.random.default_rng(seed)
    bath_rank = min(bath_rank, nb)
    sw = r.dirichlet(np.ones(ns))
    bw = np.zeros(nb)
    bw[:bath_rank] = r.dirichlet(np.ones(bath_rank))
    s, b = DensityMatrix.diagonal(sw), rotated(bw, r)
    rep = check_no_go(s, b)
    assume(rep.verdict is not Verdict.MARGINAL)
    if ns * bath_rank > nb:
        assert rep.verdict is Verdict.INFEASIBLE and rep.bound < 1
        return
    assert rep.verdict is Verdict.FEASIBLE
    assert rep.bound == 1.0
    rho0 = tensor(s, b)
    final = evolve(rho0, build_cooling_unitary(s, b, rep.pairing))
    assert ground_population(final, BipartiteDims(ns, nb)) >= 1 - 1e-10
    assert spectra_equal(spectrum(rho0), spectrum(final), 1e-10)


@settings(max_examples=30, deadline=None)
@given(nb=st.integers(1, 6), seed=st.integers(0, 10_000))
def test_pure_system_never_rank_infeasible(nb, seed):
    r = np.random.default_rng(seed)
    s = DensityMatrix.pure(r.standard_normal(3) + 1j * r.standard_normal(3))
    b = random_density(nb, r)
    rep = check_no_go(s, b)
    assert rep.verdict is not Verdict.INFEASIBLE
    assert rep.d0 <= nb


@settings(max_examples=50, deadline=None)
@given(w=st.lists(st.floats(0.0, 1.0), min_size=2, max_size=12).filter(lambda x: sum(x) > 0.1))
def test_bound_monotone_in_bath_size(w):
    sp = Spectrum.from_values(np.array(w) / sum(w))
    bounds = [max_ground_population(sp, n) for n in range(1, len(w) + 1)]
    assert all(a <= b + 1e-15 for a, b in zip(bounds, bounds[1:]))
    rank = int(np.count_nonzero(sp.values))
    assert bounds[rank - 1] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize(
    "sw,bath",
    [
        ([0.7, 0.3], ThermalSpec((0.0, 1.0), 1.0)),
        ([0.5, 0.3, 0.2], ThermalSpec((0.0, 0.5, 1.5), 0.8)),
        ([0.9, 0.1], ThermalSpec((0.0, 1.0, 2.0, 3.0), 2.0)),
    ],
)
def test_no_go_soundness_against_haar(sw, bath):
    s, b = DensityMatrix.diagonal(sw), thermal_state(bath)
    rep = check_no_go(s, b)
    assert rep.verdict is Verdict.INFEASIBLE and rep.bound < 1
    res = haar_bound_search(tensor(s, b), BipartiteDims(s.dim, b.dim), samples=10_000, seed=5)
    assert res.max_achieved <= rep.bound + 1e-8
