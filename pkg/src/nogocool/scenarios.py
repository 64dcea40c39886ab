"""Builders for the worked cooling scenarios and the approximate-cooling analyzer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import InvalidSplit, NumericalFailure, OverflowGuard, ValidationError
from .feasibility import (
    FeasibilityReport,
    Obstruction,
    Verdict,
    build_cooling_unitary,
    certificate_unitary,
    check_no_go,
    ground_population,
    ground_target_spectrum,
    max_ground_population,
    pair_eigenvalues,
)
from .linalg import BipartiteDims, DensityMatrix, UnitaryMatrix, evolve, partial_trace, tensor
from .spectral import Spectrum, numerical_rank, product_spectrum, spectra_equal, spectrum

_TOL = DEFAULT_TOLERANCES
EXP_LIMIT = 700.0


@dataclass(frozen=True)
class ThermalSpec:
    """Gibbs state parameters; temperature is in energy units (k_B = 1)."""

    energies: tuple[float, ...]
    temperature: float

    def __post_init__(self):
        energies = tuple(float(e) for e in np.atleast_1d(self.energies))
        if not energies:
            raise ValidationError("thermal spec needs at least one energy level")
        if not all(math.isfinite(e) for e in energies):
            raise ValidationError("energies must be finite")
        if not (math.isfinite(self.temperature) and self.temperature > 0):
            raise ValidationError(f"temperature must be positive, got {self.temperature!r}")
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "temperature", float(self.temperature))


def gibbs_weights(spec: ThermalSpec) -> np.ndarray:
    e = np.asarray(spec.energies)
    x = (e - e.min()) / spec.temperature
    if np.any(x > EXP_LIMIT):
        raise OverflowGuard(
            f"Boltzmann exponent {x.max():.1f} exceeds {EXP_LIMIT:.0f}; the state would lose rank to underflow"
        )
    w = np.exp(-x)
    return w / w.sum()


def thermal_state(spec: ThermalSpec) -> DensityMatrix:
    """Diagonal Gibbs state ``exp(-E_i / T) / Z`` in the energy basis."""
    return DensityMatrix.diagonal(gibbs_weights(spec), label="thermal")


def _matrix_dict(m: DensityMatrix | UnitaryMatrix | None):
    if m is None:
        return None
    return {"real": m.elements.real.tolist(), "imag": m.elements.imag.tolist()}


@dataclass
class ScenarioResult:
    name: str
    inputs: dict[str, Any]
    report: FeasibilityReport | None
    certificate: UnitaryMatrix | None = None
    initial_system: DensityMatrix | None = None
    final_system: DensityMatrix | None = None
    initial_bath: DensityMatrix | None = None
    final_bath: DensityMatrix | None = None
    spectra: dict[str, list[float]] = field(default_factory=dict)
    checks: dict[str, Any] = field(default_factory=dict)

    @property
    def verdict(self) -> Verdict | None:
        return self.report.verdict if self.report else None

    @property
    def final_ground_population(self) -> float | None:
        if self.final_system is None:
            return None
        return self.final_system.ground_population()

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "inputs": self.inputs,
            "report": self.report.as_dict() if self.report else None,
            "certificate": _matrix_dict(self.certificate),
            "initial_system": _matrix_dict(self.initial_system),
            "final_system": _matrix_dict(self.final_system),
            "initial_bath": _matrix_dict(self.initial_bath),
            "final_bath": _matrix_dict(self.final_bath),
            "final_ground_population": self.final_ground_population,
            "spectra": self.spectra,
            "checks": self.checks,
        }


def _max_dev(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def _run_certificate(name, inputs, report, rho0, dims, certificate, target=None) -> ScenarioResult:
    final = evolve(rho0, certificate)
    result = ScenarioResult(
        name=name,
        inputs=inputs,
        report=report,
        certificate=certificate,
        initial_system=partial_trace(rho0, dims, "system"),
        final_system=partial_trace(final, dims, "system"),
        initial_bath=partial_trace(rho0, dims, "bath"),
        final_bath=partial_trace(final, dims, "bath"),
    )
    p, q = spectrum(rho0), spectrum(final)
    result.spectra = {
        "initial_joint": p.tolist(),
        "final_joint": q.tolist(),
        "final_bath": spectrum(result.final_bath).tolist(),
    }
    result.checks["joint_spectrum_conserved"] = spectra_equal(p, q, _TOL.spectrum)
    result.checks["final_ground_population"] = ground_population(final, dims)
    if target is not None:
        result.checks["target_error"] = _max_dev(final.elements, target.elements)
    return result


def _no_certificate(name, inputs, report, s, b) -> ScenarioResult:
    return ScenarioResult(
        name=name,
        inputs=inputs,
        report=report,
        initial_system=s,
        initial_bath=b,
        spectra={"initial_joint": report.joint_spectrum.tolist()} if report.joint_spectrum else {},
        checks={"bound": report.bound},
    )


def swap_scenario(s0: float, bath: DensityMatrix | None = None) -> ScenarioResult:
    """Qubit system ``diag(s0, 1 - s0)`` against a qubit bath, pure ``diag(1, 0)`` by default.

    With the pure bath the certificate is the SWAP gate: the system ends in
    ``|0>`` and the bath takes over the system's populations.
    """
    if not 0.0 < s0 < 1.0:
        raise ValidationError(f"s0 must lie strictly between 0 and 1, got {s0!r}")
    s = DensityMatrix.diagonal([s0, 1.0 - s0], label="s")
    b = bath if bath is not None else DensityMatrix.diagonal([1.0, 0.0], label="b")
    inputs = {"s0": s0, "bath": np.real(np.diag(b.elements)).tolist()}
    report = check_no_go(s, b)
    if report.verdict is not Verdict.FEASIBLE:
        return _no_certificate("swap", inputs, report, s, b)

    dims = BipartiteDims(s.dim, b.dim)
    u = build_cooling_unitary(s, b, report.pairing)
    result = _run_certificate("swap", inputs, report, tensor(s, b), dims, u)
    ground = np.zeros((2, 2))
    ground[0, 0] = 1.0
    if _max_dev(result.final_system.elements, ground) > _TOL.pairing:
        raise NumericalFailure("swap certificate failed to reach the system ground state")
    wanted = Spectrum.from_values([s0, 1.0 - s0] + [0.0] * (b.dim - 2))
    result.checks["final_bath_matches_system"] = spectra_equal(
        spectrum(result.final_bath), wanted, _TOL.spectrum
    )
    if not result.checks["final_bath_matches_system"]:
        raise NumericalFailure("final bath spectrum differs from the initial system spectrum")
    return result


def nonthermal_bath_scenario(s: DensityMatrix, bath_weights: Sequence[float]) -> ScenarioResult:
    """Qubit system against a two-qubit bath prepared with some zero eigenvalues.

    ``bath_weights`` is zero-padded to four levels. The target ``B`` holds the
    four largest joint eigenvalues, so ``d0 = d_f = 4`` is met whenever the
    initial joint rank is at most four.
    """
    if s.dim != 2:
        raise ValidationError(f"system must be a qubit, got dimension {s.dim}")
    weights = np.zeros(4)
    w = np.asarray(bath_weights, dtype=np.float64).ravel()
    if w.size > 4:
        raise ValidationError("a two-qubit bath has at most four weights")
    weights[: w.size] = w
    b = DensityMatrix.diagonal(weights, label="b")
    inputs = {
        "system": np.real(np.diag(s.elements)).tolist(),
        "bath_weights": weights.tolist(),
    }
    report = check_no_go(s, b)
    if report.verdict is not Verdict.FEASIBLE:
        return _no_certificate("nonthermal_bath", inputs, report, s, b)

    dims = BipartiteDims(2, 4)
    target_b = report.joint_spectrum.values[:4]
    ground = np.zeros((2, 2))
    ground[0, 0] = 1.0
    target = DensityMatrix(np.kron(ground, np.diag(target_b)))
    u = build_cooling_unitary(s, b, report.pairing)
    result = _run_certificate("nonthermal_bath", inputs, report, tensor(s, b), dims, u, target=target)
    result.spectra["target_bath"] = [float(x) for x in target_b]
    result.checks["df"] = numerical_rank(Spectrum(target_b, probabilities=False)).rank
    if result.checks["target_error"] > _TOL.pairing:
        raise NumericalFailure("certificate missed the |0><0| (x) B target")
    return result


@dataclass(frozen=True)
class CorrelatedStateSpec:
    """Bath weights split across the system levels at ``split_index``.

    Levels ``0..n`` of the bath are correlated with the system ground state
    and levels ``n+1..`` with the excited state.
    """

    bath_weights: tuple[float, ...]
    split_index: int
    ground_weight: float = 0.5

    def __post_init__(self):
        w = tuple(float(x) for x in self.bath_weights)
        if len(w) < 2:
            raise ValidationError("need at least two bath weights")
        if min(w) < 0 or abs(sum(w) - 1.0) > 1e-10:
            raise ValidationError(f"bath weights must be nonnegative and sum to 1, got sum {sum(w)!r}")
        if not 0 <= self.split_index < len(w):
            raise InvalidSplit(f"split_index {self.split_index} outside [0, {len(w)})")
        object.__setattr__(self, "bath_weights", w)

    @property
    def partial_sum(self) -> float:
        return float(sum(self.bath_weights[: self.split_index + 1]))

    def joint_state(self) -> DensityMatrix:
        n_b = len(self.bath_weights)
        diag = np.zeros(2 * n_b)
        k = self.split_index + 1
        diag[:k] = self.bath_weights[:k]
        diag[n_b + k :] = self.bath_weights[k:]
        return DensityMatrix.diagonal(diag, label="correlated")


def correlated_scenario(spec: CorrelatedStateSpec) -> ScenarioResult:
    """Cool the qubit of ``|0><0| (x) b0 + |1><1| (x) b1`` with an exact permutation.

    The target bath state equals the initial bath marginal, so the bath is
    left unchanged while the system is driven to ``|0>``.
    """
    if abs(spec.partial_sum - spec.ground_weight) > 1e-9:
        raise InvalidSplit(
            f"b_0 + ... + b_{spec.split_index} = {spec.partial_sum!r}, expected {spec.ground_weight!r}"
        )
    n_b = len(spec.bath_weights)
    dims = BipartiteDims(2, n_b)
    rho0 = spec.joint_state()
    diag = np.real(np.diag(rho0.elements))
    initial = Spectrum.from_values(diag, labels=[divmod(i, n_b) for i in range(dims.joint)])
    target = ground_target_spectrum(spec.bath_weights, dims)
    d0 = numerical_rank(initial).rank
    df = numerical_rank(target).rank

    inputs = {"bath_weights": list(spec.bath_weights), "split_index": spec.split_index}
    pairing = pair_eigenvalues(initial, target, _TOL.pairing)
    if isinstance(pairing, Obstruction):
        raise NumericalFailure(str(pairing))
    report = FeasibilityReport(
        d0, n_b, Verdict.FEASIBLE, max_ground_population(initial, n_b), pairing=pairing, joint_spectrum=initial
    )
    ground = np.zeros((2, 2))
    ground[0, 0] = 1.0
    target_state = DensityMatrix(np.kron(ground, np.diag(spec.bath_weights)))
    u = certificate_unitary(
        rho0, dims, pairing, initial_basis=UnitaryMatrix.identity(dims.joint), target=target_state
    )
    result = _run_certificate("correlated", inputs, report, rho0, dims, u, target=target_state)
    result.checks["d0"] = d0
    result.checks["df"] = df
    result.checks["bath_marginal_error"] = _max_dev(result.final_bath.elements, result.initial_bath.elements)
    if result.checks["bath_marginal_error"] > _TOL.pairing:
        raise NumericalFailure("bath marginal changed under the certificate")
    return result


@dataclass(frozen=True)
class ApproxCoolingReport:
    gap_condition_holds: bool
    ratio_initial: float
    ratio_final: float | None
    implied_Tf_equals_Ti: bool | None
    system_spectrum_unchanged: bool | None
    nondegenerate_ground: bool
    initial_temperature: float
    final_temperature: float | None = None
    deduced_system_spectrum: tuple[float, ...] | None = None

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        if d["deduced_system_spectrum"] is not None:
            d["deduced_system_spectrum"] = list(d["deduced_system_spectrum"])
        return d


def _peel_system_spectrum(joint: np.ndarray, bath: np.ndarray, n_system: int, tol: float) -> np.ndarray | None:
    """Recover ``S`` from the multiset ``{S_m * B_j}`` given ``B``.

    The largest remaining value is always ``S_m * B_0`` for the next ``S_m``;
    its ``n_bath`` products are struck from the multiset before repeating.
    Returns None if the multiset is not of product form.
    """
    remaining = list(joint)
    out = []
    for _ in range(n_system):
        if not remaining:
            return None
        s_m = max(remaining) / bath[0]
        for bj in bath:
            want = s_m * bj
            k = int(np.argmin([abs(x - want) for x in remaining]))
            if abs(remaining[k] - want) > tol:
                return None
            remaining.pop(k)
        out.append(s_m)
    return np.array(out)


def approximate_cooling_analysis(s: Spectrum, bath: ThermalSpec, final_bath_thermal: bool = True) -> ApproxCoolingReport:
    """Follow the eigenvalue-matching argument for ``s (x) b -> S (x) B``.

    If the system gap dominates (``s0 * b1 > s1 * b0``) the two largest joint
    eigenvalues are ``s0*b0`` and ``s0*b1``, which forces ``B1/B0 = b1/b0``.
    A thermal final bath on the same levels is then at the initial
    temperature, so ``B = b`` and the system spectrum cannot change.
    """
    sv = s.values
    if sv.size < 2 or len(bath.energies) < 2:
        raise ValidationError("approximate cooling needs at least two system and two bath levels")
    b = gibbs_weights(bath)
    ratio_initial = float(b[1] / b[0])
    gap = bool(sv[0] * b[1] > sv[1] * b[0])
    nondegenerate = bool(sv[0] - sv[1] > _TOL.ratio)
    base = dict(
        gap_condition_holds=gap,
        ratio_initial=ratio_initial,
        nondegenerate_ground=nondegenerate,
        initial_temperature=bath.temperature,
    )
    if not gap:
        return ApproxCoolingReport(ratio_final=None, implied_Tf_equals_Ti=None, system_spectrum_unchanged=None, **base)

    joint = product_spectrum(s, Spectrum(b, probabilities=True)).values
    ratio_final = float(joint[1] / joint[0])
    if not final_bath_thermal:
        return ApproxCoolingReport(
            ratio_final=ratio_final, implied_Tf_equals_Ti=None, system_spectrum_unchanged=None, **base
        )

    e0, e1 = sorted(bath.energies)[:2]
    if e1 == e0 or ratio_final >= 1.0:
        t_final = None
        same_t = None
    else:
        t_final = (e1 - e0) / math.log(1.0 / ratio_final)
        same_t = abs(t_final - bath.temperature) <= _TOL.ratio * max(1.0, bath.temperature)

    deduced = _peel_system_spectrum(joint, b, sv.size, _TOL.ratio)
    unchanged = deduced is not None and bool(np.all(np.abs(deduced - sv) <= _TOL.ratio))
    return ApproxCoolingReport(
        ratio_final=ratio_final,
        implied_Tf_equals_Ti=same_t,
        system_spectrum_unchanged=unchanged and nondegenerate,
        final_temperature=t_final,
        deduced_system_spectrum=None if deduced is None else tuple(float(x) for x in deduced),
        **base,
    )
