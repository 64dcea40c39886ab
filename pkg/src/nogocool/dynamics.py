"""Exact unitary propagation versus a factorized-state Lindblad model.

The exact run evolves the full system+bath state and can never push the
system ground population past the spectral bound. The Lindblad run evolves
the system alone, as master-equation treatments do after assuming a product
initial state, and may predict cooling no unitary can deliver.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .config import DEFAULT_TOLERANCES
from .errors import DimensionMismatch, PositivityLoss, StepSizeTooLarge, ValidationError
from .feasibility import max_ground_population
from .linalg import BipartiteDims, DensityMatrix, HermitianOperator, eig_hermitian, tensor
from .spectral import product_spectrum, spectrum

_TOL = DEFAULT_TOLERANCES

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=np.complex128)  # |0><1|, lowers |1> to |0>


@dataclass(frozen=True, eq=False)
class JointModel:
    h_system: HermitianOperator
    h_bath: HermitianOperator
    h_coupling: HermitianOperator
    dims: BipartiteDims

    def __post_init__(self):
        if self.h_system.dim != self.dims.n_system or self.h_bath.dim != self.dims.n_bath:
            raise DimensionMismatch("H_S / H_B dimensions do not match dims")
        if self.h_coupling.dim != self.dims.joint:
            raise DimensionMismatch(f"H_SB has dimension {self.h_coupling.dim}, expected {self.dims.joint}")

    def total(self) -> HermitianOperator:
        ns, nb = self.dims.n_system, self.dims.n_bath
        h = (
            np.kron(self.h_system.elements, np.eye(nb))
            + np.kron(np.eye(ns), self.h_bath.elements)
            + self.h_coupling.elements
        )
        return HermitianOperator(h)


@dataclass(frozen=True, eq=False)
class LindbladModel:
    h_system: HermitianOperator
    jump_operators: tuple[tuple[np.ndarray, float], ...] = ()

    def __post_init__(self):
        ops = []
        for k, (op, rate) in enumerate(self.jump_operators):
            mat = np.asarray(op, dtype=np.complex128)
            if mat.shape != (self.h_system.dim, self.h_system.dim):
                raise DimensionMismatch(f"jump operator {k} has shape {mat.shape}")
            if not (math.isfinite(rate) and rate >= 0):
                raise ValidationError(f"jump rate {k} must be nonnegative, got {rate!r}")
            ops.append((mat, float(rate)))
        object.__setattr__(self, "jump_operators", tuple(ops))

    @property
    def max_rate(self) -> float:
        return max((r for _, r in self.jump_operators), default=0.0)

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.h_system.dim
        if not self.jump_operators:
            return np.zeros((0, n, n), dtype=np.complex128), np.zeros(0)
        ls = np.stack([op for op, _ in self.jump_operators])
        return ls, np.array([r for _, r in self.jump_operators])


@dataclass
class Trajectory:
    times: list[float]
    ground_population: list[float]
    joint_spectrum_drift: list[float]
    purity: list[float]
    max_trace_correction: float = 0.0
    trace_flags: int = 0
    final_state: np.ndarray | None = field(default=None, repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time", "ground_population", "spectrum_drift", "purity"])
        for k, t in enumerate(self.times):
            drift = format(self.joint_spectrum_drift[k], ".17g") if self.joint_spectrum_drift else ""
            writer.writerow(
                [format(t, ".17g"), format(self.ground_population[k], ".17g"), drift, format(self.purity[k], ".17g")]
            )
        return buf.getvalue()


def _check_times(times: Sequence[float]) -> np.ndarray:
    t = np.asarray(times, dtype=np.float64).ravel()
    if t.size == 0:
        raise ValidationError("need at least one time point")
    if t[0] < 0 or np.any(np.diff(t) < 0):
        raise ValidationError("times must be nonnegative and ascending")
    return t


def exact_propagate(model: JointModel, rho0: DensityMatrix, times: Sequence[float]) -> Trajectory:
    """Record ``rho(t) = exp(-iHt) rho0 exp(iHt)`` on the given grid.

    ``H`` is diagonalized once; each time point only rephases ``rho0`` in
    the energy eigenbasis.
    """
    dims = model.dims
    if rho0.dim != dims.joint:
        raise DimensionMismatch(f"initial state dimension {rho0.dim} != {dims.joint}")
    t = _check_times(times)
    w, v = eig_hermitian(model.total())
    vm = v.elements
    rho_e = vm.conj().T @ rho0.elements @ vm
    p0 = np.sort(np.linalg.eigvalsh(rho0.elements))
    nb = dims.n_bath

    pops, drift, purity = [], [], []
    rho_t = rho0.elements
    for ti in t:
        phase = np.exp(-1j * w * ti)
        rho_t = vm @ (rho_e * np.outer(phase, phase.conj())) @ vm.conj().T
        rho_t = 0.5 * (rho_t + rho_t.conj().T)
        pops.append(float(np.trace(rho_t[:nb, :nb]).real))
        drift.append(float(np.max(np.abs(np.sort(np.linalg.eigvalsh(rho_t)) - p0))))
        red = np.einsum("ijkj->ik", rho_t.reshape(dims.n_system, nb, dims.n_system, nb))
        purity.append(float(np.real(np.vdot(red, red))))
    return Trajectory(t.tolist(), pops, drift, purity, final_state=rho_t)


def lindblad_propagate(
    model: LindbladModel, rho_s0: DensityMatrix, times: Sequence[float], dt: float
) -> Trajectory:
    """Integrate the Lindblad equation with fixed-step RK4.

    Each interval between recorded times is split into equal steps no larger
    than ``dt``. The trace is reset to one after every step; corrections above
    the trace tolerance are counted in ``trace_flags``.
    """
    if rho_s0.dim != model.h_system.dim:
        raise DimensionMismatch(f"state dimension {rho_s0.dim} != {model.h_system.dim}")
    t = _check_times(times)
    if not dt > 0:
        raise StepSizeTooLarge("dt must be positive")
    stiffness = dt * (model.max_rate + model.h_system.spectral_norm())
    if stiffness > _TOL.lindblad_step:
        raise StepSizeTooLarge(
            f"dt * (max rate + ||H_S||) = {stiffness:.3g} exceeds {_TOL.lindblad_step}"
        )
    h = model.h_system.elements
    ls, rates = model.stacked()

    rho = np.array(rho_s0.elements)
    pops, purity = [], []
    worst, flags = 0.0, 0
    prev = 0.0
    for ti in t:
        span = ti - prev
        if span > 0:
            n_steps = max(1, math.ceil(span / dt - 1e-12))
            rho, corr = _kernels.lindblad_rk4(rho, h, ls, rates, span / n_steps, n_steps)
            worst = max(worst, corr)
            if corr > _TOL.lindblad_trace:
                flags += 1
        prev = ti
        lowest = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        if lowest < -_TOL.lindblad_positivity:
            raise PositivityLoss(f"eigenvalue {lowest:.3e} at t={ti:.6g}")
        pops.append(float(rho[0, 0].real))
        purity.append(float(np.real(np.vdot(rho, rho))))
    return Trajectory(t.tolist(), pops, [], purity, max_trace_correction=worst, trace_flags=flags, final_state=rho)


# --------------------------------------------------------------------------
# model builders
# --------------------------------------------------------------------------


def _embed(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    out = np.eye(1, dtype=np.complex128)
    for k in range(n_sites):
        out = np.kron(out, op if k == site else np.eye(2))
    return out


def exchange_model(system_gap: float = 1.0, bath_gaps: Sequence[float] = (1.0, 1.0), coupling: float = 0.2) -> JointModel:
    """Qubit system exchange-coupled to a register of bath qubits.

    ``H_SB = g * sum_k (sigma+_S sigma-_k + sigma-_S sigma+_k)``.
    """
    n = len(bath_gaps)
    nb = 2**n
    h_s = np.diag([0.0, system_gap]).astype(np.complex128)
    h_b = sum(_embed(np.diag([0.0, g]).astype(np.complex128), k, n) for k, g in enumerate(bath_gaps))
    sp = SIGMA_MINUS.conj().T
    h_sb = np.zeros((2 * nb, 2 * nb), dtype=np.complex128)
    for k in range(n):
        lower_k = _embed(SIGMA_MINUS, k, n)
        h_sb += np.kron(sp, lower_k) + np.kron(SIGMA_MINUS, lower_k.conj().T)
    h_sb *= coupling
    return JointModel(
        HermitianOperator(h_s), HermitianOperator(np.asarray(h_b)), HermitianOperator(h_sb), BipartiteDims(2, nb)
    )


def amplitude_damping_model(system_gap: float = 1.0, rate: float = 1.0) -> LindbladModel:
    h_s = HermitianOperator(np.diag([0.0, system_gap]).astype(np.complex128))
    return LindbladModel(h_s, ((SIGMA_MINUS, rate),))


# --------------------------------------------------------------------------
# contrast
# --------------------------------------------------------------------------


@dataclass
class ContrastReport:
    unitary_bound: float
    me_asymptotic_ground_population: float
    exact_max_ground_population: float
    violation: bool
    exact: Trajectory = field(repr=False)
    lindblad: Trajectory = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "unitary_bound": self.unitary_bound,
            "me_asymptotic_ground_population": self.me_asymptotic_ground_population,
            "exact_max_ground_population": self.exact_max_ground_population,
            "violation": self.violation,
            "exact_max_spectrum_drift": max(self.exact.joint_spectrum_drift, default=0.0),
            "lindblad_max_trace_correction": self.lindblad.max_trace_correction,
            "lindblad_trace_flags": self.lindblad.trace_flags,
        }


def contrast_report(
    joint: JointModel,
    lindblad: LindbladModel,
    s: DensityMatrix,
    b: DensityMatrix,
    horizon: float,
    n_times: int = 200,
    dt: float | None = None,
) -> ContrastReport:
    """Run both dynamics from ``s (x) b`` and compare against the unitary bound.

    ``violation`` is set when the master equation's final ground population
    exceeds the bound by more than the violation margin.
    """
    if lindblad.h_system.dim != s.dim:
        raise DimensionMismatch(f"Lindblad model acts on dimension {lindblad.h_system.dim}, system has {s.dim}")
    if joint.dims != BipartiteDims(s.dim, b.dim):
        raise DimensionMismatch("joint model dimensions do not match (s, b)")
    if not horizon > 0:
        raise ValidationError("horizon must be positive")
    bound = max_ground_population(product_spectrum(spectrum(s), spectrum(b)), b.dim)
    times = np.linspace(0.0, horizon, max(2, int(n_times)))
    if dt is None:
        scale = lindblad.max_rate + lindblad.h_system.spectral_norm()
        dt = 0.05 / scale if scale > 0 else horizon
    exact = exact_propagate(joint, tensor(s, b), times)
    me = lindblad_propagate(lindblad, s, times, dt)
    me_final = me.ground_population[-1]
    return ContrastReport(
        unitary_bound=bound,
        me_asymptotic_ground_population=me_final,
        exact_max_ground_population=max(exact.ground_population),
        violation=bool(me_final > bound + _TOL.violation_margin),
        exact=exact,
        lindblad=me,
    )
