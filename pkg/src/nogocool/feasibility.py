"""Reachability of a system ground state under global system-bath unitaries.

A unitary conserves the sorted joint spectrum. The target ``|0><0| (x) B``
has at most ``n_bath`` nonzero eigenvalues, so an initial joint state with
more than ``n_bath`` nonzero eigenvalues can never be mapped onto it, and the
best any unitary can do is pile the ``n_bath`` largest eigenvalues into the
system-ground block.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .config import DEFAULT_TOLERANCES, thread_cap
from .errors import DimensionMismatch, InfeasiblePairing
from .linalg import (
    BipartiteDims,
    DensityMatrix,
    UnitaryMatrix,
    eig_hermitian,
    evolve,
    haar_unitaries,
    tensor,
)
from .spectral import (
    Label,
    RankReport,
    Spectrum,
    numerical_rank,
    product_spectrum,
    spectrum,
)

_TOL = DEFAULT_TOLERANCES
HAAR_CHUNK = 1000


class Verdict(str, enum.Enum):
    INFEASIBLE = "Infeasible"
    FEASIBLE = "Feasible"
    MARGINAL = "Marginal"


class Assignment(NamedTuple):
    rank: int
    initial: Label | None
    final: Label | None
    value: float


@dataclass(frozen=True)
class Pairing:
    """One-to-one match of nonzero initial eigenvalues onto target eigenvalues."""

    assignments: tuple[Assignment, ...]

    def as_dict(self) -> list[dict]:
        return [
            {
                "rank": a.rank,
                "initial": list(a.initial) if a.initial is not None else None,
                "final": list(a.final) if a.final is not None else None,
                "value": a.value,
            }
            for a in self.assignments
        ]


@dataclass(frozen=True)
class Obstruction:
    index: int
    initial_value: float
    target_value: float

    def __str__(self) -> str:
        return (
            f"sorted eigenvalue {self.index} cannot be matched: "
            f"initial {self.initial_value:.17g} vs target {self.target_value:.17g}"
        )


@dataclass(frozen=True)
class FeasibilityReport:
    d0: int
    df_max: int
    verdict: Verdict
    bound: float
    pairing: Pairing | None = None
    obstruction: str | None = None
    rank: RankReport | None = None
    joint_spectrum: Spectrum | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        out = {
            "d0": self.d0,
            "df_max": self.df_max,
            "verdict": self.verdict.value,
            "bound": self.bound,
            "pairing": self.pairing.as_dict() if self.pairing else None,
            "obstruction": self.obstruction,
        }
        if self.rank is not None:
            out["rank"] = {
                "rank": self.rank.rank,
                "tolerance_used": self.rank.tolerance_used,
                "smallest_kept": self.rank.smallest_kept,
                "largest_dropped": self.rank.largest_dropped,
                "marginal": self.rank.marginal,
            }
        if self.joint_spectrum is not None:
            out["joint_spectrum"] = self.joint_spectrum.tolist()
        return out


def ground_population(rho: DensityMatrix, dims: BipartiteDims) -> float:
    """Population of the system ground level, ``Tr[(|0><0| (x) I) rho]``."""
    if rho.dim != dims.joint:
        raise DimensionMismatch(f"state dimension {rho.dim} != {dims.joint}")
    return float(np.real(np.trace(rho.elements[: dims.n_bath, : dims.n_bath])))


def max_ground_population(rho0_spectrum: Spectrum, n_bath: int) -> float:
    """Supremum over all unitaries of the final system ground population.

    The ground block ``|0><0| (x) I`` has rank ``n_bath``, so by Ky Fan's
    maximum principle the answer is the sum of the ``n_bath`` largest
    eigenvalues of the initial joint state.
    """
    if n_bath < 1:
        raise ValueError("n_bath must be at least 1")
    return min(1.0, rho0_spectrum.top_sum(n_bath))


def ground_target_spectrum(bath_values, dims: BipartiteDims) -> Spectrum:
    """Spectrum of ``|0><0| (x) B`` with ``B = diag(bath_values)``.

    Values are labelled ``(0, k)`` by bath level; the excited blocks
    contribute labelled zeros so the result spans the whole joint space.
    """
    bath_values = np.asarray(bath_values, dtype=np.float64).ravel()
    if bath_values.size > dims.n_bath:
        raise DimensionMismatch(f"{bath_values.size} bath values for a {dims.n_bath}-level bath")
    full = np.zeros(dims.joint)
    full[: bath_values.size] = bath_values
    labels = [divmod(i, dims.n_bath) for i in range(dims.joint)]
    return Spectrum.from_values(full, labels=labels, probabilities=False)


def pair_eigenvalues(initial: Spectrum, target: Spectrum, tol: float = _TOL.pairing) -> Pairing | Obstruction:
    """Match the two sorted spectra position by position.

    Succeeds iff every sorted pair agrees within ``tol``; otherwise returns
    the first offending position. Only positions where either value exceeds
    ``tol`` are recorded in the pairing.
    """
    n = max(len(initial), len(target), initial.source_dim, target.source_dim)
    p, q = initial.padded(n), target.padded(n)
    bad = np.flatnonzero(np.abs(p - q) > tol)
    if bad.size:
        k = int(bad[0])
        return Obstruction(k, float(p[k]), float(q[k]))

    def label(spec: Spectrum, k: int):
        if spec.labels is None or k >= len(spec.labels):
            return None
        return spec.labels[k]

    assignments = tuple(
        Assignment(k, label(initial, k), label(target, k), float(p[k]))
        for k in range(n)
        if p[k] > tol or q[k] > tol
    )
    return Pairing(assignments)


def _flat(label: Label, dims: BipartiteDims) -> int:
    m, j = label
    if not (0 <= m < dims.n_system and 0 <= j < dims.n_bath):
        raise InfeasiblePairing(f"label {label} outside the {dims.n_system}x{dims.n_bath} joint basis")
    return m * dims.n_bath + j


def permutation_from_pairing(pairing: Pairing, dims: BipartiteDims) -> np.ndarray:
    """Destination index for every source basis index.

    Paired labels are fixed; every other source is sent, in ascending order,
    to the smallest destination still free. That yields the lexicographically
    smallest permutation consistent with the pairing.
    """
    n = dims.joint
    dest = np.full(n, -1, dtype=np.int64)
    used = np.zeros(n, dtype=bool)
    for a in pairing.assignments:
        if a.initial is None or a.final is None:
            raise InfeasiblePairing(f"assignment at rank {a.rank} carries no basis label")
        src, dst = _flat(a.initial, dims), _flat(a.final, dims)
        if dest[src] != -1 or used[dst]:
            raise InfeasiblePairing(f"pairing is not a bijection at rank {a.rank}")
        dest[src] = dst
        used[dst] = True
    free = iter(np.flatnonzero(~used))
    for src in range(n):
        if dest[src] == -1:
            dest[src] = next(free)
    return dest


def certificate_unitary(
    rho0: DensityMatrix,
    dims: BipartiteDims,
    pairing: Pairing,
    initial_basis: UnitaryMatrix | None = None,
    target: DensityMatrix | None = None,
) -> UnitaryMatrix:
    """``U = E_f P E_i^dagger`` carrying the paired eigenvectors into the ground block.

    ``initial_basis`` defaults to the eigenvectors of ``rho0`` (column
    ``m * n_bath + j`` is label ``(m, j)``); the final basis is the computational
    product basis. When ``target`` is given the evolved state must equal it.
    """
    if rho0.dim != dims.joint:
        raise DimensionMismatch(f"state dimension {rho0.dim} != {dims.joint}")
    e_i = initial_basis.elements if initial_basis is not None else eig_hermitian(rho0)[1].elements
    dest = permutation_from_pairing(pairing, dims)
    perm = np.zeros((dims.joint, dims.joint), dtype=np.complex128)
    perm[dest, np.arange(dims.joint)] = 1.0
    u = UnitaryMatrix(perm @ e_i.conj().T)

    final = evolve(rho0, u)
    pop = ground_population(final, dims)
    if pop < 1.0 - _TOL.pairing:
        raise InfeasiblePairing(f"certificate reaches ground population {pop:.17g} only")
    if target is not None:
        err = float(np.max(np.abs(final.elements - target.elements)))
        if err > _TOL.pairing:
            raise InfeasiblePairing(f"certificate misses the target state by {err:.3e}")
    return u


def build_cooling_unitary(s: DensityMatrix, b: DensityMatrix, pairing: Pairing) -> UnitaryMatrix:
    """Certificate unitary for a factorized initial state ``s (x) b``.

    The initial eigenbasis is the product of the eigenbases of ``s`` and
    ``b``, matching the ``(m, j)`` labels produced by :func:`product_spectrum`.
    """
    dims = BipartiteDims(s.dim, b.dim)
    _, vs = eig_hermitian(s)
    _, vb = eig_hermitian(b)
    basis = UnitaryMatrix(np.kron(vs.elements, vb.elements))
    return certificate_unitary(tensor(s, b), dims, pairing, initial_basis=basis)


def check_no_go(s: DensityMatrix, b: DensityMatrix, tol: float | None = None) -> FeasibilityReport:
    """Decide whether ``s (x) b`` can be unitarily mapped to ``|0><0| (x) B``."""
    dims = BipartiteDims(s.dim, b.dim)
    joint = product_spectrum(spectrum(s), spectrum(b))
    rank = numerical_rank(joint, tol)
    d0, df_max = rank.rank, dims.n_bath
    bound = max_ground_population(joint, df_max)

    if d0 > df_max:
        verdict = Verdict.MARGINAL if rank.marginal else Verdict.INFEASIBLE
        return FeasibilityReport(
            d0, df_max, verdict, bound,
            obstruction=(
                f"initial state has d0={d0} nonzero eigenvalues but |0><0| (x) B "
                f"admits at most {df_max}"
            ),
            rank=rank,
            joint_spectrum=joint,
        )

    target = ground_target_spectrum(joint.values[:df_max], dims)
    result = pair_eigenvalues(joint, target, max(_TOL.pairing, rank.tolerance_used))
    if isinstance(result, Obstruction):
        # Unreachable when d0 <= n_bath; kept as a guard against tolerance edge cases.
        return FeasibilityReport(
            d0, df_max, Verdict.MARGINAL, bound, obstruction=str(result), rank=rank, joint_spectrum=joint
        )
    verdict = Verdict.MARGINAL if rank.marginal else Verdict.FEASIBLE
    if verdict is Verdict.FEASIBLE:
        bound = 1.0
    return FeasibilityReport(d0, df_max, verdict, bound, pairing=result, rank=rank, joint_spectrum=joint)


# --------------------------------------------------------------------------
# randomized falsification of the bound
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HaarSearchResult:
    samples: int
    max_achieved: float
    bound: float
    running_max: tuple[float, ...]

    @property
    def gap(self) -> float:
        return self.bound - self.max_achieved


def _chunk_max(seed: int, chunk: int, count: int, e_i: np.ndarray, probs: np.ndarray, n_ground: int) -> float:
    rng = np.random.default_rng([seed, chunk])
    us = haar_unitaries(count, e_i.shape[0], rng)
    pops = _kernels.ground_populations(us @ e_i, probs, n_ground)
    return float(pops.max())


def haar_bound_search(
    rho0: DensityMatrix,
    dims: BipartiteDims,
    samples: int = _TOL.haar_samples,
    seed: int = _TOL.haar_seed,
    include_identity: bool = False,
    workers: int | None = None,
) -> HaarSearchResult:
    """Maximum ground population over seeded Haar-random unitaries.

    Samples are drawn in chunks of ``HAAR_CHUNK`` from generators seeded by
    ``(seed, chunk index)``, so the result does not depend on ``workers``.
    ``running_max`` records the maximum after each chunk. With
    ``include_identity`` the first sample is the identity.
    """
    if rho0.dim != dims.joint:
        raise DimensionMismatch(f"state dimension {rho0.dim} != {dims.joint}")
    if samples < 1:
        raise ValueError("samples must be positive")
    probs, e_i = eig_hermitian(rho0)
    probs = np.clip(probs, 0.0, None)
    e = e_i.elements
    bound = max_ground_population(Spectrum(probs, source_dim=dims.joint), dims.n_bath)

    start = 0
    maxima: list[float] = []
    if include_identity:
        maxima.append(ground_population(rho0, dims))
        start = 1
    remaining = samples - start
    sizes = [min(HAAR_CHUNK, remaining - c * HAAR_CHUNK) for c in range(-(-remaining // HAAR_CHUNK))]

    n_workers = min(workers or thread_cap(1), max(1, len(sizes)))
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            chunk_maxima = list(
                pool.map(lambda c: _chunk_max(seed, c, sizes[c], e, probs, dims.n_bath), range(len(sizes)))
            )
    else:
        chunk_maxima = [_chunk_max(seed, c, n, e, probs, dims.n_bath) for c, n in enumerate(sizes)]
    maxima.extend(chunk_maxima)
    running = tuple(float(x) for x in np.maximum.accumulate(maxima)) if maxima else ()
    return HaarSearchResult(samples, running[-1], bound, running)
