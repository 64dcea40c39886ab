"""Dense complex linear algebra for bipartite density matrices.

Joint spaces use system-major Kronecker ordering throughout: the basis
vector ``|m>|j>`` (system level ``m``, bath level ``j``) sits at flat index
``m * n_bath + j``. ``numpy.kron(system, bath)`` produces exactly this layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import (
    DecompositionFailure,
    DimensionMismatch,
    InvalidDensityMatrix,
    NotHermitian,
    NotPositiveSemidefinite,
    NotUnitary,
)

_TOL = DEFAULT_TOLERANCES


def _as_square(elements, what: str) -> np.ndarray:
    arr = np.array(elements, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionMismatch(f"{what} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidDensityMatrix(f"{what} has non-finite entries")
    return arr


def hermiticity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BipartiteDims:
    n_system: int
    n_bath: int

    def __post_init__(self):
        for name in ("n_system", "n_bath"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DimensionMismatch(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def joint(self) -> int:
        return self.n_system * self.n_bath

    def __eq__(self, other):
        if not isinstance(other, BipartiteDims):
            return NotImplemented
        return (self.n_system, self.n_bath) == (other.n_system, other.n_bath)

    def __hash__(self):
        return hash((self.n_system, self.n_bath))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix.

    Construction validates all three properties against the shared
    tolerances; the stored array is read-only.
    """

    elements: np.ndarray
    label: str | None = None
    dim: int = field(init=False)

    def __post_init__(self):
        arr = _as_square(self.elements, "density matrix")
        herm = hermiticity_error(arr)
        if herm > _TOL.hermitian:
            raise NotHermitian(f"density matrix Hermiticity error {herm:.3e} exceeds {_TOL.hermitian:.0e}")
        tr = np.trace(arr).real
        if abs(tr - 1.0) > _TOL.trace:
            raise InvalidDensityMatrix(f"density matrix trace {tr!r} differs from 1 by more than {_TOL.trace:.0e}")
        lowest = float(np.linalg.eigvalsh(0.5 * (arr + arr.conj().T))[0])
        if lowest < -_TOL.psd:
            raise NotPositiveSemidefinite(f"density matrix has eigenvalue {lowest:.3e} < -{_TOL.psd:.0e}")
        object.__setattr__(self, "elements", _freeze(arr))
        object.__setattr__(self, "dim", arr.shape[0])

    @classmethod
    def diagonal(cls, weights, label: str | None = None) -> "DensityMatrix":
        return cls(np.diag(np.asarray(weights, dtype=np.float64)), label=label)

    @classmethod
    def pure(cls, vector, label: str | None = None) -> "DensityMatrix":
        v = np.asarray(vector, dtype=np.complex128).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), label=label)

    def is_diagonal(self) -> bool:
        off = self.elements - np.diag(np.diag(self.elements))
        return not np.any(off)

    def ground_population(self) -> float:
        return float(self.elements[0, 0].real)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.elements, self.elements)))


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    elements: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        arr = _as_square(self.elements, "unitary")
        if not is_unitary(arr, _TOL.unitary):
            err = _unitarity_error(arr)
            raise NotUnitary(f"max |U^dag U - I| = {err:.3e} exceeds {_TOL.unitary:.0e}")
        object.__setattr__(self, "elements", _freeze(arr))
        object.__setattr__(self, "dim", arr.shape[0])

    @classmethod
    def identity(cls, dim: int) -> "UnitaryMatrix":
        return cls(np.eye(dim, dtype=np.complex128))

    @property
    def dagger(self) -> "UnitaryMatrix":
        return UnitaryMatrix(self.elements.conj().T)

    def __matmul__(self, other: "UnitaryMatrix") -> "UnitaryMatrix":
        return UnitaryMatrix(self.elements @ other.elements)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    elements: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        arr = _as_square(self.elements, "Hermitian operator")
        herm = hermiticity_error(arr)
        if herm > _TOL.hermitian:
            raise NotHermitian(f"operator Hermiticity error {herm:.3e} exceeds {_TOL.hermitian:.0e}")
        object.__setattr__(self, "elements", _freeze(arr))
        object.__setattr__(self, "dim", arr.shape[0])

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.elements + other.elements)

    def spectral_norm(self) -> float:
        return float(np.max(np.abs(eig_hermitian(self)[0])))


def _matrix_of(x) -> np.ndarray:
    if isinstance(x, (DensityMatrix, HermitianOperator, UnitaryMatrix)):
        return x.elements
    return np.asarray(x, dtype=np.complex128)


def _unitarity_error(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def is_unitary(u, tol: float = _TOL.unitary) -> bool:
    arr = _matrix_of(u)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        return False
    return _unitarity_error(arr) <= tol


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    # Largest-magnitude component of every column made real and positive.
    idx = np.argmax(np.abs(vecs) > np.abs(vecs).max(axis=0) * (1 - 1e-9), axis=0)
    pivots = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.abs(pivots) / pivots)[None, :]


def eig_hermitian(h) -> tuple[np.ndarray, UnitaryMatrix]:
    """Eigen-decompose a Hermitian matrix.

    Returns eigenvalues in descending order and the matching eigenvectors as
    columns of a unitary. Ties keep ascending basis order and each column's
    dominant component is made real positive, so diagonal inputs map to
    permutation matrices with +1 entries.
    """
    m = _matrix_of(h)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    herm = hermiticity_error(m)
    if herm > _TOL.hermitian * max(1.0, float(np.max(np.abs(m)))):
        raise NotHermitian(f"Hermiticity error {herm:.3e}")
    m = 0.5 * (m + m.conj().T)
    if not np.any(m - np.diag(np.diag(m))):
        w = np.diag(m).real.copy()
        order = np.argsort(-w, kind="stable")
        vecs = np.eye(m.shape[0], dtype=np.complex128)[:, order]
        return w[order], UnitaryMatrix(vecs)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailure(str(exc)) from exc
    order = np.argsort(-w, kind="stable")
    return w[order], UnitaryMatrix(_fix_phases(v[:, order]))


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    label = None
    if a.label or b.label:
        label = f"{a.label or '?'}(x){b.label or '?'}"
    return DensityMatrix(np.kron(a.elements, b.elements), label=label)


def partial_trace(
    rho: DensityMatrix, dims: BipartiteDims, keep: Literal["system", "bath"] = "system"
) -> DensityMatrix:
    if rho.dim != dims.joint:
        raise DimensionMismatch(f"state dimension {rho.dim} != {dims.n_system}*{dims.n_bath}")
    t = rho.elements.reshape(dims.n_system, dims.n_bath, dims.n_system, dims.n_bath)
    if keep == "system":
        reduced = np.einsum("ijkj->ik", t)
    elif keep == "bath":
        reduced = np.einsum("ijil->jl", t)
    else:
        raise ValueError(f"keep must be 'system' or 'bath', got {keep!r}")
    return DensityMatrix(0.5 * (reduced + reduced.conj().T))


def evolve(rho: DensityMatrix, u) -> DensityMatrix:
    """Return ``U rho U^dagger``."""
    mat = u.elements if isinstance(u, UnitaryMatrix) else np.asarray(u, dtype=np.complex128)
    if mat.shape != (rho.dim, rho.dim):
        raise DimensionMismatch(f"propagator shape {mat.shape} does not match state dimension {rho.dim}")
    if not isinstance(u, UnitaryMatrix) and not is_unitary(mat):
        raise NotUnitary(f"propagator fails unitarity check (error {_unitarity_error(mat):.3e})")
    out = mat @ rho.elements @ mat.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T), label=rho.label)


def expm_unitary(h, t: float) -> UnitaryMatrix:
    """``exp(-i H t)`` through the eigendecomposition of ``H``."""
    w, v = eig_hermitian(h)
    vm = v.elements
    return UnitaryMatrix((vm * np.exp(-1j * w * t)[None, :]) @ vm.conj().T)


def haar_unitaries(count: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` Haar-distributed unitaries as a ``(count, dim, dim)`` array.

    QR of a complex Ginibre matrix, with the phases of ``R``'s diagonal moved
    into ``Q`` so the result is exactly Haar distributed.
    """
    z = (rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    return q * (d / np.abs(d))[:, None, :]


def haar_unitary(dim: int, rng: np.random.Generator | int | None = None) -> UnitaryMatrix:
    rng = np.random.default_rng(rng)
    return UnitaryMatrix(haar_unitaries(1, dim, rng)[0])
