"""Sorted eigenvalue spectra, numerical rank and product spectra."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import NotPositiveSemidefinite, ValidationError
from .linalg import DensityMatrix, eig_hermitian

_TOL = DEFAULT_TOLERANCES

Label = tuple[int, int]


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Descending eigenvalue list.

    ``labels`` optionally tags each value with the ``(system, bath)`` index
    pair of the basis vector it belongs to. Labels travel with the values
    through sorting so pairings can be turned back into basis permutations.
    """

    values: np.ndarray
    source_dim: int | None = None
    labels: tuple[Label, ...] | None = None
    probabilities: bool = True

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64).ravel()
        if vals.size and np.any(np.diff(vals) > 0):
            raise ValidationError("spectrum values must be sorted in descending order")
        if vals.size and vals[-1] < -_TOL.psd:
            raise NotPositiveSemidefinite(f"spectrum contains {vals[-1]:.3e} < -{_TOL.psd:.0e}")
        if self.probabilities and abs(vals.sum() - 1.0) > _TOL.probability_sum:
            raise ValidationError(f"spectrum sums to {vals.sum()!r}, expected 1")
        dim = vals.size if self.source_dim is None else int(self.source_dim)
        if dim < vals.size:
            raise ValidationError(f"source_dim {dim} smaller than value count {vals.size}")
        if self.labels is not None:
            labels = tuple((int(m), int(j)) for m, j in self.labels)
            if len(labels) != vals.size:
                raise ValidationError("labels must match values one to one")
            object.__setattr__(self, "labels", labels)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "source_dim", dim)

    @classmethod
    def from_values(cls, values: Sequence[float], labels=None, probabilities: bool = True) -> "Spectrum":
        """Sort arbitrary values (and their labels) into a spectrum; ties keep input order."""
        vals = np.asarray(values, dtype=np.float64).ravel()
        order = np.argsort(-vals, kind="stable")
        lab = None if labels is None else tuple(tuple(labels[i]) for i in order)
        return cls(vals[order], labels=lab, probabilities=probabilities)

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, k):
        return self.values[k]

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(max(length, self.values.size))
        out[: self.values.size] = self.values
        return out

    def top_sum(self, count: int) -> float:
        return float(self.values[:count].sum())

    def tolist(self) -> list[float]:
        return [float(v) for v in self.values]


@dataclass(frozen=True)
class RankReport:
    rank: int
    tolerance_used: float
    smallest_kept: float | None
    largest_dropped: float | None
    marginal: bool = field(default=False)


def default_rank_tolerance(spec: Spectrum) -> float:
    largest = float(spec.values[0]) if len(spec) else 0.0
    return spec.source_dim * np.finfo(np.float64).eps * max(largest, np.finfo(np.float64).tiny)


def spectrum(rho: DensityMatrix) -> Spectrum:
    """Descending eigenvalues of ``rho``; labels follow the eigenbasis column order."""
    w, _ = eig_hermitian(rho)
    if w[-1] < -_TOL.psd:
        raise NotPositiveSemidefinite(f"eigenvalue {w[-1]:.3e} below -{_TOL.psd:.0e}")
    w = np.where(w < 0, 0.0, w)
    return Spectrum(w, source_dim=rho.dim)


def is_marginal(spec: Spectrum, tol: float, factor: float = _TOL.marginal_factor) -> bool:
    """True when some value sits within a decade of the rank threshold."""
    v = spec.values
    return bool(np.any((v >= tol / factor) & (v <= tol * factor)))


def numerical_rank(spec: Spectrum, tol: float | None = None) -> RankReport:
    """Count eigenvalues strictly above ``tol``.

    Defaults to ``dim * eps * max(values)``.
    """
    if tol is None:
        tol = default_rank_tolerance(spec)
    if tol <= 0:
        raise ValueError("rank tolerance must be positive")
    v = spec.values
    kept = v[v > tol]
    dropped = v[v <= tol]
    return RankReport(
        rank=int(kept.size),
        tolerance_used=float(tol),
        smallest_kept=float(kept.min()) if kept.size else None,
        largest_dropped=float(dropped.max()) if dropped.size else None,
        marginal=is_marginal(spec, tol),
    )


def spectra_equal(p: Spectrum, q: Spectrum, tol: float = _TOL.spectrum) -> bool:
    n = max(len(p), len(q), p.source_dim, q.source_dim)
    return bool(np.all(np.abs(p.padded(n) - q.padded(n)) <= tol))


def product_spectrum(a: Spectrum, b: Spectrum) -> Spectrum:
    """All products ``a[m] * b[j]``, sorted descending and labelled ``(m, j)``.

    Candidates are enumerated in system-major order, so equal products keep
    the ordering of the joint basis.
    """
    prods = np.outer(a.values, b.values).ravel()
    labels = [(m, j) for m in range(len(a)) for j in range(len(b))]
    order = np.argsort(-prods, kind="stable")
    return Spectrum(
        prods[order],
        source_dim=a.source_dim * b.source_dim,
        labels=tuple(labels[i] for i in order),
        probabilities=a.probabilities and b.probabilities,
    )
