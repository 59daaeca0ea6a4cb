"""Eigen lists of group-covariant pure-state channels and their functionals.

An eigen list is a nonnegative real vector indexed by the dual group in
canonical order, summing to the group order.  It is the complete sufficient
statistic of a group-covariant pure-state channel up to isometric equivalence.
The first Gram-matrix row and the eigen list form an exact Fourier pair:

    lambda_chi = sum_g gamma_g * conj(chi(g))
    gamma_g    = (1/|G|) * sum_chi lambda_chi * chi(g)

Entropies are reported in bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .characters import tables_for
from .errors import NumericalError, ValidationError
from .groups import GroupSpec

TRACE_RTOL = 1e-6        # relative tolerance on sum(lambda) == |G|
NEG_CLIP = 1e-9          # entries below 0 but above -NEG_CLIP are clipped
GRAM_TOL = 1e-9          # GramRow structural tolerances
PSD_TOL = 1e-6           # transform output more negative than this is an error


def _as_readonly(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EigenList:
    """Validated eigen list; `values` is a read-only float array."""

    group: GroupSpec
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64).reshape(-1)
        if arr.size != self.group.order:
            raise ValidationError(
                f"eigen list length {arr.size} != group order {self.group.order}"
            )
        if arr.min(initial=0.0) < -NEG_CLIP:
            raise ValidationError(
                f"negative eigen list entry {arr.min()} below -{NEG_CLIP}"
            )
        arr = np.clip(arr, 0.0, None)
        n = self.group.order
        if abs(arr.sum() - n) > TRACE_RTOL * n:
            raise ValidationError(
                f"eigen list sums to {arr.sum()}, expected {n} (rel tol {TRACE_RTOL})"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def normalized(self) -> np.ndarray:
        """The probability vector mu = lambda / |G|."""
        return self.values / self.group.order

    def __len__(self):
        return self.values.size


@dataclass(frozen=True, eq=False)
class GramRow:
    """First row of a group-circulant Gram matrix; complex, gamma_e == 1."""

    group: GroupSpec
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.complex128).reshape(-1)
        if arr.size != self.group.order:
            raise ValidationError("gram row length != group order")
        if abs(arr[0] - 1.0) > GRAM_TOL:
            raise ValidationError(f"gamma_e = {arr[0]}, expected 1")
        neg = tables_for(self.group).neg
        if np.max(np.abs(arr[neg] - arr.conj())) > GRAM_TOL:
            raise ValidationError("gram row breaks conjugate symmetry gamma(g^-1) = conj(gamma(g))")
        if np.max(np.abs(arr)) > 1.0 + GRAM_TOL:
            raise ValidationError("gram row entry exceeds unit modulus")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


def validate(lam: EigenList) -> None:
    """Re-run the eigen-list invariant checks (construction already enforces them)."""
    EigenList(lam.group, lam.values)


def perfect_list(G: GroupSpec) -> EigenList:
    """All-ones list: orthonormal output states (perfectly distinguishable)."""
    return EigenList(G, np.ones(G.order))


def useless_list(G: GroupSpec) -> EigenList:
    """(|G|, 0, ..., 0): identical output states (no information)."""
    v = np.zeros(G.order)
    v[0] = G.order
    return EigenList(G, v)


def holevo_info(lam: EigenList) -> float:
    """Symmetric Holevo information H(mu) in bits; 0*log(0) = 0."""
    mu = lam.normalized()
    mu = mu[mu > 0]
    return float(-(mu * np.log2(mu)).sum())


def channel_fidelity(lam: EigenList) -> float:
    """Mean |gamma_g| over non-identity g."""
    n = lam.group.order
    if n == 1:
        return 0.0
    gamma = gram_row_from_eigenlist(lam).values
    return float(np.abs(gamma[1:]).sum() / (n - 1))


def pgm_error(lam: EigenList) -> float:
    """Pretty-good-measurement error: 1 - ((1/|G|) * sum sqrt(lambda))^2."""
    n = lam.group.order
    return float(1.0 - (np.sqrt(lam.values).sum() / n) ** 2)


# ---------------------------------------------------------------------------
# Gram row <-> eigen list Fourier pair


def gram_row_from_eigenlist(lam: EigenList) -> GramRow:
    chars = tables_for(lam.group).chars
    gamma = chars @ lam.values / lam.group.order
    return GramRow(lam.group, gamma)


def eigenlist_from_gram_row(row: GramRow) -> EigenList:
    chars = tables_for(row.group).chars
    lam = chars.conj().T @ row.values
    if np.max(np.abs(lam.imag)) > 1e-8:
        raise NumericalError("transform of gram row is not real")
    lam = lam.real
    if lam.min(initial=0.0) < -PSD_TOL:
        raise NumericalError(
            f"gram row is not a PSD circulant: eigenvalue {lam.min()} < -{PSD_TOL}"
        )
    return EigenList(row.group, np.clip(lam, 0.0, None))
