"""Capture-probability model, multinomial cell probabilities and data containers.

Two model families are supported: the base family, whose covariate vector is
either fully observed or fully missing, and the extended family, which adds
one always-observed binary covariate and stratifies the capture-count cells
by its level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import expit, log_expit

MAX_OCCASIONS = 64


class DataError(ValueError):
    """Raised when input data violate the model's structural requirements."""


@lru_cache(maxsize=None)
def _log_binom_coeffs(k: int) -> np.ndarray:
    """log C(k, j) for j = 0..k, computed once per k via log-gamma."""
    from scipy.special import gammaln

    j = np.arange(k + 1)
    out = gammaln(k + 1) - gammaln(j + 1) - gammaln(k - j + 1)
    out.setflags(write=False)
    return out


def capture_prob(z, beta) -> float:
    """Per-occasion capture probability expit(beta'z).

    Evaluated through the sign-stable sigmoid, so large |beta'z| saturates
    to 0.0/1.0 without overflow. ``z`` is expected to carry a leading
    intercept component equal to 1.
    """
    z = np.asarray(z, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if z.shape != beta.shape:
        raise DataError(
            f"covariate/coefficient length mismatch: {z.shape} vs {beta.shape}"
        )
    return float(expit(z @ beta))


def _binom_pmf_matrix(eta: np.ndarray, k: int) -> np.ndarray:
    """Binomial(k, expit(eta)) pmf for each row; shape (len(eta), k+1).

    Uses log_expit on both tails so saturated linear predictors stay finite.
    """
    logc = _log_binom_coeffs(k)
    lg = log_expit(eta)[:, None]
    lq = log_expit(-eta)[:, None]
    j = np.arange(k + 1)[None, :]
    return np.exp(logc[None, :] + j * lg + (k - j) * lq)


@dataclass(frozen=True)
class BaseFamily:
    """Cell system indexed by capture count k = 0..K."""

    k: int

    name = "base"

    def __post_init__(self):
        if not (1 <= self.k <= MAX_OCCASIONS):
            raise DataError(f"number of occasions must be in 1..{MAX_OCCASIONS}")

    @property
    def n_cells(self) -> int:
        return self.k + 1

    @property
    def cell_labels(self) -> tuple:
        return tuple(range(self.k + 1))

    @property
    def cell_orders(self) -> np.ndarray:
        """Capture count attached to each cell (drives the beta-derivatives)."""
        return np.arange(self.k + 1, dtype=float)

    def alpha_labels(self) -> tuple:
        return tuple(f"gamma{j}" for j in range(self.k + 1))

    def requires_x(self) -> bool:
        return False

    def cell_basis(self, z: np.ndarray, beta: np.ndarray, x=None) -> np.ndarray:
        """Model part of the constraint vector, one row per covariate point."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        beta = np.asarray(beta, dtype=float)
        if z.shape[1] != beta.shape[0]:
            raise DataError(
                f"covariate dimension {z.shape[1]} does not match beta {beta.shape[0]}"
            )
        return _binom_pmf_matrix(z @ beta, self.k)

    def cell_counts(self, d_incomplete: np.ndarray, x_incomplete=None) -> np.ndarray:
        counts = np.zeros(self.n_cells, dtype=int)
        for dv in d_incomplete:
            counts[int(dv)] += 1
        counts[0] = 0
        return counts


@dataclass(frozen=True)
class ExtendedFamily:
    """Cell system {0} plus (x-level, capture count) pairs.

    The always-observed binary covariate sits at position ``x_index`` of the
    covariate vector (right after the intercept). Cells are laid out as
    (0, (0,1), ..., (0,K), (1,1), ..., (1,K)).
    """

    k: int

    name = "extended"
    x_index = 1

    def __post_init__(self):
        if not (1 <= self.k <= MAX_OCCASIONS):
            raise DataError(f"number of occasions must be in 1..{MAX_OCCASIONS}")

    @property
    def n_cells(self) -> int:
        return 2 * self.k + 1

    @property
    def cell_labels(self) -> tuple:
        labels = [0]
        for j in (0, 1):
            labels.extend((j, kk) for kk in range(1, self.k + 1))
        return tuple(labels)

    @property
    def cell_orders(self) -> np.ndarray:
        ks = np.arange(1, self.k + 1, dtype=float)
        return np.concatenate(([0.0], ks, ks))

    def alpha_labels(self) -> tuple:
        out = ["gamma0"]
        for j in (0, 1):
            out.extend(f"gamma{j}{kk}" for kk in range(1, self.k + 1))
        return tuple(out)

    def requires_x(self) -> bool:
        return True

    def cell_basis(self, z: np.ndarray, beta: np.ndarray, x=None) -> np.ndarray:
        if x is None:
            raise DataError("extended family requires the always-observed covariate x")
        z = np.atleast_2d(np.asarray(z, dtype=float))
        beta = np.asarray(beta, dtype=float)
        if z.shape[1] != beta.shape[0]:
            raise DataError(
                f"covariate dimension {z.shape[1]} does not match beta {beta.shape[0]}"
            )
        x = np.atleast_1d(np.asarray(x))
        if x.shape[0] != z.shape[0]:
            raise DataError("x and z row counts differ")
        pmf = _binom_pmf_matrix(z @ beta, self.k)
        out = np.empty((z.shape[0], self.n_cells))
        out[:, 0] = pmf[:, 0]
        ind1 = (x == 1).astype(float)[:, None]
        out[:, 1 : self.k + 1] = pmf[:, 1:] * (1.0 - ind1)
        out[:, self.k + 1 :] = pmf[:, 1:] * ind1
        return out

    def cell_counts(self, d_incomplete: np.ndarray, x_incomplete=None) -> np.ndarray:
        if x_incomplete is None:
            raise DataError("extended family requires x for every individual")
        counts = np.zeros(self.n_cells, dtype=int)
        for dv, xv in zip(d_incomplete, x_incomplete):
            j = int(xv)
            counts[j * self.k + int(dv)] += 1
        counts[0] = 0
        return counts


def make_family(name: str, k: int):
    if name == "base":
        return BaseFamily(k)
    if name == "extended":
        return ExtendedFamily(k)
    raise DataError(f"unknown model family {name!r}")


def cell_prob(z, cell, family, beta, x=None) -> float:
    """Probability of one capture-count cell given the covariate point.

    ``cell`` is an integer 0..K for the base family or 0 / (j, k) for the
    extended family. For extended cells the always-observed level is read
    from ``x`` (falling back to the x-component of ``z``).
    """
    labels = family.cell_labels
    if cell not in labels:
        raise DataError(f"cell {cell!r} out of range for {family.name} family")
    z = np.asarray(z, dtype=float)
    if family.requires_x() and x is None:
        x = z[family.x_index]
    basis = family.cell_basis(z[None, :], np.asarray(beta, dtype=float),
                              None if not family.requires_x() else np.atleast_1d(x))
    return float(basis[0, labels.index(cell)])


def constraint_vector(z, alpha, beta, family, x=None, mask=None) -> np.ndarray:
    """Estimating-function vector U(z; alpha, beta), optionally masked.

    Component ``cell`` is the model cell probability at ``z`` minus the
    corresponding alpha component. With ``mask`` given, dropped components
    are deleted from the returned vector.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape[0] != family.n_cells:
        raise DataError(
            f"alpha has {alpha.shape[0]} components, family defines {family.n_cells}"
        )
    z = np.asarray(z, dtype=float)
    if family.requires_x():
        if x is None:
            raise DataError("extended family requires x")
        x = np.atleast_1d(x)
    basis = family.cell_basis(z[None, :], np.asarray(beta, dtype=float),
                              x if family.requires_x() else None)
    u = basis[0] - alpha
    if mask is not None:
        u = u[np.asarray(mask, dtype=bool)]
    return u


@dataclass(eq=False)
class CaptureDataset:
    """Individuals ever captured, with covariates present only when observed.

    ``z`` holds one row per complete record (in order of appearance), with
    the leading intercept column fixed at 1. Missing covariates are
    represented by the absence of a row, never by sentinel values. For the
    extended layout ``x`` is recorded for every individual and equals the
    second column of ``z`` on complete records.
    """

    k: int
    d: np.ndarray
    r: np.ndarray
    z: np.ndarray
    x: np.ndarray | None = None
    covariate_names: tuple = ()

    def __post_init__(self):
        if not (1 <= int(self.k) <= MAX_OCCASIONS):
            raise DataError(f"number of occasions must be in 1..{MAX_OCCASIONS}")
        self.d = np.asarray(self.d, dtype=int)
        self.r = np.asarray(self.r, dtype=bool)
        self.z = np.asarray(self.z, dtype=float)
        if self.d.ndim != 1 or self.r.shape != self.d.shape:
            raise DataError("d and r must be 1-d arrays of equal length")
        if self.d.size and (self.d.min() < 1 or self.d.max() > self.k):
            bad = np.nonzero((self.d < 1) | (self.d > self.k))[0]
            raise DataError(f"capture counts out of 1..{self.k} at rows {bad.tolist()}")
        if self.z.ndim != 2:
            raise DataError("z must be a 2-d array (complete records by covariates)")
        if self.z.shape[0] != int(self.r.sum()):
            raise DataError("z must have exactly one row per complete record")
        if self.z.shape[0] and not np.all(self.z[:, 0] == 1.0):
            raise DataError("first covariate component must be exactly 1 (intercept)")
        if self.x is not None:
            self.x = np.asarray(self.x, dtype=int)
            if self.x.shape != self.d.shape:
                raise DataError("x must be recorded for every individual")
            if self.x.size and not np.isin(self.x, (0, 1)).all():
                raise DataError("always-observed covariate must be binary 0/1")
            if self.z.shape[0] and self.z.shape[1] > 1:
                if not np.array_equal(self.z[:, 1].astype(int), self.x[self.r]):
                    raise DataError("x must match the second z column on complete records")
        if not self.covariate_names:
            self.covariate_names = tuple(f"y{j}" for j in range(1, self.z.shape[1]))

    @property
    def n(self) -> int:
        return int(self.d.size)

    @property
    def m(self) -> int:
        return int(self.r.sum())

    @property
    def p(self) -> int:
        return int(self.z.shape[1])

    @property
    def d_complete(self) -> np.ndarray:
        return self.d[self.r]

    @property
    def d_incomplete(self) -> np.ndarray:
        return self.d[~self.r]

    @property
    def x_complete(self) -> np.ndarray | None:
        return None if self.x is None else self.x[self.r]

    @property
    def x_incomplete(self) -> np.ndarray | None:
        return None if self.x is None else self.x[~self.r]

    def complete_case(self) -> "CaptureDataset":
        """Copy with every incomplete record discarded."""
        keep = self.r
        return CaptureDataset(
            k=self.k,
            d=self.d[keep].copy(),
            r=np.ones(int(keep.sum()), dtype=bool),
            z=self.z.copy(),
            x=None if self.x is None else self.x[keep].copy(),
            covariate_names=self.covariate_names,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, CaptureDataset):
            return NotImplemented
        same_x = (self.x is None and other.x is None) or (
            self.x is not None and other.x is not None
            and np.array_equal(self.x, other.x)
        )
        return (
            self.k == other.k
            and np.array_equal(self.d, other.d)
            and np.array_equal(self.r, other.r)
            and np.array_equal(self.z, other.z)
            and same_x
            and self.covariate_names == other.covariate_names
        )


@dataclass(frozen=True)
class CellCounts:
    """Tabulation of incomplete records into the family's cells.

    ``counts[0]`` is always 0: the never-captured cell has no observed
    count, its likelihood weight is nu - n. ``mask`` marks the active
    constraints: cell 0 plus every k >= 1 cell with a positive count.
    """

    counts: np.ndarray
    mask: np.ndarray
    family_name: str
    k: int

    @property
    def n_incomplete(self) -> int:
        return int(self.counts[1:].sum())

    @property
    def m_k(self) -> np.ndarray:
        """Base layout: counts for k = 1..K."""
        if self.family_name != "base":
            raise DataError("m_k is defined for the base family")
        return self.counts[1:]

    @property
    def m_jk(self) -> np.ndarray:
        """Extended layout: shape (2, K), rows are x-levels 0 and 1."""
        if self.family_name != "extended":
            raise DataError("m_jk is defined for the extended family")
        return self.counts[1:].reshape(2, self.k)

    @property
    def n_active(self) -> int:
        return int(self.mask.sum())

    @property
    def all_active(self) -> bool:
        return bool(self.mask.all())


def summarize(dataset: CaptureDataset, family) -> CellCounts:
    """Tabulate incomplete records into cells and flag empty ones.

    Cells with zero counts are dropped from the constraint system by every
    downstream solver (the returned mask threads through them).
    """
    if family.k != dataset.k:
        raise DataError("family and dataset disagree on the number of occasions")
    if family.requires_x() and dataset.x is None:
        raise DataError("extended family requires x for every individual")
    counts = family.cell_counts(dataset.d_incomplete, dataset.x_incomplete)
    mask = counts > 0
    mask[0] = True
    return CellCounts(counts=counts, mask=mask, family_name=family.name, k=family.k)
