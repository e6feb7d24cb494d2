"""Minkowski four-vector algebra, sector classification and boosts.

Vectors are plain numpy arrays whose first component is time.  Both the
1+1 (length 2) and 3+1 (length 4) cases are supported; every function
infers the dimension from the trailing axis, so an ``(n, d)`` array is
treated as a batch of ``n`` vectors.

Boosts are *active*: a particle at rest, ``(1, 0, 0, 0)``, boosted with
rapidity ``chi`` along ``+x`` becomes ``(cosh chi, -sinh chi, 0, 0)``.
Equivalently, the components are those seen by an observer moving with
velocity ``tanh chi`` along ``+x``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

LIGHTLIKE_TOL = 1e-12


class Signature(str, enum.Enum):
    """Metric sign convention."""

    MOSTLY_PLUS = "mostly-plus"
    MOSTLY_MINUS = "mostly-minus"

    @property
    def time_sign(self) -> int:
        """Sign of ``eta_00``."""
        return -1 if self is Signature.MOSTLY_PLUS else 1

    def metric(self, dim: int = 4) -> np.ndarray:
        """Diagonal metric ``eta`` of size ``dim x dim``."""
        if dim < 2:
            raise DomainError(f"dimension must be >= 2, got {dim}")
        diag = np.full(dim, -self.time_sign, dtype=float)
        diag[0] = self.time_sign
        return np.diag(diag)


MOSTLY_PLUS = Signature.MOSTLY_PLUS
MOSTLY_MINUS = Signature.MOSTLY_MINUS


class Sector(enum.IntEnum):
    """Causal character of an interval.  Integer codes are used in batches."""

    LIGHTLIKE = 0
    TIMELIKE = 1
    SPACELIKE = 2

    @property
    def other(self) -> "Sector":
        if self is Sector.TIMELIKE:
            return Sector.SPACELIKE
        if self is Sector.SPACELIKE:
            return Sector.TIMELIKE
        raise DomainError("lightlike sector has no complement")


def as_sector(value) -> Sector:
    """Coerce a ``Sector``, its name or its integer code."""
    if isinstance(value, Sector):
        return value
    if isinstance(value, str):
        try:
            return Sector[value.upper()]
        except KeyError:
            raise DomainError(f"unknown sector {value!r}") from None
    return Sector(int(value))


def as_signature(value) -> Signature:
    if isinstance(value, Signature):
        return value
    try:
        return Signature(value)
    except ValueError:
        raise DomainError(f"unknown signature {value!r}") from None


def norm_squared(v, sig: Signature = MOSTLY_PLUS):
    """Invariant interval ``eta_{mu nu} v^mu v^nu``.

    Returns a float for a single vector, an array for a batch.
    """
    v = np.asarray(v, dtype=float)
    spatial = np.sum(v[..., 1:] ** 2, axis=-1)
    out = sig.time_sign * (v[..., 0] ** 2 - spatial)
    return float(out) if out.ndim == 0 else out


def sector_codes(v, sig: Signature = MOSTLY_PLUS, tol: float = LIGHTLIKE_TOL) -> np.ndarray:
    """Vectorised :func:`classify`; returns ``int8`` codes of :class:`Sector`."""
    if tol < 0:
        raise DomainError("tol must be non-negative")
    s = np.atleast_1d(norm_squared(v, sig)) * sig.time_sign
    codes = np.where(s > 0, Sector.TIMELIKE, Sector.SPACELIKE).astype(np.int8)
    codes[np.abs(s) <= tol] = Sector.LIGHTLIKE
    return codes


def classify(v, sig: Signature = MOSTLY_PLUS, tol: float = LIGHTLIKE_TOL) -> Sector:
    """Sector of a single vector: lightlike iff ``|v.v| <= tol``."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DomainError("classify takes a single vector; use sector_codes for batches")
    return Sector(int(sector_codes(v, sig, tol)[0]))


@dataclass(frozen=True)
class Boost:
    """Pure boost with a given rapidity along a spatial unit axis."""

    rapidity: float
    axis: tuple = field(default=(1.0, 0.0, 0.0))

    def __post_init__(self):
        if not np.isfinite(self.rapidity):
            raise DomainError("rapidity must be finite")
        axis = np.asarray(self.axis, dtype=float)
        n = np.linalg.norm(axis)
        if axis.ndim != 1 or n == 0 or not np.isfinite(n):
            raise DomainError(f"invalid boost axis {self.axis!r}")
        object.__setattr__(self, "axis", tuple(axis / n))

    @classmethod
    def along(cls, rapidity: float, dim: int = 4, direction: int = 1) -> "Boost":
        """Boost along spatial coordinate ``direction`` (1-based) in ``dim`` dimensions."""
        axis = np.zeros(dim - 1)
        axis[direction - 1] = 1.0
        return cls(rapidity, tuple(axis))

    @property
    def dim(self) -> int:
        return len(self.axis) + 1

    def matrix(self, dim: int | None = None) -> np.ndarray:
        """Lorentz matrix ``Lambda`` acting on column vectors."""
        dim = self.dim if dim is None else dim
        n = np.zeros(dim - 1)
        k = min(dim - 1, len(self.axis))
        n[:k] = self.axis[:k]
        if not np.isclose(np.linalg.norm(n), 1.0, atol=1e-12):
            raise DomainError(f"axis {self.axis} does not fit dimension {dim}")
        ch, sh = np.cosh(self.rapidity), np.sinh(self.rapidity)
        lam = np.empty((dim, dim))
        lam[0, 0] = ch
        lam[0, 1:] = -sh * n
        lam[1:, 0] = -sh * n
        lam[1:, 1:] = np.eye(dim - 1) + (ch - 1.0) * np.outer(n, n)
        return lam


def boost_vector(v, b: Boost) -> np.ndarray:
    """Apply ``b`` to a vector or to every row of an ``(n, d)`` batch."""
    v = np.asarray(v, dtype=float)
    lam = b.matrix(v.shape[-1])
    return v @ lam.T


def boost_tensor(T, b: Boost) -> np.ndarray:
    """Transform a contravariant rank-2 tensor: ``Lambda T Lambda^T``."""
    T = np.asarray(T, dtype=float)
    lam = b.matrix(T.shape[-1])
    return lam @ T @ lam.T
