"""Finite probability mass functions over integer resource units."""

from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

from .constants import PMF_SUM_TOLERANCE
from .exceptions import DomainError


@dataclass(frozen=True, eq=False)
class DiscretePmf:
    """Probabilities ``p[j]`` of requiring ``j`` resource units.

    ``deficit`` is mass removed by truncation at a cap; it is zero for a
    proper pmf and ``p.sum() + deficit == 1`` always holds.
    """

    probabilities: np.ndarray
    deficit: float = 0.0

    def __post_init__(self) -> None:
        values = np.array(self.probabilities, dtype=float).ravel()
        if values.size == 0:
            raise DomainError("A pmf needs at least one entry")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise DomainError("pmf entries must be finite and non-negative")
        if self.deficit < 0:
            raise DomainError("Truncation deficit must be non-negative")
        total = float(values.sum()) + self.deficit
        if abs(total - 1.0) > PMF_SUM_TOLERANCE:
            raise DomainError(f"pmf mass must be 1, got {total!r}")
        values.setflags(write=False)
        object.__setattr__(self, "probabilities", values)

    @classmethod
    def delta(cls, j: int) -> "DiscretePmf":
        """Unit mass at ``j``."""
        values = np.zeros(j + 1)
        values[j] = 1.0
        return cls(values)

    @classmethod
    def from_mapping(cls, masses: Mapping[int, float]) -> "DiscretePmf":
        if not masses:
            raise DomainError("Empty pmf mapping")
        if min(masses) < 0:
            raise DomainError("Resource units must be non-negative")
        values = np.zeros(max(masses) + 1)
        for j, p in masses.items():
            values[j] += p
        return cls(values)

    @classmethod
    def from_weights(cls, weights: Iterable[float]) -> "DiscretePmf":
        """Normalize non-negative weights into a pmf."""
        values = np.asarray(list(weights), dtype=float)
        total = values.sum()
        if total <= 0:
            raise DomainError("Cannot normalize weights with zero total mass")
        return cls(values / total)

    def __len__(self) -> int:
        return int(self.probabilities.size)

    def __getitem__(self, j: int) -> float:
        if 0 <= j < self.probabilities.size:
            return float(self.probabilities[j])
        return 0.0

    def __repr__(self) -> str:
        shown = {j: round(p, 6) for j, p in self.to_dict().items()}
        return f"DiscretePmf({shown}, deficit={self.deficit:.3g})"

    @property
    def max_support(self) -> int:
        nonzero = np.flatnonzero(self.probabilities)
        return int(nonzero[-1]) if nonzero.size else 0

    @property
    def min_support(self) -> int:
        nonzero = np.flatnonzero(self.probabilities)
        return int(nonzero[0]) if nonzero.size else 0

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probabilities)

    def mean(self) -> float:
        """Mean demand conditional on not being truncated."""
        mass = self.probabilities.sum()
        return float(np.dot(np.arange(self.probabilities.size), self.probabilities) / mass)

    def cdf(self, j: int) -> float:
        if j < 0:
            return 0.0
        return float(self.probabilities[: j + 1].sum())

    def mass_between(self, lower: int, upper: Optional[int] = None) -> float:
        """Mass on ``lower <= j <= upper`` (``upper`` unbounded when omitted)."""
        lower = max(lower, 0)
        stop = None if upper is None else upper + 1
        return float(self.probabilities[lower:stop].sum())

    def restricted(self, lower: int, upper: Optional[int] = None) -> Tuple["DiscretePmf", float]:
        """Conditional pmf on ``lower <= j <= upper`` and the retained mass.

        Raises:
            DomainError: if no mass lies in the window.
        """
        retained = self.mass_between(lower, upper)
        if retained <= 0:
            raise DomainError(f"No mass between {lower} and {upper}")
        values = np.zeros_like(self.probabilities)
        stop = None if upper is None else upper + 1
        window = slice(max(lower, 0), stop)
        values[window] = self.probabilities[window] / retained
        return DiscretePmf(_trim(values)), retained

    def padded(self, length: int) -> np.ndarray:
        """Probabilities as an array of at least ``length`` entries."""
        if length <= self.probabilities.size:
            return np.array(self.probabilities)
        out = np.zeros(length)
        out[: self.probabilities.size] = self.probabilities
        return out

    def to_dict(self) -> Dict[int, float]:
        return {int(j): float(self.probabilities[j]) for j in self.support()}

    def allclose(self, other: "DiscretePmf", atol: float = 1e-12) -> bool:
        size = max(len(self), len(other))
        return bool(
            np.allclose(self.padded(size), other.padded(size), rtol=0.0, atol=atol)
            and abs(self.deficit - other.deficit) <= atol
        )


def _trim(values: np.ndarray) -> np.ndarray:
    nonzero = np.flatnonzero(values)
    end = int(nonzero[-1]) + 1 if nonzero.size else 1
    return values[:end]


def mixture(components: Iterable[Tuple[float, DiscretePmf]]) -> DiscretePmf:
    """Weighted mixture of pmfs; weights are normalized."""
    parts = [(w, p) for w, p in components if w > 0]
    if not parts:
        raise DomainError("Mixture needs at least one positive weight")
    size = max(len(p) for _, p in parts)
    total = sum(w for w, _ in parts)
    values = sum(w * p.padded(size) for w, p in parts) / total
    return DiscretePmf(values)
