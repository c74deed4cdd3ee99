"""Frozen record types shared by the engine modules.

All records are frozen dataclasses; engine code never mutates them.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


class SpecError(ValueError):
    """Raised when a record violates one of its invariants."""


def as_fraction(value):
    """Convert an int, float, Fraction or 'p/q' string to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # 0.3 means 3/10, not the binary expansion of 0.3
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class Component:
    ratio: Fraction
    mean: tuple
    stddev: float

    def __post_init__(self):
        object.__setattr__(self, 'ratio', as_fraction(self.ratio))
        object.__setattr__(self, 'mean', tuple(float(v) for v in np.atleast_1d(self.mean)))
        object.__setattr__(self, 'stddev', float(self.stddev))
        if self.ratio <= 0:
            raise SpecError(f"Component ratio must be positive, got {self.ratio}")
        if not self.stddev > 0 or not math.isfinite(self.stddev):
            raise SpecError(f"Component stddev must be positive and finite, got {self.stddev}")


@dataclass(frozen=True)
class MixtureSpec:
    dimension: int
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, 'components', tuple(self.components))
        if self.dimension < 1:
            raise SpecError(f"Dimension must be positive, got {self.dimension}")
        if not self.components:
            raise SpecError("A mixture needs at least one component")
        for k, comp in enumerate(self.components):
            if len(comp.mean) != self.dimension:
                raise SpecError(
                    f"Component {k} mean has length {len(comp.mean)}, expected {self.dimension}"
                )
        total = sum((c.ratio for c in self.components), Fraction(0))
        if total != 1:
            raise SpecError(f"Component ratios must sum to exactly 1, got {total}")

    def __repr__(self):
        return f'<MixtureSpec d={self.dimension} m={self.m}>'

    @property
    def m(self):
        return len(self.components)

    @property
    def ratios(self):
        return np.array([float(c.ratio) for c in self.components])

    @property
    def means(self):
        """Component means as an (m, d) array."""
        return np.array([c.mean for c in self.components], dtype=float)

    @property
    def stddevs(self):
        return np.array([c.stddev for c in self.components])

    def common_stddev(self):
        """Return the shared sigma, or None when the components differ."""
        sigmas = {c.stddev for c in self.components}
        return sigmas.pop() if len(sigmas) == 1 else None


@dataclass(frozen=True)
class HiddenLabeling:
    n: int
    counts: tuple

    def __post_init__(self):
        object.__setattr__(self, 'counts', tuple(int(c) for c in self.counts))
        if self.n < 1:
            raise SpecError(f"n must be positive, got {self.n}")
        if sum(self.counts) != self.n or any(c < 0 for c in self.counts):
            raise SpecError(f"Counts {self.counts} do not partition n = {self.n}")

    @property
    def labels(self):
        """Canonical block layout: first n_1 indices get label 0, and so on."""
        return np.repeat(np.arange(len(self.counts)), self.counts)


@dataclass(frozen=True, eq=False)
class Dataset:
    points: np.ndarray  # shape (d, n); column i is x_i
    labeling: HiddenLabeling
    seed: int

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[1] != self.labeling.n:
            raise SpecError(
                f"Dataset has shape {self.points.shape}, expected (d, {self.labeling.n})"
            )
        self.points.setflags(write=False)

    @property
    def dimension(self):
        return self.points.shape[0]

    @property
    def n(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class MeasureResult:
    value: float
    method: str  # 'closed-form' | 'quadrature' | 'quasi-monte-carlo'
    error: float = 0.0
    lower_bound: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'value', min(max(float(self.value), 0.0), 1.0))
        if self.error < 0:
            raise SpecError(f"Error estimate must be nonnegative, got {self.error}")


@dataclass(frozen=True)
class DeltaNeighborhood:
    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise SpecError(f"delta must be positive, got {self.delta}")

    def weight(self, sq_dist):
        return (sq_dist <= self.delta ** 2).astype(float)


@dataclass(frozen=True)
class GaussianKernel:
    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise SpecError(f"bandwidth must be positive, got {self.bandwidth}")

    def weight(self, sq_dist):
        return np.exp(-sq_dist / (2.0 * self.bandwidth ** 2))


@dataclass(frozen=True)
class PreconditionResult:
    name: str
    holds: bool
    slack: float

    def to_dict(self):
        return {'name': self.name, 'holds': self.holds, 'slack': self.slack}


@dataclass(frozen=True)
class BoundReport:
    preconditions: tuple
    hoeffding_branch: float
    berry_esseen_branch: float
    size_correction: float
    raw: float
    combined: float
    order_floor: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.combined > max(self.hoeffding_branch, self.berry_esseen_branch) + 1e-15:
            raise SpecError("Combined bound exceeds both branches")

    @property
    def valid(self):
        return all(p.holds for p in self.preconditions)


@dataclass(frozen=True)
class ConditionPair:
    majority: PreconditionResult
    order: PreconditionResult

    @property
    def holds(self):
        return self.majority.holds and self.order.holds

    @property
    def slack(self):
        return min(self.majority.slack, self.order.slack)


@dataclass(frozen=True)
class TrialOutcome:
    trial: int
    clique_nonempty: bool
    majority: bool
    order_ok: bool
    success: bool

    def __post_init__(self):
        if self.success and not (self.clique_nonempty and self.majority and self.order_ok):
            raise SpecError(f"Trial {self.trial} reports success without all flags set")


@dataclass(frozen=True)
class EstimateReport:
    trials: int
    successes: int
    estimate: float
    standard_error: float
    wilson_lo: float
    wilson_hi: float
    seed: int
    success_flags: tuple = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class MomentRow:
    quantity: str
    empirical: float
    theoretical: float
    standard_error: float
    z_score: float


@dataclass(frozen=True)
class TangleFamily:
    """Explicit tangle family; members are subsets of range(n) encoded as bitmasks."""
    n: int
    order: float
    members: frozenset

    def __contains__(self, mask):
        return mask in self.members

    def __len__(self):
        return len(self.members)

    def sets(self):
        """Members as sorted index tuples, ascending bitmask order."""
        return [tuple(i for i in range(self.n) if mask >> i & 1) for mask in sorted(self.members)]
