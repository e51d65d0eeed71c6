"""Domain types and joint batch-size / GPU-frequency selection.

A device profile stores, per (batch size, GPU frequency) grid point, the
measured wall-clock time to process a fixed number of training samples and
the measured peak power.  A relation vector states, per batch size, how many
times that sample budget must be processed to reach the target accuracy,
normalized to the worst batch size.  Selection picks the pair that minimizes
the product of the two while keeping peak power strictly below the cap.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

# Two estimates within this relative distance count as a tie and fall
# through to the deterministic tie-break (larger batch, then higher
# frequency).  Below measurement noise, above float rounding noise.
TIE_REL_TOL = 1e-9

POLICY_TAGS = ("ours", "baseline1", "baseline2", "fastest")


class DataError(ValueError):
    """Measurement data, tables, or input files violate a documented invariant."""


class InfeasibleError(RuntimeError):
    """No (batch size, frequency) combination stays under the power cap."""


@dataclass(frozen=True)
class PowerCap:
    """Hard upper bound on device power draw, in watts.

    ``math.inf`` stands for an unconstrained device.  Feasibility checks use
    a strict ``power < p_max`` comparison.
    """

    p_max: float

    def __post_init__(self) -> None:
        if not isinstance(self.p_max, (int, float)) or isinstance(self.p_max, bool):
            raise DataError(f"power cap must be a number, got {self.p_max!r}")
        object.__setattr__(self, "p_max", float(self.p_max))
        if math.isnan(self.p_max) or self.p_max <= 0:
            raise DataError(f"power cap must be positive, got {self.p_max!r}")

    @classmethod
    def unlimited(cls) -> "PowerCap":
        return cls(math.inf)

    @classmethod
    def parse(cls, text: str) -> "PowerCap":
        """Parse a cap from CLI/file text: a positive number or ``unlimited``."""
        token = text.strip().lower()
        if token in ("unlimited", "inf"):
            return cls.unlimited()
        try:
            watts = float(token)
        except ValueError:
            raise DataError(f"invalid power cap {text!r}") from None
        return cls(watts)

    @property
    def is_unlimited(self) -> bool:
        return math.isinf(self.p_max)

    def __str__(self) -> str:
        return "unlimited" if self.is_unlimited else repr(self.p_max)


def _readonly_table(table: object, name: str, shape: tuple[int, int]) -> np.ndarray:
    arr = np.array(table, dtype=float)
    if arr.shape != shape:
        raise DataError(f"dimension mismatch: {name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DataError(f"{name} entries must be finite and strictly positive")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DeviceProfile:
    """Measured time and peak-power lookup tables for one model on one device.

    ``time_table[i, j]`` is the seconds needed to process ``samples_per_unit``
    training samples at batch size ``batch_sizes[i]`` and GPU frequency
    ``frequencies[j]`` (MHz).  ``power_table`` holds the matching peak watts;
    ``avg_power_table``, when present, the average watts used for energy
    estimates.  Tables are validated on construction and frozen; instances
    are immutable and safe to share across threads.
    """

    model_id: str
    batch_sizes: tuple[int, ...]
    frequencies: tuple[float, ...]
    time_table: np.ndarray
    power_table: np.ndarray
    samples_per_unit: int
    avg_power_table: np.ndarray | None = None

    def __post_init__(self) -> None:
        bs = tuple(int(b) for b in self.batch_sizes)
        if not bs or any(b <= 0 for b in bs) or any(a >= b for a, b in zip(bs, bs[1:])):
            raise DataError("batch sizes must be strictly increasing positive integers")
        fs = tuple(float(f) for f in self.frequencies)
        if (
            not fs
            or any(not math.isfinite(f) or f <= 0 for f in fs)
            or any(a >= b for a, b in zip(fs, fs[1:]))
        ):
            raise DataError("frequencies must be strictly increasing positive values")
        if not isinstance(self.samples_per_unit, (int, np.integer)) or self.samples_per_unit <= 0:
            raise DataError("samples_per_unit must be a positive integer")
        object.__setattr__(self, "batch_sizes", bs)
        object.__setattr__(self, "frequencies", fs)
        object.__setattr__(self, "samples_per_unit", int(self.samples_per_unit))

        shape = (len(bs), len(fs))
        time = _readonly_table(self.time_table, "time table", shape)
        power = _readonly_table(self.power_table, "power table", shape)
        object.__setattr__(self, "time_table", time)
        object.__setattr__(self, "power_table", power)
        if self.avg_power_table is not None:
            avg = _readonly_table(self.avg_power_table, "average power table", shape)
            object.__setattr__(self, "avg_power_table", avg)

        # Monotonicity violations point at sensor faults; reject rather than
        # smooth so the owner re-profiles the offending row.
        rising = np.argwhere(np.diff(time, axis=1) > 0)
        if rising.size:
            b = bs[int(rising[0][0])]
            raise DataError(
                f"time table increases with frequency for batch size {b}; "
                "noisy measurement, re-profile this row"
            )
        falling = np.argwhere(np.diff(power, axis=1) < 0)
        if falling.size:
            b = bs[int(falling[0][0])]
            raise DataError(
                f"power table decreases with frequency for batch size {b}; "
                "noisy measurement, re-profile this row"
            )
        falling_b = np.argwhere(np.diff(power, axis=0) < 0)
        if falling_b.size:
            f = fs[int(falling_b[0][1])]
            raise DataError(
                f"power table decreases with batch size at frequency {f}; "
                "noisy measurement, re-profile this column"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.batch_sizes), len(self.frequencies))

    def batch_index(self, batch_size: int) -> int:
        try:
            return self.batch_sizes.index(batch_size)
        except ValueError:
            raise DataError(f"batch size {batch_size} not in profile {self.model_id!r}") from None

    def frequency_index(self, frequency_mhz: float) -> int:
        try:
            return self.frequencies.index(float(frequency_mhz))
        except ValueError:
            raise DataError(
                f"frequency {frequency_mhz} MHz not in profile {self.model_id!r}"
            ) from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DeviceProfile):
            return NotImplemented
        if (self.avg_power_table is None) != (other.avg_power_table is None):
            return False
        return (
            self.model_id == other.model_id
            and self.batch_sizes == other.batch_sizes
            and self.frequencies == other.frequencies
            and self.samples_per_unit == other.samples_per_unit
            and np.array_equal(self.time_table, other.time_table)
            and np.array_equal(self.power_table, other.power_table)
            and (
                self.avg_power_table is None
                or np.array_equal(self.avg_power_table, other.avg_power_table)
            )
        )


@dataclass(frozen=True)
class RelationVector:
    """Per-batch-size samples-to-accuracy ratios, normalized to the worst case.

    Every ratio lies in (0, 1] and at least one entry equals 1.0 exactly (the
    batch size needing the most samples).
    """

    entries: Mapping[int, float]
    source_id: str = ""

    def __post_init__(self) -> None:
        if not self.entries:
            raise DataError("no batch sizes")
        clean: dict[int, float] = {}
        for b, ratio in self.entries.items():
            if not isinstance(b, (int, np.integer)) or isinstance(b, bool) or b <= 0:
                raise DataError(f"batch sizes must be positive integers, got {b!r}")
            r = float(ratio)
            if not (0.0 < r <= 1.0):
                raise DataError(f"ratio for batch size {b} out of range (0, 1]: {r!r}")
            clean[int(b)] = r
        if not any(r == 1.0 for r in clean.values()):
            raise DataError("relation vector must contain an entry exactly equal to 1.0")
        ordered = dict(sorted(clean.items()))
        object.__setattr__(self, "entries", MappingProxyType(ordered))

    @property
    def batch_sizes(self) -> tuple[int, ...]:
        return tuple(self.entries)


@dataclass(frozen=True)
class FeasibleSet:
    """Per batch size, the maximal frequency index staying under the cap.

    ``pairs`` holds (batch index, frequency index) tuples, ascending in batch
    index, at most one per batch.  Batch sizes with no feasible frequency are
    simply absent; an empty set is a legal value.
    """

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        if any(i < 0 or j < 0 for i, j in pairs):
            raise DataError("feasible pair indices must be non-negative")
        batches = [i for i, _ in pairs]
        if any(a >= b for a, b in zip(batches, batches[1:])):
            raise DataError("feasible pairs must be strictly ascending in batch index")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def to_values(self, profile: DeviceProfile) -> tuple[tuple[int, float], ...]:
        """Resolve index pairs into (batch size, frequency MHz) values."""
        return tuple((profile.batch_sizes[i], profile.frequencies[j]) for i, j in self.pairs)


@dataclass(frozen=True)
class SelectionResult:
    """A chosen operating point plus the estimates that justified it.

    ``feasible_count`` records how many candidate configurations the policy
    actually evaluated (the feasible-set size for the joint policies, the
    fixed candidate list for the baselines).  ``estimated_energy`` is present
    only when the profile carries an average-power table.
    """

    batch_size: int
    frequency_mhz: float
    estimated_tt_acc: float
    feasible_count: int
    policy_tag: str
    estimated_energy: float | None = None

    def __post_init__(self) -> None:
        if self.policy_tag not in POLICY_TAGS:
            raise DataError(f"unknown policy tag {self.policy_tag!r}")
        if not (self.estimated_tt_acc > 0 and math.isfinite(self.estimated_tt_acc)):
            raise DataError("estimated time to accuracy must be positive and finite")
        if self.estimated_energy is not None and not self.estimated_energy > 0:
            raise DataError("estimated energy must be positive")
        if self.feasible_count < 1:
            raise DataError("feasible_count must be at least 1")


def relation_vector(counts: Mapping[int, float], source_id: str = "counts") -> RelationVector:
    """Normalize per-batch-size samples-to-accuracy counts into ratios.

    Each ratio is the batch size's count divided by the maximum count over
    all batch sizes, so the slowest-converging batch size maps to exactly 1.0.
    """
    if not counts:
        raise DataError("no batch sizes")
    for b, count in counts.items():
        if not count > 0:
            raise DataError(f"invalid count for batch size {b}: {count!r}")
    worst = max(counts.values())
    return RelationVector({b: count / worst for b, count in counts.items()}, source_id=source_id)


def _max_feasible_index_scan(power_row: np.ndarray, p_max: float) -> int | None:
    # Reference path: exhaustive scan keeping the last feasible index.  Does
    # not rely on the row being sorted.
    best = None
    for j, watts in enumerate(power_row):
        if watts < p_max:
            best = j
    return best


def _max_feasible_index_bisect(power_row: np.ndarray, p_max: float) -> int | None:
    # Fast path: the row is non-decreasing (validated on load), so the
    # feasible prefix length can be found by binary search.
    lo, hi = 0, len(power_row)
    while lo < hi:
        mid = (lo + hi) // 2
        if power_row[mid] < p_max:
            lo = mid + 1
        else:
            hi = mid
    return lo - 1 if lo else None


def feasible_combinations(profile: DeviceProfile, cap: PowerCap) -> FeasibleSet:
    """Collect, per batch size, the highest frequency with peak power < cap."""
    pairs = []
    for i in range(len(profile.batch_sizes)):
        j = _max_feasible_index_scan(profile.power_table[i], cap.p_max)
        if j is not None:
            pairs.append((i, j))
    return FeasibleSet(tuple(pairs))


def _feasible_pairs_bisect(profile: DeviceProfile, cap: PowerCap) -> tuple[tuple[int, int], ...]:
    pairs = []
    for i in range(len(profile.batch_sizes)):
        j = _max_feasible_index_bisect(profile.power_table[i], cap.p_max)
        if j is not None:
            pairs.append((i, j))
    return tuple(pairs)


def estimate_tt_acc(
    profile: DeviceProfile, r: RelationVector, pair: tuple[int, int]
) -> float:
    """Estimated time-to-accuracy for one (batch index, frequency index) pair.

    Returns ``time_table[i, j] * r[batch]``.  Because ratios are normalized,
    this equals the absolute time to accuracy divided by the worst batch
    size's sample count: a constant positive factor, so comparisons and
    argmins over pairs are unaffected.  Supplying raw counts instead of
    ratios (see ``fastest_configuration``) yields absolute seconds.
    """
    i, j = pair
    if not (0 <= i < len(profile.batch_sizes) and 0 <= j < len(profile.frequencies)):
        raise DataError(f"pair indices {pair!r} out of range for profile shape {profile.shape}")
    b = profile.batch_sizes[i]
    ratio = r.entries.get(b)
    if ratio is None:
        raise DataError(f"relation vector incomplete: no entry for batch size {b}")
    return float(profile.time_table[i, j] * ratio)


def _is_tie(a: float, b: float) -> bool:
    return abs(a - b) <= TIE_REL_TOL * max(abs(a), abs(b))


def _energy_at(profile: DeviceProfile, i: int, j: int, tt: float) -> float | None:
    if profile.avg_power_table is None:
        return None
    return float(profile.avg_power_table[i, j] * tt)


def _check_relation_keys(profile: DeviceProfile, r: RelationVector) -> None:
    unknown = set(r.entries) - set(profile.batch_sizes)
    if unknown:
        raise DataError(
            f"relation vector names batch sizes not in profile: {sorted(unknown)}"
        )


def _pick(
    profile: DeviceProfile,
    multipliers: Mapping[int, float],
    pairs: tuple[tuple[int, int], ...],
    policy_tag: str,
    missing_label: str = "relation vector",
) -> SelectionResult:
    """Argmin of time * multiplier over candidate pairs, deterministic ties.

    Ties within TIE_REL_TOL go to the larger batch size, then the higher
    frequency: equal time, fewer optimizer steps.
    """
    if not pairs:
        raise InfeasibleError("no configuration satisfies power cap")
    best: tuple[float, int, float, int, int] | None = None
    for i, j in pairs:
        b = profile.batch_sizes[i]
        f = profile.frequencies[j]
        mult = multipliers.get(b)
        if mult is None:
            raise DataError(f"{missing_label} incomplete: no entry for batch size {b}")
        tt = float(profile.time_table[i, j] * mult)
        if best is None:
            best = (tt, b, f, i, j)
        elif _is_tie(tt, best[0]):
            if (b, f) > (best[1], best[2]):
                best = (tt, b, f, i, j)
        elif tt < best[0]:
            best = (tt, b, f, i, j)
    tt, b, f, i, j = best
    return SelectionResult(
        batch_size=b,
        frequency_mhz=f,
        estimated_tt_acc=tt,
        feasible_count=len(pairs),
        policy_tag=policy_tag,
        estimated_energy=_energy_at(profile, i, j, tt),
    )


def select_configuration(
    profile: DeviceProfile, r: RelationVector, cap: PowerCap
) -> SelectionResult:
    """Pick the feasible (batch size, frequency) minimizing estimated time to accuracy.

    Reference implementation: linear scan over the whole power table.  Raises
    InfeasibleError when nothing stays under the cap and DataError when the
    relation vector misses a feasible batch size (silent shrinking of the
    search space would mask data bugs).
    """
    _check_relation_keys(profile, r)
    feasible = feasible_combinations(profile, cap)
    return _pick(profile, r.entries, feasible.pairs, "ours")


def select_configuration_fast(
    profile: DeviceProfile, r: RelationVector, cap: PowerCap
) -> SelectionResult:
    """Same contract as select_configuration; binary search per power row."""
    _check_relation_keys(profile, r)
    return _pick(profile, r.entries, _feasible_pairs_bisect(profile, cap), "ours")
