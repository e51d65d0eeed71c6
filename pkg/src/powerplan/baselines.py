"""Comparison policies and the energy model.

Baseline 1 is the state of practice: the largest batch size that fits,
run at a precomputed worst-case-safe frequency for the cap.  Baseline 2
picks the batch size with the best samples-to-accuracy ratio but keeps
Baseline 1's frequency, so no joint optimization happens.  The fastest
configuration is the upper bound: the joint selector fed ground-truth
convergence counts instead of proxy ratios.

Energy is a model, not a measurement: average power at the chosen grid
point times the time-to-accuracy estimate.  Peak power decides
feasibility; average power decides energy.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from .core import (
    DataError,
    DeviceProfile,
    PowerCap,
    RelationVector,
    SelectionResult,
    _check_relation_keys,
    _is_tie,
    _max_feasible_index_scan,
    _pick,
    feasible_combinations,
)
from .ingest import ParseError, _numbered_lines


@dataclass(frozen=True)
class SafeFrequencyTable:
    """Per-cap frequency ceilings guaranteeing the cap for any model or batch.

    Keys are cap watts (``math.inf`` for unlimited); the mapping must be
    non-decreasing in the cap.  Lookups are exact: the table is precomputed
    configuration, not something interpolated at run time.
    """

    entries: Mapping[float, float]

    def __post_init__(self) -> None:
        if not self.entries:
            raise DataError("safe-frequency table is empty")
        clean: dict[float, float] = {}
        for cap_w, f in self.entries.items():
            cap = PowerCap(cap_w).p_max  # validates positivity
            clean[cap] = float(f)
            if not clean[cap] > 0:
                raise DataError(f"safe frequency for cap {cap!r} must be positive")
        ordered = dict(sorted(clean.items()))
        freqs = list(ordered.values())
        if any(a > b for a, b in zip(freqs, freqs[1:])):
            raise DataError("safe frequencies must be non-decreasing in the cap")
        object.__setattr__(self, "entries", MappingProxyType(ordered))

    def frequency_for(self, cap: PowerCap) -> float:
        f = self.entries.get(cap.p_max)
        if f is None:
            raise DataError(f"safe-frequency table does not define cap {cap}")
        return f


def parse_safe_table(text: str | Iterable[str]) -> SafeFrequencyTable:
    """Parse CSV lines ``p_max_w,f_mhz`` ('unlimited' allowed for the cap)."""
    entries: dict[float, float] = {}
    for n, line in _numbered_lines(text):
        fields = line.split(",")
        if len(fields) != 2:
            raise ParseError(n, f"expected p_max_w,f_mhz, got {line!r}")
        try:
            cap = PowerCap.parse(fields[0])
            f = float(fields[1])
        except (DataError, ValueError):
            raise ParseError(n, f"expected p_max_w,f_mhz, got {line!r}") from None
        if cap.p_max in entries:
            raise ParseError(n, f"duplicate cap {fields[0]!r}")
        entries[cap.p_max] = f
    return SafeFrequencyTable(entries)


def format_safe_table(table: SafeFrequencyTable) -> str:
    lines = [
        f"{PowerCap(cap)},{repr(float(f))}" for cap, f in table.entries.items()
    ]
    return "\n".join(lines) + "\n"


def compute_safe_table(
    profiles: Iterable[DeviceProfile], caps: Iterable[PowerCap]
) -> SafeFrequencyTable:
    """Derive worst-case-safe frequencies from a set of profiles.

    For each cap, picks the highest frequency whose peak power stays under
    the cap for every profile and every batch size.  All profiles must share
    one frequency axis; a cap no frequency can satisfy is an error rather
    than a silent omission.
    """
    profiles = list(profiles)
    if not profiles:
        raise DataError("no profiles supplied")
    freqs = profiles[0].frequencies
    if any(p.frequencies != freqs for p in profiles):
        raise DataError("profiles have differing frequency axes")
    worst = profiles[0].power_table.max(axis=0)
    for p in profiles[1:]:
        worst = np.maximum(worst, p.power_table.max(axis=0))
    entries: dict[float, float] = {}
    for cap in caps:
        j = _max_feasible_index_scan(worst, cap.p_max)
        if j is None:
            raise DataError(f"no frequency is safe under cap {cap}")
        entries[cap.p_max] = freqs[j]
    return SafeFrequencyTable(entries)


def _energy_at(profile: DeviceProfile, i: int, j: int, tt: float) -> float | None:
    if profile.avg_power_table is None:
        return None
    return float(profile.avg_power_table[i, j] * tt)


def baseline1_select(
    profile: DeviceProfile,
    cap: PowerCap,
    safe: SafeFrequencyTable,
    r: RelationVector | None = None,
) -> SelectionResult:
    """Largest batch size at the cap's precomputed safe frequency.

    The safe table is trusted by construction (worst-case precomputation),
    so the chosen point is deliberately not re-checked against the cap.
    The time estimate uses the relation vector when supplied, raw T_s
    otherwise.
    """
    f = safe.frequency_for(cap)
    j = profile.frequency_index(f)
    i = len(profile.batch_sizes) - 1
    b_max = profile.batch_sizes[i]
    if r is not None:
        _check_relation_keys(profile, r)
        ratio = r.entries.get(b_max)
        if ratio is None:
            raise DataError(f"relation vector incomplete: no entry for batch size {b_max}")
    else:
        ratio = 1.0
    tt = float(profile.time_table[i, j] * ratio)
    return SelectionResult(
        batch_size=b_max,
        frequency_mhz=f,
        estimated_tt_acc=tt,
        feasible_count=1,
        policy_tag="baseline1",
        estimated_energy=_energy_at(profile, i, j, tt),
    )


def baseline2_select(
    profile: DeviceProfile,
    r: RelationVector,
    cap: PowerCap,
    safe: SafeFrequencyTable,
) -> SelectionResult:
    """Best samples-to-accuracy batch size at Baseline 1's frequency.

    The batch size is the argmin of the relation vector over the profile's
    batch sizes (ties go to the larger batch); the frequency stays at the
    safe ceiling, so system and application knobs remain decoupled.
    """
    _check_relation_keys(profile, r)
    missing = [b for b in profile.batch_sizes if b not in r.entries]
    if missing:
        raise DataError(f"relation vector incomplete: no entry for batch size {missing[0]}")
    f = safe.frequency_for(cap)
    j = profile.frequency_index(f)
    best_b: int | None = None
    best_ratio = 0.0
    for b in profile.batch_sizes:
        ratio = r.entries[b]
        if best_b is None:
            best_b, best_ratio = b, ratio
        elif _is_tie(ratio, best_ratio):
            if b > best_b:
                best_b, best_ratio = b, ratio
        elif ratio < best_ratio:
            best_b, best_ratio = b, ratio
    i = profile.batch_index(best_b)
    tt = float(profile.time_table[i, j] * best_ratio)
    return SelectionResult(
        batch_size=best_b,
        frequency_mhz=f,
        estimated_tt_acc=tt,
        feasible_count=len(profile.batch_sizes),
        policy_tag="baseline2",
        estimated_energy=_energy_at(profile, i, j, tt),
    )


def fastest_configuration(
    profile: DeviceProfile,
    true_counts: Mapping[int, float],
    cap: PowerCap,
) -> SelectionResult:
    """Upper bound: the joint selector driven by ground-truth counts.

    Identical machinery to select_configuration, but the multiplier is the
    measured samples-to-accuracy count, so the reported time is absolute
    seconds rather than a normalized estimate.
    """
    if not true_counts:
        raise DataError("no batch sizes")
    for b, count in true_counts.items():
        if not count > 0:
            raise DataError(f"invalid count for batch size {b}: {count!r}")
    unknown = set(true_counts) - set(profile.batch_sizes)
    if unknown:
        raise DataError(f"true counts name batch sizes not in profile: {sorted(unknown)}")
    feasible = feasible_combinations(profile, cap)
    return _pick(profile, true_counts, feasible.pairs, "fastest", missing_label="true counts")


def energy_estimate(
    result: SelectionResult, profile: DeviceProfile, ratio_or_count: float
) -> float:
    """Joules for a selection: average power at (b, f) times the time estimate.

    ``ratio_or_count`` is the convergence multiplier the caller wants the
    energy based on: the relation ratio gives normalized energy, a true
    count gives absolute joules.
    """
    if profile.avg_power_table is None:
        raise DataError("profile lacks average power")
    if not ratio_or_count > 0:
        raise DataError(f"invalid count for batch size {result.batch_size}: {ratio_or_count!r}")
    i = profile.batch_index(result.batch_size)
    j = profile.frequency_index(result.frequency_mhz)
    tt = float(profile.time_table[i, j] * ratio_or_count)
    return float(profile.avg_power_table[i, j] * tt)
