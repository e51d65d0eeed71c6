"""Measurement-log parsing, aggregation into profiles, and persistence.

File grammars (UTF-8, LF line endings; '#' starts a comment line and blank
lines are ignored everywhere):

* power log: one sample per line, ``timestamp_s,power_mw``.
* timing log: header ``b=<int>,f_mhz=<num>,warmup=<int>`` then one mini-batch
  duration (seconds) per line.
* device profile: header ``model_id,s``; a batch-size axis line; a frequency
  axis line; then one cell per line, ``b,f_mhz,t_s_seconds,peak_w[,avg_w]``,
  covering the full grid exactly once.
* relation / counts files: optional ``source_id,<name>`` line, then one
  ``batch_size,value`` line per batch size.

Numbers are written with Python's shortest round-trip rendering so that a
save/load cycle is bit-exact.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import DataError, DeviceProfile, PowerCap, RelationVector

DEFAULT_SAMPLING_PERIOD_S = 1.0  # power sensors are read once per second
DEFAULT_MINIBATCHES = 5
DEFAULT_WARMUP = 1  # first mini-batch absorbs kernel compilation noise


class ParseError(DataError):
    """Malformed input line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _numbered_lines(text: str | Iterable[str]):
    lines = text.splitlines() if isinstance(text, str) else text
    for n, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield n, line


@dataclass(frozen=True)
class PowerTrace:
    """Raw timestamped power samples, milliwatts, prior to aggregation."""

    samples: tuple[tuple[float, float], ...]
    sampling_period_s: float = DEFAULT_SAMPLING_PERIOD_S

    def __post_init__(self) -> None:
        ts = [t for t, _ in self.samples]
        if any(a >= b for a, b in zip(ts, ts[1:])):
            raise DataError("power trace timestamps must be strictly increasing")
        if any(p < 0 for _, p in self.samples):
            raise DataError("power samples must be non-negative")
        if not self.sampling_period_s > 0:
            raise DataError("sampling period must be positive")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def peak_w(self) -> float:
        if not self.samples:
            raise DataError("empty power trace")
        return max(p for _, p in self.samples) / 1000.0

    @property
    def avg_w(self) -> float:
        if not self.samples:
            raise DataError("empty power trace")
        return sum(p for _, p in self.samples) / len(self.samples) / 1000.0


@dataclass(frozen=True)
class TimingTrace:
    """Per-mini-batch durations for one (batch size, frequency) point.

    The first ``warmup_discarded`` durations are kept for the record but
    excluded from aggregation.
    """

    batch_size: int
    frequency_mhz: float
    minibatch_durations: tuple[float, ...]
    warmup_discarded: int = 0

    def __post_init__(self) -> None:
        if self.batch_size <= 0:
            raise DataError("batch size must be positive")
        if not self.frequency_mhz > 0:
            raise DataError("frequency must be positive")
        if any(d <= 0 for d in self.minibatch_durations):
            raise DataError("mini-batch durations must be positive")
        if self.warmup_discarded < 0:
            raise DataError("warm-up count must be non-negative")
        if len(self.minibatch_durations) <= self.warmup_discarded:
            raise DataError("all samples discarded")

    @property
    def retained(self) -> tuple[float, ...]:
        return self.minibatch_durations[self.warmup_discarded :]


@dataclass(frozen=True)
class ProfilingSchedule:
    """Ordered (batch size, frequency MHz) measurement points.

    Batch sizes run in descending order, each with one contiguous ascending
    frequency run; the run's last probe may be the infeasible stopping point.
    """

    points: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        points = tuple((int(b), float(f)) for b, f in self.points)
        seen: list[int] = []
        run_freqs: list[float] = []
        for b, f in points:
            if not seen or seen[-1] != b:
                if b in seen:
                    raise DataError(f"batch size {b} appears in two separate runs")
                if seen and b >= seen[-1]:
                    raise DataError("schedule batch sizes must descend")
                seen.append(b)
                run_freqs = [f]
            else:
                if f <= run_freqs[-1]:
                    raise DataError(f"frequency run for batch size {b} must ascend")
                run_freqs.append(f)
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def parse_power_log(
    text: str | Iterable[str], sampling_period_s: float = DEFAULT_SAMPLING_PERIOD_S
) -> PowerTrace:
    """Parse ``timestamp_s,power_mw`` lines into a PowerTrace.

    Every input line is either a sample, a comment/blank, or a ParseError
    naming its line number; nothing is dropped silently.
    """
    samples: list[tuple[float, float]] = []
    last_ts: float | None = None
    for n, line in _numbered_lines(text):
        fields = line.split(",")
        if len(fields) != 2:
            raise ParseError(n, f"expected timestamp_s,power_mw, got {line!r}")
        try:
            ts, mw = float(fields[0]), float(fields[1])
        except ValueError:
            raise ParseError(n, f"expected timestamp_s,power_mw, got {line!r}") from None
        if last_ts is not None and ts <= last_ts:
            raise ParseError(n, f"non-monotone timestamp {ts!r}")
        if mw < 0:
            raise ParseError(n, f"negative power {mw!r}")
        last_ts = ts
        samples.append((ts, mw))
    return PowerTrace(tuple(samples), sampling_period_s=sampling_period_s)


def parse_timing_log(
    text: str | Iterable[str],
    warmup_override: int | None = None,
    max_minibatches: int | None = None,
) -> TimingTrace:
    """Parse a timing log: header ``b=...,f_mhz=...,warmup=...`` then durations.

    ``warmup_override`` replaces the header's warm-up count; when
    ``max_minibatches`` is given, at most that many retained durations are
    kept (extra trailing measurements are trimmed).
    """
    header: tuple[int, float, int] | None = None
    durations: list[float] = []
    for n, line in _numbered_lines(text):
        if header is None:
            parts = line.split(",")
            keys = [p.partition("=")[0] for p in parts]
            if keys != ["b", "f_mhz", "warmup"]:
                raise ParseError(n, f"expected header b=<int>,f_mhz=<num>,warmup=<int>, got {line!r}")
            try:
                header = (
                    int(parts[0].partition("=")[2]),
                    float(parts[1].partition("=")[2]),
                    int(parts[2].partition("=")[2]),
                )
            except ValueError:
                raise ParseError(n, f"invalid header values in {line!r}") from None
            continue
        try:
            duration = float(line)
        except ValueError:
            raise ParseError(n, f"expected one duration per line, got {line!r}") from None
        if duration <= 0:
            raise ParseError(n, f"non-positive duration {duration!r}")
        durations.append(duration)
    if header is None:
        raise DataError("timing log has no header line")
    b, f_mhz, warmup = header
    if warmup_override is not None:
        warmup = warmup_override
    if max_minibatches is not None:
        if max_minibatches < 1:
            raise DataError("max_minibatches must be at least 1")
        durations = durations[: warmup + max_minibatches]
    return TimingTrace(
        batch_size=b,
        frequency_mhz=f_mhz,
        minibatch_durations=tuple(durations),
        warmup_discarded=warmup,
    )


class AggregatedPoint(NamedTuple):
    """(t_s_seconds, peak_w, avg_w) for one grid point."""

    t_s_seconds: float
    peak_w: float
    avg_w: float


def aggregate_point(
    power: PowerTrace,
    timing: TimingTrace,
    s: int,
    peak_percentile: float | None = None,
) -> AggregatedPoint:
    """Reduce one measurement point to (T_s, peak watts, average watts).

    T_s scales the mean retained mini-batch duration to s samples; s need not
    be a multiple of the batch size.  Peak is the maximum raw sample unless
    ``peak_percentile`` selects a percentile for noisy sensors.
    """
    if not s > 0:
        raise DataError("samples_per_unit must be positive")
    retained = timing.retained
    if not retained:
        raise DataError("all samples discarded")
    if not power.samples:
        raise DataError("empty power trace")
    mean_duration = sum(retained) / len(retained)
    t_s = mean_duration * (s / timing.batch_size)
    mws = [p for _, p in power.samples]
    if peak_percentile is None:
        peak_w = max(mws) / 1000.0
    else:
        if not 0 < peak_percentile <= 100:
            raise DataError("peak percentile must lie in (0, 100]")
        peak_w = float(np.percentile(mws, peak_percentile)) / 1000.0
    avg_w = sum(mws) / len(mws) / 1000.0
    return AggregatedPoint(t_s, peak_w, avg_w)


def profiling_schedule(
    batch_sizes: Sequence[int],
    frequencies: Sequence[float],
    cap: PowerCap,
    power_oracle: Callable[[int, float], float],
) -> ProfilingSchedule:
    """Plan the pruned measurement order for a known power cap.

    Starts at the largest batch size with the lowest frequency and ascends
    until the first infeasible probe (which stays in the schedule: it had to
    be measured to know it is over the cap).  Each smaller batch size resumes
    at the highest feasible frequency found so far, since at a fixed
    frequency a smaller batch can only draw less power.  Without a finite
    cap nothing can be pruned and the schedule covers the full grid.
    """
    bs = [int(b) for b in batch_sizes]
    fs = [float(f) for f in frequencies]
    if not bs or any(a >= b for a, b in zip(bs, bs[1:])):
        raise DataError("batch sizes must be sorted ascending and unique")
    if not fs or any(a >= b for a, b in zip(fs, fs[1:])):
        raise DataError("frequencies must be sorted ascending and unique")

    points: list[tuple[int, float]] = []
    if cap.is_unlimited:
        for b in reversed(bs):
            points.extend((b, f) for f in fs)
        return ProfilingSchedule(tuple(points))

    start = 0
    for b in reversed(bs):
        j = start
        row_best: int | None = None
        while j < len(fs):
            points.append((b, fs[j]))
            if power_oracle(b, fs[j]) < cap.p_max:
                row_best = j
                j += 1
            else:
                break
        if row_best is not None:
            start = row_best
    return ProfilingSchedule(tuple(points))


def discovered_feasible(
    schedule: ProfilingSchedule,
    power_oracle: Callable[[int, float], float],
    cap: PowerCap,
) -> dict[int, float]:
    """Per batch size, the highest frequency whose probe measured under the cap."""
    found: dict[int, float] = {}
    for b, f in schedule:
        if power_oracle(b, f) < cap.p_max:
            if b not in found or f > found[b]:
                found[b] = f
    return found


def _fmt(x: float) -> str:
    return repr(float(x))


def save_profile(profile: DeviceProfile) -> str:
    """Render a DeviceProfile in the profile file grammar (bit-exact round trip)."""
    if "\n" in profile.model_id or "\r" in profile.model_id:
        raise DataError("model_id must not contain newlines")
    lines = [f"{profile.model_id},{profile.samples_per_unit}"]
    lines.append(",".join(str(b) for b in profile.batch_sizes))
    lines.append(",".join(_fmt(f) for f in profile.frequencies))
    has_avg = profile.avg_power_table is not None
    for i, b in enumerate(profile.batch_sizes):
        for j, f in enumerate(profile.frequencies):
            cell = [str(b), _fmt(f), _fmt(profile.time_table[i, j]), _fmt(profile.power_table[i, j])]
            if has_avg:
                cell.append(_fmt(profile.avg_power_table[i, j]))
            lines.append(",".join(cell))
    return "\n".join(lines) + "\n"


def load_profile(text: str | Iterable[str]) -> DeviceProfile:
    """Parse the profile file grammar back into a validated DeviceProfile."""
    lines = iter(_numbered_lines(text))
    try:
        n, header = next(lines)
    except StopIteration:
        raise DataError("empty profile file") from None
    model_id, sep, s_text = header.rpartition(",")
    if not sep:
        raise ParseError(n, "expected header model_id,s")
    try:
        s = int(s_text)
    except ValueError:
        raise ParseError(n, f"invalid sample count {s_text!r}") from None

    try:
        n, batch_line = next(lines)
        batch_sizes = tuple(int(tok) for tok in batch_line.split(","))
        n, freq_line = next(lines)
        frequencies = tuple(float(tok) for tok in freq_line.split(","))
    except StopIteration:
        raise DataError("profile file missing axis lines") from None
    except ValueError:
        raise ParseError(n, "invalid axis line") from None

    batch_pos = {b: i for i, b in enumerate(batch_sizes)}
    freq_pos = {f: j for j, f in enumerate(frequencies)}
    shape = (len(batch_sizes), len(frequencies))
    time = np.full(shape, np.nan)
    power = np.full(shape, np.nan)
    avg = np.full(shape, np.nan)
    n_fields: int | None = None
    for n, line in lines:
        fields = line.split(",")
        if len(fields) not in (4, 5):
            raise ParseError(n, f"expected b,f_mhz,t_s_seconds,peak_w[,avg_w], got {line!r}")
        if n_fields is None:
            n_fields = len(fields)
        elif len(fields) != n_fields:
            raise ParseError(n, "mixed avg_w column: all cells must agree")
        try:
            b = int(fields[0])
            f = float(fields[1])
            values = [float(tok) for tok in fields[2:]]
        except ValueError:
            raise ParseError(n, f"invalid cell values in {line!r}") from None
        if b not in batch_pos:
            raise ParseError(n, f"cell batch size {b} not on axis")
        if f not in freq_pos:
            raise ParseError(n, f"cell frequency {f!r} not on axis")
        i, j = batch_pos[b], freq_pos[f]
        if not np.isnan(time[i, j]):
            raise ParseError(n, f"duplicate cell ({b}, {f!r})")
        time[i, j] = values[0]
        power[i, j] = values[1]
        if len(values) == 3:
            avg[i, j] = values[2]

    missing = np.argwhere(np.isnan(time))
    if missing.size:
        i, j = missing[0]
        raise DataError(f"missing cell ({batch_sizes[int(i)]}, {frequencies[int(j)]!r})")
    return DeviceProfile(
        model_id=model_id,
        batch_sizes=batch_sizes,
        frequencies=frequencies,
        time_table=time,
        power_table=power,
        samples_per_unit=s,
        avg_power_table=avg if n_fields == 5 else None,
    )


def _parse_id_and_values(
    text: str | Iterable[str], default_source_id: str
) -> tuple[str, dict[int, float]]:
    source_id = default_source_id
    values: dict[int, float] = {}
    first_data_line = True
    for n, line in _numbered_lines(text):
        fields = line.split(",")
        if first_data_line and fields[0] == "source_id":
            if len(fields) != 2:
                raise ParseError(n, "expected source_id,<name>")
            source_id = fields[1]
            first_data_line = False
            continue
        first_data_line = False
        if len(fields) != 2:
            raise ParseError(n, f"expected batch_size,value, got {line!r}")
        try:
            b = int(fields[0])
            v = float(fields[1])
        except ValueError:
            raise ParseError(n, f"expected batch_size,value, got {line!r}") from None
        if b in values:
            raise ParseError(n, f"duplicate batch size {b}")
        values[b] = v
    return source_id, values


def parse_relation_file(text: str | Iterable[str], default_source_id: str = "") -> RelationVector:
    """Parse ``batch_size,ratio`` lines into a validated RelationVector."""
    source_id, values = _parse_id_and_values(text, default_source_id)
    return RelationVector(values, source_id=source_id)


def parse_counts_file(
    text: str | Iterable[str], default_source_id: str = ""
) -> tuple[dict[int, float], str]:
    """Parse ``batch_size,count`` lines; returns (counts, source_id)."""
    source_id, values = _parse_id_and_values(text, default_source_id)
    if not values:
        raise DataError("no batch sizes")
    for b, v in values.items():
        if not v > 0:
            raise DataError(f"invalid count for batch size {b}: {v!r}")
    return values, source_id


def format_relation_file(r: RelationVector) -> str:
    lines = []
    if r.source_id:
        lines.append(f"source_id,{r.source_id}")
    lines.extend(f"{b},{_fmt(v)}" for b, v in r.entries.items())
    return "\n".join(lines) + "\n"


def format_counts_file(counts: Mapping[int, float], source_id: str = "") -> str:
    lines = []
    if source_id:
        lines.append(f"source_id,{source_id}")
    for b in sorted(counts):
        v = counts[b]
        lines.append(f"{b},{v if isinstance(v, int) else _fmt(v)}")
    return "\n".join(lines) + "\n"
