"""powerplan: joint batch-size / GPU-frequency planning under a power cap.

Given measured device profiles (time and peak power per grid point) and
per-batch-size convergence ratios, pick the operating point that minimizes
time-to-accuracy while keeping peak power strictly below the device cap.
"""

from .baselines import (
    SafeFrequencyTable,
    baseline1_select,
    baseline2_select,
    compute_safe_table,
    energy_estimate,
    fastest_configuration,
    format_safe_table,
    parse_safe_table,
)
from .core import (
    DataError,
    DeviceProfile,
    FeasibleSet,
    InfeasibleError,
    PowerCap,
    RelationVector,
    SelectionResult,
    estimate_tt_acc,
    feasible_combinations,
    relation_vector,
    select_configuration,
    select_configuration_fast,
)
from .ingest import (
    AggregatedPoint,
    ParseError,
    PowerTrace,
    ProfilingSchedule,
    TimingTrace,
    aggregate_point,
    discovered_feasible,
    format_counts_file,
    format_relation_file,
    load_profile,
    parse_counts_file,
    parse_power_log,
    parse_relation_file,
    parse_timing_log,
    profiling_schedule,
    save_profile,
)
from .report import (
    ComparisonReport,
    ComparisonRow,
    SensitivityMatrix,
    SweepRow,
    build_comparison,
    build_sensitivity,
    build_sweep,
    cap_range,
)
from .synth import (
    SynthConvergenceParams,
    SynthDeviceParams,
    convergence_count,
    format_device_params,
    generate_profile,
    parse_device_params,
    synth_avg_power,
    synth_counts,
    synth_power,
    synth_time,
)

__all__ = [
    "AggregatedPoint",
    "ComparisonReport",
    "ComparisonRow",
    "DataError",
    "DeviceProfile",
    "FeasibleSet",
    "InfeasibleError",
    "ParseError",
    "PowerCap",
    "PowerTrace",
    "ProfilingSchedule",
    "RelationVector",
    "SafeFrequencyTable",
    "SelectionResult",
    "SensitivityMatrix",
    "SweepRow",
    "SynthConvergenceParams",
    "SynthDeviceParams",
    "TimingTrace",
    "aggregate_point",
    "baseline1_select",
    "baseline2_select",
    "build_comparison",
    "build_sensitivity",
    "build_sweep",
    "cap_range",
    "compute_safe_table",
    "convergence_count",
    "discovered_feasible",
    "energy_estimate",
    "estimate_tt_acc",
    "fastest_configuration",
    "feasible_combinations",
    "format_counts_file",
    "format_device_params",
    "format_relation_file",
    "format_safe_table",
    "generate_profile",
    "load_profile",
    "parse_counts_file",
    "parse_device_params",
    "parse_power_log",
    "parse_relation_file",
    "parse_safe_table",
    "parse_timing_log",
    "profiling_schedule",
    "relation_vector",
    "save_profile",
    "select_configuration",
    "select_configuration_fast",
    "synth_avg_power",
    "synth_counts",
    "synth_power",
    "synth_time",
]

__version__ = "0.1.0"
