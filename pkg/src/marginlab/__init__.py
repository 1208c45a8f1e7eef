"""marginlab: guardband-violation exploration against a calibrated
device model.

The package models a two-domain embedded SoC (fabric controller plus an
eight-core compute cluster, 1.0-1.2 V supply in 50 mV steps), calibrates
failure-onset and power laws to its datasheet guardband table, and runs
the campaigns that characterize behavior beyond the guardbands: failure
shmoo sweeps, energy grids with iso-performance savings, and a
closed-loop voltage controller driven by observed error rate.
"""

from .backend import (
    Backend,
    ProbabilityFn,
    RunRequest,
    RunResponse,
    SimulatedBackend,
    derive_run_seed,
    make_request,
    model_probabilities,
    simulated_run,
)
from .calibration import (
    CalibrationTargets,
    achieved_savings,
    calibrate,
    default_params,
    guardband_voltage_for,
    headroom_targets_khz,
)
from .constants import GENERATOR_SPEC_VERSION, TOOL_VERSION
from .controller import (
    Action,
    ControllerConfig,
    ControllerState,
    EpisodeReport,
    Status,
    controller_step,
    episode_seed,
    run_episode,
)
from .energy import (
    DEFAULT_ENERGY_FREQS_KHZ,
    DEFAULT_ENERGY_WORKLOAD,
    EnergyRecord,
    SavingsRow,
    SavingsReport,
    energy_sweep,
    error_free_max_freq,
    iso_performance_savings,
)
from .errors import (
    BackendFailure,
    CalibrationDiverged,
    ConfigError,
    DegenerateVoltage,
    EmptyPlan,
    EmptyWindow,
    IndexOutOfRange,
    InfeasibleTarget,
    InsufficientData,
    InvalidCoreCount,
    InvalidSeed,
    MalformedFrame,
    MarginLabError,
    NoCommonFrequency,
    NoFailuresObserved,
    NoGuardbandBaseline,
    NonMonotonicTimestamps,
    NoRecords,
    UnsupportedVoltage,
)
from .model import (
    DATASHEET_GUARDBANDS,
    SUPPLY_STEPS_MV,
    ClockDomain,
    DeviceModelParams,
    GuardbandTable,
    OnsetFrequencies,
    OperatingPoint,
    OutcomeProbabilities,
    delta_khz,
    energy,
    guardband_max_freq,
    logistic,
    onset_frequencies,
    outcome_probabilities,
    power,
    within_guardband,
)
from .powertrace import PowerSample, PowerTrace, ingest_power_trace, parse_power_trace
from .protocol import (
    ErrResponse,
    FakeDevice,
    LoopbackTransport,
    OkResponse,
    Reset,
    RunCommand,
    SerialHardwareBackend,
    SetFrequency,
    SetVoltage,
    ValueResponse,
    decode_command,
    decode_response,
    encode_command,
    encode_response,
)
from .reports import (
    RecordCsvWriter,
    calibration_report_text,
    config_hash,
    episode_summary_text,
    provenance_line,
    read_energy_csv,
    read_records_csv,
    savings_report_text,
    write_energy_csv,
    write_episode_csv,
    write_records_csv,
    write_savings_csv,
    write_summary_csv,
    write_trace_csv,
)
from .sweep import (
    DEFAULT_SIZES,
    QUANTILE_LEVELS,
    FailureSummary,
    FixedCeiling,
    Outcome,
    StopOnFirstLockup,
    SweepPlan,
    TestRecord,
    VoltageFailureStats,
    enumerate_plan,
    execute_plan,
    size_independence_test,
    summarize,
)
from .workloads import (
    GoldenCache,
    ParallelWorkloadSpec,
    PrngSpec,
    golden_cache,
    golden_value,
    inject_corruption,
    output_of,
    prng_run,
    step_state,
    workload_duration,
)

__version__ = TOOL_VERSION

__all__ = [name for name in dir() if not name.startswith("_")]
