from .errors import (
    AjdnError,
    ConfigurationError,
    DegenerateDataError,
    IngestionError,
    exit_code_for,
)
from .validation import Check, ValidationReport
from .panel import TimeSeriesPanel, ingest_csv
from .filter import (
    FilterBank,
    JumpPassFilter,
    compute_H,
    eval_filter,
    validate_filter,
)
from .scales import ScaleGrid, build_scale_grid, check_scale_assumptions, delta_n_default
from .variance import LocalVarianceField, local_variance, local_variance_field
from .mask import AdmissibleMask
from .bootstrap import (
    BootstrapState,
    UpsilonPanel,
    bootstrap_statistic,
    build_upsilon,
    conditional_variance,
    critical_value,
    draw_multipliers,
    run_bootstrap,
)
from .detector import (
    DetectionParams,
    JumpRecord,
    StatisticField,
    detect_jumps,
    statistic_field,
)
from .refine import CusumWindow, refine_jump, refine_records
from .tuning import (
    HyperParams,
    RuleOfThumb,
    candidate_grid,
    lrv_ratio,
    penalized_bic,
    pilot_segment,
    rule_of_thumb,
    select_s_prime,
)
from .simulate import (
    DgpSpec,
    Process,
    Scenario,
    TrueJump,
    apply_scenario,
    generate_errors,
    generate_trend,
    simulate,
)
from .evaluate import EvaluationResult, aggregate, match_and_score
from .config import AjdnConfig, RunConfig, load_config
from .pipeline import DetectionResult, Pipeline
from .output import emit_results
from .version import __version__

__all__ = [
    "AdmissibleMask",
    "AjdnConfig",
    "AjdnError",
    "BootstrapState",
    "Check",
    "ConfigurationError",
    "CusumWindow",
    "DegenerateDataError",
    "DetectionParams",
    "DetectionResult",
    "DgpSpec",
    "EvaluationResult",
    "FilterBank",
    "HyperParams",
    "IngestionError",
    "JumpPassFilter",
    "JumpRecord",
    "LocalVarianceField",
    "Pipeline",
    "Process",
    "RuleOfThumb",
    "RunConfig",
    "ScaleGrid",
    "Scenario",
    "StatisticField",
    "TimeSeriesPanel",
    "TrueJump",
    "UpsilonPanel",
    "ValidationReport",
    "aggregate",
    "apply_scenario",
    "bootstrap_statistic",
    "build_scale_grid",
    "build_upsilon",
    "candidate_grid",
    "check_scale_assumptions",
    "compute_H",
    "conditional_variance",
    "critical_value",
    "delta_n_default",
    "detect_jumps",
    "draw_multipliers",
    "emit_results",
    "eval_filter",
    "exit_code_for",
    "generate_errors",
    "generate_trend",
    "ingest_csv",
    "load_config",
    "local_variance",
    "local_variance_field",
    "lrv_ratio",
    "match_and_score",
    "penalized_bic",
    "pilot_segment",
    "refine_jump",
    "refine_records",
    "rule_of_thumb",
    "run_bootstrap",
    "select_s_prime",
    "simulate",
    "statistic_field",
    "validate_filter",
    "__version__",
]
