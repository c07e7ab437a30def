"""Loser/winner/contrarian portfolio backtests on monthly return panels."""

from .panel import (
    PanelError,
    PanelFilterConfig,
    ReturnPanel,
    eligible_stocks,
    format_month,
    load_panel,
    parse_month,
    slice_period,
    write_panel,
)
from .returns import (
    CohortResult,
    StrategyRun,
    annualize,
    cohort_result,
    cumulative,
    run_many,
    run_strategy,
    sweep,
)
from .stats import (
    DegenerateInference,
    DiffResult,
    StrategySummary,
    diff_test,
    nw_tstat,
    nw_variance,
    summarize,
)
from .strategy import (
    Cohort,
    StrategySpec,
    estimation_return,
    form_cohort,
    holding_leg_returns,
    rank_and_group,
)
from .synth import SynthConfig, generate, inject_missing

__version__ = "0.1.0"
