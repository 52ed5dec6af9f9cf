"""Streaming KV-cache compression with tripartite budgets.

The heavy lifting lives in the compiled ``_zeromerge`` extension; this
package re-exports its public surface.
"""

from ._zeromerge import (  # noqa: F401
    AttentionResult,
    Budgets,
    CacheEntry,
    CachePolicy,
    ErrorStats,
    MetricsReport,
    PolicyKind,
    PolicyTag,
    PreservationStats,
    ReportSummary,
    RunConfig,
    StepDetail,
    StepMetrics,
    StepRecord,
    Trace,
    TraceKind,
    ZeroMergeCache,
    __version__,
    attention_error,
    closed_form_score,
    compensated_attention,
    full_attention,
    gen_gaussian,
    gen_heavy_hitter,
    make_budgets,
    make_policy,
    preservation_slack,
    read_trace,
    run_policy,
    run_preservation_campaign,
    stable_softmax,
    verify_weight_preservation,
    write_compare_csv,
    write_report_csv,
    write_trace,
)
