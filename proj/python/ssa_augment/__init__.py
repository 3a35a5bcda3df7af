"""Structured semantic augmentation: AMR tooling, meta-graph merging,
augmentation and caption metrics."""

from ._core import (
    ConfigError,
    SsaError,
    best5,
    content_iou,
    coverage,
    distinct_ngram_diversity,
    harmonic_mean,
    hungarian,
    length_level,
    length_metrics,
    normalize_penman,
    parse_penman,
    render_report,
    run_pipeline,
    self_cider,
    smatch,
    smatch_brute_force,
    stub_generate,
    word_count,
)

__all__ = [name for name in dir() if not name.startswith("_")]
