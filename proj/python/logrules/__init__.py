# SPDX-License-Identifier: Apache-2.0
"""Rule-based log anomaly detection: rule DSL, synthesis and detection."""

from ._logrules import (
    DatabaseError,
    Detector,
    DetectionResult,
    Metrics,
    Rule,
    RuleDatabase,
    RuleSyntaxError,
    evaluate,
    generate_corpus,
    make_windows,
    metrics_from_counts,
    parse_rule,
    synthesize,
)

__all__ = [
    "DatabaseError",
    "Detector",
    "DetectionResult",
    "Metrics",
    "Rule",
    "RuleDatabase",
    "RuleSyntaxError",
    "evaluate",
    "generate_corpus",
    "make_windows",
    "metrics_from_counts",
    "parse_rule",
    "synthesize",
]
