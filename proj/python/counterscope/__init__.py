"""Python bindings for the counterscope GPU-counter toolkit.

Traces are dicts {"metrics": [...], "t0": int, "values": [[row], ...]};
scenes, specs, catalogs, profiles and reports are plain JSON-like dicts.
"""

from ._core import (
    CounterscopeError,
    app_corpus_spec,
    builtin_catalog,
    count_participants,
    countermeasure_curve,
    cross_validate,
    default_profile,
    detect_access,
    detect_steps,
    evaluate,
    generate_corpus,
    inject_noise,
    linreg,
    lopo,
    pearson,
    pixel_sweep_scene,
    prune,
    read_trace,
    screen,
    simulate,
    staircase_scene,
    train,
    write_trace,
)

__all__ = [
    "CounterscopeError",
    "app_corpus_spec",
    "builtin_catalog",
    "count_participants",
    "countermeasure_curve",
    "cross_validate",
    "default_profile",
    "detect_access",
    "detect_steps",
    "evaluate",
    "generate_corpus",
    "inject_noise",
    "linreg",
    "lopo",
    "pearson",
    "pixel_sweep_scene",
    "prune",
    "read_trace",
    "screen",
    "simulate",
    "staircase_scene",
    "train",
    "write_trace",
]


def column(trace, metric):
    """One metric's samples from a trace dict."""
    j = trace["metrics"].index(metric)
    return [row[j] for row in trace["values"]]
