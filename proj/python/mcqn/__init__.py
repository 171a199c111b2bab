"""Multiclass queueing networks under static preemptive priority."""

from ._mcqn import (
    InputError,
    NetworkSpec,
    SingularSystemError,
    __version__,
    builtin_network,
    classify,
    figure3_grid,
    fluid_solve,
    load_network,
    lyapunov_audit,
    modified_krss_family,
    modified_lk_family,
    parse_network_json,
    simulate,
    spearman,
    stability_probe,
    sweep,
    traffic_solve,
    validate,
)

__all__ = [
    "InputError",
    "NetworkSpec",
    "SingularSystemError",
    "__version__",
    "builtin_network",
    "classify",
    "figure3_grid",
    "fluid_solve",
    "load_network",
    "lyapunov_audit",
    "modified_krss_family",
    "modified_lk_family",
    "parse_network_json",
    "simulate",
    "spearman",
    "stability_probe",
    "sweep",
    "traffic_solve",
    "validate",
]
