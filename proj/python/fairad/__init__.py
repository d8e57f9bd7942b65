"""Fairness-aware anomaly detection for imbalanced two-group tabular data.

Thin wrapper over the compiled extension; see the project README for the
full CLI and library documentation.
"""

from ._fairad import (  # noqa: F401
    AutoencoderModel,
    FairadError,
    anomaly_scores,
    cosine_sim_exp,
    empirical_rademacher,
    empirical_tv,
    epsilon_weight,
    generate_synthetic,
    group_metrics,
    load_model,
    loss_fac,
    loss_simclr,
    make_autoencoder,
    recall_at_k,
    rocauc,
    run_experiment,
    run_theory_audit,
    surrogate_losses,
    train_model,
    tv_bound_check,
)

__all__ = [
    "AutoencoderModel",
    "FairadError",
    "anomaly_scores",
    "cosine_sim_exp",
    "empirical_rademacher",
    "empirical_tv",
    "epsilon_weight",
    "generate_synthetic",
    "group_metrics",
    "load_model",
    "loss_fac",
    "loss_simclr",
    "make_autoencoder",
    "recall_at_k",
    "rocauc",
    "run_experiment",
    "run_theory_audit",
    "surrogate_losses",
    "train_model",
    "tv_bound_check",
]
