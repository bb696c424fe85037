# SPDX-License-Identifier: Apache-2.0
"""Channel emulation, IQ capture datasets and ensemble statistics."""

from ._core import (
    IntegrityError,
    IoError,
    ValidationError,
    __version__,
    apply_channel,
    default_spec,
    ensemble_report,
    estimate_impulse_response,
    generate_reference,
    ks_two_sample,
    load_tdl_preset,
    read_iq,
    reconstruct_taps,
    run_experiment,
    temporal_autocorrelation,
    train_eval_classifier,
    validate_spec,
    verify_dataset,
    wasserstein_1d,
)

__all__ = [
    "IntegrityError",
    "IoError",
    "ValidationError",
    "__version__",
    "apply_channel",
    "default_spec",
    "ensemble_report",
    "estimate_impulse_response",
    "generate_reference",
    "ks_two_sample",
    "load_tdl_preset",
    "read_iq",
    "reconstruct_taps",
    "run_experiment",
    "temporal_autocorrelation",
    "train_eval_classifier",
    "validate_spec",
    "verify_dataset",
    "wasserstein_1d",
]
