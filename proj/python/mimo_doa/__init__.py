"""MIMO radar DOA estimation with a neural large-array emulator."""

from ._core import (
    AngleRange,
    ArrayConfig,
    DomainError,
    Experiment,
    ExperimentConfig,
    IoError,
    LossHistory,
    MlpModel,
    SnapshotBlock,
    SweepRow,
    TargetScene,
    TrainingError,
    cov_error,
    crb,
    doa_mse,
    draw_scene,
    load_model,
    music_estimate,
    music_spectrum,
    sample_covariance,
    snr_to_noise_var,
    stack_real_imag,
    steering_derivative,
    steering_matrix,
    synthesize,
    synthesize_pair,
    train,
    unstack_real_imag,
    virtual_steering,
)

__all__ = [name for name in dir() if not name.startswith("_")]
