"""Truss modal model, strain gauge and camera fusion, sensor placement."""

from ._core import (
    AssembledModel,
    InvalidArgument,
    ModalBasis,
    StiffnessParams,
    chirp_peak_displacement,
    expm,
    highpass_coefficients,
    kanai_tajimi,
    load_model,
    modal_damping,
    mode_kind,
    placement,
    run_experiment,
    scale_model,
    solve_discrete_lyapunov,
    solve_modes,
    solve_modes_mk,
    tune_twin,
    tuned_stiffness,
)

__all__ = [
    "AssembledModel",
    "InvalidArgument",
    "ModalBasis",
    "StiffnessParams",
    "chirp_peak_displacement",
    "expm",
    "highpass_coefficients",
    "kanai_tajimi",
    "load_model",
    "modal_damping",
    "mode_kind",
    "placement",
    "run_experiment",
    "scale_model",
    "solve_discrete_lyapunov",
    "solve_modes",
    "solve_modes_mk",
    "tune_twin",
    "tuned_stiffness",
]
