"""Colocated MIMO radar simulation with matrix-completion recovery.

The package synthesizes the fusion-center data matrices of a colocated MIMO
pulse radar, observes them through randomized per-receiver sub-sampling,
recovers the full matrices by nuclear-norm minimization (SVT), and estimates
target angles and speeds from the recovered data with MUSIC.  Seeded
Monte-Carlo presets cover coherence statistics, recovery error, waveform
effects, DOA resolution, and a matched-sample-count comparison of the two
acquisition schemes.
"""

from .estimation import (SpectrumResult, StackedData, estimate_doa_speed,
                         estimate_doas, matched_filter, music2d_spectrum,
                         music_spectrum, reshape_joint,
                         reshape_joint_inverse, resolution_success,
                         sample_covariance, spectrum_to_csv, stack_pulses)
from .experiments import (ExperimentConfig, SweepResult, Table, TrialOutcome,
                          apply_overrides, parse_config_file, preset,
                          preset_names, run_sweep, run_trial, sweep_points,
                          write_tables)
from .matcomp import (CoherenceReport, CompletionResult, SvtParams,
                      coherence_of_subspace, matrix_coherence, noise_radius,
                      recovery_error_bound, relative_error, samples_per_df,
                      shrink_singular_values, svt_complete, theorem1_bound)
from .sampling import (ObservationMask, ObservedMatrix,
                       assemble_fusion_matrix, derive_row_seed, draw_indices,
                       extract_row_samples, make_mask, mask_from_csv,
                       mask_to_csv, observe)
from .signal_model import (DataMatrix, RadarConfig, Scene, Scheme,
                           SPEED_OF_LIGHT, Target, WaveformKind,
                           WaveformMatrix, add_noise, add_noise_sigma,
                           column_power_spectra, column_power_spectrum,
                           doppler_phase, doppler_steering, gen_waveforms,
                           noise_free_mf_matrix, noise_free_raw_matrix,
                           noise_stddev, receive_steering,
                           target_spatial_frequency, transmit_steering,
                           virtual_steering)

__version__ = "0.1.0"

__all__ = [
    "SPEED_OF_LIGHT",
    "CoherenceReport",
    "CompletionResult",
    "DataMatrix",
    "ExperimentConfig",
    "ObservationMask",
    "ObservedMatrix",
    "RadarConfig",
    "Scene",
    "Scheme",
    "SpectrumResult",
    "StackedData",
    "SvtParams",
    "SweepResult",
    "Table",
    "Target",
    "TrialOutcome",
    "WaveformKind",
    "WaveformMatrix",
    "add_noise",
    "add_noise_sigma",
    "apply_overrides",
    "assemble_fusion_matrix",
    "coherence_of_subspace",
    "column_power_spectra",
    "column_power_spectrum",
    "derive_row_seed",
    "doppler_phase",
    "doppler_steering",
    "draw_indices",
    "estimate_doa_speed",
    "estimate_doas",
    "extract_row_samples",
    "gen_waveforms",
    "make_mask",
    "mask_from_csv",
    "mask_to_csv",
    "matched_filter",
    "matrix_coherence",
    "music2d_spectrum",
    "music_spectrum",
    "noise_free_mf_matrix",
    "noise_free_raw_matrix",
    "noise_radius",
    "noise_stddev",
    "observe",
    "parse_config_file",
    "preset",
    "preset_names",
    "receive_steering",
    "recovery_error_bound",
    "relative_error",
    "reshape_joint",
    "reshape_joint_inverse",
    "resolution_success",
    "run_sweep",
    "run_trial",
    "sample_covariance",
    "samples_per_df",
    "shrink_singular_values",
    "spectrum_to_csv",
    "stack_pulses",
    "svt_complete",
    "sweep_points",
    "target_spatial_frequency",
    "theorem1_bound",
    "transmit_steering",
    "virtual_steering",
    "write_tables",
]
