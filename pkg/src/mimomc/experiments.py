"""Seeded Monte-Carlo experiment harness with CSV output.

Each preset pins one figure-class experiment: coherence statistics of the
fusion-center matrices, recovery error versus samples per degree of freedom,
waveform spectral comparisons, DOA resolution probability, and the
matched-sample-count comparison of the two acquisition schemes.  Sweeps are
deterministic per (config, master_seed), trials are independent work units,
and every emitted row carries its provenance.
"""

from __future__ import annotations

import csv
import math
import multiprocessing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import estimation, matcomp, sampling, signal_model
from .matcomp import CoherenceReport, SvtParams
from .sampling import derive_row_seed
from .signal_model import (RadarConfig, Scene, Scheme, Target, WaveformKind,
                           SPEED_OF_LIGHT)

KINDS = ("coherence", "recovery", "wave_spectrum", "doa", "scheme_compare")


@dataclass
class ExperimentConfig:
    """Flat, overridable description of one experiment sweep.

    Unused fields are ignored by kinds that do not sweep them; the sweep
    axes are the list-valued fields.  ``occupancy`` fixes the observed
    fraction directly, while ``m_per_df_list`` sweeps it through the
    samples-per-degree-of-freedom ratio.
    """

    preset: str
    kind: str
    scheme: str = "scheme1"              # scheme1 | scheme2 | both
    mt: int = 20
    mr: int = 20
    n_nyquist: int = 256
    pulses_q: int = 2
    carrier_freq: float = 1e9
    t_pri: float = 1e-4
    t_sample: float = 1e-7
    transmit_spacing: str = "half_wave"  # half_wave | virtual_ula (dt = mr lambda/2)
    waveforms: tuple[str, ...] = ()
    delta_theta_list: tuple[float, ...] = (5.0,)
    theta1_fixed: float | None = None
    target_sets: tuple[tuple[float, ...], ...] | None = None
    speed_range: tuple[float, float] = (0.0, 500.0)
    fixed_speeds: tuple[float, ...] | None = None
    snr_db_list: tuple[float, ...] = (math.inf,)
    occupancy: float | None = None
    m_per_df_list: tuple[float, ...] | None = None
    size_list: tuple[int, ...] | None = None
    n_list: tuple[int, ...] | None = None
    mu0_grid: tuple[float, float, float] | None = None
    coherence_rank: int = 2
    n_trials: int = 100
    master_seed: int = 12345
    use_2d: bool = False
    music_coarse_step: float = 0.1
    music_fine_step: float = 0.005
    description: str = ""


@dataclass
class TrialOutcome:
    """Everything one Monte-Carlo trial reports back."""

    trial: int
    failed: bool = False
    error: str = ""
    phi: float = math.nan
    iterations: int = 0
    converged: bool = True
    coherence: CoherenceReport | None = None
    resolved: bool | None = None
    resolved_full: bool | None = None
    doa_estimates: tuple[float, ...] = ()
    doa_estimates_full: tuple[float, ...] = ()
    joint_estimates: tuple[tuple[float, float], ...] = ()


@dataclass
class Table:
    """Named rectangular result block, ready for CSV."""

    name: str
    columns: list[str]
    rows: list[list]

    def to_dicts(self) -> list[dict]:
        return [dict(zip(self.columns, row)) for row in self.rows]


@dataclass
class SweepResult:
    config: ExperimentConfig
    points: list[dict]
    tables: dict[str, Table]


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.kind not in KINDS:
        raise ValueError(f"unknown experiment kind: {cfg.kind!r}")
    if cfg.scheme not in ("scheme1", "scheme2", "both"):
        raise ValueError(f"unknown scheme: {cfg.scheme!r}")
    if cfg.n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    if cfg.occupancy is not None and not 0.0 < cfg.occupancy <= 1.0:
        raise ValueError("occupancy must lie in (0, 1]")
    if cfg.transmit_spacing not in ("half_wave", "virtual_ula"):
        raise ValueError(f"unknown transmit_spacing: {cfg.transmit_spacing!r}")
    for w in cfg.waveforms:
        WaveformKind(w)


# --------------------------------------------------------------------------
# presets

def _preset_coh_s1() -> ExperimentConfig:
    return ExperimentConfig(
        preset="coh-s1", kind="coherence", scheme="scheme1",
        size_list=(10, 20, 40), delta_theta_list=(5.0,),
        speed_range=(0.0, 500.0), transmit_spacing="half_wave",
        mu0_grid=(1.0, 3.0, 0.05), n_trials=500,
        description="Coherence statistics of the matched-filter matrix "
                    "versus array size (two targets 5 deg apart)")


def _preset_coh_s2() -> ExperimentConfig:
    return ExperimentConfig(
        preset="coh-s2", kind="coherence", scheme="scheme2",
        mt=20, mr=20, n_list=(128, 256), waveforms=("gorth",),
        delta_theta_list=(5.0,), speed_range=(150.0, 450.0),
        transmit_spacing="half_wave", mu0_grid=(1.0, 12.0, 0.1),
        n_trials=500,
        description="Coherence statistics of the raw-sample matrix versus "
                    "samples per pulse (G-Orth waveforms)")


def _preset_recov_s1() -> ExperimentConfig:
    return ExperimentConfig(
        preset="recov-s1", kind="recovery", scheme="scheme1",
        mt=40, mr=40, delta_theta_list=(0.0, 1.0, 5.0, 10.0),
        m_per_df_list=(1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5),
        snr_db_list=(25.0,), speed_range=(0.0, 500.0),
        transmit_spacing="virtual_ula", n_trials=100,
        description="Recovery error of the matched-filter matrix versus "
                    "samples per degree of freedom and DOA separation")


def _preset_recov_s2() -> ExperimentConfig:
    return ExperimentConfig(
        preset="recov-s2", kind="recovery", scheme="scheme2",
        mt=40, mr=40, n_nyquist=256, waveforms=("hadamard", "gorth"),
        delta_theta_list=(0.0, 1.0, 5.0),
        m_per_df_list=(1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5),
        snr_db_list=(25.0,), speed_range=(0.0, 500.0),
        transmit_spacing="virtual_ula", n_trials=100,
        description="Recovery error of the raw-sample matrix for Hadamard "
                    "versus G-Orth waveforms")


def _preset_wave_spectrum() -> ExperimentConfig:
    return ExperimentConfig(
        preset="wave-spectrum", kind="wave_spectrum", scheme="scheme2",
        mt=10, n_nyquist=32, waveforms=("hadamard", "gorth"),
        transmit_spacing="half_wave", n_trials=1,
        description="Maximal per-column spatial power spectrum of the two "
                    "waveform families")


def _preset_wave_recov() -> ExperimentConfig:
    return ExperimentConfig(
        preset="wave-recov", kind="recovery", scheme="scheme2",
        mt=10, mr=128, n_nyquist=32, waveforms=("hadamard", "gorth"),
        target_sets=((20.0, 40.0), (0.0, 80.0)),
        m_per_df_list=(1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0),
        snr_db_list=(25.0,), speed_range=(150.0, 450.0),
        transmit_spacing="half_wave", n_trials=50,
        description="Waveform effect on recovery for target pairs that hit "
                    "or avoid the Hadamard spectral peaks")


def _preset_doa_s1() -> ExperimentConfig:
    return ExperimentConfig(
        preset="doa-s1", kind="doa", scheme="scheme1",
        mt=20, mr=20, pulses_q=5, occupancy=0.5,
        delta_theta_list=(0.05, 0.08, 0.1, 0.12, 0.15, 0.18, 0.2, 0.22,
                          0.25, 0.3),
        theta1_fixed=10.0, fixed_speeds=(150.0, 400.0),
        snr_db_list=(10.0, 25.0), transmit_spacing="virtual_ula",
        n_trials=200,
        description="DOA resolution probability under the matched-filter "
                    "scheme, completed versus full data")


def _preset_doa_s2() -> ExperimentConfig:
    return ExperimentConfig(
        preset="doa-s2", kind="doa", scheme="scheme2",
        mt=20, mr=20, n_nyquist=256, pulses_q=5, occupancy=0.5,
        waveforms=("gorth", "hadamard"),
        delta_theta_list=(0.05, 0.08, 0.1, 0.12, 0.15, 0.18, 0.2, 0.22,
                          0.25, 0.3),
        theta1_fixed=10.0, fixed_speeds=(150.0, 400.0),
        snr_db_list=(10.0, 25.0), transmit_spacing="virtual_ula",
        n_trials=200,
        description="DOA resolution probability under the sub-Nyquist "
                    "scheme for both waveform families")


def _preset_scheme_compare() -> ExperimentConfig:
    return ExperimentConfig(
        preset="scheme-compare", kind="scheme_compare", scheme="both",
        mr=40, size_list=(4, 8, 16, 32, 64), waveforms=("gorth",),
        delta_theta_list=(5.0, 30.0), occupancy=0.5, snr_db_list=(25.0,),
        speed_range=(0.0, 500.0), transmit_spacing="virtual_ula",
        n_trials=100,
        description="Recovery error of the two schemes at matched sample "
                    "counts (mt = n sweep)")


PRESETS: dict[str, Callable[[], ExperimentConfig]] = {
    "coh-s1": _preset_coh_s1,
    "coh-s2": _preset_coh_s2,
    "recov-s1": _preset_recov_s1,
    "recov-s2": _preset_recov_s2,
    "wave-spectrum": _preset_wave_spectrum,
    "wave-recov": _preset_wave_recov,
    "doa-s1": _preset_doa_s1,
    "doa-s2": _preset_doa_s2,
    "scheme-compare": _preset_scheme_compare,
}


def preset_names() -> list[str]:
    return list(PRESETS)


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    return PRESETS[name]()


# --------------------------------------------------------------------------
# config file and overrides

def _parse_floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip() != "")


def _parse_ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(",") if x.strip() != "")


def _parse_strs(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip() != "")


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_pair(s: str) -> tuple[float, float]:
    vals = _parse_floats(s)
    if len(vals) != 2:
        raise ValueError("expected two comma-separated numbers")
    return vals


def _parse_triple(s: str) -> tuple[float, float, float]:
    vals = _parse_floats(s)
    if len(vals) != 3:
        raise ValueError("expected three comma-separated numbers")
    return vals


def _parse_target_sets(s: str) -> tuple[tuple[float, ...], ...]:
    # "20:40;0:80" -> ((20.0, 40.0), (0.0, 80.0))
    sets = []
    for part in s.split(";"):
        if part.strip() == "":
            continue
        sets.append(tuple(float(x) for x in part.split(":")))
    return tuple(sets)


_OVERRIDE_PARSERS: dict[str, Callable[[str], object]] = {
    "scheme": str,
    "mt": int,
    "mr": int,
    "n_nyquist": int,
    "pulses_q": int,
    "carrier_freq": float,
    "t_pri": float,
    "t_sample": float,
    "transmit_spacing": str,
    "waveforms": _parse_strs,
    "delta_theta_list": _parse_floats,
    "theta1_fixed": float,
    "target_sets": _parse_target_sets,
    "speed_range": _parse_pair,
    "fixed_speeds": _parse_floats,
    "snr_db_list": _parse_floats,
    "occupancy": float,
    "m_per_df_list": _parse_floats,
    "size_list": _parse_ints,
    "n_list": _parse_ints,
    "mu0_grid": _parse_triple,
    "coherence_rank": int,
    "n_trials": int,
    "master_seed": int,
    "use_2d": _parse_bool,
    "music_coarse_step": float,
    "music_fine_step": float,
}


def apply_overrides(cfg: ExperimentConfig,
                    overrides: dict[str, str]) -> ExperimentConfig:
    """Apply key=value overrides (string-typed) to a config copy."""
    out = replace(cfg)
    for key, raw in overrides.items():
        if key not in _OVERRIDE_PARSERS:
            raise ValueError(
                f"unknown config key {key!r}; known: "
                + ", ".join(sorted(_OVERRIDE_PARSERS)))
        try:
            setattr(out, key, _OVERRIDE_PARSERS[key](raw))
        except ValueError as exc:
            raise ValueError(f"bad value for {key}: {exc}") from exc
    return out


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read a flat key = value file; '#' starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8")
                                  .splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = stripped.split("=", 1)
        out[key.strip()] = value.strip()
    return out


# --------------------------------------------------------------------------
# sweep construction

def sweep_points(cfg: ExperimentConfig) -> list[dict]:
    """Expand the config's sweep axes into a flat list of point dicts."""
    validate_config(cfg)
    if cfg.kind == "coherence":
        if cfg.scheme == "scheme1":
            sizes = cfg.size_list or (cfg.mt,)
            return [{"mt": s, "mr": s, "n": "", "waveform": "",
                     "delta_theta": d}
                    for d in cfg.delta_theta_list for s in sizes]
        ns = cfg.n_list or (cfg.n_nyquist,)
        waves = cfg.waveforms or ("gorth",)
        return [{"mt": cfg.mt, "mr": cfg.mr, "n": n, "waveform": w,
                 "delta_theta": d}
                for d in cfg.delta_theta_list for w in waves for n in ns]
    if cfg.kind == "recovery":
        n_cols = cfg.mt if cfg.scheme == "scheme1" else cfg.n_nyquist
        waves = cfg.waveforms if cfg.scheme == "scheme2" else ("",)
        if cfg.target_sets is not None:
            scenes = [{"targets": ts, "delta_theta": ""}
                      for ts in cfg.target_sets]
        else:
            scenes = [{"targets": None, "delta_theta": d}
                      for d in cfg.delta_theta_list]
        points = []
        for snr in cfg.snr_db_list:
            for sc in scenes:
                for w in waves:
                    for ratio in (cfg.m_per_df_list or (0.0,)):
                        count = _count_for_ratio(ratio, cfg.mr, n_cols)
                        points.append({
                            "waveform": w, "targets": sc["targets"],
                            "delta_theta": sc["delta_theta"],
                            "snr_db": snr, "m_per_df": ratio,
                            "count_per_row": count,
                            "m_per_df_actual": _ratio_for_count(
                                count, cfg.mr, n_cols),
                        })
        return points
    if cfg.kind == "doa":
        waves = cfg.waveforms if cfg.scheme == "scheme2" else ("",)
        return [{"waveform": w, "snr_db": snr, "delta_theta": d}
                for w in waves for snr in cfg.snr_db_list
                for d in cfg.delta_theta_list]
    if cfg.kind == "scheme_compare":
        sizes = cfg.size_list or (cfg.mt,)
        return [{"scheme": sch, "size": s, "delta_theta": d}
                for d in cfg.delta_theta_list for s in sizes
                for sch in ("scheme1", "scheme2")]
    return []  # wave_spectrum has no Monte-Carlo points


def _count_for_ratio(ratio: float, n_rows: int, n_cols: int,
                     rank: int = 2) -> int:
    df = rank * (n_rows + n_cols - rank)
    count = int(round(ratio * df / n_rows))
    return min(max(count, 1), n_cols)


def _ratio_for_count(count: int, n_rows: int, n_cols: int,
                     rank: int = 2) -> float:
    return count * n_rows / (rank * (n_rows + n_cols - rank))


def _radar_for(cfg: ExperimentConfig, mt: int, mr: int,
               n: int) -> RadarConfig:
    wavelength = SPEED_OF_LIGHT / cfg.carrier_freq
    dt = mr * wavelength / 2.0 if cfg.transmit_spacing == "virtual_ula" \
        else wavelength / 2.0
    return RadarConfig.build(mt, mr, carrier_freq=cfg.carrier_freq, dt=dt,
                             dr=wavelength / 2.0, pulses_q=cfg.pulses_q,
                             t_pri=cfg.t_pri, t_sample=cfg.t_sample,
                             n_nyquist=n)


def _sample_scene(cfg: ExperimentConfig, delta_theta: float | str,
                  targets_fixed: Sequence[float] | None,
                  scene_seed: int) -> Scene:
    rng = np.random.default_rng(scene_seed)
    if targets_fixed is not None:
        doas = [float(t) for t in targets_fixed]
    else:
        d = float(delta_theta)
        if cfg.theta1_fixed is not None:
            theta1 = cfg.theta1_fixed
        else:
            # Keep the shifted target inside the angle domain.
            theta1 = rng.uniform(-90.0, 90.0 - d)
        doas = [theta1, theta1 + d]
    if cfg.fixed_speeds is not None:
        speeds = [float(s) for s in cfg.fixed_speeds]
    else:
        speeds = rng.uniform(cfg.speed_range[0], cfg.speed_range[1],
                             size=len(doas)).tolist()
    betas = (rng.standard_normal(len(doas))
             + 1j * rng.standard_normal(len(doas))) / math.sqrt(2.0)
    return Scene([Target(doa, spd, beta)
                  for doa, spd, beta in zip(doas, speeds, betas)])


# Pulse index used when an experiment looks at one matrix only; taken past
# the first pulse so the Doppler factors are active.
_SINGLE_PULSE = 2


def _trial_seeds(cfg: ExperimentConfig, trial_index: int,
                 point_index: int) -> tuple[int, int, int, int]:
    trial_seed = derive_row_seed(cfg.master_seed, trial_index, 0)
    scene_seed = derive_row_seed(trial_seed, 0, 0)
    point_seed = derive_row_seed(trial_seed, 1 + point_index, 0)
    return (scene_seed,
            derive_row_seed(point_seed, 0, 1),   # waveform
            derive_row_seed(point_seed, 0, 2),   # noise
            derive_row_seed(point_seed, 0, 3))   # masks


def _complete_one(noisy: signal_model.DataMatrix, clean: np.ndarray,
                  mask_seed: int, count: int, scheme: Scheme, sigma: float,
                  pulse_index: int) -> tuple[np.ndarray, float, int, bool]:
    mask = sampling.make_mask(mask_seed, noisy.values.shape[0],
                              noisy.values.shape[1], count, scheme,
                              pulse_index=pulse_index)
    radius = matcomp.noise_radius(mask.num_observed, sigma) if sigma > 0 \
        else None
    result = matcomp.svt_complete(sampling.observe(noisy, mask),
                                  SvtParams(noise_radius=radius))
    phi = matcomp.relative_error(result.recovered, clean)
    return result.recovered, phi, result.iterations, result.converged


def _trial_coherence(cfg: ExperimentConfig, point: dict, point_index: int,
                     trial_index: int) -> TrialOutcome:
    scene_seed, wave_seed, _, _ = _trial_seeds(cfg, trial_index, point_index)
    scene = _sample_scene(cfg, point["delta_theta"], None, scene_seed)
    radar = _radar_for(cfg, point["mt"], point["mr"],
                       point["n"] or cfg.n_nyquist)
    if cfg.scheme == "scheme1":
        z = signal_model.noise_free_mf_matrix(scene, radar, _SINGLE_PULSE)
    else:
        wave = signal_model.gen_waveforms(WaveformKind(point["waveform"]),
                                          radar.mt, point["n"],
                                          rng_seed=wave_seed)
        z = signal_model.noise_free_raw_matrix(scene, radar, wave,
                                               _SINGLE_PULSE)
    report = matcomp.matrix_coherence(z.values, rank=cfg.coherence_rank)
    return TrialOutcome(trial=trial_index, coherence=report)


def _trial_recovery(cfg: ExperimentConfig, point: dict, point_index: int,
                    trial_index: int) -> TrialOutcome:
    scene_seed, wave_seed, noise_seed, mask_seed = _trial_seeds(
        cfg, trial_index, point_index)
    scene = _sample_scene(cfg, point["delta_theta"], point["targets"],
                          scene_seed)
    radar = _radar_for(cfg, cfg.mt, cfg.mr, cfg.n_nyquist)
    if cfg.scheme == "scheme1":
        z = signal_model.noise_free_mf_matrix(scene, radar, _SINGLE_PULSE)
        scheme = Scheme.MATCHED_FILTER
    else:
        wave = signal_model.gen_waveforms(WaveformKind(point["waveform"]),
                                          radar.mt, radar.n_nyquist,
                                          rng_seed=wave_seed)
        z = signal_model.noise_free_raw_matrix(scene, radar, wave,
                                               _SINGLE_PULSE)
        scheme = Scheme.SUB_NYQUIST
    sigma = signal_model.noise_stddev(z.values, point["snr_db"])
    noisy = signal_model.add_noise_sigma(z, sigma, noise_seed)
    _, phi, iters, conv = _complete_one(noisy, z.values, mask_seed,
                                        point["count_per_row"], scheme,
                                        sigma, _SINGLE_PULSE)
    report = matcomp.matrix_coherence(z.values, rank=cfg.coherence_rank)
    return TrialOutcome(trial=trial_index, phi=phi, iterations=iters,
                        converged=conv, coherence=report)


def _trial_scheme_compare(cfg: ExperimentConfig, point: dict,
                          point_index: int, trial_index: int) -> TrialOutcome:
    scene_seed, wave_seed, noise_seed, mask_seed = _trial_seeds(
        cfg, trial_index, point_index)
    scene = _sample_scene(cfg, point["delta_theta"], None, scene_seed)
    size = point["size"]
    radar = _radar_for(cfg, size, cfg.mr, size)
    if point["scheme"] == "scheme1":
        z = signal_model.noise_free_mf_matrix(scene, radar, _SINGLE_PULSE)
        scheme = Scheme.MATCHED_FILTER
    else:
        wave_kind = WaveformKind(cfg.waveforms[0]) if cfg.waveforms \
            else WaveformKind.GAUSSIAN_ORTHOGONAL
        wave = signal_model.gen_waveforms(wave_kind, size, size,
                                          rng_seed=wave_seed)
        z = signal_model.noise_free_raw_matrix(scene, radar, wave,
                                               _SINGLE_PULSE)
        scheme = Scheme.SUB_NYQUIST
    snr = cfg.snr_db_list[0]
    sigma = signal_model.noise_stddev(z.values, snr)
    noisy = signal_model.add_noise_sigma(z, sigma, noise_seed)
    count = min(max(int(round((cfg.occupancy or 1.0) * size)), 1), size)
    _, phi, iters, conv = _complete_one(noisy, z.values, mask_seed, count,
                                        scheme, sigma, _SINGLE_PULSE)
    return TrialOutcome(trial=trial_index, phi=phi, iterations=iters,
                        converged=conv)


def _trial_doa(cfg: ExperimentConfig, point: dict, point_index: int,
               trial_index: int) -> TrialOutcome:
    scene_seed, wave_seed, noise_seed, mask_seed = _trial_seeds(
        cfg, trial_index, point_index)
    delta = float(point["delta_theta"])
    scene = _sample_scene(cfg, delta, None, scene_seed)
    radar = _radar_for(cfg, cfg.mt, cfg.mr, cfg.n_nyquist)
    scheme2 = cfg.scheme == "scheme2"
    wave = None
    if scheme2:
        wave = signal_model.gen_waveforms(WaveformKind(point["waveform"]),
                                          radar.mt, radar.n_nyquist,
                                          rng_seed=wave_seed)
    clean = []
    for q in range(1, cfg.pulses_q + 1):
        if scheme2:
            clean.append(signal_model.noise_free_raw_matrix(scene, radar,
                                                            wave, q))
        else:
            clean.append(signal_model.noise_free_mf_matrix(scene, radar, q))
    sigma = signal_model.noise_stddev([z.values for z in clean],
                                      point["snr_db"])
    noisy = [signal_model.add_noise_sigma(z, sigma,
                                          derive_row_seed(noise_seed, q, 0))
             for q, z in zip(range(1, cfg.pulses_q + 1), clean)]

    n_cols = radar.n_nyquist if scheme2 else radar.mt
    count = min(max(int(round((cfg.occupancy or 1.0) * n_cols)), 1), n_cols)
    scheme = Scheme.SUB_NYQUIST if scheme2 else Scheme.MATCHED_FILTER
    recovered = []
    iters = 0
    conv = True
    phis = []
    for q, zn, zc in zip(range(1, cfg.pulses_q + 1), noisy, clean):
        rec, phi, it, cv = _complete_one(zn, zc.values, mask_seed, count,
                                         scheme, sigma, q)
        recovered.append(rec)
        phis.append(phi)
        iters += it
        conv = conv and cv

    if scheme2:
        stacks_rec = [estimation.matched_filter(r, wave) for r in recovered]
        stacks_full = [estimation.matched_filter(z.values, wave)
                       for z in noisy]
    else:
        stacks_rec = recovered
        stacks_full = [z.values for z in noisy]
    y_rec = estimation.stack_pulses(stacks_rec, radar)
    y_full = estimation.stack_pulses(stacks_full, radar)
    kwargs = dict(coarse_step=cfg.music_coarse_step,
                  fine_step=cfg.music_fine_step)
    est = estimation.estimate_doas(y_rec, scene.k, radar, **kwargs)
    est_full = estimation.estimate_doas(y_full, scene.k, radar, **kwargs)
    truths = scene.doas_deg
    resolved = (est.size == truths.size
                and estimation.resolution_success(truths, est, delta))
    resolved_full = (est_full.size == truths.size
                     and estimation.resolution_success(truths, est_full,
                                                       delta))
    joint: tuple[tuple[float, float], ...] = ()
    if cfg.use_2d:
        pairs = estimation.estimate_doa_speed(
            estimation.reshape_joint(y_rec), scene.k, radar)
        joint = tuple((float(t), float(v)) for t, v in pairs)
    return TrialOutcome(trial=trial_index, phi=float(np.mean(phis)),
                        iterations=iters, converged=conv, resolved=resolved,
                        resolved_full=resolved_full,
                        doa_estimates=tuple(float(t) for t in est),
                        doa_estimates_full=tuple(float(t) for t in est_full),
                        joint_estimates=joint)


_TRIAL_FUNCS = {
    "coherence": _trial_coherence,
    "recovery": _trial_recovery,
    "doa": _trial_doa,
    "scheme_compare": _trial_scheme_compare,
}


def run_trial(cfg: ExperimentConfig, trial_index: int,
              point: dict | None = None,
              point_index: int = 0) -> TrialOutcome:
    """Run one trial; module errors become a failed-trial record."""
    if cfg.kind == "wave_spectrum":
        raise ValueError("this experiment kind has no Monte-Carlo trials")
    if point is None:
        points = sweep_points(cfg)
        if point_index >= len(points):
            raise ValueError("point_index out of range")
        point = points[point_index]
    try:
        return _TRIAL_FUNCS[cfg.kind](cfg, point, point_index, trial_index)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return TrialOutcome(trial=trial_index, failed=True, error=str(exc))


def _run_unit(args: tuple) -> TrialOutcome:
    cfg, point, point_index, trial_index = args
    return run_trial(cfg, trial_index, point, point_index)


# --------------------------------------------------------------------------
# aggregation

_AXIS_COLUMNS = {
    "coherence": ["mt", "mr", "n", "waveform", "delta_theta"],
    "recovery": ["waveform", "targets", "delta_theta", "snr_db", "m_per_df",
                 "count_per_row", "m_per_df_actual"],
    "doa": ["waveform", "snr_db", "delta_theta"],
    "scheme_compare": ["scheme", "size", "delta_theta"],
}

_TRIAL_COLUMNS = {
    "coherence": ["trial", "rank_used", "mu_u", "mu_v", "mu_max", "mu1",
                  "failed", "error"],
    "recovery": ["trial", "phi", "iterations", "converged", "mu_max",
                 "failed", "error"],
    "doa": ["trial", "phi", "iterations", "converged", "resolved",
            "resolved_full", "doa_estimates", "doa_estimates_full",
            "joint_estimates", "failed", "error"],
    "scheme_compare": ["trial", "phi", "iterations", "converged", "failed",
                       "error"],
}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(value)
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return f"{value:.10g}"
    if isinstance(value, tuple):
        return ";".join(_fmt(v) for v in value)
    return str(value)


def _axis_value(point: dict, col: str) -> str:
    value = point.get(col, "")
    if col == "targets" and value:
        return ";".join(f"{t:g}" for t in value)
    return _fmt(value)


def _trial_row(kind: str, outcome: TrialOutcome) -> list[str]:
    rep = outcome.coherence
    values = {
        "trial": outcome.trial,
        "phi": outcome.phi,
        "iterations": outcome.iterations,
        "converged": outcome.converged,
        "rank_used": rep.rank_used if rep else None,
        "mu_u": rep.mu_u if rep else None,
        "mu_v": rep.mu_v if rep else None,
        "mu_max": rep.mu_max if rep else None,
        "mu1": rep.mu1 if rep else None,
        "resolved": outcome.resolved,
        "resolved_full": outcome.resolved_full,
        "doa_estimates": outcome.doa_estimates,
        "doa_estimates_full": outcome.doa_estimates_full,
        "joint_estimates": tuple(t for pair in outcome.joint_estimates
                                 for t in pair),
        "failed": outcome.failed,
        "error": outcome.error,
    }
    return [_fmt(values[c]) for c in _TRIAL_COLUMNS[kind]]


def _mean(values: list[float]) -> float:
    return float(np.mean(values)) if values else math.nan


def _std(values: list[float]) -> float:
    return float(np.std(values)) if values else math.nan


def _summarize(cfg: ExperimentConfig, point: dict,
               outcomes: list[TrialOutcome]) -> dict:
    good = [o for o in outcomes if not o.failed]
    out = {"n_trials": len(outcomes), "n_failed": len(outcomes) - len(good)}
    if cfg.kind == "coherence":
        mu_max = [o.coherence.mu_max for o in good]
        out.update(mu_max_mean=_mean(mu_max), mu_max_std=_std(mu_max),
                   mu1_mean=_mean([o.coherence.mu1 for o in good]))
    elif cfg.kind in ("recovery", "scheme_compare"):
        phis = [o.phi for o in good]
        out.update(phi_mean=_mean(phis), phi_std=_std(phis),
                   converged_frac=_mean([1.0 * o.converged for o in good]))
    elif cfg.kind == "doa":
        n = len(outcomes)
        out.update(
            resolution_prob=sum(bool(o.resolved) for o in good) / n,
            resolution_prob_full=sum(bool(o.resolved_full)
                                     for o in good) / n,
            phi_mean=_mean([o.phi for o in good]))
    return out


_SUMMARY_COLUMNS = {
    "coherence": ["n_trials", "n_failed", "mu_max_mean", "mu_max_std",
                  "mu1_mean"],
    "recovery": ["n_trials", "n_failed", "phi_mean", "phi_std",
                 "converged_frac"],
    "doa": ["n_trials", "n_failed", "resolution_prob",
            "resolution_prob_full", "phi_mean"],
    "scheme_compare": ["n_trials", "n_failed", "phi_mean", "phi_std",
                       "converged_frac"],
}


def _wave_spectrum_result(cfg: ExperimentConfig) -> SweepResult:
    grid = np.linspace(-0.5, 0.5, 1025)
    kinds = cfg.waveforms or ("hadamard", "gorth")
    powers = {}
    for name in kinds:
        wave = signal_model.gen_waveforms(
            WaveformKind(name), cfg.mt, cfg.n_nyquist,
            rng_seed=derive_row_seed(cfg.master_seed, 0, 1))
        powers[name] = signal_model.column_power_spectrum(wave, grid)
    columns = ["preset", "master_seed", "omega"] \
        + [f"power_{name}" for name in kinds]
    rows = []
    for i, omega in enumerate(grid):
        rows.append([cfg.preset, str(cfg.master_seed), _fmt(float(omega))]
                    + [_fmt(float(powers[name][i])) for name in kinds])
    table = Table(name="spectrum", columns=columns, rows=rows)
    return SweepResult(config=cfg, points=[], tables={"spectrum": table})


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> SweepResult:
    """Run the full sweep and aggregate into result tables.

    Trials are independent; with jobs > 1 they run in a process pool.  The
    fold is in (point, trial) order either way, so the emitted tables are
    byte-identical for any job count.
    """
    validate_config(cfg)
    if cfg.kind == "wave_spectrum":
        return _wave_spectrum_result(cfg)
    points = sweep_points(cfg)
    units = [(cfg, point, pi, ti)
             for pi, point in enumerate(points)
             for ti in range(cfg.n_trials)]
    if jobs > 1:
        chunk = max(1, len(units) // (jobs * 8))
        with multiprocessing.Pool(jobs) as pool:
            outcomes = pool.map(_run_unit, units, chunksize=chunk)
    else:
        outcomes = [_run_unit(u) for u in units]

    axis_cols = _AXIS_COLUMNS[cfg.kind]
    prov = ["preset", "master_seed"]
    trial_table = Table(name="trials",
                        columns=prov + axis_cols + _TRIAL_COLUMNS[cfg.kind],
                        rows=[])
    summary_table = Table(name="summary",
                          columns=prov + ["trials"] + axis_cols
                          + _SUMMARY_COLUMNS[cfg.kind],
                          rows=[])
    tables = {"trials": trial_table, "summary": summary_table}

    trial_range = f"0:{cfg.n_trials}"
    per_point: list[list[TrialOutcome]] = [[] for _ in points]
    for (c, point, pi, ti), outcome in zip(units, outcomes):
        per_point[pi].append(outcome)
        trial_table.rows.append(
            [cfg.preset, str(cfg.master_seed)]
            + [_axis_value(point, col) for col in axis_cols]
            + _trial_row(cfg.kind, outcome))
    for pi, point in enumerate(points):
        summary = _summarize(cfg, point, per_point[pi])
        summary_table.rows.append(
            [cfg.preset, str(cfg.master_seed), trial_range]
            + [_axis_value(point, col) for col in axis_cols]
            + [_fmt(summary[c]) for c in _SUMMARY_COLUMNS[cfg.kind]])

    if cfg.kind == "coherence" and cfg.mu0_grid is not None:
        start, stop, step = cfg.mu0_grid
        mu0_values = np.arange(start, stop + step / 2, step)
        exceed = Table(name="exceedance",
                       columns=prov + ["trials"] + axis_cols
                       + ["mu0", "prob"],
                       rows=[])
        for pi, point in enumerate(points):
            mu_max = np.array([o.coherence.mu_max
                               for o in per_point[pi] if not o.failed])
            for mu0 in mu0_values:
                prob = float(np.mean(mu_max > mu0)) if mu_max.size else \
                    math.nan
                exceed.rows.append(
                    [cfg.preset, str(cfg.master_seed), trial_range]
                    + [_axis_value(point, col) for col in axis_cols]
                    + [_fmt(float(mu0)), _fmt(prob)])
        tables["exceedance"] = exceed
    return SweepResult(config=cfg, points=points, tables=tables)


def write_tables(result: SweepResult, outdir: str | Path) -> list[Path]:
    """Write every result table as <name>.csv under outdir."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for table in result.tables.values():
        path = outdir / f"{table.name}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(table.columns)
            writer.writerows(table.rows)
        written.append(path)
    return written
