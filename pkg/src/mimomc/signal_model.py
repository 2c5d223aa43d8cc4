"""Signal model of a colocated MIMO pulse radar with uniform linear arrays.

Builds the deterministic quantities every experiment rests on: transmit and
receive steering vectors, per-pulse Doppler phases, orthonormal transmit
waveform matrices, the noise-free fusion-center data matrices for both
acquisition schemes, additive receiver noise at a prescribed SNR, and the
spatial power spectrum of a waveform matrix.

Conventions: angles are degrees off array broadside in [-90, 90], speeds are
radial meters per second (positive closing), pulses are indexed from 1, and
antennas from 0.  All complex arrays are numpy ``complex128``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

SPEED_OF_LIGHT = 2.99792458e8  # m/s

# Gram matrices of waveform rows must match the identity this tightly.
_ORTHO_TOL = 1e-10


class Scheme(enum.Enum):
    """Fusion-center matrix layout produced by the acquisition front end.

    MATCHED_FILTER: each receive antenna correlates with every transmit
    waveform, one matrix row per antenna (n_rows = Mr, n_cols = Mt).
    SUB_NYQUIST: each receive antenna keeps raw temporal samples of one
    pulse (n_rows = Mr, n_cols = N).
    """

    MATCHED_FILTER = "scheme1"
    SUB_NYQUIST = "scheme2"


class WaveformKind(enum.Enum):
    HADAMARD = "hadamard"
    GAUSSIAN_ORTHOGONAL = "gorth"


@dataclass(frozen=True)
class RadarConfig:
    """Array geometry, carrier, and pulse timing of the radar.

    Attributes
    ----------
    mt, mr : int
        Number of transmit and receive antennas.
    dt, dr : float
        Transmit and receive element spacing in meters.
    carrier_freq : float
        Carrier frequency in Hz.
    wavelength : float
        Carrier wavelength in meters; must equal c / carrier_freq.
    pulses_q : int
        Pulses in one coherent processing interval.
    t_pri : float
        Pulse repetition interval in seconds.
    t_pulse : float
        Pulse (waveform) duration in seconds.
    t_sample : float
        Nyquist sampling period of the waveforms in seconds.
    n_nyquist : int
        Samples per pulse at Nyquist rate; equals t_pulse / t_sample.
    """

    mt: int
    mr: int
    dt: float
    dr: float
    carrier_freq: float
    wavelength: float
    pulses_q: int
    t_pri: float
    t_pulse: float
    t_sample: float
    n_nyquist: int

    def __post_init__(self) -> None:
        if self.mt < 1 or self.mr < 1:
            raise ValueError("antenna counts must be positive")
        if self.pulses_q < 1:
            raise ValueError("pulse count must be positive")
        if self.n_nyquist < 1:
            raise ValueError("samples per pulse must be positive")
        for name in ("dt", "dr", "carrier_freq", "wavelength", "t_pri",
                     "t_pulse", "t_sample"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if abs(self.wavelength * self.carrier_freq - SPEED_OF_LIGHT) > 1e-6 * SPEED_OF_LIGHT:
            raise ValueError("wavelength and carrier_freq must satisfy lambda * f = c")
        if abs(self.t_pulse - self.n_nyquist * self.t_sample) > 1e-12 * self.t_pulse:
            raise ValueError("t_pulse must equal n_nyquist * t_sample")
        if self.t_pri < self.t_pulse:
            raise ValueError("t_pri must be at least the pulse duration")

    @classmethod
    def build(cls, mt: int, mr: int, *, carrier_freq: float = 1e9,
              wavelength: float | None = None, dt: float | None = None,
              dr: float | None = None, pulses_q: int = 1, t_pri: float = 1e-4,
              t_sample: float = 1e-7, n_nyquist: int = 256) -> "RadarConfig":
        """Construct a config with the usual defaults filled in.

        Omitted spacings default to half a wavelength; an omitted wavelength
        is derived from the carrier (and vice versa when only ``wavelength``
        is given).
        """
        if wavelength is None:
            wavelength = SPEED_OF_LIGHT / carrier_freq
        if dt is None:
            dt = wavelength / 2.0
        if dr is None:
            dr = wavelength / 2.0
        return cls(mt=mt, mr=mr, dt=dt, dr=dr, carrier_freq=carrier_freq,
                   wavelength=wavelength, pulses_q=pulses_q, t_pri=t_pri,
                   t_pulse=n_nyquist * t_sample, t_sample=t_sample,
                   n_nyquist=n_nyquist)


@dataclass(frozen=True)
class Target:
    """Point scatterer: direction, radial speed, complex reflectivity."""

    doa_deg: float
    speed: float
    reflectivity: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        if not math.isfinite(self.doa_deg) or not -90.0 <= self.doa_deg <= 90.0:
            raise ValueError("doa_deg must lie in [-90, 90]")
        if not math.isfinite(self.speed):
            raise ValueError("speed must be finite")
        beta = complex(self.reflectivity)
        if not (math.isfinite(beta.real) and math.isfinite(beta.imag)):
            raise ValueError("reflectivity must be finite")


@dataclass(frozen=True)
class Scene:
    """A fixed collection of targets in the far field."""

    targets: tuple[Target, ...]

    def __init__(self, targets: Sequence[Target]):
        object.__setattr__(self, "targets", tuple(targets))

    @property
    def k(self) -> int:
        return len(self.targets)

    @property
    def doas_deg(self) -> np.ndarray:
        return np.array([t.doa_deg for t in self.targets], dtype=float)

    @property
    def speeds(self) -> np.ndarray:
        return np.array([t.speed for t in self.targets], dtype=float)

    @property
    def reflectivities(self) -> np.ndarray:
        return np.array([t.reflectivity for t in self.targets], dtype=complex)


@dataclass(frozen=True)
class WaveformMatrix:
    """Mt x N transmit waveform samples with orthonormal rows.

    ``samples`` always holds the unit-energy orthonormal rows; ``energy`` is
    the nominal per-waveform transmit energy carried as metadata so callers
    can rescale when absolute power matters.
    """

    samples: np.ndarray
    kind: WaveformKind
    energy: float

    def __post_init__(self) -> None:
        s = np.asarray(self.samples)
        if s.ndim != 2:
            raise ValueError("samples must be a 2-D array")
        gram = s @ s.conj().T
        if np.linalg.norm(gram - np.eye(s.shape[0]), "fro") > _ORTHO_TOL:
            raise ValueError("waveform rows must be orthonormal")
        if not self.energy > 0.0:
            raise ValueError("energy must be positive")

    @property
    def mt(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class DataMatrix:
    """One pulse's noise-free or noisy fusion-center matrix."""

    values: np.ndarray
    scheme: Scheme
    pulse_index: int

    def __post_init__(self) -> None:
        if np.asarray(self.values).ndim != 2:
            raise ValueError("values must be a 2-D array")
        if self.pulse_index < 1:
            raise ValueError("pulse_index starts at 1")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _steering(doa_deg: float, spacing: float, count: int,
              wavelength: float) -> np.ndarray:
    if not math.isfinite(doa_deg) or not -90.0 <= doa_deg <= 90.0:
        raise ValueError("doa_deg must lie in [-90, 90]")
    phase = 2.0 * np.pi / wavelength * spacing * math.sin(math.radians(doa_deg))
    return np.exp(1j * phase * np.arange(count))


def transmit_steering(doa_deg: float, cfg: RadarConfig) -> np.ndarray:
    """Unit-modulus transmit array response toward a far-field direction.

    Element i contributes exp(j * 2 pi / lambda * i * dt * sin(theta)),
    i = 0 .. Mt-1.
    """
    return _steering(doa_deg, cfg.dt, cfg.mt, cfg.wavelength)


def receive_steering(doa_deg: float, cfg: RadarConfig) -> np.ndarray:
    """Unit-modulus receive array response toward a far-field direction."""
    return _steering(doa_deg, cfg.dr, cfg.mr, cfg.wavelength)


def doppler_phase(speed: float, pulse_index: int, cfg: RadarConfig) -> complex:
    """Phase rotation accumulated by pulse ``pulse_index`` for a mover.

    A radial speed v shifts pulse q (1-based) by exp(j * 2 pi / lambda *
    2 v (q - 1) * t_pri).  Pulse 1 is the phase reference.
    """
    if pulse_index < 1:
        raise ValueError("pulse_index starts at 1")
    if not math.isfinite(speed):
        raise ValueError("speed must be finite")
    phase = 2.0 * np.pi / cfg.wavelength * 2.0 * speed * (pulse_index - 1) * cfg.t_pri
    return complex(np.exp(1j * phase))


def doppler_steering(speed: float, cfg: RadarConfig) -> np.ndarray:
    """Vector of per-pulse Doppler rotations [1, d_2, ..., d_Q] for a speed."""
    if not math.isfinite(speed):
        raise ValueError("speed must be finite")
    phase = 2.0 * np.pi / cfg.wavelength * 2.0 * speed * cfg.t_pri
    return np.exp(1j * phase * np.arange(cfg.pulses_q))


def virtual_steering(doa_deg: float, cfg: RadarConfig) -> np.ndarray:
    """Kronecker product a(theta) kron b(theta) of length Mt * Mr.

    This is the column-major vectorization of b(theta) a(theta)^T, i.e. the
    response of the virtual array with the receive index varying fastest.
    """
    return np.kron(transmit_steering(doa_deg, cfg), receive_steering(doa_deg, cfg))


def target_spatial_frequency(doa_deg: float, cfg: RadarConfig) -> float:
    """Normalized transmit spatial frequency (dt / lambda) * sin(theta)."""
    if not -90.0 <= doa_deg <= 90.0:
        raise ValueError("doa_deg must lie in [-90, 90]")
    return cfg.dt / cfg.wavelength * math.sin(math.radians(doa_deg))


def gen_waveforms(kind: WaveformKind, mt: int, n: int, *,
                  energy: float | None = None, rng_seed: int = 0) -> WaveformMatrix:
    """Generate an Mt x N waveform matrix with orthonormal rows.

    Parameters
    ----------
    kind : WaveformKind
        HADAMARD takes the first Mt rows of the order-N Sylvester-Hadamard
        matrix scaled by 1/sqrt(N); N must be a power of two.
        GAUSSIAN_ORTHOGONAL orthonormalizes the rows of an Mt x N complex
        Gaussian matrix (QR), giving a spectrally flat random codebook.
    mt, n : int
        Waveform count and samples per pulse; requires n >= mt.
    energy : float, optional
        Nominal total transmit energy metadata; defaults to Mt (unit energy
        per waveform).
    rng_seed : int
        Seed for the Gaussian draw; ignored for Hadamard.
    """
    if mt < 1:
        raise ValueError("mt must be positive")
    if n < mt:
        raise ValueError("n must be at least mt to orthonormalize the rows")
    if energy is None:
        energy = float(mt)
    if kind is WaveformKind.HADAMARD:
        if n & (n - 1) != 0:
            raise ValueError("Hadamard waveforms need n to be a power of two")
        h = scipy.linalg.hadamard(n).astype(complex)
        samples = h[:mt] / math.sqrt(n)
    elif kind is WaveformKind.GAUSSIAN_ORTHOGONAL:
        rng = np.random.default_rng(rng_seed)
        g = rng.standard_normal((n, mt)) + 1j * rng.standard_normal((n, mt))
        q, _ = np.linalg.qr(g)
        samples = q[:, :mt].conj().T
    else:
        raise ValueError(f"unknown waveform kind: {kind!r}")
    return WaveformMatrix(samples=samples, kind=kind, energy=energy)


def _scene_factors(scene: Scene, cfg: RadarConfig, pulse_index: int
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if scene.k < 1:
        raise ValueError("scene must contain at least one target")
    a = np.stack([transmit_steering(t.doa_deg, cfg) for t in scene.targets])
    b = np.stack([receive_steering(t.doa_deg, cfg) for t in scene.targets])
    gains = np.array([t.reflectivity * doppler_phase(t.speed, pulse_index, cfg)
                      for t in scene.targets])
    return a, b, gains


def noise_free_mf_matrix(scene: Scene, cfg: RadarConfig,
                         pulse_index: int = 1) -> DataMatrix:
    """Noise-free matched-filter matrix of one pulse (Mr x Mt).

    Sum over targets of beta_k d_q(v_k) b(theta_k) a(theta_k)^T; its rank is
    the number of distinct DOAs in the scene.
    """
    a, b, gains = _scene_factors(scene, cfg, pulse_index)
    z = (b.T * gains) @ a
    return DataMatrix(values=z, scheme=Scheme.MATCHED_FILTER,
                      pulse_index=pulse_index)


def noise_free_raw_matrix(scene: Scene, cfg: RadarConfig, wave: WaveformMatrix,
                          pulse_index: int = 1) -> DataMatrix:
    """Noise-free raw sample matrix of one pulse (Mr x N).

    The matched-filter matrix right-multiplied by the waveform samples:
    sum_k beta_k d_q b a^T S.  Requires wave.mt == cfg.mt.
    """
    if wave.mt != cfg.mt:
        raise ValueError("waveform row count must match the transmit array")
    mf = noise_free_mf_matrix(scene, cfg, pulse_index)
    return DataMatrix(values=mf.values @ wave.samples, scheme=Scheme.SUB_NYQUIST,
                      pulse_index=pulse_index)


def noise_stddev(values: np.ndarray | Sequence[np.ndarray], snr_db: float) -> float:
    """Per-entry complex noise standard deviation for a target SNR.

    sigma^2 = mean(|Z|^2) * 10^(-snr/10), with the mean taken over every
    entry of the supplied matrix (or of all matrices when given a sequence,
    so a pulse train shares one noise level).  Infinite SNR gives 0.
    """
    if snr_db == np.inf:
        return 0.0
    if isinstance(values, np.ndarray):
        values = [values]
    arrays = [np.asarray(getattr(v, "values", v)) for v in values]
    total = sum(float(np.sum(np.abs(a) ** 2)) for a in arrays)
    count = sum(a.size for a in arrays)
    if count == 0 or total == 0.0:
        raise ValueError("cannot set an SNR for an empty or all-zero matrix")
    return math.sqrt(total / count * 10.0 ** (-snr_db / 10.0))


def add_noise_sigma(z: DataMatrix, sigma: float, rng_seed: int) -> DataMatrix:
    """Add circular complex Gaussian noise with given per-entry stddev."""
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        return z
    rng = np.random.default_rng(rng_seed)
    shape = z.values.shape
    w = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    w *= sigma / math.sqrt(2.0)
    return DataMatrix(values=z.values + w, scheme=z.scheme,
                      pulse_index=z.pulse_index)


def add_noise(z: DataMatrix, snr_db: float, rng_seed: int) -> DataMatrix:
    """Add receiver noise at a prescribed per-entry SNR.

    The noise power is referenced to the mean entry power of ``z`` itself.
    Infinite SNR returns the input unchanged.
    """
    return add_noise_sigma(z, noise_stddev(z.values, snr_db), rng_seed)


def column_power_spectra(wave: WaveformMatrix,
                         omega_grid: np.ndarray) -> np.ndarray:
    """Spatial power response of each waveform snapshot column.

    For normalized spatial frequency omega in [-1/2, 1/2] and column s_n of
    the waveform matrix, entry (g, n) is |sum_i s_n[i] exp(-j 2 pi w_g i)|^2.
    A target at theta concentrates transmit energy at omega =
    (dt / lambda) * sin(theta).
    """
    omega = np.asarray(omega_grid, dtype=float)
    if omega.ndim != 1 or omega.size == 0:
        raise ValueError("omega_grid must be a nonempty 1-D array")
    if np.any(omega < -0.5) or np.any(omega > 0.5):
        raise ValueError("omega_grid must lie in [-1/2, 1/2]")
    ant = np.arange(wave.mt)
    basis = np.exp(-2j * np.pi * omega[:, None] * ant[None, :])
    return np.abs(basis @ wave.samples) ** 2


def column_power_spectrum(wave: WaveformMatrix,
                          omega_grid: np.ndarray) -> np.ndarray:
    """Worst-case (maximum over columns) spatial power response."""
    return column_power_spectra(wave, omega_grid).max(axis=1)
