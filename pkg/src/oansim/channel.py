"""Fiber propagation, splitting, amplification, and photodetection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as fftpack
from scipy.constants import c as C_LIGHT
from scipy.constants import e as Q_ELECTRON
from scipy.constants import h as H_PLANCK

from .errors import ConfigError
from .waveform import ComplexWaveform

#: One-way group delay used throughout (100 km round trip = 1 ms).
GROUP_DELAY_US_PER_KM = 5.0


@dataclass(frozen=True)
class FiberParams:
    length_km: float
    atten_db_per_km: float = 0.2
    dispersion_ps_nm_km: float = 17.0
    group_delay_us_per_km: float = GROUP_DELAY_US_PER_KM
    ref_wavelength_nm: float = 1550.0

    def __post_init__(self):
        if self.length_km < 0:
            raise ConfigError("fiber length must be >= 0")
        if self.atten_db_per_km < 0:
            raise ConfigError("fiber attenuation must be >= 0")

    @property
    def total_loss_db(self) -> float:
        return self.atten_db_per_km * self.length_km

    def one_way_delay_us(self) -> float:
        return self.group_delay_us_per_km * self.length_km


@dataclass(frozen=True)
class PdParams:
    responsivity: float = 1.0        # A/W
    thermal_noise_psd: float = 0.0   # A^2/Hz, single-sided
    include_shot: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.responsivity <= 0:
            raise ConfigError("responsivity must be > 0")


def dispersion_phase(fiber: FiberParams, freq_offsets: np.ndarray) -> np.ndarray:
    """All-pass quadratic phase of chromatic dispersion around the carrier."""
    lam = fiber.ref_wavelength_nm * 1e-9
    d = fiber.dispersion_ps_nm_km * 1e-6  # s/m^2
    length = fiber.length_km * 1e3
    return -np.pi * lam**2 * d * length * freq_offsets**2 / C_LIGHT


def propagate_fiber(field: ComplexWaveform, params: FiberParams) -> ComplexWaveform:
    """Apply loss and chromatic dispersion; delay is recorded as metadata.

    The dispersion operator is exactly all-pass (|H| = 1), so relative
    intra-band delay is fully captured in the phase while the bulk group
    delay accumulates in ``delay_us``.
    """
    if params.length_km == 0:
        return field.copy_with()
    amp = 10.0 ** (-params.total_loss_db / 20.0)
    h = np.exp(1j * dispersion_phase(params, field.baseband_freqs()))
    out = fftpack.ifft(fftpack.fft(field.samples) * h) * amp
    return field.copy_with(samples=out,
                           delay_us=field.delay_us + params.one_way_delay_us())


def rf_fading_power(fiber: FiberParams, f_rf) -> np.ndarray:
    """Analytic double-sideband dispersion-fading envelope, cos^2 form.

    Power transfer of a direct-detected DSB RF subcarrier after the fiber;
    the first null sits at f = sqrt(c / (2 lambda^2 D L)).
    """
    lam = fiber.ref_wavelength_nm * 1e-9
    d = fiber.dispersion_ps_nm_km * 1e-6
    length = fiber.length_km * 1e3
    return np.cos(np.pi * lam**2 * d * length
                  * np.asarray(f_rf, dtype=float) ** 2 / C_LIGHT) ** 2


def split_power(field: ComplexWaveform, n_ways: int,
                excess_db: float = 0.0) -> ComplexWaveform:
    """One branch of a 1:N power splitter with optional excess loss."""
    if n_ways < 1:
        raise ConfigError("n_ways must be >= 1")
    loss_db = 10.0 * np.log10(n_ways) + excess_db
    return field.copy_with(samples=field.samples * 10.0 ** (-loss_db / 20.0))


def amplify_ase(field: ComplexWaveform, gain_db: float, nf_db: float,
                seed: int = 0) -> ComplexWaveform:
    """Flat-gain optical amplifier with seeded ASE noise.

    ASE power spectral density is (G-1) h nu NF / 2 per quadrature, added
    over the full simulation bandwidth.
    """
    if gain_db < 0:
        raise ConfigError("amplifier gain must be >= 0 dB")
    g = 10.0 ** (gain_db / 10.0)
    nf = 10.0 ** (nf_db / 10.0)
    nu = field.ref_freq if field.ref_freq > 0 else C_LIGHT / 1550e-9
    psd_per_quad = (g - 1.0) * H_PLANCK * nu * nf / 2.0
    sigma2 = psd_per_quad * field.sample_rate
    rng = np.random.default_rng(seed)
    noise = (rng.normal(scale=np.sqrt(sigma2), size=field.n)
             + 1j * rng.normal(scale=np.sqrt(sigma2), size=field.n))
    return field.copy_with(samples=field.samples * np.sqrt(g) + noise)


def photodetect(field: ComplexWaveform, params: PdParams) -> ComplexWaveform:
    """Square-law detection: i(t) = R |E(t)|^2 plus shot and thermal noise.

    Output is a real electrical waveform at the same sample rate; the
    effective noise bandwidth is sample_rate / 2.
    """
    if field.ref_freq <= 0:
        raise ConfigError("photodetect expects an optical field (ref_freq > 0)")
    rng = np.random.default_rng(params.seed)
    current = params.responsivity * np.abs(field.samples) ** 2
    bandwidth = field.sample_rate / 2.0
    if params.include_shot:
        var = 2.0 * Q_ELECTRON * np.maximum(current, 0.0) * bandwidth
        current = current + rng.normal(size=field.n) * np.sqrt(var)
    if params.thermal_noise_psd > 0:
        sigma = np.sqrt(params.thermal_noise_psd * bandwidth)
        current = current + rng.normal(scale=sigma, size=field.n)
    return ComplexWaveform(current.astype(np.complex128), field.sample_rate,
                           ref_freq=0.0, delay_us=field.delay_us)


def dc_block(wf: ComplexWaveform) -> ComplexWaveform:
    """Remove the mean photocurrent, as a bias-tee-coupled receiver does.

    The average term of a direct-detected field is a strong spectral line
    that would otherwise leak into nearby subcarriers after digital
    downconversion.
    """
    return wf.copy_with(samples=wf.samples - np.mean(wf.samples))
