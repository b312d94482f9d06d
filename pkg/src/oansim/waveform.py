"""Complex-baseband waveform container and spectral helpers.

A :class:`ComplexWaveform` carries both electrical and optical signals.
Samples are complex amplitudes in sqrt(W), so ``|s|**2`` is instantaneous
power in W.  ``ref_freq`` is the absolute frequency of the complex-baseband
origin (0 for electrical signals).  Bulk propagation delay is carried as
metadata in ``delay_us`` rather than as a sample shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from functools import lru_cache

from scipy import fft as fftpack
from scipy import signal as sig

from .errors import ConfigError


@lru_cache(maxsize=32)
def _cached_fftfreq(n: int, dt: float) -> np.ndarray:
    f = np.fft.fftfreq(n, dt)
    f.setflags(write=False)
    return f


@lru_cache(maxsize=32)
def _cached_times(n: int, dt: float) -> np.ndarray:
    t = np.arange(n) * dt
    t.setflags(write=False)
    return t


def _tone_phasor(freq: float, n: int, dt: float) -> np.ndarray:
    """exp(2j*pi*freq*t) on the sample grid.

    When freq*dt is a small-denominator rational — true for every carrier,
    IF, and channel offset on the grids used here — one period is evaluated
    and tiled, which is ~20x cheaper than the full-length exponential.  The
    tiling phase error is bounded by 2*pi*1e-12*(freq*n*dt) radians.
    """
    if freq == 0.0:
        return np.ones(n, dtype=np.complex128)
    cyc = freq * dt
    frac = Fraction(cyc).limit_denominator(8192)
    p = frac.denominator
    if p < n and abs(float(frac) - cyc) <= 1e-12 * abs(cyc):
        base = np.exp(2j * np.pi * freq * np.arange(p) * dt)
        return np.tile(base, n // p + 1)[:n]
    return np.exp(2j * np.pi * freq * np.arange(n) * dt)


@dataclass
class ComplexWaveform:
    samples: np.ndarray
    sample_rate: float
    ref_freq: float = 0.0
    delay_us: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be > 0")
        if self.samples.size == 0:
            raise ConfigError("waveform must contain at least one sample")

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.n / self.sample_rate

    def times(self) -> np.ndarray:
        return _cached_times(self.n, 1.0 / self.sample_rate)

    def baseband_freqs(self) -> np.ndarray:
        return _cached_fftfreq(self.n, 1.0 / self.sample_rate)

    def abs_freqs(self) -> np.ndarray:
        return self.baseband_freqs() + self.ref_freq

    def power(self) -> float:
        """Mean power in W."""
        return float(np.mean(np.abs(self.samples) ** 2))

    def power_dbm(self) -> float:
        return 10.0 * np.log10(self.power() * 1e3)

    def energy(self) -> float:
        """Total energy in J: sum |s|^2 / sample_rate."""
        return float(np.sum(np.abs(self.samples) ** 2) / self.sample_rate)

    def is_real(self, tol: float = 1e-9) -> bool:
        scale = np.max(np.abs(self.samples)) or 1.0
        return bool(np.max(np.abs(self.samples.imag)) <= tol * scale)

    def copy_with(self, **kwargs) -> "ComplexWaveform":
        return replace(self, **kwargs)


def psd(wf: ComplexWaveform, nfft: int | None = None):
    """Two-sided periodogram PSD.

    Returns (freqs, psd) with freqs absolute (ref_freq added) and psd in
    W/Hz, both sorted by frequency.
    """
    f, p = sig.periodogram(
        wf.samples, fs=wf.sample_rate, return_onesided=False, detrend=False
    )
    order = np.argsort(f)
    return f[order] + wf.ref_freq, p[order]


def band_power(wf: ComplexWaveform, f_lo: float, f_hi: float,
               absolute: bool = True) -> float:
    """Mean power (W) contained in [f_lo, f_hi].

    ``absolute`` selects absolute frequencies (ref_freq included) versus
    baseband offsets.
    """
    spec = fftpack.fft(wf.samples)
    f = wf.abs_freqs() if absolute else wf.baseband_freqs()
    mask = (f >= f_lo) & (f <= f_hi)
    return float(np.sum(np.abs(spec[mask]) ** 2) / wf.n**2)


def frequency_shift(wf: ComplexWaveform, df: float) -> ComplexWaveform:
    """Shift spectral content by df (ref_freq unchanged)."""
    rot = _tone_phasor(df, wf.n, 1.0 / wf.sample_rate)
    return wf.copy_with(samples=wf.samples * rot)


def with_ref(wf: ComplexWaveform, new_ref: float) -> ComplexWaveform:
    """Re-center the complex baseband on a new reference frequency.

    Absolute spectral content is preserved.
    """
    rot = _tone_phasor(wf.ref_freq - new_ref, wf.n, 1.0 / wf.sample_rate)
    return wf.copy_with(samples=wf.samples * rot, ref_freq=new_ref)


def scale_db(wf: ComplexWaveform, gain_db: float) -> ComplexWaveform:
    return wf.copy_with(samples=wf.samples * 10.0 ** (gain_db / 20.0))


def set_power_dbm(wf: ComplexWaveform, target_dbm: float) -> ComplexWaveform:
    return scale_db(wf, target_dbm - wf.power_dbm())


def resample_to(wf: ComplexWaveform, new_rate: float) -> ComplexWaveform:
    """Polyphase resampling to a new sample rate (rational ratio)."""
    if new_rate == wf.sample_rate:
        return wf.copy_with()
    frac = Fraction(new_rate / wf.sample_rate).limit_denominator(1_000_000)
    out = sig.resample_poly(wf.samples, frac.numerator, frac.denominator)
    return wf.copy_with(samples=out, sample_rate=new_rate)


def upconvert_real(wf: ComplexWaveform, f_rf: float,
                   half_bw: float | None = None) -> ComplexWaveform:
    """Mix a complex baseband signal onto a real RF carrier at f_rf.

    Output is a real-valued passband signal centered at f_rf with the
    input power preserved (sqrt(2) carrier convention).  ``f_rf == 0`` is
    the degenerate no-op case and returns the input unchanged.  When the
    caller already knows the occupied half-bandwidth it can pass
    ``half_bw`` and skip the spectral estimate.
    """
    if f_rf == 0.0:
        return wf.copy_with()
    if half_bw is None:
        # occupied half-bandwidth: 99.9%-power spectral extent
        f = np.abs(wf.baseband_freqs())
        spec2 = np.abs(fftpack.fft(wf.samples)) ** 2
        order = np.argsort(f)
        cum = np.cumsum(spec2[order])
        if cum[-1] > 0:
            k = int(np.searchsorted(cum, 0.999 * cum[-1]))
            half_bw = float(f[order][min(k, f.size - 1)])
        else:
            half_bw = 0.0
    if f_rf + half_bw >= wf.sample_rate / 2:
        raise ConfigError(
            f"upconversion to {f_rf/1e9:.3f} GHz aliases: need f_rf + bw/2 "
            f"< sample_rate/2 = {wf.sample_rate/2e9:.3f} GHz"
        )
    rot = _tone_phasor(f_rf, wf.n, 1.0 / wf.sample_rate)
    out = np.sqrt(2.0) * np.real(wf.samples * rot)
    return wf.copy_with(samples=out.astype(np.complex128))


def downconvert(wf: ComplexWaveform, f_rf: float,
                conjugate: bool = False) -> ComplexWaveform:
    """Digitally downconvert a real passband signal from f_rf to baseband.

    Inverse of :func:`upconvert_real` up to the low-pass filtering done by
    a subsequent resample.  ``conjugate`` flips the spectrum, needed when
    the signal of interest rides a lower sideband.
    """
    rot = _tone_phasor(-f_rf, wf.n, 1.0 / wf.sample_rate)
    out = np.sqrt(2.0) * wf.samples * rot
    if conjugate:
        out = np.conj(out)
    return wf.copy_with(samples=out)


def combine(waveforms: list[ComplexWaveform]) -> ComplexWaveform:
    """Sum waveforms sharing the same grid (rate, ref_freq, length)."""
    first = waveforms[0]
    acc = np.zeros(first.n, dtype=np.complex128)
    for wf in waveforms:
        if wf.sample_rate != first.sample_rate or wf.ref_freq != first.ref_freq:
            raise ConfigError("combine: waveform grids differ")
        if wf.n != first.n:
            raise ConfigError("combine: waveform lengths differ")
        acc += wf.samples
    return first.copy_with(samples=acc)


def pad_to(wf: ComplexWaveform, n: int) -> ComplexWaveform:
    if wf.n > n:
        return wf.copy_with(samples=wf.samples[:n])
    if wf.n == n:
        return wf.copy_with()
    out = np.zeros(n, dtype=np.complex128)
    out[: wf.n] = wf.samples
    return wf.copy_with(samples=out)
