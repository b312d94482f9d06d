"""Composition of the photonic devices into the three network blocks.

* central-office transmitter: comb source + one IQ microring modulator
  per WDM channel, single-sideband digital payload inside each channel's
  reserved digital subband;
* smart-edge overlay unit: per channel, one ring splits the carrier into
  +/-f_s subcarriers and two further rings modulate those subcarriers
  with analog radio payloads; a drop ring intercepts the radio uplink on
  the return path;
* optical network unit: cascade of higher-order drop filters that strips
  the broadband subband (with a calibrated portion of the carrier) and
  the radio subcarriers, then remodulates the residual carrier with the
  uplink on the spectral side opposite the downlink.

All figures of merit (carrier apportioning, uplink-to-residual ratio,
spectral centroids) are computed here so scenarios only orchestrate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import fft as fftpack

from .channel import PdParams, dc_block, photodetect
from .devices import (IqMrmConfig, RingParams, apply_mrm, drop_filter,
                      generate_subcarriers, hilbert_pair, iq_mrm_ssb,
                      thermal_tune)
from .errors import ConfigError, SimulationError
from .ofdm import OfdmConfig, generate_ofdm
from .waveform import (ComplexWaveform, _tone_phasor, band_power, pad_to,
                       resample_to, upconvert_real)

#: Per-device passband insertion loss along an add/drop bus (dB).
BUS_LOSS_DB_PER_STAGE = 0.1

#: Half-width of the spectral window treated as "the carrier" (Hz).
CARRIER_WINDOW_HZ = 0.5e9


# ---------------------------------------------------------------------------
# Wavelength plan


@dataclass(frozen=True)
class WdmChannel:
    center_freq: float
    slot_width: float = 50e9
    digital_subband: float = 20e9
    rof_subcarrier_offset: float = 20e9   # f_s

    def __post_init__(self):
        if self.slot_width <= 0 or self.digital_subband <= 0:
            raise ConfigError("slot_width and digital_subband must be > 0")
        f_s = self.rof_subcarrier_offset
        if not self.digital_subband / 2.0 < f_s < self.slot_width / 2.0:
            raise ConfigError(
                "rof_subcarrier_offset must sit between the digital subband "
                "edge and the slot edge"
            )


@dataclass
class WdmPlan:
    channels: list

    def __post_init__(self):
        if not self.channels:
            raise ConfigError("plan needs at least one channel")
        spans = sorted((c.center_freq - c.slot_width / 2.0,
                        c.center_freq + c.slot_width / 2.0)
                       for c in self.channels)
        for (_, hi), (lo, _) in zip(spans, spans[1:]):
            if lo < hi:
                raise ConfigError("WDM slots overlap")

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def ref_freq(self) -> float:
        lo = min(c.center_freq for c in self.channels)
        hi = max(c.center_freq for c in self.channels)
        return (lo + hi) / 2.0


# ---------------------------------------------------------------------------
# Ring construction and drive conditioning


def slope_biased_ring(carrier_freq: float, fsr: float = 5e12,
                      coupling: float = 0.9987, amplitude: float = 0.9987,
                      mod_efficiency: float = 2e9,
                      slope_fraction: float = 0.5) -> RingParams:
    """All-pass modulator ring biased on its transmission slope.

    The resonance is tuned ``slope_fraction`` linewidths below the carrier
    so the carrier sits on the near-linear edge of the notch: the drive
    then translates almost linearly into carrier amplitude.
    """
    ring = RingParams(resonance_freq=carrier_freq, fsr=fsr,
                      self_coupling_t1=coupling,
                      roundtrip_amplitude_a=amplitude,
                      mod_efficiency=mod_efficiency)
    return thermal_tune(ring, carrier_freq - slope_fraction * ring.fwhm)


def scale_drive_to_depth(drive: ComplexWaveform, ring: RingParams,
                         depth: float) -> ComplexWaveform:
    """Scale a real drive so its peak resonance excursion is depth x FWHM."""
    peak = float(np.max(np.abs(drive.samples.real)))
    if peak == 0.0:
        return drive.copy_with()
    target_volt = depth * ring.fwhm / ring.mod_efficiency
    return drive.copy_with(samples=drive.samples * (target_volt / peak))


def _ssb_drives(payload: ComplexWaveform, ring: RingParams, depth: float):
    """In-phase and Hilbert-pair quadrature drives from a real payload."""
    i_drive = scale_drive_to_depth(payload, ring, depth)
    return i_drive, hilbert_pair(i_drive)


# ---------------------------------------------------------------------------
# Carrier-tap drop filter solver


@dataclass(frozen=True)
class FilterSpec:
    """One drop filter, positioned relative to its channel carrier."""
    center_offset: float
    bandwidth: float
    order: int = 3

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ConfigError("filter bandwidth must be > 0")
        if self.order < 1:
            raise ConfigError("filter order must be >= 1")


def solve_carrier_tap_filter(band_lo: float, band_hi: float, tap: float,
                             order: int = 3,
                             passband_fraction: float = 0.97) -> FilterSpec:
    """Drop filter that passes a signal band and taps a carrier fraction.

    The band edges are offsets from the carrier and must share a sign.
    The returned filter drops at least ``passband_fraction`` of the power
    across the far band edge while its skirt at the carrier drops exactly
    ``tap`` of the carrier power.
    """
    if not 0.0 < tap < 1.0:
        raise ConfigError("tap must be in (0, 1)")
    if band_lo * band_hi <= 0 or band_lo >= band_hi:
        raise ConfigError("band edges must be ordered and on one carrier side")
    sign = 1.0 if band_lo > 0 else -1.0
    far = max(abs(band_lo), abs(band_hi))
    u_tap = ((1.0 - tap) / tap) ** (1.0 / (2 * order))
    u_pass = ((1.0 - passband_fraction) / passband_fraction) ** (1.0 / (2 * order))
    bandwidth = 2.0 * far / (u_tap + u_pass)
    return FilterSpec(sign * u_tap * bandwidth / 2.0, bandwidth, order)


def filter_drop_fraction(spec: FilterSpec, offset: float) -> float:
    """|H_drop|^2 of a filter at a given carrier offset."""
    u = 2.0 * (offset - spec.center_offset) / spec.bandwidth
    return 1.0 / (1.0 + u ** (2 * spec.order))


# ---------------------------------------------------------------------------
# ONU configuration


@dataclass
class OnuConfig:
    channel_center: float
    broadband_filter: FilterSpec
    rof_filters: tuple = ()
    carrier_tap_fraction: float = 0.25
    uplink_sideband: str = "upper"
    uplink_drive_depth: float = 0.2
    digital_if: float = 7e9
    slot_width: float = 50e9
    min_residual_carrier_dbm: float = -35.0
    uplink_ratio_target_db: float = 13.0
    pd: PdParams = field(default_factory=PdParams)
    ring_kwargs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.carrier_tap_fraction < 1.0:
            raise ConfigError("carrier_tap_fraction must be in (0, 1)")
        if self.uplink_sideband not in ("upper", "lower"):
            raise ConfigError("uplink_sideband must be 'upper' or 'lower'")
        half = self.slot_width / 2.0
        for spec in (self.broadband_filter, *self.rof_filters):
            if abs(spec.center_offset) + spec.bandwidth / 2.0 > half:
                raise ConfigError(
                    f"filter at offset {spec.center_offset/1e9:+.2f} GHz "
                    f"extends beyond the ONU slot"
                )
        self._validate_extinction()

    def _validate_extinction(self):
        """Downlink suppression on the bus must support the uplink ratio.

        Each dropped downlink signal leaks through its filter's complement;
        the worst leakage over the central half of each drop band must sit
        below the uplink target with margin, otherwise residual downlink
        power would mask the remodulated uplink.
        """
        required = self.uplink_ratio_target_db
        for spec in (self.broadband_filter, *self.rof_filters):
            u_edge = 0.5  # signal assumed concentrated in the central half
            leak = 1.0 - 1.0 / (1.0 + u_edge ** (2 * spec.order))
            suppression_db = -10.0 * np.log10(leak)
            if suppression_db < required:
                raise ConfigError(
                    f"drop filter at {spec.center_offset/1e9:+.2f} GHz "
                    f"(order {spec.order}) suppresses the downlink by only "
                    f"{suppression_db:.1f} dB; uplink target is "
                    f"{required:.1f} dB"
                )

    def retuned(self, new_center: float) -> "OnuConfig":
        """Same ONU parked on another channel (colorless retune)."""
        return replace(self, channel_center=new_center)


# ---------------------------------------------------------------------------
# Central office


def olt_transmit(plan: WdmPlan, digital_payloads, ofdm_cfg: OfdmConfig,
                 sample_rate: float, power_per_tone_dbm: float = 0.0,
                 digital_if: float | None = None, sideband: str = "upper",
                 drive_depth: float = 0.25, ring_kwargs: dict | None = None,
                 method: str = "tone", min_duration: float = 0.0,
                 guard_s: float = 0.0, seed: int = 0) -> ComplexWaveform:
    """Comb source plus one IQ-SSB modulator per WDM channel.

    ``digital_payloads`` is one bit array per channel; each is OFDM
    modulated, upconverted to ``digital_if`` inside the digital subband,
    and placed single-sideband next to its channel's carrier.
    ``guard_s`` inserts silence before each frame so that channels whose
    envelope is advanced by fiber walk-off keep their preamble inside the
    record.
    """
    if len(digital_payloads) != plan.n_channels:
        raise ConfigError(
            f"{len(digital_payloads)} payloads for {plan.n_channels} channels"
        )
    ring_kwargs = ring_kwargs or {}
    ref = plan.ref_freq()
    for ch in plan.channels:
        if abs(ch.center_freq - ref) + ch.slot_width / 2.0 > sample_rate / 2.0:
            raise ConfigError("simulation bandwidth does not cover the plan")

    # per-channel electrical IF drives on the common grid
    drives = []
    for ch, bits in zip(plan.channels, digital_payloads):
        f_if = digital_if if digital_if is not None else 0.35 * ch.digital_subband
        if f_if + ofdm_cfg.occupied_bandwidth / 2.0 > ch.digital_subband / 2.0:
            raise ConfigError("digital payload does not fit in the subband")
        base = generate_ofdm(ofdm_cfg, np.asarray(bits))
        wf = resample_to(base, sample_rate)
        wf = upconvert_real(wf, f_if,
                            half_bw=0.55 * ofdm_cfg.occupied_bandwidth)
        n_guard = int(round(guard_s * sample_rate))
        if n_guard:
            wf = wf.copy_with(samples=np.concatenate(
                [np.zeros(n_guard, dtype=np.complex128), wf.samples]))
        drives.append(wf)
    n = max(d.n for d in drives)
    n = max(n, int(round(min_duration * sample_rate)))
    # tail silence up to an FFT-friendly length: every later stage runs
    # whole-record transforms, and a poorly factorable length is severalfold
    # slower
    n = fftpack.next_fast_len(n)
    drives = [pad_to(d, n) for d in drives]

    # carrier comb at the channel centers
    amp = np.sqrt(10.0 ** (power_per_tone_dbm / 10.0) * 1e-3)
    carriers = np.zeros(n, dtype=np.complex128)
    for ch in plan.channels:
        carriers += amp * _tone_phasor(ch.center_freq - ref, n,
                                       1.0 / sample_rate)
    out = ComplexWaveform(carriers, sample_rate, ref_freq=ref)

    loss = 10.0 ** (-BUS_LOSS_DB_PER_STAGE / 20.0)
    for ch, drive in zip(plan.channels, drives):
        ring = slope_biased_ring(ch.center_freq, **ring_kwargs)
        cfg = IqMrmConfig(ring, ring, sideband=sideband)
        i_drive, q_drive = _ssb_drives(drive, ring, drive_depth)
        out = iq_mrm_ssb(out, cfg, i_drive, q_drive, method=method)
        out = out.copy_with(samples=out.samples * loss)
    return out


# ---------------------------------------------------------------------------
# Smart edge


def smart_edge_overlay(field_in: ComplexWaveform, plan: WdmPlan, rof_payloads,
                       subcarrier_clock_volt: float = 0.4,
                       carrier_retain_fraction: float = 0.6,
                       drive_depth: float = 0.25,
                       ring_kwargs: dict | None = None) -> ComplexWaveform:
    """Overlay analog radio tunnels onto each WDM channel.

    Per channel: a clock-driven ring splits part of the carrier into
    +/-f_s subcarriers (``carrier_retain_fraction`` of the carrier power is
    left for the digital subband), then one slope-biased ring per tunnel
    modulates the +f_s and -f_s subcarriers with the radio payloads.
    ``rof_payloads`` holds, per channel, up to two real electrical
    waveforms already centered at their radio IF.
    """
    if len(rof_payloads) != plan.n_channels:
        raise ConfigError(
            f"{len(rof_payloads)} payload groups for {plan.n_channels} channels"
        )
    ring_kwargs = ring_kwargs or {}
    out = field_in
    loss = 10.0 ** (-BUS_LOSS_DB_PER_STAGE / 20.0)
    for ch, payloads in zip(plan.channels, rof_payloads):
        payloads = list(payloads or [])
        if len(payloads) > 2:
            raise ConfigError("at most two radio tunnels per channel")
        f_s = ch.rof_subcarrier_offset
        gap = f_s - ch.digital_subband / 2.0
        if payloads:
            carrier_ok = band_power(
                out, ch.center_freq - CARRIER_WINDOW_HZ,
                ch.center_freq + CARRIER_WINDOW_HZ)
            if carrier_ok <= 0.0:
                raise SimulationError(
                    f"no carrier found at {ch.center_freq/1e12:.4f} THz"
                )
            for p in payloads:
                _check_payload_fits(p, ch)
            # subcarrier generator: biased off the null so part of the
            # carrier survives for the digital subband
            gen = slope_biased_ring(ch.center_freq,
                                    slope_fraction=_null_offset_fraction(
                                        carrier_retain_fraction),
                                    **ring_kwargs)
            # quasi-static window: just the carrier line; anything wider
            # would pull the digital subband into the time-varying path
            gen_off = ch.center_freq - gen.effective_resonance
            out = generate_subcarriers(
                out, gen, clock_freq=f_s,
                clock_amplitude_volt=subcarrier_clock_volt,
                tone_window_hz=gen_off + CARRIER_WINDOW_HZ)
            out = out.copy_with(samples=out.samples * loss)
            for sign, payload in zip((+1.0, -1.0), payloads):
                ring = slope_biased_ring(ch.center_freq + sign * f_s,
                                         **ring_kwargs)
                drive = scale_drive_to_depth(payload, ring, drive_depth)
                drive = pad_to(drive, out.n)
                # cover the subcarrier line but stay clear of the digital
                # subband edge on the carrier side
                ring_off = abs(ch.center_freq + sign * f_s
                               - ring.effective_resonance)
                window = ring_off + 0.5 * (gap - ring_off)
                out = apply_mrm(out, ring, drive, method="tone",
                                tone_window_hz=window)
                out = out.copy_with(samples=out.samples * loss)
        else:
            # undriven stages still cost bus insertion loss
            out = out.copy_with(samples=out.samples * loss ** 3)
    return out


def _check_payload_fits(payload: ComplexWaveform, ch: WdmChannel) -> None:
    """A radio tunnel must fit between the digital subband and slot edges."""
    spec2 = np.abs(fftpack.fft(payload.samples)) ** 2
    f = np.abs(payload.baseband_freqs())
    total = float(np.sum(spec2))
    if total <= 0:
        return
    f_s = ch.rof_subcarrier_offset
    # 99.5%-power extent must stay inside the allowed band: compare the
    # out-of-band power directly instead of sorting the spectrum
    extent = min(ch.slot_width / 2.0 - f_s, f_s - ch.digital_subband / 2.0)
    out_of_band = float(np.sum(spec2[f >= extent]))
    if out_of_band > 5e-3 * total:
        raise ConfigError(
            f"radio payload spills past +/-{extent/1e9:.2f} GHz around the "
            f"subcarrier and does not fit between the digital subband and "
            f"slot edges"
        )


def _null_offset_fraction(retain: float) -> float:
    """Slope offset (in linewidths) leaving ``retain`` of the carrier power.

    Lorentzian notch model: |H|^2 = d^2/(1+d^2) with d the detuning in
    half-linewidths, so d = sqrt(retain/(1-retain)); returned in FWHM units.
    """
    if not 0.0 < retain < 1.0:
        raise ConfigError("carrier_retain_fraction must be in (0, 1)")
    return 0.5 * np.sqrt(retain / (1.0 - retain))


@dataclass
class InterceptResult:
    rof_electrical: ComplexWaveform
    through: ComplexWaveform
    dropped_power_dbm: float


def smart_edge_intercept_uplink(field_in: ComplexWaveform, plan: WdmPlan,
                                channel_index: int,
                                band_offsets: tuple = (-3e9, -1e9),
                                carrier_tap: float = 0.25, order: int = 4,
                                pd: PdParams | None = None) -> InterceptResult:
    """Drop and detect the radio uplink subband of one channel.

    The drop ring is solved so it passes the uplink band and taps
    ``carrier_tap`` of the carrier for direct detection, leaving the rest
    of the carrier and the digital uplink on the through path.
    """
    try:
        ch = plan.channels[channel_index]
    except IndexError:
        raise ConfigError(f"no channel {channel_index} in the plan") from None
    slot_lo = ch.center_freq - ch.slot_width / 2.0
    slot_hi = ch.center_freq + ch.slot_width / 2.0
    if band_power(field_in, slot_lo, slot_hi) <= 0.0:
        raise SimulationError(
            f"channel {channel_index} carries no power; nothing to intercept"
        )
    spec = solve_carrier_tap_filter(band_offsets[0], band_offsets[1],
                                    carrier_tap, order)
    dropped, through = drop_filter(field_in, ch.center_freq + spec.center_offset,
                                   spec.bandwidth, spec.order)
    rof = dc_block(photodetect(dropped, pd or PdParams()))
    return InterceptResult(rof, through, dropped.power_dbm())


# ---------------------------------------------------------------------------
# Optical network unit


@dataclass
class OnuReceiveResult:
    broadband: object                # BerReport
    broadband_electrical: ComplexWaveform
    rof: list                        # dicts: waveform, power_dbm, center_offset
    residual: ComplexWaveform
    carrier_in_dbm: float
    carrier_after_broadband_dbm: float
    carrier_residual_dbm: float


def onu_receive(field_in: ComplexWaveform, cfg: OnuConfig,
                ofdm_cfg: OfdmConfig, tx_bits=None,
                max_symbols: int | None = None) -> OnuReceiveResult:
    """Strip the broadband subband and radio tunnels off the bus.

    The broadband drop carries ``carrier_tap_fraction`` of the carrier and
    is direct-detected and demodulated; each radio drop is direct-detected
    and returned as an electrical waveform.  The residual field (including
    the remaining carrier) is returned for remodulation.
    """
    from .metrics import ber_evm_metrics
    from .ofdm import demodulate_ofdm
    from .waveform import downconvert

    f_c = cfg.channel_center
    slot_lo = f_c - cfg.slot_width / 2.0
    slot_hi = f_c + cfg.slot_width / 2.0
    if band_power(field_in, slot_lo, slot_hi) <= 0.0:
        raise SimulationError("ONU slot not present in the input field")
    carrier_in = band_power(field_in, f_c - CARRIER_WINDOW_HZ,
                            f_c + CARRIER_WINDOW_HZ)

    loss = 10.0 ** (-BUS_LOSS_DB_PER_STAGE / 20.0)
    spec = cfg.broadband_filter
    dropped, bus = drop_filter(field_in, f_c + spec.center_offset,
                               spec.bandwidth, spec.order)
    bus = bus.copy_with(samples=bus.samples * loss)

    # direct detection beats the SSB content against the tapped carrier,
    # recovering the real IF signal regardless of which optical sideband
    # carried it, so no spectral flip is ever needed here
    electrical = dc_block(photodetect(dropped, cfg.pd))
    base = downconvert(electrical, cfg.digital_if)
    rx_bits, evm = demodulate_ofdm(ofdm_cfg, base, max_symbols=max_symbols)
    if tx_bits is not None:
        report = ber_evm_metrics(np.asarray(tx_bits)[: rx_bits.size], rx_bits,
                                 evm_rms=evm)
    else:
        report = ber_evm_metrics([], [], evm_rms=evm)

    carrier_bb = band_power(bus, f_c - CARRIER_WINDOW_HZ,
                            f_c + CARRIER_WINDOW_HZ)
    rof_out = []
    for rspec in cfg.rof_filters:
        rdrop, bus = drop_filter(bus, f_c + rspec.center_offset,
                                 rspec.bandwidth, rspec.order)
        bus = bus.copy_with(samples=bus.samples * loss)
        rof_out.append({
            "waveform": dc_block(photodetect(rdrop, cfg.pd)),
            "power_dbm": rdrop.power_dbm(),
            "center_offset": rspec.center_offset,
        })
    carrier_res = band_power(bus, f_c - CARRIER_WINDOW_HZ,
                             f_c + CARRIER_WINDOW_HZ)
    to_dbm = lambda p: 10.0 * np.log10(max(p, 1e-30) * 1e3)
    return OnuReceiveResult(report, electrical, rof_out, bus,
                            to_dbm(carrier_in), to_dbm(carrier_bb),
                            to_dbm(carrier_res))


@dataclass
class RemodResult:
    waveform: ComplexWaveform
    uplink_to_residual_db: float | None
    uplink_centroid_offset: float | None
    downlink_centroid_offset: float | None


def onu_remodulate(residual: ComplexWaveform, cfg: OnuConfig, uplink_bits=None,
                   uplink_rof: ComplexWaveform | None = None,
                   ofdm_cfg: OfdmConfig | None = None,
                   guard_s: float = 0.0) -> RemodResult:
    """Remodulate the residual carrier with the uplink, opposite sideband.

    The uplink drive is the OFDM-modulated ``uplink_bits`` at the digital
    IF plus an optional radio waveform already at its radio IF.  Reports
    the ratio of uplink power to the residual downlink power on the bus.
    ``guard_s`` delays the uplink frame so return-path fiber walk-off
    cannot push its preamble out of the record.
    """
    f_c = cfg.channel_center
    carrier = band_power(residual, f_c - CARRIER_WINDOW_HZ,
                         f_c + CARRIER_WINDOW_HZ)
    carrier_dbm = 10.0 * np.log10(max(carrier, 1e-30) * 1e3)
    if carrier_dbm < cfg.min_residual_carrier_dbm:
        raise SimulationError(
            f"residual carrier {carrier_dbm:.1f} dBm is below the "
            f"{cfg.min_residual_carrier_dbm:.1f} dBm remodulation minimum"
        )

    parts = []
    if uplink_bits is not None:
        if ofdm_cfg is None:
            raise ConfigError("uplink bits need an OFDM config")
        base = generate_ofdm(ofdm_cfg, np.asarray(uplink_bits))
        wf = resample_to(base, residual.sample_rate)
        wf = upconvert_real(wf, cfg.digital_if,
                            half_bw=0.55 * ofdm_cfg.occupied_bandwidth)
        n_guard = int(round(guard_s * residual.sample_rate))
        if n_guard:
            wf = wf.copy_with(samples=np.concatenate(
                [np.zeros(n_guard, dtype=np.complex128), wf.samples]))
        parts.append(wf)
    if uplink_rof is not None:
        if uplink_rof.sample_rate != residual.sample_rate:
            uplink_rof = resample_to(uplink_rof, residual.sample_rate)
        parts.append(uplink_rof)

    ring = slope_biased_ring(f_c, **cfg.ring_kwargs)
    mrm = IqMrmConfig(ring, ring, sideband=cfg.uplink_sideband)
    if not parts or cfg.uplink_drive_depth == 0.0:
        zero = residual.copy_with(
            samples=np.zeros(residual.n, dtype=np.complex128), ref_freq=0.0)
        out = iq_mrm_ssb(residual, mrm, zero, zero)
        down_c = _side_centroid(residual, f_c, cfg.slot_width,
                                "lower" if cfg.uplink_sideband == "upper"
                                else "upper")
        return RemodResult(out, None, None, down_c)

    n = max(p.n for p in parts)
    drive_samples = np.zeros(n, dtype=np.complex128)
    for p in parts:
        drive_samples[: p.n] += p.samples
    drive = ComplexWaveform(drive_samples, residual.sample_rate, ref_freq=0.0)
    drive = pad_to(scale_drive_to_depth(drive, ring, cfg.uplink_drive_depth),
                   residual.n)
    out = iq_mrm_ssb(residual, mrm, drive, hilbert_pair(drive))

    up_side = cfg.uplink_sideband
    down_side = "lower" if up_side == "upper" else "upper"
    out_spec2 = np.abs(fftpack.fft(out.samples)) ** 2
    p_up = _side_power(out, f_c, cfg.slot_width, up_side, spec2=out_spec2)
    p_down = _side_power(out, f_c, cfg.slot_width, down_side, spec2=out_spec2)
    ratio = 10.0 * np.log10(p_up / p_down) if p_down > 0 else np.inf
    return RemodResult(out, float(ratio),
                       _side_centroid(out, f_c, cfg.slot_width, up_side,
                                      spec2=out_spec2),
                       _side_centroid(residual, f_c, cfg.slot_width, down_side))


def _side_mask(wf: ComplexWaveform, center: float, slot_width: float,
               side: str):
    f = wf.abs_freqs()
    off = f - center
    lo, hi = (CARRIER_WINDOW_HZ, slot_width / 2.0)
    if side == "lower":
        return (off <= -lo) & (off >= -hi)
    return (off >= lo) & (off <= hi)


def _side_power(wf: ComplexWaveform, center: float, slot_width: float,
                side: str, spec2: np.ndarray | None = None) -> float:
    if spec2 is None:
        spec2 = np.abs(fftpack.fft(wf.samples)) ** 2
    return float(np.sum(spec2[_side_mask(wf, center, slot_width, side)])
                 / wf.n ** 2)


def _side_centroid(wf: ComplexWaveform, center: float, slot_width: float,
                   side: str, spec2: np.ndarray | None = None) -> float | None:
    if spec2 is None:
        spec2 = np.abs(fftpack.fft(wf.samples)) ** 2
    mask = _side_mask(wf, center, slot_width, side)
    total = np.sum(spec2[mask])
    if total <= 0:
        return None
    f = wf.abs_freqs()
    return float(np.sum((f[mask] - center) * spec2[mask]) / total)
