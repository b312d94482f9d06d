"""Configuration-driven end-to-end scenario runner.

A scenario executes the full downlink/uplink pipeline

    transmitter -> feeder fiber -> smart-edge overlay -> distribution
    fiber -> network unit (drop + detect) -> remodulate -> uplink return
    -> smart-edge intercept -> central-office uplink detection

as a sequence of independent seeded bursts whose bit-error counts are
accumulated per sweep point until every tracked signal reaches its bit
target.  Two overlay styles are supported:

* ``subcarrier_tunnels``: radio payloads ride +/-f_s subcarriers
  generated from the carrier (two tunnels per channel);
* ``adjacent_rf``: a group of narrow radio channels is modulated
  single-sideband directly next to the carrier.

Reports are plain dicts (JSON/CSV serializable, stable ordering) carrying
the fully resolved configuration as a reproducibility manifest.
"""

from __future__ import annotations

import copy
import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .channel import (FiberParams, PdParams, amplify_ase, dc_block,
                      photodetect, propagate_fiber)
from .errors import ConfigError, SimulationError, StageError
from .metrics import DEFAULT_FEC_THRESHOLD, ber_evm_metrics
from .ofdm import OfdmConfig, bandwidth_for_bit_rate, demodulate_ofdm, generate_ofdm
from .subsystems import (FilterSpec, OnuConfig, WdmChannel, WdmPlan,
                         olt_transmit, onu_receive, onu_remodulate,
                         scale_drive_to_depth, slope_biased_ring,
                         smart_edge_intercept_uplink, smart_edge_overlay,
                         solve_carrier_tap_filter)
from .devices import IqMrmConfig, drop_filter, hilbert_pair, iq_mrm_ssb
from .waveform import (ComplexWaveform, band_power, downconvert, pad_to, psd,
                       resample_to, set_power_dbm, upconvert_real)

# head-of-frame silence so inter-channel fiber walk-off (a few hundred ps
# for +/-50 GHz channels over tens of km) cannot advance a preamble past
# the start of the simulation record
_WALKOFF_GUARD_S = 2e-9

_DEFAULTS = {
    "fec_threshold": DEFAULT_FEC_THRESHOLD,
    "overlay_style": "subcarrier_tunnels",
    "wdm": {
        "slot_width": 50e9,
        "digital_subband": 20e9,
        "rof_subcarrier_offset": 20e9,
    },
    "digital": {
        "qam_order": 4,
        "n_subcarriers": 64,
        "pilot_spacing": 16,
        "cp_fraction": 1.0 / 16.0,
        "oversampling": 4,
        "sideband": "upper",
        "if_freq": 7e9,
    },
    "tunnels": [],
    "rf_channels": [],
    "rf_groups": [],
    "uplink": {
        "sideband": "lower",
        "drive_depth": 0.2,
        "intercept_carrier_tap": 0.25,
        "intercept_order": 4,
        "rof": None,
    },
    "devices": {
        "ring": {"fsr": 5e12, "coupling": 0.9987, "amplitude": 0.9987,
                 "mod_efficiency": 2e9},
        "drive_depth": 0.25,
        "subcarrier_clock_volt": 0.4,
        "carrier_retain_fraction": 0.6,
        "tx_power_dbm": 3.0,
        "rf_drive_depth": 0.25,
    },
    "spans": {
        "feeder_km": 20.0,
        "distribution_km": 5.0,
        "atten_db_per_km": 0.2,
        "dispersion_ps_nm_km": 17.0,
    },
    "amplifier": None,
    "onu": {
        "carrier_tap_fraction": 0.25,
        "broadband_order": 3,
        "broadband_passband_fraction": 0.97,
        "rof_filter_bandwidth": 9e9,
        "rof_filter_order": 3,
        "rof_carrier_tap_db": None,
        "min_residual_carrier_dbm": -35.0,
        "pd": {"responsivity": 1.0, "thermal_noise_psd": 0.0,
               "include_shot": False},
    },
    "sweep": {
        "bits_per_point": 2.5e5,
        "top_bits": 2.0e6,
        "full_bits": 1.0e7,
        "burst_symbols": 2000,
    },
    "output": "reports",
}

_REQUIRED = ("name", "seed", "sample_rate", "center_freq", "wdm", "digital",
             "spans", "onu", "sweep")

DATA_DIR = Path(__file__).parent / "data"


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def builtin_config_path(name: str) -> Path:
    """Path of a shipped scenario config (e.g. 'scenario_a')."""
    path = DATA_DIR / f"{name}.yaml"
    if not path.exists():
        shipped = sorted(p.stem for p in DATA_DIR.glob("*.yaml"))
        raise ConfigError(f"no built-in scenario '{name}'; shipped: {shipped}")
    return path


@dataclass
class ScenarioConfig:
    raw: dict

    # ---------------------------------------------------------- validation
    def __post_init__(self):
        missing = [k for k in _REQUIRED if k not in self.raw]
        if missing:
            raise ConfigError(f"config missing required sections: {missing}")
        if not isinstance(self.raw["seed"], int):
            raise ConfigError("seed must be an integer (no ambient randomness)")
        style = self.raw["overlay_style"]
        if style not in ("subcarrier_tunnels", "adjacent_rf"):
            raise ConfigError(f"unknown overlay_style '{style}'")
        if "channel_offsets" not in self.raw["wdm"]:
            raise ConfigError("wdm section needs channel_offsets")
        self.plan()           # validates slots
        self.digital_ofdm()   # validates modem geometry
        sweep = self.raw["sweep"]
        if "rx_power_dbm" not in sweep:
            raise ConfigError("sweep section needs rx_power_dbm values")
        if style == "adjacent_rf":
            if not self.raw["rf_channels"]:
                raise ConfigError("adjacent_rf style needs rf_channels")
            if not self.raw["rf_groups"]:
                raise ConfigError("adjacent_rf style needs rf_groups")
            seen = sorted(i for g in self.raw["rf_groups"] for i in g)
            if seen != list(range(len(self.raw["rf_channels"]))):
                raise ConfigError(
                    "rf_groups must partition the rf_channels indices")

    # ---------------------------------------------------------- accessors
    @property
    def name(self) -> str:
        return self.raw["name"]

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def sample_rate(self) -> float:
        return float(self.raw["sample_rate"])

    @property
    def style(self) -> str:
        return self.raw["overlay_style"]

    @property
    def fec_threshold(self) -> float:
        return float(self.raw["fec_threshold"])

    def plan(self) -> WdmPlan:
        wdm = self.raw["wdm"]
        f0 = float(self.raw["center_freq"])
        return WdmPlan([
            WdmChannel(f0 + float(off), float(wdm["slot_width"]),
                       float(wdm["digital_subband"]),
                       float(wdm["rof_subcarrier_offset"]))
            for off in wdm["channel_offsets"]
        ])

    def _ofdm_from(self, section: dict, seed_offset: int) -> OfdmConfig:
        if "occupied_bandwidth" in section:
            bw = float(section["occupied_bandwidth"])
        elif "bit_rate" in section:
            bw = bandwidth_for_bit_rate(
                float(section["bit_rate"]),
                qam_order=int(section.get("qam_order", 4)),
                cp_fraction=float(section.get("cp_fraction", 1.0 / 16.0)),
                pilot_spacing=int(section.get("pilot_spacing", 16)),
                n_subcarriers=int(section.get("n_subcarriers", 64)))
        else:
            raise ConfigError(
                "signal section needs occupied_bandwidth or bit_rate")
        return OfdmConfig(
            n_subcarriers=int(section.get("n_subcarriers", 64)),
            qam_order=int(section.get("qam_order", 4)),
            cp_fraction=float(section.get("cp_fraction", 1.0 / 16.0)),
            occupied_bandwidth=bw,
            pilot_spacing=int(section.get("pilot_spacing", 16)),
            oversampling=int(section.get("oversampling", 4)),
            seed=self.seed + seed_offset)

    def digital_ofdm(self) -> OfdmConfig:
        return self._ofdm_from(self.raw["digital"], 1)

    def tunnel_ofdm(self, index: int) -> OfdmConfig:
        return self._ofdm_from(self.raw["tunnels"][index], 10 + index)

    def rf_ofdm(self, index: int) -> OfdmConfig:
        return self._ofdm_from(self.raw["rf_channels"][index], 30 + index)

    def uplink_digital_ofdm(self) -> OfdmConfig:
        return self._ofdm_from(self.raw["digital"], 2)

    def uplink_rof_ofdm(self) -> OfdmConfig | None:
        rof = self.raw["uplink"]["rof"]
        return self._ofdm_from(rof, 3) if rof else None

    def ring_kwargs(self) -> dict:
        ring = self.raw["devices"]["ring"]
        return {"fsr": float(ring["fsr"]), "coupling": float(ring["coupling"]),
                "amplitude": float(ring["amplitude"]),
                "mod_efficiency": float(ring["mod_efficiency"])}

    def fiber(self, which: str) -> FiberParams:
        spans = self.raw["spans"]
        return FiberParams(float(spans[f"{which}_km"]),
                           atten_db_per_km=float(spans["atten_db_per_km"]),
                           dispersion_ps_nm_km=float(spans["dispersion_ps_nm_km"]))

    def pd(self, seed: int) -> PdParams:
        pd = self.raw["onu"]["pd"]
        return PdParams(responsivity=float(pd["responsivity"]),
                        thermal_noise_psd=float(pd["thermal_noise_psd"]),
                        include_shot=bool(pd["include_shot"]), seed=seed)

    def onu_config(self, channel_center: float, seed: int) -> OnuConfig:
        onu = self.raw["onu"]
        dig = self.raw["digital"]
        ofdm = self.digital_ofdm()
        f_if = float(dig["if_freq"])
        half = 0.55 * ofdm.occupied_bandwidth
        lo, hi = f_if - half, f_if + half
        if dig["sideband"] == "lower":
            lo, hi = -hi, -lo
        broadband = solve_carrier_tap_filter(
            lo, hi, float(onu["carrier_tap_fraction"]),
            int(onu["broadband_order"]),
            passband_fraction=float(onu["broadband_passband_fraction"]))

        rof_filters = []
        if self.style == "subcarrier_tunnels":
            f_s = float(self.raw["wdm"]["rof_subcarrier_offset"])
            signs = (+1.0, -1.0)
            for i in range(len(self.raw["tunnels"])):
                rof_filters.append(FilterSpec(
                    signs[i] * f_s, float(onu["rof_filter_bandwidth"]),
                    int(onu["rof_filter_order"])))
        else:
            tap_db = float(onu["rof_carrier_tap_db"])
            groups = self.raw["rf_groups"]
            tap = 1.0 - 10.0 ** (-tap_db / (10.0 * len(groups)))
            for group in groups:
                edges = []
                for idx in group:
                    sec = self.raw["rf_channels"][idx]
                    c = self.rf_ofdm(idx)
                    edges.append(float(sec["if_freq"]) - 0.55 * c.occupied_bandwidth)
                    edges.append(float(sec["if_freq"]) + 0.55 * c.occupied_bandwidth)
                # radio group rides the lower sideband next to the carrier
                rof_filters.append(solve_carrier_tap_filter(
                    -max(edges), -min(edges), tap,
                    int(onu["rof_filter_order"])))

        return OnuConfig(
            channel_center=channel_center,
            broadband_filter=broadband,
            rof_filters=tuple(rof_filters),
            carrier_tap_fraction=float(onu["carrier_tap_fraction"]),
            uplink_sideband=self.raw["uplink"]["sideband"],
            uplink_drive_depth=float(self.raw["uplink"]["drive_depth"]),
            digital_if=f_if,
            slot_width=float(self.raw["wdm"]["slot_width"]),
            min_residual_carrier_dbm=float(onu["min_residual_carrier_dbm"]),
            pd=self.pd(seed),
            ring_kwargs=self.ring_kwargs())


def load_config(path) -> ScenarioConfig:
    """Parse and validate a scenario config file, resolving all defaults."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"config parse error in {p}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(
            f"config {p} is empty or not a mapping; required sections: "
            f"{list(_REQUIRED)}"
        )
    return ScenarioConfig(_deep_merge(_DEFAULTS, raw))


# ---------------------------------------------------------------------------
# Metric accumulation


class _Accumulator:
    def __init__(self, fec_threshold: float):
        self.fec = fec_threshold
        self.errors: dict[str, int] = {}
        self.bits: dict[str, int] = {}
        self.evm_sq: dict[str, float] = {}
        self.evm_n: dict[str, int] = {}

    def add_counts(self, name: str, errors: int, bits: int, evm: float):
        self.errors[name] = self.errors.get(name, 0) + int(errors)
        self.bits[name] = self.bits.get(name, 0) + int(bits)
        if np.isfinite(evm):
            self.evm_sq[name] = self.evm_sq.get(name, 0.0) + evm ** 2 * bits
            self.evm_n[name] = self.evm_n.get(name, 0) + bits

    def add(self, name: str, tx_bits, rx_bits, evm: float):
        tx = np.asarray(tx_bits)[: np.asarray(rx_bits).size]
        rep = ber_evm_metrics(tx, rx_bits, evm_rms=evm)
        self.add_counts(name, rep.bit_errors, rep.total_bits, evm)

    def min_bits(self) -> int:
        return min(self.bits.values()) if self.bits else 0

    def summary(self) -> dict:
        out = {}
        for name in sorted(self.bits):
            bits = self.bits[name]
            ber = self.errors[name] / bits if bits else 0.0
            evm = float(np.sqrt(self.evm_sq[name] / self.evm_n[name])) \
                if self.evm_n.get(name) else float("nan")
            out[name] = {
                "bits": bits,
                "errors": self.errors[name],
                "ber": ber,
                "evm_rms": evm,
                "passes_fec": bool(ber < self.fec),
            }
        return out


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except SimulationError as exc:
        if isinstance(exc, StageError):
            raise
        raise StageError(name, exc) from exc


# ---------------------------------------------------------------------------
# Burst pipelines


def _payload_plan(cfg: ScenarioConfig):
    """Burst window and per-signal symbol counts.

    The window is rounded up to a power-of-two sample count (full-length
    FFTs along the chain then run on friendly sizes) and every signal is
    given as many OFDM symbols as fit.
    """
    dig = cfg.digital_ofdm()
    fs = cfg.sample_rate
    requested = (1 + int(cfg.raw["sweep"]["burst_symbols"])) \
        * dig.frame_duration()
    n_target = 1 << int(np.ceil(np.log2(requested * fs)))
    window = n_target / fs

    def count(ofdm: OfdmConfig) -> int:
        return max(1, int(window / ofdm.frame_duration()) - 1)

    return count(dig), count, n_target


def _run_burst_tunnels(cfg: ScenarioConfig, rx_power_dbm: float, burst_seed: int,
                       acc: _Accumulator, want_spectrum: bool):
    """One burst of the subcarrier-tunnel pipeline (all channels)."""
    rng = np.random.default_rng(burst_seed)
    fs = cfg.sample_rate
    plan = cfg.plan()
    dev = cfg.raw["devices"]
    up = cfg.raw["uplink"]
    dig_cfg = cfg.digital_ofdm()
    n_sym, count, n_target = _payload_plan(cfg)

    dig_bits = [rng.integers(0, 2, n_sym * dig_cfg.bits_per_symbol)
                for _ in plan.channels]
    tunnel_cfgs = [cfg.tunnel_ofdm(i) for i in range(len(cfg.raw["tunnels"]))]
    tunnel_bits = [[rng.integers(0, 2, count(c) * c.bits_per_symbol)
                    for c in tunnel_cfgs] for _ in plan.channels]

    tx = _stage("olt_transmit", olt_transmit, plan, dig_bits, dig_cfg,
                sample_rate=fs,
                power_per_tone_dbm=float(dev["tx_power_dbm"]),
                digital_if=float(cfg.raw["digital"]["if_freq"]),
                sideband=cfg.raw["digital"]["sideband"],
                drive_depth=float(dev["drive_depth"]),
                ring_kwargs=cfg.ring_kwargs(),
                min_duration=n_target / fs, guard_s=_WALKOFF_GUARD_S)

    link = _stage("feeder_fiber", propagate_fiber, tx, cfg.fiber("feeder"))
    if cfg.raw["amplifier"]:
        amp = cfg.raw["amplifier"]
        link = _stage("amplifier", amplify_ase, link, float(amp["gain_db"]),
                      float(amp["nf_db"]), seed=burst_seed + 17)

    payloads = []
    for ch_idx in range(plan.n_channels):
        group = []
        for t_idx, t_cfg in enumerate(tunnel_cfgs):
            wf = resample_to(generate_ofdm(t_cfg, tunnel_bits[ch_idx][t_idx]), fs)
            wf = upconvert_real(wf, float(cfg.raw["tunnels"][t_idx]["if_freq"]),
                                half_bw=0.55 * t_cfg.occupied_bandwidth)
            group.append(pad_to(wf, link.n))
        payloads.append(group)
    link = _stage("smart_edge_overlay", smart_edge_overlay, link, plan, payloads,
                  subcarrier_clock_volt=float(dev["subcarrier_clock_volt"]),
                  carrier_retain_fraction=float(dev["carrier_retain_fraction"]),
                  drive_depth=float(dev["rf_drive_depth"]),
                  ring_kwargs=cfg.ring_kwargs())
    spectrum = psd(link) if want_spectrum else None

    link = _stage("distribution_fiber", propagate_fiber, link,
                  cfg.fiber("distribution"))
    link = set_power_dbm(link, rx_power_dbm)

    extras = {}
    for ch_idx, ch in enumerate(plan.channels):
        onu_cfg = cfg.onu_config(ch.center_freq, burst_seed + 100 + ch_idx)
        res = _stage("onu_receive", onu_receive, link, onu_cfg, dig_cfg,
                     tx_bits=dig_bits[ch_idx], max_symbols=n_sym)
        acc.add_counts(f"ch{ch_idx}:digital", res.broadband.bit_errors,
                       res.broadband.total_bits, res.broadband.evm_rms)
        for t_idx, (item, t_cfg) in enumerate(zip(res.rof, tunnel_cfgs)):
            f_if = float(cfg.raw["tunnels"][t_idx]["if_freq"])
            rxb, evm = _stage(
                "tunnel_demod", demodulate_ofdm, t_cfg,
                downconvert(item["waveform"], f_if),
                max_symbols=count(t_cfg))
            acc.add(f"ch{ch_idx}:tunnel{t_idx + 1}",
                    tunnel_bits[ch_idx][t_idx], rxb, evm)
        if ch_idx == 0:
            extras["onu0"] = (onu_cfg, res)

    # uplink: channel 0's network unit remodulates its residual carrier
    onu_cfg, res = extras["onu0"]
    up_dig_cfg = cfg.uplink_digital_ofdm()
    up_bits = rng.integers(0, 2, n_sym * up_dig_cfg.bits_per_symbol)
    rof_cfg = cfg.uplink_rof_ofdm()
    rof_bits = None
    rof_wave = None
    if rof_cfg is not None:
        rof_bits = rng.integers(0, 2, count(rof_cfg) * rof_cfg.bits_per_symbol)
        rof_wave = upconvert_real(
            resample_to(generate_ofdm(rof_cfg, rof_bits), fs),
            float(up["rof"]["if_freq"]),
            half_bw=0.55 * rof_cfg.occupied_bandwidth)
        n_guard = int(round(_WALKOFF_GUARD_S * fs))
        rof_wave = rof_wave.copy_with(samples=np.concatenate(
            [np.zeros(n_guard, dtype=np.complex128), rof_wave.samples]))
    rem = _stage("onu_remodulate", onu_remodulate, res.residual, onu_cfg,
                 uplink_bits=up_bits, uplink_rof=rof_wave, ofdm_cfg=up_dig_cfg,
                 guard_s=_WALKOFF_GUARD_S)

    back = _stage("uplink_distribution", propagate_fiber, rem.waveform,
                  cfg.fiber("distribution"))
    side = -1.0 if up["sideband"] == "lower" else 1.0
    if rof_cfg is not None:
        f_if = float(up["rof"]["if_freq"])
        half = 0.55 * rof_cfg.occupied_bandwidth
        band = tuple(sorted((side * (f_if - half), side * (f_if + half))))
        icept = _stage("smart_edge_intercept", smart_edge_intercept_uplink,
                       back, plan, 0, band_offsets=band,
                       carrier_tap=float(up["intercept_carrier_tap"]),
                       order=int(up["intercept_order"]),
                       pd=cfg.pd(burst_seed + 300))
        rxb, evm = _stage("uplink_rof_demod", demodulate_ofdm, rof_cfg,
                          downconvert(icept.rof_electrical, f_if),
                          max_symbols=count(rof_cfg))
        acc.add("uplink:rof", rof_bits, rxb, evm)
        back = icept.through

    co = _stage("uplink_feeder", propagate_fiber, back, cfg.fiber("feeder"))
    if plan.n_channels > 1:
        # central-office demux: select the returning channel so the other
        # WDM channels' carrier/sideband beats stay out of the uplink IF
        co, _ = _stage("co_demux", drop_filter, co,
                       plan.channels[0].center_freq,
                       0.9 * plan.channels[0].slot_width, 5)
    co_el = dc_block(_stage("co_detect", photodetect, co,
                            cfg.pd(burst_seed + 301)))
    rxb, evm = _stage("uplink_digital_demod", demodulate_ofdm, up_dig_cfg,
                      downconvert(co_el, float(cfg.raw["digital"]["if_freq"])),
                      max_symbols=n_sym)
    acc.add("uplink:digital", up_bits, rxb, evm)

    ledger = {
        "carrier_in_dbm": res.carrier_in_dbm,
        "carrier_after_broadband_dbm": res.carrier_after_broadband_dbm,
        "carrier_residual_dbm": res.carrier_residual_dbm,
        "rof_tap_cost_db": (res.carrier_after_broadband_dbm
                            - res.carrier_residual_dbm),
    }
    return rem.uplink_to_residual_db, ledger, spectrum


def _run_burst_rf(cfg: ScenarioConfig, rx_power_dbm: float, burst_seed: int,
                  acc: _Accumulator, want_spectrum: bool):
    """One burst of the adjacent-RF pipeline (single channel)."""
    rng = np.random.default_rng(burst_seed)
    fs = cfg.sample_rate
    plan = cfg.plan()
    if plan.n_channels != 1:
        raise ConfigError("adjacent_rf style expects a single WDM channel")
    ch = plan.channels[0]
    dev = cfg.raw["devices"]
    up = cfg.raw["uplink"]
    dig_cfg = cfg.digital_ofdm()
    n_sym, count, n_target = _payload_plan(cfg)

    dig_bits = rng.integers(0, 2, n_sym * dig_cfg.bits_per_symbol)
    rf_cfgs = [cfg.rf_ofdm(i) for i in range(len(cfg.raw["rf_channels"]))]
    rf_bits = [rng.integers(0, 2, count(c) * c.bits_per_symbol)
               for c in rf_cfgs]

    tx = _stage("olt_transmit", olt_transmit, plan, [dig_bits], dig_cfg,
                sample_rate=fs,
                power_per_tone_dbm=float(dev["tx_power_dbm"]),
                digital_if=float(cfg.raw["digital"]["if_freq"]),
                sideband=cfg.raw["digital"]["sideband"],
                drive_depth=float(dev["drive_depth"]),
                ring_kwargs=cfg.ring_kwargs(),
                min_duration=n_target / fs, guard_s=_WALKOFF_GUARD_S)

    link = _stage("feeder_fiber", propagate_fiber, tx, cfg.fiber("feeder"))
    if cfg.raw["amplifier"]:
        amp = cfg.raw["amplifier"]
        link = _stage("amplifier", amplify_ase, link, float(amp["gain_db"]),
                      float(amp["nf_db"]), seed=burst_seed + 17)

    # composite radio drive, placed single-sideband below the carrier
    drive_samples = np.zeros(link.n, dtype=np.complex128)
    for sec, c, bits in zip(cfg.raw["rf_channels"], rf_cfgs, rf_bits):
        wf = upconvert_real(resample_to(generate_ofdm(c, bits), fs),
                            float(sec["if_freq"]),
                            half_bw=0.55 * c.occupied_bandwidth)
        drive_samples[: wf.n] += wf.samples
    drive = ComplexWaveform(drive_samples, fs, ref_freq=0.0)
    ring = slope_biased_ring(ch.center_freq, **cfg.ring_kwargs())
    drive = scale_drive_to_depth(drive, ring, float(dev["rf_drive_depth"]))
    mrm = IqMrmConfig(ring, ring, sideband="lower")
    # quasi-static window: cover the carrier (slope_fraction linewidths
    # above the biased resonance) but stop short of the broadband subband,
    # which must see only the static through response
    slope_off = ch.center_freq - ring.effective_resonance
    dig_edge = (float(cfg.raw["digital"]["if_freq"])
                - 0.55 * dig_cfg.occupied_bandwidth)
    window = slope_off + 0.5 * dig_edge
    link = _stage("smart_edge_overlay", iq_mrm_ssb, link, mrm, drive,
                  hilbert_pair(drive), tone_window_hz=window)
    spectrum = psd(link) if want_spectrum else None

    link = _stage("distribution_fiber", propagate_fiber, link,
                  cfg.fiber("distribution"))
    link = set_power_dbm(link, rx_power_dbm)

    onu_cfg = cfg.onu_config(ch.center_freq, burst_seed + 100)
    res = _stage("onu_receive", onu_receive, link, onu_cfg, dig_cfg,
                 tx_bits=dig_bits, max_symbols=n_sym)
    acc.add_counts("broadband", res.broadband.bit_errors,
                   res.broadband.total_bits, res.broadband.evm_rms)

    for group, item in zip(cfg.raw["rf_groups"], res.rof):
        for idx in group:
            sec = cfg.raw["rf_channels"][idx]
            c = rf_cfgs[idx]
            rxb, evm = _stage("rf_demod", demodulate_ofdm, c,
                              downconvert(item["waveform"],
                                          float(sec["if_freq"])),
                              max_symbols=count(c))
            acc.add(f"rf{idx + 1}", rf_bits[idx], rxb, evm)

    up_dig_cfg = cfg.uplink_digital_ofdm()
    up_bits = rng.integers(0, 2, n_sym * up_dig_cfg.bits_per_symbol)
    rem = _stage("onu_remodulate", onu_remodulate, res.residual, onu_cfg,
                 uplink_bits=up_bits, ofdm_cfg=up_dig_cfg,
                 guard_s=_WALKOFF_GUARD_S)

    back = _stage("uplink_distribution", propagate_fiber, rem.waveform,
                  cfg.fiber("distribution"))
    f_if = float(cfg.raw["digital"]["if_freq"])
    half = 0.55 * up_dig_cfg.occupied_bandwidth
    side = -1.0 if up["sideband"] == "lower" else 1.0
    band = tuple(sorted((side * (f_if - half), side * (f_if + half))))
    icept = _stage("smart_edge_intercept", smart_edge_intercept_uplink,
                   back, plan, 0, band_offsets=band,
                   carrier_tap=float(up["intercept_carrier_tap"]),
                   order=int(up["intercept_order"]),
                   pd=cfg.pd(burst_seed + 300))
    rxb, evm = _stage("uplink_digital_demod", demodulate_ofdm, up_dig_cfg,
                      downconvert(icept.rof_electrical, f_if),
                      max_symbols=n_sym)
    acc.add("uplink:digital", up_bits, rxb, evm)

    ledger = {
        "carrier_in_dbm": res.carrier_in_dbm,
        "carrier_after_broadband_dbm": res.carrier_after_broadband_dbm,
        "carrier_residual_dbm": res.carrier_residual_dbm,
        "rof_tap_cost_db": (res.carrier_after_broadband_dbm
                            - res.carrier_residual_dbm),
    }
    return rem.uplink_to_residual_db, ledger, spectrum


# ---------------------------------------------------------------------------
# Runner


def run_scenario(cfg: ScenarioConfig, full: bool = False,
                 sweep_override=None) -> dict:
    """Execute the scenario; returns the metrics report (a plain dict)."""
    sweep = cfg.raw["sweep"]
    powers = list(sweep_override if sweep_override is not None
                  else sweep["rx_power_dbm"])
    if powers != sorted(powers):
        raise ConfigError("rx_power_dbm sweep must be ascending")
    base_bits = int(float(sweep["bits_per_point"]))
    top_bits = int(float(sweep["full_bits" if full else "top_bits"]))
    burst_fn = (_run_burst_tunnels if cfg.style == "subcarrier_tunnels"
                else _run_burst_rf)

    points = []
    spectrum = None
    for p_idx, power in enumerate(powers):
        is_top = p_idx == len(powers) - 1
        target = top_bits if is_top else base_bits
        acc = _Accumulator(cfg.fec_threshold)
        ratios, ledgers = [], []
        burst = 0
        while burst == 0 or acc.min_bits() < target:
            seed = cfg.seed + 100_000 * (p_idx + 1) + burst
            want_spec = is_top and burst == 0
            ratio, ledger, spec = burst_fn(cfg, power, seed, acc, want_spec)
            if ratio is not None:
                ratios.append(ratio)
            ledgers.append(ledger)
            if spec is not None:
                spectrum = spec
            burst += 1
        point = {
            "rx_power_dbm": float(power),
            "bursts": burst,
            "signals": acc.summary(),
            "uplink_to_residual_db": float(np.mean(ratios)) if ratios else None,
            "carrier_ledger": {k: float(np.mean([ld[k] for ld in ledgers]))
                               for k in ledgers[0]},
        }
        points.append(point)

    report = {
        "name": cfg.name,
        "seed": cfg.seed,
        "full": bool(full),
        "config": cfg.raw,
        "points": points,
    }
    if spectrum is not None:
        freqs, vals = spectrum
        step = max(1, freqs.size // 4096)
        report["spectrum"] = {
            "freq_hz": [float(f) for f in freqs[::step]],
            "psd_dbm_per_hz": [float(10 * np.log10(max(v, 1e-300) * 1e3))
                               for v in vals[::step]],
        }
    return report


# ---------------------------------------------------------------------------
# Emission


def emit_reports(report: dict, out_dir, formats=("json", "csv")) -> list:
    """Write the metrics JSON and plot-ready CSV series; returns paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    name = report["name"]
    written = []
    if "json" in formats:
        path = out / f"{name}_metrics.json"
        path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n",
                        encoding="utf-8")
        written.append(path)
    if "csv" in formats:
        path = out / f"{name}_waterfall.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["signal", "rx_power_dbm", "ber"])
            for point in report.get("points", []):
                for sig in sorted(point["signals"]):
                    writer.writerow([sig, point["rx_power_dbm"],
                                     point["signals"][sig]["ber"]])
        written.append(path)
        if "spectrum" in report:
            path = out / f"{name}_spectrum.csv"
            with path.open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["freq_hz", "psd_dbm_per_hz"])
                for f, v in zip(report["spectrum"]["freq_hz"],
                                report["spectrum"]["psd_dbm_per_hz"]):
                    writer.writerow([f, v])
            written.append(path)
    return written
