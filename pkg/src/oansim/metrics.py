"""BER/EVM accounting and the closed-form AWGN BER oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ConfigError

#: Hard-decision FEC limit for 7%-overhead codes; configurable per call.
DEFAULT_FEC_THRESHOLD = 3.8e-3

_SQUARE_QAM = (4, 16, 64)


@dataclass
class BerReport:
    bit_errors: int
    total_bits: int
    ber: float
    evm_rms: float
    passes_fec: bool
    fec_threshold: float = DEFAULT_FEC_THRESHOLD

    def to_dict(self) -> dict:
        return {
            "bit_errors": self.bit_errors,
            "total_bits": self.total_bits,
            "ber": self.ber,
            "evm_rms": self.evm_rms,
            "passes_fec": self.passes_fec,
            "fec_threshold": self.fec_threshold,
        }


def ber_evm_metrics(tx_bits, rx_bits, symbols=None, evm_rms: float | None = None,
                    fec_threshold: float = DEFAULT_FEC_THRESHOLD) -> BerReport:
    """Exact bit-error count plus RMS EVM of the decision symbols.

    ``passes_fec`` is a strict inequality against the threshold.  EVM can be
    supplied directly (``evm_rms``) when the demodulator already computed it;
    otherwise it is derived from ``symbols`` against their hard decisions.
    """
    tx = np.asarray(tx_bits, dtype=np.int64).ravel()
    rx = np.asarray(rx_bits, dtype=np.int64).ravel()
    if tx.size != rx.size:
        raise ConfigError(f"bit sequences differ in length: {tx.size} vs {rx.size}")
    errors = int(np.sum(tx != rx))
    ber = errors / tx.size if tx.size else 0.0
    if evm_rms is None:
        if symbols is not None:
            from .ofdm import qam_decide  # local import avoids a cycle
            sym = np.asarray(symbols).ravel()
            order = 4  # decision grid only matters through nearest neighbors
            dec = qam_decide(sym, order)
            evm_rms = float(np.sqrt(np.mean(np.abs(sym - dec) ** 2)
                                    / np.mean(np.abs(dec) ** 2)))
        else:
            evm_rms = float("nan")
    return BerReport(errors, int(tx.size), ber, float(evm_rms),
                     ber < fec_threshold, fec_threshold)


def qfunc(x):
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def analytic_awgn_ber(qam_order: int, ebn0_db: float) -> float:
    """Gray-coded square-QAM BER, nearest-neighbor approximation."""
    if qam_order not in _SQUARE_QAM:
        raise ConfigError(f"unsupported QAM order {qam_order}")
    if np.isinf(ebn0_db) and ebn0_db > 0:
        return 0.0
    m = qam_order
    k = np.log2(m)
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    arg = np.sqrt(3.0 * k * ebn0 / (m - 1.0))
    return float(4.0 / k * (1.0 - 1.0 / np.sqrt(m)) * qfunc(arg))
