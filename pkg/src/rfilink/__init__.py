"""Multi-band (baseband PAM + carrier QAM) serial link simulator and planner."""

from __future__ import annotations

__version__ = "0.1.0"

from .channel import (
    BitResponse,
    ChannelError,
    ChannelModel,
    FrequencyResponse,
    Identity,
    LossyLine,
    LumpedC,
    Notch,
    Notched,
    Tabulated,
    add_awgn,
    apply_channel,
    evaluate_response,
    single_bit_response,
    synthesize_impulse,
)
from .cognitive import (
    AllocationConstraints,
    AllocationResult,
    ChannelProfile,
    ModulationTable,
    allocate_bands,
    predict_band_snr,
    probe_channel,
    required_snr_table,
)
from .equalizer import CtleConfig, DfeState, TxFir, ctle_apply, dfe_run, lms_train, tx_fir_apply
from .fileio import load_channel_csv
from .link import LinkReport, run_link
from .metrics import eye_histogram, measure_ber, measure_evm
from .modem import Band, BandPlan, Modulation, compose_tx, demap_symbols, demodulate_band, map_symbols, modulate_band
from .scenario import ScenarioConfig, load_scenario
from .signal import BitStream, ComplexEnvelope, SampledWaveform, estimate_psd, mix_carrier, prbs_generate, rrc_taps, shape_symbols
