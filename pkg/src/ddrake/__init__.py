"""Delay-Doppler (OTFS) link simulator with an iterative MRC rake detector."""

from .channel import (
    ChannelModel,
    ChannelPath,
    DopplerSpreadTable,
    apply_channel,
    apply_channel_time,
    build_doppler_spread_table,
    generate_eva,
    load_channel_json,
    phase_table,
)
from .detector import (
    DetectorConfig,
    DetectorResult,
    MrcDetector,
    complexity_terms,
    detect,
    soft_llrs,
)
from .frame import (
    DelayDopplerGrid,
    FrameConfig,
    QamAlphabet,
    extract_payload,
    make_alphabet,
    map_to_grid,
    ml_slice,
    qam_demodulate_hard,
    qam_modulate,
)
from .harness import MetricRecord, SimSpec, emit_csv, run_campaign, simulate_frame
from .tfeq import build_h_dd, isfft, mmse_tf_estimate, ofdm_mmse_baseline, sfft

__all__ = [
    "ChannelModel",
    "ChannelPath",
    "DopplerSpreadTable",
    "DelayDopplerGrid",
    "DetectorConfig",
    "DetectorResult",
    "FrameConfig",
    "MetricRecord",
    "MrcDetector",
    "QamAlphabet",
    "SimSpec",
    "apply_channel",
    "apply_channel_time",
    "build_doppler_spread_table",
    "build_h_dd",
    "complexity_terms",
    "detect",
    "emit_csv",
    "extract_payload",
    "generate_eva",
    "isfft",
    "load_channel_json",
    "make_alphabet",
    "map_to_grid",
    "ml_slice",
    "mmse_tf_estimate",
    "ofdm_mmse_baseline",
    "phase_table",
    "qam_demodulate_hard",
    "qam_modulate",
    "run_campaign",
    "sfft",
    "simulate_frame",
    "soft_llrs",
]
