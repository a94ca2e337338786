"""Jammer-resilient massive MU-MIMO detection: MAED, baselines and a BER harness."""

from .baselines import (
    DetectorOutput,
    detect_genie_pos,
    detect_jl_jed,
    detect_lmmse_baseline,
    detect_maed,
    lmmse_detect,
    ls_channel_estimate,
)
from .channel import FrameTruth, JammerProfile, ReceivedFrame, SystemConfig, frame_rng, synthesize_frame
from .harness import BerRecord, ExperimentSpec, emit_csv, run_experiment
from .solver import MaedResult, SolverConfig, run_maed

__version__ = "0.1.0"
