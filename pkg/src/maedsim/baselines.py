"""Reference detectors the MAED results are compared against.

* ``lmmse``: least-squares channel estimate from the pilots, then LMMSE data
  detection; ignores the jammer.
* ``geniepos``: the same pipeline after projecting the receive signals onto
  the orthogonal complement of the true jammer channel.
* ``jljed``: the MAED iteration without the projector, run on a jammer-free
  copy of the frame.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError
from .linalg import as_matrix, orth_complement_projector, right_pseudo_inverse, solve_hermitian_posdef
from .solver import SolverConfig, hard_decision, run_maed


@dataclass
class DetectorOutput:
    S_D_hard: np.ndarray
    bits: np.ndarray
    H_hat: np.ndarray | None = None
    S_D_soft: np.ndarray | None = None


def ls_channel_estimate(Y_T, S_T):
    """``Y_T S_T^+``; equals ``Y_T S_T^H / (T Es)`` for orthogonal pilots."""
    Y_T, S_T = as_matrix(Y_T), as_matrix(S_T)
    if Y_T.shape[1] != S_T.shape[1]:
        raise DimensionError(f"Y_T {Y_T.shape} and S_T {S_T.shape} differ in pilot length")
    return Y_T @ right_pseudo_inverse(S_T)


def lmmse_detect(H_hat, Y_D, N0, Es):
    """``(H^H H + N0/Es I)^{-1} H^H Y_D`` followed by QPSK hard decisions."""
    H_hat, Y_D = as_matrix(H_hat), as_matrix(Y_D)
    if H_hat.shape[0] != Y_D.shape[0]:
        raise DimensionError(f"channel {H_hat.shape} and data {Y_D.shape} differ in antennas")
    Hh = H_hat.conj().T
    gram = Hh @ H_hat
    gram[np.diag_indices_from(gram)] += N0 / Es
    S_soft = solve_hermitian_posdef(gram, Hh @ Y_D)
    S_hard, bits = hard_decision(S_soft, Es)
    return DetectorOutput(S_D_hard=S_hard, bits=bits, H_hat=H_hat, S_D_soft=S_soft)


def detect_lmmse_baseline(frame, cfg):
    H_hat = ls_channel_estimate(frame.Y_T, frame.truth.S_T)
    return lmmse_detect(H_hat, frame.Y_D, frame.truth.N0, cfg.Es)


def detect_genie_pos(frame, cfg):
    """LS + LMMSE in the subspace orthogonal to the true jammer channel."""
    P = orth_complement_projector(frame.truth.hj)
    Y_T = P @ frame.Y_T
    Y_D = P @ frame.Y_D
    H_hat = ls_channel_estimate(Y_T, frame.truth.S_T)
    return lmmse_detect(H_hat, Y_D, frame.truth.N0, cfg.Es)


def detect_jl_jed(frame_jammerless, cfg, solver=SolverConfig()):
    """JED without projection. Pass a frame whose jammer term is zero."""
    if solver.project_enabled:
        solver = replace(solver, project_enabled=False)
    res = run_maed(frame_jammerless.Y, frame_jammerless.truth.S_T, cfg.Es, solver)
    return DetectorOutput(S_D_hard=res.S_D_hard, bits=res.bits, S_D_soft=res.S_D_soft)


def detect_maed(frame, cfg, solver=SolverConfig()):
    res = run_maed(frame.Y, frame.truth.S_T, cfg.Es, solver)
    return DetectorOutput(S_D_hard=res.S_D_hard, bits=res.bits, S_D_soft=res.S_D_soft)
