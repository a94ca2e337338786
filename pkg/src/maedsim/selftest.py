"""Fast property checks runnable without the test suite (``maedsim selftest``)."""

import os
import tempfile

import numpy as np

from .channel import JammerProfile, SystemConfig, frame_rng, synthesize_frame
from .harness import ExperimentSpec, emit_csv, run_experiment
from .linalg import dominant_eigenvector, orth_complement_projector, right_pseudo_inverse
from .solver import SolverConfig, gradient_f, objective_f, run_maed


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def check_pseudo_inverse(rng):
    S = _crandn(rng, 4, 10)
    Sp = right_pseudo_inverse(S)
    return (
        np.linalg.norm(S @ Sp @ S - S) <= 1e-9 * np.linalg.norm(S)
        and np.linalg.norm(Sp @ S @ Sp - Sp) <= 1e-9 * np.linalg.norm(Sp)
        and np.allclose(S @ Sp, (S @ Sp).conj().T, atol=1e-9)
        and np.allclose(Sp @ S, (Sp @ S).conj().T, atol=1e-9)
    )


def check_projector(rng):
    p = _crandn(rng, 16)
    P = orth_complement_projector(p)
    B = p.size
    return (
        np.linalg.norm(P @ P - P) <= 1e-12 * B
        and np.linalg.norm(P - P.conj().T) <= 1e-12 * B
        and np.linalg.norm(P @ p) <= 1e-12 * np.linalg.norm(p)
    )


def check_gradient(rng, trials=20):
    B, U, T, K = 8, 4, 4, 12
    for _ in range(trials):
        Y = _crandn(rng, B, K)
        S = _crandn(rng, U, K)
        P = orth_complement_projector(_crandn(rng, B))
        G = gradient_f(P, Y, S)
        Dir = np.zeros((U, K), dtype=complex)
        Dir[:, T:] = _crandn(rng, U, K - T)
        eps = 1e-5
        fd = (objective_f(P, Y, S + eps * Dir) - objective_f(P, Y, S - eps * Dir)) / (2 * eps)
        model = -2.0 * np.vdot(G, Dir).real
        if abs(fd - model) > 1e-4 * max(abs(fd), 1e-12):
            return False
    return True


def check_rank1_identifiability(trials=10):
    cfg = SystemConfig(snr_db=np.inf, jammer=JammerProfile(kind="barrage", strength_db=25.0))
    for i in range(trials):
        frame = synthesize_frame(cfg, frame_rng(12345, 0, i))
        res = run_maed(frame.Y, frame.truth.S_T, cfg.Es)
        hj = frame.truth.hj / np.linalg.norm(frame.truth.hj)
        if abs(np.vdot(res.p_hat, hj)) < 0.99:
            return False
    return True


def check_dominant_eigenvector(rng):
    q = _crandn(rng, 12)
    v = dominant_eigenvector(np.outer(q, q.conj()))
    return abs(np.vdot(v, q / np.linalg.norm(q))) >= 1 - 1e-9


def check_csv_determinism():
    spec = ExperimentSpec(
        base=SystemConfig(B=16, U=4, T=4, D=8, jammer=JammerProfile(kind="barrage")),
        snr_grid_db=(0.0, 10.0),
        frames_per_point=3,
        master_seed=7,
        solver=SolverConfig(t_max=5),
    )
    outputs = []
    with tempfile.TemporaryDirectory() as tmp:
        for k in range(2):
            path = os.path.join(tmp, f"run{k}.csv")
            emit_csv(run_experiment(spec), path, include_wallclock=False)
            with open(path, "rb") as fh:
                outputs.append(fh.read())
    return outputs[0] == outputs[1]


def run(verbose=True):
    rng = np.random.default_rng(2024)
    checks = [
        ("pseudo-inverse Moore-Penrose identities", lambda: check_pseudo_inverse(rng)),
        ("projector hermitian, idempotent, annihilates p", lambda: check_projector(rng)),
        ("dominant eigenvector of rank-1 matrix", lambda: check_dominant_eigenvector(rng)),
        ("gradient vs central finite differences", lambda: check_gradient(rng)),
        ("rank-1 jammer identifiability", check_rank1_identifiability),
        ("same seed gives identical CSV", check_csv_determinism),
    ]
    ok = True
    for name, fn in checks:
        passed = bool(fn())
        ok &= passed
        if verbose:
            print(f"[{'PASS' if passed else 'FAIL'}] {name}")
    return ok
