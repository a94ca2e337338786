"""Frame generation for the jammed MU-MIMO uplink ``Y = H S + hj w^T + N``.

All randomness flows through a ``numpy.random.Generator`` handed in by the
caller. :func:`frame_rng` derives one independent generator per
``(master_seed, snr_index, frame_index)`` so Monte-Carlo trials can run in
any order, or in parallel, and still reproduce bit-exactly.
"""

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import ConfigError

__all__ = [
    "JAMMER_KINDS",
    "JammerProfile",
    "SystemConfig",
    "FrameTruth",
    "ReceivedFrame",
    "frame_rng",
    "hadamard_pilots",
    "draw_rayleigh_channel",
    "qpsk_map",
    "draw_qpsk_payload",
    "noise_variance_from_snr",
    "duty_cycle",
    "jammer_transmit",
    "synthesize_frame",
]

JAMMER_KINDS = (
    "none",
    "barrage",  # J1
    "pilot",  # J2
    "data",  # J3
    "sparse",  # J4
    "impersonate_single",
    "impersonate_average",
)
CONSTELLATIONS = ("gaussian", "qpsk")
STRENGTH_MODES = ("energy", "power")


def db2lin(db):
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class JammerProfile:
    """Single-antenna jammer behaviour.

    ``strength_mode="energy"`` reads ``strength_db`` as the ratio of total
    jammer receive energy over the coherence block to that of the average UE.
    ``"power"`` reads it as the same ratio restricted to the slots in which
    the jammer is active.
    """

    kind: str = "none"
    constellation: str = "gaussian"
    strength_db: float = 25.0
    strength_mode: str = "energy"
    sparse_duty: float = 0.2
    target_ue: int = 0
    target_count: int = 1

    def __post_init__(self):
        if self.kind not in JAMMER_KINDS:
            raise ConfigError(f"unknown jammer kind {self.kind!r}; choose from {JAMMER_KINDS}")
        if self.constellation not in CONSTELLATIONS:
            raise ConfigError(f"unknown jammer constellation {self.constellation!r}")
        if self.strength_mode not in STRENGTH_MODES:
            raise ConfigError(f"unknown strength mode {self.strength_mode!r}")
        if not 0.0 < self.sparse_duty <= 1.0:
            raise ConfigError(f"sparse_duty must lie in (0, 1], got {self.sparse_duty}")
        if self.target_ue < 0 or self.target_count < 1:
            raise ConfigError("target_ue must be >= 0 and target_count >= 1")


@dataclass(frozen=True)
class SystemConfig:
    B: int = 128
    U: int = 32
    T: int = 32
    D: int = 64
    Es: float = 1.0
    snr_db: float = 10.0
    jammer: JammerProfile = field(default_factory=JammerProfile)
    rng_seed: int = 0

    def __post_init__(self):
        if not self.B >= self.U >= 1:
            raise ConfigError(f"need B >= U >= 1, got B={self.B}, U={self.U}")
        if self.T < self.U:
            raise ConfigError(f"need T >= U, got T={self.T}, U={self.U}")
        if self.T & (self.T - 1):
            raise ConfigError(f"T must be a power of two, got {self.T}")
        if self.D < 0:
            raise ConfigError(f"D must be non-negative, got {self.D}")
        if not self.Es > 0:
            raise ConfigError(f"Es must be positive, got {self.Es}")
        j = self.jammer
        if j.kind == "impersonate_single" and j.target_ue >= self.U:
            raise ConfigError(f"target_ue {j.target_ue} out of range for U={self.U}")
        if j.kind == "impersonate_average" and j.target_count > self.U:
            raise ConfigError(f"target_count {j.target_count} exceeds U={self.U}")

    @property
    def K(self):
        return self.T + self.D

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass
class FrameTruth:
    H: np.ndarray  # (B, U)
    hj: np.ndarray  # (B,)
    S_T: np.ndarray  # (U, T)
    S_D: np.ndarray  # (U, D)
    bits: np.ndarray  # (U, 2D) bool, interleaved (re, im) per symbol
    w: np.ndarray  # (K,) jammer symbols
    N: np.ndarray  # (B, K) noise realization
    N0: float

    @property
    def S(self):
        return np.concatenate([self.S_T, self.S_D], axis=1)


@dataclass
class ReceivedFrame:
    Y: np.ndarray
    truth: FrameTruth

    @property
    def T(self):
        return self.truth.S_T.shape[1]

    @property
    def Y_T(self):
        return self.Y[:, : self.T]

    @property
    def Y_D(self):
        return self.Y[:, self.T :]

    def without_jammer(self):
        """Same ``H``, ``S`` and ``N`` with the jammer term removed."""
        t = self.truth
        truth = replace(t, w=np.zeros_like(t.w))
        return ReceivedFrame(Y=t.H @ t.S + t.N, truth=truth)


def frame_rng(master_seed, snr_index=0, frame_index=0):
    """Independent generator for one Monte-Carlo frame."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(snr_index), int(frame_index)))
    return np.random.default_rng(ss)


def hadamard_pilots(U, T, Es):
    """First ``U`` rows of the Sylvester Hadamard matrix of order ``T``, times sqrt(Es)."""
    if T < 1 or T & (T - 1):
        raise ConfigError(f"T must be a power of two, got {T}")
    if U > T:
        raise ConfigError(f"cannot draw {U} orthogonal pilots of length {T}")
    return np.sqrt(Es) * scipy.linalg.hadamard(T)[:U].astype(np.complex128)


def draw_rayleigh_channel(rng, rows, cols=None):
    """I.i.d. CN(0, 1) entries. ``cols=None`` returns a vector."""
    shape = (rows,) if cols is None else (rows, cols)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def qpsk_map(bits, Es):
    """Gray-map interleaved bit pairs ``(b_re, b_im)`` to QPSK symbols of energy Es."""
    bits = np.asarray(bits, dtype=bool)
    a = np.sqrt(Es / 2.0)
    re = 1.0 - 2.0 * bits[..., 0::2]
    im = 1.0 - 2.0 * bits[..., 1::2]
    return a * (re + 1j * im)


def draw_qpsk_payload(rng, U, D, Es):
    bits = rng.integers(0, 2, size=(U, 2 * D)).astype(bool)
    return bits, qpsk_map(bits, Es)


def noise_variance_from_snr(cfg):
    """``N0 = U Es / SNR``: matches E||HS||_F^2 = B K U Es against E||N||_F^2 = B K N0."""
    return cfg.U * cfg.Es / db2lin(cfg.snr_db)


def duty_cycle(profile, cfg):
    """Fraction of the coherence block in which the jammer transmits."""
    K = cfg.K
    kind = profile.kind
    if kind == "none":
        return 0.0
    if kind == "barrage":
        return 1.0
    if kind in ("pilot", "impersonate_single", "impersonate_average"):
        return cfg.T / K
    if kind == "data":
        return cfg.D / K
    # sparse: exactly round(alpha K) slots are active
    return _sparse_slot_count(profile, cfg) / K


def _sparse_slot_count(profile, cfg):
    return max(1, int(round(profile.sparse_duty * cfg.K)))


def active_symbol_energy(profile, cfg):
    """Per-slot jammer symbol energy during its active phase."""
    ratio = db2lin(profile.strength_db)
    if profile.strength_mode == "power":
        return ratio * cfg.Es
    lam = duty_cycle(profile, cfg)
    return ratio * cfg.Es / lam


def _draw_symbols(rng, n, Ej, constellation):
    if constellation == "gaussian":
        return np.sqrt(Ej) * draw_rayleigh_channel(rng, n)
    bits = rng.integers(0, 2, size=2 * n).astype(bool)
    return qpsk_map(bits, Ej)


def jammer_transmit(profile, cfg, S_T, rng):
    """Jammer symbol vector ``w`` of length K; inactive slots are exactly zero."""
    K, T = cfg.K, cfg.T
    w = np.zeros(K, dtype=np.complex128)
    kind = profile.kind
    if kind == "none":
        return w
    if S_T.shape != (cfg.U, T):
        raise ConfigError(f"pilot matrix shape {S_T.shape} does not match U={cfg.U}, T={T}")
    Ej = active_symbol_energy(profile, cfg)

    if kind == "barrage":
        w[:] = _draw_symbols(rng, K, Ej, profile.constellation)
    elif kind == "pilot":
        w[:T] = _draw_symbols(rng, T, Ej, profile.constellation)
    elif kind == "data":
        w[T:] = _draw_symbols(rng, cfg.D, Ej, profile.constellation)
    elif kind == "sparse":
        slots = rng.choice(K, size=_sparse_slot_count(profile, cfg), replace=False)
        w[np.sort(slots)] = _draw_symbols(rng, slots.size, Ej, profile.constellation)
    else:
        if kind == "impersonate_single":
            if profile.target_ue >= cfg.U:
                raise ConfigError(f"target_ue {profile.target_ue} out of range for U={cfg.U}")
            seq = S_T[profile.target_ue]
        else:
            if profile.target_count > cfg.U:
                raise ConfigError(f"target_count {profile.target_count} exceeds U={cfg.U}")
            targets = (profile.target_ue + np.arange(profile.target_count)) % cfg.U
            seq = S_T[targets].mean(axis=0)
        # rescale so the mean per-slot energy over the pilot phase equals Ej
        w[:T] = seq * np.sqrt(Ej * T / np.vdot(seq, seq).real)
    return w


def synthesize_frame(cfg, rng):
    """Draw one coherence block and its receive matrix."""
    S_T = hadamard_pilots(cfg.U, cfg.T, cfg.Es)
    H = draw_rayleigh_channel(rng, cfg.B, cfg.U)
    hj = draw_rayleigh_channel(rng, cfg.B)
    bits, S_D = draw_qpsk_payload(rng, cfg.U, cfg.D, cfg.Es)
    N0 = noise_variance_from_snr(cfg)
    N = np.sqrt(N0) * draw_rayleigh_channel(rng, cfg.B, cfg.K)
    # jammer last: the jammer-free part of a frame does not depend on the profile
    w = jammer_transmit(cfg.jammer, cfg, S_T, rng)
    truth = FrameTruth(H=H, hj=hj, S_T=S_T, S_D=S_D, bits=bits, w=w, N=N, N0=N0)
    Y = H @ truth.S + np.outer(hj, w) + N
    return ReceivedFrame(Y=Y, truth=truth)
