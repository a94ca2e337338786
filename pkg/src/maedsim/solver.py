"""MAED: joint jammer mitigation, channel estimation and data detection.

The solver alternates a forward-backward splitting (proximal gradient) step
on the relaxed transmit matrix ``S~ = [S_T, S~_D]`` with a rank-1 update of
the estimated jammer direction ``p``. The channel is eliminated in closed
form, leaving the objective

    f(S~) = || P Y (I - S~^+ S~) ||_F^2,    P = I - p p^H.

With ``project_enabled=False`` the projector stays at the identity and the
same routine is the jammer-oblivious JED detector used as a reference.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ConvergenceError, DimensionError
from .linalg import (
    as_matrix,
    dominant_eigenvector,
    frobenius_norm_sq,
    orth_complement_projector,
    power_step,
    right_pseudo_inverse,
    solve_hermitian_posdef,
)

log = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "SolverState",
    "MaedResult",
    "DESCENT_SIGN",
    "objective_f",
    "gradient_f",
    "prox_g",
    "residual_matrix",
    "update_subspace",
    "bb_stepsize",
    "hard_decision",
    "run_maed",
]

# Sign with which the matrix returned by gradient_f enters the FBS update.
# f(S + eps D) = f(S) - 2 eps Re<G, D> + O(eps^2) (checked by finite differences
# in the test suite), so G points uphill in -f and S + tau G is a descent step.
DESCENT_SIGN = +1.0

BB_RULES = ("adaptive", "alternating", "bb1")


@dataclass(frozen=True)
class SolverConfig:
    t_max: int = 30
    tau0: float = 0.1
    project_enabled: bool = True
    power_tol: float = 1e-6
    power_max_iter: int = 500
    bb_floor: float = 1e-6
    bb_ceil: float = 1e3
    bb_rule: str = "adaptive"

    def __post_init__(self):
        if self.t_max < 1:
            raise ConfigError(f"t_max must be >= 1, got {self.t_max}")
        if not self.tau0 > 0:
            raise ConfigError(f"tau0 must be positive, got {self.tau0}")
        if not 0 < self.bb_floor <= self.bb_ceil:
            raise ConfigError(f"need 0 < bb_floor <= bb_ceil, got {self.bb_floor}, {self.bb_ceil}")
        if self.bb_rule not in BB_RULES:
            raise ConfigError(f"unknown bb_rule {self.bb_rule!r}; choose from {BB_RULES}")


@dataclass
class SolverState:
    """Iterate of the solver after one full iteration."""

    t: int
    S_tilde: np.ndarray
    p_hat: np.ndarray | None
    tau: float
    grad: np.ndarray
    E_tilde: np.ndarray

    @property
    def P_tilde(self):
        if self.p_hat is None:
            return np.eye(self.E_tilde.shape[0], dtype=np.complex128)
        return orth_complement_projector(self.p_hat)


@dataclass
class MaedResult:
    S_D_soft: np.ndarray
    S_D_hard: np.ndarray
    bits: np.ndarray
    p_hat: np.ndarray | None
    objective: list = field(default_factory=list)
    taus: list = field(default_factory=list)


def _project(p, X):
    """Apply ``I - p p^H`` (``p`` unit norm, or None for identity) to the rows of X."""
    if p is None:
        return X
    return X - np.outer(p, p.conj() @ X)


def _check_dims(P, Y, S):
    if P.shape != (Y.shape[0], Y.shape[0]):
        raise DimensionError(f"projector {P.shape} does not match Y {Y.shape}")
    if S.shape[1] != Y.shape[1]:
        raise DimensionError(f"S~ {S.shape} and Y {Y.shape} differ in slot count")


def _fit(Y, S):
    """Closed-form channel ``Y S^+`` and residual ``Y - Y S^+ S``."""
    H_hat = Y @ right_pseudo_inverse(S)
    return H_hat, Y - H_hat @ S


def objective_f(P, Y, S_tilde):
    """``||P Y (I - S~^+ S~)||_F^2``."""
    P, Y, S = as_matrix(P), as_matrix(Y), as_matrix(S_tilde)
    _check_dims(P, Y, S)
    _, E = _fit(Y, S)
    return frobenius_norm_sq(P @ E)


def gradient_f(P, Y, S_tilde):
    """``(S~^+)^H Y^H P Y (I - S~^+ S~)``, shape U x K.

    This is ``-1/2`` times the gradient of :func:`objective_f` with respect to
    the real and imaginary parts of ``S~``; see :data:`DESCENT_SIGN`.
    """
    P, Y, S = as_matrix(P), as_matrix(Y), as_matrix(S_tilde)
    _check_dims(P, Y, S)
    H_hat, E = _fit(Y, S)
    return H_hat.conj().T @ (P @ E)


def prox_g(S_candidate, S_T, Es):
    """Fix the pilot columns to ``S_T`` and clip data entries to the QPSK box."""
    S = np.array(S_candidate, dtype=np.complex128, copy=True)
    T = S_T.shape[1]
    if S.shape[0] != S_T.shape[0] or S.shape[1] < T:
        raise DimensionError(f"candidate {S.shape} incompatible with pilots {S_T.shape}")
    a = np.sqrt(Es / 2.0)
    S[:, :T] = S_T
    data = S[:, T:]
    S[:, T:] = np.clip(data.real, -a, a) + 1j * np.clip(data.imag, -a, a)
    return S


def residual_matrix(Y, S_tilde):
    """``Y (I - S~^+ S~)``: the part of Y not explained by the row space of S~."""
    Y, S = as_matrix(Y), as_matrix(S_tilde)
    if S.shape[1] != Y.shape[1]:
        raise DimensionError(f"S~ {S.shape} and Y {Y.shape} differ in slot count")
    return _fit(Y, S)[1]


def update_subspace(E, prev_p, first, cfg):
    """Re-estimate the unit jammer direction from the residual ``E``.

    The first update takes the dominant eigenvector of ``E E^H``; later ones
    take a single power step from ``prev_p``. A vanishing residual carries
    ``prev_p`` over unchanged (which may be None).
    """
    E = as_matrix(E)
    if not np.any(E):
        log.debug("zero residual; keeping previous subspace estimate")
        return prev_p
    M = E @ E.conj().T
    if first or prev_p is None:
        try:
            return dominant_eigenvector(M, tol=cfg.power_tol, max_iter=cfg.power_max_iter)
        except ConvergenceError as err:
            log.debug("eigenvector iteration stopped early: %s", err)
            return err.best / np.linalg.norm(err.best)
    try:
        return power_step(M, prev_p)
    except ConvergenceError:
        log.debug("E E^H p vanished; keeping previous subspace estimate")
        return prev_p


def _inner(A, B):
    return float(np.vdot(A, B).real)


def bb_stepsize(S_prev, S_curr, G_prev, G_curr, tau_prev, iter_parity, cfg):
    """Barzilai-Borwein step from successive iterates and gradients.

    With ``dS = S_curr - S_prev`` and ``dG = G_curr - G_prev`` the two classic
    spectral steps are ``steep = <dS, dS> / <dS, dG>`` and
    ``minres = <dS, dG> / <dG, dG>``. ``cfg.bb_rule`` picks how they combine:

    ``"adaptive"``
        ``minres`` if ``2 minres > steep``, else ``steep - minres / 2``.
    ``"alternating"``
        ``steep`` on even ``iter_parity``, ``minres`` on odd.
    ``"bb1"``
        always ``steep``.

    ``G_*`` must be gradients of the function being minimized (sign
    included). Non-positive or non-finite curvature keeps ``tau_prev``; the
    result is clipped to ``[bb_floor, bb_ceil]``.
    """
    dS = np.asarray(S_curr) - np.asarray(S_prev)
    dG = np.asarray(G_curr) - np.asarray(G_prev)
    ss, sg, gg = _inner(dS, dS), _inner(dS, dG), _inner(dG, dG)
    if not all(np.isfinite(x) and x > 0.0 for x in (ss, sg, gg)):
        return tau_prev
    steep, minres = ss / sg, sg / gg
    if cfg.bb_rule == "adaptive":
        tau = minres if 2.0 * minres > steep else steep - 0.5 * minres
    elif cfg.bb_rule == "alternating":
        tau = steep if iter_parity % 2 == 0 else minres
    else:
        tau = steep
    return float(np.clip(tau, cfg.bb_floor, cfg.bb_ceil))


def hard_decision(S_soft, Es):
    """Nearest QPSK point per entry (zero breaks toward +) and the Gray bits."""
    S_soft = np.asarray(S_soft)
    a = np.sqrt(Es / 2.0)
    neg_re = S_soft.real < 0
    neg_im = S_soft.imag < 0
    S_hard = a * (np.where(neg_re, -1.0, 1.0) + 1j * np.where(neg_im, -1.0, 1.0))
    bits = np.empty(S_soft.shape[:-1] + (2 * S_soft.shape[-1],), dtype=bool)
    bits[..., 0::2] = neg_re
    bits[..., 1::2] = neg_im
    return S_hard, bits


def _row_space_factor(S):
    """``(S S^H)^{-1} S``, i.e. ``(S^+)^H``; then ``S^+ S = S^H Z``."""
    return solve_hermitian_posdef(S @ S.conj().T, S)


def _gram_gradient(A, S, Z, q):
    """Gradient matrix and objective from the K x K Gram matrix ``A = Y^H Y``.

    ``q = Y^H p`` carries the projector (None for identity). Returns the same
    G as :func:`gradient_f` and f as :func:`objective_f` without touching any
    B x K matrix.
    """
    W = Z @ A  # (S^+)^H Y^H Y
    trace_A = float(np.trace(A).real)
    if q is not None:
        Zq = Z @ q
        W -= np.outer(Zq, q.conj())
        trace_A -= float(np.vdot(q, q).real)
    WS = W @ S.conj().T
    G = W - WS @ Z
    f = trace_A - float(np.trace(WS).real)
    return G, max(f, 0.0)


def run_maed(Y, S_T, Es, cfg=SolverConfig(), S_D_init=None, callback=None):
    """Run MAED (or JL-JED with ``cfg.project_enabled=False``) on one frame.

    Parameters
    ----------
    Y : (B, K) array
        Receive matrix.
    S_T : (U, T) array
        Pilot matrix with full row rank.
    Es : float
        QPSK symbol energy.
    cfg : SolverConfig
    S_D_init : (U, D) array, optional
        Initial data block; defaults to zeros.
    callback : callable, optional
        Called with a :class:`SolverState` after every iteration.

    Returns
    -------
    MaedResult
        Soft and hard data estimates, Gray bits, final jammer direction and
        the objective value after each iteration.
    """
    Y = as_matrix(Y)
    S_T = as_matrix(S_T)
    U, T = S_T.shape
    K = Y.shape[1]
    if T < U or K < T:
        raise DimensionError(f"pilots {S_T.shape} incompatible with Y {Y.shape}")

    # every quantity the iteration needs is a function of Y^H Y, except for
    # the subspace updates which read Y through q = Y^H p and Y r
    A = Y.conj().T @ Y
    S = np.zeros((U, K), dtype=np.complex128)
    S[:, :T] = S_T
    if S_D_init is not None:
        S[:, T:] = S_D_init
    p = q = None
    tau = cfg.tau0

    Z = _row_space_factor(S)
    G, _ = _gram_gradient(A, S, Z, q)
    objective, taus = [], []
    for t in range(cfg.t_max):
        S_new = prox_g(S + DESCENT_SIGN * tau * G, S_T, Es)
        Z = _row_space_factor(S_new)
        if cfg.project_enabled:
            if p is None:
                E = Y - (Y @ S_new.conj().T) @ Z
                p = update_subspace(E, None, first=True, cfg=cfg)
            else:
                # E E^H p = Y (I - S^H Z) Y^H p
                r = q - S_new.conj().T @ (Z @ q)
                v = Y @ r
                nrm = np.linalg.norm(v)
                if nrm > 0.0 and np.isfinite(nrm):
                    p = v / nrm
                else:
                    log.debug("E E^H p vanished; keeping previous subspace estimate")
            if p is not None:
                q = Y.conj().T @ p
        G_new, f = _gram_gradient(A, S_new, Z, q)
        objective.append(f)
        # only the data block moves; BB sees the gradient of f itself
        tau = bb_stepsize(
            S[:, T:], S_new[:, T:],
            -DESCENT_SIGN * G[:, T:], -DESCENT_SIGN * G_new[:, T:],
            tau, t, cfg,
        )
        taus.append(tau)
        S, G = S_new, G_new
        if callback is not None:
            E = Y - (Y @ S.conj().T) @ Z
            callback(SolverState(t=t, S_tilde=S, p_hat=p, tau=tau, grad=G, E_tilde=E))

    S_D_soft = S[:, T:].copy()
    S_D_hard, bits = hard_decision(S_D_soft, Es)
    return MaedResult(S_D_soft=S_D_soft, S_D_hard=S_D_hard, bits=bits, p_hat=p,
                      objective=objective, taus=taus)
