"""Localization bounds for the one-way, round-trip, and collaborative protocols.

The 5x5 localization EFIM over (zeta0, chi0, px, py, pz) is a spatial term,
built by mapping the angle EFIM through the location Jacobian, plus a rank-one
temporal term weighted by the protocol's combined delay information:

  * owl: one-way, perfectly synchronized; delay weight is the backward delay
    information alone.
  * rlp: round-trip; the responder replies after a pre-agreed delay, the
    clock bias cancels, and the delay weight is the harmonic combination
    4 / (1/J_f + 1/J_b).
  * clp: collaborative; the responder replies at a pre-agreed instant and
    both received signals are used, so the spatial term gains the forward
    contribution while the delay weight (with the bias eliminated as a
    nuisance) equals the round-trip one.
"""

from dataclasses import dataclass

import numpy as np

from .fim import ChannelFim, angle_efim, delay_info
from .pose import LocationJacobian

PROTOCOLS = ("owl", "rlp", "clp")
LOCATION_PARAMS = ("zeta0", "chi0", "px", "py", "pz")

_MAX_CONDITION = 1e12


class DelayUnobservableError(ValueError):
    """Two-way protocol with zero delay information in one direction."""


@dataclass(frozen=True)
class LocalizationBound:
    """5x5 localization EFIM with its inverse and scalar bounds.

    ``peb`` is the position error bound in meters, ``oeb`` the orientation
    error bound in radians. Unidentifiable poses carry infinite bounds,
    ``cov=None``, and the achieved EFIM rank.
    """

    efim: np.ndarray
    cov: np.ndarray | None
    peb: float
    oeb: float
    identifiable: bool
    rank: int
    condition: float


def combined_delay_info(kind: str, j_tau_f: float, j_tau_b: float) -> float:
    """Delay information entering the temporal term of each protocol."""
    if kind not in PROTOCOLS:
        raise ValueError(f"kind must be one of {PROTOCOLS}, got {kind!r}")
    if j_tau_f < 0 or j_tau_b < 0:
        raise ValueError("delay information must be nonnegative")
    if kind == "owl":
        return j_tau_b
    if j_tau_f == 0.0 or j_tau_b == 0.0:
        raise DelayUnobservableError(f"delay unobservable under {kind}")
    return 4.0 / (1.0 / j_tau_f + 1.0 / j_tau_b)


def rlp_beats_owl(j_tau_f: float, j_tau_b: float) -> bool:
    """True when round-trip timing strictly beats synchronized one-way timing."""
    if j_tau_f <= 0 or j_tau_b <= 0:
        raise ValueError("delay information must be positive")
    return j_tau_f > j_tau_b / 3.0


def invert_efim(efim: np.ndarray):
    """Invert symmetric PSD EFIMs, batched over leading axes.

    Returns (cov, peb, oeb, identifiable, rank, condition); singular or
    extremely ill-conditioned matrices yield infinite bounds and cov rows
    of NaN.
    """
    efim = np.asarray(efim, dtype=np.float64)
    evals, evecs = np.linalg.eigh(efim)
    emax = np.maximum(evals[..., -1], 0.0)
    tol = emax[..., None] * 1e-13
    rank = np.count_nonzero(evals > tol, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        condition = np.where(evals[..., 0] > 0, emax / evals[..., 0], np.inf)
    ok = (rank == efim.shape[-1]) & (condition <= _MAX_CONDITION)

    safe = np.where(evals > 0, evals, 1.0)
    cov = (evecs / safe[..., None, :]) @ np.swapaxes(evecs, -1, -2)
    diag = np.diagonal(cov, axis1=-2, axis2=-1)
    peb = np.where(ok, np.sqrt(np.abs(diag[..., 2] + diag[..., 3] + diag[..., 4])), np.inf)
    oeb = np.where(ok, np.sqrt(np.abs(diag[..., 0] + diag[..., 1])), np.inf)
    cov = np.where(ok[..., None, None], cov, np.nan)
    return cov, peb, oeb, ok, rank, condition


def assemble(
    kind: str,
    fwd: ChannelFim | None,
    bwd: ChannelFim,
    jac: LocationJacobian,
) -> LocalizationBound:
    """Localization EFIM and scalar bounds for one protocol at one pose.

    ``fwd`` may be omitted for owl; rlp and clp need both directions. A
    singular 5x5 EFIM is reported as unidentifiable, not raised.
    """
    if kind not in PROTOCOLS:
        raise ValueError(f"kind must be one of {PROTOCOLS}, got {kind!r}")
    if kind != "owl" and fwd is None:
        raise ValueError(f"{kind} needs the forward-direction FIM")
    if bwd is None:
        raise ValueError("backward-direction FIM is required")

    spatial_jac = jac.angles
    je_b = angle_efim(bwd).matrix
    spatial = spatial_jac @ je_b @ spatial_jac.T
    if kind == "clp":
        je_f = angle_efim(fwd).matrix
        spatial = spatial + spatial_jac @ je_f @ spatial_jac.T

    j_tau = combined_delay_info(
        kind,
        delay_info(fwd) if fwd is not None else 0.0,
        delay_info(bwd),
    )
    efim5 = spatial + j_tau * np.outer(jac.delay, jac.delay)
    cov, peb, oeb, ok, rank, condition = invert_efim(efim5)
    return LocalizationBound(
        efim=efim5,
        cov=cov if ok else None,
        peb=float(peb),
        oeb=float(oeb),
        identifiable=bool(ok),
        rank=int(rank),
        condition=float(condition),
    )
