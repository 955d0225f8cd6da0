"""Alternating optimization of the transmit beamformer and surface phases.

Each round first aligns the surface phases to the current beamformer and
then sets the beamformer to MRT for the new phases. Both half-steps are
exact conditional maximizers of the SNR at Bob, so the SNR never drops.
Eve's channel is not used.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet, phase_align
from .errors import DegenerateChannelError, DomainError

__all__ = ["BfPsState", "mrt_update", "optimize", "optimize_batch", "mrt_batch"]


@dataclass
class BfPsState:
    w: np.ndarray
    psi: np.ndarray
    snr_trace: list = field(default_factory=list)
    iterations: int = 0


def _row(channels: ChannelSet, psi) -> np.ndarray:
    # h^H diag(psi) G  -> (..., L)
    return np.einsum("...m,...ml->...l", channels.h2b.conj() * psi, channels.g)


def mrt_update(channels: ChannelSet, psi) -> np.ndarray:
    """Unit-norm MRT beamformer for fixed phases."""
    v = _row(channels, np.asarray(psi))
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise DegenerateChannelError("effective channel h^H Psi G is zero")
    return v.conj() / nrm


def optimize(channels: ChannelSet, tol: float = 1e-6, max_iter: int = 50, gamma_bar: float = 1.0) -> BfPsState:
    """Run the PS/BF alternation from the uniform beamformer ``1_L / sqrt(L)``.

    ``snr_trace[0]`` is the SNR after the first phase alignment with the
    uniform beamformer; one entry is appended per completed round. Stops when
    the fractional SNR gain of a round drops below ``tol``.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if channels.h2b.ndim != 1:
        raise DomainError("optimize expects a single realization; see optimize_batch")
    n_ant = channels.n_antennas
    w = np.full(n_ant, 1.0 / np.sqrt(n_ant), dtype=complex)
    psi = phase_align(channels, w)
    prev = gamma_bar * np.abs(_row(channels, psi) @ w) ** 2
    state = BfPsState(w=w, psi=psi, snr_trace=[float(prev)])
    for it in range(1, max_iter + 1):
        psi = phase_align(channels, w)
        w = mrt_update(channels, psi)
        cur = float(gamma_bar * np.abs(_row(channels, psi) @ w) ** 2)
        state.w, state.psi, state.iterations = w, psi, it
        state.snr_trace.append(cur)
        if cur - prev < tol * prev:
            break
        prev = cur
    return state


def mrt_batch(g: np.ndarray, h: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Batched MRT for ``g: (B, M, L)``, ``h, psi: (B, M)``."""
    v = np.einsum("bm,bml->bl", h.conj() * psi, g)
    nrm = np.linalg.norm(v, axis=1, keepdims=True)
    if np.any(nrm == 0):
        raise DegenerateChannelError("effective channel h^H Psi G is zero")
    return v.conj() / nrm


def optimize_batch(g: np.ndarray, h: np.ndarray, tol: float = 1e-6, max_iter: int = 50):
    """Vectorized :func:`optimize` over a batch; same stopping rule per realization.

    Returns ``(psi, w, gain, iterations)`` where ``gain`` is
    ``|h^H Psi G w|^2`` at the final iterate.
    """
    b, m, n_ant = g.shape
    w = np.full((b, n_ant), 1.0 / np.sqrt(n_ant), dtype=complex)
    gw = np.einsum("bml,bl->bm", g, w)
    prev = (np.abs(h) * np.abs(gw)).sum(1) ** 2
    psi = np.empty((b, m), dtype=complex)
    iters = np.zeros(b, dtype=int)
    active = np.ones(b, dtype=bool)
    gain = prev.copy()
    for it in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        ga, ha = g[idx], h[idx]
        gwa = np.einsum("bml,bl->bm", ga, w[idx])
        prod = ha * gwa.conj()
        mag = np.abs(prod)
        p = np.where(mag > 0, prod / np.where(mag > 0, mag, 1.0), 1.0)
        wn = mrt_batch(ga, ha, p)
        cur = np.abs(np.einsum("bm,bml,bl->b", ha.conj() * p, ga, wn)) ** 2
        psi[idx], w[idx], gain[idx], iters[idx] = p, wn, cur, it
        done = cur - prev[idx] < tol * prev[idx]
        prev[idx] = cur
        active[idx[done]] = False
    return psi, w, gain, iters
