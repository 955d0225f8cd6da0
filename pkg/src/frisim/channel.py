"""Spatially correlated Rayleigh channels and end-to-end SNR evaluation.

Shapes follow one convention everywhere: a single realization has
``g: (M, L)``, ``h2b, h2e: (M,)``; batched realizations add a leading axis
``B``. The effective scalar channel to receiver ``i`` is
``h_i^H diag(psi) G w``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "LinkBudget",
    "ChannelSet",
    "RngStream",
    "psd_factor",
    "draw_channels",
    "snr",
    "effective_channel",
    "phase_align",
]


@dataclass(frozen=True)
class LinkBudget:
    """Linear path losses, element area and mean transmit SNRs."""

    beta1: float = 1e-4
    beta2_b: float = 1e-4
    beta2_e: float = 1e-4
    a_p: float = 1.0
    gamma_bar_b: float = 1.0
    gamma_bar_e: float = 1.0

    def __post_init__(self):
        for name in ("beta1", "beta2_b", "beta2_e", "a_p", "gamma_bar_b", "gamma_bar_e"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be strictly positive")

    @property
    def scale_g(self) -> float:
        return self.a_p * self.beta1

    @property
    def scale_b(self) -> float:
        return self.a_p * self.beta2_b

    @property
    def scale_e(self) -> float:
        return self.a_p * self.beta2_e


@dataclass(frozen=True)
class ChannelSet:
    g: np.ndarray
    h2b: np.ndarray
    h2e: np.ndarray
    r_chol: np.ndarray

    @property
    def m(self) -> int:
        return self.h2b.shape[-1]

    @property
    def n_antennas(self) -> int:
        return self.g.shape[-1]

    def realization(self, b: int) -> "ChannelSet":
        """Single realization ``b`` of a batched set."""
        return ChannelSet(self.g[b], self.h2b[b], self.h2e[b], self.r_chol)

    def subset(self, rows) -> "ChannelSet":
        """Channels restricted to the surface elements ``rows`` (unbatched)."""
        rows = np.asarray(rows)
        return ChannelSet(self.g[..., rows, :], self.h2b[..., rows], self.h2e[..., rows], self.r_chol)


@dataclass(frozen=True)
class RngStream:
    """Named, reproducible random stream.

    Distinct ``stream_id`` values under one ``seed`` yield independent
    generators (SeedSequence spawn keys).
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, sub_id: int) -> "RngStream":
        """Deterministic sub-stream, e.g. per chunk of realizations."""
        return RngStream(self.seed, (int(self.stream_id) << 20) + int(sub_id) + 1)


def psd_factor(r: np.ndarray) -> np.ndarray:
    """Lower-triangular ``F`` with ``F F^T`` equal to ``r`` (or its PSD repair).

    Tries Cholesky first. On failure, negative eigenvalues are clipped to
    zero and the clipped matrix is re-factored through a QR decomposition,
    which stays valid for singular matrices.
    """
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise DomainError("correlation matrix must be square")
    if not np.allclose(r, r.T, rtol=0, atol=1e-12):
        raise DomainError("correlation matrix must be symmetric")
    try:
        return np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        pass
    vals, vecs = np.linalg.eigh(0.5 * (r + r.T))
    root = vecs * np.sqrt(np.clip(vals, 0.0, None))
    # root root^T = r_clipped;  root^T = Q R  =>  r_clipped = R^T R
    upper = np.linalg.qr(root.T, mode="r")
    lower = upper.T
    signs = np.where(np.diag(lower) < 0, -1.0, 1.0)
    return lower * signs


def draw_channels(factor: np.ndarray, budget: LinkBudget, n_antennas: int, rng, size: int | None = None) -> ChannelSet:
    """Draw ``G``, ``h2b`` and ``h2e`` correlated across surface elements.

    ``factor`` is the :func:`psd_factor` of the element correlation matrix.
    Columns of ``G`` are independent across transmit antennas. ``rng`` may
    be an :class:`RngStream` or a ``numpy.random.Generator``. With ``size``
    the result carries a leading batch axis.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    factor = np.asarray(factor, dtype=float)
    m = factor.shape[0]
    batch = 1 if size is None else int(size)
    cols = n_antennas + 2
    # real and imaginary parts share one real matrix product
    z = gen.standard_normal((m, batch * cols * 2))
    x = (factor @ z).reshape(m, batch, cols, 2)
    c = np.moveaxis((x[..., 0] + 1j * x[..., 1]) * np.sqrt(0.5), 0, 1)
    g = np.sqrt(budget.scale_g) * c[..., :n_antennas]
    hb = np.sqrt(budget.scale_b) * c[..., n_antennas]
    he = np.sqrt(budget.scale_e) * c[..., n_antennas + 1]
    if size is None:
        return ChannelSet(g[0], hb[0], he[0], factor)
    return ChannelSet(g, hb, he, factor)


def effective_channel(h: np.ndarray, psi: np.ndarray, g: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``h^H diag(psi) G w``; broadcasts over a leading batch axis."""
    gw = np.einsum("...ml,...l->...m", g, w)
    return np.einsum("...m,...m->...", h.conj(), psi * gw)


def snr(channels: ChannelSet, psi, w, gamma_bar: float, link: str = "b") -> float:
    """Received SNR ``gamma_bar |h^H Psi G w|^2`` at Bob (``link='b'``) or Eve."""
    h = channels.h2b if link == "b" else channels.h2e
    psi = np.asarray(psi)
    if psi.ndim == 2:
        psi = np.diag(psi)
    w = np.asarray(w)
    if psi.shape[-1] != h.shape[-1] or w.shape[-1] != channels.g.shape[-1] or channels.g.shape[-2] != h.shape[-1]:
        raise DomainError("dimension mismatch between channels, psi and w")
    return gamma_bar * np.abs(effective_channel(h, psi, channels.g, w)) ** 2


def phase_align(channels: ChannelSet, w) -> np.ndarray:
    """Unit-modulus phases that make every element's contribution to Bob real and non-negative.

    ``psi_m = exp(j(angle(h_m) - angle(g_m w)))``; an element with a zero
    channel or zero ``g_m w`` gets phase 0.
    """
    gw = np.einsum("...ml,...l->...m", channels.g, np.asarray(w))
    prod = channels.h2b * gw.conj()
    mag = np.abs(prod)
    out = np.ones_like(prod)
    nz = mag > 0
    out[nz] = prod[nz] / mag[nz]
    return out
