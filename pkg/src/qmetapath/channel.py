"""Rician UE->RIS->AP channels, coupled RIS reflection and link metrics.

Channel conventions:

* ``h_ue_ris`` is ``K x N``; row k is user k's channel into the RIS elements,
  used as a column in the cascaded product.
* ``h_ris_ap`` is ``N x Q``; its conjugate transpose maps RIS element outputs
  to AP antennas, so its line-of-sight part is ``(a_R a_N^H)^H``.
* The effective channel of user k is ``h_ris_ap^H C diag(e^{j phi}) h_k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import ParameterError, ShapeError

SPEED_OF_LIGHT = 299_792_458.0
TWO_PI = 2.0 * math.pi


def wavelength(carrier_freq: float) -> float:
    return SPEED_OF_LIGHT / carrier_freq


def dbm_to_watts(dbm) -> np.ndarray | float:
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def wrap_phases(phases) -> np.ndarray:
    """Map phases into [0, 2*pi)."""
    out = np.mod(np.asarray(phases, dtype=float), TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    out[out >= TWO_PI] = 0.0
    return out


@dataclass(frozen=True)
class NetworkGeometry:
    """Node placement and array sizes.  Positions are 2-D, in meters."""

    n_elements: int
    n_antennas: int
    n_users: int
    carrier_freq: float
    element_spacing: float
    ue_positions: np.ndarray
    ris_position: np.ndarray
    ap_position: np.ndarray
    decay_const: float
    # orientation of each array's broadside normal, radians
    ris_normal: float = math.pi / 4
    ap_normal: float = 3 * math.pi / 4

    def __post_init__(self):
        for name in ("n_elements", "n_antennas", "n_users"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"{name} must be >= 1")
        if self.element_spacing <= 0:
            raise ParameterError("element_spacing must be > 0")
        if self.decay_const <= 0:
            raise ParameterError("decay_const must be > 0")
        if self.carrier_freq <= 0:
            raise ParameterError("carrier_freq must be > 0")
        ue = np.asarray(self.ue_positions, dtype=float).reshape(-1, 2)
        ris = np.asarray(self.ris_position, dtype=float).reshape(2)
        ap = np.asarray(self.ap_position, dtype=float).reshape(2)
        if ue.shape[0] != self.n_users:
            raise ShapeError(f"{ue.shape[0]} UE positions for {self.n_users} users")
        nodes = np.vstack([ue, ris, ap])
        dists = np.linalg.norm(nodes[:, None, :] - nodes[None, :, :], axis=-1)
        if np.any(dists[~np.eye(len(nodes), dtype=bool)] <= 0):
            raise ParameterError("all node pairs must be at positive distance")
        object.__setattr__(self, "ue_positions", ue)
        object.__setattr__(self, "ris_position", ris)
        object.__setattr__(self, "ap_position", ap)

    @property
    def ue_ris_distances(self) -> np.ndarray:
        return np.linalg.norm(self.ue_positions - self.ris_position, axis=1)

    @property
    def ris_ap_distance(self) -> float:
        return float(np.linalg.norm(self.ap_position - self.ris_position))


@dataclass(frozen=True)
class PhaseVector:
    phases: np.ndarray
    bit_depth: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "phases", wrap_phases(np.atleast_1d(self.phases)))

    def __len__(self):
        return self.phases.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.phases, dtype=dtype)


@dataclass(frozen=True)
class LinkBudget:
    tx_power: np.ndarray  # watts, one per user (a scalar broadcasts)
    noise_power: float  # watts

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.tx_power, dtype=float))
        if np.any(p <= 0) or self.noise_power <= 0:
            raise ParameterError("transmit and noise powers must be positive")
        object.__setattr__(self, "tx_power", p)

    @classmethod
    def from_dbm(cls, tx_dbm, noise_dbm, n_users=1):
        p = np.broadcast_to(dbm_to_watts(tx_dbm), (n_users,)).copy()
        return cls(p, float(dbm_to_watts(noise_dbm)))

    def powers(self, n_users: int) -> np.ndarray:
        return np.broadcast_to(self.tx_power, (n_users,))


@dataclass(frozen=True, eq=False)
class ChannelSet:
    h_ue_ris: np.ndarray  # K x N
    h_ris_ap: np.ndarray  # N x Q
    coupling: np.ndarray  # N x N
    rician_k_ue: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rician_k_ap: float = 0.0
    pathloss_ue: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pathloss_ap: float = 1.0
    aoa_ue: np.ndarray = field(default_factory=lambda: np.zeros(0))
    aoa_ap: float = 0.0
    aod_ris: float = 0.0

    def __post_init__(self):
        h_ue = np.atleast_2d(np.asarray(self.h_ue_ris, dtype=np.complex128))
        h_ap = np.atleast_2d(np.asarray(self.h_ris_ap, dtype=np.complex128))
        c = np.atleast_2d(np.asarray(self.coupling, dtype=float))
        k, n = h_ue.shape
        if h_ap.shape[0] != n or c.shape != (n, n):
            raise ShapeError(
                f"inconsistent shapes: h_ue_ris {h_ue.shape}, h_ris_ap {h_ap.shape}, coupling {c.shape}"
            )

        def per_user(v, default):
            v = np.asarray(v, dtype=float).ravel()
            return np.full(k, default) if v.size == 0 else np.broadcast_to(v, (k,)).copy()

        object.__setattr__(self, "h_ue_ris", h_ue)
        object.__setattr__(self, "h_ris_ap", h_ap)
        object.__setattr__(self, "coupling", c)
        object.__setattr__(self, "rician_k_ue", per_user(self.rician_k_ue, 0.0))
        object.__setattr__(self, "pathloss_ue", per_user(self.pathloss_ue, 1.0))
        object.__setattr__(self, "aoa_ue", per_user(self.aoa_ue, 0.0))

    @property
    def n_users(self) -> int:
        return self.h_ue_ris.shape[0]

    @property
    def n_elements(self) -> int:
        return self.h_ue_ris.shape[1]

    @property
    def n_antennas(self) -> int:
        return self.h_ris_ap.shape[1]

    @cached_property
    def cascade(self) -> np.ndarray:
        """``C^T conj(h_ris_ap)``, N x Q; user k's effective channel is
        ``(e^{j phi} * h_k) @ cascade``."""
        return self.coupling.T @ np.conj(self.h_ris_ap)

    def to_dict(self) -> dict:
        def cplx(a):
            a = np.asarray(a)
            return np.stack([a.real, a.imag], axis=-1).tolist()

        return {
            "h_ue_ris": cplx(self.h_ue_ris),
            "h_ris_ap": cplx(self.h_ris_ap),
            "coupling": self.coupling.tolist(),
            "rician_k_ue": self.rician_k_ue.tolist(),
            "rician_k_ap": float(self.rician_k_ap),
            "pathloss_ue": self.pathloss_ue.tolist(),
            "pathloss_ap": float(self.pathloss_ap),
            "aoa_ue": self.aoa_ue.tolist(),
            "aoa_ap": float(self.aoa_ap),
            "aod_ris": float(self.aod_ris),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelSet":
        def cplx(x):
            a = np.asarray(x, dtype=float)
            return a[..., 0] + 1j * a[..., 1]

        return cls(
            h_ue_ris=cplx(d["h_ue_ris"]),
            h_ris_ap=cplx(d["h_ris_ap"]),
            coupling=np.asarray(d["coupling"], dtype=float),
            rician_k_ue=d.get("rician_k_ue", []),
            rician_k_ap=d.get("rician_k_ap", 0.0),
            pathloss_ue=d.get("pathloss_ue", []),
            pathloss_ap=d.get("pathloss_ap", 1.0),
            aoa_ue=d.get("aoa_ue", []),
            aoa_ap=d.get("aoa_ap", 0.0),
            aod_ris=d.get("aod_ris", 0.0),
        )

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_json(cls, path) -> "ChannelSet":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# -- propagation -------------------------------------------------------------


def steering_vector(n_points: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response, entry m = exp(j*pi*m*sin(angle))."""
    m = np.arange(int(n_points))
    return np.exp(1j * math.pi * m * math.sin(angle))


def coupling_matrix(geometry: NetworkGeometry) -> np.ndarray:
    """Mutual-coupling matrix exp(-d_mn / d0) over a uniform linear layout."""
    if geometry.decay_const <= 0:
        raise ParameterError("decay_const must be > 0")
    idx = np.arange(geometry.n_elements)
    d = np.abs(idx[:, None] - idx[None, :]) * geometry.element_spacing
    return np.exp(-d / geometry.decay_const)


def pathloss(distance, carrier_freq: float):
    """Free-space power gain (lambda / (4 pi d))^2."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ParameterError("distance must be > 0")
    g = (wavelength(carrier_freq) / (4.0 * math.pi * d)) ** 2
    return float(g) if g.ndim == 0 else g


def arrival_angle(src, dst, normal: float) -> float:
    """Angle of the ray from ``dst`` towards ``src``, measured from the
    array broadside ``normal`` and wrapped to (-pi, pi]."""
    v = np.asarray(src, dtype=float) - np.asarray(dst, dtype=float)
    a = math.atan2(v[1], v[0]) - normal
    return math.atan2(math.sin(a), math.cos(a))


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def generate_channels(
    geometry: NetworkGeometry,
    kappa_ue=10.0,
    kappa_ap: float = 10.0,
    beta_ue=None,
    beta_ap: Optional[float] = None,
    seed=None,
) -> ChannelSet:
    """Draw Rician channels for every user and the RIS->AP link.

    ``beta_*`` default to free-space path loss over the node distances.
    """
    k, n, q = geometry.n_users, geometry.n_elements, geometry.n_antennas
    kappa_ue = np.broadcast_to(np.asarray(kappa_ue, dtype=float), (k,))
    if np.any(kappa_ue < 0) or kappa_ap < 0:
        raise ParameterError("Rician K-factors must be >= 0")
    if beta_ue is None:
        beta_ue = pathloss(geometry.ue_ris_distances, geometry.carrier_freq)
    beta_ue = np.broadcast_to(np.asarray(beta_ue, dtype=float), (k,))
    if beta_ap is None:
        beta_ap = pathloss(geometry.ris_ap_distance, geometry.carrier_freq)
    if np.any(beta_ue <= 0) or beta_ap <= 0:
        raise ParameterError("path-loss gains must be > 0")

    rng = np.random.default_rng(seed)
    aoa_ue = np.array(
        [arrival_angle(u, geometry.ris_position, geometry.ris_normal) for u in geometry.ue_positions]
    )
    aod_ris = arrival_angle(geometry.ap_position, geometry.ris_position, geometry.ris_normal)
    aoa_ap = arrival_angle(geometry.ris_position, geometry.ap_position, geometry.ap_normal)

    los_ue = np.stack([steering_vector(n, a) for a in aoa_ue])
    nlos_ue = _cn(rng, (k, n))
    h_ue = np.sqrt(beta_ue)[:, None] * (
        np.sqrt(kappa_ue / (1 + kappa_ue))[:, None] * los_ue
        + np.sqrt(1 / (1 + kappa_ue))[:, None] * nlos_ue
    )

    # (a_R a_N^H)^H, stored N x Q
    los_ap = np.outer(steering_vector(n, aod_ris), np.conj(steering_vector(q, aoa_ap)))
    nlos_ap = _cn(rng, (n, q))
    h_ap = math.sqrt(beta_ap) * (
        math.sqrt(kappa_ap / (1 + kappa_ap)) * los_ap + math.sqrt(1 / (1 + kappa_ap)) * nlos_ap
    )
    return ChannelSet(
        h_ue_ris=h_ue,
        h_ris_ap=h_ap,
        coupling=coupling_matrix(geometry),
        rician_k_ue=kappa_ue,
        rician_k_ap=float(kappa_ap),
        pathloss_ue=beta_ue,
        pathloss_ap=float(beta_ap),
        aoa_ue=aoa_ue,
        aoa_ap=aoa_ap,
        aod_ris=aod_ris,
    )


def inject_csi_error(chs: ChannelSet, variance: float, seed=None) -> ChannelSet:
    """Imperfect-CSI copy of ``chs``.

    Every entry gets additive complex Gaussian error whose variance is
    ``variance`` relative to the link's path-loss gain, i.e. the error on the
    normalized (unit-variance) small-scale channel has variance ``variance``.
    """
    if variance < 0:
        raise ParameterError("CSI error variance must be >= 0")
    if variance == 0:
        return chs
    rng = np.random.default_rng(seed)
    std = math.sqrt(variance)
    e_ue = _cn(rng, chs.h_ue_ris.shape) * std * np.sqrt(chs.pathloss_ue)[:, None]
    e_ap = _cn(rng, chs.h_ris_ap.shape) * std * math.sqrt(chs.pathloss_ap)
    return ChannelSet(
        h_ue_ris=chs.h_ue_ris + e_ue,
        h_ris_ap=chs.h_ris_ap + e_ap,
        coupling=chs.coupling,
        rician_k_ue=chs.rician_k_ue,
        rician_k_ap=chs.rician_k_ap,
        pathloss_ue=chs.pathloss_ue,
        pathloss_ap=chs.pathloss_ap,
        aoa_ue=chs.aoa_ue,
        aoa_ap=chs.aoa_ap,
        aod_ris=chs.aod_ris,
    )


# -- metrics -----------------------------------------------------------------


def _phase_array(phases) -> np.ndarray:
    if isinstance(phases, PhaseVector):
        return phases.phases
    return np.asarray(phases, dtype=float)


def effective_channels(chs: ChannelSet, phases) -> np.ndarray:
    """Effective channels of all users for one phase vector (``K x Q``) or a
    batch of phase vectors (``B x K x Q``)."""
    phi = _phase_array(phases)
    if phi.shape[-1] != chs.n_elements:
        raise ShapeError(f"{phi.shape[-1]} phases for {chs.n_elements} elements")
    refl = np.exp(1j * phi)[..., None, :] * chs.h_ue_ris
    return refl @ chs.cascade


def effective_channel(chs: ChannelSet, phases, user: int) -> np.ndarray:
    return effective_channels(chs, phases)[..., user, :]


def sinr_all(chs: ChannelSet, phases, budget: LinkBudget) -> np.ndarray:
    h = effective_channels(chs, phases)
    rx = np.sum(np.abs(h) ** 2, axis=-1) * budget.powers(chs.n_users)
    interference = rx.sum(axis=-1, keepdims=True) - rx
    return rx / (interference + budget.noise_power)


def sinr(chs: ChannelSet, phases, budget: LinkBudget, user: int) -> float:
    return float(sinr_all(chs, phases, budget)[user])


def spectral_efficiency(chs: ChannelSet, phases, budget: LinkBudget):
    """Sum over users of log2(1 + SINR_k), in bps/Hz.  Batched over leading
    phase dimensions."""
    se = np.sum(np.log2(1.0 + sinr_all(chs, phases, budget)), axis=-1)
    return float(se) if np.ndim(se) == 0 else se


def energy_cost(phases):
    """(1/N) sum(1 - cos phi_n), in [0, 2]."""
    phi = _phase_array(phases)
    e = np.mean(1.0 - np.cos(phi), axis=-1)
    return float(e) if np.ndim(e) == 0 else e


def objective(chs: ChannelSet, phases, budget: LinkBudget, alpha1: float = 1.0, alpha2: float = 0.1):
    if alpha1 < 0 or alpha2 < 0:
        raise ParameterError("objective weights must be >= 0")
    return alpha1 * spectral_efficiency(chs, phases, budget) - alpha2 * energy_cost(phases)


def quantize_phases(phases, bits: int) -> PhaseVector:
    """Round each phase to the nearest of 2^bits uniform levels."""
    if bits < 1:
        raise ParameterError("bit depth must be >= 1")
    levels = 2**bits
    phi = _phase_array(phases)
    idx = np.floor(levels * phi / TWO_PI + 0.5).astype(np.int64) % levels
    return PhaseVector(idx * (TWO_PI / levels), bit_depth=bits)
