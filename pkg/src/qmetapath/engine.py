"""Path-based quantum meta-learning for RIS phase configuration.

Register layout (qubit 0 is the most significant bit)::

    [ feature qubits 0..F-1 | layer 0 path qubits | ... | layer L-1 path qubits ]

Each layer owns ``q = ceil(log2 P)`` path qubits.  The path unitary of
``(layer l, path p)`` is the layer's feature re-upload (skipped for layer 0,
whose upload is the scenario encoding itself) followed by one R_Y per path
qubit with that path's angles.  The active superposition entangles each path
qubit with one feature qubit through a CNOT.  At L=6, P=8, F=6 one inference
pass is therefore 36 feature R_Y, 18 path R_Y, 18 CNOT and 24 terminal
<Z> evaluations.

Every episode runs two passes.  The scoring pass applies each path unitary
to its own freshly encoded copy of the scenario and reduces it to a classical
objective value.  The inference pass re-encodes the scenario, builds the
top-k superposition, evolves it through all layers and reads out the phases
only once evolution is complete.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from . import quantum as qc
from .channel import ChannelSet, LinkBudget, PhaseVector, energy_cost, objective, quantize_phases
from .channel import spectral_efficiency
from .errors import CapacityError, DegenerateStateError, NumericError, ParameterError, RangeError, ShapeError

SCORE_FLOOR = 1e-12
FEATURE_NAMES = ("loc", "interference", "pathloss", "rate")


@dataclass(frozen=True)
class QMetaConfig:
    layers: int = 6
    paths: int = 8
    k_top: int = 3
    eta: float = 0.9
    gamma: float = 0.1
    j0: float = 0.1
    alpha1: float = 1.0
    alpha2: float = 0.1
    feature_qubits: int = 6
    quantize_bits: Optional[int] = None
    path_seed: int = 0
    max_qubits: int = qc.DEFAULT_MAX_QUBITS

    def __post_init__(self):
        if self.layers < 1 or self.paths < 1:
            raise ParameterError("layers and paths must be >= 1")
        if not 1 <= self.k_top <= self.paths:
            raise ParameterError(f"k_top must be in [1, {self.paths}]")
        if not 0 < self.eta < 1:
            raise ParameterError("eta must be in (0, 1)")
        if self.gamma < 0:
            raise ParameterError("gamma must be >= 0")
        if self.j0 <= 0:
            raise ParameterError("j0 must be > 0")
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise ParameterError("alpha1, alpha2 must be >= 0")
        if self.feature_qubits < 1:
            raise ParameterError("feature_qubits must be >= 1")
        if self.quantize_bits is not None and self.quantize_bits < 1:
            raise ParameterError("quantize_bits must be >= 1")
        if self.n_qubits > self.max_qubits:
            raise CapacityError(f"{self.n_qubits} qubits exceeds capacity of {self.max_qubits}")

    @classmethod
    def desk_scale(cls, **overrides) -> "QMetaConfig":
        """L=3, P=4, k=2 with 6 feature qubits: a 12-qubit register."""
        base = dict(layers=3, paths=4, k_top=2)
        base.update(overrides)
        return cls(**base)

    @property
    def path_qubits(self) -> int:
        return max(0, math.ceil(math.log2(self.paths)))

    @property
    def n_qubits(self) -> int:
        return self.feature_qubits + self.layers * self.path_qubits

    def path_register(self, layer: int) -> list:
        start = self.feature_qubits + layer * self.path_qubits
        return list(range(start, start + self.path_qubits))


# -- scenario encoding -------------------------------------------------------


@dataclass(frozen=True)
class ScenarioFeatures:
    """Normalized scenario descriptors, each in [0, 1]."""

    loc: tuple = (0.0, 0.0, 0.0)
    interference: float = 0.0
    pathloss: float = 0.0
    rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "loc", tuple(float(x) for x in np.atleast_1d(self.loc)))
        for x in self.vector:
            if not 0.0 <= x <= 1.0:
                raise RangeError(f"feature value {x} outside [0, 1]")

    @property
    def vector(self) -> np.ndarray:
        return np.array([*self.loc, self.interference, self.pathloss, self.rate], dtype=float)


def normalize_features(raw: Mapping, bounds: Mapping) -> ScenarioFeatures:
    """Affine-map raw measurements into [0, 1] and clamp.

    ``raw`` maps each of ``loc`` (a sequence), ``interference``, ``pathloss``
    and ``rate`` to measured values; ``bounds`` maps the same keys to
    ``(min, max)`` pairs (a sequence of pairs for ``loc``).
    """

    def scale(x, lo, hi, name):
        if hi == lo:
            raise ParameterError(f"degenerate bounds for feature {name!r}: min == max")
        return float(np.clip((x - lo) / (hi - lo), 0.0, 1.0))

    loc_raw = np.atleast_1d(raw["loc"])
    loc_bounds = np.asarray(bounds["loc"], dtype=float).reshape(-1, 2)
    if loc_bounds.shape[0] == 1:
        loc_bounds = np.repeat(loc_bounds, loc_raw.size, axis=0)
    loc = tuple(scale(x, lo, hi, f"loc[{i}]") for i, (x, (lo, hi)) in enumerate(zip(loc_raw, loc_bounds)))
    rest = {name: scale(raw[name], *bounds[name], name) for name in FEATURE_NAMES[1:]}
    return ScenarioFeatures(loc=loc, **rest)


def feature_angle(x: float) -> float:
    return 2.0 * math.asin(math.sqrt(x))


def encode_feature(x: float) -> qc.StateVector:
    """sqrt(1-x)|0> + sqrt(x)|1> via R_Y(2 arcsin sqrt x)."""
    if not 0.0 <= x <= 1.0:
        raise RangeError(f"feature value {x} outside [0, 1]")
    return qc.apply_ry(qc.StateVector.zeros(1), 0, feature_angle(x), role="feature")


def _feature_vector(features) -> np.ndarray:
    if isinstance(features, ScenarioFeatures):
        return features.vector
    return np.asarray(features, dtype=float).ravel()


def encode_scenario(features, cfg: Optional[QMetaConfig] = None, weights=None) -> qc.StateVector:
    """Tensor product of amplitude-encoded feature qubits.

    ``weights`` are optional per-feature scale factors; after normalization
    they have no observable effect on the product state.
    """
    x = _feature_vector(features)
    max_qubits = qc.DEFAULT_MAX_QUBITS
    if cfg is not None:
        if x.size != cfg.feature_qubits:
            raise ShapeError(f"{x.size} features for {cfg.feature_qubits} feature qubits")
        max_qubits = cfg.max_qubits
    if x.size > max_qubits:
        raise CapacityError(f"{x.size} feature qubits exceeds capacity of {max_qubits}")
    weights = np.ones(x.size) if weights is None else np.asarray(weights, dtype=float)
    state = qc.StateVector(np.ones(1))
    for xi, wi in zip(x, weights):
        sub = encode_feature(float(xi))
        state = qc.tensor(state, qc.StateVector(wi * sub.amplitudes), max_qubits=max_qubits)
    return qc.normalize(state)


# -- path registry -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PathRegistry:
    """Per-path classical state: scores ``J``, usage counters ``C`` and the
    R_Y angles of each path unitary (``L x P x q``)."""

    scores: np.ndarray
    usage: np.ndarray
    path_params: np.ndarray
    gamma: float = 0.1
    eta: float = 0.9

    def __post_init__(self):
        scores = np.array(self.scores, dtype=float)
        usage = np.array(self.usage, dtype=np.int64)
        params = np.array(self.path_params, dtype=float)
        if params.ndim == 2:
            params = params[:, :, None]
        if scores.ndim != 2 or usage.shape != scores.shape or params.shape[:2] != scores.shape:
            raise ShapeError("scores, usage and path_params must share an L x P layout")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "usage", usage)
        object.__setattr__(self, "path_params", params)

    @classmethod
    def initialize(cls, cfg: QMetaConfig) -> "PathRegistry":
        rng = np.random.default_rng(cfg.path_seed)
        params = rng.uniform(0.0, 2 * math.pi, size=(cfg.layers, cfg.paths, cfg.path_qubits))
        return cls(
            scores=np.full((cfg.layers, cfg.paths), cfg.j0),
            usage=np.zeros((cfg.layers, cfg.paths), dtype=np.int64),
            path_params=params,
            gamma=cfg.gamma,
            eta=cfg.eta,
        )

    @property
    def layers(self) -> int:
        return self.scores.shape[0]

    @property
    def paths(self) -> int:
        return self.scores.shape[1]

    def to_dict(self) -> dict:
        return {
            "L": self.layers,
            "P": self.paths,
            "gamma": self.gamma,
            "eta": self.eta,
            "J": self.scores.tolist(),
            "C": self.usage.tolist(),
            "path_params": self.path_params.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PathRegistry":
        reg = cls(
            scores=d["J"],
            usage=d["C"],
            path_params=np.asarray(d["path_params"], dtype=float).reshape(d["L"], d["P"], -1),
            gamma=float(d["gamma"]),
            eta=float(d["eta"]),
        )
        if reg.scores.shape != (d["L"], d["P"]):
            raise ShapeError("checkpoint J matrix does not match L x P")
        return reg

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "PathRegistry":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def update_scores(registry: PathRegistry, observed) -> PathRegistry:
    """Exponential moving average J <- eta*J + (1-eta)*observed.

    Observations are floored at a tiny positive value so scores stay
    strictly positive.
    """
    eta = registry.eta
    if not 0 < eta < 1:
        raise ParameterError("eta must be in (0, 1)")
    obs = np.asarray(observed, dtype=float)
    if obs.shape != registry.scores.shape:
        raise ShapeError(f"observed scores {obs.shape} != registry {registry.scores.shape}")
    obs = np.maximum(obs, SCORE_FLOOR)
    return replace(registry, scores=eta * registry.scores + (1.0 - eta) * obs)


def path_amplitudes(registry: PathRegistry) -> np.ndarray:
    """A[l, p] = sqrt(J) exp(-gamma C) normalized over p within each layer."""
    if np.any(registry.scores <= 0):
        raise NumericError("path scores must be strictly positive")
    w = np.sqrt(registry.scores) * np.exp(-registry.gamma * registry.usage)
    total = w.sum(axis=1, keepdims=True)
    amps = w / total
    if not np.all(np.isfinite(amps)) or np.any(total <= 0):
        raise NumericError("non-finite path amplitude")
    return amps


def select_top_k(amps, k_top: int) -> list:
    """Indices of the ``k_top`` largest amplitudes per layer, ties to the
    lowest index.  Returned sorted ascending."""
    amps = np.atleast_2d(amps)
    if not 1 <= k_top <= amps.shape[1]:
        raise ParameterError(f"k_top must be in [1, {amps.shape[1]}]")
    out = []
    for row in amps:
        order = np.lexsort((np.arange(row.size), -row))
        out.append(sorted(int(i) for i in order[:k_top]))
    return out


# -- circuits ----------------------------------------------------------------


def path_circuit(layer: int, path: int, registry: PathRegistry, cfg: QMetaConfig, features) -> list:
    """Gate list of the path unitary for ``(layer, path)``."""
    ops = []
    if layer > 0:
        x = _feature_vector(features)
        ops += [qc.GateOp.ry(m, feature_angle(float(xm)), role="feature") for m, xm in enumerate(x)]
    for qubit, angle in zip(cfg.path_register(layer), registry.path_params[layer, path]):
        ops.append(qc.GateOp.ry(qubit, angle, role="path"))
    return ops


def entangler(cfg: QMetaConfig) -> list:
    """One CNOT per path qubit, controlled by feature qubits in round robin."""
    ops = []
    for layer in range(cfg.layers):
        for j, target in enumerate(cfg.path_register(layer)):
            control = (layer * cfg.path_qubits + j) % cfg.feature_qubits
            ops.append(qc.GateOp.cnot(control, target, role="entangler"))
    return ops


def extract_phases(evolved: qc.StateVector, n_elements: int, cfg: Optional[QMetaConfig] = None) -> PhaseVector:
    """Decode N phases from the per-qubit <Z> readout.

    Qubit m gives the anchor phase pi*(1 - <Z_m>); anchors are spread evenly
    over the element index and linearly interpolated.  The 2*pi end of the
    range wraps to 0.
    """
    z = qc.z_expectations(evolved)
    raw = math.pi * (1.0 - z)
    if z.size == 1:
        phases = np.full(n_elements, raw[0])
    else:
        anchors = np.linspace(0.0, n_elements - 1, z.size)
        phases = np.interp(np.arange(n_elements), anchors, raw)
    return PhaseVector(phases)


# -- the two passes ----------------------------------------------------------


def _blank_paths(cfg: QMetaConfig) -> qc.StateVector:
    return qc.StateVector.zeros(cfg.layers * cfg.path_qubits)


def scoring_pass(
    psi: qc.StateVector,
    features,
    registry: PathRegistry,
    cfg: QMetaConfig,
    chs: ChannelSet,
    budget: LinkBudget,
    trace: Optional[list] = None,
) -> np.ndarray:
    """Objective value of every single path, evaluated classically.

    Each path unitary acts on its own copy of ``psi`` (path registers in
    |0>); the decoded phases are scored with alpha1*SE - alpha2*E.
    """
    scores = np.empty((cfg.layers, cfg.paths))
    for layer in range(cfg.layers):
        for p in range(cfg.paths):
            state = qc.tensor(psi, _blank_paths(cfg), max_qubits=cfg.max_qubits)
            state = qc.apply_circuit(state, path_circuit(layer, p, registry, cfg, features))
            phases = extract_phases(state, chs.n_elements, cfg)
            scores[layer, p] = objective(chs, phases, budget, cfg.alpha1, cfg.alpha2)
            if trace is not None:
                trace.append(state)
    return scores


def build_active_superposition(
    psi: qc.StateVector,
    selected: Sequence,
    amps,
    registry: PathRegistry,
    cfg: QMetaConfig,
) -> qc.StateVector:
    """Scenario register (x) per-layer sum_{p in S_l} A_lp |p>, then the CNOT
    entangler."""
    amps = np.asarray(amps)
    state = psi
    dim = 1 << cfg.path_qubits
    for layer in range(cfg.layers):
        reg = np.zeros(dim)
        for p in selected[layer]:
            reg[p] = amps[layer, p]
        norm = np.linalg.norm(reg)
        if norm == 0:
            raise DegenerateStateError(f"all selected amplitudes of layer {layer} are zero")
        state = qc.tensor(state, qc.StateVector(reg / norm), max_qubits=cfg.max_qubits)
    state = qc.apply_circuit(state, entangler(cfg))
    return qc.normalize(state)


def evolve(
    active: qc.StateVector,
    selected: Sequence,
    amps,
    registry: PathRegistry,
    cfg: QMetaConfig,
    features,
    norms: Optional[list] = None,
) -> qc.StateVector:
    """Layer by layer, apply sum_{p in S_l} A_lp U_lp.  No measurement."""
    amps = np.asarray(amps)
    state = active
    for layer in range(cfg.layers):
        terms = [(amps[layer, p], path_circuit(layer, p, registry, cfg, features)) for p in selected[layer]]
        state, norm = qc.apply_weighted_sum(state, terms, return_norm=True)
        if norms is not None:
            norms.append(norm)
    return state


def infer(features, registry: PathRegistry, cfg: QMetaConfig, n_elements: int, trace: Optional[list] = None):
    """Inference pass only: fresh encode, superpose, evolve, decode.

    Returns ``(phases, selected)``.
    """
    amps = path_amplitudes(registry)
    selected = select_top_k(amps, cfg.k_top)
    qc.mark("inference:start")
    psi = encode_scenario(features, cfg)
    active = build_active_superposition(psi, selected, amps, registry, cfg)
    qc.mark("evolve:start")
    evolved = evolve(active, selected, amps, registry, cfg, features)
    qc.mark("evolve:end")
    phases = extract_phases(evolved, n_elements, cfg)
    qc.mark("inference:end")
    if trace is not None:
        trace.extend([psi, active, evolved])
    if cfg.quantize_bits:
        phases = quantize_phases(phases, cfg.quantize_bits)
    return phases, selected


@dataclass
class EpisodeRecord:
    episode: int = 0
    seed: int = 0
    method: str = "qmetapath"
    se: float = 0.0
    objective: float = 0.0
    energy: float = 0.0
    selected: list = field(default_factory=list)
    latency_ms: float = 0.0
    features: Optional[tuple] = None

    def paths_label(self) -> str:
        return "|".join(",".join(str(p) for p in layer) for layer in self.selected)


@dataclass
class EpisodeTrace:
    """States produced by each pass, kept for isolation checks."""

    scoring: list = field(default_factory=list)
    inference: list = field(default_factory=list)


def run_episode(
    features,
    registry: PathRegistry,
    cfg: QMetaConfig,
    chs: ChannelSet,
    budget: LinkBudget,
    eval_chs: Optional[ChannelSet] = None,
    trace: Optional[EpisodeTrace] = None,
):
    """One scenario of the meta-learning loop.

    ``chs`` is the channel the algorithm sees (possibly an imperfect
    estimate); metrics in the record are evaluated on ``eval_chs`` when
    given.  Returns ``(phases, record, updated_registry)``.
    """
    t0 = time.perf_counter()
    qc.mark("scoring:start")
    psi_score = encode_scenario(features, cfg)
    observed = scoring_pass(
        psi_score, features, registry, cfg, chs, budget, trace=None if trace is None else trace.scoring
    )
    if trace is not None:
        trace.scoring.append(psi_score)
    qc.mark("scoring:end")
    registry = update_scores(registry, observed)
    phases, selected = infer(
        features, registry, cfg, chs.n_elements, trace=None if trace is None else trace.inference
    )
    usage = registry.usage.copy()
    for layer, paths in enumerate(selected):
        usage[layer, paths] += 1
    registry = replace(registry, usage=usage)
    latency = (time.perf_counter() - t0) * 1e3

    target = chs if eval_chs is None else eval_chs
    record = EpisodeRecord(
        se=spectral_efficiency(target, phases, budget),
        objective=objective(target, phases, budget, cfg.alpha1, cfg.alpha2),
        energy=energy_cost(phases),
        selected=selected,
        latency_ms=latency,
        features=tuple(_feature_vector(features)),
    )
    return phases, record, registry
