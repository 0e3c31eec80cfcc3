"""Core data models shared across the framework."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any

import numpy as np

from src.errors import ConfigurationError
from src.flows.ordering import CausalOrdering


class Activation(Enum):
    """Hidden-layer non-linearity of a conditioner network."""

    LEAKY_RELU = "leaky_relu"
    TANH = "tanh"
    IDENTITY = "identity"


class BaseKind(Enum):
    """Factorial base density of a flow (isotropic, zero location, unit scale)."""

    LAPLACE = "laplace"
    GAUSSIAN = "gaussian"


class Decision(Enum):
    """Outcome of a likelihood-ratio direction test."""

    X1_CAUSES_X2 = "x1_causes_x2"
    X2_CAUSES_X1 = "x2_causes_x1"
    UNDECIDED = "undecided"

    def mirrored(self) -> Decision:
        if self is Decision.X1_CAUSES_X2:
            return Decision.X2_CAUSES_X1
        if self is Decision.X2_CAUSES_X1:
            return Decision.X1_CAUSES_X2
        return self


class InterventionMode(Enum):
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"


class Family(Enum):
    """Synthetic SEM families used by the benchmarks."""

    LINEAR = "linear"
    NONLINEAR_ADDITIVE = "nonlinear_additive"
    MODULATED_NOISE = "modulated_noise"
    SIGMOID_NONLINEAR_NOISE = "sigmoid_nonlinear_noise"
    HIGHDIM_PAIR = "highdim_pair"
    INTERVENTION_SEM = "intervention_sem"

    @property
    def is_bivariate(self) -> bool:
        return self in BIVARIATE_FAMILIES


BIVARIATE_FAMILIES = (
    Family.LINEAR,
    Family.NONLINEAR_ADDITIVE,
    Family.MODULATED_NOISE,
    Family.SIGMOID_NONLINEAR_NOISE,
)


class NoiseKind(Enum):
    LAPLACE = "laplace"
    STUDENT_T = "student_t"
    GAUSSIAN = "gaussian"


def parse_enum(enum_cls: type[Enum], raw: Any, field_name: str) -> Any:
    if isinstance(raw, enum_cls):
        return raw
    try:
        return enum_cls(raw)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_cls)
        raise ConfigurationError(
            f"invalid {field_name}: {raw!r} (expected one of: {allowed})"
        ) from None


def config_digest(payload: dict) -> str:
    """Short stable digest of a JSON-serialisable config."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


# ---- training configuration ---------------------------------------------


@dataclass(frozen=True)
class ArchitectureConfig:
    """Shape of one flow: number of stacked layers and conditioner widths."""

    n_layers_flow: int = 2
    hidden_dims: tuple[int, ...] = (10,)
    activation: Activation = Activation.LEAKY_RELU
    negative_slope: float = 0.01

    def __post_init__(self) -> None:
        if self.n_layers_flow < 1:
            raise ConfigurationError("n_layers_flow must be >= 1")
        if any(h < 1 for h in self.hidden_dims):
            raise ConfigurationError(f"hidden_dims must be positive: {self.hidden_dims}")

    @classmethod
    def from_dict(cls, data: dict) -> ArchitectureConfig:
        return cls(
            n_layers_flow=int(data.get("n_layers_flow", 2)),
            hidden_dims=tuple(int(h) for h in data.get("hidden_dims", (10,))),
            activation=parse_enum(Activation, data.get("activation", "leaky_relu"), "activation"),
            negative_slope=float(data.get("negative_slope", 0.01)),
        )

    def to_dict(self) -> dict:
        return {
            "n_layers_flow": self.n_layers_flow,
            "hidden_dims": list(self.hidden_dims),
            "activation": self.activation.value,
            "negative_slope": self.negative_slope,
        }


@dataclass(frozen=True)
class SchedulerConfig:
    """Reduce-on-plateau learning-rate schedule."""

    factor: float = 0.1
    patience: int = 10
    threshold: float = 1e-4

    def __post_init__(self) -> None:
        if not 0.0 < self.factor < 1.0:
            raise ConfigurationError(f"scheduler factor must be in (0, 1), got {self.factor}")
        if self.patience < 1:
            raise ConfigurationError("scheduler patience must be >= 1")
        if self.threshold < 0:
            raise ConfigurationError("scheduler threshold must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> SchedulerConfig:
        return cls(
            factor=float(data.get("factor", 0.1)),
            patience=int(data.get("patience", 10)),
            threshold=float(data.get("threshold", 1e-4)),
        )


@dataclass(frozen=True)
class TrainConfig:
    """Everything needed to fit one flow by maximum likelihood."""

    epochs: int = 200
    batch_size: int = 128
    lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    split_fraction: float = 0.8
    seed: int = 0
    architecture: ArchitectureConfig = field(default_factory=ArchitectureConfig)
    alternative_architectures: tuple[ArchitectureConfig, ...] = ()
    base_kind: BaseKind = BaseKind.LAPLACE
    additive_only: bool = False
    decision_threshold: float = 0.0
    scale_clamp: float = 7.0
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if not self.lr > 0:
            raise ConfigurationError("lr must be positive")
        if len(self.betas) != 2 or not all(0.0 < b < 1.0 for b in self.betas):
            raise ConfigurationError(f"betas must be two reals in (0, 1), got {self.betas}")
        if not self.eps > 0:
            raise ConfigurationError("eps must be positive")
        if not 0.0 < self.split_fraction <= 1.0:
            raise ConfigurationError("split_fraction must be in (0, 1]")
        if self.seed < 0:
            raise ConfigurationError("seed must be a non-negative integer")
        if self.decision_threshold < 0:
            raise ConfigurationError("decision_threshold must be >= 0")
        if not self.scale_clamp > 0:
            raise ConfigurationError("scale_clamp must be positive")

    @property
    def candidate_architectures(self) -> tuple[ArchitectureConfig, ...]:
        return (self.architecture, *self.alternative_architectures)

    def with_seed(self, seed: int) -> TrainConfig:
        return replace(self, seed=seed)

    @classmethod
    def from_dict(cls, data: dict) -> TrainConfig:
        betas = data.get("betas", (0.9, 0.999))
        return cls(
            epochs=int(data.get("epochs", 200)),
            batch_size=int(data.get("batch_size", 128)),
            lr=float(data.get("lr", 1e-3)),
            betas=(float(betas[0]), float(betas[1])),
            eps=float(data.get("eps", 1e-8)),
            scheduler=SchedulerConfig.from_dict(data.get("scheduler", {})),
            split_fraction=float(data.get("split_fraction", 0.8)),
            seed=int(data.get("seed", 0)),
            architecture=ArchitectureConfig.from_dict(data.get("architecture", {})),
            alternative_architectures=tuple(
                ArchitectureConfig.from_dict(a)
                for a in data.get("alternative_architectures", [])
            ),
            base_kind=parse_enum(BaseKind, data.get("base_kind", "laplace"), "base_kind"),
            additive_only=bool(data.get("additive_only", False)),
            decision_threshold=float(data.get("decision_threshold", 0.0)),
            scale_clamp=float(data.get("scale_clamp", 7.0)),
            n_jobs=int(data.get("n_jobs", 1)),
        )

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "betas": list(self.betas),
            "eps": self.eps,
            "scheduler": asdict(self.scheduler),
            "split_fraction": self.split_fraction,
            "seed": self.seed,
            "architecture": self.architecture.to_dict(),
            "alternative_architectures": [a.to_dict() for a in self.alternative_architectures],
            "base_kind": self.base_kind.value,
            "additive_only": self.additive_only,
            "decision_threshold": self.decision_threshold,
            "scale_clamp": self.scale_clamp,
            "n_jobs": self.n_jobs,
        }

    def digest(self) -> str:
        # n_jobs does not influence results
        payload = self.to_dict()
        payload.pop("n_jobs")
        return config_digest(payload)


# ---- discovery reports ---------------------------------------------------


def decide(ratio: float, threshold: float) -> Decision:
    """Map a likelihood ratio to a decision with a symmetric dead band."""
    if ratio > threshold:
        return Decision.X1_CAUSES_X2
    if ratio < -threshold:
        return Decision.X2_CAUSES_X1
    return Decision.UNDECIDED


@dataclass(frozen=True)
class DirectionReport:
    """Held-out log-likelihoods of both orderings and the resulting decision."""

    loglik_forward: float
    loglik_backward: float
    threshold: float = 0.0
    fit_meta: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.loglik_forward - self.loglik_backward

    @property
    def decision(self) -> Decision:
        return decide(self.ratio, self.threshold)

    @property
    def confidence(self) -> float:
        return abs(self.ratio)

    def to_dict(self) -> dict:
        return {
            "loglik_forward": self.loglik_forward,
            "loglik_backward": self.loglik_backward,
            "R": self.ratio,
            "threshold": self.threshold,
            "decision": self.decision.value,
            "fit_meta": self.fit_meta,
        }


@dataclass(frozen=True)
class OrderingReport:
    """Orderings ranked by mean held-out log-likelihood, best first."""

    ranking: tuple[tuple[CausalOrdering, float], ...]
    fit_meta: dict = field(default_factory=dict)

    @property
    def best(self) -> CausalOrdering:
        return self.ranking[0][0]

    @property
    def tied(self) -> bool:
        """True when the two best orderings score exactly the same.

        ``best`` then falls back to permutation order, so at d=2 a tie
        reports x1 before x2 where the bivariate test says undecided.
        """
        return len(self.ranking) > 1 and self.ranking[0][1] == self.ranking[1][1]

    def to_dict(self) -> dict:
        return {
            "best": self.best.labels(),
            "tied": self.tied,
            "ranking": [
                {"ordering": ordering.labels(), "test_loglik": loglik}
                for ordering, loglik in self.ranking
            ],
            "fit_meta": self.fit_meta,
        }


# ---- causal queries ------------------------------------------------------


@dataclass(frozen=True)
class InterventionQuery:
    """do(x_target = value); ``target`` is a 0-based column index."""

    target: int
    value: float
    n_samples: int = 1000
    mode: InterventionMode = InterventionMode.SEQUENTIAL
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ConfigurationError("n_samples must be >= 1")
        if not math.isfinite(self.value):
            raise ConfigurationError("intervention value must be finite")


@dataclass(frozen=True)
class CounterfactualQuery:
    """What would ``x_obs`` have been had x_target been ``value``."""

    x_obs: tuple[float, ...]
    target: int
    value: float


@dataclass(frozen=True)
class InterventionResult:
    """Samples from the mutilated model, in original data units."""

    samples: np.ndarray
    target: int
    value: float
    mode: InterventionMode = InterventionMode.SEQUENTIAL

    @property
    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        n = self.samples.shape[0]
        if n < 2:
            return np.zeros(self.samples.shape[1])
        return self.samples.std(axis=0, ddof=1) / math.sqrt(n)

    def to_dict(self) -> dict:
        return {
            "target": f"x{self.target + 1}",
            "value": self.value,
            "mode": self.mode.value,
            "n_samples": int(self.samples.shape[0]),
            "mean": [float(v) for v in self.mean],
            "stderr": [float(v) for v in self.stderr],
        }


# ---- synthetic data ------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Declarative description of one synthetic SEM draw."""

    family: Family
    n: int
    seed: int = 0
    coeff: float = 1.0
    noise_kind: NoiseKind = NoiseKind.LAPLACE
    dof: float = 3.0
    flip_direction: bool = False
    # high-dimensional pair: restrict the randomly assigned output forms
    forms: tuple[int, ...] | None = None
    # intervention SEM: fixed coefficients instead of drawing them
    c1: float | None = None
    c2: float | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if self.noise_kind is NoiseKind.STUDENT_T and not self.dof > 2:
            raise ConfigurationError("student_t noise needs dof > 2")
        if self.forms is not None and (
            not self.forms or any(f not in (1, 2, 3) for f in self.forms)
        ):
            raise ConfigurationError(f"forms must be a non-empty subset of (1, 2, 3): {self.forms}")

    @classmethod
    def from_dict(cls, data: dict) -> SyntheticSpec:
        forms = data.get("forms")
        return cls(
            family=parse_enum(Family, data["family"], "family"),
            n=int(data["n"]),
            seed=int(data.get("seed", 0)),
            coeff=float(data.get("coeff", 1.0)),
            noise_kind=parse_enum(NoiseKind, data.get("noise_kind", "laplace"), "noise_kind"),
            dof=float(data.get("dof", 3.0)),
            flip_direction=bool(data.get("flip_direction", False)),
            forms=tuple(int(f) for f in forms) if forms is not None else None,
            c1=data.get("c1"),
            c2=data.get("c2"),
        )

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "n": self.n,
            "seed": self.seed,
            "coeff": self.coeff,
            "noise_kind": self.noise_kind.value,
            "dof": self.dof,
            "flip_direction": self.flip_direction,
            "forms": list(self.forms) if self.forms is not None else None,
            "c1": self.c1,
            "c2": self.c2,
        }


@dataclass(frozen=True)
class BenchmarkGrid:
    """Families x sample sizes x repetitions (x architectures) of direction tests.

    An empty ``architectures`` uses the training config's own architecture.
    """

    families: tuple[Family, ...] = BIVARIATE_FAMILIES
    sample_sizes: tuple[int, ...] = (25, 50, 100, 250, 500)
    reps: int = 25
    noise_kind: NoiseKind = NoiseKind.LAPLACE
    dof: float = 3.0
    coeff: float = 1.0
    random_flip: bool = True
    architectures: tuple[ArchitectureConfig, ...] = ()

    def __post_init__(self) -> None:
        if not self.families:
            raise ConfigurationError("benchmark needs at least one family")
        if Family.INTERVENTION_SEM in self.families:
            raise ConfigurationError("intervention_sem has no direction to benchmark")
        if not self.sample_sizes or any(n < 10 for n in self.sample_sizes):
            raise ConfigurationError(f"sample sizes must be >= 10: {self.sample_sizes}")
        if self.reps < 1:
            raise ConfigurationError("reps must be >= 1")
        if self.noise_kind is NoiseKind.STUDENT_T and not self.dof > 2:
            raise ConfigurationError("student_t noise needs dof > 2")

    @property
    def n_rows(self) -> int:
        return (
            len(self.families)
            * len(self.sample_sizes)
            * self.reps
            * max(1, len(self.architectures))
        )

    @classmethod
    def from_dict(cls, data: dict) -> BenchmarkGrid:
        families = data.get("families")
        return cls(
            families=(
                tuple(parse_enum(Family, f, "family") for f in families)
                if families is not None
                else BIVARIATE_FAMILIES
            ),
            sample_sizes=tuple(int(n) for n in data.get("sample_sizes", (25, 50, 100, 250, 500))),
            reps=int(data.get("reps", 25)),
            noise_kind=parse_enum(NoiseKind, data.get("noise_kind", "laplace"), "noise_kind"),
            dof=float(data.get("dof", 3.0)),
            coeff=float(data.get("coeff", 1.0)),
            random_flip=bool(data.get("random_flip", True)),
            architectures=tuple(
                ArchitectureConfig.from_dict(a) for a in data.get("architectures", [])
            ),
        )

    def to_dict(self) -> dict:
        return {
            "families": [f.value for f in self.families],
            "sample_sizes": list(self.sample_sizes),
            "reps": self.reps,
            "noise_kind": self.noise_kind.value,
            "dof": self.dof,
            "coeff": self.coeff,
            "random_flip": self.random_flip,
            "architectures": [a.to_dict() for a in self.architectures],
        }


DEFAULT_SWEEP_VALUES = tuple(float(v) for v in np.round(np.arange(-2.0, 2.01, 0.5), 2))
DEFAULT_X_OBS = (2.0, 1.5, 0.81, -0.28)


def _pairs(items, name: str) -> tuple[tuple[int, int], ...]:
    """``[[target, response], ...]`` with 1-based labels to 0-based tuples."""
    pairs = []
    for item in items:
        if len(item) != 2:
            raise ConfigurationError(f"{name} entries are [target, response] pairs: {item!r}")
        pairs.append((int(item[0]) - 1, int(item[1]) - 1))
    return tuple(pairs)


@dataclass(frozen=True)
class QuerySweep:
    """Interventional and counterfactual queries on the 4-variable SEM over a value grid.

    Every (N, repetition) cell fits one flow in the true ordering and
    answers each query at every value. ``interventions`` and
    ``counterfactuals`` hold 0-based (target, response) pairs.
    """

    sample_sizes: tuple[int, ...] = (2500,)
    reps: int = 1
    values: tuple[float, ...] = DEFAULT_SWEEP_VALUES
    interventions: tuple[tuple[int, int], ...] = ((0, 2), (0, 3))
    counterfactuals: tuple[tuple[int, int], ...] = ((1, 2), (0, 3))
    x_obs: tuple[float, ...] = DEFAULT_X_OBS
    n_samples: int = 10_000
    mode: InterventionMode = InterventionMode.SEQUENTIAL
    noise_kind: NoiseKind = NoiseKind.LAPLACE
    dof: float = 3.0
    c1: float | None = None
    c2: float | None = None

    def __post_init__(self) -> None:
        if not self.sample_sizes or any(n < 10 for n in self.sample_sizes):
            raise ConfigurationError(f"sample sizes must be >= 10: {self.sample_sizes}")
        if self.reps < 1:
            raise ConfigurationError("reps must be >= 1")
        if not self.values or not all(math.isfinite(v) for v in self.values):
            raise ConfigurationError("sweep values must be finite and non-empty")
        if self.n_samples < 1:
            raise ConfigurationError("n_samples must be >= 1")
        if not self.interventions and not self.counterfactuals:
            raise ConfigurationError("sweep needs at least one intervention or counterfactual")
        if len(self.x_obs) != 4:
            raise ConfigurationError(f"x_obs needs 4 values, got {len(self.x_obs)}")
        for target, response in (*self.interventions, *self.counterfactuals):
            if not (0 <= target < 4 and 0 <= response < 4) or target == response:
                raise ConfigurationError(
                    f"query pair (x{target + 1}, x{response + 1}) must name two "
                    "different variables of x1..x4"
                )
        if self.noise_kind is NoiseKind.STUDENT_T and not self.dof > 2:
            raise ConfigurationError("student_t noise needs dof > 2")

    @classmethod
    def from_dict(cls, data: dict) -> QuerySweep:
        return cls(
            sample_sizes=tuple(int(n) for n in data.get("sample_sizes", (2500,))),
            reps=int(data.get("reps", 1)),
            values=tuple(float(v) for v in data.get("values", DEFAULT_SWEEP_VALUES)),
            interventions=_pairs(data.get("interventions", [[1, 3], [1, 4]]), "interventions"),
            counterfactuals=_pairs(data.get("counterfactuals", [[2, 3], [1, 4]]), "counterfactuals"),
            x_obs=tuple(float(v) for v in data.get("x_obs", DEFAULT_X_OBS)),
            n_samples=int(data.get("n_samples", 10_000)),
            mode=parse_enum(InterventionMode, data.get("mode", "sequential"), "mode"),
            noise_kind=parse_enum(NoiseKind, data.get("noise_kind", "laplace"), "noise_kind"),
            dof=float(data.get("dof", 3.0)),
            c1=data.get("c1"),
            c2=data.get("c2"),
        )

    def to_dict(self) -> dict:
        return {
            "sample_sizes": list(self.sample_sizes),
            "reps": self.reps,
            "values": list(self.values),
            "interventions": [[t + 1, r + 1] for t, r in self.interventions],
            "counterfactuals": [[t + 1, r + 1] for t, r in self.counterfactuals],
            "x_obs": list(self.x_obs),
            "n_samples": self.n_samples,
            "mode": self.mode.value,
            "noise_kind": self.noise_kind.value,
            "dof": self.dof,
            "c1": self.c1,
            "c2": self.c2,
        }


@dataclass(frozen=True)
class GeneratedDataset:
    """Synthetic data plus the ground truth that produced it."""

    data: np.ndarray
    true_ordering: CausalOrdering
    generating_params: dict
    # cause block first; set for block-structured families
    blocks: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    @property
    def true_decision(self) -> Decision:
        """Direction label for the first half of the columns vs the second half."""
        if self.blocks is not None:
            return Decision.X1_CAUSES_X2 if self.blocks[0][0] == 0 else Decision.X2_CAUSES_X1
        ranks = self.true_ordering.ranks
        return Decision.X1_CAUSES_X2 if ranks[0] < ranks[1] else Decision.X2_CAUSES_X1

    def truth_dict(self) -> dict:
        return {
            "true_ordering": self.true_ordering.labels(),
            "blocks": (
                [[f"x{i + 1}" for i in block] for block in self.blocks]
                if self.blocks is not None
                else None
            ),
            "generating_params": self.generating_params,
        }
