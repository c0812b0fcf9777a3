"""Per-concept online linear classifiers with hierarchy-consistent output.

The baseline learner keeps one binary perceptron per concept node; raw
decisions threshold at score > 0 (a zero score counts negative for
determinism) and predictions are made consistent by downward repair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import _kernels
from .errors import InconsistentLabelError
from .hierarchy import Hierarchy
from .labels import LabelVector, check_consistency, repair_downward


@dataclass
class OnlinePerceptron:
    """Independent per-node perceptrons over a shared feature vector."""

    weights: np.ndarray
    bias: np.ndarray
    learning_rate: float = 1.0
    steps: int = 0

    @classmethod
    def zeros(cls, n_nodes: int, n_features: int, learning_rate: float = 1.0) -> "OnlinePerceptron":
        return cls(
            weights=np.zeros((n_nodes, n_features), dtype=np.float64),
            bias=np.zeros(n_nodes, dtype=np.float64),
            learning_rate=learning_rate,
        )

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def scores(self, x: np.ndarray) -> np.ndarray:
        return self.weights @ np.asarray(x, dtype=np.float64) + self.bias

    def copy(self) -> "OnlinePerceptron":
        return OnlinePerceptron(
            self.weights.copy(), self.bias.copy(), self.learning_rate, self.steps
        )


@dataclass(frozen=True)
class QueryStrategy:
    """When to ask the simulated user for labels."""

    kind: Literal["always", "never", "margin"] = "always"
    tau: float = 0.0

    def __post_init__(self):
        if self.kind not in ("always", "never", "margin"):
            raise ValueError(f"unknown query strategy {self.kind!r}")
        if self.kind == "margin" and self.tau < 0:
            raise ValueError("margin tau must be >= 0")

    @classmethod
    def parse(cls, spec: str) -> "QueryStrategy":
        """Parse 'always', 'never', or 'margin:<tau>'."""
        if ":" in spec:
            kind, _, tau = spec.partition(":")
            return cls(kind=kind.strip(), tau=float(tau))  # type: ignore[arg-type]
        return cls(kind=spec.strip())  # type: ignore[arg-type]

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "margin":
            out["tau"] = self.tau
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "QueryStrategy":
        return cls(kind=d.get("kind", "always"), tau=float(d.get("tau", 0.0)))


def decide_query(strategy: QueryStrategy, x: np.ndarray, model: OnlinePerceptron) -> bool:
    """True when the learner should acquire labels for this instance."""
    if strategy.kind == "always":
        return True
    if strategy.kind == "never":
        return False
    margins = np.abs(model.scores(x))
    return bool((margins <= strategy.tau).any())


def train_step(
    model: OnlinePerceptron, x: np.ndarray, y: LabelVector, h: Hierarchy
) -> OnlinePerceptron:
    """One online update on (x, y); y must be hierarchy-consistent."""
    violations = check_consistency(h, y)
    if violations:
        v = violations[0]
        raise InconsistentLabelError(
            f"label vector sets {v.child} without its parent {v.parent}"
        )
    x64 = np.ascontiguousarray(x, dtype=np.float64)
    y8 = np.ascontiguousarray(y, dtype=np.uint8)
    _kernels.perceptron_step(model.weights, model.bias, x64, y8, model.learning_rate)
    model.steps += 1
    return model


def predict(model: OnlinePerceptron, x: np.ndarray, h: Hierarchy) -> LabelVector:
    """Threshold raw scores at 0 and repair downward; always consistent."""
    raw = (model.scores(x) > 0.0).astype(np.uint8)
    return repair_downward(h, raw)
