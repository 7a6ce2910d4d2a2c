"""Comparator-network cost model of a trained forest.

Each tree level is one comparator level; the trees' votes are combined by a
balanced adder tree of depth ceil(log2(n_trees)). The resulting latency is
split into pipeline stages clocked at the fastest class period.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from .delay import ClassBoundaries
from .ml.forest import TrainedForest

T_CMP_NS = 0.15
E_CMP_PJ = 0.005


@dataclass(frozen=True)
class ClassifierNetlist:
    n_estimators: int
    n_comparators: int
    max_tree_depth: int
    critical_depth: int
    t_cmp: float
    e_cmp: float
    stage_period: float
    stages: int
    e_per_classification: float

    @property
    def latency(self) -> float:
        return self.critical_depth * self.t_cmp

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ClassifierNetlist":
        return cls(**json.loads(text))


def _stages_for(latency: float, period: float) -> int:
    # tolerance keeps exact multiples (e.g. 2 x 1.1 ns) from rounding up a stage
    return max(1, math.ceil(latency / period - 1e-9))


def compile_forest(model: TrainedForest, bounds: ClassBoundaries | None = None,
                   t_cmp: float = T_CMP_NS, e_cmp: float = E_CMP_PJ) -> ClassifierNetlist:
    bounds = bounds or model.boundaries
    if not model.trees:
        raise ValueError("malformed model: no trees")
    n_est = len(model.trees)
    max_depth = max(t.depth for t in model.trees)
    vote_depth = math.ceil(math.log2(n_est)) if n_est > 1 else 0
    critical = max_depth + vote_depth
    comparisons = sum(sum(d) / len(d) for d in (t.leaf_depths() for t in model.trees))
    return ClassifierNetlist(
        n_estimators=n_est,
        n_comparators=sum(t.n_internal for t in model.trees),
        max_tree_depth=max_depth,
        critical_depth=critical,
        t_cmp=t_cmp,
        e_cmp=e_cmp,
        stage_period=bounds.uppers[0],
        stages=_stages_for(critical * t_cmp, bounds.uppers[0]),
        e_per_classification=e_cmp * (comparisons + n_est),
    )


def netlist_report(n: ClassifierNetlist) -> str:
    return (f"comparators={n.n_comparators} trees={n.n_estimators} "
            f"critical_depth={n.critical_depth} latency={n.latency:.3f}ns "
            f"stages={n.stages} energy={n.e_per_classification:.4f}pJ")
