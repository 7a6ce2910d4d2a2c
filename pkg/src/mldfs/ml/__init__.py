from .dataset import Dataset
from .forest import (HyperParams, TrainedForest, Tree, gini, table1_estimators,
                     train_forest, train_tree)
from .metrics import Metrics, estimate_static_speedup, evaluate, metrics_from_labels
from .nn import TrainedNet, TrainingDiverged, train_nn
from .serialize import dumps_model, load_model, loads_model, save_model


def train(d: Dataset, hp: HyperParams, boundaries):
    """Train the model selected by ``hp.algo``."""
    if hp.algo == "nn":
        return train_nn(d, hp, boundaries)
    return train_forest(d, hp, boundaries)


__all__ = [
    "Dataset", "HyperParams", "Metrics", "TrainedForest", "TrainedNet", "Tree",
    "TrainingDiverged", "dumps_model", "estimate_static_speedup", "evaluate", "gini",
    "load_model", "loads_model", "metrics_from_labels", "save_model", "table1_estimators",
    "train", "train_forest", "train_nn", "train_tree",
]
