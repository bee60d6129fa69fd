"""From-scratch random forests with class weights and multi-output support."""

from .forest import (
    ForestConfig,
    RandomForestModel,
    forest_from_trees,
    split_count_importance,
    train_forest,
    train_tree
)
from .impurity import CRITERIA, class_weights, class_weights_from_counts, node_impurity, split_impurity
from .tree import DecisionTree, TreeBuilder

__all__ = [
    "ForestConfig",
    "RandomForestModel",
    "forest_from_trees",
    "split_count_importance",
    "train_forest",
    "train_tree",
    "CRITERIA",
    "class_weights",
    "class_weights_from_counts",
    "node_impurity",
    "split_impurity",
    "DecisionTree",
    "TreeBuilder"
]
