"""Model identifiers and the constructors behind them.

Component factories are module-level functions bound with
:func:`functools.partial` so whole ensembles stay picklable.
"""
from __future__ import annotations

from functools import partial

from .core import FeatureSchema, MultiLabelLearner
from .ensembles import AdwinBag, GooweML, OzaBag
from .transforms import BinaryRelevance, ClassifierChain, PrunedSets

#: Hoeffding-tree settings of BR and CC components: adaptive Naive Bayes
#: leaves, as in the reference stream-learning toolkits.
TREE_PARAMS = {"leaf_prediction": "nba"}

MODEL_IDS = ("goowe-br", "goowe-cc", "goowe-ps", "ebr", "ecc", "eps", "eabr", "eacc", "eaps")


def br_component(schema: FeatureSchema, n_labels: int, seed: int) -> BinaryRelevance:
    return BinaryRelevance(schema, n_labels, **TREE_PARAMS)


def cc_component(schema: FeatureSchema, n_labels: int, seed: int) -> ClassifierChain:
    return ClassifierChain(schema, n_labels, seed=seed, **TREE_PARAMS)


def ps_component(schema: FeatureSchema, n_labels: int, seed: int,
                 buffer_size: int = 500) -> PrunedSets:
    return PrunedSets(schema, n_labels, buffer_size=buffer_size)


_TRANSFORMS = {"br": br_component, "cc": cc_component, "ps": ps_component}


def component_factory(transform: str, schema: FeatureSchema, n_labels: int, chunk_size: int = 500):
    """``factory(seed)`` building untrained ``transform`` components."""
    if transform not in _TRANSFORMS:
        raise ValueError(f"unknown transform {transform!r}")
    if transform == "ps":
        return partial(ps_component, schema, n_labels, buffer_size=chunk_size)
    return partial(_TRANSFORMS[transform], schema, n_labels)


def build_model(model_id: str, schema: FeatureSchema, n_labels: int, k: int = 10,
                chunk_size: int = 500, seed: int = 0) -> MultiLabelLearner:
    """Construct the ensemble named by ``model_id`` (see :data:`MODEL_IDS`).

    ``goowe-*`` are chunk ensembles, ``e*`` OzaBag and ``ea*`` ADWIN-Bag,
    each over BR, CC or PS components.
    """
    if model_id not in MODEL_IDS:
        raise ValueError(f"unknown model {model_id!r}; choose from {', '.join(MODEL_IDS)}")
    family, transform = model_id.split("-") if "-" in model_id else (model_id[:-2], model_id[-2:])
    factory = component_factory(transform, schema, n_labels, chunk_size)
    if family == "goowe":
        return GooweML(factory, n_labels, max_components=k, chunk_size=chunk_size, seed=seed)
    if family == "e":
        return OzaBag(factory, n_labels, n_components=k, seed=seed)
    return AdwinBag(factory, n_labels, n_components=k, seed=seed)
