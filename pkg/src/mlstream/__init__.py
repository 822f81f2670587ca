"""Multi-label stream classification: GOOWE-ML, online bagging baselines,
prequential evaluation and significance testing."""
from .core import (ContractError, DataChunk, FeatureSchema, Instance, MultiLabelLearner,
                   label_cardinality, label_density, normalize_relevance, threshold_relevance)
from .ensembles import AdwinBag, GooweML, OzaBag
from .evaluation import MetricReport, instance_metrics, prequential_run
from .registry import MODEL_IDS, build_model

__version__ = "0.1.0"
