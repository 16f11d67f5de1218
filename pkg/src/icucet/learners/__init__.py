from .boosting import BoostedModel, BoostParams, train_gbt
from .forest import ForestModel, ForestParams, train_forest
from .linear import LinearModel, train_logreg
from .mlp import MlpModel, MlpParams, train_mlp
from .pipeline import (
    FAMILIES,
    DEFAULT_PARAMS,
    TREE_FAMILIES,
    TrainedModel,
    decode_predictions,
    fit_model,
    predict_class_proba,
    predict_label_marginals,
    predict_labels,
)
from .powerset import (
    CLASS_LABELS,
    N_CLASSES,
    compute_class_weights,
    powerset_decode,
    powerset_encode,
)
from .search import DEFAULT_GRIDS, CvResult, expand_grid, grid_search
