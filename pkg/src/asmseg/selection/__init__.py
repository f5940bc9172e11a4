from .discretize import (
    DiscretizationTable,
    bin_edges,
    discretize,
    discretize_matrix,
    discretize_vector,
    fit_discretization,
)
from .models import (
    KINDS,
    InsufficientClassesError,
    LinearMarginSelector,
    NaiveBayesSelector,
    NoMoreAlgorithms,
    PerceptronSelector,
    RulesInapplicableError,
    RulesSelector,
    SelectionError,
    SelectionSample,
    Selector,
    algorithm_scores,
    normalize_kind,
    select_algorithm,
    selector_accuracy,
    train_selector,
)
from .persist import format_selector, load_selector, parse_selector, save_selector

__all__ = [
    "DiscretizationTable",
    "bin_edges",
    "discretize",
    "discretize_matrix",
    "discretize_vector",
    "fit_discretization",
    "KINDS",
    "InsufficientClassesError",
    "LinearMarginSelector",
    "NaiveBayesSelector",
    "NoMoreAlgorithms",
    "PerceptronSelector",
    "RulesInapplicableError",
    "RulesSelector",
    "SelectionError",
    "SelectionSample",
    "Selector",
    "algorithm_scores",
    "normalize_kind",
    "select_algorithm",
    "selector_accuracy",
    "train_selector",
    "format_selector",
    "load_selector",
    "parse_selector",
    "save_selector",
]
