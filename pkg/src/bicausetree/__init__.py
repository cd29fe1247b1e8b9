"""Interpretable average-treatment-effect estimation with balancing trees.

The tree recursively splits on the most treatment-imbalanced covariate,
prunes splits that fail a multiplicity-corrected independence test, flags
leaves whose treatment prevalence indicates a positivity violation, and
estimates effects within the remaining leaves.
"""

from .dataset import (
    ColumnSchema,
    Dataset,
    SchemaError,
    SingleArmError,
    load_csv,
    split_train_test,
    write_csv,
)
from .estimators import (
    EffectReport,
    EstimationError,
    LeafEffect,
    ipw_ate,
    marginal_ate,
    matching_ate,
    tree_ate,
    tree_propensity,
)
from .evaluation import (
    METHODS,
    BenchmarkResult,
    BiasRecord,
    adjusted_rand_index,
    calibration_curve,
    depth_sweep,
    run_bias_benchmark,
    weighted_leaf_asmds,
)
from .logistic import LogisticFit, fit_logistic
from .positivity import Cutoffs, crump_cutoffs, symmetric_prevalence_cutoffs
from .rng import CounterRng
from .stats import (
    Table2x2,
    asmd,
    chi2_p,
    feature_asmds,
    fisher_exact_p,
    holm_bonferroni,
    split_p_value,
)
from .synthgen import (
    GENERATOR_KINDS,
    NATURAL_EXPERIMENT_ATE,
    GeneratorSpec,
    generate,
)
from .tree import (
    FitConfig,
    LeafEstimate,
    Node,
    Split,
    Tree,
    assign_leaf,
    assign_leaves,
    fit,
    from_json,
    mark_positivity,
    to_dot,
    to_json,
)

__version__ = "0.1.0"

__all__ = [
    "METHODS",
    "GENERATOR_KINDS",
    "NATURAL_EXPERIMENT_ATE",
    "BenchmarkResult",
    "BiasRecord",
    "ColumnSchema",
    "CounterRng",
    "Cutoffs",
    "Dataset",
    "EffectReport",
    "EstimationError",
    "FitConfig",
    "GeneratorSpec",
    "LeafEffect",
    "LeafEstimate",
    "LogisticFit",
    "Node",
    "SchemaError",
    "SingleArmError",
    "Split",
    "Table2x2",
    "Tree",
    "adjusted_rand_index",
    "asmd",
    "assign_leaf",
    "assign_leaves",
    "calibration_curve",
    "chi2_p",
    "crump_cutoffs",
    "depth_sweep",
    "feature_asmds",
    "fisher_exact_p",
    "fit",
    "fit_logistic",
    "from_json",
    "generate",
    "holm_bonferroni",
    "ipw_ate",
    "load_csv",
    "marginal_ate",
    "mark_positivity",
    "matching_ate",
    "run_bias_benchmark",
    "split_p_value",
    "split_train_test",
    "symmetric_prevalence_cutoffs",
    "to_dot",
    "to_json",
    "tree_ate",
    "tree_propensity",
    "weighted_leaf_asmds",
    "write_csv",
    "__version__",
]
