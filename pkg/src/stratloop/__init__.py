"""stratloop: closed-loop dynamics of classifiers retrained on model- and
human-annotated samples while strategic agents best-respond."""

from .analytics import (
    aggregate,
    dp_unfairness,
    improvement_integral,
    monte_carlo_improvement,
    qbar_recursion,
    qbar_recursion_postbr,
    trace_rows,
    write_aggregate_csv,
    write_trial_csv,
)
from .configs import (
    BUILTIN_CONFIGS,
    DataSpec,
    ExperimentConfig,
    config_from_json,
    config_to_json,
    list_builtin_configs,
    load_config,
    resolve_groups,
    validate_config,
)
from .distributions import (
    BetaDist,
    GaussianDist,
    KdeDist,
    LinearLabelFn,
    LogisticLabelFn,
    UniformDist,
)
from .errors import (
    ConfigError,
    DegenerateModelError,
    IngestError,
    ParityInfeasibleError,
    StratloopError,
)
from .experiment import run_experiment
from .fairness import dp_tune, early_stop_scan, intervention_flip_check, optimal_threshold
from .ingest import (
    ColumnSchema,
    DatasetProfile,
    fit_beta_conditionals,
    fit_kde_logistic,
    ingest_csv,
)
from .learner import (
    GroundTruthModel,
    LogisticModel,
    SGDLogisticClassifier,
    TrainSettings,
    fit_logistic,
    ground_truth_scorer,
    model_from_json,
    model_to_json,
)
from .loop import (
    RetrainConfig,
    RoundRecord,
    TrainingSet,
    init_round_zero,
    run_trial,
    run_trials,
    run_two_group_trial,
    step,
    trial_seed,
)
from .population import (
    ConditionalPopulation,
    Group,
    Population,
    group_from_json,
    group_to_json,
    human_annotate,
    population_from_json,
    population_to_json,
    qualification_rate,
    sample_agents,
    validate_monotone_likelihood,
)
from .response import (
    QuadraticCost,
    ResponseOutcome,
    best_respond,
    brute_force_best_respond,
    min_cost_to_acceptance,
    respond_cohort,
)

__version__ = "0.1.0"
