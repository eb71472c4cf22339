"""Mixed-space Bayesian optimization with learned variable-interaction graphs.

Configurations over discrete and continuous variables are molded into
graphs (one node per variable); a nested pair of adversarial bandits
learns which connectivity helps, a variational graph autoencoder embeds
configurations under each candidate graph, and a Gaussian-process surrogate
with a UCB rule proposes points in the learned latent space.
"""
from .bandit import (
    Exp3Agent,
    NestedBanditState,
    RewardRecord,
    Slot,
    exp3_probabilities,
    maybe_replace,
    normalize_reward,
    sample_centered_nodes,
    select_graph,
    tuned_gamma,
    update_rewards,
)
from .bench import Task, external_task, get_task, task_ids
from .engine import (
    ExhaustiveResult,
    RunConfig,
    Trace,
    read_trace,
    run,
    run_exhaustive,
    run_gebo,
    run_prior_graph,
    run_random_search,
    trace_summary,
    write_exhaustive_csv,
    write_trace,
)
from .external import ExternalObjective, ExternalProcess, evaluate_external
from .gpbo import (
    GpState,
    KernelParams,
    LatentBox,
    fit,
    latent_box,
    log_marginal_likelihood,
    matern_kernel,
    optimize_acquisition,
    predict,
    ucb,
)
from .graphmold import (
    MoldedGraph,
    TooLargeError,
    attach_global_node,
    ba_biased,
    complete_graph,
    count_connected_graphs,
    enumerate_connected_graphs,
    is_connected,
    pagerank,
    pearson,
)
from .neural import (
    ModelConfig,
    VgaeModel,
    decode,
    encode_dataset,
    gcn_encode,
    load_checkpoint,
    save_checkpoint,
    train,
    warmup,
)
from .space import (
    MixedSpace,
    Variable,
    check_configuration,
    encode_features,
    sample_uniform,
    space_from_json,
    space_to_json,
    validate_space,
)

__version__ = "0.1.0"

__all__ = [
    "Exp3Agent",
    "ExhaustiveResult",
    "ExternalObjective",
    "ExternalProcess",
    "GpState",
    "KernelParams",
    "LatentBox",
    "MixedSpace",
    "ModelConfig",
    "MoldedGraph",
    "NestedBanditState",
    "RewardRecord",
    "RunConfig",
    "Slot",
    "Task",
    "TooLargeError",
    "Trace",
    "Variable",
    "VgaeModel",
    "attach_global_node",
    "ba_biased",
    "check_configuration",
    "complete_graph",
    "count_connected_graphs",
    "decode",
    "encode_dataset",
    "encode_features",
    "enumerate_connected_graphs",
    "evaluate_external",
    "exp3_probabilities",
    "external_task",
    "fit",
    "gcn_encode",
    "get_task",
    "is_connected",
    "latent_box",
    "load_checkpoint",
    "log_marginal_likelihood",
    "matern_kernel",
    "maybe_replace",
    "normalize_reward",
    "optimize_acquisition",
    "pagerank",
    "pearson",
    "predict",
    "read_trace",
    "run",
    "run_exhaustive",
    "run_gebo",
    "run_prior_graph",
    "run_random_search",
    "sample_centered_nodes",
    "sample_uniform",
    "save_checkpoint",
    "select_graph",
    "space_from_json",
    "space_to_json",
    "task_ids",
    "trace_summary",
    "train",
    "tuned_gamma",
    "ucb",
    "update_rewards",
    "validate_space",
    "warmup",
    "write_exhaustive_csv",
    "write_trace",
]
