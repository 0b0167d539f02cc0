"""Label-distribution learning with expectation regression on ordinal targets.

A small numpy/scipy library: discrete target encodings and their exact
relationships, a joint distribution-plus-expectation loss with analytic
gradients, ablation and baseline heads, a tiny dense backbone with pooling,
Adam, metrics, synthetic data, finite-difference gradient verification, and
activation-map or occlusion interpretability. A command harness is exposed
through labeldist.cli / the `labeldist` entry point.
"""

from .backbone import (
    DenseLayer,
    FeatureMap,
    MlpCache,
    MlpGradients,
    MlpParams,
    global_avg_pool,
    hybrid_pool,
    init_params,
    max_pool_2x2,
    mlp_backward,
    mlp_forward,
)
from .codec import (
    CdfVector,
    Distribution,
    LabelSpace,
    RankingVector,
    cumulate,
    encode_cdf,
    encode_distribution,
    encode_ranking,
    make_label_space,
    ranking_from_distribution,
)
from .data import (
    Dataset,
    Sample,
    SynthConfig,
    gen_synthetic,
    load_csv,
    load_predictions,
    save_csv,
    save_predictions,
    split,
)
from .errors import (
    DegenerateBaseline,
    DegenerateGrid,
    DegenerateInput,
    InvalidArgument,
    NumericalDomain,
    OutOfRangeTarget,
    ParseError,
)
from .gradcheck import (
    CheckResult,
    check_dex_head,
    check_end_to_end,
    check_joint_head,
    check_mr_head,
    check_ranking_head,
    fd_gradient,
    run_suite,
    scaled_deviation,
    suite_worst,
)
from .heads import (
    HeadGradients,
    HeadParams,
    JointForward,
    JointLossConfig,
    MrGradients,
    MrParams,
    RankingForward,
    RankingGradients,
    RankingHeadParams,
    dex_backward,
    dex_class_index,
    dex_inference,
    dex_loss,
    er_loss,
    expectation,
    head_forward,
    init_head,
    init_mr_head,
    init_ranking_head,
    joint_backward,
    joint_forward,
    kl_loss,
    linear_grads,
    mr_backward,
    mr_forward,
    mr_inference,
    mr_loss,
    mr_scale_target,
    ranking_backward,
    ranking_forward,
    ranking_inference,
    ranking_loss,
    softmax,
)
from .interpret import (
    OcclusionGrid,
    ScoreMap,
    class_activation_maps,
    occlusion_sensitivity,
    score_map,
)
from .metrics import EvalReport, epsilon_error, evaluate, mae, pearson, rmse
from .optim import AdamState, adam_step, init_adam, lr_at_epoch
from .train import (
    HEAD_KINDS,
    Model,
    TrainResult,
    batch_gradients,
    build_model,
    encode_targets,
    load_checkpoint,
    predict_batch,
    save_checkpoint,
    train_model,
    trainable_arrays,
)

__version__ = "0.1.0"
