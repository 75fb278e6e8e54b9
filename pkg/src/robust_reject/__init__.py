"""Adversarially robust reject-option classification for linear classifiers."""

__version__ = "0.1.0"

from .losses import (
    Family,
    LossValue,
    SurrogateSpec,
    convex_reference_loss,
    dsl,
    drl,
    evaluate as evaluate_loss,
    loss_values,
    margin_grads,
    rho_grads,
    target_ld,
    target_ld_eq6,
    target_ld_gamma_linear,
    target_ld_gamma_sup_oracle,
)
from .risk import (
    AlphaGrid,
    RiskProfile,
    conditional_risk,
    conditional_risk_curve,
    excess_risk,
    min_conditional_risk,
    min_target_inner_risk,
    risk_profile,
    target_excess_risk_closed_form,
)
from .calibration import (
    CalibrationReport,
    ConditionResult,
    DeltaCurve,
    STRICTNESS_TOL,
    calibration_report,
    check_eta_gt_half,
    check_eta_half,
    delta_curve,
    eta_left,
    eta_right,
    is_quasiconcave,
    minima_jump_diagnostic,
)
from .data import DataConfig, DatasetParseError, LabeledDataset, generate, load, save
from .training import (
    AttackConfig,
    AttackMethod,
    REJECT,
    RejectClassifier,
    TrainConfig,
    TrainingDivergedError,
    adversarial_training,
    attack_closed_form,
    attack_pga,
    make_adversarial_dataset,
    predict,
    predict_batch,
    sgd_train,
)
from .evaluation import (
    MetricsRow,
    SweepConfig,
    SweepTable,
    emit_figure_data,
    emit_table,
    evaluate,
    read_table,
    run_sweep,
)
