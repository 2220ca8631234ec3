"""daymeter: activity labeling and lifestyle scoring for lifelog frame streams."""

from .activities import (
    ActivityGroup,
    ActivityInterval,
    ActivityLabel,
    DayLog,
    DEFAULT_GROUP_MAP,
    FrameRecord,
    GroupMap,
    expand_intervals,
    group_of,
    render_script,
    run_length_encode,
)
from .config import RunConfig
from .crf import (
    log_partition,
    make_transitions,
    marginals,
    nll_and_grad,
    sequence_score,
    viterbi,
)
from .fluents import (
    FluentParams,
    FluentTrace,
    LifestyleReport,
    analyze_day,
    fluent_trace,
    fluent_value,
    lifestyle_score,
)
from .gradcheck import GradCheckReport, grad_check
from .inference import Window, build_training_windows, build_windows, decode_day
from .metrics import collapse_to_groups, confusion, macro_metrics
from .nn import (
    BilstmCrfModel,
    DenseLayer,
    FusionHeadParams,
    LstmCellParams,
    LstmState,
    bilstm_forward,
    emission_forward,
    fusion_forward,
    lstm_step,
)
from .simulate import ScheduleSpec, generate_day, generate_week, template_spec
from .training import TrainOptions, TrainingTrace, fit

__version__ = "0.1.0"
