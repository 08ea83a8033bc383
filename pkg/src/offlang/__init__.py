"""offlang: a multilingual offensive-language detection experiment harness.

One shared encoder classifier over five languages (plus synthetic desk-scale
languages), with monolingual, joint, zero-shot, few-shot and augmentation
protocols, macro-F1 evaluation, and Integrated Gradients token attribution.
"""

from .attribution import (
    AttributionConfig,
    AttributionResult,
    collect_false_positives,
    completeness_residual,
    integrated_gradients,
    render_html_report,
    render_importance,
)
from .classifier import (
    BaselineConfig,
    Checkpoint,
    ClassifierHandle,
    ModelConfig,
    PredictionBatch,
    TrainingConfig,
    build_baseline,
    build_classifier,
    evaluate_checkpoint,
    fine_tune,
    lr_at_step,
    predict_proba,
)
from .config import parse_experiment_config, serialize_spec
from .corpus import (
    CorpusCatalog,
    Label,
    LabeledExample,
    LanguageCorpus,
    concatenate_corpora,
    corpus_summary,
    generate_synthetic_corpus,
    load_corpus,
    normalize_text,
    slice_fraction,
    synthetic_vocabulary,
)
from .errors import (
    ConfigError,
    ContractError,
    DivergenceError,
    EncoderUnavailableError,
    HarnessError,
    IngestionError,
    NoRecordsError,
    PersistCollisionError,
)
from .metrics import ConfusionMatrix, MetricsReport, confusion_matrix, f1_binary_class, macro_f1
from .protocols import (
    DEFAULT_FRACTIONS,
    DataSpec,
    ExperimentSpec,
    ResultsMatrix,
    RunRecord,
    build_catalog,
    execute_spec,
    load_run_records,
    persist_run,
    run_augmentation,
    run_few_shot_curve,
    run_joint_all,
    run_monolingual,
    run_zero_shot_matrix,
    spec_hash,
)
from .reports import emit_report

__version__ = "0.1.0"
