"""Screening mammography classification pipeline.

Thin python surface over the C++ core: preprocessing, probabilistic-F1
metrics, the kernel sketch, and the three trainable classifiers.
"""

from mammoscreen._core import (  # noqa: F401
    DicomObject,
    LogisticModel,
    MammoError,
    SketchDef,
    SketchSVM,
    StratifiedBatchSampler,
    TwoBranchDNN,
    auroc,
    bce_loss,
    dnn_build,
    evaluate,
    invert,
    load_model,
    normalize_minmax,
    p_f1,
    p_precision,
    p_recall,
    parse_dicom,
    poly_kernel,
    predict_proba,
    preprocess,
    relu,
    resize,
    sbs_quotas,
    sigmoid,
    sketch_fit,
    sketch_transform,
    train_logistic,
    train_svm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
