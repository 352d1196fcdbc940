"""Dataset input/output, preprocessing and synthetic generators."""

from rls_nystrom.data.datasets import (
    DATASET_REGISTRY,
    Dataset,
    PreprocessReport,
    apply_preprocess,
    describe_dataset,
    load_csv,
    load_dataset,
    load_libsvm,
    one_vs_rest,
    preprocess,
    save_csv,
    save_libsvm,
)

__all__ = [
    'DATASET_REGISTRY',
    'Dataset',
    'PreprocessReport',
    'apply_preprocess',
    'describe_dataset',
    'load_csv',
    'load_dataset',
    'load_libsvm',
    'one_vs_rest',
    'preprocess',
    'save_csv',
    'save_libsvm',
]
