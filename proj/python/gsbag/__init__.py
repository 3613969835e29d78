"""Gene set bagging: how likely is an enriched gene set to replicate?"""

from ._core import (
    Bundle,
    DesignError,
    InputError,
    __version__,
    differential,
    hypergeometric_test,
    load_bundle,
    posterior_demo,
    qvalues,
    replication_probability,
    run_bagging,
    run_cli,
    spearman,
    wilcoxon_test,
)

__all__ = [
    "Bundle",
    "DesignError",
    "InputError",
    "__version__",
    "differential",
    "hypergeometric_test",
    "load_bundle",
    "posterior_demo",
    "qvalues",
    "replication_probability",
    "run_bagging",
    "run_cli",
    "spearman",
    "wilcoxon_test",
]
