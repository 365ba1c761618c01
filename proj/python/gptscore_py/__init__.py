"""Conditional-logprob text scoring and metric meta-evaluation."""

try:
    from ._gptscore import *  # noqa: F401,F403  (installed wheel layout)
except ImportError:
    from _gptscore import *  # noqa: F401,F403  (build-tree layout)

__all__ = [
    "BackendError",
    "DataError",
    "UsageError",
    "aggregate",
    "aspect_definition",
    "aspect_keys",
    "bootstrap_compare",
    "compose_definition",
    "metaeval_jsonl",
    "pearson",
    "render_prompt",
    "rouge_l",
    "rouge_n",
    "score_dataset_jsonl",
    "spearman",
]
