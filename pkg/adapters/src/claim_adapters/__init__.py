"""Model-backed producers for the claimcluster file protocols."""

from .annotate import DEFAULT_PROMPT, BatchResult, LlmAnnotatorSpec, annotate_batch
from .embed import AdapterError, EmbedderSpec, embed_claims

__version__ = "0.1.0"

__all__ = [
    "AdapterError",
    "BatchResult",
    "DEFAULT_PROMPT",
    "EmbedderSpec",
    "LlmAnnotatorSpec",
    "annotate_batch",
    "embed_claims",
    "__version__",
]
