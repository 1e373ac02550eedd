""".. include:: ../README.md"""  # noqa: D415

import importlib.metadata

from prom.copylabel import CopyLabelMask, label_copy_tokens
from prom.metrics import efd
from prom.textcore import TokenSeq, extract_fragments, split_sentences, tokenize

try:
    __version__ = importlib.metadata.version("prom")
except importlib.metadata.PackageNotFoundError:
    __version__ = "0.0.0"

__all__ = [
    "CopyLabelMask",
    "TokenSeq",
    "__version__",
    "efd",
    "extract_fragments",
    "label_copy_tokens",
    "split_sentences",
    "tokenize",
]
