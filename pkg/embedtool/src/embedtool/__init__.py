"""Embedding and cluster-labeling companion tool.

Crosses into the analysis toolkit only through files: token/text records in,
embedding records out, labels.json out.
"""

from .backends import DEFAULT_MODEL, HashingBackend, ModelUnavailable, TransformerBackend, make_backend
from .cli import embed_messages
from .records import BadRecord, EmptyInput, read_message_records, write_embedding_records

__version__ = "0.1.0"
