"""Hidden-state dump extraction and fidelity verification."""

from .cleaning import load_stopwords, remove_stopwords
from .extract import DEFAULT_MODEL, Encoder, ExtractionSpec, extract, read_texts
from .hsd1 import DumpError, DumpReader, DumpWriter
from .verify import FidelityReport, dump_default_embeddings, verify

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MODEL",
    "DumpError",
    "DumpReader",
    "DumpWriter",
    "Encoder",
    "ExtractionSpec",
    "FidelityReport",
    "dump_default_embeddings",
    "extract",
    "load_stopwords",
    "read_texts",
    "remove_stopwords",
    "verify",
]
