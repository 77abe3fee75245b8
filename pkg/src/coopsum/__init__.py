"""Convex latent-vector aggregation for unsupervised opinion summarization."""

from .autoencoder import ToyAutoencoder, load_external_latents
from .data import EntityBatch, ingest_entities
from .search import (
    Objective,
    SearchConfig,
    SearchResult,
    evaluate_candidate,
    run_method,
    search_beam,
    search_exact,
    select_extractive,
    select_random,
    select_simpleavg,
)
from .textmetrics import rouge_l, rouge_n, tokenize

__version__ = "0.1.0"
