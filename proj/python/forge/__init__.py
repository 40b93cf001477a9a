"""Python interface to the forge corpus curation pipeline."""

import json as _json

from . import _forge
from ._forge import BpeModel, ConfigError, DataError, Error, IoError, hdd, jaccard, perplexity, retention_pct, ttr

__all__ = [
    "BpeModel", "ConfigError", "DataError", "Error", "IoError", "config_hash", "default_config", "hdd",
    "identify_language", "jaccard", "minhash_signature", "partition_phases", "perplexity", "quality_verdict",
    "retention_pct", "run_pipeline", "shingle_hashes", "train_profile", "ttr",
]


def _cfg(config):
    return "" if config is None else _json.dumps(config)


def default_config():
    """Default pipeline configuration as a dict."""
    return _json.loads(_forge.default_config())


def config_hash(config=None):
    return _forge.config_hash(_cfg(config))


def shingle_hashes(text, config=None):
    return _forge.shingle_hashes(text, _cfg(config))


def minhash_signature(text, config=None):
    """Returns (components, band_keys)."""
    return _forge.minhash_signature(text, _cfg(config))


def quality_verdict(text, config=None):
    return _forge.quality_verdict(text, _cfg(config))


def train_profile(label, texts, output, n=3):
    """Trains a character n-gram profile and writes it as JSON."""
    _forge.train_profile(label, list(texts), str(output), n)


def identify_language(profiles, text):
    """Returns (label, confidence) using n-gram profile files."""
    return _forge.identify_language([str(p) for p in profiles], text)


def partition_phases(docs, config=None):
    """docs: iterable of (id, token_count). Returns the plan as a dict."""
    return _json.loads(_forge.partition_phases(list(docs), _cfg(config)))


def run_pipeline(inputs, output, profiles, config=None, jobs=1):
    """Runs langid, dedup and quality; returns the report as a dict."""
    report = _forge.run_pipeline([str(p) for p in inputs], str(output), [str(p) for p in profiles], _cfg(config), jobs)
    return _json.loads(report)
