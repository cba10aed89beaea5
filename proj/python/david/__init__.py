"""Joint-grained document understanding workbench."""

import json as _json

try:  # installed wheel: extension lives inside the package
    from . import _david as _core
except ImportError:  # build-tree layout: extension on sys.path
    import _david as _core

gen_corpus = _core.gen_corpus
micro_f1 = _core.micro_f1
anls = _core.anls
edit_distance = _core.edit_distance
jaccard = _core.jaccard
corruption_probability = _core.corruption_probability
derive_seed = _core.derive_seed


def annotate(corpus_in, corpus_out, **kwargs):
    """Split a gold corpus and synthesize noisy annotations. Returns a dict."""
    return _json.loads(_core.annotate_json(corpus_in, corpus_out, **kwargs))


def adapt(corpus, out_dir, **kwargs):
    """Run the adaptation stages on the noisy pool. Returns a dict."""
    return _json.loads(_core.adapt_json(corpus, out_dir, **kwargs))


def finetune(ckpt, corpus, out_dir, **kwargs):
    """Fine-tune task heads on the guidance split. Returns a dict."""
    return _json.loads(_core.finetune_json(ckpt, corpus, out_dir, **kwargs))


def infer(ckpt, corpus, out, **kwargs):
    """Run inference and dump predictions. Returns a dict."""
    return _json.loads(_core.infer_json(ckpt, corpus, out, **kwargs))


def evaluate(corpus, **kwargs):
    """Score a prediction dump or a checkpoint. Returns a metrics dict."""
    return _json.loads(_core.evaluate_json(corpus, **kwargs))


__all__ = [
    "gen_corpus",
    "annotate",
    "adapt",
    "finetune",
    "infer",
    "evaluate",
    "micro_f1",
    "anls",
    "edit_distance",
    "jaccard",
    "corruption_probability",
    "derive_seed",
]
