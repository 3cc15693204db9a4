"""Sparse-domination experiments for pseudodifferential operators on periodic grids.

Grid functions are numpy complex arrays of shape ``spec.shape``; reports are dicts.
"""

from ._sparselab import (
    Error,
    GridSpec,
    SparseCollection,
    Symbol,
    __version__,
    apply,
    bessel,
    corpus_kind,
    lp_piece_apply,
    make_corpus,
    maximal,
    oscillatory_ct,
    piece_norm,
    predicted_norm_exponent,
    rough_bump,
    run_config,
    sharp_maximal,
    sharp_ratio,
    sparse_form,
    sparse_form_ratio,
    spatial_piece_apply,
    stopping_time,
    verify_sparsity,
    whitney,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
