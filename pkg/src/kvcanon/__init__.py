"""Canonical-key-conditioned key-value extraction toolkit for OCR'd
semi-structured pages.

Subsystems: corpus I/O and synthesis (kvcanon.corpus, kvcanon.synthesis,
kvcanon.noise), the canonical key inventory (kvcanon.inventory), alias
normalization/clustering/review (kvcanon.normalize, kvcanon.embedding,
kvcanon.clustering), span extraction (kvcanon.querying, kvcanon.backends,
kvcanon.decoder, kvcanon.extract), the training loss (kvcanon.loss),
metrics (kvcanon.evaluation), and the batch loop + HTTP service + CLI
(kvcanon.store, kvcanon.batch, kvcanon.server, kvcanon.cli).
"""

from ._kernels import KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
