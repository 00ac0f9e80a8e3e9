"""topicflow: temporal topic evolution over a time-stamped corpus.

Slices the corpus into overlapping epochs, fits an independent HDP topic
model per epoch by Gibbs sampling, links topics of adjacent epochs in a
thresholded similarity graph, and reads emergence / disappearance / split /
merge events plus lineages off that graph.
"""

__version__ = "0.1.0"

from .backend import BACKEND  # noqa: F401
