"""Bias auditing for span-labeled figurative-language datasets.

The toolkit measures how far such datasets can be gamed by classifiers
with deliberately incomplete input (the expression alone, or the context
with the expression masked), builds lexical and random split plans whose
disjointness is verifiable, and samples bias-mitigated binary datasets
from token-level annotated corpora.
"""

__version__ = "0.1.0"
