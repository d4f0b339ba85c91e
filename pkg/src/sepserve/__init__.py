"""Clinical AI serving platform for early sepsis detection.

Pipeline: raw pipe-separated patient files are standardized into clinical
JSON documents, stored in an embedded document store, and served to a
tree-ensemble risk model behind a replicated REST front endpoint.  A load
generator and a deterministic queueing simulator characterize how the
replica pool scales.
"""

__version__ = "0.1.0"
