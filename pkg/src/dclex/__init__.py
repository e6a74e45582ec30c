"""Induce a connective-to-relation lexicon from a relation-tagged parallel corpus.

The pipeline tags discourse connectives on the source side of a parallel
corpus, fuses each tagged occurrence into a single ``surface-Relation``
token, word-aligns the fused corpus, extracts phrase pairs, and reads the
target-language lexicon off the connective-to-connective alignments.
"""

__version__ = "0.1.0"
