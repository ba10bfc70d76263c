"""nvtext: turn word-aligned facial and prosodic feature streams into
natural-language descriptions via learned cluster codebooks."""

__version__ = "0.1.0"
