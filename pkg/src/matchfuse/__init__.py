"""Multi-modal product matching: late-fusion contrastive projection, blocked
cosine retrieval, PR evaluation, and human-in-the-loop validation."""

__version__ = "0.1.0"
