"""attri2vec - attributed network embedding through learned attribute mappings."""

__version__ = "1.0.0"
__author__ = "attri2vec developers"
__description__ = "Learns mappings from node attributes to embeddings that preserve random-walk structure"
