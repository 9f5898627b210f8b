#!/usr/bin/env python3
"""
attri2vec - Main CLI Entry Point

Learns a mapping from node attributes to embeddings guided by random walks
over the network, embeds unseen nodes from their attributes, and evaluates
embeddings on classification, clustering and link prediction.
"""

import sys

from src.cli import main


if __name__ == '__main__':
    sys.exit(main())
