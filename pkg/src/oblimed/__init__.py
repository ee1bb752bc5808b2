"""Online bidding and oblivious k-median: strategies, reductions, gadgets and checks."""

__version__ = "0.1.0"
