"""Portfolio meta-solver: k-NN solver scheduling, supervised parallel execution
with bound sharing, answer checking and Borda tournament scoring."""

__version__ = "0.1.0"
