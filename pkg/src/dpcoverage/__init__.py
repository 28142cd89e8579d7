"""Per-row privacy profiling for L2-regularized linear classifiers
trained with epsilon-DP Laplace output perturbation."""

__version__ = "0.1.0"
