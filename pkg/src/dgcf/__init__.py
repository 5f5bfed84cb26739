"""Graph collaborative filtering with initial-residual and identity-mapping
propagation, plus BPRMF and LightGCN-style reference models."""

__version__ = "0.1.0"
