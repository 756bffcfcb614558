"""Exact sin-theta angular perturbation formulae, derived bounds and experiments."""
