"""Synthetic dataset generation, manifest and loading."""
