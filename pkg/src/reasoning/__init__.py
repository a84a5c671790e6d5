"""Fuse top and front layouts into per-shelf cuboids, free volume and stack counts."""
