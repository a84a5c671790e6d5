"""Layout evaluation: per-class IoU and average precision."""
