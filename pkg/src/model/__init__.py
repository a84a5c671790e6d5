"""Layout network family: shared encoder, per-view multi-shelf decoders, patch discriminators."""
