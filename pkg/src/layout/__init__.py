"""Ground-truth per-shelf layout grids (top and front views)."""
