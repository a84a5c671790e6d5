"""ShelfSight - monocular multi-shelf layout estimation for warehouse racks."""

__version__ = "0.1.0"
