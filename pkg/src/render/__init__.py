"""Software rendering: pinhole camera, rasterizer, ray-cast oracle and layout visualisation."""
