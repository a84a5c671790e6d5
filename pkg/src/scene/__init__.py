"""Procedural warehouse rack scenes.

Scenes are pure functions of a config and a 64-bit seed: racks with shelves,
box stacks placed by a greedy sweep, and optional background clutter.
"""
