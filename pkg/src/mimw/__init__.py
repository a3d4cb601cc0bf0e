"""Desk-scale multi-warp kernel IR, layout compiler and cluster simulator."""
