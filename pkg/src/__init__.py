"""Shear-compression gradient damage solver for block caving."""
