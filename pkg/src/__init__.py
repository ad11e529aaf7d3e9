"""Symplectic billiard rigidity lab."""
