"""Computational back end: geometry, boundary data, quadrature, mollifier and Bogovskii fields."""
