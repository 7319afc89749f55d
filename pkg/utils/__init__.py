"""
Computational library for quantum graphs and their dual Jacobi matrices.
This module contains the graph model, edge solver, dual assembly, spectral engine,
model zoo, oracles, and the document/table helpers used by the views.
"""
