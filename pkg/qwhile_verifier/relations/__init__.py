"""Quantum relations: SWAP, symmetrizers, equality predicates and their compositions."""
