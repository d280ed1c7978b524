"""
Operational and denotational semantics of quantum while-programs.
"""
