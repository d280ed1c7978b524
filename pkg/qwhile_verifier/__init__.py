"""
qwhile_verifier - Verification toolkit for quantum while-programs.

Parses programs and predicate annotations, runs operational and denotational
semantics over density operators, computes weakest preconditions, checks Hoare
triples and proof outlines, and analyses control flow as a
superoperator-valued transition system.
"""

__version__ = "0.3.0"
