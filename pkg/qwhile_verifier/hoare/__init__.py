"""
Weakest preconditions, correctness formulas, the qPD/qTD rule engine and
ranking-function checks.
"""
