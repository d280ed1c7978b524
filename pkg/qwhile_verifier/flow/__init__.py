"""Super-operator-valued transition systems, prime paths, bounded invariant checks and termination reports."""
