"""Proof outlines: standardization, verification conditions, discharge and the strong-soundness harness."""
