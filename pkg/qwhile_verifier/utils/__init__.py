"""Seeded random generators and plotting helpers."""
