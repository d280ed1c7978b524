"""Syntax, parsing and static checks of quantum while-programs."""
