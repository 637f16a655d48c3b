#!/usr/bin/env python
"""Module docstring with # hash."""
import math

# TODO: handle NaN inputs
# and infinities
def mean(xs):
    s = "# not a comment"  # but this is
    return sum(xs) / len(xs)
