"""
setcard package
Decision procedures for boolean algebra of sets with cardinality constraints
"""

import sys

# constants are arbitrary precision in both directions (parse and print)
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)
