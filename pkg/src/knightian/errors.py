"""Shared exception base.

Every domain error in the package derives from KnightianError so the CLI can
map "your inputs are bad" to exit code 1 and anything else to exit code 2.
"""


class KnightianError(Exception):
    pass
