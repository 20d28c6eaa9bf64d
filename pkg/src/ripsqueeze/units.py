"""Unit handling.

Every user-facing frequency is a cyclic frequency nu = omega / 2pi in MHz and
every time is in ns.  Internally the simulators work in angular units of
rad/ns; the conversion lives here and nowhere else.
"""

import math

MHZ_TO_RAD_PER_NS = 2.0 * math.pi * 1e-3


def angular(nu_mhz):
    """Convert nu/2pi [MHz] to omega [rad/ns]. Works on scalars and arrays."""
    return nu_mhz * MHZ_TO_RAD_PER_NS


def cyclic(omega):
    """Convert omega [rad/ns] back to nu/2pi [MHz]."""
    return omega / MHZ_TO_RAD_PER_NS
