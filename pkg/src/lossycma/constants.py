"""Physical constants (SI)."""

import numpy as np

C0 = 299792458.0
MU0 = 4e-7 * np.pi
EPS0 = 1.0 / (MU0 * C0**2)
ETA0 = np.sqrt(MU0 / EPS0)


def wavelength(frequency):
    return C0 / frequency


def wavenumber(frequency):
    return 2 * np.pi * frequency / C0
