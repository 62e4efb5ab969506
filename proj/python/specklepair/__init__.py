"""Python layer over the specklepair wave-optics core.

The compiled extension exposes the main operations: centered Fourier
transforms, diffuser synthesis, four-step holographic reconstruction, and
Schmidt-spectrum analysis of the double-Gaussian pair state.
"""

from _specklepair import (
    centered_dft,
    fourier_2f,
    make_diffuser,
    reconstruct_4phase,
    schmidt_number,
    schmidt_spectrum,
    version,
    walsh_vector,
)

__all__ = [
    "centered_dft",
    "fourier_2f",
    "make_diffuser",
    "reconstruct_4phase",
    "schmidt_number",
    "schmidt_spectrum",
    "version",
    "walsh_vector",
]

__version__ = version()
