import torch
from math import sqrt


INFTY = float("inf")
EPS = sqrt(torch.finfo(torch.float64).eps)

# ===== Physical constants ===== #
ALPHA = 1.0 / 137.035999
ELECTRON_MASS_EV = 510998.95
HBARC_EV_FM = 197326980.4

# Natural units: hbar = c = m_e = 1, lengths in electron Compton wavelengths
COMPTON_FM = HBARC_EV_FM / ELECTRON_MASS_EV
HARTREE_EV = ALPHA ** 2 * ELECTRON_MASS_EV

# Fermi skin thickness t = 4 ln(3) a
FERMI_SKIN_FM = 2.3

DTYPE = torch.float64
CDTYPE = torch.complex128


def to_ev(energy: float) -> float:
    """
    Converts an energy from units of the electron rest energy to eV.
    """

    return energy * ELECTRON_MASS_EV


def fm_to_compton(length: float) -> float:
    return length / COMPTON_FM


def compton_to_fm(length: float) -> float:
    return length * COMPTON_FM
