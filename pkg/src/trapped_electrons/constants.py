"""Physical constants (CODATA 2018 values as shipped by ``scipy.constants``)."""
from scipy import constants as _c

HBAR = _c.hbar
K_B = _c.k
E_CHARGE = _c.e
M_E = _c.m_e
MU_B = _c.physical_constants["Bohr magneton"][0]
AMU = _c.physical_constants["atomic mass constant"][0]
EV = _c.electron_volt

G_S = 2.0
M_CA40 = 39.962590863 * AMU
TWO_PI = 2.0 * _c.pi

MHZ = TWO_PI * 1e6
GHZ = TWO_PI * 1e9
KHZ = TWO_PI * 1e3
UM = 1e-6
