"""Physical constants and ion species data.

All frequencies in this package are angular (rad/s) unless a name says Hz.
"""

# CODATA 2018 exact values
HBAR = 1.054571817e-34  # J s
KB = 1.380649e-23  # J / K
E_CHARGE = 1.602176634e-19  # C
EPS0 = 8.8541878128e-12  # F / m
AMU = 1.66053906660e-27  # kg
H_PLANCK = 6.62607015e-34  # J s

# Species masses in kg. Qubit transitions are quadrupole (Ca, Sr) or
# Raman/hyperfine (Be, Cd); only the mass enters the mechanics here.
ION_MASS = {
    "Ca40": 39.9625909 * AMU,
    "Be9": 9.0121831 * AMU,
    "Cd111": 110.904183 * AMU,
    "Sr88": 87.9056125 * AMU,
}


def ion_mass(species: str) -> float:
    try:
        return ION_MASS[species]
    except KeyError:
        raise ValueError(f"unknown ion species {species!r}; known: {sorted(ION_MASS)}")
