"""Physical constants in the toolkit's unit system (meV, ps, tesla, kelvin)."""

#: Reduced Planck constant in meV*ps.
HBAR = 0.6582119569

#: Bohr magneton in meV/T.
MU_B = 5.7883818060e-2

#: Boltzmann constant in meV/K.
K_B = 8.617333262e-2


def beta_from_temperature(temperature_k):
    """Inverse temperature in 1/meV for a temperature in kelvin."""
    if temperature_k <= 0:
        raise ValueError(f"temperature must be positive, got {temperature_k}")
    return 1.0 / (K_B * temperature_k)
