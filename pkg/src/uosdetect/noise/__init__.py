from .models import NoiseModel, NoiseRegime, Whitener
from .linalg import (
    eig_sym,
    check_spd,
    inverse_sqrt,
    sqrt_spd,
    sample_covariance,
    whiten,
)
from .sampling import sample_noise, draw_noise, random_spd_covariance
