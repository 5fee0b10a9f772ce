from src.sampling.gaussian_paths import (
    ProcessModel, FractionalBM, OrnsteinUhlenbeck, StationaryPowerExp, PathEnsemble,
    build_process_model, vector_ensemble, sample_fbm, sample_ou, sample_stationary_powerexp,
    empirical_covariance, save_ensemble, load_ensemble,
)
