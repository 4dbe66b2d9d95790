//! Least-squares engine, the model library, spectral analysis and
//! derived-quantity helpers.

mod engine;
mod io;
mod library;
mod rabi;
mod spectral;

pub use engine::{fit, nelder_mead, FitModel, FitOptions, FitResult, FitStatus, ParamSpec, SimplexResult};
pub use io::{parse_xy_csv, read_xy_csv, XyData};
pub use library::{
    damped_ramsey, echo_envelope, exp_decay, gaussian_peak, linear, lorentzian_multi, model_by_name, proportional,
    saturation, serrodyne_ramsey, MODEL_NAMES,
};
pub use rabi::{fit_rabi_master_equation, rabi_model_trace, RabiFit, RabiPriors, RELAXATION_PER_RABI};
pub use spectral::{
    dominant_frequency, fft_spectrum, fwhm_to_t2star, larmor_frequencies, species, t2star_to_fwhm, NuclearSpecies,
    Peak, Spectrum, NUCLEAR_SPECIES,
};
