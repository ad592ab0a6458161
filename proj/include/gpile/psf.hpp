#pragma once

#include <stdexcept>

namespace gpile {

// Axial resolution estimates for common acquisition systems. All take the
// wavelength in world units and return sigma_z in the same units. Direct
// experimental calibration, when available, beats any of these.

inline double sigma_z_from_numerical_aperture(double wavelength, double na_elevational) {
    if (!(wavelength > 0.0) || !(na_elevational > 0.0))
        throw std::invalid_argument("sigma_z estimate: wavelength and NA must be > 0");
    return 0.27 * wavelength / na_elevational;
}

// Linear optical system with numerical aperture NA.
inline double sigma_z_optical(double wavelength, double na) {
    if (!(wavelength > 0.0) || !(na > 0.0))
        throw std::invalid_argument("sigma_z estimate: wavelength and NA must be > 0");
    return wavelength / (na * na);
}

// Ultrasound transducer: focal length f, elevational aperture d, shape factor k.
inline double sigma_z_ultrasound(double wavelength, double focal_length,
                                 double aperture_elevational, double k = 1.0) {
    if (!(wavelength > 0.0) || !(focal_length > 0.0) || !(aperture_elevational > 0.0) ||
        !(k > 0.0))
        throw std::invalid_argument("sigma_z estimate: parameters must be > 0");
    return k * wavelength * focal_length / aperture_elevational;
}

}  // namespace gpile
