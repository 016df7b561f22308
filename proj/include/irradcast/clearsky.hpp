#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irradcast/surfrad.hpp"
#include "irradcast/time.hpp"

namespace irradcast::clearsky {

inline constexpr double kSolarConstant = 1367.0;  // W/m^2

struct SolarPosition {
    double zenith = 0.0;        // degrees [0, 180]
    double azimuth = 0.0;       // degrees clockwise from north [0, 360)
    double sun_altitude = 0.0;  // 90 - zenith
    std::optional<double> air_mass;  // relative optical air mass, only while the sun is up
    double earth_sun_distance_factor = 1.0;  // (r0 / r)^2
};

struct AtmosphericParams {
    double aerosol_optical_depth = 0.1;  // broadband
    double ozone = 0.3;                  // atm-cm
    double precipitable_water = 1.5;     // cm
    double surface_pressure = 1013.25;   // mb
    double ground_albedo = 0.2;

    /// Throws ConfigError when a field is outside its physical range.
    void validate() const;
    /// Bird's broadband AOD from the 380 nm and 500 nm optical depths.
    static double broadband_aod(double tau380, double tau500) { return 0.2758 * tau380 + 0.35 * tau500; }
};

struct ClearSkyIrradiance {
    double dni = 0.0;  // direct normal, W/m^2
    double dhi = 0.0;  // diffuse horizontal, W/m^2
    double ghi = 0.0;  // global horizontal, W/m^2
};

/// Surface orientation for the tilted-plane composition. Panel tilt and
/// sun altitude are distinct angles.
struct TiltGeometry {
    double incidence = 0.0;  // degrees between beam and surface normal
    double tilt = 0.0;       // degrees [0, 180]
};

/// Companion constants of the beam-extinction law.
struct BeamExtinction {
    double apparent_extraterrestrial = 1160.0;  // A0, W/m^2
    double extinction_coefficient = 0.0;        // B
};

/// Medium-accuracy solar ephemeris (~0.01 deg in zenith).
/// Throws DateError outside 1950-2100.
SolarPosition solar_position(Timestamp t, const surfrad::StationMeta& site);

/// Relative air mass as used by the Bird model; nullopt at or below the horizon.
std::optional<double> relative_air_mass(double zenith_deg);

/// Eccentricity correction (r0/r)^2 for a day of year.
double earth_sun_distance_factor(int day_of_year);

struct BirdConstants {
    double solar_constant = kSolarConstant;
    double forward_scatter = 0.85;  // Ba, aerosol forward-scattering ratio
};

/// Bird broadband clear-sky model.
ClearSkyIrradiance bird_clear_sky(const SolarPosition& pos, const AtmosphericParams& atmo,
                                  const BirdConstants& k = {});

/// A0 * exp(-B / sin(altitude)); zero when the sun is at or below the horizon.
double beam_horizontal(double apparent_extraterrestrial, double extinction_coefficient, double sun_altitude_deg);

/// Irradiance on a tilted surface from its beam, diffuse and reflected parts.
double total_irradiance(double dni, double dhi, double reflected, double incidence_deg, double tilt_deg);
inline double total_irradiance(const ClearSkyIrradiance& cs, double reflected, const TiltGeometry& g) {
    return total_irradiance(cs.dni, cs.dhi, reflected, g.incidence, g.tilt);
}

struct ClearSkySample {
    Timestamp timestamp;
    double zenith = 0.0;
    ClearSkyIrradiance irradiance;
};

/// Optional per-minute surface pressure (mb); nullopt falls back to the
/// atmosphere's static value.
using PressureLookup = std::function<std::optional<double>(Timestamp)>;

/// One sample per minute over [first, last].
std::vector<ClearSkySample> clear_sky_series(const surfrad::StationMeta& site, const AtmosphericParams& atmo,
                                             Timestamp first, Timestamp last, const PressureLookup& pressure = {});

/// CSV with header timestamp,zenith,dni,dhi,ghi.
std::string to_csv(const std::vector<ClearSkySample>& samples);
std::vector<ClearSkySample> from_csv(std::string_view csv);

}  // namespace irradcast::clearsky
