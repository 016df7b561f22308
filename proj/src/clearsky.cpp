#include "irradcast/clearsky.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "irradcast/error.hpp"
#include "irradcast/text.hpp"

namespace irradcast::clearsky {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

double rad(double deg) { return deg * kDeg; }
double deg(double rad) { return rad / kDeg; }

double wrap360(double x) {
    x = std::fmod(x, 360.0);
    return x < 0.0 ? x + 360.0 : x;
}

}  // namespace

void AtmosphericParams::validate() const {
    if (!(aerosol_optical_depth >= 0.0)) throw ConfigError("aerosol_optical_depth must be >= 0");
    if (!(ozone > 0.0)) throw ConfigError("ozone must be > 0 atm-cm");
    if (!(precipitable_water >= 0.0)) throw ConfigError("precipitable_water must be >= 0 cm");
    if (!(surface_pressure > 0.0)) throw ConfigError("surface_pressure must be > 0 mb");
    if (!(ground_albedo >= 0.0 && ground_albedo <= 1.0)) throw ConfigError("ground_albedo must be in [0, 1]");
}

std::optional<double> relative_air_mass(double zenith_deg) {
    if (!(zenith_deg < 90.0)) return std::nullopt;
    return 1.0 / (std::cos(rad(zenith_deg)) + 0.15 * std::pow(93.885 - zenith_deg, -1.25));
}

double earth_sun_distance_factor(int doy) {
    const double b = 2.0 * kPi * (doy - 1) / 365.0;
    return 1.00011 + 0.034221 * std::cos(b) + 0.00128 * std::sin(b) + 0.000719 * std::cos(2 * b) +
           0.000077 * std::sin(2 * b);
}

SolarPosition solar_position(Timestamp t, const surfrad::StationMeta& site) {
    const int year = year_of(t);
    if (year < 1950 || year > 2100) throw DateError("solar_position supports 1950-2100, got " + std::to_string(year));

    const double jd = 2440587.5 + static_cast<double>(t.minutes) / 1440.0;
    const double jc = (jd - 2451545.0) / 36525.0;

    const double mean_long = wrap360(280.46646 + jc * (36000.76983 + jc * 0.0003032));
    const double mean_anom = 357.52911 + jc * (35999.05029 - 0.0001537 * jc);
    const double ecc = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc);
    const double center = std::sin(rad(mean_anom)) * (1.914602 - jc * (0.004817 + 0.000014 * jc)) +
                          std::sin(rad(2 * mean_anom)) * (0.019993 - 0.000101 * jc) +
                          std::sin(rad(3 * mean_anom)) * 0.000289;
    const double true_long = mean_long + center;
    const double omega = 125.04 - 1934.136 * jc;
    const double app_long = true_long - 0.00569 - 0.00478 * std::sin(rad(omega));
    const double mean_obliq = 23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60.0) / 60.0;
    const double obliq = mean_obliq + 0.00256 * std::cos(rad(omega));
    const double decl = deg(std::asin(std::sin(rad(obliq)) * std::sin(rad(app_long))));

    const double y = std::pow(std::tan(rad(obliq / 2.0)), 2);
    const double eot_min =
        4.0 * deg(y * std::sin(2 * rad(mean_long)) - 2 * ecc * std::sin(rad(mean_anom)) +
                  4 * ecc * y * std::sin(rad(mean_anom)) * std::cos(2 * rad(mean_long)) -
                  0.5 * y * y * std::sin(4 * rad(mean_long)) - 1.25 * ecc * ecc * std::sin(2 * rad(mean_anom)));

    const double true_solar_min = std::fmod(utc_hour(t) * 60.0 + eot_min + 4.0 * site.longitude + 1440.0 * 2, 1440.0);
    const double hour_angle = true_solar_min / 4.0 < 0 ? true_solar_min / 4.0 + 180.0 : true_solar_min / 4.0 - 180.0;

    const double lat = rad(site.latitude);
    const double cos_zen = std::clamp(
        std::sin(lat) * std::sin(rad(decl)) + std::cos(lat) * std::cos(rad(decl)) * std::cos(rad(hour_angle)), -1.0,
        1.0);
    const double zenith = deg(std::acos(cos_zen));

    double azimuth = 0.0;
    const double denom = std::cos(lat) * std::sin(rad(zenith));
    if (std::abs(denom) > 1e-12) {
        const double a = deg(std::acos(std::clamp((std::sin(lat) * cos_zen - std::sin(rad(decl))) / denom, -1.0, 1.0)));
        azimuth = hour_angle > 0 ? wrap360(a + 180.0) : wrap360(540.0 - a);
    }

    SolarPosition pos;
    pos.zenith = zenith;
    pos.azimuth = azimuth;
    pos.sun_altitude = 90.0 - zenith;
    pos.air_mass = relative_air_mass(zenith);
    pos.earth_sun_distance_factor = earth_sun_distance_factor(day_of_year(t));
    return pos;
}

ClearSkyIrradiance bird_clear_sky(const SolarPosition& pos, const AtmosphericParams& atmo, const BirdConstants& k) {
    if (!(pos.zenith < 90.0)) return {};
    const double am = pos.air_mass.value_or(*relative_air_mass(pos.zenith));
    const double cos_z = std::cos(rad(pos.zenith));
    const double etr = k.solar_constant * pos.earth_sun_distance_factor;

    const double am_p = am * atmo.surface_pressure / 1013.25;
    const double t_rayleigh = std::exp(-0.0903 * std::pow(am_p, 0.84) * (1.0 + am_p - std::pow(am_p, 1.01)));

    const double oz = atmo.ozone * am;
    const double t_ozone = 1.0 - 0.1611 * oz * std::pow(1.0 + 139.48 * oz, -0.3034) -
                           0.002715 * oz / (1.0 + 0.044 * oz + 0.0003 * oz * oz);

    const double t_gases = std::exp(-0.0127 * std::pow(am_p, 0.26));

    const double wm = atmo.precipitable_water * am;
    const double t_water = 1.0 - 2.4959 * wm / (std::pow(1.0 + 79.034 * wm, 0.6828) + 6.385 * wm);

    const double tau = atmo.aerosol_optical_depth;
    const double t_aerosol =
        std::exp(-std::pow(tau, 0.873) * (1.0 + tau - std::pow(tau, 0.7088)) * std::pow(am, 0.9108));
    const double t_aa = 1.0 - 0.1 * (1.0 - am + std::pow(am, 1.06)) * (1.0 - t_aerosol);
    const double sky_albedo = 0.0685 + (1.0 - k.forward_scatter) * (1.0 - t_aerosol / t_aa);

    const double dni = 0.9662 * etr * t_aerosol * t_water * t_gases * t_ozone * t_rayleigh;
    const double beam_h = dni * cos_z;
    const double scattered = etr * cos_z * 0.79 * t_ozone * t_gases * t_water * t_aa *
                             (0.5 * (1.0 - t_rayleigh) + k.forward_scatter * (1.0 - t_aerosol / t_aa)) /
                             (1.0 - am + std::pow(am, 1.02));
    const double ghi = (beam_h + scattered) / (1.0 - atmo.ground_albedo * sky_albedo);

    ClearSkyIrradiance out;
    out.dni = std::max(0.0, dni);
    out.ghi = std::max(0.0, ghi);
    out.dhi = std::max(0.0, out.ghi - out.dni * cos_z);
    return out;
}

double beam_horizontal(double a0, double b, double sun_altitude_deg) {
    if (!(sun_altitude_deg > 0.0)) return 0.0;
    return a0 * std::exp(-b / std::sin(rad(std::min(sun_altitude_deg, 90.0))));
}

double total_irradiance(double dni, double dhi, double reflected, double incidence_deg, double tilt_deg) {
    const double cos_inc = std::max(0.0, std::cos(rad(incidence_deg)));
    const double cos_tilt = std::cos(rad(tilt_deg));
    return dni * cos_inc + dhi * (1.0 + cos_tilt) / 2.0 + reflected * (1.0 - cos_tilt) / 2.0;
}

std::vector<ClearSkySample> clear_sky_series(const surfrad::StationMeta& site, const AtmosphericParams& atmo,
                                             Timestamp first, Timestamp last, const PressureLookup& pressure) {
    atmo.validate();
    std::vector<ClearSkySample> out;
    if (last < first) return out;
    out.reserve(static_cast<std::size_t>(last.minutes - first.minutes + 1));
    AtmosphericParams local = atmo;
    for (Timestamp t = first; t <= last; t = t.plus_minutes(1)) {
        const SolarPosition pos = solar_position(t, site);
        local.surface_pressure = atmo.surface_pressure;
        if (pressure) {
            if (auto p = pressure(t); p && *p > 0.0) local.surface_pressure = *p;
        }
        out.push_back(ClearSkySample{t, pos.zenith, bird_clear_sky(pos, local)});
    }
    return out;
}

std::string to_csv(const std::vector<ClearSkySample>& samples) {
    std::string out = "timestamp,zenith,dni,dhi,ghi\n";
    for (const auto& s : samples) {
        out += to_iso8601(s.timestamp) + "," + text::format_double(s.zenith) + "," +
               text::format_double(s.irradiance.dni) + "," + text::format_double(s.irradiance.dhi) + "," +
               text::format_double(s.irradiance.ghi) + "\n";
    }
    return out;
}

std::vector<ClearSkySample> from_csv(std::string_view csv) {
    const auto all = text::lines(csv);
    if (all.empty() || all[0] != "timestamp,zenith,dni,dhi,ghi") throw ParseError(1, "unexpected clear-sky CSV header");
    std::vector<ClearSkySample> out;
    out.reserve(all.size() - 1);
    for (std::size_t i = 1; i < all.size(); ++i) {
        const auto f = text::split(all[i], ',');
        if (f.size() != 5) throw ParseError(i + 1, "expected 5 columns");
        ClearSkySample s;
        try {
            s.timestamp = parse_iso8601(f[0]);
        } catch (const DateError& e) {
            throw ParseError(i + 1, e.what());
        }
        auto z = text::parse_double(f[1]), dni = text::parse_double(f[2]), dhi = text::parse_double(f[3]),
             ghi = text::parse_double(f[4]);
        if (!z || !dni || !dhi || !ghi) throw ParseError(i + 1, "non-numeric clear-sky column");
        s.zenith = *z;
        s.irradiance = {*dni, *dhi, *ghi};
        out.push_back(s);
    }
    return out;
}

}  // namespace irradcast::clearsky
