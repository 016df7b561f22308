#include "irradcast/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "irradcast/clearsky.hpp"
#include "irradcast/text.hpp"

namespace irradcast::synthetic {

namespace {

constexpr int kMinutes = 1440;
constexpr int kLead = 90;  // minutes by which humidity anticipates cloud

std::uint64_t day_seed(std::uint64_t seed, int year, int month, int day) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(year), static_cast<std::uint32_t>(month),
                      static_cast<std::uint32_t>(day)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

std::string daily_file(const StationModel& model, int year, int month, int day) {
    std::mt19937_64 rng(day_seed(model.seed, year, month, day));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Cloud fraction path over the day plus the lead window, AR(1) around a daily regime.
    const double regime = unit(rng);
    std::vector<double> cloud(kMinutes + kLead);
    double state = regime;
    for (auto& c : cloud) {
        state += 0.02 * (regime - state) + 0.03 * normal(rng);
        state = std::clamp(state, 0.0, 1.0);
        c = state;
    }

    const Timestamp day0 = make_timestamp(year, month, day);
    const clearsky::AtmosphericParams atmo;
    const double base_pressure = 1013.25 * std::exp(-model.station.elevation / 8434.0);
    const double pressure_offset = 4.0 * (0.5 - regime) + 1.5 * normal(rng);

    std::string out = " " + model.station.name + "\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "%7.2f %7.2f %5.0f m version 1\n", model.station.latitude,
                  model.station.longitude, model.station.elevation);
    out += buf;

    for (int m = 0; m < kMinutes; ++m) {
        const Timestamp t = day0.plus_minutes(m);
        const auto pos = clearsky::solar_position(t, model.station);
        clearsky::AtmosphericParams local = atmo;
        local.surface_pressure = base_pressure;
        const auto cs = clearsky::bird_clear_sky(pos, local);

        const double cl = cloud[static_cast<std::size_t>(m)];
        const double kt = std::clamp(1.0 - 0.75 * cl + 0.02 * normal(rng), 0.05, 1.2);
        const double day_frac = (m / 60.0 + model.station.longitude / 15.0) / 24.0;
        const double diurnal = std::sin(2.0 * 3.14159265358979 * (day_frac - 0.375));

        double ghi = cs.ghi * kt;
        double dni = cs.dni * std::clamp(1.0 - 1.1 * cl, 0.0, 1.0);
        double dif = std::max(0.0, ghi - dni * std::cos(pos.zenith * 3.14159265358979 / 180.0));
        if (pos.zenith >= 90.0) {
            ghi = -2.0 - unit(rng) * 2.5;  // pyranometer thermal offset
            dni = 0.1 * normal(rng);
            dif = -1.0 + 0.2 * normal(rng);
        }
        const double albedo = 0.2;
        const double uw = std::max(0.0, ghi) * albedo + 0.1 * normal(rng);
        const double temp = 15.0 + 8.0 * diurnal - 4.0 * cl + 0.2 * normal(rng);
        const double temp_k = temp + 273.15;
        const double lead_cloud = cloud[static_cast<std::size_t>(m + kLead)];
        const double rh = std::clamp(45.0 + 45.0 * lead_cloud - 10.0 * diurnal + 1.0 * normal(rng), 1.0, 100.0);
        const double dw_ir = 300.0 + 60.0 * cl + 2.0 * temp + normal(rng);
        const double uw_ir = 5.67e-8 * std::pow(temp_k + 2.0, 4) + normal(rng);
        const double uvb = std::max(0.0, ghi) * 0.08 + 0.05 * normal(rng);
        const double par = std::max(0.0, ghi) * 0.45 + 0.3 * normal(rng);
        const double netsolar = ghi - uw;
        const double netir = dw_ir - uw_ir;
        const double wind = std::max(0.0, 2.5 + 3.0 * lead_cloud + 0.8 * normal(rng));
        const double wdir = std::fmod(180.0 + 120.0 * (lead_cloud - 0.5) + 15.0 * normal(rng) + 720.0, 360.0);
        const double pressure = base_pressure + pressure_offset - 3.0 * (lead_cloud - 0.5) + 0.1 * normal(rng);

        const std::array<double, surfrad::kChannelCount> values{
            ghi,  uw,    dni,      dif,    dw_ir,    temp_k + 0.3, temp_k + 0.4, uw_ir, temp_k + 0.2, temp_k + 0.1,
            uvb,  par,   netsolar, netir,  netsolar + netir, temp, rh, wind, wdir, pressure};

        const CivilTime c = to_civil(t);
        std::snprintf(buf, sizeof buf, "%4d %3d %2d %2d %2d %2d %6.3f %6.2f", c.year, day_of_year(t), c.month, c.day,
                      c.hour, c.minute, c.hour + c.minute / 60.0, pos.zenith);
        out += buf;
        for (double v : values) {
            int qc = 0;
            if (model.missing_rate > 0.0 && unit(rng) < model.missing_rate) {
                v = -9999.9;
                qc = 1;
            }
            std::snprintf(buf, sizeof buf, " %7.1f %d", v, qc);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

std::vector<std::string> write_daily_files(const StationModel& model, const std::string& code, Timestamp first,
                                           Timestamp last, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> paths;
    for (Timestamp d{first.minutes - first.minutes % 1440}; d <= last; d = d.plus_hours(24)) {
        const CivilTime c = to_civil(d);
        const auto path = (std::filesystem::path(dir) / surfrad::daily_file_name(code, c.year, day_of_year(d))).string();
        text::write_file(path, daily_file(model, c.year, c.month, c.day));
        paths.push_back(path);
    }
    return paths;
}

}  // namespace irradcast::synthetic
