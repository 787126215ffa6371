#ifndef TALOS_COMMS_HPP
#define TALOS_COMMS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "talos/constants.hpp"
#include "talos/frames.hpp"
#include "talos/ode.hpp"
#include "talos/types.hpp"

namespace talos {

// Link-budget parameters for the downlink rate. Toolkit defaults are a
// plausible UHF CubeSat link, not published values.
struct LinkParameters {
    double Gr = 1.0e4;       // receiver gain [-]
    double Gt = 10.0;        // transmitter gain [-]
    double Ll = 0.9;         // line loss factor (0, 1]
    double f = 437.0e6;      // transmission frequency [Hz]
    double Ts = 500.0;       // system noise temperature [K]
    double SNR = 10.0;       // signal-to-noise ratio [-]
    double eta_p = 0.3;      // amplification efficiency (0, 1]
    double P_comm = 5.0;     // transmit power [W]

    void validate() const {
        if (!(Gr > 0 && Gt > 0 && f > 0 && Ts > 0 && SNR > 0 && P_comm > 0))
            throw std::invalid_argument("LinkParameters: all parameters must be > 0");
        if (!(Ll > 0 && Ll <= 1.0))
            throw std::invalid_argument("LinkParameters: Ll must be in (0, 1]");
        if (!(eta_p > 0 && eta_p <= 1.0))
            throw std::invalid_argument("LinkParameters: eta_p must be in (0, 1]");
    }
};

// Spherical-Earth ground station, placed in ECI by the Earth rotation angle.
struct GroundStationGeodetic {
    std::string name;
    double lon_deg = 0.0;
    double lat_deg = 0.0;
    double alt_km = 0.0;
};

// 1 iff the spacecraft is above the station's local horizon plane; ties on
// the plane count as no visibility.
inline int line_of_sight(const Vec3& r_sc_km, const Vec3& r_gs_km) {
    return (r_sc_km - r_gs_km).dot(r_gs_km) > 0.0 ? 1 : 0;
}

// Downlink rate in bit/s for a slant range S (km). The leading factor
// collects the receiver chain, the second the transmitter power over the
// inverse-square spreading; los gates the product.
inline double download_rate(const LinkParameters& link, double S_km, int los,
                            const PhysicalConstants& k) {
    if (!(S_km > 0.0)) throw std::invalid_argument("download_rate: range must be > 0");
    const double S_m = 1000.0 * S_km;
    const double recv = (k.c * k.c * link.Gr * link.Ll) /
                        (16.0 * kPi * kPi * link.f * link.f * k.k_B * link.Ts * link.SNR);
    const double xmit = (link.eta_p * link.P_comm * link.Gt) / (S_m * S_m);
    return recv * xmit * static_cast<double>(los);
}

enum class MaxMode { hard, smooth };

// Maximum over station rates. Hard mode is the exact max (analysis path);
// smooth mode is the KS aggregate, which over-estimates by at most
// ln(n)/rho and stays differentiable (optimization path).
inline double max_rate(const std::vector<double>& rates, MaxMode mode, double rho = 100.0) {
    if (rates.empty()) throw std::invalid_argument("max_rate: empty station list");
    const double m = *std::max_element(rates.begin(), rates.end());
    if (mode == MaxMode::hard) return m;
    if (!(rho > 0.0)) throw std::invalid_argument("max_rate: rho must be > 0 in smooth mode");
    double acc = 0.0;
    for (double r : rates) acc += std::exp(rho * (r - m));
    return m + std::log(acc) / rho;
}

struct LinkSample {
    double t = 0.0;                     // [s]
    std::vector<double> station_rates;  // [bit/s]
    std::vector<int> los;
    double max_rate = 0.0;              // [bit/s]
    double cumulative_bits = 0.0;
};

// Per-grid-point link series for one spacecraft trajectory, with the hard
// max rate integrated by the trapezoid rule into cumulative bits.
inline std::vector<LinkSample> total_data(const Trajectory& traj,
                                          const std::vector<GroundStationGeodetic>& stations,
                                          const LinkParameters& link, const TimeGrid& grid,
                                          const PhysicalConstants& k) {
    if (stations.empty()) throw std::invalid_argument("total_data: empty station list");
    if (!(traj.grid == grid) || traj.states.rows() != grid.n + 1)
        throw std::invalid_argument("total_data: grid/trajectory mismatch");
    link.validate();

    std::vector<LinkSample> out(grid.n + 1);
    for (std::int64_t i = 0; i <= grid.n; ++i) {
        LinkSample& sample = out[i];
        sample.t = grid.time(i);
        const Vec3 r_sc = traj.states.row(i).head<3>();
        sample.station_rates.resize(stations.size());
        sample.los.resize(stations.size());
        for (std::size_t g = 0; g < stations.size(); ++g) {
            const Vec3 r_gs =
                geodetic_to_eci(stations[g].lon_deg, stations[g].lat_deg, stations[g].alt_km,
                                sample.t, k);
            const int visible = line_of_sight(r_sc, r_gs);
            sample.los[g] = visible;
            sample.station_rates[g] = download_rate(link, (r_sc - r_gs).norm(), visible, k);
        }
        sample.max_rate = max_rate(sample.station_rates, MaxMode::hard);
        sample.cumulative_bits =
            i == 0 ? 0.0
                   : out[i - 1].cumulative_bits +
                         0.5 * (out[i - 1].max_rate + sample.max_rate) * grid.dt;
    }
    return out;
}

} // namespace talos

#endif // TALOS_COMMS_HPP
