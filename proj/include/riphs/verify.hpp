#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "riphs/model.hpp"

namespace riphs {

// Hook for models with guarded domains: mutate a raw sample (drawn on the
// sphere of the given radius) into an admissible one before evaluation.
using SampleAdjust = std::function<void(std::mt19937_64&, double radius, Vec&)>;

// Sampled estimate of the exergy growth constant: the smallest c with
//   |g(x, H_x)^T E_x(x)|_1^p <= c (E(x) + D)
// over the probed region, using the 1-norm because it is dual to the
// sup-norm in which controls are bounded. D is the shift that makes the
// denominator positive: max(0, -min sampled E) + 1.
//
// stable reports whether the per-tier maximum ratio settles: the top three
// radius tiers must agree within 20 percent. A bound whose ratio still
// climbs with radius is not usable as a global growth certificate.
struct GrowthEstimate {
    double c_hat = 0.0;
    double shift = 0.0;
    double p = 1.0;
    bool stable = false;
    std::vector<std::string> failures;
};

namespace detail {

inline Vec sphere_sample(std::mt19937_64& rng, int n, double radius) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec d(n);
    double norm = 0.0;
    do {
        for (int i = 0; i < n; ++i) {
            d(i) = gauss(rng);
        }
        norm = d.norm();
    } while (norm < 1e-12);
    return (radius / norm) * d;
}

} // namespace detail

inline GrowthEstimate estimate_growth_constant(const ModelSpec& model, double p,
                                               std::vector<double> radii,
                                               int samples_per_radius, unsigned seed,
                                               const SampleAdjust& adjust = {}) {
    validate_model(model);
    if (!(p > 0.0)) {
        throw InvalidParams("estimate_growth_constant: exponent p must be positive");
    }
    if (radii.size() < 3) {
        throw InvalidParams("estimate_growth_constant: need at least three radius tiers");
    }
    if (samples_per_radius < 1) {
        throw InvalidParams("estimate_growth_constant: need at least one sample per radius");
    }
    std::sort(radii.begin(), radii.end());
    if (!(radii.front() > 0.0)) {
        throw InvalidParams("estimate_growth_constant: radii must be positive");
    }

    struct Sample {
        double e;
        double port_norm; // |g^T E_x|_1
        int tier;
    };
    std::vector<Sample> samples;
    samples.reserve(radii.size() * static_cast<size_t>(samples_per_radius));

    GrowthEstimate est;
    est.p = p;
    double e_min = std::numeric_limits<double>::infinity();

    for (size_t ir = 0; ir < radii.size(); ++ir) {
        for (int is = 0; is < samples_per_radius; ++is) {
            // Per-sample generator: estimates with a larger sample count see
            // the smaller run's draws as a prefix, so c_hat is monotone in
            // samples_per_radius.
            std::seed_seq seq{seed, static_cast<unsigned>(ir), static_cast<unsigned>(is)};
            std::mt19937_64 rng(seq);
            Vec x;
            bool admissible = false;
            for (int attempt = 0; attempt < 100 && !admissible; ++attempt) {
                x = detail::sphere_sample(rng, model.n, radii[ir]);
                if (adjust) {
                    adjust(rng, radii[ir], x);
                }
                admissible = model.admissible(x);
            }
            if (!admissible) {
                est.failures.push_back("no admissible sample at radius " +
                                       std::to_string(radii[ir]));
                continue;
            }
            try {
                const double e = exergy(model, x);
                const Vec e_x = exergy_grad(model, x);
                const Mat g = model.input_map(x, model.hamiltonian_grad(x));
                const double port_norm = (g.transpose() * e_x).cwiseAbs().sum();
                samples.push_back({e, port_norm, static_cast<int>(ir)});
                e_min = std::min(e_min, e);
            } catch (const Error& err) {
                est.failures.push_back(std::string("evaluation failed at radius ") +
                                       std::to_string(radii[ir]) + ": " + err.what());
            }
        }
    }
    if (samples.empty()) {
        throw Infeasible("estimate_growth_constant: no admissible samples");
    }

    est.shift = std::max(0.0, -e_min) + 1.0;
    std::vector<double> tier_max(radii.size(), 0.0);
    for (const Sample& s : samples) {
        const double ratio = std::pow(s.port_norm, p) / (s.e + est.shift);
        est.c_hat = std::max(est.c_hat, ratio);
        tier_max[static_cast<size_t>(s.tier)] = std::max(tier_max[static_cast<size_t>(s.tier)], ratio);
    }

    const size_t nt = radii.size();
    const double t1 = tier_max[nt - 3], t2 = tier_max[nt - 2], t3 = tier_max[nt - 1];
    const double lo = std::min({t1, t2, t3});
    const double hi = std::max({t1, t2, t3});
    est.stable = lo > 0.0 && (hi - lo) <= 0.2 * lo;
    if (!est.stable) {
        est.failures.push_back("top-tier ratios not settled: " + std::to_string(t1) + ", " +
                               std::to_string(t2) + ", " + std::to_string(t3));
    }
    return est;
}

// Direction mutation for radial probes (applied once per direction, before
// scaling by the radii).
using DirectionAdjust = std::function<void(std::mt19937_64&, Vec&)>;

// Coercivity probe: along sampled unit directions, the exergy must be
// strictly increasing over the top half of the radius schedule and must grow
// by at least a factor of 10 from the smallest to the largest radius.
struct RadialProbeReport {
    bool passed = false;
    std::vector<std::string> failures;
};

inline RadialProbeReport radial_probe(const ModelSpec& model, int n_directions,
                                      std::vector<double> radii, unsigned seed,
                                      const DirectionAdjust& adjust = {}) {
    validate_model(model);
    if (n_directions < 1) {
        throw InvalidParams("radial_probe: need at least one direction");
    }
    if (radii.size() < 2) {
        throw InvalidParams("radial_probe: need at least two radii");
    }
    std::sort(radii.begin(), radii.end());
    if (!(radii.front() > 0.0)) {
        throw InvalidParams("radial_probe: radii must be positive");
    }

    RadialProbeReport report;
    report.passed = true;
    const int nr = static_cast<int>(radii.size());

    for (int id = 0; id < n_directions; ++id) {
        std::seed_seq seq{seed, static_cast<unsigned>(id), 0xadu};
        std::mt19937_64 rng(seq);
        Vec d = detail::sphere_sample(rng, model.n, 1.0);
        if (adjust) {
            adjust(rng, d);
            const double norm = d.norm();
            if (norm < 1e-12) {
                report.failures.push_back("direction " + std::to_string(id) +
                                          " degenerated after adjustment");
                report.passed = false;
                continue;
            }
            d /= norm;
        }

        std::vector<double> e_vals(static_cast<size_t>(nr));
        bool ok = true;
        for (int ir = 0; ir < nr && ok; ++ir) {
            try {
                e_vals[static_cast<size_t>(ir)] = exergy(model, Vec(radii[static_cast<size_t>(ir)] * d));
            } catch (const Error& err) {
                report.failures.push_back("direction " + std::to_string(id) + " radius " +
                                          std::to_string(radii[static_cast<size_t>(ir)]) + ": " +
                                          err.what());
                ok = false;
            }
        }
        if (!ok) {
            report.passed = false;
            continue;
        }

        for (int ir = nr / 2; ir + 1 < nr; ++ir) {
            if (!(e_vals[static_cast<size_t>(ir + 1)] > e_vals[static_cast<size_t>(ir)])) {
                report.failures.push_back("direction " + std::to_string(id) +
                                          ": E not strictly increasing between radii " +
                                          std::to_string(radii[static_cast<size_t>(ir)]) + " and " +
                                          std::to_string(radii[static_cast<size_t>(ir + 1)]));
                report.passed = false;
                break;
            }
        }
        const double e_first = e_vals.front();
        const double e_last = e_vals.back();
        if (!(e_first > 0.0) || e_last < 10.0 * e_first) {
            report.failures.push_back("direction " + std::to_string(id) +
                                      ": insufficient radial growth (E(min)=" +
                                      std::to_string(e_first) + ", E(max)=" +
                                      std::to_string(e_last) + ")");
            report.passed = false;
        }
    }
    return report;
}

// Standard adjusters for the gas-piston domain: the volume component must
// stay positive, so samples take a log-uniform positive volume and probe
// directions keep a floor on it.
inline SampleAdjust gas_piston_sample_adjust() {
    return [](std::mt19937_64& rng, double radius, Vec& x) {
        std::uniform_real_distribution<double> log_unif(std::log(1e-2),
                                                        std::log(std::max(radius, 2e-2)));
        x(1) = std::exp(log_unif(rng));
    };
}

inline DirectionAdjust gas_piston_direction_adjust(double floor = 0.05) {
    return [floor](std::mt19937_64&, Vec& d) {
        d(1) = std::max(std::abs(d(1)), floor);
    };
}

} // namespace riphs
