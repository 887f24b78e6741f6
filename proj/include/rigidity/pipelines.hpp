#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rigidity/circle_conjugacy.hpp"
#include "rigidity/circle_map.hpp"
#include "rigidity/circle_periodic.hpp"
#include "rigidity/config.hpp"
#include "rigidity/report.hpp"
#include "rigidity/toral_conjugacy.hpp"
#include "rigidity/toral_map.hpp"
#include "rigidity/toral_periodic.hpp"
#include "rigidity/transfer_operator.hpp"
#include "rigidity/unstable_entropy.hpp"

namespace rigidity {

struct PipelineSelection {
    bool periodic = false;
    bool density = false;
    bool conjugacy = false;
    bool entropy = false;
};

struct RunOptions {
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = 42;
    int threads = 1;
};

namespace detail {

inline void declare_circle_keys(Verdict& v, int degree) {
    for (const char* key :
         {"MAP", "DEGREE", "PERIODIC_ORBITS", "CONSTANT_DATA", "CONSTANT_DATA_SPREAD",
          "LOG_D_MATCH", "REGULARITY_ALPHA", "REGULARITY_R2", "DISTORTION_C", "BILIPSCHITZ",
          "DENSITY_RESIDUAL", "DENSITY_ITERATIONS", "ACIM_EXPONENT", "ACIM_PERIODIC_GAP"})
        v.declare(key);
    v.set("MAP", "circle");
    v.set_int("DEGREE", degree);
}

inline void declare_toral_keys(Verdict& v, int d, int ns, int nu) {
    v.declare("MAP");
    v.declare("DIM");
    v.declare("PERIODIC_ORBITS");
    v.declare("CONSTANT_DATA");
    v.declare("CONSTANT_DATA_SPREAD");
    for (int i = 1; i <= ns; ++i) v.declare("LINEAR_MATCH_S" + std::to_string(i));
    for (int i = 1; i <= nu; ++i) v.declare("LINEAR_MATCH_U" + std::to_string(i));
    v.declare("CONSERVATIVE");
    v.declare("CONSERVATIVE_INDICATOR");
    for (const char* key : {"FRANKS_RESIDUAL", "FRANKS_SWEEPS", "REGULARITY_ALPHA_STABLE",
                            "REGULARITY_ALPHA_UNSTABLE", "ENTROPY_H_TOP_LINEAR", "ENTROPY_SRB_SUM",
                            "ENTROPY_RUELLE_GAP"})
        v.declare(key);
    for (int i = 1; i <= nu; ++i) v.declare("ENTROPY_CHI_" + std::to_string(i));
    if (nu == 1) v.declare("ENTROPY_CHI_SEGMENT");
    v.declare("ENTROPY_PROFILE_FINAL");
    v.set("MAP", "toral");
    v.set_int("DIM", d);
}

[[nodiscard]] inline std::vector<int> profile_horizons(const ExperimentConfig& cfg) {
    if (!cfg.has("entropy", "profile_horizons")) return {10, 20, 40, 80, 160};
    std::vector<int> out;
    for (double h : parse_numbers(cfg.get("entropy", "profile_horizons"),
                                  "entropy.profile_horizons")) {
        if (h != std::floor(h) || h < 1 || h > 1000000)
            throw ConfigError("entropy.profile_horizons entries must be positive integers");
        out.push_back(static_cast<int>(h));
    }
    return out;
}

} // namespace detail

/// Periodic-data, symbolic-conjugacy, and transfer-operator pipelines for one
/// circle map. Results land in `v`; tables go to CSV files under out_dir.
template <CircleMapModel M>
void run_circle_pipelines(const M& m, const ExperimentConfig& cfg, const PipelineSelection& sel,
                          const RunOptions& opt, Verdict& v) {
    std::optional<ConstantDataStat> stat;
    if (sel.periodic) {
        const int max_period = static_cast<int>(cfg.get_int("periodic", "max_period", 8, 1, 24));
        const long budget = cfg.get_int("periodic", "budget", default_circle_budget, 8, 1L << 34);
        const double tol_cd = cfg.get_real("periodic", "tol_constant", 1e-6, 0.0, 1.0);
        CsvWriter csv(opt.out_dir / "circle_periodic.csv",
                      {"period", "point", "multiplier", "exponent"});
        std::vector<PeriodicOrbit> pooled;
        for (int n = 1; n <= max_period; ++n) {
            const auto orbits = periodic_points(m, n, budget);
            for (const PeriodicOrbit& o : orbits)
                csv.row({fmt_int(o.period), fmt_real(o.point), fmt_real(o.multiplier),
                         fmt_real(o.exponent)});
            pooled.insert(pooled.end(), orbits.begin(), orbits.end());
        }
        stat = constant_data_statistic(pooled, m.degree(), tol_cd);
        v.set_int("PERIODIC_ORBITS", static_cast<long>(pooled.size()));
        v.set_flag("CONSTANT_DATA", stat->constant);
        v.set_real("CONSTANT_DATA_SPREAD", stat->spread);
        v.set_real("LOG_D_MATCH", stat->log_d_gap);
    }
    if (sel.conjugacy) {
        const int level = static_cast<int>(cfg.get_int("conjugacy", "level", 10, 6, 18));
        const long budget = cfg.get_int("conjugacy", "budget", default_circle_budget, 8, 1L << 34);
        const int dist_n = static_cast<int>(cfg.get_int("conjugacy", "distortion_n", 10, 2, 16));
        const ConjugacyApprox h = symbolic_conjugacy(m, level, budget);
        CsvWriter csv(opt.out_dir / "circle_conjugacy.csv", {"j", "t", "h"});
        const double step = 1.0 / static_cast<double>(h.intervals());
        for (long j = 0; j <= h.intervals(); ++j)
            csv.row({fmt_int(j), fmt_real(static_cast<double>(j) * step),
                     fmt_real(h.samples[static_cast<std::size_t>(j)])});
        const RegularityFit fit = holder_exponent(h);
        const double C = empirical_distortion(m, dist_n, budget);
        v.set_real("REGULARITY_ALPHA", fit.alpha);
        v.set_real("REGULARITY_R2", fit.r2);
        v.set_real("DISTORTION_C", C);
        v.set_flag("BILIPSCHITZ", bilipschitz_certificate(h, C));
    }
    if (sel.density) {
        const int bins = static_cast<int>(cfg.get_int("density", "bins", 1024, 16, 1L << 20));
        const int iters = static_cast<int>(cfg.get_int("density", "iters", 2000, 1, 1000000));
        const double rtol = cfg.get_real("density", "residual_tol", 1e-8, 0.0, 1.0);
        const DensityApprox dens = invariant_density(m, bins, iters, rtol, opt.threads, opt.seed);
        CsvWriter csv(opt.out_dir / "density.csv", {"bin", "center", "weight"});
        for (int b = 0; b < dens.bins; ++b)
            csv.row({fmt_int(b), fmt_real((b + 0.5) / static_cast<double>(dens.bins)),
                     fmt_real(dens.weights[static_cast<std::size_t>(b)])});
        const double chi = acim_exponent(m, dens);
        v.set_real("DENSITY_RESIDUAL", dens.residual);
        v.set_int("DENSITY_ITERATIONS", dens.iterations);
        v.set_real("ACIM_EXPONENT", chi);
        if (stat) v.set_real("ACIM_PERIODIC_GAP", std::abs(chi - stat->mean));
    }
}

/// Periodic-data, Franks-conjugacy, and unstable-entropy pipelines for one
/// toral map. When periodic data is available its pooled unstable mean is the
/// target of the convergence profile; otherwise the linear entropy is used.
template <ToralMapModel M>
void run_toral_pipelines(const M& f, const ExperimentConfig& cfg, const PipelineSelection& sel,
                         const RunOptions& opt, Verdict& v) {
    const IntAutomorphism& A = f.linear();
    const int d = f.dim();
    const int ns = A.stable_count();
    const int nu = A.unstable_count();
    std::optional<double> periodic_target;
    if (sel.periodic) {
        const int max_period = static_cast<int>(cfg.get_int("periodic", "max_period", 4, 1, 12));
        const long long budget = cfg.get_int("periodic", "budget", default_toral_budget, 1,
                                             100000000L);
        const double tol_cd = cfg.get_real("periodic", "tol_constant", 1e-6, 0.0, 1.0);
        const double tol_cons = cfg.get_real("periodic", "tol_conservative", 1e-8, 0.0, 1.0);
        std::vector<std::string> header{"period"};
        for (int c = 0; c < d; ++c) header.push_back("x" + std::to_string(c));
        for (int c = 1; c <= d; ++c) header.push_back("chi" + std::to_string(c));
        header.emplace_back("jac_log");
        CsvWriter csv(opt.out_dir / "toral_periodic.csv", header);
        std::vector<ToralPeriodicOrbit> pooled;
        for (int n = 1; n <= max_period; ++n) {
            const auto orbits = periodic_orbits(f, n, budget, opt.threads);
            for (const ToralPeriodicOrbit& o : orbits) {
                std::vector<std::string> row{fmt_int(o.period)};
                for (int c = 0; c < d; ++c) row.push_back(fmt_real(o.point[c]));
                for (double chi : o.exponents) row.push_back(fmt_real(chi));
                row.push_back(fmt_real(o.jac_log));
                csv.row(row);
            }
            pooled.insert(pooled.end(), orbits.begin(), orbits.end());
        }
        double worst_spread = 0.0;
        double unstable_mean_sum = 0.0;
        for (int i = 1; i <= ns; ++i) {
            const IndexSpread s = per_index_spread(A, pooled, i, Side::stable);
            worst_spread = std::max(worst_spread, s.spread);
            v.set_real("LINEAR_MATCH_S" + std::to_string(i), s.gap_to_linear);
        }
        for (int i = 1; i <= nu; ++i) {
            const IndexSpread s = per_index_spread(A, pooled, i, Side::unstable);
            worst_spread = std::max(worst_spread, s.spread);
            unstable_mean_sum += s.mean;
            v.set_real("LINEAR_MATCH_U" + std::to_string(i), s.gap_to_linear);
        }
        const double cons = conservativity_indicator(pooled);
        v.set_int("PERIODIC_ORBITS", static_cast<long>(pooled.size()));
        v.set_flag("CONSTANT_DATA", worst_spread < tol_cd);
        v.set_real("CONSTANT_DATA_SPREAD", worst_spread);
        v.set_flag("CONSERVATIVE", cons < tol_cons);
        v.set_real("CONSERVATIVE_INDICATOR", cons);
        periodic_target = unstable_mean_sum;
    }
    if (sel.conjugacy) {
        const int grid = static_cast<int>(cfg.get_int("conjugacy", "grid", 128, 4, 4096));
        const int iters = static_cast<int>(cfg.get_int("conjugacy", "iters", 200, 1, 100000));
        const double solve_tol = cfg.get_real("conjugacy", "solve_tol", 1e-10, 0.0, 1.0);
        const int res_grid = static_cast<int>(
            cfg.get_int("conjugacy", "residual_grid", grid + grid / 2, 4, 1L << 14));
        const int samples = static_cast<int>(
            cfg.get_int("conjugacy", "holder_samples", 4096, 64, 1L << 20));
        const FranksResult res = franks_solve(f, grid, iters, solve_tol, opt.threads);
        const double resid = conjugacy_residual(f, res.u, res_grid, opt.threads);
        const HolderReport hol = toral_holder_estimate(res.u, A, samples);
        std::vector<std::string> header{"idx"};
        for (int c = 0; c < d; ++c) header.push_back("g" + std::to_string(c));
        for (int c = 0; c < d; ++c) header.push_back("u" + std::to_string(c));
        CsvWriter csv(opt.out_dir / "franks_u.csv", header);
        for (long idx = 0; idx < static_cast<long>(res.u.points()); ++idx) {
            std::vector<std::string> row{fmt_int(idx)};
            long rem = idx;
            for (int c = 0; c < d; ++c) {
                row.push_back(fmt_int(rem % grid));
                rem /= grid;
            }
            for (int c = 0; c < d; ++c) row.push_back(fmt_real(res.u.at(idx, c)));
            csv.row(row);
        }
        CsvWriter hcsv(opt.out_dir / "holder.csv", {"direction", "alpha", "r2"});
        for (std::size_t i = 0; i < hol.per_direction.size(); ++i)
            hcsv.row({fmt_int(static_cast<long>(i) + 1), fmt_real(hol.per_direction[i].alpha),
                      fmt_real(hol.per_direction[i].r2)});
        v.set_real("FRANKS_RESIDUAL", resid);
        v.set_int("FRANKS_SWEEPS", res.sweeps);
        v.set_real("REGULARITY_ALPHA_STABLE", hol.alpha_stable);
        v.set_real("REGULARITY_ALPHA_UNSTABLE", hol.alpha_unstable);
    }
    if (sel.entropy) {
        const int seeds = static_cast<int>(cfg.get_int("entropy", "seeds", 1000, 1, 1000000));
        const int horizon = static_cast<int>(cfg.get_int("entropy", "horizon", 1000, 1, 1000000));
        const int transient = static_cast<int>(cfg.get_int("entropy", "transient", 100, 0,
                                                           1000000));
        const int grid = static_cast<int>(cfg.get_int("entropy", "profile_grid", 16, 2, 256));
        const int settle = static_cast<int>(cfg.get_int("entropy", "settle", 40, 1, 10000));
        const std::vector<int> horizons = detail::profile_horizons(cfg);
        const EntropyReport rep = entropy_report(f, seeds, horizon, transient, opt.seed,
                                                 opt.threads);
        CsvWriter csv(opt.out_dir / "entropy_growth.csv", {"kind", "index", "n", "g", "chi"});
        for (const GrowthEstimate& est : rep.chi_estimates) {
            const std::string kind = est.scale > 0.0 ? "segment" : "cocycle";
            double sum = 0.0;
            for (std::size_t n = 0; n < est.steps.size(); ++n) {
                sum += est.steps[n];
                csv.row({kind, fmt_int(est.index), fmt_int(static_cast<long>(n) + 1),
                         fmt_real(est.steps[n]), fmt_real(sum / static_cast<double>(n + 1))});
            }
            if (est.scale > 0.0)
                v.set_real("ENTROPY_CHI_SEGMENT", est.chi);
            else
                v.set_real("ENTROPY_CHI_" + std::to_string(est.index), est.chi);
        }
        const double target = periodic_target.value_or(rep.h_top_linear);
        const auto profile =
            uniform_convergence_profile(f, nu, horizons, grid, target, settle, opt.threads);
        CsvWriter pcsv(opt.out_dir / "profile.csv", {"horizon", "sup_deviation"});
        for (const ProfileRow& row : profile)
            pcsv.row({fmt_int(row.horizon), fmt_real(row.sup_deviation)});
        v.set_real("ENTROPY_H_TOP_LINEAR", rep.h_top_linear);
        v.set_real("ENTROPY_SRB_SUM", rep.srb_exponent_sum);
        v.set_real("ENTROPY_RUELLE_GAP", rep.ruelle_gap);
        v.set_real("ENTROPY_PROFILE_FINAL", profile.back().sup_deviation);
    }
}

/// Runs the selected pipelines for the configured map, writes verdict.txt
/// plus per-pipeline CSVs under out_dir, and returns the verdict.
inline Verdict run_experiment(const ExperimentConfig& cfg, const PipelineSelection& sel,
                              const RunOptions& opt) {
    if (opt.threads < 1 || opt.threads > 256) throw ConfigError("--threads must be in [1, 256]");
    std::filesystem::create_directories(opt.out_dir);
    Verdict v;
    if (map_kind(cfg) == MapKind::circle) {
        if (sel.entropy) throw ConfigError("the entropy pipeline needs a toral map");
        with_circle_map(cfg, [&](const auto& m) {
            detail::declare_circle_keys(v, m.degree());
            run_circle_pipelines(m, cfg, sel, opt, v);
            return 0;
        });
    } else {
        if (sel.density) throw ConfigError("the density pipeline needs a circle map");
        with_toral_map(cfg, [&](const auto& f) {
            detail::declare_toral_keys(v, f.dim(), f.linear().stable_count(),
                                       f.linear().unstable_count());
            run_toral_pipelines(f, cfg, sel, opt, v);
            return 0;
        });
    }
    write_text_file(opt.out_dir / "verdict.txt", v.render());
    return v;
}

} // namespace rigidity
