#pragma once

#include "octolb/balance.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

namespace octolb {

struct Metrics {
    std::uint64_t l_max = 0;
    double l_avg = 0.0;
    double eta = 1.0;
    double t_lbp = 0.0;         ///< simulated seconds
    double t_step_before = 0.0; ///< windowed mean
    double t_step_after = 0.0;
};

struct LoadStats {
    std::uint64_t l_max = 0;
    double l_avg = 0.0;
    std::vector<std::uint64_t> per_rank;
};

/// l_p = sum of comp weights owned by rank p; empty ranks contribute 0.
inline LoadStats max_load(const RankAssignment& a, const WeightMap& w) {
    LoadStats s;
    s.per_rank.assign(a.p, 0);
    for (const auto& [id, r] : a.owner) {
        if (r >= a.p)
            throw ConsistencyError("max_load: owner rank out of range");
        s.per_rank[r] += w.comp_at(id);
    }
    for (const std::uint64_t l : s.per_rank)
        s.l_max = std::max(s.l_max, l);
    s.l_avg = double(w.total_comp()) / double(a.p);
    return s;
}

/// Ratio of windowed mean step times before and after balancing.
inline double performance_gain(double t_before, double t_after) {
    if (t_before <= 0.0 || t_after <= 0.0)
        throw DomainError("performance_gain: step times must be positive");
    return t_before / t_after;
}

inline double mean(const std::vector<double>& xs) {
    if (xs.empty())
        throw DomainError("mean of an empty window");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
}

/// One experiment outcome; exactly the columns of the CSV contract.
struct ExperimentRecord {
    std::string scenario;
    std::string balancer;
    std::uint32_t p = 1;
    std::uint64_t leaves = 0;
    std::uint64_t l_max_before = 0;
    std::uint64_t l_max_after = 0;
    double l_avg = 0.0;
    double eta = 1.0;
    double t_lbp = 0.0;
    std::uint64_t blocks_moved = 0;
    std::uint64_t msgs = 0;
    std::uint64_t mem_bytes_max_rank = 0;
    std::uint64_t balancer_work_max_rank = 0;
};

inline constexpr const char* kCsvHeader =
    "scenario,balancer,p,leaves,l_max_before,l_max_after,l_avg,eta,t_lbp,"
    "blocks_moved,msgs,mem_bytes_max_rank,balancer_work_max_rank";

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace detail

inline std::string csv_row(const ExperimentRecord& r) {
    std::string s;
    s += r.scenario + ',' + r.balancer + ',' + std::to_string(r.p) + ',' +
         std::to_string(r.leaves) + ',' + std::to_string(r.l_max_before) + ',' +
         std::to_string(r.l_max_after) + ',' + detail::fmt_double(r.l_avg) + ',' +
         detail::fmt_double(r.eta) + ',' + detail::fmt_double(r.t_lbp) + ',' +
         std::to_string(r.blocks_moved) + ',' + std::to_string(r.msgs) + ',' +
         std::to_string(r.mem_bytes_max_rank) + ',' + std::to_string(r.balancer_work_max_rank);
    return s;
}

/// Deterministic (scenario, balancer, p) order, one row per record.
inline std::string render_csv(std::vector<ExperimentRecord> rows) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ExperimentRecord& a, const ExperimentRecord& b) {
                         if (a.scenario != b.scenario)
                             return a.scenario < b.scenario;
                         if (a.balancer != b.balancer)
                             return a.balancer < b.balancer;
                         return a.p < b.p;
                     });
    std::string out = std::string(kCsvHeader) + '\n';
    for (const ExperimentRecord& r : rows)
        out += csv_row(r) + '\n';
    return out;
}

inline void report_csv(const std::vector<ExperimentRecord>& rows, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("report_csv: cannot open \"" + path + "\" for writing");
    os << render_csv(rows);
    if (!os)
        throw IoError("report_csv: write to \"" + path + "\" failed");
}

/// Plot-ready (x, y) series: gain vs p and balancer work vs p, one series
/// per balancer, tab-separated.
inline void write_plot_data(const std::vector<ExperimentRecord>& rows, const std::string& path) {
    std::vector<ExperimentRecord> sorted = rows;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const ExperimentRecord& a, const ExperimentRecord& b) {
                         if (a.balancer != b.balancer)
                             return a.balancer < b.balancer;
                         return a.p < b.p;
                     });
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("write_plot_data: cannot open \"" + path + "\" for writing");
    os << "series\tx\ty\n";
    for (const ExperimentRecord& r : sorted)
        os << r.balancer << ":eta\t" << r.p << '\t' << detail::fmt_double(r.eta) << '\n';
    for (const ExperimentRecord& r : sorted)
        os << r.balancer << ":work\t" << r.p << '\t' << r.balancer_work_max_rank << '\n';
    for (const ExperimentRecord& r : sorted)
        os << r.balancer << ":mem\t" << r.p << '\t' << r.mem_bytes_max_rank << '\n';
}

} // namespace octolb
