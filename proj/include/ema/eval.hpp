#pragma once

#include "ema/animate.hpp"
#include "ema/rig.hpp"
#include "ema/trackio.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ema {

// Sample Pearson coefficient; nullopt when either series is constant.
// Throws ValidationError on length mismatch or fewer than 2 samples.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Nearest bind-mesh vertex to each coil's bind position, lowest index on ties.
std::vector<std::size_t> select_tracking_vertices(const Rig& rig, const std::vector<std::string>& coils);

struct CoilVertexPair {
    std::string coil;
    std::size_t vertex = 0;
};

struct CorrelationEntry {
    std::string coil;
    std::size_t vertex = 0;
    char axis = 'x';
    std::optional<double> r;  // nullopt = undefined (constant series)
};

struct CorrelationReport {
    std::vector<CorrelationEntry> entries;
    double mean_r = 0.0;           // mean over defined entries
    std::size_t defined_count = 0;

    std::vector<const CorrelationEntry*> undefined() const;
};

CorrelationReport trajectory_correlation(const MeshSequence& seq, const CoilTrajectorySet& set,
                                         const std::vector<CoilVertexPair>& pairs);

std::string write_report(const CorrelationReport& report);

}  // namespace ema
