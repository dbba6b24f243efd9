#pragma once

#include <vector>

#include "xlmimo/channel.hpp"
#include "xlmimo/estimation.hpp"

namespace xlmimo {

/// Serving SAs per UE and the resulting partner sets. Index sets are ascending.
struct ServingMap {
    std::vector<std::vector<int>> serving;   // M_k
    std::vector<std::vector<int>> partners;  // S_k
    Eigen::MatrixXi server;                  // L x tau_p, UE served by SA l on pilot t, -1 if unused

    int num_ues() const { return static_cast<int>(serving.size()); }
    bool served(int k) const { return !serving.at(k).empty(); }
    bool serves(int l, int k) const;
};

/// Each SA serves, on every pilot in use, the UE of that pilot with the largest
/// large-scale gain; ties go to the lowest UE index.
ServingMap strongest_ue_selection(const ChannelStatistics& stats, const PilotAssignment& assignment);

/// S_k = { i : M_i and M_k intersect }; empty when M_k is empty.
std::vector<std::vector<int>> partner_sets(const std::vector<std::vector<int>>& serving);

} // namespace xlmimo
