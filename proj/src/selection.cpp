#include "xlmimo/selection.hpp"

#include <algorithm>

namespace xlmimo {

bool ServingMap::serves(int l, int k) const {
    const auto& m = serving.at(k);
    return std::binary_search(m.begin(), m.end(), l);
}

ServingMap strongest_ue_selection(const ChannelStatistics& stats, const PilotAssignment& assignment) {
    check_assignment(assignment, stats.num_ues());
    const int L = stats.num_subarrays();
    const auto groups = assignment.groups();
    ServingMap map;
    map.serving.assign(stats.num_ues(), {});
    map.server = Eigen::MatrixXi::Constant(L, assignment.tau_p, -1);
    for (int l = 0; l < L; ++l) {
        for (int t = 0; t < assignment.tau_p; ++t) {
            if (groups[t].empty()) continue;
            int best = groups[t].front();
            for (int i : groups[t])
                if (stats.link(i, l).beta > stats.link(best, l).beta) best = i;
            map.server(l, t) = best;
            map.serving[best].push_back(l);
        }
    }
    map.partners = partner_sets(map.serving);
    return map;
}

std::vector<std::vector<int>> partner_sets(const std::vector<std::vector<int>>& serving) {
    const int K = static_cast<int>(serving.size());
    std::vector<std::vector<int>> partners(K);
    for (int k = 0; k < K; ++k) {
        for (int i = 0; i < K; ++i) {
            const auto& a = serving[k];
            const auto& b = serving[i];
            auto x = a.begin();
            auto y = b.begin();
            bool overlap = false;
            while (x != a.end() && y != b.end()) {
                if (*x == *y) {
                    overlap = true;
                    break;
                }
                if (*x < *y) ++x; else ++y;
            }
            if (overlap) partners[k].push_back(i);
        }
    }
    return partners;
}

} // namespace xlmimo
