#include "doctest.h"

#include <algorithm>

#include "fixtures.hpp"
#include "xlmimo/selection.hpp"

using namespace xlmimo;
using fixtures::random_statistics;

namespace {

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

} // namespace

TEST_CASE("single UE is served everywhere") {
    Rng rng(1);
    const ChannelStatistics stats = random_statistics(rng, 1, 5, 2);
    const ServingMap map = strongest_ue_selection(stats, PilotAssignment{3, {2}});
    CHECK(map.serving[0] == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(map.partners[0] == std::vector<int>{0});
    for (int l = 0; l < 5; ++l) {
        CHECK(map.server(l, 2) == 0);
        CHECK(map.server(l, 0) == -1);
    }
}

TEST_CASE("dominated UE is left unserved") {
    Rng rng(2);
    ChannelStatistics stats = random_statistics(rng, 2, 3, 2);
    for (int l = 0; l < 3; ++l) {
        stats.link(1, l).covariance = 1e-3 * stats.link(0, l).covariance;
        stats.link(1, l).mean = CVector::Zero(2);
        stats.link(0, l).mean = CVector::Zero(2);
        fixtures::finish_link(stats.link(0, l), 2);
        fixtures::finish_link(stats.link(1, l), 2);
    }
    const ServingMap shared = strongest_ue_selection(stats, PilotAssignment{2, {1, 1}});
    CHECK(shared.serving[0].size() == 3);
    CHECK(shared.serving[1].empty());
    CHECK_FALSE(shared.served(1));
    CHECK(shared.partners[1].empty());
    CHECK(shared.partners[0] == std::vector<int>{0});

    const ServingMap split = strongest_ue_selection(stats, PilotAssignment{2, {0, 1}});
    CHECK(split.serving[1].size() == 3);
    CHECK(split.partners[0] == std::vector<int>{0, 1});
}

TEST_CASE("equal gains go to the lower UE index") {
    Rng rng(3);
    ChannelStatistics stats = random_statistics(rng, 3, 2, 2);
    for (int l = 0; l < 2; ++l) stats.link(2, l) = stats.link(1, l);
    for (int l = 0; l < 2; ++l) stats.link(0, l).beta = 0.0;
    const ServingMap map = strongest_ue_selection(stats, PilotAssignment{1, {0, 0, 0}});
    CHECK(map.serving[1] == std::vector<int>{0, 1});
    CHECK(map.serving[2].empty());
}

TEST_CASE("selection invariants on random drops") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const int K = 2 + int(rng() % 7);
        const int L = 1 + int(rng() % 6);
        const int tau = 1 + int(rng() % 4);
        const ChannelStatistics stats = random_statistics(rng, K, L, 2);
        std::vector<int> pilots(K);
        for (int& t : pilots) t = int(rng() % tau);
        const PilotAssignment a{tau, pilots};
        const ServingMap map = strongest_ue_selection(stats, a);

        std::size_t total = 0;
        for (int k = 0; k < K; ++k) total += map.serving[k].size();
        CHECK(total == std::size_t(L) * a.used_pilots().size());

        for (int l = 0; l < L; ++l)
            for (int t = 0; t < tau; ++t) {
                const auto group = a.group(t);
                int winners = 0;
                for (int i : group) winners += map.serves(l, i);
                CHECK(winners == (group.empty() ? 0 : 1));
                if (!group.empty()) {
                    const int s = map.server(l, t);
                    CHECK(map.serves(l, s));
                    for (int i : group) CHECK(stats.link(i, l).beta <= stats.link(s, l).beta);
                } else {
                    CHECK(map.server(l, t) == -1);
                }
            }

        for (int k = 0; k < K; ++k) {
            CHECK(std::is_sorted(map.serving[k].begin(), map.serving[k].end()));
            CHECK(contains(map.partners[k], k) == map.served(k));
            for (int i : map.partners[k]) {
                CHECK(contains(map.partners[i], k));
                bool overlap = false;
                for (int l : map.serving[k]) overlap = overlap || map.serves(l, i);
                CHECK(overlap);
            }
        }
    }
}

TEST_CASE("partner sets from explicit serving sets") {
    const auto p = partner_sets({{0, 2}, {1}, {2, 3}, {}});
    CHECK(p[0] == std::vector<int>{0, 2});
    CHECK(p[1] == std::vector<int>{1});
    CHECK(p[2] == std::vector<int>{0, 2});
    CHECK(p[3].empty());
}
