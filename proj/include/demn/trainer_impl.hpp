#pragma once

#include "demn/error.hpp"
#include "demn/rng.hpp"

namespace demn {

template <typename Story>
std::pair<std::vector<Story>, std::vector<Story>> split_holdout(const std::vector<Story>& stories,
                                                                std::uint64_t seed) {
    if (stories.size() < 10)
        throw Error(ErrorKind::too_few_stories,
                    "holdout split needs at least 10 stories, got " + std::to_string(stories.size()));
    std::vector<std::size_t> order(stories.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order.begin(), order.end());
    const std::size_t dev_n = stories.size() / 10;
    std::pair<std::vector<Story>, std::vector<Story>> out;
    for (std::size_t i = 0; i < order.size(); ++i) (i < dev_n ? out.second : out.first).push_back(stories[order[i]]);
    return out;
}

}  // namespace demn
