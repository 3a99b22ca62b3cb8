#include "acc/prng.hpp"

#include <numeric>
#include <utility>

namespace acc {

std::vector<std::size_t> permute(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{1});
    SplitMix64 rng(seed);
    for (std::size_t i = n; i-- > 1;) {
        auto j = static_cast<std::size_t>(rng.next() % (i + 1));
        std::swap(order[i], order[j]);
    }
    return order;
}

} // namespace acc
