#include "profs/detail/rng.hpp"

#include <cmath>

#include "profs/mvn.hpp"

namespace profs::detail {

double CounterRng::next_exponential() {
    // next_uniform() is strictly inside (0,1), so the log is finite
    return -std::log(next_uniform());
}

double CounterRng::next_normal() {
    return mvn::standard_normal_quantile(next_uniform());
}

}  // namespace profs::detail
