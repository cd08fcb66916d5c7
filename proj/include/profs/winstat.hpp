#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// Hierarchical pairwise scoring and the Finkelstein-Schoenfeld statistic.
//
// A subject carries one (time, censored) observation per endpoint layer,
// layer 0 being the highest priority (typically death, then hospitalization).
// Pairs are compared layer by layer: the first layer with a determinate
// outcome decides the score, otherwise the pair is a tie.

namespace profs {

struct LayerObservation {
    double time = 0.0;   // days, >= 0 and finite
    bool censored = false;
};

struct SubjectRecord {
    int arm = 0;                               // 1 = treatment, 0 = control
    std::optional<std::string> stratum;
    std::vector<LayerObservation> layers;      // one per layer, priority order
};

// Immutable two-arm dataset. Construction validates the invariants:
// nonnegative finite times, consistent layer counts, both arms nonempty.
class TrialDataset {
public:
    TrialDataset(std::vector<SubjectRecord> subjects, int layer_count);

    const std::vector<SubjectRecord>& subjects() const { return subjects_; }
    int layer_count() const { return layer_count_; }
    int n() const { return static_cast<int>(subjects_.size()); }
    int treated_count() const { return treated_; }
    bool all_have_stratum() const { return all_have_stratum_; }

private:
    std::vector<SubjectRecord> subjects_;
    int layer_count_;
    int treated_ = 0;
    bool all_have_stratum_ = true;
};

struct ScoreTable {
    std::vector<std::int64_t> scores;   // U_i, one per subject
    std::int64_t pair_count = 0;        // informative (nonzero) unordered pairs
};

struct StratumResult {
    std::string label;
    double z = 0.0;
    double variance = 0.0;
    int n = 0;
    int treated = 0;
};

struct FsResult {
    double z = 0.0;
    double variance = 0.0;
    double r = 0.0;          // z / sqrt(variance); 0 when degenerate
    bool degenerate = false; // variance == 0
    ScoreTable score_table;
    std::optional<std::vector<StratumResult>> per_stratum;
};

// Score of a against b with both records administratively censored at
// `horizon`: +1 if a outlasts b on the first determinate layer, -1 if b
// outlasts a, 0 if every layer is indeterminate. a wins a layer exactly
// when b has an observed event strictly before the horizon and a's
// observed time strictly exceeds it.
int pairwise_score(const SubjectRecord& a, const SubjectRecord& b, double horizon);

// Z = sum_i U_i T_i with Var(Z) = M(N-M)/(N(N-1)) * sum_i U_i^2.
FsResult fs_statistic(const TrialDataset& data, double horizon, int n_threads = 1);

// Same statistic with comparisons restricted to within-stratum pairs; Z and
// Var(Z) are sums of the per-stratum contributions.
FsResult fs_statistic_stratified(const TrialDataset& data, double horizon,
                                 int n_threads = 1);

namespace detail {

// Scores for several horizons in one pass over the pairs.
//
// u is row-major N x p (subject-major); informative_pairs counts unordered
// pairs with a nonzero score, per horizon. When `strata` is non-null it maps
// each subject to a stratum id and only within-stratum pairs are compared.
// Row-partitioned across threads; integer accumulation makes the result
// independent of the partitioning.
struct MultiScore {
    std::vector<std::int64_t> u;
    std::vector<std::int64_t> informative_pairs;
    int n_horizons = 0;
};

MultiScore hierarchical_scores(const TrialDataset& data,
                               const std::vector<double>& horizons,
                               const std::vector<int>* strata, int n_threads);

// Groups subjects by stratum label; throws if any subject lacks one.
// Returned ids are contiguous, ordered by first appearance.
std::vector<int> stratum_ids(const TrialDataset& data,
                             std::vector<std::string>* labels);

}  // namespace detail

}  // namespace profs
